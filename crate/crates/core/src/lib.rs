//! Ordered-statistic decoding with local constraints (LC-OSD) for binary
//! linear block codes on the BPSK/AWGN channel.
//!
//! The crate is organised bottom-up:
//!
//! * [`gf2`]: packed GF(2) vectors and matrices, elimination, alist I/O.
//! * [`channel`]: BPSK/AWGN frames and the reliability distributions.
//! * [`preprocess`]: the reliability permutation, block elimination and the
//!   per-frame decoding context.
//! * [`slva`] and [`fpt`]: list generators that emit constrained error
//!   patterns over the most reliable positions in soft-weight order.
//! * [`decoder`]: the LC-OSD loop, stopping thresholds and the MLD error
//!   counter.
//! * [`analysis`]: the random-coding predictor for list error rates, rank
//!   statistics and the decoding-time model.
//! * [`sim`]: seeded Monte Carlo drivers shared by the command-line tool and
//!   the acceptance tests.

pub mod analysis;
pub mod channel;
pub mod decoder;
pub mod error;
pub mod fpt;
pub mod gf2;
pub mod numeric;
pub mod preprocess;
pub mod sim;
pub mod slva;

pub use error::{Error, Result};
pub use gf2::{BitMatrix, BitVec, LinearCode, Permutation};

/// A list candidate: an error pattern over the list generator's positions,
/// its soft weight and its 1-based rank in the emission order.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub e: BitVec,
    pub weight: f64,
    pub rank: usize,
}

/// Mix a master seed with a stream label and an index into an independent
/// 64-bit seed (SplitMix64 finalizer applied twice).
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(master ^ mix(stream)) ^ index)
}
