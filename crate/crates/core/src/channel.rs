//! BPSK over AWGN: frames, LLRs, hard decisions and reliability statistics.
//!
//! A bit `c` is sent as `(-1)^c`, the receiver sees `y = x + w` with
//! `w ~ N(0, σ²)`, the LLR is `r = 2y/σ²` and the hard decision is `z = [y < 0]`.
//! The noise level follows the unit-energy convention
//! `σ = (2·R·10^(Eb/N0 / 10))^(-1/2)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::{erf, erfc};
use statrs::function::gamma::ln_gamma;

use crate::gf2::BitVec;
use crate::numeric::bisect;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Noise standard deviation for a given `Eb/N0` in dB and code rate.
pub fn sigma_from_ebn0(ebn0_db: f64, rate: f64) -> f64 {
    assert!(rate > 0.0, "code rate must be positive");
    (2.0 * rate * 10f64.powf(ebn0_db / 10.0)).powf(-0.5)
}

/// One transmission over the channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelFrame {
    pub codeword: BitVec,
    pub y: Vec<f64>,
    pub r: Vec<f64>,
    pub z: BitVec,
    pub sigma: f64,
}

impl ChannelFrame {
    /// Derive LLRs and hard decisions from a given observation.
    pub fn from_observation(codeword: BitVec, y: Vec<f64>, sigma: f64) -> Self {
        assert_eq!(codeword.len(), y.len(), "codeword and observation lengths differ");
        let s2 = sigma * sigma;
        let r: Vec<f64> = y.iter().map(|&v| 2.0 * v / s2).collect();
        let z = y.iter().map(|&v| v < 0.0).collect();
        ChannelFrame { codeword, y, r, z, sigma }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn r_abs(&self) -> Vec<f64> {
        self.r.iter().map(|v| v.abs()).collect()
    }

    /// The true error pattern `z + c`.
    pub fn true_error(&self) -> BitVec {
        self.z.xor(&self.codeword)
    }
}

/// Send `c` through the channel with noise drawn from ChaCha8 seeded by `seed`.
pub fn transmit(c: &BitVec, sigma: f64, seed: u64) -> ChannelFrame {
    transmit_with(c, sigma, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Send `c` through the channel using the caller's generator.
pub fn transmit_with(c: &BitVec, sigma: f64, rng: &mut impl Rng) -> ChannelFrame {
    let y = (0..c.len())
        .map(|i| {
            let x = if c.get(i) { -1.0 } else { 1.0 };
            let w: f64 = rng.sample(StandardNormal);
            x + sigma * w
        })
        .collect();
    ChannelFrame::from_observation(c.clone(), y, sigma)
}

/// Density of `|r|` for a uniformly random transmitted bit.
pub fn reliability_pdf(r_abs: f64, sigma: f64) -> f64 {
    if r_abs < 0.0 {
        return 0.0;
    }
    let s2 = sigma * sigma;
    let d = 8.0 * s2;
    sigma / (2.0 * SQRT_2PI) * ((-(s2 * r_abs - 2.0).powi(2) / d).exp() + (-(s2 * r_abs + 2.0).powi(2) / d).exp())
}

/// Distribution function of `|r|`.
pub fn reliability_cdf(r_abs: f64, sigma: f64) -> f64 {
    if r_abs <= 0.0 {
        return 0.0;
    }
    let s2 = sigma * sigma;
    let d = 2.0 * SQRT_2 * sigma;
    0.5 * erf((s2 * r_abs - 2.0) / d) + 0.5 * erf((s2 * r_abs + 2.0) / d)
}

/// Density of `|y|`: the sum of two unit-shifted Gaussians folded at zero.
pub fn abs_observation_pdf(y: f64, sigma: f64) -> f64 {
    if y < 0.0 {
        return 0.0;
    }
    let g = |m: f64| (-(y - m).powi(2) / (2.0 * sigma * sigma)).exp() / (sigma * SQRT_2PI);
    g(1.0) + g(-1.0)
}

/// Distribution function of `|y|`.
pub fn abs_observation_cdf(y: f64, sigma: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let d = SQRT_2 * sigma;
    0.5 * erf((y - 1.0) / d) + 0.5 * erf((y + 1.0) / d)
}

/// `1 - F_{|y|}(y)` without cancellation in the upper tail.
pub fn abs_observation_ccdf(y: f64, sigma: f64) -> f64 {
    if y <= 0.0 {
        return 1.0;
    }
    let d = SQRT_2 * sigma;
    0.5 * erfc((y - 1.0) / d) + 0.5 * erfc((y + 1.0) / d)
}

/// The `(n-k-δ)/n` quantile of `|r|`, to absolute tolerance 1e-10.
pub fn quantile_alpha(n: usize, k: usize, delta: usize, sigma: f64) -> f64 {
    assert!(k + delta <= n, "need 0 <= delta <= n - k");
    let target = (n - k - delta) as f64 / n as f64;
    if target <= 0.0 {
        return 0.0;
    }
    let f = |r: f64| reliability_cdf(r, sigma) - target;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    bisect(f, 0.0, hi, 1e-11)
}

/// Density of the `i`-th smallest of `n` i.i.d. copies of `|y|` (1-based `i`).
pub fn order_statistic_pdf(i: usize, n: usize, sigma: f64, y: f64) -> f64 {
    assert!(1 <= i && i <= n, "order statistic index out of range");
    if y < 0.0 {
        return 0.0;
    }
    let f = abs_observation_pdf(y, sigma);
    if f == 0.0 {
        return 0.0;
    }
    let cdf = abs_observation_cdf(y, sigma);
    let ccdf = abs_observation_ccdf(y, sigma);
    let ln_pow = |base: f64, e: usize| if e == 0 { 0.0 } else { e as f64 * base.ln() };
    let ln_c = ln_gamma(n as f64 + 1.0) - ln_gamma(i as f64) - ln_gamma((n - i) as f64 + 1.0);
    (ln_c + f.ln() + ln_pow(cdf, i - 1) + ln_pow(ccdf, n - i)).exp()
}
