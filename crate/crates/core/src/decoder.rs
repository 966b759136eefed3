//! The LC-OSD decoding loop, its stopping thresholds and the MLD error
//! counter.
//!
//! After preprocessing, the list generator emits right-part patterns `e_R`
//! in non-decreasing soft weight. Each one fixes a full error pattern and so
//! a codeword; the lightest full pattern seen so far is kept. The search
//! stops when
//!
//! * `Γ(e_opt) <= Γ(e_R)`: nothing later can be lighter, so the output is ML;
//! * `Γ(e_opt) < τ + Γ(e_R)` for the configured threshold `τ`;
//! * the list limit is reached or the generator runs dry.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::channel::{quantile_alpha, reliability_pdf, ChannelFrame};
use crate::error::{Error, Result};
use crate::fpt::TfptSession;
use crate::gf2::{BitVec, LinearCode};
use crate::numeric::integrate;
use crate::preprocess::{preprocess, soft_weight, PreprocessedInstance};
use crate::slva::{slva_create, SlvaSession};
use crate::Candidate;

/// List-generating algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lga {
    Slva,
    Tfpt,
}

/// Early-stopping rule added on top of the always-active ML certificate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stopping {
    TrivialOnly,
    /// Per-frame threshold from the left-part reliabilities.
    Dai,
    /// Fixed threshold, normally [`tau_sai`] for the operating point.
    Sai(f64),
    /// Soft weight of the true left error part. Needs the sent codeword, so
    /// it is only meaningful in simulation.
    IdealOracle,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoderConfig {
    pub delta: usize,
    pub l_max: usize,
    pub lga: Lga,
    pub stopping: Stopping,
    /// Record the per-candidate soft weights.
    pub trace: bool,
}

impl DecoderConfig {
    /// SLVA, no extra threshold, no trace.
    pub fn new(delta: usize, l_max: usize) -> Self {
        DecoderConfig { delta, l_max, lga: Lga::Slva, stopping: Stopping::TrivialOnly, trace: false }
    }

    pub fn with_lga(mut self, lga: Lga) -> Self {
        self.lga = lga;
        self
    }

    pub fn with_stopping(mut self, stopping: Stopping) -> Self {
        self.stopping = stopping;
        self
    }

    pub fn with_trace(mut self, trace: bool) -> Self {
        self.trace = trace;
        self
    }

    pub fn validate(&self, code: &LinearCode) -> Result<()> {
        if self.delta > code.n() - code.k() {
            return Err(Error::InvalidParameter(format!("delta {} exceeds n-k = {}", self.delta, code.n() - code.k())));
        }
        if self.l_max == 0 {
            return Err(Error::InvalidParameter("l_max must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// The lightest pattern found cannot be beaten by any later one.
    MlCertified,
    /// The approximate threshold fired.
    Threshold,
    /// `l_max` candidates were searched.
    ListLimit,
    /// The generator emitted the whole coset (the output is then ML too).
    Exhausted,
}

/// Soft weights recorded after the ℓ-th candidate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry {
    /// `Γ(e_R^(ℓ))`.
    pub gamma_right: f64,
    /// `Γ(e^(ℓ)) = Γ(e_L^(ℓ)) + Γ(e_R^(ℓ))`.
    pub gamma_full: f64,
    /// `Γ(e_opt^(ℓ))` after the update.
    pub gamma_opt: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult {
    pub codeword: BitVec,
    /// Chosen error pattern in channel order.
    pub tep: BitVec,
    /// Number of candidates requested from the generator.
    pub searches: usize,
    pub stop_reason: StopReason,
    pub gamma_opt: f64,
    pub trace: Option<Vec<TraceEntry>>,
}

enum Generator {
    Slva(SlvaSession),
    Tfpt(TfptSession),
}

impl Generator {
    fn new(lga: Lga, inst: &PreprocessedInstance) -> Result<Self> {
        Ok(match lga {
            Lga::Slva => Generator::Slva(slva_create(&inst.p2, inst.r_abs_right(), &inst.s2)?),
            Lga::Tfpt => Generator::Tfpt(TfptSession::new(&inst.p2, inst.r_abs_right(), &inst.s2)?),
        })
    }

    fn next(&mut self) -> Option<Candidate> {
        match self {
            Generator::Slva(s) => s.next(),
            Generator::Tfpt(s) => s.next(),
        }
    }
}

#[inline]
fn dai_term(r: f64) -> f64 {
    if !(r.is_finite()) || r > 745.0 {
        return 0.0;
    }
    let t = (-r).exp();
    r * t / (1.0 + t)
}

/// `Σ |r_i| / (1 + e^{|r_i|})` over the left-part reliabilities: the expected
/// soft weight of the left error part given the reliabilities.
pub fn tau_dai(r_left_abs: &[f64]) -> f64 {
    r_left_abs.iter().map(|&r| dai_term(r)).sum()
}

fn tau_sai_uncached(n: usize, k: usize, delta: usize, sigma: f64) -> f64 {
    let alpha = quantile_alpha(n, k, delta, sigma);
    if alpha == 0.0 {
        return 0.0;
    }
    n as f64 * integrate(|r| dai_term(r) * reliability_pdf(r, sigma), 0.0, alpha, 1e-8 / n as f64)
}

/// SNR-level threshold `n·∫_0^α r/(1+e^r)·f_{|r|}(r) dr`, where `α` is the
/// `(n-k-δ)/n` quantile of `|r|`. Values are cached per `(n, k, δ, σ)`.
pub fn tau_sai(n: usize, k: usize, delta: usize, sigma: f64) -> f64 {
    type Cache = Mutex<HashMap<(usize, usize, usize, u64), f64>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let key = (n, k, delta, sigma.to_bits());
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&v) = cache.lock().expect("tau cache poisoned").get(&key) {
        return v;
    }
    let v = tau_sai_uncached(n, k, delta, sigma);
    cache.lock().expect("tau cache poisoned").insert(key, v);
    v
}

/// Run LC-OSD on one frame.
pub fn lc_osd(code: &LinearCode, frame: &ChannelFrame, config: &DecoderConfig) -> Result<DecodeResult> {
    config.validate(code)?;
    let inst = preprocess(code, frame, config.delta)?;
    decode_instance(&inst, frame, config)
}

/// Run the search loop on an already preprocessed frame.
pub fn decode_instance(
    inst: &PreprocessedInstance,
    frame: &ChannelFrame,
    config: &DecoderConfig,
) -> Result<DecodeResult> {
    let threshold = match config.stopping {
        Stopping::TrivialOnly => None,
        Stopping::Dai => Some(tau_dai(inst.r_abs_left())),
        Stopping::Sai(tau) => Some(tau),
        Stopping::IdealOracle => {
            let (e_l, _) = inst.split(&frame.true_error())?;
            Some(soft_weight(&e_l, inst.r_abs_left())?)
        }
    };

    // The hard decision itself is a valid pattern (the zero codeword).
    let mut opt_right = inst.z_perm.slice(inst.left_width, inst.right_width);
    let mut opt_weight = soft_weight(&inst.z_perm.slice(0, inst.left_width), inst.r_abs_left())?
        + soft_weight(&opt_right, inst.r_abs_right())?;

    let mut generator = Generator::new(config.lga, inst)?;
    let mut trace = config.trace.then(Vec::new);
    let mut searches = 0;
    let mut stop_reason = StopReason::ListLimit;
    while searches < config.l_max {
        let Some(cand) = generator.next() else {
            stop_reason = StopReason::Exhausted;
            break;
        };
        searches += 1;
        let gamma_right = cand.weight;
        let gamma_full = inst.left_weight(&cand.e)? + gamma_right;
        if gamma_full < opt_weight {
            opt_weight = gamma_full;
            opt_right = cand.e;
        }
        if let Some(t) = trace.as_mut() {
            t.push(TraceEntry { gamma_right, gamma_full, gamma_opt: opt_weight });
        }
        if opt_weight <= gamma_right {
            stop_reason = StopReason::MlCertified;
            break;
        }
        if threshold.is_some_and(|tau| opt_weight < tau + gamma_right) {
            stop_reason = StopReason::Threshold;
            break;
        }
    }

    let (tep, codeword) = inst.reconstruct(&opt_right)?;
    Ok(DecodeResult { codeword, tep, searches, stop_reason, gamma_opt: opt_weight, trace })
}

/// The slack `Γ(e_opt^(j*-1)) - Γ(e_R^(j*-1)) - Γ(e_L^(j*))`, where `j*` is the
/// 1-based trace index at which the ML pattern was found; `+∞` for `j* = 1`.
pub fn delta_gamma(result: &DecodeResult, j_star: usize) -> Result<f64> {
    let trace = result.trace.as_ref().ok_or(Error::MissingTrace)?;
    if j_star == 0 || j_star > trace.len() {
        return Err(Error::InvalidParameter(format!("j* = {j_star} outside trace of length {}", trace.len())));
    }
    if j_star == 1 {
        return Ok(f64::INFINITY);
    }
    let prev = trace[j_star - 2];
    let cur = trace[j_star - 1];
    Ok(prev.gamma_opt - prev.gamma_right - (cur.gamma_full - cur.gamma_right))
}

/// Decode with the ML certificate as the only early stop and report whether
/// the decoder found a codeword strictly more likely than `sent`.
pub fn mld_error_indicator(
    code: &LinearCode,
    delta: usize,
    l_max: usize,
    sent: &BitVec,
    frame: &ChannelFrame,
) -> Result<bool> {
    if !code.is_codeword(sent) {
        return Err(Error::InvalidParameter("sent word is not a codeword".into()));
    }
    let result = lc_osd(code, frame, &DecoderConfig::new(delta, l_max))?;
    Ok(more_likely(&result.codeword, sent, frame))
}

/// Whether `a` is strictly more likely than `b` given the frame, i.e. its
/// error pattern has strictly smaller soft weight.
pub fn more_likely(a: &BitVec, b: &BitVec, frame: &ChannelFrame) -> bool {
    let r_abs = frame.r_abs();
    let wa = soft_weight(&frame.z.xor(a), &r_abs).expect("lengths checked by caller");
    let wb = soft_weight(&frame.z.xor(b), &r_abs).expect("lengths checked by caller");
    wa < wb
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sigma_from_ebn0;
    use crate::gf2::BitMatrix;

    fn hamming() -> LinearCode {
        LinearCode::new(BitMatrix::from_strs(&["1010101", "0110011", "0001111"]).unwrap()).unwrap()
    }

    #[test]
    fn dai_examples() {
        assert_eq!(tau_dai(&[0.0, 0.0]), 0.0);
        assert_eq!(tau_dai(&[f64::INFINITY, 1e6]), 0.0);
        let e = std::f64::consts::E;
        let want = 1.0 / (1.0 + e) + 2.0 / (1.0 + e * e);
        assert!((tau_dai(&[1.0, 2.0]) - want).abs() < 1e-15);
        assert!((want - 0.507_347).abs() < 1e-6);
    }

    #[test]
    fn sai_examples() {
        assert_eq!(tau_sai(128, 64, 64, 0.8), 0.0);
        let t = tau_sai(128, 64, 8, sigma_from_ebn0(2.0, 0.5));
        assert!((t - 11.96).abs() < 0.01, "{t}");
        let t = tau_sai(128, 32, 12, sigma_from_ebn0(4.0, 0.25));
        assert!((t - 16.79).abs() < 0.01, "{t}");
    }

    #[test]
    fn hamming_example_decode() {
        let y = vec![-1.0, 1.5, 2.0, -3.0, 3.5, 5.0, 7.0];
        let frame = ChannelFrame::from_observation(BitVec::zeros(7), y, 1.0);
        let res = lc_osd(&hamming(), &frame, &DecoderConfig::new(3, 16)).unwrap();
        assert_eq!(res.codeword.to_bits(), vec![1, 0, 0, 1, 1, 0, 0]);
        assert_eq!(res.gamma_opt, 7.0);
        assert_eq!(res.stop_reason, StopReason::MlCertified);
    }

    #[test]
    fn noiseless_frame_certifies_immediately() {
        let code = crate::gf2::random_code(32, 16, 2);
        let c = code.generator_matrix().row(5);
        let frame = crate::channel::transmit(&c, 1e-12, 7);
        let res = lc_osd(&code, &frame, &DecoderConfig::new(4, 100)).unwrap();
        assert_eq!(res.codeword, c);
        assert_eq!(res.searches, 1);
        assert_eq!(res.stop_reason, StopReason::MlCertified);
        assert!(!mld_error_indicator(&code, 4, 100, &c, &frame).unwrap());
    }

    #[test]
    fn single_candidate_reencodes_best_mrb_pattern() {
        let code = crate::gf2::random_code(24, 12, 4);
        let frame = crate::channel::transmit(&BitVec::zeros(24), 0.9, 31);
        let res = lc_osd(&code, &frame, &DecoderConfig::new(0, 1)).unwrap();
        assert_eq!(res.searches, 1);
        assert!(code.is_codeword(&res.codeword));
    }

    #[test]
    fn delta_gamma_cases() {
        let mut res = lc_osd(
            &hamming(),
            &ChannelFrame::from_observation(BitVec::zeros(7), vec![-1.0, 1.5, 2.0, -3.0, 3.5, 5.0, 7.0], 1.0),
            &DecoderConfig::new(3, 16).with_trace(true),
        )
        .unwrap();
        assert_eq!(delta_gamma(&res, 1).unwrap(), f64::INFINITY);
        res.trace = None;
        assert_eq!(delta_gamma(&res, 1), Err(Error::MissingTrace));
    }

    #[test]
    fn rejects_bad_config() {
        let code = hamming();
        let frame = crate::channel::transmit(&BitVec::zeros(7), 0.8, 1);
        assert!(lc_osd(&code, &frame, &DecoderConfig::new(4, 8)).is_err());
        assert!(lc_osd(&code, &frame, &DecoderConfig::new(2, 0)).is_err());
    }
}
