//! Random-coding performance predictor.
//!
//! For a transmitted all-zero codeword the rank of the true error pattern in
//! the constrained list is modelled as `Binomial(D(r), 2^-δ)`, where `D(r)` is
//! the number of patterns over the most reliable positions that are strictly
//! lighter than the true one. `D(r)` is obtained either exactly by best-first
//! enumeration or by a saddlepoint approximation, averaged over sampled
//! channel outputs to give the list error rate `ε̂(ℓ) = P[L̂ ≥ ℓ]`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::function::beta::beta_reg;
use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::fpt::FptSession;
use crate::numeric::ln_erfcx;

const LN_2: f64 = std::f64::consts::LN_2;
/// Above this many lighter patterns the binomial rank model is replaced by
/// its Poisson limit.
pub const BINOMIAL_LIMIT: f64 = 1e6;
/// Seed stream for the sampled reliability vectors.
const STREAM_MRB: u64 = 0x004d_5242;
/// Largest list size considered by [`min_list_size`].
const MAX_LIST: u64 = 1 << 40;

/// Result of an exact count with an enumeration cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountOutcome {
    Exact(u64),
    ExceedsCap,
}

/// Number of patterns `f` with `Γ(f) < Γ(e)`, `e_i = [r_i < 0]`, counted by
/// best-first enumeration over the sorted reliabilities. Stops with
/// [`CountOutcome::ExceedsCap`] once more than `cap` lighter patterns exist.
pub fn count_lighter(r_mrb: &[f64], cap: u64) -> CountOutcome {
    let mut order: Vec<usize> = (0..r_mrb.len()).collect();
    order.sort_by(|&a, &b| r_mrb[a].abs().total_cmp(&r_mrb[b].abs()));
    let sorted: Vec<f64> = order.iter().map(|&i| r_mrb[i].abs()).collect();
    // Same summation order as the enumerator, so the true pattern compares
    // equal to itself.
    let target: f64 = order.iter().filter(|&&i| r_mrb[i] < 0.0).map(|&i| r_mrb[i].abs()).sum();

    let mut session = FptSession::new(&sorted).expect("reliabilities are sorted");
    let mut count = 0u64;
    while let Some((w, _)) = session.next_support() {
        if w >= target {
            break;
        }
        count += 1;
        if count > cap {
            return CountOutcome::ExceedsCap;
        }
    }
    CountOutcome::Exact(count)
}

/// Saddlepoint of the cumulant generating function of `Σ g_i·r_i` for
/// uniform `g`, and the resulting estimate of `log2 D(r)`.
///
/// When all `r_i` share a sign the count is known exactly; `s_hat`, `kappa`
/// and `kappa2` are then NaN.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SaddlepointSolution {
    pub s_hat: f64,
    pub kappa: f64,
    pub kappa2: f64,
    pub log2_cardinality: f64,
}

#[inline]
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let t = x.exp();
        t / (1.0 + t)
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `(κ(s), κ'(s), κ''(s))` with `κ(s) = Σ ln(½ + ½·e^{s·r_i})`.
pub fn cumulants(r: &[f64], s: f64) -> (f64, f64, f64) {
    let mut k0 = 0.0;
    let mut k1 = 0.0;
    let mut k2 = 0.0;
    for &ri in r {
        let x = s * ri;
        let p = logistic(x);
        k0 += softplus(x) - LN_2;
        k1 += ri * p;
        k2 += ri * ri * p * (1.0 - p);
    }
    (k0, k1, k2)
}

fn saddlepoint_root(r: &[f64]) -> f64 {
    let max_abs = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let d1 = |s: f64| cumulants(r, s).1;
    let mut lo = -50.0 / max_abs;
    let mut hi = 50.0 / max_abs;
    while d1(lo) > 0.0 {
        lo *= 2.0;
    }
    while d1(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut s = 0.0f64.clamp(lo, hi);
    for _ in 0..500 {
        let (_, k1, k2) = cumulants(r, s);
        if k1.abs() <= 1e-10 {
            break;
        }
        if k1 < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let newton = s - k1 / k2;
        let next = if k2 > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if next == s || hi - lo <= 4.0 * f64::EPSILON * s.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        s = next;
    }
    s
}

/// Saddlepoint estimate of `D(r)` in the log2 domain.
pub fn saddlepoint_cardinality(r_mrb: &[f64]) -> SaddlepointSolution {
    let n = r_mrb.len() as f64;
    let degenerate =
        |log2: f64| SaddlepointSolution { s_hat: f64::NAN, kappa: f64::NAN, kappa2: f64::NAN, log2_cardinality: log2 };
    let negatives = r_mrb.iter().filter(|&&v| v < 0.0).count();
    let positives = r_mrb.iter().filter(|&&v| v > 0.0).count();
    if negatives == 0 {
        return degenerate(f64::NEG_INFINITY);
    }
    if positives == 0 {
        // Every pattern except those confined to the zero positions is lighter.
        let zeros = r_mrb.len() - negatives;
        return degenerate(n + (-(2f64.powf(zeros as f64 - n))).ln_1p() / LN_2);
    }

    let s = saddlepoint_root(r_mrb);
    let (k0, k1, k2) = cumulants(r_mrb, s);
    let v = (k1 - s * k2) / (2.0 * k2).sqrt();
    let ln_d = n * LN_2 - LN_2 + k0 - k1 * k1 / (2.0 * k2) + ln_erfcx(v);
    SaddlepointSolution { s_hat: s, kappa: k0, kappa2: k2, log2_cardinality: ln_d / LN_2 }
}

/// How `D(r)` is obtained for each sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CardinalityMethod {
    /// Exact enumeration up to `cap`; beyond it the saddlepoint estimate is
    /// used, floored at `cap + 1`.
    Counting {
        cap: u64,
    },
    Saddlepoint,
}

/// `log2 D(r)` by the chosen method (`-∞` for `D = 0`).
pub fn log2_cardinality(r_mrb: &[f64], method: CardinalityMethod) -> f64 {
    match method {
        CardinalityMethod::Saddlepoint => saddlepoint_cardinality(r_mrb).log2_cardinality,
        CardinalityMethod::Counting { cap } => match count_lighter(r_mrb, cap) {
            CountOutcome::Exact(0) => f64::NEG_INFINITY,
            CountOutcome::Exact(d) => (d as f64).log2(),
            CountOutcome::ExceedsCap => saddlepoint_cardinality(r_mrb).log2_cardinality.max(((cap + 1) as f64).log2()),
        },
    }
}

/// Sampling parameters of the predictor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictorConfig {
    pub n: usize,
    pub k: usize,
    pub delta: usize,
    pub sigma: f64,
    pub samples: usize,
    pub seed: u64,
    pub method: CardinalityMethod,
}

impl PredictorConfig {
    pub fn new(n: usize, k: usize, delta: usize, sigma: f64, samples: usize, seed: u64) -> Self {
        PredictorConfig { n, k, delta, sigma, samples, seed, method: CardinalityMethod::Saddlepoint }
    }

    pub fn with_method(mut self, method: CardinalityMethod) -> Self {
        self.method = method;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k + self.delta > self.n {
            return Err(Error::InvalidParameter(format!(
                "need 0 < k and k + delta <= n (n={}, k={}, delta={})",
                self.n, self.k, self.delta
            )));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter("samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// LLRs of the `k+δ` most reliable positions of one all-zero transmission.
///
/// Positions are chosen by reliability alone, without the rank repair of
/// the decoder's permutation.
pub fn sample_mrb_llrs(n: usize, k: usize, delta: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s2 = sigma * sigma;
    let mut r: Vec<f64> = (0..n)
        .map(|_| {
            let w: f64 = rng.sample(StandardNormal);
            2.0 * (1.0 + sigma * w) / s2
        })
        .collect();
    let keep = k + delta;
    if keep < n {
        r.select_nth_unstable_by(n - keep, |a, b| a.abs().total_cmp(&b.abs()));
        r.drain(..n - keep);
    }
    r
}

/// Per-sample `log2 D(r)` values, in sample order.
pub fn sample_log2_cardinalities(config: &PredictorConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let c = *config;
    Ok((0..c.samples as u64)
        .into_par_iter()
        .map(|i| {
            let r = sample_mrb_llrs(c.n, c.k, c.delta, c.sigma, derive_seed(c.seed, STREAM_MRB, i));
            log2_cardinality(&r, c.method)
        })
        .collect())
}

/// Distribution of the rank `L̂ ~ Binomial(D, 2^-δ)` for one sample, with the
/// Poisson limit once `D` exceeds [`BINOMIAL_LIMIT`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RankModel {
    Zero,
    Binomial { trials: u64, p: f64 },
    Poisson { lambda: f64 },
}

impl RankModel {
    pub fn new(log2_d: f64, delta: usize) -> Self {
        let p = 2f64.powi(-(delta as i32));
        let d = log2_d.exp2();
        if d <= BINOMIAL_LIMIT {
            match d.round() as u64 {
                0 => RankModel::Zero,
                trials => RankModel::Binomial { trials, p },
            }
        } else {
            RankModel::Poisson { lambda: d * p }
        }
    }

    /// `P[L̂ ≥ l]`.
    pub fn tail(&self, l: u64) -> f64 {
        if l == 0 {
            return 1.0;
        }
        match *self {
            RankModel::Zero => 0.0,
            RankModel::Binomial { trials, p } => {
                if l > trials {
                    0.0
                } else if p >= 1.0 {
                    1.0
                } else {
                    beta_reg(l as f64, (trials - l + 1) as f64, p)
                }
            }
            RankModel::Poisson { lambda } => gamma_lr(l as f64, lambda),
        }
    }

    /// `P[L̂ ≤ m - 1]` computed without cancellation.
    fn below(&self, m: u64) -> f64 {
        if m == 0 {
            return 0.0;
        }
        match *self {
            RankModel::Zero => 1.0,
            RankModel::Binomial { trials, p } => {
                if m > trials {
                    1.0
                } else if p >= 1.0 {
                    0.0
                } else {
                    beta_reg((trials - m + 1) as f64, m as f64, 1.0 - p)
                }
            }
            RankModel::Poisson { lambda } => gamma_ur(m as f64, lambda),
        }
    }

    /// `E[min(L̂, m)]`.
    pub fn truncated_mean(&self, m: u64) -> f64 {
        if m == 0 {
            return 0.0;
        }
        // E[X; X ≤ m] = mean · P[Y ≤ m-1], Y the same law with one fewer trial.
        let (mean, partial) = match *self {
            RankModel::Zero => return 0.0,
            RankModel::Binomial { trials, p } => {
                let reduced = RankModel::Binomial { trials: trials - 1, p };
                let below = if trials == 1 { 1.0 } else { reduced.below(m) };
                (trials as f64 * p, below)
            }
            RankModel::Poisson { lambda } => (lambda, self.below(m)),
        };
        mean * partial + m as f64 * self.tail(m + 1)
    }
}

/// Predicted list error rates over a set of list sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct ListFerCurve {
    pub delta: usize,
    pub sigma: f64,
    pub samples: usize,
    /// `ℓ ↦ ε̂(ℓ) = E_r P[L̂ ≥ ℓ]`.
    pub entries: BTreeMap<u64, f64>,
    /// `ℓ ↦ E_r E[min(L̂, ℓ-1)] = Σ_{j<ℓ} ε̂(j)` for `j ≥ 1`.
    pub truncated_means: BTreeMap<u64, f64>,
}

/// Per-sample cardinalities, reusable across list sizes.
#[derive(Clone, Debug)]
pub struct CardinalitySamples {
    pub delta: usize,
    pub sigma: f64,
    models: Vec<RankModel>,
}

impl CardinalitySamples {
    pub fn draw(config: &PredictorConfig) -> Result<Self> {
        let log2 = sample_log2_cardinalities(config)?;
        Ok(Self::from_log2(&log2, config.delta, config.sigma))
    }

    pub fn from_log2(log2_d: &[f64], delta: usize, sigma: f64) -> Self {
        let models = log2_d.iter().map(|&v| RankModel::new(v, delta)).collect();
        CardinalitySamples { delta, sigma, models }
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    fn average(&self, f: impl Fn(&RankModel) -> f64 + Sync + Send) -> f64 {
        let values: Vec<f64> = self.models.par_iter().map(f).collect();
        values.iter().sum::<f64>() / self.models.len() as f64
    }

    /// `ε̂(ℓ)`.
    pub fn list_fer(&self, l_max: u64) -> f64 {
        self.average(|m| m.tail(l_max))
    }

    pub fn curve(&self, l_values: &[u64]) -> ListFerCurve {
        let mut entries = BTreeMap::new();
        let mut truncated_means = BTreeMap::new();
        for &l in l_values {
            entries.insert(l, self.list_fer(l));
            truncated_means.insert(l, self.average(|m| m.truncated_mean(l.saturating_sub(1))));
        }
        ListFerCurve { delta: self.delta, sigma: self.sigma, samples: self.models.len(), entries, truncated_means }
    }
}

/// `ε̂(ℓ_max)` for one list size.
pub fn list_fer(config: &PredictorConfig, l_max: u64) -> Result<f64> {
    Ok(CardinalitySamples::draw(config)?.list_fer(l_max))
}

/// `ε̂` at every list size in `l_values`, sharing one set of samples.
pub fn list_fer_curve(config: &PredictorConfig, l_values: &[u64]) -> Result<ListFerCurve> {
    Ok(CardinalitySamples::draw(config)?.curve(l_values))
}

/// Rank PMF `ε̂(ℓ) - ε̂(ℓ+1)` wherever both neighbours are on the curve, and
/// the mean rank conditioned on the transmitted pattern being in the list,
/// `E[L̂ | L̂ < ℓ_max]`.
pub fn rank_statistics(curve: &ListFerCurve, l_max: u64) -> Result<(BTreeMap<u64, f64>, f64)> {
    if l_max == 0 {
        return Err(Error::InvalidCurve("l_max must be at least 1".into()));
    }
    let mut prev: Option<(u64, f64)> = None;
    for (&l, &e) in &curve.entries {
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::InvalidCurve(format!("entry at {l} is not a probability: {e}")));
        }
        if let Some((pl, pe)) = prev {
            if e > pe {
                return Err(Error::InvalidCurve(format!("increases from {pe} at {pl} to {e} at {l}")));
            }
        }
        prev = Some((l, e));
    }
    let pmf =
        curve.entries.iter().filter_map(|(&l, &e)| curve.entries.get(&(l + 1)).map(|&next| (l, e - next))).collect();

    let tail = *curve.entries.get(&l_max).ok_or_else(|| Error::InvalidCurve(format!("no entry at l_max = {l_max}")))?;
    let sum_below = if (1..l_max).all(|l| curve.entries.contains_key(&l)) {
        (1..l_max).map(|l| curve.entries[&l]).sum::<f64>()
    } else {
        *curve
            .truncated_means
            .get(&l_max)
            .ok_or_else(|| Error::InvalidCurve(format!("curve lacks entries 1..{l_max} and a truncated mean")))?
    };
    let cond_mean = if tail >= 1.0 { 0.0 } else { (sum_below - (l_max - 1) as f64 * tail) / (1.0 - tail) };
    Ok((pmf, cond_mean.max(0.0)))
}

/// `mld_fer + ε̂(ℓ_max)`.
pub fn fer_upper_bound(curve: &ListFerCurve, l_max: u64, mld_fer: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&mld_fer) {
        return Err(Error::InvalidParameter(format!("mld_fer must be a probability, got {mld_fer}")));
    }
    let e = curve.entries.get(&l_max).ok_or_else(|| Error::InvalidCurve(format!("no entry at l_max = {l_max}")))?;
    Ok(mld_fer + e)
}

/// Smallest `ℓ_max` with `ε̂(ℓ_max) ≤ target` on the given samples.
pub fn min_list_size_on(samples: &CardinalitySamples, target: f64) -> Result<u64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidParameter(format!("target must lie in (0, 1), got {target}")));
    }
    let mut hi = 1u64;
    while samples.list_fer(hi) > target {
        if hi >= MAX_LIST {
            return Err(Error::Unreachable { target, floor: samples.list_fer(MAX_LIST) });
        }
        hi *= 2;
    }
    if hi == 1 {
        return Ok(1);
    }
    // ε̂(lo) > target ≥ ε̂(hi)
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if samples.list_fer(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Smallest `ℓ_max` with predicted list error rate at most `target`.
pub fn min_list_size(config: &PredictorConfig, target: f64) -> Result<u64> {
    min_list_size_on(&CardinalitySamples::draw(config)?, target)
}

/// Time factors in seconds per unit of elimination, trellis and
/// re-encoding work.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeModel {
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
}

impl Default for TimeModel {
    fn default() -> Self {
        TimeModel { rho1: 0.0816e-9, rho2: 26.4e-9, rho3: 0.728e-9 }
    }
}

impl TimeModel {
    pub fn new(rho1: f64, rho2: f64, rho3: f64) -> Result<Self> {
        if [rho1, rho2, rho3].iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidParameter("time factors must be finite and nonnegative".into()));
        }
        Ok(TimeModel { rho1, rho2, rho3 })
    }
}

/// Predicted decoding time `ρ1·n(n-k)(n-k-δ) + ρ2·2^δ(k+δ) + ρ3·ℓ(n-k-δ)(k+δ)`
/// for `ℓ` searches.
pub fn time_model(n: usize, k: usize, delta: usize, l: f64, model: &TimeModel) -> f64 {
    let (n, k, d) = (n as f64, k as f64, delta as f64);
    let left = n - k - d;
    model.rho1 * n * (n - k) * left + model.rho2 * d.exp2() * (k + d) + model.rho3 * l * left * (k + d)
}
