//! Seeded Monte Carlo drivers.
//!
//! Every frame draws its message and noise from a generator seeded by
//! `derive_seed(master, point, frame)`, and frames are scanned in index order
//! when applying the error-count stop, so results do not depend on the
//! number of worker threads.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{
    min_list_size_on, rank_statistics, time_model, CardinalityMethod, CardinalitySamples, PredictorConfig, TimeModel,
};
use crate::channel::{sigma_from_ebn0, transmit_with, ChannelFrame};
use crate::decoder::{decode_instance, more_likely, tau_sai, DecoderConfig, Lga, StopReason, Stopping};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::gf2::{load_alist, random_code, BitVec, LinearCode};
use crate::preprocess::{preprocess, PreprocessedInstance};
use crate::slva::slva_create;

/// Frames decoded per parallel batch.
const CHUNK: u64 = 64;
const STREAM_FRAMES: u64 = 0x4652_414d_4500;

/// Where the parity-check matrix comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum CodeSource {
    Alist(PathBuf),
    Random { n: usize, k: usize, seed: u64 },
}

impl CodeSource {
    pub fn load(&self) -> Result<LinearCode> {
        match self {
            CodeSource::Alist(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
                load_alist(&text)
            }
            CodeSource::Random { n, k, seed } => {
                if *k == 0 || k >= n {
                    return Err(Error::InvalidParameter(format!("random code needs 0 < k < n, got n={n}, k={k}")));
                }
                Ok(random_code(*n, *k, *seed))
            }
        }
    }
}

/// Stopping rule as configured; thresholds that depend on the operating
/// point are resolved per grid point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StoppingRule {
    Trivial,
    Dai,
    Sai,
    IdealOracle,
}

impl StoppingRule {
    pub fn resolve(self, n: usize, k: usize, delta: usize, sigma: f64) -> Stopping {
        match self {
            StoppingRule::Trivial => Stopping::TrivialOnly,
            StoppingRule::Dai => Stopping::Dai,
            StoppingRule::Sai => Stopping::Sai(tau_sai(n, k, delta, sigma)),
            StoppingRule::IdealOracle => Stopping::IdealOracle,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub code: CodeSource,
    pub ebn0_db: Vec<f64>,
    pub delta: usize,
    pub l_max: usize,
    pub stopping: StoppingRule,
    pub lga: Lga,
    pub max_frames: u64,
    pub max_errors: u64,
    pub master_seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Also count frames where the decoder output beats the sent codeword.
    pub mld: bool,
    /// Measure wall time; when off the `seconds` column is zero and output
    /// is reproducible byte for byte.
    pub timing: bool,
}

impl SimConfig {
    pub fn new(code: CodeSource, ebn0_db: Vec<f64>, delta: usize, l_max: usize) -> Self {
        SimConfig {
            code,
            ebn0_db,
            delta,
            l_max,
            stopping: StoppingRule::Trivial,
            lga: Lga::Slva,
            max_frames: 10_000,
            max_errors: 100,
            master_seed: 0,
            workers: None,
            mld: false,
            timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_frames == 0 {
            return Err(Error::InvalidParameter("max_frames must be at least 1".into()));
        }
        if self.max_errors == 0 {
            return Err(Error::InvalidParameter("max_errors must be at least 1".into()));
        }
        if self.l_max == 0 {
            return Err(Error::InvalidParameter("l_max must be at least 1".into()));
        }
        if self.ebn0_db.is_empty() || self.ebn0_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("Eb/N0 grid must be non-empty and finite".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidParameter("workers must be at least 1".into()));
        }
        Ok(())
    }
}

/// One grid point of a simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct SimRecord {
    pub ebn0_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub fer: f64,
    pub l_avg: f64,
    pub ml_certified_fraction: f64,
    pub wall_seconds: f64,
    pub mld_errors: Option<u64>,
}

impl SimRecord {
    /// Standard error of the FER estimate.
    pub fn fer_sigma(&self) -> f64 {
        (self.fer * (1.0 - self.fer) / self.frames as f64).sqrt()
    }

    /// 95% Wilson score interval for the FER.
    pub fn fer_interval(&self) -> (f64, f64) {
        wilson(self.frame_errors, self.frames)
    }

    pub fn mld_fer(&self) -> Option<f64> {
        self.mld_errors.map(|e| e as f64 / self.frames as f64)
    }
}

fn wilson(successes: u64, trials: u64) -> (f64, f64) {
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Outcome of decoding one frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameOutcome {
    pub error: bool,
    pub searches: usize,
    pub ml_certified: bool,
    pub mld_error: bool,
}

/// Uniformly random codeword plus channel noise, from one seed.
pub fn random_frame(generator_rows: &[BitVec], n: usize, sigma: f64, seed: u64) -> ChannelFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = BitVec::zeros(n);
    for row in generator_rows {
        if rng.random::<bool>() {
            c.xor_assign(row);
        }
    }
    transmit_with(&c, sigma, &mut rng)
}

/// Seed of frame `index` at grid point `point`.
pub fn frame_seed(master: u64, point: usize, index: u64) -> u64 {
    derive_seed(master, STREAM_FRAMES + point as u64, index)
}

/// Decode one frame and classify the result.
pub fn decode_frame(code: &LinearCode, frame: &ChannelFrame, config: &DecoderConfig) -> Result<FrameOutcome> {
    let inst = preprocess(code, frame, config.delta)?;
    let result = decode_instance(&inst, frame, config)?;
    Ok(FrameOutcome {
        error: result.codeword != frame.codeword,
        searches: result.searches,
        ml_certified: matches!(result.stop_reason, StopReason::MlCertified | StopReason::Exhausted),
        mld_error: more_likely(&result.codeword, &frame.codeword, frame),
    })
}

/// Run `f` on frames `0, 1, ...` in parallel batches and feed the results,
/// in frame order, to `accept` until it returns `false` or `max_frames`
/// frames were consumed.
fn scan_frames<T: Send>(
    max_frames: u64,
    f: impl Fn(u64) -> Result<T> + Sync,
    mut accept: impl FnMut(T) -> bool,
) -> Result<()> {
    let mut next = 0;
    while next < max_frames {
        let end = (next + CHUNK).min(max_frames);
        let batch: Vec<Result<T>> = (next..end).into_par_iter().map(&f).collect();
        for item in batch {
            if !accept(item?) {
                return Ok(());
            }
        }
        next = end;
    }
    Ok(())
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("cannot start {w} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Simulate one operating point with an already loaded code.
pub fn simulate_point(code: &LinearCode, config: &SimConfig, point: usize) -> Result<SimRecord> {
    let ebn0 = config.ebn0_db[point];
    let sigma = sigma_from_ebn0(ebn0, code.rate());
    let decoder = DecoderConfig::new(config.delta, config.l_max)
        .with_lga(config.lga)
        .with_stopping(config.stopping.resolve(code.n(), code.k(), config.delta, sigma));
    decoder.validate(code)?;
    let g = code.generator_matrix();
    let rows: Vec<BitVec> = (0..g.rows()).map(|i| g.row(i)).collect();

    let start = Instant::now();
    let (mut frames, mut errors, mut searches, mut certified, mut mld) = (0u64, 0u64, 0u64, 0u64, 0u64);
    scan_frames(
        config.max_frames,
        |i| {
            let frame = random_frame(&rows, code.n(), sigma, frame_seed(config.master_seed, point, i));
            decode_frame(code, &frame, &decoder)
        },
        |o| {
            frames += 1;
            errors += o.error as u64;
            searches += o.searches as u64;
            certified += o.ml_certified as u64;
            mld += o.mld_error as u64;
            errors < config.max_errors
        },
    )?;
    let wall_seconds = if config.timing { start.elapsed().as_secs_f64() } else { 0.0 };
    Ok(SimRecord {
        ebn0_db: ebn0,
        frames,
        frame_errors: errors,
        fer: errors as f64 / frames as f64,
        l_avg: searches as f64 / frames as f64,
        ml_certified_fraction: certified as f64 / frames as f64,
        wall_seconds,
        mld_errors: config.mld.then_some(mld),
    })
}

/// Simulate every grid point in order.
pub fn simulate(config: &SimConfig) -> Result<Vec<SimRecord>> {
    config.validate()?;
    let code = config.code.load()?;
    simulate_with(&code, config)
}

/// [`simulate`] with an already loaded code.
pub fn simulate_with(code: &LinearCode, config: &SimConfig) -> Result<Vec<SimRecord>> {
    config.validate()?;
    with_pool(config.workers, || {
        (0..config.ebn0_db.len()).map(|p| simulate_point(code, config, p)).collect::<Result<Vec<_>>>()
    })?
}

pub const SIM_HEADER: &str = "ebn0_db,frames,errors,fer,l_avg,ml_certified,seconds";

/// CSV text with a header row; MLD columns are appended when present.
pub fn records_to_csv(records: &[SimRecord]) -> String {
    let with_mld = records.iter().any(|r| r.mld_errors.is_some());
    let mut out = String::from(SIM_HEADER);
    if with_mld {
        out.push_str(",mld_errors,mld_fer");
    }
    out.push('\n');
    for r in records {
        let _ = write!(
            out,
            "{},{},{},{:.6e},{:.4},{:.6},{:.3}",
            r.ebn0_db, r.frames, r.frame_errors, r.fer, r.l_avg, r.ml_certified_fraction, r.wall_seconds
        );
        if with_mld {
            let e = r.mld_errors.unwrap_or(0);
            let _ = write!(out, ",{},{:.6e}", e, e as f64 / r.frames as f64);
        }
        out.push('\n');
    }
    out
}

/// Number of constrained patterns the list generator emits before the true
/// right-part error pattern, or `cap` if it is not among the first `cap`.
pub fn true_pattern_rank(inst: &PreprocessedInstance, frame: &ChannelFrame, cap: usize) -> Result<usize> {
    let (_, e_r) = inst.split(&frame.true_error())?;
    let mut session = slva_create(&inst.p2, inst.r_abs_right(), &inst.s2)?;
    for rank in 0..cap {
        match session.next() {
            Some(c) if c.e == e_r => return Ok(rank),
            Some(_) => {}
            None => return Err(Error::InvalidParameter("true pattern missing from its coset".into())),
        }
    }
    Ok(cap)
}

/// Per-frame outcome of a joint list-rank and decoding run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankOutcome {
    /// Rank of the true pattern, capped.
    pub rank: usize,
    pub decode: FrameOutcome,
}

/// For `frames` random frames, record the true pattern's list rank (capped
/// at `rank_cap`) and decode with `decoder`.
pub fn rank_study(
    code: &LinearCode,
    ebn0_db: f64,
    decoder: &DecoderConfig,
    rank_cap: usize,
    frames: u64,
    seed: u64,
) -> Result<Vec<RankOutcome>> {
    decoder.validate(code)?;
    let sigma = sigma_from_ebn0(ebn0_db, code.rate());
    let g = code.generator_matrix();
    let rows: Vec<BitVec> = (0..g.rows()).map(|i| g.row(i)).collect();
    let mut out = Vec::with_capacity(frames as usize);
    scan_frames(
        frames,
        |i| {
            let frame = random_frame(&rows, code.n(), sigma, frame_seed(seed, 0, i));
            let inst = preprocess(code, &frame, decoder.delta)?;
            let rank = true_pattern_rank(&inst, &frame, rank_cap)?;
            let result = decode_instance(&inst, &frame, decoder)?;
            Ok(RankOutcome {
                rank,
                decode: FrameOutcome {
                    error: result.codeword != frame.codeword,
                    searches: result.searches,
                    ml_certified: matches!(result.stop_reason, StopReason::MlCertified | StopReason::Exhausted),
                    mld_error: more_likely(&result.codeword, &frame.codeword, &frame),
                },
            })
        },
        |o| {
            out.push(o);
            true
        },
    )?;
    Ok(out)
}

/// One row of a list-error prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictRow {
    pub ebn0_db: f64,
    /// `(ℓ_max, ε̂(ℓ_max))` in increasing `ℓ_max`.
    pub entries: Vec<(u64, f64)>,
    /// `E[L̂ | L̂ < ℓ]` at the largest list size.
    pub cond_mean: f64,
    /// `mld_fer + ε̂` at the largest list size.
    pub bound: f64,
}

/// Predict list error rates on an `Eb/N0` grid. `mld_fer` is either empty or
/// holds one MLD error rate per grid point for the bound column.
#[allow(clippy::too_many_arguments)]
pub fn predict(
    n: usize,
    k: usize,
    delta: usize,
    l_values: &[u64],
    ebn0_db: &[f64],
    mld_fer: &[f64],
    samples: usize,
    seed: u64,
    method: CardinalityMethod,
) -> Result<Vec<PredictRow>> {
    if l_values.is_empty() || l_values.contains(&0) {
        return Err(Error::InvalidParameter("list sizes must be non-empty and positive".into()));
    }
    if !mld_fer.is_empty() && mld_fer.len() != ebn0_db.len() {
        return Err(Error::DimensionMismatch { expected: ebn0_db.len(), got: mld_fer.len() });
    }
    let mut ls = l_values.to_vec();
    ls.sort_unstable();
    ls.dedup();
    let top = *ls.last().expect("non-empty");
    ebn0_db
        .iter()
        .enumerate()
        .map(|(i, &db)| {
            let sigma = sigma_from_ebn0(db, k as f64 / n as f64);
            let cfg =
                PredictorConfig::new(n, k, delta, sigma, samples, derive_seed(seed, 1, i as u64)).with_method(method);
            let curve = CardinalitySamples::draw(&cfg)?.curve(&ls);
            let (_, cond_mean) = rank_statistics(&curve, top)?;
            let bound = crate::analysis::fer_upper_bound(&curve, top, mld_fer.get(i).copied().unwrap_or(0.0))?;
            Ok(PredictRow { ebn0_db: db, entries: curve.entries.into_iter().collect(), cond_mean, bound })
        })
        .collect()
}

pub fn predict_to_csv(rows: &[PredictRow]) -> String {
    let mut out = String::from("ebn0_db");
    if let Some(first) = rows.first() {
        for (l, _) in &first.entries {
            let _ = write!(out, ",eps_{l}");
        }
    }
    out.push_str(",cond_mean,bound\n");
    for r in rows {
        let _ = write!(out, "{}", r.ebn0_db);
        for (_, e) in &r.entries {
            let _ = write!(out, ",{e:.6e}");
        }
        let _ = writeln!(out, ",{:.6},{:.6e}", r.cond_mean, r.bound);
    }
    out
}

/// One δ of a tuning table.
#[derive(Clone, Debug, PartialEq)]
pub struct TuneRow {
    pub delta: usize,
    /// Minimum list size, or the reachable floor when the target is out of
    /// range.
    pub l_star: std::result::Result<u64, f64>,
    /// Predicted time with the expected number of searches.
    pub t_avg: f64,
    /// Predicted time with `ℓ*` searches.
    pub t_max: f64,
    /// Whether this row minimizes `t_max`.
    pub best: bool,
}

/// For each δ, the smallest list size meeting `target` and its predicted
/// decoding times. The same channel samples are reused across δ.
#[allow(clippy::too_many_arguments)]
pub fn tune(
    n: usize,
    k: usize,
    ebn0_db: f64,
    target: f64,
    deltas: &[usize],
    model: &TimeModel,
    samples: usize,
    seed: u64,
) -> Result<Vec<TuneRow>> {
    let sigma = sigma_from_ebn0(ebn0_db, k as f64 / n as f64);
    let mut rows = deltas
        .iter()
        .map(|&delta| {
            let draw = CardinalitySamples::draw(&PredictorConfig::new(n, k, delta, sigma, samples, seed))?;
            Ok(match min_list_size_on(&draw, target) {
                Ok(l) => {
                    let avg = 1.0 + draw.curve(&[l]).truncated_means[&l];
                    TuneRow {
                        delta,
                        l_star: Ok(l),
                        t_avg: time_model(n, k, delta, avg, model),
                        t_max: time_model(n, k, delta, l as f64, model),
                        best: false,
                    }
                }
                Err(Error::Unreachable { floor, .. }) => {
                    TuneRow { delta, l_star: Err(floor), t_avg: f64::NAN, t_max: f64::NAN, best: false }
                }
                Err(e) => return Err(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.l_star.is_ok())
        .min_by(|a, b| a.1.t_max.total_cmp(&b.1.t_max))
        .map(|(i, _)| i);
    if let Some(i) = best {
        rows[i].best = true;
    }
    Ok(rows)
}

pub fn tune_to_csv(rows: &[TuneRow]) -> String {
    let mut out = String::from("delta,l_star,t_avg_ms,t_max_ms,best\n");
    for r in rows {
        match r.l_star {
            Ok(l) => {
                let _ = writeln!(out, "{},{},{:.6},{:.6},{}", r.delta, l, r.t_avg * 1e3, r.t_max * 1e3, r.best as u8);
            }
            Err(floor) => {
                let _ = writeln!(out, "{},unreachable(floor={floor:.3e}),,,0", r.delta);
            }
        }
    }
    out
}

/// Complementary distribution of `D(r)` by exact counting and by the
/// saddlepoint method, on the same channel samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CcdfRow {
    pub threshold: f64,
    pub counting: f64,
    pub saddlepoint: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn count_distribution(
    n: usize,
    k: usize,
    delta: usize,
    ebn0_db: f64,
    samples: usize,
    seed: u64,
    cap: u64,
    thresholds: &[f64],
) -> Result<Vec<CcdfRow>> {
    if let Some(t) = thresholds.iter().find(|&&t| !(t.is_finite() && t >= 0.0) || t > cap as f64) {
        return Err(Error::InvalidParameter(format!("threshold {t} outside [0, cap = {cap}]")));
    }
    let sigma = sigma_from_ebn0(ebn0_db, k as f64 / n as f64);
    let cfg = PredictorConfig::new(n, k, delta, sigma, samples, seed);
    let sp = crate::analysis::sample_log2_cardinalities(&cfg)?;
    let ct = crate::analysis::sample_log2_cardinalities(&cfg.with_method(CardinalityMethod::Counting { cap }))?;
    let ccdf = |v: &[f64], t: f64| v.iter().filter(|&&x| x > t.log2()).count() as f64 / v.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| CcdfRow { threshold: t, counting: ccdf(&ct, t), saddlepoint: ccdf(&sp, t) })
        .collect())
}

pub fn ccdf_to_csv(rows: &[CcdfRow]) -> String {
    let mut out = String::from("threshold,ccdf_counting,ccdf_saddlepoint\n");
    for r in rows {
        let _ = writeln!(out, "{},{:.6},{:.6}", r.threshold, r.counting, r.saddlepoint);
    }
    out
}
