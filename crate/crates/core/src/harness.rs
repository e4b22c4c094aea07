//! Monte Carlo validation drivers and synthetic signals.
//!
//! Everything here answers one question: do simulated mixtures behave the
//! way the closed-form models and bounds say they must? [`mc_moments`]
//! compares empirical probe moments against the per-mode models in
//! standard-error units, [`mc_tails`] checks empirical exceedance against
//! the tail bounds, [`qq_data`] produces normal quantile pairs for
//! normality checks, and [`replacement_study`] compares selection with and
//! without replacement against the exact product ratio.
//!
//! Trials are independent given per-trial seeds and run in fixed blocks of
//! [`TRIAL_BLOCK`]; block partials merge in block order with compensated
//! summation, so a report depends only on its [`ExperimentConfig`], never
//! on the thread schedule.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{self, CompensatedSum};
use crate::moments::{self, MixtureMoments};
use crate::rng::{stream_rng, trial_seed, Stream};
use crate::sensing::{self, Mode, SensingSpec, Signal};
use crate::tailbounds::{self, TailBound};
use crate::transforms::TransformOp;

/// Trials per accumulation block. Fixed so the merge tree depends only on
/// the trial count.
pub const TRIAL_BLOCK: u64 = 256;

/// Quantile grid size for Q-Q reports.
pub const QQ_GRID: usize = 1024;

/// Deterministic signal families for experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum SynthSignal {
    /// White Gaussian noise smoothed by two circular moving-average passes.
    Smooth,
    /// Unit spikes at 1-based indices k with k mod d = 1.
    PulseTrain { d: usize },
    /// Stationary first-order autoregression with coefficient `rho`.
    Ar1 { rho: f64 },
    /// Centered linear ramp from -1/2 to 1/2.
    Ramp,
    /// Every sample equal to `value`.
    Constant { value: f64 },
    /// Adjoint image of a k-sparse ±1 coefficient vector, so the forward
    /// transform of the result has exactly k nonzero components.
    SparseIn { transform: TransformOp, k: usize },
}

/// Where the experiment signal comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum SignalSource {
    File { path: String },
    Synthetic { kind: SynthSignal },
}

/// Build a synthetic signal of length `n`, deterministic in
/// `(kind, n, seed)`.
pub fn synth_signal(kind: &SynthSignal, n: usize, seed: u64) -> Result<Signal> {
    if n == 0 {
        return Err(Error::invalid("n", "signal length must be positive"));
    }
    match kind {
        SynthSignal::Smooth => {
            let mut rng = stream_rng(seed, Stream::Synthesis);
            let noise: Vec<f64> = (0..n)
                .map(|_| rand::Rng::sample(&mut rng, rand_distr::StandardNormal))
                .collect();
            let window = 8.min(n);
            let pass = |v: &[f64]| -> Vec<f64> {
                (0..n)
                    .map(|k| {
                        let sum: f64 = (0..window).map(|o| v[(k + o) % n]).sum();
                        sum / window as f64
                    })
                    .collect()
            };
            Signal::new(pass(&pass(&noise)))
        }
        SynthSignal::PulseTrain { d } => {
            if *d == 0 || *d > n {
                return Err(Error::invalid("d", "pulse spacing must be in 1..=n"));
            }
            Signal::new((0..n).map(|k| if k % d == 0 { 1.0 } else { 0.0 }).collect())
        }
        SynthSignal::Ar1 { rho } => {
            if !(rho.is_finite() && rho.abs() < 1.0) {
                return Err(Error::invalid(
                    "rho",
                    "ar1 coefficient must satisfy |rho| < 1",
                ));
            }
            let mut rng = stream_rng(seed, Stream::Synthesis);
            let noise_scale = (1.0 - rho * rho).sqrt();
            let mut v = 0.0;
            Signal::new(
                (0..n)
                    .map(|_| {
                        let w: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
                        v = rho * v + noise_scale * w;
                        v
                    })
                    .collect(),
            )
        }
        SynthSignal::Ramp => {
            if n < 2 {
                return Err(Error::invalid("n", "ramp needs at least two samples"));
            }
            Signal::new((0..n).map(|k| k as f64 / (n - 1) as f64 - 0.5).collect())
        }
        SynthSignal::Constant { value } => {
            if !value.is_finite() {
                return Err(Error::invalid("value", "constant level must be finite"));
            }
            Signal::new(vec![*value; n])
        }
        SynthSignal::SparseIn { transform, k } => {
            if transform.order() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: transform.order(),
                });
            }
            if *k == 0 || *k > n {
                return Err(Error::invalid("k", "sparsity must be in 1..=n"));
            }
            let mut rng = stream_rng(seed, Stream::Synthesis);
            let mut positions: Vec<usize> = (0..n).collect();
            for i in 0..*k {
                let j = rand::Rng::gen_range(&mut rng, i..n);
                positions.swap(i, j);
            }
            let mut coeffs = vec![0.0; n];
            for &p in &positions[..*k] {
                coeffs[p] = if rand::Rng::gen::<bool>(&mut rng) {
                    1.0
                } else {
                    -1.0
                };
            }
            Signal::new(transform.apply_adjoint(&coeffs)?)
        }
    }
}

/// Read a signal from disk: files ending in `.f64`, `.bin`, or `.raw` are
/// little-endian f64 arrays; anything else is parsed as one value per line.
pub fn read_signal_file(path: &Path) -> Result<Signal> {
    let binary = matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("f64") | Some("bin") | Some("raw")
    );
    if binary {
        let bytes =
            std::fs::read(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::Format(format!(
                "{}: byte length {} is not a multiple of 8",
                path.display(),
                bytes.len()
            )));
        }
        let samples = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Signal::new(samples)
    } else {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let mut samples = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            samples.push(
                trimmed.parse::<f64>().map_err(|e| {
                    Error::Format(format!("{}:{}: {e}", path.display(), lineno + 1))
                })?,
            );
        }
        Signal::new(samples)
    }
}

/// One Monte Carlo experiment: a sensing spec, a signal, a trial budget,
/// probe components, and a deviation grid, all keyed off one base seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub spec: SensingSpec,
    pub signal: SignalSource,
    pub trials: u64,
    /// 1-based mixture components to track.
    pub probe: Vec<usize>,
    /// Deviation multiples for tail checks.
    pub t_grid: Vec<f64>,
    pub base_seed: u64,
    /// Optional default output path for report writers.
    #[serde(default)]
    pub output: Option<String>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.trials == 0 {
            return Err(Error::invalid("trials", "need at least one trial"));
        }
        for &j in &self.probe {
            if j == 0 || j > self.spec.n {
                return Err(Error::IndexOutOfRange {
                    index: j,
                    n: self.spec.n,
                });
            }
        }
        let mut seen = self.probe.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.probe.len() {
            return Err(Error::invalid("probe", "probe indices must be distinct"));
        }
        for &t in &self.t_grid {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::invalid(
                    "t_grid",
                    "deviation multiples must be finite and nonnegative",
                ));
            }
        }
        Ok(())
    }

    /// Materialize the experiment signal; synthetic sources derive from the
    /// base seed.
    pub fn resolve_signal(&self) -> Result<Signal> {
        let x = match &self.signal {
            SignalSource::File { path } => read_signal_file(Path::new(path))?,
            SignalSource::Synthetic { kind } => synth_signal(kind, self.spec.n, self.base_seed)?,
        };
        if x.len() != self.spec.n {
            return Err(Error::DimensionMismatch {
                expected: self.spec.n,
                got: x.len(),
            });
        }
        Ok(x)
    }
}

fn block_ranges(trials: u64) -> Vec<(u64, u64)> {
    let mut ranges = Vec::new();
    let mut start = 0;
    while start < trials {
        let end = (start + TRIAL_BLOCK).min(trials);
        ranges.push((start, end));
        start = end;
    }
    ranges
}

#[cfg(feature = "parallel")]
fn run_blocks<R, F>(trials: u64, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(u64, u64) -> Result<R> + Sync,
{
    use rayon::prelude::*;
    block_ranges(trials)
        .into_par_iter()
        .map(|(a, b)| f(a, b))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_blocks<R, F>(trials: u64, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(u64, u64) -> Result<R> + Sync,
{
    block_ranges(trials)
        .into_iter()
        .map(|(a, b)| f(a, b))
        .collect()
}

fn model_for(spec: &SensingSpec, x: &Signal) -> Result<MixtureMoments> {
    match spec.mode {
        Mode::Lr => moments::lr_moments(&spec.transform, x, spec.m),
        Mode::Gr => moments::gr_moments(&spec.transform, x, spec.m),
        Mode::Rc => moments::rc_moments(x, spec.m),
        Mode::Rst => Err(Error::Unsupported(
            "the baseline mode has no closed-form moment model".into(),
        )),
    }
}

fn z_score(diff: f64, se: f64, scale: f64) -> f64 {
    if se > 0.0 && se.is_finite() {
        diff / se
    } else if diff.abs() <= 1e-9 * scale.max(f64::MIN_POSITIVE) {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Empirical probe moments against the closed-form model, in
/// standard-error units.
#[derive(Debug, Clone, Serialize)]
pub struct MomentsReport {
    pub trials: u64,
    pub probe: Vec<usize>,
    pub empirical_mean: Vec<f64>,
    pub model_mean: Vec<f64>,
    pub mean_z: Vec<f64>,
    pub empirical_cov: Vec<Vec<f64>>,
    pub model_cov: Vec<Vec<f64>>,
    pub cov_se: Vec<Vec<f64>>,
    pub cov_z: Vec<Vec<f64>>,
}

impl MomentsReport {
    /// Largest |z| over mean entries and the upper covariance triangle.
    pub fn max_abs_z(&self) -> f64 {
        let mut worst = 0.0f64;
        for &z in &self.mean_z {
            worst = worst.max(z.abs());
        }
        for (a, row) in self.cov_z.iter().enumerate() {
            for &z in &row[a..] {
                worst = worst.max(z.abs());
            }
        }
        worst
    }

    /// Largest deviation, in SE units, of any empirical covariance entry
    /// from the mean of its |j-h| lag group; only lags with at least two
    /// probe pairs contribute.
    pub fn toeplitz_residual_z(&self) -> f64 {
        let p = self.probe.len();
        let mut by_lag: std::collections::BTreeMap<usize, Vec<(usize, usize)>> =
            std::collections::BTreeMap::new();
        for a in 0..p {
            for b in a + 1..p {
                let lag = self.probe[b].abs_diff(self.probe[a]);
                by_lag.entry(lag).or_default().push((a, b));
            }
        }
        let mut worst = 0.0f64;
        for pairs in by_lag.values().filter(|v| v.len() >= 2) {
            let mean = pairs
                .iter()
                .map(|&(a, b)| self.empirical_cov[a][b])
                .sum::<f64>()
                / pairs.len() as f64;
            for &(a, b) in pairs {
                let z = z_score(
                    self.empirical_cov[a][b] - mean,
                    self.cov_se[a][b],
                    mean.abs(),
                );
                worst = worst.max(z.abs());
            }
        }
        worst
    }
}

struct MomentBlock {
    m1: Vec<CompensatedSum>,
    m2: Vec<CompensatedSum>,
    p1: Vec<CompensatedSum>,
    p2: Vec<CompensatedSum>,
}

impl MomentBlock {
    fn new(p: usize) -> Self {
        let pairs = p * (p + 1) / 2;
        MomentBlock {
            m1: vec![CompensatedSum::new(); p],
            m2: vec![CompensatedSum::new(); p],
            p1: vec![CompensatedSum::new(); pairs],
            p2: vec![CompensatedSum::new(); pairs],
        }
    }

    fn merge(&mut self, other: &MomentBlock) {
        for (a, b) in self.m1.iter_mut().zip(&other.m1) {
            a.merge(b);
        }
        for (a, b) in self.m2.iter_mut().zip(&other.m2) {
            a.merge(b);
        }
        for (a, b) in self.p1.iter_mut().zip(&other.p1) {
            a.merge(b);
        }
        for (a, b) in self.p2.iter_mut().zip(&other.p2) {
            a.merge(b);
        }
    }
}

fn pair_index(p: usize, a: usize, b: usize) -> usize {
    a * p - a * (a + 1) / 2 + b
}

/// Estimate probe means and covariances over `cfg.trials` draws and score
/// each entry against the closed-form model. Standard errors come from the
/// sample variance of the per-trial values and products.
pub fn mc_moments(cfg: &ExperimentConfig) -> Result<MomentsReport> {
    cfg.validate()?;
    let p = cfg.probe.len();
    if p == 0 || p > 64 {
        return Err(Error::invalid(
            "probe",
            "need between 1 and 64 probe components",
        ));
    }
    if cfg.trials < 1_000 {
        return Err(Error::invalid(
            "trials",
            "moment validation needs at least 1000 trials",
        ));
    }
    let x = cfg.resolve_signal()?;
    let model = model_for(&cfg.spec, &x)?;
    let model_mean = model.mean_probe(&cfg.probe)?;
    let model_cov = model.cov_submatrix(&cfg.probe)?;

    let spec = &cfg.spec;
    let probe = &cfg.probe;
    let xr = &x;
    let blocks = run_blocks(cfg.trials, |start, end| {
        let mut acc = MomentBlock::new(p);
        let mut vals = vec![0.0; p];
        for trial in start..end {
            let d = sensing::draw(spec, trial_seed(cfg.base_seed, trial))?;
            let z = sensing::mixture_vector(spec, &d, xr)?;
            for (slot, &j) in vals.iter_mut().zip(probe) {
                *slot = z[j - 1];
            }
            for a in 0..p {
                acc.m1[a].add(vals[a]);
                acc.m2[a].add(vals[a] * vals[a]);
                for b in a..p {
                    let prod = vals[a] * vals[b];
                    let idx = pair_index(p, a, b);
                    acc.p1[idx].add(prod);
                    acc.p2[idx].add(prod * prod);
                }
            }
        }
        Ok(acc)
    })?;
    let mut total = MomentBlock::new(p);
    for block in &blocks {
        total.merge(block);
    }

    let t = cfg.trials as f64;
    let mut empirical_mean = vec![0.0; p];
    let mut mean_z = vec![0.0; p];
    for a in 0..p {
        let mean = total.m1[a].value() / t;
        let var = (total.m2[a].value() / t - mean * mean).max(0.0) * t / (t - 1.0);
        let se = (var / t).sqrt();
        empirical_mean[a] = mean;
        mean_z[a] = z_score(
            mean - model_mean[a],
            se,
            model_mean[a].abs().max(mean.abs()),
        );
    }
    let mut empirical_cov = vec![vec![0.0; p]; p];
    let mut cov_se = vec![vec![0.0; p]; p];
    let mut cov_z = vec![vec![0.0; p]; p];
    for a in 0..p {
        for b in a..p {
            let idx = pair_index(p, a, b);
            let prod_mean = total.p1[idx].value() / t;
            let prod_var =
                (total.p2[idx].value() / t - prod_mean * prod_mean).max(0.0) * t / (t - 1.0);
            let se = (prod_var / t).sqrt();
            let emp = prod_mean - empirical_mean[a] * empirical_mean[b];
            let z = z_score(
                emp - model_cov[a][b],
                se,
                model_cov[a][b].abs().max(emp.abs()),
            );
            empirical_cov[a][b] = emp;
            empirical_cov[b][a] = emp;
            cov_se[a][b] = se;
            cov_se[b][a] = se;
            cov_z[a][b] = z;
            cov_z[b][a] = z;
        }
    }

    Ok(MomentsReport {
        trials: cfg.trials,
        probe: cfg.probe.clone(),
        empirical_mean,
        model_mean,
        mean_z,
        empirical_cov,
        model_cov,
        cov_se,
        cov_z,
    })
}

/// One tail-check row: exceedance of `t` model standard deviations for one
/// probe component.
#[derive(Debug, Clone, Serialize)]
pub struct TailRow {
    pub component: usize,
    pub t: f64,
    pub empirical: f64,
    pub bound: f64,
    pub capped_bound: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailsReport {
    pub trials: u64,
    pub rows: Vec<TailRow>,
}

impl TailsReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Count empirical exceedances `|z_j - mu_j| > t sigma_j` over the trial
/// budget and compare against the per-mode bound, capped at one, plus a
/// three-standard-error Monte Carlo slack.
pub fn mc_tails(cfg: &ExperimentConfig) -> Result<TailsReport> {
    cfg.validate()?;
    let p = cfg.probe.len();
    if p == 0 {
        return Err(Error::invalid("probe", "tail checks need probe components"));
    }
    if cfg.t_grid.is_empty() {
        return Err(Error::invalid(
            "t_grid",
            "tail checks need a deviation grid",
        ));
    }
    if cfg.trials < 100_000 {
        return Err(Error::invalid(
            "trials",
            "tail validation needs at least 100000 trials",
        ));
    }
    let x = cfg.resolve_signal()?;
    let model = model_for(&cfg.spec, &x)?;
    let mut mus = vec![0.0; p];
    let mut sigmas = vec![0.0; p];
    for (a, &j) in cfg.probe.iter().enumerate() {
        mus[a] = model.mean(j)?;
        let var = model.var(j)?;
        if var <= 0.0 {
            return Err(Error::Undefined(format!(
                "component {j} is deterministic; its tail check is vacuous"
            )));
        }
        sigmas[a] = var.sqrt();
    }
    let bounds: Vec<TailBound> = match cfg.spec.mode {
        Mode::Lr => vec![TailBound::SignDiagonal; p],
        Mode::Rc => {
            let b = TailBound::convolution(tailbounds::tau_rc(&x)?)?;
            vec![b; p]
        }
        Mode::Gr => cfg
            .probe
            .iter()
            .map(|&j| {
                TailBound::permutation(tailbounds::tau_gr(&cfg.spec.transform, j, &x)?, cfg.spec.n)
            })
            .collect::<Result<Vec<_>>>()?,
        Mode::Rst => {
            return Err(Error::Unsupported(
                "the baseline mode has no tail bound".into(),
            ))
        }
    };

    let spec = &cfg.spec;
    let probe = &cfg.probe;
    let grid = &cfg.t_grid;
    let xr = &x;
    let musr = &mus;
    let sigmasr = &sigmas;
    let blocks = run_blocks(cfg.trials, |start, end| {
        let mut counts = vec![0u64; p * grid.len()];
        for trial in start..end {
            let d = sensing::draw(spec, trial_seed(cfg.base_seed, trial))?;
            let z = sensing::mixture_vector(spec, &d, xr)?;
            for (a, &j) in probe.iter().enumerate() {
                let dev = (z[j - 1] - musr[a]).abs();
                for (g, &t) in grid.iter().enumerate() {
                    if dev > t * sigmasr[a] {
                        counts[a * grid.len() + g] += 1;
                    }
                }
            }
        }
        Ok(counts)
    })?;
    let mut counts = vec![0u64; p * grid.len()];
    for block in &blocks {
        for (total, &c) in counts.iter_mut().zip(block) {
            *total += c;
        }
    }

    let trials = cfg.trials as f64;
    let mut rows = Vec::with_capacity(p * grid.len());
    for (a, &j) in cfg.probe.iter().enumerate() {
        for (g, &t) in grid.iter().enumerate() {
            let empirical = counts[a * grid.len() + g] as f64 / trials;
            let bound = bounds[a].eval(t);
            let capped = bound.min(1.0);
            let slack = 3.0 * (capped / trials).sqrt();
            rows.push(TailRow {
                component: j,
                t,
                empirical,
                bound,
                capped_bound: capped,
                slack,
                pass: empirical <= capped + slack,
            });
        }
    }
    Ok(TailsReport {
        trials: cfg.trials,
        rows,
    })
}

/// Normal quantile pairs and their Pearson correlation.
#[derive(Debug, Clone, Serialize)]
pub struct QqReport {
    pub samples: usize,
    pub normal_q: Vec<f64>,
    pub sample_q: Vec<f64>,
    pub correlation: f64,
}

/// Normalize `samples` by their empirical mean and variance and pair
/// sample quantiles with standard normal quantiles at the (i - 1/2)/G
/// plotting positions of a [`QQ_GRID`]-point grid.
pub fn qq_from_samples(samples: &[f64]) -> Result<QqReport> {
    let count = samples.len();
    if count < QQ_GRID {
        return Err(Error::invalid(
            "samples",
            "need at least one sample per quantile grid point",
        ));
    }
    let mut mean = CompensatedSum::new();
    for &v in samples {
        if !v.is_finite() {
            return Err(Error::invalid("samples", "quantile samples must be finite"));
        }
        mean.add(v);
    }
    let mean = mean.value() / count as f64;
    let mut var = CompensatedSum::new();
    for &v in samples {
        var.add((v - mean) * (v - mean));
    }
    let var = var.value() / (count as f64 - 1.0);
    if !(var > 0.0 && var.is_finite()) {
        return Err(Error::Undefined("sample variance is degenerate".into()));
    }
    let scale = var.sqrt();
    let mut sorted: Vec<f64> = samples.iter().map(|&v| (v - mean) / scale).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut normal_q = Vec::with_capacity(QQ_GRID);
    let mut sample_q = Vec::with_capacity(QQ_GRID);
    for i in 1..=QQ_GRID {
        let pos = (i as f64 - 0.5) / QQ_GRID as f64;
        normal_q.push(math::normal_quantile(pos));
        let idx = ((pos * count as f64 - 0.5).round().max(0.0) as usize).min(count - 1);
        sample_q.push(sorted[idx]);
    }
    let correlation = pearson(&normal_q, &sample_q)?;
    Ok(QqReport {
        samples: count,
        normal_q,
        sample_q,
        correlation,
    })
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let count = a.len() as f64;
    let ma = a.iter().sum::<f64>() / count;
    let mb = b.iter().sum::<f64>() / count;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    let mut sab = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
        sab += (x - ma) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Err(Error::Undefined("quantile spread is degenerate".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Pool measurement vectors over `cfg.trials` seeds and return Q-Q data.
///
/// The sign-diagonal mode measures the mean-subtracted signal; the
/// permutation mode drops measurements of component 1, whose mixture value
/// is deterministic.
pub fn qq_data(cfg: &ExperimentConfig) -> Result<QqReport> {
    cfg.validate()?;
    let x = cfg.resolve_signal()?;
    let x = match cfg.spec.mode {
        Mode::Lr => {
            let mean = x.mean();
            Signal::new(x.samples().iter().map(|&v| v - mean).collect())?
        }
        _ => x,
    };
    let spec = &cfg.spec;
    let xr = &x;
    let blocks = run_blocks(cfg.trials, |start, end| {
        let mut pool = Vec::with_capacity(((end - start) as usize) * spec.m);
        for trial in start..end {
            let d = sensing::draw(spec, trial_seed(cfg.base_seed, trial))?;
            let z = sensing::mixture_vector(spec, &d, xr)?;
            for &c in &d.selection_indices {
                if spec.mode == Mode::Gr && c == 1 {
                    continue;
                }
                pool.push(z[c - 1]);
            }
        }
        Ok(pool)
    })?;
    let samples: Vec<f64> = blocks.into_iter().flatten().collect();
    qq_from_samples(&samples)
}

/// Exact probability ratio between distinct-index selection and
/// independent selection: the product of (1 - k/n) for k below m,
/// evaluated in log space.
pub fn replacement_ratio(n: usize, m: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n", "need a positive component count"));
    }
    if m == 0 || m > n {
        return Err(Error::invalid("m", "selection count must be in 1..=n"));
    }
    let mut log_sum = CompensatedSum::new();
    for k in 0..m {
        log_sum.add(math::ln_1p(-(k as f64) / n as f64));
    }
    Ok(math::exp(log_sum.value()))
}

/// Exact ratio plus a paired Monte Carlo comparison of the two selection
/// schemes.
#[derive(Debug, Clone, Serialize)]
pub struct ReplacementReport {
    pub n: usize,
    pub m: usize,
    pub trials: u64,
    pub exact_ratio: f64,
    /// Number of leading measurement coordinates probed.
    pub probe_dim: usize,
    /// Empirical joint CDF at the per-coordinate medians, selection with
    /// replacement.
    pub joint_with: f64,
    /// Same threshold, selection without replacement.
    pub joint_without: f64,
    /// joint_without / joint_with.
    pub empirical_ratio: f64,
}

/// Compare the two selection schemes on a sign-diagonal sensing run over a
/// smooth signal: exact product ratio plus the ratio of empirical joint
/// CDFs at the per-coordinate medians of the with-replacement run.
pub fn replacement_study(
    n: usize,
    m: usize,
    trials: u64,
    base_seed: u64,
) -> Result<ReplacementReport> {
    let exact_ratio = replacement_ratio(n, m)?;
    if trials == 0 {
        return Err(Error::invalid("trials", "need at least one trial"));
    }
    let probe_dim = m.min(4);
    let x = synth_signal(&SynthSignal::Smooth, n, base_seed)?;
    let with_spec = SensingSpec {
        mode: Mode::Lr,
        transform: TransformOp::dct(n)?,
        n,
        m,
        selection: sensing::Selection::WithReplacement,
        seed: base_seed,
    };
    let without_spec = SensingSpec {
        selection: sensing::Selection::WithoutReplacement,
        ..with_spec.clone()
    };

    let wsr = &with_spec;
    let osr = &without_spec;
    let xr = &x;
    let blocks = run_blocks(trials, |start, end| {
        let mut rows = Vec::with_capacity((end - start) as usize);
        for trial in start..end {
            let seed = trial_seed(base_seed, trial);
            let dw = sensing::draw(wsr, seed)?;
            let dn = sensing::draw(osr, seed)?;
            let yw = sensing::measure(wsr, &dw, xr)?;
            let yo = sensing::measure(osr, &dn, xr)?;
            rows.push((yw[..probe_dim].to_vec(), yo[..probe_dim].to_vec()));
        }
        Ok(rows)
    })?;
    let rows: Vec<(Vec<f64>, Vec<f64>)> = blocks.into_iter().flatten().collect();

    let mut medians = vec![0.0; probe_dim];
    for (c, median) in medians.iter_mut().enumerate() {
        let mut column: Vec<f64> = rows.iter().map(|(yw, _)| yw[c]).collect();
        column.sort_by(|a, b| a.partial_cmp(b).unwrap());
        *median = column[(column.len() - 1) / 2];
    }
    let below = |y: &[f64]| y.iter().zip(&medians).all(|(&v, &med)| v <= med);
    let hits_with = rows.iter().filter(|(yw, _)| below(yw)).count();
    let hits_without = rows.iter().filter(|(_, yo)| below(yo)).count();
    if hits_with == 0 {
        return Err(Error::Undefined(
            "no with-replacement trial landed below the median probe".into(),
        ));
    }
    let joint_with = hits_with as f64 / trials as f64;
    let joint_without = hits_without as f64 / trials as f64;
    Ok(ReplacementReport {
        n,
        m,
        trials,
        exact_ratio,
        probe_dim,
        joint_with,
        joint_without,
        empirical_ratio: joint_without / joint_with,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_train_spikes_sit_at_unit_residues() {
        let x = synth_signal(&SynthSignal::PulseTrain { d: 4 }, 16, 0).unwrap();
        let nonzero: Vec<usize> = x
            .samples()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(k, _)| k + 1)
            .collect();
        assert_eq!(nonzero, vec![1, 5, 9, 13]);
    }

    #[test]
    fn synthetic_signals_are_deterministic_in_their_seed() {
        for kind in [
            SynthSignal::Smooth,
            SynthSignal::Ar1 { rho: 0.8 },
            SynthSignal::SparseIn {
                transform: TransformOp::wht(32).unwrap(),
                k: 5,
            },
        ] {
            let a = synth_signal(&kind, 32, 9).unwrap();
            let b = synth_signal(&kind, 32, 9).unwrap();
            assert_eq!(a.samples(), b.samples());
            let c = synth_signal(&kind, 32, 10).unwrap();
            assert_ne!(a.samples(), c.samples());
        }
    }

    #[test]
    fn sparse_synthesis_transforms_to_exactly_k_nonzeros() {
        let t = TransformOp::wht(64).unwrap();
        let x = synth_signal(
            &SynthSignal::SparseIn {
                transform: t.clone(),
                k: 6,
            },
            64,
            3,
        )
        .unwrap();
        let coeffs = t.apply_forward(x.samples()).unwrap();
        let big = coeffs.iter().filter(|c| c.abs() > 0.5).count();
        let small = coeffs.iter().filter(|c| c.abs() < 1e-10).count();
        assert_eq!(big, 6);
        assert_eq!(small, 64 - 6);
    }

    #[test]
    fn exact_replacement_ratio_matches_direct_products() {
        assert!((replacement_ratio(10, 2).unwrap() - 0.9).abs() < 1e-15);
        let direct: f64 = (0..10).map(|k| 1.0 - k as f64 / 1e4).product();
        let ratio = replacement_ratio(10_000, 10).unwrap();
        assert!((ratio - direct).abs() < 1e-12);
        assert!((ratio - 0.99551).abs() < 2e-5);
    }

    #[test]
    fn trial_blocks_partition_the_budget() {
        assert_eq!(block_ranges(1), vec![(0, 1)]);
        assert_eq!(block_ranges(256), vec![(0, 256)]);
        assert_eq!(block_ranges(600), vec![(0, 256), (256, 512), (512, 600)]);
    }

    #[test]
    fn quantile_grid_uses_centered_plotting_positions() {
        let samples: Vec<f64> = (1..=4096)
            .map(|i| math::normal_quantile((i as f64 - 0.5) / 4096.0))
            .collect();
        let report = qq_from_samples(&samples).unwrap();
        assert_eq!(report.normal_q.len(), QQ_GRID);
        assert!((report.normal_q[QQ_GRID / 2 - 1] + report.normal_q[QQ_GRID / 2]).abs() < 1e-12);
        assert!(report.correlation > 0.99999, "corr {}", report.correlation);
    }

    #[test]
    fn degenerate_samples_are_rejected() {
        let flat = vec![2.5; 4096];
        assert!(matches!(qq_from_samples(&flat), Err(Error::Undefined(_))));
    }
}
