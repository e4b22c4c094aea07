//! Sensing randomness and measurement generation.
//!
//! A measurement run is described by a [`SensingSpec`] (mode, transform,
//! sizes, selection policy, seed). [`draw`] materializes one instance of
//! the randomness as a [`SensingDraw`], [`mixture_vector`] computes the
//! full mixture `z = √(n/m)·W·R·x`, and [`measure`] keeps the selected
//! components `y_k = z_{c(k)}`.
//!
//! Modes:
//!
//! * `Lr`: local randomizer, a diagonal of IID signs.
//! * `Gr`: global randomizer, a uniform permutation.
//! * `Rc`: random convolution `√(n/m)·F*·diag(b)·F` with a conjugate
//!   symmetric unit-modulus spectrum `b`, so the output is real.
//! * `Rst`: no randomizer; selection is the only randomness.
//!
//! Draws are deterministic functions of `(spec, seed)`: each component
//! (signs, permutation, phases, selection) consumes its own named ChaCha
//! stream, so a decoder can rebuild exactly the selection pattern from the
//! seed in a bitstream header without replaying the other components.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::rng::{stream_rng, Stream};
use crate::transforms::TransformOp;

/// A real signal with cached summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    x_max: Option<f64>,
    mean: f64,
    norm_l2: f64,
}

impl Signal {
    /// Wrap a sample vector; rejects empty and non-finite input.
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        Self::build(samples, None)
    }

    /// Wrap a sample vector with a declared amplitude bound.
    pub fn with_amplitude_bound(samples: Vec<f64>, x_max: f64) -> Result<Self> {
        Self::build(samples, Some(x_max))
    }

    fn build(samples: Vec<f64>, x_max: Option<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("samples", "signal must be nonempty"));
        }
        let mut peak = 0.0f64;
        for (i, &v) in samples.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::invalid(
                    "samples",
                    format!("sample {i} is not finite"),
                ));
            }
            peak = peak.max(v.abs());
        }
        if let Some(bound) = x_max {
            if !(bound >= 0.0) {
                return Err(Error::invalid(
                    "x_max",
                    "amplitude bound must be nonnegative",
                ));
            }
            if peak > bound {
                return Err(Error::invalid(
                    "x_max",
                    format!("max |x_k| = {peak} exceeds declared bound {bound}"),
                ));
            }
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let norm_l2 = samples.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(Signal {
            samples,
            x_max,
            mean,
            norm_l2,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample mean x̄.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// ‖x‖₂.
    pub fn norm_l2(&self) -> f64 {
        self.norm_l2
    }

    /// ‖x‖₂².
    pub fn energy(&self) -> f64 {
        self.norm_l2 * self.norm_l2
    }

    pub fn x_max(&self) -> Option<f64> {
        self.x_max
    }
}

/// Extend a signal with zeros to `target_n` samples.
pub fn zero_pad(x: &Signal, target_n: usize) -> Result<Signal> {
    if target_n < x.len() {
        return Err(Error::invalid(
            "target_n",
            format!("cannot shrink signal of length {} to {target_n}", x.len()),
        ));
    }
    let mut samples = x.samples.clone();
    samples.resize(target_n, 0.0);
    match x.x_max {
        Some(bound) => Signal::with_amplitude_bound(samples, bound),
        None => Signal::new(samples),
    }
}

/// Randomization mode of the sensing operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Local randomizer: diagonal IID signs.
    Lr,
    /// Global randomizer: uniform permutation.
    Gr,
    /// Random convolution via the complex DFT.
    Rc,
    /// Randomly sampled transform, no randomizer.
    Rst,
}

/// Whether selected component indices may repeat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    WithReplacement,
    WithoutReplacement,
}

/// Full description of a measurement operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingSpec {
    pub mode: Mode,
    /// Ignored for `Rc`, which fixes the complex DFT.
    pub transform: TransformOp,
    pub n: usize,
    pub m: usize,
    pub selection: Selection,
    pub seed: u64,
}

impl SensingSpec {
    /// Check structural validity (orders, sizes, selection feasibility).
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n", "must be positive"));
        }
        if self.m == 0 {
            return Err(Error::invalid("m", "must be positive"));
        }
        if self.selection == Selection::WithoutReplacement && self.m > self.n {
            return Err(Error::invalid(
                "m",
                format!(
                    "without replacement requires m <= n, got m={} n={}",
                    self.m, self.n
                ),
            ));
        }
        if self.mode == Mode::Rc {
            if !self.n.is_multiple_of(2) {
                return Err(Error::invalid("n", "random convolution requires even n"));
            }
        } else {
            self.transform.validate()?;
            if self.transform.order() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    got: self.transform.order(),
                });
            }
        }
        Ok(())
    }

    /// Mixture scaling factor √(n/m).
    pub fn scale(&self) -> f64 {
        (self.n as f64 / self.m as f64).sqrt()
    }

    /// Materialize the draw for this spec's own seed.
    pub fn draw(&self) -> Result<SensingDraw> {
        draw(self, self.seed)
    }
}

/// The mode-specific randomizer of one draw.
#[derive(Debug, Clone, PartialEq)]
pub enum Randomizer {
    /// IID ±1 diagonal (`Lr`).
    Signs(Vec<i8>),
    /// `permutation[k]` is the 1-based image π(k+1) (`Gr`).
    Permutation(Vec<usize>),
    /// Conjugate symmetric unit-modulus spectrum (`Rc`).
    Phases(Vec<Complex64>),
    /// No randomizer (`Rst`).
    Identity,
}

/// One materialized instance of the sensing randomness.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingDraw {
    pub randomizer: Randomizer,
    /// 1-based component indices c(1..m).
    pub selection_indices: Vec<usize>,
}

/// True when spectrum position `k` (1-based) must be its own conjugate,
/// which forces a real ±1 entry: k = 1 and, for even n, k = n/2 + 1.
pub fn self_symmetric(n: usize, k: usize) -> bool {
    k == 1 || (n.is_multiple_of(2) && k == n / 2 + 1)
}

/// Materialize the randomness for `spec` under an explicit seed.
pub fn draw(spec: &SensingSpec, seed: u64) -> Result<SensingDraw> {
    spec.validate()?;
    let n = spec.n;
    let randomizer = match spec.mode {
        Mode::Lr => {
            let mut rng = stream_rng(seed, Stream::Rademacher);
            Randomizer::Signs(
                (0..n)
                    .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
                    .collect(),
            )
        }
        Mode::Gr => {
            let mut rng = stream_rng(seed, Stream::Permutation);
            let mut perm: Vec<usize> = (1..=n).collect();
            // Fisher-Yates.
            for k in 0..n.saturating_sub(1) {
                let r = rng.gen_range(k..n);
                perm.swap(k, r);
            }
            Randomizer::Permutation(perm)
        }
        Mode::Rc => {
            let mut rng = stream_rng(seed, Stream::RcPhases);
            let mut b = vec![Complex64::new(0.0, 0.0); n];
            for k in 1..=n / 2 + 1 {
                if self_symmetric(n, k) {
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    b[k - 1] = Complex64::new(sign, 0.0);
                } else {
                    let angle = rng.gen::<f64>() * std::f64::consts::TAU;
                    b[k - 1] = Complex64::new(angle.cos(), angle.sin());
                }
            }
            // Mirror the upper half: b_k = conj(b_{n+2-k}).
            for k in n / 2 + 2..=n {
                b[k - 1] = b[n + 1 - k].conj();
            }
            Randomizer::Phases(b)
        }
        Mode::Rst => Randomizer::Identity,
    };

    let mut rng = stream_rng(seed, Stream::Selection);
    let selection_indices = match spec.selection {
        Selection::WithReplacement => (0..spec.m).map(|_| rng.gen_range(1..=n)).collect(),
        Selection::WithoutReplacement => {
            // Partial Fisher-Yates over {1..n}, materialized sparsely so the
            // cost is O(m) in memory.
            let mut displaced: std::collections::HashMap<usize, usize> = Default::default();
            let mut picks = Vec::with_capacity(spec.m);
            for k in 0..spec.m {
                let r = rng.gen_range(k..n);
                let value = *displaced.get(&r).unwrap_or(&(r + 1));
                let at_k = *displaced.get(&k).unwrap_or(&(k + 1));
                displaced.insert(r, at_k);
                picks.push(value);
            }
            picks
        }
    };

    Ok(SensingDraw {
        randomizer,
        selection_indices,
    })
}

/// Mixture vector `z = √(n/m)·W·R·x` for the draw's randomizer.
pub fn mixture_vector(spec: &SensingSpec, d: &SensingDraw, x: &Signal) -> Result<Vec<f64>> {
    spec.validate()?;
    if x.len() != spec.n {
        return Err(Error::DimensionMismatch {
            expected: spec.n,
            got: x.len(),
        });
    }
    let scale = spec.scale();
    match (&spec.mode, &d.randomizer) {
        (Mode::Lr, Randomizer::Signs(signs)) => {
            if signs.len() != spec.n {
                return Err(Error::DimensionMismatch {
                    expected: spec.n,
                    got: signs.len(),
                });
            }
            let flipped: Vec<f64> = x
                .samples()
                .iter()
                .zip(signs)
                .map(|(&v, &s)| v * s as f64)
                .collect();
            let mut z = spec.transform.apply_forward(&flipped)?;
            for v in &mut z {
                *v *= scale;
            }
            Ok(z)
        }
        (Mode::Gr, Randomizer::Permutation(perm)) => {
            if perm.len() != spec.n {
                return Err(Error::DimensionMismatch {
                    expected: spec.n,
                    got: perm.len(),
                });
            }
            // z_j = Σ_k w_{j,π(k)} x_k: scatter x through π, then transform.
            let mut shuffled = vec![0.0; spec.n];
            for (k, &image) in perm.iter().enumerate() {
                shuffled[image - 1] = x.samples()[k];
            }
            let mut z = spec.transform.apply_forward(&shuffled)?;
            for v in &mut z {
                *v *= scale;
            }
            Ok(z)
        }
        (Mode::Rc, Randomizer::Phases(b)) => {
            if b.len() != spec.n {
                return Err(Error::DimensionMismatch {
                    expected: spec.n,
                    got: b.len(),
                });
            }
            let n = spec.n;
            let mut buf: Vec<Complex64> = x
                .samples()
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect();
            fft::forward(&mut buf);
            for (v, &phase) in buf.iter_mut().zip(b) {
                *v *= phase;
            }
            fft::inverse(&mut buf);
            let post_scale = scale / n as f64;
            let mut max_imag = 0.0f64;
            let mut z = Vec::with_capacity(n);
            for v in &buf {
                let scaled = v * post_scale;
                max_imag = max_imag.max(scaled.im.abs());
                z.push(scaled.re);
            }
            let limit = 1e-9 * x.norm_l2();
            if max_imag > limit {
                return Err(Error::NotReal { max_imag, limit });
            }
            Ok(z)
        }
        (Mode::Rst, Randomizer::Identity) => {
            let mut z = spec.transform.apply_forward(x.samples())?;
            for v in &mut z {
                *v *= scale;
            }
            Ok(z)
        }
        _ => Err(Error::invalid(
            "draw",
            "randomizer kind does not match the spec mode",
        )),
    }
}

/// Selected measurements `y_k = z_{c(k)}`.
pub fn measure(spec: &SensingSpec, d: &SensingDraw, x: &Signal) -> Result<Vec<f64>> {
    let z = mixture_vector(spec, d, x)?;
    d.selection_indices
        .iter()
        .map(|&c| {
            z.get(c - 1).copied().ok_or(Error::IndexOutOfRange {
                index: c,
                n: spec.n,
            })
        })
        .collect()
}
