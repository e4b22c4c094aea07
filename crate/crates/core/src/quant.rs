//! Scalar quantizers for Gaussian-modeled transmitted variables.
//!
//! Two families: uniform with a range chosen by inverting a tail bound at
//! a saturation budget, and Lloyd-Max fitted to the Gaussian model. Both
//! reserve two codewords for out-of-range values (index 0 below, index
//! `levels + 1` above); unsaturated cells are indices `1..=levels`.
//!
//! Everything here runs on both the encoder and the decoder, which must
//! derive identical boundaries from identical side information; all math
//! flows through the frozen kernel and iteration rules are fixed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::tailbounds::TailBound;

/// Gaussian model of one transmitted variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel {
    pub mean: f64,
    pub sigma: f64,
}

impl GaussianModel {
    pub fn new(mean: f64, sigma: f64) -> Result<Self> {
        if !mean.is_finite() || !sigma.is_finite() {
            return Err(Error::invalid("model", "mean and sigma must be finite"));
        }
        if sigma < 0.0 {
            return Err(Error::invalid("sigma", "must be nonnegative"));
        }
        Ok(GaussianModel { mean, sigma })
    }

    pub fn standard() -> Self {
        GaussianModel {
            mean: 0.0,
            sigma: 1.0,
        }
    }
}

/// A concrete scalar quantizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuantizerSpec {
    /// Equal-width cells over `[lo, hi]`, reproductions at midpoints.
    Uniform { levels: u32, lo: f64, hi: f64 },
    /// Nearest-reproduction cells; `boundaries` are the `levels - 1`
    /// interior midpoints, outer cells unbounded (never saturate).
    LloydMax {
        boundaries: Vec<f64>,
        reps: Vec<f64>,
    },
    /// Point-mass model: a single codeword.
    Degenerate { value: f64 },
}

impl QuantizerSpec {
    /// Unsaturated codeword count.
    pub fn levels(&self) -> u32 {
        match self {
            QuantizerSpec::Uniform { levels, .. } => *levels,
            QuantizerSpec::LloydMax { reps, .. } => reps.len() as u32,
            QuantizerSpec::Degenerate { .. } => 1,
        }
    }

    /// Total codeword count including the two saturation codewords.
    pub fn alphabet_size(&self) -> u32 {
        match self {
            QuantizerSpec::Degenerate { .. } => 1,
            _ => self.levels() + 2,
        }
    }

    /// Cell width of a uniform quantizer.
    pub fn step(&self) -> Option<f64> {
        match self {
            QuantizerSpec::Uniform { levels, lo, hi } => Some((hi - lo) / *levels as f64),
            _ => None,
        }
    }

    /// Finite region edges, lowest first (used for self-check hashing).
    pub fn edges(&self) -> Vec<f64> {
        match self {
            QuantizerSpec::Uniform { levels, lo, hi } => {
                let step = (hi - lo) / *levels as f64;
                (0..=*levels).map(|i| lo + i as f64 * step).collect()
            }
            QuantizerSpec::LloydMax { boundaries, .. } => boundaries.clone(),
            QuantizerSpec::Degenerate { .. } => Vec::new(),
        }
    }

    /// Reproduction values of every codeword, saturation included.
    pub fn reproductions(&self) -> Vec<f64> {
        match self {
            QuantizerSpec::Uniform { levels, lo, hi } => {
                let step = (hi - lo) / *levels as f64;
                let mut out = Vec::with_capacity(*levels as usize + 2);
                out.push(lo - 0.5 * step);
                for c in 1..=*levels {
                    out.push(lo + (c as f64 - 0.5) * step);
                }
                out.push(hi + 0.5 * step);
                out
            }
            QuantizerSpec::LloydMax { reps, .. } => {
                let mut out = Vec::with_capacity(reps.len() + 2);
                out.push(reps[0]);
                out.extend_from_slice(reps);
                out.push(*reps.last().unwrap());
                out
            }
            QuantizerSpec::Degenerate { value } => vec![*value],
        }
    }

    /// Codeword of `v` under the nearest-reproduction rule with explicit
    /// saturation below/above the range.
    pub fn quantize(&self, v: f64) -> u32 {
        match self {
            QuantizerSpec::Degenerate { .. } => 0,
            QuantizerSpec::Uniform { levels, lo, hi } => {
                if v.is_nan() {
                    return levels + 1;
                }
                if v < *lo {
                    return 0;
                }
                if v > *hi {
                    return levels + 1;
                }
                let step = (hi - lo) / *levels as f64;
                let cell = ((v - lo) / step) as u32;
                cell.min(levels - 1) + 1
            }
            QuantizerSpec::LloydMax { boundaries, reps } => {
                if v.is_nan() {
                    return reps.len() as u32 + 1;
                }
                boundaries.partition_point(|&b| b < v) as u32 + 1
            }
        }
    }

    /// Reproduction value of codeword `c`.
    pub fn dequantize(&self, c: u32) -> Result<f64> {
        let alphabet = self.alphabet_size();
        if c >= alphabet {
            return Err(Error::BadCodeword {
                codeword: c,
                alphabet,
            });
        }
        match self {
            QuantizerSpec::Degenerate { value } => Ok(*value),
            QuantizerSpec::Uniform { levels, lo, hi } => {
                let step = (hi - lo) / *levels as f64;
                Ok(if c == 0 {
                    lo - 0.5 * step
                } else if c == levels + 1 {
                    hi + 0.5 * step
                } else {
                    lo + (c as f64 - 0.5) * step
                })
            }
            QuantizerSpec::LloydMax { reps, .. } => {
                let idx = (c as usize).clamp(1, reps.len()) - 1;
                Ok(reps[idx])
            }
        }
    }

    pub fn is_saturated(&self, c: u32) -> bool {
        match self {
            QuantizerSpec::Degenerate { .. } => false,
            _ => c == 0 || c == self.levels() + 1,
        }
    }
}

/// Uniform quantizer over `[μ − t*σ, μ + t*σ]` with `t*` from inverting
/// `bound` at the saturation budget.
pub fn design_uniform(
    g: &GaussianModel,
    levels: u32,
    delta_sat: f64,
    bound: &TailBound,
) -> Result<QuantizerSpec> {
    if levels < 2 {
        return Err(Error::invalid("levels", "need at least 2 cells"));
    }
    if !(delta_sat > 0.0 && delta_sat < 1.0) {
        return Err(Error::invalid("delta_sat", "must lie in (0, 1)"));
    }
    if g.sigma == 0.0 {
        return Ok(QuantizerSpec::Degenerate { value: g.mean });
    }
    let t_star = bound.invert(delta_sat)?;
    Ok(QuantizerSpec::Uniform {
        levels,
        lo: g.mean - t_star * g.sigma,
        hi: g.mean + t_star * g.sigma,
    })
}

/// Uniform quantizer with a prescribed cell width: the cell count is the
/// smallest one whose span covers `±t*σ`, so different models can share an
/// exactly equal step.
pub fn design_uniform_step(
    g: &GaussianModel,
    step: f64,
    delta_sat: f64,
    bound: &TailBound,
) -> Result<QuantizerSpec> {
    if !(step > 0.0) {
        return Err(Error::invalid("step", "must be positive"));
    }
    if !(delta_sat > 0.0 && delta_sat < 1.0) {
        return Err(Error::invalid("delta_sat", "must lie in (0, 1)"));
    }
    if g.sigma == 0.0 {
        return Ok(QuantizerSpec::Degenerate { value: g.mean });
    }
    let t_star = bound.invert(delta_sat)?;
    let span = 2.0 * t_star * g.sigma;
    let levels = ((span / step).ceil() as u32).max(2);
    let half = 0.5 * levels as f64 * step;
    Ok(QuantizerSpec::Uniform {
        levels,
        lo: g.mean - half,
        hi: g.mean + half,
    })
}

/// Gaussian probability of the standardized interval `(za, zb)`: survival
/// functions when the interval sits right of zero, CDFs otherwise, so the
/// far tails keep relative accuracy.
fn interval_prob(za: f64, zb: f64) -> f64 {
    if za >= 0.0 {
        math::normal_sf(za) - math::normal_sf(zb)
    } else {
        math::normal_cdf(zb) - math::normal_cdf(za)
    }
}

/// Mean of the Gaussian model conditioned on `(a, b)`; edges may be
/// infinite. Falls back to the interval midpoint when the cell carries no
/// numerically representable mass.
pub fn truncated_normal_centroid(g: &GaussianModel, a: f64, b: f64) -> f64 {
    let za = (a - g.mean) / g.sigma;
    let zb = (b - g.mean) / g.sigma;
    let p = interval_prob(za, zb);
    if p <= 1e-300 {
        return if a.is_finite() && b.is_finite() {
            0.5 * (a + b)
        } else if a.is_finite() {
            a
        } else {
            b
        };
    }
    let pdf_a = if za.is_finite() {
        math::normal_pdf(za)
    } else {
        0.0
    };
    let pdf_b = if zb.is_finite() {
        math::normal_pdf(zb)
    } else {
        0.0
    };
    g.mean + g.sigma * (pdf_a - pdf_b) / p
}

/// Lloyd-Max quantizer: alternate midpoint boundaries and conditional
/// centroids until the largest reproduction move drops below `tol·σ`.
///
/// Initialization (a linear grid over `μ ± 4σ`) and update order are part
/// of the bitstream contract: the decoder re-runs this routine from side
/// information and must land on identical bits.
pub fn design_lloyd_max(g: &GaussianModel, levels: u32, tol: f64) -> Result<QuantizerSpec> {
    if levels < 2 {
        return Err(Error::invalid("levels", "need at least 2 cells"));
    }
    if !(g.sigma > 0.0) {
        return Err(Error::invalid("sigma", "Lloyd-Max needs a spread model"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let l = levels as usize;
    let mut reps: Vec<f64> = (0..l)
        .map(|i| g.mean + g.sigma * (-4.0 + 8.0 * (i as f64 + 0.5) / l as f64))
        .collect();
    let mut boundaries = vec![0.0; l - 1];
    for iteration in 0..10_000 {
        for i in 0..l - 1 {
            boundaries[i] = 0.5 * (reps[i] + reps[i + 1]);
        }
        let mut worst_move = 0.0f64;
        for i in 0..l {
            let a = if i == 0 {
                f64::NEG_INFINITY
            } else {
                boundaries[i - 1]
            };
            let b = if i == l - 1 {
                f64::INFINITY
            } else {
                boundaries[i]
            };
            let updated = truncated_normal_centroid(g, a, b);
            worst_move = worst_move.max((updated - reps[i]).abs());
            reps[i] = updated;
        }
        if worst_move < tol * g.sigma {
            for i in 0..l - 1 {
                boundaries[i] = 0.5 * (reps[i] + reps[i + 1]);
            }
            return Ok(QuantizerSpec::LloydMax { boundaries, reps });
        }
        let _ = iteration;
    }
    Err(Error::NonConvergence {
        iterations: 10_000,
        last_move: f64::NAN,
    })
}

/// Gaussian measure of every codeword region, saturation included.
pub fn codeword_probs(q: &QuantizerSpec, g: &GaussianModel) -> Vec<f64> {
    if let QuantizerSpec::Degenerate { .. } = q {
        return vec![1.0];
    }
    let alphabet = q.alphabet_size() as usize;
    if g.sigma == 0.0 {
        let mut probs = vec![0.0; alphabet];
        probs[q.quantize(g.mean) as usize] = 1.0;
        return probs;
    }
    match q {
        QuantizerSpec::Uniform { levels, lo, hi } => {
            let step = (hi - lo) / *levels as f64;
            let z = |v: f64| (v - g.mean) / g.sigma;
            let mut probs = Vec::with_capacity(alphabet);
            probs.push(math::normal_cdf(z(*lo)));
            for c in 1..=*levels {
                let a = lo + (c - 1) as f64 * step;
                let b = lo + c as f64 * step;
                probs.push(interval_prob(z(a), z(b)));
            }
            probs.push(math::normal_sf(z(*hi)));
            probs
        }
        QuantizerSpec::LloydMax { boundaries, reps } => {
            let z = |v: f64| (v - g.mean) / g.sigma;
            let mut probs = Vec::with_capacity(alphabet);
            probs.push(0.0);
            for i in 0..reps.len() {
                let za = if i == 0 {
                    f64::NEG_INFINITY
                } else {
                    z(boundaries[i - 1])
                };
                let zb = if i == reps.len() - 1 {
                    f64::INFINITY
                } else {
                    z(boundaries[i])
                };
                probs.push(interval_prob(za, zb));
            }
            probs.push(0.0);
            probs
        }
        QuantizerSpec::Degenerate { .. } => unreachable!(),
    }
}

/// `−Σ p·log₂ p` in bits, with `0·log 0 = 0`.
pub fn entropy(probs: &[f64]) -> Result<f64> {
    let mut h = 0.0;
    for &p in probs {
        if p < 0.0 || p.is_nan() {
            return Err(Error::invalid("probs", "probabilities must be nonnegative"));
        }
        if p > 0.0 {
            h -= p * math::log2(p);
        }
    }
    Ok(h)
}

/// `E[(V − dequantize(quantize(V)))²]` under the Gaussian model, by exact
/// per-region integration.
pub fn model_distortion(q: &QuantizerSpec, g: &GaussianModel) -> f64 {
    if g.sigma == 0.0 {
        let rep = q.dequantize(q.quantize(g.mean)).expect("own codeword");
        let d = g.mean - rep;
        return d * d;
    }
    if let QuantizerSpec::Degenerate { value } = q {
        let d = g.mean - value;
        return g.sigma * g.sigma + d * d;
    }
    let z = |v: f64| (v - g.mean) / g.sigma;
    let region_term = |za: f64, zb: f64, rep: f64| -> f64 {
        let p = interval_prob(za, zb);
        if p <= 0.0 {
            return 0.0;
        }
        let (pa, za_pa) = if za.is_finite() {
            let pdf = math::normal_pdf(za);
            (pdf, za * pdf)
        } else {
            (0.0, 0.0)
        };
        let (pb, zb_pb) = if zb.is_finite() {
            let pdf = math::normal_pdf(zb);
            (pdf, zb * pdf)
        } else {
            (0.0, 0.0)
        };
        let d = (rep - g.mean) / g.sigma;
        let second = p + za_pa - zb_pb;
        g.sigma * g.sigma * (second - 2.0 * d * (pa - pb) + d * d * p)
    };
    match q {
        QuantizerSpec::Uniform { levels, lo, hi } => {
            let step = (hi - lo) / *levels as f64;
            let mut total = region_term(f64::NEG_INFINITY, z(*lo), lo - 0.5 * step);
            for c in 1..=*levels {
                let a = lo + (c - 1) as f64 * step;
                let b = lo + c as f64 * step;
                total += region_term(z(a), z(b), lo + (c as f64 - 0.5) * step);
            }
            total + region_term(z(*hi), f64::INFINITY, hi + 0.5 * step)
        }
        QuantizerSpec::LloydMax { boundaries, reps } => {
            let mut total = 0.0;
            for i in 0..reps.len() {
                let za = if i == 0 {
                    f64::NEG_INFINITY
                } else {
                    z(boundaries[i - 1])
                };
                let zb = if i == reps.len() - 1 {
                    f64::INFINITY
                } else {
                    z(boundaries[i])
                };
                total += region_term(za, zb, reps[i]);
            }
            total
        }
        QuantizerSpec::Degenerate { .. } => unreachable!(),
    }
}
