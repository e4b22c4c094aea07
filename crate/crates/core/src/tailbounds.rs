//! Concentration bounds on normalized mixture components and their
//! inversion for range selection.
//!
//! Every bound has the shape `Pr{|z_j - μ_j| > t·σ_j} ≤ 2·exp(-t²·η(t))`
//! with a mode-specific exponent rate `η`:
//!
//! * sign diagonal: `η = 1/2` (subgaussian),
//! * convolution: `η = max(1/4, ξ(t/τ))` with the Bennett rate function
//!   [`xi`] and a spectrum-flatness scale `τ`,
//! * permutation: `η = τ_j²/(8n + 4tτ_j)` with a joint signal/row
//!   flatness scale `τ_j`.
//!
//! [`TailBound::invert`] turns a bound plus a saturation budget δ into the
//! clipping multiple `t*`, the quantity the quantizer derives its range
//! from; everything here runs on the frozen math kernel because encoder
//! and decoder must agree on `t*` to the bit.

use crate::error::{Error, Result};
use crate::math;
use crate::sensing::{self, Signal};
use crate::transforms::TransformOp;

/// Bennett rate function `ξ(u) = u⁻²[(1+u)ln(1+u) − u]`.
///
/// Decreasing from `ξ(0) = 1/2`; evaluated by a six-term alternating
/// series below `u = 1e-4`, where the direct form loses everything to
/// cancellation.
pub fn xi(u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::invalid(
            "u",
            "rate function argument must be nonnegative",
        ));
    }
    if u < 1e-4 {
        // (1+u)ln(1+u) − u = Σ_{k≥2} (−1)^k u^k / (k(k−1))
        let mut acc = 0.0;
        let mut sign = 1.0;
        let mut power = 1.0;
        for k in 2..8u32 {
            acc += sign * power / ((k * (k - 1)) as f64);
            sign = -sign;
            power *= u;
        }
        Ok(acc)
    } else {
        Ok(((1.0 + u) * math::ln_1p(u) - u) / (u * u))
    }
}

/// Sign-diagonal bound `2·exp(−t²/2)`.
pub fn lr_bound(t: f64) -> f64 {
    2.0 * math::exp(-0.5 * t * t)
}

/// Convolution bound `2·exp(−t²·max(1/4, ξ(t/τ)))`.
pub fn rc_bound(t: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::invalid("tau", "spectral scale must be positive"));
    }
    let rate = xi(t.abs() / tau)?.max(0.25);
    Ok(2.0 * math::exp(-t * t * rate))
}

/// Permutation bound `2·exp(−t²·τ_j²/(8n + 4tτ_j))`.
pub fn gr_bound(t: f64, tau_j: f64, n: usize) -> Result<f64> {
    if !(tau_j > 0.0) {
        return Err(Error::invalid("tau_j", "flatness scale must be positive"));
    }
    if n < 2 {
        return Err(Error::invalid("n", "permutation bound needs n >= 2"));
    }
    let eta = tau_j * tau_j / (8.0 * n as f64 + 4.0 * t * tau_j);
    Ok(2.0 * math::exp(-t * t * eta))
}

/// Spectral flatness scale for the convolution bound:
/// `τ = ‖x‖₂ / max_k (2 − χ(k))·|(Fx)_k|` with the unitary DFT.
pub fn tau_rc(x: &Signal) -> Result<f64> {
    let n = x.len();
    if x.norm_l2() == 0.0 {
        return Err(Error::Undefined("zero signal has no spectral scale".into()));
    }
    let mut buf: Vec<crate::fft::Complex64> = x
        .samples()
        .iter()
        .map(|&v| crate::fft::Complex64::new(v, 0.0))
        .collect();
    crate::fft::forward(&mut buf);
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let mut worst = 0.0f64;
    for (k0, v) in buf.iter().enumerate() {
        let weight = if sensing::self_symmetric(n, k0 + 1) {
            1.0
        } else {
            2.0
        };
        worst = worst.max(weight * v.norm() * inv_sqrt_n);
    }
    Ok(x.norm_l2() / worst)
}

/// Joint flatness scale for the permutation bound:
/// `τ_j = (n−1)^{-1/2} · (‖Tw_j‖₂/‖Tw_j‖∞) · (‖Tx‖₂/‖Tx‖∞)`
/// where `T` subtracts the mean. At most `n/√(n−1)`.
pub fn tau_gr(t: &TransformOp, j: usize, x: &Signal) -> Result<f64> {
    let n = t.order();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let row = t.row(j)?;
    let row_ratio = centered_ratio(&row)
        .ok_or_else(|| Error::Undefined(format!("row {j} is constant after centering")))?;
    let signal_ratio = centered_ratio(x.samples())
        .ok_or_else(|| Error::Undefined("signal is constant after centering".into()))?;
    Ok(row_ratio * signal_ratio / ((n as f64) - 1.0).sqrt())
}

/// `‖Tv‖₂ / ‖Tv‖∞` for mean-centered `v`; `None` when centering leaves
/// only rounding residue.
fn centered_ratio(v: &[f64]) -> Option<f64> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let mut norm_sq = 0.0;
    let mut inf = 0.0f64;
    for &e in v {
        let c = e - mean;
        norm_sq += c * c;
        inf = inf.max(c.abs());
    }
    let scale = v.iter().map(|e| e.abs()).fold(0.0, f64::max);
    if inf <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return None;
    }
    Some(norm_sq.sqrt() / inf)
}

/// A concrete bound curve: parameters plus the `t → probability` law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailBound {
    SignDiagonal,
    Convolution { tau: f64 },
    Permutation { tau_j: f64, n: usize },
}

impl TailBound {
    pub fn convolution(tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::invalid("tau", "spectral scale must be positive"));
        }
        Ok(TailBound::Convolution { tau })
    }

    pub fn permutation(tau_j: f64, n: usize) -> Result<Self> {
        if !(tau_j > 0.0) {
            return Err(Error::invalid("tau_j", "flatness scale must be positive"));
        }
        if n < 2 {
            return Err(Error::invalid("n", "permutation bound needs n >= 2"));
        }
        Ok(TailBound::Permutation { tau_j, n })
    }

    /// Bound value at `t`; starts at 2 and decreases.
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TailBound::SignDiagonal => lr_bound(t),
            TailBound::Convolution { tau } => rc_bound(t, tau).expect("validated at construction"),
            TailBound::Permutation { tau_j, n } => {
                gr_bound(t, tau_j, n).expect("validated at construction")
            }
        }
    }

    /// Bound clipped into `[0, 1]` for use as a probability.
    pub fn eval_capped(&self, t: f64) -> f64 {
        self.eval(t).min(1.0)
    }

    /// Smallest `t` (to 1e-6) with `eval(t) ≤ delta`.
    pub fn invert(&self, delta: f64) -> Result<f64> {
        invert_bound(|t| self.eval(t), delta)
    }
}

/// Smallest `t ≥ 0` with `b(t) ≤ delta`, for nonincreasing `b` that
/// decays to zero; bisection to 1e-6 absolute.
pub fn invert_bound(b: impl Fn(f64) -> f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) || delta >= 2.0 {
        return Err(Error::invalid(
            "delta",
            "saturation budget must lie in (0, 2)",
        ));
    }
    if b(0.0) <= delta {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while b(hi) > delta {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::NonConvergence {
                iterations: doublings,
                last_move: hi,
            });
        }
    }
    let mut lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if b(mid) <= delta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
