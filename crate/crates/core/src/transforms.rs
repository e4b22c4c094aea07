//! Orthonormal fast transforms with row introspection.
//!
//! Four operator kinds are supported: the Walsh-Hadamard transform in
//! natural (Sylvester) order, the orthonormal DCT-II, a real DFT whose
//! rows interleave cosine and negated-sine pairs, and Kronecker products
//! of the above. All are orthonormal with unit-norm rows, applied in
//! O(n log n).
//!
//! Row numbering is 1-based in the public API; row 1 is always the DC
//! (constant) row. The real-DFT layout is: row 1 constant `n^{-1/2}`,
//! rows `2g` and `2g+1` equal to `sqrt(2/n)·cos(2πgt/n)` and
//! `-sqrt(2/n)·sin(2πgt/n)` for `g = 1..n/2-1`, and row `n` the Nyquist
//! row alternating `±n^{-1/2}` (orders must be even).
//!
//! Besides applying the operator, callers can materialize single rows,
//! query row statistics, and expand the pointwise product of two rows
//! back into the row basis: `w_j ∘ w_h = n^{-1/2} Σ_k γ_k w_{l_k}` with
//! one term for WHT (the XOR rule on zero-based indices) and at most two
//! for DCT and real DFT (sum/difference frequencies). The expansion is
//! what lets covariance models of sign-randomized mixtures be evaluated
//! from a single transformed vector instead of O(n²) row dot products.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{self, Complex64};
use crate::math;

/// An orthonormal transform operator.
///
/// Construct through [`TransformOp::wht`], [`TransformOp::dct`],
/// [`TransformOp::real_dft`] or [`TransformOp::kronecker`]; operations
/// re-check order validity so that values deserialized from configuration
/// files fail cleanly instead of panicking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformOp {
    /// Walsh-Hadamard in natural order; order must be a power of two.
    Wht { order: usize },
    /// Orthonormal DCT-II; any order ≥ 1.
    Dct { order: usize },
    /// Real DFT with (cos, -sin) row pairs; order must be even.
    RealDft { order: usize },
    /// Kronecker product of two factors; order is the product.
    Kronecker {
        left: Box<TransformOp>,
        right: Box<TransformOp>,
    },
}

/// Per-row summary statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RowStats {
    /// Row mean `n^{-1} Σ_k w_jk`.
    pub mean: f64,
    /// `‖w_j‖∞`.
    pub inf_norm: f64,
    /// `n^{-1/2} ‖w_j - mean‖₂ / ‖w_j - mean‖∞`, absent for constant rows.
    pub flatness: Option<f64>,
}

/// One term of a row-product expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RowProductTerm {
    /// Weight γ_k.
    pub gamma: f64,
    /// 1-based row index l_k.
    pub index: usize,
}

/// Expansion of a pointwise row product in the row basis:
/// `w_j ∘ w_h = n^{-1/2} Σ_k γ_k w_{l_k}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowProductRep {
    pub terms: Vec<RowProductTerm>,
}

impl RowProductRep {
    /// Number of nonzero terms.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Build from 0-based `(row, coefficient)` pairs where the coefficient
    /// is in plain row-basis units; converts to γ by multiplying `√n` and
    /// merges duplicate rows.
    fn from_coefficients(mut weighted: Vec<(usize, f64)>, n: usize) -> Self {
        weighted.sort_by_key(|&(row, _)| row);
        let sqrt_n = (n as f64).sqrt();
        let mut terms: Vec<RowProductTerm> = Vec::with_capacity(weighted.len());
        for (row, kappa) in weighted {
            match terms.last_mut() {
                Some(last) if last.index == row + 1 => last.gamma += sqrt_n * kappa,
                _ => terms.push(RowProductTerm {
                    gamma: sqrt_n * kappa,
                    index: row + 1,
                }),
            }
        }
        terms.retain(|t| t.gamma != 0.0);
        RowProductRep { terms }
    }
}

impl TransformOp {
    /// Walsh-Hadamard transform of the given power-of-two order.
    pub fn wht(order: usize) -> Result<Self> {
        let t = TransformOp::Wht { order };
        t.validate()?;
        Ok(t)
    }

    /// Orthonormal DCT-II of any positive order.
    pub fn dct(order: usize) -> Result<Self> {
        let t = TransformOp::Dct { order };
        t.validate()?;
        Ok(t)
    }

    /// Real DFT of the given even order.
    pub fn real_dft(order: usize) -> Result<Self> {
        let t = TransformOp::RealDft { order };
        t.validate()?;
        Ok(t)
    }

    /// Kronecker product of two transforms.
    pub fn kronecker(left: TransformOp, right: TransformOp) -> Result<Self> {
        let t = TransformOp::Kronecker {
            left: Box::new(left),
            right: Box::new(right),
        };
        t.validate()?;
        Ok(t)
    }

    /// Transform order n.
    pub fn order(&self) -> usize {
        match self {
            TransformOp::Wht { order }
            | TransformOp::Dct { order }
            | TransformOp::RealDft { order } => *order,
            TransformOp::Kronecker { left, right } => left.order() * right.order(),
        }
    }

    /// Check order constraints (recursively for Kronecker factors).
    pub fn validate(&self) -> Result<()> {
        match self {
            TransformOp::Wht { order } => {
                if *order == 0 || !order.is_power_of_two() {
                    return Err(Error::UnsupportedOrder {
                        n: *order,
                        reason: "WHT requires a power of two",
                    });
                }
            }
            TransformOp::Dct { order } => {
                if *order == 0 {
                    return Err(Error::UnsupportedOrder {
                        n: 0,
                        reason: "DCT order must be positive",
                    });
                }
            }
            TransformOp::RealDft { order } => {
                if *order < 2 || order % 2 != 0 {
                    return Err(Error::UnsupportedOrder {
                        n: *order,
                        reason: "real DFT requires an even order",
                    });
                }
            }
            TransformOp::Kronecker { left, right } => {
                left.validate()?;
                right.validate()?;
            }
        }
        Ok(())
    }

    /// `W v`.
    pub fn apply_forward(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.validate()?;
        self.check_len(v)?;
        Ok(self.apply_unchecked(v, false))
    }

    /// `Wᵀ v`. Since the operator is orthonormal this is also the inverse.
    pub fn apply_adjoint(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.validate()?;
        self.check_len(v)?;
        Ok(self.apply_unchecked(v, true))
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.order() {
            return Err(Error::DimensionMismatch {
                expected: self.order(),
                got: v.len(),
            });
        }
        Ok(())
    }

    fn apply_unchecked(&self, v: &[f64], adjoint: bool) -> Vec<f64> {
        match self {
            TransformOp::Wht { .. } => wht_apply(v),
            TransformOp::Dct { .. } => {
                if adjoint {
                    dct_adjoint(v)
                } else {
                    dct_forward(v)
                }
            }
            TransformOp::RealDft { .. } => {
                if adjoint {
                    rdft_adjoint(v)
                } else {
                    rdft_forward(v)
                }
            }
            TransformOp::Kronecker { left, right } => kron_apply(left, right, v, adjoint),
        }
    }

    /// Reference O(n²) application used by tests to certify the fast path.
    ///
    /// Rows are materialized from their closed-form definitions, which is a
    /// code path independent of the FFT-based implementations.
    pub fn naive_forward(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.order();
        if n > 4096 {
            return Err(Error::invalid("order", "naive fallback supports n <= 4096"));
        }
        self.check_len(v)?;
        (1..=n).map(|j| Ok(dot(&self.row(j)?, v))).collect()
    }

    /// Materialize row `j` (1-based) from its closed-form definition.
    pub fn row(&self, j: usize) -> Result<Vec<f64>> {
        self.validate()?;
        let n = self.order();
        if j < 1 || j > n {
            return Err(Error::IndexOutOfRange { index: j, n });
        }
        Ok(self.row_unchecked(j))
    }

    fn row_unchecked(&self, j: usize) -> Vec<f64> {
        let n = self.order();
        match self {
            TransformOp::Wht { .. } => {
                let scale = (n as f64).sqrt().recip();
                (0..n)
                    .map(|k| {
                        if ((j - 1) & k).count_ones().is_multiple_of(2) {
                            scale
                        } else {
                            -scale
                        }
                    })
                    .collect()
            }
            TransformOp::Dct { .. } => {
                let a = (j - 1) as f64;
                let scale = dct_row_scale(j - 1, n);
                (0..n)
                    .map(|t| {
                        let angle = std::f64::consts::PI * a * (2 * t + 1) as f64 / (2 * n) as f64;
                        scale * math::cos(angle)
                    })
                    .collect()
            }
            TransformOp::RealDft { .. } => {
                let inv_sqrt_n = (n as f64).sqrt().recip();
                let s = (2.0 / n as f64).sqrt();
                if j == 1 {
                    vec![inv_sqrt_n; n]
                } else if j == n {
                    (0..n)
                        .map(|t| if t % 2 == 0 { inv_sqrt_n } else { -inv_sqrt_n })
                        .collect()
                } else if j.is_multiple_of(2) {
                    let g = (j / 2) as f64;
                    (0..n)
                        .map(|t| {
                            s * math::cos(2.0 * std::f64::consts::PI * g * t as f64 / n as f64)
                        })
                        .collect()
                } else {
                    let g = ((j - 1) / 2) as f64;
                    (0..n)
                        .map(|t| {
                            -s * math::sin(2.0 * std::f64::consts::PI * g * t as f64 / n as f64)
                        })
                        .collect()
                }
            }
            TransformOp::Kronecker { left, right } => {
                let nr = right.order();
                let jl = (j - 1) / nr + 1;
                let jr = (j - 1) % nr + 1;
                let rl = left.row_unchecked(jl);
                let rr = right.row_unchecked(jr);
                let mut out = Vec::with_capacity(rl.len() * rr.len());
                for &a in &rl {
                    for &b in &rr {
                        out.push(a * b);
                    }
                }
                out
            }
        }
    }

    /// Mean, infinity norm and centered flatness of row `j`.
    pub fn row_stats(&self, j: usize) -> Result<RowStats> {
        let row = self.row(j)?;
        let n = row.len() as f64;
        let mean = row.iter().sum::<f64>() / n;
        let inf_norm = row.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        Ok(RowStats {
            mean,
            inf_norm,
            flatness: centered_flatness(&row),
        })
    }

    /// All row means `w̄_j`, computed analytically.
    ///
    /// For every supported kind the non-DC rows sum to zero exactly, so the
    /// vector is `n^{-1/2}` at row 1 and zero elsewhere. Using the closed
    /// form instead of a transform keeps decoder-side model reconstruction
    /// free of FFT rounding, which can differ between CPUs.
    pub fn row_means(&self) -> Vec<f64> {
        let n = self.order();
        let mut means = vec![0.0; n];
        means[0] = (n as f64).sqrt().recip();
        means
    }

    /// Expand `w_j ∘ w_h` in the row basis.
    pub fn pointwise_product_rep(&self, j: usize, h: usize) -> Result<RowProductRep> {
        self.validate()?;
        let n = self.order();
        for idx in [j, h] {
            if idx < 1 || idx > n {
                return Err(Error::IndexOutOfRange { index: idx, n });
            }
        }
        Ok(self.product_rep_unchecked(j, h))
    }

    fn product_rep_unchecked(&self, j: usize, h: usize) -> RowProductRep {
        let n = self.order();
        match self {
            TransformOp::Wht { .. } => RowProductRep {
                terms: vec![RowProductTerm {
                    gamma: 1.0,
                    index: 1 + ((j - 1) ^ (h - 1)),
                }],
            },
            TransformOp::Dct { .. } => {
                let a = j - 1;
                let b = h - 1;
                let base = 0.5 * dct_row_scale(a, n) * dct_row_scale(b, n);
                let mut weighted = Vec::with_capacity(2);
                push_dct_cos(&mut weighted, base, a.abs_diff(b), n);
                push_dct_cos(&mut weighted, base, a + b, n);
                RowProductRep::from_coefficients(weighted, n)
            }
            TransformOp::RealDft { .. } => {
                let (c1, k1, g1) = rdft_atom(j, n);
                let (c2, k2, g2) = rdft_atom(h, n);
                let base = 0.5 * c1 * c2;
                let mut weighted = Vec::with_capacity(2);
                // Product-to-sum identities; sine terms carry the sign of
                // the frequency argument.
                match (k1, k2) {
                    (Trig::Cos, Trig::Cos) => {
                        push_rdft_trig(&mut weighted, base, Trig::Cos, g1 - g2, n);
                        push_rdft_trig(&mut weighted, base, Trig::Cos, g1 + g2, n);
                    }
                    (Trig::Sin, Trig::Sin) => {
                        push_rdft_trig(&mut weighted, base, Trig::Cos, g1 - g2, n);
                        push_rdft_trig(&mut weighted, -base, Trig::Cos, g1 + g2, n);
                    }
                    (Trig::Sin, Trig::Cos) => {
                        push_rdft_trig(&mut weighted, base, Trig::Sin, g1 + g2, n);
                        push_rdft_trig(&mut weighted, base, Trig::Sin, g1 - g2, n);
                    }
                    (Trig::Cos, Trig::Sin) => {
                        push_rdft_trig(&mut weighted, base, Trig::Sin, g1 + g2, n);
                        push_rdft_trig(&mut weighted, -base, Trig::Sin, g1 - g2, n);
                    }
                }
                RowProductRep::from_coefficients(weighted, n)
            }
            TransformOp::Kronecker { left, right } => {
                let nr = right.order();
                let rep_l = left.product_rep_unchecked((j - 1) / nr + 1, (h - 1) / nr + 1);
                let rep_r = right.product_rep_unchecked((j - 1) % nr + 1, (h - 1) % nr + 1);
                let mut terms = Vec::with_capacity(rep_l.terms.len() * rep_r.terms.len());
                for tl in &rep_l.terms {
                    for tr in &rep_r.terms {
                        terms.push(RowProductTerm {
                            gamma: tl.gamma * tr.gamma,
                            index: (tl.index - 1) * nr + tr.index,
                        });
                    }
                }
                terms.sort_by_key(|t| t.index);
                RowProductRep { terms }
            }
        }
    }
}

/// `n^{-1/2} ‖v - v̄‖₂ / ‖v - v̄‖∞`, or `None` for constant vectors.
///
/// This spread measure is 1 when the centered vector has entries of equal
/// magnitude and shrinks as energy concentrates in few entries. It is used
/// both for signals and for transform rows when sizing permutation-mode
/// tail bounds. Vectors whose centered spread is below 1e-14 of their own
/// magnitude count as constant: the mean of n equal floats is not exact,
/// so an exact-zero test would misclassify DC rows.
pub fn centered_flatness(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let mut sum_sq = 0.0;
    let mut inf = 0.0f64;
    let mut scale = 0.0f64;
    for &x in v {
        let d = x - mean;
        sum_sq += d * d;
        inf = inf.max(d.abs());
        scale = scale.max(x.abs());
    }
    if inf <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        None
    } else {
        Some(sum_sq.sqrt() / (n.sqrt() * inf))
    }
}

/// Mutual coherence `√n · max_{i,j} |⟨w_i, ψ_j⟩| / (‖w_i‖₂ ‖ψ_j‖₂)`.
///
/// `basis` holds the columns ψ_j. Row norms are exactly 1 by construction,
/// so only the column norms are computed.
pub fn mutual_coherence(t: &TransformOp, basis: &[Vec<f64>]) -> Result<f64> {
    let n = t.order();
    if basis.is_empty() {
        return Err(Error::invalid("Psi", "no columns"));
    }
    let mut best = 0.0f64;
    for (ci, col) in basis.iter().enumerate() {
        if col.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: col.len(),
            });
        }
        let norm = dot(col, col).sqrt();
        if norm == 0.0 {
            return Err(Error::invalid("Psi", format!("column {} is zero", ci + 1)));
        }
        let y = t.apply_forward(col)?;
        let peak = y.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        best = best.max(peak / norm);
    }
    Ok((n as f64).sqrt() * best)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dct_row_scale(a: usize, n: usize) -> f64 {
    if a == 0 {
        (1.0 / n as f64).sqrt()
    } else {
        (2.0 / n as f64).sqrt()
    }
}

/// Express `coef · cos(πc(2t+1)/(2n))` in DCT rows, reducing the frequency
/// index into `0..n`: the term vanishes at c = n and reflects with a sign
/// flip above.
fn push_dct_cos(out: &mut Vec<(usize, f64)>, coef: f64, c: usize, n: usize) {
    if c == n {
        return;
    }
    let (c, coef) = if c > n { (2 * n - c, -coef) } else { (c, coef) };
    out.push((c, coef / dct_row_scale(c, n)));
}

#[derive(Clone, Copy, PartialEq)]
enum Trig {
    Cos,
    Sin,
}

/// Row `j` of the real DFT as `coef · trig(2πgt/n)`.
fn rdft_atom(j: usize, n: usize) -> (f64, Trig, i64) {
    let inv_sqrt_n = (n as f64).sqrt().recip();
    if j == 1 {
        (inv_sqrt_n, Trig::Cos, 0)
    } else if j == n {
        (inv_sqrt_n, Trig::Cos, (n / 2) as i64)
    } else if j.is_multiple_of(2) {
        ((2.0 / n as f64).sqrt(), Trig::Cos, (j / 2) as i64)
    } else {
        (-((2.0 / n as f64).sqrt()), Trig::Sin, ((j - 1) / 2) as i64)
    }
}

/// Express `coef · trig(2πg t/n)` in real-DFT rows after folding the
/// frequency into `0..=n/2`.
fn push_rdft_trig(out: &mut Vec<(usize, f64)>, coef: f64, kind: Trig, g: i64, n: usize) {
    let n_i = n as i64;
    let half = n_i / 2;
    let (mut g, mut coef) = match kind {
        Trig::Cos => (g.abs(), coef),
        Trig::Sin => {
            if g < 0 {
                (-g, -coef)
            } else {
                (g, coef)
            }
        }
    };
    g = g.rem_euclid(n_i);
    if g > half {
        g = n_i - g;
        if kind == Trig::Sin {
            coef = -coef;
        }
    }
    let sqrt_n = (n as f64).sqrt();
    let sqrt_half_n = (n as f64 / 2.0).sqrt();
    match kind {
        Trig::Sin if g == 0 || g == half => {}
        Trig::Cos if g == 0 => out.push((0, coef * sqrt_n)),
        Trig::Cos if g == half => out.push((n - 1, coef * sqrt_n)),
        Trig::Cos => out.push((2 * g as usize - 1, coef * sqrt_half_n)),
        Trig::Sin => out.push((2 * g as usize, -coef * sqrt_half_n)),
    }
}

/// In-place butterfly WHT in natural order, scaled to orthonormal.
fn wht_apply(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut out = v.to_vec();
    let mut h = 1;
    while h < n {
        for block in out.chunks_exact_mut(2 * h) {
            let (a, b) = block.split_at_mut(h);
            for i in 0..h {
                let x = a[i];
                let y = b[i];
                a[i] = x + y;
                b[i] = x - y;
            }
        }
        h *= 2;
    }
    let scale = (n as f64).sqrt().recip();
    for x in &mut out {
        *x *= scale;
    }
    out
}

/// DCT-II via a size-n complex FFT on the even/odd permutation
/// (v = [x_0, x_2, ..., x_5, x_3, x_1] for n = 6, etc.).
fn dct_forward(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 1 {
        return vec![x[0]];
    }
    let mut buf = vec![Complex64::default(); n];
    for t in 0..n.div_ceil(2) {
        buf[t] = Complex64::new(x[2 * t], 0.0);
    }
    for t in 0..n / 2 {
        buf[n - 1 - t] = Complex64::new(x[2 * t + 1], 0.0);
    }
    fft::forward(&mut buf);
    let mut out = Vec::with_capacity(n);
    for (a, coeff) in buf.iter().enumerate() {
        let theta = std::f64::consts::PI * a as f64 / (2 * n) as f64;
        let re = theta.cos() * coeff.re + theta.sin() * coeff.im;
        out.push(dct_row_scale(a, n) * re);
    }
    out
}

/// Adjoint (= inverse) of the orthonormal DCT-II.
fn dct_adjoint(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n == 1 {
        return vec![y[0]];
    }
    // Unnormalized coefficients C_a, with C_n treated as zero.
    let c: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(a, &v)| v / dct_row_scale(a, n))
        .collect();
    let mut buf = vec![Complex64::default(); n];
    buf[0] = Complex64::new(c[0], 0.0);
    for a in 1..n {
        let theta = std::f64::consts::PI * a as f64 / (2 * n) as f64;
        let rot = Complex64::new(theta.cos(), theta.sin());
        buf[a] = rot * Complex64::new(c[a], -c[n - a]);
    }
    fft::inverse(&mut buf);
    let inv_n = 1.0 / n as f64;
    let mut out = vec![0.0; n];
    for t in 0..n.div_ceil(2) {
        out[2 * t] = buf[t].re * inv_n;
    }
    for t in 0..n / 2 {
        out[2 * t + 1] = buf[n - 1 - t].re * inv_n;
    }
    out
}

fn rdft_forward(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::forward(&mut buf);
    let inv_sqrt_n = (n as f64).sqrt().recip();
    let s = (2.0 / n as f64).sqrt();
    let mut out = vec![0.0; n];
    out[0] = inv_sqrt_n * buf[0].re;
    for g in 1..n / 2 {
        out[2 * g - 1] = s * buf[g].re;
        out[2 * g] = s * buf[g].im;
    }
    out[n - 1] = inv_sqrt_n * buf[n / 2].re;
    out
}

fn rdft_adjoint(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let sqrt_n = (n as f64).sqrt();
    let sqrt_half_n = (n as f64 / 2.0).sqrt();
    let mut buf = vec![Complex64::default(); n];
    buf[0] = Complex64::new(sqrt_n * y[0], 0.0);
    buf[n / 2] = Complex64::new(sqrt_n * y[n - 1], 0.0);
    for g in 1..n / 2 {
        let v = Complex64::new(sqrt_half_n * y[2 * g - 1], sqrt_half_n * y[2 * g]);
        buf[g] = v;
        buf[n - g] = v.conj();
    }
    fft::inverse(&mut buf);
    buf.iter().map(|v| v.re / n as f64).collect()
}

/// Kronecker application: transform the rows with the right factor and the
/// columns with the left factor of the nl×nr row-major reshape of `v`.
fn kron_apply(left: &TransformOp, right: &TransformOp, v: &[f64], adjoint: bool) -> Vec<f64> {
    let nl = left.order();
    let nr = right.order();
    let mut out = vec![0.0; nl * nr];
    for (i, chunk) in v.chunks_exact(nr).enumerate() {
        let transformed = right.apply_unchecked(chunk, adjoint);
        out[i * nr..(i + 1) * nr].copy_from_slice(&transformed);
    }
    let mut col = vec![0.0; nl];
    for c in 0..nr {
        for i in 0..nl {
            col[i] = out[i * nr + c];
        }
        let transformed = left.apply_unchecked(&col, adjoint);
        for i in 0..nl {
            out[i * nr + c] = transformed[i];
        }
    }
    out
}
