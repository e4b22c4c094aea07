//! Frozen scalar math kernel.
//!
//! Every routine here is built on `libm`, a pure-Rust port of musl's math
//! library, instead of the platform `std` intrinsics. The bitstream decoder
//! reconstructs quantizer boundaries and entropy-coder models from side
//! information, and arithmetic coding desynchronizes if encoder and decoder
//! disagree by a single ulp, so all model-path math must evaluate to the
//! same bits on every platform. Tests and diagnostics may use `std` math;
//! anything reachable from encode or decode must come through this module.

/// Natural exponential, bit-reproducible across platforms.
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

/// Natural logarithm.
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

/// `ln(1 + x)` without cancellation for small `x`.
#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

/// Base-2 logarithm.
#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

/// Cosine.
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

/// Sine.
#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

/// Complementary error function.
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * exp(-0.5 * z * z)
}

/// Standard normal CDF in complementary-error-function form.
///
/// `0.5 * erfc(-z / sqrt(2))` keeps full relative accuracy in the left
/// tail, and [`normal_sf`] covers the right tail; the worst-case relative
/// error inherited from musl's `erfc` is below 1e-14.
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal survival function `P(Z > z)`.
#[inline]
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Inverse standard normal CDF.
///
/// Acklam's rational approximation (worst case about 1.15e-9 relative)
/// followed by one Halley step against [`normal_cdf`], which brings the
/// result to within a few ulps over `p` in `(0, 1)`.
#[allow(clippy::excessive_precision)]
pub fn normal_quantile(p: f64) -> f64 {
    assert!(
        p > 0.0 && p < 1.0,
        "normal_quantile requires 0 < p < 1, got {p}"
    );
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = libm::sqrt(-2.0 * ln(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * ln_1p(-p));
        -((((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0))
    };

    // One Halley refinement: e is computed in whichever tail keeps relative
    // accuracy, so the correction stays meaningful even for extreme p.
    let e = if p < 0.5 {
        normal_cdf(x) - p
    } else {
        (1.0 - p) - normal_sf(x)
    };
    let u = e / normal_pdf(x);
    x - u / (1.0 + 0.5 * x * u)
}

/// Order-insensitive sum: Neumaier's compensated summation.
///
/// Parallel reductions in the Monte Carlo harness sum fixed-size blocks
/// sequentially and then fold the block totals in block order, so the
/// result is independent of the thread schedule; compensation keeps the
/// block totals accurate enough that the fold order of equals does not
/// show up in the reported statistics.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    /// Merge another accumulator into this one (used when folding blocks).
    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.compensation += other.compensation;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Eigenvalues of a small symmetric matrix, ascending.
///
/// Cyclic Jacobi rotations; intended for probe-sized covariance blocks
/// (at most a few hundred rows), where the O(k^3) sweeps are cheap and
/// the method is backward stable without pivoting machinery.
pub fn symmetric_eigenvalues(a: &[Vec<f64>]) -> crate::Result<Vec<f64>> {
    let k = a.len();
    if a.iter().any(|row| row.len() != k) {
        return Err(crate::Error::invalid("a", "matrix must be square"));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut m = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            m[i][j] = 0.5 * (a[i][j] + a[j][i]);
        }
    }
    let frobenius = m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let tol = 1e-14 * frobenius.max(f64::MIN_POSITIVE);

    let off = |m: &Vec<Vec<f64>>| -> f64 {
        let mut s = 0.0;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    s += m[i][j] * m[i][j];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0usize;
    let mut last = off(&m);
    while last > tol {
        sweeps += 1;
        if sweeps > 100 {
            return Err(crate::Error::NonConvergence {
                iterations: sweeps,
                last_move: last,
            });
        }
        for p in 0..k {
            for q in p + 1..k {
                let apq = m[p][q];
                if apq.abs() <= tol / (k as f64) {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..k {
                    let mip = m[i][p];
                    let miq = m[i][q];
                    m[i][p] = c * mip - s * miq;
                    m[i][q] = s * mip + c * miq;
                }
                for i in 0..k {
                    let mpi = m[p][i];
                    let mqi = m[q][i];
                    m[p][i] = c * mpi - s * mqi;
                    m[q][i] = s * mpi + c * mqi;
                }
            }
        }
        last = off(&m);
    }
    let mut eigs: Vec<f64> = (0..k).map(|i| m[i][i]).collect();
    eigs.sort_by(f64::total_cmp);
    Ok(eigs)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite
/// matrix; `None` when a pivot drops below `1e-12` times the largest
/// diagonal entry, which callers treat as "numerically not PD".
pub fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let k = a.len();
    if a.iter().any(|row| row.len() != k) {
        return None;
    }
    let diag_max = (0..k).map(|i| a[i][i].abs()).fold(0.0f64, f64::max);
    let floor = 1e-12 * diag_max.max(f64::MIN_POSITIVE);
    let mut l = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = a[i][j];
            for p in 0..j {
                s -= l[i][p] * l[j][p];
            }
            if i == j {
                if s <= floor {
                    return None;
                }
                l[i][j] = libm::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solve `L Lᵀ x = b` given the Cholesky factor `L`.
pub fn cholesky_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let k = l.len();
    let mut y = vec![0.0; k];
    for i in 0..k {
        let mut s = b[i];
        for p in 0..i {
            s -= l[i][p] * y[p];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = y[i];
        for p in i + 1..k {
            s -= l[p][i] * x[p];
        }
        x[i] = s / l[i][i];
    }
    x
}
