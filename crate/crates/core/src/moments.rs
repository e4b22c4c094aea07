//! Closed-form means and covariances of mixture components, plus the
//! normality-condition diagnostics.
//!
//! Each mode's second-order statistics collapse to an O(n) backing model:
//!
//! * sign diagonal: the transformed squared signal `W(x∘x)` combined with
//!   row-product expansions,
//! * convolution: the circular autocorrelation `ρ(0..n-1)`,
//! * permutation: three scalars (x̄, ‖x‖₂², transformed energy) and the
//!   analytic row means.
//!
//! Covariances are exposed through accessors; dense matrices exist only as
//! probe submatrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{self, Complex64};
use crate::math;
use crate::sensing::Signal;
use crate::transforms::TransformOp;

/// Largest probe submatrix the accessors will materialize.
pub const MAX_PROBE: usize = 1024;

/// Second-order model of the mixture vector for one mode.
#[derive(Debug, Clone)]
pub enum MixtureMoments {
    /// Sign-diagonal randomizer: `cov(j,h) = (n/m)·Σ_k w_jk w_hk x_k²`,
    /// evaluated through row-product expansions against `wxx = W(x∘x)`.
    SignDiagonal {
        transform: TransformOp,
        m: usize,
        wxx: Vec<f64>,
        norm_sq: f64,
    },
    /// Random convolution: `cov(j,h) = m⁻¹·ρ((j-h) mod n)`.
    Convolution { n: usize, m: usize, rho: Vec<f64> },
    /// Random permutation: separable covariance driven by the signal's
    /// centered energy and the analytic row means.
    Permutation {
        transform: TransformOp,
        m: usize,
        x_bar: f64,
        norm_sq: f64,
        row_means: Vec<f64>,
    },
}

/// Variances of the real and imaginary measurement parts for one complex
/// DFT frequency pair.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DftPairVariance {
    pub sigma_real_sq: f64,
    pub sigma_imag_sq: f64,
    pub q_h: f64,
}

/// Finite-n surrogates of the asymptotic-normality conditions.
#[derive(Debug, Clone, Serialize)]
pub struct AmnReport {
    pub max_row_infnorm: f64,
    pub scaled_min_variance: f64,
    pub scaled_cov_min_eig: f64,
    pub signal_energy_density: f64,
    pub fx_infnorm: f64,
    pub alpha_x: Option<f64>,
    pub beta_j: Vec<Option<f64>>,
}

/// Largest-magnitude entries of `W(x∘x)`, the compressible model that the
/// coder ships as side information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKModel {
    pub n: usize,
    /// `(index, value)` pairs, 1-based, ascending by index.
    pub entries: Vec<(usize, f64)>,
    /// Sum of |dropped entries|, for covariance error bounds.
    pub dropped_magnitude: f64,
}

impl TopKModel {
    /// Entry at 1-based `index`, zero when truncated away.
    pub fn value(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }
}

fn check_probe(n: usize, probe: &[usize], cap: usize) -> Result<()> {
    if probe.len() > cap {
        return Err(Error::invalid(
            "probe",
            format!("probe of {} indices exceeds the cap of {cap}", probe.len()),
        ));
    }
    for &j in probe {
        if j == 0 || j > n {
            return Err(Error::IndexOutOfRange { index: j, n });
        }
    }
    Ok(())
}

impl MixtureMoments {
    pub fn n(&self) -> usize {
        match self {
            MixtureMoments::SignDiagonal { transform, .. } => transform.order(),
            MixtureMoments::Convolution { n, .. } => *n,
            MixtureMoments::Permutation { transform, .. } => transform.order(),
        }
    }

    pub fn m(&self) -> usize {
        match self {
            MixtureMoments::SignDiagonal { m, .. } => *m,
            MixtureMoments::Convolution { m, .. } => *m,
            MixtureMoments::Permutation { m, .. } => *m,
        }
    }

    /// E{z_j}, 1-based.
    pub fn mean(&self, j: usize) -> Result<f64> {
        let n = self.n();
        if j == 0 || j > n {
            return Err(Error::IndexOutOfRange { index: j, n });
        }
        Ok(match self {
            MixtureMoments::SignDiagonal { .. } | MixtureMoments::Convolution { .. } => 0.0,
            MixtureMoments::Permutation {
                m,
                x_bar,
                row_means,
                ..
            } => {
                let nf = n as f64;
                nf.powf(1.5) / (*m as f64).sqrt() * row_means[j - 1] * x_bar
            }
        })
    }

    /// cov{z_j, z_h}, 1-based.
    pub fn cov(&self, j: usize, h: usize) -> Result<f64> {
        let n = self.n();
        for idx in [j, h] {
            if idx == 0 || idx > n {
                return Err(Error::IndexOutOfRange { index: idx, n });
            }
        }
        match self {
            MixtureMoments::SignDiagonal {
                transform, m, wxx, ..
            } => {
                let rep = transform.pointwise_product_rep(j, h)?;
                let mut acc = 0.0;
                for term in &rep.terms {
                    acc += term.gamma * wxx[term.index - 1];
                }
                Ok((n as f64).sqrt() / *m as f64 * acc)
            }
            MixtureMoments::Convolution { n, m, rho } => {
                let lag = (j + n - h) % n;
                Ok(rho[lag] / *m as f64)
            }
            MixtureMoments::Permutation {
                m,
                x_bar,
                norm_sq,
                row_means,
                ..
            } => {
                let nf = n as f64;
                let delta = if j == h { 1.0 } else { 0.0 };
                let shape = delta - nf * row_means[j - 1] * row_means[h - 1];
                let spread = norm_sq - nf * x_bar * x_bar;
                Ok(nf / (*m as f64 * (nf - 1.0)) * shape * spread)
            }
        }
    }

    /// var{z_j} = cov(j, j).
    pub fn var(&self, j: usize) -> Result<f64> {
        self.cov(j, j)
    }

    /// E{y} over measurements: n⁻¹ Σ_j μ_j.
    pub fn measurement_mean(&self) -> f64 {
        match self {
            MixtureMoments::SignDiagonal { .. } | MixtureMoments::Convolution { .. } => 0.0,
            MixtureMoments::Permutation {
                m,
                x_bar,
                row_means,
                ..
            } => {
                let n = row_means.len() as f64;
                let w_grand: f64 = row_means.iter().sum::<f64>() / n;
                n.powf(1.5) / (*m as f64).sqrt() * w_grand * x_bar
            }
        }
    }

    /// var{y} = m⁻¹‖x‖₂² − μ_y².
    pub fn measurement_var(&self) -> f64 {
        let mu = self.measurement_mean();
        let norm_sq = match self {
            MixtureMoments::SignDiagonal { norm_sq, .. } => *norm_sq,
            MixtureMoments::Convolution { rho, .. } => rho[0],
            MixtureMoments::Permutation { norm_sq, .. } => *norm_sq,
        };
        norm_sq / self.m() as f64 - mu * mu
    }

    /// Mean vector over a probe index set.
    pub fn mean_probe(&self, probe: &[usize]) -> Result<Vec<f64>> {
        check_probe(self.n(), probe, MAX_PROBE)?;
        probe.iter().map(|&j| self.mean(j)).collect()
    }

    /// Dense covariance submatrix over a probe index set (≤ [`MAX_PROBE`]).
    pub fn cov_submatrix(&self, probe: &[usize]) -> Result<Vec<Vec<f64>>> {
        check_probe(self.n(), probe, MAX_PROBE)?;
        let k = probe.len();
        let mut out = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in a..k {
                let v = self.cov(probe[a], probe[b])?;
                out[a][b] = v;
                out[b][a] = v;
            }
        }
        Ok(out)
    }
}

/// Moments of the sign-diagonal mixture `√(n/m)·W·diag(ε)·x`.
pub fn lr_moments(t: &TransformOp, x: &Signal, m: usize) -> Result<MixtureMoments> {
    t.validate()?;
    if x.len() != t.order() {
        return Err(Error::DimensionMismatch {
            expected: t.order(),
            got: x.len(),
        });
    }
    if m == 0 {
        return Err(Error::invalid("m", "must be positive"));
    }
    let squared: Vec<f64> = x.samples().iter().map(|v| v * v).collect();
    let wxx = t.apply_forward(&squared)?;
    Ok(MixtureMoments::SignDiagonal {
        transform: t.clone(),
        m,
        wxx,
        norm_sq: x.energy(),
    })
}

/// Moments of the random-convolution mixture.
pub fn rc_moments(x: &Signal, m: usize) -> Result<MixtureMoments> {
    let n = x.len();
    if !n.is_multiple_of(2) {
        return Err(Error::invalid("x", "random convolution requires even n"));
    }
    if m == 0 {
        return Err(Error::invalid("m", "must be positive"));
    }
    // Circular autocorrelation through the power spectrum.
    let mut buf: Vec<Complex64> = x
        .samples()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft::forward(&mut buf);
    for v in buf.iter_mut() {
        *v = Complex64::new(v.norm_sqr(), 0.0);
    }
    fft::inverse(&mut buf);
    let rho: Vec<f64> = buf.iter().map(|v| v.re / n as f64).collect();
    Ok(MixtureMoments::Convolution { n, m, rho })
}

/// Moments of the permutation mixture.
pub fn gr_moments(t: &TransformOp, x: &Signal, m: usize) -> Result<MixtureMoments> {
    t.validate()?;
    if x.len() != t.order() {
        return Err(Error::DimensionMismatch {
            expected: t.order(),
            got: x.len(),
        });
    }
    if m == 0 {
        return Err(Error::invalid("m", "must be positive"));
    }
    Ok(MixtureMoments::Permutation {
        transform: t.clone(),
        m,
        x_bar: x.mean(),
        norm_sq: x.energy(),
        row_means: t.row_means(),
    })
}

/// Real/imaginary variance split of a complex DFT measurement pair at
/// 1-based frequency index `h` in `2..=n/2`.
pub fn dft_pair_variance(x: &Signal, m: usize, h: usize) -> Result<DftPairVariance> {
    let n = x.len();
    if m == 0 {
        return Err(Error::invalid("m", "must be positive"));
    }
    if h < 2 || h > n / 2 {
        return Err(Error::IndexOutOfRange { index: h, n: n / 2 });
    }
    let mut q = 0.0;
    for (k, &v) in x.samples().iter().enumerate() {
        let angle = 4.0 * std::f64::consts::PI * (h - 1) as f64 * k as f64 / n as f64;
        q += v * v * math::cos(angle);
    }
    q /= m as f64;
    let sigma_y_sq = x.energy() / m as f64;
    Ok(DftPairVariance {
        sigma_real_sq: sigma_y_sq + q,
        sigma_imag_sq: sigma_y_sq - q,
        q_h: q,
    })
}

/// Unitary DFT magnitudes of the signal.
fn unitary_dft_infnorm(x: &Signal) -> f64 {
    let n = x.len();
    let mut buf: Vec<Complex64> = x
        .samples()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft::forward(&mut buf);
    let scale = 1.0 / (n as f64).sqrt();
    buf.iter().map(|v| v.norm() * scale).fold(0.0, f64::max)
}

/// Flatness ratio α = n^{-1/2}·‖v‖₂/‖v‖∞ of the centered signal; `None`
/// when centering leaves nothing.
pub fn centered_signal_flatness(x: &Signal) -> Option<f64> {
    let mean = x.mean();
    let mut norm_sq = 0.0;
    let mut inf = 0.0f64;
    for &v in x.samples() {
        let c = v - mean;
        norm_sq += c * c;
        inf = inf.max(c.abs());
    }
    let scale = x.samples().iter().map(|v| v.abs()).fold(0.0, f64::max);
    if inf <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return None;
    }
    Some((norm_sq / x.len() as f64).sqrt() / inf)
}

/// Finite-n diagnostics for the normality conditions over a probe set.
pub fn amn_diagnostics(mm: &MixtureMoments, x: &Signal, probe: &[usize]) -> Result<AmnReport> {
    let n = mm.n();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    check_probe(n, probe, 64)?;
    if probe.is_empty() {
        return Err(Error::invalid("probe", "probe must be nonempty"));
    }
    let scale = mm.m() as f64 / n as f64;

    let (max_row_infnorm, beta_j) = match mm {
        MixtureMoments::SignDiagonal { transform, .. }
        | MixtureMoments::Permutation { transform, .. } => {
            let mut worst = 0.0f64;
            let mut betas = Vec::with_capacity(probe.len());
            for &j in probe {
                let stats = transform.row_stats(j)?;
                worst = worst.max(stats.inf_norm);
                betas.push(stats.flatness.map(f64::sqrt));
            }
            (worst, betas)
        }
        MixtureMoments::Convolution { n, .. } => {
            // Convolution rows have constant modulus n^{-1/2}: maximally flat.
            ((*n as f64).powf(-0.5), vec![Some(1.0); probe.len()])
        }
    };

    let mut min_var = f64::INFINITY;
    for &j in probe {
        min_var = min_var.min(mm.var(j)?);
    }
    let sub = mm.cov_submatrix(probe)?;
    let scaled: Vec<Vec<f64>> = sub
        .iter()
        .map(|row| row.iter().map(|v| v * scale).collect())
        .collect();
    let eigs = math::symmetric_eigenvalues(&scaled)?;

    Ok(AmnReport {
        max_row_infnorm,
        scaled_min_variance: scale * min_var,
        scaled_cov_min_eig: eigs[0],
        signal_energy_density: x.energy() / n as f64,
        fx_infnorm: unitary_dft_infnorm(x),
        alpha_x: centered_signal_flatness(x),
        beta_j,
    })
}

/// Number of distinct mixture-component classes, grouping rows by their
/// entry multiset. Entries across all rows are clustered first, with a
/// tolerance of 1e-9 of the largest entry magnitude, so two computations
/// of the same exact value can never land in different classes.
pub fn count_distinct_components(t: &TransformOp) -> Result<usize> {
    t.validate()?;
    let n = t.order();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut all: Vec<f64> = Vec::with_capacity(n * n);
    for j in 1..=n {
        let row = t.row(j)?;
        all.extend_from_slice(&row);
        rows.push(row);
    }
    all.sort_by(f64::total_cmp);
    let scale = all
        .iter()
        .fold(f64::MIN_POSITIVE, |acc, v| acc.max(v.abs()));
    let tol = 1e-9 * scale;
    let mut reps: Vec<f64> = Vec::new();
    for &v in &all {
        match reps.last() {
            Some(&rep) if v - rep <= tol => {}
            _ => reps.push(v),
        }
    }
    let mut classes: std::collections::HashSet<Vec<u32>> = Default::default();
    for row in rows {
        let mut fingerprint: Vec<u32> = row
            .iter()
            .map(|&v| (reps.partition_point(|&rep| rep <= v) - 1) as u32)
            .collect();
        fingerprint.sort_unstable();
        classes.insert(fingerprint);
    }
    Ok(classes.len())
}

/// Keep the `k` largest-magnitude entries of `W(x∘x)`; ties broken by the
/// lower index.
pub fn topk_model(t: &TransformOp, x: &Signal, k: usize) -> Result<TopKModel> {
    t.validate()?;
    let n = t.order();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if k > n {
        return Err(Error::invalid("k", format!("k = {k} exceeds n = {n}")));
    }
    let squared: Vec<f64> = x.samples().iter().map(|v| v * v).collect();
    let wxx = t.apply_forward(&squared)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        wxx[b]
            .abs()
            .partial_cmp(&wxx[a].abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut kept: Vec<(usize, f64)> = order[..k].iter().map(|&i| (i + 1, wxx[i])).collect();
    kept.sort_by_key(|&(i, _)| i);
    let dropped_magnitude: f64 = order[k..].iter().map(|&i| wxx[i].abs()).sum();
    Ok(TopKModel {
        n,
        entries: kept,
        dropped_magnitude,
    })
}

/// Sign-diagonal covariance evaluated against a truncated `W(x∘x)` model.
pub fn lr_cov_from_model(
    t: &TransformOp,
    model: &TopKModel,
    m: usize,
    j: usize,
    h: usize,
) -> Result<f64> {
    if model.n != t.order() {
        return Err(Error::DimensionMismatch {
            expected: t.order(),
            got: model.n,
        });
    }
    let rep = t.pointwise_product_rep(j, h)?;
    let mut acc = 0.0;
    for term in &rep.terms {
        acc += term.gamma * model.value(term.index);
    }
    Ok((model.n as f64).sqrt() / m as f64 * acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use rand::Rng;

    fn random_signal(n: usize, seed: u64) -> Signal {
        let mut rng = stream_rng(seed, Stream::Simulation);
        Signal::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn sign_diagonal_constant_signal_is_white() {
        let t = TransformOp::dct(8).unwrap();
        let x = Signal::new(vec![1.0; 8]).unwrap();
        let mm = lr_moments(&t, &x, 2).unwrap();
        for j in 1..=8 {
            for h in 1..=8 {
                let want = if j == h { 8.0 / 2.0 } else { 0.0 };
                assert!((mm.cov(j, h).unwrap() - want).abs() < 1e-12, "({j},{h})");
            }
        }
    }

    #[test]
    fn wht_sign_diagonal_variances_equal_energy_over_m() {
        let t = TransformOp::wht(16).unwrap();
        let x = random_signal(16, 1);
        let mm = lr_moments(&t, &x, 4).unwrap();
        for j in 1..=16 {
            assert!((mm.var(j).unwrap() - x.energy() / 4.0).abs() < 1e-12);
        }
        assert!((mm.measurement_var() - x.energy() / 4.0).abs() < 1e-12);
        assert_eq!(mm.measurement_mean(), 0.0);
    }

    #[test]
    fn convolution_autocorrelation_facts() {
        let mut samples = vec![0.0; 8];
        samples[0] = 1.0;
        let impulse = Signal::new(samples).unwrap();
        let mm = rc_moments(&impulse, 2).unwrap();
        let MixtureMoments::Convolution { rho, .. } = &mm else {
            panic!()
        };
        assert!((rho[0] - 1.0).abs() < 1e-12);
        for l in 1..8 {
            assert!(rho[l].abs() < 1e-12, "lag {l}");
        }
        assert!((mm.cov(3, 3).unwrap() - 0.5).abs() < 1e-12);
        assert!((mm.cov(3, 5).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn permutation_moments_match_the_closed_forms() {
        let t = TransformOp::wht(16).unwrap();
        let x = random_signal(16, 3);
        let mm = gr_moments(&t, &x, 4).unwrap();
        let spread = x.energy() - 16.0 * x.mean() * x.mean();
        for j in 2..=16 {
            assert!(
                mm.mean(j).unwrap().abs() < 1e-15,
                "non-DC rows have zero mean"
            );
            let want = 16.0 / (4.0 * 15.0) * spread;
            assert!((mm.var(j).unwrap() - want).abs() < 1e-12);
            for h in (j + 1)..=16 {
                assert!(mm.cov(j, h).unwrap().abs() < 1e-15);
            }
        }
        let mu1 = 16f64.powf(1.5) / 2.0 * 16f64.powf(-0.5) * x.mean();
        assert!((mm.mean(1).unwrap() - mu1).abs() < 1e-12);
        assert!(
            mm.var(1).unwrap().abs() < 1e-12,
            "DC component is deterministic"
        );

        let constant = Signal::new(vec![0.3; 16]).unwrap();
        let mmc = gr_moments(&t, &constant, 4).unwrap();
        for j in 1..=16 {
            assert!(mmc.var(j).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn measurement_variance_identity_holds_for_all_modes() {
        let x = random_signal(16, 9);
        let t = TransformOp::dct(16).unwrap();
        for mm in [
            lr_moments(&t, &x, 4).unwrap(),
            rc_moments(&x, 4).unwrap(),
            gr_moments(&t, &x, 4).unwrap(),
        ] {
            let mu = mm.measurement_mean();
            let want = x.energy() / 4.0 - mu * mu;
            assert!((mm.measurement_var() - want).abs() < 1e-12);
            let mean_of_means: f64 = (1..=16).map(|j| mm.mean(j).unwrap()).sum::<f64>() / 16.0;
            assert!((mu - mean_of_means).abs() < 1e-12);
        }
    }

    #[test]
    fn probe_validation() {
        let t = TransformOp::wht(8).unwrap();
        let x = random_signal(8, 2);
        let mm = lr_moments(&t, &x, 2).unwrap();
        assert!(mm.cov_submatrix(&[1, 9]).is_err());
        assert!(mm.cov(0, 1).is_err());
        assert!(amn_diagnostics(&mm, &x, &(1..=65).collect::<Vec<_>>()).is_err());
    }

    #[test]
    fn topk_full_keep_is_exact_and_ties_go_low() {
        let t = TransformOp::wht(8).unwrap();
        let x = Signal::new(vec![2.0; 8]).unwrap();
        let model = topk_model(&t, &x, 1).unwrap();
        assert_eq!(model.entries.len(), 1);
        assert_eq!(model.entries[0].0, 1, "constant signal concentrates at DC");
        assert!(model.dropped_magnitude < 1e-12);

        let x = random_signal(8, 5);
        let full = topk_model(&t, &x, 8).unwrap();
        assert_eq!(full.dropped_magnitude, 0.0);
        let mm = lr_moments(&t, &x, 2).unwrap();
        for j in 1..=8 {
            for h in 1..=8 {
                let direct = mm.cov(j, h).unwrap();
                let modeled = lr_cov_from_model(&t, &full, 2, j, h).unwrap();
                assert!((direct - modeled).abs() < 1e-12);
            }
        }
    }
}
