//! Model-driven decorrelation of selected mixture components: group the
//! measurements, predict each one from already-coded members of its group
//! using the covariance model, and quantize only the prediction residual.
//!
//! The plan is a pure function of (covariance model, selection, group
//! size), all of which the decoder reconstructs from side information, so
//! both ends derive the same groups, coefficients and residual variances
//! without ever seeing the data. Encoding is closed-loop: predictions use
//! the quantized values `ẑ`, never the raw ones, so decoder state stays
//! bit-identical to the encoder's.

use crate::error::{Error, Result};
use crate::math;
use crate::moments::MixtureMoments;
use crate::quant::QuantizerSpec;

/// One prediction group: members in coding order plus their model data.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionGroup {
    /// Positions into the original selection (0-based).
    pub positions: Vec<usize>,
    /// Component indices (1-based) in coding order.
    pub components: Vec<usize>,
    /// `coeffs[q]` holds the taps for member `q` against members `0..q`;
    /// truncated taps are zero.
    pub coeffs: Vec<Vec<f64>>,
    /// Planned residual variances, clamped at zero.
    pub residual_vars: Vec<f64>,
    /// Component means from the moment model.
    pub means: Vec<f64>,
}

/// Grouping plus per-member prediction data for a whole measurement set.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionPlan {
    pub group_size: usize,
    pub groups: Vec<PredictionGroup>,
}

impl PredictionPlan {
    /// Total member count across groups.
    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.positions.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Build the deterministic plan for `selection` under the covariance
/// model, with groups of (at most) `r` members.
///
/// Members are ordered by ascending component index. Toeplitz-like models
/// (convolution, permutation) group consecutive runs; the sign-diagonal
/// model grows each group greedily by largest absolute model covariance
/// to the members already chosen, ties to the lower index. A trailing
/// group keeps its natural short size when `r` does not divide `m`.
pub fn plan(mm: &MixtureMoments, selection: &[usize], r: usize) -> Result<PredictionPlan> {
    if r == 0 || r > 16 {
        return Err(Error::invalid("r", "group size must lie in 1..=16"));
    }
    let n = mm.n();
    for &c in selection {
        if c == 0 || c > n {
            return Err(Error::IndexOutOfRange { index: c, n });
        }
    }
    let mut order: Vec<usize> = (0..selection.len()).collect();
    order.sort_by_key(|&p| (selection[p], p));

    let grouped: Vec<Vec<usize>> = match mm {
        MixtureMoments::Convolution { .. } | MixtureMoments::Permutation { .. } => {
            order.chunks(r).map(|c| c.to_vec()).collect()
        }
        MixtureMoments::SignDiagonal { .. } => {
            let mut remaining = order.clone();
            let mut groups = Vec::new();
            while !remaining.is_empty() {
                let mut group = vec![remaining.remove(0)];
                while group.len() < r && !remaining.is_empty() {
                    let mut best = 0usize;
                    let mut best_score = f64::NEG_INFINITY;
                    for (slot, &candidate) in remaining.iter().enumerate() {
                        let mut score = 0.0;
                        for &member in &group {
                            score += mm.cov(selection[member], selection[candidate])?.abs();
                        }
                        if score > best_score {
                            best_score = score;
                            best = slot;
                        }
                    }
                    group.push(remaining.remove(best));
                }
                groups.push(group);
            }
            groups
        }
    };

    let mut groups = Vec::with_capacity(grouped.len());
    for members in grouped {
        let components: Vec<usize> = members.iter().map(|&p| selection[p]).collect();
        let size = components.len();
        let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(size);
        let mut residual_vars = Vec::with_capacity(size);
        let mut means = Vec::with_capacity(size);
        for q in 0..size {
            means.push(mm.mean(components[q])?);
            let full: Vec<Vec<f64>> = (0..q)
                .map(|a| {
                    (0..q)
                        .map(|b| mm.cov(components[a], components[b]).unwrap())
                        .collect()
                })
                .collect();
            let rhs: Vec<f64> = (0..q)
                .map(|a| mm.cov(components[a], components[q]).unwrap())
                .collect();
            let mut taps = vec![0.0; q];
            let mut solved = 0usize;
            for k in (0..=q).rev() {
                if k == 0 {
                    break;
                }
                let leading: Vec<Vec<f64>> = (0..k).map(|a| full[a][..k].to_vec()).collect();
                if let Some(l) = math::cholesky(&leading) {
                    let solution = math::cholesky_solve(&l, &rhs[..k]);
                    taps[..k].copy_from_slice(&solution);
                    solved = k;
                    break;
                }
            }
            let explained: f64 = (0..solved).map(|a| taps[a] * rhs[a]).sum();
            let var_u = mm.var(components[q])? - explained;
            residual_vars.push(var_u.max(0.0));
            coeffs.push(taps);
        }
        groups.push(PredictionGroup {
            positions: members,
            components,
            coeffs,
            residual_vars,
            means,
        });
    }
    Ok(PredictionPlan {
        group_size: r,
        groups,
    })
}

fn predict(group: &PredictionGroup, q: usize, zhat: &[f64]) -> f64 {
    let mut p = group.means[q];
    for (h, &a) in group.coeffs[q].iter().enumerate() {
        p += a * (zhat[h] - group.means[h]);
    }
    p
}

/// Quantize one group closed-loop; returns the codewords and the
/// reconstructed values the decoder will reproduce.
pub fn encode_group(
    group: &PredictionGroup,
    values: &[f64],
    quantizers: &[QuantizerSpec],
) -> Result<(Vec<u32>, Vec<f64>)> {
    let size = group.components.len();
    if values.len() != size || quantizers.len() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            got: values.len().min(quantizers.len()),
        });
    }
    let mut codewords = Vec::with_capacity(size);
    let mut zhat = Vec::with_capacity(size);
    for q in 0..size {
        let pred = predict(group, q, &zhat);
        let residual = values[q] - pred;
        let c = quantizers[q].quantize(residual);
        let rebuilt = pred + quantizers[q].dequantize(c)?;
        codewords.push(c);
        zhat.push(rebuilt);
    }
    Ok((codewords, zhat))
}

/// Rebuild a group from its codewords; bit-identical to the encoder's
/// internal reconstruction.
pub fn decode_group(
    group: &PredictionGroup,
    codewords: &[u32],
    quantizers: &[QuantizerSpec],
) -> Result<Vec<f64>> {
    let size = group.components.len();
    if codewords.len() != size || quantizers.len() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            got: codewords.len().min(quantizers.len()),
        });
    }
    let mut zhat = Vec::with_capacity(size);
    for q in 0..size {
        let pred = predict(group, q, &zhat);
        zhat.push(pred + quantizers[q].dequantize(codewords[q])?);
    }
    Ok(zhat)
}

/// Open-loop residuals against the raw values, for model diagnostics.
pub fn open_loop_residuals(group: &PredictionGroup, values: &[f64]) -> Result<Vec<f64>> {
    let size = group.components.len();
    if values.len() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            got: values.len(),
        });
    }
    let mut out = Vec::with_capacity(size);
    for q in 0..size {
        let mut pred = group.means[q];
        for (h, &a) in group.coeffs[q].iter().enumerate() {
            pred += a * (values[h] - group.means[h]);
        }
        out.push(values[q] - pred);
    }
    Ok(out)
}
