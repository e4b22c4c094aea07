//! Lossless channel coding of quantized measurements and the container
//! that carries them.
//!
//! A stream holds two things: a side-information header describing the
//! operator, the signal model, and the coding configuration; and an
//! entropy-coded payload of quantizer codewords. Everything the decoder
//! needs — the selection draw, the measurement distribution model, per-TV
//! quantizers, the prediction plan — is rederived from the header through
//! [`derive_scheme`], the single function both pipelines share, so the
//! decoder's reconstruction is bit-identical to the encoder's without ever
//! touching the signal. A hash of the derived quantizer tables rides in
//! the header and catches any derivation mismatch up front.
//!
//! Container layout (all integers little-endian):
//!
//! ```text
//! "SRMC" | version u16 | scheme hash u64 | side length u32 |
//! side info (compact JSON) | payload bit count u64 | payload bytes
//! ```
//!
//! The payload occupies exactly `ceil(bits / 8)` bytes, zero-padded;
//! anything shorter or longer is rejected.

pub mod arith;
pub mod bits;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linpred::{self, PredictionPlan};
use crate::moments::{topk_model, MixtureMoments, TopKModel};
use crate::quant::{
    self, codeword_probs, design_lloyd_max, design_uniform, design_uniform_step, GaussianModel,
    QuantizerSpec,
};
use crate::sensing::{self, Mode, SensingSpec, Signal};
use crate::tailbounds::TailBound;
use crate::transforms::TransformOp;

use arith::SymbolModel;
use bits::{BitReader, BitWriter};

pub const MAGIC: [u8; 4] = *b"SRMC";
pub const VERSION: u16 = 1;

/// Payload channel code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coder {
    /// Arithmetic coding against the per-TV Gaussian codeword models.
    #[default]
    Vlc,
    /// `ceil(log2(alphabet))` bits per TV.
    Flc,
}

/// How each transmitted variable's quantizer is built from its Gaussian
/// model. Ranges follow the subgaussian envelope `2·exp(-t²/2)` inverted
/// at the saturation budget, which both ends can evaluate from side
/// information alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuantizerConfig {
    /// Fixed cell count, range set per TV from the saturation budget.
    Uniform { levels: u32, delta_sat: f64 },
    /// One explicit range shared by every TV.
    UniformRange { levels: u32, lo: f64, hi: f64 },
    /// Fixed cell width, cell count set per TV from the budget.
    UniformStep { step: f64, delta_sat: f64 },
    /// Lloyd-Max design rerun by the decoder; `tol` is part of the format.
    LloydMax { levels: u32, tol: f64 },
}

/// Signal model carried to the decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelInfo {
    /// Equal-variance modes: one standard deviation covers every TV.
    MeasurementSigma { sigma_y: f64 },
    /// Sign-diagonal covariance through a truncated `W(x∘x)`.
    TopK { model: TopKModel, norm_sq: f64 },
    /// Circular autocorrelation at lags `0..rho.len()`, zero beyond.
    Autocorrelation { rho: Vec<f64> },
    /// Permutation mode: the two scalars that determine everything.
    Permutation { x_bar: f64, norm_l2: f64 },
}

/// Complete header contents: enough to rebuild the coding scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideInfo {
    pub spec: SensingSpec,
    pub model: ModelInfo,
    pub quantizer: QuantizerConfig,
    pub coder: Coder,
    /// Prediction group size; 0 disables prediction.
    pub prediction: u16,
}

/// Which model the encoder puts in the header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    /// Pick per mode: permutation → scalars, convolution → autocorrelation
    /// when predicting else σ_y, sign-diagonal → σ_y on equal-magnitude
    /// rows else top-K.
    #[default]
    Auto,
    MeasurementSigma,
    TopK,
    Autocorrelation,
    Permutation,
}

fn default_top_k() -> usize {
    32
}

fn default_lag_window() -> usize {
    64
}

/// Encoder-side configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodingConfig {
    #[serde(default)]
    pub model: ModelChoice,
    pub quantizer: QuantizerConfig,
    #[serde(default)]
    pub coder: Coder,
    #[serde(default)]
    pub prediction: u16,
    /// Entries kept by the top-K model.
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    /// Autocorrelation lags kept (clamped to n/2 + 1).
    #[serde(default = "default_lag_window")]
    pub lag_window: usize,
}

/// Everything encode produces: the stream plus the encoder's own view of
/// the reconstruction, for verification against the decoder.
#[derive(Debug, Clone)]
pub struct EncodeOutput {
    pub bytes: Vec<u8>,
    pub side_info: SideInfo,
    /// Reconstructed TV values per measurement position.
    pub reconstruction: Vec<f64>,
    pub saturated: Vec<bool>,
    /// Codewords in coding order.
    pub codewords: Vec<u32>,
    pub header_bits: u64,
    pub payload_bits: u64,
    /// Sum of per-TV model entropies, the VLC rate target.
    pub model_entropy_bits: f64,
}

/// Decoder output; `values[k]` reconstructs the TV of measurement `k`.
#[derive(Debug, Clone)]
pub struct Decoded {
    pub side_info: SideInfo,
    pub values: Vec<f64>,
    pub saturated: Vec<bool>,
    pub codewords: Vec<u32>,
    pub header_bits: u64,
    pub payload_bits: u64,
}

/// The shared derivation both pipelines run on the side information.
#[derive(Debug, Clone)]
pub struct Scheme {
    /// 1-based selected components in draw order.
    pub selection: Vec<usize>,
    /// Selection positions in coding order (omitted ones absent).
    pub coding_positions: Vec<usize>,
    pub plan: Option<PredictionPlan>,
    /// Per coded TV, aligned with `coding_positions`.
    pub quantizers: Vec<QuantizerSpec>,
    pub gaussians: Vec<GaussianModel>,
    model_index: Vec<usize>,
    models: Vec<SymbolModel>,
    model_entropies: Vec<f64>,
    /// Positions reconstructed from side information alone.
    pub omitted_positions: Vec<usize>,
    pub omitted_value: f64,
    /// FNV-1a over the derived quantizer tables.
    pub hash: u64,
}

impl Scheme {
    pub fn coded_count(&self) -> usize {
        self.coding_positions.len()
    }

    /// Expected payload bits under the per-TV models.
    pub fn model_entropy_bits(&self) -> f64 {
        self.model_index
            .iter()
            .map(|&i| self.model_entropies[i])
            .sum()
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(hash: &mut u64, bytes: &[u8]) {
    for &b in bytes {
        *hash ^= b as u64;
        *hash = hash.wrapping_mul(FNV_PRIME);
    }
}

fn validate_side(side: &SideInfo) -> Result<()> {
    side.spec.validate()?;
    let n = side.spec.n;
    if side.spec.mode == Mode::Rst {
        return Err(Error::Unsupported(
            "randomly sampled transforms carry no randomizer model to code against".into(),
        ));
    }
    if side.prediction > 16 {
        return Err(Error::invalid(
            "prediction",
            "group size must lie in 0..=16",
        ));
    }
    match (&side.model, side.spec.mode) {
        (ModelInfo::MeasurementSigma { sigma_y }, Mode::Lr | Mode::Rc) => {
            if !(sigma_y.is_finite() && *sigma_y >= 0.0) {
                return Err(Error::invalid("sigma_y", "must be finite and nonnegative"));
            }
            if side.prediction > 0 {
                return Err(Error::Unsupported(
                    "prediction needs a covariance model, not a single σ_y".into(),
                ));
            }
        }
        (ModelInfo::TopK { model, norm_sq }, Mode::Lr) => {
            if model.n != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: model.n,
                });
            }
            if !(norm_sq.is_finite() && *norm_sq >= 0.0) {
                return Err(Error::invalid("norm_sq", "must be finite and nonnegative"));
            }
            let mut last = 0usize;
            for &(i, v) in &model.entries {
                if i <= last || i > n || !v.is_finite() {
                    return Err(Error::invalid(
                        "model",
                        "entries must be ascending in 1..=n",
                    ));
                }
                last = i;
            }
        }
        (ModelInfo::Autocorrelation { rho }, Mode::Rc) => {
            if rho.is_empty() || rho.len() > n / 2 + 1 {
                return Err(Error::invalid("rho", "need 1..=n/2+1 lags"));
            }
            if rho.iter().any(|v| !v.is_finite()) || rho[0] < 0.0 {
                return Err(Error::invalid("rho", "lags must be finite with ρ(0) ≥ 0"));
            }
        }
        (ModelInfo::Permutation { x_bar, norm_l2 }, Mode::Gr) => {
            if !x_bar.is_finite() || !(norm_l2.is_finite() && *norm_l2 >= 0.0) {
                return Err(Error::invalid(
                    "model",
                    "permutation scalars must be finite",
                ));
            }
            if side.prediction > 0 {
                return Err(Error::Unsupported(
                    "permutation mixtures are uncorrelated; prediction is not defined".into(),
                ));
            }
        }
        (model, mode) => {
            return Err(Error::Unsupported(format!(
                "model {model:?} does not fit mode {mode:?}"
            )));
        }
    }
    match side.quantizer {
        QuantizerConfig::Uniform { levels, delta_sat } => {
            if levels < 2 {
                return Err(Error::invalid("levels", "need at least 2 cells"));
            }
            if !(delta_sat > 0.0 && delta_sat < 1.0) {
                return Err(Error::invalid("delta_sat", "must lie in (0, 1)"));
            }
        }
        QuantizerConfig::UniformRange { levels, lo, hi } => {
            if levels < 2 {
                return Err(Error::invalid("levels", "need at least 2 cells"));
            }
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid("range", "need finite lo < hi"));
            }
        }
        QuantizerConfig::UniformStep { step, delta_sat } => {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::invalid("step", "must be positive and finite"));
            }
            if !(delta_sat > 0.0 && delta_sat < 1.0) {
                return Err(Error::invalid("delta_sat", "must lie in (0, 1)"));
            }
        }
        QuantizerConfig::LloydMax { levels, tol } => {
            if levels < 2 {
                return Err(Error::invalid("levels", "need at least 2 cells"));
            }
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Error::invalid("tol", "must be positive and finite"));
            }
        }
    }
    Ok(())
}

fn model_moments(side: &SideInfo) -> Result<Option<MixtureMoments>> {
    let spec = &side.spec;
    Ok(match &side.model {
        ModelInfo::MeasurementSigma { .. } => None,
        ModelInfo::TopK { model, norm_sq } => {
            let mut wxx = vec![0.0; spec.n];
            for &(i, v) in &model.entries {
                wxx[i - 1] = v;
            }
            Some(MixtureMoments::SignDiagonal {
                transform: spec.transform.clone(),
                m: spec.m,
                wxx,
                norm_sq: *norm_sq,
            })
        }
        ModelInfo::Autocorrelation { rho } => {
            let full: Vec<f64> = (0..spec.n)
                .map(|l| {
                    let lag = l.min(spec.n - l);
                    if lag < rho.len() {
                        rho[lag]
                    } else {
                        0.0
                    }
                })
                .collect();
            Some(MixtureMoments::Convolution {
                n: spec.n,
                m: spec.m,
                rho: full,
            })
        }
        ModelInfo::Permutation { x_bar, norm_l2 } => Some(MixtureMoments::Permutation {
            transform: spec.transform.clone(),
            m: spec.m,
            x_bar: *x_bar,
            norm_sq: norm_l2 * norm_l2,
            row_means: spec.transform.row_means(),
        }),
    })
}

fn build_quantizer(config: QuantizerConfig, g: &GaussianModel) -> Result<QuantizerSpec> {
    let bound = TailBound::SignDiagonal;
    match config {
        QuantizerConfig::Uniform { levels, delta_sat } => {
            design_uniform(g, levels, delta_sat, &bound)
        }
        QuantizerConfig::UniformRange { levels, lo, hi } => {
            Ok(QuantizerSpec::Uniform { levels, lo, hi })
        }
        QuantizerConfig::UniformStep { step, delta_sat } => {
            design_uniform_step(g, step, delta_sat, &bound)
        }
        QuantizerConfig::LloydMax { levels, tol } => {
            if g.sigma == 0.0 {
                Ok(QuantizerSpec::Degenerate { value: g.mean })
            } else {
                design_lloyd_max(g, levels, tol)
            }
        }
    }
}

/// Rebuild the full coding scheme from side information alone.
pub fn derive_scheme(side: &SideInfo) -> Result<Scheme> {
    validate_side(side)?;
    let spec = &side.spec;
    let d = spec.draw()?;
    let selection = d.selection_indices;
    let m = selection.len();

    let mm = model_moments(side)?;

    let mut omitted_positions = Vec::new();
    let mut omitted_value = 0.0;
    let mut eligible: Vec<usize> = (0..m).collect();
    if spec.mode == Mode::Gr {
        let x_bar = match &side.model {
            ModelInfo::Permutation { x_bar, .. } => *x_bar,
            _ => unreachable!("validated"),
        };
        omitted_value = spec.n as f64 / (spec.m as f64).sqrt() * x_bar;
        omitted_positions = eligible
            .iter()
            .copied()
            .filter(|&p| selection[p] == 1)
            .collect();
        eligible.retain(|&p| selection[p] != 1);
    }

    let (plan, coding_positions, tv_models): (
        Option<PredictionPlan>,
        Vec<usize>,
        Vec<GaussianModel>,
    ) = if side.prediction > 0 {
        let mm = mm.as_ref().expect("prediction requires a covariance model");
        let p = linpred::plan(mm, &selection, side.prediction as usize)?;
        let mut positions = Vec::with_capacity(m);
        let mut models = Vec::with_capacity(m);
        for g in &p.groups {
            for (q, &pos) in g.positions.iter().enumerate() {
                positions.push(pos);
                models.push(GaussianModel::new(0.0, g.residual_vars[q].max(0.0).sqrt())?);
            }
        }
        (Some(p), positions, models)
    } else {
        let mut models = Vec::with_capacity(eligible.len());
        for &p in &eligible {
            let g = match (&side.model, &mm) {
                (ModelInfo::MeasurementSigma { sigma_y }, _) => GaussianModel::new(0.0, *sigma_y)?,
                (_, Some(mm)) => {
                    let c = selection[p];
                    GaussianModel::new(mm.mean(c)?, mm.var(c)?.max(0.0).sqrt())?
                }
                _ => unreachable!("validated"),
            };
            models.push(g);
        }
        (None, eligible, models)
    };

    let mut quantizers = Vec::with_capacity(coding_positions.len());
    let mut model_index = Vec::with_capacity(coding_positions.len());
    let mut models: Vec<SymbolModel> = Vec::new();
    let mut model_entropies: Vec<f64> = Vec::new();
    let mut cache: std::collections::HashMap<(u64, u64), usize> = Default::default();
    let mut hash = FNV_OFFSET;
    for g in &tv_models {
        let q = build_quantizer(side.quantizer, g)?;
        fnv1a(&mut hash, &q.alphabet_size().to_le_bytes());
        for e in q.edges() {
            fnv1a(&mut hash, &e.to_bits().to_le_bytes());
        }
        for r in q.reproductions() {
            fnv1a(&mut hash, &r.to_bits().to_le_bytes());
        }
        let key = (g.mean.to_bits(), g.sigma.to_bits());
        let idx = match cache.get(&key) {
            Some(&idx) => idx,
            None => {
                let probs = codeword_probs(&q, g);
                let entropy = quant::entropy(&probs)?;
                models.push(SymbolModel::from_probs(&probs)?);
                model_entropies.push(entropy);
                let idx = models.len() - 1;
                cache.insert(key, idx);
                idx
            }
        };
        model_index.push(idx);
        quantizers.push(q);
    }

    Ok(Scheme {
        selection,
        coding_positions,
        plan,
        quantizers,
        gaussians: tv_models,
        model_index,
        models,
        model_entropies,
        omitted_positions,
        omitted_value,
        hash,
    })
}

fn resolve_model(spec: &SensingSpec, config: &CodingConfig) -> Result<ModelChoice> {
    Ok(match config.model {
        ModelChoice::Auto => match spec.mode {
            Mode::Gr => ModelChoice::Permutation,
            Mode::Rc => {
                if config.prediction > 0 {
                    ModelChoice::Autocorrelation
                } else {
                    ModelChoice::MeasurementSigma
                }
            }
            Mode::Lr => {
                if config.prediction > 0 {
                    ModelChoice::TopK
                } else if matches!(spec.transform, TransformOp::Wht { .. }) {
                    ModelChoice::MeasurementSigma
                } else {
                    ModelChoice::TopK
                }
            }
            Mode::Rst => {
                return Err(Error::Unsupported(
                    "randomly sampled transforms carry no randomizer model to code against".into(),
                ));
            }
        },
        explicit => explicit,
    })
}

fn build_model(x: &Signal, spec: &SensingSpec, config: &CodingConfig) -> Result<ModelInfo> {
    Ok(match resolve_model(spec, config)? {
        ModelChoice::MeasurementSigma => ModelInfo::MeasurementSigma {
            sigma_y: x.norm_l2() / (spec.m as f64).sqrt(),
        },
        ModelChoice::TopK => {
            if config.top_k == 0 {
                return Err(Error::invalid("top_k", "must be at least 1"));
            }
            ModelInfo::TopK {
                model: topk_model(&spec.transform, x, config.top_k.min(spec.n))?,
                norm_sq: x.energy(),
            }
        }
        ModelChoice::Autocorrelation => {
            if config.lag_window == 0 {
                return Err(Error::invalid("lag_window", "must be at least 1"));
            }
            let mm = crate::moments::rc_moments(x, spec.m)?;
            let rho = match mm {
                MixtureMoments::Convolution { rho, .. } => rho,
                _ => unreachable!(),
            };
            let keep = config.lag_window.min(spec.n / 2 + 1);
            ModelInfo::Autocorrelation {
                rho: rho[..keep].to_vec(),
            }
        }
        ModelChoice::Permutation => ModelInfo::Permutation {
            x_bar: x.mean(),
            norm_l2: x.norm_l2(),
        },
        ModelChoice::Auto => unreachable!("resolved above"),
    })
}

fn code_payload(scheme: &Scheme, coder: Coder, codewords: &[u32]) -> Result<(Vec<u8>, u64)> {
    match coder {
        Coder::Vlc => {
            arith::arithmetic_encode(codewords, |i| &scheme.models[scheme.model_index[i]])
        }
        Coder::Flc => {
            let mut w = BitWriter::new();
            for (i, &c) in codewords.iter().enumerate() {
                let alphabet = scheme.quantizers[i].alphabet_size();
                if c >= alphabet {
                    return Err(Error::BadCodeword {
                        codeword: c,
                        alphabet,
                    });
                }
                w.push_bits(c as u64, bits::flc_bits(alphabet)?);
            }
            Ok(w.finish())
        }
    }
}

fn decode_payload(scheme: &Scheme, coder: Coder, payload: &[u8], bit_len: u64) -> Result<Vec<u32>> {
    let count = scheme.coded_count();
    match coder {
        Coder::Vlc => arith::arithmetic_decode(payload, bit_len, count, |i| {
            &scheme.models[scheme.model_index[i]]
        }),
        Coder::Flc => {
            let mut r = BitReader::new(payload, bit_len)?;
            let mut out = Vec::with_capacity(count);
            for q in &scheme.quantizers {
                let alphabet = q.alphabet_size();
                let c = r.read_bits(bits::flc_bits(alphabet)?)? as u32;
                if c >= alphabet {
                    return Err(Error::BadCodeword {
                        codeword: c,
                        alphabet,
                    });
                }
                out.push(c);
            }
            Ok(out)
        }
    }
}

/// Rebuild per-position values and flags from coding-order codewords.
fn reconstruct(scheme: &Scheme, codewords: &[u32]) -> Result<(Vec<f64>, Vec<bool>)> {
    let m = scheme.selection.len();
    let mut values = vec![0.0; m];
    let mut saturated = vec![false; m];
    for &p in &scheme.omitted_positions {
        values[p] = scheme.omitted_value;
    }
    match &scheme.plan {
        Some(plan) => {
            let mut tv = 0usize;
            for g in &plan.groups {
                let size = g.positions.len();
                let zhat = linpred::decode_group(
                    g,
                    &codewords[tv..tv + size],
                    &scheme.quantizers[tv..tv + size],
                )?;
                for (k, &pos) in g.positions.iter().enumerate() {
                    values[pos] = zhat[k];
                    saturated[pos] = scheme.quantizers[tv + k].is_saturated(codewords[tv + k]);
                }
                tv += size;
            }
        }
        None => {
            for (tv, &pos) in scheme.coding_positions.iter().enumerate() {
                values[pos] = scheme.quantizers[tv].dequantize(codewords[tv])?;
                saturated[pos] = scheme.quantizers[tv].is_saturated(codewords[tv]);
            }
        }
    }
    Ok((values, saturated))
}

/// Run the full encoder: draw, mix, model, quantize, entropy-code, pack.
pub fn encode(x: &Signal, spec: &SensingSpec, config: &CodingConfig) -> Result<EncodeOutput> {
    spec.validate()?;
    if x.len() != spec.n {
        return Err(Error::DimensionMismatch {
            expected: spec.n,
            got: x.len(),
        });
    }
    let side = SideInfo {
        spec: spec.clone(),
        model: build_model(x, spec, config)?,
        quantizer: config.quantizer,
        coder: config.coder,
        prediction: config.prediction,
    };
    let scheme = derive_scheme(&side)?;

    let d = spec.draw()?;
    let z = sensing::mixture_vector(spec, &d, x)?;
    let tv_value = |pos: usize| z[scheme.selection[pos] - 1];

    let mut codewords = Vec::with_capacity(scheme.coded_count());
    match &scheme.plan {
        Some(plan) => {
            let mut tv = 0usize;
            for g in &plan.groups {
                let size = g.positions.len();
                let values: Vec<f64> = g.positions.iter().map(|&p| tv_value(p)).collect();
                let (cw, _) = linpred::encode_group(g, &values, &scheme.quantizers[tv..tv + size])?;
                codewords.extend(cw);
                tv += size;
            }
        }
        None => {
            for (tv, &pos) in scheme.coding_positions.iter().enumerate() {
                codewords.push(scheme.quantizers[tv].quantize(tv_value(pos)));
            }
        }
    }
    let (reconstruction, saturated) = reconstruct(&scheme, &codewords)?;

    let (payload, payload_bits) = code_payload(&scheme, side.coder, &codewords)?;
    let side_json = serde_json::to_vec(&side).map_err(|e| Error::Format(e.to_string()))?;
    if side_json.len() > u32::MAX as usize {
        return Err(Error::Format("side information too large".into()));
    }

    let mut bytes = Vec::with_capacity(18 + side_json.len() + 8 + payload.len());
    bytes.extend_from_slice(&MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&scheme.hash.to_le_bytes());
    bytes.extend_from_slice(&(side_json.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&side_json);
    bytes.extend_from_slice(&payload_bits.to_le_bytes());
    let header_bits = bytes.len() as u64 * 8;
    bytes.extend_from_slice(&payload);

    Ok(EncodeOutput {
        bytes,
        model_entropy_bits: scheme.model_entropy_bits(),
        side_info: side,
        reconstruction,
        saturated,
        codewords,
        header_bits,
        payload_bits,
    })
}

struct ByteCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteCursor<'a> {
    fn take(&mut self, count: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < count {
            return Err(Error::Format(format!("truncated stream reading {what}")));
        }
        let out = &self.bytes[self.pos..self.pos + count];
        self.pos += count;
        Ok(out)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

/// Parse a container and rerun the scheme derivation; errors on any
/// structural defect or on disagreement with the header's scheme hash.
pub fn decode(bytes: &[u8]) -> Result<Decoded> {
    let mut cur = ByteCursor { bytes, pos: 0 };
    let magic = cur.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {magic:02x?}, expected {MAGIC:02x?}"
        )));
    }
    let version = cur.u16("version")?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let header_hash = cur.u64("scheme hash")?;
    let side_len = cur.u32("side length")? as usize;
    let side_json = cur.take(side_len, "side information")?;
    let side: SideInfo =
        serde_json::from_slice(side_json).map_err(|e| Error::Format(e.to_string()))?;
    let payload_bits = cur.u64("payload bit count")?;
    let payload = cur.take(payload_bits.div_ceil(8) as usize, "payload")?;
    if cur.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after the payload",
            bytes.len() - cur.pos
        )));
    }
    let header_bits = (bytes.len() as u64 - payload.len() as u64) * 8;

    let scheme = derive_scheme(&side)?;
    if scheme.hash != header_hash {
        return Err(Error::SelfCheckMismatch {
            expected: header_hash,
            got: scheme.hash,
        });
    }
    let codewords = decode_payload(&scheme, side.coder, payload, payload_bits)?;
    let (values, saturated) = reconstruct(&scheme, &codewords)?;
    Ok(Decoded {
        side_info: side,
        values,
        saturated,
        codewords,
        header_bits,
        payload_bits,
    })
}
