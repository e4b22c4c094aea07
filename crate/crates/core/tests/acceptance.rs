//! Project acceptance gate: one test per criterion, each printing a
//! single pass/fail line. Tolerances are pinned here, next to the checks
//! that use them.

use std::time::{Duration, Instant};

use rand::distributions::WeightedIndex;
use rand::prelude::*;

use srm_core::coding::{self, arith, Coder, CodingConfig, ModelChoice, QuantizerConfig};
use srm_core::harness::{
    mc_moments, mc_tails, qq_data, replacement_ratio, synth_signal, ExperimentConfig, SignalSource,
    SynthSignal,
};
use srm_core::linpred;
use srm_core::moments::{self, count_distinct_components};
use srm_core::quant::{self, GaussianModel};
use srm_core::rng::{stream_rng, trial_seed, Stream};
use srm_core::sensing::{self, Mode, Selection, SensingSpec, Signal};
use srm_core::tailbounds::{self, TailBound};
use srm_core::transforms::TransformOp;

const ORTHONORMALITY_TOL: f64 = 1e-10;
const FAST_APPLY_TOL: f64 = 1e-9;
const EXPANSION_TOL: f64 = 1e-9;
const COV_ROUTE_TOL: f64 = 1e-9;
const MOMENT_Z_LIMIT: f64 = 5.0;
const ENERGY_REL_TOL: f64 = 1e-9;
const RATE_FN_QUARTER: (f64, f64, f64) = (4.115, 0.25, 1e-3);
const RATE_FN_HALF: (f64, f64, f64) = (1e-6, 0.5, 1e-6);
const PAIR_VARIANCE_TOL: f64 = 1e-9;
const QQ_MIN_CORR: f64 = 0.995;
const LLOYD_TWO_LEVEL_TOL: f64 = 1e-6;
const ARITH_RATE_TOL: f64 = 0.02;
const RESIDUAL_VAR_REL_TOL: f64 = 0.05;
const CROSS_CORR_LIMIT: f64 = 0.05;
const RATIO_NEAR: (f64, f64) = (0.99551, 2e-5);

fn criterion(
    id: u32,
    name: &str,
    limit: Option<Duration>,
    body: impl FnOnce() -> Result<(), String>,
) {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    match outcome {
        Ok(()) => {
            if let Some(limit) = limit {
                if elapsed > limit {
                    println!("criterion {id:02} {name}: FAIL took {elapsed:.2?}, budget {limit:?}");
                    panic!("criterion {id:02} exceeded its time budget");
                }
            }
            println!("criterion {id:02} {name}: PASS ({elapsed:.2?})");
        }
        Err(reason) => {
            println!("criterion {id:02} {name}: FAIL {reason}");
            panic!("criterion {id:02} failed: {reason}");
        }
    }
}

fn check(ok: bool, reason: impl Fn() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(reason())
    }
}

fn random_signal(n: usize, seed: u64) -> Signal {
    let mut rng = stream_rng(seed, Stream::Synthesis);
    Signal::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn smooth(n: usize, seed: u64) -> Signal {
    synth_signal(&SynthSignal::Smooth, n, seed).unwrap()
}

fn three_transforms(n: usize) -> Vec<TransformOp> {
    vec![
        TransformOp::wht(n).unwrap(),
        TransformOp::dct(n).unwrap(),
        TransformOp::real_dft(n).unwrap(),
    ]
}

fn experiment(
    spec: SensingSpec,
    kind: SynthSignal,
    trials: u64,
    probe: Vec<usize>,
) -> ExperimentConfig {
    ExperimentConfig {
        spec,
        signal: SignalSource::Synthetic { kind },
        trials,
        probe,
        t_grid: vec![1.0, 2.0, 3.0],
        base_seed: 5081,
        output: None,
    }
}

fn wht_spec(mode: Mode, n: usize, m: usize, seed: u64) -> SensingSpec {
    SensingSpec {
        mode,
        transform: TransformOp::wht(n).unwrap(),
        n,
        m,
        selection: Selection::WithoutReplacement,
        seed,
    }
}

#[test]
fn criterion_01_transform_orthonormality_and_fast_apply() {
    criterion(
        1,
        "transform orthonormality and fast apply",
        Some(Duration::from_secs(5)),
        || {
            for n in [8usize, 64, 256] {
                for t in three_transforms(n) {
                    let rows: Vec<Vec<f64>> = (1..=n).map(|j| t.row(j).unwrap()).collect();
                    let mut worst = 0.0f64;
                    for j in 0..n {
                        for h in j..n {
                            let dot: f64 = rows[j].iter().zip(&rows[h]).map(|(a, b)| a * b).sum();
                            let target = if j == h { 1.0 } else { 0.0 };
                            worst = worst.max((dot - target).abs());
                        }
                    }
                    check(worst < ORTHONORMALITY_TOL, || {
                        format!("{t:?} n={n}: row gram error {worst:e}")
                    })?;

                    let mut rng = stream_rng(n as u64, Stream::Simulation);
                    let mut apply_err = 0.0f64;
                    for _ in 0..100 {
                        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                        let fast = t.apply_forward(&v).unwrap();
                        let naive = t.naive_forward(&v).unwrap();
                        for (a, b) in fast.iter().zip(&naive) {
                            apply_err = apply_err.max((a - b).abs());
                        }
                    }
                    check(apply_err < FAST_APPLY_TOL, || {
                        format!("{t:?} n={n}: fast vs naive error {apply_err:e}")
                    })?;
                }
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_02_row_product_expansion_certifies_the_covariance_route() {
    criterion(
        2,
        "row product expansion certifies the covariance route",
        Some(Duration::from_secs(10)),
        || {
            let n = 16;
            let m = 4;
            let x = random_signal(n, 21);
            for t in three_transforms(n) {
                let rows: Vec<Vec<f64>> = (1..=n).map(|j| t.row(j).unwrap()).collect();
                let model = moments::topk_model(&t, &x, n).unwrap();
                let mm = moments::lr_moments(&t, &x, m).unwrap();
                let sqrt_n = (n as f64).sqrt();
                for j in 1..=n {
                    for h in 1..=n {
                        let rep = t.pointwise_product_rep(j, h).unwrap();
                        for k in 0..n {
                            let direct = rows[j - 1][k] * rows[h - 1][k];
                            let expanded: f64 = rep
                                .terms
                                .iter()
                                .map(|term| term.gamma / sqrt_n * rows[term.index - 1][k])
                                .sum();
                            check((direct - expanded).abs() < EXPANSION_TOL, || {
                                format!("{t:?} rows ({j},{h}) sample {k}: expansion error")
                            })?;
                        }

                        let direct_cov = (n as f64 / m as f64)
                            * rows[j - 1]
                                .iter()
                                .zip(&rows[h - 1])
                                .zip(x.samples())
                                .map(|((a, b), v)| a * b * v * v)
                                .sum::<f64>();
                        let via_model = moments::lr_cov_from_model(&t, &model, m, j, h).unwrap();
                        let via_mm = mm.cov(j, h).unwrap();
                        check((direct_cov - via_model).abs() < COV_ROUTE_TOL, || {
                            format!("{t:?} cov ({j},{h}): model route {via_model} vs direct {direct_cov}")
                        })?;
                        check((direct_cov - via_mm).abs() < COV_ROUTE_TOL, || {
                            format!("{t:?} cov ({j},{h}): accessor {via_mm} vs direct {direct_cov}")
                        })?;
                    }
                }
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_03_mixture_moments_match_the_closed_forms() {
    criterion(3, "mixture moments match the closed forms", None, || {
        let n = 256;
        let m = 64;
        let trials = 100_000;
        let per_mode = Duration::from_secs(300);
        let spread_probe: Vec<usize> = vec![
            1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 97, 128, 144, 200, 233, 256,
        ];
        let lag_probe: Vec<usize> = (0..16).map(|k| 1 + 16 * k).collect();

        for mode in [Mode::Lr, Mode::Gr, Mode::Rc] {
            let start = Instant::now();
            let probe = if mode == Mode::Rc {
                lag_probe.clone()
            } else {
                spread_probe.clone()
            };
            let cfg = experiment(
                wht_spec(mode, n, m, 303),
                SynthSignal::Smooth,
                trials,
                probe,
            );
            let report = mc_moments(&cfg).map_err(|e| e.to_string())?;
            let worst = report.max_abs_z();
            check(worst < MOMENT_Z_LIMIT, || {
                format!("{mode:?}: worst probe z {worst}")
            })?;
            if mode == Mode::Rc {
                for a in 0..report.probe.len() - 1 {
                    let here = report.model_cov[a][a + 1];
                    let first = report.model_cov[0][1];
                    check((here - first).abs() < 1e-12, || {
                        format!("model covariance at equal lag differs: {here} vs {first}")
                    })?;
                }
                let residual = report.toeplitz_residual_z();
                check(residual < MOMENT_Z_LIMIT, || {
                    format!("empirical covariance is not banded: residual z {residual}")
                })?;
            }
            if mode == Mode::Gr {
                let x = cfg.resolve_signal().map_err(|e| e.to_string())?;
                let dc_mean =
                    (n as f64).powf(1.5) / (m as f64).sqrt() * (1.0 / (n as f64).sqrt()) * x.mean();
                check(
                    (report.model_mean[0] - dc_mean).abs() < 1e-12 * dc_mean.abs(),
                    || {
                        format!(
                            "component 1 model mean {} vs {}",
                            report.model_mean[0], dc_mean
                        )
                    },
                )?;
                check(
                    (report.empirical_mean[0] - dc_mean).abs() < 1e-9 * dc_mean.abs(),
                    || {
                        format!(
                            "component 1 empirical mean {} vs {}",
                            report.empirical_mean[0], dc_mean
                        )
                    },
                )?;
            }
            let spent = start.elapsed();
            check(spent < per_mode, || {
                format!("{mode:?} run took {spent:.2?}, budget {per_mode:?}")
            })?;
        }
        Ok(())
    });
}

#[test]
fn criterion_04_per_draw_energy_identity() {
    criterion(4, "per draw energy identity", None, || {
        let n = 256;
        let m = 64;
        let x = smooth(n, 17);
        let target = (n as f64 / m as f64) * x.energy();
        for mode in [Mode::Lr, Mode::Gr, Mode::Rc, Mode::Rst] {
            let spec = wht_spec(mode, n, m, 404);
            for trial in 0..100 {
                let d = sensing::draw(&spec, trial_seed(404, trial)).map_err(|e| e.to_string())?;
                let z = sensing::mixture_vector(&spec, &d, &x).map_err(|e| e.to_string())?;
                let energy: f64 = z.iter().map(|v| v * v).sum();
                let rel = (energy - target).abs() / target;
                check(rel < ENERGY_REL_TOL, || {
                    format!("{mode:?} trial {trial}: relative energy error {rel:e}")
                })?;
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_05_tail_bounds_dominate_empirical_exceedance() {
    criterion(
        5,
        "tail bounds dominate empirical exceedance",
        Some(Duration::from_secs(600)),
        || {
            let (u_quarter, target_quarter, tol_quarter) = RATE_FN_QUARTER;
            let xi_q = tailbounds::xi(u_quarter).map_err(|e| e.to_string())?;
            check((xi_q - target_quarter).abs() < tol_quarter, || {
                format!("rate function at {u_quarter}: {xi_q}")
            })?;
            let (u_half, target_half, tol_half) = RATE_FN_HALF;
            let xi_h = tailbounds::xi(u_half).map_err(|e| e.to_string())?;
            check((xi_h - target_half).abs() < tol_half, || {
                format!("rate function at {u_half}: {xi_h}")
            })?;

            let n = 256;
            let m = 64;
            for mode in [Mode::Lr, Mode::Rc, Mode::Gr] {
                let cfg = experiment(
                    wht_spec(mode, n, m, 505),
                    SynthSignal::Smooth,
                    1_000_000,
                    vec![2, 3],
                );
                let report = mc_tails(&cfg).map_err(|e| e.to_string())?;
                for row in &report.rows {
                    check(row.pass, || {
                        format!(
                            "{mode:?} component {} t={}: empirical {} vs bound {} + {}",
                            row.component, row.t, row.empirical, row.capped_bound, row.slack
                        )
                    })?;
                }
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_06_paired_spectral_variances() {
    criterion(6, "paired spectral variances", None, || {
        let n = 256;
        let m = 64;
        let x = random_signal(n, 23);
        let mm = moments::lr_moments(&TransformOp::real_dft(n).unwrap(), &x, m).unwrap();
        let sigma_y_sq = mm.measurement_var();
        for h in [2usize, 3, 9, 33] {
            let pv = moments::dft_pair_variance(&x, m, h).map_err(|e| e.to_string())?;
            let pair_sum = pv.sigma_real_sq + pv.sigma_imag_sq;
            check(
                (pair_sum - 2.0 * sigma_y_sq).abs() < PAIR_VARIANCE_TOL * sigma_y_sq,
                || format!("h={h}: pair sum {pair_sum} vs {}", 2.0 * sigma_y_sq),
            )?;
            let cos_var = mm.var(2 * (h - 1)).unwrap();
            let sin_var = mm.var(2 * (h - 1) + 1).unwrap();
            check(
                (cos_var - pv.sigma_real_sq).abs() < PAIR_VARIANCE_TOL * sigma_y_sq,
                || {
                    format!(
                        "h={h}: cosine row variance {cos_var} vs {}",
                        pv.sigma_real_sq
                    )
                },
            )?;
            check(
                (sin_var - pv.sigma_imag_sq).abs() < PAIR_VARIANCE_TOL * sigma_y_sq,
                || format!("h={h}: sine row variance {sin_var} vs {}", pv.sigma_imag_sq),
            )?;
        }

        let d = 8;
        let spikes = synth_signal(&SynthSignal::PulseTrain { d }, n, 0).unwrap();
        let matched_h = n / (2 * d) + 1;
        let pv = moments::dft_pair_variance(&spikes, m, matched_h).map_err(|e| e.to_string())?;
        let sigma_y_sq = spikes.energy() / m as f64;
        check(
            (pv.q_h - sigma_y_sq).abs() < PAIR_VARIANCE_TOL * sigma_y_sq,
            || {
                format!(
                    "matched h={matched_h}: q {} vs sigma_y^2 {}",
                    pv.q_h, sigma_y_sq
                )
            },
        )?;
        Ok(())
    });
}

#[test]
fn criterion_07_permutation_mixture_structure() {
    criterion(7, "permutation mixture structure", None, || {
        for n in [8usize, 64, 256] {
            let count = count_distinct_components(&TransformOp::wht(n).unwrap()).unwrap();
            check(count == 2, || {
                format!("wht n={n}: {count} distinct components")
            })?;
        }
        for n in [8usize, 16, 32] {
            let count = count_distinct_components(&TransformOp::dct(n).unwrap()).unwrap();
            let expected = 1 + (n as f64).log2() as usize;
            check(count == expected, || {
                format!("dct n={n}: {count} distinct components, expected {expected}")
            })?;
        }

        let cfg = experiment(
            wht_spec(Mode::Gr, 64, 16, 707),
            SynthSignal::Smooth,
            20_000,
            vec![2, 3, 9, 17, 33, 50],
        );
        let report = mc_moments(&cfg).map_err(|e| e.to_string())?;
        for a in 0..report.probe.len() {
            for b in 0..report.probe.len() {
                if a != b {
                    let z = report.cov_z[a][b];
                    check(z.abs() < MOMENT_Z_LIMIT, || {
                        format!(
                            "off-diagonal ({}, {}) z {z}",
                            report.probe[a], report.probe[b]
                        )
                    })?;
                }
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_08_desk_scale_normality() {
    criterion(
        8,
        "desk scale normality",
        Some(Duration::from_secs(600)),
        || {
            let n = 1 << 14;
            let m = 1 << 12;
            let seeds = 8;
            let srm_configs: Vec<(Mode, TransformOp)> = vec![
                (Mode::Lr, TransformOp::wht(n).unwrap()),
                (Mode::Lr, TransformOp::dct(n).unwrap()),
                (Mode::Lr, TransformOp::real_dft(n).unwrap()),
                (Mode::Gr, TransformOp::wht(n).unwrap()),
                (Mode::Rc, TransformOp::wht(n).unwrap()),
            ];
            for (mode, transform) in &srm_configs {
                let spec = SensingSpec {
                    mode: *mode,
                    transform: transform.clone(),
                    n,
                    m,
                    selection: Selection::WithoutReplacement,
                    seed: 808,
                };
                let cfg = experiment(spec, SynthSignal::Smooth, seeds, vec![2]);
                let report = qq_data(&cfg).map_err(|e| e.to_string())?;
                check(report.correlation > QQ_MIN_CORR, || {
                    format!("{mode:?} {transform:?}: correlation {}", report.correlation)
                })?;
            }

            let sparse = SynthSignal::SparseIn {
                transform: TransformOp::wht(n).unwrap(),
                k: 8,
            };
            let mut srm_floor = 1.0f64;
            for (mode, transform) in &srm_configs {
                let spec = SensingSpec {
                    mode: *mode,
                    transform: transform.clone(),
                    n,
                    m,
                    selection: Selection::WithoutReplacement,
                    seed: 808,
                };
                let cfg = experiment(spec, sparse.clone(), seeds, vec![2]);
                let report = qq_data(&cfg).map_err(|e| e.to_string())?;
                srm_floor = srm_floor.min(report.correlation);
            }
            let rst = experiment(wht_spec(Mode::Rst, n, m, 808), sparse, seeds, vec![2]);
            let rst_report = qq_data(&rst).map_err(|e| e.to_string())?;
            check(rst_report.correlation < srm_floor, || {
                format!(
                    "baseline correlation {} is not below the randomized floor {srm_floor}",
                    rst_report.correlation
                )
            })?;
            Ok(())
        },
    );
}

#[test]
fn criterion_09_quantizer_contracts() {
    criterion(9, "quantizer contracts", None, || {
        let unit = GaussianModel::new(0.0, 1.0).unwrap();
        let two_level = quant::design_lloyd_max(&unit, 2, 1e-12).map_err(|e| e.to_string())?;
        let target = (2.0 / std::f64::consts::PI).sqrt();
        for (v, want) in [(-1.0, -target), (1.0, target)] {
            let rep = two_level.dequantize(two_level.quantize(v)).unwrap();
            check((rep - want).abs() < LLOYD_TWO_LEVEL_TOL, || {
                format!("two-level reproduction for {v}: {rep} vs {want}")
            })?;
        }

        let uniform = quant::design_uniform(&unit, 64, 1e-3, &TailBound::SignDiagonal)
            .map_err(|e| e.to_string())?;
        let step = uniform.step().unwrap();
        let edges = uniform.edges();
        let (lo, hi) = (edges[0], edges[edges.len() - 1]);
        let mut rng = stream_rng(909, Stream::Simulation);
        for _ in 0..100_000 {
            let v = rng.gen_range(lo..hi);
            let rep = uniform.dequantize(uniform.quantize(v)).unwrap();
            check((rep - v).abs() <= 0.5 * step * (1.0 + 1e-12), || {
                format!("in-range error for {v}: {}", (rep - v).abs())
            })?;
        }

        let delta = 1e-3;
        let sigma = 2.5;
        let model = GaussianModel::new(0.4, sigma).unwrap();
        let q = quant::design_uniform(&model, 64, delta, &TailBound::SignDiagonal)
            .map_err(|e| e.to_string())?;
        let trials = 1_000_000u64;
        let mut saturated = 0u64;
        for _ in 0..trials {
            let v: f64 = model.mean + sigma * rng.sample::<f64, _>(rand_distr::StandardNormal);
            if q.is_saturated(q.quantize(v)) {
                saturated += 1;
            }
        }
        let rate = saturated as f64 / trials as f64;
        let limit = delta + 3.0 * (delta / trials as f64).sqrt();
        check(rate <= limit, || {
            format!("saturation rate {rate} vs budget {limit}")
        })?;
        Ok(())
    });
}

#[test]
fn criterion_10_coding_pipeline() {
    criterion(10, "coding pipeline", None, || {
        let probs = [0.30, 0.22, 0.15, 0.12, 0.09, 0.06, 0.04, 0.02];
        let entropy: f64 = -probs.iter().map(|&p: &f64| p * p.log2()).sum::<f64>();
        let model = arith::SymbolModel::from_probs(&probs).unwrap();
        let dist = WeightedIndex::new(probs).unwrap();
        let mut rng = stream_rng(1010, Stream::Simulation);
        let symbols: Vec<u32> = (0..100_000).map(|_| rng.sample(&dist) as u32).collect();
        let (bytes, bit_len) = arith::arithmetic_encode(&symbols, |_| &model).unwrap();
        let rate = bit_len as f64 / symbols.len() as f64;
        check((rate - entropy).abs() < ARITH_RATE_TOL, || {
            format!("arithmetic rate {rate} vs entropy {entropy}")
        })?;
        let decoded = arith::arithmetic_decode(&bytes, bit_len, symbols.len(), |_| &model).unwrap();
        check(decoded == symbols, || {
            "arithmetic round trip mismatch".into()
        })?;

        for coder in [Coder::Vlc, Coder::Flc] {
            let spec = wht_spec(Mode::Lr, 256, 64, 111);
            let config = CodingConfig {
                model: ModelChoice::Auto,
                quantizer: QuantizerConfig::Uniform {
                    levels: 64,
                    delta_sat: 1e-3,
                },
                coder,
                prediction: 0,
                top_k: 32,
                lag_window: 64,
            };
            let x = random_signal(256, 42);
            let out = coding::encode(&x, &spec, &config).unwrap();
            let back = coding::decode(&out.bytes).map_err(|e| e.to_string())?;
            for (k, (a, b)) in back.values.iter().zip(&out.reconstruction).enumerate() {
                check(a.to_bits() == b.to_bits(), || {
                    format!("{coder:?} value {k}: {a} vs {b}")
                })?;
            }
        }

        let n = 64;
        let spec = wht_spec(Mode::Gr, n, n, 222);
        let config = CodingConfig {
            model: ModelChoice::Auto,
            quantizer: QuantizerConfig::Uniform {
                levels: 32,
                delta_sat: 1e-2,
            },
            coder: Coder::Flc,
            prediction: 0,
            top_k: 32,
            lag_window: 64,
        };
        let x = random_signal(n, 43);
        let out = coding::encode(&x, &spec, &config).unwrap();
        let back = coding::decode(&out.bytes).map_err(|e| e.to_string())?;
        let expected_dc = n as f64 / (n as f64).sqrt() * x.mean();
        let d = spec.draw().unwrap();
        let mut dc_checked = false;
        for (k, &c) in d.selection_indices.iter().enumerate() {
            if c == 1 {
                check(back.values[k].to_bits() == expected_dc.to_bits(), || {
                    format!("component 1 value {} vs {expected_dc}", back.values[k])
                })?;
                dc_checked = true;
            }
        }
        check(dc_checked, || "full selection never hit component 1".into())?;

        let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
        for name in ["lr_wht_vlc", "gr_wht_flc", "rc_pred_vlc"] {
            let bytes = std::fs::read(dir.join(format!("{name}.srmc"))).unwrap();
            let expected: Vec<(u64, bool)> =
                std::fs::read_to_string(dir.join(format!("{name}.expected")))
                    .unwrap()
                    .lines()
                    .map(|line| {
                        let mut parts = line.split_whitespace();
                        (
                            u64::from_str_radix(parts.next().unwrap(), 16).unwrap(),
                            parts.next().unwrap() == "1",
                        )
                    })
                    .collect();
            let back = coding::decode(&bytes).map_err(|e| e.to_string())?;
            check(back.values.len() == expected.len(), || {
                format!("{name}: {} values vs {}", back.values.len(), expected.len())
            })?;
            for (k, (&(bits, sat), v)) in expected.iter().zip(&back.values).enumerate() {
                check(v.to_bits() == bits && back.saturated[k] == sat, || {
                    format!("{name} value {k}: {v:?} vs pinned bits")
                })?;
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_11_linear_prediction_contracts() {
    criterion(11, "linear prediction contracts", None, || {
        let n = 256;
        let m = 64;
        let x = smooth(n, 29);
        let mm = moments::rc_moments(&x, m).unwrap();
        let spec = wht_spec(Mode::Rc, n, m, 1111);
        let selection = spec.draw().unwrap().selection_indices;
        let plan = linpred::plan(&mm, &selection, 2).map_err(|e| e.to_string())?;

        let trials = 100_000u64;
        let mut sums: Vec<Vec<f64>> = plan
            .groups
            .iter()
            .map(|g| vec![0.0; g.components.len()])
            .collect();
        let mut sq_sums = sums.clone();
        let mut cross: Vec<f64> = plan.groups.iter().map(|_| 0.0).collect();
        for trial in 0..trials {
            let d = sensing::draw(&spec, trial_seed(1111, trial)).map_err(|e| e.to_string())?;
            let z = sensing::mixture_vector(&spec, &d, &x).map_err(|e| e.to_string())?;
            for (gi, g) in plan.groups.iter().enumerate() {
                let values: Vec<f64> = g.components.iter().map(|&c| z[c - 1]).collect();
                let residuals = linpred::open_loop_residuals(g, &values).unwrap();
                for (q, &u) in residuals.iter().enumerate() {
                    sums[gi][q] += u;
                    sq_sums[gi][q] += u * u;
                }
                if residuals.len() == 2 {
                    cross[gi] += residuals[0] * residuals[1];
                }
            }
        }
        let t = trials as f64;
        for (gi, g) in plan.groups.iter().enumerate() {
            for q in 0..g.components.len() {
                let mean = sums[gi][q] / t;
                let emp_var = sq_sums[gi][q] / t - mean * mean;
                let planned = g.residual_vars[q];
                if planned > 1e-12 {
                    let rel = (emp_var - planned).abs() / planned;
                    check(rel < RESIDUAL_VAR_REL_TOL, || {
                        format!(
                            "group {gi} member {q}: planned {planned} vs empirical {emp_var} (rel {rel})"
                        )
                    })?;
                }
            }
            if g.components.len() == 2 {
                let v0 = (sq_sums[gi][0] / t - (sums[gi][0] / t).powi(2)).max(0.0);
                let v1 = (sq_sums[gi][1] / t - (sums[gi][1] / t).powi(2)).max(0.0);
                let cov = cross[gi] / t - (sums[gi][0] / t) * (sums[gi][1] / t);
                let r = cov / (v0 * v1).sqrt();
                check(r.abs() < CROSS_CORR_LIMIT, || {
                    format!("group {gi}: residual correlation {r}")
                })?;
            }
        }

        let signal = synth_signal(&SynthSignal::Ar1 { rho: 0.95 }, n, 31).unwrap();
        let sigma_y = signal.norm_l2() / (m as f64).sqrt();
        let step_quantizer = QuantizerConfig::UniformStep {
            step: 0.05 * sigma_y,
            delta_sat: 1e-4,
        };
        let base = CodingConfig {
            model: ModelChoice::Auto,
            quantizer: step_quantizer,
            coder: Coder::Vlc,
            prediction: 2,
            top_k: 32,
            lag_window: 64,
        };
        let plain = CodingConfig {
            prediction: 0,
            ..base.clone()
        };
        let mut pred_bits = 0u64;
        let mut plain_bits = 0u64;
        for trial in 0..25 {
            let spec = wht_spec(Mode::Rc, n, m, trial_seed(1212, trial));
            pred_bits += coding::encode(&signal, &spec, &base).unwrap().payload_bits;
            plain_bits += coding::encode(&signal, &spec, &plain).unwrap().payload_bits;
        }
        check(pred_bits < plain_bits, || {
            format!("prediction {pred_bits} bits vs direct {plain_bits} bits at equal step")
        })?;

        let gr = moments::gr_moments(&TransformOp::wht(64).unwrap(), &smooth(64, 5), 16).unwrap();
        let gr_selection: Vec<usize> = (2..=17).collect();
        let gr_plan = linpred::plan(&gr, &gr_selection, 2).map_err(|e| e.to_string())?;
        for g in &gr_plan.groups {
            for taps in &g.coeffs {
                for &a in taps {
                    check(a == 0.0, || {
                        format!("uncorrelated components got coefficient {a}")
                    })?;
                }
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_12_selection_replacement_ratio() {
    criterion(12, "selection replacement ratio", None, || {
        let small = replacement_ratio(10, 2).unwrap();
        check((small - 0.9).abs() < 1e-12, || {
            format!("ratio(10, 2) = {small}")
        })?;
        let (near, tol) = RATIO_NEAR;
        let large = replacement_ratio(10_000, 10).unwrap();
        check((large - near).abs() < tol, || {
            format!("ratio(10^4, 10) = {large}")
        })?;

        let sweep: Vec<f64> = [1_000usize, 10_000, 100_000]
            .iter()
            .map(|&n| {
                let m = (n as f64).powf(0.4).ceil() as usize;
                replacement_ratio(n, m).unwrap()
            })
            .collect();
        check(
            sweep.windows(2).all(|w| w[0] < w[1]) && sweep.iter().all(|&r| r < 1.0),
            || format!("sweep is not monotone toward one: {sweep:?}"),
        )?;
        Ok(())
    });
}
