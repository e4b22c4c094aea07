//! Shared complex-FFT plumbing (crate-private).
//!
//! rustfft computes the unnormalized DFT sums `X_k = Σ_t x_t e^{∓2πi kt/n}`;
//! callers apply their own normalization. Plans are cached per `(n, dir)` in
//! a global map because the Monte Carlo drivers apply the same order
//! millions of times; rustfft plans are `Send + Sync`, so a cached plan can
//! be shared across worker threads.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

pub(crate) use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type PlanKey = (usize, bool);
type PlanMap = HashMap<PlanKey, Arc<dyn Fft<f64>>>;

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<PlanMap>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// In-place unnormalized forward DFT.
pub(crate) fn forward(buf: &mut [Complex64]) {
    let p = plan(buf.len(), false);
    let mut scratch = vec![Complex64::default(); p.get_inplace_scratch_len()];
    p.process_with_scratch(buf, &mut scratch);
}

/// In-place unnormalized inverse DFT (no 1/n factor).
pub(crate) fn inverse(buf: &mut [Complex64]) {
    let p = plan(buf.len(), true);
    let mut scratch = vec![Complex64::default(); p.get_inplace_scratch_len()];
    p.process_with_scratch(buf, &mut scratch);
}
