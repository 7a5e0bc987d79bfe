//! Test-only oracles shared by the integration suites.
#![allow(dead_code)]

pub mod gradcheck;
pub mod synth;

use ara_core::params::ParamSet;

/// Norm-wise relative error between analytic and central-difference
/// gradients over a sample of entries of each tensor.
///
/// `loss` must evaluate the scalar loss for the given parameter set; it is
/// the only thing the oracle relies on, so it stays independent of any
/// backward pass.
pub fn finite_difference_check<F>(
    params: &ParamSet,
    analytic: &[f64],
    per_tensor: usize,
    h: f64,
    mut loss: F,
) -> Vec<(String, f64)>
where
    F: FnMut(&ParamSet) -> f64,
{
    let mut work = params.clone();
    let mut raw = Vec::new();
    for id in params.ids() {
        let spec = params.spec(id).clone();
        let n = spec.numel();
        let stride = (n / per_tensor.max(1)).max(1);
        let (mut diff2, mut a2, mut f2) = (0.0, 0.0, 0.0);
        for i in (0..n).step_by(stride).take(per_tensor) {
            let idx = spec.offset + i;
            let orig = work.data()[idx];
            work.data_mut()[idx] = orig + h;
            let up = loss(&work);
            work.data_mut()[idx] = orig - h;
            let down = loss(&work);
            work.data_mut()[idx] = orig;
            let fd = (up - down) / (2.0 * h);
            let an = analytic[idx];
            diff2 += (fd - an) * (fd - an);
            a2 += an * an;
            f2 += fd * fd;
        }
        raw.push((spec.name, diff2.sqrt(), a2.sqrt().max(f2.sqrt())));
    }
    // Tensors whose true gradient vanishes (e.g. key biases under softmax)
    // are measured against a small fraction of the largest tensor gradient.
    let floor = 1e-3 * raw.iter().map(|r| r.2).fold(0.0, f64::max);
    raw.into_iter()
        .map(|(name, diff, scale)| {
            let scale = scale.max(floor).max(1e-300);
            (name, diff / scale)
        })
        .collect()
}

pub fn worst(report: &[(String, f64)]) -> (String, f64) {
    report
        .iter()
        .cloned()
        .fold((String::new(), 0.0), |a, b| if b.1 > a.1 { b } else { a })
}
