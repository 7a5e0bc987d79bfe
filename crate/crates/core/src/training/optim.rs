use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Linear warmup over the first `⌈fraction · total_steps⌉` steps, constant
/// `eta` afterwards.
pub fn warmup_lr(step: usize, total_steps: usize, eta: f64, fraction: f64) -> Result<f64> {
    if total_steps == 0 {
        return Err(Error::invalid("warmup needs a positive number of total steps"));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("warmup fraction must lie in (0, 1), got {fraction}")));
    }
    let warmup = (fraction * total_steps as f64).ceil() as usize;
    Ok(if step < warmup {
        eta * step as f64 / warmup as f64
    } else {
        eta
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamWState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl AdamWState {
    /// Zeroed moments with β₁ 0.9, β₂ 0.999, ε 1e-8 and weight decay 0.01.
    pub fn new(n: usize) -> Self {
        Self::with_hyper(n, 0.9, 0.999, 1e-8, 0.01)
    }

    pub fn with_hyper(n: usize, beta1: f64, beta2: f64, eps: f64, weight_decay: f64) -> Self {
        AdamWState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            beta1,
            beta2,
            eps,
            weight_decay,
        }
    }
}

/// One AdamW update with decoupled weight decay.
pub fn adamw_step(params: &mut [f64], grads: &[f64], state: &mut AdamWState, lr: f64) -> Result<()> {
    check_len(params.len(), grads.len())?;
    check_len(params.len(), state.m.len())?;
    state.t += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * (m_hat / (v_hat.sqrt() + state.eps) + state.weight_decay * *p);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RMSPropState {
    pub v: Vec<f64>,
    pub alpha: f64,
    pub eps: f64,
}

impl RMSPropState {
    /// Zeroed average with α 0.99 and ε 1e-8.
    pub fn new(n: usize) -> Self {
        Self::with_hyper(n, 0.99, 1e-8)
    }

    pub fn with_hyper(n: usize, alpha: f64, eps: f64) -> Self {
        RMSPropState {
            v: vec![0.0; n],
            alpha,
            eps,
        }
    }
}

pub fn rmsprop_step(params: &mut [f64], grads: &[f64], state: &mut RMSPropState, lr: f64) -> Result<()> {
    check_len(params.len(), grads.len())?;
    check_len(params.len(), state.v.len())?;
    let a = state.alpha;
    for ((p, &g), v) in params.iter_mut().zip(grads).zip(&mut state.v) {
        *v = a * *v + (1.0 - a) * g * g;
        if g != 0.0 {
            *p -= lr * g / (v.sqrt() + state.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn warmup_examples() {
        assert_eq!(warmup_lr(0, 100, 5e-5, 0.3).unwrap(), 0.0);
        assert!((warmup_lr(15, 100, 5e-5, 0.3).unwrap() - 2.5e-5).abs() < 1e-18);
        assert_eq!(warmup_lr(30, 100, 5e-5, 0.3).unwrap(), 5e-5);
        assert_eq!(warmup_lr(9999, 100, 5e-5, 0.3).unwrap(), 5e-5);
        assert!(warmup_lr(1, 0, 5e-5, 0.3).is_err());
    }

    proptest! {
        #[test]
        fn warmup_is_monotone(total in 1usize..5000, frac in 0.01f64..0.99, step in 0usize..6000) {
            let a = warmup_lr(step, total, 1e-3, frac).unwrap();
            let b = warmup_lr(step + 1, total, 1e-3, frac).unwrap();
            prop_assert!(b >= a);
            prop_assert!(b <= 1e-3);
        }
    }

    #[test]
    fn adamw_first_step() {
        let mut p = [1.0];
        let mut s = AdamWState::with_hyper(1, 0.9, 0.999, 1e-8, 0.0);
        adamw_step(&mut p, &[1.0], &mut s, 0.1).unwrap();
        // m̂ = v̂ = 1 after bias correction.
        assert!((p[0] - (1.0 - 0.1 / (1.0 + 1e-8))).abs() < 1e-12);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn adamw_decay_only_and_noop() {
        let mut p = [1.0];
        let mut s = AdamWState::with_hyper(1, 0.9, 0.999, 1e-8, 0.01);
        adamw_step(&mut p, &[0.0], &mut s, 0.1).unwrap();
        assert!((p[0] - 0.999).abs() < 1e-15);

        let mut p = [0.3, -2.0];
        let mut s = AdamWState::with_hyper(2, 0.9, 0.999, 1e-8, 0.0);
        for _ in 0..5 {
            adamw_step(&mut p, &[0.0, 0.0], &mut s, 0.1).unwrap();
        }
        assert_eq!(p, [0.3, -2.0]);
    }

    #[test]
    fn rmsprop_first_step_and_saturation() {
        let mut p = [1.0];
        let mut s = RMSPropState::with_hyper(1, 0.99, 0.0);
        rmsprop_step(&mut p, &[1.0], &mut s, 0.01).unwrap();
        assert!((s.v[0] - 0.01).abs() < 1e-15);
        assert!((p[0] - 0.9).abs() < 1e-12);

        let mut p = [0.0];
        let mut s = RMSPropState::new(1);
        let mut last = 0.0;
        for _ in 0..5000 {
            let before = p[0];
            rmsprop_step(&mut p, &[0.5], &mut s, 0.01).unwrap();
            last = before - p[0];
        }
        assert!((last - 0.01).abs() < 1e-6, "update magnitude {last}");
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut p = [1.0, 2.0];
        assert!(adamw_step(&mut p, &[1.0], &mut AdamWState::new(2), 0.1).is_err());
        assert!(rmsprop_step(&mut p, &[1.0, 1.0], &mut RMSPropState::new(3), 0.1).is_err());
    }
}
