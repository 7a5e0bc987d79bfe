use crate::encoder::ops::{linear, linear_backward};
use crate::error::{check_len, Error, Result};
use crate::params::{ParamSet, TensorId};
use crate::rng;

const INIT_STD: f64 = 0.02;

/// Two-layer regression MLP: `W₂·relu(W₁x + b₁) + b₂` with one output.
#[derive(Debug, Clone, PartialEq)]
pub struct MLPWeights {
    params: ParamSet,
    input_dim: usize,
    hidden: usize,
    w1: TensorId,
    b1: TensorId,
    w2: TensorId,
    b2: TensorId,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct MlpTrace {
    pub input: Vec<f64>,
    pub pre_activation: Vec<f64>,
    pub hidden: Vec<f64>,
    pub score: f64,
}

impl MLPWeights {
    /// All-zero weights.
    pub fn zeros(input_dim: usize, hidden: usize) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::invalid("MLP hidden width must be positive"));
        }
        let mut params = ParamSet::new();
        let w1 = params.add("mlp.w1", &[input_dim, hidden]);
        let b1 = params.add("mlp.b1", &[hidden]);
        let w2 = params.add("mlp.w2", &[hidden, 1]);
        let b2 = params.add("mlp.b2", &[1]);
        Ok(MLPWeights {
            params,
            input_dim,
            hidden,
            w1,
            b1,
            w2,
            b2,
        })
    }

    /// Seeded normal(0, 0.02) weight matrices, zero biases.
    pub fn new(input_dim: usize, hidden: usize, seed: u64) -> Result<Self> {
        Self::with_init_std(input_dim, hidden, seed, INIT_STD)
    }

    pub fn with_init_std(input_dim: usize, hidden: usize, seed: u64, std: f64) -> Result<Self> {
        let mut w = Self::zeros(input_dim, hidden)?;
        let mut r = rng::stream(seed, "mlp/init");
        w.params.fill_normal(w.w1, std, &mut r);
        w.params.fill_normal(w.w2, std, &mut r);
        Ok(w)
    }

    pub fn from_params(input_dim: usize, hidden: usize, loaded: &ParamSet) -> Result<Self> {
        let mut w = Self::zeros(input_dim, hidden)?;
        w.params.load_from(loaded)?;
        if !w.params.all_finite() {
            return Err(Error::NonFinite("MLP weights".into()));
        }
        Ok(w)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn set_output_bias(&mut self, value: f64) {
        self.params.fill(self.b2, value);
    }

    pub fn forward(&self, input: &[f64]) -> Result<MlpTrace> {
        check_len(self.input_dim, input.len())?;
        let p = &self.params;
        let pre = linear(input, p.get(self.w1), p.get(self.b1), self.input_dim, self.hidden);
        let hidden: Vec<f64> = pre.iter().map(|&x| x.max(0.0)).collect();
        let score = linear(&hidden, p.get(self.w2), p.get(self.b2), self.hidden, 1)[0];
        Ok(MlpTrace {
            input: input.to_vec(),
            pre_activation: pre,
            hidden,
            score,
        })
    }

    /// Accumulates parameter gradients of `d_score · score` into `grads`.
    pub fn backward(&self, trace: &MlpTrace, d_score: f64, grads: &mut [f64]) -> Result<()> {
        check_len(self.params.len(), grads.len())?;
        let p = &self.params;
        let mut d_hidden = vec![0.0; self.hidden];
        {
            let (dw2, db2) = split2(grads, p.range(self.w2), p.range(self.b2));
            linear_backward(&trace.hidden, p.get(self.w2), &[d_score], self.hidden, 1, &mut d_hidden, dw2, db2);
        }
        for (d, &z) in d_hidden.iter_mut().zip(&trace.pre_activation) {
            if z <= 0.0 {
                *d = 0.0;
            }
        }
        let mut d_input = vec![0.0; self.input_dim];
        let (dw1, db1) = split2(grads, p.range(self.w1), p.range(self.b1));
        linear_backward(&trace.input, p.get(self.w1), &d_hidden, self.input_dim, self.hidden, &mut d_input, dw1, db1);
        Ok(())
    }
}

/// Disjoint mutable views of two adjacent ranges, `a` before `b`.
fn split2(buf: &mut [f64], a: std::ops::Range<usize>, b: std::ops::Range<usize>) -> (&mut [f64], &mut [f64]) {
    debug_assert!(a.end <= b.start);
    let (lo, hi) = buf.split_at_mut(b.start);
    (&mut lo[a], &mut hi[..b.len()])
}

/// Score and trace of one input.
pub fn mlp_forward(input: &[f64], weights: &MLPWeights) -> Result<(f64, MlpTrace)> {
    let trace = weights.forward(input)?;
    Ok((trace.score, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_examples() {
        let mut w = MLPWeights::zeros(1, 1).unwrap();
        w.set_output_bias(3.5);
        assert_eq!(mlp_forward(&[12.0], &w).unwrap().0, 3.5);

        let p = w.params_mut();
        let w1 = p.find("mlp.w1").unwrap();
        let w2 = p.find("mlp.w2").unwrap();
        p.fill(w1, 1.0);
        p.fill(w2, 2.0);
        w.set_output_bias(1.0);
        assert_eq!(mlp_forward(&[3.0], &w).unwrap().0, 7.0);
        assert_eq!(mlp_forward(&[-3.0], &w).unwrap().0, 1.0);
    }

    #[test]
    fn dimension_mismatch() {
        let w = MLPWeights::new(4, 8, 1).unwrap();
        assert!(mlp_forward(&[1.0; 3], &w).is_err());
        assert!(MLPWeights::zeros(4, 0).is_err());
    }

    #[test]
    fn output_is_finite_for_large_inputs() {
        let w = MLPWeights::with_init_std(5, 16, 3, 1.0).unwrap();
        let (s, _) = mlp_forward(&[1e6, -1e6, 3e5, 0.0, 7.0], &w).unwrap();
        assert!(s.is_finite());
    }
}
