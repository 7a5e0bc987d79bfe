use crate::error::{check_len, Result};
use crate::params::{ParamSet, TensorId};
use crate::rng;

/// Temporary linear regression head used while fine-tuning an encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    params: ParamSet,
    dim: usize,
    w: TensorId,
    b: TensorId,
}

impl LinearHead {
    /// Seeded normal weights of scale `std` and the given bias.
    pub fn new(dim: usize, seed: u64, std: f64, bias: f64) -> Self {
        let mut params = ParamSet::new();
        let w = params.add("head.w", &[dim, 1]);
        let b = params.add("head.b", &[1]);
        params.fill_normal(w, std, &mut rng::stream(seed, "head/init"));
        params.fill(b, bias);
        LinearHead { params, dim, w, b }
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn forward(&self, pooled: &[f64]) -> Result<f64> {
        check_len(self.dim, pooled.len())?;
        let w = self.params.get(self.w);
        Ok(self.params.get(self.b)[0] + pooled.iter().zip(w).map(|(x, w)| x * w).sum::<f64>())
    }

    /// Accumulates parameter gradients into `grads` and returns the
    /// gradient with respect to `pooled`.
    pub fn backward(&self, pooled: &[f64], d_score: f64, grads: &mut [f64]) -> Result<Vec<f64>> {
        check_len(self.dim, pooled.len())?;
        check_len(self.params.len(), grads.len())?;
        for (g, x) in grads[self.params.range(self.w)].iter_mut().zip(pooled) {
            *g += d_score * x;
        }
        grads[self.params.range(self.b)][0] += d_score;
        Ok(self.params.get(self.w).iter().map(|w| d_score * w).collect())
    }
}
