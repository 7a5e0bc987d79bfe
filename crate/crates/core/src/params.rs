//! Flat parameter storage with named tensor views.
//!
//! All trainable tensors of a model live in one contiguous `Vec<f64>`, so
//! optimizers and gradient buffers are plain slices of the same length and
//! checkpointing walks a single index.

use std::ops::Range;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TensorId(usize);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.numel()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    specs: Vec<TensorSpec>,
    data: Vec<f64>,
}

impl Default for ParamSet {
    fn default() -> Self {
        ParamSet::new()
    }
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet {
            specs: Vec::new(),
            data: Vec::new(),
        }
    }

    /// Appends a zero-initialized tensor.
    pub fn add(&mut self, name: impl Into<String>, shape: &[usize]) -> TensorId {
        let spec = TensorSpec {
            name: name.into(),
            shape: shape.to_vec(),
            offset: self.data.len(),
        };
        self.data.resize(self.data.len() + spec.numel(), 0.0);
        self.specs.push(spec);
        TensorId(self.specs.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn specs(&self) -> &[TensorSpec] {
        &self.specs
    }

    pub fn spec(&self, id: TensorId) -> &TensorSpec {
        &self.specs[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = TensorId> {
        (0..self.specs.len()).map(TensorId)
    }

    pub fn find(&self, name: &str) -> Option<TensorId> {
        self.specs.iter().position(|s| s.name == name).map(TensorId)
    }

    pub fn range(&self, id: TensorId) -> Range<usize> {
        self.specs[id.0].range()
    }

    pub fn get(&self, id: TensorId) -> &[f64] {
        &self.data[self.range(id)]
    }

    pub fn get_mut(&mut self, id: TensorId) -> &mut [f64] {
        let r = self.range(id);
        &mut self.data[r]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// A zeroed buffer with this set's layout, for gradients.
    pub fn zeros(&self) -> Vec<f64> {
        vec![0.0; self.data.len()]
    }

    pub fn fill_normal(&mut self, id: TensorId, std: f64, rng: &mut impl rand::Rng) {
        let normal = Normal::new(0.0, std).expect("std is finite and non-negative");
        for x in self.get_mut(id) {
            *x = normal.sample(rng);
        }
    }

    pub fn fill_uniform(&mut self, id: TensorId, lo: f64, hi: f64, rng: &mut impl rand::Rng) {
        for x in self.get_mut(id) {
            *x = rng.random_range(lo..hi);
        }
    }

    pub fn fill(&mut self, id: TensorId, value: f64) {
        self.get_mut(id).iter_mut().for_each(|x| *x = value);
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Copies tensor values from `other` by name; shapes must agree.
    pub fn load_from(&mut self, other: &ParamSet) -> Result<()> {
        for i in 0..self.specs.len() {
            let spec = &self.specs[i];
            let src = other
                .find(&spec.name)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor `{}`", spec.name)))?;
            if other.spec(src).shape != spec.shape {
                return Err(Error::Checkpoint(format!(
                    "tensor `{}` has shape {:?}, expected {:?}",
                    spec.name,
                    other.spec(src).shape,
                    spec.shape
                )));
            }
            let r = spec.range();
            self.data[r].copy_from_slice(other.get(src));
        }
        Ok(())
    }

    /// Builds a set from explicit specs and data (used when reading
    /// checkpoints).
    pub fn from_parts(specs: Vec<TensorSpec>, data: Vec<f64>) -> Result<Self> {
        let mut expected = 0;
        for s in &specs {
            if s.offset != expected {
                return Err(Error::Checkpoint(format!("tensor `{}` is not contiguous", s.name)));
            }
            expected += s.numel();
        }
        if expected != data.len() {
            return Err(Error::Checkpoint(format!(
                "tensor index covers {expected} values but {} were provided",
                data.len()
            )));
        }
        Ok(ParamSet { specs, data })
    }
}
