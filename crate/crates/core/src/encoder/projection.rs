use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use super::{Embedding, EmbeddingSource};
use crate::corpus::TokenSequence;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

fn token_vector(base: u64, id: usize, dim: usize) -> Vec<f64> {
    let mut r = Rng::seed_from_u64(base ^ (id as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut r)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Mean over unpadded positions of a seeded pseudo-random unit vector per
/// token id. Needs no training; used as a fast deterministic encoder.
pub fn random_projection_encode(tokens: &TokenSequence, seed: u64, dim: usize) -> Result<Embedding> {
    if dim == 0 {
        return Err(Error::invalid("projection dimension must be positive"));
    }
    let ids = tokens.real_ids();
    let mut values = vec![0.0; dim];
    if !ids.is_empty() {
        let base = rng::derive_seed(seed, "projection/token");
        for &id in ids {
            for (acc, x) in values.iter_mut().zip(token_vector(base, id, dim)) {
                *acc += x;
            }
        }
        let n = ids.len() as f64;
        values.iter_mut().for_each(|x| *x /= n);
    }
    Ok(Embedding {
        values,
        source: EmbeddingSource::RandomProjection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(ids: &[usize], len: usize) -> TokenSequence {
        let mut s = TokenSequence {
            ids: ids.to_vec(),
            attention_mask: vec![1; ids.len()],
        };
        s.ids.resize(len, 0);
        s.attention_mask.resize(len, 0);
        s
    }

    #[test]
    fn deterministic_per_seed() {
        let s = seq(&[2, 9, 14], 10);
        assert_eq!(
            random_projection_encode(&s, 4, 32).unwrap(),
            random_projection_encode(&s, 4, 32).unwrap()
        );
        assert_ne!(
            random_projection_encode(&s, 4, 32).unwrap().values,
            random_projection_encode(&s, 5, 32).unwrap().values
        );
    }

    #[test]
    fn single_token_is_a_unit_vector() {
        let e = random_projection_encode(&seq(&[17], 4), 1, 48).unwrap();
        let norm = e.values.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        let pair = random_projection_encode(&seq(&[17, 17], 4), 1, 48).unwrap();
        assert_eq!(pair.values, e.values);
    }

    #[test]
    fn padding_is_ignored() {
        let a = random_projection_encode(&seq(&[2, 5], 4), 3, 8).unwrap();
        let b = random_projection_encode(&seq(&[2, 5], 40), 3, 8).unwrap();
        assert_eq!(a, b);
    }
}
