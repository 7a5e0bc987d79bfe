//! Seeded finite-difference checks of every hand-written backward pass.

use ara_core::corpus::TokenSequence;
use ara_core::encoder::{EncoderConfig, Pooling, TransformerEncoder};
use ara_core::params::ParamSet;
use ara_core::training::{LinearHead, MLPWeights};
use rand::{Rng, SeedableRng};

use super::{finite_difference_check, worst};

const H: f64 = 1e-4;
const PER_TENSOR: usize = 24;

fn rng(seed: u64) -> rand_xoshiro::SplitMix64 {
    rand_xoshiro::SplitMix64::seed_from_u64(seed ^ 0xa5a5_5a5a)
}

fn random_sequence(rng: &mut impl Rng, vocab: usize, max_len: usize) -> TokenSequence {
    let n = rng.random_range(2..=max_len);
    let mut ids: Vec<usize> = (0..n).map(|_| rng.random_range(0..vocab)).collect();
    let mut mask = vec![1u8; n];
    ids.resize(max_len, 0);
    mask.resize(max_len, 0);
    TokenSequence { ids, attention_mask: mask }
}

/// Worst per-tensor relative error of the encoder backward pass on a random
/// linear functional of the pooled output.
pub fn encoder_instance(seed: u64, dim: usize, layers: usize, pooling: Pooling) -> (String, f64) {
    let vocab = 17;
    let config = EncoderConfig {
        vocab_size: vocab,
        max_len: 10,
        model_dim: dim,
        num_layers: layers,
        num_heads: 2,
        ff_dim: dim + 4,
        ..EncoderConfig::for_pooling(pooling, vocab)
    };
    let enc = TransformerEncoder::with_init_std(config.clone(), seed, 0.3).unwrap();
    let mut r = rng(seed);
    let tokens = random_sequence(&mut r, vocab, 10);
    let coef: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
    let trace = enc.forward(&tokens).unwrap();
    let mut grads = enc.params().zeros();
    enc.backward(&trace, &coef, &mut grads).unwrap();
    let report = finite_difference_check(enc.params(), &grads, PER_TENSOR, H, |p: &ParamSet| {
        let e = TransformerEncoder::from_params(config.clone(), p).unwrap();
        e.embed(&tokens).unwrap().values.iter().zip(&coef).map(|(a, b)| a * b).sum()
    });
    worst(&report)
}

/// Head parameters and input gradient under a squared-error loss.
pub fn head_instance(seed: u64, dim: usize) -> (String, f64) {
    let mut r = rng(seed);
    let head = LinearHead::new(dim, seed, 0.7, r.random_range(-1.0..1.0));
    let x: Vec<f64> = (0..dim).map(|_| r.random_range(-2.0..2.0)).collect();
    let y = r.random_range(1.0..7.0);
    let loss = |h: &LinearHead, x: &[f64]| (h.forward(x).unwrap() - y).powi(2);
    let d = 2.0 * (head.forward(&x).unwrap() - y);
    let mut grads = head.params().zeros();
    let dx = head.backward(&x, d, &mut grads).unwrap();
    let mut report = finite_difference_check(head.params(), &grads, PER_TENSOR, H, |p: &ParamSet| {
        let mut h = head.clone();
        h.params_mut().data_mut().copy_from_slice(p.data());
        loss(&h, &x)
    });
    // Input gradient, checked the same way through a one-tensor set.
    let mut xs = ParamSet::new();
    let id = xs.add("input", &[dim]);
    xs.get_mut(id).copy_from_slice(&x);
    report.extend(finite_difference_check(&xs, &dx, PER_TENSOR, H, |p: &ParamSet| loss(&head, p.data())));
    worst(&report)
}

pub fn mlp_instance(seed: u64, input_dim: usize, hidden: usize) -> (String, f64) {
    let mut r = rng(seed);
    let mut mlp = MLPWeights::with_init_std(input_dim, hidden, seed, 0.5).unwrap();
    let b1 = mlp.params().find("mlp.b1").unwrap();
    let mut br = rng(seed + 1);
    mlp.params_mut().fill_normal(b1, 0.3, &mut br);
    mlp.set_output_bias(r.random_range(1.0..7.0));
    let x: Vec<f64> = (0..input_dim).map(|_| r.random_range(-2.0..2.0)).collect();
    let y = r.random_range(1.0..7.0);
    let trace = mlp.forward(&x).unwrap();
    let mut grads = mlp.params().zeros();
    mlp.backward(&trace, 2.0 * (trace.score - y), &mut grads).unwrap();
    let report = finite_difference_check(mlp.params(), &grads, PER_TENSOR, H, |p: &ParamSet| {
        let m = MLPWeights::from_params(input_dim, hidden, p).unwrap();
        (m.forward(&x).unwrap().score - y).powi(2)
    });
    worst(&report)
}

/// All instances: `(label, worst relative error)`.
pub fn suite() -> Vec<(String, f64)> {
    let mut out = Vec::new();
    let mut seed = 0;
    for &dim in &[8usize, 16, 32] {
        for layers in 1..=2 {
            for pooling in [Pooling::Cls, Pooling::Eos] {
                seed += 1;
                let (t, e) = encoder_instance(seed, dim, layers, pooling);
                out.push((format!("encoder d{dim} l{layers} {pooling:?} seed {seed}: {t}"), e));
            }
        }
    }
    for s in 0..4 {
        let (t, e) = head_instance(100 + s, 8 + 8 * s as usize);
        out.push((format!("head seed {}: {t}", 100 + s), e));
    }
    for s in 0..6 {
        let (t, e) = mlp_instance(200 + s, 5 + 3 * s as usize, 4 + 4 * s as usize);
        out.push((format!("mlp seed {}: {t}", 200 + s), e));
    }
    out
}
