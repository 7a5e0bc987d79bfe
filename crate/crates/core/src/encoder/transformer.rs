//! Pre-norm transformer encoder with learned positions, GELU feed-forward
//! blocks and a final layer norm, plus its backward pass.
//!
//! Padded positions are masked out of every attention row, so they cannot
//! influence real positions; the forward pass therefore runs on the unpadded
//! prefix only, which is exactly equivalent and much cheaper.

use std::ops::Range;

use super::ops::{
    gelu, gelu_grad, layer_norm, layer_norm_backward, linear, linear_backward, softmax_prefix,
    LayerNormCache,
};
use super::{Embedding, EmbeddingSource, EncoderConfig, Pooling};
use crate::corpus::TokenSequence;
use crate::error::{check_len, Error, Result};
use crate::params::{ParamSet, TensorId};
use crate::rng;

const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone)]
struct LayerTensors {
    ln1_g: TensorId,
    ln1_b: TensorId,
    wq: TensorId,
    bq: TensorId,
    wk: TensorId,
    bk: TensorId,
    wv: TensorId,
    bv: TensorId,
    wo: TensorId,
    bo: TensorId,
    ln2_g: TensorId,
    ln2_b: TensorId,
    w1: TensorId,
    b1: TensorId,
    w2: TensorId,
    b2: TensorId,
}

#[derive(Debug, Clone)]
struct Tensors {
    tok_emb: TensorId,
    pos_emb: TensorId,
    layers: Vec<LayerTensors>,
    lnf_g: TensorId,
    lnf_b: TensorId,
}

fn build_layout(c: &EncoderConfig) -> (ParamSet, Tensors) {
    let (d, ff) = (c.model_dim, c.ff_dim);
    let mut p = ParamSet::new();
    let tok_emb = p.add("encoder.tok_emb", &[c.vocab_size, d]);
    let pos_emb = p.add("encoder.pos_emb", &[c.max_len, d]);
    let layers = (0..c.num_layers)
        .map(|l| {
            let mut t = |name: &str, shape: &[usize]| p.add(format!("encoder.layer{l}.{name}"), shape);
            LayerTensors {
                ln1_g: t("ln1.gain", &[d]),
                ln1_b: t("ln1.bias", &[d]),
                wq: t("attn.wq", &[d, d]),
                bq: t("attn.bq", &[d]),
                wk: t("attn.wk", &[d, d]),
                bk: t("attn.bk", &[d]),
                wv: t("attn.wv", &[d, d]),
                bv: t("attn.bv", &[d]),
                wo: t("attn.wo", &[d, d]),
                bo: t("attn.bo", &[d]),
                ln2_g: t("ln2.gain", &[d]),
                ln2_b: t("ln2.bias", &[d]),
                w1: t("ffn.w1", &[d, ff]),
                b1: t("ffn.b1", &[ff]),
                w2: t("ffn.w2", &[ff, d]),
                b2: t("ffn.b2", &[d]),
            }
        })
        .collect();
    let lnf_g = p.add("encoder.final_ln.gain", &[d]);
    let lnf_b = p.add("encoder.final_ln.bias", &[d]);
    (
        p,
        Tensors {
            tok_emb,
            pos_emb,
            layers,
            lnf_g,
            lnf_b,
        },
    )
}

#[derive(Debug, Clone)]
pub struct TransformerEncoder {
    config: EncoderConfig,
    params: ParamSet,
    t: Tensors,
}

#[derive(Debug, Clone)]
struct LayerTrace {
    ln1: LayerNormCache,
    a: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// `[head][query][key]`, each `n × n`.
    probs: Vec<f64>,
    ctx: Vec<f64>,
    ln2: LayerNormCache,
    b: Vec<f64>,
    u: Vec<f64>,
    g: Vec<f64>,
}

/// Forward activations of one sequence, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct EncoderTrace {
    ids: Vec<usize>,
    layers: Vec<LayerTrace>,
    lnf: LayerNormCache,
    hidden: Vec<f64>,
    d: usize,
    pool_at: usize,
}

impl EncoderTrace {
    pub fn real_len(&self) -> usize {
        self.ids.len()
    }

    /// Final (layer-normed) hidden state at unpadded position `t`.
    pub fn hidden(&self, t: usize) -> &[f64] {
        &self.hidden[t * self.d..(t + 1) * self.d]
    }

    pub fn pooled(&self) -> &[f64] {
        self.hidden(self.pool_at)
    }

    pub fn pool_position(&self) -> usize {
        self.pool_at
    }

    /// Attention probabilities of layer `layer`, head `head`, as rows of
    /// length `real_len()`.
    pub fn attention(&self, layer: usize, head: usize) -> &[f64] {
        let n = self.ids.len();
        &self.layers[layer].probs[head * n * n..(head + 1) * n * n]
    }
}

fn pair_mut(buf: &mut [f64], a: Range<usize>, b: Range<usize>) -> (&mut [f64], &mut [f64]) {
    if a.start < b.start {
        assert!(a.end <= b.start);
        let (lo, hi) = buf.split_at_mut(b.start);
        (&mut lo[a], &mut hi[..b.len()])
    } else {
        assert!(b.end <= a.start);
        let (lo, hi) = buf.split_at_mut(a.start);
        (&mut hi[..a.len()], &mut lo[b])
    }
}

impl TransformerEncoder {
    /// Seeded initialization: normal(0, 0.02) for embeddings and weight
    /// matrices, unit layer-norm gains, zero biases.
    pub fn new(config: EncoderConfig, seed: u64) -> Result<Self> {
        Self::with_init_std(config, seed, INIT_STD)
    }

    /// As [`TransformerEncoder::new`] with a custom weight scale. Layer-norm
    /// parameters and biases are perturbed too when `std` exceeds the
    /// default, which gives gradient checks non-trivial values everywhere.
    pub fn with_init_std(config: EncoderConfig, seed: u64, std: f64) -> Result<Self> {
        config.validate()?;
        let (mut params, t) = build_layout(&config);
        let mut rng = rng::stream(seed, "encoder/init");
        let randomize_all = std > INIT_STD;
        for id in params.ids().collect::<Vec<_>>() {
            let name = params.spec(id).name.clone();
            let leaf = name.rsplit('.').next().unwrap_or_default();
            if leaf == "gain" {
                if randomize_all {
                    params.fill_uniform(id, 0.5, 1.5, &mut rng);
                } else {
                    params.fill(id, 1.0);
                }
            } else if leaf.starts_with('b') {
                if randomize_all {
                    params.fill_normal(id, std, &mut rng);
                }
            } else {
                params.fill_normal(id, std, &mut rng);
            }
        }
        Ok(TransformerEncoder { config, params, t })
    }

    /// Wraps existing parameters (e.g. from a checkpoint).
    pub fn from_params(config: EncoderConfig, loaded: &ParamSet) -> Result<Self> {
        config.validate()?;
        let (mut params, t) = build_layout(&config);
        params.load_from(loaded)?;
        if !params.all_finite() {
            return Err(Error::NonFinite("encoder weights".into()));
        }
        Ok(TransformerEncoder { config, params, t })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn dim(&self) -> usize {
        self.config.model_dim
    }

    pub fn embed(&self, tokens: &TokenSequence) -> Result<Embedding> {
        let trace = self.forward(tokens)?;
        Ok(Embedding {
            values: trace.pooled().to_vec(),
            source: EmbeddingSource::Transformer,
        })
    }

    pub fn forward(&self, tokens: &TokenSequence) -> Result<EncoderTrace> {
        let c = &self.config;
        if tokens.len() > c.max_len {
            return Err(Error::invalid(format!(
                "sequence length {} exceeds encoder max_len {}",
                tokens.len(),
                c.max_len
            )));
        }
        let ids = tokens.real_ids().to_vec();
        if ids.is_empty() {
            return Err(Error::invalid("sequence has no unpadded tokens"));
        }
        if let Some(&bad) = ids.iter().find(|&&id| id >= c.vocab_size) {
            return Err(Error::TokenOutOfRange {
                id: bad,
                vocab_size: c.vocab_size,
            });
        }

        let (n, d) = (ids.len(), c.model_dim);
        let p = &self.params;
        let tok = p.get(self.t.tok_emb);
        let pos = p.get(self.t.pos_emb);
        let mut x = Vec::with_capacity(n * d);
        for (t, &id) in ids.iter().enumerate() {
            x.extend(
                tok[id * d..(id + 1) * d]
                    .iter()
                    .zip(&pos[t * d..(t + 1) * d])
                    .map(|(a, b)| a + b),
            );
        }

        let mut layers = Vec::with_capacity(c.num_layers);
        for lt in &self.t.layers {
            let (next, trace) = self.layer_forward(lt, &x, n);
            layers.push(trace);
            x = next;
        }
        let (hidden, lnf) = layer_norm(&x, p.get(self.t.lnf_g), p.get(self.t.lnf_b), d);
        let pool_at = match c.pooling {
            Pooling::Cls => 0,
            Pooling::Eos => n - 1,
        };
        Ok(EncoderTrace {
            ids,
            layers,
            lnf,
            hidden,
            d,
            pool_at,
        })
    }

    fn layer_forward(&self, lt: &LayerTensors, x: &[f64], n: usize) -> (Vec<f64>, LayerTrace) {
        let c = &self.config;
        let (d, ff, heads) = (c.model_dim, c.ff_dim, c.num_heads);
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let p = &self.params;

        let (a, ln1) = layer_norm(x, p.get(lt.ln1_g), p.get(lt.ln1_b), d);
        let q = linear(&a, p.get(lt.wq), p.get(lt.bq), d, d);
        let k = linear(&a, p.get(lt.wk), p.get(lt.bk), d, d);
        let v = linear(&a, p.get(lt.wv), p.get(lt.bv), d, d);

        let mut probs = vec![0.0; heads * n * n];
        let mut ctx = vec![0.0; n * d];
        for h in 0..heads {
            let cols = h * dh..(h + 1) * dh;
            for t in 0..n {
                let keys = if c.causal { t + 1 } else { n };
                let row = &mut probs[(h * n + t) * n..(h * n + t + 1) * n];
                let qt = &q[t * d + cols.start..t * d + cols.end];
                for (s, r) in row.iter_mut().enumerate().take(keys) {
                    let ks = &k[s * d + cols.start..s * d + cols.end];
                    *r = scale * qt.iter().zip(ks).map(|(a, b)| a * b).sum::<f64>();
                }
                softmax_prefix(row, keys);
                let out = &mut ctx[t * d + cols.start..t * d + cols.end];
                for (s, &w) in row.iter().enumerate().take(keys) {
                    let vs = &v[s * d + cols.start..s * d + cols.end];
                    for (o, vv) in out.iter_mut().zip(vs) {
                        *o += w * vv;
                    }
                }
            }
        }

        let o = linear(&ctx, p.get(lt.wo), p.get(lt.bo), d, d);
        let x_mid: Vec<f64> = x.iter().zip(&o).map(|(a, b)| a + b).collect();
        let (b, ln2) = layer_norm(&x_mid, p.get(lt.ln2_g), p.get(lt.ln2_b), d);
        let u = linear(&b, p.get(lt.w1), p.get(lt.b1), d, ff);
        let g: Vec<f64> = u.iter().map(|&z| gelu(z)).collect();
        let f = linear(&g, p.get(lt.w2), p.get(lt.b2), ff, d);
        let out = x_mid.iter().zip(&f).map(|(a, b)| a + b).collect();
        (
            out,
            LayerTrace {
                ln1,
                a,
                q,
                k,
                v,
                probs,
                ctx,
                ln2,
                b,
                u,
                g,
            },
        )
    }

    /// Accumulates into `grads` (laid out like [`Self::params`]) the gradient
    /// of a scalar loss whose gradient w.r.t. the pooled embedding is
    /// `d_pooled`.
    pub fn backward(&self, trace: &EncoderTrace, d_pooled: &[f64], grads: &mut [f64]) -> Result<()> {
        let d = self.config.model_dim;
        check_len(d, d_pooled.len())?;
        check_len(self.params.len(), grads.len())?;
        let n = trace.ids.len();
        let p = &self.params;

        let mut dhidden = vec![0.0; n * d];
        dhidden[trace.pool_at * d..(trace.pool_at + 1) * d].copy_from_slice(d_pooled);

        let mut dx = vec![0.0; n * d];
        {
            let (dg, db) = pair_mut(grads, p.range(self.t.lnf_g), p.range(self.t.lnf_b));
            layer_norm_backward(&dhidden, &trace.lnf, p.get(self.t.lnf_g), d, &mut dx, dg, db);
        }

        for (lt, tr) in self.t.layers.iter().zip(&trace.layers).rev() {
            dx = self.layer_backward(lt, tr, &dx, n, grads);
        }

        let tok_r = p.range(self.t.tok_emb);
        let pos_r = p.range(self.t.pos_emb);
        for (t, &id) in trace.ids.iter().enumerate() {
            let row = &dx[t * d..(t + 1) * d];
            let te = &mut grads[tok_r.start + id * d..tok_r.start + (id + 1) * d];
            te.iter_mut().zip(row).for_each(|(g, r)| *g += r);
            let pe = &mut grads[pos_r.start + t * d..pos_r.start + (t + 1) * d];
            pe.iter_mut().zip(row).for_each(|(g, r)| *g += r);
        }
        Ok(())
    }

    fn layer_backward(
        &self,
        lt: &LayerTensors,
        tr: &LayerTrace,
        dout: &[f64],
        n: usize,
        grads: &mut [f64],
    ) -> Vec<f64> {
        let c = &self.config;
        let (d, ff, heads) = (c.model_dim, c.ff_dim, c.num_heads);
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let p = &self.params;

        // Feed-forward branch; the residual passes dout straight through.
        let mut dg = vec![0.0; n * ff];
        {
            let (dw, db) = pair_mut(grads, p.range(lt.w2), p.range(lt.b2));
            linear_backward(&tr.g, p.get(lt.w2), dout, ff, d, &mut dg, dw, db);
        }
        let du: Vec<f64> = dg.iter().zip(&tr.u).map(|(g, &u)| g * gelu_grad(u)).collect();
        let mut db_norm = vec![0.0; n * d];
        {
            let (dw, db) = pair_mut(grads, p.range(lt.w1), p.range(lt.b1));
            linear_backward(&tr.b, p.get(lt.w1), &du, d, ff, &mut db_norm, dw, db);
        }
        let mut dx_mid = dout.to_vec();
        {
            let (dgain, dbias) = pair_mut(grads, p.range(lt.ln2_g), p.range(lt.ln2_b));
            layer_norm_backward(&db_norm, &tr.ln2, p.get(lt.ln2_g), d, &mut dx_mid, dgain, dbias);
        }

        // Attention branch.
        let mut dctx = vec![0.0; n * d];
        {
            let (dw, db) = pair_mut(grads, p.range(lt.wo), p.range(lt.bo));
            linear_backward(&tr.ctx, p.get(lt.wo), &dx_mid, d, d, &mut dctx, dw, db);
        }
        let mut dq = vec![0.0; n * d];
        let mut dk = vec![0.0; n * d];
        let mut dv = vec![0.0; n * d];
        let mut dp = vec![0.0; n];
        for h in 0..heads {
            let cols = h * dh..(h + 1) * dh;
            for t in 0..n {
                let keys = if c.causal { t + 1 } else { n };
                let row = &tr.probs[(h * n + t) * n..(h * n + t) * n + keys];
                let dct = &dctx[t * d + cols.start..t * d + cols.end];
                let mut dot = 0.0;
                for s in 0..keys {
                    let vs = &tr.v[s * d + cols.start..s * d + cols.end];
                    dp[s] = dct.iter().zip(vs).map(|(a, b)| a * b).sum();
                    dot += row[s] * dp[s];
                    let dvs = &mut dv[s * d + cols.start..s * d + cols.end];
                    for (g, x) in dvs.iter_mut().zip(dct) {
                        *g += row[s] * x;
                    }
                }
                for s in 0..keys {
                    let ds = row[s] * (dp[s] - dot) * scale;
                    if ds == 0.0 {
                        continue;
                    }
                    for j in cols.clone() {
                        dq[t * d + j] += ds * tr.k[s * d + j];
                        dk[s * d + j] += ds * tr.q[t * d + j];
                    }
                }
            }
        }
        let mut da = vec![0.0; n * d];
        for (w, b, dy) in [(lt.wq, lt.bq, &dq), (lt.wk, lt.bk, &dk), (lt.wv, lt.bv, &dv)] {
            let (dw, db) = pair_mut(grads, p.range(w), p.range(b));
            linear_backward(&tr.a, p.get(w), dy, d, d, &mut da, dw, db);
        }
        let mut dx = dx_mid;
        {
            let (dgain, dbias) = pair_mut(grads, p.range(lt.ln1_g), p.range(lt.ln1_b));
            layer_norm_backward(&da, &tr.ln1, p.get(lt.ln1_g), d, &mut dx, dgain, dbias);
        }
        dx
    }
}
