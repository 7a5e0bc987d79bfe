//! Dense kernels with hand-written backward passes. Matrices are row-major;
//! a weight `w` of shape `[inp, out]` maps a row `x` to `x·w`.

pub const LN_EPS: f64 = 1e-5;

/// `out[r] = x[r]·w + bias` for each of the `x.len() / inp` rows.
pub fn linear(x: &[f64], w: &[f64], bias: &[f64], inp: usize, out: usize) -> Vec<f64> {
    let rows = x.len() / inp;
    let mut y = Vec::with_capacity(rows * out);
    for r in 0..rows {
        y.extend_from_slice(bias);
        let yr = &mut y[r * out..(r + 1) * out];
        for (i, &xi) in x[r * inp..(r + 1) * inp].iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let wi = &w[i * out..(i + 1) * out];
            for (yj, wij) in yr.iter_mut().zip(wi) {
                *yj += xi * wij;
            }
        }
    }
    y
}

/// Accumulates gradients of [`linear`]: `dx += dy·wᵀ`, `dw += xᵀ·dy`,
/// `db += Σ_rows dy`.
#[allow(clippy::too_many_arguments)]
pub fn linear_backward(
    x: &[f64],
    w: &[f64],
    dy: &[f64],
    inp: usize,
    out: usize,
    dx: &mut [f64],
    dw: &mut [f64],
    db: &mut [f64],
) {
    let rows = x.len() / inp;
    for r in 0..rows {
        let dyr = &dy[r * out..(r + 1) * out];
        if dyr.iter().all(|&v| v == 0.0) {
            continue;
        }
        for (b, g) in db.iter_mut().zip(dyr) {
            *b += g;
        }
        let xr = &x[r * inp..(r + 1) * inp];
        let dxr = &mut dx[r * inp..(r + 1) * inp];
        for i in 0..inp {
            let wi = &w[i * out..(i + 1) * out];
            let dwi = &mut dw[i * out..(i + 1) * out];
            let xi = xr[i];
            let mut acc = 0.0;
            for j in 0..out {
                acc += wi[j] * dyr[j];
                dwi[j] += xi * dyr[j];
            }
            dxr[i] += acc;
        }
    }
}

/// Per-row layer norm state needed for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct LayerNormCache {
    pub xhat: Vec<f64>,
    pub inv_std: Vec<f64>,
}

pub fn layer_norm(x: &[f64], gain: &[f64], bias: &[f64], d: usize) -> (Vec<f64>, LayerNormCache) {
    let rows = x.len() / d;
    let mut y = vec![0.0; x.len()];
    let mut cache = LayerNormCache {
        xhat: vec![0.0; x.len()],
        inv_std: Vec::with_capacity(rows),
    };
    for r in 0..rows {
        let xr = &x[r * d..(r + 1) * d];
        let mean = xr.iter().sum::<f64>() / d as f64;
        let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        cache.inv_std.push(inv);
        for j in 0..d {
            let h = (xr[j] - mean) * inv;
            cache.xhat[r * d + j] = h;
            y[r * d + j] = h * gain[j] + bias[j];
        }
    }
    (y, cache)
}

pub fn layer_norm_backward(
    dy: &[f64],
    cache: &LayerNormCache,
    gain: &[f64],
    d: usize,
    dx: &mut [f64],
    dgain: &mut [f64],
    dbias: &mut [f64],
) {
    let rows = dy.len() / d;
    for r in 0..rows {
        let dyr = &dy[r * d..(r + 1) * d];
        if dyr.iter().all(|&v| v == 0.0) {
            continue;
        }
        let xh = &cache.xhat[r * d..(r + 1) * d];
        let mut mean_dxh = 0.0;
        let mut mean_dxh_xh = 0.0;
        for j in 0..d {
            let dxh = dyr[j] * gain[j];
            mean_dxh += dxh;
            mean_dxh_xh += dxh * xh[j];
            dgain[j] += dyr[j] * xh[j];
            dbias[j] += dyr[j];
        }
        mean_dxh /= d as f64;
        mean_dxh_xh /= d as f64;
        let inv = cache.inv_std[r];
        for j in 0..d {
            let dxh = dyr[j] * gain[j];
            dx[r * d + j] += inv * (dxh - mean_dxh - xh[j] * mean_dxh_xh);
        }
    }
}

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const GELU_C: f64 = 0.044_715;

/// GELU, tanh approximation.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (SQRT_2_OVER_PI * (x + GELU_C * x * x * x)).tanh())
}

pub fn gelu_grad(x: f64) -> f64 {
    let inner = SQRT_2_OVER_PI * (x + GELU_C * x * x * x);
    let t = inner.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_C * x * x)
}

/// In-place softmax over `row[..len]`; entries past `len` are set to zero
/// (masked keys).
pub fn softmax_prefix(row: &mut [f64], len: usize) {
    let max = row[..len].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in &mut row[..len] {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in &mut row[..len] {
        *v /= sum;
    }
    row[len..].iter_mut().for_each(|v| *v = 0.0);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_matches_hand_computation() {
        // x = [1, 2], w = [[1, 0, 2], [0, 1, 1]], b = [0.5, 0, 0]
        let y = linear(&[1.0, 2.0], &[1.0, 0.0, 2.0, 0.0, 1.0, 1.0], &[0.5, 0.0, 0.0], 2, 3);
        assert_eq!(y, [1.5, 2.0, 4.0]);
    }

    #[test]
    fn gelu_derivative_matches_finite_difference() {
        for &x in &[-3.0, -0.7, 0.0, 0.4, 2.5] {
            let h = 1e-6;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn softmax_masks_tail() {
        let mut row = [1.0, 2.0, 3.0, 100.0];
        softmax_prefix(&mut row, 3);
        assert!((row[..3].iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(row[3], 0.0);
    }

    #[test]
    fn layer_norm_output_is_normalized() {
        let (y, _) = layer_norm(&[1.0, 2.0, 3.0, 4.0], &[1.0; 4], &[0.0; 4], 4);
        let mean = y.iter().sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
    }
}
