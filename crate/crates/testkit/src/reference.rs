//! Straightforward f64 implementations, written for clarity rather than
//! speed. Matrices are row-major flat slices.

pub fn linear(x: &[f64], rows: usize, inp: usize, w: &[f64], out: usize, b: Option<&[f64]>) -> Vec<f64> {
    let mut y = vec![0.0; rows * out];
    for r in 0..rows {
        for o in 0..out {
            let mut s = b.map_or(0.0, |b| b[o]);
            for i in 0..inp {
                s += x[r * inp + i] * w[o * inp + i];
            }
            y[r * out + o] = s;
        }
    }
    y
}

pub fn matmul(a: &[f64], m: usize, k: usize, b: &[f64], n: usize) -> Vec<f64> {
    let mut y = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            y[i * n + j] = (0..k).map(|p| a[i * k + p] * b[p * n + j]).sum();
        }
    }
    y
}

pub fn transpose(a: &[f64], r: usize, c: usize) -> Vec<f64> {
    let mut y = vec![0.0; r * c];
    for i in 0..r {
        for j in 0..c {
            y[j * r + i] = a[i * c + j];
        }
    }
    y
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

pub fn tanh(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.tanh()).collect()
}

pub fn sigmoid(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect()
}

pub fn softmax_rows(x: &[f64], c: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    for row in x.chunks(c) {
        let z: f64 = row.iter().map(|v| v.exp()).sum();
        out.extend(row.iter().map(|v| v.exp() / z));
    }
    out
}

/// Mean over rows of −log softmax(row)[target].
pub fn cross_entropy(logits: &[f64], c: usize, targets: &[usize]) -> f64 {
    let p = softmax_rows(logits, c);
    let total: f64 = targets
        .iter()
        .enumerate()
        .map(|(r, &t)| -p[r * c + t].ln())
        .sum();
    total / targets.len() as f64
}

pub fn mse(pred: &[f64], target: &[f64]) -> f64 {
    let s: f64 = pred.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum();
    s / pred.len() as f64
}

/// (B × L) ids into a (V × D) table → (B × L × D).
pub fn embedding(table: &[f64], d: usize, ids: &[usize]) -> Vec<f64> {
    ids.iter()
        .flat_map(|&i| table[i * d..(i + 1) * d].iter().copied())
        .collect()
}

pub fn mean_pool(x: &[f64], b: usize, l: usize, d: usize) -> Vec<f64> {
    let mut y = vec![0.0; b * d];
    for i in 0..b {
        for k in 0..d {
            y[i * d + k] = (0..l).map(|j| x[(i * l + j) * d + k]).sum::<f64>() / l as f64;
        }
    }
    y
}

pub fn concat_cols(parts: &[(&[f64], usize)], rows: usize) -> Vec<f64> {
    let mut y = Vec::new();
    for r in 0..rows {
        for (p, w) in parts {
            y.extend_from_slice(&p[r * w..(r + 1) * w]);
        }
    }
    y
}

pub fn slice_cols(x: &[f64], rows: usize, cols: usize, start: usize, len: usize) -> Vec<f64> {
    let mut y = Vec::new();
    for r in 0..rows {
        y.extend_from_slice(&x[r * cols + start..r * cols + start + len]);
    }
    y
}

/// Elman cell unrolled over a (B × window) input with one feature per
/// step: h ← tanh(x_t·W_xᵀ + h·W_hᵀ + b), h₀ = 0. Returns the final h.
pub fn elman(x: &[f64], batch: usize, window: usize, w_x: &[f64], w_h: &[f64], b: &[f64], hidden: usize) -> Vec<f64> {
    let mut h = vec![0.0; batch * hidden];
    for t in 0..window {
        let xt: Vec<f64> = (0..batch).map(|r| x[r * window + t]).collect();
        let a = linear(&xt, batch, 1, w_x, hidden, None);
        let c = linear(&h, batch, hidden, w_h, hidden, Some(b));
        h = a.iter().zip(&c).map(|(a, c)| (a + c).tanh()).collect();
    }
    h
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
