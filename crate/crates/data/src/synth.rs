//! Deterministic generators. Every value is drawn from one splitmix64
//! stream seeded by the caller, in a fixed order.

use mlang_tensor::SplitMix64;

use crate::dataset::{Column, ColumnKind, Dataset};
use crate::error::DataError;

pub const IMAGE_SIDE: usize = 8;
pub const SERIES_NOISE: f64 = 0.05;

const IMAGE_NOISE: f32 = 0.2;
const MAX_IMAGE_CLASSES: usize = 32;
const MIN_TEMPLATE_DISTANCE: usize = 16;

fn invalid(msg: String) -> DataError {
    DataError::Invalid(msg)
}

/// Token sequences with round-robin labels. Ids 1..vocab are split into
/// `classes` disjoint slices of width (vocab-1)/classes; strictly more than
/// half of each row's non-pad tokens come from its class slice and the rest
/// are uniform over 1..vocab. Rows hold between ceil(L/2) and L tokens,
/// padded with 0.
pub fn synthetic_text(
    n: usize,
    classes: usize,
    seq_len: usize,
    vocab: usize,
    seed: u64,
) -> Result<Dataset, DataError> {
    if n == 0 || seq_len == 0 {
        return Err(invalid(format!(
            "syntheticText needs n > 0 and seq_len > 0 (got n={n}, seq_len={seq_len})"
        )));
    }
    if classes < 2 || vocab < 2 * classes {
        return Err(invalid(format!(
            "syntheticText needs classes >= 2 and vocab >= 2*classes (got classes={classes}, vocab={vocab})"
        )));
    }
    let slice = (vocab - 1) / classes;
    let min_len = seq_len.div_ceil(2);
    let mut rng = SplitMix64::new(seed);
    let mut text = Vec::with_capacity(n * seq_len);
    let mut labels = Vec::with_capacity(n);
    let mut row = Vec::with_capacity(seq_len);
    for i in 0..n {
        let c = i % classes;
        let len = min_len + rng.below((seq_len - min_len + 1) as u64) as usize;
        let noisy = rng.below(((len - 1) / 2 + 1) as u64) as usize;
        row.clear();
        for k in 0..len {
            let id = if k < noisy {
                1 + rng.below((vocab - 1) as u64) as usize
            } else {
                1 + c * slice + rng.below(slice as u64) as usize
            };
            row.push(id as i64);
        }
        rng.shuffle(&mut row);
        row.resize(seq_len, 0);
        text.extend_from_slice(&row);
        labels.push(c as i64);
    }
    Dataset::new(vec![
        Column::ints("text", ColumnKind::IntSeq(seq_len), text),
        Column::ints("labels", ColumnKind::IntScalar, labels),
    ])
}

fn hamming(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Binary 8×8 class templates plus uniform noise in [0, 0.2), flattened.
/// Templates are redrawn until every pair differs in at least 16 pixels.
pub fn synthetic_images(n: usize, classes: usize, seed: u64) -> Result<Dataset, DataError> {
    if n == 0 || !(2..=MAX_IMAGE_CLASSES).contains(&classes) {
        return Err(invalid(format!(
            "syntheticImages needs n > 0 and 2 <= classes <= {MAX_IMAGE_CLASSES} (got n={n}, classes={classes})"
        )));
    }
    let pixels = IMAGE_SIDE * IMAGE_SIDE;
    let mut rng = SplitMix64::new(seed);
    let mut templates: Vec<Vec<bool>> = Vec::with_capacity(classes);
    while templates.len() < classes {
        let t: Vec<bool> = (0..pixels).map(|_| rng.next_u64() >> 63 == 1).collect();
        if templates.iter().all(|u| hamming(u, &t) >= MIN_TEMPLATE_DISTANCE) {
            templates.push(t);
        }
    }
    let mut image = Vec::with_capacity(n * pixels);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % classes;
        for &on in &templates[c] {
            let base = if on { 1.0 } else { 0.0 };
            image.push(base + IMAGE_NOISE * rng.next_f32());
        }
        labels.push(c as i64);
    }
    Dataset::new(vec![
        Column::floats("image", ColumnKind::F32Vec(pixels), image),
        Column::ints("labels", ColumnKind::IntScalar, labels),
    ])
}

/// Sliding windows over x_t = sin(0.1·t) + 0.05·u_t, u_t uniform in [-1, 1).
pub fn synthetic_series(n: usize, window: usize, seed: u64) -> Result<Dataset, DataError> {
    synthetic_series_with_noise(n, window, seed, SERIES_NOISE)
}

pub fn synthetic_series_with_noise(
    n: usize,
    window: usize,
    seed: u64,
    noise: f64,
) -> Result<Dataset, DataError> {
    if n == 0 || window == 0 {
        return Err(invalid(format!(
            "syntheticSeries needs n > 0 and window > 0 (got n={n}, window={window})"
        )));
    }
    if !noise.is_finite() || noise < 0.0 {
        return Err(invalid(format!("noise amplitude must be >= 0, got {noise}")));
    }
    let mut rng = SplitMix64::new(seed);
    let xs: Vec<f32> = (0..n + window)
        .map(|t| {
            let u = 2.0 * rng.next_f32() as f64 - 1.0;
            ((0.1 * t as f64).sin() + noise * u) as f32
        })
        .collect();
    let mut windows = Vec::with_capacity(n * window);
    let mut target = Vec::with_capacity(n);
    for i in 0..n {
        windows.extend_from_slice(&xs[i..i + window]);
        target.push(xs[i + window]);
    }
    Dataset::new(vec![
        Column::floats("window", ColumnKind::F32Vec(window), windows),
        Column::floats("target", ColumnKind::F32Scalar, target),
    ])
}
