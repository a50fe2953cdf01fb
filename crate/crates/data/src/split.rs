use mlang_tensor::SplitMix64;

use crate::dataset::Dataset;
use crate::error::DataError;

/// Shuffles row indices with splitmix64(seed) and sends the first
/// ceil(ratio·n) of them to the train side. The 1e-9 slack keeps products
/// such as 0.7·10 from rounding up to the next row.
pub fn train_test_split(ds: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset), DataError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DataError::Invalid(format!(
            "split ratio must lie strictly between 0 and 1, got {ratio}"
        )));
    }
    let n = ds.len();
    let mut idx: Vec<usize> = (0..n).collect();
    SplitMix64::new(seed).shuffle(&mut idx);
    let k = ((ratio * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n);
    Ok((ds.select(&idx[..k]), ds.select(&idx[k..])))
}
