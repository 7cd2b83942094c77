use super::FbfFilter;
use crate::error::{check_dim, FbfError, Result};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean squared prior innovation of each batch.
    pub batch_mse: Vec<f64>,
    pub batch_starts: Vec<usize>,
}

/// [`train_epochs_observed`] without an observer.
pub fn train_epochs(
    filter: &mut FbfFilter,
    inputs: &[Vec<f64>],
    desired: &[Vec<f64>],
    epochs: usize,
    batch_len: usize,
    seed: u64,
) -> Result<TrainReport> {
    train_epochs_observed(filter, inputs, desired, epochs, batch_len, seed, |_, _| Ok(()))
}

/// Runs `epochs` batches of `batch_len` consecutive steps from seeded random start points.
///
/// Every batch begins with [`FbfFilter::reset_trajectory`] at a state that is zero except for
/// the output block, which takes the desired output preceding the start (zero at the start of
/// the sequence). `observe(batch, filter)` is called after each batch.
pub fn train_epochs_observed<F>(
    filter: &mut FbfFilter,
    inputs: &[Vec<f64>],
    desired: &[Vec<f64>],
    epochs: usize,
    batch_len: usize,
    seed: u64,
    mut observe: F,
) -> Result<TrainReport>
where
    F: FnMut(usize, &FbfFilter) -> Result<()>,
{
    check_dim("desired count", inputs.len(), desired.len())?;
    if batch_len == 0 || batch_len > inputs.len() {
        return Err(FbfError::InvalidParameter {
            name: "batch_len",
            reason: format!("must lie in 1..={}, got {batch_len}", inputs.len()),
        });
    }
    let (n_s, n_y) = (filter.n_s(), filter.n_y());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = TrainReport {
        batch_mse: Vec::with_capacity(epochs),
        batch_starts: Vec::with_capacity(epochs),
    };
    for epoch in 0..epochs {
        let start = rng.random_range(0..=inputs.len() - batch_len);
        let mut s0 = DVector::zeros(n_s);
        if start > 0 {
            check_dim("desired output", n_y, desired[start - 1].len())?;
            s0.rows_mut(n_s - n_y, n_y).copy_from_slice(&desired[start - 1]);
        }
        filter.reset_trajectory(s0)?;
        let mut sse = 0.0;
        for i in start..start + batch_len {
            let r = filter.step(&inputs[i], Some(&desired[i]))?;
            sse += r.e.map_or(0.0, |e| e.norm_squared());
        }
        report.batch_mse.push(sse / (batch_len * n_y) as f64);
        report.batch_starts.push(start);
        observe(epoch, filter)?;
    }
    Ok(report)
}
