use qproj::FeatureTensor;

use crate::{Result, TrainError};

/// Mean negative log-likelihood of the targets under softmax(logits):
/// −(1/N)·Σ log p̂(target), averaged over unmasked token positions.
/// Positions whose target equals `ignore_index` contribute nothing.
pub fn cross_entropy(
    logits: &FeatureTensor,
    targets: &[u32],
    ignore_index: Option<u32>,
) -> Result<f64> {
    let (loss, _) = ce_impl(logits, targets, ignore_index, false)?;
    Ok(loss)
}

/// Loss plus d(loss)/d(logits): (softmax − onehot)/N on unmasked positions.
pub fn cross_entropy_with_grad(
    logits: &FeatureTensor,
    targets: &[u32],
    ignore_index: Option<u32>,
) -> Result<(f64, FeatureTensor)> {
    let (loss, grad) = ce_impl(logits, targets, ignore_index, true)?;
    Ok((loss, grad.expect("grad requested")))
}

fn ce_impl(
    logits: &FeatureTensor,
    targets: &[u32],
    ignore_index: Option<u32>,
    want_grad: bool,
) -> Result<(f64, Option<FeatureTensor>)> {
    let (batch, seq, vocab) = logits.shape();
    if targets.len() != batch * seq {
        return Err(TrainError::InvalidConfig(format!(
            "targets length {} does not match {batch}×{seq}",
            targets.len()
        )));
    }

    let active: Vec<usize> = (0..targets.len())
        .filter(|&r| Some(targets[r]) != ignore_index)
        .collect();
    if active.is_empty() {
        return Err(TrainError::AllPositionsMasked);
    }
    for &r in &active {
        if targets[r] as usize >= vocab {
            return Err(TrainError::TargetOutOfRange {
                target: targets[r],
                vocab,
            });
        }
    }

    let n = active.len() as f64;
    let mut total = 0.0;
    let mut grad = want_grad.then(|| FeatureTensor::zeros(batch, seq, vocab));

    for &r in &active {
        let row = logits.row(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        for v in row {
            denom += (v - max).exp();
        }
        let log_denom = denom.ln() + max;
        let target = targets[r] as usize;
        total += log_denom - row[target];

        if let Some(g) = grad.as_mut() {
            let g_row = g.row_mut(r);
            for (v, (gv, lv)) in g_row.iter_mut().zip(row).enumerate() {
                let p = (lv - log_denom).exp();
                *gv = (p - if v == target { 1.0 } else { 0.0 }) / n;
            }
        }
    }

    Ok((total / n, grad))
}
