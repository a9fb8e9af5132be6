use crate::{QprojError, Result, FD_DELTA_MAX, FD_DELTA_MIN};

/// Central finite differences over a scalar loss: component j is
/// (L(θ_j+δ) − L(θ_j−δ)) / 2δ. Performs exactly 2·|θ| loss evaluations.
pub fn quantum_grad_fd(
    mut loss_fn: impl FnMut(&[f64]) -> f64,
    theta: &[f64],
    delta: f64,
) -> Result<Vec<f64>> {
    if !(FD_DELTA_MIN..=FD_DELTA_MAX).contains(&delta) {
        return Err(QprojError::DeltaOutOfRange {
            delta,
            min: FD_DELTA_MIN,
            max: FD_DELTA_MAX,
        });
    }
    let mut probe = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for j in 0..theta.len() {
        probe[j] = theta[j] + delta;
        let plus = loss_fn(&probe);
        probe[j] = theta[j] - delta;
        let minus = loss_fn(&probe);
        probe[j] = theta[j];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(QprojError::NonFiniteLoss { index: j });
        }
        grad.push((plus - minus) / (2.0 * delta));
    }
    Ok(grad)
}
