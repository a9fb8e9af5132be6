use qproj::FeatureTensor;

/// LayerNorm over the feature axis of one vector:
/// (x − μ)/√(σ² + ε) ⊙ γ + β, with biased variance.
pub fn layer_norm(x: &[f64], gamma: &[f64], beta: Option<&[f64]>, eps: f64) -> Vec<f64> {
    let d = x.len() as f64;
    let mean = x.iter().sum::<f64>() / d;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
    let inv_std = 1.0 / (var + eps).sqrt();
    x.iter()
        .enumerate()
        .map(|(i, v)| {
            let xhat = (v - mean) * inv_std;
            xhat * gamma[i] + beta.map_or(0.0, |b| b[i])
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct NormCache {
    /// Normalized (pre-affine) values, kept for both dγ and dx.
    pub xhat: FeatureTensor,
    pub inv_std: Vec<f64>,
}

pub fn layer_norm_cached(
    x: &FeatureTensor,
    gamma: &[f64],
    eps: f64,
) -> (FeatureTensor, NormCache) {
    let (batch, seq, d) = x.shape();
    let mut out = FeatureTensor::zeros(batch, seq, d);
    let mut xhat = FeatureTensor::zeros(batch, seq, d);
    let mut inv_stds = Vec::with_capacity(x.rows());
    let dn = d as f64;
    for r in 0..x.rows() {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / dn;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / dn;
        let inv_std = 1.0 / (var + eps).sqrt();
        inv_stds.push(inv_std);
        let xhat_row = xhat.row_mut(r);
        for (i, v) in row.iter().enumerate() {
            xhat_row[i] = (v - mean) * inv_std;
        }
        let out_row = out.row_mut(r);
        for i in 0..d {
            out_row[i] = xhat_row[i] * gamma[i];
        }
    }
    (out, NormCache { xhat, inv_std: inv_stds })
}

/// Returns (dγ, dx).
pub fn layer_norm_backward(
    cache: &NormCache,
    gamma: &[f64],
    dy: &FeatureTensor,
) -> (Vec<f64>, FeatureTensor) {
    let (batch, seq, d) = dy.shape();
    let dn = d as f64;
    let mut dgamma = vec![0.0; d];
    let mut dx = FeatureTensor::zeros(batch, seq, d);
    for r in 0..dy.rows() {
        let dy_row = dy.row(r);
        let xhat_row = cache.xhat.row(r);
        let inv_std = cache.inv_std[r];
        let mut mean_dxhat = 0.0;
        let mut mean_dxhat_xhat = 0.0;
        for i in 0..d {
            dgamma[i] += dy_row[i] * xhat_row[i];
            let dxhat = dy_row[i] * gamma[i];
            mean_dxhat += dxhat;
            mean_dxhat_xhat += dxhat * xhat_row[i];
        }
        mean_dxhat /= dn;
        mean_dxhat_xhat /= dn;
        let dx_row = dx.row_mut(r);
        for i in 0..d {
            let dxhat = dy_row[i] * gamma[i];
            dx_row[i] = inv_std * (dxhat - mean_dxhat - xhat_row[i] * mean_dxhat_xhat);
        }
    }
    (dgamma, dx)
}
