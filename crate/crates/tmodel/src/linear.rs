use qproj::{FeatureTensor, ProjectorCache, ProjectorGrads, QuantumProjector};
use qsim::rng::Prng;

use crate::Result;

/// Dense affine map, weight stored row-major (out × in), bias optional.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub out_dim: usize,
    pub in_dim: usize,
    pub w: Vec<f64>,
    pub b: Option<Vec<f64>>,
}

impl Linear {
    pub fn init(out_dim: usize, in_dim: usize, bias: bool, rng: &mut Prng) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        Self {
            out_dim,
            in_dim,
            w: (0..out_dim * in_dim)
                .map(|_| rng.uniform(-bound, bound))
                .collect(),
            b: bias.then(|| vec![0.0; out_dim]),
        }
    }

    pub fn forward(&self, x: &FeatureTensor) -> FeatureTensor {
        let (batch, seq, d_in) = x.shape();
        debug_assert_eq!(d_in, self.in_dim);
        let mut out = FeatureTensor::zeros(batch, seq, self.out_dim);
        for r in 0..x.rows() {
            let row = x.row(r);
            let out_row = out.row_mut(r);
            for o in 0..self.out_dim {
                let w_row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
                let mut acc = self.b.as_ref().map_or(0.0, |b| b[o]);
                for (xi, wi) in row.iter().zip(w_row) {
                    acc += xi * wi;
                }
                out_row[o] = acc;
            }
        }
        out
    }

    pub fn backward(&self, input: &FeatureTensor, dy: &FeatureTensor) -> (LinearGrads, FeatureTensor) {
        let (batch, seq, _) = input.shape();
        let mut grads = LinearGrads {
            w: vec![0.0; self.w.len()],
            b: self.b.as_ref().map(|b| vec![0.0; b.len()]),
        };
        let mut dx = FeatureTensor::zeros(batch, seq, self.in_dim);
        for r in 0..input.rows() {
            let x_row = input.row(r);
            let dy_row = dy.row(r);
            let dx_row = dx.row_mut(r);
            for o in 0..self.out_dim {
                let g = dy_row[o];
                if let Some(db) = grads.b.as_mut() {
                    db[o] += g;
                }
                let w_row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
                let gw_row = &mut grads.w[o * self.in_dim..(o + 1) * self.in_dim];
                for i in 0..self.in_dim {
                    gw_row[i] += g * x_row[i];
                    dx_row[i] += g * w_row[i];
                }
            }
        }
        (grads, dx)
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.b.as_ref().map_or(0, |b| b.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrads {
    pub w: Vec<f64>,
    pub b: Option<Vec<f64>>,
}

/// A projection slot: classical matrix, one quantum module, or one quantum
/// module per attention head.
#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    Dense(Linear),
    Quantum(QuantumProjector),
    QuantumPerHead(Vec<QuantumProjector>),
}

#[derive(Debug, Clone)]
pub enum ProjCache {
    Dense { input: FeatureTensor },
    Quantum(ProjectorCache),
    PerHead(Vec<ProjectorCache>),
}

#[derive(Debug, Clone)]
pub enum ProjectionGrads {
    Dense(LinearGrads),
    Quantum(ProjectorGrads),
    PerHead(Vec<ProjectorGrads>),
}

impl Projection {
    pub fn d_out(&self) -> usize {
        match self {
            Projection::Dense(l) => l.out_dim,
            Projection::Quantum(p) => p.d_out(),
            Projection::QuantumPerHead(heads) => heads.iter().map(|p| p.d_out()).sum(),
        }
    }

    pub fn forward(&self, x: &FeatureTensor) -> Result<FeatureTensor> {
        Ok(match self {
            Projection::Dense(l) => l.forward(x),
            Projection::Quantum(p) => p.forward(x)?,
            Projection::QuantumPerHead(heads) => {
                let (batch, seq, _) = x.shape();
                let mut out = FeatureTensor::zeros(batch, seq, self.d_out());
                let mut offset = 0;
                for p in heads {
                    let head_out = p.forward(x)?;
                    for r in 0..out.rows() {
                        out.row_mut(r)[offset..offset + p.d_out()]
                            .copy_from_slice(head_out.row(r));
                    }
                    offset += p.d_out();
                }
                out
            }
        })
    }

    pub fn forward_cached(&self, x: &FeatureTensor) -> Result<(FeatureTensor, ProjCache)> {
        Ok(match self {
            Projection::Dense(l) => (l.forward(x), ProjCache::Dense { input: x.clone() }),
            Projection::Quantum(p) => {
                let (out, cache) = p.forward_cached(x)?;
                (out, ProjCache::Quantum(cache))
            }
            Projection::QuantumPerHead(heads) => {
                let (batch, seq, _) = x.shape();
                let mut out = FeatureTensor::zeros(batch, seq, self.d_out());
                let mut caches = Vec::with_capacity(heads.len());
                let mut offset = 0;
                for p in heads {
                    let (head_out, cache) = p.forward_cached(x)?;
                    for r in 0..out.rows() {
                        out.row_mut(r)[offset..offset + p.d_out()]
                            .copy_from_slice(head_out.row(r));
                    }
                    caches.push(cache);
                    offset += p.d_out();
                }
                (out, ProjCache::PerHead(caches))
            }
        })
    }

    pub fn backward(
        &self,
        cache: &ProjCache,
        dy: &FeatureTensor,
    ) -> Result<(ProjectionGrads, FeatureTensor)> {
        Ok(match (self, cache) {
            (Projection::Dense(l), ProjCache::Dense { input }) => {
                let (grads, dx) = l.backward(input, dy);
                (ProjectionGrads::Dense(grads), dx)
            }
            (Projection::Quantum(p), ProjCache::Quantum(c)) => {
                let (grads, dx) = p.backward(c, dy)?;
                (ProjectionGrads::Quantum(grads), dx)
            }
            (Projection::QuantumPerHead(heads), ProjCache::PerHead(caches)) => {
                let (batch, seq, _) = dy.shape();
                let mut grads = Vec::with_capacity(heads.len());
                let mut dx_total: Option<FeatureTensor> = None;
                let mut offset = 0;
                for (p, c) in heads.iter().zip(caches) {
                    let mut dy_head = FeatureTensor::zeros(batch, seq, p.d_out());
                    for r in 0..dy.rows() {
                        dy_head
                            .row_mut(r)
                            .copy_from_slice(&dy.row(r)[offset..offset + p.d_out()]);
                    }
                    let (g, dx) = p.backward(c, &dy_head)?;
                    grads.push(g);
                    match dx_total.as_mut() {
                        None => dx_total = Some(dx),
                        Some(total) => {
                            for (t, v) in total.data_mut().iter_mut().zip(dx.data()) {
                                *t += v;
                            }
                        }
                    }
                    offset += p.d_out();
                }
                (ProjectionGrads::PerHead(grads), dx_total.expect("at least one head"))
            }
            _ => unreachable!("cache kind always matches projection kind"),
        })
    }

    pub fn param_count(&self) -> usize {
        match self {
            Projection::Dense(l) => l.param_count(),
            Projection::Quantum(p) => p.param_count(),
            Projection::QuantumPerHead(heads) => heads.iter().map(|p| p.param_count()).sum(),
        }
    }

    /// Visits parameters with Appendix-style names under `prefix`
    /// (e.g. `layers.0.self_attn.q_proj`).
    pub fn visit_params(&self, prefix: &str, f: &mut impl FnMut(&str, &[f64])) {
        match self {
            Projection::Dense(l) => {
                f(&format!("{prefix}.weight"), &l.w);
                if let Some(b) = &l.b {
                    f(&format!("{prefix}.bias"), b);
                }
            }
            Projection::Quantum(p) => visit_projector(p, prefix, f),
            Projection::QuantumPerHead(heads) => {
                for (h, p) in heads.iter().enumerate() {
                    visit_projector(p, &format!("{prefix}.head{h}"), f);
                }
            }
        }
    }

    pub fn visit_params_mut(&mut self, prefix: &str, f: &mut impl FnMut(&str, &mut [f64])) {
        match self {
            Projection::Dense(l) => {
                f(&format!("{prefix}.weight"), &mut l.w);
                if let Some(b) = &mut l.b {
                    f(&format!("{prefix}.bias"), b);
                }
            }
            Projection::Quantum(p) => visit_projector_mut(p, prefix, f),
            Projection::QuantumPerHead(heads) => {
                for (h, p) in heads.iter_mut().enumerate() {
                    visit_projector_mut(p, &format!("{prefix}.head{h}"), f);
                }
            }
        }
    }

    pub fn visit_grads<'a>(
        grads: &'a ProjectionGrads,
        prefix: &str,
        f: &mut impl FnMut(&str, &'a [f64]),
    ) {
        match grads {
            ProjectionGrads::Dense(g) => {
                f(&format!("{prefix}.weight"), &g.w);
                if let Some(b) = &g.b {
                    f(&format!("{prefix}.bias"), b);
                }
            }
            ProjectionGrads::Quantum(g) => visit_projector_grads(g, prefix, f),
            ProjectionGrads::PerHead(heads) => {
                for (h, g) in heads.iter().enumerate() {
                    visit_projector_grads(g, &format!("{prefix}.head{h}"), f);
                }
            }
        }
    }
}

fn visit_projector(p: &QuantumProjector, prefix: &str, f: &mut impl FnMut(&str, &[f64])) {
    f(&format!("{prefix}.reduce_proj.weight"), p.w_down());
    f(&format!("{prefix}.reduce_proj.bias"), p.b_down());
    f(&format!("{prefix}.mq_layers.0.weight"), p.theta());
    f(&format!("{prefix}.dense_expand.weight"), p.w_up());
    f(&format!("{prefix}.dense_expand.bias"), p.b_up());
}

fn visit_projector_mut(
    p: &mut QuantumProjector,
    prefix: &str,
    f: &mut impl FnMut(&str, &mut [f64]),
) {
    f(&format!("{prefix}.reduce_proj.weight"), p.w_down_mut());
    f(&format!("{prefix}.reduce_proj.bias"), p.b_down_mut());
    f(&format!("{prefix}.mq_layers.0.weight"), p.theta_mut());
    f(&format!("{prefix}.dense_expand.weight"), p.w_up_mut());
    f(&format!("{prefix}.dense_expand.bias"), p.b_up_mut());
}

fn visit_projector_grads<'a>(
    g: &'a ProjectorGrads,
    prefix: &str,
    f: &mut impl FnMut(&str, &'a [f64]),
) {
    f(&format!("{prefix}.reduce_proj.weight"), &g.w_down);
    f(&format!("{prefix}.reduce_proj.bias"), &g.b_down);
    f(&format!("{prefix}.mq_layers.0.weight"), &g.theta);
    f(&format!("{prefix}.dense_expand.weight"), &g.w_up);
    f(&format!("{prefix}.dense_expand.bias"), &g.b_up);
}
