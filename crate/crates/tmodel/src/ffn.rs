use qproj::math::{gelu, gelu_deriv};
use qproj::FeatureTensor;

use crate::linear::{ProjCache, Projection, ProjectionGrads};
use crate::Result;

/// Feed-forward body. The gated form computes down(GELU(gate(X)) ⊙ up(X));
/// the plain form is the two-layer GELU network w2(GELU(w1(X))).
#[derive(Debug, Clone, PartialEq)]
pub enum FfnWeights {
    Gated {
        gate: Projection,
        up: Projection,
        down: Projection,
    },
    Plain {
        w1: Projection,
        w2: Projection,
    },
}

#[derive(Debug, Clone)]
pub enum FfnCache {
    Gated {
        gate_out: FeatureTensor,
        up_out: FeatureTensor,
        hidden: FeatureTensor,
        gate_cache: ProjCache,
        up_cache: ProjCache,
        down_cache: ProjCache,
    },
    Plain {
        pre: FeatureTensor,
        hidden: FeatureTensor,
        w1_cache: ProjCache,
        w2_cache: ProjCache,
    },
}

#[derive(Debug, Clone)]
pub enum FfnGrads {
    Gated {
        gate: ProjectionGrads,
        up: ProjectionGrads,
        down: ProjectionGrads,
    },
    Plain {
        w1: ProjectionGrads,
        w2: ProjectionGrads,
    },
}

impl FfnWeights {
    pub fn forward(&self, x: &FeatureTensor) -> Result<FeatureTensor> {
        let (out, _) = self.forward_cached(x)?;
        Ok(out)
    }

    pub fn forward_cached(&self, x: &FeatureTensor) -> Result<(FeatureTensor, FfnCache)> {
        match self {
            FfnWeights::Gated { gate, up, down } => {
                let (gate_out, gate_cache) = gate.forward_cached(x)?;
                let (up_out, up_cache) = up.forward_cached(x)?;
                let (batch, seq, inter) = gate_out.shape();
                let mut hidden = FeatureTensor::zeros(batch, seq, inter);
                for i in 0..hidden.data().len() {
                    hidden.data_mut()[i] = gelu(gate_out.data()[i]) * up_out.data()[i];
                }
                let (out, down_cache) = down.forward_cached(&hidden)?;
                Ok((
                    out,
                    FfnCache::Gated {
                        gate_out,
                        up_out,
                        hidden,
                        gate_cache,
                        up_cache,
                        down_cache,
                    },
                ))
            }
            FfnWeights::Plain { w1, w2 } => {
                let (pre, w1_cache) = w1.forward_cached(x)?;
                let mut hidden = pre.clone();
                for v in hidden.data_mut() {
                    *v = gelu(*v);
                }
                let (out, w2_cache) = w2.forward_cached(&hidden)?;
                Ok((
                    out,
                    FfnCache::Plain {
                        pre,
                        hidden,
                        w1_cache,
                        w2_cache,
                    },
                ))
            }
        }
    }

    pub fn backward(
        &self,
        cache: &FfnCache,
        dy: &FeatureTensor,
    ) -> Result<(FfnGrads, FeatureTensor)> {
        match (self, cache) {
            (
                FfnWeights::Gated { gate, up, down },
                FfnCache::Gated {
                    gate_out,
                    up_out,
                    hidden: _,
                    gate_cache,
                    up_cache,
                    down_cache,
                },
            ) => {
                let (down_grads, dhidden) = down.backward(down_cache, dy)?;
                let (batch, seq, inter) = gate_out.shape();
                let mut dgate_out = FeatureTensor::zeros(batch, seq, inter);
                let mut dup_out = FeatureTensor::zeros(batch, seq, inter);
                for i in 0..dhidden.data().len() {
                    let g = gate_out.data()[i];
                    let dh = dhidden.data()[i];
                    dgate_out.data_mut()[i] = dh * up_out.data()[i] * gelu_deriv(g);
                    dup_out.data_mut()[i] = dh * gelu(g);
                }
                let (gate_grads, dx_gate) = gate.backward(gate_cache, &dgate_out)?;
                let (up_grads, dx_up) = up.backward(up_cache, &dup_out)?;
                let mut dx = dx_gate;
                for (a, b) in dx.data_mut().iter_mut().zip(dx_up.data()) {
                    *a += b;
                }
                Ok((
                    FfnGrads::Gated {
                        gate: gate_grads,
                        up: up_grads,
                        down: down_grads,
                    },
                    dx,
                ))
            }
            (
                FfnWeights::Plain { w1, w2 },
                FfnCache::Plain {
                    pre,
                    hidden: _,
                    w1_cache,
                    w2_cache,
                },
            ) => {
                let (w2_grads, dhidden) = w2.backward(w2_cache, dy)?;
                let mut dpre = dhidden;
                for (d, p) in dpre.data_mut().iter_mut().zip(pre.data()) {
                    *d *= gelu_deriv(*p);
                }
                let (w1_grads, dx) = w1.backward(w1_cache, &dpre)?;
                Ok((
                    FfnGrads::Plain {
                        w1: w1_grads,
                        w2: w2_grads,
                    },
                    dx,
                ))
            }
            _ => unreachable!("cache kind always matches ffn kind"),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            FfnWeights::Gated { gate, up, down } => {
                gate.param_count() + up.param_count() + down.param_count()
            }
            FfnWeights::Plain { w1, w2 } => w1.param_count() + w2.param_count(),
        }
    }
}
