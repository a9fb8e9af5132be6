use rayon::prelude::*;

use qsim::rng::Prng;

use crate::ansatz::{AnsatzDescriptor, AnsatzVariant};
use crate::circuit::{adjoint_gradients, full_circuit, run_circuit};
use crate::encode::encode_angles;
use crate::math::{gelu, gelu_deriv, sigmoid, sigmoid_deriv_from_output};
use crate::tensor::FeatureTensor;
use crate::{QprojError, Result};

/// How measured expectations are projected back to the output width.
///
/// `Full` applies an n_q×d_out matrix; `Scalar` averages the qubit
/// expectations to one value and expands it with a 1×d_out weight (the
/// parameter-accounting default).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpandMode {
    Full,
    Scalar,
}

impl ExpandMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Some(Self::Full),
            "scalar" => Some(Self::Scalar),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::Scalar => "scalar",
        }
    }
}

/// Projector hyperparameters as they appear in the `[projector]` config
/// section.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectorConfig {
    pub n_qubits: usize,
    pub n_layers: usize,
    pub variant: AnsatzVariant,
    pub expand_mode: ExpandMode,
}

impl Default for ProjectorConfig {
    fn default() -> Self {
        Self {
            n_qubits: 10,
            n_layers: 2,
            variant: AnsatzVariant::A8M,
            expand_mode: ExpandMode::Scalar,
        }
    }
}

/// Row execution strategy; `Auto` picks parallel for large batches. The
/// explicit variants exist so tests can assert parallel == sequential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowExecution {
    Auto,
    Sequential,
    Parallel,
}

const PARALLEL_ROW_THRESHOLD: usize = 64;

/// The three-stage hybrid module: compression weights, variational
/// circuit, expansion weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumProjector {
    d_in: usize,
    d_out: usize,
    /// (2n_q × d_in), row-major out×in.
    w_down: Vec<f64>,
    b_down: Vec<f64>,
    ansatz: AnsatzDescriptor,
    theta: Vec<f64>,
    /// Full: (d_out × n_q) row-major; Scalar: (d_out).
    w_up: Vec<f64>,
    b_up: Vec<f64>,
    expand_mode: ExpandMode,
}

impl QuantumProjector {
    /// Fresh projector with uniform(±1/√fan_in) affine weights, zero
    /// biases, and θ ~ uniform(0, 2π).
    pub fn init(d_in: usize, d_out: usize, cfg: &ProjectorConfig, rng: &mut Prng) -> Result<Self> {
        let ansatz = AnsatzDescriptor::new(cfg.variant, cfg.n_qubits, cfg.n_layers)?;
        let n_q = cfg.n_qubits;
        let down_bound = 1.0 / (d_in as f64).sqrt();
        let w_down = (0..2 * n_q * d_in)
            .map(|_| rng.uniform(-down_bound, down_bound))
            .collect();
        let theta = (0..ansatz.trainable_param_count())
            .map(|_| rng.uniform(0.0, 2.0 * std::f64::consts::PI))
            .collect();
        let up_fan_in = match cfg.expand_mode {
            ExpandMode::Full => n_q,
            ExpandMode::Scalar => 1,
        };
        let up_bound = 1.0 / (up_fan_in as f64).sqrt();
        let w_up_len = match cfg.expand_mode {
            ExpandMode::Full => d_out * n_q,
            ExpandMode::Scalar => d_out,
        };
        let w_up = (0..w_up_len).map(|_| rng.uniform(-up_bound, up_bound)).collect();
        Ok(Self {
            d_in,
            d_out,
            w_down,
            b_down: vec![0.0; 2 * n_q],
            ansatz,
            theta,
            w_up,
            b_up: vec![0.0; d_out],
            expand_mode: cfg.expand_mode,
        })
    }

    /// Assembles a projector from explicit tensors (tests, checkpoints).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        d_in: usize,
        d_out: usize,
        ansatz: AnsatzDescriptor,
        w_down: Vec<f64>,
        b_down: Vec<f64>,
        theta: Vec<f64>,
        w_up: Vec<f64>,
        b_up: Vec<f64>,
        expand_mode: ExpandMode,
    ) -> Result<Self> {
        let n_q = ansatz.n_qubits();
        let expect = |cond: bool, what: &'static str, expected: String, got: String| {
            if cond {
                Ok(())
            } else {
                Err(QprojError::ShapeMismatch {
                    what,
                    expected,
                    got,
                })
            }
        };
        expect(
            w_down.len() == 2 * n_q * d_in,
            "w_down",
            format!("{}", 2 * n_q * d_in),
            format!("{}", w_down.len()),
        )?;
        expect(
            b_down.len() == 2 * n_q,
            "b_down",
            format!("{}", 2 * n_q),
            format!("{}", b_down.len()),
        )?;
        if theta.len() != ansatz.trainable_param_count() {
            return Err(QprojError::ParamCountMismatch {
                expected: ansatz.trainable_param_count(),
                got: theta.len(),
            });
        }
        let w_up_expected = match expand_mode {
            ExpandMode::Full => d_out * n_q,
            ExpandMode::Scalar => d_out,
        };
        expect(
            w_up.len() == w_up_expected,
            "w_up",
            format!("{w_up_expected}"),
            format!("{}", w_up.len()),
        )?;
        expect(
            b_up.len() == d_out,
            "b_up",
            format!("{d_out}"),
            format!("{}", b_up.len()),
        )?;
        Ok(Self {
            d_in,
            d_out,
            w_down,
            b_down,
            ansatz,
            theta,
            w_up,
            b_up,
            expand_mode,
        })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn n_qubits(&self) -> usize {
        self.ansatz.n_qubits()
    }

    pub fn ansatz(&self) -> &AnsatzDescriptor {
        &self.ansatz
    }

    pub fn expand_mode(&self) -> ExpandMode {
        self.expand_mode
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn w_down(&self) -> &[f64] {
        &self.w_down
    }

    pub fn w_down_mut(&mut self) -> &mut [f64] {
        &mut self.w_down
    }

    pub fn b_down(&self) -> &[f64] {
        &self.b_down
    }

    pub fn b_down_mut(&mut self) -> &mut [f64] {
        &mut self.b_down
    }

    pub fn w_up(&self) -> &[f64] {
        &self.w_up
    }

    pub fn w_up_mut(&mut self) -> &mut [f64] {
        &mut self.w_up
    }

    pub fn b_up(&self) -> &[f64] {
        &self.b_up
    }

    pub fn b_up_mut(&mut self) -> &mut [f64] {
        &mut self.b_up
    }

    /// Shapes of the module's trainable tensors in accounting order:
    /// (reduce weight, reduce bias, quantum params, expand weight, expand bias).
    pub fn tensor_shapes(&self) -> [(String, Vec<usize>); 5] {
        let n_q = self.n_qubits();
        let w_up_shape = match self.expand_mode {
            ExpandMode::Full => vec![self.d_out, n_q],
            ExpandMode::Scalar => vec![self.d_out, 1],
        };
        [
            ("reduce_proj.weight".into(), vec![2 * n_q, self.d_in]),
            ("reduce_proj.bias".into(), vec![2 * n_q]),
            ("mq_layers.0.weight".into(), vec![self.theta.len()]),
            ("dense_expand.weight".into(), w_up_shape),
            ("dense_expand.bias".into(), vec![self.d_out]),
        ]
    }

    pub fn param_count(&self) -> usize {
        self.w_down.len() + self.b_down.len() + self.theta.len() + self.w_up.len() + self.b_up.len()
    }

    pub fn forward(&self, x: &FeatureTensor) -> Result<FeatureTensor> {
        self.forward_with_mode(x, RowExecution::Auto)
    }

    pub fn forward_with_mode(&self, x: &FeatureTensor, mode: RowExecution) -> Result<FeatureTensor> {
        let (out, _) = self.forward_impl(x, mode, false)?;
        Ok(out)
    }

    /// Forward pass that retains everything backward needs.
    pub fn forward_cached(&self, x: &FeatureTensor) -> Result<(FeatureTensor, ProjectorCache)> {
        let (out, cache) = self.forward_impl(x, RowExecution::Auto, true)?;
        Ok((out, cache.expect("cache requested")))
    }

    fn forward_impl(
        &self,
        x: &FeatureTensor,
        mode: RowExecution,
        keep_cache: bool,
    ) -> Result<(FeatureTensor, Option<ProjectorCache>)> {
        let (batch, seq, d) = x.shape();
        if d != self.d_in {
            return Err(QprojError::ShapeMismatch {
                what: "projector input width",
                expected: format!("{}", self.d_in),
                got: format!("{d}"),
            });
        }
        let compressed = compress(x, &self.w_down, &self.b_down)?;
        let measured = self.run_rows(&compressed, mode)?;
        let (out, pre) = self.expand_with_pre(&measured)?;
        let cache = keep_cache.then(|| ProjectorCache {
            input: x.clone(),
            compressed,
            measured,
            pre_expand: pre,
        });
        let _ = (batch, seq);
        Ok((out, cache))
    }

    /// Executes the per-row circuits of a compressed [B, L, 2n_q] tensor.
    fn run_rows(&self, compressed: &FeatureTensor, mode: RowExecution) -> Result<FeatureTensor> {
        let (batch, seq, _) = compressed.shape();
        let rows = compressed.rows();
        let n_q = self.n_qubits();

        let run_one = |r: usize| -> Result<Vec<f64>> {
            let (enc_theta, enc_phi) = encode_angles(compressed.row(r));
            let circuit = full_circuit(&enc_theta, &enc_phi, &self.ansatz, &self.theta)?;
            let state = run_circuit(&circuit, n_q)?;
            Ok(state.measure_all_z())
        };

        let parallel = match mode {
            RowExecution::Sequential => false,
            RowExecution::Parallel => true,
            RowExecution::Auto => {
                rows >= PARALLEL_ROW_THRESHOLD && rayon::current_num_threads() > 1
            }
        };

        let per_row: Vec<Vec<f64>> = if parallel {
            (0..rows)
                .into_par_iter()
                .map(run_one)
                .collect::<Result<_>>()?
        } else {
            (0..rows).map(run_one).collect::<Result<_>>()?
        };

        let mut measured = FeatureTensor::zeros(batch, seq, n_q);
        for (r, row) in per_row.iter().enumerate() {
            measured.row_mut(r).copy_from_slice(row);
        }
        Ok(measured)
    }

    fn expand_with_pre(&self, measured: &FeatureTensor) -> Result<(FeatureTensor, FeatureTensor)> {
        expand_with_pre(
            measured,
            &self.w_up,
            &self.b_up,
            self.expand_mode,
            self.d_out,
        )
    }

    /// Adjoint backward pass. Returns parameter gradients plus the gradient
    /// with respect to the module input. Row contributions accumulate in
    /// fixed row order, so results are independent of thread count.
    pub fn backward(
        &self,
        cache: &ProjectorCache,
        upstream: &FeatureTensor,
    ) -> Result<(ProjectorGrads, FeatureTensor)> {
        let (batch, seq, d_out) = upstream.shape();
        let n_q = self.n_qubits();
        if d_out != self.d_out || (batch, seq) != (cache.input.batch(), cache.input.seq()) {
            return Err(QprojError::ShapeMismatch {
                what: "projector upstream gradient",
                expected: format!("[{}, {}, {}]", cache.input.batch(), cache.input.seq(), self.d_out),
                got: format!("[{batch}, {seq}, {d_out}]"),
            });
        }

        let rows = upstream.rows();
        let mut grads = ProjectorGrads::zeros_like(self);
        let mut d_input = FeatureTensor::zeros(batch, seq, self.d_in);

        // Stage 1 (expand) and stage 3 (compress) are cheap dense math; the
        // per-row circuit adjoints dominate and parallelize.
        let lambda_rows: Vec<Vec<f64>> = (0..rows)
            .map(|r| {
                let dpre: Vec<f64> = upstream
                    .row(r)
                    .iter()
                    .zip(cache.pre_expand.row(r))
                    .map(|(u, p)| u * gelu_deriv(*p))
                    .collect();
                // accumulate expand-weight grads while we're here
                match self.expand_mode {
                    ExpandMode::Full => {
                        let m = cache.measured.row(r);
                        for o in 0..self.d_out {
                            grads.b_up[o] += dpre[o];
                            for q in 0..n_q {
                                grads.w_up[o * n_q + q] += dpre[o] * m[q];
                            }
                        }
                        let mut dm = vec![0.0; n_q];
                        for q in 0..n_q {
                            for o in 0..self.d_out {
                                dm[q] += self.w_up[o * n_q + q] * dpre[o];
                            }
                        }
                        dm
                    }
                    ExpandMode::Scalar => {
                        let m = cache.measured.row(r);
                        let s = m.iter().sum::<f64>() / n_q as f64;
                        let mut ds = 0.0;
                        for o in 0..self.d_out {
                            grads.b_up[o] += dpre[o];
                            grads.w_up[o] += dpre[o] * s;
                            ds += self.w_up[o] * dpre[o];
                        }
                        vec![ds / n_q as f64; n_q]
                    }
                }
            })
            .collect();

        let adjoint_one = |r: usize| -> Result<(Vec<f64>, Vec<f64>)> {
            let y = cache.compressed.row(r);
            let (enc_theta, enc_phi) = encode_angles(y);
            let circuit = full_circuit(&enc_theta, &enc_phi, &self.ansatz, &self.theta)?;
            let cg = adjoint_gradients(&circuit, n_q, &lambda_rows[r], self.theta.len())?;

            // chain through θ_j = π·σ(y_j), φ_j = π·σ(y_{n_q+j})
            let mut d_compressed = vec![0.0; 2 * n_q];
            for j in 0..n_q {
                let s_theta = sigmoid(y[j]);
                let s_phi = sigmoid(y[n_q + j]);
                d_compressed[j] = cg.enc_theta[j]
                    * std::f64::consts::PI
                    * sigmoid_deriv_from_output(s_theta);
                d_compressed[n_q + j] =
                    cg.enc_phi[j] * std::f64::consts::PI * sigmoid_deriv_from_output(s_phi);
            }
            Ok((d_compressed, cg.ansatz))
        };

        let parallel = rows >= PARALLEL_ROW_THRESHOLD && rayon::current_num_threads() > 1;
        let per_row: Vec<(Vec<f64>, Vec<f64>)> = if parallel {
            (0..rows)
                .into_par_iter()
                .map(adjoint_one)
                .collect::<Result<_>>()?
        } else {
            (0..rows).map(adjoint_one).collect::<Result<_>>()?
        };

        for (r, (d_compressed, d_theta)) in per_row.iter().enumerate() {
            for (g, d) in grads.theta.iter_mut().zip(d_theta) {
                *g += d;
            }
            // back through tanh(W_down·x + b_down)
            let y = cache.compressed.row(r);
            let x_row = cache.input.row(r);
            let d_in_row = d_input.row_mut(r);
            for o in 0..2 * n_q {
                let d_pre = d_compressed[o] * (1.0 - y[o] * y[o]);
                grads.b_down[o] += d_pre;
                let w_row = &self.w_down[o * self.d_in..(o + 1) * self.d_in];
                for i in 0..self.d_in {
                    grads.w_down[o * self.d_in + i] += d_pre * x_row[i];
                    d_in_row[i] += w_row[i] * d_pre;
                }
            }
        }

        Ok((grads, d_input))
    }
}

/// Forward-pass byproducts retained for the adjoint backward walk.
#[derive(Debug, Clone)]
pub struct ProjectorCache {
    pub input: FeatureTensor,
    pub compressed: FeatureTensor,
    pub measured: FeatureTensor,
    pub pre_expand: FeatureTensor,
}

/// Gradients of every trainable tensor in the module.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorGrads {
    pub w_down: Vec<f64>,
    pub b_down: Vec<f64>,
    pub theta: Vec<f64>,
    pub w_up: Vec<f64>,
    pub b_up: Vec<f64>,
}

impl ProjectorGrads {
    pub fn zeros_like(p: &QuantumProjector) -> Self {
        Self {
            w_down: vec![0.0; p.w_down.len()],
            b_down: vec![0.0; p.b_down.len()],
            theta: vec![0.0; p.theta.len()],
            w_up: vec![0.0; p.w_up.len()],
            b_up: vec![0.0; p.b_up.len()],
        }
    }
}

/// Adaptive feature compression: tanh(X·W_downᵀ + b_down). Every output
/// lands strictly inside (−1, 1).
pub fn compress(x: &FeatureTensor, w_down: &[f64], b_down: &[f64]) -> Result<FeatureTensor> {
    let (batch, seq, d_in) = x.shape();
    let d_out = b_down.len();
    if w_down.len() != d_out * d_in {
        return Err(QprojError::ShapeMismatch {
            what: "compress weights",
            expected: format!("{}×{}", d_out, d_in),
            got: format!("{} values", w_down.len()),
        });
    }
    let mut out = FeatureTensor::zeros(batch, seq, d_out);
    for r in 0..x.rows() {
        let row = x.row(r);
        let out_row = out.row_mut(r);
        for o in 0..d_out {
            let mut acc = b_down[o];
            let w_row = &w_down[o * d_in..(o + 1) * d_in];
            for (xi, wi) in row.iter().zip(w_row) {
                acc += xi * wi;
            }
            out_row[o] = acc.tanh();
        }
    }
    Ok(out)
}

/// Adaptive feature expansion: GELU(M·W_up + b_up), or the scalar form
/// GELU(mean(M)·w_up + b_up).
pub fn expand(
    m: &FeatureTensor,
    w_up: &[f64],
    b_up: &[f64],
    mode: ExpandMode,
) -> Result<FeatureTensor> {
    let d_out = b_up.len();
    let (out, _) = expand_with_pre(m, w_up, b_up, mode, d_out)?;
    Ok(out)
}

fn expand_with_pre(
    m: &FeatureTensor,
    w_up: &[f64],
    b_up: &[f64],
    mode: ExpandMode,
    d_out: usize,
) -> Result<(FeatureTensor, FeatureTensor)> {
    let (batch, seq, n_q) = m.shape();
    let expected_w = match mode {
        ExpandMode::Full => d_out * n_q,
        ExpandMode::Scalar => d_out,
    };
    if w_up.len() != expected_w || b_up.len() != d_out {
        return Err(QprojError::ShapeMismatch {
            what: "expand weights",
            expected: format!("w_up {expected_w}, b_up {d_out}"),
            got: format!("w_up {}, b_up {}", w_up.len(), b_up.len()),
        });
    }
    let mut pre = FeatureTensor::zeros(batch, seq, d_out);
    let mut out = FeatureTensor::zeros(batch, seq, d_out);
    for r in 0..m.rows() {
        let m_row = m.row(r);
        let pre_row = pre.row_mut(r);
        match mode {
            ExpandMode::Full => {
                for o in 0..d_out {
                    let mut acc = b_up[o];
                    for q in 0..n_q {
                        acc += m_row[q] * w_up[o * n_q + q];
                    }
                    pre_row[o] = acc;
                }
            }
            ExpandMode::Scalar => {
                let s = m_row.iter().sum::<f64>() / n_q as f64;
                for o in 0..d_out {
                    pre_row[o] = s * w_up[o] + b_up[o];
                }
            }
        }
    }
    for r in 0..m.rows() {
        for (o_val, p_val) in out.row_mut(r).iter_mut().zip(pre.row(r)) {
            *o_val = gelu(*p_val);
        }
    }
    Ok((out, pre))
}
