//! Minimal feedforward-network engine with analytic reverse-mode gradients.
//!
//! Hidden layers compute `sigma(w a + b)`; the output layer is affine with no
//! bias by default (a flag restores it), optionally followed by an output
//! activation. That output activation is how the LCP network enforces
//! nonnegativity structurally. All training goes through the L-BFGS optimizer
//! in [`lbfgs`].

pub mod lbfgs;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FricdynError, Result};
use lbfgs::{minimize, LbfgsOptions};

/// Pointwise nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Mish,
    Relu,
    /// `g(a) = max(0, a + c1) + c2`; shifts the ReLU corner so training can
    /// escape the flat negative side faster.
    ModifiedRelu { c1: f64, c2: f64 },
}

fn softplus(a: f64) -> f64 {
    if a > 20.0 {
        a
    } else if a < -20.0 {
        a.exp()
    } else {
        a.exp().ln_1p()
    }
}

impl Activation {
    pub fn value(&self, a: f64) -> f64 {
        match *self {
            Activation::Tanh => a.tanh(),
            Activation::Mish => a * softplus(a).tanh(),
            Activation::Relu => a.max(0.0),
            Activation::ModifiedRelu { c1, c2 } => (a + c1).max(0.0) + c2,
        }
    }

    /// Derivative; the ReLU-family kink uses the subgradient 0.
    pub fn derivative(&self, a: f64) -> f64 {
        match *self {
            Activation::Tanh => {
                let t = a.tanh();
                1.0 - t * t
            }
            Activation::Mish => {
                let t = softplus(a).tanh();
                let sig = 1.0 / (1.0 + (-a).exp());
                t + a * (1.0 - t * t) * sig
            }
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::ModifiedRelu { c1, .. } => {
                if a + c1 > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Evaluate one activation at a scalar.
pub fn activate(kind: Activation, a: f64) -> f64 {
    kind.value(a)
}

/// Value-semantic feedforward network.
#[derive(Debug, Clone, PartialEq)]
pub struct Fnn {
    widths: Vec<usize>,
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
    hidden_activation: Activation,
    output_activation: Option<Activation>,
    output_bias: bool,
}

/// Intermediate quantities of one forward pass, consumed by backprop.
pub struct ForwardTrace {
    activations: Vec<DVector<f64>>,
    pre: Vec<DVector<f64>>,
}

/// Parameter-shaped gradient.
#[derive(Debug, Clone)]
pub struct FnnGrad {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

/// Outcome of a training run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainReport {
    pub final_loss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
}

impl Fnn {
    /// Builds a network with all parameters zero.
    pub fn zeros(
        widths: &[usize],
        hidden_activation: Activation,
        output_activation: Option<Activation>,
        output_bias: bool,
    ) -> Result<Self> {
        if widths.len() < 2 {
            return Err(FricdynError::InvalidConfig(
                "network needs at least an input and an output layer".into(),
            ));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(FricdynError::InvalidConfig(
                "zero-width layers are not allowed".into(),
            ));
        }
        let layers = widths.len() - 1;
        let weights = (0..layers)
            .map(|l| DMatrix::zeros(widths[l + 1], widths[l]))
            .collect();
        let biases = (0..layers)
            .map(|l| DVector::zeros(widths[l + 1]))
            .collect();
        Ok(Self {
            widths: widths.to_vec(),
            weights,
            biases,
            hidden_activation,
            output_activation,
            output_bias,
        })
    }

    /// Xavier-uniform initialization, deterministic in the seed.
    pub fn xavier(
        widths: &[usize],
        hidden_activation: Activation,
        output_activation: Option<Activation>,
        output_bias: bool,
        seed: u64,
    ) -> Result<Self> {
        let mut net = Self::zeros(widths, hidden_activation, output_activation, output_bias)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in &mut net.weights {
            let limit = (6.0 / (w.nrows() + w.ncols()) as f64).sqrt();
            for v in w.iter_mut() {
                *v = rng.gen_range(-limit..limit);
            }
        }
        Ok(net)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().unwrap()
    }

    fn layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn forward(&self, input: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.forward_trace(input)?.0)
    }

    pub fn forward_trace(&self, input: &DVector<f64>) -> Result<(DVector<f64>, ForwardTrace)> {
        if input.len() != self.widths[0] {
            return Err(FricdynError::DimensionMismatch(format!(
                "network expects input of length {}, got {}",
                self.widths[0],
                input.len()
            )));
        }
        let layers = self.layers();
        let mut activations = Vec::with_capacity(layers + 1);
        let mut pre = Vec::with_capacity(layers);
        activations.push(input.clone());
        for l in 0..layers {
            let last = l == layers - 1;
            let mut z = &self.weights[l] * activations.last().unwrap();
            if !last || self.output_bias {
                z += &self.biases[l];
            }
            let a = if last {
                match self.output_activation {
                    Some(act) => z.map(|v| act.value(v)),
                    None => z.clone(),
                }
            } else {
                z.map(|v| self.hidden_activation.value(v))
            };
            pre.push(z);
            activations.push(a);
        }
        let out = activations.last().unwrap().clone();
        Ok((out, ForwardTrace { activations, pre }))
    }

    /// Reverse-mode gradient of a scalar loss given `dloss/doutput`.
    pub fn backprop(&self, trace: &ForwardTrace, dloss_dout: &DVector<f64>) -> FnnGrad {
        let layers = self.layers();
        let mut gw: Vec<DMatrix<f64>> = self
            .weights
            .iter()
            .map(|w| DMatrix::zeros(w.nrows(), w.ncols()))
            .collect();
        let mut gb: Vec<DVector<f64>> = self.biases.iter().map(|b| DVector::zeros(b.len())).collect();

        let mut delta = match self.output_activation {
            Some(act) => {
                let z = &trace.pre[layers - 1];
                DVector::from_fn(dloss_dout.len(), |i, _| {
                    dloss_dout[i] * act.derivative(z[i])
                })
            }
            None => dloss_dout.clone(),
        };

        for l in (0..layers).rev() {
            gw[l] = &delta * trace.activations[l].transpose();
            if l < layers - 1 || self.output_bias {
                gb[l] = delta.clone();
            }
            if l > 0 {
                let back = self.weights[l].transpose() * &delta;
                let z = &trace.pre[l - 1];
                delta = DVector::from_fn(back.len(), |i, _| {
                    back[i] * self.hidden_activation.derivative(z[i])
                });
            }
        }
        FnnGrad {
            weights: gw,
            biases: gb,
        }
    }

    /// Number of trainable scalars.
    pub fn param_count(&self) -> usize {
        let layers = self.layers();
        let mut n = 0;
        for l in 0..layers {
            n += self.weights[l].len();
            if l < layers - 1 || self.output_bias {
                n += self.biases[l].len();
            }
        }
        n
    }

    pub fn params(&self) -> Vec<f64> {
        let layers = self.layers();
        let mut out = Vec::with_capacity(self.param_count());
        for l in 0..layers {
            // row-major weight layout
            for i in 0..self.weights[l].nrows() {
                for j in 0..self.weights[l].ncols() {
                    out.push(self.weights[l][(i, j)]);
                }
            }
            if l < layers - 1 || self.output_bias {
                out.extend(self.biases[l].iter().copied());
            }
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(FricdynError::DimensionMismatch(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let layers = self.layers();
        let mut k = 0;
        for l in 0..layers {
            for i in 0..self.weights[l].nrows() {
                for j in 0..self.weights[l].ncols() {
                    self.weights[l][(i, j)] = flat[k];
                    k += 1;
                }
            }
            if l < layers - 1 || self.output_bias {
                for i in 0..self.biases[l].len() {
                    self.biases[l][i] = flat[k];
                    k += 1;
                }
            }
        }
        Ok(())
    }

    pub(crate) fn grad_flat(&self, grad: &FnnGrad) -> Vec<f64> {
        let layers = self.layers();
        let mut out = Vec::with_capacity(self.param_count());
        for l in 0..layers {
            for i in 0..grad.weights[l].nrows() {
                for j in 0..grad.weights[l].ncols() {
                    out.push(grad.weights[l][(i, j)]);
                }
            }
            if l < layers - 1 || self.output_bias {
                out.extend(grad.biases[l].iter().copied());
            }
        }
        out
    }

    pub fn save_json(&self, path: &std::path::Path) -> Result<()> {
        let file: FnnFile = self.into();
        std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    pub fn load_json(path: &std::path::Path) -> Result<Self> {
        let file: FnnFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        file.try_into()
    }
}

/// On-disk form: layer widths, activation tags, row-major weight arrays.
#[derive(Serialize, Deserialize)]
struct FnnFile {
    widths: Vec<usize>,
    hidden_activation: Activation,
    output_activation: Option<Activation>,
    output_bias: bool,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl From<&Fnn> for FnnFile {
    fn from(net: &Fnn) -> Self {
        FnnFile {
            widths: net.widths.clone(),
            hidden_activation: net.hidden_activation,
            output_activation: net.output_activation,
            output_bias: net.output_bias,
            weights: net
                .weights
                .iter()
                .map(|w| {
                    let mut row_major = Vec::with_capacity(w.len());
                    for i in 0..w.nrows() {
                        for j in 0..w.ncols() {
                            row_major.push(w[(i, j)]);
                        }
                    }
                    row_major
                })
                .collect(),
            biases: net.biases.iter().map(|b| b.as_slice().to_vec()).collect(),
        }
    }
}

impl TryFrom<FnnFile> for Fnn {
    type Error = FricdynError;

    fn try_from(file: FnnFile) -> Result<Self> {
        let mut net = Fnn::zeros(
            &file.widths,
            file.hidden_activation,
            file.output_activation,
            file.output_bias,
        )?;
        if file.weights.len() != net.weights.len() || file.biases.len() != net.biases.len() {
            return Err(FricdynError::DimensionMismatch(
                "layer count mismatch in network file".into(),
            ));
        }
        for (l, data) in file.weights.iter().enumerate() {
            let w = &mut net.weights[l];
            if data.len() != w.len() {
                return Err(FricdynError::DimensionMismatch(format!(
                    "weight block {l} has wrong size"
                )));
            }
            let mut k = 0;
            for i in 0..w.nrows() {
                for j in 0..w.ncols() {
                    w[(i, j)] = data[k];
                    k += 1;
                }
            }
        }
        for (l, data) in file.biases.iter().enumerate() {
            if data.len() != net.biases[l].len() {
                return Err(FricdynError::DimensionMismatch(format!(
                    "bias block {l} has wrong size"
                )));
            }
            net.biases[l] = DVector::from_column_slice(data);
        }
        Ok(net)
    }
}

/// Gradient of `loss(forward(input))` with respect to the parameters.
/// `loss` returns the scalar value and `dloss/doutputs`.
pub fn gradient<L>(net: &Fnn, loss: L, input: &DVector<f64>) -> Result<(f64, FnnGrad)>
where
    L: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    let (out, trace) = net.forward_trace(input)?;
    let (value, dout) = loss(&out);
    Ok((value, net.backprop(&trace, &dout)))
}

/// Training knobs for the step/LCP networks.
#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub tol: f64,
    pub max_iter: usize,
}

/// Optimizes the network in place (warm start from its current parameters)
/// against a loss on its outputs for a fixed input.
pub fn train_output_loss<L>(
    net: &mut Fnn,
    input: &DVector<f64>,
    loss: &L,
    opts: &TrainOptions,
) -> Result<TrainReport>
where
    L: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    let x0 = net.params();
    let mut scratch = net.clone();
    let mut objective = |p: &[f64]| -> (f64, Vec<f64>) {
        scratch.set_params(p).expect("parameter layout is fixed");
        let (value, grad) = gradient(&scratch, loss, input).expect("input shape is fixed");
        (value, scratch.grad_flat(&grad))
    };
    let lb = LbfgsOptions {
        loss_tol: opts.tol,
        max_iter: opts.max_iter,
        ..LbfgsOptions::default()
    };
    let (best, report) = minimize(&mut objective, x0, &lb)?;
    net.set_params(&best)?;
    Ok(TrainReport {
        final_loss: report.final_loss,
        iterations: report.iterations,
        converged: report.final_loss <= opts.tol,
        grad_norm: report.grad_norm,
    })
}

/// Cold-start trainer: reinitializes the parameters from `seed`, then runs
/// L-BFGS until the loss drops below `tol` or the budget runs out.
pub fn train_lbfgs<L>(
    net: &Fnn,
    input: &DVector<f64>,
    loss: &L,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<(Fnn, TrainReport)>
where
    L: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    let mut fresh = Fnn::xavier(
        &net.widths,
        net.hidden_activation,
        net.output_activation,
        net.output_bias,
        seed,
    )?;
    let report = train_output_loss(&mut fresh, input, loss, &TrainOptions { tol, max_iter })?;
    Ok((fresh, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn affine_identity_layer_is_identity() {
        let mut net = Fnn::zeros(&[2, 2], Activation::Tanh, None, false).unwrap();
        net.weights[0] = DMatrix::identity(2, 2);
        let x = DVector::from_column_slice(&[0.3, -1.7]);
        let y = net.forward(&x).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let net = Fnn::zeros(&[3, 4, 4, 2], Activation::Tanh, None, false).unwrap();
        let y = net
            .forward(&DVector::from_column_slice(&[1.0, -2.0, 0.5]))
            .unwrap();
        assert!(y.amax() == 0.0);
    }

    #[test]
    fn unit_chain_tanh_at_zero_is_zero() {
        let mut net = Fnn::zeros(&[1, 1, 1], Activation::Tanh, None, false).unwrap();
        net.weights[0][(0, 0)] = 1.0;
        net.weights[1][(0, 0)] = 1.0;
        let y = net.forward(&DVector::from_element(1, 0.0)).unwrap();
        assert_eq!(y[0], 0.0);
    }

    #[test]
    fn activation_examples() {
        let m = Activation::ModifiedRelu { c1: 0.3, c2: 0.1 };
        assert_relative_eq!(m.value(-1.0), 0.1);
        let plain = Activation::ModifiedRelu { c1: 0.0, c2: 0.0 };
        assert_relative_eq!(plain.value(0.5), 0.5);
        assert_eq!(activate(Activation::Tanh, 0.0), 0.0);
    }

    #[test]
    fn single_neuron_chain_rule() {
        // out = w * x, loss = out^2, x = 1, w = 2 -> dL/dw = 2 * out * x = 4
        let mut net = Fnn::zeros(&[1, 1], Activation::Tanh, None, false).unwrap();
        net.weights[0][(0, 0)] = 2.0;
        let loss = |out: &DVector<f64>| {
            (
                out[0] * out[0],
                DVector::from_element(1, 2.0 * out[0]),
            )
        };
        let (value, grad) = gradient(&net, loss, &DVector::from_element(1, 1.0)).unwrap();
        assert_relative_eq!(value, 4.0);
        assert_relative_eq!(grad.weights[0][(0, 0)], 4.0);
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let net = Fnn::xavier(&[2, 6, 3], Activation::Mish, None, false, 3).unwrap();
        let loss = |out: &DVector<f64>| (1.5, DVector::zeros(out.len()));
        let (_, grad) = gradient(&net, loss, &DVector::from_column_slice(&[0.2, -0.4])).unwrap();
        assert!(grad.weights.iter().all(|w| w.amax() == 0.0));
    }

    /// Central finite differences on the flattened parameters.
    fn finite_diff_check(net: &Fnn, input: &DVector<f64>, kink_guard: bool) -> f64 {
        let loss = |out: &DVector<f64>| {
            let value = out.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v * v).sum();
            let grad = DVector::from_fn(out.len(), |i, _| 2.0 * (i as f64 + 1.0) * out[i]);
            (value, grad)
        };
        let (_, grad) = gradient(net, loss, input).unwrap();
        let analytic = net.grad_flat(&grad);
        let p0 = net.params();
        let h = 1e-6;
        let mut worst = 0.0_f64;
        let mut scratch = net.clone();
        for k in 0..p0.len() {
            let mut plus = p0.clone();
            plus[k] += h;
            scratch.set_params(&plus).unwrap();
            let (op, trace_p) = scratch.forward_trace(input).unwrap();
            // guard against stepping across a ReLU kink
            if kink_guard && trace_p.pre.iter().any(|z| z.iter().any(|v| v.abs() < 1e-3)) {
                continue;
            }
            let fp: f64 = loss(&op).0;
            let mut minus = p0.clone();
            minus[k] -= h;
            scratch.set_params(&minus).unwrap();
            let fm: f64 = loss(&scratch.forward(input).unwrap()).0;
            let fd = (fp - fm) / (2.0 * h);
            let denom = analytic[k].abs().max(fd.abs()).max(1e-6);
            worst = worst.max((analytic[k] - fd).abs() / denom);
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        let activations = [
            Activation::Tanh,
            Activation::Mish,
            Activation::Relu,
            Activation::ModifiedRelu { c1: 0.3, c2: 0.1 },
        ];
        for (ai, act) in activations.iter().enumerate() {
            for trial in 0..10 {
                let seed = 1000 + 17 * ai as u64 + trial;
                let net = Fnn::xavier(&[3, 7, 5, 2], *act, None, false, seed).unwrap();
                let input = DVector::from_fn(3, |i, _| 0.3 + 0.2 * (i as f64) + 0.01 * trial as f64);
                let guard = matches!(act, Activation::Relu | Activation::ModifiedRelu { .. });
                let worst = finite_diff_check(&net, &input, guard);
                assert!(
                    worst <= 1e-5,
                    "activation {act:?} trial {trial}: worst rel err {worst}"
                );
            }
        }
    }

    #[test]
    fn train_recovers_singleton_minimum() {
        // one trainable weight, loss = (w - 3)^2 realized through out = w * 1
        let net = Fnn::zeros(&[1, 1], Activation::Tanh, None, false).unwrap();
        let loss = |out: &DVector<f64>| {
            let d = out[0] - 3.0;
            (d * d, DVector::from_element(1, 2.0 * d))
        };
        let (trained, report) =
            train_lbfgs(&net, &DVector::from_element(1, 1.0), &loss, 1e-18, 200, 5).unwrap();
        assert!(report.converged);
        let w = trained.params()[0];
        assert!((w - 3.0).abs() < 1e-8, "w = {w}");
    }

    #[test]
    fn json_roundtrip_preserves_network() {
        let net = Fnn::xavier(
            &[2, 5, 5, 4],
            Activation::Tanh,
            Some(Activation::ModifiedRelu { c1: 0.1, c2: 0.0 }),
            false,
            11,
        )
        .unwrap();
        let dir = std::env::temp_dir().join("fricdyn_nn_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("net.json");
        net.save_json(&path).unwrap();
        let loaded = Fnn::load_json(&path).unwrap();
        assert_eq!(net, loaded);
    }
}
