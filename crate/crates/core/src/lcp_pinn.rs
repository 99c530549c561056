//! LCP solving by training a small network whose outputs are assigned to the
//! complementary pair (x, y).
//!
//! The network sees a fixed arbitrary input vector; its 2N outputs pass
//! through a ReLU-family output activation, which makes x >= 0 and y >= 0
//! structural. Training minimizes the mean-square feasibility loss
//! `(sum f_i^2 + sum (x_i y_i)^2) / N` with `f = y - A x - b`. The problem
//! is scaled to unit offset norm before training and the solution is scaled
//! back, so the stopping test can be an absolute tolerance on the original
//! problem's invariants.

use nalgebra::{DMatrix, DVector};

use crate::error::{FricdynError, Result};
use crate::lcp::{lcp_residual, ComplementarityStats, LcpProblem, LcpSolution, LcpStatus};
use crate::nn::{train_output_loss, Activation, Fnn, TrainOptions};
use crate::stepping::LcpSolve;

/// Network and training knobs for the LCP PINN.
#[derive(Debug, Clone)]
pub struct LcpPinnConfig {
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    /// Hidden activation. Smooth kinds train far more reliably under L-BFGS;
    /// the nonnegativity structure lives in the output activation, not here.
    pub activation: Activation,
    /// Output activation. The corner shift c1 keeps freshly initialized
    /// output units on the live side of the kink (a unit that starts dead
    /// never recovers, because the input is fixed); c2 stays 0 so exact
    /// zeros remain representable.
    pub output_activation: Activation,
    /// Fixed input fed to the network; `None` means a vector of ones of the
    /// problem dimension.
    pub input_values: Option<DVector<f64>>,
    /// Absolute tolerance on the solution invariants of the original problem.
    pub tol: f64,
    /// L-BFGS iteration budget per attempt.
    pub max_iter: usize,
    pub seed: u64,
    /// Reseeded cold restarts after a failed attempt.
    pub restarts: usize,
}

impl Default for LcpPinnConfig {
    fn default() -> Self {
        Self {
            hidden: vec![5, 5, 5],
            activation: Activation::Mish,
            output_activation: Activation::ModifiedRelu { c1: 0.3, c2: 0.0 },
            input_values: None,
            tol: 1e-9,
            max_iter: 600,
            seed: 2024,
            restarts: 3,
        }
    }
}

struct ScaledLoss {
    a: DMatrix<f64>,
    b: DVector<f64>,
    n: usize,
}

impl ScaledLoss {
    fn eval(&self, out: &DVector<f64>) -> (f64, DVector<f64>) {
        let n = self.n;
        let x = out.rows(0, n);
        let y = out.rows(n, n);
        let f = &y - &self.a * &x - &self.b;
        let mut loss = 0.0;
        let mut grad = DVector::zeros(2 * n);
        for i in 0..n {
            let r = x[i] * y[i];
            loss += f[i] * f[i] + r * r;
        }
        loss /= n as f64;
        let two_over_n = 2.0 / n as f64;
        for j in 0..n {
            let mut dfx = 0.0;
            for i in 0..n {
                dfx -= f[i] * self.a[(i, j)];
            }
            let r = x[j] * y[j];
            grad[j] = two_over_n * (dfx + r * y[j]);
            grad[n + j] = two_over_n * (f[j] + r * x[j]);
        }
        (loss, grad)
    }
}

fn check_solution(
    p: &LcpProblem,
    x: &DVector<f64>,
    y: &DVector<f64>,
    tol: f64,
) -> (f64, bool) {
    let stats = ComplementarityStats::of(p, x, y);
    (stats.worst(), stats.worst() <= tol)
}

/// Stateful solver that warm-starts its network from the previous call, with
/// reseeded cold restarts as fallback. This is the dual-scheme step solver.
#[derive(Debug, Clone)]
pub struct LcpPinnSolver {
    pub cfg: LcpPinnConfig,
    net: Option<Fnn>,
    attempt_counter: u64,
    /// How many calls fell back to a cold start (reported by experiments).
    pub cold_starts: usize,
    pub calls: usize,
}

impl LcpPinnSolver {
    pub fn new(cfg: LcpPinnConfig) -> Self {
        Self {
            cfg,
            net: None,
            attempt_counter: 0,
            cold_starts: 0,
            calls: 0,
        }
    }

    fn widths(&self, n_in: usize, n: usize) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.cfg.hidden.len() + 2);
        w.push(n_in);
        w.extend_from_slice(&self.cfg.hidden);
        w.push(2 * n);
        w
    }

    /// Solves `p`, warm-starting from the previous network when shapes allow.
    pub fn solve_warm(&mut self, p: &LcpProblem) -> Result<LcpSolution> {
        self.calls += 1;
        let n = p.dim();
        let input = match &self.cfg.input_values {
            Some(v) => v.clone(),
            None => DVector::from_element(n, 1.0),
        };
        let widths = self.widths(input.len(), n);

        // Normalize to |b| = 1 so the solution components are O(1); tiny
        // problems otherwise collapse every output through the ReLU corner.
        let scale = {
            let s = p.b().amax();
            if s > 1e-300 {
                s
            } else {
                1.0
            }
        };
        let loss = ScaledLoss {
            a: p.a().clone(),
            b: p.b() / scale,
            n,
        };
        // Mean-of-squares target that guarantees the absolute invariant
        // tolerance after rescaling (equality residuals scale by s, products
        // by s^2).
        let loss_tol = {
            let bound = 0.3 * self.cfg.tol / (scale * scale.max(1.0));
            bound * bound
        };
        let opts = TrainOptions {
            tol: loss_tol,
            max_iter: self.cfg.max_iter,
        };

        let mut best: Option<(f64, DVector<f64>, DVector<f64>)> = None;
        for attempt in 0..=self.cfg.restarts {
            let warm_ok = attempt == 0
                && self
                    .net
                    .as_ref()
                    .is_some_and(|net| net.widths() == widths.as_slice());
            let mut net = if warm_ok {
                self.net.clone().unwrap()
            } else {
                if attempt == 0 {
                    self.cold_starts += 1;
                }
                let seed = self
                    .cfg
                    .seed
                    .wrapping_add(self.attempt_counter)
                    .wrapping_add(attempt as u64 * 7919);
                Fnn::xavier(
                    &widths,
                    self.cfg.activation,
                    Some(self.cfg.output_activation),
                    false,
                    seed,
                )?
            };
            self.attempt_counter += 1;
            let eval = |out: &DVector<f64>| loss.eval(out);
            train_output_loss(&mut net, &input, &eval, &opts)?;
            let out = net.forward(&input)?;
            let x = DVector::from_fn(n, |i, _| out[i] * scale);
            let y = DVector::from_fn(n, |i, _| out[n + i] * scale);
            let (worst, ok) = check_solution(p, &x, &y, self.cfg.tol);
            if ok {
                self.net = Some(net);
                let residual = lcp_residual(p, &x, &y)?;
                return Ok(LcpSolution {
                    x,
                    y,
                    residual,
                    status: LcpStatus::Solved,
                });
            }
            if best.as_ref().map_or(true, |(w, _, _)| worst < *w) {
                best = Some((worst, x, y));
            }
        }
        // keep the failed net out of the warm cache
        self.net = None;
        let (worst, _, _) = best.unwrap();
        Err(FricdynError::NotConverged {
            residual: worst,
            tol: self.cfg.tol,
        })
    }
}

impl LcpSolve for LcpPinnSolver {
    fn solve(&mut self, p: &LcpProblem) -> Result<LcpSolution> {
        self.solve_warm(p)
    }
}

/// One-shot solve with cold initialization (deterministic in `cfg.seed`).
pub fn solve_lcp_pinn(p: &LcpProblem, cfg: &LcpPinnConfig) -> Result<LcpSolution> {
    LcpPinnSolver::new(cfg.clone()).solve_warm(p)
}
