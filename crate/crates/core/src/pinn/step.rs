//! One PINN time step: a small network proposes the stage velocities of an
//! implicit Runge-Kutta pass, and training drives the reconstructions of the
//! known start velocity (one per stage plus one through the quadrature row)
//! to agree with it.
//!
//! The network input is the step's start displacement (normalized); the
//! output is reshaped to `n_dof x (R + 1)` stage velocities, the last column
//! being the end-of-step velocity. Stage accelerations follow
//! `a = M^-1 (h(Q_r, V_r) + W_N lambda_N + W_T lambda_T)` with the supplied
//! stage forces. Contacts whose step LCP encoded sticking are integrated as
//! velocity constraints: their tangential stage force becomes the balancing
//! value that nulls the relative tangential acceleration, and the matching
//! residual rows pin the stage velocities to the belt speed. Slip and
//! separation keep the supplied forces untouched.

use nalgebra::{DMatrix, DVector};

use crate::contact::{MechModel, SystemState};
use crate::error::{FricdynError, Result};
use crate::nn::{lbfgs, Activation, Fnn, TrainReport};
use crate::pinn::tableau::ButcherTableau;

/// Per-contact forces at one instant.
#[derive(Debug, Clone)]
pub struct ContactForces {
    pub normal: DVector<f64>,
    pub tangential: DVector<f64>,
}

/// Per-stage contact forces (one column per IRK node) plus the stick mask
/// describing which contacts the step's LCP resolved as sticking.
#[derive(Debug, Clone)]
pub struct StageForces {
    pub normal: DMatrix<f64>,
    pub tangential: DMatrix<f64>,
    pub stick: Vec<bool>,
}

impl StageForces {
    /// All columns equal to the step-level force (the non-advanced schemes).
    pub fn constant(curr: &ContactForces, stages: usize) -> Self {
        let nc = curr.normal.len();
        StageForces {
            normal: DMatrix::from_fn(nc, stages, |j, _| curr.normal[j]),
            tangential: DMatrix::from_fn(nc, stages, |j, _| curr.tangential[j]),
            stick: vec![false; nc],
        }
    }

    pub fn stages(&self) -> usize {
        self.normal.ncols()
    }
}

/// Linear interpolation of the step-boundary forces onto the IRK nodes:
/// column k is `prev + c_k (curr - prev)` for both force families.
pub fn interpolate_forces(
    prev: &ContactForces,
    curr: &ContactForces,
    c_nodes: &DVector<f64>,
) -> StageForces {
    let nc = curr.normal.len();
    let r = c_nodes.len();
    StageForces {
        normal: DMatrix::from_fn(nc, r, |j, k| {
            prev.normal[j] + c_nodes[k] * (curr.normal[j] - prev.normal[j])
        }),
        tangential: DMatrix::from_fn(nc, r, |j, k| {
            prev.tangential[j] + c_nodes[k] * (curr.tangential[j] - prev.tangential[j])
        }),
        stick: vec![false; nc],
    }
}

/// Network and training knobs for the step integrator.
#[derive(Debug, Clone)]
pub struct PinnStepConfig {
    pub tableau: ButcherTableau,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// Normalized mean-square residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub restarts: usize,
}

impl PinnStepConfig {
    pub fn new(tableau: ButcherTableau) -> Self {
        Self {
            tableau,
            hidden: vec![20; 7],
            activation: Activation::Tanh,
            tol: 1e-19,
            max_iter: 500,
            seed: 7,
            restarts: 3,
        }
    }
}

/// Warm-started step network, reused across the steps of one trajectory.
#[derive(Debug, Clone, Default)]
pub struct StepNetwork {
    net: Option<Fnn>,
    attempts: u64,
}

impl StepNetwork {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Stick constraint row: tangent direction, 1/|w|^2, and the drift term.
struct StickRow {
    w: DVector<f64>,
    inv_n2: f64,
    drift: f64,
}

/// Everything fixed during one step's training.
struct StepSystem<'a> {
    model: &'a MechModel,
    tableau: &'a ButcherTableau,
    forces: &'a StageForces,
    dt: f64,
    u0: DVector<f64>,
    q0: DVector<f64>,
    scale_v: f64,
    /// `T M^-1` with `T` nulling the stick-tangential acceleration rows.
    tm_inv: DMatrix<f64>,
    /// Euclidean projector onto the non-stick velocity directions.
    p_free: DMatrix<f64>,
    stick_rows: Vec<StickRow>,
    /// `-dt T M^-1 Ks` and `-T M^-1 Cs` (residual Jacobian pieces).
    c1: DMatrix<f64>,
    c2: DMatrix<f64>,
    norm: f64,
}

impl<'a> StepSystem<'a> {
    fn build(
        model: &'a MechModel,
        state: &SystemState,
        dt: f64,
        forces: &'a StageForces,
        tableau: &'a ButcherTableau,
    ) -> Result<Self> {
        let n = model.n_dof();
        if forces.stages() != tableau.stages() {
            return Err(FricdynError::DimensionMismatch(
                "stage force columns must match the tableau stage count".into(),
            ));
        }
        if forces.stick.len() != model.n_contacts() {
            return Err(FricdynError::DimensionMismatch(
                "stick mask must have one entry per contact".into(),
            ));
        }
        let stick_idx: Vec<usize> = (0..model.n_contacts())
            .filter(|&j| forces.stick[j])
            .collect();

        let mut p_free = DMatrix::<f64>::identity(n, n);
        let mut stick_rows = Vec::new();
        let tm_inv = if stick_idx.is_empty() {
            model.mass_inv().clone()
        } else {
            let ns = stick_idx.len();
            let mut ws = DMatrix::<f64>::zeros(n, ns);
            for (col, &j) in stick_idx.iter().enumerate() {
                let w = DVector::from(model.w_t().column(j));
                ws.set_column(col, &model.w_t().column(j));
                let inv_n2 = 1.0 / w.norm_squared();
                p_free -= &w * w.transpose() * inv_n2;
                stick_rows.push(StickRow {
                    w,
                    inv_n2,
                    drift: model.w_hat_t()[j],
                });
            }
            let g_ss = ws.transpose() * model.mass_inv() * &ws;
            let g_inv = g_ss.try_inverse().ok_or(FricdynError::SingularMass)?;
            let t_op =
                DMatrix::identity(n, n) - model.mass_inv() * &ws * g_inv * ws.transpose();
            t_op * model.mass_inv()
        };

        let scale_v = state.u.amax().max(model.w_hat_t().amax()).max(1.0);
        let r = tableau.stages();
        let norm = ((r + 1) * n) as f64 * scale_v * scale_v;
        let c1 = -dt * &tm_inv * model.stiffness();
        let c2 = -&tm_inv * model.damping();
        Ok(Self {
            model,
            tableau,
            forces,
            dt,
            u0: state.u.clone(),
            q0: state.q.clone(),
            scale_v,
            tm_inv,
            p_free,
            stick_rows,
            c1,
            c2,
            norm,
        })
    }

    fn input(&self) -> DVector<f64> {
        let scale_q = self.q0.amax().max(1.0);
        &self.q0 / scale_q
    }

    /// Free-direction reconstruction residual plus the stick constraint rows
    /// `w (w' v + w_hat) / |w|^2`.
    fn project(&self, xi: &DVector<f64>, v_col: &DVector<f64>) -> DVector<f64> {
        if self.stick_rows.is_empty() {
            return xi.clone();
        }
        let mut res = &self.p_free * xi;
        for row in &self.stick_rows {
            let gamma = row.w.dot(v_col) + row.drift;
            res += &row.w * (gamma * row.inv_n2);
        }
        res
    }

    /// Loss and gradient with respect to the raw network outputs.
    fn loss(&self, out: &DVector<f64>) -> (f64, DVector<f64>) {
        let n = self.model.n_dof();
        let r = self.tableau.stages();
        let dt = self.dt;
        let a = &self.tableau.a;
        let bw = &self.tableau.b;

        let v: Vec<DVector<f64>> = (0..=r)
            .map(|m| DVector::from_fn(n, |i, _| out[m * n + i] * self.scale_v))
            .collect();

        let mut accel: Vec<DVector<f64>> = Vec::with_capacity(r);
        for s in 0..r {
            let mut q_s = self.q0.clone();
            for m in 0..r {
                q_s += a[(s, m)] * dt * &v[m];
            }
            let mut f = self.model.h_vector(&q_s, &v[s]);
            for j in 0..self.model.n_contacts() {
                f += DVector::from(self.model.w_n().column(j)) * self.forces.normal[(j, s)];
                if !self.forces.stick[j] {
                    f += DVector::from(self.model.w_t().column(j))
                        * self.forces.tangential[(j, s)];
                }
            }
            accel.push(&self.tm_inv * f);
        }

        let mut rho: Vec<DVector<f64>> = Vec::with_capacity(r + 1);
        for k in 0..r {
            let mut xi = &v[k] - &self.u0;
            for s in 0..r {
                xi -= a[(k, s)] * dt * &accel[s];
            }
            rho.push(self.project(&xi, &v[k]));
        }
        let mut xi_end = &v[r] - &self.u0;
        for s in 0..r {
            xi_end -= bw[s] * dt * &accel[s];
        }
        rho.push(self.project(&xi_end, &v[r]));

        let mut loss = 0.0;
        for res in &rho {
            loss += res.norm_squared();
        }
        loss /= self.norm;

        let pf_rho: Vec<DVector<f64>> = rho.iter().map(|res| &self.p_free * res).collect();
        let sigma: Vec<DVector<f64>> = (0..r)
            .map(|s| {
                let mut acc = bw[s] * &pf_rho[r];
                for k in 0..r {
                    acc += a[(k, s)] * &pf_rho[k];
                }
                acc
            })
            .collect();

        let two_over = 2.0 / self.norm;
        let mut grad = DVector::<f64>::zeros(out.len());
        for m in 0..=r {
            let mut g = rho[m].clone();
            if m < r {
                let mut w1 = DVector::<f64>::zeros(n);
                for s in 0..r {
                    w1 += a[(s, m)] * &sigma[s];
                }
                g -= dt * (self.c1.transpose() * w1) + self.c2.transpose() * &sigma[m] * dt;
            }
            for i in 0..n {
                grad[m * n + i] = two_over * g[i] * self.scale_v;
            }
        }
        (loss, grad)
    }

    /// End-of-step state from the trained outputs.
    fn extract(&self, out: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let n = self.model.n_dof();
        let r = self.tableau.stages();
        let v: Vec<DVector<f64>> = (0..=r)
            .map(|m| DVector::from_fn(n, |i, _| out[m * n + i] * self.scale_v))
            .collect();
        let mut q1 = self.q0.clone();
        for s in 0..r {
            q1 += self.tableau.b[s] * self.dt * &v[s];
        }
        (q1, v[r].clone())
    }
}

/// Trains one step and returns `(q1, u1, report)`; warm-starts from
/// `netstate` and falls back to reseeded cold starts.
pub fn pinn_step_core(
    model: &MechModel,
    state: &SystemState,
    dt: f64,
    forces: &StageForces,
    cfg: &PinnStepConfig,
    netstate: &mut StepNetwork,
) -> Result<(DVector<f64>, DVector<f64>, TrainReport)> {
    let sys = StepSystem::build(model, state, dt, forces, &cfg.tableau)?;
    let n = model.n_dof();
    let r = cfg.tableau.stages();
    let mut widths = Vec::with_capacity(cfg.hidden.len() + 2);
    widths.push(n);
    widths.extend_from_slice(&cfg.hidden);
    widths.push(n * (r + 1));

    let input = sys.input();
    let mut best_loss = f64::INFINITY;
    for attempt in 0..=cfg.restarts {
        let warm_ok = attempt == 0
            && netstate
                .net
                .as_ref()
                .is_some_and(|net| net.widths() == widths.as_slice());
        let mut net = if warm_ok {
            netstate.net.clone().unwrap()
        } else {
            let seed = cfg
                .seed
                .wrapping_add(netstate.attempts.wrapping_mul(6364136223846793005))
                .wrapping_add(attempt as u64);
            Fnn::xavier(&widths, cfg.activation, None, false, seed)?
        };
        netstate.attempts += 1;

        let x0 = net.params();
        let mut scratch = net.clone();
        let mut objective = |p: &[f64]| -> (f64, Vec<f64>) {
            scratch.set_params(p).expect("fixed layout");
            let (out, trace) = scratch.forward_trace(&input).expect("fixed input");
            let (value, dout) = sys.loss(&out);
            let grad = scratch.backprop(&trace, &dout);
            (value, scratch.grad_flat(&grad))
        };
        let opts = lbfgs::LbfgsOptions {
            loss_tol: cfg.tol,
            max_iter: cfg.max_iter,
            ..Default::default()
        };
        let (params, report) = lbfgs::minimize(&mut objective, x0, &opts)?;
        if report.final_loss <= cfg.tol {
            net.set_params(&params)?;
            let out = net.forward(&input)?;
            let (q1, u1) = sys.extract(&out);
            netstate.net = Some(net);
            return Ok((
                q1,
                u1,
                TrainReport {
                    final_loss: report.final_loss,
                    iterations: report.iterations,
                    converged: true,
                    grad_norm: report.grad_norm,
                },
            ));
        }
        best_loss = best_loss.min(report.final_loss);
    }
    netstate.net = None;
    Err(FricdynError::NotConverged {
        residual: best_loss,
        tol: cfg.tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{model_i, model_ii, ModelIParams, ModelIiParams};
    use crate::pinn::tableau::irk_coefficients;

    fn step_cfg(r: usize) -> PinnStepConfig {
        PinnStepConfig {
            hidden: vec![10; 3],
            ..PinnStepConfig::new(irk_coefficients(r).unwrap())
        }
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        // slip + stick variants on the 2-DoF model
        let model = model_ii(&ModelIiParams::default()).unwrap();
        let state = SystemState::initial(
            &model,
            DVector::from_column_slice(&[-1.0, -0.5]),
            DVector::from_column_slice(&[0.8, -0.3]),
        )
        .unwrap();
        let r = 3;
        let tableau = irk_coefficients(r).unwrap();
        for stick in [false, true] {
            let mut forces = StageForces::constant(
                &ContactForces {
                    normal: DVector::from_element(1, 250.0),
                    tangential: DVector::from_element(1, 100.0),
                },
                r,
            );
            forces.stick[0] = stick;
            let sys = StepSystem::build(&model, &state, 1e-2, &forces, &tableau).unwrap();
            let m = 2 * (r + 1);
            let out0 = DVector::from_fn(m, |i, _| 0.3 + 0.1 * i as f64);
            let (_, grad) = sys.loss(&out0);
            let h = 1e-7;
            for k in 0..m {
                let mut plus = out0.clone();
                plus[k] += h;
                let mut minus = out0.clone();
                minus[k] -= h;
                let fd = (sys.loss(&plus).0 - sys.loss(&minus).0) / (2.0 * h);
                let denom = grad[k].abs().max(fd.abs()).max(1e-8);
                assert!(
                    (grad[k] - fd).abs() / denom < 1e-5,
                    "stick={stick} k={k}: analytic {} vs fd {fd}",
                    grad[k]
                );
            }
        }
    }

    #[test]
    fn free_particle_step_is_exact() {
        let model = model_i(&ModelIParams {
            stiffness: 0.0,
            normal_force: 0.0,
            ..ModelIParams::default()
        })
        .unwrap();
        let state = SystemState::initial(
            &model,
            DVector::from_element(1, 0.3),
            DVector::from_element(1, 0.7),
        )
        .unwrap();
        let forces = StageForces::constant(
            &ContactForces {
                normal: DVector::zeros(1),
                tangential: DVector::zeros(1),
            },
            4,
        );
        let mut netstate = StepNetwork::new();
        let cfg = step_cfg(4);
        let (q1, u1, report) =
            pinn_step_core(&model, &state, 0.1, &forces, &cfg, &mut netstate).unwrap();
        assert!(report.final_loss <= 1e-10);
        assert!((q1[0] - (0.3 + 0.07)).abs() < 1e-8, "q1 = {}", q1[0]);
        assert!((u1[0] - 0.7).abs() < 1e-8);
    }

    #[test]
    fn harmonic_oscillator_step_matches_analytic_propagation() {
        let model = model_i(&ModelIParams {
            normal_force: 0.0,
            ..ModelIParams::default()
        })
        .unwrap();
        let state = SystemState::initial(
            &model,
            DVector::from_element(1, 1.0),
            DVector::from_element(1, 0.0),
        )
        .unwrap();
        let forces = StageForces::constant(
            &ContactForces {
                normal: DVector::zeros(1),
                tangential: DVector::zeros(1),
            },
            4,
        );
        let mut netstate = StepNetwork::new();
        let cfg = step_cfg(4);
        let dt = 0.1;
        let (q1, u1, _) =
            pinn_step_core(&model, &state, dt, &forces, &cfg, &mut netstate).unwrap();
        assert!((q1[0] - dt.cos()).abs() < 1e-6, "q1 = {}", q1[0]);
        assert!((u1[0] + dt.sin()).abs() < 1e-6, "u1 = {}", u1[0]);
    }

    #[test]
    fn stick_forces_pin_the_velocity_to_the_belt() {
        let model = model_i(&ModelIParams::default()).unwrap();
        let state = SystemState::initial(
            &model,
            DVector::from_element(1, 0.05),
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        let mut forces = StageForces::constant(
            &ContactForces {
                normal: DVector::from_element(1, 1.0),
                tangential: DVector::from_element(1, 0.05),
            },
            4,
        );
        forces.stick[0] = true;
        let mut netstate = StepNetwork::new();
        let cfg = step_cfg(4);
        let dt = 0.05;
        let (q1, u1, _) =
            pinn_step_core(&model, &state, dt, &forces, &cfg, &mut netstate).unwrap();
        assert!((u1[0] - 1.0).abs() < 1e-6, "u1 = {}", u1[0]);
        assert!((q1[0] - (0.05 + dt)).abs() < 1e-6);
    }

    #[test]
    fn interpolation_endpoints_and_collapse() {
        let prev = ContactForces {
            normal: DVector::from_element(1, 0.0),
            tangential: DVector::from_element(1, 0.0),
        };
        let curr = ContactForces {
            normal: DVector::from_element(1, 2.0),
            tangential: DVector::from_element(1, -1.0),
        };
        let c = DVector::from_column_slice(&[0.25, 0.75]);
        let s = interpolate_forces(&prev, &curr, &c);
        assert_eq!(s.normal[(0, 0)], 0.5);
        assert_eq!(s.normal[(0, 1)], 1.5);
        assert_eq!(s.tangential[(0, 0)], -0.25);
        assert_eq!(s.tangential[(0, 1)], -0.75);

        // constant force: every column equals the current value
        let collapsed = interpolate_forces(&curr, &curr, &c);
        for k in 0..2 {
            assert_eq!(collapsed.normal[(0, k)], 2.0);
            assert_eq!(collapsed.tangential[(0, k)], -1.0);
        }
        // degenerate endpoints
        let c01 = DVector::from_column_slice(&[0.0, 1.0]);
        let ends = interpolate_forces(&prev, &curr, &c01);
        assert_eq!(ends.normal[(0, 0)], 0.0);
        assert_eq!(ends.normal[(0, 1)], 2.0);
    }

    #[test]
    fn higher_order_reduces_one_step_error() {
        let model = model_i(&ModelIParams {
            normal_force: 0.0,
            ..ModelIParams::default()
        })
        .unwrap();
        let dt = 0.4;
        let mut errs = Vec::new();
        for r in [2usize, 4, 10] {
            let state = SystemState::initial(
                &model,
                DVector::from_element(1, 1.0),
                DVector::from_element(1, 0.0),
            )
            .unwrap();
            let forces = StageForces::constant(
                &ContactForces {
                    normal: DVector::zeros(1),
                    tangential: DVector::zeros(1),
                },
                r,
            );
            let mut netstate = StepNetwork::new();
            let cfg = step_cfg(r);
            let (q1, u1, _) =
                pinn_step_core(&model, &state, dt, &forces, &cfg, &mut netstate).unwrap();
            let err = (q1[0] - dt.cos()).hypot(u1[0] + dt.sin());
            errs.push(err);
        }
        assert!(
            errs[1] < errs[0] && errs[2] <= errs[1],
            "errors not decreasing with order: {errs:?}"
        );
    }
}
