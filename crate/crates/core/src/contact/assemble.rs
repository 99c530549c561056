//! Assembly of the time-discretized contact LCPs.
//!
//! Unknowns are ordered per contact block:
//! `x = [Lambda_N dt, Lambda_L dt, gamma_R dt]` against
//! `y = [g_N (or Omega_N), gamma_L dt, Lambda_R dt]`, with
//! `Lambda_R = mu Lambda_N + Lambda_T`, `Lambda_L = mu Lambda_N - Lambda_T`
//! and `gamma_T = gamma_R - gamma_L`. When the normal force is prescribed
//! (Model I) the normal rows drop out and the 2x2-block degenerate form is
//! produced instead.

use nalgebra::{DMatrix, DVector};

use crate::contact::model::{ContactKind, MechModel, SystemState};
use crate::contact::{Regime, V_EPS};
use crate::error::{FricdynError, Result};
use crate::lcp::{ComplementarityStats, LcpProblem, LcpSolution};

/// Which block structure an [`AssembledLcp`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockLayout {
    /// 3 blocks: gap complementarity plus the two friction rows.
    Rigid,
    /// 3 blocks with the spring-contact Omega_N row.
    Spring,
    /// 2 blocks: friction rows only, normal force folded into b.
    PrescribedNormal,
}

/// An assembled step LCP together with everything needed to read physical
/// forces back out of its solution.
#[derive(Debug, Clone)]
pub struct AssembledLcp {
    pub problem: LcpProblem,
    pub layout: BlockLayout,
    pub dt: f64,
    /// Friction coefficients frozen at the step's start velocities.
    pub mu: DVector<f64>,
    /// Prescribed per-contact normal forces (PrescribedNormal layout).
    pub prescribed: Option<DVector<f64>>,
    n_contacts: usize,
}

/// Physical contact quantities extracted from a step LCP solution.
#[derive(Debug, Clone)]
pub struct ContactSolution {
    pub lambda_n: DVector<f64>,
    pub lambda_t: DVector<f64>,
    pub lambda_r: DVector<f64>,
    pub lambda_l: DVector<f64>,
    pub gamma_r: DVector<f64>,
    pub gamma_l: DVector<f64>,
    /// Worst complementarity violation of the underlying LCP solution.
    pub comp_worst: f64,
}

impl ContactSolution {
    /// Contact regime encoded by the step solution.
    pub fn decision(&self, j: usize) -> Regime {
        let scale = 1.0 + self.lambda_n.amax();
        if self.lambda_n[j] <= 1e-10 * scale {
            Regime::Separated
        } else if self.gamma_r[j].abs() <= V_EPS && self.gamma_l[j].abs() <= V_EPS {
            Regime::Stick
        } else {
            Regime::Slip
        }
    }

    pub fn decisions(&self) -> Vec<Regime> {
        (0..self.lambda_n.len()).map(|j| self.decision(j)).collect()
    }

    /// Tangential velocity at the end of the step implied by the LCP.
    pub fn gamma_t(&self) -> DVector<f64> {
        &self.gamma_r - &self.gamma_l
    }
}

struct GBlocks {
    g_n: DMatrix<f64>,
    g_t: DMatrix<f64>,
    g_nn: DMatrix<f64>,
    g_nt: DMatrix<f64>,
    g_tn: DMatrix<f64>,
    g_tt: DMatrix<f64>,
}

fn g_blocks(model: &MechModel) -> GBlocks {
    let g_n = model.w_n().transpose() * model.mass_inv();
    let g_t = model.w_t().transpose() * model.mass_inv();
    let g_nn = &g_n * model.w_n();
    let g_nt = &g_n * model.w_t();
    let g_tn = &g_t * model.w_n();
    let g_tt = &g_t * model.w_t();
    GBlocks {
        g_n,
        g_t,
        g_nn,
        g_nt,
        g_tn,
        g_tt,
    }
}

/// Friction-row data shared by all three layouts:
/// `gamma_L dt` row and the `Lambda_R dt` identity row.
struct FrictionRows {
    /// `-(G_TN + G_TT mu)`
    a_t_n: DMatrix<f64>,
    /// `G_TT`
    a_t_l: DMatrix<f64>,
    /// `-gamma_T dt - G_T h dt^2`
    b_t: DVector<f64>,
}

fn friction_rows(
    model: &MechModel,
    state: &SystemState,
    g: &GBlocks,
    mu: &DVector<f64>,
    dt: f64,
) -> FrictionRows {
    let h = model.h_vector(&state.q, &state.u);
    let gamma_a = model.gamma_t(&state.u);
    let mu_diag = DMatrix::from_diagonal(mu);
    let a_t_n = -(&g.g_tn + &g.g_tt * &mu_diag);
    let b_t = -gamma_a * dt - (&g.g_t * &h) * dt * dt;
    FrictionRows {
        a_t_n,
        a_t_l: g.g_tt.clone(),
        b_t,
    }
}

/// Normal-row kinematic offset `g_N + W_N' u dt + G_N h dt^2 + w_hat_N dt`.
fn normal_offset(model: &MechModel, state: &SystemState, g: &GBlocks, dt: f64) -> DVector<f64> {
    let h = model.h_vector(&state.q, &state.u);
    model.gaps(&state.q)
        + model.w_n().transpose() * &state.u * dt
        + (&g.g_n * &h) * dt * dt
        + model.w_hat_n() * dt
}

/// Rigid-contact step LCP; degenerates to the friction-only form when the
/// normal forces are prescribed.
pub fn assemble_rigid_lcp(model: &MechModel, state: &SystemState, dt: f64) -> Result<AssembledLcp> {
    if model.contact_kind() != ContactKind::Rigid {
        return Err(FricdynError::InvalidModel(
            "rigid assembly requires a rigid-contact model".into(),
        ));
    }
    if let Some(fn_prescribed) = model.prescribed_normal() {
        return assemble_prescribed(model, state, dt, fn_prescribed.clone());
    }
    assemble_full(model, state, dt, BlockLayout::Rigid)
}

/// Spring-contact step LCP (Omega_N row carries `I/dt^2` against the
/// impulse-scaled unknown, which is just `lambda_N` written in those units).
pub fn assemble_spring_lcp(model: &MechModel, state: &SystemState, dt: f64) -> Result<AssembledLcp> {
    if model.contact_kind() != ContactKind::Spring {
        return Err(FricdynError::InvalidModel(
            "spring assembly requires a spring-contact model".into(),
        ));
    }
    assemble_full(model, state, dt, BlockLayout::Spring)
}

/// Dispatch on the model's contact realization.
pub fn assemble_step_lcp(model: &MechModel, state: &SystemState, dt: f64) -> Result<AssembledLcp> {
    match model.contact_kind() {
        ContactKind::Rigid => assemble_rigid_lcp(model, state, dt),
        ContactKind::Spring => assemble_spring_lcp(model, state, dt),
    }
}

fn assemble_full(
    model: &MechModel,
    state: &SystemState,
    dt: f64,
    layout: BlockLayout,
) -> Result<AssembledLcp> {
    if dt <= 0.0 {
        return Err(FricdynError::InvalidConfig("dt must be positive".into()));
    }
    let nc = model.n_contacts();
    let g = g_blocks(model);
    let mu = model.mu_at(&model.gamma_t(&state.u));
    let mu_diag = DMatrix::from_diagonal(&mu);
    let fr = friction_rows(model, state, &g, &mu, dt);
    let offset = normal_offset(model, state, &g, dt);

    let n = 3 * nc;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);

    let (a_nn, a_nl, b_n) = match layout {
        BlockLayout::Rigid => (
            &g.g_nn + &g.g_nt * &mu_diag,
            -g.g_nt.clone(),
            offset.clone(),
        ),
        BlockLayout::Spring => {
            let kc = DMatrix::from_diagonal(model.k_contact());
            (
                DMatrix::identity(nc, nc) / (dt * dt) + &kc * (&g.g_nn + &g.g_nt * &mu_diag),
                -(&kc * &g.g_nt),
                &kc * &offset,
            )
        }
        BlockLayout::PrescribedNormal => unreachable!(),
    };

    a.view_mut((0, 0), (nc, nc)).copy_from(&a_nn);
    a.view_mut((0, nc), (nc, nc)).copy_from(&a_nl);
    a.view_mut((nc, 0), (nc, nc)).copy_from(&fr.a_t_n);
    a.view_mut((nc, nc), (nc, nc)).copy_from(&fr.a_t_l);
    a.view_mut((nc, 2 * nc), (nc, nc))
        .copy_from(&DMatrix::identity(nc, nc));
    a.view_mut((2 * nc, 0), (nc, nc))
        .copy_from(&(2.0 * &mu_diag));
    a.view_mut((2 * nc, nc), (nc, nc))
        .copy_from(&(-DMatrix::<f64>::identity(nc, nc)));

    b.rows_mut(0, nc).copy_from(&b_n);
    b.rows_mut(nc, nc).copy_from(&fr.b_t);

    Ok(AssembledLcp {
        problem: LcpProblem::new(a, b)?,
        layout,
        dt,
        mu,
        prescribed: None,
        n_contacts: nc,
    })
}

fn assemble_prescribed(
    model: &MechModel,
    state: &SystemState,
    dt: f64,
    normal: DVector<f64>,
) -> Result<AssembledLcp> {
    if dt <= 0.0 {
        return Err(FricdynError::InvalidConfig("dt must be positive".into()));
    }
    let nc = model.n_contacts();
    let g = g_blocks(model);
    let mu = model.mu_at(&model.gamma_t(&state.u));
    let mu_diag = DMatrix::from_diagonal(&mu);
    let fr = friction_rows(model, state, &g, &mu, dt);

    let n = 2 * nc;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);

    a.view_mut((0, 0), (nc, nc)).copy_from(&fr.a_t_l);
    a.view_mut((0, nc), (nc, nc))
        .copy_from(&DMatrix::identity(nc, nc));
    a.view_mut((nc, 0), (nc, nc))
        .copy_from(&(-DMatrix::<f64>::identity(nc, nc)));

    // Lambda_N dt = F_n dt^2 folded into the offset.
    let lam_n_dt = &normal * dt * dt;
    let b_t = &fr.b_t + &fr.a_t_n * &lam_n_dt;
    b.rows_mut(0, nc).copy_from(&b_t);
    b.rows_mut(nc, nc).copy_from(&(2.0 * &mu_diag * &lam_n_dt));

    Ok(AssembledLcp {
        problem: LcpProblem::new(a, b)?,
        layout: BlockLayout::PrescribedNormal,
        dt,
        mu,
        prescribed: Some(normal),
        n_contacts: nc,
    })
}

impl AssembledLcp {
    pub fn n_contacts(&self) -> usize {
        self.n_contacts
    }

    /// Reads physical force/velocity quantities back out of an LCP solution.
    pub fn extract(&self, sol: &LcpSolution) -> ContactSolution {
        let nc = self.n_contacts;
        let dt = self.dt;
        let dt2 = dt * dt;
        let stats = ComplementarityStats::of(&self.problem, &sol.x, &sol.y);
        match self.layout {
            BlockLayout::Rigid | BlockLayout::Spring => {
                let lambda_n = DVector::from_fn(nc, |j, _| sol.x[j] / dt2);
                let lambda_l = DVector::from_fn(nc, |j, _| sol.x[nc + j] / dt2);
                let gamma_r = DVector::from_fn(nc, |j, _| sol.x[2 * nc + j] / dt);
                let gamma_l = DVector::from_fn(nc, |j, _| sol.y[nc + j] / dt);
                let lambda_r = DVector::from_fn(nc, |j, _| sol.y[2 * nc + j] / dt2);
                let lambda_t =
                    DVector::from_fn(nc, |j, _| self.mu[j] * lambda_n[j] - lambda_l[j]);
                ContactSolution {
                    lambda_n,
                    lambda_t,
                    lambda_r,
                    lambda_l,
                    gamma_r,
                    gamma_l,
                    comp_worst: stats.worst(),
                }
            }
            BlockLayout::PrescribedNormal => {
                let lambda_n = self.prescribed.clone().expect("prescribed layout");
                let lambda_l = DVector::from_fn(nc, |j, _| sol.x[j] / dt2);
                let gamma_r = DVector::from_fn(nc, |j, _| sol.x[nc + j] / dt);
                let gamma_l = DVector::from_fn(nc, |j, _| sol.y[j] / dt);
                let lambda_r = DVector::from_fn(nc, |j, _| sol.y[nc + j] / dt2);
                let lambda_t =
                    DVector::from_fn(nc, |j, _| self.mu[j] * lambda_n[j] - lambda_l[j]);
                ContactSolution {
                    lambda_n,
                    lambda_t,
                    lambda_r,
                    lambda_l,
                    gamma_r,
                    gamma_l,
                    comp_worst: stats.worst(),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::friction::FrictionLaw;
    use crate::contact::model::{model_i, model_ii, ModelIParams, ModelIiParams};
    use crate::lcp::solve_pivoting;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    fn rigid_two_dof() -> MechModel {
        // Toy 2-DoF rigid contact: normal along the second axis, tangential
        // along the first, no prescribed force.
        MechModel::new(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            DVector::zeros(2),
            ContactKind::Rigid,
            DVector::zeros(1),
            DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            DVector::zeros(1),
            DVector::from_element(1, -1.0),
            vec![FrictionLaw::Constant { mu: 0.0 }],
            None,
        )
        .unwrap()
    }

    #[test]
    fn model_i_degenerates_to_friction_block() {
        let model = model_i(&ModelIParams::default()).unwrap();
        let state = SystemState::initial(
            &model,
            DVector::from_element(1, 0.0),
            DVector::from_element(1, 0.0),
        )
        .unwrap();
        let asm = assemble_rigid_lcp(&model, &state, 0.01).unwrap();
        assert_eq!(asm.layout, BlockLayout::PrescribedNormal);
        let a = asm.problem.a();
        // G_TT = 1/m = 1
        assert_relative_eq!(a[(0, 0)], 1.0);
        assert_relative_eq!(a[(0, 1)], 1.0);
        assert_relative_eq!(a[(1, 0)], -1.0);
        assert_relative_eq!(a[(1, 1)], 0.0);
    }

    #[test]
    fn zero_friction_decouples_blocks() {
        let model = rigid_two_dof();
        let state = SystemState::initial(
            &model,
            DVector::from_column_slice(&[0.0, 0.5]),
            DVector::from_column_slice(&[0.0, 0.0]),
        )
        .unwrap();
        let asm = assemble_rigid_lcp(&model, &state, 0.01).unwrap();
        let a = asm.problem.a();
        // mu = 0: normal block holds G_NN alone, its coupling is -G_NT, and
        // the Lambda_R row loses its Lambda_N column.
        assert_relative_eq!(a[(0, 0)], 1.0); // G_NN = 1/m
        assert_relative_eq!(a[(0, 1)], 0.0); // G_NT = 0 for orthogonal directions
        assert_relative_eq!(a[(2, 0)], 0.0); // 2 mu = 0
    }

    #[test]
    fn lambda_r_row_reproduces_identity() {
        // For any solved step LCP: y3 = 2 mu x1 - x2 identically.
        let model = model_ii(&ModelIiParams::default()).unwrap();
        let state = SystemState::initial(
            &model,
            DVector::from_column_slice(&[-1.0, -1.0]),
            DVector::from_column_slice(&[1.0, 1.0]),
        )
        .unwrap();
        let asm = assemble_spring_lcp(&model, &state, 1e-3).unwrap();
        let sol = solve_pivoting(&asm.problem, 1e-9, 500).unwrap();
        let c = asm.extract(&sol);
        for j in 0..1 {
            assert_relative_eq!(
                c.lambda_r[j] + c.lambda_l[j],
                2.0 * asm.mu[j] * c.lambda_n[j],
                epsilon = 1e-8,
            );
        }
    }

    #[test]
    fn model_ii_g_nn_block() {
        let model = model_ii(&ModelIiParams::default()).unwrap();
        let state = SystemState::initial(
            &model,
            DVector::from_column_slice(&[0.0, -0.1]),
            DVector::zeros(2),
        )
        .unwrap();
        let dt = 1e-3;
        let asm = assemble_spring_lcp(&model, &state, dt).unwrap();
        // A11 = 1/dt^2 + k_c (G_NN + G_NT mu) with G_NN = 1/5, G_NT = 0.
        let expected = 1.0 / (dt * dt) + 500.0 / 5.0;
        assert_relative_eq!(asm.problem.a()[(0, 0)], expected, epsilon = 1e-9);
    }

    #[test]
    fn separated_state_yields_zero_contact_force() {
        let model = model_ii(&ModelIiParams {
            preload: 0.0,
            ..ModelIiParams::default()
        })
        .unwrap();
        // Wide open gap moving away from the belt.
        let state = SystemState::initial(
            &model,
            DVector::from_column_slice(&[0.0, 2.0]),
            DVector::from_column_slice(&[0.0, 1.0]),
        )
        .unwrap();
        let asm = assemble_spring_lcp(&model, &state, 1e-3).unwrap();
        let sol = solve_pivoting(&asm.problem, 1e-9, 500).unwrap();
        let c = asm.extract(&sol);
        assert!(c.lambda_n[0].abs() < 1e-12);
        assert_eq!(c.decision(0), Regime::Separated);
    }

    #[test]
    fn zero_contact_stiffness_forces_zero_normal_force() {
        let model = model_ii(&ModelIiParams {
            k_contact: 0.0,
            ..ModelIiParams::default()
        })
        .unwrap();
        let state = SystemState::initial(
            &model,
            DVector::from_column_slice(&[0.0, -1.0]),
            DVector::zeros(2),
        )
        .unwrap();
        let asm = assemble_spring_lcp(&model, &state, 1e-3).unwrap();
        let sol = solve_pivoting(&asm.problem, 1e-9, 500).unwrap();
        let c = asm.extract(&sol);
        assert!(c.lambda_n[0].abs() < 1e-12);
    }
}
