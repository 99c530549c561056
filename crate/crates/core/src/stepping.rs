//! Conventional mixed-level time stepping and its RK4 variant.
//!
//! Each step assembles the contact-appropriate LCP at the step's start,
//! solves it for the contact impulses, and advances the smooth state. The
//! conventional update is the semi-implicit rule
//! `du = M^-1 (h dt + W_N Lambda_N + W_T Lambda_T)`, `dq = (u + du) dt`;
//! the RK4 variant holds the step's contact forces fixed and advances
//! `M qdd = h(q, u) + W_N lambda_N + W_T lambda_T` with classical RK4.
//! No event detection anywhere: regime flags are diagnostic, derived after
//! the fact from the state and the step's LCP.

use std::io::Write as _;
use std::path::Path;

use nalgebra::DVector;

use crate::contact::{assemble_step_lcp, ContactSolution, MechModel, Regime, SystemState, V_EPS};
use crate::error::{FricdynError, Result};
use crate::lcp::{solve_pivoting, LcpProblem, LcpSolution};

/// Step-level LCP backend. The pivoting solver is stateless; the PINN
/// solver warm-starts its network across calls.
pub trait LcpSolve {
    fn solve(&mut self, p: &LcpProblem) -> Result<LcpSolution>;
}

/// Deterministic Lemke backend.
#[derive(Debug, Clone)]
pub struct PivotingSolver {
    pub tol: f64,
    pub max_pivots: usize,
}

impl Default for PivotingSolver {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_pivots: 10_000,
        }
    }
}

impl LcpSolve for PivotingSolver {
    fn solve(&mut self, p: &LcpProblem) -> Result<LcpSolution> {
        solve_pivoting(p, self.tol, self.max_pivots)
    }
}

/// Uniformly sampled state history of one simulation run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SystemState>,
    pub method_tag: String,
    pub dt: f64,
    /// Worst LCP complementarity violation of each produced step.
    pub comp_residuals: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn n_dof(&self) -> usize {
        self.states.first().map_or(0, |s| s.q.len())
    }

    pub fn n_contacts(&self) -> usize {
        self.states.first().map_or(0, |s| s.lambda_n.len())
    }

    /// Per-contact regime code sequence (0 stick, 1 slip, 2 separated).
    pub fn regime_codes(&self, contact: usize) -> Vec<u8> {
        self.states
            .iter()
            .map(|s| s.regime[contact].code())
            .collect()
    }

    /// Columns: t, q_1.., u_1.., lambda_N_1.., lambda_T_1.., regime_1..
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let nd = self.n_dof();
        let nc = self.n_contacts();
        let mut header = vec!["t".to_string()];
        header.extend((1..=nd).map(|i| format!("q_{i}")));
        header.extend((1..=nd).map(|i| format!("u_{i}")));
        header.extend((1..=nc).map(|i| format!("lambda_N_{i}")));
        header.extend((1..=nc).map(|i| format!("lambda_T_{i}")));
        header.extend((1..=nc).map(|i| format!("regime_{i}")));
        writeln!(out, "{}", header.join(","))?;
        for (k, s) in self.states.iter().enumerate() {
            let mut row = vec![format!("{:.12e}", self.times[k])];
            row.extend(s.q.iter().map(|v| format!("{v:.12e}")));
            row.extend(s.u.iter().map(|v| format!("{v:.12e}")));
            row.extend(s.lambda_n.iter().map(|v| format!("{v:.12e}")));
            row.extend(s.lambda_t.iter().map(|v| format!("{v:.12e}")));
            row.extend(s.regime.iter().map(|r| r.code().to_string()));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Diagnostic regime flags: separation from the step's contact force,
/// stick from the state-level relative velocity against [`V_EPS`].
pub fn classify_regimes(
    model: &MechModel,
    c: &ContactSolution,
    gamma_t: &DVector<f64>,
) -> Vec<Regime> {
    let force_scale = 1.0
        + model
            .f_ext()
            .amax()
            .max(model.prescribed_normal().map_or(0.0, |p| p.amax()));
    (0..model.n_contacts())
        .map(|j| {
            let separated =
                model.prescribed_normal().is_none() && c.lambda_n[j] <= 1e-9 * force_scale;
            if separated {
                Regime::Separated
            } else if gamma_t[j].abs() <= V_EPS {
                Regime::Stick
            } else {
                Regime::Slip
            }
        })
        .collect()
}

pub(crate) fn finish_state(
    model: &MechModel,
    t: f64,
    q: DVector<f64>,
    u: DVector<f64>,
    c: &ContactSolution,
) -> SystemState {
    let g_n = model.gaps(&q);
    let gamma_t = model.gamma_t(&u);
    let regime = classify_regimes(model, c, &gamma_t);
    SystemState {
        t,
        q,
        u,
        lambda_n: c.lambda_n.clone(),
        lambda_t: c.lambda_t.clone(),
        g_n,
        gamma_t,
        regime,
    }
}

/// Solves the step LCP and returns the extracted contact quantities.
pub fn solve_step_lcp(
    model: &MechModel,
    state: &SystemState,
    dt: f64,
    lcp: &mut dyn LcpSolve,
) -> Result<ContactSolution> {
    let asm = assemble_step_lcp(model, state, dt)?;
    let sol = lcp.solve(&asm.problem)?;
    Ok(asm.extract(&sol))
}

/// One semi-implicit Moreau step.
pub fn step_conventional(
    model: &MechModel,
    state: &SystemState,
    dt: f64,
    lcp: &mut dyn LcpSolve,
) -> Result<SystemState> {
    let c = solve_step_lcp(model, state, dt, lcp)?;
    Ok(advance_conventional(model, state, dt, &c))
}

/// The semi-implicit update applied to already-solved contact impulses.
pub fn advance_conventional(
    model: &MechModel,
    state: &SystemState,
    dt: f64,
    c: &ContactSolution,
) -> SystemState {
    let h = model.h_vector(&state.q, &state.u);
    let imp_n = &c.lambda_n * dt;
    let imp_t = &c.lambda_t * dt;
    let du = model.mass_inv() * (h * dt + model.w_n() * imp_n + model.w_t() * imp_t);
    let u = &state.u + du;
    let q = &state.q + &u * dt;
    finish_state(model, state.t + dt, q, u, c)
}

fn rk4_advance(
    model: &MechModel,
    state: &SystemState,
    dt: f64,
    f_contact: &DVector<f64>,
    c: &ContactSolution,
) -> SystemState {
    let accel = |q: &DVector<f64>, u: &DVector<f64>| -> DVector<f64> {
        model.mass_inv() * (model.h_vector(q, u) + f_contact)
    };
    let (q0, u0) = (&state.q, &state.u);
    let k1q = u0.clone();
    let k1u = accel(q0, u0);
    let q2 = q0 + &k1q * (dt / 2.0);
    let u2 = u0 + &k1u * (dt / 2.0);
    let k2q = u2.clone();
    let k2u = accel(&q2, &u2);
    let q3 = q0 + &k2q * (dt / 2.0);
    let u3 = u0 + &k2u * (dt / 2.0);
    let k3q = u3.clone();
    let k3u = accel(&q3, &u3);
    let q4 = q0 + &k3q * dt;
    let u4 = u0 + &k3u * dt;
    let k4q = u4.clone();
    let k4u = accel(&q4, &u4);
    let q = q0 + (k1q + 2.0 * k2q + 2.0 * k3q + k4q) * (dt / 6.0);
    let u = u0 + (k1u + 2.0 * k2u + 2.0 * k3u + k4u) * (dt / 6.0);
    finish_state(model, state.t + dt, q, u, c)
}

/// One step with the LCP forces frozen while classical RK4 advances the
/// smooth dynamics.
pub fn step_rk4_lcp(
    model: &MechModel,
    state: &SystemState,
    dt: f64,
    lcp: &mut dyn LcpSolve,
) -> Result<SystemState> {
    let c = solve_step_lcp(model, state, dt, lcp)?;
    let f_contact = model.w_n() * &c.lambda_n + model.w_t() * &c.lambda_t;
    Ok(rk4_advance(model, state, dt, &f_contact, &c))
}

/// Conventional stepper selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepScheme {
    Conventional,
    Rk4Lcp,
}

impl StepScheme {
    pub fn tag(&self) -> &'static str {
        match self {
            StepScheme::Conventional => "conventional",
            StepScheme::Rk4Lcp => "rk4",
        }
    }
}

/// Iterates a stepper over a uniform grid. `t_end == initial.t` gives a
/// single-state trajectory.
pub fn simulate(
    model: &MechModel,
    initial: &SystemState,
    t_end: f64,
    dt: f64,
    scheme: StepScheme,
    lcp: &mut dyn LcpSolve,
) -> Result<Trajectory> {
    if t_end < initial.t {
        return Err(FricdynError::InvalidConfig(
            "t_end must not precede the initial time".into(),
        ));
    }
    if dt <= 0.0 {
        return Err(FricdynError::InvalidConfig("dt must be positive".into()));
    }
    let n_steps = ((t_end - initial.t) / dt).round() as usize;
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut comp = Vec::with_capacity(n_steps);
    states.push(initial.clone());
    times.push(initial.t);
    for k in 0..n_steps {
        let current = states.last().unwrap();
        let step = (|| -> Result<(SystemState, f64)> {
            let asm = assemble_step_lcp(model, current, dt)?;
            let sol = lcp.solve(&asm.problem)?;
            let c = asm.extract(&sol);
            let next = match scheme {
                StepScheme::Conventional => advance_conventional(model, current, dt, &c),
                StepScheme::Rk4Lcp => {
                    let f_contact = model.w_n() * &c.lambda_n + model.w_t() * &c.lambda_t;
                    rk4_advance(model, current, dt, &f_contact, &c)
                }
            };
            Ok((next, c.comp_worst))
        })()
        .map_err(|e| FricdynError::StepFailed {
            index: k,
            time: current.t,
            source: Box::new(e),
        })?;
        comp.push(step.1);
        times.push(step.0.t);
        states.push(step.0);
    }
    Ok(Trajectory {
        times,
        states,
        method_tag: scheme.tag().to_string(),
        dt,
        comp_residuals: comp,
    })
}
