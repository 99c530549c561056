//! The four PINN time-integration schemes built on implicit Runge-Kutta
//! reconstruction: single (pivoting LCP), dual (network LCP), and their
//! advanced variants with stage-node force interpolation.

pub mod step;
pub mod tableau;

pub use step::{
    interpolate_forces, pinn_step_core, ContactForces, PinnStepConfig, StageForces, StepNetwork,
};
pub use tableau::{irk_coefficients, ButcherTableau};

use crate::contact::{assemble_step_lcp, MechModel, Regime, SystemState};
use crate::error::{FricdynError, Result};
use crate::lcp_pinn::{LcpPinnConfig, LcpPinnSolver};
use crate::stepping::{finish_state, LcpSolve, PivotingSolver, Trajectory};

/// Scheme selector for [`pinn_simulate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinnScheme {
    Single,
    Dual,
    AdvancedSingle,
    AdvancedDual,
}

impl PinnScheme {
    pub fn is_dual(&self) -> bool {
        matches!(self, PinnScheme::Dual | PinnScheme::AdvancedDual)
    }

    pub fn is_advanced(&self) -> bool {
        matches!(self, PinnScheme::AdvancedSingle | PinnScheme::AdvancedDual)
    }

    pub fn tag(&self, order: usize) -> String {
        match self {
            PinnScheme::Single => format!("single_pinn_{order}"),
            PinnScheme::Dual => format!("dual_pinn_{order}"),
            PinnScheme::AdvancedSingle => format!("adv_single_pinn_{order}"),
            PinnScheme::AdvancedDual => format!("adv_dual_pinn_{order}"),
        }
    }
}

/// Full configuration of a PINN simulation run.
#[derive(Debug, Clone)]
pub struct PinnSimConfig {
    pub scheme: PinnScheme,
    pub step: PinnStepConfig,
    /// LCP network settings (dual schemes only).
    pub lcp: LcpPinnConfig,
    /// Pivoting settings (single schemes only).
    pub pivot: PivotingSolver,
}

impl PinnSimConfig {
    pub fn new(scheme: PinnScheme, order: usize) -> Result<Self> {
        Ok(Self {
            scheme,
            step: PinnStepConfig::new(irk_coefficients(order)?),
            lcp: LcpPinnConfig::default(),
            pivot: PivotingSolver::default(),
        })
    }

    pub fn order(&self) -> usize {
        self.step.tableau.stages()
    }
}

/// One PINN step with externally supplied stage forces (cold network). The
/// returned state carries the last stage column as its force bookkeeping.
pub fn pinn_step(
    model: &MechModel,
    state: &SystemState,
    dt: f64,
    forces: &StageForces,
    cfg: &PinnStepConfig,
) -> Result<SystemState> {
    let mut netstate = StepNetwork::new();
    let (q1, u1, _) = pinn_step_core(model, state, dt, forces, cfg, &mut netstate)?;
    let nc = model.n_contacts();
    let last = forces.stages() - 1;
    let c = crate::contact::ContactSolution {
        lambda_n: nalgebra::DVector::from_fn(nc, |j, _| forces.normal[(j, last)]),
        lambda_t: nalgebra::DVector::from_fn(nc, |j, _| forces.tangential[(j, last)]),
        lambda_r: nalgebra::DVector::zeros(nc),
        lambda_l: nalgebra::DVector::zeros(nc),
        gamma_r: nalgebra::DVector::zeros(nc),
        gamma_l: nalgebra::DVector::zeros(nc),
        comp_worst: 0.0,
    };
    Ok(finish_state(model, state.t + dt, q1, u1, &c))
}

/// Runs one of the four PINN schemes over a uniform grid.
///
/// Each step solves the mixed-level LCP first (pivoting or LCP network
/// depending on the scheme), derives the per-contact stick/slip/separation
/// decision from that solution, and feeds the step network either constant
/// stage forces or forces interpolated linearly between the previous and
/// current step solutions (advanced schemes).
pub fn pinn_simulate(
    model: &MechModel,
    initial: &SystemState,
    t_end: f64,
    dt: f64,
    cfg: &PinnSimConfig,
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
    let mut pivot = cfg.pivot.clone();
    let mut lcp_net = LcpPinnSolver::new(cfg.lcp.clone());
    let mut netstate = StepNetwork::new();
    let mut prev_forces: Option<ContactForces> = None;

    let mut states = Vec::with_capacity(n_steps + 1);
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut comp = Vec::with_capacity(n_steps);
    states.push(initial.clone());
    times.push(initial.t);

    for k in 0..n_steps {
        let current = states.last().unwrap();
        let step = (|| -> Result<(SystemState, f64)> {
            let asm = assemble_step_lcp(model, current, dt)?;
            let sol = if cfg.scheme.is_dual() {
                lcp_net.solve(&asm.problem)?
            } else {
                pivot.solve(&asm.problem)?
            };
            let c = asm.extract(&sol);
            let curr = ContactForces {
                normal: c.lambda_n.clone(),
                tangential: c.lambda_t.clone(),
            };
            let mut stage = if cfg.scheme.is_advanced() {
                let prev = prev_forces.as_ref().unwrap_or(&curr);
                interpolate_forces(prev, &curr, &cfg.step.tableau.c)
            } else {
                StageForces::constant(&curr, cfg.step.tableau.stages())
            };
            for (j, s) in stage.stick.iter_mut().enumerate() {
                *s = c.decision(j) == Regime::Stick;
            }
            let (q1, u1, _) =
                pinn_step_core(model, current, dt, &stage, &cfg.step, &mut netstate)?;
            prev_forces = Some(curr);
            Ok((finish_state(model, current.t + dt, q1, u1, &c), c.comp_worst))
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
        method_tag: cfg.scheme.tag(cfg.order()),
        dt,
        comp_residuals: comp,
    })
}
