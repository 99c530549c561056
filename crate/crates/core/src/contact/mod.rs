//! Mechanical models, friction laws, and the contact LCP assemblies.

pub mod assemble;
pub mod friction;
pub mod model;
pub mod stability;

use serde::{Deserialize, Serialize};

pub use assemble::{
    assemble_rigid_lcp, assemble_spring_lcp, assemble_step_lcp, AssembledLcp, BlockLayout,
    ContactSolution,
};
pub use friction::FrictionLaw;
pub use model::{
    model_i, model_ii, ContactKind, MechModel, ModelConfig, ModelIParams, ModelIiParams,
    SystemState,
};
pub use stability::{critical_friction, effective_stiffness, eigen_stability, max_growth_rate};

/// Stick detection threshold on relative tangential velocities (diagnostic
/// flagging only; the solvers never branch on it).
pub const V_EPS: f64 = 1e-6;

/// Per-contact motion regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Stick,
    Slip,
    Separated,
}

impl Regime {
    /// CSV encoding: 0 stick, 1 slip, 2 separated.
    pub fn code(&self) -> u8 {
        match self {
            Regime::Stick => 0,
            Regime::Slip => 1,
            Regime::Separated => 2,
        }
    }
}

/// Friction coefficient of `law` at relative velocity `v_rel`.
pub fn friction_coefficient(law: &FrictionLaw, v_rel: f64) -> f64 {
    law.coefficient(v_rel)
}
