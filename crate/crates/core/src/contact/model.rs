use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::contact::friction::FrictionLaw;
use crate::contact::{Regime, V_EPS};
use crate::error::{FricdynError, Result};

/// Contact realization at the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactKind {
    /// Complementarity between the gap g_N and the force lambda_N.
    Rigid,
    /// Complementarity between Omega_N = k_c g_N + lambda_N and lambda_N.
    Spring,
}

/// Immutable mechanical model: smooth structure plus contact geometry.
///
/// The smooth force vector follows the sign convention
/// `M qdd = h + W_N lambda_N + W_T lambda_T` with
/// `h = -Cs u - Ks q + f_e`.
#[derive(Debug, Clone)]
pub struct MechModel {
    mass: DMatrix<f64>,
    mass_inv: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    damping: DMatrix<f64>,
    f_ext: DVector<f64>,
    contact: ContactKind,
    k_contact: DVector<f64>,
    w_n: DMatrix<f64>,
    w_t: DMatrix<f64>,
    w_hat_n: DVector<f64>,
    w_hat_t: DVector<f64>,
    friction: Vec<FrictionLaw>,
    /// Prescribed normal forces (Model I style); contact rows drop out of the
    /// assembled LCP when present.
    prescribed_normal: Option<DVector<f64>>,
}

#[allow(clippy::too_many_arguments)]
impl MechModel {
    pub fn new(
        mass: DMatrix<f64>,
        stiffness: DMatrix<f64>,
        damping: DMatrix<f64>,
        f_ext: DVector<f64>,
        contact: ContactKind,
        k_contact: DVector<f64>,
        w_n: DMatrix<f64>,
        w_t: DMatrix<f64>,
        w_hat_n: DVector<f64>,
        w_hat_t: DVector<f64>,
        friction: Vec<FrictionLaw>,
        prescribed_normal: Option<DVector<f64>>,
    ) -> Result<Self> {
        let n = mass.nrows();
        if !mass.is_square() || stiffness.shape() != (n, n) || damping.shape() != (n, n) {
            return Err(FricdynError::InvalidModel(
                "mass, stiffness and damping must be square with equal size".into(),
            ));
        }
        if f_ext.len() != n {
            return Err(FricdynError::InvalidModel(
                "external force length must match the DoF count".into(),
            ));
        }
        let nc = w_n.ncols();
        if w_n.nrows() != n || w_t.shape() != (n, nc) {
            return Err(FricdynError::InvalidModel(
                "constraint direction matrices must be n_dof x n_contacts".into(),
            ));
        }
        if w_hat_n.len() != nc || w_hat_t.len() != nc || k_contact.len() != nc {
            return Err(FricdynError::InvalidModel(
                "per-contact vectors must have n_contacts entries".into(),
            ));
        }
        if friction.len() != nc {
            return Err(FricdynError::InvalidModel(
                "one friction law per contact required".into(),
            ));
        }
        for law in &friction {
            law.validate()?;
        }
        if k_contact.iter().any(|&k| k < 0.0) {
            return Err(FricdynError::InvalidModel(
                "contact stiffness must be nonnegative".into(),
            ));
        }
        if let Some(pn) = &prescribed_normal {
            if pn.len() != nc {
                return Err(FricdynError::InvalidModel(
                    "prescribed normal force needs one entry per contact".into(),
                ));
            }
        }
        // symmetric positive definite mass
        let sym_err = (&mass - mass.transpose()).amax();
        if sym_err > 1e-12 * mass.amax().max(1.0) {
            return Err(FricdynError::InvalidModel("mass matrix must be symmetric".into()));
        }
        let chol = mass
            .clone()
            .cholesky()
            .ok_or(FricdynError::SingularMass)?;
        let mass_inv = chol.inverse();
        Ok(Self {
            mass,
            mass_inv,
            stiffness,
            damping,
            f_ext,
            contact,
            k_contact,
            w_n,
            w_t,
            w_hat_n,
            w_hat_t,
            friction,
            prescribed_normal,
        })
    }

    pub fn n_dof(&self) -> usize {
        self.mass.nrows()
    }

    pub fn n_contacts(&self) -> usize {
        self.w_n.ncols()
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn mass_inv(&self) -> &DMatrix<f64> {
        &self.mass_inv
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn damping(&self) -> &DMatrix<f64> {
        &self.damping
    }

    pub fn f_ext(&self) -> &DVector<f64> {
        &self.f_ext
    }

    pub fn contact_kind(&self) -> ContactKind {
        self.contact
    }

    pub fn k_contact(&self) -> &DVector<f64> {
        &self.k_contact
    }

    pub fn w_n(&self) -> &DMatrix<f64> {
        &self.w_n
    }

    pub fn w_t(&self) -> &DMatrix<f64> {
        &self.w_t
    }

    pub fn w_hat_n(&self) -> &DVector<f64> {
        &self.w_hat_n
    }

    pub fn w_hat_t(&self) -> &DVector<f64> {
        &self.w_hat_t
    }

    pub fn friction(&self) -> &[FrictionLaw] {
        &self.friction
    }

    pub fn prescribed_normal(&self) -> Option<&DVector<f64>> {
        self.prescribed_normal.as_ref()
    }

    /// Belt transport speed seen by contact `j` (`w_hat_t` houses `-v0`).
    pub fn belt_speed(&self, j: usize) -> f64 {
        -self.w_hat_t[j]
    }

    /// Smooth force vector `h = -Cs u - Ks q + f_e`.
    pub fn h_vector(&self, q: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        -&self.damping * u - &self.stiffness * q + &self.f_ext
    }

    /// Normal gaps `g_N = W_N' q`.
    pub fn gaps(&self, q: &DVector<f64>) -> DVector<f64> {
        self.w_n.transpose() * q
    }

    /// Relative tangential velocities `gamma_T = W_T' u + w_hat_T`.
    pub fn gamma_t(&self, u: &DVector<f64>) -> DVector<f64> {
        self.w_t.transpose() * u + &self.w_hat_t
    }

    /// Friction coefficients evaluated at the given relative velocities.
    pub fn mu_at(&self, gamma_t: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n_contacts(), |j, _| {
            self.friction[j].coefficient(gamma_t[j])
        })
    }
}

/// Dynamic state of the system at one instant, with per-contact bookkeeping.
#[derive(Debug, Clone)]
pub struct SystemState {
    pub t: f64,
    pub q: DVector<f64>,
    pub u: DVector<f64>,
    pub lambda_n: DVector<f64>,
    pub lambda_t: DVector<f64>,
    pub g_n: DVector<f64>,
    pub gamma_t: DVector<f64>,
    pub regime: Vec<Regime>,
}

impl SystemState {
    /// State at `t = 0` with zero contact forces; regimes are inferred
    /// kinematically and refined by the first solver step.
    pub fn initial(model: &MechModel, q: DVector<f64>, u: DVector<f64>) -> Result<Self> {
        if q.len() != model.n_dof() || u.len() != model.n_dof() {
            return Err(FricdynError::DimensionMismatch(format!(
                "initial condition must have {} entries",
                model.n_dof()
            )));
        }
        let g_n = model.gaps(&q);
        let gamma_t = model.gamma_t(&u);
        let nc = model.n_contacts();
        let regime = (0..nc)
            .map(|j| {
                let separated =
                    model.prescribed_normal().is_none() && g_n[j] > 0.0;
                if separated {
                    Regime::Separated
                } else if gamma_t[j].abs() <= V_EPS {
                    Regime::Stick
                } else {
                    Regime::Slip
                }
            })
            .collect();
        Ok(Self {
            t: 0.0,
            q,
            u,
            lambda_n: DVector::zeros(nc),
            lambda_t: DVector::zeros(nc),
            g_n,
            gamma_t,
            regime,
        })
    }
}

/// Parameters of the single mass-belt oscillator with prescribed compression.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelIParams {
    pub mass: f64,
    pub stiffness: f64,
    pub damping: f64,
    pub normal_force: f64,
    pub belt_speed: f64,
    pub friction: FrictionLaw,
}

impl Default for ModelIParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            stiffness: 1.0,
            damping: 0.0,
            normal_force: 1.0,
            belt_speed: 1.0,
            friction: FrictionLaw::rational(0.1, 1.0),
        }
    }
}

/// One-DoF slider on a moving belt, rigid contact, normal force prescribed.
pub fn model_i(p: &ModelIParams) -> Result<MechModel> {
    MechModel::new(
        DMatrix::from_element(1, 1, p.mass),
        DMatrix::from_element(1, 1, p.stiffness),
        DMatrix::from_element(1, 1, p.damping),
        DVector::zeros(1),
        ContactKind::Rigid,
        DVector::zeros(1),
        DMatrix::zeros(1, 1),
        DMatrix::from_element(1, 1, 1.0),
        DVector::zeros(1),
        DVector::from_element(1, -p.belt_speed),
        vec![p.friction],
        Some(DVector::from_element(1, p.normal_force)),
    )
}

/// Parameters of the two-DoF slider-belt model with an inclined spring and a
/// contact spring.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelIiParams {
    pub mass: f64,
    pub k1: f64,
    pub k3: f64,
    pub k_contact: f64,
    pub c1: f64,
    pub c2: f64,
    pub preload: f64,
    pub belt_speed: f64,
    pub friction: FrictionLaw,
}

impl Default for ModelIiParams {
    fn default() -> Self {
        Self {
            mass: 5.0,
            k1: 1000.0,
            k3: 600.0,
            k_contact: 500.0,
            c1: 0.0,
            c2: 0.0,
            preload: 100.0,
            belt_speed: 1.0,
            friction: FrictionLaw::Constant { mu: 0.4 },
        }
    }
}

/// Two-DoF slider-belt model: horizontal spring k1, inclined spring k3 at 45
/// degrees coupling the two directions, spring contact k_c against the belt.
/// The preload acts toward the belt (negative y), the gap is g_N = y.
pub fn model_ii(p: &ModelIiParams) -> Result<MechModel> {
    let half = 0.5 * p.k3;
    let stiffness = DMatrix::from_row_slice(2, 2, &[p.k1 + half, -half, -half, half]);
    MechModel::new(
        DMatrix::from_diagonal(&DVector::from_column_slice(&[p.mass, p.mass])),
        stiffness,
        DMatrix::from_diagonal(&DVector::from_column_slice(&[p.c1, p.c2])),
        DVector::from_column_slice(&[0.0, -p.preload]),
        ContactKind::Spring,
        DVector::from_element(1, p.k_contact),
        DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
        DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
        DVector::zeros(1),
        DVector::from_element(1, -p.belt_speed),
        vec![p.friction],
        None,
    )
}

/// Model selector loadable from experiment config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Model1(ModelIParams),
    Model2(ModelIiParams),
}

impl ModelConfig {
    pub fn build(&self) -> Result<MechModel> {
        match self {
            ModelConfig::Model1(p) => model_i(p),
            ModelConfig::Model2(p) => model_ii(p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn h_vector_reduces_to_external_force_at_rest() {
        let model = model_ii(&ModelIiParams::default()).unwrap();
        let zero = DVector::zeros(2);
        let h = model.h_vector(&zero, &zero);
        assert_eq!(h, model.f_ext().clone());
    }

    #[test]
    fn h_vector_single_spring() {
        let model = model_i(&ModelIParams::default()).unwrap();
        let h = model.h_vector(
            &DVector::from_element(1, 1.0),
            &DVector::from_element(1, 0.0),
        );
        assert_relative_eq!(h[0], -1.0);
    }

    #[test]
    fn h_vector_model_ii_hand_evaluated() {
        // q = (1, 1), u = 0, defaults k1=1000, k3=600, F_p=100:
        // h1 = -(k1 + k3/2) + k3/2        = -1000
        // h2 = k3/2 - k3/2 - F_p          = -100
        let model = model_ii(&ModelIiParams::default()).unwrap();
        let h = model.h_vector(
            &DVector::from_column_slice(&[1.0, 1.0]),
            &DVector::zeros(2),
        );
        assert_relative_eq!(h[0], -1000.0);
        assert_relative_eq!(h[1], -100.0);
    }

    #[test]
    fn model_ii_geometry() {
        let model = model_ii(&ModelIiParams::default()).unwrap();
        assert_eq!(model.n_dof(), 2);
        assert_eq!(model.n_contacts(), 1);
        let q = DVector::from_column_slice(&[0.3, -0.2]);
        assert_relative_eq!(model.gaps(&q)[0], -0.2);
        let u = DVector::from_column_slice(&[0.4, 9.9]);
        assert_relative_eq!(model.gamma_t(&u)[0], 0.4 - 1.0);
        assert_relative_eq!(model.belt_speed(0), 1.0);
    }

    #[test]
    fn invalid_mass_is_rejected() {
        let bad = MechModel::new(
            DMatrix::from_element(1, 1, 0.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
            DVector::zeros(1),
            ContactKind::Rigid,
            DVector::zeros(1),
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, 1.0),
            DVector::zeros(1),
            DVector::zeros(1),
            vec![FrictionLaw::Constant { mu: 0.1 }],
            None,
        );
        assert!(bad.is_err());
    }
}
