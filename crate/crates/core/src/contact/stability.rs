//! Linearized complex eigenvalue analysis of the steadily sliding contact
//! state, used to locate the mode-coupling (flutter) threshold.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::contact::model::{ContactKind, MechModel};
use crate::error::{FricdynError, Result};

/// Effective stiffness of the sliding linearization: the structural matrix
/// augmented by the contact spring in the normal row and the friction
/// coupling `mu k_c` in the tangential row.
pub fn effective_stiffness(model: &MechModel, mu: f64) -> DMatrix<f64> {
    let n = model.n_dof();
    let mut k_eff = model.stiffness().clone();
    for j in 0..model.n_contacts() {
        let kc = model.k_contact()[j];
        let wn = DVector::from(model.w_n().column(j));
        let wt = DVector::from(model.w_t().column(j));
        let wn_t = wn.transpose();
        k_eff += kc * (&wn * &wn_t) + (mu * kc) * (&wt * &wn_t);
    }
    debug_assert_eq!(k_eff.nrows(), n);
    k_eff
}

/// Eigenvalues of the first-order form of
/// `M qdd + Cs qd + K_eff(mu) q = 0`, sorted by imaginary part.
pub fn eigen_stability(model: &MechModel, mu: f64) -> Result<Vec<Complex<f64>>> {
    if model.contact_kind() != ContactKind::Spring {
        return Err(FricdynError::InvalidModel(
            "eigen analysis applies to spring-contact models in sliding contact".into(),
        ));
    }
    let n = model.n_dof();
    let k_eff = effective_stiffness(model, mu);
    let m_inv = model.mass_inv();
    let mut a = DMatrix::<f64>::zeros(2 * n, 2 * n);
    a.view_mut((0, n), (n, n)).copy_from(&DMatrix::identity(n, n));
    a.view_mut((n, 0), (n, n)).copy_from(&(-(m_inv * &k_eff)));
    a.view_mut((n, n), (n, n))
        .copy_from(&(-(m_inv * model.damping())));
    let mut eig: Vec<Complex<f64>> = a.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|p, q| p.im.partial_cmp(&q.im).unwrap());
    Ok(eig)
}

/// Largest real part over the sliding-state eigenvalues.
pub fn max_growth_rate(model: &MechModel, mu: f64) -> Result<f64> {
    Ok(eigen_stability(model, mu)?
        .iter()
        .fold(f64::NEG_INFINITY, |m, e| m.max(e.re)))
}

/// Smallest friction coefficient in `[mu_min, mu_max]` with a positive
/// real-part eigenvalue, refined by bisection. `None` when the whole range
/// stays stable.
pub fn critical_friction(
    model: &MechModel,
    mu_min: f64,
    mu_max: f64,
    steps: usize,
) -> Result<Option<f64>> {
    if steps < 2 || mu_max <= mu_min {
        return Err(FricdynError::InvalidConfig(
            "sweep needs mu_max > mu_min and at least 2 steps".into(),
        ));
    }
    let unstable = |mu: f64| -> Result<bool> { Ok(max_growth_rate(model, mu)? > 1e-6) };
    let grid = |i: usize| mu_min + (mu_max - mu_min) * i as f64 / (steps - 1) as f64;
    let mut lo = grid(0);
    if unstable(lo)? {
        return Ok(Some(lo));
    }
    let mut hi = None;
    for i in 1..steps {
        let mu = grid(i);
        if unstable(mu)? {
            hi = Some(mu);
            break;
        }
        lo = mu;
    }
    let Some(mut hi) = hi else {
        return Ok(None);
    };
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if unstable(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::model::{model_ii, ModelIiParams};

    #[test]
    fn undamped_frictionless_system_is_marginally_stable() {
        let model = model_ii(&ModelIiParams::default()).unwrap();
        let eig = eigen_stability(&model, 0.0).unwrap();
        assert_eq!(eig.len(), 4);
        for e in eig {
            assert!(e.re.abs() < 1e-8, "re = {}", e.re);
        }
    }

    #[test]
    fn low_friction_sliding_is_stable_with_distinct_frequencies() {
        let model = model_ii(&ModelIiParams::default()).unwrap();
        let eig = eigen_stability(&model, 0.4).unwrap();
        let max_re = eig.iter().fold(f64::NEG_INFINITY, |m, e| m.max(e.re));
        assert!(max_re <= 1e-8);
        let mut freqs: Vec<f64> = eig.iter().map(|e| e.im).filter(|&w| w > 0.0).collect();
        freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(freqs.len(), 2);
        assert!((freqs[1] - freqs[0]).abs() > 1.0);
    }

    #[test]
    fn frequencies_approach_and_merge_at_the_critical_point() {
        let model = model_ii(&ModelIiParams::default()).unwrap();
        let mu_c = critical_friction(&model, 0.0, 1.5, 151).unwrap().unwrap();
        // gap between the two positive frequencies shrinks monotonically
        let gap = |mu: f64| {
            let eig = eigen_stability(&model, mu).unwrap();
            let mut f: Vec<f64> = eig.iter().map(|e| e.im).filter(|&w| w > 0.0).collect();
            f.sort_by(|a, b| a.partial_cmp(b).unwrap());
            f[1] - f[0]
        };
        let g1 = gap(0.25 * mu_c);
        let g2 = gap(0.6 * mu_c);
        let g3 = gap(0.95 * mu_c);
        assert!(g1 > g2 && g2 > g3, "gaps {g1} {g2} {g3}");
        assert!(gap(mu_c * 1.001) < 0.05 * g1);
        // and just above the threshold a positive growth rate exists
        assert!(max_growth_rate(&model, mu_c + 0.01).unwrap() > 0.0);
    }
}
