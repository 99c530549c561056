//! Gauss-Legendre collocation tableaux of arbitrary stage count.
//!
//! Nodes and weights come from the Golub-Welsch eigenvalue problem of the
//! Legendre Jacobi matrix; the stage coefficient matrix integrates the
//! Lagrange basis over [0, c_k] with the same Gauss rule (exact, since the
//! basis has degree R-1). No tabulated coefficients anywhere.

use nalgebra::{DMatrix, DVector};

use crate::error::{FricdynError, Result};

/// Runge-Kutta coefficients `a`, `b`, `c` for an R-stage method.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    pub order: usize,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
}

impl ButcherTableau {
    pub fn stages(&self) -> usize {
        self.order
    }
}

/// Gauss-Legendre nodes and weights on [0, 1].
fn gauss_nodes_weights(r: usize) -> (DVector<f64>, DVector<f64>) {
    if r == 1 {
        return (DVector::from_element(1, 0.5), DVector::from_element(1, 1.0));
    }
    let mut jac = DMatrix::<f64>::zeros(r, r);
    for k in 1..r {
        let beta = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        jac[(k - 1, k)] = beta;
        jac[(k, k - 1)] = beta;
    }
    let eig = nalgebra::SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..r)
        .map(|i| {
            let node = eig.eigenvalues[i];
            let w = 2.0 * eig.eigenvectors[(0, i)].powi(2);
            (node, w)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let c = DVector::from_fn(r, |i, _| 0.5 * (pairs[i].0 + 1.0));
    let b = DVector::from_fn(r, |i, _| 0.5 * pairs[i].1);
    (c, b)
}

/// Barycentric weights of the node set.
fn barycentric_weights(c: &DVector<f64>) -> DVector<f64> {
    let r = c.len();
    DVector::from_fn(r, |j, _| {
        let mut w = 1.0;
        for m in 0..r {
            if m != j {
                w /= c[j] - c[m];
            }
        }
        w
    })
}

/// Lagrange basis value `L_j(t)` over the nodes `c`.
fn lagrange(c: &DVector<f64>, w: &DVector<f64>, j: usize, t: f64) -> f64 {
    let r = c.len();
    for m in 0..r {
        if (t - c[m]).abs() < 1e-14 {
            return if m == j { 1.0 } else { 0.0 };
        }
    }
    let mut num = w[j] / (t - c[j]);
    let mut den = 0.0;
    for m in 0..r {
        den += w[m] / (t - c[m]);
    }
    num /= den;
    num
}

/// Gauss-Legendre collocation tableau with R stages (classical order 2R).
pub fn irk_coefficients(r: usize) -> Result<ButcherTableau> {
    if r == 0 || r > 100 {
        return Err(FricdynError::InvalidConfig(
            "stage count must lie in 1..=100".into(),
        ));
    }
    let (c, b) = gauss_nodes_weights(r);
    let bw = barycentric_weights(&c);
    // a_{k,j} = integral_0^{c_k} L_j, evaluated with the same R-point rule
    // mapped onto [0, c_k]; the integrand has degree R-1, so this is exact.
    let mut a = DMatrix::<f64>::zeros(r, r);
    for k in 0..r {
        for j in 0..r {
            let mut s = 0.0;
            for i in 0..r {
                let t = c[k] * c[i];
                s += b[i] * lagrange(&c, &bw, j, t);
            }
            a[(k, j)] = c[k] * s;
        }
    }
    Ok(ButcherTableau { order: r, a, b, c })
}
