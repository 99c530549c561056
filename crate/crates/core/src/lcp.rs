//! Standard linear complementarity problems and a deterministic pivoting solver.
//!
//! The problem is stated as: find `x >= 0`, `y >= 0` with `y = A x + b` and
//! `x' y = 0`. The pivoting solver is Lemke's complementary pivot method with
//! a lexicographic minimum-ratio rule, which keeps the pivot path deterministic
//! and free of cycling on degenerate problems.

use nalgebra::{DMatrix, DVector};

use crate::error::{FricdynError, Result};

/// Dense LCP data: `y = A x + b` with the complementarity conditions on (x, y).
#[derive(Debug, Clone, PartialEq)]
pub struct LcpProblem {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl LcpProblem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(FricdynError::DimensionMismatch(format!(
                "LCP matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.nrows() != b.len() {
            return Err(FricdynError::DimensionMismatch(format!(
                "LCP matrix is {0}x{0} but b has length {1}",
                a.nrows(),
                b.len()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
            return Err(FricdynError::NonFiniteInput);
        }
        Ok(Self { a, b })
    }

    pub fn from_rows(rows: &[Vec<f64>], b: &[f64]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(FricdynError::DimensionMismatch(
                "ragged LCP matrix rows".into(),
            ));
        }
        let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(a, DVector::from_column_slice(b))
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }
}

/// Outcome tag carried by [`LcpSolution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LcpStatus {
    Solved,
    RayTermination,
    MaxIter,
}

/// A complementary pair together with its residual.
#[derive(Debug, Clone)]
pub struct LcpSolution {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub residual: f64,
    pub status: LcpStatus,
}

/// Mean-square feasibility/complementarity residual:
/// `L = (sum_i f_i^2 + sum_i r_i^2) / N` with `f = y - A x - b` and
/// `r_i = x_i y_i`. Zero exactly at a solution.
pub fn lcp_residual(p: &LcpProblem, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    let n = p.dim();
    if x.len() != n || y.len() != n {
        return Err(FricdynError::DimensionMismatch(format!(
            "residual arguments must have length {n}"
        )));
    }
    let f = y - &p.a * x - &p.b;
    let mut sum = 0.0;
    for i in 0..n {
        let r = x[i] * y[i];
        sum += f[i] * f[i] + r * r;
    }
    Ok(sum / n as f64)
}

/// Worst-case feasibility metrics of a candidate pair, used by the steppers
/// and the acceptance suite to audit every produced step.
#[derive(Debug, Clone, Copy)]
pub struct ComplementarityStats {
    /// `max_i |y_i - (A x + b)_i|`
    pub max_eq: f64,
    /// `max_i |x_i y_i|`
    pub max_prod: f64,
    pub min_x: f64,
    pub min_y: f64,
}

impl ComplementarityStats {
    pub fn of(p: &LcpProblem, x: &DVector<f64>, y: &DVector<f64>) -> Self {
        let f = y - &p.a * x - &p.b;
        let max_eq = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let max_prod = x
            .iter()
            .zip(y.iter())
            .fold(0.0_f64, |m, (xi, yi)| m.max((xi * yi).abs()));
        let min_x = x.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        let min_y = y.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        Self {
            max_eq,
            max_prod,
            min_x,
            min_y,
        }
    }

    /// Largest violation across all four invariant groups.
    pub fn worst(&self) -> f64 {
        self.max_eq
            .max(self.max_prod)
            .max((-self.min_x).max(0.0))
            .max((-self.min_y).max(0.0))
    }
}

const PIVOT_EPS: f64 = 1e-12;

/// Lemke's algorithm with lexicographic tie-breaking.
///
/// Returns the complementary solution when the pivot path reaches one, or
/// [`FricdynError::RayTermination`] / [`FricdynError::MaxPivots`] otherwise.
/// The pivot sequence is fully deterministic: identical inputs give
/// bit-identical solutions.
pub fn solve_pivoting(p: &LcpProblem, tol: f64, max_pivots: usize) -> Result<LcpSolution> {
    if tol <= 0.0 {
        return Err(FricdynError::InvalidConfig("tol must be positive".into()));
    }
    let n = p.dim();

    // Trivial case: b >= 0 forces x = 0.
    if p.b.iter().all(|&v| v >= 0.0) {
        let x = DVector::zeros(n);
        let y = p.b.clone();
        let residual = lcp_residual(p, &x, &y)?;
        return Ok(LcpSolution {
            x,
            y,
            residual,
            status: LcpStatus::Solved,
        });
    }

    // Variable indices: w_i -> i, z_i -> n + i, artificial z0 -> 2n.
    // Tableau columns: one per variable plus the rhs at column 2n + 1.
    // Initial system: I w - A z - d z0 = b with covering vector d = 1.
    let ncols = 2 * n + 2;
    let rhs = 2 * n + 1;
    let z0 = 2 * n;
    let mut t = DMatrix::<f64>::zeros(n, ncols);
    for i in 0..n {
        t[(i, i)] = 1.0;
        for j in 0..n {
            t[(i, n + j)] = -p.a[(i, j)];
        }
        t[(i, z0)] = -1.0;
        t[(i, rhs)] = p.b[i];
    }
    let mut basis: Vec<usize> = (0..n).collect();

    // First pivot: z0 enters, the row with the most negative rhs leaves
    // (ties broken lexicographically on the w-columns, which track B^-1).
    let mut leave_row = 0;
    for i in 1..n {
        if lex_less(&t, i, leave_row, rhs, n) {
            leave_row = i;
        }
    }
    let mut entering = z0;
    let mut pivots = 0usize;

    loop {
        pivots += 1;
        if pivots > max_pivots {
            return Err(FricdynError::MaxPivots(max_pivots));
        }

        let leaving = basis[leave_row];
        pivot(&mut t, leave_row, entering);
        basis[leave_row] = entering;

        if leaving == z0 {
            break;
        }
        // Complementary pivot rule: the complement of what just left enters.
        entering = if leaving < n { leaving + n } else { leaving - n };

        // Lexicographic minimum ratio test over rows with positive column.
        let mut candidate: Option<usize> = None;
        for i in 0..n {
            if t[(i, entering)] > PIVOT_EPS {
                candidate = match candidate {
                    None => Some(i),
                    Some(c) => {
                        if lex_ratio_less(&t, i, c, entering, rhs, n) {
                            Some(i)
                        } else {
                            Some(c)
                        }
                    }
                };
            }
        }
        match candidate {
            Some(row) => leave_row = row,
            None => return Err(FricdynError::RayTermination),
        }
    }

    // Read z off the basis, then recompute y = A x + b directly.
    let mut x = DVector::zeros(n);
    for (row, &var) in basis.iter().enumerate() {
        if (n..2 * n).contains(&var) {
            x[var - n] = t[(row, rhs)].max(0.0);
        }
    }
    let y = &p.a * &x + &p.b;
    let residual = lcp_residual(p, &x, &y)?;
    Ok(LcpSolution {
        x,
        y,
        residual,
        status: LcpStatus::Solved,
    })
}

fn pivot(t: &mut DMatrix<f64>, row: usize, col: usize) {
    let ncols = t.ncols();
    let piv = t[(row, col)];
    for j in 0..ncols {
        t[(row, j)] /= piv;
    }
    for i in 0..t.nrows() {
        if i == row {
            continue;
        }
        let factor = t[(i, col)];
        if factor != 0.0 {
            for j in 0..ncols {
                t[(i, j)] -= factor * t[(row, j)];
            }
        }
    }
}

/// Lexicographic "row i before row c" on [rhs, w-columns] (used for the
/// initial most-negative-rhs choice, where the implied ratio column is -1).
fn lex_less(t: &DMatrix<f64>, i: usize, c: usize, rhs: usize, n: usize) -> bool {
    let di = t[(i, rhs)];
    let dc = t[(c, rhs)];
    if (di - dc).abs() > PIVOT_EPS {
        return di < dc;
    }
    for j in 0..n {
        let a = t[(i, j)];
        let b = t[(c, j)];
        if (a - b).abs() > PIVOT_EPS {
            return a < b;
        }
    }
    false
}

/// Lexicographic ratio comparison: row i's ratio vector strictly smaller
/// than row c's, both scaled by their entering-column pivot.
fn lex_ratio_less(t: &DMatrix<f64>, i: usize, c: usize, col: usize, rhs: usize, n: usize) -> bool {
    let pi = t[(i, col)];
    let pc = t[(c, col)];
    let ri = t[(i, rhs)] / pi;
    let rc = t[(c, rhs)] / pc;
    if (ri - rc).abs() > PIVOT_EPS * ri.abs().max(rc.abs()).max(1.0) {
        return ri < rc;
    }
    for j in 0..n {
        let a = t[(i, j)] / pi;
        let b = t[(c, j)] / pc;
        if (a - b).abs() > PIVOT_EPS * a.abs().max(b.abs()).max(1.0) {
            return a < b;
        }
    }
    false
}
