//! Dormand-Prince 5(4) embedded pair used by the event-driven reference
//! solvers. Fixed single steps double as the re-integration primitive for
//! event bisection.

use nalgebra::DVector;

pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl Dopri5 {
    /// One fixed step of size `h`; returns the 5th-order result and the
    /// scaled error-norm estimate.
    pub fn step<F>(&self, f: &F, t: f64, y: &DVector<f64>, h: f64) -> (DVector<f64>, f64)
    where
        F: Fn(f64, &DVector<f64>) -> DVector<f64> + ?Sized,
    {
        let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
        k.push(f(t, y));
        for i in 1..7 {
            let mut yi = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[i][j];
                if a != 0.0 {
                    yi += kj * (a * h);
                }
            }
            k.push(f(t + C[i] * h, &yi));
        }
        let mut y5 = y.clone();
        let mut y4 = y.clone();
        for (j, kj) in k.iter().enumerate() {
            if B5[j] != 0.0 {
                y5 += kj * (B5[j] * h);
            }
            if B4[j] != 0.0 {
                y4 += kj * (B4[j] * h);
            }
        }
        let mut err = 0.0_f64;
        for i in 0..y.len() {
            let sc = self.atol + self.rtol * y[i].abs().max(y5[i].abs());
            let e = (y5[i] - y4[i]) / sc;
            err += e * e;
        }
        (y5, (err / y.len() as f64).sqrt())
    }

    /// Step-size update factor from the last error norm.
    pub fn scale(err: f64) -> f64 {
        if err <= f64::MIN_POSITIVE {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_accuracy_on_the_circle() {
        let f = |_t: f64, y: &DVector<f64>| DVector::from_column_slice(&[y[1], -y[0]]);
        let solver = Dopri5::default();
        let y0 = DVector::from_column_slice(&[1.0, 0.0]);
        let h = 0.1;
        let (y1, _) = solver.step(&f, 0.0, &y0, h);
        assert!((y1[0] - h.cos()).abs() < 1e-9);
        assert!((y1[1] + h.sin()).abs() < 1e-9);
    }
}
