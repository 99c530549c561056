use serde::{Deserialize, Serialize};

use crate::error::{FricdynError, Result};

/// Velocity-dependent friction coefficient.
///
/// The exponential Stribeck law is implemented in the corrected form
/// `mu_d + (mu_s - mu_d) exp(-alpha |v|)`, which decays from `mu_s` at rest
/// to `mu_d` at speed. A compatibility flag evaluates the raw form
/// `mu_s + (mu_s - mu_d) exp(-alpha |v|)` instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrictionLaw {
    Constant {
        mu: f64,
    },
    StribeckRational {
        mu_s: f64,
        delta: f64,
    },
    StribeckExponential {
        mu_s: f64,
        mu_d: f64,
        alpha: f64,
        #[serde(default)]
        printed_form: bool,
    },
}

impl FrictionLaw {
    /// Rational law with the paper's default decay parameters.
    pub fn rational(mu_s: f64, delta: f64) -> Self {
        FrictionLaw::StribeckRational { mu_s, delta }
    }

    /// Exponential law with `mu_d = mu_s / 2`, `alpha = 10` when unspecified.
    pub fn exponential(mu_s: f64) -> Self {
        FrictionLaw::StribeckExponential {
            mu_s,
            mu_d: 0.5 * mu_s,
            alpha: 10.0,
            printed_form: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            FrictionLaw::Constant { mu } => mu >= 0.0 && mu.is_finite(),
            FrictionLaw::StribeckRational { mu_s, delta } => {
                mu_s >= 0.0 && delta >= 0.0 && mu_s.is_finite() && delta.is_finite()
            }
            FrictionLaw::StribeckExponential {
                mu_s, mu_d, alpha, ..
            } => mu_s >= mu_d && mu_d >= 0.0 && alpha >= 0.0 && mu_s.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(FricdynError::InvalidModel(format!(
                "invalid friction parameters: {self:?}"
            )))
        }
    }

    /// Friction coefficient at relative sliding speed `v_rel` (even in v_rel,
    /// non-increasing in |v_rel|).
    pub fn coefficient(&self, v_rel: f64) -> f64 {
        let v = v_rel.abs();
        match *self {
            FrictionLaw::Constant { mu } => mu,
            FrictionLaw::StribeckRational { mu_s, delta } => mu_s / (1.0 + delta * v),
            FrictionLaw::StribeckExponential {
                mu_s,
                mu_d,
                alpha,
                printed_form,
            } => {
                if printed_form {
                    mu_s + (mu_s - mu_d) * (-alpha * v).exp()
                } else {
                    mu_d + (mu_s - mu_d) * (-alpha * v).exp()
                }
            }
        }
    }

    /// Coefficient at zero relative speed (the sticking limit).
    pub fn static_coefficient(&self) -> f64 {
        self.coefficient(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rational_examples() {
        let law = FrictionLaw::rational(0.1, 10.0);
        assert_relative_eq!(law.coefficient(0.0), 0.1);
        assert_relative_eq!(law.coefficient(1.0), 0.1 / 11.0);
        assert_relative_eq!(law.coefficient(-1.0), 0.1 / 11.0);
    }

    #[test]
    fn exponential_limits() {
        let law = FrictionLaw::exponential(0.1);
        assert_relative_eq!(law.coefficient(0.0), 0.1);
        assert!((law.coefficient(1e6) - 0.05).abs() < 1e-12);
        // printed form starts at 2 mu_s - mu_d instead
        let printed = FrictionLaw::StribeckExponential {
            mu_s: 0.1,
            mu_d: 0.05,
            alpha: 10.0,
            printed_form: true,
        };
        assert_relative_eq!(printed.coefficient(0.0), 0.15);
    }

    #[test]
    fn even_and_monotone() {
        let laws = [
            FrictionLaw::Constant { mu: 0.3 },
            FrictionLaw::rational(0.1, 1.0),
            FrictionLaw::exponential(0.2),
        ];
        for law in laws {
            let mut last = law.coefficient(0.0);
            for k in 1..50 {
                let v = 0.1 * k as f64;
                assert_relative_eq!(law.coefficient(v), law.coefficient(-v));
                let c = law.coefficient(v);
                assert!(c <= last + 1e-15, "{law:?} not monotone at v = {v}");
                last = c;
            }
        }
    }
}
