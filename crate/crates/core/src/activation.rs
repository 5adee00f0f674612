//! Scalar activation functions and their exact derivatives.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Relu,
    Sigmoid,
    Tanh,
    Identity,
}

impl ActivationKind {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ActivationKind::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            ActivationKind::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Identity => x,
        }
    }

    /// Derivative as a function of the pre-activation input.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            ActivationKind::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Sigmoid => {
                let s = ActivationKind::Sigmoid.apply(x);
                s * (1.0 - s)
            }
            ActivationKind::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            ActivationKind::Identity => 1.0,
        }
    }
}

impl std::fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ActivationKind::Relu => "relu",
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Identity => "identity",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for ActivationKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relu" => Ok(ActivationKind::Relu),
            "sigmoid" => Ok(ActivationKind::Sigmoid),
            "tanh" => Ok(ActivationKind::Tanh),
            "identity" => Ok(ActivationKind::Identity),
            other => Err(crate::error::Error::InvalidConfig(format!(
                "unknown activation '{other}' (expected relu|sigmoid|tanh|identity)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_sign_cases() {
        assert_eq!(ActivationKind::Relu.apply(-1.0), 0.0);
        assert_eq!(ActivationKind::Relu.apply(0.0), 0.0);
        assert_eq!(ActivationKind::Relu.apply(2.0), 2.0);
    }

    #[test]
    fn sigmoid_symmetry_point() {
        assert_eq!(ActivationKind::Sigmoid.apply(0.0), 0.5);
    }

    #[test]
    fn tanh_matches_library_value() {
        // Scalar evaluation cross-checked against the standard library.
        let got = ActivationKind::Tanh.apply(0.5);
        assert!((got - 0.46211715726000974).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let kinds = [
            ActivationKind::Relu,
            ActivationKind::Sigmoid,
            ActivationKind::Tanh,
            ActivationKind::Identity,
        ];
        let eps = 1e-6;
        for kind in kinds {
            for &x in &[-0.9, -0.3, 0.2, 0.7, 1.5] {
                let fd = (kind.apply(x + eps) - kind.apply(x - eps)) / (2.0 * eps);
                assert!(
                    (kind.derivative(x) - fd).abs() < 1e-8,
                    "{kind} at {x}: {} vs {fd}",
                    kind.derivative(x)
                );
            }
        }
    }
}
