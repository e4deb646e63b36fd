use std::fmt;

use serde::{Deserialize, Serialize};

/// Hidden-unit nonlinearity.
///
/// Derivatives at kinks are defined as 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivationKind {
    Tanh,
    Relu,
    /// min(max(x, 0), 1)
    SaturatingRelu,
    /// max(x + b, 0)
    ShiftedRelu { b: f64 },
    /// Identity; the reference case whose weight dynamics have no intra-class component.
    Linear,
}

impl ActivationKind {
    #[inline]
    pub fn eval(self, x: f64) -> (f64, f64) {
        match self {
            ActivationKind::Tanh => {
                let t = x.tanh();
                (t, 1.0 - t * t)
            }
            ActivationKind::Relu => {
                if x > 0.0 {
                    (x, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
            ActivationKind::SaturatingRelu => {
                if x <= 0.0 {
                    (0.0, 0.0)
                } else if x >= 1.0 {
                    (1.0, 0.0)
                } else {
                    (x, 1.0)
                }
            }
            ActivationKind::ShiftedRelu { b } => {
                let s = x + b;
                if s > 0.0 {
                    (s, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
            ActivationKind::Linear => (x, 1.0),
        }
    }

    #[inline]
    pub fn f(self, x: f64) -> f64 {
        self.eval(x).0
    }

    #[inline]
    pub fn fprime(self, x: f64) -> f64 {
        self.eval(x).1
    }

    /// Points where `f` is not differentiable.
    pub fn kinks(self) -> Vec<f64> {
        match self {
            ActivationKind::Tanh | ActivationKind::Linear => vec![],
            ActivationKind::Relu => vec![0.0],
            ActivationKind::SaturatingRelu => vec![0.0, 1.0],
            ActivationKind::ShiftedRelu { b } => vec![-b],
        }
    }

    /// Short stable label used in file names and CSV columns.
    pub fn label(self) -> String {
        match self {
            ActivationKind::Tanh => "tanh".into(),
            ActivationKind::Relu => "relu".into(),
            ActivationKind::SaturatingRelu => "saturating_relu".into(),
            ActivationKind::ShiftedRelu { b } => format!("shifted_relu({b})"),
            ActivationKind::Linear => "linear".into(),
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Offsets swept for the shifted ReLU.
pub const SHIFTED_RELU_OFFSETS: [f64; 5] = [-0.5, -0.25, 0.0, 0.25, 0.5];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Rng;

    const ALL: [ActivationKind; 6] = [
        ActivationKind::Tanh,
        ActivationKind::Relu,
        ActivationKind::SaturatingRelu,
        ActivationKind::ShiftedRelu { b: 0.5 },
        ActivationKind::ShiftedRelu { b: -0.25 },
        ActivationKind::Linear,
    ];

    #[test]
    fn spot_values() {
        assert_eq!(ActivationKind::Tanh.eval(0.0), (0.0, 1.0));
        assert_eq!(ActivationKind::SaturatingRelu.eval(2.0), (1.0, 0.0));
        assert_eq!(ActivationKind::SaturatingRelu.eval(0.5), (0.5, 1.0));
        assert_eq!(ActivationKind::ShiftedRelu { b: 0.5 }.eval(0.0), (0.5, 1.0));
        assert_eq!(ActivationKind::Relu.eval(0.0), (0.0, 0.0));
        assert_eq!(ActivationKind::Relu.eval(-1.0), (0.0, 0.0));
    }

    #[test]
    fn derivative_matches_central_differences() {
        let mut rng = Rng::new(5);
        let h = 1e-5;
        for kind in ALL {
            let mut checked = 0;
            while checked < 100 {
                let x = 3.0 * rng.normal();
                if kind.kinks().iter().any(|k| (x - k).abs() < 10.0 * h) {
                    continue;
                }
                let fd = (kind.f(x + h) - kind.f(x - h)) / (2.0 * h);
                assert!((fd - kind.fprime(x)).abs() <= 1e-6, "{kind} at {x}");
                checked += 1;
            }
        }
    }

    #[test]
    fn serde_tags() {
        let s = serde_json::to_string(&ActivationKind::ShiftedRelu { b: 0.25 }).unwrap();
        assert_eq!(s, r#"{"kind":"shifted_relu","b":0.25}"#);
        let back: ActivationKind = serde_json::from_str(r#"{"kind":"tanh"}"#).unwrap();
        assert_eq!(back, ActivationKind::Tanh);
    }
}
