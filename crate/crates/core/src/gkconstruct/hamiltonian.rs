//! Trigonometric Hamiltonians with analytic derivatives.

use serde::{Deserialize, Serialize};

use crate::linalg4::{Mat4, Vec4};

/// One term `a · sin(2π k·x / L + φ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub k: [i32; 4],
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

/// `f = ε Σ a_m sin(2π k_m·x / L + φ_m)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierHamiltonian {
    pub epsilon: f64,
    pub period: f64,
    pub modes: Vec<FourierMode>,
}

impl FourierHamiltonian {
    /// The mode set used by the shipped presets.
    pub fn standard(epsilon: f64, period: f64) -> Self {
        let m = |k: [i32; 4], amplitude: f64, phase: f64| FourierMode { k, amplitude, phase };
        FourierHamiltonian {
            epsilon,
            period,
            modes: vec![
                m([1, 0, 0, 0], 1.0, 0.0),
                m([0, 1, 1, 0], 0.5, 0.7),
                m([0, 0, 1, -1], 0.4, 1.9),
                m([1, 0, 0, 1], 0.3, 2.6),
            ],
        }
    }

    fn wave(&self, m: &FourierMode) -> Vec4 {
        let c = 2.0 * std::f64::consts::PI / self.period;
        Vec4::new(m.k[0] as f64 * c, m.k[1] as f64 * c, m.k[2] as f64 * c, m.k[3] as f64 * c)
    }

    fn arg(&self, m: &FourierMode, x: [f64; 4]) -> f64 {
        self.wave(m).dot(&Vec4::from_column_slice(&x)) + m.phase
    }

    pub fn value(&self, x: [f64; 4]) -> f64 {
        self.epsilon * self.modes.iter().map(|m| m.amplitude * self.arg(m, x).sin()).sum::<f64>()
    }

    pub fn gradient(&self, x: [f64; 4]) -> Vec4 {
        let mut g = Vec4::zeros();
        for m in &self.modes {
            g += self.wave(m) * (m.amplitude * self.arg(m, x).cos());
        }
        g * self.epsilon
    }

    pub fn hessian(&self, x: [f64; 4]) -> Mat4 {
        let mut h = Mat4::zeros();
        for m in &self.modes {
            let k = self.wave(m);
            h -= k * k.transpose() * (m.amplitude * self.arg(m, x).sin());
        }
        h * self.epsilon
    }

    /// Gradient and Hessian together, sharing one `sin_cos` per mode.
    pub fn gradient_hessian(&self, x: [f64; 4]) -> (Vec4, Mat4) {
        let mut g = Vec4::zeros();
        let mut h = Mat4::zeros();
        for m in &self.modes {
            let k = self.wave(m);
            let (s, c) = self.arg(m, x).sin_cos();
            g += k * (m.amplitude * c);
            h -= k * k.transpose() * (m.amplitude * s);
        }
        (g * self.epsilon, h * self.epsilon)
    }

    /// Flat Laplacian `Σ ∂_a² f`.
    pub fn laplacian(&self, x: [f64; 4]) -> f64 {
        self.hessian(x).trace()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let f = FourierHamiltonian::standard(0.1, 2.0);
        let x = [0.3, 1.1, -0.4, 0.9];
        let e = 1e-5;
        for a in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += e;
            xm[a] -= e;
            let fd = (f.value(xp) - f.value(xm)) / (2.0 * e);
            assert!((fd - f.gradient(x)[a]).abs() < 1e-9);
            let (gg, hh) = f.gradient_hessian(x);
            assert_eq!((gg, hh), (f.gradient(x), f.hessian(x)));
            let gd = (f.gradient(xp) - f.gradient(xm)) / (2.0 * e);
            for b in 0..4 {
                assert!((gd[b] - f.hessian(x)[(b, a)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn zero_amplitude_is_constant() {
        let f = FourierHamiltonian::standard(0.0, 1.0);
        assert_eq!(f.gradient([0.1, 0.2, 0.3, 0.4]), Vec4::zeros());
    }
}
