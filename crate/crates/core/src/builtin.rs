//! Built-in example models.

use std::fmt::Write;

/// Constants of the double pendulum, in file order.
pub const PENDULUM_CONSTANTS: [&str; 6] = ["A", "B", "C", "D1", "D2", "g"];

/// Default constant values: A, B, C, D1, D2 and the chart parameter g (γ).
pub const PENDULUM_DEFAULTS: [f64; 6] = [2.0, 1.0, 1.0, 1.0, 1.0, 3.0];

/// Standard gravity used by [`PhysicalPendulum`] unless overridden.
pub const STANDARD_GRAVITY: f64 = 9.81;

pub fn names() -> &'static [&'static str] {
    &["double-pendulum"]
}

/// Model text of a built-in model with its default constants.
pub fn model_text(name: &str) -> Option<String> {
    match name {
        "double-pendulum" => Some(double_pendulum(&PENDULUM_DEFAULTS)),
        _ => None,
    }
}

/// Inverted double pendulum in angles (ψ, φ), only φ actuated, with the
/// chart x = ψ, y = φ + gψ. `constants` follows [`PENDULUM_CONSTANTS`].
pub fn double_pendulum(constants: &[f64; 6]) -> String {
    let mut out = String::from(
        "# Inverted double pendulum; psi is unactuated, phi is actuated.\n\
         [model]\n\
         n = 2\n\
         coords = [\"psi\", \"phi\"]\n\
         equilibrium = [0.0, 0.0]\n\
         \n\
         [constants]\n",
    );
    for (name, value) in PENDULUM_CONSTANTS.iter().zip(constants) {
        writeln!(out, "{name} = {value:?}").unwrap();
    }
    out.push_str(
        "\n\
         [mass_inverse]\n\
         H11 = \"C/(A*C - B^2*cos(psi - phi)^2)\"\n\
         H12 = \"-B*cos(psi - phi)/(A*C - B^2*cos(psi - phi)^2)\"\n\
         H22 = \"A/(A*C - B^2*cos(psi - phi)^2)\"\n\
         \n\
         [potential]\n\
         h = \"D1*cos(psi) + D2*cos(phi)\"\n\
         \n\
         [actuation]\n\
         theta1 = [\"0\", \"1\"]\n\
         \n\
         [chart]\n\
         T = [[\"1\", \"0\"], [\"g\", \"1\"]]\n\
         c = [0.0, 0.0]\n\
         coords = [\"x\", \"y\"]\n",
    );
    out
}

/// Two massless bars of lengths L1, L2 carrying point masses m1, m2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalPendulum {
    pub l1: f64,
    pub l2: f64,
    pub m1: f64,
    pub m2: f64,
    pub gravity: f64,
}

impl PhysicalPendulum {
    /// A = m1 L1² + m2 L2², B = m2 L1 L2, C = m2 L2², D1 = m2 g L2,
    /// D2 = (m1 + m2) g L1, with the chart parameter `gamma` appended.
    pub fn constants(&self, gamma: f64) -> [f64; 6] {
        let PhysicalPendulum {
            l1,
            l2,
            m1,
            m2,
            gravity,
        } = *self;
        [
            m1 * l1 * l1 + m2 * l2 * l2,
            m2 * l1 * l2,
            m2 * l2 * l2,
            m2 * gravity * l2,
            (m1 + m2) * gravity * l1,
            gamma,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelFile;

    #[test]
    fn default_pendulum_parses_and_evaluates() {
        let text = model_text("double-pendulum").unwrap();
        let spec = ModelFile::parse(&text).unwrap().build(&[]).unwrap();
        assert_eq!(spec.coords(), &["x".to_string(), "y".to_string()][..]);
        assert!((spec.potential_at(&[0.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(spec.actuation_at(&[0.0, 0.0]).unwrap().row(0), &[-3.0, 1.0]);
    }

    #[test]
    fn unknown_name() {
        assert!(model_text("cart-pole").is_none());
    }

    #[test]
    fn physical_mapping() {
        let p = PhysicalPendulum {
            l1: 1.0,
            l2: 2.0,
            m1: 3.0,
            m2: 5.0,
            gravity: 10.0,
        };
        assert_eq!(p.constants(3.0), [23.0, 10.0, 20.0, 100.0, 80.0, 3.0]);
    }
}
