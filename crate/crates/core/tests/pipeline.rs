mod common;

use common::*;
use eshape_core::model::ModelFile;
use eshape_core::{synthesize, Expr, KineticSource, PipelineError, PipelineOptions, Verdict};

fn supplied(text: &str) -> PipelineOptions {
    PipelineOptions {
        kinetic: KineticSource::Supplied {
            text: text.to_string(),
        },
        ..PipelineOptions::default()
    }
}

const SHIFTED: &str = r#"
[model]
n = 2
coords = ["a", "b"]
equilibrium = [0.5, 0.2]

[constants]
k = 0.3

[mass_inverse]
H11 = "1 + k*cos(b)^2"
H12 = "0.1*sin(a)"
H22 = "2"

[potential]
h = "1 - cos(a - 0.5) + (b - 0.2)^2"

[actuation]
theta1 = ["0", "1"]
"#;

#[test]
fn equilibrium_is_moved_to_the_origin() {
    let spec = ModelFile::parse(SHIFTED).unwrap().build(&[]).unwrap();
    let s = synthesize(&spec, &PipelineOptions::default()).unwrap();
    assert_eq!(s.original_equilibrium, vec![0.5, 0.2]);
    assert_eq!(s.spec.equilibrium(), &[0.0, 0.0]);
    assert_eq!(s.certificate.verdict, Verdict::Pass);
    assert!(s.diagnostics.kinetic_residual <= 1e-6);
    assert!(s.diagnostics.potential_residual <= 1e-6);
    assert!(s.certificate.m[(0, 0)] > 0.0);
    assert_eq!(s.hhat.eval(&[0.0, 0.0]).unwrap(), 0.0);
}

const ACTUATED_FIRST: &str = r#"
[model]
n = 2
coords = ["p", "q"]
equilibrium = [0, 0]

[mass_inverse]
H11 = 1
H12 = 0
H22 = 1

[potential]
h = "p^2 + 1 - cos(q)"

[actuation]
theta1 = [1, 0]
"#;

#[test]
fn actuated_first_coordinate_is_reordered() {
    let spec = ModelFile::parse(ACTUATED_FIRST)
        .unwrap()
        .build(&[])
        .unwrap();
    let s = synthesize(&spec, &PipelineOptions::default()).unwrap();
    assert_eq!(s.adaptation.permutation, vec![1, 0]);
    assert_eq!(s.spec.coords(), &["q".to_string(), "p".to_string()][..]);
    assert!((s.certificate.m[(0, 0)] - 1.0).abs() < 1e-6);
    assert_eq!(s.certificate.verdict, Verdict::Pass);
}

#[test]
fn supplied_kinetic_field_with_two_unactuated_directions() {
    let s = synthesize(
        &flat3(),
        &supplied("[kinetic]\nK11 = 1\nK12 = 0\nK22 = 1\n"),
    )
    .unwrap();
    assert!(!s.kinetic_solved);
    assert_eq!(s.grid.points.len(), 81);
    let m = &s.certificate.m;
    assert!((m[(0, 0)] - 2.0).abs() < 1e-6 && (m[(0, 1)] - 1.0).abs() < 1e-6);
    assert!((m[(1, 1)] - 4.0).abs() < 1e-6);
    assert_eq!(s.certificate.verdict, Verdict::Pass);
    assert!(s.diagnostics.kinetic_residual < 1e-9);
    let q = [0.1, -0.2, 0.3];
    let expected = 0.01 - 0.02 + 0.08 + 0.5 * s.certificate.varpi * 0.09;
    assert!((s.hhat.eval(&q).unwrap() - expected).abs() < 1e-12);
}

#[test]
fn non_integrable_kinetic_field_is_rejected() {
    let err = synthesize(
        &flat3(),
        &supplied("[kinetic]\nK11 = 1\nK12 = 0\nK22 = \"1 + q1^2\"\n"),
    )
    .err()
    .unwrap();
    assert_eq!(err.stage(), "integrability");
}

#[test]
fn more_than_one_unactuated_direction_needs_a_supplied_field() {
    let err = synthesize(&flat3(), &PipelineOptions::default())
        .err()
        .unwrap();
    assert_eq!(err.stage(), "kinetic");
}

#[test]
fn non_positive_xi_is_a_kinetic_error() {
    let opts = PipelineOptions {
        kinetic: KineticSource::Solve { xi: e("y - 1") },
        ..PipelineOptions::default()
    };
    let err = synthesize(&pendulum(3.0), &opts).err().unwrap();
    assert!(matches!(err, PipelineError::Kinetic(_)), "{err}");
}

#[test]
fn pendulum_gamma_sweep() {
    for (gamma, verdict) in [
        (1.0, Verdict::Fail),
        (1.5, Verdict::Fail),
        (2.5, Verdict::Pass),
        (3.0, Verdict::Pass),
    ] {
        let s = synthesize(&pendulum(gamma), &PipelineOptions::default()).unwrap();
        assert_eq!(s.certificate.verdict, verdict, "gamma = {gamma}");
        // M = −D₁ K(0,0) / (A − γB)
        let expected = -D1 / (A - gamma * B);
        assert!((s.certificate.m[(0, 0)] - expected).abs() <= 1e-6 * expected.abs());
    }
}

#[test]
fn explicit_varpi_below_the_bound_fails() {
    let opts = PipelineOptions {
        kinetic: KineticSource::Solve { xi: Expr::Num(1.0) },
        varpi: Some(0.05),
        ..PipelineOptions::default()
    };
    let s = synthesize(&coupled_quadratic(), &opts).unwrap();
    // ‖A‖²/λ = 0.01/0.8
    assert!((s.certificate.varpi_min.unwrap() - 0.0125).abs() < 1e-8);
    assert_eq!(s.certificate.verdict, Verdict::Pass);
    let opts = PipelineOptions {
        varpi: Some(0.01),
        ..opts
    };
    assert_eq!(
        synthesize(&coupled_quadratic(), &opts)
            .unwrap()
            .certificate
            .verdict,
        Verdict::Fail
    );
}
