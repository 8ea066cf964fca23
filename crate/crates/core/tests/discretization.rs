use std::f64::consts::PI;

use approx::assert_relative_eq;
use piezowave_core::{Grid1D, MaterialParams};
use proptest::prelude::*;

fn params(alpha: f64, beta: f64, gamma: f64) -> MaterialParams {
    MaterialParams::new(1.0, alpha, beta, gamma, 1.0).unwrap()
}

/// Clamped random field: node 0 is zero, the rest arbitrary.
fn clamped(nx: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, nx - 1).prop_map(|mut v| {
        v.insert(0, 0.0);
        v
    })
}

fn trapezoid(dx: f64, f: &[f64]) -> f64 {
    let n = f.len();
    dx * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[n - 1]))
}

const NX: usize = 41;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Summation by parts: the coupled operator is symmetric in the
    /// trapezoid inner product and its energy is −Q.
    #[test]
    fn coupled_operator_is_symmetric(
        v in clamped(NX), p in clamped(NX), vb in clamped(NX), pb in clamped(NX),
        gamma in -1.5f64..1.5, beta in 0.2f64..3.0,
    ) {
        let grid = Grid1D::new(1.0, NX).unwrap();
        let prm = params(1.0 + gamma * gamma * beta, beta, gamma);
        let ip = |a: &(Vec<f64>, Vec<f64>), b: (&[f64], &[f64])| {
            let va: Vec<f64> = a.0.iter().zip(b.0).map(|(x, y)| x * y).collect();
            let pa: Vec<f64> = a.1.iter().zip(b.1).map(|(x, y)| x * y).collect();
            trapezoid(grid.dx(), &va) + trapezoid(grid.dx(), &pa)
        };
        let lu = grid.coupled_laplacian(&v, &p, &prm);
        let lw = grid.coupled_laplacian(&vb, &pb, &prm);
        let lhs = ip(&lu, (&vb, &pb));
        let rhs = ip(&lw, (&v, &p));
        let scale = 1.0 + lhs.abs() + rhs.abs();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale, "{lhs} vs {rhs}");
        let energy = -ip(&lu, (&v, &p));
        let q = grid.quadratic_form(&v, &p, &prm);
        prop_assert!((energy - q).abs() <= 1e-10 * (1.0 + q), "{energy} vs {q}");
    }

    /// The quadratic form vanishes only on the zero state.
    #[test]
    fn quadratic_form_is_definite(v in clamped(NX), p in clamped(NX), gamma in -2.0f64..2.0) {
        let grid = Grid1D::new(1.0, NX).unwrap();
        let prm = params(0.5 + gamma * gamma, 1.0, gamma);
        let q = grid.quadratic_form(&v, &p, &prm);
        let nonzero = v.iter().chain(&p).any(|x| *x != 0.0);
        prop_assert_eq!(q > 0.0, nonzero);
        let zeros = vec![0.0; NX];
        prop_assert_eq!(grid.quadratic_form(&zeros, &zeros, &prm), 0.0);
    }
}

#[test]
fn quadratic_form_against_direct_summation() {
    // α₁ = 1, β = 1, γ = 1 so Q = 2‖v_x‖² for p = 0, which tends to π²/4.
    let grid = Grid1D::new(1.0, 201).unwrap();
    let prm = params(2.0, 1.0, 1.0);
    let v = grid.sine_mode(1);
    let p = vec![0.0; 201];
    let dx = grid.dx();
    let mut direct = 0.0;
    for j in 0..200 {
        let dv = (v[j + 1] - v[j]) / dx;
        direct += (1.0 * dv * dv + 1.0 * (dv - 0.0).powi(2)) * dx;
    }
    let q = grid.quadratic_form(&v, &p, &prm);
    assert_relative_eq!(q, direct, max_relative = 1e-12);
    assert_relative_eq!(q, PI * PI / 4.0, max_relative = 1e-4);
}

fn order(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn quadrature_converges_at_second_order() {
    let sizes = [21, 41, 81, 161];
    let lp: Vec<f64> = sizes
        .iter()
        .map(|&nx| {
            let g = Grid1D::new(1.0, nx).unwrap();
            (g.lp_norm_pow(&g.nodes(), 3.0) - 0.25).abs()
        })
        .collect();
    let prm = params(2.0, 1.0, 0.0);
    let grad: Vec<f64> = sizes
        .iter()
        .map(|&nx| {
            let g = Grid1D::new(1.0, nx).unwrap();
            (g.quadratic_form(&g.sine_mode(1), &vec![0.0; nx], &prm) - 2.0 * PI * PI / 8.0).abs()
        })
        .collect();
    for o in order(&lp).into_iter().chain(order(&grad)) {
        assert!((o - 2.0).abs() < 0.1, "observed order {o}");
    }
}

#[test]
fn laplacian_refinement_on_eigenfunction() {
    // γ = 0: the first component is α D₂v, and v = sin(πx/2) has v_xx = −(π/2)² v.
    let prm = params(2.0, 1.0, 0.0);
    let errors: Vec<f64> = [21, 41, 81, 161]
        .iter()
        .map(|&nx| {
            let g = Grid1D::new(1.0, nx).unwrap();
            let v = g.sine_mode(1);
            let (a, _) = g.coupled_laplacian(&v, &vec![0.0; nx], &prm);
            (1..nx - 1)
                .map(|j| (a[j] + 2.0 * (PI / 2.0).powi(2) * v[j]).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    for o in order(&errors) {
        assert!((o - 2.0).abs() < 0.1, "observed order {o}");
    }
}

#[test]
fn discrete_mode_eigenvalues() {
    // The half-sine modes are exact eigenvectors of the discrete operator
    // with eigenvalue (4/dx²) sin²((k − ½)π dx/(2L)).
    let g = Grid1D::new(2.0, 51).unwrap();
    let prm = params(2.0, 1.0, 0.0);
    for k in 1..=5 {
        let v = g.sine_mode(k);
        let (a, _) = g.coupled_laplacian(&v, &vec![0.0; 51], &prm);
        let mu = 4.0 / g.dx().powi(2)
            * ((k as f64 - 0.5) * PI * g.dx() / (2.0 * g.length()))
                .sin()
                .powi(2);
        for j in 1..51 {
            assert!(
                (a[j] + 2.0 * mu * v[j]).abs() < 1e-9 * (1.0 + mu),
                "k = {k}, j = {j}"
            );
        }
    }
}
