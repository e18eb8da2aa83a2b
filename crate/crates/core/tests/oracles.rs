//! Library results against independent oracles: nalgebra eigenvalues and
//! linear solves, and brute-force grids.

mod common;

use common::{oracle_spr, oracle_stein, sweep, to_nalgebra};
use posstab::criteria::{interior_small_gain, uniform_small_gain_margin};
use posstab::gallery::gallery_build;
use posstab::lyapunov::solve_stein;
use posstab::operators::spectral_radius_on_cone;
use posstab::{ConeSpec, Norm, OperatorSpec};

fn upper2x2() -> OperatorSpec {
    OperatorSpec::dense_from_rows(&[vec![0.5, 1.0], vec![0.0, 0.5]]).unwrap()
}

#[test]
fn spectral_bracket_contains_eigenvalue_oracle() {
    for (i, c) in sweep().iter().enumerate() {
        let cone = ConeSpec::orthant(c.op.dim(), c.norm);
        let est = spectral_radius_on_cone(&c.op, &cone).unwrap();
        let rho = oracle_spr(&c.op.to_matrix());
        let slack = 1e-9 * rho.max(1.0);
        assert!(
            est.lower - slack <= rho && rho <= est.upper + slack,
            "case {i}: oracle {rho} outside [{}, {}]",
            est.lower,
            est.upper
        );
    }
}

#[test]
fn stein_matches_kronecker_solve() {
    for c in sweep().iter().filter(|c| c.stable() && c.op.dim() <= 6) {
        let cert = solve_stein(&c.op).unwrap();
        let q = oracle_stein(&c.op.to_matrix());
        let n = c.op.dim();
        for i in 0..n {
            for j in 0..n {
                assert!((q[(i, j)] - cert.q[(i, j)]).abs() <= 1e-8);
            }
        }
    }
}

/// `inf` of `dist(Tx − x, K)/‖x‖` over a fine grid of the unit sphere of
/// the orthant under the max norm.
fn grid_eta_linf(op: &OperatorSpec, steps: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        for x in [[1.0, t], [t, 1.0]] {
            let tx = op.apply(&x).unwrap();
            let d = tx.iter().zip(&x).map(|(a, b)| (b - a).max(0.0)).fold(0.0, f64::max);
            best = best.min(d);
        }
    }
    best
}

#[test]
fn upper_example_margin_matches_grid() {
    let op = upper2x2();
    let (m, v) = uniform_small_gain_margin(&op, &ConeSpec::orthant(2, Norm::LInf)).unwrap();
    let grid = grid_eta_linf(&op, 30_000);
    assert!((grid - 1.0 / 6.0).abs() < 1e-4);
    let eta = m.eta_emp.unwrap();
    assert!((eta - 1.0 / 6.0).abs() < 1e-9, "{eta}");
    assert!(eta <= grid + 1e-12);
    assert!(v.holds);
}

#[test]
fn interior_margin_is_reciprocal_resolvent_norm() {
    for c in sweep().iter().filter(|c| c.stable()).take(40) {
        let n = c.op.dim();
        let cone = ConeSpec::orthant(n, c.norm);
        let z: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 / n as f64).collect();
        let (eta, v) = interior_small_gain(&c.op, &cone, &z).unwrap();
        let t = to_nalgebra(&c.op.to_matrix());
        let r = (nalgebra::DMatrix::<f64>::identity(n, n) - t).try_inverse().unwrap();
        let rz = r * nalgebra::DVector::from_column_slice(&z);
        let expected = 1.0 / c.norm.of(rz.as_slice());
        assert!((eta - expected).abs() <= 1e-8 * expected.max(1.0), "{eta} vs {expected}");
        assert!(v.holds);
    }
}

#[test]
fn upper_example_interior_margin_is_one_sixth() {
    let (eta, _) = interior_small_gain(&upper2x2(), &ConeSpec::orthant(2, Norm::LInf), &[1.0, 1.0]).unwrap();
    assert!((eta - 1.0 / 6.0).abs() < 1e-10);
}

#[test]
fn lorentz_demo_spectral_radius_matches_oracle() {
    let entry = gallery_build("lorentz_demo", None).unwrap();
    let est = spectral_radius_on_cone(&entry.operator, &entry.cone).unwrap();
    let rho = oracle_spr(&entry.operator.to_matrix());
    assert!(est.lower - 1e-9 <= rho && rho <= est.upper + 1e-9, "{rho} vs {est:?}");
    // frozen from the eigenvalue oracle: the boost-rotation product has
    // spectral radius 1, so the demo sits at 0.4
    assert!((rho - 0.4).abs() < 1e-12, "{rho}");
    assert!((est.mid() - 0.4).abs() < 1e-9);
}
