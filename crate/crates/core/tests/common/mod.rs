//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use posstab::sampling::stream;
use posstab::{Matrix, Norm, OperatorSpec};
use rand::Rng;

pub const STABLE_TARGETS: [f64; 3] = [0.3, 0.7, 0.9];
pub const UNSTABLE_TARGETS: [f64; 3] = [1.1, 1.5, 3.0];
pub const SWEEP_SIZE: usize = 200;

pub fn to_nalgebra(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

/// Largest eigenvalue modulus from nalgebra's Schur-based eigensolver.
pub fn oracle_spr(m: &Matrix) -> f64 {
    to_nalgebra(m)
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Stein solution `TᵀQT − Q = −I` through the Kronecker system
/// `(I − Tᵀ⊗Tᵀ) vec Q = vec I`.
pub fn oracle_stein(m: &Matrix) -> DMatrix<f64> {
    let n = m.rows();
    let t = to_nalgebra(m);
    let tt = t.transpose();
    let k = tt.kronecker(&tt);
    let a = DMatrix::<f64>::identity(n * n, n * n) - k;
    let rhs = DMatrix::<f64>::identity(n, n);
    let b = nalgebra::DVector::from_column_slice(rhs.as_slice());
    let q = a.lu().solve(&b).expect("stable T gives a regular Kronecker system");
    DMatrix::from_column_slice(n, n, q.as_slice())
}

/// Nonnegative matrix with about 20% zero entries and nonzero spectral radius.
pub fn random_nonnegative(rng: &mut impl Rng, n: usize) -> Matrix {
    loop {
        let entries: Vec<f64> = (0..n * n)
            .map(|_| {
                if rng.random::<f64>() < 0.2 {
                    0.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let m = Matrix::from_fn(n, n, |i, j| entries[i * n + j]);
        if oracle_spr(&m) > 1e-3 {
            return m;
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepCase {
    pub op: OperatorSpec,
    pub target: f64,
    pub norm: Norm,
}

impl SweepCase {
    pub fn stable(&self) -> bool {
        self.target < 1.0
    }
}

/// The consensus sweep: sizes 2..=8, targets cycling through the six
/// spectral radii, norms cycling through l1, l2, linf.
pub fn sweep() -> Vec<SweepCase> {
    let mut rng = stream(2024, "acceptance-sweep");
    let targets: Vec<f64> = STABLE_TARGETS.iter().chain(&UNSTABLE_TARGETS).copied().collect();
    let norms = [Norm::L1, Norm::L2, Norm::LInf];
    (0..SWEEP_SIZE)
        .map(|i| {
            let n = rng.random_range(2..=8);
            let m = random_nonnegative(&mut rng, n);
            let target = targets[i % targets.len()];
            let scaled = m.scale(target / oracle_spr(&m));
            SweepCase {
                op: OperatorSpec::dense(scaled).unwrap(),
                target,
                norm: norms[(i / targets.len()) % norms.len()],
            }
        })
        .collect()
}

/// Matrix scaled to a given spectral radius.
pub fn scaled_to(rng: &mut impl Rng, n: usize, target: f64) -> OperatorSpec {
    let m = random_nonnegative(rng, n);
    OperatorSpec::dense(m.scale(target / oracle_spr(&m))).unwrap()
}
