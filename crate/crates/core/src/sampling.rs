//! Seeded random sampling of cone points, directions and test inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cones::{ConeKind, ConeSpec};
use crate::linalg::{normalized, Norm};

pub type SearchRng = ChaCha8Rng;

/// Derive an independent stream from a base seed and a label, so results
/// never depend on evaluation order or thread count.
pub fn stream(seed: u64, label: &str) -> SearchRng {
    // FNV-1a over the label, mixed into the seed
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h.rotate_left(17))
}

pub fn gaussian_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Uniform direction on the Euclidean unit sphere.
pub fn unit_direction(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        if let Some(u) = normalized(&gaussian_vec(rng, n), Norm::L2) {
            return u;
        }
    }
}

/// `(1, u)` with `u` a unit vector: a generator of the Lorentz boundary.
pub fn lorentz_boundary_ray(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut v = vec![1.0];
    if n > 1 {
        v.extend(unit_direction(rng, n - 1));
    }
    v
}

/// A random nonzero cone element. Orthant samples include zeros so faces
/// get exercised.
pub fn cone_point(rng: &mut impl Rng, cone: &ConeSpec) -> Vec<f64> {
    let n = cone.dim;
    match cone.kind {
        ConeKind::Orthant => loop {
            let x: Vec<f64> = (0..n)
                .map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random::<f64>() })
                .collect();
            if x.iter().any(|v| *v > 0.0) {
                return x;
            }
        },
        ConeKind::Lorentz => {
            let t: f64 = rng.random::<f64>() + 1e-3;
            let frac: f64 = rng.random::<f64>();
            let dir = unit_direction(rng, n - 1);
            let mut x = vec![t];
            x.extend(dir.iter().map(|d| d * t * frac));
            x
        }
    }
}

/// A cone element of unit norm in the cone's norm.
pub fn unit_cone_point(rng: &mut impl Rng, cone: &ConeSpec) -> Vec<f64> {
    loop {
        if let Some(x) = normalized(&cone_point(rng, cone), cone.norm) {
            return x;
        }
    }
}

/// Uniform entries in `[-1, 1]`.
pub fn signed_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}
