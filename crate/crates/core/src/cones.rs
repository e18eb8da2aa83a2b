//! Ordered cones in R^n: the nonnegative orthant and the Lorentz (ice-cream)
//! cone, each paired with one of the three standard norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeKind {
    Orthant,
    Lorentz,
}

impl std::str::FromStr for ConeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "orthant" => Ok(ConeKind::Orthant),
            "lorentz" => Ok(ConeKind::Lorentz),
            other => Err(Error::InvalidArgument(format!("unknown cone '{other}'"))),
        }
    }
}

/// A cone together with the norm that measures distances and operator sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConeSpec {
    pub kind: ConeKind,
    pub dim: usize,
    pub norm: Norm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeConstants {
    /// `‖x‖ ≤ C‖y‖` whenever `0 ≤ x ≤ y`.
    pub normality_c: f64,
    /// Every `x` splits as `y − z` with cone parts of norm at most `M‖x‖`.
    pub decomposition_m: f64,
    /// Decomposition constant of the dual cone in the dual norm.
    pub dual_m_prime: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeParts {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    pub abs: Vec<f64>,
}

impl ConeSpec {
    pub fn new(kind: ConeKind, dim: usize, norm: Norm) -> Result<Self> {
        let min_dim = match kind {
            ConeKind::Orthant => 1,
            ConeKind::Lorentz => 2,
        };
        if dim < min_dim {
            return Err(Error::InvalidArgument(format!(
                "{kind:?} cone needs dim >= {min_dim}, got {dim}"
            )));
        }
        Ok(ConeSpec { kind, dim, norm })
    }

    pub fn orthant(dim: usize, norm: Norm) -> Self {
        ConeSpec::new(ConeKind::Orthant, dim, norm).expect("orthant dim >= 1")
    }

    pub fn lorentz(dim: usize, norm: Norm) -> Self {
        ConeSpec::new(ConeKind::Lorentz, dim, norm).expect("lorentz dim >= 2")
    }

    pub fn is_orthant(&self) -> bool {
        self.kind == ConeKind::Orthant
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        Error::check_dim(self.dim, x.len())
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        contains(self, x, tol)
    }

    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        distance(self, x)
    }

    pub fn is_interior(&self, x: &[f64]) -> Result<(bool, f64)> {
        is_interior(self, x)
    }

    pub fn decompose(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        decompose(self, x)
    }

    pub fn constants(&self) -> ConeConstants {
        cone_constants(self)
    }

    /// A canonical interior point: all-ones for the orthant, the axis `e₀`
    /// for the Lorentz cone.
    pub fn axis(&self) -> Vec<f64> {
        match self.kind {
            ConeKind::Orthant => vec![1.0; self.dim],
            ConeKind::Lorentz => {
                let mut e = vec![0.0; self.dim];
                e[0] = 1.0;
                e
            }
        }
    }
}

fn lorentz_split(x: &[f64]) -> (f64, f64) {
    let rest = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
    (x[0], rest)
}

pub fn contains(cone: &ConeSpec, x: &[f64], tol: f64) -> Result<bool> {
    cone.check(x)?;
    Ok(match cone.kind {
        ConeKind::Orthant => x.iter().all(|v| *v >= -tol),
        ConeKind::Lorentz => {
            let (x0, r) = lorentz_split(x);
            x0 + tol >= r
        }
    })
}

pub fn distance(cone: &ConeSpec, x: &[f64]) -> Result<f64> {
    cone.check(x)?;
    match cone.kind {
        ConeKind::Orthant => {
            let neg: Vec<f64> = x.iter().map(|v| (-v).max(0.0)).collect();
            Ok(cone.norm.of(&neg))
        }
        ConeKind::Lorentz => {
            if cone.norm != Norm::L2 {
                return Err(Error::UnsupportedCombination(format!(
                    "distance to the Lorentz cone is only available under l2, not {}",
                    cone.norm.name()
                )));
            }
            let (s, t) = lorentz_split(x);
            Ok(if t <= s {
                0.0
            } else if t <= -s {
                Norm::L2.of(x)
            } else {
                (t - s) / std::f64::consts::SQRT_2
            })
        }
    }
}

/// Radius of the largest ball around `x` inside the cone, with the boolean
/// reporting strict positivity. Non-interior points get a margin `≤ 0`.
pub fn is_interior(cone: &ConeSpec, x: &[f64]) -> Result<(bool, f64)> {
    cone.check(x)?;
    let margin = match cone.kind {
        ConeKind::Orthant => x.iter().copied().fold(f64::INFINITY, f64::min),
        ConeKind::Lorentz => {
            let (x0, r) = lorentz_split(x);
            let gap = x0 - r;
            if gap <= 0.0 {
                match cone.norm {
                    Norm::L2 => gap / std::f64::consts::SQRT_2,
                    _ => gap,
                }
            } else {
                lorentz_margin(cone.norm, x, x0, r)
            }
        }
    };
    Ok((margin > 0.0, margin))
}

fn lorentz_margin(norm: Norm, x: &[f64], x0: f64, r: f64) -> f64 {
    let rest = &x[1..];
    match norm {
        Norm::L2 => (x0 - r) / std::f64::consts::SQRT_2,
        Norm::LInf => {
            // worst corner: x₀ − ε against |rᵢ| + ε in every slot
            let n = x.len() as f64;
            let r1: f64 = rest.iter().map(|v| v.abs()).sum();
            let a = n - 2.0;
            let b = 2.0 * (x0 + r1);
            let c = -(x0 * x0 - r * r);
            if a == 0.0 {
                -c / b
            } else {
                let disc = (b * b - 4.0 * a * c).max(0.0);
                // stable form of (−b + √disc)/(2a)
                (-2.0 * c) / (b + disc.sqrt())
            }
        }
        Norm::L1 => {
            // the L1 ball is the hull of ±ε eᵢ, so checking vertices suffices
            let rmax = rest.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let side = -rmax + (rmax * rmax - r * r + x0 * x0).max(0.0).sqrt();
            (x0 - r).min(side)
        }
    }
}

pub fn lattice_parts(x: &[f64]) -> LatticeParts {
    LatticeParts {
        plus: x.iter().map(|v| v.max(0.0)).collect(),
        minus: x.iter().map(|v| (-v).max(0.0)).collect(),
        abs: x.iter().map(|v| v.abs()).collect(),
    }
}

/// Lattice parts, refusing cones that do not induce a lattice order.
pub fn lattice_parts_in(cone: &ConeSpec, x: &[f64]) -> Result<LatticeParts> {
    cone.check(x)?;
    if !cone.is_orthant() {
        return Err(Error::NotALattice);
    }
    Ok(lattice_parts(x))
}

pub fn decompose(cone: &ConeSpec, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    cone.check(x)?;
    Ok(match cone.kind {
        ConeKind::Orthant => {
            let p = lattice_parts(x);
            (p.plus, p.minus)
        }
        ConeKind::Lorentz => {
            let (x0, r) = lorentz_split(x);
            let t = (r - x0).max(0.0);
            let mut y = x.to_vec();
            y[0] += t;
            let mut z = vec![0.0; x.len()];
            z[0] = t;
            (y, z)
        }
    })
}

pub fn cone_constants(cone: &ConeSpec) -> ConeConstants {
    match cone.kind {
        ConeKind::Orthant => ConeConstants {
            normality_c: 1.0,
            decomposition_m: 1.0,
            dual_m_prime: 1.0,
        },
        ConeKind::Lorentz => {
            let s2 = std::f64::consts::SQRT_2;
            let k = 1.0 + ((cone.dim - 1) as f64).sqrt();
            // The Lorentz cone is self-dual and the dual of l1 is linf (and
            // vice versa), so M′ is the primal M of the dual norm.
            let (c, m, mp) = match cone.norm {
                Norm::L2 => (s2, s2, s2),
                Norm::L1 => (k, 2.0, k),
                Norm::LInf => (1.0, k, 2.0),
            };
            ConeConstants {
                normality_c: c,
                decomposition_m: m,
                dual_m_prime: mp,
            }
        }
    }
}

/// A positive functional `z′` with `⟨z′, x⟩ ≥ 1` for a unit cone vector `x`,
/// and dual norm at most `M′`.
pub fn dual_functional(cone: &ConeSpec, x: &[f64]) -> Result<Vec<f64>> {
    cone.check(x)?;
    let n = x.len();
    let scale = cone.norm.of(x);
    if scale == 0.0 {
        return Err(Error::InvalidArgument("dual functional of the zero vector".into()));
    }
    let z = match (cone.kind, cone.norm) {
        (ConeKind::Orthant, Norm::LInf) => {
            let i = (0..n)
                .max_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap_or(std::cmp::Ordering::Equal))
                .unwrap_or(0);
            let mut z = vec![0.0; n];
            z[i] = 1.0 / x[i];
            z
        }
        (ConeKind::Orthant, Norm::L1) => {
            let s: f64 = x.iter().sum();
            vec![1.0 / s; n]
        }
        (ConeKind::Orthant, Norm::L2) => {
            let s = dot(x, x);
            x.iter().map(|v| v.max(0.0) / s).collect()
        }
        (ConeKind::Lorentz, _) => {
            let mut z = vec![0.0; n];
            z[0] = 1.0 / x[0];
            z
        }
    };
    Ok(z)
}

/// Euclidean projection onto the cone. Used to keep searches feasible; it
/// is the nearest point only under l2.
pub fn project(cone: &ConeSpec, x: &[f64]) -> Result<Vec<f64>> {
    cone.check(x)?;
    Ok(match cone.kind {
        ConeKind::Orthant => x.iter().map(|v| v.max(0.0)).collect(),
        ConeKind::Lorentz => {
            let (s, t) = lorentz_split(x);
            if t <= s {
                x.to_vec()
            } else if t <= -s {
                vec![0.0; x.len()]
            } else {
                let a = 0.5 * (s + t);
                let mut y = vec![a];
                y.extend(x[1..].iter().map(|v| a * v / t));
                y
            }
        }
    })
}

const RATIO_BISECTIONS: usize = 200;

/// `sup{λ : y − λx ∈ K}` for `x` in the cone (Collatz–Wielandt lower ratio).
pub fn ratio_lower(cone: &ConeSpec, x: &[f64], y: &[f64]) -> f64 {
    match cone.kind {
        ConeKind::Orthant => {
            let mut best = f64::INFINITY;
            for (xi, yi) in x.iter().zip(y) {
                if *xi > 0.0 {
                    best = best.min(yi / xi);
                } else if *yi < 0.0 {
                    return f64::NEG_INFINITY;
                }
            }
            best
        }
        ConeKind::Lorentz => {
            let member = |l: f64| {
                let v: Vec<f64> = y.iter().zip(x).map(|(b, a)| b - l * a).collect();
                let (v0, r) = lorentz_split(&v);
                v0 >= r
            };
            if x[0] <= 0.0 {
                return f64::NEG_INFINITY;
            }
            let mut hi = y[0] / x[0];
            if member(hi) {
                return hi;
            }
            let mut step = hi.abs().max(1.0);
            let mut lo = hi - step;
            let mut tries = 0;
            while !member(lo) {
                step *= 2.0;
                lo = hi - step;
                tries += 1;
                if tries > 60 {
                    return f64::NEG_INFINITY;
                }
            }
            for _ in 0..RATIO_BISECTIONS {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if member(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        }
    }
}

/// `inf{μ : μz − y ∈ K}` for `z` in the cone (Collatz–Wielandt upper ratio).
pub fn ratio_upper(cone: &ConeSpec, z: &[f64], y: &[f64]) -> f64 {
    match cone.kind {
        ConeKind::Orthant => {
            let mut best = f64::NEG_INFINITY;
            for (zi, yi) in z.iter().zip(y) {
                if *zi > 0.0 {
                    best = best.max(yi / zi);
                } else if *yi > 0.0 {
                    return f64::INFINITY;
                }
            }
            best
        }
        ConeKind::Lorentz => {
            let member = |m: f64| {
                let v: Vec<f64> = z.iter().zip(y).map(|(a, b)| m * a - b).collect();
                let (v0, r) = lorentz_split(&v);
                v0 >= r
            };
            if z[0] <= 0.0 {
                return f64::INFINITY;
            }
            let mut lo = y[0] / z[0];
            if member(lo) {
                return lo;
            }
            let mut step = lo.abs().max(1.0);
            let mut hi = lo + step;
            let mut tries = 0;
            while !member(hi) {
                step *= 2.0;
                hi = lo + step;
                tries += 1;
                if tries > 60 {
                    return f64::INFINITY;
                }
            }
            for _ in 0..RATIO_BISECTIONS {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if member(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        }
    }
}
