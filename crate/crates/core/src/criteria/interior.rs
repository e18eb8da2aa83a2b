//! Criteria that use interior points: the dual small-gain condition, the
//! interior small-gain margin, and points of strict decay.

use serde::{Deserialize, Serialize};

use crate::cones::{self, ratio_lower, ratio_upper, ConeSpec};
use crate::error::{Error, Result};
use crate::linalg::{normalized, Norm};
use crate::operators::{resolvent_apply_with, spectral_radius_on_cone, OperatorSpec};

use super::{cone_geq, Analysis, CriterionId, CriterionVerdict, Witness};

pub fn dual_small_gain(op: &OperatorSpec, cone: &ConeSpec) -> Result<CriterionVerdict> {
    let a = Analysis::new(op, cone)?;
    Ok(dual_verdict(&a))
}

pub(crate) fn dual_verdict(a: &Analysis) -> CriterionVerdict {
    let d = &a.dual_spectral;
    let value = d.perron_value.unwrap_or(d.upper);
    if value < 1.0 {
        return CriterionVerdict::new(CriterionId::DualSg, true, 1.0 - value, None);
    }
    let witness = d
        .perron_vector
        .as_ref()
        .and_then(|v| normalized(v, Norm::L1))
        .filter(|v| cone_geq(&a.cone, &a.op.adjoint().apply(v).unwrap_or_default(), v, 1e-10).unwrap_or(false))
        .map(|x_prime| Witness::DualFunctional { x_prime })
        .unwrap_or(Witness::SpectralBracket {
            lower: d.lower,
            upper: d.upper,
        });
    CriterionVerdict::new(CriterionId::DualSg, false, 1.0 - value, Some(witness))
}

const ETA_BISECTIONS: usize = 60;
const FEASIBILITY_ITERATIONS: usize = 2000;

enum Feasibility {
    Feasible(Vec<f64>),
    Infeasible,
    Unknown(Vec<f64>),
}

/// Is there a cone vector with `x ≤ Tx + η‖x‖z`? Decided by Collatz–Wielandt
/// ratios along the monotone iteration `x ← G(x)/‖G(x)‖`.
fn feasibility(a: &Analysis, z: &[f64], eta: f64, seeds: &[Vec<f64>]) -> Feasibility {
    let g = |x: &[f64]| -> Vec<f64> {
        let nx = a.cone.norm.of(x);
        a.apply(x).iter().zip(z).map(|(t, zi)| (t + eta * nx * zi).max(0.0)).collect()
    };
    let mut last = seeds[0].clone();
    for seed in seeds {
        let Some(mut x) = normalized(seed, a.cone.norm) else { continue };
        for _ in 0..FEASIBILITY_ITERATIONS {
            let gx = g(&x);
            if ratio_lower(&a.cone, &x, &gx) >= 1.0 {
                return Feasibility::Feasible(x);
            }
            if ratio_upper(&a.cone, &x, &gx) < 1.0 {
                return Feasibility::Infeasible;
            }
            match normalized(&gx, a.cone.norm) {
                Some(next) => {
                    let moved = Norm::LInf.of(&crate::linalg::sub(&next, &x));
                    x = next;
                    if moved == 0.0 {
                        break;
                    }
                }
                None => return Feasibility::Infeasible,
            }
        }
        last = x;
    }
    Feasibility::Unknown(last)
}

/// Largest `η` such that no cone vector satisfies `Tx ≥ x − η‖x‖z`,
/// bisected on `[0, 1/max zᵢ]`. Orthant cones only.
pub fn interior_small_gain(op: &OperatorSpec, cone: &ConeSpec, z: &[f64]) -> Result<(f64, CriterionVerdict)> {
    let a = Analysis::new(op, cone)?;
    interior_eta(&a, z)
}

fn interior_eta(a: &Analysis, z: &[f64]) -> Result<(f64, CriterionVerdict)> {
    Error::check_dim(a.dim(), z.len())?;
    if !a.cone.is_orthant() {
        return Err(Error::UnsupportedCombination(
            "interior small-gain search is implemented for the orthant only".into(),
        ));
    }
    if !cones::is_interior(&a.cone, z)?.0 {
        return Err(Error::InvalidArgument("z must be an interior point of the cone".into()));
    }
    let n = a.dim();
    let mut seeds = vec![vec![1.0; n]];
    if let Some(inv) = &a.inverse {
        seeds.push(inv.mul_vec(z));
    }
    if let Some(v) = &a.spectral.perron_vector {
        seeds.push(v.clone());
    }
    seeds.extend((0..n).map(|i| crate::linalg::unit(n, i)));

    let zmax = z.iter().copied().fold(0.0, f64::max);
    let (mut lo, mut hi) = (0.0, 1.0 / zmax);
    let mut witness = None;
    match feasibility(a, z, 0.0, &seeds) {
        Feasibility::Feasible(x) | Feasibility::Unknown(x) => {
            witness = Some(x);
            hi = 0.0;
        }
        Feasibility::Infeasible => {}
    }
    for _ in 0..ETA_BISECTIONS {
        if hi <= lo {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match feasibility(a, z, mid, &seeds) {
            Feasibility::Infeasible => lo = mid,
            Feasibility::Feasible(_) | Feasibility::Unknown(_) => hi = mid,
        }
    }
    let holds = lo > a.tol;
    let verdict = if holds {
        CriterionVerdict::new(CriterionId::InteriorSg, true, lo, None)
    } else {
        let x = a.super_fixed_vector().or(witness).unwrap_or_else(|| vec![1.0; n]);
        CriterionVerdict::new(CriterionId::InteriorSg, false, lo, Some(Witness::ConeVector { x }))
    };
    Ok((lo, verdict))
}

pub(crate) fn interior_verdict(a: &Analysis, z: Option<&[f64]>) -> Result<Option<CriterionVerdict>> {
    if !a.cone.is_orthant() {
        return Ok(None);
    }
    let ones = vec![1.0; a.dim()];
    interior_eta(a, z.unwrap_or(&ones)).map(|(_, v)| Some(v))
}

/// Interior `z` with `Tz ≤ λz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrictDecayCertificate {
    pub z: Vec<f64>,
    pub lambda: f64,
    /// Smallest `λ′` with `Tz ≤ λ′z`.
    pub lambda_prime: f64,
    pub interior_margin: f64,
}

/// Tolerance on the decay inequalities of a strict-decay certificate.
pub const STRICT_DECAY_TOL: f64 = 1e-10;

/// `z = (λI − T)⁻¹y` for interior `y`, with every certificate inequality
/// re-checked.
pub fn strict_decay_point(op: &OperatorSpec, cone: &ConeSpec, lambda: f64, y: &[f64]) -> Result<StrictDecayCertificate> {
    Error::check_dim(cone.dim, op.dim())?;
    Error::check_dim(cone.dim, y.len())?;
    let est = spectral_radius_on_cone(op, cone)?;
    strict_decay_with(op, cone, &est, lambda, y)
}

fn strict_decay_with(
    op: &OperatorSpec,
    cone: &ConeSpec,
    est: &crate::operators::SpectralEstimate,
    lambda: f64,
    y: &[f64],
) -> Result<StrictDecayCertificate> {
    if !(lambda < 1.0) {
        return Err(Error::InvalidArgument(format!("lambda must be below 1, got {lambda}")));
    }
    if !(lambda > est.upper) {
        return Err(Error::SpectralProximity {
            lambda,
            lower: est.lower,
            upper: est.upper,
        });
    }
    if !cones::is_interior(cone, y)?.0 {
        return Err(Error::InvalidArgument("y must be an interior point of the cone".into()));
    }
    let z = resolvent_apply_with(op, est, lambda, y)?;
    let y_scaled: Vec<f64> = y.iter().map(|v| v / lambda).collect();
    if !cone_geq(cone, &z, &y_scaled, STRICT_DECAY_TOL)? {
        return Err(Error::CrossCheck("z does not dominate y/lambda".into()));
    }
    let tz = op.apply(&z)?;
    let lambda_prime = ratio_upper(cone, &z, &tz);
    if !(lambda_prime <= lambda + STRICT_DECAY_TOL) {
        return Err(Error::CrossCheck(format!(
            "Tz <= {lambda_prime}·z exceeds lambda = {lambda}"
        )));
    }
    let (inside, interior_margin) = cones::is_interior(cone, &z)?;
    if !inside {
        return Err(Error::CrossCheck("z is not interior".into()));
    }
    Ok(StrictDecayCertificate {
        z,
        lambda,
        lambda_prime,
        interior_margin,
    })
}

pub fn strict_decay_verdict(op: &OperatorSpec, cone: &ConeSpec) -> Result<CriterionVerdict> {
    let a = Analysis::new(op, cone)?;
    Ok(strict_decay_verdict_for(&a))
}

pub(crate) fn strict_decay_verdict_for(a: &Analysis) -> CriterionVerdict {
    let upper = a.spectral.upper;
    if upper < 1.0 {
        let lambda = 0.5 * (upper + 1.0);
        match strict_decay_with(&a.op, &a.cone, &a.spectral, lambda, &a.cone.axis()) {
            Ok(cert) => {
                return CriterionVerdict::new(
                    CriterionId::StrictDecay,
                    true,
                    1.0 - cert.lambda_prime,
                    Some(Witness::StrictDecay {
                        z: cert.z,
                        lambda: cert.lambda,
                        interior_margin: cert.interior_margin,
                    }),
                )
            }
            Err(e) => {
                return CriterionVerdict::new(
                    CriterionId::StrictDecay,
                    false,
                    0.0,
                    Some(Witness::SpectralBracket {
                        lower: a.spectral.lower,
                        upper,
                    }),
                )
                .with_note(format!("construction failed: {e}"))
            }
        }
    }
    // a positive dual functional that T′ does not shrink rules out every
    // point of strict decay
    let dual = dual_verdict(a);
    let witness = match dual.witness {
        Some(w @ Witness::DualFunctional { .. }) => w,
        _ => Witness::SpectralBracket {
            lower: a.spectral.lower,
            upper,
        },
    };
    CriterionVerdict::new(CriterionId::StrictDecay, false, 1.0 - upper, Some(witness))
}
