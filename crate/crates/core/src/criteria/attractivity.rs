//! Criteria that hold unconditionally in finite dimension because every
//! operator there is quasi-compact: simple small-gain, positivity of
//! sub-fixed vectors, and attractivity on the cone.

use crate::cones::ConeSpec;
use crate::error::Result;
use crate::iss::decay_horizon;
use crate::linalg::normalized;
use crate::operators::OperatorSpec;
use crate::sampling::unit_cone_point;

use super::{Analysis, CriterionId, CriterionVerdict, Witness};

/// Orbits count as decayed once `‖Tᵏx‖ ≤ DECAY_THRESHOLD·‖x‖`.
pub const DECAY_THRESHOLD: f64 = 1e-8;
pub const ATTRACTIVITY_STARTS: usize = 32;

fn bracket(a: &Analysis) -> Witness {
    Witness::SpectralBracket {
        lower: a.spectral.lower,
        upper: a.spectral.upper,
    }
}

fn perron_value(a: &Analysis) -> f64 {
    a.perron_value().unwrap_or(a.spectral.upper)
}

pub fn simple_small_gain(op: &OperatorSpec, cone: &ConeSpec) -> Result<CriterionVerdict> {
    Ok(simple_verdict(&Analysis::new(op, cone)?))
}

pub fn subfixed_positivity(op: &OperatorSpec, cone: &ConeSpec) -> Result<CriterionVerdict> {
    Ok(subfixed_verdict(&Analysis::new(op, cone)?))
}

pub(crate) fn simple_verdict(a: &Analysis) -> CriterionVerdict {
    let value = perron_value(a);
    if value < 1.0 {
        return CriterionVerdict::new(CriterionId::SimpleSg, true, 1.0 - value, None);
    }
    let w = a.super_fixed_vector().map(|x| Witness::ConeVector { x }).unwrap_or_else(|| bracket(a));
    CriterionVerdict::new(CriterionId::SimpleSg, false, 1.0 - value, Some(w))
}

pub(crate) fn subfixed_verdict(a: &Analysis) -> CriterionVerdict {
    let value = perron_value(a);
    if value < 1.0 {
        return CriterionVerdict::new(CriterionId::SubfixedPos, true, 1.0 - value, None);
    }
    let w = a
        .super_fixed_vector()
        .map(|x| Witness::SubFixed {
            x: x.iter().map(|v| -v).collect(),
        })
        .unwrap_or_else(|| bracket(a));
    CriterionVerdict::new(CriterionId::SubfixedPos, false, 1.0 - value, Some(w))
}

struct Orbit {
    start: Vec<f64>,
    /// `log(‖Tᵏx‖/‖x‖)` for `k = 0..=horizon`.
    log_ratios: Vec<f64>,
}

fn orbit(a: &Analysis, x: &[f64], horizon: usize) -> Orbit {
    let norm = a.cone.norm;
    let mut v = normalized(x, norm).unwrap_or_else(|| x.to_vec());
    let mut log_scale = 0.0;
    let mut log_ratios = Vec::with_capacity(horizon + 1);
    log_ratios.push(0.0);
    for _ in 0..horizon {
        v = a.apply(&v);
        let nv = norm.of(&v);
        if nv == 0.0 {
            log_ratios.push(f64::NEG_INFINITY);
            continue;
        }
        log_scale += nv.ln();
        v.iter_mut().for_each(|e| *e /= nv);
        log_ratios.push(log_scale);
    }
    Orbit {
        start: x.to_vec(),
        log_ratios,
    }
}

fn starts(a: &Analysis) -> Vec<Vec<f64>> {
    let mut s = vec![a.cone.axis()];
    if let Some(v) = a.perron_unit() {
        s.push(v);
    }
    let mut rng = a.rng("attractivity");
    while s.len() < ATTRACTIVITY_STARTS {
        s.push(unit_cone_point(&mut rng, &a.cone));
    }
    s
}

/// Strong stability (orbits stay small over the last quarter of the
/// horizon) and weak attractivity (orbits get small at some point).
pub fn attractivity_verdicts(op: &OperatorSpec, cone: &ConeSpec) -> Result<(CriterionVerdict, CriterionVerdict)> {
    Ok(attractivity(&Analysis::new(op, cone)?))
}

pub(crate) fn attractivity(a: &Analysis) -> (CriterionVerdict, CriterionVerdict) {
    let horizon = decay_horizon(a.spectral.upper);
    let threshold = DECAY_THRESHOLD.ln();
    let orbits: Vec<Orbit> = starts(a).iter().map(|x| orbit(a, x, horizon)).collect();
    let tail_start = horizon - horizon / 4;

    // worst tail value and where it occurs, per orbit
    let mut strong_worst: Option<(usize, usize, f64)> = None;
    let mut weak_worst: Option<(usize, f64)> = None;
    for (i, o) in orbits.iter().enumerate() {
        let (k, m) = o.log_ratios[tail_start..]
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (j, v)| if *v > acc.1 { (j, *v) } else { acc });
        if strong_worst.is_none_or(|w| m > w.2) {
            strong_worst = Some((i, tail_start + k, m));
        }
        let low = o.log_ratios.iter().copied().fold(f64::INFINITY, f64::min);
        if weak_worst.is_none_or(|w| low > w.1) {
            weak_worst = Some((i, low));
        }
    }
    let (si, sk, slog) = strong_worst.expect("at least one start");
    let (wi, wlog) = weak_worst.expect("at least one start");
    let rate = |log: f64, k: usize| if k == 0 { 0.0 } else { 1.0 - (log / k as f64).exp() };

    let fail_witness = |i: usize, k: usize, log: f64| {
        a.super_fixed_vector()
            .map(|x| Witness::ConeVector { x })
            .unwrap_or_else(|| Witness::NonDecaying {
                x: orbits[i].start.clone(),
                horizon: k,
                ratio: log.exp(),
            })
    };

    let strong = if slog <= threshold {
        CriterionVerdict::new(CriterionId::StrongStab, true, rate(slog, sk), None)
    } else {
        CriterionVerdict::new(CriterionId::StrongStab, false, rate(slog, sk), Some(fail_witness(si, sk, slog)))
    };
    let weak = if wlog <= threshold {
        CriterionVerdict::new(CriterionId::WeakAttr, true, -wlog, None)
    } else {
        // the orbit never dips below the threshold, so its final value is a
        // valid non-decay witness too
        let k = horizon;
        CriterionVerdict::new(CriterionId::WeakAttr, false, -wlog, Some(fail_witness(wi, k, orbits[wi].log_ratios[k])))
    };
    (
        strong.with_note(format!("horizon {horizon}, {} starts", orbits.len())),
        weak.with_note(format!("horizon {horizon}, {} starts", orbits.len())),
    )
}

pub fn quasi_compact_suite(op: &OperatorSpec, cone: &ConeSpec) -> Result<Vec<CriterionVerdict>> {
    Ok(quasi_compact_verdicts(&Analysis::new(op, cone)?))
}

pub(crate) fn quasi_compact_verdicts(a: &Analysis) -> Vec<CriterionVerdict> {
    let (strong, weak) = attractivity(a);
    vec![simple_verdict(a), subfixed_verdict(a), strong, weak]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Norm;

    #[test]
    fn upper_example_all_hold() {
        let op = OperatorSpec::dense_from_rows(&[vec![0.5, 1.0], vec![0.0, 0.5]]).unwrap();
        let v = quasi_compact_suite(&op, &ConeSpec::orthant(2, Norm::LInf)).unwrap();
        assert_eq!(v.len(), 4);
        assert!(v.iter().all(|v| v.holds), "{v:#?}");
    }

    #[test]
    fn identity_fails_with_fixed_vector() {
        let op = OperatorSpec::diagonal(vec![1.0]).unwrap();
        let cone = ConeSpec::orthant(1, Norm::LInf);
        let v = quasi_compact_suite(&op, &cone).unwrap();
        assert!(v.iter().all(|v| !v.holds));
        assert_eq!(v[0].witness, Some(Witness::ConeVector { x: vec![1.0] }));
        assert_eq!(v[1].witness, Some(Witness::SubFixed { x: vec![-1.0] }));
        assert!(v.iter().all(|w| w.reverify(&op, &cone)));
    }

    #[test]
    fn rotation_on_lorentz_decays_when_scaled() {
        let t = 0.7_f64;
        let op = OperatorSpec::dense_from_rows(&[
            vec![0.6, 0.0, 0.0],
            vec![0.0, 0.6 * t.cos(), -0.6 * t.sin()],
            vec![0.0, 0.6 * t.sin(), 0.6 * t.cos()],
        ])
        .unwrap();
        let v = quasi_compact_suite(&op, &ConeSpec::lorentz(3, Norm::L2)).unwrap();
        assert!(v.iter().all(|v| v.holds), "{v:#?}");
    }
}
