//! Positivity of `(I − T)⁻¹` and the monotone bounded invertibility constant.

use crate::cones::{self, ConeSpec};
use crate::error::Result;
use crate::linalg::{sub, Norm};
use crate::operators::OperatorSpec;
use crate::sampling::{cone_point, lorentz_boundary_ray};

use super::{Analysis, CriterionId, CriterionVerdict, Witness};

/// Entries of a resolvent column may dip this far below the cone, relative
/// to the column's size.
pub const RESOLVENT_CONE_TOL: f64 = 1e-10;
pub const LORENTZ_RESOLVENT_RAYS: usize = 512;
pub const MBI_TRIALS: usize = 1000;

pub fn check_resolvent_positivity(op: &OperatorSpec, cone: &ConeSpec) -> Result<CriterionVerdict> {
    let a = Analysis::new(op, cone)?;
    Ok(resolvent_verdict(&a))
}

fn proximity_verdict(a: &Analysis, id: CriterionId) -> CriterionVerdict {
    let note = a
        .inverse_error
        .as_ref()
        .map(|e| format!("SPECTRAL_PROXIMITY: {e}"))
        .unwrap_or_else(|| "SPECTRAL_PROXIMITY".into());
    CriterionVerdict::new(
        id,
        false,
        0.0,
        Some(Witness::SpectralBracket {
            lower: a.spectral.lower,
            upper: a.spectral.upper,
        }),
    )
    .with_note(note)
}

pub(crate) fn resolvent_verdict(a: &Analysis) -> CriterionVerdict {
    let Some(inv) = &a.inverse else {
        return proximity_verdict(a, CriterionId::ResolventPos);
    };
    let n = a.dim();
    if a.cone.is_orthant() {
        let mut margin = f64::INFINITY;
        for j in 0..n {
            let col = inv.column(j);
            let scale = Norm::LInf.of(&col).max(1.0);
            let low = col.iter().copied().fold(f64::INFINITY, f64::min);
            margin = margin.min(low);
            if low < -RESOLVENT_CONE_TOL * scale {
                return CriterionVerdict::new(
                    CriterionId::ResolventPos,
                    false,
                    low,
                    Some(Witness::ResolventColumn { index: j, column: col }),
                );
            }
        }
        return CriterionVerdict::new(CriterionId::ResolventPos, true, margin, None);
    }

    // Lorentz: positivity of a linear map is decided on boundary rays.
    let mut rays: Vec<Vec<f64>> = vec![a.cone.axis()];
    for i in 1..n {
        for sign in [1.0, -1.0] {
            let mut r = vec![0.0; n];
            r[0] = 1.0;
            r[i] = sign;
            rays.push(r);
        }
    }
    if let Some(v) = a.perron_unit() {
        rays.push(v);
    }
    let mut rng = a.rng("resolvent-rays");
    rays.extend((0..LORENTZ_RESOLVENT_RAYS).map(|_| lorentz_boundary_ray(&mut rng, n)));
    let mut margin = f64::INFINITY;
    for ray in rays {
        let image = inv.mul_vec(&ray);
        let scale = Norm::LInf.of(&image).max(1.0);
        let gap = image[0] - Norm::L2.of(&image[1..]);
        margin = margin.min(gap / scale);
        if gap < -RESOLVENT_CONE_TOL * scale {
            return CriterionVerdict::new(
                CriterionId::ResolventPos,
                false,
                gap / scale,
                Some(Witness::ResolventRay { ray, image }),
            );
        }
    }
    CriterionVerdict::new(CriterionId::ResolventPos, true, margin, None)
}

/// `c = C·‖(I − T)⁻¹‖` together with the verdict of a falsification search
/// over ordered pairs.
pub fn mbi_constant(op: &OperatorSpec, cone: &ConeSpec) -> Result<(Option<f64>, CriterionVerdict)> {
    let a = Analysis::new(op, cone)?;
    Ok(mbi_verdict(&a))
}

pub(crate) fn mbi_verdict(a: &Analysis) -> (Option<f64>, CriterionVerdict) {
    let resolvent = resolvent_verdict(a);
    let fail = |fallback: CriterionVerdict| {
        let witness = match a.super_fixed_vector() {
            Some(x) => Some(Witness::OrderedPair {
                y: vec![0.0; x.len()],
                x,
                c: f64::MAX,
            }),
            None => fallback.witness,
        };
        CriterionVerdict::new(CriterionId::Mbi, false, 0.0, witness)
    };
    if !resolvent.holds {
        return (None, fail(resolvent));
    }
    let inv = a.inverse.as_ref().expect("resolvent verdict holds");
    let c = a.constants.normality_c * inv.induced_norm(a.cone.norm);

    let mut rng = a.rng("mbi");
    for _ in 0..MBI_TRIALS {
        let x = cone_point(&mut rng, &a.cone);
        let lhs = sub(&x, &a.apply(&x));
        let (plus, _) = cones::decompose(&a.cone, &lhs).expect("dimension checked");
        let slack: Vec<f64> = cone_point(&mut rng, &a.cone).iter().map(|v| 0.1 * v).collect();
        let y: Vec<f64> = plus.iter().zip(&slack).map(|(p, s)| p + s).collect();
        let nx = a.cone.norm.of(&x);
        let ny = a.cone.norm.of(&y);
        if nx > c * ny * (1.0 + 1e-9) + 1e-300 {
            return (
                Some(c),
                CriterionVerdict::new(CriterionId::Mbi, false, 0.0, Some(Witness::OrderedPair { x, y, c }))
                    .with_note("ordered pair exceeds the certified constant"),
            );
        }
    }
    (Some(c), CriterionVerdict::new(CriterionId::Mbi, true, 1.0 / c, None).with_note(format!("c = {c:e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_example_inverse_and_constant() {
        let op = OperatorSpec::dense_from_rows(&[vec![0.5, 1.0], vec![0.0, 0.5]]).unwrap();
        let cone = ConeSpec::orthant(2, Norm::LInf);
        let a = Analysis::new(&op, &cone).unwrap();
        let inv = a.inverse.as_ref().unwrap();
        let expect = [[2.0, 4.0], [0.0, 2.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv[(i, j)] - expect[i][j]).abs() < 1e-12);
            }
        }
        assert!(resolvent_verdict(&a).holds);
        let (c, v) = mbi_verdict(&a);
        assert!((c.unwrap() - 6.0).abs() < 1e-12);
        assert!(v.holds);
    }

    #[test]
    fn scalar_cases() {
        let cone = ConeSpec::orthant(1, Norm::LInf);
        let v = check_resolvent_positivity(&OperatorSpec::diagonal(vec![2.0]).unwrap(), &cone).unwrap();
        assert!(!v.holds);
        assert!(matches!(v.witness, Some(Witness::ResolventColumn { index: 0, .. })));
        let (c, _) = mbi_constant(&OperatorSpec::diagonal(vec![0.5]).unwrap(), &cone).unwrap();
        assert!((c.unwrap() - 2.0).abs() < 1e-12);
        let (c, _) = mbi_constant(&OperatorSpec::diagonal(vec![0.0, 0.0]).unwrap(), &ConeSpec::orthant(2, Norm::L2)).unwrap();
        assert!((c.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_eigenvalue_is_proximity() {
        let v = check_resolvent_positivity(&OperatorSpec::diagonal(vec![1.0]).unwrap(), &ConeSpec::orthant(1, Norm::L1)).unwrap();
        assert!(!v.holds);
        assert!(matches!(v.witness, Some(Witness::SpectralBracket { .. })));
    }

    #[test]
    fn lorentz_expanding_boost_fails() {
        // the boost has eigenvalue e^{1.2} > 1 on the cone
        let (ch, sh) = (1.2_f64.cosh(), 1.2_f64.sinh());
        let op = OperatorSpec::dense_from_rows(&[vec![ch, sh, 0.0], vec![sh, ch, 0.0], vec![0.0, 0.0, 1.0]])
            .unwrap();
        let cone = ConeSpec::lorentz(3, Norm::L2);
        let v = check_resolvent_positivity(&op.clone(), &cone);
        // the identity block puts 1 in the spectrum, so either proximity or a ray
        assert!(!v.unwrap().holds);
        let shrunk = OperatorSpec::dense(op.to_matrix().scale(0.2)).unwrap();
        assert!(check_resolvent_positivity(&shrunk, &cone).unwrap().holds);
    }
}
