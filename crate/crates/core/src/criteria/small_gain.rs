//! Uniform, robust and rank-one small-gain conditions, plus the rank-one
//! destabilizer built from an approximate positive eigenvector.

use serde::{Deserialize, Serialize};

use crate::cones::{self, ConeKind, ConeSpec};
use crate::error::{Error, Result};
use crate::linalg::{dot, normalized, sub, unit, Norm};
use crate::operators::{resolvent_apply_with, OperatorSpec};
use crate::sampling::unit_cone_point;

use super::{flags, resolvent, Analysis, CriterionId, CriterionVerdict, JobOutput, Witness};

pub const RANDOM_STARTS: usize = 64;
pub const REFINED_STARTS: usize = 8;
const PATTERN_EVALS: usize = 4000;
const PATTERN_MIN_STEP: f64 = 1e-13;
/// Slack allowed in `η_cert ≤ η_emp`.
pub const ETA_CHAIN_SLACK: f64 = 1e-8;
/// Perturbation size used when no margin is available to derive one from.
pub const FALLBACK_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformMargin {
    /// `1/(cM)`, present when MBI holds.
    pub eta_cert: Option<f64>,
    /// Smallest distance ratio found by the search; absent when the cone
    /// and norm have no distance routine.
    pub eta_emp: Option<f64>,
    pub minimizer: Option<Vec<f64>>,
}

impl UniformMargin {
    /// Best usable lower estimate of `η`.
    pub fn eta(&self) -> f64 {
        self.eta_emp.or(self.eta_cert).unwrap_or(0.0)
    }

    pub fn chain_holds(&self) -> bool {
        match (self.eta_cert, self.eta_emp) {
            (Some(c), Some(e)) => c <= e + ETA_CHAIN_SLACK,
            _ => true,
        }
    }
}

fn has_distance(cone: &ConeSpec) -> bool {
    cone.kind == ConeKind::Orthant || cone.norm == Norm::L2
}

fn gap_ratio(a: &Analysis, x: &[f64]) -> f64 {
    let nx = a.cone.norm.of(x);
    if nx == 0.0 {
        return f64::INFINITY;
    }
    let d = cones::distance(&a.cone, &sub(&a.apply(x), x)).unwrap_or(f64::INFINITY);
    d / nx
}

fn unit_in_cone(a: &Analysis, x: &[f64]) -> Option<Vec<f64>> {
    let p = cones::project(&a.cone, x).ok()?;
    normalized(&p, a.cone.norm)
}

fn search_seeds(a: &Analysis) -> Vec<Vec<f64>> {
    let n = a.dim();
    let mut seeds = Vec::new();
    match a.cone.kind {
        ConeKind::Orthant => seeds.extend((0..n).map(|i| unit(n, i))),
        ConeKind::Lorentz => {
            seeds.push(a.cone.axis());
            for i in 1..n {
                for s in [1.0, -1.0] {
                    let mut r = vec![0.0; n];
                    r[0] = 1.0;
                    r[i] = s;
                    seeds.push(r);
                }
            }
        }
    }
    if let Some(inv) = &a.inverse {
        seeds.push(inv.mul_vec(&a.cone.axis()));
        seeds.extend((0..n).map(|j| inv.column(j)));
    }
    if let Some(v) = &a.spectral.perron_vector {
        seeds.push(v.clone());
    }
    let mut rng = a.rng("small-gain-starts");
    seeds.extend((0..RANDOM_STARTS).map(|_| unit_cone_point(&mut rng, &a.cone)));
    seeds.into_iter().filter_map(|s| unit_in_cone(a, &s)).collect()
}

/// Coordinate pattern search on the unit sphere of the cone.
fn pattern_search(a: &Analysis, start: Vec<f64>, mut best: f64) -> (Vec<f64>, f64) {
    let n = a.dim();
    let mut x = start;
    let mut step = 0.25;
    let mut evals = 0;
    while step > PATTERN_MIN_STEP && evals < PATTERN_EVALS && best > 0.0 {
        let mut improved = false;
        for i in 0..n {
            for s in [step, -step] {
                let mut trial = x.clone();
                trial[i] += s;
                evals += 1;
                let Some(t) = unit_in_cone(a, &trial) else { continue };
                let f = gap_ratio(a, &t);
                if f < best {
                    best = f;
                    x = t;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, best)
}

fn empirical_eta(a: &Analysis) -> (Vec<f64>, f64) {
    let mut scored: Vec<(f64, Vec<f64>)> = search_seeds(a).into_iter().map(|s| (gap_ratio(a, &s), s)).collect();
    scored.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut best = (scored[0].1.clone(), scored[0].0);
    for (f, s) in scored.into_iter().take(REFINED_STARTS) {
        let (x, g) = pattern_search(a, s, f);
        if g < best.1 {
            best = (x, g);
        }
    }
    best
}

pub(crate) fn uniform_margin(a: &Analysis) -> (UniformMargin, CriterionVerdict) {
    let (c, _) = resolvent::mbi_verdict(a);
    let eta_cert = c.map(|c| 1.0 / (c * a.constants.decomposition_m));
    if !has_distance(&a.cone) {
        let m = UniformMargin {
            eta_cert,
            eta_emp: None,
            minimizer: None,
        };
        let v = match (eta_cert, a.super_fixed_vector()) {
            (Some(e), _) if e > a.tol => CriterionVerdict::new(CriterionId::UniformSg, true, e, None)
                .with_note("certified bound only; no distance routine for this cone and norm"),
            (_, Some(x)) => CriterionVerdict::new(CriterionId::UniformSg, false, 0.0, Some(Witness::ConeVector { x })),
            _ => CriterionVerdict::new(
                CriterionId::UniformSg,
                false,
                0.0,
                Some(Witness::SpectralBracket {
                    lower: a.spectral.lower,
                    upper: a.spectral.upper,
                }),
            ),
        };
        return (m, v);
    }
    let (x, eta_emp) = empirical_eta(a);
    let m = UniformMargin {
        eta_cert,
        eta_emp: Some(eta_emp),
        minimizer: Some(x.clone()),
    };
    let holds = eta_emp > a.tol;
    let witness = (!holds).then(|| Witness::SmallGainMinimizer {
        distance: cones::distance(&a.cone, &sub(&a.apply(&x), &x)).unwrap_or(eta_emp),
        x,
    });
    (m, CriterionVerdict::new(CriterionId::UniformSg, holds, eta_emp, witness))
}

pub fn uniform_small_gain_margin(op: &OperatorSpec, cone: &ConeSpec) -> Result<(UniformMargin, CriterionVerdict)> {
    let a = Analysis::new(op, cone)?;
    Ok(uniform_margin(&a))
}

/// A rank-one `P v = ⟨z′, v⟩ z` with `(T + P)x ≥ x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Destabilizer {
    pub z: Vec<f64>,
    pub z_prime: Vec<f64>,
    pub x: Vec<f64>,
    /// `‖z‖·‖z′‖` in the cone's norm and its dual, which is `‖P‖`.
    pub norm: f64,
    /// `M′·‖z‖`, the posted bound on `norm`.
    pub bound: f64,
    pub rho: f64,
}

impl Destabilizer {
    pub fn apply_perturbed(&self, op: &OperatorSpec, v: &[f64]) -> Result<Vec<f64>> {
        let s = dot(&self.z_prime, v);
        Ok(op.apply(v)?.iter().zip(&self.z).map(|(a, b)| a + s * b).collect())
    }

    pub fn witness(&self, eps: f64) -> Witness {
        Witness::Perturbation {
            z: self.z.clone(),
            z_prime: self.z_prime.clone(),
            x: self.x.clone(),
            norm: self.norm,
            eps,
        }
    }
}

/// Rank-one perturbation from a unit cone vector `x` and `ρ ≥ 1`: split
/// `(T − ρI)x = y − z` and pair `z` with a functional `z′` with `⟨z′, x⟩ = 1`.
pub fn vector_destabilizer(op: &OperatorSpec, cone: &ConeSpec, x: &[f64], rho: f64) -> Result<Destabilizer> {
    Error::check_dim(cone.dim, x.len())?;
    if !(rho >= 1.0) {
        return Err(Error::InvalidArgument(format!("rho must be at least 1, got {rho}")));
    }
    let x = normalized(x, cone.norm).ok_or_else(|| Error::InvalidArgument("zero vector".into()))?;
    let tx = op.apply(&x)?;
    let d: Vec<f64> = tx.iter().zip(&x).map(|(t, v)| t - rho * v).collect();
    let (_, z) = cones::decompose(cone, &d)?;
    let z_prime = cones::dual_functional(cone, &x)?;
    let zn = cone.norm.of(&z);
    Ok(Destabilizer {
        norm: zn * cone.norm.dual().of(&z_prime),
        bound: cone.constants().dual_m_prime * zn,
        z,
        z_prime,
        x,
        rho,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenStep {
    pub r: f64,
    pub x: Vec<f64>,
    /// `‖(ρ I − T)x‖` with `ρ` the midpoint of the spectral bracket.
    pub residual: f64,
}

/// Normalized resolvent images `(r_k I − T)⁻¹ v` with `r_k` descending
/// geometrically onto the spectral radius. Stops early if `r_k` reaches the
/// spectral bracket.
pub fn approximate_positive_eigenvector(op: &OperatorSpec, cone: &ConeSpec, n_steps: usize) -> Result<Vec<EigenStep>> {
    let a = Analysis::new(op, cone)?;
    Ok(eigen_steps(&a, n_steps))
}

fn eigen_steps(a: &Analysis, n_steps: usize) -> Vec<EigenStep> {
    let upper = a.spectral.upper;
    let rho = a.spectral.mid();
    let r0 = upper + upper.max(1.0);
    let v = a.cone.axis();
    let mut out = Vec::new();
    for k in 1..=n_steps {
        let r = upper + (r0 - upper) * 0.5_f64.powi(k as i32);
        if r <= upper {
            break;
        }
        let Ok(w) = resolvent_apply_with(&a.op, &a.spectral, r, &v) else { break };
        let Some(x) = normalized(&w, a.cone.norm) else { break };
        let tx = a.apply(&x);
        let res: Vec<f64> = tx.iter().zip(&x).map(|(t, xi)| rho * xi - t).collect();
        out.push(EigenStep {
            r,
            residual: a.cone.norm.of(&res),
            x,
        });
    }
    out
}

const EIGEN_STEPS: usize = 40;

pub(crate) fn destabilizer_for(a: &Analysis) -> Option<Destabilizer> {
    if a.spectral.upper < 1.0 {
        return None;
    }
    if let Some(x) = a.super_fixed_vector() {
        let n = x.len();
        let rho = a.perron_value().unwrap_or(a.spectral.upper).max(1.0);
        return Some(Destabilizer {
            z: vec![0.0; n],
            z_prime: cones::dual_functional(&a.cone, &x).ok()?,
            x,
            norm: 0.0,
            bound: 0.0,
            rho,
        });
    }
    let rho = a.spectral.lower.max(1.0);
    let steps = eigen_steps(a, EIGEN_STEPS);
    let x = steps
        .iter()
        .min_by(|p, q| p.residual.total_cmp(&q.residual))
        .map(|s| s.x.clone())
        .or_else(|| a.perron_unit())?;
    vector_destabilizer(&a.op, &a.cone, &x, rho).ok()
}

/// Destabilizing rank-one perturbation; `None` when the spectral radius is
/// certified below 1.
pub fn rank_one_destabilizer(op: &OperatorSpec, cone: &ConeSpec) -> Result<Option<Destabilizer>> {
    let a = Analysis::new(op, cone)?;
    Ok(destabilizer_for(&a))
}

/// Rank-one perturbation that closes the gap at the small-gain minimizer.
fn minimizer_destabilizer(a: &Analysis, x: &[f64]) -> Option<Destabilizer> {
    let x = normalized(x, a.cone.norm)?;
    let gap = sub(&x, &a.apply(&x));
    let (plus, _) = cones::decompose(&a.cone, &gap).ok()?;
    let z_prime = cones::dual_functional(&a.cone, &x).ok()?;
    let zn = a.cone.norm.of(&plus);
    Some(Destabilizer {
        norm: zn * a.cone.norm.dual().of(&z_prime),
        bound: a.constants.dual_m_prime * zn,
        z: plus,
        z_prime,
        x,
        rho: 1.0,
    })
}

fn destabilizer_verified(a: &Analysis, d: &Destabilizer, eps: f64) -> bool {
    let Ok(img) = d.apply_perturbed(&a.op, &d.x) else { return false };
    d.norm <= eps * (1.0 + 1e-12) && super::cone_geq(&a.cone, &img, &d.x, 1e-10).unwrap_or(false)
}

fn robust_like(
    a: &Analysis,
    id: CriterionId,
    margin: &UniformMargin,
    eps: f64,
    candidates: &[Destabilizer],
) -> CriterionVerdict {
    let radius = 0.5 * margin.eta();
    if radius > a.tol && eps <= radius {
        return CriterionVerdict::new(id, true, radius, None)
            .with_note(format!("eps = {eps:e} within the certified radius eta/2"));
    }
    for d in candidates {
        if destabilizer_verified(a, d, eps) {
            return CriterionVerdict::new(id, false, 0.0, Some(d.witness(eps)));
        }
    }
    CriterionVerdict::new(id, true, radius, None)
        .with_note(format!("eps = {eps:e} exceeds eta/2 but no destabilizing perturbation was found"))
}

pub fn default_eps(margin: &UniformMargin) -> f64 {
    let r = 0.5 * margin.eta();
    if r > 0.0 {
        r
    } else {
        FALLBACK_EPS
    }
}

fn candidates(a: &Analysis, margin: &UniformMargin) -> Vec<Destabilizer> {
    let mut out: Vec<Destabilizer> = destabilizer_for(a).into_iter().collect();
    if let Some(x) = &margin.minimizer {
        out.extend(minimizer_destabilizer(a, x));
    }
    out
}

pub fn robust_small_gain(op: &OperatorSpec, cone: &ConeSpec, eps: f64) -> Result<CriterionVerdict> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let a = Analysis::new(op, cone)?;
    let (m, _) = uniform_margin(&a);
    Ok(robust_like(&a, CriterionId::RobustSg, &m, eps, &candidates(&a, &m)))
}

pub fn rank_one_small_gain(op: &OperatorSpec, cone: &ConeSpec, eps: f64) -> Result<CriterionVerdict> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let a = Analysis::new(op, cone)?;
    let (m, _) = uniform_margin(&a);
    Ok(robust_like(&a, CriterionId::Rank1Sg, &m, eps, &candidates(&a, &m)))
}

pub(crate) fn small_gain_family(a: &Analysis, eps: Option<f64>) -> JobOutput {
    let (m, uniform) = uniform_margin(a);
    let mut notes = Vec::new();
    let mut fl = Vec::new();
    if !m.chain_holds() {
        fl.push(flags::ETA_CHAIN_VIOLATION.to_string());
    }
    if let (Some(c), Some(e)) = (m.eta_cert, m.eta_emp) {
        notes.push(format!("eta_cert = {c:e}, eta_emp = {e:e}"));
    }
    let eps = eps.unwrap_or_else(|| default_eps(&m));
    let cands = candidates(a, &m);
    let robust = robust_like(a, CriterionId::RobustSg, &m, eps, &cands);
    // rank-one check uses only the eigenvector construction
    let from_vector: Vec<Destabilizer> = destabilizer_for(a).into_iter().collect();
    let rank1 = robust_like(a, CriterionId::Rank1Sg, &m, eps, &from_vector);
    JobOutput::Verdicts(vec![uniform, robust, rank1], notes, fl)
}
