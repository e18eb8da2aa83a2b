//! Every stability criterion for a positive operator, each evaluated on its
//! own numerical route, and the cross-check that folds them into one report.

mod attractivity;
mod interior;
mod resolvent;
mod small_gain;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::cones::{self, ConeConstants, ConeSpec};
use crate::error::{Error, Result};
use crate::linalg::{sub, unit, Matrix, Norm};
use crate::lyapunov::{self, NormCertificate, QuadraticCertificate};
use crate::iss::{self, IssEstimate, IssVerification};
use crate::operators::{
    resolvent_apply_with, spectral_radius_on_cone, OperatorSpec, SpectralEstimate,
};

pub use attractivity::{attractivity_verdicts, quasi_compact_suite, simple_small_gain, subfixed_positivity};
pub use interior::{
    dual_small_gain, interior_small_gain, strict_decay_point, strict_decay_verdict, StrictDecayCertificate,
};
pub use resolvent::{check_resolvent_positivity, mbi_constant};
pub use small_gain::{
    approximate_positive_eigenvector, vector_destabilizer, rank_one_destabilizer, rank_one_small_gain,
    robust_small_gain, uniform_small_gain_margin, Destabilizer, EigenStep, UniformMargin,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CriterionId {
    #[serde(rename = "SPR")]
    Spr,
    #[serde(rename = "RESOLVENT_POS")]
    ResolventPos,
    #[serde(rename = "MBI")]
    Mbi,
    #[serde(rename = "UNIFORM_SG")]
    UniformSg,
    #[serde(rename = "ROBUST_SG")]
    RobustSg,
    #[serde(rename = "RANK1_SG")]
    Rank1Sg,
    #[serde(rename = "DUAL_SG")]
    DualSg,
    #[serde(rename = "INTERIOR_SG")]
    InteriorSg,
    #[serde(rename = "STRICT_DECAY")]
    StrictDecay,
    #[serde(rename = "SUBFIXED_POS")]
    SubfixedPos,
    #[serde(rename = "SIMPLE_SG")]
    SimpleSg,
    #[serde(rename = "STRONG_STAB")]
    StrongStab,
    #[serde(rename = "WEAK_ATTR")]
    WeakAttr,
}

impl CriterionId {
    pub const ALL: [CriterionId; 13] = [
        CriterionId::Spr,
        CriterionId::ResolventPos,
        CriterionId::Mbi,
        CriterionId::UniformSg,
        CriterionId::RobustSg,
        CriterionId::Rank1Sg,
        CriterionId::DualSg,
        CriterionId::InteriorSg,
        CriterionId::StrictDecay,
        CriterionId::SubfixedPos,
        CriterionId::SimpleSg,
        CriterionId::StrongStab,
        CriterionId::WeakAttr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CriterionId::Spr => "SPR",
            CriterionId::ResolventPos => "RESOLVENT_POS",
            CriterionId::Mbi => "MBI",
            CriterionId::UniformSg => "UNIFORM_SG",
            CriterionId::RobustSg => "ROBUST_SG",
            CriterionId::Rank1Sg => "RANK1_SG",
            CriterionId::DualSg => "DUAL_SG",
            CriterionId::InteriorSg => "INTERIOR_SG",
            CriterionId::StrictDecay => "STRICT_DECAY",
            CriterionId::SubfixedPos => "SUBFIXED_POS",
            CriterionId::SimpleSg => "SIMPLE_SG",
            CriterionId::StrongStab => "STRONG_STAB",
            CriterionId::WeakAttr => "WEAK_ATTR",
        }
    }
}

/// Evidence attached to a verdict. Failure witnesses can be re-checked
/// from scratch with [`CriterionVerdict::reverify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Cone vector with `Tx ≥ x`.
    ConeVector { x: Vec<f64> },
    /// Minimizer of the small-gain distance ratio.
    SmallGainMinimizer { x: Vec<f64>, distance: f64 },
    /// `Tx ≤ x` although `x` lies outside the cone.
    SubFixed { x: Vec<f64> },
    /// Positive functional with `Tᵀx′ ≥ x′`.
    DualFunctional { x_prime: Vec<f64> },
    /// Rank-one `P v = ⟨z′, v⟩ z` with `(T + P)x ≥ x`.
    Perturbation {
        z: Vec<f64>,
        z_prime: Vec<f64>,
        x: Vec<f64>,
        norm: f64,
        eps: f64,
    },
    StrictDecay {
        z: Vec<f64>,
        lambda: f64,
        interior_margin: f64,
    },
    /// Column of `(I − T)⁻¹` outside the cone.
    ResolventColumn { index: usize, column: Vec<f64> },
    /// Cone ray mapped outside the cone by `(I − T)⁻¹`.
    ResolventRay { ray: Vec<f64>, image: Vec<f64> },
    /// `(I − T)x ≤ y` with `‖x‖ > c‖y‖`.
    OrderedPair { x: Vec<f64>, y: Vec<f64>, c: f64 },
    /// Spectral bracket that does not lie below 1.
    SpectralBracket { lower: f64, upper: f64 },
    /// Trajectory start whose orbit does not shrink over the horizon.
    NonDecaying { x: Vec<f64>, horizon: usize, ratio: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionVerdict {
    pub id: CriterionId,
    pub holds: bool,
    pub margin: f64,
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CriterionVerdict {
    pub(crate) fn new(id: CriterionId, holds: bool, margin: f64, witness: Option<Witness>) -> Self {
        CriterionVerdict {
            id,
            holds,
            margin,
            witness,
            note: None,
        }
    }

    pub(crate) fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Re-checks the attached witness against `op` from scratch. Verdicts
    /// without a witness verify trivially.
    pub fn reverify(&self, op: &OperatorSpec, cone: &ConeSpec) -> bool {
        match &self.witness {
            None => self.holds,
            Some(w) => reverify_witness(w, op, cone).unwrap_or(false),
        }
    }
}

/// Tolerance for witness inequalities in the cone order.
pub const WITNESS_TOL: f64 = 1e-9;

/// `a ≥ b` in the cone order up to `tol` (scaled by the sizes involved).
pub fn cone_geq(cone: &ConeSpec, a: &[f64], b: &[f64], tol: f64) -> Result<bool> {
    let scale = Norm::LInf.of(a).max(Norm::LInf.of(b)).max(1.0);
    cones::contains(cone, &sub(a, b), tol * scale)
}

fn reverify_witness(w: &Witness, op: &OperatorSpec, cone: &ConeSpec) -> Result<bool> {
    let nonzero_in_cone = |x: &[f64]| -> Result<bool> { Ok(cones::contains(cone, x, 1e-12)? && cone.norm.of(x) > 0.0) };
    Ok(match w {
        Witness::ConeVector { x } => nonzero_in_cone(x)? && cone_geq(cone, &op.apply(x)?, x, WITNESS_TOL)?,
        Witness::SmallGainMinimizer { x, distance } => {
            let d = cones::distance(cone, &sub(&op.apply(x)?, x))?;
            nonzero_in_cone(x)? && (d - distance).abs() <= 1e-12 * (1.0 + d) && d <= WITNESS_TOL * cone.norm.of(x)
        }
        Witness::SubFixed { x } => {
            cone_geq(cone, x, &op.apply(x)?, WITNESS_TOL)? && !cones::contains(cone, x, WITNESS_TOL)?
        }
        Witness::DualFunctional { x_prime } => {
            let adj = op.adjoint();
            nonzero_in_cone(x_prime)? && cone_geq(cone, &adj.apply(x_prime)?, x_prime, WITNESS_TOL)?
        }
        Witness::Perturbation {
            z,
            z_prime,
            x,
            norm,
            eps,
        } => {
            let px: f64 = crate::linalg::dot(z_prime, x);
            let tpx: Vec<f64> = op.apply(x)?.iter().zip(z).map(|(a, b)| a + px * b).collect();
            let actual = cone.norm.of(z) * cone.norm.dual().of(z_prime);
            nonzero_in_cone(x)?
                && cones::contains(cone, z, 1e-12)?
                && cones::contains(cone, z_prime, 1e-12)?
                && cone_geq(cone, &tpx, x, 1e-10)?
                && (actual - norm).abs() <= 1e-12 * (1.0 + actual)
                && *norm <= eps * (1.0 + 1e-12)
        }
        Witness::StrictDecay { z, lambda, .. } => {
            let tz = op.apply(z)?;
            let lz: Vec<f64> = z.iter().map(|v| v * lambda).collect();
            cones::is_interior(cone, z)?.0 && cone_geq(cone, &lz, &tz, 1e-10)?
        }
        Witness::ResolventColumn { index, column } => {
            let est = spectral_radius_on_cone(op, cone)?;
            let col = resolvent_apply_with(op, &est, 1.0, &unit(op.dim(), *index))?;
            Norm::LInf.of(&sub(&col, column)) <= 1e-9 * (1.0 + Norm::LInf.of(&col))
                && !cones::contains(cone, &col, 1e-10)?
        }
        Witness::ResolventRay { ray, image } => {
            let est = spectral_radius_on_cone(op, cone)?;
            let img = resolvent_apply_with(op, &est, 1.0, ray)?;
            Norm::LInf.of(&sub(&img, image)) <= 1e-9 * (1.0 + Norm::LInf.of(&img))
                && cones::contains(cone, ray, 1e-12)?
                && !cones::contains(cone, &img, 1e-10)?
        }
        Witness::OrderedPair { x, y, c } => {
            let lhs = sub(x, &op.apply(x)?);
            nonzero_in_cone(x)?
                && cones::contains(cone, y, 1e-12)?
                && cone_geq(cone, y, &lhs, WITNESS_TOL)?
                && cone.norm.of(x) > c * cone.norm.of(y)
        }
        Witness::SpectralBracket { .. } => spectral_radius_on_cone(op, cone)?.upper >= 1.0,
        Witness::NonDecaying { x, horizon, .. } => {
            let mut v = x.clone();
            for _ in 0..*horizon {
                v = op.apply(&v)?;
            }
            cone.norm.of(&v) > attractivity::DECAY_THRESHOLD * cone.norm.of(x)
        }
    })
}

/// Shared precomputation for every criterion on one `(T, cone)` pair.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub op: OperatorSpec,
    pub matrix: Matrix,
    pub cone: ConeSpec,
    pub constants: ConeConstants,
    pub spectral: SpectralEstimate,
    pub dual_spectral: SpectralEstimate,
    pub positive: bool,
    pub positivity_witness: Option<Vec<f64>>,
    /// `(I − T)⁻¹` when 1 lies outside the spectral bracket.
    pub inverse: Option<Matrix>,
    pub inverse_error: Option<Error>,
    pub tol: f64,
    pub seed: u64,
}

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_SEED: u64 = 0;

impl Analysis {
    pub fn new(op: &OperatorSpec, cone: &ConeSpec) -> Result<Self> {
        Analysis::with_settings(op, cone, DEFAULT_TOL, DEFAULT_SEED)
    }

    pub fn with_settings(op: &OperatorSpec, cone: &ConeSpec, tol: f64, seed: u64) -> Result<Self> {
        Error::check_dim(cone.dim, op.dim())?;
        let (positive, positivity_witness) = op.is_positive(cone)?;
        let spectral = spectral_radius_on_cone(op, cone)?;
        let adj = op.adjoint();
        // the orthant and the Lorentz cone are both self-dual
        let dual_spectral = spectral_radius_on_cone(&adj, cone)?;
        let (inverse, inverse_error) = match resolvent_matrix(op, &spectral) {
            Ok(m) => (Some(m), None),
            Err(e) => (None, Some(e)),
        };
        Ok(Analysis {
            op: op.clone(),
            matrix: op.to_matrix(),
            cone: *cone,
            constants: cone.constants(),
            spectral,
            dual_spectral,
            positive,
            positivity_witness,
            inverse,
            inverse_error,
            tol,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.cone.dim
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(x)
    }

    /// Perron vector scaled to unit norm in the cone's norm.
    pub fn perron_unit(&self) -> Option<Vec<f64>> {
        let v = self.spectral.perron_vector.as_ref()?;
        crate::linalg::normalized(v, self.cone.norm)
    }

    pub fn perron_value(&self) -> Option<f64> {
        self.spectral.perron_value
    }

    /// The Perron vector when it satisfies `Tv ≥ v` numerically.
    pub fn super_fixed_vector(&self) -> Option<Vec<f64>> {
        let v = self.perron_unit()?;
        cone_geq(&self.cone, &self.apply(&v), &v, 1e-10).ok()?.then_some(v)
    }

    pub(crate) fn rng(&self, label: &str) -> crate::sampling::SearchRng {
        crate::sampling::stream(self.seed, label)
    }
}

fn resolvent_matrix(op: &OperatorSpec, est: &SpectralEstimate) -> Result<Matrix> {
    let n = op.dim();
    let mut inv = Matrix::zeros(n, n);
    for j in 0..n {
        let col = resolvent_apply_with(op, est, 1.0, &unit(n, j))?;
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv)
}

pub fn spr_verdict(a: &Analysis) -> CriterionVerdict {
    let s = &a.spectral;
    if s.upper < 1.0 {
        return CriterionVerdict::new(CriterionId::Spr, true, 1.0 - s.upper, None);
    }
    let witness = match a.super_fixed_vector() {
        Some(v) if a.positive && s.lower >= 1.0 => Witness::ConeVector { x: v },
        _ => Witness::SpectralBracket {
            lower: s.lower,
            upper: s.upper,
        },
    };
    CriterionVerdict::new(CriterionId::Spr, false, 1.0 - s.upper, Some(witness))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Consensus {
    Stable,
    Unstable,
    Inconsistent,
    Boundary,
}

pub const DEFAULT_BOUNDARY_BAND: f64 = 0.02;

pub fn consensus(spectral: &SpectralEstimate, verdicts: &[CriterionVerdict], band: f64) -> Consensus {
    if spectral.upper >= 1.0 - band && spectral.lower <= 1.0 + band {
        return Consensus::Boundary;
    }
    if verdicts.iter().all(|v| v.holds) {
        Consensus::Stable
    } else if verdicts.iter().all(|v| !v.holds) {
        Consensus::Unstable
    } else {
        Consensus::Inconsistent
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckConfig {
    pub tol: f64,
    pub seed: u64,
    pub threads: usize,
    /// Perturbation size for the robust checks; derived from η when absent.
    pub robust_eps: Option<f64>,
    /// Interior point for the interior small-gain check; all-ones when absent.
    pub interior_point: Option<Vec<f64>>,
    /// Scaling for the equivalent norm; `sqrt(1/upper)` when absent.
    pub lyapunov_s: Option<f64>,
    pub boundary_band: f64,
    pub include_lyapunov: bool,
    pub include_iss: bool,
}

impl Default for CrossCheckConfig {
    fn default() -> Self {
        CrossCheckConfig {
            tol: DEFAULT_TOL,
            seed: DEFAULT_SEED,
            threads: 1,
            robust_eps: None,
            interior_point: None,
            lyapunov_s: None,
            boundary_band: DEFAULT_BOUNDARY_BAND,
            include_lyapunov: true,
            include_iss: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSummary {
    pub variant: String,
    pub dim: usize,
    pub spec: OperatorSpec,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSection {
    pub stein: Option<QuadraticCertificate>,
    pub equivalent_norm: Option<NormCertificate>,
    pub lattice_norm: Option<NormCertificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssSection {
    pub estimate: Option<IssEstimate>,
    pub verification: Option<IssVerification>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub operator: OperatorSummary,
    pub cone: ConeSpec,
    pub spectral: SpectralEstimate,
    pub criteria: Vec<CriterionVerdict>,
    pub consensus: Consensus,
    pub flags: Vec<String>,
    pub notes: Vec<String>,
    pub lyapunov: Option<LyapunovSection>,
    pub iss: Option<IssSection>,
    pub config: CrossCheckConfig,
}

impl CertificateReport {
    pub fn verdict(&self, id: CriterionId) -> Option<&CriterionVerdict> {
        self.criteria.iter().find(|v| v.id == id)
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }
}

pub mod flags {
    pub const NOT_POSITIVE: &str = "NOT_POSITIVE";
    pub const SPECTRAL_NOT_CONVERGED: &str = "SPECTRAL_NOT_CONVERGED";
    pub const ROUTES_DISAGREE: &str = "ROUTES_DISAGREE";
    pub const ETA_CHAIN_VIOLATION: &str = "ETA_CHAIN_VIOLATION";
    pub const TRUNCATION_PATHOLOGY: &str = "TRUNCATION_PATHOLOGY";
    pub const MARGIN_VANISHING: &str = "MARGIN_VANISHING";
}

enum JobOutput {
    Verdicts(Vec<CriterionVerdict>, Vec<String>, Vec<String>),
    Lyapunov(LyapunovSection, Vec<String>),
    Iss(IssSection, Vec<String>),
}

type Job<'a> = Box<dyn FnOnce() -> JobOutput + Send + 'a>;

fn run_jobs(jobs: Vec<Job<'_>>, threads: usize) -> Vec<JobOutput> {
    let count = jobs.len();
    let slots: Vec<Mutex<Option<Job<'_>>>> = jobs.into_iter().map(|j| Mutex::new(Some(j))).collect();
    let results: Vec<Mutex<Option<JobOutput>>> = (0..count).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        if i >= count {
            break;
        }
        let job = slots[i].lock().expect("job slot").take().expect("job taken once");
        let out = job();
        *results[i].lock().expect("result slot") = Some(out);
    };
    let threads = threads.clamp(1, count.max(1));
    if threads == 1 {
        worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(worker);
            }
        });
    }
    results
        .into_iter()
        .map(|m| m.into_inner().expect("result slot").expect("job ran"))
        .collect()
}

/// Runs every applicable criterion and assembles the report.
pub fn cross_check(op: &OperatorSpec, cone: &ConeSpec, config: &CrossCheckConfig) -> Result<CertificateReport> {
    let a = Analysis::with_settings(op, cone, config.tol, config.seed)?;
    let mut notes = Vec::new();
    let mut report_flags = Vec::new();
    if !a.spectral.converged {
        report_flags.push(flags::SPECTRAL_NOT_CONVERGED.to_string());
    }
    if !a.spectral.routes_agree {
        report_flags.push(flags::ROUTES_DISAGREE.to_string());
    }

    let a_ref = &a;
    let mut jobs: Vec<Job<'_>> = Vec::new();
    jobs.push(Box::new(move || JobOutput::Verdicts(vec![spr_verdict(a_ref)], vec![], vec![])));
    if a.positive {
        jobs.push(Box::new(move || {
            let r = resolvent::resolvent_verdict(a_ref);
            let (_, m) = resolvent::mbi_verdict(a_ref);
            JobOutput::Verdicts(vec![r, m], vec![], vec![])
        }));
        let eps = config.robust_eps;
        jobs.push(Box::new(move || small_gain::small_gain_family(a_ref, eps)));
        jobs.push(Box::new(move || {
            JobOutput::Verdicts(vec![interior::dual_verdict(a_ref)], vec![], vec![])
        }));
        let z = config.interior_point.clone();
        jobs.push(Box::new(move || match interior::interior_verdict(a_ref, z.as_deref()) {
            Ok(Some(v)) => JobOutput::Verdicts(vec![v], vec![], vec![]),
            Ok(None) => JobOutput::Verdicts(
                vec![],
                vec![format!(
                    "INTERIOR_SG not applicable on the {:?} cone",
                    a_ref.cone.kind
                )],
                vec![],
            ),
            Err(e) => JobOutput::Verdicts(vec![], vec![format!("INTERIOR_SG skipped: {e}")], vec![]),
        }));
        jobs.push(Box::new(move || {
            JobOutput::Verdicts(vec![interior::strict_decay_verdict_for(a_ref)], vec![], vec![])
        }));
        jobs.push(Box::new(move || {
            JobOutput::Verdicts(attractivity::quasi_compact_verdicts(a_ref), vec![], vec![])
        }));
    } else {
        report_flags.push(flags::NOT_POSITIVE.to_string());
        notes.push(format!(
            "operator is not positive on the {:?} cone (violating ray {:?}); only SPR, Lyapunov and ISS sections are evaluated",
            a.cone.kind, a.positivity_witness
        ));
    }
    if config.include_lyapunov {
        let s = config.lyapunov_s;
        jobs.push(Box::new(move || lyapunov_section(a_ref, s)));
    }
    if config.include_iss {
        jobs.push(Box::new(move || iss_section(a_ref)));
    }

    let mut criteria = Vec::new();
    let mut lyap = None;
    let mut iss_out = None;
    for out in run_jobs(jobs, config.threads) {
        match out {
            JobOutput::Verdicts(v, n, f) => {
                criteria.extend(v);
                notes.extend(n);
                report_flags.extend(f);
            }
            JobOutput::Lyapunov(s, n) => {
                lyap = Some(s);
                notes.extend(n);
            }
            JobOutput::Iss(s, n) => {
                iss_out = Some(s);
                notes.extend(n);
            }
        }
    }
    criteria.sort_by_key(|v| v.id);
    let consensus = consensus(&a.spectral, &criteria, config.boundary_band);
    report_flags.sort();
    report_flags.dedup();
    Ok(CertificateReport {
        operator: OperatorSummary {
            variant: op.variant_name().to_string(),
            dim: op.dim(),
            spec: op.clone(),
            positive: a.positive,
        },
        cone: *cone,
        spectral: a.spectral.clone(),
        criteria,
        consensus,
        flags: report_flags,
        notes,
        lyapunov: lyap,
        iss: iss_out,
        config: config.clone(),
    })
}

/// Cap on the default equivalent-norm scaling (reached when `upper` is 0).
pub const MAX_NORM_SCALING: f64 = 10.0;

pub fn default_norm_scaling(upper: f64) -> f64 {
    if upper <= 0.0 {
        MAX_NORM_SCALING
    } else {
        (1.0 / upper).sqrt().min(MAX_NORM_SCALING)
    }
}

fn lyapunov_section(a: &Analysis, s: Option<f64>) -> JobOutput {
    let mut notes = Vec::new();
    if a.spectral.upper >= 1.0 {
        notes.push("Lyapunov certificates need spectral radius < 1; none constructed".into());
        return JobOutput::Lyapunov(
            LyapunovSection {
                stein: None,
                equivalent_norm: None,
                lattice_norm: None,
            },
            notes,
        );
    }
    let stein = match lyapunov::solve_stein(&a.op) {
        Ok(c) => Some(c),
        Err(e) => {
            notes.push(format!("Stein equation: {e}"));
            None
        }
    };
    let s = s.unwrap_or_else(|| default_norm_scaling(a.spectral.upper));
    let equivalent_norm = match lyapunov::equivalent_norm(&a.op, s, false, &a.cone, a.seed) {
        Ok(n) => Some(n.certificate),
        Err(e) => {
            notes.push(format!("equivalent norm: {e}"));
            None
        }
    };
    let lattice_norm = if a.cone.is_orthant() && a.positive {
        match lyapunov::equivalent_norm(&a.op, s, true, &a.cone, a.seed) {
            Ok(n) => Some(n.certificate),
            Err(e) => {
                notes.push(format!("lattice equivalent norm: {e}"));
                None
            }
        }
    } else {
        None
    };
    JobOutput::Lyapunov(
        LyapunovSection {
            stein,
            equivalent_norm,
            lattice_norm,
        },
        notes,
    )
}

pub const REPORT_ISS_TRIALS: usize = 20;

fn iss_section(a: &Analysis) -> JobOutput {
    let mut notes = Vec::new();
    let estimate = match iss::iss_constants(&a.op, a.cone.norm) {
        Ok(e) => Some(e),
        Err(e) => {
            notes.push(format!("ISS constants: {e}"));
            None
        }
    };
    let verification = estimate.as_ref().and_then(|e| {
        match iss::verify_iss_bound(&a.op, e, REPORT_ISS_TRIALS, a.seed) {
            Ok(v) => Some(v),
            Err(err) => {
                notes.push(format!("ISS verification: {err}"));
                None
            }
        }
    });
    JobOutput::Iss(IssSection { estimate, verification }, notes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn upper2x2() -> OperatorSpec {
        OperatorSpec::dense_from_rows(&[vec![0.5, 1.0], vec![0.0, 0.5]]).unwrap()
    }

    #[test]
    fn stable_example_is_stable() {
        let r = cross_check(&upper2x2(), &ConeSpec::orthant(2, Norm::LInf), &CrossCheckConfig::default()).unwrap();
        assert_eq!(r.consensus, Consensus::Stable);
        assert!(r.criteria.len() >= 10);
        assert!(r.criteria.iter().all(|v| v.holds), "{:#?}", r.criteria);
    }

    #[test]
    fn unstable_scalar_is_unstable_with_witnesses() {
        let op = OperatorSpec::diagonal(vec![1.5]).unwrap();
        let cone = ConeSpec::orthant(1, Norm::LInf);
        let r = cross_check(&op, &cone, &CrossCheckConfig::default()).unwrap();
        assert_eq!(r.consensus, Consensus::Unstable);
        for v in &r.criteria {
            assert!(!v.holds, "{:?}", v.id);
            assert!(v.witness.is_some(), "{:?}", v.id);
            assert!(v.reverify(&op, &cone), "{:?} {:?}", v.id, v.witness);
        }
    }

    #[test]
    fn near_one_is_boundary() {
        let op = OperatorSpec::diagonal(vec![0.999]).unwrap();
        let r = cross_check(&op, &ConeSpec::orthant(1, Norm::LInf), &CrossCheckConfig::default()).unwrap();
        assert_eq!(r.consensus, Consensus::Boundary);
    }

    #[test]
    fn signed_operator_reports_spr_only() {
        let op = OperatorSpec::dense_from_rows(&[vec![0.5, -0.2], vec![0.1, 0.3]]).unwrap();
        let r = cross_check(&op, &ConeSpec::orthant(2, Norm::L2), &CrossCheckConfig::default()).unwrap();
        assert!(r.has_flag(flags::NOT_POSITIVE));
        assert_eq!(r.criteria.len(), 1);
        assert_eq!(r.consensus, Consensus::Stable);
    }

    #[test]
    fn thread_count_does_not_change_report() {
        let cone = ConeSpec::orthant(2, Norm::L1);
        let one = cross_check(&upper2x2(), &cone, &CrossCheckConfig::default()).unwrap();
        let four = cross_check(
            &upper2x2(),
            &cone,
            &CrossCheckConfig {
                threads: 4,
                ..CrossCheckConfig::default()
            },
        )
        .unwrap();
        assert_eq!(one.criteria, four.criteria);
    }
}
