//! Positive-operator representations and the numerical substrate shared by
//! every criterion: application, adjoints, spectral brackets, resolvent
//! solves and power norms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cones::{self, ConeKind, ConeSpec};
use crate::error::{Error, Result};
use crate::linalg::{normalized, Matrix, Norm};

/// Largest state dimension accepted from external input.
pub const MAX_DIM: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorRepr", into = "OperatorRepr")]
pub enum OperatorSpec {
    Dense(Matrix),
    Diagonal(Vec<f64>),
    /// `x ↦ factor·(0, x₁, …, x_{n−1})`.
    TruncatedShift { dim: usize, factor: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
enum OperatorRepr {
    Dense { rows: Vec<Vec<f64>> },
    Diagonal { entries: Vec<f64> },
    Shift { dim: usize, factor: f64 },
}

impl TryFrom<OperatorRepr> for OperatorSpec {
    type Error = Error;

    fn try_from(r: OperatorRepr) -> Result<Self> {
        match r {
            OperatorRepr::Dense { rows } => OperatorSpec::dense_from_rows(&rows),
            OperatorRepr::Diagonal { entries } => OperatorSpec::diagonal(entries),
            OperatorRepr::Shift { dim, factor } => OperatorSpec::shift(dim, factor),
        }
    }
}

impl From<OperatorSpec> for OperatorRepr {
    fn from(op: OperatorSpec) -> Self {
        match op {
            OperatorSpec::Dense(m) => OperatorRepr::Dense { rows: m.to_rows() },
            OperatorSpec::Diagonal(entries) => OperatorRepr::Diagonal { entries },
            OperatorSpec::TruncatedShift { dim, factor } => OperatorRepr::Shift { dim, factor },
        }
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "dimension {n} outside 1..={MAX_DIM}"
        )));
    }
    Ok(())
}

impl OperatorSpec {
    pub fn dense(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                found: m.cols(),
            });
        }
        check_size(m.rows())?;
        if !m.is_finite() {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        Ok(OperatorSpec::Dense(m))
    }

    pub fn dense_from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        OperatorSpec::dense(Matrix::from_rows(rows)?)
    }

    pub fn diagonal(entries: Vec<f64>) -> Result<Self> {
        check_size(entries.len())?;
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("diagonal has non-finite entries".into()));
        }
        Ok(OperatorSpec::Diagonal(entries))
    }

    pub fn shift(dim: usize, factor: f64) -> Result<Self> {
        check_size(dim)?;
        if !factor.is_finite() || factor < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "shift factor must be finite and >= 0, got {factor}"
            )));
        }
        Ok(OperatorSpec::TruncatedShift { dim, factor })
    }

    pub fn dim(&self) -> usize {
        match self {
            OperatorSpec::Dense(m) => m.rows(),
            OperatorSpec::Diagonal(d) => d.len(),
            OperatorSpec::TruncatedShift { dim, .. } => *dim,
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            OperatorSpec::Dense(_) => "dense",
            OperatorSpec::Diagonal(_) => "diagonal",
            OperatorSpec::TruncatedShift { .. } => "shift",
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        match self {
            OperatorSpec::Dense(m) => m.clone(),
            OperatorSpec::Diagonal(d) => Matrix::from_diagonal(d),
            OperatorSpec::TruncatedShift { dim, factor } => {
                Matrix::from_fn(*dim, *dim, |i, j| if i == j + 1 { *factor } else { 0.0 })
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim(self.dim(), x.len())?;
        Ok(match self {
            OperatorSpec::Dense(m) => m.mul_vec(x),
            OperatorSpec::Diagonal(d) => d.iter().zip(x).map(|(a, b)| a * b).collect(),
            OperatorSpec::TruncatedShift { dim, factor } => {
                let mut y = vec![0.0; *dim];
                for i in 1..*dim {
                    y[i] = factor * x[i - 1];
                }
                y
            }
        })
    }

    pub fn adjoint(&self) -> OperatorSpec {
        match self {
            OperatorSpec::Dense(m) => OperatorSpec::Dense(m.transpose()),
            OperatorSpec::Diagonal(d) => OperatorSpec::Diagonal(d.clone()),
            OperatorSpec::TruncatedShift { .. } => OperatorSpec::Dense(self.to_matrix().transpose()),
        }
    }

    /// Entrywise nonnegativity of the materialized matrix.
    pub fn is_nonnegative(&self) -> bool {
        match self {
            OperatorSpec::Dense(m) => m.min_entry() >= 0.0,
            OperatorSpec::Diagonal(d) => d.iter().all(|v| *v >= 0.0),
            OperatorSpec::TruncatedShift { factor, .. } => *factor >= 0.0,
        }
    }

    pub fn is_positive(&self, cone: &ConeSpec) -> Result<(bool, Option<Vec<f64>>)> {
        is_positive(self, cone)
    }

    pub fn spectral_radius(&self) -> SpectralEstimate {
        spectral_radius(self)
    }

    pub fn power_norms(&self, k: usize, norm: Norm) -> PowerNorms {
        power_norms(self, k, norm)
    }
}

/// Number of random boundary rays probed when certifying Lorentz positivity.
pub const LORENTZ_POSITIVITY_SAMPLES: usize = 4096;
const POSITIVITY_SEED: u64 = 0x5e_ed0f_c09e;
const POSITIVITY_TOL: f64 = 1e-12;

pub fn is_positive(op: &OperatorSpec, cone: &ConeSpec) -> Result<(bool, Option<Vec<f64>>)> {
    Error::check_dim(cone.dim, op.dim())?;
    let m = op.to_matrix();
    match cone.kind {
        ConeKind::Orthant => {
            let n = m.rows();
            for j in 0..n {
                if (0..n).any(|i| m[(i, j)] < 0.0) {
                    return Ok((false, Some(crate::linalg::unit(n, j))));
                }
            }
            Ok((true, None))
        }
        ConeKind::Lorentz => {
            let n = m.rows();
            let scale = m.max_abs_entry().max(1.0);
            let maps_in = |ray: &[f64]| {
                let y = m.mul_vec(ray);
                cones::contains(cone, &y, POSITIVITY_TOL * scale * Norm::L2.of(ray)).unwrap_or(false)
            };
            let mut rays: Vec<Vec<f64>> = Vec::new();
            for i in 1..n {
                for s in [1.0, -1.0] {
                    let mut r = vec![0.0; n];
                    r[0] = 1.0;
                    r[i] = s;
                    rays.push(r);
                }
            }
            for ray in &rays {
                if !maps_in(ray) {
                    return Ok((false, Some(ray.clone())));
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(POSITIVITY_SEED);
            for _ in 0..LORENTZ_POSITIVITY_SAMPLES {
                let ray = crate::sampling::lorentz_boundary_ray(&mut rng, n);
                if !maps_in(&ray) {
                    return Ok((false, Some(ray)));
                }
            }
            Ok((true, None))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub lower: f64,
    pub upper: f64,
    pub perron_value: Option<f64>,
    pub perron_vector: Option<Vec<f64>>,
    pub iterations: usize,
    /// Bracket width within `1e−8·max(1, upper)`.
    pub converged: bool,
    /// The Perron and Gelfand brackets overlap (always true when only the
    /// Gelfand route ran).
    pub routes_agree: bool,
    /// `upper / lower` of the Gelfand route alone, for diagnostics.
    pub gelfand: (f64, f64),
}

impl SpectralEstimate {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    /// Midpoint, the best single estimate of the radius.
    pub fn mid(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

pub const BRACKET_REL_WIDTH: f64 = 1e-8;
const PERRON_SHIFT: f64 = 1e-12;
const POWER_STEPS: usize = 500;
const CERT_ROUNDS: usize = 80;
const INVERSE_STEPS: usize = 4;
const SUPPORT_CUTOFF: f64 = 1e-14;
const GELFAND_SQUARINGS: usize = 48;

#[derive(Debug, Clone)]
struct PerronRoute {
    lower: f64,
    upper: f64,
    vector: Vec<f64>,
    iterations: usize,
}

fn cone_lower(cone: &ConeSpec, m: &Matrix, x: &[f64]) -> f64 {
    match cone.kind {
        ConeKind::Orthant => {
            // Tx ≥ λx for any nonnegative x bounds the radius from below, so
            // dropping negligible entries is still a valid certificate.
            let top = x.iter().fold(0.0_f64, |a, v| a.max(*v));
            let xt: Vec<f64> = x
                .iter()
                .map(|v| if *v > SUPPORT_CUTOFF * top { *v } else { 0.0 })
                .collect();
            let y = m.mul_vec(&xt);
            cones::ratio_lower(cone, &xt, &y).max(0.0)
        }
        ConeKind::Lorentz => {
            let y = m.mul_vec(x);
            cones::ratio_lower(cone, x, &y).max(0.0)
        }
    }
}

/// Upper bound certified by `x` in the cone interior; `None` otherwise.
fn cone_upper(cone: &ConeSpec, m: &Matrix, x: &[f64]) -> Option<f64> {
    if !x.iter().all(|v| v.is_finite()) {
        return None;
    }
    let (inside, _) = cones::is_interior(cone, x).ok()?;
    if !inside {
        return None;
    }
    let y = m.mul_vec(x);
    let u = cones::ratio_upper(cone, x, &y);
    u.is_finite().then_some(u.max(0.0))
}

fn cone_normalize(cone: &ConeSpec, x: &[f64]) -> Option<Vec<f64>> {
    let norm = if cone.is_orthant() { Norm::L1 } else { cone.norm };
    normalized(x, norm)
}

fn resolvent_solve_raw(m: &Matrix, mu: f64, y: &[f64]) -> Option<Vec<f64>> {
    let a = m.scale(-1.0).shifted(mu);
    let lu = a.lu().ok()?;
    let z = lu.solve_refined(&a, y, 2);
    z.iter().all(|v| v.is_finite()).then_some(z)
}

/// Collatz–Wielandt bracket on a cone, sharpened by resolvent certificates
/// and inverse iteration.
fn perron_route(m: &Matrix, cone: &ConeSpec) -> PerronRoute {
    let axis = cone.axis();
    let mut x = cone_normalize(cone, &axis).expect("axis is nonzero");
    let shifted = m.shifted(PERRON_SHIFT);
    let mut iterations = 0;
    let mut upper = f64::INFINITY;
    for _ in 0..POWER_STEPS {
        iterations += 1;
        let y = shifted.mul_vec(&x);
        match cone_normalize(cone, &y) {
            Some(v) => x = v,
            None => break,
        }
    }
    let mut lower = cone_lower(cone, m, &x);
    if let Some(u) = cone_upper(cone, m, &x) {
        upper = upper.min(u);
    }
    let base_w = |l: f64| PERRON_SHIFT * l.max(1.0);
    let mut w = base_w(lower);
    let target = |u: f64| BRACKET_REL_WIDTH * 1e-2 * u.max(1.0);
    for _ in 0..CERT_ROUNDS {
        if upper - lower <= target(upper) {
            break;
        }
        let mu = lower + w;
        iterations += 1;
        let z = resolvent_solve_raw(m, mu, &axis);
        let cert = z.as_ref().and_then(|z| cone_upper(cone, m, z));
        match cert {
            Some(u) => {
                upper = upper.min(u);
                let mut v = cone_normalize(cone, z.as_ref().unwrap()).unwrap_or(x.clone());
                let before = lower;
                for _ in 0..INVERSE_STEPS {
                    iterations += 1;
                    let Some(next) = resolvent_solve_raw(m, mu, &v).and_then(|s| cone_normalize(cone, &s)) else {
                        break;
                    };
                    v = next;
                    let l = cone_lower(cone, m, &v);
                    if l > lower {
                        lower = l;
                        x = v.clone();
                    }
                }
                if cone_lower(cone, m, &v) >= lower {
                    x = v;
                }
                if lower <= before && w <= base_w(lower) {
                    break;
                }
                w = base_w(lower);
            }
            None => {
                w *= 10.0;
                if !w.is_finite() {
                    break;
                }
            }
        }
    }
    if upper < lower {
        // rounding at the last ulp; keep the bracket ordered
        upper = lower;
    }
    PerronRoute {
        lower,
        upper,
        vector: x,
        iterations,
    }
}

/// Gelfand bracket from normalized repeated squaring.
fn gelfand_route(m: &Matrix) -> (f64, f64, usize) {
    let nonneg = m.min_entry() >= 0.0;
    let mut upper = m.norm_l1().min(m.norm_linf());
    let mut lower = lower_from_power(m, nonneg);
    if upper == 0.0 {
        return (0.0, 0.0, 0);
    }
    let mut log_scale = 0.0_f64;
    let mut p = m.clone();
    let mut k: f64 = 1.0;
    let mut steps = 0;
    for _ in 0..GELFAND_SQUARINGS {
        let s = p.norm_linf();
        if s == 0.0 {
            return (0.0, 0.0, steps);
        }
        p = p.scale(1.0 / s);
        log_scale += s.ln();
        p = p.mul(&p);
        log_scale *= 2.0;
        k *= 2.0;
        steps += 1;
        let nrm = p.norm_l1().min(p.norm_linf());
        if nrm == 0.0 {
            return (0.0, 0.0, steps);
        }
        let u = ((nrm.ln() + log_scale) / k).exp();
        upper = upper.min(u);
        let l = lower_from_power(&p, nonneg);
        if l > 0.0 {
            lower = lower.max(((l.ln() + log_scale) / k).exp());
        }
        if !p.is_finite() {
            break;
        }
    }
    (lower.min(upper), upper, steps)
}

/// A value `≤ ρ(P)`, from the diagonal and row/column sums of a nonnegative
/// `P`, or from the trace otherwise.
fn lower_from_power(p: &Matrix, nonneg: bool) -> f64 {
    let n = p.rows();
    if nonneg {
        let diag = p.diagonal().into_iter().fold(0.0_f64, f64::max);
        let min_row = (0..n).map(|i| p.row(i).iter().sum::<f64>()).fold(f64::INFINITY, f64::min);
        let min_col = (0..n)
            .map(|j| (0..n).map(|i| p[(i, j)]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        diag.max(min_row).max(min_col).max(0.0)
    } else {
        p.trace().abs() / n as f64
    }
}

pub fn spectral_radius(op: &OperatorSpec) -> SpectralEstimate {
    match op {
        OperatorSpec::Diagonal(d) => {
            // exact: the bracket collapses but both routes still run
            let m = op.to_matrix();
            let mut est = combine(&m, op.is_nonnegative().then(|| ConeSpec::orthant(d.len(), Norm::L1)));
            let exact = d.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if est.lower <= exact && exact <= est.upper {
                est.lower = est.lower.max(exact.min(est.upper));
            }
            est
        }
        _ => {
            let m = op.to_matrix();
            let cone = op.is_nonnegative().then(|| ConeSpec::orthant(m.rows(), Norm::L1));
            combine(&m, cone)
        }
    }
}

/// Spectral bracket using the Perron route on `cone` when `T` is positive
/// with respect to it.
pub fn spectral_radius_on_cone(op: &OperatorSpec, cone: &ConeSpec) -> Result<SpectralEstimate> {
    Error::check_dim(cone.dim, op.dim())?;
    if cone.is_orthant() {
        return Ok(spectral_radius(op));
    }
    let (pos, _) = is_positive(op, cone)?;
    let m = op.to_matrix();
    Ok(combine(&m, pos.then_some(*cone)))
}

fn combine(m: &Matrix, cone: Option<ConeSpec>) -> SpectralEstimate {
    let (gl, gu, gsteps) = gelfand_route(m);
    let Some(cone) = cone else {
        return SpectralEstimate {
            lower: gl,
            upper: gu,
            perron_value: None,
            perron_vector: None,
            iterations: gsteps,
            converged: gu - gl <= BRACKET_REL_WIDTH * gu.max(1.0),
            routes_agree: true,
            gelfand: (gl, gu),
        };
    };
    let p = perron_route(m, &cone);
    let slack = 1e-9 * p.upper.max(gu).max(1.0);
    let routes_agree = p.lower <= gu + slack && gl <= p.upper + slack;
    let (lower, upper) = if routes_agree {
        let lo = p.lower.max(gl);
        let hi = p.upper.min(gu);
        // the two routes can cross by a few ulps when both are tight
        (lo.min(hi), hi)
    } else {
        (p.lower.min(gl), p.upper.max(gu))
    };
    let perron_value = p.lower.clamp(lower, upper);
    SpectralEstimate {
        lower,
        upper,
        perron_value: Some(perron_value),
        perron_vector: Some(p.vector),
        iterations: p.iterations + gsteps,
        converged: routes_agree && upper - lower <= BRACKET_REL_WIDTH * upper.max(1.0),
        routes_agree,
        gelfand: (gl, gu),
    }
}

/// Relative residual accepted from a resolvent solve.
pub const RESOLVENT_RESIDUAL: f64 = 1e-10;
const NEUMANN_RATIO: f64 = 0.999;
const NEUMANN_MAX_TERMS: usize = 200_000;
const NEUMANN_AGREEMENT: f64 = 1e-8;

/// Solve `(λI − T)z = y` after checking `λ` against the spectral bracket.
pub fn resolvent_apply(op: &OperatorSpec, lambda: f64, y: &[f64]) -> Result<Vec<f64>> {
    let est = spectral_radius(op);
    resolvent_apply_with(op, &est, lambda, y)
}

pub fn resolvent_apply_with(
    op: &OperatorSpec,
    est: &SpectralEstimate,
    lambda: f64,
    y: &[f64],
) -> Result<Vec<f64>> {
    Error::check_dim(op.dim(), y.len())?;
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be finite, got {lambda}")));
    }
    let proximity = || Error::SpectralProximity {
        lambda,
        lower: est.lower,
        upper: est.upper,
    };
    if est.contains(lambda.abs()) {
        return Err(proximity());
    }
    let m = op.to_matrix();
    let a = m.scale(-1.0).shifted(lambda);
    let lu = a.lu().map_err(|_| proximity())?;
    let z = lu.solve_refined(&a, y, 3);
    let r = crate::linalg::sub(&a.mul_vec(&z), y);
    let ynorm = Norm::LInf.of(y);
    let residual = Norm::LInf.of(&r);
    let bound = RESOLVENT_RESIDUAL * ynorm;
    if !(residual <= bound) {
        return Err(Error::Residual { residual, bound });
    }
    if lambda > 0.0 && est.upper / lambda <= NEUMANN_RATIO {
        neumann_cross_check(&m, lambda, y, &z)?;
    }
    Ok(z)
}

fn neumann_cross_check(m: &Matrix, lambda: f64, y: &[f64], z: &[f64]) -> Result<()> {
    let n = y.len();
    let mut term: Vec<f64> = y.iter().map(|v| v / lambda).collect();
    let mut sum = term.clone();
    let mut abs_scale: Vec<f64> = term.iter().map(|v| v.abs()).collect();
    for _ in 0..NEUMANN_MAX_TERMS {
        term = m.mul_vec(&term).into_iter().map(|v| v / lambda).collect();
        let size = Norm::LInf.of(&term);
        for i in 0..n {
            sum[i] += term[i];
            abs_scale[i] += term[i].abs();
        }
        if size <= 1e-17 * Norm::LInf.of(&abs_scale) || size == 0.0 {
            break;
        }
        if !size.is_finite() {
            return Err(Error::CrossCheck("Neumann series overflowed".into()));
        }
    }
    let scale = Norm::LInf.of(&abs_scale).max(f64::MIN_POSITIVE);
    let gap = Norm::LInf.of(&crate::linalg::sub(&sum, z));
    if gap > NEUMANN_AGREEMENT * scale {
        return Err(Error::CrossCheck(format!(
            "LU and Neumann resolvents differ by {gap:e} (scale {scale:e})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerNorms {
    /// `‖T⁰‖, ‖T¹‖, …`, possibly cut short at overflow.
    pub values: Vec<f64>,
    pub overflow: bool,
}

pub fn power_norms(op: &OperatorSpec, k: usize, norm: Norm) -> PowerNorms {
    let m = op.to_matrix();
    let mut p = Matrix::identity(m.rows());
    let mut values = Vec::with_capacity(k + 1);
    values.push(p.induced_norm(norm));
    for _ in 0..k {
        p = p.mul(&m);
        let v = p.induced_norm(norm);
        if !v.is_finite() || !p.is_finite() {
            return PowerNorms { values, overflow: true };
        }
        values.push(v);
    }
    PowerNorms {
        values,
        overflow: false,
    }
}
