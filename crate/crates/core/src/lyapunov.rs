//! Lyapunov certificates: the quadratic form solving the Stein equation
//! `TᵀQT − Q = −I`, and equivalent norms in which `T` is a strict contraction.

use serde::{Deserialize, Serialize};

use crate::cones::ConeSpec;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix, Norm};
use crate::operators::{spectral_radius, OperatorSpec};
use crate::sampling;

/// Stein series stops once a term is below this fraction of `max(1, ‖Q‖)`.
pub const STEIN_TERM_TOL: f64 = 1e-14;
pub const STEIN_RESIDUAL_TOL: f64 = 1e-8;
const STEIN_MAX_TERMS: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticCertificate {
    #[serde(with = "rows")]
    pub q: Matrix,
    /// `‖TᵀQT − Q + I‖∞`.
    pub residual: f64,
    pub terms: usize,
    /// Geometric estimate of the truncated series tail.
    pub tail_bound: f64,
}

impl QuadraticCertificate {
    pub fn value(&self, x: &[f64]) -> f64 {
        dot(x, &self.q.mul_vec(x))
    }
}

pub(crate) mod rows {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::Matrix;

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
        m.to_rows().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

pub fn solve_stein(op: &OperatorSpec) -> Result<QuadraticCertificate> {
    let est = spectral_radius(op);
    if est.upper >= 1.0 {
        return Err(Error::Divergent(format!(
            "Stein series needs spectral radius < 1, bracket upper is {}",
            est.upper
        )));
    }
    let t = op.to_matrix();
    let n = t.rows();
    let mut q = Matrix::identity(n);
    let mut p = Matrix::identity(n);
    let mut terms = 1;
    let mut prev;
    let mut last = 1.0_f64;
    loop {
        p = p.mul(&t);
        let term = p.transpose().mul(&p);
        let size = term.norm_linf();
        if !size.is_finite() || size > 1e300 {
            return Err(Error::Divergent("Stein series terms overflow".into()));
        }
        q = q.add(&term);
        terms += 1;
        prev = last;
        last = size;
        if size < STEIN_TERM_TOL * q.norm_linf().max(1.0) {
            break;
        }
        if terms >= STEIN_MAX_TERMS {
            return Err(Error::Divergent(format!("Stein series not settled after {terms} terms")));
        }
    }
    let ratio = if prev > 0.0 { (last / prev).max(est.upper * est.upper) } else { 0.0 };
    let tail_bound = if ratio < 1.0 { last * ratio / (1.0 - ratio) } else { f64::INFINITY };
    let q = q.add(&q.transpose()).scale(0.5);
    let residual = stein_residual(&t, &q);
    if residual > STEIN_RESIDUAL_TOL {
        return Err(Error::Residual {
            residual,
            bound: STEIN_RESIDUAL_TOL,
        });
    }
    Ok(QuadraticCertificate {
        q,
        residual,
        terms,
        tail_bound,
    })
}

pub fn stein_residual(t: &Matrix, q: &Matrix) -> f64 {
    t.transpose()
        .mul(q)
        .mul(t)
        .sub(q)
        .add(&Matrix::identity(t.rows()))
        .norm_linf()
}

/// Checks `V(Tx) = V(x) − ‖x‖₂²` on every sample.
pub fn quadratic_decrease_check(cert: &QuadraticCertificate, op: &OperatorSpec, samples: &[Vec<f64>]) -> Result<bool> {
    for x in samples {
        let tx = op.apply(x)?;
        let vx = cert.value(x);
        let gap = (cert.value(&tx) - vx + dot(x, x)).abs();
        if gap > 1e-8 * (1.0 + vx.abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormCertificate {
    pub s: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub contraction_factor: f64,
}

/// `x ↦ max_{k≤K} ‖(sT)^k x‖`, optionally applied to `|x|`.
#[derive(Debug, Clone)]
pub struct EquivalentNorm {
    pub certificate: NormCertificate,
    pub norm: Norm,
    pub lattice: bool,
    powers: Vec<Matrix>,
}

pub const CONTRACTION_SAMPLES: usize = 1000;
const MAX_NORM_DEPTH: usize = 100_000;

impl EquivalentNorm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let v: Vec<f64> = if self.lattice {
            x.iter().map(|a| a.abs()).collect()
        } else {
            x.to_vec()
        };
        self.powers
            .iter()
            .map(|p| self.norm.of(&p.mul_vec(&v)))
            .fold(0.0, f64::max)
    }

    /// `max_k s^k‖T^k‖`, the upper equivalence constant.
    pub fn equivalence_constant(&self) -> f64 {
        self.powers.iter().map(|p| p.induced_norm(self.norm)).fold(0.0, f64::max)
    }
}

pub fn equivalent_norm(
    op: &OperatorSpec,
    s: f64,
    lattice: bool,
    cone: &ConeSpec,
    seed: u64,
) -> Result<EquivalentNorm> {
    Error::check_dim(cone.dim, op.dim())?;
    if lattice && !cone.is_orthant() {
        return Err(Error::NotALattice);
    }
    if lattice && !op.is_nonnegative() {
        return Err(Error::InvalidArgument(
            "the lattice variant needs an entrywise nonnegative operator".into(),
        ));
    }
    if !(s >= 1.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("scaling s must be >= 1, got {s}")));
    }
    let est = spectral_radius(op);
    if s * est.upper >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "s·upper = {} is not below 1",
            s * est.upper
        )));
    }
    let norm = cone.norm;
    let st = op.to_matrix().scale(s);
    let mut powers = vec![Matrix::identity(op.dim())];
    loop {
        let next = powers.last().unwrap().mul(&st);
        let size = next.induced_norm(norm);
        powers.push(next);
        if size < 1.0 {
            break;
        }
        if powers.len() > MAX_NORM_DEPTH || !size.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "equivalent norm needs more than {MAX_NORM_DEPTH} powers"
            )));
        }
    }
    // the power that first drops below 1 can never attain the sup
    let k = powers.len() - 1;
    powers.pop();
    let mut en = EquivalentNorm {
        certificate: NormCertificate {
            s,
            k,
            contraction_factor: 0.0,
        },
        norm,
        lattice,
        powers,
    };
    let mut rng = sampling::stream(seed, "equivalent-norm");
    let mut worst = 0.0_f64;
    for _ in 0..CONTRACTION_SAMPLES {
        let x = sampling::signed_vec(&mut rng, op.dim());
        let nx = en.eval(&x);
        if nx > 0.0 {
            worst = worst.max(en.eval(&op.apply(&x)?) / nx);
        }
    }
    en.certificate.contraction_factor = worst;
    Ok(en)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KForm {
    Linear,
    Power,
}

/// Comparison function `r ↦ κ r^q` (`q = 1` for the linear form).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KFunctionSpec {
    pub form: KForm,
    pub coefficient: f64,
    pub exponent: f64,
}

impl KFunctionSpec {
    pub fn linear(coefficient: f64) -> Self {
        KFunctionSpec {
            form: KForm::Linear,
            coefficient,
            exponent: 1.0,
        }
    }

    pub fn power(coefficient: f64, exponent: f64) -> Self {
        KFunctionSpec {
            form: KForm::Power,
            coefficient,
            exponent,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self.form {
            KForm::Linear => self.coefficient * r,
            KForm::Power => self.coefficient * r.powf(self.exponent),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovViolation {
    LowerSandwich,
    UpperSandwich,
    Decrease,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovCheck {
    pub passed: bool,
    pub violation: Option<(Vec<f64>, LyapunovViolation)>,
}

const LYAPUNOV_SLACK: f64 = 1e-10;

pub struct LyapunovCandidate<'a> {
    pub v: &'a dyn Fn(&[f64]) -> f64,
    pub psi1: KFunctionSpec,
    pub psi2: KFunctionSpec,
    pub alpha: KFunctionSpec,
}

/// Checks `ψ₁(‖x‖) ≤ V(x) ≤ ψ₂(‖x‖)` and `V(Tx) − V(x) ≤ −α(‖x‖)` on samples.
pub fn verify_lyapunov(
    cand: &LyapunovCandidate<'_>,
    op: &OperatorSpec,
    norm: Norm,
    samples: &[Vec<f64>],
) -> Result<LyapunovCheck> {
    for x in samples {
        let r = norm.of(x);
        let vx = (cand.v)(x);
        let slack = LYAPUNOV_SLACK * (1.0 + vx.abs());
        let fail = if cand.psi1.eval(r) > vx + slack {
            Some(LyapunovViolation::LowerSandwich)
        } else if vx > cand.psi2.eval(r) + slack {
            Some(LyapunovViolation::UpperSandwich)
        } else if (cand.v)(&op.apply(x)?) - vx > -cand.alpha.eval(r) + slack {
            Some(LyapunovViolation::Decrease)
        } else {
            None
        };
        if let Some(kind) = fail {
            return Ok(LyapunovCheck {
                passed: false,
                violation: Some((x.clone(), kind)),
            });
        }
    }
    Ok(LyapunovCheck {
        passed: true,
        violation: None,
    })
}
