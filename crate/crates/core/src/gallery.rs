//! Built-in example systems, each with the phenomena it is meant to show.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cones::ConeSpec;
use crate::criteria::{cross_check, flags, CertificateReport, Consensus, CriterionId, CrossCheckConfig};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Norm};
use crate::operators::{power_norms, OperatorSpec, PowerNorms};
use crate::sampling::stream;

pub const NAMES: [&str; 5] = ["upper2x2", "shift2R", "multiplication", "diag_strong_stable", "lorentz_demo"];

pub const SHIFT_DEFAULT_DIM: usize = 8;
pub const MULTIPLICATION_DEFAULT_POINTS: usize = 8;
pub const DIAGONAL_DEFAULT_DIM: usize = 64;
pub const STRONG_SMALL_GAIN_TRIALS: usize = 1000;
/// Upper bound on the diagonal entries of `D` in the strong small-gain trials.
pub const STRONG_SMALL_GAIN_D_BOUND: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phenomenon {
    Consensus { value: Consensus },
    Verdict { id: CriterionId, holds: bool },
    SpectralRadius { value: f64, tol: f64 },
    /// Reported margin of a criterion.
    Margin { id: CriterionId, value: f64, tol: f64 },
    /// `‖Tᵏ‖` for `k = 0, 1, …`, exactly.
    PowerNorms { values: Vec<f64> },
    /// `Tz ≤ λz` for some `λ < 1` with `z` interior.
    StrictDecayAt { z: Vec<f64> },
    /// `Tz ≰ z`.
    NoDecayAt { z: Vec<f64> },
    /// `γR(I + D)x ≱ x` on random sparse trials.
    StrongSmallGain { trials: usize },
    Flag { name: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub phenomenon: Phenomenon,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryEntry {
    pub name: String,
    pub operator: OperatorSpec,
    pub cone: ConeSpec,
    pub expected: Vec<Expectation>,
    pub flags: Vec<String>,
    pub notes: Vec<String>,
}

fn expect(phenomenon: Phenomenon, source: &str) -> Expectation {
    Expectation {
        phenomenon,
        source: source.to_string(),
    }
}

/// `dim` is the truncation size or grid size; `None` picks the default.
/// The 2×2 and Lorentz examples have a fixed size and ignore it.
pub fn gallery_build(name: &str, dim: Option<usize>) -> Result<GalleryEntry> {
    match name {
        "upper2x2" => Ok(upper2x2()),
        "shift2R" => shift2r(dim.unwrap_or(SHIFT_DEFAULT_DIM)),
        "multiplication" => multiplication(dim.unwrap_or(MULTIPLICATION_DEFAULT_POINTS)),
        "diag_strong_stable" => diag_strong_stable(dim.unwrap_or(DIAGONAL_DEFAULT_DIM)),
        "lorentz_demo" => lorentz_demo(),
        other => Err(Error::UnknownGallery(other.to_string())),
    }
}

fn upper2x2() -> GalleryEntry {
    let src = "2x2 upper-triangular example";
    GalleryEntry {
        name: "upper2x2".into(),
        operator: OperatorSpec::dense_from_rows(&[vec![0.5, 1.0], vec![0.0, 0.5]]).expect("valid"),
        cone: ConeSpec::orthant(2, Norm::LInf),
        expected: vec![
            expect(Phenomenon::Consensus { value: Consensus::Stable }, src),
            expect(Phenomenon::SpectralRadius { value: 0.5, tol: 1e-10 }, src),
            expect(Phenomenon::StrictDecayAt { z: vec![6.0, 2.0] }, src),
            expect(Phenomenon::NoDecayAt { z: vec![2.0, 2.0] }, src),
        ],
        flags: vec![],
        notes: vec!["T(6,2) = (5,1) lies strictly below (6,2); T(2,2) = (3,1) does not lie below (2,2)".into()],
    }
}

fn shift2r(dim: usize) -> Result<GalleryEntry> {
    let src = "doubled right shift on bounded sequences";
    let values: Vec<f64> = (0..=dim).map(|k| if k < dim { 2f64.powi(k as i32) } else { 0.0 }).collect();
    Ok(GalleryEntry {
        name: "shift2R".into(),
        operator: OperatorSpec::shift(dim, 2.0)?,
        cone: ConeSpec::orthant(dim, Norm::LInf),
        expected: vec![
            expect(Phenomenon::Verdict { id: CriterionId::SimpleSg, holds: true }, src),
            expect(Phenomenon::PowerNorms { values }, src),
            expect(
                Phenomenon::StrongSmallGain {
                    trials: STRONG_SMALL_GAIN_TRIALS,
                },
                src,
            ),
            expect(
                Phenomenon::Flag {
                    name: flags::TRUNCATION_PATHOLOGY.into(),
                },
                src,
            ),
        ],
        flags: vec![flags::TRUNCATION_PATHOLOGY.into()],
        notes: vec![
            format!(
                "the {dim}-dimensional truncation is nilpotent (spectral radius 0); the operator on the full sequence space has spectrum the closed disc of radius 2 and no eigenvalues"
            ),
            "the strong small-gain condition holds, yet powers grow like 2^k until the truncation cuts them off".into(),
        ],
    })
}

fn multiplication(points: usize) -> Result<GalleryEntry> {
    if points == 0 {
        return Err(Error::InvalidArgument("multiplication needs at least one grid point".into()));
    }
    let src = "multiplication by 1 - e^{-w} on a grid w = 0, 1, ...";
    let entries: Vec<f64> = (0..points).map(|i| 1.0 - (-(i as f64)).exp()).collect();
    let eta = (-((points - 1) as f64)).exp();
    Ok(GalleryEntry {
        name: "multiplication".into(),
        operator: OperatorSpec::diagonal(entries)?,
        cone: ConeSpec::orthant(points, Norm::LInf),
        expected: vec![
            expect(Phenomenon::Verdict { id: CriterionId::SimpleSg, holds: true }, src),
            expect(
                Phenomenon::Margin {
                    id: CriterionId::UniformSg,
                    value: eta,
                    tol: 1e-12,
                },
                src,
            ),
            expect(
                Phenomenon::Flag {
                    name: flags::MARGIN_VANISHING.into(),
                },
                src,
            ),
        ],
        flags: vec![flags::MARGIN_VANISHING.into()],
        notes: vec![format!(
            "Tx < x pointwise on the cone, but the small-gain margin e^-{} shrinks to 0 as the grid grows",
            points - 1
        )],
    })
}

fn diag_strong_stable(dim: usize) -> Result<GalleryEntry> {
    let src = "diagonal with entries 1 - 1/(n+1), strongly but not uniformly stable";
    let entries: Vec<f64> = (1..=dim).map(|n| 1.0 - 1.0 / (n as f64 + 1.0)).collect();
    let top = entries.last().copied().unwrap_or(0.0);
    Ok(GalleryEntry {
        name: "diag_strong_stable".into(),
        operator: OperatorSpec::diagonal(entries)?,
        cone: ConeSpec::orthant(dim, Norm::LInf),
        expected: vec![
            expect(Phenomenon::Verdict { id: CriterionId::StrongStab, holds: true }, src),
            expect(Phenomenon::SpectralRadius { value: top, tol: 1e-12 }, src),
            expect(
                Phenomenon::Flag {
                    name: flags::TRUNCATION_PATHOLOGY.into(),
                },
                src,
            ),
        ],
        flags: vec![flags::TRUNCATION_PATHOLOGY.into()],
        notes: vec![format!(
            "every orbit decays, but the truncation has spectral radius {top}; on the full space ‖T^k‖ = 1 for every k"
        )],
    })
}

/// `x ↦ (cosh φ·x₀ + sinh φ·x₁, sinh φ·x₀ + cosh φ·x₁, x₂)`.
pub fn boost(phi: f64) -> Matrix {
    let (c, s) = (phi.cosh(), phi.sinh());
    Matrix::from_rows(&[vec![c, s, 0.0], vec![s, c, 0.0], vec![0.0, 0.0, 1.0]]).expect("3x3")
}

/// Rotation of the spatial coordinates `(x₁, x₂)`.
pub fn spatial_rotation(theta: f64) -> Matrix {
    let (c, s) = (theta.cos(), theta.sin());
    Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, c, -s], vec![0.0, s, c]]).expect("3x3")
}

pub const LORENTZ_DEMO_SCALE: f64 = 0.4;
pub const LORENTZ_DEMO_BOOST: f64 = 0.5;
pub const LORENTZ_DEMO_ROTATION: f64 = std::f64::consts::FRAC_PI_4;

fn lorentz_demo() -> Result<GalleryEntry> {
    let src = "ice-cream cone in R^3";
    let m = boost(LORENTZ_DEMO_BOOST)
        .mul(&spatial_rotation(LORENTZ_DEMO_ROTATION))
        .scale(LORENTZ_DEMO_SCALE);
    Ok(GalleryEntry {
        name: "lorentz_demo".into(),
        operator: OperatorSpec::dense(m)?,
        cone: ConeSpec::lorentz(3, Norm::L2),
        expected: vec![expect(Phenomenon::Consensus { value: Consensus::Stable }, src)],
        flags: vec![],
        notes: vec!["a scaled boost composed with a spatial rotation maps the cone into itself without being entrywise nonnegative".into()],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongSmallGainCheck {
    pub trials: usize,
    pub passed: usize,
    pub factor: f64,
    pub d_bound: f64,
}

impl StrongSmallGainCheck {
    pub fn all_passed(&self) -> bool {
        self.passed == self.trials
    }
}

/// Trials of `γR(I + D)x ≱ x` for sparse cone vectors `x` and diagonal `D`
/// with entries in `(0, d_bound]`. At the first nonzero coordinate of `x`
/// the image is 0, so every trial passes for every `γ`.
pub fn strong_small_gain_trials(dim: usize, factor: f64, trials: usize, d_bound: f64, seed: u64) -> StrongSmallGainCheck {
    let mut rng = stream(seed, "strong-small-gain");
    let mut passed = 0;
    for _ in 0..trials {
        let x: Vec<f64> = loop {
            let x: Vec<f64> = (0..dim)
                .map(|_| if rng.random::<f64>() < 0.5 { 0.0 } else { rng.random::<f64>() })
                .collect();
            if x.iter().any(|v| *v > 0.0) {
                break x;
            }
        };
        let d: Vec<f64> = (0..dim).map(|_| d_bound * (1.0 - rng.random::<f64>())).collect();
        let mut image = vec![0.0; dim];
        for i in 1..dim {
            image[i] = factor * (1.0 + d[i - 1]) * x[i - 1];
        }
        let dominates = image.iter().zip(&x).all(|(a, b)| a >= b);
        if !dominates {
            passed += 1;
        }
    }
    StrongSmallGainCheck {
        trials,
        passed,
        factor,
        d_bound,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub phenomenon: Phenomenon,
    pub observed: serde_json::Value,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryReport {
    pub name: String,
    pub report: CertificateReport,
    pub outcomes: Vec<Outcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_norms: Option<PowerNorms>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong_small_gain: Option<StrongSmallGainCheck>,
}

impl GalleryReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }
}

fn decay_at(op: &OperatorSpec, cone: &ConeSpec, z: &[f64]) -> Result<(bool, f64)> {
    let tz = op.apply(z)?;
    let lambda = crate::cones::ratio_upper(cone, z, &tz);
    Ok((cone.is_interior(z)?.0 && lambda < 1.0, lambda))
}

/// Runs the cross-check on the entry and evaluates every expected
/// phenomenon against it.
pub fn run_gallery(entry: &GalleryEntry, config: &CrossCheckConfig) -> Result<GalleryReport> {
    let mut report = cross_check(&entry.operator, &entry.cone, config)?;
    report.flags.extend(entry.flags.iter().cloned());
    report.flags.sort();
    report.flags.dedup();
    report.notes.extend(entry.notes.iter().cloned());

    let needs_powers = entry
        .expected
        .iter()
        .any(|e| matches!(e.phenomenon, Phenomenon::PowerNorms { .. }))
        || entry.name == "diag_strong_stable";
    let power_norms = needs_powers.then(|| power_norms(&entry.operator, entry.cone.dim, entry.cone.norm));
    let mut strong = None;

    let mut outcomes = Vec::new();
    for e in &entry.expected {
        let (observed, passed) = match &e.phenomenon {
            Phenomenon::Consensus { value } => (serde_json::json!(report.consensus), report.consensus == *value),
            Phenomenon::Verdict { id, holds } => match report.verdict(*id) {
                Some(v) => (serde_json::json!(v.holds), v.holds == *holds),
                None => (serde_json::Value::Null, false),
            },
            Phenomenon::SpectralRadius { value, tol } => {
                let s = &report.spectral;
                (
                    serde_json::json!([s.lower, s.upper]),
                    (s.lower - value).abs() <= *tol && (s.upper - value).abs() <= *tol,
                )
            }
            Phenomenon::Margin { id, value, tol } => match report.verdict(*id) {
                Some(v) => (serde_json::json!(v.margin), (v.margin - value).abs() <= *tol),
                None => (serde_json::Value::Null, false),
            },
            Phenomenon::PowerNorms { values } => {
                let got = power_norms.as_ref().map(|p| p.values.clone()).unwrap_or_default();
                let ok = got == *values;
                (serde_json::json!(got), ok)
            }
            Phenomenon::StrictDecayAt { z } => {
                let (ok, lambda) = decay_at(&entry.operator, &entry.cone, z)?;
                (serde_json::json!(lambda), ok)
            }
            Phenomenon::NoDecayAt { z } => {
                let (_, lambda) = decay_at(&entry.operator, &entry.cone, z)?;
                (serde_json::json!(lambda), lambda > 1.0)
            }
            Phenomenon::StrongSmallGain { trials } => {
                let factor = match entry.operator {
                    OperatorSpec::TruncatedShift { factor, .. } => factor,
                    _ => return Err(Error::InvalidArgument("strong small-gain trials need a shift".into())),
                };
                let c = strong_small_gain_trials(
                    entry.cone.dim,
                    factor,
                    *trials,
                    STRONG_SMALL_GAIN_D_BOUND,
                    config.seed,
                );
                let ok = c.all_passed();
                let obs = serde_json::json!(c.passed);
                strong = Some(c);
                (obs, ok)
            }
            Phenomenon::Flag { name } => (serde_json::json!(report.has_flag(name)), report.has_flag(name)),
        };
        outcomes.push(Outcome {
            phenomenon: e.phenomenon.clone(),
            observed,
            passed,
        });
    }
    Ok(GalleryReport {
        name: entry.name.clone(),
        report,
        outcomes,
        power_norms,
        strong_small_gain: strong,
    })
}
