//! Acceptance suite: one PASS/FAIL line per criterion, with the tolerances
//! of the build contract. Runs as a plain binary (`harness = false`).

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{oracle_spr, oracle_stein, scaled_to, sweep, SweepCase};
use posstab::cones::{self, ConeSpec};
use posstab::criteria::{
    self, approximate_positive_eigenvector, vector_destabilizer, rank_one_destabilizer, strict_decay_point,
    uniform_small_gain_margin, Analysis, Consensus, CrossCheckConfig,
};
use posstab::gallery::{gallery_build, run_gallery};
use posstab::iss::{self, datko_test, iss_constants, verify_iss_bound, DatkoClass, InputSignal, SignalClass};
use posstab::linalg::{dot, sub, Norm};

use posstab::lyapunov::{equivalent_norm, solve_stein, stein_residual};
use posstab::operators::{power_norms, spectral_radius_on_cone};
use posstab::sampling::{signed_vec, stream};
use posstab::OperatorSpec;
use rand::Rng;

/// Criteria whose literal wording cannot be met by any correct
/// implementation. They still run and print FAIL; the analysis is in the
/// README.
const UNATTAINABLE: &[&str] = &["9"];

struct Line {
    id: &'static str,
    passed: bool,
    detail: String,
}

fn line(id: &'static str, passed: bool, detail: String) -> Line {
    Line { id, passed, detail }
}

fn orthant(case: &SweepCase) -> ConeSpec {
    ConeSpec::orthant(case.op.dim(), case.norm)
}

fn upper2x2() -> OperatorSpec {
    OperatorSpec::dense_from_rows(&[vec![0.5, 1.0], vec![0.0, 0.5]]).unwrap()
}

fn le_componentwise(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| *x <= y + tol)
}

fn criterion_1() -> Line {
    let start = Instant::now();
    let op = upper2x2();
    let cone = ConeSpec::orthant(2, Norm::LInf);
    let r = criteria::cross_check(&op, &cone, &CrossCheckConfig::default()).unwrap();
    let spr_ok = (r.spectral.lower - 0.5).abs() <= 1e-10 && (r.spectral.upper - 0.5).abs() <= 1e-10;
    let a = op.apply(&[6.0, 2.0]).unwrap();
    let b = op.apply(&[2.0, 2.0]).unwrap();
    let apply_ok = a == vec![5.0, 1.0] && b == vec![3.0, 1.0];
    let int_a = cones::is_interior(&cone, &sub(&[6.0, 2.0], &a)).unwrap().0;
    let int_b = cones::is_interior(&cone, &sub(&[2.0, 2.0], &b)).unwrap().0;
    let elapsed = start.elapsed();
    let passed = spr_ok && r.consensus == Consensus::Stable && apply_ok && int_a && !int_b && elapsed < Duration::from_secs(1);
    line(
        "1",
        passed,
        format!(
            "spr in [{:.17}, {:.17}], consensus {:?}, (6,2)->{a:?}, (2,2)->{b:?}, interior {int_a}/{int_b}, {elapsed:.2?}",
            r.spectral.lower, r.spectral.upper, r.consensus
        ),
    )
}

fn criterion_2(cases: &[SweepCase]) -> Line {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    let mut inconsistent = 0;
    let mut verdicts = 0;
    for (i, c) in cases.iter().enumerate() {
        let r = criteria::cross_check(&c.op, &orthant(c), &CrossCheckConfig::default()).unwrap();
        if r.consensus == Consensus::Inconsistent {
            inconsistent += 1;
        }
        for v in &r.criteria {
            verdicts += 1;
            if v.holds != c.stable() {
                mismatches.push(format!("case {i} (spr {}) {}", c.target, v.id.name()));
            }
        }
    }
    let elapsed = start.elapsed();
    let passed = mismatches.is_empty() && inconsistent == 0 && elapsed < Duration::from_secs(30);
    line(
        "2",
        passed,
        format!(
            "{} matrices, {verdicts} verdicts, {} mismatches {:?}, {inconsistent} INCONSISTENT, {elapsed:.2?}",
            cases.len(),
            mismatches.len(),
            mismatches.iter().take(5).collect::<Vec<_>>()
        ),
    )
}

fn criterion_3(cases: &[SweepCase]) -> Line {
    let mut failures = 0;
    let mut count = 0;
    for c in cases.iter().filter(|c| c.stable()) {
        count += 1;
        let cone = orthant(c);
        let est = spectral_radius_on_cone(&c.op, &cone).unwrap();
        let lambda = 0.5 * (est.upper + 1.0);
        let y = vec![1.0; c.op.dim()];
        let ok = match strict_decay_point(&c.op, &cone, lambda, &y) {
            Ok(cert) => {
                let z = &cert.z;
                let tz = c.op.apply(z).unwrap();
                let lz: Vec<f64> = z.iter().map(|v| lambda * v).collect();
                let y_l: Vec<f64> = y.iter().map(|v| v / lambda).collect();
                let mut ok = le_componentwise(&tz, &lz, 1e-10) && le_componentwise(&y_l, z, 1e-10);
                let mut tk = z.clone();
                let mut lk = 1.0;
                for _ in 1..=20 {
                    tk = c.op.apply(&tk).unwrap();
                    lk *= lambda;
                    let bound: Vec<f64> = z.iter().map(|v| lk * v).collect();
                    ok &= le_componentwise(&tk, &bound, 1e-10);
                }
                ok
            }
            Err(_) => false,
        };
        if !ok {
            failures += 1;
        }
    }
    line("3", failures == 0, format!("{count} stable matrices, {failures} failures"))
}

fn criterion_4(cases: &[SweepCase]) -> Line {
    let mut worst_residual = 0.0_f64;
    let mut worst_oracle = 0.0_f64;
    let mut worst_decrease = 0.0_f64;
    let mut rng = stream(4, "acceptance-stein");
    let mut failures = 0;
    for c in cases.iter().filter(|c| c.stable()) {
        let t = c.op.to_matrix();
        let Ok(cert) = solve_stein(&c.op) else {
            failures += 1;
            continue;
        };
        worst_residual = worst_residual.max(stein_residual(&t, &cert.q));
        if c.op.dim() <= 6 {
            let q = oracle_stein(&t);
            let n = c.op.dim();
            for i in 0..n {
                for j in 0..n {
                    worst_oracle = worst_oracle.max((q[(i, j)] - cert.q[(i, j)]).abs());
                }
            }
        }
        for _ in 0..100 {
            let x = signed_vec(&mut rng, c.op.dim());
            let gap = cert.value(&c.op.apply(&x).unwrap()) - (cert.value(&x) - dot(&x, &x));
            worst_decrease = worst_decrease.max(gap.abs());
        }
    }
    let passed = failures == 0 && worst_residual <= 1e-8 && worst_oracle <= 1e-8 && worst_decrease <= 1e-8;
    line(
        "4",
        passed,
        format!(
            "max residual {worst_residual:.3e}, max |Q - Kronecker Q| {worst_oracle:.3e}, max decrease gap {worst_decrease:.3e}, {failures} solver failures"
        ),
    )
}

fn criterion_5(cases: &[SweepCase]) -> Line {
    let mut worst_excess = f64::NEG_INFINITY;
    let mut monotone_violations = 0;
    let mut failures = 0;
    let mut rng = stream(5, "acceptance-norm");
    for c in cases.iter().filter(|c| c.stable()) {
        let cone = orthant(c);
        let est = spectral_radius_on_cone(&c.op, &cone).unwrap();
        let s = (1.0 / est.upper).sqrt();
        let (Ok(en), Ok(lat)) = (
            equivalent_norm(&c.op, s, false, &cone, 5),
            equivalent_norm(&c.op, s, true, &cone, 5),
        ) else {
            failures += 1;
            continue;
        };
        let n = c.op.dim();
        for _ in 0..1000 {
            let x = signed_vec(&mut rng, n);
            let nx = en.eval(&x);
            if nx > 0.0 {
                worst_excess = worst_excess.max(en.eval(&c.op.apply(&x).unwrap()) / nx - 1.0 / s);
            }
            let lx = lat.eval(&x);
            if lx > 0.0 {
                worst_excess = worst_excess.max(lat.eval(&c.op.apply(&x).unwrap()) / lx - 1.0 / s);
            }
        }
        worst_excess = worst_excess.max(en.certificate.contraction_factor - 1.0 / s);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let y: Vec<f64> = x.iter().map(|v| v + rng.random::<f64>()).collect();
            if lat.eval(&x) > lat.eval(&y) * (1.0 + 1e-12) {
                monotone_violations += 1;
            }
        }
    }
    let passed = failures == 0 && worst_excess <= 1e-8 && monotone_violations == 0;
    line(
        "5",
        passed,
        format!(
            "max (contraction - 1/s) {worst_excess:.3e}, lattice monotonicity violations {monotone_violations}, {failures} construction failures"
        ),
    )
}

fn criterion_6(cases: &[SweepCase]) -> Line {
    let mut chain_violations = 0;
    let mut worst_gap = f64::NEG_INFINITY;
    for c in cases.iter().filter(|c| c.stable()) {
        let (m, _) = uniform_small_gain_margin(&c.op, &orthant(c)).unwrap();
        match (m.eta_cert, m.eta_emp) {
            (Some(cert), Some(emp)) => {
                worst_gap = worst_gap.max(cert - emp);
                if cert > emp + 1e-8 {
                    chain_violations += 1;
                }
            }
            _ => chain_violations += 1,
        }
    }
    let diag = OperatorSpec::diagonal(vec![0.5, 0.9]).unwrap();
    let (m, _) = uniform_small_gain_margin(&diag, &ConeSpec::orthant(2, Norm::LInf)).unwrap();
    let eta = m.eta_emp.unwrap_or(f64::NAN);
    let passed = chain_violations == 0 && (eta - 0.1).abs() <= 1e-9;
    line(
        "6",
        passed,
        format!("chain violations {chain_violations}, max (eta_cert - eta_emp) {worst_gap:.3e}, diag(0.5,0.9) eta_emp = {eta:.17}"),
    )
}

fn criterion_7() -> Line {
    let entry = gallery_build("shift2R", Some(8)).unwrap();
    let r = run_gallery(&entry, &CrossCheckConfig::default()).unwrap();
    let expected: Vec<f64> = vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 0.0];
    let norms = r.power_norms.as_ref().map(|p| p.values.clone()).unwrap_or_default();
    let ssg = r.strong_small_gain.as_ref().map(|c| (c.passed, c.trials)).unwrap_or((0, 0));
    let flag = r.report.has_flag(criteria::flags::TRUNCATION_PATHOLOGY);
    let shift_ok = norms == expected && ssg == (1000, 1000) && flag;

    let mut etas = Vec::new();
    for n in [4, 6, 8] {
        let e = gallery_build("multiplication", Some(n)).unwrap();
        let (m, _) = uniform_small_gain_margin(&e.operator, &e.cone).unwrap();
        etas.push(m.eta_emp.unwrap_or(f64::NAN));
    }
    let target = (-7.0_f64).exp();
    let mult_ok = (etas[2] - target).abs() <= 1e-12 && etas[0] > etas[1] && etas[1] > etas[2];
    line(
        "7",
        shift_ok && mult_ok,
        format!(
            "shift2R power norms {norms:?}, strong small-gain {}/{}, pathology flag {flag}; multiplication eta(4,6,8) = {etas:?}, |eta(8) - e^-7| = {:.3e}",
            ssg.0,
            ssg.1,
            (etas[2] - target).abs()
        ),
    )
}

/// Convolution `x(k) = T^k x0 + Σ T^{k−1−j} u(j)` evaluated with nalgebra.
fn convolution_gap(op: &OperatorSpec, x0: &[f64], u: &InputSignal, steps: usize) -> f64 {
    let n = op.dim();
    let traj = iss::simulate(op, x0, u, steps, Norm::LInf).unwrap();
    let t = common::to_nalgebra(&op.to_matrix());
    let mut worst = 0.0_f64;
    for k in 0..=steps {
        let mut x = t.pow(k as u32) * nalgebra::DVector::from_column_slice(x0);
        for j in 0..k {
            x += t.pow((k - 1 - j) as u32) * nalgebra::DVector::from_vec(u.at(j, n));
        }
        let s = &traj.states[k];
        let gap = (0..n).map(|i| (x[i] - s[i]).abs()).fold(0.0, f64::max);
        let scale = 1.0 + s.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        worst = worst.max(gap / scale);
    }
    worst
}

fn criterion_8(cases: &[SweepCase]) -> Line {
    let half = OperatorSpec::diagonal(vec![0.5]).unwrap();
    let est = iss_constants(&half, Norm::LInf).unwrap();
    let u = InputSignal::new(SignalClass::LInf, None, vec![vec![1.0]; 200]).unwrap();
    let traj = iss::simulate(&half, &[0.0], &u, 200, Norm::LInf).unwrap();
    let sup = traj.norms.iter().copied().fold(0.0, f64::max);
    let scalar_ok = (est.c - 2.0).abs() <= 1e-9 && (sup - 2.0).abs() <= 1e-9;

    let mut failed_matrices = 0;
    let mut worst_slack = f64::INFINITY;
    let mut worst_conv = 0.0_f64;
    let mut rng = stream(8, "acceptance-iss");
    for c in cases.iter().filter(|c| c.stable()) {
        let ok = iss_constants(&c.op, c.norm)
            .and_then(|e| verify_iss_bound(&c.op, &e, 100, 8))
            .map(|v| {
                worst_slack = worst_slack.min(v.worst_slack);
                v.passed
            })
            .unwrap_or(false);
        if !ok {
            failed_matrices += 1;
        }
        let n = c.op.dim();
        let x0 = signed_vec(&mut rng, n);
        let values: Vec<Vec<f64>> = (0..30).map(|_| signed_vec(&mut rng, n)).collect();
        let u = InputSignal::new(SignalClass::LInf, None, values).unwrap();
        worst_conv = worst_conv.max(convolution_gap(&c.op, &x0, &u, 30));
    }
    let passed = scalar_ok && failed_matrices == 0 && worst_conv <= 1e-10;
    line(
        "8",
        passed,
        format!(
            "diag(0.5): C = {:.17}, sup |x| = {sup:.17}; ISS bound failures {failed_matrices} (min slack {worst_slack:.3e}); max recurrence/convolution gap {worst_conv:.3e}",
            est.c
        ),
    )
}

fn criterion_9(cases: &[SweepCase]) -> Vec<Line> {
    let mut not_convergent = 0;
    let mut stable = 0;
    for c in cases.iter().filter(|c| c.stable()) {
        stable += 1;
        let x = vec![1.0; c.op.dim()];
        for p in [1.0, 2.0] {
            let d = datko_test(&c.op, &x, p, iss::DEFAULT_RESPONSE_HORIZON, c.norm).unwrap();
            if d.classification != DatkoClass::Convergent {
                not_convergent += 1;
            }
        }
    }
    let mut not_divergent = 0;
    let mut unstable = 0;
    for c in cases.iter().filter(|c| !c.stable()) {
        unstable += 1;
        let a = Analysis::new(&c.op, &orthant(c)).unwrap();
        let x = a.perron_unit().unwrap();
        for p in [1.0, 2.0] {
            let d = datko_test(&c.op, &x, p, iss::DEFAULT_RESPONSE_HORIZON, c.norm).unwrap();
            if d.classification != DatkoClass::Divergent {
                not_divergent += 1;
            }
        }
    }

    let entry = gallery_build("diag_strong_stable", Some(64)).unwrap();
    let r = run_gallery(&entry, &CrossCheckConfig::default()).unwrap();
    let strong = r.report.verdict(criteria::CriterionId::StrongStab).is_some_and(|v| v.holds);
    let norms = r.power_norms.clone().map(|p| p.values).unwrap_or_default();
    let floor = 1.0 - 1.0 / 65.0;
    let first_below = norms.iter().position(|v| *v < floor);
    let literal = strong && first_below.is_none();
    // rate form: ‖T^k‖^{1/k} never drops below the slowest mode
    let horizon = iss::decay_horizon(r.report.spectral.upper);
    let long = power_norms(&entry.operator, horizon, Norm::LInf);
    let worst_rate = long.values[1..]
        .iter()
        .enumerate()
        .map(|(k, v)| v.powf(1.0 / (k + 1) as f64))
        .fold(f64::INFINITY, f64::min);
    let rate = strong && worst_rate >= floor * (1.0 - 1e-12);
    let sweep_ok = not_convergent == 0 && not_divergent == 0;

    vec![
        line(
            "9",
            sweep_ok && literal,
            format!(
                "stable sweep non-convergent {not_convergent}/{}, Perron starts non-divergent {not_divergent}/{}; diag(64) STRONG_STAB {strong}, ‖T^k‖∞ >= 1-1/65 first fails at k = {first_below:?} (‖T^2‖∞ = {:.17}) [literal clause unattainable: ‖T^k‖∞ = (64/65)^k]",
                2 * stable,
                2 * unstable,
                norms.get(2).copied().unwrap_or(f64::NAN),
            ),
        ),
        line(
            "9-rate",
            sweep_ok && rate,
            format!("diag(64): min over k <= {horizon} of ‖T^k‖∞^(1/k) = {worst_rate:.17} vs 1-1/65 = {floor:.17}, STRONG_STAB {strong}"),
        ),
    ]
}

fn criterion_10() -> Line {
    let mut rng = stream(10, "acceptance-destabilizer");
    let mut failures = Vec::new();
    let mut vector_failures = 0;
    let mut zero_norm = 0;
    for i in 0..50 {
        let n = rng.random_range(2..=8);
        let target = 1.0 + 0.2 * rng.random::<f64>();
        let op = scaled_to(&mut rng, n, target);
        let cone = ConeSpec::orthant(n, [Norm::L1, Norm::L2, Norm::LInf][i % 3]);
        let m_prime = cone.constants().dual_m_prime;
        match rank_one_destabilizer(&op, &cone) {
            Ok(Some(d)) => {
                let img = d.apply_perturbed(&op, &d.x).unwrap();
                let dominates = img.iter().zip(&d.x).all(|(a, b)| *a >= b - 1e-10);
                let bounded = d.norm <= m_prime * cone.norm.of(&d.z) * (1.0 + 1e-12);
                if d.norm == 0.0 {
                    zero_norm += 1;
                }
                if !(dominates && bounded) {
                    failures.push(i);
                }
            }
            _ => failures.push(i),
        }
        // the vector construction itself, from a rough approximate eigenvector
        let steps = approximate_positive_eigenvector(&op, &cone, 3).unwrap();
        if let Some(s) = steps.last() {
            let rho = oracle_spr(&op.to_matrix()).max(1.0);
            let d = vector_destabilizer(&op, &cone, &s.x, rho).unwrap();
            let img = d.apply_perturbed(&op, &d.x).unwrap();
            let dominates = img.iter().zip(&d.x).all(|(a, b)| *a >= rho * b - 1e-10);
            if !(dominates && d.norm <= d.bound * (1.0 + 1e-12)) {
                vector_failures += 1;
            }
        } else {
            vector_failures += 1;
        }
    }
    line(
        "10",
        failures.is_empty() && vector_failures == 0,
        format!(
            "50 matrices with spr in [1, 1.2]: failures {failures:?} ({zero_norm} with P = 0); construction from approximate eigenvectors: {vector_failures} failures"
        ),
    )
}

fn main() -> ExitCode {
    let cases = sweep();
    let mut lines = vec![criterion_1(), criterion_2(&cases), criterion_3(&cases)];
    lines.push(criterion_4(&cases));
    lines.push(criterion_5(&cases));
    lines.push(criterion_6(&cases));
    lines.push(criterion_7());
    lines.push(criterion_8(&cases));
    lines.extend(criterion_9(&cases));
    lines.push(criterion_10());

    let mut unexpected = 0;
    for l in &lines {
        let status = if l.passed { "PASS" } else { "FAIL" };
        println!("acceptance {:>6}: {status}  {}", l.id, l.detail);
        if !l.passed && !UNATTAINABLE.contains(&l.id) {
            unexpected += 1;
        }
    }
    let fails = lines.iter().filter(|l| !l.passed).count();
    println!(
        "acceptance summary: {} PASS, {fails} FAIL ({} documented as unattainable)",
        lines.len() - fails,
        fails - unexpected
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
