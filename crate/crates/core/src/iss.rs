//! Systems with additive input `x(k+1) = Tx(k) + u(k)`: simulation by
//! recurrence and by the convolution formula, ISS constants, input-class
//! response checks and the Datko–Pazy summability test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{add, Matrix, Norm};
use crate::operators::{spectral_radius, OperatorSpec};
use crate::sampling;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalClass {
    Lp,
    #[serde(rename = "linf")]
    LInf,
    C0,
}

/// A finite input sequence; steps past the end read as zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSignal {
    pub class: SignalClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub values: Vec<Vec<f64>>,
}

impl InputSignal {
    pub fn new(class: SignalClass, p: Option<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let s = InputSignal { class, p, values };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(first) = self.values.first() {
            for v in &self.values {
                Error::check_dim(first.len(), v.len())?;
            }
        }
        if self.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("input has non-finite values".into()));
        }
        match (self.class, self.p) {
            (SignalClass::Lp, Some(p)) if p >= 1.0 && p.is_finite() => Ok(()),
            (SignalClass::Lp, _) => Err(Error::InvalidArgument("lp input needs p >= 1".into())),
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> Option<usize> {
        self.values.first().map(Vec::len)
    }

    pub fn at(&self, k: usize, n: usize) -> Vec<f64> {
        self.values.get(k).cloned().unwrap_or_else(|| vec![0.0; n])
    }

    pub fn sup_norm(&self, norm: Norm) -> f64 {
        self.values.iter().map(|v| norm.of(v)).fold(0.0, f64::max)
    }

    fn check_state_dim(&self, n: usize) -> Result<()> {
        match self.dim() {
            Some(d) => Error::check_dim(n, d),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
    pub norm: Norm,
}

/// Relative tolerance for recurrence/convolution agreement.
pub const CONVOLUTION_AGREEMENT: f64 = 1e-10;

/// Runs `K` steps by recurrence, recomputing every state from the
/// convolution formula as an independent check.
pub fn simulate(op: &OperatorSpec, x0: &[f64], u: &InputSignal, k: usize, norm: Norm) -> Result<Trajectory> {
    let n = op.dim();
    Error::check_dim(n, x0.len())?;
    u.check_state_dim(n)?;
    let mut states = Vec::with_capacity(k + 1);
    states.push(x0.to_vec());
    for step in 0..k {
        let next = add(&op.apply(&states[step])?, &u.at(step, n));
        states.push(next);
    }

    // x(k) = T^k x0 + Σ_{j<k} T^{k−1−j} u(j)
    let t = op.to_matrix();
    let mut powers = vec![Matrix::identity(n)];
    for _ in 0..k {
        let next = powers.last().unwrap().mul(&t);
        powers.push(next);
    }
    for (step, state) in states.iter().enumerate() {
        let mut conv = powers[step].mul_vec(x0);
        for j in 0..step {
            let uj = u.at(j, n);
            if uj.iter().all(|v| *v == 0.0) {
                continue;
            }
            let contrib = powers[step - 1 - j].mul_vec(&uj);
            conv = add(&conv, &contrib);
        }
        let gap = Norm::LInf.of(&crate::linalg::sub(&conv, state));
        let scale = 1.0 + Norm::LInf.of(state);
        if !(gap <= CONVOLUTION_AGREEMENT * scale) {
            return Err(Error::CrossCheck(format!(
                "recurrence and convolution disagree at step {step} by {gap:e}"
            )));
        }
    }
    let norms = states.iter().map(|s| norm.of(s)).collect();
    Ok(Trajectory { states, norms, norm })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IssEstimate {
    #[serde(rename = "M")]
    pub m: f64,
    pub a: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub tail_bound: f64,
    /// Number of powers summed explicitly.
    pub powers: usize,
    pub norm: Norm,
}

const ISS_TAIL_REL: f64 = 1e-12;
const ISS_MAX_POWERS: usize = 1_000_000;

pub fn iss_constants(op: &OperatorSpec, norm: Norm) -> Result<IssEstimate> {
    let est = spectral_radius(op);
    if est.upper >= 1.0 {
        return Err(Error::NotIss { upper: est.upper });
    }
    let a = (est.upper + 1.0) / 2.0;
    let t = op.to_matrix();
    let mut p = Matrix::identity(op.dim());
    let mut partial = p.induced_norm(norm);
    let mut m = partial;
    let mut ak = 1.0_f64;
    let mut k = 0;
    loop {
        p = p.mul(&t);
        k += 1;
        ak *= a;
        let size = p.induced_norm(norm);
        partial += size;
        let ratio = if ak > 0.0 { size / ak } else { 0.0 };
        let falling = ratio < m;
        m = m.max(ratio);
        let tail = m * ak * a / (1.0 - a);
        if (falling && tail < ISS_TAIL_REL * partial) || size == 0.0 && p.is_zero() {
            let tail = if p.is_zero() { 0.0 } else { tail };
            return Ok(IssEstimate {
                m,
                a,
                c: partial + tail,
                tail_bound: tail,
                powers: k,
                norm,
            });
        }
        if k >= ISS_MAX_POWERS || !partial.is_finite() {
            return Err(Error::Divergent(format!("ISS power sum not settled after {k} powers")));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IssVerification {
    pub passed: bool,
    pub trials: usize,
    /// Smallest `bound − ‖x(k)‖` seen; negative means a violation.
    pub worst_slack: f64,
}

pub const ISS_HORIZON: usize = 100;
const ISS_SLACK: f64 = 1e-8;

pub fn verify_iss_bound(op: &OperatorSpec, est: &IssEstimate, trials: usize, seed: u64) -> Result<IssVerification> {
    let n = op.dim();
    let mut rng = sampling::stream(seed, "iss-bound");
    let mut worst = f64::INFINITY;
    for trial in 0..trials {
        // first trial is the tight constant-input case from rest
        let x0 = if trial == 0 { vec![0.0; n] } else { sampling::signed_vec(&mut rng, n) };
        let amp: f64 = if trial == 0 { 1.0 } else { rand::Rng::random(&mut rng) };
        let values: Vec<Vec<f64>> = (0..ISS_HORIZON)
            .map(|_| {
                if trial == 0 {
                    vec![1.0; n]
                } else {
                    sampling::signed_vec(&mut rng, n).iter().map(|v| v * amp).collect()
                }
            })
            .collect();
        let u = InputSignal::new(SignalClass::LInf, None, values)?;
        let traj = simulate(op, &x0, &u, ISS_HORIZON, est.norm)?;
        let unorm = u.sup_norm(est.norm);
        let x0n = est.norm.of(&x0);
        let mut ak = 1.0;
        for nk in &traj.norms {
            let bound = est.m * ak * x0n + est.c * unorm;
            worst = worst.min(bound - nk);
            ak *= est.a;
        }
    }
    Ok(IssVerification {
        passed: worst >= -ISS_SLACK,
        trials,
        worst_slack: worst,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ResponseMode {
    Lp { p: f64 },
    #[serde(rename = "linf")]
    LInf,
    C0,
    Ag { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum ResponseClass {
    Summable { total: f64 },
    NotSummable { partial: f64 },
    Bounded { sup: f64 },
    Unbounded { sup: f64 },
    Vanishing { tail_max: f64 },
    NotVanishing { tail_max: f64 },
    GainAttained { t_eps: usize, bound: f64 },
    GainNotAttained { bound: f64 },
}

impl ResponseClass {
    /// The class the input-response theorem predicts for a stable system.
    pub fn is_good(&self) -> bool {
        matches!(
            self,
            ResponseClass::Summable { .. }
                | ResponseClass::Bounded { .. }
                | ResponseClass::Vanishing { .. }
                | ResponseClass::GainAttained { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseReport {
    pub mode: ResponseMode,
    pub horizon: usize,
    /// Started from rest.
    pub from_rest: ResponseClass,
    /// Started from one random initial state.
    pub with_initial: ResponseClass,
}

/// Block-ratio threshold below which a dyadic sequence is read as decaying.
pub const BLOCK_RATIO: f64 = 0.9;
/// Growth ratio at or above which a sup is read as unbounded.
pub const GROWTH_RATIO: f64 = 1.5;
pub const DEFAULT_RESPONSE_HORIZON: usize = 1024;

fn dyadic_blocks(values: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut lo = 1;
    // complete blocks only, so the last one is never a stub
    while 2 * lo <= values.len() {
        let hi = 2 * lo;
        out.push(f(&values[lo..hi]));
        lo = hi;
    }
    out
}

fn classify(mode: ResponseMode, norms: &[f64], ag_bound: f64) -> ResponseClass {
    let max = |s: &[f64]| s.iter().copied().fold(0.0, f64::max);
    let tiny = 1e-300;
    match mode {
        ResponseMode::Lp { p } => {
            let powered: Vec<f64> = norms.iter().map(|v| v.powf(p)).collect();
            let blocks = dyadic_blocks(&powered, |s| s.iter().sum());
            let total: f64 = powered.iter().sum();
            let decaying = match blocks.as_slice() {
                [.., prev, last] => *last <= tiny || (*prev > 0.0 && last / prev < BLOCK_RATIO),
                _ => true,
            };
            if decaying {
                ResponseClass::Summable { total }
            } else {
                ResponseClass::NotSummable { partial: total }
            }
        }
        ResponseMode::LInf => {
            let sup = max(norms);
            let half = norms.len() / 2;
            let early = max(&norms[..half.max(1)]);
            let late = max(&norms[half..]);
            if late > tiny && late >= GROWTH_RATIO * early.max(tiny) {
                ResponseClass::Unbounded { sup }
            } else {
                ResponseClass::Bounded { sup }
            }
        }
        ResponseMode::C0 => {
            let blocks = dyadic_blocks(norms, max);
            let tail_max = blocks.last().copied().unwrap_or(0.0);
            let vanishing = match blocks.as_slice() {
                [.., prev, last] => *last <= tiny || (*prev > 0.0 && last / prev < BLOCK_RATIO),
                _ => true,
            };
            if vanishing {
                ResponseClass::Vanishing { tail_max }
            } else {
                ResponseClass::NotVanishing { tail_max }
            }
        }
        ResponseMode::Ag { epsilon } => {
            let bound = epsilon + ag_bound;
            // last index that still exceeds the bound
            match norms.iter().rposition(|v| *v > bound) {
                None => ResponseClass::GainAttained { t_eps: 0, bound },
                Some(i) if i + 1 < norms.len() * 3 / 4 => ResponseClass::GainAttained { t_eps: i + 1, bound },
                Some(_) => ResponseClass::GainNotAttained { bound },
            }
        }
    }
}

pub fn response_class_check(
    op: &OperatorSpec,
    u: &InputSignal,
    mode: ResponseMode,
    norm: Norm,
    horizon: usize,
    seed: u64,
) -> Result<ResponseReport> {
    let n = op.dim();
    u.check_state_dim(n)?;
    let ag_bound = match mode {
        ResponseMode::Ag { .. } => {
            let est = iss_constants(op, norm)?;
            est.c * u.sup_norm(norm)
        }
        _ => 0.0,
    };
    let rest = simulate(op, &vec![0.0; n], u, horizon, norm)?;
    let mut rng = sampling::stream(seed, "response-initial");
    let x0 = sampling::signed_vec(&mut rng, n);
    let init = simulate(op, &x0, u, horizon, norm)?;
    Ok(ResponseReport {
        mode,
        horizon,
        from_rest: classify(mode, &rest.norms, ag_bound),
        with_initial: classify(mode, &init.norms, ag_bound),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatkoClass {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatkoResult {
    pub classification: DatkoClass,
    pub p: f64,
    pub horizon: usize,
    /// `(j, S_j)` at `j = 0` and dyadic `j`, plus the horizon.
    pub partial_sums: Vec<(usize, f64)>,
    /// Share of the total carried by the last dyadic block.
    pub last_block_share: f64,
}

/// Share of the sum the last dyadic block may carry for convergence.
pub const DATKO_BLOCK_SHARE: f64 = 0.1;

pub fn datko_test(op: &OperatorSpec, x: &[f64], p: f64, horizon: usize, norm: Norm) -> Result<DatkoResult> {
    Error::check_dim(op.dim(), x.len())?;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("p must be >= 1, got {p}")));
    }
    let horizon = horizon.max(2);
    // track direction and log-scale so fast growth cannot overflow
    let mut v = x.to_vec();
    let mut log_scale = 0.0_f64;
    let mut log_terms = Vec::with_capacity(horizon + 1);
    for k in 0..=horizon {
        let nv = norm.of(&v);
        log_terms.push(if nv > 0.0 { p * (nv.ln() + log_scale) } else { f64::NEG_INFINITY });
        if k < horizon {
            v = op.apply(&v)?;
            let s = norm.of(&v);
            if s > 0.0 {
                v.iter_mut().for_each(|e| *e /= s);
                log_scale += s.ln();
            }
        }
    }
    let terms: Vec<f64> = log_terms.iter().map(|l| l.exp()).collect();
    let mut partial_sums = Vec::new();
    let mut sum = 0.0;
    let mut next_mark = 1;
    for (k, t) in terms.iter().enumerate() {
        sum += t;
        if k == 0 || k == next_mark || k == horizon {
            partial_sums.push((k, sum));
        }
        if k == next_mark {
            next_mark *= 2;
        }
    }
    let start = horizon / 2;
    let block: f64 = terms[start + 1..].iter().sum();
    let share = if sum > 0.0 { block / sum } else { 0.0 };
    let last_block = &log_terms[start..];
    let nondecreasing = last_block.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let decreasing_trend = log_terms[horizon] < log_terms[start] || terms[horizon] == 0.0;
    let classification = if sum == 0.0 || (share < DATKO_BLOCK_SHARE && decreasing_trend) {
        DatkoClass::Convergent
    } else if nondecreasing && terms[horizon] > 0.0 {
        DatkoClass::Divergent
    } else {
        DatkoClass::Inconclusive
    };
    Ok(DatkoResult {
        classification,
        p,
        horizon,
        partial_sums,
        last_block_share: share,
    })
}

/// A horizon long enough for `‖T^k‖` to fall by `10^{-12}` at the rate of
/// the spectral bracket, clamped to a workable range.
pub fn decay_horizon(upper: f64) -> usize {
    if upper >= 1.0 {
        return 256;
    }
    if upper <= 0.0 {
        return 64;
    }
    let k = 2.0 * (1e-12_f64).ln() / upper.ln();
    (k.ceil() as usize).clamp(64, 200_000)
}
