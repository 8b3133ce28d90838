//! Truncation bounds for bosonic modes with ‖H_w Π_{[0,Λ]}‖ ≤ χ √(Λ+1).
//!
//! Bound arithmetic is carried in log-space; linear values are reported only
//! when they exceed 1e-300.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::DENSE_FOCK_LIMIT;
use crate::linalg::{expm_multiply_chebyshev, expm_multiply_taylor, CMat, SparseMatrix, C64, ONE, ZERO};

/// ⌈8e²⌉: smallest increment for which the short-time lemma applies.
pub const MIN_DELTA_LAMBDA: usize = 60;

const MAX_DELTA_LAMBDA: usize = 1 << 20;

/// Piecewise-constant segment of a χ(τ) profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSegment {
    pub duration: f64,
    pub chi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationInput {
    pub lambda0: usize,
    pub chi: f64,
    pub t: f64,
    pub epsilon: f64,
    #[serde(default = "one")]
    pub modes: usize,
    #[serde(default)]
    pub profile: Option<Vec<ChiSegment>>,
}

fn one() -> usize {
    1
}

impl TruncationInput {
    pub fn new(lambda0: usize, chi: f64, t: f64, epsilon: f64) -> Self {
        TruncationInput {
            lambda0,
            chi,
            t,
            epsilon,
            modes: 1,
            profile: None,
        }
    }

    pub fn with_modes(mut self, modes: usize) -> Self {
        self.modes = modes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.chi > 0.0) || !self.chi.is_finite() {
            return Err(Error::Parameter(format!("χ must be positive, got {}", self.chi)));
        }
        if !(self.t >= 0.0) || !self.t.is_finite() {
            return Err(Error::Parameter(format!("t must be non-negative, got {}", self.t)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Parameter(format!("ε must be positive, got {}", self.epsilon)));
        }
        if self.modes < 1 {
            return Err(Error::Parameter("need at least one mode".into()));
        }
        if let Some(p) = &self.profile {
            validate_profile(p, self.t)?;
        }
        Ok(())
    }
}

fn validate_profile(p: &[ChiSegment], t: f64) -> Result<()> {
    if p.iter().any(|s| !(s.chi >= 0.0) || !(s.duration >= 0.0)) {
        return Err(Error::Parameter("χ(τ) profile values and durations must be non-negative".into()));
    }
    let total: f64 = p.iter().map(|s| s.duration).sum();
    if (total - t).abs() > 1e-12 * t.max(1.0) {
        return Err(Error::Parameter(format!("profile covers {total}, evolution time is {t}")));
    }
    Ok(())
}

/// Short-time lemma bound (√2 e/√dΛ)^dΛ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeakageBound {
    pub log: f64,
    /// exp(log), or 0 below 1e-300.
    pub value: f64,
}

impl LeakageBound {
    fn from_log(log: f64) -> Self {
        let value = if log >= (1e-300f64).ln() { log.exp() } else { 0.0 };
        LeakageBound { log, value }
    }
}

pub fn short_time_leakage_bound(d_lambda: usize) -> Result<LeakageBound> {
    if d_lambda < MIN_DELTA_LAMBDA {
        return Err(Error::Precondition(format!(
            "Λ′ − Λ = {d_lambda} is below {MIN_DELTA_LAMBDA}; the short-time bound does not apply"
        )));
    }
    let d = d_lambda as f64;
    let base = 0.5 * 2f64.ln() + 1.0 - 0.5 * d.ln();
    Ok(LeakageBound::from_log(d * base))
}

/// Which error budget a schedule was built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    State,
    Hamiltonian,
    Reverse,
}

impl ScheduleKind {
    /// Prefactor on the per-step lemma bound.
    pub fn step_factor(self) -> f64 {
        match self {
            ScheduleKind::Hamiltonian => 2.0,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationPlan {
    pub kind: ScheduleKind,
    pub lambda0: usize,
    pub delta_lambda: usize,
    /// Number of steps actually scheduled.
    pub steps: usize,
    /// ⌈((√Λ0 + χtΔΛ/2)² − Λ0)/ΔΛ⌉, an upper bound on `steps`.
    pub steps_formula: usize,
    /// Δt_1 … Δt_s, summing to t.
    pub durations: Vec<f64>,
    /// Λ_1 … Λ_s.
    pub cutoffs: Vec<usize>,
    pub final_cutoff: usize,
    pub step_bound: LeakageBound,
    pub step_factor: f64,
    /// log of steps · factor · step bound.
    pub log_total_bound: f64,
    pub total_bound: f64,
    pub budget: f64,
}

/// Step caps ∫χ = 1/√Λ_{j−1}, greedily filled until the integral is spent.
fn integral_steps(lambda0: usize, delta: usize, integral: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut remaining = integral;
    let mut lambda = lambda0;
    loop {
        let cap = 1.0 / (lambda.max(1) as f64).sqrt();
        if remaining <= cap {
            out.push(remaining);
            return out;
        }
        out.push(cap);
        remaining -= cap;
        lambda += delta;
    }
}

fn steps_formula(lambda0: usize, delta: usize, integral: f64) -> usize {
    let l0 = lambda0 as f64;
    let d = delta as f64;
    let s = ((l0.sqrt() + integral * d / 2.0).powi(2) - l0) / d;
    (s.ceil() as usize).max(1)
}

/// Time at which the cumulative profile integral first reaches `target`.
fn profile_time(profile: &[ChiSegment], target: f64, t: f64) -> f64 {
    let mut tau = 0.0;
    let mut acc = 0.0;
    for seg in profile {
        let add = seg.chi * seg.duration;
        if seg.chi > 0.0 && acc + add >= target {
            return (tau + (target - acc) / seg.chi).min(t);
        }
        acc += add;
        tau += seg.duration;
    }
    t
}

fn build_plan(
    kind: ScheduleKind,
    lambda0: usize,
    integral: f64,
    budget: f64,
    to_time: &dyn Fn(f64, f64, f64) -> f64,
    t: f64,
) -> Result<TruncationPlan> {
    let factor = kind.step_factor();
    for delta in MIN_DELTA_LAMBDA..MAX_DELTA_LAMBDA {
        let bound = short_time_leakage_bound(delta)?;
        let formula = steps_formula(lambda0, delta, integral);
        // cheap rejection before building the schedule
        if (formula as f64).ln() + factor.ln() + bound.log > budget.ln() + 50.0 {
            continue;
        }
        let caps = integral_steps(lambda0, delta, integral);
        let s = caps.len();
        let log_total = (s as f64).ln() + factor.ln() + bound.log;
        if log_total > budget.ln() {
            continue;
        }
        let mut durations = Vec::with_capacity(s);
        let mut cum = 0.0;
        let mut prev = 0.0;
        for (j, c) in caps.iter().enumerate() {
            cum += c;
            let tau = if j + 1 == s { t } else { to_time(cum, *c, prev) };
            durations.push(tau - prev);
            prev = tau;
        }
        let cutoffs: Vec<usize> = (1..=s).map(|j| lambda0 + j * delta).collect();
        return Ok(TruncationPlan {
            kind,
            lambda0,
            delta_lambda: delta,
            steps: s,
            steps_formula: formula,
            durations,
            final_cutoff: *cutoffs.last().unwrap(),
            cutoffs,
            step_bound: bound,
            step_factor: factor,
            log_total_bound: log_total,
            total_bound: LeakageBound::from_log(log_total).value,
            budget,
        });
    }
    Err(Error::Convergence {
        what: "ΔΛ scan".into(),
        iterations: MAX_DELTA_LAMBDA - MIN_DELTA_LAMBDA,
        residual: budget,
    })
}

/// Total ∫χ and a clock mapping (cumulative integral, step integral, step start) to the step end time.
type Clock<'a> = Box<dyn Fn(f64, f64, f64) -> f64 + 'a>;

fn integral_and_clock(input: &TruncationInput) -> (f64, Clock<'_>) {
    match &input.profile {
        Some(p) => {
            let integral = p.iter().map(|s| s.chi * s.duration).sum();
            (integral, Box::new(move |cum, _, _| profile_time(p, cum, input.t)))
        }
        None => {
            let chi = input.chi;
            (chi * input.t, Box::new(move |_, step, start| start + step / chi))
        }
    }
}

/// Long-time state truncation schedule with the whole ε as budget.
pub fn state_truncation_schedule(input: &TruncationInput) -> Result<TruncationPlan> {
    input.validate()?;
    let (integral, clock) = integral_and_clock(input);
    build_plan(ScheduleKind::State, input.lambda0, integral, input.epsilon, &*clock, input.t)
}

/// Budget split behind a Hamiltonian cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBudget {
    pub epsilon: f64,
    pub modes: usize,
    pub per_mode: f64,
    /// Each of the state, Hamiltonian and reverse-state runs gets per_mode / 3.
    pub per_run: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HamiltonianCutoff {
    /// Λ̃, the largest final cutoff of the three runs.
    pub cutoff: usize,
    pub state: TruncationPlan,
    pub hamiltonian: TruncationPlan,
    pub reverse: TruncationPlan,
    pub budget: ErrorBudget,
}

impl HamiltonianCutoff {
    /// The plan that sets Λ̃, preferring the Hamiltonian run on ties.
    pub fn governing(&self) -> &TruncationPlan {
        let mut best = &self.hamiltonian;
        for p in [&self.state, &self.reverse] {
            if p.final_cutoff > best.final_cutoff {
                best = p;
            }
        }
        best
    }
}

fn cutoff_with(input: &TruncationInput) -> Result<HamiltonianCutoff> {
    input.validate()?;
    let per_mode = input.epsilon / input.modes as f64;
    let per_run = per_mode / 3.0;
    let (integral, clock) = integral_and_clock(input);
    let run = |k| build_plan(k, input.lambda0, integral, per_run, &*clock, input.t);
    let state = run(ScheduleKind::State)?;
    let hamiltonian = run(ScheduleKind::Hamiltonian)?;
    let reverse = run(ScheduleKind::Reverse)?;
    let cutoff = state.final_cutoff.max(hamiltonian.final_cutoff).max(reverse.final_cutoff);
    Ok(HamiltonianCutoff {
        cutoff,
        state,
        hamiltonian,
        reverse,
        budget: ErrorBudget {
            epsilon: input.epsilon,
            modes: input.modes,
            per_mode,
            per_run,
        },
    })
}

/// Λ̃ for a constant χ; any profile on the input is ignored.
pub fn hamiltonian_cutoff(input: &TruncationInput) -> Result<HamiltonianCutoff> {
    let plain = TruncationInput {
        profile: None,
        ..input.clone()
    };
    cutoff_with(&plain)
}

/// Λ̃ with χt replaced by ∫₀ᵗ χ(τ)dτ for the input's piecewise-constant profile.
pub fn time_dependent_cutoff(input: &TruncationInput) -> Result<HamiltonianCutoff> {
    if input.profile.is_none() {
        return Err(Error::Parameter("time-dependent cutoff needs a χ(τ) profile".into()));
    }
    cutoff_with(input)
}

/// Root of a (b/√y)^y = ε on (b², ∞) by log-space bisection.
pub fn lambert_w_threshold(a: f64, b: f64, eps: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && eps > 0.0) {
        return Err(Error::Parameter(format!("need a, b, ε > 0, got {a}, {b}, {eps}")));
    }
    let log_f = |y: f64| a.ln() + y * (b.ln() - 0.5 * y.ln());
    let target = eps.ln();
    let lo0 = b * b;
    if eps >= a {
        return Err(Error::NoRoot(format!("ε = {eps} ≥ f(b²) = {a}")));
    }
    let mut lo = lo0;
    let mut hi = 2.0 * lo0.max(1.0);
    while log_f(hi) > target {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if log_f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn column_evolve(h: &SparseMatrix, col: usize, dt: f64, accurate_tail: bool) -> Vec<C64> {
    let mut e = vec![ZERO; h.n];
    e[col] = ONE;
    if accurate_tail {
        expm_multiply_taylor(h, &e, dt)
    } else {
        expm_multiply_chebyshev(h, &e, dt)
    }
}

fn spectral(m: DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.svd(false, false).singular_values.max()
}

fn check_capacity(h: &SparseMatrix, number: &[usize]) -> Result<()> {
    if number.len() != h.n {
        return Err(Error::Dimension(format!("{} occupation labels for dimension {}", number.len(), h.n)));
    }
    if h.n > DENSE_FOCK_LIMIT {
        return Err(Error::Capacity {
            qubits: (h.n as f64).log2().ceil() as usize,
            limit: 14,
        });
    }
    Ok(())
}

/// ‖Π̄_{[0,Λ′]} e^{−iΔtH} Π_{[0,Λ]}‖ with `number[i]` the boson number of basis state i.
///
/// Columns are propagated with the sub-stepped Taylor series so that
/// amplitudes far below machine epsilon keep their relative accuracy.
pub fn leakage_oracle(h: &SparseMatrix, number: &[usize], lambda: usize, lambda_prime: usize, dt: f64) -> Result<f64> {
    check_capacity(h, number)?;
    if dt == 0.0 {
        return Ok(0.0);
    }
    let cols: Vec<usize> = (0..h.n).filter(|&i| number[i] <= lambda).collect();
    let rows: Vec<usize> = (0..h.n).filter(|&i| number[i] > lambda_prime).collect();
    let evolved: Vec<Vec<C64>> = cols.iter().map(|&c| column_evolve(h, c, dt, true)).collect();
    Ok(spectral(DMatrix::from_fn(rows.len(), cols.len(), |r, c| evolved[c][rows[r]])))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PaddedLeakage {
    pub value: f64,
    pub doubled_pad: f64,
    /// |value − doubled_pad|.
    pub sensitivity: f64,
}

/// Runs the oracle at cutoffs Λ′ + pad and Λ′ + 2·pad; `build(cutoff)` returns H and occupation labels.
pub fn padded_leakage(
    build: &dyn Fn(usize) -> (SparseMatrix, Vec<usize>),
    lambda: usize,
    lambda_prime: usize,
    dt: f64,
    pad: usize,
) -> Result<PaddedLeakage> {
    let (h1, n1) = build(lambda_prime + pad);
    let value = leakage_oracle(&h1, &n1, lambda, lambda_prime, dt)?;
    let (h2, n2) = build(lambda_prime + 2 * pad);
    let doubled_pad = leakage_oracle(&h2, &n2, lambda, lambda_prime, dt)?;
    Ok(PaddedLeakage {
        value,
        doubled_pad,
        sensitivity: (value - doubled_pad).abs(),
    })
}

/// ‖(e^{−itH} − e^{−itH̃}) Π_{[0,Λ0]}‖ with H̃ = Π_{[0,Λ̃]} H Π_{[0,Λ̃]}.
pub fn truncation_error(h: &SparseMatrix, number: &[usize], lambda0: usize, cutoff: usize, t: f64) -> Result<f64> {
    check_capacity(h, number)?;
    let trips = h
        .triplets()
        .into_iter()
        .filter(|&(i, j, _)| number[i] <= cutoff && number[j] <= cutoff)
        .collect();
    let h_trunc = SparseMatrix::from_triplets(h.n, trips);
    let cols: Vec<usize> = (0..h.n).filter(|&i| number[i] <= lambda0).collect();
    let diffs: Vec<Vec<C64>> = cols
        .iter()
        .map(|&c| {
            let a = column_evolve(h, c, t, false);
            let b = column_evolve(&h_trunc, c, t, false);
            a.iter().zip(&b).map(|(x, y)| x - y).collect()
        })
        .collect();
    Ok(spectral(DMatrix::from_fn(h.n, cols.len(), |r, c| diffs[c][r])))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub ok: bool,
    /// max over Λ ≤ Λ_max of ‖H_w Π_{[0,Λ]}‖ / √(Λ+1).
    pub chi_fit: f64,
    /// Log-log slope of ‖H_w Π_{[0,Λ]}‖ against Λ+1 over the upper half of the range.
    pub worst_r: f64,
}

/// Checks the block structure of H_w and H_r with respect to the occupation labels.
pub fn verify_conditions(h_w: &CMat, h_r: &CMat, number: &[usize], lambda_max: usize) -> Result<ConditionReport> {
    let n = number.len();
    if h_w.shape() != (n, n) || h_r.shape() != (n, n) {
        return Err(Error::Dimension("H_w, H_r and occupation labels disagree".into()));
    }
    let scale = crate::linalg::max_abs(h_w).max(crate::linalg::max_abs(h_r)).max(1.0);
    let tol = 1e-12 * scale;
    for i in 0..n {
        for j in 0..n {
            let (li, lj) = (number[i], number[j]);
            if li.abs_diff(lj) > 1 && h_w[(i, j)].norm() > tol {
                return Err(Error::ConditionViolation {
                    lambda: li,
                    lambda_prime: lj,
                    detail: format!("H_w couples levels {li} and {lj}"),
                });
            }
            if li != lj && h_r[(i, j)].norm() > tol {
                return Err(Error::ConditionViolation {
                    lambda: li,
                    lambda_prime: lj,
                    detail: format!("H_r does not commute with Π_{li}"),
                });
            }
        }
    }
    let top = number.iter().copied().max().unwrap_or(0);
    let lambda_max = lambda_max.min(top.saturating_sub(1));
    let norms: Vec<f64> = (0..=lambda_max)
        .map(|lam| {
            let cols: Vec<usize> = (0..n).filter(|&i| number[i] <= lam).collect();
            spectral(DMatrix::from_fn(n, cols.len(), |r, c| h_w[(r, cols[c])]))
        })
        .collect();
    let chi_fit = norms
        .iter()
        .enumerate()
        .map(|(lam, v)| v / ((lam + 1) as f64).sqrt())
        .fold(0.0, f64::max);
    let half = lambda_max / 2;
    let worst_r = if lambda_max > half && norms[half] > 0.0 {
        (norms[lambda_max] / norms[half]).ln() / (((lambda_max + 1) as f64) / ((half + 1) as f64)).ln()
    } else {
        0.0
    };
    Ok(ConditionReport {
        ok: true,
        chi_fit,
        worst_r,
    })
}

/// Least-squares fit √Λ̃ ≈ c₁ + c₂ x with x = t log(N Λ0 χ t/ε), then c₁ raised so
/// that every point lies on or below the line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeFit {
    pub c1: f64,
    pub c2: f64,
    pub r_squared: f64,
}

pub fn envelope_fit(points: &[(f64, usize)], modes: usize, lambda0: usize, chi: f64, eps: f64) -> Result<EnvelopeFit> {
    if points.len() < 2 {
        return Err(Error::Parameter("need at least two points".into()));
    }
    let xs: Vec<f64> = points
        .iter()
        .map(|&(t, _)| t * (modes as f64 * lambda0.max(1) as f64 * chi * t / eps).ln())
        .collect();
    let ys: Vec<f64> = points.iter().map(|&(_, c)| (c as f64).sqrt()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let c2 = sxy / sxx;
    let c1_ls = my - c2 * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - c1_ls - c2 * x).powi(2)).sum();
    let c1 = xs.iter().zip(&ys).map(|(x, y)| y - c2 * x).fold(f64::NEG_INFINITY, f64::max);
    Ok(EnvelopeFit {
        c1,
        c2,
        r_squared: if syy > 0.0 { 1.0 - sse / syy } else { 1.0 },
    })
}
