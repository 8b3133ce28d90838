//! Wegner flow, two-site Bogoliubov rotations and the XY-chain quasiparticle spectrum.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{commutator, eigh, real, require_hermitian, spectral_norm, CMat, C64};

/// G_ij = h_ij (d_i − d_j), i.e. [diag(H), H].
pub fn wegner_generator(h: &CMat) -> Result<CMat> {
    require_hermitian(h, 1e-10)?;
    Ok(generator_unchecked(h))
}

fn generator_unchecked(h: &CMat) -> CMat {
    let n = h.nrows();
    CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(0.0, 0.0)
        } else {
            h[(i, j)] * (h[(i, i)].re - h[(j, j)].re)
        }
    })
}

/// ∂H/∂s = [G, H].
pub fn wegner_rhs(h: &CMat) -> CMat {
    commutator(&generator_unchecked(h), h)
}

/// d/ds Σ d_i² = 2 Σ_{i,k} |h_ik|² (d_i − d_k)².
pub fn diagonal_growth_rate(h: &CMat) -> f64 {
    let n = h.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            if i != k {
                acc += h[(i, k)].norm_sqr() * (h[(i, i)].re - h[(k, k)].re).powi(2);
            }
        }
    }
    2.0 * acc
}

pub fn off_diagonal_norm(h: &CMat) -> f64 {
    let n = h.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += h[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowState {
    pub s: f64,
    #[serde(skip)]
    pub h: CMat,
    pub diagonal: Vec<f64>,
    pub off_diagonal_norm: f64,
    pub trace: f64,
    pub trace_sq: f64,
}

impl FlowState {
    fn new(s: f64, h: &CMat) -> Self {
        FlowState {
            s,
            h: h.clone(),
            diagonal: (0..h.nrows()).map(|i| h[(i, i)].re).collect(),
            off_diagonal_norm: off_diagonal_norm(h),
            trace: h.trace().re,
            trace_sq: (h * h).trace().re,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WegnerTrajectory {
    pub ds: f64,
    pub samples: Vec<FlowState>,
    pub steps: usize,
    pub converged: bool,
    /// Off-diagonal Frobenius threshold, 1e-6·‖H0‖_F.
    pub threshold: f64,
    /// Pairs with d_i ≈ d_k and h_ik still above threshold at the end.
    pub stalled: Vec<(usize, usize)>,
    pub max_trace_sq_drift: f64,
}

impl WegnerTrajectory {
    pub fn last(&self) -> &FlowState {
        self.samples.last().expect("trajectory holds the initial state")
    }

    pub fn sorted_diagonal(&self) -> Vec<f64> {
        let mut d = self.last().diagonal.clone();
        d.sort_by(f64::total_cmp);
        d
    }
}

/// 0.01 / ‖H0‖₂².
pub fn default_ds(h0: &CMat) -> f64 {
    let n = spectral_norm(h0);
    if n > 0.0 {
        0.01 / (n * n)
    } else {
        0.01
    }
}

pub const DEFAULT_MAX_SAMPLES: usize = 2000;

pub fn wegner_flow(h0: &CMat, ds: f64, s_max: f64) -> Result<WegnerTrajectory> {
    wegner_flow_sampled(h0, ds, s_max, DEFAULT_MAX_SAMPLES)
}

/// RK4 on ∂H/∂s = [G, H]; stops early once the off-diagonal norm reaches threshold.
pub fn wegner_flow_sampled(h0: &CMat, ds: f64, s_max: f64, max_samples: usize) -> Result<WegnerTrajectory> {
    require_hermitian(h0, 1e-10)?;
    if !(ds > 0.0) || !ds.is_finite() {
        return Err(Error::Parameter(format!("step ds = {ds} must be positive")));
    }
    if !(s_max >= 0.0) {
        return Err(Error::Parameter(format!("s_max = {s_max} must be non-negative")));
    }
    let frob = h0.norm();
    let threshold = 1e-6 * frob;
    let total = (s_max / ds).ceil() as usize;
    let stride = (total / max_samples.max(1)).max(1);
    let trace_sq0 = (h0 * h0).trace().re;
    let growth_tol = 1e-12 * frob.max(1e-300);

    let mut h = h0.clone();
    let mut samples = vec![FlowState::new(0.0, &h)];
    let mut off = off_diagonal_norm(&h);
    let mut converged = off <= threshold;
    let mut max_drift: f64 = 0.0;
    let mut steps = 0;
    let half = real(0.5 * ds);
    let full = real(ds);
    let sixth = real(ds / 6.0);
    while !converged && steps < total {
        let k1 = wegner_rhs(&h);
        let k2 = wegner_rhs(&(&h + &k1 * half));
        let k3 = wegner_rhs(&(&h + &k2 * half));
        let k4 = wegner_rhs(&(&h + &k3 * full));
        let next = &h + (k1 + k2 * real(2.0) + k3 * real(2.0) + k4) * sixth;
        // the exact flow is Hermitian; remove round-off skew
        h = (&next + next.adjoint()) * real(0.5);
        steps += 1;
        let s = steps as f64 * ds;
        let new_off = off_diagonal_norm(&h);
        if !new_off.is_finite() || new_off > off + growth_tol {
            return Err(Error::StepInstability(format!(
                "off-diagonal norm grew from {off:e} to {new_off:e} at s = {s}; reduce ds below {ds:e}"
            )));
        }
        off = new_off;
        let drift = ((&h * &h).trace().re - trace_sq0).abs();
        max_drift = max_drift.max(drift);
        converged = off <= threshold;
        if converged || steps % stride == 0 || steps == total {
            samples.push(FlowState::new(s, &h));
        }
    }
    let n = h.nrows();
    let mut stalled = Vec::new();
    if !converged {
        let scale = frob.max(1e-300);
        for i in 0..n {
            for k in i + 1..n {
                let gap = (h[(i, i)].re - h[(k, k)].re).abs();
                if gap <= 1e-8 * scale && h[(i, k)].norm() > threshold / (n as f64) {
                    stalled.push((i, k));
                }
            }
        }
    }
    Ok(WegnerTrajectory {
        ds,
        samples,
        steps,
        converged,
        threshold,
        stalled,
        max_trace_sq_drift: max_drift,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Statistics {
    Fermionic,
    Bosonic,
}

#[derive(Debug, Clone, Serialize)]
pub struct BogoliubovSolution {
    pub statistics: Statistics,
    pub epsilon: f64,
    pub lambda: f64,
    pub theta: f64,
    pub u: f64,
    pub v: f64,
    /// √(ε²+λ²) or √(ε²−λ²).
    pub epsilon_tilde: f64,
    /// Diagonal of UᵀHU on the particle rows: sign(ε)·ε̃.
    pub diagonal: f64,
    /// max |UᵀHU − diag(diagonal, ∓diagonal, …)|.
    pub residual: f64,
}

impl BogoliubovSolution {
    pub fn block(&self) -> CMat {
        bogoliubov_block(self.epsilon, self.lambda, self.statistics)
    }

    /// U_f = [[u, v], [−v, u]] ⊕ [[u, −v], [v, u]] or U_b = [[u, v], [v, u]] ⊕ [[u, v], [v, u]].
    pub fn transform(&self) -> CMat {
        let (u, v) = (self.u, self.v);
        let m = match self.statistics {
            Statistics::Fermionic => [
                [u, v, 0.0, 0.0],
                [-v, u, 0.0, 0.0],
                [0.0, 0.0, u, -v],
                [0.0, 0.0, v, u],
            ],
            Statistics::Bosonic => [
                [u, v, 0.0, 0.0],
                [v, u, 0.0, 0.0],
                [0.0, 0.0, u, v],
                [0.0, 0.0, v, u],
            ],
        };
        CMat::from_fn(4, 4, |i, j| real(m[i][j]))
    }

    /// Target of UᵀHU.
    pub fn diagonal_form(&self) -> CMat {
        let d = self.diagonal;
        let entries = match self.statistics {
            Statistics::Fermionic => [d, -d, d, -d],
            Statistics::Bosonic => [d; 4],
        };
        CMat::from_fn(4, 4, |i, j| if i == j { real(entries[i]) } else { real(0.0) })
    }

    /// Many-body spectrum in quasiparticle numbers: D(n₁+n₂) + ε − D or D(n₁+n₂+1) − ε.
    pub fn quasiparticle_energy(&self, n1: usize, n2: usize) -> f64 {
        let n = (n1 + n2) as f64;
        match self.statistics {
            Statistics::Fermionic => self.diagonal * n + self.epsilon - self.diagonal,
            Statistics::Bosonic => self.diagonal * (n + 1.0) - self.epsilon,
        }
    }
}

/// Nambu matrix over (c₁, c₂†, c₂, c₁†) for ε(n₁+n₂) + λ(c₁†c₂† + c₂c₁).
pub fn bogoliubov_block(epsilon: f64, lambda: f64, statistics: Statistics) -> CMat {
    let (e, l) = (epsilon, lambda);
    let m = match statistics {
        Statistics::Fermionic => [
            [e, l, 0.0, 0.0],
            [l, -e, 0.0, 0.0],
            [0.0, 0.0, e, -l],
            [0.0, 0.0, -l, -e],
        ],
        Statistics::Bosonic => [
            [e, l, 0.0, 0.0],
            [l, e, 0.0, 0.0],
            [0.0, 0.0, e, l],
            [0.0, 0.0, l, e],
        ],
    };
    CMat::from_fn(4, 4, |i, j| real(m[i][j]))
}

pub fn bogoliubov_2site(epsilon: f64, lambda: f64, statistics: Statistics) -> Result<BogoliubovSolution> {
    if !epsilon.is_finite() || !lambda.is_finite() {
        return Err(Error::Parameter("ε and λ must be finite".into()));
    }
    let sign = if epsilon < 0.0 { -1.0 } else { 1.0 };
    let (theta, u, v, epsilon_tilde) = match statistics {
        Statistics::Fermionic => {
            if epsilon == 0.0 && lambda == 0.0 {
                return Err(Error::Parameter("ε and λ both vanish".into()));
            }
            // tan 2θ = −λ/ε on the principal branch
            let theta = if epsilon != 0.0 {
                0.5 * (-lambda / epsilon).atan()
            } else {
                -std::f64::consts::FRAC_PI_4 * lambda.signum()
            };
            (theta, theta.cos(), theta.sin(), epsilon.hypot(lambda))
        }
        Statistics::Bosonic => {
            if epsilon.abs() <= lambda.abs() {
                return Err(Error::Domain(format!(
                    "|ε| = {} ≤ |λ| = {}: unstable equilibrium, no bosonic Bogoliubov rotation",
                    epsilon.abs(),
                    lambda.abs()
                )));
            }
            // tanh 2θ = −λ/ε
            let theta = 0.5 * (-lambda / epsilon).atanh();
            (
                theta,
                theta.cosh(),
                theta.sinh(),
                ((epsilon - lambda) * (epsilon + lambda)).sqrt(),
            )
        }
    };
    let mut sol = BogoliubovSolution {
        statistics,
        epsilon,
        lambda,
        theta,
        u,
        v,
        epsilon_tilde,
        diagonal: sign * epsilon_tilde,
        residual: 0.0,
    };
    let u4 = sol.transform();
    let conj = u4.transpose() * sol.block() * &u4;
    sol.residual = crate::linalg::max_abs(&(conj - sol.diagonal_form()));
    Ok(sol)
}

#[derive(Debug, Clone, Serialize)]
pub struct XySpectrum {
    pub n: usize,
    pub j: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// Integer momenta k; the physical momentum is k·a with a = 2π/N.
    pub k: Vec<i64>,
    pub epsilon_k: Vec<f64>,
    pub delta_k: Vec<f64>,
    pub energy_k: Vec<f64>,
    /// max deviation between {±2|J|E_k} and the BdG eigenvalues.
    pub bdg_deviation: f64,
}

/// −(N−1)/2 … (N−1)/2 for odd N, −N/2 … N/2 − 1 for even N.
pub fn xy_k_grid(n: usize) -> Vec<i64> {
    let n = n as i64;
    if n % 2 == 1 {
        (-(n - 1) / 2..=(n - 1) / 2).collect()
    } else {
        (-n / 2..n / 2).collect()
    }
}

/// BdG matrix over (f₁…f_N, f₁†…f_N†) of the periodic fermionic XY chain.
pub fn xy_bdg_matrix(n: usize, j: f64, gamma: f64, lambda: f64) -> CMat {
    let mut a = CMat::zeros(n, n);
    let mut b = CMat::zeros(n, n);
    for s in 0..n {
        a[(s, s)] += real(2.0 * j * lambda);
        let t = (s + 1) % n;
        a[(s, t)] += real(-j);
        a[(t, s)] += real(-j);
        b[(s, t)] += real(-j * gamma);
        b[(t, s)] += real(j * gamma);
    }
    let mut h = CMat::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&a);
    h.view_mut((0, n), (n, n)).copy_from(&b);
    h.view_mut((n, 0), (n, n)).copy_from(&(-b.conjugate()));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.conjugate()));
    h
}

pub fn xy_spectrum(n: usize, j: f64, gamma: f64, lambda: f64) -> Result<XySpectrum> {
    if n < 2 {
        return Err(Error::Parameter(format!("chain length {n} must be at least 2")));
    }
    let a = 2.0 * std::f64::consts::PI / n as f64;
    let k = xy_k_grid(n);
    let epsilon_k: Vec<f64> = k.iter().map(|&k| lambda - (k as f64 * a).cos()).collect();
    let delta_k: Vec<f64> = k.iter().map(|&k| gamma * (k as f64 * a).sin()).collect();
    let energy_k: Vec<f64> = epsilon_k.iter().zip(&delta_k).map(|(e, d)| e.hypot(*d)).collect();

    let (vals, _) = eigh(&xy_bdg_matrix(n, j, gamma, lambda));
    let mut want: Vec<f64> = energy_k
        .iter()
        .flat_map(|e| [2.0 * j.abs() * e, -2.0 * j.abs() * e])
        .collect();
    want.sort_by(f64::total_cmp);
    let bdg_deviation = want
        .iter()
        .zip(vals.iter())
        .map(|(w, v)| (w - v).abs())
        .fold(0.0, f64::max);
    Ok(XySpectrum {
        n,
        j,
        gamma,
        lambda,
        k,
        epsilon_k,
        delta_k,
        energy_k,
        bdg_deviation,
    })
}
