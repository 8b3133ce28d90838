//! Lindblad dynamics through column-stacking vectorization.

use crate::error::{Error, Result};
use crate::linalg::{eigh, expm, identity, kron, real, spectral_norm, CMat, CVec, C64, I};

/// Column-stacking vec: [[a, b], [c, d]] → (a, c, b, d).
pub fn vectorize(m: &CMat) -> Result<CVec> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("cannot vectorize a {:?} matrix", m.shape())));
    }
    Ok(CVec::from_column_slice(m.as_slice()))
}

pub fn devectorize(v: &CVec, d: usize) -> Result<CMat> {
    if v.len() != d * d {
        return Err(Error::Dimension(format!("vector of length {} is not {d}x{d}", v.len())));
    }
    Ok(CMat::from_column_slice(d, d, v.as_slice()))
}

/// Hamiltonian with dephasing rate Γ on n̂ and heating rate γ on b, b†.
#[derive(Debug, Clone)]
pub struct LindbladSpec {
    pub h: CMat,
    pub dephasing: f64,
    pub heating: f64,
    pub b: CMat,
    pub n: CMat,
}

impl LindbladSpec {
    /// Uses n̂ = b†b.
    pub fn new(h: CMat, dephasing: f64, heating: f64, b: CMat) -> Result<Self> {
        let n = b.adjoint() * &b;
        Self::with_number(h, dephasing, heating, b, n)
    }

    pub fn with_number(h: CMat, dephasing: f64, heating: f64, b: CMat, n: CMat) -> Result<Self> {
        if dephasing < 0.0 || heating < 0.0 {
            return Err(Error::Parameter("rates must be non-negative".into()));
        }
        let d = h.nrows();
        for (name, m) in [("H", &h), ("b", &b), ("n", &n)] {
            if m.shape() != (d, d) {
                return Err(Error::Dimension(format!("{name} is {:?}, expected {d}x{d}", m.shape())));
            }
        }
        Ok(LindbladSpec {
            h,
            dephasing,
            heating,
            b,
            n,
        })
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }
}

#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub matrix: CMat,
    pub dim: usize,
}

/// Coherent, dephasing and heating generator pieces, summing to the full Liouvillian.
pub fn liouvillian_terms(spec: &LindbladSpec) -> [CMat; 3] {
    let d = spec.dim();
    let id = identity(d);
    let h = &spec.h;
    let coherent = kron(&id, h) * (-I) + kron(&h.transpose(), &id) * I;
    let n = &spec.n;
    let nn = n * n;
    let deph = (kron(&n.transpose(), n) * real(2.0) - kron(&id, &nn) - kron(&nn.transpose(), &id))
        * real(spec.dephasing);
    let b = &spec.b;
    let bd = b.adjoint();
    let bbd = b * &bd;
    let heat = (kron(&b.conjugate(), b) * real(2.0)
        - kron(&id, &bbd)
        - kron(&(b.conjugate() * b.transpose()), &id)
        + kron(&b.transpose(), &bd) * real(2.0)
        - kron(&id, n)
        - kron(&n.transpose(), &id))
        * real(spec.heating);
    [coherent, deph, heat]
}

pub fn build_liouvillian(spec: &LindbladSpec) -> Liouvillian {
    let [a, b, c] = liouvillian_terms(spec);
    Liouvillian {
        matrix: a + b + c,
        dim: spec.dim(),
    }
}

fn validate_density(rho: &CMat, d: usize) -> Result<()> {
    if rho.shape() != (d, d) {
        return Err(Error::Dimension(format!("ρ is {:?}, expected {d}x{d}", rho.shape())));
    }
    crate::linalg::require_hermitian(rho, 1e-10)?;
    let tr = rho.trace();
    if (tr - real(1.0)).norm() > 1e-10 {
        return Err(Error::Domain(format!("trace of ρ is {tr}")));
    }
    let (vals, _) = eigh(rho);
    if vals[0] < -1e-10 {
        return Err(Error::NotPositiveSemidefinite(vals[0]));
    }
    Ok(())
}

/// RK4 on vec(ρ) with ρ ← (ρ+ρ†)/2 after each step; `observe(time, ρ)` is called at every `every`-th step.
pub fn propagate_lindblad_with<F>(
    l: &Liouvillian,
    rho0: &CMat,
    t: f64,
    dt: f64,
    every: usize,
    mut observe: F,
) -> Result<CMat>
where
    F: FnMut(f64, &CMat),
{
    if !(dt > 0.0) {
        return Err(Error::Parameter("time step must be positive".into()));
    }
    if t < 0.0 {
        return Err(Error::Parameter("time must be non-negative".into()));
    }
    validate_density(rho0, l.dim)?;
    let steps = (t / dt).round().max(if t > 0.0 { 1.0 } else { 0.0 }) as usize;
    let h = if steps > 0 { t / steps as f64 } else { 0.0 };
    let every = every.max(1);
    let mut rho = rho0.clone();
    observe(0.0, &rho);
    let m = &l.matrix;
    for k in 1..=steps {
        let v = vectorize(&rho)?;
        let k1 = m * &v;
        let k2 = m * (&v + &k1 * real(h / 2.0));
        let k3 = m * (&v + &k2 * real(h / 2.0));
        let k4 = m * (&v + &k3 * real(h));
        let next = v + (k1 + k2 * real(2.0) + k3 * real(2.0) + k4) * real(h / 6.0);
        let r = devectorize(&next, l.dim)?;
        rho = (&r + r.adjoint()) * real(0.5);
        if k % every == 0 || k == steps {
            observe(k as f64 * h, &rho);
        }
    }
    Ok(rho)
}

pub fn propagate_lindblad(l: &Liouvillian, rho0: &CMat, t: f64, dt: f64) -> Result<CMat> {
    propagate_lindblad_with(l, rho0, t, dt, usize::MAX, |_, _| {})
}

/// Order 1: ∏ e^{L_j Δt}. Order 2: half steps forward then backward.
pub fn liouvillian_trotter_step(terms: &[CMat], dt: f64, order: u8) -> Result<CMat> {
    let first = terms
        .first()
        .ok_or_else(|| Error::Parameter("empty generator list".into()))?;
    let d = first.nrows();
    let mut u = identity(d);
    match order {
        1 => {
            for l in terms {
                u = expm(&(l * real(dt))) * u;
            }
        }
        2 => {
            let halves: Vec<CMat> = terms.iter().map(|l| expm(&(l * real(dt / 2.0)))).collect();
            for e in &halves {
                u = e * u;
            }
            for e in halves.iter().rev() {
                u = e * u;
            }
        }
        _ => return Err(Error::Parameter(format!("order {order} not in {{1, 2}}"))),
    }
    Ok(u)
}

/// e^{Lt} = A + B with A Hermitian and B anti-Hermitian, each approximated by two unitaries.
#[derive(Debug, Clone)]
pub struct LcuSplit {
    pub propagator: CMat,
    pub a: CMat,
    pub b: CMat,
    /// e^{−iεA}, e^{iεA}, e^{εB}, e^{−εB}
    pub unitaries: [CMat; 4],
    /// i/2ε, −i/2ε, 1/2ε, −1/2ε
    pub coefficients: [C64; 4],
    /// ‖Σ c_i U_i − e^{Lt}‖
    pub residual: f64,
}

pub fn lcu_split(l: &CMat, t: f64, eps: f64) -> Result<LcuSplit> {
    if t < 0.0 {
        return Err(Error::Parameter("time must be non-negative".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Parameter("ε must be positive".into()));
    }
    if !l.is_square() {
        return Err(Error::Dimension("generator must be square".into()));
    }
    let e = expm(&(l * real(t)));
    let a = (&e + e.adjoint()) * real(0.5);
    let b = (&e - e.adjoint()) * real(0.5);
    let unitaries = [
        expm(&(&a * (-I * eps))),
        expm(&(&a * (I * eps))),
        expm(&(&b * real(eps))),
        expm(&(&b * real(-eps))),
    ];
    let k = 1.0 / (2.0 * eps);
    let coefficients = [I * k, -I * k, real(k), real(-k)];
    let mut recon = CMat::zeros(e.nrows(), e.ncols());
    for (u, c) in unitaries.iter().zip(coefficients) {
        recon += u * c;
    }
    let residual = spectral_norm(&(recon - &e));
    Ok(LcuSplit {
        propagator: e,
        a,
        b,
        unitaries,
        coefficients,
        residual,
    })
}

/// Tr(ρ²).
pub fn purity(rho: &CMat) -> f64 {
    (rho * rho).trace().re
}
