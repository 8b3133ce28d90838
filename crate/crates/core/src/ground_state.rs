//! Exact diagonalization and the PDS(K) moment functional.

use nalgebra::{DMatrix, DVector};

use crate::encodings::{RegisterKind, RegisterLayout};
use crate::error::{Error, Result};
use crate::linalg::{eigh, require_hermitian, CMat, CVec, C64, ONE};

/// Condition number above which the moment matrix is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

pub fn exact_diagonalize(h: &CMat) -> Result<(DVector<f64>, CMat)> {
    require_hermitian(h, 1e-10)?;
    Ok(eigh(h))
}

/// ⟨φ|H^n|φ⟩ for n = 0..=max_power by repeated matrix-vector products.
pub fn moments(h: &CMat, phi: &CVec, max_power: usize) -> Result<Vec<f64>> {
    if h.nrows() != phi.len() || !h.is_square() {
        return Err(Error::Dimension(format!(
            "state of length {} for a {:?} matrix",
            phi.len(),
            h.shape()
        )));
    }
    if (phi.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::Parameter(format!("trial state has norm {}", phi.norm())));
    }
    let mut out = Vec::with_capacity(max_power + 1);
    let mut v = phi.clone();
    out.push(1.0);
    for _ in 0..max_power {
        v = h * v;
        out.push(phi.dotc(&v).re);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct PdsResult {
    pub k: usize,
    pub moments: Vec<f64>,
    pub m: DMatrix<f64>,
    pub y: DVector<f64>,
    pub x: DVector<f64>,
    /// Roots of P_K sorted by real part.
    pub roots: Vec<C64>,
    pub condition: f64,
}

impl PdsResult {
    pub fn lowest_root(&self) -> f64 {
        self.roots[0].re
    }

    /// Coefficients (1, X_1, …, X_K) of P_K rebuilt from the roots.
    pub fn vieta_coefficients(&self) -> Vec<C64> {
        let mut poly = vec![ONE];
        for r in &self.roots {
            let mut next = vec![C64::new(0.0, 0.0); poly.len() + 1];
            for (i, c) in poly.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= c * r;
            }
            poly = next;
        }
        poly
    }
}

/// Solves M X = −Y with M_ij = μ_{2K−i−j}, Y_i = μ_{2K−i} (1-based) and returns the roots of P_K.
pub fn pds(moments: &[f64], k: usize) -> Result<PdsResult> {
    if k < 1 {
        return Err(Error::Parameter("PDS order must be at least 1".into()));
    }
    if moments.len() < 2 * k {
        return Err(Error::Parameter(format!(
            "PDS({k}) needs moments up to power {}, got {}",
            2 * k - 1,
            moments.len().saturating_sub(1)
        )));
    }
    let m = DMatrix::from_fn(k, k, |i, j| moments[2 * k - (i + 1) - (j + 1)]);
    let y = DVector::from_fn(k, |i, _| moments[2 * k - (i + 1)]);
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::DegenerateMoments { k, condition });
    }
    let x = m
        .clone()
        .col_piv_qr()
        .solve(&(-&y))
        .ok_or(Error::DegenerateMoments { k, condition })?;
    let roots = polynomial_roots(x.as_slice());
    Ok(PdsResult {
        k,
        moments: moments[..2 * k].to_vec(),
        m,
        y,
        x,
        roots,
        condition,
    })
}

/// Largest non-degenerate order ≤ `k`, falling back one order at a time.
pub fn pds_with_fallback(moments: &[f64], k: usize) -> Result<PdsResult> {
    let mut last = None;
    for kk in (1..=k).rev() {
        match pds(moments, kk) {
            Ok(r) => return Ok(r),
            Err(e @ Error::DegenerateMoments { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or(Error::Parameter("no PDS order available".into())))
}

/// Roots of ℰ^K + Σ X_i ℰ^{K−i} from the companion matrix, sorted by real part.
fn polynomial_roots(x: &[f64]) -> Vec<C64> {
    let k = x.len();
    let mut comp = DMatrix::<f64>::zeros(k, k);
    for j in 0..k {
        comp[(0, j)] = -x[j];
    }
    for i in 1..k {
        comp[(i, i - 1)] = 1.0;
    }
    let mut roots: Vec<C64> = comp
        .complex_eigenvalues()
        .iter()
        .map(|z| if z.im.abs() <= 1e-8 { C64::new(z.re, 0.0) } else { *z })
        .collect();
    roots.sort_by(|a, b| a.re.total_cmp(&b.re));
    roots
}

/// (|001⟩ + |111⟩)/√2 on the fermions with all bosons empty.
pub fn holstein_trial_state(layout: &RegisterLayout) -> Result<CVec> {
    let regs = layout.registers();
    let ok = regs.len() == 6
        && regs[..3].iter().all(|r| r.kind == RegisterKind::Fermion)
        && regs[3..].iter().all(|r| r.boson.is_some());
    if !ok {
        return Err(Error::Parameter(
            "trial state needs 3 fermion registers followed by 3 boson registers".into(),
        ));
    }
    let mut psi = CVec::zeros(1 << layout.qubit_count());
    let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    psi[layout.qubit_index(&[0, 0, 1, 0, 0, 0])] = amp;
    psi[layout.qubit_index(&[1, 1, 1, 0, 0, 0])] = amp;
    Ok(psi)
}
