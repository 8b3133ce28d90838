//! Occupation-number basis oracle, independent of any qubit compilation.
//!
//! Registers are ordered with register 0 most significant in the flat index.

use crate::encodings::{RegisterKind, RegisterLayout};
use crate::error::{Error, Result};
use crate::linalg::{real, CMat, SparseMatrix, C64};

/// Dense Fock matrices are refused above this dimension (2^14).
pub const DENSE_FOCK_LIMIT: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalOp {
    Create,
    Annihilate,
    Number,
    FCreate,
    FAnnihilate,
    SpinX,
    SpinZ,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockSpace {
    dims: Vec<usize>,
    fermionic: Vec<bool>,
}

/// Coefficient times a product of local operators, rightmost applied first.
pub type FockTerm = (C64, Vec<(usize, LocalOp)>);

impl FockSpace {
    pub fn new(dims: Vec<usize>, fermionic: Vec<bool>) -> Result<Self> {
        if dims.len() != fermionic.len() {
            return Err(Error::Dimension("dims and fermion flags differ in length".into()));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Parameter("register dimension must be positive".into()));
        }
        Ok(FockSpace { dims, fermionic })
    }

    pub fn bosonic(dims: Vec<usize>) -> Self {
        let n = dims.len();
        FockSpace {
            dims,
            fermionic: vec![false; n],
        }
    }

    pub fn from_layout(layout: &RegisterLayout) -> Self {
        FockSpace {
            dims: layout.fock_dims(),
            fermionic: layout
                .registers()
                .iter()
                .map(|r| r.kind == RegisterKind::Fermion)
                .collect(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn index(&self, occ: &[usize]) -> usize {
        self.dims.iter().zip(occ).fold(0, |acc, (&d, &n)| acc * d + n)
    }

    pub fn occupation(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            occ[k] = index % self.dims[k];
            index /= self.dims[k];
        }
        occ
    }

    /// Applies a product of local operators to a basis state.
    pub fn apply(&self, ops: &[(usize, LocalOp)], occ: &[usize]) -> Option<(f64, Vec<usize>)> {
        let mut state = occ.to_vec();
        let mut amp = 1.0;
        for &(reg, op) in ops.iter().rev() {
            let n = state[reg];
            match op {
                LocalOp::Create => {
                    if n + 1 >= self.dims[reg] {
                        return None;
                    }
                    amp *= ((n + 1) as f64).sqrt();
                    state[reg] = n + 1;
                }
                LocalOp::Annihilate => {
                    if n == 0 {
                        return None;
                    }
                    amp *= (n as f64).sqrt();
                    state[reg] = n - 1;
                }
                LocalOp::Number => {
                    if n == 0 {
                        return None;
                    }
                    amp *= n as f64;
                }
                LocalOp::FCreate | LocalOp::FAnnihilate => {
                    let (from, to) = if op == LocalOp::FCreate { (0, 1) } else { (1, 0) };
                    if n != from {
                        return None;
                    }
                    let parity: usize = (0..reg)
                        .filter(|&k| self.fermionic[k])
                        .map(|k| state[k])
                        .sum();
                    if parity % 2 == 1 {
                        amp = -amp;
                    }
                    state[reg] = to;
                }
                LocalOp::SpinX => state[reg] = 1 - n,
                LocalOp::SpinZ => {
                    if n == 1 {
                        amp = -amp;
                    }
                }
            }
        }
        Some((amp, state))
    }

    pub fn sparse(&self, terms: &[FockTerm]) -> SparseMatrix {
        let d = self.dim();
        let mut trips = Vec::new();
        for col in 0..d {
            let occ = self.occupation(col);
            for (coeff, ops) in terms {
                if let Some((amp, out)) = self.apply(ops, &occ) {
                    trips.push((self.index(&out), col, coeff * amp));
                }
            }
        }
        SparseMatrix::from_triplets(d, trips)
    }

    pub fn dense(&self, terms: &[FockTerm]) -> Result<CMat> {
        let d = self.dim();
        if d > DENSE_FOCK_LIMIT {
            return Err(Error::Capacity {
                qubits: (d as f64).log2().ceil() as usize,
                limit: 14,
            });
        }
        let mut m = CMat::zeros(d, d);
        for col in 0..d {
            let occ = self.occupation(col);
            for (coeff, ops) in terms {
                if let Some((amp, out)) = self.apply(ops, &occ) {
                    m[(self.index(&out), col)] += coeff * amp;
                }
            }
        }
        Ok(m)
    }
}

fn term(coeff: f64, ops: &[(usize, LocalOp)]) -> FockTerm {
    (real(coeff), ops.to_vec())
}

/// Bose-Hubbard on `n` sites with per-site chemical potential; hopping and V over all pairs j > i.
pub fn bose_hubbard_terms(n: usize, t: f64, u: f64, v: f64, mu: &[f64]) -> Vec<FockTerm> {
    use LocalOp::*;
    let mut out = Vec::new();
    for i in 0..n {
        out.push(term(-mu[i], &[(i, Number)]));
        // n(n−1) = b†b†bb
        out.push(term(
            u / 2.0,
            &[(i, Create), (i, Create), (i, Annihilate), (i, Annihilate)],
        ));
        for j in i + 1..n {
            out.push(term(-t, &[(i, Create), (j, Annihilate)]));
            out.push(term(-t, &[(j, Create), (i, Annihilate)]));
            out.push(term(v, &[(i, Number), (j, Number)]));
        }
    }
    out
}

/// Spin register 0 followed by one boson register per mode.
pub fn spin_boson_terms(delta: f64, epsilon: f64, omegas: &[f64], couplings: &[f64]) -> Vec<FockTerm> {
    use LocalOp::*;
    let mut out = vec![term(delta, &[(0, SpinX)]), term(epsilon / 2.0, &[(0, SpinZ)])];
    for (k, (&w, &g)) in omegas.iter().zip(couplings).enumerate() {
        let r = k + 1;
        out.push(term(w, &[(r, Number)]));
        out.push(term(g * w / 2.0, &[(0, SpinX), (r, Create)]));
        out.push(term(g * w / 2.0, &[(0, SpinX), (r, Annihilate)]));
    }
    out
}

/// Fermion registers 0..n then boson registers n..2n.
pub fn holstein_terms(n: usize, v: f64, omega: f64, g: f64, bonds: &[(usize, usize)]) -> Vec<FockTerm> {
    use LocalOp::*;
    let mut out = Vec::new();
    for &(i, j) in bonds {
        out.push(term(-v, &[(i, FCreate), (j, FAnnihilate)]));
        out.push(term(-v, &[(j, FCreate), (i, FAnnihilate)]));
    }
    for i in 0..n {
        out.push(term(omega, &[(n + i, Number)]));
        out.push(term(g * omega, &[(i, FCreate), (i, FAnnihilate), (n + i, Create)]));
        out.push(term(g * omega, &[(i, FCreate), (i, FAnnihilate), (n + i, Annihilate)]));
    }
    out
}

/// Single-mode H = ω n̂ + κ (b† + b) on cutoff `cutoff`, as a sparse matrix.
pub fn displaced_oscillator(cutoff: usize, omega: f64, kappa: f64) -> SparseMatrix {
    use LocalOp::*;
    let space = FockSpace::bosonic(vec![cutoff + 1]);
    space.sparse(&[
        term(omega, &[(0, Number)]),
        term(kappa, &[(0, Create)]),
        term(kappa, &[(0, Annihilate)]),
    ])
}
