//! Qubit encodings of truncated bosonic and fermionic ladder operators.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{real, CMat, C64, ONE};
use crate::pauli::{Ladder, Pauli, PauliSum, DEFAULT_DENSE_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BosonEncoding {
    Unary,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BosonOps {
    pub creation: PauliSum,
    pub annihilation: PauliSum,
    pub number: PauliSum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FermionOps {
    pub creation: PauliSum,
    pub annihilation: PauliSum,
}

/// `letters` placed at the given qubits of a `width`-qubit register, identity elsewhere.
fn place(width: usize, factors: &[(usize, PauliSum)]) -> PauliSum {
    let mut out = PauliSum::identity(0);
    for q in 0..width {
        let local = factors
            .iter()
            .find(|(k, _)| *k == q)
            .map(|(_, s)| s.clone())
            .unwrap_or_else(|| PauliSum::identity(1));
        out = out.tensor(&local);
    }
    out
}

/// Unary (one-hot) boson operators on Nb+1 qubits; qubit n flags occupation n.
pub fn boson_ops_unary(nb: usize) -> Result<BosonOps> {
    if nb < 1 {
        return Err(Error::Parameter("unary cutoff must be at least 1".into()));
    }
    let width = nb + 1;
    let plus = PauliSum::ladder(Ladder::Plus);
    let minus = PauliSum::ladder(Ladder::Minus);
    let mut creation = PauliSum::zero(width);
    for n in 0..nb {
        let hop = place(width, &[(n, plus.clone()), (n + 1, minus.clone())]);
        creation = &creation + &hop.scale(real(((n + 1) as f64).sqrt()));
    }
    let annihilation = creation.adjoint();
    let number = &creation * &annihilation;
    Ok(BosonOps {
        creation,
        annihilation,
        number,
    })
}

/// Binary boson operators on Nq qubits using the full register, cutoff 2^Nq − 1.
pub fn boson_ops_binary(nq: usize) -> Result<BosonOps> {
    if nq < 1 {
        return Err(Error::Parameter("binary register needs at least 1 qubit".into()));
    }
    if nq > usize::BITS as usize - 2 {
        return Err(Error::Parameter("binary register too wide".into()));
    }
    Ok(binary_ops_at_cutoff(nq, (1usize << nq) - 1))
}

/// Binary register wide enough for `nb`, with ladder elements only up to `nb`.
pub fn boson_ops_binary_logical(nb: usize) -> Result<BosonOps> {
    if nb < 1 {
        return Err(Error::Parameter("binary cutoff must be at least 1".into()));
    }
    Ok(binary_ops_at_cutoff(binary_width(nb), nb))
}

fn binary_ops_at_cutoff(nq: usize, nb: usize) -> BosonOps {
    let raise: Vec<(usize, usize, C64)> = (0..nb)
        .map(|n| (n + 1, n, real(((n + 1) as f64).sqrt())))
        .collect();
    let count: Vec<(usize, usize, C64)> = (1..=nb).map(|n| (n, n, real(n as f64))).collect();
    let creation = PauliSum::from_outer_products(nq, &raise);
    let annihilation = creation.adjoint();
    let number = PauliSum::from_outer_products(nq, &count);
    BosonOps {
        creation,
        annihilation,
        number,
    }
}

/// ⌈log2(nb + 1)⌉, at least 1.
pub fn binary_width(nb: usize) -> usize {
    let mut w = 1;
    while (1usize << w) < nb + 1 {
        w += 1;
    }
    w
}

/// Jordan-Wigner fermion operators: f†_j = Z^{⊗j} ⊗ (−) ⊗ I^{⊗(n−j−1)}.
pub fn fermion_ops_jw(site: usize, n_sites: usize) -> Result<FermionOps> {
    if site >= n_sites {
        return Err(Error::Parameter(format!(
            "site {site} out of range for {n_sites} sites"
        )));
    }
    let mut factors: Vec<(usize, PauliSum)> =
        (0..site).map(|q| (q, PauliSum::single(Pauli::Z))).collect();
    factors.push((site, PauliSum::ladder(Ladder::Minus)));
    let creation = place(n_sites, &factors);
    let annihilation = creation.adjoint();
    Ok(FermionOps {
        creation,
        annihilation,
    })
}

/// A boson mode with its logical cutoff and qubit encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BosonRegister {
    pub cutoff: usize,
    pub encoding: BosonEncoding,
    pub qubit_count: usize,
}

impl BosonRegister {
    pub fn new(cutoff: usize, encoding: BosonEncoding) -> Result<Self> {
        if cutoff < 1 {
            return Err(Error::Parameter("boson cutoff must be at least 1".into()));
        }
        let qubit_count = match encoding {
            BosonEncoding::Unary => cutoff + 1,
            BosonEncoding::Binary => binary_width(cutoff),
        };
        Ok(BosonRegister {
            cutoff,
            encoding,
            qubit_count,
        })
    }

    pub fn ops(&self) -> Result<BosonOps> {
        match self.encoding {
            BosonEncoding::Unary => boson_ops_unary(self.cutoff),
            BosonEncoding::Binary => boson_ops_binary_logical(self.cutoff),
        }
    }

    /// Local qubit-basis index of Fock state |n⟩.
    pub fn code(&self, n: usize) -> usize {
        match self.encoding {
            BosonEncoding::Unary => 1 << (self.qubit_count - 1 - n),
            BosonEncoding::Binary => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegisterKind {
    Spin,
    Fermion,
    Boson,
}

/// JSON descriptor entry `{kind, encoding, cutoff}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterSpec {
    pub kind: RegisterKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoding: Option<BosonEncoding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
}

impl RegisterSpec {
    pub fn spin() -> Self {
        RegisterSpec {
            kind: RegisterKind::Spin,
            encoding: None,
            cutoff: None,
        }
    }

    pub fn fermion() -> Self {
        RegisterSpec {
            kind: RegisterKind::Fermion,
            encoding: None,
            cutoff: None,
        }
    }

    pub fn boson(cutoff: usize, encoding: BosonEncoding) -> Self {
        RegisterSpec {
            kind: RegisterKind::Boson,
            encoding: Some(encoding),
            cutoff: Some(cutoff),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub kind: RegisterKind,
    pub boson: Option<BosonRegister>,
    pub offset: usize,
    pub width: usize,
}

impl Register {
    /// Number of Fock levels held by the register.
    pub fn fock_dim(&self) -> usize {
        match self.boson {
            Some(b) => b.cutoff + 1,
            None => 2,
        }
    }

    fn code(&self, n: usize) -> usize {
        match self.boson {
            Some(b) => b.code(n),
            None => n,
        }
    }
}

/// Ordered registers with contiguous qubit ranges, register 0 leftmost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    specs: Vec<RegisterSpec>,
    registers: Vec<Register>,
    total: usize,
}

impl RegisterLayout {
    pub fn new(specs: &[RegisterSpec]) -> Result<Self> {
        let mut registers = Vec::with_capacity(specs.len());
        let mut offset = 0;
        for spec in specs {
            let reg = match spec.kind {
                RegisterKind::Boson => {
                    let cutoff = spec
                        .cutoff
                        .ok_or_else(|| Error::Parameter("boson register needs a cutoff".into()))?;
                    let enc = spec.encoding.unwrap_or(BosonEncoding::Binary);
                    let b = BosonRegister::new(cutoff, enc)?;
                    Register {
                        kind: spec.kind,
                        boson: Some(b),
                        offset,
                        width: b.qubit_count,
                    }
                }
                _ => {
                    if spec.cutoff.is_some() || spec.encoding.is_some() {
                        return Err(Error::Parameter(
                            "spin and fermion registers take no cutoff or encoding".into(),
                        ));
                    }
                    Register {
                        kind: spec.kind,
                        boson: None,
                        offset,
                        width: 1,
                    }
                }
            };
            offset += reg.width;
            registers.push(reg);
        }
        Ok(RegisterLayout {
            specs: specs.to_vec(),
            registers,
            total: offset,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let specs: Vec<RegisterSpec> = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: format!("column {}: {e}", e.column()),
        })?;
        RegisterLayout::new(&specs)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.specs).expect("register specs serialise")
    }

    pub fn specs(&self) -> &[RegisterSpec] {
        &self.specs
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn qubit_count(&self) -> usize {
        self.total
    }

    fn register(&self, id: usize) -> Result<&Register> {
        self.registers
            .get(id)
            .ok_or_else(|| Error::Parameter(format!("register {id} does not exist")))
    }

    /// Extends an operator on one register by identities on all others.
    pub fn embed(&self, local: &PauliSum, register_id: usize) -> Result<PauliSum> {
        let reg = self.register(register_id)?;
        if local.qubit_count() != reg.width {
            return Err(Error::Dimension(format!(
                "local operator on {} qubits, register {register_id} has {}",
                local.qubit_count(),
                reg.width
            )));
        }
        let left = PauliSum::identity(reg.offset);
        let right = PauliSum::identity(self.total - reg.offset - reg.width);
        Ok(left.tensor(local).tensor(&right))
    }

    pub fn boson_ops(&self, register_id: usize) -> Result<BosonOps> {
        let reg = self.register(register_id)?;
        let b = reg
            .boson
            .ok_or_else(|| Error::Parameter(format!("register {register_id} is not bosonic")))?;
        let ops = b.ops()?;
        Ok(BosonOps {
            creation: self.embed(&ops.creation, register_id)?,
            annihilation: self.embed(&ops.annihilation, register_id)?,
            number: self.embed(&ops.number, register_id)?,
        })
    }

    /// Jordan-Wigner operators with the parity string over all earlier fermion registers.
    pub fn fermion_ops(&self, register_id: usize) -> Result<FermionOps> {
        let reg = self.register(register_id)?;
        if reg.kind != RegisterKind::Fermion {
            return Err(Error::Parameter(format!(
                "register {register_id} is not fermionic"
            )));
        }
        let mut factors: Vec<(usize, PauliSum)> = self.registers[..register_id]
            .iter()
            .filter(|r| r.kind == RegisterKind::Fermion)
            .map(|r| (r.offset, PauliSum::single(Pauli::Z)))
            .collect();
        factors.push((reg.offset, PauliSum::ladder(Ladder::Minus)));
        let creation = place(self.total, &factors);
        let annihilation = creation.adjoint();
        Ok(FermionOps {
            creation,
            annihilation,
        })
    }

    /// Single-qubit Pauli on a spin (or fermion) register.
    pub fn spin_op(&self, register_id: usize, letter: Pauli) -> Result<PauliSum> {
        let reg = self.register(register_id)?;
        if reg.boson.is_some() {
            return Err(Error::Parameter(format!("register {register_id} is bosonic")));
        }
        self.embed(&PauliSum::single(letter), register_id)
    }

    /// Per-register Fock dimensions (2 for spin and fermion registers).
    pub fn fock_dims(&self) -> Vec<usize> {
        self.registers.iter().map(|r| r.fock_dim()).collect()
    }

    /// Qubit basis index of the product Fock state with the given occupations.
    pub fn qubit_index(&self, occ: &[usize]) -> usize {
        self.registers
            .iter()
            .zip(occ)
            .fold(0, |acc, (r, &n)| (acc << r.width) | r.code(n))
    }

    /// Isometry from the Fock product basis (register 0 most significant) into qubit space.
    pub fn isometry(&self) -> Result<CMat> {
        if self.total > DEFAULT_DENSE_LIMIT {
            return Err(Error::Capacity {
                qubits: self.total,
                limit: DEFAULT_DENSE_LIMIT,
            });
        }
        let dims = self.fock_dims();
        let d: usize = dims.iter().product();
        let mut v = CMat::zeros(1 << self.total, d);
        let mut occ = vec![0usize; dims.len()];
        for f in 0..d {
            let mut rem = f;
            for k in (0..dims.len()).rev() {
                occ[k] = rem % dims[k];
                rem /= dims[k];
            }
            v[(self.qubit_index(&occ), f)] = ONE;
        }
        Ok(v)
    }
}

/// Normal modes of a quadratic potential: v = U Ω² Uᵀ with v_jk = V_jk/√(M_j M_k).
#[derive(Debug, Clone)]
pub struct NormalModeDecomposition {
    pub frequencies: Vec<f64>,
    pub u: DMatrix<f64>,
    pub scaled_potential: DMatrix<f64>,
    /// q_j = √M_j x_j, and the normal coordinates are Q = Uᵀ q.
    pub convention: &'static str,
}

pub fn normal_modes(v: &DMatrix<f64>, masses: &[f64]) -> Result<NormalModeDecomposition> {
    let n = v.nrows();
    if v.ncols() != n || masses.len() != n {
        return Err(Error::Dimension(format!(
            "potential {}x{} with {} masses",
            v.nrows(),
            v.ncols(),
            masses.len()
        )));
    }
    if masses.iter().any(|&m| m <= 0.0 || !m.is_finite()) {
        return Err(Error::Parameter("masses must be positive".into()));
    }
    if (v - v.transpose()).abs().max() > 1e-10 {
        return Err(Error::Domain("potential matrix is not symmetric".into()));
    }
    let scaled = DMatrix::from_fn(n, n, |j, k| v[(j, k)] / (masses[j] * masses[k]).sqrt());
    let eig = SymmetricEigen::new(scaled.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut freqs = Vec::with_capacity(n);
    let mut u = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let w2 = eig.eigenvalues[i];
        if w2 < -1e-8 {
            return Err(Error::NotPositiveSemidefinite(w2));
        }
        freqs.push(w2.max(0.0).sqrt());
        u.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok(NormalModeDecomposition {
        frequencies: freqs,
        u,
        scaled_potential: scaled,
        convention: "q_j = sqrt(M_j) x_j, p_j = P_j / sqrt(M_j), Q = U^T q",
    })
}

/// Dense Fock-space ladder matrices at a given cutoff.
pub fn fock_creation(cutoff: usize) -> CMat {
    let mut m = CMat::zeros(cutoff + 1, cutoff + 1);
    for n in 0..cutoff {
        m[(n + 1, n)] = real(((n + 1) as f64).sqrt());
    }
    m
}
