//! Bose-Hubbard, spin-boson and Holstein Hamiltonians in Pauli and Fock form.

use serde::{Deserialize, Serialize};

use crate::encodings::{BosonEncoding, RegisterLayout, RegisterSpec};
use crate::error::{Error, Result};
use crate::fock::{self, FockSpace, FockTerm, LocalOp};
use crate::linalg::{real, CMat, CVec, SparseMatrix};
use crate::pauli::{Pauli, PauliSum, PRUNE_TOL};

/// Scalar broadcast or one value per site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SiteValues {
    Scalar(f64),
    PerSite(Vec<f64>),
}

impl SiteValues {
    pub fn resolve(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            SiteValues::Scalar(x) => Ok(vec![*x; n]),
            SiteValues::PerSite(v) if v.len() == n => Ok(v.clone()),
            SiteValues::PerSite(v) => Err(Error::Dimension(format!(
                "{} per-site values for {n} sites",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoseHubbardParams {
    pub n_sites: usize,
    pub t: f64,
    pub u: f64,
    #[serde(default)]
    pub v: f64,
    pub mu: SiteValues,
    pub cutoff: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinBosonParams {
    pub delta: f64,
    pub epsilon: f64,
    pub omegas: Vec<f64>,
    pub couplings: Vec<f64>,
    pub cutoffs: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolsteinParams {
    pub n_sites: usize,
    pub v: f64,
    pub omega: f64,
    pub g: f64,
    pub cutoff: usize,
    pub boundary: Boundary,
}

impl HolsteinParams {
    /// Nearest-neighbour bonds; the ring closes with (n−1, 0) for n ≥ 3.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.n_sites;
        let mut out: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        if self.boundary == Boundary::Periodic && n >= 3 {
            out.push((n - 1, 0));
        }
        out
    }
}

/// Model document `{model, params, encoding}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", rename_all = "snake_case")]
pub enum Model {
    BoseHubbard(BoseHubbardParams),
    SpinBoson(SpinBosonParams),
    Holstein(HolsteinParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub model: Model,
    pub encoding: BosonEncoding,
}

impl ModelSpec {
    pub fn build(&self) -> Result<EncodedHamiltonian> {
        match &self.model {
            Model::BoseHubbard(p) => build_bose_hubbard(p, self.encoding),
            Model::SpinBoson(p) => build_spin_boson(p, self.encoding),
            Model::Holstein(p) => build_holstein(p, self.encoding),
        }
    }
}

/// A compiled Hamiltonian with its register layout and Fock-space oracle terms.
#[derive(Debug, Clone)]
pub struct EncodedHamiltonian {
    pub pauli: PauliSum,
    pub layout: RegisterLayout,
    pub fock_dims: Vec<usize>,
    pub model: Model,
    fock_terms: Vec<FockTerm>,
}

impl EncodedHamiltonian {
    pub fn fock_space(&self) -> FockSpace {
        FockSpace::from_layout(&self.layout)
    }

    pub fn fock_terms(&self) -> &[FockTerm] {
        &self.fock_terms
    }

    /// Dense matrix from occupation-number rules, never touching the Pauli form.
    pub fn fock_matrix(&self) -> Result<CMat> {
        self.fock_space().dense(&self.fock_terms)
    }

    pub fn fock_sparse(&self) -> SparseMatrix {
        self.fock_space().sparse(&self.fock_terms)
    }

    /// Pauli matrix restricted to the encoded Fock subspace.
    pub fn restricted_pauli_matrix(&self) -> Result<CMat> {
        let v = self.layout.isometry()?;
        Ok(v.adjoint() * self.pauli.to_matrix()? * v)
    }
}

fn check_capacity(layout: &RegisterLayout) -> Result<()> {
    let n = layout.qubit_count();
    if n > 62 {
        return Err(Error::Capacity { qubits: n, limit: 62 });
    }
    Ok(())
}

pub fn build_bose_hubbard(p: &BoseHubbardParams, encoding: BosonEncoding) -> Result<EncodedHamiltonian> {
    if p.n_sites < 1 || p.cutoff < 1 {
        return Err(Error::Parameter("Bose-Hubbard needs N ≥ 1 and Nb ≥ 1".into()));
    }
    let mu = p.mu.resolve(p.n_sites)?;
    let specs = vec![RegisterSpec::boson(p.cutoff, encoding); p.n_sites];
    let layout = RegisterLayout::new(&specs)?;
    check_capacity(&layout)?;
    let ops: Vec<_> = (0..p.n_sites)
        .map(|i| layout.boson_ops(i))
        .collect::<Result<_>>()?;
    let n = layout.qubit_count();
    let mut h = PauliSum::zero(n);
    for i in 0..p.n_sites {
        let ni = &ops[i].number;
        let nn = &(ni * ni) - ni;
        h = &h + &ni.scale(real(-mu[i]));
        h = &h + &nn.scale(real(p.u / 2.0));
        for j in i + 1..p.n_sites {
            let hop = &(&ops[i].creation * &ops[j].annihilation)
                + &(&ops[j].creation * &ops[i].annihilation);
            h = &h + &hop.scale(real(-p.t));
            h = &h + &(ni * &ops[j].number).scale(real(p.v));
        }
    }
    let fock_terms = fock::bose_hubbard_terms(p.n_sites, p.t, p.u, p.v, &mu);
    Ok(EncodedHamiltonian {
        pauli: h.simplify(PRUNE_TOL),
        fock_dims: layout.fock_dims(),
        layout,
        model: Model::BoseHubbard(p.clone()),
        fock_terms,
    })
}

pub fn build_spin_boson(p: &SpinBosonParams, encoding: BosonEncoding) -> Result<EncodedHamiltonian> {
    let m = p.omegas.len();
    if p.couplings.len() != m || p.cutoffs.len() != m {
        return Err(Error::Dimension("omegas, couplings and cutoffs differ in length".into()));
    }
    if p.cutoffs.iter().any(|&c| c < 1) {
        return Err(Error::Parameter("boson cutoffs must be at least 1".into()));
    }
    let mut specs = vec![RegisterSpec::spin()];
    specs.extend(p.cutoffs.iter().map(|&c| RegisterSpec::boson(c, encoding)));
    let layout = RegisterLayout::new(&specs)?;
    check_capacity(&layout)?;
    let x = layout.spin_op(0, Pauli::X)?;
    let z = layout.spin_op(0, Pauli::Z)?;
    let mut h = &x.scale(real(p.delta)) + &z.scale(real(p.epsilon / 2.0));
    for k in 0..m {
        let ops = layout.boson_ops(k + 1)?;
        h = &h + &ops.number.scale(real(p.omegas[k]));
        let disp = &ops.creation + &ops.annihilation;
        h = &h + &(&x * &disp).scale(real(p.couplings[k] * p.omegas[k] / 2.0));
    }
    let fock_terms = fock::spin_boson_terms(p.delta, p.epsilon, &p.omegas, &p.couplings);
    Ok(EncodedHamiltonian {
        pauli: h.simplify(PRUNE_TOL),
        fock_dims: layout.fock_dims(),
        layout,
        model: Model::SpinBoson(p.clone()),
        fock_terms,
    })
}

pub fn build_holstein(p: &HolsteinParams, encoding: BosonEncoding) -> Result<EncodedHamiltonian> {
    if p.n_sites < 2 || p.cutoff < 1 {
        return Err(Error::Parameter("Holstein needs at least 2 sites and Nb ≥ 1".into()));
    }
    let n = p.n_sites;
    let mut specs = vec![RegisterSpec::fermion(); n];
    specs.extend(std::iter::repeat(RegisterSpec::boson(p.cutoff, encoding)).take(n));
    let layout = RegisterLayout::new(&specs)?;
    check_capacity(&layout)?;
    let f: Vec<_> = (0..n).map(|i| layout.fermion_ops(i)).collect::<Result<_>>()?;
    let mut h = PauliSum::zero(layout.qubit_count());
    for (i, j) in p.bonds() {
        let hop = &(&f[i].creation * &f[j].annihilation) + &(&f[j].creation * &f[i].annihilation);
        h = &h + &hop.scale(real(-p.v));
    }
    for i in 0..n {
        let b = layout.boson_ops(n + i)?;
        let nf = &f[i].creation * &f[i].annihilation;
        h = &h + &b.number.scale(real(p.omega));
        let disp = &b.creation + &b.annihilation;
        h = &h + &(&nf * &disp).scale(real(p.g * p.omega));
    }
    let fock_terms = fock::holstein_terms(n, p.v, p.omega, p.g, &p.bonds());
    Ok(EncodedHamiltonian {
        pauli: h.simplify(PRUNE_TOL),
        fock_dims: layout.fock_dims(),
        layout,
        model: Model::Holstein(p.clone()),
        fock_terms,
    })
}

/// Occupation-changing part H_w of one boson mode and the remainder H_r.
#[derive(Debug, Clone)]
pub struct HwHrSplit {
    pub h_w: PauliSum,
    pub h_r: PauliSum,
    pub h_w_fock: Vec<FockTerm>,
    pub h_r_fock: Vec<FockTerm>,
    /// Register index of the mode inside the layout.
    pub register: usize,
    pub chi: f64,
    pub r: f64,
}

/// Splits `h` with respect to its `mode_index`-th boson register.
pub fn hw_hr_split(h: &EncodedHamiltonian, mode_index: usize) -> Result<HwHrSplit> {
    let boson_regs: Vec<usize> = h
        .layout
        .registers()
        .iter()
        .enumerate()
        .filter(|(_, r)| r.boson.is_some())
        .map(|(k, _)| k)
        .collect();
    if boson_regs.is_empty() {
        return Err(Error::Parameter("model has no boson mode".into()));
    }
    let reg = *boson_regs
        .get(mode_index)
        .ok_or_else(|| Error::Parameter(format!("boson mode {mode_index} does not exist")))?;
    let b = h.layout.boson_ops(reg)?;
    let disp = &b.creation + &b.annihilation;
    let (h_w, chi) = match &h.model {
        Model::Holstein(p) => {
            let f = h.layout.fermion_ops(mode_index)?;
            let nf = &f.creation * &f.annihilation;
            let w = (&nf * &disp).scale(real(p.g * p.omega));
            (w, 2.0 * (p.g * p.omega).abs())
        }
        Model::SpinBoson(p) => {
            let x = h.layout.spin_op(0, Pauli::X)?;
            let gw = p.couplings[mode_index] * p.omegas[mode_index];
            ((&x * &disp).scale(real(gw / 2.0)), gw.abs())
        }
        Model::BoseHubbard(p) => {
            let mut w = PauliSum::zero(h.layout.qubit_count());
            for (j, &other) in boson_regs.iter().enumerate() {
                if j == mode_index {
                    continue;
                }
                let o = h.layout.boson_ops(other)?;
                let hop = &(&b.creation * &o.annihilation) + &(&o.creation * &b.annihilation);
                w = &w + &hop.scale(real(-p.t));
            }
            let others = (p.n_sites - 1) as f64;
            (w, 2.0 * p.t.abs() * others * (p.cutoff as f64).sqrt())
        }
    };
    let h_w = h_w.simplify(PRUNE_TOL);
    let h_r = (&h.pauli - &h_w).simplify(PRUNE_TOL);
    let (h_w_fock, h_r_fock) = h
        .fock_terms
        .iter()
        .cloned()
        .partition(|(_, ops)| changes_occupation(ops, reg));
    Ok(HwHrSplit {
        h_w,
        h_r,
        h_w_fock,
        h_r_fock,
        register: reg,
        chi,
        r: 0.5,
    })
}

fn changes_occupation(ops: &[(usize, LocalOp)], reg: usize) -> bool {
    let net: i64 = ops
        .iter()
        .filter(|(r, _)| *r == reg)
        .map(|(_, op)| match op {
            LocalOp::Create => 1,
            LocalOp::Annihilate => -1,
            _ => 0,
        })
        .sum();
    net != 0
}

/// Pair correlations Γ_pq = ⟨b†_p b†_q b_q b_p⟩ and densities ⟨n_p⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkObservables {
    pub gamma: nalgebra::DMatrix<f64>,
    pub density: Vec<f64>,
}

/// Observables of a state given in the Fock product basis of `space`.
pub fn walk_observables_fock(psi: &CVec, space: &FockSpace) -> Result<WalkObservables> {
    if psi.len() != space.dim() {
        return Err(Error::Dimension(format!(
            "state of length {} on a space of dimension {}",
            psi.len(),
            space.dim()
        )));
    }
    let m = space.dims().len();
    let mut gamma = nalgebra::DMatrix::zeros(m, m);
    let mut density = vec![0.0; m];
    for (i, amp) in psi.iter().enumerate() {
        let w = amp.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let occ = space.occupation(i);
        for p in 0..m {
            let np = occ[p] as f64;
            density[p] += w * np;
            for q in 0..m {
                let nq = occ[q] as f64;
                let v = if p == q { np * (np - 1.0) } else { np * nq };
                gamma[(p, q)] += w * v;
            }
        }
    }
    Ok(WalkObservables { gamma, density })
}

/// Observables of a qubit-register state, read through the layout's Fock identification.
pub fn walk_observables(psi: &CVec, layout: &RegisterLayout) -> Result<WalkObservables> {
    if psi.len() != 1usize << layout.qubit_count() {
        return Err(Error::Dimension("state length does not match the register".into()));
    }
    let space = FockSpace::from_layout(layout);
    let fock_psi = CVec::from_iterator(
        space.dim(),
        (0..space.dim()).map(|f| psi[layout.qubit_index(&space.occupation(f))]),
    );
    walk_observables_fock(&fock_psi, &space)
}

/// Diagonal (on-site, μ, V) and hopping parts of a Bose-Hubbard model in Fock form.
pub fn bose_hubbard_fock_split(p: &BoseHubbardParams) -> Result<(Vec<FockTerm>, Vec<FockTerm>)> {
    let mu = p.mu.resolve(p.n_sites)?;
    let terms = fock::bose_hubbard_terms(p.n_sites, p.t, p.u, p.v, &mu);
    Ok(terms.into_iter().partition(|(_, ops)| {
        ops.iter()
            .all(|(_, op)| !matches!(op, LocalOp::Create | LocalOp::Annihilate))
            || is_on_site(ops)
    }))
}

fn is_on_site(ops: &[(usize, LocalOp)]) -> bool {
    ops.windows(2).all(|w| w[0].0 == w[1].0)
}
