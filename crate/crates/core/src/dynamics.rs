//! Exact and product-formula propagation, Pauli-exponential circuits and commutator gadgets.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    anticommutator, c, commutator, eigh, expm, kron, random_state, real, require_hermitian,
    spectral_norm, unitary_evolution, CMat, CVec, C64, I, ONE, ZERO,
};
use crate::pauli::{Pauli, PauliTerm};

const HERMITIAN_TOL: f64 = 1e-10;

/// e^{−iHt}ψ0 through the eigendecomposition of H.
pub fn evolve_exact(h: &CMat, psi0: &CVec, t: f64) -> Result<CVec> {
    require_hermitian(h, HERMITIAN_TOL)?;
    if psi0.len() != h.nrows() {
        return Err(Error::Dimension(format!(
            "state of length {} for a {}x{} Hamiltonian",
            psi0.len(),
            h.nrows(),
            h.ncols()
        )));
    }
    let (vals, vecs) = eigh(h);
    let mut coeffs = vecs.adjoint() * psi0;
    for (k, z) in coeffs.iter_mut().enumerate() {
        *z *= C64::from_polar(1.0, -vals[k] * t);
    }
    Ok(vecs * coeffs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrotterPlan {
    pub n: usize,
    pub order: u8,
    pub t: f64,
}

impl TrotterPlan {
    pub fn new(t: f64, n: usize, order: u8) -> Result<Self> {
        if n < 1 {
            return Err(Error::Parameter("Trotter step count must be at least 1".into()));
        }
        if order != 1 && order != 2 {
            return Err(Error::Parameter(format!("Trotter order {order} not in {{1, 2}}")));
        }
        Ok(TrotterPlan { n, order, t })
    }

    pub fn dt(&self) -> f64 {
        self.t / self.n as f64
    }
}

/// Unitary of one product-formula step; order 2 is the palindrome with half steps.
pub fn trotter_step_unitary(terms: &[CMat], dt: f64, order: u8) -> Result<CMat> {
    let d = check_terms(terms)?;
    let mut u = CMat::identity(d, d);
    match order {
        1 => {
            for h in terms {
                u = unitary_evolution(h, dt) * u;
            }
        }
        2 => {
            let m = terms.len();
            for h in &terms[..m - 1] {
                u = unitary_evolution(h, dt / 2.0) * u;
            }
            u = unitary_evolution(&terms[m - 1], dt) * u;
            for h in terms[..m - 1].iter().rev() {
                u = unitary_evolution(h, dt / 2.0) * u;
            }
        }
        _ => return Err(Error::Parameter(format!("Trotter order {order} not in {{1, 2}}"))),
    }
    Ok(u)
}

fn check_terms(terms: &[CMat]) -> Result<usize> {
    let first = terms
        .first()
        .ok_or_else(|| Error::Parameter("empty term list".into()))?;
    let d = first.nrows();
    for h in terms {
        if h.nrows() != d || h.ncols() != d {
            return Err(Error::Dimension("Trotter terms differ in dimension".into()));
        }
        require_hermitian(h, HERMITIAN_TOL)?;
    }
    Ok(d)
}

pub fn trotter_unitary(terms: &[CMat], t: f64, n: usize, order: u8) -> Result<CMat> {
    let plan = TrotterPlan::new(t, n, order)?;
    let step = trotter_step_unitary(terms, plan.dt(), order)?;
    let mut u = CMat::identity(step.nrows(), step.ncols());
    for _ in 0..n {
        u = &step * u;
    }
    Ok(u)
}

pub fn trotter_evolve(terms: &[CMat], psi0: &CVec, t: f64, n: usize, order: u8) -> Result<CVec> {
    let plan = TrotterPlan::new(t, n, order)?;
    let step = trotter_step_unitary(terms, plan.dt(), order)?;
    if psi0.len() != step.nrows() {
        return Err(Error::Dimension("state does not match the terms".into()));
    }
    let mut psi = psi0.clone();
    for _ in 0..n {
        psi = &step * psi;
    }
    Ok(psi)
}

/// ‖[K,V]‖ t² / (2n), spectral norm.
pub fn trotter_error_bound(k: &CMat, v: &CMat, t: f64, n: usize) -> f64 {
    spectral_norm(&commutator(k, v)) * t * t / (2.0 * n as f64)
}

/// ⌈‖[K,V]‖ t² / (2ε)⌉, at least 1.
pub fn trotter_steps_for(k: &CMat, v: &CMat, t: f64, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::Parameter("target error must be positive".into()));
    }
    Ok(steps_from_norm(spectral_norm(&commutator(k, v)), t, eps))
}

pub fn steps_from_norm(comm_norm: f64, t: f64, eps: f64) -> usize {
    let x = comm_norm * t * t / (2.0 * eps);
    // relative slack absorbs rounding in an exact integer ratio
    let n = (x * (1.0 - 1e-12)).ceil();
    (n as usize).max(1)
}

/// Least-squares convergence order from errors at step counts `ns`.
pub fn fitted_order(ns: &[usize], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    -crate::linalg::log_log_slope(&xs, errors)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Cx(usize, usize),
    Rz(usize, f64),
    Ry(usize, f64),
}

impl Gate {
    fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::S(q) | Gate::Sdg(q) | Gate::X(q) | Gate::Rz(q, _) | Gate::Ry(q, _) => {
                vec![q]
            }
            Gate::Cx(a, b) => vec![a, b],
        }
    }

    fn single_matrix(&self) -> Option<[[C64; 2]; 2]> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Some(match *self {
            Gate::H(_) => [[real(h), real(h)], [real(h), real(-h)]],
            Gate::S(_) => [[ONE, ZERO], [ZERO, I]],
            Gate::Sdg(_) => [[ONE, ZERO], [ZERO, -I]],
            Gate::X(_) => [[ZERO, ONE], [ONE, ZERO]],
            Gate::Rz(_, th) => [
                [C64::from_polar(1.0, -th / 2.0), ZERO],
                [ZERO, C64::from_polar(1.0, th / 2.0)],
            ],
            Gate::Ry(_, th) => {
                let (s, co) = (th / 2.0).sin_cos();
                [[real(co), real(-s)], [real(s), real(co)]]
            }
            Gate::Cx(..) => return None,
        })
    }
}

/// Gates in application order plus a global phase e^{iφ}.
#[derive(Debug, Clone, PartialEq)]
pub struct GateList {
    pub width: usize,
    pub gates: Vec<Gate>,
    pub global_phase: f64,
}

impl GateList {
    pub fn new(width: usize) -> Self {
        GateList {
            width,
            gates: Vec::new(),
            global_phase: 0.0,
        }
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let qs = gate.qubits();
        if qs.iter().any(|&q| q >= self.width) {
            return Err(Error::Dimension(format!(
                "gate {gate:?} outside a {}-qubit circuit",
                self.width
            )));
        }
        if let Gate::Cx(a, b) = gate {
            if a == b {
                return Err(Error::Parameter("CNOT control equals target".into()));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Applies the gates to a state vector, qubit 0 most significant.
    pub fn apply(&self, psi: &mut [C64]) {
        let n = self.width;
        for g in &self.gates {
            match *g {
                Gate::Cx(ctl, tgt) => {
                    let cm = 1usize << (n - 1 - ctl);
                    let tm = 1usize << (n - 1 - tgt);
                    for i in 0..psi.len() {
                        if i & cm != 0 && i & tm == 0 {
                            psi.swap(i, i | tm);
                        }
                    }
                }
                _ => {
                    let q = g.qubits()[0];
                    let m = g.single_matrix().expect("single-qubit gate");
                    let mask = 1usize << (n - 1 - q);
                    for i in 0..psi.len() {
                        if i & mask == 0 {
                            let (a, b) = (psi[i], psi[i | mask]);
                            psi[i] = m[0][0] * a + m[0][1] * b;
                            psi[i | mask] = m[1][0] * a + m[1][1] * b;
                        }
                    }
                }
            }
        }
        if self.global_phase != 0.0 {
            let ph = C64::from_polar(1.0, self.global_phase);
            for z in psi.iter_mut() {
                *z *= ph;
            }
        }
    }

    pub fn unitary(&self) -> CMat {
        let d = 1usize << self.width;
        let mut u = CMat::zeros(d, d);
        let mut col = vec![ZERO; d];
        for j in 0..d {
            col.iter_mut().for_each(|z| *z = ZERO);
            col[j] = ONE;
            self.apply(&mut col);
            for i in 0..d {
                u[(i, j)] = col[i];
            }
        }
        u
    }

    pub fn to_qasm(&self) -> String {
        let mut s = String::new();
        s.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
        let _ = writeln!(s, "qreg q[{}];", self.width);
        if self.global_phase != 0.0 {
            let _ = writeln!(s, "// global_phase {:.17e}", self.global_phase);
        }
        for g in &self.gates {
            let _ = match *g {
                Gate::H(q) => writeln!(s, "h q[{q}];"),
                Gate::S(q) => writeln!(s, "s q[{q}];"),
                Gate::Sdg(q) => writeln!(s, "sdg q[{q}];"),
                Gate::X(q) => writeln!(s, "x q[{q}];"),
                Gate::Cx(a, b) => writeln!(s, "cx q[{a}],q[{b}];"),
                Gate::Rz(q, th) => writeln!(s, "rz({th:.17e}) q[{q}];"),
                Gate::Ry(q, th) => writeln!(s, "ry({th:.17e}) q[{q}];"),
            };
        }
        s
    }

    pub fn from_qasm(text: &str) -> Result<Self> {
        let mut width = None;
        let mut gates = Vec::new();
        let mut phase = 0.0;
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let err = |msg: &str| Error::Parse {
                line: line_no,
                msg: msg.to_string(),
            };
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix("// global_phase") {
                phase = rest.trim().parse().map_err(|_| err("bad global phase"))?;
                continue;
            }
            if line.is_empty() || line.starts_with("//") || line.starts_with("OPENQASM") || line.starts_with("include") {
                continue;
            }
            let line = line
                .strip_suffix(';')
                .ok_or_else(|| err("missing semicolon"))?;
            if let Some(rest) = line.strip_prefix("qreg q[") {
                let n = rest.strip_suffix(']').ok_or_else(|| err("bad qreg"))?;
                width = Some(n.parse().map_err(|_| err("bad qreg size"))?);
                continue;
            }
            let (head, args) = line.split_once(' ').ok_or_else(|| err("missing operands"))?;
            let qubits: Vec<usize> = args
                .split(',')
                .map(|a| {
                    a.trim()
                        .strip_prefix("q[")
                        .and_then(|x| x.strip_suffix(']'))
                        .and_then(|x| x.parse().ok())
                        .ok_or_else(|| err("bad qubit operand"))
                })
                .collect::<Result<_>>()?;
            let (name, param) = match head.split_once('(') {
                Some((n, p)) => {
                    let p = p.strip_suffix(')').ok_or_else(|| err("bad parameter"))?;
                    (n, Some(p.parse::<f64>().map_err(|_| err("bad parameter"))?))
                }
                None => (head, None),
            };
            let q0 = qubits[0];
            let gate = match (name, param, qubits.len()) {
                ("h", None, 1) => Gate::H(q0),
                ("s", None, 1) => Gate::S(q0),
                ("sdg", None, 1) => Gate::Sdg(q0),
                ("x", None, 1) => Gate::X(q0),
                ("cx", None, 2) => Gate::Cx(q0, qubits[1]),
                ("rz", Some(th), 1) => Gate::Rz(q0, th),
                ("ry", Some(th), 1) => Gate::Ry(q0, th),
                _ => return Err(err(&format!("unsupported instruction `{head}`"))),
            };
            gates.push(gate);
        }
        let width = width.ok_or(Error::Parse {
            line: 0,
            msg: "no qreg declaration".into(),
        })?;
        let mut out = GateList::new(width);
        out.global_phase = phase;
        for g in gates {
            out.push(g)?;
        }
        Ok(out)
    }
}

/// Circuit for e^{−i(θ/2)·c·P} with real coefficient c: basis change, CNOT staircase, RZ, unwind.
pub fn synthesize_pauli_exponential(term: &PauliTerm, theta: f64) -> Result<GateList> {
    if term.coeff.im.abs() > 1e-14 {
        return Err(Error::Parameter("Pauli exponential needs a real coefficient".into()));
    }
    let coeff = term.coeff.re;
    if coeff == 0.0 {
        return Err(Error::Parameter("zero-coefficient Pauli term".into()));
    }
    let width = term.qubit_count();
    let mut out = GateList::new(width);
    let active: Vec<usize> = (0..width)
        .filter(|&q| term.letters[q] != Pauli::I)
        .collect();
    if active.is_empty() {
        out.global_phase = -theta * coeff / 2.0;
        return Ok(out);
    }
    for &q in &active {
        match term.letters[q] {
            Pauli::X => out.push(Gate::H(q))?,
            Pauli::Y => {
                out.push(Gate::Sdg(q))?;
                out.push(Gate::H(q))?;
            }
            _ => {}
        }
    }
    for w in active.windows(2) {
        out.push(Gate::Cx(w[0], w[1]))?;
    }
    let target = *active.last().unwrap();
    out.push(Gate::Rz(target, theta * coeff))?;
    for w in active.windows(2).rev() {
        out.push(Gate::Cx(w[0], w[1]))?;
    }
    for &q in &active {
        match term.letters[q] {
            Pauli::X => out.push(Gate::H(q))?,
            Pauli::Y => {
                out.push(Gate::H(q))?;
                out.push(Gate::S(q))?;
            }
            _ => {}
        }
    }
    Ok(out)
}

/// p′ = p⊗Y and q′ = q⊗X on an ancilla appended last, with numerical checks.
#[derive(Debug, Clone)]
pub struct GadgetReport {
    pub p_prime: CMat,
    pub q_prime: CMat,
    /// max over random φ of ‖[p′,q′](φ⊗|0⟩) + i{p,q}φ⊗|0⟩‖
    pub commutator_residual: f64,
    /// ‖e^{t[p′,q′]}(φ⊗|0⟩) − (e^{−it{p,q}}φ)⊗|0⟩‖
    pub evolution_residual: f64,
}

pub fn gadget_anticommutator(p: &CMat, q: &CMat, t: f64, seed: u64) -> Result<GadgetReport> {
    if !p.is_square() || p.shape() != q.shape() {
        return Err(Error::Dimension(format!(
            "gadget operands {:?} and {:?}",
            p.shape(),
            q.shape()
        )));
    }
    let y = Pauli::Y.matrix();
    let x = Pauli::X.matrix();
    let p_prime = kron(p, &y);
    let q_prime = kron(q, &x);
    let comm = commutator(&p_prime, &q_prime);
    let anti = anticommutator(p, q);
    let evo_big = expm(&(&comm * real(t)));
    let evo_small = expm(&(&anti * c(0.0, -t)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = p.nrows();
    let (mut r1, mut r2) = (0.0f64, 0.0f64);
    for _ in 0..4 {
        let phi = random_state(d, &mut rng);
        let lifted = with_ancilla_zero(&phi);
        let want = with_ancilla_zero(&(&anti * &phi * c(0.0, -1.0)));
        r1 = r1.max((&comm * &lifted - want).norm());
        let want = with_ancilla_zero(&(&evo_small * &phi));
        r2 = r2.max((&evo_big * &lifted - want).norm());
    }
    Ok(GadgetReport {
        p_prime,
        q_prime,
        commutator_residual: r1,
        evolution_residual: r2,
    })
}

fn with_ancilla_zero(phi: &CVec) -> CVec {
    let mut out = CVec::zeros(2 * phi.len());
    for (i, z) in phi.iter().enumerate() {
        out[2 * i] = *z;
    }
    out
}

/// e^{−itp} e^{−itq} e^{itp} e^{itq}.
pub fn group_commutator(p: &CMat, q: &CMat, t: f64) -> CMat {
    unitary_evolution(p, t) * unitary_evolution(q, t) * unitary_evolution(p, -t) * unitary_evolution(q, -t)
}

/// ‖group_commutator − e^{−s·t²[p,q]}‖ with s = 1, or s = ½ for the halved exponent.
pub fn double_bracket_residual(p: &CMat, q: &CMat, t: f64, halved: bool) -> f64 {
    let s = if halved { 0.5 } else { 1.0 };
    let target = expm(&(commutator(p, q) * real(-s * t * t)));
    spectral_norm(&(group_commutator(p, q, t) - target))
}

/// t³ (‖[p,[p,q]]‖ + ‖[q,[q,p]]‖).
pub fn double_bracket_bound(p: &CMat, q: &CMat, t: f64) -> f64 {
    let pq = commutator(p, q);
    let qp = commutator(q, p);
    t.powi(3) * (spectral_norm(&commutator(p, &pq)) + spectral_norm(&commutator(q, &qp)))
}
