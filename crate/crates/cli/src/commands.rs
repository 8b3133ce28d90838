use std::fmt::Display;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use bosonq::block_encoding::{boson_block_encode, choose_xi};
use bosonq::downfolding::{nested_optimize, NestedConfig};
use bosonq::dynamics::{
    evolve_exact, synthesize_pauli_exponential, trotter_error_bound, trotter_evolve, trotter_step_unitary, GateList,
};
use bosonq::encodings::{fock_creation, RegisterKind, RegisterSpec};
use bosonq::flows::{default_ds, wegner_flow_sampled, xy_spectrum, DEFAULT_MAX_SAMPLES};
use bosonq::fock::FockSpace;
use bosonq::ground_state::{exact_diagonalize, holstein_trial_state, moments, pds_with_fallback};
use bosonq::linalg::{c, identity, kron, random_hermitian, random_state, unitary_evolution, CMat, CVec, ONE};
use bosonq::models::{
    bose_hubbard_fock_split, build_holstein, build_spin_boson, walk_observables_fock, BoseHubbardParams, Boundary,
    HolsteinParams, ModelSpec, SiteValues, SpinBosonParams,
};
use bosonq::open_systems::{build_liouvillian, propagate_lindblad_with, purity, LindbladSpec};
use bosonq::pauli::{Pauli, PauliSum};
use bosonq::state_prep::{plan_prep, simulate_prep, PrepPlan, PrepSimulation, Scheme};
use bosonq::trunc::{hamiltonian_cutoff, ScheduleKind, TruncationInput};
use bosonq::C64;

use crate::emit::{self, fmt_f64, Table};
use crate::{CliError, Common, Encoding, Format};

const DENSE_LIMIT: usize = 1 << 14;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError>
where
    T::Err: Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|e| invalid(format!("{what}: cannot parse '{x}': {e}"))))
        .collect()
}

/// `a..b` (inclusive, unit step), `a..b:step`, or a comma list.
pub fn parse_grid(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let grid = if let Some((a, rest)) = s.split_once("..") {
        let (b, step) = match rest.split_once(':') {
            Some((b, st)) => (b, parse_list::<f64>(st, what)?.first().copied().unwrap_or(f64::NAN)),
            None => (rest, 1.0),
        };
        let a: f64 = a.trim().parse().map_err(|e| invalid(format!("{what}: '{a}': {e}")))?;
        let b: f64 = b.trim().parse().map_err(|e| invalid(format!("{what}: '{b}': {e}")))?;
        if !(step > 0.0) || !a.is_finite() || !b.is_finite() || b < a {
            return Err(invalid(format!("{what}: bad range '{s}'")));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| a + i as f64 * step).collect()
    } else {
        parse_list::<f64>(s, what)?
    };
    if grid.is_empty() {
        return Err(invalid(format!("{what}: empty grid")));
    }
    Ok(grid)
}

fn required<'a>(v: &'a Option<String>, flag: &str) -> Result<&'a str, CliError> {
    v.as_deref().ok_or_else(|| invalid(format!("{flag} is required")))
}

fn positive(x: f64, what: &str) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(invalid(format!("{what} must be positive and finite, got {x}")))
    }
}

/// Reads a JSON document from a path, or inline when it starts with `{` or `[`.
fn read_json<T: for<'de> Deserialize<'de>>(src: &str) -> Result<T, CliError> {
    let trimmed = src.trim_start();
    let (text, origin) = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        (src.to_string(), "inline JSON".to_string())
    } else {
        let text = std::fs::read_to_string(src).map_err(|e| CliError::Io(format!("{src}: {e}")))?;
        (text, src.to_string())
    };
    serde_json::from_str(&text).map_err(|e| invalid(format!("{origin}: {e}")))
}

fn emit<T: Serialize + ?Sized>(common: &Common, default: Format, table: &Table, value: &T) -> Result<(), CliError> {
    let bytes = match common.format.unwrap_or(default) {
        Format::Json => emit::json(value)?,
        Format::Csv => table.to_csv()?,
        Format::Text => return Err(invalid("text output is only available for compile")),
    };
    emit::write_output(common.out.as_deref(), &bytes)
}

fn basis(dim: usize, index: usize) -> CVec {
    let mut v = CVec::zeros(dim);
    v[index] = ONE;
    v
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Trotter,
}

// compile

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct CompileArgs {
    /// Model JSON file or inline document {model, params, encoding}
    #[arg(long)]
    pub model: Option<String>,
    /// Also write one first-order Trotter step e^{-i dt H} as OpenQASM to this path
    #[arg(long)]
    pub circuits: Option<std::path::PathBuf>,
    /// Step used for --circuits
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
}

#[derive(Serialize)]
struct CompiledTerm {
    label: String,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct Compiled<'a> {
    model: &'a ModelSpec,
    registers: &'a [RegisterSpec],
    qubits: usize,
    terms: Vec<CompiledTerm>,
}

pub fn trotter_step_circuit(h: &PauliSum, dt: f64) -> Result<GateList, CliError> {
    let mut gl = GateList::new(h.qubit_count());
    for term in h.terms() {
        if term.coeff.im.abs() > 1e-12 {
            return Err(invalid(format!("non-Hermitian coefficient on {}", term.label())));
        }
        if term.is_identity() {
            gl.global_phase -= term.coeff.re * dt;
            continue;
        }
        let piece = synthesize_pauli_exponential(term, 2.0 * dt)?;
        for g in piece.gates {
            gl.push(g)?;
        }
        gl.global_phase += piece.global_phase;
    }
    Ok(gl)
}

pub fn compile(a: &CompileArgs, common: &Common) -> Result<(), CliError> {
    let spec: ModelSpec = read_json(required(&a.model, "--model")?)?;
    let h = spec.build()?;
    if let Some(path) = &a.circuits {
        let gl = trotter_step_circuit(&h.pauli, a.dt)?;
        std::fs::write(path, gl.to_qasm()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    let bytes = match common.format.unwrap_or(Format::Text) {
        Format::Text => h.pauli.to_text().into_bytes(),
        Format::Json => emit::json(&Compiled {
            model: &spec,
            registers: h.layout.specs(),
            qubits: h.layout.qubit_count(),
            terms: h
                .pauli
                .terms()
                .iter()
                .map(|t| CompiledTerm {
                    label: t.label(),
                    re: t.coeff.re,
                    im: t.coeff.im,
                })
                .collect(),
        })?,
        Format::Csv => {
            let mut t = Table::new(["label", "re", "im"]);
            for term in h.pauli.terms() {
                t.push(vec![term.label(), fmt_f64(term.coeff.re), fmt_f64(term.coeff.im)]);
            }
            t.to_csv()?
        }
    };
    emit::write_output(common.out.as_deref(), &bytes)
}

// evolve

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct EvolveArgs {
    /// Model JSON file or inline document
    #[arg(long)]
    pub model: Option<String>,
    /// Total time
    #[arg(long, default_value_t = 1.0)]
    pub time: f64,
    /// Trotter steps over the whole interval
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub order: u8,
    /// Number of output intervals; must divide --steps
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    /// Initial occupation per register, comma separated (vacuum when omitted)
    #[arg(long)]
    pub occupation: Option<String>,
}

#[derive(Serialize)]
struct EvolveRow {
    t: f64,
    error: f64,
    bound: Option<f64>,
    energy_exact: f64,
    energy_trotter: f64,
}

#[derive(Serialize)]
struct EvolveOut {
    qubits: usize,
    order: u8,
    steps: usize,
    diagonal_terms: usize,
    off_diagonal_terms: usize,
    rows: Vec<EvolveRow>,
}

fn is_diagonal(letters: &[Pauli]) -> bool {
    letters.iter().all(|p| matches!(p, Pauli::I | Pauli::Z))
}

pub fn evolve(a: &EvolveArgs, common: &Common) -> Result<(), CliError> {
    let spec: ModelSpec = read_json(required(&a.model, "--model")?)?;
    let h = spec.build()?;
    let specs = h.layout.specs();
    let occ = match &a.occupation {
        Some(s) => parse_list::<usize>(s, "--occupation")?,
        None => vec![0; specs.len()],
    };
    if occ.len() != specs.len() {
        return Err(invalid(format!("--occupation needs {} entries", specs.len())));
    }
    for (i, (s, &o)) in specs.iter().zip(&occ).enumerate() {
        let max = match s.kind {
            RegisterKind::Boson => s.cutoff.unwrap_or(0),
            _ => 1,
        };
        if o > max {
            return Err(invalid(format!("register {i}: occupation {o} above {max}")));
        }
    }
    if a.time < 0.0 || !a.time.is_finite() {
        return Err(invalid("--time must be non-negative"));
    }
    if a.steps == 0 || a.samples == 0 || a.steps % a.samples != 0 {
        return Err(invalid("--samples must be positive and divide --steps"));
    }
    let n = h.layout.qubit_count();
    let (diag, off): (Vec<_>, Vec<_>) = h.pauli.terms().iter().cloned().partition(|t| is_diagonal(&t.letters));
    let (nd, no) = (diag.len(), off.len());
    let k = PauliSum::from_terms(n, diag)?.to_matrix()?;
    let v = PauliSum::from_terms(n, off)?.to_matrix()?;
    let hm = &k + &v;
    let dt = a.time / a.steps as f64;
    let per = a.steps / a.samples;
    let step = trotter_step_unitary(&[k.clone(), v.clone()], dt, a.order)?;
    let u_exact = unitary_evolution(&hm, a.time / a.samples as f64);
    let psi0 = basis(hm.nrows(), h.layout.qubit_index(&occ));
    let (mut pe, mut pt) = (psi0.clone(), psi0);
    let energy = |p: &CVec| p.dotc(&(&hm * p)).re;
    let mut rows = Vec::with_capacity(a.samples + 1);
    for j in 0..=a.samples {
        if j > 0 {
            pe = &u_exact * &pe;
            for _ in 0..per {
                pt = &step * &pt;
            }
        }
        let t = a.time * j as f64 / a.samples as f64;
        let bound = match (a.order, j) {
            (1, 0) => Some(0.0),
            (1, _) => Some(trotter_error_bound(&k, &v, t, j * per)),
            _ => None,
        };
        rows.push(EvolveRow {
            t,
            error: (&pt - &pe).norm(),
            bound,
            energy_exact: energy(&pe),
            energy_trotter: energy(&pt),
        });
    }
    let mut header = vec!["t[1/energy]", "error"];
    if a.order == 1 {
        header.push("bound");
    }
    header.extend(["energy_exact", "energy_trotter"]);
    let mut table = Table::new(header);
    for r in &rows {
        let mut row = vec![fmt_f64(r.t), fmt_f64(r.error)];
        if let Some(b) = r.bound {
            row.push(fmt_f64(b));
        }
        row.extend([fmt_f64(r.energy_exact), fmt_f64(r.energy_trotter)]);
        table.push(row);
    }
    let out = EvolveOut {
        qubits: n,
        order: a.order,
        steps: a.steps,
        diagonal_terms: nd,
        off_diagonal_terms: no,
        rows,
    };
    emit(common, Format::Csv, &table, &out)
}

// walk

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct WalkArgs {
    #[arg(long, default_value_t = 5)]
    pub sites: usize,
    #[arg(long, default_value_t = 2)]
    pub cutoff: usize,
    /// Hopping amplitude t
    #[arg(long, default_value_t = 1.0)]
    pub hop: f64,
    /// On-site interaction U
    #[arg(long, default_value_t = 1.0)]
    pub u: f64,
    /// Nearest-neighbour interaction V
    #[arg(long, default_value_t = 0.0)]
    pub v: f64,
    /// Chemical potential (−U/2 when omitted)
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = 0.003)]
    pub time: f64,
    /// Trotter step
    #[arg(long, default_value_t = 1e-5)]
    pub dt: f64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub order: u8,
    /// Initially occupied sites, 0-based; repeats stack bosons
    #[arg(long, default_value = "1,3")]
    pub occupied: String,
    #[arg(long, value_enum, default_value_t = Method::Trotter)]
    pub method: Method,
}

#[derive(Serialize)]
struct WalkOut {
    method: Method,
    time: f64,
    steps: usize,
    params: BoseHubbardParams,
    gamma: Vec<Vec<f64>>,
    density: Vec<f64>,
}

pub fn walk(a: &WalkArgs, common: &Common) -> Result<(), CliError> {
    if a.sites == 0 || a.cutoff == 0 {
        return Err(invalid("--sites and --cutoff must be positive"));
    }
    let dim = (a.cutoff + 1)
        .checked_pow(a.sites as u32)
        .filter(|&d| d <= DENSE_LIMIT)
        .ok_or_else(|| invalid(format!("Fock dimension ({} ^ {}) above {DENSE_LIMIT}", a.cutoff + 1, a.sites)))?;
    let mut occ = vec![0usize; a.sites];
    for s in parse_list::<usize>(&a.occupied, "--occupied")? {
        if s >= a.sites {
            return Err(invalid(format!("site {s} outside the chain")));
        }
        occ[s] += 1;
        if occ[s] > a.cutoff {
            return Err(invalid(format!("site {s} exceeds cutoff {}", a.cutoff)));
        }
    }
    if a.time < 0.0 || !a.time.is_finite() {
        return Err(invalid("--time must be non-negative"));
    }
    positive(a.dt, "--dt")?;
    let params = BoseHubbardParams {
        n_sites: a.sites,
        t: a.hop,
        u: a.u,
        v: a.v,
        mu: SiteValues::Scalar(a.mu.unwrap_or(-0.5 * a.u)),
        cutoff: a.cutoff,
    };
    let (diag, hop) = bose_hubbard_fock_split(&params)?;
    let space = FockSpace::bosonic(vec![a.cutoff + 1; a.sites]);
    debug_assert_eq!(space.dim(), dim);
    let hd = space.dense(&diag)?;
    let hh = space.dense(&hop)?;
    let psi0 = basis(dim, space.index(&occ));
    let steps = ((a.time / a.dt).round() as usize).max(1);
    let psi = match a.method {
        Method::Exact => evolve_exact(&(&hd + &hh), &psi0, a.time)?,
        Method::Trotter => trotter_evolve(&[hd, hh], &psi0, a.time, steps, a.order)?,
    };
    let obs = walk_observables_fock(&psi, &space)?;
    let mut table = Table::new(["p", "q", "gamma"]);
    for p in 0..a.sites {
        for q in 0..a.sites {
            table.push(vec![p.to_string(), q.to_string(), fmt_f64(obs.gamma[(p, q)])]);
        }
    }
    let out = WalkOut {
        method: a.method,
        time: a.time,
        steps,
        params,
        gamma: matrix_rows(&obs.gamma),
        density: obs.density,
    };
    emit(common, Format::Csv, &table, &out)
}

// lindblad

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct LindbladArgs {
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 2.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 2.0)]
    pub omega: f64,
    /// Spin-boson coupling
    #[arg(long, default_value_t = 0.5)]
    pub g: f64,
    #[arg(long, default_value_t = 3)]
    pub cutoff: usize,
    /// Dephasing rate Γ
    #[arg(long, default_value_t = 0.1)]
    pub dephasing: f64,
    /// Heating rate γ
    #[arg(long, default_value_t = 0.05)]
    pub heating: f64,
    #[arg(long, default_value_t = 10.0)]
    pub time: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Emit a row every this many steps
    #[arg(long, default_value_t = 100)]
    pub every: usize,
    /// Initial spin and boson occupations
    #[arg(long, default_value = "0,0")]
    pub initial: String,
}

#[derive(Serialize)]
struct LindbladRow {
    t: f64,
    populations: Vec<f64>,
    n: f64,
    z_spin: f64,
    purity: f64,
}

#[derive(Serialize)]
struct LindbladOut {
    params: SpinBosonParams,
    dephasing: f64,
    heating: f64,
    dt: f64,
    rows: Vec<LindbladRow>,
}

pub fn lindblad(a: &LindbladArgs, common: &Common) -> Result<(), CliError> {
    let params = SpinBosonParams {
        delta: a.delta,
        epsilon: a.epsilon,
        omegas: vec![a.omega],
        couplings: vec![a.g],
        cutoffs: vec![a.cutoff],
    };
    let occ = parse_list::<usize>(&a.initial, "--initial")?;
    if occ.len() != 2 || occ[0] > 1 || occ[1] > a.cutoff {
        return Err(invalid("--initial takes spin (0 or 1) and boson occupation up to the cutoff"));
    }
    let eh = build_spin_boson(&params, Encoding::Binary.into())?;
    let h = eh.fock_matrix()?;
    let space = eh.fock_space();
    let d = space.dim();
    let nb = a.cutoff + 1;
    let b = kron(&identity(2), &fock_creation(a.cutoff).adjoint());
    let number = kron(&identity(2), &CMat::from_diagonal(&CVec::from_fn(nb, |i, _| c(i as f64, 0.0))));
    let z = kron(&Pauli::Z.matrix(), &identity(nb));
    let l = build_liouvillian(&LindbladSpec::new(h, a.dephasing, a.heating, b)?);
    let psi = basis(d, space.index(&occ));
    let rho0 = &psi * psi.adjoint();
    let mut rows = Vec::new();
    propagate_lindblad_with(&l, &rho0, a.time, a.dt, a.every, |t, rho| {
        rows.push(LindbladRow {
            t,
            populations: (0..d).map(|i| rho[(i, i)].re).collect(),
            n: (rho * &number).trace().re,
            z_spin: (rho * &z).trace().re,
            purity: purity(rho),
        });
    })?;
    let mut header = vec!["t[1/omega]".to_string()];
    header.extend((0..d).map(|i| {
        let o = space.occupation(i);
        format!("p_s{}_n{}", o[0], o[1])
    }));
    header.extend(["n".to_string(), "z_spin".to_string(), "purity".to_string()]);
    let mut table = Table::new(header);
    for r in &rows {
        let mut row = vec![fmt_f64(r.t)];
        row.extend(r.populations.iter().map(|&p| fmt_f64(p)));
        row.extend([fmt_f64(r.n), fmt_f64(r.z_spin), fmt_f64(r.purity)]);
        table.push(row);
    }
    let out = LindbladOut {
        params,
        dephasing: a.dephasing,
        heating: a.heating,
        dt: a.dt,
        rows,
    };
    emit(common, Format::Csv, &table, &out)
}

// pds

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct PdsArgs {
    /// Coupling grid: list or a..b[:step]
    #[arg(long, default_value = "0,0.5,1,1.5,2")]
    pub g: String,
    /// Largest PDS order K
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 3)]
    pub sites: usize,
    #[arg(long, default_value_t = 1.0)]
    pub v: f64,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1)]
    pub cutoff: usize,
    #[arg(long, value_enum, default_value_t = Encoding::Binary)]
    pub encoding: Encoding,
    /// Open chain instead of a ring
    #[arg(long)]
    pub open: bool,
}

#[derive(Serialize)]
struct PdsRow {
    g: f64,
    e_ed: f64,
    pds: Vec<f64>,
    /// Order actually used after fallback on singular moment matrices.
    k_used: Vec<usize>,
}

fn pds_point(a: &PdsArgs, g: f64) -> Result<PdsRow, CliError> {
    let p = HolsteinParams {
        n_sites: a.sites,
        v: a.v,
        omega: a.omega,
        g,
        cutoff: a.cutoff,
        boundary: if a.open { Boundary::Open } else { Boundary::Periodic },
    };
    let h = build_holstein(&p, a.encoding.into())?;
    let hm = h.pauli.to_matrix()?;
    let phi = holstein_trial_state(&h.layout)?;
    let e_ed = exact_diagonalize(&hm)?.0[0];
    let mu = moments(&hm, &phi, 2 * a.k - 1)?;
    let mut pds = Vec::with_capacity(a.k);
    let mut k_used = Vec::with_capacity(a.k);
    for k in 1..=a.k {
        let r = pds_with_fallback(&mu, k)?;
        pds.push(r.lowest_root());
        k_used.push(r.k);
    }
    Ok(PdsRow { g, e_ed, pds, k_used })
}

pub fn pds(a: &PdsArgs, common: &Common) -> Result<(), CliError> {
    if a.k == 0 {
        return Err(invalid("--k must be at least 1"));
    }
    let grid = parse_grid(&a.g, "--g")?;
    let rows = grid.par_iter().map(|&g| pds_point(a, g)).collect::<Result<Vec<_>, _>>()?;
    let mut header = vec!["g".to_string(), "E_ED".to_string()];
    header.extend((1..=a.k).map(|k| format!("E_PDS{k}")));
    let mut table = Table::new(header);
    for r in &rows {
        let mut row = vec![fmt_f64(r.g), fmt_f64(r.e_ed)];
        row.extend(r.pds.iter().map(|&e| fmt_f64(e)));
        table.push(row);
    }
    emit(common, Format::Csv, &table, &rows)
}

// downfold

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct DownfoldArgs {
    /// Three on-site energies
    #[arg(long, default_value = "-1,0,1")]
    pub mu: String,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 1.0)]
    pub v: f64,
    #[arg(long, default_value_t = 0.5)]
    pub u: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub energy_tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_macro: usize,
}

pub fn downfold(a: &DownfoldArgs, common: &Common) -> Result<(), CliError> {
    let mu = parse_list::<f64>(&a.mu, "--mu")?;
    let mu: [f64; 3] = mu.try_into().map_err(|_| invalid("--mu takes exactly three values"))?;
    let cfg = NestedConfig {
        mu,
        t: a.t,
        v: a.v,
        u: a.u,
        energy_tol: positive(a.energy_tol, "--energy-tol")?,
        max_macro: a.max_macro,
    };
    let res = nested_optimize(&cfg)?;
    let mut table = Table::new(["iteration", "abs_error[energy]"]);
    for s in &res.trace {
        table.push(vec![s.iteration.to_string(), fmt_f64(s.error)]);
    }
    #[derive(Serialize)]
    struct Out<'a> {
        config: &'a NestedConfig,
        result: &'a bosonq::downfolding::NestedResult,
    }
    emit(common, Format::Json, &table, &Out { config: &cfg, result: &res })
}

// trunc

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct TruncArgs {
    #[arg(long, default_value_t = 1)]
    pub lambda0: usize,
    #[arg(long, default_value_t = 2.0)]
    pub chi: f64,
    /// Time grid: list or a..b[:step]
    #[arg(long = "t", default_value = "1..10")]
    pub t: String,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub modes: usize,
}

#[derive(Serialize)]
struct TruncRow {
    t: f64,
    epsilon: f64,
    modes: usize,
    delta_lambda: usize,
    steps: usize,
    lambda_tilde: usize,
    governing: ScheduleKind,
    bounds: [f64; 3],
}

pub fn trunc(a: &TruncArgs, common: &Common) -> Result<(), CliError> {
    let grid = parse_grid(&a.t, "--t")?;
    let rows = grid
        .par_iter()
        .map(|&t| {
            let input = TruncationInput::new(a.lambda0, a.chi, t, a.eps).with_modes(a.modes);
            let cut = hamiltonian_cutoff(&input)?;
            let g = cut.governing();
            Ok(TruncRow {
                t,
                epsilon: a.eps,
                modes: a.modes,
                delta_lambda: g.delta_lambda,
                steps: g.steps,
                lambda_tilde: cut.cutoff,
                governing: g.kind,
                bounds: [cut.state.total_bound, cut.hamiltonian.total_bound, cut.reverse.total_bound],
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut table = Table::new(["t[1/omega]", "eps", "N", "delta_lambda", "s", "lambda_tilde"]);
    for r in &rows {
        table.push(vec![
            fmt_f64(r.t),
            fmt_f64(r.epsilon),
            r.modes.to_string(),
            r.delta_lambda.to_string(),
            r.steps.to_string(),
            r.lambda_tilde.to_string(),
        ]);
    }
    emit(common, Format::Csv, &table, &rows)
}

// blockenc

#[derive(Debug, Args)]
pub struct BlockencArgs {
    /// Truncated dimension Λ (power of 2)
    #[arg(long, default_value_t = 8)]
    pub lambda: usize,
    /// Riemann-sum resolution Ξ (power of 2); 256 when neither --xi nor --delta is given
    #[arg(long, conflicts_with = "delta")]
    pub xi: Option<usize>,
    /// Target accuracy; picks the smallest Ξ with 2/Ξ ≤ δ
    #[arg(long)]
    pub delta: Option<f64>,
}

pub fn blockenc(a: &BlockencArgs, common: &Common) -> Result<(), CliError> {
    let xi = match (a.xi, a.delta) {
        (Some(x), _) => x,
        (None, Some(d)) => choose_xi(d)?,
        (None, None) => 256,
    };
    let enc = boson_block_encode(a.lambda, xi)?;
    let mut table = Table::new([
        "lambda",
        "xi",
        "error",
        "bound",
        "hadamards",
        "shift_bit_ops",
        "inequality_bit_ops",
        "total",
    ]);
    table.push(vec![
        enc.lambda.to_string(),
        enc.xi.to_string(),
        fmt_f64(enc.error),
        fmt_f64(enc.bound),
        enc.cost.hadamards.to_string(),
        enc.cost.shift_bit_ops.to_string(),
        enc.cost.inequality_bit_ops.to_string(),
        enc.cost.total.to_string(),
    ]);
    emit(common, Format::Json, &table, &enc)
}

// prep

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    A,
    B,
    Both,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct PrepArgs {
    /// Coefficients c_k, each `re` or `re:im`, comma separated
    #[arg(long)]
    pub coefficients: Option<String>,
    /// Draw this many random coefficients from --seed instead
    #[arg(long, conflicts_with = "coefficients")]
    pub random: Option<usize>,
    #[arg(long, value_enum, default_value_t = SchemeArg::Both)]
    pub scheme: SchemeArg,
    /// Basis labels of the target states φ_k (0..K when omitted)
    #[arg(long)]
    pub targets: Option<String>,
    /// Target register dimension (largest label + 1 when omitted)
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Serialize)]
struct PrepOut {
    targets: Vec<usize>,
    dim: usize,
    plan: PrepPlan,
    simulation: PrepSimulation,
}

fn parse_complex(s: &str) -> Result<C64, CliError> {
    let parts = s.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>();
    match parts.as_deref() {
        Ok([re]) => Ok(c(*re, 0.0)),
        Ok([re, im]) => Ok(c(*re, *im)),
        _ => Err(invalid(format!("--coefficients: cannot parse '{s}'"))),
    }
}

pub fn prep(a: &PrepArgs, common: &Common) -> Result<(), CliError> {
    let coeffs: Vec<C64> = match (&a.coefficients, a.random) {
        (Some(s), _) => s.split(',').map(|x| parse_complex(x)).collect::<Result<_, _>>()?,
        (None, Some(k)) if k > 0 => {
            let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
            random_state(k, &mut rng).iter().copied().collect()
        }
        _ => return Err(invalid("--coefficients or a positive --random is required")),
    };
    let k = coeffs.len();
    let labels = match &a.targets {
        Some(s) => parse_list::<usize>(s, "--targets")?,
        None => (0..k).collect(),
    };
    if labels.len() != k {
        return Err(invalid(format!("{} targets for {k} coefficients", labels.len())));
    }
    let dim = a.dim.unwrap_or(labels.iter().max().map_or(0, |m| m + 1));
    if labels.iter().any(|&l| l >= dim) {
        return Err(invalid(format!("target label outside dimension {dim}")));
    }
    let targets: Vec<CVec> = labels.iter().map(|&l| basis(dim, l)).collect();
    let schemes = match a.scheme {
        SchemeArg::A => vec![Scheme::A],
        SchemeArg::B => vec![Scheme::B],
        SchemeArg::Both => vec![Scheme::A, Scheme::B],
    };
    let mut outs = Vec::new();
    let mut table = Table::new(["scheme", "K", "l1_norm", "probability", "fidelity", "amplification"]);
    for s in schemes {
        let plan = plan_prep(&coeffs, s)?;
        let sim = simulate_prep(&plan, &targets)?;
        let amp = match s {
            Scheme::A => plan.amplification_a,
            Scheme::B => plan.amplification_b,
        };
        table.push(vec![
            format!("{s:?}"),
            k.to_string(),
            fmt_f64(plan.l1_norm),
            fmt_f64(sim.probability),
            fmt_f64(sim.fidelity),
            amp.to_string(),
        ]);
        outs.push(PrepOut {
            targets: labels.clone(),
            dim,
            plan,
            simulation: sim,
        });
    }
    emit(common, Format::Json, &table, &outs)
}

// wegner

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MatrixInput {
    Real(Vec<Vec<f64>>),
    Complex { re: Vec<Vec<f64>>, im: Vec<Vec<f64>> },
}

fn square(rows: &[Vec<f64>]) -> Result<usize, CliError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(invalid("matrix must be square and non-empty"));
    }
    Ok(n)
}

impl MatrixInput {
    fn to_cmat(&self) -> Result<CMat, CliError> {
        match self {
            MatrixInput::Real(r) => {
                let n = square(r)?;
                Ok(CMat::from_fn(n, n, |i, j| c(r[i][j], 0.0)))
            }
            MatrixInput::Complex { re, im } => {
                let n = square(re)?;
                if square(im)? != n {
                    return Err(invalid("re and im differ in size"));
                }
                Ok(CMat::from_fn(n, n, |i, j| c(re[i][j], im[i][j])))
            }
        }
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct WegnerArgs {
    /// Hermitian matrix as JSON rows, or {"re": rows, "im": rows}; file or inline
    #[arg(long)]
    pub matrix: Option<String>,
    /// Size of a seeded random Hermitian matrix used when --matrix is absent
    #[arg(long, default_value_t = 8)]
    pub random: usize,
    #[arg(long, default_value_t = 400.0)]
    pub s_max: f64,
    /// Flow step (0.01/‖H0‖² when omitted)
    #[arg(long)]
    pub ds: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MAX_SAMPLES)]
    pub max_samples: usize,
}

pub fn wegner(a: &WegnerArgs, common: &Common) -> Result<(), CliError> {
    let h0 = match &a.matrix {
        Some(src) => read_json::<MatrixInput>(src)?.to_cmat()?,
        None if a.random > 0 => random_hermitian(a.random, &mut ChaCha8Rng::seed_from_u64(common.seed)),
        None => return Err(invalid("--random must be positive")),
    };
    let ds = a.ds.unwrap_or_else(|| default_ds(&h0));
    let traj = wegner_flow_sampled(&h0, ds, a.s_max, a.max_samples)?;
    let n = h0.nrows();
    let mut header = vec!["s[1/energy^2]".to_string(), "off_diagonal_norm".to_string()];
    header.extend((0..n).map(|i| format!("d{i}")));
    let mut table = Table::new(header);
    for st in &traj.samples {
        let mut row = vec![fmt_f64(st.s), fmt_f64(st.off_diagonal_norm)];
        row.extend(st.diagonal.iter().map(|&d| fmt_f64(d)));
        table.push(row);
    }
    emit(common, Format::Csv, &table, &traj)?;
    if !traj.converged {
        let last = traj.last();
        return Err(CliError::Convergence(format!(
            "off-diagonal norm {:e} above {:e} at s = {}; stalled pairs {:?}",
            last.off_diagonal_norm, traj.threshold, last.s, traj.stalled
        )));
    }
    Ok(())
}

// xy

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct XyArgs {
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub j: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
}

pub fn xy(a: &XyArgs, common: &Common) -> Result<(), CliError> {
    let s = xy_spectrum(a.n, a.j, a.gamma, a.lambda)?;
    let mut table = Table::new(["k[2pi/N]", "epsilon_k", "delta_k", "E_k"]);
    for i in 0..s.k.len() {
        table.push(vec![
            s.k[i].to_string(),
            fmt_f64(s.epsilon_k[i]),
            fmt_f64(s.delta_k[i]),
            fmt_f64(s.energy_k[i]),
        ]);
    }
    emit(common, Format::Csv, &table, &s)
}
