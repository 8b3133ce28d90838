//! Bosonic coupled-cluster downfolding and the Trotterized unitary ansatz for
//! two bosons on three levels.
//!
//! Everything here works in a fixed-particle-number sector with real
//! amplitudes. Mode 0 is the reference mode: Φ = (b₀†)^N|vac⟩/√N!.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{bose_hubbard_terms, FockSpace, FockTerm, LocalOp};
use crate::linalg::{expm, real};

/// C(m + n − 1, n), the number of ways to put `n` bosons in `m` modes.
pub fn fci_dims(m: usize, n: usize) -> Result<BigUint> {
    if m < 1 || n < 1 {
        return Err(Error::Parameter(format!("need M, N ≥ 1, got M={m}, N={n}")));
    }
    Ok(binomial(m + n - 1, n))
}

pub fn act_dims(m_act: usize, n: usize) -> Result<BigUint> {
    fci_dims(m_act, n)
}

fn binomial(n: usize, k: usize) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

pub(crate) fn expm_real(a: &DMatrix<f64>) -> DMatrix<f64> {
    expm(&a.map(real)).map(|z| z.re)
}

/// Occupation configurations with a fixed total particle number.
#[derive(Debug, Clone)]
pub struct BosonSector {
    modes: usize,
    particles: usize,
    configs: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
}

impl BosonSector {
    /// All configurations, reverse-lexicographic so that |N,0,…,0⟩ is index 0.
    pub fn new(modes: usize, particles: usize) -> Result<Self> {
        if modes < 1 {
            return Err(Error::Parameter("sector needs at least one mode".into()));
        }
        let mut configs = Vec::new();
        let mut cur = vec![0; modes];
        fill(&mut cur, 0, particles, &mut configs);
        Self::from_configs(modes, particles, configs)
    }

    /// Sector with an explicit configuration order.
    pub fn from_configs(modes: usize, particles: usize, configs: Vec<Vec<usize>>) -> Result<Self> {
        let mut lookup = HashMap::new();
        for (i, c) in configs.iter().enumerate() {
            if c.len() != modes || c.iter().sum::<usize>() != particles {
                return Err(Error::Parameter(format!("configuration {c:?} is not in the sector")));
            }
            if lookup.insert(c.clone(), i).is_some() {
                return Err(Error::Parameter(format!("configuration {c:?} repeated")));
            }
        }
        Ok(BosonSector {
            modes,
            particles,
            configs,
            lookup,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn configs(&self) -> &[Vec<usize>] {
        &self.configs
    }

    pub fn index_of(&self, occ: &[usize]) -> Option<usize> {
        self.lookup.get(occ).copied()
    }

    pub fn reference_index(&self) -> usize {
        let mut occ = vec![0; self.modes];
        occ[0] = self.particles;
        self.lookup[&occ]
    }

    pub fn reference(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        v[self.reference_index()] = 1.0;
        v
    }

    /// Matrix of a number-conserving operator; components leaving the sector are dropped.
    pub fn operator(&self, terms: &[FockTerm]) -> DMatrix<f64> {
        let space = FockSpace::bosonic(vec![self.particles + 2; self.modes]);
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for (col, occ) in self.configs.iter().enumerate() {
            for (coeff, ops) in terms {
                if let Some((amp, out)) = space.apply(ops, occ) {
                    if let Some(row) = self.index_of(&out) {
                        m[(row, col)] += coeff.re * amp;
                    }
                }
            }
        }
        m
    }

    /// Sector indices whose occupation lies entirely in `active` modes.
    pub fn active_indices(&self, active: &[usize]) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| {
                self.configs[i]
                    .iter()
                    .enumerate()
                    .all(|(m, &n)| n == 0 || active.contains(&m))
            })
            .collect()
    }
}

fn fill(cur: &mut Vec<usize>, k: usize, left: usize, out: &mut Vec<Vec<usize>>) {
    if k + 1 == cur.len() {
        cur[k] = left;
        out.push(cur.clone());
        return;
    }
    for n in (0..=left).rev() {
        cur[k] = n;
        fill(cur, k + 1, left - n, out);
    }
    cur[k] = 0;
}

/// Bose-Hubbard Hamiltonian restricted to the N-particle sector.
pub fn bose_hubbard_sector(sector: &BosonSector, t: f64, u: f64, v: f64, mu: &[f64]) -> DMatrix<f64> {
    sector.operator(&bose_hubbard_terms(sector.modes(), t, u, v, mu))
}

/// Excitations b†_{a1}…b†_{ak} b₀^k keyed by sorted target multisets, each
/// flagged internal (all targets active) or external.
#[derive(Debug, Clone)]
pub struct ExcitationBasis {
    pub modes: usize,
    pub particles: usize,
    pub active: Vec<usize>,
    pub excitations: Vec<Vec<usize>>,
    pub internal: Vec<bool>,
}

impl ExcitationBasis {
    pub fn new(modes: usize, particles: usize, active: &[usize], excitations: Vec<Vec<usize>>) -> Result<Self> {
        if !active.contains(&0) {
            return Err(Error::Parameter("active space must contain the reference mode 0".into()));
        }
        let mut internal = Vec::with_capacity(excitations.len());
        for ex in &excitations {
            let ok = !ex.is_empty()
                && ex.len() <= particles
                && ex.iter().all(|&a| a >= 1 && a < modes)
                && ex.windows(2).all(|w| w[0] <= w[1]);
            if !ok {
                return Err(Error::Parameter(format!("invalid excitation {ex:?}")));
            }
            internal.push(ex.iter().all(|a| active.contains(a)));
        }
        Ok(ExcitationBasis {
            modes,
            particles,
            active: active.to_vec(),
            excitations,
            internal,
        })
    }

    /// Every excitation of rank 1..=max_rank.
    pub fn up_to_rank(modes: usize, particles: usize, max_rank: usize, active: &[usize]) -> Result<Self> {
        let mut ex = Vec::new();
        for k in 1..=max_rank.min(particles) {
            multisets(1, modes, k, &mut Vec::new(), &mut ex);
        }
        Self::new(modes, particles, active, ex)
    }

    pub fn full(modes: usize, particles: usize, active: &[usize]) -> Result<Self> {
        Self::up_to_rank(modes, particles, particles, active)
    }

    pub fn len(&self) -> usize {
        self.excitations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.excitations.is_empty()
    }

    pub fn operator(&self, sector: &BosonSector, i: usize) -> DMatrix<f64> {
        let ex = &self.excitations[i];
        let mut ops: Vec<(usize, LocalOp)> = ex.iter().map(|&a| (a, LocalOp::Create)).collect();
        ops.extend(std::iter::repeat((0, LocalOp::Annihilate)).take(ex.len()));
        sector.operator(&[(real(1.0), ops)])
    }

    /// Sector index of the configuration reached from the reference.
    pub fn target_config(&self, sector: &BosonSector, i: usize) -> usize {
        let mut occ = vec![0; self.modes];
        occ[0] = self.particles - self.excitations[i].len();
        for &a in &self.excitations[i] {
            occ[a] += 1;
        }
        sector.index_of(&occ).expect("excitation leaves the sector")
    }

    /// Σ t_μ E_μ over the selected excitations.
    pub fn cluster(&self, sector: &BosonSector, amps: &[f64], select: impl Fn(usize) -> bool) -> DMatrix<f64> {
        let d = sector.dim();
        let mut t = DMatrix::zeros(d, d);
        for i in 0..self.len() {
            if select(i) && amps[i] != 0.0 {
                t += self.operator(sector, i) * amps[i];
            }
        }
        t
    }
}

fn multisets(start: usize, modes: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if k == 0 {
        out.push(cur.clone());
        return;
    }
    for a in start..modes {
        cur.push(a);
        multisets(a, modes, k - 1, cur, out);
        cur.pop();
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CcSolution {
    pub amplitudes: Vec<f64>,
    pub energy: f64,
    /// ‖Q e^{−T} H e^{T} Φ‖ over the configurations reached by the basis.
    pub residual: f64,
    pub iterations: usize,
}

fn check_sector(h: &DMatrix<f64>, sector: &BosonSector, basis: &ExcitationBasis) -> Result<()> {
    if h.nrows() != sector.dim() || !h.is_square() {
        return Err(Error::Dimension(format!(
            "Hamiltonian {:?} for a sector of dimension {}",
            h.shape(),
            sector.dim()
        )));
    }
    if basis.modes != sector.modes() || basis.particles != sector.particles() {
        return Err(Error::Dimension("excitation basis and sector disagree".into()));
    }
    Ok(())
}

struct Similarity {
    hbar_phi: DVector<f64>,
    hbar: DMatrix<f64>,
}

fn similarity(h: &DMatrix<f64>, t: &DMatrix<f64>, phi: &DVector<f64>) -> Similarity {
    let hbar = expm_real(&(-t)) * h * expm_real(t);
    let hbar_phi = &hbar * phi;
    Similarity { hbar_phi, hbar }
}

/// Newton iteration on the projected equations ⟨μ|e^{−T}He^{T}|Φ⟩ = 0 with
/// Jacobian ⟨μ|[H̄, E_ν]|Φ⟩.
pub fn solve_cc_amplitudes(h: &DMatrix<f64>, sector: &BosonSector, basis: &ExcitationBasis) -> Result<CcSolution> {
    check_sector(h, sector, basis)?;
    const MAX_ITER: usize = 100;
    const TOL: f64 = 1e-12;
    let phi = sector.reference();
    let r0 = sector.reference_index();
    let n = basis.len();
    let ops: Vec<DMatrix<f64>> = (0..n).map(|i| basis.operator(sector, i)).collect();
    let ex_phi: Vec<DVector<f64>> = ops.iter().map(|e| e * &phi).collect();
    let rows: Vec<usize> = (0..n).map(|i| basis.target_config(sector, i)).collect();

    let build_t = |amps: &[f64]| {
        let mut t = DMatrix::zeros(sector.dim(), sector.dim());
        for (e, a) in ops.iter().zip(amps) {
            t += e * *a;
        }
        t
    };
    let resid = |s: &Similarity| DVector::from_iterator(n, rows.iter().map(|&r| s.hbar_phi[r]));

    let mut amps = vec![0.0; n];
    let mut s = similarity(h, &build_t(&amps), &phi);
    let mut r = resid(&s);
    for it in 0..MAX_ITER {
        if !r.norm().is_finite() {
            break;
        }
        if r.norm() <= TOL || n == 0 {
            return Ok(CcSolution {
                energy: s.hbar_phi[r0],
                residual: r.norm(),
                amplitudes: amps,
                iterations: it,
            });
        }
        let mut jac = DMatrix::zeros(n, n);
        for nu in 0..n {
            let col = &s.hbar * &ex_phi[nu] - &ops[nu] * &s.hbar_phi;
            for (mu, &row) in rows.iter().enumerate() {
                jac[(mu, nu)] = col[row];
            }
        }
        let step = jac
            .lu()
            .solve(&(-&r))
            .ok_or_else(|| Error::Convergence {
                what: "CC Newton (singular Jacobian)".into(),
                iterations: it,
                residual: r.norm(),
            })?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = amps.iter().zip(step.iter()).map(|(a, d)| a + lambda * d).collect();
            let ts = similarity(h, &build_t(&trial), &phi);
            let tr = resid(&ts);
            if tr.norm() < r.norm() || lambda < 1e-4 {
                amps = trial;
                s = ts;
                r = tr;
                break;
            }
            lambda *= 0.5;
        }
    }
    if r.norm() <= 1e-8 {
        return Ok(CcSolution {
            energy: s.hbar_phi[r0],
            residual: r.norm(),
            amplitudes: amps,
            iterations: MAX_ITER,
        });
    }
    Err(Error::Convergence {
        what: "CC amplitude equations".into(),
        iterations: MAX_ITER,
        residual: r.norm(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveHamiltonian {
    /// Matrix over `active_configs`, serialized row-major.
    #[serde(serialize_with = "rows")]
    pub matrix: DMatrix<f64>,
    /// Sector indices spanning P + Q_int.
    pub active_configs: Vec<usize>,
    pub active_modes: Vec<usize>,
    /// True when built from a unitary similarity transform.
    pub unitary: bool,
}

impl EffectiveHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Eigenvalues sorted by real part; the non-unitary form need not be symmetric.
    pub fn eigenvalues(&self) -> Vec<num_complex::Complex64> {
        let mut ev: Vec<_> = self.matrix.complex_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        ev
    }

    /// Lowest eigenpair of the symmetric (unitary) form.
    pub fn lowest(&self) -> (f64, DVector<f64>) {
        let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let i = eig.eigenvalues.imin();
        (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned())
    }

    /// Embeds an active-space vector back into the sector.
    pub fn embed(&self, v: &DVector<f64>, sector_dim: usize) -> DVector<f64> {
        let mut out = DVector::zeros(sector_dim);
        for (k, &i) in self.active_configs.iter().enumerate() {
            out[i] = v[k];
        }
        out
    }
}

fn rows<S: serde::Serializer>(m: &DMatrix<f64>, ser: S) -> std::result::Result<S::Ok, S::Error> {
    let v: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    v.serialize(ser)
}

fn project(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

/// (P + Q_int) e^{−T_ext} H e^{T_ext} (P + Q_int) with T_ext the external part of the amplitudes.
pub fn build_heff(
    h: &DMatrix<f64>,
    sector: &BosonSector,
    basis: &ExcitationBasis,
    amplitudes: &[f64],
) -> Result<EffectiveHamiltonian> {
    check_sector(h, sector, basis)?;
    if amplitudes.len() != basis.len() {
        return Err(Error::Dimension("amplitude count differs from basis".into()));
    }
    let t_ext = basis.cluster(sector, amplitudes, |i| !basis.internal[i]);
    let hbar = expm_real(&(-&t_ext)) * h * expm_real(&t_ext);
    let idx = sector.active_indices(&basis.active);
    Ok(EffectiveHamiltonian {
        matrix: project(&hbar, &idx),
        active_configs: idx,
        active_modes: basis.active.clone(),
        unitary: false,
    })
}

/// (P + Q_int) U† H U (P + Q_int) for an orthogonal outer transform U.
pub fn build_heff_conjugated(
    h: &DMatrix<f64>,
    sector: &BosonSector,
    outer: &DMatrix<f64>,
    active: &[usize],
) -> Result<EffectiveHamiltonian> {
    if outer.shape() != h.shape() || h.nrows() != sector.dim() {
        return Err(Error::Dimension("outer transform, Hamiltonian and sector disagree".into()));
    }
    let hbar = outer.transpose() * h * outer;
    let idx = sector.active_indices(active);
    Ok(EffectiveHamiltonian {
        matrix: project(&hbar, &idx),
        active_configs: idx,
        active_modes: active.to_vec(),
        unitary: true,
    })
}

/// Unitary variant with U = e^{σ_ext}; σ_ext must be antisymmetric.
pub fn build_heff_unitary(
    h: &DMatrix<f64>,
    sector: &BosonSector,
    sigma_ext: &DMatrix<f64>,
    active: &[usize],
) -> Result<EffectiveHamiltonian> {
    let skew = (sigma_ext + sigma_ext.transpose()).amax();
    if skew > 1e-12 * sigma_ext.amax().max(1.0) {
        return Err(Error::Parameter(format!("σ_ext is not anti-Hermitian (defect {skew:e})")));
    }
    build_heff_conjugated(h, sector, &expm_real(sigma_ext), active)
}

#[derive(Debug, Clone, Serialize)]
pub struct MmccEnergy {
    /// ⟨Ψ|H e^{T} Φ⟩ / ⟨Ψ|e^{T} Φ⟩.
    pub direct: f64,
    /// E^(A) plus the Q_R moment correction.
    pub moment: f64,
    /// ⟨Φ|e^{−T} H e^{T}|Φ⟩.
    pub reference_energy: f64,
    pub correction: f64,
    /// ‖Q_A M Φ‖; the two forms agree when this vanishes.
    pub qa_residual: f64,
}

pub fn mmcc_energy(
    h: &DMatrix<f64>,
    sector: &BosonSector,
    basis: &ExcitationBasis,
    amplitudes: &[f64],
    psi_t: &DVector<f64>,
) -> Result<MmccEnergy> {
    check_sector(h, sector, basis)?;
    if amplitudes.len() != basis.len() || psi_t.len() != sector.dim() {
        return Err(Error::Dimension("amplitudes or trial state have the wrong length".into()));
    }
    let phi = sector.reference();
    let t = basis.cluster(sector, amplitudes, |_| true);
    let et = expm_real(&t);
    let et_phi = &et * &phi;
    let denom = psi_t.dot(&et_phi);
    if denom.abs() <= 1e-10 {
        return Err(Error::Domain(format!("⟨Ψ_T|e^T|Φ⟩ = {denom:e} vanishes")));
    }
    let direct = psi_t.dot(&(h * &et_phi)) / denom;

    let m_phi = expm_real(&(-&t)) * h * &et_phi;
    let r0 = sector.reference_index();
    let e_a = m_phi[r0];
    let mut q_r = m_phi.clone();
    q_r[r0] = 0.0;
    let mut qa = 0.0;
    for i in 0..basis.len() {
        let row = basis.target_config(sector, i);
        qa += m_phi[row] * m_phi[row];
        q_r[row] = 0.0;
    }
    let correction = psi_t.dot(&(&et * q_r)) / denom;
    Ok(MmccEnergy {
        direct,
        moment: e_a + correction,
        reference_energy: e_a,
        correction,
        qa_residual: qa.sqrt(),
    })
}

/// Configuration order d₁…d₆ of the two-boson three-level space.
pub const THREE_LEVEL_CONFIGS: [[usize; 3]; 6] = [[2, 0, 0], [1, 0, 1], [0, 0, 2], [1, 1, 0], [0, 1, 1], [0, 2, 0]];

pub fn three_level_sector() -> BosonSector {
    BosonSector::from_configs(3, 2, THREE_LEVEL_CONFIGS.iter().map(|c| c.to_vec()).collect())
        .expect("fixed configuration list")
}

/// Generators G₁…G₅: (b₁†)²b₀², b₁†b₀, (b₂†)²b₀², b₂†b₁†b₀², b₂†b₀, each minus its adjoint.
pub fn three_level_generators(sector: &BosonSector) -> [DMatrix<f64>; 5] {
    use LocalOp::*;
    let ops: [Vec<(usize, LocalOp)>; 5] = [
        vec![(1, Create), (1, Create), (0, Annihilate), (0, Annihilate)],
        vec![(1, Create), (0, Annihilate)],
        vec![(2, Create), (2, Create), (0, Annihilate), (0, Annihilate)],
        vec![(2, Create), (1, Create), (0, Annihilate), (0, Annihilate)],
        vec![(2, Create), (0, Annihilate)],
    ];
    ops.map(|o| {
        let a = sector.operator(&[(real(1.0), o)]);
        &a - a.transpose()
    })
}

/// Angles of e^{s₃G₅} e^{s₂G₄} e^{s₁G₃} e^{r₂G₂} e^{r₁G₁}|200⟩.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct AnsatzParams {
    pub r1: f64,
    pub r2: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl AnsatzParams {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.r1, self.r2, self.s1, self.s2, self.s3]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        AnsatzParams {
            r1: v[0],
            r2: v[1],
            s1: v[2],
            s2: v[3],
            s3: v[4],
        }
    }
}

/// e^{angle·G} ψ by dense exponential.
pub fn givens_apply(generator: &DMatrix<f64>, angle: f64, psi: &DVector<f64>) -> DVector<f64> {
    expm_real(&(generator * angle)) * psi
}

/// Two-boson three-level ansatz machinery.
#[derive(Debug, Clone)]
pub struct ThreeLevelAnsatz {
    pub sector: BosonSector,
    pub generators: [DMatrix<f64>; 5],
}

impl Default for ThreeLevelAnsatz {
    fn default() -> Self {
        Self::new()
    }
}

/// atan(y/x) with π/2 when x = 0 and 0 when y = 0.
fn kappa(y: f64, x: f64) -> f64 {
    if y == 0.0 {
        0.0
    } else if x == 0.0 {
        std::f64::consts::FRAC_PI_2
    } else {
        (y / x).atan()
    }
}

impl ThreeLevelAnsatz {
    pub fn new() -> Self {
        let sector = three_level_sector();
        let generators = three_level_generators(&sector);
        ThreeLevelAnsatz { sector, generators }
    }

    /// Q₂ block e^{s₃G₅} e^{s₂G₄} e^{s₁G₃}.
    pub fn outer(&self, p: &AnsatzParams) -> DMatrix<f64> {
        let g = &self.generators;
        expm_real(&(&g[4] * p.s3)) * expm_real(&(&g[3] * p.s2)) * expm_real(&(&g[2] * p.s1))
    }

    pub fn inner_state(&self, p: &AnsatzParams) -> DVector<f64> {
        let psi = self.sector.reference();
        let psi = givens_apply(&self.generators[0], p.r1, &psi);
        givens_apply(&self.generators[1], p.r2, &psi)
    }

    pub fn apply(&self, p: &AnsatzParams) -> DVector<f64> {
        let g = &self.generators;
        let mut psi = self.inner_state(p);
        for (gen, a) in [(&g[2], p.s1), (&g[3], p.s2), (&g[4], p.s3)] {
            psi = givens_apply(gen, a, &psi);
        }
        psi
    }

    /// Reverse flow: strips |101⟩, |011⟩, |002⟩, |110⟩, |020⟩ in turn.
    pub fn decompose(&self, psi: &DVector<f64>) -> Result<AnsatzParams> {
        if psi.len() != 6 {
            return Err(Error::Dimension(format!("expected 6 amplitudes, got {}", psi.len())));
        }
        if (psi.norm() - 1.0).abs() > 1e-8 {
            return Err(Error::Parameter(format!("state has norm {}", psi.norm())));
        }
        let g = &self.generators;
        let mut d = psi.clone();
        let s3 = 0.5 * kappa(2f64.sqrt() * d[1], d[0] - d[2]);
        d = givens_apply(&g[4], -s3, &d);
        let s2 = kappa(d[4], d[0]) / 2f64.sqrt();
        d = givens_apply(&g[3], -s2, &d);
        let s1 = 0.5 * kappa(d[2], d[0]);
        d = givens_apply(&g[2], -s1, &d);
        let (r1, r2) = self.decompose_inner(&d);
        Ok(AnsatzParams { r1, r2, s1, s2, s3 })
    }

    /// (r₁, r₂) for a state supported on |200⟩, |110⟩, |020⟩.
    pub fn decompose_inner(&self, d: &DVector<f64>) -> (f64, f64) {
        let r2 = 0.5 * kappa(2f64.sqrt() * d[3], d[0] - d[5]);
        let d = givens_apply(&self.generators[1], -r2, d);
        let r1 = 0.5 * kappa(d[5], d[0]);
        (r1, r2)
    }
}

/// Fidelity |⟨a|b⟩|² for unit vectors.
pub fn fidelity(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.dot(b).powi(2)
}

/// Simplex minimizer with restarts from the best point until a restart stops improving.
pub(crate) fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, ftol: f64, max_evals: usize) -> (Vec<f64>, f64) {
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    for _ in 0..20 {
        let (nx, nf) = simplex(f, &x, step, ftol, max_evals);
        let gain = fx - nf;
        if nf < fx {
            x = nx;
            fx = nf;
        }
        if gain <= ftol {
            break;
        }
    }
    (x, fx)
}

fn simplex(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, ftol: f64, max_evals: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut evals = n + 1;
    while evals < max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        let size = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if vals[n] - vals[0] <= ftol && size <= 1e-9 {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|k| pts[..n].iter().map(|p| p[k]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + t * (pts[n][k] - centroid[k])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    pts[i] = (0..n).map(|k| pts[0][k] + 0.5 * (pts[i][k] - pts[0][k])).collect();
                    vals[i] = f(&pts[i]);
                }
                evals += n;
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    (pts[best].clone(), vals[best])
}

/// Three-site, two-boson Bose-Hubbard model for the nested optimization.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct NestedConfig {
    pub mu: [f64; 3],
    pub t: f64,
    pub v: f64,
    pub u: f64,
    /// Stop once a macro iteration lowers the energy by less than this.
    pub energy_tol: f64,
    pub max_macro: usize,
}

impl Default for NestedConfig {
    fn default() -> Self {
        NestedConfig {
            mu: [-1.0, 0.0, 1.0],
            t: 1.0,
            v: 1.0,
            u: 0.5,
            energy_tol: 1e-12,
            max_macro: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MacroStep {
    pub iteration: usize,
    pub energy: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NestedResult {
    pub energy: f64,
    pub exact: f64,
    pub params: AnsatzParams,
    pub heff: EffectiveHamiltonian,
    pub trace: Vec<MacroStep>,
}

/// Alternates simplex descent over (s₁, s₂, s₃) at fixed (r₁, r₂) with a
/// diagonalization of the 3×3 effective Hamiltonian over {|200⟩, |110⟩, |020⟩}.
pub fn nested_optimize(cfg: &NestedConfig) -> Result<NestedResult> {
    let ans = ThreeLevelAnsatz::new();
    let h = bose_hubbard_sector(&ans.sector, cfg.t, cfg.u, cfg.v, &cfg.mu);
    let exact = h.clone().symmetric_eigen().eigenvalues.min();
    let active = [0usize, 1];
    let mut params = AnsatzParams::default();
    let phi = ans.sector.reference();
    let mut energy = phi.dot(&(&h * &phi));
    let mut trace = Vec::new();
    for it in 1..=cfg.max_macro {
        let inner = ans.inner_state(&params);
        let objective = |s: &[f64]| {
            let p = AnsatzParams {
                s1: s[0],
                s2: s[1],
                s3: s[2],
                ..params
            };
            let psi = ans.outer(&p) * &inner;
            psi.dot(&(&h * &psi))
        };
        let (s, _) = nelder_mead(&objective, &[params.s1, params.s2, params.s3], 0.1, 1e-15, 20_000);
        params.s1 = s[0];
        params.s2 = s[1];
        params.s3 = s[2];

        let heff = build_heff_conjugated(&h, &ans.sector, &ans.outer(&params), &active)?;
        let (e, v) = heff.lowest();
        let (r1, r2) = ans.decompose_inner(&heff.embed(&v, 6));
        params.r1 = r1;
        params.r2 = r2;
        let gain = energy - e;
        energy = e;
        trace.push(MacroStep {
            iteration: it,
            energy,
            error: (energy - exact).abs(),
        });
        if gain.abs() <= cfg.energy_tol {
            return Ok(NestedResult {
                energy,
                exact,
                params,
                heff,
                trace,
            });
        }
    }
    Err(Error::Convergence {
        what: "nested macro/micro optimization".into(),
        iterations: cfg.max_macro,
        residual: trace.last().map_or(f64::NAN, |s| s.error),
    })
}
