//! One-hot-ancilla superposition preparation and permutation relabeling.
//!
//! Simulation layout: flag qubit ⊗ K one-hot ancillas ⊗ target register,
//! with the target's index 0 playing the vacuum.

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Ancilla amplitudes c_k, uniform uncompute; success 1/K.
    A,
    /// Ancilla amplitudes √|c_k| / √Σ|c|, phases injected with U_k; success 1/(Σ|c_k|)².
    B,
}

fn complex_pairs<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
    pairs.serialize(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct PrepPlan {
    pub scheme: Scheme,
    #[serde(serialize_with = "complex_pairs")]
    pub coefficients: Vec<C64>,
    /// Rotation R_k: |0⟩ → x_k|0⟩ + y_k|1⟩ for the preparing stage.
    pub x: Vec<f64>,
    #[serde(serialize_with = "complex_pairs")]
    pub y: Vec<C64>,
    /// Rotations of the uncompute stage.
    pub x_out: Vec<f64>,
    #[serde(serialize_with = "complex_pairs")]
    pub y_out: Vec<C64>,
    /// Phases attached to the controlled U_k (all 1 in scheme A).
    #[serde(serialize_with = "complex_pairs")]
    pub phases: Vec<C64>,
    pub l1_norm: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub probability: f64,
    /// ⌈√K⌉ and ⌈Σ|c_k|⌉.
    pub amplification_a: u64,
    pub amplification_b: u64,
}

/// (x_k, y_k) with x_1⋯x_{k−1} y_k = a_k.
fn chain_rotations(a: &[C64]) -> Result<(Vec<f64>, Vec<C64>)> {
    let mut prefix = 1.0;
    let mut xs = Vec::with_capacity(a.len());
    let mut ys = Vec::with_capacity(a.len());
    for (k, &ak) in a.iter().enumerate() {
        let y = if prefix > 1e-300 {
            ak / prefix
        } else if ak.norm() <= 1e-12 {
            ZERO
        } else {
            return Err(Error::Domain(format!("coefficient {k} unreachable after a vanishing prefix")));
        };
        let y = if y.norm() > 1.0 { y / y.norm() } else { y };
        let x = (1.0 - y.norm_sqr()).max(0.0).sqrt();
        xs.push(x);
        ys.push(y);
        prefix *= x;
    }
    Ok((xs, ys))
}

pub fn plan_prep(c: &[C64], scheme: Scheme) -> Result<PrepPlan> {
    if c.is_empty() {
        return Err(Error::Parameter("need at least one coefficient".into()));
    }
    let norm2: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    if (norm2 - 1.0).abs() > 1e-12 {
        return Err(Error::Parameter(format!("Σ|c_k|² = {norm2}, expected 1")));
    }
    let k = c.len();
    let l1: f64 = c.iter().map(|z| z.norm()).sum();
    let uniform = vec![C64::new(1.0 / (k as f64).sqrt(), 0.0); k];
    let (prep_amps, out_amps, phases) = match scheme {
        Scheme::A => (c.to_vec(), uniform, vec![ONE; k]),
        Scheme::B => {
            let mags: Vec<C64> = c.iter().map(|z| C64::new((z.norm() / l1).sqrt(), 0.0)).collect();
            let ph = c
                .iter()
                .map(|z| if z.norm() > 0.0 { z / z.norm() } else { ONE })
                .collect();
            (mags.clone(), mags, ph)
        }
    };
    let (x, y) = chain_rotations(&prep_amps)?;
    let (x_out, y_out) = chain_rotations(&out_amps)?;
    let p_a = 1.0 / k as f64;
    let p_b = 1.0 / (l1 * l1);
    Ok(PrepPlan {
        scheme,
        coefficients: c.to_vec(),
        x,
        y,
        x_out,
        y_out,
        phases,
        l1_norm: l1,
        p_a,
        p_b,
        probability: if scheme == Scheme::A { p_a } else { p_b },
        amplification_a: (k as f64).sqrt().ceil() as u64,
        amplification_b: l1.ceil() as u64,
    })
}

/// Unitary whose first column is `phi`, completed by Gram-Schmidt on the standard basis.
pub fn vacuum_to(phi: &CVec) -> CMat {
    let d = phi.len();
    let mut cols: Vec<CVec> = vec![phi.clone()];
    for e in 0..d {
        if cols.len() == d {
            break;
        }
        let mut v = CVec::zeros(d);
        v[e] = ONE;
        for c in &cols {
            let p = c.dotc(&v);
            v -= c * p;
        }
        let n = v.norm();
        if n > 1e-8 {
            cols.push(v / C64::new(n, 0.0));
        }
    }
    CMat::from_columns(&cols)
}

struct Register {
    k: usize,
    d: usize,
    amp: Vec<C64>,
}

impl Register {
    fn idx(&self, flag: usize, anc: usize, t: usize) -> usize {
        ((flag << self.k) | anc) * self.d + t
    }

    fn anc_bit(&self, j: usize) -> usize {
        1 << (self.k - 1 - j)
    }

    /// R = [[x, −ȳ], [y, x]] on ancilla j where the flag is 0; `adjoint` applies R†.
    fn rotate(&mut self, j: usize, x: f64, y: C64, adjoint: bool) {
        let (a, b, c, d) = if adjoint {
            (C64::new(x, 0.0), y.conj(), -y, C64::new(x, 0.0))
        } else {
            (C64::new(x, 0.0), -y.conj(), y, C64::new(x, 0.0))
        };
        let bit = self.anc_bit(j);
        for anc in 0..(1 << self.k) {
            if anc & bit != 0 {
                continue;
            }
            for t in 0..self.d {
                let i0 = self.idx(0, anc, t);
                let i1 = self.idx(0, anc | bit, t);
                let (u, v) = (self.amp[i0], self.amp[i1]);
                self.amp[i0] = a * u + b * v;
                self.amp[i1] = c * u + d * v;
            }
        }
    }

    /// X on the flag where ancilla j is 1.
    fn flag_flip(&mut self, j: usize) {
        let bit = self.anc_bit(j);
        for anc in 0..(1 << self.k) {
            if anc & bit == 0 {
                continue;
            }
            for t in 0..self.d {
                let i0 = self.idx(0, anc, t);
                let i1 = self.idx(1, anc, t);
                self.amp.swap(i0, i1);
            }
        }
    }

    /// U on the target where ancilla j is 1.
    fn controlled(&mut self, j: usize, u: &CMat) {
        let bit = self.anc_bit(j);
        for flag in 0..2 {
            for anc in 0..(1 << self.k) {
                if anc & bit == 0 {
                    continue;
                }
                let base = self.idx(flag, anc, 0);
                let v = CVec::from_column_slice(&self.amp[base..base + self.d]);
                let w = u * v;
                self.amp[base..base + self.d].copy_from_slice(w.as_slice());
            }
        }
    }

    fn prepare(&mut self, x: &[f64], y: &[C64]) {
        for j in 0..self.k {
            self.rotate(j, x[j], y[j], false);
            self.flag_flip(j);
        }
    }

    fn unprepare(&mut self, x: &[f64], y: &[C64]) {
        for j in (0..self.k).rev() {
            self.flag_flip(j);
            self.rotate(j, x[j], y[j], true);
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PrepSimulation {
    /// Normalized post-selected target state.
    #[serde(serialize_with = "complex_pairs")]
    pub state: Vec<C64>,
    pub probability: f64,
    pub fidelity: f64,
}

/// Statevector run of prepare, controlled U_k, uncompute, then post-selection of flag and ancillas on 0.
pub fn simulate_prep(plan: &PrepPlan, targets: &[CVec]) -> Result<PrepSimulation> {
    let k = plan.coefficients.len();
    if targets.len() != k {
        return Err(Error::Dimension(format!("{} targets for {k} coefficients", targets.len())));
    }
    let d = targets[0].len();
    if targets.iter().any(|t| t.len() != d) {
        return Err(Error::Dimension("targets differ in length".into()));
    }
    for i in 0..k {
        for j in 0..k {
            let g = targets[i].dotc(&targets[j]);
            let want = if i == j { ONE } else { ZERO };
            if (g - want).norm() > 1e-10 {
                return Err(Error::Precondition(format!("targets {i} and {j} are not orthonormal")));
            }
        }
    }
    if k > 12 {
        return Err(Error::Capacity { qubits: k + 1, limit: 13 });
    }
    let mut reg = Register {
        k,
        d,
        amp: vec![ZERO; 2 * (1 << k) * d],
    };
    reg.amp[0] = ONE;
    reg.prepare(&plan.x, &plan.y);
    for (j, t) in targets.iter().enumerate() {
        reg.controlled(j, &(vacuum_to(t) * plan.phases[j]));
    }
    // the uncompute maps |flag=1, e_k⟩ back onto |0, 0…0⟩
    reg.unprepare(&plan.x_out, &plan.y_out);
    let kept: Vec<C64> = (0..d).map(|t| reg.amp[reg.idx(0, 0, t)]).collect();
    let probability: f64 = kept.iter().map(|z| z.norm_sqr()).sum();
    let sqrt_p = probability.sqrt();
    let state: Vec<C64> = kept.iter().map(|z| z / sqrt_p).collect();
    let mut want = CVec::zeros(d);
    for (c, t) in plan.coefficients.iter().zip(targets) {
        want += t * *c;
    }
    let fidelity = want.dotc(&CVec::from_vec(state.clone())).norm_sqr();
    Ok(PrepSimulation {
        state,
        probability,
        fidelity,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PermutationSynthesis {
    pub bits: usize,
    /// Completed permutation: label i goes to permutation[i].
    pub permutation: Vec<usize>,
    /// Non-trivial cycles (a₁ → a₂ → … → a₁).
    pub cycles: Vec<Vec<usize>>,
    /// Two-level swaps, applied first to last.
    pub transpositions: Vec<(usize, usize)>,
    /// Σ Hamming distance over the swaps (Gray-code path length).
    pub gray_path_length: usize,
}

impl PermutationSynthesis {
    pub fn apply(&self, label: usize) -> usize {
        let mut x = label;
        for &(a, b) in &self.transpositions {
            if x == a {
                x = b;
            } else if x == b {
                x = a;
            }
        }
        x
    }
}

/// Completes a partial injective map on `bits`-bit labels to a permutation and factors it.
pub fn synthesize_permutation(mapping: &[(usize, usize)], bits: usize) -> Result<PermutationSynthesis> {
    if bits > 24 {
        return Err(Error::Parameter(format!("{bits} label bits is too many")));
    }
    let n = 1usize << bits;
    let mut perm = vec![usize::MAX; n];
    let mut hit = vec![false; n];
    for &(src, dst) in mapping {
        if src >= n || dst >= n {
            return Err(Error::Parameter(format!("label pair ({src}, {dst}) exceeds {bits} bits")));
        }
        if perm[src] != usize::MAX && perm[src] != dst {
            return Err(Error::Parameter(format!("label {src} mapped twice")));
        }
        if hit[dst] && perm[src] != dst {
            return Err(Error::Parameter(format!("mapping is not injective at {dst}")));
        }
        perm[src] = dst;
        hit[dst] = true;
    }
    for i in 0..n {
        if perm[i] == usize::MAX && !hit[i] {
            perm[i] = i;
            hit[i] = true;
        }
    }
    let free_src: Vec<usize> = (0..n).filter(|&i| perm[i] == usize::MAX).collect();
    let free_dst: Vec<usize> = (0..n).filter(|&i| !hit[i]).collect();
    for (s, d) in free_src.into_iter().zip(free_dst) {
        perm[s] = d;
    }
    let mut seen = vec![false; n];
    let mut cycles = Vec::new();
    for start in 0..n {
        if seen[start] || perm[start] == start {
            continue;
        }
        let mut cyc = vec![start];
        seen[start] = true;
        let mut x = perm[start];
        while x != start {
            seen[x] = true;
            cyc.push(x);
            x = perm[x];
        }
        cycles.push(cyc);
    }
    let mut transpositions = Vec::new();
    for cyc in &cycles {
        for i in (0..cyc.len() - 1).rev() {
            transpositions.push((cyc[i], cyc[i + 1]));
        }
    }
    let gray_path_length = transpositions.iter().map(|&(a, b)| (a ^ b).count_ones() as usize).sum();
    Ok(PermutationSynthesis {
        bits,
        permutation: perm,
        cycles,
        transpositions,
        gray_path_length,
    })
}
