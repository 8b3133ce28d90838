//! Per-subcommand invariant checks run by `--selftest`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bosonq::block_encoding::{boson_block_encode, choose_xi, truncated_creation};
use bosonq::downfolding::{fidelity, nested_optimize, NestedConfig, ThreeLevelAnsatz};
use bosonq::dynamics::{evolve_exact, fitted_order, trotter_error_bound, trotter_evolve, trotter_unitary, GateList};
use bosonq::encodings::{fock_creation, BosonEncoding};
use bosonq::flows::{bogoliubov_2site, default_ds, wegner_flow, xy_spectrum, Statistics};
use bosonq::fock::{displaced_oscillator, FockSpace};
use bosonq::ground_state::{exact_diagonalize, holstein_trial_state, moments, pds_with_fallback};
use bosonq::linalg::{
    eigh, identity, kron, max_abs, random_hermitian, random_state, real, spectral_norm, unitary_evolution, CMat,
    CVec, ONE,
};
use bosonq::models::{
    bose_hubbard_fock_split, build_bose_hubbard, build_holstein, build_spin_boson, walk_observables_fock,
    BoseHubbardParams, Boundary, HolsteinParams, SiteValues, SpinBosonParams,
};
use bosonq::open_systems::{build_liouvillian, devectorize, propagate_lindblad, vectorize, LindbladSpec};
use bosonq::pauli::{Pauli, PauliSum};
use bosonq::state_prep::{plan_prep, simulate_prep, synthesize_permutation, Scheme};
use bosonq::trunc::{hamiltonian_cutoff, short_time_leakage_bound, truncation_error, TruncationInput};

use crate::commands::trotter_step_circuit;
use crate::CliError;

type Outcome = bosonq::Result<(bool, String)>;

struct Suite {
    cmd: &'static str,
    failures: usize,
}

impl Suite {
    fn check(&mut self, name: &str, f: impl FnOnce() -> Outcome) {
        let (ok, detail) = match std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)) {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".into()),
        };
        if !ok {
            self.failures += 1;
        }
        println!("selftest {} {name}: {} {detail}", self.cmd, if ok { "PASS" } else { "FAIL" });
    }
}

fn demo_spin_boson(g: f64, enc: BosonEncoding) -> bosonq::Result<bosonq::EncodedHamiltonian> {
    build_spin_boson(
        &SpinBosonParams {
            delta: 1.0,
            epsilon: 2.0,
            omegas: vec![2.0],
            couplings: vec![g],
            cutoffs: vec![3],
        },
        enc,
    )
}

fn holstein(g: f64, enc: BosonEncoding) -> bosonq::Result<bosonq::EncodedHamiltonian> {
    build_holstein(
        &HolsteinParams {
            n_sites: 3,
            v: 1.0,
            omega: 1.0,
            g,
            cutoff: 1,
            boundary: Boundary::Periodic,
        },
        enc,
    )
}

pub fn run(cmd: &'static str, seed: u64) -> Result<(), CliError> {
    let mut s = Suite { cmd, failures: 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match cmd {
        "compile" => compile(&mut s),
        "evolve" => evolve(&mut s, &mut rng),
        "walk" => walk(&mut s),
        "lindblad" => lindblad(&mut s, &mut rng),
        "pds" => pds(&mut s),
        "downfold" => downfold(&mut s, &mut rng),
        "trunc" => trunc(&mut s),
        "blockenc" => blockenc(&mut s),
        "prep" => prep(&mut s, &mut rng),
        "wegner" => wegner(&mut s, &mut rng),
        "xy" => xy(&mut s),
        _ => return Err(CliError::Validation(format!("no selftest for {cmd}"))),
    }
    if s.failures > 0 {
        Err(CliError::Selftest(s.failures))
    } else {
        Ok(())
    }
}

fn compile(s: &mut Suite) {
    s.check("spin-boson golden coefficients", || {
        let h = demo_spin_boson(0.7, BosonEncoding::Binary)?;
        let want = [("III", 3.0), ("XII", 1.0), ("ZII", 1.0), ("XXX", 0.35 * 2f64.sqrt())];
        let dev = want.iter().map(|(l, c)| (h.pauli.coefficient(l) - real(*c)).norm()).fold(0.0, f64::max);
        Ok((dev <= 1e-12 && h.pauli.len() == 9, format!("max deviation {dev:.1e}")))
    });
    s.check("text round-trip", || {
        let h = holstein(0.5, BosonEncoding::Unary)?;
        let back = PauliSum::from_text(&h.pauli.to_text())?;
        Ok((back == h.pauli, format!("{} terms", back.len())))
    });
    s.check("pauli form matches fock oracle", || {
        let mut worst: f64 = 0.0;
        for enc in [BosonEncoding::Binary, BosonEncoding::Unary] {
            let bh = build_bose_hubbard(
                &BoseHubbardParams {
                    n_sites: 2,
                    t: 0.8,
                    u: 1.3,
                    v: 0.4,
                    mu: SiteValues::PerSite(vec![0.2, -0.5]),
                    cutoff: 2,
                },
                enc,
            )?;
            for h in [bh, demo_spin_boson(0.5, enc)?, holstein(1.0, enc)?] {
                worst = worst.max(max_abs(&(h.restricted_pauli_matrix()? - h.fock_matrix()?)));
            }
        }
        Ok((worst <= 1e-10, format!("max deviation {worst:.1e}")))
    });
    s.check("trotter circuit and qasm round-trip", || {
        let h = demo_spin_boson(0.5, BosonEncoding::Binary)?;
        let dt = 0.1;
        let gl = trotter_step_circuit(&h.pauli, dt).map_err(|e| bosonq::Error::Precondition(e.to_string()))?;
        let mut want = identity(1 << h.pauli.qubit_count());
        for t in h.pauli.terms() {
            want = unitary_evolution(&t.to_matrix()?, dt) * want;
        }
        let back = GateList::from_qasm(&gl.to_qasm())?;
        let d1 = max_abs(&(gl.unitary() - &want));
        let d2 = max_abs(&(back.unitary() - &want));
        Ok((d1 <= 1e-12 && d2 <= 1e-12, format!("circuit {d1:.1e}, reimported {d2:.1e}")))
    });
}

fn evolve(s: &mut Suite, rng: &mut ChaCha8Rng) {
    s.check("commuting terms are exact at n = 1", || {
        let zi = kron(&Pauli::Z.matrix(), &identity(2));
        let iz = kron(&identity(2), &Pauli::Z.matrix());
        let d = max_abs(&(trotter_unitary(&[zi.clone(), iz.clone()], 0.7, 1, 1)? - unitary_evolution(&(zi + iz), 0.7)));
        Ok((d <= 1e-12, format!("deviation {d:.1e}")))
    });
    s.check("first-order commutator bound", || {
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let (k, v) = (random_hermitian(4, rng), random_hermitian(4, rng));
            let n = rng.gen_range(1..=8);
            let err = spectral_norm(&(trotter_unitary(&[k.clone(), v.clone()], 1.0, n, 1)? - unitary_evolution(&(&k + &v), 1.0)));
            worst = worst.max(err / trotter_error_bound(&k, &v, 1.0, n));
        }
        Ok((worst <= 1.0, format!("max error/bound {worst:.3}")))
    });
    s.check("fitted orders", || {
        let (x, z) = (Pauli::X.matrix(), Pauli::Z.matrix());
        let exact = unitary_evolution(&(&x + &z), 1.0);
        let ns = [8, 16, 32, 64];
        let mut fits = Vec::new();
        for order in [1u8, 2] {
            let errs = ns
                .iter()
                .map(|&n| Ok(spectral_norm(&(trotter_unitary(&[x.clone(), z.clone()], 1.0, n, order)? - &exact))))
                .collect::<bosonq::Result<Vec<_>>>()?;
            fits.push(fitted_order(&ns, &errs));
        }
        let ok = (fits[0] - 1.0).abs() <= 0.15 && (fits[1] - 2.0).abs() <= 0.15;
        Ok((ok, format!("orders {:.3} {:.3}", fits[0], fits[1])))
    });
}

fn walk(s: &mut Suite) {
    s.check("exact and trotter correlations agree", || {
        let p = BoseHubbardParams {
            n_sites: 5,
            t: 1.0,
            u: 1.0,
            v: 0.0,
            mu: SiteValues::Scalar(-0.5),
            cutoff: 2,
        };
        let space = FockSpace::bosonic(vec![3; 5]);
        let mut psi0 = CVec::zeros(space.dim());
        psi0[space.index(&[0, 1, 0, 1, 0])] = ONE;
        let (diag, hop) = bose_hubbard_fock_split(&p)?;
        let (hd, hh) = (space.dense(&diag)?, space.dense(&hop)?);
        let exact = evolve_exact(&(&hd + &hh), &psi0, 0.003)?;
        let trot = trotter_evolve(&[hd, hh], &psi0, 0.003, 300, 2)?;
        let (ge, gt) = (walk_observables_fock(&exact, &space)?, walk_observables_fock(&trot, &space)?);
        let dev = (&ge.gamma - &gt.gamma).abs().max();
        let asym = (&gt.gamma - gt.gamma.transpose()).abs().max();
        let total: f64 = gt.density.iter().sum();
        let ok = dev <= 1e-6 && asym <= 1e-10 && (total - 2.0).abs() <= 1e-10;
        Ok((ok, format!("Γ deviation {dev:.1e}, asymmetry {asym:.1e}, N = {total}")))
    });
}

fn lindblad(s: &mut Suite, rng: &mut ChaCha8Rng) {
    let setup = |deph: f64, heat: f64| -> bosonq::Result<(CMat, bosonq::open_systems::Liouvillian)> {
        let h = demo_spin_boson(0.5, BosonEncoding::Binary)?.fock_matrix()?;
        let b = kron(&identity(2), &fock_creation(3).adjoint());
        Ok((h.clone(), build_liouvillian(&LindbladSpec::new(h, deph, heat, b)?)))
    };
    let mut rho0 = CMat::zeros(8, 8);
    rho0[(0, 0)] = ONE;
    let r0 = rho0.clone();
    s.check("trace preserved", || {
        let (_, l) = setup(0.1, 0.05)?;
        let rho = propagate_lindblad(&l, &r0, 1.0, 1e-3)?;
        let d = (rho.trace() - ONE).norm();
        Ok((d <= 1e-8, format!("trace drift {d:.1e}")))
    });
    s.check("closed-system limit", || {
        let (h, l) = setup(0.0, 0.0)?;
        let rho = propagate_lindblad(&l, &rho0, 1.0, 1e-3)?;
        let u = unitary_evolution(&h, 1.0);
        let d = max_abs(&(rho - &u * &rho0 * u.adjoint()));
        Ok((d <= 1e-8, format!("deviation {d:.1e}")))
    });
    s.check("vectorization identities", || {
        let (a, b, c) = (random_hermitian(3, rng), random_hermitian(3, rng), random_hermitian(3, rng));
        let m = &a * &b * &c;
        let d1 = (vectorize(&m)? - kron(&c.transpose(), &a) * vectorize(&b)?).norm();
        let d2 = max_abs(&(devectorize(&vectorize(&m)?, 3)? - &m));
        Ok((d1.max(d2) <= 1e-12, format!("deviation {:.1e}", d1.max(d2))))
    });
}

fn pds(s: &mut Suite) {
    for g in [0.5, 1.5] {
        s.check(&format!("variational and improving at g = {g}"), || {
            let h = holstein(g, BosonEncoding::Binary)?;
            let hm = h.pauli.to_matrix()?;
            let e = exact_diagonalize(&hm)?.0[0];
            let mu = moments(&hm, &holstein_trial_state(&h.layout)?, 9)?;
            let errs = (1..=5)
                .map(|k| Ok(pds_with_fallback(&mu, k)?.lowest_root() - e))
                .collect::<bosonq::Result<Vec<_>>>()?;
            let ok = errs.iter().all(|&d| d >= -1e-9) && errs[4].abs() < errs[1].abs();
            Ok((ok, format!("PDS2 {:.3e}, PDS5 {:.3e}", errs[1], errs[4])))
        });
    }
}

fn downfold(s: &mut Suite, rng: &mut ChaCha8Rng) {
    s.check("decompose then apply", || {
        let ans = ThreeLevelAnsatz::new();
        let mut worst: f64 = 1.0;
        for _ in 0..20 {
            let mut v = DVector::from_fn(6, |_, _| rng.gen_range(-1.0..1.0));
            v /= v.norm();
            worst = worst.min(fidelity(&ans.apply(&ans.decompose(&v)?), &v));
        }
        Ok((worst >= 1.0 - 1e-9, format!("min fidelity 1−{:.1e}", 1.0 - worst)))
    });
    s.check("nested optimization reaches the ground state", || {
        let r = nested_optimize(&NestedConfig::default())?;
        let gap = (r.energy - r.exact).abs();
        Ok((gap <= 1e-6, format!("gap {gap:.1e}")))
    });
}

fn trunc(s: &mut Suite) {
    s.check("leakage bound closed form", || {
        let b = short_time_leakage_bound(60)?.value;
        let direct = (2f64.sqrt() * std::f64::consts::E / 60f64.sqrt()).powi(60);
        let rel = (b - direct).abs() / direct;
        Ok((rel <= 1e-12, format!("relative deviation {rel:.1e}")))
    });
    s.check("schedules self-consistent and within budget", || {
        let cut = hamiltonian_cutoff(&TruncationInput::new(1, 2.0, 1.0, 1e-2))?;
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for p in [&cut.state, &cut.hamiltonian, &cut.reverse] {
            let d = p.delta_lambda as f64;
            let rec = p.steps as f64 * p.step_factor * (2f64.sqrt() * std::f64::consts::E / d.sqrt()).powf(d);
            worst = worst.max((rec - p.total_bound).abs() / rec);
            ok &= p.total_bound <= p.budget;
        }
        Ok((ok && worst <= 1e-12, format!("Λ̃ = {}, relative deviation {worst:.1e}", cut.cutoff)))
    });
    s.check("dense truncation error below ε", || {
        let cut = hamiltonian_cutoff(&TruncationInput::new(1, 2.0, 1.0, 1e-2))?;
        let n = cut.cutoff + 100;
        let e = truncation_error(&displaced_oscillator(n, 1.0, 1.0), &(0..=n).collect::<Vec<_>>(), 1, cut.cutoff, 1.0)?;
        Ok((e <= 1e-2, format!("error {e:.2e}")))
    });
}

fn blockenc(s: &mut Suite) {
    s.check("error below 2/Ξ", || {
        let mut worst: f64 = 0.0;
        for lambda in [2usize, 4, 8] {
            let target = truncated_creation(lambda) / real(((lambda - 1) as f64).sqrt());
            for k in 4..=8 {
                let xi = 1usize << k;
                let enc = boson_block_encode(lambda, xi)?;
                worst = worst.max(max_abs(&(&enc.block - &target)) * xi as f64 / 2.0);
            }
        }
        Ok((worst <= 1.0, format!("max error·Ξ/2 = {worst:.3}")))
    });
    s.check("choose_xi boundaries", || {
        let ok = (1..16).all(|k| choose_xi(2.0 / (1u64 << k) as f64).ok() == Some(1 << k)) && choose_xi(0.0).is_err();
        Ok((ok, String::new()))
    });
}

fn prep(s: &mut Suite, rng: &mut ChaCha8Rng) {
    s.check("post-selected fidelity and probability", || {
        let mut worst: f64 = 0.0;
        for k in 1..=8 {
            let cs = random_state(k, rng);
            let targets: Vec<CVec> = (0..k)
                .map(|i| {
                    let mut v = CVec::zeros(k);
                    v[i] = ONE;
                    v
                })
                .collect();
            let l1: f64 = cs.iter().map(|z| z.norm()).sum();
            for (scheme, want) in [(Scheme::A, 1.0 / k as f64), (Scheme::B, 1.0 / (l1 * l1))] {
                let sim = simulate_prep(&plan_prep(cs.as_slice(), scheme)?, &targets)?;
                worst = worst.max(1.0 - sim.fidelity).max((sim.probability - want).abs());
            }
        }
        Ok((worst <= 1e-10, format!("max deviation {worst:.1e}")))
    });
    s.check("permutation synthesis", || {
        let mut img: Vec<usize> = (0..8).collect();
        for i in (1..8).rev() {
            img.swap(i, rng.gen_range(0..=i));
        }
        let map: Vec<(usize, usize)> = img.iter().enumerate().map(|(i, &j)| (i, j)).collect();
        let p = synthesize_permutation(&map, 3)?;
        Ok(((0..8).all(|i| p.apply(i) == img[i]), format!("{} transpositions", p.transpositions.len())))
    });
}

fn wegner(s: &mut Suite, rng: &mut ChaCha8Rng) {
    s.check("random 6×6 flow", || {
        let h0 = random_hermitian(6, rng);
        let (ev, _) = eigh(&h0);
        let traj = wegner_flow(&h0, default_ds(&h0), 400.0)?;
        let mono = traj.samples.windows(2).all(|w| w[1].off_diagonal_norm <= w[0].off_diagonal_norm);
        let dev = traj.sorted_diagonal().iter().zip(ev.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let ok = traj.converged && mono && dev <= 1e-6 && traj.max_trace_sq_drift <= 1e-8;
        Ok((ok, format!("spectrum {dev:.1e}, Tr H² drift {:.1e}", traj.max_trace_sq_drift)))
    });
}

fn xy(s: &mut Suite) {
    s.check("quasiparticle energies match BdG", || {
        let mut worst: f64 = 0.0;
        for n in [4usize, 6, 7] {
            worst = worst.max(xy_spectrum(n, 1.0, 0.5, 1.0)?.bdg_deviation);
        }
        Ok((worst <= 1e-10, format!("deviation {worst:.1e}")))
    });
    s.check("two-site Bogoliubov energies", || {
        let f = bogoliubov_2site(3.0, 4.0, Statistics::Fermionic)?.epsilon_tilde;
        let b = bogoliubov_2site(5.0, 3.0, Statistics::Bosonic)?.epsilon_tilde;
        Ok((f == 5.0 && b == 4.0, format!("fermionic {f}, bosonic {b}")))
    });
}
