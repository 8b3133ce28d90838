//! Dense and sparse complex linear algebra shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

/// Largest singular value.
pub fn spectral_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().iter().cloned().fold(0.0, f64::max)
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    a.is_square() && max_abs(&(a - a.adjoint())) <= tol
}

pub fn require_hermitian(a: &CMat, tol: f64) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let dev = max_abs(&(a - a.adjoint()));
    if dev > tol {
        return Err(Error::Domain(format!(
            "matrix is not Hermitian (deviation {dev:e})"
        )));
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(a: &CMat) -> (DVector<f64>, CMat) {
    let n = a.nrows();
    let herm = (a + a.adjoint()) * real(0.5);
    let eig = nalgebra::SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = CMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// e^{-iHt} for Hermitian H via its eigen-decomposition.
pub fn unitary_evolution(h: &CMat, t: f64) -> CMat {
    let (vals, vecs) = eigh(h);
    let phases = CVec::from_iterator(vals.len(), vals.iter().map(|&e| (-I * e * t).exp()));
    let scaled = CMat::from_fn(vecs.nrows(), vecs.ncols(), |i, j| vecs[(i, j)] * phases[j]);
    scaled * vecs.adjoint()
}

fn norm1(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: &CMat) -> CMat {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let nrm = norm1(a);
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a * real(0.5f64.powi(s));
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * real(B[13]) + &a4 * real(B[11]) + &a2 * real(B[9]))
        + &a6 * real(B[7])
        + &a4 * real(B[5])
        + &a2 * real(B[3])
        + &id * real(B[1]);
    let u = &a * inner_u;
    let v = &a6 * (&a6 * real(B[12]) + &a4 * real(B[10]) + &a2 * real(B[8]))
        + &a6 * real(B[6])
        + &a4 * real(B[4])
        + &a2 * real(B[2])
        + &id * real(B[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Padé denominator is singular");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Least-squares slope of log(y) against log(x).
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| c(gauss(rng), gauss(rng)));
    (&g + g.adjoint()) * real(0.5)
}

pub fn random_real_symmetric<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| real(gauss(rng)));
    (&g + g.transpose()) * real(0.5)
}

/// Haar-like random unitary from the QR factorisation of a Ginibre matrix.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| c(gauss(rng), gauss(rng)));
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut out = q.clone();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            out[(i, j)] = q[(i, j)] * ph;
        }
    }
    out
}

pub fn random_state<R: Rng>(n: usize, rng: &mut R) -> CVec {
    let v = CVec::from_fn(n, |_, _| c(gauss(rng), gauss(rng)));
    let nrm = v.norm();
    v / real(nrm)
}

pub fn gauss<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseMatrix {
    pub fn from_dense(a: &CMat) -> Self {
        let n = a.nrows();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..a.ncols() {
                let z = a[(i, j)];
                if z != ZERO {
                    cols.push(j);
                    vals.push(z);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut trips: Vec<(usize, usize, C64)>) -> Self {
        trips.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols: Vec<usize> = Vec::new();
        let mut vals: Vec<C64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trips {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        let mut out = Vec::with_capacity(self.vals.len());
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.push((i, self.cols[k], self.vals[k]));
            }
        }
        out
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        for i in 0..self.n {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[i] = acc;
        }
    }

    /// Gershgorin enclosure [lo, hi] of the spectrum of a Hermitian matrix.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let mut diag = 0.0;
            let mut rad = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.cols[k] == i {
                    diag = self.vals[k].re;
                } else {
                    rad += self.vals[k].norm();
                }
            }
            lo = lo.min(diag - rad);
            hi = hi.max(diag + rad);
        }
        if self.n == 0 {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }
}

/// e^{-iHt} v by sub-stepped Taylor series with a fixed high order.
///
/// Every sub-step has ‖Hτ‖ ≤ 1/2, so amplitudes far from the initial support
/// keep their relative accuracy instead of being swamped by rounding.
pub fn expm_multiply_taylor(h: &SparseMatrix, v: &[C64], t: f64) -> Vec<C64> {
    const ORDER: usize = 30;
    let (lo, hi) = h.gershgorin();
    let bound = lo.abs().max(hi.abs());
    let steps = ((bound * t.abs()) / 0.5).ceil().max(1.0) as usize;
    let tau = t / steps as f64;
    let mut x = v.to_vec();
    let mut term = vec![ZERO; h.n];
    let mut next = vec![ZERO; h.n];
    for _ in 0..steps {
        term.copy_from_slice(&x);
        for k in 1..=ORDER {
            h.matvec(&term, &mut next);
            let f = -I * tau / k as f64;
            for (tk, nk) in term.iter_mut().zip(&next) {
                *tk = nk * f;
            }
            for (xi, tk) in x.iter_mut().zip(&term) {
                *xi += tk;
            }
        }
    }
    x
}

/// Bessel functions J_0..J_kmax at z ≥ 0 by Miller's downward recurrence.
pub fn bessel_j_sequence(z: f64, kmax: usize) -> Vec<f64> {
    if z == 0.0 {
        let mut out = vec![0.0; kmax + 1];
        out[0] = 1.0;
        return out;
    }
    let top = kmax.max(z.ceil() as usize + 1);
    let m = 2 * ((top + (160.0 * top as f64).sqrt() as usize) / 2 + 1);
    let mut vals = vec![0.0; m + 2];
    let mut jp1 = 0.0;
    let mut j = 1e-300;
    vals[m] = j;
    for k in (1..=m).rev() {
        let jm1 = (2.0 * k as f64 / z) * j - jp1;
        jp1 = j;
        j = jm1;
        vals[k - 1] = j;
        if j.abs() > 1e250 {
            for v in vals.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
            j *= 1e-250;
            jp1 *= 1e-250;
        }
    }
    let mut norm = vals[0];
    let mut k = 2;
    while k <= m {
        norm += 2.0 * vals[k];
        k += 2;
    }
    vals.truncate(kmax + 1);
    vals.iter().map(|v| v / norm).collect()
}

/// e^{-iHt} v for Hermitian H by a Chebyshev expansion on its Gershgorin interval.
pub fn expm_multiply_chebyshev(h: &SparseMatrix, v: &[C64], t: f64) -> Vec<C64> {
    let n = h.n;
    let (lo, hi) = h.gershgorin();
    let centre = 0.5 * (hi + lo);
    let radius = (0.5 * (hi - lo)).max(1e-300);
    let z = radius * t.abs();
    let kmax = (z + 10.0 * z.cbrt() + 40.0).ceil() as usize;
    let jn = bessel_j_sequence(z, kmax);
    let sign = if t >= 0.0 { -I } else { I };
    let scaled = |x: &[C64], out: &mut [C64]| {
        h.matvec(x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = (*o - xi * centre) / radius;
        }
    };
    let mut acc: Vec<C64> = v.iter().map(|x| x * jn[0]).collect();
    let mut w_prev = v.to_vec();
    let mut w = vec![ZERO; n];
    scaled(&w_prev, &mut w);
    let mut coeff = sign * 2.0;
    for k in 1..=kmax {
        let a = coeff * jn[k];
        for (ai, wi) in acc.iter_mut().zip(&w) {
            *ai += wi * a;
        }
        if k == kmax {
            break;
        }
        let mut w_next = vec![ZERO; n];
        scaled(&w, &mut w_next);
        for (wn, wp) in w_next.iter_mut().zip(&w_prev) {
            *wn = *wn * 2.0 - wp;
        }
        w_prev = std::mem::replace(&mut w, w_next);
        coeff *= sign;
    }
    let phase = (sign * centre * t.abs()).exp();
    acc.iter().map(|a| a * phase).collect()
}
