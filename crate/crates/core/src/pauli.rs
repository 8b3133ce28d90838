//! Pauli strings, ladder operators and their dense materialisation.
//!
//! Qubit 0 is the leftmost tensor factor and the most significant bit of a
//! basis index.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{c, real, CMat, C64, I, ONE, ZERO};

pub const PRUNE_TOL: f64 = 1e-12;
pub const DEFAULT_DENSE_LIMIT: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// Single-qubit product `self * other` as (phase, letter).
    pub fn mul(self, other: Pauli) -> (C64, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (ONE, p),
            (X, X) | (Y, Y) | (Z, Z) => (ONE, I),
            (X, Y) => (crate::linalg::I, Z),
            (Y, X) => (-crate::linalg::I, Z),
            (Y, Z) => (crate::linalg::I, X),
            (Z, Y) => (-crate::linalg::I, X),
            (Z, X) => (crate::linalg::I, Y),
            (X, Z) => (-crate::linalg::I, Y),
        }
    }

    pub fn from_char(ch: char) -> Option<Pauli> {
        match ch {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn matrix(self) -> CMat {
        match self {
            Pauli::I => CMat::identity(2, 2),
            Pauli::X => CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            Pauli::Y => CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
            Pauli::Z => CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }
}

pub fn letters_from_str(s: &str) -> Result<Vec<Pauli>> {
    s.chars()
        .map(|ch| {
            Pauli::from_char(ch)
                .ok_or_else(|| Error::Parameter(format!("invalid Pauli letter '{ch}'")))
        })
        .collect()
}

pub fn letters_to_string(letters: &[Pauli]) -> String {
    letters.iter().map(|p| p.to_char()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub letters: Vec<Pauli>,
    pub coeff: C64,
}

impl PauliTerm {
    pub fn new(letters: Vec<Pauli>, coeff: C64) -> Self {
        PauliTerm { letters, coeff }
    }

    /// Term from a letter string such as "XZI".
    pub fn parse(letters: &str, coeff: C64) -> Result<Self> {
        Ok(PauliTerm::new(letters_from_str(letters)?, coeff))
    }

    pub fn identity(n: usize) -> Self {
        PauliTerm::new(vec![Pauli::I; n], ONE)
    }

    pub fn qubit_count(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    pub fn label(&self) -> String {
        letters_to_string(&self.letters)
    }

    /// Product of two terms; the phase is folded into the coefficient.
    pub fn mul(&self, other: &PauliTerm) -> Result<PauliTerm> {
        if self.letters.len() != other.letters.len() {
            return Err(Error::Dimension(format!(
                "Pauli terms on {} and {} qubits",
                self.letters.len(),
                other.letters.len()
            )));
        }
        let mut coeff = self.coeff * other.coeff;
        let letters = self
            .letters
            .iter()
            .zip(&other.letters)
            .map(|(&a, &b)| {
                let (ph, p) = a.mul(b);
                coeff *= ph;
                p
            })
            .collect();
        Ok(PauliTerm { letters, coeff })
    }

    /// Bit mask of qubits flipped by the string (X or Y), qubit 0 at the top bit.
    pub fn flip_mask(&self) -> usize {
        let n = self.letters.len();
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Pauli::X | Pauli::Y))
            .fold(0, |m, (q, _)| m | 1 << (n - 1 - q))
    }

    /// Matrix element ⟨row|P|col⟩ where row = col ^ flip_mask, excluding the coefficient.
    pub fn column_phase(&self, col: usize) -> C64 {
        let n = self.letters.len();
        let mut ph = ONE;
        for (q, p) in self.letters.iter().enumerate() {
            let bit = (col >> (n - 1 - q)) & 1;
            match p {
                Pauli::Y => ph *= if bit == 0 { I } else { -I },
                Pauli::Z if bit == 1 => ph = -ph,
                _ => {}
            }
        }
        ph
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        PauliSum::from_terms(self.qubit_count(), vec![self.clone()])?.to_matrix()
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) {}", self.coeff, self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Plus,
    Minus,
}

/// Linear combination of Pauli strings on a fixed number of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn zero(n: usize) -> Self {
        PauliSum { n, terms: vec![] }
    }

    pub fn identity(n: usize) -> Self {
        PauliSum {
            n,
            terms: vec![PauliTerm::identity(n)],
        }
    }

    pub fn scalar(n: usize, value: C64) -> Self {
        PauliSum::identity(n).scale(value)
    }

    /// Keeps the given terms verbatim; nothing is merged.
    pub fn from_terms(n: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if let Some(t) = terms.iter().find(|t| t.letters.len() != n) {
            return Err(Error::Dimension(format!(
                "term {} has {} letters, sum declares {n} qubits",
                t.label(),
                t.letters.len()
            )));
        }
        Ok(PauliSum { n, terms })
    }

    /// Sum from (letters, coefficient) pairs, merged.
    pub fn from_labels(pairs: &[(&str, C64)]) -> Result<Self> {
        let n = pairs.first().map(|(s, _)| s.len()).unwrap_or(0);
        let terms = pairs
            .iter()
            .map(|(s, z)| PauliTerm::parse(s, *z))
            .collect::<Result<Vec<_>>>()?;
        Ok(PauliSum::from_terms(n, terms)?.simplify(PRUNE_TOL))
    }

    pub fn single(letter: Pauli) -> Self {
        PauliSum {
            n: 1,
            terms: vec![PauliTerm::new(vec![letter], ONE)],
        }
    }

    /// (+) = ½(X + iY) = |0⟩⟨1| and (−) = ½(X − iY) = |1⟩⟨0|.
    pub fn ladder(kind: Ladder) -> Self {
        let s = match kind {
            Ladder::Plus => c(0.0, 0.5),
            Ladder::Minus => c(0.0, -0.5),
        };
        PauliSum {
            n: 1,
            terms: vec![
                PauliTerm::new(vec![Pauli::X], real(0.5)),
                PauliTerm::new(vec![Pauli::Y], s),
            ],
        }
    }

    /// Single-qubit outer product |r⟩⟨s| for bits r, s.
    pub fn outer(r: usize, s: usize) -> Self {
        match (r, s) {
            (0, 0) => PauliSum::from_terms(
                1,
                vec![
                    PauliTerm::new(vec![Pauli::I], real(0.5)),
                    PauliTerm::new(vec![Pauli::Z], real(0.5)),
                ],
            )
            .unwrap(),
            (0, 1) => PauliSum::ladder(Ladder::Plus),
            (1, 0) => PauliSum::ladder(Ladder::Minus),
            _ => PauliSum::from_terms(
                1,
                vec![
                    PauliTerm::new(vec![Pauli::I], real(0.5)),
                    PauliTerm::new(vec![Pauli::Z], real(-0.5)),
                ],
            )
            .unwrap(),
        }
    }

    /// Operator Σ v |row⟩⟨col| expanded by splitting one qubit at a time.
    pub fn from_outer_products(n: usize, entries: &[(usize, usize, C64)]) -> Self {
        fn split(n: usize, entries: &[(usize, usize, C64)]) -> PauliSum {
            if n == 0 {
                let total: C64 = entries.iter().map(|e| e.2).sum();
                return PauliSum::scalar(0, total);
            }
            let shift = n - 1;
            let mask = (1usize << shift) - 1;
            let mut out = PauliSum::zero(n);
            for r in 0..2 {
                for s in 0..2 {
                    let sub: Vec<_> = entries
                        .iter()
                        .filter(|(i, j, _)| (i >> shift) & 1 == r && (j >> shift) & 1 == s)
                        .map(|&(i, j, v)| (i & mask, j & mask, v))
                        .collect();
                    if sub.is_empty() {
                        continue;
                    }
                    out = &out + &PauliSum::outer(r, s).tensor(&split(n - 1, &sub));
                }
            }
            out
        }
        split(n, entries).simplify(PRUNE_TOL)
    }

    pub fn qubit_count(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of a letter string after merging; zero when absent.
    pub fn coefficient(&self, label: &str) -> C64 {
        self.terms
            .iter()
            .filter(|t| t.label() == label)
            .map(|t| t.coeff)
            .sum()
    }

    /// Merge like terms, drop |coeff| ≤ tol, order lexicographically.
    pub fn simplify(&self, tol: f64) -> Self {
        let mut map: BTreeMap<Vec<Pauli>, C64> = BTreeMap::new();
        for t in &self.terms {
            *map.entry(t.letters.clone()).or_insert(ZERO) += t.coeff;
        }
        let terms = map
            .into_iter()
            .filter(|(_, z)| z.norm() > tol)
            .map(|(letters, coeff)| PauliTerm { letters, coeff })
            .collect();
        PauliSum { n: self.n, terms }
    }

    pub fn scale(&self, z: C64) -> Self {
        PauliSum {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|t| PauliTerm::new(t.letters.clone(), t.coeff * z))
                .collect(),
        }
        .simplify(PRUNE_TOL)
    }

    pub fn checked_add(&self, other: &PauliSum) -> Result<Self> {
        self.check_width(other)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(PauliSum { n: self.n, terms }.simplify(PRUNE_TOL))
    }

    pub fn checked_mul(&self, other: &PauliSum) -> Result<Self> {
        self.check_width(other)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.mul(b)?);
            }
        }
        Ok(PauliSum { n: self.n, terms }.simplify(PRUNE_TOL))
    }

    /// Kronecker product; `self` occupies the leading qubits.
    pub fn tensor(&self, other: &PauliSum) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut letters = a.letters.clone();
                letters.extend_from_slice(&b.letters);
                terms.push(PauliTerm::new(letters, a.coeff * b.coeff));
            }
        }
        PauliSum {
            n: self.n + other.n,
            terms,
        }
        .simplify(PRUNE_TOL)
    }

    pub fn adjoint(&self) -> Self {
        PauliSum {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|t| PauliTerm::new(t.letters.clone(), t.coeff.conj()))
                .collect(),
        }
    }

    pub fn commutator(&self, other: &PauliSum) -> Result<Self> {
        self.checked_mul(other)?
            .checked_add(&other.checked_mul(self)?.scale(-ONE))
    }

    fn check_width(&self, other: &PauliSum) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "Pauli sums on {} and {} qubits",
                self.n, other.n
            )));
        }
        Ok(())
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        self.to_matrix_limited(DEFAULT_DENSE_LIMIT)
    }

    pub fn to_matrix_limited(&self, limit: usize) -> Result<CMat> {
        if self.n > limit {
            return Err(Error::Capacity {
                qubits: self.n,
                limit,
            });
        }
        let dim = 1usize << self.n;
        let mut m = CMat::zeros(dim, dim);
        for t in &self.terms {
            let mask = t.flip_mask();
            for col in 0..dim {
                m[(col ^ mask, col)] += t.coeff * t.column_phase(col);
            }
        }
        Ok(m)
    }

    /// One line per term: `<re> <im> <LETTERS>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.terms {
            out.push_str(&format!("{} {} {}\n", t.coeff.re, t.coeff.im, t.label()));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut n = None;
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: &str| Error::Parse {
                line: idx + 1,
                msg: msg.to_string(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(parse_err("expected `<re> <im> <LETTERS>`"));
            }
            let re: f64 = fields[0].parse().map_err(|_| parse_err("bad real part"))?;
            let im: f64 = fields[1].parse().map_err(|_| parse_err("bad imaginary part"))?;
            let letters = letters_from_str(fields[2]).map_err(|e| parse_err(&e.to_string()))?;
            match n {
                None => n = Some(letters.len()),
                Some(k) if k != letters.len() => {
                    return Err(parse_err("inconsistent qubit count"));
                }
                _ => {}
            }
            terms.push(PauliTerm::new(letters, c(re, im)));
        }
        PauliSum::from_terms(n.unwrap_or(0), terms)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl std::ops::Add for &PauliSum {
    type Output = PauliSum;
    fn add(self, rhs: &PauliSum) -> PauliSum {
        self.checked_add(rhs).expect("qubit count mismatch in Pauli sum addition")
    }
}

impl std::ops::Sub for &PauliSum {
    type Output = PauliSum;
    fn sub(self, rhs: &PauliSum) -> PauliSum {
        self.checked_add(&rhs.scale(-ONE))
            .expect("qubit count mismatch in Pauli sum subtraction")
    }
}

impl std::ops::Mul for &PauliSum {
    type Output = PauliSum;
    fn mul(self, rhs: &PauliSum) -> PauliSum {
        self.checked_mul(rhs).expect("qubit count mismatch in Pauli sum product")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, max_abs};
    use proptest::prelude::*;

    fn term(s: &str, z: C64) -> PauliTerm {
        PauliTerm::parse(s, z).unwrap()
    }

    fn kron_oracle(t: &PauliTerm) -> CMat {
        let mut m = CMat::identity(1, 1) * t.coeff;
        for p in &t.letters {
            m = kron(&m, &p.matrix());
        }
        m
    }

    #[test]
    fn single_letter_products() {
        assert_eq!(term("X", ONE).mul(&term("Z", ONE)).unwrap(), term("Y", -I));
        assert_eq!(
            term("I", real(2.0)).mul(&term("Y", real(3.0))).unwrap(),
            term("Y", real(6.0))
        );
        assert!(term("XX", ONE).mul(&term("X", ONE)).is_err());
    }

    #[test]
    fn ladder_times_z_flips_sign() {
        let plus = PauliSum::ladder(Ladder::Plus);
        let z = PauliSum::single(Pauli::Z);
        assert_eq!(&plus * &z, plus.scale(-ONE));
        assert_eq!(&z * &plus, plus);
    }

    #[test]
    fn simplify_examples() {
        let s = PauliSum::from_terms(2, vec![term("XX", ONE), term("XX", -ONE)]).unwrap();
        assert!(s.simplify(PRUNE_TOL).is_empty());
        let s = PauliSum::from_terms(2, vec![term("ZI", real(2.0)), term("IZ", real(3.0))]).unwrap();
        assert_eq!(s.simplify(PRUNE_TOL).len(), 2);
        let p = &PauliSum::ladder(Ladder::Plus) * &PauliSum::ladder(Ladder::Minus);
        assert_eq!(p, PauliSum::outer(0, 0));
        assert_eq!(p.coefficient("I"), real(0.5));
        assert_eq!(p.coefficient("Z"), real(0.5));
    }

    #[test]
    fn dense_examples() {
        let z = PauliSum::single(Pauli::Z).to_matrix().unwrap();
        assert_eq!(z, Pauli::Z.matrix());
        assert_eq!(PauliSum::zero(2).to_matrix().unwrap(), CMat::zeros(4, 4));
        let xx = PauliSum::from_labels(&[("XX", ONE)]).unwrap().to_matrix().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(xx[(i, j)], if i + j == 3 { ONE } else { ZERO });
            }
        }
        assert!(matches!(
            PauliSum::identity(15).to_matrix(),
            Err(Error::Capacity { qubits: 15, limit: 14 })
        ));
    }

    #[test]
    fn ladder_actions() {
        let plus = PauliSum::ladder(Ladder::Plus).to_matrix().unwrap();
        let minus = PauliSum::ladder(Ladder::Minus).to_matrix().unwrap();
        // columns are images of |0⟩ and |1⟩
        assert_eq!(plus.column(1).iter().cloned().collect::<Vec<_>>(), vec![ONE, ZERO]);
        assert_eq!(minus.column(1).iter().cloned().collect::<Vec<_>>(), vec![ZERO, ZERO]);
        assert_eq!(minus.column(0).iter().cloned().collect::<Vec<_>>(), vec![ZERO, ONE]);
    }

    #[test]
    fn projector_identities_exact() {
        for r in 0..2 {
            for s in 0..2 {
                let m = PauliSum::outer(r, s).to_matrix().unwrap();
                for i in 0..2 {
                    for j in 0..2 {
                        let want = if (i, j) == (r, s) { ONE } else { ZERO };
                        assert_eq!(m[(i, j)], want);
                    }
                }
            }
        }
    }

    #[test]
    fn outer_products_expand_exactly() {
        let entries = vec![(1, 0, ONE), (2, 1, real(2f64.sqrt())), (3, 2, real(3f64.sqrt()))];
        let s = PauliSum::from_outer_products(2, &entries);
        let m = s.to_matrix().unwrap();
        let mut want = CMat::zeros(4, 4);
        for &(i, j, v) in &entries {
            want[(i, j)] = v;
        }
        assert!(max_abs(&(m - want)) < 1e-15);
    }

    #[test]
    fn text_round_trip() {
        let s = PauliSum::from_labels(&[
            ("XIZ", c(0.1, -1.0 / 3.0)),
            ("YYI", real(std::f64::consts::PI)),
            ("III", real(-0.0)),
        ])
        .unwrap();
        let back = PauliSum::from_text(&s.to_text()).unwrap();
        assert_eq!(back, s);
        assert!(matches!(
            PauliSum::from_text("1 0 XX\n1 0 X\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    fn arb_letters(n: usize) -> impl Strategy<Value = Vec<Pauli>> {
        proptest::collection::vec(
            prop_oneof![Just(Pauli::I), Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)],
            n,
        )
    }

    fn arb_term(n: usize) -> impl Strategy<Value = PauliTerm> {
        (arb_letters(n), -2.0..2.0f64, -2.0..2.0f64)
            .prop_map(|(l, re, im)| PauliTerm::new(l, c(re, im)))
    }

    proptest! {
        #[test]
        fn product_matches_matrix_product(
            (a, b) in (1usize..=4).prop_flat_map(|n| (arb_term(n), arb_term(n)))
        ) {
            let lhs = a.mul(&b).unwrap().to_matrix().unwrap();
            let rhs = a.to_matrix().unwrap() * b.to_matrix().unwrap();
            prop_assert!(max_abs(&(lhs - rhs)) < 1e-12);
        }

        #[test]
        fn term_matrix_matches_kronecker(t in (1usize..=4).prop_flat_map(arb_term)) {
            prop_assert!(max_abs(&(t.to_matrix().unwrap() - kron_oracle(&t))) < 1e-12);
        }

        #[test]
        fn unit_terms_are_unitary(l in (1usize..=4).prop_flat_map(arb_letters)) {
            let m = PauliTerm::new(l, ONE).to_matrix().unwrap();
            let id = CMat::identity(m.nrows(), m.nrows());
            prop_assert!(max_abs(&(&m * m.adjoint() - id)) < 1e-12);
        }

        #[test]
        fn simplify_idempotent_and_matrix_preserving(
            terms in proptest::collection::vec(arb_term(3), 0..12)
        ) {
            let s = PauliSum::from_terms(3, terms).unwrap();
            let once = s.simplify(PRUNE_TOL);
            prop_assert_eq!(once.simplify(PRUNE_TOL), once.clone());
            let budget = PRUNE_TOL * s.len().max(1) as f64;
            prop_assert!(max_abs(&(s.to_matrix().unwrap() - once.to_matrix().unwrap())) <= budget);
        }
    }
}
