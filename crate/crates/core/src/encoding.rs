//! Pauli-correlation encodings.
//!
//! Vertex `i` is bound to a `k`-body string `A^{⊗k}` on a subset of the `n`
//! qubits, with `A ∈ {X, Y, Z}`; its bit is read out as the sign of the
//! string's expectation value. Strings sharing an axis commute, so the three
//! families are estimated from three measurement settings.
//!
//! Canonical order enumerates supports lexicographically and interleaves the
//! axes X, Y, Z per support, so string `i` has axis `i mod 3`.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Assignment;

/// Largest register the bitmask representation supports.
pub const MAX_QUBITS: usize = 62;

/// Largest register for dense density matrices.
pub const DENSE_QUBIT_LIMIT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i % 3]
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        })
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" | "x" => Ok(Axis::X),
            "Y" | "y" => Ok(Axis::Y),
            "Z" | "z" => Ok(Axis::Z),
            _ => Err(Error::InvalidArgument(format!("unknown Pauli axis `{s}`"))),
        }
    }
}

/// `A^{⊗k}` on a sorted support, identity elsewhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    axis: Axis,
    support: Vec<usize>,
    mask: u64,
}

impl PauliString {
    pub fn new(axis: Axis, support: Vec<usize>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidArgument("Pauli string support is empty".into()));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "support {support:?} is not strictly increasing"
            )));
        }
        if let Some(&q) = support.iter().find(|&&q| q >= MAX_QUBITS) {
            return Err(Error::InvalidArgument(format!("qubit {q} exceeds {MAX_QUBITS}")));
        }
        let mask = support.iter().fold(0u64, |m, &q| m | 1 << q);
        Ok(PauliString { axis, support, mask })
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Body order `k`.
    pub fn weight(&self) -> usize {
        self.support.len()
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    /// Image of basis state `|l⟩`: returns `(l', c)` with `P|l⟩ = c|l'⟩`.
    #[inline]
    pub fn apply_to_basis(&self, l: usize) -> (usize, Complex64) {
        let mask = self.mask as usize;
        let odd = (l & mask).count_ones() & 1 == 1;
        let sign = if odd { -1.0 } else { 1.0 };
        match self.axis {
            Axis::Z => (l, Complex64::new(sign, 0.0)),
            Axis::X => (l ^ mask, Complex64::new(1.0, 0.0)),
            Axis::Y => (l ^ mask, i_pow(self.support.len()) * sign),
        }
    }

    /// Same-axis strings always commute; mixed-axis strings commute iff their
    /// supports overlap on an even number of qubits.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        self.axis == other.axis || (self.mask & other.mask).count_ones().is_multiple_of(2)
    }

    /// Dense `2^n × 2^n` matrix.
    pub fn to_dense(&self, n: usize) -> DMatrix<Complex64> {
        let d = 1usize << n;
        let mut out = DMatrix::zeros(d, d);
        for l in 0..d {
            let (row, c) = self.apply_to_basis(l);
            out[(row, l)] = c;
        }
        out
    }
}

pub(crate) fn i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.axis)?;
        for q in &self.support {
            write!(f, " {q}")?;
        }
        Ok(())
    }
}

/// An ordered list of `m` strings on `n` qubits grouped in three commuting families.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    n: usize,
    k: usize,
    strings: Vec<PauliString>,
    families: [Vec<usize>; 3],
}

impl Encoding {
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn body_order(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn strings(&self) -> &[PauliString] {
        &self.strings
    }

    /// Indices of the strings measured in the given basis.
    pub fn family(&self, axis: Axis) -> &[usize] {
        &self.families[axis.index()]
    }

    pub fn capacity(&self) -> usize {
        capacity(self.n, self.k)
    }

    /// One line per string: `index axis q1 … qk`.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.strings.iter().enumerate() {
            out.push_str(&format!("{i} {s}\n"));
        }
        out
    }

    /// Parse the output of [`Encoding::export_text`] for a register of `n` qubits.
    pub fn parse_export(text: &str, n: usize) -> Result<Self> {
        let mut strings = Vec::new();
        for (lineno, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let perr = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let mut fields = line.split_whitespace();
            let idx: usize = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| perr("missing index".into()))?;
            if idx != strings.len() {
                return Err(perr(format!("expected index {}, found {idx}", strings.len())));
            }
            let axis: Axis = fields
                .next()
                .ok_or_else(|| perr("missing axis".into()))?
                .parse()
                .map_err(|e: Error| perr(e.to_string()))?;
            let support = fields
                .map(|s| s.parse::<usize>().map_err(|_| perr(format!("bad qubit `{s}`"))))
                .collect::<Result<Vec<_>>>()?;
            if support.iter().any(|&q| q >= n) {
                return Err(perr(format!("support {support:?} exceeds {n} qubits")));
            }
            strings.push(PauliString::new(axis, support).map_err(|e| perr(e.to_string()))?);
        }
        let k = strings.first().map_or(1, PauliString::weight);
        if strings.iter().any(|s| s.weight() != k) {
            return Err(Error::InvalidArgument("mixed body orders in encoding".into()));
        }
        Encoding::from_strings(n, k, strings)
    }

    fn from_strings(n: usize, k: usize, strings: Vec<PauliString>) -> Result<Self> {
        let mut families: [Vec<usize>; 3] = Default::default();
        let mut seen = std::collections::HashSet::new();
        for (i, s) in strings.iter().enumerate() {
            if !seen.insert((s.axis, s.mask)) {
                return Err(Error::InvalidArgument(format!("duplicate string {s}")));
            }
            families[s.axis.index()].push(i);
        }
        Ok(Encoding {
            n,
            k,
            strings,
            families,
        })
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i as u128 + 1);
    }
    acc
}

/// Number of strings available on `n` qubits at body order `k`: `3·C(n, k)`.
pub fn capacity(n: usize, k: usize) -> usize {
    usize::try_from(3 * binomial(n, k)).unwrap_or(usize::MAX)
}

/// Canonical encoding truncated to its first `m` strings.
pub fn build_encoding(n: usize, k: usize, m: usize) -> Result<Encoding> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 ≤ k ≤ n, got k={k}, n={n}")));
    }
    if n > MAX_QUBITS {
        return Err(Error::TooLarge {
            what: "register",
            size: n,
            limit: MAX_QUBITS,
            hint: "reduce the qubit count",
        });
    }
    let cap = capacity(n, k);
    if m > cap {
        return Err(Error::CapacityExceeded {
            requested: m,
            n,
            k,
            capacity: cap,
        });
    }
    let mut strings = Vec::with_capacity(m);
    let mut support: Vec<usize> = (0..k).collect();
    'outer: loop {
        for axis in Axis::ALL {
            if strings.len() == m {
                break 'outer;
            }
            strings.push(PauliString::new(axis, support.clone())?);
        }
        if !next_combination(&mut support, n) {
            break;
        }
    }
    Encoding::from_strings(n, k, strings)
}

/// Advance to the lexicographically next `k`-subset of `0..n`.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in (i + 1)..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Smallest `n ≥ k` with `3·C(n, k) ≥ m`.
pub fn min_qubits(m: usize, k: usize) -> usize {
    let k = k.max(1);
    let mut n = k;
    while capacity(n, k) < m {
        n += 1;
    }
    n
}

/// Sign readout with `sgn(0) = +1`.
pub fn assignment_from_expectations(e: &[f64]) -> Assignment {
    Assignment::new(e.iter().map(|&v| if v >= 0.0 { 1 } else { -1 }).collect())
        .expect("signs are ±1")
}

/// Basis-measurement outcomes of one family: bit `q` set means qubit `q` read −1.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FamilySamples {
    pub outcomes: [Vec<u64>; 3],
}

impl FamilySamples {
    pub fn get(&self, axis: Axis) -> &[u64] {
        &self.outcomes[axis.index()]
    }
}

/// Outcome histograms per family, indexed by the outcome bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyCounts {
    pub counts: [Vec<u64>; 3],
}

impl FamilyCounts {
    pub fn from_samples(samples: &FamilySamples, n: usize) -> Self {
        let mut counts: [Vec<u64>; 3] = std::array::from_fn(|_| vec![0; 1 << n]);
        for (f, outcomes) in samples.outcomes.iter().enumerate() {
            for &o in outcomes {
                counts[f][o as usize] += 1;
            }
        }
        FamilyCounts { counts }
    }
}

/// Unbiased correlator estimates: per string, the mean over its family's
/// samples of the product of the ±1 outcomes on its support.
pub fn estimate_expectations(enc: &Encoding, samples: &FamilySamples) -> Result<Vec<f64>> {
    let mut est = vec![0.0; enc.len()];
    for axis in Axis::ALL {
        let members = enc.family(axis);
        if members.is_empty() {
            continue;
        }
        let outcomes = samples.get(axis);
        if outcomes.is_empty() {
            return Err(Error::InvalidArgument(format!("no samples for the {axis} family")));
        }
        let shots = outcomes.len() as f64;
        for &i in members {
            let mask = enc.strings[i].mask;
            let odd = outcomes
                .iter()
                .filter(|&&o| (o & mask).count_ones() & 1 == 1)
                .count() as f64;
            est[i] = (shots - 2.0 * odd) / shots;
        }
    }
    Ok(est)
}

/// Same estimator as [`estimate_expectations`], from histograms.
pub fn estimate_from_counts(enc: &Encoding, counts: &FamilyCounts) -> Result<Vec<f64>> {
    let mut est = vec![0.0; enc.len()];
    for axis in Axis::ALL {
        let members = enc.family(axis);
        if members.is_empty() {
            continue;
        }
        let hist = &counts.counts[axis.index()];
        let shots: u64 = hist.iter().sum();
        if shots == 0 {
            return Err(Error::InvalidArgument(format!("no samples for the {axis} family")));
        }
        for &i in members {
            let mask = enc.strings[i].mask as usize;
            let signed: i64 = hist
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(o, &c)| if (o & mask).count_ones() & 1 == 1 { -(c as i64) } else { c as i64 })
                .sum();
            est[i] = signed as f64 / shots as f64;
        }
    }
    Ok(est)
}

/// Mixed state `(I + γ Σ_i x_i Π_i)/2^n` with `Tr[ρ Π_i] = γ x_i`.
///
/// Positive semidefinite whenever `γ ≤ 1/m`.
pub fn witness_with_magnitude(x: &Assignment, enc: &Encoding, gamma: f64) -> Result<DMatrix<Complex64>> {
    if x.len() != enc.len() {
        return Err(Error::LengthMismatch {
            expected: enc.len(),
            actual: x.len(),
        });
    }
    let n = enc.n;
    if n > DENSE_QUBIT_LIMIT {
        return Err(Error::TooLarge {
            what: "dense witness register",
            size: n,
            limit: DENSE_QUBIT_LIMIT,
            hint: "witness states are built densely",
        });
    }
    let d = 1usize << n;
    let scale = 1.0 / d as f64;
    let mut rho = DMatrix::<Complex64>::identity(d, d) * Complex64::new(scale, 0.0);
    for (s, &xi) in enc.strings.iter().zip(x.as_slice()) {
        let c = gamma * f64::from(xi) * scale;
        for l in 0..d {
            let (row, ph) = s.apply_to_basis(l);
            rho[(row, l)] += ph * c;
        }
    }
    Ok(rho)
}

/// Feasibility witness with the uniform magnitude `1/m`.
pub fn encodability_witness(x: &Assignment, enc: &Encoding) -> Result<DMatrix<Complex64>> {
    witness_with_magnitude(x, enc, 1.0 / enc.len() as f64)
}

/// `Tr[P ρ]` for a dense matrix in `O(2^n)`.
pub fn dense_expectation(rho: &DMatrix<Complex64>, p: &PauliString) -> Complex64 {
    // P|l⟩ = c|l'⟩ puts c at P[l', l], so Tr[Pρ] = Σ_l c·ρ[l, l']
    (0..rho.nrows())
        .map(|j| {
            let (row, c) = p.apply_to_basis(j);
            c * rho[(j, row)]
        })
        .sum()
}
