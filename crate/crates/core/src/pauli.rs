//! Pauli letters, Pauli strings and the Pauli-basis transform of dense
//! operators.
//!
//! A Pauli coefficient vector for an `n`-qubit operator has `4^n` entries;
//! entry `p` is `Tr[P_p A] / 2^n`, where the base-4 digits of `p` (qubit 0
//! most significant) pick the letters in the order `I, X, Y, Z`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{c, kron_all, re, DenseOperator, C64, I, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn matrix(self) -> DenseOperator {
        let entries = match self {
            Pauli::I => [ONE, ZERO, ZERO, ONE],
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, -I, I, ZERO],
            Pauli::Z => [ONE, ZERO, ZERO, -ONE],
        };
        DenseOperator::from_rows(2, &entries).expect("2x2 Pauli")
    }

    /// Real letters are exactly the symmetric ones: `I`, `X`, `Z`.
    pub fn is_real(self) -> bool {
        self != Pauli::Y
    }

    /// `self * other = phase * letter`.
    pub fn mul(self, other: Pauli) -> (C64, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (ONE, p),
            (a, b) if a == b => (ONE, I),
            (X, Y) => (I_PHASE, Z),
            (Y, Z) => (I_PHASE, X),
            (Z, X) => (I_PHASE, Y),
            (Y, X) => (-I_PHASE, Z),
            (Z, Y) => (-I_PHASE, X),
            (X, Z) => (-I_PHASE, Y),
            _ => unreachable!(),
        }
    }

    /// Action on a computational basis bit: `P|b> = phase |b ^ flip>`.
    fn action(self, bit: usize) -> (C64, usize) {
        match (self, bit) {
            (Pauli::I, b) => (ONE, b),
            (Pauli::X, b) => (ONE, b ^ 1),
            (Pauli::Y, 0) => (I, 1),
            (Pauli::Y, _) => (-I, 0),
            (Pauli::Z, 0) => (ONE, 0),
            (Pauli::Z, _) => (-ONE, 1),
        }
    }
}

const I_PHASE: C64 = I;

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ch = match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{ch}")
    }
}

impl TryFrom<char> for Pauli {
    type Error = Error;
    fn try_from(ch: char) -> Result<Self> {
        match ch.to_ascii_uppercase() {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::InvalidParameter(format!("not a Pauli letter: {other:?}"))),
        }
    }
}

/// A weighted tensor product of Pauli letters, qubit 0 first.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    letters: Vec<Pauli>,
    coefficient: C64,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self { letters, coefficient: ONE }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(vec![Pauli::I; n])
    }

    pub fn with_coefficient(mut self, coefficient: C64) -> Self {
        self.coefficient = coefficient;
        self
    }

    /// Decodes a base-4 index (qubit 0 most significant).
    pub fn from_index(index: usize, n: usize) -> Self {
        let letters = (0..n)
            .map(|j| Pauli::from_index((index >> (2 * (n - 1 - j))) & 3))
            .collect();
        Self::new(letters)
    }

    pub fn index(&self) -> usize {
        self.letters.iter().fold(0, |acc, p| (acc << 2) | p.index())
    }

    pub fn n(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn coefficient(&self) -> C64 {
        self.coefficient
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n()).filter(|&j| self.letters[j] != Pauli::I).collect()
    }

    /// No `Y` letter: the string is a real symmetric matrix.
    pub fn is_locally_real(&self) -> bool {
        self.letters.iter().all(|p| p.is_real())
    }

    pub fn y_count(&self) -> usize {
        self.letters.iter().filter(|&&p| p == Pauli::Y).count()
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        if self.letters.is_empty() {
            return Err(Error::InvalidParameter("empty Pauli string".into()));
        }
        let mats: Vec<DenseOperator> = self.letters.iter().map(|p| p.matrix()).collect();
        Ok(kron_all(&mats)?.scale(self.coefficient))
    }

    /// Product `self * other`, phases folded into the coefficient.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: other.n(),
            });
        }
        let mut coefficient = self.coefficient * other.coefficient;
        let letters = self
            .letters
            .iter()
            .zip(&other.letters)
            .map(|(&a, &b)| {
                let (phase, p) = a.mul(b);
                coefficient *= phase;
                p
            })
            .collect();
        Ok(PauliString { letters, coefficient })
    }

    /// `Tr[rho P]` in `O(d)` using the signed-permutation structure of `P`.
    pub fn expectation(&self, rho: &DenseOperator) -> Result<C64> {
        let n = self.n();
        if rho.dim() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                found: rho.dim(),
            });
        }
        let mut acc = ZERO;
        for x in 0..rho.dim() {
            let mut phase = ONE;
            let mut y = 0usize;
            for (j, p) in self.letters.iter().enumerate() {
                let bit = (x >> (n - 1 - j)) & 1;
                let (ph, out) = p.action(bit);
                phase *= ph;
                y |= out << (n - 1 - j);
            }
            // P|x> = phase |y>, so <x| rho P |x> = phase * rho[x, y].
            acc += phase * rho.get(x, y);
        }
        Ok(acc * self.coefficient)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coefficient != ONE {
            write!(f, "({})*", self.coefficient)?;
        }
        for p in &self.letters {
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .filter(|ch| !ch.is_whitespace() && *ch != '*' && *ch != '⊗')
            .map(Pauli::try_from)
            .collect::<Result<Vec<_>>>()?;
        if letters.is_empty() {
            return Err(Error::InvalidParameter("empty Pauli string".into()));
        }
        Ok(Self::new(letters))
    }
}

/// Number of qubits of a `2^n`-dimensional operator.
pub fn qubit_count(d: usize) -> Result<usize> {
    if d == 0 || !d.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("dimension {d} is not a power of two")));
    }
    Ok(d.trailing_zeros() as usize)
}

fn interleaved_index(r: usize, col: usize, n: usize) -> usize {
    (0..n).fold(0, |acc, j| {
        let shift = n - 1 - j;
        let digit = (((r >> shift) & 1) << 1) | ((col >> shift) & 1);
        (acc << 2) | digit
    })
}

/// Pauli coefficients `Tr[P_p A] / 2^n` for every string, in `O(n 4^n)`.
pub fn pauli_coefficients(a: &DenseOperator) -> Result<Vec<C64>> {
    let n = qubit_count(a.dim())?;
    let d = a.dim();
    let mut w = vec![ZERO; d * d];
    for r in 0..d {
        for col in 0..d {
            w[interleaved_index(r, col, n)] = a.get(r, col);
        }
    }
    let half = re(0.5);
    for j in 0..n {
        let stride = 1usize << (2 * (n - 1 - j));
        for base in 0..w.len() {
            if (base / stride) % 4 != 0 {
                continue;
            }
            let (m00, m01, m10, m11) = (w[base], w[base + stride], w[base + 2 * stride], w[base + 3 * stride]);
            w[base] = (m00 + m11) * half;
            w[base + stride] = (m01 + m10) * half;
            w[base + 2 * stride] = I * (m01 - m10) * half;
            w[base + 3 * stride] = (m00 - m11) * half;
        }
    }
    Ok(w)
}

/// Inverse of [`pauli_coefficients`].
pub fn from_pauli_coefficients(coeffs: &[C64], n: usize) -> Result<DenseOperator> {
    let d = 1usize << n;
    if coeffs.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: coeffs.len(),
        });
    }
    let mut w = coeffs.to_vec();
    for j in 0..n {
        let stride = 1usize << (2 * (n - 1 - j));
        for base in 0..w.len() {
            if (base / stride) % 4 != 0 {
                continue;
            }
            let (b0, bx, by, bz) = (w[base], w[base + stride], w[base + 2 * stride], w[base + 3 * stride]);
            w[base] = b0 + bz;
            w[base + stride] = bx - I * by;
            w[base + 2 * stride] = bx + I * by;
            w[base + 3 * stride] = b0 - bz;
        }
    }
    let mut out = DenseOperator::zeros(d);
    for r in 0..d {
        for col in 0..d {
            out.set(r, col, w[interleaved_index(r, col, n)]);
        }
    }
    Ok(out)
}

/// Nonzero terms of the Pauli expansion of `a` (magnitude above `tol`).
pub fn pauli_terms(a: &DenseOperator, tol: f64) -> Result<Vec<PauliString>> {
    let n = qubit_count(a.dim())?;
    Ok(pauli_coefficients(a)?
        .into_iter()
        .enumerate()
        .filter(|(_, coeff)| coeff.norm() > tol)
        .map(|(idx, coeff)| PauliString::from_index(idx, n).with_coefficient(coeff))
        .collect())
}

/// A computational-basis or Pauli-eigenbasis single-qubit state label:
/// `0`, `1`, `+`, `-`, `r` (= `(|0> + i|1>)/sqrt 2`), `l`.
pub fn single_qubit_state(label: char) -> Result<[C64; 2]> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Ok(match label {
        '0' => [ONE, ZERO],
        '1' => [ZERO, ONE],
        '+' => [re(h), re(h)],
        '-' => [re(h), re(-h)],
        'r' | 'R' => [re(h), c(0.0, h)],
        'l' | 'L' => [re(h), c(0.0, -h)],
        other => return Err(Error::InvalidParameter(format!("unknown single-qubit state {other:?}"))),
    })
}
