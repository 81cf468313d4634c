//! Dense complex operators and state vectors.
//!
//! Everything in the crate (states, observables, projectors, sampled group
//! elements, commutant elements) is carried by [`DenseOperator`], a square
//! complex matrix backed by `nalgebra`. Tensor products follow the usual
//! Kronecker convention: in `kron(a, b)` the factor `a` is the most
//! significant one, so qubit 0 is the leftmost factor and the most significant
//! bit of a computational-basis index.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Largest operator dimension the crate will build. Third-order commutant
/// elements at `d = 8` are `512 x 512`; states stop at seven qubits.
pub const MAX_DIM: usize = 1 << 10;

/// Structural-equality tolerance for closed-form comparisons.
pub const STRUCT_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// A square complex matrix.
#[derive(Clone, PartialEq)]
pub struct DenseOperator {
    m: DMatrix<C64>,
}

impl fmt::Debug for DenseOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseOperator(dim = {}) {}", self.dim(), self.m)
    }
}

impl DenseOperator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidParameter("operator dimension must be >= 1".into()));
        }
        check_dim(m.nrows())?;
        Ok(Self { m })
    }

    /// Wraps a matrix the caller already knows to be square and non-empty.
    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self { m }
    }

    pub fn zeros(d: usize) -> Self {
        Self::from_matrix_unchecked(DMatrix::zeros(d, d))
    }

    pub fn identity(d: usize) -> Self {
        Self::from_matrix_unchecked(DMatrix::identity(d, d))
    }

    pub fn from_fn(d: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self::from_matrix_unchecked(DMatrix::from_fn(d, d, f))
    }

    /// Builds a `d x d` operator from row-major entries.
    pub fn from_rows(d: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: entries.len(),
            });
        }
        Self::from_matrix(DMatrix::from_row_slice(d, d, entries))
    }

    /// Builds a real operator from row-major entries.
    pub fn from_real_rows(d: usize, entries: &[f64]) -> Result<Self> {
        let entries: Vec<C64> = entries.iter().map(|&x| re(x)).collect();
        Self::from_rows(d, &entries)
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        Self::from_matrix_unchecked(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.m[(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.m[(row, col)] = value;
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_matrix_unchecked(&self.m * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(re(s))
    }

    pub fn transpose(&self) -> Self {
        Self::from_matrix_unchecked(self.m.transpose())
    }

    pub fn conjugate(&self) -> Self {
        Self::from_matrix_unchecked(self.m.conjugate())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_matrix_unchecked(self.m.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// Hilbert-Schmidt inner product `Tr[a^dagger b]`.
    pub fn hs_inner(&self, other: &Self) -> Result<C64> {
        self.check_same_dim(other)?;
        Ok(self
            .m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `Tr[self * other]` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<C64> {
        self.check_same_dim(other)?;
        let d = self.dim();
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += self.m[(i, j)] * other.m[(j, i)];
            }
        }
        Ok(acc)
    }

    /// Schatten 2-norm `sqrt(Tr[a^dagger a])`.
    pub fn norm2(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Operator norm of a Hermitian operator, `max |eigenvalue|`.
    pub fn norm_inf(&self) -> Result<f64> {
        let ev = self.hermitian_eigenvalues()?;
        Ok(ev.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.m.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in max_abs_diff");
        self.m
            .iter()
            .zip(other.m.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim() == other.dim() && self.max_abs_diff(other) <= tol
    }

    /// `(a + a^T) / 2`.
    pub fn sym_part(&self) -> Self {
        Self::from_matrix_unchecked((&self.m + self.m.transpose()) * re(0.5))
    }

    /// `(a - a^T) / 2`.
    pub fn antisym_part(&self) -> Self {
        Self::from_matrix_unchecked((&self.m - self.m.transpose()) * re(0.5))
    }

    /// `a - (Tr a / d) I`.
    pub fn traceless_part(&self) -> Self {
        let d = self.dim();
        let shift = self.trace() / d as f64;
        let mut m = self.m.clone();
        for i in 0..d {
            m[(i, i)] -= shift;
        }
        Self::from_matrix_unchecked(m)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.dim();
        let mut dev = 0.0_f64;
        for i in 0..d {
            for j in i..d {
                dev = dev.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol * self.max_abs_entry().max(1.0)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let p = self.m.adjoint() * &self.m;
        let d = self.dim();
        (0..d).all(|i| {
            (0..d).all(|j| {
                let target = if i == j { ONE } else { ZERO };
                (p[(i, j)] - target).norm() <= tol
            })
        })
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.m.iter().all(|z| z.im.abs() <= tol)
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Sorted (ascending) eigenvalues of a Hermitian operator.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        self.require_hermitian()?;
        let mut ev: Vec<f64> = self.hermitian_part().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        Ok(ev)
    }

    /// Moore-Penrose pseudo-inverse of a Hermitian operator. Eigenvalues with
    /// magnitude below `rel_cutoff * max |eigenvalue|` are treated as zero.
    pub fn hermitian_pinv(&self, rel_cutoff: f64) -> Result<Self> {
        self.require_hermitian()?;
        let eig = self.hermitian_part().symmetric_eigen();
        let largest = eig.eigenvalues.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let cutoff = rel_cutoff * largest;
        let inv = eig.eigenvalues.map(|x| if x.abs() > cutoff { 1.0 / x } else { 0.0 });
        let v = &eig.eigenvectors;
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * inv[j]);
        Ok(Self::from_matrix_unchecked(&scaled * v.adjoint()))
    }

    /// `<psi| a |psi>`.
    pub fn expectation(&self, psi: &StateVector) -> Result<C64> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.dim(),
            });
        }
        let v = psi.as_vector();
        Ok(v.dotc(&(&self.m * v)))
    }

    pub fn apply(&self, psi: &StateVector) -> Result<DVector<C64>> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.dim(),
            });
        }
        Ok(&self.m * psi.as_vector())
    }

    /// `a x a^dagger`.
    pub fn conjugate_by(&self, u: &Self) -> Result<Self> {
        self.check_same_dim(u)?;
        Ok(Self::from_matrix_unchecked(&u.m * &self.m * u.m.adjoint()))
    }

    /// Frobenius norm of the commutator `[a, b]`.
    pub fn commutator_norm(&self, other: &Self) -> Result<f64> {
        self.check_same_dim(other)?;
        let comm = &self.m * &other.m - &other.m * &self.m;
        Ok(comm.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
    }

    pub fn kron(&self, other: &Self) -> Result<Self> {
        kron(self, other)
    }

    fn hermitian_part(&self) -> DMatrix<C64> {
        (&self.m + self.m.adjoint()) * re(0.5)
    }

    fn require_hermitian(&self) -> Result<()> {
        let deviation = self.hermiticity_deviation();
        if deviation > STRUCT_TOL * self.max_abs_entry().max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(())
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d > MAX_DIM {
        return Err(Error::DimensionLimit {
            requested: d,
            max: MAX_DIM,
        });
    }
    Ok(())
}

impl Add for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: Self) -> DenseOperator {
        DenseOperator::from_matrix_unchecked(&self.m + &rhs.m)
    }
}

impl Sub for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: Self) -> DenseOperator {
        DenseOperator::from_matrix_unchecked(&self.m - &rhs.m)
    }
}

impl Mul for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: Self) -> DenseOperator {
        DenseOperator::from_matrix_unchecked(&self.m * &rhs.m)
    }
}

impl Neg for &DenseOperator {
    type Output = DenseOperator;
    fn neg(self) -> DenseOperator {
        DenseOperator::from_matrix_unchecked(-&self.m)
    }
}

impl AddAssign<&DenseOperator> for DenseOperator {
    fn add_assign(&mut self, rhs: &DenseOperator) {
        self.m += &rhs.m;
    }
}

/// Kronecker product; `a` is the most significant factor.
pub fn kron(a: &DenseOperator, b: &DenseOperator) -> Result<DenseOperator> {
    let d = a.dim().checked_mul(b.dim()).unwrap_or(usize::MAX);
    check_dim(d)?;
    Ok(DenseOperator::from_matrix_unchecked(a.m.kronecker(&b.m)))
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a DenseOperator>) -> Result<DenseOperator> {
    let mut it = factors.into_iter();
    let first = it
        .next()
        .ok_or_else(|| Error::InvalidParameter("kron of an empty factor list".into()))?
        .clone();
    it.try_fold(first, |acc, f| kron(&acc, f))
}

/// `Tr_1` over the first tensor factor of dimension `d1`.
pub fn partial_trace_first(a: &DenseOperator, d1: usize) -> Result<DenseOperator> {
    if d1 == 0 || a.dim() % d1 != 0 {
        return Err(Error::NotDivisible {
            dim: a.dim(),
            factor: d1,
        });
    }
    let d2 = a.dim() / d1;
    Ok(DenseOperator::from_fn(d2, |i, j| {
        (0..d1).map(|k| a.m[(k * d2 + i, k * d2 + j)]).sum()
    }))
}

/// Matrix of a linear map on `d x d` operators in the matrix-unit basis
/// `E_ij` (column index `i * d + j`, row index likewise). The basis is
/// orthonormal for the Hilbert-Schmidt product, so a self-adjoint map gives a
/// Hermitian matrix.
pub fn superoperator_matrix(
    d: usize,
    mut map: impl FnMut(&DenseOperator) -> Result<DenseOperator>,
) -> Result<DenseOperator> {
    let dd = d * d;
    check_dim(dd)?;
    let mut out = DMatrix::<C64>::zeros(dd, dd);
    for i in 0..d {
        for j in 0..d {
            let mut unit = DenseOperator::zeros(d);
            unit.set(i, j, ONE);
            let image = map(&unit)?;
            for r in 0..d {
                for s in 0..d {
                    out[(r * d + s, i * d + j)] = image.get(r, s);
                }
            }
        }
    }
    DenseOperator::from_matrix(out)
}

/// A normalized complex vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    v: DVector<C64>,
}

impl StateVector {
    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if v.is_empty() || (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        check_dim(v.len())?;
        Ok(Self { v })
    }

    /// Normalizes `amplitudes`; fails on the zero vector.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if v.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        check_dim(v.len())?;
        Ok(Self { v: v / re(norm) })
    }

    pub fn basis(d: usize, index: usize) -> Self {
        assert!(index < d, "basis index {index} out of range for d = {d}");
        let mut v = DVector::zeros(d);
        v[index] = ONE;
        Self { v }
    }

    pub(crate) fn from_vector_unchecked(v: DVector<C64>) -> Self {
        Self { v }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.v.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.v
    }

    /// Entrywise complex conjugate `|psi*>`.
    pub fn conj(&self) -> Self {
        Self { v: self.v.conjugate() }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.v.dotc(&other.v)
    }

    /// `|psi><psi|`.
    pub fn projector(&self) -> DenseOperator {
        DenseOperator::from_matrix_unchecked(&self.v * self.v.adjoint())
    }

    pub fn kron(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim() * other.dim())?;
        Ok(Self { v: self.v.kronecker(&other.v) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Pauli;

    fn x() -> DenseOperator {
        Pauli::X.matrix()
    }
    fn y() -> DenseOperator {
        Pauli::Y.matrix()
    }
    fn z() -> DenseOperator {
        Pauli::Z.matrix()
    }

    fn naive_kron(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
        let (da, db) = (a.dim(), b.dim());
        let mut out = DenseOperator::zeros(da * db);
        for i in 0..da {
            for j in 0..da {
                for k in 0..db {
                    for l in 0..db {
                        out.set(i * db + k, j * db + l, a.get(i, j) * b.get(k, l));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn kron_identities() {
        let i4 = kron(&DenseOperator::identity(2), &DenseOperator::identity(2)).unwrap();
        assert!(i4.approx_eq(&DenseOperator::identity(4), 0.0));

        let zz = kron(&z(), &z()).unwrap();
        let expected = DenseOperator::diagonal(&[ONE, -ONE, -ONE, ONE]);
        assert!(zz.approx_eq(&expected, 0.0));

        let xz = kron(&x(), &z()).unwrap();
        assert_eq!(xz.get(0, 2), ONE);
        assert!(xz.approx_eq(&naive_kron(&x(), &z()), 0.0));
    }

    #[test]
    fn kron_dimension_limit() {
        let big = DenseOperator::identity(64);
        assert!(matches!(kron(&big, &big), Err(Error::DimensionLimit { .. })));
    }

    #[test]
    fn partial_trace_examples() {
        let rho = DenseOperator::from_real_rows(2, &[0.75, 0.25, 0.25, 0.25]).unwrap();
        let b = &x() + &z().scale(c(0.0, 2.0));
        let pt = partial_trace_first(&kron(&rho, &b).unwrap(), 2).unwrap();
        assert!(pt.approx_eq(&b, 1e-14));

        let pt = partial_trace_first(&DenseOperator::identity(4), 2).unwrap();
        assert!(pt.approx_eq(&DenseOperator::identity(2).scale_re(2.0), 0.0));

        // SWAP: brute-force index sum over the first factor.
        let swap = DenseOperator::from_fn(4, |r, s| {
            let (i, j) = (r / 2, r % 2);
            let (k, l) = (s / 2, s % 2);
            if i == l && j == k { ONE } else { ZERO }
        });
        let mut oracle = DenseOperator::zeros(2);
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = ZERO;
                for k in 0..2 {
                    acc += swap.get(k * 2 + i, k * 2 + j);
                }
                oracle.set(i, j, acc);
            }
        }
        let pt = partial_trace_first(&swap, 2).unwrap();
        assert!(pt.approx_eq(&oracle, 0.0));
        assert!(pt.approx_eq(&DenseOperator::identity(2), 0.0));

        assert!(matches!(
            partial_trace_first(&DenseOperator::identity(6), 4),
            Err(Error::NotDivisible { .. })
        ));
    }

    #[test]
    fn transposes_and_adjoints() {
        assert!(y().transpose().approx_eq(&-&y(), 0.0));
        assert!(x().transpose().approx_eq(&x(), 0.0));
        let h = DenseOperator::from_real_rows(2, &[1.0, 1.0, 1.0, -1.0])
            .unwrap()
            .scale_re(std::f64::consts::FRAC_1_SQRT_2);
        let s = DenseOperator::diagonal(&[ONE, I]);
        let u = &s * &h;
        assert!((&u.adjoint() * &u).approx_eq(&DenseOperator::identity(2), 1e-15));
    }

    #[test]
    fn norms_and_inner_products() {
        let zz = kron(&z(), &z()).unwrap();
        assert!((zz.norm2() - 2.0).abs() < 1e-15);
        assert!((z().norm_inf().unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(x().hs_inner(&y()).unwrap(), ZERO);
        let not_herm = DenseOperator::from_real_rows(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(not_herm.norm_inf(), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn symmetric_antisymmetric_traceless() {
        assert!(y().sym_part().approx_eq(&DenseOperator::zeros(2), 0.0));
        assert!(x().antisym_part().approx_eq(&DenseOperator::zeros(2), 0.0));
        let p0 = StateVector::basis(2, 0).projector();
        assert!(p0.traceless_part().approx_eq(&z().scale_re(0.5), 0.0));
    }

    #[test]
    fn state_vectors() {
        assert!(StateVector::new(vec![ONE, ONE]).is_err());
        let plus = StateVector::normalized(vec![ONE, ONE]).unwrap();
        assert!((plus.inner(&plus).re - 1.0).abs() < 1e-15);
        let p = plus.projector();
        assert!((p.trace().re - 1.0).abs() < 1e-15);
        assert!((p.expectation(&plus).unwrap().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pinv_of_projector_is_itself() {
        let p = StateVector::normalized(vec![ONE, I]).unwrap().projector();
        assert!(p.hermitian_pinv(1e-8).unwrap().approx_eq(&p, 1e-12));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn op(d: usize) -> impl Strategy<Value = DenseOperator> {
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d)
                .prop_map(move |v| {
                    let entries: Vec<C64> = v.into_iter().map(|(a, b)| c(a, b)).collect();
                    DenseOperator::from_rows(d, &entries).unwrap()
                })
        }

        proptest! {
            #[test]
            fn kron_is_associative(a in op(2), b in op(3), cc in op(2)) {
                let left = kron(&kron(&a, &b).unwrap(), &cc).unwrap();
                let right = kron(&a, &kron(&b, &cc).unwrap()).unwrap();
                prop_assert!(left.approx_eq(&right, 1e-12));
            }

            #[test]
            fn partial_trace_preserves_trace(m in op(6)) {
                let pt = partial_trace_first(&m, 2).unwrap();
                prop_assert!((pt.trace() - m.trace()).norm() < 1e-12);
                let pt = partial_trace_first(&m, 3).unwrap();
                prop_assert!((pt.trace() - m.trace()).norm() < 1e-12);
            }

            #[test]
            fn sym_part_is_an_orthogonal_projector(a in op(4), b in op(4)) {
                let s = a.sym_part();
                prop_assert!(s.sym_part().approx_eq(&s, 1e-15));
                prop_assert!((&a.sym_part() + &a.antisym_part()).approx_eq(&a, 1e-15));
                prop_assert!(a.sym_part().hs_inner(&b.antisym_part()).unwrap().norm() < 1e-12);
            }

            #[test]
            fn norm2_matches_singular_values(a in op(4)) {
                let h = &a + &a.adjoint();
                let sv = h.matrix().clone().singular_values();
                let from_sv = sv.iter().map(|s| s * s).sum::<f64>();
                let from_entries: f64 = (0..4)
                    .flat_map(|i| (0..4).map(move |j| (i, j)))
                    .map(|(i, j)| h.get(i, j).norm_sqr())
                    .sum();
                prop_assert!((h.norm2().powi(2) - from_sv).abs() < 1e-10);
                prop_assert!((from_entries - from_sv).abs() < 1e-10);
            }
        }
    }
}
