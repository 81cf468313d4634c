//! Measurement bases and their reality.
//!
//! The reality of a basis vector is `alpha_w = |<w|w*>|^2`, which is 1 for a
//! real vector and 0 for a vector orthogonal to its own conjugate such as
//! `(|0> + i|1>)/sqrt 2`. The reality of a basis is the sum `alpha` over its
//! vectors, so `0 <= alpha <= d`.
//!
//! Gate conventions: `S = diag(1, i)` and `H = [[1, 1], [1, -1]] / sqrt 2`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{c, re, DenseOperator, StateVector, C64, ZERO};
use crate::sampling::{haar_unitary, RngStream};

/// Stream id used when a random basis is requested by seed alone.
pub const RANDOM_BASIS_STREAM: u64 = u64::MAX - 1;

const ORTHONORMAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BasisTag {
    Computational,
    Sh,
    Random(u64),
    Custom,
}

impl fmt::Display for BasisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisTag::Computational => f.write_str("computational"),
            BasisTag::Sh => f.write_str("sh"),
            BasisTag::Random(seed) => write!(f, "random:{seed}"),
            BasisTag::Custom => f.write_str("custom"),
        }
    }
}

impl FromStr for BasisTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "computational" | "z" => Ok(BasisTag::Computational),
            "sh" => Ok(BasisTag::Sh),
            _ => match s.strip_prefix("random:") {
                Some(seed) => seed
                    .parse()
                    .map(BasisTag::Random)
                    .map_err(|_| Error::InvalidParameter(format!("bad random basis seed in {s:?}"))),
                None => Err(Error::InvalidParameter(format!(
                    "unknown basis tag {s:?} (expected computational, sh or random:SEED)"
                ))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBasis {
    vectors: Vec<StateVector>,
    alpha_per_vector: Vec<f64>,
    alpha_total: f64,
    tag: BasisTag,
}

impl MeasurementBasis {
    fn build(vectors: Vec<StateVector>, tag: BasisTag) -> Self {
        let alpha_per_vector: Vec<f64> = vectors.iter().map(vector_reality).collect();
        let alpha_total = alpha_per_vector.iter().sum();
        Self {
            vectors,
            alpha_per_vector,
            alpha_total,
            tag,
        }
    }

    /// The computational basis of `n` qubits.
    pub fn computational(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need n >= 1".into()));
        }
        Ok(Self::computational_dim(1 << n))
    }

    pub fn computational_dim(d: usize) -> Self {
        Self::build((0..d).map(|i| StateVector::basis(d, i)).collect(), BasisTag::Computational)
    }

    /// Columns of `(S H)^{⊗n}`; every vector has reality 0.
    pub fn sh(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need n >= 1".into()));
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // Column b of S H is (1, i (-1)^b) / sqrt 2.
        let column = |b: usize| [re(h), if b == 0 { c(0.0, h) } else { c(0.0, -h) }];
        let d = 1usize << n;
        let vectors = (0..d)
            .map(|z| {
                let amps = (0..d)
                    .map(|x| {
                        (0..n).fold(re(1.0), |acc, j| {
                            let shift = n - 1 - j;
                            acc * column((z >> shift) & 1)[(x >> shift) & 1]
                        })
                    })
                    .collect();
                StateVector::from_vector_unchecked(nalgebra::DVector::from_vec(amps))
            })
            .collect();
        Ok(Self::build(vectors, BasisTag::Sh))
    }

    /// Columns of a Haar-random unitary drawn from `rng`.
    pub fn random(rng: &mut RngStream, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter("random bases need d >= 2".into()));
        }
        let u = haar_unitary(rng, d);
        let vectors = (0..d)
            .map(|j| {
                let col: Vec<C64> = (0..d).map(|i| u.get(i, j)).collect();
                StateVector::from_vector_unchecked(nalgebra::DVector::from_vec(col))
            })
            .collect();
        Ok(Self::build(vectors, BasisTag::Random(rng.seed())))
    }

    pub fn random_seeded(seed: u64, d: usize) -> Result<Self> {
        Self::random(&mut RngStream::new(seed, RANDOM_BASIS_STREAM), d)
    }

    /// A user-supplied orthonormal basis.
    pub fn custom(vectors: Vec<StateVector>) -> Result<Self> {
        let d = vectors.len();
        if d < 2 || vectors.iter().any(|v| v.dim() != d) {
            return Err(Error::InvalidParameter(format!(
                "a basis of C^d needs exactly d vectors of dimension d (got {d})"
            )));
        }
        check_orthonormal(&vectors)?;
        Ok(Self::build(vectors, BasisTag::Custom))
    }

    pub fn from_tag(tag: &BasisTag, n: usize) -> Result<Self> {
        match tag {
            BasisTag::Computational => Self::computational(n),
            BasisTag::Sh => Self::sh(n),
            BasisTag::Random(seed) => Self::random_seeded(*seed, 1 << n),
            BasisTag::Custom => Err(Error::InvalidParameter("custom bases need explicit vectors".into())),
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[StateVector] {
        &self.vectors
    }

    pub fn vector(&self, w: usize) -> &StateVector {
        &self.vectors[w]
    }

    pub fn alpha_per_vector(&self) -> &[f64] {
        &self.alpha_per_vector
    }

    pub fn alpha_total(&self) -> f64 {
        self.alpha_total
    }

    /// `f = alpha / d`.
    pub fn reality_fraction(&self) -> f64 {
        self.alpha_total / self.dim() as f64
    }

    pub fn tag(&self) -> &BasisTag {
        &self.tag
    }

    pub fn is_computational(&self) -> bool {
        self.tag == BasisTag::Computational
    }

    /// The basis vectors as the columns of a unitary matrix.
    pub fn matrix(&self) -> DenseOperator {
        DenseOperator::from_fn(self.dim(), |i, j| self.vectors[j].amplitudes()[i])
    }
}

/// `alpha_w = |<w|w*>|^2 = |sum_i w_i^2|^2`.
pub fn vector_reality(w: &StateVector) -> f64 {
    w.amplitudes().iter().map(|a| a * a).sum::<C64>().norm_sqr()
}

/// Recomputes `(alpha_w for each w, alpha)` from the basis vectors, checking
/// orthonormality first.
pub fn reality(basis: &MeasurementBasis) -> Result<(Vec<f64>, f64)> {
    check_orthonormal(basis.vectors())?;
    let per: Vec<f64> = basis.vectors().iter().map(vector_reality).collect();
    let total = per.iter().sum();
    Ok((per, total))
}

fn check_orthonormal(vectors: &[StateVector]) -> Result<()> {
    let mut deviation = 0.0_f64;
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            let ip = if a.dim() == b.dim() { a.inner(b) } else { ZERO };
            deviation = deviation.max((ip - re(target)).norm());
        }
    }
    if deviation > ORTHONORMAL_TOL {
        return Err(Error::NonOrthonormal { deviation });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use crate::sampling::haar_orthogonal;

    #[test]
    fn computational_reality() {
        assert_eq!(MeasurementBasis::computational(1).unwrap().alpha_total(), 2.0);
        let b = MeasurementBasis::computational(3).unwrap();
        assert_eq!(b.alpha_total(), 8.0);
        assert!(b.alpha_per_vector().iter().all(|&a| a == 1.0));
        assert!(b.matrix().approx_eq(&DenseOperator::identity(8), 0.0));
        assert_eq!(reality(&b).unwrap(), (vec![1.0; 8], 8.0));
    }

    #[test]
    fn sh_basis_has_zero_reality() {
        let b1 = MeasurementBasis::sh(1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(b1.vector(0).amplitudes(), &[re(h), c(0.0, h)]);
        // <w|w*> = (1 - 1) / 2 for w = (1, i) / sqrt 2.
        assert_eq!(b1.vector(0).inner(&b1.vector(0).conj()), ZERO);
        for n in 1..=4 {
            let b = MeasurementBasis::sh(n).unwrap();
            assert_eq!(b.alpha_total(), 0.0);
            assert!(b.matrix().is_unitary(1e-12));
        }
    }

    #[test]
    fn reality_depends_on_the_basis_not_the_span() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus_i = StateVector::new(vec![re(h), c(0.0, h)]).unwrap();
        let minus_i = StateVector::new(vec![re(h), c(0.0, -h)]).unwrap();
        let b = MeasurementBasis::custom(vec![plus_i, minus_i]).unwrap();
        let (per, total) = reality(&b).unwrap();
        assert!(per.iter().all(|&a| a.abs() < 1e-15));
        assert!(total.abs() < 1e-15);
    }

    #[test]
    fn non_orthonormal_custom_basis_is_rejected() {
        let a = StateVector::basis(2, 0);
        let b = StateVector::normalized(vec![ONE, ONE]).unwrap();
        assert!(matches!(MeasurementBasis::custom(vec![a, b]), Err(Error::NonOrthonormal { .. })));
    }

    #[test]
    fn random_basis_mean_reality() {
        // E[alpha] = 2d / (d + 1) for the columns of a Haar unitary.
        for d in [2usize, 8] {
            let mut rng = RngStream::new(77, d as u64);
            let n = 10_000;
            let alphas: Vec<f64> = (0..n)
                .map(|_| MeasurementBasis::random(&mut rng, d).unwrap().alpha_total())
                .collect();
            assert!(alphas.iter().all(|&a| (0.0..=d as f64 + 1e-12).contains(&a)));
            let mean = alphas.iter().sum::<f64>() / n as f64;
            let var = alphas.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            let target = 2.0 * d as f64 / (d as f64 + 1.0);
            assert!((mean - target).abs() < 3.0 * se, "d = {d}: {mean} vs {target} (se {se})");
        }
    }

    #[test]
    fn reality_is_invariant_under_real_rotations() {
        let mut rng = RngStream::new(8, 0);
        let basis = MeasurementBasis::random(&mut rng, 4).unwrap();
        let o = haar_orthogonal(&mut rng, 4);
        for (w, a) in basis.vectors().iter().zip(basis.alpha_per_vector()) {
            let rotated = StateVector::normalized(o.apply(w).unwrap().iter().copied().collect()).unwrap();
            assert!((vector_reality(&rotated) - a).abs() < 1e-12);
        }
    }

    #[test]
    fn reality_is_multiplicative_under_tensor_products() {
        let mut rng = RngStream::new(10, 0);
        let a = MeasurementBasis::random(&mut rng, 2).unwrap();
        let b = MeasurementBasis::random(&mut rng, 4).unwrap();
        let v = a.vector(0).kron(b.vector(1)).unwrap();
        let expected = a.alpha_per_vector()[0] * b.alpha_per_vector()[1];
        assert!((vector_reality(&v) - expected).abs() < 1e-12);
    }

    #[test]
    fn tags_parse() {
        assert_eq!("random:42".parse::<BasisTag>().unwrap(), BasisTag::Random(42));
        assert_eq!("SH".parse::<BasisTag>().unwrap(), BasisTag::Sh);
        assert!("nope".parse::<BasisTag>().is_err());
        let b = MeasurementBasis::from_tag(&BasisTag::Random(42), 2).unwrap();
        assert_eq!(b, MeasurementBasis::random_seeded(42, 4).unwrap());
    }
}
