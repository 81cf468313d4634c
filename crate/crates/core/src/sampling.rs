//! Seeded sampling of Haar-random unitary and orthogonal matrices.
//!
//! Shadow statistics depend on the sampled ensemble only through its moments
//! of order at most three, and the real Clifford group agrees with Haar
//! `O(d)` up to that order. Multi-qubit transforms are therefore drawn from
//! the Haar measure directly; the single-qubit real Clifford group is
//! enumerated explicitly so that the equivalence can be checked.

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::ensemble::{EnsembleSpec, Group};
use crate::error::Result;
use crate::linalg::{c, kron_all, re, DenseOperator, C64};

/// A reproducible random stream identified by `(seed, stream id)`.
///
/// Backed by ChaCha20: the seed keys the generator and the stream id selects
/// one of its 2^64 independent streams, so distinct ids never overlap.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub const ALGORITHM: &'static str = "ChaCha20 (rand_chacha 0.9, seed_from_u64 + set_stream)";

    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Circularly symmetric complex Gaussian with `E|z|^2 = 1`.
    pub fn complex_normal(&mut self) -> C64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        c(s * self.standard_normal(), s * self.standard_normal())
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// QR of a Ginibre matrix with the phases of `R`'s diagonal moved into `Q`.
/// Without that correction the distribution of `Q` is not Haar.
fn haar_from_ginibre(g: DMatrix<C64>) -> DenseOperator {
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..q.ncols() {
        let rjj = r[(j, j)];
        let norm = rjj.norm();
        let phase = if norm > 0.0 { rjj / norm } else { re(1.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    DenseOperator::from_matrix_unchecked(q)
}

/// Haar-random element of `U(d)`.
pub fn haar_unitary(rng: &mut RngStream, d: usize) -> DenseOperator {
    let g = DMatrix::from_fn(d, d, |_, _| rng.complex_normal());
    haar_from_ginibre(g)
}

/// Haar-random element of `O(d)`; the result is exactly real.
pub fn haar_orthogonal(rng: &mut RngStream, d: usize) -> DenseOperator {
    let g = DMatrix::from_fn(d, d, |_, _| re(rng.standard_normal()));
    let mut q = haar_from_ginibre(g).into_matrix();
    // Householder QR of a real input can leave -0.0 or rounding residue in
    // the imaginary parts; the group is real, so drop them.
    for z in q.iter_mut() {
        z.im = 0.0;
    }
    DenseOperator::from_matrix_unchecked(q)
}

pub fn haar(rng: &mut RngStream, group: Group, d: usize) -> DenseOperator {
    match group {
        Group::Unitary => haar_unitary(rng, d),
        Group::Orthogonal => haar_orthogonal(rng, d),
    }
}

/// The single-qubit real Clifford group `Cl_1 ∩ O(2)` modulo the global sign
/// `-1`: the four rotations by multiples of 45° and the four reflections
/// across lines at multiples of 22.5° (this includes `Z`, `H` and `X`).
pub fn real_clifford_group_1q() -> Vec<DenseOperator> {
    let step = std::f64::consts::FRAC_PI_4;
    let rotations = (0..4).map(|k| {
        let (s, co) = (k as f64 * step).sin_cos();
        [co, -s, s, co]
    });
    let reflections = (0..4).map(|k| {
        let (s, co) = (k as f64 * step).sin_cos();
        [co, s, s, -co]
    });
    rotations
        .chain(reflections)
        .map(|e| {
            let e = e.map(snap);
            DenseOperator::from_real_rows(2, &e).expect("2x2")
        })
        .collect()
}

fn snap(x: f64) -> f64 {
    for target in [0.0, 1.0, -1.0] {
        if (x - target).abs() < 1e-15 {
            return target;
        }
    }
    x
}

/// Uniform draw from [`real_clifford_group_1q`].
pub fn real_clifford_1q(rng: &mut RngStream) -> DenseOperator {
    let group = real_clifford_group_1q();
    let k = rng.below(group.len());
    group[k].clone()
}

/// One draw from an ensemble: a single `d x d` matrix or one `2 x 2` factor
/// per qubit.
#[derive(Clone, Debug, PartialEq)]
pub enum SampledTransform {
    Global(DenseOperator),
    Local(Vec<DenseOperator>),
}

impl SampledTransform {
    pub fn factors(&self) -> &[DenseOperator] {
        match self {
            SampledTransform::Global(u) => std::slice::from_ref(u),
            SampledTransform::Local(fs) => fs,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SampledTransform::Global(u) => u.dim(),
            SampledTransform::Local(fs) => 1 << fs.len(),
        }
    }

    /// The full `d x d` matrix (Kronecker product of local factors).
    pub fn to_dense(&self) -> Result<DenseOperator> {
        match self {
            SampledTransform::Global(u) => Ok(u.clone()),
            SampledTransform::Local(fs) => kron_all(fs),
        }
    }
}

pub fn sample_transform(rng: &mut RngStream, spec: &EnsembleSpec) -> SampledTransform {
    match spec {
        EnsembleSpec::Global { group, basis } => SampledTransform::Global(haar(rng, *group, basis.dim())),
        EnsembleSpec::Local { groups } => {
            SampledTransform::Local(groups.iter().map(|&g| haar(rng, g, 2)).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::MeasurementBasis;
    use crate::linalg::{StateVector, ONE};
    use crate::pauli::Pauli;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        let mut other = RngStream::new(7, 4);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let zs: Vec<u64> = (0..8).map(|_| other.next_u64()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }

    #[test]
    fn haar_outputs_are_unitary_and_orthogonal() {
        let mut rng = RngStream::new(1, 0);
        for d in [1, 2, 3, 4, 8] {
            let u = haar_unitary(&mut rng, d);
            assert!(u.is_unitary(1e-10));
            for j in 0..d {
                let norm: f64 = (0..d).map(|i| u.get(i, j).norm_sqr()).sum();
                assert!((norm - 1.0).abs() < 1e-10);
            }
            let o = haar_orthogonal(&mut rng, d);
            assert!(o.is_unitary(1e-10));
            assert!((&o.transpose() * &o).approx_eq(&DenseOperator::identity(d), 1e-10));
            assert!(o.matrix().iter().all(|z| z.im == 0.0));
        }
    }

    #[test]
    fn unitary_fourth_moment_and_mean() {
        // E|U_11|^4 = 2 / (d^2 + d) = 1/3 at d = 2.
        let mut rng = RngStream::new(11, 0);
        let n = 100_000;
        let mut s4 = 0.0;
        let mut s8 = 0.0;
        let mut mean = C64::new(0.0, 0.0);
        for _ in 0..n {
            let u = haar_unitary(&mut rng, 2);
            let x = u.get(0, 0).norm_sqr().powi(2);
            s4 += x;
            s8 += x * x;
            mean += u.get(0, 1);
        }
        let m4 = s4 / n as f64;
        let sigma = ((s8 / n as f64 - m4 * m4) / n as f64).sqrt();
        assert!((m4 - 1.0 / 3.0).abs() < 3.0 * sigma, "m4 = {m4}, sigma = {sigma}");
        // |U_12| <= 1, so the mean has standard error below 1/sqrt(n).
        assert!((mean / n as f64).norm() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn phase_correction_makes_r_diagonal_positive() {
        let mut rng = RngStream::new(5, 0);
        let n = 20_000;
        let (mut q11, mut det) = (0.0, 0.0);
        for _ in 0..n {
            let g = DMatrix::from_fn(3, 3, |_, _| rng.complex_normal());
            let q = haar_from_ginibre(g.clone());
            let r = q.matrix().adjoint() * &g;
            for j in 0..3 {
                assert!(r[(j, j)].im.abs() < 1e-10 && r[(j, j)].re > 0.0);
            }
            let g = DMatrix::from_fn(2, 2, |_, _| re(rng.standard_normal()));
            let o = haar_from_ginibre(g).into_matrix();
            q11 += o[(0, 0)].re;
            det += (o[(0, 0)] * o[(1, 1)] - o[(0, 1)] * o[(1, 0)]).re;
        }
        // |entries| <= 1 and |det| = 1 bound the standard errors by 1/sqrt(n).
        let se = 1.0 / (n as f64).sqrt();
        assert!((q11 / n as f64).abs() < 3.0 * se);
        assert!((det / n as f64).abs() < 3.0 * se);
    }

    #[test]
    fn orthogonal_first_moment_twirl() {
        // E[O^T P0 O] = I / 2 for d = 2.
        let mut rng = RngStream::new(3, 0);
        let n = 100_000;
        let p0 = StateVector::basis(2, 0).projector();
        let mut sum = [0.0; 4];
        let mut sq = [0.0; 4];
        for _ in 0..n {
            let o = haar_orthogonal(&mut rng, 2);
            let t = &(&o.transpose() * &p0) * &o;
            for k in 0..4 {
                let v = t.get(k / 2, k % 2).re;
                sum[k] += v;
                sq[k] += v * v;
            }
        }
        let target = [0.5, 0.0, 0.0, 0.5];
        for k in 0..4 {
            let m = sum[k] / n as f64;
            let se = ((sq[k] / n as f64 - m * m) / n as f64).sqrt();
            assert!((m - target[k]).abs() <= 3.0 * se + 1e-12, "entry {k}: {m} vs {}", target[k]);
        }
    }

    #[test]
    fn sample_transform_shapes() {
        let mut rng = RngStream::new(9, 0);
        let spec = EnsembleSpec::local(vec![Group::Orthogonal; 3]);
        let t = sample_transform(&mut rng, &spec);
        assert_eq!(t.factors().len(), 3);
        assert!(t.factors().iter().all(|f| f.dim() == 2 && f.is_real(1e-12) && f.is_unitary(1e-10)));

        let spec = EnsembleSpec::global(Group::Unitary, MeasurementBasis::computational(2).unwrap());
        let t = sample_transform(&mut rng, &spec);
        assert!(matches!(&t, SampledTransform::Global(u) if u.dim() == 4 && u.is_unitary(1e-10)));

        let spec = EnsembleSpec::local(vec![Group::Unitary, Group::Orthogonal]);
        let t = sample_transform(&mut rng, &spec);
        assert!(!t.factors()[0].is_real(1e-6));
        assert!(t.factors()[1].is_real(0.0));
        assert_eq!(t.to_dense().unwrap().dim(), 4);
    }

    #[test]
    fn sampling_is_reproducible() {
        let spec = EnsembleSpec::local(vec![Group::Unitary, Group::Orthogonal, Group::Unitary]);
        let a = sample_transform(&mut RngStream::new(42, 17), &spec);
        let b = sample_transform(&mut RngStream::new(42, 17), &spec);
        assert_eq!(a, b);
    }

    fn equal_up_to_sign(a: &DenseOperator, b: &DenseOperator) -> bool {
        a.approx_eq(b, 1e-12) || a.approx_eq(&-b, 1e-12)
    }

    #[test]
    fn real_clifford_group_matches_brute_force_closure() {
        // Oracle: close {H, X, Z} under multiplication, keep one
        // representative per sign class.
        let h = DenseOperator::from_real_rows(2, &[1.0, 1.0, 1.0, -1.0])
            .unwrap()
            .scale_re(std::f64::consts::FRAC_1_SQRT_2);
        let gens = [h, Pauli::X.matrix(), Pauli::Z.matrix()];
        let mut closure: Vec<DenseOperator> = vec![DenseOperator::identity(2)];
        loop {
            let mut grew = false;
            for a in closure.clone() {
                for g in &gens {
                    let p = &a * g;
                    if !closure.iter().any(|e| equal_up_to_sign(e, &p)) {
                        closure.push(p);
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        let group = real_clifford_group_1q();
        assert_eq!(closure.len(), 8);
        assert_eq!(group.len(), 8);
        for g in &group {
            assert!(g.is_real(0.0) && g.is_unitary(1e-12));
            assert!(closure.iter().any(|e| equal_up_to_sign(e, g)));
        }
        for a in &group {
            for b in &group {
                let p = a * b;
                assert!(group.iter().any(|e| equal_up_to_sign(e, &p)));
            }
        }
    }

    #[test]
    fn real_clifford_draws_are_uniform() {
        let group = real_clifford_group_1q();
        let mut rng = RngStream::new(2024, 0);
        let n = 10_000;
        let mut counts = [0usize; 8];
        for _ in 0..n {
            let g = real_clifford_1q(&mut rng);
            let k = group.iter().position(|e| e.approx_eq(&g, 0.0)).unwrap();
            counts[k] += 1;
        }
        let p = 1.0 / 8.0;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        for &k in &counts {
            assert!((k as f64 / n as f64 - p).abs() < 3.0 * se, "{counts:?}");
        }
        let _ = ONE;
    }
}
