//! Moment integrals over O(d) and U(d) by projection onto the commutant.
//!
//! The `k`-th moment operator `E_U[U^{⊗k} A U^{†⊗k}]` is the Hilbert-Schmidt
//! orthogonal projection of `A` onto the operators commuting with every
//! `U^{⊗k}`. For the orthogonal group that space is spanned by realizations
//! of Brauer pairings; for the unitary group only the permutations survive.
//!
//! Pairings are on the labels `0..2k`. Labels `0..k` are the input (column)
//! legs and `k..2k` the output (row) legs. The realization of a pairing `σ` is
//!
//! ```text
//! F_d(σ) = Σ |v_k … v_{2k-1}⟩⟨v_0 … v_{k-1}|   over all v with v_a = v_b for (a, b) ∈ σ
//! ```
//!
//! so a pairing that joins every input leg to an output leg is a permutation
//! operator and the others are partial transposes of `|Ω⟩⟨Ω|`, `|Ω⟩ = Σ_i |ii⟩`.

use std::fmt;

use nalgebra::DMatrix;
use num_traits::{FromPrimitive, Num};
use serde::Serialize;

use crate::ensemble::Group;
use crate::error::{Error, Result};
use crate::linalg::{DenseOperator, StateVector, C64, MAX_DIM, ONE, ZERO};
use crate::sampling::{haar, RngStream};

/// Relative singular-value cutoff for the Gram pseudo-inverse.
pub const GRAM_CUTOFF: f64 = 1e-8;

fn check_order(k: usize) -> Result<()> {
    if k == 2 || k == 3 {
        Ok(())
    } else {
        Err(Error::UnsupportedOrder(k))
    }
}

/// A perfect matching of the `2k` legs of a `k`-fold tensor operator.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BrauerPairing {
    k: usize,
    partner: Vec<usize>,
}

impl BrauerPairing {
    pub fn new(k: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut partner = vec![usize::MAX; 2 * k];
        if pairs.len() != k {
            return Err(Error::InvalidParameter(format!("{k} pairs needed, got {}", pairs.len())));
        }
        for &(a, b) in pairs {
            if a >= 2 * k || b >= 2 * k || a == b || partner[a] != usize::MAX || partner[b] != usize::MAX {
                return Err(Error::InvalidParameter(format!("pairs {pairs:?} do not partition 0..{}", 2 * k)));
            }
            partner[a] = b;
            partner[b] = a;
        }
        Ok(Self { k, partner })
    }

    pub fn identity(k: usize) -> Self {
        let perm: Vec<usize> = (0..k).collect();
        Self::from_permutation(&perm)
    }

    /// The pairing realizing `S_π`, which moves tensor factor `i` to
    /// position `perm[i]`.
    pub fn from_permutation(perm: &[usize]) -> Self {
        let k = perm.len();
        let mut partner = vec![0; 2 * k];
        for (i, &p) in perm.iter().enumerate() {
            partner[i] = k + p;
            partner[k + p] = i;
        }
        Self { k, partner }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn partner(&self, label: usize) -> usize {
        self.partner[label]
    }

    /// Pairs `(a, b)` with `a < b`, sorted.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..2 * self.k)
            .filter(|&a| a < self.partner[a])
            .map(|a| (a, self.partner[a]))
            .collect()
    }

    pub fn is_permutation(&self) -> bool {
        (0..self.k).all(|i| self.partner[i] >= self.k)
    }

    /// `Some(perm)` with `perm[i]` the output position of input factor `i`.
    pub fn permutation(&self) -> Option<Vec<usize>> {
        self.is_permutation()
            .then(|| (0..self.k).map(|i| self.partner[i] - self.k).collect())
    }

    /// Calls `f(row, col)` for every nonzero (unit) entry of `F_d(σ)`.
    pub fn for_each_entry(&self, d: usize, mut f: impl FnMut(usize, usize)) {
        let k = self.k;
        let pairs = self.pairs();
        let mut values = vec![0usize; 2 * k];
        let total = d.pow(k as u32);
        for code in 0..total {
            let mut rest = code;
            for &(a, b) in &pairs {
                values[a] = rest % d;
                values[b] = values[a];
                rest /= d;
            }
            let (mut row, mut col) = (0, 0);
            for j in 0..k {
                col = col * d + values[j];
                row = row * d + values[k + j];
            }
            f(row, col);
        }
    }

    /// The dense operator `F_d(σ)` on `(C^d)^{⊗k}`.
    pub fn realize(&self, d: usize) -> Result<DenseOperator> {
        let dim = tensor_dim(d, self.k)?;
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        self.for_each_entry(d, |r, c| m[(r, c)] = ONE);
        Ok(DenseOperator::from_matrix_unchecked(m))
    }

    /// `Tr[F(σ)^T F(τ)] = d^{#connected components of σ ∪ τ}`.
    pub fn overlap(&self, other: &Self, d: usize) -> f64 {
        (d as f64).powi(self.joint_components(other) as i32)
    }

    pub fn joint_components(&self, other: &Self) -> usize {
        let n = 2 * self.k;
        let mut seen = vec![false; n];
        let mut components = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            // Each label has one edge from each pairing, so components are cycles.
            let mut cur = start;
            let mut use_self = true;
            loop {
                seen[cur] = true;
                cur = if use_self { self.partner[cur] } else { other.partner[cur] };
                seen[cur] = true;
                use_self = !use_self;
                if cur == start && use_self {
                    break;
                }
            }
        }
        components
    }

    /// `Tr[(X_0 ⊗ … ⊗ X_{k-1}) F(σ)]` by contracting along the cycles of the
    /// pairing, without forming any `d^k`-dimensional operator.
    pub fn trace_against(&self, factors: &[&DenseOperator]) -> Result<C64> {
        let k = self.k;
        if factors.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: factors.len() });
        }
        let d = factors[0].dim();
        if let Some(bad) = factors.iter().find(|x| x.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: bad.dim() });
        }
        let mut used = vec![false; k];
        let mut total = ONE;
        for start in 0..k {
            if used[start] {
                continue;
            }
            let mut product = DMatrix::<C64>::identity(d, d);
            let mut cur = start;
            loop {
                let next = if cur < k {
                    used[cur] = true;
                    product *= factors[cur].matrix();
                    k + cur
                } else {
                    used[cur - k] = true;
                    product *= factors[cur - k].matrix().transpose();
                    cur - k
                };
                cur = self.partner[next];
                if cur == start {
                    break;
                }
            }
            total *= product.trace();
        }
        Ok(total)
    }

    pub fn label(&self) -> String {
        match self.permutation() {
            Some(p) => {
                let images: Vec<String> = p.iter().map(|i| i.to_string()).collect();
                format!("S[{}]", images.join(" "))
            }
            None => {
                let pairs: Vec<String> = self.pairs().iter().map(|(a, b)| format!("{a}-{b}")).collect();
                format!("Ω{{{}}}", pairs.join(","))
            }
        }
    }
}

impl fmt::Display for BrauerPairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn tensor_dim(d: usize, k: usize) -> Result<usize> {
    let dim = d
        .checked_pow(k as u32)
        .filter(|&x| x <= MAX_DIM)
        .ok_or(Error::DimensionLimit { requested: d.saturating_pow(k as u32), max: MAX_DIM })?;
    Ok(dim)
}

fn all_matchings(free: &mut Vec<usize>, current: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
    if free.is_empty() {
        out.push(current.clone());
        return;
    }
    let a = free.remove(0);
    for idx in 0..free.len() {
        let b = free.remove(idx);
        current.push((a, b));
        all_matchings(free, current, out);
        current.pop();
        free.insert(idx, b);
    }
    free.insert(0, a);
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for i in 0..k {
            if !prefix.contains(&i) {
                prefix.push(i);
                rec(prefix, k, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), k, &mut out);
    out
}

/// All `(2k - 1)!!` pairings: the `k!` permutations first (identity leading,
/// then lexicographic), then the pairings containing contractions.
pub fn enumerate_pairings(k: usize) -> Result<Vec<BrauerPairing>> {
    check_order(k)?;
    let mut out: Vec<BrauerPairing> = permutations(k).iter().map(|p| BrauerPairing::from_permutation(p)).collect();
    let mut matchings = Vec::new();
    all_matchings(&mut (0..2 * k).collect(), &mut Vec::new(), &mut matchings);
    for m in matchings {
        let p = BrauerPairing::new(k, &m)?;
        if !p.is_permutation() {
            out.push(p);
        }
    }
    Ok(out)
}

/// The spanning set of the `k`-th order commutant of `group` on `(C^d)^{⊗k}`.
pub fn commutant_pairings(group: Group, k: usize) -> Result<Vec<BrauerPairing>> {
    let all = enumerate_pairings(k)?;
    Ok(match group {
        Group::Orthogonal => all,
        Group::Unitary => all.into_iter().filter(BrauerPairing::is_permutation).collect(),
    })
}

/// Spanning set, exact Gram matrix and its pseudo-inverse.
#[derive(Clone, Debug)]
pub struct CommutantBasis {
    group: Group,
    d: usize,
    k: usize,
    pairings: Vec<BrauerPairing>,
    gram: DMatrix<f64>,
    gram_pinv: DMatrix<f64>,
}

impl CommutantBasis {
    pub fn new(group: Group, d: usize, k: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!("need d >= 2, got {d}")));
        }
        tensor_dim(d, k)?;
        let pairings = commutant_pairings(group, k)?;
        let m = pairings.len();
        let gram = DMatrix::from_fn(m, m, |i, j| pairings[i].overlap(&pairings[j], d));
        let svd = gram.clone().svd(true, true);
        let cutoff = GRAM_CUTOFF * svd.singular_values.max();
        let gram_pinv = svd
            .pseudo_inverse(cutoff)
            .map_err(|e| Error::InvalidParameter(format!("Gram pseudo-inverse failed: {e}")))?;
        Ok(Self { group, d, k, pairings, gram, gram_pinv })
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn pairings(&self) -> &[BrauerPairing] {
        &self.pairings
    }

    pub fn len(&self) -> usize {
        self.pairings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairings.is_empty()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Numerical rank of the Gram matrix; below `len()` when `d < k`.
    pub fn rank(&self) -> usize {
        let sv = self.gram.clone().svd(false, false).singular_values;
        let cutoff = GRAM_CUTOFF * sv.max();
        sv.iter().filter(|&&s| s > cutoff).count()
    }

    pub fn elements(&self) -> Result<Vec<DenseOperator>> {
        self.pairings.iter().map(|p| p.realize(self.d)).collect()
    }

    /// `t_i = Tr[E_i^† A]`, summed over the unit entries of each `E_i`.
    pub fn overlaps(&self, a: &DenseOperator) -> Result<Vec<C64>> {
        self.check(a)?;
        Ok(self
            .pairings
            .iter()
            .map(|p| {
                let mut t = ZERO;
                p.for_each_entry(self.d, |r, c| t += a.get(r, c));
                t
            })
            .collect())
    }

    /// Expansion coefficients of the projection of `a`, `c = G^+ t`.
    pub fn coefficients(&self, a: &DenseOperator) -> Result<Vec<C64>> {
        let t = self.overlaps(a)?;
        let m = self.len();
        Ok((0..m)
            .map(|i| (0..m).map(|j| t[j] * self.gram_pinv[(i, j)]).sum())
            .collect())
    }

    /// `Σ_i c_i E_i` for arbitrary coefficients.
    pub fn combine(&self, coefficients: &[C64]) -> Result<DenseOperator> {
        if coefficients.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: coefficients.len() });
        }
        let dim = self.d.pow(self.k as u32);
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for (p, &ci) in self.pairings.iter().zip(coefficients) {
            p.for_each_entry(self.d, |r, c| m[(r, c)] += ci);
        }
        Ok(DenseOperator::from_matrix_unchecked(m))
    }

    /// The moment operator of `a`, as the orthogonal projection onto the span.
    pub fn project(&self, a: &DenseOperator) -> Result<DenseOperator> {
        let c = self.coefficients(a)?;
        self.combine(&c)
    }

    fn check(&self, a: &DenseOperator) -> Result<()> {
        let dim = self.d.pow(self.k as u32);
        if a.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: a.dim() });
        }
        Ok(())
    }
}

/// Infers `d` from an operator on `(C^d)^{⊗k}`.
pub fn local_dimension(dim: usize, k: usize) -> Result<usize> {
    let guess = (dim as f64).powf(1.0 / k as f64).round() as usize;
    (guess.saturating_sub(1)..=guess + 1)
        .find(|&d| d >= 2 && d.checked_pow(k as u32) == Some(dim))
        .ok_or(Error::InvalidParameter(format!("{dim} is not a {k}-th power of an integer >= 2")))
}

/// `E_U[U^{⊗k} a U^{†⊗k}]` for Haar-random `U` from `group`.
pub fn twirl_project(a: &DenseOperator, group: Group, k: usize) -> Result<DenseOperator> {
    check_order(k)?;
    let d = local_dimension(a.dim(), k)?;
    CommutantBasis::new(group, d, k)?.project(a)
}

/// Coefficients of the second moment of a rank-one projector `|w⟩⟨w|`
/// under O(d), on `(I, SWAP, |Ω⟩⟨Ω|)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SecondMomentCoefficients<T> {
    pub identity: T,
    pub swap: T,
    pub omega: T,
}

/// Coefficients of the third moment of `|w⟩⟨w|` under O(d): one value shared
/// by all six permutations and one shared by all nine contractions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThirdMomentCoefficients<T> {
    pub permutation: T,
    pub contraction: T,
}

fn dim_as<T: FromPrimitive>(d: usize) -> Result<T> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("need d >= 2, got {d}")));
    }
    T::from_usize(d).ok_or(Error::InvalidParameter(format!("d = {d} is not representable")))
}

/// `c_I = c_S = (d - α_w) / (d(d-1)(d+2))`, `c_Ω = (α_w d + α_w - 2) / (d(d-1)(d+2))`.
///
/// Generic so that rational `α_w` with integer `d` stays exact:
///
/// ```
/// use num_rational::Ratio;
/// use orthoshadow::commutant::second_moment_coefficients;
///
/// let c = second_moment_coefficients(Ratio::new(0i64, 1), 2).unwrap();
/// assert_eq!(c.identity, Ratio::new(1, 4));
/// assert_eq!(c.omega, Ratio::new(-1, 4));
/// ```
pub fn second_moment_coefficients<T>(alpha_w: T, d: usize) -> Result<SecondMomentCoefficients<T>>
where
    T: Num + Clone + FromPrimitive,
{
    let dd: T = dim_as(d)?;
    let one = T::one();
    let two = one.clone() + one.clone();
    let denom = dd.clone() * (dd.clone() - one.clone()) * (dd.clone() + two.clone());
    let c_i = (dd.clone() - alpha_w.clone()) / denom.clone();
    let c_omega = (alpha_w.clone() * dd + alpha_w - two) / denom;
    Ok(SecondMomentCoefficients { identity: c_i.clone(), swap: c_i, omega: c_omega })
}

/// `a = (d - 3α_w + 2) / (d(d-1)(d+2)(d+4))`, `b = (α_w d + α_w - 2) / (d(d-1)(d+2)(d+4))`.
pub fn third_moment_coefficients<T>(alpha_w: T, d: usize) -> Result<ThirdMomentCoefficients<T>>
where
    T: Num + Clone + FromPrimitive,
{
    let dd: T = dim_as(d)?;
    let small = |x: usize| T::from_usize(x).expect("small integers are representable");
    let denom = dd.clone() * (dd.clone() - T::one()) * (dd.clone() + small(2)) * (dd.clone() + small(4));
    let a = (dd.clone() - small(3) * alpha_w.clone() + small(2)) / denom.clone();
    let b = (alpha_w.clone() * dd + alpha_w - small(2)) / denom;
    Ok(ThirdMomentCoefficients { permutation: a, contraction: b })
}

/// Closed-form `k`-th moment of `|w⟩⟨w|` (`k ∈ {2, 3}`) in terms of the
/// basis returned by [`commutant_pairings`].
pub fn closed_form_moment(group: Group, alpha_w: f64, d: usize, k: usize) -> Result<DenseOperator> {
    let basis = CommutantBasis::new(group, d, k)?;
    let coeffs: Vec<C64> = match group {
        Group::Unitary => {
            let norm: f64 = (0..k).map(|j| (d + j) as f64).product();
            vec![C64::new(1.0 / norm, 0.0); basis.len()]
        }
        Group::Orthogonal if k == 2 => {
            let c = second_moment_coefficients(alpha_w, d)?;
            vec![c.identity.into(), c.swap.into(), c.omega.into()]
        }
        Group::Orthogonal => {
            let c = third_moment_coefficients(alpha_w, d)?;
            basis
                .pairings()
                .iter()
                .map(|p| C64::from(if p.is_permutation() { c.permutation } else { c.contraction }))
                .collect()
        }
    };
    basis.combine(&coeffs)
}

/// Monte Carlo estimate of a twirl with per-entry standard errors.
#[derive(Clone, Debug)]
pub struct McTwirl {
    pub mean: DenseOperator,
    pub stderr_re: DMatrix<f64>,
    pub stderr_im: DMatrix<f64>,
    pub samples: usize,
}

impl McTwirl {
    /// Largest `|mean - target|` measured in standard errors, entrywise.
    /// Entries within `abs_tol` of the target score zero; any other entry
    /// with vanishing standard error scores infinity.
    pub fn max_z_score(&self, target: &DenseOperator, abs_tol: f64) -> f64 {
        let dim = self.mean.dim();
        let mut worst = 0.0_f64;
        for r in 0..dim {
            for c in 0..dim {
                let diff = self.mean.get(r, c) - target.get(r, c);
                worst = worst
                    .max(z_score(diff.re, self.stderr_re[(r, c)], abs_tol))
                    .max(z_score(diff.im, self.stderr_im[(r, c)], abs_tol));
            }
        }
        worst
    }

    /// Scores of the real and imaginary parts on and above the diagonal, the
    /// independent entries of a Hermitian mean. Imaginary diagonal parts are
    /// skipped.
    pub fn z_scores(&self, target: &DenseOperator, abs_tol: f64) -> Vec<f64> {
        let dim = self.mean.dim();
        let score = |delta: f64, se: f64| z_score(delta, se, abs_tol);
        let mut out = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in r..dim {
                let diff = self.mean.get(r, c) - target.get(r, c);
                out.push(score(diff.re, self.stderr_re[(r, c)]));
                if c != r {
                    out.push(score(diff.im, self.stderr_im[(r, c)]));
                }
            }
        }
        out
    }

    fn from_sums(sum: DMatrix<C64>, sum_sq_re: DMatrix<f64>, sum_sq_im: DMatrix<f64>, n: usize) -> Self {
        let nf = n as f64;
        let mean = sum.map(|z| z / nf);
        let se = |sq: &DMatrix<f64>, mu: &DMatrix<f64>| {
            DMatrix::from_fn(mu.nrows(), mu.ncols(), |r, c| {
                if n < 2 {
                    return 0.0;
                }
                let var = ((sq[(r, c)] - nf * mu[(r, c)].powi(2)) / (nf - 1.0)).max(0.0);
                (var / nf).sqrt()
            })
        };
        let mu_re = mean.map(|z| z.re);
        let mu_im = mean.map(|z| z.im);
        Self {
            stderr_re: se(&sum_sq_re, &mu_re),
            stderr_im: se(&sum_sq_im, &mu_im),
            mean: DenseOperator::from_matrix_unchecked(mean),
            samples: n,
        }
    }
}

fn z_score(delta: f64, se: f64, abs_tol: f64) -> f64 {
    if delta.abs() <= abs_tol {
        0.0
    } else if se > 0.0 {
        delta.abs() / se
    } else {
        f64::INFINITY
    }
}

pub(crate) fn mc_accumulate(samples: usize, dim: usize, mut draw: impl FnMut() -> Result<DMatrix<C64>>) -> Result<McTwirl> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mut sum = DMatrix::from_element(dim, dim, ZERO);
    let mut sq_re = DMatrix::zeros(dim, dim);
    let mut sq_im = DMatrix::zeros(dim, dim);
    for _ in 0..samples {
        let x = draw()?;
        sum += &x;
        sq_re += x.map(|z| z.re * z.re);
        sq_im += x.map(|z| z.im * z.im);
    }
    Ok(McTwirl::from_sums(sum, sq_re, sq_im, samples))
}

/// Empirical mean of `U^{⊗k} a U^{†⊗k}` over Haar samples from `group`.
/// `k = 1` is allowed here.
pub fn mc_twirl(rng: &mut RngStream, a: &DenseOperator, group: Group, k: usize, samples: usize) -> Result<McTwirl> {
    if k == 0 {
        return Err(Error::UnsupportedOrder(k));
    }
    let d = if k == 1 { a.dim() } else { local_dimension(a.dim(), k)? };
    mc_accumulate(samples, a.dim(), || {
        let u = haar(rng, group, d);
        let mut uk = u.clone();
        for _ in 1..k {
            uk = uk.kron(&u)?;
        }
        Ok(uk.matrix() * a.matrix() * uk.matrix().adjoint())
    })
}

/// As [`mc_twirl`] for `a = (|w⟩⟨w|)^{⊗k}`, using `(Uw)^{⊗k}` directly.
pub fn mc_twirl_projector(rng: &mut RngStream, w: &StateVector, group: Group, k: usize, samples: usize) -> Result<McTwirl> {
    if k == 0 {
        return Err(Error::UnsupportedOrder(k));
    }
    let d = w.dim();
    let dim = tensor_dim(d, k)?;
    mc_accumulate(samples, dim, || {
        let u = haar(rng, group, d);
        let uw = u.matrix() * w.as_vector();
        let mut v = uw.clone();
        for _ in 1..k {
            v = v.kronecker(&uw);
        }
        Ok(&v * v.adjoint())
    })
}
