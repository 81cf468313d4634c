//! Measurement channels, their pseudo-inverses and visible spaces.
//!
//! Every channel here is diagonal in a fixed operator decomposition, so it is
//! stored as a handful of eigenvalues and applied in `O(d^2)`.
//!
//! * Global ensembles act on `A = Tr[A]/d · I + A_sym,0 + A_anti` with
//!   eigenvalues `(1, λ_sym, λ_anti)`. For O(d) with a basis of reality `α`,
//!   `λ_sym = (d + α - 2)/((d - 1)(d + 2))` and `λ_anti = (d - α)/(d(d - 1))`;
//!   for U(d) both equal `1/(d + 1)`.
//! * Local ensembles act per qubit on the Pauli components `(I, X, Y, Z)`:
//!   `(1, 1/2, 0, 1/2)` for O(2) and `(1, 1/3, 1/3, 1/3)` for U(2).
//!
//! ```
//! use orthoshadow::bases::MeasurementBasis;
//! use orthoshadow::channels::ChannelDescriptor;
//! use orthoshadow::ensemble::{EnsembleSpec, Group};
//! use orthoshadow::pauli::Pauli;
//!
//! let spec = EnsembleSpec::global(Group::Orthogonal, MeasurementBasis::computational(1)?);
//! let channel = ChannelDescriptor::new(&spec)?;
//! let z = Pauli::Z.matrix();
//! assert!(channel.apply(&z)?.approx_eq(&z.scale_re(0.5), 1e-15));
//! assert!(channel.apply(&Pauli::Y.matrix())?.max_abs_entry() == 0.0);
//! # Ok::<(), orthoshadow::error::Error>(())
//! ```

use serde::Serialize;

use crate::commutant::{mc_accumulate, twirl_project, McTwirl};
use crate::ensemble::{EnsembleSpec, Group};
use crate::error::{Error, Result};
use crate::linalg::{kron, partial_trace_first, DenseOperator, StateVector, C64, I};
use crate::pauli::{pauli_coefficients, qubit_count, Pauli};
use crate::sampling::{sample_transform, RngStream};

/// Eigenvalues at or below this magnitude are treated as exact zeros.
pub const ZERO_EIGENVALUE: f64 = 1e-12;

/// `D_p(A) = p Tr[A]/d · I + (1 - p) A`. Any real `p` is accepted.
pub fn depolarize(a: &DenseOperator, p: f64) -> DenseOperator {
    let d = a.dim();
    let mut out = a.scale_re(1.0 - p);
    let shift = a.trace() * p / d as f64;
    for i in 0..d {
        out.set(i, i, out.get(i, i) + shift);
    }
    out
}

/// Eigenvalues of a global channel on its three invariant blocks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelSpectrum {
    pub lambda_trace: f64,
    pub lambda_sym: f64,
    pub lambda_anti: f64,
    /// Depolarizing strength `p` in `M(A) = D_p(Ã)`.
    pub p_alpha: f64,
    /// Reality of the measurement basis.
    pub alpha: f64,
}

impl ChannelSpectrum {
    pub fn orthogonal(d: usize, alpha: f64) -> Self {
        let df = d as f64;
        Self {
            lambda_trace: 1.0,
            lambda_sym: (df + alpha - 2.0) / ((df - 1.0) * (df + 2.0)),
            lambda_anti: (df - alpha) / (df * (df - 1.0)),
            p_alpha: (df * df - alpha) / ((df - 1.0) * (df + 2.0)),
            alpha,
        }
    }

    /// The unitary channel is `D_{d/(d+1)}` whatever the basis.
    pub fn unitary(d: usize, alpha: f64) -> Self {
        let df = d as f64;
        Self {
            lambda_trace: 1.0,
            lambda_sym: 1.0 / (df + 1.0),
            lambda_anti: 1.0 / (df + 1.0),
            p_alpha: df / (df + 1.0),
            alpha,
        }
    }

    pub fn eigenvalues(&self) -> [f64; 3] {
        [self.lambda_trace, self.lambda_sym, self.lambda_anti]
    }
}

/// Scale factors on the single-qubit Pauli components `(I, X, Y, Z)`.
pub fn qubit_factors(group: Group) -> [f64; 4] {
    match group {
        Group::Orthogonal => [1.0, 0.5, 0.0, 0.5],
        Group::Unitary => [1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    }
}

/// `(q - q', 2q', p)` such that `M(A) = (q - q') D_p(A) + 2q' D_p(A_sym)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MixtureDecomposition {
    pub weight_unitary_like: f64,
    pub weight_real_like: f64,
    pub p_alpha: f64,
}

impl MixtureDecomposition {
    pub fn reconstruct(&self, a: &DenseOperator) -> DenseOperator {
        &depolarize(a, self.p_alpha).scale_re(self.weight_unitary_like)
            + &depolarize(&a.sym_part(), self.p_alpha).scale_re(self.weight_real_like)
    }
}

/// Components of an operator grouped by the parity of the number of `Y`
/// letters in its Pauli expansion.
#[derive(Clone, Debug)]
pub struct ParityParts {
    pub trace_part: DenseOperator,
    pub even_y_part: DenseOperator,
    pub odd_y_part: DenseOperator,
}

pub fn pauli_parity_decompose(a: &DenseOperator) -> Result<ParityParts> {
    let n = qubit_count(a.dim())?;
    let coeffs = pauli_coefficients(a)?;
    let pick = |keep: &dyn Fn(usize) -> bool| {
        let filtered: Vec<C64> = coeffs
            .iter()
            .enumerate()
            .map(|(idx, &c)| if keep(idx) { c } else { C64::new(0.0, 0.0) })
            .collect();
        crate::pauli::from_pauli_coefficients(&filtered, n)
    };
    let y_count = |idx: usize| (0..n).filter(|j| (idx >> (2 * j)) & 3 == Pauli::Y.index()).count();
    Ok(ParityParts {
        trace_part: pick(&|idx| idx == 0)?,
        even_y_part: pick(&|idx| idx != 0 && y_count(idx) % 2 == 0)?,
        odd_y_part: pick(&|idx| y_count(idx) % 2 == 1)?,
    })
}

/// Applies independent single-qubit Pauli scalings, qubit 0 most significant.
pub fn scale_local_paulis(a: &DenseOperator, factors: &[[f64; 4]]) -> Result<DenseOperator> {
    let n = factors.len();
    let d = 1usize << n;
    if a.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: a.dim() });
    }
    let mut m = a.matrix().clone();
    for (j, f) in factors.iter().enumerate() {
        let s = 1usize << (n - 1 - j);
        for r in (0..d).filter(|r| r & s == 0) {
            for c in (0..d).filter(|c| c & s == 0) {
                let (m00, m01, m10, m11) = (m[(r, c)], m[(r, c | s)], m[(r | s, c)], m[(r | s, c | s)]);
                let b0 = (m00 + m11) * (0.5 * f[0]);
                let bx = (m01 + m10) * (0.5 * f[1]);
                let by = (m01 - m10) * I * (0.5 * f[2]);
                let bz = (m00 - m11) * (0.5 * f[3]);
                m[(r, c)] = b0 + bz;
                m[(r | s, c | s)] = b0 - bz;
                m[(r, c | s)] = bx - I * by;
                m[(r | s, c)] = bx + I * by;
            }
        }
    }
    Ok(DenseOperator::from_matrix_unchecked(m))
}

fn global_blocks(a: &DenseOperator, g: [f64; 3]) -> DenseOperator {
    let d = a.dim();
    let tr = a.trace() / d as f64;
    let mut sym0 = a.sym_part();
    for i in 0..d {
        sym0.set(i, i, sym0.get(i, i) - tr);
    }
    let mut out = &sym0.scale_re(g[1]) + &a.antisym_part().scale_re(g[2]);
    for i in 0..d {
        out.set(i, i, out.get(i, i) + tr * g[0]);
    }
    out
}

fn invert(x: f64) -> f64 {
    if x.abs() <= ZERO_EIGENVALUE {
        0.0
    } else {
        1.0 / x
    }
}

fn support(x: f64) -> f64 {
    if x.abs() <= ZERO_EIGENVALUE {
        0.0
    } else {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Action {
    Global(ChannelSpectrum),
    Local(Vec<[f64; 4]>),
}

/// A measurement channel in spectral form.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelDescriptor {
    spec: EnsembleSpec,
    action: Action,
}

impl ChannelDescriptor {
    pub fn new(spec: &EnsembleSpec) -> Result<Self> {
        spec.validate()?;
        let action = match spec {
            EnsembleSpec::Global { group, basis } => {
                let (d, alpha) = (basis.dim(), basis.alpha_total());
                Action::Global(match group {
                    Group::Orthogonal => ChannelSpectrum::orthogonal(d, alpha),
                    Group::Unitary => ChannelSpectrum::unitary(d, alpha),
                })
            }
            EnsembleSpec::Local { groups } => Action::Local(groups.iter().map(|&g| qubit_factors(g)).collect()),
        };
        Ok(Self { spec: spec.clone(), action })
    }

    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Block eigenvalues of a global channel.
    pub fn spectrum(&self) -> Option<&ChannelSpectrum> {
        match &self.action {
            Action::Global(s) => Some(s),
            Action::Local(_) => None,
        }
    }

    /// Per-qubit Pauli scalings of a local channel.
    pub fn qubit_spectra(&self) -> Option<&[[f64; 4]]> {
        match &self.action {
            Action::Global(_) => None,
            Action::Local(f) => Some(f),
        }
    }

    fn spectral_map(&self, a: &DenseOperator, g: impl Fn(f64) -> f64) -> Result<DenseOperator> {
        if a.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: a.dim() });
        }
        match &self.action {
            Action::Global(s) => Ok(global_blocks(a, s.eigenvalues().map(g))),
            Action::Local(factors) => {
                let mapped: Vec<[f64; 4]> = factors.iter().map(|f| f.map(&g)).collect();
                scale_local_paulis(a, &mapped)
            }
        }
    }

    pub fn apply(&self, a: &DenseOperator) -> Result<DenseOperator> {
        self.spectral_map(a, |x| x)
    }

    /// Reciprocal eigenvalues on the visible blocks, zero elsewhere.
    pub fn pseudo_inverse(&self, a: &DenseOperator) -> Result<DenseOperator> {
        self.spectral_map(a, invert)
    }

    /// Orthogonal projection onto the image of the channel.
    pub fn visible_projector(&self, a: &DenseOperator) -> Result<DenseOperator> {
        self.spectral_map(a, support)
    }

    /// `‖a - P_vis(a)‖_2`.
    pub fn invisible_norm(&self, a: &DenseOperator) -> Result<f64> {
        Ok((a - &self.visible_projector(a)?).norm2())
    }

    /// Complex dimension of the visible operator space.
    pub fn visible_dimension(&self) -> usize {
        match &self.action {
            Action::Global(s) => {
                let d = self.dim();
                let sym = if s.lambda_sym.abs() > ZERO_EIGENVALUE { d * (d + 1) / 2 - 1 } else { 0 };
                let anti = if s.lambda_anti.abs() > ZERO_EIGENVALUE { d * (d - 1) / 2 } else { 0 };
                1 + sym + anti
            }
            Action::Local(factors) => factors
                .iter()
                .map(|f| f.iter().filter(|x| x.abs() > ZERO_EIGENVALUE).count())
                .product(),
        }
    }

    /// `visible_dimension / d^2`.
    pub fn visible_fraction(&self) -> f64 {
        let d = self.dim() as f64;
        self.visible_dimension() as f64 / (d * d)
    }

    /// The depolarizing form `D_p(Ã)` with
    /// `Ã = ((d^2 - α) A + (αd + α - 2d) A^T) / (d(d - 2 + α))`; global O(d) only.
    pub fn apply_depolarizing_form(&self, a: &DenseOperator) -> Result<DenseOperator> {
        let s = self.orthogonal_spectrum()?;
        let (df, alpha) = (self.dim() as f64, s.alpha);
        let denom = df * (df - 2.0 + alpha);
        if denom.abs() <= ZERO_EIGENVALUE {
            return Err(Error::DegenerateDecomposition { d: self.dim(), alpha });
        }
        let tilde = &a.scale_re((df * df - alpha) / denom) + &a.transpose().scale_re((alpha * df + alpha - 2.0 * df) / denom);
        Ok(depolarize(&tilde, s.p_alpha))
    }

    /// Weights of the unitary-like and real-like depolarizing mixture; global
    /// O(d) only and undefined where `d - 2 + α = 0`.
    pub fn mixture_decomposition(&self) -> Result<MixtureDecomposition> {
        let s = self.orthogonal_spectrum()?;
        let (df, alpha) = (self.dim() as f64, s.alpha);
        let denom = df * (df - 2.0 + alpha);
        if denom.abs() <= ZERO_EIGENVALUE {
            return Err(Error::DegenerateDecomposition { d: self.dim(), alpha });
        }
        let q = (df * df - alpha) / denom;
        let q_prime = 1.0 - q;
        Ok(MixtureDecomposition {
            weight_unitary_like: q - q_prime,
            weight_real_like: 2.0 * q_prime,
            p_alpha: s.p_alpha,
        })
    }

    fn orthogonal_spectrum(&self) -> Result<&ChannelSpectrum> {
        match (&self.spec, &self.action) {
            (EnsembleSpec::Global { group: Group::Orthogonal, .. }, Action::Global(s)) => Ok(s),
            _ => Err(Error::InvalidParameter("defined for global orthogonal ensembles only".into())),
        }
    }
}

/// The channel evaluated from its definition,
/// `Σ_w Tr_1[(A ⊗ I) E_U[(U^†Π_wU)^{⊗2}]]`, with the moment operator taken
/// from the commutant projection. Local ensembles are evaluated qubit by qubit.
pub fn definition_channel(spec: &EnsembleSpec, a: &DenseOperator) -> Result<DenseOperator> {
    match spec {
        EnsembleSpec::Global { group, basis } => {
            let d = basis.dim();
            if a.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: a.dim() });
            }
            let lifted = kron(a, &DenseOperator::identity(d))?;
            let mut out = DenseOperator::zeros(d);
            for w in basis.vectors() {
                let pw = w.projector();
                let moment = twirl_project(&kron(&pw, &pw)?, *group, 2)?;
                out += &partial_trace_first(&(&lifted * &moment), d)?;
            }
            Ok(out)
        }
        EnsembleSpec::Local { groups } => {
            let factors: Vec<[f64; 4]> = groups
                .iter()
                .map(|&g| single_qubit_definition_factors(g))
                .collect::<Result<_>>()?;
            scale_local_paulis(a, &factors)
        }
    }
}

fn single_qubit_definition_factors(group: Group) -> Result<[f64; 4]> {
    let basis = crate::bases::MeasurementBasis::computational(1)?;
    let spec = EnsembleSpec::global(group, basis);
    let mut out = [0.0; 4];
    for p in Pauli::ALL {
        let image = definition_channel(&spec, &p.matrix())?;
        out[p.index()] = (image.hs_inner(&p.matrix())? / 2.0).re;
    }
    Ok(out)
}

/// Monte Carlo estimate of the channel from its definition: each sample
/// draws a transform and sums `Tr[A φ_w φ_w^†] φ_w φ_w^†` over all outcomes,
/// `φ_w = U^†|w⟩`.
pub fn mc_channel(rng: &mut RngStream, spec: &EnsembleSpec, a: &DenseOperator, samples: usize) -> Result<McTwirl> {
    let d = spec.dim();
    if a.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: a.dim() });
    }
    let basis_vectors: Vec<StateVector> = match spec {
        EnsembleSpec::Global { basis, .. } => basis.vectors().to_vec(),
        EnsembleSpec::Local { .. } => (0..d).map(|w| StateVector::basis(d, w)).collect(),
    };
    mc_accumulate(samples, d, || {
        let u = sample_transform(rng, spec).to_dense()?;
        let u_dag = u.matrix().adjoint();
        let mut acc = nalgebra::DMatrix::zeros(d, d);
        for w in &basis_vectors {
            let phi = &u_dag * w.as_vector();
            let weight = (phi.adjoint() * a.matrix() * &phi)[(0, 0)];
            acc += (&phi * phi.adjoint()) * weight;
        }
        Ok(acc)
    })
}
