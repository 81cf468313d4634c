//! Self-checks that compare closed forms against independent routes.
//!
//! Statistical comparisons use `3σ` per comparison, corrected for the number
//! of compared entries: a report passes when its largest z-score stays below
//! [`family_threshold`], which is exactly 3 for a single comparison.

use std::fmt;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bases::vector_reality;
use crate::channels::{definition_channel, depolarize, mc_channel, ChannelDescriptor, ChannelSpectrum};
use crate::commutant::{closed_form_moment, mc_twirl_projector, twirl_project, CommutantBasis};
use crate::ensemble::{EnsembleSpec, Group};
use crate::error::{Error, Result};
use crate::experiment::{observable_stream, STATE_STREAM};
use crate::linalg::{kron, DenseOperator, StateVector, C64};
use crate::pauli::{qubit_count, Pauli, PauliString};
use crate::sampling::RngStream;
use crate::shadow::{Estimator, Observable, ShadowSimulator};
use crate::variance::{
    predict, random_hermitian_observable, random_pure_state, random_symmetric_observable, sample_variance,
    var_global_real, var_global_unitary, PredictionKind,
};

/// Largest dimension accepted for Monte Carlo channel checks.
pub const MAX_CHANNEL_DIM: usize = 16;
/// Largest `d^k` accepted for twirl checks.
pub const MAX_TWIRL_DIM: usize = 512;
pub const EXACT_TOL: f64 = 1e-10;
pub const VARIANCE_REL_TOL: f64 = 0.05;

/// Two-sided tail mass beyond `3σ`.
pub fn three_sigma_tail() -> f64 {
    2.0 * Normal::standard().sf(3.0)
}

/// z-score threshold keeping the family-wise false-alarm rate of `m`
/// comparisons at the single-comparison `3σ` rate.
pub fn family_threshold(m: usize) -> f64 {
    let m = m.max(1) as f64;
    Normal::standard().inverse_cdf(1.0 - three_sigma_tail() / (2.0 * m))
}

#[derive(Clone, Debug, Serialize)]
pub struct ChannelValidation {
    pub ensemble: String,
    pub dim: usize,
    pub samples: usize,
    pub spectrum: Option<ChannelSpectrum>,
    /// `max |MC − closed form|` over entries.
    pub max_abs_diff: f64,
    pub max_z: f64,
    pub z_threshold: f64,
    /// `max |definition route − closed form|`.
    pub definition_diff: f64,
    /// `max |M(A) − D_{d/(d+1)}(A)|` for global unitary ensembles.
    pub unitary_depolarizing_diff: Option<f64>,
    pub visible_dimension: usize,
    /// Pauli strings fixed by the visible projector, when `d ≤ 64`.
    pub visible_paulis: Option<Vec<String>>,
    pub passed: bool,
}

/// Compares the closed-form channel on a random Hermitian input against its
/// Monte Carlo definition and the commutant-projection route.
pub fn validate_channel(spec: &EnsembleSpec, samples: usize, seed: u64) -> Result<ChannelValidation> {
    spec.validate()?;
    let d = spec.dim();
    if d > MAX_CHANNEL_DIM {
        return Err(Error::DimensionLimit { requested: d, max: MAX_CHANNEL_DIM });
    }
    let channel = ChannelDescriptor::new(spec)?;
    let a = random_hermitian_observable(&mut RngStream::new(seed, 0), d);
    let closed = channel.apply(&a)?;
    let mc = mc_channel(&mut RngStream::new(seed, 1), spec, &a, samples)?;
    let scores = mc.z_scores(&closed, EXACT_TOL);
    let max_z = scores.iter().copied().fold(0.0, f64::max);
    let z_threshold = family_threshold(scores.len());
    let definition_diff = definition_channel(spec, &a)?.max_abs_diff(&closed);
    let unitary_depolarizing_diff = match spec {
        EnsembleSpec::Global { group: Group::Unitary, .. } => {
            Some(depolarize(&a, d as f64 / (d as f64 + 1.0)).max_abs_diff(&closed))
        }
        _ => None,
    };
    let visible_paulis = match qubit_count(d) {
        Ok(n) if n <= 3 => Some(visible_paulis(&channel, n)?),
        _ => None,
    };
    let passed = max_z <= z_threshold
        && definition_diff <= EXACT_TOL
        && unitary_depolarizing_diff.map_or(true, |x| x <= EXACT_TOL);
    Ok(ChannelValidation {
        ensemble: spec.to_string(),
        dim: d,
        samples,
        spectrum: channel.spectrum().cloned(),
        max_abs_diff: mc.mean.max_abs_diff(&closed),
        max_z,
        z_threshold,
        definition_diff,
        unitary_depolarizing_diff,
        visible_dimension: channel.visible_dimension(),
        visible_paulis,
        passed,
    })
}

fn visible_paulis(channel: &ChannelDescriptor, n: usize) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for index in 0..1usize << (2 * n) {
        let p = PauliString::from_index(index, n);
        if channel.invisible_norm(&p.to_dense()?)? <= EXACT_TOL {
            out.push(p.to_string());
        }
    }
    Ok(out)
}

impl fmt::Display for ChannelValidation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ensemble            {}", self.ensemble)?;
        if let Some(s) = &self.spectrum {
            writeln!(f, "spectrum            trace 1, sym {:.12}, anti {:.12}", s.lambda_sym, s.lambda_anti)?;
        }
        writeln!(f, "samples             {}", self.samples)?;
        writeln!(f, "max |MC - closed|   {:.3e}", self.max_abs_diff)?;
        writeln!(f, "max z               {:.3} (threshold {:.3})", self.max_z, self.z_threshold)?;
        writeln!(f, "definition route    {:.3e}", self.definition_diff)?;
        if let Some(x) = self.unitary_depolarizing_diff {
            writeln!(f, "D_(d/(d+1)) match   {x:.3e}")?;
        }
        writeln!(f, "visible dimension   {}", self.visible_dimension)?;
        if let Some(v) = &self.visible_paulis {
            writeln!(f, "visible paulis      span{{{}}}", v.join(", "))?;
        }
        write!(f, "result              {}", if self.passed { "PASS" } else { "FAIL" })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TwirlCase {
    pub real: bool,
    pub alpha_w: f64,
    /// `max |closed form − commutant projection|`.
    pub exact_diff: f64,
    pub mc_max_z: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AlphaSweepRow {
    pub alpha_w: f64,
    /// Least-squares coefficients on the commutant basis.
    pub gram: Vec<f64>,
    pub closed_form: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TwirlValidation {
    pub group: Group,
    pub d: usize,
    pub k: usize,
    pub cases: Vec<TwirlCase>,
    pub max_exact_diff: f64,
    pub mc_samples: usize,
    pub max_z: f64,
    pub z_threshold: f64,
    /// Empty when the commutant basis is linearly dependent.
    pub alpha_sweep: Vec<AlphaSweepRow>,
    /// `max |c(1/2) − (c(0) + c(1))/2|` over the sweep coefficients.
    pub linearity_residual: Option<f64>,
    pub passed: bool,
}

/// A unit vector with `|w^T w|² = alpha` in the span of `|0⟩, |1⟩`.
pub fn vector_with_reality(alpha: f64, d: usize) -> Result<StateVector> {
    if !(0.0..=1.0).contains(&alpha) || d < 2 {
        return Err(Error::InvalidParameter(format!("need alpha in [0, 1] and d >= 2, got {alpha}, {d}")));
    }
    let t = alpha.sqrt().acos() / 2.0;
    let mut amps = vec![C64::new(0.0, 0.0); d];
    amps[0] = C64::new(t.cos(), 0.0);
    amps[1] = C64::new(0.0, t.sin());
    StateVector::normalized(amps)
}

fn random_real_vector(rng: &mut RngStream, d: usize) -> Result<StateVector> {
    StateVector::normalized((0..d).map(|_| C64::new(rng.standard_normal(), 0.0)).collect())
}

fn tensor_power(p: &DenseOperator, k: usize) -> Result<DenseOperator> {
    let mut out = p.clone();
    for _ in 1..k {
        out = kron(&out, p)?;
    }
    Ok(out)
}

/// Compares the closed-form moment of `(|w⟩⟨w|)^{⊗k}` with its commutant
/// projection for `vectors` real and `vectors` complex `w`, and with Monte
/// Carlo twirls of the first real and first complex vector.
pub fn validate_twirl(group: Group, d: usize, k: usize, vectors: usize, mc_samples: usize, seed: u64) -> Result<TwirlValidation> {
    if !(2..=3).contains(&k) {
        return Err(Error::UnsupportedOrder(k));
    }
    let dim = d.checked_pow(k as u32).unwrap_or(usize::MAX);
    if d < 2 || dim > MAX_TWIRL_DIM {
        return Err(Error::DimensionLimit { requested: dim, max: MAX_TWIRL_DIM });
    }
    let mut rng = RngStream::new(seed, 0);
    let mut cases = Vec::with_capacity(2 * vectors);
    let mut scores = Vec::new();
    for real in [true, false] {
        for i in 0..vectors {
            let w = if real { random_real_vector(&mut rng, d)? } else { random_pure_state(&mut rng, d)? };
            let alpha_w = vector_reality(&w);
            let closed = closed_form_moment(group, alpha_w, d, k)?;
            let exact_diff = twirl_project(&tensor_power(&w.projector(), k)?, group, k)?.max_abs_diff(&closed);
            let mc_max_z = if i == 0 && mc_samples > 0 {
                let stream = if real { 1 } else { 2 };
                let mc = mc_twirl_projector(&mut RngStream::new(seed, stream), &w, group, k, mc_samples)?;
                let z = mc.z_scores(&closed, EXACT_TOL);
                let max = z.iter().copied().fold(0.0, f64::max);
                scores.extend(z);
                Some(max)
            } else {
                None
            };
            cases.push(TwirlCase { real, alpha_w, exact_diff, mc_max_z });
        }
    }
    let basis = CommutantBasis::new(group, d, k)?;
    let alpha_sweep = if basis.rank() == basis.len() {
        [0.0, 0.5, 1.0]
            .iter()
            .map(|&alpha_w| {
                let w = vector_with_reality(alpha_w, d)?;
                let gram = basis.coefficients(&tensor_power(&w.projector(), k)?)?.iter().map(|c| c.re).collect();
                let closed_form = closed_form_coefficients(group, alpha_w, d, k, &basis)?;
                Ok(AlphaSweepRow { alpha_w, gram, closed_form })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let linearity_residual = (alpha_sweep.len() == 3).then(|| {
        (0..alpha_sweep[0].gram.len())
            .map(|i| (alpha_sweep[1].gram[i] - 0.5 * (alpha_sweep[0].gram[i] + alpha_sweep[2].gram[i])).abs())
            .fold(0.0, f64::max)
    });
    let sweep_diff = alpha_sweep
        .iter()
        .flat_map(|r| r.gram.iter().zip(&r.closed_form).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    let max_exact_diff = cases.iter().map(|c| c.exact_diff).fold(0.0, f64::max);
    let max_z = scores.iter().copied().fold(0.0, f64::max);
    let z_threshold = family_threshold(scores.len());
    let passed = max_exact_diff <= EXACT_TOL
        && sweep_diff <= EXACT_TOL
        && linearity_residual.map_or(true, |r| r <= EXACT_TOL)
        && max_z <= z_threshold;
    Ok(TwirlValidation {
        group,
        d,
        k,
        cases,
        max_exact_diff,
        mc_samples,
        max_z,
        z_threshold,
        alpha_sweep,
        linearity_residual,
        passed,
    })
}

fn closed_form_coefficients(group: Group, alpha_w: f64, d: usize, k: usize, basis: &CommutantBasis) -> Result<Vec<f64>> {
    let closed = closed_form_moment(group, alpha_w, d, k)?;
    Ok(basis.coefficients(&closed)?.iter().map(|c| c.re).collect())
}

impl fmt::Display for TwirlValidation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "group {}, d = {}, k = {}", self.group, self.d, self.k)?;
        writeln!(f, "closed form vs projection   max {:.3e} over {} vectors", self.max_exact_diff, self.cases.len())?;
        writeln!(f, "Monte Carlo ({} samples)    max z {:.3} (threshold {:.3})", self.mc_samples, self.max_z, self.z_threshold)?;
        for row in &self.alpha_sweep {
            let fmt_all = |v: &[f64]| v.iter().map(|x| format!("{x:.6e}")).collect::<Vec<_>>().join(" ");
            writeln!(f, "alpha_w = {:.1}: {}", row.alpha_w, fmt_all(&row.gram))?;
        }
        if let Some(r) = self.linearity_residual {
            writeln!(f, "linearity residual          {r:.3e}")?;
        }
        write!(f, "result                      {}", if self.passed { "PASS" } else { "FAIL" })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VarianceValidation {
    pub ensemble: String,
    pub dim: usize,
    pub shots: usize,
    pub empirical: f64,
    pub predicted: f64,
    pub kind: PredictionKind,
    pub relative_error: f64,
    /// `var_global_real(Z, I/2)` and `var_global_unitary(Z, I/2)`.
    pub pinned: (f64, f64),
    pub passed: bool,
}

/// Compares the empirical variance of a random symmetric observable on a
/// random pure state with the predictor for `spec`. Exact predictions must
/// agree within [`VARIANCE_REL_TOL`]; bounds must not be exceeded by more.
pub fn validate_variance(spec: &EnsembleSpec, shots: usize, seed: u64) -> Result<VarianceValidation> {
    spec.validate()?;
    let d = spec.dim();
    let rho = random_pure_state(&mut RngStream::new(seed, STATE_STREAM), d)?.projector();
    let a = random_symmetric_observable(&mut RngStream::new(seed, observable_stream(0)), d);
    let sim = ShadowSimulator::new(spec, rho.clone(), seed)?;
    let est = Estimator::new(sim.channel(), &Observable::Dense(a.clone()))?;
    let values = sim.shot_values(shots, std::slice::from_ref(&est))?.remove(0);
    let empirical = sample_variance(&values)?;
    let prediction = predict(spec, &a, &rho)?;
    let relative_error = (empirical - prediction.value) / prediction.value;
    let z = Pauli::Z.matrix();
    let mixed = DenseOperator::identity(2).scale_re(0.5);
    let pinned = (var_global_real(&z, &mixed)?.value, var_global_unitary(&z, &mixed)?.value);
    let within = match prediction.kind {
        PredictionKind::Exact => relative_error.abs() <= VARIANCE_REL_TOL,
        PredictionKind::UpperBound => relative_error <= VARIANCE_REL_TOL,
    };
    Ok(VarianceValidation {
        ensemble: spec.to_string(),
        dim: d,
        shots,
        empirical,
        predicted: prediction.value,
        kind: prediction.kind,
        relative_error,
        pinned,
        passed: within && pinned == (2.0, 3.0),
    })
}

impl fmt::Display for VarianceValidation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ensemble        {}", self.ensemble)?;
        writeln!(f, "shots           {}", self.shots)?;
        writeln!(f, "empirical var   {:.6}", self.empirical)?;
        writeln!(f, "predicted var   {:.6} ({:?})", self.predicted, self.kind)?;
        writeln!(f, "relative error  {:+.4}", self.relative_error)?;
        writeln!(f, "pinned d = 2    real {}, unitary {}", self.pinned.0, self.pinned.1)?;
        write!(f, "result          {}", if self.passed { "PASS" } else { "FAIL" })
    }
}
