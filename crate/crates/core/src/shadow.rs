//! Sampling, measuring, inverting and averaging.
//!
//! A shot draws a transform `U` from the ensemble, measures `UρU^†` in the
//! measurement basis and records the outcome `w`. The classical shadow is
//! `ρ̂ = M^+(U^†Π_wU)` and the per-shot estimate of `O` is
//! `ô = Tr[O ρ̂] = ⟨φ_w| M^+(O) |φ_w⟩` with `φ_w = U^†|w⟩`, so estimators
//! never need to form `ρ̂`.
//!
//! Shot `s` of a run with seed `seed` uses RNG stream `s`, which makes every
//! record reproducible on its own and the run independent of thread count.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{qubit_factors, scale_local_paulis, ChannelDescriptor};
use crate::ensemble::{EnsembleSpec, Group};
use crate::error::{Error, Result};
use crate::linalg::{kron_all, DenseOperator, StateVector, C64, ONE};
use crate::pauli::{Pauli, PauliString};
use crate::sampling::{sample_transform, RngStream, SampledTransform};
use crate::variance::{predict, sample_variance, VariancePrediction};

/// Born probabilities below this are an error rather than rounding noise.
pub const NEGATIVE_PROBABILITY_TOL: f64 = 1e-9;
/// Allowed deviation of the total Born probability from one.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// A transform and the outcome it produced. Local outcomes are bit strings
/// with qubit 0 as the most significant bit.
#[derive(Clone, Debug, PartialEq)]
pub struct ShadowRecord {
    pub transform: SampledTransform,
    pub outcome: usize,
}

fn check_state(rho: &DenseOperator, d: usize) -> Result<()> {
    if rho.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: rho.dim() });
    }
    Ok(())
}

/// `U M U^†` for a product transform, one factor at a time.
fn conjugate_local(m: &DenseOperator, factors: &[DenseOperator]) -> DenseOperator {
    let n = factors.len();
    let d = m.dim();
    let mut out = m.matrix().clone();
    for (j, u) in factors.iter().enumerate() {
        let s = 1usize << (n - 1 - j);
        let (u00, u01, u10, u11) = (u.get(0, 0), u.get(0, 1), u.get(1, 0), u.get(1, 1));
        // Rows: out <- (I ⊗ u ⊗ I) out.
        for r in (0..d).filter(|r| r & s == 0) {
            for c in 0..d {
                let (a, b) = (out[(r, c)], out[(r | s, c)]);
                out[(r, c)] = u00 * a + u01 * b;
                out[(r | s, c)] = u10 * a + u11 * b;
            }
        }
        // Columns: out <- out (I ⊗ u^† ⊗ I).
        for c in (0..d).filter(|c| c & s == 0) {
            for r in 0..d {
                let (a, b) = (out[(r, c)], out[(r, c | s)]);
                out[(r, c)] = a * u00.conj() + b * u01.conj();
                out[(r, c | s)] = a * u10.conj() + b * u11.conj();
            }
        }
    }
    DenseOperator::from_matrix_unchecked(out)
}

/// `Tr[ρ U^†Π_wU]` for every outcome `w`.
pub fn outcome_probabilities(rho: &DenseOperator, t: &SampledTransform, spec: &EnsembleSpec) -> Result<Vec<f64>> {
    let d = spec.dim();
    check_state(rho, d)?;
    if t.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: t.dim() });
    }
    let raw: Vec<f64> = match (spec, t) {
        (EnsembleSpec::Global { basis, .. }, SampledTransform::Global(u)) => {
            let rotated = rho.conjugate_by(u)?;
            if basis.is_computational() {
                (0..d).map(|w| rotated.get(w, w).re).collect()
            } else {
                basis.vectors().iter().map(|w| rotated.expectation(w).map(|z| z.re)).collect::<Result<_>>()?
            }
        }
        (EnsembleSpec::Local { .. }, SampledTransform::Local(factors)) => {
            let rotated = conjugate_local(rho, factors);
            (0..d).map(|w| rotated.get(w, w).re).collect()
        }
        _ => return Err(Error::InvalidParameter("transform does not match the ensemble scope".into())),
    };
    let mut probs = Vec::with_capacity(d);
    for (w, p) in raw.into_iter().enumerate() {
        if p < -NEGATIVE_PROBABILITY_TOL || !p.is_finite() {
            return Err(Error::Probability(format!("outcome {w} has probability {p}")));
        }
        probs.push(p.max(0.0));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Probability(format!("probabilities sum to {total}")));
    }
    Ok(probs.into_iter().map(|p| p / total).collect())
}

fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (w, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return w;
        }
    }
    // u lands past the rounded total; take the last outcome with mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Qubit-by-qubit conditional sampling, qubit 0 first.
fn sample_bits(rng: &mut RngStream, probs: &[f64]) -> usize {
    let mut prefix = Vec::with_capacity(probs.len() + 1);
    prefix.push(0.0);
    for &p in probs {
        prefix.push(prefix.last().copied().unwrap_or(0.0) + p);
    }
    let (mut lo, mut hi) = (0usize, probs.len());
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let total = prefix[hi] - prefix[lo];
        let zero = prefix[mid] - prefix[lo];
        let u = rng.uniform();
        if total <= 0.0 || u * total < zero {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Draws an outcome with the Born probabilities of `t` applied to `ρ`.
pub fn simulate_measurement(
    rng: &mut RngStream,
    rho: &DenseOperator,
    t: &SampledTransform,
    spec: &EnsembleSpec,
) -> Result<usize> {
    let probs = outcome_probabilities(rho, t, spec)?;
    Ok(match spec {
        EnsembleSpec::Global { .. } => inverse_cdf(&probs, rng.uniform()),
        EnsembleSpec::Local { .. } => sample_bits(rng, &probs),
    })
}

/// `φ_w = U^†|w⟩` as a dense vector.
pub fn measured_vector(record: &ShadowRecord, spec: &EnsembleSpec) -> Result<DVector<C64>> {
    match (spec, &record.transform) {
        (EnsembleSpec::Global { basis, .. }, SampledTransform::Global(u)) => {
            Ok(u.matrix().adjoint() * basis.vector(record.outcome).as_vector())
        }
        (EnsembleSpec::Local { .. }, SampledTransform::Local(factors)) => {
            let n = factors.len();
            let mut v = DVector::from_element(1, ONE);
            for (j, u) in factors.iter().enumerate() {
                let bit = (record.outcome >> (n - 1 - j)) & 1;
                let local = u.matrix().adjoint().column(bit).into_owned();
                v = v.kronecker(&local);
            }
            Ok(v)
        }
        _ => Err(Error::InvalidParameter("record does not match the ensemble scope".into())),
    }
}

/// A classical shadow, dense or as a tensor product of qubit factors.
#[derive(Clone, Debug)]
pub enum Shadow {
    Dense(DenseOperator),
    Product(Vec<DenseOperator>),
}

impl Shadow {
    pub fn to_dense(&self) -> Result<DenseOperator> {
        match self {
            Shadow::Dense(m) => Ok(m.clone()),
            Shadow::Product(fs) => kron_all(fs),
        }
    }

    pub fn trace(&self) -> C64 {
        match self {
            Shadow::Dense(m) => m.trace(),
            Shadow::Product(fs) => fs.iter().map(|f| f.trace()).product(),
        }
    }
}

/// `ρ̂ = M^+(U^†Π_wU)`; local records stay factorized.
pub fn shadow_from_record(channel: &ChannelDescriptor, record: &ShadowRecord) -> Result<Shadow> {
    let spec = channel.spec();
    match (spec, &record.transform) {
        (EnsembleSpec::Global { .. }, _) => {
            let phi = measured_vector(record, spec)?;
            let proj = DenseOperator::from_matrix_unchecked(&phi * phi.adjoint());
            Ok(Shadow::Dense(channel.pseudo_inverse(&proj)?))
        }
        (EnsembleSpec::Local { groups }, SampledTransform::Local(factors)) => {
            let n = factors.len();
            let out = factors
                .iter()
                .zip(groups)
                .enumerate()
                .map(|(j, (u, &g))| {
                    let bit = (record.outcome >> (n - 1 - j)) & 1;
                    let phi = u.matrix().adjoint().column(bit).into_owned();
                    let proj = DenseOperator::from_matrix_unchecked(&phi * phi.adjoint());
                    scale_local_paulis(&proj, &[inverse_factors(g)])
                })
                .collect::<Result<_>>()?;
            Ok(Shadow::Product(out))
        }
        _ => Err(Error::InvalidParameter("record does not match the ensemble scope".into())),
    }
}

fn inverse_factors(g: Group) -> [f64; 4] {
    qubit_factors(g).map(|x| if x == 0.0 { 0.0 } else { 1.0 / x })
}

/// An observable to estimate. Must be Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    Dense(DenseOperator),
    Pauli(PauliString),
}

impl Observable {
    pub fn dim(&self) -> usize {
        match self {
            Observable::Dense(m) => m.dim(),
            Observable::Pauli(p) => 1 << p.n(),
        }
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        match self {
            Observable::Dense(m) => Ok(m.clone()),
            Observable::Pauli(p) => p.to_dense(),
        }
    }

    fn check_hermitian(&self) -> Result<()> {
        match self {
            Observable::Dense(m) => {
                let deviation = m.hermiticity_deviation();
                if deviation > crate::linalg::STRUCT_TOL {
                    return Err(Error::NotHermitian { deviation });
                }
            }
            Observable::Pauli(p) => {
                let deviation = p.coefficient().im.abs();
                if deviation > crate::linalg::STRUCT_TOL {
                    return Err(Error::NotHermitian { deviation });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
enum EstimatorKind {
    /// `⟨φ|B|φ⟩` with `B = M^+(O)`.
    Dense(DenseOperator),
    /// `c Π_j g_j ⟨φ_j|P_j|φ_j⟩` with `g_j` the inverse qubit factor of `P_j`.
    LocalPauli { coefficient: f64, letters: Vec<Pauli>, scales: Vec<f64> },
}

/// Per-shot estimator `ô` of one observable, prepared for a given channel.
#[derive(Clone, Debug)]
pub struct Estimator {
    kind: EstimatorKind,
    invisible_norm: f64,
    visible: DenseOperator,
    observable: DenseOperator,
}

impl Estimator {
    pub fn new(channel: &ChannelDescriptor, observable: &Observable) -> Result<Self> {
        if observable.dim() != channel.dim() {
            return Err(Error::DimensionMismatch { expected: channel.dim(), found: observable.dim() });
        }
        observable.check_hermitian()?;
        let dense = observable.to_dense()?;
        let visible = channel.visible_projector(&dense)?;
        let invisible_norm = (&dense - &visible).norm2();
        let kind = match (observable, channel.spec()) {
            (Observable::Pauli(p), EnsembleSpec::Local { groups }) => EstimatorKind::LocalPauli {
                coefficient: p.coefficient().re,
                letters: p.letters().to_vec(),
                scales: p
                    .letters()
                    .iter()
                    .zip(groups)
                    .map(|(&l, &g)| inverse_factors(g)[l.index()])
                    .collect(),
            },
            _ => EstimatorKind::Dense(channel.pseudo_inverse(&dense)?),
        };
        Ok(Self { kind, invisible_norm, visible, observable: dense })
    }

    /// `‖O - P_vis(O)‖_2`.
    pub fn invisible_norm(&self) -> f64 {
        self.invisible_norm
    }

    /// True when the estimator targets `Tr[P_vis(O) ρ]` rather than `Tr[O ρ]`.
    pub fn is_biased(&self) -> bool {
        self.invisible_norm > crate::linalg::STRUCT_TOL
    }

    pub fn visible_part(&self) -> &DenseOperator {
        &self.visible
    }

    pub fn observable(&self) -> &DenseOperator {
        &self.observable
    }

    pub fn value(&self, record: &ShadowRecord, spec: &EnsembleSpec) -> Result<f64> {
        match &self.kind {
            EstimatorKind::Dense(b) => {
                let phi = measured_vector(record, spec)?;
                Ok((phi.adjoint() * b.matrix() * &phi)[(0, 0)].re)
            }
            EstimatorKind::LocalPauli { coefficient, letters, scales } => {
                let factors = match &record.transform {
                    SampledTransform::Local(fs) => fs,
                    SampledTransform::Global(_) => {
                        return Err(Error::InvalidParameter("global record for a local estimator".into()))
                    }
                };
                let n = factors.len();
                let mut value = C64::new(*coefficient, 0.0);
                for (j, ((u, &letter), &scale)) in factors.iter().zip(letters).zip(scales).enumerate() {
                    if letter == Pauli::I {
                        continue;
                    }
                    if scale == 0.0 {
                        return Ok(0.0);
                    }
                    let bit = (record.outcome >> (n - 1 - j)) & 1;
                    let phi = u.matrix().adjoint().column(bit).into_owned();
                    let p = letter.matrix();
                    value *= (phi.adjoint() * p.matrix() * &phi)[(0, 0)] * scale;
                }
                Ok(value.re)
            }
        }
    }
}

/// Deterministic shot generator for a known state.
#[derive(Clone, Debug)]
pub struct ShadowSimulator {
    channel: ChannelDescriptor,
    rho: DenseOperator,
    seed: u64,
}

impl ShadowSimulator {
    pub fn new(spec: &EnsembleSpec, rho: DenseOperator, seed: u64) -> Result<Self> {
        let channel = ChannelDescriptor::new(spec)?;
        check_state(&rho, spec.dim())?;
        let deviation = rho.hermiticity_deviation();
        if deviation > 1e-8 {
            return Err(Error::NotHermitian { deviation });
        }
        if (rho.trace().re - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidParameter(format!("state has trace {}", rho.trace())));
        }
        Ok(Self { channel, rho, seed })
    }

    pub fn channel(&self) -> &ChannelDescriptor {
        &self.channel
    }

    pub fn spec(&self) -> &EnsembleSpec {
        self.channel.spec()
    }

    pub fn state(&self) -> &DenseOperator {
        &self.rho
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Shot `shot`, regenerated from its own stream.
    pub fn record(&self, shot: u64) -> Result<ShadowRecord> {
        let mut rng = RngStream::new(self.seed, shot);
        let transform = sample_transform(&mut rng, self.spec());
        let outcome = simulate_measurement(&mut rng, &self.rho, &transform, self.spec())?;
        Ok(ShadowRecord { transform, outcome })
    }

    pub fn records(&self, shots: usize) -> Result<Vec<ShadowRecord>> {
        (0..shots as u64).into_par_iter().map(|s| self.record(s)).collect()
    }

    /// Per-shot values of every estimator over one shared set of shots;
    /// `out[i][s]` is estimator `i` on shot `s`.
    pub fn shot_values(&self, shots: usize, estimators: &[Estimator]) -> Result<Vec<Vec<f64>>> {
        let per_shot: Vec<Vec<f64>> = (0..shots as u64)
            .into_par_iter()
            .map(|s| {
                let rec = self.record(s)?;
                estimators.iter().map(|e| e.value(&rec, self.spec())).collect()
            })
            .collect::<Result<_>>()?;
        Ok((0..estimators.len())
            .map(|i| per_shot.iter().map(|row| row[i]).collect())
            .collect())
    }

    /// Estimates every observable from one shared set of shots.
    pub fn estimate_all(
        &self,
        observables: &[(String, Observable)],
        shots: usize,
        batches: usize,
        with_prediction: bool,
    ) -> Result<Vec<EstimateReport>> {
        let estimators: Vec<Estimator> = observables
            .iter()
            .map(|(_, o)| Estimator::new(&self.channel, o))
            .collect::<Result<_>>()?;
        let values = self.shot_values(shots, &estimators)?;
        observables
            .iter()
            .zip(&estimators)
            .zip(values)
            .map(|(((id, _), est), vals)| {
                let mut report = summarize(id, &vals, batches, est)?;
                report.target = Some(est.observable().trace_product(&self.rho)?.re);
                report.visible_target = Some(est.visible_part().trace_product(&self.rho)?.re);
                if with_prediction {
                    report.predicted_variance = Some(predict(self.spec(), est.observable(), &self.rho)?);
                }
                Ok(report)
            })
            .collect()
    }
}

/// Summary of one observable's estimates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub observable_id: String,
    pub mean: f64,
    pub median_of_means: f64,
    pub empirical_variance: f64,
    pub standard_error: f64,
    pub predicted_variance: Option<VariancePrediction>,
    pub shots: usize,
    pub batches: usize,
    pub bias_warning: bool,
    pub invisible_norm: f64,
    /// `Tr[O ρ]`, available in simulation only.
    pub target: Option<f64>,
    /// `Tr[P_vis(O) ρ]`, the value the estimator converges to.
    pub visible_target: Option<f64>,
}

/// Median of `K` batch means. Batches have `⌊N/K⌋` values and the last one
/// also takes the remainder.
pub fn median_of_means(values: &[f64], batches: usize) -> Result<f64> {
    let n = values.len();
    if batches == 0 {
        return Err(Error::InvalidParameter("need at least one batch".into()));
    }
    if batches > n {
        return Err(Error::TooFewRecords { needed: batches, found: n });
    }
    let size = n / batches;
    let mut means: Vec<f64> = (0..batches)
        .map(|k| {
            let end = if k + 1 == batches { n } else { (k + 1) * size };
            let chunk = &values[k * size..end];
            chunk.iter().sum::<f64>() / chunk.len() as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let mid = batches / 2;
    Ok(if batches % 2 == 1 { means[mid] } else { 0.5 * (means[mid - 1] + means[mid]) })
}

fn summarize(id: &str, values: &[f64], batches: usize, est: &Estimator) -> Result<EstimateReport> {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n.max(1) as f64;
    let empirical_variance = sample_variance(values)?;
    Ok(EstimateReport {
        observable_id: id.to_string(),
        mean,
        median_of_means: median_of_means(values, batches)?,
        empirical_variance,
        standard_error: (empirical_variance / n as f64).sqrt(),
        predicted_variance: None,
        shots: n,
        batches,
        bias_warning: est.is_biased(),
        invisible_norm: est.invisible_norm(),
        target: None,
        visible_target: None,
    })
}

/// Estimates one observable from stored records.
pub fn estimate(
    channel: &ChannelDescriptor,
    records: &[ShadowRecord],
    id: &str,
    observable: &Observable,
    batches: usize,
) -> Result<EstimateReport> {
    let est = Estimator::new(channel, observable)?;
    let values = shot_values(channel, records, &est)?;
    summarize(id, &values, batches, &est)
}

pub fn shot_values(channel: &ChannelDescriptor, records: &[ShadowRecord], est: &Estimator) -> Result<Vec<f64>> {
    records.par_iter().map(|r| est.value(r, channel.spec())).collect()
}

/// Unbiased sample variance of the per-shot estimates of `observable`.
pub fn empirical_variance(channel: &ChannelDescriptor, records: &[ShadowRecord], observable: &Observable) -> Result<f64> {
    let est = Estimator::new(channel, observable)?;
    sample_variance(&shot_values(channel, records, &est)?)
}

/// `|ψ⟩⟨ψ|` helper for single-qubit labels, e.g. `"+0"`.
pub fn product_state(labels: &str) -> Result<StateVector> {
    let mut amps = vec![ONE];
    for ch in labels.chars() {
        let q = crate::pauli::single_qubit_state(ch)?;
        amps = amps.iter().flat_map(|&a| q.iter().map(move |&b| a * b)).collect();
    }
    if amps.len() < 2 {
        return Err(Error::InvalidParameter("empty product state".into()));
    }
    StateVector::new(amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::MeasurementBasis;
    use crate::linalg::{re, ZERO};
    use crate::sampling::haar_orthogonal;

    fn global_o(n: usize) -> EnsembleSpec {
        EnsembleSpec::global(Group::Orthogonal, MeasurementBasis::computational(n).unwrap())
    }

    fn mixed(d: usize) -> DenseOperator {
        DenseOperator::identity(d).scale_re(1.0 / d as f64)
    }

    #[test]
    fn deterministic_outcomes() {
        let spec = global_o(1);
        let rho = StateVector::basis(2, 0).projector();
        let t = SampledTransform::Global(DenseOperator::identity(2));
        let mut rng = RngStream::new(1, 0);
        for _ in 0..100 {
            assert_eq!(simulate_measurement(&mut rng, &rho, &t, &spec).unwrap(), 0);
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::new(vec![re(h), re(h)]).unwrap().projector();
        let had = SampledTransform::Global(DenseOperator::from_real_rows(2, &[h, h, h, -h]).unwrap());
        for _ in 0..100 {
            assert_eq!(simulate_measurement(&mut rng, &plus, &had, &spec).unwrap(), 0);
        }
    }

    #[test]
    fn maximally_mixed_outcomes_are_uniform() {
        for spec in [global_o(2), EnsembleSpec::local_uniform(Group::Orthogonal, 2)] {
            let sim = ShadowSimulator::new(&spec, mixed(4), 3).unwrap();
            let n = 10_000;
            let mut counts = [0usize; 4];
            for r in sim.records(n).unwrap() {
                counts[r.outcome] += 1;
            }
            let sigma = (n as f64 * 0.25 * 0.75).sqrt();
            for c in counts {
                assert!((c as f64 - n as f64 / 4.0).abs() < 3.5 * sigma, "{counts:?}");
            }
        }
    }

    #[test]
    fn bad_probabilities_are_rejected() {
        let spec = global_o(1);
        let t = SampledTransform::Global(DenseOperator::identity(2));
        let not_normalized = DenseOperator::diagonal(&[re(0.7), re(0.7)]);
        assert!(matches!(outcome_probabilities(&not_normalized, &t, &spec), Err(Error::Probability(_))));
        let negative = DenseOperator::diagonal(&[re(1.2), re(-0.2)]);
        assert!(matches!(outcome_probabilities(&negative, &t, &spec), Err(Error::Probability(_))));
    }

    #[test]
    fn shadow_examples() {
        let spec = global_o(1);
        let ch = ChannelDescriptor::new(&spec).unwrap();
        let rec = ShadowRecord { transform: SampledTransform::Global(DenseOperator::identity(2)), outcome: 0 };
        let s = shadow_from_record(&ch, &rec).unwrap().to_dense().unwrap();
        assert!(s.approx_eq(&DenseOperator::diagonal(&[re(1.5), re(-0.5)]), 1e-15));

        let spec = EnsembleSpec::local_uniform(Group::Orthogonal, 2);
        let ch = ChannelDescriptor::new(&spec).unwrap();
        let rec = ShadowRecord {
            transform: SampledTransform::Local(vec![DenseOperator::identity(2); 2]),
            outcome: 0,
        };
        let factor = DenseOperator::diagonal(&[re(1.5), re(-0.5)]);
        let expected = factor.kron(&factor).unwrap();
        let s = shadow_from_record(&ch, &rec).unwrap();
        assert!(s.to_dense().unwrap().approx_eq(&expected, 1e-15));
    }

    #[test]
    fn shadows_have_unit_trace() {
        let mut rng = RngStream::new(5, 0);
        let rho = crate::variance::random_pure_state(&mut rng, 4).unwrap().projector();
        for spec in [
            global_o(2),
            EnsembleSpec::global(Group::Orthogonal, MeasurementBasis::sh(2).unwrap()),
            EnsembleSpec::global(Group::Unitary, MeasurementBasis::computational(2).unwrap()),
            EnsembleSpec::local(vec![Group::Orthogonal, Group::Unitary]),
        ] {
            let sim = ShadowSimulator::new(&spec, rho.clone(), 9).unwrap();
            for r in sim.records(50).unwrap() {
                let s = shadow_from_record(sim.channel(), &r).unwrap();
                assert!((s.trace() - ONE).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn fast_pauli_path_matches_dense_path() {
        let mut rng = RngStream::new(6, 0);
        let rho = crate::variance::random_pure_state(&mut rng, 8).unwrap().projector();
        let spec = EnsembleSpec::local(vec![Group::Orthogonal, Group::Unitary, Group::Orthogonal]);
        let sim = ShadowSimulator::new(&spec, rho, 4).unwrap();
        for label in ["XZI", "ZYX", "IIZ", "YXZ", "III"] {
            let p: PauliString = label.parse().unwrap();
            let fast = Estimator::new(sim.channel(), &Observable::Pauli(p.clone())).unwrap();
            let slow = Estimator::new(sim.channel(), &Observable::Dense(p.to_dense().unwrap())).unwrap();
            assert!(matches!(fast.kind, EstimatorKind::LocalPauli { .. }));
            for r in sim.records(200).unwrap() {
                let (a, b) = (fast.value(&r, sim.spec()).unwrap(), slow.value(&r, sim.spec()).unwrap());
                assert!((a - b).abs() <= 1e-12, "{label}: {a} vs {b}");
                let shadow = shadow_from_record(sim.channel(), &r).unwrap().to_dense().unwrap();
                let direct = shadow.trace_product(&p.to_dense().unwrap()).unwrap().re;
                assert!((a - direct).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn local_conjugation_matches_dense() {
        let mut rng = RngStream::new(7, 0);
        let factors: Vec<DenseOperator> = (0..3).map(|_| haar_orthogonal(&mut rng, 2)).collect();
        let m = DenseOperator::from_fn(8, |_, _| rng.complex_normal());
        let u = kron_all(&factors).unwrap();
        assert!(conjugate_local(&m, &factors).approx_eq(&m.conjugate_by(&u).unwrap(), 1e-12));
    }

    #[test]
    fn identity_estimates_are_exact() {
        let sim = ShadowSimulator::new(&global_o(2), mixed(4), 1).unwrap();
        let obs = vec![("I".to_string(), Observable::Dense(DenseOperator::identity(4)))];
        let r = &sim.estimate_all(&obs, 500, 5, true).unwrap()[0];
        assert!((r.mean - 1.0).abs() < 1e-12);
        assert!(r.empirical_variance < 1e-20);
        assert!(!r.bias_warning);
    }

    #[test]
    fn median_of_means_batches() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        // Batches [1,2] [3,4] [5,6,7].
        assert_eq!(median_of_means(&v, 3).unwrap(), 3.5);
        assert_eq!(median_of_means(&v, 1).unwrap(), 4.0);
        assert!(median_of_means(&v, 8).is_err());
        assert!(median_of_means(&v, 0).is_err());
    }

    #[test]
    fn non_hermitian_observables_are_rejected() {
        let ch = ChannelDescriptor::new(&global_o(1)).unwrap();
        let m = DenseOperator::from_rows(2, &[ONE, ONE, ZERO, ONE]).unwrap();
        assert!(matches!(Estimator::new(&ch, &Observable::Dense(m)), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn records_are_reproducible() {
        let spec = EnsembleSpec::local_uniform(Group::Orthogonal, 3);
        let a = ShadowSimulator::new(&spec, mixed(8), 11).unwrap();
        let b = ShadowSimulator::new(&spec, mixed(8), 11).unwrap();
        assert_eq!(a.records(20).unwrap(), b.records(20).unwrap());
        assert_eq!(a.record(13).unwrap(), a.records(20).unwrap()[13]);
    }

    #[test]
    fn product_states() {
        let s = product_state("+0").unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(s.amplitudes(), &[re(h), re(0.0), re(h), re(0.0)]);
        assert!(product_state("").is_err());
    }
}
