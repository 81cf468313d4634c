//! File-driven estimation runs.
//!
//! A run is a pure function of its configuration: the state, any random
//! observables and every shot draw from RNG streams derived from `seed`.
//! Timing information lives only in the metadata sidecar.
//!
//! ```
//! use orthoshadow::experiment::{run_experiment, ExperimentConfig};
//!
//! let config: ExperimentConfig = serde_json::from_str(r#"{
//!     "seed": 7,
//!     "n": 2,
//!     "state": { "kind": "product", "labels": "00" },
//!     "ensemble": { "scope": "local", "groups": ["orthogonal"] },
//!     "shots": 2000,
//!     "observables": [ { "id": "zz", "kind": "pauli", "label": "ZZ" } ]
//! }"#)?;
//! let out = run_experiment(&config)?;
//! let zz = &out.reports[0];
//! assert!((zz.mean - 1.0).abs() < 4.0 * zz.standard_error);
//! assert!(!zz.bias_warning);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bases::{BasisTag, MeasurementBasis};
use crate::ensemble::{EnsembleSpec, Group, Scope};
use crate::error::{Error, Result};
use crate::linalg::{DenseOperator, StateVector, C64};
use crate::pauli::PauliString;
use crate::sampling::RngStream;
use crate::shadow::{product_state, EstimateReport, Observable, ShadowSimulator};
use crate::variance::{random_hermitian_observable, random_pure_state, random_symmetric_observable};

/// Version of the CSV column sets and the metadata layout.
pub const SCHEMA_VERSION: u32 = 1;
pub const ESTIMATE_COLUMNS: [&str; 7] = ["observable_id", "mean", "mom", "emp_var", "pred_var", "shots", "bias_warning"];
pub const RECORD_COLUMNS: [&str; 3] = ["shot", "stream", "outcome"];

/// Stream used to draw a random state.
pub const STATE_STREAM: u64 = u64::MAX - 2;

/// Stream used to draw random observable number `index`.
pub fn observable_stream(index: usize) -> u64 {
    u64::MAX - 3 - index as u64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateConfig {
    MaximallyMixed,
    Basis { index: usize },
    RandomPure,
    /// Single-qubit labels from `0 1 + - r l`, qubit 0 first.
    Product { labels: String },
    /// Amplitudes as `[re, im]` pairs; normalized on load.
    Pure { amplitudes: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub scope: Scope,
    /// One group, or one per qubit for local ensembles.
    pub groups: Vec<Group>,
    /// `computational`, `sh` or `random:SEED`; global ensembles only.
    #[serde(default)]
    pub basis: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableKind {
    Pauli {
        label: String,
        #[serde(default = "one")]
        coefficient: f64,
    },
    /// Row-major entries.
    Dense {
        real: Vec<Vec<f64>>,
        #[serde(default)]
        imag: Option<Vec<Vec<f64>>>,
    },
    RandomSymmetric,
    RandomHermitian,
    /// Projector onto a product state, labels as in [`StateConfig::Product`].
    Projector { labels: String },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableConfig {
    pub id: String,
    #[serde(flatten)]
    pub kind: ObservableKind,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitConfig {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub records: Option<PathBuf>,
}

/// Target accuracy for the sample-complexity report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccuracyConfig {
    pub epsilon: f64,
    pub delta: f64,
}

fn default_batches() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n: usize,
    pub state: StateConfig,
    pub ensemble: EnsembleConfig,
    pub shots: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
    pub observables: Vec<ObservableConfig>,
    #[serde(default)]
    pub emit: EmitConfig,
    #[serde(default)]
    pub allow_bias: bool,
    #[serde(default = "default_true")]
    pub predict: bool,
    #[serde(default)]
    pub accuracy: Option<AccuracyConfig>,
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let config: Self = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > 7 {
            return Err(Error::Config(format!("n must be in 1..=7, got {}", self.n)));
        }
        if self.shots < 2 {
            return Err(Error::Config("need at least 2 shots".into()));
        }
        if self.batches == 0 || self.batches > self.shots {
            return Err(Error::Config(format!("batches must be in 1..=shots, got {}", self.batches)));
        }
        if self.observables.is_empty() {
            return Err(Error::Config("no observables requested".into()));
        }
        let mut ids: Vec<&str> = self.observables.iter().map(|o| o.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("observable ids must be unique".into()));
        }
        if let Some(acc) = self.accuracy {
            if !(acc.epsilon > 0.0 && acc.delta > 0.0 && acc.delta < 1.0) {
                return Err(Error::Config("accuracy needs epsilon > 0 and 0 < delta < 1".into()));
            }
        }
        self.ensemble_spec().map(|_| ())
    }

    pub fn ensemble_spec(&self) -> Result<EnsembleSpec> {
        let e = &self.ensemble;
        match e.scope {
            Scope::Global => {
                let [group] = e.groups[..] else {
                    return Err(Error::Config("global ensembles take exactly one group".into()));
                };
                let tag: BasisTag = e.basis.as_deref().unwrap_or("computational").parse()?;
                Ok(EnsembleSpec::global(group, MeasurementBasis::from_tag(&tag, self.n)?))
            }
            Scope::Local => {
                if let Some(b) = &e.basis {
                    if b.parse::<BasisTag>()? != BasisTag::Computational {
                        return Err(Error::Config("local ensembles measure in the computational basis".into()));
                    }
                }
                let groups = match e.groups.len() {
                    1 => vec![e.groups[0]; self.n],
                    len if len == self.n => e.groups.clone(),
                    len => return Err(Error::Config(format!("{len} groups given for {} qubits", self.n))),
                };
                Ok(EnsembleSpec::local(groups))
            }
        }
    }

    pub fn build_state(&self) -> Result<DenseOperator> {
        let d = 1usize << self.n;
        let psi = match &self.state {
            StateConfig::MaximallyMixed => return Ok(DenseOperator::identity(d).scale_re(1.0 / d as f64)),
            StateConfig::Basis { index } => {
                if *index >= d {
                    return Err(Error::Config(format!("basis index {index} out of range for d = {d}")));
                }
                StateVector::basis(d, *index)
            }
            StateConfig::RandomPure => random_pure_state(&mut RngStream::new(self.seed, STATE_STREAM), d)?,
            StateConfig::Product { labels } => {
                check_len(labels.chars().count(), self.n)?;
                product_state(labels)?
            }
            StateConfig::Pure { amplitudes } => {
                check_len(amplitudes.len(), d)?;
                StateVector::normalized(amplitudes.iter().map(|&[a, b]| C64::new(a, b)).collect())?
            }
        };
        Ok(psi.projector())
    }

    pub fn build_observables(&self) -> Result<Vec<(String, Observable)>> {
        let d = 1usize << self.n;
        self.observables
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let obs = match &o.kind {
                    ObservableKind::Pauli { label, coefficient } => {
                        let p: PauliString = label.parse()?;
                        check_len(p.n(), self.n)?;
                        Observable::Pauli(p.with_coefficient(C64::new(*coefficient, 0.0)))
                    }
                    ObservableKind::Dense { real, imag } => Observable::Dense(dense_from_rows(real, imag.as_ref(), d)?),
                    ObservableKind::RandomSymmetric => {
                        Observable::Dense(random_symmetric_observable(&mut RngStream::new(self.seed, observable_stream(i)), d))
                    }
                    ObservableKind::RandomHermitian => {
                        Observable::Dense(random_hermitian_observable(&mut RngStream::new(self.seed, observable_stream(i)), d))
                    }
                    ObservableKind::Projector { labels } => {
                        check_len(labels.chars().count(), self.n)?;
                        Observable::Dense(product_state(labels)?.projector())
                    }
                };
                Ok((o.id.clone(), obs))
            })
            .collect()
    }
}

fn check_len(found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::Config(format!("expected length {expected}, found {found}")));
    }
    Ok(())
}

fn dense_from_rows(real: &[Vec<f64>], imag: Option<&Vec<Vec<f64>>>, d: usize) -> Result<DenseOperator> {
    let shape_ok = |rows: &[Vec<f64>]| rows.len() == d && rows.iter().all(|r| r.len() == d);
    if !shape_ok(real) || imag.is_some_and(|im| !shape_ok(im)) {
        return Err(Error::Config(format!("dense observables must be {d} x {d}")));
    }
    Ok(DenseOperator::from_fn(d, |r, c| {
        C64::new(real[r][c], imag.map_or(0.0, |im| im[r][c]))
    }))
}

/// The median-of-means guarantee: with `K` batches of `N/K` shots each, a
/// batch mean misses by more than `ε = 2σ sqrt(K/N)` with probability at most
/// 1/4 (Chebyshev), so the median of `K` batch means misses with probability
/// at most `exp(-K/8)` (Hoeffding), and `M` estimates all succeed except with
/// probability at most `M exp(-K/8)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleComplexity {
    pub form: String,
    pub observables: usize,
    pub shots: usize,
    pub batches: usize,
    pub max_variance: f64,
    pub epsilon: f64,
    pub failure_probability_bound: f64,
    pub target: Option<AccuracyConfig>,
    /// Shots needed for `target` under the same argument.
    pub required_shots: Option<usize>,
}

impl SampleComplexity {
    pub fn new(observables: usize, shots: usize, batches: usize, max_variance: f64, target: Option<AccuracyConfig>) -> Self {
        let m = observables as f64;
        let required_shots = target.map(|t| {
            let (batches, per_batch) = Self::requirement(m, max_variance, t);
            batches * per_batch
        });
        Self {
            form: "S = O(log(M) / eps^2 * max_i Var[o_i])".into(),
            observables,
            shots,
            batches,
            max_variance,
            epsilon: 2.0 * (max_variance * batches as f64 / shots as f64).sqrt(),
            failure_probability_bound: (m * (-(batches as f64) / 8.0).exp()).min(1.0),
            target,
            required_shots,
        }
    }

    /// `(K, N/K)` with `K = ⌈8 ln(M/δ)⌉` and `N/K = ⌈4 Var / ε^2⌉`.
    pub fn requirement(m: f64, max_variance: f64, target: AccuracyConfig) -> (usize, usize) {
        let k = (8.0 * (m / target.delta).ln()).ceil().max(1.0) as usize;
        let per_batch = (4.0 * max_variance / (target.epsilon * target.epsilon)).ceil().max(1.0) as usize;
        (k, per_batch)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunMetadata {
    pub schema_version: u32,
    pub crate_version: String,
    pub rng_algorithm: String,
    pub seed: u64,
    pub ensemble: String,
    pub estimate_columns: Vec<String>,
    pub record_columns: Vec<String>,
    pub sample_complexity: SampleComplexity,
    pub config: ExperimentConfig,
    /// Excluded from reproducibility comparisons.
    pub started_unix_seconds: u64,
    /// Excluded from reproducibility comparisons.
    pub wall_time_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct RecordRow {
    pub shot: u64,
    pub outcome: usize,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub reports: Vec<EstimateReport>,
    pub records: Option<Vec<RecordRow>>,
    pub metadata: RunMetadata,
}

/// Runs a configuration without touching the filesystem.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let started = Instant::now();
    let started_unix_seconds = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |t| t.as_secs());
    config.validate()?;
    let spec = config.ensemble_spec()?;
    let rho = config.build_state()?;
    let observables = config.build_observables()?;
    let sim = ShadowSimulator::new(&spec, rho, config.seed)?;

    if !config.allow_bias {
        for (id, obs) in &observables {
            let est = crate::shadow::Estimator::new(sim.channel(), obs)?;
            if est.is_biased() {
                return Err(Error::InvisibleObservable(format!(
                    "{id} has a component of norm {:.3e} outside the visible space of {spec}; \
                     its estimate converges to the visible part only; set allow_bias (--allow-bias) to proceed",
                    est.invisible_norm()
                )));
            }
        }
    }

    let reports = sim.estimate_all(&observables, config.shots, config.batches, config.predict)?;
    let records = match config.emit.records {
        Some(_) => Some(
            (0..config.shots as u64)
                .into_par_iter()
                .map(|s| sim.record(s).map(|r| RecordRow { shot: s, outcome: r.outcome }))
                .collect::<Result<_>>()?,
        ),
        None => None,
    };
    let max_variance = reports
        .iter()
        .map(|r| r.predicted_variance.as_ref().map_or(r.empirical_variance, |p| p.value))
        .fold(0.0, f64::max);
    let metadata = RunMetadata {
        schema_version: SCHEMA_VERSION,
        crate_version: env!("CARGO_PKG_VERSION").into(),
        rng_algorithm: RngStream::ALGORITHM.into(),
        seed: config.seed,
        ensemble: spec.to_string(),
        estimate_columns: ESTIMATE_COLUMNS.iter().map(|s| s.to_string()).collect(),
        record_columns: RECORD_COLUMNS.iter().map(|s| s.to_string()).collect(),
        sample_complexity: SampleComplexity::new(reports.len(), config.shots, config.batches, max_variance, config.accuracy),
        config: config.clone(),
        started_unix_seconds,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(ExperimentOutput { reports, records, metadata })
}

#[derive(Serialize)]
struct EstimateRow<'a> {
    observable_id: &'a str,
    mean: f64,
    mom: f64,
    emp_var: f64,
    pred_var: Option<f64>,
    shots: usize,
    bias_warning: bool,
}

pub fn write_estimates_csv(path: &Path, reports: &[EstimateReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in reports {
        w.serialize(EstimateRow {
            observable_id: &r.observable_id,
            mean: r.mean,
            mom: r.median_of_means,
            emp_var: r.empirical_variance,
            pred_var: r.predicted_variance.as_ref().map(|p| p.value),
            shots: r.shots,
            bias_warning: r.bias_warning,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_csv(path: &Path, records: &[RecordRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RECORD_COLUMNS)?;
    for r in records {
        w.write_record([r.shot.to_string(), r.shot.to_string(), r.outcome.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `out.csv` → `out.meta.json`.
pub fn metadata_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Writes every requested output of a run.
pub fn emit(config: &ExperimentConfig, out: &ExperimentOutput) -> Result<()> {
    if let Some(csv) = &config.emit.csv {
        write_estimates_csv(csv, &out.reports)?;
        write_json(&metadata_path(csv), &out.metadata)?;
    }
    if let (Some(path), Some(records)) = (&config.emit.records, &out.records) {
        write_records_csv(path, records)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        serde_json::from_str(
            r#"{
                "seed": 3, "n": 2,
                "state": { "kind": "random_pure" },
                "ensemble": { "scope": "global", "groups": ["orthogonal"], "basis": "computational" },
                "shots": 4000, "batches": 4,
                "observables": [
                    { "id": "zz", "kind": "pauli", "label": "ZZ" },
                    { "id": "a", "kind": "random_symmetric" }
                ]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn runs_are_reproducible() {
        let a = run_experiment(&base()).unwrap();
        let b = run_experiment(&base()).unwrap();
        assert_eq!(a.reports, b.reports);
        assert_eq!(a.reports.len(), 2);
        assert!(a.reports.iter().all(|r| r.predicted_variance.is_some() && !r.bias_warning));
    }

    #[test]
    fn biased_observables_need_permission() {
        let mut c = base();
        c.observables.push(serde_json::from_str(r#"{ "id": "y", "kind": "pauli", "label": "YI" }"#).unwrap());
        assert!(matches!(run_experiment(&c), Err(Error::InvisibleObservable(_))));
        c.allow_bias = true;
        let out = run_experiment(&c).unwrap();
        assert!(out.reports[2].bias_warning);
    }

    #[test]
    fn schema_violations() {
        let mut c = base();
        c.batches = 0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = base();
        c.ensemble.groups = vec![Group::Orthogonal, Group::Unitary];
        assert!(c.validate().is_err());
        let mut c = base();
        c.ensemble.scope = Scope::Local;
        c.ensemble.basis = Some("sh".into());
        assert!(c.validate().is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"seed": 1, "bogus": 2}"#).is_err());
        let mut c = base();
        c.observables[1].id = "zz".into();
        assert!(c.validate().is_err());
    }

    #[test]
    fn sample_complexity_bound() {
        let s = SampleComplexity::new(10, 8000, 80, 2.0, Some(AccuracyConfig { epsilon: 0.1, delta: 0.01 }));
        assert!((s.epsilon - 2.0 * (2.0f64 * 80.0 / 8000.0).sqrt()).abs() < 1e-15);
        assert!((s.failure_probability_bound - 10.0 * (-10.0f64).exp()).abs() < 1e-15);
        let (k, per) = SampleComplexity::requirement(10.0, 2.0, AccuracyConfig { epsilon: 0.1, delta: 0.01 });
        assert_eq!(k, (8.0 * 1000f64.ln()).ceil() as usize);
        assert_eq!(per, 800);
        assert_eq!(s.required_shots, Some(k * per));
        assert_eq!(SampleComplexity::new(1, 100, 1, 1.0, None).failure_probability_bound, 1.0_f64.min((-0.125f64).exp()));
    }

    #[test]
    fn states_and_observables_build() {
        let mut c = base();
        c.state = StateConfig::Pure { amplitudes: vec![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]] };
        let rho = c.build_state().unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-15);
        c.state = StateConfig::Basis { index: 4 };
        assert!(c.build_state().is_err());
        c.observables = vec![serde_json::from_str(
            r#"{ "id": "m", "kind": "dense", "real": [[1,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,-1]] }"#,
        )
        .unwrap()];
        assert_eq!(c.build_observables().unwrap().len(), 1);
    }
}
