//! Variance predictors and bounds for shadow estimators.
//!
//! Predictors take the true state `ρ` and so are validation oracles rather
//! than estimators. Operators are assumed Hermitian.

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::ChannelDescriptor;
use crate::commutant::{commutant_pairings, third_moment_coefficients};
use crate::ensemble::{EnsembleSpec, Group};
use crate::error::{Error, Result};
use crate::linalg::{DenseOperator, StateVector, C64};
use crate::pauli::{pauli_terms, Pauli, PauliString};
use crate::sampling::RngStream;

/// Visible Pauli terms above which the exact local second moment is replaced
/// by a bound.
pub const LOCAL_EXACT_TERM_CAP: usize = 1024;

const PAULI_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionKind {
    Exact,
    UpperBound,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariancePrediction {
    pub kind: PredictionKind,
    pub value: f64,
    pub ensemble: String,
    pub assumptions: String,
}

impl VariancePrediction {
    fn exact(value: f64, ensemble: &str, assumptions: &str) -> Self {
        Self { kind: PredictionKind::Exact, value, ensemble: ensemble.into(), assumptions: assumptions.into() }
    }

    fn bound(value: f64, ensemble: &str, assumptions: &str) -> Self {
        Self { kind: PredictionKind::UpperBound, value, ensemble: ensemble.into(), assumptions: assumptions.into() }
    }
}

fn check_pair(a: &DenseOperator, rho: &DenseOperator) -> Result<()> {
    if a.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: rho.dim() });
    }
    Ok(())
}

/// `(Tr[A_0^2], Tr[ρ A_0^2], Tr[ρ A_0])` for the traceless part `A_0`.
fn traceless_moments(a0: &DenseOperator, rho: &DenseOperator) -> Result<(f64, f64, f64)> {
    let sq = a0 * a0;
    Ok((sq.trace().re, rho.trace_product(&sq)?.re, rho.trace_product(a0)?.re))
}

/// Global O(d) with a real basis:
/// `(d+2)/(2d+8) (Tr[A_s0^2] + 4 Tr[ρ A_s0^2]) - Tr[A_s0 ρ]^2`, where `A_s0`
/// is the traceless part of the symmetric part of `A`.
pub fn var_global_real(a: &DenseOperator, rho: &DenseOperator) -> Result<VariancePrediction> {
    check_pair(a, rho)?;
    let d = a.dim() as f64;
    let (t2, r2, r1) = traceless_moments(&a.sym_part().traceless_part(), rho)?;
    let value = (d + 2.0) / (2.0 * d + 8.0) * (t2 + 4.0 * r2) - r1 * r1;
    Ok(VariancePrediction::exact(value, "global orthogonal, real basis", "estimates Tr[A_sym ρ]"))
}

/// Global U(d): `(d+1)/(d+2) (Tr[A_0^2] + 2 Tr[ρ A_0^2]) - Tr[ρ A_0]^2`.
pub fn var_global_unitary(a: &DenseOperator, rho: &DenseOperator) -> Result<VariancePrediction> {
    check_pair(a, rho)?;
    let d = a.dim() as f64;
    let (t2, r2, r1) = traceless_moments(&a.traceless_part(), rho)?;
    let value = (d + 1.0) / (d + 2.0) * (t2 + 2.0 * r2) - r1 * r1;
    Ok(VariancePrediction::exact(value, "global unitary", "any basis"))
}

/// Global O(d) with a basis of reality `α`, written in terms of
/// `Ã_α = ((d^2 - α) A + (αd + α - 2d) A^T) / (d(d - 2 + α))`.
///
/// This closed form inverts the channel as `Ã_{α;0} / (1 - p_α)`, which is
/// the true pseudo-inverse only on symmetric operators; it agrees with
/// [`var_global_exact`] for symmetric `A`.
pub fn var_global_alpha(a: &DenseOperator, rho: &DenseOperator, alpha: f64) -> Result<VariancePrediction> {
    check_pair(a, rho)?;
    let d = a.dim();
    let df = d as f64;
    let denom = df * (df - 2.0 + alpha);
    if denom.abs() <= 1e-12 {
        return Err(Error::DegenerateDecomposition { d, alpha });
    }
    let p = (df * df - alpha) / ((df - 1.0) * (df + 2.0));
    let tilde = &a.scale_re((df * df - alpha) / denom) + &a.transpose().scale_re((alpha * df + alpha - 2.0 * df) / denom);
    let shift = a.trace() / df;
    let mut t0 = tilde;
    for i in 0..d {
        t0.set(i, i, t0.get(i, i) - shift);
    }
    let t0t = t0.transpose();
    let tr = |x: &DenseOperator| x.trace().re;
    let rtr = |x: &DenseOperator| -> Result<f64> { Ok(rho.trace_product(x)?.re) };
    let sq = &t0 * &t0;
    let mixed = &t0 * &t0t;
    let mixed_rev = &t0t * &t0;
    let sq_t = &t0t * &t0t;
    let family_sym = tr(&sq) + 2.0 * rtr(&sq)?;
    let family_t = tr(&mixed) + 2.0 * rtr(&mixed)? + 2.0 * rtr(&mixed_rev)? + 2.0 * rtr(&sq_t)?;
    let big = df * (df - 1.0) * (df + 2.0) * (df + 4.0);
    let scale = 1.0 / ((1.0 - p) * (1.0 - p) * big);
    let mean = rtr(&t0)?;
    let value = scale * ((df * df - 3.0 * alpha + 2.0 * df) * family_sym + (alpha * df + alpha - 2.0 * df) * family_t)
        - mean * mean;
    Ok(VariancePrediction::exact(value, &format!("global orthogonal, alpha = {alpha}"), "valid for symmetric A"))
}

/// Exact variance for any global ensemble from the third moment of the
/// measured projectors:
/// `E[ô^2] = Σ_w Σ_σ c_σ(α_w) Tr[(ρ ⊗ B ⊗ B) F(σ)]` with `B = M^+(A)`.
pub fn var_global_exact(spec: &EnsembleSpec, a: &DenseOperator, rho: &DenseOperator) -> Result<VariancePrediction> {
    check_pair(a, rho)?;
    let (group, basis) = match spec {
        EnsembleSpec::Global { group, basis } => (*group, basis),
        EnsembleSpec::Local { .. } => return Err(Error::InvalidParameter("global ensemble required".into())),
    };
    let d = basis.dim();
    let channel = ChannelDescriptor::new(spec)?;
    let b = channel.pseudo_inverse(a)?;
    let (perm_coeff, contr_coeff) = match group {
        Group::Unitary => {
            let df = d as f64;
            (df / (df * (df + 1.0) * (df + 2.0)), 0.0)
        }
        Group::Orthogonal => basis.alpha_per_vector().iter().try_fold((0.0, 0.0), |(pa, pb), &aw| {
            let c = third_moment_coefficients(aw, d)?;
            Ok::<_, Error>((pa + c.permutation, pb + c.contraction))
        })?,
    };
    let mut second = C64::new(0.0, 0.0);
    for pairing in commutant_pairings(group, 3)? {
        let coeff = if pairing.is_permutation() { perm_coeff } else { contr_coeff };
        second += pairing.trace_against(&[rho, &b, &b])? * coeff;
    }
    let mean = channel.visible_projector(a)?.trace_product(rho)?.re;
    Ok(VariancePrediction::exact(
        second.re - mean * mean,
        &spec.to_string(),
        "estimates Tr[P_vis(A) ρ]",
    ))
}

/// Per-site second-moment factor of the products of two Pauli letters.
fn site_factor(group: Group, p: Pauli, q: Pauli) -> f64 {
    if p == Pauli::I || q == Pauli::I {
        1.0
    } else if p != q {
        0.0
    } else {
        match group {
            Group::Orthogonal => 2.0,
            Group::Unitary => 3.0,
        }
    }
}

fn check_locally_real(p: &PauliString) -> Result<()> {
    if p.is_locally_real() {
        Ok(())
    } else {
        Err(Error::InvisibleObservable(format!(
            "{p} contains Y, which local orthogonal shadows annihilate"
        )))
    }
}

/// `f(p, q)`: zero if some site carries two different non-identity letters,
/// otherwise `2^s` with `s` the number of sites where both carry the same
/// non-identity letter. Both strings must be free of `Y`.
pub fn overlap_f(p: &PauliString, q: &PauliString) -> Result<f64> {
    check_locally_real(p)?;
    check_locally_real(q)?;
    if p.n() != q.n() {
        return Err(Error::DimensionMismatch { expected: p.n(), found: q.n() });
    }
    Ok(p.letters()
        .iter()
        .zip(q.letters())
        .map(|(&a, &b)| site_factor(Group::Orthogonal, a, b))
        .product())
}

/// `E[ô^2] = 2^k |c|^2` for a `Y`-free Pauli string of weight `k` and
/// coefficient `c` under local O(2) shadows, whatever the state.
pub fn second_moment_local_pauli(p: &PauliString) -> Result<f64> {
    check_locally_real(p)?;
    Ok(2f64.powi(p.weight() as i32) * p.coefficient().norm_sqr())
}

/// `2^k |c|^2 - (c Tr[P ρ])^2` under local O(2) shadows.
pub fn var_local_pauli(p: &PauliString, rho: &DenseOperator) -> Result<VariancePrediction> {
    let second = second_moment_local_pauli(p)?;
    let mean = p.expectation(rho)?.re;
    Ok(VariancePrediction::exact(second - mean * mean, "local orthogonal", "state-independent second moment"))
}

fn check_groups(groups: &[Group], n: usize) -> Result<()> {
    if groups.len() != n {
        return Err(Error::DimensionMismatch { expected: groups.len(), found: n });
    }
    Ok(())
}

/// Upper bound on the variance of a single Pauli string: the product of
/// per-site factors (2 for O(2), 3 for U(2)) over its support, times `|c|^2`.
pub fn bound_local_pauli(p: &PauliString, groups: &[Group]) -> Result<VariancePrediction> {
    check_groups(groups, p.n())?;
    let mut value = p.coefficient().norm_sqr();
    for (&letter, &g) in p.letters().iter().zip(groups) {
        if letter == Pauli::I {
            continue;
        }
        if letter == Pauli::Y && g == Group::Orthogonal {
            return Err(Error::InvisibleObservable(format!("{p} has Y on an orthogonal site")));
        }
        value *= site_factor(g, letter, letter);
    }
    Ok(VariancePrediction::bound(value, &format!("local {groups:?}"), "state-independent"))
}

/// Upper bound on the variance for a general operator: the product of
/// per-site factors (3 for O(2), 4 for U(2)) over its support, times
/// `‖A‖_∞^2`.
pub fn bound_local_operator(a: &DenseOperator, groups: &[Group]) -> Result<VariancePrediction> {
    let terms = pauli_terms(a, PAULI_TOL)?;
    let n = crate::pauli::qubit_count(a.dim())?;
    check_groups(groups, n)?;
    let mut in_support = vec![false; n];
    for t in &terms {
        for (j, &l) in t.letters().iter().enumerate() {
            if l == Pauli::Y && groups[j] == Group::Orthogonal {
                return Err(Error::InvisibleObservable(format!("term {t} has Y on orthogonal site {j}")));
            }
            in_support[j] |= l != Pauli::I;
        }
    }
    let factor: f64 = in_support
        .iter()
        .zip(groups)
        .filter(|(s, _)| **s)
        .map(|(_, g)| match g {
            Group::Orthogonal => 3.0,
            Group::Unitary => 4.0,
        })
        .product();
    let norm = a.norm_inf()?;
    Ok(VariancePrediction::bound(factor * norm * norm, &format!("local {groups:?}"), "state-independent"))
}

/// Exact `E[ô^2] = Σ_{p,q} a_p a_q f(p, q) Tr[ρ P_p P_q]` over the visible
/// Pauli terms of `a` under a local ensemble. `None` above
/// [`LOCAL_EXACT_TERM_CAP`] terms.
pub fn local_second_moment(groups: &[Group], a: &DenseOperator, rho: &DenseOperator) -> Result<Option<f64>> {
    check_pair(a, rho)?;
    let terms: Vec<PauliString> = pauli_terms(a, PAULI_TOL)?
        .into_iter()
        .filter(|t| t.letters().iter().zip(groups).all(|(&l, &g)| !(l == Pauli::Y && g == Group::Orthogonal)))
        .collect();
    check_groups(groups, crate::pauli::qubit_count(a.dim())?)?;
    if terms.len() > LOCAL_EXACT_TERM_CAP {
        return Ok(None);
    }
    let rows: Vec<C64> = terms
        .par_iter()
        .map(|p| {
            let mut acc = C64::new(0.0, 0.0);
            for q in &terms {
                let f: f64 = p
                    .letters()
                    .iter()
                    .zip(q.letters())
                    .zip(groups)
                    .map(|((&x, &y), &g)| site_factor(g, x, y))
                    .product();
                if f != 0.0 {
                    let prod = p.mul(q)?;
                    acc += prod.expectation(rho)? * f;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(Some(rows.iter().sum::<C64>().re))
}

/// The best available prediction for `a` under `spec` in state `ρ`: exact
/// for global ensembles and for local ensembles with few Pauli terms, a
/// bound on the visible part otherwise.
pub fn predict(spec: &EnsembleSpec, a: &DenseOperator, rho: &DenseOperator) -> Result<VariancePrediction> {
    match spec {
        EnsembleSpec::Global { .. } => var_global_exact(spec, a, rho),
        EnsembleSpec::Local { groups } => {
            let channel = ChannelDescriptor::new(spec)?;
            let visible = channel.visible_projector(a)?;
            match local_second_moment(groups, &visible, rho)? {
                Some(second) => {
                    let mean = visible.trace_product(rho)?.re;
                    Ok(VariancePrediction::exact(second - mean * mean, &spec.to_string(), "estimates Tr[P_vis(A) ρ]"))
                }
                None => bound_local_operator(&(&visible + &visible.adjoint()).scale_re(0.5), groups),
            }
        }
    }
}

/// Unbiased sample variance.
pub fn sample_variance(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::TooFewRecords { needed: 2, found: values.len() });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok(values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0))
}

/// A Haar-random pure state.
pub fn random_pure_state(rng: &mut RngStream, d: usize) -> Result<StateVector> {
    StateVector::normalized((0..d).map(|_| rng.complex_normal()).collect())
}

/// `G + G^†` with `Re G_ij, Im G_ij` uniform on `[-1, 1]`, normalized to
/// unit 2-norm.
pub fn random_hermitian_observable(rng: &mut RngStream, d: usize) -> DenseOperator {
    let g = DenseOperator::from_fn(d, |_, _| C64::new(rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0)));
    let h = &g + &g.adjoint();
    let norm = h.norm2();
    h.scale_re(1.0 / norm)
}

/// The real (equivalently symmetric) part of [`random_hermitian_observable`],
/// renormalized to unit 2-norm.
pub fn random_symmetric_observable(rng: &mut RngStream, d: usize) -> DenseOperator {
    let s = random_hermitian_observable(rng, d).sym_part();
    let norm = s.norm2();
    s.scale_re(1.0 / norm)
}

/// One instance of the real-versus-unitary variance comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub n: usize,
    pub instance_id: usize,
    pub var_real_exact: f64,
    pub var_unitary_exact: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioSummary {
    pub n: usize,
    pub instances: usize,
    pub mean_ratio: f64,
    pub standard_error: f64,
}

/// RNG stream of instance `i` at `n` qubits.
pub fn ratio_stream(n: usize, i: usize) -> u64 {
    ((n as u64) << 32) | i as u64
}

/// Exact variance ratio `Var_O / Var_U` for random symmetric observables and
/// Haar-random pure states, `instances` per qubit count.
pub fn ratio_sweep(ns: &[usize], instances: usize, seed: u64) -> Result<(Vec<RatioRow>, Vec<RatioSummary>)> {
    if let Some(&bad) = ns.iter().find(|&&n| n == 0 || n > 7) {
        return Err(Error::DimensionLimit { requested: 1usize << bad.min(63), max: 1 << 7 });
    }
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &n in ns {
        let d = 1usize << n;
        let batch: Vec<RatioRow> = (0..instances)
            .into_par_iter()
            .map(|i| {
                let mut rng = RngStream::new(seed, ratio_stream(n, i));
                let psi = random_pure_state(&mut rng, d)?;
                let a = random_symmetric_observable(&mut rng, d);
                let rho = psi.projector();
                let vr = var_global_real(&a, &rho)?.value;
                let vu = var_global_unitary(&a, &rho)?.value;
                Ok(RatioRow { n, instance_id: i, var_real_exact: vr, var_unitary_exact: vu, ratio: vr / vu })
            })
            .collect::<Result<_>>()?;
        let ratios: Vec<f64> = batch.iter().map(|r| r.ratio).collect();
        let mean = ratios.iter().sum::<f64>() / ratios.len().max(1) as f64;
        let se = if ratios.len() > 1 { (sample_variance(&ratios)? / ratios.len() as f64).sqrt() } else { 0.0 };
        summaries.push(RatioSummary { n, instances, mean_ratio: mean, standard_error: se });
        rows.extend(batch);
    }
    Ok((rows, summaries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::MeasurementBasis;
    use crate::linalg::re;

    fn pauli(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn dense(s: &str) -> DenseOperator {
        pauli(s).to_dense().unwrap()
    }

    fn mixed(d: usize) -> DenseOperator {
        DenseOperator::identity(d).scale_re(1.0 / d as f64)
    }

    #[test]
    fn pinned_qubit_values() {
        let (z, rho) = (dense("Z"), mixed(2));
        assert_eq!(var_global_real(&z, &rho).unwrap().value, 2.0);
        assert_eq!(var_global_unitary(&z, &rho).unwrap().value, 3.0);
        assert_eq!(var_global_real(&dense("I"), &rho).unwrap().value, 0.0);
        assert_eq!(var_global_real(&dense("Y"), &rho).unwrap().value, 0.0);
        assert_eq!(var_global_unitary(&dense("I"), &rho).unwrap().value, 0.0);
    }

    #[test]
    fn exact_route_matches_closed_forms() {
        let mut rng = RngStream::new(21, 0);
        for n in 1..=3 {
            let d = 1 << n;
            let rho = random_pure_state(&mut rng, d).unwrap().projector();
            let a = random_symmetric_observable(&mut rng, d);
            let real = EnsembleSpec::global(Group::Orthogonal, MeasurementBasis::computational(n).unwrap());
            let unitary = EnsembleSpec::global(Group::Unitary, MeasurementBasis::computational(n).unwrap());
            let e = var_global_exact(&real, &a, &rho).unwrap().value;
            assert!((e - var_global_real(&a, &rho).unwrap().value).abs() < 1e-12);
            let h = random_hermitian_observable(&mut rng, d);
            let e = var_global_exact(&unitary, &h, &rho).unwrap().value;
            assert!((e - var_global_unitary(&h, &rho).unwrap().value).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_formula_matches_exact_route_on_symmetric_observables() {
        let mut rng = RngStream::new(22, 0);
        for basis in [
            MeasurementBasis::computational(2).unwrap(),
            MeasurementBasis::sh(2).unwrap(),
            MeasurementBasis::random(&mut rng, 4).unwrap(),
            MeasurementBasis::random(&mut rng, 8).unwrap(),
        ] {
            let d = basis.dim();
            let alpha = basis.alpha_total();
            let spec = EnsembleSpec::global(Group::Orthogonal, basis);
            let rho = random_pure_state(&mut rng, d).unwrap().projector();
            let a = random_symmetric_observable(&mut rng, d);
            let exact = var_global_exact(&spec, &a, &rho).unwrap().value;
            let closed = var_global_alpha(&a, &rho, alpha).unwrap().value;
            assert!((exact - closed).abs() < 1e-10, "alpha {alpha}: {exact} vs {closed}");
        }
        assert!(matches!(
            var_global_alpha(&dense("Z"), &mixed(2), 0.0),
            Err(Error::DegenerateDecomposition { .. })
        ));
    }

    #[test]
    fn alpha_formula_reduces_to_the_real_case() {
        let mut rng = RngStream::new(23, 0);
        let rho = random_pure_state(&mut rng, 8).unwrap().projector();
        let a = random_symmetric_observable(&mut rng, 8);
        let r = var_global_real(&a, &rho).unwrap().value;
        assert!((var_global_alpha(&a, &rho, 8.0).unwrap().value - r).abs() < 1e-12);
    }

    #[test]
    fn overlap_table() {
        assert_eq!(overlap_f(&pauli("XI"), &pauli("ZI")).unwrap(), 0.0);
        assert_eq!(overlap_f(&pauli("XZ"), &pauli("XI")).unwrap(), 2.0);
        assert_eq!(overlap_f(&pauli("XZ"), &pauli("XZ")).unwrap(), 4.0);
        assert!(overlap_f(&pauli("YI"), &pauli("XI")).is_err());
    }

    #[test]
    fn local_pauli_moments() {
        assert_eq!(second_moment_local_pauli(&pauli("X")).unwrap(), 2.0);
        assert_eq!(second_moment_local_pauli(&pauli("III")).unwrap(), 1.0);
        // |00> + |11> rotated: the +1 eigenstate of X⊗Z is |+>|0>.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = StateVector::new(vec![re(h), re(0.0), re(h), re(0.0)]).unwrap();
        let v = var_local_pauli(&pauli("XZ"), &psi.projector()).unwrap();
        assert!((v.value - 3.0).abs() < 1e-12);
        assert!(var_local_pauli(&pauli("YZ"), &psi.projector()).is_err());
    }

    #[test]
    fn local_bounds() {
        let all_o = [Group::Orthogonal; 2];
        let all_u = [Group::Unitary; 2];
        assert_eq!(bound_local_pauli(&pauli("XZ"), &all_o).unwrap().value, 4.0);
        assert_eq!(bound_local_pauli(&pauli("XZ"), &all_u).unwrap().value, 9.0);
        assert_eq!(bound_local_pauli(&pauli("XY"), &[Group::Orthogonal, Group::Unitary]).unwrap().value, 6.0);
        assert!(bound_local_pauli(&pauli("YX"), &[Group::Orthogonal, Group::Unitary]).is_err());
        let a = &(&dense("XZX") + &dense("ZIZ")) + &dense("XXI");
        let a = a.scale_re(1.0 / a.norm_inf().unwrap());
        let b = bound_local_operator(&a, &[Group::Orthogonal; 3]).unwrap();
        assert_eq!(b.kind, PredictionKind::UpperBound);
        assert!((b.value - 27.0).abs() < 1e-10);
    }

    #[test]
    fn local_exact_matches_single_string_results() {
        let mut rng = RngStream::new(24, 0);
        let rho = random_pure_state(&mut rng, 8).unwrap().projector();
        let groups = [Group::Orthogonal; 3];
        let m = local_second_moment(&groups, &dense("XZI"), &rho).unwrap().unwrap();
        assert!((m - 4.0).abs() < 1e-12);
        let m = local_second_moment(&[Group::Unitary; 3], &dense("XZI"), &rho).unwrap().unwrap();
        assert!((m - 9.0).abs() < 1e-12);
    }

    #[test]
    fn real_never_exceeds_unitary() {
        let mut rng = RngStream::new(25, 0);
        for d in [2, 4, 8] {
            for _ in 0..1000 {
                let rho = random_pure_state(&mut rng, d).unwrap().projector();
                let a = random_symmetric_observable(&mut rng, d);
                let r = var_global_real(&a, &rho).unwrap().value;
                let u = var_global_unitary(&a, &rho).unwrap().value;
                assert!(r <= u + 1e-12, "d {d}: {r} > {u}");
            }
        }
    }

    #[test]
    fn single_qubit_ratio_is_at_most_two_thirds() {
        let (_, summaries) = ratio_sweep(&[1], 200, 3).unwrap();
        assert!(summaries[0].mean_ratio <= 2.0 / 3.0 + 1e-12);
    }

    #[test]
    fn sample_variance_edge_cases() {
        assert!(matches!(sample_variance(&[1.0]), Err(Error::TooFewRecords { .. })));
        assert_eq!(sample_variance(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(sample_variance(&[0.0, 2.0]).unwrap(), 2.0);
    }

    #[test]
    fn generators() {
        let mut rng = RngStream::new(26, 0);
        let a = random_symmetric_observable(&mut rng, 8);
        assert!((a.norm2() - 1.0).abs() < 1e-12);
        assert!(a.is_hermitian(1e-15) && a.is_real(0.0));
        let h = random_hermitian_observable(&mut rng, 8);
        assert!(h.is_hermitian(1e-15));
        assert!(!h.is_real(1e-3));
    }
}
