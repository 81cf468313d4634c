use orthoshadow::bases::MeasurementBasis;
use orthoshadow::channels::{definition_channel, mc_channel, ChannelDescriptor, ChannelSpectrum};
use orthoshadow::ensemble::{EnsembleSpec, Group};
use orthoshadow::linalg::{DenseOperator, StateVector, C64};
use orthoshadow::sampling::RngStream;
use orthoshadow::shadow::{measured_vector, ShadowSimulator};
use orthoshadow::validation::family_threshold;
use orthoshadow::variance::{random_hermitian_observable, random_pure_state};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `{|00⟩, |01⟩, (|10⟩ ± i|11⟩)/√2}`, reality 2.
fn half_real_basis() -> MeasurementBasis {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    MeasurementBasis::custom(vec![
        StateVector::basis(4, 0),
        StateVector::basis(4, 1),
        StateVector::new(vec![z, z, c(h, 0.0), c(0.0, h)]).unwrap(),
        StateVector::new(vec![z, z, c(h, 0.0), c(0.0, -h)]).unwrap(),
    ])
    .unwrap()
}

/// Superoperator matrix of `f` in the matrix-unit basis: column `(i, j)` is `f(E_ij)`.
fn superoperator(d: usize, f: impl Fn(&DenseOperator) -> DenseOperator) -> DenseOperator {
    let mut s = DenseOperator::zeros(d * d);
    for i in 0..d {
        for j in 0..d {
            let mut e = DenseOperator::zeros(d);
            e.set(i, j, c(1.0, 0.0));
            let image = f(&e);
            for r in 0..d {
                for col in 0..d {
                    s.set(r * d + col, i * d + j, image.get(r, col));
                }
            }
        }
    }
    s
}

fn expected_spectrum(s: &ChannelSpectrum, d: usize) -> Vec<f64> {
    let mut v = vec![1.0];
    v.extend(std::iter::repeat(s.lambda_sym).take(d * (d + 1) / 2 - 1));
    v.extend(std::iter::repeat(s.lambda_anti).take(d * (d - 1) / 2));
    v.sort_by(f64::total_cmp);
    v
}

fn assert_spectrum(spec: &EnsembleSpec) {
    let d = spec.dim();
    let s = superoperator(d, |e| definition_channel(spec, e).unwrap());
    assert!(s.is_hermitian(1e-12));
    let mut eig = s.hermitian_eigenvalues().unwrap();
    eig.sort_by(f64::total_cmp);
    let channel = ChannelDescriptor::new(spec).unwrap();
    let expected = expected_spectrum(channel.spectrum().unwrap(), d);
    for (a, b) in eig.iter().zip(&expected) {
        assert!((a - b).abs() <= 1e-10, "{spec}: {eig:?} vs {expected:?}");
    }
}

#[test]
fn brute_force_spectrum_matches_closed_form() {
    for n in 1..=2 {
        assert_spectrum(&EnsembleSpec::global(Group::Orthogonal, MeasurementBasis::computational(n).unwrap()));
        assert_spectrum(&EnsembleSpec::global(Group::Orthogonal, MeasurementBasis::sh(n).unwrap()));
        assert_spectrum(&EnsembleSpec::global(Group::Unitary, MeasurementBasis::computational(n).unwrap()));
    }
    assert_spectrum(&EnsembleSpec::global(Group::Orthogonal, MeasurementBasis::computational_dim(3)));
    assert_spectrum(&EnsembleSpec::global(Group::Orthogonal, half_real_basis()));
    for seed in 0..3 {
        assert_spectrum(&EnsembleSpec::global(Group::Orthogonal, MeasurementBasis::random_seeded(seed, 4).unwrap()));
    }
}

#[test]
fn closed_form_channel_equals_definition_route() {
    let mut rng = RngStream::new(31, 0);
    let specs = [
        EnsembleSpec::global(Group::Orthogonal, half_real_basis()),
        EnsembleSpec::global(Group::Orthogonal, MeasurementBasis::random_seeded(9, 8).unwrap()),
        EnsembleSpec::local(vec![Group::Orthogonal, Group::Unitary, Group::Orthogonal]),
    ];
    for spec in &specs {
        let channel = ChannelDescriptor::new(spec).unwrap();
        for _ in 0..3 {
            let a = random_hermitian_observable(&mut rng, spec.dim());
            assert!(channel.apply(&a).unwrap().approx_eq(&definition_channel(spec, &a).unwrap(), 1e-10));
        }
    }
}

#[test]
fn mixed_local_channel_matches_monte_carlo() {
    let spec = EnsembleSpec::local(vec![Group::Unitary, Group::Orthogonal]);
    let a = random_hermitian_observable(&mut RngStream::new(3, 0), 4);
    let closed = ChannelDescriptor::new(&spec).unwrap().apply(&a).unwrap();
    let mc = mc_channel(&mut RngStream::new(3, 1), &spec, &a, 40_000).unwrap();
    let z = mc.z_scores(&closed, 1e-12);
    let worst = z.iter().copied().fold(0.0, f64::max);
    assert!(worst <= family_threshold(z.len()), "max z {worst}");
}

#[test]
fn outcome_frequencies_reproduce_the_channel_on_the_state() {
    // The average of U^†|w⟩⟨w|U over recorded shots estimates M(ρ).
    for spec in [
        EnsembleSpec::global(Group::Orthogonal, MeasurementBasis::computational(2).unwrap()),
        EnsembleSpec::global(Group::Orthogonal, MeasurementBasis::sh(2).unwrap()),
        EnsembleSpec::local_uniform(Group::Orthogonal, 2),
    ] {
        let rho = random_pure_state(&mut RngStream::new(8, 0), 4).unwrap().projector();
        let sim = ShadowSimulator::new(&spec, rho.clone(), 12).unwrap();
        let target = ChannelDescriptor::new(&spec).unwrap().apply(&rho).unwrap();
        let shots = 40_000;
        let mut sum = nalgebra::DMatrix::from_element(4, 4, c(0.0, 0.0));
        let mut sq_re = nalgebra::DMatrix::zeros(4, 4);
        let mut sq_im = nalgebra::DMatrix::zeros(4, 4);
        for s in 0..shots {
            let phi = measured_vector(&sim.record(s).unwrap(), &spec).unwrap();
            let p = &phi * phi.adjoint();
            sq_re += p.map(|z| z.re * z.re);
            sq_im += p.map(|z| z.im * z.im);
            sum += p;
        }
        let n = shots as f64;
        let mut scores = Vec::new();
        for r in 0..4 {
            for col in r..4 {
                let mean = sum[(r, col)] / n;
                let diff = mean - target.get(r, col);
                let se_re = ((sq_re[(r, col)] / n - mean.re * mean.re) / (n - 1.0)).sqrt();
                let se_im = ((sq_im[(r, col)] / n - mean.im * mean.im) / (n - 1.0)).sqrt();
                for (delta, se) in [(diff.re, se_re), (diff.im, se_im)] {
                    if delta.abs() > 1e-12 {
                        scores.push(delta.abs() / se);
                    }
                }
            }
        }
        let worst = scores.iter().copied().fold(0.0, f64::max);
        assert!(worst <= family_threshold(16), "{spec}: max z {worst}");
    }
}
