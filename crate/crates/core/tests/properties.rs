use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use spectral_recovery::experiments::{format_sig, ExperimentConfig, MeasureSpec, Study};
use spectral_recovery::measures::{
    fourier_coefficients, synthesize, synthesize_at, torus_distance, total_variation, wrap_angle,
    Atom, DensitySpec, Exponent, Measure,
};
use spectral_recovery::metrics::{g_norm, highpass_g_norm, NormRequest};
use spectral_recovery::recover::{lowpass_data, NoiseModel};
use spectral_recovery::spectral::{bandpass_g, lowpass_h, KernelSpec};
use spectral_recovery::system::{build_torus_system, Grid, SystemDescriptor};

fn circle() -> (Grid, Arc<SystemDescriptor>) {
    let grid = Grid::new(1, 256).unwrap();
    let system = Arc::new(build_torus_system(1, grid.nyquist()).unwrap());
    (grid, system)
}

fn atoms(q: usize, max: usize) -> impl Strategy<Value = Vec<Atom>> {
    prop::collection::vec((prop::collection::vec(-PI..PI, q), -2.0..2.0f64), 1..=max).prop_map(
        |raw| {
            raw.into_iter()
                .map(|(location, weight)| Atom { location, weight })
                .collect()
        },
    )
}

fn exponent() -> impl Strategy<Value = Exponent> {
    prop_oneof![
        Just(Exponent::ONE),
        Just(Exponent::TWO),
        Just(Exponent::INFINITY),
        (1.0..6.0f64).prop_map(|p| Exponent::new(p).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lowpass_is_a_smooth_cutoff(t in -3.0..3.0f64) {
        let h = lowpass_h(t);
        prop_assert!((0.0..=1.0).contains(&h));
        prop_assert_eq!(h, lowpass_h(-t));
        if t.abs() <= 0.5 { prop_assert_eq!(h, 1.0); }
        if t.abs() >= 1.0 { prop_assert_eq!(h, 0.0); }
        prop_assert!(lowpass_h(t.abs() + 0.01) <= h);
    }

    #[test]
    fn bandpass_telescopes(t in 0.01..40.0f64, levels in 1u32..8) {
        let sum: f64 = (0..levels).map(|j| bandpass_g(t / 2f64.powi(j as i32))).sum();
        let expected = lowpass_h(t / 2f64.powi(levels as i32 - 1)) - lowpass_h(2.0 * t);
        prop_assert!((sum - expected).abs() < 1e-12);
    }

    #[test]
    fn wrapped_angles_stay_in_the_fundamental_interval(x in -1e3..1e3f64) {
        let w = wrap_angle(x);
        prop_assert!((-PI..PI).contains(&w));
        prop_assert!(((x - w) / (2.0 * PI)).fract().abs() < 1e-9
            || 1.0 - ((x - w) / (2.0 * PI)).fract().abs() < 1e-9);
    }

    #[test]
    fn torus_distance_is_symmetric_and_bounded(
        x in prop::collection::vec(-10.0..10.0f64, 2),
        y in prop::collection::vec(-10.0..10.0f64, 2),
    ) {
        let d = torus_distance(&x, &y);
        prop_assert!((d - torus_distance(&y, &x)).abs() < 1e-12);
        prop_assert!(d <= PI * 2f64.sqrt() + 1e-12);
    }

    #[test]
    fn atomic_coefficients_synthesize_to_the_direct_sum(a in atoms(1, 4), x in -PI..PI) {
        let (grid, system) = circle();
        let mu = Measure::atomic(1, a.clone()).unwrap();
        let v = fourier_coefficients(&mu, &system, 20.0).unwrap();
        let direct: f64 = a.iter().map(|atom| {
            atom.weight * (1.0 + 2.0 * (1..20).map(|k| (k as f64 * (x - atom.location[0])).cos()).sum::<f64>())
        }).sum();
        let value = synthesize_at(&v, &[vec![x]])[0];
        prop_assert!((value - direct).abs() < 1e-9);
        let on_grid = synthesize(&v, &grid).unwrap();
        prop_assert!((on_grid.mean() - mu.total_mass()).abs() < 1e-9);
    }

    #[test]
    fn norm_is_homogeneous_and_subadditive(
        a in atoms(1, 3),
        b in atoms(1, 3),
        c in -4.0..4.0f64,
        p in exponent(),
    ) {
        let (grid, system) = circle();
        let req = NormRequest::new(p, KernelSpec::for_grid(2.0, &grid).unwrap());
        let norm = |mu: &Measure| {
            let v = fourier_coefficients(mu, &system, grid.nyquist()).unwrap();
            g_norm(&v, &req, &grid).unwrap().value
        };
        let mu = Measure::atomic(1, a).unwrap();
        let nu = Measure::atomic(1, b).unwrap();
        let (x, y) = (norm(&mu), norm(&nu));
        prop_assert!((norm(&mu.scaled(c)) - c.abs() * x).abs() <= 1e-10 * (1.0 + x));
        // duplicate locations merge their weights
        if let Ok(sum) = mu.plus(&nu) {
            prop_assert!(norm(&sum) <= x + y + 1e-10);
        }
    }

    #[test]
    fn l1_norm_is_at_most_total_variation(a in atoms(1, 5)) {
        let (grid, system) = circle();
        let req = NormRequest::new(Exponent::ONE, KernelSpec::for_grid(2.0, &grid).unwrap());
        let mu = Measure::atomic(1, a).unwrap();
        let v = fourier_coefficients(&mu, &system, grid.nyquist()).unwrap();
        prop_assert!(g_norm(&v, &req, &grid).unwrap().value <= total_variation(&mu) + 1e-9);
    }

    #[test]
    fn highpass_never_exceeds_full_for_a_dirac(n in 1u32..6) {
        let (grid, system) = circle();
        let req = NormRequest::new(Exponent::TWO, KernelSpec::for_grid(2.0, &grid).unwrap());
        let mu_hat = fourier_coefficients(&Measure::dirac(&[0.0]).unwrap(), &system, grid.nyquist()).unwrap();
        let eps = vec![0.0; system.count_below(2f64.powi(n as i32))];
        let err = lowpass_data(&mu_hat, n, &eps).unwrap().sub(&mu_hat).unwrap();
        let full = g_norm(&err, &req, &grid).unwrap().value;
        let high = highpass_g_norm(&err, n, &req, &grid).unwrap().value;
        prop_assert!(high <= full + 1e-12);
    }

    #[test]
    fn recovery_is_exact_for_band_limited_densities(seed in any::<u64>(), n in 2u32..6) {
        let (grid, system) = circle();
        let spec = DensitySpec::BandLimited { seed, lambda_max: 2f64.powi(n as i32 - 1) };
        let mu = Measure::from_generator(spec, &grid).unwrap();
        let mu_hat = fourier_coefficients(&mu, &system, grid.nyquist()).unwrap();
        let eps = vec![0.0; system.count_below(2f64.powi(n as i32))];
        let err = lowpass_data(&mu_hat, n, &eps).unwrap().sub(&mu_hat).unwrap();
        let req = NormRequest::new(Exponent::ONE, KernelSpec::for_grid(2.0, &grid).unwrap());
        prop_assert!(g_norm(&err, &req, &grid).unwrap().value <= 1e-10);
    }

    #[test]
    fn noise_draws_replay(seed in any::<u64>(), stream in 0u64..50, count in 0usize..200) {
        let noise = NoiseModel::gaussian(0.5, seed).for_trial(stream);
        prop_assert_eq!(noise.draw(count), noise.draw(count));
        let longer = noise.draw(count + 10);
        prop_assert_eq!(&longer[..count], &noise.draw(count)[..]);
    }

    #[test]
    fn exponents_round_trip_through_text(p in exponent()) {
        let back: Exponent = p.to_string().parse().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn generators_round_trip_through_text(
        which in 0usize..4,
        r in 0.0..3.0f64,
        seed in any::<u64>(),
        l in 0.5..30.0f64,
    ) {
        let spec = match which {
            0 => DensitySpec::Uniform,
            1 => DensitySpec::Bump,
            2 => DensitySpec::Lacunary { r },
            _ => DensitySpec::BandLimited { seed, lambda_max: l },
        };
        let back: DensitySpec = spec.to_string().parse().unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn configs_round_trip_through_json(
        study in prop_oneof![Just(Study::Rate), Just(Study::Noise), Just(Study::Dipole)],
        beta in 1.1..4.0f64,
        p in exponent(),
        seed in any::<u64>(),
        a in atoms(1, 3),
    ) {
        let mut c = ExperimentConfig::defaults(study);
        c.kernel.beta = beta;
        c.p = p;
        c.master_seed = seed;
        c.measure_spec = MeasureSpec::Literal(spectral_recovery::experiments::MeasureLiteral {
            atoms: a.iter().map(|x| vec![x.location[0], x.weight]).collect(),
            density: Some("bump".into()),
        });
        prop_assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn significant_digit_format_parses_back(x in prop::num::f64::NORMAL) {
        let text = format_sig(x);
        let back: f64 = text.parse().unwrap();
        prop_assert!(((back - x) / x).abs() < 1e-11);
    }
}
