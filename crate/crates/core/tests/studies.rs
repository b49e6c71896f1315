use std::f64::consts::PI;
use std::sync::Arc;

use spectral_recovery::crosscheck::{Component, Oracle};
use spectral_recovery::experiments::{
    fit_line, run_converse_study, run_dipole_study, run_rate_study, run_width_constant_study,
    ExperimentConfig, MeasureSpec, Study,
};
use spectral_recovery::measures::{fourier_coefficients, DensitySpec, Exponent, Measure};
use spectral_recovery::metrics::{g_norm, near_best_degree_error, NormRequest};
use spectral_recovery::recover::lowpass_data;
use spectral_recovery::spectral::{eval_kernel_section, lowpass_h, KernelSpec};
use spectral_recovery::system::{build_torus_system, Grid};

fn rate(q: usize, grid: usize, beta: f64, p: Exponent, n: [u32; 2]) -> ExperimentConfig {
    let mut c = ExperimentConfig::defaults(Study::Rate);
    c.system = spectral_recovery::experiments::SystemConfig { q, grid_size: grid };
    c.kernel.beta = beta;
    c.p = p;
    c.n_range = n;
    c.measure_spec = MeasureSpec::dirac(q);
    c
}

// values from an independent numpy evaluation of the truncated series on the
// same 2^14-point grid
#[test]
fn frozen_rate_errors_for_a_dirac() {
    let report = run_rate_study(&rate(1, 1 << 14, 2.0, Exponent::ONE, [3, 5])).unwrap();
    let frozen = [(3, 0.029679557222655903), (5, 0.002069830502768902)];
    for (n, value) in frozen {
        let row = report.rows.iter().find(|r| r.n == n).unwrap();
        assert!(
            ((row.error - value) / value).abs() < 1e-10,
            "n={n}: {}",
            row.error
        );
    }
}

#[test]
fn frozen_dipole_norm() {
    let mut c = ExperimentConfig::defaults(Study::Dipole);
    c.n_range = [1, 1];
    let report = run_dipole_study(&c).unwrap();
    let value = 0.47209450553136617;
    assert!(((report.rows[0].g_norm - value) / value).abs() < 1e-10);
    // the untruncated kernel, by quadrature of the closed-form section
    assert!((report.rows[0].g_norm - 0.4720903625619403).abs() < 1e-5);
}

#[test]
fn kernel_sections_match_poisson_summation() {
    let grid = Grid::new(1, 1 << 20).unwrap();
    let system = Arc::new(build_torus_system(1, grid.nyquist()).unwrap());
    let kernel = KernelSpec::for_grid(2.0, &grid).unwrap();
    let section = eval_kernel_section(&kernel, &[0.0], &system, &grid).unwrap();
    let tail = kernel.sup_tail_bound(1);
    let at_zero = section.values()[grid.points_per_axis() / 2];
    let at_pi = section.values()[0];
    assert!((at_zero - PI / PI.tanh()).abs() <= tail);
    assert!((at_pi - PI / PI.sinh()).abs() <= tail);
}

#[test]
fn recovery_error_agrees_with_direct_summation() {
    let grid = Grid::new(1, 2048).unwrap();
    let system = Arc::new(build_torus_system(1, grid.nyquist()).unwrap());
    let kernel = KernelSpec::for_grid(2.0, &grid).unwrap();
    let req = NormRequest::new(Exponent::ONE, kernel.clone());
    let mu_hat =
        fourier_coefficients(&Measure::dirac(&[0.0]).unwrap(), &system, grid.nyquist()).unwrap();
    let n = 2;
    let err = lowpass_data(&mu_hat, n, &[0.0; 3])
        .unwrap()
        .sub(&mu_hat)
        .unwrap();
    let library = g_norm(&err, &req, &grid).unwrap().value;
    let oracle = Oracle::new(
        1,
        kernel.lambda_truncation(),
        &[Component {
            atoms: vec![(vec![0.0], 1.0)],
            terms: vec![],
            multiplier: Box::new(|l| (lowpass_h(l / 4.0) - 1.0) / (1.0 + l * l)),
        }],
    )
    .unwrap();
    let values = oracle.eval_grid(&grid).unwrap();
    let direct = values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64;
    assert!((library - direct).abs() < 1e-10 * direct.max(1.0));
}

#[test]
fn injected_constant_noise_shifts_error_by_at_most_its_norm() {
    let grid = Grid::new(1, 1024).unwrap();
    let system = Arc::new(build_torus_system(1, grid.nyquist()).unwrap());
    let req = NormRequest::new(Exponent::ONE, KernelSpec::for_grid(2.0, &grid).unwrap());
    let mu_hat =
        fourier_coefficients(&Measure::dirac(&[0.0]).unwrap(), &system, grid.nyquist()).unwrap();
    for n in 2..6 {
        let count = system.count_below(2f64.powi(n as i32));
        let mut eps = vec![0.0; count];
        let clean = lowpass_data(&mu_hat, n, &eps)
            .unwrap()
            .sub(&mu_hat)
            .unwrap();
        eps[0] = 3e-3;
        let noisy = lowpass_data(&mu_hat, n, &eps)
            .unwrap()
            .sub(&mu_hat)
            .unwrap();
        let shift =
            g_norm(&noisy, &req, &grid).unwrap().value - g_norm(&clean, &req, &grid).unwrap().value;
        assert!(shift.abs() <= 3e-3 + 1e-10, "n={n}: {shift}");
    }
}

#[test]
fn lacunary_projection_error_decays_at_the_smoothness_rate() {
    let grid = Grid::new(1, 1 << 14).unwrap();
    let f = DensitySpec::Lacunary { r: 1.0 }.sample(&grid).unwrap();
    let ns: Vec<f64> = (3..=9).map(f64::from).collect();
    let logs: Vec<f64> = (3..=9)
        .map(|n| near_best_degree_error(&f, n, Exponent::TWO).unwrap().log2())
        .collect();
    let (slope, _) = fit_line(&ns, &logs);
    assert!((slope + 1.0).abs() <= 0.15, "{slope}");
}

#[test]
fn converse_without_smoothness_follows_the_mask() {
    let mut c = ExperimentConfig::defaults(Study::Converse);
    c.measure_spec = MeasureSpec::Generator("lacunary(0)".into());
    let report = run_converse_study(&c).unwrap();
    assert!(
        (report.fitted_slope + 2.0).abs() <= 0.35,
        "{}",
        report.fitted_slope
    );
}

#[test]
fn width_study_reference_vectors() {
    let mut c = ExperimentConfig::defaults(Study::WidthConstant);
    c.system.grid_size = 4096;
    c.trials = 20;
    let report = run_width_constant_study(&c).unwrap();
    let ms: Vec<usize> = report.rows.iter().map(|r| r.m).collect();
    assert_eq!(ms, [7, 15, 31, 63]);
    for row in &report.rows {
        // a single positive kernel section integrates to b(0) = 1
        assert!((row.single_ratio - 1.0).abs() < 1e-9);
        assert!(row.best_ratio >= row.alternating_ratio);
        assert!((row.eta - 2.0 * PI / (row.m + 1) as f64).abs() < 1e-15);
    }
    assert!(report
        .rows
        .windows(2)
        .all(|w| w[1].alternating_ratio > w[0].alternating_ratio));
}

#[test]
fn slopes_are_stable_under_grid_doubling() {
    for (q, grid, beta, p, n) in [
        (1, 1 << 14, 2.0, Exponent::ONE, [3, 9]),
        (1, 1 << 14, 3.0, Exponent::INFINITY, [3, 9]),
        (2, 1024, 3.0, Exponent::ONE, [3, 7]),
    ] {
        let coarse = run_rate_study(&rate(q, grid, beta, p, n)).unwrap();
        let fine = run_rate_study(&rate(q, 2 * grid, beta, p, n)).unwrap();
        let change = (coarse.fitted_slope - fine.fitted_slope).abs();
        assert!(change < 0.05, "q={q} beta={beta} p={p}: {change}");
    }
}

#[test]
fn band_limited_targets_report_exact_recovery() {
    let mut c = rate(1, 1024, 2.0, Exponent::ONE, [3, 7]);
    c.measure_spec = MeasureSpec::Generator("bandlimited(3, 4)".into());
    let report = run_rate_study(&c).unwrap();
    assert!(report.degenerate && report.pass);
    assert!(report.fitted_slope.is_nan());
    assert!(report.notes.iter().any(|n| n.starts_with("exact recovery")));
}
