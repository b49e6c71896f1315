//! Distances between measures: kernel norms, the Erdős–Turán discrepancy, the
//! Fejér seminorm, and a near-best approximation proxy.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::fft;
use crate::measures::{
    fourier_coefficients, lp_norm_of, synthesize, Exponent, GridFunction, Measure,
};
use crate::spectral::{
    lowpass_h, KernelSpec, SpectralVector, Tail, TailMode, EMPIRICAL_TAIL_TOLERANCE,
};
use crate::system::{build_torus_system, Grid};

/// Relative change of the grid maximum under refinement that is accepted for
/// `p = inf`.
pub const SUP_REFINEMENT_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormVariant {
    Full,
    /// Multiplier `b(lambda) (1 - h(lambda / 2^n))`.
    HighPass(u32),
}

#[derive(Debug, Clone)]
pub struct NormRequest {
    pub p: Exponent,
    pub kernel: KernelSpec,
    pub variant: NormVariant,
}

impl NormRequest {
    pub fn new(p: Exponent, kernel: KernelSpec) -> Self {
        NormRequest {
            p,
            kernel,
            variant: NormVariant::Full,
        }
    }

    pub fn high_pass(mut self, n: u32) -> Self {
        self.variant = NormVariant::HighPass(n);
        self
    }

    /// Radial weight applied to each coefficient.
    pub fn multiplier(&self, lambda: f64) -> f64 {
        let b = self.kernel.b(lambda);
        match self.variant {
            NormVariant::Full => b,
            NormVariant::HighPass(n) => b * (1.0 - lowpass_h(lambda / 2f64.powi(n as i32))),
        }
    }

    /// `beta > q / p'`, the range where the norm metrizes weak-star convergence.
    pub fn check_metrizing(&self, q: usize) -> Result<()> {
        let needed = q as f64 * self.p.conjugate_reciprocal();
        if self.kernel.beta() > needed {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "beta={} must exceed q/p'={needed} for p={}",
                self.kernel.beta(),
                self.p
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    /// Bound on the error from truncating the kernel series.
    pub tail_bar: f64,
    /// Whether `tail_bar` is within the kernel's tolerance.
    pub tail_ok: bool,
    /// Set when the tail is estimated from partial sums instead of bounded.
    pub empirical_tail: Option<f64>,
    /// For `p = inf`, the relative change of the maximum on the doubled grid.
    pub sup_refinement: Option<f64>,
}

struct SectionBand {
    count: usize,
    effective: f64,
    unavailable: bool,
}

fn section_band(v: &SpectralVector, truncation: f64) -> SectionBand {
    let system = v.system();
    // coefficients past a nonzero tail are not available
    let (effective, unavailable) = match v.tail() {
        Tail::Zero => (truncation, false),
        _ if v.lambda_cut() > truncation => (truncation, false),
        _ => (v.lambda_cut(), true),
    };
    let mut count = system.count_at_most(effective).min(v.len());
    if unavailable {
        count = count.min(system.count_below(effective));
    }
    SectionBand {
        count,
        effective,
        unavailable,
    }
}

/// Spectrum of `x -> int G(x, y) d mu(y)` as used by [`g_norm`]: the weighted
/// coefficients of `v` up to the kernel truncation.
pub fn norm_section(v: &SpectralVector, req: &NormRequest) -> Result<SpectralVector> {
    let band = section_band(v, req.kernel.lambda_truncation());
    let system = v.system();
    let weighted = v.coefficients()[..band.count]
        .iter()
        .zip(system.lambdas())
        .map(|(c, &l)| {
            if *c == 0.0 {
                0.0
            } else {
                c * req.multiplier(l)
            }
        })
        .collect();
    SpectralVector::new(system.clone(), weighted, 0.0, Tail::Zero)
}

/// `|||mu|||_{G;p}` from the spectrum of `mu`.
pub fn g_norm(v: &SpectralVector, req: &NormRequest, grid: &Grid) -> Result<NormEstimate> {
    let q = v.system().q();
    if q != grid.q() {
        return Err(Error::Parameter(
            "spectrum and grid dimensions differ".into(),
        ));
    }
    let mode = req.kernel.tail_mode(q)?;
    let truncation = req.kernel.lambda_truncation();
    if truncation >= grid.nyquist() {
        return Err(Error::Resolution(format!(
            "kernel truncation {truncation} is not below the grid Nyquist limit {}",
            grid.nyquist()
        )));
    }
    let system = v.system();
    let lambdas = system.lambdas();
    let band = section_band(v, truncation);
    let (count, effective, unavailable) = (band.count, band.effective, band.unavailable);
    let multiplier = |l: f64| req.multiplier(l);
    let section = norm_section(v, req)?;
    let weighted = section.coefficients().to_vec();
    let f = synthesize(&section, grid)?;
    let value = f.lp_norm(req.p);

    let mut empirical_tail = None;
    let tail_bar = match mode {
        TailMode::Empirical => {
            let half = system.count_at_most(effective / 2.0).min(count);
            let mut upper = weighted.clone();
            upper[..half].iter_mut().for_each(|c| *c = 0.0);
            let diff = SpectralVector::new(system.clone(), upper, 0.0, Tail::Zero)?;
            let estimate = synthesize(&diff, grid)?.lp_norm(Exponent::ONE);
            empirical_tail = Some(estimate);
            estimate
        }
        TailMode::Analytic => match v.tail() {
            Tail::Bounded(tv) if unavailable || v.lambda_cut() <= truncation => {
                let spec = req.kernel.clone().with_truncation(effective.max(1.0))?;
                tv * spec.tail_bound(req.p.value(), q)
            }
            Tail::Bounded(tv) => tv * req.kernel.tail_bound(req.p.value(), q),
            Tail::Unknown => f64::INFINITY,
            Tail::Zero => {
                let dropped = v.coefficients()[count..]
                    .iter()
                    .zip(&lambdas[count..])
                    .map(|(c, &l)| c * multiplier(l));
                if req.p.value() <= 2.0 {
                    dropped.map(|x| x * x).sum::<f64>().sqrt()
                } else {
                    dropped.map(|x| x.abs()).sum::<f64>() * std::f64::consts::SQRT_2
                }
            }
        },
    };
    let tolerance = match mode {
        TailMode::Analytic => req.kernel.tail_tolerance(),
        TailMode::Empirical => EMPIRICAL_TAIL_TOLERANCE,
    };

    let sup_refinement = if req.p.is_infinite() {
        match grid.refined() {
            Ok(fine) => {
                let refined = synthesize(&section, &fine)?.max_abs();
                let change = if refined > 0.0 {
                    (refined - value).abs() / refined
                } else {
                    0.0
                };
                if change > SUP_REFINEMENT_TOLERANCE {
                    return Err(Error::Resolution(format!(
                        "grid maximum changes by {:.3}% under refinement",
                        100.0 * change
                    )));
                }
                Some(change)
            }
            Err(_) => None,
        }
    } else {
        None
    };

    Ok(NormEstimate {
        value,
        tail_bar,
        tail_ok: tail_bar <= tolerance,
        empirical_tail,
        sup_refinement,
    })
}

/// Norm for the high-pass kernel `G - Phi_{2^n}(h b_{2^n})`.
pub fn highpass_g_norm(
    v: &SpectralVector,
    n: u32,
    req: &NormRequest,
    grid: &Grid,
) -> Result<NormEstimate> {
    let mut req = req.clone();
    req.variant = NormVariant::HighPass(n);
    g_norm(v, &req, grid)
}

/// Result of a discrepancy evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrepancy {
    pub value: f64,
    /// Mass removed (as a multiple of the reference measure) before evaluation.
    pub mass_shift: f64,
}

/// Total mass within this tolerance is treated as zero.
pub const ZERO_MASS_TOLERANCE: f64 = 1e-10;

/// `sup_x |nu([-pi, x))|` on the circle, with `nu = mu - mu(T) mu*`.
pub fn erdos_turan(mu: &Measure) -> Result<Discrepancy> {
    if mu.q() != 1 {
        return Err(Error::Dimension(mu.q()));
    }
    let mut atoms: Vec<(f64, f64)> = mu
        .atoms()
        .iter()
        .map(|a| (a.location[0], a.weight))
        .collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));

    let density = mu.density().map(|d| density_antiderivative(&d.values));
    let density_mass = density.as_ref().map_or(0.0, |d| d.mass);
    let mass = atoms.iter().map(|a| a.1).sum::<f64>() + density_mass;
    let mass_shift = if mass.abs() > ZERO_MASS_TOLERANCE {
        mass
    } else {
        0.0
    };
    let drift = |x: f64| mass_shift * (x + PI) / TAU;

    let atom_cdf = |x: f64, inclusive: bool| -> f64 {
        atoms
            .iter()
            .take_while(|a| if inclusive { a.0 <= x } else { a.0 < x })
            .map(|a| a.1)
            .sum()
    };
    let mut best: f64 = 0.0;
    for &(y, _) in &atoms {
        let smooth = density.as_ref().map_or(0.0, |d| d.at(y)) - drift(y);
        best = best.max((atom_cdf(y, false) + smooth).abs());
        best = best.max((atom_cdf(y, true) + smooth).abs());
    }
    if let Some(d) = &density {
        let grid = d.grid;
        for (j, value) in d.node_values.iter().enumerate() {
            let x = grid.axis_coordinate(j);
            best = best.max((atom_cdf(x, false) + value - drift(x)).abs());
        }
    }
    Ok(Discrepancy {
        value: best,
        mass_shift,
    })
}

/// `x -> int_{-pi}^x f dmu*` for a grid density, in spectral form.
struct Antiderivative {
    grid: Grid,
    mass: f64,
    /// `C_k / (2 pi i k)` for signed frequencies.
    terms: Vec<(i64, Complex64)>,
    offset: f64,
    node_values: Vec<f64>,
}

impl Antiderivative {
    fn at(&self, x: f64) -> f64 {
        let oscillating: f64 = self
            .terms
            .iter()
            .map(|(k, d)| (d * Complex64::from_polar(1.0, *k as f64 * x)).re)
            .sum();
        self.mass * (x + PI) / TAU + oscillating + self.offset
    }
}

fn density_antiderivative(f: &GridFunction) -> Antiderivative {
    let grid = *f.grid();
    let n = grid.points_per_axis();
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::transform(&mut data, n, 1, FftDirection::Forward);
    let half = (n / 2) as i64;
    let sign = |k: i64| if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let coefficient = |k: i64| data[k.rem_euclid(n as i64) as usize] * (sign(k) / n as f64);
    let mass = coefficient(0).re;
    let mut terms = Vec::with_capacity(n);
    for k in -half..=half {
        if k == 0 {
            continue;
        }
        let mut c = coefficient(k);
        if k.abs() == half {
            // the Nyquist bin is shared by +-N/2
            c *= 0.5;
        }
        terms.push((k, c / Complex64::new(0.0, TAU * k as f64)));
    }
    let offset = -terms.iter().map(|(k, d)| (d * sign(*k)).re).sum::<f64>();

    let mut bins = vec![Complex64::default(); n];
    for (k, d) in &terms {
        bins[k.rem_euclid(n as i64) as usize] += d * sign(*k);
    }
    fft::transform(&mut bins, n, 1, FftDirection::Inverse);
    let node_values = bins
        .iter()
        .enumerate()
        .map(|(j, c)| mass * (grid.axis_coordinate(j) + PI) / TAU + c.re + offset)
        .collect();
    Antiderivative {
        grid,
        mass,
        terms,
        offset,
        node_values,
    }
}

/// Cesàro order used by [`erdos_turan_spectral`].
pub const SPLINE_TERMS: usize = 100_000;
/// Evaluation grid of [`erdos_turan_spectral`].
pub const SPLINE_GRID: usize = 1 << 18;

/// Discrepancy of a zero-mass atomic measure through the Bernoulli spline
/// `sum_k sin(k u) / k`, Cesàro-smoothed at `terms` terms.
///
/// Uses `nu([-pi, x)) = -(1/2pi) sum_j w_j y_j + (1/pi) sum_j w_j S(x - y_j)`.
/// Smoothing makes the result a lower bound; at distance `d` from every jump
/// the error is of order `|nu|(T) / (terms d)`.
pub fn erdos_turan_spectral(mu: &Measure, terms: usize, grid_points: usize) -> Result<f64> {
    if mu.q() != 1 {
        return Err(Error::Dimension(mu.q()));
    }
    if !mu.is_atomic() {
        return Err(Error::Parameter(
            "spectral discrepancy needs an atomic measure".into(),
        ));
    }
    let mass: f64 = mu.atoms().iter().map(|a| a.weight).sum();
    if mass.abs() > ZERO_MASS_TOLERANCE {
        return Err(Error::Parameter(format!(
            "measure has mass {mass}, expected zero"
        )));
    }
    let grid = Grid::new(1, grid_points)?;
    if terms as f64 >= grid.nyquist() {
        return Err(Error::Resolution(format!(
            "{terms} spline terms need more than {grid_points} points"
        )));
    }
    let n = grid_points;
    let mean = -mu
        .atoms()
        .iter()
        .map(|a| a.weight * a.location[0])
        .sum::<f64>()
        / TAU;
    let mut bins = vec![Complex64::default(); n];
    for k in 1..=terms {
        let weight = (1.0 - k as f64 / (terms + 1) as f64) / (PI * k as f64);
        let a: Complex64 = mu
            .atoms()
            .iter()
            .map(|atom| atom.weight * Complex64::from_polar(1.0, -(k as f64) * atom.location[0]))
            .sum();
        // Im(e^{ikx} A) = (e^{ikx} A - e^{-ikx} conj A) / 2i, and conj(A / 2i) = -conj(A) / 2i
        let plus = a * weight / Complex64::new(0.0, 2.0);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        bins[k] += plus * sign;
        bins[n - k] += plus.conj() * sign;
    }
    fft::transform(&mut bins, n, 1, FftDirection::Inverse);
    Ok(bins
        .iter()
        .fold(0.0, |m: f64, c| m.max((mean + c.re).abs())))
}

/// `int_T |int F_N(x - t) d mu(t)| dx` with
/// `F_N(t) = (1/(N+1)) sum_{|j| <= N} (1 - |j|/N) e^{ijt}`, for the spectrum of `mu`.
pub fn fejer_seminorm_spectral(v: &SpectralVector, order: usize, grid: &Grid) -> Result<f64> {
    if v.system().q() != 1 || grid.q() != 1 {
        return Err(Error::Dimension(v.system().q().max(grid.q())));
    }
    if order == 0 {
        return Err(Error::Parameter("Fejér order must be positive".into()));
    }
    let top = order as f64;
    if top >= grid.nyquist() {
        return Err(Error::Resolution(format!(
            "Fejér order {order} is not below the grid Nyquist limit {}",
            grid.nyquist()
        )));
    }
    if v.tail() != Tail::Zero && v.lambda_cut() <= top {
        return Err(Error::BandCoverage {
            needed: top,
            available: v.lambda_cut(),
        });
    }
    let system = v.system();
    let count = system.count_at_most(top).min(v.len());
    let coefficients = v.coefficients()[..count]
        .iter()
        .zip(system.lambdas())
        .map(|(c, &l)| c * (1.0 - l / top) / (top + 1.0))
        .collect();
    let filtered = SpectralVector::new(system.clone(), coefficients, 0.0, Tail::Zero)?;
    Ok(TAU * synthesize(&filtered, grid)?.lp_norm(Exponent::ONE))
}

/// [`fejer_seminorm_spectral`] applied to a measure.
pub fn fejer_seminorm(mu: &Measure, order: usize, grid: &Grid) -> Result<f64> {
    if mu.q() != 1 {
        return Err(Error::Dimension(mu.q()));
    }
    let cut = order as f64 + 0.5;
    let system = Arc::new(build_torus_system(1, cut.max(1.0))?);
    let v = fourier_coefficients(mu, &system, cut)?;
    fejer_seminorm_spectral(&v, order, grid)
}

/// `||f - sigma_{2^n}(h; f)||_p`, an upper proxy for the best approximation
/// error from `Pi_{2^n}`.
pub fn near_best_degree_error(f: &GridFunction, n: u32, p: Exponent) -> Result<f64> {
    let grid = *f.grid();
    let cut = 2f64.powi(n as i32);
    if cut > grid.nyquist() {
        return Err(Error::Resolution(format!(
            "degree 2^{n} exceeds the grid Nyquist limit {}",
            grid.nyquist()
        )));
    }
    let size = grid.points_per_axis();
    let q = grid.q();
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::transform(&mut data, size, q, FftDirection::Forward);
    for (bin, c) in data.iter_mut().enumerate() {
        let k = fft::frequency_of(bin, size, q);
        let lambda = (k.iter().map(|&v| (v * v) as f64).sum::<f64>()).sqrt();
        *c *= (1.0 - lowpass_h(lambda / cut)) / grid.len() as f64;
    }
    fft::transform(&mut data, size, q, FftDirection::Inverse);
    let values: Vec<f64> = data.iter().map(|c| c.re).collect();
    Ok(lp_norm_of(&values, p))
}

/// Exact `E_{lambda,2}(f)`: the L2 norm of the coefficients with `|k| >= lambda`.
pub fn best_l2_error(f: &GridFunction, lambda: f64) -> f64 {
    let grid = *f.grid();
    let size = grid.points_per_axis();
    let q = grid.q();
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::transform(&mut data, size, q, FftDirection::Forward);
    let total = grid.len() as f64;
    data.iter()
        .enumerate()
        .filter(|(bin, _)| {
            let k = fft::frequency_of(*bin, size, q);
            (k.iter().map(|&v| (v * v) as f64).sum::<f64>()).sqrt() >= lambda
        })
        .map(|(_, c)| c.norm_sqr() / (total * total))
        .sum::<f64>()
        .sqrt()
}
