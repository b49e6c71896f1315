//! The recuperation operator: low-pass filtering of noisy coefficient data.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{fourier_coefficients, synthesize, GridFunction, Measure};
use crate::spectral::{lowpass_h, SpectralVector, Tail};
use crate::system::{Grid, SystemDescriptor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    None,
    Gaussian,
    /// Uniform on `[-scale, scale]`.
    Uniform,
}

/// Seeded generator of the perturbations `eps_k`.
///
/// Draws are made in basis order, so the perturbations seen at level `n` are a
/// prefix of those seen at level `n + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    #[serde(default)]
    pub scale: f64,
    #[serde(default)]
    pub seed: u64,
    /// Independent stream within the seed; trials use their index here.
    #[serde(skip)]
    pub stream: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::none()
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        NoiseModel {
            kind: NoiseKind::None,
            scale: 0.0,
            seed: 0,
            stream: 0,
        }
    }

    pub fn gaussian(scale: f64, seed: u64) -> Self {
        NoiseModel {
            kind: NoiseKind::Gaussian,
            scale,
            seed,
            stream: 0,
        }
    }

    pub fn uniform(scale: f64, seed: u64) -> Self {
        NoiseModel {
            kind: NoiseKind::Uniform,
            scale,
            seed,
            stream: 0,
        }
    }

    /// Model for trial `trial` of a run seeded with `seed`.
    pub fn for_trial(mut self, trial: u64) -> Self {
        self.stream = trial;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale >= 0.0 && self.scale.is_finite()) {
            return Err(Error::Parameter(format!(
                "noise scale must be finite and >= 0, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    pub fn is_silent(&self) -> bool {
        self.kind == NoiseKind::None || self.scale == 0.0
    }

    /// The first `count` perturbations, in basis order.
    pub fn draw(&self, count: usize) -> Vec<f64> {
        if self.kind == NoiseKind::None {
            return vec![0.0; count];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        let s = self.scale;
        match self.kind {
            NoiseKind::Gaussian => (0..count)
                .map(|_| {
                    s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
                })
                .collect(),
            NoiseKind::Uniform => (0..count)
                .map(|_| s * rng.random_range(-1.0..=1.0))
                .collect(),
            NoiseKind::None => unreachable!(),
        }
    }
}

/// `nu_n`, carried by its spectrum.
#[derive(Debug, Clone)]
pub struct RecoveredMeasure {
    pub spectral: SpectralVector,
    pub level_n: u32,
    pub density_view: GridFunction,
}

/// `2^n` as a float.
pub fn band(n: u32) -> f64 {
    2f64.powi(n as i32)
}

fn check_level(n: u32, grid: &Grid) -> Result<()> {
    if n > 40 || !(grid.nyquist() > band(n)) {
        return Err(Error::Resolution(format!(
            "level n={n} needs a grid Nyquist limit above {}, grid has {}",
            band(n),
            grid.nyquist()
        )));
    }
    Ok(())
}

/// `nu_n` with spectrum `h(lambda_k / 2^n) (mu-hat(k) + eps_k)`.
pub fn recuperate(
    mu: &Measure,
    n: u32,
    noise: &NoiseModel,
    system: &Arc<SystemDescriptor>,
    grid: &Grid,
) -> Result<RecoveredMeasure> {
    noise.validate()?;
    check_level(n, grid)?;
    let count = system.count_below(band(n));
    recuperate_with_perturbation(mu, n, &noise.draw(count), system, grid)
}

/// As [`recuperate`], with explicit perturbations in basis order. Missing
/// entries count as zero.
pub fn recuperate_with_perturbation(
    mu: &Measure,
    n: u32,
    eps: &[f64],
    system: &Arc<SystemDescriptor>,
    grid: &Grid,
) -> Result<RecoveredMeasure> {
    check_level(n, grid)?;
    let data = fourier_coefficients(mu, system, band(n))?;
    let spectral = lowpass_data(&data, n, eps)?;
    let density_view = synthesize(&spectral, grid)?;
    Ok(RecoveredMeasure {
        spectral,
        level_n: n,
        density_view,
    })
}

/// Apply `h(lambda / 2^n)` to `mu_hat + eps`, where `mu_hat` holds at least
/// every coefficient with `lambda < 2^n`.
pub fn lowpass_data(mu_hat: &SpectralVector, n: u32, eps: &[f64]) -> Result<SpectralVector> {
    let system = mu_hat.system();
    let cut = band(n);
    let count = system.count_below(cut);
    if mu_hat.len() < count && mu_hat.tail() != Tail::Zero {
        return Err(Error::BandCoverage {
            needed: cut,
            available: mu_hat.lambda_cut(),
        });
    }
    if eps.len() > count {
        return Err(Error::Parameter(format!(
            "{} perturbations given for {count} coefficients below 2^{n}",
            eps.len()
        )));
    }
    let data = mu_hat.padded_prefix(count)?;
    let coefficients = data
        .iter()
        .zip(system.lambdas())
        .enumerate()
        .map(|(i, (c, &l))| lowpass_h(l / cut) * (c + eps.get(i).copied().unwrap_or(0.0)))
        .collect();
    SpectralVector::new(system.clone(), coefficients, cut, Tail::Zero)
}

/// `P_n = sum_{lambda_k < 2^n} eps_k phi_k` on the grid.
pub fn noise_field(
    noise: &NoiseModel,
    n: u32,
    system: &Arc<SystemDescriptor>,
    grid: &Grid,
) -> Result<GridFunction> {
    noise.validate()?;
    check_level(n, grid)?;
    let count = system.count_below(band(n));
    perturbation_field(&noise.draw(count), n, system, grid)
}

/// `P_n` for explicit perturbations.
pub fn perturbation_field(
    eps: &[f64],
    n: u32,
    system: &Arc<SystemDescriptor>,
    grid: &Grid,
) -> Result<GridFunction> {
    check_level(n, grid)?;
    let count = system.count_below(band(n));
    let mut coefficients = eps.to_vec();
    coefficients.resize(count, 0.0);
    let v = SpectralVector::new(system.clone(), coefficients, band(n), Tail::Zero)?;
    synthesize(&v, grid)
}

/// `||P_n||_1` on the grid.
pub fn noise_field_l1(
    noise: &NoiseModel,
    n: u32,
    system: &Arc<SystemDescriptor>,
    grid: &Grid,
) -> Result<f64> {
    if noise.is_silent() {
        check_level(n, grid)?;
        return Ok(0.0);
    }
    Ok(noise_field(noise, n, system, grid)?.lp_norm(crate::measures::Exponent::ONE))
}
