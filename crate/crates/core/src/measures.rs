//! Finite signed measures on the torus: an atomic part plus an absolutely
//! continuous part sampled on a grid, with their Fourier coefficients and the
//! synthesis of coefficient sequences back to grid functions.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fft;
use crate::spectral::{complex_terms, system_covers_below, SpectralVector, Tail};
use crate::system::{build_torus_system, BasisIndex, BasisKind, Grid, SystemDescriptor};

/// Exponent `p` of an L^p norm, `1 <= p <= inf`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Exponent(f64);

impl Exponent {
    pub const ONE: Exponent = Exponent(1.0);
    pub const TWO: Exponent = Exponent(2.0);
    pub const INFINITY: Exponent = Exponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p >= 1.0 {
            Ok(Exponent(p))
        } else {
            Err(Error::Parameter(format!(
                "exponent p must satisfy 1 <= p <= inf, got {p}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `p' = p / (p - 1)`, with `1' = inf` and `inf' = 1`.
    pub fn conjugate(self) -> Exponent {
        if self.0 == 1.0 {
            Exponent::INFINITY
        } else if self.0.is_infinite() {
            Exponent::ONE
        } else {
            Exponent(self.0 / (self.0 - 1.0))
        }
    }

    /// `1/p'`, which is `0` for `p = 1`.
    pub fn conjugate_reciprocal(self) -> f64 {
        1.0 - 1.0 / self.0
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::INFINITY),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::Parameter(format!("cannot parse exponent {s:?}")))?;
                if p.is_nan() {
                    return Err(Error::Parameter("exponent is NaN".into()));
                }
                Exponent::new(p)
            }
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(p) => Exponent::new(p),
            Raw::Text(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Real values over the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Parameter(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        GridFunction {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = grid.nodes().map(|x| f(&x)).collect();
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Quadrature of the function against the normalized measure.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Grid L^p norm with respect to the normalized measure.
    pub fn lp_norm(&self, p: Exponent) -> f64 {
        lp_norm_of(&self.values, p)
    }
}

pub(crate) fn lp_norm_of(values: &[f64], p: Exponent) -> f64 {
    let n = values.len() as f64;
    if p.is_infinite() {
        values.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else if p.value() == 1.0 {
        values.iter().map(|v| v.abs()).sum::<f64>() / n
    } else if p.value() == 2.0 {
        (values.iter().map(|v| v * v).sum::<f64>() / n).sqrt()
    } else {
        let pv = p.value();
        (values.iter().map(|v| v.abs().powf(pv)).sum::<f64>() / n).powf(1.0 / pv)
    }
}

/// Order of the raised-cosine bump `(1 + cos x)^m`.
pub const BUMP_ORDER: u32 = 8;

/// Named density generators usable in experiment configs.
#[derive(Debug, Clone, PartialEq)]
pub enum DensitySpec {
    /// `f = 1`.
    Uniform,
    /// Product over axes of `(1 + cos x_i)^8`, normalized to unit mass.
    Bump,
    /// `f = sum_m 2^(-m r) sqrt(2) cos(2^m x_1)` over `2^m` below the grid limit.
    Lacunary { r: f64 },
    /// `1` plus seeded Gaussian coefficients on every index with
    /// `0 < lambda < lambda_max`, scaled by `1/sqrt(count)`.
    BandLimited { seed: u64, lambda_max: f64 },
}

impl fmt::Display for DensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensitySpec::Uniform => write!(f, "uniform"),
            DensitySpec::Bump => write!(f, "bump"),
            DensitySpec::Lacunary { r } => write!(f, "lacunary({r})"),
            DensitySpec::BandLimited { seed, lambda_max } => {
                write!(f, "bandlimited({seed}, {lambda_max})")
            }
        }
    }
}

impl FromStr for DensitySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("unknown density generator {s:?}"));
        let (name, args) = match s.find('(') {
            Some(open) => {
                let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
                (s[..open].trim(), Some(inner))
            }
            None => (s, None),
        };
        let args: Vec<&str> = args
            .map(|a| a.split(',').map(str::trim).collect())
            .unwrap_or_default();
        let number = |text: &str| -> Result<f64> {
            let v: f64 = text.parse().map_err(|_| bad())?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad())
            }
        };
        match (name, args.as_slice()) {
            ("uniform", []) => Ok(DensitySpec::Uniform),
            ("bump", []) => Ok(DensitySpec::Bump),
            ("lacunary", [r]) => {
                let r = number(r)?;
                if r < 0.0 {
                    return Err(Error::Config(format!(
                        "lacunary order must be >= 0, got {r}"
                    )));
                }
                Ok(DensitySpec::Lacunary { r })
            }
            ("bandlimited", [seed, lmax]) => {
                let seed: u64 = seed.parse().map_err(|_| bad())?;
                let lambda_max = number(lmax)?;
                if !(lambda_max > 0.0) {
                    return Err(Error::Config(format!(
                        "bandlimited lambda_max must be > 0, got {lambda_max}"
                    )));
                }
                Ok(DensitySpec::BandLimited { seed, lambda_max })
            }
            _ => Err(bad()),
        }
    }
}

impl DensitySpec {
    /// Exact real-basis coefficients of the density, limited to
    /// `lambda < lambda_limit`.
    pub fn exact_terms(&self, q: usize, lambda_limit: f64) -> Result<Vec<(BasisIndex, f64)>> {
        match self {
            DensitySpec::Uniform => Ok(vec![(BasisIndex::CONSTANT, 1.0)]),
            DensitySpec::Bump => {
                let m = BUMP_ORDER as i32;
                let central = binomial(2 * BUMP_ORDER, BUMP_ORDER);
                let axis = |j: i32| binomial(2 * BUMP_ORDER, (m + j) as u32) / central;
                let system = build_torus_system(q, (m as f64) * (q as f64).sqrt())?;
                let mut out = Vec::new();
                for index in system.basis() {
                    if index.lambda() >= lambda_limit || index.kind == BasisKind::Sine {
                        continue;
                    }
                    if index.k[..q].iter().any(|v| v.abs() > m) {
                        continue;
                    }
                    let c: f64 = index.k[..q].iter().map(|&v| axis(v)).product();
                    let value = if index.kind == BasisKind::Constant {
                        c
                    } else {
                        SQRT_2 * c
                    };
                    out.push((*index, value));
                }
                Ok(out)
            }
            DensitySpec::Lacunary { r } => {
                let mut out = Vec::new();
                let mut m = 0;
                while ((1u64 << m) as f64) < lambda_limit && m < 30 {
                    let mut k = [0i32; 3];
                    k[0] = 1 << m;
                    out.push((BasisIndex::cosine(&k[..q]), 2f64.powf(-(m as f64) * r)));
                    m += 1;
                }
                Ok(out)
            }
            DensitySpec::BandLimited { seed, lambda_max } => {
                let mut out = vec![(BasisIndex::CONSTANT, 1.0)];
                if *lambda_max <= 1.0 {
                    return Ok(out);
                }
                let system = build_torus_system(q, *lambda_max)?;
                let count = system.count_below(*lambda_max) - 1;
                let scale = 1.0 / (count.max(1) as f64).sqrt();
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                for (index, &l) in system.basis()[1..=count].iter().zip(&system.lambdas()[1..]) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    if l < lambda_limit {
                        out.push((*index, scale * z));
                    }
                }
                Ok(out)
            }
        }
    }

    /// Largest eigenvalue with a nonzero coefficient when sampled on `grid`.
    pub fn max_lambda(&self, q: usize, grid: &Grid) -> Result<f64> {
        Ok(self
            .exact_terms(q, grid.nyquist())?
            .iter()
            .map(|(i, _)| i.lambda())
            .fold(0.0, f64::max))
    }

    /// Sample the density on `grid`.
    pub fn sample(&self, grid: &Grid) -> Result<GridFunction> {
        let q = grid.q();
        let terms = self.exact_terms(q, grid.nyquist())?;
        let reach = terms.iter().map(|(i, _)| i.lambda()).fold(1.0, f64::max);
        let system = Arc::new(build_torus_system(q, reach)?);
        let v = SpectralVector::from_entries(system, &terms)?;
        synthesize(&v, grid)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// A point mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub location: Vec<f64>,
    pub weight: f64,
}

/// Absolutely continuous part: Radon-Nikodym derivative on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    pub values: GridFunction,
    pub generator: Option<DensitySpec>,
}

/// `sum_j w_j delta_{x_j} + f d mu*`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    q: usize,
    atoms: Vec<Atom>,
    density: Option<Density>,
}

/// Representative of `x` in `[-pi, pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y >= PI {
        -PI
    } else {
        y
    }
}

/// Wrap-around distance `min_n |x - y + 2 pi n|`.
pub fn torus_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = (a - b).rem_euclid(TAU);
            let d = d.min(TAU - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

impl Measure {
    pub fn zero(q: usize) -> Result<Self> {
        if !(1..=3).contains(&q) {
            return Err(Error::Dimension(q));
        }
        Ok(Measure {
            q,
            atoms: Vec::new(),
            density: None,
        })
    }

    /// Atomic measure. Locations are wrapped into `[-pi, pi)^q`; repeated
    /// locations are rejected.
    pub fn atomic(q: usize, atoms: Vec<Atom>) -> Result<Self> {
        let mut mu = Measure::zero(q)?;
        for atom in atoms {
            mu.push_atom(atom, false)?;
        }
        Ok(mu)
    }

    pub fn dirac(point: &[f64]) -> Result<Self> {
        Measure::atomic(
            point.len(),
            vec![Atom {
                location: point.to_vec(),
                weight: 1.0,
            }],
        )
    }

    /// `mu*` sampled on `grid`.
    pub fn reference(grid: &Grid) -> Self {
        Measure {
            q: grid.q(),
            atoms: Vec::new(),
            density: Some(Density {
                values: GridFunction::constant(*grid, 1.0),
                generator: Some(DensitySpec::Uniform),
            }),
        }
    }

    pub fn from_generator(spec: DensitySpec, grid: &Grid) -> Result<Self> {
        let values = spec.sample(grid)?;
        Ok(Measure {
            q: grid.q(),
            atoms: Vec::new(),
            density: Some(Density {
                values,
                generator: Some(spec),
            }),
        })
    }

    pub fn with_density(mut self, values: GridFunction) -> Result<Self> {
        if values.grid().q() != self.q {
            return Err(Error::Parameter(
                "density grid dimension does not match".into(),
            ));
        }
        if values.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("density values must be finite".into()));
        }
        self.density = Some(Density {
            values,
            generator: None,
        });
        Ok(self)
    }

    fn push_atom(&mut self, atom: Atom, merge: bool) -> Result<()> {
        if atom.location.len() != self.q {
            return Err(Error::Parameter(format!(
                "atom has {} coordinates, expected {}",
                atom.location.len(),
                self.q
            )));
        }
        if !atom.weight.is_finite() || atom.location.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter(
                "atom location and weight must be finite".into(),
            ));
        }
        let location: Vec<f64> = atom.location.iter().map(|&c| wrap_angle(c)).collect();
        if let Some(existing) = self.atoms.iter_mut().find(|a| a.location == location) {
            if merge {
                existing.weight += atom.weight;
                return Ok(());
            }
            return Err(Error::Parameter(format!(
                "repeated atom location {location:?}"
            )));
        }
        self.atoms.push(Atom {
            location,
            weight: atom.weight,
        });
        Ok(())
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    pub fn is_atomic(&self) -> bool {
        self.density.is_none()
    }

    /// `mu(T^q)`.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum::<f64>()
            + self.density.as_ref().map_or(0.0, |d| d.values.mean())
    }

    pub fn scaled(&self, factor: f64) -> Measure {
        Measure {
            q: self.q,
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    location: a.location.clone(),
                    weight: a.weight * factor,
                })
                .collect(),
            density: self.density.as_ref().map(|d| Density {
                values: GridFunction {
                    grid: d.values.grid,
                    values: d.values.values.iter().map(|v| v * factor).collect(),
                },
                generator: None,
            }),
        }
    }

    /// Sum of two measures; atoms at the same location are merged.
    pub fn plus(&self, other: &Measure) -> Result<Measure> {
        if self.q != other.q {
            return Err(Error::Parameter("measures live on different tori".into()));
        }
        let mut out = Measure {
            q: self.q,
            atoms: self.atoms.clone(),
            density: None,
        };
        for atom in &other.atoms {
            out.push_atom(atom.clone(), true)?;
        }
        out.density = match (&self.density, &other.density) {
            (None, None) => None,
            (Some(d), None) | (None, Some(d)) => Some(d.clone()),
            (Some(a), Some(b)) => {
                if a.values.grid != b.values.grid {
                    return Err(Error::Parameter("densities live on different grids".into()));
                }
                let values = a
                    .values
                    .values
                    .iter()
                    .zip(&b.values.values)
                    .map(|(x, y)| x + y)
                    .collect();
                Some(Density {
                    values: GridFunction::new(a.values.grid, values)?,
                    generator: None,
                })
            }
        };
        Ok(out)
    }

    /// Translate the atomic part by `shift`.
    pub fn shifted_atoms(&self, shift: &[f64]) -> Result<Measure> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                location: a.location.iter().zip(shift).map(|(x, s)| x + s).collect(),
                weight: a.weight,
            })
            .collect();
        let mut out = Measure::atomic(self.q, atoms)?;
        out.density = self.density.clone();
        Ok(out)
    }
}

/// `sum |w_j| + int |f| d mu*`.
pub fn total_variation(mu: &Measure) -> f64 {
    mu.atoms.iter().map(|a| a.weight.abs()).sum::<f64>()
        + mu.density
            .as_ref()
            .map_or(0.0, |d| d.values.lp_norm(Exponent::ONE))
}

/// Least pairwise torus distance between atoms.
pub fn minimal_separation(mu: &Measure) -> Result<f64> {
    if mu.atoms.len() < 2 {
        return Err(Error::Undefined(format!(
            "minimal separation needs at least two atoms, measure has {}",
            mu.atoms.len()
        )));
    }
    let mut best = f64::INFINITY;
    for (i, a) in mu.atoms.iter().enumerate() {
        for b in &mu.atoms[i + 1..] {
            best = best.min(torus_distance(&a.location, &b.location));
        }
    }
    Ok(best)
}

/// `mu-hat(k) = int phi_k d mu` for every basis index with `lambda < lambda_cut`.
///
/// Atoms are evaluated exactly; the density part uses the rectangle rule on
/// its grid, which is exact for band-limited densities below the Nyquist limit.
pub fn fourier_coefficients(
    mu: &Measure,
    system: &Arc<SystemDescriptor>,
    lambda_cut: f64,
) -> Result<SpectralVector> {
    if system.q() != mu.q {
        return Err(Error::Parameter(
            "measure and system dimensions differ".into(),
        ));
    }
    if !system_covers_below(system, lambda_cut) {
        return Err(Error::BandCoverage {
            needed: lambda_cut,
            available: system.lambda_max(),
        });
    }
    let len = system.count_below(lambda_cut);
    let basis = &system.basis()[..len];
    let mut coefficients = vec![0.0; len];

    for atom in &mu.atoms {
        let mut pos = 0;
        while pos < len {
            let index = &basis[pos];
            match index.kind {
                BasisKind::Constant => {
                    coefficients[pos] += atom.weight;
                    pos += 1;
                }
                _ => {
                    let (s, c) = index.phase(&atom.location).sin_cos();
                    let pair_sine = pos + 1 < len && basis[pos + 1].k == index.k;
                    if index.kind == BasisKind::Cosine {
                        coefficients[pos] += atom.weight * SQRT_2 * c;
                        if pair_sine {
                            coefficients[pos + 1] += atom.weight * SQRT_2 * s;
                            pos += 1;
                        }
                    } else {
                        coefficients[pos] += atom.weight * SQRT_2 * s;
                    }
                    pos += 1;
                }
            }
        }
    }

    let mut tail = Tail::Bounded(total_variation(mu));
    if let Some(density) = &mu.density {
        let grid = density.values.grid;
        if lambda_cut > grid.nyquist() {
            return Err(Error::Resolution(format!(
                "coefficients below {lambda_cut} requested from a density on a grid with Nyquist limit {}",
                grid.nyquist()
            )));
        }
        let n = grid.points_per_axis();
        let mut data: Vec<Complex64> = density
            .values
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fft::transform(&mut data, n, grid.q(), FftDirection::Forward);
        let w = grid.quadrature_weight();
        for (slot, index) in coefficients.iter_mut().zip(basis) {
            let sign = if index.k.iter().sum::<i32>() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            let c = data[fft::bin_of(&index.k[..grid.q()], n)] * (w * sign);
            *slot += match index.kind {
                BasisKind::Constant => c.re,
                BasisKind::Cosine => SQRT_2 * c.re,
                BasisKind::Sine => -SQRT_2 * c.im,
            };
        }
        let band_limited = match &density.generator {
            Some(spec) => spec.max_lambda(grid.q(), &grid)? < lambda_cut,
            None => false,
        };
        if band_limited && mu.atoms.is_empty() {
            tail = Tail::Zero;
        }
    } else if mu.atoms.is_empty() {
        tail = Tail::Zero;
    }

    SpectralVector::new(system.clone(), coefficients, lambda_cut, tail)
}

/// Evaluate `sum_k c_k phi_k` at every grid node via an inverse FFT.
pub fn synthesize(v: &SpectralVector, grid: &Grid) -> Result<GridFunction> {
    if v.system().q() != grid.q() {
        return Err(Error::Parameter(
            "spectral vector and grid dimensions differ".into(),
        ));
    }
    let top = v.max_active_lambda();
    if top >= grid.nyquist() {
        return Err(Error::Resolution(format!(
            "frequency {top} is not below the grid Nyquist limit {}",
            grid.nyquist()
        )));
    }
    let n = grid.points_per_axis();
    let q = grid.q();
    let mut data = vec![Complex64::default(); grid.len()];
    for (k, c) in complex_terms(v) {
        let sign = if k.iter().sum::<i32>() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        data[fft::bin_of(&k[..q], n)] += c * sign;
    }
    fft::transform(&mut data, n, q, FftDirection::Inverse);
    GridFunction::new(*grid, data.into_iter().map(|c| c.re).collect())
}

/// Evaluate `sum_k c_k phi_k` at arbitrary points by direct summation.
pub fn synthesize_at(v: &SpectralVector, points: &[Vec<f64>]) -> Vec<f64> {
    let basis = v.system().basis();
    points
        .iter()
        .map(|x| {
            v.coefficients()
                .iter()
                .zip(basis)
                .filter(|(c, _)| **c != 0.0)
                .map(|(c, index)| c * index.eval(x))
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(q: usize, lmax: f64) -> Arc<SystemDescriptor> {
        Arc::new(build_torus_system(q, lmax).unwrap())
    }

    #[test]
    fn reference_measure_coefficients() {
        let grid = Grid::new(1, 64).unwrap();
        let s = sys(1, 20.0);
        let v = fourier_coefficients(&Measure::reference(&grid), &s, 20.0).unwrap();
        assert!((v.coefficients()[0] - 1.0).abs() < 1e-12);
        assert!(v.coefficients()[1..].iter().all(|c| c.abs() < 1e-12));
        assert_eq!(v.tail(), Tail::Zero);
    }

    #[test]
    fn dirac_coefficients() {
        let s = sys(1, 10.0);
        let v = fourier_coefficients(&Measure::dirac(&[0.0]).unwrap(), &s, 10.5).unwrap();
        for (index, c) in s.basis().iter().zip(v.coefficients()) {
            let expected = match index.kind {
                BasisKind::Constant => 1.0,
                BasisKind::Cosine => SQRT_2,
                BasisKind::Sine => 0.0,
            };
            assert!((c - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn antisymmetric_pair_coefficients() {
        let s = sys(1, 4.0);
        let mu = Measure::atomic(
            1,
            vec![
                Atom {
                    location: vec![PI / 2.0],
                    weight: 0.5,
                },
                Atom {
                    location: vec![-PI / 2.0],
                    weight: -0.5,
                },
            ],
        )
        .unwrap();
        let v = fourier_coefficients(&mu, &s, 4.5).unwrap();
        let sin1 = v.coefficient(&BasisIndex::sine(&[1])).unwrap();
        // oracle: 0.5 sqrt2 sin(pi/2) - 0.5 sqrt2 sin(-pi/2)
        let oracle = 0.5 * SQRT_2 * (PI / 2.0).sin() - 0.5 * SQRT_2 * (-PI / 2.0).sin();
        assert!((sin1 - oracle).abs() < 1e-15);
        assert!((sin1 - SQRT_2).abs() < 1e-15);
        for k in 1..=4 {
            assert!(v.coefficient(&BasisIndex::cosine(&[k])).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn resolution_error_for_density() {
        let grid = Grid::new(1, 16).unwrap();
        let s = sys(1, 20.0);
        let err = fourier_coefficients(&Measure::reference(&grid), &s, 12.0).unwrap_err();
        assert!(matches!(err, Error::Resolution(_)));
    }

    #[test]
    fn synthesize_constant_and_truncated_delta() {
        let grid = Grid::new(1, 32).unwrap();
        let s = sys(1, 4.0);
        let one = SpectralVector::from_entries(s.clone(), &[(BasisIndex::CONSTANT, 1.0)]).unwrap();
        let f = synthesize(&one, &grid).unwrap();
        assert!(f.values().iter().all(|v| (v - 1.0).abs() < 1e-14));

        let v = fourier_coefficients(&Measure::dirac(&[0.0]).unwrap(), &s, 2.0).unwrap();
        let f = synthesize(&v, &grid).unwrap();
        for (x, val) in grid.nodes().zip(f.values()) {
            assert!((val - (1.0 + 2.0 * x[0].cos())).abs() < 1e-13);
        }
    }

    #[test]
    fn synthesis_round_trip_2d() {
        let grid = Grid::new(2, 16).unwrap();
        let s = sys(2, 7.0);
        let spec = DensitySpec::BandLimited {
            seed: 9,
            lambda_max: 7.0,
        };
        let terms = spec.exact_terms(2, 8.0).unwrap();
        let v = SpectralVector::from_entries(s.clone(), &terms).unwrap();
        let f = synthesize(&v, &grid).unwrap();
        let mu = Measure::zero(2).unwrap().with_density(f).unwrap();
        let back = fourier_coefficients(&mu, &s, 7.0).unwrap();
        assert!(back.max_abs_diff(&v) < 1e-12);
    }

    #[test]
    fn synthesis_rejects_unresolved() {
        let grid = Grid::new(1, 8).unwrap();
        let s = sys(1, 6.0);
        let v = SpectralVector::from_entries(s, &[(BasisIndex::cosine(&[4]), 1.0)]).unwrap();
        assert!(matches!(synthesize(&v, &grid), Err(Error::Resolution(_))));
    }

    #[test]
    fn total_variation_examples() {
        assert_eq!(total_variation(&Measure::dirac(&[0.0]).unwrap()), 1.0);
        let pair = Measure::atomic(
            1,
            vec![
                Atom {
                    location: vec![PI / 2.0],
                    weight: 0.5,
                },
                Atom {
                    location: vec![-PI / 2.0],
                    weight: -0.5,
                },
            ],
        )
        .unwrap();
        assert_eq!(total_variation(&pair), 1.0);
        let grid = Grid::new(1, 32).unwrap();
        let mixed = Measure::reference(&grid)
            .plus(
                &Measure::atomic(
                    1,
                    vec![Atom {
                        location: vec![0.3],
                        weight: -0.25,
                    }],
                )
                .unwrap(),
            )
            .unwrap();
        assert!((total_variation(&mixed) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn separation_examples() {
        let two = |a: f64, b: f64| {
            Measure::atomic(
                1,
                vec![
                    Atom {
                        location: vec![a],
                        weight: 1.0,
                    },
                    Atom {
                        location: vec![b],
                        weight: -1.0,
                    },
                ],
            )
            .unwrap()
        };
        assert!((minimal_separation(&two(0.0, PI)).unwrap() - PI).abs() < 1e-15);
        assert!((minimal_separation(&two(-PI + 0.1, PI - 0.1)).unwrap() - 0.2).abs() < 1e-12);
        let m = 9;
        let lattice: Vec<Atom> = (0..=m)
            .map(|j| Atom {
                location: vec![-PI + TAU * j as f64 / (m + 1) as f64],
                weight: 1.0,
            })
            .collect();
        let mu = Measure::atomic(1, lattice).unwrap();
        assert!((minimal_separation(&mu).unwrap() - TAU / (m + 1) as f64).abs() < 1e-12);
        assert!(matches!(
            minimal_separation(&Measure::dirac(&[0.0]).unwrap()),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn wrap_and_duplicates() {
        assert_eq!(wrap_angle(PI), -PI);
        assert!((wrap_angle(3.0 * PI + 0.5) - (-PI + 0.5)).abs() < 1e-12);
        let dup = Measure::atomic(
            1,
            vec![
                Atom {
                    location: vec![0.5],
                    weight: 1.0,
                },
                Atom {
                    location: vec![0.5 + TAU],
                    weight: 1.0,
                },
            ],
        );
        assert!(dup.is_err());
    }

    #[test]
    fn generators_parse_and_normalize() {
        let grid = Grid::new(2, 32).unwrap();
        for text in ["uniform", "bump", "lacunary(0.5)", "bandlimited(3, 4.5)"] {
            let spec: DensitySpec = text.parse().unwrap();
            assert_eq!(spec.to_string().parse::<DensitySpec>().unwrap(), spec);
            let f = spec.sample(&grid).unwrap();
            let expected_mass = match spec {
                DensitySpec::Lacunary { .. } => 0.0,
                _ => 1.0,
            };
            assert!((f.mean() - expected_mass).abs() < 1e-12, "{text}");
        }
        let bump = DensitySpec::Bump.sample(&grid).unwrap();
        assert!(bump.values().iter().all(|&v| v >= -1e-12));
        for bad in [
            "",
            "lacunary",
            "lacunary(-1)",
            "bandlimited(1)",
            "foo(2)",
            "bump(1)",
        ] {
            assert!(bad.parse::<DensitySpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn exponent_parsing() {
        assert!("inf".parse::<Exponent>().unwrap().is_infinite());
        assert_eq!("2".parse::<Exponent>().unwrap().value(), 2.0);
        assert!("0.5".parse::<Exponent>().is_err());
        assert!("nan".parse::<Exponent>().is_err());
        assert!(Exponent::ONE.conjugate().is_infinite());
        assert_eq!(Exponent::INFINITY.conjugate(), Exponent::ONE);
        assert_eq!(Exponent::TWO.conjugate().value(), 2.0);
        let p: Exponent = serde_json::from_str("\"inf\"").unwrap();
        assert!(p.is_infinite());
        let p: Exponent = serde_json::from_str("1.5").unwrap();
        assert_eq!(p.value(), 1.5);
    }

    #[test]
    fn lp_monotone_in_p() {
        let grid = Grid::new(1, 64).unwrap();
        let f = GridFunction::from_fn(grid, |x| (3.0 * x[0]).sin() + 0.2);
        let l1 = f.lp_norm(Exponent::ONE);
        let l2 = f.lp_norm(Exponent::TWO);
        let l3 = f.lp_norm(Exponent::new(3.0).unwrap());
        let linf = f.lp_norm(Exponent::INFINITY);
        assert!(l1 <= l2 && l2 <= l3 && l3 <= linf);
    }
}
