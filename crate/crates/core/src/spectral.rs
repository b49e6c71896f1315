//! Spectral multipliers: the smooth low-pass cutoff, its dyadic band-pass
//! companion, masks of type beta, and the kernels built from them.
//!
//! Everything here acts on coefficient sequences. Compositions of operators are
//! products of multipliers, never spatial integrals.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measures::{synthesize, GridFunction};
use crate::system::{Grid, SystemDescriptor};

/// `exp(-1/s)` for `s > 0`, else `0`.
fn smooth_step_factor(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth low-pass cutoff: `1` on `[0, 1/2]`, `0` on `[1, inf)`, even,
/// non-increasing on `[0, inf)`.
pub fn lowpass_h(t: f64) -> f64 {
    let t = t.abs();
    let up = smooth_step_factor(1.0 - t);
    let down = smooth_step_factor(t - 0.5);
    if up + down == 0.0 {
        // only reachable for NaN input
        return f64::NAN;
    }
    up / (up + down)
}

/// `h(t) - h(2t)`, supported on `1/4 <= |t| <= 1`.
pub fn bandpass_g(t: f64) -> f64 {
    lowpass_h(t) - lowpass_h(2.0 * t)
}

/// `(1 + t^2)^(-beta/2)`.
pub fn mask_beta(beta: f64, t: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Parameter(format!(
            "mask order beta must be > 0, got {beta}"
        )));
    }
    Ok(mask_value(beta, t))
}

fn mask_value(beta: f64, t: f64) -> f64 {
    (1.0 + t * t).powf(-0.5 * beta)
}

pub type MaskFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An even spectral multiplier `t -> H(t)`.
#[derive(Clone)]
pub enum Filter {
    LowPass,
    BandPass,
    Mask {
        beta: f64,
    },
    /// User supplied positive mask.
    Custom {
        name: String,
        f: MaskFn,
    },
    /// `t -> inner(factor * t)`.
    Dilated {
        inner: Box<Filter>,
        factor: f64,
    },
    /// `t -> 1 - inner(t)`.
    Complement(Box<Filter>),
    Product(Box<Filter>, Box<Filter>),
}

impl fmt::Debug for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Filter::LowPass => write!(f, "h"),
            Filter::BandPass => write!(f, "g"),
            Filter::Mask { beta } => write!(f, "b[beta={beta}]"),
            Filter::Custom { name, .. } => write!(f, "custom[{name}]"),
            Filter::Dilated { inner, factor } => write!(f, "{inner:?}({factor}*t)"),
            Filter::Complement(inner) => write!(f, "(1-{inner:?})"),
            Filter::Product(a, b) => write!(f, "{a:?}*{b:?}"),
        }
    }
}

impl Filter {
    pub fn mask(beta: f64) -> Result<Filter> {
        mask_beta(beta, 0.0)?;
        Ok(Filter::Mask { beta })
    }

    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Filter {
        Filter::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn dilated(self, factor: f64) -> Filter {
        Filter::Dilated {
            inner: Box::new(self),
            factor,
        }
    }

    pub fn complement(self) -> Filter {
        Filter::Complement(Box::new(self))
    }

    pub fn times(self, other: Filter) -> Filter {
        Filter::Product(Box::new(self), Box::new(other))
    }

    /// `h(t/2) - h(4t)`: equals one on the support of `g`.
    pub fn widened_bandpass() -> Filter {
        Filter::LowPass
            .dilated(0.5)
            .times(Filter::LowPass.dilated(4.0).complement())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Filter::LowPass => lowpass_h(t),
            Filter::BandPass => bandpass_g(t),
            Filter::Mask { beta } => mask_value(*beta, t),
            Filter::Custom { f, .. } => f(t.abs()),
            Filter::Dilated { inner, factor } => inner.eval(factor * t),
            Filter::Complement(inner) => 1.0 - inner.eval(t),
            Filter::Product(a, b) => a.eval(t) * b.eval(t),
        }
    }

    /// Radius outside of which the filter vanishes identically, if any.
    pub fn support_radius(&self) -> Option<f64> {
        match self {
            Filter::LowPass | Filter::BandPass => Some(1.0),
            Filter::Mask { .. } | Filter::Custom { .. } | Filter::Complement(_) => None,
            Filter::Dilated { inner, factor } => inner.support_radius().map(|r| r / factor.abs()),
            Filter::Product(a, b) => match (a.support_radius(), b.support_radius()) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (Some(x), None) | (None, Some(x)) => Some(x),
                (None, None) => None,
            },
        }
    }

    /// Upper bound on `|H|`, when one is known.
    pub fn sup_abs(&self) -> Option<f64> {
        match self {
            Filter::LowPass | Filter::BandPass | Filter::Mask { .. } => Some(1.0),
            Filter::Custom { .. } => None,
            Filter::Dilated { inner, .. } => inner.sup_abs(),
            Filter::Complement(inner) => match inner.as_ref() {
                Filter::LowPass | Filter::Mask { .. } => Some(1.0),
                other => other.sup_abs().map(|s| 1.0 + s),
            },
            Filter::Product(a, b) => Some(a.sup_abs()? * b.sup_abs()?),
        }
    }
}

/// What is known about coefficients beyond the stored band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// Exactly zero.
    Zero,
    /// Coefficients of a measure with total variation at most this value.
    Bounded(f64),
    Unknown,
}

impl Tail {
    fn plus(self, other: Tail) -> Tail {
        match (self, other) {
            (Tail::Zero, t) | (t, Tail::Zero) => t,
            (Tail::Bounded(a), Tail::Bounded(b)) => Tail::Bounded(a + b),
            _ => Tail::Unknown,
        }
    }

    fn scaled(self, factor: Option<f64>) -> Tail {
        match (self, factor) {
            (Tail::Zero, _) => Tail::Zero,
            (Tail::Bounded(v), Some(s)) => Tail::Bounded(v * s.abs()),
            _ => Tail::Unknown,
        }
    }
}

/// Coefficients on a leading segment of the system's basis ordering.
///
/// Entry `i` belongs to `system.index(i)`; every index with
/// `lambda < lambda_cut` is stored.
#[derive(Debug, Clone)]
pub struct SpectralVector {
    system: Arc<SystemDescriptor>,
    coefficients: Vec<f64>,
    lambda_cut: f64,
    tail: Tail,
}

impl SpectralVector {
    pub fn new(
        system: Arc<SystemDescriptor>,
        coefficients: Vec<f64>,
        lambda_cut: f64,
        tail: Tail,
    ) -> Result<Self> {
        if coefficients.len() > system.len() {
            return Err(Error::Parameter(format!(
                "{} coefficients for a system of {} basis functions",
                coefficients.len(),
                system.len()
            )));
        }
        if coefficients.len() < system.count_below(lambda_cut) {
            return Err(Error::Parameter(format!(
                "{} coefficients do not cover lambda < {lambda_cut}",
                coefficients.len()
            )));
        }
        Ok(SpectralVector {
            system,
            coefficients,
            lambda_cut,
            tail,
        })
    }

    /// Zero vector covering `lambda < lambda_cut`.
    pub fn zeros(system: Arc<SystemDescriptor>, lambda_cut: f64) -> Self {
        let len = system.count_below(lambda_cut);
        SpectralVector {
            system,
            coefficients: vec![0.0; len],
            lambda_cut,
            tail: Tail::Zero,
        }
    }

    /// Vector with the listed coefficients and zeros elsewhere.
    pub fn from_entries(
        system: Arc<SystemDescriptor>,
        entries: &[(crate::system::BasisIndex, f64)],
    ) -> Result<Self> {
        let mut positions = Vec::with_capacity(entries.len());
        for (index, value) in entries {
            positions.push((system.position(index)?, *value));
        }
        let len = positions.iter().map(|(p, _)| p + 1).max().unwrap_or(1);
        let mut coefficients = vec![0.0; len];
        for (p, v) in positions {
            coefficients[p] += v;
        }
        let lambda_cut = next_lambda(&system, len).unwrap_or(system.lambda_max());
        Ok(SpectralVector {
            system,
            coefficients,
            lambda_cut,
            tail: Tail::Zero,
        })
    }

    pub fn system(&self) -> &Arc<SystemDescriptor> {
        &self.system
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn lambda_cut(&self) -> f64 {
        self.lambda_cut
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    /// Coefficient of `index`; zero beyond the band when the tail is zero.
    pub fn coefficient(&self, index: &crate::system::BasisIndex) -> Result<f64> {
        let pos = self.system.position(index)?;
        match self.coefficients.get(pos) {
            Some(&c) => Ok(c),
            None if self.tail == Tail::Zero => Ok(0.0),
            None => Err(Error::BandCoverage {
                needed: self.system.lambda_of(pos),
                available: self.lambda_cut,
            }),
        }
    }

    /// First `count` coefficients, padding with zeros when the tail allows it.
    pub fn padded_prefix(&self, count: usize) -> Result<Vec<f64>> {
        if count <= self.len() {
            return Ok(self.coefficients[..count].to_vec());
        }
        if self.tail != Tail::Zero {
            return Err(Error::BandCoverage {
                needed: self.system.lambda_of(count.min(self.system.len()) - 1),
                available: self.lambda_cut,
            });
        }
        if count > self.system.len() {
            return Err(Error::Parameter(format!(
                "{count} coefficients requested from a system of {}",
                self.system.len()
            )));
        }
        let mut out = self.coefficients.clone();
        out.resize(count, 0.0);
        Ok(out)
    }

    /// Largest eigenvalue carrying a nonzero coefficient.
    pub fn max_active_lambda(&self) -> f64 {
        self.coefficients
            .iter()
            .rposition(|&c| c != 0.0)
            .map(|p| self.system.lambda_of(p))
            .unwrap_or(0.0)
    }

    fn same_system(&self, other: &SpectralVector) -> Result<()> {
        if Arc::ptr_eq(&self.system, &other.system)
            || (self.system.q() == other.system.q() && self.system.len() == other.system.len())
        {
            Ok(())
        } else {
            Err(Error::Parameter(
                "spectral vectors belong to different systems".into(),
            ))
        }
    }

    fn combine(&self, other: &SpectralVector, sign: f64) -> Result<SpectralVector> {
        self.same_system(other)?;
        let (long, short) = if self.len() >= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let len = if short.tail == Tail::Zero {
            long.len()
        } else {
            short.len()
        };
        let lambda_cut = if short.tail == Tail::Zero {
            long.lambda_cut.max(short.lambda_cut)
        } else {
            short.lambda_cut.min(long.lambda_cut)
        };
        let a = self
            .coefficients
            .iter()
            .copied()
            .chain(std::iter::repeat(0.0));
        let b = other
            .coefficients
            .iter()
            .copied()
            .chain(std::iter::repeat(0.0));
        let coefficients = a.zip(b).take(len).map(|(x, y)| x + sign * y).collect();
        Ok(SpectralVector {
            system: self.system.clone(),
            coefficients,
            lambda_cut,
            tail: self.tail.plus(other.tail),
        })
    }

    pub fn add(&self, other: &SpectralVector) -> Result<SpectralVector> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &SpectralVector) -> Result<SpectralVector> {
        self.combine(other, -1.0)
    }

    pub fn scale(&self, factor: f64) -> SpectralVector {
        SpectralVector {
            system: self.system.clone(),
            coefficients: self.coefficients.iter().map(|c| c * factor).collect(),
            lambda_cut: self.lambda_cut,
            tail: self.tail.scaled(Some(factor)),
        }
    }

    /// Coefficient-wise `m(lambda_k) * c_k`.
    pub(crate) fn map_lambda(&self, tail: Tail, m: impl Fn(f64) -> f64) -> SpectralVector {
        let lambdas = self.system.lambdas();
        SpectralVector {
            system: self.system.clone(),
            coefficients: self
                .coefficients
                .iter()
                .zip(lambdas)
                .map(|(c, &l)| c * m(l))
                .collect(),
            lambda_cut: self.lambda_cut,
            tail,
        }
    }

    /// Largest absolute coefficient difference against `other` over the union band.
    pub fn max_abs_diff(&self, other: &SpectralVector) -> f64 {
        let n = self.len().max(other.len());
        (0..n)
            .map(|i| {
                let a = self.coefficients.get(i).copied().unwrap_or(0.0);
                let b = other.coefficients.get(i).copied().unwrap_or(0.0);
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn next_lambda(system: &SystemDescriptor, len: usize) -> Option<f64> {
    (len < system.len()).then(|| system.lambda_of(len))
}

/// `true` when every lattice eigenvalue below `cut` is enumerated by `system`.
pub(crate) fn system_covers_below(system: &SystemDescriptor, cut: f64) -> bool {
    let lmax = system.lambda_max();
    if cut <= lmax {
        return true;
    }
    // look for a lattice point with lmax < |k| < cut
    let lo = (lmax * lmax).floor() as i64 + 1;
    let hi = (cut * cut).ceil() as i64 - 1;
    if hi - lo > 100_000 {
        return false;
    }
    (lo.max(0)..=hi).all(|s| {
        let s_f = s as f64;
        !(s_f > lmax * lmax && s_f < cut * cut && is_sum_of_squares(s, system.q()))
    })
}

fn is_sum_of_squares(s: i64, q: usize) -> bool {
    if q == 0 {
        return s == 0;
    }
    let mut a = 0i64;
    while a * a <= s {
        if is_sum_of_squares(s - a * a, q - 1) {
            return true;
        }
        a += 1;
    }
    false
}

/// Output coefficient `k` is `H(lambda_k / n)` times input coefficient `k`.
pub fn apply_multiplier(filter: &Filter, n: f64, v: &SpectralVector) -> Result<SpectralVector> {
    if !(n > 0.0) {
        return Err(Error::Parameter(format!(
            "multiplier scale must be > 0, got {n}"
        )));
    }
    let scaled = |l: f64| filter.eval(l / n);
    match filter.support_radius() {
        Some(r) => {
            let needed = n * r;
            let system = v.system();
            let len = if v.tail() == Tail::Zero {
                v.len().min(system.count_below(needed))
            } else {
                if v.lambda_cut() < needed {
                    return Err(Error::BandCoverage {
                        needed,
                        available: v.lambda_cut(),
                    });
                }
                system.count_below(needed)
            };
            let lambdas = system.lambdas();
            let coefficients = v.coefficients()[..len]
                .iter()
                .zip(lambdas)
                .map(|(c, &l)| c * scaled(l))
                .collect();
            Ok(SpectralVector {
                system: system.clone(),
                coefficients,
                lambda_cut: needed,
                tail: Tail::Zero,
            })
        }
        None => Ok(v.map_lambda(v.tail().scaled(filter.sup_abs()), scaled)),
    }
}

/// `Phi_n(H; x, y) = sum_k H(lambda_k / n) phi_k(x) phi_k(y)` for compactly
/// supported `H`. The sum is finite and exact.
pub fn localized_kernel(
    filter: &Filter,
    n: f64,
    x: &[f64],
    y: &[f64],
    system: &SystemDescriptor,
) -> Result<f64> {
    let r = filter.support_radius().ok_or_else(|| {
        Error::Parameter(format!(
            "localized kernel needs a compactly supported filter, got {filter:?}"
        ))
    })?;
    if x.len() != system.q() || y.len() != system.q() {
        return Err(Error::Parameter(
            "point dimension does not match system".into(),
        ));
    }
    let needed = n * r;
    if !system_covers_below(system, needed) {
        return Err(Error::BandCoverage {
            needed,
            available: system.lambda_max(),
        });
    }
    let count = system.count_below(needed);
    Ok(system.basis()[..count]
        .iter()
        .zip(system.lambdas())
        .map(|(index, &l)| filter.eval(l / n) * index.eval(x) * index.eval(y))
        .sum())
}

/// How the series tail beyond the truncation radius is controlled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMode {
    /// Integral-comparison bound, valid for `beta > q`.
    Analytic,
    /// Successive partial sums compared in the grid L1 norm.
    Empirical,
}

/// Kernel `G(b; x, y) = sum_k b(lambda_k) phi_k(x) phi_k(y)` with its truncation
/// policy.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    mask: Filter,
    beta: f64,
    lambda_truncation: f64,
    tail_tolerance: f64,
    allow_slow_decay: bool,
    /// `|b(t)| <= envelope * (1 + t^2)^(-beta/2)`.
    envelope: f64,
}

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-8;

/// Partial sums must agree to this L1 distance in empirical tail mode.
pub const EMPIRICAL_TAIL_TOLERANCE: f64 = 1e-6;

impl KernelSpec {
    /// Standard mask `(1 + t^2)^(-beta/2)` truncated at `lambda <= lambda_truncation`.
    pub fn new(beta: f64, lambda_truncation: f64) -> Result<Self> {
        let mask = Filter::mask(beta)?;
        if !(lambda_truncation >= 1.0) {
            return Err(Error::Parameter(format!(
                "kernel truncation must be >= 1, got {lambda_truncation}"
            )));
        }
        Ok(KernelSpec {
            mask,
            beta,
            lambda_truncation,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            allow_slow_decay: false,
            envelope: 1.0,
        })
    }

    /// Standard mask truncated at the largest radius the grid resolves,
    /// `N/2 - 1/2`. That radius is never the norm of a lattice point.
    pub fn for_grid(beta: f64, grid: &Grid) -> Result<Self> {
        Self::new(beta, grid.nyquist() - 0.5)
    }

    /// User mask of nominal type `beta`, with `|b(t)| <= envelope (1+t^2)^(-beta/2)`.
    pub fn custom(mask: Filter, beta: f64, envelope: f64, lambda_truncation: f64) -> Result<Self> {
        let mut spec = Self::new(beta, lambda_truncation)?;
        if !(envelope > 0.0) {
            return Err(Error::Parameter(format!(
                "mask envelope must be > 0, got {envelope}"
            )));
        }
        spec.mask = mask;
        spec.envelope = envelope;
        Ok(spec)
    }

    pub fn with_tail_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0) {
            return Err(Error::Parameter(format!(
                "tail tolerance must be > 0, got {tolerance}"
            )));
        }
        self.tail_tolerance = tolerance;
        Ok(self)
    }

    pub fn with_slow_decay(mut self, allow: bool) -> Self {
        self.allow_slow_decay = allow;
        self
    }

    pub fn with_truncation(mut self, lambda_truncation: f64) -> Result<Self> {
        if !(lambda_truncation >= 1.0) {
            return Err(Error::Parameter(format!(
                "kernel truncation must be >= 1, got {lambda_truncation}"
            )));
        }
        self.lambda_truncation = lambda_truncation;
        Ok(self)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mask(&self) -> &Filter {
        &self.mask
    }

    pub fn lambda_truncation(&self) -> f64 {
        self.lambda_truncation
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    pub fn allows_slow_decay(&self) -> bool {
        self.allow_slow_decay
    }

    /// `b(lambda)`.
    pub fn b(&self, lambda: f64) -> f64 {
        self.mask.eval(lambda)
    }

    pub fn tail_mode(&self, q: usize) -> Result<TailMode> {
        if self.beta > q as f64 {
            Ok(TailMode::Analytic)
        } else if self.allow_slow_decay {
            Ok(TailMode::Empirical)
        } else {
            Err(Error::SlowDecay { beta: self.beta, q })
        }
    }

    /// Bound on `sum_{k in Z^q, |k| > Lambda} |b(|k|)|`, which bounds the
    /// pointwise truncation error of a section `G(., y)`. Infinite unless
    /// `beta > q`.
    pub fn sup_tail_bound(&self, q: usize) -> f64 {
        self.envelope * lattice_tail_bound(q, self.lambda_truncation, self.beta)
    }

    /// Bound on `(sum_{|k| > Lambda} b(|k|)^2)^(1/2)`, which bounds the L2 (hence
    /// every L^p with p <= 2) truncation error of a section.
    pub fn l2_tail_bound(&self, q: usize) -> f64 {
        self.envelope * lattice_tail_bound(q, self.lambda_truncation, 2.0 * self.beta).sqrt()
    }

    /// Truncation error bound for the L^p norm of `int G(., y) d mu(y)` per
    /// unit total variation of `mu`.
    pub fn tail_bound(&self, p: f64, q: usize) -> f64 {
        let sup = self.sup_tail_bound(q);
        if p <= 2.0 {
            sup.min(self.l2_tail_bound(q))
        } else {
            sup
        }
    }

    /// Whether the pointwise bound meets the configured tolerance.
    pub fn meets_tail_tolerance(&self, q: usize) -> bool {
        self.sup_tail_bound(q) <= self.tail_tolerance
    }
}

/// Integral comparison for `sum_{k in Z^q, |k| > radius} |k|^(-s)`.
///
/// Every unit cube around a lattice point with `|k| > radius` lies in
/// `|x| > radius - sqrt(q)/2`, and for decreasing `f`,
/// `f(|k|) <= f(|x| - sqrt(q)/2)` on that cube.
fn lattice_tail_bound(q: usize, radius: f64, s: f64) -> f64 {
    let a = (q as f64).sqrt() / 2.0;
    let lower = radius - 2.0 * a;
    if s <= q as f64 || lower <= 0.0 {
        return f64::INFINITY;
    }
    let sphere = match q {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI,
    };
    // int_lower^inf t^(-s) (t + a)^(q-1) dt, expanded binomially
    let mut total = 0.0;
    let mut binom = 1.0;
    for j in 0..q {
        if j > 0 {
            binom = binom * (q - j) as f64 / j as f64;
        }
        let power = j as f64 + 1.0 - s;
        total += binom * a.powi((q - 1 - j) as i32) * lower.powf(power) / (s - j as f64 - 1.0);
    }
    sphere * total
}

/// `x -> sum_{lambda_k <= Lambda} b(lambda_k) phi_k(x) phi_k(y)` on the grid.
pub fn eval_kernel_section(
    spec: &KernelSpec,
    y: &[f64],
    system: &Arc<SystemDescriptor>,
    grid: &Grid,
) -> Result<GridFunction> {
    spec.tail_mode(system.q())?;
    if y.len() != system.q() {
        return Err(Error::Parameter(
            "point dimension does not match system".into(),
        ));
    }
    let count = system.count_at_most(spec.lambda_truncation());
    if count == system.len() && !system_covers_below(system, spec.lambda_truncation()) {
        return Err(Error::BandCoverage {
            needed: spec.lambda_truncation(),
            available: system.lambda_max(),
        });
    }
    let coefficients = system.basis()[..count]
        .iter()
        .zip(system.lambdas())
        .map(|(index, &l)| spec.b(l) * index.eval(y))
        .collect();
    let v = SpectralVector::new(
        system.clone(),
        coefficients,
        spec.lambda_truncation(),
        Tail::Zero,
    )?;
    synthesize(&v, grid)
}

/// Divide each coefficient by `b(lambda_k)`.
pub fn apply_inverse_kernel(spec: &KernelSpec, v: &SpectralVector) -> Result<SpectralVector> {
    let lambdas = v.system().lambdas();
    if let Some((&l, _)) = lambdas
        .iter()
        .zip(v.coefficients())
        .find(|(&l, _)| !(spec.b(l) > 0.0))
    {
        return Err(Error::Parameter(format!(
            "mask is not positive at lambda={l}"
        )));
    }
    let tail = if v.tail() == Tail::Zero {
        Tail::Zero
    } else {
        Tail::Unknown
    };
    Ok(v.map_lambda(tail, |l| 1.0 / spec.b(l)))
}

/// Complex exponential coefficients `c_k` (for `k` on the full lattice) of a
/// spectral vector, returned as `(k, c_k)` pairs.
pub(crate) fn complex_terms(v: &SpectralVector) -> Vec<([i32; 3], Complex64)> {
    use crate::system::BasisKind;
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(2 * v.len());
    for (index, &c) in v.system().basis().iter().zip(v.coefficients()) {
        if c == 0.0 {
            continue;
        }
        let neg = [-index.k[0], -index.k[1], -index.k[2]];
        match index.kind {
            BasisKind::Constant => out.push((index.k, Complex64::new(c, 0.0))),
            BasisKind::Cosine => {
                out.push((index.k, Complex64::new(c * inv, 0.0)));
                out.push((neg, Complex64::new(c * inv, 0.0)));
            }
            BasisKind::Sine => {
                out.push((index.k, Complex64::new(0.0, -c * inv)));
                out.push((neg, Complex64::new(0.0, c * inv)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{build_torus_system, BasisIndex};

    fn delta0(system: &Arc<SystemDescriptor>, cut: f64) -> SpectralVector {
        let len = system.count_below(cut);
        let coefficients = system.basis()[..len]
            .iter()
            .map(|b| b.eval(&[0.0]))
            .collect();
        SpectralVector::new(system.clone(), coefficients, cut, Tail::Bounded(1.0)).unwrap()
    }

    #[test]
    fn lowpass_values() {
        assert_eq!(lowpass_h(0.3), 1.0);
        assert_eq!(lowpass_h(0.5), 1.0);
        assert_eq!(lowpass_h(1.7), 0.0);
        assert_eq!(lowpass_h(1.0), 0.0);
        assert!((lowpass_h(0.75) - 0.5).abs() < 1e-15);
        assert_eq!(lowpass_h(-0.3), 1.0);
    }

    #[test]
    fn bandpass_values() {
        assert_eq!(bandpass_g(0.2), 0.0);
        assert_eq!(bandpass_g(1.1), 0.0);
        assert!((bandpass_g(0.75) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mask_values() {
        assert_eq!(mask_beta(2.0, 0.0).unwrap(), 1.0);
        assert!((mask_beta(2.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((mask_beta(4.0, 3.0).unwrap() - 0.01).abs() < 1e-15);
        assert!(mask_beta(0.0, 1.0).is_err());
        assert!(mask_beta(-1.0, 1.0).is_err());
    }

    #[test]
    fn multiplier_on_delta() {
        let sys = Arc::new(build_torus_system(1, 4.0).unwrap());
        let v = delta0(&sys, 4.5);
        let out = apply_multiplier(&Filter::LowPass, 2.0, &v).unwrap();
        assert_eq!(out.coefficient(&BasisIndex::CONSTANT).unwrap(), 1.0);
        assert!((out.coefficient(&BasisIndex::cosine(&[1])).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(out.coefficient(&BasisIndex::cosine(&[2])).unwrap(), 0.0);
        assert_eq!(out.lambda_cut(), 2.0);
        assert_eq!(out.tail(), Tail::Zero);
    }

    #[test]
    fn multiplier_needs_band() {
        let sys = Arc::new(build_torus_system(1, 4.0).unwrap());
        let v = delta0(&sys, 1.5);
        let err = apply_multiplier(&Filter::LowPass, 2.0, &v).unwrap_err();
        assert!(matches!(err, Error::BandCoverage { .. }));
    }

    #[test]
    fn multiplier_constant_only() {
        let sys = Arc::new(build_torus_system(1, 4.0).unwrap());
        let v = SpectralVector::from_entries(sys.clone(), &[(BasisIndex::CONSTANT, 0.7)]).unwrap();
        for n in [0.3, 1.0, 8.0] {
            let out = apply_multiplier(&Filter::LowPass, n, &v).unwrap();
            assert_eq!(out.coefficient(&BasisIndex::CONSTANT).unwrap(), 0.7);
            assert_eq!(out.max_abs_diff(&v), 0.0);
        }
    }

    #[test]
    fn bandpass_kills_low_band() {
        // P in Pi_{1/2} is a constant
        let sys = Arc::new(build_torus_system(1, 4.0).unwrap());
        let v = SpectralVector::from_entries(sys, &[(BasisIndex::CONSTANT, 3.0)]).unwrap();
        let out = apply_multiplier(&Filter::BandPass, 2.0, &v).unwrap();
        assert!(out.coefficients().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn localized_kernel_values() {
        let sys = build_torus_system(1, 4.0).unwrap();
        // sum over k in Z of h(|k|/2) = 1 + 2 h(1/2) + 2 h(1)
        let v = localized_kernel(&Filter::LowPass, 2.0, &[0.0], &[0.0], &sys).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
        for (x, y) in [(0.3, -1.2), (2.0, 2.0), (0.0, 3.1)] {
            let g = localized_kernel(&Filter::BandPass, 1.0, &[x], &[y], &sys).unwrap();
            assert_eq!(g, 0.0);
        }
        let mask = Filter::mask(2.0).unwrap();
        assert!(localized_kernel(&mask, 1.0, &[0.0], &[0.0], &sys).is_err());
        let small = build_torus_system(1, 1.0).unwrap();
        assert!(matches!(
            localized_kernel(&Filter::LowPass, 4.0, &[0.0], &[0.0], &small),
            Err(Error::BandCoverage { .. })
        ));
    }

    #[test]
    fn inverse_kernel() {
        let sys = Arc::new(build_torus_system(1, 8.0).unwrap());
        let spec = KernelSpec::new(2.0, 8.0).unwrap();
        let w = delta0(&sys, 8.5).scale(0.3);
        let masked = apply_multiplier(spec.mask(), 1.0, &w).unwrap();
        let back = apply_inverse_kernel(&spec, &masked).unwrap();
        assert!(back.max_abs_diff(&w) < 1e-12);

        let c = SpectralVector::from_entries(sys.clone(), &[(BasisIndex::CONSTANT, 2.5)]).unwrap();
        assert_eq!(
            apply_inverse_kernel(&spec, &c).unwrap().coefficients()[0],
            2.5
        );

        let half = SpectralVector::from_entries(sys, &[(BasisIndex::cosine(&[1]), 0.5)]).unwrap();
        let out = apply_inverse_kernel(&spec, &half).unwrap();
        assert!((out.coefficient(&BasisIndex::cosine(&[1])).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn slow_decay_rejected() {
        let sys = Arc::new(build_torus_system(1, 8.0).unwrap());
        let grid = Grid::new(1, 32).unwrap();
        let spec = KernelSpec::new(1.0, 8.0).unwrap();
        assert!(matches!(
            eval_kernel_section(&spec, &[0.0], &sys, &grid),
            Err(Error::SlowDecay { .. })
        ));
        let spec = spec.with_slow_decay(true);
        assert!(eval_kernel_section(&spec, &[0.0], &sys, &grid).is_ok());
    }

    #[test]
    fn tail_bound_dominates_direct_sum() {
        for (q, radius, beta) in [(1, 100.5, 2.0), (2, 20.5, 3.0), (3, 8.5, 4.5)] {
            let spec = KernelSpec::new(beta, radius).unwrap();
            let reach = 400i64;
            let mut tail = 0.0;
            let span = |d: usize| if d < q { -reach..=reach } else { 0..=0 };
            let reach_q = if q == 1 { 100_000 } else { reach };
            for a in if q == 1 { -reach_q..=reach_q } else { span(0) } {
                for b in span(1) {
                    for c in span(2) {
                        let r = ((a * a + b * b + c * c) as f64).sqrt();
                        if r > radius {
                            tail += mask_value(beta, r);
                        }
                    }
                }
            }
            let bound = spec.sup_tail_bound(q);
            assert!(tail <= bound, "q={q}: direct {tail} vs bound {bound}");
            assert!(
                bound < 20.0 * tail,
                "q={q}: bound {bound} too loose vs {tail}"
            );
        }
    }

    #[test]
    fn widened_bandpass_is_one_on_support_of_g() {
        let wide = Filter::widened_bandpass();
        for i in 0..=1000 {
            let t = 0.25 + 0.75 * i as f64 / 1000.0;
            assert!((bandpass_g(t) * wide.eval(t) - bandpass_g(t)).abs() < 1e-12);
            assert!((wide.eval(t) - 1.0).abs() < 1e-12);
        }
        assert_eq!(wide.support_radius(), Some(2.0));
    }
}
