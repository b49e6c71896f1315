//! Brute-force evaluation of multiplier-weighted expansions by direct
//! summation over the integer lattice, independent of the FFT, the basis
//! ordering and [`SpectralVector`](crate::spectral::SpectralVector).

use std::f64::consts::FRAC_1_SQRT_2;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::system::{BasisIndex, BasisKind, Grid};

/// A real measure-like source and the radial multiplier applied to it.
pub struct Component<'a> {
    /// `(location, weight)` point masses.
    pub atoms: Vec<(Vec<f64>, f64)>,
    /// Real-basis coefficients of a trigonometric polynomial.
    pub terms: Vec<(BasisIndex, f64)>,
    pub multiplier: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
}

/// Evaluates `x -> sum_c sum_{k in Z^q, |k| <= radius} M_c(|k|) s_c(k) e^{ikx}`,
/// where `s_c(k)` is the complex Fourier coefficient of component `c`.
pub struct Oracle {
    q: usize,
    reach: i64,
    /// Row-major over `[-reach, reach]^q`.
    coefficients: Vec<Complex64>,
}

impl Oracle {
    pub fn new(q: usize, radius: f64, components: &[Component<'_>]) -> Result<Self> {
        if !(1..=3).contains(&q) {
            return Err(Error::Dimension(q));
        }
        let reach = radius.floor() as i64;
        let side = (2 * reach + 1) as usize;
        let total = side.pow(q as u32);
        let mut coefficients = vec![Complex64::default(); total];
        let radius_sq = radius * radius;
        for (flat, slot) in coefficients.iter_mut().enumerate() {
            let k = unflatten(flat, side, q, reach);
            let sq: i64 = k[..q].iter().map(|v| v * v).sum();
            if sq as f64 > radius_sq {
                continue;
            }
            let norm = (sq as f64).sqrt();
            for c in components {
                let m = (c.multiplier)(norm);
                if m == 0.0 {
                    continue;
                }
                let mut s = Complex64::default();
                for (y, w) in &c.atoms {
                    let phase: f64 = k[..q].iter().zip(y).map(|(&a, b)| a as f64 * b).sum();
                    s += Complex64::from_polar(*w, -phase);
                }
                *slot += s * m;
            }
        }
        for c in components {
            for (index, value) in &c.terms {
                let k = [index.k[0] as i64, index.k[1] as i64, index.k[2] as i64];
                let sq: i64 = k[..q].iter().map(|v| v * v).sum();
                if sq as f64 > radius_sq {
                    continue;
                }
                let m = (c.multiplier)((sq as f64).sqrt());
                let plus = flatten(&k, side, q, reach);
                let neg = [-k[0], -k[1], -k[2]];
                let minus = flatten(&neg, side, q, reach);
                match index.kind {
                    BasisKind::Constant => coefficients[plus] += m * value,
                    BasisKind::Cosine => {
                        coefficients[plus] += m * value * FRAC_1_SQRT_2;
                        coefficients[minus] += m * value * FRAC_1_SQRT_2;
                    }
                    BasisKind::Sine => {
                        coefficients[plus] += Complex64::new(0.0, -m * value * FRAC_1_SQRT_2);
                        coefficients[minus] += Complex64::new(0.0, m * value * FRAC_1_SQRT_2);
                    }
                }
            }
        }
        Ok(Oracle {
            q,
            reach,
            coefficients,
        })
    }

    fn side(&self) -> usize {
        (2 * self.reach + 1) as usize
    }

    /// Value at an arbitrary point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let side = self.side();
        let mut total = 0.0;
        for (flat, c) in self.coefficients.iter().enumerate() {
            if *c == Complex64::default() {
                continue;
            }
            let k = unflatten(flat, side, self.q, self.reach);
            let phase: f64 = k[..self.q].iter().zip(x).map(|(&a, b)| a as f64 * b).sum();
            total += (c * Complex64::from_polar(1.0, phase)).re;
        }
        total
    }

    /// `Re c_0 + sum_{k >= 1} Re((c_k + conj(c_{-k})) e^{ikx})` at every `x`.
    fn eval_circle(&self, xs: &[f64]) -> Vec<f64> {
        let reach = self.reach as usize;
        let c = &self.coefficients;
        let mut total = vec![c[reach].re; xs.len()];
        let (mut re, mut im) = (vec![0.0; xs.len()], vec![0.0; xs.len()]);
        let step: Vec<(f64, f64)> = xs.iter().map(|x| (x.cos(), x.sin())).collect();
        for k in 1..=reach {
            if k % 64 == 1 {
                for ((r, i), x) in re.iter_mut().zip(im.iter_mut()).zip(xs) {
                    (*i, *r) = (k as f64 * x).sin_cos();
                }
            } else {
                for ((r, i), (sc, ss)) in re.iter_mut().zip(im.iter_mut()).zip(&step) {
                    (*r, *i) = (*r * sc - *i * ss, *r * ss + *i * sc);
                }
            }
            let d = c[reach + k] + c[reach - k].conj();
            for ((t, r), i) in total.iter_mut().zip(&re).zip(&im) {
                *t += d.re * r - d.im * i;
            }
        }
        total
    }

    /// Values at every node of `grid`, row-major.
    pub fn eval_grid(&self, grid: &Grid) -> Result<Vec<f64>> {
        if grid.q() != self.q {
            return Err(Error::Parameter(
                "grid dimension differs from oracle".into(),
            ));
        }
        let n = grid.points_per_axis();
        let axis: Vec<f64> = (0..n).map(|j| grid.axis_coordinate(j)).collect();
        let side = self.side();
        if self.q == 1 {
            return Ok(self.eval_circle(&axis));
        }
        // peel one axis at a time: sum over the first frequency axis for every
        // node of the first spatial axis
        let mut layer: Vec<Complex64> = self.coefficients.clone();
        let mut outer = 1usize; // number of spatial nodes already resolved
        for depth in 0..self.q {
            let inner = side.pow((self.q - depth - 1) as u32);
            let mut next = vec![Complex64::default(); outer * n * inner];
            for o in 0..outer {
                for (xi, &x) in axis.iter().enumerate() {
                    let target = &mut next[(o * n + xi) * inner..(o * n + xi + 1) * inner];
                    let step = Complex64::from_polar(1.0, x);
                    let mut rot = Complex64::default();
                    for f in 0..side {
                        let k = f as i64 - self.reach;
                        // rotate by recurrence, resynchronizing to bound drift
                        rot = if f % 64 == 0 {
                            Complex64::from_polar(1.0, k as f64 * x)
                        } else {
                            rot * step
                        };
                        let source = &layer[(o * side + f) * inner..(o * side + f + 1) * inner];
                        if inner == 1 {
                            target[0] += source[0] * rot;
                            continue;
                        }
                        for (t, s) in target.iter_mut().zip(source) {
                            *t += s * rot;
                        }
                    }
                }
            }
            layer = next;
            outer *= n;
        }
        Ok(layer.into_iter().map(|c| c.re).collect())
    }
}

fn unflatten(flat: usize, side: usize, q: usize, reach: i64) -> [i64; 3] {
    let mut k = [0i64; 3];
    let mut rest = flat;
    for d in (0..q).rev() {
        k[d] = (rest % side) as i64 - reach;
        rest /= side;
    }
    k
}

fn flatten(k: &[i64; 3], side: usize, q: usize, reach: i64) -> usize {
    k[..q]
        .iter()
        .fold(0usize, |acc, &v| acc * side + (v + reach) as usize)
}
