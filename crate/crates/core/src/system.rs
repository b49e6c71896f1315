//! The torus system: real trigonometric basis on `[-pi, pi)^q`, its
//! eigenvalues, and the uniform grid used for quadrature and synthesis.
//!
//! Basis functions are `1`, `sqrt(2) cos(k.x)` and `sqrt(2) sin(k.x)` for `k`
//! on the canonical half-lattice (first nonzero coordinate positive). They are
//! orthonormal with respect to the normalized Lebesgue measure, which has total
//! mass one. The eigenvalue attached to `k` is the Euclidean norm `|k|`.

use std::cmp::Ordering;
use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use crate::error::{Error, Result};

/// Largest supported torus dimension.
pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisKind {
    Constant,
    Cosine,
    Sine,
}

/// One element of the real trigonometric basis.
///
/// Unused trailing frequency slots (beyond the system dimension) are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisIndex {
    pub kind: BasisKind,
    pub k: [i32; MAX_DIM],
}

impl BasisIndex {
    pub const CONSTANT: BasisIndex = BasisIndex {
        kind: BasisKind::Constant,
        k: [0; MAX_DIM],
    };

    pub fn cosine(k: &[i32]) -> Self {
        Self::with_kind(BasisKind::Cosine, k)
    }

    pub fn sine(k: &[i32]) -> Self {
        Self::with_kind(BasisKind::Sine, k)
    }

    fn with_kind(kind: BasisKind, k: &[i32]) -> Self {
        let mut freq = [0; MAX_DIM];
        for (slot, &v) in freq.iter_mut().zip(k) {
            *slot = v;
        }
        BasisIndex { kind, k: freq }
    }

    pub fn lambda_sq(&self) -> i64 {
        self.k.iter().map(|&v| (v as i64) * (v as i64)).sum()
    }

    /// Eigenvalue `|k|`.
    pub fn lambda(&self) -> f64 {
        (self.lambda_sq() as f64).sqrt()
    }

    /// Phase `k . x`.
    pub fn phase(&self, x: &[f64]) -> f64 {
        self.k.iter().zip(x).map(|(&k, &x)| k as f64 * x).sum()
    }

    /// Value of the basis function at `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self.kind {
            BasisKind::Constant => 1.0,
            BasisKind::Cosine => SQRT_2 * self.phase(x).cos(),
            BasisKind::Sine => SQRT_2 * self.phase(x).sin(),
        }
    }

    /// `true` when `k` is on the canonical half-lattice and the kind matches.
    pub fn is_canonical(&self) -> bool {
        let first = self.k.iter().copied().find(|&v| v != 0);
        match (self.kind, first) {
            (BasisKind::Constant, None) => true,
            (BasisKind::Constant, Some(_)) | (_, None) => false,
            (_, Some(v)) => v > 0,
        }
    }

    /// Total order used for the basis: `(|k|^2, k lexicographic, cosine before sine)`.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.lambda_sq()
            .cmp(&other.lambda_sq())
            .then_with(|| self.k.cmp(&other.k))
            .then_with(|| self.kind.cmp(&other.kind))
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            BasisKind::Constant => "const",
            BasisKind::Cosine => "cos",
            BasisKind::Sine => "sin",
        };
        write!(f, "{kind}{:?}", self.k)
    }
}

/// The admissible system instantiated on the torus `T^q`.
///
/// Immutable after construction; share it behind an `Arc`.
#[derive(Debug, Clone)]
pub struct SystemDescriptor {
    q: usize,
    lambda_max: f64,
    basis: Vec<BasisIndex>,
    lambda: Vec<f64>,
}

impl SystemDescriptor {
    /// Dimension of the torus.
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Total mass of the reference measure.
    pub fn mu_star_mass(&self) -> f64 {
        1.0
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[BasisIndex] {
        &self.basis
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    pub fn index(&self, pos: usize) -> BasisIndex {
        self.basis[pos]
    }

    pub fn lambda_of(&self, pos: usize) -> f64 {
        self.lambda[pos]
    }

    /// Number of leading basis entries with `lambda < cut`.
    pub fn count_below(&self, cut: f64) -> usize {
        self.lambda.partition_point(|&l| l < cut)
    }

    /// Number of leading basis entries with `lambda <= cut`.
    pub fn count_at_most(&self, cut: f64) -> usize {
        self.lambda.partition_point(|&l| l <= cut)
    }

    /// Position of `index` in the canonical ordering.
    pub fn position(&self, index: &BasisIndex) -> Result<usize> {
        if !index.is_canonical() || index.k[self.q..].iter().any(|&v| v != 0) {
            return Err(Error::Lookup(index.to_string()));
        }
        self.basis
            .binary_search_by(|probe| probe.canonical_cmp(index))
            .map_err(|_| Error::Lookup(index.to_string()))
    }

    pub fn contains(&self, index: &BasisIndex) -> bool {
        self.position(index).is_ok()
    }
}

/// Enumerate the torus basis with `|k| <= lambda_max`.
pub fn build_torus_system(q: usize, lambda_max: f64) -> Result<SystemDescriptor> {
    if !(1..=MAX_DIM).contains(&q) {
        return Err(Error::Dimension(q));
    }
    if !(lambda_max >= 1.0) || !lambda_max.is_finite() {
        return Err(Error::Parameter(format!(
            "lambda_max must be a finite value >= 1, got {lambda_max}"
        )));
    }
    let reach = lambda_max.floor() as i32;

    let mut freqs: Vec<[i32; MAX_DIM]> = Vec::new();
    let span = |d: usize| if d < q { -reach..=reach } else { 0..=0 };
    for k0 in span(0) {
        for k1 in span(1) {
            for k2 in span(2) {
                let k = [k0, k1, k2];
                let sq: i64 = k.iter().map(|&v| v as i64 * v as i64).sum();
                if (sq as f64).sqrt() > lambda_max {
                    continue;
                }
                let first = k.iter().copied().find(|&v| v != 0);
                if matches!(first, Some(v) if v > 0) {
                    freqs.push(k);
                }
            }
        }
    }

    let mut basis = Vec::with_capacity(2 * freqs.len() + 1);
    basis.push(BasisIndex::CONSTANT);
    for k in freqs {
        basis.push(BasisIndex {
            kind: BasisKind::Cosine,
            k,
        });
        basis.push(BasisIndex {
            kind: BasisKind::Sine,
            k,
        });
    }
    basis.sort_unstable_by(|a, b| a.canonical_cmp(b));
    let lambda = basis.iter().map(BasisIndex::lambda).collect();

    Ok(SystemDescriptor {
        q,
        lambda_max,
        basis,
        lambda,
    })
}

/// Evaluate one basis function of `system` at a list of points.
pub fn eval_basis(
    system: &SystemDescriptor,
    index: &BasisIndex,
    points: &[Vec<f64>],
) -> Result<Vec<f64>> {
    system.position(index)?;
    points
        .iter()
        .map(|x| {
            if x.len() != system.q() {
                Err(Error::Parameter(format!(
                    "point has {} coordinates, system has q={}",
                    x.len(),
                    system.q()
                )))
            } else {
                Ok(index.eval(x))
            }
        })
        .collect()
}

/// Uniform lattice on `[-pi, pi)^q` with `points_per_axis` nodes per axis.
///
/// Nodes are stored row-major (last axis fastest). Node `j` on an axis sits at
/// `-pi + 2 pi j / points_per_axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    q: usize,
    points_per_axis: usize,
}

impl Grid {
    pub fn new(q: usize, points_per_axis: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&q) {
            return Err(Error::Dimension(q));
        }
        if points_per_axis < 4 || !points_per_axis.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "points per axis must be a power of two >= 4, got {points_per_axis}"
            )));
        }
        if (points_per_axis as f64).powi(q as i32) > (1u64 << 26) as f64 {
            return Err(Error::Resolution(format!(
                "grid {points_per_axis}^{q} exceeds the supported node count"
            )));
        }
        Ok(Grid { q, points_per_axis })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.q as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn quadrature_weight(&self) -> f64 {
        1.0 / self.len() as f64
    }

    /// Frequencies strictly below this value per axis are resolved exactly.
    pub fn nyquist(&self) -> f64 {
        (self.points_per_axis / 2) as f64
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.points_per_axis as f64
    }

    pub fn axis_coordinate(&self, j: usize) -> f64 {
        -PI + self.spacing() * j as f64
    }

    /// Coordinates of node `flat`.
    pub fn node(&self, flat: usize) -> Vec<f64> {
        let n = self.points_per_axis;
        let mut coords = vec![0.0; self.q];
        let mut rest = flat;
        for d in (0..self.q).rev() {
            coords[d] = self.axis_coordinate(rest % n);
            rest /= n;
        }
        coords
    }

    pub fn nodes(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.node(i))
    }

    /// Same lattice with twice as many points per axis.
    pub fn refined(&self) -> Result<Grid> {
        Grid::new(self.q, self.points_per_axis * 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_ordering() {
        let sys = build_torus_system(1, 2.0).unwrap();
        let got: Vec<String> = sys.basis().iter().map(|b| b.to_string()).collect();
        assert_eq!(
            got,
            [
                "const[0, 0, 0]",
                "cos[1, 0, 0]",
                "sin[1, 0, 0]",
                "cos[2, 0, 0]",
                "sin[2, 0, 0]"
            ]
        );
        assert_eq!(sys.lambdas(), &[0.0, 1.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn two_dimensional_count() {
        let sys = build_torus_system(2, 1.0).unwrap();
        assert_eq!(sys.len(), 5);
        assert!(sys.contains(&BasisIndex::cosine(&[1, 0])));
        assert!(sys.contains(&BasisIndex::sine(&[0, 1])));
        assert!(!sys.contains(&BasisIndex::cosine(&[0, -1])));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            build_torus_system(4, 2.0),
            Err(Error::Dimension(4))
        ));
        assert!(matches!(
            build_torus_system(0, 2.0),
            Err(Error::Dimension(0))
        ));
        assert!(matches!(
            build_torus_system(1, 0.5),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn basis_values() {
        let sys = build_torus_system(1, 3.0).unwrap();
        let pts = vec![vec![0.0], vec![1.234]];
        let c = eval_basis(&sys, &BasisIndex::CONSTANT, &pts).unwrap();
        assert_eq!(c, vec![1.0, 1.0]);
        let cos1 = eval_basis(&sys, &BasisIndex::cosine(&[1]), &pts[..1]).unwrap();
        assert!((cos1[0] - std::f64::consts::SQRT_2).abs() < 1e-15);
        let sin1 = eval_basis(&sys, &BasisIndex::sine(&[1]), &pts[..1]).unwrap();
        assert_eq!(sin1[0], 0.0);
        let foreign = eval_basis(&sys, &BasisIndex::cosine(&[7]), &pts);
        assert!(matches!(foreign, Err(Error::Lookup(_))));
    }

    #[test]
    fn cos_sin_orthogonal_on_grid() {
        let grid = Grid::new(1, 1024).unwrap();
        let c = BasisIndex::cosine(&[3]);
        let s = BasisIndex::sine(&[3]);
        let ip: f64 =
            grid.nodes().map(|x| c.eval(&x) * s.eval(&x)).sum::<f64>() * grid.quadrature_weight();
        assert!(ip.abs() < 1e-12);
    }

    #[test]
    fn count_below_powers_of_two() {
        let sys = build_torus_system(1, 300.0).unwrap();
        for m in 0..8 {
            let lam = (1u32 << m) as f64;
            assert_eq!(sys.count_below(lam), 2 * (1usize << m) - 1);
        }
    }

    #[test]
    fn grid_nodes() {
        let g = Grid::new(2, 4).unwrap();
        assert_eq!(g.len(), 16);
        assert_eq!(g.node(0), vec![-PI, -PI]);
        assert_eq!(g.node(1), vec![-PI, -PI / 2.0]);
        assert_eq!(g.node(4), vec![-PI / 2.0, -PI]);
        assert!(Grid::new(1, 12).is_err());
    }
}
