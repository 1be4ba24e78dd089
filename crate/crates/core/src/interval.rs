//! Closed intervals and interval matrices.
//!
//! Intervals bound the entries of state-dependent linearization matrices over
//! a whole set of states, so every operation here must enclose the exact real
//! range: products enumerate endpoint combinations, and sine/cosine ranges
//! account for interior critical points instead of sampling.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "interval endpoints out of order: [{lo}, {hi}]");
        Self { lo, hi }
    }

    /// Degenerate interval `[x, x]`.
    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn from_mid_rad(mid: f64, rad: f64) -> Self {
        assert!(rad >= 0.0, "negative interval radius {rad}");
        Self { lo: mid - rad, hi: mid + rad }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn rad(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.lo - tol <= x && x <= self.hi + tol
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo + other.lo, hi: self.hi + other.hi }
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo - other.hi, hi: self.hi - other.lo }
    }

    pub fn neg(&self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }

    /// Multiplication by a scalar (exact; swaps endpoints for negative `k`).
    pub fn scale(&self, k: f64) -> Interval {
        let (a, b) = (self.lo * k, self.hi * k);
        Interval { lo: a.min(b), hi: a.max(b) }
    }

    /// Exact product range via the four endpoint products.
    pub fn mul(&self, other: &Interval) -> Interval {
        let p = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        let lo = p.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Interval { lo, hi }
    }

    /// Exact range of `sin` over the interval (radians).
    ///
    /// Interior maxima/minima at `pi/2 + 2k*pi` and `-pi/2 + 2k*pi` clamp the
    /// range to +-1; otherwise the extrema sit at the endpoints.
    pub fn sin(&self) -> Interval {
        if self.width() >= TWO_PI {
            return Interval::new(-1.0, 1.0);
        }
        let (a, b) = (self.lo.sin(), self.hi.sin());
        let mut lo = a.min(b);
        let mut hi = a.max(b);
        if self.contains_phase(std::f64::consts::FRAC_PI_2) {
            hi = 1.0;
        }
        if self.contains_phase(-std::f64::consts::FRAC_PI_2) {
            lo = -1.0;
        }
        Interval::new(lo, hi)
    }

    /// Exact range of `cos` over the interval (radians).
    pub fn cos(&self) -> Interval {
        if self.width() >= TWO_PI {
            return Interval::new(-1.0, 1.0);
        }
        let (a, b) = (self.lo.cos(), self.hi.cos());
        let mut lo = a.min(b);
        let mut hi = a.max(b);
        if self.contains_phase(0.0) {
            hi = 1.0;
        }
        if self.contains_phase(std::f64::consts::PI) {
            lo = -1.0;
        }
        Interval::new(lo, hi)
    }

    /// Whether some `phase + 2k*pi` lies inside the interval.
    fn contains_phase(&self, phase: f64) -> bool {
        let k = ((self.lo - phase) / TWO_PI).ceil();
        phase + TWO_PI * k <= self.hi
    }
}

/// Dense matrix with interval entries, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Interval>,
}

impl IntervalMatrix {
    /// Matrix of degenerate zero intervals.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Interval::point(0.0); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Interval) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Interval {
        assert!(i < self.rows && j < self.cols, "entry ({i}, {j}) out of bounds");
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Interval) {
        assert!(i < self.rows && j < self.cols, "entry ({i}, {j}) out of bounds");
        self.data[i * self.cols + j] = v;
    }

    /// Entrywise midpoint matrix.
    pub fn mid_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).mid())
    }

    /// Per-row sums of entry radii.
    pub fn row_radius_sums(&self) -> DVector<f64> {
        DVector::from_fn(self.rows, |i, _| {
            (0..self.cols).map(|j| self.get(i, j).rad()).sum()
        })
    }

    /// Product with a real matrix: entries are exact ranges of
    /// `sum_l M[i][l] * g[l][j]` under entrywise-independent `M`.
    pub fn mul_point(&self, g: &DMatrix<f64>) -> IntervalMatrix {
        assert_eq!(
            self.cols,
            g.nrows(),
            "interval product dimension mismatch: {}x{} by {}x{}",
            self.rows,
            self.cols,
            g.nrows(),
            g.ncols()
        );
        IntervalMatrix::from_fn(self.rows, g.ncols(), |i, j| {
            let mut acc = Interval::point(0.0);
            for l in 0..self.cols {
                acc = acc.add(&self.get(i, l).scale(g[(l, j)]));
            }
            acc
        })
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hconcat(&self, other: &IntervalMatrix) -> IntervalMatrix {
        assert_eq!(self.rows, other.rows, "row count mismatch in hconcat");
        IntervalMatrix::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self.get(i, j)
            } else {
                other.get(i, j - self.cols)
            }
        })
    }

    /// Whether a real matrix lies entrywise inside the intervals.
    pub fn contains_matrix(&self, m: &DMatrix<f64>, tol: f64) -> bool {
        if m.nrows() != self.rows || m.ncols() != self.cols {
            return false;
        }
        (0..self.rows).all(|i| (0..self.cols).all(|j| self.get(i, j).contains(m[(i, j)], tol)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sin_cos_of_point_interval_is_point() {
        let iv = Interval::point(0.3);
        assert_abs_diff_eq!(iv.sin().lo, 0.3f64.sin());
        assert_abs_diff_eq!(iv.sin().hi, 0.3f64.sin());
        assert_abs_diff_eq!(iv.cos().lo, 0.3f64.cos());
        assert_abs_diff_eq!(iv.cos().hi, 0.3f64.cos());
    }

    #[test]
    fn sin_cos_on_first_quadrant_segment() {
        // On [pi/6, pi/3] both sin and cos are monotone, so the range is
        // [1/2, sqrt(3)/2] for each.
        let iv = Interval::new(std::f64::consts::FRAC_PI_6, std::f64::consts::FRAC_PI_3);
        let s = iv.sin();
        let c = iv.cos();
        assert_abs_diff_eq!(s.lo, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.hi, 0.75f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(c.lo, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c.hi, 0.75f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn sin_catches_interior_maximum() {
        let iv = Interval::new(1.0, 2.5); // contains pi/2
        let s = iv.sin();
        assert_eq!(s.hi, 1.0);
        assert_abs_diff_eq!(s.lo, 2.5f64.sin().min(1.0f64.sin()), epsilon = 1e-15);
    }

    #[test]
    fn cos_catches_interior_minimum() {
        let iv = Interval::new(2.0, 4.0); // contains pi
        let c = iv.cos();
        assert_eq!(c.lo, -1.0);
    }

    #[test]
    fn wide_interval_saturates_trig_ranges() {
        let iv = Interval::new(-10.0, 10.0);
        assert_eq!(iv.sin(), Interval::new(-1.0, 1.0));
        assert_eq!(iv.cos(), Interval::new(-1.0, 1.0));
    }

    /// Dense-sampling oracle: the analytic trig range must enclose every
    /// sampled value and be tight at the sampled extrema.
    #[test]
    fn trig_ranges_match_dense_sampling() {
        let cases = [
            Interval::new(-0.1, 0.1),
            Interval::new(0.4, 2.0),
            Interval::new(-3.0, -1.0),
            Interval::new(2.9, 6.4),
            Interval::new(-7.0, -5.9),
            Interval::new(1.5707, 1.5709),
        ];
        let n = 10_000;
        for iv in cases {
            let (mut smin, mut smax) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut cmin, mut cmax) = (f64::INFINITY, f64::NEG_INFINITY);
            for k in 0..=n {
                let x = iv.lo + iv.width() * (k as f64) / (n as f64);
                smin = smin.min(x.sin());
                smax = smax.max(x.sin());
                cmin = cmin.min(x.cos());
                cmax = cmax.max(x.cos());
            }
            let s = iv.sin();
            let c = iv.cos();
            // Enclosure.
            assert!(s.lo <= smin && smax <= s.hi);
            assert!(c.lo <= cmin && cmax <= c.hi);
            // Tightness within the sampling resolution.
            assert_abs_diff_eq!(s.lo, smin, epsilon = 1e-7);
            assert_abs_diff_eq!(s.hi, smax, epsilon = 1e-7);
            assert_abs_diff_eq!(c.lo, cmin, epsilon = 1e-7);
            assert_abs_diff_eq!(c.hi, cmax, epsilon = 1e-7);
        }
    }

    #[test]
    fn product_enumerates_endpoints() {
        // [-1, 2] * [-3, -3]: candidates {3, -6}.
        let p = Interval::new(-1.0, 2.0).mul(&Interval::point(-3.0));
        assert_eq!(p, Interval::new(-6.0, 3.0));
        // Sign-straddling product.
        let q = Interval::new(-2.0, 1.0).mul(&Interval::new(-1.0, 3.0));
        assert_eq!(q, Interval::new(-6.0, 3.0));
    }

    #[test]
    fn scale_by_negative_swaps_endpoints() {
        assert_eq!(Interval::new(-1.0, 2.0).scale(-3.0), Interval::new(-6.0, 3.0));
    }

    #[test]
    fn matrix_product_with_real_matrix() {
        // 1x1 case: [-1, 2] * (-3) = [-6, 3].
        let m = IntervalMatrix::from_fn(1, 1, |_, _| Interval::new(-1.0, 2.0));
        let g = DMatrix::from_row_slice(1, 1, &[-3.0]);
        let prod = m.mul_point(&g);
        assert_eq!(prod.get(0, 0), Interval::new(-6.0, 3.0));
    }

    #[test]
    fn matrix_product_accumulates_rows() {
        // [1,2] [0,0]   | 1 |   [1,2]
        // [3,3] [1,1] * | 1 | = [4,4]
        let mut m = IntervalMatrix::zeros(2, 2);
        m.set(0, 0, Interval::new(1.0, 2.0));
        m.set(1, 0, Interval::point(3.0));
        m.set(1, 1, Interval::point(1.0));
        let g = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let prod = m.mul_point(&g);
        assert_eq!(prod.get(0, 0), Interval::new(1.0, 2.0));
        assert_eq!(prod.get(1, 0), Interval::point(4.0));
    }

    #[test]
    fn mid_and_radius_summaries() {
        let mut m = IntervalMatrix::zeros(2, 2);
        m.set(0, 0, Interval::new(0.9, 1.1));
        m.set(0, 1, Interval::new(-0.1, 0.1));
        m.set(1, 1, Interval::point(2.0));
        let mid = m.mid_matrix();
        assert_eq!(mid[(0, 0)], 1.0);
        assert_eq!(mid[(0, 1)], 0.0);
        assert_eq!(mid[(1, 1)], 2.0);
        let rad = m.row_radius_sums();
        assert_abs_diff_eq!(rad[0], 0.2, epsilon = 1e-15);
        assert_eq!(rad[1], 0.0);
    }
}
