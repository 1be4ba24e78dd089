//! Zonotopes: centrally symmetric convex sets `{c + G xi : xi in [-1,1]^m}`
//! given by a center `c` and a generator matrix `G` whose columns are the
//! generators.
//!
//! Zonotopes are closed under linear maps and Minkowski sums, which is what
//! makes them the working set representation of the predictor. The operations
//! here either preserve the represented set exactly (maps, sums, projections)
//! or over-approximate it in a controlled way (generator reduction, enclosure
//! of an interval generator matrix).

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalMatrix};
use crate::lp;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Generator columns with norm at or below this are dropped by
/// [`Zonotope::remove_null_generators`] callers that use the default.
pub const NULL_GENERATOR_THRESHOLD: f64 = 1e-12;

/// Default angular tolerance (radians) for merging near-parallel generators.
pub const PARALLEL_ANGLE_TOL: f64 = 1e-9;

/// Default slack for point containment queries.
pub const CONTAINMENT_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ZonotopeRepr", into = "ZonotopeRepr")]
pub struct Zonotope {
    center: DVector<f64>,
    generators: DMatrix<f64>,
}

/// Serialized form: generators as a list of column vectors.
#[derive(Serialize, Deserialize)]
struct ZonotopeRepr {
    center: Vec<f64>,
    generators: Vec<Vec<f64>>,
}

impl From<Zonotope> for ZonotopeRepr {
    fn from(z: Zonotope) -> Self {
        let generators = z
            .generators
            .column_iter()
            .map(|c| c.iter().cloned().collect())
            .collect();
        Self { center: z.center.iter().cloned().collect(), generators }
    }
}

impl TryFrom<ZonotopeRepr> for Zonotope {
    type Error = Error;

    fn try_from(r: ZonotopeRepr) -> Result<Self> {
        let dim = r.center.len();
        let mut g = DMatrix::zeros(dim, r.generators.len());
        for (j, col) in r.generators.iter().enumerate() {
            if col.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "generator {j} has {} entries, center has {dim}",
                    col.len()
                )));
            }
            for (i, v) in col.iter().enumerate() {
                g[(i, j)] = *v;
            }
        }
        Zonotope::new(DVector::from_vec(r.center), g)
    }
}

impl Zonotope {
    pub fn new(center: DVector<f64>, generators: DMatrix<f64>) -> Result<Self> {
        if generators.nrows() != center.len() {
            return Err(Error::DimensionMismatch(format!(
                "center has dimension {}, generators have {} rows",
                center.len(),
                generators.nrows()
            )));
        }
        Ok(Self { center, generators })
    }

    /// Point zonotope (no generators).
    pub fn point(center: DVector<f64>) -> Self {
        let dim = center.len();
        Self { center, generators: DMatrix::zeros(dim, 0) }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.ncols()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.generators
    }

    /// Tight axis-aligned bounding box: `[c_i - sum_j |G_ij|, c_i + sum_j |G_ij|]`.
    pub fn interval_hull(&self) -> Vec<Interval> {
        (0..self.dim())
            .map(|i| {
                let r: f64 = self.generators.row(i).iter().map(|v| v.abs()).sum();
                Interval::from_mid_rad(self.center[i], r)
            })
            .collect()
    }

    /// Image under a linear map `M`: center and generators map through `M`.
    pub fn linear_map(&self, m: &DMatrix<f64>) -> Result<Zonotope> {
        if m.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "map has {} columns, zonotope has dimension {}",
                m.ncols(),
                self.dim()
            )));
        }
        Ok(Zonotope { center: m * &self.center, generators: m * &self.generators })
    }

    /// Minkowski sum: centers add, generator columns concatenate.
    pub fn minkowski_sum(&self, other: &Zonotope) -> Result<Zonotope> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot sum zonotopes of dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        let mut g = DMatrix::zeros(self.dim(), self.num_generators() + other.num_generators());
        g.view_mut((0, 0), (self.dim(), self.num_generators()))
            .copy_from(&self.generators);
        g.view_mut((0, self.num_generators()), (self.dim(), other.num_generators()))
            .copy_from(&other.generators);
        Ok(Zonotope { center: &self.center + &other.center, generators: g })
    }

    /// Projection onto the listed coordinates (0-based), in the given order.
    pub fn project(&self, dims: &[usize]) -> Result<Zonotope> {
        for &d in dims {
            if d >= self.dim() {
                return Err(Error::IndexOutOfBounds { index: d, dim: self.dim() });
            }
        }
        let center = DVector::from_fn(dims.len(), |i, _| self.center[dims[i]]);
        let generators =
            DMatrix::from_fn(dims.len(), self.num_generators(), |i, j| self.generators[(dims[i], j)]);
        Ok(Zonotope { center, generators })
    }

    /// Whether `p` lies within the zonotope dilated by `tol` in every axis,
    /// i.e. whether some coefficient vector reproduces `p` up to `tol` in the
    /// infinity norm.
    ///
    /// In the plane this is decided exactly through the facet inequalities of
    /// the zonotope; in higher dimensions a small feasibility program finds
    /// the best coefficient vector.
    pub fn contains_point(&self, p: &DVector<f64>, tol: f64) -> bool {
        assert_eq!(p.len(), self.dim(), "point dimension mismatch");
        assert!(tol >= 0.0, "containment tolerance must be nonnegative");
        if self.dim() == 2 {
            self.contains_point_2d(p, tol)
        } else {
            self.contains_point_lp(p, tol)
        }
    }

    fn contains_point_2d(&self, p: &DVector<f64>, tol: f64) -> bool {
        let d = [p[0] - self.center[0], p[1] - self.center[1]];
        let mut gens: Vec<[f64; 2]> = self
            .generators
            .column_iter()
            .map(|g| [g[0], g[1]])
            .filter(|g| g[0] != 0.0 || g[1] != 0.0)
            .collect();
        if tol > 0.0 {
            // Dilation by tol also makes the set full-dimensional, so the
            // facet normals below are exactly the generator perpendiculars.
            gens.push([tol, 0.0]);
            gens.push([0.0, tol]);
        }
        let scale = 1.0 + d[0].abs() + d[1].abs();
        let slack = 1e-12 * scale;
        if gens.is_empty() {
            return d[0].abs() <= slack && d[1].abs() <= slack;
        }
        let full_rank = gens.iter().any(|a| {
            gens.iter().any(|b| {
                let cross = a[0] * b[1] - a[1] * b[0];
                cross.abs() > 1e-14 * (norm2(a) * norm2(b))
            })
        });
        if !full_rank {
            // All generators parallel: a segment. Split the offset into
            // along-track and cross-track parts.
            let g0 = gens
                .iter()
                .cloned()
                .max_by(|a, b| norm2(a).total_cmp(&norm2(b)))
                .unwrap();
            let n = norm2(&g0);
            let u = [g0[0] / n, g0[1] / n];
            let along = d[0] * u[0] + d[1] * u[1];
            let perp = u[0] * d[1] - u[1] * d[0];
            let extent: f64 = gens.iter().map(|g| (g[0] * u[0] + g[1] * u[1]).abs()).sum();
            return perp.abs() <= slack && along.abs() <= extent + slack;
        }
        for g in &gens {
            let n = [-g[1], g[0]];
            let proj = d[0] * n[0] + d[1] * n[1];
            let support: f64 = gens.iter().map(|h| (h[0] * n[0] + h[1] * n[1]).abs()).sum();
            if proj.abs() > support + 1e-12 * (scale + support) {
                return false;
            }
        }
        true
    }

    /// Chebyshev feasibility program: minimize the infinity-norm residual of
    /// `c + G xi - p` over `xi in [-1,1]^m` and compare it against `tol`.
    fn contains_point_lp(&self, p: &DVector<f64>, tol: f64) -> bool {
        let n = self.dim();
        let m = self.num_generators();
        if m == 0 {
            return (0..n).all(|i| (p[i] - self.center[i]).abs() <= tol + 1e-12);
        }
        // Substitute xi = y - 1 with y in [0, 2]; then c + G xi - p = G y - d.
        let ones = DVector::from_element(m, 1.0);
        let d = p - &self.center + &self.generators * ones;
        // Columns: y (m), t, u (n), w (n), s (m).
        let cols = 2 * m + 2 * n + 1;
        let rows = 2 * n + m;
        let t = m;
        let mut a = DMatrix::zeros(rows, cols);
        let mut rhs = vec![0.0; rows];
        for i in 0..n {
            for j in 0..m {
                a[(i, j)] = self.generators[(i, j)];
                a[(n + i, j)] = -self.generators[(i, j)];
            }
            a[(i, t)] = -1.0;
            a[(i, t + 1 + i)] = 1.0;
            rhs[i] = d[i];
            a[(n + i, t)] = -1.0;
            a[(n + i, t + 1 + n + i)] = 1.0;
            rhs[n + i] = -d[i];
        }
        for j in 0..m {
            a[(2 * n + j, j)] = 1.0;
            a[(2 * n + j, t + 1 + 2 * n + j)] = 1.0;
            rhs[2 * n + j] = 2.0;
        }
        let mut objective = vec![0.0; cols];
        objective[t] = 1.0;
        let sol = lp::solve(&lp::StandardForm { objective, constraints: a, rhs })
            .expect("residual minimization is always feasible and bounded");
        let scale = 1.0 + p.amax() + self.center.amax();
        sol.objective <= tol + 1e-12 * scale
    }

    /// Drops generator columns with Euclidean norm at or below `threshold`.
    pub fn remove_null_generators(&self, threshold: f64) -> Zonotope {
        let keep: Vec<usize> = (0..self.num_generators())
            .filter(|&j| self.generators.column(j).norm() > threshold)
            .collect();
        self.keep_columns(&keep, 0)
    }

    /// Merges generator columns that are parallel within `angle_tol` radians
    /// (sign-insensitive) into a single column whose norm is the sum of the
    /// merged norms. Exactly parallel merges preserve the set exactly; within
    /// tolerance the change is below the tolerance itself. Zero columns pass
    /// through untouched.
    pub fn merge_parallel_generators(&self, angle_tol: f64) -> Zonotope {
        struct Group {
            unit: DVector<f64>,
            total_norm: f64,
        }
        let mut groups: Vec<Group> = Vec::new();
        let mut zero_cols = 0usize;
        for col in self.generators.column_iter() {
            let norm = col.norm();
            if norm == 0.0 {
                zero_cols += 1;
                continue;
            }
            let unit = col / norm;
            let mut merged = false;
            for grp in groups.iter_mut() {
                // Chord length approximates angle for the tiny tolerances
                // used here; check both orientations.
                let d_plus = (&unit - &grp.unit).norm();
                let d_minus = (&unit + &grp.unit).norm();
                if d_plus.min(d_minus) <= angle_tol {
                    grp.total_norm += norm;
                    merged = true;
                    break;
                }
            }
            if !merged {
                groups.push(Group { unit: unit.clone_owned(), total_norm: norm });
            }
        }
        let mut g = DMatrix::zeros(self.dim(), groups.len() + zero_cols);
        for (j, grp) in groups.iter().enumerate() {
            g.set_column(j, &(&grp.unit * grp.total_norm));
        }
        // Trailing zero columns keep the count honest for callers that track it.
        Zonotope { center: self.center.clone(), generators: g }
    }

    /// Over-approximates with at most `budget` generators: the
    /// `budget - dim` columns of largest Euclidean norm survive (ties broken
    /// by column index), the rest are replaced by the axis-aligned box of
    /// their partial sum.
    pub fn reduce_generators(&self, budget: usize) -> Result<Zonotope> {
        let n = self.dim();
        if budget < n {
            return Err(Error::BudgetTooSmall { budget, dim: n });
        }
        let m = self.num_generators();
        if m <= budget {
            return Ok(self.clone());
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            let na = self.generators.column(a).norm();
            let nb = self.generators.column(b).norm();
            nb.total_cmp(&na).then(a.cmp(&b))
        });
        let kept: Vec<usize> = {
            let mut k = order[..budget - n].to_vec();
            k.sort_unstable();
            k
        };
        let mut box_radii = vec![0.0; n];
        for &j in &order[budget - n..] {
            for i in 0..n {
                box_radii[i] += self.generators[(i, j)].abs();
            }
        }
        let extra: Vec<usize> = (0..n).filter(|&i| box_radii[i] > 0.0).collect();
        let mut g = DMatrix::zeros(n, kept.len() + extra.len());
        for (out, &j) in kept.iter().enumerate() {
            g.set_column(out, &self.generators.column(j));
        }
        for (out, &i) in extra.iter().enumerate() {
            g[(i, kept.len() + out)] = box_radii[i];
        }
        Ok(Zonotope { center: self.center.clone(), generators: g })
    }

    /// Minkowski sum with the axis-aligned box of the given radii: appends
    /// one axis generator per strictly positive radius.
    pub fn dilate(&self, radii: &[f64]) -> Result<Zonotope> {
        if radii.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} dilation radii for dimension {}",
                radii.len(),
                self.dim()
            )));
        }
        for &r in radii {
            if r < 0.0 {
                return Err(Error::NegativeRadius(r));
            }
        }
        let extra: Vec<usize> = (0..self.dim()).filter(|&i| radii[i] > 0.0).collect();
        let m = self.num_generators();
        let mut g = DMatrix::zeros(self.dim(), m + extra.len());
        g.view_mut((0, 0), (self.dim(), m)).copy_from(&self.generators);
        for (out, &i) in extra.iter().enumerate() {
            g[(i, m + out)] = radii[i];
        }
        Ok(Zonotope { center: self.center.clone(), generators: g })
    }

    fn keep_columns(&self, keep: &[usize], extra_capacity: usize) -> Zonotope {
        let mut g = DMatrix::zeros(self.dim(), keep.len() + extra_capacity);
        for (out, &j) in keep.iter().enumerate() {
            g.set_column(out, &self.generators.column(j));
        }
        Zonotope { center: self.center.clone(), generators: g }
    }
}

fn norm2(v: &[f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Encloses the whole family `{c + M xi : M in intervals, xi in [-1,1]^m}`
/// with a single zonotope: generators are the midpoint columns plus one axis
/// generator per row carrying that row's total radius.
pub fn zonotope_inclusion(center: DVector<f64>, m: &IntervalMatrix) -> Result<Zonotope> {
    if center.len() != m.rows() {
        return Err(Error::DimensionMismatch(format!(
            "center has dimension {}, interval matrix has {} rows",
            center.len(),
            m.rows()
        )));
    }
    let n = m.rows();
    let mid = m.mid_matrix();
    let rad = m.row_radius_sums();
    let mut g = DMatrix::zeros(n, m.cols() + n);
    g.view_mut((0, 0), (n, m.cols())).copy_from(&mid);
    for i in 0..n {
        g[(i, m.cols() + i)] = rad[i];
    }
    Zonotope::new(center, g)
}
