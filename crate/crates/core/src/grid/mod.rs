//! Structured grids on intervals and rectangles, fields sampled on them,
//! and the monotone finite-difference scheme.

mod io;
mod scheme;
mod weight;

pub use io::{grid_function_from_rows, read_csv_rows, write_csv, CsvRow};
pub use scheme::{
    discrete_f, discrete_hessian, gradient, one_sided_gradient, residual, directions, Direction,
    DirectionSet, DirectionalDifference, NodeEval, Scheme,
};
pub use weight::{WeightField, WeightSign, WeightSource};

use crate::error::{invalid, Error, Result};

/// Uniform tensor grid on `[lo, hi]` (1-D) or a rectangle (2-D).
///
/// Node `i` along an axis sits at `lo + i h` for `i = 0..=n+1`; nodes `0`
/// and `n+1` are boundary nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    n: [usize; 2],
    h: [f64; 2],
}

impl Grid {
    pub fn new_1d(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::build(1, [lo, 0.0], [hi, 0.0], [n, 0])
    }

    pub fn new_2d(x: (f64, f64), y: (f64, f64), n: [usize; 2]) -> Result<Self> {
        Self::build(2, [x.0, y.0], [x.1, y.1], n)
    }

    fn build(dim: usize, lo: [f64; 2], hi: [f64; 2], n: [usize; 2]) -> Result<Self> {
        let mut h = [0.0; 2];
        for a in 0..dim {
            if !(lo[a].is_finite() && hi[a].is_finite() && lo[a] < hi[a]) {
                return invalid(format!("axis {a}: bounds must satisfy lo < hi (got [{}, {}])", lo[a], hi[a]));
            }
            if n[a] < 3 {
                return invalid(format!("axis {a}: need n ≥ 3 interior points (got {})", n[a]));
            }
            h[a] = (hi[a] - lo[a]) / (n[a] + 1) as f64;
        }
        Ok(Grid { dim, lo, hi, n, h })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.lo[axis]
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.hi[axis]
    }

    /// Interior point count along `axis`.
    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    pub fn h_max(&self) -> f64 {
        self.h[..self.dim].iter().cloned().fold(0.0, f64::max)
    }

    pub fn h_min(&self) -> f64 {
        self.h[..self.dim].iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Node counts including boundary nodes, `[nx+2, ny+2]` (`ny+2 = 1` in 1-D).
    pub fn shape(&self) -> [usize; 2] {
        if self.dim == 1 {
            [self.n[0] + 2, 1]
        } else {
            [self.n[0] + 2, self.n[1] + 2]
        }
    }

    pub fn len(&self) -> usize {
        let s = self.shape();
        s[0] * s[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn interior_len(&self) -> usize {
        (0..self.dim).map(|a| self.n[a]).product()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.shape()[0] * j
    }

    pub fn ij(&self, idx: usize) -> (usize, usize) {
        let w = self.shape()[0];
        (idx % w, idx / w)
    }

    pub fn coord(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.ij(idx);
        let x = self.lo[0] + i as f64 * self.h[0];
        let y = if self.dim == 2 { self.lo[1] + j as f64 * self.h[1] } else { 0.0 };
        [x, y]
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        let (i, j) = self.ij(idx);
        let s = self.shape();
        let xin = i >= 1 && i + 1 < s[0];
        if self.dim == 1 {
            xin
        } else {
            xin && j >= 1 && j + 1 < s[1]
        }
    }

    /// Interior node indices in storage order.
    pub fn interior(&self) -> Vec<usize> {
        let s = self.shape();
        if self.dim == 1 {
            (1..s[0] - 1).collect()
        } else {
            let mut v = Vec::with_capacity(self.interior_len());
            for j in 1..s[1] - 1 {
                for i in 1..s[0] - 1 {
                    v.push(self.index(i, j));
                }
            }
            v
        }
    }

    pub fn boundary(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| !self.is_interior(k)).collect()
    }

    /// Offset neighbour of `idx`, or `None` outside the node array.
    pub fn offset(&self, idx: usize, di: isize, dj: isize) -> Option<usize> {
        let (i, j) = self.ij(idx);
        let s = self.shape();
        let ni = i as isize + di;
        let nj = j as isize + dj;
        if ni < 0 || nj < 0 || ni >= s[0] as isize || nj >= s[1] as isize {
            return None;
        }
        Some(self.index(ni as usize, nj as usize))
    }

    /// Distance from node `idx` to the boundary of the box.
    pub fn boundary_distance(&self, idx: usize) -> f64 {
        let c = self.coord(idx);
        (0..self.dim)
            .map(|a| (c[a] - self.lo[a]).min(self.hi[a] - c[a]))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }

    /// Same box with `2n + 1` interior points per axis (spacing halved).
    pub fn refine(&self) -> Grid {
        let mut g = *self;
        for a in 0..self.dim {
            g.n[a] = 2 * self.n[a] + 1;
            g.h[a] = (g.hi[a] - g.lo[a]) / (g.n[a] + 1) as f64;
        }
        g
    }

    /// The sub-grid whose interior consists of the nodes of `self` lying
    /// strictly inside `ball`, with matching spacing. Returns the sub-grid
    /// and, for each sub-grid node, the matching node of `self`.
    pub fn sub_grid(&self, ball: &Ball) -> Result<(Grid, Vec<usize>)> {
        let mut first = [0usize; 2];
        let mut count = [0usize; 2];
        for a in 0..self.dim {
            let i0 = ((ball.lo[a] - self.lo[a]) / self.h[a]).floor() as isize + 1;
            let i1 = ((ball.hi[a] - self.lo[a]) / self.h[a]).ceil() as isize - 1;
            let i0 = i0.max(1) as usize;
            let i1 = i1.min(self.n[a] as isize) as usize;
            if i1 < i0 + 2 {
                return invalid(format!("ball {ball:?} holds fewer than 3 grid points along axis {a}"));
            }
            first[a] = i0;
            count[a] = i1 - i0 + 1;
        }
        let lo: Vec<f64> = (0..self.dim).map(|a| self.lo[a] + (first[a] - 1) as f64 * self.h[a]).collect();
        let sub = if self.dim == 1 {
            let hi = lo[0] + (count[0] + 1) as f64 * self.h[0];
            let mut g = Grid::new_1d(lo[0], hi, count[0])?;
            g.h[0] = self.h[0];
            g
        } else {
            let hx = lo[0] + (count[0] + 1) as f64 * self.h[0];
            let hy = lo[1] + (count[1] + 1) as f64 * self.h[1];
            let mut g = Grid::new_2d((lo[0], hx), (lo[1], hy), count)?;
            g.h = self.h;
            g
        };
        let map = (0..sub.len())
            .map(|k| {
                let (i, j) = sub.ij(k);
                let jj = if self.dim == 2 { j + first[1] - 1 } else { 0 };
                self.index(i + first[0] - 1, jj)
            })
            .collect();
        Ok((sub, map))
    }
}

/// Axis-aligned box `[lo, hi]` (an interval in 1-D).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Ball {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Ball { lo: [lo, 0.0], hi: [hi, 0.0] }
    }

    pub fn rect(x: (f64, f64), y: (f64, f64)) -> Self {
        Ball { lo: [x.0, y.0], hi: [x.1, y.1] }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().enumerate().all(|(a, &v)| v > self.lo[a] && v < self.hi[a])
    }
}

/// Values of a scalar field at every node (boundary included).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        GridFunction {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f` at interior nodes; boundary nodes are set to 0.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mut values = vec![0.0; grid.len()];
        for k in grid.interior() {
            let c = grid.coord(k);
            values[k] = f(&c[..grid.dim()]);
        }
        Self::from_values(grid, values)
    }

    /// Samples `f` at every node, boundary included.
    pub fn sample_all(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|k| {
                let c = grid.coord(k);
                f(&c[..grid.dim()])
            })
            .collect();
        Self::from_values(grid, values)
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return invalid(format!("expected {} values, got {}", grid.len(), values.len()));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain {
                node: k,
                reason: "non-finite value".into(),
            });
        }
        Ok(GridFunction { grid, values })
    }

    /// Like [`from_values`](Self::from_values) but also demands zero
    /// Dirichlet data.
    pub fn dirichlet(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let u = Self::from_values(grid, values)?;
        if let Some(k) = grid.boundary().into_iter().find(|&k| u.values[k] != 0.0) {
            return Err(Error::Domain {
                node: k,
                reason: format!("boundary value {} is not zero", u.values[k]),
            });
        }
        Ok(u)
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

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    /// Value at the node closest to `p`.
    pub fn at_point(&self, p: &[f64]) -> f64 {
        let g = &self.grid;
        let i = (((p[0] - g.lo(0)) / g.h(0)).round().max(0.0) as usize).min(g.shape()[0] - 1);
        let j = if g.dim() == 2 {
            (((p[1] - g.lo(1)) / g.h(1)).round().max(0.0) as usize).min(g.shape()[1] - 1)
        } else {
            0
        };
        self.values[g.index(i, j)]
    }

    pub fn scale(&self, t: f64) -> GridFunction {
        self.map(|v| t * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise `self − other` on the same grid.
    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        if self.grid != other.grid {
            return invalid("grid functions live on different grids");
        }
        Ok(GridFunction {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm_slice(&self.values)
    }

    pub fn interior_min(&self) -> f64 {
        self.grid
            .interior()
            .into_iter()
            .map(|k| self.values[k])
            .fold(f64::INFINITY, f64::min)
    }

    /// Zero extension of a sub-grid function onto `self.grid`.
    pub fn extend_from(grid: Grid, sub: &GridFunction, map: &[usize]) -> Result<GridFunction> {
        if map.len() != sub.values.len() {
            return invalid("sub-grid map length mismatch");
        }
        let mut values = vec![0.0; grid.len()];
        for (k, &g) in map.iter().enumerate() {
            values[g] = sub.values[k];
        }
        Self::from_values(grid, values)
    }
}

pub(crate) fn sup_norm_slice(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_indexing() {
        let g = Grid::new_1d(0.0, 1.0, 9).unwrap();
        assert_eq!(g.h(0), 0.1);
        assert_eq!(g.len(), 11);
        assert_eq!(g.interior(), (1..10).collect::<Vec<_>>());
        assert!((g.coord(10)[0] - 1.0).abs() < 1e-15);
        assert!(Grid::new_1d(0.0, 1.0, 2).is_err());
        assert!(Grid::new_1d(1.0, 0.0, 5).is_err());

        let g2 = Grid::new_2d((0.0, 1.0), (0.0, 2.0), [3, 4]).unwrap();
        assert_eq!(g2.shape(), [5, 6]);
        assert_eq!(g2.interior().len(), 12);
        assert_eq!(g2.h(1), 0.4);
        let k = g2.index(2, 3);
        assert_eq!(g2.ij(k), (2, 3));
        assert!(g2.is_interior(k));
        assert!(!g2.is_interior(g2.index(0, 3)));
        assert_eq!(g2.boundary().len(), 30 - 12);
    }

    #[test]
    fn refinement_halves_spacing() {
        let g = Grid::new_1d(0.0, std::f64::consts::PI, 100).unwrap();
        let r = g.refine();
        assert_eq!(r.n(0), 201);
        assert!((r.h(0) - g.h(0) / 2.0).abs() < 1e-16);
        // every coarse node is a fine node
        for k in 0..g.len() {
            assert!((r.coord(2 * k)[0] - g.coord(k)[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn sub_grid_shares_nodes() {
        let g = Grid::new_1d(0.0, 2.0, 199).unwrap();
        let (s, map) = g.sub_grid(&Ball::interval(0.25, 0.75)).unwrap();
        assert_eq!(s.h(0), g.h(0));
        for (k, &m) in map.iter().enumerate() {
            assert!((s.coord(k)[0] - g.coord(m)[0]).abs() < 1e-12);
        }
        let inner: Vec<f64> = s.interior().iter().map(|&k| s.coord(k)[0]).collect();
        assert!(inner.iter().all(|&x| x > 0.25 && x < 0.75));
        assert!(g.sub_grid(&Ball::interval(0.5, 0.51)).is_err());
    }

    #[test]
    fn grid_function_invariants() {
        let g = Grid::new_1d(0.0, 1.0, 4).unwrap();
        assert!(GridFunction::from_values(g, vec![0.0, 1.0, f64::NAN, 0.0, 0.0, 0.0]).is_err());
        assert!(GridFunction::dirichlet(g, vec![0.1, 1.0, 1.0, 0.0, 0.0, 0.0]).is_err());
        let u = GridFunction::from_fn(g, |x| 1.0 + x[0]).unwrap();
        assert_eq!(u.get(0), 0.0);
        assert_eq!(u.get(5), 0.0);
        assert_eq!(u.scale(3.0).sup_norm(), 3.0 * u.sup_norm());
    }
}
