use std::fmt;
use std::sync::Arc;

use super::{Ball, CsvRow, Grid};
use crate::error::{invalid, Result};
use crate::oracle;

type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Where a weight `a(x)` comes from.
#[derive(Clone)]
pub enum WeightSource {
    /// The closed-form dead-core example weight `r^q |cos x|^γ (1 − r cos² x)`.
    Example { gamma: f64, q: f64 },
    /// `b⁺ − s b⁻` with `b(x) = Π sin(π x_i)`.
    SinSplit { s: f64 },
    Constant { c: f64 },
    /// One value per grid node, in storage order.
    Tabulated { values: Vec<f64> },
    /// `c · a`.
    Scaled { c: f64, inner: Box<WeightSource> },
    /// `a⁺ − s a⁻`.
    SplitScaled { s: f64, inner: Box<WeightSource> },
    Function {
        name: String,
        f: PointFn,
    },
}

impl fmt::Debug for WeightSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl WeightSource {
    pub fn function(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        WeightSource::Function {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn scaled(self, c: f64) -> Self {
        WeightSource::Scaled { c, inner: Box::new(self) }
    }

    pub fn split_scaled(self, s: f64) -> Self {
        WeightSource::SplitScaled { s, inner: Box::new(self) }
    }

    pub fn describe(&self) -> String {
        match self {
            WeightSource::Example { gamma, q } => format!("example(gamma={gamma},q={q})"),
            WeightSource::SinSplit { s } => format!("sinsplit(s={s})"),
            WeightSource::Constant { c } => format!("constant({c})"),
            WeightSource::Tabulated { values } => format!("tabulated({} values)", values.len()),
            WeightSource::Scaled { c, inner } => format!("{c}*{}", inner.describe()),
            WeightSource::SplitScaled { s, inner } => format!("split(s={s},{})", inner.describe()),
            WeightSource::Function { name, .. } => format!("function({name})"),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            WeightSource::Example { gamma, q } => oracle::check_window(*gamma, *q),
            WeightSource::SinSplit { s } if !(s.is_finite() && *s >= 0.0) => invalid(format!("sinsplit needs s ≥ 0 (got {s})")),
            WeightSource::Constant { c } if !c.is_finite() => invalid("constant weight must be finite"),
            WeightSource::Scaled { c, inner } => {
                if !(c.is_finite() && *c > 0.0) {
                    return invalid(format!("weight scale must be > 0 (got {c})"));
                }
                inner.validate()
            }
            WeightSource::SplitScaled { s, inner } => {
                if !(s.is_finite() && *s >= 0.0) {
                    return invalid(format!("negative-part scale must be ≥ 0 (got {s})"));
                }
                inner.validate()
            }
            _ => Ok(()),
        }
    }

    /// Pointwise value for continuous sources; `None` for tabulated data.
    pub fn eval(&self, x: &[f64]) -> Option<f64> {
        Some(match self {
            WeightSource::Example { gamma, q } => oracle::example_weight(*gamma, *q, x[0]),
            WeightSource::SinSplit { s } => {
                let b: f64 = x.iter().map(|&t| (std::f64::consts::PI * t).sin()).product();
                b.max(0.0) - s * (-b).max(0.0)
            }
            WeightSource::Constant { c } => *c,
            WeightSource::Tabulated { .. } => return None,
            WeightSource::Scaled { c, inner } => c * inner.eval(x)?,
            WeightSource::SplitScaled { s, inner } => {
                let a = inner.eval(x)?;
                a.max(0.0) - s * (-a).max(0.0)
            }
            WeightSource::Function { f, .. } => f(x),
        })
    }
}

/// Overall sign pattern of a sampled weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightSign {
    Zero,
    NonNegative,
    NonPositive,
    SignChanging,
}

/// A weight sampled at every node of a grid, with its positive and
/// negative parts.
#[derive(Debug, Clone)]
pub struct WeightField {
    grid: Grid,
    source: WeightSource,
    values: Vec<f64>,
    plus: Vec<f64>,
    minus: Vec<f64>,
}

impl WeightField {
    pub fn sample(grid: Grid, source: WeightSource) -> Result<Self> {
        source.validate()?;
        let values = match &source {
            WeightSource::Tabulated { values } => {
                if values.len() != grid.len() {
                    return invalid(format!("tabulated weight has {} values, grid has {} nodes", values.len(), grid.len()));
                }
                values.clone()
            }
            WeightSource::Scaled { c, inner } if matches!(**inner, WeightSource::Tabulated { .. }) => {
                Self::sample(grid, (**inner).clone())?.values.iter().map(|v| c * v).collect()
            }
            WeightSource::SplitScaled { s, inner } if matches!(**inner, WeightSource::Tabulated { .. }) => Self::sample(grid, (**inner).clone())?
                .values
                .iter()
                .map(|&v| v.max(0.0) - s * (-v).max(0.0))
                .collect(),
            src => (0..grid.len())
                .map(|k| {
                    let c = grid.coord(k);
                    src.eval(&c[..grid.dim()]).expect("continuous source")
                })
                .collect(),
        };
        if let Some(k) = values.iter().position(|v: &f64| !v.is_finite()) {
            return invalid(format!("weight is not finite at node {k}"));
        }
        let plus = values.iter().map(|&v| v.max(0.0)).collect();
        let minus = values.iter().map(|&v| (-v).max(0.0)).collect();
        Ok(WeightField {
            grid,
            source,
            values,
            plus,
            minus,
        })
    }

    /// Tabulated weight from CSV rows; every grid node must be present.
    pub fn from_rows(grid: Grid, rows: &[CsvRow]) -> Result<Self> {
        let f = super::io::grid_function_from_rows(grid, rows)?;
        Self::sample(grid, WeightSource::Tabulated { values: f.into_values() })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn source(&self) -> &WeightSource {
        &self.source
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn plus(&self) -> &[f64] {
        &self.plus
    }

    pub fn minus(&self) -> &[f64] {
        &self.minus
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn sup_norm(&self) -> f64 {
        super::sup_norm_slice(&self.values)
    }

    pub fn minus_sup(&self) -> f64 {
        self.minus.iter().cloned().fold(0.0, f64::max)
    }

    pub fn sign(&self) -> WeightSign {
        let pos = self.plus.iter().any(|&v| v > 0.0);
        let neg = self.minus.iter().any(|&v| v > 0.0);
        match (pos, neg) {
            (false, false) => WeightSign::Zero,
            (true, false) => WeightSign::NonNegative,
            (false, true) => WeightSign::NonPositive,
            (true, true) => WeightSign::SignChanging,
        }
    }

    /// Minimum of `a` over the grid nodes inside `ball` (`+∞` if none).
    pub fn min_over(&self, ball: &Ball) -> f64 {
        (0..self.grid.len())
            .filter(|&k| ball.contains(&self.grid.coord(k)[..self.grid.dim()]))
            .map(|k| self.values[k])
            .fold(f64::INFINITY, f64::min)
    }

    /// `c · a` on the same grid.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::sample(self.grid, self.source.clone().scaled(c))
    }

    /// The same source resampled on another grid.
    pub fn resample(&self, grid: Grid) -> Result<Self> {
        Self::sample(grid, self.source.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_parts_recombine() {
        let g = Grid::new_1d(0.0, 2.0, 39).unwrap();
        let w = WeightField::sample(g, WeightSource::SinSplit { s: 0.7 }).unwrap();
        assert_eq!(w.sign(), WeightSign::SignChanging);
        for k in 0..g.len() {
            assert!(w.plus()[k] >= 0.0 && w.minus()[k] >= 0.0);
            assert_eq!(w.plus()[k] - w.minus()[k], w.get(k));
        }
        assert!((w.minus_sup() - 0.7).abs() < 1e-12);
        // sampled exactly at nodes
        let x = g.coord(5)[0];
        assert_eq!(w.get(5), (std::f64::consts::PI * x).sin());
    }

    #[test]
    fn scaled_and_split_sources() {
        let g = Grid::new_1d(0.0, 2.0, 19).unwrap();
        let base = WeightSource::SinSplit { s: 1.0 };
        let w = WeightField::sample(g, base.clone().scaled(4.0)).unwrap();
        let w0 = WeightField::sample(g, base.clone()).unwrap();
        for k in 0..g.len() {
            assert_eq!(w.get(k), 4.0 * w0.get(k));
        }
        let w = WeightField::sample(g, base.split_scaled(0.0)).unwrap();
        assert_eq!(w.sign(), WeightSign::NonNegative);
        assert!(WeightField::sample(g, WeightSource::Constant { c: 1.0 }.scaled(-1.0)).is_err());
    }

    #[test]
    fn tabulated_length_checked() {
        let g = Grid::new_1d(0.0, 1.0, 4).unwrap();
        assert!(WeightField::sample(g, WeightSource::Tabulated { values: vec![1.0; 5] }).is_err());
        let w = WeightField::sample(g, WeightSource::Tabulated { values: vec![-1.0; 6] }.scaled(2.0)).unwrap();
        assert_eq!(w.get(3), -2.0);
        assert_eq!(w.sign(), WeightSign::NonPositive);
    }

    #[test]
    fn min_over_ball() {
        let g = Grid::new_1d(0.0, 1.0, 9).unwrap();
        let w = WeightField::sample(g, WeightSource::function("x", |x| x[0])).unwrap();
        assert!((w.min_over(&Ball::interval(0.25, 0.75)) - 0.3).abs() < 1e-12);
    }
}
