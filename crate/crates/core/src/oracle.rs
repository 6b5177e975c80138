//! Closed-form reference solutions.
//!
//! The dead-core example: for `0 ≤ γ < 2q`, `q < γ + 1` and
//! `r = (γ+2)/(γ+1−q)`, the profile `v = sin^r(x)/r` on `[0, π]`,
//! extended by zero on `(−π/2, 0]`, solves
//! `|v'|^γ v'' + a v^q = 0` on `(−π/2, π)` with
//! `a(x) = r^q |cos x|^γ (1 − r cos² x)`.

use std::f64::consts::PI;

use crate::eigen::EigenPair;
use crate::error::{invalid, Result};
use crate::grid::{Grid, GridFunction, WeightSource};

/// Domain of the dead-core example.
pub const EXAMPLE_DOMAIN: (f64, f64) = (-PI / 2.0, PI);

pub(crate) fn check_window(gamma: f64, q: f64) -> Result<()> {
    if !(gamma.is_finite() && q.is_finite()) {
        return invalid("γ and q must be finite");
    }
    if gamma < 0.0 {
        return invalid(format!("example needs 0 ≤ γ (got γ={gamma})"));
    }
    if q < 0.0 {
        return invalid(format!("example needs 0 ≤ q (got q={q})"));
    }
    if q >= gamma + 1.0 {
        return invalid(format!("example needs q < γ+1 (got γ={gamma}, q={q})"));
    }
    if gamma >= 2.0 * q {
        return invalid(format!("example needs γ < 2q (got γ={gamma}, q={q})"));
    }
    Ok(())
}

pub(crate) fn example_weight(gamma: f64, q: f64, x: f64) -> f64 {
    let r = (gamma + 2.0) / (gamma + 1.0 - q);
    let c = x.cos();
    r.powf(q) * c.abs().powf(gamma) * (1.0 - r * c * c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleInstance {
    pub gamma: f64,
    pub q: f64,
    pub r: f64,
}

pub fn example_instance(gamma: f64, q: f64) -> Result<ExampleInstance> {
    check_window(gamma, q)?;
    Ok(ExampleInstance {
        gamma,
        q,
        r: (gamma + 2.0) / (gamma + 1.0 - q),
    })
}

impl ExampleInstance {
    pub fn domain(&self) -> (f64, f64) {
        EXAMPLE_DOMAIN
    }

    pub fn v(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            x.sin().max(0.0).powf(self.r) / self.r
        }
    }

    pub fn dv(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            x.sin().max(0.0).powf(self.r - 1.0) * x.cos()
        }
    }

    pub fn d2v(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            let c = x.cos();
            (self.r * c * c - 1.0) * x.sin().max(0.0).powf(self.r - 2.0)
        }
    }

    pub fn a(&self, x: f64) -> f64 {
        example_weight(self.gamma, self.q, x)
    }

    /// `|a(0)| = r^q (r − 1)`.
    pub fn a_at_zero_abs(&self) -> f64 {
        self.r.powf(self.q) * (self.r - 1.0)
    }

    /// `|v'|^γ v'' + a v^q` at `x`.
    pub fn pde_defect(&self, x: f64) -> f64 {
        self.dv(x).abs().powf(self.gamma) * self.d2v(x) + self.a(x) * self.v(x).powf(self.q)
    }

    pub fn weight_source(&self) -> WeightSource {
        WeightSource::Example {
            gamma: self.gamma,
            q: self.q,
        }
    }

    /// Grid on the example domain with `n` interior nodes.
    pub fn grid(&self, n: usize) -> Result<Grid> {
        Grid::new_1d(EXAMPLE_DOMAIN.0, EXAMPLE_DOMAIN.1, n)
    }

    /// `v` at the nodes of `grid` (boundary values are exactly 0).
    pub fn sample(&self, grid: Grid) -> Result<GridFunction> {
        GridFunction::from_fn(grid, |x| self.v(x[0]))
    }
}

/// Analytic principal pair of `−φ'' = λφ` on `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceEigenpair {
    pub lo: f64,
    pub hi: f64,
    pub lambda: f64,
}

pub fn laplace_eigenpair_1d(lo: f64, hi: f64) -> Result<LaplaceEigenpair> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return invalid(format!("empty interval ({lo}, {hi})"));
    }
    Ok(LaplaceEigenpair {
        lo,
        hi,
        lambda: (PI / (hi - lo)).powi(2),
    })
}

impl LaplaceEigenpair {
    pub fn phi(&self, x: f64) -> f64 {
        (PI * (x - self.lo) / (self.hi - self.lo)).sin()
    }

    /// The analytic pair sampled on `grid` (no renormalisation).
    pub fn sample(&self, grid: Grid) -> Result<EigenPair> {
        let phi = GridFunction::from_fn(grid, |x| self.phi(x[0]))?;
        Ok(EigenPair::new(self.lambda, phi))
    }
}
