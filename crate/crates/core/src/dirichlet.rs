//! Dirichlet problems with a prescribed right-hand side,
//! `|Du|^γ F(x, D²u) = f` in Ω, `u = 0` on ∂Ω.

use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::grid::{sup_norm_slice, DirectionSet, Grid, GridFunction, Scheme};
use crate::march::{self, MarchConfig, Source};
use crate::operators::OperatorSpec;

/// Integrator used by the grid solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Explicit pseudo-time relaxation under the monotone step restriction.
    Relaxation,
    /// Pseudo-transient continuation (backward Euler + Newton).
    Newton,
    /// Newton first, relaxation if it stalls.
    #[default]
    Hybrid,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "relaxation" => Ok(Method::Relaxation),
            "newton" => Ok(Method::Newton),
            "hybrid" => Ok(Method::Hybrid),
            _ => invalid(format!("unknown method '{s}' (expected relaxation, newton or hybrid)")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Relaxation => "relaxation",
            Method::Newton => "newton",
            Method::Hybrid => "hybrid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationControl {
    pub max_steps: usize,
    /// Sup-norm of the equation residual at which a solve is declared converged.
    pub tolerance: f64,
    /// Pseudo-time safety factor in `(0, 1]`.
    pub safety: f64,
    pub method: Method,
}

impl Default for IterationControl {
    fn default() -> Self {
        IterationControl {
            max_steps: 1_000_000,
            tolerance: 1e-8,
            safety: 0.9,
            method: Method::Hybrid,
        }
    }
}

impl IterationControl {
    pub fn new(max_steps: usize, tolerance: f64, safety: f64) -> Result<Self> {
        let c = IterationControl {
            max_steps,
            tolerance,
            safety,
            method: Method::default(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return invalid(format!("tolerance must be > 0 (got {})", self.tolerance));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return invalid(format!("safety factor must lie in (0, 1] (got {})", self.safety));
        }
        if self.max_steps == 0 {
            return invalid("max_steps must be ≥ 1");
        }
        Ok(())
    }

    pub(crate) fn march_config(&self, clamp: bool, bound: Option<f64>) -> MarchConfig {
        MarchConfig {
            tolerance: self.tolerance,
            max_steps: self.max_steps,
            safety: self.safety,
            method: self.method,
            clamp,
            bound,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxSteps,
    Diverged,
}

impl SolveStatus {
    pub fn name(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxSteps => "max_steps",
            SolveStatus::Diverged => "diverged",
        }
    }
}

/// `|Du|^γ F(x, D²u) = f`, `u = 0` on the boundary.
#[derive(Debug, Clone)]
pub struct RhsProblem {
    spec: OperatorSpec,
    f: GridFunction,
    scheme: Arc<Scheme>,
}

impl RhsProblem {
    pub fn new(spec: OperatorSpec, gamma: f64, f: GridFunction) -> Result<Self> {
        Self::with_directions(spec, gamma, f, DirectionSet::Compact)
    }

    pub fn with_directions(spec: OperatorSpec, gamma: f64, f: GridFunction, set: DirectionSet) -> Result<Self> {
        let scheme = Scheme::new(*f.grid(), &spec, gamma, set)?;
        Ok(RhsProblem {
            spec,
            f,
            scheme: Arc::new(scheme),
        })
    }

    /// Reuses an existing scheme (same grid, operator and γ).
    pub(crate) fn from_scheme(spec: OperatorSpec, scheme: Arc<Scheme>, f: GridFunction) -> Result<Self> {
        if f.grid() != scheme.grid() {
            return invalid("right-hand side lives on a different grid");
        }
        Ok(RhsProblem { spec, f, scheme })
    }

    pub fn grid(&self) -> &Grid {
        self.scheme.grid()
    }

    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    pub fn gamma(&self) -> f64 {
        self.scheme.gamma()
    }

    pub fn f(&self) -> &GridFunction {
        &self.f
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    /// Sup-norm of `|∇_h u|_δ^γ F_h(u) − f` over interior nodes.
    pub fn residual_sup(&self, u: &GridFunction) -> f64 {
        sup_norm_slice(&march::residual(&self.scheme, Source::Rhs(self.f.values()), u.values()))
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: GridFunction,
    pub residual_sup: f64,
    pub steps: usize,
    pub status: SolveStatus,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

pub fn solve_rhs(p: &RhsProblem, ctl: &IterationControl) -> Result<SolveReport> {
    solve_rhs_from(p, ctl, GridFunction::zeros(*p.grid()))
}

/// As [`solve_rhs`], starting from `init` (boundary values are reset to 0).
pub fn solve_rhs_from(p: &RhsProblem, ctl: &IterationControl, init: GridFunction) -> Result<SolveReport> {
    ctl.validate()?;
    if init.grid() != p.grid() {
        return invalid("initial guess lives on a different grid");
    }
    let mut u0 = init.into_values();
    for k in p.grid().boundary() {
        u0[k] = 0.0;
    }
    let out = march::march(&p.scheme, Source::Rhs(p.f.values()), u0, &ctl.march_config(false, None));
    Ok(SolveReport {
        solution: GridFunction::from_values(*p.grid(), out.u)?,
        residual_sup: out.residual,
        steps: out.steps,
        status: out.status,
    })
}

pub fn sup_norm(u: &GridFunction) -> f64 {
    u.sup_norm()
}
