//! Principal eigenpair of `|Dφ|^γ F(x, D²φ) = −λ φ^{γ+1}`, `φ = 0` on the
//! boundary, normalised by `‖φ‖∞ = 1`.

use std::io::Write;
use std::sync::Arc;

use crate::dirichlet::{solve_rhs_from, IterationControl, RhsProblem};
use crate::error::{invalid, Error, Result};
use crate::grid::{write_csv, DirectionSet, Grid, GridFunction, Scheme};
use crate::operators::OperatorSpec;

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda_plus: f64,
    pub phi_plus: GridFunction,
    /// Sup-norm of the eigen-equation defect.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl EigenPair {
    /// A pair with no iteration history (residual not yet evaluated).
    pub fn new(lambda_plus: f64, phi_plus: GridFunction) -> Self {
        EigenPair {
            lambda_plus,
            phi_plus,
            residual: f64::NAN,
            iterations: 0,
            converged: false,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.phi_plus.grid()
    }

    /// CSV of `φ⁺` with a metadata comment carrying `λ⁺`.
    pub fn write_csv<W: Write>(&self, out: W, extra_comments: &[String]) -> Result<()> {
        let mut comments = extra_comments.to_vec();
        comments.push(format!(
            "lambda_plus={:?} residual={:?} iterations={}",
            self.lambda_plus, self.residual, self.iterations
        ));
        write_csv(out, &self.phi_plus, &comments)
    }
}

/// Stopping rules of the inverse iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Relative change of `λ` between iterates.
    pub lambda_tol: f64,
    /// Sup-norm of the eigen-residual.
    pub residual_tol: f64,
    pub max_iterations: usize,
    pub directions: DirectionSet,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            lambda_tol: 1e-8,
            residual_tol: 1e-6,
            max_iterations: 500,
            directions: DirectionSet::Compact,
        }
    }
}

fn power(v: f64, e: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else {
        v.powf(e)
    }
}

/// Least-squares `λ` for `G(φ) ≈ −λ φ^{γ+1}` over interior nodes.
fn fit_lambda(scheme: &Scheme, phi: &[f64]) -> f64 {
    let gp1 = scheme.gamma() + 1.0;
    let delta = scheme.delta(phi);
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..scheme.len() {
        let w = power(phi[scheme.node(k)], gp1);
        num -= scheme.eval_with(phi, k, delta).value * w;
        den += w * w;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn defect(scheme: &Scheme, lambda: f64, phi: &[f64]) -> f64 {
    let gp1 = scheme.gamma() + 1.0;
    let delta = scheme.delta(phi);
    (0..scheme.len())
        .map(|k| (scheme.eval_with(phi, k, delta).value + lambda * power(phi[scheme.node(k)], gp1)).abs())
        .fold(0.0, f64::max)
}

/// Rescales to unit sup-norm, with the maximum set to exactly 1.
fn normalise(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let (arg, m) = v
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(i, m), (j, x)| if x.abs() > m { (j, x.abs()) } else { (i, m) });
    if !(m > 0.0 && m.is_finite()) {
        return None;
    }
    for x in v.iter_mut() {
        *x /= m;
    }
    v[arg] = v[arg].signum();
    Some(v)
}

pub fn principal_eigenpair(grid: Grid, spec: &OperatorSpec, gamma: f64, ctl: &IterationControl) -> Result<EigenPair> {
    principal_eigenpair_with(grid, spec, gamma, ctl, &EigenOptions::default())
}

/// Normalised inverse iteration: solve `G(u) = −λ_k φ_k^{γ+1}`, set
/// `φ_{k+1} = u / ‖u‖∞` and refit `λ` by least squares.
pub fn principal_eigenpair_with(
    grid: Grid,
    spec: &OperatorSpec,
    gamma: f64,
    ctl: &IterationControl,
    opts: &EigenOptions,
) -> Result<EigenPair> {
    ctl.validate()?;
    if !(opts.lambda_tol > 0.0 && opts.residual_tol > 0.0) {
        return invalid("eigen tolerances must be > 0");
    }
    let scheme = Arc::new(Scheme::new(grid, spec, gamma, opts.directions)?);
    let dist = (0..grid.len()).map(|k| grid.boundary_distance(k)).collect();
    let mut phi = normalise(dist).expect("grid has interior nodes");
    let mut lambda = fit_lambda(&scheme, &phi);
    if !(lambda > 0.0) {
        lambda = 1.0;
    }
    // inner solves a little tighter than the requested eigen-residual
    let inner = ctl.with_tolerance(ctl.tolerance.min(0.01 * opts.residual_tol));
    let gp1 = gamma + 1.0;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let f: Vec<f64> = phi.iter().map(|&p| -lambda * power(p, gp1)).collect();
        let p = RhsProblem::from_scheme(spec.clone(), scheme.clone(), GridFunction::from_values(grid, f)?)?;
        let rep = solve_rhs_from(&p, &inner, GridFunction::from_values(grid, phi.clone())?)?;
        let u: Vec<f64> = rep.solution.into_values().into_iter().map(|v| v.max(0.0)).collect();
        let next = normalise(u).ok_or_else(|| {
            Error::Construction(format!("inverse iteration collapsed to the zero field at iteration {it}"))
        })?;
        let next_lambda = fit_lambda(&scheme, &next);
        if !(next_lambda > 0.0 && next_lambda.is_finite()) {
            return Err(Error::Construction(format!("non-positive eigenvalue estimate {next_lambda} at iteration {it}")));
        }
        residual = defect(&scheme, next_lambda, &next);
        let change = (next_lambda - lambda).abs();
        phi = next;
        lambda = next_lambda;
        if change <= opts.lambda_tol * lambda && residual <= opts.residual_tol {
            return Ok(EigenPair {
                lambda_plus: lambda,
                phi_plus: GridFunction::from_values(grid, phi)?,
                residual,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(EigenPair {
        lambda_plus: lambda,
        phi_plus: GridFunction::from_values(grid, phi)?,
        residual,
        iterations: opts.max_iterations,
        converged: false,
    })
}

/// Sup-norm of `|∇_h φ|_δ^γ F_h(φ) + λ φ^{γ+1}` over interior nodes.
pub fn eigen_residual(pair: &EigenPair, spec: &OperatorSpec, gamma: f64) -> Result<f64> {
    let scheme = Scheme::new(*pair.grid(), spec, gamma, DirectionSet::Compact)?;
    Ok(defect(&scheme, pair.lambda_plus, pair.phi_plus.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::laplace_eigenpair_1d;
    use std::f64::consts::PI;

    fn lap() -> OperatorSpec {
        OperatorSpec::laplacian(1).unwrap()
    }

    #[test]
    fn laplacian_on_zero_pi() {
        let g = Grid::new_1d(0.0, PI, 99).unwrap();
        let pair = principal_eigenpair(g, &lap(), 0.0, &IterationControl::default()).unwrap();
        assert!(pair.converged);
        // discrete value (2/h)² sin²(h/2) → 1 at O(h²)
        let h = g.h(0);
        let exact_discrete = (2.0 / h * (h / 2.0).sin()).powi(2);
        assert!((pair.lambda_plus - exact_discrete).abs() < 1e-7);
        assert!((pair.lambda_plus - 1.0).abs() < h * h / 10.0);
        assert_eq!(pair.phi_plus.sup_norm(), 1.0);
        assert!(pair.phi_plus.interior_min() > 0.0);
        for k in g.interior() {
            assert!((pair.phi_plus.get(k) - g.coord(k)[0].sin()).abs() < 1e-3);
        }
        assert!(pair.residual <= 1e-6);
    }

    #[test]
    fn unit_interval_gives_pi_squared() {
        let g = Grid::new_1d(0.0, 1.0, 199).unwrap();
        let pair = principal_eigenpair(g, &lap(), 0.0, &IterationControl::default()).unwrap();
        assert!((pair.lambda_plus - PI * PI).abs() < 1e-3);
    }

    #[test]
    fn domain_scaling() {
        // γ = 0: t^{-2}; γ = 1: t^{-3} (checked on two refinements)
        for (gamma, tol) in [(0.0, 1e-9), (1.0, 2e-2)] {
            let spec = OperatorSpec::pucci_plus(1.0, 1.0).unwrap();
            let a = principal_eigenpair(Grid::new_1d(0.0, 1.0, 79).unwrap(), &spec, gamma, &IterationControl::default()).unwrap();
            let b = principal_eigenpair(Grid::new_1d(0.0, 2.0, 79).unwrap(), &spec, gamma, &IterationControl::default()).unwrap();
            let ratio = a.lambda_plus / b.lambda_plus;
            let expected = 2f64.powf(gamma + 2.0);
            assert!((ratio / expected - 1.0).abs() < tol, "γ={gamma}: {ratio} vs {expected}");
        }
    }

    #[test]
    fn residual_examples() {
        let g = Grid::new_1d(0.0, PI, 400).unwrap();
        let exact = laplace_eigenpair_1d(0.0, PI).unwrap().sample(g).unwrap();
        let r = eigen_residual(&exact, &lap(), 0.0).unwrap();
        assert!(r < g.h(0).powi(2) / 12.0 + 1e-12, "{r}");

        // homogeneity: (λ, tφ) has residual t^{γ+1} times the original
        let coarse = Grid::new_1d(0.0, 1.0, 30).unwrap();
        for gamma in [0.0, 1.0, 2.5] {
            let spec = OperatorSpec::pucci_minus(0.5, 2.0).unwrap();
            let phi = GridFunction::from_fn(coarse, |x| (x[0] * (1.0 - x[0])).powf(0.7) + 0.1 * (9.0 * x[0]).sin().powi(2)).unwrap();
            let pair = EigenPair::new(3.0, phi.clone());
            let base = eigen_residual(&pair, &spec, gamma).unwrap();
            let t = 2.7;
            let scaled = eigen_residual(&EigenPair::new(3.0, phi.scale(t)), &spec, gamma).unwrap();
            let expect = t.powf(gamma + 1.0) * base;
            assert!((scaled - expect).abs() <= 1e-12 * expect, "γ={gamma}");
        }

        // λ perturbed by ε moves the residual by at least ε·min φ^{γ+1}
        let eps = 1e-3;
        let moved = EigenPair::new(exact.lambda_plus + eps, exact.phi_plus.clone());
        let rm = eigen_residual(&moved, &lap(), 0.0).unwrap();
        let min_phi = exact.phi_plus.interior_min();
        assert!(rm >= eps * min_phi - r);
    }

    #[test]
    fn nested_domains_are_monotone() {
        let ctl = IterationControl::default();
        let full = principal_eigenpair(Grid::new_1d(0.0, 2.0, 99).unwrap(), &lap(), 0.0, &ctl).unwrap();
        let sub = principal_eigenpair(Grid::new_1d(0.4, 1.6, 59).unwrap(), &lap(), 0.0, &ctl).unwrap();
        assert!(sub.lambda_plus >= full.lambda_plus);
    }

    #[test]
    fn nonlinear_operators_converge() {
        let ctl = IterationControl::default();
        let g2 = Grid::new_2d((0.0, 1.0), (0.0, 1.0), [15, 15]).unwrap();
        for (spec, gamma) in [
            (OperatorSpec::pucci_plus(1.0, 2.0).unwrap(), 0.0),
            (OperatorSpec::pucci_minus(1.0, 2.0).unwrap(), 1.0),
            (OperatorSpec::laplacian(2).unwrap(), 0.0),
        ] {
            let pair = principal_eigenpair(g2, &spec, gamma, &ctl).unwrap();
            assert!(pair.converged, "{}", spec.name());
            assert!(pair.lambda_plus > 0.0 && pair.phi_plus.interior_min() > 0.0);
            assert_eq!(pair.phi_plus.sup_norm(), 1.0);
        }
        // 2-D Laplacian on the unit square: 2π²
        let pair = principal_eigenpair(Grid::new_2d((0.0, 1.0), (0.0, 1.0), [31, 31]).unwrap(), &OperatorSpec::laplacian(2).unwrap(), 0.0, &ctl).unwrap();
        assert!((pair.lambda_plus - 2.0 * PI * PI).abs() < 0.05);
        // M⁺ ≥ M⁻ ⇒ smaller principal eigenvalue for M⁺
        let pp = principal_eigenpair(g2, &OperatorSpec::pucci_plus(1.0, 2.0).unwrap(), 0.0, &ctl).unwrap();
        let pm = principal_eigenpair(g2, &OperatorSpec::pucci_minus(1.0, 2.0).unwrap(), 0.0, &ctl).unwrap();
        assert!(pp.lambda_plus < pm.lambda_plus);
    }

    #[test]
    fn csv_export_has_metadata() {
        let g = Grid::new_1d(0.0, 1.0, 9).unwrap();
        let pair = principal_eigenpair(g, &lap(), 0.0, &IterationControl::default()).unwrap();
        let mut buf = Vec::new();
        pair.write_csv(&mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().next().unwrap().starts_with("# lambda_plus="));
    }
}
