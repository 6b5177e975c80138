//! Nonnegative solutions of `|Du|^γ F(x, D²u) + a(x) u^q = 0`, `u = 0` on
//! the boundary, by clamped pseudo-time marching between a subsolution
//! `εφ⁺` and a supersolution `kψ`.

use std::fmt;
use std::sync::Arc;

use crate::dirichlet::{solve_rhs, IterationControl, Method, RhsProblem, SolveStatus};
use crate::eigen::{principal_eigenpair_with, EigenOptions, EigenPair};
use crate::error::{invalid, Error, Result};
use crate::grid::{sup_norm_slice, Ball, DirectionSet, Grid, GridFunction, Scheme, WeightField, WeightSign};
use crate::march::{self, Source};
use crate::operators::OperatorSpec;

/// The problem data `(Ω_h, F, γ, q, a)`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    operator: OperatorSpec,
    q: f64,
    weight: WeightField,
    scheme: Arc<Scheme>,
}

pub(crate) fn check_exponents(gamma: f64, q: f64) -> Result<()> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return invalid(format!("γ must satisfy γ ≥ 0 (got γ={gamma})"));
    }
    if !(q > 0.0 && q < gamma + 1.0) {
        return invalid(format!("q must satisfy 0 < q < γ+1 (got q={q}, γ={gamma})"));
    }
    Ok(())
}

impl ProblemSpec {
    pub fn new(grid: Grid, operator: OperatorSpec, gamma: f64, q: f64, weight: WeightField) -> Result<Self> {
        Self::with_directions(grid, operator, gamma, q, weight, DirectionSet::Compact)
    }

    pub fn with_directions(
        grid: Grid,
        operator: OperatorSpec,
        gamma: f64,
        q: f64,
        weight: WeightField,
        set: DirectionSet,
    ) -> Result<Self> {
        check_exponents(gamma, q)?;
        if weight.grid() != &grid {
            return invalid("weight is sampled on a different grid");
        }
        let scheme = Scheme::new(grid, &operator, gamma, set)?;
        Ok(ProblemSpec {
            operator,
            q,
            weight,
            scheme: Arc::new(scheme),
        })
    }

    /// Same grid, operator and exponents with another weight.
    pub fn with_weight(&self, weight: WeightField) -> Result<Self> {
        if weight.grid() != self.grid() {
            return invalid("weight is sampled on a different grid");
        }
        Ok(ProblemSpec {
            operator: self.operator.clone(),
            q: self.q,
            weight,
            scheme: self.scheme.clone(),
        })
    }

    /// Same data with another exponent `q`.
    pub fn with_q(&self, q: f64) -> Result<Self> {
        check_exponents(self.gamma(), q)?;
        Ok(ProblemSpec {
            operator: self.operator.clone(),
            q,
            weight: self.weight.clone(),
            scheme: self.scheme.clone(),
        })
    }

    pub fn grid(&self) -> &Grid {
        self.scheme.grid()
    }

    pub fn operator(&self) -> &OperatorSpec {
        &self.operator
    }

    pub fn gamma(&self) -> f64 {
        self.scheme.gamma()
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn weight(&self) -> &WeightField {
        &self.weight
    }

    pub fn weight_sign(&self) -> WeightSign {
        self.weight.sign()
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub(crate) fn source(&self) -> Source<'_> {
        Source::Reaction {
            a: self.weight.values(),
            q: self.q,
            push: None,
        }
    }

    /// Interior residual into `out` (indexed by node); boundary entries get `u`.
    pub(crate) fn residual_into(&self, u: &[f64], out: &mut [f64]) {
        out.copy_from_slice(u);
        let r = march::residual(&self.scheme, self.source(), u);
        for (k, v) in r.into_iter().enumerate() {
            out[self.scheme.node(k)] = v;
        }
    }

    /// Sup-norm of the pointwise residual (boundary defect included).
    pub fn residual_sup(&self, u: &GridFunction) -> f64 {
        let mut out = vec![0.0; u.values().len()];
        self.residual_into(u.values(), &mut out);
        sup_norm_slice(&out)
    }
}

/// `ε φ⁺(B)` extended by zero.
#[derive(Debug, Clone)]
pub struct Subsolution {
    pub field: GridFunction,
    pub epsilon: f64,
    pub epsilon_max: f64,
    pub ball: Ball,
    pub pair: EigenPair,
}

/// `k ψ` with `|Dψ|^γ F(D²ψ) = −‖a‖∞`.
#[derive(Debug, Clone)]
pub struct Supersolution {
    pub field: GridFunction,
    pub k: f64,
    pub psi: GridFunction,
}

const SUPER_MARGIN: f64 = 0.05;

/// Principal eigenpair of the operator on the grid nodes inside `ball`,
/// together with the node map back onto the full grid.
pub fn ball_eigenpair(p: &ProblemSpec, ball: &Ball, ctl: &IterationControl) -> Result<(EigenPair, Vec<usize>)> {
    let (sub, map) = p.grid().sub_grid(ball)?;
    let opts = EigenOptions {
        directions: DirectionSet::Compact,
        ..EigenOptions::default()
    };
    let pair = principal_eigenpair_with(sub, p.operator(), p.gamma(), ctl, &opts)?;
    if !pair.converged {
        return Err(Error::Construction(format!(
            "eigenpair on the ball did not converge (residual {:e})",
            pair.residual
        )));
    }
    Ok((pair, map))
}

pub fn build_subsolution(p: &ProblemSpec, ball: &Ball, ctl: &IterationControl) -> Result<Subsolution> {
    let grid = *p.grid();
    let (sub, map) = grid.sub_grid(ball)?;
    for k in sub.interior() {
        let node = map[k];
        if p.weight().get(node) <= 0.0 {
            return Err(Error::Construction(format!(
                "weight is not positive on the ball: a = {} at node {node} (x = {:?})",
                p.weight().get(node),
                &grid.coord(node)[..grid.dim()]
            )));
        }
    }
    let (pair, map) = ball_eigenpair(p, ball, ctl)?;
    let (gamma, q) = (p.gamma(), p.q());
    let expo = 1.0 / (1.0 + gamma - q);
    let eps_max = sub
        .interior()
        .into_iter()
        .map(|k| {
            let phi = pair.phi_plus.get(k);
            (p.weight().get(map[k]) / (pair.lambda_plus * phi.powf(1.0 - q))).powf(expo)
        })
        .fold(f64::INFINITY, f64::min);
    if !(eps_max > 0.0 && eps_max.is_finite()) {
        return Err(Error::Construction(format!("no admissible ε: ε_max = {eps_max}")));
    }
    let mut eps = 2f64.powi(eps_max.log2().floor() as i32);
    let mut residual = vec![0.0; grid.len()];
    let mut worst = (0usize, 0.0f64);
    for _ in 0..64 {
        let field = GridFunction::extend_from(grid, &pair.phi_plus.scale(eps), &map)?;
        p.residual_into(field.values(), &mut residual);
        worst = grid
            .interior()
            .into_iter()
            .map(|k| (k, residual[k]))
            .fold((0, f64::INFINITY), |m, c| if c.1 < m.1 { c } else { m });
        if worst.1 >= -ctl.tolerance {
            return Ok(Subsolution {
                field,
                epsilon: eps,
                epsilon_max: eps_max,
                ball: *ball,
                pair,
            });
        }
        eps *= 0.5;
    }
    Err(Error::Construction(format!(
        "no dyadic ε ≤ {eps_max:e} satisfies the subsolution inequality; residual {:e} at node {} (x = {:?})",
        worst.1,
        worst.0,
        &grid.coord(worst.0)[..grid.dim()]
    )))
}

pub fn build_supersolution(p: &ProblemSpec, ctl: &IterationControl) -> Result<Supersolution> {
    let grid = *p.grid();
    let amax = p.weight().sup_norm();
    if amax == 0.0 {
        return Ok(Supersolution {
            field: GridFunction::zeros(grid),
            k: 0.0,
            psi: GridFunction::zeros(grid),
        });
    }
    let f = GridFunction::sample_all(grid, |_| -amax)?;
    let rhs = RhsProblem::from_scheme(p.operator().clone(), p.scheme.clone(), f)?;
    let rep = solve_rhs(&rhs, ctl)?;
    if !rep.converged() {
        return Err(Error::Construction(format!(
            "auxiliary problem for ψ did not converge ({}, residual {:e})",
            rep.status.name(),
            rep.residual_sup
        )));
    }
    let psi = rep.solution.map(|v| v.max(0.0));
    let (gamma, q) = (p.gamma(), p.q());
    let mut k = (psi.sup_norm().powf(q) + 1.0).powf(1.0 / (1.0 + gamma - q)) * (1.0 + SUPER_MARGIN);
    let mut residual = vec![0.0; grid.len()];
    for _ in 0..32 {
        let field = psi.scale(k);
        p.residual_into(field.values(), &mut residual);
        if grid.interior().into_iter().all(|i| residual[i] <= 0.0) {
            return Ok(Supersolution { field, k, psi });
        }
        k *= 2.0;
    }
    Err(Error::Construction("could not verify the supersolution inequality".into()))
}

/// Starting point of [`solve`].
#[derive(Debug, Clone)]
pub enum Init {
    Zero,
    Subsolution(Ball),
    Given(GridFunction),
    Supersolution,
}

impl Init {
    fn tag(&self) -> String {
        match self {
            Init::Zero => "zero".into(),
            Init::Subsolution(b) => format!("subsolution({b})"),
            Init::Given(_) => "given".into(),
            Init::Supersolution => "supersolution".into(),
        }
    }
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo[1] == 0.0 && self.hi[1] == 0.0 {
            write!(f, "[{}, {}]", self.lo[0], self.hi[0])
        } else {
            write!(f, "[{}, {}]x[{}, {}]", self.lo[0], self.hi[0], self.lo[1], self.hi[1])
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: GridFunction,
    pub residual_sup: f64,
    pub steps: usize,
    pub status: SolveStatus,
    pub method: Method,
    /// `(subsolution, supersolution)` when started from a subsolution.
    pub bracket: Option<(GridFunction, GridFunction)>,
    pub init_tag: String,
    /// `ε` of the subsolution, when one was built.
    pub epsilon: Option<f64>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// Flat `key=value` lines.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("status".to_string(), self.status.name().to_string()),
            ("residual_sup".into(), format!("{:e}", self.residual_sup)),
            ("steps".into(), self.steps.to_string()),
            ("method".into(), self.method.name().into()),
            ("init".into(), self.init_tag.clone()),
            ("sup_norm".into(), format!("{:e}", self.solution.sup_norm())),
        ];
        if let Some(e) = self.epsilon {
            v.push(("epsilon".into(), format!("{e:e}")));
        }
        v.push(("bracket".into(), self.bracket.is_some().to_string()));
        v
    }
}

/// `ctl` governs the main iteration; the sub- and supersolution are built
/// with the same tolerance but the default method and step budget.
pub fn solve(p: &ProblemSpec, init: Init, ctl: &IterationControl) -> Result<SolveReport> {
    ctl.validate()?;
    let aux = IterationControl {
        tolerance: ctl.tolerance,
        safety: ctl.safety,
        ..IterationControl::default()
    };
    let grid = *p.grid();
    let tag = init.tag();
    let mut epsilon = None;
    let (u0, sup, sub) = match init {
        Init::Zero => (GridFunction::zeros(grid), None, None),
        Init::Given(u) => {
            if u.grid() != &grid {
                return invalid("initial guess lives on a different grid");
            }
            if let Some(k) = u.values().iter().position(|&v| v < 0.0) {
                return Err(Error::Domain {
                    node: k,
                    reason: format!("initial guess is negative ({})", u.get(k)),
                });
            }
            if let Some(k) = grid.boundary().into_iter().find(|&k| u.get(k) != 0.0) {
                return Err(Error::Domain {
                    node: k,
                    reason: "initial guess violates the zero boundary condition".into(),
                });
            }
            let sup = build_supersolution(p, &aux)?;
            if let Some(k) = (0..grid.len()).find(|&k| u.get(k) > sup.field.get(k)) {
                return Err(Error::Domain {
                    node: k,
                    reason: format!(
                        "initial guess {} exceeds the supersolution {} (k = {})",
                        u.get(k),
                        sup.field.get(k),
                        sup.k
                    ),
                });
            }
            (u, Some(sup), None)
        }
        Init::Subsolution(ball) => {
            let sup = build_supersolution(p, &aux)?;
            let s = build_subsolution(p, &ball, &aux)?;
            if let Some(k) = (0..grid.len()).find(|&k| s.field.get(k) > sup.field.get(k)) {
                return Err(Error::Construction(format!(
                    "subsolution exceeds the supersolution at node {k}"
                )));
            }
            epsilon = Some(s.epsilon);
            (s.field.clone(), Some(sup), Some(s.field))
        }
        Init::Supersolution => {
            let sup = build_supersolution(p, &aux)?;
            (sup.field.clone(), Some(sup), None)
        }
    };
    let bound = sup.as_ref().map(|s| 10.0 * s.field.sup_norm().max(f64::MIN_POSITIVE));
    let out = march::march(&p.scheme, p.source(), u0.into_values(), &ctl.march_config(true, bound));
    let solution = GridFunction::from_values(grid, out.u)?;
    let residual_sup = p.residual_sup(&solution);
    let bracket = match (sub, sup) {
        (Some(s), Some(sup)) => Some((s, sup.field)),
        _ => None,
    };
    Ok(SolveReport {
        solution,
        residual_sup,
        steps: out.steps,
        status: out.status,
        method: ctl.method,
        bracket,
        init_tag: tag,
        epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{residual, WeightSource};
    use crate::oracle::example_instance;
    use std::f64::consts::PI;

    fn lap1() -> OperatorSpec {
        OperatorSpec::laplacian(1).unwrap()
    }

    fn constant_problem(lo: f64, hi: f64, n: usize, gamma: f64, q: f64, c: f64) -> ProblemSpec {
        let g = Grid::new_1d(lo, hi, n).unwrap();
        let w = WeightField::sample(g, WeightSource::Constant { c }).unwrap();
        ProblemSpec::new(g, lap1(), gamma, q, w).unwrap()
    }

    #[test]
    fn exponent_validation_names_constraint() {
        let g = Grid::new_1d(0.0, 1.0, 9).unwrap();
        let w = WeightField::sample(g, WeightSource::Constant { c: 1.0 }).unwrap();
        let e = ProblemSpec::new(g, lap1(), 1.0, 2.0, w.clone()).unwrap_err().to_string();
        assert!(e.contains("q < γ+1"), "{e}");
        assert!(ProblemSpec::new(g, lap1(), 1.0, 0.0, w.clone()).is_err());
        assert!(ProblemSpec::new(g, lap1(), -1.0, 0.5, w).is_err());
    }

    #[test]
    fn subsolution_on_zero_pi() {
        let p = constant_problem(0.0, PI, 99, 0.0, 0.5, 2.0);
        let s = build_subsolution(&p, &Ball::interval(0.0, PI), &IterationControl::default()).unwrap();
        assert!(s.epsilon >= 2.0 && s.epsilon <= 4.0, "{}", s.epsilon);
        assert!(s.epsilon <= s.epsilon_max);
        // independent check of the inequality on the analytic pair
        for k in 1..100 {
            let phi = (k as f64 * PI / 100.0).sin();
            assert!(s.epsilon.sqrt() * phi.sqrt() <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn subsolution_fails_without_positive_weight() {
        let p = constant_problem(0.0, 1.0, 49, 0.0, 0.5, 0.0);
        let e = build_subsolution(&p, &Ball::interval(0.2, 0.8), &IterationControl::default()).unwrap_err();
        assert!(matches!(e, Error::Construction(ref m) if m.contains("node")), "{e}");
    }

    #[test]
    fn small_epsilon_is_strict_subsolution() {
        let p = constant_problem(0.0, 1.0, 49, 0.0, 0.5, 1.0);
        let (pair, map) = ball_eigenpair(&p, &Ball::interval(0.2, 0.8), &IterationControl::default()).unwrap();
        let mut prev = f64::INFINITY;
        // λ⁺ ≈ 27 on the ball, so ε^{1/2} λ⁺ < 1 needs ε below ~1.4e-3
        for e in [1e-3, 1e-5, 1e-7] {
            let u = GridFunction::extend_from(*p.grid(), &pair.phi_plus.scale(e), &map).unwrap();
            assert!(u.sup_norm() < prev);
            prev = u.sup_norm();
            let r = residual(&p, &u).unwrap();
            for k in p.grid().interior() {
                if u.get(k) > 0.0 {
                    assert!(r.get(k) > 0.0);
                }
            }
        }
    }

    #[test]
    fn supersolution_examples() {
        let ctl = IterationControl::default();
        let p = constant_problem(0.0, 1.0, 99, 0.0, 0.5, 1.0);
        let s = build_supersolution(&p, &ctl).unwrap();
        assert!((s.psi.sup_norm() - 0.125).abs() < 1e-8);
        assert!(s.k > 0.125);
        let r = residual(&p, &s.field).unwrap();
        assert!(p.grid().interior().into_iter().all(|k| r.get(k) <= 0.0));

        let z = constant_problem(0.0, 1.0, 20, 0.0, 0.5, 0.0);
        assert_eq!(build_supersolution(&z, &ctl).unwrap().field.sup_norm(), 0.0);

        let p2 = constant_problem(0.0, 1.0, 99, 0.0, 0.5, 2.0);
        let s2 = build_supersolution(&p2, &ctl).unwrap();
        assert!((s2.psi.sup_norm() - 2.0 * s.psi.sup_norm()).abs() < 1e-8);
        let r = residual(&p2, &s2.field).unwrap();
        assert!(p2.grid().interior().into_iter().all(|k| r.get(k) <= 0.0));
    }

    #[test]
    fn zero_init_is_a_fixed_point() {
        let p = constant_problem(0.0, 1.0, 30, 1.0, 0.5, 1.0);
        let r = solve(&p, Init::Zero, &IterationControl::default()).unwrap();
        assert!(r.converged());
        assert_eq!(r.steps, 0);
        assert_eq!(r.residual_sup, 0.0);
        assert_eq!(r.solution.sup_norm(), 0.0);
    }

    #[test]
    fn positive_weight_gives_positive_solution() {
        let p = constant_problem(0.0, 1.0, 79, 0.0, 0.5, 1.0);
        let ctl = IterationControl::default();
        let r = solve(&p, Init::Subsolution(Ball::interval(0.1, 0.9)), &ctl).unwrap();
        assert!(r.converged());
        assert!(r.solution.interior_min() > 0.0);
        let (sub, sup) = r.bracket.clone().unwrap();
        for k in 0..p.grid().len() {
            assert!(r.solution.get(k) <= sup.get(k) + 2.0 * ctl.tolerance);
            assert!(r.solution.get(k) >= sub.get(k) - 2.0 * ctl.tolerance);
        }
        let again = residual(&p, &r.solution).unwrap().sup_norm();
        assert!((again - r.residual_sup).abs() <= 1e-14);
    }

    #[test]
    fn recovers_dead_core_example() {
        let e = example_instance(1.0, 0.8).unwrap();
        let g = e.grid(200).unwrap();
        let w = WeightField::sample(g, e.weight_source()).unwrap();
        let p = ProblemSpec::new(g, lap1(), 1.0, 0.8, w).unwrap();
        let v = e.sample(g).unwrap();
        let r = solve(&p, Init::Given(v.scale(1.1)), &IterationControl::default()).unwrap();
        assert!(r.converged(), "{:?} {}", r.status, r.residual_sup);
        let err = r.solution.sub(&v).unwrap().sup_norm();
        assert!(err <= 5.0 * g.h(0), "{err}");
        let tol_zero = g.h(0).powi(2) * r.solution.sup_norm();
        for k in 0..g.len() {
            if g.coord(k)[0] < -0.05 {
                assert!(r.solution.get(k) < tol_zero, "x={} u={}", g.coord(k)[0], r.solution.get(k));
            }
        }
    }

    #[test]
    fn given_init_is_checked() {
        let p = constant_problem(0.0, 1.0, 20, 0.0, 0.5, 1.0);
        let ctl = IterationControl::default();
        let g = *p.grid();
        let neg = GridFunction::from_fn(g, |_| -1.0).unwrap();
        assert!(matches!(solve(&p, Init::Given(neg), &ctl), Err(Error::Domain { .. })));
        let huge = GridFunction::from_fn(g, |_| 1e6).unwrap();
        assert!(solve(&p, Init::Given(huge), &ctl).is_err());
    }
}
