use crate::eigen::EigenPair;
use crate::error::{invalid, Result};
use crate::grid::{Ball, GridFunction};
use crate::solver::ProblemSpec;

/// `ε_θ = (a₀/λ⁺ − θ)^{1/(γ+1−q)}`.
pub fn epsilon_theta(a0: f64, lambda: f64, theta: f64, gamma: f64, q: f64) -> Result<f64> {
    let base = a0 / lambda - theta;
    if !(base > 0.0) || !(q < gamma + 1.0) {
        return invalid(format!("ε_θ undefined: a₀/λ⁺ − θ = {base}, γ+1−q = {}", gamma + 1.0 - q));
    }
    Ok(base.powf(1.0 / (gamma + 1.0 - q)))
}

#[derive(Debug, Clone, PartialEq)]
pub enum BarrierOutcome {
    /// `min_B a ≤ λ⁺(B)`; the estimate does not apply on this ball.
    Inapplicable { a0: f64, lambda: f64 },
    Checked {
        passed: bool,
        epsilon_theta: f64,
        a0: f64,
        lambda: f64,
        /// `min (u − ε_θ φ⁺)` over the ball nodes.
        worst_margin: f64,
        worst_node: usize,
    },
}

impl BarrierOutcome {
    pub fn passed(&self) -> Option<bool> {
        match self {
            BarrierOutcome::Inapplicable { .. } => None,
            BarrierOutcome::Checked { passed, .. } => Some(*passed),
        }
    }
}

/// Checks `u ≥ ε_θ φ⁺(B) − 2 tol` on the nodes of `ball`. `pair` must be
/// the eigenpair of the sub-grid of `ball` (see
/// [`ball_eigenpair`](crate::solver::ball_eigenpair)).
pub fn barrier_check(u: &GridFunction, ball: &Ball, pair: &EigenPair, p: &ProblemSpec, theta: f64, tol: f64) -> Result<BarrierOutcome> {
    let grid = *p.grid();
    if u.grid() != &grid {
        return invalid("solution lives on a different grid");
    }
    let (sub, map) = grid.sub_grid(ball)?;
    if pair.grid() != &sub {
        return invalid("eigenpair does not live on the ball's sub-grid");
    }
    let inner = sub.interior();
    let a0 = inner.iter().map(|&k| p.weight().get(map[k])).fold(f64::INFINITY, f64::min);
    let lambda = pair.lambda_plus;
    if a0 <= lambda {
        return Ok(BarrierOutcome::Inapplicable { a0, lambda });
    }
    let eps = epsilon_theta(a0, lambda, theta, p.gamma(), p.q())?;
    let (mut worst, mut node) = (f64::INFINITY, 0);
    for &k in &inner {
        let m = u.get(map[k]) - eps * pair.phi_plus.get(k);
        if m < worst {
            worst = m;
            node = map[k];
        }
    }
    Ok(BarrierOutcome::Checked {
        passed: worst >= -2.0 * tol,
        epsilon_theta: eps,
        a0,
        lambda,
        worst_margin: worst,
        worst_node: node,
    })
}
