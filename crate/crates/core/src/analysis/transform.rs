//! `w = u^{1−q̄} / (1−q̄)` with `q̄ = q/(1+γ)`, which turns the equation into
//! `|Dw|^γ F(D²w + c Dw⊗Dw / w) + a = 0`, `c = q/(1+γ−q)`.

use crate::error::{invalid, Error, Result};
use crate::grid::{Ball, GridFunction};
use crate::solver::ProblemSpec;

fn qbar(gamma: f64, q: f64) -> Result<f64> {
    if !(gamma >= 0.0 && q > 0.0 && q < gamma + 1.0) {
        return invalid(format!("need γ ≥ 0 and 0 < q < γ+1 (got γ={gamma}, q={q})"));
    }
    Ok(q / (1.0 + gamma))
}

fn check_positive(u: &GridFunction, what: &str) -> Result<()> {
    if let Some(k) = u.grid().interior().into_iter().find(|&k| u.get(k) <= 0.0) {
        return Err(Error::Domain {
            node: k,
            reason: format!("{what} is {} (transform needs positive interior values)", u.get(k)),
        });
    }
    Ok(())
}

pub fn to_w(u: &GridFunction, gamma: f64, q: f64) -> Result<GridFunction> {
    let qb = qbar(gamma, q)?;
    check_positive(u, "u")?;
    Ok(u.map(|v| if v > 0.0 { v.powf(1.0 - qb) / (1.0 - qb) } else { 0.0 }))
}

pub fn from_w(w: &GridFunction, gamma: f64, q: f64) -> Result<GridFunction> {
    let qb = qbar(gamma, q)?;
    check_positive(w, "w")?;
    Ok(w.map(|v| if v > 0.0 { ((1.0 - qb) * v).powf(1.0 / (1.0 - qb)) } else { 0.0 }))
}

/// Pointwise `|∇_h w|_δ^γ F_h(D²_h w + c ∇_h w ⊗ ∇_h w / w) + a` at interior
/// nodes (0 on the boundary).
pub fn w_residual(w: &GridFunction, p: &ProblemSpec) -> Result<GridFunction> {
    if w.grid() != p.grid() {
        return invalid("w lives on a different grid");
    }
    check_positive(w, "w")?;
    let (gamma, q) = (p.gamma(), p.q());
    let c = q / (1.0 + gamma - q);
    let s = p.scheme();
    let delta = s.delta(w.values());
    let mut out = vec![0.0; w.values().len()];
    for k in 0..s.len() {
        let idx = s.node(k);
        out[idx] = s.eval_augmented(w.values(), k, delta, c).value + p.weight().get(idx);
    }
    GridFunction::from_values(*w.grid(), out)
}

/// Sup of `|w_residual|` over interior nodes inside `compact` with
/// `w ≥ h^{1/2}`.
pub fn w_residual_sup(w: &GridFunction, p: &ProblemSpec, compact: &Ball) -> Result<f64> {
    let r = w_residual(w, p)?;
    let g = w.grid();
    let floor = g.h_max().sqrt();
    Ok(g.interior()
        .into_iter()
        .filter(|&k| compact.contains(&g.coord(k)[..g.dim()]) && w.get(k) >= floor)
        .map(|k| r.get(k).abs())
        .fold(0.0, f64::max))
}
