//! Pseudo-time marching for `G_h(u) + s(x, u) = 0`, where `G_h` is the
//! monotone scheme and `s` a zero-order term. Two integrators share one
//! contract: explicit (semi-implicit in the absorption) relaxation, and
//! pseudo-transient continuation, i.e. backward Euler steps solved by
//! one Newton iteration with a growing time step.

use rayon::prelude::*;

use crate::banded::BandedMatrix;
use crate::dirichlet::{Method, SolveStatus};
use crate::grid::{NodeEval, Scheme};

const PAR_THRESHOLD: usize = 2048;
/// Relative update below which the full Newton linearisation is used.
const TANGENT_SWITCH: f64 = 0.05;
/// Newton steps tried by the hybrid method before falling back to relaxation.
const NEWTON_BUDGET: usize = 5000;
/// Extra Newton steps taken once the tolerance is met, kept only while they
/// reduce the residual; they make the result nearly independent of where
/// the tolerance happened to be crossed.
const POLISH_STEPS: usize = 2;
const MAX_SWEEPS: usize = 1000;

#[derive(Debug, Clone, Copy)]
pub(crate) enum Source<'a> {
    /// `s = −f`, i.e. the equation `G_h(u) = f`.
    Rhs(&'a [f64]),
    /// `s = a u^q + push`.
    Reaction {
        a: &'a [f64],
        q: f64,
        push: Option<&'a [f64]>,
    },
}

impl Source<'_> {
    #[inline]
    fn value(&self, idx: usize, u: f64) -> f64 {
        match *self {
            Source::Rhs(f) => -f[idx],
            Source::Reaction { a, q, push } => {
                let p = push.map_or(0.0, |p| p[idx]);
                let a = a[idx];
                if a == 0.0 || u <= 0.0 {
                    p
                } else {
                    a * u.powf(q) + p
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct MarchConfig {
    pub tolerance: f64,
    pub max_steps: usize,
    pub safety: f64,
    pub method: Method,
    /// Project onto `u ≥ 0` after every step.
    pub clamp: bool,
    /// Declare divergence when `‖u‖∞` exceeds this.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub u: Vec<f64>,
    pub residual: f64,
    pub steps: usize,
    pub status: SolveStatus,
}

/// Scheme evaluations and the residual at every unknown.
fn evaluate(scheme: &Scheme, src: Source, u: &[f64]) -> (Vec<NodeEval>, Vec<f64>) {
    let delta = scheme.delta(u);
    let one = |k: usize| {
        let ev = scheme.eval_with(u, k, delta);
        let r = ev.value + src.value(scheme.node(k), u[scheme.node(k)]);
        (ev, r)
    };
    if scheme.len() >= PAR_THRESHOLD {
        (0..scheme.len()).into_par_iter().map(one).unzip()
    } else {
        (0..scheme.len()).map(one).unzip()
    }
}

/// Residual at every unknown.
pub(crate) fn residual(scheme: &Scheme, src: Source, u: &[f64]) -> Vec<f64> {
    let delta = scheme.delta(u);
    let one = |k: usize| scheme.eval_with(u, k, delta).value + src.value(scheme.node(k), u[scheme.node(k)]);
    if scheme.len() >= PAR_THRESHOLD {
        (0..scheme.len()).into_par_iter().map(one).collect()
    } else {
        (0..scheme.len()).map(one).collect()
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

/// Mean residual relative to the mean size of the two terms it balances;
/// invariant under the scaling symmetry of the equation.
fn relative_mean(scheme: &Scheme, src: Source, u: &[f64], evals: &[NodeEval], r: &[f64]) -> f64 {
    let terms: Vec<f64> = evals
        .iter()
        .enumerate()
        .map(|(k, e)| e.value.abs() + src.value(scheme.node(k), u[scheme.node(k)]).abs())
        .collect();
    let scale = rms(&terms);
    if scale == 0.0 {
        0.0
    } else {
        rms(r) / scale
    }
}

fn norm_ok(u: &[f64], bound: Option<f64>) -> bool {
    match bound {
        Some(b) => sup(u) <= b,
        None => true,
    }
}

pub(crate) fn march(scheme: &Scheme, src: Source, u0: Vec<f64>, cfg: &MarchConfig) -> Outcome {
    match cfg.method {
        Method::Relaxation => relax(scheme, src, u0, cfg, cfg.max_steps),
        Method::Newton => newton(scheme, src, u0, cfg, cfg.max_steps),
        Method::Hybrid => {
            let budget = cfg.max_steps.min(NEWTON_BUDGET);
            let first = newton(scheme, src, u0, cfg, budget);
            if first.status != SolveStatus::MaxSteps || cfg.max_steps <= budget {
                return first;
            }
            let used = first.steps;
            let mut second = relax(scheme, src, first.u, cfg, cfg.max_steps - used);
            second.steps += used;
            second
        }
    }
}

/// Explicit step size `safety · h² / (2NΛ · max(g_max, h^γ))`.
fn explicit_dt(scheme: &Scheme, evals: &[NodeEval], safety: f64) -> f64 {
    let g_max = evals.iter().map(|e| e.g).fold(0.0, f64::max);
    let floor = scheme.grid().h_min().powf(scheme.gamma());
    safety / (scheme.stiffness_bound() * g_max.max(floor))
}

fn relax(scheme: &Scheme, src: Source, mut u: Vec<f64>, cfg: &MarchConfig, max_steps: usize) -> Outcome {
    let mut steps = 0;
    loop {
        let (evals, r) = evaluate(scheme, src, &u);
        let res = sup(&r);
        if !res.is_finite() || !norm_ok(&u, cfg.bound) {
            return Outcome {
                u,
                residual: res,
                steps,
                status: SolveStatus::Diverged,
            };
        }
        if res <= cfg.tolerance {
            return Outcome {
                u,
                residual: res,
                steps,
                status: SolveStatus::Converged,
            };
        }
        if steps >= max_steps {
            return Outcome {
                u,
                residual: res,
                steps,
                status: SolveStatus::MaxSteps,
            };
        }
        let dt = explicit_dt(scheme, &evals, cfg.safety);
        for k in 0..scheme.len() {
            let idx = scheme.node(k);
            let uk = u[idx];
            let next = match src {
                Source::Rhs(_) => uk + dt * r[k],
                Source::Reaction { a, q, push } => {
                    let ak = a[idx];
                    if ak >= 0.0 {
                        uk + dt * r[k]
                    } else {
                        // absorption treated implicitly
                        let damp = if uk > 0.0 { -ak * uk.powf(q - 1.0) } else { 0.0 };
                        (uk + dt * (evals[k].value + push.map_or(0.0, |p| p[idx]))) / (1.0 + dt * damp)
                    }
                }
            };
            u[idx] = if cfg.clamp { next.max(0.0) } else { next };
        }
        steps += 1;
    }
}

/// Derivative of the zero-order term, adjusted for the `u^q` singularity.
/// `None` marks a node pinned at zero. Without `tangent` the growth term
/// `a⁺ u^q` is lagged (Picard), which climbs monotonically from below where
/// the tangent of the concave source would overshoot.
fn source_derivative(src: Source, idx: usize, u: f64, g_value: f64, cap: f64, tangent: bool) -> Option<f64> {
    match src {
        Source::Rhs(_) => Some(0.0),
        Source::Reaction { a, q, push } => {
            let a = a[idx];
            if a == 0.0 {
                return Some(0.0);
            }
            if a > 0.0 {
                if !tangent {
                    return Some(0.0);
                }
                let d = if u > 0.0 {
                    a * q * u.powf(q - 1.0)
                } else if q < 1.0 {
                    f64::INFINITY
                } else if q == 1.0 {
                    a
                } else {
                    0.0
                };
                Some(d.min(cap))
            } else {
                // balance point of the absorption against the diffusion push
                let drive = g_value + push.map_or(0.0, |p| p[idx]);
                let ustar = (drive.max(0.0) / -a).powf(1.0 / q);
                let ueff = u.max(ustar);
                if ueff <= 0.0 {
                    if q > 1.0 {
                        return Some(0.0);
                    }
                    return None;
                }
                Some(a * q * ueff.powf(q - 1.0))
            }
        }
    }
}

/// Monotone iteration followed by pseudo-transient continuation.
///
/// For a reaction source the growth term is first lagged: each sweep solves
/// `G_h(v) − a⁻ v^q = −a⁺ u^q` exactly. From a subsolution the sweeps
/// increase monotonically towards the smallest solution above it, which
/// matters when the start is many orders of magnitude below the solution.
fn newton(scheme: &Scheme, src: Source, u0: Vec<f64>, cfg: &MarchConfig, max_steps: usize) -> Outcome {
    let Source::Reaction { a, q, push: None } = src else {
        return ptc(scheme, src, u0, cfg, max_steps);
    };
    let absorb: Vec<f64> = a.iter().map(|&v| v.min(0.0)).collect();
    let mut push = vec![0.0; a.len()];
    let mut u = u0;
    let mut steps = 0;
    for _ in 0..MAX_SWEEPS {
        if steps >= max_steps {
            break;
        }
        let r = residual(scheme, src, &u);
        if sup(&r) <= cfg.tolerance {
            break;
        }
        for k in 0..scheme.len() {
            let idx = scheme.node(k);
            push[idx] = if a[idx] > 0.0 && u[idx] > 0.0 { a[idx] * u[idx].powf(q) } else { 0.0 };
        }
        let lagged = Source::Reaction {
            a: &absorb,
            q,
            push: Some(&push),
        };
        let inner = ptc(scheme, lagged, u.clone(), cfg, max_steps - steps);
        steps += inner.steps;
        if inner.status != SolveStatus::Converged {
            break;
        }
        let change = u.iter().zip(&inner.u).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        u = inner.u;
        if change <= TANGENT_SWITCH * sup(&u) {
            break;
        }
    }
    let mut out = ptc(scheme, src, u, cfg, max_steps.saturating_sub(steps));
    out.steps += steps;
    out
}

/// Diagonal of `−∂G_h/∂u` at unknown `k`.
fn diffusion_diagonal(scheme: &Scheme, ev: &NodeEval, k: usize) -> f64 {
    let mut d = 0.0;
    scheme.jacobian_row(ev, k, |j, v| {
        if j == k {
            d -= v;
        }
    });
    d
}

/// Solves the scalar equation of each stiff absorbing node exactly, with
/// its neighbours frozen. Near a free boundary `|a| u^q` with small `q`
/// changes by O(1) between `u = 0` and `u = 1e-20`, which no Newton step
/// resolves. Returns whether `u` changed.
fn settle_absorption(scheme: &Scheme, src: Source, u: &mut [f64], evals: &[NodeEval], r: &[f64], tol: f64) -> bool {
    let Source::Reaction { a, q, .. } = src else {
        return false;
    };
    if q >= 1.0 {
        return false;
    }
    let delta = scheme.delta(u);
    let stiff: Vec<usize> = (0..scheme.len())
        .filter(|&k| {
            let idx = scheme.node(k);
            let (ak, uk) = (a[idx], u[idx]);
            ak < 0.0
                && r[k].abs() > tol
                && (uk <= 0.0 || -ak * q * uk.powf(q - 1.0) > diffusion_diagonal(scheme, &evals[k], k))
        })
        .collect();
    if stiff.is_empty() {
        return false;
    }
    let frozen = u.to_vec();
    let solved: Vec<(usize, f64)> = stiff
        .par_iter()
        .map(|&k| {
            let idx = scheme.node(k);
            let mut w = frozen.clone();
            let mut f = |t: f64| {
                w[idx] = t;
                scheme.eval_with(&w, k, delta).value + src.value(idx, t)
            };
            if f(0.0) <= 0.0 {
                return (idx, 0.0);
            }
            // bracket the root in v = t^q, where the absorption is linear
            let mut hi = frozen[idx].max(f64::MIN_POSITIVE);
            let mut guard = 0;
            while f(hi) > 0.0 && guard < 200 {
                hi *= 2.0;
                guard += 1;
            }
            let (mut vlo, mut vhi) = (0.0, hi.powf(q));
            for _ in 0..200 {
                let vm = 0.5 * (vlo + vhi);
                if vm <= vlo || vm >= vhi {
                    break;
                }
                if f(vm.powf(1.0 / q)) > 0.0 {
                    vlo = vm;
                } else {
                    vhi = vm;
                }
            }
            let (tlo, thi) = (vlo.powf(1.0 / q), vhi.powf(1.0 / q));
            (idx, if f(tlo).abs() <= f(thi).abs() { tlo } else { thi })
        })
        .collect();
    let mut changed = false;
    for (idx, t) in solved {
        changed |= u[idx] != t;
        u[idx] = t;
    }
    changed
}

fn ptc(scheme: &Scheme, src: Source, mut u: Vec<f64>, cfg: &MarchConfig, max_steps: usize) -> Outcome {
    let n = scheme.len();
    let bw = scheme.bandwidth();
    let (mut evals, mut r) = evaluate(scheme, src, &u);
    let mut res = sup(&r);
    let mut mean = relative_mean(scheme, src, &u, &evals, &r);
    let mut dt = 10.0 * explicit_dt(scheme, &evals, cfg.safety);
    let dt_floor = dt * 1e-12;
    let mut steps = 0;
    let mut stalls = 0;
    let mut tangent = true;
    let mut polished = 0;
    loop {
        if !res.is_finite() || !norm_ok(&u, cfg.bound) {
            return Outcome {
                u,
                residual: res,
                steps,
                status: SolveStatus::Diverged,
            };
        }
        let polishing = res <= cfg.tolerance;
        if polishing && (polished == POLISH_STEPS || res == 0.0 || steps >= max_steps) {
            return Outcome {
                u,
                residual: res,
                steps,
                status: SolveStatus::Converged,
            };
        }
        if polishing {
            polished += 1;
            tangent = true;
        }
        if steps >= max_steps || dt < dt_floor {
            return Outcome {
                u,
                residual: res,
                steps,
                status: SolveStatus::MaxSteps,
            };
        }
        steps += 1;

        let mut m = BandedMatrix::zeros(n, bw, bw);
        let mut rhs = r.clone();
        let inv_dt = 1.0 / dt;
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(24);
        for k in 0..n {
            let idx = scheme.node(k);
            let uk = u[idx];
            if cfg.clamp && uk <= 0.0 && r[k] <= 0.0 {
                m.add(k, k, 1.0);
                rhs[k] = 0.0;
                continue;
            }
            row.clear();
            scheme.jacobian_row(&evals[k], k, |j, v| row.push((j, v)));
            let diag_f: f64 = -row.iter().filter(|e| e.0 == k).map(|e| e.1).sum::<f64>();
            match source_derivative(src, idx, uk, evals[k].value, 0.5 * (inv_dt + diag_f.max(0.0)), tangent) {
                Some(d) => {
                    for &(j, v) in &row {
                        m.add(k, j, -v);
                    }
                    m.add(k, k, inv_dt - d);
                }
                None => {
                    m.add(k, k, 1.0);
                    rhs[k] = 0.0;
                }
            }
        }
        if m.solve(&mut rhs).is_err() {
            dt *= 0.25;
            continue;
        }
        let mut trial = u.clone();
        for k in 0..n {
            let idx = scheme.node(k);
            let v = u[idx] + rhs[k];
            trial[idx] = if cfg.clamp { v.max(0.0) } else { v };
        }
        let (mut e2, mut r2) = evaluate(scheme, src, &trial);
        if settle_absorption(scheme, src, &mut trial, &e2, &r2, cfg.tolerance) {
            (e2, r2) = evaluate(scheme, src, &trial);
        }
        let (res2, mean2) = (sup(&r2), relative_mean(scheme, src, &trial, &e2, &r2));
        if polishing && !(res2 < res) {
            return Outcome {
                u,
                residual: res,
                steps,
                status: SolveStatus::Converged,
            };
        }
        // step control on the relative mean residual: in degenerate regions the
        // sup can sit still for many steps while the profile develops
        if res2.is_finite() && mean2 <= 1.5 * mean {
            let growth = if mean2 < mean {
                (mean / mean2).clamp(2.0, 4.0)
            } else {
                1.0
            };
            if mean2 > 0.99 * mean {
                stalls += 1;
            } else {
                stalls = 0;
            }
            dt = (dt * growth).min(1e15);
            if stalls > 50 {
                dt = (dt * 0.1).max(dt_floor * 10.0);
                stalls = 0;
            }
            let change = u.iter().zip(&trial).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            tangent = change <= TANGENT_SWITCH * sup(&trial);
            u = trial;
            evals = e2;
            r = r2;
            res = res2;
            mean = mean2;
        } else {
            dt *= 0.25;
        }
    }
}
