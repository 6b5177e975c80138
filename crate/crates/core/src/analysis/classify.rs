use std::fmt;

use crate::grid::{directions, DirectionSet, GridFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Trivial,
    DeadCore,
    PositiveInterior,
    PositivityCone,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Trivial => "trivial",
            Verdict::DeadCore => "dead_core",
            Verdict::PositiveInterior => "positive_interior",
            Verdict::PositivityCone => "positivity_cone",
        }
    }

    /// Positive inside with a strictly positive Hopf margin.
    pub fn is_positive(&self) -> bool {
        *self == Verdict::PositivityCone
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub verdict: Verdict,
    /// Near-zero nodes that belong to a full stencil ball of near-zero nodes.
    pub dead_core_nodes: Vec<usize>,
    pub interior_min: f64,
    /// Smallest inward slope `u(first interior node) / h` over boundary nodes.
    pub hopf_margin: f64,
    pub barrier_checked: Option<bool>,
    pub tol_zero: f64,
    pub sup_norm: f64,
}

impl ClassificationReport {
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("verdict".to_string(), self.verdict.name().to_string()),
            ("sup_norm".into(), format!("{:e}", self.sup_norm)),
            ("interior_min".into(), format!("{:e}", self.interior_min)),
            ("hopf_margin".into(), format!("{:e}", self.hopf_margin)),
            ("tol_zero".into(), format!("{:e}", self.tol_zero)),
            ("dead_core_nodes".into(), self.dead_core_nodes.len().to_string()),
        ];
        if let Some(b) = self.barrier_checked {
            v.push(("barrier_checked".into(), b.to_string()));
        }
        v
    }
}

/// `h² ‖u‖∞` with `h` the largest spacing.
pub fn default_tol_zero(u: &GridFunction) -> f64 {
    u.grid().h_max().powi(2) * u.sup_norm()
}

pub fn classify_default(u: &GridFunction) -> ClassificationReport {
    classify(u, default_tol_zero(u))
}

/// Classifies a nonnegative field with absolute zero threshold `tol_zero`.
pub fn classify(u: &GridFunction, tol_zero: f64) -> ClassificationReport {
    let g = u.grid();
    let sup = u.sup_norm();
    let interior = g.interior();
    let interior_min = interior.iter().map(|&k| u.get(k)).fold(f64::INFINITY, f64::min);
    let hopf_margin = hopf_margin(u);
    if sup <= tol_zero {
        return ClassificationReport {
            verdict: Verdict::Trivial,
            dead_core_nodes: Vec::new(),
            interior_min,
            hopf_margin,
            barrier_checked: None,
            tol_zero,
            sup_norm: sup,
        };
    }
    let zero = |k: usize| g.is_interior(k) && u.get(k) < tol_zero;
    let dirs = directions(g, DirectionSet::Compact);
    let mut in_core = vec![false; g.len()];
    for &k in &interior {
        if !zero(k) {
            continue;
        }
        let mut ball = vec![k];
        let full = dirs.iter().all(|d| {
            [1isize, -1].iter().all(|&s| match g.offset(k, s * d.offset[0], s * d.offset[1]) {
                Some(nb) if zero(nb) => {
                    ball.push(nb);
                    true
                }
                _ => false,
            })
        });
        if full {
            for b in ball {
                in_core[b] = true;
            }
        }
    }
    let dead_core_nodes: Vec<usize> = (0..g.len()).filter(|&k| in_core[k]).collect();
    let verdict = if !dead_core_nodes.is_empty() {
        Verdict::DeadCore
    } else if interior_min > tol_zero && hopf_margin > tol_zero / g.h_min() {
        Verdict::PositivityCone
    } else {
        Verdict::PositiveInterior
    };
    ClassificationReport {
        verdict,
        dead_core_nodes,
        interior_min,
        hopf_margin,
        barrier_checked: None,
        tol_zero,
        sup_norm: sup,
    }
}

/// `min` over boundary nodes of the one-sided inward slope `u(x + h ν)/h`.
fn hopf_margin(u: &GridFunction) -> f64 {
    let g = u.grid();
    let shape = g.shape();
    let mut m = f64::INFINITY;
    for k in g.boundary() {
        let (i, j) = g.ij(k);
        // inward normal; corners have none
        let on_x = i == 0 || i + 1 == shape[0];
        let on_y = g.dim() == 2 && (j == 0 || j + 1 == shape[1]);
        if on_x && on_y {
            continue;
        }
        let (di, dj, h) = if on_x {
            (if i == 0 { 1 } else { -1 }, 0, g.h(0))
        } else {
            (0, if j == 0 { 1 } else { -1 }, g.h(1))
        };
        if let Some(nb) = g.offset(k, di, dj) {
            m = m.min((u.get(nb) - u.get(k)) / h);
        }
    }
    m
}

/// Largest `M` with `u ≥ M d` at interior nodes, `d` the distance to the
/// boundary.
pub fn hopf_bound(u: &GridFunction) -> f64 {
    let g = u.grid();
    g.interior()
        .into_iter()
        .map(|k| u.get(k) / g.boundary_distance(k))
        .fold(f64::INFINITY, f64::min)
}
