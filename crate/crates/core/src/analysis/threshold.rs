//! Bisection on the positivity verdict along a one-parameter family of
//! problems, after a parallel coarse sweep.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::classify::{classify_default, Verdict};
use crate::dirichlet::IterationControl;
use crate::error::{invalid, Result};
use crate::grid::{Ball, WeightField};
use crate::solver::{solve, Init, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parameter {
    /// Scale of the negative part of the weight, `a_s = a⁺ − s a⁻`.
    S,
    /// The exponent `q`.
    Q,
}

impl Parameter {
    pub fn name(&self) -> &'static str {
        match self {
            Parameter::S => "s",
            Parameter::Q => "q",
        }
    }
}

type Builder = Arc<dyn Fn(f64) -> Result<ProblemSpec> + Send + Sync>;

/// A one-parameter family of problems, each solved from the subsolution
/// on `ball`.
#[derive(Clone)]
pub struct Family {
    pub parameter: Parameter,
    pub ball: Ball,
    build: Builder,
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Family")
            .field("parameter", &self.parameter)
            .field("ball", &self.ball)
            .finish()
    }
}

impl Family {
    /// `a_s = a⁺ − s a⁻` for the weight of `base`.
    pub fn negative_part_scale(base: &ProblemSpec, ball: Ball) -> Self {
        let base = base.clone();
        Family {
            parameter: Parameter::S,
            ball,
            build: Arc::new(move |s| {
                let w = WeightField::sample(*base.grid(), base.weight().source().clone().split_scaled(s))?;
                base.with_weight(w)
            }),
        }
    }

    /// `base` with exponent `q`.
    pub fn exponent(base: &ProblemSpec, ball: Ball) -> Self {
        let base = base.clone();
        Family {
            parameter: Parameter::Q,
            ball,
            build: Arc::new(move |q| base.with_q(q)),
        }
    }

    pub fn custom(parameter: Parameter, ball: Ball, f: impl Fn(f64) -> Result<ProblemSpec> + Send + Sync + 'static) -> Self {
        Family {
            parameter,
            ball,
            build: Arc::new(f),
        }
    }

    pub fn problem(&self, value: f64) -> Result<ProblemSpec> {
        (self.build)(value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdOptions {
    /// Equispaced coarse probes, endpoints included.
    pub probes: usize,
    pub min_bisections: usize,
    /// Target bracket width relative to the initial bracket.
    pub rel_width: f64,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            probes: 16,
            min_bisections: 8,
            rel_width: 2f64.powi(-8),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdProbe {
    pub value: f64,
    pub verdict: Verdict,
    pub residual: f64,
    pub interior_min: f64,
    pub hopf_margin: f64,
    pub converged: bool,
    pub steps: usize,
    /// `true` for bisection probes, `false` for the coarse sweep.
    pub bisection: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdStatus {
    Located,
    NoThreshold,
}

#[derive(Debug, Clone)]
pub struct ThresholdReport {
    pub parameter: Parameter,
    pub initial: (f64, f64),
    /// Final bracket (`initial` when no threshold was found).
    pub bracket: (f64, f64),
    pub probes: Vec<ThresholdProbe>,
    pub estimate: Option<f64>,
    pub status: ThresholdStatus,
    pub anomalies: Vec<String>,
}

impl ThresholdReport {
    /// Probes sorted by parameter value.
    pub fn sorted_probes(&self) -> Vec<ThresholdProbe> {
        let mut v = self.probes.clone();
        v.sort_by(|a, b| a.value.total_cmp(&b.value));
        v
    }

    /// Number of positive/non-positive changes along the sorted probes.
    pub fn verdict_changes(&self) -> usize {
        let v = self.sorted_probes();
        v.windows(2).filter(|w| w[0].verdict.is_positive() != w[1].verdict.is_positive()).count()
    }

    pub fn is_monotone(&self) -> bool {
        self.verdict_changes() <= 1
    }

    pub fn relative_width(&self) -> f64 {
        (self.bracket.1 - self.bracket.0) / (self.initial.1 - self.initial.0)
    }

    pub fn to_key_values(&self) -> Vec<(String, String)> {
        vec![
            ("parameter".into(), self.parameter.name().into()),
            (
                "status".into(),
                match self.status {
                    ThresholdStatus::Located => "located".into(),
                    ThresholdStatus::NoThreshold => "no_threshold".into(),
                },
            ),
            ("bracket_lo".into(), format!("{:?}", self.bracket.0)),
            ("bracket_hi".into(), format!("{:?}", self.bracket.1)),
            (
                "estimate".into(),
                self.estimate.map_or_else(|| "none".to_string(), |e| format!("{e:?}")),
            ),
            ("probes".into(), self.probes.len().to_string()),
            ("monotone".into(), self.is_monotone().to_string()),
            ("anomalies".into(), self.anomalies.len().to_string()),
        ]
    }
}

fn probe(family: &Family, value: f64, ctl: &IterationControl, bisection: bool) -> Result<ThresholdProbe> {
    let p = family.problem(value)?;
    let rep = solve(&p, Init::Subsolution(family.ball), ctl)?;
    let c = classify_default(&rep.solution);
    Ok(ThresholdProbe {
        value,
        verdict: c.verdict,
        residual: rep.residual_sup,
        interior_min: c.interior_min,
        hopf_margin: c.hopf_margin,
        converged: rep.converged(),
        steps: rep.steps,
        bisection,
    })
}

pub fn estimate_threshold(
    family: &Family,
    bracket: (f64, f64),
    ctl: &IterationControl,
    opts: &ThresholdOptions,
) -> Result<ThresholdReport> {
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return invalid(format!("bracket must satisfy lo < hi (got [{lo}, {hi}])"));
    }
    if opts.probes < 2 {
        return invalid("need at least 2 sweep probes");
    }
    if !(opts.rel_width > 0.0) {
        return invalid("relative bracket width must be > 0");
    }
    let values: Vec<f64> = (0..opts.probes)
        .map(|i| lo + (hi - lo) * i as f64 / (opts.probes - 1) as f64)
        .collect();
    let mut probes: Vec<ThresholdProbe> = values
        .par_iter()
        .map(|&v| probe(family, v, ctl, false))
        .collect::<Result<_>>()?;
    let mut anomalies = Vec::new();
    for p in probes.iter().filter(|p| !p.converged) {
        anomalies.push(format!("probe {}={} did not converge (residual {:e})", family.parameter.name(), p.value, p.residual));
    }
    let flips: Vec<usize> = (0..probes.len() - 1)
        .filter(|&i| probes[i].verdict.is_positive() != probes[i + 1].verdict.is_positive())
        .collect();
    if flips.len() > 1 {
        anomalies.push(format!(
            "non-monotone sweep: verdict changes at {} places",
            flips.len()
        ));
    }
    let Some(&first) = flips.first() else {
        return Ok(ThresholdReport {
            parameter: family.parameter,
            initial: bracket,
            bracket,
            probes,
            estimate: None,
            status: ThresholdStatus::NoThreshold,
            anomalies,
        });
    };
    let (mut a, mut b) = (probes[first].value, probes[first + 1].value);
    let pos_a = probes[first].verdict.is_positive();
    let mut steps = 0;
    while steps < opts.min_bisections || (b - a) > opts.rel_width * (hi - lo) {
        let mid = 0.5 * (a + b);
        let p = probe(family, mid, ctl, true)?;
        if !p.converged {
            anomalies.push(format!("probe {}={} did not converge (residual {:e})", family.parameter.name(), mid, p.residual));
        }
        if p.verdict.is_positive() == pos_a {
            a = mid;
        } else {
            b = mid;
        }
        probes.push(p);
        steps += 1;
    }
    let mut report = ThresholdReport {
        parameter: family.parameter,
        initial: bracket,
        bracket: (a, b),
        probes,
        estimate: Some(0.5 * (a + b)),
        status: ThresholdStatus::Located,
        anomalies,
    };
    if !report.is_monotone() && flips.len() <= 1 {
        report
            .anomalies
            .push(format!("bisection produced {} verdict changes", report.verdict_changes()));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, WeightSource};
    use crate::operators::OperatorSpec;

    fn sinsplit_family(n: usize) -> Family {
        let g = Grid::new_1d(0.0, 2.0, n).unwrap();
        let w = WeightField::sample(g, WeightSource::SinSplit { s: 1.0 }).unwrap();
        let p = ProblemSpec::new(g, OperatorSpec::laplacian(1).unwrap(), 0.0, 0.5, w).unwrap();
        Family::negative_part_scale(&p, Ball::interval(0.2, 0.8))
    }

    #[test]
    fn degenerate_bracket_is_rejected() {
        let f = sinsplit_family(39);
        assert!(estimate_threshold(&f, (1.0, 1.0), &IterationControl::default(), &ThresholdOptions::default()).is_err());
    }

    #[test]
    fn no_threshold_in_positive_range() {
        let f = sinsplit_family(39);
        let opts = ThresholdOptions {
            probes: 3,
            ..ThresholdOptions::default()
        };
        let r = estimate_threshold(&f, (0.0, 0.01), &IterationControl::default(), &opts).unwrap();
        assert_eq!(r.status, ThresholdStatus::NoThreshold);
        assert!(r.estimate.is_none());
        assert!(r.probes.iter().all(|p| p.verdict == Verdict::PositivityCone));
    }
}
