//! Fully nonlinear elliptic operators `F(x, X)` and randomized checks of
//! their structural axioms (uniform ellipticity against the Pucci
//! extremal operators, positive 1-homogeneity, Lipschitz continuity in x).

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::matrix::{eigenvalues, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Pucci extremal operator `M±_{λ,Λ}(X)`.
///
/// `M⁺ = Λ Σ_{e>0} e + λ Σ_{e<0} e` and `M⁻ = λ Σ_{e>0} e + Λ Σ_{e<0} e`.
pub fn pucci(x: &SymMatrix, lambda: f64, big_lambda: f64, sign: Sign) -> f64 {
    let s = eigenvalues(x);
    pucci_of_spectrum(s.positive_sum(), s.negative_sum(), lambda, big_lambda, sign)
}

pub(crate) fn pucci_of_spectrum(pos: f64, neg: f64, lambda: f64, big_lambda: f64, sign: Sign) -> f64 {
    match sign {
        Sign::Plus => big_lambda * pos + lambda * neg,
        Sign::Minus => lambda * pos + big_lambda * neg,
    }
}

/// Scalar Pucci weight for a single curvature `c`.
#[inline]
pub(crate) fn pucci_scalar(c: f64, lambda: f64, big_lambda: f64, sign: Sign) -> f64 {
    match (sign, c >= 0.0) {
        (Sign::Plus, true) | (Sign::Minus, false) => big_lambda * c,
        _ => lambda * c,
    }
}

type FieldFn = dyn Fn(&[f64]) -> SymMatrix + Send + Sync;

/// Coefficient field `A(x)` of a linear operator `Tr(A(x) X)`.
#[derive(Clone)]
pub enum CoefficientField {
    Constant(SymMatrix),
    Function {
        name: String,
        dim: usize,
        f: Arc<FieldFn>,
    },
}

impl CoefficientField {
    pub fn function(
        name: impl Into<String>,
        dim: usize,
        f: impl Fn(&[f64]) -> SymMatrix + Send + Sync + 'static,
    ) -> Self {
        CoefficientField::Function {
            name: name.into(),
            dim,
            f: Arc::new(f),
        }
    }

    pub fn at(&self, x: &[f64]) -> SymMatrix {
        match self {
            CoefficientField::Constant(m) => *m,
            CoefficientField::Function { f, .. } => f(x),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            CoefficientField::Constant(m) => m.dim(),
            CoefficientField::Function { dim, .. } => *dim,
        }
    }
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientField::Constant(m) => write!(f, "Constant({m:?})"),
            CoefficientField::Function { name, dim, .. } => write!(f, "Function({name}, dim={dim})"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum OperatorKind {
    LinearTrace(CoefficientField),
    PucciPlus,
    PucciMinus,
    HjbInf(Vec<CoefficientField>),
    HjbSup(Vec<CoefficientField>),
    PLaplacian { p: f64 },
}

/// Description of `F` together with its ellipticity constants and an
/// optional Lipschitz bound for the x-dependence.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    kind: OperatorKind,
    lambda: f64,
    big_lambda: f64,
    lipschitz: Option<f64>,
}

fn check_ellipticity(lambda: f64, big_lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= big_lambda && big_lambda.is_finite()) {
        return invalid(format!(
            "ellipticity constants must satisfy 0 < λ ≤ Λ (got λ = {lambda}, Λ = {big_lambda})"
        ));
    }
    Ok(())
}

impl OperatorSpec {
    pub fn linear_trace(field: CoefficientField, lambda: f64, big_lambda: f64) -> Result<Self> {
        check_ellipticity(lambda, big_lambda)?;
        if let CoefficientField::Constant(m) = &field {
            check_matrix_bounds(m, lambda, big_lambda)?;
        }
        Ok(OperatorSpec {
            kind: OperatorKind::LinearTrace(field),
            lambda,
            big_lambda,
            lipschitz: None,
        })
    }

    /// `Tr(X)`: the Laplacian in dimension `dim`.
    pub fn laplacian(dim: usize) -> Result<Self> {
        Self::linear_trace(CoefficientField::Constant(SymMatrix::identity(dim)?), 1.0, 1.0)
    }

    pub fn pucci_plus(lambda: f64, big_lambda: f64) -> Result<Self> {
        check_ellipticity(lambda, big_lambda)?;
        Ok(OperatorSpec {
            kind: OperatorKind::PucciPlus,
            lambda,
            big_lambda,
            lipschitz: None,
        })
    }

    pub fn pucci_minus(lambda: f64, big_lambda: f64) -> Result<Self> {
        check_ellipticity(lambda, big_lambda)?;
        Ok(OperatorSpec {
            kind: OperatorKind::PucciMinus,
            lambda,
            big_lambda,
            lipschitz: None,
        })
    }

    pub fn hjb_inf(family: Vec<CoefficientField>, lambda: f64, big_lambda: f64) -> Result<Self> {
        Self::hjb(family, lambda, big_lambda, true)
    }

    pub fn hjb_sup(family: Vec<CoefficientField>, lambda: f64, big_lambda: f64) -> Result<Self> {
        Self::hjb(family, lambda, big_lambda, false)
    }

    fn hjb(family: Vec<CoefficientField>, lambda: f64, big_lambda: f64, inf: bool) -> Result<Self> {
        check_ellipticity(lambda, big_lambda)?;
        if family.is_empty() {
            return invalid("HJB operators need a nonempty family of coefficient fields");
        }
        let d = family[0].dim();
        for f in &family {
            if f.dim() != d {
                return invalid("HJB family members must share one dimension");
            }
            if let CoefficientField::Constant(m) = f {
                check_matrix_bounds(m, lambda, big_lambda)?;
            }
        }
        Ok(OperatorSpec {
            kind: if inf {
                OperatorKind::HjbInf(family)
            } else {
                OperatorKind::HjbSup(family)
            },
            lambda,
            big_lambda,
            lipschitz: None,
        })
    }

    /// Non-divergence p-Laplacian. Its ellipticity constants are those of
    /// `I + (p−2) ξ̂⊗ξ̂`, i.e. `min(1, p−1)` and `max(1, p−1)`.
    pub fn p_laplacian(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return invalid(format!("p-Laplacian requires p > 1 (got p = {p})"));
        }
        Ok(OperatorSpec {
            kind: OperatorKind::PLaplacian { p },
            lambda: 1.0f64.min(p - 1.0),
            big_lambda: 1.0f64.max(p - 1.0),
            lipschitz: None,
        })
    }

    pub fn with_lipschitz(mut self, bound: f64) -> Result<Self> {
        if !(bound >= 0.0 && bound.is_finite()) {
            return invalid(format!("Lipschitz bound must be finite and ≥ 0 (got {bound})"));
        }
        self.lipschitz = Some(bound);
        Ok(self)
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    /// Gradient exponent forced by the operator (`p − 2` for the p-Laplacian).
    pub fn effective_gamma(&self) -> Option<f64> {
        match self.kind {
            OperatorKind::PLaplacian { p } => Some(p - 2.0),
            _ => None,
        }
    }

    /// Dimension fixed by constant coefficient data, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match &self.kind {
            OperatorKind::LinearTrace(f) => Some(f.dim()),
            OperatorKind::HjbInf(fs) | OperatorKind::HjbSup(fs) => Some(fs[0].dim()),
            _ => None,
        }
    }

    /// Whether `F` is invariant under orthogonal changes of variables.
    pub fn is_isotropic(&self) -> bool {
        match &self.kind {
            OperatorKind::PucciPlus | OperatorKind::PucciMinus | OperatorKind::PLaplacian { .. } => true,
            OperatorKind::LinearTrace(CoefficientField::Constant(m)) => {
                let d = m.dim();
                (0..d).all(|i| (0..d).all(|j| if i == j { m.get(i, i) == m.get(0, 0) } else { m.get(i, j) == 0.0 }))
            }
            _ => false,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            OperatorKind::LinearTrace(_) => "linear_trace",
            OperatorKind::PucciPlus => "pucci_plus",
            OperatorKind::PucciMinus => "pucci_minus",
            OperatorKind::HjbInf(_) => "hjb_inf",
            OperatorKind::HjbSup(_) => "hjb_sup",
            OperatorKind::PLaplacian { .. } => "p_laplacian",
        }
    }

    /// Checks `λI ≤ A(x) ≤ ΛI` for every linear coefficient field at the
    /// given sample points.
    pub fn check_coefficients<'a>(&self, points: impl IntoIterator<Item = &'a [f64]>) -> Result<()> {
        let fields: Vec<&CoefficientField> = match &self.kind {
            OperatorKind::LinearTrace(f) => vec![f],
            OperatorKind::HjbInf(fs) | OperatorKind::HjbSup(fs) => fs.iter().collect(),
            _ => return Ok(()),
        };
        for x in points {
            for f in &fields {
                let m = f.at(x);
                check_matrix_bounds(&m, self.lambda, self.big_lambda).map_err(|e| {
                    Error::Invalid(format!("coefficient field at x = {x:?}: {e}"))
                })?;
            }
        }
        Ok(())
    }
}

fn check_matrix_bounds(m: &SymMatrix, lambda: f64, big_lambda: f64) -> Result<()> {
    let s = eigenvalues(m);
    let slack = 1e-12 * big_lambda;
    let lo = s.eigenvalues[0];
    let hi = *s.eigenvalues.last().unwrap();
    if lo < lambda - slack || hi > big_lambda + slack {
        return invalid(format!(
            "coefficient spectrum [{lo}, {hi}] not inside [λ, Λ] = [{lambda}, {big_lambda}]"
        ));
    }
    Ok(())
}

/// `F(x, X)` for every variant that does not need the gradient.
pub fn evaluate_operator(spec: &OperatorSpec, x: &[f64], m: &SymMatrix) -> Result<f64> {
    match &spec.kind {
        OperatorKind::PLaplacian { .. } => Err(Error::Usage(
            "the p-Laplacian depends on the gradient; use evaluate_gradient_operator".into(),
        )),
        _ => Ok(eval_second_order(spec, x, None, m)),
    }
}

/// `|ξ|^γ F(x, X)`; for the p-Laplacian `|ξ|^{p−2} Tr[(I + (p−2) ξ̂⊗ξ̂) X]`
/// and the supplied `gamma` is ignored in favour of `p − 2`.
///
/// At `ξ = 0` the gradient factor is exactly 0 whenever its exponent is
/// positive. For the p-Laplacian with `p = 2` the value is `Tr(X)`, for
/// any other `p` it is 0 (degenerate convention, also for `p < 2`).
pub fn evaluate_gradient_operator(
    spec: &OperatorSpec,
    x: &[f64],
    xi: &[f64],
    m: &SymMatrix,
    gamma: f64,
) -> Result<f64> {
    if xi.len() != m.dim() {
        return invalid(format!("gradient has length {} but matrix is {}×{}", xi.len(), m.dim(), m.dim()));
    }
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    match spec.kind {
        OperatorKind::PLaplacian { p } => {
            if norm == 0.0 {
                return Ok(if p == 2.0 { m.trace() } else { 0.0 });
            }
            Ok(norm.powf(p - 2.0) * eval_second_order(spec, x, Some(xi), m))
        }
        _ => {
            if !(gamma >= 0.0) {
                return invalid(format!("γ must be ≥ 0 (got {gamma})"));
            }
            let factor = if gamma == 0.0 {
                1.0
            } else if norm == 0.0 {
                0.0
            } else {
                norm.powf(gamma)
            };
            Ok(factor * eval_second_order(spec, x, None, m))
        }
    }
}

/// Second-order part `F(x, X)` (with `F_p(ξ, X)` for the p-Laplacian,
/// `Tr X` when `ξ` is absent or zero).
fn eval_second_order(spec: &OperatorSpec, x: &[f64], xi: Option<&[f64]>, m: &SymMatrix) -> f64 {
    match &spec.kind {
        OperatorKind::LinearTrace(f) => f.at(x).dot(m),
        OperatorKind::PucciPlus => pucci(m, spec.lambda, spec.big_lambda, Sign::Plus),
        OperatorKind::PucciMinus => pucci(m, spec.lambda, spec.big_lambda, Sign::Minus),
        OperatorKind::HjbInf(fs) => fs.iter().map(|f| f.at(x).dot(m)).fold(f64::INFINITY, f64::min),
        OperatorKind::HjbSup(fs) => fs.iter().map(|f| f.at(x).dot(m)).fold(f64::NEG_INFINITY, f64::max),
        OperatorKind::PLaplacian { p } => {
            let trace = m.trace();
            let xi = match xi {
                Some(xi) => xi,
                None => return trace,
            };
            let n2: f64 = xi.iter().map(|v| v * v).sum();
            if n2 == 0.0 {
                return trace;
            }
            let d = m.dim();
            let mut quad = 0.0;
            for i in 0..d {
                for j in 0..d {
                    quad += xi[i] * m.get(i, j) * xi[j];
                }
            }
            trace + (p - 2.0) * quad / n2
        }
    }
}

/// Anything the axiom checker can probe.
pub trait EllipticOperator: Sync {
    fn ellipticity(&self) -> (f64, f64);
    fn lipschitz(&self) -> Option<f64> {
        None
    }
    /// Whether `eval` depends on `xi`.
    fn uses_gradient(&self) -> bool {
        false
    }
    /// Second-order part `F(x, ξ, X)`.
    fn eval(&self, x: &[f64], xi: &[f64], m: &SymMatrix) -> f64;
}

impl EllipticOperator for OperatorSpec {
    fn ellipticity(&self) -> (f64, f64) {
        (self.lambda, self.big_lambda)
    }

    fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    fn uses_gradient(&self) -> bool {
        matches!(self.kind, OperatorKind::PLaplacian { .. })
    }

    fn eval(&self, x: &[f64], xi: &[f64], m: &SymMatrix) -> f64 {
        eval_second_order(self, x, Some(xi), m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomogeneityMode {
    /// `F(x, sX) = s F(x, X)` for `s > 0`.
    Positive,
    /// `F(x, sX) = |s| F(x, X)` for all `s ≠ 0`, as literally stated in
    /// some references; the Pucci operators fail it.
    Absolute,
}

#[derive(Debug, Clone)]
pub struct AxiomCheck {
    pub trials: usize,
    pub seed: u64,
    pub dim: usize,
    /// Sample box for x (per axis).
    pub sample_lo: f64,
    pub sample_hi: f64,
    pub homogeneity: HomogeneityMode,
}

impl AxiomCheck {
    pub fn new(dim: usize, trials: usize, seed: u64) -> Self {
        AxiomCheck {
            trials,
            seed,
            dim,
            sample_lo: 0.0,
            sample_hi: 1.0,
            homogeneity: HomogeneityMode::Positive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axiom {
    Ellipticity,
    Homogeneity,
    Continuity,
}

/// First violated inequality found by [`check_axioms`].
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub axiom: Axiom,
    pub trial: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub xi: Vec<f64>,
    pub matrix: SymMatrix,
    pub perturbation: SymMatrix,
    pub scale: f64,
    /// Observed quantity and the bound it broke.
    pub observed: f64,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct AxiomReport {
    pub trials: usize,
    pub counterexample: Option<Counterexample>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

fn random_sym(rng: &mut ChaCha8Rng, dim: usize, amp: f64) -> SymMatrix {
    let vals: Vec<f64> = (0..dim * dim).map(|_| rng.gen_range(-amp..amp)).collect();
    SymMatrix::from_upper(dim, |i, j| vals[i * dim + j]).expect("dim checked by caller")
}

fn random_psd(rng: &mut ChaCha8Rng, dim: usize) -> SymMatrix {
    let b = random_sym(rng, dim, 2.0);
    // BᵀB
    SymMatrix::from_upper(dim, |i, j| (0..dim).map(|k| b.get(k, i) * b.get(k, j)).sum())
        .expect("dim checked by caller")
}

/// Randomized verification of the structural conditions on `F`.
pub fn check_axioms(op: &dyn EllipticOperator, cfg: &AxiomCheck) -> Result<AxiomReport> {
    if cfg.trials == 0 {
        return invalid("axiom check needs at least one trial");
    }
    SymMatrix::zeros(cfg.dim)?;
    let (lambda, big_lambda) = op.ellipticity();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = cfg.dim;
    for trial in 0..cfg.trials {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(cfg.sample_lo..=cfg.sample_hi)).collect();
        let y: Vec<f64> = (0..dim).map(|_| rng.gen_range(cfg.sample_lo..=cfg.sample_hi)).collect();
        let xi: Vec<f64> = loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            if v.iter().any(|c| c.abs() > 1e-3) {
                break v;
            }
        };
        let m = random_sym(&mut rng, dim, 5.0);
        let pert = random_psd(&mut rng, dim);
        let mut s = rng.gen_range(0.01..10.0);
        if cfg.homogeneity == HomogeneityMode::Absolute && rng.gen_bool(0.5) {
            s = -s;
        }
        let fx = op.eval(&x, &xi, &m);
        let scale = 1.0 + fx.abs() + big_lambda * (m.frobenius() + pert.frobenius()) * dim as f64;

        let fail = |axiom, observed: f64, bound: f64| {
            Some(Counterexample {
                axiom,
                trial,
                x: x.clone(),
                y: y.clone(),
                xi: xi.clone(),
                matrix: m,
                perturbation: pert,
                scale: s,
                observed,
                bound,
            })
        };

        // uniform ellipticity sandwich
        let diff = op.eval(&x, &xi, &m.add(&pert)) - fx;
        let lo = pucci(&pert, lambda, big_lambda, Sign::Minus);
        let hi = pucci(&pert, lambda, big_lambda, Sign::Plus);
        let slack = 1e-12 * scale;
        if diff < lo - slack {
            return Ok(AxiomReport { trials: trial + 1, counterexample: fail(Axiom::Ellipticity, diff, lo) });
        }
        if diff > hi + slack {
            return Ok(AxiomReport { trials: trial + 1, counterexample: fail(Axiom::Ellipticity, diff, hi) });
        }

        // homogeneity
        let fs = op.eval(&x, &xi, &m.scale(s));
        let expect = s.abs() * fx;
        if (fs - expect).abs() > 1e-12 * s.abs() * scale {
            return Ok(AxiomReport { trials: trial + 1, counterexample: fail(Axiom::Homogeneity, fs, expect) });
        }

        // continuity in x
        if let Some(l) = op.lipschitz() {
            let fy = op.eval(&y, &xi, &m);
            let dist = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let bound = l * dist * m.frobenius();
            if (fx - fy).abs() > bound + slack {
                return Ok(AxiomReport {
                    trials: trial + 1,
                    counterexample: fail(Axiom::Continuity, (fx - fy).abs(), bound),
                });
            }
        }
    }
    Ok(AxiomReport {
        trials: cfg.trials,
        counterexample: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2(a: f64, b: f64, c: f64) -> SymMatrix {
        SymMatrix::from_rows(&[&[a, b], &[b, c]]).unwrap()
    }

    #[test]
    fn pucci_examples() {
        let id = SymMatrix::identity(2).unwrap();
        assert_eq!(pucci(&id, 1.0, 2.0, Sign::Plus), 4.0);
        let d = SymMatrix::diag(&[1.0, -1.0]).unwrap();
        assert_eq!(pucci(&d, 1.0, 2.0, Sign::Plus), 1.0);
        assert_eq!(pucci(&d, 1.0, 2.0, Sign::Minus), -1.0);
        // eigenvalues ±1 of the swap matrix give 2·1 + 1·(−1)
        let swap = m2(0.0, 1.0, 0.0);
        assert!((pucci(&swap, 1.0, 2.0, Sign::Plus) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn evaluate_examples() {
        let a = OperatorSpec::linear_trace(
            CoefficientField::Constant(SymMatrix::diag(&[1.0, 2.0]).unwrap()),
            1.0,
            2.0,
        )
        .unwrap();
        let x = SymMatrix::diag(&[3.0, 4.0]).unwrap();
        assert_eq!(evaluate_operator(&a, &[0.0, 0.0], &x).unwrap(), 11.0);

        let hjb = OperatorSpec::hjb_inf(
            vec![
                CoefficientField::Constant(SymMatrix::identity(2).unwrap()),
                CoefficientField::Constant(SymMatrix::diag(&[2.0, 1.0]).unwrap()),
            ],
            1.0,
            2.0,
        )
        .unwrap();
        let d = SymMatrix::diag(&[1.0, -1.0]).unwrap();
        // brute force over the family: Tr(I·X) = 0, Tr(diag(2,1)·X) = 1
        let brute = [0.0f64, 1.0].into_iter().fold(f64::INFINITY, f64::min);
        assert_eq!(evaluate_operator(&hjb, &[0.0, 0.0], &d).unwrap(), brute);

        let pp = OperatorSpec::pucci_plus(1.0, 2.0).unwrap();
        assert_eq!(evaluate_operator(&pp, &[0.0, 0.0], &SymMatrix::identity(2).unwrap()).unwrap(), 4.0);

        let pl = OperatorSpec::p_laplacian(3.0).unwrap();
        assert!(matches!(
            evaluate_operator(&pl, &[0.0, 0.0], &x),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn gradient_operator_examples() {
        let id = SymMatrix::identity(2).unwrap();
        let p3 = OperatorSpec::p_laplacian(3.0).unwrap();
        assert_eq!(evaluate_gradient_operator(&p3, &[0.0, 0.0], &[1.0, 0.0], &id, 1.0).unwrap(), 3.0);

        let p2 = OperatorSpec::p_laplacian(2.0).unwrap();
        let x = m2(1.5, 0.3, -0.25);
        let v = evaluate_gradient_operator(&p2, &[0.0, 0.0], &[0.3, -2.0], &x, 0.0).unwrap();
        assert!((v - x.trace()).abs() < 1e-15);
        assert_eq!(evaluate_gradient_operator(&p2, &[0.0, 0.0], &[0.0, 0.0], &x, 0.0).unwrap(), x.trace());
        assert_eq!(evaluate_gradient_operator(&p3, &[0.0, 0.0], &[0.0, 0.0], &x, 1.0).unwrap(), 0.0);

        let pp = OperatorSpec::pucci_plus(1.0, 2.0).unwrap();
        assert_eq!(evaluate_gradient_operator(&pp, &[0.0, 0.0], &[0.0, 0.0], &id, 1.0).unwrap(), 0.0);
        assert_eq!(evaluate_gradient_operator(&pp, &[0.0, 0.0], &[0.0, 0.0], &id, 0.0).unwrap(), 4.0);
        assert_eq!(evaluate_gradient_operator(&pp, &[0.0, 0.0], &[3.0, 4.0], &id, 2.0).unwrap(), 100.0);
    }

    #[test]
    fn constructor_validation() {
        assert!(OperatorSpec::pucci_plus(2.0, 1.0).is_err());
        assert!(OperatorSpec::pucci_plus(0.0, 1.0).is_err());
        assert!(OperatorSpec::p_laplacian(1.0).is_err());
        assert!(OperatorSpec::hjb_inf(vec![], 1.0, 1.0).is_err());
        assert!(OperatorSpec::linear_trace(
            CoefficientField::Constant(SymMatrix::diag(&[0.5, 1.0]).unwrap()),
            1.0,
            2.0
        )
        .is_err());
        assert_eq!(OperatorSpec::p_laplacian(3.0).unwrap().effective_gamma(), Some(1.0));
    }

    #[test]
    fn coefficient_bounds_are_checked_on_samples() {
        let field = CoefficientField::function("grow", 1, |x| SymMatrix::diag(&[1.0 + x[0]]).unwrap());
        let spec = OperatorSpec::linear_trace(field, 1.0, 1.5).unwrap();
        let ok = [[0.0], [0.5]];
        assert!(spec.check_coefficients(ok.iter().map(|p| &p[..])).is_ok());
        let bad = [[0.9]];
        assert!(spec.check_coefficients(bad.iter().map(|p| &p[..])).is_err());
    }

    #[test]
    fn pucci_operators_pass_axioms() {
        for spec in [OperatorSpec::pucci_plus(1.0, 2.0).unwrap(), OperatorSpec::pucci_minus(0.5, 3.0).unwrap()] {
            for dim in 1..=3 {
                let r = check_axioms(&spec, &AxiomCheck::new(dim, 1000, 3)).unwrap();
                assert!(r.passed(), "{:?}", r.counterexample);
            }
        }
    }

    #[test]
    fn absolute_homogeneity_rejects_pucci() {
        let spec = OperatorSpec::pucci_plus(1.0, 2.0).unwrap();
        let mut cfg = AxiomCheck::new(2, 1000, 5);
        cfg.homogeneity = HomogeneityMode::Absolute;
        let r = check_axioms(&spec, &cfg).unwrap();
        assert_eq!(r.counterexample.unwrap().axiom, Axiom::Homogeneity);
    }

    struct OffsetTrace;
    impl EllipticOperator for OffsetTrace {
        fn ellipticity(&self) -> (f64, f64) {
            (1.0, 1.0)
        }
        fn eval(&self, _x: &[f64], _xi: &[f64], m: &SymMatrix) -> f64 {
            m.trace() + 1.0
        }
    }

    #[test]
    fn constant_offset_breaks_homogeneity() {
        let r = check_axioms(&OffsetTrace, &AxiomCheck::new(2, 100, 1)).unwrap();
        let c = r.counterexample.expect("offset operator must fail");
        assert_eq!(c.axiom, Axiom::Homogeneity);
        assert_eq!(c.trial, 0);
    }

    fn clipped_anisotropic() -> OperatorSpec {
        let field = CoefficientField::function("diag(1+x²/10, 1)", 2, |x| {
            SymMatrix::diag(&[1.0 + x[0] * x[0] / 10.0, 1.0]).unwrap().clip_spectrum(1.0, 1.1)
        });
        OperatorSpec::linear_trace(field, 1.0, 1.1).unwrap().with_lipschitz(0.2).unwrap()
    }

    #[test]
    fn lipschitz_bound_matches_finite_difference_estimate() {
        let spec = clipped_anisotropic();
        let r = check_axioms(&spec, &AxiomCheck::new(2, 1000, 9)).unwrap();
        assert!(r.passed(), "{:?}", r.counterexample);

        // finite-difference oracle of sup |∂_x F| / ‖X‖_F over [0,1]
        let x = SymMatrix::diag(&[1.0, 0.0]).unwrap();
        let mut est = 0.0f64;
        let h = 1e-6;
        for k in 0..=100 {
            let t = k as f64 / 100.0 * (1.0 - h);
            let d = (evaluate_operator(&spec, &[t + h, 0.3], &x).unwrap()
                - evaluate_operator(&spec, &[t, 0.3], &x).unwrap())
                / h;
            est = est.max(d.abs() / x.frobenius());
        }
        assert!(est <= 0.2 + 1e-6, "estimated {est}");
        assert!(est > 0.19, "declared bound should be sharp, estimated {est}");

        let tight = clipped_anisotropic().with_lipschitz(0.05).unwrap();
        let r = check_axioms(&tight, &AxiomCheck::new(2, 1000, 9)).unwrap();
        assert_eq!(r.counterexample.unwrap().axiom, Axiom::Continuity);
    }
}
