//! Run configuration: a TOML file with `[problem]`, `[control]`, `[init]`,
//! `[sweep]`, `[classify]` and `[output]` sections, plus `section.key=value`
//! overrides. Everything is validated before a command runs.
//!
//! ```toml
//! [problem]
//! weight = "example"
//! gamma = 1.0
//! q = 0.8
//! n = 400
//!
//! [init]
//! kind = "oracle"
//! perturbation = 0.1
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::analysis::{Family, Parameter, ThresholdOptions};
use crate::dirichlet::{IterationControl, Method};
use crate::error::{Error, Result};
use crate::grid::{Ball, DirectionSet, Grid, GridFunction, WeightField, WeightSource};
use crate::matrix::SymMatrix;
use crate::operators::{CoefficientField, OperatorSpec};
use crate::oracle::{example_instance, EXAMPLE_DOMAIN};
use crate::solver::{check_exponents, Init, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Eigen,
    Classify,
    Sweep,
    OracleCheck,
}

impl Command {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "solve" => Command::Solve,
            "eigen" => Command::Eigen,
            "classify" => Command::Classify,
            "sweep" => Command::Sweep,
            "oracle-check" => Command::OracleCheck,
            other => return Err(Error::Usage(format!("unknown command `{other}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Eigen => "eigen",
            Command::Classify => "classify",
            Command::Sweep => "sweep",
            Command::OracleCheck => "oracle-check",
        }
    }

    fn needs_q(&self) -> bool {
        matches!(self, Command::Solve | Command::Classify | Command::Sweep)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightConfig {
    Example,
    SinSplit { s: f64 },
    Constant { c: f64 },
}

#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub x: (f64, f64),
    pub y: Option<(f64, f64)>,
    pub n: [usize; 2],
    pub gamma: f64,
    pub q: Option<f64>,
    pub operator: OperatorSpec,
    pub weight: WeightConfig,
    /// Multiplies the whole weight.
    pub weight_scale: f64,
    /// Multiplies the negative part of the weight.
    pub weight_split: f64,
    pub directions: DirectionSet,
}

impl ProblemConfig {
    pub fn grid(&self) -> Result<Grid> {
        match self.y {
            None => Grid::new_1d(self.x.0, self.x.1, self.n[0]),
            Some(y) => Grid::new_2d(self.x, y, self.n),
        }
    }

    pub fn weight_source(&self) -> WeightSource {
        let base = match &self.weight {
            WeightConfig::Example => WeightSource::Example {
                gamma: self.gamma,
                q: self.q.unwrap_or(f64::NAN),
            },
            WeightConfig::SinSplit { s } => WeightSource::SinSplit { s: *s },
            WeightConfig::Constant { c } => WeightSource::Constant { c: *c },
        };
        let base = if self.weight_split != 1.0 { base.split_scaled(self.weight_split) } else { base };
        if self.weight_scale != 1.0 {
            base.scaled(self.weight_scale)
        } else {
            base
        }
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        let q = self.q.ok_or_else(|| Error::Invalid("problem.q is required".into()))?;
        let grid = self.grid()?;
        let w = WeightField::sample(grid, self.weight_source())?;
        ProblemSpec::with_directions(grid, self.operator.clone(), self.gamma, q, w, self.directions)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitKind {
    Subsolution,
    Supersolution,
    Zero,
    /// The example profile times `1 + perturbation`.
    Oracle { perturbation: f64 },
    /// A field read from a CSV file.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitConfig {
    pub kind: InitKind,
    pub ball: Ball,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub parameter: Parameter,
    pub bracket: (f64, f64),
    pub options: ThresholdOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyConfig {
    /// Field to classify; when absent the problem is solved first.
    pub input: Option<PathBuf>,
    pub tol_zero: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Report,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub problem: ProblemConfig,
    pub control: IterationControl,
    pub seed: u64,
    pub init: InitConfig,
    pub sweep: Option<SweepConfig>,
    pub classify: ClassifyConfig,
    pub output: OutputConfig,
    /// Hex SHA-256 of the effective configuration (overrides applied).
    pub hash: String,
}

impl RunConfig {
    pub fn load(command: Command, path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(command, &text, overrides)
    }

    pub fn parse(command: Command, text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.message().to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        // where the artifacts go is not part of the experiment
        let mut hashed = table.clone();
        if let Some(Value::Table(out)) = hashed.get_mut("output") {
            out.remove("directory");
            if out.is_empty() {
                hashed.remove("output");
            }
        }
        let canonical = toml::to_string(&hashed).map_err(|e| Error::Parse(e.to_string()))?;
        let hash = Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
        let mut root = Section::root(table)?;
        let mut problem = root.section("problem")?;
        let mut control = root.section("control")?;
        let mut init = root.section("init")?;
        let mut sweep = root.section("sweep")?;
        let mut classify = root.section("classify")?;
        let mut output = root.section("output")?;
        root.finish()?;

        let problem_cfg = problem_config(&mut problem, command)?;
        problem.finish()?;
        let (control_cfg, seed) = control_config(&mut control)?;
        control.finish()?;
        let init_cfg = init_config(&mut init, &problem_cfg)?;
        init.finish()?;
        let sweep_cfg = sweep_config(&mut sweep, command)?;
        sweep.finish()?;
        let classify_cfg = ClassifyConfig {
            input: classify.string("input")?.map(PathBuf::from),
            tol_zero: classify.float("tol_zero")?,
        };
        if let Some(t) = classify_cfg.tol_zero {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Invalid(format!("classify.tol_zero must be > 0 (got {t})")));
            }
        }
        classify.finish()?;
        let output_cfg = output_config(&mut output)?;
        output.finish()?;

        let cfg = RunConfig {
            command,
            problem: problem_cfg,
            control: control_cfg,
            seed,
            init: init_cfg,
            sweep: sweep_cfg,
            classify: classify_cfg,
            output: output_cfg,
            hash,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Builds every object a command needs, surfacing the first failure.
    fn validate(&self) -> Result<()> {
        self.problem.grid()?;
        if self.command.needs_q() || self.problem.q.is_some() {
            let p = self.problem.problem()?;
            if let Some(s) = &self.sweep {
                let fam = self.family(&p, s.parameter);
                fam.problem(s.bracket.0)?;
                fam.problem(s.bracket.1)?;
            }
        }
        if let InitKind::Oracle { .. } = self.init.kind {
            self.oracle_init()?;
        }
        Ok(())
    }

    pub fn family(&self, p: &ProblemSpec, parameter: Parameter) -> Family {
        match parameter {
            Parameter::S => Family::negative_part_scale(p, self.init.ball),
            Parameter::Q => Family::exponent(p, self.init.ball),
        }
    }

    fn oracle_init(&self) -> Result<GridFunction> {
        let InitKind::Oracle { perturbation } = self.init.kind else {
            return Err(Error::Usage("init.kind is not oracle".into()));
        };
        if self.problem.weight != WeightConfig::Example || self.problem.y.is_some() {
            return Err(Error::Invalid("init.kind = \"oracle\" needs the 1-D example weight".into()));
        }
        let q = self.problem.q.ok_or_else(|| Error::Invalid("problem.q is required".into()))?;
        let e = example_instance(self.problem.gamma, q)?;
        let v = e.sample(self.problem.grid()?)?;
        Ok(v.scale(1.0 + perturbation))
    }

    /// The starting point of `solve` described by `[init]`.
    pub fn initial(&self) -> Result<Init> {
        Ok(match &self.init.kind {
            InitKind::Subsolution => Init::Subsolution(self.init.ball),
            InitKind::Supersolution => Init::Supersolution,
            InitKind::Zero => Init::Zero,
            InitKind::Oracle { .. } => Init::Given(self.oracle_init()?),
            InitKind::File(path) => Init::Given(read_field(path, self.problem.grid()?)?),
        })
    }
}

pub fn read_field(path: &Path, grid: Grid) -> Result<GridFunction> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let rows = crate::grid::read_csv_rows(f)?;
    crate::grid::grid_function_from_rows(grid, &rows)
}

fn apply_override(table: &mut Table, o: &str) -> Result<()> {
    let (key, raw) = o
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("override `{o}` is not of the form section.key=value")))?;
    let (section, key) = key
        .trim()
        .split_once('.')
        .ok_or_else(|| Error::Usage(format!("override key `{}` must be section.key", key.trim())))?;
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    };
    let entry = table.entry(section.to_string()).or_insert_with(|| Value::Table(Table::new()));
    match entry {
        Value::Table(t) => {
            t.insert(key.to_string(), value);
            Ok(())
        }
        _ => Err(Error::Invalid(format!("`{section}` is not a section"))),
    }
}

/// A table whose keys are consumed as they are read, so that leftovers can
/// be reported as unknown.
struct Section {
    name: String,
    table: Table,
}

impl Section {
    fn root(table: Table) -> Result<Self> {
        Ok(Section { name: String::new(), table })
    }

    fn key(&self, k: &str) -> String {
        if self.name.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.name)
        }
    }

    fn section(&mut self, name: &str) -> Result<Section> {
        match self.table.remove(name) {
            None => Ok(Section { name: name.into(), table: Table::new() }),
            Some(Value::Table(table)) => Ok(Section { name: name.into(), table }),
            Some(_) => Err(Error::Invalid(format!("`{name}` must be a [section]"))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.table.keys().next() {
            None => Ok(()),
            Some(k) => Err(Error::Invalid(format!("unknown key `{}`", self.key(k)))),
        }
    }

    fn take(&mut self, k: &str) -> Option<Value> {
        self.table.remove(k)
    }

    fn float(&mut self, k: &str) -> Result<Option<f64>> {
        match self.take(k) {
            None => Ok(None),
            Some(v) => as_float(&v).map(Some).ok_or_else(|| Error::Invalid(format!("{} must be a number", self.key(k)))),
        }
    }

    fn uint(&mut self, k: &str) -> Result<Option<usize>> {
        match self.take(k) {
            None => Ok(None),
            Some(Value::Integer(i)) if i >= 0 => Ok(Some(i as usize)),
            Some(_) => Err(Error::Invalid(format!("{} must be a nonnegative integer", self.key(k)))),
        }
    }

    fn string(&mut self, k: &str) -> Result<Option<String>> {
        match self.take(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(Error::Invalid(format!("{} must be a string", self.key(k)))),
        }
    }

    fn pair(&mut self, k: &str) -> Result<Option<(f64, f64)>> {
        match self.take(k) {
            None => Ok(None),
            Some(v) => as_pair(&v).map(Some).ok_or_else(|| Error::Invalid(format!("{} must be a pair [lo, hi]", self.key(k)))),
        }
    }
}

fn as_float(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn as_pair(v: &Value) -> Option<(f64, f64)> {
    match v.as_array()?.as_slice() {
        [a, b] => Some((as_float(a)?, as_float(b)?)),
        _ => None,
    }
}

fn as_matrix(v: &Value, dim: usize) -> Option<SymMatrix> {
    if let Some(c) = as_float(v) {
        return SymMatrix::diag(&vec![c; dim]).ok();
    }
    let rows: Vec<Vec<f64>> = v
        .as_array()?
        .iter()
        .map(|r| r.as_array()?.iter().map(as_float).collect::<Option<Vec<_>>>())
        .collect::<Option<_>>()?;
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    SymMatrix::from_rows(&refs).ok()
}

fn problem_config(s: &mut Section, command: Command) -> Result<ProblemConfig> {
    let weight_name = s.string("weight")?.unwrap_or_else(|| "sinsplit".into());
    let weight = match weight_name.as_str() {
        "example" => WeightConfig::Example,
        "sinsplit" => WeightConfig::SinSplit {
            s: s.float("weight_s")?.unwrap_or(1.0),
        },
        "constant" => WeightConfig::Constant {
            c: s.float("weight_c")?.unwrap_or(1.0),
        },
        other => return Err(Error::Invalid(format!("unknown weight `{other}` (example, sinsplit, constant)"))),
    };
    let x = match (s.pair("domain")?, &weight) {
        (Some(d), _) => d,
        (None, WeightConfig::Example) => EXAMPLE_DOMAIN,
        (None, _) => return Err(Error::Invalid("problem.domain is required".into())),
    };
    let y = s.pair("domain_y")?;
    let n = match s.take("n") {
        None => return Err(Error::Invalid("problem.n is required".into())),
        Some(Value::Integer(i)) if i > 0 => [i as usize, if y.is_some() { i as usize } else { 1 }],
        Some(Value::Array(a)) if y.is_some() && a.len() == 2 => match (a[0].as_integer(), a[1].as_integer()) {
            (Some(nx), Some(ny)) if nx > 0 && ny > 0 => [nx as usize, ny as usize],
            _ => return Err(Error::Invalid("problem.n must hold positive integers".into())),
        },
        Some(_) => return Err(Error::Invalid("problem.n must be a positive integer ([nx, ny] in 2-D)".into())),
    };
    let dim = if y.is_some() { 2 } else { 1 };
    let lambda = s.float("lambda")?.unwrap_or(1.0);
    let big_lambda = s.float("Lambda")?.unwrap_or(lambda.max(1.0));
    let op_name = s.string("operator")?.unwrap_or_else(|| "laplacian".into());
    let operator = match op_name.as_str() {
        "laplacian" => OperatorSpec::laplacian(dim)?,
        "linear_trace" => {
            let v = s.take("coefficients").ok_or_else(|| Error::Invalid("problem.coefficients is required for linear_trace".into()))?;
            let m = as_matrix(&v, dim)
                .filter(|m| m.dim() == dim)
                .ok_or_else(|| Error::Invalid(format!("problem.coefficients must be a number or a symmetric {dim}x{dim} matrix")))?;
            OperatorSpec::linear_trace(CoefficientField::Constant(m), lambda, big_lambda)?
        }
        "pucci_plus" => OperatorSpec::pucci_plus(lambda, big_lambda)?,
        "pucci_minus" => OperatorSpec::pucci_minus(lambda, big_lambda)?,
        "hjb_inf" | "hjb_sup" => {
            let v = s.take("members").ok_or_else(|| Error::Invalid(format!("problem.members is required for {op_name}")))?;
            let members = v
                .as_array()
                .and_then(|a| a.iter().map(|m| as_matrix(m, dim).filter(|m| m.dim() == dim)).collect::<Option<Vec<_>>>())
                .ok_or_else(|| Error::Invalid(format!("problem.members must be a list of numbers or {dim}x{dim} matrices")))?;
            let fields = members.into_iter().map(CoefficientField::Constant).collect();
            if op_name == "hjb_inf" {
                OperatorSpec::hjb_inf(fields, lambda, big_lambda)?
            } else {
                OperatorSpec::hjb_sup(fields, lambda, big_lambda)?
            }
        }
        "p_laplacian" => {
            let p = s.float("p")?.ok_or_else(|| Error::Invalid("problem.p is required for p_laplacian".into()))?;
            OperatorSpec::p_laplacian(p)?
        }
        other => {
            return Err(Error::Invalid(format!(
                "unknown operator `{other}` (laplacian, linear_trace, pucci_plus, pucci_minus, hjb_inf, hjb_sup, p_laplacian)"
            )))
        }
    };
    let gamma = match (s.float("gamma")?, operator.effective_gamma()) {
        (Some(g), Some(e)) if (g - e).abs() > 1e-12 => {
            return Err(Error::Invalid(format!("the p-Laplacian fixes γ = p−2 = {e} (got γ={g})")))
        }
        (Some(g), _) => g,
        (None, Some(e)) => e,
        (None, None) => 0.0,
    };
    let q = s.float("q")?;
    match q {
        Some(q) => check_exponents(gamma, q)?,
        None if command.needs_q() => return Err(Error::Invalid("problem.q is required (0 < q < γ+1)".into())),
        None => {
            if !(gamma >= 0.0 && gamma.is_finite()) {
                return Err(Error::Invalid(format!("γ must satisfy γ ≥ 0 (got γ={gamma})")));
            }
        }
    }
    let weight_scale = s.float("weight_scale")?.unwrap_or(1.0);
    let weight_split = s.float("weight_split")?.unwrap_or(1.0);
    let directions = match s.string("directions")?.as_deref() {
        None | Some("compact") => DirectionSet::Compact,
        Some("wide") => DirectionSet::Wide,
        Some(other) => return Err(Error::Invalid(format!("unknown direction set `{other}` (compact, wide)"))),
    };
    Ok(ProblemConfig {
        x,
        y,
        n,
        gamma,
        q,
        operator,
        weight,
        weight_scale,
        weight_split,
        directions,
    })
}

fn control_config(s: &mut Section) -> Result<(IterationControl, u64)> {
    let d = IterationControl::default();
    let mut c = IterationControl::new(
        s.uint("max_steps")?.unwrap_or(d.max_steps),
        s.float("tolerance")?.unwrap_or(d.tolerance),
        s.float("safety")?.unwrap_or(d.safety),
    )?;
    if let Some(m) = s.string("method")? {
        c = c.with_method(Method::parse(&m)?);
    }
    let seed = s.uint("seed")?.unwrap_or(0) as u64;
    Ok((c, seed))
}

fn init_config(s: &mut Section, p: &ProblemConfig) -> Result<InitConfig> {
    let perturbation = s.float("perturbation")?.unwrap_or(0.0);
    if !(perturbation > -1.0 && perturbation.is_finite()) {
        return Err(Error::Invalid(format!("init.perturbation must be > −1 (got {perturbation})")));
    }
    let path = s.string("path")?;
    let kind = match s.string("kind")?.as_deref() {
        None | Some("subsolution") => InitKind::Subsolution,
        Some("supersolution") => InitKind::Supersolution,
        Some("zero") => InitKind::Zero,
        Some("oracle") => InitKind::Oracle { perturbation },
        Some("file") => InitKind::File(
            path.ok_or_else(|| Error::Invalid("init.path is required for kind = \"file\"".into()))?
                .into(),
        ),
        Some(other) => {
            return Err(Error::Invalid(format!(
                "unknown init kind `{other}` (subsolution, supersolution, zero, oracle, file)"
            )))
        }
    };
    let quarter = |(lo, hi): (f64, f64)| (lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo));
    let bx = s.pair("ball")?.unwrap_or_else(|| quarter(p.x));
    let ball = match p.y {
        None => Ball::interval(bx.0, bx.1),
        Some(y) => Ball::rect(bx, s.pair("ball_y")?.unwrap_or_else(|| quarter(y))),
    };
    if !(bx.0 < bx.1) {
        return Err(Error::Invalid(format!("init.ball must satisfy lo < hi (got [{}, {}])", bx.0, bx.1)));
    }
    Ok(InitConfig { kind, ball })
}

fn sweep_config(s: &mut Section, command: Command) -> Result<Option<SweepConfig>> {
    let parameter = match s.string("parameter")?.as_deref() {
        None if command != Command::Sweep => return Ok(None),
        None => return Err(Error::Invalid("sweep.parameter is required (s or q)".into())),
        Some("s") => Parameter::S,
        Some("q") => Parameter::Q,
        Some(other) => return Err(Error::Invalid(format!("unknown sweep parameter `{other}` (s, q)"))),
    };
    let bracket = s.pair("bracket")?.ok_or_else(|| Error::Invalid("sweep.bracket is required".into()))?;
    if !(bracket.0.is_finite() && bracket.1.is_finite() && bracket.0 < bracket.1) {
        return Err(Error::Invalid(format!(
            "sweep.bracket must satisfy lo < hi (got [{}, {}])",
            bracket.0, bracket.1
        )));
    }
    let d = ThresholdOptions::default();
    let options = ThresholdOptions {
        probes: s.uint("probes")?.unwrap_or(d.probes),
        min_bisections: s.uint("min_bisections")?.unwrap_or(d.min_bisections),
        rel_width: s.float("rel_width")?.unwrap_or(d.rel_width),
    };
    if options.probes < 2 {
        return Err(Error::Invalid("sweep.probes must be ≥ 2".into()));
    }
    if !(options.rel_width > 0.0 && options.rel_width < 1.0) {
        return Err(Error::Invalid(format!("sweep.rel_width must lie in (0, 1) (got {})", options.rel_width)));
    }
    Ok(Some(SweepConfig { parameter, bracket, options }))
}

fn output_config(s: &mut Section) -> Result<OutputConfig> {
    let directory = s.string("directory")?.unwrap_or_else(|| ".".into()).into();
    let formats = match s.take("formats") {
        None => vec![Format::Csv, Format::Report],
        Some(Value::Array(a)) => a
            .iter()
            .map(|v| match v.as_str() {
                Some("csv") => Ok(Format::Csv),
                Some("report") => Ok(Format::Report),
                _ => Err(Error::Invalid(format!("unknown output format {v} (csv, report)"))),
            })
            .collect::<Result<_>>()?,
        Some(_) => return Err(Error::Invalid("output.formats must be a list".into())),
    };
    Ok(OutputConfig { directory, formats })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "[problem]\nweight = \"example\"\ngamma = 1.0\nq = 0.8\nn = 40\n";

    #[test]
    fn example_defaults() {
        let c = RunConfig::parse(Command::Solve, EXAMPLE, &[]).unwrap();
        assert_eq!(c.problem.x, EXAMPLE_DOMAIN);
        assert_eq!(c.problem.n, [40, 1]);
        assert_eq!(c.control, IterationControl::default());
        assert_eq!(c.init.kind, InitKind::Subsolution);
        assert!(c.sweep.is_none());
        assert_eq!(c.hash.len(), 64);
    }

    #[test]
    fn q_at_the_limit_names_the_constraint() {
        let e = RunConfig::parse(Command::Solve, EXAMPLE, &["problem.q=2.0".into()]).unwrap_err();
        assert!(e.to_string().contains("q < γ+1"), "{e}");
    }

    #[test]
    fn overrides_change_the_hash() {
        let a = RunConfig::parse(Command::Solve, EXAMPLE, &[]).unwrap();
        let b = RunConfig::parse(Command::Solve, EXAMPLE, &["problem.n=41".into()]).unwrap();
        let c = RunConfig::parse(Command::Solve, EXAMPLE, &["problem.n = 40".into()]).unwrap();
        assert_eq!(b.problem.n[0], 41);
        assert_ne!(a.hash, b.hash);
        assert_eq!(a.hash, c.hash);
        let d = RunConfig::parse(Command::Solve, EXAMPLE, &["output.directory=elsewhere".into()]).unwrap();
        assert_eq!(a.hash, d.hash);
    }

    #[test]
    fn string_overrides_need_no_quotes() {
        let c = RunConfig::parse(Command::Solve, EXAMPLE, &["control.method=newton".into()]).unwrap();
        assert_eq!(c.control.method, Method::Newton);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = RunConfig::parse(Command::Solve, &format!("{EXAMPLE}tolerence = 1e-6\n"), &[]).unwrap_err();
        assert!(e.to_string().contains("problem.tolerence"), "{e}");
        assert!(RunConfig::parse(Command::Solve, EXAMPLE, &["nosection=1".into()]).is_err());
    }

    #[test]
    fn degenerate_bracket_is_invalid() {
        let text = "[problem]\ndomain = [0.0, 2.0]\nn = 30\nq = 0.5\n[sweep]\nparameter = \"s\"\nbracket = [1.0, 1.0]\n";
        assert!(matches!(RunConfig::parse(Command::Sweep, text, &[]), Err(Error::Invalid(_))));
    }

    #[test]
    fn eigen_needs_no_exponent() {
        let c = RunConfig::parse(Command::Eigen, "[problem]\ndomain = [0.0, 3.0]\nn = 20\n", &[]).unwrap();
        assert_eq!(c.problem.q, None);
        assert!(RunConfig::parse(Command::Solve, "[problem]\ndomain = [0.0, 3.0]\nn = 20\n", &[]).is_err());
    }

    #[test]
    fn p_laplacian_fixes_gamma() {
        let base = "[problem]\ndomain = [0.0, 1.0]\nn = 20\noperator = \"p_laplacian\"\np = 3.0\n";
        assert_eq!(RunConfig::parse(Command::Eigen, base, &[]).unwrap().problem.gamma, 1.0);
        assert!(RunConfig::parse(Command::Eigen, base, &["problem.gamma=0".into()]).is_err());
    }

    #[test]
    fn two_dimensional_problem() {
        let text = "[problem]\ndomain = [0.0, 1.0]\ndomain_y = [0.0, 2.0]\nn = [8, 12]\nq = 0.5\noperator = \"hjb_inf\"\nmembers = [1.0, [[2.0, 0.0], [0.0, 1.0]]]\nLambda = 2.0\n";
        let c = RunConfig::parse(Command::Solve, text, &[]).unwrap();
        assert_eq!(c.problem.n, [8, 12]);
        assert_eq!(c.init.ball, Ball::rect((0.25, 0.75), (0.5, 1.5)));
        assert_eq!(c.problem.problem().unwrap().grid().dim(), 2);
    }

    #[test]
    fn oracle_init_needs_example_weight() {
        let text = "[problem]\ndomain = [0.0, 2.0]\nn = 30\nq = 0.5\n[init]\nkind = \"oracle\"\n";
        assert!(RunConfig::parse(Command::Solve, text, &[]).is_err());
        let c = RunConfig::parse(Command::Solve, &format!("{EXAMPLE}[init]\nkind = \"oracle\"\nperturbation = 0.1\n"), &[]).unwrap();
        let Init::Given(u) = c.initial().unwrap() else { panic!() };
        let v = example_instance(1.0, 0.8).unwrap().sample(*u.grid()).unwrap();
        assert!((u.sup_norm() - 1.1 * v.sup_norm()).abs() < 1e-15);
    }
}
