//! Command-line front end for `compint-core`.
//!
//! [`run`] parses arguments, performs one library call and writes its report;
//! the binary only forwards process arguments and the exit status.

mod error;
mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use compint_core::closedforms::{exact_value, ClosedFormCase};
use compint_core::flow::{self, pullback_spec};
use compint_core::harness::{self, AuditConfig, Reference, ReferenceSource};
use compint_core::oracle::{solve_ivp, OracleConfig};
use compint_core::{
    Expr, FlowResult, FlowSpec, Refinement, ScalarField, StateDomain, TagRule, TimeOnly,
};

pub use error::{CliError, Exit};
use report::Row;

#[derive(Debug, Parser)]
#[command(
    name = "compint",
    version,
    about = "Compositional integrals by nested Euler compositions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Riemann Composition on a uniform mesh, or the converged integral with --tol.
    Eval(EvalArgs),
    /// Convergence table against an oracle or closed-form reference.
    Converge(ConvergeArgs),
    /// Randomized audit of the concatenation, group and inversion laws.
    GroupCheck(GroupCheckArgs),
    /// Inverse flow Y_ab(t) through the reflected integrand.
    Inverse(InverseArgs),
    /// Flow of the integrand pulled back along s = gamma(p).
    Subst(SubstArgs),
    /// Reference value of a closed-form case.
    ClosedForm(ClosedFormArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Tags {
    Left,
    Right,
    Midpoint,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    /// Integrand f(s, t), e.g. "exp(-s*t)".
    #[arg(long = "f", allow_hyphen_values = true)]
    pub f: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub b: f64,
    /// Lower end of the open state domain.
    #[arg(long, default_value_t = f64::NEG_INFINITY, allow_hyphen_values = true)]
    pub domain_lo: f64,
    /// Upper end of the open state domain.
    #[arg(long, default_value_t = f64::INFINITY, allow_hyphen_values = true)]
    pub domain_hi: f64,
}

#[derive(Debug, Args)]
pub struct TagArgs {
    #[arg(long, value_enum, default_value_t = Tags::Left)]
    pub tags: Tags,
    /// Seed for --tags random.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RefArgs {
    /// `oracle` or `case:<id>`.
    #[arg(long = "ref")]
    pub reference: Option<String>,
    /// Time-only function p(s) for case:constant_in_t and case:volterra.
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<String>,
    /// Power for case:exp_power_k.
    #[arg(long)]
    pub k: Option<u32>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub flow: FlowArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    /// Refine from --n by doubling until successive values agree to this tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Finest mesh for --tol; defaults to the largest --n * 2^k not above 2^28.
    #[arg(long)]
    pub n_max: Option<usize>,
    #[command(flatten)]
    pub tags: TagArgs,
    #[command(flatten)]
    pub reference: RefArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub flow: FlowArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    #[arg(long, default_value_t = 16)]
    pub n_min: usize,
    #[arg(long, default_value_t = 16384)]
    pub n_max: usize,
    #[command(flatten)]
    pub tags: TagArgs,
    #[command(flatten)]
    pub reference: RefArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GroupCheckArgs {
    #[command(flatten)]
    pub flow: FlowArgs,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Initial states are drawn from (t-min, t-max].
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t_min: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub t_max: f64,
    /// Most cells in each random partition.
    #[arg(long, default_value_t = 64)]
    pub max_cells: usize,
    #[arg(long, default_value_t = Refinement::DEFAULT_N_MAX)]
    pub n_max: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InverseArgs {
    #[command(flatten)]
    pub flow: FlowArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = Refinement::DEFAULT_N0)]
    pub n_min: usize,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[command(flatten)]
    pub tags: TagArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SubstArgs {
    #[command(flatten)]
    pub flow: FlowArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    /// gamma(p), written in the variable `s`.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: String,
    /// gamma'(p), written in the variable `s`.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_prime: String,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[command(flatten)]
    pub tags: TagArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ClosedFormArgs {
    /// One of constant_in_t, exp_flow, volterra, exp_power_k, theorem2_exp_neg_st.
    #[arg(long = "case")]
    pub case: String,
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<String>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{}", e.render());
            return Exit::Success.code();
        }
        Err(e) => {
            let _ = writeln!(err, "compint: error: {}", one_line(&e.render().to_string()));
            return Exit::Usage.code();
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => Exit::Success.code(),
        Err(e) => {
            let _ = writeln!(err, "compint: error: {e}");
            e.exit().code()
        }
    }
}

/// Clap's message without the usage block, folded onto one line.
fn one_line(rendered: &str) -> String {
    let body = rendered.split("\n\n").next().unwrap_or(rendered);
    let body = body.strip_prefix("error: ").unwrap_or(body);
    body.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Eval(args) => eval(args, out, err),
        Command::Converge(args) => converge(args, out, err),
        Command::GroupCheck(args) => group_check(args, out),
        Command::Inverse(args) => inverse(args, out),
        Command::Subst(args) => subst(args, out),
        Command::ClosedForm(args) => closed_form(args, out),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn finite(name: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(usage(format!("--{name} must be finite (got {x})")))
    }
}

fn positive(name: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(usage(format!(
            "--{name} must be positive and finite (got {x})"
        )))
    }
}

fn parse_expr(src: &str) -> Result<Expr, CliError> {
    Expr::parse(src).map_err(|error| CliError::Parse {
        source_text: src.to_string(),
        error,
    })
}

fn time_only(flag: &str, src: &str) -> Result<TimeOnly, CliError> {
    let expr = parse_expr(src)?;
    TimeOnly::new(expr).map_err(|e| usage(format!("--{flag}: {e}")))
}

fn tag_rule(tags: &TagArgs) -> TagRule {
    match tags.tags {
        Tags::Left => TagRule::Left,
        Tags::Right => TagRule::Right,
        Tags::Midpoint => TagRule::Midpoint,
        Tags::Random => TagRule::Random(tags.seed),
    }
}

fn refinement(
    tol: f64,
    n0: usize,
    n_max: Option<usize>,
    rule: TagRule,
) -> Result<Refinement, CliError> {
    positive("tol", tol)?;
    if n0 == 0 {
        return Err(usage("the starting mesh must have at least one cell"));
    }
    let n_max = n_max.unwrap_or_else(|| {
        let mut n = n0.saturating_mul(2);
        while n <= Refinement::DEFAULT_N_MAX / 2 {
            n *= 2;
        }
        n
    });
    Ok(Refinement::new(tol).with_range(n0, n_max).with_rule(rule))
}

impl FlowArgs {
    fn interval(&self) -> Result<(f64, f64), CliError> {
        let a = finite("a", self.a)?;
        let b = finite("b", self.b)?;
        if b < a {
            return Err(usage(format!(
                "--b must not be below --a (got a = {a}, b = {b})"
            )));
        }
        Ok((a, b))
    }

    fn domain(&self) -> Result<StateDomain, CliError> {
        if self.domain_lo.is_nan() || self.domain_hi.is_nan() {
            return Err(usage("state domain bounds must not be NaN"));
        }
        Ok(StateDomain::new(self.domain_lo, self.domain_hi)?)
    }

    fn expr(&self) -> Result<Expr, CliError> {
        match &self.f {
            Some(src) => parse_expr(src),
            None => Err(usage("--f is required")),
        }
    }

    fn spec<F: ScalarField>(&self, field: F) -> Result<FlowSpec<F>, CliError> {
        let (a, b) = self.interval()?;
        Ok(FlowSpec::new(field, a, b)?.with_domain(self.domain()?))
    }
}

enum RefChoice {
    Oracle,
    Case(ClosedFormCase),
}

fn case_from_id(id: &str, p: Option<&str>, k: Option<u32>) -> Result<ClosedFormCase, CliError> {
    let need_p = |id: &str| p.ok_or_else(|| usage(format!("case {id} needs --p")));
    Ok(match id {
        "constant_in_t" => ClosedFormCase::ConstantInT(time_only("p", need_p(id)?)?),
        "exp_flow" => ClosedFormCase::ExpFlow,
        "volterra" => ClosedFormCase::Volterra(time_only("p", need_p(id)?)?),
        "exp_power_k" => {
            ClosedFormCase::ExpPowerK(k.ok_or_else(|| usage("case exp_power_k needs --k"))?)
        }
        "theorem2_exp_neg_st" => ClosedFormCase::Theorem2ExpNegSt,
        _ => {
            let known = ClosedFormCase::<TimeOnly>::IDS.join(", ");
            return Err(usage(format!("unknown case `{id}` (known: {known})")));
        }
    })
}

impl RefArgs {
    fn choice(&self) -> Result<Option<RefChoice>, CliError> {
        let Some(src) = self.reference.as_deref() else {
            return Ok(None);
        };
        if src == "oracle" {
            return Ok(Some(RefChoice::Oracle));
        }
        match src.strip_prefix("case:") {
            Some(id) => Ok(Some(RefChoice::Case(case_from_id(
                id,
                self.p.as_deref(),
                self.k,
            )?))),
            None => Err(usage(format!(
                "--ref must be `oracle` or `case:<id>` (got `{src}`)"
            ))),
        }
    }
}

/// The integrand from `--f`, or the case's own integrand when `--f` is absent.
fn field_for(
    flow: &FlowArgs,
    choice: Option<&RefChoice>,
) -> Result<Box<dyn ScalarField>, CliError> {
    match (&flow.f, choice) {
        (Some(_), _) => Ok(Box::new(flow.expr()?)),
        (None, Some(RefChoice::Case(case))) => Ok(Box::new(case.clone())),
        (None, _) => Err(usage(
            "--f is required unless --ref names a closed-form case",
        )),
    }
}

fn reference_value<F: ScalarField>(
    choice: &RefChoice,
    spec: &FlowSpec<F>,
    t: f64,
) -> Result<Reference, CliError> {
    match choice {
        RefChoice::Oracle => Ok(Reference {
            value: solve_ivp(&spec.field, spec.a, spec.b, t, &OracleConfig::default())?,
            source: ReferenceSource::Oracle,
        }),
        RefChoice::Case(case) => Ok(Reference {
            value: exact_value(case, spec.a, spec.b, t)?.value,
            source: ReferenceSource::Case(case.id()),
        }),
    }
}

fn emit(output: &OutputArgs, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    emit_to(output.output.as_ref(), text, out)
}

fn emit_to(path: Option<&PathBuf>, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(path) => fs::write(path, text)?,
        None => {
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn single_row(result: &FlowResult, reference: Option<&Reference>) -> Row {
    Row::new(
        Some(result.n),
        Some(result.mesh),
        result.value,
        reference.map(|r| r.value),
    )
}

fn eval(args: EvalArgs, out: &mut dyn Write, _err: &mut dyn Write) -> Result<(), CliError> {
    let t = finite("t", args.t)?;
    let choice = args.reference.choice()?;
    let spec = args.flow.spec(field_for(&args.flow, choice.as_ref())?)?;
    let rule = tag_rule(&args.tags);
    let result = match args.tol {
        Some(tol) => {
            flow::compositional_integral(&spec, t, &refinement(tol, args.n, args.n_max, rule)?)?
        }
        None => flow::uniform_composition(&spec, t, args.n, rule)?,
    };
    let reference = choice.map(|c| reference_value(&c, &spec, t)).transpose()?;
    let text = match args.output.format {
        Format::Csv => report::csv(&[single_row(&result, reference.as_ref())]),
        Format::Table => report::eval_table(&result, reference.as_ref()),
    };
    emit(&args.output, &text, out)
}

fn doubling(n_min: usize, n_max: usize) -> Result<Vec<usize>, CliError> {
    if n_min == 0 || n_max < n_min {
        return Err(usage(format!(
            "need 1 <= --n-min <= --n-max (got {n_min}, {n_max})"
        )));
    }
    let mut list = vec![n_min];
    while let Some(next) = list.last().unwrap().checked_mul(2).filter(|&n| n <= n_max) {
        list.push(next);
    }
    if list.len() < 3 {
        return Err(usage(
            "the doubling schedule from --n-min to --n-max needs at least three meshes",
        ));
    }
    Ok(list)
}

fn converge(args: ConvergeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let t = finite("t", args.t)?;
    let n_list = doubling(args.n_min, args.n_max)?;
    let choice = args.reference.choice()?.unwrap_or(RefChoice::Oracle);
    let spec = args.flow.spec(field_for(&args.flow, Some(&choice))?)?;
    let reference = reference_value(&choice, &spec, t)?;
    let rule = tag_rule(&args.tags);
    let (report, failure) = match harness::convergence_table(&spec, t, rule, &n_list, reference) {
        Ok(report) => (report, None),
        Err(harness::HarnessError::Aborted { partial, error }) => (
            (*partial).clone(),
            Some(CliError::from(harness::HarnessError::Aborted {
                partial,
                error,
            })),
        ),
        Err(e) => return Err(e.into()),
    };
    match args.output.format {
        Format::Csv => {
            emit(&args.output, &report::csv(&report::rows(&report)), out)?;
            if failure.is_none() {
                writeln!(err, "{}", report::fit_line(&report))?;
            }
        }
        Format::Table => emit(
            &args.output,
            &report::convergence_table(&report, failure.is_none()),
            out,
        )?,
    }
    failure.map_or(Ok(()), Err)
}

fn group_check(args: GroupCheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = args.flow.spec(args.flow.expr()?)?;
    positive("tol", args.tol)?;
    let (t_min, t_max) = (finite("t-min", args.t_min)?, finite("t-max", args.t_max)?);
    if t_max <= t_min {
        return Err(usage("--t-max must exceed --t-min"));
    }
    if args.trials == 0 || args.max_cells == 0 {
        return Err(usage("--trials and --max-cells must be at least 1"));
    }
    let mut cfg = AuditConfig::new(args.trials, args.seed, args.tol).with_states(t_min, t_max);
    cfg.max_cells = args.max_cells;
    cfg.n_max = args.n_max;
    let summary = harness::group_law_audit(&spec, &cfg);
    emit_to(
        args.output.as_ref(),
        &report::audit_table(&summary, cfg.agreement_bound()),
        out,
    )?;
    if summary.all_passed() {
        Ok(())
    } else {
        let failed = summary.exact.failed + summary.converged.failed + summary.inverse.failed;
        Err(CliError::AuditFailed(format!(
            "{failed} check(s) failed over {} trial(s)",
            summary.trials
        )))
    }
}

fn inverse(args: InverseArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let t = finite("t", args.t)?;
    let spec = args.flow.spec(args.flow.expr()?)?;
    let rule = tag_rule(&args.tags);
    let result = flow::inverse_flow(
        &spec,
        t,
        &refinement(args.tol, args.n_min, args.n_max, rule)?,
    )?;
    let text = match args.output.format {
        Format::Csv => report::csv(&[single_row(&result, None)]),
        Format::Table => report::eval_table(&result, None),
    };
    emit(&args.output, &text, out)
}

fn subst(args: SubstArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let t = finite("t", args.t)?;
    let (alpha, beta) = (finite("alpha", args.alpha)?, finite("beta", args.beta)?);
    let spec = args.flow.spec(args.flow.expr()?)?;
    let gamma = time_only("gamma", &args.gamma)?;
    let gamma_prime = time_only("gamma-prime", &args.gamma_prime)?;
    let pulled = pullback_spec(&spec, gamma, gamma_prime, alpha, beta)?;
    let rule = tag_rule(&args.tags);
    let result = match args.tol {
        Some(tol) => {
            flow::compositional_integral(&pulled, t, &refinement(tol, args.n, args.n_max, rule)?)?
        }
        None => flow::uniform_composition(&pulled, t, args.n, rule)?,
    };
    let text = match args.output.format {
        Format::Csv => report::csv(&[single_row(&result, None)]),
        Format::Table => report::eval_table(&result, None),
    };
    emit(&args.output, &text, out)
}

fn closed_form(args: ClosedFormArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (a, b, t) = (
        finite("a", args.a)?,
        finite("b", args.b)?,
        finite("t", args.t)?,
    );
    let case = case_from_id(&args.case, args.p.as_deref(), args.k)?;
    let value = exact_value(&case, a, b, t)?;
    let text = match args.output.format {
        Format::Csv => report::csv(&[Row::new(None, None, value.value, None)]),
        Format::Table => report::closed_form_table(case.id(), &value),
    };
    emit(&args.output, &text, out)
}
