//! Text and CSV rendering. All floats go through `format!`, so output does not
//! depend on the process locale.

use std::fmt::Write;

use compint_core::closedforms::ExactValue;
use compint_core::harness::{AuditSummary, ConvergenceReport, Reference, ReferenceSource, Tally};
use compint_core::{FlowResult, TagRule};

pub const CSV_HEADER: &str = "n,mesh,value,abs_error,rel_error";

/// One CSV record; absent fields are written as empty cells.
pub struct Row {
    n: Option<usize>,
    mesh: Option<f64>,
    value: f64,
    errors: Option<(f64, f64)>,
}

impl Row {
    pub fn new(n: Option<usize>, mesh: Option<f64>, value: f64, reference: Option<f64>) -> Self {
        let errors = reference.map(|r| {
            let abs = (value - r).abs();
            (abs, if r == 0.0 { abs } else { abs / r.abs() })
        });
        Row {
            n,
            mesh,
            value,
            errors,
        }
    }
}

/// 17 significant digits.
fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn rows(report: &ConvergenceReport) -> Vec<Row> {
    report
        .rows
        .iter()
        .map(|r| Row {
            n: Some(r.n),
            mesh: Some(r.mesh),
            value: r.value,
            errors: Some((r.abs_error, r.rel_error)),
        })
        .collect()
}

pub fn csv(rows: &[Row]) -> String {
    let mut s = String::new();
    s.push_str(CSV_HEADER);
    s.push('\n');
    for row in rows {
        let n = row.n.map(|n| n.to_string()).unwrap_or_default();
        let mesh = row.mesh.map(sci).unwrap_or_default();
        let (abs, rel) = row
            .errors
            .map(|(a, r)| (sci(a), sci(r)))
            .unwrap_or_default();
        let _ = writeln!(s, "{n},{mesh},{},{abs},{rel}", sci(row.value));
    }
    s
}

fn rule_name(rule: TagRule) -> String {
    match rule {
        TagRule::Left => "left".into(),
        TagRule::Right => "right".into(),
        TagRule::Midpoint => "midpoint".into(),
        TagRule::Random(seed) => format!("random (seed {seed})"),
    }
}

fn source_name(source: ReferenceSource) -> String {
    match source {
        ReferenceSource::Oracle => "oracle".into(),
        ReferenceSource::Case(id) => format!("case:{id}"),
        ReferenceSource::Given => "given".into(),
    }
}

pub fn eval_table(result: &FlowResult, reference: Option<&Reference>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "value  {:?}", result.value);
    let _ = writeln!(s, "mesh   {:?}", result.mesh);
    let _ = writeln!(s, "n      {}", result.n);
    let _ = writeln!(s, "tags   {}", rule_name(result.tag_rule));
    if let Some(r) = reference {
        let row = Row::new(None, None, result.value, Some(r.value));
        let (abs, rel) = row.errors.unwrap_or_default();
        let _ = writeln!(s, "ref    {:?} ({})", r.value, source_name(r.source));
        let _ = writeln!(s, "error  {abs:.3e} abs, {rel:.3e} rel");
    }
    s
}

pub fn fit_line(report: &ConvergenceReport) -> String {
    match report.fit {
        Some(fit) => format!(
            "fitted order {:.4} (95% CI [{:.4}, {:.4}], {} rows)",
            fit.order, fit.low, fit.high, fit.points
        ),
        None => "fitted order unavailable (fewer than three rows above rounding level)".into(),
    }
}

pub fn convergence_table(report: &ConvergenceReport, complete: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "reference {:?} ({}), tags {}",
        report.reference.value,
        source_name(report.reference.source),
        rule_name(report.rule)
    );
    let _ = writeln!(
        s,
        "{:>10}  {:>12}  {:>24}  {:>10}  {:>10}",
        "n", "mesh", "value", "abs_error", "rel_error"
    );
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{:>10}  {:>12.6e}  {:>24}  {:>10.3e}  {:>10.3e}",
            r.n,
            r.mesh,
            format!("{:?}", r.value),
            r.abs_error,
            r.rel_error
        );
    }
    if complete {
        s.push_str(&fit_line(report));
        s.push('\n');
    }
    s
}

fn tally_line(s: &mut String, name: &str, tally: &Tally) {
    let _ = writeln!(
        s,
        "{name:<10}  {:>6}  {:>6}  {:>10.3e}",
        tally.passed, tally.failed, tally.worst
    );
}

pub fn audit_table(summary: &AuditSummary, bound: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "trials {}, seed {}, rng {}",
        summary.trials, summary.seed, summary.algorithm
    );
    let _ = writeln!(
        s,
        "{:<10}  {:>6}  {:>6}  {:>10}",
        "check", "passed", "failed", "worst"
    );
    tally_line(&mut s, "exact", &summary.exact);
    tally_line(&mut s, "converged", &summary.converged);
    tally_line(&mut s, "inverse", &summary.inverse);
    let _ = writeln!(s, "agreement bound {bound:.3e}; exact check is bitwise");
    let _ = writeln!(s, "{}", if summary.all_passed() { "PASS" } else { "FAIL" });
    s
}

pub fn closed_form_table(id: &str, value: &ExactValue) -> String {
    format!(
        "case   {id}\nvalue  {:?}\nsource {}\n",
        value.value, value.provenance
    )
}
