//! Convergence tables and randomized group-law audits.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::field::ScalarField;
use crate::flow::{
    compose_flows, compositional_integral, inverse_flow, uniform_composition, FlowError, FlowSpec,
    Refinement,
};
use crate::partition::{Partition, TagRule};
use crate::rng::{UnitStream, ALGORITHM};

/// Errors at or below this level are treated as rounding and left out of the
/// order fit.
pub const ROUNDING_FLOOR: f64 = 100.0 * f64::EPSILON;

/// What a convergence table is measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub value: f64,
    pub source: ReferenceSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceSource {
    Oracle,
    /// A closed-form case, by id.
    Case(&'static str),
    /// A value supplied by the caller.
    Given,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub mesh: f64,
    pub value: f64,
    pub abs_error: f64,
    /// `abs_error / |reference|`, or `abs_error` when the reference is zero.
    pub rel_error: f64,
}

/// Least-squares slope of `log(abs_error)` against `log(mesh)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    pub order: f64,
    /// 95% confidence interval of the slope.
    pub low: f64,
    pub high: f64,
    /// Rows that entered the fit.
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// `None` when fewer than three rows lie above [`ROUNDING_FLOOR`].
    pub fit: Option<OrderFit>,
    pub reference: Reference,
    pub rule: TagRule,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("cell counts must be strictly increasing and at least three")]
    BadSchedule,
    #[error("reference value must be finite")]
    BadReference,
    #[error("table aborted after {} row(s): {error}", partial.rows.len())]
    Aborted {
        partial: Box<ConvergenceReport>,
        error: FlowError,
    },
}

/// One uniform-mesh Riemann Composition per `n`, with errors against `reference`.
pub fn convergence_table<F: ScalarField>(
    spec: &FlowSpec<F>,
    t: f64,
    rule: TagRule,
    n_list: &[usize],
    reference: Reference,
) -> Result<ConvergenceReport, HarnessError> {
    if n_list.len() < 3 || n_list[0] == 0 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::BadSchedule);
    }
    if !reference.value.is_finite() {
        return Err(HarnessError::BadReference);
    }
    let mut report = ConvergenceReport {
        rows: Vec::with_capacity(n_list.len()),
        fit: None,
        reference,
        rule,
    };
    for &n in n_list {
        match uniform_composition(spec, t, n, rule) {
            Ok(r) => {
                let abs_error = libm::fabs(r.value - reference.value);
                let rel_error = if reference.value == 0.0 {
                    abs_error
                } else {
                    abs_error / libm::fabs(reference.value)
                };
                report.rows.push(ConvergenceRow {
                    n,
                    mesh: r.mesh,
                    value: r.value,
                    abs_error,
                    rel_error,
                });
            }
            Err(error) => {
                report.fit = fit_order(&report.rows);
                return Err(HarnessError::Aborted {
                    partial: Box::new(report),
                    error,
                });
            }
        }
    }
    report.fit = fit_order(&report.rows);
    Ok(report)
}

/// Fits `log(abs_error) = order * log(mesh) + c` over rows above the rounding floor.
pub fn fit_order(rows: &[ConvergenceRow]) -> Option<OrderFit> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.abs_error > ROUNDING_FLOOR && r.mesh > 0.0)
        .map(|r| (libm::log(r.mesh), libm::log(r.abs_error)))
        .collect();
    let m = points.len();
    if m < 3 {
        return None;
    }
    let mf = m as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / mf;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / mf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = points
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let se = libm::sqrt(sse / (mf - 2.0) / sxx);
    let half = student_t_975(m - 2) * se;
    Some(OrderFit {
        order: slope,
        low: slope - half,
        high: slope + half,
        points: m,
    })
}

/// Two-sided 95% quantile of Student's t with `df` degrees of freedom.
fn student_t_975(df: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160,
        2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056,
        2.052, 2.048, 2.045, 2.042,
    ];
    match df {
        0 => f64::INFINITY,
        1..=30 => TABLE[df - 1],
        _ => {
            // Cornish-Fisher expansion around the normal quantile
            let z = 1.959_963_984_540_054;
            let d = df as f64;
            z + (z * z * z + z) / (4.0 * d)
                + (5.0 * libm::pow(z, 5.0) + 16.0 * z * z * z + 3.0 * z) / (96.0 * d * d)
        }
    }
}

/// Settings for [`group_law_audit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditConfig {
    pub trials: usize,
    pub seed: u64,
    /// Tolerance handed to the converged compositions.
    pub tol: f64,
    /// Initial states are drawn from `(t_min, t_max]`.
    pub t_min: f64,
    pub t_max: f64,
    /// Upper bound on the cell count of each random partition.
    pub max_cells: usize,
    /// Largest mesh tried by the converged compositions.
    pub n_max: usize,
}

impl AuditConfig {
    pub fn new(trials: usize, seed: u64, tol: f64) -> Self {
        AuditConfig {
            trials,
            seed,
            tol,
            t_min: 0.0,
            t_max: 3.0,
            max_cells: 64,
            n_max: Refinement::DEFAULT_N_MAX,
        }
    }

    pub fn with_states(mut self, t_min: f64, t_max: f64) -> Self {
        self.t_min = t_min;
        self.t_max = t_max;
        self
    }

    /// Bound for the converged chained-vs-direct and inverse checks.
    pub fn agreement_bound(&self) -> f64 {
        10.0 * self.tol
    }
}

/// Pass/fail counts of one law, with the largest discrepancy seen.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Tally {
    pub passed: usize,
    pub failed: usize,
    /// Largest discrepancy; infinite if a trial could not be evaluated.
    pub worst: f64,
}

impl Tally {
    fn record(&mut self, discrepancy: Result<f64, FlowError>, bound: f64) {
        let d = discrepancy.unwrap_or(f64::INFINITY);
        if d <= bound {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        // NaN never passes and is reported as the worst case
        if d.is_nan() || d > self.worst {
            self.worst = d;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditSummary {
    pub trials: usize,
    pub seed: u64,
    pub algorithm: &'static str,
    /// Chained vs direct over matched partitions, bit for bit.
    pub exact: Tally,
    /// Converged chained vs direct, within [`AuditConfig::agreement_bound`].
    pub converged: Tally,
    /// Inverse round trip, within [`AuditConfig::agreement_bound`].
    pub inverse: Tally,
}

impl AuditSummary {
    pub fn all_passed(&self) -> bool {
        self.exact.failed == 0 && self.converged.failed == 0 && self.inverse.failed == 0
    }
}

const RULES: [TagRule; 3] = [TagRule::Left, TagRule::Right, TagRule::Midpoint];

fn random_partition(rng: &mut UnitStream, a: f64, b: f64, max_cells: usize) -> Partition {
    let rule = match rng.int_inclusive(0, 3) {
        3 => TagRule::Random(rng.int_inclusive(0, u32::MAX as usize) as u64),
        i => RULES[i],
    };
    if a == b {
        return Partition::empty(a, rule);
    }
    let cells = rng.int_inclusive(1, max_cells.max(1));
    let mut nodes: Vec<f64> = Vec::with_capacity(cells + 1);
    nodes.push(a);
    let mut interior: Vec<f64> = (1..cells).map(|_| rng.uniform(a, b)).collect();
    interior.sort_by(f64::total_cmp);
    nodes.extend(interior.into_iter().filter(|&x| a < x && x < b));
    nodes.push(b);
    nodes.dedup();
    Partition::from_nodes(nodes, rule)
        .unwrap_or_else(|_| Partition::uniform(a, b, 1, rule).expect("a < b"))
}

/// Randomized check of the group laws over sub-intervals of `[spec.a, spec.b]`.
///
/// Each trial draws `a <= b <= c` and a state `t`, then checks
/// 1. chained == direct bit for bit on random matched partitions,
/// 2. `|Y_cb(Y_ba(t)) - Y_ca(t)|` for converged compositions,
/// 3. `|Y_ac(Y_ca(t)) - t|` through the inversion formula.
pub fn group_law_audit<F: ScalarField>(spec: &FlowSpec<F>, cfg: &AuditConfig) -> AuditSummary {
    let mut rng = UnitStream::new(cfg.seed);
    let mut summary = AuditSummary {
        trials: cfg.trials,
        seed: cfg.seed,
        algorithm: ALGORITHM,
        exact: Tally::default(),
        converged: Tally::default(),
        inverse: Tally::default(),
    };
    let refinement = Refinement::new(cfg.tol).with_range(Refinement::DEFAULT_N0, cfg.n_max);
    let bound = cfg.agreement_bound();
    for _ in 0..cfg.trials {
        let mut ends = [
            rng.uniform(spec.a, spec.b),
            rng.uniform(spec.a, spec.b),
            rng.uniform(spec.a, spec.b),
        ];
        ends.sort_by(f64::total_cmp);
        let [a, b, c] = ends;
        let t = cfg.t_max - rng.next_unit() * (cfg.t_max - cfg.t_min);

        let p_ab = random_partition(&mut rng, a, b, cfg.max_cells);
        let p_bc = random_partition(&mut rng, b, c, cfg.max_cells);
        let exact = compose_flows(spec, t, a, b, c, &p_ab, &p_bc).map(|(chained, direct)| {
            if chained.to_bits() == direct.to_bits() {
                0.0
            } else {
                // nonzero even when the values compare equal (e.g. +0 vs -0)
                libm::fmax(libm::fabs(chained - direct), f64::MIN_POSITIVE)
            }
        });
        summary.exact.record(exact, 0.0);

        let converged = (|| {
            let ba = compositional_integral(&spec.over(a, b)?, t, &refinement)?;
            let chained = compositional_integral(&spec.over(b, c)?, ba.value, &refinement)?;
            let direct = compositional_integral(&spec.over(a, c)?, t, &refinement)?;
            Ok(libm::fabs(chained.value - direct.value))
        })();
        summary.converged.record(converged, bound);

        let round_trip = (|| {
            let sub = spec.over(a, c)?;
            let forward = compositional_integral(&sub, t, &refinement)?;
            let back = inverse_flow(&sub, forward.value, &refinement)?;
            Ok(libm::fabs(back.value - t))
        })();
        summary.inverse.record(round_trip, bound);
    }
    summary
}
