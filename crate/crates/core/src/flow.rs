//! Riemann Compositions and the Compositional Integral.
//!
//! Over a tagged partition of `[a, b]` the Riemann Composition of `f` at `t`
//! is the nested composition of the cell maps `t -> t + f(s*, t) ds`, with the
//! cell touching `a` innermost. It is evaluated as the left fold
//!
//! ```text
//! t_0 = t
//! t_k = t_{k-1} + f(tag_k, t_{k-1}) * (x_k - x_{k-1})      k = 1..n
//! ```
//!
//! over ascending cells, so `t_n` is the composed value. As the mesh goes to
//! zero this converges to the flow `Y_ba(t)` of `y' = f(x, y)`, `y(a) = t`.
//!
//! Because the fold over a concatenated partition performs exactly the same
//! floating-point operations as folding the two halves one after the other,
//! [`compose_flows`] returns bit-identical chained and direct values.

use alloc::vec::Vec;

use crate::field::{DomainError, PullBack, Reflected, ScalarField, Univariate};
use crate::partition::{uniform_cells, Partition, PartitionError, TagRule};

/// Open interval of admissible states `(lo, hi)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDomain {
    pub lo: f64,
    pub hi: f64,
}

impl StateDomain {
    /// The whole real line.
    pub const REAL: StateDomain = StateDomain {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    /// `(0, +inf)`.
    pub const POSITIVE: StateDomain = StateDomain {
        lo: 0.0,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self, FlowError> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(FlowError::BadDomain { lo, hi });
        }
        Ok(StateDomain { lo, hi })
    }

    /// Finite and strictly inside `(lo, hi)`.
    pub fn contains(&self, x: f64) -> bool {
        x.is_finite() && self.lo < x && x < self.hi
    }
}

impl Default for StateDomain {
    fn default() -> Self {
        StateDomain::REAL
    }
}

/// An integrand together with the interval `[a, b]` and the state domain.
#[derive(Debug, Clone)]
pub struct FlowSpec<F> {
    pub field: F,
    pub a: f64,
    pub b: f64,
    pub domain: StateDomain,
}

impl<F: ScalarField> FlowSpec<F> {
    pub fn new(field: F, a: f64, b: f64) -> Result<Self, FlowError> {
        check_interval(a, b)?;
        Ok(FlowSpec {
            field,
            a,
            b,
            domain: StateDomain::REAL,
        })
    }

    pub fn with_domain(mut self, domain: StateDomain) -> Self {
        self.domain = domain;
        self
    }

    /// The same integrand and domain over another interval.
    pub fn over(&self, a: f64, b: f64) -> Result<FlowSpec<&F>, FlowError> {
        check_interval(a, b)?;
        Ok(FlowSpec {
            field: &self.field,
            a,
            b,
            domain: self.domain,
        })
    }

    /// Spec of the inverse flow: `-f(b + a - s, t)` over `[a, b]`.
    pub fn reflected(&self) -> FlowSpec<Reflected<&F>> {
        FlowSpec {
            field: Reflected {
                inner: &self.field,
                a: self.a,
                b: self.b,
            },
            a: self.a,
            b: self.b,
            domain: self.domain,
        }
    }
}

fn check_interval(a: f64, b: f64) -> Result<(), FlowError> {
    if a.is_finite() && b.is_finite() && a <= b {
        Ok(())
    } else {
        Err(FlowError::BadInterval { a, b })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("interval endpoints must be finite with a <= b (got a = {a}, b = {b})")]
    BadInterval { a: f64, b: f64 },
    #[error("state domain ({lo}, {hi}) is empty")]
    BadDomain { lo: f64, hi: f64 },
    #[error("partition covers [{found_a}, {found_b}] but the flow runs over [{a}, {b}]")]
    IntervalMismatch {
        a: f64,
        b: f64,
        found_a: f64,
        found_b: f64,
    },
    #[error("initial state {0} is outside the state domain")]
    InitialOutsideDomain(f64),
    #[error("state escaped the domain at step {step}: t = {value}")]
    StateEscape { step: usize, value: f64 },
    #[error("integrand domain error at step {step}: {source}")]
    Domain { step: usize, source: DomainError },
    #[error("no convergence by n = {n} (last difference {difference:e})")]
    NoConvergence { n: usize, difference: f64 },
    #[error("invalid refinement schedule: {0}")]
    BadRefinement(&'static str),
    #[error("reparametrization misses the endpoint: gamma({at}) = {found}, expected {expected}")]
    GammaEndpoint { at: f64, expected: f64, found: f64 },
    #[error("reparametrization could not be evaluated: {0}")]
    GammaDomain(DomainError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// Value of a Riemann Composition.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub value: f64,
    /// Number of cells.
    pub n: usize,
    /// Mesh norm of the partition.
    pub mesh: f64,
    pub tag_rule: TagRule,
    /// `t_0 ..= t_n` when requested.
    pub trace: Option<Vec<f64>>,
}

/// Applies the cell maps `t -> t + f(tag, t) (hi - lo)` in iteration order.
///
/// `first_step` numbers the first cell for error reports.
fn fold_cells<F, I>(
    field: &F,
    domain: StateDomain,
    t: f64,
    cells: I,
    first_step: usize,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<f64, FlowError>
where
    F: ScalarField + ?Sized,
    I: IntoIterator<Item = (f64, f64, f64)>,
{
    let mut state = t;
    for (k, (lo, hi, tag)) in cells.into_iter().enumerate() {
        let step = first_step + k;
        let slope = field
            .eval(tag, state)
            .map_err(|source| FlowError::Domain { step, source })?;
        state += slope * (hi - lo);
        if !domain.contains(state) {
            return Err(FlowError::StateEscape { step, value: state });
        }
        if let Some(trace) = trace.as_deref_mut() {
            trace.push(state);
        }
    }
    Ok(state)
}

fn check_start(domain: StateDomain, t: f64) -> Result<(), FlowError> {
    if domain.contains(t) {
        Ok(())
    } else {
        Err(FlowError::InitialOutsideDomain(t))
    }
}

fn check_span(a: f64, b: f64, p: &Partition) -> Result<(), FlowError> {
    if p.start() == a && p.end() == b {
        Ok(())
    } else {
        Err(FlowError::IntervalMismatch {
            a,
            b,
            found_a: p.start(),
            found_b: p.end(),
        })
    }
}

/// Riemann Composition of `spec.field` over `p`, starting from state `t`.
pub fn riemann_composition<F: ScalarField>(
    spec: &FlowSpec<F>,
    t: f64,
    p: &Partition,
    want_trace: bool,
) -> Result<FlowResult, FlowError> {
    check_span(spec.a, spec.b, p)?;
    check_start(spec.domain, t)?;
    let mut trace = want_trace.then(|| {
        let mut v = Vec::with_capacity(p.len() + 1);
        v.push(t);
        v
    });
    let value = fold_cells(
        &spec.field,
        spec.domain,
        t,
        p.ascending_cells(),
        1,
        trace.as_mut(),
    )?;
    Ok(FlowResult {
        value,
        n: p.len(),
        mesh: p.mesh(),
        tag_rule: p.rule(),
        trace,
    })
}

/// Riemann Composition over the uniform `n`-cell mesh of `[spec.a, spec.b]`.
///
/// Bit-identical to `riemann_composition` with `Partition::uniform(a, b, n, rule)`,
/// but streams the cells instead of building the partition.
pub fn uniform_composition<F: ScalarField>(
    spec: &FlowSpec<F>,
    t: f64,
    n: usize,
    rule: TagRule,
) -> Result<FlowResult, FlowError> {
    check_interval(spec.a, spec.b)?;
    check_start(spec.domain, t)?;
    if spec.a == spec.b {
        return Ok(identity_result(t, rule));
    }
    if n == 0 {
        return Err(PartitionError::NoCells {
            a: spec.a,
            b: spec.b,
        }
        .into());
    }
    let mut mesh = 0.0f64;
    let cells =
        uniform_cells(spec.a, spec.b, n, rule).inspect(|cell| mesh = mesh.max(cell.1 - cell.0));
    let value = fold_cells(&spec.field, spec.domain, t, cells, 1, None)?;
    Ok(FlowResult {
        value,
        n,
        mesh,
        tag_rule: rule,
        trace: None,
    })
}

fn identity_result(t: f64, rule: TagRule) -> FlowResult {
    FlowResult {
        value: t,
        n: 0,
        mesh: 0.0,
        tag_rule: rule,
        trace: None,
    }
}

/// Dyadic refinement schedule for [`compositional_integral`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    pub tol: f64,
    /// Cell count of the coarsest mesh.
    pub n0: usize,
    /// Largest cell count tried; must be `n0 * 2^k` with `k >= 1`.
    pub n_max: usize,
    pub rule: TagRule,
}

impl Refinement {
    pub const DEFAULT_N0: usize = 16;
    pub const DEFAULT_N_MAX: usize = 1 << 28;

    pub fn new(tol: f64) -> Self {
        Refinement {
            tol,
            n0: Self::DEFAULT_N0,
            n_max: Self::DEFAULT_N_MAX,
            rule: TagRule::Left,
        }
    }

    pub fn with_rule(mut self, rule: TagRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_range(mut self, n0: usize, n_max: usize) -> Self {
        self.n0 = n0;
        self.n_max = n_max;
        self
    }

    fn validate(&self) -> Result<(), FlowError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(FlowError::BadRefinement(
                "tolerance must be positive and finite",
            ));
        }
        if self.n0 == 0 {
            return Err(FlowError::BadRefinement("n0 must be at least 1"));
        }
        let ratio = self.n_max / self.n0;
        if !self.n_max.is_multiple_of(self.n0) || ratio < 2 || !ratio.is_power_of_two() {
            return Err(FlowError::BadRefinement(
                "n_max must be n0 * 2^k with k >= 1",
            ));
        }
        Ok(())
    }
}

/// The Compositional Integral `Y_ba(t)`, by doubling uniform meshes from `n0`.
///
/// Returns the first `V_2n` with `|V_2n - V_n| <= tol (1 + |V_2n|)`.
pub fn compositional_integral<F: ScalarField>(
    spec: &FlowSpec<F>,
    t: f64,
    refinement: &Refinement,
) -> Result<FlowResult, FlowError> {
    refinement.validate()?;
    check_interval(spec.a, spec.b)?;
    check_start(spec.domain, t)?;
    if spec.a == spec.b {
        return Ok(identity_result(t, refinement.rule));
    }
    let mut n = refinement.n0;
    let mut previous = uniform_composition(spec, t, n, refinement.rule)?;
    let mut difference = f64::INFINITY;
    while n < refinement.n_max {
        n *= 2;
        let current = uniform_composition(spec, t, n, refinement.rule)?;
        difference = libm::fabs(current.value - previous.value);
        if difference <= refinement.tol * (1.0 + libm::fabs(current.value)) {
            return Ok(current);
        }
        previous = current;
    }
    Err(FlowError::NoConvergence { n, difference })
}

/// Chained and direct compositions for `a <= b <= c`.
///
/// `chained` folds `p_bc` onto the result of folding `p_ab`; `direct` folds
/// `p_ab ++ p_bc`. The two are bit-identical.
#[allow(clippy::too_many_arguments)]
pub fn compose_flows<F: ScalarField>(
    spec: &FlowSpec<F>,
    t: f64,
    a: f64,
    b: f64,
    c: f64,
    p_ab: &Partition,
    p_bc: &Partition,
) -> Result<(f64, f64), FlowError> {
    check_interval(a, b)?;
    check_interval(b, c)?;
    check_span(a, b, p_ab)?;
    check_span(b, c, p_bc)?;
    check_start(spec.domain, t)?;
    let mid = fold_cells(&spec.field, spec.domain, t, p_ab.ascending_cells(), 1, None)?;
    let chained = fold_cells(
        &spec.field,
        spec.domain,
        mid,
        p_bc.ascending_cells(),
        p_ab.len() + 1,
        None,
    )?;
    let joined = p_ab.concat(p_bc)?;
    let direct = fold_cells(
        &spec.field,
        spec.domain,
        t,
        joined.ascending_cells(),
        1,
        None,
    )?;
    Ok((chained, direct))
}

/// `Y_ab(t) = Y_ba^{-1}(t)`: the Compositional Integral of `-f(b + a - s, t)`
/// over `[a, b]`.
pub fn inverse_flow<F: ScalarField>(
    spec: &FlowSpec<F>,
    t: f64,
    refinement: &Refinement,
) -> Result<FlowResult, FlowError> {
    compositional_integral(&spec.reflected(), t, refinement)
}

/// Spec of the pulled-back integrand `f(gamma(p), t) gamma'(p)` over `[alpha, beta]`.
///
/// Fails unless `gamma(alpha)` and `gamma(beta)` are within `1e-12` of `spec.a`
/// and `spec.b`.
pub fn pullback_spec<F, G, D>(
    spec: &FlowSpec<F>,
    gamma: G,
    gamma_prime: D,
    alpha: f64,
    beta: f64,
) -> Result<FlowSpec<PullBack<&F, G, D>>, FlowError>
where
    F: ScalarField,
    G: Univariate,
    D: Univariate,
{
    const ENDPOINT_TOL: f64 = 1e-12;
    check_interval(alpha, beta)?;
    for (at, expected) in [(alpha, spec.a), (beta, spec.b)] {
        let found = gamma.eval(at).map_err(FlowError::GammaDomain)?;
        if found.is_nan() || libm::fabs(found - expected) > ENDPOINT_TOL {
            return Err(FlowError::GammaEndpoint {
                at,
                expected,
                found,
            });
        }
    }
    Ok(FlowSpec {
        field: PullBack {
            field: &spec.field,
            gamma,
            gamma_prime,
        },
        a: alpha,
        b: beta,
        domain: spec.domain,
    })
}

/// Riemann Composition of the reparametrized integrand over `p`, a partition
/// of `[alpha, beta]`.
#[allow(clippy::too_many_arguments)]
pub fn substituted_flow<F, G, D>(
    spec: &FlowSpec<F>,
    gamma: G,
    gamma_prime: D,
    alpha: f64,
    beta: f64,
    t: f64,
    p: &Partition,
    want_trace: bool,
) -> Result<FlowResult, FlowError>
where
    F: ScalarField,
    G: Univariate,
    D: Univariate,
{
    let pulled = pullback_spec(spec, gamma, gamma_prime, alpha, beta)?;
    riemann_composition(&pulled, t, p, want_trace)
}

/// Converged counterpart of [`substituted_flow`].
pub fn substituted_integral<F, G, D>(
    spec: &FlowSpec<F>,
    gamma: G,
    gamma_prime: D,
    alpha: f64,
    beta: f64,
    t: f64,
    refinement: &Refinement,
) -> Result<FlowResult, FlowError>
where
    F: ScalarField,
    G: Univariate,
    D: Univariate,
{
    let pulled = pullback_spec(spec, gamma, gamma_prime, alpha, beta)?;
    compositional_integral(&pulled, t, refinement)
}
