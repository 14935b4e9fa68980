//! Compositional Integrals with known values.
//!
//! | case                  | integrand          | value                     |
//! |-----------------------|--------------------|---------------------------|
//! | `constant_in_t`       | `f(s)`             | `t + ∫_a^b f`             |
//! | `exp_flow`            | `t`                | `t e^(b - a)`             |
//! | `volterra`            | `p(s) t`           | `t exp(∫_a^b p)`          |
//! | `exp_power_k`         | `k s^(k-1) t`      | `e^(b^k)` (a = 0, t = 1)  |
//! | `theorem2_exp_neg_st` | `exp(-s t)`        | oracle-backed             |
//!
//! The integrals of `f` and `p` come from Gauss–Legendre quadrature, so they
//! share no code path with the IVP oracle. The last case has no elementary
//! form; its value is a reference solve and is labeled as such.

use core::fmt;

use crate::field::{DomainError, ScalarField, TimeOnly, Univariate};
use crate::oracle::{solve_ivp, OracleConfig, OracleError};
use crate::partition::{uniform_cells, TagRule};
use crate::quadrature;

/// A case with an exact or oracle-backed reference value. `U` is the type of
/// the one-variable function carried by `constant_in_t` and `volterra`.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedFormCase<U = TimeOnly> {
    ConstantInT(U),
    ExpFlow,
    Volterra(U),
    ExpPowerK(u32),
    Theorem2ExpNegSt,
}

impl<U> ClosedFormCase<U> {
    pub const IDS: [&'static str; 5] = [
        "constant_in_t",
        "exp_flow",
        "volterra",
        "exp_power_k",
        "theorem2_exp_neg_st",
    ];

    pub fn id(&self) -> &'static str {
        match self {
            ClosedFormCase::ConstantInT(_) => "constant_in_t",
            ClosedFormCase::ExpFlow => "exp_flow",
            ClosedFormCase::Volterra(_) => "volterra",
            ClosedFormCase::ExpPowerK(_) => "exp_power_k",
            ClosedFormCase::Theorem2ExpNegSt => "theorem2_exp_neg_st",
        }
    }
}

/// Where a reference value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Analytic formula, possibly with a quadrature of a smooth integrand.
    Exact,
    /// Adaptive IVP solve; no elementary formula exists.
    OracleBacked,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Exact => "exact",
            Provenance::OracleBacked => "oracle-backed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactValue {
    pub value: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClosedFormError {
    #[error("{case}: parameters outside the case's domain ({reason})")]
    OutOfDomain {
        case: &'static str,
        reason: &'static str,
    },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

fn out_of_domain(case: &'static str, reason: &'static str) -> ClosedFormError {
    ClosedFormError::OutOfDomain { case, reason }
}

impl<U: Univariate> ScalarField for ClosedFormCase<U> {
    fn eval(&self, s: f64, t: f64) -> Result<f64, DomainError> {
        match self {
            ClosedFormCase::ConstantInT(f) => f.eval(s),
            ClosedFormCase::ExpFlow => Ok(t),
            ClosedFormCase::Volterra(p) => Ok(p.eval(s)? * t),
            ClosedFormCase::ExpPowerK(k) => {
                let k = *k as i32;
                Ok(k as f64 * libm::pow(s, (k - 1) as f64) * t)
            }
            ClosedFormCase::Theorem2ExpNegSt => Ok(libm::exp(-s * t)),
        }
    }
}

/// Reference value of `∫_a^b f(s, t) ds • t` for `case`.
pub fn exact_value<U: Univariate>(
    case: &ClosedFormCase<U>,
    a: f64,
    b: f64,
    t: f64,
) -> Result<ExactValue, ClosedFormError> {
    let id = case.id();
    if !(a.is_finite() && b.is_finite() && t.is_finite()) {
        return Err(out_of_domain(id, "a, b and t must be finite"));
    }
    if a > b {
        return Err(out_of_domain(id, "requires a <= b"));
    }
    let exact = |value| ExactValue {
        value,
        provenance: Provenance::Exact,
    };
    match case {
        ClosedFormCase::ConstantInT(f) => Ok(exact(t + quadrature::integrate(f, a, b)?)),
        ClosedFormCase::ExpFlow => Ok(exact(t * libm::exp(b - a))),
        ClosedFormCase::Volterra(p) => Ok(exact(t * libm::exp(quadrature::integrate(p, a, b)?))),
        ClosedFormCase::ExpPowerK(k) => {
            if *k == 0 {
                return Err(out_of_domain(id, "requires k >= 1"));
            }
            if a != 0.0 || t != 1.0 {
                return Err(out_of_domain(id, "requires a = 0 and t = 1"));
            }
            Ok(exact(libm::exp(libm::pow(b, *k as f64))))
        }
        ClosedFormCase::Theorem2ExpNegSt => {
            if !(0.0 <= a && b <= 1.0) {
                return Err(out_of_domain(id, "requires 0 <= a <= b <= 1"));
            }
            if t <= 0.0 {
                return Err(out_of_domain(id, "requires t > 0"));
            }
            let value = solve_ivp(case, a, b, t, &OracleConfig::default())?;
            Ok(ExactValue {
                value,
                provenance: Provenance::OracleBacked,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProductError {
    #[error("k must be at least 1")]
    ZeroPower,
    #[error("n must be at least 1")]
    NoFactors,
    #[error("x must be finite and non-negative (got {0})")]
    BadX(f64),
}

/// `∏_{i=0}^{n-1} (1 + k i^(k-1) (x/n)^k)`, the left-tag product that tends
/// to `e^(x^k)`.
///
/// For `k = 1` this is `(1 + x/n)^n`. Measured at `x = 1` for `k = 1..=4`,
/// each doubling of `n` moves the product strictly closer to `e` from `n = 1`
/// on (checked for `n = 2^0 ..= 2^20`), so the monotone-approach threshold is
/// `n = 1` there.
pub fn product_limit_exp_k(k: u32, x: f64, n: usize) -> Result<f64, ProductError> {
    if k == 0 {
        return Err(ProductError::ZeroPower);
    }
    if n == 0 {
        return Err(ProductError::NoFactors);
    }
    if !(x.is_finite() && x >= 0.0) {
        return Err(ProductError::BadX(x));
    }
    let step_k = libm::pow(x / n as f64, k as f64);
    let kf = k as f64;
    let mut product = 1.0;
    for i in 0..n {
        product *= 1.0 + kf * libm::pow(i as f64, (k - 1) as f64) * step_k;
    }
    Ok(product)
}

/// `∏ (1 + p(s*) Δs)` over the uniform `n`-cell mesh of `[a, b]`.
pub fn volterra_product<U: Univariate + ?Sized>(
    p: &U,
    a: f64,
    b: f64,
    n: usize,
    rule: TagRule,
) -> Result<f64, DomainError> {
    let mut product = 1.0;
    for (lo, hi, tag) in uniform_cells(a, b, n, rule) {
        product *= 1.0 + p.eval(tag)? * (hi - lo);
    }
    Ok(product)
}

/// `exp(Σ log(1 + p(s*) Δs))`, the log-sum form of [`volterra_product`].
pub fn volterra_log_sum<U: Univariate + ?Sized>(
    p: &U,
    a: f64,
    b: f64,
    n: usize,
    rule: TagRule,
) -> Result<f64, DomainError> {
    let mut sum = 0.0;
    for (lo, hi, tag) in uniform_cells(a, b, n, rule) {
        let factor = p.eval(tag)? * (hi - lo);
        if factor <= -1.0 {
            return Err(DomainError::LogNonPositive(1.0 + factor));
        }
        sum += libm::log1p(factor);
    }
    Ok(libm::exp(sum))
}
