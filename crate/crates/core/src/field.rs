//! Integrands `f(s, t)` and the one-variable curves used for reparametrization.
//!
//! A [`ScalarField`] is anything that can be evaluated at a time `s` and a
//! state `t`. Parsed expressions implement it, as do plain closures wrapped in
//! [`FnField`]. Evaluation is fallible: leaving a function's domain is reported
//! as a [`DomainError`] instead of propagating NaN.

use core::fmt;

use alloc::boxed::Box;

use crate::expr::Expr;

/// Why an integrand could not be evaluated.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum DomainError {
    #[error("log of non-positive argument {0}")]
    LogNonPositive(f64),
    #[error("sqrt of negative argument {0}")]
    SqrtNegative(f64),
    #[error("division by zero (numerator {0})")]
    DivisionByZero(f64),
    #[error("power {base}^{exponent} is undefined")]
    PowUndefined { base: f64, exponent: f64 },
    #[error("integrand returned NaN at s = {s}, t = {t}")]
    NotANumber { s: f64, t: f64 },
}

/// A real-valued function of time `s` and state `t`.
pub trait ScalarField {
    fn eval(&self, s: f64, t: f64) -> Result<f64, DomainError>;
}

impl<F: ScalarField + ?Sized> ScalarField for &F {
    fn eval(&self, s: f64, t: f64) -> Result<f64, DomainError> {
        (**self).eval(s, t)
    }
}

impl<F: ScalarField + ?Sized> ScalarField for Box<F> {
    fn eval(&self, s: f64, t: f64) -> Result<f64, DomainError> {
        (**self).eval(s, t)
    }
}

impl ScalarField for Expr {
    fn eval(&self, s: f64, t: f64) -> Result<f64, DomainError> {
        Expr::eval(self, s, t)
    }
}

/// Adapts a closure `Fn(s, t) -> f64` into a [`ScalarField`].
///
/// A NaN result is turned into [`DomainError::NotANumber`].
#[derive(Clone, Copy)]
pub struct FnField<F>(pub F);

impl<F: Fn(f64, f64) -> f64> ScalarField for FnField<F> {
    fn eval(&self, s: f64, t: f64) -> Result<f64, DomainError> {
        let v = (self.0)(s, t);
        if v.is_nan() {
            Err(DomainError::NotANumber { s, t })
        } else {
            Ok(v)
        }
    }
}

impl<F> fmt::Debug for FnField<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnField(..)")
    }
}

/// The reflected, negated integrand `g(s, t) = -f(b + a - s, t)`.
///
/// Composing `g` over `[a, b]` runs the flow of `f` backwards from `b` to `a`.
#[derive(Debug, Clone, Copy)]
pub struct Reflected<F> {
    pub inner: F,
    pub a: f64,
    pub b: f64,
}

impl<F: ScalarField> ScalarField for Reflected<F> {
    fn eval(&self, s: f64, t: f64) -> Result<f64, DomainError> {
        Ok(-self.inner.eval(self.b + self.a - s, t)?)
    }
}

/// A real function of a single variable.
pub trait Univariate {
    fn eval(&self, x: f64) -> Result<f64, DomainError>;
}

impl<U: Univariate + ?Sized> Univariate for &U {
    fn eval(&self, x: f64) -> Result<f64, DomainError> {
        (**self).eval(x)
    }
}

impl<U: Univariate + ?Sized> Univariate for Box<U> {
    fn eval(&self, x: f64) -> Result<f64, DomainError> {
        (**self).eval(x)
    }
}

/// Adapts a closure `Fn(x) -> f64` into a [`Univariate`].
#[derive(Clone, Copy)]
pub struct FnCurve<F>(pub F);

impl<F: Fn(f64) -> f64> Univariate for FnCurve<F> {
    fn eval(&self, x: f64) -> Result<f64, DomainError> {
        let v = (self.0)(x);
        if v.is_nan() {
            Err(DomainError::NotANumber { s: x, t: f64::NAN })
        } else {
            Ok(v)
        }
    }
}

impl<F> fmt::Debug for FnCurve<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnCurve(..)")
    }
}

/// An expression in `s` alone, used as a one-variable function.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeOnly(Expr);

/// Returned by [`TimeOnly::new`] when the expression mentions the state `t`.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("expression `{0}` depends on the state variable `t`")]
pub struct DependsOnState(pub Expr);

impl TimeOnly {
    pub fn new(expr: Expr) -> Result<Self, DependsOnState> {
        if expr.mentions_state() {
            Err(DependsOnState(expr))
        } else {
            Ok(TimeOnly(expr))
        }
    }

    pub fn expr(&self) -> &Expr {
        &self.0
    }
}

impl Univariate for TimeOnly {
    fn eval(&self, x: f64) -> Result<f64, DomainError> {
        self.0.eval(x, 0.0)
    }
}

/// The pulled-back integrand `h(p, t) = f(gamma(p), t) * gamma'(p)`.
#[derive(Debug, Clone, Copy)]
pub struct PullBack<F, G, D> {
    pub field: F,
    pub gamma: G,
    pub gamma_prime: D,
}

impl<F: ScalarField, G: Univariate, D: Univariate> ScalarField for PullBack<F, G, D> {
    fn eval(&self, p: f64, t: f64) -> Result<f64, DomainError> {
        let s = self.gamma.eval(p)?;
        Ok(self.field.eval(s, t)? * self.gamma_prime.eval(p)?)
    }
}
