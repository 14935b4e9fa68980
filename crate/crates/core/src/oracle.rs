//! Reference solutions of `y' = f(x, y)`, `y(a) = t`, by an adaptive
//! Dormand–Prince 5(4) pair.
//!
//! Step-size control is the PI controller of Hairer, Nørsett & Wanner
//! (DOPRI5): `beta = 0.04`, exponent `0.2 - 0.75 beta`, safety `0.9`, step
//! ratio clamped to `[0.2, 10]`. The error norm is
//! `|err| / (abs_tol + rel_tol * max(|y_n|, |y_n+1|))`. The final step is
//! shortened to land on `b` exactly.

use crate::field::{DomainError, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// First trial step; chosen automatically when `None`.
    pub initial_step: Option<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_steps: 200_000,
            initial_step: None,
        }
    }
}

impl OracleConfig {
    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("tolerances and step limit must be positive")]
    BadConfig,
    #[error("interval endpoints must be finite with a <= b (got a = {a}, b = {b})")]
    BadInterval { a: f64, b: f64 },
    #[error("step limit {steps} reached at x = {x}; probable blow-up or stiffness")]
    StepLimit { steps: usize, x: f64 },
    #[error("step size underflow at x = {x}; probable blow-up or stiffness")]
    StepUnderflow { x: f64 },
    #[error("solution is no longer finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("integrand domain error at x = {x}: {source}")]
    Domain { x: f64, source: DomainError },
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - BETA * 0.75;
const MAX_SHRINK: f64 = 5.0; // 1 / 0.2
const MAX_GROW: f64 = 0.1; // 1 / 10

/// `y(b)` for `y' = f(x, y)`, `y(a) = t`.
pub fn solve_ivp<F: ScalarField + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    t: f64,
    cfg: &OracleConfig,
) -> Result<f64, OracleError> {
    if !(cfg.rel_tol > 0.0 && cfg.abs_tol > 0.0 && cfg.max_steps > 0) {
        return Err(OracleError::BadConfig);
    }
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(OracleError::BadInterval { a, b });
    }
    if a == b {
        return Ok(t);
    }
    let eval = |x: f64, y: f64| -> Result<f64, OracleError> {
        if !y.is_finite() {
            return Err(OracleError::NonFinite { x });
        }
        f.eval(x, y)
            .map_err(|source| OracleError::Domain { x, source })
    };

    let mut x = a;
    let mut y = t;
    let mut k1 = eval(x, y)?;
    let mut h = match cfg.initial_step {
        Some(h0) if h0 > 0.0 => h0.min(b - a),
        _ => initial_step(&eval, x, y, k1, b - a, cfg)?,
    };
    let mut facold = 1e-4f64;
    let mut last_rejected = false;

    for _ in 0..cfg.max_steps {
        let last = x + h >= b;
        if last {
            h = b - x;
        }
        if h <= 0.0 || x + h == x {
            return Err(OracleError::StepUnderflow { x });
        }
        let k2 = eval(x + C2 * h, y + h * (A21 * k1))?;
        let k3 = eval(x + C3 * h, y + h * (A31 * k1 + A32 * k2))?;
        let k4 = eval(x + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))?;
        let k5 = eval(
            x + C5 * h,
            y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
        )?;
        let x_next = if last { b } else { x + h };
        let k6 = eval(
            x_next,
            y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
        )?;
        let y_next = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
        let k7 = eval(x_next, y_next)?;
        let err_est = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let scale = cfg.abs_tol + cfg.rel_tol * libm::fmax(libm::fabs(y), libm::fabs(y_next));
        let err = libm::fabs(err_est) / scale;
        if !err.is_finite() {
            return Err(OracleError::NonFinite { x });
        }

        let fac11 = libm::pow(err, EXPO);
        if err <= 1.0 {
            let mut fac = fac11 / libm::pow(facold, BETA);
            fac = (fac / SAFETY).clamp(MAX_GROW, MAX_SHRINK);
            facold = libm::fmax(err, 1e-4);
            x = x_next;
            y = y_next;
            k1 = k7;
            if last {
                return Ok(y);
            }
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            h = h_new;
            last_rejected = false;
        } else {
            h /= MAX_SHRINK.min(fac11 / SAFETY);
            last_rejected = true;
        }
    }
    Err(OracleError::StepLimit {
        steps: cfg.max_steps,
        x,
    })
}

fn initial_step<E>(
    eval: &E,
    x: f64,
    y: f64,
    f0: f64,
    span: f64,
    cfg: &OracleConfig,
) -> Result<f64, OracleError>
where
    E: Fn(f64, f64) -> Result<f64, OracleError>,
{
    let sk = cfg.abs_tol + cfg.rel_tol * libm::fabs(y);
    let d0 = libm::fabs(y) / sk;
    let d1 = libm::fabs(f0) / sk;
    let h0 = if d0 < 1e-10 || d1 < 1e-10 {
        1e-6
    } else {
        0.01 * d0 / d1
    }
    .min(span);
    let f1 = eval(x + h0, y + h0 * f0)?;
    let d2 = libm::fabs(f1 - f0) / sk / h0;
    let dmax = libm::fmax(d1, d2);
    let h1 = if dmax <= 1e-15 {
        libm::fmax(1e-6, h0 * 1e-3)
    } else {
        libm::pow(0.01 / dmax, 0.2)
    };
    Ok((100.0 * h0).min(h1).min(span))
}
