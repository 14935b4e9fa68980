//! Composite Gauss–Legendre quadrature for the closed-form references.

use alloc::vec::Vec;

use crate::field::{DomainError, Univariate};

const ORDER: usize = 20;
const MAX_PANELS: usize = 1 << 12;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a Gauss-Legendre rule needs at least one node");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev-like first guess, refined by Newton on P_n
            let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if libm::fabs(dx) <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Single application of the rule on `[a, b]`.
    pub fn integrate<U: Univariate + ?Sized>(
        &self,
        f: &U,
        a: f64,
        b: f64,
    ) -> Result<f64, DomainError> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f.eval(mid + half * x)?;
        }
        Ok(half * sum)
    }

    fn composite<U: Univariate + ?Sized>(
        &self,
        f: &U,
        a: f64,
        b: f64,
        panels: usize,
    ) -> Result<f64, DomainError> {
        let mut sum = 0.0;
        for k in 0..panels {
            let lo = a + (b - a) * k as f64 / panels as f64;
            let hi = if k + 1 == panels {
                b
            } else {
                a + (b - a) * (k + 1) as f64 / panels as f64
            };
            sum += self.integrate(f, lo, hi)?;
        }
        Ok(sum)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `∫_a^b f` by 20-point Gauss–Legendre on doubling panel counts, stopping
/// once two successive sums agree to a few ulps.
pub fn integrate<U: Univariate + ?Sized>(f: &U, a: f64, b: f64) -> Result<f64, DomainError> {
    if a == b {
        return Ok(0.0);
    }
    let rule = GaussLegendre::new(ORDER);
    let mut panels = 1;
    let mut previous = rule.composite(f, a, b, panels)?;
    while panels < MAX_PANELS {
        panels *= 2;
        let current = rule.composite(f, a, b, panels)?;
        if libm::fabs(current - previous)
            <= 4.0 * f64::EPSILON * libm::fmax(1.0, libm::fabs(current))
        {
            return Ok(current);
        }
        previous = current;
    }
    Ok(previous)
}
