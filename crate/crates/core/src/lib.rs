//! Compositional integrals `∫_a^b f(s, t) ds • t`: the flow `Y_ba(t)` of
//! `y' = f(x, y)`, `y(a) = t`, realized as the limit of nested compositions of
//! the Euler cell maps `t -> t + f(s*, t) Δs` over finer and finer partitions.
//!
//! The crate is `no_std` and needs only `alloc`.
//!
//! - [`expr`]: parser and evaluator for integrands written as text.
//! - [`partition`]: tagged partitions, concatenation, dyadic refinement.
//! - [`flow`]: Riemann Compositions, the converged integral, group law,
//!   inversion and substitution.
//! - [`oracle`]: adaptive Dormand–Prince reference solver.
//! - [`closedforms`]: integrals with known values and product limits.
//! - [`harness`]: convergence tables, order fits and group-law audits.
#![no_std]

extern crate alloc;

pub mod closedforms;
pub mod expr;
pub mod field;
pub mod flow;
pub mod harness;
pub mod oracle;
pub mod partition;
pub mod quadrature;
pub mod rng;

pub use expr::{Expr, ParseError};
pub use field::{DomainError, FnCurve, FnField, ScalarField, TimeOnly, Univariate};
pub use flow::{FlowError, FlowResult, FlowSpec, Refinement, StateDomain};
pub use partition::{Partition, TagRule};
