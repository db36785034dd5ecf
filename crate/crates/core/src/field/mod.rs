//! Expression IR for smooth fields on the closed domain.
//!
//! Expressions live in a hash-consed [`ExprPool`] and are referenced by
//! copyable [`FieldExpr`] handles. Differentiation is structural
//! ([`ExprPool::partial`], [`apply_n`], [`apply_t`], [`apply_laplacian`]),
//! and evaluation goes through a compiled [`Tape`].
//!
//! Construction requires `&mut ExprPool` and therefore happens in one build
//! phase; tapes are immutable and `Sync`, so evaluation may fan out across
//! threads afterwards.

mod diff;
mod pool;
pub mod sexpr;
mod tape;

pub use diff::{apply_laplacian, apply_n, apply_t};
pub use pool::{smooth_step_e, ExprPool, FieldExpr, Node, Real, Scalar};
pub use tape::{Tape, GUARD_SLACK};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    /// A reciprocal, square root or quotient produced a non-finite value that
    /// reached the result. Indicates an assembly bug, not bad user input.
    #[error("domain violation at tape op {op} for point {point:?}")]
    DomainViolation { op: usize, point: Vec<f64> },
    #[error("expression needs {needed} coordinates, point has {got}")]
    Dimension { needed: usize, got: usize },
}
