//! Finite probability spaces as a category, with pullback and
//! conditional-expectation functors, monetary value measures as presheaves,
//! and an executable law suite.
//!
//! - [`measure`]: spaces, σ-algebras as partitions, random variables and the
//!   almost-sure relations.
//! - [`category`]: arrows `f⁻: X̄ → Ȳ`, composition, `L` and `E`.
//! - [`value`]: the [`ValueMeasure`](value::ValueMeasure) interface, the
//!   entropic measure, rollback and the Yoneda maps.
//! - [`lawcheck`]: random instance generators and the law suite.
//! - [`doc`]: JSON documents for spaces, arrows and pipelines.

pub mod category;
pub mod doc;
pub mod lawcheck;
pub mod measure;
pub mod scalar;
pub mod value;

pub use category::{cond_expect, pullback_l, rn_derivative, CategoryError, ProbArrow};
pub use measure::{
    ae_equal, ae_leq, ess_sup_norm, integral, FinProbSpace, MeasureError, Outcome, RandomVariable,
    SigmaAlgebra,
};
pub use scalar::{Rational, Scalar, Tolerance};
pub use value::{Entropic, EntropicParams, ValueError, ValueMeasure};
