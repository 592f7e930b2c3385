//! Exact-arithmetic toolkit for partition regularity of linear systems.
//!
//! The crate decides and certifies combinatorial statements about
//! homogeneous rational linear systems and finite colourings of the
//! positive integers (and of the positive dyadic rationals):
//!
//! * [`columns`] — Rado columns-property certificates for rational matrices,
//!   with independently checkable span witnesses;
//! * [`windows`] — windowed bitset sets with certified regions, sumset /
//!   difference / iterated-sumset kernels, progression search and exact
//!   density;
//! * [`stabilize`] — stabilization of iterated sumsets `kS` onto arithmetic
//!   progressions `m·Z`, in symmetric, asymmetric (`A − kA`) and dyadic
//!   multi-level forms;
//! * [`colouring`] and [`search`] — finite colourings, partition
//!   verification, monochromatic-solution search and exhaustive
//!   bad-colouring search;
//! * [`solver`] — constructive solvers that, given a colouring and a target
//!   size, produce explicit monochromatic solutions to truncations of three
//!   generated equation families, with full derivation traces;
//! * [`witnesses`] — counterexample verifiers: a modular obstruction
//!   checker, an image-partition-regularity near-zero escape checker, and
//!   image-expression evaluation;
//! * [`artifacts`] — serializable JSON certificates for all of the above,
//!   each independently re-verifiable;
//! * [`selftest`] — the end-to-end acceptance battery used by the test
//!   suite and the `selftest` CLI command.
//!
//! Arithmetic is exact everywhere: rationals of unbounded precision, `i64`
//! set elements, `i128` scaled accumulators with overflow checks. No
//! floating point participates in any decision.

pub mod artifacts;
pub mod colouring;
pub mod columns;
pub mod dsl;
pub mod error;
pub mod linalg;
pub mod rational;
pub mod search;
pub mod selftest;
pub mod solver;
pub mod stabilize;
pub mod systems;
pub mod windows;
pub mod witnesses;

pub use error::{Error, Result};
pub use rational::Rational;
