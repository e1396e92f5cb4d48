//! Exact-arithmetic toolkit for the structure of subset-sum sets.
//!
//! For a finite set `A` of reals (or of lattice points), `FS(A)` denotes the
//! set of all subset sums of `A`, including the empty sum `0`.  Everything in
//! this crate manipulates `FS(A)` exactly — no floating point is involved in
//! any set computation or verdict.  Irrational inputs are handled through
//! formal coordinates over a declared basis, with interval certificates for
//! the few places where a real-number comparison is genuinely needed.
//!
//! The crate is organised around four activities:
//!
//! * computing `FS(A)` and its incremental growth statistics ([`fs`]);
//! * verifying the inverse theorem "few subset sums ⇔ dilated integers with
//!   small sum" at desk scale ([`linear`]);
//! * searching extremal configurations of points in general position and
//!   certifying polynomial lower bounds for them ([`stability`]);
//! * decomposing a set with few subset sums into a dilated-integer part and a
//!   small exceptional part, via symmetric progression covers ([`gap`],
//!   [`pipeline`]).

pub mod error;
pub mod fs;
pub mod gap;
pub mod linalg;
pub mod linear;
pub mod pipeline;
pub mod point;
pub mod scalar;
pub mod stability;

pub use error::{Error, Result, Stage};
pub use scalar::{Int, Rat, Scalar, ScalarSet};
