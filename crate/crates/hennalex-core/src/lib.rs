//! Exact arithmetic, a ribbon Hopf algebra, sliced tangle diagrams and
//! homological TQFT maps for computing Hennings-type invariants of links
//! and 3-manifolds together with the Alexander polynomial refinements
//! they carry.
//!
//! The crate is organised bottom-up:
//!
//! * [`laurent`]: Gaussian-rational coefficients and Laurent polynomials
//!   in one variable `t`, with the unit normalisation used everywhere
//!   downstream.
//! * [`linalg`]: dense exact linear algebra (solving, inversion, kernels,
//!   Smith normal form) over the scalar types above.
//! * [`hopf`]: the eight-dimensional ribbon Hopf algebra built from a
//!   group ring of order two acting on an exterior plane, its structure
//!   tensors, and the loop extension by a group-like `γ` tracking
//!   winding.
//! * [`tangle`]: a textual slice format for framed oriented link and
//!   tangle diagrams, parsing, validation and combinatorial analysis.
//! * [`hennings`]: the bead evaluation engine turning diagrams into
//!   tensors over the algebra, closed invariants, Alexander polynomial
//!   computations and skein identities.
//! * [`fn_tqft`]: the Frohman–Nicas homological counterpart on exterior
//!   algebras of surface homology, Lefschetz structure, character
//!   decomposition and derived invariant combinations.
//! * [`rng`]: a tiny deterministic generator for the randomized
//!   verification suites.
//!
//! All computations are exact; no floating point is used anywhere.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod fn_tqft;
pub mod hennings;
pub mod hopf;
pub mod laurent;
pub mod linalg;
pub mod rng;
pub mod tangle;
