//! Fourier transforms of regular semisimple coadjoint orbits by fixed-point
//! localization, with independent numeric oracles for checking the formula.
//!
//! The pieces, bottom-up:
//!
//! * [`algebra`] — matrix realizations of `su(n)` and `sl(n, R)`.
//! * [`cartan`] — Cartan subalgebras, roots, Weyl groups, conjugation into a Cartan.
//! * [`iwasawa`] — Cartan involution and `K A N` subspaces.
//! * [`fixedpoints`] — fixed points on the flag variety and their multiplicities.
//! * [`localize`] — evaluation of the fixed-point sum and its analytic checks.
//! * [`oracle`] — Monte Carlo and damped-quadrature orbit integrals.
//! * [`geometry`] — the `CP^1` model of the `sl(2)` flag variety.
//! * [`verify`] — named property suites used by the CLI and tests.

pub mod algebra;
pub mod cartan;
pub mod error;
pub mod fixedpoints;
pub mod geometry;
pub mod iwasawa;
pub mod linalg;
pub mod localize;
pub mod oracle;
pub mod verify;

pub use algebra::{AlgebraElement, AlgebraSpec, Covector, Family, Field, TAU_RS};
pub use cartan::{cartan_of, reduce_to_cartan, CartanDatum, Reduction, Root, WeylElement};
pub use error::{Error, Result};
