//! Time-dependent Hamiltonian mechanics on locally conformal symplectic
//! (lcs) manifolds.
//!
//! The crate is organized around a small symbolic core ([`expr`]) and an
//! exterior-calculus layer ([`exterior`]) with exact rational coefficients.
//! On top of those sit the lcs structure record and its validation
//! ([`lcs`]), time-dependent Hamiltonian dynamics and integration
//! ([`dynamics`]), canonical transformations between time-extended
//! structures ([`canonical`]), Hamilton-Jacobi machinery on cotangent lcs
//! structures ([`hamjac`]), and contact pairs with the built-in
//! nilpotent-algebra Lie systems ([`contact`]).

pub mod canonical;
pub mod chart;
pub mod cli;
pub mod contact;
pub mod dynamics;
pub mod expr;
pub mod exterior;
pub mod hamjac;
pub mod json;
pub mod lcs;
pub mod sample;

pub use chart::Chart;
pub use expr::ScalarExpr;
pub use exterior::{ChartMap, DifferentialForm, VectorFieldExpr};
pub use lcs::{validate_lcs, LcsStructure};
