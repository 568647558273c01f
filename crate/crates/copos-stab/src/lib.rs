//! Bounds on the stability number of a graph via conic and sum-of-squares
//! hierarchies, plus the exact combinatorial oracles needed to validate them.
//!
//! The crate is organized bottom-up:
//!
//! - [`graph`] / [`matrix`]: dense graph and symmetric-matrix types, DIMACS
//!   and JSON ingestion ([`io`]).
//! - [`combinatorics`]: exact stability number, stable-set catalogs, critical
//!   edges, clique covers, and the integer quantity `beta_star` behind the LP
//!   hierarchy.
//! - [`zeta`]: the LP bound hierarchy with exact rational values.
//! - [`motzkin`]: simplex quadratic programs (`min x^T M x` over the standard
//!   simplex), minimizer classification, and KKT certificates.
//! - [`monomials`] / [`conic`] / [`sos`]: monomial bases, block conic program
//!   representation (with SDPA sparse import/export), and the compilers that
//!   turn a graph and an order `r` into semidefinite feasibility programs.
//! - [`solver`]: an embedded primal-dual conic solver for the compiled
//!   programs (PSD blocks, a nonnegative block, free variables).
//!
//! Everything is deterministic: no randomness, no hash-order-dependent
//! iteration anywhere in a result path.

pub mod combinatorics;
pub mod conic;
pub mod graph;
pub mod io;
pub mod matrix;
pub mod monomials;
pub mod motzkin;
pub mod solver;
pub mod sos;
pub mod zeta;

pub use graph::Graph;
pub use matrix::SymMatrix;
