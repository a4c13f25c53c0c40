//! Lie point symmetries of the (2+1)-dimensional quantum Zakharov-Kuznetsov
//! family: exact symbolic prolongation, determining equations, Lie algebra
//! structure, similarity reductions, phase-plane analysis and numerical checks.

pub mod expr;
pub mod field;
pub mod prolong;
pub mod catalog;
pub mod detsolve;
pub mod liealg;
pub mod flow;
pub mod reduce;
pub mod phase;
pub mod numverify;
