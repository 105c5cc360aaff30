//! Exact computations for quadruple covers of an elliptic curve.
//!
//! Bundles on the curve are formal sums of indecomposables; the
//! [`moduli`] module runs the dimension count for Casnati–Ekedahl pairs,
//! [`prym`] works at the level of homology lattices, and [`conics`]
//! handles the local pencil-of-conics model.

pub mod bundle;
pub mod cli;
pub mod cohomology;
pub mod conics;
pub mod expr;
pub mod intmat;
pub mod moduli;
pub mod picard;
pub mod poly;
pub mod prym;
