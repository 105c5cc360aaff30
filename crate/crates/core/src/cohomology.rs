//! `h⁰`, `h¹` and `χ` on an elliptic curve.
//!
//! A semistable piece of slope `μ > 0` has no `h¹`, one of slope `μ < 0` no
//! `h⁰`, and at slope zero only the unipotent summands `F_r` have sections
//! (one each). Opaque blocks of slope zero leave the answer unresolved.

use num_integer::Integer;
use num_traits::Zero;
use serde::Serialize;

use crate::bundle::{Bundle, Indecomposable, Resolved};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CohomologyReport {
    pub h0: i64,
    pub h1: i64,
    pub chi: i64,
    /// False when some slope-zero block could not be decomposed; `h0` and `h1`
    /// then only count the resolved pieces.
    pub resolved: bool,
}

/// Riemann–Roch on a genus-one curve: `χ = deg`.
pub fn chi(b: &(impl Into<Resolved> + Clone)) -> i64 {
    b.clone().into().degree()
}

pub fn h0h1(b: &(impl Into<Resolved> + Clone)) -> CohomologyReport {
    let b: Resolved = b.clone().into();
    let mut report = CohomologyReport {
        h0: 0,
        h1: 0,
        chi: b.degree(),
        resolved: true,
    };
    for s in b.exact_part().summands() {
        let d = s.degree();
        if d > 0 {
            report.h0 += d;
        } else if d < 0 {
            report.h1 -= d;
        } else if s.is_unipotent() {
            report.h0 += 1;
            report.h1 += 1;
        }
    }
    for blk in b.opaque_blocks() {
        if blk.degree > 0 {
            report.h0 += blk.degree;
        } else if blk.degree < 0 {
            report.h1 -= blk.degree;
        } else {
            report.resolved = false;
        }
    }
    report
}

/// `h⁰(End E) = h¹(End E) = gcd(r, d)` for an indecomposable `E` of type `(r, d)`.
pub fn h0_end_indec(rank: i64, degree: i64) -> i64 {
    assert!(rank >= 1, "rank must be positive");
    rank.gcd(&degree)
}

/// `h⁰(Hom(a, b))` for indecomposables, from slopes and twists alone.
pub fn h0_hom(a: &Indecomposable, b: &Indecomposable) -> i64 {
    let (ma, mb) = (a.slope(), b.slope());
    if mb > ma {
        a.rank() * b.degree() - b.rank() * a.degree()
    } else if mb < ma {
        0
    } else if a.twist() == b.twist() {
        // same slope: both are E₀ ⊗ F_h ⊗ t with the same E₀; twists agree mod r'-torsion
        a.multiplicity().min(b.multiplicity())
    } else {
        0
    }
}

/// `h⁰(End E)` summed over pairs of summands; never needs the rule table.
pub fn h0_end(b: &Bundle) -> i64 {
    let s = b.summands();
    s.iter().map(|x| s.iter().map(|y| h0_hom(x, y)).sum::<i64>()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Generation {
    Yes,
    No,
    Unresolved,
}

/// Sufficient test only: every summand of slope `> 1` is globally generated,
/// and nothing of slope `≤ 0` is (except the zero bundle).
pub fn is_globally_generated(b: &Bundle) -> Generation {
    let slopes: Vec<_> = b.summands().iter().map(Indecomposable::slope).collect();
    if slopes.iter().any(|m| *m <= num_rational::Rational64::zero()) {
        Generation::No
    } else if slopes.iter().all(|m| *m > num_rational::Rational64::from(1)) {
        Generation::Yes
    } else {
        Generation::Unresolved
    }
}
