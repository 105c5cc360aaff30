//! Dimension count for pairs `(E, F)` of rank 3 and 2 with `det E ≅ det F`
//! of degree `e`, attached to quadruple covers branched in `n = 2e` points.
//!
//! A pair type fixes the decomposition of `E` and `F` into indecomposables
//! and a set of linear relations among their twists. Twists live in
//! `G = Z^k ⊕ (Z/2)² ⊕ Z/3`, one free generator per summand plus the
//! constants `eta1, eta2, tau`; the generic member of a type lives in the
//! quotient of `G` by the determinant relation and the declared relations.
//! The count is
//!
//! `covering = moduli(E, F) + h⁰(F̌ ⊗ S²E) − h⁰(End E) − h⁰(End F) + 1`
//!
//! and a type is accepted when it reaches `n`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_rational::Rational64;
use num_traits::Signed;
use serde::Serialize;
use thiserror::Error;

use crate::bundle::{dual, sym2, tensor, Bundle, Resolved};
use crate::cohomology::{h0_end, h0h1};
use crate::intmat::IntMat;
use crate::picard::{AbGroup, GroupElem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModuliError {
    #[error("degree e must be at least 1, got {0}")]
    NonPositiveDegree(i64),
    #[error("branch count n = {0} is odd; covers of an elliptic curve have n = 2e")]
    OddBranchCount(i64),
    #[error("E must have rank 3 and F rank 2 (got {0} and {1})")]
    BadRanks(i64, i64),
    #[error("degrees of E and F must both equal e = {e} (got {de} and {df})")]
    BadDegrees { e: i64, de: i64, df: i64 },
    #[error("relation has {got} coefficients, expected {expected}")]
    BadRelation { expected: usize, got: usize },
    #[error("iso classes may only join summands of the same side, rank and degree")]
    BadIsoPattern,
    #[error("relations are inconsistent: {0}")]
    Inconsistent(String),
    #[error("cohomology of F^ (x) S2 E is unresolved at slope zero")]
    Unresolved,
}

/// `n = 2e`; odd `n` cannot occur.
pub fn degree_from_branch_count(n: i64) -> Result<i64, ModuliError> {
    if n % 2 != 0 {
        return Err(ModuliError::OddBranchCount(n));
    }
    if n < 2 {
        return Err(ModuliError::NonPositiveDegree(n / 2));
    }
    Ok(n / 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Summand {
    pub rank: i64,
    pub degree: i64,
}

impl Summand {
    pub fn new(rank: i64, degree: i64) -> Self {
        Summand { rank, degree }
    }

    fn slope(&self) -> Rational64 {
        Rational64::new(self.degree, self.rank)
    }
}

impl Serialize for Summand {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.rank, self.degree].serialize(s)
    }
}

const TORSION_ORDERS: [i64; 3] = [2, 2, 3];
const CONSTANT_NAMES: [&str; 3] = ["eta1", "eta2", "tau"];

/// A decomposition type of a pair `(E, F)`.
///
/// Generators are ordered `E1, …, F1, …`; E summands are sorted by slope
/// descending (rank ascending on ties), F summands by degree descending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairType {
    e: i64,
    e_summands: Vec<Summand>,
    f_summands: Vec<Summand>,
    iso: Vec<usize>,
    relations: Vec<Vec<i64>>,
}

fn sort_summands(v: &mut [Summand]) {
    v.sort_by(|a, b| b.slope().cmp(&a.slope()).then(a.rank.cmp(&b.rank)));
}

impl PairType {
    /// All summands pairwise non-isomorphic, no relations beyond the determinant.
    pub fn new(e: i64, mut e_summands: Vec<Summand>, mut f_summands: Vec<Summand>) -> Result<Self, ModuliError> {
        if e < 1 {
            return Err(ModuliError::NonPositiveDegree(e));
        }
        let re: i64 = e_summands.iter().map(|s| s.rank).sum();
        let rf: i64 = f_summands.iter().map(|s| s.rank).sum();
        if re != 3 || rf != 2 || e_summands.iter().chain(&f_summands).any(|s| s.rank < 1) {
            return Err(ModuliError::BadRanks(re, rf));
        }
        let de: i64 = e_summands.iter().map(|s| s.degree).sum();
        let df: i64 = f_summands.iter().map(|s| s.degree).sum();
        if de != e || df != e {
            return Err(ModuliError::BadDegrees { e, de, df });
        }
        sort_summands(&mut e_summands);
        sort_summands(&mut f_summands);
        let k = e_summands.len() + f_summands.len();
        Ok(PairType {
            e,
            e_summands,
            f_summands,
            iso: (0..k).collect(),
            relations: Vec::new(),
        })
    }

    /// Declares summands isomorphic: `classes[i]` labels generator `i`.
    pub fn with_iso(mut self, classes: Vec<usize>) -> Result<Self, ModuliError> {
        if classes.len() != self.generator_count() {
            return Err(ModuliError::BadIsoPattern);
        }
        let ne = self.e_summands.len();
        for i in 0..classes.len() {
            for j in 0..i {
                if classes[i] == classes[j]
                    && ((i < ne) != (j < ne) || self.summand(i) != self.summand(j))
                {
                    return Err(ModuliError::BadIsoPattern);
                }
            }
        }
        self.iso = classes;
        Ok(self)
    }

    /// Adds the relation `Σ coeffs[i]·gen_i + eta[0]·eta1 + eta[1]·eta2 + tau·tau = 0`.
    pub fn with_relation(mut self, coeffs: Vec<i64>, eta: [i64; 2], tau: i64) -> Result<Self, ModuliError> {
        let k = self.generator_count();
        if coeffs.len() != k {
            return Err(ModuliError::BadRelation {
                expected: k,
                got: coeffs.len(),
            });
        }
        let mut v = coeffs;
        v.extend([eta[0], eta[1], tau]);
        self.relations.push(normalize_relation(v, k));
        Ok(self)
    }

    fn with_raw_relations(&self, extra: &[Vec<i64>]) -> Self {
        let mut t = self.clone();
        let k = t.generator_count();
        t.relations
            .extend(extra.iter().map(|v| normalize_relation(v.clone(), k)));
        t
    }

    pub fn e(&self) -> i64 {
        self.e
    }

    pub fn e_summands(&self) -> &[Summand] {
        &self.e_summands
    }

    pub fn f_summands(&self) -> &[Summand] {
        &self.f_summands
    }

    pub fn iso_classes(&self) -> &[usize] {
        &self.iso
    }

    /// Declared relations as coefficient vectors over `(gens…, eta1, eta2, tau)`.
    pub fn relations(&self) -> &[Vec<i64>] {
        &self.relations
    }

    pub fn generator_count(&self) -> usize {
        self.e_summands.len() + self.f_summands.len()
    }

    fn summand(&self, i: usize) -> Summand {
        let ne = self.e_summands.len();
        if i < ne {
            self.e_summands[i]
        } else {
            self.f_summands[i - ne]
        }
    }

    fn generator_names(&self) -> Vec<String> {
        let ne = self.e_summands.len();
        (0..self.generator_count())
            .map(|i| {
                if i < ne {
                    format!("E{}", i + 1)
                } else {
                    format!("F{}", i - ne + 1)
                }
            })
            .collect()
    }

    fn iso_relations(&self) -> Vec<Vec<i64>> {
        let k = self.generator_count();
        let mut out = Vec::new();
        for i in 0..k {
            if let Some(j) = (0..i).find(|&j| self.iso[j] == self.iso[i]) {
                let mut v = vec![0; k + 3];
                v[j] = 1;
                v[i] = -1;
                out.push(v);
            }
        }
        out
    }

    fn det_relation(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self
            .e_summands
            .iter()
            .map(|s| s.rank)
            .chain(self.f_summands.iter().map(|s| -s.rank))
            .collect();
        v.extend([0, 0, 0]);
        v
    }

    /// Iso and declared relations, in display form; the determinant relation is implicit.
    pub fn relation_strings(&self) -> Vec<String> {
        let names = self.generator_names();
        self.iso_relations()
            .iter()
            .chain(&self.relations)
            .map(|v| format_relation(v, &names))
            .collect()
    }

    fn symbolic_group(&self) -> Arc<AbGroup> {
        AbGroup::standard_named(self.generator_names())
    }
}

impl fmt::Display for PairType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shape = |v: &[Summand]| {
            v.iter()
                .map(|s| format!("({}, {})", s.rank, s.degree))
                .collect::<Vec<_>>()
                .join(" + ")
        };
        write!(
            f,
            "e={} E={} F={}",
            self.e,
            shape(&self.e_summands),
            shape(&self.f_summands)
        )?;
        let rels = self.relation_strings();
        if !rels.is_empty() {
            write!(f, " [{}]", rels.join("; "))?;
        }
        Ok(())
    }
}

/// Reduces constants and fixes the sign so the first nonzero generator
/// coefficient is positive.
fn normalize_relation(mut v: Vec<i64>, k: usize) -> Vec<i64> {
    if v[..k].iter().find(|&&c| c != 0).is_some_and(|&c| c < 0) {
        v.iter_mut().for_each(|c| *c = -*c);
    }
    for (c, n) in v[k..].iter_mut().zip(TORSION_ORDERS) {
        *c = c.rem_euclid(n);
    }
    v
}

fn format_relation(v: &[i64], names: &[String]) -> String {
    let k = names.len();
    let mut terms: Vec<(i64, &str)> = names.iter().enumerate().map(|(i, n)| (v[i], n.as_str())).collect();
    terms.extend(CONSTANT_NAMES.iter().enumerate().map(|(i, n)| (v[k + i], *n)));
    let mut out = String::new();
    for (c, name) in terms.into_iter().filter(|(c, _)| *c != 0) {
        let mag = if c.abs() == 1 {
            name.to_string()
        } else {
            format!("{}*{name}", c.abs())
        };
        if out.is_empty() {
            out = if c < 0 { format!("-{mag}") } else { mag };
        } else {
            out.push_str(if c < 0 { " - " } else { " + " });
            out.push_str(&mag);
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out.push_str(" = 0");
    out
}

/// `G / (relations)` computed through a Smith form.
struct Quotient {
    group: Arc<AbGroup>,
    v: IntMat,
    /// `(column of V, modulus)` for every surviving coordinate; modulus 0 is free.
    comps: Vec<(usize, i64)>,
}

impl Quotient {
    fn new(k: usize, relations: &[Vec<i64>]) -> Self {
        let n = k + 3;
        let mut rows: Vec<Vec<i64>> = relations.to_vec();
        for (i, ord) in TORSION_ORDERS.iter().enumerate() {
            let mut r = vec![0; n];
            r[k + i] = *ord;
            rows.push(r);
        }
        let s = IntMat::from_rows(&rows).smith();
        let mut diag = s.diagonal.clone();
        diag.resize(n, 0);
        let mut comps: Vec<(usize, i64)> = diag
            .iter()
            .enumerate()
            .filter(|(_, &d)| d != 1)
            .map(|(i, &d)| (i, d))
            .collect();
        // free coordinates first, to match the group's layout
        comps.sort_by_key(|&(i, d)| (d != 0, i));
        let free_rank = comps.iter().filter(|c| c.1 == 0).count();
        let orders: Vec<i64> = comps.iter().filter(|c| c.1 != 0).map(|c| c.1).collect();
        let raw = |x: &[i64]| -> (Vec<i64>, Vec<i64>) {
            let y: Vec<i64> = comps
                .iter()
                .map(|&(col, d)| {
                    let val: i64 = (0..n).map(|j| x[j] * s.v[(j, col)]).sum();
                    if d == 0 {
                        val
                    } else {
                        val.rem_euclid(d)
                    }
                })
                .collect();
            (y[..free_rank].to_vec(), y[free_rank..].to_vec())
        };
        let unit = |i: usize| {
            let mut x = vec![0; n];
            x[k + i] = 1;
            x
        };
        let eta1 = raw(&unit(0));
        let eta2 = raw(&unit(1));
        let tau = raw(&unit(2));
        let group = AbGroup::with_constants(free_rank, orders, Some([eta1, eta2]), Some(tau));
        Quotient { group, v: s.v, comps }
    }

    fn map(&self, x: &[i64]) -> GroupElem {
        let n = self.v.rows();
        let mut free = Vec::new();
        let mut torsion = Vec::new();
        for &(col, d) in &self.comps {
            let val: i64 = (0..n).map(|j| x[j] * self.v[(j, col)]).sum();
            if d == 0 {
                free.push(val);
            } else {
                torsion.push(val);
            }
        }
        self.group.elem(free, torsion).expect("layout matches the quotient group")
    }

    fn generator(&self, k: usize, i: usize) -> GroupElem {
        let mut x = vec![0; k + 3];
        x[i] = 1;
        self.map(&x)
    }
}

fn elem_vector(x: &GroupElem) -> Vec<i64> {
    let mut v = x.free_part().to_vec();
    v.extend_from_slice(x.torsion_part());
    v
}

/// The generic member of a type: its summands as bundles over the quotient group.
struct Realized {
    quotient: Quotient,
    e: Vec<Bundle>,
    f: Vec<Bundle>,
}

impl Realized {
    fn e_total(&self) -> Bundle {
        sum_all(&self.e, &self.quotient.group)
    }

    fn f_total(&self) -> Bundle {
        sum_all(&self.f, &self.quotient.group)
    }

    fn e_sub(&self, idx: &[usize]) -> Bundle {
        let parts: Vec<Bundle> = idx.iter().map(|&i| self.e[i].clone()).collect();
        sum_all(&parts, &self.quotient.group)
    }
}

fn sum_all(parts: &[Bundle], group: &Arc<AbGroup>) -> Bundle {
    parts.iter().fold(Bundle::zero(group), |acc, b| acc.direct_sum(b))
}

fn all_relations(t: &PairType) -> Vec<Vec<i64>> {
    let mut rels = vec![t.det_relation()];
    rels.extend(t.iso_relations());
    rels.extend(t.relations.iter().cloned());
    rels
}

fn realize(t: &PairType) -> Result<Realized, ModuliError> {
    let k = t.generator_count();
    let quotient = Quotient::new(k, &all_relations(t));
    check_consistency(t, &quotient)?;
    let ne = t.e_summands.len();
    let build = |i: usize, s: &Summand| {
        Bundle::indecomposable(s.rank, s.degree, quotient.generator(k, i)).expect("positive rank")
    };
    let e = t.e_summands.iter().enumerate().map(|(i, s)| build(i, s)).collect();
    let f = t
        .f_summands
        .iter()
        .enumerate()
        .map(|(j, s)| build(ne + j, s))
        .collect();
    Ok(Realized { quotient, e, f })
}

fn check_consistency(t: &PairType, q: &Quotient) -> Result<(), ModuliError> {
    let k = t.generator_count();
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..3 {
                if (a, b, c) == (0, 0, 0) {
                    continue;
                }
                let mut x = vec![0; k + 3];
                x[k] = a;
                x[k + 1] = b;
                x[k + 2] = c;
                if q.map(&x).is_zero() {
                    let names: Vec<String> = (0..k).map(|_| String::new()).collect();
                    let rel = format_relation(&x, &names);
                    return Err(ModuliError::Inconsistent(format!(
                        "forces the nonzero torsion point {} to vanish",
                        rel.trim_end_matches(" = 0")
                    )));
                }
            }
        }
    }
    let ne = t.e_summands.len();
    for i in 0..k {
        for j in 0..i {
            let same_kind = (i < ne) == (j < ne) && t.summand(i) == t.summand(j);
            if same_kind && t.iso[i] != t.iso[j] {
                let mut x = vec![0; k + 3];
                x[i] = 1;
                x[j] = -1;
                if q.map(&x).is_zero() {
                    let names = t.generator_names();
                    return Err(ModuliError::Inconsistent(format!(
                        "forces {} and {} to coincide",
                        names[j], names[i]
                    )));
                }
            }
        }
    }
    Ok(())
}

/// `F̌ ⊗ S²E` for the generic member of the type, twists in the quotient group.
pub fn symbolic_pair_bundle(t: &PairType) -> Result<Resolved, ModuliError> {
    let r = realize(t)?;
    Ok(fs2(&r.f_total(), &r.e_total()))
}

fn fs2(f: &Bundle, b: &Bundle) -> Resolved {
    Resolved::from(dual(f)).tensor(&sym2(b))
}

fn h0(res: &Resolved) -> Result<i64, ModuliError> {
    let r = h0h1(res);
    if r.resolved {
        Ok(r.h0)
    } else {
        Err(ModuliError::Unresolved)
    }
}

/// `(h⁰, h¹)` of `F̌ ⊗ S²E` for the generic member.
pub fn h0_generic(t: &PairType) -> Result<(i64, i64), ModuliError> {
    let r = h0h1(&symbolic_pair_bundle(t)?);
    if !r.resolved {
        return Err(ModuliError::Unresolved);
    }
    Ok((r.h0, r.h1))
}

/// Number of free parameters of the twists after all relations.
pub fn moduli_dim(t: &PairType) -> Result<i64, ModuliError> {
    let r = realize(t)?;
    Ok(r.quotient.group.free_rank() as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Accepted,
    InsufficientModuli,
    /// The count exceeds `n`; never expected, kept visible rather than folded in.
    ExcessModuli,
    ExcludedReducible,
    ExcludedThroughDoubleCover,
    ExcludedNoMonomorphism,
    Unresolved,
}

impl Status {
    pub fn is_excluded(self) -> bool {
        matches!(
            self,
            Status::ExcludedReducible | Status::ExcludedThroughDoubleCover | Status::ExcludedNoMonomorphism
        )
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variants serialize");
        write!(f, "{}", s.as_str().unwrap_or("?"))
    }
}

fn index_subsets(len: usize) -> impl Iterator<Item = Vec<usize>> {
    (1u32..(1 << len)).map(move |mask| (0..len).filter(|i| mask & (1 << i) != 0).collect())
}

fn exclusion_in(t: &PairType, r: &Realized) -> Result<Option<Status>, ModuliError> {
    let f = r.f_total();
    let ne = t.e_summands.len();
    let proper: Vec<Vec<usize>> = index_subsets(ne)
        .filter(|idx| idx.iter().map(|&i| t.e_summands[i].rank).sum::<i64>() < 3)
        .collect();
    // every conic contains the sub-bundle P(B) for a quotient E → B
    for idx in &proper {
        if h0(&fs2(&f, &r.e_sub(idx)))? == 0 {
            return Ok(Some(Status::ExcludedReducible));
        }
    }
    if t.f_summands.len() == 2 {
        let e_total = r.e_total();
        // a member of the pencil vanishes identically
        for l in &r.f {
            if h0(&fs2(l, &e_total))? == 0 {
                return Ok(Some(Status::ExcludedNoMonomorphism));
            }
        }
        // a member of the pencil splits off P(E → E/B) with B of rank 1
        for l in &r.f {
            for idx in proper.iter().filter(|idx| idx.iter().map(|&i| t.e_summands[i].rank).sum::<i64>() == 2) {
                if h0(&fs2(l, &r.e_sub(idx)))? == 0 {
                    return Ok(Some(Status::ExcludedReducible));
                }
            }
        }
        // a member of the pencil has no monomial in a line summand: the cover factors through a double cover
        for l in &r.f {
            for (c, s) in t.e_summands.iter().enumerate() {
                if s.rank != 1 {
                    continue;
                }
                let hom = Resolved::from(dual(l))
                    .tensor(&Resolved::from(r.e[c].clone()))
                    .tensor(&Resolved::from(e_total.clone()));
                if h0(&hom)? == 0 {
                    return Ok(Some(Status::ExcludedThroughDoubleCover));
                }
            }
        }
    }
    Ok(None)
}

pub fn exclusion_check(t: &PairType) -> Result<Option<Status>, ModuliError> {
    let r = realize(t)?;
    exclusion_in(t, &r)
}

/// Groups of consecutive E summands of equal slope.
fn slope_blocks(t: &PairType) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for (i, s) in t.e_summands.iter().enumerate() {
        match blocks.last_mut() {
            Some(b) if t.e_summands[b[0]].slope() == s.slope() => b.push(i),
            _ => blocks.push(vec![i]),
        }
    }
    blocks
}

fn block_slope(t: &PairType, b: &[usize]) -> Rational64 {
    t.e_summands[b[0]].slope()
}

fn block_rank(t: &PairType, b: &[usize]) -> i64 {
    b.iter().map(|&i| t.e_summands[i].rank).sum()
}

fn case_tag(t: &PairType, r: &Realized) -> Result<String, ModuliError> {
    let e = Rational64::from(t.e);
    let f_semistable = t.f_summands.len() == 1 || t.f_summands[0].degree == t.f_summands[1].degree;
    let blocks = slope_blocks(t);
    let f = r.f_total();
    let sign_tag = |m: Rational64, h0_zero: bool, pos: &str, neg: &str, zero: &str| -> String {
        if m > Rational64::from(0) || (m == Rational64::from(0) && h0_zero && pos != neg) {
            pos.to_string()
        } else if m < Rational64::from(0) || (m == Rational64::from(0) && h0_zero) {
            neg.to_string()
        } else {
            zero.to_string()
        }
    };
    let tag = if f_semistable {
        let mu_f = e / 2;
        match blocks.len() {
            1 => "1".to_string(),
            2 => {
                let low = &blocks[1];
                let m = -mu_f + block_slope(t, low) * 2;
                let h = h0(&fs2(&f, &r.e_sub(low)))?;
                let zero = if t.f_summands.len() == 1 { "2C'" } else { "2C''" };
                sign_tag(m, h == 0, "2A", "2B", zero)
            }
            _ => {
                let low = &blocks[2];
                let m = -mu_f + block_slope(t, low) * 2;
                let h = h0(&fs2(&f, &r.e_sub(low)))?;
                sign_tag(m, h == 0, "3A", "3B", "3C")
            }
        }
    } else {
        let lambda1 = Rational64::from(t.f_summands[0].degree);
        let lambda2 = Rational64::from(t.f_summands[1].degree);
        let (l1, l2) = (&r.f[0], &r.f[1]);
        match blocks.len() {
            1 => {
                let m = -lambda1 + e * 2 / 3;
                let h = h0(&fs2(l1, &r.e_total()))?;
                // 4B covers both negative slope and vanishing sections at slope zero
                if m > Rational64::from(0) {
                    "4A".to_string()
                } else if m < Rational64::from(0) || h == 0 {
                    "4B".to_string()
                } else {
                    "4C".to_string()
                }
            }
            2 if block_rank(t, &blocks[0]) == 2 => {
                let mu1 = block_slope(t, &blocks[0]);
                let mu2 = block_slope(t, &blocks[1]);
                let x = -lambda2 + mu2 * 2;
                let y = -lambda1 + mu1 + mu2;
                let zero = Rational64::from(0);
                let e2 = r.e_sub(&blocks[1]);
                let e1 = r.e_sub(&blocks[0]);
                let x_ok = x > zero || (x == zero && h0(&fs2(l2, &e2))? >= 1);
                let y_ok = y > zero || {
                    let hom = Resolved::from(dual(l1)).tensor(&tensor(&e1, &e2));
                    y == zero && h0(&hom)? >= 1
                };
                match (x_ok, y_ok, x > zero, y > zero) {
                    (true, true, true, true) => "5A",
                    (true, true, false, true) => "5B",
                    (true, true, true, false) => "5C",
                    (true, true, false, false) => "5D",
                    _ => "5",
                }
                .to_string()
            }
            2 => "6".to_string(),
            _ => "7".to_string(),
        }
    };
    Ok(tag)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub pair: PairType,
    pub case_tag: String,
    pub status: Status,
    pub moduli_of_pair: i64,
    pub h0_fs2e: i64,
    pub h0_end_e: i64,
    pub h0_end_f: i64,
    pub covering_moduli: i64,
}

/// One row of the JSON report, keys in a fixed order.
#[derive(Debug, Clone, Serialize)]
pub struct VerdictRecord {
    pub e: i64,
    pub case_tag: String,
    #[serde(rename = "E_shape")]
    pub e_shape: Vec<Summand>,
    #[serde(rename = "F_shape")]
    pub f_shape: Vec<Summand>,
    pub relations: Vec<String>,
    pub status: Status,
    pub moduli_of_pair: i64,
    #[serde(rename = "h0_FS2E")]
    pub h0_fs2e: i64,
    #[serde(rename = "h0_EndE")]
    pub h0_end_e: i64,
    #[serde(rename = "h0_EndF")]
    pub h0_end_f: i64,
    pub covering_moduli: i64,
}

impl Verdict {
    pub fn record(&self) -> VerdictRecord {
        VerdictRecord {
            e: self.pair.e,
            case_tag: self.case_tag.clone(),
            e_shape: self.pair.e_summands.clone(),
            f_shape: self.pair.f_summands.clone(),
            relations: self.pair.relation_strings(),
            status: self.status,
            moduli_of_pair: self.moduli_of_pair,
            h0_fs2e: self.h0_fs2e,
            h0_end_e: self.h0_end_e,
            h0_end_f: self.h0_end_f,
            covering_moduli: self.covering_moduli,
        }
    }
}

pub fn analyze(t: &PairType) -> Result<Verdict, ModuliError> {
    let r = realize(t)?;
    let e_total = r.e_total();
    let f_total = r.f_total();
    let moduli = r.quotient.group.free_rank() as i64;
    let h0_end_e = h0_end(&e_total);
    let h0_end_f = h0_end(&f_total);
    let report = h0h1(&fs2(&f_total, &e_total));
    let h0_fs2e = report.h0;
    let covering = moduli + h0_fs2e - h0_end_e - h0_end_f + 1;
    let (status, case_tag) = match (exclusion_in(t, &r), case_tag(t, &r)) {
        (Err(ModuliError::Unresolved), _) | (_, Err(ModuliError::Unresolved)) => {
            (Status::Unresolved, "?".to_string())
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
        (Ok(Some(excluded)), Ok(tag)) => (excluded, tag),
        (Ok(None), Ok(tag)) => {
            let n = 2 * t.e;
            let status = if !report.resolved {
                Status::Unresolved
            } else if covering == n {
                Status::Accepted
            } else if covering < n {
                Status::InsufficientModuli
            } else {
                Status::ExcessModuli
            };
            (status, tag)
        }
    };
    Ok(Verdict {
        pair: t.clone(),
        case_tag,
        status,
        moduli_of_pair: moduli,
        h0_fs2e,
        h0_end_e,
        h0_end_f,
        covering_moduli: covering,
    })
}

/// The unique type the dimension count singles out for each `e`.
pub fn expected_accepted_shape(e: i64) -> (Vec<Summand>, Vec<Summand>) {
    let es = if e % 3 != 0 {
        vec![Summand::new(3, e)]
    } else {
        vec![Summand::new(1, e / 3); 3]
    };
    let fs = if e % 2 != 0 {
        vec![Summand::new(2, e)]
    } else {
        vec![Summand::new(1, e / 2); 2]
    };
    (es, fs)
}

/// Set partitions of `0..len` as canonical class labels (restricted growth strings).
fn set_partitions(len: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, len: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == len {
            out.push(prefix.clone());
            return;
        }
        let next = prefix.iter().max().map_or(0, |m| m + 1);
        for c in 0..=next {
            prefix.push(c);
            grow(prefix, len, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), len, &mut out);
    out
}

/// Iso patterns up to relabelling of interchangeable summands: within each
/// run of equal summands only the block sizes matter.
fn iso_patterns(t: &PairType) -> Vec<Vec<usize>> {
    let k = t.generator_count();
    let ne = t.e_summands.len();
    let mut runs: Vec<Vec<usize>> = Vec::new();
    for i in 0..k {
        match runs.last_mut() {
            Some(run) if (run[0] < ne) == (i < ne) && t.summand(run[0]) == t.summand(i) => run.push(i),
            _ => runs.push(vec![i]),
        }
    }
    let per_run: Vec<Vec<Vec<usize>>> = runs
        .iter()
        .map(|run| {
            let mut seen = BTreeSet::new();
            set_partitions(run.len())
                .into_iter()
                .filter(|p| {
                    // keep one labelling per multiset of block sizes, blocks in decreasing size
                    let mut sizes = vec![0usize; run.len()];
                    for &c in p {
                        sizes[c] += 1;
                    }
                    let sizes: Vec<usize> = sizes.into_iter().filter(|&s| s > 0).collect();
                    let sorted_desc = sizes.windows(2).all(|w| w[0] >= w[1]);
                    let contiguous = p.windows(2).all(|w| w[1] >= w[0]);
                    sorted_desc && contiguous && seen.insert(sizes)
                })
                .collect()
        })
        .collect();
    let mut out = vec![vec![0usize; k]];
    let mut offset = 0;
    for (run, parts) in runs.iter().zip(&per_run) {
        let mut next = Vec::new();
        for base in &out {
            for p in parts {
                let mut lab = base.clone();
                for (pos, &g) in run.iter().enumerate() {
                    lab[g] = offset + p[pos];
                }
                next.push(lab);
            }
        }
        out = next;
        offset += run.len();
    }
    out
}

/// Twists of the slope-zero summands of `F̌ ⊗ S²E`, as vectors over `G`.
fn slope_zero_twists(t: &PairType) -> Vec<Vec<i64>> {
    let g = t.symbolic_group();
    let k = t.generator_count();
    let ne = t.e_summands.len();
    let build = |i: usize, s: &Summand| Bundle::indecomposable(s.rank, s.degree, g.generator(i)).expect("positive rank");
    let e = t
        .e_summands
        .iter()
        .enumerate()
        .map(|(i, s)| build(i, s))
        .fold(Bundle::zero(&g), |a, b| a.direct_sum(&b));
    let f = t
        .f_summands
        .iter()
        .enumerate()
        .map(|(j, s)| build(ne + j, s))
        .fold(Bundle::zero(&g), |a, b| a.direct_sum(&b));
    let mut out: Vec<Vec<i64>> = Vec::new();
    for s in fs2(&f, &e).exact_part().summands() {
        if s.degree() == 0 {
            let v = normalize_relation(elem_vector(s.twist()), k);
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out
}

/// All consistent relation strata obtained by trivializing slope-zero summands.
/// Each stratum is closed: no further candidate becomes trivial in it.
fn strata(t: &PairType) -> Vec<PairType> {
    let k = t.generator_count();
    let base = all_relations(t);
    let base_q = Quotient::new(k, &base);
    let cands: Vec<Vec<i64>> = slope_zero_twists(t)
        .into_iter()
        .filter(|c| !base_q.map(c).is_zero())
        .collect();
    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    walk(t, &base, &cands, 0, &mut chosen, &mut found);
    found
        .into_iter()
        .map(|idx| {
            let rels: Vec<Vec<i64>> = idx.iter().map(|&i| cands[i].clone()).collect();
            t.with_raw_relations(&rels)
        })
        .collect()
}

fn walk(
    t: &PairType,
    base: &[Vec<i64>],
    cands: &[Vec<i64>],
    i: usize,
    chosen: &mut Vec<usize>,
    found: &mut Vec<Vec<usize>>,
) {
    let k = t.generator_count();
    let mut rels = base.to_vec();
    rels.extend(chosen.iter().map(|&c| cands[c].clone()));
    let q = Quotient::new(k, &rels);
    let consistent = check_consistency(t, &q).is_ok();
    if !consistent {
        return;
    }
    // a skipped candidate that is already trivial can never be restored
    if (0..i).any(|c| !chosen.contains(&c) && q.map(&cands[c]).is_zero()) {
        return;
    }
    if i == cands.len() {
        found.push(chosen.clone());
        return;
    }
    chosen.push(i);
    walk(t, base, cands, i + 1, chosen, found);
    chosen.pop();
    walk(t, base, cands, i + 1, chosen, found);
}

fn degrees_within(total: i64, parts: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    // non-increasing tuples of integers in [lo, hi] summing to total
    fn rec(left: i64, parts: usize, max: i64, lo: i64, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if parts == 0 {
            if left == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        let mut d = max;
        while d >= lo {
            prefix.push(d);
            rec(left - d, parts - 1, d, lo, prefix, out);
            prefix.pop();
            d -= 1;
        }
    }
    let mut out = Vec::new();
    rec(total, parts, hi, lo, &mut Vec::new(), &mut out);
    out
}

/// All decomposition shapes of `(E, F)` with every summand slope within
/// `window` of the balanced slopes `e/3` and `e/2`.
fn shapes(e: i64, window: i64) -> Vec<(Vec<Summand>, Vec<Summand>)> {
    let within = |s: &Summand, center: Rational64| {
        let d = s.slope() - center;
        d.abs() <= Rational64::from(window)
    };
    let ce = Rational64::new(e, 3);
    let cf = Rational64::new(e, 2);
    let span = |center: Rational64, rank: i64| {
        let lo = ((center - window) * rank).floor().to_integer();
        let hi = ((center + window) * rank).ceil().to_integer();
        (lo, hi)
    };
    let mut e_shapes: Vec<Vec<Summand>> = vec![vec![Summand::new(3, e)]];
    let (lo2, hi2) = span(ce, 2);
    for a in lo2..=hi2 {
        let pair = vec![Summand::new(2, a), Summand::new(1, e - a)];
        if pair.iter().all(|s| within(s, ce)) {
            e_shapes.push(pair);
        }
    }
    let (lo1, hi1) = span(ce, 1);
    for ds in degrees_within(e, 3, lo1, hi1) {
        let lines: Vec<Summand> = ds.iter().map(|&d| Summand::new(1, d)).collect();
        if lines.iter().all(|s| within(s, ce)) {
            e_shapes.push(lines);
        }
    }
    let mut f_shapes: Vec<Vec<Summand>> = vec![vec![Summand::new(2, e)]];
    let (lo, hi) = span(cf, 1);
    for ds in degrees_within(e, 2, lo, hi) {
        let lines: Vec<Summand> = ds.iter().map(|&d| Summand::new(1, d)).collect();
        if lines.iter().all(|s| within(s, cf)) {
            f_shapes.push(lines);
        }
    }
    let mut out = Vec::new();
    for es in &e_shapes {
        for fs in &f_shapes {
            out.push((es.clone(), fs.clone()));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct ModuliReport {
    pub e: i64,
    pub window: i64,
    pub verdicts: Vec<Verdict>,
}

impl ModuliReport {
    pub fn accepted(&self) -> Vec<&Verdict> {
        self.verdicts.iter().filter(|v| v.status == Status::Accepted).collect()
    }

    pub fn records(&self) -> Vec<VerdictRecord> {
        self.verdicts.iter().map(Verdict::record).collect()
    }
}

/// Every type in the window, including iso patterns and trivialization strata.
pub fn enumerate_types(e: i64, window: i64) -> Result<Vec<PairType>, ModuliError> {
    if e < 1 {
        return Err(ModuliError::NonPositiveDegree(e));
    }
    let mut out = Vec::new();
    for (es, fs) in shapes(e, window.max(0)) {
        let base = PairType::new(e, es, fs)?;
        for iso in iso_patterns(&base) {
            let t = base.clone().with_iso(iso)?;
            out.extend(strata(&t));
        }
    }
    Ok(out)
}

pub fn enumerate_and_verify(e: i64, window: i64) -> Result<ModuliReport, ModuliError> {
    let types = enumerate_types(e, window)?;
    let verdicts = types.iter().map(analyze).collect::<Result<Vec<_>, _>>()?;
    Ok(ModuliReport { e, window, verdicts })
}
