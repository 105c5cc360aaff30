//! Vector bundles on an elliptic curve as formal sums of indecomposables.
//!
//! An indecomposable of rank `r` and degree `d` with `h = gcd(r, d)` is stored
//! as `(r, d, t)` and stands for `E₀(r/h, d/h) ⊗ F_h ⊗ t`, where `E₀(r', d')`
//! is the stable bundle with determinant `O(d'·y₀)` and `t ∈ Pic⁰`. Twisting
//! `E₀(r', d')` by an `r'`-torsion point gives an isomorphic bundle, so `t`
//! is kept reduced modulo `r'`-torsion.
//!
//! Products leave the closed rule table in two situations: two stable
//! factors of non-coprime rank other than `2, 2`, and symmetric or exterior
//! squares of stable bundles of rank at least 3. Those come back as opaque
//! semistable blocks that only remember rank and degree.

use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use num_rational::Rational64;
use thiserror::Error;

use crate::picard::{AbGroup, GroupElem, PicardClass};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BundleError {
    #[error("rank must be positive, got {0}")]
    NonPositiveRank(i64),
    #[error("expected an indecomposable bundle of rank 2, got {0}")]
    NotRank2Indecomposable(String),
    #[error("twist lives in a different group than the bundle")]
    GroupMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Indecomposable {
    rank: i64,
    degree: i64,
    twist: GroupElem,
}

impl Indecomposable {
    pub fn new(rank: i64, degree: i64, twist: GroupElem) -> Result<Self, BundleError> {
        if rank < 1 {
            return Err(BundleError::NonPositiveRank(rank));
        }
        let reduced = rank / rank.gcd(&degree);
        Ok(Indecomposable {
            rank,
            degree,
            twist: twist.reduce_mod_torsion(reduced),
        })
    }

    fn make(rank: i64, degree: i64, twist: GroupElem) -> Self {
        Self::new(rank, degree, twist).expect("rank is positive by construction")
    }

    pub fn rank(&self) -> i64 {
        self.rank
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn twist(&self) -> &GroupElem {
        &self.twist
    }

    pub fn slope(&self) -> Rational64 {
        Rational64::new(self.degree, self.rank)
    }

    /// `h = gcd(r, d)`, the multiplicity of the `F_h` factor.
    pub fn multiplicity(&self) -> i64 {
        self.rank.gcd(&self.degree)
    }

    /// `r' = r / h`, the rank of the stable factor.
    pub fn stable_rank(&self) -> i64 {
        self.rank / self.multiplicity()
    }

    fn stable_degree(&self) -> i64 {
        self.degree / self.multiplicity()
    }

    /// True for `F_r`: degree zero and trivial twist.
    pub fn is_unipotent(&self) -> bool {
        self.degree == 0 && self.twist.is_zero()
    }

    pub fn dual(&self) -> Self {
        Self::make(self.rank, -self.degree, self.twist.neg())
    }

    fn group(&self) -> &Arc<AbGroup> {
        self.twist.group()
    }
}

impl PartialOrd for Indecomposable {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Slope descending, then rank ascending, then twist.
impl Ord for Indecomposable {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .slope()
            .cmp(&self.slope())
            .then(self.rank.cmp(&other.rank))
            .then_with(|| self.twist.cmp(&other.twist))
    }
}

impl fmt::Display for Indecomposable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let twist = (!self.twist.is_zero()).then(|| format!("; {}", self.twist));
        let twist = twist.as_deref().unwrap_or("");
        if self.is_unipotent() {
            write!(f, "F({})", self.rank)
        } else if self.rank == 1 {
            write!(f, "L({}{twist})", self.degree)
        } else {
            write!(f, "I({}, {}{twist})", self.rank, self.degree)
        }
    }
}

/// A direct sum of indecomposables, kept in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bundle {
    group: Arc<AbGroup>,
    summands: Vec<Indecomposable>,
}

impl Bundle {
    pub fn zero(group: &Arc<AbGroup>) -> Self {
        Bundle {
            group: Arc::clone(group),
            summands: Vec::new(),
        }
    }

    pub fn from_summands(group: &Arc<AbGroup>, mut summands: Vec<Indecomposable>) -> Result<Self, BundleError> {
        if summands.iter().any(|s| !Arc::ptr_eq(s.group(), group) && **s.group() != **group) {
            return Err(BundleError::GroupMismatch);
        }
        summands.sort();
        Ok(Bundle {
            group: Arc::clone(group),
            summands,
        })
    }

    fn collect(group: &Arc<AbGroup>, summands: Vec<Indecomposable>) -> Self {
        Self::from_summands(group, summands).expect("summands share the bundle's group")
    }

    pub fn indecomposable(rank: i64, degree: i64, twist: GroupElem) -> Result<Self, BundleError> {
        let group = Arc::clone(twist.group());
        Ok(Self::collect(&group, vec![Indecomposable::new(rank, degree, twist)?]))
    }

    pub fn line(degree: i64, twist: GroupElem) -> Self {
        Self::indecomposable(1, degree, twist).expect("rank 1")
    }

    /// `F_r`, the unipotent indecomposable of rank `r`.
    pub fn unipotent(group: &Arc<AbGroup>, rank: i64) -> Result<Self, BundleError> {
        Self::indecomposable(rank, 0, group.zero())
    }

    pub fn group(&self) -> &Arc<AbGroup> {
        &self.group
    }

    pub fn summands(&self) -> &[Indecomposable] {
        &self.summands
    }

    pub fn is_zero(&self) -> bool {
        self.summands.is_empty()
    }

    pub fn rank(&self) -> i64 {
        self.summands.iter().map(|s| s.rank).sum()
    }

    pub fn degree(&self) -> i64 {
        self.summands.iter().map(|s| s.degree).sum()
    }

    pub fn direct_sum(&self, other: &Bundle) -> Bundle {
        let mut all = self.summands.clone();
        all.extend(other.summands.iter().cloned());
        Self::collect(&self.group, all)
    }

    /// Twists by a line bundle class (degree and `Pic⁰` part).
    pub fn twisted(&self, by: &PicardClass) -> Bundle {
        let line = Bundle::line(by.degree, by.cls.clone());
        tensor(self, &line)
            .into_bundle()
            .expect("tensoring with a line stays in the rule table")
    }
}

impl fmt::Display for Bundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.summands.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.summands.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Summands are reduced and sorted on construction, so this is a clone; it
/// exists so that callers can state intent.
pub fn canonical_form(b: &Bundle) -> Bundle {
    b.clone()
}

pub fn dual(b: &Bundle) -> Bundle {
    Bundle::collect(&b.group, b.summands.iter().map(Indecomposable::dual).collect())
}

/// `det E(r, d)_t = O(d·y₀) ⊗ t^r`.
pub fn det(b: &Bundle) -> PicardClass {
    let cls = b
        .summands
        .iter()
        .fold(b.group.zero(), |acc, s| &acc + &s.twist.scale(s.rank));
    PicardClass::new(b.degree(), cls)
}

/// A semistable block known only through rank and degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpaqueBlock {
    pub rank: i64,
    pub degree: i64,
}

impl OpaqueBlock {
    pub fn slope(&self) -> Rational64 {
        Rational64::new(self.degree, self.rank)
    }
}

/// Result of an operation that may leave the rule table: an exact part plus
/// opaque semistable blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolved {
    exact: Bundle,
    opaque: Vec<OpaqueBlock>,
}

impl Resolved {
    fn new(exact: Bundle, mut opaque: Vec<OpaqueBlock>) -> Self {
        opaque.sort_by(|a, b| b.slope().cmp(&a.slope()).then(a.rank.cmp(&b.rank)));
        Resolved { exact, opaque }
    }

    pub fn is_exact(&self) -> bool {
        self.opaque.is_empty()
    }

    pub fn bundle(&self) -> Option<&Bundle> {
        self.is_exact().then_some(&self.exact)
    }

    pub fn into_bundle(self) -> Option<Bundle> {
        self.is_exact().then_some(self.exact)
    }

    pub fn exact_part(&self) -> &Bundle {
        &self.exact
    }

    pub fn opaque_blocks(&self) -> &[OpaqueBlock] {
        &self.opaque
    }

    pub fn rank(&self) -> i64 {
        self.exact.rank() + self.opaque.iter().map(|b| b.rank).sum::<i64>()
    }

    pub fn degree(&self) -> i64 {
        self.exact.degree() + self.opaque.iter().map(|b| b.degree).sum::<i64>()
    }

    pub fn group(&self) -> &Arc<AbGroup> {
        self.exact.group()
    }

    pub fn direct_sum(&self, other: &Resolved) -> Resolved {
        let mut opaque = self.opaque.clone();
        opaque.extend_from_slice(&other.opaque);
        Resolved::new(self.exact.direct_sum(&other.exact), opaque)
    }

    pub fn dual(&self) -> Resolved {
        let opaque = self
            .opaque
            .iter()
            .map(|b| OpaqueBlock {
                rank: b.rank,
                degree: -b.degree,
            })
            .collect();
        Resolved::new(dual(&self.exact), opaque)
    }

    pub fn tensor(&self, other: &Resolved) -> Resolved {
        let mut parts = Parts::new(self.group());
        for a in &self.exact.summands {
            for b in &other.exact.summands {
                parts.absorb(tensor_indec(a, b));
            }
        }
        let cross = |x: &Resolved, blocks: &[OpaqueBlock]| -> Vec<OpaqueBlock> {
            let mut out = Vec::new();
            for blk in blocks {
                for s in &x.exact.summands {
                    out.push(opaque_product(s.rank, s.degree, blk.rank, blk.degree));
                }
                for o in &x.opaque {
                    out.push(opaque_product(o.rank, o.degree, blk.rank, blk.degree));
                }
            }
            out
        };
        parts.opaque.extend(cross(self, &other.opaque));
        for s in &other.exact.summands {
            for o in &self.opaque {
                parts.opaque.push(opaque_product(s.rank, s.degree, o.rank, o.degree));
            }
        }
        parts.finish()
    }

    /// Harder–Narasimhan slope profile of the whole result.
    pub fn profile(&self) -> SlopeProfile {
        let mut pieces: Vec<(Rational64, i64, i64)> = self
            .exact
            .summands
            .iter()
            .map(|s| (s.slope(), s.rank, s.degree))
            .chain(self.opaque.iter().map(|b| (b.slope(), b.rank, b.degree)))
            .collect();
        pieces.sort_by(|a, b| b.0.cmp(&a.0));
        SlopeProfile::merge(pieces)
    }
}

impl From<Bundle> for Resolved {
    fn from(b: Bundle) -> Self {
        Resolved::new(b, Vec::new())
    }
}

impl fmt::Display for Resolved {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.exact.summands.iter().map(ToString::to_string).collect();
        parts.extend(
            self.opaque
                .iter()
                .map(|b| format!("<rank {}, degree {}>", b.rank, b.degree)),
        );
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

fn opaque_product(r1: i64, d1: i64, r2: i64, d2: i64) -> OpaqueBlock {
    OpaqueBlock {
        rank: r1 * r2,
        degree: r1 * d2 + r2 * d1,
    }
}

struct Parts {
    group: Arc<AbGroup>,
    exact: Vec<Indecomposable>,
    opaque: Vec<OpaqueBlock>,
}

impl Parts {
    fn new(group: &Arc<AbGroup>) -> Self {
        Parts {
            group: Arc::clone(group),
            exact: Vec::new(),
            opaque: Vec::new(),
        }
    }

    fn absorb(&mut self, other: Parts) {
        self.exact.extend(other.exact);
        self.opaque.extend(other.opaque);
    }

    fn finish(self) -> Resolved {
        Resolved::new(Bundle::collect(&self.group, self.exact), self.opaque)
    }
}

/// `F_a ⊗ F_b = ⊕_{i < min(a, b)} F_{a + b − 1 − 2i}`.
fn clebsch_gordan(a: i64, b: i64) -> impl Iterator<Item = i64> {
    (0..a.min(b)).map(move |i| a + b - 1 - 2 * i)
}

/// Symmetric square of `F_h`: `F_{2h−1} ⊕ F_{2h−5} ⊕ …`.
fn sym2_unipotent(h: i64) -> impl Iterator<Item = i64> {
    (0..=(h - 1) / 2).map(move |j| 2 * h - 1 - 4 * j)
}

/// Exterior square of `F_h`: `F_{2h−3} ⊕ F_{2h−7} ⊕ …`.
fn wedge2_unipotent(h: i64) -> impl Iterator<Item = i64> {
    (0..(h / 2)).map(move |j| 2 * h - 3 - 4 * j)
}

fn tensor_indec(a: &Indecomposable, b: &Indecomposable) -> Parts {
    let mut out = Parts::new(a.group());
    let (ra, rb) = (a.stable_rank(), b.stable_rank());
    let (da, db) = (a.stable_degree(), b.stable_degree());
    let twist = &a.twist + &b.twist;
    if ra.gcd(&rb) == 1 {
        // the product of coprime-rank stable bundles is stable with the expected determinant
        let (r, d) = (ra * rb, ra * db + rb * da);
        for k in clebsch_gordan(a.multiplicity(), b.multiplicity()) {
            out.exact.push(Indecomposable::make(r * k, d * k, twist.clone()));
        }
        return out;
    }
    if ra == 2 && rb == 2 {
        if let Some(etas) = a.group().two_torsion() {
            // E₀(2, x) ⊗ E₀(2, y) = End E₀(2, x) ⊗ O((x + y)/2 · y₀)
            let c = (da + db) / 2;
            for eta in &etas {
                let tw = &twist + eta;
                for k in clebsch_gordan(a.multiplicity(), b.multiplicity()) {
                    out.exact.push(Indecomposable::make(k, c * k, tw.clone()));
                }
            }
            return out;
        }
    }
    out.opaque.push(opaque_product(a.rank, a.degree, b.rank, b.degree));
    out
}

/// Distributes over direct sums; see the module docs for when pieces go opaque.
pub fn tensor(a: &Bundle, b: &Bundle) -> Resolved {
    Resolved::from(a.clone()).tensor(&Resolved::from(b.clone()))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Square {
    Sym,
    Wedge,
}

fn square_indec(e: &Indecomposable, kind: Square) -> Parts {
    let mut out = Parts::new(e.group());
    let h = e.multiplicity();
    let twist2 = e.twist.scale(2);
    match e.stable_rank() {
        1 => {
            // F_h ⊗ M with M of degree c
            let c = e.stable_degree();
            let pieces: Vec<i64> = match kind {
                Square::Sym => sym2_unipotent(h).collect(),
                Square::Wedge => wedge2_unipotent(h).collect(),
            };
            for k in pieces {
                out.exact.push(Indecomposable::make(k, 2 * c * k, twist2.clone()));
            }
        }
        2 if e.group().two_torsion().is_some() => {
            // S²(V ⊗ W) = S²V ⊗ S²W ⊕ ∧²V ⊗ ∧²W, ∧²(V ⊗ W) = S²V ⊗ ∧²W ⊕ ∧²V ⊗ S²W
            // with V = E₀(2, a): S²V = ⊕ O(a·y₀) ⊗ ηᵢ (i = 1..3), ∧²V = O(a·y₀)
            let a = e.stable_degree();
            let etas = e.group().two_torsion().expect("checked above");
            let (with_sym_v, with_wedge_v): (Vec<i64>, Vec<i64>) = match kind {
                Square::Sym => (sym2_unipotent(h).collect(), wedge2_unipotent(h).collect()),
                Square::Wedge => (wedge2_unipotent(h).collect(), sym2_unipotent(h).collect()),
            };
            for k in with_sym_v {
                for eta in &etas[1..] {
                    out.exact.push(Indecomposable::make(k, a * k, &twist2 + eta));
                }
            }
            for k in with_wedge_v {
                out.exact.push(Indecomposable::make(k, a * k, twist2.clone()));
            }
        }
        _ => {
            let (r, d) = (e.rank, e.degree);
            let blk = match kind {
                Square::Sym => OpaqueBlock {
                    rank: r * (r + 1) / 2,
                    degree: (r + 1) * d,
                },
                Square::Wedge => OpaqueBlock {
                    rank: r * (r - 1) / 2,
                    degree: (r - 1) * d,
                },
            };
            out.opaque.push(blk);
        }
    }
    out
}

fn square(b: &Bundle, kind: Square) -> Resolved {
    let mut parts = Parts::new(&b.group);
    for (i, x) in b.summands.iter().enumerate() {
        parts.absorb(square_indec(x, kind));
        for y in &b.summands[i + 1..] {
            parts.absorb(tensor_indec(x, y));
        }
    }
    parts.finish()
}

/// `S²(A ⊕ B) = S²A ⊕ A ⊗ B ⊕ S²B`.
pub fn sym2(b: &Bundle) -> Resolved {
    square(b, Square::Sym)
}

/// `∧²(A ⊕ B) = ∧²A ⊕ A ⊗ B ⊕ ∧²B`.
pub fn wedge2(b: &Bundle) -> Resolved {
    square(b, Square::Wedge)
}

/// Multiplicities in `S^{2k} E` for `E` stable of rank 2 and odd degree:
/// `a_k` copies of `(∧²E)^k` and `b_k` copies of each `(∧²E)^k ⊗ ηᵢ`.
pub fn even_power_multiplicities(k: i64) -> (i64, i64) {
    let b = (k + 1) / 2;
    (2 * k + 1 - 3 * b, b)
}

/// `Sⁿ E` for an indecomposable `E` of rank 2.
pub fn sym_n_rank2(b: &Bundle, n: u32) -> Result<Bundle, BundleError> {
    let [e] = b.summands() else {
        return Err(BundleError::NotRank2Indecomposable(b.to_string()));
    };
    if e.rank != 2 {
        return Err(BundleError::NotRank2Indecomposable(b.to_string()));
    }
    let group = &b.group;
    let n = i64::from(n);
    let t = &e.twist;
    if e.degree % 2 == 0 {
        // E = F₂ ⊗ M, SⁿE = F_{n+1} ⊗ Mⁿ
        let c = e.degree / 2;
        return Bundle::indecomposable(n + 1, (n + 1) * n * c, t.scale(n));
    }
    let etas = group.two_torsion().ok_or_else(|| {
        BundleError::NotRank2Indecomposable(format!("{b} (group lacks 2-torsion)"))
    })?;
    let a = e.degree;
    let mut out = Vec::new();
    if n % 2 == 1 {
        let k = (n + 1) / 2;
        for _ in 0..k {
            out.push(Indecomposable::make(2, n * a, t.scale(n)));
        }
    } else {
        let k = n / 2;
        let (ak, bk) = even_power_multiplicities(k);
        let base = t.scale(n);
        for _ in 0..ak {
            out.push(Indecomposable::make(1, k * a, base.clone()));
        }
        for _ in 0..bk {
            for eta in &etas[1..] {
                out.push(Indecomposable::make(1, k * a, &base + eta));
            }
        }
    }
    Ok(Bundle::collect(group, out))
}

/// One Harder–Narasimhan piece: total rank and degree at a given slope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SlopePiece {
    pub slope: Rational64,
    pub rank: i64,
    pub degree: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SlopeProfile {
    pub pieces: Vec<SlopePiece>,
}

impl SlopeProfile {
    /// Input must be sorted by slope descending.
    fn merge(sorted: Vec<(Rational64, i64, i64)>) -> Self {
        let mut pieces: Vec<SlopePiece> = Vec::new();
        for (slope, rank, degree) in sorted {
            match pieces.last_mut() {
                Some(p) if p.slope == slope => {
                    p.rank += rank;
                    p.degree += degree;
                }
                _ => pieces.push(SlopePiece { slope, rank, degree }),
            }
        }
        SlopeProfile { pieces }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stability {
    pub profile: SlopeProfile,
    pub semistable: bool,
    pub stable: bool,
}

pub fn stability_profile(b: &Bundle) -> Stability {
    let profile = Resolved::from(b.clone()).profile();
    let semistable = profile.pieces.len() <= 1;
    let stable = semistable && matches!(b.summands(), [s] if s.multiplicity() == 1);
    Stability {
        profile,
        semistable,
        stable,
    }
}

pub fn end_bundle(b: &Bundle) -> Resolved {
    tensor(b, &dual(b))
}
