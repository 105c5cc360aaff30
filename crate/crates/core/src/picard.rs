//! Finitely generated model of `Pic(Y) = Z ⊕ Pic⁰(Y)` for an elliptic curve `Y`.
//!
//! `Pic⁰(Y)` itself is divisible; we only ever work with the subgroup spanned
//! by the twist classes a computation mentions, plus declared torsion. The
//! default group is `(Z/2)² ⊕ Z/3` with free generators appended on demand.

use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("elements belong to different groups")]
    Mismatch,
    #[error("torsion order {0} is not at least 2")]
    BadTorsionOrder(i64),
    #[error("coordinate vector has length {got}, expected {expected}")]
    BadLength { expected: usize, got: usize },
}

/// `Z^free_rank ⊕ Z/n₁ ⊕ … ⊕ Z/n_k`.
///
/// `klein` optionally names two elements spanning a Klein four-subgroup; these
/// play the role of the nontrivial 2-torsion points `η₁, η₂` (with `η₃ = η₁ + η₂`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AbGroup {
    free_rank: usize,
    torsion_orders: Vec<i64>,
    klein: Option<[Coords; 2]>,
    third: Option<Coords>,
    free_names: Vec<String>,
    torsion_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Coords {
    free: Vec<i64>,
    torsion: Vec<i64>,
}

impl AbGroup {
    pub fn new(free_rank: usize, torsion_orders: Vec<i64>) -> Result<Arc<Self>, GroupError> {
        if let Some(&bad) = torsion_orders.iter().find(|&&n| n < 2) {
            return Err(GroupError::BadTorsionOrder(bad));
        }
        let mut group = AbGroup {
            free_rank,
            torsion_names: (1..=torsion_orders.len()).map(|i| format!("t{i}")).collect(),
            torsion_orders,
            klein: None,
            third: None,
            free_names: default_free_names(free_rank),
        };
        group.klein = group.find_klein();
        Ok(Arc::new(group))
    }

    /// `Z^free_rank ⊕ Z/2 ⊕ Z/2 ⊕ Z/3`, the session default.
    pub fn standard(free_rank: usize) -> Arc<Self> {
        Self::standard_named(default_free_names(free_rank))
    }

    /// The standard group with caller-chosen names for the free generators.
    pub fn standard_named(free_names: Vec<String>) -> Arc<Self> {
        let free_rank = free_names.len();
        let mut group = AbGroup {
            free_rank,
            torsion_orders: vec![2, 2, 3],
            klein: None,
            third: None,
            free_names,
            torsion_names: vec!["eta1".into(), "eta2".into(), "tau".into()],
        };
        group.klein = group.find_klein();
        group.third = Some(Coords {
            free: vec![0; free_rank],
            torsion: vec![0, 0, 1],
        });
        Arc::new(group)
    }

    /// Builds a group whose distinguished 2-torsion and 3-torsion elements are
    /// given explicitly (used for quotient groups, where the images of the
    /// constants are no longer coordinate vectors).
    pub(crate) fn with_constants(
        free_rank: usize,
        torsion_orders: Vec<i64>,
        klein: Option<[(Vec<i64>, Vec<i64>); 2]>,
        third: Option<(Vec<i64>, Vec<i64>)>,
    ) -> Arc<Self> {
        let to_coords = |(free, torsion): (Vec<i64>, Vec<i64>)| Coords { free, torsion };
        Arc::new(AbGroup {
            free_rank,
            torsion_names: (1..=torsion_orders.len()).map(|i| format!("t{i}")).collect(),
            torsion_orders,
            klein: klein.map(|[a, b]| [to_coords(a), to_coords(b)]),
            third: third.map(to_coords),
            free_names: default_free_names(free_rank),
        })
    }

    fn find_klein(&self) -> Option<[Coords; 2]> {
        let even: Vec<usize> = self
            .torsion_orders
            .iter()
            .enumerate()
            .filter(|(_, &n)| n % 2 == 0)
            .map(|(i, _)| i)
            .take(2)
            .collect();
        if even.len() < 2 {
            return None;
        }
        let gen = |slot: usize| {
            let mut torsion = vec![0; self.torsion_orders.len()];
            torsion[slot] = self.torsion_orders[slot] / 2;
            Coords {
                free: vec![0; self.free_rank],
                torsion,
            }
        };
        Some([gen(even[0]), gen(even[1])])
    }

    pub fn free_rank(&self) -> usize {
        self.free_rank
    }

    pub fn torsion_orders(&self) -> &[i64] {
        &self.torsion_orders
    }

    pub fn free_names(&self) -> &[String] {
        &self.free_names
    }

    pub fn torsion_names(&self) -> &[String] {
        &self.torsion_names
    }

    pub fn zero(self: &Arc<Self>) -> GroupElem {
        GroupElem {
            group: Arc::clone(self),
            free: vec![0; self.free_rank],
            torsion: vec![0; self.torsion_orders.len()],
        }
    }

    pub fn elem(self: &Arc<Self>, free: Vec<i64>, torsion: Vec<i64>) -> Result<GroupElem, GroupError> {
        if free.len() != self.free_rank {
            return Err(GroupError::BadLength {
                expected: self.free_rank,
                got: free.len(),
            });
        }
        if torsion.len() != self.torsion_orders.len() {
            return Err(GroupError::BadLength {
                expected: self.torsion_orders.len(),
                got: torsion.len(),
            });
        }
        Ok(GroupElem {
            group: Arc::clone(self),
            free,
            torsion,
        }
        .normalized())
    }

    /// The `i`-th free generator.
    pub fn generator(self: &Arc<Self>, i: usize) -> GroupElem {
        let mut g = self.zero();
        g.free[i] = 1;
        g
    }

    /// `η₀ = 0, η₁, η₂, η₃`: the 2-torsion points used by the rank-2 rules.
    pub fn two_torsion(self: &Arc<Self>) -> Option<[GroupElem; 4]> {
        let [a, b] = self.klein.as_ref()?;
        let mk = |c: &Coords| {
            GroupElem {
                group: Arc::clone(self),
                free: c.free.clone(),
                torsion: c.torsion.clone(),
            }
            .normalized()
        };
        let e1 = mk(a);
        let e2 = mk(b);
        let e3 = &e1 + &e2;
        Some([self.zero(), e1, e2, e3])
    }

    /// The distinguished point of order 3, when the group has one.
    pub fn three_torsion(self: &Arc<Self>) -> Option<GroupElem> {
        let c = self.third.as_ref()?;
        Some(
            GroupElem {
                group: Arc::clone(self),
                free: c.free.clone(),
                torsion: c.torsion.clone(),
            }
            .normalized(),
        )
    }
}

impl fmt::Display for AbGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.free_rank > 0 {
            parts.push(format!("Z^{}", self.free_rank));
        }
        for n in &self.torsion_orders {
            parts.push(format!("Z/{n}"));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

fn default_free_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("g{i}")).collect()
}

/// An element of an [`AbGroup`], torsion coordinates reduced into `0..n`.
///
/// Ordering and hashing look only at coordinates; elements of different
/// groups are never meant to be compared.
#[derive(Clone)]
pub struct GroupElem {
    group: Arc<AbGroup>,
    free: Vec<i64>,
    torsion: Vec<i64>,
}

impl PartialEq for GroupElem {
    fn eq(&self, other: &Self) -> bool {
        self.free == other.free && self.torsion == other.torsion && self.same_group(other)
    }
}

impl Eq for GroupElem {}

impl PartialOrd for GroupElem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroupElem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.free, &self.torsion).cmp(&(&other.free, &other.torsion))
    }
}

impl std::hash::Hash for GroupElem {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.free.hash(state);
        self.torsion.hash(state);
    }
}

impl fmt::Debug for GroupElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}; {:?})", self.free, self.torsion)
    }
}

/// Multiplicative notation, e.g. `u^2 eta1 tau^2`; the identity prints as `1`.
impl fmt::Display for GroupElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.group.free_names.iter().chain(&self.group.torsion_names);
        let coords = self.free.iter().chain(&self.torsion);
        let terms: Vec<String> = names
            .zip(coords)
            .filter(|(_, &k)| k != 0)
            .map(|(name, &k)| if k == 1 { name.clone() } else { format!("{name}^{k}") })
            .collect();
        if terms.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", terms.join(" "))
        }
    }
}

impl GroupElem {
    fn normalized(mut self) -> Self {
        for (t, &n) in self.torsion.iter_mut().zip(&self.group.torsion_orders) {
            *t = t.rem_euclid(n);
        }
        self
    }

    pub fn group(&self) -> &Arc<AbGroup> {
        &self.group
    }

    pub fn free_part(&self) -> &[i64] {
        &self.free
    }

    pub fn torsion_part(&self) -> &[i64] {
        &self.torsion
    }

    pub fn is_zero(&self) -> bool {
        self.free.iter().all(|&x| x == 0) && self.torsion.iter().all(|&x| x == 0)
    }

    pub fn same_group(&self, other: &GroupElem) -> bool {
        Arc::ptr_eq(&self.group, &other.group) || self.group == other.group
    }

    pub fn checked_add(&self, other: &GroupElem) -> Result<GroupElem, GroupError> {
        if !self.same_group(other) {
            return Err(GroupError::Mismatch);
        }
        Ok(GroupElem {
            group: Arc::clone(&self.group),
            free: self.free.iter().zip(&other.free).map(|(a, b)| a + b).collect(),
            torsion: self
                .torsion
                .iter()
                .zip(&other.torsion)
                .map(|(a, b)| a + b)
                .collect(),
        }
        .normalized())
    }

    pub fn neg(&self) -> GroupElem {
        self.scale(-1)
    }

    pub fn scale(&self, k: i64) -> GroupElem {
        GroupElem {
            group: Arc::clone(&self.group),
            free: self.free.iter().map(|a| a * k).collect(),
            torsion: self.torsion.iter().map(|a| a * k).collect(),
        }
        .normalized()
    }

    /// True iff `m·x = 0`.
    pub fn order_divides(&self, m: i64) -> bool {
        assert!(m >= 1, "order_divides needs m >= 1");
        self.scale(m).is_zero()
    }

    /// Canonical representative of `x` modulo the `m`-torsion subgroup.
    ///
    /// The `m`-torsion of `Z/n` is generated by `n / gcd(n, m)`, so the
    /// lexicographically least coset member reduces each torsion coordinate
    /// modulo that generator. Free coordinates are untouched.
    pub fn reduce_mod_torsion(&self, m: i64) -> GroupElem {
        assert!(m >= 1, "reduce_mod_torsion needs m >= 1");
        let torsion = self
            .torsion
            .iter()
            .zip(&self.group.torsion_orders)
            .map(|(&t, &n)| t.rem_euclid(n / n.gcd(&m)))
            .collect();
        GroupElem {
            group: Arc::clone(&self.group),
            free: self.free.clone(),
            torsion,
        }
    }
}

impl std::ops::Add for &GroupElem {
    type Output = GroupElem;

    fn add(self, rhs: &GroupElem) -> GroupElem {
        self.checked_add(rhs).expect("adding elements of different groups")
    }
}

impl std::ops::Sub for &GroupElem {
    type Output = GroupElem;

    fn sub(self, rhs: &GroupElem) -> GroupElem {
        self.checked_add(&rhs.neg())
            .expect("subtracting elements of different groups")
    }
}

impl std::ops::Neg for &GroupElem {
    type Output = GroupElem;

    fn neg(self) -> GroupElem {
        GroupElem::neg(self)
    }
}

/// Operations accepted by [`group_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupOp {
    Add,
    Neg,
    Scale(i64),
}

pub fn group_arith(op: GroupOp, a: &GroupElem, b: Option<&GroupElem>) -> Result<GroupElem, GroupError> {
    match op {
        GroupOp::Add => a.checked_add(b.ok_or(GroupError::Mismatch)?),
        GroupOp::Neg => Ok(a.neg()),
        GroupOp::Scale(k) => Ok(a.scale(k)),
    }
}

/// A line bundle class: degree plus the `Pic⁰` component relative to the base point.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PicardClass {
    pub degree: i64,
    pub cls: GroupElem,
}

impl PicardClass {
    pub fn new(degree: i64, cls: GroupElem) -> Self {
        PicardClass { degree, cls }
    }

    pub fn add(&self, other: &PicardClass) -> PicardClass {
        PicardClass {
            degree: self.degree + other.degree,
            cls: &self.cls + &other.cls,
        }
    }

    pub fn neg(&self) -> PicardClass {
        PicardClass {
            degree: -self.degree,
            cls: self.cls.neg(),
        }
    }

    pub fn scale(&self, k: i64) -> PicardClass {
        PicardClass {
            degree: self.degree * k,
            cls: self.cls.scale(k),
        }
    }
}
