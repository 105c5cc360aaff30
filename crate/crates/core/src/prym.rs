//! Homology of a simple branched cover of an elliptic curve, from its
//! permutation monodromy, and the type of the polarization on the kernel of
//! the pushforward.
//!
//! Permutations act on sheets `0..d` on the right: following a loop `x` from
//! sheet `i` ends on sheet `ρ(x)[i]`, and products compose left to right
//! along paths. The monodromy satisfies `σ₁⋯σₙ = αβα⁻¹β⁻¹`.
//!
//! The base gets one vertex, loops `a, b, c₁, …, cₙ`, a big face bounded by
//! `a b a⁻¹ b⁻¹ cₙ⁻¹ ⋯ c₁⁻¹` and a disk bounded by each `cᵢ`. Lifting gives a
//! cell structure on the cover; collapsing a spanning tree and gluing faces
//! along a dual tree leaves a single polygon whose side pairings determine
//! the intersection form.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intmat::IntMat;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Perm(Vec<usize>);

impl Perm {
    pub fn identity(d: usize) -> Self {
        Perm((0..d).collect())
    }

    /// From a 0-indexed image array.
    pub fn from_images(images: Vec<usize>) -> Result<Self, PrymError> {
        let d = images.len();
        let mut seen = vec![false; d];
        for &x in &images {
            if x >= d || seen[x] {
                return Err(PrymError::NotAPermutation(images.clone()));
            }
            seen[x] = true;
        }
        Ok(Perm(images))
    }

    pub fn transposition(d: usize, i: usize, j: usize) -> Self {
        let mut p = Perm::identity(d);
        p.0.swap(i, j);
        p
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    /// `self` first, then `other`.
    pub fn then(&self, other: &Perm) -> Perm {
        Perm(self.0.iter().map(|&i| other.0[i]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Perm(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn is_transposition(&self) -> bool {
        self.0.iter().enumerate().filter(|(i, j)| i != *j).count() == 2
    }

    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.0.len()];
        let mut out = Vec::new();
        for start in 0..self.0.len() {
            if seen[start] {
                continue;
            }
            let mut cyc = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cyc.push(i);
                i = self.0[i];
            }
            out.push(cyc);
        }
        out
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cyc: Vec<_> = self.cycles().into_iter().filter(|c| c.len() > 1).collect();
        if cyc.is_empty() {
            return write!(f, "id");
        }
        for c in cyc {
            let s: Vec<String> = c.iter().map(|i| (i + 1).to_string()).collect();
            write!(f, "({})", s.join(" "))?;
        }
        Ok(())
    }
}

/// `αβα⁻¹β⁻¹`, left to right.
pub fn commutator(alpha: &Perm, beta: &Perm) -> Perm {
    alpha.then(beta).then(&alpha.inverse()).then(&beta.inverse())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrymError {
    #[error("not a permutation: {0:?}")]
    NotAPermutation(Vec<usize>),
    #[error("degree must be at least 2, got {0}")]
    DegreeTooSmall(usize),
    #[error("permutation has degree {got}, expected {expected}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("branch cycle {index} is {cycle}, not a transposition")]
    NotTransposition { index: usize, cycle: String },
    #[error("product of branch cycles {product} differs from the commutator {commutator}")]
    RelationViolated { product: String, commutator: String },
    #[error("monodromy is not transitive; orbit of sheet 1 has {0} sheets")]
    NotTransitive(usize),
    #[error("pushforward has rank {0} < 2")]
    DegeneratePushforward(usize),
    #[error("component class is only defined for degree 4, got {0}")]
    NotQuartic(usize),
    #[error("index d2 = {0} is impossible for a simple quadruple cover")]
    InconsistentIndex(i64),
    #[error("cell model is inconsistent: {0}")]
    CellModel(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchData {
    pub alpha: Perm,
    pub beta: Perm,
    pub sigmas: Vec<Perm>,
}

/// On-disk form: 1-indexed image arrays.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchDataFile {
    pub degree: usize,
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    pub sigmas: Vec<Vec<usize>>,
}

impl BranchData {
    pub fn new(alpha: Perm, beta: Perm, sigmas: Vec<Perm>) -> Self {
        BranchData { alpha, beta, sigmas }
    }

    pub fn degree(&self) -> usize {
        self.alpha.degree()
    }

    pub fn from_file(f: &BranchDataFile) -> Result<Self, PrymError> {
        let conv = |v: &Vec<usize>| -> Result<Perm, PrymError> {
            if v.len() != f.degree {
                return Err(PrymError::DegreeMismatch {
                    expected: f.degree,
                    got: v.len(),
                });
            }
            let zero_based = v
                .iter()
                .map(|&x| x.checked_sub(1).ok_or_else(|| PrymError::NotAPermutation(v.clone())))
                .collect::<Result<Vec<_>, _>>()?;
            Perm::from_images(zero_based).map_err(|_| PrymError::NotAPermutation(v.clone()))
        };
        Ok(BranchData {
            alpha: conv(&f.alpha)?,
            beta: conv(&f.beta)?,
            sigmas: f.sigmas.iter().map(conv).collect::<Result<_, _>>()?,
        })
    }

    pub fn to_file(&self) -> BranchDataFile {
        let one = |p: &Perm| p.images().iter().map(|i| i + 1).collect();
        BranchDataFile {
            degree: self.degree(),
            alpha: one(&self.alpha),
            beta: one(&self.beta),
            sigmas: self.sigmas.iter().map(one).collect(),
        }
    }
}

pub fn validate_branch_data(b: &BranchData) -> Result<(), PrymError> {
    let d = b.degree();
    if d < 2 {
        return Err(PrymError::DegreeTooSmall(d));
    }
    for p in std::iter::once(&b.beta).chain(&b.sigmas) {
        if p.degree() != d {
            return Err(PrymError::DegreeMismatch {
                expected: d,
                got: p.degree(),
            });
        }
    }
    for (index, s) in b.sigmas.iter().enumerate() {
        if !s.is_transposition() {
            return Err(PrymError::NotTransposition {
                index: index + 1,
                cycle: s.to_string(),
            });
        }
    }
    let product = b.sigmas.iter().fold(Perm::identity(d), |acc, s| acc.then(s));
    let comm = commutator(&b.alpha, &b.beta);
    if product != comm {
        return Err(PrymError::RelationViolated {
            product: product.to_string(),
            commutator: comm.to_string(),
        });
    }
    let orbit = orbit_of_first(b);
    if orbit < d {
        return Err(PrymError::NotTransitive(orbit));
    }
    Ok(())
}

fn orbit_of_first(b: &BranchData) -> usize {
    let d = b.degree();
    let gens: Vec<&Perm> = [&b.alpha, &b.beta].into_iter().chain(&b.sigmas).collect();
    let mut seen = vec![false; d];
    seen[0] = true;
    let mut queue = VecDeque::from([0]);
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for g in &gens {
            let j = g.apply(i);
            if !seen[j] {
                seen[j] = true;
                count += 1;
                queue.push_back(j);
            }
        }
    }
    count
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverHomology {
    pub degree: usize,
    pub genus: usize,
    /// Alternating and unimodular, `2g × 2g`.
    pub intersection: IntMat,
    /// `π_*` onto `H₁(Y) = Z⟨a, b⟩`, `2 × 2g`.
    pub pushforward: IntMat,
    /// `π^*` on `a` and `b`, `2g × 2`.
    pub transfer: IntMat,
}

/// Oriented edge occurrence in a face boundary.
type Letter = (usize, i64);

struct Cells {
    vertex_count: usize,
    /// `(tail, head, base class)`; the base class is the image in `H₁(Y)`.
    edges: Vec<(usize, usize, [i64; 2])>,
    faces: Vec<Vec<Letter>>,
}

fn lift_cells(b: &BranchData) -> Cells {
    let d = b.degree();
    let n = b.sigmas.len();
    // base loops: 0 = a, 1 = b, 2 + i = c_i
    let loops: Vec<&Perm> = [&b.alpha, &b.beta].into_iter().chain(&b.sigmas).collect();
    let base_class = |x: usize| match x {
        0 => [1, 0],
        1 => [0, 1],
        _ => [0, 0],
    };
    let edge_id = |x: usize, sheet: usize| x * d + sheet;
    let mut edges = Vec::with_capacity(loops.len() * d);
    for (x, p) in loops.iter().enumerate() {
        for sheet in 0..d {
            edges.push((sheet, p.apply(sheet), base_class(x)));
        }
    }
    let inverses: Vec<Perm> = loops.iter().map(|p| p.inverse()).collect();
    let mut word: Vec<(usize, i64)> = vec![(0, 1), (1, 1), (0, -1), (1, -1)];
    word.extend((0..n).rev().map(|i| (2 + i, -1)));
    let mut faces = Vec::new();
    for start in 0..d {
        let mut sheet = start;
        let mut face = Vec::with_capacity(word.len());
        for &(x, sign) in &word {
            if sign > 0 {
                face.push((edge_id(x, sheet), 1));
                sheet = loops[x].apply(sheet);
            } else {
                sheet = inverses[x].apply(sheet);
                face.push((edge_id(x, sheet), -1));
            }
        }
        debug_assert_eq!(sheet, start);
        faces.push(face);
    }
    for (i, s) in b.sigmas.iter().enumerate() {
        for cyc in s.cycles() {
            faces.push(cyc.iter().map(|&sheet| (edge_id(2 + i, sheet), 1)).collect());
        }
    }
    Cells {
        vertex_count: d,
        edges,
        faces,
    }
}

/// BFS spanning tree on vertices: tree edge flags and, per vertex, the base
/// class of the tree path from vertex 0.
fn spanning_tree(c: &Cells) -> (Vec<bool>, Vec<[i64; 2]>) {
    let mut adj: Vec<Vec<(usize, usize, i64)>> = vec![Vec::new(); c.vertex_count];
    for (e, &(t, h, _)) in c.edges.iter().enumerate() {
        adj[t].push((e, h, 1));
        adj[h].push((e, t, -1));
    }
    let mut in_tree = vec![false; c.edges.len()];
    let mut phi: Vec<Option<[i64; 2]>> = vec![None; c.vertex_count];
    phi[0] = Some([0, 0]);
    let mut queue = VecDeque::from([0]);
    while let Some(v) = queue.pop_front() {
        let pv = phi[v].expect("visited");
        for &(e, w, dir) in &adj[v] {
            if phi[w].is_none() {
                let base = c.edges[e].2;
                phi[w] = Some([pv[0] + dir * base[0], pv[1] + dir * base[1]]);
                in_tree[e] = true;
                queue.push_back(w);
            }
        }
    }
    (in_tree, phi.into_iter().map(|p| p.expect("connected")).collect())
}

fn locate(face: &[Letter], edge: usize) -> Option<usize> {
    face.iter().position(|&(e, _)| e == edge)
}

pub fn build_homology(b: &BranchData) -> Result<CoverHomology, PrymError> {
    validate_branch_data(b)?;
    let d = b.degree();
    let cells = lift_cells(b);
    let (in_tree, phi) = spanning_tree(&cells);
    let ne = cells.edges.len();

    // faces meeting each edge, with the sign of the occurrence
    let mut sides: Vec<Vec<(usize, i64)>> = vec![Vec::new(); ne];
    for (f, face) in cells.faces.iter().enumerate() {
        for &(e, s) in face {
            sides[e].push((f, s));
        }
    }
    if sides.iter().any(|s| s.len() != 2 || s[0].1 + s[1].1 != 0) {
        return Err(PrymError::CellModel("edge not shared by two oppositely oriented sides".into()));
    }

    // dual spanning tree over non-tree edges, in BFS order
    let nf = cells.faces.len();
    let mut reached = vec![false; nf];
    reached[0] = true;
    let mut in_cotree = vec![false; ne];
    let mut order: Vec<(usize, usize)> = Vec::new(); // (child face, edge to parent)
    let mut queue = VecDeque::from([0]);
    while let Some(f) = queue.pop_front() {
        for &(e, _) in &cells.faces[f] {
            if in_tree[e] || in_cotree[e] {
                continue;
            }
            let other = if sides[e][0].0 == f { sides[e][1].0 } else { sides[e][0].0 };
            if !reached[other] {
                reached[other] = true;
                in_cotree[e] = true;
                order.push((other, e));
                queue.push_back(other);
            }
        }
    }
    if reached.iter().any(|r| !r) {
        return Err(PrymError::CellModel("faces do not form a connected surface".into()));
    }

    // glue everything into one polygon
    let mut polygon: Vec<Letter> = cells.faces[0].clone();
    for &(child, e) in &order {
        let g = &cells.faces[child];
        let p = locate(&polygon, e).ok_or_else(|| PrymError::CellModel("gluing edge missing".into()))?;
        let q = locate(g, e).expect("edge lies on its face");
        let mut merged = polygon[..p].to_vec();
        merged.extend_from_slice(&g[q + 1..]);
        merged.extend_from_slice(&g[..q]);
        merged.extend_from_slice(&polygon[p + 1..]);
        polygon = merged;
    }
    polygon.retain(|&(e, _)| !in_tree[e]);

    let generators: Vec<usize> = (0..ne).filter(|&e| !in_tree[e] && !in_cotree[e]).collect();
    let rank = generators.len();
    if rank % 2 != 0 || polygon.len() != 2 * rank {
        return Err(PrymError::CellModel("polygon does not pair its sides".into()));
    }
    let genus = rank / 2;
    let mut slot = vec![usize::MAX; ne];
    for (i, &e) in generators.iter().enumerate() {
        slot[e] = i;
    }

    // chord intersections from interleaving of side pairs
    let mut plus = vec![0usize; rank];
    let mut minus = vec![0usize; rank];
    for (pos, &(e, s)) in polygon.iter().enumerate() {
        if s > 0 {
            plus[slot[e]] = pos;
        } else {
            minus[slot[e]] = pos;
        }
    }
    let len = polygon.len();
    let inside = |from: usize, to: usize, x: usize| (x + len - from) % len < (to + len - from) % len;
    let mut chord = IntMat::zeros(rank, rank);
    for x in 0..rank {
        for y in 0..rank {
            if x == y {
                continue;
            }
            let yp = inside(plus[x], minus[x], plus[y]);
            let ym = inside(plus[x], minus[x], minus[y]);
            chord[(x, y)] = match (yp, ym) {
                (true, false) => 1,
                (false, true) => -1,
                _ => 0,
            };
        }
    }
    let inverse = chord
        .unimodular_inverse()
        .ok_or_else(|| PrymError::CellModel("chord matrix is not unimodular".into()))?;

    // pushforward of each generator loop
    let mut pushforward = IntMat::zeros(2, rank);
    for (i, &e) in generators.iter().enumerate() {
        let (t, h, base) = cells.edges[e];
        for k in 0..2 {
            pushforward[(k, i)] = phi[t][k] + base[k] - phi[h][k];
        }
    }

    // transfer: sum of lifts, reduced to generators by subtracting face boundaries
    let mut transfer = IntMat::zeros(rank, 2);
    for (k, x) in [0usize, 1].into_iter().enumerate() {
        let mut z = vec![0i64; ne];
        for sheet in 0..d {
            z[x * d + sheet] += 1;
        }
        for &(child, e) in &order {
            let face = &cells.faces[child];
            let coef = face.iter().find(|l| l.0 == e).expect("edge on face").1;
            let k_f = z[e] * coef;
            for &(f_e, s) in face {
                z[f_e] -= k_f * s;
            }
        }
        for (i, &e) in generators.iter().enumerate() {
            transfer[(i, k)] = z[e];
        }
    }

    // orient so that the lifts of a and b meet positively
    let pair = |m: &IntMat| -> i64 {
        (0..rank)
            .flat_map(|i| (0..rank).map(move |j| (i, j)))
            .map(|(i, j)| transfer[(i, 0)] * m[(i, j)] * transfer[(j, 1)])
            .sum()
    };
    let dd = d as i64;
    let intersection = match pair(&inverse) {
        v if v == dd => inverse,
        v if v == -dd => inverse.scaled(-1),
        v => {
            return Err(PrymError::CellModel(format!(
                "lifted a and b meet {v} times, expected ±{d}"
            )))
        }
    };
    Ok(CoverHomology {
        degree: d,
        genus,
        intersection,
        pushforward,
        transfer,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrymReport {
    pub genus: usize,
    pub d2: i64,
    pub surjective: bool,
    pub polarization: Vec<i64>,
}

/// Basis of `ker π_*` as columns; saturated since the cokernel sits in `Z²`.
pub fn prym_lattice(h: &CoverHomology) -> IntMat {
    h.pushforward.kernel()
}

pub fn prym_polarization(h: &CoverHomology) -> Result<PrymReport, PrymError> {
    let s = h.pushforward.smith();
    if s.rank() < 2 {
        return Err(PrymError::DegeneratePushforward(s.rank()));
    }
    let d2: i64 = s.diagonal.iter().product();
    let k = prym_lattice(h);
    let restricted = k.transpose().mul(&h.intersection).mul(&k);
    Ok(PrymReport {
        genus: h.genus,
        d2,
        surjective: d2 == 1,
        polarization: restricted.symplectic_divisors(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentClass {
    Full,
    ViaDoubleCover,
}

pub fn classify_index(d2: i64) -> Result<ComponentClass, PrymError> {
    match d2 {
        1 => Ok(ComponentClass::Full),
        2 => Ok(ComponentClass::ViaDoubleCover),
        other => Err(PrymError::InconsistentIndex(other)),
    }
}

pub fn component_class(b: &BranchData) -> Result<ComponentClass, PrymError> {
    if b.degree() != 4 {
        return Err(PrymError::NotQuartic(b.degree()));
    }
    let report = prym_polarization(&build_homology(b)?)?;
    classify_index(report.d2)
}
