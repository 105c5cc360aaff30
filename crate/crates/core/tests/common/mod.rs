#![allow(dead_code)]

//! Generators and independent oracles shared by the integration tests.

pub mod criteria;

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use quadcover::bundle::{Bundle, Indecomposable};
use quadcover::conics::{ConicPencil, Mat3};
use quadcover::moduli::PairType;
use quadcover::picard::{AbGroup, GroupElem};
use quadcover::poly::Poly;
use quadcover::prym::{commutator, BranchData, Perm};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn qq(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

// ---------------------------------------------------------------------------
// bundles

pub fn group() -> Arc<AbGroup> {
    AbGroup::standard(2)
}

pub fn random_twist(g: &Arc<AbGroup>, r: &mut StdRng) -> GroupElem {
    let free = (0..g.free_rank()).map(|_| r.gen_range(-3..=3)).collect();
    let torsion = g.torsion_orders().iter().map(|&n| r.gen_range(0..n)).collect();
    g.elem(free, torsion).expect("coordinates fit the group")
}

/// A random split of `total` into `parts` integers in a modest range.
pub fn random_split(total: i64, parts: usize, r: &mut StdRng) -> Vec<i64> {
    let mut v: Vec<i64> = (1..parts).map(|_| r.gen_range(-6..=6)).collect();
    let rest = total - v.iter().sum::<i64>();
    v.push(rest);
    v.shuffle(r);
    v
}

pub fn bundle_from(g: &Arc<AbGroup>, ranks: &[i64], degrees: &[i64], r: &mut StdRng) -> Bundle {
    let parts = ranks
        .iter()
        .zip(degrees)
        .map(|(&rk, &d)| Indecomposable::new(rk, d, random_twist(g, r)).expect("positive rank"))
        .collect();
    Bundle::from_summands(g, parts).expect("one group")
}

/// Any bundle with up to four summands of rank at most four.
pub fn random_bundle(g: &Arc<AbGroup>, r: &mut StdRng) -> Bundle {
    let n = r.gen_range(1..=4);
    let ranks: Vec<i64> = (0..n).map(|_| r.gen_range(1..=4)).collect();
    let degrees: Vec<i64> = (0..n).map(|_| r.gen_range(-8..=8)).collect();
    bundle_from(g, &ranks, &degrees, r)
}

/// A semistable bundle: every summand has the same slope.
pub fn random_semistable(g: &Arc<AbGroup>, r: &mut StdRng) -> Bundle {
    let (rank, degree) = loop {
        let rank = r.gen_range(1..=3);
        let degree: i64 = r.gen_range(-5..=5);
        if gcd_i128(i128::from(rank), i128::from(degree)) == 1 {
            break (rank, degree);
        }
    };
    let n = r.gen_range(1..=3);
    let mult: Vec<i64> = (0..n).map(|_| r.gen_range(1..=3)).collect();
    let ranks: Vec<i64> = mult.iter().map(|h| h * rank).collect();
    let degrees: Vec<i64> = mult.iter().map(|h| h * degree).collect();
    bundle_from(g, &ranks, &degrees, r)
}

/// Rank partitions of 3 and 2.
const E_SHAPES: [&[i64]; 3] = [&[3], &[2, 1], &[1, 1, 1]];
const F_SHAPES: [&[i64]; 2] = [&[2], &[1, 1]];

/// A random `(E, F)` of ranks `(3, 2)`, both of degree `e`.
pub fn random_pair(g: &Arc<AbGroup>, e: i64, r: &mut StdRng) -> (Bundle, Bundle) {
    let es = E_SHAPES[r.gen_range(0..3)];
    let fs = F_SHAPES[r.gen_range(0..2)];
    let ed = random_split(e, es.len(), r);
    let fd = random_split(e, fs.len(), r);
    (bundle_from(g, es, &ed, r), bundle_from(g, fs, &fd, r))
}

// ---------------------------------------------------------------------------
// branch data

fn orbit_size(d: usize, gens: &[&Perm]) -> usize {
    let mut seen = vec![false; d];
    seen[0] = true;
    let mut stack = vec![0];
    while let Some(i) = stack.pop() {
        for g in gens {
            let j = g.apply(i);
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.iter().filter(|&&s| s).count()
}

fn random_perm(d: usize, r: &mut StdRng) -> Perm {
    let mut v: Vec<usize> = (0..d).collect();
    v.shuffle(r);
    Perm::from_images(v).expect("shuffle is a permutation")
}

/// Transpositions whose left-to-right product is `p`, one fewer per cycle than its length.
fn transposition_factorization(p: &Perm) -> Vec<Perm> {
    let d = p.degree();
    let mut out = Vec::new();
    for c in p.cycles() {
        for &x in &c[1..] {
            out.push(Perm::transposition(d, c[0], x));
        }
    }
    out
}

/// Random transitive branch data of degree `d` with `n` simple branch points.
///
/// Starts from a minimal factorization of `[α, β]`, pads with cancelling pairs
/// and scrambles with Hurwitz moves; intransitive draws are rejected.
pub fn random_branch_data(d: usize, n: usize, r: &mut StdRng) -> BranchData {
    assert!(d >= 2 && n % 2 == 0 && n >= 2);
    loop {
        let alpha = random_perm(d, r);
        let beta = random_perm(d, r);
        let c = commutator(&alpha, &beta);
        let mut sigmas = transposition_factorization(&c);
        if sigmas.len() > n {
            continue;
        }
        while sigmas.len() < n {
            let i = r.gen_range(0..d);
            let j = (i + r.gen_range(1..d)) % d;
            let t = Perm::transposition(d, i, j);
            let at = r.gen_range(0..=sigmas.len());
            sigmas.insert(at, t.clone());
            sigmas.insert(at, t);
        }
        for _ in 0..4 * n {
            let i = r.gen_range(0..n - 1);
            let (a, b) = (sigmas[i].clone(), sigmas[i + 1].clone());
            // (a, b) -> (a b a⁻¹, a) keeps the product
            sigmas[i] = a.then(&b).then(&a.inverse());
            sigmas[i + 1] = a;
        }
        let product = sigmas.iter().fold(Perm::identity(d), |acc, s| acc.then(s));
        assert_eq!(product, c, "generator broke the relation");
        let gens: Vec<&Perm> = [&alpha, &beta].into_iter().chain(&sigmas).collect();
        if orbit_size(d, &gens) == d {
            return BranchData::new(alpha, beta, sigmas);
        }
    }
}

pub fn perm1(d: usize, cycles: &[&[usize]]) -> Perm {
    let mut img: Vec<usize> = (0..d).collect();
    for c in cycles {
        for k in 0..c.len() {
            img[c[k] - 1] = c[(k + 1) % c.len()] - 1;
        }
    }
    Perm::from_images(img).expect("disjoint cycles")
}

/// α = β = id, σ = (12),(12),(13),(13),(14),(14).
pub fn full_example() -> BranchData {
    let t = |i: usize, j: usize| perm1(4, &[&[i, j]]);
    BranchData::new(
        Perm::identity(4),
        Perm::identity(4),
        vec![t(1, 2), t(1, 2), t(1, 3), t(1, 3), t(1, 4), t(1, 4)],
    )
}

/// α = (13)(24), β = id, σ = (12),(12),(34),(34),(12),(12).
pub fn imprimitive_example() -> BranchData {
    let t = |i: usize, j: usize| perm1(4, &[&[i, j]]);
    BranchData::new(
        perm1(4, &[&[1, 3], &[2, 4]]),
        Perm::identity(4),
        vec![t(1, 2), t(1, 2), t(3, 4), t(3, 4), t(1, 2), t(1, 2)],
    )
}

pub fn double_cover_example() -> BranchData {
    let t = perm1(2, &[&[1, 2]]);
    BranchData::new(Perm::identity(2), Perm::identity(2), vec![t.clone(), t])
}

// ---------------------------------------------------------------------------
// integer linear algebra, kept apart from the library's Smith form

pub fn det_i128(m: &[Vec<i128>]) -> i128 {
    // Bareiss fraction-free elimination
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut a = m.to_vec();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

pub fn gcd_i128(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd_i128(b, a % b)
    }
}

/// Row-echelon basis of the integer row lattice, pivots strictly increasing.
pub struct Lattice {
    rows: Vec<(usize, Vec<i128>)>,
    width: usize,
}

impl Lattice {
    pub fn new(width: usize, gens: &[Vec<i64>]) -> Self {
        let mut pool: Vec<Vec<i128>> = gens
            .iter()
            .map(|g| g.iter().map(|&x| i128::from(x)).collect())
            .collect();
        let mut rows = Vec::new();
        for col in 0..width {
            loop {
                pool.retain(|r| r.iter().any(|&x| x != 0));
                let mut with: Vec<usize> = (0..pool.len()).filter(|&i| pool[i][col] != 0).collect();
                if with.is_empty() {
                    break;
                }
                with.sort_by_key(|&i| pool[i][col].abs());
                let p = with[0];
                if with.len() == 1 {
                    let mut row = pool.swap_remove(p);
                    if row[col] < 0 {
                        row.iter_mut().for_each(|x| *x = -*x);
                    }
                    rows.push((col, row));
                    break;
                }
                let pivot = pool[p].clone();
                for &i in &with[1..] {
                    let f = pool[i][col] / pivot[col];
                    for (x, y) in pool[i].iter_mut().zip(&pivot) {
                        *x -= f * y;
                    }
                }
            }
            // rows without an entry in this column stay in the pool
        }
        Lattice { rows, width }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        assert_eq!(v.len(), self.width);
        let mut x: Vec<i128> = v.iter().map(|&a| i128::from(a)).collect();
        for (col, row) in &self.rows {
            if x[*col] % row[*col] != 0 {
                return false;
            }
            let f = x[*col] / row[*col];
            for (a, b) in x.iter_mut().zip(row) {
                *a -= f * b;
            }
        }
        x.iter().all(|&a| a == 0)
    }
}

// ---------------------------------------------------------------------------
// moduli oracle: h⁰ from Hom rules between indecomposables

#[derive(Clone, Debug)]
pub struct Piece {
    pub rank: i64,
    pub degree: i64,
    /// Twist as a vector over `(gens…, eta1, eta2, tau)`; `None` when only slope is known.
    pub twist: Option<Vec<i64>>,
}

fn gcd(a: i64, b: i64) -> i64 {
    gcd_i128(i128::from(a), i128::from(b)) as i64
}

fn add(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn scale(a: &[i64], k: i64) -> Vec<i64> {
    a.iter().map(|x| k * x).collect()
}

pub struct PairOracle {
    pub k: usize,
    pub lattice: Lattice,
    pub e: Vec<Piece>,
    pub f: Vec<Piece>,
}

impl PairOracle {
    pub fn new(t: &PairType) -> Self {
        let k = t.generator_count();
        let w = k + 3;
        let ne = t.e_summands().len();
        let mut gens = Vec::new();
        let mut det = vec![0; w];
        for (i, s) in t.e_summands().iter().enumerate() {
            det[i] = s.rank;
        }
        for (j, s) in t.f_summands().iter().enumerate() {
            det[ne + j] = -s.rank;
        }
        gens.push(det);
        let iso = t.iso_classes();
        for i in 0..k {
            if let Some(j) = (0..i).find(|&j| iso[j] == iso[i]) {
                let mut v = vec![0; w];
                v[j] = 1;
                v[i] = -1;
                gens.push(v);
            }
        }
        gens.extend(t.relations().iter().cloned());
        for (i, n) in [2, 2, 3].into_iter().enumerate() {
            let mut v = vec![0; w];
            v[k + i] = n;
            gens.push(v);
        }
        let unit = |i: usize| {
            let mut v = vec![0; w];
            v[i] = 1;
            v
        };
        let piece = |i: usize, rank: i64, degree: i64| Piece {
            rank,
            degree,
            twist: Some(unit(i)),
        };
        let e = t
            .e_summands()
            .iter()
            .enumerate()
            .map(|(i, s)| piece(i, s.rank, s.degree))
            .collect();
        let f = t
            .f_summands()
            .iter()
            .enumerate()
            .map(|(j, s)| piece(ne + j, s.rank, s.degree))
            .collect();
        PairOracle {
            k,
            lattice: Lattice::new(w, &gens),
            e,
            f,
        }
    }

    fn eta(&self, i: usize) -> Vec<i64> {
        let mut v = vec![0; self.k + 3];
        match i {
            1 => v[self.k] = 1,
            2 => v[self.k + 1] = 1,
            _ => {
                v[self.k] = 1;
                v[self.k + 1] = 1;
            }
        }
        v
    }

    /// Indecomposable pieces of `S²E`.
    pub fn sym2_pieces(&self) -> Vec<Piece> {
        let mut out = Vec::new();
        for p in &self.e {
            let t = p.twist.as_ref().expect("summands carry twists");
            let t2 = scale(t, 2);
            match p.rank {
                1 => out.push(Piece {
                    rank: 1,
                    degree: 2 * p.degree,
                    twist: Some(t2),
                }),
                2 if p.degree % 2 == 0 => out.push(Piece {
                    rank: 3,
                    degree: 3 * p.degree,
                    twist: Some(t2),
                }),
                2 => {
                    for i in 1..=3 {
                        out.push(Piece {
                            rank: 1,
                            degree: p.degree,
                            twist: Some(add(&t2, &self.eta(i))),
                        });
                    }
                }
                3 if p.degree % 3 == 0 => {
                    let m = p.degree / 3;
                    out.push(Piece {
                        rank: 1,
                        degree: 2 * m,
                        twist: Some(t2.clone()),
                    });
                    out.push(Piece {
                        rank: 5,
                        degree: 10 * m,
                        twist: Some(t2),
                    });
                }
                3 => out.push(Piece {
                    rank: 6,
                    degree: 4 * p.degree,
                    twist: None,
                }),
                r => panic!("unexpected rank {r} in a rank-3 bundle"),
            }
        }
        for i in 0..self.e.len() {
            for j in i + 1..self.e.len() {
                let (a, b) = (&self.e[i], &self.e[j]);
                let (line, other) = if a.rank == 1 { (a, b) } else { (b, a) };
                assert_eq!(line.rank, 1, "rank 3 splits with at most one summand of rank 2");
                out.push(Piece {
                    rank: other.rank,
                    degree: other.degree + other.rank * line.degree,
                    twist: Some(add(line.twist.as_ref().unwrap(), other.twist.as_ref().unwrap())),
                });
            }
        }
        out
    }

    /// `h⁰(Hom(a, b))` for indecomposables of the generic member.
    pub fn hom(&self, a: &Piece, b: &Piece) -> i64 {
        let lhs = a.rank * b.degree;
        let rhs = b.rank * a.degree;
        if lhs > rhs {
            return lhs - rhs;
        }
        if lhs < rhs {
            return 0;
        }
        let (ta, tb) = (
            a.twist.as_ref().expect("slope-zero Hom needs the twist"),
            b.twist.as_ref().expect("slope-zero Hom needs the twist"),
        );
        let ha = gcd(a.rank, a.degree);
        let hb = gcd(b.rank, b.degree);
        let reduced = a.rank / ha;
        let diff: Vec<i64> = tb.iter().zip(ta).map(|(x, y)| reduced * (x - y)).collect();
        if self.lattice.contains(&diff) {
            ha.min(hb)
        } else {
            0
        }
    }

    pub fn h0_fs2e(&self) -> i64 {
        let pieces = self.sym2_pieces();
        self.f
            .iter()
            .map(|phi| pieces.iter().map(|p| self.hom(phi, p)).sum::<i64>())
            .sum()
    }

    fn h0_end(&self, parts: &[Piece]) -> i64 {
        parts
            .iter()
            .map(|a| parts.iter().map(|b| self.hom(a, b)).sum::<i64>())
            .sum()
    }

    pub fn h0_end_e(&self) -> i64 {
        self.h0_end(&self.e)
    }

    pub fn h0_end_f(&self) -> i64 {
        self.h0_end(&self.f)
    }

    pub fn moduli(&self) -> i64 {
        (self.k + 3 - self.lattice.rank()) as i64
    }

    pub fn covering(&self) -> i64 {
        self.moduli() + self.h0_fs2e() - self.h0_end_e() - self.h0_end_f() + 1
    }
}

// ---------------------------------------------------------------------------
// pencils spanned by two line pairs

/// A line `a + y·b` in the fibre coordinates.
#[derive(Clone, Debug)]
pub struct MovingLine {
    pub a: [i64; 3],
    pub b: [i64; 3],
}

impl MovingLine {
    pub fn at(&self, y: &BigRational) -> [BigRational; 3] {
        std::array::from_fn(|i| q(self.a[i]) + y * q(self.b[i]))
    }

    fn poly(&self, i: usize) -> Poly {
        Poly::from_ints(&[self.a[i], self.b[i]])
    }
}

/// `span{ℓ₁ℓ₂ + c₁ℓ₃ℓ₄, c₂ℓ₁ℓ₂ + ℓ₃ℓ₄}`, which is the pencil spanned by the two line pairs.
#[derive(Clone, Debug)]
pub struct LinePairPencil {
    pub lines: [MovingLine; 4],
    pub c: [i64; 2],
}

fn product_matrix(l: &MovingLine, m: &MovingLine) -> Mat3<Poly> {
    let half = qq(1, 2);
    std::array::from_fn(|i| {
        std::array::from_fn(|j| (&(&l.poly(i) * &m.poly(j)) + &(&l.poly(j) * &m.poly(i))).scale(&half))
    })
}

fn combine(a: &Mat3<Poly>, ca: i64, b: &Mat3<Poly>, cb: i64) -> Mat3<Poly> {
    std::array::from_fn(|i| std::array::from_fn(|j| &a[i][j].scale(&q(ca)) + &b[i][j].scale(&q(cb))))
}

fn cross(u: &[BigRational; 3], v: &[BigRational; 3]) -> [BigRational; 3] {
    [
        &u[1] * &v[2] - &u[2] * &v[1],
        &u[2] * &v[0] - &u[0] * &v[2],
        &u[0] * &v[1] - &u[1] * &v[0],
    ]
}

fn is_zero3(v: &[BigRational; 3]) -> bool {
    v.iter().all(Zero::is_zero)
}

/// Brute-force base locus of a line-pair pencil at one chart value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleFiber {
    NotRightCodim,
    Pattern(Vec<usize>),
}

impl OracleFiber {
    pub fn branched(&self) -> bool {
        match self {
            OracleFiber::NotRightCodim => true,
            OracleFiber::Pattern(p) => p.iter().any(|&m| m > 1),
        }
    }
}

impl LinePairPencil {
    pub fn pencil(&self) -> ConicPencil {
        let p12 = product_matrix(&self.lines[0], &self.lines[1]);
        let p34 = product_matrix(&self.lines[2], &self.lines[3]);
        let q1 = combine(&p12, 1, &p34, self.c[0]);
        let q2 = combine(&p12, self.c[1], &p34, 1);
        ConicPencil::new(q1, q2).expect("symmetric by construction")
    }

    /// The base locus is `{ℓᵢ ∩ ℓⱼ : i ∈ {1,2}, j ∈ {3,4}}`, counted with multiplicity.
    pub fn oracle(&self, y: &BigRational) -> OracleFiber {
        let l: Vec<[BigRational; 3]> = self.lines.iter().map(|m| m.at(y)).collect();
        if l.iter().any(is_zero3) {
            return OracleFiber::NotRightCodim;
        }
        let mut points: Vec<[BigRational; 3]> = Vec::new();
        for i in 0..2 {
            for j in 2..4 {
                let p = cross(&l[i], &l[j]);
                if is_zero3(&p) {
                    return OracleFiber::NotRightCodim;
                }
                points.push(p);
            }
        }
        let mut groups: Vec<([BigRational; 3], usize)> = Vec::new();
        for p in points {
            match groups.iter_mut().find(|(g, _)| is_zero3(&cross(g, &p))) {
                Some((_, n)) => *n += 1,
                None => groups.push((p, 1)),
            }
        }
        let mut pattern: Vec<usize> = groups.into_iter().map(|(_, n)| n).collect();
        pattern.sort_unstable_by(|a, b| b.cmp(a));
        OracleFiber::Pattern(pattern)
    }
}

fn random_vec(r: &mut StdRng, lo: i64, hi: i64) -> [i64; 3] {
    std::array::from_fn(|_| r.gen_range(lo..=hi))
}

fn cross_i(u: [i64; 3], v: [i64; 3]) -> [i64; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

/// A random line-pair pencil; with `concurrent = Some(y₀)` the line `ℓ₁`
/// passes through `ℓ₃ ∩ ℓ₄` at `y₀`, forcing a branched fibre there.
pub fn random_line_pair_pencil(r: &mut StdRng, concurrent: Option<i64>) -> LinePairPencil {
    let c = loop {
        let c = [r.gen_range(-3..=3), r.gen_range(-3..=3)];
        if c[0] * c[1] != 1 {
            break c;
        }
    };
    let line = |r: &mut StdRng| MovingLine {
        a: random_vec(r, -3, 3),
        b: random_vec(r, -2, 2),
    };
    let mut lines = [line(r), line(r), line(r), line(r)];
    if let Some(y0) = concurrent {
        let at = |m: &MovingLine| -> [i64; 3] { std::array::from_fn(|i| m.a[i] + y0 * m.b[i]) };
        let p = cross_i(at(&lines[2]), at(&lines[3]));
        let w = cross_i(p, random_vec(r, -2, 2));
        let b = lines[0].b;
        // ℓ₁(y₀) = w
        lines[0].a = std::array::from_fn(|i| w[i] - y0 * b[i]);
    }
    LinePairPencil { lines, c }
}

/// Chart values used to compare fibres.
pub fn fibre_grid() -> Vec<BigRational> {
    let mut g: Vec<BigRational> = (-3..=3).map(q).collect();
    g.extend([qq(1, 2), qq(-1, 3), qq(5, 4)]);
    g
}
