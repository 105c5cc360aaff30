//! A quadruple cover over an affine chart as the base locus of a pencil of
//! conics `ξ₁q₁(y) + ξ₂q₂(y)` in the fibers of `P(E)`.
//!
//! Each `qₖ` is a symmetric 3×3 matrix `M` of polynomials in the chart
//! coordinate `y`, read as `q = eᵀMe`, so an off-diagonal entry is half the
//! coefficient of `eᵢeⱼ`.
//!
//! Base points are found by projecting from a center `P`: moving `P` to
//! `(1:0:0)` and eliminating the first coordinate leaves a binary quartic
//! whose roots are the lines through `P` meeting the base locus.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::poly::{rat, Poly};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConicError {
    #[error("coefficient matrix {0} is not symmetric")]
    NotSymmetric(usize),
    #[error("both conics vanish identically")]
    BothZero,
    #[error("both conics vanish at y = {0}")]
    BothZeroAt(BigRational),
    #[error("conics share a component at y = {0}")]
    NotRightCodim(BigRational),
    #[error("no projection center gives a usable elimination at y = {0}")]
    DegenerateElimination(BigRational),
    #[error("pencil is reducible: {0}")]
    Reducible(Degeneration),
    #[error("every fiber is branched")]
    IdenticallyBranched,
    #[error("cannot read pencil: {0}")]
    Parse(String),
}

pub type Mat3<T> = [[T; 3]; 3];

/// Two symmetric matrices of polynomials in the chart coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConicPencil {
    members: [Mat3<Poly>; 2],
}

impl ConicPencil {
    pub fn new(a1: Mat3<Poly>, a2: Mat3<Poly>) -> Result<Self, ConicError> {
        for (k, m) in [&a1, &a2].into_iter().enumerate() {
            for i in 0..3 {
                for j in 0..i {
                    if m[i][j] != m[j][i] {
                        return Err(ConicError::NotSymmetric(k + 1));
                    }
                }
            }
        }
        let zero = |m: &Mat3<Poly>| m.iter().flatten().all(Poly::is_zero);
        if zero(&a1) && zero(&a2) {
            return Err(ConicError::BothZero);
        }
        Ok(ConicPencil { members: [a1, a2] })
    }

    /// Constant-coefficient pencil from integer matrices.
    pub fn constant(a1: [[i64; 3]; 3], a2: [[i64; 3]; 3]) -> Result<Self, ConicError> {
        let lift = |m: [[i64; 3]; 3]| m.map(|row| row.map(|x| Poly::from_ints(&[x])));
        ConicPencil::new(lift(a1), lift(a2))
    }

    /// Builds the matrix of a quadratic form from its monomial coefficients
    /// `[e1², e2², e3², e1e2, e1e3, e2e3]`.
    pub fn form_matrix(c: [Poly; 6]) -> Mat3<Poly> {
        let half = |p: &Poly| p.scale(&BigRational::new(BigInt::from(1), BigInt::from(2)));
        let [s11, s22, s33, s12, s13, s23] = c;
        let (h12, h13, h23) = (half(&s12), half(&s13), half(&s23));
        [
            [s11, h12.clone(), h13.clone()],
            [h12, s22, h23.clone()],
            [h13, h23, s33],
        ]
    }

    pub fn members(&self) -> &[Mat3<Poly>; 2] {
        &self.members
    }

    pub fn max_degree(&self) -> usize {
        self.members
            .iter()
            .flatten()
            .flatten()
            .filter_map(Poly::degree)
            .max()
            .unwrap_or(0)
    }

    pub fn at(&self, y: &BigRational) -> [Mat3<BigRational>; 2] {
        self.members
            .clone()
            .map(|m| m.map(|row| row.map(|p| p.eval(y))))
    }

    pub fn from_json(text: &str) -> Result<Self, ConicError> {
        let file: PencilFile = serde_json::from_str(text).map_err(|e| ConicError::Parse(e.to_string()))?;
        let conv = |m: &Vec<Vec<Vec<Value>>>| -> Result<Mat3<Poly>, ConicError> {
            if m.len() != 3 || m.iter().any(|r| r.len() != 3) {
                return Err(ConicError::Parse("each matrix must be 3×3".into()));
            }
            let mut out: Mat3<Poly> = Default::default();
            for i in 0..3 {
                for j in 0..3 {
                    let c = m[i][j].iter().map(parse_rational).collect::<Result<Vec<_>, _>>()?;
                    out[i][j] = Poly::new(c);
                }
            }
            Ok(out)
        };
        ConicPencil::new(conv(&file.a1)?, conv(&file.a2)?)
    }

    pub fn to_json(&self) -> String {
        let conv = |m: &Mat3<Poly>| -> Vec<Vec<Vec<Value>>> {
            m.iter()
                .map(|row| row.iter().map(|p| p.coeffs().iter().map(rational_value).collect()).collect())
                .collect()
        };
        let file = PencilFile {
            a1: conv(&self.members[0]),
            a2: conv(&self.members[1]),
        };
        serde_json::to_string(&file).expect("plain data serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct PencilFile {
    #[serde(rename = "A1")]
    a1: Vec<Vec<Vec<Value>>>,
    #[serde(rename = "A2")]
    a2: Vec<Vec<Vec<Value>>>,
}

fn parse_rational(v: &Value) -> Result<BigRational, ConicError> {
    let bad = || ConicError::Parse(format!("not a rational coefficient: {v}"));
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(rat)
            .ok_or_else(bad),
        Value::String(s) => {
            let s = s.trim();
            match s.split_once('/') {
                Some((p, q)) => {
                    let p: BigInt = p.trim().parse().map_err(|_| bad())?;
                    let q: BigInt = q.trim().parse().map_err(|_| bad())?;
                    if q.is_zero() {
                        return Err(bad());
                    }
                    Ok(BigRational::new(p, q))
                }
                None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
            }
        }
        _ => Err(bad()),
    }
}

fn rational_value(q: &BigRational) -> Value {
    if q.is_integer() {
        if let Ok(n) = i64::try_from(q.to_integer()) {
            return Value::from(n);
        }
    }
    Value::from(q.to_string())
}

/// Projection centers tried in order.
const CENTERS: [[i64; 3]; 9] = [
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 1, 1],
    [1, 2, 5],
    [3, 1, 7],
    [2, 7, 3],
    [5, 3, 11],
    [7, 11, 2],
];

/// Coefficient arithmetic shared by numeric fibres and the symbolic pencil.
trait Coeff: Clone {
    fn zero() -> Self;
    fn vanishes(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn times(&self, k: i64) -> Self;
}

impl Coeff for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn vanishes(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn times(&self, k: i64) -> Self {
        self * rat(k)
    }
}

impl Coeff for Poly {
    fn zero() -> Self {
        Poly::zero()
    }
    fn vanishes(&self) -> bool {
        self.is_zero()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn times(&self, k: i64) -> Self {
        self.scale(&rat(k))
    }
}

/// A change of coordinates sending `(1:0:0)` to `center`, as columns.
fn frame(center: [i64; 3]) -> [[i64; 3]; 3] {
    let e = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
    for (j, k) in [(1, 2), (0, 2), (0, 1)] {
        let cols = [center, e[j], e[k]];
        let det = cols[0][0] * (cols[1][1] * cols[2][2] - cols[1][2] * cols[2][1])
            - cols[1][0] * (cols[0][1] * cols[2][2] - cols[0][2] * cols[2][1])
            + cols[2][0] * (cols[0][1] * cols[1][2] - cols[0][2] * cols[1][1]);
        if det != 0 {
            return cols;
        }
    }
    unreachable!("a nonzero center completes to a basis")
}

/// `Tᵀ M T` where column `c` of `T` is `cols[c]`.
fn congruent<T: Coeff>(m: &Mat3<T>, cols: &[[i64; 3]; 3]) -> Mat3<T> {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut s = T::zero();
            for a in 0..3 {
                for b in 0..3 {
                    let k = cols[i][a] * cols[j][b];
                    if k != 0 && !m[a][b].vanishes() {
                        s = s.add(&m[a][b].times(k));
                    }
                }
            }
            s
        })
    })
}

/// Binary forms in `(v, w)`, coefficients from `vᵏ` down to `wᵏ`.
fn form_mul<T: Coeff>(a: &[T], b: &[T]) -> Vec<T> {
    let mut c = vec![T::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            c[i + j] = c[i + j].add(&x.mul(y));
        }
    }
    c
}

fn form_sub<T: Coeff>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| x.sub(y)).collect()
}

fn form_scale<T: Coeff>(a: &[T], k: &T) -> Vec<T> {
    a.iter().map(|x| x.mul(k)).collect()
}

/// Resultant in the first coordinate after moving `center` to `(1:0:0)`,
/// or `None` when the center lies on both conics.
fn eliminant<T: Coeff>(ms: &[Mat3<T>; 2], center: [i64; 3]) -> Option<Vec<T>> {
    let cols = frame(center);
    let parts: Vec<(T, Vec<T>, Vec<T>)> = ms
        .iter()
        .map(|m| {
            let m = congruent(m, &cols);
            let a = m[0][0].clone();
            let b = vec![m[0][1].times(2), m[0][2].times(2)];
            let c = vec![m[1][1].clone(), m[1][2].times(2), m[2][2].clone()];
            (a, b, c)
        })
        .collect();
    let (a1, b1, c1) = &parts[0];
    let (a2, b2, c2) = &parts[1];
    if a1.vanishes() && a2.vanishes() {
        return None;
    }
    let ac = form_sub(&form_scale(c2, a1), &form_scale(c1, a2));
    let ab = form_sub(&form_scale(b2, a1), &form_scale(b1, a2));
    let bc = form_sub(&form_mul(b1, c2), &form_mul(b2, c1));
    Some(form_sub(&form_mul(&ac, &ac), &form_mul(&ab, &bc)))
}

fn conics_at(p: &ConicPencil, y: &BigRational) -> Result<[Mat3<BigRational>; 2], ConicError> {
    let ms = p.at(y);
    if ms.iter().flatten().flatten().all(Zero::is_zero) {
        return Err(ConicError::BothZeroAt(y.clone()));
    }
    Ok(ms)
}

pub fn right_codim_at(p: &ConicPencil, y: &BigRational) -> Result<bool, ConicError> {
    let ms = conics_at(p, y)?;
    // a center off the base locus sees a common component as an identically zero eliminant
    for c in CENTERS {
        if let Some(r) = eliminant(&ms, c) {
            return Ok(r.iter().any(|x| !x.is_zero()));
        }
    }
    // nine centers on a common curve of both conics
    Ok(false)
}

/// Base points seen from one center, grouped by multiplicity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BasePointGroup {
    /// Square-free factor of the eliminant in the affine coordinate `v = e₂/e₃`,
    /// ascending coefficients; empty for the point at `e₃ = 0`.
    pub factor: Vec<String>,
    pub count: usize,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiberAnalysis {
    pub right_codim: bool,
    pub center: [i64; 3],
    pub base_points: Vec<BasePointGroup>,
    /// Multiplicities of the distinct base points, in decreasing order.
    pub pattern: Vec<usize>,
    pub branched: bool,
    pub simple: bool,
}

fn groups_of(form: &[BigRational]) -> Vec<BasePointGroup> {
    let at_infinity = form.iter().take_while(|c| c.is_zero()).count();
    let affine = Poly::new(form.iter().rev().cloned().collect());
    let mut out: Vec<BasePointGroup> = affine
        .squarefree()
        .into_iter()
        .map(|(f, m)| BasePointGroup {
            factor: f.coeffs().iter().map(ToString::to_string).collect(),
            count: f.degree().unwrap_or(0),
            multiplicity: m,
        })
        .collect();
    if at_infinity > 0 {
        out.push(BasePointGroup {
            factor: Vec::new(),
            count: 1,
            multiplicity: at_infinity,
        });
    }
    out
}

fn pattern_of(groups: &[BasePointGroup]) -> Vec<usize> {
    let mut p: Vec<usize> = groups
        .iter()
        .flat_map(|g| std::iter::repeat_n(g.multiplicity, g.count))
        .collect();
    p.sort_unstable_by(|a, b| b.cmp(a));
    p
}

pub fn fiber_analysis(p: &ConicPencil, y: &BigRational) -> Result<FiberAnalysis, ConicError> {
    let ms = conics_at(p, y)?;
    if !right_codim_at(p, y)? {
        return Err(ConicError::NotRightCodim(y.clone()));
    }
    // projections only merge base points, so the finest pattern is the true one
    let mut best: Option<FiberAnalysis> = None;
    for c in CENTERS {
        let Some(form) = eliminant(&ms, c) else { continue };
        if form.iter().all(Zero::is_zero) {
            continue;
        }
        let groups = groups_of(&form);
        let pattern = pattern_of(&groups);
        if pattern.iter().sum::<usize>() != 4 {
            continue;
        }
        if best.as_ref().is_none_or(|b| pattern.len() > b.pattern.len()) {
            let branched = pattern.iter().any(|&m| m >= 2);
            let simple = pattern == [2, 1, 1];
            best = Some(FiberAnalysis {
                right_codim: true,
                center: c,
                base_points: groups,
                pattern,
                branched,
                simple,
            });
        }
    }
    best.ok_or_else(|| ConicError::DegenerateElimination(y.clone()))
}

/// Discriminant of the binary quartic `a v⁴ + b v³w + c v²w² + d vw³ + e w⁴`,
/// zero exactly when it has a repeated root on `P¹`.
pub fn quartic_discriminant(q: &[BigRational]) -> BigRational {
    discriminant4(q) / rat(27)
}

/// `27 ·` the quartic discriminant, `4I³ − J²`.
fn discriminant4<T: Coeff>(q: &[T]) -> T {
    let [a, b, c, d, e] = [&q[0], &q[1], &q[2], &q[3], &q[4]];
    let i = a.mul(e).times(12).sub(&b.mul(d).times(3)).add(&c.mul(c));
    let j = a
        .mul(c)
        .mul(e)
        .times(72)
        .add(&b.mul(c).mul(d).times(9))
        .sub(&a.mul(d).mul(d).times(27))
        .sub(&e.mul(b).mul(b).times(27))
        .sub(&c.mul(c).mul(c).times(2));
    i.mul(&i).mul(&i).times(4).sub(&j.mul(&j))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BranchFactor {
    /// Monic square-free factor in `y`, ascending coefficients.
    pub factor: Vec<String>,
    pub degree: usize,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchDivisor {
    pub polynomial: Poly,
    pub factors: Vec<(Poly, usize)>,
}

impl BranchDivisor {
    pub fn degree(&self) -> usize {
        self.polynomial.degree().unwrap_or(0)
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|(_, m)| *m == 1)
    }

    pub fn factor_report(&self) -> Vec<BranchFactor> {
        self.factors
            .iter()
            .map(|(f, m)| BranchFactor {
                factor: f.coeffs().iter().map(ToString::to_string).collect(),
                degree: f.degree().unwrap_or(0),
                multiplicity: *m,
            })
            .collect()
    }
}

/// Discriminant of the eliminant from one center, as a polynomial in `y`
/// (up to a constant factor).
fn discriminant_in_y(p: &ConicPencil, center: [i64; 3]) -> Poly {
    match eliminant(&p.members, center) {
        Some(form) => discriminant4(&form),
        None => Poly::zero(),
    }
}

pub fn branch_divisor(p: &ConicPencil) -> Result<BranchDivisor, ConicError> {
    let pattern = degeneration_pattern(p);
    if matches!(pattern, Degeneration::LineInFibers | Degeneration::SectionComponent) {
        return Err(ConicError::Reducible(pattern));
    }
    // each center adds spurious factors where it lines up with two base points;
    // the gcd keeps only the genuine collisions
    let mut acc = Poly::zero();
    for c in CENTERS {
        let d = discriminant_in_y(p, c);
        acc = Poly::gcd(&acc, &d);
        if acc.degree() == Some(0) {
            break;
        }
    }
    if acc.is_zero() {
        return Err(ConicError::IdenticallyBranched);
    }
    let factors = acc.squarefree();
    Ok(BranchDivisor {
        polynomial: acc,
        factors,
    })
}

/// Genus of the cover from the number of simple branch points over a genus-one base.
pub fn riemann_hurwitz_genus(branch_points: usize) -> usize {
    branch_points / 2 + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneration {
    None,
    SectionComponent,
    ThroughDoubleCover,
    LineInFibers,
}

impl fmt::Display for Degeneration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Degeneration::None => "none",
            Degeneration::SectionComponent => "section_component",
            Degeneration::ThroughDoubleCover => "through_double_cover",
            Degeneration::LineInFibers => "line_in_fibers",
        };
        f.write_str(s)
    }
}

/// Structural vanishing of coefficients along coordinate directions.
pub fn degeneration_pattern(p: &ConicPencil) -> Degeneration {
    let [m1, m2] = &p.members;
    let both_zero = |i: usize, j: usize| m1[i][j].is_zero() && m2[i][j].is_zero();
    // every member contains the line eᵢ = 0
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        if both_zero(j, j) && both_zero(k, k) && both_zero(j, k) {
            return Degeneration::LineInFibers;
        }
    }
    // every member passes through a coordinate point
    if (0..3).any(|i| both_zero(i, i)) {
        return Degeneration::SectionComponent;
    }
    // one member has no monomial in eᵢ
    for m in [m1, m2] {
        if (0..3).any(|i| m[i].iter().all(Poly::is_zero)) {
            return Degeneration::ThroughDoubleCover;
        }
    }
    Degeneration::None
}

/// Six simple branch points: on the conic `e₁e₃ = e₂²`, parametrized by
/// `(1 : s : s²)`, the second member `e₃² + e₁e₂ + y²e₁²` cuts out
/// `s⁴ + s + y² = 0`, whose discriminant is `256y⁶ − 27`.
pub fn six_branch_pencil() -> ConicPencil {
    let c = |x: i64| Poly::from_ints(&[x]);
    let z = Poly::zero;
    let q1 = ConicPencil::form_matrix([z(), c(-1), z(), z(), c(1), z()]);
    let q2 = ConicPencil::form_matrix([Poly::from_ints(&[0, 0, 1]), z(), c(1), c(1), z(), z()]);
    ConicPencil::new(q1, q2).expect("symmetric by construction")
}
