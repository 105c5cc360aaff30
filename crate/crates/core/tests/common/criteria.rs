//! One check per acceptance criterion. Each returns a short summary on
//! success and the first discrepancy on failure.

use std::time::{Duration, Instant};

use num_traits::Zero;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::Rng;

use quadcover::bundle::{
    dual, end_bundle, even_power_multiplicities, sym2, sym_n_rank2, tensor, wedge2, Bundle, Resolved,
};
use quadcover::cohomology::{chi, h0_end, h0h1};
use quadcover::conics::{
    branch_divisor, fiber_analysis, right_codim_at, riemann_hurwitz_genus, six_branch_pencil, ConicError,
};
use quadcover::moduli::{analyze, enumerate_and_verify, enumerate_types, PairType, Status, Summand, Verdict};
use quadcover::picard::AbGroup;
use quadcover::poly::Poly;
use quadcover::prym::{build_homology, prym_lattice, prym_polarization, BranchData};

use super::*;

pub type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// ---------------------------------------------------------------------------
// 1. dimension count

/// The table of admissible pairs: `E` indecomposable unless `3 | e`, in which
/// case three lines of degree `e/3`; `F` indecomposable unless `2 | e`, in which
/// case two lines of degree `e/2`.
pub fn admissible_shape(e: i64) -> (Vec<Summand>, Vec<Summand>) {
    let es = if e % 3 == 0 {
        vec![Summand::new(1, e / 3); 3]
    } else {
        vec![Summand::new(3, e)]
    };
    let fs = if e % 2 == 0 {
        vec![Summand::new(1, e / 2); 2]
    } else {
        vec![Summand::new(2, e)]
    };
    (es, fs)
}

pub const MODULI_BUDGET: Duration = Duration::from_secs(120);

pub fn dimension_count() -> Outcome {
    let start = Instant::now();
    let mut total = 0;
    for e in 1..=6 {
        let report = enumerate_and_verify(e, 4).map_err(|err| format!("e = {e}: {err}"))?;
        let n = 2 * e;
        let accepted = report.accepted();
        ensure!(accepted.len() == 1, "e = {e}: {} accepted types", accepted.len());
        let (es, fs) = admissible_shape(e);
        let pair = &accepted[0].pair;
        ensure!(
            pair.e_summands() == es.as_slice() && pair.f_summands() == fs.as_slice(),
            "e = {e}: accepted {pair}"
        );
        // the accepted summands are pairwise non-isomorphic
        let iso = pair.iso_classes();
        let distinct = (0..iso.len()).all(|i| (0..i).all(|j| iso[i] != iso[j]));
        ensure!(distinct, "e = {e}: accepted type identifies summands: {pair}");
        for v in &report.verdicts {
            ensure!(v.status != Status::Unresolved, "e = {e}: unresolved {}", v.pair);
            if v.status != Status::Accepted && !v.status.is_excluded() {
                ensure!(
                    v.covering_moduli <= n - 1,
                    "e = {e}: {} has covering {} > {}",
                    v.pair,
                    v.covering_moduli,
                    n - 1
                );
            }
        }
        total += report.verdicts.len();
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < MODULI_BUDGET, "took {elapsed:?}");
    Ok(format!("{total} types over e = 1..6 in {elapsed:.2?}"))
}

// ---------------------------------------------------------------------------
// 2. Euler characteristic of F̌ ⊗ S²E

pub fn euler_characteristic(seed: u64) -> Outcome {
    let g = group();
    let mut r = rng(seed);
    for i in 0..100 {
        let e = r.gen_range(-10..=10);
        let (big, small) = random_pair(&g, e, &mut r);
        // Riemann–Roch by hand: deg S²E = (rank E + 1)·deg E, rank S²E = 6
        let rk_s2 = 6;
        let deg_s2 = 4 * big.degree();
        let expected = small.rank() * deg_s2 - rk_s2 * small.degree();
        let b = Resolved::from(dual(&small)).tensor(&sym2(&big));
        ensure!(b.rank() == 12, "pair {i}: rank {}", b.rank());
        ensure!(chi(&b) == expected && expected == 2 * e, "pair {i}: E = {big}, F = {small}, χ = {}", chi(&b));
        let c = h0h1(&b);
        if c.resolved {
            ensure!(c.h0 - c.h1 == 2 * e, "pair {i}: h⁰ − h¹ = {}", c.h0 - c.h1);
        }
    }
    Ok("100 pairs".into())
}

// ---------------------------------------------------------------------------
// 3. symmetric powers of a rank-two bundle

fn copies(b: &Bundle, n: usize) -> Bundle {
    (0..n).fold(Bundle::zero(b.group()), |acc, _| acc.direct_sum(b))
}

fn sum(parts: &[Bundle], g: &std::sync::Arc<AbGroup>) -> Bundle {
    parts.iter().fold(Bundle::zero(g), |acc, b| acc.direct_sum(b))
}

pub fn symmetric_powers(seed: u64) -> Outcome {
    let g = AbGroup::standard(1);
    let mut r = rng(seed);
    let etas = g.two_torsion().expect("standard group has 2-torsion");
    for _ in 0..10 {
        let d = 2 * r.gen_range(-5..=4) + 1;
        let t = random_twist(&g, &mut r);
        let e = Bundle::indecomposable(2, d, t.clone()).unwrap();
        let w = Bundle::line(d, t.scale(2));
        ensure!(wedge2(&e).bundle() == Some(&w), "E = {e}: ∧²E = {}", wedge2(&e));
        let s = |n: u32| -> Result<Bundle, String> {
            if n == 0 {
                return Ok(Bundle::line(0, g.zero()));
            }
            sym_n_rank2(&e, n).map_err(|err| err.to_string())
        };
        for n in 1..=10u32 {
            let lhs = tensor(&s(n)?, &e);
            let rhs = Resolved::from(s(n + 1)?).direct_sum(&tensor(&w, &s(n - 1)?));
            ensure!(lhs.is_exact(), "E = {e}: Sⁿ ⊗ E left the rule table at n = {n}");
            ensure!(lhs == rhs, "E = {e}, n = {n}: {lhs} ≠ {rhs}");
            ensure!(s(n)?.rank() == i64::from(n) + 1, "E = {e}: rank of S^{n}");
        }
        for k in 1..=5i64 {
            let (a, b) = even_power_multiplicities(k);
            ensure!(a + 3 * b == 2 * k + 1, "k = {k}: a = {a}, b = {b}");
            let s2k = s(2 * k as u32)?;
            let base = t.scale(2 * k);
            let plain = s2k.summands().iter().filter(|x| x.twist() == &base).count() as i64;
            ensure!(plain == a && s2k.summands().len() as i64 == 2 * k + 1, "E = {e}: S^{} = {s2k}", 2 * k);
        }
        // closed forms for k = 1, 2
        let twisted = |deg: i64, tw: &quadcover::picard::GroupElem| -> Bundle {
            sum(&etas[1..].iter().map(|eta| Bundle::line(deg, tw + eta)).collect::<Vec<_>>(), &g)
        };
        let s2 = twisted(d, &t.scale(2));
        let s3 = copies(&Bundle::indecomposable(2, 3 * d, t.scale(3)).unwrap(), 2);
        let s4 = copies(&Bundle::line(2 * d, t.scale(4)), 2).direct_sum(&twisted(2 * d, &t.scale(4)));
        ensure!(s(1)? == e, "S¹E ≠ E");
        ensure!(s(2)? == s2, "E = {e}: S²E = {}, expected {s2}", s(2)?);
        ensure!(s(3)? == s3, "E = {e}: S³E = {}, expected {s3}", s(3)?);
        ensure!(s(4)? == s4, "E = {e}: S⁴E = {}, expected {s4}", s(4)?);
    }
    Ok("10 bundles, n ≤ 10".into())
}

// ---------------------------------------------------------------------------
// 4. decomposition rules

pub fn rule_table() -> Outcome {
    let g = AbGroup::standard(1);
    let f = |r: i64| Bundle::unipotent(&g, r).unwrap();
    let fs = |rs: &[i64]| sum(&rs.iter().map(|&r| f(r)).collect::<Vec<_>>(), &g);
    let cases: [(&str, Resolved, Bundle); 4] = [
        ("F2 ⊗ F3", tensor(&f(2), &f(3)), fs(&[2, 4])),
        ("F3 ⊗ F3", tensor(&f(3), &f(3)), fs(&[1, 3, 5])),
        ("S²F3", sym2(&f(3)), fs(&[1, 5])),
        ("∧²F3", wedge2(&f(3)), fs(&[3])),
    ];
    for (name, got, want) in cases {
        ensure!(got.bundle() == Some(&want), "{name} = {got}, expected {want}");
    }
    let end = end_bundle(&f(2));
    ensure!(end.bundle() == Some(&fs(&[1, 3])), "End F2 = {end}");
    ensure!(h0h1(&end).h0 == 2 && h0_end(&f(2)) == 2, "h⁰(End F2) ≠ 2");
    Ok("5 rules".into())
}

// ---------------------------------------------------------------------------
// 5. cohomology axioms

pub fn cohomology_axioms(seed: u64) -> Outcome {
    let g = group();
    let mut r = rng(seed);
    let mut checked = 0;
    while checked < 500 {
        let b = random_bundle(&g, &mut r);
        let candidate: Resolved = match r.gen_range(0..4) {
            0 => b.into(),
            1 => tensor(&b, &random_bundle(&g, &mut r)),
            2 => sym2(&b),
            _ => wedge2(&b),
        };
        let Some(b) = candidate.into_bundle() else { continue };
        let c = h0h1(&b);
        if !c.resolved {
            continue;
        }
        let deg: i64 = b.summands().iter().map(|s| s.degree()).sum();
        ensure!(c.h0 - c.h1 == deg, "{b}: h⁰ = {}, h¹ = {}", c.h0, c.h1);
        let dual_report = h0h1(&dual(&b));
        ensure!(dual_report.resolved && c.h1 == dual_report.h0, "{b}: h¹ ≠ h⁰ of the dual");
        checked += 1;
    }
    Ok("500 bundles".into())
}

// ---------------------------------------------------------------------------
// 6. polarization of the three named branch data

pub const PRYM_BUDGET: Duration = Duration::from_secs(1);

fn timed_polarization(b: &BranchData) -> Result<(usize, i64, Vec<i64>, Duration), String> {
    let start = Instant::now();
    let h = build_homology(b).map_err(|e| e.to_string())?;
    let rep = prym_polarization(&h).map_err(|e| e.to_string())?;
    Ok((rep.genus, rep.d2, rep.polarization, start.elapsed()))
}

pub fn named_polarizations() -> Outcome {
    let cases: [(&str, BranchData, Option<usize>, i64, Vec<i64>); 3] = [
        ("full", full_example(), Some(4), 1, vec![1, 1, 4]),
        ("imprimitive", imprimitive_example(), None, 2, vec![1, 1, 2]),
        ("double cover", double_cover_example(), None, 1, vec![2]),
    ];
    let mut times = Vec::new();
    for (name, b, genus, d2, pol) in cases {
        let (g, got_d2, got_pol, t) = timed_polarization(&b)?;
        ensure!(genus.is_none_or(|x| x == g), "{name}: genus {g}");
        ensure!(got_d2 == d2 && got_pol == pol, "{name}: d2 = {got_d2}, polarization {got_pol:?}");
        ensure!(t < PRYM_BUDGET, "{name}: took {t:?}");
        times.push(format!("{t:.1?}"));
    }
    Ok(format!("times {}", times.join(", ")))
}

// ---------------------------------------------------------------------------
// 7. invariants of random covers

fn to_i128(m: &quadcover::intmat::IntMat) -> Vec<Vec<i128>> {
    m.to_rows()
        .into_iter()
        .map(|r| r.into_iter().map(i128::from).collect())
        .collect()
}

fn mat_mul(a: &[Vec<i128>], b: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| (0..cols).map(|j| row.iter().zip(b).map(|(x, r)| x * r[j]).sum()).collect())
        .collect()
}

fn transpose(a: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// gcd of the maximal minors of a tall matrix: 1 iff its columns span a saturated sublattice.
fn maximal_minor_gcd(k: &[Vec<i128>]) -> i128 {
    let rows = k.len();
    let cols = k.first().map_or(0, Vec::len);
    let mut acc = 0;
    let mut choose = vec![0usize; cols];
    fn walk(
        start: usize,
        depth: usize,
        rows: usize,
        choose: &mut Vec<usize>,
        k: &[Vec<i128>],
        acc: &mut i128,
    ) {
        if *acc == 1 {
            return;
        }
        if depth == choose.len() {
            let m: Vec<Vec<i128>> = choose.iter().map(|&i| k[i].clone()).collect();
            *acc = gcd_i128(*acc, det_i128(&m));
            return;
        }
        for i in start..rows {
            choose[depth] = i;
            walk(i + 1, depth + 1, rows, choose, k, acc);
        }
    }
    walk(0, 0, rows, &mut choose, k, &mut acc);
    acc
}

pub fn check_cover(b: &BranchData) -> Result<(), String> {
    let d = b.degree();
    let n = b.sigmas.len();
    let h = build_homology(b).map_err(|e| e.to_string())?;
    let g = h.genus;
    ensure!(2 * g == n + 2, "d = {d}, n = {n}: genus {g}");
    let form = to_i128(&h.intersection);
    ensure!(form.len() == 2 * g, "intersection matrix has size {}", form.len());
    let alternating = (0..2 * g).all(|i| form[i][i] == 0 && (0..i).all(|j| form[i][j] == -form[j][i]));
    ensure!(alternating, "intersection form is not alternating");
    ensure!(det_i128(&form).abs() == 1, "intersection form is not unimodular");
    let push = to_i128(&h.pushforward);
    let pull = to_i128(&h.transfer);
    let id = mat_mul(&push, &pull);
    let expected = vec![vec![d as i128, 0], vec![0, d as i128]];
    ensure!(id == expected, "π_* π^* = {id:?}");
    let k = to_i128(&prym_lattice(&h));
    ensure!(k.len() == 2 * g && k.first().map_or(0, Vec::len) == 2 * g - 2, "kernel basis has the wrong shape");
    ensure!(mat_mul(&push, &k).iter().flatten().all(|&x| x == 0), "kernel basis is not in the kernel");
    ensure!(maximal_minor_gcd(&k) == 1, "kernel basis spans a non-saturated sublattice");
    // index of π_* H₁ is the gcd of its 2×2 minors
    let mut minors = 0;
    for i in 0..2 * g {
        for j in i + 1..2 * g {
            minors = gcd_i128(minors, push[0][i] * push[1][j] - push[0][j] * push[1][i]);
        }
    }
    let rep = prym_polarization(&h).map_err(|e| e.to_string())?;
    ensure!(i128::from(rep.d2) == minors, "d2 = {} but minors give {minors}", rep.d2);
    let restricted = mat_mul(&mat_mul(&transpose(&k), &form), &k);
    let prod: i128 = rep.polarization.iter().map(|&x| i128::from(x)).product();
    ensure!(det_i128(&restricted) == prod * prod, "polarization {:?} disagrees with the Gram determinant", rep.polarization);
    let chain = rep.polarization.windows(2).all(|w| w[1] % w[0] == 0);
    ensure!(rep.polarization.len() == g - 1 && chain, "polarization {:?} is not a divisor chain", rep.polarization);
    Ok(())
}

pub fn random_cover_invariants(seed: u64) -> Outcome {
    let mut r = rng(seed);
    for i in 0..100 {
        let d = r.gen_range(2..=5);
        let n = 2 * r.gen_range(1..=5);
        let b = random_branch_data(d, n, &mut r);
        check_cover(&b).map_err(|e| format!("datum {i} ({b:?}): {e}"))?;
    }
    Ok("100 branch data".into())
}

// ---------------------------------------------------------------------------
// 8. conic pencils

/// Compares one pencil against the line-pair oracle; returns whether its
/// branch divisor could be checked.
pub fn check_pencil(lp: &LinePairPencil) -> Result<bool, String> {
    let p = lp.pencil();
    let grid = fibre_grid();
    for y in &grid {
        let want = lp.oracle(y);
        match &want {
            OracleFiber::NotRightCodim => {
                let ok = matches!(right_codim_at(&p, y), Ok(false) | Err(ConicError::BothZeroAt(_)));
                ensure!(ok, "y = {y}: oracle sees a common component");
            }
            OracleFiber::Pattern(pattern) => {
                ensure!(right_codim_at(&p, y) == Ok(true), "y = {y}: expected right codimension");
                let fa = fiber_analysis(&p, y).map_err(|e| format!("y = {y}: {e}"))?;
                ensure!(&fa.pattern == pattern, "y = {y}: pattern {:?}, oracle {pattern:?}", fa.pattern);
                ensure!(fa.branched == want.branched(), "y = {y}: branched flag");
            }
        }
    }
    match branch_divisor(&p) {
        Ok(bd) => {
            for y in &grid {
                let vanishes = bd.polynomial.eval(y).is_zero();
                ensure!(vanishes == lp.oracle(y).branched(), "y = {y}: branch divisor {} disagrees", bd.polynomial);
            }
            Ok(true)
        }
        Err(ConicError::IdenticallyBranched) => {
            ensure!(grid.iter().all(|y| lp.oracle(y).branched()), "reported identically branched");
            Ok(false)
        }
        Err(ConicError::Reducible(_)) => Ok(false),
        Err(e) => Err(e.to_string()),
    }
}

pub fn conic_oracle(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let mut divisors = 0;
    for i in 0..50 {
        let concurrent = (i % 2 == 0).then(|| r.gen_range(-2..=2));
        let lp = random_line_pair_pencil(&mut r, concurrent);
        if check_pencil(&lp).map_err(|e| format!("pencil {i} {lp:?}: {e}"))? {
            divisors += 1;
        }
    }
    let p = six_branch_pencil();
    let bd = branch_divisor(&p).map_err(|e| e.to_string())?;
    // s⁴ + s + y² has discriminant 256y⁶ − 27
    let expected = Poly::from_ints(&[-27, 0, 0, 0, 0, 0, 256]).monic();
    ensure!(bd.polynomial.monic() == expected, "crafted pencil: branch divisor {}", bd.polynomial);
    ensure!(bd.degree() == 6 && bd.is_squarefree(), "crafted pencil: not square-free of degree 6");
    ensure!(riemann_hurwitz_genus(bd.degree()) == 4, "crafted pencil: genus");
    Ok(format!("50 pencils ({divisors} branch divisors compared), crafted pencil g = 4"))
}

// ---------------------------------------------------------------------------
// 9. the dimension count recomputed

pub fn recompute(v: &Verdict) -> Result<(), String> {
    let o = PairOracle::new(&v.pair);
    let got = (v.moduli_of_pair, v.h0_fs2e, v.h0_end_e, v.h0_end_f, v.covering_moduli);
    let want = (o.moduli(), o.h0_fs2e(), o.h0_end_e(), o.h0_end_f(), o.covering());
    ensure!(got == want, "{}: library {got:?}, oracle {want:?}", v.pair);
    Ok(())
}

/// A random type: an enumerated stratum, optionally cut further by one relation.
pub fn random_type() -> impl Strategy<Value = PairType> {
    (1i64..=8, any::<prop::sample::Index>(), prop::option::of(prop::collection::vec(-2i64..=2, 8)))
        .prop_filter_map("no usable type", |(e, idx, extra)| {
            let types = enumerate_types(e, 3).ok()?;
            let t = types[idx.index(types.len())].clone();
            match extra {
                None => Some(t),
                Some(c) => {
                    let k = t.generator_count();
                    t.with_relation(c[..k].to_vec(), [c[5].rem_euclid(2), c[6].rem_euclid(2)], c[7].rem_euclid(3))
                        .ok()
                }
            }
        })
}

pub fn covering_recomputation(cases: u32) -> Outcome {
    let mut compared = 0;
    for e in 1..=6 {
        let report = enumerate_and_verify(e, 4).map_err(|err| err.to_string())?;
        for v in report.verdicts.iter().filter(|v| !v.status.is_excluded()) {
            recompute(v)?;
            compared += 1;
        }
    }
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&random_type(), |t| {
            if let Ok(v) = analyze(&t) {
                if !v.status.is_excluded() && v.status != Status::Unresolved {
                    recompute(&v).map_err(TestCaseError::fail)?;
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("{compared} enumerated verdicts and {cases} random types"))
}
