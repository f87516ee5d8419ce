#![allow(dead_code)]

use foliate::blowup::{classify_point, normalize_at, verify_branch, BlowupError, ChartNormalization, ChartTransition};
use foliate::driver::generators_independent;
use foliate::exact_linear::{in_row_span, primitive, rat, rat_pow, ratio, ExponentMatrix, Rat};
use foliate::foliation::{ChartFrame, LocalModel, VarClass, VectorField};
use foliate::io::{parse_problem, ProblemFile};
use foliate::series::{MultiIdx, SeriesError, TruncatedSeries};
use foliate::toric::BlowupStep;
use num_traits::{ToPrimitive, Zero};
use std::path::PathBuf;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ORDER: u32 = 12;

fn order() -> u32 {
    std::env::var("FOLIATE_ORDER").ok().and_then(|s| s.parse().ok()).unwrap_or(ORDER)
}

/// A seeded random model with at most 4 variables, 3 generators and degree 4.
pub fn random_model(seed: u64) -> Option<LocalModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(2..=4usize);
    let p = rng.gen_range(1..=m);
    let mut names = Vec::new();
    let mut classes = Vec::new();
    for i in 0..m {
        if i < p {
            names.push(format!("u{}", i + 1));
            classes.push(VarClass::U { divisor: true });
        } else {
            names.push(format!("w{}", i - p + 1));
            classes.push(VarClass::W);
        }
    }
    let frame = ChartFrame::new(names, classes).ok()?;
    let mut rows = Vec::new();
    if p >= 2 && rng.gen_bool(0.3) {
        let row: Vec<i64> = (0..p).map(|_| rng.gen_range(-1..=2)).collect();
        if row.iter().any(|&x| x != 0) {
            rows.push(row);
        }
    }
    let b = ExponentMatrix::from_ints(p, &rows);
    let probe = LocalModel::new(frame.clone(), &b, vec![], ORDER).ok()?;
    let n = rng.gen_range(1..=probe.leaf_dim().min(3).max(1));
    let mut gens = Vec::new();
    for _ in 0..n {
        let terms = rng.gen_range(1..=3);
        let mut ts = Vec::new();
        for _ in 0..terms {
            let deg = rng.gen_range(1..=4u32);
            let mut e = vec![0u32; m];
            for _ in 0..deg {
                e[rng.gen_range(0..m)] += 1;
            }
            let c = [ratio(1, 1), ratio(-1, 1), ratio(2, 1), ratio(1, 2)][rng.gen_range(0..4)].clone();
            ts.push((MultiIdx(e), c));
        }
        gens.push(TruncatedSeries::from_terms(m, order(), ts));
    }
    let model = LocalModel::new(frame, &b, gens, order()).ok()?;
    if model.gens.iter().any(|g| g.is_zero()) || !generators_independent(&model) {
        return None;
    }
    Some(model)
}

/// The first `count` admissible seeds.
pub fn corpus(count: usize) -> Vec<(u64, LocalModel)> {
    (0u64..).filter_map(|s| random_model(s).map(|m| (s, m))).take(count).collect()
}

/// The committed corpus, sorted by file name.
pub fn corpus_files() -> Vec<(String, ProblemFile)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let text = std::fs::read_to_string(&p).unwrap();
            (name, parse_problem(&text).unwrap())
        })
        .collect()
}

pub fn small_rat(rng: &mut ChaCha8Rng) -> Rat {
    let num = rng.gen_range(1..=3i64) * if rng.gen_bool(0.5) { 1 } else { -1 };
    ratio(num, rng.gen_range(1..=3i64))
}

pub fn int_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: i64, hi: i64) -> ExponentMatrix {
    let m: Vec<Vec<i64>> = (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(lo..=hi)).collect()).collect();
    ExponentMatrix::from_ints(cols, &m)
}

/// `y_i = Π_j x_j^{a_ij}` evaluated at a point with nonzero coordinates.
pub fn eval_monomials(a: &ExponentMatrix, x: &[Rat]) -> Vec<Rat> {
    (0..a.rows())
        .map(|i| {
            (0..a.cols()).fold(rat(1), |acc, j| {
                let e = a.get(i, j);
                assert!(e.is_integer());
                acc * rat_pow(&x[j], e.numer())
            })
        })
        .collect()
}

/// Product of `images[vars[j]]^e_j` over the nonnegative entries `e_j`.
fn product(images: &[TruncatedSeries], vars: &[usize], e: &[i64], n: usize, order: u32) -> TruncatedSeries {
    let mut s = TruncatedSeries::one(n, order);
    for (k, &j) in vars.iter().enumerate() {
        if e[k] > 0 {
            s = s.mul(&images[j].pow(e[k] as u32));
        }
    }
    s
}

/// A random unimodular chart over `u1..uk` (all divisor), an optional `v`
/// and one `w`, with a random lattice, at a random off-origin point.
pub fn random_transition(rng: &mut ChaCha8Rng) -> (LocalModel, ChartTransition) {
    let k = rng.gen_range(2..=3usize);
    let with_v = rng.gen_bool(0.5);
    let mut names: Vec<String> = (1..=k).map(|i| format!("u{i}")).collect();
    let mut classes = vec![VarClass::U { divisor: true }; k];
    if with_v {
        names.push("v".into());
        classes.push(VarClass::V);
    }
    names.push("w".into());
    classes.push(VarClass::W);
    let frame = ChartFrame::new(names, classes).unwrap();
    let b = loop {
        let r = rng.gen_range(0..k);
        let b = int_matrix(rng, r, k, -1, 2);
        if b.rank() == r {
            break b;
        }
    };
    let kk = if with_v { k + 1 } else { k };
    let vars: Vec<usize> = (0..kk).collect();
    loop {
        let mut a = ExponentMatrix::identity(kk);
        for _ in 0..rng.gen_range(1..=4) {
            let i = rng.gen_range(0..kk);
            let j = (i + rng.gen_range(1..kk)) % kk;
            let step = BlowupStep { center: (i.min(j), i.max(j)), exceptional: if rng.gen_bool(0.5) { i } else { j } };
            a = a.mul(&step.matrix(kk)).unwrap();
        }
        // room for the largest sampled monomial times a visible unit
        let deg: i64 = (0..k).map(|i| a.row(i).iter().map(|x| x.to_integer().to_i64().unwrap()).sum::<i64>()).sum();
        let order = (3 * deg + 2) as u32;
        let model = LocalModel::new(frame.clone(), &b, vec![], order).unwrap();
        let t = ChartTransition::origin(vars.clone(), a, with_v.then_some(k));
        let gamma: Vec<Rat> = (0..kk).map(|_| if rng.gen_bool(0.4) { small_rat(rng) } else { rat(0) }).collect();
        if gamma.iter().all(|g| g.is_zero()) {
            continue;
        }
        let t = t.at_point(gamma);
        if classify_point(&t).is_ok() {
            return (model, t);
        }
    }
}

/// Normalize `model` along `t` and verify the result directly: the lattice
/// rank is kept, every old first integral pulls back to a series killed by
/// the new model's vector fields, and the
/// branch reported for `samples` random old monomials is recomputed from
/// the pulled-back series. `Ok(None)` when the point is not compliant.
pub fn check_normalization(model: &LocalModel, t: &ChartTransition, rng: &mut ChaCha8Rng, samples: usize) -> Result<Option<ChartNormalization>, String> {
    let norm = match normalize_at(model, t) {
        Ok(n) => n,
        Err(BlowupError::Series(SeriesError::IrrationalPower(..))) => return Ok(None),
        Err(e) => return Err(format!("normalization failed: {e}")),
    };
    let out = &norm.model;
    if out.b().rank() != model.b().rank() {
        return Err(format!("lattice rank {} -> {}", model.b().rank(), out.b().rank()));
    }
    let n = out.nvars();
    let order = out.order;
    let old_u = model.frame.u_block();
    for r in 0..model.b().rows() {
        let beta: Vec<i64> = primitive(model.b().row(r)).iter().map(|x| x.to_integer().to_i64().unwrap()).collect();
        let pos: Vec<i64> = beta.iter().map(|&x| x.max(0)).collect();
        let neg: Vec<i64> = beta.iter().map(|&x| (-x).max(0)).collect();
        let p = product(&norm.old_images, &old_u, &pos, n, order);
        let q = product(&norm.old_images, &old_u, &neg, n, order);
        let o = p.order().min(q.order()).saturating_sub(2);
        for g in out.generators() {
            let num = g.apply(&p).mul(&q).sub(&p.mul(&g.apply(&q))).truncate(o);
            if !num.is_zero() {
                return Err(format!("{} does not kill the pulled-back u^{beta:?}", g.display(out.frame.names())));
            }
        }
    }
    for _ in 0..samples {
        let xi: Vec<u32> = old_u.iter().map(|_| rng.gen_range(0..=3)).collect();
        let q: Vec<Rat> = xi.iter().map(|&x| rat(x as i64)).collect();
        match norm.classification.classify(&q) {
            None => {
                if !in_row_span(&q, model.b()) {
                    return Err(format!("u^{xi:?} reported as a first integral"));
                }
            }
            Some(br) => {
                if in_row_span(&q, model.b()) || !verify_branch(&norm, &old_u, &xi, &br) {
                    return Err(format!("branch {br:?} for u^{xi:?} not confirmed"));
                }
            }
        }
    }
    Ok(Some(norm))
}

/// Apply each generator of a random full-rank lattice's distribution to
/// `u^β` for every lattice row β and count the logarithmic generators.
pub fn check_duality(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let k = rng.gen_range(1..=5usize);
    let w = rng.gen_range(0..=2usize);
    let m = k + w;
    let mut names: Vec<String> = (1..=k).map(|i| format!("u{i}")).collect();
    names.extend((1..=w).map(|i| format!("w{i}")));
    let mut classes = vec![VarClass::U { divisor: true }; k];
    classes.extend(vec![VarClass::W; w]);
    let frame = ChartFrame::new(names, classes).unwrap();
    let b = loop {
        let r = rng.gen_range(0..=k);
        let b = int_matrix(rng, r, k, -3, 3);
        if b.rank() == r {
            break b;
        }
    };
    let model = LocalModel::new(frame, &b, vec![], 6).unwrap();
    let gens = model.generators();
    let d = model.leaf_dim();
    let logs = gens.iter().filter(|g| matches!(g, VectorField::Log(_))).count();
    if logs != d + k - m || gens.len() != d {
        return Err(format!("B = {:?}: {} generators, {logs} logarithmic, d = {d}", b.to_i64_rows(), gens.len()));
    }
    let ub = model.frame.u_block();
    let images: Vec<TruncatedSeries> = (0..m).map(|i| TruncatedSeries::var(m, 64, i)).collect();
    for r in 0..b.rows() {
        let beta: Vec<i64> = b.row(r).iter().map(|x| x.to_integer().to_i64().unwrap()).collect();
        let pos: Vec<i64> = beta.iter().map(|&x| x.max(0)).collect();
        let neg: Vec<i64> = beta.iter().map(|&x| (-x).max(0)).collect();
        let p = product(&images, &ub, &pos, m, 64);
        let q = product(&images, &ub, &neg, m, 64);
        for g in &gens {
            // X(p/q) = 0  iff  X(p) q - p X(q) = 0
            let num = g.apply(&p).mul(&q).sub(&p.mul(&g.apply(&q)));
            if !num.is_zero() {
                return Err(format!("{} does not kill u^{beta:?}", g.display(model.frame.names())));
            }
        }
    }
    Ok(())
}

/// `u = y^A`, `y = x^B` against `u = x^{AB}` at a random point.
pub fn check_composition(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let (p, q, r) = (rng.gen_range(1..=4), rng.gen_range(1..=4), rng.gen_range(1..=4));
    let a = int_matrix(rng, p, q, -3, 3);
    let b = int_matrix(rng, q, r, -3, 3);
    let ab = foliate::exact_linear::compose_exponents(&a, &b).map_err(|e| e.to_string())?;
    let x: Vec<Rat> = (0..r).map(|_| small_rat(rng)).collect();
    let via = eval_monomials(&a, &eval_monomials(&b, &x));
    let direct = eval_monomials(&ab, &x);
    if via != direct {
        return Err(format!("A = {:?}, B = {:?}", a.to_i64_rows(), b.to_i64_rows()));
    }
    if ab.to_rows().iter().flatten().any(|e| !e.is_integer()) {
        return Err("non-integral product".into());
    }
    Ok(())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
