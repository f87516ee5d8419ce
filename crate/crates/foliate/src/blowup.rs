//! Charts of combinatorial blowups: pulling models back, classifying points on
//! the exceptional divisor and rewriting translated charts in monomial form.

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exact_linear::{dot, in_row_span, rat, right_kernel_basis, ExponentMatrix, Rat};
use crate::foliation::{
    mono_image, normalize_point, ChartFrame, FoliationError, LatticeSplit, LocalModel, Normalized, PointChart, VarClass,
};
use crate::series::{MultiIdx, SeriesError, TruncatedSeries};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BlowupError {
    #[error("invalid transition: {0}")]
    Transition(String),
    #[error("target point is off the exceptional divisor")]
    OffDivisor,
    #[error("point is {0:?}, not the requested case")]
    WrongCase(PointCase),
    #[error("no regular direction is available for v")]
    NoRegularDirection,
    #[error(transparent)]
    Foliation(#[from] FoliationError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// A chart of a sequence of combinatorial blowups, possibly at a translated point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChartTransition {
    /// Frame indices of the blown-up variables; old and new coordinates share them.
    pub vars: Vec<usize>,
    /// Old variables (rows) as monomials in the new ones (columns).
    pub a: ExponentMatrix,
    /// Value of each new coordinate at the target point.
    pub gamma: Vec<Rat>,
    /// Row of `a` that belongs to the distinguished v, if it was blown up.
    pub v_pos: Option<usize>,
}

impl ChartTransition {
    pub fn origin(vars: Vec<usize>, a: ExponentMatrix, v_pos: Option<usize>) -> Self {
        let gamma = vec![Rat::zero(); vars.len()];
        ChartTransition { vars, a, gamma, v_pos }
    }

    pub fn identity(vars: Vec<usize>, v_pos: Option<usize>) -> Self {
        let k = vars.len();
        Self::origin(vars, ExponentMatrix::identity(k), v_pos)
    }

    pub fn at_point(&self, gamma: Vec<Rat>) -> Self {
        ChartTransition { gamma, ..self.clone() }
    }

    pub fn is_origin(&self) -> bool {
        self.gamma.iter().all(|g| g.is_zero())
    }

    /// Positions (in `vars`) of the coordinates that vanish at the point.
    pub fn vanishing(&self) -> Vec<usize> {
        (0..self.vars.len()).filter(|&i| self.gamma[i].is_zero()).collect()
    }

    /// `self` followed by `next`; both at chart origins over the same variables.
    pub fn then(&self, next: &ChartTransition) -> Result<Self, BlowupError> {
        if self.vars != next.vars {
            return Err(BlowupError::Transition("transitions act on different variables".into()));
        }
        let a = self.a.mul(&next.a).map_err(|e| BlowupError::Transition(e.to_string()))?;
        Ok(ChartTransition { gamma: next.gamma.clone(), a, ..self.clone() })
    }

    /// The transition as an `n × n` exponent map on the whole frame.
    pub fn full_matrix(&self, n: usize) -> ExponentMatrix {
        let mut m = ExponentMatrix::identity(n);
        for (r, &i) in self.vars.iter().enumerate() {
            for (c, &j) in self.vars.iter().enumerate() {
                m.set(i, j, self.a.get(r, c).clone());
            }
        }
        m
    }

    fn validate(&self, model: &LocalModel) -> Result<(), BlowupError> {
        let k = self.vars.len();
        let bad = |s: &str| Err(BlowupError::Transition(s.into()));
        if self.a.rows() != k || self.a.cols() != k || self.gamma.len() != k {
            return bad("shape mismatch");
        }
        if !self.a.is_integral() || self.a.to_rows().iter().flatten().any(|x| *x < Rat::zero()) {
            return bad("exponents must be non-negative integers");
        }
        if self.a.rank() != k {
            return bad("exponent matrix is singular");
        }
        for (p, &i) in self.vars.iter().enumerate() {
            if i >= model.nvars() {
                return bad("variable out of range");
            }
            let c = model.frame.class(i);
            let is_v = self.v_pos == Some(p);
            if is_v != (c == VarClass::V) || !(c.is_u() || c == VarClass::V) {
                return bad("blown-up variables must be u's plus at most the v");
            }
        }
        Ok(())
    }
}

/// Frame of the chart: exceptional coordinates join the divisor, strict
/// transforms keep the class of the variable they come from, and the strict
/// transform of v becomes an ordinary regular coordinate.
fn chart_frame(model: &LocalModel, t: &ChartTransition) -> ChartFrame {
    let mut frame = model.frame.clone();
    for (c, &i) in t.vars.iter().enumerate() {
        let support: Vec<usize> = (0..t.vars.len()).filter(|&r| !t.a.get(r, c).is_zero()).collect();
        let class = if support.len() == 1 {
            // v joins the divisor that the drop blowups are combinatorial for
            match model.frame.class(t.vars[support[0]]) {
                VarClass::V => VarClass::U { divisor: true },
                other => other,
            }
        } else {
            VarClass::U { divisor: true }
        };
        frame = frame.with_class(i, class);
    }
    frame
}

fn point_chart(model: &LocalModel, t: &ChartTransition) -> PointChart {
    let n = model.nvars();
    let order = model.order;
    let frame = chart_frame(model, t);
    let mult: Vec<usize> = (0..t.vars.len()).filter(|&c| !t.gamma[c].is_zero()).map(|c| t.vars[c]).collect();
    let row_of = |j: usize| t.vars.iter().position(|&i| i == j);
    let mono_of = |j: usize| -> (Rat, Vec<i64>) {
        let mut a = vec![0i64; n];
        let mut kappa = Rat::one();
        match row_of(j) {
            Some(r) => {
                for (c, &i) in t.vars.iter().enumerate() {
                    let e = t.a.get(r, c).to_integer();
                    let e: i64 = e.try_into().expect("exponent fits in i64");
                    a[i] = e;
                    if !t.gamma[c].is_zero() {
                        kappa *= num_traits::pow(t.gamma[c].clone(), e as usize);
                    }
                }
            }
            None => a[j] = 1,
        }
        (kappa, a)
    };
    let mono: Vec<(Rat, Vec<i64>)> = model.frame.u_block().into_iter().map(mono_of).collect();
    let old_images = (0..n)
        .map(|j| match row_of(j) {
            Some(_) => {
                let (kappa, a) = mono_of(j);
                mono_image(n, order, &kappa, &a, &mult)
            }
            None => TruncatedSeries::var(n, order, j),
        })
        .collect();
    PointChart { frame, old_images, mult, mono }
}

/// Pull a model back to the chart, normalizing when the point is translated.
pub fn pullback_full(model: &LocalModel, t: &ChartTransition) -> Result<Normalized, BlowupError> {
    t.validate(model)?;
    Ok(normalize_point(model, &point_chart(model, t))?)
}

pub fn pullback_model(model: &LocalModel, t: &ChartTransition) -> Result<LocalModel, BlowupError> {
    Ok(pullback_full(model, t)?.model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointCase {
    /// The vanishing block of the u-rows has full column rank.
    Case1,
    Case2,
}

pub fn classify_point(t: &ChartTransition) -> Result<PointCase, BlowupError> {
    let van = t.vanishing();
    let rows: Vec<usize> = (0..t.vars.len()).filter(|&r| Some(r) != t.v_pos).collect();
    let a1 = t.a.select(&rows, &van);
    if a1.is_zero() {
        return Err(BlowupError::OffDivisor);
    }
    Ok(if a1.rank() == van.len() { PointCase::Case1 } else { PointCase::Case2 })
}

/// How the old v reads in the normalized chart:
/// `v = κ · x^exponent · (1 + z/κ)` when `z` is set, else `v = κ · x^exponent`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VForm {
    pub kappa: Rat,
    /// Full-length exponent, supported on the vanishing coordinates.
    pub exponent: Vec<Rat>,
    pub z: Option<usize>,
}

impl VForm {
    /// Constant `γ̃` in `v = x^exponent · (z − γ̃)`.
    pub fn gamma_tilde(&self) -> Option<Rat> {
        self.z.map(|_| -self.kappa.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Branch {
    /// The monomial part of the pullback is not a first integral.
    NotFirstIntegral { exponent: Vec<Rat> },
    /// The monomial part is a first integral, but the unit depends on a
    /// regular coordinate with unit derivative.
    UnitDerivative { exponent: Vec<Rat>, var: usize },
}

/// Linear data that decides, for any old monomial, which branch of the
/// dichotomy it falls in. Queries are answered on demand.
#[derive(Debug, Clone)]
pub struct MonomialClassification {
    nvars: usize,
    x: Vec<usize>,
    y: Vec<usize>,
    free: Vec<usize>,
    p1: ExponentMatrix,
    /// Per old u: exponent over `x` and log-coefficients over the `y` slots.
    rows: Vec<(Vec<Rat>, Vec<Rat>)>,
}

impl MonomialClassification {
    /// `None` when `u^ξ` is a first integral; ξ is over the old u-block.
    pub fn classify(&self, xi: &[Rat]) -> Option<Branch> {
        let mut a = vec![Rat::zero(); self.x.len()];
        let mut c = vec![Rat::zero(); self.y.len()];
        for (k, (ar, cr)) in self.rows.iter().enumerate() {
            if xi[k].is_zero() {
                continue;
            }
            for i in 0..a.len() {
                a[i] += &xi[k] * &ar[i];
            }
            for l in 0..c.len() {
                c[l] += &xi[k] * &cr[l];
            }
        }
        let mut exponent = vec![Rat::zero(); self.nvars];
        for (i, &j) in self.x.iter().enumerate() {
            exponent[j] = a[i].clone();
        }
        if !in_row_span(&a, &self.p1) {
            return Some(Branch::NotFirstIntegral { exponent });
        }
        self.free
            .iter()
            .find(|&&l| !c[l].is_zero())
            .map(|&l| Branch::UnitDerivative { exponent, var: self.y[l] })
    }
}

#[derive(Debug, Clone)]
pub struct ChartNormalization {
    pub case: PointCase,
    pub model: LocalModel,
    /// Old variables written in the final frame.
    pub old_images: Vec<TruncatedSeries>,
    pub v_form: Option<VForm>,
    pub classification: MonomialClassification,
}

fn log_parts(s: &LatticeSplit, ax_row: &[Rat], ey_row: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
    let a = ax_row.to_vec();
    let mut q = ey_row.to_vec();
    for (r, &j) in s.p1_pivots.iter().enumerate() {
        if !a[j].is_zero() {
            for l in 0..q.len() {
                q[l] -= &a[j] * s.q1.get(r, l);
            }
        }
    }
    let mut c = q.clone();
    for l in 0..q.len() {
        if s.d_pivots.contains(&l) {
            continue;
        }
        for (r, &k) in s.d_pivots.iter().enumerate() {
            if !q[k].is_zero() {
                c[l] -= &q[k] * s.d.get(r, l);
            }
        }
    }
    (a, c)
}

fn twist_vector(p1: &ExponentMatrix, av: &[Rat]) -> Option<Vec<Rat>> {
    let ker = if p1.rows() == 0 { ExponentMatrix::identity(av.len()) } else { right_kernel_basis(p1) };
    (0..ker.rows()).map(|r| ker.row_vec(r)).find_map(|k| {
        let s = dot(av, &k);
        (!s.is_zero()).then(|| k.iter().map(|x| x / &s).collect())
    })
}

/// Translated chart of a Case 1 point: `v = x^{α} (z − γ̃)` with `z` regular.
pub fn normalize_case1(model: &LocalModel, t: &ChartTransition) -> Result<ChartNormalization, BlowupError> {
    normalize_case(model, t, PointCase::Case1)
}

/// Translated chart of a Case 2 point: `v = κ x^{α}` with `α` off the lattice.
pub fn normalize_case2(model: &LocalModel, t: &ChartTransition) -> Result<ChartNormalization, BlowupError> {
    normalize_case(model, t, PointCase::Case2)
}

/// Dispatch on [`classify_point`].
pub fn normalize_at(model: &LocalModel, t: &ChartTransition) -> Result<ChartNormalization, BlowupError> {
    let case = classify_point(t)?;
    normalize_case(model, t, case)
}

fn normalize_case(model: &LocalModel, t: &ChartTransition, want: PointCase) -> Result<ChartNormalization, BlowupError> {
    let case = classify_point(t)?;
    if case != want {
        return Err(BlowupError::WrongCase(case));
    }
    let norm = pullback_full(model, t)?;
    let s = &norm.data;
    let n = model.nvars();
    let order = model.order;
    let mut rows: Vec<(Vec<Rat>, Vec<Rat>)> =
        (0..s.ax.rows()).map(|j| log_parts(s, &s.ax.row_vec(j), &s.ey.row_vec(j))).collect();
    let free = s.free_y();
    let pos_of = |i: usize| t.vars.iter().position(|&j| j == i);

    let mut images: Vec<TruncatedSeries> = (0..n).map(|i| TruncatedSeries::var(n, order, i)).collect();
    let mut v_form = None;
    if let Some(vp) = t.v_pos {
        let alpha = |i: usize| pos_of(i).map(|c| t.a.get(vp, c).clone()).unwrap_or_else(Rat::zero);
        let av: Vec<Rat> = s.x.iter().map(|&i| alpha(i)).collect();
        let qv: Vec<Rat> = s.y.iter().map(|&i| alpha(i)).collect();
        let (av, mut cv) = log_parts(s, &av, &qv);
        let mut kappa = Rat::one();
        for (c, g) in t.gamma.iter().enumerate() {
            if !g.is_zero() {
                let e: i64 = t.a.get(vp, c).to_integer().try_into().expect("exponent fits in i64");
                kappa *= num_traits::pow(g.clone(), e as usize);
            }
        }
        let theta: Vec<TruncatedSeries> = s
            .y
            .iter()
            .map(|&i| TruncatedSeries::var(n, order, i).log1p())
            .collect::<Result<_, _>>()?;
        let comb = |c: &[Rat], skip: Option<usize>| {
            let mut e = TruncatedSeries::zero(n, order);
            for (l, th) in theta.iter().enumerate() {
                if Some(l) != skip && !c[l].is_zero() {
                    e = e.add(&th.scale(&c[l]));
                }
            }
            e
        };
        // twist: x = x̂ · exp(m ⟨τ, θ⟩), shifting every log vector by (a·m) τ
        let mut tau: Option<Vec<Rat>> = None;
        let mut m: Option<Vec<Rat>> = None;
        let mut l0 = None;
        match case {
            PointCase::Case2 => {
                m = Some(twist_vector(&s.p1, &av).ok_or(BlowupError::NoRegularDirection)?);
                tau = Some(cv.iter().map(|x| -x.clone()).collect());
            }
            PointCase::Case1 => {
                l0 = free.iter().copied().find(|&l| !cv[l].is_zero());
                if l0.is_none() {
                    let l1 = *free.first().ok_or(BlowupError::NoRegularDirection)?;
                    m = Some(twist_vector(&s.p1, &av).ok_or(BlowupError::NoRegularDirection)?);
                    let mut e = vec![Rat::zero(); s.y.len()];
                    e[l1] = Rat::one();
                    tau = Some(e);
                    l0 = Some(l1);
                }
            }
        }
        if let (Some(m), Some(tau)) = (&m, &tau) {
            let lt = comb(tau, None);
            for (i, &xi) in s.x.iter().enumerate() {
                if !m[i].is_zero() {
                    images[xi] = TruncatedSeries::var(n, order, xi).mul(&lt.scale(&m[i]).exp()?);
                }
            }
            let shift = |a: &[Rat], c: &mut Vec<Rat>| {
                let am = dot(a, m);
                for l in 0..c.len() {
                    c[l] += &am * &tau[l];
                }
            };
            for (a, c) in rows.iter_mut() {
                shift(a, c);
            }
            shift(&av, &mut cv);
        }
        if let Some(l0) = l0 {
            // z-step: y_{l0} is replaced by z with log1p(z/κ) = ⟨c_v, θ⟩
            let zi = s.y[l0];
            let zeta = TruncatedSeries::var(n, order, zi).scale(&kappa.recip()).log1p()?;
            let eta = zeta.sub(&comb(&cv, Some(l0))).scale(&cv[l0].recip());
            let mut zimg: Vec<TruncatedSeries> = (0..n).map(|i| TruncatedSeries::var(n, order, i)).collect();
            zimg[zi] = eta.exp()?.sub(&TruncatedSeries::one(n, order));
            images = images.iter().map(|im| im.substitute(&zimg)).collect::<Result<_, _>>()?;
            for (_, c) in rows.iter_mut() {
                let k = c[l0].clone() / &cv[l0];
                for l in 0..c.len() {
                    if l != l0 {
                        c[l] -= &k * &cv[l];
                    }
                }
                c[l0] = k;
            }
        }
        let mut exponent = vec![Rat::zero(); n];
        for (i, &xi) in s.x.iter().enumerate() {
            exponent[xi] = av[i].clone();
        }
        v_form = Some(VForm { kappa, exponent, z: l0.map(|l| s.y[l]) });
    }

    let out = norm.model.transform(norm.model.frame.clone(), norm.model.b(), &images)?;
    let old_images = norm.old_images.iter().map(|s| s.substitute(&images)).collect::<Result<_, _>>()?;
    let classification = MonomialClassification {
        nvars: n,
        x: s.x.clone(),
        y: s.y.clone(),
        free,
        p1: s.p1.clone(),
        rows,
    };
    Ok(ChartNormalization { case, model: out, old_images, v_form, classification })
}

/// Recompute the pullback of `u^ξ` as a series and confirm `branch` directly.
pub fn verify_branch(norm: &ChartNormalization, old_u: &[usize], xi: &[u32], branch: &Branch) -> bool {
    let n = norm.model.nvars();
    let order = norm.model.order;
    let mut s = TruncatedSeries::one(n, order);
    for (k, &j) in old_u.iter().enumerate() {
        if xi[k] > 0 {
            s = s.mul(&norm.old_images[j].pow(xi[k]));
        }
    }
    let x = &norm.classification.x;
    let Some(m) = s.min_exponents(x) else { return false };
    let mut e = vec![0u32; n];
    for (k, &i) in x.iter().enumerate() {
        e[i] = m[k];
    }
    let Some(h) = s.divide_monomial(&MultiIdx(e.clone())) else { return false };
    if !h.is_unit() {
        return false;
    }
    let (exponent, var) = match branch {
        Branch::NotFirstIntegral { exponent } => (exponent, None),
        Branch::UnitDerivative { exponent, var } => (exponent, Some(*var)),
    };
    if exponent.iter().zip(&e).any(|(a, b)| *a != rat(*b as i64)) {
        return false;
    }
    let ub = norm.model.frame.u_block();
    let row: Vec<Rat> = ub.iter().map(|&i| rat(e[i] as i64)).collect();
    let fi = in_row_span(&row, norm.model.b());
    match var {
        None => !fi,
        Some(w) => fi && norm.model.frame.class(w) == VarClass::W && h.derivative(w).is_unit(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(spec: &[(&str, VarClass)]) -> ChartFrame {
        ChartFrame::new(spec.iter().map(|s| s.0.to_string()).collect(), spec.iter().map(|s| s.1).collect()).unwrap()
    }

    fn uv_model(b: &[Vec<i64>], gens: Vec<TruncatedSeries>) -> LocalModel {
        let f = frame(&[("u", VarClass::U { divisor: true }), ("v", VarClass::V)]);
        LocalModel::new(f, &ExponentMatrix::from_ints(1, b), gens, 12).unwrap()
    }

    fn s2(t: &[(&[u32], i64)]) -> TruncatedSeries {
        TruncatedSeries::from_terms(2, 12, t.iter().map(|(e, c)| (MultiIdx(e.to_vec()), rat(*c))))
    }

    #[test]
    fn pullback_of_uv() {
        let m = uv_model(&[], vec![s2(&[(&[1, 1], 1)])]);
        let t = ChartTransition::origin(vec![0, 1], ExponentMatrix::from_ints(2, &[vec![1, 0], vec![1, 1]]), Some(1));
        let p = pullback_model(&m, &t).unwrap();
        assert_eq!(p.gens[0], s2(&[(&[2, 1], 1)]));
        assert!(p.frame.class(0).is_divisor());
        assert_eq!(p.frame.class(1), VarClass::U { divisor: true });
        let id = ChartTransition::identity(vec![0, 1], Some(1));
        assert_eq!(pullback_model(&m, &id).unwrap().gens, m.gens);
    }

    #[test]
    fn lattice_transport() {
        let f = frame(&[("u1", VarClass::U { divisor: true }), ("u2", VarClass::U { divisor: true })]);
        let m = LocalModel::new(f, &ExponentMatrix::from_ints(2, &[vec![1, 1]]), vec![], 12).unwrap();
        let t = ChartTransition::origin(vec![0, 1], ExponentMatrix::from_ints(2, &[vec![1, 0], vec![1, 1]]), None);
        assert_eq!(pullback_model(&m, &t).unwrap().b(), &ExponentMatrix::from_ints(2, &[vec![2, 1]]));
    }

    #[test]
    fn point_cases() {
        let a = ExponentMatrix::from_ints(2, &[vec![1, 1], vec![0, 1]]);
        let t = ChartTransition::origin(vec![0, 1], a.clone(), Some(1));
        assert_eq!(classify_point(&t).unwrap(), PointCase::Case2);
        let q = t.at_point(vec![rat(0), rat(1)]);
        assert_eq!(classify_point(&q).unwrap(), PointCase::Case1);
        let other = t.at_point(vec![rat(1), rat(0)]);
        assert_eq!(classify_point(&other).unwrap(), PointCase::Case1);
        let t2 = ChartTransition::origin(vec![0, 1], ExponentMatrix::from_ints(2, &[vec![1, 0], vec![1, 1]]), Some(1));
        assert_eq!(classify_point(&t2.at_point(vec![rat(0), rat(2)])).unwrap(), PointCase::Case1);
        assert_eq!(classify_point(&t2.at_point(vec![rat(2), rat(0)])), Err(BlowupError::OffDivisor));
    }

    #[test]
    fn case1_v_form() {
        // u = x, v = x z; at z = 1 the old v reads x (z̃ + 1)
        let m = uv_model(&[], vec![s2(&[(&[1, 2], 1), (&[2, 0], 1)])]);
        let t = ChartTransition::origin(vec![0, 1], ExponentMatrix::from_ints(2, &[vec![1, 0], vec![1, 1]]), Some(1))
            .at_point(vec![rat(0), rat(1)]);
        let c = normalize_case1(&m, &t).unwrap();
        let vf = c.v_form.clone().unwrap();
        assert_eq!(vf.z, Some(1));
        assert_eq!(vf.gamma_tilde(), Some(rat(-1)));
        assert_eq!(c.old_images[1], s2(&[(&[1, 0], 1), (&[1, 1], 1)]).with_exact(false));
        assert!(c.model.regular().contains(&1));
        assert_eq!(c.model.leaf_dim(), m.leaf_dim());
    }

    #[test]
    fn case2_v_monomial() {
        let f = frame(&[("u1", VarClass::U { divisor: true }), ("u2", VarClass::U { divisor: true }), ("v", VarClass::V)]);
        let m = LocalModel::new(f, &ExponentMatrix::from_ints(2, &[vec![1, 1]]), vec![], 8).unwrap();
        // u1 = x0 x2, u2 = x1, v = x2 at a point where x1 = 3
        let a = ExponentMatrix::from_ints(3, &[vec![1, 0, 1], vec![0, 1, 0], vec![0, 0, 1]]);
        let t = ChartTransition::origin(vec![0, 1, 2], a, Some(2)).at_point(vec![rat(0), rat(3), rat(0)]);
        assert_eq!(classify_point(&t).unwrap(), PointCase::Case2);
        let c = normalize_case2(&m, &t).unwrap();
        let vf = c.v_form.clone().unwrap();
        assert_eq!(vf.z, None);
        let want = TruncatedSeries::monomial(3, 8, MultiIdx(vec![0, 0, 1]), vf.kappa.clone());
        assert_eq!(c.old_images[2].truncate(8).terms().collect::<Vec<_>>(), want.terms().collect::<Vec<_>>());
        for xi in [[1u32, 0], [0, 1], [2, 1]] {
            let q: Vec<Rat> = xi.iter().map(|&x| rat(x as i64)).collect();
            let br = c.classification.classify(&q).unwrap();
            assert!(verify_branch(&c, &[0, 1], &xi, &br), "{xi:?} {br:?}");
        }
        assert!(c.classification.classify(&[rat(1), rat(1)]).is_none());
    }
}
