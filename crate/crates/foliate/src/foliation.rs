//! Chart frames, monomial distributions given by their first-integral lattice,
//! local models, re-centering at nearby points and admissibility of centers.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact_linear::{dot, in_row_span, rat, right_kernel_basis, ExponentMatrix, Rat};
use crate::series::{MultiIdx, SeriesError, TruncatedSeries};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FoliationError {
    #[error("invalid frame: {0}")]
    Frame(String),
    #[error("first-integral matrix is rank deficient")]
    RankDeficient,
    #[error("B has {0} columns but the frame has {1} u-variables")]
    Shape(usize, usize),
    #[error("point outside the chart: {0}")]
    Domain(String),
    #[error("unsupported center: {0}")]
    Center(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarClass {
    U { divisor: bool },
    V,
    W,
    /// Held fixed: a coordinate the current computation must not touch.
    Frozen,
}

impl VarClass {
    pub fn is_u(&self) -> bool {
        matches!(self, VarClass::U { .. })
    }

    pub fn is_divisor(&self) -> bool {
        matches!(self, VarClass::U { divisor: true })
    }

    pub fn label(&self) -> &'static str {
        match self {
            VarClass::U { divisor: true } => "u*",
            VarClass::U { divisor: false } => "u",
            VarClass::V => "v",
            VarClass::W => "w",
            VarClass::Frozen => "frozen",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChartFrame {
    names: Vec<String>,
    classes: Vec<VarClass>,
}

impl ChartFrame {
    pub fn new(names: Vec<String>, classes: Vec<VarClass>) -> Result<Self, FoliationError> {
        if names.len() != classes.len() {
            return Err(FoliationError::Frame("names and classes differ in length".into()));
        }
        if classes.iter().filter(|c| **c == VarClass::V).count() > 1 {
            return Err(FoliationError::Frame("more than one v variable".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(FoliationError::Frame(format!("duplicate variable {n}")));
            }
        }
        Ok(ChartFrame { names, classes })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn class(&self, i: usize) -> VarClass {
        self.classes[i]
    }

    pub fn classes(&self) -> &[VarClass] {
        &self.classes
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn u_block(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.classes[i].is_u()).collect()
    }

    pub fn v_slot(&self) -> Option<usize> {
        (0..self.len()).find(|&i| self.classes[i] == VarClass::V)
    }

    pub fn w_block(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.classes[i] == VarClass::W).collect()
    }

    pub fn frozen(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.classes[i] == VarClass::Frozen).collect()
    }

    pub fn with_class(&self, i: usize, c: VarClass) -> Self {
        let mut f = self.clone();
        f.classes[i] = c;
        f
    }

    pub fn with_name(&self, i: usize, n: String) -> Self {
        let mut f = self.clone();
        f.names[i] = n;
        f
    }

    /// Position of variable `i` inside the u-block.
    pub fn u_pos(&self, i: usize) -> Option<usize> {
        self.u_block().iter().position(|&j| j == i)
    }
}

/// A monomial distribution, stored as its complete system of monomial first
/// integrals: the rows of `b` are exponents over the frame's u-block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialDistribution {
    b: ExponentMatrix,
}

impl MonomialDistribution {
    pub fn b(&self) -> &ExponentMatrix {
        &self.b
    }

    pub fn rows(&self) -> usize {
        self.b.rows()
    }
}

pub fn distribution_from_first_integrals(
    frame: &ChartFrame,
    b: &ExponentMatrix,
) -> Result<MonomialDistribution, FoliationError> {
    let k = frame.u_block().len();
    if b.cols() != k {
        return Err(FoliationError::Shape(b.cols(), k));
    }
    if b.rank() != b.rows() {
        return Err(FoliationError::RankDeficient);
    }
    Ok(MonomialDistribution { b: b.canonical_row_basis() })
}

/// `u^γ` is a first integral (γ over the u-block).
pub fn annihilates(dist: &MonomialDistribution, gamma: &[Rat]) -> bool {
    in_row_span(gamma, &dist.b)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VectorField {
    Partial(usize),
    /// `Σ c_i x_i ∂_{x_i}`, coefficients over all frame variables.
    Log(Vec<Rat>),
}

impl VectorField {
    pub fn apply(&self, f: &TruncatedSeries) -> TruncatedSeries {
        match self {
            VectorField::Partial(i) => f.derivative(*i),
            VectorField::Log(c) => f.euler(c),
        }
    }

    pub fn display(&self, names: &[String]) -> String {
        match self {
            VectorField::Partial(i) => format!("d/d{}", names[*i]),
            VectorField::Log(c) => {
                let parts: Vec<String> = c
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| !x.is_zero())
                    .map(|(i, x)| format!("{}*{}*d/d{}", x, names[i], names[i]))
                    .collect();
                parts.join(" + ")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalModel {
    pub frame: ChartFrame,
    pub dist: MonomialDistribution,
    pub gens: Vec<TruncatedSeries>,
    /// Series carried along through every coordinate change without taking
    /// part in any decision.
    pub passengers: Vec<TruncatedSeries>,
    pub order: u32,
    /// Whether `df_1 ∧ … ∧ df_n ≠ 0` was confirmed at input.
    pub independent: Option<bool>,
}

impl LocalModel {
    pub fn new(
        frame: ChartFrame,
        b: &ExponentMatrix,
        gens: Vec<TruncatedSeries>,
        order: u32,
    ) -> Result<Self, FoliationError> {
        let dist = distribution_from_first_integrals(&frame, b)?;
        for g in &gens {
            if g.nvars() != frame.len() {
                return Err(FoliationError::Frame("generator lives on a different frame".into()));
            }
        }
        let gens = gens.into_iter().map(|g| g.truncate(order)).collect();
        Ok(LocalModel { frame, dist, gens, passengers: Vec::new(), order, independent: None })
    }

    pub fn nvars(&self) -> usize {
        self.frame.len()
    }

    pub fn b(&self) -> &ExponentMatrix {
        self.dist.b()
    }

    /// u-variables that carry the logarithmic part: divisor components and
    /// any u with a nonzero first-integral column.
    pub fn log_block(&self) -> Vec<usize> {
        let ub = self.frame.u_block();
        ub.iter()
            .enumerate()
            .filter(|(p, &i)| self.frame.class(i).is_divisor() || !self.b().col_vec(*p).iter().all(|x| x.is_zero()))
            .map(|(_, &i)| i)
            .collect()
    }

    /// Variables whose partial derivative belongs to the distribution.
    pub fn regular(&self) -> Vec<usize> {
        let lb = self.log_block();
        (0..self.nvars())
            .filter(|i| !lb.contains(i) && self.frame.class(*i) != VarClass::Frozen)
            .collect()
    }

    pub fn leaf_dim(&self) -> usize {
        self.nvars() - self.frame.frozen().len() - self.dist.rows()
    }

    pub fn generators(&self) -> Vec<VectorField> {
        let mut out: Vec<VectorField> = self.regular().into_iter().map(VectorField::Partial).collect();
        let ub = self.frame.u_block();
        let lb = self.log_block();
        let pos: Vec<usize> = lb.iter().map(|i| ub.iter().position(|j| j == i).unwrap()).collect();
        let sub = self.b().select_cols(&pos);
        let ker = right_kernel_basis(&sub);
        for r in 0..ker.rows() {
            let mut c = vec![Rat::zero(); self.nvars()];
            for (k, &i) in lb.iter().enumerate() {
                c[i] = ker.get(r, k).clone();
            }
            out.push(VectorField::Log(c));
        }
        out
    }

    /// Number of logarithmic generators.
    pub fn singular_count(&self) -> usize {
        self.generators().iter().filter(|g| matches!(g, VectorField::Log(_))).count()
    }

    /// Restrict a full exponent vector to the u-block.
    pub fn u_part(&self, e: &MultiIdx) -> Vec<Rat> {
        self.frame.u_block().iter().map(|&i| rat(e.0[i] as i64)).collect()
    }

    pub fn is_first_integral_monomial(&self, e: &MultiIdx) -> bool {
        let ub = self.frame.u_block();
        if (0..self.nvars()).any(|i| e.0[i] > 0 && !ub.contains(&i)) {
            return false;
        }
        annihilates(&self.dist, &self.u_part(e))
    }

    /// Every generator of the distribution kills `f` (up to truncation).
    pub fn is_first_integral(&self, f: &TruncatedSeries) -> bool {
        self.generators().iter().all(|x| x.apply(f).is_zero())
    }

    /// Replace frame and lattice, pushing generators and passengers through `images`
    /// (one image per current variable, written in the new frame).
    pub fn transform(
        &self,
        frame: ChartFrame,
        b: &ExponentMatrix,
        images: &[TruncatedSeries],
    ) -> Result<LocalModel, FoliationError> {
        let gens = self.gens.iter().map(|g| g.substitute(images)).collect::<Result<Vec<_>, _>>()?;
        let passengers = self.passengers.iter().map(|g| g.substitute(images)).collect::<Result<Vec<_>, _>>()?;
        let mut m = LocalModel::new(frame, b, gens, self.order)?;
        m.passengers = passengers;
        m.independent = self.independent;
        Ok(m)
    }

    /// Change the class of one variable, re-indexing the lattice columns.
    /// A u-variable can only leave the u-block if its column is zero.
    pub fn reclassify(&self, i: usize, class: VarClass) -> Result<LocalModel, FoliationError> {
        let frame = self.frame.with_class(i, class);
        let old = self.frame.u_block();
        if let Some(p) = old.iter().position(|&j| j == i) {
            if !class.is_u() && !self.b().col_vec(p).iter().all(|x| x.is_zero()) {
                return Err(FoliationError::Frame(format!("{} carries first-integral exponents", self.frame.name(i))));
            }
        }
        let new = frame.u_block();
        let rows: Vec<Vec<Rat>> = (0..self.b().rows())
            .map(|r| {
                new.iter()
                    .map(|j| old.iter().position(|k| k == j).map(|p| self.b().get(r, p).clone()).unwrap_or_else(Rat::zero))
                    .collect()
            })
            .collect();
        let mut m = self.clone();
        m.dist = distribution_from_first_integrals(&frame, &ExponentMatrix::from_rows(new.len(), &rows))?;
        m.frame = frame;
        Ok(m)
    }

    pub fn identity_images(&self) -> Vec<TruncatedSeries> {
        (0..self.nvars()).map(|i| TruncatedSeries::var(self.nvars(), self.order, i)).collect()
    }

    pub fn is_exact(&self) -> bool {
        self.gens.iter().all(|g| g.is_exact())
    }

    /// Lift a u-block row to a full-length exponent row.
    pub fn lift_u_row(&self, row: &[Rat]) -> Vec<Rat> {
        let mut out = vec![Rat::zero(); self.nvars()];
        for (k, &i) in self.frame.u_block().iter().enumerate() {
            out[i] = row[k].clone();
        }
        out
    }
}

impl fmt::Display for LocalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars: Vec<String> = (0..self.nvars())
            .map(|i| format!("{}:{}", self.frame.name(i), self.frame.class(i).label()))
            .collect();
        writeln!(f, "frame  [{}]", vars.join(", "))?;
        writeln!(f, "B      {:?}", self.b())?;
        for (i, g) in self.gens.iter().enumerate() {
            writeln!(f, "f{}     {}", i + 1, g.display(self.frame.names()))?;
        }
        Ok(())
    }
}

/// A coordinate change around a point where some coordinates are translated.
///
/// `old_images[j]` writes old variable `j` in the pre-normalization frame; for
/// each old u-variable, `mono[j] = (κ, a)` records that its image equals
/// `κ · Π_i (x_i or (1+y_i))^{a_i}` with `y_i` ranging over `mult`.
#[derive(Debug, Clone)]
pub struct PointChart {
    pub frame: ChartFrame,
    pub old_images: Vec<TruncatedSeries>,
    pub mult: Vec<usize>,
    pub mono: Vec<(Rat, Vec<i64>)>,
}

/// Result of bringing a translated chart back to monomial form.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub model: LocalModel,
    /// Old variables written in the final frame.
    pub old_images: Vec<TruncatedSeries>,
    pub data: LatticeSplit,
}

/// Linear data of the normalization, enough to classify any old monomial.
#[derive(Debug, Clone)]
pub struct LatticeSplit {
    /// Vanishing log coordinates (indices in the final frame).
    pub x: Vec<usize>,
    /// Multiplicatively translated coordinates (indices in the final frame).
    pub y: Vec<usize>,
    /// Exponents of old u-variables: over `x` and over `y`.
    pub ax: ExponentMatrix,
    pub ey: ExponentMatrix,
    /// Top block `[P1 | Q1]` of the reduced lattice, pivots of `P1` among `x`.
    pub p1: ExponentMatrix,
    pub q1: ExponentMatrix,
    pub p1_pivots: Vec<usize>,
    /// Bottom block `[0 | D]`, pivots of `D` among `y`.
    pub d: ExponentMatrix,
    pub d_pivots: Vec<usize>,
}

impl LatticeSplit {
    /// Exponent over `x` and coefficients on the free `y` logarithms of the
    /// pullback of `u^ξ` (ξ over the old u-block).
    pub fn pullback_parts(&self, xi: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
        let a = self.ax.vec_mul(xi);
        let mut q = self.ey.vec_mul(xi);
        for (i, &j) in self.p1_pivots.iter().enumerate() {
            if !a[j].is_zero() {
                for l in 0..q.len() {
                    q[l] -= &a[j] * self.q1.get(i, l);
                }
            }
        }
        let mut rho = q.clone();
        for (i, &k) in self.d_pivots.iter().enumerate() {
            let c = q[k].clone();
            if c.is_zero() {
                continue;
            }
            for l in 0..rho.len() {
                rho[l] -= &c * self.d.get(i, l);
            }
        }
        for &k in &self.d_pivots {
            rho[k] = Rat::zero();
        }
        (a, rho)
    }

    pub fn free_y(&self) -> Vec<usize> {
        (0..self.y.len()).filter(|l| !self.d_pivots.contains(l)).collect()
    }
}

pub fn mono_image(nvars: usize, order: u32, kappa: &Rat, a: &[i64], mult: &[usize]) -> TruncatedSeries {
    let mut s = TruncatedSeries::constant(nvars, order, kappa.clone());
    for (i, &k) in a.iter().enumerate() {
        if k == 0 {
            continue;
        }
        let base = if mult.contains(&i) {
            TruncatedSeries::var(nvars, order, i).add(&TruncatedSeries::one(nvars, order))
        } else {
            TruncatedSeries::var(nvars, order, i)
        };
        let p = if k > 0 {
            base.pow(k as u32)
        } else {
            base.invert_unit().expect("translated base is a unit").pow((-k) as u32)
        };
        s = s.mul(&p);
    }
    s
}

/// Bring a translated chart to a monomial frame for the transported lattice.
///
/// Vanishing coordinates absorb units so the leading lattice block is a pure
/// monomial; the remaining lattice rows live on translated coordinates and are
/// rectified into new non-divisor u-variables; leftover translated
/// coordinates become regular.
pub fn normalize_point(model: &LocalModel, chart: &PointChart) -> Result<Normalized, FoliationError> {
    let f1 = &chart.frame;
    let n1 = f1.len();
    let order = model.order;
    let ub_old = model.frame.u_block();
    // vanishing log coordinates: u-class in the new frame and not translated
    let x: Vec<usize> = f1.u_block().into_iter().filter(|i| !chart.mult.contains(i)).collect();
    let y = chart.mult.clone();
    let k_old = ub_old.len();
    let mut ax = ExponentMatrix::zeros(k_old, x.len());
    let mut ey = ExponentMatrix::zeros(k_old, y.len());
    for (j, (_, a)) in chart.mono.iter().enumerate() {
        for (c, &i) in x.iter().enumerate() {
            ax.set(j, c, rat(a[i]));
        }
        for (c, &i) in y.iter().enumerate() {
            ey.set(j, c, rat(a[i]));
        }
    }
    let b = model.b();
    let pq = b.mul(&ax).unwrap().hstack(&b.mul(&ey).unwrap());
    let (red, piv) = pq.rref();
    let t = x.len();
    let top: Vec<usize> = (0..red.rows()).filter(|&r| piv[r] < t).collect();
    let bot: Vec<usize> = (0..red.rows()).filter(|&r| piv[r] >= t).collect();
    let xcols: Vec<usize> = (0..t).collect();
    let ycols: Vec<usize> = (t..t + y.len()).collect();
    let p1 = red.select(&top, &xcols);
    let q1 = red.select(&top, &ycols);
    let p1_pivots: Vec<usize> = top.iter().map(|&r| piv[r]).collect();
    let d = red.select(&bot, &ycols);
    let d_pivots: Vec<usize> = bot.iter().map(|&r| piv[r] - t).collect();

    // final frame: pivot y's become non-divisor u's, free y's become regular
    let mut frame = f1.clone();
    for (l, &i) in y.iter().enumerate() {
        let c = if d_pivots.contains(&l) { VarClass::U { divisor: false } } else { VarClass::W };
        frame = frame.with_class(i, c);
    }
    let ub_new = frame.u_block();
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    for r in 0..p1.rows() {
        let mut row = vec![Rat::zero(); ub_new.len()];
        for (c, &i) in x.iter().enumerate() {
            row[ub_new.iter().position(|&j| j == i).unwrap()] = p1.get(r, c).clone();
        }
        rows.push(row);
    }
    for &l in &d_pivots {
        let mut row = vec![Rat::zero(); ub_new.len()];
        row[ub_new.iter().position(|&j| j == y[l]).unwrap()] = Rat::one();
        rows.push(row);
    }
    let b_new = ExponentMatrix::from_rows(ub_new.len(), &rows);

    // images of the pre-normalization coordinates in the final frame
    let var = |i: usize| TruncatedSeries::var(n1, order, i);
    let mut eta: Vec<TruncatedSeries> = vec![TruncatedSeries::zero(n1, order); y.len()];
    for l in 0..y.len() {
        if !d_pivots.contains(&l) {
            eta[l] = var(y[l]).log1p()?;
        }
    }
    for (r, &k) in d_pivots.iter().enumerate() {
        let mut e = var(y[k]).log1p()?;
        for l in 0..y.len() {
            if !d_pivots.contains(&l) && !d.get(r, l).is_zero() {
                e = e.sub(&eta[l].scale(d.get(r, l)));
            }
        }
        eta[k] = e;
    }
    let mut pre_images: Vec<TruncatedSeries> = (0..n1).map(var).collect();
    for l in 0..y.len() {
        if d_pivots.contains(&l) {
            pre_images[y[l]] = eta[l].exp()?.sub(&TruncatedSeries::one(n1, order));
        }
    }
    for (r, &j) in p1_pivots.iter().enumerate() {
        let mut e = TruncatedSeries::zero(n1, order);
        for l in 0..y.len() {
            if !q1.get(r, l).is_zero() {
                e = e.add(&eta[l].scale(q1.get(r, l)));
            }
        }
        if !e.is_zero() {
            pre_images[x[j]] = var(x[j]).mul(&e.neg().exp()?);
        }
    }
    // old variables: compose, building u-images from their multiplicative form
    let mut old_images: Vec<TruncatedSeries> = Vec::with_capacity(model.nvars());
    for j in 0..model.nvars() {
        let im = match ub_old.iter().position(|&i| i == j) {
            Some(p) => {
                let (kappa, a) = &chart.mono[p];
                mono_image(n1, order, kappa, a, &chart.mult).substitute(&pre_images)?
            }
            None => chart.old_images[j].substitute(&pre_images)?,
        };
        old_images.push(im);
    }
    let mut out = model.transform(frame.clone(), &b_new, &chart.old_images)?;
    out.gens = out.gens.iter().map(|g| g.substitute(&pre_images)).collect::<Result<_, _>>()?;
    out.passengers = out.passengers.iter().map(|g| g.substitute(&pre_images)).collect::<Result<_, _>>()?;
    let data = LatticeSplit {
        x,
        y: y.clone(),
        ax,
        ey,
        p1,
        q1,
        p1_pivots,
        d,
        d_pivots,
    };
    Ok(Normalized { model: out, old_images, data })
}

/// Re-center `model` at a nearby point given by one value per variable.
pub fn recenter(model: &LocalModel, point: &[Rat]) -> Result<LocalModel, FoliationError> {
    Ok(recenter_full(model, point)?.model)
}

pub fn recenter_full(model: &LocalModel, point: &[Rat]) -> Result<Normalized, FoliationError> {
    let n = model.nvars();
    if point.len() != n {
        return Err(FoliationError::Domain("point has the wrong dimension".into()));
    }
    let lb = model.log_block();
    let ub = model.frame.u_block();
    let order = model.order;
    let mut frame = model.frame.clone();
    let mut old_images = Vec::with_capacity(n);
    let mut mult = Vec::new();
    for i in 0..n {
        let c = &point[i];
        let cls = model.frame.class(i);
        if c.is_zero() {
            old_images.push(TruncatedSeries::var(n, order, i));
            continue;
        }
        if cls.is_divisor() {
            return Err(FoliationError::Domain(format!("{} lies on the divisor", model.frame.name(i))));
        }
        if cls == VarClass::Frozen {
            return Err(FoliationError::Domain(format!("{} is frozen", model.frame.name(i))));
        }
        let shifted = TruncatedSeries::var(n, order, i).add(&TruncatedSeries::one(n, order));
        if lb.contains(&i) {
            mult.push(i);
            old_images.push(shifted.scale(c));
        } else {
            frame = frame.with_class(i, VarClass::W);
            old_images.push(TruncatedSeries::var(n, order, i).add(&TruncatedSeries::constant(n, order, c.clone())));
        }
    }
    if mult.is_empty() && old_images.iter().enumerate().all(|(i, s)| *s == TruncatedSeries::var(n, order, i)) {
        let data = trivial_split(model);
        return Ok(Normalized { model: model.clone(), old_images: model.identity_images(), data });
    }
    let mono: Vec<(Rat, Vec<i64>)> = ub
        .iter()
        .map(|&i| {
            let mut a = vec![0i64; n];
            a[i] = 1;
            let kappa = if point[i].is_zero() { Rat::one() } else { point[i].clone() };
            (kappa, a)
        })
        .collect();
    let chart = PointChart { frame, old_images, mult, mono };
    normalize_point(model, &chart)
}

fn trivial_split(model: &LocalModel) -> LatticeSplit {
    let x = model.frame.u_block();
    let k = x.len();
    let b = model.b();
    let (red, piv) = b.rref();
    LatticeSplit {
        x,
        y: vec![],
        ax: ExponentMatrix::identity(k),
        ey: ExponentMatrix::zeros(k, 0),
        p1: red,
        q1: ExponentMatrix::zeros(b.rows(), 0),
        p1_pivots: piv,
        d: ExponentMatrix::zeros(0, 0),
        d_pivots: vec![],
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FittingVerdict {
    Admissible { d0: usize },
    NotAdmissible { k: usize, witness: String },
}

/// Generalized Fitting check for the coordinate center `{x_c = 0 : c ∈ center}`.
///
/// With `M[i][l] = X_i(x_{c_l})`, `Γ_k` is the center ideal plus the k×k minors
/// of `M`. `Γ_k` is the unit ideal iff some minor has a nonzero constant term;
/// `Γ_k` lies in the center ideal iff every minor vanishes on the center.
pub fn fitting_admissible(model: &LocalModel, center: &[usize]) -> Result<FittingVerdict, FoliationError> {
    if center.is_empty() {
        return Err(FoliationError::Center("empty center".into()));
    }
    for &c in center {
        if c >= model.nvars() || model.frame.class(c) == VarClass::Frozen {
            return Err(FoliationError::Center(format!("variable index {c} is not a chart coordinate")));
        }
    }
    let n = model.nvars();
    let order = model.order;
    let fields = model.generators();
    let hs: Vec<TruncatedSeries> = center.iter().map(|&c| TruncatedSeries::var(n, order, c)).collect();
    let m: Vec<Vec<TruncatedSeries>> = fields.iter().map(|x| hs.iter().map(|h| x.apply(h)).collect()).collect();
    let d = model.leaf_dim();
    let mut d0 = 0;
    for k in 1..=d {
        if minors(&m, k).iter().any(|(_, _, det)| det.is_unit()) {
            d0 = k;
        } else {
            break;
        }
    }
    for k in d0 + 1..=d {
        for (rows, cols, det) in minors(&m, k) {
            if !det.restrict_zero(center).is_zero() {
                let names = model.frame.names();
                let rn: Vec<String> = rows.iter().map(|&r| fields[r].display(names)).collect();
                let cn: Vec<String> = cols.iter().map(|&c| names[center[c]].clone()).collect();
                return Ok(FittingVerdict::NotAdmissible {
                    k,
                    witness: format!("det[{}]({}) = {}", rn.join("; "), cn.join(", "), det.display(names)),
                });
            }
        }
    }
    Ok(FittingVerdict::Admissible { d0 })
}

type Minor = (Vec<usize>, Vec<usize>, TruncatedSeries);

fn minors(m: &[Vec<TruncatedSeries>], k: usize) -> Vec<Minor> {
    let nr = m.len();
    let nc = m.first().map(|r| r.len()).unwrap_or(0);
    if k > nr || k > nc {
        return Vec::new();
    }
    let mut out = Vec::new();
    for rows in combinations(nr, k) {
        for cols in combinations(nc, k) {
            let sub: Vec<Vec<TruncatedSeries>> =
                rows.iter().map(|&r| cols.iter().map(|&c| m[r][c].clone()).collect()).collect();
            out.push((rows.clone(), cols, determinant(&sub)));
        }
    }
    out
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

pub fn determinant(m: &[Vec<TruncatedSeries>]) -> TruncatedSeries {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = TruncatedSeries::zero(m[0][0].nvars(), m[0][0].order());
    for c in 0..n {
        if m[0][c].is_zero() {
            continue;
        }
        let minor: Vec<Vec<TruncatedSeries>> =
            m[1..].iter().map(|r| r.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, x)| x.clone()).collect()).collect();
        let t = m[0][c].mul(&determinant(&minor));
        acc = if c % 2 == 0 { acc.add(&t) } else { acc.sub(&t) };
    }
    acc
}

/// Fitting data for a center cut out by arbitrary polynomials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FittingReport {
    /// Interreduced generators of `Γ_1, Γ_2, …`.
    pub gammas: Vec<Vec<TruncatedSeries>>,
    pub verdict: FittingVerdict,
}

/// Same check as [`fitting_admissible`] for a center `{h_1 = … = h_s = 0}`.
///
/// Containment in the center ideal is certified by exact division; it is
/// refuted when a single generator's lowest-degree form does not divide the
/// lowest-degree form of the candidate.
pub fn fitting_general(model: &LocalModel, center: &[TruncatedSeries]) -> FittingReport {
    let fields = model.generators();
    let m: Vec<Vec<TruncatedSeries>> = fields.iter().map(|x| center.iter().map(|h| x.apply(h)).collect()).collect();
    let d = model.leaf_dim();
    let mut gammas = Vec::new();
    for k in 1..=d {
        let mut gens: Vec<TruncatedSeries> = center.to_vec();
        gens.extend(minors(&m, k).into_iter().map(|(_, _, det)| det));
        gammas.push(interreduce(gens));
    }
    let mut d0 = 0;
    for (k, g) in gammas.iter().enumerate() {
        if g.iter().any(|s| s.is_unit()) {
            d0 = k + 1;
        } else {
            break;
        }
    }
    let names = model.frame.names();
    let failure = (d0 + 1..=d).find_map(|k| {
        gammas[k - 1].iter().find(|g| !ideal_contains(center, g)).map(|g| (k, g.display(names)))
    });
    let verdict = match failure {
        Some((k, witness)) => FittingVerdict::NotAdmissible { k, witness },
        None => FittingVerdict::Admissible { d0 },
    };
    FittingReport { gammas, verdict }
}

fn deglex(a: &MultiIdx, b: &MultiIdx) -> std::cmp::Ordering {
    a.degree().cmp(&b.degree()).then_with(|| a.0.cmp(&b.0))
}

fn leading(s: &TruncatedSeries) -> Option<(MultiIdx, Rat)> {
    s.terms().max_by(|a, b| deglex(a.0, b.0)).map(|(e, c)| (e.clone(), c.clone()))
}

/// Multivariate division remainder (deg-lex, polynomials).
fn reduce(p: &TruncatedSeries, by: &[TruncatedSeries]) -> TruncatedSeries {
    let mut p = p.clone();
    let mut rem = TruncatedSeries::zero(p.nvars(), p.order());
    while let Some((e, c)) = leading(&p) {
        let mut divided = false;
        for g in by {
            let Some((ge, gc)) = leading(g) else { continue };
            if let Some(q) = e.checked_sub(&ge) {
                let t = g.mul_monomial(&q).scale(&(&c / &gc));
                p = p.sub(&t);
                divided = true;
                break;
            }
        }
        if !divided {
            let t = TruncatedSeries::monomial(p.nvars(), p.order(), e, c);
            rem = rem.add(&t);
            p = p.sub(&t);
        }
    }
    rem
}

fn monic(s: &TruncatedSeries) -> TruncatedSeries {
    match leading(s) {
        Some((_, c)) => s.scale(&c.recip()),
        None => s.clone(),
    }
}

/// Reduce each generator by the others until nothing changes; drop zeros.
pub fn interreduce(gens: Vec<TruncatedSeries>) -> Vec<TruncatedSeries> {
    let mut g: Vec<TruncatedSeries> = gens.into_iter().filter(|s| !s.is_zero()).map(|s| monic(&s)).collect();
    loop {
        let mut changed = false;
        for i in 0..g.len() {
            let others: Vec<TruncatedSeries> =
                g.iter().enumerate().filter(|(j, s)| *j != i && !s.is_zero()).map(|(_, s)| s.clone()).collect();
            let r = reduce(&g[i], &others);
            if r != g[i] {
                g[i] = monic(&r);
                changed = true;
            }
        }
        g.retain(|s| !s.is_zero());
        if !changed {
            break;
        }
    }
    g.sort_by(|a, b| deglex(&leading(b).unwrap().0, &leading(a).unwrap().0));
    g
}

fn ideal_contains(ideal: &[TruncatedSeries], p: &TruncatedSeries) -> bool {
    if reduce(p, ideal).is_zero() {
        return true;
    }
    if ideal.len() == 1 {
        // lowest-degree forms: in(h) must divide in(p) for p ∈ (h)
        let lowest = |s: &TruncatedSeries| {
            let m = s.min_degree().unwrap_or(0);
            TruncatedSeries::from_terms(
                s.nvars(),
                s.order(),
                s.terms().filter(|(e, _)| e.degree() == m).map(|(e, c)| (e.clone(), c.clone())),
            )
        };
        let lh = lowest(&ideal[0]);
        let lp = lowest(p);
        return reduce(&lp, &[lh]).is_zero();
    }
    false
}

/// Sum of `c_i ·` (vector field applied), handy for tests on the duality property.
pub fn log_field_on_monomial(c: &[Rat], e: &[Rat]) -> Rat {
    dot(c, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_linear::ratvec;

    fn frame(spec: &[(&str, VarClass)]) -> ChartFrame {
        ChartFrame::new(spec.iter().map(|s| s.0.to_string()).collect(), spec.iter().map(|s| s.1).collect()).unwrap()
    }

    const UD: VarClass = VarClass::U { divisor: true };
    const UN: VarClass = VarClass::U { divisor: false };

    #[test]
    fn generators_from_lattice() {
        let f = frame(&[("u1", UD), ("u2", UD)]);
        let b = ExponentMatrix::from_ints(2, &[vec![1, 1]]);
        let m = LocalModel::new(f.clone(), &b, vec![], 12).unwrap();
        assert_eq!(m.generators(), vec![VectorField::Log(ratvec(&[1, -1]))]);
        assert_eq!(m.leaf_dim(), 1);
        let m = LocalModel::new(f.clone(), &ExponentMatrix::identity(2), vec![], 12).unwrap();
        assert!(m.generators().is_empty());
        assert_eq!(m.leaf_dim(), 0);
        let g = frame(&[("u1", UD), ("w1", VarClass::W)]);
        let m = LocalModel::new(g, &ExponentMatrix::zeros(0, 1), vec![], 12).unwrap();
        assert_eq!(m.generators(), vec![VectorField::Partial(1), VectorField::Log(ratvec(&[1, 0]))]);
        assert!(LocalModel::new(f, &ExponentMatrix::from_ints(2, &[vec![1, 1], vec![2, 2]]), vec![], 12).is_err());
    }

    #[test]
    fn annihilation() {
        let f = frame(&[("u1", UD), ("u2", UD)]);
        let d = distribution_from_first_integrals(&f, &ExponentMatrix::from_ints(2, &[vec![1, 1]])).unwrap();
        assert!(annihilates(&d, &ratvec(&[1, 1])));
        assert!(!annihilates(&d, &ratvec(&[2, 0])));
        assert!(annihilates(&d, &ratvec(&[0, 0])));
    }

    #[test]
    fn recenter_on_a_lattice_coordinate() {
        let f = frame(&[("u1", UD), ("u2", UN)]);
        let b = ExponentMatrix::from_ints(2, &[vec![1, 1]]);
        let g = TruncatedSeries::from_terms(2, 6, [(MultiIdx(vec![1, 1]), rat(1))]);
        let m = LocalModel::new(f, &b, vec![g], 6).unwrap();
        let r = recenter(&m, &[rat(0), rat(1)]).unwrap();
        assert_eq!(r.frame.class(1), VarClass::W);
        assert_eq!(r.b(), &ExponentMatrix::from_ints(1, &[vec![1]]));
        // u1 u2 became a pure monomial in the new chart
        assert_eq!(r.gens[0], TruncatedSeries::var(2, 6, 0).with_exact(false));
        let same = recenter(&m, &[rat(0), rat(0)]).unwrap();
        assert_eq!(same, m);
    }

    #[test]
    fn recenter_without_lattice_reclassifies() {
        let f = frame(&[("u1", UD), ("u2", UN)]);
        let g = TruncatedSeries::from_terms(2, 6, [(MultiIdx(vec![1, 1]), rat(1))]);
        let m = LocalModel::new(f, &ExponentMatrix::zeros(0, 2), vec![g], 6).unwrap();
        let r = recenter(&m, &[rat(0), rat(2)]).unwrap();
        assert_eq!(r.frame.class(1), VarClass::W);
        assert_eq!(r.frame.u_block(), vec![0]);
        assert_eq!(r.b().rows(), 0);
    }

    #[test]
    fn fitting_coordinate_centers() {
        // ∂x, ∂y on (x, y, z) with z a lattice coordinate
        let f = frame(&[("x", VarClass::W), ("y", VarClass::W), ("z", UN)]);
        let m = LocalModel::new(f, &ExponentMatrix::from_ints(1, &[vec![1]]), vec![], 6).unwrap();
        assert_eq!(m.generators(), vec![VectorField::Partial(0), VectorField::Partial(1)]);
        assert_eq!(fitting_admissible(&m, &[0]).unwrap(), FittingVerdict::Admissible { d0: 1 });
        let g = frame(&[("u1", UD), ("u2", UD), ("v", VarClass::V)]);
        let m = LocalModel::new(g, &ExponentMatrix::from_ints(2, &[vec![1, 1]]), vec![], 6).unwrap();
        assert_eq!(fitting_admissible(&m, &[0, 1]).unwrap(), FittingVerdict::Admissible { d0: 0 });
        assert_eq!(fitting_admissible(&m, &[0, 2]).unwrap(), FittingVerdict::Admissible { d0: 1 });
    }

    #[test]
    fn fitting_parabola_center() {
        let f = frame(&[("x", VarClass::W), ("y", VarClass::W), ("z", UN)]);
        let m = LocalModel::new(f, &ExponentMatrix::from_ints(1, &[vec![1]]), vec![], 6).unwrap();
        let h = TruncatedSeries::from_terms(3, 6, [(MultiIdx(vec![2, 0, 0]), rat(1)), (MultiIdx(vec![0, 0, 1]), rat(-1))]);
        let rep = fitting_general(&m, &[h]);
        let x = TruncatedSeries::var(3, 6, 0);
        let z = TruncatedSeries::var(3, 6, 2);
        assert_eq!(rep.gammas[0], vec![x, z]);
        assert!(matches!(rep.verdict, FittingVerdict::NotAdmissible { k: 1, .. }));
    }
}
