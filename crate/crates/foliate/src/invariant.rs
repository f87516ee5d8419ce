//! The splitting `f_i = g_i + u^δ T_i` and the tangency order ν.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::exact_linear::{dot, rat, right_kernel_basis, ExponentMatrix, Rat};
use crate::foliation::{FoliationError, LocalModel, VarClass};
use crate::series::{MultiIdx, SeriesError, TruncatedSeries};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InvariantError {
    #[error("every generator is a first integral")]
    Trivial,
    #[error("chain method needs polynomial generators")]
    NonPolynomial,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal check failed: {0}")]
    Internal(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Foliation(#[from] FoliationError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub g: Vec<TruncatedSeries>,
    /// Full-length exponent, supported on the log block.
    pub delta: MultiIdx,
    pub t: Vec<TruncatedSeries>,
}

impl Decomposition {
    /// δ restricted to the u-block.
    pub fn delta_u(&self, model: &LocalModel) -> Vec<u32> {
        model.frame.u_block().iter().map(|&i| self.delta.0[i]).collect()
    }
}

pub fn decompose(model: &LocalModel) -> Result<Decomposition, InvariantError> {
    let n = model.nvars();
    let lb = model.log_block();
    let mut g = Vec::new();
    let mut res = Vec::new();
    for f in &model.gens {
        let (fi, r): (Vec<_>, Vec<_>) = f.terms().partition(|(e, _)| model.is_first_integral_monomial(e));
        let fi = TruncatedSeries::from_terms(n, f.order(), fi.into_iter().map(|(e, c)| (e.clone(), c.clone())));
        let r = TruncatedSeries::from_terms(n, f.order(), r.into_iter().map(|(e, c)| (e.clone(), c.clone())));
        g.push(fi.with_exact(f.is_exact()));
        res.push(r.with_exact(f.is_exact()));
    }
    let mut delta: Option<Vec<u32>> = None;
    for r in &res {
        if let Some(m) = r.min_exponents(&lb) {
            delta = Some(match delta {
                None => m,
                Some(d) => d.iter().zip(&m).map(|(a, b)| *a.min(b)).collect(),
            });
        }
    }
    let Some(dl) = delta else { return Err(InvariantError::Trivial) };
    let mut full = vec![0u32; n];
    for (k, &i) in lb.iter().enumerate() {
        full[i] = dl[k];
    }
    let delta = MultiIdx(full);
    let t = res.iter().map(|r| r.divide_monomial(&delta).expect("δ divides every residual")).collect();
    Ok(Decomposition { g, delta, t })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Nu {
    Finite(u32),
    Infinite,
}

impl Nu {
    pub fn finite(&self) -> Option<u32> {
        match self {
            Nu::Finite(k) => Some(*k),
            Nu::Infinite => None,
        }
    }
}

impl fmt::Display for Nu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nu::Finite(k) => write!(f, "{k}"),
            Nu::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Nu {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Nu::Finite(k) => s.serialize_u32(*k),
            Nu::Infinite => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TangencyOrder {
    pub value: Nu,
    /// Generator index and the multi-index of regular derivatives.
    pub witness: Option<(usize, MultiIdx)>,
}

/// ν with respect to the model's own coordinates.
pub fn tangency_order_scan(model: &LocalModel) -> Result<TangencyOrder, InvariantError> {
    let dec = decompose(model)?;
    Ok(scan_decomposition(model, &dec))
}

pub fn scan_decomposition(model: &LocalModel, dec: &Decomposition) -> TangencyOrder {
    let reg = model.regular();
    let mut best: Option<(u32, usize, MultiIdx)> = None;
    for (i, t) in dec.t.iter().enumerate() {
        // terms iterate in graded order, so the first pure-regular one is minimal
        if let Some((e, _)) = t.terms().find(|(e, _)| e.support().iter().all(|j| reg.contains(j))) {
            let d = e.degree();
            if best.as_ref().map(|b| d < b.0).unwrap_or(true) {
                best = Some((d, i, e.clone()));
            }
        }
    }
    match best {
        Some((d, i, e)) => TangencyOrder { value: Nu::Finite(d), witness: Some((i, e)) },
        None => TangencyOrder { value: Nu::Infinite, witness: None },
    }
}

/// ν from the ideal chain `I_0 = (u^δ T_i)`, `I_{k+1} = I_k + θ(I_k)`.
///
/// Works with the ℚ-span of iterated derivatives; the answer is the first
/// step where some element is `u^δ` times a unit, or ∞ once the span stops
/// growing without that happening.
pub fn tangency_order_chain(model: &LocalModel) -> Result<Nu, InvariantError> {
    if !model.is_exact() {
        return Err(InvariantError::NonPolynomial);
    }
    let dec = decompose(model)?;
    let fields = model.generators();
    let mut span = Span::default();
    let mut frontier: Vec<TruncatedSeries> = Vec::new();
    for t in &dec.t {
        let f = t.mul_monomial(&dec.delta);
        if span.insert(&f) {
            frontier.push(f);
        }
    }
    let mut k = 0u32;
    loop {
        if span.has_monomial(&dec.delta) {
            return Ok(Nu::Finite(k));
        }
        let mut next = Vec::new();
        for f in &frontier {
            for x in &fields {
                let h = x.apply(f);
                if span.insert(&h) {
                    next.push(h);
                }
            }
        }
        if next.is_empty() {
            return Ok(Nu::Infinite);
        }
        frontier = next;
        k += 1;
    }
}

/// Row-reduced basis of a space of polynomials.
#[derive(Default)]
struct Span {
    rows: Vec<(MultiIdx, TruncatedSeries)>,
}

impl Span {
    fn reduce(&self, f: &TruncatedSeries) -> TruncatedSeries {
        let mut f = f.clone();
        for (p, r) in &self.rows {
            let c = f.coeff(p);
            if !c.is_zero() {
                f = f.sub(&r.scale(&c));
            }
        }
        f
    }

    fn insert(&mut self, f: &TruncatedSeries) -> bool {
        let r = self.reduce(f);
        let Some((p, c)) = r.terms().next().map(|(e, c)| (e.clone(), c.clone())) else { return false };
        let r = r.scale(&c.recip());
        for (_, row) in self.rows.iter_mut() {
            let k = row.coeff(&p);
            if !k.is_zero() {
                *row = row.sub(&r.scale(&k));
            }
        }
        self.rows.push((p, r));
        true
    }

    fn has_monomial(&self, e: &MultiIdx) -> bool {
        self.rows.iter().any(|(_, r)| !r.coeff(e).is_zero())
    }
}

#[derive(Debug, Clone)]
pub struct ZeroOne {
    pub i0: usize,
    /// Full-length exponent of the new first integral's u-part.
    pub beta: MultiIdx,
    pub eps: u8,
    /// Constant in front of `u^β w^ε`.
    pub coeff: Rat,
    /// Variable that was rectified when `eps = 1`.
    pub w: Option<usize>,
    pub model: LocalModel,
    /// Old coordinates written in the new ones.
    pub images: Vec<TruncatedSeries>,
}

/// Put the witness generator in the form `g + c·u^β w^ε` and, when `refine`
/// is set, shrink the distribution to the fields that kill it.
pub fn zero_one_change(model: &LocalModel, refine: bool) -> Result<ZeroOne, InvariantError> {
    let dec = decompose(model)?;
    let nu = scan_decomposition(model, &dec);
    let (i0, lambda) = nu.witness.clone().ok_or_else(|| InvariantError::Precondition("ν is infinite".into()))?;
    let n = model.nvars();
    let order = model.order;
    let t = &dec.t[i0];
    match nu.value {
        Nu::Finite(0) => {
            let t0 = t.constant_term();
            let lb = model.log_block();
            let ub = model.frame.u_block();
            let pos: Vec<usize> = lb.iter().map(|i| ub.iter().position(|j| j == i).unwrap()).collect();
            let ker = right_kernel_basis(&model.b().select_cols(&pos));
            let dl: Vec<Rat> = lb.iter().map(|&i| rat(dec.delta.0[i] as i64)).collect();
            let alpha = (0..ker.rows())
                .map(|r| ker.row_vec(r))
                .find(|a| !dot(a, &dl).is_zero())
                .ok_or_else(|| InvariantError::Internal("δ lies in the first-integral lattice".into()))?;
            let s = dot(&alpha, &dl);
            let c: Vec<Rat> = alpha.iter().map(|a| a / &s).collect();
            let that = t.scale(&t0.recip());
            // fixed point u = ũ · T̂(u)^{−c}
            let mut images: Vec<TruncatedSeries> = model.identity_images();
            for _ in 0..=order + 1 {
                let th = that.substitute(&images)?;
                let mut next = model.identity_images();
                for (k, &i) in lb.iter().enumerate() {
                    if !c[k].is_zero() {
                        next[i] = TruncatedSeries::var(n, order, i).mul(&th.unit_power(&-c[k].clone())?);
                    }
                }
                let done = next.iter().zip(&images).all(|(a, b)| a.terms().eq(b.terms()));
                images = next;
                if done {
                    break;
                }
            }
            let b = if refine {
                let mut b = model.b().clone();
                b.push_row(dec.delta_u(model).iter().map(|&x| rat(x as i64)).collect());
                b
            } else {
                model.b().clone()
            };
            let out = model.transform(model.frame.clone(), &b, &images)?;
            let want = dec.g[i0].add(&TruncatedSeries::monomial(n, order, dec.delta.clone(), t0.clone()));
            if !out.gens[i0].sub(&want).is_zero() {
                return Err(InvariantError::Internal("unit absorption did not close".into()));
            }
            Ok(ZeroOne { i0, beta: dec.delta.clone(), eps: 0, coeff: t0, w: None, model: out, images })
        }
        Nu::Finite(1) => {
            let w = lambda.support()[0];
            let c = t.coeff(&MultiIdx::unit(n, w));
            let rest = t.sub(&TruncatedSeries::var(n, order, w).scale(&c));
            let cinv = c.recip();
            let mut images = model.identity_images();
            for _ in 0..=order + 1 {
                let r = rest.substitute(&images)?;
                let next = TruncatedSeries::var(n, order, w).sub(&r).scale(&cinv);
                let done = next.terms().eq(images[w].terms());
                images[w] = next;
                if done {
                    break;
                }
            }
            let (frame, b) = if refine {
                let frame = model.frame.with_class(w, VarClass::U { divisor: false });
                let ub_new = frame.u_block();
                let ub_old = model.frame.u_block();
                let mut rows = Vec::new();
                for r in 0..model.b().rows() {
                    let mut row = vec![Rat::zero(); ub_new.len()];
                    for (k, &i) in ub_old.iter().enumerate() {
                        row[ub_new.iter().position(|&j| j == i).unwrap()] = model.b().get(r, k).clone();
                    }
                    rows.push(row);
                }
                let mut row = vec![Rat::zero(); ub_new.len()];
                for (k, &i) in ub_new.iter().enumerate() {
                    row[k] = rat(dec.delta.0[i] as i64);
                }
                row[ub_new.iter().position(|&j| j == w).unwrap()] = Rat::one();
                rows.push(row);
                (frame, ExponentMatrix::from_rows(ub_new.len(), &rows))
            } else {
                (model.frame.clone(), model.b().clone())
            };
            let out = model.transform(frame, &b, &images)?;
            let want = dec.g[i0].add(&TruncatedSeries::monomial(n, order, dec.delta.add(&MultiIdx::unit(n, w)), Rat::one()));
            if !out.gens[i0].sub(&want).is_zero() {
                return Err(InvariantError::Internal("w-rectification did not close".into()));
            }
            Ok(ZeroOne { i0, beta: dec.delta.clone(), eps: 1, coeff: Rat::one(), w: Some(w), model: out, images })
        }
        _ => Err(InvariantError::Precondition(format!("tangency order {} is not 0 or 1", nu.value))),
    }
}

pub fn zero_one_normal_form(model: &LocalModel) -> Result<ZeroOne, InvariantError> {
    zero_one_change(model, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foliation::ChartFrame;

    fn model(spec: &[(&str, VarClass)], b: ExponentMatrix, gens: &[&[(&[u32], i64)]]) -> LocalModel {
        let frame = ChartFrame::new(spec.iter().map(|s| s.0.to_string()).collect(), spec.iter().map(|s| s.1).collect()).unwrap();
        let n = spec.len();
        let gens = gens
            .iter()
            .map(|g| TruncatedSeries::from_terms(n, 12, g.iter().map(|(e, c)| (MultiIdx(e.to_vec()), rat(*c)))))
            .collect();
        LocalModel::new(frame, &b, gens, 12).unwrap()
    }

    const UD: VarClass = VarClass::U { divisor: true };
    const W: VarClass = VarClass::W;

    #[test]
    fn decompose_examples() {
        let m = model(&[("u1", UD), ("u2", UD)], ExponentMatrix::from_ints(2, &[vec![1, 1]]), &[&[(&[1, 1], 1), (&[2, 0], 1)]]);
        let d = decompose(&m).unwrap();
        assert_eq!(d.g[0], TruncatedSeries::from_terms(2, 12, [(MultiIdx(vec![1, 1]), rat(1))]));
        assert_eq!(d.delta, MultiIdx(vec![2, 0]));
        assert_eq!(d.t[0], TruncatedSeries::one(2, 12));
        let m = model(&[("u1", UD), ("w1", W)], ExponentMatrix::zeros(0, 1), &[&[(&[1, 1], 1)]]);
        let d = decompose(&m).unwrap();
        assert!(d.g[0].is_zero());
        assert_eq!(d.delta_u(&m), vec![1]);
        assert_eq!(d.t[0], TruncatedSeries::var(2, 12, 1));
        let m = model(&[("u1", UD), ("u2", UD)], ExponentMatrix::from_ints(2, &[vec![1, 1]]), &[&[(&[1, 1], 1)]]);
        assert_eq!(decompose(&m), Err(InvariantError::Trivial));
    }

    #[test]
    fn scan_and_chain() {
        let cases: [(&[(&[u32], i64)], u32); 3] = [(&[(&[1, 1], 1)], 1), (&[(&[1, 2], 1)], 2), (&[(&[1, 0], 1), (&[1, 1], 1)], 0)];
        for (g, nu) in cases {
            let m = model(&[("u1", UD), ("w1", W)], ExponentMatrix::zeros(0, 1), &[g]);
            let s = tangency_order_scan(&m).unwrap();
            assert_eq!(s.value, Nu::Finite(nu));
            assert_eq!(tangency_order_chain(&m).unwrap(), Nu::Finite(nu));
        }
        let m = model(&[("u1", UD), ("u2", UD)], ExponentMatrix::zeros(0, 2), &[&[(&[1, 0], 1), (&[0, 1], 1)]]);
        assert_eq!(tangency_order_scan(&m).unwrap().value, Nu::Infinite);
        assert_eq!(tangency_order_chain(&m).unwrap(), Nu::Infinite);
    }

    #[test]
    fn witness_tie_break() {
        let m = model(
            &[("u1", UD), ("w1", W), ("w2", W)],
            ExponentMatrix::zeros(0, 1),
            &[&[(&[1, 0, 2], 1)], &[(&[1, 1, 1], 1), (&[1, 0, 2], 1)]],
        );
        let s = tangency_order_scan(&m).unwrap();
        assert_eq!(s.witness, Some((0, MultiIdx(vec![0, 0, 2]))));
    }

    #[test]
    fn zero_one_examples() {
        // u1·(1 + u1 + w1): unit residual
        let m = model(&[("u1", UD), ("w1", W)], ExponentMatrix::zeros(0, 1), &[&[(&[1, 0], 1), (&[2, 0], 1), (&[1, 1], 1)]]);
        let z = zero_one_normal_form(&m).unwrap();
        assert_eq!(z.eps, 0);
        assert_eq!(z.model.b(), &ExponentMatrix::from_ints(1, &[vec![1]]));
        assert_eq!(z.model.gens[0].terms().count(), 1);
        // u1 w1
        let m = model(&[("u1", UD), ("w1", W)], ExponentMatrix::zeros(0, 1), &[&[(&[1, 1], 1)]]);
        let z = zero_one_normal_form(&m).unwrap();
        assert_eq!(z.eps, 1);
        assert!(z.model.is_first_integral(&z.model.gens[0]));
        assert_eq!(z.model.b(), &ExponentMatrix::from_ints(2, &[vec![1, 1]]));
        // u1 (w1 + w1²)
        let m = model(&[("u1", UD), ("w1", W)], ExponentMatrix::zeros(0, 1), &[&[(&[1, 1], 1), (&[1, 2], 1)]]);
        let z = zero_one_normal_form(&m).unwrap();
        assert_eq!(z.eps, 1);
        assert_eq!(z.model.gens[0].terms().count(), 1);
        assert_eq!(z.model.leaf_dim(), m.leaf_dim() - 1);
    }
}
