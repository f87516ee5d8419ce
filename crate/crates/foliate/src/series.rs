//! Sparse multivariate power series over ℚ, truncated at a total degree.
//!
//! A series remembers whether it is *exact*: a polynomial whose terms are all
//! present. Anything that drops terms at the truncation boundary clears the
//! flag. Translating substitutions (images with a nonzero constant term) are
//! only sound on exact sources, see [`TruncatedSeries::substitute`].

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::exact_linear::{rat, Rat};

pub const DEFAULT_ORDER: u32 = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("frame mismatch: {0} vs {1} variables")]
    FrameMismatch(usize, usize),
    #[error("series is not a unit (zero constant term)")]
    NonUnit,
    #[error("constant {0} has no rational power {1}")]
    IrrationalPower(String, String),
    #[error("translating substitution into a truncated series")]
    DivergentSubstitution,
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Exponent vector. Ordered by total degree, then so that `x1` precedes `x2`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiIdx(pub Vec<u32>);

impl MultiIdx {
    pub fn zero(n: usize) -> Self {
        MultiIdx(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        MultiIdx(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, o: &MultiIdx) -> MultiIdx {
        MultiIdx(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn divides(&self, o: &MultiIdx) -> bool {
        self.0.iter().zip(&o.0).all(|(a, b)| a <= b)
    }

    pub fn checked_sub(&self, o: &MultiIdx) -> Option<MultiIdx> {
        if !o.divides(self) {
            return None;
        }
        Some(MultiIdx(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect()))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] > 0).collect()
    }

    pub fn to_rats(&self) -> Vec<Rat> {
        self.0.iter().map(|&x| rat(x as i64)).collect()
    }
}

impl Ord for MultiIdx {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIdx {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TruncatedSeries {
    nvars: usize,
    order: u32,
    terms: BTreeMap<MultiIdx, Rat>,
    exact: bool,
}

impl TruncatedSeries {
    pub fn zero(nvars: usize, order: u32) -> Self {
        TruncatedSeries { nvars, order, terms: BTreeMap::new(), exact: true }
    }

    pub fn constant(nvars: usize, order: u32, c: Rat) -> Self {
        let mut s = Self::zero(nvars, order);
        if !c.is_zero() {
            s.terms.insert(MultiIdx::zero(nvars), c);
        }
        s
    }

    pub fn one(nvars: usize, order: u32) -> Self {
        Self::constant(nvars, order, Rat::one())
    }

    pub fn var(nvars: usize, order: u32, i: usize) -> Self {
        Self::monomial(nvars, order, MultiIdx::unit(nvars, i), Rat::one())
    }

    pub fn monomial(nvars: usize, order: u32, e: MultiIdx, c: Rat) -> Self {
        assert_eq!(e.len(), nvars);
        let mut s = Self::zero(nvars, order);
        if e.degree() > order {
            s.exact = false;
        } else if !c.is_zero() {
            s.terms.insert(e, c);
        }
        s
    }

    /// Build from raw terms; terms above the order are dropped (and the result marked inexact).
    pub fn from_terms(nvars: usize, order: u32, terms: impl IntoIterator<Item = (MultiIdx, Rat)>) -> Self {
        let mut s = Self::zero(nvars, order);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars);
            s.add_term(e, c);
        }
        s
    }

    fn add_term(&mut self, e: MultiIdx, c: Rat) {
        if c.is_zero() {
            return;
        }
        if e.degree() > self.order {
            self.exact = false;
            return;
        }
        match self.terms.get_mut(&e) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&e);
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn with_exact(mut self, exact: bool) -> Self {
        self.exact = exact;
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIdx, &Rat)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, e: &MultiIdx) -> Rat {
        self.terms.get(e).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant_term(&self) -> Rat {
        self.coeff(&MultiIdx::zero(self.nvars))
    }

    pub fn is_unit(&self) -> bool {
        !self.constant_term().is_zero()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.degree()).max()
    }

    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().next().map(|e| e.degree())
    }

    /// Lower the truncation order, dropping terms above it.
    pub fn truncate(&self, order: u32) -> Self {
        let mut s = Self::zero(self.nvars, order.min(self.order));
        s.exact = self.exact;
        for (e, c) in &self.terms {
            s.add_term(e.clone(), c.clone());
        }
        s
    }

    fn check(&self, o: &Self) -> Result<(), SeriesError> {
        if self.nvars != o.nvars {
            return Err(SeriesError::FrameMismatch(self.nvars, o.nvars));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Self {
        self.check(o).expect("series frame");
        let order = self.order.min(o.order);
        let mut s = self.truncate(order);
        s.exact = s.exact && o.exact;
        for (e, c) in &o.terms {
            s.add_term(e.clone(), c.clone());
        }
        if o.order > order && o.terms.keys().any(|e| e.degree() > order) {
            s.exact = false;
        }
        s
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Rat::one())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars, self.order).with_exact(self.exact);
        }
        let mut s = self.clone();
        for v in s.terms.values_mut() {
            *v *= c;
        }
        s
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.try_mul(o).expect("series frame")
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self, SeriesError> {
        self.check(o)?;
        let order = self.order.min(o.order);
        let mut exact = self.exact && o.exact;
        if (self.order > order && self.terms.keys().any(|e| e.degree() > order))
            || (o.order > order && o.terms.keys().any(|e| e.degree() > order))
        {
            exact = false;
        }
        let mut bs: Vec<(&MultiIdx, &Rat, u32)> = o.terms.iter().map(|(e, c)| (e, c, e.degree())).collect();
        bs.sort_by_key(|x| x.2);
        let mut acc: HashMap<MultiIdx, Rat> = HashMap::new();
        for (ea, ca) in &self.terms {
            let da = ea.degree();
            for (eb, cb, db) in &bs {
                if da + db > order {
                    if !ca.is_zero() && !cb.is_zero() {
                        exact = false;
                    }
                    break;
                }
                let e = ea.add(eb);
                let v = ca * *cb;
                match acc.get_mut(&e) {
                    Some(x) => *x += v,
                    None => {
                        acc.insert(e, v);
                    }
                }
            }
        }
        let terms = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Ok(TruncatedSeries { nvars: self.nvars, order, terms, exact })
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut result = Self::one(self.nvars, self.order);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn invert_unit(&self) -> Result<Self, SeriesError> {
        let c = self.constant_term();
        if c.is_zero() {
            return Err(SeriesError::NonUnit);
        }
        let cinv = c.recip();
        // 1/a = (1/c) Σ (−h)^k with h = a/c − 1
        let h = self.scale(&cinv).sub(&Self::one(self.nvars, self.order));
        if h.is_zero() {
            return Ok(Self::constant(self.nvars, self.order, cinv).with_exact(self.exact));
        }
        let nh = h.neg();
        let mut sum = Self::one(self.nvars, self.order);
        let mut p = Self::one(self.nvars, self.order);
        for _ in 0..self.order {
            p = p.mul(&nh);
            if p.is_zero() {
                break;
            }
            sum = sum.add(&p);
        }
        Ok(sum.scale(&cinv).with_exact(false))
    }

    /// `Σ_k binom(r, k) h^k` for `h` without constant term.
    fn binomial(h: &Self, r: &Rat) -> Self {
        let mut sum = Self::one(h.nvars, h.order);
        let mut p = Self::one(h.nvars, h.order);
        let mut coef = Rat::one();
        for k in 0..h.order {
            coef = coef * (r - rat(k as i64)) / rat(k as i64 + 1);
            p = p.mul(h);
            if p.is_zero() || coef.is_zero() {
                break;
            }
            sum = sum.add(&p.scale(&coef));
        }
        sum
    }

    pub fn unit_power(&self, r: &Rat) -> Result<Self, SeriesError> {
        let c = self.constant_term();
        if c.is_zero() {
            return Err(SeriesError::NonUnit);
        }
        if r.is_integer() {
            let n = r.to_integer();
            let k = n.abs().to_u32().ok_or_else(|| SeriesError::Precondition("exponent too large".into()))?;
            let base = if n.is_negative() { self.invert_unit()? } else { self.clone() };
            return Ok(base.pow(k));
        }
        let cr = rational_power(&c, r).ok_or_else(|| SeriesError::IrrationalPower(c.to_string(), r.to_string()))?;
        let h = self.scale(&c.recip()).sub(&Self::one(self.nvars, self.order));
        let b = Self::binomial(&h, r);
        let exact = h.is_zero() && self.exact;
        Ok(b.scale(&cr).with_exact(exact))
    }

    /// `exp(h)` for `h` with zero constant term.
    pub fn exp(&self) -> Result<Self, SeriesError> {
        if self.is_unit() {
            return Err(SeriesError::Precondition("exp of a series with constant term".into()));
        }
        let mut sum = Self::one(self.nvars, self.order);
        let mut p = Self::one(self.nvars, self.order);
        for k in 1..=self.order {
            p = p.mul(self).scale(&rat(k as i64).recip());
            if p.is_zero() {
                break;
            }
            sum = sum.add(&p);
        }
        let exact = self.is_zero() && self.exact;
        Ok(sum.with_exact(exact))
    }

    /// `log(1 + h)` for `h` with zero constant term.
    pub fn log1p(&self) -> Result<Self, SeriesError> {
        if self.is_unit() {
            return Err(SeriesError::Precondition("log1p of a series with constant term".into()));
        }
        let mut sum = Self::zero(self.nvars, self.order);
        let mut p = Self::one(self.nvars, self.order);
        for k in 1..=self.order {
            p = p.mul(self);
            if p.is_zero() {
                break;
            }
            let c = if k % 2 == 1 { rat(1) } else { rat(-1) } / rat(k as i64);
            sum = sum.add(&p.scale(&c));
        }
        let exact = self.is_zero() && self.exact;
        Ok(sum.with_exact(exact))
    }

    /// Formal composition `a(images)`.
    ///
    /// Images with a nonzero constant term are only accepted when `self` is exact;
    /// otherwise the composition is not determined by the truncated data.
    pub fn substitute(&self, images: &[TruncatedSeries]) -> Result<Self, SeriesError> {
        if images.len() != self.nvars {
            return Err(SeriesError::FrameMismatch(self.nvars, images.len()));
        }
        let target = images.first().map(|s| s.nvars).unwrap_or(0);
        for im in images {
            if im.nvars != target {
                return Err(SeriesError::FrameMismatch(target, im.nvars));
            }
        }
        let order = images.iter().map(|s| s.order).fold(self.order, u32::min);
        let used: Vec<bool> = (0..self.nvars).map(|i| self.terms.keys().any(|e| e.0[i] > 0)).collect();
        if !self.exact && (0..self.nvars).any(|i| used[i] && images[i].is_unit()) {
            return Err(SeriesError::DivergentSubstitution);
        }
        let mut exact = self.exact;
        for i in 0..self.nvars {
            if used[i] && !images[i].exact {
                exact = false;
            }
        }
        let mut cache: HashMap<(usize, u32), TruncatedSeries> = HashMap::new();
        let mut out = Self::zero(target, order);
        for (e, c) in &self.terms {
            let mut t = Self::constant(target, order, c.clone());
            for (i, &k) in e.0.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let p = power_cached(&mut cache, images, i, k, order);
                t = t.mul(&p);
                if t.is_zero() && t.exact {
                    break;
                }
            }
            exact = exact && t.exact;
            out = out.add(&t);
        }
        Ok(out.with_exact(exact))
    }

    pub fn derivative(&self, i: usize) -> Self {
        let mut s = Self::zero(self.nvars, self.order);
        s.exact = self.exact;
        for (e, c) in &self.terms {
            let k = e.0[i];
            if k == 0 {
                continue;
            }
            let mut f = e.clone();
            f.0[i] -= 1;
            s.add_term(f, c * rat(k as i64));
        }
        // derivative of an inexact series is known one degree less far
        if !self.exact && self.order > 0 {
            s = s.truncate(self.order - 1);
        }
        s
    }

    /// Apply `Σ c_j x_j ∂_{x_j}`, which scales each monomial by ⟨c, e⟩.
    pub fn euler(&self, c: &[Rat]) -> Self {
        assert_eq!(c.len(), self.nvars);
        let mut s = Self::zero(self.nvars, self.order);
        s.exact = self.exact;
        for (e, v) in &self.terms {
            let w: Rat = e.0.iter().zip(c).map(|(&k, ci)| ci * rat(k as i64)).sum();
            s.add_term(e.clone(), v * w);
        }
        s
    }

    /// Decompose `a = Σ_j a_j v^j` with every `a_j` free of `v`.
    pub fn v_coefficients(&self, v: usize) -> Vec<Self> {
        let top = self.terms.keys().map(|e| e.0[v]).max().unwrap_or(0) as usize;
        let mut out = vec![Self::zero(self.nvars, self.order).with_exact(self.exact); top + 1];
        for (e, c) in &self.terms {
            let j = e.0[v] as usize;
            let mut f = e.clone();
            f.0[v] = 0;
            out[j].add_term(f, c.clone());
        }
        out
    }

    /// Replace `v` by `ṽ + φ` so that the `ṽ^{ν−1}` coefficient vanishes.
    ///
    /// Returns the image of `v` and the transformed series.
    pub fn center_shift(&self, v: usize, nu: u32) -> Result<(Self, Self), SeriesError> {
        if nu == 0 {
            return Err(SeriesError::Precondition("ν must be positive".into()));
        }
        let mut dnu = self.clone();
        for _ in 0..nu {
            dnu = dnu.derivative(v);
        }
        let c = dnu.constant_term();
        if c.is_zero() {
            return Err(SeriesError::Precondition("∂_v^ν T is not a unit".into()));
        }
        let mut f = self.clone();
        for _ in 0..nu - 1 {
            f = f.derivative(v);
        }
        if f.is_unit() {
            return Err(SeriesError::Precondition("∂_v^(ν−1) T is a unit".into()));
        }
        let n = self.nvars;
        let order = self.order;
        let vvar = Self::var(n, order, v);
        let mut phi = Self::zero(n, order);
        let cinv = c.recip();
        for _ in 0..=order + 1 {
            let mut im: Vec<Self> = (0..n).map(|i| Self::var(n, order, i)).collect();
            im[v] = phi.clone();
            let val = f.substitute(&im)?;
            if val.is_zero() {
                break;
            }
            phi = phi.sub(&val.scale(&cinv));
        }
        let phi_exact = {
            let mut im: Vec<Self> = (0..n).map(|i| Self::var(n, order, i)).collect();
            im[v] = phi.clone();
            f.substitute(&im)?.is_zero() && f.exact
        };
        let phi = phi.with_exact(phi_exact);
        let image = vvar.add(&phi);
        let mut im: Vec<Self> = (0..n).map(|i| Self::var(n, order, i)).collect();
        im[v] = image.clone();
        let t = self.substitute(&im)?;
        Ok((image, t))
    }

    /// Exact division by a monomial, if every term is divisible.
    pub fn divide_monomial(&self, m: &MultiIdx) -> Option<Self> {
        let mut s = Self::zero(self.nvars, self.order);
        s.exact = self.exact;
        for (e, c) in &self.terms {
            s.terms.insert(e.checked_sub(m)?, c.clone());
        }
        Some(s)
    }

    pub fn mul_monomial(&self, m: &MultiIdx) -> Self {
        let mut s = Self::zero(self.nvars, self.order);
        s.exact = self.exact;
        for (e, c) in &self.terms {
            s.add_term(e.add(m), c.clone());
        }
        s
    }

    /// Set the listed variables to zero.
    pub fn restrict_zero(&self, vars: &[usize]) -> Self {
        let mut s = Self::zero(self.nvars, self.order);
        s.exact = self.exact;
        for (e, c) in &self.terms {
            if vars.iter().all(|&i| e.0[i] == 0) {
                s.terms.insert(e.clone(), c.clone());
            }
        }
        s
    }

    /// Move to a new variable set; `map[i]` is the new index of old variable `i`.
    pub fn reindex(&self, new_nvars: usize, map: &[usize]) -> Self {
        assert_eq!(map.len(), self.nvars);
        let mut s = Self::zero(new_nvars, self.order);
        s.exact = self.exact;
        for (e, c) in &self.terms {
            let mut f = vec![0u32; new_nvars];
            for (i, &k) in e.0.iter().enumerate() {
                f[map[i]] += k;
            }
            s.add_term(MultiIdx(f), c.clone());
        }
        s
    }

    /// Whether only the listed variables occur.
    pub fn depends_only_on(&self, vars: &[usize]) -> bool {
        self.terms.keys().all(|e| e.support().iter().all(|i| vars.contains(i)))
    }

    pub fn depends_on(&self, i: usize) -> bool {
        self.terms.keys().any(|e| e.0[i] > 0)
    }

    /// Componentwise minimum exponent on `vars` over all terms.
    pub fn min_exponents(&self, vars: &[usize]) -> Option<Vec<u32>> {
        let mut it = self.terms.keys();
        let first = it.next()?;
        let mut m: Vec<u32> = vars.iter().map(|&i| first.0[i]).collect();
        for e in it {
            for (k, &i) in vars.iter().enumerate() {
                m[k] = m[k].min(e.0[i]);
            }
        }
        Some(m)
    }

    /// Evaluate at a rational point (exact series only make this meaningful).
    pub fn eval(&self, point: &[Rat]) -> Rat {
        assert_eq!(point.len(), self.nvars);
        let mut s = Rat::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &k) in e.0.iter().enumerate() {
                if k > 0 {
                    t *= num_traits::pow(point[i].clone(), k as usize);
                }
            }
            s += t;
        }
        s
    }

    pub fn display(&self, names: &[String]) -> String {
        format_series(self, names)
    }
}

fn power_cached(
    cache: &mut HashMap<(usize, u32), TruncatedSeries>,
    images: &[TruncatedSeries],
    i: usize,
    k: u32,
    order: u32,
) -> TruncatedSeries {
    if let Some(p) = cache.get(&(i, k)) {
        return p.clone();
    }
    let p = if k == 1 {
        images[i].truncate(order)
    } else {
        let prev = power_cached(cache, images, i, k - 1, order);
        prev.mul(&images[i].truncate(order))
    };
    cache.insert((i, k), p.clone());
    p
}

/// `c^r` when it is rational.
pub fn rational_power(c: &Rat, r: &Rat) -> Option<Rat> {
    let q = r.denom().to_u32()?;
    let p = r.numer();
    let num = c.numer();
    let den = c.denom();
    if num.is_negative() && q % 2 == 0 {
        return None;
    }
    let root = |x: &BigInt| -> Option<BigInt> {
        let a = x.abs();
        let rt = a.nth_root(q);
        if num_traits::pow(rt.clone(), q as usize) == a {
            Some(if x.is_negative() { -rt } else { rt })
        } else {
            None
        }
    };
    let base = Rat::new(root(num)?, root(den)?);
    Some(crate::exact_linear::rat_pow(&base, p))
}

fn format_rat(c: &Rat) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

pub fn format_series(s: &TruncatedSeries, names: &[String]) -> String {
    if s.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (k, (e, c)) in s.terms().enumerate() {
        let neg = c.is_negative();
        let a = c.abs();
        if k == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mut factors: Vec<String> = Vec::new();
        if !a.is_one() || e.is_zero() {
            factors.push(format_rat(&a));
        }
        for (i, &p) in e.0.iter().enumerate() {
            match p {
                0 => {}
                1 => factors.push(names[i].clone()),
                _ => factors.push(format!("{}^{}", names[i], p)),
            }
        }
        out.push_str(&factors.join("*"));
    }
    out
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.nvars).map(|i| format!("x{}", i + 1)).collect();
        write!(f, "{}", format_series(self, &names))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_linear::ratio;

    fn poly(n: usize, order: u32, terms: &[(&[u32], Rat)]) -> TruncatedSeries {
        TruncatedSeries::from_terms(n, order, terms.iter().map(|(e, c)| (MultiIdx(e.to_vec()), c.clone())))
    }

    #[test]
    fn graded_order() {
        let mut v = vec![MultiIdx(vec![0, 2]), MultiIdx(vec![1, 0]), MultiIdx(vec![1, 1]), MultiIdx(vec![0, 1]), MultiIdx(vec![2, 0])];
        v.sort();
        let got: Vec<Vec<u32>> = v.into_iter().map(|m| m.0).collect();
        assert_eq!(got, vec![vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
    }

    #[test]
    fn mul_examples() {
        let a = poly(1, 5, &[(&[0], rat(1)), (&[1], rat(1))]);
        let b = poly(1, 5, &[(&[0], rat(1)), (&[1], rat(-1))]);
        assert_eq!(a.mul(&b), poly(1, 5, &[(&[0], rat(1)), (&[2], rat(-1))]));
        let a = poly(1, 2, &[(&[0], rat(1)), (&[1], rat(1)), (&[2], rat(1))]);
        let b = poly(1, 2, &[(&[0], rat(1)), (&[1], rat(-1))]);
        let p = a.mul(&b);
        assert_eq!(p.terms().count(), 1);
        assert_eq!(p.constant_term(), rat(1));
        assert!(!p.is_exact());
        let xn = poly(1, 3, &[(&[3], rat(1))]);
        assert!(xn.mul(&TruncatedSeries::var(1, 3, 0)).is_zero());
    }

    #[test]
    fn invert_examples() {
        let a = poly(1, 3, &[(&[0], rat(1)), (&[1], rat(-1))]);
        let inv = a.invert_unit().unwrap();
        assert_eq!(inv, poly(1, 3, &[(&[0], rat(1)), (&[1], rat(1)), (&[2], rat(1)), (&[3], rat(1))]).with_exact(false));
        assert_eq!(TruncatedSeries::constant(1, 3, rat(4)).invert_unit().unwrap().constant_term(), ratio(1, 4));
        assert_eq!(TruncatedSeries::var(1, 3, 0).invert_unit(), Err(SeriesError::NonUnit));
    }

    #[test]
    fn power_examples() {
        let a = poly(1, 2, &[(&[0], rat(1)), (&[1], rat(1))]);
        let r = a.unit_power(&ratio(1, 2)).unwrap();
        assert_eq!(r.coeff(&MultiIdx(vec![0])), rat(1));
        assert_eq!(r.coeff(&MultiIdx(vec![1])), ratio(1, 2));
        assert_eq!(r.coeff(&MultiIdx(vec![2])), ratio(-1, 8));
        let b = poly(1, 1, &[(&[0], rat(4)), (&[1], rat(1))]);
        let r = b.unit_power(&ratio(1, 2)).unwrap();
        assert_eq!(r.coeff(&MultiIdx(vec![0])), rat(2));
        assert_eq!(r.coeff(&MultiIdx(vec![1])), ratio(1, 4));
        assert_eq!(a.unit_power(&rat(1)).unwrap(), a);
        assert_eq!(a.unit_power(&rat(0)).unwrap(), TruncatedSeries::one(1, 2));
        let two = TruncatedSeries::constant(1, 2, rat(2));
        assert!(matches!(two.unit_power(&ratio(1, 2)), Err(SeriesError::IrrationalPower(..))));
    }

    #[test]
    fn substitute_examples() {
        // v^2 with v -> x(z+1), variables (x, z)
        let v2 = poly(1, 4, &[(&[2], rat(1))]);
        let img = poly(2, 4, &[(&[1, 1], rat(1)), (&[1, 0], rat(1))]);
        let got = v2.substitute(&[img]).unwrap();
        let want = poly(2, 4, &[(&[2, 2], rat(1)), (&[2, 1], rat(2)), (&[2, 0], rat(1))]);
        assert_eq!(got, want);
        // u*w with u -> x^2 on (x, w)
        let uw = poly(2, 4, &[(&[1, 1], rat(1))]);
        let got = uw.substitute(&[poly(2, 4, &[(&[2, 0], rat(1))]), TruncatedSeries::var(2, 4, 1)]).unwrap();
        assert_eq!(got, poly(2, 4, &[(&[2, 1], rat(1))]));
        // x -> y + 1
        let x = TruncatedSeries::var(1, 4, 0);
        let got = x.substitute(&[poly(1, 4, &[(&[1], rat(1)), (&[0], rat(1))])]).unwrap();
        assert_eq!(got, poly(1, 4, &[(&[1], rat(1)), (&[0], rat(1))]));
        let inexact = poly(1, 4, &[(&[0], rat(1)), (&[1], rat(-1))]).invert_unit().unwrap();
        assert_eq!(
            inexact.substitute(&[poly(1, 4, &[(&[1], rat(1)), (&[0], rat(1))])]),
            Err(SeriesError::DivergentSubstitution)
        );
    }

    #[test]
    fn v_coefficient_examples() {
        // variables (v, u, w)
        let a = poly(3, 6, &[(&[2, 0, 0], rat(1)), (&[1, 1, 0], rat(1)), (&[0, 0, 1], rat(1))]);
        let cs = a.v_coefficients(0);
        assert_eq!(cs.len(), 3);
        assert_eq!(cs[0], poly(3, 6, &[(&[0, 0, 1], rat(1))]));
        assert_eq!(cs[1], poly(3, 6, &[(&[0, 1, 0], rat(1))]));
        assert_eq!(cs[2], TruncatedSeries::one(3, 6));
        let b = poly(3, 6, &[(&[2, 0, 0], rat(1)), (&[1, 1, 0], rat(2)), (&[0, 2, 0], rat(1))]);
        let cs = b.v_coefficients(0);
        assert_eq!(cs[0], poly(3, 6, &[(&[0, 2, 0], rat(1))]));
        assert_eq!(cs[1], poly(3, 6, &[(&[0, 1, 0], rat(2))]));
        let c = poly(3, 6, &[(&[0, 1, 1], rat(1))]);
        assert_eq!(c.v_coefficients(0), vec![c.clone()]);
    }

    #[test]
    fn center_shift_examples() {
        // (v, u): v^2 + 2uv
        let t = poly(2, 6, &[(&[2, 0], rat(1)), (&[1, 1], rat(2))]);
        let (img, t2) = t.center_shift(0, 2).unwrap();
        assert_eq!(img, poly(2, 6, &[(&[1, 0], rat(1)), (&[0, 1], rat(-1))]));
        assert_eq!(t2, poly(2, 6, &[(&[2, 0], rat(1)), (&[0, 2], rat(-1))]));
        // (v, w): v^3 + 3wv^2
        let t = poly(2, 6, &[(&[3, 0], rat(1)), (&[2, 1], rat(3))]);
        let (img, t2) = t.center_shift(0, 3).unwrap();
        assert_eq!(img, poly(2, 6, &[(&[1, 0], rat(1)), (&[0, 1], rat(-1))]));
        assert_eq!(t2, poly(2, 6, &[(&[3, 0], rat(1)), (&[1, 2], rat(-3)), (&[0, 3], rat(2))]));
        let t = poly(2, 6, &[(&[2, 0], rat(1))]);
        let (img, t2) = t.center_shift(0, 2).unwrap();
        assert_eq!(img, TruncatedSeries::var(2, 6, 0));
        assert_eq!(t2, t);
    }

    #[test]
    fn exp_log_roundtrip() {
        let h = poly(2, 6, &[(&[1, 0], rat(1)), (&[0, 1], ratio(2, 3)), (&[1, 1], rat(-1))]);
        let back = h.exp().unwrap().sub(&TruncatedSeries::one(2, 6)).log1p().unwrap();
        assert_eq!(back.terms().collect::<Vec<_>>(), h.terms().collect::<Vec<_>>());
    }
}
