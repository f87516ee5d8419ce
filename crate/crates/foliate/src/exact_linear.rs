//! Exact rational matrices: products, ranks, kernels and block eliminations.
//!
//! Rank and inversion go through fraction-free (Bareiss) elimination on
//! integer-scaled copies; everything else is plain rational Gaussian
//! elimination, which is fine at the sizes used here.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("pivot block is singular")]
    SingularPivot,
    #[error("matrix is not invertible")]
    NotInvertible,
}

/// Dense row-major rational matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExponentMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl fmt::Debug for ExponentMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(r, c))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl ExponentMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ExponentMatrix { rows, cols, data: vec![Rat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rat::one());
        }
        m
    }

    pub fn from_rows(cols: usize, rows: &[Vec<Rat>]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix rows");
            data.extend(r.iter().cloned());
        }
        ExponentMatrix { rows: rows.len(), cols, data }
    }

    /// Build from integer rows; `cols` is needed so an empty row list still has a width.
    pub fn from_ints(cols: usize, rows: &[Vec<i64>]) -> Self {
        let rs: Vec<Vec<Rat>> = rows.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect();
        Self::from_rows(cols, &rs)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Rat {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rat) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Rat] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_vec(&self, r: usize) -> Vec<Rat> {
        self.row(r).to_vec()
    }

    pub fn col_vec(&self, c: usize) -> Vec<Rat> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Rat>> {
        (0..self.rows).map(|r| self.row_vec(r)).collect()
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|x| x.is_integer())
    }

    /// Integer entries as i64; panics on fractions or overflow.
    pub fn to_i64_rows(&self) -> Vec<Vec<i64>> {
        self.to_rows()
            .iter()
            .map(|r| r.iter().map(|x| x.to_integer().to_i64().expect("entry fits i64")).collect())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut m = Self::zeros(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                m.set(i, j, self.get(r, c).clone());
            }
        }
        m
    }

    pub fn select_cols(&self, cols: &[usize]) -> Self {
        let all: Vec<usize> = (0..self.rows).collect();
        self.select(&all, cols)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let all: Vec<usize> = (0..self.cols).collect();
        self.select(rows, &all)
    }

    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        ExponentMatrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        let mut m = Self::zeros(self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m.set(r, c, self.get(r, c).clone());
            }
            for c in 0..other.cols {
                m.set(r, self.cols + c, other.get(r, c).clone());
            }
        }
        m
    }

    pub fn push_row(&mut self, row: Vec<Rat>) {
        assert_eq!(row.len(), self.cols);
        self.data.extend(row);
        self.rows += 1;
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        ExponentMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        ExponentMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn mul(&self, other: &Self) -> Result<Self, LinalgError> {
        compose_exponents(self, other)
    }

    /// Row vector times matrix.
    pub fn vec_mul(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(v.len(), self.rows);
        (0..self.cols)
            .map(|c| {
                let mut s = Rat::zero();
                for (r, x) in v.iter().enumerate() {
                    if !x.is_zero() {
                        s += x * self.get(r, c);
                    }
                }
                s
            })
            .collect()
    }

    /// Matrix times column vector.
    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), v)).collect()
    }

    pub fn rank(&self) -> usize {
        bareiss_rank(&self.integer_rows())
    }

    /// Each row scaled by the lcm of its denominators.
    fn integer_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|r| integer_row(self.row(r))).collect()
    }

    pub fn inverse(&self) -> Result<Self, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::Dimension(format!("inverse of {}x{}", self.rows, self.cols)));
        }
        bareiss_inverse(self)
    }

    /// Reduced row echelon form with the pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else { continue };
            m.swap_rows(r, p);
            let inv = m.get(r, c).recip();
            for j in 0..m.cols {
                let v = m.get(r, j) * &inv;
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i != r && !m.get(i, c).is_zero() {
                    let f = m.get(i, c).clone();
                    for j in 0..m.cols {
                        let v = m.get(i, j) - &f * m.get(r, j);
                        m.set(i, j, v);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        let kept: Vec<usize> = (0..pivots.len()).collect();
        (m.select_rows(&kept), pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// First maximal set of linearly independent rows, scanning top to bottom.
    pub fn independent_rows(&self) -> Vec<usize> {
        let mut picked: Vec<usize> = Vec::new();
        let mut acc = ExponentMatrix::zeros(0, self.cols);
        for r in 0..self.rows {
            let mut trial = acc.clone();
            trial.push_row(self.row_vec(r));
            if trial.rank() > acc.rows() {
                acc = trial;
                picked.push(r);
            }
        }
        picked
    }

    /// First maximal set of linearly independent columns.
    pub fn independent_cols(&self) -> Vec<usize> {
        self.transpose().independent_rows()
    }

    /// Canonical basis of the row space: RREF, primitive integer rows, sorted
/// lexicographically from largest to smallest (so `e1` comes before `e2`).
    pub fn canonical_row_basis(&self) -> Self {
        let (r, _) = self.rref();
        let mut rows: Vec<Vec<Rat>> = r.to_rows().iter().map(|x| primitive(x)).collect();
        rows.sort_by(|a, b| cmp_rows(b, a));
        ExponentMatrix::from_rows(self.cols, &rows)
    }

    /// Coordinates of `v` in terms of the rows of `self`, if it lies in the row span.
    pub fn row_coords(&self, v: &[Rat]) -> Option<Vec<Rat>> {
        assert_eq!(v.len(), self.cols);
        // solve x * self = v, i.e. selfᵀ xᵀ = vᵀ
        let t = self.transpose();
        let rhs: Vec<Vec<Rat>> = v.iter().map(|x| vec![x.clone()]).collect();
        let (red, piv) = t.hstack(&ExponentMatrix::from_rows(1, &rhs)).rref();
        if piv.last() == Some(&self.rows) {
            return None;
        }
        let mut x = vec![Rat::zero(); self.rows];
        for (i, &p) in piv.iter().enumerate() {
            x[p] = red.get(i, self.rows).clone();
        }
        Some(x)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    assert_eq!(a.len(), b.len());
    let mut s = Rat::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            s += x * y;
        }
    }
    s
}

pub fn cmp_rows(a: &[Rat], b: &[Rat]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn integer_row(row: &[Rat]) -> Vec<BigInt> {
    let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    row.iter().map(|x| (x * Rat::from_integer(l.clone())).to_integer()).collect()
}

/// Scale a rational vector to a primitive integer vector whose first nonzero entry is positive.
pub fn primitive(row: &[Rat]) -> Vec<Rat> {
    let ints = integer_row(row);
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return row.to_vec();
    }
    let sign = ints.iter().find(|x| !x.is_zero()).map(|x| x.signum()).unwrap_or_else(BigInt::one);
    ints.iter().map(|x| Rat::from_integer(x / &g * &sign)).collect()
}

fn bareiss_rank(rows: &[Vec<BigInt>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut m: Vec<Vec<BigInt>> = rows.to_vec();
    let n = m.len();
    let cols = m[0].len();
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        if r == n {
            break;
        }
        let Some(p) = (r..n).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        for i in r + 1..n {
            for j in c + 1..cols {
                let v = (&m[r][c] * &m[i][j] - &m[i][c] * &m[r][j]) / &prev;
                m[i][j] = v;
            }
            m[i][c] = BigInt::zero();
        }
        prev = m[r][c].clone();
        r += 1;
    }
    r
}

fn bareiss_inverse(a: &ExponentMatrix) -> Result<ExponentMatrix, LinalgError> {
    let n = a.rows;
    // fraction-free Gauss-Jordan on [D·A | D] where D scales rows to integers
    let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for r in 0..n {
        let l = a.row(r).iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let lr = Rat::from_integer(l.clone());
        let mut row: Vec<BigInt> = a.row(r).iter().map(|x| (x * &lr).to_integer()).collect();
        row.extend((0..n).map(|c| if c == r { l.clone() } else { BigInt::zero() }));
        m.push(row);
    }
    let mut prev = BigInt::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !m[i][k].is_zero()) else {
            return Err(LinalgError::NotInvertible);
        };
        m.swap(k, p);
        for i in 0..n {
            if i == k {
                continue;
            }
            for j in 0..2 * n {
                if j == k {
                    continue;
                }
                let v = (&m[k][k] * &m[i][j] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    // now m = [det·I | det·A⁻¹]
    let mut inv = ExponentMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            inv.set(r, c, Rat::new(m[r][n + c].clone(), m[r][r].clone()));
        }
    }
    Ok(inv)
}

/// `AB`; if `u = x^B` then `u^A = x^{AB}`.
pub fn compose_exponents(a: &ExponentMatrix, b: &ExponentMatrix) -> Result<ExponentMatrix, LinalgError> {
    if a.cols != b.rows {
        return Err(LinalgError::Dimension(format!(
            "{}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut m = ExponentMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let x = a.get(i, k);
            if x.is_zero() {
                continue;
            }
            for j in 0..b.cols {
                let y = b.get(k, j);
                if !y.is_zero() {
                    let v = m.get(i, j) + x * y;
                    m.set(i, j, v);
                }
            }
        }
    }
    Ok(m)
}

/// Canonical basis of `{α : B αᵀ = 0}`: primitive integer rows, sorted lexicographically.
pub fn right_kernel_basis(b: &ExponentMatrix) -> ExponentMatrix {
    let k = b.cols;
    let (red, piv) = b.rref();
    let free: Vec<usize> = (0..k).filter(|c| !piv.contains(c)).collect();
    let mut basis = Vec::with_capacity(free.len());
    for &f in &free {
        let mut v = vec![Rat::zero(); k];
        v[f] = Rat::one();
        for (i, &p) in piv.iter().enumerate() {
            v[p] = -red.get(i, f).clone();
        }
        basis.push(v);
    }
    ExponentMatrix::from_rows(k, &basis).canonical_row_basis()
}

/// Block data of a pivoted Schur elimination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchurSplit {
    pub a1p: ExponentMatrix,
    pub a1pp: ExponentMatrix,
    pub a2p: ExponentMatrix,
    pub a2pp: ExponentMatrix,
    /// `A2'' − A1'' (A1')⁻¹ A2'`
    pub l: ExponentMatrix,
}

/// Split `m` into pivot rows/cols (primed) and the rest (double primed).
///
/// `A1'` is pivot rows × pivot cols, `A2'` pivot rows × other cols,
/// `A1''` other rows × pivot cols, `A2''` other rows × other cols.
pub fn schur_split(
    m: &ExponentMatrix,
    pivot_rows: &[usize],
    pivot_cols: &[usize],
) -> Result<SchurSplit, LinalgError> {
    if pivot_rows.len() != pivot_cols.len() {
        return Err(LinalgError::SingularPivot);
    }
    let other_rows: Vec<usize> = (0..m.rows).filter(|r| !pivot_rows.contains(r)).collect();
    let other_cols: Vec<usize> = (0..m.cols).filter(|c| !pivot_cols.contains(c)).collect();
    let a1p = m.select(pivot_rows, pivot_cols);
    let a2p = m.select(pivot_rows, &other_cols);
    let a1pp = m.select(&other_rows, pivot_cols);
    let a2pp = m.select(&other_rows, &other_cols);
    let inv = a1p.inverse().map_err(|_| LinalgError::SingularPivot)?;
    let corr = a1pp.mul(&inv)?.mul(&a2p)?;
    let l = a2pp.sub(&corr);
    Ok(SchurSplit { a1p, a1pp, a2p, a2pp, l })
}

pub fn in_row_span(v: &[Rat], b: &ExponentMatrix) -> bool {
    assert_eq!(v.len(), b.cols, "vector length must match column count");
    if v.iter().all(|x| x.is_zero()) {
        return true;
    }
    let mut ext = b.clone();
    ext.push_row(v.to_vec());
    ext.rank() == b.rank()
}

/// Integer vectors as rationals.
pub fn ratvec(v: &[i64]) -> Vec<Rat> {
    v.iter().map(|&x| rat(x)).collect()
}

pub fn is_zero_vec(v: &[Rat]) -> bool {
    v.iter().all(|x| x.is_zero())
}

/// `x^p` for a rational `x` and integer `p`.
pub fn rat_pow(x: &Rat, p: &BigInt) -> Rat {
    let e = p.abs().to_u32().expect("exponent fits u32");
    let r = num_traits::pow(x.clone(), e as usize);
    if p.is_negative() {
        r.recip()
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_hand_example() {
        let a = ExponentMatrix::from_ints(2, &[vec![1, 2]]);
        let b = ExponentMatrix::from_ints(3, &[vec![1, 0, 1], vec![0, 1, 1]]);
        assert_eq!(compose_exponents(&a, &b).unwrap(), ExponentMatrix::from_ints(3, &[vec![1, 2, 3]]));
        let z = ExponentMatrix::from_ints(2, &[vec![0, 0]]);
        assert!(compose_exponents(&z, &b).unwrap().is_zero());
        assert_eq!(compose_exponents(&b, &ExponentMatrix::identity(3)).unwrap(), b);
        assert!(compose_exponents(&b, &b).is_err());
    }

    #[test]
    fn kernels() {
        let b = ExponentMatrix::from_ints(2, &[vec![1, 1]]);
        assert_eq!(right_kernel_basis(&b), ExponentMatrix::from_ints(2, &[vec![1, -1]]));
        assert_eq!(right_kernel_basis(&ExponentMatrix::identity(2)).rows(), 0);
        let empty = ExponentMatrix::zeros(0, 2);
        assert_eq!(right_kernel_basis(&empty), ExponentMatrix::identity(2));
    }

    #[test]
    fn schur_examples() {
        let m = ExponentMatrix::from_ints(2, &[vec![1, 1], vec![1, 2]]);
        let s = schur_split(&m, &[0], &[0]).unwrap();
        assert_eq!(s.l, ExponentMatrix::from_ints(1, &[vec![1]]));
        let s = schur_split(&ExponentMatrix::identity(2), &[0], &[0]).unwrap();
        assert_eq!(s.l, ExponentMatrix::from_ints(1, &[vec![1]]));
        let z = ExponentMatrix::from_ints(2, &[vec![0, 1], vec![1, 1]]);
        assert_eq!(schur_split(&z, &[0], &[0]), Err(LinalgError::SingularPivot));
    }

    #[test]
    fn row_span_examples() {
        let b = ExponentMatrix::from_ints(2, &[vec![1, 1]]);
        assert!(in_row_span(&ratvec(&[2, 2]), &b));
        assert!(!in_row_span(&ratvec(&[1, 0]), &b));
        assert!(in_row_span(&ratvec(&[0, 0]), &b));
        assert_eq!(b.row_coords(&ratvec(&[3, 3])), Some(vec![rat(3)]));
        assert_eq!(b.row_coords(&ratvec(&[3, 1])), None);
    }

    #[test]
    fn inverse_and_rank() {
        let m = ExponentMatrix::from_rows(
            2,
            &[vec![ratio(1, 2), rat(1)], vec![rat(3), ratio(-2, 3)]],
        );
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv).unwrap(), ExponentMatrix::identity(2));
        let s = ExponentMatrix::from_ints(3, &[vec![1, 2, 3], vec![2, 4, 6], vec![0, 1, 1]]);
        assert_eq!(s.rank(), 2);
        assert!(s.select(&[0, 1], &[0, 1]).inverse().is_err());
    }
}
