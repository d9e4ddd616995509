//! Dense exact and floating point matrix kernels.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::Error;

pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn parse_rational(s: &str) -> Result<Rational, Error> {
    let t = s.trim();
    t.parse::<Rational>()
        .map_err(|_| Error::Parse(format!("not a rational: {s:?}")))
        .and_then(|r| {
            if t.contains("/0") && t.ends_with("/0") {
                Err(Error::Parse(format!("zero denominator: {s:?}")))
            } else {
                Ok(r)
            }
        })
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
    })
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RationalMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self[(i, j)].to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for RationalMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = rat(*v);
            }
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Rational) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        RationalMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Rational] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, Error> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    fn zip(&self, other: &Self, f: impl Fn(&Rational, &Rational) -> Rational) -> Result<Self, Error> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect();
        Ok(RationalMatrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn add(&self, other: &Self) -> Result<Self, Error> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, Error> {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: &Rational) -> Self {
        RationalMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn neg(&self) -> Self {
        self.scale(&rat(-1))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|a| a.is_zero())
    }

    pub fn max_abs(&self) -> Rational {
        self.data.iter().map(|a| a.abs()).max().unwrap_or_else(Rational::zero)
    }

    pub fn nonzero_count(&self) -> usize {
        self.data.iter().filter(|a| !a.is_zero()).count()
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)].clone())
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)].clone();
            }
        }
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut m = Self::zeros(self.rows + other.rows, self.cols + other.cols);
        m.set_block(0, 0, self);
        m.set_block(self.rows, self.cols, other);
        m
    }

    pub fn column(&self, j: usize) -> Vec<Rational> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        (0..self.rows)
            .map(|i| (0..self.cols).fold(Rational::zero(), |acc, j| acc + &self[(i, j)] * &v[j]))
            .collect()
    }

    /// Append `v` as an extra column.
    pub fn augment(&self, v: &[Rational]) -> Self {
        Self::from_fn(self.rows, self.cols + 1, |i, j| {
            if j < self.cols { self[(i, j)].clone() } else { v[i].clone() }
        })
    }

    pub fn to_float(&self) -> FloatMatrix {
        FloatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(rational_to_f64).collect(),
            zero_tol: DEFAULT_TOL,
        }
    }

    /// Rank by Bareiss elimination over the integers after clearing row denominators.
    pub fn rank(&self) -> usize {
        let mut a: Vec<Vec<BigInt>> = (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
                row.iter().map(|x| x.numer() * (&l / x.denom())).collect()
            })
            .collect();
        bareiss_rank(&mut a, self.cols)
    }

    pub fn is_skew(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in i..self.cols {
                if self[(i, j)] != -self[(j, i)].clone() {
                    return false;
                }
            }
        }
        true
    }

    /// Basis of the right kernel via reduced row echelon form.
    pub fn nullspace(&self) -> Vec<Vec<Rational>> {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..a.cols {
            if r == a.rows {
                break;
            }
            let Some(p) = (r..a.rows).find(|&i| !a[(i, c)].is_zero()) else { continue };
            for j in 0..a.cols {
                a.data.swap(r * a.cols + j, p * a.cols + j);
            }
            let inv = a[(r, c)].recip();
            for j in c..a.cols {
                let v = &a[(r, j)] * &inv;
                a[(r, j)] = v;
            }
            for i in 0..a.rows {
                if i != r && !a[(i, c)].is_zero() {
                    let f = a[(i, c)].clone();
                    for j in c..a.cols {
                        let v = &a[(r, j)] * &f;
                        a[(i, j)] -= v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        let mut basis = Vec::new();
        for free in (0..a.cols).filter(|c| !pivots.contains(c)) {
            let mut v = vec![Rational::zero(); a.cols];
            v[free] = Rational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[(row, free)].clone();
            }
            basis.push(v);
        }
        basis
    }
}

fn bareiss_rank(a: &mut [Vec<BigInt>], cols: usize) -> usize {
    let rows = a.len();
    let mut rank = 0;
    let mut prev = BigInt::one();
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(rank, p);
        let piv = a[rank][c].clone();
        for i in rank + 1..rows {
            let f = a[i][c].clone();
            for j in c + 1..cols {
                let v = (&piv * &a[i][j] - &f * &a[rank][j]) / &prev;
                a[i][j] = v;
            }
            a[i][c] = BigInt::zero();
        }
        prev = piv;
        rank += 1;
    }
    rank
}

/// sᵗ·b·s
pub fn congruence(s: &RationalMatrix, b: &RationalMatrix) -> Result<RationalMatrix, Error> {
    if !s.is_square() || !b.is_square() || s.rows() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "congruence of {}x{} by {}x{}",
            b.rows(),
            b.cols(),
            s.rows(),
            s.cols()
        )));
    }
    s.transpose().mul(b)?.mul(s)
}

pub fn skew_check(m: &RationalMatrix) -> bool {
    m.is_skew()
}

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct FloatMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    pub zero_tol: f64,
}

impl std::ops::Index<(usize, usize)> for FloatMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for FloatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl FloatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FloatMatrix { rows, cols, data: vec![0.0; rows * cols], zero_tol: DEFAULT_TOL }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.zero_tol = tol;
        self
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t.zero_tol = self.zero_tol;
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "float product dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        out.zero_tol = self.zero_tol;
        out
    }

    pub fn congruence(&self, s: &Self) -> Self {
        s.transpose().mul(self).mul(s)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|x| *x *= s);
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = self[(r0 + i, c0 + j)];
            }
        }
        m.zero_tol = self.zero_tol;
        m
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Numerical rank by Gaussian elimination with partial pivoting.
    pub fn rank(&self) -> usize {
        let mut a = self.clone();
        let scale = a.max_abs().max(1.0);
        let tol = self.zero_tol.max(1e-12) * scale;
        let mut rank = 0;
        for c in 0..a.cols {
            if rank == a.rows {
                break;
            }
            let (p, best) = (rank..a.rows)
                .map(|i| (i, a[(i, c)].abs()))
                .fold((rank, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= tol {
                continue;
            }
            for j in 0..a.cols {
                a.data.swap(rank * a.cols + j, p * a.cols + j);
            }
            for i in rank + 1..a.rows {
                let f = a[(i, c)] / a[(rank, c)];
                for j in c..a.cols {
                    let v = a[(rank, j)];
                    a[(i, j)] -= f * v;
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn inverse(&self) -> Result<Self, Error> {
        let n = self.rows;
        let m = nalgebra::DMatrix::from_row_slice(n, self.cols, &self.data);
        let inv = m
            .try_inverse()
            .ok_or_else(|| Error::Singular(format!("{n}x{n} float block not invertible")))?;
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = inv[(i, j)];
            }
        }
        out.zero_tol = self.zero_tol;
        Ok(out)
    }
}

pub fn float_of(m: &RationalMatrix) -> FloatMatrix {
    m.to_float()
}

/// Map each entry to the nearest grid value; every entry must lie within `m.zero_tol` of the grid.
pub fn rational_snap(m: &FloatMatrix, grid: &[Rational]) -> Result<RationalMatrix, Error> {
    let gf: Vec<f64> = grid.iter().map(rational_to_f64).collect();
    let mut out = RationalMatrix::zeros(m.rows, m.cols);
    for i in 0..m.rows {
        for j in 0..m.cols {
            let x = m[(i, j)];
            let (k, d) = gf
                .iter()
                .enumerate()
                .map(|(k, g)| (k, (x - g).abs()))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            if !(d <= m.zero_tol) {
                return Err(Error::OffGrid { row: i, col: j, value: x, distance: d });
            }
            out[(i, j)] = grid[k].clone();
        }
    }
    Ok(out)
}

pub fn unit_grid() -> Vec<Rational> {
    vec![rat(-1), rat(0), rat(1)]
}

/// A permutation σ of {0..n-1}; its matrix P has P[σ(i)][i] = 1, so (PᵗXP)[i][j] = X[σ(i)][σ(j)].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self, Error> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(Error::Invalid(format!("not a permutation: {images:?}")));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { images: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.images.len()];
        for (i, &s) in self.images.iter().enumerate() {
            inv[s] = i;
        }
        Permutation { images: inv }
    }

    /// (self ∘ other)(i) = self(other(i))
    pub fn compose(&self, other: &Self) -> Self {
        Permutation { images: other.images.iter().map(|&i| self.images[i]).collect() }
    }

    pub fn matrix(&self) -> RationalMatrix {
        let n = self.images.len();
        let mut m = RationalMatrix::zeros(n, n);
        for (i, &s) in self.images.iter().enumerate() {
            m[(s, i)] = Rational::one();
        }
        m
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &s)| i == s)
    }
}
