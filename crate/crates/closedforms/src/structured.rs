//! Structural descriptions of the commutant `T_𝒥` and of the solution space of `B𝒥 + 𝒥ᵗB = 0`.
//!
//! Real blocks use scalar parameters; complex blocks use 2×2 cells `αI + βJ` with
//! `J = [[0, 1], [−1, 0]]`. Lyapunov solutions are stored on the raw (lower Hankel) side:
//! block `(i, j)` carries `(−1)^p h_{p+q}` at cell `(p, q)`, with `h_s` nonzero only for
//! `max(n_i, n_j) − 1 ≤ s ≤ n_i + n_j − 2`.

use num_traits::{One, Zero};

use crate::jordan::{build_jordan, BlockInfo, BlockPartition, Eigen, JordanSpec};
use crate::linalg::{rat, FloatMatrix, Rational, RationalMatrix};
use crate::Error;

/// `αI + βJ` (β is ignored for real blocks).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    pub alpha: Rational,
    pub beta: Rational,
}

impl Cell {
    pub fn real(a: Rational) -> Self {
        Cell { alpha: a, beta: Rational::zero() }
    }

    pub fn identity() -> Self {
        Cell::real(Rational::one())
    }

    pub fn j() -> Self {
        Cell { alpha: Rational::zero(), beta: Rational::one() }
    }

    pub fn scale(&self, s: &Rational) -> Self {
        Cell { alpha: &self.alpha * s, beta: &self.beta * s }
    }

    pub fn is_zero(&self) -> bool {
        self.alpha.is_zero() && self.beta.is_zero()
    }

    fn write(&self, m: &mut RationalMatrix, r: usize, c: usize, cell: usize) {
        if cell == 1 {
            m[(r, c)] = self.alpha.clone();
        } else {
            m[(r, c)] = self.alpha.clone();
            m[(r, c + 1)] = self.beta.clone();
            m[(r + 1, c)] = -self.beta.clone();
            m[(r + 1, c + 1)] = self.alpha.clone();
        }
    }

    fn read(m: &RationalMatrix, r: usize, c: usize, cell: usize) -> Self {
        if cell == 1 {
            Cell::real(m[(r, c)].clone())
        } else {
            Cell { alpha: m[(r, c)].clone(), beta: m[(r, c + 1)].clone() }
        }
    }
}

pub fn commutes(a: &BlockInfo, b: &BlockInfo) -> bool {
    a.eigen == b.eigen
}

/// Eigenvalue condition for a nonzero Lyapunov block: `λ_i = −λ_j`, or `(−a_i, b_i) = (a_j, b_j)`.
pub fn lyapunov_coupled(a: &BlockInfo, b: &BlockInfo) -> bool {
    match (&a.eigen, &b.eigen) {
        (Eigen::Real(x), Eigen::Real(y)) => *x == -y.clone(),
        (Eigen::Complex(ar, ai), Eigen::Complex(br, bi)) => *ar == -br.clone() && ai == bi,
        _ => false,
    }
}

/// Column shift of an aligned upper Toeplitz block `n_i × n_j` (cell units).
pub fn toeplitz_shift(ni: usize, nj: usize) -> usize {
    nj.saturating_sub(ni)
}

/// Anti-diagonal range `s` for a Lyapunov block pair.
pub fn hankel_range(ni: usize, nj: usize) -> std::ops::RangeInclusive<usize> {
    (ni.max(nj) - 1)..=(ni + nj - 2)
}

/// Allowed cells on anti-diagonal `s` of a Lyapunov block pair.
pub fn hankel_cells(bi: &BlockInfo, bj: &BlockInfo, s: usize) -> Vec<Cell> {
    let diag = bi.index == bj.index;
    match (bi.cell, diag) {
        (1, true) => {
            if s % 2 == 1 {
                vec![Cell::identity()]
            } else {
                vec![]
            }
        }
        (1, false) => vec![Cell::identity()],
        (_, true) => {
            if s % 2 == 1 {
                vec![Cell::identity()]
            } else {
                vec![Cell::j()]
            }
        }
        (_, false) => vec![Cell::identity(), Cell::j()],
    }
}

/// Write `h` on anti-diagonal `s` of block `(i, j)` with the alternating sign, and the skew partner.
pub fn place_hankel(m: &mut RationalMatrix, bi: &BlockInfo, bj: &BlockInfo, s: usize, h: &Cell) {
    let c = bi.cell;
    for p in 0..bi.size {
        if s < p || s - p >= bj.size {
            continue;
        }
        let q = s - p;
        let v = if p % 2 == 0 { h.clone() } else { h.scale(&rat(-1)) };
        v.write(m, bi.offset + p * c, bj.offset + q * c, c);
    }
    if bi.index != bj.index {
        for r in 0..bi.rows() {
            for col in 0..bj.rows() {
                let x = m[(bi.offset + r, bj.offset + col)].clone();
                m[(bj.offset + col, bi.offset + r)] = -x;
            }
        }
    }
}

/// Write `h` on Toeplitz diagonal `t` of block `(i, j)` (aligned).
pub fn place_toeplitz(m: &mut RationalMatrix, bi: &BlockInfo, bj: &BlockInfo, t: usize, h: &Cell) {
    let c = bi.cell;
    let shift = toeplitz_shift(bi.size, bj.size);
    for p in 0..bi.size {
        let q = p + shift + t;
        if q < bj.size {
            h.write(m, bi.offset + p * c, bj.offset + q * c, c);
        }
    }
}

pub fn commutant_basis(spec: &JordanSpec) -> Vec<RationalMatrix> {
    let blocks = spec.blocks();
    let n = spec.n();
    let mut out = Vec::new();
    for bi in &blocks {
        for bj in &blocks {
            if !commutes(bi, bj) {
                continue;
            }
            let cells = if bi.cell == 1 { vec![Cell::identity()] } else { vec![Cell::identity(), Cell::j()] };
            for t in 0..bi.size.min(bj.size) {
                for h in &cells {
                    let mut m = RationalMatrix::zeros(n, n);
                    place_toeplitz(&mut m, bi, bj, t, h);
                    out.push(m);
                }
            }
        }
    }
    out
}

pub fn lyapunov_basis(spec: &JordanSpec) -> Vec<RationalMatrix> {
    let blocks = spec.blocks();
    let n = spec.n();
    let mut out = Vec::new();
    for (i, bi) in blocks.iter().enumerate() {
        for bj in &blocks[i..] {
            if !lyapunov_coupled(bi, bj) {
                continue;
            }
            for s in hankel_range(bi.size, bj.size) {
                for h in hankel_cells(bi, bj, s) {
                    let mut m = RationalMatrix::zeros(n, n);
                    place_hankel(&mut m, bi, bj, s, &h);
                    out.push(m);
                }
            }
        }
    }
    out
}

/// `C^⊠ = 𝒫_N Cᵗ 𝒫_N`.
pub fn blockstar(m: &RationalMatrix, part: &BlockPartition) -> Result<RationalMatrix, Error> {
    let n = part.n();
    if m.rows() != n || m.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "partition of size {n} applied to {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let p = part.reversal();
    p.mul(&m.transpose())?.mul(&p)
}

/// Embed the upper Toeplitz `a` (k×k) as an aligned `n × m` upper Toeplitz matrix using diagonals `0..k`.
pub fn toeplitz_ext(a: &RationalMatrix, n: usize, m: usize) -> Result<RationalMatrix, Error> {
    let k = a.rows();
    if !a.is_square() || k > n.min(m) {
        return Err(Error::DimensionMismatch(format!("toeplitz_ext of {k}x{} into {n}x{m}", a.cols())));
    }
    let shift = toeplitz_shift(n, m);
    Ok(RationalMatrix::from_fn(n, m, |p, q| {
        if q >= p + shift && q - p - shift < k {
            a[(0, q - p - shift)].clone()
        } else {
            Rational::zero()
        }
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Commutant,
    Lyapunov,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Membership {
    pub holds: bool,
    pub skew: bool,
    /// `A𝒥 − 𝒥A` or `B𝒥 + 𝒥ᵗB`.
    pub residual: RationalMatrix,
}

pub fn membership(m: &RationalMatrix, spec: &JordanSpec, which: Which) -> Result<Membership, Error> {
    let j = build_jordan(spec);
    if m.rows() != j.rows() || m.cols() != j.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix against N = {}",
            m.rows(),
            m.cols(),
            j.rows()
        )));
    }
    let skew = m.is_skew();
    let (residual, need_skew) = match which {
        Which::Commutant => (m.mul(&j)?.sub(&j.mul(m)?)?, false),
        Which::Lyapunov => (m.mul(&j)?.add(&j.transpose().mul(m)?)?, true),
    };
    Ok(Membership { holds: residual.is_zero() && (skew || !need_skew), skew, residual })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileEntry {
    pub i: usize,
    pub j: usize,
    /// Anti-diagonal `s` (Hankel) or diagonal `t` (Toeplitz), 0-based.
    pub index: usize,
    pub value: Cell,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct HankelProfile {
    pub entries: Vec<ProfileEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ToeplitzProfile {
    pub entries: Vec<ProfileEntry>,
}

impl HankelProfile {
    /// Read the parameters `h_s` of every coupled pair `i ≤ j` (zero ones omitted).
    pub fn extract(m: &RationalMatrix, spec: &JordanSpec) -> Self {
        let blocks = spec.blocks();
        let mut entries = Vec::new();
        for (i, bi) in blocks.iter().enumerate() {
            for bj in &blocks[i..] {
                if !lyapunov_coupled(bi, bj) {
                    continue;
                }
                for s in hankel_range(bi.size, bj.size) {
                    let p = s - s.min(bj.size - 1);
                    let q = s - p;
                    let c = bi.cell;
                    let v = Cell::read(m, bi.offset + p * c, bj.offset + q * c, c);
                    let v = if p % 2 == 0 { v } else { v.scale(&rat(-1)) };
                    if !v.is_zero() {
                        entries.push(ProfileEntry { i: bi.index, j: bj.index, index: s, value: v });
                    }
                }
            }
        }
        HankelProfile { entries }
    }
}

impl ToeplitzProfile {
    pub fn extract(m: &RationalMatrix, spec: &JordanSpec) -> Self {
        let blocks = spec.blocks();
        let mut entries = Vec::new();
        for bi in &blocks {
            for bj in &blocks {
                if !commutes(bi, bj) {
                    continue;
                }
                let shift = toeplitz_shift(bi.size, bj.size);
                for t in 0..bi.size.min(bj.size) {
                    let c = bi.cell;
                    let v = Cell::read(m, bi.offset, bj.offset + (shift + t) * c, c);
                    if !v.is_zero() {
                        entries.push(ProfileEntry { i: bi.index, j: bj.index, index: t, value: v });
                    }
                }
            }
        }
        ToeplitzProfile { entries }
    }
}

/// A member of `𝓗^K`: skew, solves the Lyapunov-type equation, with its rank.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuredSolution {
    pub matrix: RationalMatrix,
    pub rank: usize,
    pub profile: HankelProfile,
}

impl StructuredSolution {
    pub fn new(matrix: RationalMatrix, spec: &JordanSpec) -> Result<Self, Error> {
        let mem = membership(&matrix, spec, Which::Lyapunov)?;
        if !mem.holds {
            return Err(Error::Invalid("matrix is not a skew solution of B𝒥 + 𝒥ᵗB = 0".into()));
        }
        let rank = matrix.rank();
        let profile = HankelProfile::extract(&matrix, spec);
        Ok(StructuredSolution { matrix, rank, profile })
    }
}

/// Largest deviation of `s` from the commutant pattern (zero off the equal-eigenvalue
/// blocks, aligned upper Toeplitz inside, `αI + βJ` cells).
pub fn commutant_pattern_defect(s: &FloatMatrix, spec: &JordanSpec) -> f64 {
    let blocks = spec.blocks();
    let mut worst: f64 = 0.0;
    for bi in &blocks {
        for bj in &blocks {
            let c = bi.cell;
            if !commutes(bi, bj) {
                for r in 0..bi.rows() {
                    for q in 0..bj.rows() {
                        worst = worst.max(s[(bi.offset + r, bj.offset + q)].abs());
                    }
                }
                continue;
            }
            let shift = toeplitz_shift(bi.size, bj.size);
            for p in 0..bi.size {
                for q in 0..bj.size {
                    let (ea, eb) = if q >= p + shift {
                        let t = q - p - shift;
                        let r0 = bi.offset;
                        let c0 = bj.offset + (shift + t) * c;
                        if c == 1 { (s[(r0, c0)], 0.0) } else { (s[(r0, c0)], s[(r0, c0 + 1)]) }
                    } else {
                        (0.0, 0.0)
                    };
                    let (r, col) = (bi.offset + p * c, bj.offset + q * c);
                    if c == 1 {
                        worst = worst.max((s[(r, col)] - ea).abs());
                    } else {
                        worst = worst
                            .max((s[(r, col)] - ea).abs())
                            .max((s[(r, col + 1)] - eb).abs())
                            .max((s[(r + 1, col)] + eb).abs())
                            .max((s[(r + 1, col + 1)] - ea).abs());
                    }
                }
            }
        }
    }
    worst
}
