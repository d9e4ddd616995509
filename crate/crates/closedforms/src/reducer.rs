//! Canonical reduction of maximal-rank solutions under commutant congruence.
//!
//! Work happens on the raw side `B` in binary64: `B ← SᵗBS` with `S` in the commutant. The
//! Toeplitz side is `C = 𝒫_N B`; the coefficients `c^{(t)}` of block `(l, m)` are read from the
//! first row of `C_lm`, i.e. the last row of `B_lm`. Complex coefficients are cells `αI + βJ`,
//! handled as `α + iβ`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::constructor::LiftedForm;
use crate::jordan::{BlockInfo, Eigen, JordanSpec};
use crate::linalg::{rational_snap, rat, unit_grid, FloatMatrix, Permutation, RationalMatrix, DEFAULT_TOL};
use crate::structured::{commutant_pattern_defect, commutes, lyapunov_coupled, toeplitz_shift, StructuredSolution};
use crate::Error;

pub type Poly = Vec<Complex64>;

pub const SNAP_TOL: f64 = 1e-6;
pub const ACCEPT_RESIDUAL: f64 = 1e-6;

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

pub fn poly_mul(a: &[Complex64], b: &[Complex64], n: usize) -> Poly {
    let mut out = vec![czero(); n];
    for (i, x) in a.iter().enumerate().take(n) {
        for (j, y) in b.iter().enumerate().take(n - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// `p(x) ↦ conj(p(−x))`
pub fn sigma_bar(p: &[Complex64]) -> Poly {
    p.iter().enumerate().map(|(k, c)| if k % 2 == 0 { c.conj() } else { -c.conj() }).collect()
}

/// Principal inverse square root mod `x^n` via the binomial series in the nilpotent part.
pub fn poly_inv_sqrt(c: &[Complex64]) -> Result<Poly, Error> {
    let n = c.len();
    let c0 = *c.first().ok_or_else(|| Error::Invalid("empty polynomial".into()))?;
    if c0.norm() == 0.0 {
        return Err(Error::Hypotheses("pivot with zero constant diagonal".into()));
    }
    let m: Poly = c.iter().enumerate().map(|(k, x)| if k == 0 { czero() } else { x / c0 }).collect();
    let mut sum = vec![czero(); n];
    let mut power = vec![czero(); n];
    power[0] = Complex64::new(1.0, 0.0);
    let mut binom = 1.0;
    for j in 0..n {
        for k in 0..n {
            sum[k] += power[k] * binom;
        }
        binom *= (-0.5 - j as f64) / (j as f64 + 1.0);
        power = poly_mul(&power, &m, n);
    }
    let scale = c0.sqrt().inv();
    Ok(sum.into_iter().map(|x| x * scale).collect())
}

/// Aligned upper Toeplitz block `ni × nj` (cell units) with the given coefficients.
pub fn toeplitz_float(coeffs: &[Complex64], ni: usize, nj: usize, cell: usize) -> FloatMatrix {
    let mut m = FloatMatrix::zeros(ni * cell, nj * cell);
    let shift = toeplitz_shift(ni, nj);
    for p in 0..ni {
        for (t, c) in coeffs.iter().enumerate() {
            let q = p + shift + t;
            if q >= nj {
                break;
            }
            let (r, col) = (p * cell, q * cell);
            if cell == 1 {
                m[(r, col)] = c.re;
            } else {
                m[(r, col)] = c.re;
                m[(r, col + 1)] = c.im;
                m[(r + 1, col)] = -c.im;
                m[(r + 1, col + 1)] = c.re;
            }
        }
    }
    m
}

fn read_coeffs(t: &FloatMatrix, cell: usize) -> Poly {
    (0..t.cols / cell)
        .map(|k| if cell == 1 { Complex64::new(t[(0, k)], 0.0) } else { Complex64::new(t[(0, 2 * k)], t[(0, 2 * k + 1)]) })
        .collect()
}

/// Inverse square root inside the (cell) upper Toeplitz algebra, after the admissible sign flip.
pub fn toeplitz_inv_sqrt(t: &FloatMatrix, cell: usize) -> Result<(FloatMatrix, i8), Error> {
    if t.rows != t.cols || !t.rows.is_multiple_of(cell) {
        return Err(Error::DimensionMismatch(format!("{}x{} Toeplitz with cell {cell}", t.rows, t.cols)));
    }
    let c = read_coeffs(t, cell);
    let c0 = c[0];
    let sign: i8 = if cell == 1 {
        if c0.re < 0.0 { -1 } else { 1 }
    } else if c0.im == 0.0 && c0.re < 0.0 {
        -1
    } else {
        1
    };
    let scaled: Poly = c.iter().map(|x| x * f64::from(sign)).collect();
    let x = poly_inv_sqrt(&scaled)?;
    let n = t.rows / cell;
    Ok((toeplitz_float(&x, n, n, cell), sign))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tag {
    Step1,
    FirstLemma,
    SecondLemma,
    Special4Dim,
    Step1C,
    FirstLemmaC,
    SecondLemmaC,
    Shear,
    Reorder,
}

impl Tag {
    pub fn name(&self) -> &'static str {
        match self {
            Tag::Step1 => "step1",
            Tag::FirstLemma => "firstlemma",
            Tag::SecondLemma => "secondlemma",
            Tag::Special4Dim => "special4dim",
            Tag::Step1C => "step1C",
            Tag::FirstLemmaC => "firstlemmaC",
            Tag::SecondLemmaC => "secondlemmaC",
            Tag::Shear => "shear",
            Tag::Reorder => "reorder",
        }
    }

    fn complex(self, yes: bool) -> Tag {
        match (self, yes) {
            (Tag::Step1, true) => Tag::Step1C,
            (Tag::FirstLemma, true) => Tag::FirstLemmaC,
            (Tag::SecondLemma, true) => Tag::SecondLemmaC,
            (t, _) => t,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub tag: Tag,
    pub l: usize,
    pub m: usize,
    pub k: usize,
    pub t: i8,
    pub transform: FloatMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionTrace {
    pub steps: Vec<TraceStep>,
    pub accumulated_s: FloatMatrix,
    pub residual: f64,
}

impl ReductionTrace {
    /// Largest commutant-pattern defect over all step transforms.
    pub fn pattern_defect(&self, spec: &JordanSpec) -> f64 {
        self.steps
            .iter()
            .map(|s| commutant_pattern_defect(&s.transform, spec) / s.transform.max_abs().max(1.0))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalResult {
    /// `P` with `Pᵗ J_{(N,K)} P = b_canonical`.
    pub permutation: Permutation,
    /// `P` extended by fixing the first basis vector, on `D` indices.
    pub extended: Permutation,
    /// Sign `t` of each normalized pivot, in processing order.
    pub sign_pattern: Vec<i8>,
    /// `𝒫_N Pᵗ J_{(N,K)} P` (Toeplitz side).
    pub canonical_matrix: RationalMatrix,
    /// `Pᵗ J_{(N,K)} P` (raw side).
    pub b_canonical: RationalMatrix,
    pub rank: usize,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReduceOptions {
    pub tol: f64,
    pub snap_tol: f64,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        ReduceOptions { tol: DEFAULT_TOL, snap_tol: SNAP_TOL }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Unit {
    Diag { l: usize, value: Complex64 },
    K2 { l: usize },
    Cross { l: usize, m: usize },
    Special { l: usize, m: usize },
    Zero { l: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    /// Diagonal blocks can carry a pivot: real zero eigenvalue with even size, or `a = 0`.
    Diagonal,
    /// Pivots come in pairs: real zero eigenvalue with odd size, `±λ`, `±a`.
    Cross,
}

fn kind(b: &BlockInfo) -> Kind {
    match &b.eigen {
        Eigen::Real(l) if *l == rat(0) && b.size.is_multiple_of(2) => Kind::Diagonal,
        Eigen::Complex(a, _) if *a == rat(0) => Kind::Diagonal,
        _ => Kind::Cross,
    }
}

fn unit_of(c: Complex64) -> Complex64 {
    c.conj() / c.norm()
}

struct State {
    blocks: Vec<BlockInfo>,
    b: FloatMatrix,
    s_acc: FloatMatrix,
    steps: Vec<TraceStep>,
    opts: ReduceOptions,
}

impl State {
    fn n(&self) -> usize {
        self.b.rows
    }

    fn scale(&self) -> f64 {
        self.b.max_abs().max(1.0)
    }

    fn small(&self, x: f64) -> bool {
        x <= self.opts.tol * 1e3 * self.scale()
    }

    fn coef(&self, l: usize, m: usize, t: usize) -> Complex64 {
        let (bl, bm) = (&self.blocks[l], &self.blocks[m]);
        let c = bl.cell;
        let r = bl.offset + (bl.size - 1) * c;
        let col = bm.offset + (toeplitz_shift(bl.size, bm.size) + t) * c;
        if c == 1 {
            Complex64::new(self.b[(r, col)], 0.0)
        } else {
            Complex64::new(self.b[(r, col)], self.b[(r, col + 1)])
        }
    }

    fn coeffs(&self, l: usize, m: usize) -> Poly {
        let k = self.blocks[l].size.min(self.blocks[m].size);
        (0..k).map(|t| self.coef(l, m, t)).collect()
    }

    fn first_nonzero(&self, l: usize, m: usize) -> Option<usize> {
        let blk = self.block(l, m);
        if self.small(blk.max_abs()) {
            return None;
        }
        let c = self.coeffs(l, m);
        Some(c.iter().position(|x| !self.small(x.norm())).unwrap_or(c.len()))
    }

    fn block(&self, l: usize, m: usize) -> FloatMatrix {
        let (bl, bm) = (&self.blocks[l], &self.blocks[m]);
        self.b.block(bl.offset, bm.offset, bl.rows(), bm.rows())
    }

    fn embed(&self, parts: &[(usize, usize, FloatMatrix)], base_identity: bool) -> FloatMatrix {
        let mut s = if base_identity { FloatMatrix::identity(self.n()) } else { FloatMatrix::zeros(self.n(), self.n()) };
        for (l, m, blk) in parts {
            s.set_block(self.blocks[*l].offset, self.blocks[*m].offset, blk);
        }
        s
    }

    fn apply(&mut self, s: FloatMatrix, tag: Tag, l: usize, m: usize, k: usize, t: i8) {
        let mut b = self.b.congruence(&s);
        let bt = b.transpose();
        for (x, y) in b.data.iter_mut().zip(&bt.data) {
            *x = 0.5 * (*x - *y);
        }
        self.b = b;
        self.s_acc = self.s_acc.mul(&s);
        let tag = tag.complex(self.blocks[l].is_complex());
        self.steps.push(TraceStep { tag, l, m, k, t, transform: s });
    }

    /// Clear block row/column `l` with a diagonal pivot: `E_lj = −B_ll⁻¹ B_lj`.
    fn first_lemma(&mut self, l: usize, done: &[bool]) -> Result<(), Error> {
        let inv = self.block(l, l).inverse()?;
        let mut parts = Vec::new();
        for j in 0..self.blocks.len() {
            if j == l || done[j] || !commutes(&self.blocks[l], &self.blocks[j]) {
                continue;
            }
            let blj = self.block(l, j);
            if blj.max_abs() == 0.0 {
                continue;
            }
            parts.push((l, j, inv.mul(&blj).scale(-1.0)));
        }
        if !parts.is_empty() {
            let s = self.embed(&parts, true);
            self.apply(s, Tag::FirstLemma, l, l, 1, 1);
        }
        Ok(())
    }

    fn normalize_diag(&mut self, l: usize) -> Result<Complex64, Error> {
        let b = self.blocks[l].clone();
        let t = self.coeffs(l, l);
        let u = if b.cell == 1 { Complex64::new(t[0].re.signum(), 0.0) } else { unit_of(t[0]) };
        let scaled: Poly = t.iter().map(|x| x * u).collect();
        let p = poly_inv_sqrt(&scaled)?;
        let s = self.embed(&[(l, l, toeplitz_float(&p, b.size, b.size, b.cell))], true);
        let value = u.inv();
        let sign = if value.re + value.im > 0.0 { 1 } else { -1 };
        self.apply(s, Tag::Step1, l, l, 1, sign);
        Ok(value)
    }

    /// Odd zero-eigenvalue block whose pivot sits on the second diagonal.
    fn normalize_k2(&mut self, l: usize) -> Result<i8, Error> {
        let b = self.blocks[l].clone();
        let t = self.coeffs(l, l);
        if self.small(t[1].norm()) {
            return Err(Error::NotMaximal(format!("block {l} has no usable second-diagonal pivot")));
        }
        let u = t[1].re.signum();
        let r: Poly = t[1..].iter().map(|x| x * u).collect();
        let p = poly_inv_sqrt(&r)?;
        let s = self.embed(&[(l, l, toeplitz_float(&p, b.size, b.size, 1))], true);
        let sign = u as i8;
        self.apply(s, Tag::Step1, l, l, 2, sign);
        Ok(sign)
    }

    /// Try the unit shears `S_ml = s·I` and keep the one with the largest new diagonal pivot.
    fn shear(&mut self, l: usize, m: usize) {
        let b = self.blocks[l].clone();
        let units: Vec<Complex64> = if b.cell == 1 {
            vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]
        } else {
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, -1.0),
            ]
        };
        let mut best: Option<(f64, FloatMatrix)> = None;
        for u in units {
            let s = self.embed(&[(m, l, toeplitz_float(&[u], b.size, b.size, b.cell))], true);
            let trial = self.b.congruence(&s);
            let r = b.offset + (b.size - 1) * b.cell;
            let c = b.offset;
            let lead = if b.cell == 1 { trial[(r, c)].abs() } else { trial[(r, c)].hypot(trial[(r, c + 1)]) };
            if best.as_ref().is_none_or(|(v, _)| lead > *v) {
                best = Some((lead, s));
            }
        }
        let (_, s) = best.expect("at least one unit");
        self.apply(s, Tag::Shear, l, m, 1, 1);
    }

    /// Off-diagonal pivot: empty `B_ll`, `B_mm`, then clear the rest of rows/columns `l`, `m`.
    fn second_lemma(&mut self, l: usize, m: usize, done: &[bool]) -> Result<(), Error> {
        let n = self.blocks[l].size;
        let measure = |d: Option<usize>| d.map_or(0, |k| n - k.min(n) + 1);
        for _ in 0..4 * n + 4 {
            let dl = self.first_nonzero(l, l);
            let dm = self.first_nonzero(m, m);
            if dl.is_none() && dm.is_none() {
                break;
            }
            for (x, y, d) in [(l, m, dl), (m, l, dm)] {
                let d = if x == l { d } else { self.first_nonzero(m, m) };
                if d.is_none() {
                    continue;
                }
                let before = measure(d);
                let f = self.block(x, y).inverse()?.mul(&self.block(x, x)).scale(-0.5);
                let s = self.embed(&[(y, x, f)], true);
                self.apply(s, Tag::SecondLemma, l, m, 1, 1);
                let after = measure(self.first_nonzero(x, x));
                if after >= before {
                    return Err(Error::Hypotheses(format!(
                        "cleanup of block ({x},{x}) did not progress ({before} -> {after})"
                    )));
                }
            }
        }
        if self.first_nonzero(l, l).is_some() || self.first_nonzero(m, m).is_some() {
            return Err(Error::Hypotheses(format!("diagonal blocks of pivot ({l},{m}) did not vanish")));
        }
        let inv_lm = self.block(l, m).inverse()?;
        let inv_ml = self.block(m, l).inverse()?;
        let mut parts = Vec::new();
        for j in 0..self.blocks.len() {
            if j == l || j == m || done[j] {
                continue;
            }
            if commutes(&self.blocks[m], &self.blocks[j]) {
                let e = inv_lm.mul(&self.block(l, j)).scale(-1.0);
                if e.max_abs() > 0.0 {
                    parts.push((m, j, e));
                }
            }
            if commutes(&self.blocks[l], &self.blocks[j]) {
                let e = inv_ml.mul(&self.block(m, j)).scale(-1.0);
                if e.max_abs() > 0.0 {
                    parts.push((l, j, e));
                }
            }
        }
        if !parts.is_empty() {
            let s = self.embed(&parts, true);
            self.apply(s, Tag::SecondLemma, l, m, 1, 1);
        }
        Ok(())
    }

    /// Bring the coupling `T_lm` to `1` with `S_l = σ̄(P)`, `S_m = u·P`, `P = (uT)^{−1/2}`.
    fn normalize_cross(&mut self, l: usize, m: usize) -> Result<(), Error> {
        let (bl, bm) = (self.blocks[l].clone(), self.blocks[m].clone());
        let t = self.coeffs(l, m);
        let u = if bl.cell == 1 { Complex64::new(t[0].re.signum(), 0.0) } else { unit_of(t[0]) };
        let scaled: Poly = t.iter().map(|x| x * u).collect();
        let p = poly_inv_sqrt(&scaled)?;
        let sm: Poly = p.iter().map(|x| x * u).collect();
        let sl = sigma_bar(&p);
        let s = self.embed(
            &[
                (l, l, toeplitz_float(&sl, bl.size, bl.size, bl.cell)),
                (m, m, toeplitz_float(&sm, bm.size, bm.size, bm.cell)),
            ],
            true,
        );
        self.apply(s, Tag::Step1, l, m, 1, 1);
        Ok(())
    }

    /// Sizes `n + 1` and `n`: empty `B_ll`, `B_mm` by Gauss–Newton over the off-diagonal
    /// commutant parameters, then normalize the coupling.
    fn special(&mut self, l: usize, m: usize) -> Result<(), Error> {
        let (bl, bm) = (self.blocks[l].clone(), self.blocks[m].clone());
        let k = bl.size.min(bm.size);
        let comps: Vec<Complex64> = if bl.cell == 1 {
            vec![Complex64::new(1.0, 0.0)]
        } else {
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]
        };
        let mut params = Vec::new();
        for (x, y) in [(m, l), (l, m)] {
            if !commutes(&self.blocks[x], &self.blocks[y]) {
                continue;
            }
            for t in 0..k {
                for c in &comps {
                    let mut coeffs = vec![czero(); t + 1];
                    coeffs[t] = *c;
                    let (bx, by) = (&self.blocks[x], &self.blocks[y]);
                    params.push(self.embed(&[(x, y, toeplitz_float(&coeffs, bx.size, by.size, bx.cell))], false));
                }
            }
        }
        let targets = [(l, l), (m, m)];
        for _ in 0..60 {
            let resid: Vec<f64> = targets.iter().flat_map(|&(x, y)| self.block(x, y).data).collect();
            let worst = resid.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if self.small(worst) {
                break;
            }
            if params.is_empty() {
                return Err(Error::Hypotheses(format!("no parameters to clear diagonal blocks of ({l},{m})")));
            }
            let cols: Vec<Vec<f64>> = params
                .iter()
                .map(|e| {
                    let d = e.transpose().mul(&self.b);
                    let d2 = self.b.mul(e);
                    targets
                        .iter()
                        .flat_map(|&(x, y)| {
                            let (bx, by) = (&self.blocks[x], &self.blocks[y]);
                            let a = d.block(bx.offset, by.offset, bx.rows(), by.rows());
                            let b = d2.block(bx.offset, by.offset, bx.rows(), by.rows());
                            a.data.into_iter().zip(b.data).map(|(p, q)| p + q).collect::<Vec<_>>()
                        })
                        .collect()
                })
                .collect();
            let jac = DMatrix::from_fn(resid.len(), params.len(), |i, j| cols[j][i]);
            let rhs = DVector::from_iterator(resid.len(), resid.iter().map(|v| -v));
            let sol = jac
                .svd(true, true)
                .solve(&rhs, 1e-12)
                .map_err(|e| Error::Hypotheses(format!("least squares failed: {e}")))?;
            let mut s = FloatMatrix::identity(self.n());
            for (e, th) in params.iter().zip(sol.iter()) {
                for (x, y) in s.data.iter_mut().zip(&e.data) {
                    *x += th * y;
                }
            }
            self.apply(s, Tag::Special4Dim, l, m, 1, 1);
        }
        let worst = targets.iter().map(|&(x, y)| self.block(x, y).max_abs()).fold(0.0, f64::max);
        if !self.small(worst) {
            return Err(Error::Hypotheses(format!("could not empty diagonal blocks of ({l},{m}): {worst:e}")));
        }
        if self.small(self.coef(l, m, 0).norm()) {
            return Err(Error::NotMaximal(format!("pair ({l},{m}) has no leading coupling")));
        }
        self.normalize_cross(l, m)
    }
}

/// Required rank for the reduction: `N` if `N` is even, `N − 1` otherwise.
pub fn maximal_rank(spec: &JordanSpec) -> usize {
    let n = spec.n();
    n - n % 2
}

pub fn reduce_to_canonical(
    sol: &StructuredSolution,
    spec: &JordanSpec,
) -> Result<(CanonicalResult, ReductionTrace), Error> {
    reduce_with(sol, spec, ReduceOptions::default())
}

pub fn reduce_with(
    sol: &StructuredSolution,
    spec: &JordanSpec,
    opts: ReduceOptions,
) -> Result<(CanonicalResult, ReductionTrace), Error> {
    let n = spec.n();
    let want = maximal_rank(spec);
    if sol.matrix.rank() != want {
        return Err(Error::NotMaximal(format!("rank {} but the reduction needs rank {want}", sol.matrix.rank())));
    }
    let b0 = sol.matrix.to_float();
    let mut st = State {
        blocks: spec.blocks(),
        b: b0.clone(),
        s_acc: FloatMatrix::identity(n),
        steps: Vec::new(),
        opts,
    };
    let nb = st.blocks.len();
    let mut done = vec![false; nb];
    let mut units = Vec::new();
    let mut signs = Vec::new();

    loop {
        let mut progress = false;
        for l in 0..nb {
            if done[l] {
                continue;
            }
            let bl = st.blocks[l].clone();
            let partner = |st: &State, done: &[bool]| {
                (0..nb).find(|&m| {
                    m != l
                        && !done[m]
                        && st.blocks[m].size == bl.size
                        && lyapunov_coupled(&bl, &st.blocks[m])
                        && !st.small(st.coef(l, m, 0).norm())
                })
            };
            match kind(&bl) {
                Kind::Diagonal => {
                    if st.small(st.coef(l, l, 0).norm()) {
                        match partner(&st, &done) {
                            Some(m) => st.shear(l, m),
                            None => continue,
                        }
                    }
                    st.first_lemma(l, &done)?;
                    let value = st.normalize_diag(l)?;
                    signs.push(if value.re + value.im > 0.0 { 1 } else { -1 });
                    units.push(Unit::Diag { l, value });
                    done[l] = true;
                    progress = true;
                }
                Kind::Cross => {
                    let Some(m) = partner(&st, &done) else { continue };
                    let (lo, hi) = (l.min(m), l.max(m));
                    st.second_lemma(lo, hi, &done)?;
                    st.normalize_cross(lo, hi)?;
                    signs.push(1);
                    units.push(Unit::Cross { l: lo, m: hi });
                    done[l] = true;
                    done[m] = true;
                    progress = true;
                }
            }
        }
        if !progress {
            break;
        }
    }

    let left: Vec<usize> = (0..nb).filter(|&l| !done[l]).collect();
    match left.as_slice() {
        [] => {}
        [l] => {
            let b = st.blocks[*l].clone();
            let is_zero_real = matches!(&b.eigen, Eigen::Real(x) if *x == rat(0));
            if b.size == 1 && !b.is_complex() {
                let row = st.b.block(b.offset, 0, 1, n);
                if !st.small(row.max_abs()) {
                    return Err(Error::Hypotheses(format!("leftover block {l} has a nonzero row")));
                }
                units.push(Unit::Zero { l: *l });
            } else if is_zero_real && b.size % 2 == 1 {
                signs.push(st.normalize_k2(*l)?);
                units.push(Unit::K2 { l: *l });
            } else {
                return Err(Error::NotMaximal(format!("unpaired block {l} of size {}", b.size)));
            }
        }
        [l, m] => {
            let (bl, bm) = (&st.blocks[*l], &st.blocks[*m]);
            if bl.is_complex() || !lyapunov_coupled(bl, bm) || bl.size.abs_diff(bm.size) != 1 {
                return Err(Error::NotMaximal(format!("leftover blocks {l} and {m} do not form an n+1, n pair")));
            }
            st.special(*l, *m)?;
            signs.push(1);
            units.push(Unit::Special { l: *l, m: *m });
        }
        _ => return Err(Error::NotMaximal(format!("{} blocks left without pivots", left.len()))),
    }

    reorder(&mut st, &units);

    let mut snapped = st.b.clone();
    snapped.zero_tol = opts.snap_tol;
    let a = rational_snap(&snapped, &unit_grid())?;
    let (perm, k) = extract_permutation(&a)?;
    if k != want {
        return Err(Error::Hypotheses(format!("canonical matrix has rank {k}, expected {want}")));
    }
    let residual = b0.congruence(&st.s_acc).max_abs_diff(&a.to_float());
    let mut ext = vec![0];
    ext.extend(perm.images().iter().map(|i| i + 1));
    let result = CanonicalResult {
        extended: Permutation::new(ext)?,
        permutation: perm,
        sign_pattern: signs,
        canonical_matrix: spec.p_matrix().mul(&a)?,
        b_canonical: a,
        rank: k,
        residual,
    };
    let trace = ReductionTrace { steps: st.steps, accumulated_s: st.s_acc, residual };
    Ok((result, trace))
}

/// Permute equal blocks so the normal form does not depend on the pivot order: positive
/// diagonal pivots first, cross pairs adjacent (or index-matched across `±`), leftovers last.
fn reorder(st: &mut State, units: &[Unit]) {
    let nb = st.blocks.len();
    let mut rank_key: Vec<(u8, f64, usize)> = vec![(3, 0.0, 0); nb];
    let mut seq = 0usize;
    let mut next = || {
        seq += 1;
        seq
    };
    for u in units {
        match u {
            Unit::Diag { l, value } => rank_key[*l] = (0, -(value.re + value.im), next()),
            Unit::Cross { l, m } => {
                let s = next();
                rank_key[*l] = (1, 0.0, 2 * s);
                rank_key[*m] = (1, 0.0, 2 * s + 1);
            }
            Unit::K2 { l } | Unit::Zero { l } => rank_key[*l] = (2, 0.0, next()),
            Unit::Special { l, m } => {
                let s = next();
                rank_key[*l] = (2, 0.0, s);
                rank_key[*m] = (2, 0.0, s);
            }
        }
    }
    let mut order: Vec<usize> = (0..nb).collect();
    let mut start = 0;
    while start < nb {
        let b = &st.blocks[start];
        let mut end = start + 1;
        while end < nb && st.blocks[end].eigen == b.eigen && st.blocks[end].size == b.size {
            end += 1;
        }
        order[start..end].sort_by(|&x, &y| {
            let (a, c) = (rank_key[x], rank_key[y]);
            a.0.cmp(&c.0).then(a.1.total_cmp(&c.1)).then(a.2.cmp(&c.2)).then(x.cmp(&y))
        });
        start = end;
    }
    if order.iter().enumerate().all(|(i, &o)| i == o) {
        return;
    }
    let mut images = vec![0; st.n()];
    for (pos, &old) in order.iter().enumerate() {
        let (bp, bo) = (&st.blocks[pos], &st.blocks[old]);
        for r in 0..bp.rows() {
            images[bp.offset + r] = bo.offset + r;
        }
    }
    let perm = Permutation::new(images).expect("block permutation");
    let s = perm.matrix().to_float();
    st.apply(s, Tag::Reorder, 0, 0, 0, 1);
}

/// `P` and `K` with `Pᵗ J_{(N,K)} P = a` for a skew signed subpermutation `a`.
pub fn extract_permutation(a: &RationalMatrix) -> Result<(Permutation, usize), Error> {
    let n = a.rows();
    if !a.is_skew() {
        return Err(Error::Invalid("matrix is not skew".into()));
    }
    let one = rat(1);
    let mut partner = vec![None; n];
    for i in 0..n {
        for j in 0..n {
            let x = &a[(i, j)];
            if *x == rat(0) {
                continue;
            }
            if *x != one && *x != -one.clone() {
                return Err(Error::Invalid(format!("entry ({i},{j}) = {x} is not ±1")));
            }
            if partner[i].is_some() {
                return Err(Error::Invalid(format!("row {i} has two nonzeros")));
            }
            partner[i] = Some(j);
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .filter_map(|i| partner[i].filter(|&j| i < j).map(|j| if a[(i, j)] == one { (i, j) } else { (j, i) }))
        .collect();
    let r = pairs.len();
    let mut images = vec![usize::MAX; n];
    for (s, &(plus, minus)) in pairs.iter().enumerate() {
        images[plus] = s;
        images[minus] = r + s;
    }
    let mut next = 2 * r;
    for im in images.iter_mut() {
        if *im == usize::MAX {
            *im = next;
            next += 1;
        }
    }
    Ok((Permutation::new(images)?, 2 * r))
}

/// Pairs `(i, j)` with `a_ij = +1`, sorted ascending.
pub fn pair_list(a: &RationalMatrix) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if a[(i, j)] == rat(1) {
                out.push((i, j));
            }
        }
    }
    out
}

/// A permutation representative of the class of a symplectic form, with its normal form.
#[derive(Clone, Debug)]
pub struct ModuliClass {
    pub permutation: Permutation,
    pub pairs: Vec<(usize, usize)>,
    pub canonical_form: RationalMatrix,
    pub residual: f64,
}

impl PartialEq for ModuliClass {
    fn eq(&self, other: &Self) -> bool {
        self.pairs == other.pairs
    }
}

pub fn moduli_class(form: &LiftedForm, spec: &JordanSpec) -> Result<ModuliClass, Error> {
    moduli_class_of(&form.matrix, spec)
}

pub fn moduli_class_of(form: &RationalMatrix, spec: &JordanSpec) -> Result<ModuliClass, Error> {
    let d = spec.d();
    if !d.is_multiple_of(2) {
        return Err(Error::Invalid(format!("D = {d} is odd; no symplectic forms")));
    }
    let check = crate::constructor::check_closed(form, spec)?;
    if !check.closed || form.rank() != d {
        return Err(Error::Rejected("form is not symplectic (closed of rank D)".into()));
    }
    let n = d - 1;
    let sol = StructuredSolution::new(form.block(1, 1, n, n), spec)?;
    let (res, trace) = reduce_to_canonical(&sol, spec)?;
    let a = &res.b_canonical;
    let kernel = (0..n)
        .find(|&i| (0..n).all(|j| a[(i, j)] == rat(0)))
        .ok_or_else(|| Error::Hypotheses("canonical minor has no zero row".into()))?;
    let row = form.block(0, 1, 1, n).to_float().mul(&trace.accumulated_s);
    if row[(0, kernel)].abs() <= DEFAULT_TOL * row.max_abs().max(1.0) {
        return Err(Error::Hypotheses("first row has no kernel component".into()));
    }
    let mut m = RationalMatrix::zeros(d, d);
    m.set_block(1, 1, a);
    m[(0, kernel + 1)] = rat(1);
    m[(kernel + 1, 0)] = rat(-1);
    let (perm, k) = extract_permutation(&m)?;
    debug_assert_eq!(k, d);
    Ok(ModuliClass { permutation: perm, pairs: pair_list(&m), canonical_form: m, residual: res.residual })
}
