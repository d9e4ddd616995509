//! Witness construction: maximal-rank solutions, rank lowering, lifting to closed 2-forms.

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::jordan::{build_jordan, BlockInfo, Eigen, JordanSpec};
use crate::linalg::{congruence, rat, Rational, RationalMatrix};
use crate::structured::{commutant_basis, membership, place_hankel, Cell, StructuredSolution, Which};
use crate::Error;

/// One nonzero anti-diagonal `s` of the Lyapunov block `(i, j)` (and its skew partner).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placement {
    pub i: usize,
    pub j: usize,
    pub s: usize,
    complex: bool,
}

impl Placement {
    fn rank(&self, blocks: &[BlockInfo]) -> usize {
        let (bi, bj) = (&blocks[self.i], &blocks[self.j]);
        let last = bi.size + bj.size - 2;
        if self.s > last {
            return 0;
        }
        let len = last + 1 - self.s;
        let per = if self.complex { 2 } else { 1 };
        if self.i == self.j {
            len * per
        } else {
            2 * len * per
        }
    }

    /// Smallest rank drop obtained by moving to the next admissible anti-diagonal.
    fn step(&self) -> usize {
        match (self.i == self.j, self.complex) {
            (true, false) => 2,
            (true, true) => 1,
            (false, _) => 1,
        }
    }

    /// The cell is chosen so that the leading entry of the block row on the reversed
    /// (Toeplitz) side is `+1`, `+I` or `+J`.
    fn cell(&self, blocks: &[BlockInfo]) -> Cell {
        let bi = &blocks[self.i];
        let base = if self.complex && self.i == self.j && self.s.is_multiple_of(2) { Cell::j() } else { Cell::identity() };
        if (bi.size - 1).is_multiple_of(2) {
            base
        } else {
            base.scale(&rat(-1))
        }
    }

    fn write(&self, m: &mut RationalMatrix, blocks: &[BlockInfo]) {
        if self.rank(blocks) > 0 {
            place_hankel(m, &blocks[self.i], &blocks[self.j], self.s, &self.cell(blocks));
        }
    }
}

fn is_zero_real(b: &BlockInfo) -> bool {
    matches!(&b.eigen, Eigen::Real(l) if l.is_zero())
}

/// Block placements realizing the formula value, following the pairing rules of the rank formulas.
pub fn max_placements(spec: &JordanSpec) -> Vec<Placement> {
    let blocks = spec.blocks();
    let mut out = Vec::new();
    let mut used = vec![false; blocks.len()];

    for b in &blocks {
        if used[b.index] {
            continue;
        }
        let complex = b.is_complex();
        let self_group = is_zero_real(b) || matches!(&b.eigen, Eigen::Complex(a, _) if a.is_zero());
        if self_group {
            used[b.index] = true;
            if b.size % 2 == 0 {
                out.push(Placement { i: b.index, j: b.index, s: b.size - 1, complex });
                continue;
            }
            let partner = blocks
                .iter()
                .find(|c| !used[c.index] && c.eigen == b.eigen && c.size == b.size)
                .map(|c| c.index);
            match partner {
                Some(p) => {
                    used[p] = true;
                    out.push(Placement { i: b.index, j: p, s: b.size - 1, complex });
                }
                None => out.push(Placement { i: b.index, j: b.index, s: b.size, complex }),
            }
            continue;
        }
        // ±λ (or ±a): pair the i-th largest block of each sign.
        let plus: Vec<&BlockInfo> = blocks.iter().filter(|c| c.eigen == b.eigen).collect();
        let minus: Vec<&BlockInfo> = blocks.iter().filter(|c| crate::structured::lyapunov_coupled(b, c)).collect();
        for c in plus.iter().chain(&minus) {
            used[c.index] = true;
        }
        for (p, q) in plus.iter().zip(&minus) {
            out.push(Placement { i: p.index, j: q.index, s: p.size.max(q.size) - 1, complex });
        }
    }
    out
}

fn placements_matrix(spec: &JordanSpec, placements: &[Placement]) -> RationalMatrix {
    let blocks = spec.blocks();
    let mut m = RationalMatrix::zeros(spec.n(), spec.n());
    for p in placements {
        p.write(&mut m, &blocks);
    }
    m
}

pub fn construct_max(spec: &JordanSpec) -> Result<StructuredSolution, Error> {
    StructuredSolution::new(placements_matrix(spec, &max_placements(spec)), spec)
}

/// Deepen placements (last first) until the total rank equals `target`.
fn placements_with_rank(spec: &JordanSpec, target: usize) -> Result<Vec<Placement>, Error> {
    let blocks = spec.blocks();
    let mut pl = max_placements(spec);
    let mut rank: usize = pl.iter().map(|p| p.rank(&blocks)).sum();
    if target > rank {
        return Err(Error::Unreachable(format!("target {target} above constructed rank {rank}")));
    }
    while rank > target {
        let need = rank - target;
        let pick = pl.iter().rposition(|p| {
            let r = p.rank(&blocks);
            r > 0 && {
                let mut q = p.clone();
                q.s += q.step();
                r - q.rank(&blocks) <= need
            }
        });
        let Some(k) = pick else {
            return Err(Error::Unreachable(format!(
                "no placement drops the rank by at most {need} (rank {rank}, target {target})"
            )));
        };
        let before = pl[k].rank(&blocks);
        let step = pl[k].step();
        pl[k].s += step;
        rank = rank - before + pl[k].rank(&blocks);
    }
    pl.retain(|p| p.rank(&blocks) > 0);
    Ok(pl)
}

/// Lower the rank by shift congruences `B ← EᵗBE`, `E = I ⊕ U ⊕ I`, scanning blocks from the
/// last; if every shift overshoots, rebuild a placement witness of the exact target rank.
pub fn lower_rank(sol: &StructuredSolution, target: usize, spec: &JordanSpec) -> Result<StructuredSolution, Error> {
    if !target.is_multiple_of(2) {
        return Err(Error::Invalid(format!("target rank {target} is odd")));
    }
    if target > sol.rank {
        return Err(Error::Invalid(format!("target {target} exceeds current rank {}", sol.rank)));
    }
    let shifts: Vec<RationalMatrix> =
        (0..spec.blocks().len()).map(|b| spec.shift(b)).collect::<Result<_, _>>()?;
    let mut cur = sol.matrix.clone();
    let mut rank = sol.rank;
    while rank > target {
        let candidates: Vec<(RationalMatrix, usize)> = shifts
            .iter()
            .rev()
            .map(|e| {
                let m = congruence(e, &cur).expect("square");
                let r = m.rank();
                (m, r)
            })
            .collect();
        let pick = candidates
            .iter()
            .position(|(_, r)| *r + 2 == rank)
            .or_else(|| candidates.iter().position(|(_, r)| *r < rank && *r >= target));
        match pick {
            Some(k) => {
                let (m, r) = candidates.into_iter().nth(k).expect("index");
                cur = m;
                rank = r;
            }
            None => {
                cur = placements_matrix(spec, &placements_with_rank(spec, target)?);
                rank = target;
            }
        }
    }
    StructuredSolution::new(cur, spec)
}

/// A `D×D` skew matrix `[[0, vᵗ], [−v, B]]` whose principal minor solves the Lyapunov equation.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedForm {
    pub matrix: RationalMatrix,
    pub rank: usize,
    pub v_in_image: bool,
    pub retries: usize,
}

pub const LIFT_RETRIES: usize = 8;

pub fn lift_with(b: &RationalMatrix, v: &[Rational]) -> RationalMatrix {
    let n = b.rows();
    let mut m = RationalMatrix::zeros(n + 1, n + 1);
    m.set_block(1, 1, b);
    for (k, x) in v.iter().enumerate() {
        m[(0, k + 1)] = x.clone();
        m[(k + 1, 0)] = -x.clone();
    }
    m
}

pub fn lift(sol: &StructuredSolution, r: usize, spec: &JordanSpec, seed: u64) -> Result<LiftedForm, Error> {
    let n = spec.n();
    if r > spec.d() {
        return Err(Error::Rejected(format!("rank exceeds dimension: {r} > {}", spec.d())));
    }
    if !r.is_multiple_of(2) {
        return Err(Error::Invalid(format!("rank {r} is odd")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<Rational> { (0..n).map(|_| rat(rng.gen_range(-3..=3))).collect() };
    if r == sol.rank {
        let w = draw(&mut rng);
        let v = sol.matrix.mul_vec(&w);
        let matrix = lift_with(&sol.matrix, &v);
        debug_assert_eq!(matrix.rank(), r);
        return Ok(LiftedForm { matrix, rank: r, v_in_image: true, retries: 0 });
    }
    if r != sol.rank + 2 {
        return Err(Error::Invalid(format!("rank {r} must be rank(B) = {} or rank(B) + 2", sol.rank)));
    }
    if sol.rank == n {
        return Err(Error::Rejected("rank(B) = N leaves no room for v outside Im(B)".into()));
    }
    for retries in 0..LIFT_RETRIES {
        let v = draw(&mut rng);
        let matrix = lift_with(&sol.matrix, &v);
        if matrix.rank() == r {
            return Ok(LiftedForm { matrix, rank: r, v_in_image: false, retries });
        }
    }
    Err(Error::Rejected(format!("no v outside Im(B) found in {LIFT_RETRIES} seeded draws")))
}

/// A closed 2-form of rank `r`: a witness `B` of rank `r` lifted with `v ∈ Im B`, or of rank
/// `r − 2` lifted with `v ∉ Im B`.
pub fn construct_form(spec: &JordanSpec, r: usize, seed: u64) -> Result<LiftedForm, Error> {
    if !crate::rank::exists_presymplectic(spec, r, crate::rank::Backend::Formula)? {
        return Err(Error::Rejected(format!(
            "no closed 2-form of rank {r}: the bound is {}",
            crate::rank::formula_bound(spec)
        )));
    }
    let top = construct_max(spec)?;
    let base = if r <= top.rank { r } else { r - 2 };
    if base > top.rank {
        return Err(Error::Unreachable(format!("rank {r} needs a witness of rank {base} > {}", top.rank)));
    }
    let sol = lower_rank(&top, base, spec)?;
    lift(&sol, r, spec, seed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedCheck {
    pub closed: bool,
    /// `B𝒥 + 𝒥ᵗB` for the principal minor.
    pub residual: RationalMatrix,
    /// Nonzero values of `dω(e_x, e_y, e_z)`, `x < y < z`.
    pub triple_violations: Vec<((usize, usize, usize), Rational)>,
    pub agrees: bool,
}

/// Brackets of `ℝe_0 ⋉ ℝ^N`: `[e_0, e_i] = Σ_k 𝒥_{k,i} e_k` (indices shifted by one).
fn bracket(j: &RationalMatrix, x: usize, y: usize) -> Vec<(usize, Rational)> {
    let (sign, other) = match (x, y) {
        (0, y) if y > 0 => (rat(1), y),
        (x, 0) if x > 0 => (rat(-1), x),
        _ => return vec![],
    };
    (0..j.rows())
        .filter(|&k| !j[(k, other - 1)].is_zero())
        .map(|k| (k + 1, &sign * &j[(k, other - 1)]))
        .collect()
}

pub fn triple_violations(form: &RationalMatrix, spec: &JordanSpec) -> Vec<((usize, usize, usize), Rational)> {
    let j = build_jordan(spec);
    let d = form.rows();
    let omega = |u: &[(usize, Rational)], z: usize| -> Rational {
        u.iter().fold(Rational::zero(), |acc, (k, c)| acc + c * &form[(*k, z)])
    };
    let mut out = Vec::new();
    for x in 0..d {
        for y in x + 1..d {
            for z in y + 1..d {
                let v = -omega(&bracket(&j, x, y), z) + omega(&bracket(&j, x, z), y) - omega(&bracket(&j, y, z), x);
                if !v.is_zero() {
                    out.push(((x, y, z), v));
                }
            }
        }
    }
    out
}

pub fn check_closed(form: &RationalMatrix, spec: &JordanSpec) -> Result<ClosedCheck, Error> {
    let d = spec.d();
    if form.rows() != d || form.cols() != d {
        return Err(Error::DimensionMismatch(format!("{}x{} form for D = {d}", form.rows(), form.cols())));
    }
    if !form.is_skew() {
        return Err(Error::Invalid("form is not skew-symmetric".into()));
    }
    let b = form.block(1, 1, d - 1, d - 1);
    let residual = membership(&b, spec, Which::Lyapunov)?.residual;
    let triple = triple_violations(form, spec);
    let closed = residual.is_zero();
    Ok(ClosedCheck { closed, agrees: closed == triple.is_empty(), residual, triple_violations: triple })
}

/// `Ā = [[α, 0], [v, A]]` with `A` in the commutant.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceMap {
    pub alpha: Rational,
    pub v: Vec<Rational>,
    pub a: RationalMatrix,
}

impl EquivalenceMap {
    pub fn new(alpha: Rational, v: Vec<Rational>, a: RationalMatrix, spec: &JordanSpec) -> Result<Self, Error> {
        let n = spec.n();
        if alpha.is_zero() {
            return Err(Error::Invalid("alpha must be nonzero".into()));
        }
        if v.len() != n || a.rows() != n || a.cols() != n {
            return Err(Error::DimensionMismatch(format!("equivalence map sizes do not match N = {n}")));
        }
        if !membership(&a, spec, Which::Commutant)?.holds {
            return Err(Error::Invalid("A does not commute with 𝒥".into()));
        }
        if a.rank() != n {
            return Err(Error::Singular("A is singular".into()));
        }
        Ok(EquivalenceMap { alpha, v, a })
    }

    pub fn identity(spec: &JordanSpec) -> Self {
        let n = spec.n();
        EquivalenceMap { alpha: Rational::one(), v: vec![Rational::zero(); n], a: RationalMatrix::identity(n) }
    }

    pub fn matrix(&self) -> RationalMatrix {
        let n = self.a.rows();
        let mut m = RationalMatrix::zeros(n + 1, n + 1);
        m[(0, 0)] = self.alpha.clone();
        m.set_block(1, 1, &self.a);
        for (k, x) in self.v.iter().enumerate() {
            m[(k + 1, 0)] = x.clone();
        }
        m
    }
}

pub fn apply_equivalence(form: &RationalMatrix, eq: &EquivalenceMap) -> Result<RationalMatrix, Error> {
    congruence(&eq.matrix(), form)
}

/// Seeded random element of the commutant with small integer Toeplitz parameters, nonsingular.
pub fn random_commutant(spec: &JordanSpec, rng: &mut impl Rng) -> RationalMatrix {
    let basis = commutant_basis(spec);
    let n = spec.n();
    loop {
        let mut a = RationalMatrix::zeros(n, n);
        for b in &basis {
            let c: i64 = rng.gen_range(-2..=2);
            if c != 0 {
                a = a.add(&b.scale(&rat(c))).expect("shape");
            }
        }
        if a.rank() == n {
            return a;
        }
    }
}

pub fn random_equivalence(spec: &JordanSpec, seed: u64) -> EquivalenceMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_commutant(spec, &mut rng);
    let alpha = rat([-3, -2, -1, 1, 2, 3][rng.gen_range(0..6)]);
    let v = (0..spec.n()).map(|_| rat(rng.gen_range(-3..=3))).collect();
    EquivalenceMap { alpha, v, a }
}
