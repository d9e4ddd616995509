//! Jordan data for `ad_e`: validation, canonical ordering and the auxiliary matrices.

use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};

use crate::linalg::{rat, Permutation, Rational, RationalMatrix};
use crate::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RealBlock {
    pub size: usize,
    pub eig: Rational,
}

/// A block `𝒞_m(a, b)` occupying `2m` real rows.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ComplexBlock {
    pub half_size: usize,
    pub re: Rational,
    pub im: Rational,
}

impl RealBlock {
    pub fn new(size: usize, eig: Rational) -> Self {
        RealBlock { size, eig }
    }
}

impl ComplexBlock {
    pub fn new(half_size: usize, re: Rational, im: Rational) -> Self {
        ComplexBlock { half_size, re, im }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Eigen {
    Real(Rational),
    Complex(Rational, Rational),
}

/// One Jordan block as seen by the block-structured algorithms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockInfo {
    pub index: usize,
    pub eigen: Eigen,
    /// `n` for real blocks, `m` for complex ones.
    pub size: usize,
    /// 1 for real blocks, 2 for complex ones.
    pub cell: usize,
    pub offset: usize,
}

impl BlockInfo {
    pub fn rows(&self) -> usize {
        self.size * self.cell
    }

    pub fn is_complex(&self) -> bool {
        self.cell == 2
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    pub block_sizes: Vec<usize>,
    pub cells: Vec<usize>,
    pub offsets: Vec<usize>,
}

impl BlockPartition {
    pub fn n(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// `𝒫_N`: per-block reversal of rows (in units of cells).
    pub fn reversal(&self) -> RationalMatrix {
        let n = self.n();
        let mut p = RationalMatrix::zeros(n, n);
        for (b, &rows) in self.block_sizes.iter().enumerate() {
            let c = self.cells[b];
            let cells = rows / c;
            let o = self.offsets[b];
            for t in 0..cells {
                for e in 0..c {
                    p[(o + t * c + e, o + (cells - 1 - t) * c + e)] = Rational::one();
                }
            }
        }
        p
    }

    /// `I^±`: alternating signs per cell inside each block.
    pub fn alternating(&self) -> RationalMatrix {
        let n = self.n();
        let mut m = RationalMatrix::zeros(n, n);
        for (b, &rows) in self.block_sizes.iter().enumerate() {
            let c = self.cells[b];
            for r in 0..rows {
                m[(self.offsets[b] + r, self.offsets[b] + r)] = if (r / c).is_multiple_of(2) { rat(1) } else { rat(-1) };
            }
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JordanSpec {
    pub real_blocks: Vec<RealBlock>,
    pub complex_blocks: Vec<ComplexBlock>,
    from_user: Permutation,
}

impl JordanSpec {
    /// Validate and canonically order.
    pub fn new(real_blocks: Vec<RealBlock>, complex_blocks: Vec<ComplexBlock>) -> Result<Self, Error> {
        Ok(Self::raw(real_blocks, complex_blocks)?.canonical_order())
    }

    /// Validate but keep the blocks exactly as given.
    pub fn raw(real_blocks: Vec<RealBlock>, complex_blocks: Vec<ComplexBlock>) -> Result<Self, Error> {
        for b in &real_blocks {
            if b.size == 0 {
                return Err(Error::Invalid("real block size must be positive".into()));
            }
        }
        for b in &complex_blocks {
            if b.half_size == 0 {
                return Err(Error::Invalid("complex block half_size must be positive".into()));
            }
            if b.im.is_zero() {
                return Err(Error::Invalid("complex block with im = 0; use a real block".into()));
            }
        }
        if real_blocks.is_empty() && complex_blocks.is_empty() {
            return Err(Error::Invalid("empty spec (N = 0)".into()));
        }
        if complex_blocks.is_empty() && real_blocks.iter().all(|b| b.size == 1 && b.eig.is_zero()) {
            return Err(Error::Abelian);
        }
        let n = real_blocks.iter().map(|b| b.size).sum::<usize>()
            + 2 * complex_blocks.iter().map(|b| b.half_size).sum::<usize>();
        Ok(JordanSpec { real_blocks, complex_blocks, from_user: Permutation::identity(n) })
    }

    pub fn real(blocks: &[(usize, i64)]) -> Result<Self, Error> {
        Self::new(blocks.iter().map(|&(n, e)| RealBlock::new(n, rat(e))).collect(), vec![])
    }

    /// Row permutation σ with `Pᵗ 𝒥_user P = 𝒥_self`, i.e. canonical row `i` is user row `σ(i)`.
    pub fn from_user(&self) -> &Permutation {
        &self.from_user
    }

    pub fn canonical_order(&self) -> JordanSpec {
        let blocks = self.blocks();
        let n_real = self.real_blocks.len();

        let real_key = |b: &RealBlock| -> (u8, Rational, u8, std::cmp::Reverse<usize>) {
            if b.eig.is_zero() {
                (0, Rational::zero(), 0, std::cmp::Reverse(b.size))
            } else {
                (1, b.eig.abs(), u8::from(b.eig.is_negative()), std::cmp::Reverse(b.size))
            }
        };
        let mut real_idx: Vec<usize> = (0..n_real).collect();
        real_idx.sort_by(|&a, &b| real_key(&self.real_blocks[a]).cmp(&real_key(&self.real_blocks[b])));

        let normalized: Vec<ComplexBlock> = self
            .complex_blocks
            .iter()
            .map(|b| ComplexBlock { half_size: b.half_size, re: b.re.clone(), im: b.im.abs() })
            .collect();
        let cx_cmp = |a: &ComplexBlock, b: &ComplexBlock| -> Ordering {
            let ka = (u8::from(!a.re.is_zero()), a.re.abs(), a.im.clone(), u8::from(a.re.is_negative()));
            let kb = (u8::from(!b.re.is_zero()), b.re.abs(), b.im.clone(), u8::from(b.re.is_negative()));
            ka.cmp(&kb).then(b.half_size.cmp(&a.half_size))
        };
        let mut cx_idx: Vec<usize> = (0..normalized.len()).collect();
        cx_idx.sort_by(|&a, &b| cx_cmp(&normalized[a], &normalized[b]));

        let mut images = Vec::with_capacity(self.n());
        for &i in &real_idx {
            let b = &blocks[i];
            images.extend(b.offset..b.offset + b.rows());
        }
        for &j in &cx_idx {
            let b = &blocks[n_real + j];
            let flip = self.complex_blocks[j].im.is_negative();
            for t in 0..b.size {
                let o = b.offset + 2 * t;
                if flip {
                    images.extend([o + 1, o]);
                } else {
                    images.extend([o, o + 1]);
                }
            }
        }
        let sigma = Permutation::new(images).expect("block reordering is a permutation");
        JordanSpec {
            real_blocks: real_idx.iter().map(|&i| self.real_blocks[i].clone()).collect(),
            complex_blocks: cx_idx.iter().map(|&j| normalized[j].clone()).collect(),
            from_user: self.from_user.compose(&sigma),
        }
    }

    pub fn n_real(&self) -> usize {
        self.real_blocks.iter().map(|b| b.size).sum()
    }

    pub fn n_complex(&self) -> usize {
        2 * self.complex_blocks.iter().map(|b| b.half_size).sum::<usize>()
    }

    pub fn n(&self) -> usize {
        self.n_real() + self.n_complex()
    }

    pub fn d(&self) -> usize {
        self.n() + 1
    }

    pub fn blocks(&self) -> Vec<BlockInfo> {
        let mut out = Vec::new();
        let mut offset = 0;
        for b in &self.real_blocks {
            out.push(BlockInfo { index: out.len(), eigen: Eigen::Real(b.eig.clone()), size: b.size, cell: 1, offset });
            offset += b.size;
        }
        for b in &self.complex_blocks {
            out.push(BlockInfo {
                index: out.len(),
                eigen: Eigen::Complex(b.re.clone(), b.im.clone()),
                size: b.half_size,
                cell: 2,
                offset,
            });
            offset += 2 * b.half_size;
        }
        out
    }

    pub fn partition(&self) -> BlockPartition {
        let blocks = self.blocks();
        BlockPartition {
            block_sizes: blocks.iter().map(|b| b.rows()).collect(),
            cells: blocks.iter().map(|b| b.cell).collect(),
            offsets: blocks.iter().map(|b| b.offset).collect(),
        }
    }

    /// The real and complex parts as separate specs (either may be absent).
    pub fn split(&self) -> (Vec<RealBlock>, Vec<ComplexBlock>) {
        (self.real_blocks.clone(), self.complex_blocks.clone())
    }

    pub fn p_matrix(&self) -> RationalMatrix {
        self.partition().reversal()
    }

    pub fn i_pm(&self) -> RationalMatrix {
        self.partition().alternating()
    }

    /// `I ⊕ … ⊕ U ⊕ … ⊕ I` with the upper shift `U` (in cell units) on block `block`.
    pub fn shift(&self, block: usize) -> Result<RationalMatrix, Error> {
        let blocks = self.blocks();
        let b = blocks
            .get(block)
            .ok_or_else(|| Error::Invalid(format!("block index {block} out of range")))?;
        let mut m = RationalMatrix::identity(self.n());
        for r in b.offset..b.offset + b.rows() {
            m[(r, r)] = Rational::zero();
        }
        for t in 0..b.size.saturating_sub(1) {
            for e in 0..b.cell {
                m[(b.offset + t * b.cell + e, b.offset + (t + 1) * b.cell + e)] = Rational::one();
            }
        }
        Ok(m)
    }
}

pub fn parse_spec(text: &str) -> Result<JordanSpec, Error> {
    crate::io::spec_from_json(text)
}

pub fn build_jordan(spec: &JordanSpec) -> RationalMatrix {
    let n = spec.n();
    let mut m = RationalMatrix::zeros(n, n);
    for b in spec.blocks() {
        let o = b.offset;
        match &b.eigen {
            Eigen::Real(l) => {
                for t in 0..b.size {
                    m[(o + t, o + t)] = l.clone();
                    if t + 1 < b.size {
                        m[(o + t, o + t + 1)] = Rational::one();
                    }
                }
            }
            Eigen::Complex(a, im) => {
                for t in 0..b.size {
                    let r = o + 2 * t;
                    m[(r, r)] = a.clone();
                    m[(r + 1, r + 1)] = a.clone();
                    m[(r, r + 1)] = im.clone();
                    m[(r + 1, r)] = -im.clone();
                    if t + 1 < b.size {
                        m[(r, r + 2)] = Rational::one();
                        m[(r + 1, r + 3)] = Rational::one();
                    }
                }
            }
        }
    }
    m
}

/// `J_{(D,R)} = J_R ⊕ 0` with `J_R = [[0, I_{R/2}], [−I_{R/2}, 0]]`.
pub fn j_canonical(d: usize, r: usize) -> Result<RationalMatrix, Error> {
    if !r.is_multiple_of(2) {
        return Err(Error::Invalid(format!("rank {r} is odd")));
    }
    if r > d {
        return Err(Error::Rejected(format!("rank exceeds dimension: {r} > {d}")));
    }
    let h = r / 2;
    let mut m = RationalMatrix::zeros(d, d);
    for i in 0..h {
        m[(i, h + i)] = rat(1);
        m[(h + i, i)] = rat(-1);
    }
    Ok(m)
}

#[derive(Clone, Debug)]
pub struct AuxMatrices {
    pub p: RationalMatrix,
    pub i_pm: RationalMatrix,
    pub j_canonical: RationalMatrix,
    pub shifts: Vec<RationalMatrix>,
}

pub fn aux_matrices(spec: &JordanSpec, r: usize) -> Result<AuxMatrices, Error> {
    Ok(AuxMatrices {
        p: spec.p_matrix(),
        i_pm: spec.i_pm(),
        j_canonical: j_canonical(spec.d(), r)?,
        shifts: (0..spec.blocks().len()).map(|b| spec.shift(b)).collect::<Result<_, _>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::congruence;

    fn cx(m: usize, a: i64, b: i64) -> ComplexBlock {
        ComplexBlock::new(m, rat(a), rat(b))
    }

    #[test]
    fn example_dimensions() {
        let s = JordanSpec::real(&[(3, 1), (2, -1)]).unwrap();
        assert_eq!((s.n_real(), s.d()), (5, 6));
        let c = JordanSpec::new(vec![], vec![cx(4, 0, 1)]).unwrap();
        assert_eq!((c.n_complex(), c.d()), (8, 9));
        assert_eq!(JordanSpec::real(&[(1, 0)]), Err(Error::Abelian));
        assert!(JordanSpec::new(vec![], vec![cx(1, 1, 0)]).is_err());
        assert!(JordanSpec::real(&[(0, 1)]).is_err());
    }

    #[test]
    fn ordering_examples() {
        let s = JordanSpec::real(&[(2, -1), (3, 1)]).unwrap();
        assert_eq!(s.real_blocks, vec![RealBlock::new(3, rat(1)), RealBlock::new(2, rat(-1))]);
        let s = JordanSpec::real(&[(1, 0), (3, 0)]).unwrap();
        assert_eq!(s.real_blocks, vec![RealBlock::new(3, rat(0)), RealBlock::new(1, rat(0))]);
        let c = JordanSpec::new(vec![], vec![cx(2, -1, 1), cx(2, 1, 1)]).unwrap();
        assert_eq!(c.complex_blocks, vec![cx(2, 1, 1), cx(2, -1, 1)]);
        let c = JordanSpec::new(vec![], vec![cx(1, 2, -3)]).unwrap();
        assert_eq!(c.complex_blocks, vec![cx(1, 2, 3)]);
    }

    #[test]
    fn jordan_examples() {
        let s = JordanSpec::raw(vec![RealBlock::new(2, rat(0))], vec![]).unwrap();
        assert_eq!(build_jordan(&s), RationalMatrix::from_i64(&[vec![0, 1], vec![0, 0]]));
        let c = JordanSpec::raw(vec![], vec![cx(1, 0, 1)]).unwrap();
        assert_eq!(build_jordan(&c), RationalMatrix::from_i64(&[vec![0, 1], vec![-1, 0]]));
        let s = JordanSpec::real(&[(3, 1), (2, -1)]).unwrap();
        let j = build_jordan(&s);
        let expect = RationalMatrix::from_i64(&[
            vec![1, 1, 0, 0, 0],
            vec![0, 1, 1, 0, 0],
            vec![0, 0, 1, 0, 0],
            vec![0, 0, 0, -1, 1],
            vec![0, 0, 0, 0, -1],
        ]);
        assert_eq!(j, expect);
    }

    #[test]
    fn reorder_is_similarity() {
        let raw = JordanSpec::raw(
            vec![RealBlock::new(1, rat(0)), RealBlock::new(2, rat(-1)), RealBlock::new(3, rat(1))],
            vec![cx(2, -1, -2), cx(1, 0, 1), cx(1, 1, 2)],
        )
        .unwrap();
        let canon = raw.canonical_order();
        let p = canon.from_user().matrix();
        let lhs = p.transpose().mul(&build_jordan(&raw)).unwrap().mul(&p).unwrap();
        assert_eq!(lhs, build_jordan(&canon));
        assert_eq!(canon.canonical_order().real_blocks, canon.real_blocks);
    }

    #[test]
    fn aux_examples() {
        let s = JordanSpec::real(&[(3, 0)]).unwrap();
        assert_eq!(s.p_matrix(), RationalMatrix::from_i64(&[vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]));
        assert_eq!(s.i_pm(), RationalMatrix::from_i64(&[vec![1, 0, 0], vec![0, -1, 0], vec![0, 0, 1]]));
        let j = j_canonical(4, 2).unwrap();
        assert_eq!(
            j,
            RationalMatrix::from_i64(&[vec![0, 1, 0, 0], vec![-1, 0, 0, 0], vec![0, 0, 0, 0], vec![0, 0, 0, 0]])
        );
        assert!(j_canonical(4, 3).is_err());
        assert!(j_canonical(4, 6).is_err());
    }

    #[test]
    fn aux_identities() {
        let s = JordanSpec::new(
            vec![RealBlock::new(3, rat(0)), RealBlock::new(2, rat(1))],
            vec![cx(2, 0, 1), cx(3, 1, 1)],
        )
        .unwrap();
        let p = s.p_matrix();
        let ipm = s.i_pm();
        let id = RationalMatrix::identity(s.n());
        assert_eq!(p.mul(&p).unwrap(), id);
        assert_eq!(ipm.mul(&ipm).unwrap(), id);
        let part = s.partition();
        let pi = p.mul(&ipm).unwrap();
        let ip = ipm.mul(&p).unwrap();
        for b in s.blocks() {
            let o = part.offsets[b.index];
            let r = b.rows();
            let sign = if b.size % 2 == 1 { rat(1) } else { rat(-1) };
            assert_eq!(ip.block(o, o, r, r), pi.block(o, o, r, r).scale(&sign));
        }
        for d in [2usize, 5, 8] {
            for r in (0..=d).step_by(2) {
                assert_eq!(j_canonical(d, r).unwrap().rank(), r);
            }
        }
        let u = s.shift(0).unwrap();
        assert_eq!(congruence(&u, &id).unwrap().rank(), s.n() - 1);
    }
}
