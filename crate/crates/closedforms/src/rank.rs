//! Maximal-rank formulas and the existence predicates built on them.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::jordan::JordanSpec;
use crate::linalg::Rational;
use crate::Error;

pub fn manhattan(u: &[usize], v: &[usize]) -> Result<usize, Error> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(format!("vectors of length {} and {}", u.len(), v.len())));
    }
    Ok(u.iter().zip(v).map(|(a, b)| a.abs_diff(*b)).sum())
}

/// Sort both vectors descending and pad the shorter with zeros.
pub fn padded_pair(mut u: Vec<usize>, mut v: Vec<usize>) -> (Vec<usize>, Vec<usize>) {
    u.sort_unstable_by(|a, b| b.cmp(a));
    v.sort_unstable_by(|a, b| b.cmp(a));
    let len = u.len().max(v.len());
    u.resize(len, 0);
    v.resize(len, 0);
    (u, v)
}

/// The two deficiency terms of the real formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RealDeficits {
    /// `Σ_{l odd} (N(l, 0) mod 2)`
    pub odd_zero: usize,
    /// `(λ > 0, padded L_λ, padded L_{−λ})` per eigenvalue pair
    pub pairs: Vec<(Rational, Vec<usize>, Vec<usize>)>,
}

impl RealDeficits {
    pub fn manhattan_total(&self) -> usize {
        self.pairs.iter().map(|(_, u, v)| manhattan(u, v).expect("padded")).sum()
    }
}

pub fn real_deficits(spec: &JordanSpec) -> RealDeficits {
    let mut zero_counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut by_abs: BTreeMap<Rational, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for b in &spec.real_blocks {
        if b.eig.is_zero() {
            *zero_counts.entry(b.size).or_default() += 1;
        } else {
            let e = by_abs.entry(b.eig.abs()).or_default();
            if b.eig.is_positive() {
                e.0.push(b.size);
            } else {
                e.1.push(b.size);
            }
        }
    }
    let odd_zero = zero_counts.iter().filter(|(l, c)| *l % 2 == 1 && *c % 2 == 1).count();
    let pairs = by_abs
        .into_iter()
        .map(|(lam, (u, v))| {
            let (u, v) = padded_pair(u, v);
            (lam, u, v)
        })
        .collect();
    RealDeficits { odd_zero, pairs }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexDeficits {
    /// `Σ_b Σ_{l odd} (N(l, (0, b)) mod 2)`
    pub odd_imaginary: usize,
    /// `((a > 0, b), padded half-sizes of (a, b), padded half-sizes of (−a, b))`
    pub pairs: Vec<((Rational, Rational), Vec<usize>, Vec<usize>)>,
}

impl ComplexDeficits {
    pub fn manhattan_total(&self) -> usize {
        self.pairs.iter().map(|(_, u, v)| manhattan(u, v).expect("padded")).sum()
    }
}

pub fn complex_deficits(spec: &JordanSpec) -> ComplexDeficits {
    let mut imag: BTreeMap<(Rational, usize), usize> = BTreeMap::new();
    let mut by_abs: BTreeMap<(Rational, Rational), (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for b in &spec.complex_blocks {
        if b.re.is_zero() {
            *imag.entry((b.im.clone(), b.half_size)).or_default() += 1;
        } else {
            let e = by_abs.entry((b.re.abs(), b.im.clone())).or_default();
            if b.re.is_positive() {
                e.0.push(b.half_size);
            } else {
                e.1.push(b.half_size);
            }
        }
    }
    let odd_imaginary = imag.iter().filter(|((_, l), c)| *l % 2 == 1 && *c % 2 == 1).count();
    let pairs = by_abs
        .into_iter()
        .map(|(k, (u, v))| {
            let (u, v) = padded_pair(u, v);
            (k, u, v)
        })
        .collect();
    ComplexDeficits { odd_imaginary, pairs }
}

/// `𝓡_ℝ = N_ℝ − Σ_{l odd}(N(l,0) mod 2) − Σ d_M(L_λ, L_{−λ})`
pub fn max_rank_real(spec: &JordanSpec) -> usize {
    let d = real_deficits(spec);
    spec.n_real() - d.odd_zero - d.manhattan_total()
}

/// The complex formula exactly as printed: `N_ℂ − 2Σ(N(l,(0,b)) mod 2) − 2Σ d_M`.
pub fn max_rank_complex(spec: &JordanSpec) -> usize {
    let d = complex_deficits(spec);
    spec.n_complex() - 2 * d.odd_imaginary - 2 * d.manhattan_total()
}

pub fn formula_bound(spec: &JordanSpec) -> usize {
    2 + max_rank_real(spec) + max_rank_complex(spec)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Formula,
    Oracle,
}

fn check_rank_arg(spec: &JordanSpec, r: usize) -> Result<(), Error> {
    if !r.is_multiple_of(2) {
        return Err(Error::Invalid(format!("rank {r} is odd")));
    }
    if r > spec.d() {
        return Err(Error::Rejected(format!("rank exceeds dimension: {r} > {}", spec.d())));
    }
    Ok(())
}

pub fn exists_presymplectic(spec: &JordanSpec, r: usize, backend: Backend) -> Result<bool, Error> {
    check_rank_arg(spec, r)?;
    if r == 0 {
        return Ok(true);
    }
    match backend {
        Backend::Formula => Ok(r <= formula_bound(spec)),
        Backend::Oracle => {
            let ranks = crate::oracle::achievable_ranks(spec)?;
            let need: &[usize] = if r == spec.d() { &[r - 2] } else { &[r, r - 2] };
            Ok(need.iter().any(|k| ranks.contains(k)))
        }
    }
}

/// Which clause of the symplectic corollary decides the verdict.
///
/// Admissible specs report the matching alternative of clause (3). Inadmissible specs
/// report the first violated clause: `One` (odd purely imaginary count), `Two` (unmatched
/// `±a` complex blocks) or `None` (the real part fails every alternative of clause (3)).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Clause {
    One,
    Two,
    ThreeA,
    ThreeBi,
    ThreeBii,
    None,
}

impl Clause {
    pub fn code(&self) -> &'static str {
        match self {
            Clause::One => "1",
            Clause::Two => "2",
            Clause::ThreeA => "3a",
            Clause::ThreeBi => "3b-i",
            Clause::ThreeBii => "3b-ii",
            Clause::None => "none",
        }
    }
}

pub fn symplectic_admissible(spec: &JordanSpec) -> Result<(bool, Clause), Error> {
    if !spec.d().is_multiple_of(2) {
        return Err(Error::Invalid(format!("D = {} is odd", spec.d())));
    }
    let admissible = formula_bound(spec) >= spec.d();
    let cd = complex_deficits(spec);
    if cd.odd_imaginary != 0 {
        return Ok((admissible, Clause::One));
    }
    if cd.manhattan_total() != 0 {
        return Ok((admissible, Clause::Two));
    }
    let rd = real_deficits(spec);
    let dm = rd.manhattan_total();
    let clause = match (rd.odd_zero, dm) {
        (1, 0) => Clause::ThreeA,
        (0, 1) => {
            let size_one = rd.pairs.iter().any(|(_, u, v)| {
                u.iter().zip(v).any(|(a, b)| (*a, *b) == (1, 0) || (*a, *b) == (0, 1))
            });
            if size_one {
                Clause::ThreeBi
            } else {
                Clause::ThreeBii
            }
        }
        _ => Clause::None,
    };
    Ok((admissible, clause))
}
