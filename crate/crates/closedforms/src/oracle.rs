//! Brute-force ground truth: dense solution spaces, sampled generic rank, achievable ranks.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constructor::{construct_max, lower_rank};
use crate::jordan::{build_jordan, JordanSpec};
use crate::linalg::{rat, Rational, RationalMatrix};
use crate::rank::{max_rank_complex, max_rank_real};
use crate::structured::{membership, Which};
use crate::Error;

pub const DENSE_GUARD: usize = 16;
pub const EXHAUSTIVE_GUARD: usize = 10;

fn guard(spec: &JordanSpec, limit: usize) -> Result<(), Error> {
    if spec.n() > limit {
        return Err(Error::Guard(format!("N = {} exceeds {limit}", spec.n())));
    }
    Ok(())
}

/// Exact basis of `{B skew : B𝒥 + 𝒥ᵗB = 0}` from the vectorized system over `B_ab`, `a < b`.
pub fn dense_solution_space(spec: &JordanSpec) -> Result<Vec<RationalMatrix>, Error> {
    guard(spec, DENSE_GUARD)?;
    let j = build_jordan(spec);
    let n = spec.n();
    let coords: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    // The residual of a skew B is skew, so the strict upper triangle carries every equation.
    let mut sys = RationalMatrix::zeros(coords.len(), coords.len());
    for (col, &(a, b)) in coords.iter().enumerate() {
        for (row, &(i, k)) in coords.iter().enumerate() {
            let mut v = Rational::zero();
            if i == a {
                v += &j[(b, k)];
            }
            if i == b {
                v -= &j[(a, k)];
            }
            if k == b {
                v += &j[(a, i)];
            }
            if k == a {
                v -= &j[(b, i)];
            }
            sys[(row, col)] = v;
        }
    }
    Ok(sys
        .nullspace()
        .into_iter()
        .map(|x| {
            let mut m = RationalMatrix::zeros(n, n);
            for (&(a, b), v) in coords.iter().zip(x) {
                m[(b, a)] = -v.clone();
                m[(a, b)] = v;
            }
            m
        })
        .collect())
}

/// Exact basis of `{A : A𝒥 − 𝒥A = 0}` from the `N²` unknowns.
pub fn dense_commutant_space(spec: &JordanSpec) -> Result<Vec<RationalMatrix>, Error> {
    guard(spec, EXHAUSTIVE_GUARD)?;
    let j = build_jordan(spec);
    let n = spec.n();
    let mut sys = RationalMatrix::zeros(n * n, n * n);
    for a in 0..n {
        for b in 0..n {
            let col = a * n + b;
            for k in 0..n {
                sys[(a * n + k, col)] += &j[(b, k)];
                sys[(k * n + b, col)] -= &j[(k, a)];
            }
        }
    }
    Ok(sys
        .nullspace()
        .into_iter()
        .map(|x| RationalMatrix::from_fn(n, n, |a, b| x[a * n + b].clone()))
        .collect())
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn combine(basis: &[RationalMatrix], coeffs: &[i64], n: usize) -> RationalMatrix {
    let mut m = RationalMatrix::zeros(n, n);
    for (b, &c) in basis.iter().zip(coeffs) {
        if c != 0 {
            m = m.add(&b.scale(&rat(c))).expect("same shape");
        }
    }
    m
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenericSample {
    pub rank: usize,
    pub witness: RationalMatrix,
    /// Ranks seen over all dense and sparse samples.
    pub observed: BTreeSet<usize>,
}

/// Dense samples use coefficients in `[−9, 9]`; each trial also draws a sparse sample.
pub fn generic_sample(spec: &JordanSpec, trials: usize, seed: u64) -> Result<GenericSample, Error> {
    if trials == 0 {
        return Err(Error::Invalid("trials must be at least 1".into()));
    }
    let basis = dense_solution_space(spec)?;
    let n = spec.n();
    let mut best = (0, RationalMatrix::zeros(n, n));
    let mut observed = BTreeSet::from([0]);
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let dense: Vec<i64> = basis.iter().map(|_| rng.gen_range(-9..=9)).collect();
        let sparse: Vec<i64> =
            basis.iter().map(|_| if rng.gen_bool(0.5) { rng.gen_range(-3..=3) } else { 0 }).collect();
        let m = combine(&basis, &dense, n);
        let r = m.rank();
        observed.insert(r);
        if r > best.0 {
            best = (r, m);
        }
        observed.insert(combine(&basis, &sparse, n).rank());
    }
    Ok(GenericSample { rank: best.0, witness: best.1, observed })
}

pub fn generic_rank(spec: &JordanSpec, trials: usize, seed: u64) -> Result<usize, Error> {
    Ok(generic_sample(spec, trials, seed)?.rank)
}

/// Verified witnesses per rank: the construct/lower chain plus sampled members.
pub fn achievable_witnesses(
    spec: &JordanSpec,
    trials: usize,
    seed: u64,
) -> Result<BTreeMap<usize, RationalMatrix>, Error> {
    guard(spec, EXHAUSTIVE_GUARD)?;
    let n = spec.n();
    let mut out = BTreeMap::new();
    out.insert(0, RationalMatrix::zeros(n, n));
    let top = construct_max(spec)?;
    for target in (0..=top.rank).step_by(2) {
        if let Ok(sol) = lower_rank(&top, target, spec) {
            if membership(&sol.matrix, spec, Which::Lyapunov)?.holds && sol.matrix.rank() == target {
                out.entry(target).or_insert(sol.matrix);
            }
        }
    }
    let basis = dense_solution_space(spec)?;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let dense: Vec<i64> = basis.iter().map(|_| rng.gen_range(-9..=9)).collect();
        let sparse: Vec<i64> =
            basis.iter().map(|_| if rng.gen_bool(0.5) { rng.gen_range(-3..=3) } else { 0 }).collect();
        for c in [dense, sparse] {
            let m = combine(&basis, &c, n);
            let r = m.rank();
            out.entry(r).or_insert(m);
        }
    }
    for b in &basis {
        out.entry(b.rank()).or_insert_with(|| b.clone());
    }
    Ok(out)
}

pub const DEFAULT_TRIALS: usize = 25;

pub fn achievable_ranks(spec: &JordanSpec) -> Result<BTreeSet<usize>, Error> {
    Ok(achievable_witnesses(spec, DEFAULT_TRIALS, 0)?.into_keys().collect())
}

pub fn downward_closed(ranks: &BTreeSet<usize>) -> bool {
    let top = ranks.iter().max().copied().unwrap_or(0);
    (0..=top).step_by(2).all(|k| ranks.contains(&k))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub spec: JordanSpec,
    pub basis_dim: usize,
    pub generic_rank: usize,
    pub achievable_ranks: BTreeSet<usize>,
    pub formula_rank: usize,
    pub agreement: bool,
    pub downward_closed: bool,
    pub witness: RationalMatrix,
    pub witness_rank: usize,
    pub witness_valid: bool,
    pub trials: usize,
    pub seed: u64,
}

pub fn report(spec: &JordanSpec, trials: usize, seed: u64) -> Result<OracleReport, Error> {
    let basis_dim = dense_solution_space(spec)?.len();
    let sample = generic_sample(spec, trials, seed)?;
    let achievable: BTreeSet<usize> = if spec.n() <= EXHAUSTIVE_GUARD {
        achievable_witnesses(spec, trials, seed)?.into_keys().collect()
    } else {
        sample.observed.clone()
    };
    let formula_rank = max_rank_real(spec) + max_rank_complex(spec);
    let witness_valid = membership(&sample.witness, spec, Which::Lyapunov)?.holds;
    Ok(OracleReport {
        spec: spec.clone(),
        basis_dim,
        generic_rank: sample.rank,
        downward_closed: downward_closed(&achievable),
        achievable_ranks: achievable,
        formula_rank,
        agreement: formula_rank == sample.rank,
        witness_rank: sample.witness.rank(),
        witness: sample.witness,
        witness_valid,
        trials,
        seed,
    })
}

/// One report per spec; mismatching specs carry a witness above the formula value.
pub fn errata_report(corpus: &[JordanSpec], trials: usize, seed: u64) -> Result<Vec<OracleReport>, Error> {
    corpus.iter().map(|s| report(s, trials, seed)).collect()
}
