use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestCaseError, TestRunner};

use closedforms::constructor::{
    apply_equivalence, check_closed, construct_max, lift, lift_with, lower_rank, random_equivalence, LIFT_RETRIES,
};
use closedforms::jordan::{build_jordan, j_canonical, ComplexBlock, Eigen, JordanSpec, RealBlock};
use closedforms::linalg::{congruence, rat, Rational, RationalMatrix};
use closedforms::oracle::{dense_commutant_space, dense_solution_space, generic_rank};
use closedforms::rank::{exists_presymplectic, max_rank_complex, max_rank_real, Backend};
use closedforms::structured::{blockstar, commutant_basis, commutes, lyapunov_basis, membership, Which};

pub type PropResult = Result<(), TestCaseError>;

pub fn config(cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(0), failure_persistence: None, ..Config::default() }
}

pub fn runner(cases: u32) -> TestRunner {
    TestRunner::new(config(cases))
}

pub fn int_matrix(max_dim: usize, bound: i64) -> impl Strategy<Value = RationalMatrix> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(move |(r, c)| {
        proptest::collection::vec(-bound..=bound, r * c).prop_map(move |v| {
            RationalMatrix::from_fn(r, c, |i, j| rat(v[i * c + j]))
        })
    })
}

pub fn square(n: usize, bound: i64) -> impl Strategy<Value = RationalMatrix> {
    proptest::collection::vec(-bound..=bound, n * n)
        .prop_map(move |v| RationalMatrix::from_fn(n, n, |i, j| rat(v[i * n + j])))
}

pub fn skew(n: usize, bound: i64) -> impl Strategy<Value = RationalMatrix> {
    square(n, bound).prop_map(|m| m.sub(&m.transpose()).unwrap())
}

/// Real blocks of size ≤ 3 with eigenvalues in `{−2, …, 2}` and complex blocks of half size ≤ 2.
pub fn spec(max_n: usize) -> impl Strategy<Value = JordanSpec> {
    let real = proptest::collection::vec((1usize..=3, -2i64..=2), 0..=4);
    let cx = proptest::collection::vec((1usize..=2, -1i64..=1, 1i64..=2), 0..=2);
    (real, cx).prop_filter_map("valid spec within size", move |(r, c)| {
        let n: usize = r.iter().map(|b| b.0).sum::<usize>() + c.iter().map(|b| 2 * b.0).sum::<usize>();
        if n > max_n {
            return None;
        }
        JordanSpec::new(
            r.iter().map(|&(s, e)| RealBlock::new(s, rat(e))).collect(),
            c.iter().map(|&(m, a, b)| ComplexBlock::new(m, rat(a), rat(b))).collect(),
        )
        .ok()
    })
}

pub fn real_spec(max_n: usize) -> impl Strategy<Value = JordanSpec> {
    proptest::collection::vec((1usize..=3, -1i64..=1), 1..=4).prop_filter_map("valid real spec", move |r| {
        if r.iter().map(|b| b.0).sum::<usize>() > max_n {
            return None;
        }
        JordanSpec::real(&r).ok()
    })
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> PropResult {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

pub fn rank_transpose(m: &RationalMatrix) -> PropResult {
    check(m.rank() == m.transpose().rank(), || format!("{m:?}"))
}

pub fn skew_rank_even(m: &RationalMatrix) -> PropResult {
    check(m.rank() % 2 == 0, || format!("odd rank for {m:?}"))
}

pub fn congruence_action(s1: &RationalMatrix, s2: &RationalMatrix, b: &RationalMatrix) -> PropResult {
    let lhs = congruence(s2, &congruence(s1, b).unwrap()).unwrap();
    let rhs = congruence(&s1.mul(s2).unwrap(), b).unwrap();
    check(lhs == rhs, || "congruence is not an action".into())
}

pub fn congruence_keeps_rank(s: &RationalMatrix, b: &RationalMatrix) -> PropResult {
    if s.rank() != s.rows() {
        return Ok(());
    }
    check(congruence(s, b).unwrap().rank() == b.rank(), || "rank changed".into())
}

pub fn exact_rank_matches_float(m: &RationalMatrix) -> PropResult {
    check(m.rank() == m.to_float().rank(), || format!("exact {} float {}", m.rank(), m.to_float().rank()))
}

pub fn blockstar_anti_automorphism(spec: &JordanSpec, x: &RationalMatrix, y: &RationalMatrix) -> PropResult {
    let part = spec.partition();
    let xy = blockstar(&x.mul(y).unwrap(), &part).unwrap();
    let yx = blockstar(y, &part).unwrap().mul(&blockstar(x, &part).unwrap()).unwrap();
    check(xy == yx, || "(XY)^⊠ ≠ Y^⊠X^⊠".into())?;
    check(blockstar(&blockstar(x, &part).unwrap(), &part).unwrap() == *x, || "not involutive".into())
}

fn span_rank(ms: &[RationalMatrix], n: usize) -> usize {
    if ms.is_empty() {
        return 0;
    }
    RationalMatrix::from_fn(ms.len(), n * n, |k, e| ms[k][(e / n, e % n)].clone()).rank()
}

pub fn bases_match_dense(spec: &JordanSpec) -> PropResult {
    let n = spec.n();
    let lb = lyapunov_basis(spec);
    let dense = dense_solution_space(spec).unwrap();
    check(lb.len() == dense.len(), || format!("lyapunov {} vs dense {}", lb.len(), dense.len()))?;
    for b in &lb {
        check(membership(b, spec, Which::Lyapunov).unwrap().holds, || "basis element fails membership".into())?;
    }
    let both: Vec<RationalMatrix> = lb.iter().chain(&dense).cloned().collect();
    check(span_rank(&both, n) == lb.len(), || "spans differ".into())?;
    if n <= 10 {
        let cb = commutant_basis(spec);
        let dc = dense_commutant_space(spec).unwrap();
        check(cb.len() == dc.len(), || format!("commutant {} vs dense {}", cb.len(), dc.len()))?;
        let both: Vec<RationalMatrix> = cb.iter().chain(&dc).cloned().collect();
        check(span_rank(&both, n) == cb.len(), || "commutant spans differ".into())?;
    }
    Ok(())
}

pub fn reversed_basis_is_star_skew(spec: &JordanSpec) -> PropResult {
    let p = spec.p_matrix();
    let part = spec.partition();
    for b in lyapunov_basis(spec) {
        let c = p.mul(&b).unwrap();
        check(p.mul(&c).unwrap() == b, || "P_N is not an involution on the basis".into())?;
        check(blockstar(&c, &part).unwrap() == c.neg(), || "P_N b is not ⊠-skew".into())?;
    }
    Ok(())
}

pub fn commutant_respects_eigenvalues(spec: &JordanSpec) -> PropResult {
    let blocks = spec.blocks();
    for a in commutant_basis(spec) {
        for bi in &blocks {
            for bj in &blocks {
                if commutes(bi, bj) {
                    continue;
                }
                let blk = a.block(bi.offset, bj.offset, bi.rows(), bj.rows());
                check(blk.is_zero(), || format!("nonzero block ({}, {})", bi.index, bj.index))?;
            }
        }
    }
    Ok(())
}

pub fn jordan_aux_identities(spec: &JordanSpec) -> PropResult {
    let n = spec.n();
    let p = spec.p_matrix();
    let ipm = spec.i_pm();
    let id = RationalMatrix::identity(n);
    check(p.mul(&p).unwrap() == id, || "P_N² ≠ I".into())?;
    check(ipm.mul(&ipm).unwrap() == id, || "(I^±)² ≠ I".into())?;
    let (pi, ip) = (p.mul(&ipm).unwrap(), ipm.mul(&p).unwrap());
    for b in spec.blocks() {
        let sign = if b.size % 2 == 1 { rat(1) } else { rat(-1) };
        let l = pi.block(b.offset, b.offset, b.rows(), b.rows());
        let r = ip.block(b.offset, b.offset, b.rows(), b.rows()).scale(&sign);
        check(l == r, || format!("P_N I^± sign on block {}", b.index))?;
    }
    let user = JordanSpec::raw(spec.real_blocks.iter().rev().cloned().collect(), spec.complex_blocks.iter().rev().cloned().collect()).unwrap();
    let canon = user.canonical_order();
    let perm = canon.from_user().matrix();
    check(congruence(&perm, &build_jordan(&user)).unwrap() == build_jordan(&canon), || "ordering not similar".into())?;
    let d = spec.d();
    for r in (0..=d).step_by(2) {
        check(j_canonical(d, r).unwrap().rank() == r, || format!("rank J_({d},{r})"))?;
    }
    Ok(())
}

pub fn formula_parity(spec: &JordanSpec) -> PropResult {
    let (r, c) = (max_rank_real(spec), max_rank_complex(spec));
    check(r % 2 == 0 && r <= spec.n_real(), || format!("real formula {r}"))?;
    check(c % 2 == 0 && c <= spec.n_complex(), || format!("complex formula {c}"))
}

/// Adding `𝒥_n(−λ)` for a block `𝒥_n(λ)` whose `−λ` group is empty raises the real formula by `2n`.
pub fn mirror_monotone(blocks: &[(usize, i64)], pick: usize) -> PropResult {
    let spec = JordanSpec::real(blocks).unwrap();
    let (n, lam) = blocks[pick % blocks.len()];
    let mut more = blocks.to_vec();
    more.push((n, -lam));
    let after = JordanSpec::real(&more).unwrap();
    check(max_rank_real(&after) == max_rank_real(&spec) + 2 * n, || {
        format!("{} -> {}", max_rank_real(&spec), max_rank_real(&after))
    })
}

pub fn formula_downward_closed(spec: &JordanSpec) -> PropResult {
    let verdicts: Vec<bool> =
        (0..=spec.d()).step_by(2).map(|r| exists_presymplectic(spec, r, Backend::Formula).unwrap()).collect();
    check(verdicts.windows(2).all(|w| w[0] || !w[1]), || format!("{verdicts:?}"))
}

pub fn generic_rank_seed_stable(spec: &JordanSpec) -> PropResult {
    let a = generic_rank(spec, 25, 0).unwrap();
    let b = generic_rank(spec, 25, 1).unwrap();
    check(a == b, || format!("seed 0: {a}, seed 1: {b}"))
}

pub fn construction_chain(spec: &JordanSpec) -> PropResult {
    let top = construct_max(spec).unwrap();
    let want = max_rank_real(spec) + max_rank_complex(spec);
    check(top.rank == want, || format!("construct_max {} vs formula {want}", top.rank))?;
    for t in (0..=top.rank).step_by(2) {
        let low = lower_rank(&top, t, spec).unwrap();
        check(low.matrix.rank() == t, || format!("lower_rank({t}) has rank {}", low.matrix.rank()))?;
        check(membership(&low.matrix, spec, Which::Lyapunov).unwrap().holds, || "witness fails membership".into())?;
    }
    Ok(())
}

pub fn lift_properties(spec: &JordanSpec, seed: u64) -> PropResult {
    let top = construct_max(spec).unwrap();
    let mut targets = vec![top.rank];
    if top.rank < spec.n() {
        targets.push(top.rank + 2);
    }
    for r in targets {
        let f = lift(&top, r, spec, seed).unwrap();
        check(f.matrix.rank() == r, || format!("lift rank {} vs {r}", f.matrix.rank()))?;
        check(f.retries < LIFT_RETRIES, || "retry budget".into())?;
        check(check_closed(&f.matrix, spec).unwrap().closed, || "lift is not closed".into())?;
    }
    Ok(())
}

pub fn equivalence_preserves(spec: &JordanSpec, seed: u64) -> PropResult {
    let top = construct_max(spec).unwrap();
    let r = if top.rank < spec.n() { top.rank + 2 } else { top.rank };
    let f = lift(&top, r, spec, seed).unwrap().matrix;
    let g = apply_equivalence(&f, &random_equivalence(spec, seed)).unwrap();
    check(check_closed(&g, spec).unwrap().closed, || "closedness lost".into())?;
    check(g.rank() == f.rank(), || "rank changed".into())
}

/// The triple-sum test and the minor equation agree on arbitrary skew forms.
pub fn triple_sum_agrees(spec: &JordanSpec, form: &RationalMatrix) -> PropResult {
    let c = check_closed(form, spec).unwrap();
    check(c.agrees, || "triple sum disagrees with the minor equation".into())?;
    let mut b = construct_max(spec).unwrap().matrix;
    b = b.scale(&rat(2));
    let v: Vec<Rational> = (0..spec.n()).map(|k| form[(0, (k + 1) % spec.d())].clone()).collect();
    let closed = lift_with(&b, &v);
    let c = check_closed(&closed, spec).unwrap();
    check(c.closed && c.agrees, || "lifted witness not closed".into())
}

pub fn has_complex(spec: &JordanSpec) -> bool {
    spec.blocks().iter().any(|b| matches!(b.eigen, Eigen::Complex(..)))
}
