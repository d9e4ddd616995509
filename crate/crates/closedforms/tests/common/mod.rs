#![allow(dead_code)]

pub mod props;

use std::collections::BTreeSet;

use closedforms::jordan::{ComplexBlock, JordanSpec, RealBlock};
use closedforms::linalg::rat;

/// Real-only specs with block sizes ≤ 3, eigenvalues in {−1, 0, 1} and `N ≤ max_n`, deduplicated.
pub fn real_corpus(max_n: usize) -> Vec<JordanSpec> {
    let kinds: Vec<(usize, i64)> = (1..=3).flat_map(|s| [-1, 0, 1].map(move |e| (s, e))).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut stack: Vec<(usize, Vec<(usize, i64)>)> = vec![(0, Vec::new())];
    while let Some((from, blocks)) = stack.pop() {
        let n: usize = blocks.iter().map(|b| b.0).sum();
        if !blocks.is_empty() {
            if let Ok(spec) = JordanSpec::real(&blocks) {
                let key = format!("{:?}", spec.real_blocks);
                if seen.insert(key) {
                    out.push(spec);
                }
            }
        }
        for k in from..kinds.len() {
            if n + kinds[k].0 <= max_n {
                let mut next = blocks.clone();
                next.push(kinds[k]);
                stack.push((k, next));
            }
        }
    }
    out.sort_by_key(|s| (s.n(), format!("{:?}", s.real_blocks)));
    out
}

pub fn complex(blocks: &[(usize, i64, i64)]) -> JordanSpec {
    JordanSpec::new(vec![], blocks.iter().map(|&(m, a, b)| ComplexBlock::new(m, rat(a), rat(b))).collect()).unwrap()
}

pub fn mixed(real: &[(usize, i64)], cx: &[(usize, i64, i64)]) -> JordanSpec {
    JordanSpec::new(
        real.iter().map(|&(n, e)| RealBlock::new(n, rat(e))).collect(),
        cx.iter().map(|&(m, a, b)| ComplexBlock::new(m, rat(a), rat(b))).collect(),
    )
    .unwrap()
}

pub fn label(spec: &JordanSpec) -> String {
    let mut parts: Vec<String> = spec.real_blocks.iter().map(|b| format!("J{}({})", b.size, b.eig)).collect();
    parts.extend(spec.complex_blocks.iter().map(|b| format!("C{}({},{})", b.half_size, b.re, b.im)));
    parts.join("+")
}

/// Specs with at least one complex block: half sizes ≤ 2 with `(a, b)` in `{−1, 0, 1} × {1, 2}`,
/// plus real blocks of size ≤ 2 with eigenvalues in `{−1, 0, 1}`, `N ≤ max_n`.
pub fn mixed_corpus(max_n: usize) -> Vec<JordanSpec> {
    let mut kinds: Vec<(usize, i64, i64)> = Vec::new();
    for m in 1..=2 {
        for a in [-1, 0, 1] {
            for b in [1, 2] {
                kinds.push((m, a, b));
            }
        }
    }
    let reals: Vec<(usize, i64)> = (1..=2).flat_map(|s| [-1, 0, 1].map(move |e| (s, e))).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut cx_sets: Vec<Vec<(usize, i64, i64)>> = Vec::new();
    let mut stack: Vec<(usize, Vec<(usize, i64, i64)>)> = vec![(0, Vec::new())];
    while let Some((from, blocks)) = stack.pop() {
        let n: usize = blocks.iter().map(|b| 2 * b.0).sum();
        if !blocks.is_empty() {
            cx_sets.push(blocks.clone());
        }
        for k in from..kinds.len() {
            if n + 2 * kinds[k].0 <= max_n {
                let mut next = blocks.clone();
                next.push(kinds[k]);
                stack.push((k, next));
            }
        }
    }
    for cx in cx_sets {
        let nc: usize = cx.iter().map(|b| 2 * b.0).sum();
        let mut rstack: Vec<(usize, Vec<(usize, i64)>)> = vec![(0, Vec::new())];
        while let Some((from, rb)) = rstack.pop() {
            let n = nc + rb.iter().map(|b| b.0).sum::<usize>();
            let spec = mixed(&rb, &cx);
            if seen.insert(format!("{:?}{:?}", spec.real_blocks, spec.complex_blocks)) {
                out.push(spec);
            }
            for k in from..reals.len() {
                if n + reals[k].0 <= max_n {
                    let mut next = rb.clone();
                    next.push(reals[k]);
                    rstack.push((k, next));
                }
            }
        }
    }
    out.sort_by_key(|s| (s.n(), label(s)));
    out
}
