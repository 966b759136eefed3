//! Brute-force oracles and instance generators shared by the integration
//! tests.

#![allow(dead_code)]

use lcosd::channel::ChannelFrame;
use lcosd::{BitMatrix, BitVec, LinearCode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> BitMatrix {
    BitMatrix::from_fn(rows, cols, |_, _| rng.random::<bool>())
}

pub fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> BitVec {
    (0..n).map(|_| rng.random::<bool>()).collect()
}

/// Reliabilities that are either continuous or drawn from a small grid of
/// dyadic values (to provoke exact ties).
pub fn random_reliabilities(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    if rng.random::<bool>() {
        (0..n).map(|_| rng.random::<f64>() * 10.0).collect()
    } else {
        (0..n).map(|_| rng.random_range(0..8) as f64 * 0.5).collect()
    }
}

/// Soft weight summed over the support in index order.
pub fn weight(e: &BitVec, r_abs: &[f64]) -> f64 {
    e.iter_ones().map(|i| r_abs[i]).sum()
}

pub fn from_mask(mask: u64, n: usize) -> BitVec {
    BitVec::from_support(n, (0..n).filter(|i| mask >> i & 1 == 1))
}

/// All solutions of `e·Pᵀ = s` with their weights, sorted by weight.
pub fn coset(p: &BitMatrix, r_abs: &[f64], s: &BitVec) -> Vec<(f64, BitVec)> {
    let n = p.cols();
    let mut out: Vec<(f64, BitVec)> = (0u64..1 << n)
        .map(|m| from_mask(m, n))
        .filter(|e| p.mul_vec(e).unwrap() == *s)
        .map(|e| (weight(&e, r_abs), e))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Group a weight-sorted sequence into runs of equal weight, each run as a
/// sorted list of patterns.
pub fn tie_groups(seq: &[(f64, BitVec)]) -> Vec<(f64, Vec<Vec<u8>>)> {
    let mut out: Vec<(f64, Vec<Vec<u8>>)> = Vec::new();
    for (w, e) in seq {
        match out.last_mut() {
            Some((lw, group)) if lw == w => group.push(e.to_bits()),
            _ => out.push((*w, vec![e.to_bits()])),
        }
    }
    for (_, g) in &mut out {
        g.sort();
    }
    out
}

/// Every codeword, by enumerating combinations of generator rows.
pub fn codewords(code: &LinearCode) -> Vec<BitVec> {
    let g = code.generator_matrix();
    let k = g.rows();
    (0u64..1 << k)
        .map(|m| {
            let mut c = BitVec::zeros(code.n());
            for i in 0..k {
                if m >> i & 1 == 1 {
                    c.xor_assign(&g.row(i));
                }
            }
            c
        })
        .collect()
}

/// Minimum soft weight `Γ(z + c)` over all codewords.
pub fn ml_weight(words: &[BitVec], frame: &ChannelFrame) -> f64 {
    let r_abs = frame.r_abs();
    words.iter().map(|c| weight(&frame.z.xor(c), &r_abs)).fold(f64::INFINITY, f64::min)
}

pub fn hamming() -> LinearCode {
    LinearCode::new(BitMatrix::from_strs(&["1010101", "0110011", "0001111"]).unwrap()).unwrap()
}

/// Independent k-best list Viterbi: every trellis node keeps its full sorted
/// list of path weights, merged level by level.
pub fn parallel_list_viterbi(p: &BitMatrix, r_abs: &[f64], s: &BitVec, keep: usize) -> Vec<f64> {
    use std::collections::HashMap;
    let col = |j: usize| (0..p.rows()).fold(0u64, |acc, i| acc | ((p.get(i, j) as u64) << i));
    let target = s.iter_ones().fold(0u64, |acc, i| acc | (1 << i));
    let mut lists: HashMap<u64, Vec<f64>> = HashMap::from([(0u64, vec![0.0])]);
    for (j, &r) in r_abs.iter().enumerate() {
        let c = col(j);
        let mut next: HashMap<u64, Vec<f64>> = HashMap::new();
        for (&state, ws) in &lists {
            next.entry(state).or_default().extend(ws.iter().copied());
            next.entry(state ^ c).or_default().extend(ws.iter().map(|w| w + r));
        }
        for ws in next.values_mut() {
            ws.sort_by(f64::total_cmp);
            ws.truncate(keep);
        }
        lists = next;
    }
    lists.remove(&target).unwrap_or_default()
}
