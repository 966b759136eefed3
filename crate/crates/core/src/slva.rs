//! Serial list Viterbi algorithm over the syndrome trellis of a parity-check
//! matrix `P` (δ×N).
//!
//! The state after level `i` is the partial syndrome `Σ_{j<i} e_j·P_j`. Each
//! (level, state) node keeps the list of its best incoming paths in
//! non-decreasing cost, grown only on demand: asking the final node
//! `(N, s_end)` for its ℓ-th entry pulls at most one new entry from each
//! earlier level once the first sweep is done.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVec};
use crate::Candidate;

/// Dense node tables are used while `(N+1)·2^δ` stays below this size.
const DENSE_LIMIT: usize = 1 << 20;
const NO_NODE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Entry {
    cost: f64,
    bit: u8,
    pred_rank: u32,
}

#[derive(Clone, Debug, Default)]
struct Node {
    entries: Vec<Entry>,
    /// Number of stored entries that arrived through bit 0 and bit 1.
    used: [u32; 2],
    exhausted: bool,
}

#[derive(Debug)]
enum NodeIndex {
    Dense { states: usize, slots: Vec<u32> },
    Sparse(HashMap<(u32, u64), u32>),
}

/// A lazily expanded syndrome trellis.
#[derive(Debug)]
pub struct Trellis {
    levels: usize,
    state_width: usize,
    columns: Vec<u64>,
    nodes: Vec<Node>,
    index: NodeIndex,
    entries_created: usize,
}

impl Trellis {
    fn new(p: &BitMatrix) -> Self {
        let levels = p.cols();
        let state_width = p.rows();
        let columns =
            (0..levels).map(|j| (0..state_width).fold(0u64, |acc, i| acc | ((p.get(i, j) as u64) << i))).collect();
        let dense_size = (levels + 1).checked_mul(1usize << state_width.min(40));
        let index = match dense_size {
            Some(size) if state_width < 40 && size <= DENSE_LIMIT => {
                NodeIndex::Dense { states: 1 << state_width, slots: vec![NO_NODE; size] }
            }
            _ => NodeIndex::Sparse(HashMap::new()),
        };
        Trellis { levels, state_width, columns, nodes: Vec::new(), index, entries_created: 0 }
    }

    /// Number of levels `N + 1`.
    pub fn n_levels(&self) -> usize {
        self.levels + 1
    }

    pub fn state_width(&self) -> usize {
        self.state_width
    }

    /// Number of (level, state) nodes materialized so far.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn node_id(&mut self, level: usize, state: u64) -> u32 {
        let existing = match &self.index {
            NodeIndex::Dense { states, slots } => slots[level * states + state as usize],
            NodeIndex::Sparse(map) => map.get(&(level as u32, state)).copied().unwrap_or(NO_NODE),
        };
        if existing != NO_NODE {
            return existing;
        }
        let id = self.nodes.len() as u32;
        let mut node = Node::default();
        if level == 0 {
            // The start state has exactly one (empty) path; every other
            // level-0 state is unreachable.
            if state == 0 {
                node.entries.push(Entry { cost: 0.0, bit: 0, pred_rank: 0 });
                self.entries_created += 1;
            }
            node.exhausted = true;
        }
        self.nodes.push(node);
        match &mut self.index {
            NodeIndex::Dense { states, slots } => slots[level * *states + state as usize] = id,
            NodeIndex::Sparse(map) => {
                map.insert((level as u32, state), id);
            }
        }
        id
    }

    fn lookup(&self, level: usize, state: u64) -> u32 {
        match &self.index {
            NodeIndex::Dense { states, slots } => slots[level * states + state as usize],
            NodeIndex::Sparse(map) => map[&(level as u32, state)],
        }
    }

    #[inline]
    fn settled(&self, id: u32, rank: u32) -> bool {
        let node = &self.nodes[id as usize];
        node.exhausted || node.entries.len() > rank as usize
    }

    #[inline]
    fn cost(&self, id: u32, rank: u32) -> f64 {
        self.nodes[id as usize].entries.get(rank as usize).map_or(f64::INFINITY, |e| e.cost)
    }

    /// Make sure node `(level, state)` holds an entry of index `rank` or is
    /// known to be exhausted. Iterative form of the recursive definition.
    fn ensure(&mut self, r_abs: &[f64], level: usize, state: u64, rank: u32, stack: &mut Vec<(usize, u64, u32)>) {
        stack.clear();
        stack.push((level, state, rank));
        while let Some(&(lv, st, rk)) = stack.last() {
            let id = self.node_id(lv, st);
            if self.settled(id, rk) {
                stack.pop();
                continue;
            }
            let [t0, t1] = self.nodes[id as usize].used;
            let s0 = st;
            let s1 = st ^ self.columns[lv - 1];
            let id0 = self.node_id(lv - 1, s0);
            if !self.settled(id0, t0) {
                stack.push((lv - 1, s0, t0));
                continue;
            }
            let id1 = self.node_id(lv - 1, s1);
            if !self.settled(id1, t1) {
                stack.push((lv - 1, s1, t1));
                continue;
            }
            let c0 = self.cost(id0, t0);
            let c1 = self.cost(id1, t1) + r_abs[lv - 1];
            let node = &mut self.nodes[id as usize];
            if c0.is_infinite() && c1.is_infinite() {
                node.exhausted = true;
            } else if c0 <= c1 {
                node.entries.push(Entry { cost: c0, bit: 0, pred_rank: t0 });
                node.used[0] += 1;
                self.entries_created += 1;
            } else {
                node.entries.push(Entry { cost: c1, bit: 1, pred_rank: t1 });
                node.used[1] += 1;
                self.entries_created += 1;
            }
        }
    }

    /// Replay entry `rank` of node `(N, state)` back to level 0.
    fn path(&self, state: u64, rank: u32) -> BitVec {
        let mut e = BitVec::zeros(self.levels);
        let (mut st, mut rk) = (state, rank);
        for lv in (1..=self.levels).rev() {
            let entry = self.nodes[self.lookup(lv, st) as usize].entries[rk as usize];
            if entry.bit == 1 {
                e.set(lv - 1, true);
                st ^= self.columns[lv - 1];
            }
            rk = entry.pred_rank;
        }
        e
    }
}

/// Sequential generator of the lightest solutions of `e·Pᵀ = s_end`.
#[derive(Debug)]
pub struct SlvaSession {
    r_abs: Vec<f64>,
    s_end: u64,
    trellis: Trellis,
    emitted: usize,
    stack: Vec<(usize, u64, u32)>,
}

impl SlvaSession {
    pub fn emitted(&self) -> usize {
        self.emitted
    }

    /// Total trellis entries created so far (work accounting).
    pub fn entries_created(&self) -> usize {
        self.trellis.entries_created
    }

    pub fn trellis(&self) -> &Trellis {
        &self.trellis
    }
}

/// Open a session. States are packed into 64-bit words, so `P` may have at
/// most 64 rows.
pub fn slva_create(p: &BitMatrix, r_abs: &[f64], s_end: &BitVec) -> Result<SlvaSession> {
    if p.cols() != r_abs.len() {
        return Err(Error::DimensionMismatch { expected: p.cols(), got: r_abs.len() });
    }
    if s_end.len() != p.rows() {
        return Err(Error::DimensionMismatch { expected: p.rows(), got: s_end.len() });
    }
    if p.rows() > 64 {
        return Err(Error::InvalidParameter(format!("state width {} exceeds 64 bits", p.rows())));
    }
    let s_end = s_end.iter_ones().fold(0u64, |acc, i| acc | (1 << i));
    Ok(SlvaSession { r_abs: r_abs.to_vec(), s_end, trellis: Trellis::new(p), emitted: 0, stack: Vec::new() })
}

/// The next lightest solution, or `None` once the coset is exhausted.
/// Equal-cost branches prefer bit 0.
pub fn slva_next(session: &mut SlvaSession) -> Option<Candidate> {
    let rank = session.emitted as u32;
    let levels = session.trellis.levels;
    session.trellis.ensure(&session.r_abs, levels, session.s_end, rank, &mut session.stack);
    let root = session.trellis.lookup(levels, session.s_end);
    let weight = session.trellis.cost(root, rank);
    if weight.is_infinite() {
        return None;
    }
    let e = session.trellis.path(session.s_end, rank);
    session.emitted += 1;
    Some(Candidate { e, weight, rank: session.emitted })
}

impl Iterator for SlvaSession {
    type Item = Candidate;

    fn next(&mut self) -> Option<Candidate> {
        slva_next(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hamming() -> BitMatrix {
        BitMatrix::from_strs(&["1010101", "0110011", "0001111"]).unwrap()
    }

    #[test]
    fn hamming_example_first_two() {
        let r = [2.0, 3.0, 4.0, 6.0, 7.0, 10.0, 14.0];
        let mut s = slva_create(&hamming(), &r, &BitVec::from_bits(&[1, 0, 1])).unwrap();
        let a = slva_next(&mut s).unwrap();
        assert_eq!(a.e.to_bits(), vec![0, 0, 0, 0, 1, 0, 0]);
        assert_eq!(a.weight, 7.0);
        let b = slva_next(&mut s).unwrap();
        assert_eq!(b.e.to_bits(), vec![1, 0, 0, 1, 0, 0, 0]);
        assert_eq!(b.weight, 8.0);
        assert_eq!(s.by_ref().count(), 14);
        assert!(slva_next(&mut s).is_none());
    }

    #[test]
    fn unconstrained_two_bits() {
        let p = BitMatrix::zeros(0, 2);
        let mut s = slva_create(&p, &[1.0, 2.0], &BitVec::zeros(0)).unwrap();
        let got: Vec<_> = s.by_ref().map(|c| (c.e.to_bits(), c.weight)).collect();
        assert_eq!(got, vec![(vec![0, 0], 0.0), (vec![1, 0], 1.0), (vec![0, 1], 2.0), (vec![1, 1], 3.0)]);
    }

    #[test]
    fn dimension_checks() {
        let r = [1.0; 7];
        assert!(matches!(slva_create(&hamming(), &r, &BitVec::zeros(2)), Err(Error::DimensionMismatch { .. })));
        assert!(slva_create(&hamming(), &r[..6], &BitVec::zeros(3)).is_err());
    }

    #[test]
    fn rank_deficient_p_exhausts_after_coset() {
        // Two identical rows: rank 1, coset size 2^(4-1) = 8.
        let p = BitMatrix::from_strs(&["1101", "1101"]).unwrap();
        let mut s = slva_create(&p, &[0.3, 0.1, 0.7, 0.2], &BitVec::from_bits(&[1, 1])).unwrap();
        assert_eq!(s.by_ref().count(), 8);
        let mut s = slva_create(&p, &[0.3, 0.1, 0.7, 0.2], &BitVec::from_bits(&[1, 0])).unwrap();
        assert_eq!(s.by_ref().count(), 0);
    }
}
