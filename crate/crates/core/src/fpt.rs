//! Flipping pattern tree enumeration.
//!
//! For a non-decreasing reliability vector, the precedence order `e ⪯ e'`
//! (every suffix of `e'` holds at least as many ones as the same suffix of
//! `e`) implies `Γ(e) <= Γ(e')`. The flipping pattern tree is a spanning tree
//! of that order rooted at the zero vector, so a best-first walk with a
//! priority queue emits all of `F_2^N` in soft-weight order while holding at
//! most one more queued pattern than it has emitted.
//!
//! [`TfptSession`] splits the positions into two halves, runs one tree per
//! half and joins half patterns whose partial syndromes add up to the target.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVec};
use crate::Candidate;

/// Precedence test: `|supp_{>=j}(e)| <= |supp_{>=j}(e2)|` for every `j`.
pub fn precedes(e: &BitVec, e2: &BitVec) -> Result<bool> {
    if e.len() != e2.len() {
        return Err(Error::DimensionMismatch { expected: e.len(), got: e2.len() });
    }
    let (mut a, mut b) = (0usize, 0usize);
    for j in (0..e.len()).rev() {
        a += e.get(j) as usize;
        b += e2.get(j) as usize;
        if a > b {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Left child in the tree: set position 0, if it is clear.
pub fn left_child(support: &[usize]) -> Option<Vec<usize>> {
    match support.first() {
        Some(0) => None,
        _ => {
            let mut s = Vec::with_capacity(support.len() + 1);
            s.push(0);
            s.extend_from_slice(support);
            Some(s)
        }
    }
}

/// Right child in the tree: move the lowest one up by a position, if that
/// position exists and is clear.
pub fn right_child(support: &[usize], n: usize) -> Option<Vec<usize>> {
    let &m = support.first()?;
    if m + 1 >= n || support.get(1) == Some(&(m + 1)) {
        return None;
    }
    let mut s = support.to_vec();
    s[0] = m + 1;
    Some(s)
}

#[derive(Debug)]
struct Queued {
    weight: f64,
    seq: u64,
    /// Support in decreasing order, so the lowest position sits at the end.
    support: Vec<u32>,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight.total_cmp(&other.weight).then(self.seq.cmp(&other.seq))
    }
}

/// Best-first walk of the flipping pattern tree.
#[derive(Debug)]
pub struct FptSession {
    r_abs: Vec<f64>,
    frontier: BinaryHeap<Reverse<Queued>>,
    emitted: usize,
    seq: u64,
}

impl FptSession {
    /// `r_abs` must be non-decreasing.
    pub fn new(r_abs: &[f64]) -> Result<Self> {
        if r_abs.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("reliabilities must be non-decreasing".into()));
        }
        let mut frontier = BinaryHeap::new();
        frontier.push(Reverse(Queued { weight: 0.0, seq: 0, support: Vec::new() }));
        Ok(FptSession { r_abs: r_abs.to_vec(), frontier, emitted: 0, seq: 1 })
    }

    pub fn len(&self) -> usize {
        self.r_abs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_abs.is_empty()
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }

    pub fn frontier_len(&self) -> usize {
        self.frontier.len()
    }

    /// Weight of the next emission without consuming it.
    pub fn peek_weight(&self) -> Option<f64> {
        self.frontier.peek().map(|Reverse(q)| q.weight)
    }

    fn weight_of(&self, support_desc: &[u32]) -> f64 {
        support_desc.iter().rev().map(|&i| self.r_abs[i as usize]).sum()
    }

    fn push(&mut self, support: Vec<u32>) {
        let weight = self.weight_of(&support);
        self.frontier.push(Reverse(Queued { weight, seq: self.seq, support }));
        self.seq += 1;
    }

    /// Pop the next pattern as (weight, support in decreasing order).
    pub fn next_support(&mut self) -> Option<(f64, Vec<u32>)> {
        let Reverse(q) = self.frontier.pop()?;
        let n = self.r_abs.len() as u32;
        let low = q.support.last().copied();
        if low != Some(0) && n > 0 {
            let mut s = q.support.clone();
            s.push(0);
            self.push(s);
        }
        if let Some(m) = low {
            let blocked = q.support.len() >= 2 && q.support[q.support.len() - 2] == m + 1;
            if m + 1 < n && !blocked {
                let mut s = q.support.clone();
                *s.last_mut().unwrap() = m + 1;
                self.push(s);
            }
        }
        self.emitted += 1;
        Some((q.weight, q.support))
    }
}

/// The next lightest vector of `F_2^N`, or `None` after all `2^N`.
pub fn fpt_next(session: &mut FptSession) -> Option<Candidate> {
    let (weight, support) = session.next_support()?;
    let e = BitVec::from_support(session.len(), support.iter().map(|&i| i as usize));
    Some(Candidate { e, weight, rank: session.emitted })
}

impl Iterator for FptSession {
    type Item = Candidate;

    fn next(&mut self) -> Option<Candidate> {
        fpt_next(self)
    }
}

#[derive(Debug)]
struct HalfElem {
    weight: f64,
    /// Global positions, decreasing.
    support: Vec<u32>,
}

#[derive(Debug)]
struct HalfStream {
    fpt: FptSession,
    positions: Vec<usize>,
    elems: Vec<HalfElem>,
}

impl HalfStream {
    fn new(positions: Vec<usize>, r_abs: &[f64]) -> Self {
        let local: Vec<f64> = positions.iter().map(|&p| r_abs[p]).collect();
        let fpt = FptSession::new(&local).expect("half positions are sorted by reliability");
        HalfStream { fpt, positions, elems: Vec::new() }
    }

    fn peek(&self) -> f64 {
        self.fpt.peek_weight().unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Default)]
struct Bucket {
    a: Vec<usize>,
    b: Vec<usize>,
    /// Waiting for element `a.len()` to push pair `(a.len(), 0)`.
    pending_a: bool,
    /// Row indices `i` waiting for element `b.len()` to push `(i, b.len())`.
    pending_b: Vec<usize>,
}

#[derive(Debug)]
struct Pair {
    weight: f64,
    weight_a: f64,
    a_elem: usize,
    b_elem: usize,
    key: u64,
    i: usize,
    j: usize,
}

impl PartialEq for Pair {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pair {}
impl PartialOrd for Pair {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pair {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.weight_a.total_cmp(&other.weight_a))
            .then(self.a_elem.cmp(&other.a_elem))
            .then(self.b_elem.cmp(&other.b_elem))
    }
}

/// Two-way flipping pattern tree over a parity-check matrix `P` (δ×N).
///
/// Part A holds the `⌊N/2⌋` least reliable positions and part B the rest.
/// Pairs are keyed by the partial syndrome of their A half; within a key, a
/// best-first frontier walks the grid of (A rank, B rank), and half streams
/// are advanced only while their next emission could still beat the best
/// queued pair.
#[derive(Debug)]
pub struct TfptSession {
    n: usize,
    r_abs: Vec<f64>,
    columns: Vec<u64>,
    s_end: u64,
    a: HalfStream,
    b: HalfStream,
    buckets: HashMap<u64, Bucket>,
    pairs: BinaryHeap<Reverse<Pair>>,
    emitted: usize,
}

impl TfptSession {
    pub fn new(p: &BitMatrix, r_abs: &[f64], s_end: &BitVec) -> Result<Self> {
        if p.cols() != r_abs.len() {
            return Err(Error::DimensionMismatch { expected: p.cols(), got: r_abs.len() });
        }
        if s_end.len() != p.rows() {
            return Err(Error::DimensionMismatch { expected: p.rows(), got: s_end.len() });
        }
        if p.rows() > 64 {
            return Err(Error::InvalidParameter(format!("syndrome width {} exceeds 64 bits", p.rows())));
        }
        let n = r_abs.len();
        let columns: Vec<u64> =
            (0..n).map(|j| (0..p.rows()).fold(0u64, |acc, i| acc | ((p.get(i, j) as u64) << i))).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| r_abs[x].total_cmp(&r_abs[y]));
        let split = n / 2;
        let a = HalfStream::new(order[..split].to_vec(), r_abs);
        let b = HalfStream::new(order[split..].to_vec(), r_abs);
        Ok(TfptSession {
            n,
            r_abs: r_abs.to_vec(),
            columns,
            s_end: s_end.iter_ones().fold(0u64, |acc, i| acc | (1 << i)),
            a,
            b,
            buckets: HashMap::new(),
            pairs: BinaryHeap::new(),
            emitted: 0,
        })
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }

    /// Index of the first part-B position in reliability order.
    pub fn split(&self) -> usize {
        self.a.positions.len()
    }

    fn push_pair(&mut self, key: u64, i: usize, j: usize) {
        let bucket = &self.buckets[&key];
        let (ai, bj) = (bucket.a[i], bucket.b[j]);
        let wa = self.a.elems[ai].weight;
        let wb = self.b.elems[bj].weight;
        self.pairs.push(Reverse(Pair { weight: wa + wb, weight_a: wa, a_elem: ai, b_elem: bj, key, i, j }));
    }

    /// Pull one pattern from half `A` (or `B`) into its bucket.
    fn advance(&mut self, part_a: bool) {
        let stream = if part_a { &mut self.a } else { &mut self.b };
        let Some((weight, local)) = stream.fpt.next_support() else {
            return;
        };
        let mut support: Vec<u32> = local.iter().map(|&i| stream.positions[i as usize] as u32).collect();
        support.sort_unstable_by(|x, y| y.cmp(x));
        let syndrome = support.iter().fold(0u64, |acc, &g| acc ^ self.columns[g as usize]);
        let elem = stream.elems.len();
        stream.elems.push(HalfElem { weight, support });

        let key = if part_a { syndrome } else { syndrome ^ self.s_end };
        let bucket = self.buckets.entry(key).or_default();
        let mut to_push = Vec::new();
        if part_a {
            let i = bucket.a.len();
            bucket.a.push(elem);
            if i == 0 {
                if !bucket.b.is_empty() {
                    to_push.push((0, 0));
                }
            } else if std::mem::take(&mut bucket.pending_a) {
                to_push.push((i, 0));
            }
        } else {
            let j = bucket.b.len();
            bucket.b.push(elem);
            if j == 0 {
                if !bucket.a.is_empty() {
                    to_push.push((0, 0));
                }
            } else {
                to_push.extend(bucket.pending_b.drain(..).map(|i| (i, j)));
            }
        }
        for (i, j) in to_push {
            self.push_pair(key, i, j);
        }
    }

    fn emit(&mut self, pair: Pair) -> Candidate {
        let bucket = self.buckets.get_mut(&pair.key).expect("bucket of a queued pair");
        let mut next = Vec::new();
        if pair.j + 1 < bucket.b.len() {
            next.push((pair.i, pair.j + 1));
        } else {
            bucket.pending_b.push(pair.i);
        }
        if pair.j == 0 {
            if pair.i + 1 < bucket.a.len() {
                next.push((pair.i + 1, 0));
            } else {
                bucket.pending_a = true;
            }
        }
        for (i, j) in next {
            self.push_pair(pair.key, i, j);
        }

        let mut support: Vec<usize> = self.a.elems[pair.a_elem]
            .support
            .iter()
            .chain(&self.b.elems[pair.b_elem].support)
            .map(|&g| g as usize)
            .collect();
        support.sort_unstable();
        let weight = support.iter().map(|&g| self.r_abs[g]).sum();
        self.emitted += 1;
        Candidate { e: BitVec::from_support(self.n, support), weight, rank: self.emitted }
    }
}

/// The next lightest solution of `e·Pᵀ = s_end`, or `None` when exhausted.
pub fn tfpt_next(session: &mut TfptSession) -> Option<Candidate> {
    loop {
        let best = session.pairs.peek().map_or(f64::INFINITY, |Reverse(p)| p.weight);
        let (next_a, next_b) = (session.a.peek(), session.b.peek());
        let bound = next_a.min(next_b);
        if !session.pairs.is_empty() && best <= bound {
            let Reverse(pair) = session.pairs.pop().expect("nonempty");
            return Some(session.emit(pair));
        }
        if bound.is_infinite() {
            return None;
        }
        session.advance(next_a <= next_b);
    }
}

impl Iterator for TfptSession {
    type Item = Candidate;

    fn next(&mut self) -> Option<Candidate> {
        tfpt_next(self)
    }
}
