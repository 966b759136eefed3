//! Dense GF(2) linear algebra on 64-bit packed words.
//!
//! [`BitVec`] and [`BitMatrix`] keep every padding bit beyond the logical
//! length cleared, so word-wise equality is value equality.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const WORD: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

#[inline]
fn tail_mask(bits: usize) -> u64 {
    match bits % WORD {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// Copy `len` bits starting at bit `start` of `src` into a fresh word vector.
fn extract_bits(src: &[u64], start: usize, len: usize) -> Vec<u64> {
    let mut out = vec![0u64; words_for(len)];
    let shift = start % WORD;
    let base = start / WORD;
    for (w, slot) in out.iter_mut().enumerate() {
        let lo = src.get(base + w).copied().unwrap_or(0);
        let hi = if shift == 0 { 0 } else { src.get(base + w + 1).copied().unwrap_or(0) << (WORD - shift) };
        *slot = (lo >> shift) | hi;
    }
    if let Some(last) = out.last_mut() {
        *last &= tail_mask(len);
    }
    out
}

/// A packed binary vector.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec { len, words: vec![0; words_for(len)] }
    }

    /// Build from a slice of bits; any nonzero entry counts as 1.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                v.set(i, true);
            }
        }
        v
    }

    pub(crate) fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        words.resize(words_for(len), 0);
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(len);
        }
        BitVec { len, words }
    }

    /// Vector with ones exactly at `support`.
    pub fn from_support(len: usize, support: impl IntoIterator<Item = usize>) -> Self {
        let mut v = BitVec::zeros(len);
        for i in support {
            v.set(i, true);
        }
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    /// `self += other` over GF(2).
    ///
    /// # Panics
    /// If the lengths differ.
    #[inline]
    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "xor of vectors with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVec) -> BitVec {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVec) -> bool {
        assert_eq!(self.len, other.len, "dot of vectors with different lengths");
        self.words.iter().zip(&other.words).fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones()) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Indices of set bits in increasing order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * WORD + b)
            })
        })
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    /// The sub-vector `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> BitVec {
        assert!(start + len <= self.len, "slice out of range");
        BitVec { len, words: extract_bits(&self.words, start, len) }
    }

    /// Concatenation `(self, tail)`.
    pub fn concat(&self, tail: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.len + tail.len);
        out.words[..self.words.len()].copy_from_slice(&self.words);
        for i in tail.iter_ones() {
            out.set(self.len + i, true);
        }
        out
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromIterator<bool> for BitVec {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let bits: Vec<u8> = iter.into_iter().map(u8::from).collect();
        BitVec::from_bits(&bits)
    }
}

/// A dense row-major binary matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    /// Zero matrix. Degenerate shapes with no rows or no columns are allowed
    /// because empty parity blocks occur at the extreme constraint degrees.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        BitMatrix { rows, cols, stride, data: vec![0; rows * stride] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BitMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = BitMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                if f(i, j) {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    /// Build from rows of bits. All rows must have the same length.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = BitMatrix::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, got: r.len() });
            }
            for (j, &b) in r.iter().enumerate() {
                if b != 0 {
                    m.set(i, j, true);
                }
            }
        }
        Ok(m)
    }

    /// Parse rows written as strings of `0`/`1`, e.g. `["1010", "0110"]`.
    pub fn from_strs(rows: &[&str]) -> Result<Self> {
        let bits: Vec<Vec<u8>> = rows
            .iter()
            .map(|r| {
                r.chars()
                    .filter(|c| !c.is_whitespace())
                    .map(|c| match c {
                        '0' => Ok(0),
                        '1' => Ok(1),
                        other => Err(Error::Parse(format!("unexpected character {other:?}"))),
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        BitMatrix::from_rows(&bits)
    }

    fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        let mut m = BitMatrix::zeros(rows, cols);
        let mask = tail_mask(cols);
        for i in 0..rows {
            let row = m.row_words_mut(i);
            for w in row.iter_mut() {
                *w = rng.random();
            }
            if let Some(last) = row.last_mut() {
                *last &= mask;
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of range");
        (self.data[i * self.stride + j / WORD] >> (j % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of range");
        let w = &mut self.data[i * self.stride + j / WORD];
        let mask = 1u64 << (j % WORD);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    fn row_words_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.stride..(i + 1) * self.stride]
    }

    pub fn row(&self, i: usize) -> BitVec {
        BitVec::from_words(self.cols, self.row_words(i).to_vec())
    }

    pub fn column(&self, j: usize) -> BitVec {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// `row[dst] += row[src]`, touching only words from `from_word` on.
    fn xor_row_into(&mut self, src: usize, dst: usize, from_word: usize) {
        debug_assert_ne!(src, dst);
        let s = self.stride;
        let (a, b) = if src < dst {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&lo[src * s..(src + 1) * s], &mut hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&hi[..s], &mut lo[dst * s..(dst + 1) * s])
        };
        for w in from_word..s {
            b[w] ^= a[w];
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.data.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    /// Matrix whose column `j` is column `perm.map()[j]` of `self`.
    pub fn permute_columns(&self, perm: &Permutation) -> Result<BitMatrix> {
        if perm.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: perm.len() });
        }
        let mut out = BitMatrix::zeros(self.rows, self.cols);
        for (j, &src) in perm.map().iter().enumerate() {
            for i in 0..self.rows {
                if self.get(i, src) {
                    out.set(i, j, true);
                }
            }
        }
        Ok(out)
    }

    /// The block of rows `[r0, r1)` and columns `[c0, c1)`.
    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> BitMatrix {
        assert!(r0 <= r1 && r1 <= self.rows && c0 <= c1 && c1 <= self.cols);
        let cols = c1 - c0;
        let mut out = BitMatrix::zeros(r1 - r0, cols);
        for i in r0..r1 {
            let words = extract_bits(self.row_words(i), c0, cols);
            out.row_words_mut(i - r0).copy_from_slice(&words);
        }
        out
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in BitVec::from_words(self.cols, self.row_words(i).to_vec()).iter_ones() {
                out.set(j, i, true);
            }
        }
        out
    }

    /// `v·selfᵀ`, i.e. the vector of row parities against `v`.
    pub fn mul_vec(&self, v: &BitVec) -> Result<BitVec> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: v.len() });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row_words(i).iter().zip(v.words()).fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones()) & 1 == 1
            })
            .collect())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// GF(2) rank of `m`. The input is not modified.
pub fn rank(m: &BitMatrix) -> usize {
    let mut a = m.clone();
    let mut r = 0;
    for c in 0..a.cols {
        if r == a.rows {
            break;
        }
        let Some(p) = (r..a.rows).find(|&i| a.get(i, c)) else {
            continue;
        };
        a.swap_rows(r, p);
        for i in 0..a.rows {
            if i != r && a.get(i, c) {
                a.xor_row_into(r, i, c / WORD);
            }
        }
        r += 1;
    }
    r
}

/// Row-reduce `m` so that its leftmost `left_width` columns become
/// `[I; 0]`. The pivot for column `c` is the lowest-index row at or below
/// `c` with a one in that column.
pub fn eliminate_block(m: &BitMatrix, left_width: usize) -> Result<BitMatrix> {
    if left_width > m.rows || left_width > m.cols {
        return Err(Error::RankDeficient { rank: m.rows.min(m.cols), needed: left_width });
    }
    let mut a = m.clone();
    for c in 0..left_width {
        let Some(p) = (c..a.rows).find(|&i| a.get(i, c)) else {
            return Err(Error::RankDeficient { rank: c, needed: left_width });
        };
        a.swap_rows(c, p);
        for i in 0..a.rows {
            if i != c && a.get(i, c) {
                a.xor_row_into(c, i, c / WORD);
            }
        }
    }
    Ok(a)
}

/// `v·mᵀ` over GF(2).
pub fn syndrome(m: &BitMatrix, v: &BitVec) -> Result<BitVec> {
    m.mul_vec(v)
}

/// A column permutation. Position `j` of a permuted vector holds entry
/// `map[j]` of the original (0-based indices).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { map: (0..n).collect() }
    }

    /// Validate that `map` is a bijection on `0..map.len()`.
    pub fn from_map(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &j in &map {
            if j >= n || seen[j] {
                return Err(Error::InvalidParameter(format!("permutation map is not a bijection on 0..{n}")));
            }
            seen[j] = true;
        }
        Ok(Permutation { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.map.len()];
        for (j, &src) in self.map.iter().enumerate() {
            inv[src] = j;
        }
        Permutation { map: inv }
    }

    /// `out[j] = v[map[j]]`.
    pub fn apply<T: Copy>(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.map.len(), "permutation length mismatch");
        self.map.iter().map(|&j| v[j]).collect()
    }

    pub fn apply_bits(&self, v: &BitVec) -> BitVec {
        assert_eq!(v.len(), self.map.len(), "permutation length mismatch");
        self.map.iter().map(|&j| v.get(j)).collect()
    }

    /// Inverse action: `out[map[j]] = v[j]`.
    pub fn unapply_bits(&self, v: &BitVec) -> BitVec {
        assert_eq!(v.len(), self.map.len(), "permutation length mismatch");
        BitVec::from_support(v.len(), v.iter_ones().map(|j| self.map[j]))
    }
}

/// A binary linear code given by a full-row-rank parity-check matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCode {
    n: usize,
    k: usize,
    h: BitMatrix,
}

impl LinearCode {
    pub fn new(h: BitMatrix) -> Result<Self> {
        let r = rank(&h);
        if r < h.rows() {
            return Err(Error::RankDeficient { rank: r, needed: h.rows() });
        }
        Ok(LinearCode { n: h.cols(), k: h.cols() - h.rows(), h })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn h(&self) -> &BitMatrix {
        &self.h
    }

    pub fn is_codeword(&self, v: &BitVec) -> bool {
        v.len() == self.n && self.h.mul_vec(v).map(|s| s.is_zero()).unwrap_or(false)
    }

    /// A `k×n` generator matrix derived from the reduced row-echelon form of H.
    pub fn generator_matrix(&self) -> BitMatrix {
        let mut a = self.h.clone();
        let mut pivots = Vec::with_capacity(a.rows);
        let mut r = 0;
        for c in 0..a.cols {
            if r == a.rows {
                break;
            }
            let Some(p) = (r..a.rows).find(|&i| a.get(i, c)) else {
                continue;
            };
            a.swap_rows(r, p);
            for i in 0..a.rows {
                if i != r && a.get(i, c) {
                    a.xor_row_into(r, i, c / WORD);
                }
            }
            pivots.push(c);
            r += 1;
        }
        let mut is_pivot = vec![false; self.n];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let free: Vec<usize> = (0..self.n).filter(|&j| !is_pivot[j]).collect();
        let mut g = BitMatrix::zeros(free.len(), self.n);
        for (row, &f) in free.iter().enumerate() {
            g.set(row, f, true);
            for (i, &p) in pivots.iter().enumerate() {
                if a.get(i, f) {
                    g.set(row, p, true);
                }
            }
        }
        g
    }
}

/// A code whose parity-check matrix has i.i.d. uniform entries, redrawn until
/// it has full row rank. Deterministic in `seed`.
///
/// # Panics
/// Unless `0 < k < n`.
pub fn random_code(n: usize, k: usize, seed: u64) -> LinearCode {
    assert!(0 < k && k < n, "random_code needs 0 < k < n, got n={n}, k={k}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let h = BitMatrix::random(n - k, n, &mut rng);
        if rank(&h) == n - k {
            return LinearCode { n, k, h };
        }
    }
}

/// Parse a parity-check matrix in alist format.
///
/// Zero entries in the index lists are treated as padding. The row lists
/// must describe the same matrix as the column lists.
pub fn load_alist(text: &str) -> Result<LinearCode> {
    let mut tokens = text
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("not a nonnegative integer: {t:?}"))));
    let mut next = |what: &str| -> Result<usize> {
        tokens.next().unwrap_or_else(|| Err(Error::Parse(format!("unexpected end of input reading {what}"))))
    };

    let n = next("n")?;
    let m = next("m")?;
    if n == 0 || m == 0 || m >= n {
        return Err(Error::Parse(format!("invalid dimensions n={n}, m={m}")));
    }
    let _max_col = next("max column degree")?;
    let _max_row = next("max row degree")?;
    let col_deg = (0..n).map(|_| next("column degree")).collect::<Result<Vec<_>>>()?;
    let row_deg = (0..m).map(|_| next("row degree")).collect::<Result<Vec<_>>>()?;

    let mut next_index = |what: &str, bound: usize| -> Result<usize> {
        loop {
            let v = next(what)?;
            if v == 0 {
                continue;
            }
            if v > bound {
                return Err(Error::Parse(format!("{what} {v} exceeds {bound}")));
            }
            return Ok(v - 1);
        }
    };

    let mut h = BitMatrix::zeros(m, n);
    for (j, &d) in col_deg.iter().enumerate() {
        for _ in 0..d {
            let i = next_index("row index", m)?;
            if h.get(i, j) {
                return Err(Error::Parse(format!("duplicate entry ({}, {})", i + 1, j + 1)));
            }
            h.set(i, j, true);
        }
    }
    let mut from_rows = BitMatrix::zeros(m, n);
    for (i, &d) in row_deg.iter().enumerate() {
        for _ in 0..d {
            let j = next_index("column index", n)?;
            from_rows.set(i, j, true);
        }
    }
    if from_rows != h {
        return Err(Error::Parse("row lists disagree with column lists".into()));
    }
    LinearCode::new(h)
}

/// Serialize a code's parity-check matrix in alist format, zero-padded to
/// the maximum degrees.
pub fn save_alist(code: &LinearCode) -> String {
    let h = code.h();
    let (m, n) = (h.rows(), h.cols());
    let cols: Vec<Vec<usize>> = (0..n).map(|j| (0..m).filter(|&i| h.get(i, j)).collect()).collect();
    let rows: Vec<Vec<usize>> = (0..m).map(|i| h.row(i).iter_ones().collect()).collect();
    let max_col = cols.iter().map(Vec::len).max().unwrap_or(0);
    let max_row = rows.iter().map(Vec::len).max().unwrap_or(0);

    let join = |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let padded = |list: &[usize], width: usize| {
        let mut it = list.iter().map(|&x| x + 1).chain(std::iter::repeat(0)).take(width);
        join(&mut it)
    };

    let mut out = format!("{n} {m}\n{max_col} {max_row}\n");
    out += &join(&mut cols.iter().map(Vec::len));
    out.push('\n');
    out += &join(&mut rows.iter().map(Vec::len));
    out.push('\n');
    for c in &cols {
        out += &padded(c, max_col);
        out.push('\n');
    }
    for r in &rows {
        out += &padded(r, max_row);
        out.push('\n');
    }
    out
}
