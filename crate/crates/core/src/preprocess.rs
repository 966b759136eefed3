//! Per-frame decoding context.
//!
//! Positions are reordered by increasing reliability, the parity-check
//! matrix is row-reduced to `[I P1; 0 P2]` with an identity of order
//! `n-k-δ`, and the hard decision is split into a left (least reliable) and
//! a right (most reliable) part. Any right-part pattern `e_R` with
//! `e_R·P2ᵀ = s2` then determines a unique left part `e_L = s1 + e_R·P1ᵀ`
//! and hence a codeword.

use crate::channel::ChannelFrame;
use crate::error::{Error, Result};
use crate::gf2::{eliminate_block, BitMatrix, BitVec, LinearCode, Permutation};

/// Soft weight `Σ e_i·|r_i|`, summed in index order.
pub fn soft_weight(e: &BitVec, r_abs: &[f64]) -> Result<f64> {
    if e.len() != r_abs.len() {
        return Err(Error::DimensionMismatch { expected: r_abs.len(), got: e.len() });
    }
    Ok(e.iter_ones().map(|i| r_abs[i]).sum())
}

/// Incrementally maintained basis of column vectors in echelon form.
struct ColumnBasis {
    vectors: Vec<(usize, BitVec)>,
}

impl ColumnBasis {
    fn new() -> Self {
        ColumnBasis { vectors: Vec::new() }
    }

    /// Insert `v` if it is independent of the basis; report whether it was.
    fn insert(&mut self, v: &BitVec) -> bool {
        let mut v = v.clone();
        for (pivot, b) in &self.vectors {
            if v.get(*pivot) {
                v.xor_assign(b);
            }
        }
        let lead = v.iter_ones().next();
        match lead {
            Some(p) => {
                self.vectors.push((p, v));
                true
            }
            None => false,
        }
    }
}

/// Reliability-sorting permutation with rank repair.
///
/// Starts from the stable ascending sort of `r_abs`. For each of the first
/// `n-k-δ` positions in turn, while the columns placed so far are dependent,
/// the column at that position is swapped with the next one from position
/// `n-k-δ` onward.
pub fn get_permutation(h: &BitMatrix, r_abs: &[f64], delta: usize) -> Result<Permutation> {
    let n = h.cols();
    let rows = h.rows();
    if r_abs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: r_abs.len() });
    }
    if delta > rows {
        return Err(Error::InvalidParameter(format!("delta {delta} exceeds n-k = {rows}")));
    }
    let left = rows - delta;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| r_abs[a].total_cmp(&r_abs[b]));
    if left == 0 {
        return Permutation::from_map(order);
    }

    let columns = h.transpose();
    let mut basis = ColumnBasis::new();
    let mut next_swap = left;
    for i in 0..left {
        while !basis.insert(&columns.row(order[i])) {
            if next_swap >= n {
                return Err(Error::RankDeficient { rank: basis.vectors.len(), needed: left });
            }
            order.swap(i, next_swap);
            next_swap += 1;
        }
    }
    Permutation::from_map(order)
}

/// The permuted and eliminated decoding context of one frame.
#[derive(Clone, Debug)]
pub struct PreprocessedInstance {
    pub pi: Permutation,
    pub p1: BitMatrix,
    pub p2: BitMatrix,
    pub r_perm: Vec<f64>,
    pub z_perm: BitVec,
    pub s1: BitVec,
    pub s2: BitVec,
    pub left_width: usize,
    pub right_width: usize,
    z: BitVec,
    r_abs_perm: Vec<f64>,
    p1_columns: Vec<BitVec>,
}

impl PreprocessedInstance {
    pub fn n(&self) -> usize {
        self.left_width + self.right_width
    }

    /// Permuted reliabilities of the left part.
    pub fn r_abs_left(&self) -> &[f64] {
        &self.r_abs_perm[..self.left_width]
    }

    /// Permuted reliabilities of the right part.
    pub fn r_abs_right(&self) -> &[f64] {
        &self.r_abs_perm[self.left_width..]
    }

    fn check_right(&self, e_r: &BitVec) -> Result<()> {
        if e_r.len() != self.right_width {
            return Err(Error::DimensionMismatch { expected: self.right_width, got: e_r.len() });
        }
        Ok(())
    }

    /// `e_L = s1 + e_R·P1ᵀ`.
    pub fn left_part(&self, e_r: &BitVec) -> Result<BitVec> {
        self.check_right(e_r)?;
        let mut e_l = self.s1.clone();
        for j in e_r.iter_ones() {
            e_l.xor_assign(&self.p1_columns[j]);
        }
        Ok(e_l)
    }

    /// Soft weight of the left part implied by `e_r`.
    pub fn left_weight(&self, e_r: &BitVec) -> Result<f64> {
        let e_l = self.left_part(e_r)?;
        soft_weight(&e_l, self.r_abs_left())
    }

    /// Split a vector in channel order into its permuted (left, right) parts.
    pub fn split(&self, v: &BitVec) -> Result<(BitVec, BitVec)> {
        if v.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: v.len() });
        }
        let p = self.pi.apply_bits(v);
        Ok((p.slice(0, self.left_width), p.slice(self.left_width, self.right_width)))
    }

    /// Full error pattern and codeword in channel order for a right-part
    /// pattern. The codeword is valid whenever `e_r·P2ᵀ = s2`.
    pub fn reconstruct(&self, e_r: &BitVec) -> Result<(BitVec, BitVec)> {
        let e_l = self.left_part(e_r)?;
        let tep = self.pi.unapply_bits(&e_l.concat(e_r));
        let codeword = self.z.xor(&tep);
        Ok((tep, codeword))
    }
}

/// Build the decoding context for `frame` with constraint degree `delta`.
pub fn preprocess(code: &LinearCode, frame: &ChannelFrame, delta: usize) -> Result<PreprocessedInstance> {
    let (n, k) = (code.n(), code.k());
    if frame.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: frame.n() });
    }
    let r_abs = frame.r_abs();
    let pi = get_permutation(code.h(), &r_abs, delta)?;
    let left = n - k - delta;
    let right = k + delta;

    let h_tilde = eliminate_block(&code.h().permute_columns(&pi)?, left)?;
    let p1 = h_tilde.submatrix(0, left, left, n);
    let p2 = h_tilde.submatrix(left, n - k, left, n);

    let r_perm = pi.apply(&frame.r);
    let r_abs_perm = pi.apply(&r_abs);
    let z_perm = pi.apply_bits(&frame.z);
    let z_l = z_perm.slice(0, left);
    let z_r = z_perm.slice(left, right);
    let s1 = z_l.xor(&p1.mul_vec(&z_r)?);
    let s2 = p2.mul_vec(&z_r)?;
    let p1_columns = (0..right).map(|j| p1.column(j)).collect();

    Ok(PreprocessedInstance {
        pi,
        p1,
        p2,
        r_perm,
        z_perm,
        s1,
        s2,
        left_width: left,
        right_width: right,
        z: frame.z.clone(),
        r_abs_perm,
        p1_columns,
    })
}

/// Free-function form of [`PreprocessedInstance::reconstruct`].
pub fn reconstruct(inst: &PreprocessedInstance, e_r: &BitVec) -> Result<(BitVec, BitVec)> {
    inst.reconstruct(e_r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::{rank, syndrome};

    fn hamming() -> LinearCode {
        LinearCode::new(BitMatrix::from_strs(&["1010101", "0110011", "0001111"]).unwrap()).unwrap()
    }

    fn example_frame() -> ChannelFrame {
        let y = vec![-1.0, 1.5, 2.0, -3.0, 3.5, 5.0, 7.0];
        ChannelFrame::from_observation(BitVec::zeros(7), y, 1.0)
    }

    #[test]
    fn soft_weight_examples() {
        let r = [2.0, 3.0, 4.0, 6.0, 7.0, 10.0, 14.0];
        assert_eq!(soft_weight(&BitVec::zeros(7), &r).unwrap(), 0.0);
        assert_eq!(soft_weight(&BitVec::from_bits(&[0, 0, 0, 0, 1, 0, 0]), &r).unwrap(), 7.0);
        assert!(soft_weight(&BitVec::zeros(6), &r).is_err());
    }

    #[test]
    fn permutation_without_left_block_is_plain_sort() {
        let h = hamming();
        let r = [5.0, 1.0, 3.0, 3.0, 0.5, 9.0, 2.0];
        let p = get_permutation(h.h(), &r, 3).unwrap();
        assert_eq!(p.map(), &[4, 1, 6, 2, 3, 0, 5]);
    }

    #[test]
    fn duplicate_column_is_swapped_out() {
        // Columns 0 and 1 are identical and least reliable.
        let h = BitMatrix::from_strs(&["1100100", "1101010", "0010011"]).unwrap();
        let r = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7];
        let p = get_permutation(&h, &r, 1).unwrap();
        let left = h.permute_columns(&p).unwrap().submatrix(0, 3, 0, 2);
        assert_eq!(rank(&left), 2);
        assert_eq!(&p.map()[..3], &[0, 2, 1]);
    }

    #[test]
    fn sorted_systematic_matrix_is_unchanged() {
        let h = BitMatrix::from_strs(&["1001101", "0101011", "0010111"]).unwrap();
        let r = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7];
        let p = get_permutation(&h, &r, 0).unwrap();
        assert_eq!(p, Permutation::identity(7));
    }

    #[test]
    fn hamming_full_constraint_degree() {
        let code = hamming();
        let frame = example_frame();
        let inst = preprocess(&code, &frame, 3).unwrap();
        assert_eq!(inst.left_width, 0);
        assert_eq!(inst.p2, code.h().permute_columns(&inst.pi).unwrap());
        assert_eq!(inst.s2, syndrome(&inst.p2, &inst.z_perm).unwrap());
    }

    #[test]
    fn noiseless_frame_has_zero_syndromes() {
        let code = crate::gf2::random_code(24, 12, 3);
        let g = code.generator_matrix();
        let c = g.row(0).xor(&g.row(3));
        let frame = crate::channel::transmit(&c, 1e-12, 1);
        let inst = preprocess(&code, &frame, 4).unwrap();
        assert!(inst.s1.is_zero() && inst.s2.is_zero());
        let (_, e_r) = inst.split(&frame.true_error()).unwrap();
        assert_eq!(inst.reconstruct(&e_r).unwrap().1, c);
    }

    #[test]
    fn z_right_gives_zero_codeword() {
        let code = crate::gf2::random_code(20, 9, 8);
        let frame = crate::channel::transmit(&BitVec::zeros(20), 0.9, 12);
        let inst = preprocess(&code, &frame, 3).unwrap();
        let z_r = inst.z_perm.slice(inst.left_width, inst.right_width);
        let (tep, v) = inst.reconstruct(&z_r).unwrap();
        assert_eq!(tep, frame.z);
        assert!(v.is_zero());
    }
}
