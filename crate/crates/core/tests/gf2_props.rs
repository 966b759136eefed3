//! Algebraic invariants of the GF(2) layer.

mod common;

use common::*;
use lcosd::gf2::{eliminate_block, load_alist, random_code, rank, save_alist, syndrome};
use lcosd::{BitMatrix, Permutation};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn full_rank_matrix(seed: u64, rows: usize, cols: usize) -> BitMatrix {
    let mut g = rng(seed);
    loop {
        let m = random_matrix(&mut g, rows, cols);
        if rank(&m) == rows {
            return m;
        }
    }
}

#[test]
fn elimination_preserves_the_code_exhaustively() {
    let mut done = 0;
    for seed in 0..40 {
        let n = 12;
        let m = full_rank_matrix(seed, 5, n);
        let w = rank(&m.submatrix(0, 5, 0, 4));
        if w < 4 {
            continue;
        }
        done += 1;
        let e = eliminate_block(&m, 4).unwrap();
        for mask in 0u64..1 << n {
            let v = from_mask(mask, n);
            assert_eq!(syndrome(&m, &v).unwrap().is_zero(), syndrome(&e, &v).unwrap().is_zero());
        }
    }
    assert!(done >= 5);
}

#[test]
fn generator_rows_are_codewords() {
    for seed in 0..5 {
        let code = random_code(40, 17, seed);
        let g = code.generator_matrix();
        assert_eq!(g.rows(), 17);
        assert_eq!(rank(&g), 17);
        for i in 0..g.rows() {
            assert!(code.is_codeword(&g.row(i)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn elimination_keeps_rank_and_shape(seed in 0u64..1000, rows in 1usize..12, extra in 1usize..40, w in 0usize..12) {
        let cols = rows + extra;
        let m = full_rank_matrix(seed, rows, cols);
        let w = w.min(rows);
        let mut g = rng(seed ^ 0xabc);
        let mut map: Vec<usize> = (0..cols).collect();
        map.shuffle(&mut g);
        let m = m.permute_columns(&Permutation::from_map(map).unwrap()).unwrap();
        match eliminate_block(&m, w) {
            Ok(e) => {
                prop_assert_eq!(rank(&e), rank(&m));
                prop_assert_eq!(e.submatrix(0, rows, 0, w), {
                    let mut ident = BitMatrix::zeros(rows, w);
                    for i in 0..w { ident.set(i, i, true); }
                    ident
                });
                for _ in 0..20 {
                    let v = random_bits(&mut g, cols);
                    prop_assert_eq!(syndrome(&m, &v).unwrap().is_zero(), syndrome(&e, &v).unwrap().is_zero());
                }
            }
            Err(_) => prop_assert!(rank(&m.submatrix(0, rows, 0, w)) < w),
        }
    }

    #[test]
    fn permutation_round_trips(seed in 0u64..1000, n in 1usize..90) {
        let mut g = rng(seed);
        let mut map: Vec<usize> = (0..n).collect();
        map.shuffle(&mut g);
        let p = Permutation::from_map(map).unwrap();
        let v = random_bits(&mut g, n);
        prop_assert_eq!(p.unapply_bits(&p.apply_bits(&v)), v.clone());
        prop_assert_eq!(p.inverse().apply_bits(&p.apply_bits(&v)), v);
        let m = random_matrix(&mut g, 3, n);
        prop_assert_eq!(m.permute_columns(&p).unwrap().permute_columns(&p.inverse()).unwrap(), m);
    }

    #[test]
    fn alist_round_trips(seed in 0u64..1000, n in 3usize..40, k in 1usize..20) {
        prop_assume!(k < n);
        let code = random_code(n, k, seed);
        prop_assert_eq!(load_alist(&save_alist(&code)).unwrap(), code);
    }
}
