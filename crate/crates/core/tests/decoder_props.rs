//! Decoder behaviour against exhaustive maximum-likelihood decoding.

mod common;

use common::*;
use lcosd::channel::{sigma_from_ebn0, transmit_with, ChannelFrame};
use lcosd::decoder::{
    decode_instance, delta_gamma, lc_osd, mld_error_indicator, tau_dai, DecoderConfig, Lga, Stopping,
};
use lcosd::gf2::random_code;
use lcosd::preprocess::{preprocess, soft_weight};
use lcosd::{BitVec, LinearCode};
use rand::Rng;

fn random_frames(code: &LinearCode, ebn0: f64, count: usize, seed: u64) -> Vec<ChannelFrame> {
    let words = code.generator_matrix();
    let mut g = rng(seed);
    let sigma = sigma_from_ebn0(ebn0, code.rate());
    (0..count)
        .map(|_| {
            let mut c = BitVec::zeros(code.n());
            for i in 0..words.rows() {
                if g.random::<bool>() {
                    c.xor_assign(&words.row(i));
                }
            }
            transmit_with(&c, sigma, &mut g)
        })
        .collect()
}

#[test]
fn full_list_decoding_is_maximum_likelihood() {
    let code = random_code(14, 7, 3);
    let words = codewords(&code);
    for delta in [0, 3, 7] {
        let config = DecoderConfig::new(delta, 1 << (7 + delta));
        for frame in random_frames(&code, 2.0, 150, delta as u64) {
            let r = lc_osd(&code, &frame, &config).unwrap();
            assert!(code.is_codeword(&r.codeword));
            assert!((r.gamma_opt - ml_weight(&words, &frame)).abs() < 1e-9);
        }
    }
}

#[test]
fn slva_and_tfpt_decoders_agree() {
    let code = random_code(40, 20, 8);
    let base = DecoderConfig::new(6, 200);
    for frame in random_frames(&code, 1.5, 80, 4) {
        let a = lc_osd(&code, &frame, &base).unwrap();
        let b = lc_osd(&code, &frame, &base.with_lga(Lga::Tfpt)).unwrap();
        assert_eq!(a.gamma_opt, b.gamma_opt);
        assert_eq!(a.searches, b.searches);
    }
}

#[test]
fn traces_are_ordered_and_weight_shrinks_with_list_size() {
    let code = random_code(32, 16, 1);
    for frame in random_frames(&code, 1.0, 60, 2) {
        let mut last = f64::INFINITY;
        for l_max in [1, 4, 16, 64, 256] {
            let r = lc_osd(&code, &frame, &DecoderConfig::new(4, l_max).with_trace(true)).unwrap();
            assert!(r.gamma_opt <= last);
            last = r.gamma_opt;
            let t = r.trace.unwrap();
            assert!(t.windows(2).all(|w| w[0].gamma_right <= w[1].gamma_right));
            assert!(t.windows(2).all(|w| w[0].gamma_opt >= w[1].gamma_opt));
        }
    }
}

#[test]
fn ideal_stopping_never_loses_to_mld() {
    let code = random_code(16, 8, 5);
    let words = codewords(&code);
    for delta in [2, 5, 8] {
        let config = DecoderConfig::new(delta, 1 << (8 + delta)).with_stopping(Stopping::IdealOracle);
        for frame in random_frames(&code, 1.0, 300, 10 + delta as u64) {
            let sent_weight = soft_weight(&frame.true_error(), &frame.r_abs()).unwrap();
            let mld_correct = sent_weight <= ml_weight(&words, &frame) + 1e-12;
            let r = lc_osd(&code, &frame, &config).unwrap();
            if mld_correct {
                assert!(r.gamma_opt <= sent_weight + 1e-9, "{} > {}", r.gamma_opt, sent_weight);
            }
        }
    }
}

#[test]
fn tolerance_is_positive_and_bounds_safe_thresholds() {
    let code = random_code(16, 8, 6);
    let words = codewords(&code);
    let delta = 4;
    let full = DecoderConfig::new(delta, 1 << 12).with_trace(true);
    let mut checked = 0;
    for frame in random_frames(&code, 1.5, 400, 77) {
        let inst = preprocess(&code, &frame, delta).unwrap();
        let r = decode_instance(&inst, &frame, &full).unwrap();
        let ml = ml_weight(&words, &frame);
        let trace = r.trace.as_ref().unwrap();
        let j_star = 1 + trace.iter().position(|t| (t.gamma_full - ml).abs() < 1e-12).expect("ML in list");
        let dg = delta_gamma(&r, j_star).unwrap();
        assert!(dg > 0.0);

        let (e_l, _) = inst.split(&frame.true_error()).unwrap();
        let true_left = soft_weight(&e_l, inst.r_abs_left()).unwrap();
        let sent_is_ml = soft_weight(&frame.true_error(), &frame.r_abs()).unwrap() <= ml;
        if sent_is_ml && tau_dai(inst.r_abs_left()) <= true_left + dg {
            checked += 1;
            let dai = decode_instance(&inst, &frame, &DecoderConfig::new(delta, 1 << 12).with_stopping(Stopping::Dai));
            assert_eq!(dai.unwrap().codeword, frame.codeword);
        }
    }
    assert!(checked > 50, "only {checked} frames met the threshold condition");
}

#[test]
fn mld_indicator_lower_bounds_decoder_errors() {
    let code = random_code(24, 12, 2);
    let config = DecoderConfig::new(4, 8);
    for frame in random_frames(&code, 1.0, 200, 3) {
        let r = lc_osd(&code, &frame, &config).unwrap();
        let mld = mld_error_indicator(&code, 4, 8, &frame.codeword, &frame).unwrap();
        if mld {
            assert_ne!(r.codeword, frame.codeword);
        }
    }
    let clean = transmit_with(&BitVec::zeros(24), 1e-9, &mut rng(1));
    assert!(!mld_error_indicator(&code, 4, 8, &clean.codeword, &clean).unwrap());
    assert!(mld_error_indicator(&code, 4, 8, &BitVec::from_support(24, [0]), &clean).is_err());
}
