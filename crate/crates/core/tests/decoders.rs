mod common;

use common::{
    code, exhaustive_pms, path_metric, random_bits, random_llrs, rec_decode, rec_encode,
    reference_sc,
};
use polarflip::channel::{ebn0_to_sigma2, frame_rng, transmit_into};
use polarflip::flip::{flip_decode, FlipMetric, DEFAULT_ALPHA};
use polarflip::{sc_decode, scl_decode, CrcSpec, DecodingConstraints, PolarCode, SclDecoder};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn encoder_matches_recursive_generator() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [1, 2, 8, 64, 128] {
        let c = code(n, n, 0);
        for _ in 0..20 {
            let u = random_bits(&mut rng, n);
            assert_eq!(c.encode(&u).unwrap(), rec_encode(&u));
        }
    }
}

#[test]
fn sc_matches_recursive_reference_on_p8_5() {
    let c = code(8, 5, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..2000 {
        let llr = random_llrs(&mut rng, 8, 6.0);
        let out = sc_decode(&c, &llr).unwrap();
        let (u, leaf) = reference_sc(&c, &llr);
        assert_eq!(out.bits, u);
        assert_eq!(out.decision_llrs, leaf);
    }
}

#[test]
fn sc_matches_recursive_reference_on_p128() {
    let c = PolarCode::default_128(64, 24).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..300 {
        let llr = random_llrs(&mut rng, 128, 4.0);
        let (u, leaf) = reference_sc(&c, &llr);
        let out = sc_decode(&c, &llr).unwrap();
        assert_eq!(out.bits, u);
        assert_eq!(out.decision_llrs, leaf);
    }
}

#[test]
fn noiseless_codewords_are_inverted() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (n, k) in [(8, 5), (32, 16), (128, 88)] {
        let c = code(n, k, 0);
        for _ in 0..50 {
            let u = c.embed(&random_bits(&mut rng, k)).unwrap();
            let llr: Vec<f64> = c
                .encode(&u)
                .unwrap()
                .iter()
                .map(|&b| if b == 0 { 5.0 } else { -5.0 })
                .collect();
            assert_eq!(sc_decode(&c, &llr).unwrap().bits, u);
            let out = scl_decode(&c, &llr, 4, None, None).unwrap();
            assert_eq!(out.best().bits, u);
            assert_eq!(out.best().pm, 0.0);
        }
    }
}

#[test]
fn full_list_metrics_match_enumeration() {
    let c = code(8, 4, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let llr = random_llrs(&mut rng, 8, 5.0);
        let out = scl_decode(&c, &llr, 16, None, None).unwrap();
        assert_eq!(out.paths.len(), 16);
        let mut expected: Vec<f64> = exhaustive_pms(&c, &llr)
            .into_iter()
            .map(|(_, pm)| pm)
            .collect();
        expected.sort_by(f64::total_cmp);
        for (p, e) in out.paths.iter().zip(&expected) {
            assert!((p.pm - e).abs() < 1e-9, "{} vs {e}", p.pm);
            assert!((p.pm - path_metric(&c, &llr, &p.bits)).abs() < 1e-9);
        }
    }
}

#[test]
fn list_of_one_is_sc() {
    let c = PolarCode::default_128(64, 24).unwrap();
    let crc = CrcSpec::crc24c();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut dec = SclDecoder::new(&c, 1).unwrap();
    for _ in 0..300 {
        let llr = random_llrs(&mut rng, 128, 3.0);
        let sc = sc_decode(&c, &llr).unwrap();
        let out = dec.decode(&llr, Some(&crc), None).unwrap();
        assert_eq!(out.selected().bits, sc.bits);
        assert_eq!(out.best().decision_llrs, sc.decision_llrs);
        assert!((out.best().pm - path_metric(&c, &llr, &sc.bits)).abs() < 1e-9);
    }
}

#[test]
fn large_list_finds_minimum_metric() {
    // With M = 2^(K+c) nothing is pruned, so the best path is the global minimum.
    let c = code(16, 5, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let llr = random_llrs(&mut rng, 16, 4.0);
        let min = exhaustive_pms(&c, &llr)
            .into_iter()
            .map(|(_, pm)| pm)
            .fold(f64::INFINITY, f64::min);
        let best = scl_decode(&c, &llr, 32, None, None).unwrap().best().pm;
        assert!((best - min).abs() < 1e-9);
        for m in [1, 2, 4, 8, 16] {
            assert!(scl_decode(&c, &llr, m, None, None).unwrap().best().pm >= min - 1e-9);
        }
    }
}

#[test]
fn crc_selection_prefers_passing_path() {
    let c = PolarCode::default_128(64, 24).unwrap();
    let crc = CrcSpec::crc24c();
    let sigma2 = ebn0_to_sigma2(2.0, c.rate()).unwrap();
    let mut llr = vec![0.0; 128];
    let mut seen_rescue = false;
    for f in 0..400 {
        let mut rng = frame_rng(9, 0, f);
        let u = c.embed(&crc.attach(&random_bits(&mut rng, 64))).unwrap();
        transmit_into(&c.encode(&u).unwrap(), sigma2, &mut rng, &mut llr);
        let out = scl_decode(&c, &llr, 8, Some(&crc), None).unwrap();
        let passing: Vec<usize> = (0..out.paths.len())
            .filter(|&p| crc.check(&c.extract(&out.paths[p].bits)))
            .collect();
        assert_eq!(out.crc_pass, !passing.is_empty());
        if out.crc_pass {
            assert_eq!(out.selected, passing[0]);
            seen_rescue |= passing[0] > 0;
        } else {
            assert_eq!(out.selected, 0);
        }
    }
    assert!(seen_rescue);
}

#[test]
fn constrained_single_path_follows_forced_bits() {
    let c = code(32, 16, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..200 {
        let llr = random_llrs(&mut rng, 32, 3.0);
        let first = sc_decode(&c, &llr).unwrap().bits;
        let target = c.info_set()[rand::Rng::gen_range(&mut rng, 0..16)];
        let cons = DecodingConstraints::flip_at(&c, &first, target).unwrap();
        let out = scl_decode(&c, &llr, 1, None, Some(&cons)).unwrap();

        let mut u = vec![0; 32];
        let mut leaf = vec![0.0; 32];
        let mut decide = |i: usize, l: f64| {
            if c.is_frozen(i) {
                0
            } else if i < target {
                first[i]
            } else if i == target {
                1 - first[i]
            } else {
                u8::from(l < 0.0)
            }
        };
        rec_decode(&llr, 0, &mut decide, &mut u, &mut leaf);
        assert_eq!(out.best().bits, u);
        assert!((out.best().pm - path_metric(&c, &llr, &u)).abs() < 1e-9);
    }
}

#[test]
fn constrained_list_keeps_prefix_on_every_path() {
    let c = PolarCode::default_128(64, 24).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let llr = random_llrs(&mut rng, 128, 2.0);
        let first = scl_decode(&c, &llr, 4, None, None)
            .unwrap()
            .best()
            .bits
            .clone();
        let target = c.info_set()[30];
        let cons = DecodingConstraints::flip_at(&c, &first, target).unwrap();
        let out = scl_decode(&c, &llr, 4, None, Some(&cons)).unwrap();
        assert_eq!(out.paths.len(), 4);
        for p in &out.paths {
            assert_eq!(&p.bits[..target], &first[..target]);
            assert_eq!(p.bits[target], 1 - first[target]);
        }
    }
}

#[test]
fn flip_decoding_rescues_frames() {
    let c = PolarCode::default_128(64, 24).unwrap();
    let crc = CrcSpec::crc24c();
    let sigma2 = ebn0_to_sigma2(3.0, c.rate()).unwrap();
    let metric = FlipMetric::Dscf {
        alpha: DEFAULT_ALPHA,
    };
    let mut dec = SclDecoder::new(&c, 1).unwrap();
    let mut llr = vec![0.0; 128];
    let (mut plain_err, mut flip_err) = (0, 0);
    for f in 0..1500 {
        let mut rng = frame_rng(12, 0, f);
        let payload = random_bits(&mut rng, 64);
        let u = c.embed(&crc.attach(&payload)).unwrap();
        transmit_into(&c.encode(&u).unwrap(), sigma2, &mut rng, &mut llr);
        let first = dec.decode(&llr, Some(&crc), None).unwrap();
        let out = flip_decode(&mut dec, &crc, &llr, &metric, 8).unwrap();
        assert!(out.attempts_used <= 8);
        assert_eq!(out.success, crc.check(&c.extract(&out.bits)));
        if first.crc_pass {
            assert_eq!(out.attempts_used, 0);
            assert_eq!(out.bits, first.selected().bits);
        } else {
            assert!(out.attempts_used > 0);
        }
        plain_err += usize::from(c.extract(&first.selected().bits)[..64] != payload[..]);
        flip_err += usize::from(c.extract(&out.bits)[..64] != payload[..]);
    }
    assert!(plain_err > 0);
    assert!(flip_err < plain_err, "{flip_err} vs {plain_err}");
}

#[test]
fn flip_at_first_error_corrects_sc() {
    // A frame whose only SC error is a single information bit flip: forcing
    // the true value there recovers the codeword.
    let c = PolarCode::default_128(64, 24).unwrap();
    let crc = CrcSpec::crc24c();
    let sigma2 = ebn0_to_sigma2(3.0, c.rate()).unwrap();
    let mut dec = SclDecoder::new(&c, 1).unwrap();
    let mut llr = vec![0.0; 128];
    let mut checked = 0;
    for f in 0..3000 {
        let mut rng = frame_rng(13, 0, f);
        let u = c.embed(&crc.attach(&random_bits(&mut rng, 64))).unwrap();
        transmit_into(&c.encode(&u).unwrap(), sigma2, &mut rng, &mut llr);
        let first = dec.decode(&llr, Some(&crc), None).unwrap().best().clone();
        let Some(&wrong) = c.info_set().iter().find(|&&i| first.bits[i] != u[i]) else {
            continue;
        };
        let cons = DecodingConstraints::flip_at(&c, &first.bits, wrong).unwrap();
        let retry = dec.decode(&llr, Some(&crc), Some(&cons)).unwrap();
        assert_eq!(retry.best().bits[wrong], u[wrong]);
        if retry.best().bits == u {
            checked += 1;
            assert!(retry.crc_pass);
        }
    }
    assert!(checked > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sc_reference_agreement(llr in proptest::collection::vec(-8.0f64..8.0, 32)) {
        let c = code(32, 12, 0);
        let (u, leaf) = reference_sc(&c, &llr);
        let out = sc_decode(&c, &llr).unwrap();
        prop_assert_eq!(out.bits, u);
        prop_assert_eq!(out.decision_llrs, leaf);
    }

    #[test]
    fn paths_sorted_and_metrics_consistent(llr in proptest::collection::vec(-6.0f64..6.0, 16), m in 1usize..9) {
        let c = code(16, 8, 0);
        let out = scl_decode(&c, &llr, m, None, None).unwrap();
        prop_assert!(out.paths.len() <= m);
        prop_assert!(out.paths.windows(2).all(|w| w[0].pm <= w[1].pm));
        for p in &out.paths {
            prop_assert!((p.pm - path_metric(&c, &llr, &p.bits)).abs() < 1e-9);
            prop_assert!(c.frozen_set().iter().all(|&i| p.bits[i] == 0));
        }
    }
}
