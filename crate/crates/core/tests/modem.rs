use chanlab::modem::{
    decode_frame, demodulate, despread, modulate, spread, Frame, PnTable, CHIPS_PER_SYMBOL,
    NUM_SYMBOLS, PSDU_CHIPS, PSDU_LEN, SYNC_CHIPS,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn table() -> &'static PnTable {
    PnTable::ieee_802_15_4()
}

// Hamming distance computed here, independently of the library helper.
fn oracle_dmin() -> usize {
    let seqs = table().sequences();
    let mut best = usize::MAX;
    for a in 0..NUM_SYMBOLS {
        for b in 0..NUM_SYMBOLS {
            if a != b {
                let d = (0..CHIPS_PER_SYMBOL).filter(|&i| seqs[a][i] != seqs[b][i]).count();
                best = best.min(d);
            }
        }
    }
    best
}

#[test]
fn dmin_matches_oracle_and_allows_weight_two() {
    let d = oracle_dmin();
    assert_eq!(table().min_distance(), d);
    // weight w is always corrected when 2w < d
    assert!(2 * 2 < d, "d_min {d} does not cover weight-2 patterns");
}

#[test]
fn every_weight_two_pattern_despreads_correctly() {
    let start = std::time::Instant::now();
    let mut patterns: Vec<Vec<usize>> = vec![vec![]];
    for i in 0..CHIPS_PER_SYMBOL {
        patterns.push(vec![i]);
        for j in i + 1..CHIPS_PER_SYMBOL {
            patterns.push(vec![i, j]);
        }
    }
    assert_eq!(patterns.len(), 1 + 32 + 496);
    for s in 0..NUM_SYMBOLS {
        for flips in &patterns {
            let mut chips = *table().sequence(s);
            for &i in flips {
                chips[i] ^= 1;
            }
            let got = despread(&chips, table()).unwrap();
            assert_eq!(got.symbol as usize, s, "symbol {s} flips {flips:?}");
        }
    }
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn sampled_patterns_below_half_dmin_despread_correctly() {
    let d = oracle_dmin();
    let max_w = (d - 1) / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for w in 3..=max_w {
        for _ in 0..4000 {
            let s = rng.random_range(0..NUM_SYMBOLS);
            let mut chips = *table().sequence(s);
            let mut idx: Vec<usize> = (0..CHIPS_PER_SYMBOL).collect();
            for n in 0..w {
                let pick = rng.random_range(n..CHIPS_PER_SYMBOL);
                idx.swap(n, pick);
                chips[idx[n]] ^= 1;
            }
            assert_eq!(despread(&chips, table()).unwrap().symbol as usize, s, "weight {w}");
        }
    }
}

#[test]
fn noiseless_loopback_thousand_frames() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut packet_errors = 0;
    let mut chip_errors = 0;
    for _ in 0..1000 {
        let mut psdu = vec![0u8; PSDU_LEN];
        rng.fill(&mut psdu[..]);
        let frame = Frame::new(&psdu, table()).unwrap();
        let w = modulate(&frame.all_chips(), 4).unwrap();
        let chips = demodulate(&w).unwrap();
        assert_eq!(chips.len(), SYNC_CHIPS + PSDU_CHIPS);
        let dec = decode_frame(&chips[SYNC_CHIPS..], Some(&frame.psdu_chips), table()).unwrap();
        packet_errors += usize::from(dec.psdu != psdu);
        chip_errors += dec.chip_error_count().unwrap();
    }
    assert_eq!(packet_errors, 0);
    assert_eq!(chip_errors, 0);
}

#[test]
fn modulation_respects_samples_per_chip() {
    let psdu = vec![0x5Au8; PSDU_LEN];
    let chips = spread(&psdu, table()).unwrap();
    for spc in [2, 4, 8] {
        let w = modulate(&chips, spc).unwrap();
        assert_eq!(w.samples_per_chip(), spc);
        let back = demodulate(&w).unwrap();
        assert_eq!(back, chips);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn loopback_identity(psdu in prop::collection::vec(any::<u8>(), PSDU_LEN)) {
        let chips = spread(&psdu, table()).unwrap();
        let back = decode_frame(&demodulate(&modulate(&chips, 4).unwrap()).unwrap(), None, table()).unwrap();
        prop_assert_eq!(back.psdu, psdu);
    }

    #[test]
    fn spread_is_injective(
        a in prop::collection::vec(any::<u8>(), PSDU_LEN),
        b in prop::collection::vec(any::<u8>(), PSDU_LEN),
    ) {
        prop_assume!(a != b);
        prop_assert_ne!(spread(&a, table()).unwrap(), spread(&b, table()).unwrap());
    }

    #[test]
    fn despread_is_total_and_deterministic(chips in prop::collection::vec(0u8..=1, CHIPS_PER_SYMBOL)) {
        let first = despread(&chips, table()).unwrap();
        prop_assert_eq!(first, despread(&chips, table()).unwrap());
        let scores = table().correlations(&chips);
        let best = *scores.iter().max().unwrap();
        // ties resolve to the lowest symbol index
        let lowest = scores.iter().position(|&s| s == best).unwrap();
        prop_assert_eq!(first.symbol as usize, lowest);
        prop_assert_eq!(first.correlation, best);
        prop_assert!(first.margin >= 0);
    }
}

#[test]
fn wrong_lengths_are_rejected() {
    assert!(spread(&[0u8; 10], table()).is_err());
    assert!(despread(&[0u8; 31], table()).is_err());
    assert!(decode_frame(&[0u8; 100], None, table()).is_err());
}
