use chanlab::channel::{default_mean_cir, ArModel, ChannelConfig, PsduSource, TraceGenerator};
use chanlab::metrics::{aging_sweep, bit_error_rate, chip_error_rate, mse, packet_error_rate, pairwise_sum};
use chanlab::modem::{decode_frame, spread, PnTable, PSDU_CHIPS, PSDU_LEN};
use chanlab::Cir;
use num_complex::Complex64;
use proptest::prelude::*;

fn cirs(n_taps: usize) -> impl Strategy<Value = Vec<Cir>> {
    prop::collection::vec(
        prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), n_taps)
            .prop_map(|t| Cir::new(t.into_iter().map(|(a, b)| Complex64::new(a, b)).collect(), 0).unwrap()),
        1..20,
    )
}

fn pair() -> impl Strategy<Value = (Vec<Cir>, Vec<Cir>)> {
    (1usize..12).prop_flat_map(|n| {
        cirs(n).prop_flat_map(move |a| {
            let len = a.len();
            (Just(a), prop::collection::vec(cirs(n).prop_map(|v| v[0].clone()), len))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mse_matches_double_loop((est, truth) in pair()) {
        let n = truth[0].len();
        let mut acc = 0.0;
        for k in 0..truth.len() {
            for l in 0..n {
                let d = truth[k].taps()[l] - est[k].taps()[l];
                acc += d.re * d.re + d.im * d.im;
            }
        }
        let oracle = acc / (truth.len() * n) as f64;
        let got = mse(&est, &truth).unwrap();
        prop_assert!(got >= 0.0);
        prop_assert!((got - oracle).abs() <= 1e-12 * oracle.max(1.0));
        prop_assert_eq!(mse(&truth, &truth).unwrap(), 0.0);
        prop_assert_eq!(got == 0.0, est == truth);
    }

    #[test]
    fn pairwise_sum_close_to_naive(v in prop::collection::vec(-1e6f64..1e6, 0..300)) {
        let naive: f64 = v.iter().sum();
        let scale: f64 = v.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        prop_assert!((pairwise_sum(&v) - naive).abs() <= 1e-12 * scale);
    }

    #[test]
    fn rates_are_fractions_and_consistent(
        payloads in prop::collection::vec(prop::collection::vec(any::<u8>(), PSDU_LEN), 1..6),
        flips in prop::collection::vec((any::<prop::sample::Index>(), any::<bool>()), 0..40),
        lost in any::<prop::sample::Index>(),
        drop_one in any::<bool>(),
    ) {
        let table = PnTable::ieee_802_15_4();
        let truth_chips: Vec<Vec<u8>> = payloads.iter().map(|p| spread(p, table).unwrap()).collect();
        let mut decided: Vec<Option<Vec<u8>>> = truth_chips.iter().cloned().map(Some).collect();
        for (idx, which) in &flips {
            let k = if *which { 0 } else { decided.len() - 1 };
            let i = idx.index(PSDU_CHIPS);
            let c = decided[k].as_mut().unwrap();
            c[i] ^= 1;
        }
        if drop_one {
            let k = lost.index(decided.len());
            decided[k] = None;
        }
        let decoded: Vec<Option<Vec<u8>>> = decided
            .iter()
            .map(|d| d.as_ref().map(|c| decode_frame(c, None, table).unwrap().psdu))
            .collect();
        let per = packet_error_rate(&decoded, &payloads).unwrap();
        let cer = chip_error_rate(&decided, &truth_chips).unwrap();
        let ber = bit_error_rate(&decoded, &payloads).unwrap();
        for r in [per, cer, ber] {
            prop_assert!((0.0..=1.0).contains(&r));
        }
        // packet errors only come from chip decisions here
        if per > 0.0 {
            prop_assert!(cer > 0.0);
        }
        if cer == 0.0 {
            prop_assert_eq!(per, 0.0);
            prop_assert_eq!(ber, 0.0);
        }
    }
}

#[test]
fn lost_packet_charges_everything() {
    let truth = vec![vec![0u8; PSDU_LEN]];
    let chips = vec![vec![0u8; PSDU_CHIPS]];
    assert_eq!(packet_error_rate(&[None], &truth).unwrap(), 1.0);
    assert_eq!(chip_error_rate(&[None], &chips).unwrap(), 1.0);
    assert_eq!(bit_error_rate(&[None], &truth).unwrap(), 1.0);
}

#[test]
fn mismatched_inputs_are_rejected() {
    let a = vec![Cir::impulse(3, 0).unwrap()];
    let b = vec![Cir::impulse(4, 0).unwrap()];
    assert!(mse(&a, &b).is_err());
    assert!(mse(&[], &[]).is_err());
    assert!(packet_error_rate(&[None, None], &[vec![0; PSDU_LEN]]).is_err());
}

#[test]
fn aged_mse_is_non_decreasing_in_age() {
    let cfg = ChannelConfig {
        snr_db: 30.0,
        phase_drift_std_rad: 0.0,
        rng_seed: 17,
        mean_cir: Some(default_mean_cir(11, 5).unwrap()),
        ..Default::default()
    };
    let model = ArModel::real(&[0.9], 5e-3).unwrap();
    let gen = TraceGenerator::new(cfg, model, 400, PsduSource::Random).unwrap();
    let ages = [100, 200, 500, 1000, 2000];
    let points = aging_sweep(gen, |_, gt| Ok(Some(gt.clone())), &ages, None).unwrap();
    let mut prev = 0.0;
    for p in &points {
        let m = p.mse.unwrap();
        assert!(m >= prev, "age {}: {m} < {prev}", p.age_ms);
        assert_eq!(p.n_packets, 380);
        prev = m;
    }
}
