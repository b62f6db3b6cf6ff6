use chanlab::channel::{apply_channel, default_mean_cir, generate_trace, ArModel, ChannelConfig, PsduSource};
use chanlab::equalization::{channel_matrix, design_zf, equalize, EqualizerConfig};
use chanlab::receiver::{decode_standard, decode_with_estimate};
use chanlab::{Cir, Waveform};
use num_complex::Complex64;
use proptest::prelude::*;

type C = Complex64;

mod common;

fn two_tap() -> Cir {
    Cir::new(vec![C::new(1.0, 0.0), C::new(0.5, 0.0)], 0).unwrap()
}

#[test]
fn residual_non_increasing_in_length() {
    let h = two_tap();
    for u_index in [0usize, 2, 4] {
        let mut prev = f64::INFINITY;
        for l in 5..=41 {
            let r = design_zf(&h, l, u_index).unwrap().residual();
            assert!(r <= prev + 1e-14, "u={u_index} L={l}: {r} > {prev}");
            prev = r;
        }
    }
}

#[test]
fn centred_residual_is_tiny_for_minimum_phase_channel() {
    let h = two_tap();
    let cfg = EqualizerConfig::default();
    let e = design_zf(&h, cfg.taps, cfg.u_index_for(h.len())).unwrap();
    assert!(e.residual() < 1e-3);
}

#[test]
fn equalized_loopback_recovers_input() {
    let x: Vec<C> = (0..400).map(|i| C::from_polar(1.0, 0.37 * i as f64 * i as f64)).collect();
    let w = Waveform::new(x.clone(), 4).unwrap();
    let h = two_tap();
    // causal channel: a delay-0 target inverts it with a geometric tail
    let e = design_zf(&h, 21, 0).unwrap();
    let z = equalize(&apply_channel(&w, &h), &e);
    let worst = z.samples().iter().zip(&x).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-3, "worst sample error {worst}");
}

#[test]
fn equalizer_gain_grows_as_channel_zero_nears_unit_circle() {
    let mut prev = 0.0;
    for a in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let h = Cir::new(vec![C::new(1.0, 0.0), C::new(a, 0.0)], 0).unwrap();
        let norm = design_zf(&h, 21, 0).unwrap().norm();
        assert!(norm > prev, "echo {a}: gain {norm} <= {prev}");
        prev = norm;
    }
    assert!(prev > 2.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residual_is_first_order_optimal(
        taps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=6),
        l in 1usize..=15,
        u in any::<prop::sample::Index>(),
        eps in 1e-4f64..1e-1,
    ) {
        let mut t: Vec<C> = taps.into_iter().map(|(a, b)| C::new(a, b)).collect();
        t[0] += C::new(2.0, 0.0);
        let h = Cir::new(t, 0).unwrap();
        let rows = l + h.len() - 1;
        let u_index = u.index(rows);
        let e = design_zf(&h, l, u_index).unwrap();
        let hm = channel_matrix(&h, l);
        let cost = |c: &[C]| {
            let hc = &hm * nalgebra::DVector::from_column_slice(c);
            hc.iter()
                .enumerate()
                .map(|(i, v)| (if i == u_index { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) } - v).norm_sqr())
                .sum::<f64>()
        };
        let best = cost(e.taps());
        prop_assert!((best.sqrt() - e.residual()).abs() <= 1e-9);
        for i in 0..l {
            for d in [C::new(eps, 0.0), C::new(-eps, 0.0), C::new(0.0, eps), C::new(0.0, -eps)] {
                let mut c = e.taps().to_vec();
                c[i] += d;
                prop_assert!(cost(&c) >= best * (1.0 - 1e-12) - 1e-15);
            }
        }
    }
}

#[test]
fn equalization_fixes_what_standard_decoding_cannot() {
    let cfg = ChannelConfig {
        snr_db: f64::INFINITY,
        phase_drift_std_rad: 0.0,
        mean_cir: Some(common::dispersive_channel()),
        ..Default::default()
    };
    let set = generate_trace(&cfg, &ArModel::frozen(), 20, PsduSource::Random, 0).unwrap();
    let mut standard_errors = 0;
    let mut equalized_errors = 0;
    for rec in &set.records {
        standard_errors += usize::from(!decode_standard(rec).unwrap().psdu_ok);
        let out = decode_with_estimate(rec, Some(&rec.true_cir), &EqualizerConfig::default()).unwrap();
        equalized_errors += usize::from(!out.psdu_ok);
    }
    assert_eq!(standard_errors, set.records.len());
    assert_eq!(equalized_errors, 0);
}

#[test]
fn benign_channel_decodes_either_way() {
    let cfg = ChannelConfig {
        snr_db: f64::INFINITY,
        mean_cir: Some(default_mean_cir(11, 5).unwrap()),
        ..Default::default()
    };
    let set = generate_trace(&cfg, &ArModel::frozen(), 5, PsduSource::Random, 0).unwrap();
    for rec in &set.records {
        assert!(decode_with_estimate(rec, Some(&rec.true_cir), &EqualizerConfig::default()).unwrap().psdu_ok);
    }
}

#[test]
fn invalid_designs_are_rejected() {
    assert!(design_zf(&two_tap(), 0, 0).is_err());
    assert!(design_zf(&two_tap(), 5, 6).is_err());
}
