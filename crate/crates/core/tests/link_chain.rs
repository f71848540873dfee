use ris_core::link::{
    awgn_ber, ber_curve, ber_curve_csv, random_payload, run_link, CoderSpec, LinkConfig, Modulation, NoiseSpec,
};

fn base() -> LinkConfig {
    LinkConfig {
        ris_gain_dbi: Some(21.7),
        ..LinkConfig::default()
    }
}

// At 2 dB the hard-decision channel error rate (~0.11) puts a rate-1/2
// code at the binary symmetric channel capacity, so the decoder needs
// soft metrics to gain anything.
#[test]
fn coded_beats_raw_at_2_db_with_soft_metrics() {
    let c = LinkConfig {
        noise: NoiseSpec::SnrDb(2.0),
        soft_decision: true,
        seed: 21,
        ..base()
    };
    let r = run_link(&c, &random_payload(12_500, 21), None, None).unwrap();
    println!("soft: raw {:.4} coded {:.4}", r.raw_ber, r.coded_ber);
    assert!(r.coded_ber < r.raw_ber);
}

#[test]
fn coded_beats_uncoded_at_4_db() {
    let payload = random_payload(12_500, 4);
    let coded = LinkConfig {
        noise: NoiseSpec::SnrDb(4.0),
        seed: 4,
        ..base()
    };
    let uncoded = LinkConfig {
        coder: CoderSpec::None,
        ..coded.clone()
    };
    let a = run_link(&coded, &payload, None, None).unwrap();
    let b = run_link(&uncoded, &payload, None, None).unwrap();
    assert!(a.payload_bits >= 100_000);
    assert!(a.coded_ber < b.coded_ber, "{} vs {}", a.coded_ber, b.coded_ber);
}

#[test]
fn soft_decisions_help() {
    let hard = LinkConfig {
        noise: NoiseSpec::SnrDb(2.0),
        seed: 5,
        ..base()
    };
    let soft = LinkConfig {
        soft_decision: true,
        ..hard.clone()
    };
    let p = random_payload(12_500, 5);
    let h = run_link(&hard, &p, None, None).unwrap();
    let s = run_link(&soft, &p, None, None).unwrap();
    assert!(s.coded_ber < h.coded_ber);
    assert_eq!(s.raw_ber, h.raw_ber);
}

#[test]
fn raw_ber_monotone_in_snr() {
    let c = LinkConfig {
        coder: CoderSpec::None,
        seed: 6,
        ..base()
    };
    let curve = ber_curve(&c, &[0.0, 5.0, 10.0, 15.0, 20.0], &random_payload(12_500, 6), None, None).unwrap();
    assert!(curve.iter().all(|(_, r)| r.payload_bits >= 100_000));
    assert!(curve.windows(2).all(|w| w[1].1.raw_ber <= w[0].1.raw_ber));
    // close to theory away from the floor
    for (snr, r) in &curve[..2] {
        let th = awgn_ber(Modulation::Qpsk, *snr);
        assert!((r.raw_ber / th - 1.0).abs() < 0.15, "{snr}: {} vs {th}", r.raw_ber);
    }
    let csv = ber_curve_csv(&curve);
    assert!(csv.starts_with("snr_db,raw_ber,coded_ber,evm_db\n"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn qam64_closed_form_cross_check() {
    let c = LinkConfig {
        modulation: Modulation::Qam64,
        coder: CoderSpec::None,
        noise: NoiseSpec::SnrDb(20.0),
        seed: 3,
        ..base()
    };
    let r = run_link(&c, &random_payload(25_000, 3), None, None).unwrap();
    let th = awgn_ber(Modulation::Qam64, 20.0);
    assert!(r.raw_ber > 0.5 * th && r.raw_ber < 2.0 * th, "{} vs {th}", r.raw_ber);
}

#[test]
fn budget_from_surface_gain() {
    let c = LinkConfig {
        noise: NoiseSpec::NoiseFigureDb(7.0),
        ..LinkConfig::default()
    };
    let r = run_link(&c, &random_payload(100, 1), None, None).unwrap();
    // broadside codeword on the default surface towards a broadside receiver
    assert!((20.2..=23.2).contains(&r.ris_gain_dbi));
    assert!((r.received_power_dbm - (30.0 + r.ris_gain_dbi - 65.70)).abs() < 0.05);
    assert_eq!(r.coded_ber, 0.0);
    assert!(r.to_key_values().contains("received_power_dbm"));
}
