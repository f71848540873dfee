//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line
//! (visible with `--nocapture`) and fails when its criterion is not met.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ris_core::element::{ElementModel, ElementState, PhaseCode};
use ris_core::farfield::{
    aperture_efficiency, directivity, eirp, frequency_sweep, gain, metrics, quantization_loss, radiate, scan_study,
    AngularGrid, ModelOptions, PhaseResolution,
};
use ris_core::link::{
    self, awgn_ber, build_frame, deinterleave, demap_symbols, encode, interleave, map_symbols, ofdm_demodulate,
    ofdm_modulate, random_payload, run_link, viterbi_decode, CoderSpec, LinkConfig, Modulation, NoiseSpec,
    OfdmSymbolGrid, SubcarrierMap,
};
use ris_core::surface::{decode_bias_frame, encode_bias_frame, Codeword, SurfaceLayout};
use ris_core::synthesis::{synthesize_pencil, SteeringTarget};

fn verdict(n: u32, pass: bool, detail: String) {
    println!("criterion {n}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn broadside() -> (SurfaceLayout, Codeword) {
    let layout = SurfaceLayout::default();
    let cw = synthesize_pencil(&layout, &SteeringTarget::broadside(), &ElementModel::Measured).unwrap();
    (layout, cw)
}

#[test]
fn criterion_01_aperture_efficiency() {
    let e = aperture_efficiency(21.7, 0.64, 2.3e9).unwrap();
    verdict(1, (e - 0.313).abs() <= 0.002, format!("efficiency {:.4} (target 0.313 +/- 0.002)", e));
}

#[test]
fn criterion_02_eirp() {
    let e = eirp(30.0, 21.7);
    verdict(2, e == 51.7, format!("eirp {e} dBm (target 51.7 exactly)"));
}

#[test]
fn criterion_03_broadside_gain() {
    let (layout, cw) = broadside();
    let model = ModelOptions::default();
    let p = radiate(&layout, &cw, 2.3e9, &AngularGrid::default(), &model.element).unwrap();
    let g = gain(&p, &layout, &cw, &model).unwrap();
    let pass = (20.2..=23.2).contains(&g.gain_dbi) && g.directivity_dbi <= 26.85;
    verdict(
        3,
        pass,
        format!(
            "gain {:.2} dBi in [20.2, 23.2], directivity {:.2} dBi <= 26.85 (element {:.2} dB, spillover {:.2} dB)",
            g.gain_dbi, g.directivity_dbi, g.element_loss_db, g.spillover_db
        ),
    );
}

#[test]
fn criterion_04_beamwidth_and_sidelobes() {
    let (layout, cw) = broadside();
    let model = ModelOptions::default();
    let p = radiate(&layout, &cw, 2.3e9, &AngularGrid::default(), &model.element).unwrap();
    let g = gain(&p, &layout, &cw, &model).unwrap();
    let m = metrics(&p, &layout, Some(&g)).unwrap();
    let hpbw: Vec<f64> = m.cuts.iter().map(|c| c.hpbw_deg.unwrap_or(f64::NAN)).collect();
    let pass = hpbw.iter().all(|h| (7.6..=10.6).contains(h)) && m.sidelobe_level_db <= -13.0;
    verdict(
        4,
        pass,
        format!(
            "hpbw {:.2} / {:.2} deg in [7.6, 10.6], sll {:.2} dB <= -13.0",
            hpbw[0], hpbw[1], m.sidelobe_level_db
        ),
    );
}

#[test]
fn criterion_05_scan_study() {
    let layout = SurfaceLayout::default();
    let pts = scan_study(&layout, &[0.0, 20.0, 40.0, 60.0], 0.0, &ModelOptions::default(), &AngularGrid::default()).unwrap();
    let loss60 = pts[3].loss_db;
    let worst = pts.iter().map(|p| p.pointing_error_deg).fold(0.0, f64::max);
    let pass = (2.2..=5.2).contains(&loss60) && worst <= 0.5 + 1e-9;
    let peaks: Vec<String> = pts.iter().map(|p| format!("{:.1}", p.peak_theta_deg)).collect();
    verdict(
        5,
        pass,
        format!(
            "60 deg scan loss {loss60:.2} dB in [2.2, 5.2], peaks at [{}] deg, worst pointing error {worst:.2} deg <= 0.5",
            peaks.join(", ")
        ),
    );
}

#[test]
fn criterion_06_quantization_loss() {
    let layout = SurfaceLayout::default();
    let two = quantization_loss(PhaseResolution::TwoBit, 10_000, 2024, &layout).unwrap();
    let one = quantization_loss(PhaseResolution::OneBit, 10_000, 2024, &layout).unwrap();
    let pass = (two.mean_loss_db - 0.91).abs() <= 0.3 && one.mean_loss_db >= 3.0 && two.mean_loss_db < one.mean_loss_db;
    verdict(
        6,
        pass,
        format!(
            "2-bit {:.3} dB (closed form {:.3}), 1-bit {:.3} dB >= 3.0",
            two.mean_loss_db, two.closed_form_db, one.mean_loss_db
        ),
    );
}

#[test]
fn criterion_07_bandwidth() {
    let (layout, cw) = broadside();
    let grid = AngularGrid::hemisphere(1.0, 1.0).unwrap();
    let r = frequency_sweep(&layout, &cw, &ModelOptions::default(), 2.0e9, 2.6e9, 10e6, &grid).unwrap();
    verdict(
        7,
        r.fractional_bandwidth >= 0.10,
        format!(
            "1-dB band {:.3}-{:.3} GHz{}, fractional {:.1}% >= 10%",
            r.lower_edge_hz / 1e9,
            r.upper_edge_hz / 1e9,
            if r.upper_truncated || r.lower_truncated { " (truncated by the model band)" } else { "" },
            100.0 * r.fractional_bandwidth
        ),
    );
}

fn inverse_pairs_hold() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let bits: Vec<u8> = (0..6000).map(|_| rng.random_range(0..2)).collect();
    for m in Modulation::ALL {
        if demap_symbols(&map_symbols(&bits, m).unwrap(), m) != bits {
            return Err(format!("mapper {m:?}"));
        }
    }
    if deinterleave(&interleave(&bits, 60, 100).unwrap(), 60, 100).unwrap() != bits {
        return Err("interleaver".into());
    }
    let coder = CoderSpec::default();
    let coded = encode(&bits, coder).unwrap();
    if viterbi_decode(&link::coding::hard_to_llr(&coded), coder).unwrap() != bits {
        return Err("coder".into());
    }
    let map = SubcarrierMap::new(2048, 1200, 6).unwrap();
    let cells: Vec<Complex64> = map_symbols(&bits[..4000], Modulation::Qam16).unwrap();
    let grid = OfdmSymbolGrid::from_data(map.clone(), &cells);
    let back = ofdm_demodulate(&ofdm_modulate(&grid, 144).unwrap(), &map, 144, 0, grid.symbols(), 18).unwrap();
    let err = (0..grid.symbols())
        .flat_map(|s| (0..2048).map(move |b| (s, b)))
        .map(|(s, b)| (back.bin(s, b) - grid.bin(s, b)).norm())
        .fold(0.0, f64::max);
    if err > 1e-10 {
        return Err(format!("ofdm error {err:e}"));
    }
    let config = LinkConfig::default();
    let frame = build_frame(&bits, &config).unwrap();
    let (n, cp) = (config.fft_size, config.cp_len);
    let rx = ofdm_demodulate(&frame.samples, &map, cp, n + cp, frame.data_symbols, 0).unwrap();
    let got = demap_symbols(&rx.data_cells(), config.modulation);
    if got[..bits.len()] != bits[..] {
        return Err("framer".into());
    }
    Ok(())
}

#[test]
fn criterion_08_link_loopback() {
    let payload = random_payload(6000, 8);
    let mut lines = vec![];
    let mut pass = true;
    for m in Modulation::ALL {
        let c = LinkConfig {
            modulation: m,
            noise: NoiseSpec::None,
            ..LinkConfig::default()
        };
        let r = run_link(&c, &payload, None, None).unwrap();
        pass &= r.raw_ber == 0.0 && r.coded_ber == 0.0;
        lines.push(format!("{} raw {} coded {}", m.name(), r.raw_ber, r.coded_ber));
    }
    let pairs = inverse_pairs_hold();
    pass &= pairs.is_ok();
    lines.push(format!("inverse pairs {}", pairs.map_or_else(|e| format!("broken at {e}"), |_| "ok".into())));
    verdict(8, pass, lines.join("; "));
}

/// SNR (dB) where a BER curve crosses `target`, interpolating log10(BER).
fn crossing(points: &[(f64, f64)], target: f64) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let ((s0, b0), (s1, b1)) = (w[0], w[1]);
        (b0 >= target && b1 < target && b1 > 0.0).then(|| {
            let (l0, l1, lt) = (b0.log10(), b1.log10(), target.log10());
            s0 + (s1 - s0) * (l0 - lt) / (l0 - l1)
        })
    })
}

#[test]
fn criterion_09_link_fidelity() {
    let c = LinkConfig {
        modulation: Modulation::Qam64,
        coder: CoderSpec::None,
        noise: NoiseSpec::SnrDb(30.0),
        seed: 9,
        ..LinkConfig::default()
    };
    let r = run_link(&c, &random_payload(25_000, 9), None, None).unwrap();
    let qam_ok = r.raw_ber < 1e-3 && r.evm_db < -25.0 && r.payload_bits >= 100_000;

    let qpsk = LinkConfig {
        coder: CoderSpec::None,
        seed: 10,
        ..LinkConfig::default()
    };
    let snrs: Vec<f64> = (14..=22).map(|i| i as f64 * 0.5).collect();
    let curve = link::ber_curve(&qpsk, &snrs, &random_payload(250_000, 10), None, None).unwrap();
    let sim: Vec<(f64, f64)> = curve.iter().map(|(s, r)| (*s, r.raw_ber)).collect();
    let theory: Vec<(f64, f64)> = (0..=400).map(|i| 7.0 + i as f64 * 0.01).map(|s| (s, awgn_ber(Modulation::Qpsk, s))).collect();
    let (s_sim, s_th) = (crossing(&sim, 1e-3), crossing(&theory, 1e-3));
    let gap = match (s_sim, s_th) {
        (Some(a), Some(b)) => a - b,
        _ => f64::NAN,
    };
    let pass = qam_ok && gap.abs() <= 0.5;
    verdict(
        9,
        pass,
        format!(
            "64qam@30dB raw {:.2e} over {} bits, evm {:.2} dB; qpsk BER 1e-3 at {:.2} dB vs closed form {:.2} dB (gap {:.2} dB <= 0.5)",
            r.raw_ber,
            r.payload_bits,
            r.evm_db,
            s_sim.unwrap_or(f64::NAN),
            s_th.unwrap_or(f64::NAN),
            gap
        ),
    );
}

#[test]
fn criterion_10_bias_frame_codec() {
    let layout = SurfaceLayout::default();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut roundtrips = 0;
    for _ in 0..1000 {
        let cw = Codeword::from_fn(&layout, |_, _| PhaseCode::new(rng.random_range(0..4)).unwrap());
        let frame = encode_bias_frame(&cw).unwrap();
        let back = decode_bias_frame(&frame, &layout).unwrap();
        if back == cw && encode_bias_frame(&back).unwrap().as_bytes() == frame.as_bytes() {
            roundtrips += 1;
        }
    }

    let full = SurfaceLayout::default().with_mask(Default::default()).unwrap();
    let zero = encode_bias_frame(&Codeword::uniform(&full, PhaseCode::new(0).unwrap())).unwrap();
    let ex1 = zero.as_bytes().len() == 71 && zero.as_bytes()[..7] == *b"RIS1\x01\x10\x10" && zero.payload().iter().all(|&b| b == 0);

    let row = SurfaceLayout::rectangular(1, 4, 0.05).unwrap();
    let codes = Codeword::from_fn(&row, |_, c| PhaseCode::new(c as u8).unwrap());
    let f = encode_bias_frame(&codes).unwrap();
    let ex2 = f.payload() == [0xE4];
    let decoded = decode_bias_frame(&f, &row).unwrap();
    let ex3 = (0..4).all(|c| decoded.get(0, c) == ElementState::Active(PhaseCode::new(c as u8).unwrap()));

    verdict(
        10,
        roundtrips == 1000 && ex1 && ex2 && ex3,
        format!("{roundtrips}/1000 roundtrips byte-exact; all-zero {ex1}, 0xE4 pack {ex2}, 0xE4 unpack {ex3}"),
    );
}

#[test]
fn directivity_on_finer_grid_is_stable() {
    let (layout, cw) = broadside();
    let coarse = directivity(&radiate(&layout, &cw, 2.3e9, &AngularGrid::default(), &ElementModel::Measured).unwrap()).unwrap();
    let fine = AngularGrid::hemisphere(0.25, 0.25).unwrap();
    let fine = directivity(&radiate(&layout, &cw, 2.3e9, &fine, &ElementModel::Measured).unwrap()).unwrap();
    assert!((coarse.dbi - fine.dbi).abs() < 0.05);
}
