mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use ris_core::farfield::{
    frequency_sweep, gain, metrics, quantization_csv, quantization_loss, radiate, scan_csv, scan_study, AngularGrid,
    PhaseResolution,
};
use ris_core::link::{ber_curve, ber_curve_csv, random_payload, run_link};
use ris_core::surface::{decode_bias_frame, encode_bias_frame, BiasFrame, Codeword};
use ris_core::synthesis::{synthesize_pencil_with, synthesize_shaped, MaskCell, ShapedBeamSpec, SteeringTarget};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "ris", version, about = "2-bit reconfigurable surface model and OFDM link simulator")]
struct Cli {
    /// Key-value configuration file; built-in prototype defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CodewordArg {
    /// Codeword text file [default: <out>/codeword.txt]
    #[arg(long)]
    codeword: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Pencil beam codeword and bias frame towards (theta, phi).
    Steer {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        theta: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        phi: f64,
        /// Allow steering beyond the +/-60 deg scan range.
        #[arg(long)]
        wide_scan: bool,
    },
    /// Shaped beam by phase-only alternating projection.
    Shape {
        /// Mask CSV `theta_deg,phi_deg,target,weight`; a flat-top cone when absent.
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Far-field pattern export.
    Pattern {
        #[command(flatten)]
        cw: CodewordArg,
        #[arg(long)]
        freq: Option<f64>,
    },
    /// Gain, beamwidth and sidelobe report.
    Metrics {
        #[command(flatten)]
        cw: CodewordArg,
        #[arg(long)]
        freq: Option<f64>,
    },
    /// Gain versus frequency.
    Sweep {
        #[command(flatten)]
        cw: CodewordArg,
    },
    /// Scan loss over the configured angles.
    Scan,
    /// Phase quantization loss, 1-bit, 2-bit and continuous.
    Quantloss {
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// End-to-end OFDM link run or SNR sweep.
    Link {
        /// Surface codeword; a pencil towards the receiver when absent.
        #[arg(long)]
        codeword: Option<PathBuf>,
        /// Comma-separated SNR points (dB), overriding `link.snr_sweep_db`.
        #[arg(long, allow_negative_numbers = true)]
        snr: Option<String>,
    },
    /// Codeword text to control-board bias frame.
    BiasEncode {
        #[command(flatten)]
        cw: CodewordArg,
        /// [default: <out>/codeword.bin]
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Bias frame back to codeword text.
    BiasDecode {
        #[arg(long)]
        frame: PathBuf,
        /// [default: <out>/decoded.txt]
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

impl Command {
    fn stage(&self) -> &'static str {
        match self {
            Command::Steer { .. } => "steer",
            Command::Shape { .. } => "shape",
            Command::Pattern { .. } => "pattern",
            Command::Metrics { .. } => "metrics",
            Command::Sweep { .. } => "sweep",
            Command::Scan => "scan",
            Command::Quantloss { .. } => "quantloss",
            Command::Link { .. } => "link",
            Command::BiasEncode { .. } => "bias-encode",
            Command::BiasDecode { .. } => "bias-decode",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    };
    let mut cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: [config] {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    let stage = cli.command.stage();
    match run(cli.command, &cfg) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: [{stage}] {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command, cfg: &RunConfig) -> Result<String> {
    let out = &cfg.output.dir;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let grid = || AngularGrid::hemisphere(cfg.output.theta_step_deg, cfg.output.phi_step_deg);
    let layout = &cfg.layout;
    let model = &cfg.model;

    match command {
        Command::Steer { theta, phi, wide_scan } => {
            // negative theta folds into the opposite half-plane
            let target = if theta < 0.0 {
                SteeringTarget::in_plane(theta, phi)?
            } else {
                SteeringTarget::new(theta, phi)?
            };
            let cw = synthesize_pencil_with(layout, &target, &model.element, wide_scan)?;
            let (txt, bin) = write_codeword(out, &cw)?;
            Ok(format!(
                "steer: theta={theta} phi={phi}, {} active elements -> {}, {}",
                layout.active_count(),
                txt.display(),
                bin.display()
            ))
        }
        Command::Shape { mask, seed } => {
            let spec = match mask {
                Some(p) => read_mask(&p)?,
                None => flat_top(cfg.output.shape_half_width_deg)?,
            };
            let seed = seed.unwrap_or(cfg.output.shape_seed);
            let (cw, report) = synthesize_shaped(layout, &spec, &model.element, seed)?;
            let (txt, bin) = write_codeword(out, &cw)?;
            let mut hist = String::from("iteration,objective\n");
            for (i, j) in report.objective_history.iter().enumerate() {
                hist.push_str(&format!("{i},{j:.9e}\n"));
            }
            let hpath = write(out, "shape_history.csv", hist.as_bytes())?;
            Ok(format!(
                "shape: {} continuous + {} quantized iterations, objective {:.4e} -> {}, {}, {}",
                report.continuous_iterations,
                report.quantized_iterations,
                report.final_objective,
                txt.display(),
                bin.display(),
                hpath.display()
            ))
        }
        Command::Pattern { cw, freq } => {
            let cw = load_codeword(out, cw.codeword, cfg)?;
            let f = freq.unwrap_or(cfg.frequency_hz);
            let p = radiate(layout, &cw, f, &grid()?, &model.element)?;
            let path = write(out, "pattern.csv", p.to_csv().as_bytes())?;
            let (i, j, _) = p.peak();
            Ok(format!(
                "pattern: {} samples at {f} Hz, peak theta={} phi={} -> {}",
                p.samples().len(),
                p.theta_deg()[i],
                p.phi_deg()[j],
                path.display()
            ))
        }
        Command::Metrics { cw, freq } => {
            let cw = load_codeword(out, cw.codeword, cfg)?;
            let f = freq.unwrap_or(cfg.frequency_hz);
            let p = radiate(layout, &cw, f, &grid()?, &model.element)?;
            let g = gain(&p, layout, &cw, model)?;
            let m = metrics(&p, layout, Some(&g))?;
            let mut text = format!("frequency_hz = {f}\n");
            text += &m.to_key_values();
            text += &format!("element_loss_db = {:.4}\n", g.element_loss_db);
            text += &format!("spillover_db = {:.4}\n", g.spillover_db);
            text += &format!("spillover_enabled = {}\n", g.spillover_enabled);
            text += &format!("gain_without_spillover_dbi = {:.4}\n", g.gain_without_spillover_dbi);
            text += &format!("gain_with_spillover_dbi = {:.4}\n", g.gain_with_spillover_dbi);
            if let Some(t) = cfg.target_gain_dbi {
                text += &format!("target_gain_dbi = {t:.4}\ngain_error_db = {:.4}\n", m.gain_dbi - t);
            }
            let path = write(out, "metrics.txt", text.as_bytes())?;
            Ok(format!(
                "metrics: gain {:.2} dBi, directivity {:.2} dBi, sll {:.2} dB -> {}",
                m.gain_dbi,
                m.directivity_dbi,
                m.sidelobe_level_db,
                path.display()
            ))
        }
        Command::Sweep { cw } => {
            let cw = load_codeword(out, cw.codeword, cfg)?;
            let o = &cfg.output;
            let r = frequency_sweep(layout, &cw, model, o.sweep_start_hz, o.sweep_stop_hz, o.sweep_step_hz, &grid()?)?;
            let path = write(out, "sweep.csv", r.to_csv().as_bytes())?;
            Ok(format!(
                "sweep: peak {:.2} dBi at {} Hz, 1-dB bandwidth {:.1} MHz ({:.1}%) -> {}",
                r.peak_gain_dbi,
                r.peak_frequency_hz,
                r.bandwidth_hz / 1e6,
                100.0 * r.fractional_bandwidth,
                path.display()
            ))
        }
        Command::Scan => {
            let o = &cfg.output;
            let pts = scan_study(layout, &o.scan_angles_deg, o.scan_plane_phi_deg, model, &grid()?)?;
            let path = write(out, "scan.csv", scan_csv(&pts).as_bytes())?;
            let worst = pts.iter().map(|p| p.loss_db).fold(f64::NEG_INFINITY, f64::max);
            Ok(format!("scan: {} angles, worst loss {worst:.2} dB -> {}", pts.len(), path.display()))
        }
        Command::Quantloss { trials, seed } => {
            let trials = trials.unwrap_or(cfg.output.quant_trials);
            let seed = seed.unwrap_or(cfg.output.quant_seed);
            let reports = [PhaseResolution::OneBit, PhaseResolution::TwoBit, PhaseResolution::Continuous]
                .into_iter()
                .map(|r| quantization_loss(r, trials, seed, layout))
                .collect::<ris_core::Result<Vec<_>>>()?;
            let path = write(out, "quantloss.csv", quantization_csv(&reports).as_bytes())?;
            Ok(format!(
                "quantloss: {trials} trials, 1-bit {:.2} dB, 2-bit {:.2} dB -> {}",
                reports[0].mean_loss_db,
                reports[1].mean_loss_db,
                path.display()
            ))
        }
        Command::Link { codeword, snr } => {
            let l = &cfg.link;
            let cw = match codeword {
                Some(p) => read_codeword(&p, cfg)?,
                None => synthesize_pencil_with(
                    layout,
                    &SteeringTarget::new(l.rx_theta_deg, l.rx_phi_deg)?,
                    &model.element,
                    true,
                )?,
            };
            let snrs = match snr {
                Some(s) => config::parse_list(&s).map_err(|e| anyhow!("--snr: {e}"))?,
                None => cfg.snr_sweep_db.clone(),
            };
            let payload = random_payload(cfg.payload_bytes, l.seed);
            if snrs.is_empty() {
                let r = run_link(l, &payload, Some(layout), Some(&cw))?;
                write(out, "link.txt", r.to_key_values().as_bytes())?;
                let row = [(r.snr_db.unwrap_or(f64::INFINITY), r.clone())];
                let path = write(out, "link.csv", ber_curve_csv(&row).as_bytes())?;
                Ok(format!(
                    "link: {} payload bits, raw BER {:.3e}, coded BER {:.3e}, EVM {:.1} dB, {:.2} Mbit/s -> {}",
                    r.payload_bits,
                    r.raw_ber,
                    r.coded_ber,
                    r.evm_db,
                    r.data_rate_bps / 1e6,
                    path.display()
                ))
            } else {
                let curve = ber_curve(l, &snrs, &payload, Some(layout), Some(&cw))?;
                let path = write(out, "link.csv", ber_curve_csv(&curve).as_bytes())?;
                Ok(format!("link: {} SNR points -> {}", curve.len(), path.display()))
            }
        }
        Command::BiasEncode { cw, output } => {
            let cw = load_codeword(out, cw.codeword, cfg)?;
            let frame = encode_bias_frame(&cw)?;
            let path = output.unwrap_or_else(|| out.join("codeword.bin"));
            fs::write(&path, frame.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
            Ok(format!("bias-encode: {} bytes -> {}", frame.as_bytes().len(), path.display()))
        }
        Command::BiasDecode { frame, output } => {
            let bytes = fs::read(&frame).with_context(|| format!("reading {}", frame.display()))?;
            let cw = decode_bias_frame(&BiasFrame::from_bytes(bytes), layout)?;
            let path = output.unwrap_or_else(|| out.join("decoded.txt"));
            fs::write(&path, cw.to_text()).with_context(|| format!("writing {}", path.display()))?;
            Ok(format!("bias-decode: {}x{} codeword -> {}", cw.rows(), cw.cols(), path.display()))
        }
    }
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn write_codeword(dir: &Path, cw: &Codeword) -> Result<(PathBuf, PathBuf)> {
    let txt = write(dir, "codeword.txt", cw.to_text().as_bytes())?;
    let bin = write(dir, "codeword.bin", encode_bias_frame(cw)?.as_bytes())?;
    Ok((txt, bin))
}

fn read_codeword(path: &Path, cfg: &RunConfig) -> Result<Codeword> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cw = Codeword::from_text(&text).with_context(|| format!("parsing {}", path.display()))?;
    cw.validate(&cfg.layout).with_context(|| format!("{} does not fit the layout", path.display()))?;
    Ok(cw)
}

fn load_codeword(out: &Path, path: Option<PathBuf>, cfg: &RunConfig) -> Result<Codeword> {
    read_codeword(&path.unwrap_or_else(|| out.join("codeword.txt")), cfg)
}

/// Mask CSV with header `theta_deg,phi_deg,target,weight`.
fn read_mask(path: &Path) -> Result<ShapedBeamSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cells = vec![];
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let v = config::parse_list::<f64>(line).map_err(|e| anyhow!("{}:{}: {e}", path.display(), i + 1))?;
        let [theta_deg, phi_deg, target, weight] = v[..] else {
            return Err(anyhow!("{}:{}: expected 4 columns, got {}", path.display(), i + 1, v.len()));
        };
        cells.push(MaskCell {
            theta_deg,
            phi_deg,
            target,
            weight,
        });
    }
    Ok(ShapedBeamSpec::new(cells)?)
}

/// Unit target over the cone theta <= `half_width`, suppressed rings beyond.
fn flat_top(half_width: f64) -> Result<ShapedBeamSpec> {
    let mut cells = vec![MaskCell {
        theta_deg: 0.0,
        phi_deg: 0.0,
        target: 1.0,
        weight: 1.0,
    }];
    let ring = |theta_deg: f64, target: f64, weight: f64| {
        (0..12).map(move |i| MaskCell {
            theta_deg,
            phi_deg: 30.0 * i as f64,
            target,
            weight,
        })
    };
    for k in 1..=5 {
        cells.extend(ring(half_width * k as f64 / 5.0, 1.0, 1.0));
    }
    for t in [1.8, 2.4, 3.0] {
        cells.extend(ring(half_width * t, 0.0, 0.2));
    }
    Ok(ShapedBeamSpec::new(cells)?)
}
