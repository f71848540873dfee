//! Run configuration: flat `section.key = value` lines, `#` starts a comment.
//!
//! Every key is optional; a missing key takes the 2.3 GHz prototype default.
//! Unknown keys, repeated keys and unparsable values are rejected with the
//! file, line and key that caused them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ris_core::element::ElementModel;
use ris_core::farfield::ModelOptions;
use ris_core::link::{CoderSpec, LinkConfig, NoiseSpec};
use ris_core::surface::{
    default_mask, Point3, SurfaceLayout, DEFAULT_COLS, DEFAULT_DESIGN_FREQUENCY_HZ, DEFAULT_ELEMENT_EXPONENT,
    DEFAULT_FEED_EXPONENT, DEFAULT_FEED_HEIGHT_M, DEFAULT_ROWS, DEFAULT_SPACING_M,
};
use thiserror::Error;

pub const KNOWN_KEYS: &[&str] = &[
    "surface.rows",
    "surface.cols",
    "surface.spacing_m",
    "surface.feed_xyz_m",
    "surface.mask",
    "surface.design_freq_hz",
    "surface.q_f",
    "surface.q_e",
    "model.element",
    "model.spillover",
    "model.frequency_hz",
    "model.target_gain_dbi",
    "link.carrier_hz",
    "link.used_subcarriers",
    "link.fft_size",
    "link.cp_len",
    "link.subcarrier_spacing_hz",
    "link.modulation",
    "link.code",
    "link.code_rate_inverse",
    "link.constraint_length",
    "link.interleaver_rows",
    "link.interleaver_cols",
    "link.pilot_spacing",
    "link.symbols_per_frame",
    "link.tx_power_dbm",
    "link.distance_m",
    "link.rx_gain_dbi",
    "link.rx_theta_deg",
    "link.rx_phi_deg",
    "link.ris_gain_dbi",
    "link.noise",
    "link.snr_db",
    "link.noise_figure_db",
    "link.cfo_subcarriers",
    "link.timing_offset_samples",
    "link.soft_decision",
    "link.seed",
    "link.payload_bytes",
    "link.snr_sweep_db",
    "output.dir",
    "output.theta_step_deg",
    "output.phi_step_deg",
    "output.sweep_start_hz",
    "output.sweep_stop_hz",
    "output.sweep_step_hz",
    "output.scan_angles_deg",
    "output.scan_plane_phi_deg",
    "output.quant_trials",
    "output.quant_seed",
    "output.shape_seed",
    "output.shape_half_width_deg",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{file}: cannot read: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: expected `section.key = value`, got {text:?}")]
    Syntax { file: String, line: usize, text: String },
    #[error("{file}:{line}: unknown key `{key}`")]
    UnknownKey { file: String, line: usize, key: String },
    #[error("{file}:{line}: key `{key}` repeated (first set on line {first})")]
    Duplicate {
        file: String,
        line: usize,
        key: String,
        first: usize,
    },
    #[error("{file}:{line}: key `{key}`: {reason}")]
    Value {
        file: String,
        line: usize,
        key: String,
        reason: String,
    },
    #[error("{file}: section `{section}`: {reason}")]
    Invariant {
        file: String,
        section: &'static str,
        reason: String,
    },
}

/// Report locations and study parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub theta_step_deg: f64,
    pub phi_step_deg: f64,
    pub sweep_start_hz: f64,
    pub sweep_stop_hz: f64,
    pub sweep_step_hz: f64,
    pub scan_angles_deg: Vec<f64>,
    pub scan_plane_phi_deg: f64,
    pub quant_trials: usize,
    pub quant_seed: u64,
    pub shape_seed: u64,
    pub shape_half_width_deg: f64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            theta_step_deg: 0.5,
            phi_step_deg: 0.5,
            sweep_start_hz: 2.0e9,
            sweep_stop_hz: 2.6e9,
            sweep_step_hz: 50e6,
            scan_angles_deg: vec![0.0, 20.0, 40.0, 60.0],
            scan_plane_phi_deg: 0.0,
            quant_trials: 1000,
            quant_seed: 1,
            shape_seed: 1,
            shape_half_width_deg: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub layout: SurfaceLayout,
    pub model: ModelOptions,
    /// Analysis frequency for pattern and metrics.
    pub frequency_hz: f64,
    /// Reference gain printed beside the computed one.
    pub target_gain_dbi: Option<f64>,
    pub link: LinkConfig,
    pub payload_bytes: usize,
    pub snr_sweep_db: Vec<f64>,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_entries("<defaults>", &Entries::new()).expect("defaults are valid")
    }
}

type Entries = BTreeMap<String, (usize, String)>;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let file = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            file: file.clone(),
            source,
        })?;
        Self::parse(&file, &text)
    }

    pub fn parse(file: &str, text: &str) -> Result<Self, ConfigError> {
        let mut entries = Entries::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(ConfigError::Syntax {
                    file: file.into(),
                    line,
                    text: raw.trim().into(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if !key.contains('.') || key.contains(char::is_whitespace) {
                return Err(ConfigError::Syntax {
                    file: file.into(),
                    line,
                    text: raw.trim().into(),
                });
            }
            if !KNOWN_KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    file: file.into(),
                    line,
                    key: key.into(),
                });
            }
            if let Some((first, _)) = entries.get(key) {
                return Err(ConfigError::Duplicate {
                    file: file.into(),
                    line,
                    key: key.into(),
                    first: *first,
                });
            }
            entries.insert(key.into(), (line, value.into()));
        }
        Self::from_entries(file, &entries)
    }

    fn from_entries(file: &str, entries: &Entries) -> Result<Self, ConfigError> {
        let r = Reader { file, entries };

        let rows = r.num("surface.rows", DEFAULT_ROWS)?;
        let cols = r.num("surface.cols", DEFAULT_COLS)?;
        let spacing = r.num("surface.spacing_m", DEFAULT_SPACING_M)?;
        let feed = r.with("surface.feed_xyz_m", Point3::new(0.0, 0.0, DEFAULT_FEED_HEIGHT_M), |v| {
            match parse_list::<f64>(v)?.as_slice() {
                [x, y, z] => Ok(Point3::new(*x, *y, *z)),
                l => Err(format!("expected three coordinates, got {}", l.len())),
            }
        })?;
        let mask = r.with("surface.mask", default_mask(), parse_mask)?;
        let design_f = r.num("surface.design_freq_hz", DEFAULT_DESIGN_FREQUENCY_HZ)?;
        let q_f = r.num("surface.q_f", DEFAULT_FEED_EXPONENT)?;
        let q_e = r.num("surface.q_e", DEFAULT_ELEMENT_EXPONENT)?;
        let layout = SurfaceLayout::new(rows, cols, spacing, mask, feed, design_f, q_f, q_e).map_err(|e| {
            ConfigError::Invariant {
                file: file.into(),
                section: "surface",
                reason: e.to_string(),
            }
        })?;

        let element = r.with("model.element", ElementModel::Measured, |v| match v {
            "measured" => Ok(ElementModel::Measured),
            "ideal" => Ok(ElementModel::Ideal),
            _ => Err("expected `measured` or `ideal`".into()),
        })?;
        let model = ModelOptions {
            element,
            spillover: r.with("model.spillover", true, parse_bool)?,
        };
        let frequency_hz = r.num("model.frequency_hz", design_f)?;
        let target_gain_dbi = r.with("model.target_gain_dbi", None, |v| parse_one(v).map(Some))?;

        let d = LinkConfig::default();
        let code = r.with("link.code", "conv".to_string(), |v| match v {
            "none" | "conv" => Ok(v.to_string()),
            _ => Err("expected `none` or `conv`".into()),
        })?;
        let (d_inv, d_k) = match d.coder {
            CoderSpec::Convolutional {
                inverse_rate,
                constraint_length,
            } => (inverse_rate, constraint_length),
            CoderSpec::None => (2, 7),
        };
        let inverse_rate = r.num("link.code_rate_inverse", d_inv)?;
        let constraint_length = r.num("link.constraint_length", d_k)?;
        let coder = if code == "none" {
            CoderSpec::None
        } else {
            CoderSpec::Convolutional {
                inverse_rate,
                constraint_length,
            }
        };
        let noise_kind = r.with("link.noise", "none".to_string(), |v| match v {
            "none" | "snr" | "nf" => Ok(v.to_string()),
            _ => Err("expected `none`, `snr` or `nf`".into()),
        })?;
        let snr_db = r.num("link.snr_db", 10.0)?;
        let nf_db = r.num("link.noise_figure_db", 7.0)?;
        let noise = match noise_kind.as_str() {
            "snr" => NoiseSpec::SnrDb(snr_db),
            "nf" => NoiseSpec::NoiseFigureDb(nf_db),
            _ => NoiseSpec::None,
        };
        let link = LinkConfig {
            carrier_hz: r.num("link.carrier_hz", d.carrier_hz)?,
            used_subcarriers: r.num("link.used_subcarriers", d.used_subcarriers)?,
            fft_size: r.num("link.fft_size", d.fft_size)?,
            cp_len: r.num("link.cp_len", d.cp_len)?,
            subcarrier_spacing_hz: r.num("link.subcarrier_spacing_hz", d.subcarrier_spacing_hz)?,
            modulation: r.num("link.modulation", d.modulation)?,
            coder,
            interleaver_rows: r.num("link.interleaver_rows", d.interleaver_rows)?,
            interleaver_cols: r.num("link.interleaver_cols", d.interleaver_cols)?,
            pilot_spacing: r.num("link.pilot_spacing", d.pilot_spacing)?,
            symbols_per_frame: r.num("link.symbols_per_frame", d.symbols_per_frame)?,
            tx_power_dbm: r.num("link.tx_power_dbm", d.tx_power_dbm)?,
            distance_m: r.num("link.distance_m", d.distance_m)?,
            rx_gain_dbi: r.num("link.rx_gain_dbi", d.rx_gain_dbi)?,
            rx_theta_deg: r.num("link.rx_theta_deg", d.rx_theta_deg)?,
            rx_phi_deg: r.num("link.rx_phi_deg", d.rx_phi_deg)?,
            ris_gain_dbi: r.with("link.ris_gain_dbi", d.ris_gain_dbi, |v| match v {
                "auto" => Ok(None),
                v => parse_one(v).map(Some),
            })?,
            ris_model: model.clone(),
            noise,
            cfo_subcarriers: r.num("link.cfo_subcarriers", d.cfo_subcarriers)?,
            timing_offset_samples: r.num("link.timing_offset_samples", d.timing_offset_samples)?,
            soft_decision: r.with("link.soft_decision", d.soft_decision, parse_bool)?,
            seed: r.num("link.seed", d.seed)?,
        };
        link.validate().map_err(|e| ConfigError::Invariant {
            file: file.into(),
            section: "link",
            reason: e.to_string(),
        })?;

        let o = OutputConfig::default();
        let output = OutputConfig {
            dir: r.with("output.dir", o.dir, |v| Ok(PathBuf::from(v)))?,
            theta_step_deg: r.num("output.theta_step_deg", o.theta_step_deg)?,
            phi_step_deg: r.num("output.phi_step_deg", o.phi_step_deg)?,
            sweep_start_hz: r.num("output.sweep_start_hz", o.sweep_start_hz)?,
            sweep_stop_hz: r.num("output.sweep_stop_hz", o.sweep_stop_hz)?,
            sweep_step_hz: r.num("output.sweep_step_hz", o.sweep_step_hz)?,
            scan_angles_deg: r.with("output.scan_angles_deg", o.scan_angles_deg, parse_list)?,
            scan_plane_phi_deg: r.num("output.scan_plane_phi_deg", o.scan_plane_phi_deg)?,
            quant_trials: r.num("output.quant_trials", o.quant_trials)?,
            quant_seed: r.num("output.quant_seed", o.quant_seed)?,
            shape_seed: r.num("output.shape_seed", o.shape_seed)?,
            shape_half_width_deg: r.num("output.shape_half_width_deg", o.shape_half_width_deg)?,
        };

        Ok(Self {
            layout,
            model,
            frequency_hz,
            target_gain_dbi,
            link,
            payload_bytes: r.num("link.payload_bytes", 12_500)?,
            snr_sweep_db: r.with("link.snr_sweep_db", vec![], parse_list)?,
            output,
        })
    }
}

struct Reader<'a> {
    file: &'a str,
    entries: &'a Entries,
}

impl Reader<'_> {
    fn with<T>(&self, key: &str, default: T, parse: impl FnOnce(&str) -> Result<T, String>) -> Result<T, ConfigError> {
        match self.entries.get(key) {
            None => Ok(default),
            Some((line, value)) => parse(value).map_err(|reason| ConfigError::Value {
                file: self.file.into(),
                line: *line,
                key: key.into(),
                reason,
            }),
        }
    }

    fn num<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: Display,
    {
        self.with(key, default, parse_one)
    }
}

fn parse_one<T: FromStr>(v: &str) -> Result<T, String>
where
    T::Err: Display,
{
    v.parse().map_err(|e| format!("cannot parse {v:?}: {e}"))
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(format!("expected true/false, got {v:?}")),
    }
}

/// Comma and/or whitespace separated values.
pub fn parse_list<T: FromStr>(v: &str) -> Result<Vec<T>, String>
where
    T::Err: Display,
{
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(parse_one)
        .collect()
}

/// `default`, `none`, or `row:col` pairs of removed elements.
fn parse_mask(v: &str) -> Result<BTreeSet<(usize, usize)>, String> {
    match v {
        "default" => Ok(default_mask()),
        "none" => Ok(BTreeSet::new()),
        _ => v
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                let (r, c) = t.split_once(':').ok_or_else(|| format!("mask entry {t:?} is not row:col"))?;
                Ok((parse_one(r)?, parse_one(c)?))
            })
            .collect(),
    }
}
