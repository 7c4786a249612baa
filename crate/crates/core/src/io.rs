//! Configuration files, CSV spectra, SVG plots and run manifests.
//!
//! Configurations are TOML documents. Lengths are in Bohr radii, energies in
//! meV, masses in electron masses. Output times are in femtoseconds.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Parity, Profile, Shape, StretchMode, Tabulated, DEFAULT_FLATNESS_TOL};
use crate::observables::{PointFlag, Spectrum};
use crate::sweep::{GridSpacing, HartmanScan, HartmanSettings, SweepConfig};
use crate::units::{au_time_to_fs, hartree_to_mev, AU_TIME_FS, HARTREE_MEV};

/// Header of spectrum CSV files.
pub const CSV_HEADER: &str = "E_meV,T,R,phase_F_rad,tau_W_fs,tau_C_fs,flag";

/// Header of Hartman scan CSV files.
pub const HARTMAN_CSV_HEADER: &str = "stretch,arc_length_bohr,tau_W_fs,tau_C_fs,converged";

const DEFAULT_LENGTH: f64 = 1000.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing required key(s): {0}")]
    Missing(String),
    #[error("invalid `{field}`: {constraint}")]
    Invalid { field: String, constraint: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Encode { path: PathBuf, message: String },
}

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct CsvError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HartmanSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    stretches: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    probe_mev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<StretchMode>,
}

/// On-disk form of a sweep configuration; every key but `profile` is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    center: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    parity: Option<Parity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    flatness_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    e_min_mev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    e_max_mev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_energies: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<GridSpacing>,
    #[serde(skip_serializing_if = "Option::is_none")]
    resolution: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    auto_converge: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_halvings: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delay_step_mev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delay_halvings: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase_jump_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase_floor_mev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_refinements: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hartman: Option<HartmanSection>,
}

fn invalid(field: &str, constraint: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        constraint: constraint.into(),
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a configuration from TOML text.
pub fn parse_config_str(text: &str) -> Result<SweepConfig, ConfigError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(1),
        message: e.message().to_string(),
    })?;
    build_config(file)
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<SweepConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

fn build_config(file: ConfigFile) -> Result<SweepConfig, ConfigError> {
    let kind = file
        .profile
        .clone()
        .ok_or_else(|| ConfigError::Missing("profile".into()))?;
    let length = file.length.unwrap_or(DEFAULT_LENGTH);
    if !(length.is_finite() && length > 0.0) {
        return Err(invalid("length", "must be a positive number of Bohr radii"));
    }
    let flatness_tol = file.flatness_tol.unwrap_or(DEFAULT_FLATNESS_TOL);
    if !(flatness_tol.is_finite() && flatness_tol > 0.0) {
        return Err(invalid("flatness_tol", "must be > 0"));
    }

    let reject = |field: &str, present: bool| {
        if present {
            Err(invalid(field, format!("not used by profile \"{kind}\"")))
        } else {
            Ok(())
        }
    };
    let gaussian_keys = file.amplitude.is_some() || file.center.is_some() || file.sigma.is_some();
    let default_single = Shape::default_single_gaussian(length);
    let (a0, c0, s0) = match default_single {
        Shape::SingleGaussian {
            amplitude,
            center,
            sigma,
        } => (amplitude, center, sigma),
        _ => unreachable!(),
    };
    let shape = match kind.as_str() {
        "flat" => {
            reject("amplitude/center/sigma", gaussian_keys)?;
            reject("shift", file.shift.is_some())?;
            reject("parity", file.parity.is_some())?;
            reject("samples", file.samples.is_some())?;
            Shape::Flat
        }
        "single_gaussian" => {
            reject("shift", file.shift.is_some())?;
            reject("parity", file.parity.is_some())?;
            reject("samples", file.samples.is_some())?;
            Shape::SingleGaussian {
                amplitude: file.amplitude.unwrap_or(a0),
                center: file.center.unwrap_or(c0),
                sigma: file.sigma.unwrap_or(s0),
            }
        }
        "double_gaussian" => {
            reject("samples", file.samples.is_some())?;
            Shape::DoubleGaussian {
                amplitude: file.amplitude.unwrap_or(a0),
                center: file.center.unwrap_or(c0),
                sigma: file.sigma.unwrap_or(s0),
                shift: file.shift.ok_or_else(|| ConfigError::Missing("shift".into()))?,
                parity: file.parity.ok_or_else(|| ConfigError::Missing("parity".into()))?,
            }
        }
        "tabulated" => {
            reject("amplitude/center/sigma", gaussian_keys)?;
            reject("shift", file.shift.is_some())?;
            reject("parity", file.parity.is_some())?;
            let samples = file
                .samples
                .clone()
                .ok_or_else(|| ConfigError::Missing("samples".into()))?;
            let t = Tabulated::from_samples(samples.into_iter().map(|[x, f]| (x, f)).collect())
                .map_err(|e| invalid("samples", e.to_string()))?;
            if file.length.is_some() && (t.length() - length).abs() > 1e-9 * length {
                return Err(invalid("length", "must equal the last sample position"));
            }
            Shape::Tabulated(t)
        }
        other => {
            return Err(invalid(
                "profile",
                format!(
                    "unknown profile \"{other}\"; expected flat, single_gaussian, double_gaussian or tabulated"
                ),
            ))
        }
    };
    let length = match &shape {
        Shape::Tabulated(t) => t.length(),
        _ => length,
    };
    let profile = Profile::with_flatness_tolerance(shape, length, flatness_tol)
        .map_err(|e| invalid("profile", e.to_string()))?;

    let mut c = SweepConfig::new(profile);
    c.flatness_tol = flatness_tol;
    if let Some(v) = file.mass {
        c.mass = v;
    }
    if let Some(v) = file.e_min_mev {
        c.e_min_mev = v;
    }
    if let Some(v) = file.e_max_mev {
        c.e_max_mev = v;
    }
    if let Some(v) = file.n_energies {
        c.n_energies = v;
    }
    if let Some(v) = file.grid {
        c.spacing = v;
    }
    if let Some(v) = file.resolution {
        if v < crate::hamiltonian::MIN_INTERVALS {
            return Err(invalid(
                "resolution",
                format!("must be at least {}", crate::hamiltonian::MIN_INTERVALS),
            ));
        }
        c.intervals = v;
    }
    if let Some(v) = file.auto_converge {
        c.auto_converge = v;
    }
    if let Some(v) = file.max_halvings {
        c.max_halvings = v;
    }
    c.delay_step_mev = file.delay_step_mev;
    if let Some(v) = file.delay_halvings {
        c.delay_halvings = v;
    }
    if let Some(v) = file.phase_jump_threshold {
        c.phase_jump_threshold = v;
    }
    if let Some(v) = file.phase_floor_mev {
        c.phase_floor_mev = v;
    }
    if let Some(v) = file.max_refinements {
        c.max_refinements = v;
    }
    c.threads = file.threads;
    if let Some(h) = file.hartman {
        let d = HartmanSettings::default();
        c.hartman = HartmanSettings {
            stretches: h.stretches.unwrap_or(d.stretches),
            probe_mev: h.probe_mev.unwrap_or(d.probe_mev),
            mode: h.mode.unwrap_or(d.mode),
        };
    }
    c.validate().map_err(|e| match e {
        crate::sweep::SweepError::Config { field, message } => invalid(field, message),
        other => invalid("config", other.to_string()),
    })?;
    Ok(c)
}

/// Serializes a configuration with every key explicit.
pub fn config_to_toml(config: &SweepConfig) -> String {
    let p = &config.profile;
    let mut f = ConfigFile {
        length: Some(p.length()),
        flatness_tol: Some(config.flatness_tol),
        mass: Some(config.mass),
        e_min_mev: Some(config.e_min_mev),
        e_max_mev: Some(config.e_max_mev),
        n_energies: Some(config.n_energies),
        grid: Some(config.spacing),
        resolution: Some(config.intervals),
        auto_converge: Some(config.auto_converge),
        max_halvings: Some(config.max_halvings),
        delay_step_mev: config.delay_step_mev,
        delay_halvings: Some(config.delay_halvings),
        phase_jump_threshold: Some(config.phase_jump_threshold),
        phase_floor_mev: Some(config.phase_floor_mev),
        max_refinements: Some(config.max_refinements),
        threads: config.threads,
        hartman: Some(HartmanSection {
            stretches: Some(config.hartman.stretches.clone()),
            probe_mev: Some(config.hartman.probe_mev),
            mode: Some(config.hartman.mode),
        }),
        ..ConfigFile::default()
    };
    match p.shape() {
        Shape::Flat => f.profile = Some("flat".into()),
        Shape::SingleGaussian {
            amplitude,
            center,
            sigma,
        } => {
            f.profile = Some("single_gaussian".into());
            f.amplitude = Some(*amplitude);
            f.center = Some(*center);
            f.sigma = Some(*sigma);
        }
        Shape::DoubleGaussian {
            amplitude,
            center,
            sigma,
            shift,
            parity,
        } => {
            f.profile = Some("double_gaussian".into());
            f.amplitude = Some(*amplitude);
            f.center = Some(*center);
            f.sigma = Some(*sigma);
            f.shift = Some(*shift);
            f.parity = Some(*parity);
        }
        Shape::Tabulated(t) => {
            f.profile = Some("tabulated".into());
            f.samples = Some(t.samples().iter().map(|&(x, y)| [x, y]).collect());
        }
    }
    toml::to_string(&f).expect("config fields are always representable in TOML")
}

/// Twelve significant digits in scientific notation.
pub fn format_value(x: f64) -> String {
    format!("{x:.11e}")
}

/// A spectrum in output units: meV, fs and radians.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    pub energy_mev: Vec<f64>,
    pub transmission: Vec<f64>,
    pub reflection: Vec<f64>,
    pub phase: Vec<f64>,
    pub tau_w_fs: Vec<f64>,
    pub tau_c_fs: Vec<f64>,
    pub flags: Vec<PointFlag>,
}

impl From<&Spectrum> for SpectrumTable {
    fn from(s: &Spectrum) -> Self {
        SpectrumTable {
            energy_mev: s.energies.iter().map(|&e| hartree_to_mev(e)).collect(),
            transmission: s.transmission.clone(),
            reflection: s.reflection.clone(),
            phase: s.friedel_phase.clone(),
            tau_w_fs: s.wigner_delay.iter().map(|&t| au_time_to_fs(t)).collect(),
            tau_c_fs: s
                .classical_delay
                .iter()
                .map(|&t| au_time_to_fs(t))
                .collect(),
            flags: s.flags.clone(),
        }
    }
}

impl SpectrumTable {
    pub fn len(&self) -> usize {
        self.energy_mev.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energy_mev.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(100 * (self.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for i in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                format_value(self.energy_mev[i]),
                format_value(self.transmission[i]),
                format_value(self.reflection[i]),
                format_value(self.phase[i]),
                format_value(self.tau_w_fs[i]),
                format_value(self.tau_c_fs[i]),
                self.flags[i].as_str()
            );
        }
        out
    }
}

/// Parses the CSV written by [`write_spectrum_csv`].
pub fn parse_spectrum_csv(text: &str) -> Result<SpectrumTable, CsvError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end_matches('\r') == CSV_HEADER => {}
        _ => {
            return Err(CsvError {
                line: 1,
                message: format!("expected header `{CSV_HEADER}`"),
            })
        }
    }
    let mut t = SpectrumTable {
        energy_mev: Vec::new(),
        transmission: Vec::new(),
        reflection: Vec::new(),
        phase: Vec::new(),
        tau_w_fs: Vec::new(),
        tau_c_fs: Vec::new(),
        flags: Vec::new(),
    };
    for (idx, raw) in lines.enumerate() {
        let line = idx + 2;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != 7 {
            return Err(CsvError {
                line,
                message: format!("expected 7 columns, found {}", cols.len()),
            });
        }
        let mut nums = [0.0; 6];
        for (k, c) in cols[..6].iter().enumerate() {
            nums[k] = c.trim().parse::<f64>().map_err(|_| CsvError {
                line,
                message: format!("column {} is not a number: `{c}`", k + 1),
            })?;
        }
        let flag = PointFlag::parse(cols[6].trim()).ok_or_else(|| CsvError {
            line,
            message: format!("unknown flag `{}`", cols[6]),
        })?;
        t.energy_mev.push(nums[0]);
        t.transmission.push(nums[1]);
        t.reflection.push(nums[2]);
        t.phase.push(nums[3]);
        t.tau_w_fs.push(nums[4]);
        t.tau_c_fs.push(nums[5]);
        t.flags.push(flag);
    }
    Ok(t)
}

fn write_file(path: &Path, contents: &str) -> Result<(), OutputError> {
    fs::write(path, contents).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_spectrum_csv(spectrum: &Spectrum, path: &Path) -> Result<(), OutputError> {
    write_file(path, &SpectrumTable::from(spectrum).to_csv())
}

pub fn read_spectrum_csv(path: &Path) -> Result<SpectrumTable, OutputError> {
    let text = fs::read_to_string(path).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_spectrum_csv(&text).map_err(|e| OutputError::Encode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn hartman_csv(scan: &HartmanScan) -> String {
    let mut out = String::from(HARTMAN_CSV_HEADER);
    out.push('\n');
    for r in &scan.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_value(r.stretch),
            format_value(r.arc_length),
            format_value(au_time_to_fs(r.wigner_delay)),
            format_value(au_time_to_fs(r.classical_delay)),
            r.converged
        );
    }
    out
}

pub fn write_hartman_csv(scan: &HartmanScan, path: &Path) -> Result<(), OutputError> {
    write_file(path, &hartman_csv(scan))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Roughly `target` round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return vec![lo];
    }
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Standalone SVG: transmission on the left axis, Wigner delay (solid) and
/// classical delay (dashed) on the right axis, both against energy.
pub fn render_svg(table: &SpectrumTable, title: &str) -> String {
    const W: f64 = 900.0;
    const H: f64 = 520.0;
    const LEFT: f64 = 80.0;
    const RIGHT: f64 = 90.0;
    const TOP: f64 = 50.0;
    const BOTTOM: f64 = 60.0;
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;

    let finite = |v: &[f64]| {
        v.iter()
            .copied()
            .filter(|x| x.is_finite())
            .collect::<Vec<_>>()
    };
    let es = finite(&table.energy_mev);
    let (e_lo, e_hi) = match (
        es.iter().copied().reduce(f64::min),
        es.iter().copied().reduce(f64::max),
    ) {
        (Some(a), Some(b)) if b > a => (a, b),
        (Some(a), _) => (a - 0.5, a + 0.5),
        _ => (0.0, 1.0),
    };
    let times: Vec<f64> = finite(&table.tau_w_fs)
        .into_iter()
        .chain(finite(&table.tau_c_fs))
        .collect();
    let t_hi = times.iter().copied().fold(0.0, f64::max).max(1e-12) * 1.05;
    let t_lo = times.iter().copied().fold(0.0, f64::min) * 1.05;
    let (y_lo, y_hi) = (0.0, 1.05);

    let sx = |e: f64| LEFT + (e - e_lo) / (e_hi - e_lo) * pw;
    let sy_left = |v: f64| TOP + ph - (v - y_lo) / (y_hi - y_lo) * ph;
    let sy_right = |v: f64| TOP + ph - (v - t_lo) / (t_hi - t_lo) * ph;
    let polyline = |ys: &[f64], scale: &dyn Fn(f64) -> f64| {
        let mut pts = String::new();
        for (e, y) in table.energy_mev.iter().zip(ys) {
            if e.is_finite() && y.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", sx(*e), scale(*y));
            }
        }
        pts.trim_end().to_string()
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#
    );
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"  <title>{}</title>"#, xml_escape(title));
    let _ = writeln!(
        s,
        r#"  <rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"  <rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(s, r#"  <g font-family="sans-serif" font-size="12">"#);
    for e in ticks(e_lo, e_hi, 8) {
        let x = sx(e);
        let _ = writeln!(
            s,
            r#"    <line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            TOP + ph,
            TOP + ph + 5.0
        );
        let _ = writeln!(
            s,
            r#"    <text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph + 20.0,
            tick_label(e)
        );
    }
    for v in ticks(y_lo, y_hi, 6) {
        let y = sy_left(v);
        let _ = writeln!(
            s,
            r##"    <line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#1f77b4"/>"##,
            LEFT - 5.0
        );
        let _ = writeln!(
            s,
            r##"    <text x="{:.2}" y="{:.2}" text-anchor="end" fill="#1f77b4">{}</text>"##,
            LEFT - 8.0,
            y + 4.0,
            tick_label(v)
        );
    }
    for v in ticks(t_lo, t_hi, 6) {
        let y = sy_right(v);
        let _ = writeln!(
            s,
            r##"    <line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#d62728"/>"##,
            LEFT + pw,
            LEFT + pw + 5.0
        );
        let _ = writeln!(
            s,
            r##"    <text x="{:.2}" y="{:.2}" text-anchor="start" fill="#d62728">{}</text>"##,
            LEFT + pw + 8.0,
            y + 4.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        s,
        r#"    <text x="{:.2}" y="{:.2}" text-anchor="middle">E (meV)</text>"#,
        LEFT + pw / 2.0,
        H - 15.0
    );
    let _ = writeln!(
        s,
        r##"    <text x="20" y="{:.2}" text-anchor="middle" fill="#1f77b4" transform="rotate(-90 20 {:.2})">T</text>"##,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    let rx = W - 20.0;
    let _ = writeln!(
        s,
        r##"    <text x="{rx}" y="{:.2}" text-anchor="middle" fill="#d62728" transform="rotate(90 {rx} {:.2})">τ (fs)</text>"##,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    let _ = writeln!(
        s,
        r#"    <text x="{:.2}" y="30" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        xml_escape(title)
    );
    let legend = [
        ("T", "#1f77b4", ""),
        ("τ_W", "#d62728", ""),
        ("τ_c", "#ff7f0e", r#" stroke-dasharray="6,4""#),
    ];
    for (i, (label, color, dash)) in legend.iter().enumerate() {
        let y = TOP + 18.0 + 18.0 * i as f64;
        let x = LEFT + pw - 90.0;
        let _ = writeln!(
            s,
            r#"    <line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            x + 30.0
        );
        let _ = writeln!(
            s,
            r#"    <text x="{:.2}" y="{:.2}">{label}</text>"#,
            x + 38.0,
            y + 4.0
        );
    }
    let _ = writeln!(s, "  </g>");
    let _ = writeln!(
        s,
        r##"  <polyline id="transmission" fill="none" stroke="#1f77b4" stroke-width="1.5" points="{}"/>"##,
        polyline(&table.transmission, &sy_left)
    );
    let _ = writeln!(
        s,
        r##"  <polyline id="classical-delay" fill="none" stroke="#ff7f0e" stroke-width="1.5" stroke-dasharray="6,4" points="{}"/>"##,
        polyline(&table.tau_c_fs, &sy_right)
    );
    let _ = writeln!(
        s,
        r##"  <polyline id="wigner-delay" fill="none" stroke="#d62728" stroke-width="1.5" points="{}"/>"##,
        polyline(&table.tau_w_fs, &sy_right)
    );
    s.push_str("</svg>\n");
    s
}

pub fn emit_plot(table: &SpectrumTable, title: &str, path: &Path) -> Result<(), OutputError> {
    write_file(path, &render_svg(table, title))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<(), OutputError> {
    let json = serde_json::to_string_pretty(value).map_err(|e| OutputError::Encode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    write_file(path, &(json + "\n"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitConventions {
    pub length: String,
    pub energy: String,
    pub time: String,
    pub mass: String,
    pub hartree_mev: f64,
    pub au_time_fs: f64,
}

impl Default for UnitConventions {
    fn default() -> Self {
        UnitConventions {
            length: "bohr".into(),
            energy: "meV".into(),
            time: "fs".into(),
            mass: "electron_mass".into(),
            hartree_mev: HARTREE_MEV,
            au_time_fs: AU_TIME_FS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostic {
    pub energy_mev: f64,
    pub issue: String,
}

/// Provenance record written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// The full configuration, every key explicit, as TOML.
    pub config: Option<String>,
    pub inputs: Vec<String>,
    pub units: UnitConventions,
    pub intervals: Option<usize>,
    pub lattice_constant: Option<f64>,
    pub converged: bool,
    pub convergence_history: Vec<(usize, f64)>,
    pub threads: Option<usize>,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub diagnostics: Vec<PointDiagnostic>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: None,
            inputs: Vec::new(),
            units: UnitConventions::default(),
            intervals: None,
            lattice_constant: None,
            converged: true,
            convergence_history: Vec::new(),
            threads: None,
            wall_time_s: 0.0,
            outputs: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn for_config(command: &str, config: &SweepConfig) -> Self {
        RunManifest {
            config: Some(config_to_toml(config)),
            intervals: Some(config.intervals),
            lattice_constant: Some(config.profile.length() / config.intervals as f64),
            threads: config.threads,
            ..Self::new(command)
        }
    }

    /// Collects flagged and excluded points of `spectrum`.
    pub fn record_spectrum(&mut self, spectrum: &Spectrum) {
        for (i, f) in spectrum.flags.iter().enumerate() {
            if *f != PointFlag::Ok {
                self.diagnostics.push(PointDiagnostic {
                    energy_mev: hartree_to_mev(spectrum.energies[i]),
                    issue: f.as_str().into(),
                });
            }
        }
        for (e, why) in &spectrum.meta.excluded {
            self.diagnostics.push(PointDiagnostic {
                energy_mev: hartree_to_mev(*e),
                issue: format!("excluded: {why}"),
            });
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), OutputError> {
        write_json(self, path)
    }
}
