//! Spectral sweeps, resolution convergence and Hartman width scans.
//!
//! Every energy is solved independently against a shared immutable
//! [`Chain`], so results do not depend on the grid they are part of or on
//! the number of worker threads.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Profile, Shape, StretchMode, DEFAULT_FLATNESS_TOL};
use crate::hamiltonian::{
    lead_hopping, Chain, ChainError, DEFAULT_INTERVALS, MAX_INTERVALS, MIN_INTERVALS,
};
use crate::observables::{
    classical_delay, default_delay_step, principal_phase, unwrap_phases, wigner_delay_with,
    DelayEstimate, PointFlag, Spectrum, SpectrumMeta, DEFAULT_DELAY_HALVINGS,
};
use crate::scattering::{solve_smatrix, SMatrixPoint, ScatteringError};
use crate::units::mev_to_hartree;

/// Largest allowed `|ΔT|` between successive resolutions.
pub const CONVERGENCE_TOL: f64 = 1e-4;

/// Spectra stay below this fraction of the band width `4 t0`.
pub const BAND_MARGIN: f64 = 0.5;

/// Largest energy grid accepted by [`SweepConfig::validate`].
pub const MAX_ENERGIES: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid `{field}`: {message}")]
    Config {
        field: &'static str,
        message: String,
    },
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridSpacing {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HartmanSettings {
    pub stretches: Vec<f64>,
    pub probe_mev: f64,
    pub mode: StretchMode,
}

impl Default for HartmanSettings {
    fn default() -> Self {
        HartmanSettings {
            stretches: vec![0.5, 0.75, 1.0, 1.25, 1.5],
            probe_mev: 50.0,
            mode: StretchMode::Both,
        }
    }
}

/// Everything needed to reproduce a spectrum. Energies are in meV.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub profile: Profile,
    /// Endpoint slope tolerance the profile was validated with.
    pub flatness_tol: f64,
    /// Particle mass in electron masses.
    pub mass: f64,
    pub e_min_mev: f64,
    pub e_max_mev: f64,
    pub n_energies: usize,
    pub spacing: GridSpacing,
    /// Lattice intervals across `[0, L]`; `a = L / intervals`.
    pub intervals: usize,
    pub auto_converge: bool,
    /// Resolution doublings tried by [`converge_resolution`].
    pub max_halvings: u32,
    /// Fixed delay stencil step; `None` uses `max(1e-4 E, 1e-4 meV)`.
    pub delay_step_mev: Option<f64>,
    pub delay_halvings: u32,
    /// Phase steps above this (radians) trigger grid refinement.
    pub phase_jump_threshold: f64,
    /// Smallest energy step produced by refinement.
    pub phase_floor_mev: f64,
    pub max_refinements: u32,
    /// Worker threads; `None` lets the pool decide.
    pub threads: Option<usize>,
    pub hartman: HartmanSettings,
}

impl SweepConfig {
    pub fn new(profile: Profile) -> Self {
        SweepConfig {
            profile,
            flatness_tol: DEFAULT_FLATNESS_TOL,
            mass: 1.0,
            e_min_mev: 0.5,
            e_max_mev: 120.0,
            n_energies: 600,
            spacing: GridSpacing::Log,
            intervals: DEFAULT_INTERVALS,
            auto_converge: true,
            max_halvings: 3,
            delay_step_mev: None,
            delay_halvings: DEFAULT_DELAY_HALVINGS,
            phase_jump_threshold: 0.5 * PI,
            phase_floor_mev: 1e-6,
            max_refinements: 8,
            threads: None,
            hartman: HartmanSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |field: &'static str, message: String| Err(SweepError::Config { field, message });
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return bad("mass", format!("mass = {} must be > 0", self.mass));
        }
        if !(self.e_min_mev.is_finite() && self.e_min_mev > 0.0) {
            return bad(
                "e_min_mev",
                format!("e_min_mev = {} must be > 0", self.e_min_mev),
            );
        }
        if !(self.e_max_mev.is_finite() && self.e_max_mev > self.e_min_mev) {
            return bad(
                "e_max_mev",
                format!(
                    "e_max_mev = {} must exceed e_min_mev = {}",
                    self.e_max_mev, self.e_min_mev
                ),
            );
        }
        if !(2..=MAX_ENERGIES).contains(&self.n_energies) {
            return bad(
                "n_energies",
                format!(
                    "n_energies = {} must lie in [2, {MAX_ENERGIES}]",
                    self.n_energies
                ),
            );
        }
        if !(MIN_INTERVALS..=MAX_INTERVALS).contains(&self.intervals) {
            return bad(
                "resolution",
                format!(
                    "resolution = {} must lie in [{MIN_INTERVALS}, {MAX_INTERVALS}]",
                    self.intervals
                ),
            );
        }
        let finest = 1usize
            .checked_shl(self.max_halvings)
            .and_then(|f| self.intervals.checked_mul(f));
        if self.auto_converge && !finest.is_some_and(|n| n <= MAX_INTERVALS) {
            return bad(
                "max_halvings",
                format!(
                    "resolution = {} doubled {} times exceeds {MAX_INTERVALS} intervals",
                    self.intervals, self.max_halvings
                ),
            );
        }
        let a = self.profile.length() / self.intervals as f64;
        let top = BAND_MARGIN * 4.0 * lead_hopping(a, self.mass);
        if mev_to_hartree(self.e_max_mev) >= top {
            return bad(
                "e_max_mev",
                format!(
                    "e_max_mev = {} exceeds {BAND_MARGIN} of the band width at this resolution",
                    self.e_max_mev
                ),
            );
        }
        if let Some(h) = self.delay_step_mev {
            if !(h.is_finite() && h > 0.0) {
                return bad(
                    "delay_step_mev",
                    format!("delay_step_mev = {h} must be > 0"),
                );
            }
        }
        if !(self.phase_jump_threshold > 0.0 && self.phase_jump_threshold < PI) {
            return bad(
                "phase_jump_threshold",
                format!(
                    "phase_jump_threshold = {} must lie in (0, π)",
                    self.phase_jump_threshold
                ),
            );
        }
        if !(self.phase_floor_mev > 0.0) {
            return bad(
                "phase_floor_mev",
                format!("phase_floor_mev = {} must be > 0", self.phase_floor_mev),
            );
        }
        if self.threads == Some(0) {
            return bad("threads", "threads must be >= 1".into());
        }
        let hs = &self.hartman;
        if hs.stretches.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return bad("hartman.stretches", "hartman stretches must be > 0".into());
        }
        if !(hs.probe_mev.is_finite() && hs.probe_mev > 0.0) {
            return bad(
                "hartman.probe_mev",
                format!("hartman probe_mev = {} must be > 0", hs.probe_mev),
            );
        }
        Ok(())
    }

    /// The base energy grid in Hartree.
    pub fn energy_grid(&self) -> Vec<f64> {
        let (lo, hi) = (
            mev_to_hartree(self.e_min_mev),
            mev_to_hartree(self.e_max_mev),
        );
        let n = self.n_energies;
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    return hi;
                }
                let s = i as f64 / (n - 1) as f64;
                match self.spacing {
                    GridSpacing::Log => lo * (hi / lo).powf(s),
                    GridSpacing::Linear => lo + (hi - lo) * s,
                }
            })
            .collect()
    }

    fn delay_step(&self, energy: f64) -> f64 {
        match self.delay_step_mev {
            Some(h) => mev_to_hartree(h),
            None => default_delay_step(energy),
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool, SweepError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.threads {
            b = b.num_threads(n);
        }
        Ok(b.build()?)
    }
}

pub fn describe_profile(profile: &Profile) -> String {
    let l = profile.length();
    match profile.shape() {
        Shape::Flat => format!("flat L={l}"),
        Shape::SingleGaussian {
            amplitude,
            center,
            sigma,
        } => format!("single_gaussian L={l} A={amplitude} x0={center} sigma={sigma}"),
        Shape::DoubleGaussian {
            amplitude,
            center,
            sigma,
            shift,
            parity,
        } => format!(
            "double_gaussian L={l} A={amplitude} x0={center} sigma={sigma} s={shift} parity={parity:?}"
        ),
        Shape::Tabulated(t) => format!("tabulated L={l} samples={}", t.samples().len()),
    }
}

#[derive(Debug, Clone, Copy)]
struct PointResult {
    s: SMatrixPoint,
    delay: DelayEstimate,
}

fn solve_point(
    chain: &Chain,
    energy: f64,
    config: &SweepConfig,
) -> Result<PointResult, ScatteringError> {
    let s = solve_smatrix(chain, energy)?;
    let delay = wigner_delay_with(
        chain,
        energy,
        config.delay_step(energy),
        config.delay_halvings,
    )?;
    Ok(PointResult { s, delay })
}

/// Spectrum of `config.profile` at the configured fixed resolution.
pub fn run_spectrum(config: &SweepConfig) -> Result<Spectrum, SweepError> {
    config.validate()?;
    let chain = Chain::build(&config.profile, config.intervals, config.mass)?;
    spectrum_on_chain(&chain, config)
}

/// Spectrum on a prebuilt chain; the profile in `config` supplies the arc
/// length for the classical delay.
pub fn spectrum_on_chain(chain: &Chain, config: &SweepConfig) -> Result<Spectrum, SweepError> {
    let pool = config.pool()?;
    let solve_all = |energies: &[f64]| -> Vec<(f64, Result<PointResult, ScatteringError>)> {
        pool.install(|| {
            energies
                .par_iter()
                .map(|&e| (e, solve_point(chain, e, config)))
                .collect()
        })
    };

    let mut excluded = Vec::new();
    let mut points: Vec<(f64, PointResult)> = Vec::new();
    let mut absorb = |batch: Vec<(f64, Result<PointResult, ScatteringError>)>,
                      points: &mut Vec<(f64, PointResult)>| {
        for (e, r) in batch {
            match r {
                Ok(p) => points.push((e, p)),
                Err(err) => excluded.push((e, err.to_string())),
            }
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
    };
    absorb(solve_all(&config.energy_grid()), &mut points);

    let floor = mev_to_hartree(config.phase_floor_mev);
    let phases_of = |points: &[(f64, PointResult)]| {
        let raw: Vec<f64> = points.iter().map(|(_, p)| principal_phase(&p.s)).collect();
        unwrap_phases(&raw)
    };
    for _ in 0..config.max_refinements {
        let phases = phases_of(&points);
        let inserts: Vec<f64> = (0..points.len().saturating_sub(1))
            .filter(|&i| {
                (phases[i + 1] - phases[i]).abs() > config.phase_jump_threshold
                    && points[i + 1].0 - points[i].0 > 2.0 * floor
            })
            .map(|i| 0.5 * (points[i].0 + points[i + 1].0))
            .collect();
        if inserts.is_empty() {
            break;
        }
        absorb(solve_all(&inserts), &mut points);
    }

    let phases = phases_of(&points);
    let arc_length = config.profile.arc_length(0.0, config.profile.length())?;
    let mut flags: Vec<PointFlag> = points
        .iter()
        .map(|(_, p)| {
            if p.delay.converged {
                PointFlag::Ok
            } else {
                PointFlag::DelayUnconverged
            }
        })
        .collect();
    for i in 0..points.len().saturating_sub(1) {
        if (phases[i + 1] - phases[i]).abs() > config.phase_jump_threshold {
            flags[i] = PointFlag::PhaseUnresolved;
        }
    }

    Ok(Spectrum {
        energies: points.iter().map(|(e, _)| *e).collect(),
        transmission: points.iter().map(|(_, p)| p.s.transmission()).collect(),
        reflection: points.iter().map(|(_, p)| p.s.reflection()).collect(),
        friedel_phase: phases,
        wigner_delay: points.iter().map(|(_, p)| p.delay.tau).collect(),
        classical_delay: points
            .iter()
            .map(|(e, _)| classical_delay(*e, arc_length, config.mass))
            .collect(),
        flags,
        meta: SpectrumMeta {
            profile: describe_profile(&config.profile),
            mass: config.mass,
            spacing: chain.spacing(),
            arc_length,
            excluded,
        },
    })
}

/// Result of [`converge_resolution`].
#[derive(Debug, Clone)]
pub struct Convergence {
    pub intervals: usize,
    pub spacing: f64,
    pub spectrum: Spectrum,
    pub converged: bool,
    /// `(intervals, max |ΔT| against the previous resolution)` per doubling.
    pub history: Vec<(usize, f64)>,
}

/// Largest `|ΔT|` over energies present in both spectra.
pub fn max_transmission_change(a: &Spectrum, b: &Spectrum) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut worst: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let (ea, eb) = (a.energies[i], b.energies[j]);
        if ea == eb {
            worst = worst.max((a.transmission[i] - b.transmission[j]).abs());
            i += 1;
            j += 1;
        } else if ea < eb {
            i += 1;
        } else {
            j += 1;
        }
    }
    worst
}

/// Doubles the resolution until the transmission changes by less than
/// [`CONVERGENCE_TOL`] at every common energy.
pub fn converge_resolution(config: &SweepConfig) -> Result<Convergence, SweepError> {
    config.validate()?;
    let mut intervals = config.intervals;
    let mut prev = run_spectrum(config)?;
    let mut history = Vec::new();
    for _ in 0..config.max_halvings {
        let finer = SweepConfig {
            intervals: intervals * 2,
            ..config.clone()
        };
        let next = run_spectrum(&finer)?;
        let change = max_transmission_change(&prev, &next);
        intervals *= 2;
        history.push((intervals, change));
        prev = next;
        if change < CONVERGENCE_TOL {
            return Ok(Convergence {
                intervals,
                spacing: config.profile.length() / intervals as f64,
                spectrum: prev,
                converged: true,
                history,
            });
        }
    }
    Ok(Convergence {
        intervals,
        spacing: config.profile.length() / intervals as f64,
        spectrum: prev,
        converged: false,
        history,
    })
}

/// Runs [`converge_resolution`] when `auto_converge` is set, otherwise a
/// single fixed-resolution spectrum.
pub fn run(config: &SweepConfig) -> Result<Convergence, SweepError> {
    if config.auto_converge {
        converge_resolution(config)
    } else {
        let spectrum = run_spectrum(config)?;
        Ok(Convergence {
            intervals: config.intervals,
            spacing: spectrum.meta.spacing,
            spectrum,
            converged: true,
            history: Vec::new(),
        })
    }
}

/// Indices of local transmission maxima above `threshold`.
pub fn resonance_peaks(transmission: &[f64], threshold: f64) -> Vec<usize> {
    (1..transmission.len().saturating_sub(1))
        .filter(|&i| {
            let t = transmission[i];
            t > threshold && t > transmission[i - 1] && t >= transmission[i + 1]
        })
        .collect()
}

/// Golden-section search for the transmission maximum in `[lo, hi]`.
pub fn locate_resonance(
    chain: &Chain,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<(f64, f64), ScatteringError> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let t = |e: f64| solve_smatrix(chain, e).map(|p| p.transmission());
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut tc, mut td) = (t(c)?, t(d)?);
    while b - a > tol {
        if tc > td {
            b = d;
            d = c;
            td = tc;
            c = b - g * (b - a);
            tc = t(c)?;
        } else {
            a = c;
            c = d;
            tc = td;
            d = a + g * (b - a);
            td = t(d)?;
        }
    }
    let e = 0.5 * (a + b);
    Ok((e, t(e)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HartmanRow {
    pub stretch: f64,
    pub arc_length: f64,
    pub wigner_delay: f64,
    pub classical_delay: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute deviation from the fitted line.
    pub max_residual: f64,
    /// `max_residual` relative to the spread of the fitted values.
    pub relative_residual: f64,
}

/// Least-squares line through `(x, y)`; `None` with fewer than two distinct `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 1e-12 * mx.abs().max(1.0).powi(2) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).abs())
        .fold(0.0, f64::max);
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(*v), h.max(*v))
        });
    Some(LinearFit {
        slope,
        intercept,
        max_residual,
        relative_residual: max_residual / (hi - lo),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HartmanScan {
    pub probe_energy: f64,
    pub rows: Vec<HartmanRow>,
    /// `(stretch, reason)` for deformations that could not be evaluated.
    pub skipped: Vec<(f64, String)>,
    pub fit: Option<LinearFit>,
}

/// Wigner delay at `probe_energy` (Hartree) for stretched copies of `base`,
/// with a linear fit of delay against arc length. Resolution, mass, stretch
/// mode and delay stencil come from `config`.
pub fn hartman_scan(
    base: &Profile,
    stretches: &[f64],
    probe_energy: f64,
    config: &SweepConfig,
) -> Result<HartmanScan, SweepError> {
    let pool = config.pool()?;
    let mut ordered: Vec<f64> = stretches.to_vec();
    ordered.sort_by(f64::total_cmp);
    let results: Vec<(f64, Result<HartmanRow, String>)> = pool.install(|| {
        ordered
            .par_iter()
            .map(|&c| {
                let row = (|| -> Result<HartmanRow, String> {
                    let p = base
                        .stretched(c, config.hartman.mode, config.flatness_tol)
                        .map_err(|e| e.to_string())?;
                    let chain = Chain::build(&p, config.intervals, config.mass)
                        .map_err(|e| e.to_string())?;
                    let d = p.arc_length(0.0, p.length()).map_err(|e| e.to_string())?;
                    let delay = wigner_delay_with(
                        &chain,
                        probe_energy,
                        config.delay_step(probe_energy),
                        config.delay_halvings,
                    )
                    .map_err(|e| e.to_string())?;
                    Ok(HartmanRow {
                        stretch: c,
                        arc_length: d,
                        wigner_delay: delay.tau,
                        classical_delay: classical_delay(probe_energy, d, config.mass),
                        converged: delay.converged,
                    })
                })();
                (c, row)
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (c, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(msg) => skipped.push((c, msg)),
        }
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.arc_length).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.wigner_delay).collect();
    Ok(HartmanScan {
        probe_energy,
        fit: linear_fit(&xs, &ys),
        rows,
        skipped,
    })
}
