//! Transmission, Friedel phase and time delays derived from S-matrices.

use std::f64::consts::PI;

use serde::Serialize;

use crate::hamiltonian::Chain;
use crate::scattering::{solve_smatrix, SMatrixPoint, ScatteringError};
use crate::units::mev_to_hartree;

/// Number of scattering channels of a two-terminal wire.
pub const CHANNELS: f64 = 2.0;

/// Relative change allowed when halving the delay stencil step.
pub const DELAY_STEP_RTOL: f64 = 1e-3;

/// Halvings attempted before a delay is flagged as unconverged.
pub const DEFAULT_DELAY_HALVINGS: u32 = 4;

/// `(T, R) = (|S21|², |S11|²)` for incidence from the left.
pub fn transmission_reflection(p: &SMatrixPoint) -> (f64, f64) {
    (p.transmission(), p.reflection())
}

/// Maps an angle to `(-π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Principal argument of `det S`.
pub fn principal_phase(p: &SMatrixPoint) -> f64 {
    p.s.det().arg()
}

/// Cumulatively unwraps principal phases; the first entry is kept as is.
pub fn unwrap_phases(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut acc = match raw.first() {
        Some(&p) => p,
        None => return out,
    };
    out.push(acc);
    for w in raw.windows(2) {
        acc += wrap_phase(w[1] - w[0]);
        out.push(acc);
    }
    out
}

/// Friedel phase `arg det S` over an energy-ordered list of points,
/// unwrapped so that consecutive values differ by less than π.
pub fn friedel_phase(points: &[SMatrixPoint]) -> Vec<f64> {
    let raw: Vec<f64> = points.iter().map(principal_phase).collect();
    unwrap_phases(&raw)
}

/// Indices `i` for which the step from `phases[i]` to `phases[i + 1]`
/// exceeds `threshold` in magnitude.
pub fn phase_jumps(phases: &[f64], threshold: f64) -> Vec<usize> {
    phases
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[1] - w[0]).abs() > threshold)
        .map(|(i, _)| i)
        .collect()
}

/// Default central-difference step: `max(1e-4 E, 1e-4 meV)`.
pub fn default_delay_step(energy: f64) -> f64 {
    (1e-4 * energy).max(mev_to_hartree(1e-4))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayEstimate {
    /// Wigner delay in atomic time units.
    pub tau: f64,
    /// Step of the accepted stencil.
    pub step: f64,
    pub converged: bool,
}

fn central_delay(chain: &Chain, energy: f64, step: f64) -> Result<f64, ScatteringError> {
    let lo = principal_phase(&solve_smatrix(chain, energy - step)?);
    let mid = principal_phase(&solve_smatrix(chain, energy)?);
    let hi = principal_phase(&solve_smatrix(chain, energy + step)?);
    let dphi = wrap_phase(mid - lo) + wrap_phase(hi - mid);
    Ok(dphi / (2.0 * CHANNELS * step))
}

/// Wigner delay `(ħ/N) dΦ_F/dE` by central differences, halving `step`
/// until successive estimates agree to [`DELAY_STEP_RTOL`].
pub fn wigner_delay(
    chain: &Chain,
    energy: f64,
    step: f64,
) -> Result<DelayEstimate, ScatteringError> {
    wigner_delay_with(chain, energy, step, DEFAULT_DELAY_HALVINGS)
}

pub fn wigner_delay_with(
    chain: &Chain,
    energy: f64,
    step: f64,
    max_halvings: u32,
) -> Result<DelayEstimate, ScatteringError> {
    let mut h = step.min(0.5 * energy);
    let mut prev = central_delay(chain, energy, h)?;
    for _ in 0..max_halvings.max(1) {
        h *= 0.5;
        let next = central_delay(chain, energy, h)?;
        if (next - prev).abs() <= DELAY_STEP_RTOL * next.abs() {
            return Ok(DelayEstimate {
                tau: next,
                step: h,
                converged: true,
            });
        }
        prev = next;
    }
    Ok(DelayEstimate {
        tau: prev,
        step: h,
        converged: false,
    })
}

/// Time `√(m0 / 2E) D` for a classical particle to traverse arc length `D`.
pub fn classical_delay(energy: f64, arc_length: f64, mass: f64) -> f64 {
    (mass / (2.0 * energy)).sqrt() * arc_length
}

/// Per-energy diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointFlag {
    Ok,
    /// The delay stencil did not settle within the allowed halvings.
    DelayUnconverged,
    /// The phase step to the next energy stayed large at the finest grid step.
    PhaseUnresolved,
}

impl PointFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            PointFlag::Ok => "ok",
            PointFlag::DelayUnconverged => "delay_unconverged",
            PointFlag::PhaseUnresolved => "phase_unresolved",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(PointFlag::Ok),
            "delay_unconverged" => Some(PointFlag::DelayUnconverged),
            "phase_unresolved" => Some(PointFlag::PhaseUnresolved),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumMeta {
    pub profile: String,
    pub mass: f64,
    pub spacing: f64,
    pub arc_length: f64,
    /// Energies (Hartree) dropped because the solver failed, with the reason.
    pub excluded: Vec<(f64, String)>,
}

/// Spectral data in atomic units, sorted by energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    pub transmission: Vec<f64>,
    pub reflection: Vec<f64>,
    pub friedel_phase: Vec<f64>,
    pub wigner_delay: Vec<f64>,
    pub classical_delay: Vec<f64>,
    pub flags: Vec<PointFlag>,
    pub meta: SpectrumMeta,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Index of the grid energy closest to `energy`.
    pub fn nearest(&self, energy: f64) -> Option<usize> {
        self.energies
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - energy).abs().total_cmp(&(b.1 - energy).abs()))
            .map(|(i, _)| i)
    }

    /// Descriptions of every violated structural invariant.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.energies.len();
        for (name, len) in [
            ("transmission", self.transmission.len()),
            ("reflection", self.reflection.len()),
            ("friedel_phase", self.friedel_phase.len()),
            ("wigner_delay", self.wigner_delay.len()),
            ("classical_delay", self.classical_delay.len()),
            ("flags", self.flags.len()),
        ] {
            if len != n {
                out.push(format!("{name} has {len} entries, expected {n}"));
            }
        }
        if !out.is_empty() {
            return out;
        }
        for i in 0..n {
            let (t, r) = (self.transmission[i], self.reflection[i]);
            if (t + r - 1.0).abs() > 1e-10 || !(0.0..=1.0 + 1e-10).contains(&t) {
                out.push(format!("T + R = {} at index {i}", t + r));
            }
            if self.classical_delay[i] <= 0.0 {
                out.push(format!("non-positive classical delay at index {i}"));
            }
        }
        for i in 1..n {
            if self.energies[i] <= self.energies[i - 1] {
                out.push(format!("energies not increasing at index {i}"));
            }
            if (self.friedel_phase[i] - self.friedel_phase[i - 1]).abs() >= PI {
                out.push(format!("phase discontinuity at index {i}"));
            }
            if self.classical_delay[i] >= self.classical_delay[i - 1] {
                out.push(format!("classical delay not decreasing at index {i}"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scattering::{group_velocity, lead_momentum};

    #[test]
    fn wrap_into_principal_interval() {
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
        assert!((wrap_phase(0.3) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn unwrap_recovers_linear_ramp() {
        let truth: Vec<f64> = (0..50).map(|i| 0.9 * i as f64 - 2.0).collect();
        let raw: Vec<f64> = truth.iter().map(|&p| wrap_phase(p)).collect();
        let un = unwrap_phases(&raw);
        for (a, b) in un.iter().zip(&truth) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(phase_jumps(&un, 1.0).is_empty());
        assert_eq!(phase_jumps(&un, 0.5).len(), 49);
    }

    #[test]
    fn single_point_phase_is_principal() {
        let chain = Chain::free(101, 1.0, 1.0).unwrap();
        let p = solve_smatrix(&chain, 0.3).unwrap();
        let ph = friedel_phase(&[p]);
        assert_eq!(ph, vec![p.s.det().arg()]);
        assert!(ph[0] > -PI && ph[0] <= PI);
    }

    #[test]
    fn flat_friedel_phase_tracks_momentum() {
        let chain = Chain::free(21, 1.0, 1.0).unwrap();
        let t0 = chain.lead_hopping();
        let energies: Vec<f64> = (1..=40).map(|i| 0.01 * t0 * i as f64).collect();
        let pts: Vec<SMatrixPoint> = energies
            .iter()
            .map(|&e| solve_smatrix(&chain, e).unwrap())
            .collect();
        let ph = friedel_phase(&pts);
        let l = chain.length();
        for i in 1..pts.len() {
            let expect = 2.0 * l * (pts[i].k - pts[0].k);
            assert!((ph[i] - ph[0] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn flat_wigner_delay_is_free_flight() {
        let chain = Chain::free(1001, 0.2, 1.0).unwrap();
        let t0 = chain.lead_hopping();
        for e in [1e-4, 1e-3, 4e-3] {
            let d = wigner_delay(&chain, e, default_delay_step(e)).unwrap();
            let k = lead_momentum(e, t0, chain.spacing()).unwrap();
            let expect = chain.length() / group_velocity(k, t0, chain.spacing());
            assert!(d.converged);
            assert!(
                (d.tau - expect).abs() < 1e-3 * expect,
                "{} vs {expect}",
                d.tau
            );
        }
    }

    #[test]
    fn classical_delay_scaling() {
        let t1 = classical_delay(0.01, 100.0, 1.0);
        let t2 = classical_delay(0.005, 100.0, 1.0);
        assert!((t2 / t1 - 2f64.sqrt()).abs() < 1e-14);
        assert!((classical_delay(0.01, 200.0, 1.0) / t1 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn classical_matches_flat_lattice_in_continuum_limit() {
        // E = 2 t0 (1 - cos ka) with small ka: lattice flight time → √(m/2E) L.
        let chain = Chain::free(20_001, 0.05, 1.0).unwrap();
        let t0 = chain.lead_hopping();
        let e = 2e-3;
        let k = lead_momentum(e, t0, chain.spacing()).unwrap();
        let lattice = chain.length() / group_velocity(k, t0, chain.spacing());
        let classical = classical_delay(e, chain.length(), 1.0);
        assert!((lattice - classical).abs() < 1e-5 * classical);
    }

    #[test]
    fn default_step_floor() {
        assert_eq!(default_delay_step(1.0), 1e-4);
        assert_eq!(default_delay_step(1e-9), mev_to_hartree(1e-4));
    }

    #[test]
    fn flag_names_round_trip() {
        for f in [
            PointFlag::Ok,
            PointFlag::DelayUnconverged,
            PointFlag::PhaseUnresolved,
        ] {
            assert_eq!(PointFlag::parse(f.as_str()), Some(f));
        }
        assert_eq!(PointFlag::parse("bogus"), None);
    }
}
