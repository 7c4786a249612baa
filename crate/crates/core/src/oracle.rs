//! Reference solvers for cross-checking the production scattering solver.
//!
//! The transfer-matrix route propagates the two lead plane waves through the
//! chain site by site and shares no code with the wave-matching solver
//! beyond the lead dispersion. The square well is the textbook continuum
//! result.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::hamiltonian::{lead_hopping, Chain, ChainError};
use crate::observables::wigner_delay;
use crate::scattering::{group_velocity, lead_momentum, solve_smatrix, SMatrix, ScatteringError};
use crate::units::mev_to_hartree;

/// Largest chain the transfer-matrix product is trusted for.
pub const MAX_TRANSFER_SITES: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("outside the transfer-matrix regime: {0}")]
    Regime(String),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    TransferMatrix,
    AnalyticWell,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub energy: f64,
    pub s_ref: SMatrix,
    pub method: OracleMethod,
}

type Mat2 = [[Complex64; 2]; 2];

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn inv(m: &Mat2) -> Mat2 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ]
}

/// S-matrix from the product of site transfer matrices.
///
/// Valid for `n_sites <= 200` and `E ∈ [0.1, 3.9] t0`.
pub fn transfer_matrix_smatrix(chain: &Chain, energy: f64) -> Result<OracleResult, OracleError> {
    let n = chain.n_sites();
    let t0 = chain.lead_hopping();
    if n > MAX_TRANSFER_SITES {
        return Err(OracleError::Regime(format!(
            "{n} sites exceeds {MAX_TRANSFER_SITES}"
        )));
    }
    if !(energy >= 0.1 * t0 && energy <= 3.9 * t0) {
        return Err(OracleError::Regime(format!(
            "energy {energy:e} outside [0.1, 3.9] t0"
        )));
    }
    let ka = lead_momentum(energy, t0, chain.spacing())? * chain.spacing();
    let e = |j: f64| Complex64::from_polar(1.0, ka * j);

    // (A, B) -> (psi_{-1}, psi_0) for psi_j = A e^{ikja} + B e^{-ikja}.
    let left: Mat2 = [[e(-1.0), e(1.0)], [e(0.0), e(0.0)]];
    // Site j maps (psi_{j-1}, psi_j) -> (psi_j, psi_{j+1}) using
    // (E - eps_j) psi_j + t_{j-1} psi_{j-1} + t_j psi_{j+1} = 0.
    let zero = Complex64::new(0.0, 0.0);
    let mut m = left;
    for j in 0..n {
        let t_prev = if j == 0 { t0 } else { chain.hopping()[j - 1] };
        let t_next = if j == n - 1 { t0 } else { chain.hopping()[j] };
        let step: Mat2 = [
            [zero, Complex64::new(1.0, 0.0)],
            [
                Complex64::new(-t_prev / t_next, 0.0),
                Complex64::new(-(energy - chain.onsite()[j]) / t_next, 0.0),
            ],
        ];
        m = mul(&step, &m);
    }
    // (C, D) -> (psi_{N}, psi_{N+1}) for psi_j = C e^{ik(j-N)a} + D e^{-ik(j-N)a}.
    let right: Mat2 = [[e(0.0), e(0.0)], [e(1.0), e(-1.0)]];
    let transfer = mul(&inv(&right), &m);
    if transfer
        .iter()
        .flatten()
        .any(|z| !z.is_finite() || z.norm() > 1e150)
    {
        return Err(OracleError::Regime("transfer product overflowed".into()));
    }

    // C = M11 A + M12 B, D = M21 A + M22 B.
    let [[m11, m12], [m21, m22]] = transfer;
    let det = m11 * m22 - m12 * m21;
    let s = SMatrix([[-m21 / m22, 1.0 / m22], [det / m22, m12 / m22]]);
    Ok(OracleResult {
        energy,
        s_ref: s,
        method: OracleMethod::TransferMatrix,
    })
}

/// Continuum S-matrix of a rectangular well of depth `depth < 0` and
/// `width`, with amplitudes referenced at the two well edges.
pub fn analytic_square_well(energy: f64, depth: f64, width: f64, mass: f64) -> OracleResult {
    let k = (2.0 * mass * energy).sqrt();
    let q = (2.0 * mass * (energy - depth)).sqrt();
    let (sin, cos) = (q * width).sin_cos();
    let t = 1.0 / Complex64::new(cos, -(k * k + q * q) / (2.0 * k * q) * sin);
    let r = Complex64::new(0.0, (q * q - k * k) / (2.0 * k * q) * sin) * t;
    OracleResult {
        energy,
        s_ref: SMatrix([[r, t], [t, r]]),
        method: OracleMethod::AnalyticWell,
    }
}

/// Continuum transmission through a rectangular well of depth `depth < 0`
/// and `width`, for a particle of mass `mass` at energy `energy > 0`.
pub fn analytic_square_well_transmission(energy: f64, depth: f64, width: f64, mass: f64) -> f64 {
    let k_in = (2.0 * mass * (energy - depth)).sqrt();
    let s = (k_in * width).sin();
    1.0 / (1.0 + depth * depth * s * s / (4.0 * energy * (energy - depth)))
}

/// Lattice transmission through a single-site impurity of strength `v` in a
/// free chain with hopping `t0`.
pub fn delta_impurity_transmission(v: f64, t0: f64, ka: f64) -> f64 {
    let x = v / (2.0 * t0 * ka.sin());
    1.0 / (1.0 + x * x)
}

/// Short chain with onsite energies and hoppings jittered around a free
/// chain of spacing 1 and unit mass.
pub fn random_chain(rng: &mut impl Rng) -> Result<Chain, ChainError> {
    let n = rng.gen_range(2..=60);
    let t0 = lead_hopping(1.0, 1.0);
    let onsite = (0..n)
        .map(|_| t0 * (2.0 + rng.gen_range(-0.2..0.2)))
        .collect();
    let hopping = (0..n - 1).map(|_| t0 * rng.gen_range(0.8..1.2)).collect();
    Chain::from_parts(1.0, t0, onsite, hopping)
}

/// Chain of spacing `a` with a rectangular well of `depth` on the first
/// `round(width / a)` sites, so that the well spans `[0, width)`.
pub fn square_well_chain(
    depth: f64,
    width: f64,
    spacing: f64,
    mass: f64,
) -> Result<Chain, ChainError> {
    let n = (width / spacing).round() as usize;
    let t0 = lead_hopping(spacing, mass);
    Chain::from_parts(
        spacing,
        t0,
        vec![2.0 * t0 + depth; n],
        vec![t0; n.saturating_sub(1)],
    )
}

/// Outcome of one reference comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub worst: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub passed: bool,
}

impl OracleCheck {
    fn new(name: &str, worst: f64, tolerance: f64, samples: usize) -> Self {
        OracleCheck {
            name: name.into(),
            worst,
            tolerance,
            samples,
            passed: worst < tolerance,
        }
    }
}

/// Largest entrywise wave-matching versus transfer-matrix deviation over
/// `chains` random chains, five energies each.
pub fn cross_validate_random(seed: u64, chains: usize) -> Result<OracleCheck, OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut samples = 0;
    for _ in 0..chains {
        let chain = random_chain(&mut rng)?;
        let t0 = chain.lead_hopping();
        for _ in 0..5 {
            let e = rng.gen_range(0.1..3.9) * t0;
            let reference = transfer_matrix_smatrix(&chain, e)?;
            let got = solve_smatrix(&chain, e)?;
            worst = worst.max(got.s.max_deviation(&reference.s_ref));
            samples += 1;
        }
    }
    Ok(OracleCheck::new(
        "transfer_matrix_random_chains",
        worst,
        1e-8,
        samples,
    ))
}

/// Relative deviation of lattice from continuum square-well transmission,
/// 20 meV deep and 200 a0 wide, over 1..100 meV at spacing 0.25 a0.
pub fn square_well_check() -> Result<OracleCheck, OracleError> {
    let (depth, width, mass, a) = (mev_to_hartree(-20.0), 200.0, 1.0, 0.25);
    let chain = square_well_chain(depth, width, a, mass)?;
    let mut worst: f64 = 0.0;
    let energies: Vec<f64> = (1..=100).map(|i| mev_to_hartree(i as f64)).collect();
    for &e in &energies {
        let lattice = solve_smatrix(&chain, e)?.transmission();
        let exact = analytic_square_well_transmission(e, depth, width, mass);
        worst = worst.max((lattice - exact).abs() / exact);
    }
    Ok(OracleCheck::new(
        "square_well_continuum",
        worst,
        1e-3,
        energies.len(),
    ))
}

/// Single-site impurity against its lattice closed form.
pub fn delta_impurity_check() -> Result<OracleCheck, OracleError> {
    let (n, v) = (81, 0.25);
    let t0 = lead_hopping(1.0, 1.0);
    let mut onsite = vec![2.0 * t0; n];
    onsite[n / 2] += v;
    let chain = Chain::from_parts(1.0, t0, onsite, vec![t0; n - 1])?;
    let mut worst: f64 = 0.0;
    let mut samples = 0;
    for i in 1..40 {
        let e = 0.1 * i as f64 * t0;
        let ka = lead_momentum(e, t0, 1.0)?;
        let expected = delta_impurity_transmission(v, t0, ka);
        worst = worst.max((solve_smatrix(&chain, e)?.transmission() - expected).abs());
        samples += 1;
    }
    Ok(OracleCheck::new("delta_impurity", worst, 1e-6, samples))
}

/// Flat wire of length 1000 a0: `|T - 1|` and the relative error of the
/// Wigner delay against `L / v_g`, over 1..100 meV.
pub fn flat_wire_checks() -> Result<[OracleCheck; 2], OracleError> {
    let chain = Chain::free(5001, 0.2, 1.0)?;
    let (t0, a, l) = (chain.lead_hopping(), chain.spacing(), chain.length());
    let mut worst_t: f64 = 0.0;
    let mut worst_tau: f64 = 0.0;
    let energies: Vec<f64> = (0..50)
        .map(|i| mev_to_hartree(100f64.powf(i as f64 / 49.0)))
        .collect();
    for &e in &energies {
        let p = solve_smatrix(&chain, e)?;
        worst_t = worst_t.max((p.transmission() - 1.0).abs());
        let tau = wigner_delay(&chain, e, 1e-4 * e)?.tau;
        let free = l / group_velocity(p.k, t0, a);
        worst_tau = worst_tau.max((tau - free).abs() / free);
    }
    Ok([
        OracleCheck::new("flat_transmission", worst_t, 1e-10, energies.len()),
        OracleCheck::new("flat_wigner_delay", worst_tau, 1e-3, energies.len()),
    ])
}

/// Every reference comparison, in a fixed order.
pub fn oracle_suite(seed: u64) -> Result<Vec<OracleCheck>, OracleError> {
    let mut out = vec![
        cross_validate_random(seed, 50)?,
        square_well_check()?,
        delta_impurity_check()?,
    ];
    out.extend(flat_wire_checks()?);
    Ok(out)
}
