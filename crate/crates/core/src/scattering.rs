//! Two-terminal scattering matrix of a [`Chain`] by wave-function matching.
//!
//! Both leads are semi-infinite flat lattices with onsite `2 t0` and hopping
//! `t0`. Eliminating the leads adds the retarded self-energy
//! `Σ = -t0 e^{ika}` to the two boundary sites, and an incoming wave of unit
//! amplitude becomes the source `2i t0 sin(ka)` on the boundary site it
//! enters through. Amplitudes are referenced at the two interfaces, `x = 0`
//! and `x = L`, so transmission phases include propagation across the region.

use num_complex::Complex64;
use thiserror::Error;

use crate::hamiltonian::Chain;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScatteringError {
    #[error("energy {energy:e} Ha is outside the propagating band (0, {band_top:e})")]
    Evanescent { energy: f64, band_top: f64 },
    #[error("linear system is singular at {energy:e} Ha")]
    Singular { energy: f64 },
}

/// Lead wave number for energy `e` on a flat lattice with hopping `t0`,
/// from `E = 2 t0 (1 - cos ka)`.
pub fn lead_momentum(energy: f64, t0: f64, spacing: f64) -> Result<f64, ScatteringError> {
    if !(energy > 0.0 && energy < 4.0 * t0) {
        return Err(ScatteringError::Evanescent {
            energy,
            band_top: 4.0 * t0,
        });
    }
    Ok((1.0 - energy / (2.0 * t0)).acos() / spacing)
}

/// Lattice group velocity `dE/dk = 2 t0 a sin(ka)` (ħ = 1).
pub fn group_velocity(k: f64, t0: f64, spacing: f64) -> f64 {
    2.0 * t0 * spacing * (k * spacing).sin()
}

/// A 2×2 scattering matrix laid out as `[[r_l, t_r], [t_l, r_r]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SMatrix(pub [[Complex64; 2]; 2]);

impl SMatrix {
    pub fn r_left(&self) -> Complex64 {
        self.0[0][0]
    }

    pub fn t_left(&self) -> Complex64 {
        self.0[1][0]
    }

    pub fn r_right(&self) -> Complex64 {
        self.0[1][1]
    }

    pub fn t_right(&self) -> Complex64 {
        self.0[0][1]
    }

    pub fn det(&self) -> Complex64 {
        let s = &self.0;
        s[0][0] * s[1][1] - s[0][1] * s[1][0]
    }

    /// Max-norm of `S†S - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let s = &self.0;
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut acc: Complex64 = s.iter().map(|row| row[i].conj() * row[j]).sum();
                if i == j {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    /// Max-norm of `S - Sᵀ`.
    pub fn reciprocity_defect(&self) -> f64 {
        (self.0[0][1] - self.0[1][0]).norm()
    }

    /// Largest entrywise modulus of the difference.
    pub fn max_deviation(&self, other: &SMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }
}

/// The scattering matrix at one energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SMatrixPoint {
    pub energy: f64,
    pub s: SMatrix,
    pub k: f64,
    pub unitarity_defect: f64,
}

impl SMatrixPoint {
    pub fn transmission(&self) -> f64 {
        self.s.t_left().norm_sqr()
    }

    pub fn reflection(&self) -> f64 {
        self.s.r_left().norm_sqr()
    }
}

/// LU factors of a complex tridiagonal matrix (no pivoting).
struct Tridiagonal {
    upper: Vec<Complex64>,
    pivots: Vec<Complex64>,
    lower: Vec<Complex64>,
}

impl Tridiagonal {
    /// Factors the matrix with diagonal `diag` and symmetric off-diagonal `off`.
    fn factor(diag: &[Complex64], off: &[f64]) -> Option<Self> {
        let n = diag.len();
        let mut pivots = Vec::with_capacity(n);
        let mut lower = Vec::with_capacity(n.saturating_sub(1));
        pivots.push(diag[0]);
        for i in 1..n {
            let prev = pivots[i - 1];
            if !(prev.norm() > f64::MIN_POSITIVE) || !prev.is_finite() {
                return None;
            }
            let l = off[i - 1] / prev;
            lower.push(l);
            pivots.push(diag[i] - l * off[i - 1]);
        }
        let last = pivots[n - 1];
        if !(last.norm() > f64::MIN_POSITIVE) || !last.is_finite() {
            return None;
        }
        Some(Tridiagonal {
            upper: off.iter().map(|&t| Complex64::new(t, 0.0)).collect(),
            pivots,
            lower,
        })
    }

    fn solve(&self, rhs: &mut [Complex64]) {
        let n = rhs.len();
        for i in 1..n {
            let prev = rhs[i - 1];
            rhs[i] -= self.lower[i - 1] * prev;
        }
        rhs[n - 1] /= self.pivots[n - 1];
        for i in (0..n - 1).rev() {
            let next = rhs[i + 1];
            rhs[i] = (rhs[i] - self.upper[i] * next) / self.pivots[i];
        }
    }
}

fn solve_once(chain: &Chain, energy: f64) -> Result<SMatrixPoint, ScatteringError> {
    let t0 = chain.lead_hopping();
    let a = chain.spacing();
    let k = lead_momentum(energy, t0, a)?;
    let ka = k * a;
    let sigma = -t0 * Complex64::from_polar(1.0, ka);
    let n = chain.n_sites();

    let mut diag: Vec<Complex64> = chain
        .onsite()
        .iter()
        .map(|&e| Complex64::new(energy - e, 0.0))
        .collect();
    diag[0] -= sigma;
    diag[n - 1] -= sigma;
    // Off-diagonal of (E - H) is +t because H_{i,i+1} = -t.
    let lu =
        Tridiagonal::factor(&diag, chain.hopping()).ok_or(ScatteringError::Singular { energy })?;

    let source = Complex64::new(0.0, 2.0 * t0 * ka.sin());
    let mut from_left = vec![Complex64::new(0.0, 0.0); n];
    from_left[0] = source;
    lu.solve(&mut from_left);
    let mut from_right = vec![Complex64::new(0.0, 0.0); n];
    from_right[n - 1] = source;
    lu.solve(&mut from_right);

    // Identical leads: the flux normalization sqrt(v_out / v_in) is 1.
    let one = Complex64::new(1.0, 0.0);
    let s = SMatrix([
        [from_left[0] - one, from_right[0]],
        [from_left[n - 1], from_right[n - 1] - one],
    ]);
    if !(s.0.iter().flatten().all(|z| z.is_finite())) {
        return Err(ScatteringError::Singular { energy });
    }
    Ok(SMatrixPoint {
        energy,
        s,
        k,
        unitarity_defect: s.unitarity_defect(),
    })
}

/// Scattering matrix of `chain` at `energy` (Hartree). A singular system is
/// retried once at `energy (1 + 1e-12)`.
pub fn solve_smatrix(chain: &Chain, energy: f64) -> Result<SMatrixPoint, ScatteringError> {
    match solve_once(chain, energy) {
        Err(ScatteringError::Singular { .. }) => solve_once(chain, energy * (1.0 + 1e-12)),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn lead_momentum_examples() {
        let t0 = 0.5;
        assert!((lead_momentum(2.0 * t0, t0, 1.0).unwrap() - PI / 2.0).abs() < 1e-15);
        let e = 1e-8;
        let k = lead_momentum(e, t0, 1.0).unwrap();
        assert!((k - (e / t0).sqrt()).abs() < 1e-6 * k);
        assert!(lead_momentum(4.0 * t0, t0, 1.0).is_err());
        assert!(lead_momentum(0.0, t0, 1.0).is_err());
        assert!(lead_momentum(-1.0, t0, 1.0).is_err());
        assert!(group_velocity(k, t0, 1.0) > 0.0);
    }

    #[test]
    fn flat_chain_transmits_with_propagation_phase() {
        let chain = Chain::free(301, 0.5, 1.0).unwrap();
        let t0 = chain.lead_hopping();
        for e in [0.01 * t0, 0.7 * t0, 2.0 * t0, 3.5 * t0] {
            let p = solve_smatrix(&chain, e).unwrap();
            assert!((p.s.t_left().norm() - 1.0).abs() < 1e-12);
            assert!(p.s.r_left().norm() < 1e-12);
            let phase = p.s.t_left().arg();
            let expected = (p.k * chain.length()).rem_euclid(2.0 * PI);
            let diff = (phase - expected).rem_euclid(2.0 * PI);
            assert!(diff.min(2.0 * PI - diff) < 1e-10, "{phase} vs {expected}");
            assert!(
                (p.s.det() + Complex64::from_polar(1.0, 2.0 * p.k * chain.length())).norm() < 1e-10
            );
        }
    }

    #[test]
    fn random_chain_is_unitary_and_reciprocal() {
        let n = 40;
        let onsite: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.3 * ((i * 7 % 11) as f64 / 11.0))
            .collect();
        let hopping: Vec<f64> = (0..n - 1)
            .map(|i| 0.4 + 0.1 * ((i * 3 % 5) as f64 / 5.0))
            .collect();
        let chain = Chain::from_parts(1.0, 0.5, onsite, hopping).unwrap();
        for e in [0.1, 0.5, 1.3, 1.9] {
            let p = solve_smatrix(&chain, e).unwrap();
            assert!(p.unitarity_defect < 1e-12);
            assert!(p.s.reciprocity_defect() < 1e-12);
            assert!((p.s.det().norm() - 1.0).abs() < 1e-12);
            assert!((p.transmission() + p.reflection() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn evanescent_energy_rejected() {
        let chain = Chain::free(101, 1.0, 1.0).unwrap();
        assert!(matches!(
            solve_smatrix(&chain, 2.5),
            Err(ScatteringError::Evanescent { .. })
        ));
    }
}
