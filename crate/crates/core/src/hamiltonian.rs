//! Nearest-neighbor tight-binding discretization of the flat-axis
//! effective-mass equation.
//!
//! Sites sit at `x_i = i a` for `i = 0..=N` with `a = L / N`. The bond
//! between sites `i` and `i + 1` carries the hopping evaluated at the
//! mid-bond point; each onsite energy is `V_eff(x_i)` plus the sum of the two
//! adjacent bond hoppings. The outer half-bonds of the boundary sites belong
//! to the flat leads and carry the lead hopping `t0`.

use thiserror::Error;

use crate::geometry::{effective_potential, GeometryError, Profile};

/// Smallest number of lattice intervals accepted by [`Chain::build`].
pub const MIN_INTERVALS: usize = 100;

/// Largest number of lattice intervals accepted by [`Chain::build`].
pub const MAX_INTERVALS: usize = 1 << 24;

/// Default number of lattice intervals across the scattering region.
pub const DEFAULT_INTERVALS: usize = 5000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("resolution too coarse: {intervals} intervals, need at least {MIN_INTERVALS}")]
    TooCoarse { intervals: usize },
    #[error("resolution too fine: {intervals} intervals, at most {MAX_INTERVALS} supported")]
    TooFine { intervals: usize },
    #[error("invalid chain: {0}")]
    Invalid(String),
}

/// Hopping `ħ²/(2 m0 a²)` of a flat lattice with spacing `a`.
#[inline]
pub fn lead_hopping(spacing: f64, mass: f64) -> f64 {
    1.0 / (2.0 * mass * spacing * spacing)
}

/// Position-dependent hopping `t0 / (1 + f'(x)²)`.
pub fn hopping_at(
    profile: &Profile,
    x_mid: f64,
    spacing: f64,
    mass: f64,
) -> Result<f64, GeometryError> {
    let f1 = profile.eval(x_mid)?.f1;
    Ok(lead_hopping(spacing, mass) / (1.0 + f1 * f1))
}

/// Onsite energy `V_eff(x_i) + 2 <t_eff>_i`, with the average taken over the
/// two half-bonds around `x_i`. Half-bonds outside `[0, L]` use `t0`.
pub fn onsite_at(profile: &Profile, x: f64, spacing: f64, mass: f64) -> Result<f64, GeometryError> {
    let d = profile.eval(x)?;
    let t0 = lead_hopping(spacing, mass);
    let side = |xm: f64| {
        if profile.contains(xm) {
            hopping_at(profile, xm, spacing, mass)
        } else {
            Ok(t0)
        }
    };
    let mean = 0.5 * (side(x - 0.5 * spacing)? + side(x + 0.5 * spacing)?);
    Ok(effective_potential(d.f1, d.f2, d.f3, mass) + 2.0 * mean)
}

/// A real symmetric tridiagonal Hamiltonian, `H_ii = onsite[i]`,
/// `H_{i,i+1} = -hopping[i]`, attached to flat leads with hopping `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    spacing: f64,
    lead_hopping: f64,
    onsite: Vec<f64>,
    hopping: Vec<f64>,
}

impl Chain {
    pub fn from_parts(
        spacing: f64,
        lead_hopping: f64,
        onsite: Vec<f64>,
        hopping: Vec<f64>,
    ) -> Result<Self, ChainError> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(ChainError::Invalid(format!(
                "spacing {spacing} must be > 0"
            )));
        }
        if !(lead_hopping.is_finite() && lead_hopping > 0.0) {
            return Err(ChainError::Invalid(format!(
                "lead hopping {lead_hopping} must be > 0"
            )));
        }
        if onsite.len() < 2 || hopping.len() + 1 != onsite.len() {
            return Err(ChainError::Invalid(format!(
                "{} onsite values need {} hoppings, got {}",
                onsite.len(),
                onsite.len().saturating_sub(1),
                hopping.len()
            )));
        }
        if let Some(i) = onsite.iter().position(|v| !v.is_finite()) {
            return Err(ChainError::Invalid(format!("onsite[{i}] is not finite")));
        }
        if let Some(i) = hopping.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(ChainError::Invalid(format!(
                "hopping[{i}] = {} must be finite and > 0",
                hopping[i]
            )));
        }
        Ok(Chain {
            spacing,
            lead_hopping,
            onsite,
            hopping,
        })
    }

    /// The free lattice: onsite `2 t0`, hopping `t0` everywhere.
    pub fn free(n_sites: usize, spacing: f64, mass: f64) -> Result<Self, ChainError> {
        let t0 = lead_hopping(spacing, mass);
        Self::from_parts(
            spacing,
            t0,
            vec![2.0 * t0; n_sites],
            vec![t0; n_sites.saturating_sub(1)],
        )
    }

    /// Discretizes `profile` with `intervals` lattice intervals over `[0, L]`.
    pub fn build(profile: &Profile, intervals: usize, mass: f64) -> Result<Self, ChainError> {
        if intervals < MIN_INTERVALS {
            return Err(ChainError::TooCoarse { intervals });
        }
        if intervals > MAX_INTERVALS {
            return Err(ChainError::TooFine { intervals });
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(ChainError::Invalid(format!("mass {mass} must be > 0")));
        }
        let length = profile.length();
        let a = length / intervals as f64;
        let t0 = lead_hopping(a, mass);
        let hopping = (0..intervals)
            .map(|i| {
                hopping_at(
                    profile,
                    (i as f64 + 0.5) * length / intervals as f64,
                    a,
                    mass,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let onsite = (0..=intervals)
            .map(|i| {
                let x = i as f64 * length / intervals as f64;
                let d = profile.eval(x)?;
                let left = if i == 0 { t0 } else { hopping[i - 1] };
                let right = if i == intervals { t0 } else { hopping[i] };
                Ok(effective_potential(d.f1, d.f2, d.f3, mass) + left + right)
            })
            .collect::<Result<Vec<_>, GeometryError>>()?;
        Self::from_parts(a, t0, onsite, hopping)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn lead_hopping(&self) -> f64 {
        self.lead_hopping
    }

    pub fn n_sites(&self) -> usize {
        self.onsite.len()
    }

    pub fn onsite(&self) -> &[f64] {
        &self.onsite
    }

    pub fn hopping(&self) -> &[f64] {
        &self.hopping
    }

    /// Distance between the two lead interfaces, `(n_sites - 1) a`.
    pub fn length(&self) -> f64 {
        self.hopping.len() as f64 * self.spacing
    }

    /// Largest deviation of the boundary sites and bonds from the lead
    /// values, relative to `t0`.
    pub fn boundary_mismatch(&self) -> f64 {
        let t0 = self.lead_hopping;
        let n = self.onsite.len();
        [
            self.onsite[0] - 2.0 * t0,
            self.onsite[n - 1] - 2.0 * t0,
            self.hopping[0] - t0,
            self.hopping[n - 2] - t0,
        ]
        .iter()
        .map(|d| d.abs() / t0)
        .fold(0.0, f64::max)
    }

    /// Whether the onsite and hopping arrays read the same reversed, to a
    /// relative tolerance.
    pub fn is_palindromic(&self, rel_tol: f64) -> bool {
        fn pal(v: &[f64], tol: f64) -> bool {
            v.iter()
                .zip(v.iter().rev())
                .all(|(a, b)| (a - b).abs() <= tol * a.abs().max(b.abs()))
        }
        pal(&self.onsite, rel_tol) && pal(&self.hopping, rel_tol)
    }
}
