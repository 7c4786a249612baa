//! Planar curve profiles `y = f(x)` and the differential-geometric fields
//! that enter the flat-axis effective Schrödinger equation.
//!
//! All lengths are in Bohr radii and all energies in Hartree. The particle
//! mass `m0` is passed explicitly in units of the electron mass.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stencil;

/// Endpoint slope tolerance used by [`Profile::new`].
///
/// Must admit Gaussian dents whose tails are truncated by the scattering
/// window, e.g. a double dent at `s = 0.25 L` has `|f'(0)| ≈ 0.057`.
pub const DEFAULT_FLATNESS_TOL: f64 = 0.1;

/// Minimum number of samples for a tabulated profile (one 7-point stencil).
pub const MIN_TABULATED_SAMPLES: usize = 7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("position {x} lies outside the profile domain [0, {length}]")]
    OutsideDomain { x: f64, length: f64 },
    #[error("tabulated profile needs at least {MIN_TABULATED_SAMPLES} samples, got {0}")]
    InsufficientData(usize),
    #[error("invalid profile: {0}")]
    Invalid(String),
    #[error("profile is not flat at the {endpoint} endpoint: |f'| = {slope:.3e} exceeds {tolerance:.3e}")]
    NotFlat {
        endpoint: Endpoint,
        slope: f64,
        tolerance: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Left,
    Right,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Left => f.write_str("left (x = 0)"),
            Endpoint::Right => f.write_str("right (x = L)"),
        }
    }
}

/// Relative sign of the two dents of a double Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// How a profile is deformed by [`Profile::stretched`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StretchMode {
    /// Scale amplitude, width and dent separation together; slopes are preserved.
    #[default]
    Both,
    /// Scale only the width (and dent separation).
    WidthOnly,
}

/// `f` and its first three derivatives at one position.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Derivatives {
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

impl std::ops::Add for Derivatives {
    type Output = Derivatives;

    fn add(self, o: Derivatives) -> Derivatives {
        Derivatives {
            f: self.f + o.f,
            f1: self.f1 + o.f1,
            f2: self.f2 + o.f2,
            f3: self.f3 + o.f3,
        }
    }
}

impl std::ops::Mul<Derivatives> for f64 {
    type Output = Derivatives;

    fn mul(self, d: Derivatives) -> Derivatives {
        Derivatives {
            f: self * d.f,
            f1: self * d.f1,
            f2: self * d.f2,
            f3: self * d.f3,
        }
    }
}

fn gaussian(x: f64, amplitude: f64, center: f64, sigma: f64) -> Derivatives {
    let u = (x - center) / sigma;
    let g = amplitude * (-0.5 * u * u).exp();
    Derivatives {
        f: g,
        f1: -u / sigma * g,
        f2: (u * u - 1.0) / (sigma * sigma) * g,
        f3: -(u * u * u - 3.0 * u) / (sigma * sigma * sigma) * g,
    }
}

/// A profile given by samples, resampled onto a uniform grid with monotone
/// cubic interpolation and differentiated with fourth-order stencils.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    samples: Vec<(f64, f64)>,
    step: f64,
    values: [Vec<f64>; 4],
}

impl Tabulated {
    pub fn from_samples(samples: Vec<(f64, f64)>) -> Result<Self, GeometryError> {
        if samples.len() < MIN_TABULATED_SAMPLES {
            return Err(GeometryError::InsufficientData(samples.len()));
        }
        if samples
            .iter()
            .any(|(x, f)| !x.is_finite() || !f.is_finite())
        {
            return Err(GeometryError::Invalid("non-finite sample".into()));
        }
        if samples[0].0 != 0.0 {
            return Err(GeometryError::Invalid(format!(
                "tabulated samples must start at x = 0, got {}",
                samples[0].0
            )));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(GeometryError::Invalid(
                "tabulated x values must be strictly increasing".into(),
            ));
        }

        let n = samples.len();
        let length = samples[n - 1].0;
        let step = length / (n - 1) as f64;
        let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let pchip = Pchip::new(&xs, &ys);
        let f: Vec<f64> = (0..n)
            .map(|i| {
                if i == n - 1 {
                    ys[n - 1]
                } else {
                    pchip.eval(i as f64 * step)
                }
            })
            .collect();

        let d1 = stencil::differentiate(&f, step, 1, 5);
        let d2 = stencil::differentiate(&f, step, 2, 7);
        let d3 = stencil::differentiate(&f, step, 3, 7);
        Ok(Tabulated {
            samples,
            step,
            values: [f, d1, d2, d3],
        })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn length(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    fn is_constant(&self) -> bool {
        let f0 = self.samples[0].1;
        self.samples.iter().all(|s| s.1 == f0)
    }

    /// Piecewise cubic Hermite evaluation; each field uses the next derivative
    /// as its slope, `f3` is linear.
    fn eval(&self, x: f64) -> Derivatives {
        let n = self.values[0].len();
        let s = (x / self.step).clamp(0.0, (n - 1) as f64);
        let j = (s.floor() as usize).min(n - 2);
        let t = s - j as f64;
        let h = self.step;
        let hermite = |k: usize| {
            let (y0, y1) = (self.values[k][j], self.values[k][j + 1]);
            let (m0, m1) = (self.values[k + 1][j] * h, self.values[k + 1][j + 1] * h);
            let t2 = t * t;
            let t3 = t2 * t;
            (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                + (t3 - 2.0 * t2 + t) * m0
                + (-2.0 * t3 + 3.0 * t2) * y1
                + (t3 - t2) * m1
        };
        let d3 = &self.values[3];
        Derivatives {
            f: hermite(0),
            f1: hermite(1),
            f2: hermite(2),
            f3: d3[j] + t * (d3[j + 1] - d3[j]),
        }
    }

    fn negated(&self) -> Tabulated {
        Tabulated {
            samples: self.samples.iter().map(|&(x, f)| (x, -f)).collect(),
            step: self.step,
            values: self
                .values
                .clone()
                .map(|v| v.into_iter().map(|y| -y).collect()),
        }
    }
}

/// Fritsch–Carlson monotone cubic interpolant.
struct Pchip<'a> {
    xs: &'a [f64],
    ys: &'a [f64],
    slopes: Vec<f64>,
}

impl<'a> Pchip<'a> {
    fn new(xs: &'a [f64], ys: &'a [f64]) -> Self {
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut slopes = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                slopes[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        slopes[0] = Self::end_slope(h[0], h[1], delta[0], delta[1]);
        slopes[n - 1] = Self::end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        Pchip { xs, ys, slopes }
    }

    fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
        let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if d.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            d
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let j = match self.xs.partition_point(|&xi| xi <= x) {
            0 => 0,
            p => (p - 1).min(self.xs.len() - 2),
        };
        let h = self.xs[j + 1] - self.xs[j];
        let t = (x - self.xs[j]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.ys[j]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[j]
            + (-2.0 * t3 + 3.0 * t2) * self.ys[j + 1]
            + (t3 - t2) * h * self.slopes[j + 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Flat,
    SingleGaussian {
        amplitude: f64,
        center: f64,
        sigma: f64,
    },
    DoubleGaussian {
        amplitude: f64,
        center: f64,
        sigma: f64,
        shift: f64,
        parity: Parity,
    },
    Tabulated(Tabulated),
}

impl Shape {
    /// Single dent with `A = 0.2 L`, `x0 = L/2`, `σ = L/4π`.
    pub fn default_single_gaussian(length: f64) -> Shape {
        Shape::SingleGaussian {
            amplitude: 0.2 * length,
            center: 0.5 * length,
            sigma: length / (4.0 * std::f64::consts::PI),
        }
    }

    /// Two dents with the default single-dent parameters displaced by `±shift`.
    pub fn default_double_gaussian(length: f64, shift: f64, parity: Parity) -> Shape {
        Shape::DoubleGaussian {
            amplitude: 0.2 * length,
            center: 0.5 * length,
            sigma: length / (4.0 * std::f64::consts::PI),
            shift,
            parity,
        }
    }

    fn eval(&self, x: f64) -> Derivatives {
        match self {
            Shape::Flat => Derivatives::default(),
            Shape::SingleGaussian {
                amplitude,
                center,
                sigma,
            } => gaussian(x, *amplitude, *center, *sigma),
            Shape::DoubleGaussian {
                amplitude,
                center,
                sigma,
                shift,
                parity,
            } => {
                gaussian(x, *amplitude, center - shift, *sigma)
                    + parity.sign() * gaussian(x, *amplitude, center + shift, *sigma)
            }
            Shape::Tabulated(t) => t.eval(x),
        }
    }

    fn validate(&self) -> Result<(), GeometryError> {
        let check = |name: &str, v: f64, positive: bool| {
            if !v.is_finite() || (positive && v <= 0.0) {
                let req = if positive { "finite and > 0" } else { "finite" };
                Err(GeometryError::Invalid(format!(
                    "{name} = {v} must be {req}"
                )))
            } else {
                Ok(())
            }
        };
        match self {
            Shape::Flat | Shape::Tabulated(_) => Ok(()),
            Shape::SingleGaussian {
                amplitude,
                center,
                sigma,
            } => {
                check("amplitude", *amplitude, false)?;
                check("center", *center, false)?;
                check("sigma", *sigma, true)
            }
            Shape::DoubleGaussian {
                amplitude,
                center,
                sigma,
                shift,
                ..
            } => {
                check("amplitude", *amplitude, false)?;
                check("center", *center, false)?;
                check("sigma", *sigma, true)?;
                check("shift", *shift, false)
            }
        }
    }
}

/// An asymptotically flat planar curve `(x, f(x), 0)` on the domain `[0, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    shape: Shape,
    length: f64,
}

impl Profile {
    pub fn new(shape: Shape, length: f64) -> Result<Self, GeometryError> {
        Self::with_flatness_tolerance(shape, length, DEFAULT_FLATNESS_TOL)
    }

    /// Builds a profile, rejecting it when `|f'|` at either endpoint is not
    /// below `tolerance`.
    pub fn with_flatness_tolerance(
        shape: Shape,
        length: f64,
        tolerance: f64,
    ) -> Result<Self, GeometryError> {
        if !length.is_finite() || length <= 0.0 {
            return Err(GeometryError::Invalid(format!(
                "length = {length} must be finite and > 0"
            )));
        }
        shape.validate()?;
        let shape = match shape {
            Shape::Tabulated(t) => {
                if (t.length() - length).abs() > 1e-9 * length {
                    return Err(GeometryError::Invalid(format!(
                        "tabulated samples span [0, {}] but length is {length}",
                        t.length()
                    )));
                }
                if t.is_constant() {
                    Shape::Flat
                } else {
                    Shape::Tabulated(t)
                }
            }
            s => s,
        };
        let profile = Profile { shape, length };
        for (endpoint, x) in [(Endpoint::Left, 0.0), (Endpoint::Right, length)] {
            let slope = profile.shape.eval(x).f1.abs();
            if !(slope < tolerance) {
                return Err(GeometryError::NotFlat {
                    endpoint,
                    slope,
                    tolerance,
                });
            }
        }
        Ok(profile)
    }

    pub fn flat(length: f64) -> Result<Self, GeometryError> {
        Self::new(Shape::Flat, length)
    }

    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self, GeometryError> {
        let t = Tabulated::from_samples(samples)?;
        let length = t.length();
        Self::new(Shape::Tabulated(t), length)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn contains(&self, x: f64) -> bool {
        let slack = 1e-12 * self.length;
        x >= -slack && x <= self.length + slack
    }

    /// `f` and its first three derivatives at `x`.
    pub fn eval(&self, x: f64) -> Result<Derivatives, GeometryError> {
        if !self.contains(x) {
            return Err(GeometryError::OutsideDomain {
                x,
                length: self.length,
            });
        }
        Ok(self.shape.eval(x.clamp(0.0, self.length)))
    }

    pub fn field(&self, x: f64, mass: f64) -> Result<GeometryField, GeometryError> {
        Ok(GeometryField::from_derivatives(x, self.eval(x)?, mass))
    }

    /// The mirror image `-f`.
    pub fn negated(&self) -> Profile {
        let shape = match &self.shape {
            Shape::Flat => Shape::Flat,
            Shape::SingleGaussian {
                amplitude,
                center,
                sigma,
            } => Shape::SingleGaussian {
                amplitude: -amplitude,
                center: *center,
                sigma: *sigma,
            },
            Shape::DoubleGaussian {
                amplitude,
                center,
                sigma,
                shift,
                parity,
            } => Shape::DoubleGaussian {
                amplitude: -amplitude,
                center: *center,
                sigma: *sigma,
                shift: *shift,
                parity: *parity,
            },
            Shape::Tabulated(t) => Shape::Tabulated(t.negated()),
        };
        Profile {
            shape,
            length: self.length,
        }
    }

    /// Deforms the profile about its center by `factor`; see [`StretchMode`].
    /// The result is validated like a freshly built profile.
    pub fn stretched(
        &self,
        factor: f64,
        mode: StretchMode,
        flatness_tol: f64,
    ) -> Result<Profile, GeometryError> {
        if !factor.is_finite() || factor <= 0.0 {
            return Err(GeometryError::Invalid(format!(
                "stretch factor {factor} must be > 0"
            )));
        }
        let amp = |a: f64| match mode {
            StretchMode::Both => a * factor,
            StretchMode::WidthOnly => a,
        };
        let shape = match &self.shape {
            Shape::Flat => Shape::Flat,
            Shape::SingleGaussian {
                amplitude,
                center,
                sigma,
            } => Shape::SingleGaussian {
                amplitude: amp(*amplitude),
                center: *center,
                sigma: sigma * factor,
            },
            Shape::DoubleGaussian {
                amplitude,
                center,
                sigma,
                shift,
                parity,
            } => Shape::DoubleGaussian {
                amplitude: amp(*amplitude),
                center: *center,
                sigma: sigma * factor,
                shift: shift * factor,
                parity: *parity,
            },
            Shape::Tabulated(_) => {
                return Err(GeometryError::Invalid(
                    "tabulated profiles cannot be stretched".into(),
                ))
            }
        };
        Profile::with_flatness_tolerance(shape, self.length, flatness_tol)
    }

    /// Arc length `∫ √(1 + f'²) dx` over `[a, b]`.
    pub fn arc_length(&self, a: f64, b: f64) -> Result<f64, GeometryError> {
        if !self.contains(a) || !self.contains(b) || b < a {
            return Err(GeometryError::OutsideDomain {
                x: if self.contains(a) { b } else { a },
                length: self.length,
            });
        }
        if matches!(self.shape, Shape::Flat) {
            return Ok(b - a);
        }
        let integrand = |x: f64| {
            let f1 = self.shape.eval(x).f1;
            (1.0 + f1 * f1).sqrt()
        };
        Ok(adaptive_simpson(integrand, a, b, 1e-11 * (b - a).max(1.0)))
    }
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    const PANELS: usize = 64;
    const MAX_EVALS: usize = 1 << 22;
    let h = (b - a) / PANELS as f64;
    let coarse: Vec<[f64; 5]> = (0..PANELS)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == PANELS { b } else { lo + h };
            let mid = 0.5 * (lo + hi);
            let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
            [lo, hi, flo, fmid, fhi]
        })
        .collect();
    let whole = |c: &[f64; 5]| (c[1] - c[0]) / 6.0 * (c[2] + 4.0 * c[3] + c[4]);
    let scale: f64 = coarse.iter().map(|c| whole(c).abs()).sum();
    let tol = tol.max(1e-14 * scale) / PANELS as f64;
    let mut budget = MAX_EVALS;
    coarse
        .iter()
        .map(|c| {
            let w = whole(c);
            let mut step = Step {
                f: &f,
                budget: &mut budget,
            };
            step.refine(c[0], c[1], c[2], c[3], c[4], w, tol, 40)
        })
        .sum()
}

struct Step<'a, F> {
    f: &'a F,
    budget: &'a mut usize,
}

impl<F: Fn(f64) -> f64> Step<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn refine(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = ((self.f)(lm), (self.f)(rm));
        *self.budget = self.budget.saturating_sub(2);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || *self.budget == 0 || !(delta.abs() > 15.0 * tol) {
            left + right + delta / 15.0
        } else {
            self.refine(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + self.refine(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
}

/// Curvature of the graph `(x, f(x))`.
#[inline]
pub fn curvature(f1: f64, f2: f64) -> f64 {
    f2.abs() / (1.0 + f1 * f1).powf(1.5)
}

#[inline]
pub fn effective_mass(f1: f64, mass: f64) -> f64 {
    (1.0 + f1 * f1) * mass
}

/// Curvature-induced attractive potential `-κ²/(8 m0)`.
#[inline]
pub fn geometric_potential(kappa: f64, mass: f64) -> f64 {
    -kappa * kappa / (8.0 * mass)
}

/// Scalar potential of the flat-axis equation with mass `(1 + f1²) m0`.
///
/// Uses the form without a `1/f2²` factor, so it is finite everywhere.
#[inline]
pub fn effective_potential(f1: f64, f2: f64, f3: f64, mass: f64) -> f64 {
    let g = 1.0 + f1 * f1;
    let numer = -3.0 * (f1 * f1 - 1.0) * f2 * f2 + 2.0 * g * f1 * f3;
    -numer / (2.0 * effective_mass(f1, mass) * 4.0 * g * g)
}

/// Amplitude factor relating the graph-parametrized wave function to the
/// flat-axis one, normalized to 1 where the curve is flat.
#[inline]
pub fn alpha_factor(f1: f64) -> f64 {
    (1.0 + f1 * f1).powf(0.25)
}

/// Geometric quantities at one position along the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryField {
    pub x: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub kappa: f64,
    pub m_eff: f64,
    pub v_geo: f64,
    pub v_eff: f64,
    pub alpha: f64,
}

impl GeometryField {
    pub fn from_derivatives(x: f64, d: Derivatives, mass: f64) -> Self {
        let kappa = curvature(d.f1, d.f2);
        GeometryField {
            x,
            f1: d.f1,
            f2: d.f2,
            f3: d.f3,
            kappa,
            m_eff: effective_mass(d.f1, mass),
            v_geo: geometric_potential(kappa, mass),
            v_eff: effective_potential(d.f1, d.f2, d.f3, mass),
            alpha: alpha_factor(d.f1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const L: f64 = 1000.0;

    fn single() -> Profile {
        Profile::new(Shape::default_single_gaussian(L), L).unwrap()
    }

    /// The second algebraic form, `[2(1+f1²) f1 f3/f2² + 3(1 - f1²)] V_geo`.
    fn effective_potential_via_vgeo(f1: f64, f2: f64, f3: f64, mass: f64) -> f64 {
        let g = 1.0 + f1 * f1;
        let vgeo = geometric_potential(curvature(f1, f2), mass);
        (2.0 * g * f1 * f3 / (f2 * f2) + 3.0 * (1.0 - f1 * f1)) * vgeo
    }

    #[test]
    fn flat_profile_is_zero() {
        let p = Profile::flat(L).unwrap();
        for x in [0.0, 123.0, L] {
            assert_eq!(p.eval(x).unwrap(), Derivatives::default());
        }
    }

    #[test]
    fn gaussian_peak_derivatives() {
        let p = single();
        let sigma = L / (4.0 * PI);
        let d = p.eval(0.5 * L).unwrap();
        assert!((d.f - 0.2 * L).abs() < 1e-12);
        assert_eq!(d.f1, 0.0);
        assert!((d.f2 + 0.2 * L / (sigma * sigma)).abs() < 1e-15);
        assert_eq!(d.f3, 0.0);
    }

    #[test]
    fn gaussian_derivatives_match_finite_differences() {
        let p = single();
        let h = 1e-3;
        for x in [300.0, 420.0, 555.5, 610.0] {
            let d = p.eval(x).unwrap();
            let e = |y| p.eval(y).unwrap();
            let fd1 = (e(x + h).f - e(x - h).f) / (2.0 * h);
            let fd2 = (e(x + h).f1 - e(x - h).f1) / (2.0 * h);
            let fd3 = (e(x + h).f2 - e(x - h).f2) / (2.0 * h);
            assert!((fd1 - d.f1).abs() < 1e-6 * d.f1.abs().max(1e-3));
            assert!((fd2 - d.f2).abs() < 1e-6 * d.f2.abs().max(1e-5));
            assert!((fd3 - d.f3).abs() < 1e-6 * d.f3.abs().max(1e-7));
        }
    }

    #[test]
    fn outside_domain_rejected() {
        let p = single();
        assert!(matches!(
            p.eval(-1.0),
            Err(GeometryError::OutsideDomain { .. })
        ));
        assert!(p.eval(L + 1.0).is_err());
    }

    #[test]
    fn curvature_examples() {
        assert_eq!(curvature(0.0, 0.0), 0.0);
        assert_eq!(curvature(0.0, 1.0), 1.0);
        let sigma = L / (4.0 * PI);
        let a = 0.2 * L;
        assert!((curvature(0.0, -a / (sigma * sigma)) - a / (sigma * sigma)).abs() < 1e-15);
    }

    #[test]
    fn effective_mass_examples() {
        assert_eq!(effective_mass(0.0, 1.0), 1.0);
        assert_eq!(effective_mass(1.0, 1.0), 2.0);
    }

    #[test]
    fn effective_mass_peaks_at_inflection() {
        let p = single();
        let sigma = L / (4.0 * PI);
        let x_infl = 0.5 * L + sigma;
        let m_infl = p.field(x_infl, 1.0).unwrap().m_eff;
        let f1 = -(0.2 * L / sigma) * (-0.5f64).exp();
        assert!((m_infl - (1.0 + f1 * f1)).abs() < 1e-12);
        assert!((m_infl - 3.32).abs() < 5e-3);
        assert_eq!(p.field(0.5 * L, 1.0).unwrap().m_eff, 1.0);
        let m_max = (0..=20_000)
            .map(|i| p.field(i as f64 * L / 20_000.0, 1.0).unwrap().m_eff)
            .fold(0.0, f64::max);
        assert!(m_max <= m_infl + 1e-12);
    }

    #[test]
    fn geometric_potential_sign() {
        assert_eq!(geometric_potential(0.0, 1.0), 0.0);
        assert!(geometric_potential(1e-3, 1.0) < 0.0);
        assert!(geometric_potential(-2.0, 1.0) < 0.0);
    }

    #[test]
    fn geometric_potential_at_peak_regression() {
        // -κ²/8 with κ = A/σ², evaluated at 40 digits.
        let sigma = L / (4.0 * PI);
        let v = geometric_potential(0.2 * L / (sigma * sigma), 1.0);
        assert!((v + 1.246_836_365_235_231e-4).abs() < 1e-18);
    }

    #[test]
    fn effective_potential_at_peak_is_three_vgeo() {
        let d = single().eval(0.5 * L).unwrap();
        let vg = geometric_potential(curvature(d.f1, d.f2), 1.0);
        let ve = effective_potential(d.f1, d.f2, d.f3, 1.0);
        assert!((ve - 3.0 * vg).abs() < 1e-15 * vg.abs());
        assert_eq!(effective_potential(0.0, 0.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn effective_potential_forms_agree() {
        let p = single();
        let sigma = L / (4.0 * PI);
        let scale = 0.2 * L / (sigma * sigma);
        for i in 1..2000 {
            let d = p.eval(i as f64 * L / 2000.0).unwrap();
            if d.f2.abs() <= 1e-6 * scale {
                continue;
            }
            let a = effective_potential(d.f1, d.f2, d.f3, 1.0);
            let b = effective_potential_via_vgeo(d.f1, d.f2, d.f3, 1.0);
            assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()), "{a} {b}");
        }
    }

    #[test]
    fn effective_potential_at_inflection_point() {
        // f2 = 0 at the inflection so the second form is singular there;
        // compare against the closed form with u = 1:
        // f1 = -A e^{-1/2}/σ, f3 = 2 A e^{-1/2}/σ³, V = -(2 f1 f3)/(8 (1+f1²)²)
        let sigma = L / (4.0 * PI);
        let a = 0.2 * L;
        let e = (-0.5f64).exp();
        let f1 = -a * e / sigma;
        let f3 = 2.0 * a * e / sigma.powi(3);
        let g = 1.0 + f1 * f1;
        let expected = -(2.0 * g * f1 * f3) / (2.0 * g * 4.0 * g * g);
        let d = single().eval(0.5 * L + sigma).unwrap();
        assert!(d.f2.abs() < 1e-16);
        let v = effective_potential(d.f1, d.f2, d.f3, 1.0);
        assert!((v - expected).abs() < 1e-13 * expected.abs());
        assert!(v > 0.0, "repulsive at the inflection");
        // Regression value.
        assert!((v - 1.660_825_840_721_5e-5).abs() < 1e-17, "{v:e}");
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_factor(0.0), 1.0);
        assert!((alpha_factor(1.0) - 2f64.powf(0.25)).abs() < 1e-15);
    }

    #[test]
    fn alpha_is_one_at_flat_endpoints() {
        // A narrower dent that is flat to 1e-8 at both ends.
        let shape = Shape::SingleGaussian {
            amplitude: 50.0,
            center: 500.0,
            sigma: 60.0,
        };
        let p = Profile::with_flatness_tolerance(shape, L, 1e-8).unwrap();
        for x in [0.0, L] {
            assert!((p.field(x, 1.0).unwrap().alpha - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn strict_flatness_rejects_default_single_dent() {
        let err = Profile::with_flatness_tolerance(Shape::default_single_gaussian(L), L, 1e-8)
            .unwrap_err();
        assert!(matches!(
            err,
            GeometryError::NotFlat {
                endpoint: Endpoint::Left,
                ..
            }
        ));
    }

    #[test]
    fn steep_endpoint_names_side() {
        let shape = Shape::SingleGaussian {
            amplitude: 200.0,
            center: 900.0,
            sigma: 80.0,
        };
        match Profile::new(shape, L) {
            Err(GeometryError::NotFlat { endpoint, .. }) => assert_eq!(endpoint, Endpoint::Right),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_sigma_rejected() {
        let shape = Shape::SingleGaussian {
            amplitude: 1.0,
            center: 500.0,
            sigma: 0.0,
        };
        assert!(matches!(
            Profile::new(shape, L),
            Err(GeometryError::Invalid(_))
        ));
    }

    #[test]
    fn arc_length_simple_cases() {
        assert_eq!(Profile::flat(L).unwrap().arc_length(0.0, L).unwrap(), L);
        // A line of slope 1 is representable as a tabulated profile only with
        // sloped endpoints, so check it with a loose flatness tolerance.
        let samples: Vec<(f64, f64)> = (0..=100).map(|i| (i as f64, i as f64)).collect();
        let t = Tabulated::from_samples(samples).unwrap();
        let p = Profile::with_flatness_tolerance(Shape::Tabulated(t), 100.0, 2.0).unwrap();
        let d = p.arc_length(0.0, 100.0).unwrap();
        assert!((d - 2f64.sqrt() * 100.0).abs() < 1e-8 * d);
    }

    #[test]
    fn arc_length_of_huge_spike_terminates() {
        let mut samples: Vec<(f64, f64)> = (0..=40)
            .map(|i| {
                let x = 25.0 * i as f64;
                (x, 200.0 * (-((x - 500.0) / 100.0).powi(2)).exp())
            })
            .collect();
        samples[27].1 = 1e16;
        let p = Profile::tabulated(samples).unwrap();
        let start = std::time::Instant::now();
        let d = p.arc_length(0.0, p.length()).unwrap();
        assert!(d.is_finite() && d > 1e16, "{d:e}");
        assert!(start.elapsed().as_secs() < 5);
    }

    #[test]
    fn arc_length_of_default_dent() {
        // 40-digit adaptive quadrature reference.
        let d = single().arc_length(0.0, L).unwrap();
        assert!((d - 1_171.054_253_102_93).abs() < 1e-8 * d, "{d}");
        assert_eq!(single().negated().arc_length(0.0, L).unwrap(), d);
    }

    #[test]
    fn tabulated_requires_seven_samples() {
        let samples: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 0.0)).collect();
        assert_eq!(
            Profile::tabulated(samples),
            Err(GeometryError::InsufficientData(6))
        );
    }

    #[test]
    fn tabulated_constant_becomes_flat() {
        let samples: Vec<(f64, f64)> = (0..=20).map(|i| (i as f64 * 5.0, 3.0)).collect();
        let p = Profile::tabulated(samples).unwrap();
        assert_eq!(p.shape(), &Shape::Flat);
        assert_eq!(p.eval(50.0).unwrap(), Derivatives::default());
    }

    #[test]
    fn tabulated_rejects_unsorted() {
        let mut samples: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 0.0)).collect();
        samples.swap(3, 4);
        assert!(matches!(
            Profile::tabulated(samples),
            Err(GeometryError::Invalid(_))
        ));
    }

    #[test]
    fn tabulated_gaussian_matches_closed_form() {
        let exact = single();
        let sigma = L / (4.0 * PI);
        let scale = 0.2 * L / (sigma * sigma);
        let n = 4000;
        let samples: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let x = i as f64 * L / n as f64;
                (x, exact.eval(x).unwrap().f)
            })
            .collect();
        let tab = Profile::tabulated(samples.clone()).unwrap();
        let max_df2 = samples
            .iter()
            .map(|&(x, _)| (tab.eval(x).unwrap().f2 - exact.eval(x).unwrap().f2).abs())
            .fold(0.0, f64::max);
        assert!(max_df2 < 1e-6 * scale, "max |Δf2| = {max_df2:e}");
        // Between nodes the Hermite reconstruction stays close as well.
        let mid = tab.eval(512.3).unwrap();
        let ex = exact.eval(512.3).unwrap();
        assert!((mid.f1 - ex.f1).abs() < 1e-6);
        assert!(
            (mid.f3 - ex.f3).abs() < 1e-5 * scale / sigma,
            "{:e} vs {:e}",
            mid.f3 - ex.f3,
            scale / sigma
        );
    }

    #[test]
    fn double_gaussian_parity() {
        let even = Profile::new(Shape::default_double_gaussian(L, 150.0, Parity::Even), L).unwrap();
        let odd = Profile::new(Shape::default_double_gaussian(L, 150.0, Parity::Odd), L).unwrap();
        let c = even.eval(0.5 * L).unwrap();
        assert!(c.f1.abs() < 1e-12);
        assert!(odd.eval(0.5 * L).unwrap().f.abs() < 1e-12);
        // Odd parity: f(x0 + u) = -f(x0 - u).
        for u in [10.0, 100.0, 333.0] {
            let l = odd.eval(0.5 * L - u).unwrap().f;
            let r = odd.eval(0.5 * L + u).unwrap().f;
            assert!((l + r).abs() < 1e-12);
        }
    }

    #[test]
    fn stretching_preserves_slopes() {
        let p = single();
        let s = p
            .stretched(1.5, StretchMode::Both, DEFAULT_FLATNESS_TOL)
            .unwrap();
        let sigma = L / (4.0 * PI);
        let a = p.eval(0.5 * L + sigma).unwrap().f1;
        let b = s.eval(0.5 * L + 1.5 * sigma).unwrap().f1;
        assert!((a - b).abs() < 1e-12);
        let w = p.stretched(3.0, StretchMode::WidthOnly, DEFAULT_FLATNESS_TOL);
        assert!(matches!(w, Err(GeometryError::NotFlat { .. })));
    }
}
