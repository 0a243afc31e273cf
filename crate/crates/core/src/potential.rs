//! Radial pair potentials, their Fourier transforms, positive-type
//! certification and the optimal superstability constants
//! `A = v̂(0)(1−ε)`, `B = v(0)/2`.
//!
//! Fourier convention: `v̂(q) = ∫ dx v(x) e^{−iq·x}`, so `v̂(0) = ∫ v`.
//! In three dimensions the radial form is `(4π/q) ∫₀^∞ r v(r) sin(qr) dr`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{domain, BecError, Result};
use crate::quadrature::{integrate, Quadrature};

/// Relative tolerance a quadrature result has to meet.
const QUAD_REQUIRED: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialModel {
    /// `v₀ exp(−r²/2σ²)`
    Gaussian { amplitude: f64, width: f64 },
    /// `v₀ exp(−κr)`
    Exponential { amplitude: f64, rate: f64 },
    Tabulated(RadialTable),
}

/// Samples of `v(r)`, linearly interpolated and zero beyond the last radius.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTable {
    r: Vec<f64>,
    v: Vec<f64>,
}

impl RadialTable {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(domain("a radial table needs at least two samples"));
        }
        let (r, v): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
        if r[0] < 0.0 || r.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(domain("radial table samples must be finite with r ≥ 0"));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("radial table radii must be strictly increasing"));
        }
        Ok(Self { r, v })
    }

    /// Two whitespace-separated columns `r v(r)`; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut samples = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(BecError::Parse(format!(
                    "line {}: expected two columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| BecError::Parse(format!("line {}: {s:?}: {e}", lineno + 1)))
            };
            samples.push((parse(cols[0])?, parse(cols[1])?));
        }
        Self::new(samples)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| BecError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.r.iter().copied().zip(self.v.iter().copied())
    }

    /// Radius beyond which the table is taken to vanish.
    pub fn truncation_radius(&self) -> f64 {
        *self.r.last().expect("table has samples")
    }

    pub fn value(&self, r: f64) -> f64 {
        if r < self.r[0] || r > self.truncation_radius() {
            return 0.0;
        }
        let i = self.r.partition_point(|&x| x <= r).saturating_sub(1);
        if i + 1 >= self.r.len() {
            return self.v[i];
        }
        let t = (r - self.r[i]) / (self.r[i + 1] - self.r[i]);
        self.v[i] + t * (self.v[i + 1] - self.v[i])
    }
}

impl PotentialModel {
    pub fn gaussian(amplitude: f64, width: f64) -> Result<Self> {
        if !(amplitude > 0.0) || !(width > 0.0) || !amplitude.is_finite() || !width.is_finite() {
            return Err(domain("gaussian needs positive amplitude and width"));
        }
        Ok(Self::Gaussian { amplitude, width })
    }

    pub fn exponential(amplitude: f64, rate: f64) -> Result<Self> {
        if !(amplitude > 0.0) || !(rate > 0.0) || !amplitude.is_finite() || !rate.is_finite() {
            return Err(domain("exponential needs positive amplitude and rate"));
        }
        Ok(Self::Exponential { amplitude, rate })
    }

    pub fn value(&self, r: f64) -> f64 {
        match self {
            Self::Gaussian { amplitude, width } => amplitude * (-r * r / (2.0 * width * width)).exp(),
            Self::Exponential { amplitude, rate } => amplitude * (-rate * r).exp(),
            Self::Tabulated(t) => t.value(r),
        }
    }

    pub fn truncation_radius(&self) -> Option<f64> {
        match self {
            Self::Tabulated(t) => Some(t.truncation_radius()),
            _ => None,
        }
    }
}

/// `v(0)`.
pub fn v_at_origin(pot: &PotentialModel) -> Result<f64> {
    match pot {
        PotentialModel::Gaussian { amplitude, .. } | PotentialModel::Exponential { amplitude, .. } => {
            Ok(*amplitude)
        }
        PotentialModel::Tabulated(t) => {
            if t.r[0] != 0.0 {
                return Err(domain("tabulated potential has no r = 0 sample"));
            }
            Ok(t.v[0])
        }
    }
}

/// Three-dimensional `v̂(q)`: closed forms for the analytic kinds, quadrature
/// for tables.
pub fn vhat(pot: &PotentialModel, q: f64) -> Result<f64> {
    vhat_in_dim(pot, q, 3)
}

/// `v̂(q)` in `D` dimensions. Tables are only transformed in `D = 3`.
pub fn vhat_in_dim(pot: &PotentialModel, q: f64, dim: u32) -> Result<f64> {
    if !(q >= 0.0) {
        return Err(domain(format!("wavenumber must be ≥ 0, got {q}")));
    }
    if dim == 0 {
        return Err(domain("dimension must be at least 1"));
    }
    let d = dim as f64;
    match pot {
        PotentialModel::Gaussian { amplitude, width } => {
            let s2 = width * width;
            Ok(amplitude * (2.0 * PI * s2).powf(d / 2.0) * (-s2 * q * q / 2.0).exp())
        }
        PotentialModel::Exponential { amplitude, rate } => {
            // 2^D π^{(D−1)/2} Γ((D+1)/2) κ / (κ² + q²)^{(D+1)/2}
            let pref = 2f64.powf(d) * PI.powf((d - 1.0) / 2.0) * gamma((d + 1.0) / 2.0);
            Ok(amplitude * pref * rate / (rate * rate + q * q).powf((d + 1.0) / 2.0))
        }
        PotentialModel::Tabulated(t) => {
            if dim != 3 {
                return Err(domain("tabulated potentials are transformed in three dimensions only"));
            }
            tabulated_transform(t, q)
        }
    }
}

/// Numerical three-dimensional transform for every kind, independent of the
/// closed forms. Gaussians are integrated along the line `Im r = qσ²` through
/// the saddle point, which removes the oscillation (the integrand is entire);
/// exponentials are integrated on the real axis.
pub fn vhat_quadrature(pot: &PotentialModel, q: f64) -> Result<f64> {
    if !(q >= 0.0) {
        return Err(domain(format!("wavenumber must be ≥ 0, got {q}")));
    }
    match pot {
        PotentialModel::Gaussian { amplitude, width } => {
            let reach = 10.0 * width;
            if q == 0.0 {
                let f = |r: f64| r * r * pot.value(r);
                return accept(integrate(f, 0.0, reach, 1e-14, 1e-300, 2000)).map(|v| 4.0 * PI * v);
            }
            let shift = q * width * width;
            let s2 = width * width;
            let f = |t: f64| {
                let z = Complex64::new(t, shift);
                let exponent = -z * z / (2.0 * s2) + Complex64::i() * q * z;
                (z * exponent.exp()).im * amplitude
            };
            let quad = integrate(f, -reach, reach, 1e-14, 1e-300, 2000);
            accept(quad).map(|v| 2.0 * PI / q * v)
        }
        PotentialModel::Exponential { rate, .. } => {
            let reach = 60.0 / rate;
            let f = |r: f64| r * pot.value(r) * sin_over_q(q, r);
            accept(integrate(f, 0.0, reach, 1e-14, 1e-300, 4000)).map(|v| 4.0 * PI * v)
        }
        PotentialModel::Tabulated(t) => tabulated_transform(t, q),
    }
}

fn sin_over_q(q: f64, r: f64) -> f64 {
    if q == 0.0 {
        r
    } else {
        (q * r).sin() / q
    }
}

fn accept(quad: Quadrature) -> Result<f64> {
    // Results sitting at the cancellation floor (v̂ crossing zero) are accepted.
    let floor = 64.0 * f64::EPSILON * quad.abs_integral;
    if quad.error <= QUAD_REQUIRED * quad.value.abs() || quad.error <= floor {
        Ok(quad.value)
    } else {
        Err(BecError::QuadratureFailure {
            value: quad.value,
            error_estimate: quad.error,
        })
    }
}

fn tabulated_transform(t: &RadialTable, q: f64) -> Result<f64> {
    let f = |r: f64| r * t.value(r) * sin_over_q(q, r);
    let mut total = Quadrature {
        value: 0.0,
        error: 0.0,
        abs_integral: 0.0,
    };
    for w in t.r.windows(2) {
        let seg = integrate(f, w[0], w[1], 1e-14, 1e-300, 500);
        total.value += seg.value;
        total.error += seg.error;
        total.abs_integral += seg.abs_integral;
    }
    accept(total).map(|v| 4.0 * PI * v)
}

/// Outcome of the sampled positive-type test `v̂(0) ≥ v̂(q) ≥ 0`, `v̂(0) > 0`.
///
/// The test looks at a finite grid of wavenumbers (refined once), so a pass is
/// evidence rather than proof.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub dim: u32,
    pub vhat0: f64,
    pub min_vhat: f64,
    pub argmin_q: f64,
    /// `max_q v̂(q) − v̂(0)`
    pub max_excess: f64,
    pub argmax_excess_q: f64,
    pub tolerance: f64,
    pub q_max: f64,
    pub n_samples: usize,
    /// Coarse and refined grids gave the same verdict.
    pub stable: bool,
    pub pass: bool,
    /// Wavenumber that violated the test, if any.
    pub offending_q: Option<f64>,
    pub truncation_radius: Option<f64>,
}

impl PositivityReport {
    pub const NOTE: &'static str = "sample-based check on a finite wavenumber grid, not a proof";
}

struct GridScan {
    vhat0: f64,
    min: (f64, f64),
    excess: (f64, f64),
}

fn scan(pot: &PotentialModel, dim: u32, q_max: f64, n: usize) -> Result<GridScan> {
    let vhat0 = vhat_in_dim(pot, 0.0, dim)?;
    let mut min = (f64::INFINITY, 0.0);
    let mut excess = (f64::NEG_INFINITY, 0.0);
    for j in 0..n {
        let q = q_max * j as f64 / (n - 1) as f64;
        let v = vhat_in_dim(pot, q, dim)?;
        if v < min.0 {
            min = (v, q);
        }
        if v - vhat0 > excess.0 {
            excess = (v - vhat0, q);
        }
    }
    Ok(GridScan { vhat0, min, excess })
}

pub fn positivity_check(pot: &PotentialModel, dim: u32, q_max: f64, n_samples: usize) -> Result<PositivityReport> {
    if !(q_max > 0.0) || !q_max.is_finite() || n_samples < 2 {
        return Err(domain("positivity check needs q_max > 0 and at least two samples"));
    }
    let verdict = |s: &GridScan, tol: f64| s.min.0 >= -tol && s.excess.0 <= tol && s.vhat0 > 0.0;

    let coarse = scan(pot, dim, q_max, n_samples)?;
    let fine_n = 2 * n_samples;
    let fine = scan(pot, dim, q_max, fine_n)?;
    let tol = 1e-9 * fine.vhat0.abs();
    let coarse_pass = verdict(&coarse, tol);
    let fine_pass = verdict(&fine, tol);
    let pass = coarse_pass && fine_pass;
    let offending_q = if pass {
        None
    } else if fine.min.0 < -tol {
        Some(fine.min.1)
    } else if fine.excess.0 > tol {
        Some(fine.excess.1)
    } else {
        Some(0.0)
    };
    Ok(PositivityReport {
        dim,
        vhat0: fine.vhat0,
        min_vhat: fine.min.0,
        argmin_q: fine.min.1,
        max_excess: fine.excess.0,
        argmax_excess_q: fine.excess.1,
        tolerance: tol,
        q_max,
        n_samples: fine_n,
        stable: coarse_pass == fine_pass,
        pass,
        offending_q,
        truncation_radius: pot.truncation_radius(),
    })
}

/// A potential that passed [`positivity_check`] in a given dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedPotential {
    model: PotentialModel,
    report: PositivityReport,
    v0: f64,
}

impl CertifiedPotential {
    pub const DEFAULT_Q_MAX: f64 = 20.0;
    pub const DEFAULT_SAMPLES: usize = 401;

    pub fn certify(model: PotentialModel, dim: u32, q_max: f64, n_samples: usize) -> Result<Self> {
        let report = positivity_check(&model, dim, q_max, n_samples)?;
        if !report.pass {
            return Err(BecError::NotPositiveType(format!(
                "min v̂ = {:e}, max v̂(q) − v̂(0) = {:e}, offending q = {:?}",
                report.min_vhat, report.max_excess, report.offending_q
            )));
        }
        let v0 = v_at_origin(&model)?;
        Ok(Self { model, report, v0 })
    }

    pub fn with_defaults(model: PotentialModel, dim: u32) -> Result<Self> {
        Self::certify(model, dim, Self::DEFAULT_Q_MAX, Self::DEFAULT_SAMPLES)
    }

    pub fn model(&self) -> &PotentialModel {
        &self.model
    }

    pub fn report(&self) -> &PositivityReport {
        &self.report
    }

    pub fn dim(&self) -> u32 {
        self.report.dim
    }

    /// `v̂(0)` in the certified dimension.
    pub fn vhat0(&self) -> f64 {
        self.report.vhat0
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperstabilityConstants {
    pub a_const: f64,
    pub b_const: f64,
    pub epsilon: f64,
}

/// `A = v̂(0)(1−ε)`, `B = v(0)/2`.
pub fn superstability_constants(pot: &CertifiedPotential, epsilon: f64) -> Result<SuperstabilityConstants> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(domain(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    Ok(SuperstabilityConstants {
        a_const: pot.vhat0() * (1.0 - epsilon),
        b_const: pot.v0() / 2.0,
        epsilon,
    })
}
