//! Gapped mean-field Bose gas `T^Δ − μN + gλN²/2V` in the thermodynamic limit.
//!
//! The zero mode sits at `−Δ`. Above the threshold `μ_c = gλρ^P(β,−Δ) − Δ` the
//! effective chemical potential is pinned at `−Δ` and the excess density
//! `(μ+Δ)/(gλ) − ρ^P(β,−Δ)` condenses into the zero mode. Below it the total
//! density solves `ρ = ρ^P(β, μ − gλρ)`.

use crate::error::{domain, BecError, Result};
use crate::ideal_gas::{pbg_density, pbg_pressure, GapSpec, ThermoState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    pub g: f64,
    pub lambda: f64,
}

impl CouplingParams {
    pub fn new(g: f64, lambda: f64) -> Result<Self> {
        let c = Self { g, lambda };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) || !self.g.is_finite() {
            return Err(domain(format!("coupling g must be positive, got {}", self.g)));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(domain(format!(
                "mean-field constant lambda must be positive, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// `gλ`
    pub fn strength(&self) -> f64 {
        self.g * self.lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldSolution {
    pub rho_total: f64,
    pub rho_condensate: f64,
    pub mu_eff: f64,
    pub pressure: f64,
    pub condensed: bool,
}

const ROOT_TOL: f64 = 1e-12;
const ROOT_BUDGET: usize = 200;

/// `μ_c = gλρ^P(β, −Δ) − Δ`; `+∞` is never returned, the gapless
/// low-dimensional case is a `DivergentSeries` error.
pub fn mf_condensation_threshold(
    beta: f64,
    coupling: CouplingParams,
    gap: GapSpec,
    dim: u32,
) -> Result<f64> {
    coupling.validate()?;
    let rho = pbg_density(ThermoState::new(beta, -gap.delta, dim)?)?;
    Ok(coupling.strength() * rho - gap.delta)
}

/// Solve the reference gas at `(β, μ)` with gap `gap.delta`.
pub fn mf_solve(state: ThermoState, coupling: CouplingParams, gap: GapSpec) -> Result<MeanFieldSolution> {
    state.validate()?;
    coupling.validate()?;
    let delta = gap.delta;
    let gl = coupling.strength();
    let threshold = if delta == 0.0 && state.dim <= 2 {
        f64::INFINITY
    } else {
        mf_condensation_threshold(state.beta, coupling, gap, state.dim)?
    };

    if state.mu > threshold {
        let rho_total = (state.mu + delta) / gl;
        let excited = pbg_density(state.with_mu(-delta))?;
        let pressure = pbg_pressure(state.with_mu(-delta))? + 0.5 * gl * rho_total * rho_total;
        return Ok(MeanFieldSolution {
            rho_total,
            rho_condensate: rho_total - excited,
            mu_eff: -delta,
            pressure,
            condensed: true,
        });
    }

    let rho_total = solve_normal_density(state, gl, delta)?;
    let mu_eff = (state.mu - gl * rho_total).min(-delta);
    let pressure = pbg_pressure(state.with_mu(mu_eff))? + 0.5 * gl * rho_total * rho_total;
    Ok(MeanFieldSolution {
        rho_total,
        rho_condensate: 0.0,
        mu_eff,
        pressure,
        condensed: false,
    })
}

/// Bisection for `ρ − ρ^P(β, μ − gλρ) = 0`. The residual is increasing in `ρ`.
fn solve_normal_density(state: ThermoState, gl: f64, delta: f64) -> Result<f64> {
    let residual = |rho: f64| -> Result<f64> {
        let mu_eff = (state.mu - gl * rho).min(-delta);
        if mu_eff == 0.0 && state.dim <= 2 {
            // ρ^P diverges at zero chemical potential
            return Ok(f64::NEG_INFINITY);
        }
        Ok(rho - pbg_density(state.with_mu(mu_eff))?)
    };

    let mut lo = ((state.mu + delta) / gl).max(0.0);
    let r_lo = residual(lo)?;
    if r_lo >= 0.0 {
        return Ok(lo);
    }
    let floor_mu = state.mu.min(-1e-8).min(-delta);
    let mut hi = lo.max(pbg_density(state.with_mu(floor_mu))?) + 1.0;
    let mut iterations = 0;
    while residual(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if iterations > ROOT_BUDGET || !hi.is_finite() {
            return Err(BecError::ConvergenceFailure {
                what: "could not bracket the mean-field self-consistency root".into(),
                iterations,
            });
        }
    }
    while iterations < ROOT_BUDGET {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= ROOT_TOL * hi.max(1.0) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if residual(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Err(BecError::ConvergenceFailure {
        what: "mean-field self-consistency bisection".into(),
        iterations,
    })
}

/// Relative mismatch between the central Δ-difference of the pressure and the
/// condensate density. In the normal phase the condensate is exactly zero and
/// the mismatch is measured against the total density instead. Errors with
/// `Domain` if the phase is not the same at `Δ − step`, `Δ` and `Δ + step`.
pub fn mf_pressure_delta_derivative_check(
    state: ThermoState,
    coupling: CouplingParams,
    gap: GapSpec,
    step: f64,
) -> Result<f64> {
    const FLOOR: f64 = 1e-12;
    if !(step > 0.0) || gap.delta - step < 0.0 {
        return Err(domain(format!(
            "step {step} must be positive and not exceed the gap {}",
            gap.delta
        )));
    }
    let at = |d: f64| mf_solve(state, coupling, GapSpec { delta: d, ..gap });
    let centre = at(gap.delta)?;
    let plus = at(gap.delta + step)?;
    let minus = at(gap.delta - step)?;
    if plus.condensed != centre.condensed || minus.condensed != centre.condensed {
        return Err(domain("phase changes inside the finite-difference stencil"));
    }
    let derivative = (plus.pressure - minus.pressure) / (2.0 * step);
    let scale = if centre.condensed {
        centre.rho_condensate
    } else {
        centre.rho_total
    };
    Ok((derivative - centre.rho_condensate).abs() / scale.max(FLOOR))
}
