//! Perfect Bose gas in `D` dimensions, thermodynamic limit.
//!
//! Reduced units throughout: `ħ²/2m = 1`, `k_B = 1`, so a plane wave of
//! wavevector `k` has energy `|k|²`.

use crate::error::{domain, BecError, Result};
use crate::special_functions::{bose_polylog_exp, inverse_thermal_volume, Accuracy};

/// Grand-canonical control point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoState {
    pub beta: f64,
    pub mu: f64,
    pub dim: u32,
}

impl ThermoState {
    pub fn new(beta: f64, mu: f64, dim: u32) -> Result<Self> {
        let state = Self { beta, mu, dim };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(domain(format!("beta must be positive and finite, got {}", self.beta)));
        }
        if self.mu.is_nan() {
            return Err(domain("mu is NaN"));
        }
        if self.dim == 0 {
            return Err(domain("dimension must be at least 1"));
        }
        Ok(())
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }
}

/// The zero-mode gap `Δ` and, for the low-dimensional bound, a reference gap
/// `Δ₀ < Δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSpec {
    pub delta: f64,
    pub delta0: f64,
}

impl GapSpec {
    pub fn new(delta: f64) -> Result<Self> {
        Self::with_reference(delta, 0.0)
    }

    pub fn with_reference(delta: f64, delta0: f64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(domain(format!("gap must be finite and ≥ 0, got {delta}")));
        }
        if !(delta0 >= 0.0) {
            return Err(domain(format!("reference gap must be ≥ 0, got {delta0}")));
        }
        if delta0 > 0.0 && delta0 >= delta {
            return Err(domain(format!(
                "reference gap Δ₀ = {delta0} must be below Δ = {delta}"
            )));
        }
        Ok(Self { delta, delta0 })
    }

    pub fn gapless() -> Self {
        Self {
            delta: 0.0,
            delta0: 0.0,
        }
    }
}

fn check_mu(state: &ThermoState) -> Result<()> {
    state.validate()?;
    if state.mu > 0.0 {
        return Err(domain(format!(
            "perfect Bose gas needs mu ≤ 0, got {}",
            state.mu
        )));
    }
    Ok(())
}

/// `ρ^P(β, μ) = (4πβ)^{−D/2} g_{D/2}(e^{βμ})`.
pub fn pbg_density(state: ThermoState) -> Result<f64> {
    check_mu(&state)?;
    if state.mu == 0.0 && state.dim <= 2 {
        return Err(BecError::DivergentSeries(format!(
            "perfect-gas density at mu = 0 diverges in D = {}",
            state.dim
        )));
    }
    let alpha = -state.beta * state.mu;
    let g = bose_polylog_exp(state.dim as f64 / 2.0, alpha, Accuracy::tight())?.value;
    Ok(inverse_thermal_volume(state.beta, state.dim) * g)
}

/// Critical density `ρ_c^P(β)`; `+∞` for `D ≤ 2`.
pub fn pbg_critical_density(beta: f64, dim: u32) -> Result<f64> {
    if dim <= 2 {
        ThermoState::new(beta, 0.0, dim)?;
        return Ok(f64::INFINITY);
    }
    pbg_density(ThermoState::new(beta, 0.0, dim)?)
}

/// `p^P(β, μ) = β^{−1} (4πβ)^{−D/2} g_{D/2+1}(e^{βμ})`.
pub fn pbg_pressure(state: ThermoState) -> Result<f64> {
    check_mu(&state)?;
    let alpha = -state.beta * state.mu;
    let g = bose_polylog_exp(state.dim as f64 / 2.0 + 1.0, alpha, Accuracy::tight())?.value;
    Ok(inverse_thermal_volume(state.beta, state.dim) * g / state.beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const ZETA_3_2: f64 = 2.612_375_348_685_488;
    const ZETA_5_2: f64 = 1.341_487_257_250_917;

    fn st(beta: f64, mu: f64, dim: u32) -> ThermoState {
        ThermoState::new(beta, mu, dim).unwrap()
    }

    #[test]
    fn critical_density_3d() {
        let rc = pbg_critical_density(1.0, 3).unwrap();
        assert!((rc - ZETA_3_2 / (4.0 * PI).powf(1.5)).abs() < 1e-15);
        // mpmath: ζ(3/2)/(4π)^{3/2}
        assert!((rc - 0.058_643_621_347_644_42).abs() < 1e-15);
    }

    #[test]
    fn critical_density_low_dim_is_infinite() {
        assert_eq!(pbg_critical_density(1.0, 2).unwrap(), f64::INFINITY);
        assert_eq!(pbg_critical_density(1.0, 1).unwrap(), f64::INFINITY);
        assert!(pbg_critical_density(-1.0, 2).is_err());
    }

    #[test]
    fn critical_density_5d() {
        let rc = pbg_critical_density(1.0, 5).unwrap();
        assert!((rc - ZETA_5_2 / (4.0 * PI).powf(2.5)).abs() < 1e-15);
    }

    #[test]
    fn beta_scaling() {
        let r1 = pbg_density(st(1.0, 0.0, 3)).unwrap();
        let r4 = pbg_density(st(4.0, 0.0, 3)).unwrap();
        assert!((r4 - r1 / 8.0).abs() < 1e-16);
    }

    #[test]
    fn empty_gas_limit() {
        assert_eq!(pbg_density(st(1.0, f64::NEG_INFINITY, 3)).unwrap(), 0.0);
        assert_eq!(pbg_pressure(st(1.0, f64::NEG_INFINITY, 3)).unwrap(), 0.0);
        assert!(pbg_density(st(1.0, -200.0, 3)).unwrap() < 1e-80);
    }

    #[test]
    fn pressure_at_zero_mu() {
        let p = pbg_pressure(st(1.0, 0.0, 3)).unwrap();
        assert!((p - ZETA_5_2 / (4.0 * PI).powf(1.5)).abs() < 1e-15);
        assert!((p - 0.030_114_229_487_159_4).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(pbg_density(st(1.0, 0.1, 3)), Err(BecError::Domain(_))));
        assert!(matches!(pbg_pressure(st(1.0, 0.1, 3)), Err(BecError::Domain(_))));
        assert!(matches!(
            pbg_density(st(1.0, 0.0, 2)),
            Err(BecError::DivergentSeries(_))
        ));
        assert!(ThermoState::new(0.0, -1.0, 3).is_err());
        assert!(ThermoState::new(1.0, -1.0, 0).is_err());
        assert!(GapSpec::with_reference(1.0, 1.0).is_err());
        assert!(GapSpec::new(-0.5).is_err());
    }

    #[test]
    fn pressure_derivative_is_density() {
        let h = 1e-5;
        for dim in 1..=3 {
            let mut mu = -5.0;
            while mu <= -0.1 + 1e-12 {
                let s = st(1.0, mu, dim);
                let dp = (pbg_pressure(s.with_mu(mu + h)).unwrap()
                    - pbg_pressure(s.with_mu(mu - h)).unwrap())
                    / (2.0 * h);
                let rho = pbg_density(s).unwrap();
                assert!(
                    ((dp - rho) / rho).abs() < 1e-6,
                    "D = {dim}, mu = {mu}: {dp} vs {rho}"
                );
                mu += 0.35;
            }
        }
    }

    #[test]
    fn density_monotone_in_mu_and_beta() {
        for dim in 1..=3 {
            let mut prev = 0.0;
            for i in 0..50 {
                let mu = -5.0 + 0.099 * i as f64;
                let r = pbg_density(st(1.0, mu, dim)).unwrap();
                assert!(r > prev);
                prev = r;
            }
            let mut prev = f64::INFINITY;
            for i in 0..30 {
                let beta = 0.2 + 0.1 * i as f64;
                let r = pbg_density(st(beta, -0.5, dim)).unwrap();
                assert!(r < prev);
                prev = r;
            }
        }
    }

    #[test]
    fn gap_shifted_density_decays_fast() {
        let mut prev_ratio = f64::INFINITY;
        for delta in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
            let r = pbg_density(st(1.0, -delta, 3)).unwrap();
            let ratio = r / (-delta / 2.0_f64).exp();
            assert!(ratio < prev_ratio);
            prev_ratio = ratio;
        }
        assert!(prev_ratio < 1e-6);
    }
}
