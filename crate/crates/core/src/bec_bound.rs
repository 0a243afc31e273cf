//! Lower bounds on the condensate density of the gapped interacting gas.
//!
//! All bounds are expressed through the mean-field reference gas with
//! `λ = A = v̂(0)` and the superstability constants `B = v(0)/2`,
//! `C = v̂(0) − A/2`. The only quantity that is not available in closed form is
//! the total density of the interacting gas without the gap; it is either
//! supplied by the caller or replaced by a rigorous upper bound (see
//! [`interacting_density_upper_bound`]).

use crate::error::{domain, BecError, Result};
use crate::ideal_gas::{pbg_critical_density, pbg_density, GapSpec, ThermoState};
use crate::meanfield_gas::{mf_solve, CouplingParams, MeanFieldSolution};
use crate::potential::CertifiedPotential;
use crate::special_functions::NeumaierSum;

/// Log-spaced shift grid for the density quotient, optionally refined by a
/// golden-section search around the grid minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSearch {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub refine: bool,
}

impl Default for DeltaSearch {
    fn default() -> Self {
        Self {
            lo: 1e-3,
            hi: 10.0,
            points: 200,
            refine: true,
        }
    }
}

impl DeltaSearch {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0) || !(self.hi >= self.lo) || !self.hi.is_finite() {
            return Err(domain(format!(
                "shift search range must satisfy 0 < lo ≤ hi < ∞, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.points == 0 {
            return Err(domain("shift search needs at least one point"));
        }
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        let ratio = (self.hi / self.lo).ln();
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.hi
                } else {
                    self.lo * (ratio * i as f64 / (self.points - 1) as f64).exp()
                }
            })
            .collect()
    }
}

/// Where the gapless interacting density comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoGaplessMode {
    UserSupplied(f64),
    RigorousUpperBound(DeltaSearch),
}

impl RhoGaplessMode {
    pub fn validate(&self) -> Result<()> {
        match self {
            RhoGaplessMode::UserSupplied(v) if !(*v >= 0.0) || !v.is_finite() => Err(domain(
                format!("user-supplied interacting density must be finite and ≥ 0, got {v}"),
            )),
            RhoGaplessMode::UserSupplied(_) => Ok(()),
            RhoGaplessMode::RigorousUpperBound(s) => s.validate(),
        }
    }

    pub fn is_rigorous(&self) -> bool {
        matches!(self, RhoGaplessMode::RigorousUpperBound(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerm {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub lower_bound: f64,
    pub terms: Vec<BoundTerm>,
    pub rho_gapless_used: f64,
    /// `true` when the gapless density came from the rigorous upper bound.
    pub rho_gapless_rigorous: bool,
    pub valid: bool,
    pub validity_reasons: Vec<String>,
}

impl BoundReport {
    fn from_terms(terms: Vec<BoundTerm>, rho_gapless: f64, rigorous: bool) -> Self {
        let mut sum = NeumaierSum::default();
        for t in &terms {
            sum.add(t.value);
        }
        Self {
            lower_bound: sum.value(),
            terms,
            rho_gapless_used: rho_gapless,
            rho_gapless_rigorous: rigorous,
            valid: true,
            validity_reasons: Vec::new(),
        }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }
}

/// Result of the density quotient minimisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityUpperBound {
    pub value: f64,
    pub best_shift: f64,
    pub evaluations: usize,
}

fn check_dims(state: &ThermoState, pot: &CertifiedPotential) -> Result<()> {
    state.validate()?;
    if pot.dim() != state.dim {
        return Err(domain(format!(
            "potential certified in D = {} but the state has D = {}",
            pot.dim(),
            state.dim
        )));
    }
    Ok(())
}

fn check_g(g: f64) -> Result<()> {
    if !(g > 0.0) || !g.is_finite() {
        return Err(domain(format!("coupling g must be positive, got {g}")));
    }
    Ok(())
}

fn coupling(g: f64, pot: &CertifiedPotential) -> Result<CouplingParams> {
    CouplingParams::new(g, pot.vhat0())
}

/// Upper bound on the total density of the interacting gas at gap `refgap`.
///
/// With `λ = v̂(0)` the interacting pressure lies between
/// `p_lb(μ) = p_MF(μ) − g v̂(0)/2 (ρ² − ρ₀²)` and
/// `p_ub(μ) = p_MF(μ + g v(0)/2)`. Convexity of the pressure in `μ` then gives
/// `ρ(μ) ≤ [p_ub(μ+δ) − p_lb(μ)]/δ` for every `δ > 0`; the minimum over the
/// search grid is returned.
pub fn interacting_density_upper_bound(
    state: ThermoState,
    g: f64,
    pot: &CertifiedPotential,
    refgap: f64,
    search: &DeltaSearch,
) -> Result<DensityUpperBound> {
    check_dims(&state, pot)?;
    check_g(g)?;
    search.validate()?;
    if refgap == 0.0 && state.dim < 3 {
        return Err(domain(format!(
            "gapless reference needs D ≥ 3, got D = {}",
            state.dim
        )));
    }
    let gap = GapSpec::new(refgap)?;
    let cp = coupling(g, pot)?;
    let vhat0 = pot.vhat0();
    let shift = g * pot.v0() / 2.0;

    let base = mf_solve(state, cp, gap)?;
    let p_lb = base.pressure
        - 0.5 * g * vhat0 * (base.rho_total.powi(2) - base.rho_condensate.powi(2));

    let mut evaluations = 0usize;
    let mut quotient = |delta: f64| -> Result<f64> {
        evaluations += 1;
        let up = mf_solve(state.with_mu(state.mu + delta + shift), cp, gap)?;
        Ok((up.pressure - p_lb) / delta)
    };

    let grid = search.grid();
    let mut values = Vec::with_capacity(grid.len());
    for &d in &grid {
        values.push(quotient(d)?);
    }
    let mut best: Option<(f64, f64)> = None;
    let mut best_idx = 0;
    for (i, (&d, &q)) in grid.iter().zip(&values).enumerate() {
        if q.is_finite() && best.is_none_or(|(_, b)| q < b) {
            best = Some((d, q));
            best_idx = i;
        }
    }
    let (mut best_d, mut best_q) = best.ok_or(BecError::EmptySearch)?;

    if search.refine && grid.len() >= 3 {
        let mut a = grid[best_idx.saturating_sub(1)];
        let mut b = grid[(best_idx + 1).min(grid.len() - 1)];
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = quotient(c)?;
        let mut fd = quotient(d)?;
        for (x, fx) in [(c, fc), (d, fd)] {
            if fx.is_finite() && fx < best_q {
                best_q = fx;
                best_d = x;
            }
        }
        let mut steps = 0;
        while b - a > 1e-8 * best_d && steps < 200 {
            if !(fc >= fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = quotient(c)?;
                if fc.is_finite() && fc < best_q {
                    best_q = fc;
                    best_d = c;
                }
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = quotient(d)?;
                if fd.is_finite() && fd < best_q {
                    best_q = fd;
                    best_d = d;
                }
            }
            steps += 1;
        }
    }

    Ok(DensityUpperBound {
        value: best_q,
        best_shift: best_d,
        evaluations,
    })
}

fn resolve_rho_gapless(
    state: ThermoState,
    g: f64,
    pot: &CertifiedPotential,
    refgap: f64,
    rg: &RhoGaplessMode,
) -> Result<f64> {
    rg.validate()?;
    match rg {
        RhoGaplessMode::UserSupplied(v) => Ok(*v),
        RhoGaplessMode::RigorousUpperBound(search) => {
            Ok(interacting_density_upper_bound(state, g, pot, refgap, search)?.value)
        }
    }
}

/// Pieces of the three-dimensional bound that do not depend on `ρ_gapless`.
#[derive(Debug, Clone, Copy)]
struct LemmaInputs {
    rho_c: f64,
    vhat0: f64,
    v0: f64,
}

impl LemmaInputs {
    fn new(state: ThermoState, pot: &CertifiedPotential) -> Result<Self> {
        Ok(Self {
            rho_c: pbg_critical_density(state.beta, state.dim)?,
            vhat0: pot.vhat0(),
            v0: pot.v0(),
        })
    }

    fn terms(&self, state: ThermoState, g: f64, delta: f64, rho_gapless: f64) -> Result<Vec<BoundTerm>> {
        let rho_p = pbg_density(state.with_mu(-delta))?;
        let mu = state.mu;
        Ok(vec![
            BoundTerm {
                name: "mu_term",
                value: mu / (g * self.vhat0),
            },
            BoundTerm {
                name: "quadratic_pbg_term",
                value: g * self.vhat0 / (2.0 * delta) * rho_p * rho_p,
            },
            BoundTerm {
                name: "linear_pbg_term",
                value: -(mu + delta) / delta * rho_p,
            },
            BoundTerm {
                name: "v0_term",
                value: -g * self.v0 / (2.0 * delta) * rho_gapless,
            },
            BoundTerm {
                name: "critical_term",
                value: -self.rho_c,
            },
        ])
    }

    fn bound(&self, state: ThermoState, g: f64, delta: f64, rho_gapless: f64) -> Result<f64> {
        let mut sum = NeumaierSum::default();
        for t in self.terms(state, g, delta, rho_gapless)? {
            sum.add(t.value);
        }
        Ok(sum.value())
    }
}

fn check_lemma_domain(state: &ThermoState, delta: f64) -> Result<()> {
    if state.dim < 3 {
        return Err(domain(format!(
            "the gapless-reference bound needs D ≥ 3, got D = {}",
            state.dim
        )));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(domain(format!("gap must be positive and finite, got {delta}")));
    }
    Ok(())
}

/// The condensate lower bound for `D ≥ 3` with the gapless reference gas:
///
/// `μ/(gv̂₀) + gv̂₀ρ_P²/(2Δ) − (μ+Δ)ρ_P/Δ − gv₀ρ_gapless/(2Δ) − ρ_c`,
/// with `ρ_P = ρ^P(β, −Δ)`.
///
/// The number is always returned; `valid` is cleared when
/// `μ ≤ g v̂(0) ρ_c^P(β)`.
pub fn lemma_lower_bound(
    state: ThermoState,
    g: f64,
    gap: GapSpec,
    pot: &CertifiedPotential,
    rg: &RhoGaplessMode,
) -> Result<BoundReport> {
    check_dims(&state, pot)?;
    check_g(g)?;
    check_lemma_domain(&state, gap.delta)?;
    let inputs = LemmaInputs::new(state, pot)?;
    let rho_g = resolve_rho_gapless(state, g, pot, 0.0, rg)?;
    let terms = inputs.terms(state, g, gap.delta, rho_g)?;
    let mut report = BoundReport::from_terms(terms, rho_g, rg.is_rigorous());
    let threshold = g * inputs.vhat0 * inputs.rho_c;
    if !(state.mu > threshold) {
        report.valid = false;
        report.validity_reasons.push(format!(
            "mu = {} does not exceed g·v̂(0)·ρ_c = {threshold}",
            state.mu
        ));
    }
    Ok(report)
}

/// Mean-field form of the bound with a reference gap `Δ₀` (zero allowed when
/// the reference gas condenses):
///
/// `ρ₀^{Δ₀} + gv̂₀(ρ₀^Δ)²/(2(Δ−Δ₀)) − g(Bρ_gapless + C(ρ^Δ)²)/(Δ−Δ₀)`,
/// all mean-field quantities at `λ = A = v̂(0)`.
pub fn convexity_form_bound(
    state: ThermoState,
    g: f64,
    gap: GapSpec,
    pot: &CertifiedPotential,
    rho_gapless: f64,
) -> Result<BoundReport> {
    check_dims(&state, pot)?;
    check_g(g)?;
    if !(gap.delta > gap.delta0) {
        return Err(domain(format!(
            "need Δ₀ < Δ, got Δ₀ = {}, Δ = {}",
            gap.delta0, gap.delta
        )));
    }
    if !(rho_gapless >= 0.0) {
        return Err(domain(format!("interacting density must be ≥ 0, got {rho_gapless}")));
    }
    let cp = coupling(g, pot)?;
    let a = pot.vhat0();
    let b = pot.v0() / 2.0;
    let c = pot.vhat0() - a / 2.0;
    let reference = mf_solve(state, cp, GapSpec::new(gap.delta0)?)?;
    let top = mf_solve(state, cp, GapSpec::new(gap.delta)?)?;
    let denom = gap.delta - gap.delta0;
    let terms = vec![
        BoundTerm {
            name: "reference_condensate",
            value: reference.rho_condensate,
        },
        BoundTerm {
            name: "condensate_square_term",
            value: g * a / (2.0 * denom) * top.rho_condensate.powi(2),
        },
        BoundTerm {
            name: "v0_term",
            value: -g * b / denom * rho_gapless,
        },
        BoundTerm {
            name: "meanfield_density_term",
            value: -g * c / denom * top.rho_total.powi(2),
        },
    ];
    Ok(BoundReport::from_terms(terms, rho_gapless, false))
}

/// The bound for any `D ≥ 1`, using a reference gap `0 < Δ₀ < Δ`.
///
/// The gapless density is taken at gap `Δ₀`. `valid` is cleared when the
/// reference gas is not condensed, since the bound then carries no
/// information about condensation.
pub fn general_lower_bound(
    state: ThermoState,
    g: f64,
    gap: GapSpec,
    pot: &CertifiedPotential,
    rg_at_delta0: &RhoGaplessMode,
) -> Result<BoundReport> {
    check_dims(&state, pot)?;
    check_g(g)?;
    if !(gap.delta0 > 0.0) {
        return Err(domain(format!(
            "reference gap must be positive, got Δ₀ = {}",
            gap.delta0
        )));
    }
    if !(gap.delta0 < gap.delta) {
        return Err(domain(format!(
            "need Δ₀ < Δ, got Δ₀ = {}, Δ = {}",
            gap.delta0, gap.delta
        )));
    }
    let rho_g = resolve_rho_gapless(state, g, pot, gap.delta0, rg_at_delta0)?;
    let mut report = convexity_form_bound(state, g, gap, pot, rho_g)?;
    report.rho_gapless_rigorous = rg_at_delta0.is_rigorous();
    let reference = mf_solve(state, coupling(g, pot)?, GapSpec::new(gap.delta0)?)?;
    if !reference.condensed {
        report.valid = false;
        report.validity_reasons.push(format!(
            "reference mean-field gas at Δ₀ = {} is not condensed at mu = {}",
            gap.delta0, state.mu
        ));
    }
    Ok(report)
}

/// Magnitude of the alternative bracket
/// `gv̂₀ρ_P²/(2Δ) − gv₀ρ_gapless/(2Δ) − 2(μ+Δ)ρ_P/Δ`, which carries a factor 2 on
/// the linear term. Diagnostic only; not used by any bound.
pub fn theorem_bracket(
    state: ThermoState,
    g: f64,
    delta: f64,
    pot: &CertifiedPotential,
    rho_gapless: f64,
) -> Result<f64> {
    check_dims(&state, pot)?;
    check_g(g)?;
    check_lemma_domain(&state, delta)?;
    let rho_p = pbg_density(state.with_mu(-delta))?;
    let vhat0 = pot.vhat0();
    let v0 = pot.v0();
    let value = g * vhat0 / (2.0 * delta) * rho_p * rho_p - g * v0 / (2.0 * delta) * rho_gapless
        - 2.0 * (state.mu + delta) / delta * rho_p;
    Ok(value.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMinResult {
    pub delta_min: f64,
    pub bound_at_min: f64,
    pub rho_gapless_used: f64,
    pub scan_points: usize,
    /// The returned gap is the lowest scan point; the bound may already hold
    /// below it.
    pub at_scan_floor: bool,
    /// The "for every larger gap" condition was checked on these scan points only.
    pub sample_based: bool,
}

pub const DELTA_MIN_SCAN_FLOOR: f64 = 1e-3;
pub const DELTA_MIN_SCAN_POINTS: usize = 256;
pub const DELTA_MIN_RESOLUTION: f64 = 1e-6;

/// Smallest gap in `(0, delta_cap]` above which the 3D bound stays at least
/// `eta` on every scan point.
pub fn delta_min_solve(
    state: ThermoState,
    g: f64,
    pot: &CertifiedPotential,
    eta: f64,
    rg: &RhoGaplessMode,
    delta_cap: f64,
) -> Result<DeltaMinResult> {
    check_dims(&state, pot)?;
    check_g(g)?;
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(domain(format!("target eta must be positive, got {eta}")));
    }
    if !(delta_cap > DELTA_MIN_SCAN_FLOOR) || !delta_cap.is_finite() {
        return Err(domain(format!(
            "delta cap must be finite and above {DELTA_MIN_SCAN_FLOOR}, got {delta_cap}"
        )));
    }
    check_lemma_domain(&state, delta_cap)?;
    let inputs = LemmaInputs::new(state, pot)?;
    let required = g * inputs.vhat0 * (inputs.rho_c + 3.0 * eta);
    if !(state.mu > required) {
        return Err(BecError::PreconditionFailed(format!(
            "mu = {} must exceed g·v̂(0)·(ρ_c + 3η) = {required}",
            state.mu
        )));
    }
    let rho_g = resolve_rho_gapless(state, g, pot, 0.0, rg)?;
    let bound = |d: f64| inputs.bound(state, g, d, rho_g);

    let n = DELTA_MIN_SCAN_POINTS;
    let ratio = (delta_cap / DELTA_MIN_SCAN_FLOOR).ln();
    let grid: Vec<f64> = (0..n)
        .map(|i| {
            if i + 1 == n {
                delta_cap
            } else {
                DELTA_MIN_SCAN_FLOOR * (ratio * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect();
    let mut last_fail = None;
    for (i, &d) in grid.iter().enumerate() {
        if !(bound(d)? >= eta) {
            last_fail = Some(i);
        }
    }
    let (delta_min, at_floor) = match last_fail {
        None => (grid[0], true),
        Some(i) if i + 1 == n => {
            return Err(BecError::NotFound(format!(
                "bound stays below eta = {eta} at the cap Δ = {delta_cap}"
            )))
        }
        Some(i) => {
            let (mut lo, mut hi) = (grid[i], grid[i + 1]);
            while hi - lo > DELTA_MIN_RESOLUTION {
                let mid = 0.5 * (lo + hi);
                if bound(mid)? >= eta {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            (hi, false)
        }
    };
    Ok(DeltaMinResult {
        delta_min,
        bound_at_min: bound(delta_min)?,
        rho_gapless_used: rho_g,
        scan_points: n,
        at_scan_floor: at_floor,
        sample_based: true,
    })
}

/// Mean-field solution at `λ = v̂(0)` for the given gap; convenience for
/// reporting.
pub fn reference_solution(
    state: ThermoState,
    g: f64,
    pot: &CertifiedPotential,
    delta: f64,
) -> Result<MeanFieldSolution> {
    check_dims(&state, pot)?;
    mf_solve(state, coupling(g, pot)?, GapSpec::new(delta)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialModel;
    use proptest::prelude::*;

    fn gauss(dim: u32) -> CertifiedPotential {
        CertifiedPotential::with_defaults(PotentialModel::gaussian(1.0, 1.0).unwrap(), dim).unwrap()
    }

    fn st(beta: f64, mu: f64, dim: u32) -> ThermoState {
        ThermoState::new(beta, mu, dim).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn weak_coupling_bounds_free_density() {
        let pot = gauss(3);
        let ub = interacting_density_upper_bound(st(1.0, -1.0, 3), 1e-8, &pot, 0.0, &DeltaSearch::default())
            .unwrap();
        let free = pbg_density(st(1.0, -1.0, 3)).unwrap();
        assert!(ub.value >= free, "{} < {free}", ub.value);
        assert!(ub.value < 10.0 * free);
    }

    #[test]
    fn density_bound_exceeds_meanfield_density() {
        let pot = gauss(3);
        let s = st(1.0, 13.96, 3);
        let ub = interacting_density_upper_bound(s, 1.0, &pot, 0.0, &DeltaSearch::default()).unwrap();
        let mf = reference_solution(s, 1.0, &pot, 0.0).unwrap();
        assert!(ub.value >= 0.0);
        // p_lb ≤ p_MF and the quotient majorises the slope of p_MF.
        assert!(ub.value >= mf.rho_total);
        assert!(ub.best_shift > 1e-3 && ub.best_shift <= 10.0);
    }

    #[test]
    fn coarser_search_never_lowers_minimum() {
        let pot = gauss(3);
        let s = st(1.0, 5.0, 3);
        let fine = DeltaSearch {
            points: 64,
            refine: false,
            ..DeltaSearch::default()
        };
        let coarse = DeltaSearch { points: 8, ..fine };
        // 8-point grid nodes are a subset of the 64-point grid only when
        // (64−1) is a multiple of (8−1).
        let f = interacting_density_upper_bound(s, 1.0, &pot, 0.0, &fine).unwrap();
        let c = interacting_density_upper_bound(s, 1.0, &pot, 0.0, &coarse).unwrap();
        assert!(c.value >= f.value * (1.0 - 1e-14));
    }

    #[test]
    fn upper_bound_needs_gap_in_low_dim() {
        let pot = gauss(2);
        assert!(matches!(
            interacting_density_upper_bound(st(1.0, 1.0, 2), 1.0, &pot, 0.0, &DeltaSearch::default()),
            Err(BecError::Domain(_))
        ));
        assert!(interacting_density_upper_bound(st(1.0, 1.0, 2), 1.0, &pot, 0.1, &DeltaSearch::default()).is_ok());
    }

    #[test]
    fn lemma_terms_and_sum() {
        let pot = gauss(3);
        let r = lemma_lower_bound(
            st(1.0, 10.0, 3),
            1.0,
            GapSpec::new(2.0).unwrap(),
            &pot,
            &RhoGaplessMode::UserSupplied(0.5),
        )
        .unwrap();
        let names: Vec<_> = r.terms.iter().map(|t| t.name).collect();
        assert_eq!(
            names,
            ["mu_term", "quadratic_pbg_term", "linear_pbg_term", "v0_term", "critical_term"]
        );
        let s: f64 = r.terms.iter().map(|t| t.value).sum();
        assert!((s - r.lower_bound).abs() < 1e-14 * s.abs().max(1.0));
        assert!(r.valid);
        assert_eq!(r.rho_gapless_used, 0.5);
    }

    #[test]
    fn lemma_large_gap_limit() {
        let pot = gauss(3);
        let (mu, g) = (10.0, 1.0);
        let r = lemma_lower_bound(
            st(1.0, mu, 3),
            g,
            GapSpec::new(1e3).unwrap(),
            &pot,
            &RhoGaplessMode::UserSupplied(1.0),
        )
        .unwrap();
        let limit = mu / (g * pot.vhat0()) - pbg_critical_density(1.0, 3).unwrap();
        // only the v0 term survives, at O(1/Δ)
        assert!((r.lower_bound - limit).abs() < 1e-3 * limit);
    }

    #[test]
    fn lemma_domain_and_validity() {
        let pot3 = gauss(3);
        let rg = RhoGaplessMode::UserSupplied(0.1);
        assert!(matches!(
            lemma_lower_bound(st(1.0, 10.0, 3), 1.0, GapSpec::gapless(), &pot3, &rg),
            Err(BecError::Domain(_))
        ));
        let pot2 = gauss(2);
        assert!(matches!(
            lemma_lower_bound(st(1.0, 10.0, 2), 1.0, GapSpec::new(1.0).unwrap(), &pot2, &rg),
            Err(BecError::Domain(_))
        ));
        let threshold = pot3.vhat0() * pbg_critical_density(1.0, 3).unwrap();
        let r = lemma_lower_bound(st(1.0, threshold, 3), 1.0, GapSpec::new(1.0).unwrap(), &pot3, &rg).unwrap();
        assert!(!r.valid);
        assert_eq!(r.validity_reasons.len(), 1);
        assert!(r.lower_bound.is_finite());
        // mismatch between certified and requested dimension
        assert!(lemma_lower_bound(st(1.0, 10.0, 3), 1.0, GapSpec::new(1.0).unwrap(), &pot2, &rg).is_err());
    }

    #[test]
    fn lemma_matches_convexity_form() {
        let pot = gauss(3);
        for &(mu, g, delta, rg) in &[(10.0, 1.0, 1.0, 0.3), (3.0, 0.5, 0.2, 2.0), (50.0, 2.0, 7.0, 0.0)] {
            let s = st(1.0, mu, 3);
            let lemma = lemma_lower_bound(s, g, GapSpec::new(delta).unwrap(), &pot, &RhoGaplessMode::UserSupplied(rg))
                .unwrap();
            let conv = convexity_form_bound(s, g, GapSpec::new(delta).unwrap(), &pot, rg).unwrap();
            assert!(lemma.valid);
            assert!(rel(lemma.lower_bound, conv.lower_bound) < 1e-12, "{lemma:?} vs {conv:?}");
        }
    }

    #[test]
    fn general_bound_tends_to_lemma() {
        let pot = gauss(3);
        let s = st(1.0, 10.0, 3);
        let rg = RhoGaplessMode::UserSupplied(0.4);
        let lemma = lemma_lower_bound(s, 1.0, GapSpec::new(2.0).unwrap(), &pot, &rg).unwrap();
        let general =
            general_lower_bound(s, 1.0, GapSpec::with_reference(2.0, 1e-22).unwrap(), &pot, &rg).unwrap();
        assert!(rel(lemma.lower_bound, general.lower_bound) < 1e-10);
    }

    #[test]
    fn general_bound_domain() {
        let pot = gauss(1);
        let s = st(1.0, 5.0, 1);
        let rg = RhoGaplessMode::UserSupplied(0.0);
        let bad = GapSpec {
            delta: 1.0,
            delta0: 1.0,
        };
        assert!(matches!(general_lower_bound(s, 1.0, bad, &pot, &rg), Err(BecError::Domain(_))));
        assert!(matches!(
            general_lower_bound(s, 1.0, GapSpec::new(1.0).unwrap(), &pot, &rg),
            Err(BecError::Domain(_))
        ));
    }

    #[test]
    fn general_bound_near_reference_gap_blows_down() {
        let pot = gauss(1);
        let s = st(1.0, 5.0, 1);
        let rg = RhoGaplessMode::UserSupplied(1.0);
        let r = general_lower_bound(s, 1.0, GapSpec::with_reference(0.1 + 1e-9, 0.1).unwrap(), &pot, &rg).unwrap();
        assert!(r.lower_bound < -1e6);
        assert!(r.lower_bound.is_finite());
        assert!(r.valid);
    }

    #[test]
    fn delta_min_basic() {
        let pot = gauss(3);
        let s = st(1.0, 10.0, 3);
        let rg = RhoGaplessMode::RigorousUpperBound(DeltaSearch::default());
        let res = delta_min_solve(s, 1.0, &pot, 0.01, &rg, 1e3).unwrap();
        assert!(res.bound_at_min >= 0.01);
        assert!(res.delta_min > 0.0 && res.delta_min <= 1e3);
        let looser = delta_min_solve(s, 1.0, &pot, 0.005, &rg, 1e3).unwrap();
        assert!(looser.delta_min <= res.delta_min);
    }

    #[test]
    fn delta_min_precondition_is_strict() {
        let pot = gauss(3);
        let eta = 0.01;
        let mu = pot.vhat0() * (pbg_critical_density(1.0, 3).unwrap() + 3.0 * eta);
        let rg = RhoGaplessMode::UserSupplied(0.1);
        assert!(matches!(
            delta_min_solve(st(1.0, mu, 3), 1.0, &pot, eta, &rg, 1e3),
            Err(BecError::PreconditionFailed(_))
        ));
    }

    #[test]
    fn delta_min_not_found_below_cap() {
        let pot = gauss(3);
        let rg = RhoGaplessMode::UserSupplied(1e6);
        assert!(matches!(
            delta_min_solve(st(1.0, 10.0, 3), 1.0, &pot, 0.01, &rg, 2.0),
            Err(BecError::NotFound(_))
        ));
    }

    #[test]
    fn theorem_bracket_is_nonnegative() {
        let pot = gauss(3);
        let b = theorem_bracket(st(1.0, 10.0, 3), 1.0, 1.0, &pot, 0.3).unwrap();
        assert!(b > 0.0 && b.is_finite());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn larger_gapless_density_never_helps(mu in 1.0f64..40.0, delta in 0.05f64..20.0, r1 in 0.0f64..5.0, extra in 0.0f64..5.0) {
            let pot = gauss(3);
            let s = st(1.0, mu, 3);
            let gap = GapSpec::new(delta).unwrap();
            let a = lemma_lower_bound(s, 1.0, gap, &pot, &RhoGaplessMode::UserSupplied(r1)).unwrap();
            let b = lemma_lower_bound(s, 1.0, gap, &pot, &RhoGaplessMode::UserSupplied(r1 + extra)).unwrap();
            prop_assert!(b.lower_bound <= a.lower_bound);
        }

        #[test]
        fn bound_below_meanfield_total(mu in 1.0f64..40.0, g in 0.2f64..3.0, delta in 0.05f64..20.0, r in 0.0f64..5.0) {
            let pot = gauss(3);
            let s = st(1.0, mu, 3);
            let r = lemma_lower_bound(s, g, GapSpec::new(delta).unwrap(), &pot, &RhoGaplessMode::UserSupplied(r)).unwrap();
            prop_assert!(r.lower_bound <= (mu + delta) / (g * pot.vhat0()));
        }

        #[test]
        fn bound_increases_with_mu_at_large_gap(mu in 1.0f64..40.0, dmu in 0.01f64..5.0, delta in 10.0f64..100.0) {
            let pot = gauss(3);
            let gap = GapSpec::new(delta).unwrap();
            let rg = RhoGaplessMode::UserSupplied(1.0);
            let a = lemma_lower_bound(st(1.0, mu, 3), 1.0, gap, &pot, &rg).unwrap();
            let b = lemma_lower_bound(st(1.0, mu + dmu, 3), 1.0, gap, &pot, &rg).unwrap();
            prop_assert!(b.lower_bound > a.lower_bound);
        }

        #[test]
        fn two_forms_agree(beta in 0.3f64..3.0, g in 0.2f64..3.0, excess in 0.01f64..30.0, delta in 0.05f64..20.0, r in 0.0f64..5.0) {
            let pot = gauss(3);
            let mu = g * pot.vhat0() * pbg_critical_density(beta, 3).unwrap() + excess;
            let s = st(beta, mu, 3);
            let gap = GapSpec::new(delta).unwrap();
            let lemma = lemma_lower_bound(s, g, gap, &pot, &RhoGaplessMode::UserSupplied(r)).unwrap();
            let conv = convexity_form_bound(s, g, gap, &pot, r).unwrap();
            let scale = lemma.terms.iter().map(|t| t.value.abs()).fold(0.0, f64::max);
            prop_assert!((lemma.lower_bound - conv.lower_bound).abs() <= 1e-12 * scale.max(lemma.lower_bound.abs()));
        }
    }
}
