//! Finite-volume checks of the closed-form mean-field results.

use crate::error::Result;
use crate::finite_volume::{
    auto_spec, solve_auto, verify_bogoliubov_pair, verify_delta_convexity, BogoliubovMargins,
    DeltaConvexityReport, FiniteVolumeSpec, BOGOLIUBOV_TOLERANCE,
};
use crate::ideal_gas::{GapSpec, ThermoState};
use crate::meanfield_gas::{mf_solve, CouplingParams};

/// Final relative condensate gap allowed in [`oracle_convergence`].
pub const CONDENSATE_GAP_LIMIT: f64 = 0.10;
/// Final relative total-density gap allowed in [`oracle_convergence`].
pub const DENSITY_GAP_LIMIT: f64 = 0.05;
/// Increases of the condensate gap tolerated along the box sequence.
pub const TREND_VIOLATIONS_ALLOWED: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConvergence {
    pub sides: Vec<f64>,
    pub n_max: Vec<usize>,
    pub condensates: Vec<f64>,
    pub densities: Vec<f64>,
    pub condensate_limit: f64,
    pub density_limit: f64,
    pub condensate_gaps: Vec<f64>,
    pub density_gaps: Vec<f64>,
    pub trend_violations: usize,
    pub pass: bool,
}

fn rel_gap(value: f64, target: f64) -> f64 {
    (value - target).abs() / target.abs()
}

/// Finite-box condensate and density along `sides`, compared with the
/// thermodynamic-limit mean-field solution.
pub fn oracle_convergence(
    state: ThermoState,
    coupling: CouplingParams,
    gap: GapSpec,
    sides: &[f64],
) -> Result<OracleConvergence> {
    let limit = mf_solve(state, coupling, gap)?;
    let mut out = OracleConvergence {
        sides: sides.to_vec(),
        n_max: Vec::new(),
        condensates: Vec::new(),
        densities: Vec::new(),
        condensate_limit: limit.rho_condensate,
        density_limit: limit.rho_total,
        condensate_gaps: Vec::new(),
        density_gaps: Vec::new(),
        trend_violations: 0,
        pass: false,
    };
    for &l in sides {
        let spec = auto_spec(l, state, coupling, gap)?;
        let (used, r) = solve_auto(&spec, state, coupling)?;
        out.n_max.push(used.n_max);
        out.condensates.push(r.condensate);
        out.densities.push(r.density);
        out.condensate_gaps.push(rel_gap(r.condensate, limit.rho_condensate));
        out.density_gaps.push(rel_gap(r.density, limit.rho_total));
    }
    out.trend_violations = out.condensate_gaps.windows(2).filter(|w| w[1] > w[0]).count();
    out.pass = match (out.condensate_gaps.last(), out.density_gaps.last()) {
        (Some(&c), Some(&d)) => {
            c < CONDENSATE_GAP_LIMIT && d < DENSITY_GAP_LIMIT && out.trend_violations <= TREND_VIOLATIONS_ALLOWED
        }
        _ => false,
    };
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub beta: f64,
    pub mu: f64,
    pub g: f64,
    pub lambda: f64,
    pub delta: f64,
    pub dim: u32,
    pub sides: Vec<f64>,
    pub pair_box_side: f64,
    pub lambda_pairs: Vec<(f64, f64)>,
    pub convexity_box_side: f64,
    pub delta_grid: Vec<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            mu: 2.0,
            g: 1.0,
            lambda: 1.0,
            delta: 1.0,
            dim: 3,
            sides: vec![6.0, 8.0, 10.0, 12.0],
            pair_box_side: 4.0,
            lambda_pairs: vec![(1.0, 1.0), (1.0, 1.1), (1.0, 2.0), (0.5, 1.0), (2.0, 4.0)],
            convexity_box_side: 6.0,
            delta_grid: vec![0.0, 0.5, 1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub convergence: OracleConvergence,
    pub pair_spec: FiniteVolumeSpec,
    pub pairs: Vec<BogoliubovMargins>,
    pub convexity_spec: FiniteVolumeSpec,
    pub convexity: DeltaConvexityReport,
}

impl VerifyReport {
    pub fn pairs_pass(&self) -> bool {
        self.pairs.iter().all(|m| m.holds(BOGOLIUBOV_TOLERANCE))
    }

    pub fn pass(&self) -> bool {
        self.convergence.pass && self.pairs_pass() && self.convexity.pass
    }
}

/// Spec that holds the particle number for every coupling in `lambdas` and
/// every gap up to `max_delta`: `n_max` is sized for the smallest `λ` and the
/// largest gap, then doubled while the weakest system still truncates.
fn shared_spec(
    side: f64,
    state: ThermoState,
    g: f64,
    lambdas: &[f64],
    max_delta: f64,
) -> Result<FiniteVolumeSpec> {
    let lambda_min = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let weakest = CouplingParams::new(g, lambda_min)?;
    let spec = auto_spec(side, state, weakest, GapSpec::new(max_delta)?)?;
    Ok(solve_auto(&spec, state, weakest)?.0)
}

pub fn run_suite(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let state = ThermoState::new(cfg.beta, cfg.mu, cfg.dim)?;
    let coupling = CouplingParams::new(cfg.g, cfg.lambda)?;
    let gap = GapSpec::new(cfg.delta)?;
    let convergence = oracle_convergence(state, coupling, gap, &cfg.sides)?;

    let lambdas: Vec<f64> = cfg.lambda_pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    let pair_spec = shared_spec(cfg.pair_box_side, state, cfg.g, &lambdas, cfg.delta)?;
    let pairs = cfg
        .lambda_pairs
        .iter()
        .map(|&(l1, l2)| verify_bogoliubov_pair(&pair_spec, state, cfg.g, l1, l2))
        .collect::<Result<Vec<_>>>()?;

    let max_delta = cfg.delta_grid.iter().copied().fold(0.0, f64::max);
    let convexity_spec = shared_spec(cfg.convexity_box_side, state, cfg.g, &[cfg.lambda], max_delta)?;
    let convexity = verify_delta_convexity(&convexity_spec, state, coupling, &cfg.delta_grid)?;

    Ok(VerifyReport {
        config: cfg.clone(),
        convergence,
        pair_spec,
        pairs,
        convexity_spec,
        convexity,
    })
}
