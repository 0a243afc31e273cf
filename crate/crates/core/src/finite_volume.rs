//! Exact finite-volume mean-field gas in a periodic box of side `L`.
//!
//! The mean-field term `gλN²/2V` depends on the total particle number only, so
//! the grand-canonical sum factorises into canonical free-gas partition
//! functions `Z_N` weighted by `exp(βμN − βgλN²/2V)`. The `Z_N` come from the
//! standard Bose recursion `Z_N = N⁻¹ Σ_j Z₁(jβ) Z_{N−j}`, run in the log domain
//! with energies measured from the lowest level.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{domain, BecError, Result};
use crate::ideal_gas::{GapSpec, ThermoState};
use crate::meanfield_gas::{mf_solve, CouplingParams};

pub const DEFAULT_TAIL_BOUND: f64 = 1e-8;
pub const DEFAULT_MODE_CAPACITY: u64 = 200_000;
/// `βε_max` used by [`auto_spec`]; modes above it carry weight below `e^{−36}`.
pub const DEFAULT_CUTOFF_BETA_UNITS: f64 = 36.0;
/// Smallest particle-number truncation chosen by [`auto_spec`].
pub const MIN_AUTO_N_MAX: usize = 32;
/// Number of times [`solve_auto`] doubles `n_max` before giving up.
pub const MAX_DOUBLINGS: usize = 2;

// Excited part of Z₁(jβ) below which it is dropped relative to the lowest mode.
const NEGLIGIBLE_EXCITED: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteVolumeSpec {
    pub box_side: f64,
    pub energy_cutoff: f64,
    pub n_max: usize,
    pub dim: u32,
    pub gap: GapSpec,
    pub tail_bound: f64,
    pub mode_capacity: u64,
}

impl FiniteVolumeSpec {
    pub fn new(box_side: f64, energy_cutoff: f64, n_max: usize, dim: u32, gap: GapSpec) -> Result<Self> {
        let spec = Self {
            box_side,
            energy_cutoff,
            n_max,
            dim,
            gap,
            tail_bound: DEFAULT_TAIL_BOUND,
            mode_capacity: DEFAULT_MODE_CAPACITY,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.box_side > 0.0) || !self.box_side.is_finite() {
            return Err(domain(format!("box side must be positive, got {}", self.box_side)));
        }
        if !(self.energy_cutoff > 0.0) || !self.energy_cutoff.is_finite() {
            return Err(domain(format!(
                "energy cutoff must be positive, got {}",
                self.energy_cutoff
            )));
        }
        if self.n_max == 0 {
            return Err(domain("n_max must be at least 1"));
        }
        if self.dim == 0 {
            return Err(domain("dimension must be at least 1"));
        }
        if !(self.tail_bound > 0.0 && self.tail_bound <= 1.0) {
            return Err(domain(format!("tail bound must lie in (0, 1], got {}", self.tail_bound)));
        }
        if self.mode_capacity == 0 {
            return Err(domain("mode capacity must be at least 1"));
        }
        GapSpec::new(self.gap.delta)?;
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.box_side.powi(self.dim as i32)
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self {
            gap: GapSpec { delta, delta0: 0.0 },
            ..self
        }
    }

    pub fn with_n_max(self, n_max: usize) -> Self {
        Self { n_max, ..self }
    }
}

/// One-particle spectrum: the zero mode plus excited levels with
/// multiplicities, sorted by energy.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationSpectrum {
    pub zero_energy: f64,
    pub levels: Vec<(f64, u64)>,
}

impl OccupationSpectrum {
    /// The zero mode must be the lowest level.
    pub fn new(zero_energy: f64, mut levels: Vec<(f64, u64)>) -> Result<Self> {
        if !zero_energy.is_finite() {
            return Err(domain("zero-mode energy must be finite"));
        }
        levels.retain(|&(_, m)| m > 0);
        if levels.iter().any(|&(e, _)| !e.is_finite() || e < zero_energy) {
            return Err(domain("excited levels must be finite and not below the zero mode"));
        }
        levels.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { zero_energy, levels })
    }

    pub fn mode_count(&self) -> u64 {
        1 + self.levels.iter().map(|&(_, m)| m).sum::<u64>()
    }
}

/// Lattice points `n ∈ ℤ^D` with `|n|² = s`, for every `s ≤ s_max`.
fn shell_counts(dim: u32, s_max: u64) -> HashMap<u64, u64> {
    let mut one_d: Vec<(u64, u64)> = vec![(0, 1)];
    let mut n = 1u64;
    while n * n <= s_max {
        one_d.push((n * n, 2));
        n += 1;
    }
    let mut acc: HashMap<u64, u64> = HashMap::from([(0, 1)]);
    for _ in 0..dim {
        let mut next: HashMap<u64, u64> = HashMap::with_capacity(acc.len() * 2);
        for (&s, &c) in &acc {
            for &(t, m) in &one_d {
                if s + t > s_max {
                    break;
                }
                *next.entry(s + t).or_insert(0) += c * m;
            }
        }
        acc = next;
    }
    acc
}

fn unit_ball_volume(dim: u32) -> f64 {
    let d = dim as f64;
    PI.powf(d / 2.0) / statrs::function::gamma::gamma(d / 2.0 + 1.0)
}

/// All `k = 2πn/L` with `|k|² ≤ ε_max`; the `k = 0` mode sits at `−Δ`.
pub fn enumerate_modes(spec: &FiniteVolumeSpec) -> Result<OccupationSpectrum> {
    spec.validate()?;
    let unit = (2.0 * PI / spec.box_side).powi(2);
    let ratio = spec.energy_cutoff / unit;
    // cheap guard before enumerating: lattice count ≈ ball volume
    let radius = ratio.sqrt();
    let estimate = unit_ball_volume(spec.dim) * (radius + spec.dim as f64).powi(spec.dim as i32);
    if ratio > 1e15 || estimate.min(f64::MAX) > 64.0 * spec.mode_capacity as f64 {
        let lower = unit_ball_volume(spec.dim) * (radius - (spec.dim as f64).sqrt()).max(0.0).powi(spec.dim as i32);
        if lower > spec.mode_capacity as f64 {
            return Err(BecError::CapacityExceeded {
                count: lower.min(u64::MAX as f64) as u64,
                capacity: spec.mode_capacity,
            });
        }
    }
    let s_max = (ratio + 1e-12).floor() as u64;
    let counts = shell_counts(spec.dim, s_max);
    let total: u64 = counts.values().sum();
    if total > spec.mode_capacity {
        return Err(BecError::CapacityExceeded {
            count: total,
            capacity: spec.mode_capacity,
        });
    }
    let levels = counts
        .into_iter()
        .filter(|&(s, _)| s > 0)
        .map(|(s, m)| (s as f64 * unit, m))
        .collect();
    OccupationSpectrum::new(-spec.gap.delta, levels)
}

fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + (-(a - b).abs()).exp().ln_1p()
}

fn logsumexp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || !m.is_finite() {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Canonical partition functions with energies shifted so that the zero
/// mode sits at 0. `ln Z_N = ln_z_shifted[N] − βNε₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalTable {
    pub beta: f64,
    pub zero_energy: f64,
    pub ln_z_shifted: Vec<f64>,
    /// `ln Σ_{m<N} Z'_m`, indexed by `N`; gives `⟨n₀⟩_N = e^{prefix[N] − ln Z'_N}`.
    prefix: Vec<f64>,
    /// Index from which `Z₁(jβ)` reduces to the zero-mode term.
    pub tail_start: usize,
}

impl CanonicalTable {
    pub fn ln_z(&self, n: usize) -> f64 {
        self.ln_z_shifted[n] - self.beta * n as f64 * self.zero_energy
    }

    /// Canonical zero-mode occupation `⟨n₀⟩_N`.
    pub fn zero_mode_occupation(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        (self.prefix[n] - self.ln_z_shifted[n]).exp()
    }

    pub fn n_max(&self) -> usize {
        self.ln_z_shifted.len() - 1
    }
}

/// Run the Bose recursion up to `n_max`. `beta = 0` is allowed.
pub fn canonical_table(spectrum: &OccupationSpectrum, beta: f64, n_max: usize) -> Result<CanonicalTable> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(domain(format!("beta must be finite and ≥ 0, got {beta}")));
    }
    let e0 = spectrum.zero_energy;
    // ln Z'_1(jβ) for j < tail_start; beyond it only the zero mode counts.
    let mut ln_y = vec![0.0];
    let mut tail_start = n_max + 1;
    for j in 1..=n_max {
        let excited: f64 = spectrum
            .levels
            .iter()
            .map(|&(e, m)| m as f64 * (-(j as f64) * beta * (e - e0)).exp())
            .sum();
        if excited < NEGLIGIBLE_EXCITED {
            tail_start = j;
            break;
        }
        ln_y.push(excited.ln_1p());
    }

    let mut ln_z = Vec::with_capacity(n_max + 1);
    let mut prefix = Vec::with_capacity(n_max + 2);
    ln_z.push(0.0);
    // prefix[N] = ln Σ_{m<N} Z'_m
    prefix.push(f64::NEG_INFINITY);
    prefix.push(0.0);
    let mut terms = Vec::with_capacity(tail_start.min(n_max) + 1);
    for n in 1..=n_max {
        terms.clear();
        for j in 1..=n.min(tail_start - 1) {
            terms.push(ln_y[j] + ln_z[n - j]);
        }
        if n >= tail_start {
            // Σ_{j ≥ tail_start} Z'_{n−j} = Σ_{m ≤ n − tail_start} Z'_m
            terms.push(prefix[n - tail_start + 1]);
        }
        let value = logsumexp(&terms) - (n as f64).ln();
        if !value.is_finite() {
            return Err(BecError::OverflowGuard { n });
        }
        ln_z.push(value);
        let p = logaddexp(prefix[n], value);
        prefix.push(p);
    }
    prefix.truncate(n_max + 1);
    Ok(CanonicalTable {
        beta,
        zero_energy: e0,
        ln_z_shifted: ln_z,
        prefix,
        tail_start,
    })
}

/// `ln Z_N` for `N = 0..=n_max`.
pub fn canonical_partition(spectrum: &OccupationSpectrum, beta: f64, n_max: usize) -> Result<Vec<f64>> {
    let table = canonical_table(spectrum, beta, n_max)?;
    let out: Vec<f64> = (0..=n_max).map(|n| table.ln_z(n)).collect();
    if let Some(n) = out.iter().position(|v| !v.is_finite()) {
        return Err(BecError::OverflowGuard { n });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteVolumeResult {
    pub pressure: f64,
    /// `⟨N⟩/V`
    pub density: f64,
    /// `⟨N₀⟩/V`
    pub condensate: f64,
    /// `⟨N²⟩/V²`
    pub density_squared: f64,
    /// Grand-canonical probability of `N = n_max`.
    pub tail_weight: f64,
    pub mode_count: u64,
    pub n_max: usize,
}

/// Grand-canonical sums for a given spectrum and volume.
pub fn solve_spectrum(
    spectrum: &OccupationSpectrum,
    volume: f64,
    state: ThermoState,
    coupling: CouplingParams,
    n_max: usize,
    tail_bound: f64,
) -> Result<FiniteVolumeResult> {
    state.validate()?;
    coupling.validate()?;
    if !(volume > 0.0) {
        return Err(domain("volume must be positive"));
    }
    let table = canonical_table(spectrum, state.beta, n_max)?;
    let beta = state.beta;
    let lin = beta * (state.mu - spectrum.zero_energy);
    let quad = beta * coupling.strength() / (2.0 * volume);
    let ln_w: Vec<f64> = (0..=n_max)
        .map(|n| {
            let nf = n as f64;
            lin * nf - quad * nf * nf + table.ln_z_shifted[n]
        })
        .collect();
    let m = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(BecError::OverflowGuard { n: n_max });
    }
    let (mut s, mut s_n, mut s_n2, mut s_0) = (0.0, 0.0, 0.0, 0.0);
    for (n, &lw) in ln_w.iter().enumerate() {
        let w = (lw - m).exp();
        let nf = n as f64;
        s += w;
        s_n += w * nf;
        s_n2 += w * nf * nf;
        s_0 += w * table.zero_mode_occupation(n);
    }
    let tail_weight = (ln_w[n_max] - m).exp() / s;
    if tail_weight > tail_bound {
        return Err(BecError::Truncation {
            tail_weight,
            n_max,
            bound: tail_bound,
        });
    }
    // ln Ξ = ln Σ_N e^{ln w_N} − βNε₀ folded back in
    let ln_xi = m + s.ln();
    Ok(FiniteVolumeResult {
        pressure: ln_xi / (beta * volume),
        density: s_n / s / volume,
        condensate: s_0 / s / volume,
        density_squared: s_n2 / s / (volume * volume),
        tail_weight,
        mode_count: spectrum.mode_count(),
        n_max,
    })
}

fn check_spec_state(spec: &FiniteVolumeSpec, state: &ThermoState) -> Result<()> {
    spec.validate()?;
    state.validate()?;
    if spec.dim != state.dim {
        return Err(domain(format!(
            "box dimension {} differs from state dimension {}",
            spec.dim, state.dim
        )));
    }
    Ok(())
}

pub fn grand_canonical_solve(
    spec: &FiniteVolumeSpec,
    state: ThermoState,
    coupling: CouplingParams,
) -> Result<FiniteVolumeResult> {
    check_spec_state(spec, &state)?;
    let spectrum = enumerate_modes(spec)?;
    solve_spectrum(&spectrum, spec.volume(), state, coupling, spec.n_max, spec.tail_bound)
}

/// Box spec with `ε_max = 36/β` and `n_max = max(⌈3Vρ_MF⌉, 32)`, where `ρ_MF`
/// is the thermodynamic-limit mean-field density.
pub fn auto_spec(
    box_side: f64,
    state: ThermoState,
    coupling: CouplingParams,
    gap: GapSpec,
) -> Result<FiniteVolumeSpec> {
    state.validate()?;
    let mf_gap = if gap.delta == 0.0 && state.dim <= 2 {
        // the gapless low-dimensional gas has no threshold; any small gap
        // gives a density at least as large
        GapSpec::new(1e-12)?
    } else {
        gap
    };
    let rho = mf_solve(state, coupling, mf_gap)?.rho_total;
    let volume = box_side.powi(state.dim as i32);
    let n_max = ((3.0 * volume * rho).ceil() as usize).max(MIN_AUTO_N_MAX);
    FiniteVolumeSpec::new(
        box_side,
        DEFAULT_CUTOFF_BETA_UNITS / state.beta,
        n_max,
        state.dim,
        GapSpec::new(gap.delta)?,
    )
}

/// [`grand_canonical_solve`], doubling `n_max` up to [`MAX_DOUBLINGS`] times
/// on a truncation error. Returns the spec that succeeded.
pub fn solve_auto(
    spec: &FiniteVolumeSpec,
    state: ThermoState,
    coupling: CouplingParams,
) -> Result<(FiniteVolumeSpec, FiniteVolumeResult)> {
    check_spec_state(spec, &state)?;
    let spectrum = enumerate_modes(spec)?;
    let mut current = *spec;
    let mut doublings = 0;
    loop {
        match solve_spectrum(&spectrum, current.volume(), state, coupling, current.n_max, current.tail_bound) {
            Err(BecError::Truncation { .. }) if doublings < MAX_DOUBLINGS => {
                current = current.with_n_max(current.n_max * 2);
                doublings += 1;
            }
            other => return other.map(|r| (current, r)),
        }
    }
}

/// Margins of `(g/V)⟨W⟩₂ ≤ p[λ₁] − p[λ₂] ≤ (g/V)⟨W⟩₁` with
/// `W = (λ₂ − λ₁)N²/2V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogoliubovMargins {
    pub lambda1: f64,
    pub lambda2: f64,
    pub pressure_difference: f64,
    pub w_expectation_1: f64,
    pub w_expectation_2: f64,
    /// `p₁ − p₂ − (g/V)⟨W⟩₂`
    pub lower: f64,
    /// `(g/V)⟨W⟩₁ − (p₁ − p₂)`
    pub upper: f64,
}

impl BogoliubovMargins {
    pub fn holds(&self, tol: f64) -> bool {
        self.lower >= -tol && self.upper >= -tol
    }
}

pub const BOGOLIUBOV_TOLERANCE: f64 = 1e-12;

pub fn verify_bogoliubov_pair(
    spec: &FiniteVolumeSpec,
    state: ThermoState,
    g: f64,
    lambda1: f64,
    lambda2: f64,
) -> Result<BogoliubovMargins> {
    check_spec_state(spec, &state)?;
    if !(lambda1 <= lambda2) {
        return Err(domain(format!("need λ₁ ≤ λ₂, got {lambda1} and {lambda2}")));
    }
    let c1 = CouplingParams::new(g, lambda1)?;
    let c2 = CouplingParams::new(g, lambda2)?;
    let spectrum = enumerate_modes(spec)?;
    let volume = spec.volume();
    let r1 = solve_spectrum(&spectrum, volume, state, c1, spec.n_max, spec.tail_bound)?;
    let r2 = solve_spectrum(&spectrum, volume, state, c2, spec.n_max, spec.tail_bound)?;
    // (g/V)⟨W⟩ = g(λ₂−λ₁)⟨N²⟩/(2V²)
    let scale = 0.5 * g * (lambda2 - lambda1);
    let w1 = scale * r1.density_squared;
    let w2 = scale * r2.density_squared;
    let dp = r1.pressure - r2.pressure;
    Ok(BogoliubovMargins {
        lambda1,
        lambda2,
        pressure_difference: dp,
        w_expectation_1: w1,
        w_expectation_2: w2,
        lower: dp - w2,
        upper: w1 - dp,
    })
}

pub const CONVEXITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaConvexityReport {
    pub deltas: Vec<f64>,
    pub pressures: Vec<f64>,
    pub condensates: Vec<f64>,
    /// `min (p_{i+1} − p_i)`
    pub monotone_margin: f64,
    /// `min` difference of consecutive secant slopes
    pub convexity_margin: f64,
    /// `min over Δ > 0 of ⟨N₀⟩/V(Δ) − (p(Δ) − p(0))/Δ`
    pub quotient_upper_margin: f64,
    /// `min over Δ > 0 of (p(Δ) − p(0))/Δ − ⟨N₀⟩/V(0)`
    pub quotient_lower_margin: f64,
    pub pass: bool,
}

/// Check that the finite-volume pressure is nondecreasing and convex in `Δ`,
/// and that `ρ₀(0) ≤ (p(Δ) − p(0))/Δ ≤ ρ₀(Δ)`. The spec's own gap is ignored.
pub fn verify_delta_convexity(
    spec: &FiniteVolumeSpec,
    state: ThermoState,
    coupling: CouplingParams,
    delta_grid: &[f64],
) -> Result<DeltaConvexityReport> {
    check_spec_state(spec, &state)?;
    if delta_grid.len() < 3 {
        return Err(domain("Δ-grid needs at least three points"));
    }
    if delta_grid.windows(2).any(|w| !(w[1] > w[0])) || !(delta_grid[0] >= 0.0) {
        return Err(domain("Δ-grid must be strictly increasing and ≥ 0"));
    }
    let base = enumerate_modes(&spec.with_delta(0.0))?;
    let volume = spec.volume();
    let solve = |delta: f64| {
        let spectrum = OccupationSpectrum {
            zero_energy: -delta,
            levels: base.levels.clone(),
        };
        solve_spectrum(&spectrum, volume, state, coupling, spec.n_max, spec.tail_bound)
    };
    let mut pressures = Vec::with_capacity(delta_grid.len());
    let mut condensates = Vec::with_capacity(delta_grid.len());
    for &d in delta_grid {
        let r = solve(d)?;
        pressures.push(r.pressure);
        condensates.push(r.condensate);
    }
    let zero = if delta_grid[0] == 0.0 {
        (pressures[0], condensates[0])
    } else {
        let r = solve(0.0)?;
        (r.pressure, r.condensate)
    };

    let monotone_margin = pressures
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let slopes: Vec<f64> = (1..delta_grid.len())
        .map(|i| (pressures[i] - pressures[i - 1]) / (delta_grid[i] - delta_grid[i - 1]))
        .collect();
    let convexity_margin = slopes
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let mut upper = f64::INFINITY;
    let mut lower = f64::INFINITY;
    for (i, &d) in delta_grid.iter().enumerate() {
        if d > 0.0 {
            let q = (pressures[i] - zero.0) / d;
            upper = upper.min(condensates[i] - q);
            lower = lower.min(q - zero.1);
        }
    }
    let pass = [monotone_margin, convexity_margin, upper, lower]
        .iter()
        .all(|&m| m >= -CONVEXITY_TOLERANCE);
    Ok(DeltaConvexityReport {
        deltas: delta_grid.to_vec(),
        pressures,
        condensates,
        monotone_margin,
        convexity_margin,
        quotient_upper_margin: upper,
        quotient_lower_margin: lower,
        pass,
    })
}
