use rayon::prelude::*;
use serde_json::{Map, Value};

use bec_core::bec_bound::{
    delta_min_solve, general_lower_bound, lemma_lower_bound, theorem_bracket, BoundReport, DeltaSearch,
    RhoGaplessMode,
};
use bec_core::finite_volume::BOGOLIUBOV_TOLERANCE;
use bec_core::ideal_gas::{GapSpec, ThermoState};
use bec_core::meanfield_gas::{mf_condensation_threshold, mf_solve, CouplingParams, MeanFieldSolution};
use bec_core::potential::{
    positivity_check, superstability_constants, v_at_origin, CertifiedPotential, PositivityReport, PotentialModel,
    RadialTable,
};
use bec_core::verification::{run_suite, VerifyConfig, VerifyReport};
use bec_core::BecError;

use crate::args::*;
use crate::output::{cell, finish, num, opt_num, report, write_csv, write_json};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] BecError),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{context}: {source}")]
    Context { context: String, source: BecError },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        let core = match self {
            CliError::Core(e) | CliError::Context { source: e, .. } => e,
            _ => return 1,
        };
        match core {
            BecError::PreconditionFailed(_) | BecError::NotFound(_) | BecError::NotPositiveType(_) => 2,
            _ => 1,
        }
    }
}

type CmdResult = Result<u8, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn json_only(out: &OutputArgs) -> Result<(), CliError> {
    if out.format == Some(Format::Csv) {
        return Err(usage("csv output is only available for sweeps"));
    }
    Ok(())
}

fn build_model(p: &PotentialArgs) -> Result<PotentialModel, CliError> {
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| usage(format!("--{flag} is required for this model")));
    Ok(match p.model {
        ModelKind::Gaussian => PotentialModel::gaussian(need(p.v0, "v0")?, need(p.sigma, "sigma")?)?,
        ModelKind::Exponential => PotentialModel::exponential(need(p.v0, "v0")?, need(p.kappa, "kappa")?)?,
        ModelKind::Table => {
            let path = p.table.as_ref().ok_or_else(|| usage("--table is required for the table model"))?;
            PotentialModel::Tabulated(RadialTable::from_path(path)?)
        }
    })
}

fn certify(p: &PotentialArgs, dim: u32) -> Result<CertifiedPotential, CliError> {
    Ok(CertifiedPotential::certify(build_model(p)?, dim, p.q_max, p.samples)?)
}

fn model_json(p: &PotentialArgs) -> Value {
    let mut m = Map::new();
    match p.model {
        ModelKind::Gaussian => {
            m.insert("model".into(), "gaussian".into());
            m.insert("v0".into(), opt_num(p.v0));
            m.insert("sigma".into(), opt_num(p.sigma));
        }
        ModelKind::Exponential => {
            m.insert("model".into(), "exponential".into());
            m.insert("v0".into(), opt_num(p.v0));
            m.insert("kappa".into(), opt_num(p.kappa));
        }
        ModelKind::Table => {
            m.insert("model".into(), "table".into());
            m.insert(
                "table".into(),
                p.table.as_ref().map(|t| t.display().to_string()).unwrap_or_default().into(),
            );
        }
    }
    Value::Object(m)
}

fn certified_json(p: &PotentialArgs, cert: &CertifiedPotential) -> Value {
    let mut m = match model_json(p) {
        Value::Object(m) => m,
        _ => unreachable!(),
    };
    m.insert("v_origin".into(), num(cert.v0()));
    m.insert("vhat0".into(), num(cert.vhat0()));
    m.insert("A".into(), num(cert.vhat0()));
    m.insert("B".into(), num(cert.v0() / 2.0));
    m.insert("certified_dim".into(), cert.dim().into());
    Value::Object(m)
}

fn positivity_json(m: &mut Map<String, Value>, r: &PositivityReport) {
    m.insert("pass".into(), r.pass.into());
    m.insert("min_vhat".into(), num(r.min_vhat));
    m.insert("argmin_q".into(), num(r.argmin_q));
    m.insert("max_excess".into(), num(r.max_excess));
    m.insert("argmax_excess_q".into(), num(r.argmax_excess_q));
    m.insert("offending_q".into(), opt_num(r.offending_q));
    m.insert("tolerance".into(), num(r.tolerance));
    m.insert("q_max".into(), num(r.q_max));
    m.insert("samples".into(), r.n_samples.into());
    m.insert("stable".into(), r.stable.into());
    m.insert("truncation_radius".into(), opt_num(r.truncation_radius));
    m.insert("note".into(), PositivityReport::NOTE.into());
}

pub fn potential_check(a: &PotentialCheckArgs) -> CmdResult {
    json_only(&a.out)?;
    let model = build_model(&a.potential)?;
    let rep = positivity_check(&model, a.dim, a.potential.q_max, a.potential.samples)?;
    let v0 = v_at_origin(&model).unwrap_or(f64::NAN);
    let mut m = report("potential-check");
    m.insert("potential".into(), model_json(&a.potential));
    m.insert("dim".into(), a.dim.into());
    m.insert("v0".into(), num(v0));
    m.insert("vhat0".into(), num(rep.vhat0));
    let (a_const, b_const) = match CertifiedPotential::certify(model, a.dim, a.potential.q_max, a.potential.samples)
    {
        Ok(cert) => {
            let c = superstability_constants(&cert, a.epsilon)?;
            (c.a_const, c.b_const)
        }
        Err(_) => (rep.vhat0 * (1.0 - a.epsilon), v0 / 2.0),
    };
    m.insert("epsilon".into(), num(a.epsilon));
    m.insert("A".into(), num(a_const));
    m.insert("B".into(), num(b_const));
    positivity_json(&mut m, &rep);
    write_json(&finish(m, a.out.no_meta), a.out.output.as_deref())?;
    Ok(if rep.pass { 0 } else { 2 })
}

fn gapless_mode(g: &GaplessArgs) -> Result<RhoGaplessMode, CliError> {
    let mode = if g.rho_gapless.eq_ignore_ascii_case("rigorous") {
        RhoGaplessMode::RigorousUpperBound(DeltaSearch {
            lo: g.shift_lo,
            hi: g.shift_hi,
            points: g.shift_points,
            refine: true,
        })
    } else {
        let v: f64 = g
            .rho_gapless
            .parse()
            .map_err(|_| usage(format!("--rho-gapless must be \"rigorous\" or a number, got {:?}", g.rho_gapless)))?;
        RhoGaplessMode::UserSupplied(v)
    };
    mode.validate()?;
    Ok(mode)
}

fn mode_name(mode: &RhoGaplessMode) -> &'static str {
    match mode {
        RhoGaplessMode::UserSupplied(_) => "user_supplied",
        RhoGaplessMode::RigorousUpperBound(_) => "rigorous_upper_bound",
    }
}

fn evaluate(
    state: ThermoState,
    g: f64,
    delta: f64,
    delta0: Option<f64>,
    cert: &CertifiedPotential,
    mode: &RhoGaplessMode,
) -> Result<BoundReport, BecError> {
    match delta0 {
        Some(d0) => general_lower_bound(state, g, GapSpec::with_reference(delta, d0)?, cert, mode),
        None => lemma_lower_bound(state, g, GapSpec::new(delta)?, cert, mode),
    }
}

fn bound_json(m: &mut Map<String, Value>, r: &BoundReport) {
    m.insert("lower_bound".into(), num(r.lower_bound));
    let mut terms = Map::new();
    for t in &r.terms {
        terms.insert(t.name.into(), num(t.value));
    }
    m.insert("terms".into(), Value::Object(terms));
    m.insert("rho_gapless_used".into(), num(r.rho_gapless_used));
    m.insert("valid".into(), r.valid.into());
    m.insert(
        "validity_reasons".into(),
        Value::Array(r.validity_reasons.iter().map(|s| Value::String(s.clone())).collect()),
    );
}

pub fn bound_eval(a: &BoundEvalArgs) -> CmdResult {
    json_only(&a.out)?;
    let state = ThermoState::new(a.beta, a.mu, a.dim)?;
    let cert = certify(&a.potential, a.dim)?;
    let mode = gapless_mode(&a.gapless)?;
    let r = evaluate(state, a.g, a.delta, a.delta0, &cert, &mode)?;

    let mut m = report("bound eval");
    let mut p = Map::new();
    p.insert("beta".into(), num(a.beta));
    p.insert("mu".into(), num(a.mu));
    p.insert("g".into(), num(a.g));
    p.insert("delta".into(), num(a.delta));
    p.insert("delta0".into(), opt_num(a.delta0));
    p.insert("dim".into(), a.dim.into());
    m.insert("parameters".into(), Value::Object(p));
    m.insert("potential".into(), certified_json(&a.potential, &cert));
    m.insert(
        "form".into(),
        if a.delta0.is_some() { "reference_gap" } else { "gapless_reference" }.into(),
    );
    m.insert("rho_gapless_mode".into(), mode_name(&mode).into());
    bound_json(&mut m, &r);
    if a.delta0.is_none() {
        let tb = theorem_bracket(state, a.g, a.delta, &cert, r.rho_gapless_used)?;
        m.insert("theorem_bracket_abs".into(), num(tb));
    }
    write_json(&finish(m, a.out.no_meta), a.out.output.as_deref())?;
    Ok(0)
}

pub fn bound_delta_min(a: &DeltaMinArgs) -> CmdResult {
    json_only(&a.out)?;
    let state = ThermoState::new(a.beta, a.mu, a.dim)?;
    let cert = certify(&a.potential, a.dim)?;
    let mode = gapless_mode(&a.gapless)?;
    let res = delta_min_solve(state, a.g, &cert, a.eta, &mode, a.delta_cap)?;
    let fixed = RhoGaplessMode::UserSupplied(res.rho_gapless_used);
    let probe = res.delta_min - 0.01;
    let below = if probe > 0.0 {
        Some(lemma_lower_bound(state, a.g, GapSpec::new(probe)?, &cert, &fixed)?.lower_bound)
    } else {
        None
    };

    let mut m = report("bound delta-min");
    let mut p = Map::new();
    p.insert("beta".into(), num(a.beta));
    p.insert("mu".into(), num(a.mu));
    p.insert("g".into(), num(a.g));
    p.insert("eta".into(), num(a.eta));
    p.insert("delta_cap".into(), num(a.delta_cap));
    p.insert("dim".into(), a.dim.into());
    m.insert("parameters".into(), Value::Object(p));
    m.insert("potential".into(), certified_json(&a.potential, &cert));
    m.insert("rho_gapless_mode".into(), mode_name(&mode).into());
    m.insert("delta_min".into(), num(res.delta_min));
    m.insert("bound_at_delta_min".into(), num(res.bound_at_min));
    m.insert("bound_at_delta_min_minus_0.01".into(), opt_num(below));
    m.insert("rho_gapless_used".into(), num(res.rho_gapless_used));
    m.insert("scan_points".into(), res.scan_points.into());
    m.insert("at_scan_floor".into(), res.at_scan_floor.into());
    m.insert("sample_based".into(), res.sample_based.into());
    write_json(&finish(m, a.out.no_meta), a.out.output.as_deref())?;
    Ok(0)
}

/// `name=start:stop:count`, endpoints included.
pub fn parse_grid(spec: &str) -> Result<(String, Vec<f64>), CliError> {
    let bad = || usage(format!("grid {spec:?} must look like name=start:stop:count"));
    let (name, range) = spec.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    let values = if n == 1 {
        vec![a]
    } else {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    };
    Ok((name.trim().to_string(), values))
}

const SWEEP_AXES: [&str; 4] = ["beta", "mu", "g", "delta"];
const SWEEP_COLUMNS: [&str; 7] = ["beta", "mu", "g", "delta", "lower_bound", "valid", "rho_gapless_used"];

pub fn bound_sweep(a: &BoundSweepArgs) -> CmdResult {
    let mut axes: Vec<Option<Vec<f64>>> = vec![None; 4];
    for s in &a.sweep {
        let (name, values) = parse_grid(s)?;
        let i = SWEEP_AXES
            .iter()
            .position(|&n| n == name)
            .ok_or_else(|| usage(format!("cannot sweep {name:?}; choose one of beta, mu, g, delta")))?;
        if axes[i].is_some() {
            return Err(usage(format!("{name} is swept twice")));
        }
        axes[i] = Some(values);
    }
    let fixed = [a.beta, a.mu, a.g, a.delta];
    let mut grids = Vec::with_capacity(4);
    for (i, axis) in axes.into_iter().enumerate() {
        grids.push(match (axis, fixed[i]) {
            (Some(v), _) => v,
            (None, Some(x)) => vec![x],
            (None, None) => return Err(usage(format!("--{} or a {0} sweep is required", SWEEP_AXES[i]))),
        });
    }
    let mut points = Vec::new();
    for &beta in &grids[0] {
        for &mu in &grids[1] {
            for &g in &grids[2] {
                for &delta in &grids[3] {
                    points.push([beta, mu, g, delta]);
                }
            }
        }
    }
    let cert = certify(&a.potential, a.dim)?;
    let mode = gapless_mode(&a.gapless)?;
    let results: Vec<Result<BoundReport, BecError>> = points
        .par_iter()
        .map(|&[beta, mu, g, delta]| {
            let state = ThermoState::new(beta, mu, a.dim)?;
            evaluate(state, g, delta, a.delta0, &cert, &mode)
        })
        .collect();
    let mut reports = Vec::with_capacity(points.len());
    for (p, r) in points.iter().zip(results) {
        reports.push(r.map_err(|e| CliError::Context {
            context: format!("beta = {}, mu = {}, g = {}, delta = {}", p[0], p[1], p[2], p[3]),
            source: e,
        })?);
    }

    let out = a.out.output.as_deref();
    match a.out.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let rows: Vec<Vec<String>> = points
                .iter()
                .zip(&reports)
                .map(|(p, r)| {
                    vec![
                        cell(p[0]),
                        cell(p[1]),
                        cell(p[2]),
                        cell(p[3]),
                        cell(r.lower_bound),
                        r.valid.to_string(),
                        cell(r.rho_gapless_used),
                    ]
                })
                .collect();
            write_csv(&SWEEP_COLUMNS, &rows, a.out.no_meta, out)?;
        }
        Format::Json => {
            let mut m = report("bound sweep");
            m.insert("potential".into(), certified_json(&a.potential, &cert));
            m.insert("delta0".into(), opt_num(a.delta0));
            m.insert("rho_gapless_mode".into(), mode_name(&mode).into());
            let rows = points
                .iter()
                .zip(&reports)
                .map(|(p, r)| {
                    let mut row = Map::new();
                    for (k, v) in SWEEP_AXES.iter().zip(p) {
                        row.insert((*k).into(), num(*v));
                    }
                    row.insert("lower_bound".into(), num(r.lower_bound));
                    row.insert("valid".into(), r.valid.into());
                    row.insert("rho_gapless_used".into(), num(r.rho_gapless_used));
                    Value::Object(row)
                })
                .collect();
            m.insert("rows".into(), Value::Array(rows));
            write_json(&finish(m, a.out.no_meta), out)?;
        }
    }
    Ok(0)
}

fn solution_json(m: &mut Map<String, Value>, s: &MeanFieldSolution) {
    m.insert("rho_total".into(), num(s.rho_total));
    m.insert("rho_condensate".into(), num(s.rho_condensate));
    m.insert("mu_eff".into(), num(s.mu_eff));
    m.insert("pressure".into(), num(s.pressure));
    m.insert("condensed".into(), s.condensed.into());
}

const MEANFIELD_COLUMNS: [&str; 6] = ["mu", "rho_total", "rho_condensate", "mu_eff", "pressure", "condensed"];

pub fn meanfield(a: &MeanfieldArgs) -> CmdResult {
    let coupling = CouplingParams::new(a.g, a.lambda)?;
    let gap = GapSpec::new(a.delta)?;
    let threshold = if a.delta == 0.0 && a.dim <= 2 {
        f64::INFINITY
    } else {
        mf_condensation_threshold(a.beta, coupling, gap, a.dim)?
    };
    let out = a.out.output.as_deref();

    let Some(sweep) = &a.sweep else {
        json_only(&a.out)?;
        let mu = a.mu.ok_or_else(|| usage("--mu is required without --sweep"))?;
        let s = mf_solve(ThermoState::new(a.beta, mu, a.dim)?, coupling, gap)?;
        let mut m = report("meanfield");
        let mut p = Map::new();
        p.insert("beta".into(), num(a.beta));
        p.insert("mu".into(), num(mu));
        p.insert("g".into(), num(a.g));
        p.insert("lambda".into(), num(a.lambda));
        p.insert("delta".into(), num(a.delta));
        p.insert("dim".into(), a.dim.into());
        m.insert("parameters".into(), Value::Object(p));
        m.insert("threshold_mu".into(), num(threshold));
        solution_json(&mut m, &s);
        write_json(&finish(m, a.out.no_meta), out)?;
        return Ok(0);
    };

    let (name, mus) = parse_grid(sweep)?;
    if name != "mu" {
        return Err(usage(format!("meanfield sweeps run over mu, got {name:?}")));
    }
    let base = ThermoState::new(a.beta, 0.0, a.dim)?;
    let sols: Vec<MeanFieldSolution> = mus
        .par_iter()
        .map(|&mu| mf_solve(base.with_mu(mu), coupling, gap))
        .collect::<Result<_, _>>()?;
    match a.out.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let rows: Vec<Vec<String>> = mus
                .iter()
                .zip(&sols)
                .map(|(&mu, s)| {
                    vec![
                        cell(mu),
                        cell(s.rho_total),
                        cell(s.rho_condensate),
                        cell(s.mu_eff),
                        cell(s.pressure),
                        s.condensed.to_string(),
                    ]
                })
                .collect();
            write_csv(&MEANFIELD_COLUMNS, &rows, a.out.no_meta, out)?;
        }
        Format::Json => {
            let mut m = report("meanfield sweep");
            m.insert("threshold_mu".into(), num(threshold));
            let rows = mus
                .iter()
                .zip(&sols)
                .map(|(&mu, s)| {
                    let mut row = Map::new();
                    row.insert("mu".into(), num(mu));
                    solution_json(&mut row, s);
                    Value::Object(row)
                })
                .collect();
            m.insert("rows".into(), Value::Array(rows));
            write_json(&finish(m, a.out.no_meta), out)?;
        }
    }
    Ok(0)
}

fn verify_json(r: &VerifyReport) -> Vec<Value> {
    let c = &r.convergence;
    let mut conv = Map::new();
    conv.insert("name".into(), "oracle_convergence".into());
    conv.insert("pass".into(), c.pass.into());
    conv.insert("sides".into(), c.sides.iter().map(|&v| num(v)).collect());
    conv.insert("n_max".into(), c.n_max.iter().map(|&v| Value::from(v)).collect());
    conv.insert("condensates".into(), c.condensates.iter().map(|&v| num(v)).collect());
    conv.insert("densities".into(), c.densities.iter().map(|&v| num(v)).collect());
    conv.insert("condensate_limit".into(), num(c.condensate_limit));
    conv.insert("density_limit".into(), num(c.density_limit));
    conv.insert("condensate_gaps".into(), c.condensate_gaps.iter().map(|&v| num(v)).collect());
    conv.insert("density_gaps".into(), c.density_gaps.iter().map(|&v| num(v)).collect());
    conv.insert("trend_violations".into(), c.trend_violations.into());

    let mut pairs = Map::new();
    pairs.insert("name".into(), "bogoliubov_pairs".into());
    pairs.insert("pass".into(), r.pairs_pass().into());
    pairs.insert("tolerance".into(), num(BOGOLIUBOV_TOLERANCE));
    pairs.insert("box_side".into(), num(r.pair_spec.box_side));
    pairs.insert("n_max".into(), r.pair_spec.n_max.into());
    let list = r
        .pairs
        .iter()
        .map(|p| {
            let mut o = Map::new();
            o.insert("lambda1".into(), num(p.lambda1));
            o.insert("lambda2".into(), num(p.lambda2));
            o.insert("lower_margin".into(), num(p.lower));
            o.insert("upper_margin".into(), num(p.upper));
            Value::Object(o)
        })
        .collect();
    pairs.insert("pairs".into(), Value::Array(list));

    let x = &r.convexity;
    let mut conv_d = Map::new();
    conv_d.insert("name".into(), "delta_convexity".into());
    conv_d.insert("pass".into(), x.pass.into());
    conv_d.insert("box_side".into(), num(r.convexity_spec.box_side));
    conv_d.insert("n_max".into(), r.convexity_spec.n_max.into());
    conv_d.insert("deltas".into(), x.deltas.iter().map(|&v| num(v)).collect());
    conv_d.insert("pressures".into(), x.pressures.iter().map(|&v| num(v)).collect());
    conv_d.insert("condensates".into(), x.condensates.iter().map(|&v| num(v)).collect());
    conv_d.insert("monotone_margin".into(), num(x.monotone_margin));
    conv_d.insert("convexity_margin".into(), num(x.convexity_margin));
    conv_d.insert("quotient_upper_margin".into(), num(x.quotient_upper_margin));
    conv_d.insert("quotient_lower_margin".into(), num(x.quotient_lower_margin));

    vec![Value::Object(conv), Value::Object(pairs), Value::Object(conv_d)]
}

pub fn verify(a: &VerifyArgs) -> CmdResult {
    json_only(&a.out)?;
    let cfg = VerifyConfig {
        beta: a.beta,
        mu: a.mu,
        g: a.g,
        lambda: a.lambda,
        delta: a.delta,
        dim: a.dim,
        sides: a.sides.clone(),
        pair_box_side: a.pair_side,
        convexity_box_side: a.convexity_side,
        ..VerifyConfig::default()
    };
    let r = run_suite(&cfg).map_err(|e| CliError::Context {
        context: format!(
            "verify beta = {}, mu = {}, g = {}, lambda = {}, delta = {}, dim = {}, sides = {:?}, pair side = {}, convexity side = {}",
            cfg.beta, cfg.mu, cfg.g, cfg.lambda, cfg.delta, cfg.dim, cfg.sides, cfg.pair_box_side, cfg.convexity_box_side
        ),
        source: e,
    })?;
    let mut m = report("verify");
    m.insert("checks".into(), Value::Array(verify_json(&r)));
    m.insert("pass".into(), r.pass().into());
    write_json(&finish(m, a.out.no_meta), a.out.output.as_deref())?;
    Ok(if r.pass() { 0 } else { 2 })
}
