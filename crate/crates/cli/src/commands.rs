//! Subcommand implementations.

use crate::args::*;
use crate::csv::Table;
use crate::CliError;
use pmap_core::exact::{summarize, total_variation, DEFAULT_ENUMERATION_CAP};
use pmap_core::low_rank::{self, BoundKind};
use pmap_core::tricks::{self, Target, Trick};
use pmap_core::{load_uai, save_uai, spin_glass_grid, Coupling, GraphicalModel, SolverChoice};
use std::path::{Path, PathBuf};

type Result<T> = std::result::Result<T, CliError>;

/// Metadata recorded at the top of every CSV.
struct RunConfig {
    entries: Vec<(String, String)>,
}

impl RunConfig {
    fn new(command: &str, model: &str) -> Self {
        let mut c = RunConfig { entries: Vec::new() };
        c.set("pmap", env!("CARGO_PKG_VERSION"));
        c.set("command", command);
        c.set("model", model);
        c
    }

    fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Exact(a) => exact(a),
        Command::Estimate(a) => estimate(a),
        Command::Bounds(a) => bounds(a),
        Command::SweepAlpha(a) => sweep_alpha(a),
        Command::Sample(a) => sample(a),
        Command::MseStudy(a) => mse_study(a),
        Command::Diagnostics(a) => diagnostics(a),
    }
}

fn coupling(mode: Mode) -> Coupling {
    match mode {
        Mode::Attractive => Coupling::Attractive,
        Mode::Mixed => Coupling::Mixed,
    }
}

fn solver_choice(s: &SolverArgs) -> SolverChoice {
    match s.solver {
        SolverName::Exhaustive => SolverChoice::Exhaustive,
        SolverName::Icm => SolverChoice::Icm {
            restarts: s.restarts as usize,
        },
    }
}

fn target(t: TargetName) -> Target {
    match t {
        TargetName::Fz => Target::FZ,
        TargetName::Z => Target::Z,
        TargetName::Lnz => Target::LnZ,
    }
}

fn resolve(path: &Path) -> Result<PathBuf> {
    std::fs::canonicalize(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads the model and describes its source for the metadata.
fn load_model(args: &ModelArgs, seed: u64) -> Result<(GraphicalModel, String)> {
    let path = args.path.as_ref().or(args.model.as_ref());
    match (path, args.grid.grid) {
        (Some(_), Some(_)) => Err(CliError::Usage("give either a model file or --grid, not both".into())),
        (Some(p), None) => {
            let p = resolve(p)?;
            let text = std::fs::read_to_string(&p).map_err(|source| CliError::Io {
                path: p.display().to_string(),
                source,
            })?;
            Ok((load_uai(&text)?, p.display().to_string()))
        }
        (None, Some((r, c))) => {
            let gseed = args.grid_seed.unwrap_or(seed);
            let mode = coupling(args.grid.mode);
            let m = spin_glass_grid(r, c, args.grid.coupling, mode, gseed)?;
            Ok((
                m,
                format!("grid {r}x{c} coupling={} mode={mode} seed={gseed}", args.grid.coupling),
            ))
        }
        (None, None) => Err(CliError::Usage("no model: give a UAI file or --grid RxC".into())),
    }
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit(table: &Table, config: &RunConfig, out: Option<&PathBuf>) -> Result<()> {
    write_output(out, &table.render(&config.entries))
}

fn gen(a: GenArgs) -> Result<()> {
    let (r, c) = a.grid;
    let m = spin_glass_grid(r, c, a.coupling, coupling(a.mode), a.seed)?;
    write_output(a.out.as_ref(), &save_uai(&m))
}

fn exact(a: ExactArgs) -> Result<()> {
    let (model, source) = load_model(&a.model, a.seed)?;
    let s = summarize(&model)?;
    let mut t = Table::new(&["log_partition", "map_value", "map_config"]);
    t.row(vec![s.log_partition.into(), s.map_value.into(), s.map_config.to_string().into()])?;
    let mut cfg = RunConfig::new("exact", &source);
    cfg.set("seed", a.seed);
    emit(&t, &cfg, a.out.as_ref())
}

fn trick_from(a: &EstimateArgs) -> Result<Trick> {
    let need_alpha = || a.alpha.ok_or_else(|| CliError::Usage("this trick needs --alpha".into()));
    let trick = match a.trick {
        TrickName::Gumbel => Trick::Gumbel,
        TrickName::Exponential => Trick::Exponential,
        TrickName::Weibull => Trick::Weibull(need_alpha()?),
        TrickName::Frechet => Trick::Frechet(need_alpha()?),
        TrickName::Pareto => Trick::Pareto,
        TrickName::Tail => Trick::Tail(a.t.ok_or_else(|| CliError::Usage("the tail trick needs --t".into()))?),
    };
    trick.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(trick)
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let trick = trick_from(&a)?;
    let (model, source) = load_model(&a.model, a.seed)?;
    let target = target(a.target);
    if target == Target::Z && a.m < 3 {
        return Err(CliError::Usage("Z estimates need --M >= 3 for a finite standard error".into()));
    }
    let values = tricks::full_rank_values(&model, a.m as usize, a.seed)?;
    let r = tricks::estimate(trick, &values, target, a.debias)?;
    let mut t = Table::new(&["trick", "target", "M", "estimate", "std_error", "debiased"]);
    t.row(vec![
        trick.to_string().into(),
        target.to_string().into(),
        r.sample_count.into(),
        r.estimate.into(),
        r.std_error.into(),
        r.debiased.into(),
    ])?;
    let mut cfg = RunConfig::new("estimate", &source);
    cfg.set("trick", trick)
        .set("target", target)
        .set("M", a.m)
        .set("debias", a.debias)
        .set("seed", a.seed);
    emit(&t, &cfg, a.out.as_ref())
}

fn bounds(a: BoundsArgs) -> Result<()> {
    let (model, source) = load_model(&a.model, a.seed)?;
    let solver = solver_choice(&a.solver);
    let m = a.m as usize;
    let mut kinds = vec![BoundKind::Upper, BoundKind::LowerAvg];
    if let Some(s) = &a.subset {
        kinds.push(BoundKind::LowerSubset(s.clone()));
    }
    let mut t = Table::new(&["bound", "alpha", "estimate", "std_error", "M", "solver", "solver_exact", "alpha_safe"]);
    for (i, kind) in kinds.iter().enumerate() {
        let stream = pmap_core::rng::derive_seed(a.seed, &[i as u64]);
        for r in low_rank::bound_sweep(&model, kind, &a.alphas.values, m, solver, stream)? {
            t.row(vec![
                r.bound.to_string().into(),
                r.alpha.into(),
                r.estimate.into(),
                r.std_error.into(),
                r.m.into(),
                r.solver.to_string().into(),
                r.solver.is_exact().into(),
                r.alpha_safe.into(),
            ])?;
        }
    }
    let mut cfg = RunConfig::new("bounds", &source);
    cfg.set("alphas", &a.alphas.raw)
        .set("M", a.m)
        .set("solver", solver)
        .set("subset", a.subset.as_ref().map(|s| format!("{s:?}")).unwrap_or_else(|| "none".into()))
        .set("seed", a.seed);
    emit(&t, &cfg, a.out.as_ref())
}

fn oracle_log_partition(model: &GraphicalModel) -> Result<f64> {
    Ok(summarize(model)?.log_partition)
}

fn sweep_alpha(a: SweepArgs) -> Result<()> {
    let (model, source) = load_model(&a.model, a.seed)?;
    let solver = solver_choice(&a.solver);
    let ln_z = oracle_log_partition(&model)?;
    let rows = low_rank::bound_mse_sweep(
        &model,
        &BoundKind::Upper,
        &a.alphas.values,
        a.m as usize,
        a.k as usize,
        solver,
        a.seed,
        ln_z,
    )?;
    let mut t = Table::new(&["alpha", "mean", "bias", "variance", "mse", "se", "alpha_safe"]);
    for r in rows {
        t.row(vec![
            r.alpha.into(),
            r.mean.into(),
            r.bias.into(),
            r.variance.into(),
            r.mse.into(),
            r.se.into(),
            r.alpha_safe.into(),
        ])?;
    }
    let mut cfg = RunConfig::new("sweep-alpha", &source);
    cfg.set("alphas", &a.alphas.raw)
        .set("M", a.m)
        .set("K", a.k)
        .set("solver", solver)
        .set("log_partition", ln_z)
        .set("seed", a.seed);
    emit(&t, &cfg, a.out.as_ref())
}

fn sample(a: SampleArgs) -> Result<()> {
    let (model, source) = load_model(&a.model, a.seed)?;
    let solver = solver_choice(&a.solver);
    let traces = low_rank::sequential_samples(
        &model,
        a.alpha,
        a.m_inner as usize,
        solver,
        a.seed,
        a.max_restarts as usize,
        a.count as usize,
    )?;
    let mut t = Table::new(&["sample", "restarts", "config"]);
    let mut restarts = 0usize;
    let mut accepted = Vec::new();
    let mut clamped = 0usize;
    for (k, tr) in traces.iter().enumerate() {
        restarts += tr.restarts;
        clamped += tr.clamped_reject as usize;
        if let Some(c) = &tr.config {
            t.row(vec![k.into(), tr.restarts.into(), c.to_string().into()])?;
            accepted.push(c.clone());
        }
    }
    let attempts = restarts + traces.iter().filter(|tr| tr.accepted).count();
    let rate = if attempts > 0 { accepted.len() as f64 / attempts as f64 } else { 0.0 };
    t.summary(format!(
        "accepted={} runs={} attempts={} accept_rate={rate} clamped_reject_runs={clamped}",
        accepted.len(),
        traces.len(),
        attempts
    ));
    if model.enumerable(DEFAULT_ENUMERATION_CAP).is_ok() && !accepted.is_empty() {
        let s = summarize(&model)?;
        let mut q = vec![0.0; s.gibbs.len()];
        for c in &accepted {
            q[model.index_of(c.as_slice())] += 1.0 / accepted.len() as f64;
        }
        t.summary(format!("tv_to_gibbs={}", total_variation(&q, &s.gibbs)));
    }
    let mut cfg = RunConfig::new("sample", &source);
    cfg.set("alpha", a.alpha)
        .set("M_inner", a.m_inner)
        .set("count", a.count)
        .set("max_restarts", a.max_restarts)
        .set("solver", solver)
        .set("seed", a.seed);
    emit(&t, &cfg, a.out.as_ref())
}

fn mse_study(a: MseArgs) -> Result<()> {
    if a.m.contains(&0) {
        return Err(CliError::Usage("--M entries must be positive".into()));
    }
    let (model, source) = load_model(&a.model, a.seed)?;
    let target = target(a.target);
    let rows = tricks::mse_sweep(&model, &a.alphas.values, &a.m, target, a.k as usize, a.seed)?;
    let mut t = Table::new(&[
        "alpha", "M", "target", "mean", "bias", "bias_sq", "variance", "mse", "se_mse", "unstable",
    ]);
    for r in rows {
        t.row(vec![
            r.alpha.into(),
            r.m.into(),
            r.target.to_string().into(),
            r.mean.into(),
            r.bias.into(),
            r.bias_sq.into(),
            r.variance.into(),
            r.mse.into(),
            r.se_mse.into(),
            r.unstable.into(),
        ])?;
    }
    let ms: Vec<String> = a.m.iter().map(|m| m.to_string()).collect();
    let mut cfg = RunConfig::new("mse-study", &source);
    cfg.set("alphas", &a.alphas.raw)
        .set("M", ms.join(","))
        .set("K", a.k)
        .set("target", target)
        .set("seed", a.seed);
    emit(&t, &cfg, a.out.as_ref())
}

fn diagnostics(a: DiagnosticsArgs) -> Result<()> {
    let (model, source) = load_model(&a.model, a.seed)?;
    let solver = solver_choice(&a.solver);
    let r = low_rank::diagnostics(&model, a.m as usize, solver, a.seed)?;
    let mut t = Table::new(&["quantity", "value", "std_error"]);
    let rows: [(&str, f64, f64); 12] = [
        ("log_partition", r.log_partition, 0.0),
        ("upper0", r.upper0, r.upper0_se),
        ("lower0", r.lower0, r.lower0_se),
        ("gap_upper", r.gap_upper, r.upper0_se),
        ("gap_lower", r.gap_lower, r.lower0_se),
        ("entropy_bound_b", r.entropy_bound_b, r.entropy_bound_b_se),
        ("entropy_q_sum", r.entropy_q_sum, r.entropy_q_sum_se),
        ("kl_sum", r.kl_sum, r.kl_sum_se),
        ("identity_residual", r.identity_residual(), r.identity_se()),
        ("kl_avg", r.kl_avg, r.kl_avg_se),
        ("entropy_q_avg", r.entropy_q_avg, r.entropy_q_avg_se),
        ("avg_noise_bound", r.avg_noise_bound, r.avg_noise_bound_se),
    ];
    for (name, v, se) in rows {
        t.row(vec![name.into(), v.into(), se.into()])?;
    }
    let mut cfg = RunConfig::new("diagnostics", &source);
    cfg.set("M", a.m).set("solver", solver).set("seed", a.seed);
    emit(&t, &cfg, a.out.as_ref())
}
