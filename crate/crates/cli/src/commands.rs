//! Implementations of the CLI subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use batd_core::benchmarks::{self, BenchmarkSpec, Registry};
use batd_core::harness::{
    self, evaluate, read_sweep_winner, robustness_grid, run_single, tune, RunConfig, SweepSpec,
    EVAL_SEEDS,
};
use batd_core::learners::{Algo, Hyper};
use batd_core::mdp::{operator_bundle, OperatorBundle};
use batd_core::spectra::{self, TunedParams};
use batd_core::{Error, Result};

use crate::out::{say, sayln};
use crate::svg::{Chart, Series};
use crate::table::{self, cell_mean_std, fmt_sig};
use crate::{Common, ReproduceTarget};

struct Ctx {
    cfg: RunConfig,
    registry: Registry,
}

fn context(common: &Common) -> Result<Ctx> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.base_seed {
        cfg.base_seed = seed;
    }
    if let Some(workers) = common.workers {
        cfg.workers = workers;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if common.curves {
        cfg.curves = true;
    }
    if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global().ok();
    }
    let mut registry = Registry::new();
    for file in &common.env_files {
        registry.load_file(file)?;
    }
    Ok(Ctx { cfg, registry })
}

fn envs_for(ctx: &Ctx, name: &str) -> Result<Vec<BenchmarkSpec>> {
    if name == "all" {
        ctx.registry.names().iter().map(|n| ctx.registry.get(n)).collect()
    } else {
        Ok(vec![ctx.registry.get(name)?])
    }
}

fn bundle_of(spec: &BenchmarkSpec) -> Result<OperatorBundle> {
    operator_bundle(&spec.mdp, &spec.phi, &spec.policies)
}

/// Tuned analysis parameters from recorded sweep winners: regularizers come
/// from the winning configuration and the gain ratio is its alpha_w / alpha.
fn tuned_from_sweep(dir: &Path, env: &str) -> Result<TunedParams> {
    let need = |algo: Algo| {
        read_sweep_winner(dir, env, algo).map_err(|_| {
            Error::Invalid(format!(
                "no sweep winner for `{env}`/{} under {}; run `batd sweep --env {env} --algo {}` \
                 first (or pass --fixture pinned)",
                algo.name(),
                dir.display(),
                algo.name()
            ))
        })
    };
    let (tdrc, _, _) = need(Algo::Tdrc)?;
    let (ba, _, _) = need(Algo::BaTdrc)?;
    Ok(TunedParams {
        eta: tdrc.eta,
        lambda_c: tdrc.alpha_w / tdrc.alpha,
        beta: ba.beta,
        lambda_a: ba.alpha_w / ba.alpha,
    })
}

pub fn analyze(
    common: &Common,
    env: &str,
    use_pinned: bool,
    sweep_dir: Option<PathBuf>,
) -> Result<()> {
    let ctx = context(common)?;
    let specs = envs_for(&ctx, env)?;
    let grid = spectra::default_alpha_grid();
    let source_dir = sweep_dir.unwrap_or_else(|| ctx.cfg.out_dir.clone());
    let mut rows = Vec::new();
    for spec in &specs {
        let bundle = bundle_of(spec)?;
        let tuned = if use_pinned {
            spectra::pinned_params(&spec.name)?
        } else {
            tuned_from_sweep(&source_dir, &spec.name)?
        };
        rows.push(spectra::analysis_row(&spec.name, &bundle, &tuned, &grid)?);
    }
    say!("{}", table::analysis_table(&rows));
    let path = harness::write_analysis_csv(&ctx.cfg.out_dir, &rows)?;
    sayln!("wrote {}", path.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn run_once(
    common: &Common,
    env: &str,
    algo: &str,
    alpha: f64,
    alpha_w: f64,
    eta: f64,
    beta: f64,
    horizon: Option<usize>,
    seed: u64,
) -> Result<()> {
    let ctx = context(common)?;
    let spec = ctx.registry.get(env)?;
    let algo = Algo::from_name(algo)?;
    let bundle = bundle_of(&spec)?;
    let hyper = Hyper { alpha, alpha_w, eta, beta };
    let horizon = horizon.unwrap_or_else(|| ctx.cfg.horizon_for(&spec));
    let series = run_single(&spec, &bundle, algo, &hyper, horizon, seed);
    sayln!(
        "{} on {} (horizon {horizon}, seed {seed}): auc_ss {}  final {}  diverged {}",
        algo,
        spec.name,
        fmt_sig(series.auc_ss()),
        fmt_sig(series.final_value()),
        series.diverged(),
    );
    if ctx.cfg.curves {
        harness::write_curves(&ctx.cfg.out_dir, &spec.name, algo, &[series])?;
        sayln!("wrote curves under {}", ctx.cfg.out_dir.display());
    }
    Ok(())
}

pub fn sweep(common: &Common, env: &str, algo: &str) -> Result<()> {
    let ctx = context(common)?;
    let spec = ctx.registry.get(env)?;
    let algo = Algo::from_name(algo)?;
    let bundle = bundle_of(&spec)?;
    let horizon = ctx.cfg.horizon_for(&spec);
    let sweep = SweepSpec::new(&spec.name, algo, horizon, &ctx.cfg.grid_overrides);
    let n = sweep.grid.len();
    let outcome = tune(&spec, &bundle, &sweep, ctx.cfg.base_seed);
    let path = harness::write_sweep_csv(&ctx.cfg.out_dir, &outcome, horizon)?;
    let w = &outcome.winner;
    sayln!(
        "{} on {}: tuned over {n} configs x {} seeds (horizon {horizon}); winner alpha {} alpha_w {} eta {} beta {} (objective {})",
        algo,
        spec.name,
        sweep.tune_seeds,
        w.alpha,
        w.alpha_w,
        w.eta,
        w.beta,
        fmt_sig(outcome.results.iter().find(|r| r.config_index == outcome.winner_index).unwrap().objective),
    );
    sayln!("wrote {}", path.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn eval(
    common: &Common,
    env: &str,
    algo: &str,
    from_sweep: bool,
    alpha: f64,
    alpha_w: f64,
    eta: f64,
    beta: f64,
    horizon: Option<usize>,
) -> Result<()> {
    let ctx = context(common)?;
    let spec = ctx.registry.get(env)?;
    let algo = Algo::from_name(algo)?;
    let bundle = bundle_of(&spec)?;
    let horizon = horizon.unwrap_or_else(|| ctx.cfg.horizon_for(&spec));
    let (hyper, config_index) = if from_sweep {
        let (hyper, idx, _) = read_sweep_winner(&ctx.cfg.out_dir, &spec.name, algo)?;
        (hyper, idx)
    } else {
        (Hyper { alpha, alpha_w, eta, beta }, 0)
    };
    let outcome =
        evaluate(&spec, &bundle, algo, &hyper, config_index, horizon, EVAL_SEEDS, ctx.cfg.base_seed);
    let path = harness::write_eval_csv(&ctx.cfg.out_dir, &outcome, horizon)?;
    if ctx.cfg.curves {
        harness::write_curves(&ctx.cfg.out_dir, &spec.name, algo, &outcome.records)?;
    }
    sayln!(
        "{} on {} over {} seeds (horizon {horizon}): auc_ss {}  final {}  diverged {}/{}",
        algo,
        spec.name,
        outcome.records.len(),
        cell_mean_std(outcome.auc.mean, outcome.auc.std, outcome.n_diverged),
        cell_mean_std(outcome.final_value.mean, outcome.final_value.std, outcome.n_diverged),
        outcome.n_diverged,
        outcome.records.len(),
    );
    sayln!("wrote {}", path.display());
    Ok(())
}

/// Algorithms of the main comparison (the unregularized behavior-aware
/// variant is ablation-only).
const MAIN_ALGOS: [Algo; 6] =
    [Algo::Td, Algo::Gtd2, Algo::Tdc, Algo::Tdrc, Algo::Gtd2Mp, Algo::BaTdrc];

/// Algorithms of the modular ablation.
const ABLATION_ALGOS: [Algo; 4] = [Algo::Tdc, Algo::BaTdc, Algo::Tdrc, Algo::BaTdrc];

pub fn reproduce(common: &Common, target: ReproduceTarget) -> Result<()> {
    let ctx = context(common)?;
    match target {
        ReproduceTarget::AucTable => comparison_tables(&ctx, &MAIN_ALGOS, "auc_table", true),
        ReproduceTarget::FinalTable => comparison_tables(&ctx, &MAIN_ALGOS, "final_table", false),
        ReproduceTarget::AblationTable => {
            comparison_tables(&ctx, &ABLATION_ALGOS, "ablation_table", true)
        }
        ReproduceTarget::Robustness => robustness(&ctx),
    }
}

/// Full protocol for a table: tune each (env, algo) on the tuning seeds,
/// evaluate the winner on the evaluation seeds, write per-pair sweep/eval
/// CSVs plus the assembled table (CSV and aligned text).
fn comparison_tables(ctx: &Ctx, algos: &[Algo], stem: &str, use_auc: bool) -> Result<()> {
    let env_names = benchmarks::list();
    let mut cells: BTreeMap<(String, Algo), harness::EvalOutcome> = BTreeMap::new();
    let mut horizons: BTreeMap<String, usize> = BTreeMap::new();
    for env in &env_names {
        let spec = ctx.registry.get(env)?;
        let bundle = bundle_of(&spec)?;
        let horizon = ctx.cfg.horizon_for(&spec);
        horizons.insert(spec.name.clone(), horizon);
        for &algo in algos {
            let sweep = SweepSpec::new(&spec.name, algo, horizon, &ctx.cfg.grid_overrides);
            let outcome = tune(&spec, &bundle, &sweep, ctx.cfg.base_seed);
            harness::write_sweep_csv(&ctx.cfg.out_dir, &outcome, horizon)?;
            let eval = evaluate(
                &spec,
                &bundle,
                algo,
                &outcome.winner,
                outcome.winner_index,
                horizon,
                sweep.eval_seeds,
                ctx.cfg.base_seed,
            );
            harness::write_eval_csv(&ctx.cfg.out_dir, &eval, horizon)?;
            if ctx.cfg.curves {
                harness::write_curves(&ctx.cfg.out_dir, &spec.name, algo, &eval.records)?;
            }
            cells.insert((spec.name.clone(), algo), eval);
        }
    }

    // Assembled CSV (full precision).
    let metric_name = if use_auc { "auc_ss" } else { "final" };
    let mut csv = String::from(
        "env,algo,metric,mean,std,n,n_diverged,horizon,alpha,alpha_w,eta,beta\n",
    );
    for env in &env_names {
        for &algo in algos {
            let cell = &cells[&(env.to_string(), algo)];
            let agg = if use_auc { cell.auc } else { cell.final_value };
            let h = cell.hyper;
            csv.push_str(&format!(
                "{env},{},{metric_name},{},{},{},{},{},{},{},{},{}\n",
                algo.name(),
                agg.mean,
                agg.std,
                agg.n,
                cell.n_diverged,
                horizons[*env],
                h.alpha,
                h.alpha_w,
                h.eta,
                h.beta,
            ));
        }
    }
    std::fs::create_dir_all(&ctx.cfg.out_dir)
        .map_err(|e| Error::Invalid(format!("{}: {e}", ctx.cfg.out_dir.display())))?;
    let csv_path = ctx.cfg.out_dir.join(format!("{stem}.csv"));
    std::fs::write(&csv_path, &csv)
        .map_err(|e| Error::Invalid(format!("{}: {e}", csv_path.display())))?;

    // Aligned text table: one row per algorithm, one column per environment.
    let mut headers: Vec<&str> = vec!["algo"];
    headers.extend(env_names.iter().copied());
    let rows: Vec<Vec<String>> = algos
        .iter()
        .map(|algo| {
            let mut row = vec![algo.label().to_string()];
            for env in &env_names {
                let cell = &cells[&(env.to_string(), *algo)];
                let agg = if use_auc { cell.auc } else { cell.final_value };
                row.push(cell_mean_std(agg.mean, agg.std, cell.n_diverged));
            }
            row
        })
        .collect();
    let title = if use_auc { "steady-state AUC RMSPBE" } else { "final RMSPBE" };
    let horizon_note = env_names
        .iter()
        .map(|e| format!("{e}={}", horizons[*e]))
        .collect::<Vec<_>>()
        .join(", ");
    let mut text = format!(
        "{title}, mean ± sample std over {EVAL_SEEDS} runs (horizons: {horizon_note})\n"
    );
    text.push_str(&table::render(&headers, &rows));
    text.push_str("* at least one run hit the divergence guard\n");
    let txt_path = ctx.cfg.out_dir.join(format!("{stem}.txt"));
    std::fs::write(&txt_path, &text)
        .map_err(|e| Error::Invalid(format!("{}: {e}", txt_path.display())))?;
    say!("{text}");
    sayln!("wrote {} and {}", csv_path.display(), txt_path.display());
    Ok(())
}

/// Step-size robustness of the regularized behavior-aware learner with the
/// regularizer fixed at 1.0 and gain ratio fixed at 1.
fn robustness(ctx: &Ctx) -> Result<()> {
    let alphas = [0.0003, 0.001, 0.003, 0.005, 0.01, 0.03, 0.05, 0.1];
    let mut csv = String::from("env,alpha,auc_mean,auc_std,n,n_diverged,horizon\n");
    std::fs::create_dir_all(&ctx.cfg.out_dir)
        .map_err(|e| Error::Invalid(format!("{}: {e}", ctx.cfg.out_dir.display())))?;
    for env in benchmarks::list() {
        let spec = ctx.registry.get(env)?;
        let bundle = bundle_of(&spec)?;
        let horizon = ctx.cfg.horizon_for(&spec);
        let points =
            robustness_grid(&spec, &bundle, &alphas, EVAL_SEEDS, horizon, ctx.cfg.base_seed);
        for p in &points {
            csv.push_str(&format!(
                "{env},{},{},{},{},{},{horizon}\n",
                p.alpha, p.auc.mean, p.auc.std, p.auc.n, p.n_diverged
            ));
        }
        let chart = Chart {
            title: format!("BA-TDRC step-size robustness: {env}"),
            x_label: "primary step size".into(),
            y_label: "steady-state AUC RMSPBE".into(),
            log_x: true,
            log_y: true,
            series: vec![Series {
                label: "BA-TDRC (beta=1, ratio=1)".into(),
                points: points.iter().map(|p| (p.alpha, p.auc.mean)).collect(),
                band: Some(
                    points
                        .iter()
                        .map(|p| (p.alpha, p.auc.mean - p.auc.std, p.auc.mean + p.auc.std))
                        .collect(),
                ),
            }],
        };
        let path = ctx.cfg.out_dir.join(format!("robustness_{env}.svg"));
        std::fs::write(&path, chart.to_svg())
            .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
        sayln!("wrote {}", path.display());
    }
    let csv_path = ctx.cfg.out_dir.join("robustness.csv");
    std::fs::write(&csv_path, csv)
        .map_err(|e| Error::Invalid(format!("{}: {e}", csv_path.display())))?;
    sayln!("wrote {}", csv_path.display());
    Ok(())
}

/// Mean-and-band learning curves from curve CSVs written by earlier runs.
pub fn plot(common: &Common, curves_dir: &Path, env: &str, algo_filter: &str) -> Result<()> {
    let ctx = context(common)?;
    let wanted: Vec<String> = algo_filter
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    let envs: Vec<String> = if env == "all" {
        let mut found: Vec<String> = std::fs::read_dir(curves_dir)
            .map_err(|e| Error::Invalid(format!("{}: {e}", curves_dir.display())))?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_dir())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .collect();
        found.sort();
        found
    } else {
        vec![env.to_string()]
    };

    let mut plotted = 0;
    for env_name in &envs {
        let env_dir = curves_dir.join(env_name);
        let mut series = Vec::new();
        for algo in Algo::all() {
            if !wanted.is_empty() && !wanted.iter().any(|w| w == algo.name()) {
                continue;
            }
            let dir = env_dir.join(algo.name()).join("curves");
            if !dir.is_dir() {
                continue;
            }
            let mut runs: Vec<Vec<f64>> = Vec::new();
            let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
                .map_err(|e| Error::Invalid(format!("{}: {e}", dir.display())))?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            files.sort();
            for file in files {
                let text = std::fs::read_to_string(&file)
                    .map_err(|e| Error::Invalid(format!("{}: {e}", file.display())))?;
                let values: Vec<f64> = text
                    .lines()
                    .skip(1)
                    .filter_map(|l| l.split(',').nth(1))
                    .filter_map(|v| v.parse().ok())
                    .collect();
                if !values.is_empty() {
                    runs.push(values);
                }
            }
            if runs.is_empty() {
                continue;
            }
            let len = runs.iter().map(Vec::len).min().unwrap();
            let stride = len.div_ceil(1000).max(1);
            let mut points = Vec::new();
            let mut band = Vec::new();
            for t in (0..len).step_by(stride) {
                let col: Vec<f64> = runs.iter().map(|r| r[t]).collect();
                let mean = col.iter().sum::<f64>() / col.len() as f64;
                let std = if col.len() > 1 {
                    (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                        / (col.len() - 1) as f64)
                        .sqrt()
                } else {
                    0.0
                };
                points.push((t as f64, mean));
                band.push((t as f64, mean - std, mean + std));
            }
            series.push(Series { label: algo.label().to_string(), points, band: Some(band) });
        }
        if series.is_empty() {
            continue;
        }
        let chart = Chart {
            title: format!("RMSPBE learning curves: {env_name}"),
            x_label: "step".into(),
            y_label: "RMSPBE (mean ± std)".into(),
            log_x: false,
            log_y: true,
            series,
        };
        std::fs::create_dir_all(&ctx.cfg.out_dir)
            .map_err(|e| Error::Invalid(format!("{}: {e}", ctx.cfg.out_dir.display())))?;
        let path = ctx.cfg.out_dir.join(format!("curves_{env_name}.svg"));
        std::fs::write(&path, chart.to_svg())
            .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
        sayln!("wrote {}", path.display());
        plotted += 1;
    }
    if plotted == 0 {
        return Err(Error::Invalid(format!(
            "no curve CSVs found under {}; run with --curves first",
            curves_dir.display()
        )));
    }
    Ok(())
}

