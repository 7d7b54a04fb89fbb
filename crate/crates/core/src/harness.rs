//! Experiment orchestration: seeded single runs, hyperparameter sweeps,
//! tuning on 8 seeds by trailing RMSPBE, final evaluation on 100 seeds,
//! robustness grids, and CSV persistence.
//!
//! Determinism contract: every run's seed is a pure function of
//! `(base_seed, env, algo, config_index, role, run_index)`, runs are
//! independent, and all collections are reduced in index order. Results are
//! therefore byte-identical for any worker count.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::benchmarks::BenchmarkSpec;
use crate::learners::{self, Algo, Hyper, LearnerState};
use crate::mdp::{sample_transition, OperatorBundle};
use crate::metrics::{aggregate, Aggregate, MetricSeries};
use crate::{Error, Result};

/// Number of tuning seeds per configuration.
pub const TUNE_SEEDS: usize = 8;

/// Number of disjoint evaluation seeds.
pub const EVAL_SEEDS: usize = 100;

/// Role of a derived seed; tuning and evaluation streams never overlap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeedRole {
    Tune,
    Eval,
}

/// SplitMix64 finalizer.
#[inline]
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over bytes.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derive the RNG seed for one run by folding the identifying tuple through
/// SplitMix64 (environment names enter via FNV-1a). Distinct roles yield
/// disjoint streams.
pub fn derive_seed(
    base: u64,
    env: &str,
    algo: Algo,
    config_index: usize,
    role: SeedRole,
    run_index: usize,
) -> u64 {
    let role_tag = match role {
        SeedRole::Tune => 0x7475_6e65, // "tune"
        SeedRole::Eval => 0x6576_616c, // "eval"
    };
    let mut s = splitmix64(base);
    s = splitmix64(s ^ fnv1a64(env.as_bytes()));
    s = splitmix64(s ^ fnv1a64(algo.name().as_bytes()));
    s = splitmix64(s ^ (config_index as u64));
    s = splitmix64(s ^ role_tag);
    s = splitmix64(s ^ (run_index as u64));
    s
}

/// Stable, readable configuration identifier.
pub fn config_id(hyper: &Hyper) -> String {
    format!("a{}_w{}_e{}_b{}", hyper.alpha, hyper.alpha_w, hyper.eta, hyper.beta)
}

/// Hash tying a sweep winner row to the analysis that consumes it.
pub fn config_hash(env: &str, algo: Algo, hyper: &Hyper) -> u64 {
    fnv1a64(format!("{env}/{}/{}", algo.name(), config_id(hyper)).as_bytes())
}

/// Simulate one behavior trajectory, applying the learner per transition and
/// recording RMSPBE per step (element 0 is recorded before the first
/// update). Bit-deterministic given the seed.
///
/// A divergence fires the guard, freezes the parameters, and extends the last
/// finite metric value to the full horizon with the event flagged.
pub fn run_single(
    spec: &BenchmarkSpec,
    bundle: &OperatorBundle,
    algo: Algo,
    hyper: &Hyper,
    horizon: usize,
    seed: u64,
) -> MetricSeries {
    assert!(horizon >= 2, "horizon too short for steady-state metrics");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = spec.mdp.gamma();
    let mut learner = LearnerState::new(&spec.theta0, &spec.w0);
    let mut s = spec.start_state;
    let mut values = Vec::with_capacity(horizon + 1);
    values.push(bundle.rmspbe(&learner.theta));
    let mut diverged_at = None;
    for t in 0..horizon {
        let tr = sample_transition(&spec.mdp, &spec.policies, &spec.phi, s, &mut rng);
        match learners::step(algo, &learner, hyper, &tr, gamma) {
            Ok(next) => {
                learner = next;
                s = tr.s_next;
                values.push(bundle.rmspbe(&learner.theta));
            }
            Err(_) => {
                diverged_at = Some(t);
                let last = *values.last().unwrap();
                values.resize(horizon + 1, last);
                break;
            }
        }
    }
    MetricSeries {
        env: spec.name.clone(),
        algo,
        config_id: config_id(hyper),
        seed,
        values,
        diverged_at,
    }
}

/// Mean RMSPBE over the last 20% of the trajectory; +inf for diverged runs.
pub fn tuning_objective(series: &MetricSeries) -> f64 {
    if series.diverged() {
        return f64::INFINITY;
    }
    let len = series.values.len();
    let tail = (len / 5).max(1);
    let slice = &series.values[len - tail..];
    slice.iter().sum::<f64>() / tail as f64
}

/// Search-space values shared by the grids below.
const ALPHAS_SHORT: [f64; 7] = [0.001, 0.003, 0.005, 0.01, 0.03, 0.05, 0.1];
const ALPHAS_FULL: [f64; 8] = [0.0003, 0.001, 0.003, 0.005, 0.01, 0.03, 0.05, 0.1];
const Z_MULTIPLIERS: [f64; 8] = [0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
const ETAS: [f64; 5] = [0.01, 0.03, 0.1, 0.3, 1.0];
const BETAS: [f64; 8] = [0.1, 0.3, 0.7, 1.0, 2.0, 3.0, 5.0, 10.0];

/// Per-parameter grid override for one algorithm. `param` is one of
/// `alpha`, `alpha_w`, `eta`, `beta`, or `z` (the GTD2/TDC auxiliary
/// multiplier).
#[derive(Clone, Debug, PartialEq)]
pub struct GridOverride {
    pub algo: Algo,
    pub param: String,
    pub values: Vec<f64>,
}

fn pick(
    overrides: &[GridOverride],
    algo: Algo,
    param: &str,
    default: &[f64],
) -> Vec<f64> {
    overrides
        .iter()
        .find(|o| o.algo == algo && o.param == param)
        .map(|o| o.values.clone())
        .unwrap_or_else(|| default.to_vec())
}

/// The tuning search space of one algorithm, enumerated in tie-break order:
/// ascending primary step, then auxiliary step, then regularizer. GTD2/TDC
/// auxiliary steps are `alpha * z` filtered to `alpha_w <= 0.1`.
pub fn hyper_grid(algo: Algo, overrides: &[GridOverride]) -> Vec<Hyper> {
    let mut out = Vec::new();
    match algo {
        Algo::Td | Algo::Gtd2Mp => {
            for &alpha in &pick(overrides, algo, "alpha", &ALPHAS_SHORT) {
                out.push(Hyper::alpha_only(alpha));
            }
        }
        Algo::Gtd2 | Algo::Tdc => {
            for &alpha in &pick(overrides, algo, "alpha", &ALPHAS_FULL) {
                for &z in &pick(overrides, algo, "z", &Z_MULTIPLIERS) {
                    let alpha_w = alpha * z;
                    if alpha_w <= 0.1 + 1e-12 {
                        out.push(Hyper { alpha, alpha_w, eta: 0.0, beta: 0.0 });
                    }
                }
            }
        }
        Algo::Tdrc => {
            for &alpha in &pick(overrides, algo, "alpha", &ALPHAS_FULL) {
                for &alpha_w in &pick(overrides, algo, "alpha_w", &ALPHAS_FULL) {
                    for &eta in &pick(overrides, algo, "eta", &ETAS) {
                        out.push(Hyper { alpha, alpha_w, eta, beta: 0.0 });
                    }
                }
            }
        }
        Algo::BaTdc => {
            for &alpha in &pick(overrides, algo, "alpha", &ALPHAS_FULL) {
                for &alpha_w in &pick(overrides, algo, "alpha_w", &ALPHAS_FULL) {
                    out.push(Hyper { alpha, alpha_w, eta: 0.0, beta: 0.0 });
                }
            }
        }
        Algo::BaTdrc => {
            for &alpha in &pick(overrides, algo, "alpha", &ALPHAS_FULL) {
                for &alpha_w in &pick(overrides, algo, "alpha_w", &ALPHAS_FULL) {
                    for &beta in &pick(overrides, algo, "beta", &BETAS) {
                        out.push(Hyper { alpha, alpha_w, eta: 0.0, beta });
                    }
                }
            }
        }
    }
    out
}

/// One sweep definition.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub env: String,
    pub algo: Algo,
    pub grid: Vec<Hyper>,
    pub horizon: usize,
    pub tune_seeds: usize,
    pub eval_seeds: usize,
}

impl SweepSpec {
    pub fn new(env: &str, algo: Algo, horizon: usize, overrides: &[GridOverride]) -> SweepSpec {
        SweepSpec {
            env: env.to_string(),
            algo,
            grid: hyper_grid(algo, overrides),
            horizon,
            tune_seeds: TUNE_SEEDS,
            eval_seeds: EVAL_SEEDS,
        }
    }
}

/// Tuning objective of one grid point.
#[derive(Clone, Debug)]
pub struct ConfigResult {
    pub config_index: usize,
    pub hyper: Hyper,
    pub objective: f64,
}

/// Winner plus the full objective landscape.
#[derive(Clone, Debug)]
pub struct TuneOutcome {
    pub env: String,
    pub algo: Algo,
    pub winner_index: usize,
    pub winner: Hyper,
    pub results: Vec<ConfigResult>,
}

/// Average the tuning objective over the tuning seeds for each grid point
/// and return the argmin. The grid is enumerated in tie-break order, so on
/// exact ties the smaller (alpha, auxiliary, regularizer) tuple wins.
pub fn tune(
    spec: &BenchmarkSpec,
    bundle: &OperatorBundle,
    sweep: &SweepSpec,
    base_seed: u64,
) -> TuneOutcome {
    assert!(!sweep.grid.is_empty(), "tuning grid must be nonempty");
    let mut results: Vec<ConfigResult> = sweep
        .grid
        .par_iter()
        .enumerate()
        .map(|(idx, hyper)| {
            let mut sum = 0.0;
            for run in 0..sweep.tune_seeds {
                let seed = derive_seed(base_seed, &sweep.env, sweep.algo, idx, SeedRole::Tune, run);
                let series = run_single(spec, bundle, sweep.algo, hyper, sweep.horizon, seed);
                sum += tuning_objective(&series);
            }
            ConfigResult {
                config_index: idx,
                hyper: *hyper,
                objective: sum / sweep.tune_seeds as f64,
            }
        })
        .collect();
    results.sort_by_key(|r| r.config_index);
    let mut winner = 0;
    for (i, r) in results.iter().enumerate() {
        if r.objective < results[winner].objective {
            winner = i;
        }
    }
    TuneOutcome {
        env: sweep.env.clone(),
        algo: sweep.algo,
        winner_index: results[winner].config_index,
        winner: results[winner].hyper,
        results,
    }
}

/// Evaluation aggregates for one fixed configuration.
#[derive(Clone, Debug)]
pub struct EvalOutcome {
    pub env: String,
    pub algo: Algo,
    pub hyper: Hyper,
    pub auc: Aggregate,
    pub final_value: Aggregate,
    pub n_diverged: usize,
    pub records: Vec<MetricSeries>,
}

/// Run the evaluation seeds (disjoint from tuning by role) and aggregate.
pub fn evaluate(
    spec: &BenchmarkSpec,
    bundle: &OperatorBundle,
    algo: Algo,
    hyper: &Hyper,
    config_index: usize,
    horizon: usize,
    n_seeds: usize,
    base_seed: u64,
) -> EvalOutcome {
    let mut records: Vec<(usize, MetricSeries)> = (0..n_seeds)
        .into_par_iter()
        .map(|run| {
            let seed = derive_seed(base_seed, &spec.name, algo, config_index, SeedRole::Eval, run);
            (run, run_single(spec, bundle, algo, hyper, horizon, seed))
        })
        .collect();
    records.sort_by_key(|(run, _)| *run);
    let records: Vec<MetricSeries> = records.into_iter().map(|(_, s)| s).collect();
    let aucs: Vec<f64> = records.iter().map(|r| r.auc_ss()).collect();
    let finals: Vec<f64> = records.iter().map(|r| r.final_value()).collect();
    EvalOutcome {
        env: spec.name.clone(),
        algo,
        hyper: *hyper,
        auc: aggregate(&aucs),
        final_value: aggregate(&finals),
        n_diverged: records.iter().filter(|r| r.diverged()).count(),
        records,
    }
}

/// One point of the step-size robustness study.
#[derive(Clone, Debug)]
pub struct RobustnessPoint {
    pub alpha: f64,
    pub auc: Aggregate,
    pub n_diverged: usize,
}

/// Steady-state AUC of BA-TDRC against the primary step size, with the
/// regularizer fixed to 1.0 and the gain ratio fixed to 1 (`alpha_w =
/// alpha`).
pub fn robustness_grid(
    spec: &BenchmarkSpec,
    bundle: &OperatorBundle,
    alphas: &[f64],
    n_seeds: usize,
    horizon: usize,
    base_seed: u64,
) -> Vec<RobustnessPoint> {
    alphas
        .iter()
        .enumerate()
        .map(|(idx, &alpha)| {
            let hyper = Hyper { alpha, alpha_w: alpha, eta: 0.0, beta: 1.0 };
            let out =
                evaluate(spec, bundle, Algo::BaTdrc, &hyper, idx, horizon, n_seeds, base_seed);
            RobustnessPoint { alpha, auc: out.auc, n_diverged: out.n_diverged }
        })
        .collect()
}

/// Runtime configuration, readable from a key-value file:
///
/// ```text
/// base_seed 1234
/// workers 8
/// out results
/// curves false
/// horizon two_state 3000      # per-environment override
/// grid ba_tdrc beta : 0.5 1 2 # search-space override
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub base_seed: u64,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub curves: bool,
    pub horizons: BTreeMap<String, usize>,
    pub grid_overrides: Vec<GridOverride>,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            base_seed: 0,
            workers: 0,
            out_dir: PathBuf::from("results"),
            curves: false,
            horizons: BTreeMap::new(),
            grid_overrides: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fail =
                |msg: &str| Error::invalid(format!("config line {}: {msg}", lineno + 1));
            let (head, values) = match line.split_once(':') {
                Some((h, v)) => (h.trim(), Some(v.trim())),
                None => (line, None),
            };
            let parts: Vec<&str> = head.split_whitespace().collect();
            match parts.as_slice() {
                ["base_seed", v] => {
                    cfg.base_seed = v.parse().map_err(|_| fail("bad base_seed"))?
                }
                ["workers", v] => cfg.workers = v.parse().map_err(|_| fail("bad workers"))?,
                ["out", v] => cfg.out_dir = PathBuf::from(v),
                ["curves", v] => {
                    cfg.curves = match *v {
                        "true" | "1" | "yes" => true,
                        "false" | "0" | "no" => false,
                        _ => return Err(fail("curves must be true or false")),
                    }
                }
                ["horizon", env, v] => {
                    cfg.horizons
                        .insert(env.to_string(), v.parse().map_err(|_| fail("bad horizon"))?);
                }
                ["grid", algo, param] => {
                    let values = values
                        .ok_or_else(|| fail("grid override needs `: v1 v2 ...`"))?
                        .split_whitespace()
                        .map(|t| t.parse::<f64>().map_err(|_| fail(&format!("bad number `{t}`"))))
                        .collect::<Result<Vec<f64>>>()?;
                    if values.is_empty() {
                        return Err(fail("grid override needs at least one value"));
                    }
                    cfg.grid_overrides.push(GridOverride {
                        algo: Algo::from_name(algo)?,
                        param: param.to_string(),
                        values,
                    });
                }
                _ => return Err(fail(&format!("unrecognized config line `{line}`"))),
            }
        }
        Ok(cfg)
    }

    /// Horizon for an environment: override or the benchmark default.
    pub fn horizon_for(&self, spec: &BenchmarkSpec) -> usize {
        self.horizons.get(&spec.name).copied().unwrap_or(spec.default_horizon)
    }
}

// ---------------------------------------------------------------------------
// Persistence: results/<env>/<algo>/{sweep.csv, eval.csv, curves/*.csv}.
// Floats are written with the shortest round-trip formatting, so identical
// results produce identical bytes.
// ---------------------------------------------------------------------------

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::invalid(format!("{}: {e}", path.display()))
}

/// `out/<env>/<algo>`, created on demand.
pub fn result_dir(out: &Path, env: &str, algo: Algo) -> Result<PathBuf> {
    let dir = out.join(env).join(algo.name());
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    Ok(dir)
}

/// Write the sweep landscape; the winner row is flagged.
pub fn write_sweep_csv(
    out: &Path,
    outcome: &TuneOutcome,
    horizon: usize,
) -> Result<PathBuf> {
    let dir = result_dir(out, &outcome.env, outcome.algo)?;
    let path = dir.join("sweep.csv");
    let mut f = std::fs::File::create(&path).map_err(|e| io_err(&path, e))?;
    let mut buf = String::new();
    buf.push_str("env,algo,config_index,config_id,config_hash,alpha,alpha_w,eta,beta,objective,winner,horizon\n");
    for r in &outcome.results {
        let h = &r.hyper;
        buf.push_str(&format!(
            "{},{},{},{},{:016x},{},{},{},{},{},{},{}\n",
            outcome.env,
            outcome.algo.name(),
            r.config_index,
            config_id(h),
            config_hash(&outcome.env, outcome.algo, h),
            h.alpha,
            h.alpha_w,
            h.eta,
            h.beta,
            r.objective,
            (r.config_index == outcome.winner_index) as u8,
            horizon,
        ));
    }
    f.write_all(buf.as_bytes()).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// Read the winner row back: (hyper, config_index, stored hash).
pub fn read_sweep_winner(out: &Path, env: &str, algo: Algo) -> Result<(Hyper, usize, u64)> {
    let path = out.join(env).join(algo.name()).join("sweep.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 12 || cols[10] != "1" {
            continue;
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| Error::invalid(format!("bad number in {}", path.display())))
        };
        let hyper = Hyper {
            alpha: parse(cols[5])?,
            alpha_w: parse(cols[6])?,
            eta: parse(cols[7])?,
            beta: parse(cols[8])?,
        };
        let config_index: usize = cols[2]
            .parse()
            .map_err(|_| Error::invalid(format!("bad config index in {}", path.display())))?;
        let stored = u64::from_str_radix(cols[4], 16)
            .map_err(|_| Error::invalid(format!("bad config hash in {}", path.display())))?;
        if stored != config_hash(env, algo, &hyper) {
            return Err(Error::invalid(format!(
                "sweep winner hash mismatch in {}",
                path.display()
            )));
        }
        return Ok((hyper, config_index, stored));
    }
    Err(Error::invalid(format!("no winner row in {}", path.display())))
}

/// Per-run evaluation rows: env, algo, config_id, seed, auc_ss, final,
/// diverged.
pub fn write_eval_csv(out: &Path, outcome: &EvalOutcome, horizon: usize) -> Result<PathBuf> {
    let dir = result_dir(out, &outcome.env, outcome.algo)?;
    let path = dir.join("eval.csv");
    let mut buf = String::from("env,algo,config_id,seed,auc_ss,final,diverged,horizon\n");
    for r in &outcome.records {
        buf.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.env,
            r.algo.name(),
            r.config_id,
            r.seed,
            r.auc_ss(),
            r.final_value(),
            r.diverged() as u8,
            horizon,
        ));
    }
    std::fs::write(&path, buf).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// Long-format per-run curves: `curves/<algo>_seed<k>.csv` with `t,rmspbe`.
pub fn write_curves(out: &Path, env: &str, algo: Algo, records: &[MetricSeries]) -> Result<()> {
    let dir = result_dir(out, env, algo)?.join("curves");
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    for r in records {
        let path = dir.join(format!("{}_seed{}.csv", algo.name(), r.seed));
        let mut buf = String::from("t,rmspbe\n");
        for (t, v) in r.values.iter().enumerate() {
            buf.push_str(&format!("{t},{v}\n"));
        }
        std::fs::write(&path, buf).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

/// Verification table rows: analysis.csv at the output root.
pub fn write_analysis_csv(out: &Path, rows: &[crate::spectra::AnalysisRow]) -> Result<PathBuf> {
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let path = out.join("analysis.csv");
    let mut buf = String::from(
        "env,sigma_min_fp,margin_tdrc,margin_ba,best_q_c,best_q_a,best_alpha_c,best_alpha_a,speed_holds,interpretation\n",
    );
    for r in rows {
        buf.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.env,
            r.sigma_min_fp,
            r.margin_tdrc,
            r.margin_ba,
            r.best_q_c,
            r.best_q_a,
            r.best_alpha_c,
            r.best_alpha_a,
            r.speed_holds as u8,
            r.interpretation,
        ));
    }
    std::fs::write(&path, buf).map_err(|e| io_err(&path, e))?;
    Ok(path)
}
