use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use plp_core::simulate::CoefficientRanges;
use plp_core::{
    arma_replica, build_scenario, check_moments, nested_scenario, partial_coherence, recover_primal, roc_auc,
    roc_curve, sample_covariances, score_against_truth, score_matrix, solve_regularized, step, threshold,
    FrequencyGrid, Metrics, NestedScenarioConfig, RecursiveState, RegularizedProblem, ScenarioSpec,
    SolverConfig, SolverReport, SpectralDensitySamples, Support, DEFAULT_GRID_SIZE,
};

use crate::error::{CliError, CliResult};
use crate::formats::{
    read_json, read_samples, read_scores, read_time_series, write_json, write_samples, write_scores,
    write_time_series, ModelJson, PolyJson, SupportJson, INDEX_BASE,
};
use crate::manifest::{RunManifest, MANIFEST_FILE};

#[derive(Debug, Parser)]
#[command(name = "plp", version, about = "Positive link prediction from time series and a prior spectrum")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a scenario directory from a JSON scenario config.
    Simulate(SimulateArgs),
    /// Solve one window against a prior and threshold the partial-coherence scores.
    Predict(PredictArgs),
    /// Process every window of a scenario directory, updating the prior each time.
    Recurse(RecurseArgs),
    /// Turn a predict or recurse output directory into plotting tables.
    Report(ReportArgs),
    /// Rerun the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,
    /// Stopping tolerance on the gradient-mapping norm.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
}

impl SolverArgs {
    fn config(&self) -> CliResult<SolverConfig> {
        let cfg = SolverConfig {
            max_iters: self.max_iters,
            tol_grad: self.tol,
            ..SolverConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn record(&self, manifest: &mut RunManifest) {
        manifest.param("max_iters", self.max_iters);
        manifest.param("tol", self.tol);
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Scenario config (JSON).
    pub config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the grid size in the config.
    #[arg(long)]
    pub grid_size: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    /// Headerless CSV, one row per sample.
    #[arg(long)]
    pub data: PathBuf,
    /// Prior inverse spectrum: a model JSON or a spectral-samples CSV.
    /// Defaults to the identity.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    /// Prior support JSON; defaults to the support in the model file, else
    /// the diagonal.
    #[arg(long)]
    pub prior_support: Option<PathBuf>,
    /// Hard mask: solve the link-selection problem on this support (needs
    /// `--lambda 0` or no `--lambda`).
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// True support, used for metrics and reports.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub threshold: f64,
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    #[arg(long)]
    pub grid_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RecurseArgs {
    /// Directory written by `simulate`.
    pub scenario: PathBuf,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub threshold: f64,
    /// Degree of every increment; defaults to the scenario's.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub grid_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Output directory of `predict` or `recurse`.
    pub run: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write to this directory instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Simulate(_) => "simulate",
            Self::Predict(_) => "predict",
            Self::Recurse(_) => "recurse",
            Self::Report(_) => "report",
            Self::Replay(_) => "replay",
        }
    }

    fn out_mut(&mut self) -> Option<&mut PathBuf> {
        match self {
            Self::Simulate(a) => Some(&mut a.out),
            Self::Predict(a) => Some(&mut a.out),
            Self::Recurse(a) => Some(&mut a.out),
            Self::Report(a) => Some(&mut a.out),
            Self::Replay(_) => None,
        }
    }
}

/// Runs a parsed command; `argv` (without the program name) is recorded in
/// the manifest.
pub fn run(cli: Cli, argv: &[String]) -> CliResult<()> {
    let start = Instant::now();
    let mut manifest = RunManifest::new(cli.command.name(), argv);
    let (out, result) = match &cli.command {
        Command::Simulate(a) => (a.out.clone(), simulate(a, &mut manifest)),
        Command::Predict(a) => (a.out.clone(), predict(a, &mut manifest)),
        Command::Recurse(a) => (a.out.clone(), recurse(a, &mut manifest)),
        Command::Report(a) => (a.out.clone(), report(a, &mut manifest)),
        Command::Replay(a) => return replay(a),
    };
    let converged = match result {
        Ok(c) => c,
        Err(e) => return Err(e),
    };
    manifest.converged = converged;
    manifest.runtime_seconds = start.elapsed().as_secs_f64();
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    if converged == Some(false) {
        return Err(CliError::NotConverged(format!(
            "solver did not converge; outputs in {} are flagged",
            out.display()
        )));
    }
    Ok(())
}

fn replay(args: &ReplayArgs) -> CliResult<()> {
    let manifest: RunManifest = read_json(&args.manifest)?;
    let out = match &args.out {
        Some(o) => Some(std::path::absolute(o).map_err(|e| CliError::io(o, e))?),
        None => None,
    };
    let mut full = vec!["plp".to_string()];
    full.extend(manifest.argv.iter().cloned());
    let mut cli = Cli::try_parse_from(&full)
        .map_err(|e| CliError::Input(format!("{}: recorded arguments: {e}", args.manifest.display())))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError::Input("a replay manifest cannot be replayed".into()));
    }
    std::env::set_current_dir(&manifest.cwd).map_err(|e| CliError::io(&manifest.cwd, e))?;
    if let (Some(o), Some(slot)) = (out, cli.command.out_mut()) {
        *slot = o;
    }
    run(cli, &manifest.argv)
}

fn grid(len: usize) -> CliResult<Arc<FrequencyGrid<f64>>> {
    Ok(Arc::new(FrequencyGrid::new(len)?))
}

fn check_lambda_threshold(lambda: f64, t_r: f64) -> CliResult<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(CliError::Input(format!("--lambda must be finite and >= 0, got {lambda}")));
    }
    if !(t_r > 0.0) {
        return Err(CliError::Input(format!("--threshold must be > 0, got {t_r}")));
    }
    Ok(())
}

fn read_support(path: &Path) -> CliResult<Support> {
    read_json::<SupportJson>(path)?.to_support()
}

fn write_support(path: &Path, s: &Support) -> CliResult<()> {
    write_json(path, &SupportJson::from_support(s))
}

fn metrics_json(m: &Metrics) -> serde_json::Value {
    json!({
        "tp": m.tp,
        "fp": m.fp,
        "fn": m.fn_,
        "tn": m.tn,
        "precision": m.precision,
        "recall": m.recall,
        "f1": m.f1,
        "false_positive_rate": m.false_positive_rate(),
    })
}

fn report_json(r: &SolverReport<f64>) -> serde_json::Value {
    json!({
        "converged": r.converged,
        "iterations": r.iterations,
        "objective": r.objective,
        "grad_map_norm": r.grad_map_norm,
        "min_domain_eigenvalue": r.min_domain_eigenvalue,
        "restarts": r.restarts,
        "objective_trace": r.trace,
        "kkt": {
            "tol": r.kkt.tol,
            "lambda": r.kkt.lambda,
            "max_unpenalized": r.kkt.max_unpenalized,
            "passed": r.kkt.passed,
            "active_groups": r.kkt.active_groups(),
            "groups": r.kkt.groups.iter().map(|g| json!({
                "pair": [g.pair.0, g.pair.1],
                "active": g.active,
                "dual_norm": g.dual_norm,
                "alignment": g.alignment,
                "ok": g.ok,
            })).collect::<Vec<_>>(),
        },
    })
}

// -------------------------------------------------------------- simulate

/// Scenario config accepted by `simulate`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioConfig {
    /// Random sparse prior with edges added window by window.
    Nested {
        m: usize,
        n: usize,
        base_edges: usize,
        added_edges: [usize; 2],
        window_lengths: Vec<usize>,
        #[serde(default = "default_grid_size")]
        grid_size: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Ten nodes, degree two, two windows of 1000 samples.
    ArReplica {
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_grid_size")]
        grid_size: usize,
    },
    /// Four-node moving-average prior with two new edges, one window.
    ArmaReplica {
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_length")]
        length: usize,
        #[serde(default = "default_grid_size")]
        grid_size: usize,
    },
}

fn default_grid_size() -> usize {
    DEFAULT_GRID_SIZE
}

fn default_length() -> usize {
    1000
}

/// `scenario.json` in a scenario directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioMeta {
    pub m: usize,
    pub order: usize,
    pub grid_size: usize,
    pub prior_degree: usize,
    pub windows: usize,
    pub seed: u64,
    pub index_base: usize,
}

fn scenario_spec(cfg: &ScenarioConfig, seed: Option<u64>, grid_size: Option<usize>) -> CliResult<(ScenarioSpec<f64>, usize)> {
    let (mut spec, order) = match cfg {
        ScenarioConfig::Nested {
            m,
            n,
            base_edges,
            added_edges,
            window_lengths,
            grid_size,
            seed,
        } => {
            let nested = NestedScenarioConfig {
                m: *m,
                n: *n,
                base_edges: *base_edges,
                added_edges: (added_edges[0], added_edges[1]),
                window_lengths: window_lengths.clone(),
                grid_size: *grid_size,
                seed: *seed,
                ranges: CoefficientRanges::default(),
            };
            (nested_scenario(&nested)?, *n)
        }
        ScenarioConfig::ArReplica { seed, grid_size } => {
            let mut nested = NestedScenarioConfig::ar_replica(*seed);
            nested.grid_size = *grid_size;
            (nested_scenario(&nested)?, nested.n)
        }
        ScenarioConfig::ArmaReplica { seed, length, grid_size } => {
            let mut spec = arma_replica(*seed, *length)?;
            spec.grid_size = *grid_size;
            (spec, 4)
        }
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(l) = grid_size {
        spec.grid_size = l;
    }
    Ok((spec, order))
}

fn simulate(args: &SimulateArgs, manifest: &mut RunManifest) -> CliResult<Option<bool>> {
    let cfg: ScenarioConfig = read_json(&args.config)?;
    manifest.input("config", &args.config);
    let (spec, order) = scenario_spec(&cfg, args.seed, args.grid_size)?;
    spec.validate()?;
    manifest.param("seed", spec.seed);
    manifest.param("grid_size", spec.grid_size);
    manifest.param("order", order);
    let sc = build_scenario(&spec)?;

    let out = &args.out;
    let mut files = Vec::new();
    let meta = ScenarioMeta {
        m: sc.prior_support.dim(),
        order,
        grid_size: spec.grid_size,
        prior_degree: sc.prior_degree,
        windows: sc.windows.len(),
        seed: spec.seed,
        index_base: INDEX_BASE,
    };
    let path = out.join("scenario.json");
    write_json(&path, &meta)?;
    files.push(path);
    let path = out.join("prior.json");
    write_json(&path, &ModelJson::from_model(&spec.prior))?;
    files.push(path);
    let path = out.join("prior_support.json");
    write_support(&path, &sc.prior_support)?;
    files.push(path);
    for (k, ((y, truth), w)) in sc.windows.iter().zip(&sc.truths).zip(&spec.windows).enumerate() {
        let k = k + 1;
        let path = out.join(format!("window_{k}.csv"));
        write_time_series(&path, y)?;
        files.push(path);
        let path = out.join(format!("window_{k}_model.json"));
        write_json(&path, &ModelJson::from_model(&w.model))?;
        files.push(path);
        let path = out.join(format!("truth_{k}.json"));
        write_support(&path, truth)?;
        files.push(path);
    }
    for f in &files {
        manifest.output(out, f);
    }
    Ok(None)
}

// --------------------------------------------------------------- predict

struct Prior {
    inverse: SpectralDensitySamples<f64>,
    support: Support,
}

fn load_prior(args: &PredictArgs, m: usize, manifest: &mut RunManifest) -> CliResult<Prior> {
    let (inverse, declared) = match &args.prior {
        None => {
            let l = args.grid_size.unwrap_or(DEFAULT_GRID_SIZE);
            (SpectralDensitySamples::identity(grid(l)?, m), None)
        }
        Some(path) => {
            manifest.input("prior", path);
            if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                let s = read_samples(path)?;
                if let Some(l) = args.grid_size.filter(|&l| l != s.len()) {
                    return Err(CliError::Input(format!(
                        "{}: {} grid nodes but --grid-size {l}",
                        path.display(),
                        s.len()
                    )));
                }
                (s, None)
            } else {
                let model = read_json::<ModelJson>(path)?.to_model()?;
                let l = args.grid_size.unwrap_or(DEFAULT_GRID_SIZE);
                (model.inverse_spectrum(&grid(l)?)?, Some(model.support))
            }
        }
    };
    if inverse.dim() != m {
        return Err(CliError::Input(format!(
            "prior has dimension {} but the data has {m} columns",
            inverse.dim()
        )));
    }
    let support = match &args.prior_support {
        Some(path) => {
            manifest.input("prior_support", path);
            read_support(path)?
        }
        None => declared.unwrap_or_else(|| Support::diagonal(m)),
    };
    Ok(Prior {
        inverse: inverse.into_positive()?,
        support,
    })
}

fn predict(args: &PredictArgs, manifest: &mut RunManifest) -> CliResult<Option<bool>> {
    let lambda = match (&args.mask, args.lambda) {
        (Some(_), Some(l)) if l != 0.0 => {
            return Err(CliError::Input("--mask solves the hard-constrained problem; use --lambda 0".into()))
        }
        (_, Some(l)) => l,
        (Some(_), None) => 0.0,
        (None, None) => return Err(CliError::Input("--lambda is required without --mask".into())),
    };
    check_lambda_threshold(lambda, args.threshold)?;
    let cfg = args.solver.config()?;
    manifest.param("lambda", lambda);
    manifest.param("threshold", args.threshold);
    manifest.param("order", args.order);
    args.solver.record(manifest);
    if let Some(seed) = args.seed {
        manifest.param("seed", seed);
    }

    manifest.input("data", &args.data);
    let y = read_time_series(&args.data)?;
    let m = y.dim();
    let prior = load_prior(args, m, manifest)?;
    manifest.param("grid_size", prior.inverse.len());
    let lags = sample_covariances(&y, args.order)?;
    let prob = match &args.mask {
        Some(path) => {
            manifest.input("mask", path);
            manifest.param("mode", "link_selection");
            let mask = read_support(path)?;
            RegularizedProblem::link_selection(prior.inverse.clone(), lags.clone(), prior.support.clone(), mask)?
        }
        None => {
            manifest.param("mode", "regularized");
            RegularizedProblem::regularized(prior.inverse.clone(), lags.clone(), prior.support.clone(), lambda)?
        }
    };
    let (q, rep) = solve_regularized(&prob, &cfg, None)?;
    let phi = recover_primal(&q, &prior.inverse)?;
    let inverse = prior.inverse.add_polynomial(&q)?;
    let gamma = partial_coherence(&phi)?;
    let scores = score_matrix(&gamma, &prior.support)?;
    let support = threshold(&scores, args.threshold)?;
    let moment_support = prob.mask().unwrap_or(&prior.support);
    let moments = check_moments(&phi, &lags, moment_support)?;

    let truth = match &args.truth {
        Some(path) => {
            manifest.input("truth", path);
            Some(read_support(path)?)
        }
        None => None,
    };
    let files = write_window(
        &args.out,
        &WindowOutputs {
            q: &q,
            report: &rep,
            phi: Some(&phi),
            inverse: &inverse,
            prior_support: &prior.support,
            scores: &scores,
            support: &support,
            truth: truth.as_ref(),
        },
    )?;
    let path = args.out.join("moments.json");
    write_json(
        &path,
        &json!({
            "per_lag": moments.per_lag,
            "max_on_support": moments.max_on,
            "max_outside_support": moments.max_outside,
        }),
    )?;
    for f in files.iter().chain([&path]) {
        manifest.output(&args.out, f);
    }
    Ok(Some(rep.converged))
}

struct WindowOutputs<'a> {
    q: &'a plp_core::PseudoPoly,
    report: &'a SolverReport<f64>,
    phi: Option<&'a SpectralDensitySamples<f64>>,
    inverse: &'a SpectralDensitySamples<f64>,
    prior_support: &'a Support,
    scores: &'a plp_core::ScoreMatrix<f64>,
    support: &'a Support,
    truth: Option<&'a Support>,
}

/// The files `report` reads, plus coefficients and the solver report.
fn write_window(dir: &Path, w: &WindowOutputs) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut push = |name: &str| {
        let p = dir.join(name);
        files.push(p.clone());
        p
    };
    write_json(&push("q.json"), &PolyJson::from_poly(w.q))?;
    write_json(&push("solver_report.json"), &report_json(w.report))?;
    if let Some(phi) = w.phi {
        write_samples(&push("spectrum.csv"), phi)?;
    }
    write_samples(&push("inverse_spectrum.csv"), w.inverse)?;
    write_support(&push("prior_support.json"), w.prior_support)?;
    write_scores(&push("scores.csv"), w.scores)?;
    write_support(&push("support.json"), w.support)?;
    if let Some(truth) = w.truth {
        write_support(&push("truth.json"), truth)?;
        let m = score_against_truth(w.support, truth, w.prior_support)?;
        write_json(&push("metrics.json"), &metrics_json(&m))?;
    }
    Ok(files)
}

// --------------------------------------------------------------- recurse

fn recurse(args: &RecurseArgs, manifest: &mut RunManifest) -> CliResult<Option<bool>> {
    check_lambda_threshold(args.lambda, args.threshold)?;
    let cfg = args.solver.config()?;
    let dir = &args.scenario;
    manifest.input("scenario", dir);
    let meta: ScenarioMeta = read_json(&dir.join("scenario.json"))?;
    if meta.index_base != INDEX_BASE {
        return Err(CliError::Input("scenario.json: index_base must be 0".into()));
    }
    if meta.windows == 0 {
        return Err(CliError::Input(format!("{}: scenario has no windows", dir.display())));
    }
    let order = args.order.unwrap_or(meta.order);
    let l = args.grid_size.unwrap_or(meta.grid_size);
    manifest.param("lambda", args.lambda);
    manifest.param("threshold", args.threshold);
    manifest.param("order", order);
    manifest.param("grid_size", l);
    args.solver.record(manifest);
    if let Some(seed) = args.seed {
        manifest.param("seed", seed);
    }

    let prior = read_json::<ModelJson>(&dir.join("prior.json"))?.to_model()?;
    let prior_support = read_support(&dir.join("prior_support.json"))?;
    let g = grid(l)?;
    let mut state = RecursiveState::new(prior.inverse_spectrum(&g)?, meta.prior_degree, prior_support, order)?;

    let mut files = Vec::new();
    let mut summary = Vec::new();
    let mut converged = true;
    for k in 1..=meta.windows {
        let y = read_time_series(&dir.join(format!("window_{k}.csv")))?;
        let truth_path = dir.join(format!("truth_{k}.json"));
        let truth = if truth_path.exists() {
            Some(read_support(&truth_path)?)
        } else {
            None
        };
        let before = state.support().clone();
        state = step(state, &y, args.lambda, args.threshold, &cfg)?;
        let rec = state.history().last().expect("one record per window");
        converged &= rec.report.converged;
        let wdir = args.out.join(format!("window_{k}"));
        files.extend(write_window(
            &wdir,
            &WindowOutputs {
                q: &rec.increment,
                report: &rec.report,
                phi: None,
                inverse: state.current_inverse(),
                prior_support: &before,
                scores: &rec.scores,
                support: &rec.support,
                truth: truth.as_ref(),
            },
        )?);
        let metrics = match &truth {
            Some(t) => Some(metrics_json(&score_against_truth(&rec.support, t, &before)?)),
            None => None,
        };
        summary.push(json!({
            "window": k,
            "converged": rec.report.converged,
            "iterations": rec.report.iterations,
            "objective": rec.report.objective,
            "edges": rec.support.edge_count(),
            "new_edges": rec.support.edge_count() - before.edge_count(),
            "metrics": metrics,
        }));
    }
    let path = args.out.join("final_support.json");
    write_support(&path, state.support())?;
    files.push(path);
    let path = args.out.join("summary.json");
    write_json(
        &path,
        &json!({ "windows": summary, "degree_bound": state.degree_bound() }),
    )?;
    files.push(path);
    for f in &files {
        manifest.output(&args.out, f);
    }
    Ok(Some(converged))
}

// ---------------------------------------------------------------- report

fn report(args: &ReportArgs, manifest: &mut RunManifest) -> CliResult<Option<bool>> {
    manifest.input("run", &args.run);
    let mut windows: Vec<(PathBuf, PathBuf)> = Vec::new();
    for k in 1.. {
        let w = args.run.join(format!("window_{k}"));
        if !w.is_dir() {
            break;
        }
        windows.push((w, args.out.join(format!("window_{k}"))));
    }
    if windows.is_empty() {
        windows.push((args.run.clone(), args.out.clone()));
    }
    let mut files = Vec::new();
    for (src, dst) in &windows {
        files.extend(report_window(src, dst)?);
    }
    for f in &files {
        manifest.output(&args.out, f);
    }
    Ok(None)
}

fn report_window(src: &Path, dst: &Path) -> CliResult<Vec<PathBuf>> {
    let prior = read_support(&src.join("prior_support.json"))?;
    let predicted = read_support(&src.join("support.json"))?;
    let scores = read_scores(&src.join("scores.csv"), &prior)?;
    let inverse = read_samples(&src.join("inverse_spectrum.csv"))?;
    let truth_path = src.join("truth.json");
    let truth = if truth_path.exists() {
        Some(read_support(&truth_path)?)
    } else {
        None
    };
    let m = prior.dim();
    let mut files = Vec::new();
    let mut push = |name: &str| {
        let p = dst.join(name);
        files.push(p.clone());
        p
    };

    let dense = scores.to_dense();
    let mut heat = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in &dense {
        heat.write_record(row.iter().map(|s| s.map_or(String::new(), |v| v.to_string())))
            .expect("in-memory write");
    }
    crate::formats::write_atomic(&push("heatmap.csv"), &heat.into_inner().expect("in-memory write"))?;

    let mut curves = csv::Writer::from_writer(Vec::new());
    curves
        .write_record(["node_index", "theta", "i", "j", "abs"])
        .expect("in-memory write");
    for (l, (theta, value)) in inverse.grid().nodes().iter().zip(inverse.values()).enumerate() {
        for i in 0..m {
            for j in i..m {
                curves
                    .write_record([
                        l.to_string(),
                        theta.to_string(),
                        i.to_string(),
                        j.to_string(),
                        value[(i, j)].norm().to_string(),
                    ])
                    .expect("in-memory write");
            }
        }
    }
    crate::formats::write_atomic(&push("inverse_spectrum_abs.csv"), &curves.into_inner().expect("in-memory write"))?;

    let flag = |b: bool| if b { "1" } else { "0" }.to_string();
    let mut grid_csv = csv::Writer::from_writer(Vec::new());
    grid_csv
        .write_record(["i", "j", "prior", "predicted", "truth"])
        .expect("in-memory write");
    for i in 0..m {
        for j in i + 1..m {
            grid_csv
                .write_record([
                    i.to_string(),
                    j.to_string(),
                    flag(prior.contains(i, j)),
                    flag(predicted.contains(i, j)),
                    truth.as_ref().map_or(String::new(), |t| flag(t.contains(i, j))),
                ])
                .expect("in-memory write");
        }
    }
    crate::formats::write_atomic(&push("support_grid.csv"), &grid_csv.into_inner().expect("in-memory write"))?;

    let mut summary = json!({
        "m": m,
        "candidates": scores.len(),
        "prior_edges": prior.edge_count(),
        "predicted_edges": predicted.edge_count(),
        "max_score": scores.max(),
    });
    if let Some(truth) = &truth {
        let roc = roc_curve(&scores, truth)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["threshold", "fpr", "tpr"]).expect("in-memory write");
        for p in &roc {
            w.write_record([p.threshold.to_string(), p.fpr.to_string(), p.tpr.to_string()])
                .expect("in-memory write");
        }
        crate::formats::write_atomic(&push("roc.csv"), &w.into_inner().expect("in-memory write"))?;
        summary["auc"] = json!(roc_auc(&roc));
        summary["metrics"] = metrics_json(&score_against_truth(&predicted, truth, &prior)?);
    }
    write_json(&push("summary.json"), &summary)?;
    Ok(files)
}
