//! `pauc-push` command-line front end.
//!
//! Every subcommand resolves its flags into a [`RunConfig`], writes it to
//! `config_echo.json` and then executes it. `--config <echo>` replays a run.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pauc_push::data::{load_csv, Dataset};
use pauc_push::glm::{fit, predict, FitConfig, ModelFile, Penalty};
use pauc_push::roc::{pauc_estimate, roc_curve, PaucSpec, TiePolicy};
use pauc_push::selection::{
    baseline_lasso, evaluate_external, select_weight_and_lambda, LambdaGrid, Objective, SearchSpec,
    DEFAULT_WEIGHTS,
};
use pauc_push::simulation::{run_benchmark, SimDesign};
use pauc_push::{json, par, Error};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(
    name = "pauc-push",
    version,
    about = "Partial-AUC driven logistic push regression"
)]
struct Cli {
    /// Replay a run from a `config_echo.json` written by an earlier run.
    #[arg(long, global = true, value_name = "ECHO")]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for CV and simulation. Results do not depend on it.
    #[arg(long, global = true, env = "PAUC_PUSH_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit one weighted, penalized logistic model.
    Fit(FitArgs),
    /// Choose the weight and penalty by nested cross-validation.
    Cv(CvArgs),
    /// Score an external data set with a saved model.
    Evaluate(EvaluateArgs),
    /// Empirical ROC curve of a marker column or a saved model.
    Roc(RocArgs),
    /// Run the simulation benchmark.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Name of the label column.
    #[arg(long, default_value = "label")]
    label: String,
    /// Label value marking diseased subjects.
    #[arg(long, default_value = "1")]
    positive: String,
}

#[derive(Args, Debug)]
struct PaucArgs {
    /// False positive rate bound.
    #[arg(long, default_value_t = 0.2)]
    t: f64,
    #[arg(long, default_value_t = TiePolicy::HalfCredit)]
    tie_policy: TiePolicy,
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Coordinate-descent sweep budget per fit.
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    pauc: PaucArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Weight on non-diseased subjects.
    #[arg(long, default_value_t = 1.0)]
    w: f64,
    /// l1 strength.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// l2 strength.
    #[arg(long, default_value_t = 0.0)]
    lambda2: f64,
    /// Fit on the raw marker scale.
    #[arg(long)]
    no_standardize: bool,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Candidate weights, ascending.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_WEIGHTS)]
    weights: Vec<f64>,
    /// Length of the automatic penalty grid.
    #[arg(long, default_value_t = 100)]
    n_lambda: usize,
    /// Smallest automatic penalty as a fraction of lambda_max.
    #[arg(long, default_value_t = 1e-3)]
    min_ratio: f64,
    /// Fixed penalty grid, strictly descending. Overrides the automatic grid.
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5)]
    outer_k: usize,
    #[arg(long, default_value_t = 5)]
    inner_k: usize,
    /// Criterion for the inner penalty search.
    #[arg(long, default_value_t = Objective::Pauc)]
    objective: Objective,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Method {
    /// Nested CV over weight and penalty.
    Push,
    /// Unweighted lasso tuned on deviance.
    Lasso,
}

#[derive(Args, Debug)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    pauc: PaucArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = Method::Push)]
    method: Method,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    pauc: PaucArgs,
    /// Saved `model.json`.
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["score", "model"])))]
struct RocArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    pauc: PaucArgs,
    /// Marker column used directly as the score.
    #[arg(long)]
    score: Option<String>,
    /// Saved `model.json` whose linear score is used.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Design JSON. Inline flags override its fields.
    #[arg(long)]
    design: Option<PathBuf>,
    #[arg(long)]
    n_diseased: Option<usize>,
    #[arg(long)]
    n_non_diseased: Option<usize>,
    #[arg(long)]
    n_score_a: Option<usize>,
    #[arg(long)]
    n_score_b: Option<usize>,
    #[arg(long)]
    n_noise: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Shuffle labels in every replicate (null benchmark).
    #[arg(long)]
    null_labels: bool,
    #[command(flatten)]
    pauc: PaucArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DataSource {
    path: PathBuf,
    label_column: String,
    positive_label: String,
}

impl DataSource {
    fn load(&self) -> pauc_push::Result<Dataset> {
        load_csv(&self.path, &self.label_column, &self.positive_label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ScoreSource {
    Column(String),
    Model(PathBuf),
}

/// Fully resolved parameters of one run. This is what `config_echo.json`
/// holds and what `--config` reads back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
enum RunConfig {
    Fit {
        input: DataSource,
        fit: FitConfig,
        pauc: PaucSpec,
    },
    Cv {
        input: DataSource,
        method: Method,
        search: SearchSpec,
    },
    Evaluate {
        input: DataSource,
        model: PathBuf,
        pauc: PaucSpec,
    },
    Roc {
        input: DataSource,
        score: ScoreSource,
        pauc: PaucSpec,
    },
    Simulate {
        design: SimDesign,
        search: SearchSpec,
    },
}

impl DataArgs {
    fn resolve(self) -> DataSource {
        DataSource {
            path: self.input,
            label_column: self.label,
            positive_label: self.positive,
        }
    }
}

impl PaucArgs {
    fn resolve(&self) -> pauc_push::Result<PaucSpec> {
        PaucSpec::new(self.t, self.tie_policy)
    }
}

fn search_spec(
    grid: GridArgs,
    pauc: &PaucArgs,
    solver: &SolverArgs,
) -> pauc_push::Result<SearchSpec> {
    let spec = SearchSpec {
        weight_grid: grid.weights,
        lambda_grid: match grid.lambdas {
            Some(lambdas) => LambdaGrid::Fixed { lambdas },
            None => LambdaGrid::Auto {
                n_lambda: grid.n_lambda,
                min_ratio: grid.min_ratio,
            },
        },
        outer_k: grid.outer_k,
        inner_k: grid.inner_k,
        pauc: pauc.resolve()?,
        seed: grid.seed,
        objective: grid.objective,
        tol: solver.tol,
        max_iters: solver.max_iters,
    };
    spec.validate()?;
    Ok(spec)
}

fn resolve(command: Command) -> pauc_push::Result<RunConfig> {
    Ok(match command {
        Command::Fit(a) => {
            let penalty = match (a.lambda, a.lambda2) {
                (l1, l2) if l1 > 0.0 && l2 > 0.0 => Penalty::ElasticNet {
                    lambda1: l1,
                    lambda2: l2,
                },
                (l1, _) if l1 > 0.0 => Penalty::Lasso { lambda1: l1 },
                (_, l2) if l2 > 0.0 => Penalty::Ridge { lambda2: l2 },
                _ => Penalty::None,
            };
            let fit = FitConfig {
                w: a.w,
                penalty,
                max_iters: a.solver.max_iters,
                tol: a.solver.tol,
                standardize: !a.no_standardize,
            };
            if a.lambda < 0.0 || a.lambda2 < 0.0 {
                return Err(Error::InvalidArgument(
                    "penalty strengths must be >= 0".into(),
                ));
            }
            fit.validate()?;
            RunConfig::Fit {
                pauc: a.pauc.resolve()?,
                input: a.data.resolve(),
                fit,
            }
        }
        Command::Cv(a) => RunConfig::Cv {
            search: search_spec(a.grid, &a.pauc, &a.solver)?,
            input: a.data.resolve(),
            method: a.method,
        },
        Command::Evaluate(a) => RunConfig::Evaluate {
            pauc: a.pauc.resolve()?,
            input: a.data.resolve(),
            model: a.model,
        },
        Command::Roc(a) => RunConfig::Roc {
            pauc: a.pauc.resolve()?,
            input: a.data.resolve(),
            score: match (a.score, a.model) {
                (Some(c), _) => ScoreSource::Column(c),
                (None, Some(m)) => ScoreSource::Model(m),
                (None, None) => unreachable!("clap requires one source"),
            },
        },
        Command::Simulate(a) => {
            let mut design = match &a.design {
                Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
                None => SimDesign::default(),
            };
            let overrides = [
                (a.n_diseased, &mut design.n_diseased),
                (a.n_non_diseased, &mut design.n_non_diseased),
                (a.n_score_a, &mut design.n_score_a),
                (a.n_score_b, &mut design.n_score_b),
                (a.n_noise, &mut design.n_noise),
                (a.replicates, &mut design.replicates),
            ];
            for (flag, field) in overrides {
                if let Some(v) = flag {
                    *field = v;
                }
            }
            design.permute_labels |= a.null_labels;
            let search = search_spec(a.grid, &a.pauc, &a.solver)?;
            // One seed drives both data generation and fold assignment.
            design.seed = search.seed;
            design.validate()?;
            RunConfig::Simulate { design, search }
        }
    })
}

#[derive(Serialize)]
struct PaucSummary {
    pauc: f64,
    auc: f64,
    t: f64,
    threshold: f64,
    tie_policy: TiePolicy,
    n_diseased: usize,
    n_non_diseased: usize,
}

fn summarize(scores: &[f64], data: &Dataset, spec: &PaucSpec) -> pauc_push::Result<PaucSummary> {
    let p = pauc_estimate(scores, data.labels(), spec)?;
    Ok(PaucSummary {
        pauc: p.value,
        auc: roc_curve(scores, data.labels())?.auc,
        t: p.t,
        threshold: p.threshold,
        tie_policy: p.tie_policy,
        n_diseased: data.n_diseased(),
        n_non_diseased: data.n_non_diseased(),
    })
}

#[derive(Serialize)]
struct FitSummary {
    training: PaucSummary,
    converged: bool,
    iterations: usize,
    sweeps: usize,
    final_loss: f64,
    selected_markers: Vec<String>,
}

fn write(dir: &Path, name: &str, contents: &str) -> pauc_push::Result<()> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn model_scores(model: &ModelFile, data: &Dataset) -> pauc_push::Result<(Dataset, Vec<f64>)> {
    let aligned = data.align_columns(&model.marker_names())?;
    let s = predict(&model.model(), aligned.markers())?.to_vec();
    Ok((aligned, s))
}

fn execute(run: &RunConfig, out: &Path) -> pauc_push::Result<()> {
    match run {
        RunConfig::Fit {
            input,
            fit: config,
            pauc,
        } => {
            let data = input.load()?;
            let report = fit(&data, config)?;
            if !report.converged {
                eprintln!(
                    "warning: fit did not converge within {} sweeps",
                    config.max_iters
                );
            }
            let model = ModelFile::from_report(&report, data.marker_names(), config)?;
            let scores = predict(&report.model, data.markers())?.to_vec();
            let summary = FitSummary {
                training: summarize(&scores, &data, pauc)?,
                converged: report.converged,
                iterations: report.iterations,
                sweeps: report.sweeps,
                final_loss: report.final_loss,
                selected_markers: report
                    .active_set
                    .iter()
                    .map(|&j| data.marker_names()[j].clone())
                    .collect(),
            };
            write(out, "model.json", &model.to_json()?)?;
            write(out, "fit_summary.json", &json::to_string(&summary)?)?;
        }
        RunConfig::Cv {
            input,
            method,
            search,
        } => {
            let data = input.load()?;
            let report = match method {
                Method::Push => select_weight_and_lambda(&data, search)?,
                Method::Lasso => baseline_lasso(&data, search)?,
            };
            if !report.final_converged {
                eprintln!(
                    "warning: final refit did not converge within {} sweeps",
                    search.max_iters
                );
            }
            write(out, "cv_report.json", &json::to_string(&report)?)?;
            write(out, "cv_scores.csv", &report.scores_csv()?)?;
            write(out, "model.json", &report.final_model.to_json()?)?;
        }
        RunConfig::Evaluate { input, model, pauc } => {
            let data = input.load()?;
            let model = ModelFile::read(model)?;
            let (aligned, scores) = model_scores(&model, &data)?;
            debug_assert_eq!(
                evaluate_external(&model, &data, pauc)?.value,
                pauc_estimate(&scores, aligned.labels(), pauc)?.value
            );
            write(
                out,
                "evaluation.json",
                &json::to_string(&summarize(&scores, &aligned, pauc)?)?,
            )?;
        }
        RunConfig::Roc { input, score, pauc } => {
            let data = input.load()?;
            let (data, scores) = match score {
                ScoreSource::Column(name) => {
                    let data = data.align_columns(std::slice::from_ref(name))?;
                    let s = data.column(0).to_vec();
                    (data, s)
                }
                ScoreSource::Model(path) => model_scores(&ModelFile::read(path)?, &data)?,
            };
            write(
                out,
                "roc.csv",
                &roc_curve(&scores, data.labels())?.to_csv()?,
            )?;
            write(
                out,
                "roc_summary.json",
                &json::to_string(&summarize(&scores, &data, pauc)?)?,
            )?;
        }
        RunConfig::Simulate { design, search } => {
            let report = run_benchmark(design, search)?;
            write(out, "bench_report.json", &json::to_string(&report)?)?;
            write(out, "bench_replicates.csv", &report.replicates_csv()?)?;
            write(out, "selection_rates.csv", &report.selection_rates_csv()?)?;
            write(
                out,
                "design_audit.json",
                &json::to_string(&design.audit(search.pauc.t))?,
            )?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> pauc_push::Result<()> {
    let run = match (cli.config, cli.command) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidArgument(
                "--config replays a run and takes no subcommand".into(),
            ));
        }
        (Some(path), None) => {
            let run: RunConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
            // Re-validate whatever was read back.
            match &run {
                RunConfig::Fit { fit, .. } => fit.validate()?,
                RunConfig::Cv { search, .. } => search.validate()?,
                RunConfig::Simulate { design, search } => {
                    design.validate()?;
                    search.validate()?;
                }
                RunConfig::Evaluate { .. } | RunConfig::Roc { .. } => {}
            }
            run
        }
        (None, Some(command)) => resolve(command)?,
        (None, None) => {
            return Err(Error::InvalidArgument(
                "a subcommand or --config is required".into(),
            ))
        }
    };
    let out = cli
        .out
        .ok_or_else(|| Error::InvalidArgument("--out is required".into()))?;
    if cli.threads == Some(0) {
        return Err(Error::InvalidArgument(
            "--threads must be at least 1".into(),
        ));
    }
    fs::create_dir_all(&out)?;
    write(&out, "config_echo.json", &json::to_string(&run)?)?;
    par::with_threads(cli.threads, || execute(&run, &out))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_internal() { 2 } else { 1 })
        }
    }
}
