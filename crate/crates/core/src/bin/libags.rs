use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use libags::bench::{self, BenchConfig, GridBounds, Method};
use libags::data::{self, CandidatePool, LabeledDataset, TwoMoonsSpec};
use libags::model::ClassProbabilities;
use libags::pipeline::{self, ExternalProba, PipelineConfig, RunMetadata, SelectionReport};
use libags::{Error, LogisticModel, Result};

#[derive(Debug, Parser)]
#[command(name = "libags", version, about = "Boundary-gap selection of synthetic training candidates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select candidates and write the selection report.
    Select(SelectArgs),
    /// Write the per-candidate score table without keeping the report.
    Score(ScoreArgs),
    /// Run the two-moons benchmark.
    Bench(BenchArgs),
    /// Write decision-boundary grids and the selection for one two-moons run.
    DemoTwoMoons(DemoArgs),
    /// Evaluate a saved classifier on a regular 2-D grid.
    ExportGrid(GridArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Real data CSV: feature columns then `label`.
    #[arg(long)]
    real: PathBuf,
    /// Candidate CSV: feature columns, `proposed_label`, optional `source_id`.
    #[arg(long)]
    candidates: PathBuf,
    /// Pipeline configuration JSON; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 2)]
    n_classes: usize,
    /// Class probabilities for the real rows from an external model.
    #[arg(long, requires = "proba_cand")]
    proba_real: Option<PathBuf>,
    /// Class probabilities for the candidate rows from an external model.
    #[arg(long, requires = "proba_real")]
    proba_cand: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Report JSON path.
    #[arg(long)]
    out: PathBuf,
    /// Leave out the timestamp and timing metadata.
    #[arg(long)]
    reproducible: bool,
    /// Also train the final classifier and save it as JSON.
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Per-step gains CSV.
    #[arg(long)]
    gains_out: Option<PathBuf>,
    /// Per-candidate scores CSV.
    #[arg(long)]
    scores_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Scores CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',', default_value = "erm,random,noise,uncertainty_only,libags")]
    methods: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    /// Output directory for results.csv, per_seed.csv and summary.txt.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Grid points per axis.
    #[arg(long, default_value_t = 101)]
    resolution: usize,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Classifier JSON written by `select --model-out`.
    #[arg(long)]
    model: PathBuf,
    /// Configuration the model was trained with (fixes the feature map).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 101)]
    resolution: usize,
    #[arg(long, allow_negative_numbers = true, default_value_t = GridBounds::default().x1_min)]
    x1_min: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = GridBounds::default().x1_max)]
    x1_max: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = GridBounds::default().x2_min)]
    x2_min: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = GridBounds::default().x2_max)]
    x2_max: f64,
    /// Grid CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Select(args) => cmd_select(args),
        Command::Score(args) => cmd_score(args),
        Command::Bench(args) => cmd_bench(args),
        Command::DemoTwoMoons(args) => cmd_demo(args),
        Command::ExportGrid(args) => cmd_export_grid(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<PipelineConfig> {
    let mut config = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate()?;
    Ok(config)
}

struct Inputs {
    real: LabeledDataset,
    candidates: CandidatePool,
    config: PipelineConfig,
    proba: Option<(ClassProbabilities, ClassProbabilities)>,
}

impl InputArgs {
    fn load(&self) -> Result<Inputs> {
        let config = load_config(self.config.as_deref(), self.seed)?;
        let real = data::load_labeled_csv(&self.real, self.n_classes)?;
        let candidates = data::load_candidate_csv(&self.candidates, self.n_classes)?;
        let proba = match (&self.proba_real, &self.proba_cand) {
            (Some(r), Some(c)) => Some((ClassProbabilities::load_csv(r)?, ClassProbabilities::load_csv(c)?)),
            _ => None,
        };
        Ok(Inputs {
            real,
            candidates,
            config,
            proba,
        })
    }
}

impl Inputs {
    fn run(&self) -> Result<(SelectionReport, Vec<pipeline::StageTiming>)> {
        let external = self.proba.as_ref().map(|(real, candidates)| ExternalProba { real, candidates });
        pipeline::run_selection_timed(&self.real, &self.candidates, &self.config, external)
    }
}

fn write(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn cmd_select(args: SelectArgs) -> Result<()> {
    let inputs = args.input.load()?;
    let (mut report, timings) = inputs.run()?;
    if !args.reproducible {
        let created_unix_seconds = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        report.metadata = Some(RunMetadata {
            created_unix_seconds,
            timings,
        });
    }
    report.write_json(&args.out)?;
    if let Some(path) = &args.gains_out {
        write(path, &report.gains_csv())?;
    }
    if let Some(path) = &args.scores_out {
        write(path, &report.scores_csv(&inputs.candidates.source_ids))?;
    }
    if let Some(path) = &args.model_out {
        pipeline::train_final(&inputs.real, &report, &inputs.candidates, &inputs.config)?.save_json(path)?;
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let lambda = report.lambda.map_or_else(|| "none".to_string(), |l| format!("{l:.6e}"));
    println!(
        "m_hat={} eta={:.6e} lambda={lambda} stop={:?}",
        report.m_hat, report.eta, report.stop_reason
    );
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let inputs = args.input.load()?;
    let (report, _) = inputs.run()?;
    write(&args.out, &report.scores_csv(&inputs.candidates.source_ids))?;
    println!("scored {} candidates", report.n_candidates);
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let methods = args
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<Result<Vec<_>>>()?;
    if methods.is_empty() || args.seeds.is_empty() {
        return Err(Error::Validation("need at least one method and one seed".into()));
    }
    let results = bench::run_bench(&methods, &args.seeds, &BenchConfig::default())?;
    create_dir(&args.out)?;
    let summary = bench::summary_table(&results);
    write(&args.out.join("results.csv"), &bench::results_csv(&results))?;
    write(&args.out.join("per_seed.csv"), &bench::per_seed_csv(&results))?;
    write(&args.out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn cmd_demo(args: DemoArgs) -> Result<()> {
    let defaults = BenchConfig::default();
    let moons = data::generate_two_moons(&TwoMoonsSpec {
        seed: args.seed,
        ..defaults.moons
    })?;
    let config = PipelineConfig {
        seed: args.seed,
        ..defaults.pipeline
    };
    let encoder = config.encoder(moons.train.features.n_cols())?;
    let report = pipeline::run_selection(&moons.train, &moons.candidates, &config, None)?;
    let erm = pipeline::train_erm(&moons.train, &config)?;
    let fin = pipeline::train_final(&moons.train, &report, &moons.candidates, &config)?;

    create_dir(&args.out)?;
    let bounds = GridBounds::default();
    bench::export_boundary_grid(&erm, encoder.as_ref(), bounds, args.resolution, args.out.join("erm_grid.csv"))?;
    bench::export_boundary_grid(&fin, encoder.as_ref(), bounds, args.resolution, args.out.join("libags_grid.csv"))?;
    let selected = CandidatePool::new(
        moons.candidates.features.select_rows(&report.selected)?,
        report
            .selected
            .iter()
            .map(|&j| moons.candidates.proposed_labels[j])
            .collect(),
        Some(report.selected_source_ids.clone()),
        report.n_classes,
    );
    match selected {
        Ok(pool) => data::write_candidate_csv(args.out.join("selected.csv"), &pool)?,
        // An empty selection still gets a file with just the header.
        Err(_) => write(&args.out.join("selected.csv"), "x0,x1,proposed_label,source_id\n")?,
    }
    report.write_json(args.out.join("report.json"))?;
    println!(
        "m_hat={} eta={:.6e} written to {}",
        report.m_hat,
        report.eta,
        args.out.display()
    );
    Ok(())
}

fn cmd_export_grid(args: GridArgs) -> Result<()> {
    let config = load_config(args.config.as_deref(), args.seed)?;
    let model = LogisticModel::load_json(&args.model)?;
    let encoder = config.encoder(2)?;
    let expected = encoder.as_ref().map_or(2, |e| e.d_out());
    if model.n_features() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: model.n_features(),
            context: "model input width for a 2-D grid under this configuration",
        });
    }
    let bounds = GridBounds {
        x1_min: args.x1_min,
        x1_max: args.x1_max,
        x2_min: args.x2_min,
        x2_max: args.x2_max,
    };
    if !(bounds.x1_min < bounds.x1_max && bounds.x2_min < bounds.x2_max) {
        return Err(Error::Validation("grid bounds must satisfy min < max".into()));
    }
    bench::export_boundary_grid(&model, encoder.as_ref(), bounds, args.resolution, &args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}
