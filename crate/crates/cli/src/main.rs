use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use piano_fingering::augment::{collect_stats, generate, GenerateConfig};
use piano_fingering::encoding::{compute_pd, note_combinations, InputMode, PdVocabulary};
use piano_fingering::harness::{
    checkpoint_file_name, compare_reports, cross_validate, evaluate_checkpoints, Checkpoint,
    Dataset, DecodeOptions, RunConfig,
};
use piano_fingering::pig::{read_pig_file, write_pig, Hand};
use piano_fingering::prior::{check_tables, render_tables};
use piano_fingering::Error;

#[derive(Parser)]
#[command(name = "fingering", version, about = "Piano fingering estimation")]
struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus statistics and per-hand vocabularies.
    Prep {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Directory for the vocabulary dumps.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validated training; writes one checkpoint per fold.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Train only these folds (repeatable).
        #[arg(long = "fold")]
        only: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict fingers for a PIG file, overwriting any existing fingers.
    Annotate {
        #[arg(long)]
        checkpoint: PathBuf,
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        ablation: Ablation,
    },
    /// Score checkpoint directories on their held-out folds.
    Evaluate {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(required = true)]
        checkpoint_dirs: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        ablation: Ablation,
    },
    /// Write synthetic fingered sequences sampled from corpus statistics.
    Augment {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        min_len: Option<usize>,
        #[arg(long)]
        max_len: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Feasibility table utilities.
    Rules {
        #[command(subcommand)]
        action: RulesAction,
    },
}

#[derive(Subcommand)]
enum RulesAction {
    /// Print the four tables; fails if the closed form disagrees with the grid.
    Check,
}

#[derive(Args)]
struct Ablation {
    #[arg(long)]
    no_prior: bool,
    #[arg(long)]
    no_transition: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    hidden_size: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    no_augment: bool,
    /// Feed MIDI numbers instead of pitch differences.
    #[arg(long)]
    raw_note: bool,
    #[command(flatten)]
    ablation: Ablation,
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn base_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn apply_ablation(cfg: &mut RunConfig, a: &Ablation) {
    if a.no_prior {
        cfg.use_prior = false;
    }
    if a.no_transition {
        cfg.use_transition = false;
    }
}

fn dataset_path(flag: &Option<PathBuf>, cfg: &RunConfig) -> CliResult<PathBuf> {
    flag.clone()
        .or_else(|| cfg.dataset.clone())
        .ok_or_else(|| Failure::Usage("no dataset: pass --dataset or set it in the config".into()))
}

fn write_file(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text).map_err(|e| {
        Failure::Run(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn create_dir(path: &Path) -> CliResult {
    std::fs::create_dir_all(path).map_err(|e| {
        Failure::Run(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn prep(cfg: &RunConfig, dataset: &Option<PathBuf>, out: &Option<PathBuf>) -> CliResult {
    let ds = Dataset::load_dir(&dataset_path(dataset, cfg)?)?;
    println!("annotations {}", ds.pieces.len());
    println!("scores      {}", ds.score_ids().len());
    if let Some(dir) = out {
        create_dir(dir)?;
    }
    for hand in Hand::BOTH {
        let mut tokens = Vec::new();
        let mut notes = 0;
        for p in &ds.pieces {
            let h = p.hand(hand);
            if !h.is_empty() {
                notes += h.len();
                tokens.push(compute_pd(h)?.iter().map(|t| t.d).collect::<Vec<_>>());
            }
        }
        let vocab = PdVocabulary::build(tokens.iter().map(Vec::as_slice));
        let combos = note_combinations(ds.pieces.iter().map(|p| p.hand(hand)));
        println!(
            "{:<5} notes {notes}  pitch differences {}  note combinations {}",
            hand.name(),
            vocab.tokens().len(),
            combos.len()
        );
        if let Some(dir) = out {
            write_file(&dir.join(format!("{}.vocab", hand.name())), &vocab.dump())?;
        }
    }
    Ok(())
}

fn train(cfg: &RunConfig, only: &[usize], out: &Option<PathBuf>) -> CliResult {
    let dir = out
        .clone()
        .or_else(|| cfg.checkpoint_dir.clone())
        .ok_or_else(|| Failure::Usage("no output directory: pass --out".into()))?;
    let ds = Dataset::load_dir(&dataset_path(&None, cfg)?)?;
    let only = (!only.is_empty()).then_some(only);
    let run = cross_validate(&ds, cfg, "model", only)?;
    create_dir(&dir)?;
    for fold in &run.folds {
        let ck = Checkpoint::new(
            cfg.clone(),
            fold.fold,
            fold.test_scores.clone(),
            fold.model.clone(),
        );
        ck.save(&dir.join(checkpoint_file_name(fold.fold)))?;
        let logs = serde_json::to_string_pretty(&fold.logs).expect("logs serialize");
        write_file(&dir.join(format!("fold-{:02}.log.json", fold.fold)), &logs)?;
    }
    let report_dir = cfg.report_dir.clone().unwrap_or_else(|| dir.clone());
    create_dir(&report_dir)?;
    write_file(&report_dir.join("report.json"), &run.report.to_json())?;
    write_file(&report_dir.join("report.txt"), &run.report.to_table())?;
    print!("{}", run.report.to_table());
    Ok(())
}

fn annotate(checkpoint: &Path, input: &Path, output: &Option<PathBuf>, a: &Ablation) -> CliResult {
    let ck = Checkpoint::load(checkpoint)?;
    let opts = DecodeOptions {
        use_transition: ck.config.use_transition && !a.no_transition,
        use_prior: ck.config.use_prior && !a.no_prior,
    };
    let piece = read_pig_file(input)?;
    let text = write_pig(&ck.model.annotate(&piece, opts)?);
    match output {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_checkpoints(dir: &Path) -> CliResult<Vec<Checkpoint>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("fold-") && n.ends_with(".json") && !n.ends_with(".log.json"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::Usage(format!("no checkpoints in {}", dir.display())));
    }
    Ok(paths
        .iter()
        .map(|p| Checkpoint::load(p))
        .collect::<Result<_, _>>()?)
}

fn evaluate(
    cfg: &RunConfig,
    dataset: &Option<PathBuf>,
    dirs: &[PathBuf],
    json: bool,
    a: &Ablation,
) -> CliResult {
    let ds = Dataset::load_dir(&dataset_path(dataset, cfg)?)?;
    let mut reports = Vec::new();
    for dir in dirs {
        let cks = load_checkpoints(dir)?;
        let first = &cks[0].config;
        let opts = DecodeOptions {
            use_transition: first.use_transition && !a.no_transition,
            use_prior: first.use_prior && !a.no_prior,
        };
        let label = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        reports.push(evaluate_checkpoints(&label, &ds, &cks, opts)?);
    }
    for r in &reports {
        if json {
            println!("{}", r.to_json());
        } else {
            println!("{}", r.to_table());
        }
    }
    if reports.len() > 1 {
        print!("{}", compare_reports(&reports));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn augment(
    cfg: &RunConfig,
    dataset: &Option<PathBuf>,
    out: &Path,
    count: Option<usize>,
    min_len: Option<usize>,
    max_len: Option<usize>,
    threshold: Option<f64>,
) -> CliResult {
    let ds = Dataset::load_dir(&dataset_path(dataset, cfg)?)?;
    let stats = collect_stats(&ds.pieces, threshold.unwrap_or(cfg.augment_threshold))?;
    let gen = GenerateConfig {
        count: count.unwrap_or(cfg.augment_count),
        min_len: min_len.unwrap_or(cfg.augment_min_len),
        max_len: max_len.unwrap_or(cfg.augment_max_len),
        seed: cfg.seed,
    };
    let seqs = generate(&stats, &gen)?;
    create_dir(out)?;
    for s in &seqs {
        write_file(&out.join(format!("{}.txt", s.piece.score_id)), &write_pig(&s.piece))?;
    }
    write_file(&out.join("stats.txt"), &stats.dump())?;
    info!("wrote {} sequences to {}", seqs.len(), out.display());
    Ok(())
}

fn rules_check() -> CliResult<bool> {
    print!("{}", render_tables());
    let mismatches = check_tables();
    for m in &mismatches {
        println!(
            "MISMATCH {} hand dir {:+} {} -> {}",
            m.hand.name(),
            m.direction,
            m.f_prev,
            m.f_next
        );
    }
    println!("{} / 100 cases agree", 100 - mismatches.len());
    Ok(mismatches.is_empty())
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    let mut cfg = base_config(&cli)?;
    match &cli.command {
        Command::Prep { dataset, out } => prep(&cfg, dataset, out)?,
        Command::Train { run, only, out } => {
            if let Some(d) = &run.dataset {
                cfg.dataset = Some(d.clone());
            }
            if let Some(v) = run.folds {
                cfg.folds = v;
            }
            if let Some(v) = run.epochs {
                cfg.epochs = v;
            }
            if let Some(v) = run.hidden_size {
                cfg.hidden_size = v;
            }
            if let Some(v) = run.depth {
                cfg.depth = v;
            }
            if let Some(v) = run.lr {
                cfg.lr = v;
            }
            if run.no_augment {
                cfg.augment = false;
            }
            if run.raw_note {
                cfg.input_mode = InputMode::RawNote;
            }
            apply_ablation(&mut cfg, &run.ablation);
            cfg.validate()?;
            train(&cfg, only, out)?;
        }
        Command::Annotate {
            checkpoint,
            input,
            output,
            ablation,
        } => annotate(checkpoint, input, output, ablation)?,
        Command::Evaluate {
            dataset,
            checkpoint_dirs,
            json,
            ablation,
        } => evaluate(&cfg, dataset, checkpoint_dirs, *json, ablation)?,
        Command::Augment {
            dataset,
            out,
            count,
            min_len,
            max_len,
            threshold,
        } => augment(&cfg, dataset, out, *count, *min_len, *max_len, *threshold)?,
        Command::Rules {
            action: RulesAction::Check,
        } => {
            if !rules_check()? {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            if e.is_numeric_error() {
                ExitCode::from(3)
            } else if e.is_data_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
