use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use macfield::experiments::{
    export_vectors, generate_synthetic, run_experiment, write_synthetic, ExperimentConfig,
    ExperimentKind, RunOutput,
};
use macfield::Error;

#[derive(Parser)]
#[command(name = "macfield", version, about = "Sparse coding field experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single-pass digit learning with class-field readout.
    Mnist(RunArgs),
    /// Snippet encoding plus leave-one-actor-out classification. Without --data the
    /// synthetic sequences are used.
    Video(RunArgs),
    /// Store every training item once, replay it and compare the traces.
    Sanity(RunArgs),
    /// Per-operation cost of one mac at growing stored-item counts.
    FixedTime(RunArgs),
    /// Write the synthetic snippet set as PBM frames with sidecars.
    GenSynth(RunArgs),
    /// Encode snippets and write their top-level code vectors.
    ExportVectors(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    train_per_class: Option<usize>,
    #[arg(long)]
    test_per_class: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// MNIST IDX image file (optionally gzipped).
    #[arg(long)]
    images: Option<PathBuf>,
    /// MNIST IDX label file (optionally gzipped).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Directory of snippet subdirectories.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Model config (JSON), overriding the one named in --config.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Exit with status 3 if accuracy (or recognition match for sanity) falls below this.
    #[arg(long)]
    min_score: Option<f64>,
}

const EXIT_CONFIG: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_ASSERT: u8 = 3;

fn config_for(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            let compatible = cfg.kind == kind
                || matches!(
                    (cfg.kind, kind),
                    (ExperimentKind::SyntheticSeq, ExperimentKind::Video)
                        | (ExperimentKind::Video, ExperimentKind::SyntheticSeq)
                );
            if !compatible {
                return Err(Error::Config(format!(
                    "{} is a {:?} config, not {kind:?}",
                    path.display(),
                    cfg.kind
                )));
            }
            cfg
        }
        None => ExperimentConfig::new(kind),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.train_per_class {
        cfg.train_per_class = n;
    }
    if let Some(n) = args.test_per_class {
        cfg.test_per_class = n;
    }
    if let Some(p) = &args.images {
        cfg.mnist_images = Some(p.clone());
    }
    if let Some(p) = &args.labels {
        cfg.mnist_labels = Some(p.clone());
    }
    if let Some(p) = &args.model {
        cfg.model = None;
        cfg.model_config = Some(p.clone());
    }
    if let Some(p) = &args.out {
        cfg.out_dir = Some(p.clone());
    }
    if kind == ExperimentKind::Video || kind == ExperimentKind::SyntheticSeq {
        if let Some(p) = &args.data {
            cfg.video_dir = Some(p.clone());
        }
        cfg.kind = if cfg.video_dir.is_some() {
            ExperimentKind::Video
        } else {
            ExperimentKind::SyntheticSeq
        };
    }
    Ok(cfg)
}

fn summarize(out: &RunOutput) {
    let r = &out.report;
    let mut parts = vec![format!("{:?}", r.kind)];
    if let Some(a) = r.accuracy {
        parts.push(format!("accuracy {:.4} ({}/{})", a, r.correct, r.total));
    }
    if let Some(m) = r.recognition_match {
        parts.push(format!("recognition match {m:.4}"));
    }
    if let Some(e) = r.exact_recall_rate {
        parts.push(format!("exact recall {e:.4}"));
    }
    if let Some(len) = r.snippet_vector_len {
        parts.push(format!("vector length {len}"));
    }
    if let Some(c) = r.ops_constant {
        parts.push(format!("ops constant {c}"));
    }
    if let Some(w) = r.wall_time_ratio {
        parts.push(format!("wall-time ratio {w:.3}"));
    }
    parts.push(format!(
        "train {:.2}s test {:.2}s",
        r.train_seconds, r.test_seconds
    ));
    println!("{}", parts.join(", "));
}

fn run(command: Command) -> Result<u8, Error> {
    let (kind, args) = match &command {
        Command::Mnist(a) => (ExperimentKind::Mnist, a),
        Command::Video(a) | Command::GenSynth(a) | Command::ExportVectors(a) => {
            (ExperimentKind::Video, a)
        }
        Command::Sanity(a) => (ExperimentKind::Sanity, a),
        Command::FixedTime(a) => (ExperimentKind::FixedTime, a),
    };
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let cfg = config_for(kind, args)?;
    let out_dir = cfg.out_dir.clone();

    if let Command::GenSynth(_) = command {
        let dir = out_dir.ok_or_else(|| Error::Config("gen-synth needs --out".into()))?;
        let snippets = generate_synthetic(&cfg.synth, cfg.seed)?;
        write_synthetic(&dir, &snippets)?;
        println!("wrote {} snippets to {}", snippets.len(), dir.display());
        return Ok(0);
    }

    let out = match command {
        Command::ExportVectors(_) => {
            cfg.validate()?;
            export_vectors(&cfg)?
        }
        _ => run_experiment(&cfg)?,
    };
    if let Some(dir) = &out_dir {
        out.write(dir)?;
    }
    summarize(&out);

    let r = &out.report;
    if r.ops_constant == Some(false) {
        eprintln!("primitive-op counts changed with the number of stored items");
        return Ok(EXIT_ASSERT);
    }
    if let Some(min) = args.min_score {
        let score = r.accuracy.or(r.recognition_match).unwrap_or(0.0);
        if score < min {
            eprintln!("score {score:.4} is below the required {min:.4}");
            return Ok(EXIT_ASSERT);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_DATA
            })
        }
    }
}
