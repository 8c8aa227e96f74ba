//! Command-line interface: dataset generation, program evaluation,
//! distribution statistics, training, and curriculum comparison.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use crate::curriculum::{CurriculumConfig, Strategy};
use crate::dataset::{write_records, DatasetRecord};
use crate::encode::Transforms;
use crate::interp;
use crate::progsynth::{self, GenConfig, Permutation, Split};
use crate::stats;
use crate::taskgen::Task;
use crate::train::{self, ModelShape, TrainConfig};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PROGEVAL_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "progeval", version, about = "Synthetic program evaluation benchmark: generator, oracle interpreter, and curriculum-trained character LSTM")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a line-delimited dataset of task samples.
    Gen(GenArgs),
    /// Evaluate programs (one per line, `\n`-escaped) and print their targets.
    Eval(EvalArgs),
    /// Print output-distribution statistics of generated programs.
    Stats(StatsArgs),
    /// Train the LSTM on a task under a curriculum strategy.
    Train(TrainArgs),
    /// Run several curriculum strategies with shared seeds and merge the logs.
    Compare(CompareArgs),
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Task to sample: program | addition | memorize.
    #[arg(long, default_value = "program")]
    task: Task,
    /// Literal digit count (program) or payload length (addition, memorize).
    #[arg(long, default_value_t = 4)]
    length: u32,
    /// Number of composed operations; program task only.
    #[arg(long)]
    nesting: Option<u32>,
    #[arg(long, default_value_t = 1000)]
    count: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; defaults to <out-dir>/dataset.jsonl.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scramble program text with a seeded permutation of the input alphabet.
    #[arg(long)]
    scramble_seed: Option<u64>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Input file; `-` reads stdin. JSON dataset lines use their `code` field.
    file: String,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Analyze an existing dataset instead of generating one.
    #[arg(long, conflicts_with_all = ["length", "nesting", "count", "seed"])]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    length: u32,
    #[arg(long, default_value_t = 1)]
    nesting: u32,
    #[arg(long, default_value_t = 10_000)]
    count: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also write per-character frequencies as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct TrainArgs {
    #[arg(long)]
    task: Task,
    #[arg(long, default_value = "combined")]
    strategy: Strategy,
    /// Target length (the curriculum's `a`).
    #[arg(long, default_value_t = 4)]
    max_len: u32,
    /// Target nesting (the curriculum's `b`); program task only.
    #[arg(long, default_value_t = 1)]
    max_nest: u32,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 0.08)]
    init_range: f64,
    #[arg(long, default_value_t = 16)]
    minibatch: usize,
    #[arg(long, default_value_t = 32)]
    window: usize,
    #[arg(long, default_value_t = 0.5)]
    lr0: f64,
    #[arg(long, default_value_t = 0.8)]
    lr_decay: f64,
    #[arg(long, default_value_t = 5.0)]
    clip_norm: f64,
    #[arg(long, default_value_t = 0.95)]
    target_accuracy: f64,
    #[arg(long, default_value_t = 0.001)]
    lr_floor: f64,
    #[arg(long, default_value_t = 20)]
    max_epochs: u64,
    #[arg(long, default_value_t = 10_000)]
    epoch_size: u64,
    #[arg(long, default_value_t = 50)]
    eval_interval: u64,
    #[arg(long, default_value_t = 200)]
    val_samples: usize,
    /// Step cap; unlimited when omitted.
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Reverse the input payload.
    #[arg(long)]
    reverse: bool,
    /// Present the input payload twice.
    #[arg(long)]
    double: bool,
    #[arg(long, default_value_t = 0.5)]
    combined_mix_prob: f64,
    #[arg(long, default_value_t = 3)]
    stall_patience: u32,
    #[arg(long, default_value_t = 0.001)]
    stall_min_delta: f64,
    /// Use the source experiments' configuration: 400 cells, 2 layers,
    /// minibatch 100, window 50, epochs of 0.5M samples.
    #[arg(long)]
    paper_scale: bool,
    /// Record real elapsed seconds in the log's wall_time column. Off by
    /// default so identical seeds give byte-identical logs.
    #[arg(long)]
    log_wall_time: bool,
    /// Output directory for manifest, log.csv, and checkpoints.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Strategies to run.
    #[arg(long, value_delimiter = ',', default_values_t = [Strategy::Baseline, Strategy::Naive, Strategy::Mix, Strategy::Combined])]
    strategies: Vec<Strategy>,
    /// Shared seeds; every strategy runs once per seed.
    #[arg(long, value_delimiter = ',', default_values_t = [1u64])]
    seeds: Vec<u64>,
    #[command(flatten)]
    train: TrainArgs,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    command: String,
    version: String,
    rng: String,
    seed: u64,
    config: serde_json::Value,
    outputs: Vec<String>,
}

impl RunManifest {
    fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(())
    }
}

impl Cli {
    pub fn run(self) -> Result<()> {
        match self.command {
            Command::Gen(args) => cmd_gen(args),
            Command::Eval(args) => cmd_eval(args),
            Command::Stats(args) => cmd_stats(args),
            Command::Train(args) => cmd_train(args),
            Command::Compare(args) => cmd_compare(args),
        }
    }
}

/// Errors that are the caller's fault (bad flag combinations); reported with
/// exit code 1 instead of 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn cmd_gen(args: GenArgs) -> Result<()> {
    if args.task != Task::Program && args.nesting.is_some() {
        bail!(UsageError(format!(
            "--nesting applies only to the program task, not {}",
            args.task
        )));
    }
    let nesting = args.nesting.unwrap_or(1);
    if args.task == Task::Program {
        GenConfig::new(args.length, nesting, args.seed).map_err(|e| UsageError(e.to_string()))?;
    } else if args.length < 1 {
        bail!(UsageError("--length must be >= 1".into()));
    }

    let out = args
        .out
        .clone()
        .unwrap_or_else(|| default_out_dir().join("dataset.jsonl"));
    let manifest_path = manifest_path_for(&out);
    RunManifest {
        command: "gen".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        rng: "chacha8".into(),
        seed: args.seed,
        config: serde_json::json!({
            "task": args.task.to_string(),
            "length": args.length,
            "nesting": nesting,
            "count": args.count,
            "scramble_seed": args.scramble_seed,
        }),
        outputs: vec![out.display().to_string()],
    }
    .write(&manifest_path)?;

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let scrambler = args.scramble_seed.map(|s| {
        let vocab = train::vocab_for(args.task);
        let mut prng = ChaCha8Rng::seed_from_u64(s);
        Permutation::shuffled(vocab.input_chars(), &mut prng)
    });
    let mut records = Vec::with_capacity(args.count as usize);
    for _ in 0..args.count {
        let mut sample = train::gen_sample(args.task, args.length, nesting, &mut rng);
        if let Some(perm) = &scrambler {
            sample.code = progsynth::scramble(&sample.code, perm)?;
        }
        records.push(DatasetRecord::from_sample(&sample, args.task, args.seed));
    }
    let n = write_records(&out, &records)?;
    println!("wrote {n} records to {}", out.display());
    Ok(())
}

fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    name.push_str(".manifest.json");
    out.with_file_name(name)
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let reader: Box<dyn BufRead> = if args.file == "-" {
        Box::new(std::io::BufReader::new(std::io::stdin()))
    } else {
        let f = std::fs::File::open(&args.file)
            .with_context(|| format!("opening {}", args.file))?;
        Box::new(std::io::BufReader::new(f))
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let code = if line.trim_start().starts_with('{') {
            let rec: DatasetRecord = serde_json::from_str(&line)
                .with_context(|| format!("line {}: not a dataset record", i + 1))?;
            rec.code
        } else {
            line.replace("\\n", "\n")
        };
        let value = interp::eval_code(&code).with_context(|| format!("line {}", i + 1))?;
        writeln!(out, "{}", crate::encode::render_target(&value))?;
    }
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let dist = if let Some(input) = &args.input {
        let records = crate::dataset::read_records(input)?;
        stats::analyze_targets(records.iter().map(|r| r.target.as_str()))
    } else {
        let cfg = GenConfig::new(args.length, args.nesting, args.seed)
            .map_err(|e| UsageError(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let targets: Vec<String> = (0..args.count)
            .map(|_| progsynth::generate(&cfg, &mut rng).target)
            .collect();
        stats::analyze_targets(targets.iter().map(|t| t.as_str()))
    };
    print!("{}", dist.report());
    if let Some(csv) = &args.csv {
        std::fs::write(csv, dist.to_csv())?;
        println!("frequencies written to {}", csv.display());
    }
    Ok(())
}

impl TrainArgs {
    fn train_config(&self, seed: u64) -> TrainConfig {
        let mut cfg = TrainConfig {
            minibatch: self.minibatch,
            window: self.window,
            lr0: self.lr0,
            lr_decay: self.lr_decay,
            clip_norm: self.clip_norm,
            target_accuracy: self.target_accuracy,
            lr_floor: self.lr_floor,
            max_epochs: self.max_epochs,
            epoch_size: self.epoch_size,
            eval_interval: self.eval_interval,
            val_samples: self.val_samples,
            max_steps: self.max_steps.unwrap_or(u64::MAX),
            seed,
        };
        if self.paper_scale {
            cfg = cfg.paper_scale();
        }
        cfg
    }

    fn model_shape(&self) -> ModelShape {
        if self.paper_scale {
            ModelShape {
                depth: 2,
                width: 400,
                init_range: self.init_range,
            }
        } else {
            ModelShape {
                depth: self.layers,
                width: self.hidden,
                init_range: self.init_range,
            }
        }
    }

    fn curriculum_config(&self, strategy: Strategy) -> CurriculumConfig {
        let mut cur = CurriculumConfig::new(self.max_len, self.max_nest, strategy);
        cur.combined_mix_prob = self.combined_mix_prob;
        cur.stall_patience = self.stall_patience;
        cur.stall_min_delta = self.stall_min_delta;
        cur
    }

    fn transforms(&self) -> Transforms {
        Transforms {
            reverse: self.reverse,
            double: self.double,
        }
    }

    fn config_json(&self, strategy: Strategy, seed: u64) -> serde_json::Value {
        serde_json::json!({
            "task": self.task.to_string(),
            "strategy": strategy.to_string(),
            "max_len": self.max_len,
            "max_nest": self.max_nest,
            "hidden": self.model_shape().width,
            "layers": self.model_shape().depth,
            "init_range": self.init_range,
            "train": format!("{:?}", self.train_config(seed)),
            "reverse": self.reverse,
            "double": self.double,
            "paper_scale": self.paper_scale,
        })
    }
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let out_dir = args.out.clone().unwrap_or_else(default_out_dir);
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let log_path = out_dir.join("log.csv");
    RunManifest {
        command: "train".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        rng: "chacha8".into(),
        seed: args.seed,
        config: args.config_json(args.strategy, args.seed),
        outputs: vec![
            log_path.display().to_string(),
            out_dir.join("final.ckpt").display().to_string(),
        ],
    }
    .write(&out_dir.join("manifest.json"))?;

    let log_file = std::fs::File::create(&log_path)
        .with_context(|| format!("creating {}", log_path.display()))?;
    let mut log_writer = std::io::BufWriter::new(log_file);
    writeln!(log_writer, "{}", train::LOG_HEADER)?;
    let outcome = train::run_with(
        &args.train_config(args.seed),
        &args.model_shape(),
        &args.curriculum_config(args.strategy),
        args.task,
        args.transforms(),
        Some(&out_dir),
        |row| {
            let _ = writeln!(log_writer, "{}", row.to_csv(args.log_wall_time));
            let _ = log_writer.flush();
        },
    )
    .map_err(map_train_err)?;
    drop(log_writer);

    // Final held-out accuracy at the target difficulty.
    let mut sets = train::EvalSets::new(args.task, args.seed, args.val_samples);
    let test = sets.get(args.max_len, args.max_nest, Split::Test);
    let (test_char, test_seq) =
        train::teacher_forced_accuracy(&outcome.params, &outcome.vocab, test, args.transforms())?;
    println!(
        "finished ({}) after {} samples: final lr {:.6}, test char accuracy {:.4}, test seq accuracy {:.4}",
        outcome.termination, outcome.samples_consumed, outcome.final_lr, test_char, test_seq
    );
    println!("log written to {}", log_path.display());
    Ok(())
}

fn map_train_err(e: train::TrainError) -> anyhow::Error {
    match e {
        train::TrainError::Config(msg) => UsageError(msg).into(),
        other => other.into(),
    }
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    if args.strategies.is_empty() || args.seeds.is_empty() {
        bail!(UsageError("--strategies and --seeds must be non-empty".into()));
    }
    let out_dir = args.train.out.clone().unwrap_or_else(default_out_dir);
    std::fs::create_dir_all(&out_dir)?;
    let compare_path = out_dir.join("compare.csv");
    let summary_path = out_dir.join("summary.csv");
    RunManifest {
        command: "compare".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        rng: "chacha8".into(),
        seed: args.seeds[0],
        config: serde_json::json!({
            "strategies": args.strategies.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            "seeds": args.seeds,
            "shared": args.train.config_json(args.train.strategy, args.seeds[0]),
        }),
        outputs: vec![
            compare_path.display().to_string(),
            summary_path.display().to_string(),
        ],
    }
    .write(&out_dir.join("manifest.json"))?;

    let mut rows_csv = format!("strategy,seed,{}\n", train::LOG_HEADER);
    let mut finals: Vec<(Strategy, u64, f64, f64)> = Vec::new();
    for &strategy in &args.strategies {
        for &seed in &args.seeds {
            log::info!("compare: running {strategy} seed {seed}");
            let outcome = train::run(
                &args.train.train_config(seed),
                &args.train.model_shape(),
                &args.train.curriculum_config(strategy),
                args.train.task,
                args.train.transforms(),
                None,
            )
            .map_err(map_train_err)?;
            for row in &outcome.log {
                rows_csv.push_str(&format!(
                    "{strategy},{seed},{}\n",
                    row.to_csv(args.train.log_wall_time)
                ));
            }
            let mut sets = train::EvalSets::new(args.train.task, seed, args.train.val_samples);
            let test = sets.get(args.train.max_len, args.train.max_nest, Split::Test);
            let (tc, ts) = train::teacher_forced_accuracy(
                &outcome.params,
                &outcome.vocab,
                test,
                args.train.transforms(),
            )?;
            println!("{strategy} seed {seed}: test char accuracy {tc:.4}, seq {ts:.4}");
            finals.push((strategy, seed, tc, ts));
        }
    }
    std::fs::write(&compare_path, rows_csv)?;

    let mut summary = String::from(
        "strategy,seed,test_char_accuracy,test_seq_accuracy,relative_char_accuracy\n",
    );
    for &(strategy, seed, tc, ts) in &finals {
        let relative = finals
            .iter()
            .find(|(s, sd, _, _)| *s == Strategy::Baseline && *sd == seed)
            .map(|(_, _, base, _)| format!("{:.6}", tc - base))
            .unwrap_or_default();
        summary.push_str(&format!("{strategy},{seed},{tc:.6},{ts:.6},{relative}\n"));
    }
    std::fs::write(&summary_path, summary)?;
    println!("compare log written to {}", compare_path.display());
    println!("summary written to {}", summary_path.display());
    Ok(())
}
