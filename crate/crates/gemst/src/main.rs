//! Command-line entry point: build, run, profile and verify models, count
//! parameters and generate seeded weight files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gemst_core::model::Model;
use gemst_core::tensor::{DenseTensor, TensorShape};

use gemst::error::{Error, Result};
use gemst::{cifar, config, gstw, init, runner, verify, write_atomic};

#[derive(Parser)]
#[command(name = "gemst", about = "Spiking vision-transformer inference engine and energy profiler")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a forward pass and write logits as CSV.
    Run(RunArgs),
    /// Run a forward pass with the profiler attached and write a per-module
    /// report as CSV.
    Profile(RunArgs),
    /// Run the oracle verification suite.
    Verify {
        /// Only run checks whose name contains this substring.
        #[arg(long)]
        filter: Option<String>,
    },
    /// Print the per-module parameter table for a config.
    Params {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a seeded random weight file for a config.
    Init {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    weights: PathBuf,
    /// GSTW tensor file holding one f32 entry named "image" with dims
    /// [B, H, W, C].
    #[arg(long, group = "source")]
    input: Option<PathBuf>,
    /// CIFAR-10 binary batch file; images are resized to the config's
    /// input size by nearest neighbor.
    #[arg(long, group = "source")]
    cifar: Option<PathBuf>,
    /// Generate a seeded synthetic input batch.
    #[arg(long, group = "source")]
    synthetic: Option<u64>,
    /// Output CSV path (logits for `run`, report for `profile`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Batch size for synthetic input; cap for CIFAR batches.
    #[arg(long, default_value_t = 1)]
    batch: usize,
    /// Worker threads; defaults to $GEMST_THREADS, then 1.
    #[arg(long)]
    threads: Option<usize>,
    /// Classes printed per item.
    #[arg(long, default_value_t = 5)]
    topk: usize,
    /// Check the spike-amplitude invariant on every intermediate tensor.
    #[arg(long, default_value_t = false)]
    assert_spikes: bool,
}

fn load_image_file(path: &PathBuf, model: &Model) -> Result<DenseTensor> {
    let container = gstw::load(path).map_err(|e| Error::Input(e.to_string()))?;
    let (dims, values) = container
        .entries
        .get("image")
        .ok_or_else(|| Error::Input(format!("{}: no 'image' entry", path.display())))?;
    let [b, h, w, c] = dims.as_slice() else {
        return Err(Error::Input(format!(
            "{}: 'image' must have dims [B, H, W, C], got {dims:?}",
            path.display()
        )));
    };
    if *h != model.config.input_size || *w != model.config.input_size || *c != model.config.in_channels {
        return Err(Error::Input(format!(
            "{}: image is {h}x{w}x{c}, model expects {s}x{s}x{ic}",
            path.display(),
            s = model.config.input_size,
            ic = model.config.in_channels,
        )));
    }
    let shape = TensorShape::new(1, *b, *h, *w, *c).map_err(|e| Error::Input(e.to_string()))?;
    DenseTensor::from_vec(shape, values.iter().map(|v| *v as f64).collect())
        .map_err(|e| Error::Input(e.to_string()))
}

fn load_input(args: &RunArgs, model: &Model) -> Result<DenseTensor> {
    if let Some(path) = &args.input {
        load_image_file(path, model)
    } else if let Some(path) = &args.cifar {
        let records = cifar::read_batch(path)?;
        cifar::to_tensor(&records, model.config.input_size, args.batch.max(1))
    } else if let Some(seed) = args.synthetic {
        init::synthetic_batch(seed, args.batch.max(1), model.config.input_size, model.config.in_channels)
    } else {
        Err(Error::Input(
            "no input given: use --input, --cifar or --synthetic".into(),
        ))
    }
}

fn build_model(args: &RunArgs) -> Result<Model> {
    let cfg = config::load_config(&args.config)?;
    let mut model = Model::build(cfg)?;
    gstw::load_into(&args.weights, &mut model)?;
    Ok(model)
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let model = build_model(&args)?;
    let images = load_input(&args, &model)?;
    let threads = runner::resolve_threads(args.threads);
    let prof = model.profiler();
    let logits = runner::run_batch(&model, &prof, &images, threads, args.assert_spikes)?;
    let classes = model.config.classes;
    for (bi, row) in logits.chunks(classes).enumerate() {
        let top: Vec<String> = runner::top_k(row, args.topk.max(1))
            .into_iter()
            .map(|(i, v)| format!("{i} ({v:.4})"))
            .collect();
        println!("item {bi}: {}", top.join(", "));
    }
    let out = args.out.unwrap_or_else(|| PathBuf::from("logits.csv"));
    write_atomic(&out, runner::logits_csv(&logits, classes).as_bytes())?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_profile(args: RunArgs) -> Result<()> {
    let model = build_model(&args)?;
    let images = load_input(&args, &model)?;
    let threads = runner::resolve_threads(args.threads);
    let prof = model.profiler();
    runner::run_batch(&model, &prof, &images, threads, args.assert_spikes)?;
    let report = prof.report();
    println!(
        "energy per sample: {:.4} mJ total, {:.4} mJ excluding the stem",
        report.energy_mj(),
        report.energy_mj_without_stem()
    );
    let out = args.out.unwrap_or_else(|| PathBuf::from("profile.csv"));
    write_atomic(&out, report.to_csv().as_bytes())?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_verify(filter: Option<String>) -> Result<()> {
    let outcomes = verify::run_suite(filter.as_deref());
    if outcomes.is_empty() {
        return Err(Error::Verify(format!(
            "no checks match filter '{}'",
            filter.unwrap_or_default()
        )));
    }
    let (text, ok) = verify::render(&outcomes);
    print!("{text}");
    if ok {
        println!("all {} checks passed", outcomes.len());
        Ok(())
    } else {
        Err(Error::Verify(format!(
            "{} of {} checks failed",
            outcomes.iter().filter(|o| o.error.is_some()).count(),
            outcomes.len()
        )))
    }
}

fn cmd_params(path: PathBuf) -> Result<()> {
    let model = Model::build(config::load_config(&path)?)?;
    let (rows, total) = model.count_params();
    for row in rows {
        println!("{:<24} {:>12}", row.module, row.count);
    }
    println!("{:<24} {total:>12}", "total");
    Ok(())
}

fn cmd_init(path: PathBuf, seed: u64, out: PathBuf) -> Result<()> {
    let mut model = Model::build(config::load_config(&path)?)?;
    init::kaiming_init(&mut model, seed)?;
    gstw::save(&out, &gstw::container_for(&model))?;
    println!("wrote {} (seed {seed})", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Profile(args) => cmd_profile(args),
        Cmd::Verify { filter } => cmd_verify(filter),
        Cmd::Params { config } => cmd_params(config),
        Cmd::Init { config, seed, out } => cmd_init(config, seed, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
