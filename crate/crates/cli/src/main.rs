use std::fs::{self, File};
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use deltasketch::{ncd, oracle, DeltaSketch, SketchParams, StreamConfig, StreamEstimator};
use rayon::prelude::*;

/// Inputs above this size need --force for the quadratic exact commands.
const EXACT_LIMIT: u64 = 1_000_000;

/// ε for each `-p` level, sparsest first.
const PRESETS: [f64; 5] = [1.0, 0.5, 0.25, 0.1, 0.05];

#[derive(Parser)]
#[command(name = "deltasketch", version, about = "Sketch-based substring complexity and compression distance")]
struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(short = 't', long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate δ of a file or standard input.
    Estimate {
        /// Input path; `-` or nothing reads standard input.
        input: Option<PathBuf>,
        /// Read a saved sketch instead of raw bytes.
        #[arg(long, conflicts_with = "input")]
        from_sketch: Option<PathBuf>,
        #[command(flatten)]
        opts: SketchOpts,
    },
    /// Stream an input into a sketch file.
    Sketch {
        input: Option<PathBuf>,
        #[arg(short = 'o', long)]
        output: PathBuf,
        /// Treat ε as the target NCD error; sketches are built with ε/5.
        #[arg(long)]
        for_ncd: bool,
        #[command(flatten)]
        opts: SketchOpts,
    },
    /// Merge sketch files into the sketch of the whole collection.
    Merge {
        #[arg(required = true, num_args = 2..)]
        inputs: Vec<PathBuf>,
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
    /// NCD between two sketch files, or two raw files with --raw.
    Ncd {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        pair: PairOpts,
    },
    /// All-pairs NCD as a PHYLIP matrix.
    Matrix {
        #[arg(required = true, num_args = 2..)]
        inputs: Vec<PathBuf>,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        /// Emit pairs as TSV (name, name, raw, clamped) instead.
        #[arg(long)]
        tsv: bool,
        #[command(flatten)]
        pair: PairOpts,
    },
    /// Exact δ and k̂ (quadratic; refuses inputs over 10^6 bytes without --force).
    Exact {
        input: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Exact d_k for every k.
    Dk {
        input: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
}

#[derive(Args, Clone)]
struct SketchOpts {
    /// Relative error ε in (0, 1]; overrides -p.
    #[arg(short = 'e', long)]
    epsilon: Option<f64>,
    /// Precision level 1..5, mapping to ε 1.0, 0.5, 0.25, 0.1, 0.05.
    #[arg(short = 'p', long, value_parser = clap::value_parser!(u8).range(1..=5))]
    preset: Option<u8>,
    /// log2 of the register count per length.
    #[arg(short = 'r', long, default_value_t = 14, value_parser = clap::value_parser!(u8).range(4..=20))]
    registers: u8,
    /// Upper bound on the input length; required for pipes.
    #[arg(long)]
    n_max: Option<u64>,
    /// Track lengths above the window through the run-length BWT.
    #[arg(long)]
    rlbwt: bool,
    /// Window size K (default ⌈√n log₂ n⌉).
    #[arg(long)]
    window: Option<u64>,
    /// Hash seed: an integer (decimal or 0x hex) or `random`.
    #[arg(long)]
    seed: Option<String>,
    /// Prime fingerprint modulus (default 2^61 - 1).
    #[arg(long)]
    modulus: Option<u64>,
    /// Report window, RLBWT and memory details on stderr.
    #[arg(short = 'v', long)]
    verbose: bool,
}

#[derive(Args, Clone)]
struct PairOpts {
    /// Inputs are raw files; sketch them first with ε as the NCD target.
    #[arg(long)]
    raw: bool,
    #[command(flatten)]
    opts: SketchOpts,
}

#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<deltasketch::Error>() {
            return match e {
                deltasketch::Error::Io(_) | deltasketch::Error::Format(_) => 2,
                deltasketch::Error::ParameterMismatch { .. } => 3,
                deltasketch::Error::CapacityExceeded { .. } => 4,
                _ => 1,
            };
        }
        if cause.is::<io::Error>() {
            return 2;
        }
    }
    1
}

impl SketchOpts {
    fn epsilon(&self) -> f64 {
        match (self.epsilon, self.preset) {
            (Some(e), _) => e,
            (None, Some(p)) => PRESETS[p as usize - 1],
            (None, None) => 0.2,
        }
    }

    fn seed(&self) -> Result<Option<u64>> {
        let Some(s) = self.seed.as_deref() else {
            return Ok(None);
        };
        let parsed = if s == "random" {
            Ok(rand::random())
        } else if let Some(hex) = s.strip_prefix("0x") {
            u64::from_str_radix(hex, 16)
        } else {
            s.parse()
        };
        parsed.map(Some).map_err(|_| usage(format!("bad seed {s:?}")))
    }

    /// Parameters for a δ estimate with error `epsilon`.
    fn params(&self, epsilon: f64, n_max: u64) -> Result<SketchParams> {
        let mut p = SketchParams::new(epsilon, n_max.max(2))?.with_precision(self.registers);
        if let Some(seed) = self.seed()? {
            p = p.with_seed(seed);
        }
        if let Some(q) = self.modulus {
            p = p.with_modulus(q);
        }
        p.validate()?;
        Ok(p)
    }

    fn config(&self) -> StreamConfig {
        StreamConfig {
            window: self.window,
            rlbwt: self.rlbwt,
            ..StreamConfig::default()
        }
    }
}

enum Input {
    Stdin,
    File(PathBuf),
}

impl Input {
    fn new(path: Option<&Path>) -> Self {
        match path {
            None => Input::Stdin,
            Some(p) if p.as_os_str() == "-" => Input::Stdin,
            Some(p) => Input::File(p.to_path_buf()),
        }
    }

    fn name(&self) -> String {
        match self {
            Input::Stdin => "stdin".into(),
            Input::File(p) => display_name(p),
        }
    }

    /// Size of a regular file; `None` for pipes and standard input.
    fn size(&self) -> Result<Option<u64>> {
        match self {
            Input::Stdin => Ok(None),
            Input::File(p) => {
                let meta = fs::metadata(p).with_context(|| format!("cannot open {}", p.display()))?;
                Ok(meta.is_file().then_some(meta.len()))
            }
        }
    }

    fn open(&self) -> Result<Box<dyn Read>> {
        match self {
            Input::Stdin => Ok(Box::new(io::stdin().lock())),
            Input::File(p) => {
                let f = File::open(p).with_context(|| format!("cannot open {}", p.display()))?;
                Ok(Box::new(BufReader::with_capacity(1 << 16, f)))
            }
        }
    }

    fn n_max(&self, declared: Option<u64>) -> Result<u64> {
        match (declared, self.size()?) {
            (Some(n), _) => Ok(n),
            (None, Some(size)) => Ok(size),
            (None, None) => Err(usage(format!(
                "{} is not a regular file; pass --n-max with an upper bound on its length",
                self.name()
            ))),
        }
    }

    fn read_all(&self, force: bool) -> Result<Vec<u8>> {
        if let Some(size) = self.size()? {
            if size > EXACT_LIMIT && !force {
                return Err(usage(format!(
                    "{} has {size} bytes; exact computation is quadratic, pass --force to run it anyway",
                    self.name()
                )));
            }
        }
        let mut data = Vec::new();
        self.open()?
            .take(if force { u64::MAX } else { EXACT_LIMIT + 1 })
            .read_to_end(&mut data)
            .with_context(|| format!("cannot read {}", self.name()))?;
        if data.len() as u64 > EXACT_LIMIT && !force {
            return Err(usage(format!(
                "{} exceeds {EXACT_LIMIT} bytes; pass --force to run it anyway",
                self.name()
            )));
        }
        Ok(data)
    }
}

fn display_name(p: &Path) -> String {
    p.file_stem()
        .or(p.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

fn stream_sketch(input: &Input, params: SketchParams, opts: &SketchOpts) -> Result<DeltaSketch> {
    let mut est = StreamEstimator::new(params, opts.config())?;
    let read = est
        .read_from(input.open()?)
        .with_context(|| format!("while streaming {}", input.name()))?;
    if opts.verbose {
        eprintln!(
            "{}: {read} bytes, window {}, rlbwt {}, dropped {}, peak auxiliary {} bytes",
            input.name(),
            est.window_capacity(),
            if est.rlbwt().is_some() || est.has_dropped() { "on" } else { "off" },
            est.has_dropped(),
            est.peak_aux_bytes()
        );
    }
    Ok(est.finalize()?)
}

fn load_sketch(path: &Path) -> Result<DeltaSketch> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    DeltaSketch::deserialize(&bytes).with_context(|| format!("{} is not a valid sketch", path.display()))
}

fn save_sketch(path: &Path, sketch: &DeltaSketch) -> Result<usize> {
    let bytes = sketch.serialize();
    fs::write(path, &bytes).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(bytes.len())
}

/// Sketches for NCD: either saved files, or raw files sketched with ε/5
/// against a common length bound.
fn pair_sketches(paths: &[PathBuf], pair: &PairOpts) -> Result<Vec<DeltaSketch>> {
    if !pair.raw {
        return paths.par_iter().map(|p| load_sketch(p)).collect();
    }
    let inputs: Vec<Input> = paths.iter().map(|p| Input::new(Some(p))).collect();
    let mut n_max = pair.opts.n_max.unwrap_or(0);
    if pair.opts.n_max.is_none() {
        for input in &inputs {
            n_max = n_max.max(input.n_max(None)?);
        }
    }
    let epsilon = pair.opts.epsilon();
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(usage(format!("epsilon {epsilon} outside (0, 1]")));
    }
    let params = pair.opts.params(epsilon / 5.0, n_max)?;
    inputs
        .par_iter()
        .map(|input| stream_sketch(input, params.clone(), &pair.opts))
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .context("cannot start the worker pool")?;
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Estimate { input, from_sketch, opts } => {
            let sketch = match from_sketch {
                Some(path) => load_sketch(&path)?,
                None => {
                    let input = Input::new(input.as_deref());
                    let n_max = input.n_max(opts.n_max)?;
                    let params = opts.params(opts.epsilon(), n_max)?;
                    stream_sketch(&input, params, &opts)?
                }
            };
            writeln!(out, "{:.6}", sketch.estimate())?;
        }
        Command::Sketch { input, output, for_ncd, opts } => {
            let input = Input::new(input.as_deref());
            let n_max = input.n_max(opts.n_max)?;
            let epsilon = opts.epsilon();
            if for_ncd && !(epsilon > 0.0 && epsilon <= 1.0) {
                return Err(usage(format!("epsilon {epsilon} outside (0, 1]")));
            }
            let params = opts.params(if for_ncd { epsilon / 5.0 } else { epsilon }, n_max)?;
            let sketch = stream_sketch(&input, params, &opts)?;
            let written = save_sketch(&output, &sketch)?;
            writeln!(
                out,
                "{}: {} bytes processed, {} lengths, {written} bytes written to {}",
                input.name(),
                sketch.stream_len(),
                sketch.num_lengths(),
                output.display()
            )?;
        }
        Command::Merge { inputs, output } => {
            let sketches = inputs.iter().map(|p| load_sketch(p)).collect::<Result<Vec<_>>>()?;
            let mut merged = sketches[0].clone();
            for (s, path) in sketches[1..].iter().zip(&inputs[1..]) {
                merged = merged
                    .merge(s)
                    .with_context(|| format!("cannot merge {}", path.display()))?;
            }
            let written = save_sketch(&output, &merged)?;
            writeln!(
                out,
                "merged {} sketches, {written} bytes written to {}",
                inputs.len(),
                output.display()
            )?;
        }
        Command::Ncd { a, b, pair } => {
            let paths = [a, b];
            let sketches = pair_sketches(&paths, &pair)?;
            let v = ncd::ncd_from_sketches(&sketches[0], &sketches[1])?;
            if pair.opts.verbose {
                eprintln!("raw {:.6}", v.raw);
            }
            writeln!(out, "{:.6}", v.clamped)?;
        }
        Command::Matrix { inputs, output, tsv, pair } => {
            let sketches = pair_sketches(&inputs, &pair)?;
            let names: Vec<String> = inputs.iter().map(|p| display_name(p)).collect();
            let m = ncd::ncd_matrix(&sketches, &names)?;
            let text = if tsv { m.to_tsv() } else { m.to_phylip() };
            match output {
                Some(path) => {
                    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?
                }
                None => out.write_all(text.as_bytes())?,
            }
        }
        Command::Exact { input, force } => {
            let data = Input::new(input.as_deref()).read_all(force)?;
            if data.is_empty() {
                return Err(usage("input is empty; δ is undefined"));
            }
            let p = oracle::exact_profile(&data);
            writeln!(out, "delta = {} = {:.6}, k_hat = {}", p.delta, p.delta.to_f64(), p.k_hat)?;
        }
        Command::Dk { input, force } => {
            let data = Input::new(input.as_deref()).read_all(force)?;
            let cells: Vec<String> = oracle::exact_profile(&data)
                .d
                .iter()
                .enumerate()
                .map(|(i, d)| format!("{}:{d}", i + 1))
                .collect();
            writeln!(out, "{}", cells.join(" "))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
