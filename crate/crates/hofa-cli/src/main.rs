//! Command-line front end for the `hofa` library.
//!
//! Functions travel as CSV files with header `index,re,im` and one row per
//! group element in enumeration order; floats are printed with 17 significant
//! digits so a write→read round trip is value-exact. Every JSON report embeds
//! the tool version, the echoed configuration, the seed (when one is used),
//! the group spec, and the wall-clock time.
//!
//! Exit codes: 0 success, 2 validation error (bad flags, malformed files,
//! size guards), 3 numeric failure.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;
use serde_json::json;

use hofa::algorithms::{
    denoise_experiment, quadratic_character_decomposition, regularize_u3,
    regularize_u3_continuous, RngSeed,
};
use hofa::characters::{denoised_gram, order1_certificate, quadratic_certificate};
use hofa::fourier_ops::apply_k_eps;
use hofa::gowers::{uk_norm, uk_norm_direct};
use hofa::group::{fourier_transform, GroupFunction, GroupSpec};
use hofa::spectral::eigendecompose;
use hofa::HofaError;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "hofa", version, about = "Spectral quadratic Fourier analysis on finite abelian groups")]
struct Cli {
    /// Cap the rayon thread pool (env: HOFA_THREADS). Results do not depend
    /// on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, serde::Serialize)]
struct InputArgs {
    /// Function CSV (`index,re,im`)
    #[arg(long)]
    input: PathBuf,
    /// Group spec, e.g. `Z64` or `Z2xZ6`
    #[arg(long)]
    group: String,
}

#[derive(Subcommand)]
enum Command {
    /// Fourier coefficients of a function, as a CSV over the dual group
    Transform {
        #[command(flatten)]
        io: InputArgs,
        #[arg(long)]
        output: PathBuf,
    },
    /// Gowers U^k norm (FFT/recursive evaluation)
    Gowers {
        #[command(flatten)]
        io: InputArgs,
        #[arg(long)]
        k: u32,
    },
    /// Direct cube-average U^k norm for cross-checks (small groups only)
    Oracle {
        #[command(flatten)]
        io: InputArgs,
        #[arg(long)]
        k: u32,
    },
    /// Soft-threshold the Fourier coefficients at level ε
    Denoise {
        #[command(flatten)]
        io: InputArgs,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Eigendecompose the denoised Gram operator of a function
    Spectrum {
        #[command(flatten)]
        io: InputArgs,
        #[arg(long)]
        eps: f64,
        /// How many leading eigenvalues to list in the summary
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        /// Persist the full decomposition to this binary file
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// U³-regularization at (ρ, ε)
    Regularize {
        #[command(flatten)]
        io: InputArgs,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        rho: f64,
        /// Use the soft eigenvalue-weighting variant
        #[arg(long)]
        continuous: bool,
        /// Write the regularized function here
        #[arg(long)]
        output: PathBuf,
    },
    /// Two-pass quadratic character decomposition
    Qchar {
        #[command(flatten)]
        io: InputArgs,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Output vectors are written to `<prefix>_<i>.csv`
        #[arg(long)]
        vectors: Option<PathBuf>,
    },
    /// Character certificate of order 1 or 2
    Certify {
        #[command(flatten)]
        io: InputArgs,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
        order: u32,
        /// Spectrum size for the order-2 shift test
        #[arg(long, default_value_t = 1)]
        r: usize,
    },
    /// Chirp-denoising demo: noisy sin(8i²+3i+1) on Z_n, reconstruction
    /// from the leading Gram eigenvectors
    DemoFig2 {
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 0.3)]
        sigma: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 6)]
        top_k: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("HOFA_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(t) = threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_class(&e))
        }
    }
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Numeric(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<HofaError> for CliError {
    fn from(e: HofaError) -> Self {
        match e {
            HofaError::Numerical(_) | HofaError::NotSelfAdjoint(_) | HofaError::NoQualifyingEigenvalue(_) => {
                CliError::Numeric(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("i/o error: {e}"))
    }
}

fn exit_class(e: &CliError) -> u8 {
    match e {
        CliError::Validation(_) => 2,
        CliError::Numeric(_) => 3,
    }
}

type CliResult<T> = Result<T, CliError>;

/// Read a `index,re,im` CSV as a function on `group`.
fn read_function(path: &Path, group: &GroupSpec) -> CliResult<GroupFunction> {
    let file = File::open(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| CliError::Validation(format!("{}: empty file", path.display())))?;
    if header.trim() != "index,re,im" {
        return Err(CliError::Validation(format!(
            "{}:1: expected header `index,re,im`, got {header:?}",
            path.display()
        )));
    }
    let mut values = Vec::with_capacity(group.order());
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| {
            CliError::Validation(format!("{}:{line_no}: {what}: {line:?}", path.display()))
        };
        let mut parts = line.split(',');
        let idx: usize = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad("bad index"))?;
        if idx != values.len() {
            return Err(bad(&format!("index must increase from 0, expected {}", values.len())));
        }
        let re: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad("bad re field"))?;
        let im: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad("bad im field"))?;
        if parts.next().is_some() {
            return Err(bad("trailing fields"));
        }
        values.push(C64::new(re, im));
    }
    if values.len() != group.order() {
        return Err(CliError::Validation(format!(
            "{}: {} rows for group {} of order {}",
            path.display(),
            values.len(),
            group.spec_string(),
            group.order()
        )));
    }
    Ok(GroupFunction::new(group.clone(), values)?)
}

/// 17 significant digits: shortest representation that round-trips f64.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_function(path: &Path, f: &GroupFunction) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "index,re,im")?;
    for (i, v) in f.values().iter().enumerate() {
        writeln!(w, "{i},{},{}", fmt_f64(v.re), fmt_f64(v.im))?;
    }
    Ok(())
}

/// Wrap a command payload in the standard report envelope.
fn report(
    command: &str,
    config: serde_json::Value,
    group: Option<&GroupSpec>,
    seed: Option<RngSeed>,
    started: Instant,
    payload: serde_json::Value,
) -> serde_json::Value {
    let mut out = json!({
        "version": VERSION,
        "command": command,
        "config": config,
        "group": group.map(|g| g.spec_string()),
        "seed": seed,
        "wall_clock_ms": started.elapsed().as_secs_f64() * 1e3,
    });
    for (k, v) in payload.as_object().unwrap() {
        out[k] = v.clone();
    }
    out
}

fn run(cmd: Command) -> CliResult<()> {
    let started = Instant::now();
    let out = match cmd {
        Command::Transform { io, output } => {
            let group = GroupSpec::parse(&io.group)?;
            let f = read_function(&io.input, &group)?;
            write_function(&output, &fourier_transform(&f))?;
            report(
                "transform",
                json!({"input": io.input, "group": io.group, "output": output}),
                Some(&group),
                None,
                started,
                json!({"output_rows": group.order()}),
            )
        }
        Command::Gowers { io, k } => {
            let group = GroupSpec::parse(&io.group)?;
            let f = read_function(&io.input, &group)?;
            let norm = uk_norm(&f, k)?;
            report(
                "gowers",
                json!({"input": io.input, "group": io.group, "k": k}),
                Some(&group),
                None,
                started,
                json!({"norm": norm}),
            )
        }
        Command::Oracle { io, k } => {
            let group = GroupSpec::parse(&io.group)?;
            // the cube average visits |Z|^(k+1) tuples
            let cost = (group.order() as f64).powi(k as i32 + 1);
            if cost > 1e8 {
                return Err(CliError::Validation(format!(
                    "size guard: direct U^{k} average on a group of order {} needs {cost:.1e} terms",
                    group.order()
                )));
            }
            let f = read_function(&io.input, &group)?;
            let norm = uk_norm_direct(&f, k)?;
            report(
                "oracle",
                json!({"input": io.input, "group": io.group, "k": k}),
                Some(&group),
                None,
                started,
                json!({"norm": norm}),
            )
        }
        Command::Denoise { io, eps, output } => {
            let group = GroupSpec::parse(&io.group)?;
            let f = read_function(&io.input, &group)?;
            let g = apply_k_eps(&f, eps)?;
            write_function(&output, &g)?;
            report(
                "denoise",
                json!({"input": io.input, "group": io.group, "eps": eps, "output": output}),
                Some(&group),
                None,
                started,
                json!({"output_norm_l2": g.norm_l2()}),
            )
        }
        Command::Spectrum { io, eps, top_k, save } => {
            let group = GroupSpec::parse(&io.group)?;
            let f = read_function(&io.input, &group)?;
            let ed = eigendecompose(&denoised_gram(&f, eps)?)?;
            if let Some(path) = &save {
                ed.save_binary(path)?;
            }
            report(
                "spectrum",
                json!({"input": io.input, "group": io.group, "eps": eps,
                       "top_k": top_k, "save": save}),
                Some(&group),
                None,
                started,
                json!({"summary": ed.json_summary(top_k)}),
            )
        }
        Command::Regularize { io, eps, rho, continuous, output } => {
            let group = GroupSpec::parse(&io.group)?;
            let f = read_function(&io.input, &group)?;
            let rep = if continuous {
                regularize_u3_continuous(&f, rho, eps)?
            } else {
                regularize_u3(&f, rho, eps)?
            };
            write_function(&output, &rep.f_reg)?;
            report(
                "regularize",
                json!({"input": io.input, "group": io.group, "eps": eps, "rho": rho,
                       "continuous": continuous, "output": output}),
                Some(&group),
                None,
                started,
                json!({"report": rep.to_json()}),
            )
        }
        Command::Qchar { io, eps, rho, delta, seed, stream, vectors } => {
            let group = GroupSpec::parse(&io.group)?;
            let f = read_function(&io.input, &group)?;
            let rng = RngSeed::with_stream(seed, stream);
            let rep = quadratic_character_decomposition(&f, rho, eps, delta, rng)?;
            let mut files = Vec::new();
            if let Some(prefix) = &vectors {
                for (i, v) in rep.vectors.iter().enumerate() {
                    let path = prefix.with_file_name(format!(
                        "{}_{i}.csv",
                        prefix.file_stem().and_then(|s| s.to_str()).unwrap_or("vector")
                    ));
                    write_function(&path, v)?;
                    files.push(path);
                }
            }
            report(
                "qchar",
                json!({"input": io.input, "group": io.group, "eps": eps, "rho": rho,
                       "delta": delta, "vectors": vectors}),
                Some(&group),
                Some(rng),
                started,
                json!({"report": rep.to_json(), "vector_files": files}),
            )
        }
        Command::Certify { io, order, r } => {
            let group = GroupSpec::parse(&io.group)?;
            let f = read_function(&io.input, &group)?;
            let payload = match order {
                1 => {
                    let (chi, residual) = order1_certificate(&f)?;
                    json!({"certificate": {
                        "order": 1,
                        "character_index": chi.index(),
                        "character_freq": chi.freq(),
                        "residual": residual,
                    }})
                }
                _ => {
                    let cert = quadratic_certificate(&f, r)?;
                    json!({"certificate": serde_json::to_value(&cert).unwrap()})
                }
            };
            report(
                "certify",
                json!({"input": io.input, "group": io.group, "order": order, "r": r}),
                Some(&group),
                None,
                started,
                payload,
            )
        }
        Command::DemoFig2 { n, sigma, eps, top_k, seed, output } => {
            let rng = RngSeed::new(seed);
            let series = denoise_experiment(n, sigma, top_k, eps, rng)?;
            let mut w = BufWriter::new(File::create(&output)?);
            writeln!(w, "i,f_re,f_im,g_re,g_im,f2_re,f2_im,err")?;
            for i in 0..n {
                let (f, g, f2) = (series.f.at(i), series.g.at(i), series.f2.at(i));
                writeln!(
                    w,
                    "{i},{},{},{},{},{},{},{}",
                    fmt_f64(f.re),
                    fmt_f64(f.im),
                    fmt_f64(g.re),
                    fmt_f64(g.im),
                    fmt_f64(f2.re),
                    fmt_f64(f2.im),
                    fmt_f64(series.err[i])
                )?;
            }
            drop(w);
            report(
                "demo_fig2",
                json!({"n": n, "sigma": sigma, "eps": eps, "top_k": top_k, "output": output}),
                Some(&series.group),
                Some(rng),
                started,
                json!({
                    "noise_norm_l2": series.noise_norm,
                    "reconstruction_error_l2": series.reconstruction_error,
                }),
            )
        }
    };
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(())
}
