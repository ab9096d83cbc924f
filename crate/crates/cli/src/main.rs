//! Batch CLI over the path-embedding library: closed-form bounds, seeded
//! process simulation, and rate/covariance/cumulant verification jobs with
//! CSV/JSON output.
//!
//! Exit codes: 0 success, 1 parameter error, 2 verification failure.

use std::fs::File;
use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use steinpath::grid::Grid;
use steinpath::hilbert::{partial_trace, CovOperator, Embedding};
use steinpath::processes::{self, GENERATOR_ID};
use steinpath::stein;
use steinpath::verify;

#[derive(Parser)]
#[command(
    name = "steinpath",
    about = "Path embeddings into l2, Gaussian-approximation bounds, and their verification",
    version,
    propagate_version = true
)]
struct Cli {
    /// Worker threads for Monte Carlo loops (results do not depend on this)
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a closed-form bound and its numeric certificate
    Bound(BoundCmd),
    /// Run a verification job and report pass/fail
    Verify(VerifyCmd),
    /// Simulate a seeded process path and write it as CSV
    Simulate(SimulateCmd),
}

#[derive(Args)]
struct BoundCmd {
    #[command(subcommand)]
    kind: BoundKind,
}

#[derive(Args, Clone)]
struct CommonBoundArgs {
    /// Embedding order, 0 < beta < 1/2
    #[arg(long, default_value_t = 0.25)]
    beta: f64,
    /// Truncation of the l2 embedding
    #[arg(long, default_value_t = 128)]
    n_max: usize,
    /// Uniform grid nodes on [0, 1]
    #[arg(long, default_value_t = 1024)]
    grid_size: usize,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<String>,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
enum BoundKind {
    /// Poisson approximation: statement/proof constants and rho_3 bounds
    Poisson {
        #[command(flatten)]
        common: CommonBoundArgs,
        /// Poisson intensity
        #[arg(long)]
        lambda: f64,
    },
    /// Linear interpolation of Brownian motion: rho_2 bound and trace-gap certificate
    Interp {
        #[command(flatten)]
        common: CommonBoundArgs,
        /// Interpolation intervals
        #[arg(long)]
        m: usize,
    },
    /// Donsker walk: dominant term plus the computed remainder and envelope
    Donsker {
        #[command(flatten)]
        common: CommonBoundArgs,
        /// Walk steps
        #[arg(long)]
        m: usize,
    },
    /// Fractional Brownian transfer of the Poisson bound
    Fbm {
        #[command(flatten)]
        common: CommonBoundArgs,
        /// Poisson intensity
        #[arg(long)]
        lambda: f64,
        /// Hurst index of the target process
        #[arg(long)]
        hurst: f64,
    },
}

#[derive(Args)]
struct VerifyCmd {
    #[command(subcommand)]
    kind: VerifyKind,
}

#[derive(Subcommand)]
enum VerifyKind {
    /// Slope of the deterministic Poisson characteristic-functional gap
    RatePoisson {
        #[arg(long, default_value_t = 0.25)]
        beta: f64,
        /// Comma-separated intensities, or `a..b` for decade steps
        #[arg(long, default_value = "1e2..1e5")]
        lambdas: String,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, default_value_t = 1024)]
        grid_size: usize,
        #[arg(long)]
        out: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Emit a bare two-column `param gap` table
        #[arg(long)]
        gnuplot: bool,
    },
    /// Slope of the interpolation trace gap against m
    RateInterp {
        #[arg(long, default_value_t = 0.25)]
        beta: f64,
        /// Comma-separated interval counts
        #[arg(long, default_value = "4,8,16,32,64")]
        m: String,
        #[arg(long, default_value_t = 128)]
        n_max: usize,
        #[arg(long, default_value_t = 1024)]
        grid_size: usize,
        #[arg(long)]
        out: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        gnuplot: bool,
    },
    /// Empirical covariance of an embedded process vs its analytic Gram
    Cov {
        #[arg(long, value_enum)]
        process: CovProcess,
        #[arg(long, default_value_t = 0.25)]
        beta: f64,
        /// Intensity (poisson)
        #[arg(long)]
        lambda: Option<f64>,
        /// Intervals / steps (interp, donsker)
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// Embedding truncation (kept small so the 4 SE entrywise test stays
        /// calibrated across all entries)
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, default_value_t = 1024)]
        grid_size: usize,
        #[arg(long)]
        out: Option<String>,
    },
    /// Third-cumulant Monte Carlo vs the quadrature oracle
    Cumulant {
        #[arg(long, default_value_t = 0.25)]
        beta: f64,
        #[arg(long, default_value_t = 50.0)]
        lambda: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, default_value_t = 1024)]
        grid_size: usize,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum CovProcess {
    Poisson,
    Interp,
    Donsker,
    Bm,
}

#[derive(Args)]
struct SimulateCmd {
    #[command(subcommand)]
    kind: SimulateKind,
}

#[derive(Subcommand)]
enum SimulateKind {
    /// Normalized compensated Poisson path (jump times CSV)
    Poisson {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Linear interpolation of Brownian motion (node values CSV)
    Interp {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Donsker walk (node values CSV)
    Donsker {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Series Brownian motion on the working grid
    Bm {
        #[arg(long, default_value_t = 0.25)]
        beta: f64,
        #[arg(long, default_value_t = 128)]
        n_max: usize,
        #[arg(long, default_value_t = 1024)]
        grid_size: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Fractional Brownian motion through the Volterra kernel
    Fbm {
        #[arg(long)]
        hurst: f64,
        #[arg(long, default_value_t = 256)]
        grid_size: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version requests are successful exits
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: could not configure {workers} workers: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> Result<u8, Box<dyn std::error::Error>> {
    match cmd {
        Command::Bound(b) => run_bound(b),
        Command::Verify(v) => run_verify(v),
        Command::Simulate(s) => run_simulate(s),
    }
}

fn write_output(out: &Option<String>, content: &str) -> std::io::Result<()> {
    match out {
        Some(path) => {
            let mut f = File::create(path)?;
            f.write_all(content.as_bytes())
        }
        None => {
            print!("{content}");
            std::io::stdout().flush()
        }
    }
}

fn make_embedding(beta: f64, n_max: usize, grid_size: usize) -> steinpath::Result<Embedding> {
    Embedding::new(beta, n_max, Grid::new(grid_size)?)
}

fn render_report(r: &stein::BoundReport, format: Format) -> String {
    match format {
        Format::Json => format!("{:#}\n", r.to_json()),
        Format::Csv => format!("{}\n{}\n", stein::BoundReport::csv_header(), r.csv_row()),
    }
}

fn run_bound(cmd: BoundCmd) -> Result<u8, Box<dyn std::error::Error>> {
    let (common, report) = match cmd.kind {
        BoundKind::Poisson { common, lambda } => {
            let e = make_embedding(common.beta, common.n_max, common.grid_size)?;
            (common, stein::bound_poisson(&e, lambda)?)
        }
        BoundKind::Interp { common, m } => {
            let e = make_embedding(common.beta, common.n_max, common.grid_size)?;
            (common, stein::bound_interp(&e, m)?)
        }
        BoundKind::Donsker { common, m } => {
            let e = make_embedding(common.beta, common.n_max, common.grid_size)?;
            (common, stein::bound_donsker(&e, m)?)
        }
        BoundKind::Fbm {
            common,
            lambda,
            hurst,
        } => {
            let e = make_embedding(common.beta, common.n_max, common.grid_size)?;
            (common, stein::bound_fbm(&e, lambda, hurst)?)
        }
    };
    write_output(&common.out, &render_report(&report, common.format))?;
    Ok(0)
}

fn parse_list(spec: &str) -> Result<Vec<f64>, Box<dyn std::error::Error>> {
    if let Some((a, b)) = spec.split_once("..") {
        let (lo, hi): (f64, f64) = (a.parse()?, b.parse()?);
        if !(lo > 0.0 && hi > lo) {
            return Err("range must satisfy 0 < lo < hi".into());
        }
        let mut v = vec![lo];
        let mut x = lo;
        while x * 10.0 <= hi * 1.0000001 {
            x *= 10.0;
            v.push(x);
        }
        Ok(v)
    } else {
        Ok(spec
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()?)
    }
}

fn rate_output(
    series: &verify::RateSeries,
    target: f64,
    window: f64,
    pass: bool,
    format: Format,
    gnuplot: bool,
) -> String {
    if gnuplot {
        let mut s = String::new();
        for (p, g) in series.params.iter().zip(&series.gaps) {
            s.push_str(&format!("{p} {g}\n"));
        }
        return s;
    }
    match format {
        Format::Json => format!(
            "{:#}\n",
            json!({
                "schema_version": 1,
                "params": series.params,
                "gaps": series.gaps,
                "fitted_slope": series.fitted_slope,
                "slope_stderr": series.slope_stderr,
                "target_slope": target,
                "window": window,
                "pass": pass,
            })
        ),
        Format::Csv => {
            let mut buf = Vec::new();
            series.write_csv(&mut buf).expect("in-memory write");
            String::from_utf8(buf).expect("csv is utf-8")
        }
    }
}

fn run_verify(cmd: VerifyCmd) -> Result<u8, Box<dyn std::error::Error>> {
    match cmd.kind {
        VerifyKind::RatePoisson {
            beta,
            lambdas,
            n_max,
            grid_size,
            out,
            format,
            gnuplot,
        } => {
            let e = make_embedding(beta, n_max, grid_size)?;
            let theta: Vec<f64> = (0..n_max.min(4)).map(|i| 0.5f64.powi(i as i32)).collect();
            let ls = parse_list(&lambdas)?;
            let mut points = Vec::new();
            for &l in &ls {
                points.push((l, verify::char_gap_poisson(&e, l, &theta)?));
            }
            let fit = verify::rate_fit(&points)?;
            let pass = (fit.fitted_slope + 0.5).abs() <= 0.1;
            write_output(&out, &rate_output(&fit, -0.5, 0.1, pass, format, gnuplot))?;
            eprintln!(
                "rate-poisson: slope {:.4} target -0.5 +- 0.1: {}",
                fit.fitted_slope,
                if pass { "pass" } else { "FAIL" }
            );
            Ok(if pass { 0 } else { 2 })
        }
        VerifyKind::RateInterp {
            beta,
            m,
            n_max,
            grid_size,
            out,
            format,
            gnuplot,
        } => {
            let e = make_embedding(beta, n_max, grid_size)?;
            let ms = parse_list(&m)?;
            let mut points = Vec::new();
            for &mf in &ms {
                let m = mf as usize;
                points.push((mf, stein::trace_gap_interp(&e, m)?));
            }
            let fit = verify::rate_fit(&points)?;
            let target = 2.0 * beta - 1.0;
            let pass = (fit.fitted_slope - target).abs() <= 0.15;
            write_output(
                &out,
                &rate_output(&fit, target, 0.15, pass, format, gnuplot),
            )?;
            eprintln!(
                "rate-interp: slope {:.4} target {:.2} +- 0.15: {}",
                fit.fitted_slope,
                target,
                if pass { "pass" } else { "FAIL" }
            );
            Ok(if pass { 0 } else { 2 })
        }
        VerifyKind::Cov {
            process,
            beta,
            lambda,
            m,
            samples,
            seed,
            n_max,
            grid_size,
            out,
        } => {
            let e = make_embedding(beta, n_max, grid_size)?;
            let (name, analytic): (&str, CovOperator) = match process {
                CovProcess::Poisson => ("poisson", e.covariance_matrix()?.clone()),
                CovProcess::Interp => {
                    let m = m.ok_or("--m is required for process interp")?;
                    ("interp", partial_trace(&e.interp_family(m)?)?)
                }
                CovProcess::Donsker => {
                    let m = m.ok_or("--m is required for process donsker")?;
                    ("donsker", partial_trace(&e.donsker_family(m)?)?)
                }
                CovProcess::Bm => ("bm", e.series_covariance()?),
            };
            let lam = lambda.unwrap_or(50.0);
            let mc = match process {
                CovProcess::Poisson => verify::covariance_mc(beta, n_max, samples, seed, |rng| {
                    let p =
                        processes::sample_poisson_with_rng(lam, rng).expect("validated intensity");
                    e.embed_step_path(&p).expect("jumps in range").coeffs
                })?,
                CovProcess::Interp => {
                    let m = m.expect("checked above");
                    verify::covariance_mc(beta, n_max, samples, seed, |rng| {
                        let p = processes::sample_interp_bm_with_rng(m, rng).expect("validated m");
                        e.embed_piecewise_linear(&p).expect("valid path").coeffs
                    })?
                }
                CovProcess::Donsker => {
                    let m = m.expect("checked above");
                    verify::covariance_mc(beta, n_max, samples, seed, |rng| {
                        let p = processes::sample_donsker_with_rng(m, rng).expect("validated m");
                        e.embed_piecewise_linear(&p).expect("valid path").coeffs
                    })?
                }
                CovProcess::Bm => verify::covariance_mc(beta, n_max, samples, seed, |rng| {
                    let (_, emb) =
                        processes::sample_bm_series_with_rng(&e, rng).expect("valid params");
                    emb.coeffs
                })?,
            };
            let dev = mc.max_se_deviation(&analytic)?;
            let pass = dev < verify::SE_TOLERANCE;
            let report = json!({
                "schema_version": 1,
                "process": name,
                "beta": beta,
                "lambda": lambda,
                "m": m,
                "n_max": n_max,
                "n_samples": samples,
                "seed": seed,
                "generator": GENERATOR_ID,
                "max_se_deviation": dev,
                "se_tolerance": verify::SE_TOLERANCE,
                "pass": pass,
            });
            write_output(&out, &format!("{report:#}\n"))?;
            eprintln!(
                "cov {name}: max |emp - analytic| = {dev:.2} SE: {}",
                if pass { "pass" } else { "FAIL" }
            );
            Ok(if pass { 0 } else { 2 })
        }
        VerifyKind::Cumulant {
            beta,
            lambda,
            samples,
            seed,
            n_max,
            grid_size,
            out,
        } => {
            let e = make_embedding(beta, n_max, grid_size)?;
            let mut v = vec![0.0; n_max];
            v[0] = 1.0;
            let (est, oracle) = verify::third_cumulant_poisson(&e, lambda, &v, samples, seed)?;
            let dev = (est.mean - oracle).abs() / est.std_error;
            let pass = dev < verify::SE_TOLERANCE;
            let report = json!({
                "schema_version": 1,
                "beta": beta,
                "lambda": lambda,
                "direction": "first coordinate",
                "mc": { "mean": est.mean, "std_error": est.std_error,
                        "n_samples": est.n_samples, "seed": est.seed },
                "generator": GENERATOR_ID,
                "oracle": oracle,
                "se_deviation": dev,
                "pass": pass,
            });
            write_output(&out, &format!("{report:#}\n"))?;
            eprintln!(
                "cumulant: MC {:.6} +- {:.6} vs oracle {:.6} ({:.2} SE): {}",
                est.mean,
                est.std_error,
                oracle,
                dev,
                if pass { "pass" } else { "FAIL" }
            );
            Ok(if pass { 0 } else { 2 })
        }
    }
}

fn metadata_header(fields: serde_json::Value) -> String {
    format!("# {fields}\n")
}

fn run_simulate(cmd: SimulateCmd) -> Result<u8, Box<dyn std::error::Error>> {
    match cmd.kind {
        SimulateKind::Poisson { lambda, seed, out } => {
            let path = processes::sample_poisson(lambda, seed)?;
            let mut s = metadata_header(json!({
                "schema_version": 1, "process": "poisson", "generator": GENERATOR_ID,
                "seed": seed, "lambda": lambda,
                "jump_size": path.jump_sizes().first().copied().unwrap_or(0.0),
                "drift": path.drift(),
            }));
            let mut buf = Vec::new();
            path.write_csv(&mut buf)?;
            s.push_str(&String::from_utf8(buf)?);
            write_output(&out, &s)?;
        }
        SimulateKind::Interp { m, seed, out } => {
            let path = processes::sample_interp_bm(m, seed)?;
            let mut s = metadata_header(json!({
                "schema_version": 1, "process": "interp", "generator": GENERATOR_ID,
                "seed": seed, "m": m,
            }));
            let mut buf = Vec::new();
            path.write_csv(&mut buf)?;
            s.push_str(&String::from_utf8(buf)?);
            write_output(&out, &s)?;
        }
        SimulateKind::Donsker { m, seed, out } => {
            let path = processes::sample_donsker(m, seed)?;
            let mut s = metadata_header(json!({
                "schema_version": 1, "process": "donsker", "generator": GENERATOR_ID,
                "seed": seed, "m": m,
            }));
            let mut buf = Vec::new();
            path.write_csv(&mut buf)?;
            s.push_str(&String::from_utf8(buf)?);
            write_output(&out, &s)?;
        }
        SimulateKind::Bm {
            beta,
            n_max,
            grid_size,
            seed,
            out,
        } => {
            let e = make_embedding(beta, n_max, grid_size)?;
            let (path, _) = processes::sample_bm_series(&e, seed)?;
            let mut s = metadata_header(json!({
                "schema_version": 1, "process": "bm_series", "generator": GENERATOR_ID,
                "seed": seed, "beta": beta, "n_max": n_max, "grid_size": grid_size,
            }));
            let mut buf = Vec::new();
            path.write_csv(&mut buf)?;
            s.push_str(&String::from_utf8(buf)?);
            write_output(&out, &s)?;
        }
        SimulateKind::Fbm {
            hurst,
            grid_size,
            seed,
            out,
        } => {
            let path = processes::sample_fbm(hurst, Grid::new(grid_size)?, seed)?;
            let mut s = metadata_header(json!({
                "schema_version": 1, "process": "fbm", "generator": GENERATOR_ID,
                "seed": seed, "hurst": hurst, "grid_size": grid_size,
            }));
            let mut buf = Vec::new();
            path.write_csv(&mut buf)?;
            s.push_str(&String::from_utf8(buf)?);
            write_output(&out, &s)?;
        }
    }
    Ok(0)
}
