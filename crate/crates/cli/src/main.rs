//! Command line front end: frequency-set dumps, kernel tables, coefficient
//! filtering, m-term sweeps, sampling recovery and report post-processing.

use clap::{Parser, Subcommand, ValueEnum};
use crosslab::error::{Error, Result};
use crosslab::freq::{cross_indices, layer_indices, FreqIndex};
use crosslab::kernels::{block_eval, dirichlet_eval, vp_eval, BernoulliSpec};
use crosslab::lab::{
    compare_markdown, fit_report, format_report, parse_report, registry_function,
    run_experiment_streaming, ExperimentConfig, FunctionParams, Method, ReportRow, REPORT_HEADER,
};
use crosslab::mterm::{
    default_kappa, default_zeta, greedy_mterm_with, layered_mterm_with, plan_budget_h,
    plan_budget_w,
};
use crosslab::poly::TrigPolynomial;
use crosslab::smolyak::{smolyak_recover, sparse_grid_size, Sampler};
use crosslab::spectral::{norm_poly_lp, LayerKind, DEFAULT_OVERSAMPLE};
use num_complex::Complex64;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "crosslab", about = "hyperbolic-cross approximation laboratory", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelType {
    Dirichlet,
    Vp,
    Block,
    Bernoulli,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProjectKind {
    Sharp,
    Vp,
}

#[derive(Clone, Copy, ValueEnum)]
enum MtermClass {
    #[value(name = "W")]
    W,
    #[value(name = "H")]
    H,
}

#[derive(Clone, Copy, ValueEnum)]
enum MtermMethod {
    Greedy,
    Layered,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the step hyperbolic cross Q_n (or the layer ΔQ_n), one
    /// frequency per line as comma-separated integers.
    Cross {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        level: u32,
        /// emit only the outermost layer instead of the whole cross
        #[arg(long)]
        layer: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a univariate kernel on a uniform grid (`x,value` lines), or
    /// dump the Bernoulli coefficient table as `k1,...,kd,re,im`.
    Kernel {
        #[arg(long = "type", value_enum)]
        kind: KernelType,
        /// kernel order (dirichlet/vp) or dyadic scale (block)
        #[arg(long, default_value_t = 8)]
        m: u32,
        #[arg(long, default_value_t = 512)]
        samples: usize,
        /// bernoulli: smoothness exponent
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        /// bernoulli: phase per axis (repeat for each axis)
        #[arg(long)]
        alpha: Vec<f64>,
        /// bernoulli: one-sided truncation order
        #[arg(long, default_value_t = 64)]
        kmax: u32,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply the sharp projection S_{Q_n} or the de la Vallée Poussin
    /// operator A_{Q_n} to a coefficient file.
    Project {
        #[arg(long)]
        level: u32,
        #[arg(long, value_enum)]
        kind: ProjectKind,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// One m-term approximation run on a registry function; writes a
    /// single-row report.
    Mterm {
        #[arg(long, value_enum)]
        class: MtermClass,
        #[arg(long)]
        r: f64,
        /// integrability exponent; use `inf` for L_infinity
        #[arg(long, value_parser = parse_p_flag)]
        p: f64,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        zeta: Option<f64>,
        #[arg(long, value_enum)]
        method: MtermMethod,
        #[arg(long = "fn")]
        function: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        level: Option<u32>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long = "box")]
        box_size: Option<i64>,
        #[arg(long, default_value_t = DEFAULT_OVERSAMPLE)]
        oversample: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sparse-grid sampling recovery of a registry function at one level;
    /// writes a single-row report.
    Smolyak {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        level: u32,
        #[arg(long = "fn")]
        function: String,
        #[arg(long, default_value_t = 0.4)]
        r: f64,
        #[arg(long, value_parser = parse_p_flag, default_value = "inf")]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        fn_level: Option<u32>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long = "box")]
        box_size: Option<i64>,
        #[arg(long, default_value_t = DEFAULT_OVERSAMPLE)]
        oversample: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full error-vs-m sweep described by a TOML config file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// overrides the output path from the config
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit decay exponents to a report file.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        loglog: bool,
        /// fit the L2 error column instead of L_infinity
        #[arg(long)]
        l2: bool,
    },
    /// Merge two reports into a Markdown comparison table.
    Compare {
        #[arg(long = "in", num_args = 1, action = clap::ArgAction::Append)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_p_flag(s: &str) -> std::result::Result<f64, String> {
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    s.parse().map_err(|_| format!("bad exponent '{s}'"))
}

fn write_text(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Coefficient CSV: one line per frequency, `k1,...,kd,re,im`, no header.
fn read_coeffs(path: &PathBuf) -> Result<TrigPolynomial> {
    let text = fs::read_to_string(path)?;
    let mut dim = None;
    let mut pairs = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() < 3 {
            return Err(Error::Config(format!(
                "line {}: need k1,...,kd,re,im",
                no + 1
            )));
        }
        let d = parts.len() - 2;
        match dim {
            None => dim = Some(d),
            Some(prev) if prev != d => {
                return Err(Error::Config(format!(
                    "line {}: dimension changed from {prev} to {d}",
                    no + 1
                )))
            }
            _ => {}
        }
        let mut k = Vec::with_capacity(d);
        for part in &parts[..d] {
            k.push(part.trim().parse::<i32>().map_err(|_| {
                Error::Config(format!("line {}: bad frequency '{part}'", no + 1))
            })?);
        }
        let re: f64 = parts[d]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("line {}: bad re part", no + 1)))?;
        let im: f64 = parts[d + 1]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("line {}: bad im part", no + 1)))?;
        pairs.push((FreqIndex::new(k), Complex64::new(re, im)));
    }
    let dim = dim.ok_or_else(|| Error::Config("empty coefficient file".into()))?;
    TrigPolynomial::from_coeffs(dim, pairs)
}

fn format_coeffs(f: &TrigPolynomial) -> String {
    let mut out = String::new();
    for (k, c) in f.iter() {
        for kj in k.coords() {
            out.push_str(&format!("{kj},"));
        }
        out.push_str(&format!("{},{}\n", c.re, c.im));
    }
    out
}

fn function_params(
    r: f64,
    p: f64,
    seed: u64,
    level: Option<u32>,
    beta: Option<f64>,
    box_size: Option<i64>,
    oversample: usize,
) -> FunctionParams {
    let defaults = FunctionParams::default();
    FunctionParams {
        r,
        p,
        seed,
        oversample,
        level: level.unwrap_or(defaults.level),
        beta: beta.unwrap_or(defaults.beta),
        box_size: box_size.unwrap_or(defaults.box_size),
        ..defaults
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Cross {
            dim,
            level,
            layer,
            out,
        } => {
            let set = if layer {
                layer_indices(level, dim)?
            } else {
                cross_indices(level, dim)?
            };
            let mut text = String::new();
            for k in set.iter() {
                let line: Vec<String> = k.coords().iter().map(|v| v.to_string()).collect();
                text.push_str(&line.join(","));
                text.push('\n');
            }
            write_text(out.as_ref(), &text)
        }
        Command::Kernel {
            kind,
            m,
            samples,
            r,
            alpha,
            kmax,
            dim,
            out,
        } => {
            let text = match kind {
                KernelType::Bernoulli => {
                    let alpha = if alpha.is_empty() { vec![0.0; dim] } else { alpha };
                    let spec = BernoulliSpec::new(r, alpha, kmax)?;
                    format_coeffs(&crosslab::kernels::bernoulli_poly(&spec)?)
                }
                _ => {
                    if samples == 0 {
                        return Err(Error::InvalidParameter("need samples > 0".into()));
                    }
                    let eval: Box<dyn Fn(f64) -> f64> = match kind {
                        KernelType::Dirichlet => Box::new(move |t| dirichlet_eval(m, t)),
                        KernelType::Vp => Box::new(move |t| vp_eval(m, t)),
                        KernelType::Block => Box::new(move |t| block_eval(m, t)),
                        KernelType::Bernoulli => unreachable!(),
                    };
                    let mut text = String::new();
                    for j in 0..samples {
                        let x = 2.0 * std::f64::consts::PI * j as f64 / samples as f64;
                        text.push_str(&format!("{x},{}\n", eval(x)));
                    }
                    text
                }
            };
            write_text(out.as_ref(), &text)
        }
        Command::Project {
            level,
            kind,
            input,
            out,
        } => {
            let f = read_coeffs(&input)?;
            let g = match kind {
                ProjectKind::Sharp => crosslab::spectral::project_cross(&f, level),
                ProjectKind::Vp => crosslab::spectral::vp_cross(&f, level),
            };
            write_text(Some(&out), &format_coeffs(&g))
        }
        Command::Mterm {
            class,
            r,
            p,
            m,
            kappa,
            zeta,
            method,
            function,
            dim,
            seed,
            level,
            beta,
            box_size,
            oversample,
            out,
        } => {
            let params = function_params(r, p, seed, level, beta, box_size, oversample);
            let f = registry_function(&function, &params, dim)?;
            let (name, res) = match method {
                MtermMethod::Greedy => (
                    Method::Greedy.name(),
                    greedy_mterm_with(&f, m as usize, oversample)?,
                ),
                MtermMethod::Layered => {
                    let kappa = kappa.unwrap_or_else(|| default_kappa(r));
                    let zeta = zeta.unwrap_or_else(|| default_zeta(r, p));
                    match class {
                        MtermClass::W => {
                            let plan = plan_budget_w(m, r, p, dim, kappa, zeta)?;
                            (
                                Method::LayeredW.name(),
                                layered_mterm_with(&f, &plan, LayerKind::Sharp, oversample)?,
                            )
                        }
                        MtermClass::H => {
                            let plan = plan_budget_h(m, r, p, dim, kappa, zeta)?;
                            (
                                Method::LayeredH.name(),
                                layered_mterm_with(&f, &plan, LayerKind::Vp, oversample)?,
                            )
                        }
                    }
                }
            };
            let row = ReportRow {
                method: name.to_string(),
                d: dim,
                class: match class {
                    MtermClass::W => "W".into(),
                    MtermClass::H => "H".into(),
                },
                r,
                p,
                m,
                error_linf: res.error_linf,
                error_l2: res.error_l2,
                units_used: res.terms_used,
                seconds: 0.0,
            };
            write_text(Some(&out), &format_report(&[row]))
        }
        Command::Smolyak {
            dim,
            level,
            function,
            r,
            p,
            seed,
            fn_level,
            beta,
            box_size,
            oversample,
            out,
        } => {
            let params = function_params(r, p, seed, fn_level, beta, box_size, oversample);
            let f = registry_function(&function, &params, dim)?;
            let sampler = Sampler::from_poly(&f);
            let g = smolyak_recover(&sampler, level, dim)?;
            let diff = f.sub(&g);
            let row = ReportRow {
                method: Method::Smolyak.name().to_string(),
                d: dim,
                class: "H".into(),
                r,
                p,
                m: sparse_grid_size(level, dim)?,
                error_linf: norm_poly_lp(&diff, f64::INFINITY, oversample)?,
                error_l2: diff.l2_norm(),
                units_used: sampler.call_count(),
                seconds: 0.0,
            };
            write_text(Some(&out), &format_report(&[row]))
        }
        Command::Bench { config, out } => {
            let text = fs::read_to_string(&config)?;
            let cfg = ExperimentConfig::from_toml(&text)?;
            let path = out
                .or_else(|| cfg.output.clone().map(PathBuf::from))
                .ok_or_else(|| {
                    Error::Config("no output path (set `output` in the config or pass --out)".into())
                })?;
            let mut file = fs::File::create(&path)?;
            writeln!(file, "{REPORT_HEADER}")?;
            // rows hit the disk as they finish so an aborted sweep keeps
            // its partial results
            run_experiment_streaming(&cfg, |row| {
                writeln!(file, "{}", row.to_csv_line())?;
                file.flush().map_err(Error::from)
            })?;
            Ok(())
        }
        Command::Fit { input, loglog, l2 } => {
            let rows = parse_report(&fs::read_to_string(&input)?)?;
            let fit = fit_report(&rows, l2, loglog)?;
            println!(
                "main_rate {:.6}\nlog_power {:.6}\nresidual {:.6e}\nwindow {}..{}",
                fit.main_rate, fit.log_power, fit.residual, fit.window.0, fit.window.1
            );
            Ok(())
        }
        Command::Compare { input, out } => {
            if input.len() != 2 {
                return Err(Error::InvalidParameter(
                    "compare needs exactly two --in files".into(),
                ));
            }
            let a = parse_report(&fs::read_to_string(&input[0])?)?;
            let b = parse_report(&fs::read_to_string(&input[1])?)?;
            write_text(Some(&out), &compare_markdown(&a, &b)?)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
