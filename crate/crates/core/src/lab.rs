//! Experiment orchestration: test-function registry, error-vs-m sweeps for
//! every method, rate fitting with logarithmic corrections, and report
//! formatting.
//!
//! Reports are CSV with the fixed header
//! `method,d,class,r,p,m,error_linf,error_l2,units_used,seconds`; p = ∞ is
//! written as `inf`. The `seconds` column is 0.000000 unless timing is
//! explicitly enabled, so a fixed config and seed reproduce byte-identical
//! files.

use crate::error::{Error, Result};
use crate::freq::{block_indices, cross_cardinality, scales_up_to};
use crate::kernels::{bernoulli_poly, BernoulliSpec};
use crate::mterm::{
    default_kappa, default_zeta, greedy_mterm_with, layered_mterm_with, measure_error,
    plan_budget_h, plan_budget_w,
};
use crate::poly::TrigPolynomial;
use crate::smolyak::{smolyak_recover, sparse_grid_size, Sampler};
use crate::spectral::{
    norm_poly_lp, norm_smoothness, project_cross, Family, LayerKind, SmoothnessSpec,
    DEFAULT_OVERSAMPLE,
};
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::fmt::Write as _;
use std::time::Instant;

pub const REPORT_HEADER: &str = "method,d,class,r,p,m,error_linf,error_l2,units_used,seconds";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Greedy,
    LayeredW,
    LayeredH,
    Projection,
    Smolyak,
}

impl Method {
    pub fn parse(s: &str) -> Result<Method> {
        match s {
            "greedy" => Ok(Method::Greedy),
            "layered_W" => Ok(Method::LayeredW),
            "layered_H" => Ok(Method::LayeredH),
            "projection" => Ok(Method::Projection),
            "smolyak" => Ok(Method::Smolyak),
            other => Err(Error::InvalidParameter(format!(
                "unknown method '{other}' (expected greedy | layered_W | layered_H | projection | smolyak)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Greedy => "greedy",
            Method::LayeredW => "layered_W",
            Method::LayeredH => "layered_H",
            Method::Projection => "projection",
            Method::Smolyak => "smolyak",
        }
    }
}

/// Parameters accepted by the function registry; unused fields are ignored
/// by each family.
#[derive(Clone, Debug)]
pub struct FunctionParams {
    /// smoothness for bernoulli and the ball families
    pub r: f64,
    /// integrability exponent for the ball norms (∞ allowed)
    pub p: f64,
    pub alpha: Vec<f64>,
    /// one-sided frequency cutoff for bernoulli
    pub kmax: u32,
    /// tensor_decay exponent
    pub beta: f64,
    /// tensor_decay per-axis box radius
    pub box_size: i64,
    /// ball support level (support = Q_level)
    pub level: u32,
    pub seed: u64,
    /// oversampling for the grid norms used in ball rescaling
    pub oversample: usize,
}

impl Default for FunctionParams {
    fn default() -> Self {
        FunctionParams {
            r: 0.4,
            p: f64::INFINITY,
            alpha: Vec::new(),
            kmax: 64,
            beta: 2.0,
            box_size: 64,
            level: 6,
            seed: 0,
            oversample: DEFAULT_OVERSAMPLE,
        }
    }
}

fn tensor_decay(beta: f64, box_size: i64, d: usize) -> Result<TrigPolynomial> {
    if box_size < 0 {
        return Err(Error::InvalidParameter("box radius must be >= 0".into()));
    }
    let per_axis = 2 * box_size as u128 + 1;
    let total = per_axis.pow(d as u32);
    if total > crate::grid::GRID_CAP as u128 {
        return Err(Error::ResourceLimit {
            what: "tensor_decay support",
            requested: total,
            cap: crate::grid::GRID_CAP as u128,
        });
    }
    let mut out = TrigPolynomial::new(d);
    let mut k = vec![-box_size; d];
    loop {
        let w: f64 = k
            .iter()
            .map(|&kj| (kj.unsigned_abs().max(1) as f64).powf(-beta))
            .product();
        out.set_coeff(
            crate::freq::FreqIndex::new(k.iter().map(|&v| v as i32).collect::<Vec<_>>()),
            Complex64::new(w, 0.0),
        );
        let mut axis = d;
        loop {
            if axis == 0 {
                return Ok(out);
            }
            axis -= 1;
            k[axis] += 1;
            if k[axis] <= box_size {
                break;
            }
            k[axis] = -box_size;
        }
    }
}

/// Seeded random polynomial on Q_level with exact unit class norm: the
/// sharp blocks are first rescaled to ‖δ_s f‖_p = 2^{−r‖s‖₁}, then the
/// whole polynomial is divided by its measured class norm.
fn random_ball(spec: &SmoothnessSpec, level: u32, d: usize, seed: u64, oversample: usize) -> Result<TrigPolynomial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = TrigPolynomial::new(d);
    for s in scales_up_to(level, d) {
        let set = block_indices(&s);
        let raw: Vec<(crate::freq::FreqIndex, Complex64)> = set
            .iter()
            .map(|kk| {
                (
                    kk.clone(),
                    Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
                )
            })
            .collect();
        let piece = TrigPolynomial::from_coeffs(d, raw.clone())?;
        let nrm = norm_poly_lp(&piece, spec.p, oversample)?;
        if nrm == 0.0 {
            continue;
        }
        let scale = (2.0f64).powf(-spec.r * s.level() as f64) / nrm;
        for (kk, c) in raw {
            out.add_to_coeff(kk, c * scale);
        }
    }
    let total = norm_smoothness(&out, spec, oversample)?;
    if total == 0.0 {
        return Err(Error::InvalidParameter(
            "degenerate random ball instance".into(),
        ));
    }
    Ok(out.scale(Complex64::new(1.0 / total, 0.0)))
}

/// Named test functions: `bernoulli`, `tensor_decay`, `random_H_ball`,
/// `random_W_ball`.
pub fn registry_function(name: &str, params: &FunctionParams, d: usize) -> Result<TrigPolynomial> {
    match name {
        "bernoulli" => {
            let alpha = if params.alpha.is_empty() {
                vec![0.0; d]
            } else {
                params.alpha.clone()
            };
            if alpha.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: alpha.len(),
                });
            }
            let spec = BernoulliSpec::new(params.r, alpha, params.kmax)?;
            bernoulli_poly(&spec)
        }
        "tensor_decay" => tensor_decay(params.beta, params.box_size, d),
        "random_H_ball" => {
            let spec = SmoothnessSpec::h(params.r, params.p)?;
            random_ball(&spec, params.level, d, params.seed, params.oversample)
        }
        "random_W_ball" => {
            let spec = SmoothnessSpec::w(params.r, params.p)?;
            random_ball(&spec, params.level, d, params.seed, params.oversample)
        }
        other => Err(Error::UnknownFunction(other.to_string())),
    }
}

/// Geometric m schedule.
#[derive(Clone, Debug, Deserialize)]
pub struct Schedule {
    pub first: u64,
    pub last: u64,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
}

fn default_ratio() -> f64 {
    2.0
}

impl Schedule {
    pub fn expand(&self) -> Result<Vec<u64>> {
        if self.first == 0 || self.last < self.first {
            return Err(Error::InvalidParameter(
                "schedule needs 1 <= first <= last".into(),
            ));
        }
        if !(self.ratio > 1.0) {
            return Err(Error::InvalidParameter("schedule ratio must be > 1".into()));
        }
        let mut out = vec![self.first];
        loop {
            let prev = *out.last().unwrap();
            let next = ((prev as f64 * self.ratio).ceil() as u64).max(prev + 1);
            if next > self.last {
                break;
            }
            out.push(next);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Deserialize)]
pub struct ClassConfig {
    pub family: String,
    pub r: f64,
    pub p: f64,
    pub q: Option<f64>,
    pub kappa: Option<f64>,
    pub zeta: Option<f64>,
}

impl ClassConfig {
    pub fn family(&self) -> Result<Family> {
        match self.family.as_str() {
            "W" => Ok(Family::W),
            "H" => Ok(Family::H),
            "B" => Ok(Family::B),
            other => Err(Error::Config(format!("unknown class family '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
pub struct FunctionConfig {
    pub name: String,
    pub r: Option<f64>,
    pub alpha: Option<Vec<f64>>,
    pub kmax: Option<u32>,
    pub beta: Option<f64>,
    #[serde(rename = "box")]
    pub box_size: Option<i64>,
    pub level: Option<u32>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ExperimentConfig {
    pub method: String,
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
    pub oversample: Option<usize>,
    pub output: Option<String>,
    #[serde(default)]
    pub timing: bool,
    pub class: ClassConfig,
    pub schedule: Schedule,
    pub function: FunctionConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn function_params(&self) -> FunctionParams {
        let f = &self.function;
        let defaults = FunctionParams::default();
        FunctionParams {
            r: f.r.unwrap_or(self.class.r),
            p: self.class.p,
            alpha: f.alpha.clone().unwrap_or_default(),
            kmax: f.kmax.unwrap_or(defaults.kmax),
            beta: f.beta.unwrap_or(defaults.beta),
            box_size: f.box_size.unwrap_or(defaults.box_size),
            level: f.level.unwrap_or(defaults.level),
            seed: self.seed,
            oversample: self.oversample.unwrap_or(DEFAULT_OVERSAMPLE),
        }
    }
}

/// One output row of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub d: usize,
    pub class: String,
    pub r: f64,
    pub p: f64,
    pub m: u64,
    pub error_linf: f64,
    pub error_l2: f64,
    pub units_used: u64,
    pub seconds: f64,
}

fn format_p(p: f64) -> String {
    if p.is_infinite() {
        "inf".to_string()
    } else {
        format!("{p}")
    }
}

fn parse_p(s: &str) -> Result<f64> {
    if s == "inf" {
        Ok(f64::INFINITY)
    } else {
        s.parse()
            .map_err(|_| Error::Config(format!("bad p field '{s}'")))
    }
}

impl ReportRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.12e},{:.12e},{},{:.6}",
            self.method,
            self.d,
            self.class,
            self.r,
            format_p(self.p),
            self.m,
            self.error_linf,
            self.error_l2,
            self.units_used,
            self.seconds
        )
    }

    pub fn parse_csv_line(line: &str) -> Result<ReportRow> {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 10 {
            return Err(Error::Config(format!(
                "report row needs 10 fields, got {}: '{line}'",
                parts.len()
            )));
        }
        let num = |s: &str, what: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Config(format!("bad {what} field '{s}'")))
        };
        let int = |s: &str, what: &str| -> Result<u64> {
            s.parse()
                .map_err(|_| Error::Config(format!("bad {what} field '{s}'")))
        };
        Ok(ReportRow {
            method: parts[0].to_string(),
            d: int(parts[1], "d")? as usize,
            class: parts[2].to_string(),
            r: num(parts[3], "r")?,
            p: parse_p(parts[4])?,
            m: int(parts[5], "m")?,
            error_linf: num(parts[6], "error_linf")?,
            error_l2: num(parts[7], "error_l2")?,
            units_used: int(parts[8], "units_used")?,
            seconds: num(parts[9], "seconds")?,
        })
    }
}

/// Serializes rows with the fixed header.
pub fn format_report(rows: &[ReportRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

/// Parses a report produced by `format_report`.
pub fn parse_report(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == REPORT_HEADER => {}
        other => {
            return Err(Error::Config(format!(
                "missing or wrong report header: {other:?}"
            )))
        }
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(ReportRow::parse_csv_line)
        .collect()
}

/// Runs the configured sweep, handing each finished row to `sink` before
/// moving on (so partial results survive mid-sweep failures).
pub fn run_experiment_streaming(
    cfg: &ExperimentConfig,
    mut sink: impl FnMut(&ReportRow) -> Result<()>,
) -> Result<Vec<ReportRow>> {
    let method = Method::parse(&cfg.method)?;
    let family = cfg.class.family()?;
    let oversample = cfg.oversample.unwrap_or(DEFAULT_OVERSAMPLE);
    let schedule = cfg.schedule.expand()?;
    let f = registry_function(&cfg.function.name, &cfg.function_params(), cfg.dim)?;
    let kappa = cfg.class.kappa.unwrap_or_else(|| default_kappa(cfg.class.r));
    let zeta = cfg
        .class
        .zeta
        .unwrap_or_else(|| default_zeta(cfg.class.r, cfg.class.p));
    let mut rows = Vec::with_capacity(schedule.len());
    for &m in &schedule {
        let start = Instant::now();
        let (units, error_linf, error_l2) = match method {
            Method::Greedy => {
                let res = greedy_mterm_with(&f, m as usize, oversample)?;
                (res.terms_used, res.error_linf, res.error_l2)
            }
            Method::LayeredW => {
                let plan = plan_budget_w(m, cfg.class.r, cfg.class.p, cfg.dim, kappa, zeta)?;
                let res = layered_mterm_with(&f, &plan, LayerKind::Sharp, oversample)?;
                (res.terms_used, res.error_linf, res.error_l2)
            }
            Method::LayeredH => {
                let plan = plan_budget_h(m, cfg.class.r, cfg.class.p, cfg.dim, kappa, zeta)?;
                let res = layered_mterm_with(&f, &plan, LayerKind::Vp, oversample)?;
                (res.terms_used, res.error_linf, res.error_l2)
            }
            Method::Projection => {
                let mut level = 0u32;
                while cross_cardinality(level + 1, cfg.dim)? <= m {
                    level += 1;
                }
                let g = project_cross(&f, level);
                let linf = measure_error(&f, &g, f64::INFINITY, oversample)?;
                let l2 = measure_error(&f, &g, 2.0, oversample)?;
                (g.len() as u64, linf, l2)
            }
            Method::Smolyak => {
                let mut level = 0u32;
                while sparse_grid_size(level + 1, cfg.dim)? <= m {
                    level += 1;
                }
                let sampler = Sampler::from_poly(&f);
                let g = smolyak_recover(&sampler, level, cfg.dim)?;
                let diff = f.sub(&g);
                let linf = norm_poly_lp(&diff, f64::INFINITY, oversample)?;
                let l2 = diff.l2_norm();
                (sampler.call_count(), linf, l2)
            }
        };
        let row = ReportRow {
            method: method.name().to_string(),
            d: cfg.dim,
            class: format!("{family}"),
            r: cfg.class.r,
            p: cfg.class.p,
            m,
            error_linf,
            error_l2,
            units_used: units,
            seconds: if cfg.timing {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            },
        };
        sink(&row)?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    run_experiment_streaming(cfg, |_| Ok(()))
}

/// Fitted error-decay exponents of e(m) ≈ C · m^{−main_rate} (log m)^{log_power}.
#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    /// exponent of m (positive for decaying errors)
    pub main_rate: f64,
    /// exponent of log m (0 when not fitted)
    pub log_power: f64,
    /// reserved for a (log log m)^γ correction; never fitted here because
    /// desk-scale data cannot resolve it
    pub loglog_power: Option<f64>,
    /// RMS residual of the log-log regression
    pub residual: f64,
    /// (m_min, m_max) actually used
    pub window: (u64, u64),
}

/// Solves the k×k normal equations by Gaussian elimination with partial
/// pivoting.
fn solve_normal(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let k = b.len();
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return Err(Error::DegenerateFit(
                "design matrix is rank-deficient on this window".into(),
            ));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            for c in col..k {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for col in (0..k).rev() {
        let mut v = b[col];
        for c in col + 1..k {
            v -= a[col][c] * x[c];
        }
        x[col] = v / a[col][col];
    }
    Ok(x)
}

/// Ordinary least squares of ln e on [1, ln m] and optionally ln ln m,
/// over the rows with m ≥ 16 and positive error.
pub fn fit_rate(points: &[(u64, f64)], with_loglog: bool) -> Result<RateFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(m, e)| m >= 16 && e > 0.0)
        .map(|&(m, e)| ((m as f64).ln(), e.ln()))
        .collect();
    if usable.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "need at least 4 rows with m >= 16 and positive error, got {}",
            usable.len()
        )));
    }
    let k = if with_loglog { 3 } else { 2 };
    let design: Vec<Vec<f64>> = usable
        .iter()
        .map(|&(lx, _)| {
            let mut row = vec![1.0, lx];
            if with_loglog {
                row.push(lx.ln());
            }
            row.truncate(k);
            row
        })
        .collect();
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for (row, &(_, ly)) in design.iter().zip(usable.iter()) {
        for i in 0..k {
            for j in 0..k {
                xtx[i][j] += row[i] * row[j];
            }
            xty[i] += row[i] * ly;
        }
    }
    let coef = solve_normal(xtx, xty)?;
    let mut ss = 0.0;
    for (row, &(_, ly)) in design.iter().zip(usable.iter()) {
        let fit: f64 = row.iter().zip(coef.iter()).map(|(a, b)| a * b).sum();
        ss += (ly - fit) * (ly - fit);
    }
    let ms: Vec<u64> = points
        .iter()
        .filter(|&&(m, e)| m >= 16 && e > 0.0)
        .map(|&(m, _)| m)
        .collect();
    Ok(RateFit {
        main_rate: -coef[1],
        log_power: if with_loglog { coef[2] } else { 0.0 },
        loglog_power: None,
        residual: (ss / usable.len() as f64).sqrt(),
        window: (
            ms.iter().copied().min().unwrap(),
            ms.iter().copied().max().unwrap(),
        ),
    })
}

/// Convenience: fit a report column.
pub fn fit_report(rows: &[ReportRow], use_l2: bool, with_loglog: bool) -> Result<RateFit> {
    let pts: Vec<(u64, f64)> = rows
        .iter()
        .map(|r| (r.m, if use_l2 { r.error_l2 } else { r.error_linf }))
        .collect();
    fit_rate(&pts, with_loglog)
}

/// Markdown comparison of two report files joined on m, with the
/// theoretical worst-case reference exponents quoted in the footer.
pub fn compare_markdown(a: &[ReportRow], b: &[ReportRow]) -> Result<String> {
    let (first_a, first_b) = match (a.first(), b.first()) {
        (Some(x), Some(y)) => (x, y),
        _ => {
            return Err(Error::InvalidParameter(
                "both reports need at least one row".into(),
            ))
        }
    };
    let (name_a, name_b) = (first_a.method.clone(), first_b.method.clone());
    let mut ms: Vec<u64> = a.iter().chain(b.iter()).map(|r| r.m).collect();
    ms.sort_unstable();
    ms.dedup();
    let find = |rows: &[ReportRow], m: u64| -> Option<ReportRow> {
        rows.iter().find(|r| r.m == m).cloned()
    };
    let mut out = String::new();
    writeln!(out, "# Error comparison: {name_a} vs {name_b}").unwrap();
    writeln!(out).unwrap();
    writeln!(
        out,
        "| m | {name_a} L_inf | {name_a} L2 | {name_b} L_inf | {name_b} L2 |"
    )
    .unwrap();
    writeln!(out, "|---:|---:|---:|---:|---:|").unwrap();
    for m in ms {
        let cell = |row: &Option<ReportRow>, l2: bool| -> String {
            match row {
                Some(r) => format!("{:.6e}", if l2 { r.error_l2 } else { r.error_linf }),
                None => "-".to_string(),
            }
        };
        let ra = find(a, m);
        let rb = find(b, m);
        writeln!(
            out,
            "| {m} | {} | {} | {} | {} |",
            cell(&ra, false),
            cell(&ra, true),
            cell(&rb, false),
            cell(&rb, true)
        )
        .unwrap();
    }
    let d = first_a.d;
    let r = first_a.r;
    writeln!(out).unwrap();
    writeln!(
        out,
        "Reference worst-case rates for this class (d = {d}, r = {r}):"
    )
    .unwrap();
    writeln!(
        out,
        "- nonlinear m-term: m^(-{r}) (log m)^({:.3})",
        (d - 1) as f64 + r
    )
    .unwrap();
    writeln!(
        out,
        "- sparse-grid sampling: m^(-{r}) (log m)^({:.3})",
        (d - 1) as f64 * (1.0 + r)
    )
    .unwrap();
    writeln!(
        out,
        "\nNote: the reference exponents are worst-case over the whole class ball; \
         single-instance curves may decay faster. This table reports measurements only."
    )
    .unwrap();
    Ok(out)
}
