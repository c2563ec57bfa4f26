//! Command-line front end. Every subcommand writes CSV (or a bare number) to
//! the output stream and diagnostics to the error stream.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::fbm::{generate_path, HurstParam, SamplerMethod, TimeGrid};
use crate::harness::{
    rate_regression, run_experiment, ExperimentConfig, ExperimentKind, RateReport,
};
use crate::integration::{gls_integral, young_integral};
use crate::norms::{besov_report, BesovExponent};
use crate::sde::BuiltinProblem;
use crate::wong_zakai::{theta, ThetaMethod};

pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Parser)]
#[command(name = "wzfbm", version, about = "Wong–Zakai approximation of fractional Brownian motion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample one fBm path and print it as CSV.
    Generate(GenerateArgs),
    /// Evaluate Θ(x).
    Theta(ThetaArgs),
    /// Monte Carlo E|G_δ(T) - ω(T)|^p against its exact value.
    WzError(ExperimentArgs),
    /// Monte Carlo mean of ‖G_δ - ω‖_{1,1-β}.
    BesovRate(ExperimentArgs),
    /// Wong–Zakai convergence of an SDE solution in ‖·‖_{β,∞}.
    SdeConverge(ExperimentArgs),
    /// Norms of a sampled path read from CSV.
    Norms(NormsArgs),
    /// Pathwise integral of one CSV path against another.
    Integrate(IntegrateArgs),
    /// Rate regression: run a JSON config, or fit an injected power law.
    Rate(RateArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long = "H")]
    pub hurst: f64,
    /// Grid steps.
    #[arg(long)]
    pub n: usize,
    #[arg(long = "T", default_value_t = 1.0)]
    pub horizon: f64,
    /// Independent components.
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub replicate: u64,
    #[arg(long, default_value = "auto")]
    pub method: SamplerMethod,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThetaArgs {
    #[arg(long = "H")]
    pub hurst: f64,
    #[arg(long)]
    pub x: f64,
    #[arg(long, default_value = "closed_form")]
    pub method: ThetaMethod,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// JSON experiment config; replaces all other experiment flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the effective config as JSON instead of running it.
    #[arg(long)]
    pub dump_config: bool,
    #[arg(long = "H", required_unless_present = "config")]
    pub hurst: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    pub horizon: f64,
    /// Grid steps on [0, T].
    #[arg(long, default_value_t = 2048)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Comma-separated values or a power range such as `2^-3..2^-8`.
    #[arg(long, required_unless_present = "config")]
    pub deltas: Option<String>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Draw fresh paths for every δ.
    #[arg(long)]
    pub independent: bool,
    #[arg(long, default_value = "auto")]
    pub sampler: SamplerMethod,
    #[arg(long, value_enum, default_value = "linear")]
    pub problem: ProblemName,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma0: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProblemName {
    Linear,
    Additive,
    Fou,
}

#[derive(Debug, Args)]
pub struct NormsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub beta: f64,
    /// Hölder order.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Value column, by header name or zero-based index.
    #[arg(long, default_value = "1")]
    pub column: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum IntegrationMethod {
    Young,
    Gls,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    #[arg(long)]
    pub f: PathBuf,
    #[arg(long)]
    pub g: PathBuf,
    #[arg(long, value_enum, default_value = "young")]
    pub method: IntegrationMethod,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value = "1")]
    pub column: String,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(long, required_unless_present = "inject")]
    pub config: Option<PathBuf>,
    /// Synthetic errors such as `e=d^0.5` or `e=3*d^0.15`.
    #[arg(long, conflicts_with = "config", requires = "deltas")]
    pub inject: Option<String>,
    #[arg(long)]
    pub deltas: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn dispatch<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match run(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_numerical() {
                3
            } else {
                2
            }
        }
    }
}

fn run(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Generate(a) => generate(a, out),
        Command::Theta(a) => {
            let v = theta(a.x, HurstParam::new(a.hurst)?, a.method)?;
            writeln!(out, "{}", fmt17(v))?;
            Ok(())
        }
        Command::WzError(a) => experiment(ExperimentKind::PointwiseLp, a, out),
        Command::BesovRate(a) => experiment(ExperimentKind::BesovRate, a, out),
        Command::SdeConverge(a) => experiment(ExperimentKind::SdeRate, a, out),
        Command::Norms(a) => norms(a, out),
        Command::Integrate(a) => integrate(a, out),
        Command::Rate(a) => rate(a, out),
    }
}

/// 17 significant digits: plain decimal for moderate magnitudes, scientific
/// otherwise.
pub fn fmt17(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..16).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, x)
    } else {
        format!("{x:.16e}")
    }
}

fn opt17(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

fn with_output(path: &Option<PathBuf>, out: &mut dyn Write, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut file = io::BufWriter::new(File::create(p)?);
            body(&mut file)?;
            file.flush()?;
            Ok(())
        }
        None => body(out),
    }
}

fn generate(a: GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let grid = TimeGrid::new(a.horizon, a.n)?;
    let path = generate_path(grid, HurstParam::new(a.hurst)?, a.m, a.seed, a.replicate, a.method)?;
    with_output(&a.out, out, |w| {
        let mut csv = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((0..a.m).map(|j| format!("component_{}", j + 1)));
        csv.write_record(&header)?;
        for k in 0..grid.len() {
            let mut row = vec![fmt17(grid.time(k))];
            row.extend(path.values().iter().map(|c| fmt17(c[k])));
            csv.write_record(&row)?;
        }
        csv.flush()?;
        Ok(())
    })
}

/// Parses `0.25,0.125`, `2^-3,2^-5` or the power range `2^-3..2^-8`.
pub fn parse_deltas(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("cannot parse deltas '{text}'"));
    let power = |s: &str| -> Result<f64> {
        let s = s.trim();
        match s.split_once('^') {
            Some((base, exp)) => {
                let b: f64 = base.trim().parse().map_err(|_| bad())?;
                let e: i32 = exp.trim().parse().map_err(|_| bad())?;
                Ok(b.powi(e))
            }
            None => s.parse().map_err(|_| bad()),
        }
    };
    if let Some((lo, hi)) = text.split_once("..") {
        let (lo, hi) = (lo.trim(), hi.trim());
        let (b1, e1) = lo.split_once('^').ok_or_else(bad)?;
        let (b2, e2) = hi.split_once('^').ok_or_else(bad)?;
        if b1.trim() != b2.trim() {
            return Err(bad());
        }
        let base: f64 = b1.trim().parse().map_err(|_| bad())?;
        let (e1, e2): (i32, i32) = (
            e1.trim().parse().map_err(|_| bad())?,
            e2.trim().parse().map_err(|_| bad())?,
        );
        let exps: Vec<i32> = if e1 <= e2 {
            (e1..=e2).collect()
        } else {
            (e2..=e1).rev().collect()
        };
        return Ok(exps.into_iter().map(|e| base.powi(e)).collect());
    }
    text.split(',').map(power).collect()
}

fn build_config(kind: ExperimentKind, a: &ExperimentArgs) -> Result<ExperimentConfig> {
    if let Some(path) = &a.config {
        let config: ExperimentConfig = serde_json::from_reader(File::open(path)?)?;
        if config.kind != kind {
            return Err(Error::Config(format!(
                "config kind {:?} does not match this subcommand",
                config.kind
            )));
        }
        return Ok(config);
    }
    let missing = |flag: &str| Error::Config(format!("missing required flag --{flag}"));
    let default_paths = match kind {
        ExperimentKind::PointwiseLp => 10_000,
        _ => 2_000,
    };
    let problem = match a.problem {
        ProblemName::Linear => BuiltinProblem::Linear,
        ProblemName::Additive => BuiltinProblem::Additive,
        ProblemName::Fou => BuiltinProblem::Fou {
            lambda: a.lambda,
            sigma0: a.sigma0,
        },
    };
    Ok(ExperimentConfig {
        kind,
        hurst: a.hurst.ok_or_else(|| missing("H"))?,
        beta: a.beta,
        p: a.p,
        horizon: a.horizon,
        steps: a.n,
        dims: a.m,
        deltas: parse_deltas(a.deltas.as_deref().ok_or_else(|| missing("deltas"))?)?,
        n_paths: a.paths.unwrap_or(default_paths),
        seed: a.seed,
        common_random_numbers: !a.independent,
        sampler: a.sampler,
        problem: (kind == ExperimentKind::SdeRate).then_some(problem),
        xs: None,
    })
}

fn experiment(kind: ExperimentKind, a: ExperimentArgs, out: &mut dyn Write) -> Result<()> {
    let config = build_config(kind, &a)?;
    config.validate()?;
    if a.dump_config {
        return with_output(&a.out, out, |w| dump_config(&config, w));
    }
    let report = run_experiment(&config)?;
    with_output(&a.out, out, |w| write_report(&report, kind == ExperimentKind::SdeRate, w))
}

pub fn dump_config(config: &ExperimentConfig, w: &mut dyn Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, config)?;
    writeln!(w)?;
    Ok(())
}

pub fn write_report(report: &RateReport, with_ratio: bool, w: &mut dyn Write) -> Result<()> {
    {
        let mut csv = csv::Writer::from_writer(&mut *w);
        let mut header = vec!["delta", "mean_error", "std_error", "exact", "n_paths"];
        if with_ratio {
            header.push("mean_ratio");
        }
        csv.write_record(&header)?;
        for row in &report.rows {
            let mut rec = vec![
                fmt17(row.delta),
                fmt17(row.mean_error),
                fmt17(row.std_error),
                opt17(row.exact),
                row.n_paths.to_string(),
            ];
            if with_ratio {
                rec.push(opt17(row.mean_ratio));
            }
            csv.write_record(&rec)?;
        }
        csv.flush()?;
    }
    if let Some(se) = report.slope_std_error {
        writeln!(w, "# slope_se={}", fmt17(se))?;
    }
    match report.regression {
        Some(r) => writeln!(
            w,
            "# slope={} intercept={} r2={}",
            fmt17(r.slope),
            fmt17(r.intercept),
            fmt17(r.r_squared)
        )?,
        None => writeln!(w, "# slope=nan intercept=nan r2=nan")?,
    }
    Ok(())
}

/// Reads `(t, value)` columns from a CSV with a header row and returns the
/// values with the grid step.
pub fn read_path(path: &Path, column: &str) -> Result<(Vec<f64>, f64)> {
    let mut reader = csv::Reader::from_reader(File::open(path)?);
    let headers = reader.headers()?.clone();
    let index = match column.parse::<usize>() {
        Ok(i) => i,
        Err(_) => headers
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| Error::Config(format!("no column '{column}' in {}", path.display())))?,
    };
    if index == 0 || index >= headers.len() {
        return Err(Error::Config(format!(
            "column {index} is not a value column of {}",
            path.display()
        )));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Path(format!("bad number in {}", path.display())))
        };
        times.push(field(0)?);
        values.push(field(index)?);
    }
    if times.len() < 2 {
        return Err(Error::Path(format!("{} has fewer than 2 rows", path.display())));
    }
    let step = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs().max(1.0));
    if !(step > 0.0 && uniform) {
        return Err(Error::Path(format!("{} is not on a uniform grid", path.display())));
    }
    Ok((values, step))
}

fn norms(a: NormsArgs, out: &mut dyn Write) -> Result<()> {
    let (values, step) = read_path(&a.input, &a.column)?;
    let r = besov_report(&values, step, BesovExponent::new(a.beta)?, a.alpha)?;
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(["norm_1_1mb", "norm_beta_inf", "norm_2_beta", "holder", "beta", "alpha"])?;
    csv.write_record([
        fmt17(r.norm_1_1mb),
        fmt17(r.norm_beta_inf),
        fmt17(r.norm_2_beta),
        fmt17(r.holder),
        fmt17(r.beta.value()),
        fmt17(r.alpha),
    ])?;
    csv.flush()?;
    Ok(())
}

fn integrate(a: IntegrateArgs, out: &mut dyn Write) -> Result<()> {
    let (f, hf) = read_path(&a.f, &a.column)?;
    let (g, hg) = read_path(&a.g, &a.column)?;
    if (hf - hg).abs() > 1e-9 * hf {
        return Err(Error::GridMismatch(format!("steps {hf} and {hg} differ")));
    }
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(["t", "integral"])?;
    match a.method {
        IntegrationMethod::Young => {
            for (k, v) in young_integral(&f, &g)?.into_iter().enumerate() {
                csv.write_record([fmt17(k as f64 * hf), fmt17(v)])?;
            }
        }
        IntegrationMethod::Gls => {
            let v = gls_integral(&f, &g, hf, a.alpha)?;
            csv.write_record([fmt17((f.len() - 1) as f64 * hf), fmt17(v)])?;
        }
    }
    csv.flush()?;
    Ok(())
}

/// `e=d^k` or `e=c*d^k`.
pub fn parse_injection(text: &str) -> Result<(f64, f64)> {
    let bad = || Error::Config(format!("cannot parse injection '{text}', expected e=c*d^k"));
    let rhs = text.trim().strip_prefix("e=").ok_or_else(bad)?;
    let (coef, power) = match rhs.split_once('*') {
        Some((c, p)) => (c.trim().parse::<f64>().map_err(|_| bad())?, p.trim()),
        None => (1.0, rhs.trim()),
    };
    let exponent = power
        .strip_prefix("d^")
        .ok_or_else(bad)?
        .parse::<f64>()
        .map_err(|_| bad())?;
    Ok((coef, exponent))
}

fn rate(a: RateArgs, out: &mut dyn Write) -> Result<()> {
    let (report, with_ratio) = if let Some(injection) = &a.inject {
        let (c, k) = parse_injection(injection)?;
        let deltas = parse_deltas(a.deltas.as_deref().expect("required by clap"))?;
        let errors: Vec<f64> = deltas.iter().map(|d| c * d.powf(k)).collect();
        let pairs: Vec<(f64, f64)> = deltas.iter().copied().zip(errors.iter().copied()).collect();
        rate_regression(&pairs)?;
        (RateReport::from_exact(&deltas, &errors), false)
    } else {
        let path = a.config.as_ref().expect("required by clap");
        let config: ExperimentConfig = serde_json::from_reader(File::open(path)?)?;
        let report = run_experiment(&config)?;
        (report, config.kind == ExperimentKind::SdeRate)
    };
    with_output(&a.out, out, |w| write_report(&report, with_ratio, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["wzfbm"];
        full.extend_from_slice(args);
        let code = dispatch(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn formatting_keeps_17_digits() {
        assert_eq!(fmt17(2.0 / 3.0), "0.66666666666666663");
        assert_eq!(fmt17(0.0), "0");
        assert_eq!(fmt17(1.5), "1.5000000000000000");
        assert_eq!(fmt17(1e-9), "1.0000000000000001e-9");
        for x in [2.0 / 3.0, 1e-9, 123456.789, -0.1] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn delta_lists() {
        assert_eq!(parse_deltas("2^-3..2^-5").unwrap(), vec![0.125, 0.0625, 0.03125]);
        assert_eq!(parse_deltas("0.5, 2^-2").unwrap(), vec![0.5, 0.25]);
        assert!(parse_deltas("2^-3..3^-5").is_err());
        assert!(parse_deltas("abc").is_err());
    }

    #[test]
    fn injections() {
        assert_eq!(parse_injection("e=d^0.5").unwrap(), (1.0, 0.5));
        assert_eq!(parse_injection("e=3*d^0.15").unwrap(), (3.0, 0.15));
        assert!(parse_injection("d^0.5").is_err());
    }

    #[test]
    fn theta_command() {
        let (code, out, _) = call(&["theta", "--H", "0.5", "--x", "2"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("0.6666666666666"), "{out}");
    }

    #[test]
    fn rate_with_injection() {
        let (code, out, _) = call(&["rate", "--inject", "e=d^0.5", "--deltas", "2^-1..2^-6"]);
        assert_eq!(code, 0);
        let last = out.lines().last().unwrap();
        assert!(last.starts_with("# slope=0.5"), "{last}");
    }

    #[test]
    fn usage_errors_exit_2() {
        let (code, _, err) = call(&["theta", "--x", "2"]);
        assert_eq!(code, 2);
        assert!(err.contains("--H"), "{err}");
        assert_eq!(call(&["frobnicate"]).0, 2);
        assert_eq!(call(&["theta", "--H", "0.5", "--x", "2", "--bogus", "1"]).0, 2);
        assert_eq!(call(&["theta", "--H", "1.5", "--x", "2"]).0, 2);
    }
}
