//! Command-line front end.
//!
//! Exit codes: `0` success, `1` a verification verdict failed, `2` usage or
//! input error, `3` a numerical tolerance could not be met.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{CardinalInterpolator, FamilyPath, ParameterAxis, SymbolValue};
use crate::periodization::{
    fundamental_symbol, periodize, riesz_ratio, sample_grid, scaling_symbol, LatticeSumConfig,
    SymbolKind,
};
use crate::synthesis::{
    cardinal_interpolant, gram_matrix, refinement_mask_probe, synthesize, CoefficientSequence,
    Generator, SynthesisParams,
};
use crate::verify::{full_report, ReportConfig, ReportTarget};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "cardinal-mra",
    version,
    about = "Cardinal interpolation and multiresolution checks for radial basis functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the normalized symbol at a point or on a grid.
    Symbol(PointArgs),
    /// Lattice sum of a power of the symbol, with its tail certificate.
    Periodize(PeriodizeArgs),
    /// Fourier transform of the fundamental function.
    Fundamental(PointArgs),
    /// Fourier transform of the orthonormal scaling function.
    Scaling(PointArgs),
    /// Riesz ratio of the periodized sums.
    Riesz(PointArgs),
    /// Sample the fundamental function or the scaling function in space.
    Synthesize(SynthesizeArgs),
    /// Evaluate a cardinal interpolant at grid points.
    Interpolate(InterpolateArgs),
    /// Gram matrix of integer translates of the scaling function.
    Gram(GramArgs),
    /// Measure how far the two-scale transfer function is from periodic.
    ProbeRefinement(ProbeArgs),
    /// Run every check; exit 1 if any fails.
    Verify(ReportArgs),
    /// Run every check and emit the report; the verdict does not affect the exit code.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyName {
    Polyharmonic,
    Gmq,
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct FamilyArgs {
    #[arg(long, value_enum)]
    family: FamilyName,
    /// Dimension, 1 to 3.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Polyharmonic order.
    #[arg(long)]
    k: Option<u32>,
    /// Multiquadric order or Gaussian width.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Multiquadric shape.
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
}

#[derive(Args, Debug)]
struct NumericArgs {
    /// Relative tolerance of lattice sums (default 1e-12 on the line, 1e-6 otherwise).
    #[arg(long)]
    tol: Option<f64>,
    /// Largest truncation radius a lattice sum may use.
    #[arg(long)]
    radius_cap: Option<usize>,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Spectral cutoff Ω, a multiple π·M·K with integer K ≥ 4.
    #[arg(long)]
    bandlimit: Option<f64>,
    /// Samples per unit length M.
    #[arg(long)]
    samples_per_unit: Option<usize>,
    /// Half-width T of the sampled cube.
    #[arg(long)]
    halfwidth: Option<usize>,
}

#[derive(Args, Debug)]
struct PointArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    numeric: NumericArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Frequency, comma-separated components.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "grid")]
    xi: Option<String>,
    /// Tabulate on this many points per axis of [-Ω, Ω) instead.
    #[arg(long)]
    grid: Option<usize>,
    /// Half-width Ω of the tabulated band, a multiple of π (default 4π).
    #[arg(long, requires = "grid")]
    bandlimit: Option<f64>,
}

#[derive(Args, Debug)]
struct PeriodizeArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    numeric: NumericArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long, allow_hyphen_values = true)]
    xi: String,
    /// Power of the symbol.
    #[arg(long, default_value_t = 1)]
    p: u32,
}

#[derive(Args, Debug)]
struct SynthesizeArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    numeric: NumericArgs,
    #[command(flatten)]
    synth: SynthArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long, default_value = "fundamental")]
    which: Generator,
}

#[derive(Args, Debug)]
struct InterpolateArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    numeric: NumericArgs,
    #[command(flatten)]
    synth: SynthArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Coefficient sequence JSON file (default: the unit impulse at the origin).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Evaluation points on the 1/M grid, `;`-separated, components `,`-separated.
    #[arg(long, allow_hyphen_values = true)]
    points: String,
}

#[derive(Args, Debug)]
struct GramArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    numeric: NumericArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Integer shifts, `;`-separated, components `,`-separated.
    #[arg(long, allow_hyphen_values = true)]
    shifts: Option<String>,
    /// Quadrature nodes per axis.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args, Debug)]
struct ProbeArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    numeric: NumericArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Nodes per axis, a power of two ≥ 512.
    #[arg(long, default_value_t = 1024)]
    grid: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AxisName {
    MultiquadricOrder,
    MultiquadricShape,
    PolyharmonicOrder,
    Gaussian,
}

impl From<AxisName> for ParameterAxis {
    fn from(a: AxisName) -> Self {
        match a {
            AxisName::MultiquadricOrder => ParameterAxis::MultiquadricOrder,
            AxisName::MultiquadricShape => ParameterAxis::MultiquadricShape,
            AxisName::PolyharmonicOrder => ParameterAxis::PolyharmonicOrder,
            AxisName::Gaussian => ParameterAxis::Gaussian,
        }
    }
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    numeric: NumericArgs,
    #[command(flatten)]
    synth: SynthArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Vary this parameter along a path.
    #[arg(long, value_enum, requires = "path_values")]
    path_axis: Option<AxisName>,
    /// Increasing parameter values of the path, comma-separated.
    #[arg(long, requires = "path_axis")]
    path_values: Option<String>,
    /// Points per axis of the Riesz sweep.
    #[arg(long)]
    grid: Option<usize>,
    /// Record per-stage wall-clock times (output is then not reproducible).
    #[arg(long)]
    timings: bool,
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    EXIT_OK
                }
                _ => {
                    let rendered = e.render().to_string();
                    let line = rendered.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
                    eprintln!("cardinal-mra: {}", line.trim_start_matches("error: "));
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("cardinal-mra: {}", e.to_string().replace('\n', " "));
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Symbol(a) => point_command(a, SymbolKind::RawSymbol),
        Command::Fundamental(a) => point_command(a, SymbolKind::Fundamental),
        Command::Scaling(a) => point_command(a, SymbolKind::Scaling),
        Command::Riesz(a) => point_command(a, SymbolKind::RieszRatio),
        Command::Periodize(a) => {
            let phi = a.family.build()?;
            let cfg = a.numeric.lattice(phi.dim())?;
            let xi = parse_vector(&a.xi, "--xi")?;
            let value = periodize(&phi, &xi, a.p, &cfg)?;
            json_only(&a.output)?;
            emit(&a.output, serde_json::to_string(&value)?)?;
            Ok(EXIT_OK)
        }
        Command::Synthesize(a) => {
            let phi = a.family.build()?;
            let cfg = a.numeric.lattice(phi.dim())?;
            let table = synthesize(&phi, a.which, &a.synth.params(phi.dim()), &cfg)?;
            let text = match a.output.format {
                Format::Json => table.to_json()?,
                Format::Csv => table.to_csv(),
            };
            emit(&a.output, text)?;
            Ok(EXIT_OK)
        }
        Command::Interpolate(a) => {
            let phi = a.family.build()?;
            let cfg = a.numeric.lattice(phi.dim())?;
            let points = parse_list(&a.points, "--points", parse_vector)?;
            let data = match &a.data {
                Some(path) => serde_json::from_str::<CoefficientSequence>(&std::fs::read_to_string(path)?)?,
                None => CoefficientSequence::delta(phi.dim())?,
            };
            let table = synthesize(&phi, Generator::Fundamental, &a.synth.params(phi.dim()), &cfg)?;
            let values = cardinal_interpolant(&table, &data, &points)?;
            let text = match a.output.format {
                Format::Json => serde_json::to_string(&InterpolationOutput {
                    family: phi,
                    points: &points,
                    values: &values,
                    synthesis_error_bound: table.synthesis_error_bound * data.l1_norm(),
                })?,
                Format::Csv => {
                    let mut out = header(phi.dim(), "x");
                    for (x, v) in points.iter().zip(&values) {
                        for c in x {
                            let _ = write!(out, "{c},");
                        }
                        let _ = writeln!(out, "{v}");
                    }
                    out
                }
            };
            emit(&a.output, text)?;
            Ok(EXIT_OK)
        }
        Command::Gram(a) => {
            let phi = a.family.build()?;
            let dim = phi.dim();
            let cfg = a.numeric.lattice(dim)?;
            let defaults = ReportConfig::for_dim(dim);
            let shifts = match &a.shifts {
                Some(s) => parse_list(s, "--shifts", parse_shift)?,
                None => defaults.gram_shifts,
            };
            let gram = gram_matrix(&phi, &shifts, a.grid.unwrap_or(defaults.gram_grid), &cfg)?;
            let text = match a.output.format {
                Format::Json => gram.to_json()?,
                Format::Csv => {
                    let size = gram.size();
                    let mut out = String::from("row,col,value\n");
                    for r in 0..size {
                        for c in 0..size {
                            let _ = writeln!(out, "{r},{c},{}", gram.entry(r, c));
                        }
                    }
                    out
                }
            };
            emit(&a.output, text)?;
            Ok(EXIT_OK)
        }
        Command::ProbeRefinement(a) => {
            let phi = a.family.build()?;
            let cfg = a.numeric.lattice(phi.dim())?;
            let deviation = refinement_mask_probe(&phi, a.grid, &cfg)?;
            json_only(&a.output)?;
            emit(
                &a.output,
                serde_json::to_string(&ProbeOutput {
                    family: phi,
                    grid: a.grid,
                    deviation,
                })?,
            )?;
            Ok(EXIT_OK)
        }
        Command::Verify(a) => report_command(a, true),
        Command::Report(a) => report_command(a, false),
    }
}

#[derive(Serialize)]
struct PointOutput<'a> {
    family: CardinalInterpolator,
    xi: &'a [f64],
    /// `null` where the symbol is infinite.
    value: Option<f64>,
}

#[derive(Serialize)]
struct InterpolationOutput<'a> {
    family: CardinalInterpolator,
    points: &'a [Vec<f64>],
    values: &'a [f64],
    synthesis_error_bound: f64,
}

#[derive(Serialize)]
struct ProbeOutput {
    family: CardinalInterpolator,
    grid: usize,
    deviation: f64,
}

fn point_command(a: PointArgs, kind: SymbolKind) -> Result<i32> {
    let phi = a.family.build()?;
    let cfg = a.numeric.lattice(phi.dim())?;
    let text = match (&a.xi, a.grid) {
        (Some(xi), None) => {
            json_only(&a.output)?;
            let xi = parse_vector(xi, "--xi")?;
            let value = match kind {
                SymbolKind::RawSymbol => match phi.symbol(&xi)? {
                    SymbolValue::Finite(v) => Some(v),
                    SymbolValue::Infinite => None,
                },
                SymbolKind::Fundamental => Some(fundamental_symbol(&phi, &xi, &cfg)?),
                SymbolKind::Scaling => Some(scaling_symbol(&phi, &xi, &cfg)?),
                SymbolKind::RieszRatio => Some(riesz_ratio(&phi, &xi, &cfg)?),
            };
            serde_json::to_string(&PointOutput {
                family: phi,
                xi: &xi,
                value,
            })?
        }
        (None, Some(samples)) => {
            let bandlimit = a.bandlimit.unwrap_or(4.0 * std::f64::consts::PI);
            let grid = sample_grid(&phi, kind, bandlimit, samples, &cfg)?;
            match a.output.format {
                Format::Json => grid.to_json()?,
                Format::Csv => grid.to_csv(),
            }
        }
        _ => return Err(Error::Domain("give exactly one of --xi or --grid".into())),
    };
    emit(&a.output, text)?;
    Ok(EXIT_OK)
}

fn report_command(a: ReportArgs, enforce: bool) -> Result<i32> {
    let phi = a.family.build()?;
    let dim = phi.dim();
    let mut config = ReportConfig::for_dim(dim);
    config.lattice = a.numeric.lattice(dim)?;
    config.synthesis = a.synth.params(dim);
    config.timings = a.timings;
    if let Some(g) = a.grid {
        config.riesz_grid = g;
    }
    let target = match (a.path_axis, &a.path_values) {
        (Some(axis), Some(values)) => {
            let values = parse_vector(values, "--path-values")?;
            ReportTarget::Path(FamilyPath::new(phi, axis.into(), values)?)
        }
        _ => ReportTarget::Instance(phi),
    };
    let started = Instant::now();
    let mut report = full_report(&target, &config);
    if let Some(runtimes) = report.runtimes.as_mut() {
        runtimes.insert("total".into(), started.elapsed().as_secs_f64());
    }
    let text = match a.output.format {
        Format::Json => report.to_json()?,
        Format::Csv => match &report.r1_table {
            Some(table) => table.to_csv(),
            None => {
                return Err(Error::Domain(
                    "CSV output of a report is the path table; pass --path-axis".into(),
                ))
            }
        },
    };
    emit(&a.output, text)?;
    if !enforce {
        return Ok(EXIT_OK);
    }
    Ok(if report.numerical_failure() {
        EXIT_NUMERICAL
    } else if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_VERDICT
    })
}

impl FamilyArgs {
    fn build(&self) -> Result<CardinalInterpolator> {
        let reject = |flag: &str| {
            Err(Error::InvalidDescriptor(format!(
                "--{flag} does not apply to --family {}",
                self.family_label()
            )))
        };
        let need = |flag: &str| {
            Error::InvalidDescriptor(format!("--family {} requires --{flag}", self.family_label()))
        };
        match self.family {
            FamilyName::Polyharmonic => {
                if self.alpha.is_some() {
                    return reject("alpha");
                }
                if self.c.is_some() {
                    return reject("c");
                }
                CardinalInterpolator::polyharmonic(self.dim, self.k.ok_or_else(|| need("k"))?)
            }
            FamilyName::Gmq => {
                if self.k.is_some() {
                    return reject("k");
                }
                CardinalInterpolator::multiquadric(
                    self.dim,
                    self.alpha.ok_or_else(|| need("alpha"))?,
                    self.c.ok_or_else(|| need("c"))?,
                )
            }
            FamilyName::Gaussian => {
                if self.k.is_some() {
                    return reject("k");
                }
                if self.c.is_some() {
                    return reject("c");
                }
                CardinalInterpolator::gaussian(self.dim, self.alpha.ok_or_else(|| need("alpha"))?)
            }
        }
    }

    fn family_label(&self) -> &'static str {
        match self.family {
            FamilyName::Polyharmonic => "polyharmonic",
            FamilyName::Gmq => "gmq",
            FamilyName::Gaussian => "gaussian",
        }
    }
}

impl NumericArgs {
    fn lattice(&self, dim: usize) -> Result<LatticeSumConfig> {
        let mut cfg = match self.tol {
            Some(tol) => LatticeSumConfig::new(tol)?,
            None => LatticeSumConfig::for_dim(dim),
        };
        if let Some(cap) = self.radius_cap {
            cfg = cfg.with_radius_cap(cap);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl SynthArgs {
    fn params(&self, dim: usize) -> SynthesisParams {
        let d = SynthesisParams::default_for(dim);
        let samples = self.samples_per_unit.unwrap_or(d.samples_per_unit);
        let bandlimit = match self.bandlimit {
            Some(b) => b,
            // Keep K = Ω/(πM) at its default when only M changes.
            None => d.bandlimit * samples as f64 / d.samples_per_unit as f64,
        };
        SynthesisParams::new(bandlimit, samples, self.halfwidth.unwrap_or(d.halfwidth))
    }
}

fn parse_vector(s: &str, flag: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Domain(format!("{flag}: cannot parse {t:?} as a finite number")))
        })
        .collect()
}

fn parse_shift(s: &str, flag: &str) -> Result<Vec<i64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<i64>()
                .map_err(|_| Error::Domain(format!("{flag}: cannot parse {t:?} as an integer")))
        })
        .collect()
}

fn parse_list<T>(s: &str, flag: &str, item: fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| item(t, flag))
        .collect()
}

fn header(dim: usize, prefix: &str) -> String {
    let mut out = String::new();
    for axis in 1..=dim {
        let _ = write!(out, "{prefix}_{axis},");
    }
    out.push_str("value\n");
    out
}

fn json_only(output: &OutputArgs) -> Result<()> {
    match output.format {
        Format::Json => Ok(()),
        Format::Csv => Err(Error::Domain("this output is only available as JSON".into())),
    }
}

fn emit(output: &OutputArgs, mut text: String) -> Result<()> {
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &output.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}
