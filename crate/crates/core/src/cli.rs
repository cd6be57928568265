//! Command-line front end: `enhancement-curve`, `spectrum`, `validate` and
//! `mc-average`.
//!
//! Every option may also come from a `--config` file of `key = value` lines
//! (`#` starts a comment; keys use the option names with `-` or `_`).
//! Command-line flags take precedence. Unknown keys are rejected.
//!
//! Exit codes: 0 success, 1 usage or parameter error, 2 I/O error,
//! 3 validation failure.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::average::{angular_factor, mc_average_many, AverageSpec, DEFAULT_WIDTH_FRAC};
use crate::error::{Error, Result};
use crate::model::{Configuration, PhysParams};
use crate::oracle;
use crate::spectrum::{cbs_spectrum, Normalization};
use crate::steady::DoubleScattering;
use crate::validate::{Profile, Suite};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "CBS_OUTPUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cbs", version, about = "Coherent backscattering by two driven atoms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Enhancement factor versus saturation, closed form and numeric.
    EnhancementCurve(CurveArgs),
    /// Inelastic ladder and crossed spectra.
    Spectrum(SpectrumArgs),
    /// Run the validation suite and write a JSON report.
    Validate(ValidateArgs),
    /// Monte Carlo configuration average of the crossed angular factor.
    McAverage(McArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Optional `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; defaults to a file in $CBS_OUTPUT_DIR (or the working directory).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[arg(long)]
    s_min: Option<f64>,
    #[arg(long)]
    s_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Logarithmic spacing in s (default true).
    #[arg(long)]
    log_spacing: Option<bool>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    /// Rabi frequency in units of gamma.
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    nu_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    nu_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Report intensities in units of the averaged prefactor instead of
    /// normalizing the ladder to unit area.
    #[arg(long)]
    raw: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct McArgs {
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    ell_k0: Option<f64>,
    #[arg(long)]
    width_frac: Option<f64>,
    #[arg(long)]
    theta_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
enum Method {
    Numeric,
    OracleWeak,
    OracleStrong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProfileArg {
    Default,
    Quick,
}

macro_rules! impl_from_str_via_value_enum {
    ($($t:ty),*) => {$(
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                <$t as ValueEnum>::from_str(s, false)
            }
        }
    )*};
}
impl_from_str_via_value_enum!(Format, Method, ProfileArg);

/// Parsed `key = value` file with tracking of consumed keys.
#[derive(Debug, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let key = k.trim().replace('-', "_");
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", n + 1)));
            }
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", n + 1)));
            }
        }
        Ok(Self { entries })
    }

    fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => Self::parse(&fs::read_to_string(p)?),
        }
    }

    /// Flag value if given, else the file value, else `default`.
    fn pick<T: FromStr>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let from_file = self.entries.remove(key);
        if let Some(v) = flag {
            return Ok(v);
        }
        match from_file {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|e| Error::Config(format!("key '{key}': cannot parse '{s}': {e}"))),
        }
    }

    fn pick_out(&mut self, flag: Option<PathBuf>) -> Option<PathBuf> {
        let from_file = self.entries.remove("out").map(PathBuf::from);
        flag.or(from_file)
    }

    fn finish(self) -> Result<()> {
        match self.entries.keys().next() {
            None => Ok(()),
            Some(k) => Err(Error::Config(format!("unknown key '{k}'"))),
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Csv(c) if matches!(c.kind(), csv::ErrorKind::Io(_)) => EXIT_IO,
        Error::Json(j) if j.is_io() => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn output_path(out: Option<PathBuf>, default_name: &str) -> PathBuf {
    out.unwrap_or_else(|| {
        let dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
        dir.join(default_name)
    })
}

/// Decimal with 16 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.15e}")
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| fmt_num(*v)))?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Writes a table as CSV (metadata in a `.meta.json` sidecar) or as one JSON
/// document.
fn write_table(path: &Path, format: Format, header: &[&str], rows: &[Vec<f64>], meta: serde_json::Value) -> Result<()> {
    match format {
        Format::Csv => {
            write_csv(path, header, rows)?;
            if !meta.is_null() {
                let mut side = path.as_os_str().to_owned();
                side.push(".meta.json");
                write_json(Path::new(&side), &meta)?;
            }
            Ok(())
        }
        Format::Json => {
            let records: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| serde_json::Value::Object(header.iter().zip(r).map(|(h, v)| (h.to_string(), json!(v))).collect()))
                .collect();
            write_json(path, &json!({ "columns": header, "rows": records, "meta": meta }))
        }
    }
}

fn cmd_enhancement_curve(a: CurveArgs) -> Result<i32> {
    let mut cfg = ConfigFile::load(a.common.config.as_deref())?;
    let s_min = cfg.pick("s_min", a.s_min, 1e-3)?;
    let s_max = cfg.pick("s_max", a.s_max, 1e3)?;
    let points = cfg.pick("points", a.points, 61)?;
    let log_spacing = cfg.pick("log_spacing", a.log_spacing, true)?;
    let format = cfg.pick("format", a.common.format, Format::Csv)?;
    let out = cfg.pick_out(a.common.out);
    cfg.finish()?;
    if !(s_min > 0.0 && s_min < s_max && s_max.is_finite()) {
        return Err(Error::Config(format!("need 0 < s_min < s_max, got {s_min}, {s_max}")));
    }
    if points < 2 {
        return Err(Error::Config("points must be at least 2".into()));
    }
    let rows = (0..points)
        .map(|k| {
            let t = k as f64 / (points - 1) as f64;
            let s = if log_spacing {
                (s_min.ln() + t * (s_max.ln() - s_min.ln())).exp()
            } else {
                s_min + t * (s_max - s_min)
            };
            let analytic = oracle::enhancement_factor(s)?;
            let numeric = DoubleScattering::new(PhysParams::from_saturation(s)?, Configuration::backscattering())?
                .intensity_terms()?
                .enhancement();
            Ok(vec![s, analytic, numeric, (analytic - numeric).abs()])
        })
        .collect::<Result<Vec<_>>>()?;
    let path = output_path(out, &format!("enhancement_curve.{}", ext(format)));
    write_table(
        &path,
        format,
        &["s", "alpha_analytic", "alpha_numeric", "abs_diff"],
        &rows,
        serde_json::Value::Null,
    )?;
    log::info!("wrote {}", path.display());
    Ok(EXIT_OK)
}

fn ext(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn cmd_spectrum(a: SpectrumArgs) -> Result<i32> {
    let mut cfg = ConfigFile::load(a.common.config.as_deref())?;
    let omega = cfg.pick("omega", a.omega, 1.0)?;
    let method = cfg.pick("method", a.method, Method::Numeric)?;
    let default_reach = 2.0 * omega + 20.0;
    let nu_min = cfg.pick("nu_min", a.nu_min, -default_reach)?;
    let nu_max = cfg.pick("nu_max", a.nu_max, default_reach)?;
    let points = cfg.pick("points", a.points, 2001)?;
    let raw = cfg.pick("raw", a.raw.then_some(true), false)?;
    let format = cfg.pick("format", a.common.format, Format::Csv)?;
    let out = cfg.pick_out(a.common.out);
    cfg.finish()?;
    if !(nu_min < nu_max && nu_min.is_finite() && nu_max.is_finite()) {
        return Err(Error::Config(format!("need nu_min < nu_max, got {nu_min}, {nu_max}")));
    }
    if points < 2 {
        return Err(Error::Config("points must be at least 2".into()));
    }
    let params = PhysParams::resonant(omega)?;
    let grid: Vec<f64> = (0..points)
        .map(|k| nu_min + (nu_max - nu_min) * k as f64 / (points - 1) as f64)
        .collect();
    let s = params.saturation();
    let (le, ce) = oracle::elastic_terms(s)?;
    let (ladder, crossed, el, meta_extra) = match method {
        Method::Numeric => {
            let mut spec = cbs_spectrum(params, Configuration::backscattering(), &grid)?;
            if !raw {
                spec = spec.to_unit_ladder()?;
            }
            let el = (spec.ladder_el_weight, spec.crossed_el_weight);
            let extra = json!({ "asymmetry_ladder": spec.asymmetry.0, "asymmetry_crossed": spec.asymmetry.1 });
            (spec.ladder_inel, spec.crossed_inel, el, extra)
        }
        Method::OracleWeak | Method::OracleStrong => {
            let weak = method == Method::OracleWeak;
            oracle::check_validity(if weak { "weak" } else { "strong" }, omega, params.gamma)?;
            let f = |nu: f64| {
                if weak {
                    oracle::weak_field_spectra(nu, omega, params.gamma)
                } else {
                    oracle::strong_field_spectra(nu, omega, params.gamma)
                }
            };
            let norm = if raw {
                1.0
            } else if weak {
                oracle::weak_field_integrals(omega, params.gamma).0
            } else {
                oracle::strong_field_integrals(omega, params.gamma).0
            };
            let (l, c): (Vec<f64>, Vec<f64>) = grid.iter().map(|&nu| f(nu)).map(|(l, c)| (l / norm, c / norm)).unzip();
            (l, c, (le / norm, ce / norm), json!({}))
        }
    };
    let rows: Vec<Vec<f64>> = grid
        .iter()
        .zip(ladder.iter().zip(&crossed))
        .map(|(&nu, (&l, &c))| vec![nu, l, c])
        .collect();
    let mut meta = json!({
        "method": method,
        "omega_over_gamma": omega,
        "saturation": s,
        "normalization": if raw { Normalization::Averaged } else { Normalization::UnitLadder },
        "ladder_elastic_weight": el.0,
        "crossed_elastic_weight": el.1,
    });
    if let (Some(m), serde_json::Value::Object(x)) = (meta.as_object_mut(), meta_extra) {
        m.extend(x);
    }
    let path = output_path(out, &format!("spectrum.{}", ext(format)));
    write_table(&path, format, &["nu_over_gamma", "ladder_inel", "crossed_inel"], &rows, meta)?;
    log::info!("wrote {}", path.display());
    Ok(EXIT_OK)
}

fn cmd_validate(a: ValidateArgs) -> Result<i32> {
    let mut cfg = ConfigFile::load(a.common.config.as_deref())?;
    let profile = match cfg.pick("profile", a.profile, ProfileArg::Default)? {
        ProfileArg::Default => Profile::Default,
        ProfileArg::Quick => Profile::Quick,
    };
    let format = cfg.pick("format", a.common.format, Format::Json)?;
    let out = cfg.pick_out(a.common.out);
    cfg.finish()?;
    if format != Format::Json {
        return Err(Error::Config("the validation report is JSON only".into()));
    }
    let checks = Suite::new(profile).run();
    let failed = checks.iter().filter(|c| !c.pass).count();
    for c in checks.iter().filter(|c| !c.pass) {
        log::warn!("FAIL [{}] {}: expected {} actual {}", c.criterion, c.check, c.expected, c.actual);
    }
    let path = output_path(out, "validation.json");
    write_json(
        &path,
        &json!({ "profile": profile, "passed": checks.len() - failed, "failed": failed, "checks": checks }),
    )?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_VALIDATION })
}

fn cmd_mc_average(a: McArgs) -> Result<i32> {
    let mut cfg = ConfigFile::load(a.common.config.as_deref())?;
    let samples = cfg.pick("samples", a.samples, 100_000)?;
    let seed = cfg.pick("seed", a.seed, 1)?;
    let ell_k0 = cfg.pick("ell_k0", a.ell_k0, 100.0)?;
    let width = cfg.pick("width_frac", a.width_frac, DEFAULT_WIDTH_FRAC)?;
    let theta_max = cfg.pick("theta_max", a.theta_max, 0.0)?;
    let points = cfg.pick("points", a.points, 1)?;
    let format = cfg.pick("format", a.common.format, Format::Csv)?;
    let out = cfg.pick_out(a.common.out);
    cfg.finish()?;
    if points < 1 {
        return Err(Error::Config("points must be at least 1".into()));
    }
    let spec = AverageSpec::new(samples, seed, ell_k0, width)?;
    let thetas: Vec<f64> = if points == 1 {
        vec![theta_max]
    } else {
        (0..points).map(|k| theta_max * k as f64 / (points - 1) as f64).collect()
    };
    let est = mc_average_many(&spec, &thetas)?;
    let rows = est
        .iter()
        .map(|e| {
            let (c, l) = angular_factor(e.theta, ell_k0)?;
            Ok(vec![e.theta, e.mean, e.std_error, c, l])
        })
        .collect::<Result<Vec<_>>>()?;
    let path = output_path(out, &format!("mc_average.{}", ext(format)));
    write_table(
        &path,
        format,
        &["theta", "mc_crossed_factor", "std_error", "analytic_crossed_factor", "analytic_ladder_factor"],
        &rows,
        json!({ "samples": samples, "seed": seed, "ell_k0": ell_k0, "width_frac": width }),
    )?;
    Ok(EXIT_OK)
}

/// Runs the command line `args` (including the program name) and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::EnhancementCurve(a) => cmd_enhancement_curve(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Validate(a) => cmd_validate(a),
        Command::McAverage(a) => cmd_mc_average(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
