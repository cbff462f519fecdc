//! Command-line front end over `expray-core`.
//!
//! Records are written as JSON and ray samples as CSV, with `#` comment lines
//! for flags. Floats are printed in shortest round-trip form so identical
//! inputs give byte-identical output.

// Negated comparisons `!(x < y)` also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use expray_core::address::{AddressError, ExternalAddress, ParseAddressError};
use expray_core::combinatorics::{self, CombinatoricsError};
use expray_core::conjugacy::{self, ConjugacyError};
use expray_core::endpoint;
use expray_core::model::{self, ModelError, SpeedSpec};
use expray_core::paramspace::{self, ParamError};
use expray_core::ray::{self, RayContext, RayError};
use expray_core::Complex64;

pub const CONFIG_ENV: &str = "EXPRAY_CONFIG";

#[derive(Debug, Parser)]
#[command(
    name = "expray",
    about = "Dynamic rays, the model conjugacy and parameter rays of exp(z) + kappa",
    after_help = "Exit codes: 0 ok, 2 parse error, 3 precondition violated, \
                  4 numerical failure (no convergence, broken ray, overflow), 5 I/O error.\n\
                  Addresses: [p1,p2|per:b1,b2], [p|poly:c,p,+], [p|tower:x].\n\
                  Complex numbers: a+bi, a-bi, a, bi.\n\
                  Settings may also come from a key=value file named by EXPRAY_CONFIG \
                  (keys tol, horizon, t_max_cap, format, out); flags take precedence."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Target accuracy.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Symbolic horizon for undecided comparisons.
    #[arg(long, global = true)]
    pub horizon: Option<usize>,
    /// Potential at which seeding starts.
    #[arg(long, global = true)]
    pub t_max_cap: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Class, lower bound t* and minimal potential t_s of an address.
    Classify {
        #[arg(long)]
        address: String,
    },
    /// Minimal potentials along the shift orbit of an address.
    Ts {
        #[arg(long)]
        address: String,
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
    /// Sample a dynamic ray.
    Ray {
        #[arg(long, allow_hyphen_values = true)]
        kappa: String,
        #[arg(long)]
        address: String,
        #[arg(long, default_value_t = 0.0)]
        t_lo: f64,
        #[arg(long, default_value_t = 10.0)]
        t_hi: f64,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Evaluate the conjugacy between the maps for two parameters at a point.
    Conjugate {
        #[arg(long, allow_hyphen_values = true)]
        kappa: String,
        #[arg(long, allow_hyphen_values = true)]
        kappa2: String,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Sample a parameter ray.
    ParamRay {
        #[arg(long)]
        address: String,
        #[arg(long, default_value_t = 5.0)]
        t_lo: f64,
        #[arg(long, default_value_t = 30.0)]
        t_hi: f64,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        /// Solve the points independently instead of warm-starting.
        #[arg(long)]
        cold: bool,
    },
    /// Series test for differentiability of the ray at its endpoint.
    DiffEndpoint {
        #[arg(long)]
        address: String,
        #[arg(long, default_value_t = 40)]
        samples: usize,
    },
    /// Address whose endpoint escapes at a prescribed speed.
    EscapeAddress {
        /// sqrt, log, linear:<a> or table:<r1,r2,...>
        #[arg(long)]
        speed: String,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Itinerary relative to a reference address, and landing predicates.
    Itinerary {
        #[arg(long)]
        address: String,
        #[arg(long = "ref")]
        reference: String,
        /// Second address to test for a common landing point.
        #[arg(long)]
        address2: Option<String>,
        #[arg(long, default_value_t = 16)]
        samples: usize,
    },
    /// Escape-time raster of a parameter's dynamical plane as binary PGM.
    EscapeImage {
        #[arg(long, allow_hyphen_values = true)]
        kappa: String,
        /// xmin,xmax,ymin,ymax
        #[arg(long, allow_hyphen_values = true, default_value = "-4,4,-4,4")]
        bounds: String,
        #[arg(long, default_value_t = 512)]
        width: usize,
        #[arg(long, default_value_t = 512)]
        height: usize,
        #[arg(long, default_value_t = 64)]
        max_iter: u32,
        #[arg(long, default_value_t = 50.0)]
        escape_radius: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Parse,
    Precondition,
    Numeric,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Parse => 2,
            ErrorKind::Precondition => 3,
            ErrorKind::Numeric => 4,
            ErrorKind::Io => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: ErrorKind,
    /// Short machine-readable name of the failure.
    pub reason: String,
    pub message: String,
}

impl CliError {
    fn new(kind: ErrorKind, reason: &str, message: impl fmt::Display) -> Self {
        CliError {
            kind,
            reason: reason.to_string(),
            message: message.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": self.reason, "message": self.message }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.reason, self.message)
    }
}

impl From<ParseAddressError> for CliError {
    fn from(e: ParseAddressError) -> Self {
        CliError::new(ErrorKind::Parse, "ParseError", e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::new(ErrorKind::Io, "IoError", e)
    }
}

impl From<AddressError> for CliError {
    fn from(e: AddressError) -> Self {
        let reason = match e {
            AddressError::ZeroIndex => "ZeroIndex",
            AddressError::HorizonExceeded { .. } => "HorizonExceeded",
            AddressError::Indeterminate { .. } => "Indeterminate",
            AddressError::InvalidTail(_) => "InvalidTail",
        };
        let kind = match e {
            AddressError::InvalidTail(_) => ErrorKind::Precondition,
            _ => ErrorKind::Numeric,
        };
        CliError::new(kind, reason, e)
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        use ErrorKind::*;
        let (kind, reason) = match &e {
            ModelError::Address(inner) => return inner.clone().into(),
            ModelError::Overflow(_) => (Numeric, "Overflow"),
            ModelError::Indeterminate(_) => (Numeric, "Indeterminate"),
            ModelError::NotExponentiallyBounded => (Precondition, "NotExponentiallyBounded"),
            ModelError::SpeedSpecInvalid(_) => (Precondition, "SpeedSpecInvalid"),
            ModelError::PreconditionSlowAddress => (Precondition, "PreconditionSlowAddress"),
            ModelError::InvalidArgument(_) => (Precondition, "InvalidArgument"),
        };
        CliError::new(kind, reason, e)
    }
}

impl From<RayError> for CliError {
    fn from(e: RayError) -> Self {
        use ErrorKind::*;
        let (kind, reason) = match &e {
            RayError::Model(inner) => return inner.clone().into(),
            RayError::NotInY => (Precondition, "NotInY"),
            RayError::BranchCutHit { .. } => (Numeric, "BranchCutHit"),
            RayError::Overflow => (Numeric, "Overflow"),
            RayError::BrokenRay { .. } => (Numeric, "BrokenRay"),
            RayError::SlowEndpoint => (Precondition, "SlowEndpoint"),
            RayError::NotInX { .. } => (Precondition, "NotInX"),
            RayError::ContinuationFailed { .. } => (Numeric, "ContinuationFailed"),
            RayError::InvalidContext(_) => (Precondition, "InvalidContext"),
        };
        CliError::new(kind, reason, e)
    }
}

impl From<ConjugacyError> for CliError {
    fn from(e: ConjugacyError) -> Self {
        use ErrorKind::*;
        let (kind, reason) = match &e {
            ConjugacyError::Ray(inner) => return inner.clone().into(),
            ConjugacyError::LeftHalfplaneViolation(_) => (Precondition, "LeftHalfplaneViolation"),
            ConjugacyError::StripBoundary(_) => (Precondition, "StripBoundary"),
            ConjugacyError::NotConverged { .. } => (Numeric, "NotConverged"),
            ConjugacyError::NotInA { .. } => (Precondition, "NotInA"),
            ConjugacyError::InvalidPoint => (Precondition, "InvalidPoint"),
        };
        CliError::new(kind, reason, e)
    }
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        use ErrorKind::*;
        let (kind, reason) = match &e {
            ParamError::Model(inner) => return inner.clone().into(),
            ParamError::NoConvergence(_) => (Numeric, "NoConvergence"),
            ParamError::PotentialTooLow { .. } => (Precondition, "PotentialTooLow"),
            ParamError::DomainLost { .. } => (Numeric, "DomainLost"),
            ParamError::HypothesisViolated(_) => (Precondition, "HypothesisViolated"),
        };
        CliError::new(kind, reason, e)
    }
}

impl From<CombinatoricsError> for CliError {
    fn from(e: CombinatoricsError) -> Self {
        use ErrorKind::*;
        let (kind, reason) = match &e {
            CombinatoricsError::Address(inner) => return inner.clone().into(),
            CombinatoricsError::Indeterminate(_) => (Numeric, "Indeterminate"),
            CombinatoricsError::OnBoundary(_) => (Precondition, "OnBoundary"),
            CombinatoricsError::MixedClasses => (Precondition, "MixedClasses"),
        };
        CliError::new(kind, reason, e)
    }
}

/// Effective settings after merging flags, the config file and defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub tol: f64,
    pub horizon: usize,
    pub t_max_cap: f64,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tol: model::DEFAULT_TOL,
            horizon: model::DEFAULT_HORIZON,
            t_max_cap: model::T_MAX,
            format: None,
            out: None,
        }
    }
}

impl RunConfig {
    /// Flags override `file` (contents of a key=value file), which overrides
    /// the defaults.
    pub fn resolve(flags: &CommonArgs, file: Option<&str>) -> Result<Self, CliError> {
        let mut config = RunConfig::default();
        if let Some(text) = file {
            for (number, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let bad = |what: &str| CliError::new(ErrorKind::Parse, "ConfigError", format!("line {}: {what}", number + 1));
                let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key=value"))?;
                let value = value.trim();
                match key.trim() {
                    "tol" => config.tol = value.parse().map_err(|_| bad("bad tol"))?,
                    "horizon" => config.horizon = value.parse().map_err(|_| bad("bad horizon"))?,
                    "t_max_cap" => config.t_max_cap = value.parse().map_err(|_| bad("bad t_max_cap"))?,
                    "format" => {
                        config.format = Some(Format::from_str(value, true).map_err(|_| bad("bad format"))?);
                    }
                    "out" => config.out = Some(PathBuf::from(value)),
                    other => return Err(bad(&format!("unknown key '{other}'"))),
                }
            }
        }
        if let Some(v) = flags.tol {
            config.tol = v;
        }
        if let Some(v) = flags.horizon {
            config.horizon = v;
        }
        if let Some(v) = flags.t_max_cap {
            config.t_max_cap = v;
        }
        if flags.format.is_some() {
            config.format = flags.format;
        }
        if flags.out.is_some() {
            config.out = flags.out.clone();
        }
        if !(config.tol > 0.0) {
            return Err(CliError::new(ErrorKind::Precondition, "InvalidConfig", "tol must be positive"));
        }
        if config.horizon < 8 {
            return Err(CliError::new(ErrorKind::Precondition, "InvalidConfig", "horizon must be at least 8"));
        }
        if !(config.t_max_cap >= 30.0) {
            return Err(CliError::new(ErrorKind::Precondition, "InvalidConfig", "t_max_cap must be at least 30"));
        }
        Ok(config)
    }

    fn ray_context(&self, kappa: Complex64) -> RayContext {
        let mut ctx = RayContext::new(kappa).with_horizon(self.horizon).with_tol(self.tol.min(1e-12));
        ctx.t_max = self.t_max_cap;
        ctx
    }
}

/// Parse `a+bi`, `a-bi`, `a`, `bi`, `i` or `-i`.
pub fn parse_complex(src: &str) -> Result<Complex64, CliError> {
    let bad = || CliError::new(ErrorKind::Parse, "ParseError", format!("invalid complex number '{src}'"));
    let text: String = src.chars().filter(|c| !c.is_whitespace()).collect();
    if text.is_empty() {
        return Err(bad());
    }
    let Some(body) = text.strip_suffix('i') else {
        return text.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // Split at the last sign that is not the leading one or part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re_text, im_text) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im_text {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => other.parse::<f64>().map_err(|_| bad())?,
    };
    let re = re_text.parse::<f64>().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

fn parse_address(src: &str) -> Result<ExternalAddress, CliError> {
    Ok(src.parse::<ExternalAddress>()?)
}

fn complex_json(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

/// Shortest round-trip text of a float, in exponent form outside `[1e-5, 1e16)`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Run one command, writing its output to `sink` unless the configuration
/// names an output file.
pub fn run(cli: &Cli, file_config: Option<&str>, sink: &mut dyn Write) -> Result<(), CliError> {
    let config = RunConfig::resolve(&cli.common, file_config)?;
    let mut text = Vec::new();
    match &cli.command {
        Command::EscapeImage {
            kappa,
            bounds,
            width,
            height,
            max_iter,
            escape_radius,
        } => {
            let kappa = parse_complex(kappa)?;
            let bounds = parse_bounds(bounds)?;
            if *width == 0 || *height == 0 {
                return Err(CliError::new(ErrorKind::Precondition, "InvalidSize", "width and height must be positive"));
            }
            write_pgm(&mut text, kappa, bounds, *width, *height, *max_iter, *escape_radius)?;
        }
        command => {
            let body = render(command, &config)?;
            text.extend_from_slice(body.as_bytes());
        }
    }
    match &config.out {
        Some(path) => fs::write(path, &text)?,
        None => sink.write_all(&text)?,
    }
    Ok(())
}

fn render(command: &Command, config: &RunConfig) -> Result<String, CliError> {
    let record = |value: Value| format!("{}\n", serde_json::to_string_pretty(&value).expect("JSON values serialize"));
    match command {
        Command::Classify { address } => {
            let s = parse_address(address)?;
            let class = model::classify(&s);
            let t_star = model::t_star(&s, config.horizon)?;
            let (lo, hi) = model::t_s_bracket(&s, config.tol)?;
            Ok(record(json!({
                "address": s.to_string(),
                "class": class.name(),
                "t_star": t_star,
                "t_s": hi,
                "bracket": [lo, hi],
            })))
        }
        Command::Ts { address, samples } => {
            let s = parse_address(address)?;
            let (lo, hi) = model::t_s_bracket(&s, config.tol)?;
            let orbit = model::endpoint_orbit(&s, (*samples).max(1), config.tol)?;
            Ok(record(json!({
                "address": s.to_string(),
                "t_star": model::t_star(&s, config.horizon)?,
                "t_s": hi,
                "bracket": [lo, hi],
                "orbit": orbit,
            })))
        }
        Command::Ray {
            kappa,
            address,
            t_lo,
            t_hi,
            samples,
        } => {
            let kappa = parse_complex(kappa)?;
            let s = parse_address(address)?;
            let ctx = config.ray_context(kappa);
            let sample = ray::ray_sample(&ctx, &s, *t_lo, *t_hi, *samples)?;
            Ok(match config.format.unwrap_or(Format::Csv) {
                Format::Csv => ray_csv(&sample, *t_lo),
                Format::Json => record(json!({
                    "address": s.to_string(),
                    "kappa": complex_json(kappa),
                    "t_s": sample.t_s,
                    "broken": sample.broken,
                    "broken_at": sample.broken_at,
                    "endpoint_included": sample.endpoint_included,
                    "samples": sample.samples.iter().map(|p| json!({
                        "t": p.offset,
                        "re": p.point.re,
                        "im": p.point.im,
                        "err_bound": p.error_bound,
                    })).collect::<Vec<_>>(),
                })),
            })
        }
        Command::Conjugate { kappa, kappa2, point } => {
            let (k1, k2, z) = (parse_complex(kappa)?, parse_complex(kappa2)?, parse_complex(point)?);
            let (mut c1, mut c2, radius) = conjugacy::joint_contexts(k1, k2);
            for c in [&mut c1, &mut c2] {
                c.horizon = config.horizon;
                c.t_max = config.t_max_cap;
            }
            let result = conjugacy::phi(&c1, &c2, z)?;
            // The residual needs phi at E(z) as well, which may fail on its own.
            let residual = conjugacy::conjugacy_residual(&c1, &c2, z).ok();
            Ok(record(json!({
                "kappa1": complex_json(k1),
                "kappa2": complex_json(k2),
                "point": complex_json(z),
                "radius": radius,
                "phi": complex_json(result.point),
                "error_bound": result.error_bound,
                "potential": result.potential,
                "prefix": result.prefix,
                "conjugacy_residual": residual,
                "speed_table": result.speed_table().iter().map(|&(n, d)| json!({ "n": n, "distance": d })).collect::<Vec<_>>(),
            })))
        }
        Command::ParamRay {
            address,
            t_lo,
            t_hi,
            samples,
            cold,
        } => {
            let s = parse_address(address)?;
            let tol = config.tol.min(1e-10);
            let points = paramspace::parameter_ray_sample(&s, *t_lo, *t_hi, *samples, tol, !cold)?;
            Ok(match config.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut out = String::from("t,re,im,residual,iterations,jump\n");
                    for p in &points {
                        match &p.result {
                            Ok(sol) => out.push_str(&format!(
                                "{},{},{},{},{},{}\n",
                                num(p.offset),
                                num(sol.kappa.re),
                                num(sol.kappa.im),
                                num(sol.residual),
                                sol.iterations,
                                u8::from(p.jump)
                            )),
                            Err(e) => out.push_str(&format!("# t={} error: {e}\n", num(p.offset))),
                        }
                    }
                    out
                }
                Format::Json => record(json!({
                    "address": s.to_string(),
                    "points": points.iter().map(|p| match &p.result {
                        Ok(sol) => json!({
                            "t": p.offset,
                            "kappa": complex_json(sol.kappa),
                            "residual": sol.residual,
                            "iterations": sol.iterations,
                            "jump": p.jump,
                        }),
                        Err(e) => json!({ "t": p.offset, "error": e.to_string() }),
                    }).collect::<Vec<_>>(),
                })),
            })
        }
        Command::DiffEndpoint { address, samples } => {
            let s = parse_address(address)?;
            let report = endpoint::differentiability_series_with_tol(&s, *samples, config.tol)?;
            Ok(record(json!({
                "address": s.to_string(),
                "verdict": report.verdict.name(),
                "n_terms": report.n_terms,
                "truncated": report.truncated,
                "terms": report.terms,
                "partial_sums": report.partial_sums,
                "denominators": report.denominators,
            })))
        }
        Command::EscapeAddress { speed, samples } => {
            let spec = SpeedSpec::from_str(speed).map_err(|e| CliError::new(ErrorKind::Parse, "ParseError", e))?;
            let s = model::escape_speed_address(&spec, *samples)?;
            let table = (1..=*samples)
                .map(|n| {
                    Ok(json!({
                        "n": n,
                        "r_n": spec.r(n),
                        "entry": s.entry(n + 1)?,
                    }))
                })
                .collect::<Result<Vec<_>, AddressError>>()?;
            Ok(record(json!({
                "speed": speed,
                "address": s.to_string(),
                "table": table,
            })))
        }
        Command::Itinerary {
            address,
            reference,
            address2,
            samples,
        } => {
            let s = parse_address(address)?;
            let r = parse_address(reference)?;
            let it = combinatorics::itinerary(&s, &r, *samples)?;
            let mut value = json!({
                "address": s.to_string(),
                "reference": r.to_string(),
                "itinerary": it.entries,
            });
            if let Some(other) = address2 {
                let b = parse_address(other)?;
                let verdict = |v: Result<bool, CombinatoricsError>| match v {
                    Ok(b) => json!(b),
                    Err(e) => json!(e.to_string()),
                };
                value["address2"] = json!(b.to_string());
                value["landing_compatible"] = verdict(combinatorics::landing_compatible(&s, &b, config.horizon));
                value["same_landing_point"] = verdict(combinatorics::same_landing_point(&s, &b, &r, config.horizon));
            }
            Ok(record(value))
        }
        Command::EscapeImage { .. } => unreachable!("images are written by run"),
    }
}

fn ray_csv(sample: &ray::RaySample, t_lo: f64) -> String {
    let mut out = String::from("t,re,im,err_bound,broken_flag\n");
    if t_lo == 0.0 && !sample.endpoint_included && !sample.broken {
        out.push_str("# no escaping endpoint\n");
    }
    for p in &sample.samples {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            num(p.offset),
            num(p.point.re),
            num(p.point.im),
            num(p.error_bound),
            u8::from(sample.broken)
        ));
    }
    if let Some(t) = sample.broken_at {
        out.push_str(&format!("# broken at t={}\n", num(t)));
    }
    out
}

fn parse_bounds(src: &str) -> Result<[f64; 4], CliError> {
    let bad = || CliError::new(ErrorKind::Parse, "ParseError", format!("bounds must be xmin,xmax,ymin,ymax: '{src}'"));
    let values: Vec<f64> = src.split(',').map(|v| v.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [x0, x1, y0, y1] = values[..] else {
        return Err(bad());
    };
    if !(x0 < x1 && y0 < y1) {
        return Err(CliError::new(ErrorKind::Precondition, "InvalidBounds", format!("empty window '{src}'")));
    }
    Ok([x0, x1, y0, y1])
}

/// First `n <= max_iter` with `Re E^n(z) > radius`, or `max_iter`.
pub fn escape_count(kappa: Complex64, z: Complex64, max_iter: u32, radius: f64) -> u32 {
    let mut w = z;
    for n in 0..max_iter {
        if w.re > radius {
            return n;
        }
        w = w.exp() + kappa;
    }
    max_iter
}

/// Binary PGM, top row at `ymax`, pixel `round(255 min(n, max_iter) / max_iter)`.
pub fn write_pgm(
    out: &mut Vec<u8>,
    kappa: Complex64,
    [x0, x1, y0, y1]: [f64; 4],
    width: usize,
    height: usize,
    max_iter: u32,
    radius: f64,
) -> Result<(), CliError> {
    out.extend_from_slice(format!("P5\n{width} {height}\n255\n").as_bytes());
    let dx = (x1 - x0) / width as f64;
    let dy = (y1 - y0) / height as f64;
    let rows: Vec<Vec<u8>> = (0..height)
        .into_par_iter()
        .map(|j| {
            let y = y1 - (j as f64 + 0.5) * dy;
            (0..width)
                .map(|i| {
                    if max_iter == 0 {
                        return 0;
                    }
                    let x = x0 + (i as f64 + 0.5) * dx;
                    let n = escape_count(kappa, Complex64::new(x, y), max_iter, radius);
                    (255.0 * n as f64 / max_iter as f64).round() as u8
                })
                .collect()
        })
        .collect();
    for row in rows {
        out.extend_from_slice(&row);
    }
    Ok(())
}
