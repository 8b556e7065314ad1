//! Command-line front end. `run_with_io` is the testable entry point; the
//! binary only wires it to the process streams.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use crate::acceptance;
use crate::bessel::{beta_table, bessel_zero, eval_bessel, BesselOrder};
use crate::bifurcation::{default_step, default_window, predicted_ranges, scan, StatedCount};
use crate::cache::{write_atomic, NuCache};
use crate::error::Error;
use crate::morse::{asymptotic_index_p1, asymptotic_index_sup, gap_function, index_from_spectrum, lower_bound_chain};
use crate::params::BaseParams;
use crate::radial::{solve_radial_with, RadialOptions};
use crate::spectrum::{compute_spectrum_with, nu1_curve, SpectrumOptions, SweepContext};

/// Cache directory used when neither --cache-dir, the config file nor the
/// environment names one.
pub const DEFAULT_CACHE_DIR: &str = ".henon-cache";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "henon", version, about = "Radial solutions, singular eigenvalues, Morse indices and nonradial bifurcation for the Henon problem")]
struct Cli {
    /// key=value file supplying defaults for any flag
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for cached nu-curve samples
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Disable the nu-curve cache
    #[arg(long, global = true)]
    no_cache: bool,
    /// Worker threads for sweeps
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Radial output grid size (>= 256)
    #[arg(long, global = true)]
    grid_size: Option<usize>,
    /// Relative tolerance of the radial integrator
    #[arg(long, global = true)]
    rtol: Option<f64>,
    /// Absolute tolerance of the radial integrator
    #[arg(long, global = true)]
    atol: Option<f64>,
    /// Spectral mesh width in log t (coarse level)
    #[arg(long, global = true)]
    spectral_step: Option<f64>,
    /// Output format
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default, Clone)]
struct BaseArgs {
    #[arg(long)]
    dimension: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    nodal_zones: Option<u32>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bessel function values and zeros
    Bessel {
        #[arg(long)]
        order: Option<f64>,
        #[arg(long)]
        zero_index: Option<usize>,
        #[arg(long)]
        eval_at: Option<f64>,
    },
    /// CSV table i,beta_i,z_i(beta_i)
    BetaTable {
        #[command(flatten)]
        base: BaseArgs,
    },
    /// Radial solution profile as JSON
    Radial {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(long)]
        power: Option<f64>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Singular eigenvalues and eigenfunctions
    Spectrum {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(long)]
        power: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CSV p,nu1[,nu2,...] over a range of p
    #[command(name = "nu1-curve")]
    Nu1Curve {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(long)]
        p_min: Option<f64>,
        #[arg(long)]
        p_max: Option<f64>,
        #[arg(long)]
        p_step: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Morse index from the spectrum, as JSON
    Morse {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(long)]
        power: Option<f64>,
    },
    /// Closed-form indices at both ends of the existence range
    MorseAsymptotics {
        #[command(flatten)]
        base: BaseArgs,
    },
    /// Locate nu_1 crossings of the angular levels and write the atlas
    Scan {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(long)]
        n_min: Option<u32>,
        #[arg(long)]
        n_max: Option<u32>,
        #[arg(long)]
        p_min: Option<f64>,
        #[arg(long)]
        p_max: Option<f64>,
        #[arg(long)]
        p_step: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predicted ranges of bifurcating modes
    Predict {
        #[command(flatten)]
        base: BaseArgs,
    },
    /// Run the acceptance checks and write a Markdown report
    Reproduce {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure of a run: usage problems exit 2, domain errors exit 1.
enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

/// Values from the config file, keyed with '-' folded to '_'.
#[derive(Debug, Default)]
struct Config(BTreeMap<String, String>);

const CONFIG_KEYS: &[&str] = &[
    "dimension", "alpha", "nodal_zones", "power", "order", "zero_index", "eval_at", "grid", "count", "p_min",
    "p_max", "p_step", "n_min", "n_max", "out", "cache_dir", "no_cache", "jobs", "grid_size", "rtol", "atol",
    "spectral_step", "format",
];

impl Config {
    fn load(path: &Path) -> CliResult<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    fn parse(text: &str) -> CliResult<Config> {
        let mut map = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return usage(format!("config line {}: expected key=value", k + 1));
            };
            let key = key.trim().replace('-', "_");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return usage(format!("config line {}: unknown key '{key}'", k + 1));
            }
            map.insert(key, value.trim().to_string());
        }
        Ok(Config(map))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Failure::Usage(format!("config: cannot parse {key} = '{v}'"))),
        }
    }
}

fn pick<T: std::str::FromStr>(flag: Option<T>, cfg: &Config, key: &str) -> CliResult<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}

fn require<T: std::str::FromStr>(flag: Option<T>, cfg: &Config, key: &str) -> CliResult<T> {
    match pick(flag, cfg, key)? {
        Some(v) => Ok(v),
        None => usage(format!("missing required --{}", key.replace('_', "-"))),
    }
}

fn base_params(args: &BaseArgs, cfg: &Config) -> CliResult<BaseParams> {
    let n = require(args.dimension, cfg, "dimension")?;
    let a = require(args.alpha, cfg, "alpha")?;
    let m = require(args.nodal_zones, cfg, "nodal_zones")?;
    Ok(BaseParams::new(n, a, m)?)
}

/// Round to 12 significant digits for text output.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    let mag = rounded.abs();
    if (1e-4..1e15).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

struct Env {
    cfg: Config,
    ctx: SweepContext,
    format: Option<Format>,
}

fn positive(name: &str, v: Option<f64>) -> CliResult<Option<f64>> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => usage(format!("--{name} must be positive")),
        other => Ok(other),
    }
}

fn build_env(cli: &Cli) -> CliResult<Env> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let mut radial = RadialOptions::default();
    if let Some(g) = pick(cli.grid_size, &cfg, "grid_size")? {
        if g < 256 {
            return usage("--grid-size must be at least 256");
        }
        radial.grid_size = g;
    }
    if let Some(r) = positive("rtol", pick(cli.rtol, &cfg, "rtol")?)? {
        radial.rtol = r;
    }
    if let Some(a) = positive("atol", pick(cli.atol, &cfg, "atol")?)? {
        radial.atol = a;
    }
    let mut spectrum = SpectrumOptions::default();
    if let Some(h) = positive("spectral-step", pick(cli.spectral_step, &cfg, "spectral_step")?)? {
        spectrum.step = h;
    }
    let no_cache = cli.no_cache || cfg.get::<bool>("no_cache")?.unwrap_or(false);
    let cache = if no_cache {
        None
    } else {
        Some(match pick(cli.cache_dir.clone(), &cfg, "cache_dir")? {
            Some(d) => NuCache::new(d),
            None => NuCache::from_env_or(DEFAULT_CACHE_DIR),
        })
    };
    let jobs = pick(cli.jobs, &cfg, "jobs")?;
    if jobs == Some(0) {
        return usage("--jobs must be at least 1");
    }
    let format = match cli.format {
        Some(f) => Some(f),
        None => match cfg.0.get("format").map(String::as_str) {
            None => None,
            Some("json") => Some(Format::Json),
            Some("csv") => Some(Format::Csv),
            Some(other) => return usage(format!("config: unknown format '{other}'")),
        },
    };
    Ok(Env { cfg, ctx: SweepContext { radial, spectrum, cache, jobs }, format })
}

/// Send `text` to `out` or, when a path is given, write it atomically.
fn emit(text: &str, path: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => Ok(write_atomic(p, text.as_bytes())?),
        None => stdout.write_all(text.as_bytes()).map_err(|e| Failure::Domain(Error::io("<stdout>", e))),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let env = build_env(&cli)?;
    let cfg = &env.cfg;
    let ctx = &env.ctx;
    match cli.command {
        Command::Bessel { order, zero_index, eval_at } => {
            let beta = require(order, cfg, "order")?;
            let order = BesselOrder::new(beta)?;
            let zero_index = pick(zero_index, cfg, "zero_index")?;
            let eval_at = pick(eval_at, cfg, "eval_at")?;
            if zero_index.is_none() && eval_at.is_none() {
                return usage("bessel needs --zero-index and/or --eval-at");
            }
            let mut text = String::from("quantity,value\n");
            text.push_str(&format!("order,{}\n", fmt_num(beta)));
            if let Some(i) = zero_index {
                if i == 0 {
                    return Err(Error::InvalidArgument("zero index starts at 1".into()).into());
                }
                text.push_str(&format!("zero_{i},{}\n", fmt_num(bessel_zero(order, i)?)));
            }
            if let Some(r) = eval_at {
                text.push_str(&format!("value_at_{},{}\n", fmt_num(r), fmt_num(eval_bessel(order, r)?)));
            }
            emit(&text, None, stdout)
        }
        Command::BetaTable { base } => {
            let b = base_params(&base, cfg)?;
            let mut text = String::from("i,beta_i,z_i(beta_i)\n");
            for (i, beta, z) in beta_table(&b)? {
                text.push_str(&format!("{i},{},{}\n", fmt_num(beta), fmt_num(z)));
            }
            emit(&text, None, stdout)
        }
        Command::Radial { base, power, grid, out } => {
            let b = base_params(&base, cfg)?;
            let p = require(power, cfg, "power")?;
            let mut opts = ctx.radial.clone();
            if let Some(g) = pick(grid, cfg, "grid")? {
                if g < 256 {
                    return usage("--grid must be at least 256");
                }
                opts.grid_size = g;
            }
            let profile = solve_radial_with(&b.with_power(p)?, &opts)?;
            let text = match env.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&profile)?,
                Format::Csv => {
                    let mut t = String::from("t,value,derivative\n");
                    for k in 0..profile.grid.len() {
                        t.push_str(&format!(
                            "{},{},{}\n",
                            fmt_num(profile.grid[k]),
                            fmt_num(profile.values[k]),
                            fmt_num(profile.derivatives[k])
                        ));
                    }
                    t
                }
            };
            emit(&text, pick(out, cfg, "out")?.as_deref(), stdout)
        }
        Command::Spectrum { base, power, count, out } => {
            let b = base_params(&base, cfg)?;
            let p = require(power, cfg, "power")?;
            let count = pick(count, cfg, "count")?.unwrap_or(b.nodal_zones as usize);
            let profile = solve_radial_with(&b.with_power(p)?, &ctx.radial)?;
            let spec = compute_spectrum_with(&profile, count, &ctx.spectrum)?;
            let text = match env.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&spec)?,
                Format::Csv => {
                    let mut t = String::from("i,nu\n");
                    for (i, v) in spec.eigenvalues.iter().enumerate() {
                        t.push_str(&format!("{},{}\n", i + 1, fmt_num(*v)));
                    }
                    t
                }
            };
            emit(&text, pick(out, cfg, "out")?.as_deref(), stdout)
        }
        Command::Nu1Curve { base, p_min, p_max, p_step, out } => {
            let b = base_params(&base, cfg)?;
            let lo = require(p_min, cfg, "p_min")?;
            let hi = require(p_max, cfg, "p_max")?;
            let step = require(p_step, cfg, "p_step")?;
            if !(step > 0.0) || !(hi >= lo) {
                return usage("need p-min <= p-max and p-step > 0");
            }
            let grid = if hi > lo { crate::bifurcation::sample_grid((lo, hi), step) } else { vec![lo] };
            let curve = nu1_curve(&b, &grid, ctx)?;
            let text = match env.format.unwrap_or(Format::Csv) {
                Format::Json => to_json(&curve)?,
                Format::Csv => {
                    let m = b.nodal_zones as usize;
                    let mut t = String::from("p");
                    for i in 1..=m {
                        t.push_str(&format!(",nu{i}"));
                    }
                    t.push('\n');
                    for pt in &curve {
                        t.push_str(&fmt_num(pt.p));
                        match &pt.nu {
                            Some(nu) => nu.iter().for_each(|v| t.push_str(&format!(",{}", fmt_num(*v)))),
                            None => {
                                log::warn!("p = {}: {}", pt.p, pt.error.as_deref().unwrap_or("failed"));
                                (0..m).for_each(|_| t.push(','));
                            }
                        }
                        t.push('\n');
                    }
                    t
                }
            };
            emit(&text, pick(out, cfg, "out")?.as_deref(), stdout)
        }
        Command::Morse { base, power } => {
            let b = base_params(&base, cfg)?;
            let p = require(power, cfg, "power")?;
            let spec = ctx.spectrum_at(&b, p)?;
            emit(&to_json(&index_from_spectrum(&spec)?)?, None, stdout)
        }
        Command::MorseAsymptotics { base } => {
            let b = base_params(&base, cfg)?;
            let mut t = String::from("quantity,value\n");
            t.push_str(&format!("index_p_to_1,{}\n", asymptotic_index_p1(&b)?));
            match asymptotic_index_sup(&b) {
                Ok(s) => {
                    t.push_str(&format!("index_sup_closed_form,{}\n", s.closed_form));
                    t.push_str(&format!("index_sup_via_limits,{}\n", s.via_limits));
                    t.push_str(&format!("index_sup_discrepancy,{}\n", s.discrepancy));
                }
                Err(Error::Unsupported(msg)) => t.push_str(&format!("index_sup_closed_form,unsupported: {msg}\n")),
                Err(e) => return Err(e.into()),
            }
            let chain = lower_bound_chain(&b)?;
            t.push_str(&format!("lower_bound_direct,{}\n", chain.direct));
            t.push_str(&format!("lower_bound_rearranged,{}\n", chain.rearranged));
            t.push_str(&format!("lower_bound_coarse,{}\n", chain.coarse));
            if b.dimension >= 3 && b.nodal_zones >= 2 {
                t.push_str(&format!("gap_h,{}\n", gap_function(&b)?));
            }
            emit(&t, None, stdout)
        }
        Command::Scan { base, n_min, n_max, p_min, p_max, p_step, out } => {
            let b = base_params(&base, cfg)?;
            let (dlo, dhi) = default_window(&b, pick(p_max, cfg, "p_max")?);
            let window = (pick(p_min, cfg, "p_min")?.unwrap_or(dlo), dhi);
            let step = pick(p_step, cfg, "p_step")?.unwrap_or_else(|| default_step(window));
            let n_min = pick(n_min, cfg, "n_min")?.unwrap_or(1);
            let n_max = match pick(n_max, cfg, "n_max")? {
                Some(n) => n,
                None => match predicted_ranges(&b) {
                    Ok(r) => (r.n_range.1.max(0) as u32 + 2).max(n_min),
                    Err(_) => n_min.max(6),
                },
            };
            let atlas = scan(&b, (n_min, n_max), window, step, ctx)?;
            emit(&to_json(&atlas)?, pick(out, cfg, "out")?.as_deref(), stdout)
        }
        Command::Predict { base } => {
            let b = base_params(&base, cfg)?;
            let r = predicted_ranges(&b)?;
            let stated = match r.stated_count {
                Some(StatedCount::Exact(k)) => format!("{k}"),
                Some(StatedCount::AtLeast(k)) => format!(">={k}"),
                None => "-".to_string(),
            };
            let t = format!(
                "theorem,n_range,n_min,n_max,count,stated_count\n{},{}..{},{},{},{},{}\n",
                r.theorem.tag(),
                r.n_range.0,
                r.n_range.1,
                r.n_range.0,
                r.n_range.1,
                r.count,
                stated
            );
            emit(&t, None, stdout)
        }
        Command::Reproduce { out } => {
            let path = pick(out, cfg, "out")?.unwrap_or_else(|| PathBuf::from("reproduce_report.md"));
            let results = acceptance::run_all(ctx);
            for r in &results {
                log::info!("{}", r.line());
            }
            write_atomic(&path, acceptance::markdown_report(&results).as_bytes())?;
            let passed = results.iter().filter(|r| r.ok()).count();
            emit(&format!("{passed}/{} criteria pass; report at {}\n", results.len(), path.display()), None, stdout)
        }
    }
}

/// Parse `argv` (program name first), run, and return the exit code.
pub fn run_with_io<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let parsed = Cli::command().try_get_matches_from(argv).and_then(|m| {
        let sub = m.subcommand_name().map(str::to_string);
        Cli::from_arg_matches(&m).map(|c| (c, sub))
    });
    let (cli, sub) = match parsed {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    2
                }
            };
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let mut cmd = Cli::command();
            cmd.build();
            let usage = match sub.as_deref().and_then(|name| cmd.find_subcommand_mut(name)) {
                Some(sc) => sc.render_usage(),
                None => cmd.render_usage(),
            };
            let _ = writeln!(stderr, "error[usage]: {msg}\n\n{usage}\n\nFor more information, try '--help'.");
            2
        }
        Err(Failure::Domain(e)) => {
            let _ = writeln!(stderr, "error[{}]: {e}", e.category());
            1
        }
    }
}
