//! Command-line front end: `sample`, `sweep`, `alpha-sweep`, `verify`, `traj`.
//!
//! Every run flag can also come from a flat `key=value` file given with
//! `--config`; flags on the command line win. Keys are the long flag names
//! without the leading dashes (`dx=0.02`, `T=10`, `ref-dt=0.00390625`).
//!
//! Exit codes: 0 success, 2 validation error, 3 divergence, 4 failed checks.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harness::{
    self, alpha_sweep, dt_sweep, run_ensemble, ConvergenceReport, EnsembleConfig, Reference, ReferenceMode,
    ReferenceSamples,
};
use crate::integrators::{run_with_observer, Integrator, SchemeKind, SchemeSpec};
use crate::model::{Model, Nonlinearity};
use crate::noise::{NoiseLayout, NoiseStream};
use crate::observable::TestFunction;
use crate::space::{Flavor, Resolution, SpectralSpace};
use crate::verify::{all_passed, format_table, run_checks, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "gibbs-spde", version, about = "Sample Gibbs invariant measures of parabolic SPDEs")]
pub struct Cli {
    /// Flat key=value file supplying defaults for run flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ensemble estimate of E φ at one time step.
    Sample(RunArgs),
    /// Bias against a reference over a list of time steps.
    Sweep(RunArgs),
    /// Sweep of the preconditioned linear-implicit scheme over α.
    AlphaSweep(RunArgs),
    /// Deterministic identity and consistency checks.
    Verify(VerifyArgs),
    /// Physical-grid values of a single trajectory.
    Traj(RunArgs),
}

#[derive(Debug, Default, Clone, Args)]
pub struct RunArgs {
    /// fd or spectral.
    #[arg(long)]
    pub flavor: Option<String>,
    /// Grid spacing 1/(K+1).
    #[arg(long)]
    pub dx: Option<f64>,
    /// Number of modes K (overrides --dx).
    #[arg(long)]
    pub modes: Option<usize>,
    /// zero, cos or linear.
    #[arg(long)]
    pub nonlinearity: Option<String>,
    /// ee, ie, theta, cn, lm, pie, rk2 or pli; a comma list for `sweep`.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Preconditioner exponent for `pli`.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Exponents for `alpha-sweep`, comma separated.
    #[arg(long)]
    pub alphas: Option<String>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Comma separated, descending.
    #[arg(long)]
    pub dts: Option<String>,
    /// Final time.
    #[arg(long = "T")]
    pub final_time: Option<f64>,
    /// Number of steps; sets T = steps·dt.
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// expnorm or quadratic.
    #[arg(long)]
    pub phi: Option<String>,
    /// analytic or fine-lm.
    #[arg(long)]
    pub reference: Option<String>,
    #[arg(long = "ref-dt")]
    pub ref_dt: Option<f64>,
    #[arg(long = "ref-samples")]
    pub ref_samples: Option<u64>,
    /// Run every time step on the reference's Brownian paths.
    #[arg(long)]
    pub paired: bool,
    /// Rows with |bias| below this many standard errors are left out of fits.
    #[arg(long = "flag-threshold")]
    pub flag_threshold: Option<f64>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit with status 3 if any trajectory diverged.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Default, Clone, Args)]
pub struct VerifyArgs {
    /// Only run checks whose category or name contains this string.
    #[arg(long)]
    pub filter: Option<String>,
    /// Test hook: weight of the trace term in the generator.
    #[arg(long = "trace-weight", hide = true, default_value_t = 0.5)]
    pub trace_weight: f64,
}

/// Parses a flat `key=value` file. Blank lines and `#` comments are ignored.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got `{line}`", i + 1)))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected true or false, got `{value}`"))),
    }
}

impl RunArgs {
    /// Fills unset flags from a config map; unknown keys are errors.
    pub fn merge_config(&mut self, map: &BTreeMap<String, String>) -> Result<()> {
        for (key, v) in map {
            let k = key.as_str();
            match k {
                "flavor" => fill(&mut self.flavor, || Ok(v.clone()))?,
                "dx" => fill(&mut self.dx, || parse_value(k, v))?,
                "modes" => fill(&mut self.modes, || parse_value(k, v))?,
                "nonlinearity" => fill(&mut self.nonlinearity, || Ok(v.clone()))?,
                "scheme" => fill(&mut self.scheme, || Ok(v.clone()))?,
                "theta" => fill(&mut self.theta, || parse_value(k, v))?,
                "alpha" => fill(&mut self.alpha, || parse_value(k, v))?,
                "alphas" => fill(&mut self.alphas, || Ok(v.clone()))?,
                "dt" => fill(&mut self.dt, || parse_value(k, v))?,
                "dts" => fill(&mut self.dts, || Ok(v.clone()))?,
                "T" => fill(&mut self.final_time, || parse_value(k, v))?,
                "steps" => fill(&mut self.steps, || parse_value(k, v))?,
                "samples" => fill(&mut self.samples, || parse_value(k, v))?,
                "seed" => fill(&mut self.seed, || parse_value(k, v))?,
                "phi" => fill(&mut self.phi, || Ok(v.clone()))?,
                "reference" => fill(&mut self.reference, || Ok(v.clone()))?,
                "ref-dt" => fill(&mut self.ref_dt, || parse_value(k, v))?,
                "ref-samples" => fill(&mut self.ref_samples, || parse_value(k, v))?,
                "flag-threshold" => fill(&mut self.flag_threshold, || parse_value(k, v))?,
                "out" => fill(&mut self.out, || Ok(PathBuf::from(v)))?,
                "paired" => self.paired |= parse_bool(k, v)?,
                "strict" => self.strict |= parse_bool(k, v)?,
                _ => return Err(Error::Config(format!("unknown key `{key}`"))),
            }
        }
        Ok(())
    }
}

fn fill<T>(slot: &mut Option<T>, value: impl FnOnce() -> Result<T>) -> Result<()> {
    if slot.is_none() {
        *slot = Some(value()?);
    }
    Ok(())
}

fn parse_list(flag: &str, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("--{flag}: cannot parse `{s}`")))
        })
        .collect()
}

fn parse_scheme(name: &str, theta: Option<f64>, alpha: Option<f64>) -> Result<SchemeKind> {
    Ok(match name {
        "ee" => SchemeKind::ExplicitEuler,
        "ie" => SchemeKind::ImplicitEuler,
        "cn" => SchemeKind::CrankNicolson,
        "theta" => SchemeKind::Theta(
            theta.ok_or_else(|| Error::InvalidParameter("--scheme theta needs --theta".into()))?,
        ),
        "lm" => SchemeKind::LeimkuhlerMatthews,
        "pie" => SchemeKind::PostprocessedImplicitEuler,
        "rk2" => SchemeKind::Rk2,
        "pli" => SchemeKind::PreconditionedLinearImplicit { alpha: alpha.unwrap_or(1.0) },
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown scheme `{other}` (expected ee, ie, theta, cn, lm, pie, rk2 or pli)"
            )))
        }
    })
}

/// A fully resolved run configuration. Defaults follow the reference
/// experiment: finite differences with `Δx = 0.02`, `f(x) = −x + cos x`,
/// `T = 10`, `φ = exp(−‖·‖²)`, seed 0.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub space: SpectralSpace,
    pub nonlinearity: Nonlinearity,
    pub schemes: Vec<SchemeKind>,
    pub dt: f64,
    pub dts: Vec<f64>,
    pub alphas: Vec<f64>,
    pub final_time: f64,
    pub samples: u64,
    pub seed: u64,
    pub phi: TestFunction,
    pub reference: ReferenceMode,
    pub paired: bool,
    pub flag_threshold: f64,
    pub out: Option<PathBuf>,
    pub strict: bool,
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> Result<Self> {
        let flavor = match args.flavor.as_deref().unwrap_or("fd") {
            "fd" => Flavor::FiniteDifference,
            "spectral" => Flavor::SpectralGalerkin,
            other => return Err(Error::InvalidParameter(format!("unknown flavor `{other}` (expected fd or spectral)"))),
        };
        let resolution = match (args.modes, args.dx) {
            (Some(k), _) => Resolution::Modes(k),
            (None, Some(dx)) => Resolution::Spacing(dx),
            (None, None) => Resolution::Spacing(0.02),
        };
        let space = SpectralSpace::new(flavor, resolution)?;
        let nonlinearity = Nonlinearity::from_name(args.nonlinearity.as_deref().unwrap_or("cos"))?;
        let schemes = args
            .scheme
            .as_deref()
            .unwrap_or("lm")
            .split(',')
            .map(|s| parse_scheme(s.trim(), args.theta, args.alpha))
            .collect::<Result<Vec<_>>>()?;
        let dt = args.dt.unwrap_or(0.0625);
        let dts = match &args.dts {
            Some(s) => parse_list("dts", s)?,
            None => (2..=6).map(|j| 2f64.powi(-j)).collect(),
        };
        let alphas = match &args.alphas {
            Some(s) => parse_list("alphas", s)?,
            None => vec![0.0, 0.5, 1.0],
        };
        let final_time = match args.steps {
            Some(n) => n as f64 * dt,
            None => args.final_time.unwrap_or(10.0),
        };
        let samples = args.samples.unwrap_or(100_000);
        let phi = TestFunction::from_name(args.phi.as_deref().unwrap_or("expnorm"))?;
        let reference = match args.reference.as_deref() {
            Some("analytic") => ReferenceMode::Analytic,
            Some("fine-lm") => ReferenceMode::FineLm {
                dt: args.ref_dt.unwrap_or(2f64.powi(-8)),
                samples: args.ref_samples.unwrap_or(samples),
            },
            Some(other) => {
                return Err(Error::InvalidParameter(format!(
                    "unknown reference `{other}` (expected analytic or fine-lm)"
                )))
            }
            None if nonlinearity.is_zero() => ReferenceMode::Analytic,
            None => ReferenceMode::FineLm {
                dt: args.ref_dt.unwrap_or(2f64.powi(-8)),
                samples: args.ref_samples.unwrap_or(samples),
            },
        };
        Ok(RunConfig {
            space,
            nonlinearity,
            schemes,
            dt,
            dts,
            alphas,
            final_time,
            samples,
            seed: args.seed.unwrap_or(0),
            phi,
            reference,
            paired: args.paired,
            flag_threshold: args.flag_threshold.unwrap_or(harness::DEFAULT_FLAG_THRESHOLD),
            out: args.out.clone(),
            strict: args.strict,
        })
    }

    pub fn model(&self) -> Model {
        Model::new(self.space.clone(), self.nonlinearity.clone())
    }

    pub fn ensemble(&self) -> EnsembleConfig {
        EnsembleConfig::new(self.samples, self.final_time, self.seed)
    }

    fn single_scheme(&self) -> Result<SchemeKind> {
        match self.schemes.as_slice() {
            [kind] => Ok(*kind),
            _ => Err(Error::InvalidParameter("this subcommand takes a single --scheme".into())),
        }
    }

    /// Builds the reference for sweeps. An unpaired Monte Carlo reference
    /// uses trajectories after those of the `runs` sweep rows, so it is
    /// independent of them.
    pub fn build_reference(&self, model: &Model, runs: usize) -> Result<Reference> {
        let cfg = self.ensemble();
        match (self.reference, self.paired) {
            (ReferenceMode::FineLm { dt, samples }, true) => {
                if samples != self.samples {
                    return Err(Error::InvalidParameter(
                        "--paired needs --ref-samples equal to --samples".into(),
                    ));
                }
                Ok(Reference::Paired(Arc::new(ReferenceSamples::fine_lm(model, dt, &self.phi, &cfg)?)))
            }
            (ReferenceMode::Analytic, true) => Err(Error::InvalidParameter(
                "--paired needs a Monte Carlo reference (--reference fine-lm)".into(),
            )),
            (mode, false) => {
                let offset = runs as u64 * self.samples;
                Ok(Reference::Value(harness::reference_value(model, &self.phi, mode, &cfg.with_offset(offset))?))
            }
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::AllDiverged(_) => EXIT_DIVERGED,
        _ => EXIT_VALIDATION,
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn emit_csv(&mut self, cfg: &RunConfig, text: &str) -> Result<()> {
        match &cfg.out {
            Some(path) => fs::write(path, text)?,
            None => self.out.write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let mut io = Io { out, err };
    match dispatch(cli, &mut io) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io.err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli, io: &mut Io<'_>) -> Result<i32> {
    let config = match &cli.config {
        Some(path) => parse_config(&fs::read_to_string(path)?)?,
        None => BTreeMap::new(),
    };
    let resolve = |mut args: RunArgs| -> Result<RunConfig> {
        args.merge_config(&config)?;
        RunConfig::from_args(&args)
    };
    match cli.command {
        Command::Sample(a) => cmd_sample(&resolve(a)?, io),
        Command::Sweep(a) => cmd_sweep(&resolve(a)?, io),
        Command::AlphaSweep(a) => cmd_alpha_sweep(&resolve(a)?, io),
        Command::Traj(a) => cmd_traj(&resolve(a)?, io),
        Command::Verify(a) => {
            let mut filter = a.filter;
            if filter.is_none() {
                filter = config.get("filter").cloned();
            }
            cmd_verify(&VerifyOptions { filter, trace_weight: a.trace_weight }, io)
        }
    }
}

fn cmd_sample(cfg: &RunConfig, io: &mut Io<'_>) -> Result<i32> {
    let model = cfg.model();
    let spec = SchemeSpec::new(cfg.single_scheme()?, cfg.dt)?;
    let est = run_ensemble(&model, spec, &cfg.phi, &cfg.ensemble())?;
    let csv = format!(
        "scheme,dt,T,samples,seed,mean,stderr,n_diverged\n{},{},{},{},{},{},{},{}\n",
        spec.kind(),
        spec.dt(),
        est.final_time,
        est.n_samples,
        est.seed,
        est.mean,
        est.stderr,
        est.n_diverged
    );
    io.emit_csv(cfg, &csv)?;
    writeln!(
        io.err,
        "{} dt={}: mean {:.6} stderr {:.2e} diverged {}/{}",
        spec.kind(),
        spec.dt(),
        est.mean,
        est.stderr,
        est.n_diverged,
        est.n_samples
    )?;
    Ok(divergence_status(cfg, est.n_diverged))
}

fn divergence_status(cfg: &RunConfig, n_diverged: u64) -> i32 {
    if cfg.strict && n_diverged > 0 {
        EXIT_DIVERGED
    } else {
        EXIT_OK
    }
}

fn report_divergence(report: &ConvergenceReport) -> u64 {
    report.rows.iter().map(|r| r.n_diverged).sum()
}

fn cmd_sweep(cfg: &RunConfig, io: &mut Io<'_>) -> Result<i32> {
    if cfg.dts.len() < 3 {
        return Err(Error::InvalidParameter(format!("a sweep needs at least 3 time steps, got {}", cfg.dts.len())));
    }
    let model = cfg.model();
    let reference = cfg.build_reference(&model, cfg.schemes.len() * cfg.dts.len())?;
    let mut csv = String::new();
    let mut diverged = 0;
    for (i, &kind) in cfg.schemes.iter().enumerate() {
        // Unpaired schemes get their own trajectory ranges.
        let ens = cfg.ensemble();
        let ens = match reference {
            Reference::Value(_) => ens.with_offset((i * cfg.dts.len()) as u64 * cfg.samples),
            Reference::Paired(_) => ens,
        };
        let mut report = dt_sweep(&model, kind, &cfg.phi, &cfg.dts, &ens, &reference)?;
        report.refit(cfg.flag_threshold);
        diverged += report_divergence(&report);
        csv.push_str(&report.to_csv(i == 0));
        writeln!(io.err, "{}: fitted order {}", kind, fmt_order(report.fitted_order))?;
    }
    io.emit_csv(cfg, &csv)?;
    Ok(divergence_status(cfg, diverged))
}

fn fmt_order(order: Option<f64>) -> String {
    order.map_or("unavailable".into(), |p| format!("{p:.4}"))
}

fn cmd_alpha_sweep(cfg: &RunConfig, io: &mut Io<'_>) -> Result<i32> {
    if cfg.dts.len() < 3 {
        return Err(Error::InvalidParameter(format!("a sweep needs at least 3 time steps, got {}", cfg.dts.len())));
    }
    let model = cfg.model();
    let reference = cfg.build_reference(&model, cfg.alphas.len() * cfg.dts.len())?;
    let mut csv = String::new();
    let mut diverged = 0;
    let mut summary = String::from("# alpha,fitted_order\n");
    for (i, &alpha) in cfg.alphas.iter().enumerate() {
        let ens = match reference {
            Reference::Value(_) => cfg.ensemble().with_offset((i * cfg.dts.len()) as u64 * cfg.samples),
            Reference::Paired(_) => cfg.ensemble(),
        };
        let mut report = alpha_sweep(&model, &[alpha], &cfg.phi, &cfg.dts, &ens, &reference)?
            .pop()
            .expect("one report per alpha");
        report.refit(cfg.flag_threshold);
        diverged += report_divergence(&report);
        csv.push_str(&report.to_csv(i == 0));
        summary.push_str(&format!("# {alpha},{}\n", fmt_order(report.fitted_order)));
    }
    csv.push_str(&summary);
    io.emit_csv(cfg, &csv)?;
    io.err.write_all(summary.as_bytes())?;
    Ok(divergence_status(cfg, diverged))
}

fn cmd_traj(cfg: &RunConfig, io: &mut Io<'_>) -> Result<i32> {
    let model = cfg.model();
    let spec = SchemeSpec::new(cfg.single_scheme()?, cfg.dt)?;
    let integ = Integrator::new(&model, spec)?;
    let n_steps = harness::steps_for(cfg.final_time, cfg.dt)?;
    let mut stream = NoiseStream::with_layout(cfg.seed, 0, NoiseLayout::PerStep);
    let space = model.space();
    let mut csv = String::from("step,t");
    for i in 1..=space.modes() {
        csv.push_str(&format!(",x_{i}"));
    }
    csv.push('\n');
    let mut grid = vec![0.0; space.modes()];
    let mut scratch = space.scratch();
    let outcome = run_with_observer(&integ, &space.zeros(), &mut stream, n_steps, |n, y| {
        space.to_physical_into(y, &mut grid, &mut scratch);
        csv.push_str(&format!("{n},{}", n as f64 * cfg.dt));
        for v in &grid {
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
    })?;
    io.emit_csv(cfg, &csv)?;
    Ok(if outcome.diverged { EXIT_DIVERGED } else { EXIT_OK })
}

fn cmd_verify(opts: &VerifyOptions, io: &mut Io<'_>) -> Result<i32> {
    let results = run_checks(opts);
    io.out.write_all(format_table(&results).as_bytes())?;
    Ok(if all_passed(&results) { EXIT_OK } else { EXIT_VERIFY_FAILED })
}
