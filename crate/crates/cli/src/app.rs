//! Command-line surface.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use spherical_mg::{stationary_solution, StationaryTheory};

use crate::config::{resolve, resolve_opt, resolve_path, ConfigFile};
use crate::engines::{boundaries, external, run_grid, RunSettings};
use crate::report;
use crate::row::{write_rows, Format, ResultRow};
use crate::sweep::{AxisSpec, Engine, EngineSet, Point, SeedList, SweepSpec};

pub const DEFAULT_AGENTS: usize = 1000;
pub const DEFAULT_T_EQ: usize = 1000;
pub const DEFAULT_T_MEAS: usize = 2000;
pub const DEFAULT_HORIZON: usize = 400;
pub const DEFAULT_TAIL: f64 = 0.25;

#[derive(Debug, Parser)]
#[command(name = "smg", version, about = "Spherical Minority Game experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form stationary observables.
    Theory(CommonArgs),
    /// Transition lines alpha_c1 and alpha_c2 along a kappa or A sweep.
    PhaseDiagram(CommonArgs),
    /// Finite-size batch simulations averaged over seeds.
    Simulate(CommonArgs),
    /// Exact kernel iteration with tail estimates.
    Kernels(CommonArgs),
    /// Several engines side by side with a deviation summary.
    Compare(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Theory(_) => "theory",
            Command::PhaseDiagram(_) => "phase-diagram",
            Command::Simulate(_) => "simulate",
            Command::Kernels(_) => "kernels",
            Command::Compare(_) => "compare",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Theory(a)
            | Command::PhaseDiagram(a)
            | Command::Simulate(a)
            | Command::Kernels(a)
            | Command::Compare(a) => a,
        }
    }
}

/// Axis values accept `v`, `v1,v2,...` or `min:max:count[:log]`.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<AxisSpec>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<AxisSpec>,
    /// External bid amplitude.
    #[arg(long = "A", id = "A", allow_hyphen_values = true)]
    pub amplitude: Option<AxisSpec>,
    /// 0 for a static drive, 1 for a period-two drive.
    #[arg(long)]
    pub zeta: Option<u8>,
    #[arg(long)]
    pub agents: Option<usize>,
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// `1,2,3` or `1..5`.
    #[arg(long)]
    pub seeds: Option<SeedList>,
    #[arg(long = "t-eq")]
    pub t_eq: Option<usize>,
    #[arg(long = "t-meas")]
    pub t_meas: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Kernel iteration length.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Fraction of the kernel horizon used for tail estimates.
    #[arg(long)]
    pub tail: Option<f64>,
    /// Comma list from theory, simulate, kernels (compare only).
    #[arg(long)]
    pub engines: Option<EngineSet>,
}

/// Fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub spec: SweepSpec,
    pub settings: RunSettings,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub workers: Option<usize>,
    pub engines: EngineSet,
}

/// Argument problems, reported with exit code 1.
#[derive(Debug)]
pub struct UsageError(pub anyhow::Error);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(r: anyhow::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| UsageError(e).into())
}

pub fn resolve_args(command: &Command) -> anyhow::Result<Resolved> {
    usage(resolve_inner(command))
}

fn resolve_inner(command: &Command) -> anyhow::Result<Resolved> {
    let args = command.args();
    let config = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let needs_alpha = !matches!(command, Command::PhaseDiagram(_));
    let alpha = resolve_opt(args.alpha.clone(), &config, "alpha")?;
    let alpha = match (alpha, needs_alpha) {
        (Some(a), _) => a,
        (None, false) => AxisSpec::single(1.0),
        (None, true) => bail!("--alpha is required"),
    };
    let spec = SweepSpec {
        alpha,
        kappa: resolve(args.kappa.clone(), &config, "kappa", AxisSpec::single(0.0))?,
        amplitude: resolve(args.amplitude.clone(), &config, "A", AxisSpec::single(0.0))?,
        zeta: resolve(args.zeta, &config, "zeta", 0)?,
    };
    spec.validate().map_err(anyhow::Error::msg)?;
    if needs_alpha {
        if let Some(a) = spec.alpha.values.iter().find(|&&a| a <= 0.0) {
            bail!("alpha must be > 0, got {a}");
        }
    } else if spec.alpha.is_sweep() {
        bail!("phase-diagram sweeps kappa or A, not alpha");
    }
    if let Some(k) = spec.kappa.values.iter().find(|&&k| !(0.0..=1.0).contains(&k)) {
        bail!("kappa must lie in [0, 1], got {k}");
    }

    let seeds = match (args.seed, args.seeds.clone()) {
        (Some(s), _) => SeedList(vec![s]),
        (None, Some(list)) => list,
        (None, None) => match resolve_opt(None::<SeedList>, &config, "seeds")? {
            Some(list) => list,
            None => resolve_opt(None::<u64>, &config, "seed")?
                .map(|s| SeedList(vec![s]))
                .unwrap_or_default(),
        },
    };
    let settings = RunSettings {
        agents: resolve(args.agents, &config, "agents", DEFAULT_AGENTS)?,
        seeds: seeds.0,
        t_equilibrate: resolve(args.t_eq, &config, "t-eq", DEFAULT_T_EQ)?,
        t_measure: resolve(args.t_meas, &config, "t-meas", DEFAULT_T_MEAS)?,
        horizon: resolve(args.horizon, &config, "horizon", DEFAULT_HORIZON)?,
        tail: resolve(args.tail, &config, "tail", DEFAULT_TAIL)?,
    };
    if settings.agents == 0 {
        bail!("agents must be positive");
    }
    if settings.t_measure < spherical_mg::simulator::MIN_MEASURE_STEPS {
        bail!(
            "t-meas must be at least {}",
            spherical_mg::simulator::MIN_MEASURE_STEPS
        );
    }
    if !(settings.tail > 0.0 && settings.tail <= 0.5) {
        bail!("tail must lie in (0, 0.5], got {}", settings.tail);
    }
    if ((settings.tail * settings.horizon as f64).floor() as usize) < 8 {
        bail!("horizon {} too short for tail {}", settings.horizon, settings.tail);
    }

    let engines = match command {
        Command::Compare(_) => {
            let e = resolve(args.engines.clone(), &config, "engines", EngineSet::all())?;
            if e.0.len() < 2 {
                bail!("compare needs at least two engines");
            }
            e
        }
        Command::Simulate(_) => EngineSet::only(Engine::Simulate),
        Command::Kernels(_) => EngineSet::only(Engine::Kernels),
        Command::Theory(_) | Command::PhaseDiagram(_) => EngineSet::only(Engine::Theory),
    };
    let workers = resolve_opt(args.workers, &config, "workers")?;
    if workers == Some(0) {
        bail!("workers must be positive");
    }
    Ok(Resolved {
        spec,
        settings,
        out: resolve_path(args.out.clone(), &config, "out"),
        format: resolve(args.format, &config, "format", Format::Csv)?,
        workers,
        engines,
    })
}

fn header(command: &str) -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!(
        "generated by smg {} {command} at unix time {secs}",
        env!("CARGO_PKG_VERSION")
    )
}

fn sink(out: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn fmt_value(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

pub fn describe(point: &Point, t: &StationaryTheory<f64>) -> String {
    let mut lines = vec![
        format!(
            "alpha = {}, kappa = {}, A = {}, zeta = {}",
            point.alpha, point.kappa, point.amplitude, point.zeta
        ),
        format!("phase = {}", t.phase),
        format!("chi = {}", fmt_value(t.chi)),
    ];
    let fields = [
        ("chi_hat_plus", t.chi_hat),
        ("chi_hat_minus", t.chi_hat_minus),
        ("c0", t.c0),
        ("lambda", t.lambda),
        ("Lambda", t.growth_rate),
        ("gamma", t.gamma),
        ("psi0", t.psi0),
        ("psi1", t.psi1),
        ("sigma_fl", t.sigma_fl),
        ("sigma", t.sigma),
        ("bid_mean", t.bid_mean),
        ("bid_staggered", t.bid_staggered),
    ];
    for (name, value) in fields {
        if let Some(v) = value {
            lines.push(format!("{name} = {}", fmt_value(v)));
        }
    }
    lines.join("\n")
}

/// Runs a parsed command. `Ok(true)` means every point succeeded.
pub fn execute(cli: &Cli) -> anyhow::Result<bool> {
    let resolved = resolve_args(&cli.command)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = resolved.workers {
        pool = pool.num_threads(w);
    }
    let pool = pool.build().context("starting worker pool")?;
    pool.install(|| dispatch(&cli.command, &resolved))
}

fn dispatch(command: &Command, r: &Resolved) -> anyhow::Result<bool> {
    let points = r.spec.points();
    match command {
        Command::PhaseDiagram(_) => {
            let rows = points
                .iter()
                .map(boundaries)
                .collect::<spherical_mg::Result<Vec<_>>>()?;
            write_rows(sink(&r.out)?, &rows, r.format, &header(command.name()))?;
            Ok(true)
        }
        Command::Theory(_) if r.out.is_none() && r.format == Format::Csv => {
            let mut ok = true;
            let mut stdout = io::stdout().lock();
            for (k, p) in points.iter().enumerate() {
                if k > 0 {
                    writeln!(stdout)?;
                }
                match stationary_solution(p.alpha, p.kappa, &external(p)) {
                    Ok(t) => writeln!(stdout, "{}", describe(p, &t))?,
                    Err(e) => {
                        ok = false;
                        eprintln!("alpha={} kappa={} A={}: {e}", p.alpha, p.kappa, p.amplitude);
                    }
                }
            }
            Ok(ok)
        }
        _ => {
            let rows = run_grid(&points, &r.engines, &r.settings);
            write_rows(sink(&r.out)?, &rows, r.format, &header(command.name()))?;
            report_failures(&rows);
            if matches!(command, Command::Compare(_)) {
                let summary = report::render(&rows);
                if r.out.is_some() {
                    print!("{summary}");
                } else {
                    eprint!("{summary}");
                }
            }
            Ok(rows.iter().all(|row| row.error.is_none()))
        }
    }
}

fn report_failures(rows: &[ResultRow]) {
    for row in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "alpha={} kappa={} A={}: {}",
            row.alpha,
            row.kappa,
            row.a_tilde,
            row.error.as_deref().unwrap_or_default()
        );
    }
}
