//! `majb`: spectra, phase diagnostics and decoherence parameters of the
//! interacting Kitaev chain over parameter grids.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use majorana_core::sweep::{preset, AxisValues, FixedParams, GridPoint, SweepAxis, PRESET_NAMES};
use majorana_core::{run_sweep, Axis, Error, NoiseKind, ResultTable, SweepGrid, SweepTask, TableFormat};

#[derive(Parser, Debug)]
#[command(
    name = "majb",
    version,
    about = "Exact diagonalization and decoherence parameters of the interacting Kitaev chain",
    long_about = "Exact diagonalization and decoherence parameters of the interacting Kitaev chain.\n\n\
                  Energies are in units of the hopping w. Parameter flags accept a single value, a comma \
                  list (1,2,5) or an inclusive range start:stop:step; lists and ranges become sweep axes.",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ground energies of both parity sectors and ΔE.
    Gap(Common),
    /// ΔE versus chain length (default N = 4,6,...,12).
    GapVsN(Common),
    /// ΔE, magnetization and the finite-size phase label.
    PhaseDiagram(Common),
    /// Low-frequency noise parameter γ_L or γ̃_L.
    GammaLow(Common),
    /// High-frequency channel weights and transition frequencies.
    Channels(Common),
    /// Lindblad rates including bath occupations.
    Rates(Common),
    /// Ground-state spin-spin correlations from an anchor site.
    Correlations(Common),
    /// Lindblad evolution of the truncated model; writes the trajectory.
    Evolve(Common),
    /// Runs a grid from a JSON config file or a named preset.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Chain length N.
    #[arg(long, value_name = "VALUES")]
    n_sites: Option<AxisValues>,
    /// Pairing Δ/w.
    #[arg(long, value_name = "VALUES", allow_hyphen_values = true)]
    delta: Option<AxisValues>,
    /// Chemical potential μ/w.
    #[arg(long, value_name = "VALUES", allow_hyphen_values = true)]
    mu: Option<AxisValues>,
    /// Interaction U/w.
    #[arg(long, value_name = "VALUES", allow_hyphen_values = true)]
    u: Option<AxisValues>,
    /// Bath temperature T/w.
    #[arg(long, value_name = "VALUES")]
    temperature: Option<AxisValues>,
    /// Environment coupling g (or g̃).
    #[arg(long)]
    coupling: Option<f64>,
    /// Bath density of states.
    #[arg(long)]
    dos: Option<f64>,
    /// Eigenpairs computed per parity sector.
    #[arg(long)]
    levels: Option<usize>,
    /// Highest level index in channel and rate tables.
    #[arg(long)]
    n_max: Option<usize>,
    /// Noise type: dissipation or dephasing.
    #[arg(long)]
    noise: Option<NoiseKind>,
    /// Correlation axis x, y or z; all three when omitted.
    #[arg(long)]
    axis: Option<Axis>,
    /// Anchor site of the correlation row.
    #[arg(long)]
    anchor: Option<usize>,
    /// Degeneracy threshold on ΔE in units of w.
    #[arg(long)]
    eps_gap: Option<f64>,
    /// Magnetization threshold separating DW-AFM from IDW.
    #[arg(long)]
    eps_m: Option<f64>,
    /// Fraction of N above which |M| counts as polarized.
    #[arg(long)]
    saturation: Option<f64>,
    /// Frequency separation below which channels are flagged as degenerate.
    #[arg(long)]
    degeneracy_tol: Option<f64>,
    /// Evolution end time (units of 1/w).
    #[arg(long)]
    t_final: Option<f64>,
    /// Integration step.
    #[arg(long)]
    dt: Option<f64>,
    /// Levels kept in the truncated model.
    #[arg(long)]
    level_budget: Option<usize>,
    /// Energy rank of the initial pure state (1 = ground).
    #[arg(long)]
    initial_level: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// csv or json; inferred from the --out extension when omitted.
    #[arg(long)]
    format: Option<TableFormat>,
    /// Worker threads.
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// JSON grid file with keys task, axes and fixed.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Named grid.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
    preset: Option<String>,
    #[command(flatten)]
    common: Common,
}

/// Failures before any computation starts.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn set_scalar_or_axis(grid: &mut SweepGrid, name: SweepAxis, values: &AxisValues) -> anyhow::Result<()> {
    let expanded = values.expand().map_err(|e| usage(format!("--{}: {e}", name.name().replace('_', "-"))))?;
    if expanded.len() > 1 {
        grid.set_axis(name, values.clone());
        return Ok(());
    }
    grid.axes.retain(|a| a.name != name);
    let v = expanded[0];
    let f = &mut grid.fixed;
    match name {
        SweepAxis::Mu => f.mu = v,
        SweepAxis::U => f.u = v,
        SweepAxis::Delta => f.delta = v,
        SweepAxis::Temperature => f.temperature = v,
        SweepAxis::NSites => {
            if v.fract() != 0.0 || v < 0.0 {
                return Err(usage(format!("--n-sites {v} is not a whole number")));
            }
            f.n_sites = v as usize
        }
    }
    Ok(())
}

/// Applies command-line values on top of the grid.
fn apply_common(grid: &mut SweepGrid, c: &Common) -> anyhow::Result<()> {
    for (name, values) in [
        (SweepAxis::NSites, &c.n_sites),
        (SweepAxis::Delta, &c.delta),
        (SweepAxis::Mu, &c.mu),
        (SweepAxis::U, &c.u),
        (SweepAxis::Temperature, &c.temperature),
    ] {
        if let Some(v) = values {
            set_scalar_or_axis(grid, name, v)?;
        }
    }
    let f: &mut FixedParams = &mut grid.fixed;
    macro_rules! set {
        ($($field:ident),*) => {
            $(if let Some(v) = c.$field.clone() {
                f.$field = v;
            })*
        };
    }
    set!(coupling, dos, levels, n_max, noise, anchor, eps_gap, eps_m, saturation, degeneracy_tol, t_final, dt);
    if c.axis.is_some() {
        f.axis = c.axis;
    }
    if c.level_budget.is_some() {
        f.level_budget = c.level_budget;
    }
    if c.initial_level.is_some() {
        f.initial_level = c.initial_level;
    }
    if c.levels.is_some() && c.n_max.is_none() {
        f.n_max = f.n_max.min(f.levels);
    }
    Ok(())
}

fn output_format(c: &Common) -> TableFormat {
    c.format.unwrap_or_else(|| {
        match c.out.as_deref().and_then(Path::extension).and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => TableFormat::Json,
            _ => TableFormat::Csv,
        }
    })
}

fn emit(table: &ResultTable, c: &Common) -> anyhow::Result<()> {
    let format = output_format(c);
    match &c.out {
        Some(path) => table.write_to_path(format, path)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write(format, &mut lock)?;
            if format == TableFormat::Json {
                writeln!(lock)?;
            }
        }
    }
    Ok(())
}

fn parallelism(c: &Common) -> anyhow::Result<usize> {
    match c.parallelism {
        Some(0) => Err(usage("--parallelism must be at least 1")),
        Some(p) => Ok(p),
        None => Ok(std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1)),
    }
}

fn validated(grid: &SweepGrid) -> anyhow::Result<()> {
    grid.validate().map_err(|e| usage(e.to_string()))
}

fn run_grid(grid: SweepGrid, c: &Common) -> anyhow::Result<ExitCode> {
    validated(&grid)?;
    let table = run_sweep(&grid, parallelism(c)?)?;
    emit(&table, c)?;
    let status = table.column_index("status").expect("sweep tables have a status column");
    let failed: Vec<&str> = table
        .rows
        .iter()
        .filter_map(|r| r[status].as_text())
        .filter(|s| *s != "ok")
        .collect();
    if failed.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    eprintln!("majb: {} of {} grid points failed; first: {}", failed.len(), table.len(), failed[0]);
    Ok(ExitCode::from(1))
}

fn task_grid(task: SweepTask, c: &Common) -> anyhow::Result<SweepGrid> {
    let mut grid = SweepGrid::new(task, Vec::new(), FixedParams::default());
    if task == SweepTask::GapVsN && c.n_sites.is_none() {
        grid.set_axis(SweepAxis::NSites, AxisValues::List(vec![4.0, 6.0, 8.0, 10.0, 12.0]));
    }
    apply_common(&mut grid, c)?;
    if task == SweepTask::GapVsN && !grid.axes.iter().any(|a| a.name == SweepAxis::NSites) {
        let n = grid.fixed.n_sites as f64;
        grid.set_axis(SweepAxis::NSites, AxisValues::List(vec![n]));
    }
    Ok(grid)
}

fn evolve(c: &Common) -> anyhow::Result<ExitCode> {
    let grid = task_grid(SweepTask::Evolve, c)?;
    validated(&grid)?;
    let mut points = grid.points()?;
    if points.len() != 1 || !grid.axes.is_empty() {
        return Err(usage("evolve takes single parameter values; use `sweep` with task evolve for grids"));
    }
    let point: GridPoint = points.remove(0);
    let spectrum = point.spectrum()?;
    let trajectory = majorana_core::sweep::evolve_point(&point, &spectrum, grid.level_budget())?;
    let mut table = trajectory.to_table();
    table.manifest = Some(majorana_core::sweep::manifest(&grid));
    emit(&table, c)?;
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: &SweepArgs) -> anyhow::Result<ExitCode> {
    let mut grid = match (&args.config, &args.preset) {
        (Some(path), _) => SweepGrid::from_path(path).map_err(|e| match e {
            Error::InvalidGrid(msg) => usage(format!("{}: {msg}", path.display())),
            other => usage(other.to_string()),
        })?,
        (None, Some(name)) => preset(name).map_err(|e| usage(e.to_string()))?,
        (None, None) => return Err(usage("either --config or --preset is required")),
    };
    apply_common(&mut grid, &args.common)?;
    run_grid(grid, &args.common)
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    let noise_task = |c: &Common, dissipation, dephasing| match c.noise.unwrap_or(NoiseKind::Dissipation) {
        NoiseKind::Dissipation => dissipation,
        NoiseKind::Dephasing => dephasing,
    };
    let (task, common) = match &cli.command {
        Command::Gap(c) => (SweepTask::Gap, c),
        Command::GapVsN(c) => (SweepTask::GapVsN, c),
        Command::PhaseDiagram(c) => (SweepTask::PhaseDiagram, c),
        Command::GammaLow(c) => (
            noise_task(c, SweepTask::GammaLowDissipation, SweepTask::GammaLowDephasing),
            c,
        ),
        Command::Channels(c) => (SweepTask::ChannelWeights, c),
        Command::Rates(c) => (SweepTask::Rates, c),
        Command::Correlations(c) => (SweepTask::Correlations, c),
        Command::Evolve(c) => return evolve(c),
        Command::Sweep(args) => return sweep(args),
    };
    run_grid(task_grid(task, common)?, common)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match dispatch(cli).context("majb") {
        Ok(code) => code,
        Err(e) => {
            let is_usage = e.chain().any(|c| c.is::<UsageError>());
            eprintln!("{e:#}");
            if is_usage {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
