//! Parameter grids, per-point tasks and deterministic parallel sweeps.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoherence::{decoherence_report, BathSpec, NoiseKind, RateOptions, FREQ_FLOOR};
use crate::error::{Error, Result};
use crate::jw::{dephasing_matrix_elements, dissipative_matrix_elements, MatrixElementTable};
use crate::lindblad::{build_truncated_model, evolve, DensityMatrix, EvolveOptions, InvariantTolerances};
use crate::model::{max_sites, ChainParams, ParitySector};
use crate::observables::{
    classify_phase, observable_ground, spin_correlations, ClassifyOptions, PhaseEvidence, DEFAULT_EPS_GAP, DEFAULT_EPS_M,
    DEFAULT_SATURATION,
};
use crate::pauli::Axis;
use crate::spectra::{solve_chain, ChainSpectrum, SpectrumOptions, DEFAULT_DEGENERACY_TOL, DEFAULT_K};
use crate::table::{Cell, Column, ResultTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Mu,
    U,
    Delta,
    NSites,
    Temperature,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Mu => "mu",
            SweepAxis::U => "u",
            SweepAxis::Delta => "delta",
            SweepAxis::NSites => "n_sites",
            SweepAxis::Temperature => "temperature",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "mu" => Ok(SweepAxis::Mu),
            "u" => Ok(SweepAxis::U),
            "delta" => Ok(SweepAxis::Delta),
            "n_sites" | "n-sites" => Ok(SweepAxis::NSites),
            "temperature" => Ok(SweepAxis::Temperature),
            other => Err(format!("unknown sweep axis '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValues {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl AxisValues {
    /// Expands to concrete values; ranges include `stop` when it lies on
    /// the step lattice.
    pub fn expand(&self) -> Result<Vec<f64>> {
        match self {
            AxisValues::List(v) => {
                if v.is_empty() {
                    return Err(Error::InvalidGrid("axis value list is empty".into()));
                }
                if let Some(x) = v.iter().find(|x| !x.is_finite()) {
                    return Err(Error::InvalidGrid(format!("axis value {x} is not finite")));
                }
                Ok(v.clone())
            }
            &AxisValues::Range { start, stop, step } => {
                if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
                    return Err(Error::InvalidGrid("range bounds must be finite".into()));
                }
                if step == 0.0 || (stop - start) * step < 0.0 {
                    return Err(Error::InvalidGrid(format!(
                        "step {step} does not lead from {start} to {stop}"
                    )));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                if count > 1_000_000 {
                    return Err(Error::InvalidGrid(format!("range has {count} points")));
                }
                Ok((0..count).map(|i| start + i as f64 * step).collect())
            }
        }
    }
}

impl std::str::FromStr for AxisValues {
    type Err = String;

    /// `x`, `x,y,z` or `start:stop:step`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("'{t}' is not a number"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.len() {
            1 => Ok(AxisValues::List(s.split(',').map(num).collect::<std::result::Result<_, _>>()?)),
            3 => Ok(AxisValues::Range {
                start: num(parts[0])?,
                stop: num(parts[1])?,
                step: num(parts[2])?,
            }),
            _ => Err(format!("'{s}' is neither a list nor start:stop:step")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub name: SweepAxis,
    pub values: AxisValues,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepTask {
    Gap,
    GapVsN,
    PhaseDiagram,
    GammaLowDissipation,
    GammaLowDephasing,
    ChannelWeights,
    Rates,
    Correlations,
    Evolve,
}

impl SweepTask {
    pub fn name(self) -> &'static str {
        match self {
            SweepTask::Gap => "gap",
            SweepTask::GapVsN => "gap_vs_n",
            SweepTask::PhaseDiagram => "phase_diagram",
            SweepTask::GammaLowDissipation => "gamma_low_dissipation",
            SweepTask::GammaLowDephasing => "gamma_low_dephasing",
            SweepTask::ChannelWeights => "channel_weights",
            SweepTask::Rates => "rates",
            SweepTask::Correlations => "correlations",
            SweepTask::Evolve => "evolve",
        }
    }
}

/// Values shared by every grid point; swept axes override them.
/// Energies are in units of `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedParams {
    pub n_sites: usize,
    pub delta: f64,
    pub mu: f64,
    pub u: f64,
    pub temperature: f64,
    pub coupling: f64,
    pub dos: f64,
    /// Eigenpairs per sector.
    pub levels: usize,
    /// Highest level index in channel tables.
    pub n_max: usize,
    pub noise: NoiseKind,
    /// `None` reports all three axes.
    pub axis: Option<Axis>,
    pub anchor: usize,
    pub eps_gap: f64,
    pub eps_m: f64,
    pub saturation: f64,
    pub degeneracy_tol: f64,
    pub t_final: f64,
    pub dt: f64,
    /// Levels kept for dynamics; defaults to every computed level.
    pub level_budget: Option<usize>,
    /// 1-based energy rank of the initial pure state; defaults to the
    /// highest retained level.
    pub initial_level: Option<usize>,
}

impl Default for FixedParams {
    fn default() -> Self {
        Self {
            n_sites: 12,
            delta: 1.0,
            mu: 1.0,
            u: 0.0,
            temperature: 0.0,
            coupling: 1.0,
            dos: 1.0,
            levels: DEFAULT_K,
            n_max: 5,
            noise: NoiseKind::Dissipation,
            axis: None,
            anchor: 1,
            eps_gap: DEFAULT_EPS_GAP,
            eps_m: DEFAULT_EPS_M,
            saturation: DEFAULT_SATURATION,
            degeneracy_tol: DEFAULT_DEGENERACY_TOL,
            t_final: 10.0,
            dt: 0.01,
            level_budget: None,
            initial_level: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub task: SweepTask,
    #[serde(default)]
    pub axes: Vec<AxisSpec>,
    #[serde(default)]
    pub fixed: FixedParams,
}

/// One grid point: the fixed values with the swept axes applied.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub axis_values: Vec<f64>,
    pub fixed: FixedParams,
}

impl GridPoint {
    pub fn chain_params(&self) -> Result<ChainParams> {
        ChainParams::dimensionless(self.fixed.n_sites, self.fixed.delta, self.fixed.mu, self.fixed.u)
    }

    pub fn bath(&self) -> Result<BathSpec> {
        BathSpec::for_noise(self.fixed.noise, self.fixed.coupling, self.fixed.temperature, self.fixed.dos)
    }

    /// The lowest `levels` eigenpairs per sector, capped at the sector size.
    pub fn spectrum(&self) -> Result<ChainSpectrum> {
        let params = self.chain_params()?;
        let k = self.fixed.levels.min(params.dim() / 2);
        solve_chain(&params, &SpectrumOptions::for_params(&params).with_k(k))
    }
}

fn apply_axis(fixed: &mut FixedParams, axis: SweepAxis, value: f64) -> Result<()> {
    match axis {
        SweepAxis::Mu => fixed.mu = value,
        SweepAxis::U => fixed.u = value,
        SweepAxis::Delta => fixed.delta = value,
        SweepAxis::Temperature => {
            if value < 0.0 {
                return Err(Error::InvalidGrid(format!("temperature {value} is negative")));
            }
            fixed.temperature = value
        }
        SweepAxis::NSites => {
            if value.fract() != 0.0 || value < 2.0 || value > max_sites() as f64 {
                return Err(Error::InvalidGrid(format!(
                    "n_sites {value} must be an integer in 2..={}",
                    max_sites()
                )));
            }
            fixed.n_sites = value as usize
        }
    }
    Ok(())
}

impl SweepGrid {
    pub fn new(task: SweepTask, axes: Vec<AxisSpec>, fixed: FixedParams) -> Self {
        Self { task, axes, fixed }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidGrid(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json_str(&text)
    }

    /// Replaces or appends an axis.
    pub fn set_axis(&mut self, name: SweepAxis, values: AxisValues) {
        match self.axes.iter_mut().find(|a| a.name == name) {
            Some(a) => a.values = values,
            None => self.axes.push(AxisSpec { name, values }),
        }
    }

    pub fn axis_values(&self) -> Result<Vec<Vec<f64>>> {
        self.axes.iter().map(|a| a.values.expand()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, a) in self.axes.iter().enumerate() {
            if self.axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::InvalidGrid(format!("axis '{}' given twice", a.name.name())));
            }
        }
        let f = &self.fixed;
        for (name, v) in [
            ("delta", f.delta),
            ("mu", f.mu),
            ("u", f.u),
            ("coupling", f.coupling),
            ("dos", f.dos),
            ("temperature", f.temperature),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidGrid(format!("{name} = {v} is not finite")));
            }
        }
        if f.levels == 0 {
            return Err(Error::InvalidGrid("levels must be positive".into()));
        }
        if f.n_max < 1 || f.n_max > f.levels {
            return Err(Error::InvalidGrid(format!("n_max must lie in 1..={}", f.levels)));
        }
        if !(f.eps_gap > 0.0 && f.degeneracy_tol > 0.0 && f.eps_m >= 0.0) {
            return Err(Error::InvalidGrid("thresholds must be positive".into()));
        }
        if self.task == SweepTask::Evolve && !(f.dt > 0.0 && f.t_final >= 0.0) {
            return Err(Error::InvalidGrid("evolution needs dt > 0 and t_final >= 0".into()));
        }
        if self.task == SweepTask::GapVsN && !self.axes.iter().any(|a| a.name == SweepAxis::NSites) {
            return Err(Error::InvalidGrid("gap_vs_n needs an n_sites axis".into()));
        }
        for p in self.points()? {
            if p.fixed.n_sites > max_sites() {
                return Err(Error::InvalidGrid(
                    Error::Capacity {
                        n_sites: p.fixed.n_sites,
                        max_sites: max_sites(),
                    }
                    .to_string(),
                ));
            }
            p.chain_params().map_err(|e| Error::InvalidGrid(e.to_string()))?;
            p.bath().map_err(|e| Error::InvalidGrid(e.to_string()))?;
            if self.task == SweepTask::Correlations && (f.anchor == 0 || f.anchor > p.fixed.n_sites) {
                return Err(Error::InvalidGrid(format!(
                    "anchor {} outside 1..={}",
                    f.anchor, p.fixed.n_sites
                )));
            }
        }
        Ok(())
    }

    /// Grid points in row-major order (the first axis varies slowest).
    pub fn points(&self) -> Result<Vec<GridPoint>> {
        let values = self.axis_values()?;
        let total: usize = values.iter().map(Vec::len).product();
        let mut out = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut idx = vec![0; values.len()];
            for (a, vals) in values.iter().enumerate().rev() {
                idx[a] = rem % vals.len();
                rem /= vals.len();
            }
            let mut fixed = self.fixed.clone();
            let mut axis_values = Vec::with_capacity(values.len());
            for (a, spec) in self.axes.iter().enumerate() {
                let v = values[a][idx[a]];
                apply_axis(&mut fixed, spec.name, v)?;
                axis_values.push(v);
            }
            out.push(GridPoint { axis_values, fixed });
        }
        Ok(out)
    }

    fn max_n_sites(&self) -> Result<usize> {
        Ok(self.points()?.iter().map(|p| p.fixed.n_sites).max().unwrap_or(self.fixed.n_sites))
    }

    /// Levels kept for dynamics.
    pub fn level_budget(&self) -> usize {
        self.fixed.level_budget.unwrap_or(2 * self.fixed.levels)
    }

    /// Result columns produced by the task, after the axis and status
    /// columns.
    pub fn task_columns(&self) -> Result<Vec<Column>> {
        let f = &self.fixed;
        let mut cols = Vec::new();
        match self.task {
            SweepTask::Gap | SweepTask::GapVsN => {
                cols.push(Column::real("delta_e"));
                cols.push(Column::real("e_even"));
                cols.push(Column::real("e_odd"));
                cols.push(Column::text("lowest_parity"));
                cols.push(Column::text("next_parity"));
            }
            SweepTask::PhaseDiagram => {
                cols.push(Column::real("delta_e"));
                cols.push(Column::integer("same_parity"));
                cols.push(Column::real("magnetization"));
                cols.push(Column::text("phase"));
            }
            SweepTask::GammaLowDissipation => {
                cols.push(Column::real("delta_e"));
                cols.push(Column::real("gamma_l"));
            }
            SweepTask::GammaLowDephasing => {
                cols.push(Column::real("delta_e"));
                cols.push(Column::real("gamma_tilde_l"));
            }
            SweepTask::ChannelWeights => {
                for (a, b) in channel_pairs(f.noise, f.n_max) {
                    cols.push(Column::real(format!("freq_{a}_{b}")));
                    cols.push(Column::real(format!("weight_{a}_{b}")));
                }
            }
            SweepTask::Rates => {
                cols.push(Column::real("gamma_low"));
                for (a, b) in channel_pairs(f.noise, f.n_max) {
                    for q in ["freq", "rate", "down", "up"] {
                        cols.push(Column::real(format!("{q}_{a}_{b}")));
                    }
                }
                cols.push(Column::integer("degenerate_pairs"));
            }
            SweepTask::Correlations => {
                let axes: Vec<Axis> = f.axis.map(|a| vec![a]).unwrap_or_else(|| Axis::ALL.to_vec());
                let n = self.max_n_sites()?;
                cols.push(Column::text("ground_state"));
                for a in axes {
                    for j in (1..=n).filter(|&j| j != f.anchor) {
                        cols.push(Column::real(format!("{}{}_{}", a.name(), f.anchor, j)));
                    }
                }
            }
            SweepTask::Evolve => {
                cols.push(Column::text("levels"));
                cols.push(Column::real("t_final"));
                cols.push(Column::real("ground_population"));
                for i in 1..=self.level_budget() {
                    cols.push(Column::real(format!("p_{i}")));
                }
                cols.push(Column::real("trace_error"));
                cols.push(Column::real("min_eigenvalue"));
            }
        }
        Ok(cols)
    }

    pub fn columns(&self) -> Result<Vec<Column>> {
        let mut cols: Vec<Column> = self
            .axes
            .iter()
            .map(|a| match a.name {
                SweepAxis::NSites => Column::integer("n_sites"),
                other => Column::real(other.name()),
            })
            .collect();
        cols.push(Column::text("status"));
        cols.extend(self.task_columns()?);
        Ok(cols)
    }
}

/// Level labels of channel columns: `e1`/`o2` style, lower level first.
fn channel_pairs(noise: NoiseKind, n_max: usize) -> Vec<(String, String)> {
    let mut out = Vec::new();
    match noise {
        NoiseKind::Dissipation => {
            for n in 2..=n_max {
                out.push(("e1".to_string(), format!("o{n}")));
            }
            for n in 2..=n_max {
                out.push(("o1".to_string(), format!("e{n}")));
            }
        }
        NoiseKind::Dephasing => {
            for s in ["e", "o"] {
                for n in 2..=n_max {
                    out.push((format!("{s}1"), format!("{s}{n}")));
                }
            }
        }
    }
    out
}

fn parity_text(s: ParitySector) -> Cell {
    Cell::Text(s.name().into())
}

fn rate_options(f: &FixedParams) -> RateOptions {
    RateOptions {
        degeneracy_tol: f.degeneracy_tol,
        freq_floor: FREQ_FLOOR,
    }
}

fn weight_cells(
    noise: NoiseKind,
    spectrum: &ChainSpectrum,
    n_max: usize,
    c: Option<&MatrixElementTable>,
    d: Option<(&MatrixElementTable, &MatrixElementTable)>,
) -> Result<Vec<Cell>> {
    let mut out = Vec::new();
    let (even, odd) = (&spectrum.even, &spectrum.odd);
    match noise {
        NoiseKind::Dissipation => {
            let c = c.expect("dissipative table");
            for n in 2..=n_max {
                out.push(Cell::Real(odd.energy(n)? - even.energy(1)?));
                out.push(Cell::Real(crate::decoherence::channel_weight_dissipation(c, 1, n)?));
            }
            for n in 2..=n_max {
                out.push(Cell::Real(even.energy(n)? - odd.energy(1)?));
                out.push(Cell::Real(crate::decoherence::channel_weight_dissipation(c, n, 1)?));
            }
        }
        NoiseKind::Dephasing => {
            let (de, dodd) = d.expect("dephasing tables");
            for (sys, table) in [(even, de), (odd, dodd)] {
                for n in 2..=n_max {
                    out.push(Cell::Real(sys.energy(n)? - sys.energy(1)?));
                    out.push(Cell::Real(crate::decoherence::channel_weight_dephasing(table, n, 1)?));
                }
            }
        }
    }
    Ok(out)
}

/// Evaluates the task at one grid point.
pub fn evaluate_point(grid: &SweepGrid, point: &GridPoint) -> Result<Vec<Cell>> {
    let f = &point.fixed;
    let spectrum = point.spectrum()?;
    let params = spectrum.params;
    let n_max = f.n_max.min(spectrum.even.k_computed()).min(spectrum.odd.k_computed());
    if n_max < f.n_max && matches!(grid.task, SweepTask::ChannelWeights | SweepTask::Rates) {
        return Err(Error::MissingEigenpairs {
            requested: f.n_max,
            available: n_max,
        });
    }
    let cells = match grid.task {
        SweepTask::Gap | SweepTask::GapVsN => {
            let levels = spectrum.merged_levels();
            vec![
                Cell::Real(spectrum.ground_gap()),
                Cell::Real(spectrum.even.ground_energy()),
                Cell::Real(spectrum.odd.ground_energy()),
                parity_text(levels[0].0),
                parity_text(levels[1].0),
            ]
        }
        SweepTask::PhaseDiagram => {
            let ev = PhaseEvidence::from_spectrum(&spectrum, f.eps_gap)?;
            let opts = ClassifyOptions {
                eps_gap: f.eps_gap,
                eps_m: f.eps_m,
                saturation: f.saturation,
            };
            vec![
                Cell::Real(ev.delta_e),
                Cell::Int(ev.same_parity as i64),
                Cell::Real(ev.m),
                Cell::Text(classify_phase(&ev, &params, &opts).name().into()),
            ]
        }
        SweepTask::GammaLowDissipation => {
            let c = dissipative_matrix_elements(&spectrum.even, &spectrum.odd, 1)?;
            vec![
                Cell::Real(spectrum.ground_gap()),
                Cell::Real(crate::decoherence::gamma_low_dissipation(&c, f.coupling)?),
            ]
        }
        SweepTask::GammaLowDephasing => {
            let de = dephasing_matrix_elements(&spectrum.even, 1)?;
            let dodd = dephasing_matrix_elements(&spectrum.odd, 1)?;
            vec![
                Cell::Real(spectrum.ground_gap()),
                Cell::Real(crate::decoherence::gamma_low_dephasing(&de, &dodd, f.coupling)?),
            ]
        }
        SweepTask::ChannelWeights => match f.noise {
            NoiseKind::Dissipation => {
                let c = dissipative_matrix_elements(&spectrum.even, &spectrum.odd, n_max)?;
                weight_cells(f.noise, &spectrum, n_max, Some(&c), None)?
            }
            NoiseKind::Dephasing => {
                let de = dephasing_matrix_elements(&spectrum.even, n_max)?;
                let dodd = dephasing_matrix_elements(&spectrum.odd, n_max)?;
                weight_cells(f.noise, &spectrum, n_max, None, Some((&de, &dodd)))?
            }
        },
        SweepTask::Rates => {
            let report = decoherence_report(&spectrum, f.noise, &point.bath()?, n_max, &rate_options(f))?;
            let mut cells = vec![Cell::Real(report.gamma_low.unwrap_or(f64::NAN))];
            for (a, b) in channel_pairs(f.noise, n_max) {
                let la = parse_label(&a);
                let lb = parse_label(&b);
                match report.channel(la, lb) {
                    Some(ch) => {
                        cells.push(Cell::Real(ch.frequency));
                        cells.push(Cell::Real(ch.rate));
                        cells.push(Cell::Real(ch.down_rate));
                        cells.push(Cell::Real(ch.up_rate));
                    }
                    None => cells.extend((0..4).map(|_| Cell::na())),
                }
            }
            cells.push(Cell::Int(report.validity.len() as i64));
            cells
        }
        SweepTask::Correlations => {
            let ground = observable_ground(&spectrum, f.eps_gap)?;
            let axes: Vec<Axis> = f.axis.map(|a| vec![a]).unwrap_or_else(|| Axis::ALL.to_vec());
            let n_cols = grid.max_n_sites()?;
            let mut cells = vec![Cell::Text(format!(
                "{}{}{}",
                ground.sector.short(),
                ground.index,
                if ground.degenerate { " (degenerate)" } else { "" }
            ))];
            for a in axes {
                let row = spin_correlations(&ground.state, params.n_sites, a, f.anchor)?;
                for j in (1..=n_cols).filter(|&j| j != f.anchor) {
                    cells.push(row.value(j).map(Cell::Real).unwrap_or_else(Cell::na));
                }
            }
            cells
        }
        SweepTask::Evolve => evolve_cells(grid, point, &spectrum)?,
    };
    Ok(cells)
}

fn parse_label(s: &str) -> crate::decoherence::LevelId {
    let sector = if s.starts_with('e') {
        ParitySector::Even
    } else {
        ParitySector::Odd
    };
    crate::decoherence::LevelId::new(sector, s[1..].parse().expect("generated label"))
}

/// Builds the truncated model at a grid point, with rates for every
/// retained pair.
pub fn truncated_model_for(
    point: &GridPoint,
    spectrum: &ChainSpectrum,
    budget: usize,
) -> Result<crate::lindblad::TruncatedModel> {
    let f = &point.fixed;
    let n_max = spectrum.even.k_computed().min(spectrum.odd.k_computed());
    let report = decoherence_report(spectrum, f.noise, &point.bath()?, n_max, &rate_options(f))?;
    build_truncated_model(&[&report], spectrum, budget)
}

/// Evolves the initial pure state and returns the trajectory.
pub fn evolve_point(point: &GridPoint, spectrum: &ChainSpectrum, budget: usize) -> Result<crate::lindblad::Trajectory> {
    let f = &point.fixed;
    let model = truncated_model_for(point, spectrum, budget)?;
    let start = f.initial_level.unwrap_or(model.dim());
    if start == 0 || start > model.dim() {
        return Err(Error::InvalidParameter(format!(
            "initial level {start} outside 1..={}",
            model.dim()
        )));
    }
    let rho0 = DensityMatrix::pure(model.dim(), start - 1)?;
    let steps = (f.t_final / f.dt).ceil().max(1.0) as usize;
    let opts = EvolveOptions {
        record_every: (steps / 1000).max(1),
        tolerances: InvariantTolerances::TRAJECTORY,
    };
    evolve(&model, &rho0, f.t_final, f.dt, &opts)
}

fn evolve_cells(grid: &SweepGrid, point: &GridPoint, spectrum: &ChainSpectrum) -> Result<Vec<Cell>> {
    let budget = grid.level_budget();
    let traj = evolve_point(point, spectrum, budget)?;
    let (t, rho) = traj.last().expect("trajectory has the initial state");
    let pops = rho.populations();
    let ground: f64 = traj
        .labels
        .iter()
        .zip(&pops)
        .filter(|(l, _)| *l == "e1" || *l == "o1")
        .map(|(_, p)| p)
        .sum();
    let mut cells = vec![Cell::Text(traj.labels.join(" ")), Cell::Real(t), Cell::Real(ground)];
    for i in 0..budget {
        cells.push(pops.get(i).copied().map(Cell::Real).unwrap_or_else(Cell::na));
    }
    cells.push(Cell::Real((rho.trace() - 1.0).abs()));
    cells.push(Cell::Real(rho.min_eigenvalue()));
    Ok(cells)
}

/// Tolerances recorded in the manifest.
pub fn tolerances_manifest(grid: &SweepGrid) -> serde_json::Value {
    let s = SpectrumOptions::default();
    let f = &grid.fixed;
    serde_json::json!({
        "residual_tol": s.residual_tol,
        "cluster_tol": s.cluster_tol,
        "dense_auto_max_dim": s.dense_auto_max_dim,
        "max_matvecs_per_pair": s.max_matvecs_per_pair,
        "degeneracy_tol": f.degeneracy_tol,
        "freq_floor": FREQ_FLOOR,
        "eps_gap": f.eps_gap,
        "eps_m": f.eps_m,
        "saturation": f.saturation,
        "symmetry_tol": crate::model::SYMMETRY_TOL,
        "trajectory_trace_tol": InvariantTolerances::TRAJECTORY.trace,
        "trajectory_hermiticity_tol": InvariantTolerances::TRAJECTORY.hermiticity,
        "trajectory_min_eigenvalue": InvariantTolerances::TRAJECTORY.min_eigenvalue,
    })
}

/// Manifest attached to every sweep table. The timestamp is the only
/// field that differs between identical runs.
pub fn manifest(grid: &SweepGrid) -> serde_json::Value {
    let generated = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    serde_json::json!({
        "tool": "majb",
        "version": env!("CARGO_PKG_VERSION"),
        "task": grid.task.name(),
        "grid": grid,
        "units": "energies in units of w, hbar = k_B = 1",
        "max_sites": max_sites(),
        "tolerances": tolerances_manifest(grid),
        "generated_at_unix": generated,
    })
}

/// Evaluates every grid point on `parallelism` worker threads. Rows come
/// back in row-major grid order; a failing point yields an error status
/// and `n/a` cells.
pub fn run_sweep(grid: &SweepGrid, parallelism: usize) -> Result<ResultTable> {
    if parallelism == 0 {
        return Err(Error::InvalidGrid("parallelism must be at least 1".into()));
    }
    grid.validate()?;
    let points = grid.points()?;
    let columns = grid.columns()?;
    let n_task = grid.task_columns()?.len();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::InvalidGrid(e.to_string()))?;
    let results: Vec<Result<Vec<Cell>>> = pool.install(|| points.par_iter().map(|p| evaluate_point(grid, p)).collect());

    let mut table = ResultTable::new(columns);
    for (p, r) in points.iter().zip(results) {
        let mut row: Vec<Cell> = grid
            .axes
            .iter()
            .zip(&p.axis_values)
            .map(|(a, &v)| match a.name {
                SweepAxis::NSites => Cell::Int(v as i64),
                _ => Cell::Real(v),
            })
            .collect();
        match r {
            Ok(cells) if cells.len() == n_task => {
                row.push(Cell::Text("ok".into()));
                row.extend(cells);
            }
            Ok(cells) => {
                row.push(Cell::Text(format!(
                    "error: task produced {} cells, expected {n_task}",
                    cells.len()
                )));
                row.extend((0..n_task).map(|_| Cell::na()));
            }
            Err(e) => {
                row.push(Cell::Text(format!("error: {e}")));
                row.extend((0..n_task).map(|_| Cell::na()));
            }
        }
        table.push_row(row)?;
    }
    table.manifest = Some(manifest(grid));
    Ok(table)
}

fn range(start: f64, stop: f64, step: f64) -> AxisValues {
    AxisValues::Range { start, stop, step }
}

fn list(v: &[f64]) -> AxisValues {
    AxisValues::List(v.to_vec())
}

pub const PRESET_NAMES: [&str; 14] = [
    "fig1a", "fig1b", "fig3", "fig4", "fig5", "fig5n", "fig7", "fig8", "fig9", "fig10", "fig11", "appendixA", "fig13",
    "fig14",
];

/// Named grids: U scans, (μ, U) maps, size scans and correlation rows.
pub fn preset(name: &str) -> Result<SweepGrid> {
    let base = FixedParams::default();
    let u_scan = || AxisSpec {
        name: SweepAxis::U,
        values: range(0.0, 12.0, 0.25),
    };
    let delta_family = || AxisSpec {
        name: SweepAxis::Delta,
        values: list(&[1.0, 2.0, 3.0, 4.0, 5.0]),
    };
    let at_u8 = FixedParams {
        delta: 5.0,
        mu: 1.0,
        u: 8.0,
        ..base.clone()
    };
    let sizes = || AxisSpec {
        name: SweepAxis::NSites,
        values: range(4.0, 14.0, 2.0),
    };
    let phase_axes = || {
        vec![
            AxisSpec {
                name: SweepAxis::Mu,
                values: range(0.0, 10.0, 0.5),
            },
            AxisSpec {
                name: SweepAxis::U,
                values: range(-20.0, 20.0, 1.0),
            },
        ]
    };
    let grid = match name {
        "fig1a" => SweepGrid::new(SweepTask::Gap, vec![delta_family(), u_scan()], base),
        "fig1b" => SweepGrid::new(SweepTask::GapVsN, vec![sizes()], at_u8),
        "fig3" => SweepGrid::new(SweepTask::PhaseDiagram, phase_axes(), base),
        "fig4" => SweepGrid::new(SweepTask::PhaseDiagram, phase_axes(), FixedParams { delta: 5.0, ..base }),
        "fig5" => SweepGrid::new(SweepTask::GammaLowDissipation, vec![delta_family(), u_scan()], base),
        "fig5n" => SweepGrid::new(SweepTask::GammaLowDissipation, vec![sizes()], at_u8),
        "fig7" => SweepGrid::new(SweepTask::ChannelWeights, vec![u_scan()], FixedParams { delta: 5.0, ..base }),
        "fig8" => SweepGrid::new(SweepTask::ChannelWeights, vec![sizes()], FixedParams { n_max: 3, ..at_u8 }),
        "fig9" => SweepGrid::new(SweepTask::GammaLowDephasing, vec![delta_family(), u_scan()], base),
        "fig10" => SweepGrid::new(
            SweepTask::ChannelWeights,
            vec![u_scan()],
            FixedParams {
                delta: 5.0,
                noise: NoiseKind::Dephasing,
                ..base
            },
        ),
        "fig11" => SweepGrid::new(
            SweepTask::ChannelWeights,
            vec![sizes()],
            FixedParams {
                n_max: 3,
                noise: NoiseKind::Dephasing,
                ..at_u8
            },
        ),
        "appendixA" => SweepGrid::new(
            SweepTask::Correlations,
            vec![AxisSpec {
                name: SweepAxis::Delta,
                values: list(&[1.0, 3.0, 5.0]),
            }],
            base,
        ),
        "fig13" => SweepGrid::new(
            SweepTask::Correlations,
            vec![],
            FixedParams {
                mu: 10.0,
                delta: 5.0,
                u: -20.0,
                ..base
            },
        ),
        "fig14" => SweepGrid::new(
            SweepTask::Correlations,
            vec![],
            FixedParams {
                mu: 1.0,
                delta: 5.0,
                u: 20.0,
                ..base
            },
        ),
        other => {
            return Err(Error::InvalidGrid(format!(
                "unknown preset '{other}' (available: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(grid)
}
