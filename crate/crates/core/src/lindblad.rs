//! Secular Lindblad dynamics in a truncated eigenbasis.
//!
//! Each jump channel `from -> to` with rate `r` contributes
//! `r [ s ρ s† - ½ {s† s, ρ} ]` with `s = |to⟩⟨from|`. The Hamiltonian is
//! diagonal in the retained eigenstates, so the generator acts
//! element-wise on the density matrix.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::decoherence::{DecoherenceReport, LevelId, NoiseKind};
use crate::error::{Error, Result};
use crate::operator::C64;
use crate::spectra::ChainSpectrum;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Two levels whose energies differ by less than this keep a stationary
/// coherence when neither decays.
pub const STATIONARY_FREQ_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub id: LevelId,
    pub energy: f64,
}

/// Incoherent jump `from -> to` between retained levels (indices into
/// [`TruncatedModel::levels`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpChannel {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
    pub noise: NoiseKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedModel {
    levels: Vec<Level>,
    channels: Vec<JumpChannel>,
}

impl TruncatedModel {
    pub fn new(levels: Vec<Level>, channels: Vec<JumpChannel>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidParameter("a truncated model needs at least one level".into()));
        }
        for (i, a) in levels.iter().enumerate() {
            if !a.energy.is_finite() {
                return Err(Error::InvalidParameter(format!("level {} has energy {}", a.id, a.energy)));
            }
            if levels[..i].iter().any(|b| b.id == a.id) {
                return Err(Error::InvalidParameter(format!("level {} listed twice", a.id)));
            }
        }
        for c in &channels {
            if c.from >= levels.len() || c.to >= levels.len() {
                return Err(Error::IndexOutOfRange {
                    index: c.from.max(c.to),
                    n_sites: levels.len(),
                });
            }
            if c.from == c.to {
                return Err(Error::InvalidParameter(format!("channel on level {} is a self-loop", levels[c.from].id)));
            }
            if !(c.rate >= 0.0 && c.rate.is_finite()) {
                return Err(Error::InvalidParameter(format!("channel rate {} is invalid", c.rate)));
            }
            let cross = levels[c.from].id.sector != levels[c.to].id.sector;
            let ok = match c.noise {
                NoiseKind::Dissipation => cross,
                NoiseKind::Dephasing => !cross,
            };
            if !ok {
                return Err(Error::InvalidParameter(format!(
                    "{} channel {} -> {} has the wrong parity structure",
                    c.noise.name(),
                    levels[c.from].id,
                    levels[c.to].id
                )));
            }
        }
        Ok(Self { levels, channels })
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn channels(&self) -> &[JumpChannel] {
        &self.channels
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    pub fn level_index(&self, id: LevelId) -> Option<usize> {
        self.levels.iter().position(|l| l.id == id)
    }

    /// Total outgoing rate of each level.
    pub fn decay_rates(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for c in &self.channels {
            out[c.from] += c.rate;
        }
        out
    }
}

/// Retains the `level_budget` lowest eigenstates across both sectors and
/// attaches the downward and upward channels of every report. Channels
/// with zero rate are dropped.
pub fn build_truncated_model(
    reports: &[&DecoherenceReport],
    spectrum: &ChainSpectrum,
    level_budget: usize,
) -> Result<TruncatedModel> {
    if level_budget < 2 {
        return Err(Error::InvalidParameter(format!("level budget must be at least 2, got {level_budget}")));
    }
    let mut merged = spectrum.merged_levels();
    if merged.len() < level_budget {
        return Err(Error::MissingEigenpairs {
            requested: level_budget,
            available: merged.len(),
        });
    }
    merged.truncate(level_budget);
    let levels: Vec<Level> = merged
        .into_iter()
        .map(|(sector, index, energy)| Level {
            id: LevelId::new(sector, index),
            energy,
        })
        .collect();

    let mut channels = Vec::new();
    for report in reports {
        for (a, la) in levels.iter().enumerate() {
            for (b, lb) in levels.iter().enumerate().skip(a + 1) {
                let cross = la.id.sector != lb.id.sector;
                let relevant = match report.noise {
                    NoiseKind::Dissipation => cross,
                    NoiseKind::Dephasing => !cross,
                };
                if !relevant {
                    continue;
                }
                let Some(ch) = report.channel(la.id, lb.id) else {
                    if report.is_excluded(la.id, lb.id) {
                        continue;
                    }
                    return Err(Error::MissingRate(format!(
                        "no {} rate between {} and {}",
                        report.noise.name(),
                        la.id,
                        lb.id
                    )));
                };
                let (upper, lower) = if ch.upper == la.id { (a, b) } else { (b, a) };
                if ch.down_rate > 0.0 {
                    channels.push(JumpChannel {
                        from: upper,
                        to: lower,
                        rate: ch.down_rate,
                        noise: report.noise,
                    });
                }
                if ch.up_rate > 0.0 {
                    channels.push(JumpChannel {
                        from: lower,
                        to: upper,
                        rate: ch.up_rate,
                        noise: report.noise,
                    });
                }
            }
        }
    }
    TruncatedModel::new(levels, channels)
}

/// Tolerances checked on every emitted state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantTolerances {
    pub trace: f64,
    pub hermiticity: f64,
    /// Smallest eigenvalue allowed, a non-positive number.
    pub min_eigenvalue: f64,
}

impl InvariantTolerances {
    /// Tolerances for a freshly prepared state.
    pub const STATE: Self = Self {
        trace: 1e-9,
        hermiticity: 1e-10,
        min_eigenvalue: -1e-8,
    };

    /// Tolerances for states produced by time integration.
    pub const TRAJECTORY: Self = Self {
        trace: 1e-8,
        hermiticity: 1e-9,
        min_eigenvalue: -1e-7,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates against [`InvariantTolerances::STATE`].
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        let rho = Self::unchecked(entries)?;
        rho.check(&InvariantTolerances::STATE).map_err(Error::InvalidParameter)?;
        Ok(rho)
    }

    fn unchecked(entries: DMatrix<C64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                actual: entries.ncols(),
            });
        }
        Ok(Self { entries })
    }

    pub fn pure(dim: usize, level: usize) -> Result<Self> {
        if level >= dim {
            return Err(Error::IndexOutOfRange {
                index: level,
                n_sites: dim,
            });
        }
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        m[(level, level)] = C64::new(1.0, 0.0);
        Self::new(m)
    }

    pub fn from_populations(populations: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            populations.len(),
            populations.iter().map(|&p| C64::new(p, 0.0)),
        )))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn get(&self, a: usize, b: usize) -> C64 {
        self.entries[(a, b)]
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.entries.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in a..n {
                worst = worst.max((self.entries[(a, b)] - self.entries[(b, a)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.entries + self.entries.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn check(&self, tol: &InvariantTolerances) -> std::result::Result<(), String> {
        let tr = self.trace();
        if !((tr - 1.0).abs() <= tol.trace) {
            return Err(format!("trace {tr} deviates from 1"));
        }
        let h = self.hermiticity_defect();
        if !(h <= tol.hermiticity) {
            return Err(format!("hermiticity defect {h:e}"));
        }
        let e = self.min_eigenvalue();
        if !(e >= tol.min_eigenvalue) {
            return Err(format!("minimum eigenvalue {e:e}"));
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (&self.entries - &other.entries).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn generator_into(model: &TruncatedModel, rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
    let n = model.dim();
    for a in 0..n {
        for b in 0..n {
            let w = model.levels[a].energy - model.levels[b].energy;
            out[(a, b)] = C64::new(0.0, -w) * rho[(a, b)];
        }
    }
    for c in &model.channels {
        let pop = rho[(c.from, c.from)];
        out[(c.to, c.to)] += pop * c.rate;
        let half = 0.5 * c.rate;
        for k in 0..n {
            out[(c.from, k)] -= rho[(c.from, k)] * half;
            out[(k, c.from)] -= rho[(k, c.from)] * half;
        }
    }
}

/// `dρ/dt` for the given state.
pub fn apply_lindblad_generator(model: &TruncatedModel, rho: &DensityMatrix) -> Result<DMatrix<C64>> {
    if rho.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: rho.dim(),
        });
    }
    let mut out = DMatrix::from_element(model.dim(), model.dim(), ZERO);
    generator_into(model, &rho.entries, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &DensityMatrix)> {
        self.times.last().copied().zip(self.states.last())
    }

    pub fn header(&self) -> Vec<String> {
        let n = self.labels.len();
        let mut h = vec!["t".to_string()];
        h.extend(self.labels.iter().map(|l| format!("p_{l}")));
        for a in 0..n {
            for b in a + 1..n {
                h.push(format!("abs_rho_{}_{}", self.labels[a], self.labels[b]));
            }
        }
        h
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        let n = self.labels.len();
        self.times
            .iter()
            .zip(&self.states)
            .map(|(&t, rho)| {
                let mut row = vec![t];
                row.extend(rho.populations());
                for a in 0..n {
                    for b in a + 1..n {
                        row.push(rho.get(a, b).norm());
                    }
                }
                row
            })
            .collect()
    }

    /// The trajectory as a real-valued table with the [`header`](Self::header) columns.
    pub fn to_table(&self) -> crate::table::ResultTable {
        let columns = self.header().into_iter().map(crate::table::Column::real).collect();
        let mut table = crate::table::ResultTable::new(columns);
        for row in self.rows() {
            table
                .push_row(row.into_iter().map(crate::table::Cell::Real).collect())
                .expect("row width matches the header");
        }
        table
    }

    /// Columns: `t`, populations per level, `|ρ_ab|` for `a < b`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::Io {
            path: "<trajectory>".into(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header()).map_err(io)?;
        for row in self.rows() {
            w.write_record(row.iter().map(|x| format!("{x:.16e}"))).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<trajectory>".into(),
            message: e.to_string(),
        })?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Store every `record_every`-th step; the final state is always stored.
    pub record_every: usize,
    pub tolerances: InvariantTolerances,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            record_every: 1,
            tolerances: InvariantTolerances::TRAJECTORY,
        }
    }
}

fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter(format!("final time must be non-negative, got {t_final}")));
    }
    Ok((t_final / dt - 1e-9).ceil().max(0.0) as usize)
}

fn add_scaled(dst: &mut DMatrix<C64>, factor: C64, src: &DMatrix<C64>) {
    dst.iter_mut().zip(src.iter()).for_each(|(d, s)| *d += factor * s);
}

/// Fixed-step RK4 from `t = 0` to `t_final`. The last step is shortened if
/// `t_final` is not a multiple of `dt`.
pub fn evolve(model: &TruncatedModel, rho0: &DensityMatrix, t_final: f64, dt: f64, opts: &EvolveOptions) -> Result<Trajectory> {
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: rho0.dim(),
        });
    }
    rho0.check(&opts.tolerances).map_err(|what| Error::Integration { time: 0.0, what })?;
    let steps = step_count(t_final, dt)?;
    let every = opts.record_every.max(1);
    let n = model.dim();
    let mut rho = rho0.entries.clone();
    let mut k1 = DMatrix::from_element(n, n, ZERO);
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();

    let mut traj = Trajectory {
        labels: model.levels.iter().map(|l| l.id.label()).collect(),
        times: vec![0.0],
        states: vec![rho0.clone()],
    };
    for step in 1..=steps {
        let t0 = (step - 1) as f64 * dt;
        let h = if step == steps { t_final - t0 } else { dt };
        let hc = C64::new(h, 0.0);
        generator_into(model, &rho, &mut k1);
        tmp.copy_from(&rho);
        add_scaled(&mut tmp, hc * 0.5, &k1);
        generator_into(model, &tmp, &mut k2);
        tmp.copy_from(&rho);
        add_scaled(&mut tmp, hc * 0.5, &k2);
        generator_into(model, &tmp, &mut k3);
        tmp.copy_from(&rho);
        add_scaled(&mut tmp, hc, &k3);
        generator_into(model, &tmp, &mut k4);
        let sixth = hc / 6.0;
        add_scaled(&mut rho, sixth, &k1);
        add_scaled(&mut rho, sixth * 2.0, &k2);
        add_scaled(&mut rho, sixth * 2.0, &k3);
        add_scaled(&mut rho, sixth, &k4);

        let t = t0 + h;
        let state = DensityMatrix { entries: rho.clone() };
        state.check(&opts.tolerances).map_err(|what| Error::Integration { time: t, what })?;
        if step % every == 0 || step == steps {
            traj.times.push(t);
            traj.states.push(state);
        }
    }
    Ok(traj)
}

/// Largest entry-wise difference between the final states obtained with
/// steps `dt` and `dt / 2`.
pub fn step_halving_check(model: &TruncatedModel, rho0: &DensityMatrix, t_final: f64, dt: f64) -> Result<f64> {
    let opts = EvolveOptions {
        record_every: usize::MAX,
        ..Default::default()
    };
    let coarse = evolve(model, rho0, t_final, dt, &opts)?;
    let fine = evolve(model, rho0, t_final, dt / 2.0, &opts)?;
    let (_, a) = coarse.last().expect("trajectory has the initial state");
    let (_, b) = fine.last().expect("trajectory has the initial state");
    Ok(a.max_abs_diff(b))
}

/// Population rate matrix `R` with `dp/dt = R p`.
pub fn population_rate_matrix(model: &TruncatedModel) -> DMatrix<f64> {
    let n = model.dim();
    let mut r = DMatrix::zeros(n, n);
    for c in &model.channels {
        r[(c.to, c.from)] += c.rate;
        r[(c.from, c.from)] -= c.rate;
    }
    r
}

fn null_space(r: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let n = r.nrows();
    let scale = r.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let svd = r.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut basis: Vec<Vec<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= 1e-12 * scale * n as f64)
        .map(|(i, _)| v_t.row(i).iter().copied().collect())
        .collect();
    reduce_rows(&mut basis);
    basis
}

/// Reduced row echelon form, then each row scaled to unit sum.
fn reduce_rows(rows: &mut [Vec<f64>]) {
    let Some(n) = rows.first().map(|r| r.len()) else {
        return;
    };
    let mut pivot_row = 0;
    for col in 0..n {
        if pivot_row == rows.len() {
            break;
        }
        let (best, val) = (pivot_row..rows.len())
            .map(|i| (i, rows[i][col].abs()))
            .fold((pivot_row, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= 1e-10 {
            continue;
        }
        rows.swap(pivot_row, best);
        let p = rows[pivot_row][col];
        rows[pivot_row].iter_mut().for_each(|x| *x /= p);
        let pivot = rows[pivot_row].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != pivot_row {
                let f = row[col];
                row.iter_mut().zip(&pivot).for_each(|(x, y)| *x -= f * y);
            }
        }
        pivot_row += 1;
    }
    for row in rows.iter_mut() {
        for x in row.iter_mut() {
            if x.abs() < 1e-14 {
                *x = 0.0;
            }
        }
        let s: f64 = row.iter().sum();
        if s.abs() > 1e-12 {
            row.iter_mut().for_each(|x| *x /= s);
        }
    }
}

/// Pairs of levels whose coherence neither decays nor rotates.
pub fn stationary_coherences(model: &TruncatedModel) -> Vec<(usize, usize)> {
    let decay = model.decay_rates();
    let mut out = Vec::new();
    for a in 0..model.dim() {
        for b in a + 1..model.dim() {
            let still = (model.levels[a].energy - model.levels[b].energy).abs() <= STATIONARY_FREQ_TOL;
            if decay[a] == 0.0 && decay[b] == 0.0 && still {
                out.push((a, b));
            }
        }
    }
    out
}

/// The unique stationary state of the generator.
///
/// Fails with [`Error::NonUniqueSteadyState`] when the stationary subspace
/// has dimension above one; the error carries a population basis (one
/// distribution per closed level group) and the non-decaying coherences.
pub fn steady_state(model: &TruncatedModel) -> Result<DensityMatrix> {
    let r = population_rate_matrix(model);
    let basis = null_space(&r);
    let coherences = stationary_coherences(model);
    if basis.len() != 1 || !coherences.is_empty() {
        return Err(Error::NonUniqueSteadyState {
            multiplicity: basis.len() + 2 * coherences.len(),
            population_basis: basis,
            stationary_coherences: coherences,
        });
    }
    let mut p = basis.into_iter().next().expect("one basis vector");
    for x in p.iter_mut() {
        if *x < 0.0 && *x > -1e-12 {
            *x = 0.0;
        }
    }
    let rho = DensityMatrix::from_populations(&p)?;
    let residual = apply_lindblad_generator(model, &rho)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if residual > 1e-10 {
        return Err(Error::InvalidParameter(format!("steady-state residual {residual:e} exceeds 1e-10")));
    }
    Ok(rho)
}
