//! Parity-block eigensystems, the ground-state degeneracy gap and the
//! transition-frequency tables feeding the decoherence rates.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::eigen::{block_lanczos, dense_eigh, LanczosOptions, RawEigen};
use crate::error::{Error, Result};
use crate::model::{hamiltonian_blocks, ChainParams, ParitySector, SectorBasis};
use crate::operator::{OperatorMatrix, C64};

/// Largest block the dense path accepts.
pub const DENSE_MAX_DIM: usize = 4096;

/// Default number of pairs per sector (ground state plus five excitations).
pub const DEFAULT_K: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    /// Dense up to `dense_auto_max_dim`, iterative above.
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub k: usize,
    pub solver: SolverChoice,
    /// Block dimension up to which `Auto` picks the dense path.
    pub dense_auto_max_dim: usize,
    /// Absolute residual target for every reported pair.
    pub residual_tol: f64,
    /// Energies closer than this are treated as one degenerate cluster when
    /// ordering eigenvectors.
    pub cluster_tol: f64,
    pub max_matvecs_per_pair: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            solver: SolverChoice::Auto,
            dense_auto_max_dim: 512,
            residual_tol: 1e-9,
            cluster_tol: 1e-10,
            max_matvecs_per_pair: 10_000,
        }
    }
}

impl SpectrumOptions {
    /// Defaults with tolerances expressed in units of `params.w`.
    pub fn for_params(params: &ChainParams) -> Self {
        let d = Self::default();
        let sector_dim = 1usize.checked_shl(params.n_sites as u32 - 1).unwrap_or(usize::MAX);
        Self {
            k: d.k.min(sector_dim),
            residual_tol: d.residual_tol * params.w,
            cluster_tol: d.cluster_tol * params.w,
            ..d
        }
    }

    pub fn with_k(self, k: usize) -> Self {
        Self { k, ..self }
    }

    pub fn with_solver(self, solver: SolverChoice) -> Self {
        Self { solver, ..self }
    }
}

/// Sorted eigenpairs of one parity block.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    sector: ParitySector,
    basis: Arc<SectorBasis>,
    energies: Vec<f64>,
    /// Sector-local eigenvectors as columns.
    vectors: DMatrix<C64>,
    solver: SolverKind,
    worst_residual: f64,
    matvecs: usize,
}

impl EigenSystem {
    /// Wraps externally supplied states, e.g. trial wavefunctions, as an
    /// eigensystem. Vectors must be orthonormal sector-local columns.
    pub fn from_states(
        basis: Arc<SectorBasis>,
        energies: Vec<f64>,
        vectors: DMatrix<C64>,
        solver: SolverKind,
    ) -> Result<Self> {
        if vectors.nrows() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                actual: vectors.nrows(),
            });
        }
        if vectors.ncols() != energies.len() {
            return Err(Error::DimensionMismatch {
                expected: energies.len(),
                actual: vectors.ncols(),
            });
        }
        let gram = vectors.adjoint() * &vectors;
        let defect = (0..gram.nrows())
            .flat_map(|i| (0..gram.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| (gram[(i, j)] - if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).norm())
            .fold(0.0, f64::max);
        if defect > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "supplied states are not orthonormal (defect {defect:e})"
            )));
        }
        Ok(Self {
            sector: basis.sector(),
            basis,
            energies,
            vectors,
            solver,
            worst_residual: 0.0,
            matvecs: 0,
        })
    }

    pub fn sector(&self) -> ParitySector {
        self.sector
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn vectors(&self) -> &DMatrix<C64> {
        &self.vectors
    }

    /// Number of converged pairs.
    pub fn k_computed(&self) -> usize {
        self.energies.len()
    }

    pub fn solver(&self) -> SolverKind {
        self.solver
    }

    pub fn worst_residual(&self) -> f64 {
        self.worst_residual
    }

    pub fn matvecs(&self) -> usize {
        self.matvecs
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    /// Energy of the `n`-th state, 1-based.
    pub fn energy(&self, n: usize) -> Result<f64> {
        self.check_level(n)?;
        Ok(self.energies[n - 1])
    }

    /// Sector-local amplitudes of the `n`-th state, 1-based.
    pub fn state(&self, n: usize) -> Result<Vec<C64>> {
        self.check_level(n)?;
        Ok(self.vectors.column(n - 1).iter().copied().collect())
    }

    /// The `n`-th state lifted into the full `2^N` space.
    pub fn full_state(&self, n: usize) -> Result<Vec<C64>> {
        Ok(self.basis.embed(&self.state(n)?))
    }

    pub(crate) fn check_level(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.energies.len() {
            return Err(Error::MissingEigenpairs {
                requested: n,
                available: self.energies.len(),
            });
        }
        Ok(())
    }

    /// Multiplies state `n` (1-based) by a phase. Used to probe gauge
    /// invariance.
    pub fn rephase(&mut self, n: usize, phase: C64) {
        let mut col = self.vectors.column_mut(n - 1);
        col *= phase;
    }
}

/// Index of the gauge-fixing coordinate: the first one within a relative
/// 1e-8 of the largest magnitude.
fn anchor_index(v: &[C64]) -> usize {
    let max = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    v.iter()
        .position(|x| x.norm() >= (1.0 - 1e-8) * max)
        .unwrap_or(0)
}

/// Rotates each column so its anchor coordinate is real positive, then
/// orders degenerate clusters by anchor index.
fn fix_gauge_and_order(raw: RawEigen, keep: usize, cluster_tol: f64) -> (Vec<f64>, DMatrix<C64>) {
    let dim = raw.vectors.nrows();
    let mut cols: Vec<(f64, usize, Vec<C64>)> = (0..keep)
        .map(|c| {
            let mut v: Vec<C64> = raw.vectors.column(c).iter().copied().collect();
            let a = anchor_index(&v);
            let z = v[a];
            if z.norm() > 0.0 {
                let phase = z.conj() / z.norm();
                for x in v.iter_mut() {
                    *x *= phase;
                }
                v[a] = C64::new(v[a].norm(), 0.0);
            }
            (raw.values[c], a, v)
        })
        .collect();
    let mut start = 0;
    while start < cols.len() {
        let mut end = start + 1;
        while end < cols.len() && cols[end].0 - cols[end - 1].0 <= cluster_tol {
            end += 1;
        }
        cols[start..end].sort_by_key(|c| c.1);
        start = end;
    }
    let energies = cols.iter().map(|c| c.0).collect();
    let vectors = DMatrix::from_fn(dim, cols.len(), |r, c| cols[c].2[r]);
    (energies, vectors)
}

fn residual_norm(h: &OperatorMatrix, e: f64, v: &[C64]) -> f64 {
    h.apply(v)
        .iter()
        .zip(v)
        .map(|(hv, x)| (hv - x * e).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Lowest `opts.k` eigenpairs of a Hermitian parity block. The dense path
/// returns every pair of the block.
pub fn diagonalize_sector(
    h_block: &OperatorMatrix,
    basis: &Arc<SectorBasis>,
    opts: &SpectrumOptions,
) -> Result<EigenSystem> {
    let dim = h_block.dim();
    if !h_block.is_square() || dim != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            actual: dim,
        });
    }
    if opts.k == 0 || opts.k > dim {
        return Err(Error::InvalidParameter(format!(
            "k must lie in 1..={dim}, got {}",
            opts.k
        )));
    }
    let kind = match opts.solver {
        SolverChoice::Dense => SolverKind::Dense,
        SolverChoice::Iterative => SolverKind::Iterative,
        SolverChoice::Auto if dim <= opts.dense_auto_max_dim => SolverKind::Dense,
        SolverChoice::Auto => SolverKind::Iterative,
    };
    if kind == SolverKind::Dense && dim > DENSE_MAX_DIM {
        return Err(Error::InvalidParameter(format!(
            "dense path limited to dimension {DENSE_MAX_DIM}, block has {dim}"
        )));
    }
    let (raw, keep) = match kind {
        SolverKind::Dense => (dense_eigh(h_block), dim),
        SolverKind::Iterative => {
            let lanczos = LanczosOptions {
                tol: opts.residual_tol,
                max_matvecs_per_pair: opts.max_matvecs_per_pair,
                ..LanczosOptions::default()
            };
            let raw = block_lanczos(h_block, opts.k, &lanczos).map_err(|f| Error::NoConvergence {
                sector: basis.sector(),
                matvecs: f.matvecs,
                worst_residual: f.worst_residual,
            })?;
            (raw, opts.k)
        }
    };
    let matvecs = raw.matvecs;
    let (energies, vectors) = fix_gauge_and_order(raw, keep, opts.cluster_tol);
    let worst_residual = (0..vectors.ncols())
        .map(|c| {
            let v: Vec<C64> = vectors.column(c).iter().copied().collect();
            residual_norm(h_block, energies[c], &v)
        })
        .fold(0.0, f64::max);
    if worst_residual > opts.residual_tol {
        return Err(Error::NoConvergence {
            sector: basis.sector(),
            matvecs,
            worst_residual,
        });
    }
    Ok(EigenSystem {
        sector: basis.sector(),
        basis: Arc::clone(basis),
        energies,
        vectors,
        solver: kind,
        worst_residual,
        matvecs,
    })
}

/// Both parity eigensystems at one parameter point.
#[derive(Debug, Clone)]
pub struct ChainSpectrum {
    pub params: ChainParams,
    pub even: EigenSystem,
    pub odd: EigenSystem,
}

impl ChainSpectrum {
    pub fn sector(&self, sector: ParitySector) -> &EigenSystem {
        match sector {
            ParitySector::Even => &self.even,
            ParitySector::Odd => &self.odd,
        }
    }

    pub fn ground_gap(&self) -> f64 {
        ground_gap(&self.even, &self.odd)
    }

    /// All computed levels across both sectors, ascending in energy, as
    /// `(sector, 1-based index, energy)`.
    pub fn merged_levels(&self) -> Vec<(ParitySector, usize, f64)> {
        let mut levels: Vec<(ParitySector, usize, f64)> = [&self.even, &self.odd]
            .iter()
            .flat_map(|s| {
                s.energies()
                    .iter()
                    .enumerate()
                    .map(move |(i, &e)| (s.sector(), i + 1, e))
            })
            .collect();
        levels.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
        levels
    }
}

/// Diagonalizes both parity blocks of the chain Hamiltonian; the two
/// sectors run concurrently.
pub fn solve_chain(params: &ChainParams, opts: &SpectrumOptions) -> Result<ChainSpectrum> {
    let blocks = hamiltonian_blocks(params)?;
    let even_basis = Arc::new(blocks.even_basis);
    let odd_basis = Arc::new(blocks.odd_basis);
    let (even, odd) = rayon::join(
        || diagonalize_sector(&blocks.even, &even_basis, opts),
        || diagonalize_sector(&blocks.odd, &odd_basis, opts),
    );
    Ok(ChainSpectrum {
        params: *params,
        even: even?,
        odd: odd?,
    })
}

/// `ΔE = |E^e_1 - E^o_1|`.
pub fn ground_gap(even: &EigenSystem, odd: &EigenSystem) -> f64 {
    (even.ground_energy() - odd.ground_energy()).abs()
}

/// `ΔE` for each chain length with otherwise identical couplings, ordered
/// by `N`.
pub fn gap_vs_size(template: &ChainParams, sizes: &[usize], opts: &SpectrumOptions) -> Result<Vec<(usize, f64)>> {
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|n| {
            let p = template.with_n_sites(n);
            p.validate()?;
            let o = opts.with_k(opts.k.min(1usize << (n - 1)));
            Ok((n, solve_chain(&p, &o)?.ground_gap()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransitionKind {
    CrossParity,
    SameParityEven,
    SameParityOdd,
}

/// One row of a [`TransitionTable`]. For cross-parity rows `n` indexes the
/// even sector and `m` the odd one; `frequency = E_n - E_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub n: usize,
    pub m: usize,
    pub frequency: f64,
}

impl Transition {
    pub fn abs_frequency(&self) -> f64 {
        self.frequency.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionTable {
    pub kind: TransitionKind,
    pub entries: Vec<Transition>,
}

impl TransitionTable {
    pub fn get(&self, n: usize, m: usize) -> Option<&Transition> {
        self.entries.iter().find(|t| t.n == n && t.m == m)
    }

    /// Rows whose first index is the ground state, `(1, n)` for `n >= 2`.
    pub fn from_ground(&self) -> TransitionTable {
        TransitionTable {
            kind: self.kind,
            entries: self.entries.iter().filter(|t| t.n == 1 && t.m >= 2).copied().collect(),
        }
    }

    /// Rows `(n, 1)` for `n >= 2`.
    pub fn to_ground(&self) -> TransitionTable {
        TransitionTable {
            kind: self.kind,
            entries: self.entries.iter().filter(|t| t.m == 1 && t.n >= 2).copied().collect(),
        }
    }
}

/// Ground-state transition frequencies.
///
/// Cross-parity tables hold `(1, 1)` followed by `(1, n)` and `(n, 1)` for
/// `n = 2..=n_max`; same-parity tables hold `(1, n)` for `n = 2..=n_max`.
pub fn transition_frequencies(
    even: &EigenSystem,
    odd: &EigenSystem,
    kind: TransitionKind,
    n_max: usize,
) -> Result<TransitionTable> {
    let mut entries = Vec::new();
    match kind {
        TransitionKind::CrossParity => {
            for sys in [even, odd] {
                if n_max > sys.k_computed() {
                    return Err(Error::MissingEigenpairs {
                        requested: n_max,
                        available: sys.k_computed(),
                    });
                }
            }
            entries.push(Transition {
                n: 1,
                m: 1,
                frequency: even.energies[0] - odd.energies[0],
            });
            for n in 2..=n_max {
                entries.push(Transition {
                    n: 1,
                    m: n,
                    frequency: even.energies[0] - odd.energies[n - 1],
                });
                entries.push(Transition {
                    n,
                    m: 1,
                    frequency: even.energies[n - 1] - odd.energies[0],
                });
            }
        }
        TransitionKind::SameParityEven | TransitionKind::SameParityOdd => {
            let sys = if kind == TransitionKind::SameParityEven { even } else { odd };
            if n_max > sys.k_computed() {
                return Err(Error::MissingEigenpairs {
                    requested: n_max,
                    available: sys.k_computed(),
                });
            }
            for n in 2..=n_max {
                entries.push(Transition {
                    n: 1,
                    m: n,
                    frequency: sys.energies[0] - sys.energies[n - 1],
                });
            }
        }
    }
    Ok(TransitionTable { kind, entries })
}

/// Default collision threshold for [`detect_degenerate_transitions`], in
/// units of `w`.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-6;

/// All pairs of rows whose absolute frequencies differ by less than `tol`.
pub fn detect_degenerate_transitions(table: &TransitionTable, tol: f64) -> Vec<(Transition, Transition)> {
    let mut out = Vec::new();
    for (i, a) in table.entries.iter().enumerate() {
        for b in &table.entries[i + 1..] {
            if (a.abs_frequency() - b.abs_frequency()).abs() < tol {
                out.push((*a, *b));
            }
        }
    }
    out
}
