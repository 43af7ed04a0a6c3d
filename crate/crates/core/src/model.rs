//! Chain parameters, the parity-graded spin basis and the Hamiltonian.
//!
//! The interacting Kitaev chain is mapped by Jordan-Wigner onto a spin-1/2
//! chain with open boundaries (bonds `j = 1..N-1`):
//!
//! ```text
//! H = Σ_j [ w (σ+_j σ-_{j+1} + σ-_j σ+_{j+1}) + Δ (σ+_j σ+_{j+1} + σ-_j σ-_{j+1}) ]
//!     - (μ/2) Σ_j σz_j + (U/4) Σ_j σz_j σz_{j+1}
//! ```
//!
//! which is the same operator as the XYZ form
//! `(w/2) Σ_j [(1+Δ/w) σxσx + (1-Δ/w) σyσy + U/(2w) σzσz] - (μ/2) Σ_j σz_j`.
//!
//! Parity is `P = Π_j σz_j`, i.e. `(-1)^(number of down spins)`. The
//! fermionic parity `(-1)^(Σ n_j)` counts up spins instead, so the two labels
//! agree for even `N` and are swapped for odd `N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{OperatorMatrix, C64};
use crate::pauli::{apply_pauli_pair, site_mask, z_value, Axis};

/// Largest chain length unless `MAJB_MAX_N` says otherwise.
pub const DEFAULT_MAX_SITES: usize = 20;

/// Relative tolerance used when checking that an operator is parity-block
/// diagonal.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Chain-length ceiling, read from `MAJB_MAX_N` (default 20).
pub fn max_sites() -> usize {
    std::env::var("MAJB_MAX_N")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 2 && n < usize::BITS as usize - 1)
        .unwrap_or(DEFAULT_MAX_SITES)
}

fn check_capacity(n_sites: usize) -> Result<()> {
    let max = max_sites();
    if n_sites > max {
        return Err(Error::Capacity {
            n_sites,
            max_sites: max,
        });
    }
    Ok(())
}

/// The five couplings of the chain. All energies are in the same unit as
/// `w`, which must be positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub n_sites: usize,
    pub w: f64,
    pub delta: f64,
    pub mu: f64,
    pub u: f64,
}

impl ChainParams {
    pub fn new(n_sites: usize, w: f64, delta: f64, mu: f64, u: f64) -> Result<Self> {
        let p = Self {
            n_sites,
            w,
            delta,
            mu,
            u,
        };
        p.validate()?;
        Ok(p)
    }

    /// Couplings in units of `w = 1`.
    pub fn dimensionless(n_sites: usize, delta: f64, mu: f64, u: f64) -> Result<Self> {
        Self::new(n_sites, 1.0, delta, mu, u)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_sites must be at least 2, got {}",
                self.n_sites
            )));
        }
        if !(self.w > 0.0 && self.w.is_finite()) {
            return Err(Error::InvalidParameter(format!("w must be positive, got {}", self.w)));
        }
        for (name, v) in [("delta", self.delta), ("mu", self.mu), ("u", self.u)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    pub fn with_n_sites(self, n_sites: usize) -> Self {
        Self { n_sites, ..self }
    }

    pub fn with_u(self, u: f64) -> Self {
        Self { u, ..self }
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }
}

/// Eigenvalue of `Π_j σz_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParitySector {
    Even,
    Odd,
}

impl ParitySector {
    pub fn eigenvalue(self) -> i8 {
        match self {
            ParitySector::Even => 1,
            ParitySector::Odd => -1,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            ParitySector::Even => ParitySector::Odd,
            ParitySector::Odd => ParitySector::Even,
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            ParitySector::Even => "e",
            ParitySector::Odd => "o",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ParitySector::Even => "even",
            ParitySector::Odd => "odd",
        }
    }
}

impl std::fmt::Display for ParitySector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Parity of a computational basis state: even iff it has an even number of
/// down spins.
pub fn parity_of_basis_index(index: usize, n_sites: usize) -> Result<ParitySector> {
    if n_sites >= usize::BITS as usize || index >= (1usize << n_sites) {
        return Err(Error::IndexOutOfRange { index, n_sites });
    }
    Ok(parity_unchecked(index))
}

#[inline]
pub(crate) fn parity_unchecked(index: usize) -> ParitySector {
    if index.count_ones().is_multiple_of(2) {
        ParitySector::Even
    } else {
        ParitySector::Odd
    }
}

/// The full-space indices spanning one parity sector, in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    sector: ParitySector,
    n_sites: usize,
    indices: Vec<usize>,
}

impl SectorBasis {
    pub fn new(n_sites: usize, sector: ParitySector) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_sites must be at least 2, got {n_sites}"
            )));
        }
        check_capacity(n_sites)?;
        // Exactly one of 2k, 2k+1 lies in each sector.
        let indices = (0..1usize << (n_sites - 1))
            .map(|k| {
                let lo = 2 * k;
                if parity_unchecked(lo) == sector {
                    lo
                } else {
                    lo + 1
                }
            })
            .collect();
        Ok(Self {
            sector,
            n_sites,
            indices,
        })
    }

    pub fn sector(&self) -> ParitySector {
        self.sector
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Position of a full-space index inside this sector, if it belongs here.
    pub fn local_index(&self, full: usize) -> Option<usize> {
        (full < (1usize << self.n_sites) && parity_unchecked(full) == self.sector).then_some(full >> 1)
    }

    /// Lifts sector-local amplitudes into the full `2^N` space.
    pub fn embed(&self, local: &[C64]) -> Vec<C64> {
        let mut full = vec![C64::new(0.0, 0.0); 1usize << self.n_sites];
        for (&idx, &a) in self.indices.iter().zip(local) {
            full[idx] = a;
        }
        full
    }

    /// Restricts a full-space vector to this sector.
    pub fn restrict(&self, full: &[C64]) -> Vec<C64> {
        self.indices.iter().map(|&i| full[i]).collect()
    }
}

/// Splits the `2^N` basis into its even and odd halves.
pub fn build_sector_basis(n_sites: usize) -> Result<(SectorBasis, SectorBasis)> {
    Ok((
        SectorBasis::new(n_sites, ParitySector::Even)?,
        SectorBasis::new(n_sites, ParitySector::Odd)?,
    ))
}

/// The spin Hamiltonian in ladder-operator form, built bond by bond.
pub fn build_hamiltonian(params: &ChainParams) -> Result<OperatorMatrix> {
    params.validate()?;
    check_capacity(params.n_sites)?;
    let n = params.n_sites;
    let dim = params.dim();
    let mut triplets = Vec::with_capacity(dim * n);
    for s in 0..dim {
        let mut diag = 0.0;
        for j in 1..=n {
            diag -= 0.5 * params.mu * z_value(s, j, n);
        }
        for j in 1..n {
            let zj = z_value(s, j, n);
            let zk = z_value(s, j + 1, n);
            diag += 0.25 * params.u * zj * zk;
            let flipped = s ^ site_mask(j, n) ^ site_mask(j + 1, n);
            // σ+σ- + σ-σ+ moves an anti-aligned pair; σ+σ+ + σ-σ- flips an aligned one.
            let amp = if zj != zk { params.w } else { params.delta };
            if amp != 0.0 {
                triplets.push((flipped, s, C64::new(amp, 0.0)));
            }
        }
        if diag != 0.0 {
            triplets.push((s, s, C64::new(diag, 0.0)));
        }
    }
    Ok(OperatorMatrix::from_triplets(dim, dim, triplets, true))
}

/// The same Hamiltonian assembled from `σ^aσ^a` bond products and the
/// longitudinal field.
pub fn build_hamiltonian_xyz(params: &ChainParams) -> Result<OperatorMatrix> {
    params.validate()?;
    check_capacity(params.n_sites)?;
    let n = params.n_sites;
    let dim = params.dim();
    let ratio = params.delta / params.w;
    let couplings = [
        (Axis::X, 0.5 * params.w * (1.0 + ratio)),
        (Axis::Y, 0.5 * params.w * (1.0 - ratio)),
        (Axis::Z, 0.5 * params.w * params.u / (2.0 * params.w)),
    ];
    let mut triplets = Vec::with_capacity(dim * (3 * n + 1));
    for s in 0..dim {
        for j in 1..n {
            for &(axis, coupling) in &couplings {
                if coupling == 0.0 {
                    continue;
                }
                let (t, phase) = apply_pauli_pair(s, j, j + 1, n, axis);
                triplets.push((t, s, phase * coupling));
            }
        }
        let field: f64 = (1..=n).map(|j| z_value(s, j, n)).sum::<f64>() * (-0.5 * params.mu);
        if field != 0.0 {
            triplets.push((s, s, C64::new(field, 0.0)));
        }
    }
    Ok(OperatorMatrix::from_triplets(dim, dim, triplets, true))
}

/// The diagonal parity operator `Π_j σz_j`.
pub fn parity_operator(n_sites: usize) -> Result<OperatorMatrix> {
    check_capacity(n_sites)?;
    let diag: Vec<f64> = (0..1usize << n_sites)
        .map(|s| f64::from(parity_unchecked(s).eigenvalue()))
        .collect();
    Ok(OperatorMatrix::from_diagonal(&diag))
}

/// Whether [`project_to_sector`] should verify that the discarded
/// off-diagonal block vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryCheck {
    AssertParitySymmetric,
    Unchecked,
}

/// The block of a full-space operator on one parity sector.
pub fn project_to_sector(
    op: &OperatorMatrix,
    basis: &SectorBasis,
    check: SymmetryCheck,
) -> Result<OperatorMatrix> {
    let full = 1usize << basis.n_sites();
    if op.nrows() != full || op.ncols() != full {
        return Err(Error::DimensionMismatch {
            expected: full,
            actual: op.nrows(),
        });
    }
    let (block, discarded) = op.slice(basis.indices(), basis.indices(), op.hermitian_flag());
    if check == SymmetryCheck::AssertParitySymmetric {
        let tolerance = SYMMETRY_TOL * op.max_abs();
        if discarded > tolerance {
            return Err(Error::SymmetryViolation {
                off_block: discarded,
                tolerance,
            });
        }
    }
    Ok(block)
}

/// The rectangular block `<rows| op |cols>` between two sectors.
pub fn project_between(
    op: &OperatorMatrix,
    rows: &SectorBasis,
    cols: &SectorBasis,
) -> Result<OperatorMatrix> {
    let full = 1usize << rows.n_sites();
    if op.nrows() != full || op.ncols() != full || cols.n_sites() != rows.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: full,
            actual: op.nrows(),
        });
    }
    Ok(op.slice(rows.indices(), cols.indices(), false).0)
}

/// Both parity blocks of the Hamiltonian, verified block diagonal.
pub fn hamiltonian_blocks(params: &ChainParams) -> Result<SectorHamiltonians> {
    let h = build_hamiltonian(params)?;
    let (even_basis, odd_basis) = build_sector_basis(params.n_sites)?;
    let even = project_to_sector(&h, &even_basis, SymmetryCheck::AssertParitySymmetric)?;
    let odd = project_to_sector(&h, &odd_basis, SymmetryCheck::AssertParitySymmetric)?;
    Ok(SectorHamiltonians {
        even_basis,
        odd_basis,
        even,
        odd,
    })
}

#[derive(Debug, Clone)]
pub struct SectorHamiltonians {
    pub even_basis: SectorBasis,
    pub odd_basis: SectorBasis,
    pub even: OperatorMatrix,
    pub odd: OperatorMatrix,
}
