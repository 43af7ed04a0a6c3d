//! Jordan-Wigner site operators and their matrix elements between computed
//! eigenstates.
//!
//! With `c_j = (-1)^(j-1) Π_{k<j} σz_k σ-_j`, the Majorana combination is
//! `c_j + c_j† = (-1)^(j-1) Π_{k<j} σz_k σx_j` and the occupation is
//! `c_j† c_j = (σz_j + 1) / 2`. The site-dependent sign is kept; it flips the
//! sign of individual `C^{nm}_j` but not any of the decoherence weights.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_sector_basis, max_sites, project_between, project_to_sector, SectorBasis, SymmetryCheck};
use crate::operator::{OperatorMatrix, C64};
use crate::pauli::{site_mask, z_value};
use crate::spectra::EigenSystem;

fn check_site(site: usize, n_sites: usize) -> Result<()> {
    if site == 0 || site > n_sites {
        return Err(Error::SiteOutOfRange { site, n_sites });
    }
    if n_sites > max_sites() {
        return Err(Error::Capacity {
            n_sites,
            max_sites: max_sites(),
        });
    }
    Ok(())
}

/// `c_j + c_j†` on the full `2^N` space.
pub fn majorana_site_operator(site: usize, n_sites: usize) -> Result<OperatorMatrix> {
    check_site(site, n_sites)?;
    let dim = 1usize << n_sites;
    let prefactor = if site % 2 == 1 { 1.0 } else { -1.0 };
    let mask = site_mask(site, n_sites);
    let triplets = (0..dim)
        .map(|s| {
            let string: f64 = (1..site).map(|k| z_value(s, k, n_sites)).product();
            (s ^ mask, s, C64::new(prefactor * string, 0.0))
        })
        .collect();
    Ok(OperatorMatrix::from_triplets(dim, dim, triplets, true))
}

/// `c_j† c_j`, the projector onto spin up at `site`.
pub fn number_operator(site: usize, n_sites: usize) -> Result<OperatorMatrix> {
    check_site(site, n_sites)?;
    let diag: Vec<f64> = (0..1usize << n_sites)
        .map(|s| 0.5 * (z_value(s, site, n_sites) + 1.0))
        .collect();
    Ok(OperatorMatrix::from_diagonal(&diag))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SiteOperatorKind {
    MajoranaCoupling,
    NumberOperator,
}

/// One full-space operator per site.
#[derive(Debug, Clone)]
pub struct SiteOperatorSet {
    pub kind: SiteOperatorKind,
    pub per_site: Vec<OperatorMatrix>,
}

impl SiteOperatorSet {
    pub fn new(kind: SiteOperatorKind, n_sites: usize) -> Result<Self> {
        let per_site = (1..=n_sites)
            .map(|j| match kind {
                SiteOperatorKind::MajoranaCoupling => majorana_site_operator(j, n_sites),
                SiteOperatorKind::NumberOperator => number_operator(j, n_sites),
            })
            .collect::<Result<_>>()?;
        Ok(Self { kind, per_site })
    }
}

/// Site operators sliced once into parity blocks for a given chain length.
#[derive(Debug)]
pub struct SectorOperators {
    pub n_sites: usize,
    pub even_basis: Arc<SectorBasis>,
    pub odd_basis: Arc<SectorBasis>,
    /// `<even| c_j + c_j† |odd>` per site.
    pub majorana_even_odd: Vec<OperatorMatrix>,
    /// `<even| n_j |even>` per site.
    pub number_even: Vec<OperatorMatrix>,
    /// `<odd| n_j |odd>` per site.
    pub number_odd: Vec<OperatorMatrix>,
}

impl SectorOperators {
    pub fn build(n_sites: usize) -> Result<Self> {
        let (even, odd) = build_sector_basis(n_sites)?;
        let majorana = SiteOperatorSet::new(SiteOperatorKind::MajoranaCoupling, n_sites)?;
        let number = SiteOperatorSet::new(SiteOperatorKind::NumberOperator, n_sites)?;
        let majorana_even_odd = majorana
            .per_site
            .iter()
            .map(|op| project_between(op, &even, &odd))
            .collect::<Result<_>>()?;
        let number_even = number
            .per_site
            .iter()
            .map(|op| project_to_sector(op, &even, SymmetryCheck::AssertParitySymmetric))
            .collect::<Result<_>>()?;
        let number_odd = number
            .per_site
            .iter()
            .map(|op| project_to_sector(op, &odd, SymmetryCheck::AssertParitySymmetric))
            .collect::<Result<_>>()?;
        Ok(Self {
            n_sites,
            even_basis: Arc::new(even),
            odd_basis: Arc::new(odd),
            majorana_even_odd,
            number_even,
            number_odd,
        })
    }

    /// Shared instance for `n_sites`, built on first use.
    pub fn cached(n_sites: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SectorOperators>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(ops) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&n_sites) {
            return Ok(Arc::clone(ops));
        }
        // Built outside the lock; a concurrent duplicate build is harmless.
        let ops = Arc::new(Self::build(n_sites)?);
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        Ok(Arc::clone(guard.entry(n_sites).or_insert(ops)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixElementKind {
    /// `C^{nm}_j = <n|_e (c_j + c_j†) |m>_o`
    C,
    /// `D^{nm}_{ej} = <n|_e n_j |m>_e`
    DEven,
    /// `D^{nm}_{oj} = <n|_o n_j |m>_o`
    DOdd,
}

/// Matrix elements indexed by `(n, m, j)`, all 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixElementTable {
    kind: MatrixElementKind,
    n_max: usize,
    n_sites: usize,
    values: Vec<C64>,
}

impl MatrixElementTable {
    pub fn kind(&self) -> MatrixElementKind {
        self.kind
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn offset(&self, n: usize, m: usize, j: usize) -> usize {
        ((n - 1) * self.n_max + (m - 1)) * self.n_sites + (j - 1)
    }

    pub fn get(&self, n: usize, m: usize, j: usize) -> Result<C64> {
        if n == 0 || m == 0 || n > self.n_max || m > self.n_max {
            return Err(Error::MissingElement { n, m });
        }
        if j == 0 || j > self.n_sites {
            return Err(Error::SiteOutOfRange {
                site: j,
                n_sites: self.n_sites,
            });
        }
        Ok(self.values[self.offset(n, m, j)])
    }

    /// All sites for one `(n, m)` pair.
    pub fn row(&self, n: usize, m: usize) -> Result<&[C64]> {
        if n == 0 || m == 0 || n > self.n_max || m > self.n_max {
            return Err(Error::MissingElement { n, m });
        }
        let start = self.offset(n, m, 1);
        Ok(&self.values[start..start + self.n_sites])
    }
}

fn check_available(sys: &EigenSystem, n_max: usize) -> Result<()> {
    if n_max == 0 || n_max > sys.k_computed() {
        return Err(Error::MissingEigenpairs {
            requested: n_max,
            available: sys.k_computed(),
        });
    }
    Ok(())
}

fn columns(sys: &EigenSystem, n_max: usize) -> Vec<Vec<C64>> {
    (0..n_max)
        .map(|c| sys.vectors().column(c).iter().copied().collect())
        .collect()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

/// `C^{nm}_j` for `n, m <= n_max` and every site.
pub fn dissipative_matrix_elements(even: &EigenSystem, odd: &EigenSystem, n_max: usize) -> Result<MatrixElementTable> {
    check_available(even, n_max)?;
    check_available(odd, n_max)?;
    let n_sites = even.basis().n_sites();
    if odd.basis().n_sites() != n_sites {
        return Err(Error::DimensionMismatch {
            expected: n_sites,
            actual: odd.basis().n_sites(),
        });
    }
    let ops = SectorOperators::cached(n_sites)?;
    let e_vecs = columns(even, n_max);
    let o_vecs = columns(odd, n_max);
    let mut values = vec![C64::new(0.0, 0.0); n_max * n_max * n_sites];
    for (j, block) in ops.majorana_even_odd.iter().enumerate() {
        for (m, o) in o_vecs.iter().enumerate() {
            let image = block.apply(o);
            for (n, e) in e_vecs.iter().enumerate() {
                values[(n * n_max + m) * n_sites + j] = dot(e, &image);
            }
        }
    }
    Ok(MatrixElementTable {
        kind: MatrixElementKind::C,
        n_max,
        n_sites,
        values,
    })
}

/// `D^{nm}_{αj}` within the sector of `eigs`.
pub fn dephasing_matrix_elements(eigs: &EigenSystem, n_max: usize) -> Result<MatrixElementTable> {
    check_available(eigs, n_max)?;
    let n_sites = eigs.basis().n_sites();
    let ops = SectorOperators::cached(n_sites)?;
    let (blocks, kind) = match eigs.sector() {
        crate::model::ParitySector::Even => (&ops.number_even, MatrixElementKind::DEven),
        crate::model::ParitySector::Odd => (&ops.number_odd, MatrixElementKind::DOdd),
    };
    let vecs = columns(eigs, n_max);
    let mut values = vec![C64::new(0.0, 0.0); n_max * n_max * n_sites];
    for (j, block) in blocks.iter().enumerate() {
        for (m, vm) in vecs.iter().enumerate() {
            let image = block.apply(vm);
            for (n, vn) in vecs.iter().enumerate() {
                values[(n * n_max + m) * n_sites + j] = dot(vn, &image);
            }
        }
    }
    Ok(MatrixElementTable {
        kind,
        n_max,
        n_sites,
        values,
    })
}
