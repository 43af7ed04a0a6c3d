//! Ground-state diagnostics: magnetization, spin-spin correlations and a
//! finite-size phase label.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChainParams, ParitySector};
use crate::operator::C64;
use crate::pauli::{apply_pauli_pair, z_value, Axis};
use crate::spectra::ChainSpectrum;

pub const DEFAULT_EPS_GAP: f64 = 1e-3;
pub const DEFAULT_EPS_M: f64 = 0.5;
/// `|M| / N` at or above which a state counts as polarized.
pub const DEFAULT_SATURATION: f64 = 0.8;

const NORM_TOL: f64 = 1e-8;

fn check_state(state: &[C64], n_sites: usize) -> Result<()> {
    if n_sites == 0 || n_sites >= usize::BITS as usize || state.len() != 1usize << n_sites {
        return Err(Error::DimensionMismatch {
            expected: 1usize.checked_shl(n_sites as u32).unwrap_or(0),
            actual: state.len(),
        });
    }
    let norm2: f64 = state.iter().map(|z| z.norm_sqr()).sum();
    if (norm2 - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidParameter(format!("state is not normalized (norm² = {norm2})")));
    }
    Ok(())
}

/// `⟨σ^z_j⟩` for every site.
pub fn site_magnetizations(state: &[C64], n_sites: usize) -> Result<Vec<f64>> {
    check_state(state, n_sites)?;
    let mut out = vec![0.0; n_sites];
    for (index, amp) in state.iter().enumerate() {
        let p = amp.norm_sqr();
        if p == 0.0 {
            continue;
        }
        for (j, m) in out.iter_mut().enumerate() {
            *m += p * z_value(index, j + 1, n_sites);
        }
    }
    Ok(out)
}

/// `M = Σ_j ⟨σ^z_j⟩` of a normalized full-space state.
pub fn magnetization(state: &[C64], n_sites: usize) -> Result<f64> {
    Ok(site_magnetizations(state, n_sites)?.iter().sum())
}

/// `⟨σ^a_i σ^a_j⟩`.
pub fn pair_correlation(state: &[C64], n_sites: usize, axis: Axis, i: usize, j: usize) -> Result<f64> {
    check_state(state, n_sites)?;
    for s in [i, j] {
        if s == 0 || s > n_sites {
            return Err(Error::SiteOutOfRange { site: s, n_sites });
        }
    }
    Ok(pair_correlation_unchecked(state, n_sites, axis, i, j))
}

fn pair_correlation_unchecked(state: &[C64], n_sites: usize, axis: Axis, i: usize, j: usize) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for (index, amp) in state.iter().enumerate() {
        if *amp == C64::new(0.0, 0.0) {
            continue;
        }
        let (target, phase) = apply_pauli_pair(index, i, j, n_sites, axis);
        acc += state[target].conj() * phase * amp;
    }
    acc.re
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub axis: Axis,
    pub anchor: usize,
    /// `(j, ⟨σ^a_anchor σ^a_j⟩)` for every `j != anchor`, ascending in `j`.
    pub values: Vec<(usize, f64)>,
}

impl CorrelationRow {
    pub fn value(&self, j: usize) -> Option<f64> {
        self.values.iter().find(|(s, _)| *s == j).map(|(_, v)| *v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max)
    }

    /// True when consecutive values alternate strictly in sign.
    pub fn alternates(&self) -> bool {
        self.values.windows(2).all(|w| w[0].1 * w[1].1 < 0.0)
    }
}

pub fn spin_correlations(state: &[C64], n_sites: usize, axis: Axis, anchor: usize) -> Result<CorrelationRow> {
    check_state(state, n_sites)?;
    if anchor == 0 || anchor > n_sites {
        return Err(Error::SiteOutOfRange {
            site: anchor,
            n_sites,
        });
    }
    let values = (1..=n_sites)
        .filter(|&j| j != anchor)
        .map(|j| (j, pair_correlation_unchecked(state, n_sites, axis, anchor, j)))
        .collect();
    Ok(CorrelationRow { axis, anchor, values })
}

/// The eigenstate used for ground-state observables.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableGround {
    pub sector: ParitySector,
    pub index: usize,
    pub energy: f64,
    /// `ΔE < eps_gap`: the even-sector ground state was chosen.
    pub degenerate: bool,
    pub state: Vec<C64>,
}

/// The global ground state, or the even-sector ground state when the two
/// sector ground energies lie within `eps_gap`.
pub fn observable_ground(spectrum: &ChainSpectrum, eps_gap: f64) -> Result<ObservableGround> {
    let degenerate = spectrum.ground_gap() < eps_gap;
    let sector = if degenerate || spectrum.even.ground_energy() <= spectrum.odd.ground_energy() {
        ParitySector::Even
    } else {
        ParitySector::Odd
    };
    let eigs = spectrum.sector(sector);
    Ok(ObservableGround {
        sector,
        index: 1,
        energy: eigs.energy(1)?,
        degenerate,
        state: eigs.full_state(1)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseLabel {
    Topological,
    TrivialPp,
    DwAfm,
    IdwFloating,
    Fm,
    Undetermined,
}

impl PhaseLabel {
    pub fn name(self) -> &'static str {
        match self {
            PhaseLabel::Topological => "topological",
            PhaseLabel::TrivialPp => "trivial_pp",
            PhaseLabel::DwAfm => "dw_afm",
            PhaseLabel::IdwFloating => "idw_floating",
            PhaseLabel::Fm => "fm",
            PhaseLabel::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEvidence {
    /// `|E^e_1 - E^o_1|`.
    pub delta_e: f64,
    /// The two lowest levels overall share a parity sector.
    pub same_parity: bool,
    pub m: f64,
}

impl PhaseEvidence {
    pub fn from_spectrum(spectrum: &ChainSpectrum, eps_gap: f64) -> Result<Self> {
        let levels = spectrum.merged_levels();
        if levels.len() < 2 {
            return Err(Error::MissingEigenpairs {
                requested: 2,
                available: levels.len(),
            });
        }
        let ground = observable_ground(spectrum, eps_gap)?;
        Ok(Self {
            delta_e: spectrum.ground_gap(),
            same_parity: levels[0].0 == levels[1].0,
            m: magnetization(&ground.state, spectrum.params.n_sites)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub eps_gap: f64,
    pub eps_m: f64,
    pub saturation: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            eps_gap: DEFAULT_EPS_GAP,
            eps_m: DEFAULT_EPS_M,
            saturation: DEFAULT_SATURATION,
        }
    }
}

/// Finite-size phase label. Thresholds scale with `w`.
pub fn classify_phase(evidence: &PhaseEvidence, params: &ChainParams, opts: &ClassifyOptions) -> PhaseLabel {
    let w = params.w;
    let n = params.n_sites as f64;
    let fm_bound = -2.0 * (1.0 + params.delta.abs() / w) * w;
    if params.mu.abs() <= 1e-12 * w && params.u < fm_bound {
        return PhaseLabel::Fm;
    }
    if evidence.delta_e < opts.eps_gap * w && !evidence.same_parity {
        return PhaseLabel::Topological;
    }
    let m = evidence.m.abs();
    if m >= opts.saturation * n {
        return PhaseLabel::TrivialPp;
    }
    if evidence.same_parity {
        return if m < opts.eps_m {
            PhaseLabel::DwAfm
        } else {
            PhaseLabel::IdwFloating
        };
    }
    PhaseLabel::Undetermined
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis_state(n: usize, index: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); 1 << n];
        v[index] = C64::new(1.0, 0.0);
        v
    }

    /// `|1010..⟩_x` with `|1⟩_x = |+⟩`, `|0⟩_x = |−⟩`.
    fn x_neel(n: usize) -> Vec<C64> {
        let amp = (0.5f64).powf(n as f64 / 2.0);
        (0..1usize << n)
            .map(|index| {
                let mut s = 1.0;
                for site in (2..=n).step_by(2) {
                    if z_value(index, site, n) < 0.0 {
                        s = -s;
                    }
                }
                C64::new(s * amp, 0.0)
            })
            .collect()
    }

    #[test]
    fn all_up_is_saturated() {
        assert_eq!(magnetization(&basis_state(5, 0), 5).unwrap(), 5.0);
        assert_eq!(magnetization(&basis_state(5, 0b11111), 5).unwrap(), -5.0);
    }

    #[test]
    fn x_neel_has_zero_magnetization() {
        let s = x_neel(6);
        assert!(magnetization(&s, 6).unwrap().abs() < 1e-14);
        let row = spin_correlations(&s, 6, Axis::X, 1).unwrap();
        for (j, v) in &row.values {
            let expected = if j % 2 == 1 { 1.0 } else { -1.0 };
            assert!((v - expected).abs() < 1e-12);
        }
        assert!(row.alternates());
    }

    #[test]
    fn unnormalized_rejected() {
        let mut s = basis_state(3, 0);
        s[0] = C64::new(2.0, 0.0);
        assert!(magnetization(&s, 3).is_err());
    }

    #[test]
    fn self_correlation_is_one() {
        let s = x_neel(4);
        for axis in Axis::ALL {
            assert!((pair_correlation(&s, 4, axis, 2, 2).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_anchor() {
        assert!(spin_correlations(&basis_state(3, 0), 3, Axis::Z, 4).is_err());
        assert!(spin_correlations(&basis_state(3, 0), 3, Axis::Z, 0).is_err());
    }

    #[test]
    fn classification_rules() {
        let p = ChainParams::dimensionless(12, 5.0, 1.0, 8.0).unwrap();
        let o = ClassifyOptions::default();
        let ev = |delta_e, same_parity, m| PhaseEvidence { delta_e, same_parity, m };
        assert_eq!(classify_phase(&ev(0.0, false, 0.3), &p, &o), PhaseLabel::Topological);
        assert_eq!(classify_phase(&ev(2.0, true, 0.0), &p, &o), PhaseLabel::DwAfm);
        assert_eq!(classify_phase(&ev(2.0, true, 3.0), &p, &o), PhaseLabel::IdwFloating);
        assert_eq!(classify_phase(&ev(2.0, false, 11.5), &p, &o), PhaseLabel::TrivialPp);
        assert_eq!(classify_phase(&ev(2.0, false, 3.0), &p, &o), PhaseLabel::Undetermined);
        let fm = ChainParams::dimensionless(12, 1.0, 0.0, -4.5).unwrap();
        assert_eq!(classify_phase(&ev(0.0, false, 0.0), &fm, &o), PhaseLabel::Fm);
        let not_fm = ChainParams::dimensionless(12, 1.0, 0.0, -3.5).unwrap();
        assert_eq!(classify_phase(&ev(0.0, false, 0.0), &not_fm, &o), PhaseLabel::Topological);
    }
}
