//! Decoherence parameters of the chain coupled to a dissipative (fermionic)
//! or dephasing (bosonic) bath.
//!
//! Low-frequency noise couples only the two sector ground states and is
//! characterised by the bare prefactors `γ_L = g |Σ_j C^{11}_j|` and
//! `γ̃_L = g̃ |Σ_j (D^{11}_{ej} - D^{11}_{oj})|`. High-frequency noise drives
//! transitions between eigenstates with secular Lindblad rates
//! `Γ = 2π d g² × weight`, where the weight is the incoherent
//! `Σ_j |C^{nm}_j|²` for dissipation and the coherent `|Σ_j D^{nm}_{αj}|²`
//! for dephasing. `ħ = k_B = 1` and the density of states `d` is flat.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jw::{dephasing_matrix_elements, dissipative_matrix_elements, MatrixElementKind, MatrixElementTable};
use crate::model::ParitySector;
use crate::spectra::{ChainSpectrum, EigenSystem};

/// Transitions slower than this (in units of `w`) are left to the
/// low-frequency treatment.
pub const FREQ_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Fermionic,
    Bosonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Dissipation,
    Dephasing,
}

impl NoiseKind {
    pub fn statistics(self) -> Statistics {
        match self {
            NoiseKind::Dissipation => Statistics::Fermionic,
            NoiseKind::Dephasing => Statistics::Bosonic,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Dissipation => "dissipation",
            NoiseKind::Dephasing => "dephasing",
        }
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "dissipation" => Ok(NoiseKind::Dissipation),
            "dephasing" => Ok(NoiseKind::Dephasing),
            other => Err(format!("unknown noise '{other}' (expected dissipation or dephasing)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub statistics: Statistics,
    /// `g` or `g̃`.
    pub coupling: f64,
    /// `k_B T`.
    pub temperature: f64,
    /// Flat density of states `d` (or `d̃`).
    pub dos: f64,
}

impl BathSpec {
    pub fn new(statistics: Statistics, coupling: f64, temperature: f64, dos: f64) -> Result<Self> {
        let b = Self {
            statistics,
            coupling,
            temperature,
            dos,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn for_noise(noise: NoiseKind, coupling: f64, temperature: f64, dos: f64) -> Result<Self> {
        Self::new(noise.statistics(), coupling, temperature, dos)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be non-negative, got {}",
                self.temperature
            )));
        }
        if !(self.dos > 0.0 && self.dos.is_finite()) {
            return Err(Error::InvalidParameter(format!("dos must be positive, got {}", self.dos)));
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "coupling must be non-negative, got {}",
                self.coupling
            )));
        }
        Ok(())
    }
}

fn require_kind(table: &MatrixElementTable, kinds: &[MatrixElementKind]) -> Result<()> {
    if !kinds.contains(&table.kind()) {
        return Err(Error::InvalidParameter(format!(
            "expected a {kinds:?} table, got {:?}",
            table.kind()
        )));
    }
    Ok(())
}

/// `γ_L = g |Σ_j C^{11}_j|`.
pub fn gamma_low_dissipation(c_table: &MatrixElementTable, coupling: f64) -> Result<f64> {
    require_kind(c_table, &[MatrixElementKind::C])?;
    let sum = c_table.row(1, 1)?.iter().sum::<num_complex::Complex64>();
    Ok(coupling * sum.norm())
}

/// `γ̃_L = g̃ |Σ_j (D^{11}_{ej} - D^{11}_{oj})|`.
pub fn gamma_low_dephasing(d_even: &MatrixElementTable, d_odd: &MatrixElementTable, coupling: f64) -> Result<f64> {
    require_kind(d_even, &[MatrixElementKind::DEven])?;
    require_kind(d_odd, &[MatrixElementKind::DOdd])?;
    let e = d_even.row(1, 1)?;
    let o = d_odd.row(1, 1)?;
    if e.len() != o.len() {
        return Err(Error::DimensionMismatch {
            expected: e.len(),
            actual: o.len(),
        });
    }
    let sum = e.iter().zip(o).map(|(a, b)| a - b).sum::<num_complex::Complex64>();
    Ok(coupling * sum.norm())
}

/// `γ^{nm}_{eo} = Σ_j |C^{nm}_j|²`.
pub fn channel_weight_dissipation(c_table: &MatrixElementTable, n: usize, m: usize) -> Result<f64> {
    require_kind(c_table, &[MatrixElementKind::C])?;
    Ok(c_table.row(n, m)?.iter().map(|c| c.norm_sqr()).sum())
}

/// `γ̃^{nm}_{αα} = |Σ_j D^{nm}_{αj}|²`.
pub fn channel_weight_dephasing(d_table: &MatrixElementTable, n: usize, m: usize) -> Result<f64> {
    require_kind(d_table, &[MatrixElementKind::DEven, MatrixElementKind::DOdd])?;
    Ok(d_table.row(n, m)?.iter().sum::<num_complex::Complex64>().norm_sqr())
}

/// Fermi-Dirac occupation `1 / (exp(freq/T) + 1)`; the `T = 0` limit is a
/// step with value 1/2 at zero frequency.
pub fn fermi_occupation(freq: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return if freq > 0.0 {
            0.0
        } else if freq < 0.0 {
            1.0
        } else {
            0.5
        };
    }
    let x = freq / temperature;
    if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Bose-Einstein occupation `1 / (exp(freq/T) - 1)`, zero at `T = 0`.
/// Frequencies at or below [`FREQ_FLOOR`] are rejected.
pub fn bose_occupation(freq: f64, temperature: f64) -> Result<f64> {
    if !(freq > FREQ_FLOOR) {
        return Err(Error::SmallGap {
            freq,
            floor: FREQ_FLOOR,
        });
    }
    if temperature <= 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (freq / temperature).exp_m1())
}

/// An eigenstate identified by parity sector and 1-based index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LevelId {
    pub sector: ParitySector,
    pub index: usize,
}

impl LevelId {
    pub fn new(sector: ParitySector, index: usize) -> Self {
        Self { sector, index }
    }

    pub fn label(&self) -> String {
        format!("{}{}", self.sector.short(), self.index)
    }
}

impl std::fmt::Display for LevelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

/// A pair of levels with their energy difference and channel weight.
/// `frequency = E_upper - E_lower >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedTransition {
    pub upper: LevelId,
    pub lower: LevelId,
    pub frequency: f64,
    pub weight: f64,
}

impl WeightedTransition {
    fn oriented(a: LevelId, ea: f64, b: LevelId, eb: f64, weight: f64) -> Self {
        if ea >= eb {
            Self {
                upper: a,
                lower: b,
                frequency: ea - eb,
                weight,
            }
        } else {
            Self {
                upper: b,
                lower: a,
                frequency: eb - ea,
                weight,
            }
        }
    }

    pub fn connects(&self, a: LevelId, b: LevelId) -> bool {
        (self.upper == a && self.lower == b) || (self.upper == b && self.lower == a)
    }
}

/// One secular channel with its downward and upward rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRate {
    pub upper: LevelId,
    pub lower: LevelId,
    pub frequency: f64,
    pub weight: f64,
    /// `Γ = 2π d g² weight`.
    pub rate: f64,
    /// Mean bath occupation at `frequency`.
    pub occupation: f64,
    /// `Γ (1 - n̄_f)` or `Γ (1 + n̄_b)`.
    pub down_rate: f64,
    /// `Γ n̄`.
    pub up_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    /// The degenerate ground-state pair belongs to the low-frequency channel.
    GroundPair,
    BelowFrequencyFloor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcludedTransition {
    pub transition: WeightedTransition,
    pub reason: ExclusionReason,
}

/// Two channels whose frequencies coincide within the tolerance, violating
/// the no-degenerate-transitions condition of the secular master equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegenerateChannels {
    pub first: (LevelId, LevelId),
    pub second: (LevelId, LevelId),
    pub separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceReport {
    pub noise: NoiseKind,
    pub bath: BathSpec,
    /// `γ_L` or `γ̃_L`, when computed.
    pub gamma_low: Option<f64>,
    pub channels: Vec<ChannelRate>,
    pub excluded: Vec<ExcludedTransition>,
    /// Warnings only; rates are still reported.
    pub validity: Vec<DegenerateChannels>,
}

impl DecoherenceReport {
    pub fn channel(&self, a: LevelId, b: LevelId) -> Option<&ChannelRate> {
        self.channels
            .iter()
            .find(|c| (c.upper == a && c.lower == b) || (c.upper == b && c.lower == a))
    }

    pub fn is_excluded(&self, a: LevelId, b: LevelId) -> bool {
        self.excluded.iter().any(|x| x.transition.connects(a, b))
    }
}

/// Options shared by the report builders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateOptions {
    /// Channels closer than this in frequency are flagged as degenerate.
    pub degeneracy_tol: f64,
    /// Transitions below this frequency are excluded from the rate table.
    pub freq_floor: f64,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self {
            degeneracy_tol: crate::spectra::DEFAULT_DEGENERACY_TOL,
            freq_floor: FREQ_FLOOR,
        }
    }
}

/// Turns channel weights into secular Lindblad rates for the given bath.
///
/// For dissipation the transition between the two sector ground states is
/// always excluded. Near-degenerate channel pairs are reported in
/// `validity`.
pub fn lindblad_rates(
    transitions: &[WeightedTransition],
    bath: &BathSpec,
    noise: NoiseKind,
    opts: &RateOptions,
) -> Result<DecoherenceReport> {
    bath.validate()?;
    if bath.statistics != noise.statistics() {
        return Err(Error::StatisticsMismatch(format!(
            "{} requires {:?} statistics, bath is {:?}",
            noise.name(),
            noise.statistics(),
            bath.statistics
        )));
    }
    let prefactor = 2.0 * std::f64::consts::PI * bath.dos * bath.coupling * bath.coupling;
    let mut channels = Vec::new();
    let mut excluded = Vec::new();
    for t in transitions {
        let cross = t.upper.sector != t.lower.sector;
        match noise {
            NoiseKind::Dissipation if !cross => {
                return Err(Error::InvalidParameter(format!(
                    "dissipative transition {}-{} does not change parity",
                    t.upper, t.lower
                )))
            }
            NoiseKind::Dephasing if cross => {
                return Err(Error::InvalidParameter(format!(
                    "dephasing transition {}-{} changes parity",
                    t.upper, t.lower
                )))
            }
            _ => {}
        }
        if t.weight < 0.0 || !t.weight.is_finite() {
            return Err(Error::InvalidParameter(format!("channel weight {} is invalid", t.weight)));
        }
        if noise == NoiseKind::Dissipation && t.upper.index == 1 && t.lower.index == 1 {
            excluded.push(ExcludedTransition {
                transition: *t,
                reason: ExclusionReason::GroundPair,
            });
            continue;
        }
        if t.frequency <= opts.freq_floor {
            excluded.push(ExcludedTransition {
                transition: *t,
                reason: ExclusionReason::BelowFrequencyFloor,
            });
            continue;
        }
        let rate = prefactor * t.weight;
        let (occupation, down, up) = match noise {
            NoiseKind::Dissipation => {
                let n = fermi_occupation(t.frequency, bath.temperature);
                (n, 1.0 - n, n)
            }
            NoiseKind::Dephasing => {
                let n = bose_occupation(t.frequency, bath.temperature)?;
                (n, 1.0 + n, n)
            }
        };
        channels.push(ChannelRate {
            upper: t.upper,
            lower: t.lower,
            frequency: t.frequency,
            weight: t.weight,
            rate,
            occupation,
            down_rate: rate * down,
            up_rate: rate * up,
        });
    }
    let mut validity = Vec::new();
    for (i, a) in channels.iter().enumerate() {
        for b in &channels[i + 1..] {
            let separation = (a.frequency - b.frequency).abs();
            if separation < opts.degeneracy_tol {
                validity.push(DegenerateChannels {
                    first: (a.upper, a.lower),
                    second: (b.upper, b.lower),
                    separation,
                });
            }
        }
    }
    Ok(DecoherenceReport {
        noise,
        bath: *bath,
        gamma_low: None,
        channels,
        excluded,
        validity,
    })
}

/// Every even-odd pair `(n, m)` with `n, m <= n_max`, weighted by
/// `Σ_j |C^{nm}_j|²`.
pub fn dissipative_transitions(
    even: &EigenSystem,
    odd: &EigenSystem,
    c_table: &MatrixElementTable,
    n_max: usize,
) -> Result<Vec<WeightedTransition>> {
    let mut out = Vec::with_capacity(n_max * n_max);
    for n in 1..=n_max {
        for m in 1..=n_max {
            out.push(WeightedTransition::oriented(
                LevelId::new(ParitySector::Even, n),
                even.energy(n)?,
                LevelId::new(ParitySector::Odd, m),
                odd.energy(m)?,
                channel_weight_dissipation(c_table, n, m)?,
            ));
        }
    }
    Ok(out)
}

/// Every same-sector pair `n > m` with `n <= n_max`, weighted by
/// `|Σ_j D^{nm}_{αj}|²`.
pub fn dephasing_transitions(eigs: &EigenSystem, d_table: &MatrixElementTable, n_max: usize) -> Result<Vec<WeightedTransition>> {
    let mut out = Vec::new();
    for n in 2..=n_max {
        for m in 1..n {
            out.push(WeightedTransition::oriented(
                LevelId::new(eigs.sector(), n),
                eigs.energy(n)?,
                LevelId::new(eigs.sector(), m),
                eigs.energy(m)?,
                channel_weight_dephasing(d_table, n, m)?,
            ));
        }
    }
    Ok(out)
}

/// Low- and high-frequency dissipation parameters at one parameter point.
pub fn dissipation_report(spectrum: &ChainSpectrum, bath: &BathSpec, n_max: usize, opts: &RateOptions) -> Result<DecoherenceReport> {
    let c = dissipative_matrix_elements(&spectrum.even, &spectrum.odd, n_max)?;
    let transitions = dissipative_transitions(&spectrum.even, &spectrum.odd, &c, n_max)?;
    let mut report = lindblad_rates(&transitions, bath, NoiseKind::Dissipation, opts)?;
    report.gamma_low = Some(gamma_low_dissipation(&c, bath.coupling)?);
    Ok(report)
}

/// Low- and high-frequency dephasing parameters at one parameter point.
pub fn dephasing_report(spectrum: &ChainSpectrum, bath: &BathSpec, n_max: usize, opts: &RateOptions) -> Result<DecoherenceReport> {
    let d_even = dephasing_matrix_elements(&spectrum.even, n_max)?;
    let d_odd = dephasing_matrix_elements(&spectrum.odd, n_max)?;
    let mut transitions = dephasing_transitions(&spectrum.even, &d_even, n_max)?;
    transitions.extend(dephasing_transitions(&spectrum.odd, &d_odd, n_max)?);
    let mut report = lindblad_rates(&transitions, bath, NoiseKind::Dephasing, opts)?;
    report.gamma_low = Some(gamma_low_dephasing(&d_even, &d_odd, bath.coupling)?);
    Ok(report)
}

pub fn decoherence_report(
    spectrum: &ChainSpectrum,
    noise: NoiseKind,
    bath: &BathSpec,
    n_max: usize,
    opts: &RateOptions,
) -> Result<DecoherenceReport> {
    match noise {
        NoiseKind::Dissipation => dissipation_report(spectrum, bath, n_max, opts),
        NoiseKind::Dephasing => dephasing_report(spectrum, bath, n_max, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lvl(s: ParitySector, i: usize) -> LevelId {
        LevelId::new(s, i)
    }

    fn fermi_bath(coupling: f64, temperature: f64, dos: f64) -> BathSpec {
        BathSpec::new(Statistics::Fermionic, coupling, temperature, dos).unwrap()
    }

    #[test]
    fn fermi_values() {
        assert_eq!(fermi_occupation(0.0, 0.7), 0.5);
        assert!((fermi_occupation(0.7, 0.7) - 1.0 / (std::f64::consts::E + 1.0)).abs() < 1e-15);
        assert!((fermi_occupation(1.0, 1.0) - 0.268_941_421_369_995_1).abs() < 1e-12);
        assert_eq!(fermi_occupation(2.0, 0.0), 0.0);
        assert_eq!(fermi_occupation(-2.0, 0.0), 1.0);
        assert_eq!(fermi_occupation(0.0, 0.0), 0.5);
        assert!(fermi_occupation(1e-3, 1e-8) < 1e-300);
    }

    #[test]
    fn bose_values() {
        assert!((bose_occupation(1.0, 1.0).unwrap() - 0.581_976_706_869_326_4).abs() < 1e-12);
        assert_eq!(bose_occupation(1.0, 0.0).unwrap(), 0.0);
        assert!(matches!(bose_occupation(FREQ_FLOOR / 2.0, 1.0), Err(Error::SmallGap { .. })));
    }

    #[test]
    fn unit_weight_unit_rate() {
        let t = WeightedTransition {
            upper: lvl(ParitySector::Even, 2),
            lower: lvl(ParitySector::Odd, 1),
            frequency: 1.0,
            weight: 1.0,
        };
        let bath = fermi_bath(1.0, 0.0, 1.0 / (2.0 * std::f64::consts::PI));
        let r = lindblad_rates(&[t], &bath, NoiseKind::Dissipation, &RateOptions::default()).unwrap();
        assert!((r.channels[0].rate - 1.0).abs() < 1e-15);
        assert_eq!(r.channels[0].up_rate, 0.0);
        assert_eq!(r.channels[0].down_rate, r.channels[0].rate);
    }

    #[test]
    fn zero_coupling_zero_rates() {
        let t = WeightedTransition {
            upper: lvl(ParitySector::Even, 2),
            lower: lvl(ParitySector::Odd, 1),
            frequency: 1.0,
            weight: 0.7,
        };
        let r = lindblad_rates(&[t], &fermi_bath(0.0, 0.3, 1.0), NoiseKind::Dissipation, &RateOptions::default()).unwrap();
        assert_eq!(r.channels[0].rate, 0.0);
        assert_eq!(r.channels[0].up_rate, 0.0);
    }

    #[test]
    fn statistics_mismatch_is_an_error() {
        let r = lindblad_rates(&[], &fermi_bath(1.0, 0.0, 1.0), NoiseKind::Dephasing, &RateOptions::default());
        assert!(matches!(r, Err(Error::StatisticsMismatch(_))));
    }

    #[test]
    fn ground_pair_and_slow_transitions_are_excluded() {
        let ts = [
            WeightedTransition {
                upper: lvl(ParitySector::Even, 1),
                lower: lvl(ParitySector::Odd, 1),
                frequency: 0.3,
                weight: 1.0,
            },
            WeightedTransition {
                upper: lvl(ParitySector::Even, 2),
                lower: lvl(ParitySector::Odd, 2),
                frequency: 1e-12,
                weight: 1.0,
            },
        ];
        let r = lindblad_rates(&ts, &fermi_bath(1.0, 0.1, 1.0), NoiseKind::Dissipation, &RateOptions::default()).unwrap();
        assert!(r.channels.is_empty());
        assert_eq!(r.excluded[0].reason, ExclusionReason::GroundPair);
        assert_eq!(r.excluded[1].reason, ExclusionReason::BelowFrequencyFloor);
    }

    #[test]
    fn degenerate_channels_are_flagged() {
        let ts = [
            WeightedTransition {
                upper: lvl(ParitySector::Even, 2),
                lower: lvl(ParitySector::Odd, 1),
                frequency: 1.0,
                weight: 1.0,
            },
            WeightedTransition {
                upper: lvl(ParitySector::Odd, 2),
                lower: lvl(ParitySector::Even, 1),
                frequency: 1.0 + 1e-9,
                weight: 0.5,
            },
        ];
        let r = lindblad_rates(&ts, &fermi_bath(1.0, 0.1, 1.0), NoiseKind::Dissipation, &RateOptions::default()).unwrap();
        assert_eq!(r.channels.len(), 2);
        assert_eq!(r.validity.len(), 1);
    }

    #[test]
    fn wrong_parity_structure_rejected() {
        let t = WeightedTransition {
            upper: lvl(ParitySector::Even, 2),
            lower: lvl(ParitySector::Even, 1),
            frequency: 1.0,
            weight: 1.0,
        };
        assert!(lindblad_rates(&[t], &fermi_bath(1.0, 0.0, 1.0), NoiseKind::Dissipation, &RateOptions::default()).is_err());
    }
}
