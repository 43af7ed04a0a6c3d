//! Exact diagonalization of the interacting Kitaev chain in its spin (XYZ)
//! form, with the decoherence parameters of its Majorana ground states.
//!
//! The Hamiltonian is block-diagonal in fermion parity; [`solve_chain`]
//! diagonalizes both blocks. [`jw`] builds the Jordan-Wigner operators and
//! their matrix elements between eigenstates, [`decoherence`] turns those
//! into low- and high-frequency noise parameters and Lindblad rates, and
//! [`lindblad`] evolves a truncated density matrix. [`sweep`] runs any of
//! these over parameter grids.
//!
//! ```
//! use majorana_core::{solve_chain, ChainParams, SpectrumOptions};
//!
//! let p = ChainParams::dimensionless(6, 1.0, 0.0, 0.0).unwrap();
//! let s = solve_chain(&p, &SpectrumOptions::for_params(&p)).unwrap();
//! assert!(s.ground_gap() < 1e-10);
//! ```

pub mod decoherence;
pub mod eigen;
pub mod error;
pub mod jw;
pub mod lindblad;
pub mod model;
pub mod observables;
pub mod operator;
pub mod pauli;
pub mod spectra;
pub mod sweep;
pub mod table;

pub use decoherence::{
    BathSpec, ChannelRate, DecoherenceReport, LevelId, NoiseKind, RateOptions, Statistics, WeightedTransition,
};
pub use error::{Error, Result};
pub use jw::{MatrixElementKind, MatrixElementTable, SectorOperators};
pub use lindblad::{DensityMatrix, EvolveOptions, Trajectory, TruncatedModel};
pub use model::{ChainParams, ParitySector, SectorBasis, SectorHamiltonians};
pub use observables::{ClassifyOptions, CorrelationRow, PhaseEvidence, PhaseLabel};
pub use operator::{OperatorMatrix, C64};
pub use pauli::Axis;
pub use spectra::{solve_chain, ChainSpectrum, EigenSystem, SolverChoice, SpectrumOptions, TransitionKind, TransitionTable};
pub use sweep::{run_sweep, SweepGrid, SweepTask};
pub use table::{Cell, Column, ResultTable, TableFormat};
