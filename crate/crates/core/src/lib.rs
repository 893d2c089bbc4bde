//! Cat-state interference behind a lossy beam splitter.
//!
//! The crate computes the fringe visibility of a two-component coherent
//! superposition after one arm has passed a beam splitter with vacuum in the
//! other port. Three routes are available and are expected to agree:
//!
//! * closed form and which-path overlap ([`phase_space::visibility_analytic`],
//!   [`experiment::environment_overlap_oracle`]),
//! * numerical phase-space integration of the two-mode Husimi function
//!   ([`phase_space::integrate_q_term`], [`experiment::fringe_scan`]),
//! * brute force in a truncated Fock basis
//!   ([`experiment::fock_brute_force_visibility`]).
//!
//! [`heisenberg`] propagates quadrature moments through the same beam splitter,
//! which barely move for small reflectivity even when the visibility collapses.
//!
//! All numerics are generic over [`Real`]; the `*64` / `*32` aliases below fix
//! the scalar type.

pub mod experiment;
pub mod fock;
pub mod heisenberg;
pub mod operators;
pub mod phase_space;
mod scalar;

pub use num_complex::Complex;
pub use scalar::Real;

pub use experiment::{
    environment_overlap_oracle, extract_visibility, fock_brute_force_visibility, fringe_scan, sweep, ExperimentError,
    ExperimentParams, FringeFit, FringeScan, SweepRanges, SweepRow, Tolerances,
};
pub use fock::{
    cat_fock, cat_norm_constant, coherent_fock, coherent_overlap, default_cutoff, CatSpec, CoherentLabel, FockError,
    ModeState,
};
pub use heisenberg::{contrast_report, output_quadrature_stats, ContrastReport, QuadratureStats};
pub use operators::{
    apply_v, bs_coherent_map, bs_fock_apply, phase_shift_fock, phase_shift_label, quadrature_moments, BeamSplitter,
    DensityMatrix, OperatorError, TwoModeState,
};
pub use phase_space::{
    f_minus, f_plus, integrate_q_term, q_full, q_term, visibility_analytic, BranchTerm, GridSpec, PhaseSpaceError,
    QGrid, QIntegral, Sign,
};

pub type Complex64 = Complex<f64>;
pub type Complex32 = Complex<f32>;

pub type CoherentLabel64 = CoherentLabel<f64>;
pub type ModeState64 = ModeState<f64>;
pub type CatSpec64 = CatSpec<f64>;
pub type BeamSplitter64 = BeamSplitter<f64>;
pub type TwoModeState64 = TwoModeState<f64>;
pub type DensityMatrix64 = DensityMatrix<f64>;
pub type BranchTerm64 = BranchTerm<f64>;
pub type QGrid64 = QGrid<f64>;
pub type GridSpec64 = GridSpec<f64>;
pub type QuadratureStats64 = QuadratureStats<f64>;
pub type ContrastReport64 = ContrastReport<f64>;
pub type ExperimentParams64 = ExperimentParams<f64>;
pub type FringeScan64 = FringeScan<f64>;
pub type FringeFit64 = FringeFit<f64>;
pub type SweepRow64 = SweepRow<f64>;

pub type CoherentLabel32 = CoherentLabel<f32>;
pub type ModeState32 = ModeState<f32>;
pub type BeamSplitter32 = BeamSplitter<f32>;
pub type TwoModeState32 = TwoModeState<f32>;
pub type ExperimentParams32 = ExperimentParams<f32>;
