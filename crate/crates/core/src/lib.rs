//! Pole and zero shifts of scattering functions from generalized
//! Wigner-Smith residues.
//!
//! The crate is organised bottom-up: [`specfun`] supplies Riccati-Bessel
//! functions, [`materials`] dispersive media, [`mie`] multilayer sphere
//! coefficients, [`complexplane`] root finding and contour integrals, and
//! [`gws`] / [`direct`] the two ways of predicting how a singularity moves.
//! [`slab1d`] checks the operator identities on a stratified medium and
//! [`sweep`] produces sensitivity heat maps.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod complexplane;
pub mod direct;
pub mod error;
pub mod gws;
pub mod materials;
pub mod mie;
pub mod particle;
pub mod slab1d;
pub mod specfun;
pub mod sweep;
pub mod tolerances;

pub use num_complex::Complex64;

pub use complexplane::{
    newton_root, q_factor, residue, track, winding_number, ContourSpec, NewtonOptions, PoleRecord, Predictor,
    SingularityKind, TrackOptions,
};
pub use direct::{pole_shift_direct, DirectOptions, DirectShiftResult};
pub use error::{Error, Result};
pub use gws::{
    pole_shift, sensitivity_eta, zero_shift, Parameter, ScatteringFunction, SensitivityMetric, ShiftMethod,
    ShiftOptions, ShiftPrediction,
};
pub use materials::{DispersionModel, EvaluationRule, MaterialLibrary};
pub use mie::{cross_sections, Block, CrossSections, DispersionPolicy, LayeredSphere};
pub use particle::{Component, DispersionMode, LocateOptions, Located, ParticleModel};
pub use slab1d::{
    perturb_compare, slab_smatrix, verify_identity, IdentityTag, Layer, OperatorIdentityReport, PerturbationComparison,
    Slab1D, SlabParameter,
};
pub use sweep::{run_sweep, CellResult, GridAxis, HeatmapResult, SweepSpec, SweepSummary};
