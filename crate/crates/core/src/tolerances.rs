//! Acceptance thresholds shared by the test suites and `poleshift verify`.

/// Plasmon pole of the 60/10 nm silica-gold particle in water, m⁻¹.
pub const LSPR_POLE_RE: f64 = 0.71e7;
pub const LSPR_POLE_IM: f64 = -0.07e7;
pub const LSPR_POLE_RE_TOL: f64 = 0.04e7;
pub const LSPR_POLE_IM_TOL: f64 = 0.015e7;
pub const LSPR_Q: f64 = 4.8;
pub const LSPR_Q_TOL: f64 = 0.7;

/// Spectrum features, m⁻¹, with relative windows.
pub const SPECTRUM_PEAK_K: f64 = 0.7e7;
pub const SPECTRUM_PEAK_REL: f64 = 0.05;
pub const SPECTRUM_SECONDARY_K: f64 = 0.9e7;
pub const SPECTRUM_SECONDARY_REL: f64 = 0.10;
pub const SPECTRUM_MINIMUM_K: f64 = 1.2e7;
pub const SPECTRUM_MINIMUM_REL: f64 = 0.10;

/// Agreement of radius sensitivities with `-k_p / r_c`.
pub const ANALYTIC_LAW_REL: f64 = 1e-6;
/// Constancy of `k_p r_c` along a radius continuation.
pub const HYPERBOLA_REL: f64 = 1e-8;

/// `|Res tr L_k - i|`.
pub const TRACE_RESIDUE_ABS: f64 = 1e-6;

/// Ratio of successive gws/direct discrepancies when `Δα` halves.
pub const CONVERGENCE_RATIO: f64 = 4.0;
pub const CONVERGENCE_RATIO_TOL: f64 = 0.8;

/// Heat-map targets: (value, relative tolerance, r_c in m, d_s in m).
pub const POLE_RE_ETA: (f64, f64, f64, f64) = (11.43, 0.25, 13.3e-9, 1.2e-9);
pub const POLE_IM_ETA: (f64, f64, f64, f64) = (0.94, 0.25, 6.3e-9, 2.7e-9);
pub const ZERO_RE_ETA: (f64, f64, f64, f64) = (100.0, 0.30, 40e-9, 0.2e-9);
pub const ZERO_IM_ETA: (f64, f64, f64, f64) = (7.0, 0.30, 26e-9, 0.2e-9);
/// A "near" cell lies within one grid step of the target on both axes, and
/// the maximum counts as near when such a cell reaches this fraction of it.
pub const PLATEAU_FRACTION: f64 = 0.9;

/// Slab identity residuals.
pub const SLAB_C_RESIDUAL: f64 = 1e-8;
pub const SLAB_D_RESIDUAL: f64 = 1e-6;
/// Empty slab: machine precision.
pub const SLAB_EMPTY_RESIDUAL: f64 = 1e-14;
/// Largest `|Im w| / |Re w|` of the random slab batch.
pub const SLAB_MAX_LOSS_TANGENT: f64 = 0.2;

/// Quality factors separating the two regimes of the perturbation comparison.
pub const LOW_Q_MAX: f64 = 5.0;
pub const HIGH_Q_MIN: f64 = 1e3;
pub const HIGH_Q_REL: f64 = 0.01;

/// Special functions.
pub const WRONSKIAN_ABS: f64 = 1e-10;
pub const UNITARITY_ABS: f64 = 1e-10;
pub const NULL_SCATTERING_ABS: f64 = 1e-14;
