//! Sensitivity heat maps over core radius and shell thickness.
//!
//! Cells are visited by continuation so that every cell follows the same
//! branch: a lead-in path carries the seed from the template geometry to the
//! anchor cell, a spine walks the core-radius axis at the anchor thickness,
//! and each row then walks the thickness axis independently (rows run in
//! parallel). Moves between neighbouring geometries are subdivided until the
//! root changes by less than a fixed fraction per substep.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complexplane::SingularityKind;
use crate::direct::{pole_shift_direct, DirectOptions};
use crate::error::{Error, Result};
use crate::gws::{pole_shift, sensitivity_eta, ShiftMethod, ShiftOptions};
use crate::mie::LayeredSphere;
use crate::particle::{LocateOptions, Located, ParticleModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl GridAxis {
    pub fn new(start: f64, stop: f64, steps: usize) -> Result<Self> {
        let axis = Self { start, stop, steps };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start > 0.0 && self.stop > self.start) {
            return Err(Error::InvalidArgument("grid bounds must be positive and increasing".into()));
        }
        if self.steps < 2 {
            return Err(Error::InvalidArgument("grid needs at least two steps".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// Index of the grid value closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let values = self.values();
        let mut best = 0;
        for (i, v) in values.iter().enumerate() {
            if (v - x).abs() < (values[best] - x).abs() {
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    /// Two-layer particle whose geometry is the one `seed` belongs to.
    pub template: ParticleModel,
    pub kind: SingularityKind,
    pub seed: Complex64,
    /// Parameter whose sensitivity is mapped.
    pub parameter: String,
    pub r_c: GridAxis,
    pub d_s: GridAxis,
    /// Fraction of cells that also get a direct re-solve.
    pub cross_check_fraction: f64,
    pub cross_check_delta: f64,
    pub rng_seed: u64,
    pub locate: LocateOptions,
    pub shift: ShiftOptions,
    pub continuation: ContinuationOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    /// Largest accepted relative change of the root per substep.
    pub max_relative_jump: f64,
    /// Number of times a move may be halved.
    pub max_halvings: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            max_relative_jump: 0.05,
            max_halvings: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub delta_alpha: f64,
    pub gws_delta_k: Complex64,
    pub direct_delta_k: Complex64,
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub i: usize,
    pub j: usize,
    pub r_c: f64,
    pub d_s: f64,
    pub k: Option<Complex64>,
    pub reference: Option<f64>,
    pub q_factor: Option<f64>,
    pub eta: Option<Complex64>,
    pub residue_of_trace: Option<Complex64>,
    /// Winding verified by the locate step.
    pub verified: bool,
    pub substeps: usize,
    pub cross_check: Option<CrossCheck>,
    pub failure: Option<String>,
}

impl CellResult {
    fn failed(i: usize, j: usize, r_c: f64, d_s: f64, error: &Error) -> Self {
        Self {
            i,
            j,
            r_c,
            d_s,
            k: None,
            reference: None,
            q_factor: None,
            eta: None,
            residue_of_trace: None,
            verified: false,
            substeps: 0,
            cross_check: None,
            failure: Some(error.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.failure.is_none() && self.eta.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxCell {
    pub i: usize,
    pub j: usize,
    pub r_c: f64,
    pub d_s: f64,
    pub value: f64,
    pub eta: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub cells: usize,
    pub failed: usize,
    pub argmax_abs_re: Option<ArgmaxCell>,
    pub argmax_abs_im: Option<ArgmaxCell>,
    /// Successful cells with `|Im eta| < DARK_BAND_THRESHOLD`.
    pub dark_cells: usize,
    pub cross_checked: usize,
    pub max_cross_check_gap: Option<f64>,
}

pub const DARK_BAND_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapResult {
    pub kind: SingularityKind,
    pub parameter: String,
    pub r_c: Vec<f64>,
    pub d_s: Vec<f64>,
    pub anchor: (usize, usize),
    /// Row-major: index `i * d_s.len() + j`.
    pub cells: Vec<CellResult>,
}

impl HeatmapResult {
    pub fn cell(&self, i: usize, j: usize) -> &CellResult {
        &self.cells[i * self.d_s.len() + j]
    }

    pub fn summary(&self) -> SweepSummary {
        let ok: Vec<&CellResult> = self.cells.iter().filter(|c| c.is_ok()).collect();
        let argmax = |f: &dyn Fn(Complex64) -> f64| {
            ok.iter()
                .map(|c| (c, f(c.eta.unwrap())))
                .fold(None::<(&&CellResult, f64)>, |best, (c, v)| match best {
                    Some((_, b)) if b >= v => best,
                    _ => Some((c, v)),
                })
                .map(|(c, v)| ArgmaxCell {
                    i: c.i,
                    j: c.j,
                    r_c: c.r_c,
                    d_s: c.d_s,
                    value: v,
                    eta: c.eta.unwrap(),
                })
        };
        let gaps: Vec<f64> = ok.iter().filter_map(|c| c.cross_check.as_ref().map(|x| x.relative_gap)).collect();
        SweepSummary {
            cells: self.cells.len(),
            failed: self.cells.len() - ok.len(),
            argmax_abs_re: argmax(&|e| e.re.abs()),
            argmax_abs_im: argmax(&|e| e.im.abs()),
            dark_cells: ok.iter().filter(|c| c.eta.unwrap().im.abs() < DARK_BAND_THRESHOLD).count(),
            cross_checked: gaps.len(),
            max_cross_check_gap: gaps.iter().cloned().fold(None, |m: Option<f64>, g| Some(m.map_or(g, |m| m.max(g)))),
        }
    }
}

fn model_at(template: &ParticleModel, r_c: f64, d_s: f64) -> Result<ParticleModel> {
    let s = &template.sphere;
    let sphere = LayeredSphere::new(vec![r_c, r_c + d_s], s.materials.clone(), s.background.clone())?;
    template.with_sphere(sphere)
}

/// Follows the singularity from geometry `from` (where it sits near `seed`)
/// to `to`, subdividing the straight path as needed. Returns the located
/// singularity at `to` and the number of substeps used.
pub fn continue_geometry(
    template: &ParticleModel,
    kind: SingularityKind,
    from: (f64, f64),
    to: (f64, f64),
    seed: Complex64,
    locate: &LocateOptions,
    opts: &ContinuationOptions,
) -> Result<(Located, usize)> {
    let quick = LocateOptions {
        with_trace_residue: false,
        ..*locate
    };
    let at = |t: f64| (from.0 + (to.0 - from.0) * t, from.1 + (to.1 - from.1) * t);
    let mut t: f64 = 0.0;
    let mut k = seed;
    let mut step = 1.0;
    let mut halvings = 0;
    let mut substeps = 0;
    let min_step = 0.5f64.powi(opts.max_halvings as i32);
    while t < 1.0 {
        let next = (t + step).min(1.0);
        let (r, d) = at(next);
        let attempt = model_at(template, r, d).and_then(|m| m.locate(kind, k, &quick));
        match attempt {
            Ok(found) if (found.record.location - k).norm() <= opts.max_relative_jump * k.norm() => {
                k = found.record.location;
                t = next;
                substeps += 1;
                if halvings > 0 {
                    step *= 2.0;
                    halvings -= 1;
                }
            }
            outcome => {
                if step <= min_step {
                    return Err(match outcome {
                        Err(e) => e,
                        Ok(_) => Error::LostTrack {
                            parameter: next,
                            last: None,
                        },
                    });
                }
                step /= 2.0;
                halvings += 1;
            }
        }
    }
    let located = model_at(template, to.0, to.1)?.locate(kind, k, locate)?;
    Ok((located, substeps))
}

struct CellContext<'a> {
    spec: &'a SweepSpec,
    r_c: Vec<f64>,
    d_s: Vec<f64>,
    checks: Vec<bool>,
}

impl CellContext<'_> {
    fn solve(&self, i: usize, j: usize, from: (f64, f64), seed: Complex64) -> CellResult {
        let (r, d) = (self.r_c[i], self.d_s[j]);
        let spec = self.spec;
        let attempt = || -> Result<CellResult> {
            let (located, substeps) = continue_geometry(
                &spec.template,
                spec.kind,
                from,
                (r, d),
                seed,
                &spec.locate,
                &spec.continuation,
            )?;
            let metric = sensitivity_eta(&located.function, &located.record, &spec.parameter, &spec.shift)?;
            let cross_check = if self.checks[i * self.d_s.len() + j] {
                let k = located.record.location;
                let gws = pole_shift(
                    &located.function,
                    k,
                    &spec.parameter,
                    spec.cross_check_delta,
                    ShiftMethod::GwsResidue,
                    &spec.shift,
                )?
                .delta_k;
                let direct = pole_shift_direct(
                    &located.function,
                    k,
                    &spec.parameter,
                    spec.cross_check_delta,
                    &DirectOptions::default(),
                )?
                .delta_k;
                Some(CrossCheck {
                    delta_alpha: spec.cross_check_delta,
                    gws_delta_k: gws,
                    direct_delta_k: direct,
                    relative_gap: (gws - direct).norm() / direct.norm().max(f64::MIN_POSITIVE),
                })
            } else {
                None
            };
            Ok(CellResult {
                i,
                j,
                r_c: r,
                d_s: d,
                k: Some(located.record.location),
                reference: Some(located.reference),
                q_factor: Some(located.record.q_factor),
                eta: Some(metric.eta),
                residue_of_trace: located.record.residue_of_trace,
                verified: true,
                substeps,
                cross_check,
                failure: None,
            })
        };
        attempt().unwrap_or_else(|e| CellResult::failed(i, j, r, d, &e))
    }
}

/// Runs the sweep. Cells present in `cache` are reused as-is (and as
/// continuation seeds); `on_cell` is invoked for every newly computed cell,
/// possibly from several threads.
pub fn run_sweep<F>(spec: &SweepSpec, cache: &BTreeMap<(usize, usize), CellResult>, on_cell: F) -> Result<HeatmapResult>
where
    F: Fn(&CellResult) + Sync,
{
    spec.r_c.validate()?;
    spec.d_s.validate()?;
    if spec.template.sphere.radii.len() != 2 {
        return Err(Error::InvalidGeometry("sweeps need a two-layer template".into()));
    }
    if !(0.0..=1.0).contains(&spec.cross_check_fraction) {
        return Err(Error::InvalidArgument("cross-check fraction must lie in [0, 1]".into()));
    }
    let r_c = spec.r_c.values();
    let d_s = spec.d_s.values();
    let (nr, nd) = (r_c.len(), d_s.len());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let checks: Vec<bool> = (0..nr * nd).map(|_| rng.random::<f64>() < spec.cross_check_fraction).collect();
    let ctx = CellContext {
        spec,
        r_c: r_c.clone(),
        d_s: d_s.clone(),
        checks,
    };
    let template_geometry = (
        spec.template.sphere.core_radius(),
        spec.template.sphere.shell_thickness().unwrap_or_default(),
    );
    let anchor = (spec.r_c.nearest(template_geometry.0), spec.d_s.nearest(template_geometry.1));
    let fetch = |i: usize, j: usize, from: (f64, f64), seed: Complex64| -> CellResult {
        if let Some(c) = cache.get(&(i, j)) {
            return c.clone();
        }
        let cell = ctx.solve(i, j, from, seed);
        on_cell(&cell);
        cell
    };

    // Lead-in: thickness first, then radius, to the anchor cell.
    let (i0, j0) = anchor;
    let anchor_cell = if let Some(c) = cache.get(&(i0, j0)) {
        c.clone()
    } else {
        let mid = (template_geometry.0, d_s[j0]);
        let lead = continue_geometry(
            &spec.template,
            spec.kind,
            template_geometry,
            mid,
            spec.seed,
            &spec.locate,
            &ContinuationOptions {
                max_halvings: spec.continuation.max_halvings + 6,
                ..spec.continuation
            },
        );
        match lead {
            Ok((located, _)) => fetch(i0, j0, mid, located.record.location),
            Err(e) => {
                let cell = CellResult::failed(i0, j0, r_c[i0], d_s[j0], &e);
                on_cell(&cell);
                cell
            }
        }
    };

    // Spine along r_c at the anchor thickness.
    let mut spine: Vec<Option<CellResult>> = vec![None; nr];
    spine[i0] = Some(anchor_cell);
    for direction in [1isize, -1] {
        let mut last = spine[i0].clone().unwrap();
        let mut i = i0 as isize + direction;
        while i >= 0 && (i as usize) < nr {
            let iu = i as usize;
            let cell = match last.k {
                Some(k) => fetch(iu, j0, (last.r_c, last.d_s), k),
                None => CellResult::failed(iu, j0, r_c[iu], d_s[j0], &Error::LostTrack { parameter: r_c[iu], last: None }),
            };
            if cell.k.is_some() {
                last = cell.clone();
            }
            spine[iu] = Some(cell);
            i += direction;
        }
    }

    // Rows along d_s in parallel.
    let rows: Vec<Vec<CellResult>> = spine
        .into_par_iter()
        .enumerate()
        .map(|(i, start)| {
            let start = start.expect("spine filled");
            let mut row: Vec<Option<CellResult>> = vec![None; nd];
            row[j0] = Some(start.clone());
            for direction in [1isize, -1] {
                let mut last = start.clone();
                let mut j = j0 as isize + direction;
                while j >= 0 && (j as usize) < nd {
                    let ju = j as usize;
                    let cell = match last.k {
                        Some(k) => fetch(i, ju, (last.r_c, last.d_s), k),
                        None => CellResult::failed(
                            i,
                            ju,
                            r_c[i],
                            d_s[ju],
                            &Error::LostTrack {
                                parameter: d_s[ju],
                                last: None,
                            },
                        ),
                    };
                    if cell.k.is_some() {
                        last = cell.clone();
                    }
                    row[ju] = Some(cell);
                    j += direction;
                }
            }
            row.into_iter().map(|c| c.expect("row filled")).collect()
        })
        .collect();

    Ok(HeatmapResult {
        kind: spec.kind,
        parameter: spec.parameter.clone(),
        r_c,
        d_s,
        anchor,
        cells: rows.into_iter().flatten().collect(),
    })
}
