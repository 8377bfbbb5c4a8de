//! Root finding, contour residues, winding numbers and continuation in the
//! complex wavenumber plane.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Circle used for contour quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub center: Complex64,
    pub radius: f64,
    pub samples: usize,
}

/// Default contour radius relative to `|k_p|`.
pub const DEFAULT_RELATIVE_RADIUS: f64 = 1e-3;
/// Default initial number of trapezoid nodes.
pub const DEFAULT_SAMPLES: usize = 32;

impl ContourSpec {
    pub fn new(center: Complex64, radius: f64, samples: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("contour radius {radius} must be positive")));
        }
        if samples < 16 {
            return Err(Error::InvalidArgument(format!(
                "contour needs at least 16 samples, got {samples}"
            )));
        }
        Ok(Self {
            center,
            radius,
            samples,
        })
    }

    /// Contour of radius `1e-3 |center|` with the default sample count,
    /// capped at `|Im center| / 2` so that the mirror point `center*` (where
    /// lossless systems place the partner zero) stays outside.
    pub fn around(center: Complex64) -> Self {
        let mut radius = DEFAULT_RELATIVE_RADIUS * center.norm().max(f64::MIN_POSITIVE);
        if center.im != 0.0 {
            radius = radius.min(0.5 * center.im.abs());
        }
        Self {
            center,
            radius,
            samples: DEFAULT_SAMPLES,
        }
    }

    pub fn shrunk(&self, factor: f64) -> Self {
        Self {
            radius: self.radius * factor,
            ..*self
        }
    }

    fn node(&self, j: usize, n: usize) -> (Complex64, Complex64) {
        let w = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
        (self.center + self.radius * w, self.radius * w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularityKind {
    Pole,
    Zero,
}

/// A located and verified pole or zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleRecord {
    pub location: Complex64,
    pub kind: SingularityKind,
    pub q_factor: f64,
    /// Residue of the trace of the wavenumber log-derivative; `i` for a simple pole.
    pub residue_of_trace: Option<Complex64>,
    pub iterations: usize,
    pub final_step: f64,
}

impl PoleRecord {
    pub fn new(location: Complex64, kind: SingularityKind, iterations: usize, final_step: f64) -> Self {
        Self {
            location,
            kind,
            q_factor: q_factor(location),
            residue_of_trace: None,
            iterations,
            final_step,
        }
    }

    /// Passive resonances lie in the lower half plane; zeros may sit anywhere.
    pub fn in_lower_half_plane(&self) -> bool {
        self.location.im < 0.0
    }
}

/// `Re(k) / (2 |Im(k)|)`.
pub fn q_factor(k: Complex64) -> f64 {
    k.re / (2.0 * k.im.abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Convergence when `|step| <= tol * |k|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Finite-difference step relative to `|k|` (floored at `1e-2 tol |k|`).
    pub fd_relative_step: f64,
    /// Largest accepted step as a fraction of `|k|`.
    pub max_step_fraction: f64,
    /// Iterates farther than this multiple of `|k0|` from the seed are rejected.
    pub max_excursion: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iter: 100,
            fd_relative_step: 1e-7,
            max_step_fraction: 0.05,
            max_excursion: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOutcome {
    pub root: Complex64,
    pub iterations: usize,
    pub final_step: f64,
}

fn is_finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Newton iteration with a central-difference derivative and step damping.
pub fn newton_root<F>(f: F, k0: Complex64, opts: &NewtonOptions) -> Result<NewtonOutcome>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    newton_with_derivative(&f, None::<&fn(Complex64) -> Result<Complex64>>, k0, opts)
}

/// Newton iteration using a caller-supplied analytic derivative when given.
pub fn newton_with_derivative<F, D>(
    f: &F,
    derivative: Option<&D>,
    k0: Complex64,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome>
where
    F: Fn(Complex64) -> Result<Complex64>,
    D: Fn(Complex64) -> Result<Complex64>,
{
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("Newton tolerance must be positive".into()));
    }
    let scale0 = k0.norm();
    let mut k = k0;
    let mut last_step = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        let value = f(k)?;
        if value == Complex64::new(0.0, 0.0) {
            return Ok(NewtonOutcome {
                root: k,
                iterations: iter,
                final_step: 0.0,
            });
        }
        let slope = match derivative {
            Some(d) => d(k)?,
            None => {
                let h = (opts.fd_relative_step * k.norm()).max(1e-2 * opts.tol * k.norm()).max(f64::MIN_POSITIVE);
                (f(k + h)? - f(k - h)?) / (2.0 * h)
            }
        };
        let mut step = -value / slope;
        if !is_finite(step) {
            return Err(Error::DivergedOutOfDomain(k));
        }
        let limit = opts.max_step_fraction * k.norm().max(scale0);
        if limit > 0.0 && step.norm() > limit {
            step *= limit / step.norm();
        }
        k += step;
        last_step = step.norm();
        if !is_finite(k) || (scale0 > 0.0 && (k - k0).norm() > opts.max_excursion * scale0) {
            return Err(Error::DivergedOutOfDomain(k));
        }
        if last_step <= opts.tol * k.norm().max(f64::MIN_POSITIVE) {
            return Ok(NewtonOutcome {
                root: k,
                iterations: iter,
                final_step: last_step,
            });
        }
    }
    let _ = last_step;
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        last: k,
    })
}

/// Target relative change between successive sample doublings.
pub const RESIDUE_TOLERANCE: f64 = 1e-9;
const MAX_DOUBLINGS: usize = 8;

/// `(1 / 2 pi i) \oint f dk` by the trapezoid rule on a circle, doubling the
/// node count until successive estimates agree to [`RESIDUE_TOLERANCE`].
pub fn residue<F>(f: F, contour: &ContourSpec) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    residue_with_estimate(f, contour).map(|(r, _)| r)
}

/// As [`residue`], also returning the last relative change.
pub fn residue_with_estimate<F>(f: F, contour: &ContourSpec) -> Result<(Complex64, f64)>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut n = contour.samples;
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let (k, dk) = contour.node(j, n);
        sum += f(k)? * dk;
    }
    let mut estimate = sum / n as f64;
    let mut changes: Vec<f64> = Vec::new();
    for _ in 0..MAX_DOUBLINGS {
        let m = 2 * n;
        for j in (1..m).step_by(2) {
            let (k, dk) = contour.node(j, m);
            sum += f(k)? * dk;
        }
        n = m;
        let next = sum / n as f64;
        let change = (next - estimate).norm() / next.norm().max(f64::MIN_POSITIVE);
        estimate = next;
        if !is_finite(estimate) {
            return Err(Error::QuadratureNotConverged("non-finite contour sum".into()));
        }
        if change < RESIDUE_TOLERANCE || (next.norm() == 0.0 && change.is_nan()) {
            return Ok((estimate, change));
        }
        changes.push(change);
    }
    let decreasing = changes.windows(2).all(|w| w[1] < w[0]);
    if decreasing {
        Err(Error::QuadratureNotConverged(format!(
            "relative change {:.3e} after {} nodes",
            changes.last().copied().unwrap_or(f64::NAN),
            n
        )))
    } else {
        Err(Error::MultipleSingularities {
            center: contour.center,
            radius: contour.radius,
        })
    }
}

/// Largest dynamic range of `|f|` tolerated on a winding contour (decades).
pub const MAX_WINDING_DECADES: f64 = 12.0;
const MAX_WINDING_NODES: usize = 1 << 14;

/// Net number of zeros minus poles of `f` inside `contour`, from the total
/// change of `arg f` along the circle.
pub fn winding_number<F>(f: F, contour: &ContourSpec) -> Result<i64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut n = contour.samples;
    let mut values: Vec<Complex64> = (0..n).map(|j| f(contour.node(j, n).0)).collect::<Result<_>>()?;
    loop {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for v in &values {
            if !is_finite(*v) || v.norm() == 0.0 {
                return Err(Error::IllConditioned { decades: f64::INFINITY });
            }
            lo = lo.min(v.norm());
            hi = hi.max(v.norm());
        }
        let decades = (hi / lo).log10();
        if decades > MAX_WINDING_DECADES {
            return Err(Error::IllConditioned { decades });
        }
        let mut total = 0.0;
        let mut max_jump = 0.0f64;
        for j in 0..n {
            let d = (values[(j + 1) % n] / values[j]).arg();
            max_jump = max_jump.max(d.abs());
            total += d;
        }
        if max_jump < PI / 4.0 {
            return Ok((total / (2.0 * PI)).round() as i64);
        }
        if 2 * n > MAX_WINDING_NODES {
            return Err(Error::IllConditioned { decades });
        }
        let m = 2 * n;
        let mut refined = Vec::with_capacity(m);
        for (j, v) in values.iter().enumerate() {
            refined.push(*v);
            refined.push(f(contour.node(2 * j + 1, m).0)?);
        }
        values = refined;
        n = m;
    }
}

/// Newton on `search` followed by a winding check of `search` itself: a
/// simple zero of the search function must give winding `+1`.
pub fn locate_simple<F>(
    search: F,
    seed: Complex64,
    kind: SingularityKind,
    opts: &NewtonOptions,
) -> Result<PoleRecord>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let outcome = newton_root(&search, seed, opts)?;
    let contour = ContourSpec::around(outcome.root);
    let winding = winding_number(&search, &contour)?;
    if winding != 1 {
        return Err(Error::SimplePoleViolation {
            location: outcome.root,
            winding,
        });
    }
    Ok(PoleRecord::new(outcome.root, kind, outcome.iterations, outcome.final_step))
}

/// Predictor used between consecutive path samples in [`track`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictor {
    /// Seed with the previous root.
    Previous,
    /// Linear extrapolation from the previous two roots.
    Secant,
    /// First-order shift `dk/dt = -(d_t s)/(d_k s)` of the search function,
    /// which equals the residue prediction for `1/s`.
    FirstOrder,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackOptions {
    pub newton: NewtonOptions,
    pub predictor: Predictor,
    /// Maximum number of interval halvings between two path samples.
    pub max_refinements: usize,
    /// A root farther than this fraction of `|k|` from the seed counts as a jump.
    pub max_jump: f64,
    /// Verify the winding number at every path sample.
    pub verify: bool,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self {
            newton: NewtonOptions::default(),
            predictor: Predictor::FirstOrder,
            max_refinements: 12,
            max_jump: 0.02,
            verify: true,
        }
    }
}

/// Follows a zero of the search-function family `family(t, k)` along the
/// ordered `path`, starting from `seed` at `path[0]`. Intervals whose step
/// fails (no convergence, a jump, or a failed winding check) are bisected.
pub fn track<F>(family: F, path: &[f64], seed: Complex64, kind: SingularityKind, opts: &TrackOptions) -> Result<Vec<PoleRecord>>
where
    F: Fn(f64, Complex64) -> Result<Complex64>,
{
    let Some(&t0) = path.first() else {
        return Ok(Vec::new());
    };
    let first = solve_at(&family, t0, seed, seed, kind, opts, true).map_err(|_| Error::LostTrack {
        parameter: t0,
        last: None,
    })?;
    let mut records = vec![first];
    let mut history: Vec<(f64, Complex64)> = vec![(t0, records[0].location)];
    for &t_next in &path[1..] {
        let mut t = history.last().unwrap().0;
        let smallest = (t_next - t).abs() * 2f64.powi(-(opts.max_refinements as i32));
        let mut pending = vec![t_next];
        while let Some(&target) = pending.last() {
            let (_, k_prev) = *history.last().unwrap();
            let predicted = predict(&family, &history, target, opts.predictor)?;
            let is_sample = target == t_next;
            match solve_at(&family, target, predicted, k_prev, kind, opts, is_sample && opts.verify) {
                Ok(rec) => {
                    history.push((target, rec.location));
                    t = target;
                    pending.pop();
                    if is_sample {
                        records.push(rec);
                    }
                }
                Err(_) => {
                    if (target - t).abs() <= smallest {
                        return Err(Error::LostTrack {
                            parameter: target,
                            last: records.last().cloned().map(Box::new),
                        });
                    }
                    pending.push(0.5 * (t + target));
                }
            }
        }
    }
    Ok(records)
}

fn predict<F>(family: &F, history: &[(f64, Complex64)], target: f64, predictor: Predictor) -> Result<Complex64>
where
    F: Fn(f64, Complex64) -> Result<Complex64>,
{
    let (t1, k1) = *history.last().unwrap();
    if target == t1 {
        return Ok(k1);
    }
    match predictor {
        Predictor::Previous => Ok(k1),
        Predictor::Secant if history.len() >= 2 => {
            let (t0, k0) = history[history.len() - 2];
            Ok(k1 + (k1 - k0) * ((target - t1) / (t1 - t0)))
        }
        Predictor::Secant => Ok(k1),
        Predictor::FirstOrder => {
            let hk = 1e-7 * k1.norm();
            let ht = 1e-6 * t1.abs().max((target - t1).abs()).max(f64::MIN_POSITIVE);
            let ds_dk = (family(t1, k1 + hk)? - family(t1, k1 - hk)?) / (2.0 * hk);
            let ds_dt = (family(t1 + ht, k1)? - family(t1 - ht, k1)?) / (2.0 * ht);
            let slope = -ds_dt / ds_dk;
            let predicted = k1 + slope * (target - t1);
            Ok(if is_finite(predicted) { predicted } else { k1 })
        }
    }
}

fn solve_at<F>(
    family: &F,
    t: f64,
    predicted: Complex64,
    previous: Complex64,
    kind: SingularityKind,
    opts: &TrackOptions,
    verify: bool,
) -> Result<PoleRecord>
where
    F: Fn(f64, Complex64) -> Result<Complex64>,
{
    let search = |k: Complex64| family(t, k);
    let outcome = newton_root(search, predicted, &opts.newton)?;
    let root = outcome.root;
    // Nearest-root-to-predictor rule: the converged root must stay close to
    // the prediction relative to the size of the predicted move.
    let moved = (predicted - previous).norm();
    let allowed = (0.5 * moved).max(opts.max_jump * previous.norm());
    if (root - predicted).norm() > allowed {
        return Err(Error::LostTrack {
            parameter: t,
            last: None,
        });
    }
    if verify {
        let winding = winding_number(search, &ContourSpec::around(root))?;
        if winding != 1 {
            return Err(Error::SimplePoleViolation { location: root, winding });
        }
    }
    Ok(PoleRecord::new(root, kind, outcome.iterations, outcome.final_step))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn newton_linear() {
        let out = newton_root(|k| Ok(k - c(2.0, 1.0)), c(1.0, 0.0), &NewtonOptions {
            max_excursion: f64::INFINITY,
            max_step_fraction: f64::INFINITY,
            ..Default::default()
        })
        .unwrap();
        assert!((out.root - c(2.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn residue_of_simple_pole() {
        let r = residue(|k| Ok(1.0 / (k - 2.0)), &ContourSpec::new(c(2.0, 0.0), 0.1, 16).unwrap()).unwrap();
        assert!((r - 1.0).norm() < 1e-12);
    }

    #[test]
    fn winding_signs() {
        let cs = ContourSpec::new(c(1.0, -1.0), 0.5, 16).unwrap();
        assert_eq!(winding_number(|k| Ok(k - c(1.0, -1.0)), &cs).unwrap(), 1);
        assert_eq!(winding_number(|k| Ok(1.0 / (k - c(1.0, -1.0))), &cs).unwrap(), -1);
    }

    #[test]
    fn contour_spec_validation() {
        assert!(ContourSpec::new(c(0.0, 0.0), 0.0, 32).is_err());
        assert!(ContourSpec::new(c(0.0, 0.0), 1.0, 8).is_err());
    }
}
