//! Layered particles as parameterized scattering functions.
//!
//! A [`ParticleModel`] turns a [`LayeredSphere`] plus a material library into
//! the scalar functions used by the root finders and the residue machinery.
//! Tabulated media cannot be continued off the real axis, so their index is
//! frozen at a reference wavenumber; [`ParticleModel::locate`] iterates that
//! reference until it coincides with `Re(k)` of the located root.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::complexplane::{
    newton_root, winding_number, ContourSpec, NewtonOptions, PoleRecord, SingularityKind,
};
use crate::error::{Error, Result};
use crate::gws::{residue_of_trace, Parameter, ScatteringFunction, ShiftOptions};
use crate::materials::{refractive_index, EvaluationRule, MaterialLibrary};
use crate::mie::{coated, Block, DispersionPolicy, IndexProfile, LayeredSphere};

/// Name of the additive background-index parameter.
pub const PARAM_BACKGROUND: &str = "n_b";
/// Name of the core-radius parameter.
pub const PARAM_CORE_RADIUS: &str = "r_c";
/// Name of the shell-thickness parameter of a two-layer particle.
pub const PARAM_SHELL_THICKNESS: &str = "d_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DispersionMode {
    /// All materials evaluated at the real reference wavenumber.
    Frozen,
    /// Closed-form models continued to complex `k`; tables frozen.
    #[default]
    Continued,
}

/// Which part of the coefficient `a = f / g` a function represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Coefficient,
    Numerator,
    Denominator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocateOptions {
    pub newton: NewtonOptions,
    /// Maximum passes of the reference-wavenumber fixed point.
    pub max_reference_updates: usize,
    /// Relative agreement between reference and `Re(k)` that ends the loop.
    pub reference_tol: f64,
    /// Also compute `Res tr L_k` for the record.
    pub with_trace_residue: bool,
}

impl Default for LocateOptions {
    fn default() -> Self {
        Self {
            newton: NewtonOptions::default(),
            max_reference_updates: 30,
            reference_tol: 1e-11,
            with_trace_residue: true,
        }
    }
}

/// A located singularity together with the function it belongs to.
#[derive(Debug, Clone)]
pub struct Located {
    pub record: PoleRecord,
    /// Reference wavenumber at which frozen media were evaluated.
    pub reference: f64,
    /// `M = a` for poles and `M' = 1/a` for zeros, so that the singularity is
    /// a simple pole of `function` in both cases.
    pub function: ScatteringFunction,
}

#[derive(Debug, Clone)]
pub struct ParticleModel {
    pub sphere: LayeredSphere,
    pub block: Block,
    pub order: usize,
    pub dispersion: DispersionMode,
    library: Arc<MaterialLibrary>,
}

impl ParticleModel {
    pub fn new(
        sphere: LayeredSphere,
        library: Arc<MaterialLibrary>,
        dispersion: DispersionMode,
        block: Block,
        order: usize,
    ) -> Result<Self> {
        sphere.validate()?;
        for id in sphere.materials.iter().chain(std::iter::once(&sphere.background)) {
            library.get(id)?;
        }
        if order == 0 {
            return Err(Error::InvalidArgument("multipole order must be at least 1".into()));
        }
        Ok(Self {
            sphere,
            block,
            order,
            dispersion,
            library,
        })
    }

    pub fn library(&self) -> &Arc<MaterialLibrary> {
        &self.library
    }

    pub fn with_sphere(&self, sphere: LayeredSphere) -> Result<Self> {
        Self::new(sphere, self.library.clone(), self.dispersion, self.block, self.order)
    }

    pub fn policy(&self, reference: f64) -> DispersionPolicy {
        match self.dispersion {
            DispersionMode::Frozen => DispersionPolicy::Frozen { reference },
            DispersionMode::Continued => DispersionPolicy::Continued { reference },
        }
    }

    /// Names of the geometric parameters, innermost first.
    pub fn geometry_names(&self) -> Vec<String> {
        let n = self.sphere.radii.len();
        let mut names = vec![PARAM_CORE_RADIUS.to_string()];
        for l in 1..n {
            names.push(if n == 2 {
                PARAM_SHELL_THICKNESS.to_string()
            } else {
                format!("d_{}", l + 1)
            });
        }
        names
    }

    fn geometry_values(&self) -> Vec<f64> {
        let r = &self.sphere.radii;
        let mut v = vec![r[0]];
        v.extend(r.windows(2).map(|w| w[1] - w[0]));
        v
    }

    fn background_at(&self, reference: f64) -> Result<Complex64> {
        let model = self.library.model(&self.sphere.background)?;
        Ok(refractive_index(
            model,
            Complex64::new(reference, 0.0),
            EvaluationRule::FrozenAtRealPart,
        )?)
    }

    /// Parameters at a given reference: `n_b` (real part of the background
    /// index, perturbed additively) followed by the geometry.
    pub fn parameters(&self, reference: f64) -> Result<Vec<Parameter>> {
        let nb = self.background_at(reference)?;
        let mut params = vec![Parameter::new(PARAM_BACKGROUND, "1", nb.re)];
        for (name, value) in self.geometry_names().into_iter().zip(self.geometry_values()) {
            params.push(Parameter::new(&name, "m", value));
        }
        Ok(params)
    }

    /// The chosen part of the Mie coefficient as a function of `k` and the
    /// parameter vector, with frozen media held at `reference`.
    pub fn function(&self, component: Component, reference: f64) -> Result<ScatteringFunction> {
        let params = self.parameters(reference)?;
        let kappa_b = self.background_at(reference)?.im;
        let policy = self.policy(reference);
        let library = self.library.clone();
        let materials = self.sphere.materials.clone();
        let frozen: Option<Vec<Complex64>> = match policy {
            DispersionPolicy::Frozen { .. } => Some(
                crate::mie::resolve(&self.sphere, &library, Complex64::new(reference, 0.0), policy)?.indices,
            ),
            DispersionPolicy::Continued { .. } => None,
        };
        let block = self.block;
        let order = self.order;
        let layers = materials.len();
        let label = format!(
            "{}_{}{}",
            match block {
                Block::Electric => "a",
                Block::Magnetic => "b",
            },
            order,
            match component {
                Component::Coefficient => "",
                Component::Numerator => ".f",
                Component::Denominator => ".g",
            }
        );
        Ok(ScatteringFunction::new(label, params, move |k, p| {
            let mut radii = Vec::with_capacity(layers);
            let mut r = 0.0;
            for t in &p[1..=layers] {
                r += t;
                radii.push(r);
            }
            if !(p[1] > 0.0) || p[2..=layers].iter().any(|t| !(*t > 0.0)) {
                return Err(Error::InvalidGeometry("radii must stay positive and increasing".into()));
            }
            let indices = match &frozen {
                Some(v) => v.clone(),
                None => materials
                    .iter()
                    .map(|id| {
                        let model = library.model(id)?;
                        let n = if model.supports_continuation() {
                            refractive_index(model, k, EvaluationRule::AnalyticContinuation)?
                        } else {
                            refractive_index(model, Complex64::new(reference, 0.0), EvaluationRule::FrozenAtRealPart)?
                        };
                        Ok(n)
                    })
                    .collect::<Result<Vec<_>>>()?,
            };
            let profile = IndexProfile {
                radii,
                indices,
                background: Complex64::new(p[0], kappa_b),
            };
            let e = coated(block, order, &profile, k)?;
            Ok(match component {
                Component::Coefficient => e.value,
                Component::Numerator => e.numerator,
                Component::Denominator => e.denominator,
            })
        }))
    }

    /// Locates a pole (zero of `g`) or zero (zero of `f`) of the coefficient
    /// near `seed`, iterating the frozen-media reference to self-consistency,
    /// and verifies it is simple.
    pub fn locate(&self, kind: SingularityKind, seed: Complex64, opts: &LocateOptions) -> Result<Located> {
        let component = match kind {
            SingularityKind::Pole => Component::Denominator,
            SingularityKind::Zero => Component::Numerator,
        };
        let mut reference = seed.re;
        let mut k = seed;
        let mut iterations = 0;
        let mut final_step = 0.0;
        let mut converged = false;
        // Secant iteration on gap(ref) = Re k(ref) - ref; plain substitution
        // stalls where a tabulated medium disperses strongly.
        let mut previous: Option<(f64, f64)> = None;
        for _ in 0..opts.max_reference_updates {
            let search = self.function(component, reference)?;
            let out = newton_root(|z| search.eval(z), k, &opts.newton)?;
            iterations += out.iterations;
            final_step = out.final_step;
            k = out.root;
            let gap = k.re - reference;
            if gap.abs() <= opts.reference_tol * k.norm() {
                converged = true;
                break;
            }
            let next = match previous {
                Some((r0, g0)) if g0 != gap => {
                    let secant = reference - gap * (reference - r0) / (gap - g0);
                    // Keep the update within the span of a plain substitution step.
                    let limit = 2.0 * gap.abs();
                    reference + (secant - reference).clamp(-limit, limit)
                }
                _ => k.re,
            };
            previous = Some((reference, gap));
            reference = next;
        }
        if !converged {
            return Err(Error::NoConvergence {
                iterations: opts.max_reference_updates,
                last: k,
            });
        }
        let search = self.function(component, reference)?;
        let out = newton_root(|z| search.eval(z), k, &opts.newton)?;
        k = out.root;
        iterations += out.iterations;
        let coefficient = self.function(Component::Coefficient, reference)?;
        let function = match kind {
            SingularityKind::Pole => coefficient,
            SingularityKind::Zero => coefficient.inverted(),
        };
        let winding = winding_number(|z| function.eval(z), &ContourSpec::around(k))?;
        if winding != -1 {
            return Err(Error::SimplePoleViolation { location: k, winding });
        }
        let mut record = PoleRecord::new(k, kind, iterations, final_step);
        if opts.with_trace_residue {
            record.residue_of_trace = Some(residue_of_trace(&function, k, &ShiftOptions::default())?);
        }
        Ok(Located {
            record,
            reference,
            function,
        })
    }
}
