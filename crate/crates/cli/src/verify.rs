use std::sync::Arc;

use clap::ValueEnum;
use num_complex::Complex64;
use poleshift::complexplane::{track, TrackOptions};
use poleshift::gws::{pole_shift, residue_of_trace, ShiftMethod, ShiftOptions};
use poleshift::materials::{DispersionModel, MaterialEntry};
use poleshift::slab1d::{internal_fields, Port};
use poleshift::tolerances as tol;
use poleshift::{
    verify_identity, Block, Component, DispersionMode, IdentityTag, Layer, LayeredSphere, LocateOptions,
    MaterialLibrary, ParticleModel, SingularityKind, Slab1D, SlabParameter,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::Config;
use crate::error::CliError;
use crate::output::Sink;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Unitarity and Wigner-Smith identities on random slabs and the empty slab.
    Slab,
    /// All four quadratic-form identities plus field continuity.
    Identities,
    /// Radius sensitivity of a nondispersive sphere against `-k_p / r`.
    AnalyticSphere,
    /// `Res tr L_k = i` at the configured poles.
    Residues,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

fn random_slab(rng: &mut ChaCha8Rng) -> anyhow::Result<Slab1D> {
    let count = rng.random_range(1..=3);
    let lossy = rng.random_bool(0.5);
    let layers = (0..count)
        .map(|_| {
            let eps_im = if lossy { rng.random_range(0.0..1.0) } else { 0.0 };
            Layer::new(rng.random_range(20e-9..300e-9), Complex64::new(rng.random_range(1.0..12.0), eps_im))
        })
        .collect();
    Ok(Slab1D::new(layers, rng.random_range(1.0..2.5))?)
}

fn random_omega(rng: &mut ChaCha8Rng) -> Complex64 {
    let re = rng.random_range(0.5e7..2.0e7);
    Complex64::new(re, re * rng.random_range(-tol::SLAB_MAX_LOSS_TANGENT..=tol::SLAB_MAX_LOSS_TANGENT))
}

fn worst(
    slabs: &[(Slab1D, Complex64)],
    tag: IdentityTag,
    param: impl Fn(&Slab1D) -> Option<SlabParameter>,
) -> anyhow::Result<f64> {
    let mut w: f64 = 0.0;
    for (slab, omega) in slabs {
        w = w.max(verify_identity(slab, *omega, tag, param(slab))?.residual);
    }
    Ok(w)
}

fn slab_batch(config: &Config) -> anyhow::Result<Vec<(Slab1D, Complex64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut batch = Vec::with_capacity(config.verify.random_slabs);
    for _ in 0..config.verify.random_slabs {
        let slab = random_slab(&mut rng)?;
        batch.push((slab, random_omega(&mut rng)));
    }
    if let Some(path) = &config.verify.slab_file {
        let path = config.resolve(path);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let library = config.library()?;
        let slab = Slab1D::from_json(&text, config.verify.slab_background, &library, 1e7)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        for omega in [Complex64::new(0.8e7, 0.0), Complex64::new(1.2e7, -0.1e7), Complex64::new(1.6e7, 0.05e7)] {
            batch.push((slab.clone(), omega));
        }
    }
    Ok(batch)
}

type ParamPick = Box<dyn Fn(&Slab1D) -> Option<SlabParameter>>;

/// Frequency, the last layer's permittivity scale and the first layer's thickness.
fn parameters() -> Vec<ParamPick> {
    vec![
        Box::new(|_| Some(SlabParameter::Frequency)),
        Box::new(|s: &Slab1D| (!s.layers.is_empty()).then(|| SlabParameter::PermittivityScale(s.layers.len() - 1))),
        Box::new(|s: &Slab1D| (!s.layers.is_empty()).then_some(SlabParameter::Thickness(0))),
    ]
}

fn slab_checks(config: &Config, all_four: bool) -> anyhow::Result<Vec<Check>> {
    let batch = slab_batch(config)?;
    let mut checks = vec![Check::new(
        "C_eq13 worst residual",
        worst(&batch, IdentityTag::Unitarity, |_| None)?,
        tol::SLAB_C_RESIDUAL,
    )];
    let names = ["frequency", "permittivity", "thickness"];
    for (name, param) in names.iter().zip(parameters()) {
        checks.push(Check::new(
            format!("D_eq18 worst residual ({name})"),
            worst(&batch, IdentityTag::WignerSmith, &param)?,
            tol::SLAB_D_RESIDUAL,
        ));
        if all_four {
            checks.push(Check::new(
                format!("B_eq5 worst residual ({name})"),
                worst(&batch, IdentityTag::ConjugatedDelay, &param)?,
                tol::SLAB_D_RESIDUAL,
            ));
        }
    }
    if all_four {
        checks.push(Check::new(
            "A_eq4 worst residual",
            worst(&batch, IdentityTag::EnergyBalance, |_| None)?,
            tol::SLAB_C_RESIDUAL,
        ));
        let mut continuity: f64 = 0.0;
        for (slab, omega) in &batch {
            for port in [Port::Left, Port::Right] {
                continuity = continuity.max(internal_fields(slab, *omega, port)?.continuity_residual(slab));
            }
        }
        checks.push(Check::new("field continuity", continuity, 1e-12));
    }
    let empty = Slab1D::empty(1.0)?;
    let mut exact: f64 = 0.0;
    for tag in [IdentityTag::Unitarity, IdentityTag::EnergyBalance] {
        exact = exact.max(verify_identity(&empty, Complex64::new(1e7, -1e6), tag, None)?.residual);
    }
    exact = exact.max(verify_identity(&empty, Complex64::new(1e7, -1e6), IdentityTag::WignerSmith, Some(SlabParameter::Frequency))?.residual);
    checks.push(Check::new("empty slab", exact, tol::SLAB_EMPTY_RESIDUAL));
    Ok(checks)
}

fn constant_sphere(radius: f64) -> anyhow::Result<ParticleModel> {
    let mut lib = MaterialLibrary::new();
    for (id, n) in [("core", 2.5), ("vacuum", 1.0)] {
        lib.insert(
            id,
            MaterialEntry {
                model: DispersionModel::Constant { n: Complex64::new(n, 0.0) },
                source: "constant".into(),
            },
        )?;
    }
    let sphere = LayeredSphere::new(vec![radius], vec!["core".into()], "vacuum")?;
    Ok(ParticleModel::new(sphere, Arc::new(lib), DispersionMode::Continued, Block::Electric, 1)?)
}

fn analytic_checks() -> anyhow::Result<Vec<Check>> {
    let r = 100e-9;
    let model = constant_sphere(r)?;
    let located = model.locate(SingularityKind::Pole, Complex64::new(1.764e7, -0.243e7), &LocateOptions::default())?;
    let k = located.record.location;
    let exact = -k / r;
    let dr = 1e-6 * r;
    let opts = ShiftOptions::default();
    let mut checks = Vec::new();
    for method in [ShiftMethod::GwsResidue, ShiftMethod::RatioForm] {
        let p = pole_shift(&located.function, k, "r_c", dr, method, &opts)?;
        checks.push(Check::new(
            format!("{method:?} dk/dr relative error"),
            (p.delta_k / dr - exact).norm() / exact.norm(),
            tol::ANALYTIC_LAW_REL,
        ));
    }
    let up = pole_shift(&located.function, k, "r_c", dr, ShiftMethod::Direct, &opts)?.delta_k;
    let down = pole_shift(&located.function, k, "r_c", -dr, ShiftMethod::Direct, &opts)?.delta_k;
    checks.push(Check::new(
        "Direct dk/dr relative error",
        ((up - down) / (2.0 * dr) - exact).norm() / exact.norm(),
        tol::ANALYTIC_LAW_REL,
    ));
    let g = model.function(Component::Denominator, k.re)?;
    let nb = g.param_value("n_b")?;
    let path: Vec<f64> = (0..46).map(|i| r * (0.8 + 0.01 * i as f64)).collect();
    let records = track(|rc, z| g.eval_with(z, &[nb, rc]), &path, k * r / path[0], SingularityKind::Pole, &TrackOptions::default())?;
    let kr = k * r;
    let drift = path
        .iter()
        .zip(&records)
        .map(|(rc, rec)| (rec.location * *rc - kr).norm() / kr.norm())
        .fold(0.0, f64::max);
    checks.push(Check::new("k r drift along the hyperbola", drift, tol::HYPERBOLA_REL));
    let trace = residue_of_trace(&located.function, k, &opts)?;
    checks.push(Check::new("Res tr L_k - i", (trace - Complex64::i()).norm(), tol::TRACE_RESIDUE_ABS));
    Ok(checks)
}

fn residue_checks(config: &Config) -> anyhow::Result<Vec<Check>> {
    let model = config.particle()?;
    let mut checks = Vec::new();
    for seed in &config.verify.pole_seeds {
        let located = model.locate(SingularityKind::Pole, Complex64::new(seed[0], seed[1]), &LocateOptions::default())?;
        let k = located.record.location;
        let trace = residue_of_trace(&located.function, k, &ShiftOptions::default())?;
        checks.push(Check::new(
            format!("Res tr L_k - i at {:.6e} {:+.6e}i", k.re, k.im),
            (trace - Complex64::i()).norm(),
            tol::TRACE_RESIDUE_ABS,
        ));
    }
    Ok(checks)
}

pub fn checks(config: &Config, suite: Suite) -> anyhow::Result<Vec<Check>> {
    match suite {
        Suite::Slab => slab_checks(config, false),
        Suite::Identities => slab_checks(config, true),
        Suite::AnalyticSphere => analytic_checks(),
        Suite::Residues => residue_checks(config),
    }
}

pub fn run(config: &Config, sink: &Sink, suite: Suite) -> anyhow::Result<()> {
    let checks = checks(config, suite)?;
    let name = serde_json::to_value(suite)?.as_str().unwrap_or("suite").to_string();
    for c in &checks {
        println!(
            "{} {}: {:.3e} (tolerance {:.1e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        );
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    sink.json(
        &format!("verify_{}", name.replace('-', "_")),
        &serde_json::json!({
            "suite": name,
            "rng_seed": config.rng_seed,
            "passed": failed == 0,
            "checks": checks,
        }),
    )?;
    if failed > 0 {
        return Err(CliError::Verification(format!("{failed} of {} checks in suite {name}", checks.len())).into());
    }
    Ok(())
}
