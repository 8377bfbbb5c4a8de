use num_complex::Complex64;
use poleshift::sweep::{continue_geometry, ContinuationOptions};
use poleshift::{LayeredSphere, LocateOptions};
use serde::Serialize;
use serde_json::json;

use crate::config::Config;
use crate::error::CliError;
use crate::output::Sink;
use crate::svg::{line_chart, Series};

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRow {
    pub parameter_m: f64,
    pub k_re_per_m: f64,
    pub k_im_per_m: f64,
    pub q_factor: f64,
    pub substeps: usize,
}

pub fn compute(config: &Config) -> anyhow::Result<Vec<TrajectoryRow>> {
    let t = &config.trajectory;
    if t.steps < 2 || !(t.start_nm > 0.0 && t.stop_nm > 0.0) {
        return Err(CliError::Config("trajectory: need positive bounds and steps >= 2".into()).into());
    }
    let model = config.particle()?;
    let kind = t.target.kind();
    let radii = model.sphere.radii.clone();
    let layers = radii.len();
    let (r0, d0) = (radii[0], if layers == 2 { radii[1] - radii[0] } else { 0.0 });
    let values: Vec<f64> = (0..t.steps)
        .map(|i| (t.start_nm + (t.stop_nm - t.start_nm) * i as f64 / (t.steps - 1) as f64) * 1e-9)
        .collect();
    let geometry = |v: f64| -> anyhow::Result<(f64, f64)> {
        match (t.parameter.as_str(), layers) {
            ("r_c", 1) => Ok((v, 0.0)),
            ("r_c", 2) => Ok((v, d0)),
            ("d_s", 2) => Ok((r0, v)),
            _ => Err(CliError::Config(format!(
                "trajectory: parameter `{}` is not supported for a {layers}-layer particle",
                t.parameter
            ))
            .into()),
        }
    };
    let locate = LocateOptions {
        with_trace_residue: false,
        ..LocateOptions::default()
    };
    let continuation = ContinuationOptions::default();
    let mut k = Complex64::new(t.seed[0], t.seed[1]);
    let mut from = (r0, d0);
    let mut rows = Vec::with_capacity(values.len());
    for &v in &values {
        let to = geometry(v)?;
        let (found, substeps) = if layers == 2 {
            continue_geometry(&model, kind, from, to, k, &locate, &continuation)?
        } else {
            // A homogeneous sphere's singularities scale as 1/r; use that as the predictor.
            let sphere = LayeredSphere::new(vec![to.0], model.sphere.materials.clone(), model.sphere.background.clone())?;
            let predicted = k * from.0 / to.0;
            (model.with_sphere(sphere)?.locate(kind, predicted, &locate)?, 1)
        };
        k = found.record.location;
        from = to;
        rows.push(TrajectoryRow {
            parameter_m: v,
            k_re_per_m: k.re,
            k_im_per_m: k.im,
            q_factor: found.record.q_factor,
            substeps,
        });
    }
    Ok(rows)
}

pub fn run(config: &Config, sink: &Sink) -> anyhow::Result<()> {
    let rows = compute(config)?;
    let path = sink.table(
        "trajectory",
        &rows,
        json!({ "command": "trajectory", "parameter": config.trajectory.parameter }),
    )?;
    let svg = line_chart(
        &format!("Trajectory along {}", config.trajectory.parameter),
        "Re k (1/m)",
        "Im k (1/m)",
        &[Series {
            label: config.trajectory.parameter.as_str(),
            points: rows.iter().map(|r| (r.k_re_per_m, r.k_im_per_m)).collect(),
            dashed: false,
        }],
    );
    sink.text("trajectory.svg", &svg)?;
    if let (Some(a), Some(b)) = (rows.first(), rows.last()) {
        println!(
            "from {:.6e} {:+.6e}i to {:.6e} {:+.6e}i 1/m over {} samples",
            a.k_re_per_m,
            a.k_im_per_m,
            b.k_re_per_m,
            b.k_im_per_m,
            rows.len()
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}
