use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::Config;
use crate::output::Sink;
use crate::svg::{line_chart, Series};

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRow {
    pub k_per_m: f64,
    pub sigma_ext_m2: f64,
    pub sigma_sca_m2: f64,
    pub sigma_abs_m2: f64,
}

pub fn compute(config: &Config) -> anyhow::Result<Vec<SpectrumRow>> {
    let s = &config.spectrum;
    if !(s.k_min > 0.0 && s.k_max > s.k_min) || s.steps < 2 {
        return Err(crate::error::CliError::Config("spectrum: need 0 < k_min < k_max and steps >= 2".into()).into());
    }
    let model = config.particle()?;
    let library = model.library().clone();
    (0..s.steps)
        .into_par_iter()
        .map(|i| {
            let k = s.k_min + (s.k_max - s.k_min) * i as f64 / (s.steps - 1) as f64;
            let cs = poleshift::cross_sections(&model.sphere, &library, k, s.nu_max)?;
            Ok(SpectrumRow {
                k_per_m: k,
                sigma_ext_m2: cs.extinction,
                sigma_sca_m2: cs.scattering,
                sigma_abs_m2: cs.absorption,
            })
        })
        .collect()
}

pub fn run(config: &Config, sink: &Sink) -> anyhow::Result<()> {
    let rows = compute(config)?;
    let table = sink.table("spectrum", &rows, json!({ "command": "spectrum" }))?;
    let pick = |f: fn(&SpectrumRow) -> f64| rows.iter().map(|r| (r.k_per_m, f(r))).collect::<Vec<_>>();
    let svg = line_chart(
        "Cross sections",
        "k (1/m)",
        "cross section (m^2)",
        &[
            Series {
                label: "extinction",
                points: pick(|r| r.sigma_ext_m2),
                dashed: false,
            },
            Series {
                label: "scattering",
                points: pick(|r| r.sigma_sca_m2),
                dashed: true,
            },
            Series {
                label: "absorption",
                points: pick(|r| r.sigma_abs_m2),
                dashed: false,
            },
        ],
    );
    sink.text("spectrum.svg", &svg)?;
    if let Some(peak) = rows.iter().max_by(|a, b| a.sigma_ext_m2.total_cmp(&b.sigma_ext_m2)) {
        println!("extinction peak at k = {:.4e} 1/m ({:.4e} m^2)", peak.k_per_m, peak.sigma_ext_m2);
    }
    println!("wrote {}", table.display());
    Ok(())
}
