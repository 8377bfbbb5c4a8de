use num_complex::Complex64;
use poleshift::{Component, LocateOptions, SingularityKind};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::Config;
use crate::error::CliError;
use crate::output::Sink;
use crate::svg::{heatmap, Heatmap, Marker};

#[derive(Debug, Clone, Serialize)]
pub struct MapRow {
    pub k_re_per_m: f64,
    pub k_im_per_m: f64,
    pub log10_abs_a: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularityRow {
    pub kind: SingularityKind,
    pub k_re_per_m: f64,
    pub k_im_per_m: f64,
    pub q_factor: f64,
    pub residue_trace_re: f64,
    pub residue_trace_im: f64,
}

pub struct Polemap {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    /// `value[ix][iy] = a(re[ix] + i im[iy])`.
    pub values: Vec<Vec<Complex64>>,
    pub singularities: Vec<SingularityRow>,
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Net phase winding of the four corner values, in whole turns.
fn corner_winding(v: [Complex64; 4]) -> i64 {
    let mut total = 0.0;
    for i in 0..4 {
        let a = v[i];
        let b = v[(i + 1) % 4];
        total += (b / a).arg();
    }
    (total / std::f64::consts::TAU).round() as i64
}

pub fn compute(config: &Config) -> anyhow::Result<Polemap> {
    let p = &config.polemap;
    if !(p.re_min > 0.0 && p.re_max > p.re_min && p.im_max > p.im_min) || p.re_steps < 2 || p.im_steps < 2 {
        return Err(CliError::Config("polemap: invalid grid bounds".into()).into());
    }
    let model = config.particle()?;
    let re = axis(p.re_min, p.re_max, p.re_steps);
    let im = axis(p.im_min, p.im_max, p.im_steps);
    // Frozen media are evaluated at each column's real part.
    let values = re
        .par_iter()
        .map(|&x| {
            let f = model.function(Component::Coefficient, x)?;
            im.iter().map(|&y| f.eval(Complex64::new(x, y))).collect::<poleshift::Result<Vec<_>>>()
        })
        .collect::<poleshift::Result<Vec<_>>>()?;

    let mut candidates = Vec::new();
    for ix in 0..re.len() - 1 {
        for iy in 0..im.len() - 1 {
            let corners = [
                values[ix][iy],
                values[ix + 1][iy],
                values[ix + 1][iy + 1],
                values[ix][iy + 1],
            ];
            if corners.iter().any(|z| !(z.norm() > 0.0 && z.norm().is_finite())) {
                continue;
            }
            let w = corner_winding(corners);
            if w != 0 {
                let centre = Complex64::new((re[ix] + re[ix + 1]) / 2.0, (im[iy] + im[iy + 1]) / 2.0);
                let kind = if w > 0 { SingularityKind::Zero } else { SingularityKind::Pole };
                candidates.push((kind, centre));
            }
        }
    }
    let opts = LocateOptions::default();
    let mut singularities: Vec<SingularityRow> = Vec::new();
    for (kind, centre) in candidates {
        let Ok(found) = model.locate(kind, centre, &opts) else {
            continue;
        };
        let k = found.record.location;
        let inside = k.re >= p.re_min && k.re <= p.re_max && k.im >= p.im_min && k.im <= p.im_max;
        let duplicate = singularities
            .iter()
            .any(|s| s.kind == kind && (Complex64::new(s.k_re_per_m, s.k_im_per_m) - k).norm() < 1e-6 * k.norm());
        if inside && !duplicate {
            let res = found.record.residue_of_trace.unwrap_or_default();
            singularities.push(SingularityRow {
                kind,
                k_re_per_m: k.re,
                k_im_per_m: k.im,
                q_factor: found.record.q_factor,
                residue_trace_re: res.re,
                residue_trace_im: res.im,
            });
        }
    }
    singularities.sort_by(|a, b| a.k_re_per_m.total_cmp(&b.k_re_per_m).then(a.k_im_per_m.total_cmp(&b.k_im_per_m)));
    Ok(Polemap {
        re,
        im,
        values,
        singularities,
    })
}

pub fn run(config: &Config, sink: &Sink) -> anyhow::Result<()> {
    let map = compute(config)?;
    let mut rows = Vec::with_capacity(map.re.len() * map.im.len());
    for (ix, &x) in map.re.iter().enumerate() {
        for (iy, &y) in map.im.iter().enumerate() {
            rows.push(MapRow {
                k_re_per_m: x,
                k_im_per_m: y,
                log10_abs_a: map.values[ix][iy].norm().log10(),
            });
        }
    }
    let grid = sink.table("polemap", &rows, json!({ "command": "polemap" }))?;
    let marks = sink.table("polemap_singularities", &map.singularities, json!({ "command": "polemap" }))?;
    let shaded: Vec<Vec<Option<f64>>> = map
        .values
        .iter()
        .map(|col| col.iter().map(|z| Some(z.norm().log10())).collect())
        .collect();
    let markers: Vec<Marker> = map
        .singularities
        .iter()
        .map(|s| Marker {
            x: s.k_re_per_m,
            y: s.k_im_per_m,
            filled: s.kind == SingularityKind::Pole,
        })
        .collect();
    let svg = heatmap(&Heatmap {
        title: "log10 |a| (circles: poles, squares: zeros)",
        x_label: "Re k (1/m)",
        y_label: "Im k (1/m)",
        x: &map.re,
        y: &map.im,
        values: &shaded,
        markers: &markers,
    });
    sink.text("polemap.svg", &svg)?;
    for s in &map.singularities {
        println!(
            "{:?} at {:.6e} {:+.6e}i 1/m (Q = {:.3})",
            s.kind, s.k_re_per_m, s.k_im_per_m, s.q_factor
        );
    }
    println!("wrote {} and {}", grid.display(), marks.display());
    Ok(())
}
