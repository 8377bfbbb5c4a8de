use poleshift::gws::ShiftOptions;
use poleshift::sweep::ContinuationOptions;
use poleshift::{run_sweep, HeatmapResult, LocateOptions, SweepSpec};
use serde::Serialize;
use serde_json::json;

use crate::config::Config;
use crate::error::CliError;
use crate::journal::Journal;
use crate::output::Sink;
use crate::svg::{heatmap, Heatmap, Marker};

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub i: usize,
    pub j: usize,
    pub r_c_m: f64,
    pub d_s_m: f64,
    pub k_re_per_m: Option<f64>,
    pub k_im_per_m: Option<f64>,
    pub q_factor: Option<f64>,
    pub eta_re: Option<f64>,
    pub eta_im: Option<f64>,
    pub residue_trace_re: Option<f64>,
    pub residue_trace_im: Option<f64>,
    pub substeps: usize,
    pub cross_check_gap: Option<f64>,
    pub failure: Option<String>,
}

pub const JOURNAL_NAME: &str = "sweep_journal.jsonl";

pub fn spec(config: &Config) -> anyhow::Result<SweepSpec> {
    let s = &config.sweep;
    let grid = s.grid()?;
    Ok(SweepSpec {
        template: config.particle()?,
        kind: s.target.kind(),
        seed: grid.seed,
        parameter: s.parameter.clone(),
        r_c: grid.r_c,
        d_s: grid.d_s,
        cross_check_fraction: s.cross_check_fraction,
        cross_check_delta: s.cross_check_delta,
        rng_seed: config.rng_seed,
        locate: LocateOptions::default(),
        shift: ShiftOptions::default(),
        continuation: ContinuationOptions::default(),
    })
}

fn rows(map: &HeatmapResult) -> Vec<SweepRow> {
    map.cells
        .iter()
        .map(|c| SweepRow {
            i: c.i,
            j: c.j,
            r_c_m: c.r_c,
            d_s_m: c.d_s,
            k_re_per_m: c.k.map(|k| k.re),
            k_im_per_m: c.k.map(|k| k.im),
            q_factor: c.q_factor,
            eta_re: c.eta.map(|e| e.re),
            eta_im: c.eta.map(|e| e.im),
            residue_trace_re: c.residue_of_trace.map(|r| r.re),
            residue_trace_im: c.residue_of_trace.map(|r| r.im),
            substeps: c.substeps,
            cross_check_gap: c.cross_check.as_ref().map(|x| x.relative_gap),
            failure: c.failure.clone(),
        })
        .collect()
}

fn map_svg(map: &HeatmapResult, title: &str, part: fn(num_complex::Complex64) -> f64, mark: Option<(f64, f64)>) -> String {
    let x: Vec<f64> = map.r_c.iter().map(|v| v * 1e9).collect();
    let y: Vec<f64> = map.d_s.iter().map(|v| v * 1e9).collect();
    let values: Vec<Vec<Option<f64>>> = (0..x.len())
        .map(|i| (0..y.len()).map(|j| map.cell(i, j).eta.map(part)).collect())
        .collect();
    let markers: Vec<Marker> = mark
        .map(|(r, d)| Marker {
            x: r * 1e9,
            y: d * 1e9,
            filled: true,
        })
        .into_iter()
        .collect();
    heatmap(&Heatmap {
        title,
        x_label: "core radius r_c (nm)",
        y_label: "shell thickness d_s (nm)",
        x: &x,
        y: &y,
        values: &values,
        markers: &markers,
    })
}

pub fn run(config: &Config, sink: &Sink) -> anyhow::Result<()> {
    let spec = spec(config)?;
    let (journal, cache) = Journal::open(&sink.path(JOURNAL_NAME), &config.fingerprint()?)?;
    if !cache.is_empty() {
        println!("resuming: {} cells already in {}", cache.len(), journal.path().display());
    }
    let map = run_sweep(&spec, &cache, |cell| journal.record(cell))?;
    let summary = map.summary();
    if summary.failed == summary.cells {
        return Err(CliError::Numerical(format!("all {} sweep cells failed", summary.cells)).into());
    }
    let table = sink.table("sweep", &rows(&map), json!({ "command": "sweep" }))?;
    let at = |a: &Option<poleshift::sweep::ArgmaxCell>| a.as_ref().map(|c| (c.r_c, c.d_s));
    sink.text(
        "sweep_abs_re_eta.svg",
        &map_svg(&map, "|Re eta|", |e| e.re.abs(), at(&summary.argmax_abs_re)),
    )?;
    sink.text(
        "sweep_abs_im_eta.svg",
        &map_svg(&map, "|Im eta|", |e| e.im.abs(), at(&summary.argmax_abs_im)),
    )?;
    sink.json(
        "sweep_summary",
        &json!({
            "kind": map.kind,
            "parameter": map.parameter,
            "r_c_m": { "start": spec.r_c.start, "stop": spec.r_c.stop, "steps": spec.r_c.steps },
            "d_s_m": { "start": spec.d_s.start, "stop": spec.d_s.stop, "steps": spec.d_s.steps },
            "anchor": map.anchor,
            "rng_seed": spec.rng_seed,
            "summary": summary,
        }),
    )?;
    println!("cells: {} (failed {})", summary.cells, summary.failed);
    for (name, a) in [("|Re eta|", &summary.argmax_abs_re), ("|Im eta|", &summary.argmax_abs_im)] {
        if let Some(a) = a {
            println!(
                "max {name} = {:.4} at r_c = {:.2} nm, d_s = {:.2} nm",
                a.value,
                a.r_c * 1e9,
                a.d_s * 1e9
            );
        }
    }
    println!("wrote {}", table.display());
    Ok(())
}
