use poleshift::gws::{pole_shift, ShiftMethod, ShiftOptions};
use poleshift::LocateOptions;
use serde::Serialize;
use serde_json::json;

use crate::config::Config;
use crate::output::Sink;

#[derive(Debug, Clone, Serialize)]
pub struct ShiftRow {
    pub method: ShiftMethod,
    pub delta_k_re_per_m: f64,
    pub delta_k_im_per_m: f64,
    pub error_estimate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairRow {
    pub first: ShiftMethod,
    pub second: ShiftMethod,
    pub relative_difference: f64,
}

pub struct ShiftTable {
    pub k: num_complex::Complex64,
    pub rows: Vec<ShiftRow>,
    pub pairs: Vec<PairRow>,
}

pub fn compute(config: &Config) -> anyhow::Result<ShiftTable> {
    let s = &config.shift;
    let model = config.particle()?;
    let located = model.locate(
        s.target.kind(),
        num_complex::Complex64::new(s.seed[0], s.seed[1]),
        &LocateOptions::default(),
    )?;
    let k = located.record.location;
    let opts = ShiftOptions::default();
    let methods = [ShiftMethod::GwsResidue, ShiftMethod::RatioForm, ShiftMethod::Direct];
    let shifts = methods
        .iter()
        .map(|&m| pole_shift(&located.function, k, &s.parameter, s.delta, m, &opts))
        .collect::<poleshift::Result<Vec<_>>>()?;
    let rows = shifts
        .iter()
        .map(|p| ShiftRow {
            method: p.method,
            delta_k_re_per_m: p.delta_k.re,
            delta_k_im_per_m: p.delta_k.im,
            error_estimate: p.error_estimate,
        })
        .collect();
    let mut pairs = Vec::new();
    for a in 0..shifts.len() {
        for b in a + 1..shifts.len() {
            let (x, y) = (shifts[a].delta_k, shifts[b].delta_k);
            let scale = x.norm().max(y.norm());
            pairs.push(PairRow {
                first: shifts[a].method,
                second: shifts[b].method,
                relative_difference: if scale == 0.0 { 0.0 } else { (x - y).norm() / scale },
            });
        }
    }
    Ok(ShiftTable { k, rows, pairs })
}

pub fn run(config: &Config, sink: &Sink) -> anyhow::Result<()> {
    let t = compute(config)?;
    let meta = json!({
        "command": "shift",
        "k_re_per_m": t.k.re,
        "k_im_per_m": t.k.im,
        "parameter": config.shift.parameter,
        "delta": config.shift.delta,
        "pairs": t.pairs,
    });
    let path = sink.table("shift", &t.rows, meta)?;
    if sink.format == crate::output::Format::Csv {
        sink.table("shift_pairs", &t.pairs, json!({}))?;
    }
    println!("singularity at {:.8e} {:+.8e}i 1/m", t.k.re, t.k.im);
    println!("{:<12} {:>16} {:>16} {:>12}", "method", "Re dk (1/m)", "Im dk (1/m)", "estimate");
    for r in &t.rows {
        let name = serde_json::to_value(r.method)?.as_str().unwrap_or_default().to_string();
        println!(
            "{:<12} {:>16.8e} {:>16.8e} {:>12.3e}",
            name, r.delta_k_re_per_m, r.delta_k_im_per_m, r.error_estimate
        );
    }
    for p in &t.pairs {
        println!("{:?} vs {:?}: relative difference {:.3e}", p.first, p.second, p.relative_difference);
    }
    println!("wrote {}", path.display());
    Ok(())
}
