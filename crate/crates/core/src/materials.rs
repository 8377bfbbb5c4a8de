//! Complex refractive-index models and the material library.
//!
//! All models are evaluated as functions of the complex vacuum wavenumber `k`
//! (1/m). Under the `e^{-i omega t}` convention absorbing media have
//! `Im(n) > 0` at real wavenumbers.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `hbar * c` in eV m, for converting wavenumbers to photon energies.
pub const HBAR_C_EV_M: f64 = 1.973_269_804e-7;

const WATER_CSV: &str = include_str!("../data/water_hale_querry.csv");
const SILICA_JSON: &str = include_str!("../data/silica_malitson.json");
const GOLD_JSON: &str = include_str!("../data/gold_rakic_ld.json");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaterialError {
    #[error("unknown material `{0}`")]
    Unknown(String),
    #[error("material `{0}` is defined twice")]
    Duplicate(String),
    #[error("wavelength {lambda_um:.4} um outside validity range [{min}, {max}] um")]
    Range { lambda_um: f64, min: f64, max: f64 },
    #[error("unsupported evaluation: {0}")]
    Unsupported(String),
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error reading {path}: {message}")]
    Io { path: String, message: String },
}

/// How a dispersive model is evaluated at a complex wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationRule {
    /// Evaluate at the real wavenumber `Re(k)`; the result is constant in `Im(k)`.
    FrozenAtRealPart,
    /// Evaluate the closed-form model at the complex argument itself.
    AnalyticContinuation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SellmeierTerm {
    pub b: f64,
    pub c_um2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzOscillator {
    pub strength: f64,
    pub center_ev: f64,
    pub width_ev: f64,
}

/// Samples of `(lambda, n, kappa)` with monotone cubic interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulation {
    lambda_um: Vec<f64>,
    n: Vec<f64>,
    kappa: Vec<f64>,
    slope_n: Vec<f64>,
    slope_kappa: Vec<f64>,
}

impl Tabulation {
    pub fn new(lambda_um: Vec<f64>, n: Vec<f64>, kappa: Vec<f64>) -> Result<Self, MaterialError> {
        if lambda_um.len() < 2 || lambda_um.len() != n.len() || lambda_um.len() != kappa.len() {
            return Err(MaterialError::InvalidTable(
                "need at least two rows with lambda, n and k".into(),
            ));
        }
        if lambda_um.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(MaterialError::InvalidTable(
                "wavelengths must be strictly increasing".into(),
            ));
        }
        if lambda_um.iter().chain(&n).chain(&kappa).any(|v| !v.is_finite()) {
            return Err(MaterialError::InvalidTable("non-finite entry".into()));
        }
        let slope_n = pchip_slopes(&lambda_um, &n);
        let slope_kappa = pchip_slopes(&lambda_um, &kappa);
        Ok(Self {
            lambda_um,
            n,
            kappa,
            slope_n,
            slope_kappa,
        })
    }

    pub fn range_um(&self) -> (f64, f64) {
        (self.lambda_um[0], *self.lambda_um.last().unwrap())
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.lambda_um
            .iter()
            .zip(&self.n)
            .zip(&self.kappa)
            .map(|((l, n), k)| (*l, *n, *k))
    }

    /// Interpolated `n + i kappa` at a wavelength inside the table.
    pub fn index_at(&self, lambda_um: f64) -> Result<Complex64, MaterialError> {
        let (min, max) = self.range_um();
        if !(lambda_um >= min && lambda_um <= max) {
            return Err(MaterialError::Range { lambda_um, min, max });
        }
        let i = match self
            .lambda_um
            .binary_search_by(|v| v.partial_cmp(&lambda_um).unwrap())
        {
            Ok(i) => return Ok(Complex64::new(self.n[i], self.kappa[i])),
            Err(i) => i - 1,
        };
        let n = hermite(&self.lambda_um, &self.n, &self.slope_n, i, lambda_um);
        let kappa = hermite(&self.lambda_um, &self.kappa, &self.slope_kappa, i, lambda_um);
        Ok(Complex64::new(n, kappa))
    }
}

fn hermite(x: &[f64], y: &[f64], d: &[f64], i: usize, t: f64) -> f64 {
    let h = x[i + 1] - x[i];
    let s = (t - x[i]) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y[i] + h10 * h * d[i] + h01 * y[i + 1] + h11 * h * d[i + 1]
}

/// Fritsch-Carlson derivative estimates (the PCHIP rule): weighted harmonic
/// means in the interior, shape-preserving three-point formulas at the ends.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let m = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..m - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if m == 2 {
        return vec![delta[0], delta[0]];
    }
    let mut d = vec![0.0; m];
    for i in 1..m - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    let sign = |v: f64| {
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    };
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let mut s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if sign(s) != sign(d0) {
            s = 0.0;
        } else if sign(d0) != sign(d1) && s.abs() > 3.0 * d0.abs() {
            s = 3.0 * d0;
        }
        s
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[m - 1] = end(h[m - 2], h[m - 3], delta[m - 2], delta[m - 3]);
    d
}

/// A refractive-index model.
#[derive(Debug, Clone, PartialEq)]
pub enum DispersionModel {
    Constant {
        n: Complex64,
    },
    Sellmeier {
        terms: Vec<SellmeierTerm>,
        range_um: (f64, f64),
    },
    /// `eps = eps_inf - f0 wp^2 / (E (E + i G0)) + sum_j f_j wp^2 / (w_j^2 - E^2 - i E G_j)`
    DrudeLorentz {
        eps_inf: f64,
        plasma_ev: f64,
        drude_strength: f64,
        damping_ev: f64,
        oscillators: Vec<LorentzOscillator>,
        range_um: (f64, f64),
    },
    Tabulated(Tabulation),
}

/// Vacuum wavelength in micrometres for a real wavenumber in 1/m.
pub fn wavelength_um(k_real: f64) -> f64 {
    2.0 * PI / k_real * 1e6
}

/// Real vacuum wavenumber in 1/m for a wavelength in micrometres.
pub fn wavenumber_from_um(lambda_um: f64) -> f64 {
    2.0 * PI / (lambda_um * 1e-6)
}

fn check_range(k: Complex64, range: (f64, f64)) -> Result<f64, MaterialError> {
    let lambda_um = wavelength_um(k.re);
    if !(k.re > 0.0) || !(lambda_um >= range.0 && lambda_um <= range.1) {
        return Err(MaterialError::Range {
            lambda_um,
            min: range.0,
            max: range.1,
        });
    }
    Ok(lambda_um)
}

impl DispersionModel {
    pub fn validity_um(&self) -> Option<(f64, f64)> {
        match self {
            DispersionModel::Constant { .. } => None,
            DispersionModel::Sellmeier { range_um, .. } => Some(*range_um),
            DispersionModel::DrudeLorentz { range_um, .. } => Some(*range_um),
            DispersionModel::Tabulated(t) => Some(t.range_um()),
        }
    }

    pub fn supports_continuation(&self) -> bool {
        !matches!(self, DispersionModel::Tabulated(_))
    }

    fn sellmeier_eps(terms: &[SellmeierTerm], k: Complex64) -> Complex64 {
        let lambda = 2.0 * PI / k * 1e6;
        let l2 = lambda * lambda;
        terms
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, t| acc + t.b * l2 / (l2 - t.c_um2))
    }

    #[allow(clippy::too_many_arguments)]
    fn drude_lorentz_eps(
        eps_inf: f64,
        plasma_ev: f64,
        drude_strength: f64,
        damping_ev: f64,
        oscillators: &[LorentzOscillator],
        k: Complex64,
    ) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        let e = k * HBAR_C_EV_M;
        let wp2 = plasma_ev * plasma_ev;
        let mut eps = Complex64::new(eps_inf, 0.0) - drude_strength * wp2 / (e * (e + i * damping_ev));
        for o in oscillators {
            eps += o.strength * wp2 / (o.center_ev * o.center_ev - e * e - i * e * o.width_ev);
        }
        eps
    }
}

/// Complex refractive index of `model` at wavenumber `k`.
pub fn refractive_index(
    model: &DispersionModel,
    k: Complex64,
    rule: EvaluationRule,
) -> Result<Complex64, MaterialError> {
    match model {
        DispersionModel::Constant { n } => Ok(*n),
        DispersionModel::Tabulated(table) => {
            if rule == EvaluationRule::AnalyticContinuation {
                return Err(MaterialError::Unsupported(
                    "tabulated data cannot be continued to complex wavenumbers".into(),
                ));
            }
            let lambda = wavelength_um(k.re);
            if !(k.re > 0.0) {
                let (min, max) = table.range_um();
                return Err(MaterialError::Range { lambda_um: lambda, min, max });
            }
            table.index_at(lambda)
        }
        _ => Ok(permittivity(model, k, rule)?.sqrt()),
    }
}

/// Relative permittivity `eps = n^2` of `model` at wavenumber `k`.
pub fn permittivity(
    model: &DispersionModel,
    k: Complex64,
    rule: EvaluationRule,
) -> Result<Complex64, MaterialError> {
    let arg = |range| -> Result<Complex64, MaterialError> {
        check_range(k, range)?;
        Ok(match rule {
            EvaluationRule::FrozenAtRealPart => Complex64::new(k.re, 0.0),
            EvaluationRule::AnalyticContinuation => k,
        })
    };
    match model {
        DispersionModel::Constant { n } => Ok(n * n),
        DispersionModel::Tabulated(_) => {
            let n = refractive_index(model, k, rule)?;
            Ok(n * n)
        }
        DispersionModel::Sellmeier { terms, range_um } => {
            Ok(DispersionModel::sellmeier_eps(terms, arg(*range_um)?))
        }
        DispersionModel::DrudeLorentz {
            eps_inf,
            plasma_ev,
            drude_strength,
            damping_ev,
            oscillators,
            range_um,
        } => Ok(DispersionModel::drude_lorentz_eps(
            *eps_inf,
            *plasma_ev,
            *drude_strength,
            *damping_ev,
            oscillators,
            arg(*range_um)?,
        )),
    }
}

/// One library entry: the model plus a free-text source note.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialEntry {
    pub model: DispersionModel,
    pub source: String,
}

/// Named, immutable-after-load collection of material models.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaterialLibrary {
    entries: BTreeMap<String, MaterialEntry>,
}

#[derive(Deserialize)]
struct ModelFile {
    #[serde(rename = "type")]
    kind: String,
    params: serde_json::Value,
    #[serde(default)]
    source: String,
}

#[derive(Deserialize)]
struct ConstantParams {
    n_re: f64,
    #[serde(default)]
    n_im: f64,
}

#[derive(Deserialize)]
struct SellmeierParams {
    terms: Vec<SellmeierTerm>,
    range_um: (f64, f64),
}

#[derive(Deserialize)]
struct DrudeLorentzParams {
    eps_inf: f64,
    plasma_ev: f64,
    #[serde(default = "unit")]
    drude_strength: f64,
    damping_ev: f64,
    #[serde(default)]
    oscillators: Vec<LorentzOscillator>,
    range_um: (f64, f64),
}

fn unit() -> f64 {
    1.0
}

fn parse_err(e: impl std::fmt::Display) -> MaterialError {
    MaterialError::Parse(e.to_string())
}

/// Parses a model parameter file with schema `{type, params, source}`.
pub fn model_from_json(text: &str) -> Result<MaterialEntry, MaterialError> {
    let file: ModelFile = serde_json::from_str(text).map_err(parse_err)?;
    let model = match file.kind.as_str() {
        "constant" => {
            let p: ConstantParams = serde_json::from_value(file.params).map_err(parse_err)?;
            DispersionModel::Constant {
                n: Complex64::new(p.n_re, p.n_im),
            }
        }
        "sellmeier" => {
            let p: SellmeierParams = serde_json::from_value(file.params).map_err(parse_err)?;
            DispersionModel::Sellmeier {
                terms: p.terms,
                range_um: p.range_um,
            }
        }
        "drude_lorentz" => {
            let p: DrudeLorentzParams = serde_json::from_value(file.params).map_err(parse_err)?;
            DispersionModel::DrudeLorentz {
                eps_inf: p.eps_inf,
                plasma_ev: p.plasma_ev,
                drude_strength: p.drude_strength,
                damping_ev: p.damping_ev,
                oscillators: p.oscillators,
                range_um: p.range_um,
            }
        }
        other => return Err(MaterialError::Parse(format!("unknown model type `{other}`"))),
    };
    Ok(MaterialEntry {
        model,
        source: file.source,
    })
}

/// Parses a tabulation with header `lambda_um,n,k`.
pub fn table_from_csv(text: &str) -> Result<Tabulation, MaterialError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(parse_err)?.clone();
    let expected = ["lambda_um", "n", "k"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(MaterialError::Parse(format!(
            "expected header `lambda_um,n,k`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let (mut l, mut n, mut k) = (Vec::new(), Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(parse_err)?;
        let value = |i: usize| -> Result<f64, MaterialError> {
            record[i].parse::<f64>().map_err(parse_err)
        };
        l.push(value(0)?);
        n.push(value(1)?);
        k.push(value(2)?);
    }
    Tabulation::new(l, n, k)
}

impl MaterialLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Water (tabulated), fused silica (Sellmeier) and gold (Lorentz-Drude).
    pub fn builtin() -> Self {
        let mut lib = Self::new();
        let water = table_from_csv(WATER_CSV).expect("bundled water table is valid");
        lib.insert(
            "water",
            MaterialEntry {
                model: DispersionModel::Tabulated(water),
                source: "Water at 25 C after G. M. Hale and M. R. Querry, Appl. Opt. 12, 555 (1973)"
                    .into(),
            },
        )
        .expect("fresh library");
        lib.insert("silica", model_from_json(SILICA_JSON).expect("bundled silica model is valid"))
            .expect("fresh library");
        lib.insert("gold", model_from_json(GOLD_JSON).expect("bundled gold model is valid"))
            .expect("fresh library");
        lib
    }

    pub fn insert(&mut self, id: &str, entry: MaterialEntry) -> Result<(), MaterialError> {
        if self.entries.contains_key(id) {
            return Err(MaterialError::Duplicate(id.to_string()));
        }
        self.entries.insert(id.to_string(), entry);
        Ok(())
    }

    /// Adds or replaces an entry; used when a configuration overrides a built-in.
    pub fn replace(&mut self, id: &str, entry: MaterialEntry) {
        self.entries.insert(id.to_string(), entry);
    }

    /// Loads a `.csv` tabulation or a `.json` model file.
    pub fn load_file(path: &Path) -> Result<MaterialEntry, MaterialError> {
        let text = std::fs::read_to_string(path).map_err(|e| MaterialError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(MaterialEntry {
                model: DispersionModel::Tabulated(table_from_csv(&text)?),
                source: path.display().to_string(),
            }),
            Some("json") => model_from_json(&text),
            _ => Err(MaterialError::Parse(format!(
                "{}: expected a .csv or .json file",
                path.display()
            ))),
        }
    }

    pub fn get(&self, id: &str) -> Result<&MaterialEntry, MaterialError> {
        self.entries
            .get(id)
            .ok_or_else(|| MaterialError::Unknown(id.to_string()))
    }

    pub fn model(&self, id: &str) -> Result<&DispersionModel, MaterialError> {
        Ok(&self.get(id)?.model)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pchip_does_not_overshoot_a_step() {
        let t = Tabulation::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 0.0, 1.0, 1.0], vec![0.0; 4]).unwrap();
        for i in 0..=300 {
            let v = t.index_at(i as f64 / 100.0).unwrap().re;
            assert!((-1e-15..=1.0 + 1e-15).contains(&v), "overshoot {v}");
        }
    }

    #[test]
    fn rejects_unsorted_table() {
        assert!(Tabulation::new(vec![1.0, 1.0], vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn tabulated_rejects_continuation() {
        let lib = MaterialLibrary::builtin();
        let k = Complex64::new(wavenumber_from_um(0.66), -1e5);
        let err = refractive_index(lib.model("water").unwrap(), k, EvaluationRule::AnalyticContinuation);
        assert!(matches!(err, Err(MaterialError::Unsupported(_))));
    }

    #[test]
    fn csv_header_is_checked() {
        assert!(table_from_csv("wl,n,k\n0.5,1.3,0\n0.6,1.3,0\n").is_err());
    }
}
