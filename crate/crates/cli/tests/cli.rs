use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn poleshift(dir: &Path, config: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_poleshift"));
    if let Some(text) = config {
        let path = dir.join("run.toml");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.arg("--out").arg(dir.join("out")).args(args).output().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

const DIELECTRIC: &str = r#"
[materials]
high = { n_re = 2.5 }
shell = { n_re = 1.5 }
vacuum = { n_re = 1.0 }

[particle]
radii_nm = [100.0, 110.0]
materials = ["high", "shell"]
background = "vacuum"
"#;

#[test]
fn spectrum_columns_balance_and_peak_near_lspr() {
    let dir = TempDir::new().unwrap();
    let out = poleshift(dir.path(), None, &["spectrum"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(dir.path(), "spectrum.csv");
    assert_eq!(text.lines().next().unwrap(), "k_per_m,sigma_ext_m2,sigma_sca_m2,sigma_abs_m2");
    let data = rows(&text);
    assert_eq!(data.len(), 181);
    for r in &data {
        assert!((r[1] - r[2] - r[3]).abs() <= 1e-10 * r[1]);
    }
    let peak = data.iter().max_by(|a, b| a[1].total_cmp(&b[1])).unwrap()[0];
    assert!((peak - 0.7e7).abs() < 0.05 * 0.7e7, "{peak}");
    assert!(read(dir.path(), "spectrum.svg").contains("<svg"));
}

#[test]
fn index_matched_particle_has_zero_cross_sections() {
    let dir = TempDir::new().unwrap();
    let config = r#"
[materials]
same = { n_re = 1.33 }
[particle]
radii_nm = [60.0, 70.0]
materials = ["same", "same"]
background = "same"
[spectrum]
steps = 11
"#;
    assert!(poleshift(dir.path(), Some(config), &["spectrum"]).status.success());
    for r in rows(&read(dir.path(), "spectrum.csv")) {
        assert!(r[1..].iter().all(|v| v.abs() < 1e-30), "{r:?}");
    }
}

#[test]
fn json_output_carries_schema_version() {
    let dir = TempDir::new().unwrap();
    let out = poleshift(dir.path(), Some("[spectrum]\nsteps = 5\n"), &["--format", "json", "spectrum"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&read(dir.path(), "spectrum.json")).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 5);
    assert!(doc["rows"][0]["sigma_ext_m2"].is_number());
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let config = "[spectrum]\nsteps = 21\n";
    assert!(poleshift(a.path(), Some(config), &["spectrum"]).status.success());
    assert!(poleshift(b.path(), Some(config), &["--threads", "2", "spectrum"]).status.success());
    for name in ["spectrum.csv", "spectrum.svg"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
}

#[test]
fn polemap_marks_the_lspr_pole() {
    let dir = TempDir::new().unwrap();
    let config = "[polemap]\nre_steps = 41\nim_steps = 21\n";
    let out = poleshift(dir.path(), Some(config), &["polemap"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let marks = read(dir.path(), "polemap_singularities.csv");
    let pole = marks
        .lines()
        .find(|l| l.starts_with("pole,"))
        .map(|l| l.split(',').skip(1).take(2).map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .unwrap();
    assert!((pole[0] - 0.71e7).abs() < 0.04e7 && (pole[1] + 0.07e7).abs() < 0.015e7, "{pole:?}");
    assert!(marks.lines().any(|l| l.starts_with("zero,")));
}

#[test]
fn polemap_below_all_features_has_no_markers() {
    let dir = TempDir::new().unwrap();
    let config = "[polemap]\nre_min = 1.0e6\nre_max = 2.0e6\nre_steps = 11\nim_min = -1.0e5\nim_max = 0.0\nim_steps = 5\n";
    assert!(poleshift(dir.path(), Some(config), &["polemap"]).status.success());
    assert_eq!(read(dir.path(), "polemap_singularities.csv").lines().count(), 0);
}

#[test]
fn trivial_sweep_succeeds_and_resumes_from_journal() {
    let dir = TempDir::new().unwrap();
    let config = format!(
        "{DIELECTRIC}\n[sweep]\nseed = [1.7e7, -0.2e7]\nr_c_nm = [95.0, 100.0]\nr_c_steps = 2\nd_s_nm = [5.0, 10.0]\nd_s_steps = 2\ncross_check_fraction = 1.0\n"
    );
    let out = poleshift(dir.path(), Some(&config), &["sweep"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "sweep.csv");
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(',')), "{csv}");
    let summary: serde_json::Value = serde_json::from_str(&read(dir.path(), "sweep_summary.json")).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["summary"]["failed"], 0);
    assert_eq!(summary["summary"]["cross_checked"], 4);

    // Drop the last cell and tear the tail, as an interrupted run would.
    let journal = dir.path().join("out").join("sweep_journal.jsonl");
    let text = std::fs::read_to_string(&journal).unwrap();
    let kept: Vec<&str> = text.lines().take(4).collect();
    std::fs::write(&journal, format!("{}\n{{\"i\":1,", kept.join("\n"))).unwrap();
    let out = poleshift(dir.path(), Some(&config), &["sweep"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("resuming: 3 cells"));
    assert_eq!(read(dir.path(), "sweep.csv"), csv);
}

#[test]
fn shift_methods_agree_on_the_radius_law() {
    let dir = TempDir::new().unwrap();
    let config = r#"
[materials]
high = { n_re = 2.5 }
vacuum = { n_re = 1.0 }
[particle]
radii_nm = [100.0]
materials = ["high"]
background = "vacuum"
[shift]
seed = [1.764e7, -0.243e7]
parameter = "r_c"
delta = 1e-16
"#;
    let out = poleshift(dir.path(), Some(config), &["--format", "json", "shift"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&read(dir.path(), "shift.json")).unwrap();
    let k = (doc["k_re_per_m"].as_f64().unwrap(), doc["k_im_per_m"].as_f64().unwrap());
    let law = (-k.0 * 1e-16 / 100e-9, -k.1 * 1e-16 / 100e-9);
    for row in doc["rows"].as_array().unwrap() {
        let re = row["delta_k_re_per_m"].as_f64().unwrap();
        let im = row["delta_k_im_per_m"].as_f64().unwrap();
        let err = ((re - law.0).powi(2) + (im - law.1).powi(2)).sqrt() / law.0.hypot(law.1);
        assert!(err < 1e-5, "{row}: {err}");
    }
}

#[test]
fn zero_perturbation_gives_zero_shifts() {
    let dir = TempDir::new().unwrap();
    let out = poleshift(dir.path(), Some("[shift]\ndelta = 0.0\n"), &["shift"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for r in read(dir.path(), "shift.csv").lines().skip(1) {
        let v: Vec<&str> = r.split(',').collect();
        assert_eq!(v[1].parse::<f64>().unwrap(), 0.0);
        assert_eq!(v[2].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn verify_suites_pass() {
    let dir = TempDir::new().unwrap();
    for suite in ["slab", "identities", "analytic-sphere", "residues"] {
        let out = poleshift(dir.path(), Some("[verify]\nrandom_slabs = 20\n"), &["verify", suite]);
        assert!(out.status.success(), "{suite}: {}", String::from_utf8_lossy(&out.stdout));
    }
    let doc: serde_json::Value = serde_json::from_str(&read(dir.path(), "verify_slab.json")).unwrap();
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["schema_version"], 1);
}

#[test]
fn verify_accepts_a_slab_file() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("slab.json"),
        r#"[{"thickness_m": 1.2e-7, "eps_re": 6.0, "eps_im": 0.1}, {"thickness_m": 8e-8, "material_id": "silica"}]"#,
    )
    .unwrap();
    let config = "[verify]\nrandom_slabs = 0\nslab_file = \"slab.json\"\n";
    let out = poleshift(dir.path(), Some(config), &["verify", "identities"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn trajectory_follows_the_hyperbola() {
    let dir = TempDir::new().unwrap();
    let config = r#"
[materials]
high = { n_re = 2.5 }
vacuum = { n_re = 1.0 }
[particle]
radii_nm = [100.0]
materials = ["high"]
background = "vacuum"
[trajectory]
seed = [1.764e7, -0.243e7]
start_nm = 100.0
stop_nm = 80.0
steps = 11
"#;
    assert!(poleshift(dir.path(), Some(config), &["trajectory"]).status.success());
    let data = rows(&read(dir.path(), "trajectory.csv"));
    let kr0 = (data[0][1] * data[0][0], data[0][2] * data[0][0]);
    for r in &data {
        assert!((r[1] * r[0] - kr0.0).abs() < 1e-9 * kr0.0);
        assert!((r[2] * r[0] - kr0.1).abs() < 1e-9 * kr0.0);
    }
}

#[test]
fn configuration_errors_exit_with_status_two() {
    let dir = TempDir::new().unwrap();
    let bad = [
        "[spectrum]\nsteps = 1\n",
        "unknown_key = 3\n",
        "[particle]\nmaterials = [\"silica\", \"unobtainium\"]\n",
        "[materials]\nx = \"missing.json\"\n",
    ];
    for config in bad {
        let out = poleshift(dir.path(), Some(config), &["spectrum"]);
        assert_eq!(out.status.code(), Some(2), "{config}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = poleshift(dir.path(), Some("[sweep]\nr_c_steps = 1\n"), &["sweep"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_status_three() {
    let dir = TempDir::new().unwrap();
    // No pole of the electric dipole lies near this seed on the real axis.
    let out = poleshift(dir.path(), Some("[verify]\npole_seeds = [[3.0e6, 1.0e6]]\n"), &["verify", "residues"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
