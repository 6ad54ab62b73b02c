use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use relaxo::workbench::{ingest_dataset, Dataset, DatasetKind};

fn relaxo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaxo"))
        .current_dir(dir)
        .env_remove("RELAXO_OUTPUT_ROOT")
        .args(args)
        .output()
        .unwrap()
}

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

fn write_profile(path: &Path, scale: f64) {
    let mut s = String::from("B_T,R1_per_s,err\n");
    for i in 0..30 {
        let b = 1e-4 * (7e4f64).powf(i as f64 / 29.0);
        let r = scale * (0.08 / (1.0 + (b / 0.01).powi(2)) + 0.02 / (1.0 + (b / 0.3).powi(2)) + 2e-3);
        s += &format!("{b:.9e},{r:.9e},{:.9e}\n", 0.02 * r);
    }
    fs::write(path, s).unwrap();
}

#[test]
fn paper_repro_is_byte_identical_across_runs() {
    let t = tempfile::tempdir().unwrap();
    for o in ["a", "b"] {
        assert!(relaxo(t.path(), &["--out", o, "paper-repro", "--points", "60"]).status.success());
    }
    for f in ["model_curves.csv", "derived.csv"] {
        assert_eq!(fs::read(t.path().join("a").join(f)).unwrap(), fs::read(t.path().join("b").join(f)).unwrap());
    }
    let (mut a, mut b) = (manifest(&t.path().join("a")), manifest(&t.path().join("b")));
    a.as_object_mut().unwrap().remove("elapsed_s");
    b.as_object_mut().unwrap().remove("elapsed_s");
    assert_eq!(a, b);
}

#[test]
fn exit_codes() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("bad.toml"), "sed = 3\n").unwrap();
    assert_eq!(relaxo(t.path(), &["--config", "bad.toml", "paper-repro"]).status.code(), Some(2));

    let o = relaxo(t.path(), &["profile-fit", "--input", "missing.csv"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.csv"));

    let o = relaxo(t.path(), &["model-eval", "--model", &assets().join("model_17ppm.toml").to_string_lossy(), "--points", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!t.path().join("relaxo-out/model-eval").exists());
}

#[test]
fn wrong_unit_header_names_column() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("p.csv"), "B_mT,R1_per_s,err\n1,2,0.1\n2,1,0.1\n").unwrap();
    let o = relaxo(t.path(), &["--out", "o", "profile-fit", "--input", "p.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("B_mT"));
    assert!(!t.path().join("o").exists());
}

#[test]
fn empty_field_grid_is_validation_error() {
    let t = tempfile::tempdir().unwrap();
    fs::write(
        t.path().join("c.toml"),
        format!(
            "[acquisition]\nfieldmap = {:?}\n[acquisition.plan]\nstrategy = \"full_2D\"\nfields_t = []\ndecay_samples = 10\ntime_step_s = 1.0\nwait = {{ mode = \"dynamic\" }}\ncalibration_fields = 1\n",
            assets().join("demo_fieldmap.csv")
        ),
    )
    .unwrap();
    let o = relaxo(t.path(), &["--config", "c.toml", "--out", "o", "acq-sim"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn output_root_from_environment() {
    let t = tempfile::tempdir().unwrap();
    let root = t.path().join("root");
    let o = Command::new(env!("CARGO_BIN_EXE_relaxo"))
        .current_dir(t.path())
        .env("RELAXO_OUTPUT_ROOT", &root)
        .args(["paper-repro", "--points", "20"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(root.join("paper-repro").join("manifest.json").is_file());
    assert!(!t.path().join("relaxo-out").exists());
}

#[test]
fn input_digest_tracks_input_content() {
    let t = tempfile::tempdir().unwrap();
    let p = t.path().join("p.csv");
    write_profile(&p, 1.0);
    let run = |out: &str| {
        let o = relaxo(t.path(), &["--out", out, "profile-fit", "--input", "p.csv"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        manifest(&t.path().join(out))["inputs"][0]["sha256"].as_str().unwrap().to_string()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    write_profile(&p, 1.5);
    assert_ne!(a, run("c"));
}

#[test]
fn acquisition_export_reingests() {
    let t = tempfile::tempdir().unwrap();
    let cfg = assets().join("reference.toml");
    let o = relaxo(t.path(), &["--config", cfg.to_str().unwrap(), "--out", "acq", "acq-sim"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = t.path().join("acq");
    let Dataset::Profile(p) = ingest_dataset(&dir.join("profile.csv"), DatasetKind::Profile).unwrap() else {
        panic!("not a profile")
    };
    let exported = fs::read_to_string(dir.join("profile.csv")).unwrap();
    assert_eq!(p.fields.len(), exported.lines().count() - 1);
    let Dataset::Decays(d) = ingest_dataset(&dir.join("decays.csv"), DatasetKind::Decay).unwrap() else {
        panic!("not decays")
    };
    assert!(!d.is_empty());

    let o = relaxo(t.path(), &["--out", "fit", "decay-fit", "--input", "acq/decays.csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn demo_fieldmap_reaches_detection_field() {
    let Dataset::FieldMap(m) = ingest_dataset(&assets().join("demo_fieldmap.csv"), DatasetKind::Fieldmap).unwrap() else {
        panic!("not a field map")
    };
    let (_, hi) = m.range_mm();
    assert_eq!(hi, 928.0);
    assert!((m.field_at(hi).unwrap() - 7.0).abs() < 1e-12);
    assert!(m.is_monotone_increasing());
}

#[test]
fn units_report_lists_columns() {
    let t = tempfile::tempdir().unwrap();
    assert!(relaxo(t.path(), &["--out", "o", "--units-report", "paper-repro", "--points", "10"]).status.success());
    let u = fs::read_to_string(t.path().join("o/units.csv")).unwrap();
    assert!(u.lines().any(|l| l.starts_with("model_curves.csv,B_T")));
}
