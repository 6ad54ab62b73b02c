use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use relaxo_ffi::*;

fn last_error() -> String {
    let n = relaxo_last_error_length();
    let mut buf = vec![0 as c_char; n + 1];
    let full = unsafe { relaxo_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert_eq!(full, n);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

const MODEL_17: &str = include_str!("../../core/assets/model_17ppm.toml");

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(relaxo_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn model_handle_lifecycle() {
    let toml = CString::new(MODEL_17).unwrap();
    let mut m: *mut RelaxoModel = ptr::null_mut();
    assert_eq!(unsafe { relaxo_model_from_toml(toml.as_ptr(), &mut m) }, RelaxoStatus::Ok);
    assert!(!m.is_null());

    let (mut lo, mut hi) = (0.0, 0.0);
    assert_eq!(unsafe { relaxo_model_rate(m, 1e-3, 0, &mut lo) }, RelaxoStatus::Ok);
    assert_eq!(unsafe { relaxo_model_rate(m, 1.0, 0, &mut hi) }, RelaxoStatus::Ok);
    assert!(lo > hi && hi > 0.0);

    let mut k = RelaxoKnees {
        saturation_rate: 0.0,
        twice_saturation: 0.0,
        lowest_inflection: 0.0,
        analytic_bk1: 0.0,
        n_inflections: 0,
    };
    assert_eq!(unsafe { relaxo_model_knees(m, &mut k) }, RelaxoStatus::Ok);
    assert!(k.analytic_bk1 > 0.0);

    assert_eq!(unsafe { relaxo_model_rate(m, 1.0, 3, &mut hi) }, RelaxoStatus::Validation);
    assert!(last_error().contains("order"));
    unsafe { relaxo_model_free(m) };
    unsafe { relaxo_model_free(ptr::null_mut()) };
}

#[test]
fn p1_bath_matches_toml_model() {
    let toml = CString::new(MODEL_17).unwrap();
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(relaxo_model_from_toml(toml.as_ptr(), &mut a), RelaxoStatus::Ok);
        assert_eq!(relaxo_model_p1_bath(0.39, 5.022029200e5, &mut b), RelaxoStatus::Ok);
        for bf in [1e-4, 3e-3, 0.05, 2.0] {
            let (mut x, mut y) = (0.0, 0.0);
            relaxo_model_rate(a, bf, 1, &mut x);
            relaxo_model_rate(b, bf, 1, &mut y);
            assert_eq!(x, y);
        }
        relaxo_model_free(a);
        relaxo_model_free(b);
    }
}

#[test]
fn bad_inputs_map_to_status_codes() {
    let mut m: *mut RelaxoModel = ptr::null_mut();
    assert_eq!(unsafe { relaxo_model_from_toml(ptr::null(), &mut m) }, RelaxoStatus::NullPointer);
    assert!(m.is_null());
    assert!(last_error().contains("toml"));

    let junk = CString::new("model = 3").unwrap();
    assert_eq!(unsafe { relaxo_model_from_toml(junk.as_ptr(), &mut m) }, RelaxoStatus::Validation);
    assert!(m.is_null());

    let bad = [0xffu8, 0xfe, 0];
    assert_eq!(
        unsafe { relaxo_model_from_toml(bad.as_ptr().cast(), &mut m) },
        RelaxoStatus::InvalidUtf8
    );

    let mut x = 0.0;
    assert_eq!(unsafe { relaxo_reconstruct_r1(400.0, 372.0, 0.75, 10.0, &mut x) }, RelaxoStatus::Validation);
    assert_eq!(unsafe { relaxo_time_gain(0, 40, 5.0, 10.0, 4, &mut x) }, RelaxoStatus::Validation);
    assert_eq!(unsafe { relaxo_time_gain(40, 40, 5.0, 10.0, 4, ptr::null_mut()) }, RelaxoStatus::NullPointer);

    // success clears the message
    assert_eq!(unsafe { relaxo_dynamic_wait_time(100.0, 1.0, &mut x) }, RelaxoStatus::Ok);
    assert_eq!(relaxo_last_error_length(), 0);
}

#[test]
fn error_message_truncates() {
    let mut x = 0.0;
    unsafe { relaxo_reconstruct_r1(-1.0, 372.0, 0.75, 10.0, &mut x) };
    let n = relaxo_last_error_length();
    assert!(n > 4);
    let mut buf = [1 as c_char; 4];
    assert_eq!(unsafe { relaxo_last_error_message(buf.as_mut_ptr(), 4) }, n);
    assert_eq!(buf[3], 0);
}

#[test]
fn scalar_functions() {
    let mut x = 0.0;
    unsafe {
        assert_eq!(relaxo_dynamic_wait_time(100.0, 1.0, &mut x), RelaxoStatus::Ok);
        assert!((x - 100.0 * std::f64::consts::LN_2).abs() < 1e-12);

        let r1 = 1.0 / 120.0;
        let eps = 372.0 * (-(r1 * 30.0f64).powf(0.75)).exp();
        assert_eq!(relaxo_reconstruct_r1(eps, 372.0, 0.75, 30.0, &mut x), RelaxoStatus::Ok);
        assert!((x / r1 - 1.0).abs() < 1e-12);

        // N dt n(n+1)/2 / (N t_w + N_d dt n(n+1)/2)
        assert_eq!(relaxo_time_gain(40, 40, 5.0, 10.0, 4, &mut x), RelaxoStatus::Ok);
        let full = 40.0 * 5.0 * 820.0;
        assert!((x - full / (400.0 + 4.0 * 5.0 * 820.0)).abs() < 1e-12);

        assert_eq!(relaxo_tsallian(2.0, 0.01, 0.5, 1.5, 0.0, 0, &mut x), RelaxoStatus::Ok);
        assert!((x - 2.5).abs() < 1e-14);
        assert_eq!(relaxo_tsallian(2.0, 0.01, 0.0, 1.5, 0.01, 0, &mut x), RelaxoStatus::Ok);
        assert!((x - 1.0).abs() < 1e-12);

        assert_eq!(relaxo_poisson_distance_nm(17.0, &mut x), RelaxoStatus::Ok);
        assert!(x > 4.0 && x < 5.5);
        assert_eq!(relaxo_electron_linewidth_hz(17.0, &mut x), RelaxoStatus::Ok);
        assert!((x / 5.022029200e5 - 1.0).abs() < 1e-9);
    }
}

#[test]
fn carbon_moment_is_seeded() {
    let mut a = RelaxoEstimate { value: 0.0, sd: 0.0, n_realizations: 0 };
    let mut b = a;
    unsafe {
        assert_eq!(relaxo_carbon_second_moment(0.05, 2.0, 3, 11, &mut a), RelaxoStatus::Ok);
        assert_eq!(relaxo_carbon_second_moment(0.05, 2.0, 3, 11, &mut b), RelaxoStatus::Ok);
    }
    assert_eq!(a.n_realizations, 3);
    assert!(a.value > 0.0);
    assert_eq!(a.value.to_bits(), b.value.to_bits());
}

#[test]
fn decay_fit_recovers_noiseless_truth() {
    let t: Vec<f64> = (1..=40).map(|k| 10.0 * k as f64).collect();
    let y: Vec<f64> = t.iter().map(|t| 372.0 * (-(t / 120.0f64).powf(0.75)).exp()).collect();
    let mut f = RelaxoDecayFit {
        t1: 0.0,
        t1_err: 0.0,
        p: 0.0,
        p_err: 0.0,
        eps0: 0.0,
        eps0_err: 0.0,
        converged: false,
    };
    assert_eq!(unsafe { relaxo_fit_decay(t.as_ptr(), y.as_ptr(), t.len(), &mut f) }, RelaxoStatus::Ok);
    assert!(f.converged);
    assert!((f.t1 / 120.0 - 1.0).abs() < 1e-6);
    assert!((f.p - 0.75).abs() < 1e-6);
    assert!((f.eps0 / 372.0 - 1.0).abs() < 1e-6);
}

#[test]
fn profile_fit_fills_seven_values() {
    let truth = [0.08, 0.01, 1.5, 0.02, 0.3, 1.8, 2e-3];
    let b: Vec<f64> = (0..60).map(|i| 1e-4 * 10f64.powf(i as f64 * 4.8 / 59.0)).collect();
    let ts = |c1: f64, c2: f64, q: f64, x: f64| {
        c1 * (1.0 + (2f64.powf(q - 1.0) - 1.0) * (x / c2).powi(2)).powf(-1.0 / (q - 1.0))
    };
    let r: Vec<f64> = b
        .iter()
        .map(|&x| ts(truth[0], truth[1], truth[2], x) + ts(truth[3], truth[4], truth[5], x) + truth[6])
        .collect();
    let mut p = [0.0; RELAXO_PROFILE_PARAMS];
    let mut s = [0.0; RELAXO_PROFILE_PARAMS];
    let mut conv = false;
    let st = unsafe {
        relaxo_fit_profile(b.as_ptr(), r.as_ptr(), ptr::null(), b.len(), p.as_mut_ptr(), s.as_mut_ptr(), &mut conv)
    };
    assert_eq!(st, RelaxoStatus::Ok, "{}", last_error());
    assert!(conv);
    let fitted: f64 = b
        .iter()
        .zip(&r)
        .map(|(&x, &y)| ((ts(p[0], p[1], p[2], x) + ts(p[3], p[4], p[5], x) + p[6]) / y - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(fitted < 1e-4, "{fitted}");

    let st = unsafe {
        relaxo_fit_profile(b.as_ptr(), r.as_ptr(), ptr::null(), b.len(), ptr::null_mut(), s.as_mut_ptr(), &mut conv)
    };
    assert_eq!(st, RelaxoStatus::NullPointer);
}

#[test]
fn pipeline_runs_and_rejects_unknown_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("repro");
    let name = CString::new("paper-repro").unwrap();
    let path = CString::new(out.to_str().unwrap()).unwrap();
    let cfg = CString::new("[paper_repro.grid]\npoints = 50\n").unwrap();
    assert_eq!(
        unsafe { relaxo_run_pipeline(name.as_ptr(), cfg.as_ptr(), path.as_ptr()) },
        RelaxoStatus::Ok,
        "{}",
        last_error()
    );
    assert!(out.join("manifest.json").is_file());

    let bogus = CString::new("nope").unwrap();
    assert_eq!(
        unsafe { relaxo_run_pipeline(bogus.as_ptr(), ptr::null(), path.as_ptr()) },
        RelaxoStatus::Validation
    );
    assert!(last_error().contains("nope"));
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_declares_exports() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/relaxo.h")).unwrap();
    for sym in [
        "relaxo_version",
        "relaxo_last_error_message",
        "relaxo_model_from_toml",
        "relaxo_model_free",
        "relaxo_model_knees",
        "relaxo_fit_profile",
        "relaxo_run_pipeline",
        "typedef struct RelaxoModel RelaxoModel",
        "RELAXO_STATUS_PANIC = 5",
    ] {
        assert!(h.contains(sym), "missing {sym}");
    }
}

#[test]
fn c_program_links_against_header() {
    let lib = target_dir().join("librelaxo_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.is_file() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"#include "relaxo.h"
#include <stdio.h>
#include <string.h>
int main(void) {
    RelaxoModel *m = NULL;
    const char *toml = "model = \"physical\"\n[[channels]]\nkind = \"p1_bath\"\na2_khz2 = 0.39\nd_ee_hz = 502202.92\n";
    if (relaxo_model_from_toml(toml, &m) != RELAXO_STATUS_OK) return 1;
    double r = 0.0;
    if (relaxo_model_rate(m, 0.01, 0, &r) != RELAXO_STATUS_OK || !(r > 0.0)) return 2;
    relaxo_model_free(m);
    if (relaxo_model_from_toml(NULL, &m) != RELAXO_STATUS_NULL_POINTER) return 3;
    char buf[128];
    relaxo_last_error_message(buf, sizeof buf);
    if (strstr(buf, "null") == NULL) return 4;
    printf("%s %.6e\n", relaxo_version(), r);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert!(String::from_utf8_lossy(&run.stdout).starts_with(env!("CARGO_PKG_VERSION")));
}
