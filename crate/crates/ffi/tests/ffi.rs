use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use lacuna::witness::certify::shell_gap_range;
use lacuna::witness::FamilyKind;
use lacuna_ffi::*;

fn last_error() -> String {
    let p = lacuna_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn weight_round_trip() {
    let mut w = ptr::null_mut();
    unsafe {
        assert_eq!(lacuna_weight_power(0.5, 0.4, 0.7, 0.7, &mut w), LacunaStatus::Ok);
        let mut v = 0.0;
        assert_eq!(lacuna_weight_eval(w, 0.6, &mut v), LacunaStatus::Ok);
        assert!((v - 0.8).abs() < 1e-15);
        assert_eq!(lacuna_weight_eval(w, 1.0, &mut v), LacunaStatus::Domain);
        assert!(last_error().contains("1"));
        let mut pass = false;
        assert_eq!(lacuna_weight_verify_normality(w, 1000, &mut pass), LacunaStatus::Ok);
        assert!(pass);
        lacuna_weight_free(w);
    }

    let json = CString::new(r#"{"kind":"edge","c":0.75,"alpha":0.5,"beta":1.0,"delta0":0.5}"#).unwrap();
    let mut e = ptr::null_mut();
    unsafe {
        assert_eq!(lacuna_weight_from_json(json.as_ptr(), &mut e), LacunaStatus::Ok);
        let mut v = 0.0;
        assert_eq!(lacuna_weight_eval(e, 0.75, &mut v), LacunaStatus::Ok);
        assert!((v - 0.25f64.powf(0.75)).abs() < 1e-15);
        lacuna_weight_free(e);
    }
}

#[test]
fn errors_are_reported_with_codes() {
    let mut w = ptr::null_mut();
    unsafe {
        assert_eq!(lacuna_weight_power(0.5, 0.7, 0.6, 0.5, &mut w), LacunaStatus::InvalidArgument);
        assert!(w.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(lacuna_weight_power(0.5, 0.4, 0.6, 0.5, ptr::null_mut()), LacunaStatus::NullPointer);
        assert!(last_error().contains("null"));
        let bad = CString::new("{\"kind\":").unwrap();
        assert_eq!(lacuna_weight_from_json(bad.as_ptr(), &mut w), LacunaStatus::Parse);
        let mut v = 0.0;
        assert_eq!(lacuna_weight_eval(ptr::null(), 0.5, &mut v), LacunaStatus::NullPointer);
        lacuna_weight_free(ptr::null_mut());
        lacuna_separated_set_free(ptr::null_mut());
        lacuna_witness_free(ptr::null_mut());
        lacuna_string_free(ptr::null_mut());
    }
}

#[test]
fn separated_sets_and_constants() {
    let mut set = ptr::null_mut();
    unsafe {
        assert_eq!(lacuna_separated_set_build(2, 1.0, 3, 1000, &mut set), LacunaStatus::Ok);
        assert_eq!(lacuna_separated_set_len(set), 2);
        let mut a = [0.0; 4];
        let mut b = [0.0; 4];
        assert_eq!(lacuna_separated_set_point(set, 0, a.as_mut_ptr(), 4), LacunaStatus::Ok);
        assert_eq!(lacuna_separated_set_point(set, 1, b.as_mut_ptr(), 4), LacunaStatus::Ok);
        let re = a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
        let im = a[1] * b[0] - a[0] * b[1] + a[3] * b[2] - a[2] * b[3];
        assert!(re.hypot(im) < 1e-12);
        assert_eq!(lacuna_separated_set_point(set, 0, a.as_mut_ptr(), 3), LacunaStatus::BufferTooSmall);
        assert_eq!(lacuna_separated_set_point(set, 2, a.as_mut_ptr(), 4), LacunaStatus::InvalidArgument);
        lacuna_separated_set_free(set);

        let mut x = 0.0;
        assert_eq!(lacuna_zonal_sum_bound(2, 1.0 / 3.0, 100, &mut x), LacunaStatus::Ok);
        assert!((x - 1.0347932848290656).abs() < 1e-12);
        assert_eq!(lacuna_cauchy_constant(2, &mut x), LacunaStatus::Ok);
        assert_eq!(x, 4.0);
        assert_eq!(lacuna_cauchy_constant(1, &mut x), LacunaStatus::InvalidArgument);
        assert_eq!(lacuna_select_a(2, 0.01, LacunaMode::Strict, &mut x), LacunaStatus::Ok);
        assert_eq!(x, 0.3);
    }
}

#[test]
fn witness_bounds_through_handles() {
    let params = CString::new(
        r#"{"n":2,"a":1.0,"p":2,"m":2,"depth":1,"mode":"micro",
            "weight":{"kind":"power","gamma":0.5,"alpha":0.4,"beta":0.7,"delta0":0.7}}"#,
    )
    .unwrap();
    // The same family built directly gives the shell of g, j = 1, v = 0.
    let mut spec: lacuna::cli::WitnessSpec = serde_json::from_str(params.to_str().unwrap()).unwrap();
    let fam = lacuna::witness::build_witness_family(spec.resolve().unwrap(), Default::default(), 5).unwrap();
    let (lo, hi) = shell_gap_range(&fam, FamilyKind::G, 1, 0);
    let inside = 1.0 - (0.5 * (lo + hi)).exp();
    let mut w = ptr::null_mut();
    unsafe {
        assert_eq!(lacuna_witness_build(params.as_ptr(), 5, &mut w), LacunaStatus::Ok);
        assert_eq!(lacuna_witness_level_count(w), 8);
        let eta = [1.0, 0.0, 0.0, 0.0];
        let mut bound = f64::NAN;
        let status = lacuna_witness_certified_lower_bound(w, LacunaFamilyKind::G, eta.as_ptr(), 4, inside, 1, 0, &mut bound);
        assert_eq!(status, LacunaStatus::Ok, "{}", last_error());
        assert!(bound.is_finite());
        let status = lacuna_witness_certified_lower_bound(w, LacunaFamilyKind::G, eta.as_ptr(), 4, 0.1, 1, 0, &mut bound);
        assert_eq!(status, LacunaStatus::Domain);
        let status = lacuna_witness_certified_lower_bound(w, LacunaFamilyKind::G, eta.as_ptr(), 3, inside, 1, 0, &mut bound);
        assert_eq!(status, LacunaStatus::InvalidArgument);
        lacuna_witness_free(w);
    }
}

#[test]
fn run_json_matches_the_command_line_report() {
    let cfg = CString::new(
        r#"{"command":"weights-verify","seed":0,"weights":{"weight":{"kind":"power","gamma":0.5,"alpha":0.4,"beta":0.6,"delta0":0.7},"grid":1000}}"#,
    )
    .unwrap();
    let mut report = ptr::null_mut();
    let mut code = -1;
    unsafe {
        assert_eq!(lacuna_run_json(cfg.as_ptr(), &mut report, &mut code), LacunaStatus::Ok);
        assert_eq!(code, 0);
        let text = CStr::from_ptr(report).to_str().unwrap().to_owned();
        lacuna_string_free(report);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["verdict"], "pass");
        assert_eq!(v["config"]["weights"]["grid"], 1000);

        let bad = CString::new(r#"{"command":"weights-verify","wieghts":{}}"#).unwrap();
        assert_eq!(lacuna_run_json(bad.as_ptr(), &mut report, &mut code), LacunaStatus::InvalidArgument);
        assert!(last_error().contains("wieghts"));
    }
}

#[test]
fn version_is_the_package_version() {
    let v = unsafe { CStr::from_ptr(lacuna_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn target_dir() -> PathBuf {
    // .../target/<profile>/deps/ffi-<hash>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "lacuna.h"

int main(void) {
    LacunaWeight *w = NULL;
    double v = 0.0;
    if (lacuna_weight_power(0.5, 0.4, 0.7, 0.7, &w) != LACUNA_STATUS_OK) return 10;
    if (lacuna_weight_eval(w, 0.6, &v) != LACUNA_STATUS_OK) return 11;
    if (v < 0.79999999 || v > 0.80000001) return 12;
    if (lacuna_weight_eval(w, 2.0, &v) != LACUNA_STATUS_DOMAIN) return 13;
    if (lacuna_last_error() == NULL || strlen(lacuna_last_error()) == 0) return 14;
    lacuna_weight_free(w);
    printf("%s\n", lacuna_version());
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("lacuna.h").exists());
    let Some(cc) = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
    else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();

    let syntax = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .output()
        .unwrap();
    assert!(syntax.status.success(), "{}", String::from_utf8_lossy(&syntax.stderr));

    let lib = target_dir().join("liblacuna_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; link step skipped", lib.display());
        return;
    }
    let exe = tmp.path().join("main");
    let link = Command::new(cc)
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(link.status.success(), "{}", String::from_utf8_lossy(&link.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), env!("CARGO_PKG_VERSION"));
}
