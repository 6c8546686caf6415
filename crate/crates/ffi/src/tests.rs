use std::ffi::{CStr, CString};
use std::ptr;

use super::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(maslov_last_error()) }.to_string_lossy().into_owned()
}

fn model(json: &str) -> *mut MaslovModel {
    let json = CString::new(json).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { maslov_model_from_json(json.as_ptr(), &mut out) }, MaslovStatus::Ok);
    out
}

fn take_string(p: *mut c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { maslov_string_free(p) };
    s
}

#[test]
fn circle_has_maslov_one() {
    let flat = model(r#"{"kind":"flat-complex","params":{"n":1}}"#);
    let mut mesh = ptr::null_mut();
    unsafe {
        assert_eq!(maslov_mesh_circle(flat, 0.0, 0.0, 1.0, 1, 128, &mut mesh), MaslovStatus::Ok);
        assert_eq!(maslov_mesh_num_vertices(mesh), 128);
        assert_eq!(maslov_mesh_dim(mesh), 1);
        let mut report = ptr::null_mut();
        assert_eq!(maslov_decompose(mesh, 2, &mut report), MaslovStatus::Ok);
        assert_eq!(maslov_report_num_cycles(report), 1);
        let mut m = [0i64; 1];
        assert_eq!(maslov_report_maslov(report, m.as_mut_ptr(), 1), MaslovStatus::Ok);
        assert_eq!(m, [2]);
        let mut special = true;
        assert_eq!(maslov_report_is_special(report, &mut special), MaslovStatus::Ok);
        assert!(!special);
        let mut residual = f64::NAN;
        assert_eq!(maslov_mesh_connection_residual(mesh, &mut residual), MaslovStatus::Ok);
        assert!(residual < 1e-3);
        maslov_report_free(report);
        maslov_mesh_free(mesh);
        maslov_model_free(flat);
    }
}

#[test]
fn latitude_periods_and_json_round_trip() {
    let sphere = model(r#"{"kind":"round-sphere","params":{"radius":1.0}}"#);
    unsafe {
        let mut mesh = ptr::null_mut();
        assert_eq!(maslov_mesh_latitude(sphere, std::f64::consts::FRAC_PI_2, 256, &mut mesh), MaslovStatus::Ok);
        let mut json = ptr::null_mut();
        assert_eq!(maslov_mesh_to_json(mesh, &mut json), MaslovStatus::Ok);
        let text = CString::new(take_string(json)).unwrap();
        let mut again = ptr::null_mut();
        assert_eq!(maslov_mesh_from_json(text.as_ptr(), &mut again), MaslovStatus::Ok);

        let mut report = ptr::null_mut();
        assert_eq!(maslov_decompose(again, 1, &mut report), MaslovStatus::Ok);
        let mut bs = false;
        assert_eq!(maslov_report_is_bohr_sommerfeld(report, &mut bs), MaslovStatus::Ok);
        assert!(bs);
        let mut periods = [f64::NAN; 1];
        assert_eq!(maslov_report_periods(report, periods.as_mut_ptr(), 1), MaslovStatus::Ok);
        assert!(periods[0].abs() < 1e-6);
        let mut json = ptr::null_mut();
        assert_eq!(maslov_report_to_json(report, &mut json), MaslovStatus::Ok);
        assert!(take_string(json).contains("\"maslov\""));
        maslov_report_free(report);
        maslov_mesh_free(again);
        maslov_mesh_free(mesh);
        maslov_model_free(sphere);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut out = ptr::null_mut();
        let bad = CString::new(r#"{"kind":"round-sphere","params":{"radius":-1}}"#).unwrap();
        assert_eq!(maslov_model_from_json(bad.as_ptr(), &mut out), MaslovStatus::InvalidInput);
        assert!(out.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(maslov_model_from_json(ptr::null(), &mut out), MaslovStatus::NullPointer);
        assert_eq!(last_error(), "json is null");

        let invalid = [0xffu8, 0];
        assert_eq!(maslov_model_from_json(invalid.as_ptr().cast(), &mut out), MaslovStatus::InvalidUtf8);

        let flat = model(r#"{"kind":"flat-complex","params":{"n":1}}"#);
        let mut mesh = ptr::null_mut();
        assert_eq!(maslov_mesh_circle(flat, 0.0, 0.0, 1.0, 1, 64, &mut mesh), MaslovStatus::Ok);
        assert_eq!(last_error(), "");
        let mut report = ptr::null_mut();
        assert_eq!(maslov_decompose(mesh, 1, &mut report), MaslovStatus::Ok);
        let mut empty: [i64; 0] = [];
        assert_eq!(maslov_report_maslov(report, empty.as_mut_ptr(), 0), MaslovStatus::BufferTooSmall);
        let mut torus = ptr::null_mut();
        assert_eq!(maslov_mesh_product_torus(flat, 1.0, 0.7, 8, 8, &mut torus), MaslovStatus::InvalidInput);
        assert_eq!(maslov_mesh_num_vertices(ptr::null()), 0);
        maslov_report_free(report);
        maslov_mesh_free(mesh);
        maslov_model_free(flat);
        maslov_mesh_free(ptr::null_mut());
    }
}

#[test]
fn scenarios_run_through_the_boundary() {
    let name = CString::new("elliptic-line").unwrap();
    let config = CString::new(r#"{"n": 32}"#).unwrap();
    let (mut json, mut passed) = (ptr::null_mut(), false);
    unsafe {
        assert_eq!(maslov_run_scenario(name.as_ptr(), config.as_ptr(), &mut json, &mut passed), MaslovStatus::Ok);
    }
    assert!(passed);
    let report: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(report["scenario"], "elliptic-line");

    let unknown = CString::new("nowhere").unwrap();
    let status = unsafe { maslov_run_scenario(unknown.as_ptr(), ptr::null(), &mut json, &mut passed) };
    assert_eq!(status, MaslovStatus::NotApplicable);
    assert!(last_error().contains("flat-circle"));
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/maslov.h");
    for symbol in [
        "maslov_last_error",
        "maslov_string_free",
        "maslov_model_from_json",
        "maslov_mesh_circle",
        "maslov_mesh_connection_residual",
        "maslov_decompose",
        "maslov_report_maslov",
        "maslov_run_scenario",
        "typedef struct MaslovMesh MaslovMesh",
        "MASLOV_STATUS_HALF_INTEGER_BOUNDARY = 6",
    ] {
        assert!(header.contains(symbol), "{symbol} missing from the header");
    }
}
