use std::ffi::{CStr, CString};
use std::ptr;

use lrinv_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    let n = unsafe { lrinv_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn ck_model() -> *mut LrinvModel {
    let mut m = ptr::null_mut();
    let name = CString::new("ck-reference").unwrap();
    assert_eq!(unsafe { lrinv_model_from_preset(name.as_ptr(), &mut m) }, LrinvStatus::Ok);
    assert!(!m.is_null());
    m
}

const GRID: LrinvGrid = LrinvGrid { q_min: -10.0, q_max: 10.0, n_points: 801, order: 8 };

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(lrinv_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn rho_matches_closed_form() {
    let m = ck_model();
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(lrinv_rho_new(m, 0.0, 2.0, &mut r), LrinvStatus::Ok);
        let (mut v, mut d) = (0.0, 0.0);
        assert_eq!(lrinv_rho_eval(r, 1.0, &mut v, &mut d), LrinvStatus::Ok);
        // Ω₁² = 1 + 1 + 2 + 1 = 5 for the reference model.
        let expect = 5f64.powf(-0.25) * (-1.0f64).exp();
        assert!((v - expect).abs() < 1e-14, "{v} vs {expect}");
        assert!((d + expect).abs() < 1e-14);
        assert_eq!(lrinv_rho_eval(r, 3.0, &mut v, ptr::null_mut()), LrinvStatus::OutOfWindow);
        assert!(last_error().contains("window"));
        let mut w = 0.0;
        assert_eq!(lrinv_model_omega_sq(m, 0.3, &mut w), LrinvStatus::Ok);
        assert_eq!(w, 4.0);
        lrinv_rho_free(r);
        lrinv_model_free(m);
    }
}

#[test]
fn null_and_bad_input() {
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(lrinv_model_from_json(ptr::null(), &mut m), LrinvStatus::NullPointer);
        assert!(last_error().contains("json"));
        let doc = CString::new(r#"{"mass":{"kind":"constant","value":1},"frequency":{"kind":"constant","value":1},"extra":0}"#).unwrap();
        assert_eq!(lrinv_model_from_json(doc.as_ptr(), &mut m), LrinvStatus::Config);
        assert!(last_error().contains("extra"));
        assert!(m.is_null());
        let mut f = ptr::null_mut();
        let bad = LrinvGrid { order: 3, ..GRID };
        assert_eq!(lrinv_frame_gaussian(bad, 0.0, 0.0, 1.0, 0.0, &mut f), LrinvStatus::InvalidArgument);
        assert_eq!(lrinv_frame_len(ptr::null()), 0);
        lrinv_frame_free(ptr::null_mut());
        lrinv_model_free(ptr::null_mut());
        lrinv_rho_free(ptr::null_mut());
    }
}

#[test]
fn frames_round_trip_and_propagate() {
    let m = ck_model();
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(lrinv_frame_gaussian(GRID, 0.0, 0.0, 0.5, 0.0, &mut g), LrinvStatus::Ok);
        assert!((lrinv_frame_norm_sq(g) - 1.0).abs() < 1e-12);
        let n = lrinv_frame_len(g);
        let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
        let mut short = vec![0.0; n - 1];
        assert_eq!(lrinv_frame_values(g, short.as_mut_ptr(), short.as_mut_ptr(), n - 1), LrinvStatus::BufferTooSmall);
        assert_eq!(lrinv_frame_values(g, re.as_mut_ptr(), im.as_mut_ptr(), n), LrinvStatus::Ok);
        let mut copy = ptr::null_mut();
        assert_eq!(lrinv_frame_from_values(GRID, 0.0, re.as_ptr(), im.as_ptr(), &mut copy), LrinvStatus::Ok);
        assert_eq!(lrinv_frame_norm_sq(copy), lrinv_frame_norm_sq(g));

        let mut out = ptr::null_mut();
        assert_eq!(lrinv_propagate(m, g, 0.1, 1e-3, &mut out), LrinvStatus::Ok);
        assert!((lrinv_frame_time(out) - 0.1).abs() < 1e-12);
        assert!((lrinv_frame_norm_sq(out) - 1.0).abs() < 1e-10);
        for p in [g, copy, out] {
            lrinv_frame_free(p);
        }
        lrinv_model_free(m);
    }
}

#[test]
fn eigen_frames() {
    let m = ck_model();
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(lrinv_rho_new(m, 0.0, 1.0, &mut r), LrinvStatus::Ok);
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(lrinv_frame_eigen(m, r, 1.0, LrinvParity::Even, GRID, 0.5, 0, &mut a), LrinvStatus::Ok);
        assert_eq!(lrinv_frame_eigen(m, r, 1.0, LrinvParity::Even, GRID, 0.5, 1, &mut b), LrinvStatus::Ok);
        // The phase factor has unit modulus, so both carry the same density.
        assert!((lrinv_frame_norm_sq(a) - lrinv_frame_norm_sq(b)).abs() < 1e-12 * lrinv_frame_norm_sq(a));
        assert_eq!(lrinv_frame_eigen(m, r, 1.0, LrinvParity::Odd, GRID, 1.5, 0, &mut a), LrinvStatus::OutOfWindow);
        lrinv_frame_free(b);
        lrinv_rho_free(r);
        lrinv_model_free(m);
    }
}
