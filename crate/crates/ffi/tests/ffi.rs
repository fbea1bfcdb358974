use std::ffi::{c_char, CString};
use std::ptr;

use fbcsf_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0u8; 512];
    let n = unsafe { fbcsf_last_error(buf.as_mut_ptr() as *mut c_char, buf.len()) };
    buf.truncate(n.min(511));
    String::from_utf8(buf).unwrap()
}

fn preset(name: &str, a: f64, b: f64) -> *mut FbcsfSurface {
    let name = CString::new(name).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { fbcsf_surface_preset(name.as_ptr(), a, b, &mut s) }, FbcsfStatus::Ok);
    s
}

#[test]
fn flat_diameter_spectrum_through_the_c_abi() {
    let s = preset("flat-disk", 0.0, 0.0);
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { fbcsf_chord_line(s, std::f64::consts::FRAC_PI_2, 0.0, 256, &mut c) }, FbcsfStatus::Ok);
    let mut len = 0.0;
    assert_eq!(unsafe { fbcsf_chord_length(c, &mut len) }, FbcsfStatus::Ok);
    assert!((len - 2.0).abs() < 1e-12);
    let mut lam = [0.0; 3];
    let (mut index, mut nullity) = (0usize, 0usize);
    assert_eq!(unsafe { fbcsf_robin_spectrum(s, c, 3, lam.as_mut_ptr(), &mut index, &mut nullity) }, FbcsfStatus::Ok);
    // μ tanh μ = 1 at μ = 1.19967864...
    let mu: f64 = 1.199_678_640_257_734;
    assert!((mu * mu.tanh() - 1.0).abs() < 1e-12);
    assert!((lam[0] + mu * mu).abs() < 1e-4, "{lam:?}");
    assert!(lam[1].abs() < 1e-6);
    assert_eq!((index, nullity), (1, 1));
    unsafe {
        fbcsf_chord_free(c);
        fbcsf_surface_free(s);
    }
}

#[test]
fn samples_round_trip_and_report_capacity() {
    let s = preset("flat-ellipse", 2.0, 1.0);
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { fbcsf_chord_line(s, 0.0, 0.5, 64, &mut c) }, FbcsfStatus::Ok);
    let mut count = 0;
    let status = unsafe { fbcsf_chord_samples(c, ptr::null_mut(), ptr::null_mut(), 0, &mut count) };
    assert_eq!(status, FbcsfStatus::BufferTooSmall);
    assert_eq!(count, 65);
    let (mut xs, mut ys) = (vec![0.0; count], vec![0.0; count]);
    assert_eq!(unsafe { fbcsf_chord_samples(c, xs.as_mut_ptr(), ys.as_mut_ptr(), count, &mut count) }, FbcsfStatus::Ok);
    assert!(xs.iter().all(|x| (x - 0.5).abs() < 1e-12));
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { fbcsf_chord_from_points(s, xs.as_ptr(), ys.as_ptr(), count, &mut d) }, FbcsfStatus::Ok);
    let (mut l1, mut l2) = (0.0, 0.0);
    unsafe {
        fbcsf_chord_length(c, &mut l1);
        fbcsf_chord_length(d, &mut l2);
    }
    // x = 1/2 on x²/4 + y² = 1 spans 2√(1 − 1/16)
    assert!((l1 - 2.0 * (15.0f64 / 16.0).sqrt()).abs() < 1e-9);
    assert!((l1 - l2).abs() < 1e-9);
    unsafe {
        fbcsf_chord_free(c);
        fbcsf_chord_free(d);
        fbcsf_surface_free(s);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let name = CString::new("torus").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { fbcsf_surface_preset(name.as_ptr(), 0.0, 0.0, &mut s) }, FbcsfStatus::Config);
    assert!(last_error().contains("torus"));
    assert_eq!(unsafe { fbcsf_chord_length(ptr::null(), &mut 0.0) }, FbcsfStatus::NullPointer);
    assert!(last_error().contains("chord"));
    let s = preset("flat-disk", 0.0, 0.0);
    let mut c = ptr::null_mut();
    // the line misses the unit disk
    assert_eq!(unsafe { fbcsf_chord_line(s, 0.0, 1.5, 64, &mut c) }, FbcsfStatus::Geometry);
    assert!(c.is_null());
    let mut k = 0.0;
    assert_eq!(unsafe { fbcsf_surface_gaussian_curvature(s, 2.0, 0.0, &mut k) }, FbcsfStatus::Domain);
    unsafe { fbcsf_surface_free(s) };
}

#[test]
fn short_arc_flows_to_a_half_point() {
    let s = preset("flat-disk", 0.0, 0.0);
    // circle of radius 0.3 centred at (√1.09, 0) meets the unit circle orthogonally
    let (r, c0) = (0.3f64, (1.09f64).sqrt());
    let half = (1.0 / r).atan();
    let n = 129;
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|i| {
            let a = std::f64::consts::PI - half + 2.0 * half * i as f64 / (n - 1) as f64;
            (c0 + r * a.cos(), r * a.sin())
        })
        .unzip();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { fbcsf_chord_from_points(s, xs.as_ptr(), ys.as_ptr(), n, &mut c) }, FbcsfStatus::Ok, "{}", last_error());
    let mut outcome = FbcsfOutcome::Timeout;
    let mut fl = 0.0;
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { fbcsf_flow(s, c, 10.0, 64, &mut outcome, &mut fl, &mut g) }, FbcsfStatus::Ok);
    assert_eq!(outcome, FbcsfOutcome::HalfPoint);
    assert!(g.is_null() && fl < 0.01);
    unsafe {
        fbcsf_chord_free(c);
        fbcsf_surface_free(s);
    }
}

#[test]
fn runs_a_config_document() {
    let dir = tempfile::tempdir().unwrap();
    let doc = format!("task = \"oracle\"\noutput = {:?}\n[surface]\npreset = \"flat-disk\"\n", dir.path().join("run").to_str().unwrap());
    let doc = CString::new(doc).unwrap();
    let mut code = -1;
    assert_eq!(unsafe { fbcsf_run_config(doc.as_ptr(), &mut code) }, FbcsfStatus::Ok, "{}", last_error());
    assert_eq!(code, 0);
    assert!(dir.path().join("run/manifest.json").exists());
    let bad = CString::new("task = \"oracle\"\nnope = 1\n[surface]\npreset = \"flat-disk\"\n").unwrap();
    assert_eq!(unsafe { fbcsf_run_config(bad.as_ptr(), &mut code) }, FbcsfStatus::Config);
    assert!(last_error().contains("nope"));
}
