use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use phasekit_ffi::*;

fn matrix(n: usize, re: &[f64], im: Option<&[f64]>) -> *mut PkMatrix {
    let mut m = ptr::null_mut();
    let status = unsafe { pk_matrix_new(n, re.as_ptr(), im.map_or(ptr::null(), |v| v.as_ptr()), &mut m) };
    assert_eq!(status, PkStatus::Ok);
    m
}

fn last_error() -> String {
    let p = pk_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn classify_and_phases() {
    let m = matrix(2, &[0.0, -1.0, 1.0, 0.0], None);
    let mut cls = PkClassification {
        kind: PkSectorKind::Sectorial,
        rank: 0,
        rotated_hermitian: false,
        field_angle: 0.0,
    };
    assert_eq!(unsafe { pk_classify(m, ptr::null(), &mut cls) }, PkStatus::Ok);
    assert_eq!(cls.kind, PkSectorKind::SemiSectorial);
    assert_eq!(cls.rank, 2);
    assert!(cls.rotated_hermitian);

    let mut p = ptr::null_mut();
    assert_eq!(unsafe { pk_phases(m, ptr::null(), &mut p) }, PkStatus::Ok);
    let mut buf = [0.0; 4];
    let len = unsafe { pk_phases_copy(p, buf.as_mut_ptr(), buf.len()) };
    assert_eq!(len, 2);
    assert!((buf[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    assert!((buf[1] + std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    assert!(!unsafe { pk_phases_is_approximate(p) });
    unsafe {
        pk_phases_free(p);
        pk_matrix_free(m);
    }
}

#[test]
fn complex_matrix_and_pinv() {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let m = matrix(2, &[c, 0.0, 0.0, 1.0], Some(&[c, 0.0, 0.0, 0.0]));
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { pk_pinv_phases(m, ptr::null(), &mut p) }, PkStatus::Ok);
    assert_eq!(unsafe { pk_phases_len(p) }, 2);
    let mut buf = [0.0; 2];
    unsafe { pk_phases_copy(p, buf.as_mut_ptr(), 2) };
    assert!(buf[0].abs() < 1e-12);
    assert!((buf[1] + std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    unsafe {
        pk_phases_free(p);
        pk_matrix_free(m);
    }
}

#[test]
fn domain_errors_set_the_message() {
    let m = matrix(2, &[0.0, 2.0, 0.0, 0.0], None);
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { pk_phases(m, ptr::null(), &mut p) }, PkStatus::Domain);
    assert!(p.is_null());
    assert!(last_error().contains("semi-sectorial"));
    unsafe { pk_matrix_free(m) };
}

#[test]
fn null_and_invalid_inputs() {
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { pk_matrix_new(2, ptr::null(), ptr::null(), &mut m) },
        PkStatus::NullPointer
    );
    let bad = [f64::NAN, 0.0, 0.0, 1.0];
    assert_eq!(
        unsafe { pk_matrix_new(2, bad.as_ptr(), ptr::null(), &mut m) },
        PkStatus::InvalidInput
    );
    assert!(m.is_null());
    let mut r = 0.0;
    assert_eq!(
        unsafe { pk_graph_essential_phase(ptr::null(), ptr::null(), &mut r) },
        PkStatus::NullPointer
    );
    let tol = PkTolerances {
        eps_rank: -1.0,
        eps_psd: 1e-9,
        eps_phase: 1e-8,
    };
    let ok = matrix(1, &[1.0], None);
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { pk_phases(ok, &tol, &mut p) }, PkStatus::InvalidInput);
    unsafe {
        pk_matrix_free(ok);
        pk_matrix_free(ptr::null_mut());
    }
}

#[test]
fn essential_phase_of_an_m_matrix() {
    let a = [0.5338, 0.3381, 0.0103, 0.1092, 0.2940, 0.0484, 0.8258, 0.7463, 0.6679];
    let re: Vec<f64> = (0..9).map(|k| if k % 4 == 0 { 1.0691 - a[k] } else { -a[k] }).collect();
    let m = matrix(3, &re, None);
    let mut alpha = 0.0;
    let mut d = [0.0; 3];
    let status = unsafe { pk_essential_phase(m, 1e-5, 0.0, 0.0, ptr::null(), &mut alpha, d.as_mut_ptr()) };
    assert_eq!(status, PkStatus::Ok);
    assert!((alpha - 0.1662).abs() < 2e-3, "{alpha}");
    assert!(d.iter().all(|&x| x > 0.0));
    unsafe { pk_matrix_free(m) };
}

#[test]
fn graph_round_trip() {
    let text = CString::new("0 1 1\n1 2 1\n2 0 1\n").unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { pk_graph_parse(text.as_ptr(), &mut g) }, PkStatus::Ok);
    assert_eq!(unsafe { pk_graph_node_count(g) }, 3);
    let mut phi = 0.0;
    assert_eq!(
        unsafe { pk_graph_essential_phase(g, ptr::null(), &mut phi) },
        PkStatus::Ok
    );
    assert!((phi - std::f64::consts::PI / 6.0).abs() < 1e-9);
    let mut balanced = false;
    assert_eq!(
        unsafe { pk_graph_is_weight_balanced(g, ptr::null(), &mut balanced) },
        PkStatus::Ok
    );
    assert!(balanced);
    let mut l = ptr::null_mut();
    assert_eq!(unsafe { pk_graph_laplacian(g, &mut l) }, PkStatus::Ok);
    assert_eq!(unsafe { pk_matrix_dim(l) }, 3);
    unsafe {
        pk_matrix_free(l);
        pk_graph_free(g);
    }

    let bad = CString::new("0 1 -2\n").unwrap();
    assert_eq!(unsafe { pk_graph_parse(bad.as_ptr(), &mut g) }, PkStatus::InvalidInput);
    let chain = CString::new("0 1 1\n").unwrap();
    unsafe { pk_graph_parse(chain.as_ptr(), &mut g) };
    assert_eq!(
        unsafe { pk_graph_essential_phase(g, ptr::null(), &mut phi) },
        PkStatus::Domain
    );
    unsafe { pk_graph_free(g) };
}

#[test]
fn spt_check_through_the_abi() {
    let m = matrix(1, &[1.0], None);
    let mut ok = false;
    assert_eq!(
        unsafe { pk_small_phase_check(m, -1.0, 1.0, ptr::null(), &mut ok) },
        PkStatus::Ok
    );
    assert!(ok);
    assert_eq!(
        unsafe { pk_small_phase_check(m, 3.0, 3.2, ptr::null(), &mut ok) },
        PkStatus::Ok
    );
    assert!(!ok);
    assert_eq!(
        unsafe { pk_small_phase_check(m, 0.0, 7.0, ptr::null(), &mut ok) },
        PkStatus::InvalidInput
    );
    unsafe { pk_matrix_free(m) };
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/phasekit.h")
}

#[test]
fn header_declares_the_api() {
    let text = std::fs::read_to_string(header()).expect("header generated by the build script");
    for name in [
        "pk_matrix_new",
        "pk_classify",
        "pk_phases_copy",
        "pk_essential_phase",
        "pk_graph_parse",
        "pk_last_error_message",
        "PK_STATUS_DOMAIN = 4",
    ] {
        assert!(text.contains(name), "missing {name}");
    }
}

/// Compiles and runs a C client against the static library when a C compiler
/// is available.
#[test]
fn c_client_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libphasekit_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C toolchain or static library");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "phasekit.h"
int main(void) {
    double re[4] = {0.0, -1.0, 1.0, 0.0};
    PkMatrix *m = NULL;
    if (pk_matrix_new(2, re, NULL, &m) != PK_STATUS_OK) return 10;
    PkPhases *p = NULL;
    if (pk_phases(m, NULL, &p) != PK_STATUS_OK) return 11;
    double buf[2];
    size_t n = pk_phases_copy(p, buf, 2);
    printf("%zu %.12f %.12f\n", n, buf[0], buf[1]);
    pk_phases_free(p);
    double bad[4] = {0.0, 2.0, 0.0, 0.0};
    PkMatrix *z = NULL;
    pk_matrix_new(2, bad, NULL, &z);
    PkStatus s = pk_phases(z, NULL, &p);
    printf("%d %s\n", (int)s, pk_last_error_message());
    pk_matrix_free(z);
    pk_matrix_free(m);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("client");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("2 1.570796326795 -1.570796326795"));
    assert_eq!(lines.next(), Some("4 matrix is not semi-sectorial"));
}
