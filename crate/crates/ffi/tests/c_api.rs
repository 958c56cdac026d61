use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use qwsearch_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(qw_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn torus_hitting_time_and_free() {
    unsafe {
        let mut h: *mut QwChain = ptr::null_mut();
        assert_eq!(qw_chain_torus(9, &mut h), QwStatus::Ok);
        let mut n = 0usize;
        assert_eq!(qw_chain_size(h, &mut n), QwStatus::Ok);
        assert_eq!(n, 81);
        let (mut v, mut e) = (0.0, 0.0);
        assert_eq!(qw_hitting_time(h, &mut v, &mut e), QwStatus::Ok);
        let direct = qwsearch::spectra::hitting_time_exact(
            &qwsearch::graphs::torus_chain(9).unwrap(),
            &qwsearch::chain::MarkedSet::with_distribution(&vec![1.0 / 81.0; 81], [0]).unwrap(),
        )
        .unwrap();
        assert_eq!(v, direct.value);
        let mut plus = 0.0;
        assert_eq!(qw_extended_hitting_time(h, &mut plus), QwStatus::Ok);
        assert!((plus - v).abs() / v < 1e-6, "single marked vertex: {plus} vs {v}");
        qw_chain_free(h);
    }
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        let mut v = 0.0;
        assert_eq!(qw_hitting_time(ptr::null(), &mut v, ptr::null_mut()), QwStatus::NullPointer);
        assert!(last_error().contains("null"));
        assert_eq!(qw_chain_torus(4, ptr::null_mut()), QwStatus::NullPointer);
        qw_chain_free(ptr::null_mut());
    }
}

#[test]
fn error_codes_map_library_errors() {
    unsafe {
        let mut h: *mut QwChain = ptr::null_mut();
        assert_eq!(qw_chain_star(1, &mut h), QwStatus::OutOfRange);
        assert!(h.is_null());
        assert_eq!(qw_chain_torus(3, &mut h), QwStatus::Ok);
        assert_eq!(qw_chain_set_marked(h, ptr::null(), 0), QwStatus::InvalidMarkedSet);
        let bad = [99usize];
        assert_eq!(qw_chain_set_marked(h, bad.as_ptr(), 1), QwStatus::InvalidMarkedSet);
        let mut v = 0.0;
        assert_eq!(qw_success_bound(h, 1.5, 3, &mut v), QwStatus::OutOfRange);
        assert!(!last_error().is_empty());
        assert_eq!(qw_success_bound(h, 0.5, 3, &mut v), QwStatus::Ok);
        assert!(last_error().is_empty());
        qw_chain_free(h);
        let name = CStr::from_ptr(qw_status_name(QwStatus::TooLarge));
        assert_eq!(name.to_str().unwrap(), "too-large");
    }
}

#[test]
fn rows_and_text_constructors() {
    unsafe {
        // Two-state chain with p01 = 0.3, p10 = 0.1.
        let offsets = [0usize, 2, 4];
        let cols = [0usize, 1, 0, 1];
        let probs = [0.7, 0.3, 0.1, 0.9];
        let mut h: *mut QwChain = ptr::null_mut();
        assert_eq!(qw_chain_from_rows(2, offsets.as_ptr(), cols.as_ptr(), probs.as_ptr(), &mut h), QwStatus::Ok);
        let mut pi = [0.0; 2];
        assert_eq!(qw_chain_stationary(h, pi.as_mut_ptr(), 2), QwStatus::Ok);
        assert!((pi[0] - 0.25).abs() < 1e-12 && (pi[1] - 0.75).abs() < 1e-12);
        let mut v = 0.0;
        assert_eq!(qw_hitting_time(h, &mut v, ptr::null_mut()), QwStatus::NoMarkedSet);
        let m = [1usize];
        assert_eq!(qw_chain_set_marked(h, m.as_ptr(), 1), QwStatus::Ok);
        assert_eq!(qw_hitting_time(h, &mut v, ptr::null_mut()), QwStatus::Ok);
        assert!((v - 1.0 / 0.3).abs() < 1e-12);
        qw_chain_free(h);

        let text = CString::new("n 2\n0 1 1\n1 0 0.5\n1 1 0.5\nmarked\n1\n").unwrap();
        assert_eq!(qw_chain_from_text(text.as_ptr(), &mut h), QwStatus::Ok);
        assert_eq!(qw_hitting_time(h, &mut v, ptr::null_mut()), QwStatus::Ok);
        assert!((v - 1.0).abs() < 1e-12);
        qw_chain_free(h);

        let bad = CString::new("n 2\n0 1 0.5\n").unwrap();
        assert_ne!(qw_chain_from_text(bad.as_ptr(), &mut h), QwStatus::Ok);
    }
}

#[test]
fn geometric_window_through_c_abi() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(qw_geometric_sum_window(1.0, 3, &mut v), QwStatus::Ok);
        assert_eq!(v, 1.0);
        assert_eq!(qw_geometric_sum_window(0.0, 3, &mut v), QwStatus::OutOfRange);
    }
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include").join("qwsearch.h")
}

#[test]
fn header_declares_the_interface() {
    let h = std::fs::read_to_string(header()).expect("header generated by the build script");
    for name in [
        "qw_chain_torus",
        "qw_chain_free",
        "qw_hitting_time",
        "qw_last_error_message",
        "typedef struct QwChain QwChain",
        "QW_STATUS_NULL_POINTER = 1",
    ] {
        assert!(h.contains(name), "missing {name}");
    }
}

/// Compiles and runs a C program against the header and the static library
/// when a C compiler is available.
#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libqwsearch_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library at {} or no C compiler", lib.display());
        return;
    }
    let dir = std::env::temp_dir().join(format!("qwsearch-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "qwsearch.h"
int main(void) {
    QwChain *h = NULL;
    if (qw_chain_torus(9, &h) != QW_STATUS_OK) return 2;
    double v = 0.0;
    if (qw_hitting_time(h, &v, NULL) != QW_STATUS_OK) return 3;
    if (qw_hitting_time(NULL, &v, NULL) != QW_STATUS_NULL_POINTER) return 4;
    printf("%.6f %s\n", v, qw_last_error_message());
    qw_chain_free(h);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status);
    let text = String::from_utf8_lossy(&out.stdout);
    let v: f64 = text.split_whitespace().next().unwrap().parse().unwrap();
    assert!((v - 163.255564).abs() < 1e-5, "{text}");
}
