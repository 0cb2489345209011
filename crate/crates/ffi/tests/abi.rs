use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use pcesolve_ffi::*;

const TRIANGLE: &str = "3 3\n1 2 1\n2 3 1\n1 3 1\n";

fn last_error() -> String {
    let p = pce_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn parse(text: &str) -> *mut PceGraph {
    let c = CString::new(text).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { pce_graph_parse(c.as_ptr(), PceFormat::Gset, &mut g) }, PceStatus::Ok);
    g
}

#[test]
fn graph_handle_reports_sizes_and_cuts() {
    let g = parse(TRIANGLE);
    let (mut n, mut e, mut cut) = (0usize, 0usize, 0.0f64);
    unsafe {
        assert_eq!(pce_graph_num_vertices(g, &mut n), PceStatus::Ok);
        assert_eq!(pce_graph_num_edges(g, &mut e), PceStatus::Ok);
        let bits = [1i8, -1, -1];
        assert_eq!(pce_cut_value(g, bits.as_ptr(), 3, &mut cut), PceStatus::Ok);
        pce_graph_free(g);
    }
    assert_eq!((n, e), (3, 3));
    assert_eq!(cut, 4.0);
}

#[test]
fn errors_set_status_and_message() {
    let bad = CString::new("2 1\n1 5 1\n").unwrap();
    let mut g = ptr::null_mut();
    let st = unsafe { pce_graph_parse(bad.as_ptr(), PceFormat::Gset, &mut g) };
    assert_eq!(st, PceStatus::Parse);
    assert!(g.is_null());
    assert!(!last_error().is_empty());

    let mut n = 0usize;
    assert_eq!(unsafe { pce_graph_num_vertices(ptr::null(), &mut n) }, PceStatus::NullPointer);
    assert!(last_error().contains("null"));

    let g = parse(TRIANGLE);
    let mut cut = 0.0;
    let short = [1i8, -1];
    assert_ne!(unsafe { pce_cut_value(g, short.as_ptr(), 2, &mut cut) }, PceStatus::Ok);
    let mut s = 0u64;
    assert_eq!(unsafe { pce_sample_bound(0.0, 0.05, g, 1.0, &mut s) }, PceStatus::InvalidArgument);
    unsafe { pce_graph_free(g) };
    unsafe { pce_graph_free(ptr::null_mut()) };
    unsafe { pce_result_free(ptr::null_mut()) };
}

#[test]
fn from_edges_matches_parsed_graph() {
    let us = [0usize, 1, 0];
    let vs = [1usize, 2, 2];
    let ws = [1.0, 1.0, 1.0];
    let mut g = ptr::null_mut();
    let st = unsafe { pce_graph_from_edges(3, us.as_ptr(), vs.as_ptr(), ws.as_ptr(), 3, &mut g) };
    assert_eq!(st, PceStatus::Ok);
    let (mut a, mut b) = (0u64, 0u64);
    let h = parse(TRIANGLE);
    unsafe {
        assert_eq!(pce_sample_bound(0.1, 0.05, g, 2.0, &mut a), PceStatus::Ok);
        assert_eq!(pce_sample_bound(0.1, 0.05, h, 2.0, &mut b), PceStatus::Ok);
        pce_graph_free(g);
        pce_graph_free(h);
    }
    assert_eq!(a, b);
    assert!(a > 0);
}

#[test]
fn qubit_count_and_version() {
    assert_eq!(pce_min_qubits(800, 2), 24);
    assert_eq!(pce_min_qubits(2000, 3), 17);
    let v = unsafe { CStr::from_ptr(pce_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    assert!(pce_default_alpha(10, 2) > 0.0);
}

#[test]
fn solve_round_trip() {
    let g = parse(TRIANGLE);
    let mut opts = std::mem::MaybeUninit::<PceSolveOptions>::uninit();
    assert_eq!(unsafe { pce_solve_options_default(opts.as_mut_ptr()) }, PceStatus::Ok);
    let mut opts = unsafe { opts.assume_init() };
    assert_eq!(opts.k, 2);
    assert_eq!(opts.learning_rate, 1e-3);
    opts.seed = 5;
    opts.has_best_known = true;
    opts.best_known = 2.0;
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { pce_solve(g, &opts, &mut r) }, PceStatus::Ok);
    let (mut cut, mut ratio, mut exact, mut epochs) = (0.0, 0.0, 0.0, 0usize);
    let mut small = [0i8; 2];
    let mut bits = [0i8; 3];
    unsafe {
        assert_eq!(pce_result_cut(r, &mut cut), PceStatus::Ok);
        assert_eq!(pce_result_ratio(r, &mut ratio), PceStatus::Ok);
        assert_eq!(pce_result_ratio_exact(r, &mut exact), PceStatus::Ok);
        assert_eq!(pce_result_epochs(r, &mut epochs), PceStatus::Ok);
        assert_eq!(pce_result_assignment(r, small.as_mut_ptr(), 2), PceStatus::BufferTooSmall);
        assert_eq!(pce_result_assignment(r, bits.as_mut_ptr(), 3), PceStatus::Ok);
    }
    assert_eq!(cut, 4.0);
    assert_eq!(ratio, 1.0);
    assert_eq!(exact, 1.0);
    assert!(epochs > 0);
    assert!(bits.iter().all(|&b| b == 1 || b == -1));
    let mut check = 0.0;
    unsafe {
        assert_eq!(pce_cut_value(g, bits.as_ptr(), 3, &mut check), PceStatus::Ok);
        pce_result_free(r);
        pce_graph_free(g);
    }
    assert_eq!(check, cut);

    let g = parse(TRIANGLE);
    opts.has_best_known = false;
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(pce_solve(g, &opts, &mut r), PceStatus::Ok);
        assert_eq!(pce_result_ratio(r, &mut ratio), PceStatus::NotAvailable);
        pce_result_free(r);
        pce_graph_free(g);
    }
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/pcesolve.h")
}

#[test]
fn header_declares_every_export() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "pce_last_error_message",
        "pce_version",
        "pce_graph_parse",
        "pce_graph_from_edges",
        "pce_graph_free",
        "pce_graph_num_vertices",
        "pce_graph_num_edges",
        "pce_cut_value",
        "pce_min_qubits",
        "pce_default_alpha",
        "pce_sample_bound",
        "pce_solve_options_default",
        "pce_solve",
        "pce_result_free",
        "pce_result_cut",
        "pce_result_ratio",
        "pce_result_ratio_exact",
        "pce_result_epochs",
        "pce_result_assignment",
        "typedef struct PceGraph PceGraph",
        "PCE_STATUS_BUFFER_TOO_SMALL = 6",
    ] {
        assert!(text.contains(name), "header is missing {name}");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "pcesolve.h"

int main(void) {
    PceGraph *g = NULL;
    if (pce_graph_parse("3 3\n1 2 1\n2 3 1\n1 3 1\n", PCE_FORMAT_GSET, &g) != PCE_STATUS_OK) return 10;
    PceSolveOptions o;
    pce_solve_options_default(&o);
    o.seed = 3;
    PceSolveResult *r = NULL;
    if (pce_solve(g, &o, &r) != PCE_STATUS_OK) return 11;
    double cut = 0;
    pce_result_cut(r, &cut);
    signed char bits[3];
    if (pce_result_assignment(r, bits, 3) != PCE_STATUS_OK) return 12;
    if (pce_graph_parse("x", PCE_FORMAT_GSET, &g) == PCE_STATUS_OK) return 13;
    if (pce_last_error_message() == NULL) return 14;
    printf("%g %zu\n", cut, pce_min_qubits(800, 2));
    pce_result_free(r);
    pce_graph_free(g);
    return 0;
}
"#;

#[test]
fn c_program_links_against_the_shared_library() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libpcesolve_ffi.so");
    assert!(lib.exists(), "shared library not built at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg("-o")
        .arg(&bin)
        .arg("-L")
        .arg(&profile_dir)
        .arg("-lpcesolve_ffi")
        .status()
        .expect("a C compiler named cc");
    assert!(status.success());
    let out = Command::new(&bin).env("LD_LIBRARY_PATH", &profile_dir).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "4 24");
}
