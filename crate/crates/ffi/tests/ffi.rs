use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use poisson_k_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    unsafe { pk_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn table_round_trip() {
    let mut t = ptr::null_mut();
    assert_eq!(
        unsafe { pk_table_new(50, 0.10194, 140, &mut t) },
        PkStatus::Ok
    );
    assert_eq!(unsafe { pk_table_len(t) }, 141);
    let (mut h, mut lh, mut f) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { pk_table_value(t, 113, &mut h) }, PkStatus::Ok);
    assert_eq!(unsafe { pk_table_log_value(t, 113, &mut lh) }, PkStatus::Ok);
    assert_eq!(unsafe { pk_table_pmf(t, 113, &mut f) }, PkStatus::Ok);
    assert!((h - 1.0).abs() < 1e-3);
    assert!((lh - h.ln()).abs() < 1e-12);
    assert!((f - h * (-50.0 * 0.10194f64).exp()).abs() < 1e-15);
    assert_eq!(
        unsafe { pk_table_value(t, 141, &mut h) },
        PkStatus::InvalidParameter
    );
    assert!(last_error().contains("beyond table end"));
    unsafe { pk_table_free(t) };
    unsafe { pk_table_free(ptr::null_mut()) };
}

#[test]
fn scalar_functions() {
    let mut p = 0.0;
    assert_eq!(unsafe { pk_pmf(2, 0.0, 0, &mut p) }, PkStatus::Ok);
    assert_eq!(p, 1.0);
    let mut nu = 0usize;
    assert_eq!(unsafe { pk_median(514, 0.0031619, &mut nu) }, PkStatus::Ok);
    assert_eq!(nu, 367);
    let mut r = 0.0;
    assert_eq!(unsafe { pk_solve_r_k(1, &mut r) }, PkStatus::Ok);
    assert_eq!(r, 1.0);
    let (mut lambda, mut m) = (0.0, 0usize);
    assert_eq!(
        unsafe { pk_first_double_mode(50, &mut lambda, &mut m) },
        PkStatus::Ok
    );
    assert_eq!(m, 113);
    assert!((lambda - 0.10194).abs() < 5e-5);
}

#[test]
fn mode_set_buffer() {
    let mut buf = [0usize; 4];
    let mut count = 0usize;
    let s = unsafe { pk_mode_set(1, 4.0, 1e-9, buf.as_mut_ptr(), buf.len(), &mut count) };
    assert_eq!(s, PkStatus::Ok);
    assert_eq!(&buf[..count], &[3, 4]);
    let s = unsafe { pk_mode_set(1, 4.0, 1e-9, buf.as_mut_ptr(), 1, &mut count) };
    assert_eq!(s, PkStatus::BufferTooSmall);
    assert_eq!(count, 2);
}

#[test]
fn jump_list() {
    let mut list = ptr::null_mut();
    assert_eq!(unsafe { pk_jumps_new(10, &mut list) }, PkStatus::Ok);
    assert_eq!(unsafe { pk_jumps_len(list) }, 3);
    let mut j = PkJump {
        lambda: 0.0,
        mode_before: 0,
        mode_after: 0,
    };
    assert_eq!(unsafe { pk_jumps_get(list, 1, &mut j) }, PkStatus::Ok);
    assert_eq!((j.mode_before, j.mode_after), (10, 17));
    assert!((j.lambda - 0.36189).abs() < 1e-4);
    assert_eq!(
        unsafe { pk_jumps_get(list, 3, &mut j) },
        PkStatus::InvalidParameter
    );
    unsafe { pk_jumps_free(list) };
}

#[test]
fn errors_and_null_pointers() {
    let mut p = 0.0;
    assert_eq!(
        unsafe { pk_pmf(0, 1.0, 0, &mut p) },
        PkStatus::InvalidParameter
    );
    assert!(last_error().contains("order k"));
    assert_eq!(
        unsafe { pk_pmf(1, 1.0, 0, ptr::null_mut()) },
        PkStatus::NullPointer
    );
    assert_eq!(
        unsafe { pk_table_new(1, 1.0, 3, ptr::null_mut()) },
        PkStatus::NullPointer
    );
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { pk_table_new(1000, 1.0, 10, &mut t) }, PkStatus::Ok);
    unsafe { pk_table_free(t) };
    assert_eq!(
        unsafe { pk_table_value(ptr::null(), 0, &mut p) },
        PkStatus::NullPointer
    );
    let (mut l, mut m) = (0.0, 0usize);
    assert_eq!(
        unsafe { pk_first_double_mode(1, &mut l, &mut m) },
        PkStatus::InvalidParameter
    );
    assert_eq!(unsafe { pk_solve_r_k(3, &mut p) }, PkStatus::Ok);
    assert_eq!(last_error(), "");
    assert_eq!(unsafe { pk_last_error_message(ptr::null_mut(), 0) }, 1);
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header_and_static_library() {
    let lib = target_dir().join("libpoisson_k_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "poisson_k.h"
int main(void) {
    size_t nu = 0;
    if (pk_median(514, 0.0031619, &nu) != PK_STATUS_OK || nu != 367) return 1;
    PkTable *t = NULL;
    if (pk_table_new(3, 0.5, 10, &t) != PK_STATUS_OK) return 2;
    double h = 0;
    if (pk_table_value(t, 1, &h) != PK_STATUS_OK || h != 0.5) return 3;
    pk_table_free(t);
    double r = 0;
    if (pk_pmf(0, 1.0, 0, &r) != PK_STATUS_INVALID_PARAMETER) return 4;
    char msg[128];
    pk_last_error_message(msg, sizeof msg);
    printf("%s\n", msg);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).contains("order k"));
}
