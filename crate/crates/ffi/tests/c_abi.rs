use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use election_coding_ffi::*;

fn deterministic(n: usize, b: usize) -> *mut EcMatrix {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { ec_matrix_deterministic(n, b, &mut m) }, EcStatus::Ok);
    m
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ec_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn deterministic_redundancy_and_entries() {
    let m = deterministic(5, 1);
    let (mut num, mut den) = (0u64, 0u64);
    assert_eq!(unsafe { ec_matrix_redundancy(m, &mut num, &mut den) }, EcStatus::Ok);
    assert_eq!((num, den), (19, 5));
    assert_eq!(unsafe { ec_matrix_n(m) }, 5);
    let mut bit = true;
    assert_eq!(unsafe { ec_matrix_get(m, 0, 1, &mut bit) }, EcStatus::Ok);
    assert!(!bit);
    assert_eq!(unsafe { ec_matrix_get(m, 5, 0, &mut bit) }, EcStatus::InvalidArgument);
    let (mut tn, mut td) = (0i64, 0i64);
    assert_eq!(unsafe { ec_theoretical_redundancy(5, 1, &mut tn, &mut td) }, EcStatus::Ok);
    assert_eq!((tn, td), (19, 5));
    unsafe { ec_matrix_free(m) };
}

#[test]
fn text_round_trip() {
    let m = deterministic(7, 1);
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { ec_matrix_to_text(m, &mut text) }, EcStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { ec_matrix_from_text(text, &mut back) }, EcStatus::Ok);
    let s = unsafe { CStr::from_ptr(text) }.to_str().unwrap().to_owned();
    assert!(s.starts_with("# kind=deterministic"));
    let mut text2 = ptr::null_mut();
    assert_eq!(unsafe { ec_matrix_to_text(back, &mut text2) }, EcStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(text2) }.to_str().unwrap(), s);
    unsafe {
        ec_string_free(text);
        ec_string_free(text2);
        ec_matrix_free(m);
        ec_matrix_free(back);
    }
}

#[test]
fn parse_error_sets_message() {
    let bad = CString::new("101\n01\n").unwrap();
    let mut m = ptr::null_mut();
    assert_ne!(unsafe { ec_matrix_from_text(bad.as_ptr(), &mut m) }, EcStatus::Ok);
    assert!(m.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_pointers_are_rejected() {
    assert_eq!(unsafe { ec_matrix_deterministic(5, 1, ptr::null_mut()) }, EcStatus::NullPointer);
    let mut t = false;
    assert_eq!(unsafe { ec_verify_lemma2(ptr::null(), 1, &mut t, ptr::null_mut(), 0) }, EcStatus::NullPointer);
    assert_eq!(unsafe { ec_matrix_n(ptr::null()) }, 0);
    unsafe {
        ec_matrix_free(ptr::null_mut());
        ec_string_free(ptr::null_mut());
    }
}

#[test]
fn verifiers_and_witness() {
    let mut id = ptr::null_mut();
    assert_eq!(unsafe { ec_matrix_identity(5, &mut id) }, EcStatus::Ok);
    let mut tolerant = true;
    let mut witness = [9u8; 5];
    let st = unsafe { ec_verify_lemma2(id, 1, &mut tolerant, witness.as_mut_ptr(), witness.len()) };
    assert_eq!(st, EcStatus::Ok);
    assert!(!tolerant);
    assert_eq!(witness, [1, 1, 0, 0, 0]);
    let st = unsafe { ec_verify_lemma2(id, 1, &mut tolerant, witness.as_mut_ptr(), 3) };
    assert_eq!(st, EcStatus::InvalidArgument);

    let det = deterministic(9, 3);
    for f in [ec_verify_lemma2, ec_verify_bruteforce] {
        let mut tolerant = false;
        assert_eq!(unsafe { f(det, 3, &mut tolerant, ptr::null_mut(), 0) }, EcStatus::Ok);
        assert!(tolerant);
    }
    unsafe {
        ec_matrix_free(id);
        ec_matrix_free(det);
    }
}

#[test]
fn encode_and_decode() {
    let m = deterministic(5, 1);
    let msg: [i8; 5] = [1, -1, 1, -1, -1];
    let mut c = [0i8; 5];
    assert_eq!(unsafe { ec_encode(m, msg.as_ptr(), c.as_mut_ptr(), 5) }, EcStatus::Ok);
    assert_eq!(c, [1, -1, -1, -1, -1]);
    let mut out = 0i8;
    assert_eq!(unsafe { ec_decode(c.as_ptr(), 5, &mut out) }, EcStatus::Ok);
    assert_eq!(out, -1);
    let tie: [i8; 4] = [1, 1, -1, -1];
    assert_eq!(unsafe { ec_decode(tie.as_ptr(), 4, &mut out) }, EcStatus::Ok);
    assert_eq!(out, -1);
    let bad: [i8; 5] = [1, 0, 1, 1, 1];
    assert_eq!(unsafe { ec_encode(m, bad.as_ptr(), c.as_mut_ptr(), 5) }, EcStatus::InvalidArgument);
    assert_eq!(unsafe { ec_encode(m, msg.as_ptr(), c.as_mut_ptr(), 4) }, EcStatus::InvalidArgument);
    unsafe { ec_matrix_free(m) };
}

#[test]
fn bounds_match_core() {
    assert_eq!(ec_p_star(40.0, 1.0), election_coding::bounds::p_star(40.0, 1.0));
    let s = 128f64.sqrt();
    assert!((ec_q_star(40.0, 1.0, s) - 0.0055363573603041).abs() < 1e-11);
    let mut cert = EcCertificate::default();
    assert_eq!(unsafe { ec_certify(40.0, 1.0, s, 0.2, 100.0, &mut cert) }, EcStatus::Ok);
    assert!(cert.certified && !cert.vacuous);
    assert_eq!(unsafe { ec_certify(40.0, 1.0, s, 1.5, 100.0, &mut cert) }, EcStatus::InvalidArgument);
}

#[test]
fn bernoulli_is_seeded() {
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    assert_eq!(unsafe { ec_matrix_bernoulli(12, 0.3, 5, &mut a) }, EcStatus::Ok);
    assert_eq!(unsafe { ec_matrix_bernoulli(12, 0.3, 5, &mut b) }, EcStatus::Ok);
    let (mut ta, mut tb) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        ec_matrix_to_text(a, &mut ta);
        ec_matrix_to_text(b, &mut tb);
        assert_eq!(CStr::from_ptr(ta), CStr::from_ptr(tb));
        ec_string_free(ta);
        ec_string_free(tb);
        ec_matrix_free(a);
        ec_matrix_free(b);
    }
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { ec_matrix_bernoulli(12, 1.5, 5, &mut c) }, EcStatus::InvalidArgument);
}

/// Compile the C smoke program against the generated header and the static
/// library, then run it. Skipped when no C compiler is available.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libelection_coding_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no cc or static library at {}", lib.display());
        return;
    }
    let exe = tmp.join("ec_smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "smoke exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
