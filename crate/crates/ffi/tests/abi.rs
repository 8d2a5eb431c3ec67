use std::ffi::{CStr, CString};
use std::ptr;

use coupled_decay_ffi::*;

fn last_error() -> Option<String> {
    let p = cd_last_error_message();
    if p.is_null() {
        return None;
    }
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { cd_string_free(p) };
    Some(s)
}

fn dirichlet(n: usize) -> *mut CdSpectrum {
    let preset = CString::new(format!("dirichlet:N={n}")).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { cd_spectrum_from_example(preset.as_ptr(), &mut s) }, CdStatus::Ok);
    s
}

#[test]
fn spectrum_handle_lifecycle() {
    let eigs = [1.0, 4.0, 9.0];
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(cd_spectrum_new(eigs.as_ptr(), 3, &mut s), CdStatus::Ok);
        let mut n = 0usize;
        let mut l1 = 0.0;
        assert_eq!(cd_spectrum_n_modes(s, &mut n), CdStatus::Ok);
        assert_eq!(cd_spectrum_lambda1(s, &mut l1), CdStatus::Ok);
        assert_eq!((n, l1), (3, 1.0));
        let mut b = 0.0;
        assert_eq!(cd_coupling_bound(s, 1.5, &mut b), CdStatus::Ok);
        assert_eq!(b, 1.0);
        cd_spectrum_free(s);
        cd_spectrum_free(ptr::null_mut());
    }
    assert!(last_error().is_none());
}

#[test]
fn errors_set_thread_local_message() {
    let bad = [4.0, 1.0];
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { cd_spectrum_new(bad.as_ptr(), 2, &mut s) }, CdStatus::InvalidArgument);
    assert!(s.is_null());
    assert!(last_error().is_some());

    let mut n = 0usize;
    assert_eq!(unsafe { cd_spectrum_n_modes(ptr::null(), &mut n) }, CdStatus::NullPointer);
    assert!(last_error().unwrap().contains("spectrum"));

    let preset = CString::new("circle:N=3").unwrap();
    assert_eq!(unsafe { cd_spectrum_from_example(preset.as_ptr(), &mut s) }, CdStatus::Domain);

    // a successful call clears the message
    let s = dirichlet(2);
    assert!(last_error().is_none());
    unsafe { cd_spectrum_free(s) };

    // messages are per thread
    let other = std::thread::spawn(last_error).join().unwrap();
    assert!(other.is_none());
}

#[test]
fn certificate_pass_and_fail() {
    let s = dirichlet(16);
    unsafe {
        let params = CdSystemParams { alpha: 0.5, beta: 1.0, damping_b: 1.0, zeta_pert: 0.0 };
        let mut c = ptr::null_mut();
        assert_eq!(cd_certify(s, &params, 1e6, 20, &mut c), CdStatus::Ok);
        let mut passed = false;
        let mut gamma = 0.0;
        let mut fl = 0.0;
        cd_certificate_passed(c, &mut passed);
        cd_certificate_gamma(c, &mut gamma);
        cd_certificate_failing_lambda(c, &mut fl);
        assert!(passed && gamma > 0.0 && fl.is_nan());
        let mut js = ptr::null_mut();
        assert_eq!(cd_certificate_to_json(c, &mut js), CdStatus::Ok);
        let text = CStr::from_ptr(js).to_str().unwrap().to_owned();
        cd_string_free(js);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["passed"], true);
        cd_certificate_free(c);

        let params = CdSystemParams { alpha: 1.01, ..params };
        assert_eq!(cd_certify(s, &params, 1e6, 20, &mut c), CdStatus::Ok);
        cd_certificate_passed(c, &mut passed);
        cd_certificate_failing_lambda(c, &mut fl);
        assert!(!passed);
        assert_eq!(fl, 1.0);
        cd_certificate_free(c);

        let params = CdSystemParams { alpha: 0.0, ..params };
        assert_eq!(cd_certify(s, &params, 1e6, 20, &mut c), CdStatus::Certificate);
        let params = CdSystemParams { alpha: 0.5, beta: 2.0, damping_b: 1.0, zeta_pert: 0.0 };
        assert_eq!(cd_certify(s, &params, 1e6, 20, &mut c), CdStatus::Domain);
        cd_spectrum_free(s);
    }
}

#[test]
fn trajectory_access() {
    let s = dirichlet(2);
    unsafe {
        let params = CdSystemParams { alpha: 0.5, beta: 1.0, damping_b: 1.0, zeta_pert: 0.0 };
        let init = [1.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.5];
        let mut t = ptr::null_mut();
        assert_eq!(cd_trajectory_run(s, &params, init.as_ptr(), 8, 5.0, 50, &mut t), CdStatus::Ok);
        let mut len = 0usize;
        cd_trajectory_len(t, &mut len);
        assert_eq!(len, 51);
        let mut tt = 0.0;
        cd_trajectory_time(t, 50, &mut tt);
        assert_eq!(tt, 5.0);
        assert_eq!(cd_trajectory_time(t, 51, &mut tt), CdStatus::OutOfRange);
        let mut buf = [0.0; 8];
        assert_eq!(cd_trajectory_state(t, 0, buf.as_mut_ptr(), 8), CdStatus::Ok);
        assert_eq!(buf, init);
        assert_eq!(cd_trajectory_state(t, 0, buf.as_mut_ptr(), 7), CdStatus::InvalidArgument);
        let mut ks = vec![0.0; len];
        assert_eq!(cd_trajectory_k_series(t, ks.as_mut_ptr(), len), CdStatus::Ok);
        assert!(ks[50] < ks[0] && ks.iter().all(|k| *k >= 0.0));
        cd_trajectory_free(t);

        assert_eq!(
            cd_trajectory_run(s, &params, init.as_ptr(), 4, 5.0, 50, &mut t),
            CdStatus::InvalidArgument
        );
        cd_spectrum_free(s);
    }
}

#[test]
fn scalar_rate() {
    let init = [1.0, 0.5, -0.3, 0.2];
    let (mut m, mut o) = (0.0, 0.0);
    let st = unsafe { cd_scalar_decay_check(2.0, 3.0, 1.0, init.as_ptr(), 40.0, 4000, &mut m, &mut o) };
    assert_eq!(st, CdStatus::Ok);
    assert!(((m - o) / o).abs() < 0.05);
    let st = unsafe { cd_scalar_decay_check(1.0, 1.0, 1.0, init.as_ptr(), 40.0, 4000, &mut m, &mut o) };
    assert_eq!(st, CdStatus::Domain);
}

#[test]
fn header_is_generated_and_compiles() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/coupled_decay.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build.rs");
    for sym in ["cd_certify", "cd_last_error_message", "cd_string_free", "CD_STATUS_OK", "CdTrajectory"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(&src, "#include \"coupled_decay.h\"\nint main(void){CdSpectrum *s = 0; (void)s; return CD_STATUS_OK;}\n")
        .unwrap();
    match std::process::Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&src)
        .status()
    {
        Ok(st) => assert!(st.success(), "header does not compile as C"),
        Err(_) => eprintln!("no C compiler found; skipped compile check"),
    }
}
