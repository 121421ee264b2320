use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use qcurv_ffi::*;

fn last_error() -> String {
    let p = qc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn density(n: u32, text: &str) -> *mut QcField {
    let text = CString::new(text).unwrap();
    let mut h = ptr::null_mut();
    let status = unsafe { qc_field_from_density(n, text.as_ptr(), &mut h) };
    assert_eq!(status, QcStatus::Ok, "{}", last_error());
    assert!(!h.is_null());
    h
}

const GAUSSIAN: &str = "alpha_target = 0.5\n[[bumps]]\nprofile = \"gaussian\"\n";

#[test]
fn sphere_curvature_through_the_abi() {
    let f = density(4, "[[bumps]]\nprofile = \"spheredensity\"\n");
    unsafe {
        assert_eq!(qc_field_dimension(f), 4);
        assert!((qc_field_alpha(f) - 2.0).abs() < 1e-12);
        let x = [0.0; 4];
        let mut c = QcCurvature::default();
        let mut eigs = [0.0; 4];
        assert_eq!(qc_curvature(f, x.as_ptr(), 4, &mut c, eigs.as_mut_ptr()), QcStatus::Ok);
        assert!((c.scalar - 48.0).abs() < 1e-6);
        assert!((c.q2 - 8.0).abs() < 1e-6);
        assert!((c.qtop - 96.0).abs() < 1e-6);
        assert!(c.q4.is_nan() && c.h.is_nan());
        assert!(eigs.iter().all(|e| (e - 12.0).abs() < 1e-6));

        let mut s = QcScalars::default();
        let mut grad = [1.0; 4];
        let mut hess = [1.0; 16];
        assert_eq!(
            qc_eval_stack(f, x.as_ptr(), 4, &mut s, grad.as_mut_ptr(), hess.as_mut_ptr(), ptr::null_mut()),
            QcStatus::Ok
        );
        assert_eq!(s.u, 0.0);
        assert!((s.lap + 8.0).abs() < 1e-6);
        assert!(grad.iter().all(|g| g.abs() < 1e-12));
        assert!((hess[0] + 2.0).abs() < 1e-6 && hess[1].abs() < 1e-12);
        qc_field_free(f);
    }
}

#[test]
fn matches_the_library() {
    let f = density(6, GAUSSIAN);
    let spec: qcurv::DensitySpec = toml::from_str(GAUSSIAN).unwrap();
    let field = qcurv::build_field(qcurv::build_density(6, &spec).unwrap(), qcurv::QuadConfig::default()).unwrap();
    let x = [0.4, -0.1, 0.0, 0.2, 0.0, 0.3];
    unsafe {
        let mut u = f64::NAN;
        assert_eq!(qc_eval_u(f, x.as_ptr(), 6, &mut u), QcStatus::Ok);
        assert_eq!(u, field.eval_u(&x));
        let mut c = QcCurvature::default();
        assert_eq!(qc_curvature(f, x.as_ptr(), 6, &mut c, ptr::null_mut()), QcStatus::Ok);
        let pc = qcurv::curvature::point_curvature(&field, &x);
        assert_eq!(c.q4, pc.q4.unwrap());
        assert_eq!(c.h, pc.h.unwrap());
        let mut iso = 0.0;
        assert_eq!(qc_iso_ratio(f, 1e4, &mut iso), QcStatus::Ok);
        assert!((iso - 0.5).abs() < 0.01, "{iso}");
        qc_field_free(f);
    }
}

#[test]
fn scenario_constructors() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let path = CString::new(dir.join("s2_gaussian_half.toml").to_str().unwrap()).unwrap();
    let text = CString::new(std::fs::read_to_string(dir.join("s5_gaussian_n6.toml")).unwrap()).unwrap();
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(qc_field_from_file(path.as_ptr(), &mut h), QcStatus::Ok);
        assert_eq!(qc_field_dimension(h), 4);
        qc_field_free(h);
        let mut h = ptr::null_mut();
        assert_eq!(qc_field_from_scenario(text.as_ptr(), &mut h), QcStatus::Ok);
        assert_eq!(qc_field_dimension(h), 6);
        assert!((qc_field_alpha(h) - 0.5).abs() < 1e-12);
        qc_field_free(h);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut h = ptr::null_mut();
        let bad = CString::new("[[bumps]]\nprofile = \"cube\"\n").unwrap();
        assert_eq!(qc_field_from_density(4, bad.as_ptr(), &mut h), QcStatus::Config);
        assert!(h.is_null());
        assert!(last_error().contains("cube"), "{}", last_error());

        let odd = CString::new(GAUSSIAN).unwrap();
        assert_eq!(qc_field_from_density(5, odd.as_ptr(), &mut h), QcStatus::Config);
        assert_eq!(qc_field_from_density(4, ptr::null(), &mut h), QcStatus::NullPointer);
        let missing = CString::new("/nonexistent/scenario.toml").unwrap();
        assert_eq!(qc_field_from_file(missing.as_ptr(), &mut h), QcStatus::Config);

        let f = density(4, GAUSSIAN);
        let mut u = 0.0;
        assert_eq!(qc_eval_u(f, [0.0; 3].as_ptr(), 3, &mut u), QcStatus::DimensionMismatch);
        assert_eq!(qc_eval_u(f, [0.0; 4].as_ptr(), 4, ptr::null_mut()), QcStatus::NullPointer);
        assert_eq!(qc_eval_u(ptr::null(), [0.0; 4].as_ptr(), 4, &mut u), QcStatus::NullPointer);
        assert_eq!(qc_field_dimension(ptr::null()), 0);
        assert!(qc_field_alpha(ptr::null()).is_nan());
        qc_field_free(ptr::null_mut());
        qc_field_free(f);
    }
}

/// Target directory holding the built static library.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_header() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = artifact_dir().join("libqcurv_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let out_dir = tempfile::TempDir::new().unwrap();
    let exe = out_dir.path().join("smoke");
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
