use std::ffi::{CStr, CString};
use std::ptr;

use membrane_lab_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ml_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn single_site_green_function() {
    unsafe {
        let lo = [0i64; 5];
        let mut w = ptr::null_mut();
        assert_eq!(ml_window_new(5, lo.as_ptr(), lo.as_ptr(), &mut w), MlStatus::Ok);
        let mut a = ptr::null_mut();
        assert_eq!(ml_pins_new(w, &mut a), MlStatus::Ok);
        let mut g = [0.0f64; 1];
        assert_eq!(ml_green_column(a, lo.as_ptr(), g.as_mut_ptr(), 1), MlStatus::Ok);
        assert!((g[0] - 10.0 / 11.0).abs() < 1e-14);

        assert_eq!(ml_pins_set(a, lo.as_ptr(), true), MlStatus::Ok);
        let mut n = 0usize;
        assert_eq!(ml_pins_count(a, &mut n), MlStatus::Ok);
        assert_eq!(n, 1);
        assert_eq!(ml_green_column(a, lo.as_ptr(), g.as_mut_ptr(), 1), MlStatus::NotFree);
        assert!(last_error().contains("not a free site"), "{}", last_error());
        ml_pins_free(a);
        ml_window_free(w);
    }
}

#[test]
fn buffers_and_null_arguments_are_checked() {
    unsafe {
        let lo = [-2i64, -2];
        let hi = [2i64, 2];
        let mut w = ptr::null_mut();
        assert_eq!(ml_window_new(2, lo.as_ptr(), hi.as_ptr(), &mut w), MlStatus::Ok);
        let mut len = 0usize;
        assert_eq!(ml_window_len(w, &mut len), MlStatus::Ok);
        assert_eq!(len, 25);
        let mut a = ptr::null_mut();
        assert_eq!(ml_pins_bernoulli(w, 0.5, 3, &mut a), MlStatus::Ok);
        ml_pins_set(a, [0i64, 0].as_ptr(), false);
        let mut small = [0.0f64; 4];
        let o = [0i64, 0];
        assert_eq!(ml_green_column(a, o.as_ptr(), small.as_mut_ptr(), 4), MlStatus::InvalidArgument);
        assert_eq!(ml_green_column(ptr::null(), o.as_ptr(), small.as_mut_ptr(), 4), MlStatus::NullPointer);
        let mut d = vec![0.0f64; len];
        assert_eq!(ml_weighted_distance(a, true, o.as_ptr(), d.as_mut_ptr(), len), MlStatus::Ok);
        let mut k = 0usize;
        assert_eq!(ml_window_index(w, o.as_ptr(), &mut k), MlStatus::Ok);
        assert_eq!(d[k], 0.0);
        assert!(d.iter().all(|v| *v >= 0.0));
        assert_eq!(ml_pins_bernoulli(w, 1.5, 3, &mut a), MlStatus::InvalidArgument);
        ml_pins_free(a);
        ml_window_free(w);
        ml_window_free(ptr::null_mut());
    }
}

#[test]
fn scalar_entry_points() {
    unsafe {
        let mut v = 0.0;
        let z = [0i64; 5];
        assert_eq!(ml_rw_green(5, z.as_ptr(), 2, &mut v, ptr::null_mut()), MlStatus::Ok);
        assert!(v > 1.3);
        let mut m = 0u64;
        assert_eq!(ml_choose_m(0.5, 2, &mut m), MlStatus::Ok);
        assert_eq!(m, 44);
        let mut b = 0.0;
        assert_eq!(ml_box_empty_bound(1, 0.5, 2, &mut b), MlStatus::Ok);
        assert!((b - (1.0 - 0.5f64.powi(5))).abs() < 1e-15);
        assert_eq!(ml_choose_m(1.5, 2, &mut m), MlStatus::InvalidArgument);
        assert!(!CStr::from_ptr(ml_version()).to_bytes().is_empty());
    }
}

#[test]
fn experiment_runner() {
    let dir = tempfile::tempdir().unwrap();
    let name = CString::new("domination").unwrap();
    let cfg = CString::new(r#"{"sizes":[1,2],"eps":[1.0]}"#).unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut passed = false;
    unsafe {
        assert_eq!(ml_run_experiment(name.as_ptr(), cfg.as_ptr(), out.as_ptr(), &mut passed), MlStatus::Ok);
    }
    assert!(passed);
    assert!(dir.path().join("summary.json").exists());
    let bad = CString::new(r#"{"no_such_key":1}"#).unwrap();
    unsafe {
        assert_eq!(ml_run_experiment(name.as_ptr(), bad.as_ptr(), out.as_ptr(), &mut passed), MlStatus::Config);
        let unknown = CString::new("nope").unwrap();
        assert_eq!(ml_run_experiment(unknown.as_ptr(), ptr::null(), out.as_ptr(), &mut passed), MlStatus::Config);
    }
}
