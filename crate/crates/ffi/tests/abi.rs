use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use gslq::cases;
use gslq_ffi::*;

fn problem(json: &str) -> *mut GslqProblem {
    let text = CString::new(json).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { gslq_problem_from_json(text.as_ptr(), &mut p) }, GslqStatus::Ok);
    assert!(!p.is_null());
    p
}

fn last_error() -> Option<String> {
    let raw = gslq_last_error_message();
    if raw.is_null() {
        return None;
    }
    let s = unsafe { CStr::from_ptr(raw) }.to_str().unwrap().to_owned();
    unsafe { gslq_string_free(raw) };
    Some(s)
}

#[test]
fn problem_handle_reports_dimensions() {
    let p = problem(cases::EXAMPLE1_JSON);
    let (mut n, mut m) = (0, 0);
    assert_eq!(unsafe { gslq_problem_dims(p, &mut n, &mut m) }, GslqStatus::Ok);
    assert_eq!((n, m), (3, 2));
    unsafe { gslq_problem_free(p) };
}

#[test]
fn bad_input_sets_codes_and_messages() {
    let mut p = ptr::null_mut();
    let bad = CString::new(r#"{"A": [[1, 2]]}"#).unwrap();
    assert_eq!(unsafe { gslq_problem_from_json(bad.as_ptr(), &mut p) }, GslqStatus::Parse);
    assert!(p.is_null());
    assert!(last_error().is_some());

    assert_eq!(unsafe { gslq_problem_from_json(ptr::null(), &mut p) }, GslqStatus::NullPointer);
    assert_eq!(unsafe { gslq_problem_from_json(bad.as_ptr(), ptr::null_mut()) }, GslqStatus::NullPointer);

    let p = problem(cases::EXAMPLE1_JSON);
    let cfg = CString::new(r#"{"rhoo": 1}"#).unwrap();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { gslq_solve_palm(p, cfg.as_ptr(), false, false, &mut r) }, GslqStatus::Parse);
    assert!(r.is_null());
    assert!(last_error().unwrap().contains("rhoo"));
    unsafe { gslq_problem_free(p) };

    // null handles are accepted by the free functions
    unsafe {
        gslq_problem_free(ptr::null_mut());
        gslq_report_free(ptr::null_mut());
        gslq_string_free(ptr::null_mut());
    }
}

#[test]
fn palm_iteration_cap_still_yields_a_report() {
    let p = problem(cases::EXAMPLE1_JSON);
    let cfg = CString::new(r#"{"maxIter": 30}"#).unwrap();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { gslq_solve_palm(p, cfg.as_ptr(), false, false, &mut r) }, GslqStatus::NotConverged);
    assert!(!r.is_null());

    let raw = unsafe { gslq_report_json(r) };
    let json: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(raw) }.to_str().unwrap()).unwrap();
    unsafe { gslq_string_free(raw) };
    assert_eq!(json["solver"], "palm");
    assert_eq!(json["iterations"], 30);

    let mut small = [0.0; 5];
    assert_eq!(unsafe { gslq_report_gain(r, small.as_mut_ptr(), small.len()) }, GslqStatus::BufferTooSmall);
    let mut k = [0.0; 6];
    assert_eq!(unsafe { gslq_report_gain(r, k.as_mut_ptr(), k.len()) }, GslqStatus::Ok);
    for (i, row) in json["k"].as_array().unwrap().iter().enumerate() {
        for (j, v) in row.as_array().unwrap().iter().enumerate() {
            assert_eq!(k[i * 3 + j], v.as_f64().unwrap());
        }
    }
    unsafe {
        gslq_report_free(r);
        gslq_problem_free(p);
    }
}

#[test]
fn admm_converges_through_the_abi() {
    let p = problem(cases::EXAMPLE1_JSON);
    let cfg = CString::new(r#"{"beta": 300, "gamma": 7, "maxIter": 3000, "tolFeas": 1e-2, "initValue": 50}"#).unwrap();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { gslq_solve_admm(p, cfg.as_ptr(), &mut r) }, GslqStatus::Ok);
    assert!(last_error().is_none());
    unsafe { gslq_report_free(r) };

    let cfg = CString::new(r#"{"beta": 300, "gamma": 50, "maxIter": 50}"#).unwrap();
    assert_eq!(unsafe { gslq_solve_l1(p, cfg.as_ptr(), &mut r) }, GslqStatus::NotConverged);
    let raw = unsafe { gslq_report_json(r) };
    assert!(unsafe { CStr::from_ptr(raw) }.to_str().unwrap().contains("admm-l1"));
    unsafe {
        gslq_string_free(raw);
        gslq_report_free(r);
        gslq_problem_free(p);
    }
}

#[test]
fn eval_gain_distinguishes_stable_and_unstable_loops() {
    let p = problem(cases::EXAMPLE1_JSON);
    let (mut abscissa, mut h2) = (0.0, 0.0);
    let good = [1.121, 0.935, 0.0, 0.508, 0.496, 0.865];
    assert_eq!(unsafe { gslq_eval_gain(p, good.as_ptr(), 2, 3, &mut abscissa, &mut h2) }, GslqStatus::Ok);
    assert!(abscissa < 0.0 && h2.is_finite() && h2 > 0.0);

    let bad = [-1.0, 0.0, 0.0, 0.0, 0.0, -1.0];
    assert_eq!(unsafe { gslq_eval_gain(p, bad.as_ptr(), 2, 3, &mut abscissa, &mut h2) }, GslqStatus::Ok);
    assert!(abscissa >= 0.0 && h2.is_infinite());

    assert_eq!(unsafe { gslq_eval_gain(p, good.as_ptr(), 3, 2, &mut abscissa, &mut h2) }, GslqStatus::Parse);
    unsafe { gslq_problem_free(p) };
}

#[test]
fn generated_header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"gslq.h\"\n\
         int main(void) {\n\
           GslqProblem *p = NULL; GslqReport *r = NULL; size_t n, m; double a, h, k[6];\n\
           if (gslq_problem_from_json(\"{}\", &p) != GSLQ_STATUS_OK) { char *e = gslq_last_error_message(); gslq_string_free(e); return 1; }\n\
           gslq_problem_dims(p, &n, &m);\n\
           gslq_solve_palm(p, NULL, false, false, &r);\n\
           gslq_solve_admm(p, NULL, &r); gslq_solve_l1(p, NULL, &r);\n\
           gslq_report_gain(r, k, 6); gslq_string_free(gslq_report_json(r));\n\
           gslq_eval_gain(p, k, 2, 3, &a, &h);\n\
           gslq_report_free(r); gslq_problem_free(p);\n\
           return 0;\n\
         }\n",
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", include])
        .arg(&src)
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success());
}
