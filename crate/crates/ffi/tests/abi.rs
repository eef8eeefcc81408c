use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use contactnet_ffi::*;

const COHORT: &str = "\
id,sex,school,carriage_direct,carriage_enrichment
A,female,S1,positive,positive
B,female,S1,positive,positive
C,male,S1,negative,positive
D,male,S2,negative,negative
E,female,S2,positive,positive
F,male,S2,negative,negative
";

const NOMINATIONS: &str = "\
from,to,physical,school,sports,home,other
A,B,yes,yes,no,no,no
B,C,no,yes,no,no,no
C,A,no,no,no,yes,no
D,E,yes,no,no,no,no
E,F,no,yes,no,no,no
F,D,no,no,yes,no,no
A,D,no,no,no,no,no
";

fn fixture() -> (tempfile::TempDir, CString, CString) {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("cohort.csv");
    let n = dir.path().join("nominations.csv");
    std::fs::write(&c, COHORT).unwrap();
    std::fs::write(&n, NOMINATIONS).unwrap();
    let cs = CString::new(c.to_str().unwrap()).unwrap();
    let ns = CString::new(n.to_str().unwrap()).unwrap();
    (dir, cs, ns)
}

fn last_error() -> Option<String> {
    let p = cn_last_error();
    if p.is_null() {
        return None;
    }
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { cn_string_free(p) };
    Some(s)
}

fn s(v: &str) -> CString {
    CString::new(v).unwrap()
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(cn_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn load_build_and_measure() {
    let (_dir, c, n) = fixture();
    unsafe {
        let mut cohort = ptr::null_mut();
        assert_eq!(cn_cohort_load(c.as_ptr(), n.as_ptr(), &mut cohort), CnStatus::Ok);
        assert_eq!(cn_cohort_len(cohort), 6);

        let mut net = ptr::null_mut();
        assert_eq!(cn_network_build(cohort, s("overall").as_ptr(), &mut net), CnStatus::Ok);
        assert_eq!(cn_network_node_count(net), 6);
        assert_eq!(cn_network_edge_count(net), 7);

        let mut school = ptr::null_mut();
        assert_eq!(cn_network_build(cohort, s("school").as_ptr(), &mut school), CnStatus::Ok);
        assert_eq!(cn_network_edge_count(school), 3);

        let mut h = 0.0;
        assert_eq!(cn_homophily_fraction(cohort, net, s("school").as_ptr(), &mut h), CnStatus::Ok);
        assert!((h - 600.0 / 7.0).abs() < 1e-12);

        let mut r = CnPermutationResult::default();
        let st = cn_permutation_test(cohort, net, s("school").as_ptr(), ptr::null(), 500, 3, ptr::null(), &mut r);
        assert_eq!(st, CnStatus::Ok);
        assert_eq!((r.observed, r.eligible_edges, r.n_sims), (6, 7, 500));
        assert!(r.p_empirical > 0.0 && r.p_empirical <= 1.0);
        let mut again = CnPermutationResult::default();
        cn_permutation_test(cohort, net, s("school").as_ptr(), ptr::null(), 500, 3, s("marginal_shuffle").as_ptr(), &mut again);
        assert_eq!(r, again);

        cn_network_free(school);
        cn_network_free(net);
        cn_cohort_free(cohort);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let (_dir, c, _) = fixture();
    unsafe {
        let mut cohort = ptr::null_mut();
        let st = cn_cohort_load(c.as_ptr(), s("/nonexistent/n.csv").as_ptr(), &mut cohort);
        assert_ne!(st, CnStatus::Ok);
        assert!(cohort.is_null());
        assert!(last_error().is_some());

        assert_eq!(cn_cohort_load(ptr::null(), c.as_ptr(), &mut cohort), CnStatus::NullPointer);
        assert!(last_error().unwrap().contains("cohort_path"));

        let bad = [0xffu8, 0];
        assert_eq!(cn_cohort_load(bad.as_ptr() as *const c_char, c.as_ptr(), &mut cohort), CnStatus::InvalidUtf8);

        let (_d2, c2, n2) = fixture();
        assert_eq!(cn_cohort_load(c2.as_ptr(), n2.as_ptr(), &mut cohort), CnStatus::Ok);
        assert!(last_error().is_none());
        let mut net = ptr::null_mut();
        assert_eq!(cn_network_build(cohort, s("work").as_ptr(), &mut net), CnStatus::Usage);
        assert!(net.is_null());
        cn_cohort_free(cohort);
        cn_cohort_free(ptr::null_mut());
        cn_network_free(ptr::null_mut());
        cn_string_free(ptr::null_mut());
    }
}

#[test]
fn logistic_intercept_only_is_logit_of_prevalence() {
    let y = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
    let x = [1.0; 10];
    let (mut b, mut se) = ([0.0], [0.0]);
    let st = unsafe { cn_fit_logistic(y.as_ptr(), x.as_ptr(), 10, 1, b.as_mut_ptr(), se.as_mut_ptr()) };
    assert_eq!(st, CnStatus::Ok);
    assert!((b[0] - (0.3f64 / 0.7).ln()).abs() < 1e-10);
    // 1 / sqrt(n p (1 - p))
    assert!((se[0] - 1.0 / (10.0f64 * 0.21).sqrt()).abs() < 1e-8);

    let zeros = [0.0; 10];
    let st = unsafe { cn_fit_logistic(zeros.as_ptr(), x.as_ptr(), 10, 1, b.as_mut_ptr(), se.as_mut_ptr()) };
    assert_eq!(st, CnStatus::Numeric);
}

#[test]
fn fisher_small_table() {
    let mut p = 0.0;
    assert_eq!(unsafe { cn_fisher_exact(3, 1, 1, 3, &mut p) }, CnStatus::Ok);
    // hypergeometric with margins 4/4/4/4: P(3) = P(1) = 16/70, P(4) = P(0) = 1/70
    assert!((p - 34.0 / 70.0).abs() < 1e-12);
    assert_eq!(unsafe { cn_fisher_exact(1, 1, 1, 1, ptr::null_mut()) }, CnStatus::NullPointer);
}

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn header_compiles_and_links_from_c() {
    if !have_cc() {
        eprintln!("skipping: no C compiler on PATH");
        return;
    }
    let header_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let lib = target_dir().join("libcontactnet_ffi.a");
    assert!(lib.exists(), "static library not built at {}", lib.display());
    let (dir, c, n) = fixture();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "contactnet.h"
int main(int argc, char **argv) {
    CnCohort *c = NULL;
    CnNetwork *net = NULL;
    double h = 0.0, p = 0.0;
    if (cn_cohort_load(argv[1], argv[2], &c) != CN_STATUS_OK) return 1;
    if (cn_network_build(c, "overall", &net) != CN_STATUS_OK) return 2;
    if (cn_homophily_fraction(c, net, "sex", &h) != CN_STATUS_OK) return 3;
    if (cn_fisher_exact(3, 1, 1, 3, &p) != CN_STATUS_OK) return 4;
    CnPermutationResult r;
    if (cn_permutation_test(c, net, "school", NULL, 200, 1, NULL, &r) != CN_STATUS_OK) return 5;
    if (cn_network_build(c, "bogus", &net) != CN_STATUS_USAGE) return 6;
    char *e = cn_last_error();
    if (e == NULL) return 7;
    cn_string_free(e);
    printf("%s %zu %.6f %.6f %llu\n", cn_version(), cn_network_edge_count(net), h, p, (unsigned long long)r.observed);
    cn_cohort_free(c);
    return argc == 3 ? 0 : 9;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("abi_check");
    let out = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&header_dir)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(out.status.success(), "cc failed: {}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).arg(c.to_str().unwrap()).arg(n.to_str().unwrap()).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let line = String::from_utf8(run.stdout).unwrap();
    let fields: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(fields[0], env!("CARGO_PKG_VERSION"));
    // net is NULL after the failed build, so the count reads 0
    assert_eq!(fields[1], "0");
    assert_eq!(fields[2], format!("{:.6}", 200.0 / 7.0));
    assert_eq!(fields[4], "6");
}
