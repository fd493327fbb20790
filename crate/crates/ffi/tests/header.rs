//! Compiles and runs a C program against the generated header and static library.

use std::path::{Path, PathBuf};
use std::process::Command;

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps/
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/qcorner_lab.h")).unwrap();
    for sym in [
        "typedef struct QclMatrix QclMatrix",
        "QCL_STATUS_NUMERICAL = 3",
        "qcl_last_error_message(void)",
        "qcl_map_certify_q_positive(",
        "qcl_gauge_describe(",
        "qcl_weight_moments(",
    ] {
        assert!(h.contains(sym), "missing {sym}");
    }
}

#[test]
fn c_program_links_and_runs() {
    let lib = target_dir().join("libqcorner_lab_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "qcorner_lab.h"
int main(void) {
    QclWeight *w = NULL;
    double ni = 0, nl = 0;
    if (qcl_weight_indicator(0.0, 1.0, &w) != QCL_STATUS_OK) return 10;
    if (qcl_weight_moments(w, 0.5, &ni, &nl) != QCL_STATUS_OK) return 11;
    qcl_weight_free(w);
    QclMatrix *m = NULL;
    if (qcl_matrix_new(2, 2, NULL, &m) != QCL_STATUS_NULL_POINTER) return 12;
    printf("%.6f %.6f %s\n", ni, nl, qcl_last_error_message());
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("main");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("0.974077 0.474077 data is NULL"), "{text}");
}
