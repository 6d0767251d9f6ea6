//! Compiles and runs a C program against the generated header and the
//! shared library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "ghz_repeater.h"

int main(void) {
    GrChannel *ch = NULL;
    if (gr_channel_new_preset("paper-2022", &ch) != GR_STATUS_OK) return 1;
    double t = 0.0;
    if (gr_fiber_transmittance(27.14, 27.14, &t) != GR_STATUS_OK) return 2;
    if (fabs(t - exp(-1.0)) > 1e-15) return 3;
    GrYieldPoint p;
    if (gr_channel_set_distance(ch, 100.0) != GR_STATUS_OK) return 4;
    if (gr_yield_analytic(ch, 12, &p) != GR_STATUS_OK) return 5;
    if (!(p.yield_ > 0.0 && p.yield_ <= p.q) || p.n_users != 12) return 6;
    if (gr_channel_new_preset("nope", &ch) != GR_STATUS_INVALID_ARGUMENT) return 7;
    printf("%s\n", gr_last_error_message());
    gr_channel_free(ch);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    assert!(
        lib_dir.join("libghz_repeater_ffi.so").exists(),
        "shared library not found in {}",
        lib_dir.display()
    );
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    let bin = tmp.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&src)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lghz_repeater_ffi")
        .arg("-lm")
        .arg("-o")
        .arg(&bin)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let out = Command::new(&bin).env("LD_LIBRARY_PATH", &lib_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("nope"));
}
