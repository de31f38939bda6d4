//! Builds a small C program against the generated header and the static
//! library. Skipped when no C compiler is on PATH.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "wqed.h"

int main(void) {
    WqedEmitter *e = NULL;
    if (wqed_emitter_new(0, 0.1, 1.0, 1.0, 6.0, &e) != WQED_STATUS_INVALID_ARGUMENT) return 10;
    if (wqed_last_error() == NULL) return 11;
    if (wqed_emitter_new(4, 0.1, 1.0, 1.0, 6.283185307179586, &e) != WQED_STATUS_OK) return 12;
    WqedOptimalPoint opt;
    if (wqed_find_optimal(e, &opt) != WQED_STATUS_OK) return 13;
    double pops[64];
    size_t n = 0;
    if (wqed_markov_population(e, 10.0, 0.5, pops, 64, &n) != WQED_STATUS_OK || n != 21) return 14;
    if (wqed_emitter_set_omega(e, opt.omega_opt) != WQED_STATUS_OK) return 15;
    if (wqed_markov_population(e, 10.0, 0.5, pops, 64, &n) != WQED_STATUS_OK) return 16;
    if (fabs(pops[20] - exp(-10.0 * opt.rate)) > 1e-12) return 17;
    printf("%s %.6f\n", wqed_version(), opt.phi_opt);
    wqed_emitter_free(e);
    return 0;
}
"#;

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/<this test>
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links() {
    if !have_cc() {
        eprintln!("no C compiler, skipping");
        return;
    }
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let lib = target_dir().join("libwqed_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built, skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let text = String::from_utf8(run.stdout).unwrap();
    assert!(text.starts_with(env!("CARGO_PKG_VERSION")));
}
