//! Compiles and runs a real C program against the generated header and the
//! cdylib, proving the ABI end to end.

use std::path::PathBuf;
use std::process::Command;

fn target_dir() -> PathBuf {
    // tests live in target/<profile>/deps; the cdylib sits one level up.
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "drr_gossip.h"

int main(void) {
    DrrgGraph *g = NULL;
    if (drrg_graph_complete(64, &g) != DRRG_STATUS_OK) return 1;
    if (drrg_graph_node_count(g) != 64) return 2;

    DrrgResult *r = NULL;
    DrrgStatus status =
        drrg_run(g, DRRG_PROTOCOL_DRR_GOSSIP_MAX, 0.0, 9, "constant:3.5", &r);
    if (status != DRRG_STATUS_OK) return 3;
    double answer = 0.0;
    if (drrg_result_answer(r, 17, &answer) != DRRG_STATUS_OK) return 4;
    if (answer != 3.5) return 5;
    if (!drrg_result_correct(r)) return 6;

    char *json = NULL;
    if (drrg_result_metrics_json(r, &json) != DRRG_STATUS_OK) return 7;
    printf("%s\n", json);
    drrg_string_free(json);

    drrg_result_free(r);
    drrg_graph_free(g);

    /* error path: zero-node graph */
    DrrgGraph *bad = NULL;
    if (drrg_graph_complete(0, &bad) != DRRG_STATUS_INVALID_ARGUMENT) return 8;
    char msg[128];
    drrg_last_error_message(msg, sizeof msg);
    fprintf(stderr, "expected error: %s\n", msg);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    let bin = tmp.path().join("smoke");
    std::fs::write(&src, C_PROGRAM).unwrap();

    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let libdir = target_dir();
    let compile = Command::new("cc")
        .arg(&src)
        .arg("-o")
        .arg(&bin)
        .arg(format!("-I{}", include.display()))
        .arg(format!("-L{}", libdir.display()))
        .arg("-ldrr_gossip_ffi")
        .output()
        .expect("cc not available");
    assert!(
        compile.status.success(),
        "compile failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&bin)
        .env("LD_LIBRARY_PATH", &libdir)
        .output()
        .expect("running the C smoke test failed");
    assert!(
        run.status.success(),
        "exit {:?}, stderr: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stderr)
    );
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("\"protocol\":\"drr-gossip-max\""));
}
