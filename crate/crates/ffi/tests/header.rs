use std::path::Path;
use std::process::Command;

fn header() -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("currentcoh.h");
    std::fs::read_to_string(path).expect("header generated by build.rs")
}

#[test]
fn header_declares_the_api() {
    let h = header();
    for name in [
        "cc_algebra_new",
        "cc_algebra_free",
        "cc_algebra_dim",
        "cc_algebra_rank",
        "cc_algebra_exponents",
        "cc_truncated_table",
        "cc_super_table",
        "cc_table_get",
        "cc_table_free",
        "cc_truncated_verify",
        "cc_super_verify",
        "cc_last_error_message",
        "cc_version",
        "CC_STATUS_OK",
        "CC_STATUS_VERIFICATION_FAILED",
        "typedef struct CcAlgebra CcAlgebra",
    ] {
        assert!(h.contains(name), "missing {name}");
    }
    assert!(h.contains("#ifndef CURRENTCOH_H"));
}

#[test]
fn header_compiles_as_c() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("currentcoh.h");
    match Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99"]).arg(&path).status() {
        Ok(s) => assert!(s.success(), "cc rejected the header"),
        Err(_) => eprintln!("no C compiler found; skipping syntax check"),
    }
}
