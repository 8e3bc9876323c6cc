//! Compiles the guest transport modules to wasm32 with clang + wasm-ld.
//!
//! Each module is one clang invocation over freestanding C (no libc); the
//! binaries land in OUT_DIR and are embedded by lib.rs.

use std::env;
use std::path::{Path, PathBuf};
use std::process::Command;

const COMMON_SOURCES: &[&str] = &["c/support.c", "c/sdk.c"];

const MODULES: &[(&str, &[&str])] = &[
    ("plain", &["c/plain.c"]),
    ("reverse", &["c/reverse.c"]),
    ("aead", &["c/aead.c", "c/crypto.c"]),
    ("trap", &["c/trap.c"]),
    ("echo_config", &["c/support.c", "c/echo_config.c"]),
];

/// echo_config is standalone (own exports); the rest link the SDK.
fn sources_for(name: &str, extra: &[&str]) -> Vec<String> {
    let mut sources: Vec<String> = Vec::new();
    if name != "echo_config" {
        sources.extend(COMMON_SOURCES.iter().map(|s| s.to_string()));
    }
    sources.extend(extra.iter().map(|s| s.to_string()));
    sources
}

fn clang() -> String {
    env::var("WATM_CLANG").unwrap_or_else(|_| "clang".to_string())
}

fn compile(name: &str, sources: &[String], out_dir: &Path) {
    let out = out_dir.join(format!("{name}.wasm"));
    let mut cmd = Command::new(clang());
    cmd.args([
        "--target=wasm32",
        "-std=c11",
        "-O2",
        "-ffreestanding",
        "-fno-builtin",
        "-fno-strict-aliasing",
        "-fvisibility=hidden",
        "-nostdlib",
        "-Wall",
        "-Wextra",
        "-Werror",
        "-Wl,--no-entry",
        "-Wl,--stack-first",
        "-Wl,-z,stack-size=131072",
    ]);
    cmd.args(sources);
    cmd.arg("-o").arg(&out);
    let output = cmd.output().unwrap_or_else(|err| {
        panic!(
            "failed to run `{}` (set WATM_CLANG to a clang with wasm32 support): {err}",
            clang()
        )
    });
    if !output.status.success() {
        panic!(
            "compiling {name}.wasm failed:\n{}\n{}",
            String::from_utf8_lossy(&output.stdout),
            String::from_utf8_lossy(&output.stderr)
        );
    }
}

fn main() {
    println!("cargo:rerun-if-changed=c");
    println!("cargo:rerun-if-env-changed=WATM_CLANG");
    let out_dir = PathBuf::from(env::var("OUT_DIR").expect("OUT_DIR set by cargo"));
    for (name, extra) in MODULES {
        compile(name, &sources_for(name, extra), &out_dir);
    }
}
