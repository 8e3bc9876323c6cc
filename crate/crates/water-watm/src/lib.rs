//! The bundled WebAssembly transport modules, embedded at build time.
//!
//! Three real transports — `plain` (identity), `reverse` (per-chunk byte
//! reversal), and `aead` (salted, authenticated ChaCha20-Poly1305 framing) —
//! plus two diagnostics: `trap` (traps on first transformed byte) and
//! `echo_config` (dials out and echoes its config blob verbatim).
//!
//! The C sources live under `c/`; `build.rs` compiles each with
//! `clang --target=wasm32`.

/// Identity transform; all three roles.
pub fn plain() -> &'static [u8] {
    include_bytes!(concat!(env!("OUT_DIR"), "/plain.wasm"))
}

/// Per-chunk byte reversal; all three roles.
pub fn reverse() -> &'static [u8] {
    include_bytes!(concat!(env!("OUT_DIR"), "/reverse.wasm"))
}

/// Authenticated stream transport (`password=` required in config); all
/// three roles.
pub fn aead() -> &'static [u8] {
    include_bytes!(concat!(env!("OUT_DIR"), "/aead.wasm"))
}

/// Diagnostic: traps on the first byte it would transform.
pub fn trap() -> &'static [u8] {
    include_bytes!(concat!(env!("OUT_DIR"), "/trap.wasm"))
}

/// Diagnostic: echoes the config blob over its network connection.
pub fn echo_config() -> &'static [u8] {
    include_bytes!(concat!(env!("OUT_DIR"), "/echo_config.wasm"))
}

/// All bundled modules by name.
pub fn all() -> [(&'static str, &'static [u8]); 5] {
    [
        ("plain", plain()),
        ("reverse", reverse()),
        ("aead", aead()),
        ("trap", trap()),
        ("echo_config", echo_config()),
    ]
}

/// Looks up a bundled module by name.
pub fn by_name(name: &str) -> Option<&'static [u8]> {
    all().into_iter().find(|(n, _)| *n == name).map(|(_, bytes)| bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binaries_start_with_wasm_magic() {
        for (name, bytes) in all() {
            assert!(bytes.len() > 8, "{name} is implausibly small");
            assert_eq!(&bytes[..4], b"\0asm", "{name} missing magic");
            assert_eq!(&bytes[4..8], &[1, 0, 0, 0], "{name} version");
        }
    }
}
