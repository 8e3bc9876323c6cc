//! The host/guest contract, version 1.
//!
//! This module is the single source of truth for the transport-module ABI:
//! which symbols a guest must export (and with which signatures), which
//! imports the host provides, and the error-code set both sides speak. The
//! prose version lives in `docs/watm-abi-v1.md`; the two are kept in sync by
//! the conformance tests.

use std::fmt;

use crate::error::{Error, Result};

/// ABI major version implemented by this runtime.
pub const ABI_VERSION: i32 = 1;

/// Marker export: a nullary function returning [`ABI_VERSION`].
pub const EXPORT_VERSION: &str = "_water_v1";
pub const EXPORT_INIT: &str = "_water_init";
pub const EXPORT_DIAL: &str = "_water_dial";
pub const EXPORT_ACCEPT: &str = "_water_accept";
pub const EXPORT_ASSOCIATE: &str = "_water_associate";
pub const EXPORT_CANCEL_WITH: &str = "_water_cancel_with";
pub const EXPORT_WORKER: &str = "_water_worker";

/// Import namespace for the runtime-provided functions.
pub const HOST_MODULE: &str = "water_host";
pub const IMPORT_DIAL: &str = "host_dial";
pub const IMPORT_DEFER: &str = "host_defer";
pub const IMPORT_PULL_CONFIG: &str = "pull_config";
pub const IMPORT_LOG: &str = "host_log";

/// Import namespace for descriptor I/O; the runtime implements the subset
/// used for stream shuttling (`fd_read`, `fd_write`, `fd_close`,
/// `poll_oneoff`, `random_get`).
pub const WASI_MODULE: &str = "wasi_snapshot_preview1";

/// On an accept or associate flow the inbound network descriptor is pushed
/// into a fresh instance's table before anything else, so it is always this
/// index (0–2 are reserved for the standard streams).
pub const ACCEPTED_FD: i32 = 3;

/// Status codes crossing the ABI boundary. Zero is success; negative values
/// are failures; non-negative returns from descriptor-producing calls carry
/// the descriptor number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(i32)]
pub enum ErrorCode {
    Ok = 0,
    General = -1,
    InvalidArgument = -2,
    InvalidConfig = -3,
    InvalidFd = -4,
    InvalidFunction = -5,
    DoubleInit = -6,
    FailedIo = -7,
    NotInitialized = -8,
    NetworkUnreachable = -9,
}

impl ErrorCode {
    pub fn from_i32(code: i32) -> Option<ErrorCode> {
        Some(match code {
            0 => ErrorCode::Ok,
            -1 => ErrorCode::General,
            -2 => ErrorCode::InvalidArgument,
            -3 => ErrorCode::InvalidConfig,
            -4 => ErrorCode::InvalidFd,
            -5 => ErrorCode::InvalidFunction,
            -6 => ErrorCode::DoubleInit,
            -7 => ErrorCode::FailedIo,
            -8 => ErrorCode::NotInitialized,
            -9 => ErrorCode::NetworkUnreachable,
            _ => return None,
        })
    }

    pub fn as_i32(self) -> i32 {
        self as i32
    }

    pub fn message(self) -> &'static str {
        match self {
            ErrorCode::Ok => "ok",
            ErrorCode::General => "general error",
            ErrorCode::InvalidArgument => "invalid argument",
            ErrorCode::InvalidConfig => "invalid config",
            ErrorCode::InvalidFd => "invalid fd",
            ErrorCode::InvalidFunction => "invalid function",
            ErrorCode::DoubleInit => "double init",
            ErrorCode::FailedIo => "failed io",
            ErrorCode::NotInitialized => "not initialized",
            ErrorCode::NetworkUnreachable => "network unreachable",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.message())
    }
}

/// Total mapping from any guest-returned integer to a human-readable string.
pub fn errno_to_message(code: i32) -> String {
    match ErrorCode::from_i32(code) {
        Some(known) => known.message().to_owned(),
        None => format!("unknown error {code}"),
    }
}

/// Which endpoint roles a module can play, derived from its export set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RoleCapabilities {
    pub can_dial: bool,
    pub can_listen: bool,
    pub can_relay: bool,
}

impl RoleCapabilities {
    pub fn any(self) -> bool {
        self.can_dial || self.can_listen || self.can_relay
    }
}

impl fmt::Display for RoleCapabilities {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut roles = Vec::new();
        if self.can_dial {
            roles.push("dial");
        }
        if self.can_listen {
            roles.push("listen");
        }
        if self.can_relay {
            roles.push("relay");
        }
        if roles.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&roles.join("+"))
        }
    }
}

/// Core value types that may appear in ABI signatures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreValType {
    I32,
    I64,
    F32,
    F64,
    Other,
}

/// One exported symbol extracted from a module's export section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExportSig {
    Func { name: String, params: Vec<CoreValType>, results: Vec<CoreValType> },
    Memory { name: String },
    Other { name: String },
}

impl ExportSig {
    pub fn name(&self) -> &str {
        match self {
            ExportSig::Func { name, .. }
            | ExportSig::Memory { name }
            | ExportSig::Other { name } => name,
        }
    }

    /// Convenience constructor for a `(i32...) -> i32` style function export.
    pub fn func(name: &str, params: &[CoreValType], results: &[CoreValType]) -> Self {
        ExportSig::Func {
            name: name.to_owned(),
            params: params.to_vec(),
            results: results.to_vec(),
        }
    }
}

// Expected signatures, one entry per ABI export. `_water_cancel_with` is
// optional: a module that never registers a cancel descriptor still
// terminates on EOF.
const EXPECTED_FUNCS: &[(&str, &[CoreValType], &[CoreValType], bool)] = &[
    (EXPORT_VERSION, &[], &[CoreValType::I32], true),
    (EXPORT_INIT, &[], &[CoreValType::I32], true),
    (EXPORT_DIAL, &[CoreValType::I32], &[CoreValType::I32], false),
    (EXPORT_ACCEPT, &[CoreValType::I32], &[CoreValType::I32], false),
    (EXPORT_ASSOCIATE, &[], &[CoreValType::I32], false),
    (EXPORT_CANCEL_WITH, &[CoreValType::I32], &[CoreValType::I32], false),
    (EXPORT_WORKER, &[], &[CoreValType::I32], false),
];

fn find_func<'a>(
    exports: &'a [ExportSig],
    want: &str,
    params: &[CoreValType],
    results: &[CoreValType],
) -> Result<Option<&'a ExportSig>> {
    for export in exports {
        if export.name() != want {
            continue;
        }
        match export {
            ExportSig::Func { params: p, results: r, .. } if p == params && r == results => {
                return Ok(Some(export));
            }
            _ => {
                return Err(Error::InvalidExports(format!(
                    "export `{want}` has the wrong signature"
                )));
            }
        }
    }
    Ok(None)
}

/// Derives role capabilities from a module's export metadata.
///
/// Pure over its input: the same metadata always yields the same
/// capabilities. Requires the version marker and `_water_init`; any ABI name
/// exported with a mismatched signature is rejected.
pub fn validate_exports(exports: &[ExportSig]) -> Result<RoleCapabilities> {
    let mut present = [false; 7];
    for (i, (name, params, results, required)) in EXPECTED_FUNCS.iter().enumerate() {
        present[i] = find_func(exports, name, params, results)?.is_some();
        if *required && !present[i] {
            return Err(Error::InvalidExports(format!("missing required export `{name}`")));
        }
    }
    let worker = present[6];
    let caps = RoleCapabilities {
        can_dial: present[2] && worker,
        can_listen: present[3] && worker,
        can_relay: present[4] && worker,
    };
    if !caps.any() {
        return Err(Error::InvalidExports(
            "module exports no usable role (needs _water_dial/_water_accept/_water_associate plus _water_worker)"
                .to_owned(),
        ));
    }
    Ok(caps)
}

/// True if the metadata contains an exported linear memory named `memory`.
pub fn has_memory_export(exports: &[ExportSig]) -> bool {
    exports
        .iter()
        .any(|e| matches!(e, ExportSig::Memory { name } if name == "memory"))
}

fn val_type(ty: wasmparser::ValType) -> CoreValType {
    match ty {
        wasmparser::ValType::I32 => CoreValType::I32,
        wasmparser::ValType::I64 => CoreValType::I64,
        wasmparser::ValType::F32 => CoreValType::F32,
        wasmparser::ValType::F64 => CoreValType::F64,
        _ => CoreValType::Other,
    }
}

/// Extracts export metadata from a WebAssembly binary without instantiating
/// it. Independent of the execution engine.
pub fn extract_exports(wasm: &[u8]) -> Result<Vec<ExportSig>> {
    use wasmparser::{ExternalKind, Parser, Payload, TypeRef};

    let invalid = |e: wasmparser::BinaryReaderError| Error::InvalidModule(e.to_string());

    let mut func_types: Vec<wasmparser::FuncType> = Vec::new();
    let mut func_type_indices: Vec<u32> = Vec::new();
    let mut exports = Vec::new();

    for payload in Parser::new(0).parse_all(wasm) {
        match payload.map_err(invalid)? {
            Payload::TypeSection(reader) => {
                for group in reader {
                    for ty in group.map_err(invalid)?.into_types() {
                        match ty.composite_type.inner {
                            wasmparser::CompositeInnerType::Func(f) => func_types.push(f),
                            _ => {
                                // Non-function types keep index space aligned.
                                func_types.push(wasmparser::FuncType::new([], []));
                            }
                        }
                    }
                }
            }
            Payload::ImportSection(reader) => {
                for import in reader {
                    let import = import.map_err(invalid)?;
                    if let TypeRef::Func(type_idx) = import.ty {
                        func_type_indices.push(type_idx);
                    }
                }
            }
            Payload::FunctionSection(reader) => {
                for type_idx in reader {
                    func_type_indices.push(type_idx.map_err(invalid)?);
                }
            }
            Payload::ExportSection(reader) => {
                for export in reader {
                    let export = export.map_err(invalid)?;
                    let name = export.name.to_owned();
                    match export.kind {
                        ExternalKind::Func => {
                            let ty = func_type_indices
                                .get(export.index as usize)
                                .and_then(|idx| func_types.get(*idx as usize))
                                .ok_or_else(|| {
                                    Error::InvalidModule(format!(
                                        "export `{name}` references function index {} out of range",
                                        export.index
                                    ))
                                })?;
                            exports.push(ExportSig::Func {
                                name,
                                params: ty.params().iter().copied().map(val_type).collect(),
                                results: ty.results().iter().copied().map(val_type).collect(),
                            });
                        }
                        ExternalKind::Memory => exports.push(ExportSig::Memory { name }),
                        _ => exports.push(ExportSig::Other { name }),
                    }
                }
            }
            _ => {}
        }
    }
    Ok(exports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i32_func(name: &str, nparams: usize) -> ExportSig {
        ExportSig::func(name, &vec![CoreValType::I32; nparams], &[CoreValType::I32])
    }

    fn base() -> Vec<ExportSig> {
        vec![i32_func(EXPORT_VERSION, 0), i32_func(EXPORT_INIT, 0)]
    }

    #[test]
    fn dial_only_export_set() {
        let mut exports = base();
        exports.push(i32_func(EXPORT_DIAL, 1));
        exports.push(i32_func(EXPORT_WORKER, 0));
        let caps = validate_exports(&exports).unwrap();
        assert_eq!(
            caps,
            RoleCapabilities { can_dial: true, can_listen: false, can_relay: false }
        );
    }

    #[test]
    fn missing_marker_is_invalid_function() {
        let exports = vec![
            i32_func(EXPORT_INIT, 0),
            i32_func(EXPORT_DIAL, 1),
            i32_func(EXPORT_WORKER, 0),
        ];
        let err = validate_exports(&exports).unwrap_err();
        assert_eq!(err.code(), ErrorCode::InvalidFunction);
    }

    #[test]
    fn all_roles_export_set() {
        let mut exports = base();
        exports.push(i32_func(EXPORT_DIAL, 1));
        exports.push(i32_func(EXPORT_ACCEPT, 1));
        exports.push(i32_func(EXPORT_ASSOCIATE, 0));
        exports.push(i32_func(EXPORT_WORKER, 0));
        let caps = validate_exports(&exports).unwrap();
        assert!(caps.can_dial && caps.can_listen && caps.can_relay);
    }

    #[test]
    fn worker_required_for_any_role() {
        let mut exports = base();
        exports.push(i32_func(EXPORT_DIAL, 1));
        let err = validate_exports(&exports).unwrap_err();
        assert_eq!(err.code(), ErrorCode::InvalidFunction);
    }

    #[test]
    fn wrong_signature_rejected() {
        let mut exports = base();
        // _water_dial with no parameters.
        exports.push(i32_func(EXPORT_DIAL, 0));
        exports.push(i32_func(EXPORT_WORKER, 0));
        let err = validate_exports(&exports).unwrap_err();
        assert_eq!(err.code(), ErrorCode::InvalidFunction);
    }

    #[test]
    fn validation_is_pure() {
        let mut exports = base();
        exports.push(i32_func(EXPORT_ACCEPT, 1));
        exports.push(i32_func(EXPORT_WORKER, 0));
        let a = validate_exports(&exports).unwrap();
        let b = validate_exports(&exports).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errno_messages_total() {
        assert_eq!(errno_to_message(0), "ok");
        assert_eq!(errno_to_message(-3), "invalid config");
        assert_eq!(errno_to_message(-42), "unknown error -42");
    }

    #[test]
    fn extract_rejects_non_wasm() {
        let err = extract_exports(&[1, 2, 3, 4]).unwrap_err();
        assert_eq!(err.code(), ErrorCode::InvalidArgument);
    }
}
