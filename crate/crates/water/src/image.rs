//! Validated transport-module images and their digest pinning.

use std::path::Path;
use std::sync::Arc;

use sha2::{Digest, Sha256};
use wasmi::{Engine, Module};

use crate::abi::{self, ExportSig, RoleCapabilities};
use crate::error::{Error, Result};

struct ImageInner {
    engine: Engine,
    module: Module,
    binary: Vec<u8>,
    digest: [u8; 32],
    capabilities: RoleCapabilities,
    exports: Vec<ExportSig>,
}

/// A WebAssembly transport module: validated binary, SHA-256 digest, and the
/// roles its export set allows. Cheap to clone; the compiled module is
/// shared across instances.
#[derive(Clone)]
pub struct WATMImage {
    inner: Arc<ImageInner>,
}

impl std::fmt::Debug for WATMImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WATMImage")
            .field("digest", &self.digest_hex())
            .field("capabilities", &self.inner.capabilities)
            .field("size", &self.inner.binary.len())
            .finish()
    }
}

impl WATMImage {
    /// Parses and validates a module binary.
    pub fn load(binary: impl Into<Vec<u8>>) -> Result<WATMImage> {
        let binary = binary.into();
        let exports = abi::extract_exports(&binary)?;
        let capabilities = abi::validate_exports(&exports)?;
        if !abi::has_memory_export(&exports) {
            return Err(Error::InvalidExports(
                "module does not export its linear memory as `memory`".to_owned(),
            ));
        }
        let digest: [u8; 32] = Sha256::digest(&binary).into();

        let engine = Engine::default();
        let module =
            Module::new(&engine, &binary[..]).map_err(|e| Error::InvalidModule(e.to_string()))?;

        Ok(WATMImage {
            inner: Arc::new(ImageInner { engine, module, binary, digest, capabilities, exports }),
        })
    }

    /// Loads with a digest pin; refuses the image unless SHA-256(binary)
    /// matches.
    pub fn load_pinned(binary: impl Into<Vec<u8>>, expected: &[u8; 32]) -> Result<WATMImage> {
        let image = WATMImage::load(binary)?;
        if &image.inner.digest != expected {
            return Err(Error::DigestMismatch {
                expected: hex::encode(expected),
                actual: image.digest_hex(),
            });
        }
        Ok(image)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<WATMImage> {
        WATMImage::load(std::fs::read(path)?)
    }

    pub fn from_file_pinned(path: impl AsRef<Path>, expected: &[u8; 32]) -> Result<WATMImage> {
        WATMImage::load_pinned(std::fs::read(path)?, expected)
    }

    pub fn digest(&self) -> &[u8; 32] {
        &self.inner.digest
    }

    pub fn digest_hex(&self) -> String {
        hex::encode(self.inner.digest)
    }

    pub fn capabilities(&self) -> RoleCapabilities {
        self.inner.capabilities
    }

    pub fn exports(&self) -> &[ExportSig] {
        &self.inner.exports
    }

    pub fn binary(&self) -> &[u8] {
        &self.inner.binary
    }

    /// Sidecar manifest for this image.
    pub fn manifest(&self, name: &str) -> Manifest {
        Manifest { digest_hex: self.digest_hex(), name: name.to_owned(), abi: abi::ABI_VERSION }
    }

    pub(crate) fn engine(&self) -> &Engine {
        &self.inner.engine
    }

    pub(crate) fn module(&self) -> &Module {
        &self.inner.module
    }
}

/// Optional image sidecar: `digest=<hex64>`, `name=<string>`, `abi=1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub digest_hex: String,
    pub name: String,
    pub abi: i32,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Manifest> {
        let mut digest_hex = None;
        let mut name = None;
        let mut abi_version = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::InvalidArgument(format!("manifest line `{line}` is not key=value")));
            };
            match key {
                "digest" => digest_hex = Some(value.to_owned()),
                "name" => name = Some(value.to_owned()),
                "abi" => {
                    abi_version = Some(value.parse::<i32>().map_err(|_| {
                        Error::InvalidArgument(format!("manifest abi `{value}` is not an integer"))
                    })?);
                }
                _ => {}
            }
        }
        let digest_hex =
            digest_hex.ok_or_else(|| Error::InvalidArgument("manifest missing digest=".to_owned()))?;
        if digest_hex.len() != 64 || !digest_hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(Error::InvalidArgument("manifest digest is not 64 hex chars".to_owned()));
        }
        Ok(Manifest {
            digest_hex,
            name: name.unwrap_or_default(),
            abi: abi_version
                .ok_or_else(|| Error::InvalidArgument("manifest missing abi=".to_owned()))?,
        })
    }

    pub fn render(&self) -> String {
        format!("digest={}\nname={}\nabi={}\n", self.digest_hex, self.name, self.abi)
    }

    pub fn digest_bytes(&self) -> Result<[u8; 32]> {
        let bytes = hex::decode(&self.digest_hex)
            .map_err(|_| Error::InvalidArgument("manifest digest is not hex".to_owned()))?;
        bytes
            .try_into()
            .map_err(|_| Error::InvalidArgument("manifest digest is not 32 bytes".to_owned()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_roundtrip() {
        let manifest = Manifest {
            digest_hex: "ab".repeat(32),
            name: "plain".to_owned(),
            abi: 1,
        };
        let parsed = Manifest::parse(&manifest.render()).unwrap();
        assert_eq!(parsed, manifest);
    }

    #[test]
    fn manifest_requires_digest() {
        assert!(Manifest::parse("name=x\nabi=1\n").is_err());
        assert!(Manifest::parse("digest=zz\nabi=1\n").is_err());
    }

    #[test]
    fn load_rejects_garbage() {
        let err = WATMImage::load(vec![0, 1, 2, 3]).unwrap_err();
        assert_eq!(err.code(), crate::abi::ErrorCode::InvalidArgument);
    }
}
