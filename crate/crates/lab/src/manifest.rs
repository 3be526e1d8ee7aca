//! Run manifests: inputs, versions and SHA-256 digests of every output.
//! Nothing time- or machine-dependent goes in, so equal runs give equal
//! manifests.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in d {
        let _ = write!(s, "{b:02x}");
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    pub outputs: Vec<OutputEntry>,
}

impl Manifest {
    pub fn digest_of(&self, path: &str) -> Option<&str> {
        self.outputs.iter().find(|o| o.path == path).map(|o| o.sha256.as_str())
    }

    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command = \"{}\"", self.command);
        let _ = writeln!(s, "seed = \"{}\"", self.seed);
        let _ = writeln!(s, "config_sha256 = \"{}\"", self.config_sha256);
        let _ = writeln!(s, "lab_version = \"{}\"", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "core_version = \"{}\"", meanfield_core::VERSION);
        for o in &self.outputs {
            let _ = write!(
                s,
                "\n[[outputs]]\npath = \"{}\"\nbytes = {}\nsha256 = \"{}\"\n",
                o.path, o.bytes, o.sha256
            );
        }
        s
    }
}
