//! Run manifests: command, parameters, and a digest of every emitted file.

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(data: &[u8]) -> String {
    let digest = Sha256::digest(data);
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
    pub tool_version: String,
    pub outputs: Vec<OutputDigest>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64) -> Self {
        Manifest {
            command: command.to_string(),
            parameters: BTreeMap::new(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
        }
    }

    pub fn set_param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.to_string(), value.to_string());
    }

    /// Record an emitted artifact by name and content.
    pub fn record(&mut self, path: &str, bytes: &[u8]) {
        self.outputs.push(OutputDigest {
            path: path.to_string(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_matches_known_vector() {
        // SHA-256 of the empty string.
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn manifest_records_digests_in_order() {
        let mut m = Manifest::new("run", 7);
        m.set_param("eps", 0.2);
        m.record("a.bin", b"abc");
        m.record("b.json", b"{}");
        assert_eq!(m.outputs.len(), 2);
        assert_eq!(m.outputs[0].sha256, sha256_hex(b"abc"));
        let json = m.to_json();
        assert!(json.contains("\"command\": \"run\""));
        assert!(json.contains("\"eps\": \"0.2\""));
    }
}
