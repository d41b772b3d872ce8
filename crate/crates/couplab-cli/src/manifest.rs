use serde::Serialize;
use serde_json::Value;

/// Self-description embedded in every report. Deliberately carries no
/// timestamp and no worker count: neither may influence the bytes produced,
/// and the manifest must be identical across reruns.
#[derive(Serialize, Clone)]
pub struct RunManifest {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub params: Value,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &'static str, seed: u64, params: Value) -> RunManifest {
        RunManifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            params,
            outputs: Vec::new(),
        }
    }

    pub fn json(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }

    /// The comment form used at the top of CSV and dump outputs.
    pub fn comment_line(&self) -> String {
        format!("# manifest: {}", self.json())
    }
}
