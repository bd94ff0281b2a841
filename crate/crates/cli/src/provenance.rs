use std::path::Path;

use serde::Serialize;

use crate::CliResult;

/// Everything needed to reproduce a run: the resolved config (by hash and
/// text), the seed, and the dataset composition.
#[derive(Serialize)]
pub struct RunRecord {
    pub command: String,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub dataset_name: Option<String>,
    pub dataset_total: Option<usize>,
    pub dataset_normal: Option<usize>,
    pub dataset_glaucoma: Option<usize>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunRecord {
    pub fn new(command: &str, config_hash: u64, seed: u64) -> Self {
        RunRecord {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: format!("{config_hash:016x}"),
            seed,
            dataset_name: None,
            dataset_total: None,
            dataset_normal: None,
            dataset_glaucoma: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn with_dataset(mut self, name: &str, total: usize, normal: usize, glaucoma: usize) -> Self {
        self.dataset_name = Some(name.to_string());
        self.dataset_total = Some(total);
        self.dataset_normal = Some(normal);
        self.dataset_glaucoma = Some(glaucoma);
        self
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join("run.json");
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| crate::CliError::Runtime(format!("cannot serialize run record: {e}")))?;
        std::fs::write(&path, text)
            .map_err(|e| crate::CliError::Runtime(format!("cannot write {}: {e}", path.display())))
    }
}
