use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use emofit::embedding_io::EmbeddingFormat;
use emofit::geometry::GraphStats;
use emofit::lexicon::ConstraintStats;
use emofit::trainer::EpochRecord;
use emofit::{LoadStats, ObjectiveBreakdown, TrainingConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Everything needed to reproduce a retrofitting run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: ResolvedConfig,
    pub inputs: Vec<InputFile>,
    pub outputs: Outputs,
    pub embeddings: LoadStats,
    pub constraints: ConstraintStats,
    pub sentiment_rows_dropped: usize,
    pub neighborhoods: NeighborhoodSummary,
    pub initial_objective: ObjectiveBreakdown,
    pub final_objective: ObjectiveBreakdown,
    pub epochs: Vec<EpochRecord>,
    pub timings_ms: Timings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub input_format: EmbeddingFormat,
    pub output_format: EmbeddingFormat,
    pub lowercase: bool,
    /// Vectors are used as loaded; no unit-length normalization is applied.
    pub normalization: String,
    pub emotion_model: Vec<(String, String)>,
    pub checkpoint_every: Option<usize>,
    pub training: TrainingConfig,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFile {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outputs {
    pub vectors: PathBuf,
    pub epoch_log: Option<PathBuf>,
    pub checkpoints: Vec<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodSummary {
    pub radius: f64,
    pub scope: String,
    pub rows_in_scope: usize,
    pub cache: Option<PathBuf>,
    pub cache_hit: bool,
    pub graph: GraphStats,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub load: u128,
    pub constraints: u128,
    pub neighborhoods: u128,
    pub training: u128,
    pub write: u128,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")
            .with_context(|| format!("cannot write manifest {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file =
            File::open(path).with_context(|| format!("cannot open manifest {}", path.display()))?;
        serde_json::from_reader(BufReader::new(file))
            .with_context(|| format!("invalid manifest {}", path.display()))
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file
            .read(&mut buf)
            .with_context(|| format!("cannot read {}", path.display()))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{:02x}", b))
        .collect())
}

pub fn input_file(role: &str, path: &Path) -> Result<InputFile> {
    Ok(InputFile {
        role: role.to_string(),
        path: path.to_path_buf(),
        sha256: sha256_file(path)?,
    })
}
