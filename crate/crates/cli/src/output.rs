use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const TOOL: &str = "gyrocal";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance stamped on every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config_sha256: String,
    pub rng: &'static str,
}

impl Meta {
    pub fn new(seed: Option<u64>, config: &impl Serialize) -> Self {
        let bytes = serde_json::to_vec(config).expect("config serializes");
        Meta {
            tool: TOOL,
            version: VERSION,
            seed,
            config_sha256: hex::encode(Sha256::digest(&bytes)),
            rng: gyrocal::simulator::RNG_NAME,
        }
    }

    /// Single-line form for CSV comment headers.
    pub fn comment(&self) -> String {
        let mut s = format!("{} {}", self.tool, self.version);
        if let Some(seed) = self.seed {
            let _ = write!(s, " seed={seed}");
        }
        let _ = write!(s, " config_sha256={} rng={}", self.config_sha256, self.rng);
        s
    }
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    meta: &'a Meta,
    #[serde(flatten)]
    body: &'a T,
}

pub struct OutDir {
    pub dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    /// Pretty JSON object with a leading `meta` field; `body` must serialize as an object.
    pub fn write_json(&mut self, name: &str, meta: &Meta, body: &impl Serialize) -> Result<(), CliError> {
        let text = stamped_json(meta, body);
        self.write_text(name, &(text + "\n"))
    }

    /// CSV with a `# ...` metadata line ahead of the header.
    pub fn write_csv(&mut self, name: &str, meta: &Meta, table: &str) -> Result<(), CliError> {
        self.write_text(name, &format!("# {}\n{table}", meta.comment()))
    }
}

pub fn stamped_json(meta: &Meta, body: &impl Serialize) -> String {
    serde_json::to_string_pretty(&Stamped { meta, body }).expect("report serializes")
}

/// `{:?}` for finite values (shortest round-trip form), empty for missing ones.
pub fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}
