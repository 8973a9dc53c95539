use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use arcast::classifier::TrainedModel;
use arcast::types::Invoice;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const RECORD_SCHEMA_VERSION: u32 = 1;

/// Everything persisted for one business: its model plus the invoices it was
/// trained on, which later serve as the customer histories for predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub schema_version: u32,
    pub model_id: String,
    pub business_id: String,
    pub model: TrainedModel,
    pub history: Vec<Invoice>,
}

impl ModelRecord {
    pub fn new(business_id: &str, model: TrainedModel, history: Vec<Invoice>) -> ModelRecord {
        let digest = Sha256::digest(model.to_json().as_bytes());
        ModelRecord {
            schema_version: RECORD_SCHEMA_VERSION,
            model_id: format!("{business_id}-{}", &hex::encode(digest)[..12]),
            business_id: business_id.to_owned(),
            model,
            history,
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("model store io: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt model record {path}: {source}")]
    Corrupt {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("unsupported record schema version {0}")]
    Version(u32),
}

/// Directory of JSON model records with an in-memory snapshot cache.
///
/// Readers receive an `Arc` to an immutable record, so a concurrent `put`
/// never affects a prediction that already holds its snapshot.
#[derive(Debug)]
pub struct ModelStore {
    dir: PathBuf,
    cache: RwLock<HashMap<String, Arc<ModelRecord>>>,
}

impl ModelStore {
    pub fn new(dir: impl Into<PathBuf>) -> ModelStore {
        ModelStore {
            dir: dir.into(),
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, business_id: &str) -> PathBuf {
        self.dir.join(format!("{}.json", hex::encode(business_id.as_bytes())))
    }

    /// Checks that the directory exists (creating it if needed) and is writable.
    pub fn probe(&self) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let mut f = tempfile::NamedTempFile::new_in(&self.dir)?;
        f.write_all(b"ok")?;
        f.close()
    }

    /// Persists atomically (temp file + rename), then publishes to the cache.
    pub fn put(&self, record: ModelRecord) -> Result<Arc<ModelRecord>, StoreError> {
        fs::create_dir_all(&self.dir)?;
        let bytes = serde_json::to_vec_pretty(&record).map_err(io::Error::other)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(&bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(self.path_for(&record.business_id))
            .map_err(|e| e.error)?;
        let record = Arc::new(record);
        self.cache
            .write()
            .expect("cache lock")
            .insert(record.business_id.clone(), Arc::clone(&record));
        Ok(record)
    }

    pub fn get(&self, business_id: &str) -> Result<Option<Arc<ModelRecord>>, StoreError> {
        if let Some(r) = self.cache.read().expect("cache lock").get(business_id) {
            return Ok(Some(Arc::clone(r)));
        }
        let path = self.path_for(business_id);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let record: ModelRecord =
            serde_json::from_slice(&bytes).map_err(|source| StoreError::Corrupt { path, source })?;
        if record.schema_version != RECORD_SCHEMA_VERSION {
            return Err(StoreError::Version(record.schema_version));
        }
        let record = Arc::new(record);
        self.cache
            .write()
            .expect("cache lock")
            .entry(business_id.to_owned())
            .or_insert_with(|| Arc::clone(&record));
        Ok(Some(record))
    }
}
