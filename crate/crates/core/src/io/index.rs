//! Triplet index: one self-describing JSON record per line.
//!
//! The first line is a header carrying the run parameters; each synthesized
//! label is followed by the sparse maps sampled from it. Paths are relative
//! to the index's directory.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::depth::{DepthFormat, DepthUnit};
use crate::samplers::SamplerSpec;
use crate::synthesis::SynthesisProvenance;

pub const INDEX_SCHEMA_VERSION: u32 = 1;
pub const INDEX_FILE_NAME: &str = "index.jsonl";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexHeader {
    pub schema_version: u32,
    /// Manifest the run consumed, as given on the command line.
    pub manifest: PathBuf,
    pub global_seed: u64,
    /// Full run configuration.
    pub config: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub schema_version: u32,
    pub id: String,
    pub entry_index: usize,
    pub entry_id: String,
    pub draw: usize,
    pub path: PathBuf,
    pub format: DepthFormat,
    pub unit: DepthUnit,
    pub valid_count: usize,
    pub provenance: SynthesisProvenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseRecord {
    pub schema_version: u32,
    pub id: String,
    pub label_id: String,
    pub path: PathBuf,
    pub format: DepthFormat,
    pub unit: DepthUnit,
    /// Sampler with every randomized parameter resolved.
    pub sampler: SamplerSpec,
    pub seed: u64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IndexLine {
    Header(IndexHeader),
    Label(LabelRecord),
    Sparse(SparseRecord),
}

/// One pseudo label with the sparse maps sampled from it.
#[derive(Clone, Debug, PartialEq)]
pub struct TripletRecord {
    pub label: LabelRecord,
    pub sparse: Vec<SparseRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TripletIndex {
    pub header: IndexHeader,
    pub triplets: Vec<TripletRecord>,
    /// Directory that record paths are relative to.
    pub root: PathBuf,
}

impl TripletIndex {
    /// Label plus sparse records.
    pub fn record_count(&self) -> usize {
        self.triplets.iter().map(|t| 1 + t.sparse.len()).sum()
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.root.join(path)
    }
}

fn write_line(out: &mut impl Write, line: &IndexLine) -> Result<()> {
    serde_json::to_writer(&mut *out, line).map_err(|e| Error::Io(e.into()))?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Sequential index writer. Each triplet is flushed as a unit.
pub struct IndexWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl IndexWriter {
    /// Creates (truncating) `out_dir/index.jsonl` and writes the header.
    pub fn create(out_dir: &Path, header: &IndexHeader) -> Result<Self> {
        let path = out_dir.join(INDEX_FILE_NAME);
        let mut out = BufWriter::new(File::create(&path)?);
        write_line(&mut out, &IndexLine::Header(header.clone()))?;
        out.flush()?;
        Ok(Self { out, path })
    }

    /// Opens an existing index for appending more triplets.
    pub fn append_to(index_path: &Path) -> Result<Self> {
        let file = OpenOptions::new().append(true).open(index_path)?;
        Ok(Self { out: BufWriter::new(file), path: index_path.to_path_buf() })
    }

    pub fn append(&mut self, triplet: &TripletRecord) -> Result<()> {
        write_line(&mut self.out, &IndexLine::Label(triplet.label.clone()))?;
        for s in &triplet.sparse {
            write_line(&mut self.out, &IndexLine::Sparse(s.clone()))?;
        }
        self.out.flush()?;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// Writes a complete index for `triplets` in the given order; returns its path.
pub fn write_triplets(out_dir: &Path, header: &IndexHeader, triplets: &[TripletRecord]) -> Result<PathBuf> {
    let mut w = IndexWriter::create(out_dir, header)?;
    for t in triplets {
        w.append(t)?;
    }
    Ok(w.path)
}

pub fn read_index(path: impl AsRef<Path>) -> Result<TripletIndex> {
    let path = path.as_ref();
    let corrupt = |line: usize, reason: String| Error::CorruptFile {
        path: path.to_path_buf(),
        reason: format!("line {line}: {reason}"),
    };
    let reader = BufReader::new(File::open(path).map_err(|e| Error::io_at(path, e))?);
    let mut header = None;
    let mut triplets: Vec<TripletRecord> = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: IndexLine = serde_json::from_str(&line).map_err(|e| corrupt(n + 1, e.to_string()))?;
        match parsed {
            IndexLine::Header(h) if header.is_none() && n == 0 => {
                if h.schema_version != INDEX_SCHEMA_VERSION {
                    return Err(corrupt(n + 1, format!("unsupported schema_version {}", h.schema_version)));
                }
                header = Some(h);
            }
            IndexLine::Header(_) => return Err(corrupt(n + 1, "header must be the first line".into())),
            IndexLine::Label(l) => triplets.push(TripletRecord { label: l, sparse: Vec::new() }),
            IndexLine::Sparse(s) => match triplets.last_mut() {
                Some(t) if t.label.id == s.label_id => t.sparse.push(s),
                _ => return Err(corrupt(n + 1, format!("sparse record {} does not follow its label", s.id))),
            },
        }
    }
    let header = header.ok_or_else(|| corrupt(1, "missing header".into()))?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(TripletIndex { header, triplets, root })
}
