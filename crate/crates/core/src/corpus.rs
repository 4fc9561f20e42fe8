//! On-disk record formats shared by the CLI stages.
//!
//! Snippet, AFG, truth, and external-vector corpora are line-delimited
//! JSON; the embedding matrix is a plain-text file with an `n d` header
//! and one `id\tv1 v2 ...` row per example; clustering results and
//! detection reports serialize as single JSON documents. Writes go
//! through a temp file and rename so failures leave no partial output.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::ClusteringResult;
use crate::embed::ExternalProvider;
use crate::eval::DetectionReport;
use crate::pretrain::EpochStats;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}:{line}: {source}")]
    Record { path: PathBuf, line: usize, source: serde_json::Error },
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One raw snippet: `api` is the target spec when known up front.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnippetRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api: Option<String>,
    pub code: String,
}

/// One AFG in the textual edge-list format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AfgRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api: Option<String>,
    pub afg_text: String,
}

/// Ground-truth label for evaluation; `misuse` is the positive class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub id: String,
    pub misuse: bool,
}

/// Precomputed node vector keyed by the 64-bit FNV-1a hash of the trimmed
/// line text, hex-encoded to survive JSON number precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalVectorRecord {
    pub text_hash: String,
    pub vector: Vec<f64>,
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let file = File::open(path).map_err(CorpusError::Io)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| CorpusError::Record {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), CorpusError> {
    write_atomic(path, |w| {
        for r in records {
            serde_json::to_writer(&mut *w, r).map_err(io::Error::other)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
}

/// Load external vectors into a provider of the given dimension.
pub fn load_external_provider(
    path: &Path,
    dim: usize,
) -> Result<ExternalProvider, CorpusError> {
    let records: Vec<ExternalVectorRecord> = read_jsonl(path)?;
    let mut table = HashMap::with_capacity(records.len());
    for r in &records {
        let hash = u64::from_str_radix(r.text_hash.trim_start_matches("0x"), 16).map_err(
            |e| CorpusError::Malformed {
                path: path.to_path_buf(),
                message: format!("bad text_hash {:?}: {e}", r.text_hash),
            },
        )?;
        table.insert(hash, r.vector.clone());
    }
    ExternalProvider::new(dim, table).map_err(|e| CorpusError::Malformed {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Write an embedding matrix: `n d` header, then `id\tv1 v2 ...` rows.
pub fn write_matrix(
    path: &Path,
    ids: &[String],
    matrix: &Array2<f64>,
) -> Result<(), CorpusError> {
    assert_eq!(ids.len(), matrix.nrows(), "one id per embedding row");
    write_atomic(path, |w| {
        writeln!(w, "{} {}", matrix.nrows(), matrix.ncols())?;
        for (id, row) in ids.iter().zip(matrix.rows()) {
            let vals: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            writeln!(w, "{id}\t{}", vals.join(" "))?;
        }
        Ok(())
    })
}

pub fn read_matrix(path: &Path) -> Result<(Vec<String>, Array2<f64>), CorpusError> {
    let malformed = |message: String| CorpusError::Malformed {
        path: path.to_path_buf(),
        message,
    };
    let file = File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| malformed("empty matrix file".into()))??;
    let mut parts = header.split_whitespace();
    let n: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| malformed("bad header row".into()))?;
    let d: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| malformed("bad header row".into()))?;
    let mut ids = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * d);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (id, rest) = line
            .split_once('\t')
            .ok_or_else(|| malformed(format!("row {} lacks an id column", i + 2)))?;
        let row: Result<Vec<f64>, _> =
            rest.split_whitespace().map(|t| t.parse::<f64>()).collect();
        let row = row.map_err(|e| malformed(format!("row {}: {e}", i + 2)))?;
        if row.len() != d {
            return Err(malformed(format!(
                "row {} has {} values, expected {d}",
                i + 2,
                row.len()
            )));
        }
        ids.push(id.to_string());
        data.extend(row);
    }
    if ids.len() != n {
        return Err(malformed(format!("{} rows, header said {n}", ids.len())));
    }
    let matrix = Array2::from_shape_vec((n, d), data)
        .map_err(|e| malformed(e.to_string()))?;
    Ok((ids, matrix))
}

pub fn write_clustering(path: &Path, clustering: &ClusteringResult) -> Result<(), CorpusError> {
    write_json(path, clustering)
}

pub fn read_clustering(path: &Path) -> Result<ClusteringResult, CorpusError> {
    read_json(path)
}

pub fn write_report(path: &Path, report: &DetectionReport) -> Result<(), CorpusError> {
    write_json(path, report)
}

pub fn read_report(path: &Path) -> Result<DetectionReport, CorpusError> {
    read_json(path)
}

pub fn write_history(path: &Path, history: &[EpochStats]) -> Result<(), CorpusError> {
    write_jsonl(path, history)
}

pub fn read_history(path: &Path) -> Result<Vec<EpochStats>, CorpusError> {
    read_jsonl(path)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CorpusError> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::other)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CorpusError> {
    let file = File::open(path)?;
    serde_json::from_reader(BufReader::new(file)).map_err(|source| CorpusError::Record {
        path: path.to_path_buf(),
        line: 0,
        source,
    })
}

/// Write through a sibling temp file and rename into place; on failure the
/// temp file is removed and the destination never appears half-written.
pub fn write_atomic(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<(), CorpusError> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        f(&mut w)?;
        w.flush()?;
        Ok(())
    })();
    match result {
        Ok(()) => {
            fs::rename(&tmp, path)?;
            Ok(())
        }
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(CorpusError::Io(e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn jsonl_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("snips.jsonl");
        let records = vec![
            SnippetRecord { id: "a".into(), api: None, code: "void f() { }".into() },
            SnippetRecord {
                id: "b".into(),
                api: Some("Reader.read".into()),
                code: "void g(Reader r) {\n  r.read();\n}".into(),
            },
        ];
        write_jsonl(&path, &records).unwrap();
        let back: Vec<SnippetRecord> = read_jsonl(&path).unwrap();
        assert_eq!(records, back);
    }

    #[test]
    fn jsonl_reports_offending_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        fs::write(&path, "{\"id\":\"a\",\"code\":\"x\"}\nnot json\n").unwrap();
        let err = read_jsonl::<SnippetRecord>(&path).unwrap_err();
        match err {
            CorpusError::Record { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("emb.mat");
        let ids = vec!["x".to_string(), "y".to_string(), "z".to_string()];
        let m = Array2::from_shape_fn((3, 4), |(i, j)| (i as f64 + 1.0) / (j as f64 + 3.0));
        write_matrix(&path, &ids, &m).unwrap();
        let (ids2, m2) = read_matrix(&path).unwrap();
        assert_eq!(ids, ids2);
        assert_eq!(m, m2);
    }

    #[test]
    fn matrix_header_mismatch_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("emb.mat");
        fs::write(&path, "2 3\na\t1 2 3\n").unwrap();
        assert!(matches!(read_matrix(&path), Err(CorpusError::Malformed { .. })));
    }

    #[test]
    fn atomic_write_leaves_no_partial_file() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("out.json");
        let err = write_atomic(&path, |w| {
            w.write_all(b"partial")?;
            Err(io::Error::other("simulated failure"))
        });
        assert!(err.is_err());
        assert!(!path.exists());
        assert!(fs::read_dir(dir.path()).unwrap().next().is_none(), "temp file left behind");
    }
}
