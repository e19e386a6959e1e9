use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use frontlab::grid::Grid1D;
use frontlab::sim::Snapshot;
use frontlab::Params;

/// 17 significant digits: enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// RFC-4180 table of floats.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            bail!("row of {} values for {} columns in {}", row.len(), header.len(), path.display());
        }
        w.write_record(row.iter().map(|x| fmt_f64(*x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = vec![];
    for rec in r.records() {
        rows.push(rec?.iter().map(|s| s.parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>()?);
    }
    Ok((header, rows))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format: String,
    pub endianness: String,
    pub dtype: String,
    pub grid: Grid1D,
    /// Field names in storage order within one snapshot.
    pub fields: Vec<String>,
    pub times: Vec<f64>,
    /// Flat layout: snapshot, then field, then node.
    pub layout: String,
}

const MAGIC: &str = "frontlab-snapshots-v1";

/// Layout: `u64` LE header length, the JSON header, then `times × fields × n` LE `f64`.
pub fn write_snapshots(path: &Path, grid: &Grid1D, snaps: &[Snapshot]) -> Result<()> {
    let header = SnapshotHeader {
        format: MAGIC.into(),
        endianness: "little".into(),
        dtype: "f64".into(),
        grid: *grid,
        fields: vec!["u".into(), "v".into()],
        times: snaps.iter().map(|s| s.t).collect(),
        layout: "snapshot-major, then field, then node".into(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut buf = Vec::with_capacity(8 + json.len() + snaps.len() * 2 * grid.n * 8);
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    for s in snaps {
        for x in s.u.iter().chain(&s.v) {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshots(path: &Path) -> Result<(SnapshotHeader, Vec<Snapshot>)> {
    let mut bytes = vec![];
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 8 {
        bail!("{} is truncated", path.display());
    }
    let len = u64::from_le_bytes(bytes[..8].try_into()?) as usize;
    let header: SnapshotHeader = serde_json::from_slice(bytes.get(8..8 + len).context("header overruns file")?)?;
    if header.format != MAGIC || header.endianness != "little" {
        bail!("{} is not a snapshot file", path.display());
    }
    let n = header.grid.n;
    let data = &bytes[8 + len..];
    if data.len() != header.times.len() * 2 * n * 8 {
        bail!("{} payload has {} bytes, expected {}", path.display(), data.len(), header.times.len() * 2 * n * 8);
    }
    let vals: Vec<f64> = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let snaps = header
        .times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let base = 2 * n * k;
            Snapshot { t, u: vals[base..base + n].to_vec(), v: vals[base + n..base + 2 * n].to_vec() }
        })
        .collect();
    Ok((header, snaps))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn sha256_str(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub ok: bool,
    pub message: Option<String>,
}

/// Index of a run directory. Output hashes depend only on config and seed; timestamps live in
/// `stages` and are excluded from every hashed file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub code_version: String,
    pub params: Params,
    /// SHA-256 of the canonical JSON form of the configuration.
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub stages: Vec<StageRecord>,
    /// Relative path to SHA-256 of each file written into the run directory.
    pub outputs: BTreeMap<String, String>,
}

pub const MANIFEST: &str = "manifest.json";

impl RunManifest {
    pub fn new(params: &Params, config_json: &str, seeds: Vec<u64>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            params: params.clone(),
            config_sha256: sha256_str(config_json),
            seeds,
            stages: vec![],
            outputs: BTreeMap::new(),
        }
    }

    /// Loads the manifest of `dir` when it belongs to the same configuration.
    pub fn open_or_new(dir: &Path, params: &Params, config_json: &str, seeds: Vec<u64>) -> Self {
        let fresh = Self::new(params, config_json, seeds);
        match read_json::<RunManifest>(&dir.join(MANIFEST)) {
            Ok(m) if m.config_sha256 == fresh.config_sha256 => m,
            _ => fresh,
        }
    }

    /// Re-hashes every listed file plus `files`, relative to `dir`.
    pub fn record_outputs(&mut self, dir: &Path, files: &[PathBuf]) -> Result<()> {
        for f in files {
            let rel = f.strip_prefix(dir).unwrap_or(f).to_string_lossy().replace('\\', "/");
            self.outputs.insert(rel, String::new());
        }
        for (rel, hash) in self.outputs.iter_mut() {
            *hash = sha256_file(&dir.join(rel))?;
        }
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(MANIFEST), self)
    }

    /// Files whose current content no longer matches the recorded hash.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = vec![];
        for (rel, hash) in &self.outputs {
            if sha256_file(&dir.join(rel)).ok().as_deref() != Some(hash.as_str()) {
                bad.push(rel.clone());
            }
        }
        Ok(bad)
    }
}
