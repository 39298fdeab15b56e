use std::fs;
use std::path::{Path, PathBuf};

use super::HarnessError;
use crate::rng::{self, Stream};
use crate::state::{NamedArray, StateDict};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "seditor-checkpoint";

/// On-disk training state: a text manifest naming every array with its shape
/// and offset, plus a blob of little-endian doubles next to it.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config_text: String,
    pub arrays: StateDict,
    pub streams: Vec<(String, Stream)>,
}

/// Path of the blob belonging to a manifest path.
pub fn blob_path(manifest: &Path) -> PathBuf {
    let mut name = manifest.file_name().unwrap_or_default().to_os_string();
    name.push(".bin");
    manifest.with_file_name(name)
}

impl Checkpoint {
    pub fn stream(&self, name: &str) -> Result<Stream, HarnessError> {
        self.streams
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s.clone())
            .ok_or_else(|| HarnessError::Checkpoint(format!("missing stream `{name}`")))
    }

    pub fn to_parts(&self, blob_name: &str) -> (String, Vec<u8>) {
        let total: usize = self.arrays.entries().iter().map(|e| e.data.len()).sum();
        let mut manifest = format!("{MAGIC}\nversion {CHECKPOINT_VERSION}\nblob {blob_name}\ndoubles {total}\n");
        let mut blob = Vec::with_capacity(total * 8);
        let mut offset = 0usize;
        for e in self.arrays.entries() {
            manifest.push_str(&format!("array {} {} {} {}\n", e.name, e.rows, e.cols, offset));
            for v in &e.data {
                blob.extend_from_slice(&v.to_le_bytes());
            }
            offset += e.data.len();
        }
        for (name, s) in &self.streams {
            manifest.push_str(&format!("stream {name} {}\n", rng::encode(s)));
        }
        for line in self.config_text.lines() {
            manifest.push_str(&format!("config {line}\n"));
        }
        manifest.push_str("end\n");
        (manifest, blob)
    }

    pub fn save(&self, manifest_path: &Path) -> Result<(), HarnessError> {
        let blob_file = blob_path(manifest_path);
        let blob_name = blob_file
            .file_name()
            .and_then(|s| s.to_str())
            .ok_or_else(|| HarnessError::Checkpoint("checkpoint path needs a file name".into()))?
            .to_string();
        let (manifest, blob) = self.to_parts(&blob_name);
        fs::write(&blob_file, blob)?;
        fs::write(manifest_path, manifest)?;
        Ok(())
    }

    pub fn from_parts(manifest: &str, blob: &[u8]) -> Result<Self, HarnessError> {
        let bad = |m: String| HarnessError::Checkpoint(m);
        let mut lines = manifest.lines();
        if lines.next() != Some(MAGIC) {
            return Err(bad("not a checkpoint manifest".into()));
        }
        let version_line = lines.next().unwrap_or("");
        let version = version_line
            .strip_prefix("version ")
            .and_then(|v| v.trim().parse::<u32>().ok())
            .ok_or_else(|| bad(format!("malformed version line `{version_line}`")))?;
        if version != CHECKPOINT_VERSION {
            return Err(HarnessError::Version {
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let mut total: Option<usize> = None;
        let mut specs: Vec<(String, usize, usize, usize)> = Vec::new();
        let mut streams = Vec::new();
        let mut config = String::new();
        let mut ended = false;
        for line in lines {
            let (tag, rest) = line.split_once(' ').unwrap_or((line, ""));
            match tag {
                "blob" => {}
                "doubles" => {
                    total = Some(rest.trim().parse().map_err(|_| bad(format!("bad doubles line `{line}`")))?);
                }
                "array" => {
                    let f: Vec<&str> = rest.split_whitespace().collect();
                    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad array line `{line}`")));
                    if f.len() != 4 {
                        return Err(bad(format!("bad array line `{line}`")));
                    }
                    specs.push((f[0].to_string(), parse(f[1])?, parse(f[2])?, parse(f[3])?));
                }
                "stream" => {
                    let (name, enc) = rest
                        .split_once(' ')
                        .ok_or_else(|| bad(format!("bad stream line `{line}`")))?;
                    let s = rng::decode(enc).ok_or_else(|| bad(format!("bad stream state for `{name}`")))?;
                    streams.push((name.to_string(), s));
                }
                "config" => {
                    config.push_str(rest);
                    config.push('\n');
                }
                "end" => {
                    ended = true;
                    break;
                }
                _ => return Err(bad(format!("unexpected manifest line `{line}`"))),
            }
        }
        if !ended {
            return Err(bad("manifest is truncated".into()));
        }
        let total = total.ok_or_else(|| bad("manifest lacks a doubles line".into()))?;
        let expected = (total * 8) as u64;
        if blob.len() as u64 != expected {
            return Err(HarnessError::TruncatedBlob {
                found: blob.len() as u64,
                expected,
            });
        }
        let values: Vec<f64> = blob
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let mut arrays = StateDict::new();
        for (name, rows, cols, offset) in specs {
            let end = offset + rows * cols;
            if end > total {
                return Err(bad(format!("array `{name}` runs past the blob")));
            }
            arrays
                .insert(NamedArray {
                    name,
                    rows,
                    cols,
                    data: values[offset..end].to_vec(),
                })
                .map_err(|e| bad(e.to_string()))?;
        }
        Ok(Self {
            config_text: config,
            arrays,
            streams,
        })
    }

    pub fn load(manifest_path: &Path) -> Result<Self, HarnessError> {
        let manifest = fs::read_to_string(manifest_path)?;
        let blob = fs::read(blob_path(manifest_path))?;
        Self::from_parts(&manifest, &blob)
    }
}
