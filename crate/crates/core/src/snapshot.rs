//! Binary field snapshots: one JSON header line, then the fields as
//! row-major little-endian `f64` in header order.

use crate::error::{Error, Result};
use crate::field::SurfaceField;
use crate::grid::{GridSpec, SpectralGrid};
use crate::params::ScaleParams;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub grid: GridSpec,
    pub params: ScaleParams,
    pub t: f64,
    pub fields: Vec<String>,
    /// Seconds since the Unix epoch at write time.
    #[serde(default)]
    pub written: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub meta: SnapshotMeta,
    pub fields: Vec<SurfaceField>,
}

impl Snapshot {
    pub fn field(&self, name: &str) -> Option<&SurfaceField> {
        self.meta.fields.iter().position(|f| f == name).map(|i| &self.fields[i])
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write named fields. `meta.fields` is overwritten with the names given.
pub fn dump_fields(path: &Path, fields: &[(&str, &SurfaceField)], meta: &SnapshotMeta) -> Result<()> {
    let mut meta = meta.clone();
    meta.fields = fields.iter().map(|(n, _)| n.to_string()).collect();
    meta.written = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let n = meta.grid.nx * meta.grid.ny;
    for (name, f) in fields {
        if f.nx != meta.grid.nx || f.ny != meta.grid.ny {
            return Err(Error::GridMismatch(format!(
                "field {name} is {}x{}, header says {}x{}",
                f.nx, f.ny, meta.grid.nx, meta.grid.ny
            )));
        }
    }
    let header = serde_json::to_string(&meta).map_err(|e| Error::Snapshot {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut buf = Vec::with_capacity(header.len() + 1 + 8 * n * fields.len());
    buf.extend_from_slice(header.as_bytes());
    buf.push(b'\n');
    for (_, f) in fields {
        for v in &f.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = std::fs::File::create(path).map_err(io_err(path))?;
    file.write_all(&buf).map_err(io_err(path))
}

/// Single-field convenience wrapper.
pub fn dump_field(field: &SurfaceField, path: &Path, meta: &SnapshotMeta) -> Result<()> {
    let name = meta.fields.first().map(String::as_str).unwrap_or("field");
    dump_fields(path, &[(name, field)], meta)
}

/// Read a snapshot, optionally checking it against an expected grid.
pub fn load_snapshot(path: &Path, expect: Option<&SpectralGrid>) -> Result<Snapshot> {
    let bad = |reason: String| Error::Snapshot {
        path: path.to_path_buf(),
        reason,
    };
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut rd = BufReader::new(file);
    let mut line = String::new();
    rd.read_line(&mut line).map_err(io_err(path))?;
    let meta: SnapshotMeta = serde_json::from_str(line.trim_end()).map_err(|e| bad(format!("header: {e}")))?;
    if let Some(g) = expect {
        let s = g.spec();
        if s.nx != meta.grid.nx || s.ny != meta.grid.ny || s.lx != meta.grid.lx || s.ly != meta.grid.ly {
            return Err(bad(format!(
                "grid {}x{} on [{}, {}] does not match expected {}x{} on [{}, {}]",
                meta.grid.nx, meta.grid.ny, meta.grid.lx, meta.grid.ly, s.nx, s.ny, s.lx, s.ly
            )));
        }
    }
    let mut payload = Vec::new();
    rd.read_to_end(&mut payload).map_err(io_err(path))?;
    let n = meta.grid.nx * meta.grid.ny;
    let want = 8 * n * meta.fields.len();
    if payload.len() != want {
        return Err(bad(format!("payload has {} bytes, header implies {want}", payload.len())));
    }
    let fields = payload
        .chunks_exact(8 * n.max(1))
        .take(meta.fields.len())
        .map(|chunk| SurfaceField {
            nx: meta.grid.nx,
            ny: meta.grid.ny,
            data: chunk
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                .collect(),
        })
        .collect();
    Ok(Snapshot { meta, fields })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::band_limited;
    use std::f64::consts::PI;

    fn meta(g: &SpectralGrid) -> SnapshotMeta {
        SnapshotMeta {
            grid: g.spec(),
            params: ScaleParams::standard(0.1, 0.5).unwrap(),
            t: 1.25,
            fields: vec![],
            written: 0,
        }
    }

    #[test]
    fn round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let g = SpectralGrid::new(2.0 * PI, PI, 16, 8, 4).unwrap();
        let z = SurfaceField::zeros(&g);
        let r = band_limited(&g, 3, 3, false);
        let p = dir.path().join("s.bin");
        dump_fields(&p, &[("zeta", &z), ("psi", &r)], &meta(&g)).unwrap();
        let s = load_snapshot(&p, Some(&g)).unwrap();
        assert_eq!(s.meta.t, 1.25);
        let bits = |f: &SurfaceField| f.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(s.field("zeta").unwrap()), bits(&z));
        assert_eq!(bits(s.field("psi").unwrap()), bits(&r));
    }

    #[test]
    fn tampered_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g = SpectralGrid::new(2.0 * PI, PI, 16, 8, 4).unwrap();
        let p = dir.path().join("s.bin");
        dump_field(&band_limited(&g, 1, 2, true), &p, &meta(&g)).unwrap();
        let raw = std::fs::read(&p).unwrap();
        let text = String::from_utf8_lossy(&raw).replacen("\"nx\":16", "\"nx\":32", 1);
        let mut bytes = text.as_bytes()[..text.find('\n').unwrap() + 1].to_vec();
        bytes.extend_from_slice(&raw[raw.iter().position(|&b| b == b'\n').unwrap() + 1..]);
        std::fs::write(&p, bytes).unwrap();
        assert!(matches!(load_snapshot(&p, None), Err(Error::Snapshot { .. })));
        assert!(matches!(load_snapshot(&p, Some(&g)), Err(Error::Snapshot { .. })));
    }
}
