/*
Copyright 2026 The tenrec Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/


//! File formats: `TNSR` binary tensors, metric CSVs, PGM phase plots and
//! `key=value` run manifests. Every write goes to a temporary file in the
//! target directory and is renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::synth::{ExperimentGrid, TableRow};
use crate::tensor::DenseTensor;

pub const TNSR_MAGIC: [u8; 4] = *b"TNSR";
pub const TNSR_VERSION: u16 = 1;

pub const METRICS_HEADER: [&str; 7] = [
    "solver",
    "rho",
    "rank",
    "trials",
    "mean_rse",
    "mean_time_s",
    "converged_frac",
];

/// Size in bytes of a `TNSR` header for an order-`order` tensor.
pub fn tnsr_header_len(order: usize) -> usize {
    4 + 2 + 2 + 8 * order
}

/// Writes `bytes` to `path` atomically.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn encode_tensor(t: &DenseTensor) -> Vec<u8> {
    let order = u16::try_from(t.order()).expect("tensor order fits in u16");
    let mut out = Vec::with_capacity(tnsr_header_len(t.order()) + 8 * t.len());
    out.extend_from_slice(&TNSR_MAGIC);
    out.extend_from_slice(&TNSR_VERSION.to_le_bytes());
    out.extend_from_slice(&order.to_le_bytes());
    for &d in t.dims() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for x in t.as_slice() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

/// Parses a `TNSR` byte stream. `path` is only used in error messages.
pub fn decode_tensor(bytes: &[u8], path: &Path) -> Result<DenseTensor> {
    let bad = |offset: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        offset: offset as u64,
        message,
    };
    if bytes.len() < 8 {
        return Err(bad(
            bytes.len(),
            format!("file is {} bytes, shorter than the 8-byte preamble", bytes.len()),
        ));
    }
    if bytes[..4] != TNSR_MAGIC {
        return Err(bad(0, format!("bad magic {:?}, expected \"TNSR\"", &bytes[..4])));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != TNSR_VERSION {
        return Err(bad(4, format!("unsupported version {version}, expected {TNSR_VERSION}")));
    }
    let order = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    if order == 0 {
        return Err(bad(6, "order is zero".into()));
    }
    let header = tnsr_header_len(order);
    if bytes.len() < header {
        return Err(bad(
            bytes.len(),
            format!(
                "truncated header: expected {header} bytes for order {order}, found {}",
                bytes.len()
            ),
        ));
    }
    let mut dims = Vec::with_capacity(order);
    let mut count: usize = 1;
    for n in 0..order {
        let at = 8 + 8 * n;
        let raw = u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        let d = usize::try_from(raw)
            .ok()
            .filter(|&d| d > 0)
            .ok_or_else(|| bad(at, format!("invalid dimension {raw} for mode {n}")))?;
        count = count
            .checked_mul(d)
            .ok_or_else(|| bad(at, "dimension product overflows".into()))?;
        dims.push(d);
    }
    let expected = count
        .checked_mul(8)
        .and_then(|p| p.checked_add(header))
        .ok_or_else(|| bad(8, "payload size overflows".into()))?;
    if bytes.len() != expected {
        return Err(bad(
            header,
            format!(
                "payload length mismatch: expected {} bytes ({count} values), found {}",
                expected - header,
                bytes.len() - header
            ),
        ));
    }
    let mut data = Vec::with_capacity(count);
    for (i, chunk) in bytes[header..].chunks_exact(8).enumerate() {
        let x = f64::from_le_bytes(chunk.try_into().unwrap());
        if !x.is_finite() {
            return Err(bad(header + 8 * i, format!("non-finite value {x} at element {i}")));
        }
        data.push(x);
    }
    DenseTensor::new(dims, data)
}

pub fn write_tensor(t: &DenseTensor, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_tensor(t))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes, path)
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a benchmark table with floats at 17 significant digits.
pub fn write_metrics_csv(rows: &[TableRow], path: impl AsRef<Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::arg("metrics table is empty"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METRICS_HEADER)?;
    for r in rows {
        w.write_record([
            r.solver.clone(),
            sci(r.rho),
            r.rank.clone(),
            r.trials.to_string(),
            sci(r.mean_rse),
            sci(r.mean_time_s),
            sci(r.converged_frac),
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::State(format!("csv buffer: {e}")))?;
    write_atomic(path.as_ref(), &bytes)
}

/// Parses a file written by [`write_metrics_csv`]. The `failed` column is
/// not stored and comes back as zero.
pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<TableRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != METRICS_HEADER {
        return Err(Error::Format {
            path: path.to_path_buf(),
            offset: 0,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let offset = rec.position().map_or(0, |p| p.byte());
        let field = |i: usize| -> Result<&str> {
            rec.get(i).ok_or_else(|| Error::Format {
                path: path.to_path_buf(),
                offset,
                message: format!("missing column {}", METRICS_HEADER[i]),
            })
        };
        let num = |i: usize| -> Result<f64> {
            let s = field(i)?;
            s.parse().map_err(|_| Error::Format {
                path: path.to_path_buf(),
                offset,
                message: format!("bad {} value '{s}'", METRICS_HEADER[i]),
            })
        };
        rows.push(TableRow {
            solver: field(0)?.to_string(),
            rho: num(1)?,
            rank: field(2)?.to_string(),
            trials: num(3)? as usize,
            mean_rse: num(4)?,
            mean_time_s: num(5)?,
            converged_frac: num(6)?,
            failed: 0,
        });
    }
    Ok(rows)
}

/// Binary PGM of success rates: white is every trial succeeding, black none.
/// Row `i` is `corruption_axis[i]` (ascending top to bottom), column `j` is
/// `rank_axis[j]`.
pub fn encode_phase_pgm(grid: &ExperimentGrid) -> Result<Vec<u8>> {
    grid.validate()?;
    let (h, w) = (grid.corruption_axis.len(), grid.rank_axis.len());
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    for row in &grid.success_counts {
        for &s in row {
            out.push((255.0 * s as f64 / grid.trials as f64).round() as u8);
        }
    }
    Ok(out)
}

/// `phase.pgm` pairs with `phase.axes.csv`.
pub fn axes_path(pgm: &Path) -> PathBuf {
    pgm.with_extension("axes.csv")
}

/// Writes the PGM and its companion axes CSV (`axis,index,value`).
pub fn write_phase_pgm(grid: &ExperimentGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let pgm = encode_phase_pgm(grid)?;
    let mut axes = String::from("axis,index,value\n");
    for (j, r) in grid.rank_axis.iter().enumerate() {
        writeln!(axes, "rank,{j},{r}").unwrap();
    }
    for (i, p) in grid.corruption_axis.iter().enumerate() {
        writeln!(axes, "rho,{i},{}", sci(*p)).unwrap();
    }
    write_atomic(path, &pgm)?;
    write_atomic(&axes_path(path), axes.as_bytes())
}

/// One line per cell: `rank,rho,successes,trials`.
pub fn write_phase_cells_csv(grid: &ExperimentGrid, path: impl AsRef<Path>) -> Result<()> {
    grid.validate()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rank", "rho", "successes", "trials"])?;
    for (i, p) in grid.corruption_axis.iter().enumerate() {
        for (j, r) in grid.rank_axis.iter().enumerate() {
            w.write_record([
                r.to_string(),
                sci(*p),
                grid.success_counts[i][j].to_string(),
                grid.trials.to_string(),
            ])?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::State(format!("csv buffer: {e}")))?;
    write_atomic(path.as_ref(), &bytes)
}

/// Ordered `key=value` record of a run. Keys are unique; later `set`s
/// overwrite in place.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string();
        assert!(
            !key.contains(['=', '\n']) && !value.contains('\n'),
            "manifest key/value must be single-line and keys must not contain '='"
        );
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    /// Stores floats in round-trippable form.
    pub fn set_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.set(key, sci(value))
    }

    pub fn set_list<T: ToString>(&mut self, key: &str, values: &[T]) -> &mut Self {
        let joined = values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        self.set(key, joined)
    }

    pub fn set_f64_list(&mut self, key: &str, values: &[f64]) -> &mut Self {
        let joined = values.iter().map(|&v| sci(v)).collect::<Vec<_>>().join(",");
        self.set(key, joined)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::arg(format!("manifest has no '{key}'")))?;
        raw.parse()
            .map_err(|_| Error::arg(format!("manifest '{key}' has bad value '{raw}'")))
    }

    pub fn parse_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::arg(format!("manifest has no '{key}'")))?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::arg(format!("manifest '{key}' has bad entry '{s}'")))
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            writeln!(s, "{k}={v}").unwrap();
        }
        s
    }

    /// Blank lines and lines starting with `#` are skipped.
    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let mut m = Manifest::new();
        let mut offset = 0u64;
        for line in text.split_inclusive('\n') {
            let body = line.trim_end_matches(['\n', '\r']);
            if !(body.trim().is_empty() || body.starts_with('#')) {
                let (k, v) = body.split_once('=').ok_or_else(|| Error::Format {
                    path: path.to_path_buf(),
                    offset,
                    message: format!("expected key=value, found '{body}'"),
                })?;
                m.set(k.trim(), v.trim());
            }
            offset += line.len() as u64;
        }
        Ok(m)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_text().as_bytes())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DenseTensor {
        DenseTensor::from_fn(&[3, 4, 2], |ix| {
            (ix[0] as f64 - 1.3) * 0.7 + ix[1] as f64 * 1e-9 - ix[2] as f64 * 3.25e5
        })
        .unwrap()
    }

    #[test]
    fn header_length_for_cube() {
        let t = DenseTensor::zeros(&[2, 2, 2]).unwrap();
        let bytes = encode_tensor(&t);
        assert_eq!(tnsr_header_len(3), 32);
        assert_eq!(bytes.len(), 32 + 64);
        assert_eq!(&bytes[..4], b"TNSR");
        assert_eq!(&bytes[4..8], &[1, 0, 3, 0]);
        assert_eq!(&bytes[8..16], &2u64.to_le_bytes());
    }

    #[test]
    fn round_trip_and_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tnsr");
        let t = sample();
        write_tensor(&t, &path).unwrap();
        let back = read_tensor(&path).unwrap();
        assert_eq!(back.dims(), t.dims());
        assert!(back
            .as_slice()
            .iter()
            .zip(t.as_slice())
            .all(|(a, b)| a.to_bits() == b.to_bits()));

        let v = DenseTensor::new(vec![5], vec![1.0, -0.0, 2.5, 1e-300, -7.0]).unwrap();
        write_tensor(&v, &path).unwrap();
        let back = read_tensor(&path).unwrap();
        assert_eq!(back.dims(), &[5]);
        assert_eq!(back.as_slice()[1].to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn malformed_inputs_name_offsets() {
        let p = Path::new("x.tnsr");
        let good = encode_tensor(&sample());

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        let msg = decode_tensor(&bad_magic, p).unwrap_err().to_string();
        assert!(msg.contains("offset 0"), "{msg}");

        let mut bad_version = good.clone();
        bad_version[4] = 2;
        let msg = decode_tensor(&bad_version, p).unwrap_err().to_string();
        assert!(msg.contains("offset 4") && msg.contains("version 2"), "{msg}");

        let truncated = &good[..good.len() - 3];
        let msg = decode_tensor(truncated, p).unwrap_err().to_string();
        assert!(msg.contains("expected 192 bytes") && msg.contains("found 189"), "{msg}");

        let msg = decode_tensor(&good[..20], p).unwrap_err().to_string();
        assert!(msg.contains("truncated header"), "{msg}");

        let mut nan = good.clone();
        let at = tnsr_header_len(3) + 8;
        nan[at..at + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        let msg = decode_tensor(&nan, p).unwrap_err().to_string();
        assert!(msg.contains(&format!("offset {at}")), "{msg}");

        let mut zero_dim = good;
        zero_dim[8..16].copy_from_slice(&0u64.to_le_bytes());
        assert!(decode_tensor(&zero_dim, p).is_err());
    }

    fn row(solver: &str, rse: f64) -> TableRow {
        TableRow {
            solver: solver.into(),
            rho: 0.1,
            rank: "4".into(),
            trials: 3,
            mean_rse: rse,
            mean_time_s: 0.123_456_789_012_345_68,
            converged_frac: 2.0 / 3.0,
            failed: 0,
        }
    }

    #[test]
    fn metrics_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        assert!(matches!(
            write_metrics_csv(&[], &path),
            Err(Error::Argument(_))
        ));
        let rows = vec![row("pasd", 1.234_567_890_123_456_7e-7), row("odd,\"name\"", 0.1)];
        write_metrics_csv(&rows[..1], &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(
            text.lines().next().unwrap(),
            "solver,rho,rank,trials,mean_rse,mean_time_s,converged_frac"
        );
        write_metrics_csv(&rows, &path).unwrap();
        assert_eq!(read_metrics_csv(&path).unwrap(), rows);
    }

    fn grid(counts: Vec<Vec<usize>>) -> ExperimentGrid {
        ExperimentGrid {
            rank_axis: vec![2, 6],
            corruption_axis: vec![0.05, 0.2],
            trials: 10,
            success_counts: counts,
            rse_threshold: 1e-3,
        }
    }

    #[test]
    fn pgm_pixels() {
        let full = encode_phase_pgm(&grid(vec![vec![10, 10], vec![10, 10]])).unwrap();
        assert!(full.starts_with(b"P5\n2 2\n255\n"));
        assert!(full[11..].iter().all(|&p| p == 255));
        let none = encode_phase_pgm(&grid(vec![vec![0, 0], vec![0, 0]])).unwrap();
        assert!(none[11..].iter().all(|&p| p == 0));
        let mixed = encode_phase_pgm(&grid(vec![vec![7, 10], vec![0, 3]])).unwrap();
        assert_eq!(&mixed[11..], &[179, 255, 0, 77]);
        assert!(encode_phase_pgm(&grid(vec![vec![11, 0], vec![0, 0]])).is_err());
    }

    #[test]
    fn pgm_with_axes_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phase.pgm");
        write_phase_pgm(&grid(vec![vec![10, 5], vec![2, 0]]), &path).unwrap();
        let axes = fs::read_to_string(dir.path().join("phase.axes.csv")).unwrap();
        assert!(axes.starts_with("axis,index,value\nrank,0,2\nrank,1,6\nrho,0,"));
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.manifest");
        let mut m = Manifest::new();
        m.set("solver", "pasd")
            .set_list("ranks", &[4, 4, 4])
            .set_f64("mu0", 1e-4)
            .set_f64_list("lambdas", &[1.0 / 3.0, 2.0]);
        m.set("solver", "snn");
        m.write(&path).unwrap();
        let back = Manifest::read(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.get("solver"), Some("snn"));
        assert_eq!(back.parse_list::<usize>("ranks").unwrap(), vec![4, 4, 4]);
        assert_eq!(back.parse::<f64>("mu0").unwrap(), 1e-4);
        assert_eq!(back.parse_list::<f64>("lambdas").unwrap()[0], 1.0 / 3.0);
        assert!(back.parse::<f64>("missing").is_err());

        let err = Manifest::from_text("a=1\nnot a pair\n", Path::new("m")).unwrap_err();
        assert!(err.to_string().contains("offset 4"), "{err}");
    }
}
