// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV readers/writers for the file formats the CLI exchanges, and atomic
//! file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mocpd::{Detection, SeriesPoint, TracePoint};

use crate::error::CliError;

pub const SERIES_HEADER: [&str; 2] = ["index", "value"];
pub const TRUTH_HEADER: [&str; 1] = ["cp_index"];
pub const DETECTIONS_HEADER: [&str; 3] = ["index", "score", "threshold"];

/// Writes `bytes` to a temporary sibling of `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| CliError::InvalidParams(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp-{}", std::process::id()));
    let tmp: PathBuf = match dir {
        Some(d) => d.join(tmp_name),
        None => PathBuf::from(tmp_name),
    };
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(&tmp, e))?;
    f.sync_all().map_err(|e| CliError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_vec_pretty(value)?;
    text.push(b'\n');
    write_atomic(path, &text)
}

fn csv_bytes<F>(header: &[&str], fill: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    fill(&mut w)?;
    w.into_inner()
        .map_err(|e| CliError::InvalidParams(format!("csv buffer: {e}")))
}

pub fn write_series(path: &Path, values: &[f64]) -> Result<(), CliError> {
    let bytes = csv_bytes(&SERIES_HEADER, |w| {
        for (i, v) in values.iter().enumerate() {
            w.write_record([i.to_string(), v.to_string()])?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

pub fn write_truth(path: &Path, cps: &[usize]) -> Result<(), CliError> {
    let bytes = csv_bytes(&TRUTH_HEADER, |w| {
        for cp in cps {
            w.write_record([cp.to_string()])?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

pub fn write_detections(path: &Path, dets: &[Detection]) -> Result<(), CliError> {
    let bytes = csv_bytes(&DETECTIONS_HEADER, |w| {
        for d in dets {
            w.write_record([d.index.to_string(), d.score.to_string(), d.threshold_at.to_string()])?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

pub fn write_trace(path: &Path, trace: &[TracePoint]) -> Result<(), CliError> {
    let bytes = csv_bytes(&DETECTIONS_HEADER, |w| {
        for t in trace {
            w.write_record([t.index.to_string(), t.score.to_string(), t.threshold.to_string()])?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

fn open_csv(path: &Path, header: &[&str]) -> Result<csv::Reader<fs::File>, CliError> {
    if !path.exists() {
        return Err(CliError::MissingFile(path.to_path_buf()));
    }
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let got = rdr.headers().map_err(|e| CliError::csv(path, 1, e.to_string()))?;
    if got.len() < header.len() || got.iter().zip(header).any(|(a, b)| a != *b) {
        return Err(CliError::csv(
            path,
            1,
            format!("expected header `{}`, got `{}`", header.join(","), got.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(rdr)
}

fn record_line(rec: &csv::StringRecord, fallback: u64) -> u64 {
    rec.position().map_or(fallback, |p| p.line())
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: u64,
    rec: &csv::StringRecord,
    col: usize,
    name: &str,
) -> Result<T, CliError> {
    let raw = rec
        .get(col)
        .ok_or_else(|| CliError::csv(path, line, format!("missing `{name}` column")))?;
    raw.parse()
        .map_err(|_| CliError::csv(path, line, format!("cannot parse `{name}` from `{raw}`")))
}

/// Reads `index,value` rows. Indices must increase by exactly 1.
pub fn read_series(path: &Path) -> Result<Vec<SeriesPoint>, CliError> {
    let mut rdr = open_csv(path, &SERIES_HEADER)?;
    let mut out: Vec<SeriesPoint> = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let fallback = row as u64 + 2;
        let rec = rec.map_err(|e| CliError::csv(path, fallback, e.to_string()))?;
        let line = record_line(&rec, fallback);
        let index: u64 = parse_field(path, line, &rec, 0, "index")?;
        let value: f64 = parse_field(path, line, &rec, 1, "value")?;
        if !value.is_finite() {
            return Err(CliError::csv(path, line, format!("non-finite value `{value}`")));
        }
        if let Some(prev) = out.last() {
            if index != prev.index + 1 {
                return Err(CliError::NonContiguous {
                    path: path.to_path_buf(),
                    line,
                    expected: prev.index + 1,
                    got: index,
                });
            }
        }
        out.push(SeriesPoint::new(index, value));
    }
    Ok(out)
}

/// Reads the `cp_index` column.
pub fn read_truth(path: &Path) -> Result<Vec<usize>, CliError> {
    let mut rdr = open_csv(path, &TRUTH_HEADER)?;
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let fallback = row as u64 + 2;
        let rec = rec.map_err(|e| CliError::csv(path, fallback, e.to_string()))?;
        let line = record_line(&rec, fallback);
        out.push(parse_field(path, line, &rec, 0, "cp_index")?);
    }
    Ok(out)
}

/// Reads the `index` column of a detections file.
pub fn read_detection_indices(path: &Path) -> Result<Vec<usize>, CliError> {
    let mut rdr = open_csv(path, &DETECTIONS_HEADER[..1])?;
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let fallback = row as u64 + 2;
        let rec = rec.map_err(|e| CliError::csv(path, fallback, e.to_string()))?;
        let line = record_line(&rec, fallback);
        out.push(parse_field(path, line, &rec, 0, "index")?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_round_trip_and_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_series(&p, &[0.5, -1.25, 3.0]).unwrap();
        let pts = read_series(&p).unwrap();
        assert_eq!(pts.iter().map(|p| p.value).collect::<Vec<_>>(), vec![0.5, -1.25, 3.0]);

        fs::write(&p, "index,value\n0,1.0\n1,abc\n").unwrap();
        match read_series(&p) {
            Err(CliError::Csv { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        fs::write(&p, "index,value\n0,1.0\n2,1.0\n").unwrap();
        assert!(matches!(read_series(&p), Err(CliError::NonContiguous { line: 3, .. })));
        fs::write(&p, "idx,value\n0,1.0\n").unwrap();
        assert!(matches!(read_series(&p), Err(CliError::Csv { line: 1, .. })));
    }

    #[test]
    fn missing_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            read_truth(&dir.path().join("nope.csv")),
            Err(CliError::MissingFile(_))
        ));
    }

    #[test]
    fn atomic_write_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("t.csv");
        write_truth(&p, &[5, 10]).unwrap();
        write_truth(&p, &[7]).unwrap();
        assert_eq!(read_truth(&p).unwrap(), vec![7]);
        let names: Vec<_> = fs::read_dir(p.parent().unwrap()).unwrap().collect();
        assert_eq!(names.len(), 1);
    }
}
