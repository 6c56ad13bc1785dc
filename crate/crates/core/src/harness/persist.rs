//! JSONL persistence of run records, one record per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::algorithms::RunRecord;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Line<'a> {
    schema_version: u32,
    #[serde(flatten)]
    record: &'a RunRecord,
}

pub fn write_records<W: Write>(records: &[RunRecord], mut w: W) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(
            &mut w,
            &Line {
                schema_version: SCHEMA_VERSION,
                record,
            },
        )?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_records<R: Read>(r: R) -> Result<Vec<RunRecord>> {
    let mut records = Vec::new();
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let mut value: Value = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| parse_err("expected a JSON object".to_string()))?;
        let version = obj
            .remove("schema_version")
            .ok_or_else(|| parse_err("missing schema_version".to_string()))?;
        let version = version
            .as_u64()
            .ok_or_else(|| parse_err("schema_version must be an integer".to_string()))?;
        if version != u64::from(SCHEMA_VERSION) {
            return Err(Error::SchemaVersion {
                line: line_no,
                expected: SCHEMA_VERSION,
                found: version.min(u64::from(u32::MAX)) as u32,
            });
        }
        records.push(serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))?);
    }
    Ok(records)
}

pub fn persist(records: &[RunRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(records, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(file)
}
