//! Text and binary trace files.
//!
//! Text: one record per line, `<gap> <hex addr> <L|S>`; `#` starts a comment.
//! Binary: the magic `CBPT\x01` followed by 13-byte little-endian records
//! `(u32 gap, u64 addr, u8 kind)` with kind 0 = load, 1 = store.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{AccessKind, AccessRecord};
use crate::{Error, Result};

pub const BINARY_MAGIC: &[u8; 5] = b"CBPT\x01";
pub const BINARY_RECORD_BYTES: usize = 13;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceFormat {
    Text,
    Binary,
}

impl std::str::FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(TraceFormat::Text),
            "binary" => Ok(TraceFormat::Binary),
            other => Err(Error::InvalidConfig(format!("unknown trace format {other:?}"))),
        }
    }
}

/// A fully loaded trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub path: PathBuf,
    pub records: Vec<AccessRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn instructions(&self) -> u64 {
        self.records.iter().map(AccessRecord::instructions).sum()
    }
}

/// Loads a trace file. With `format == None` the format is detected from the
/// binary magic.
pub fn load_trace(path: &Path, format: Option<TraceFormat>) -> Result<Trace> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let format = format.unwrap_or(if bytes.starts_with(BINARY_MAGIC) {
        TraceFormat::Binary
    } else {
        TraceFormat::Text
    });
    let records = match format {
        TraceFormat::Text => parse_text(path, &bytes)?,
        TraceFormat::Binary => parse_binary(path, &bytes)?,
    };
    if records.is_empty() {
        return Err(Error::EmptyTrace(path.to_path_buf()));
    }
    Ok(Trace {
        path: path.to_path_buf(),
        records,
    })
}

fn parse_text(path: &Path, bytes: &[u8]) -> Result<Vec<AccessRecord>> {
    let err = |line: usize, message: String| Error::TextTrace {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(bytes).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| err(lineno, e.to_string()))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let [gap, addr, kind] = fields[..] else {
            return Err(err(lineno, format!("expected 3 fields, found {}", fields.len())));
        };
        let instr_gap = gap
            .parse::<u32>()
            .map_err(|e| err(lineno, format!("bad gap {gap:?}: {e}")))?;
        let digits = addr
            .strip_prefix("0x")
            .or_else(|| addr.strip_prefix("0X"))
            .unwrap_or(addr);
        let address = u64::from_str_radix(digits, 16)
            .map_err(|e| err(lineno, format!("bad address {addr:?}: {e}")))?;
        let kind = match kind {
            "L" | "l" => AccessKind::Load,
            "S" | "s" => AccessKind::Store,
            other => return Err(err(lineno, format!("bad access kind {other:?}"))),
        };
        records.push(AccessRecord {
            instr_gap,
            address,
            kind,
        });
    }
    Ok(records)
}

fn parse_binary(path: &Path, bytes: &[u8]) -> Result<Vec<AccessRecord>> {
    let err = |offset: usize, message: &str| Error::BinaryTrace {
        path: path.to_path_buf(),
        offset: offset as u64,
        message: message.to_string(),
    };
    let Some(body) = bytes.strip_prefix(BINARY_MAGIC.as_slice()) else {
        return Err(err(0, "missing CBPT magic"));
    };
    let mut records = Vec::with_capacity(body.len() / BINARY_RECORD_BYTES);
    for (i, chunk) in body.chunks(BINARY_RECORD_BYTES).enumerate() {
        let offset = BINARY_MAGIC.len() + i * BINARY_RECORD_BYTES;
        if chunk.len() != BINARY_RECORD_BYTES {
            return Err(err(offset, "truncated record"));
        }
        let instr_gap = u32::from_le_bytes(chunk[0..4].try_into().unwrap());
        let address = u64::from_le_bytes(chunk[4..12].try_into().unwrap());
        let kind = match chunk[12] {
            0 => AccessKind::Load,
            1 => AccessKind::Store,
            _ => return Err(err(offset + 12, "bad access kind byte")),
        };
        records.push(AccessRecord {
            instr_gap,
            address,
            kind,
        });
    }
    Ok(records)
}

/// Writes records in the given format.
pub fn write_trace<W: Write>(
    out: W,
    format: TraceFormat,
    records: impl IntoIterator<Item = AccessRecord>,
) -> Result<u64> {
    let mut out = BufWriter::new(out);
    let mut count = 0;
    if format == TraceFormat::Binary {
        out.write_all(BINARY_MAGIC)?;
    }
    for r in records {
        match format {
            TraceFormat::Text => {
                let kind = match r.kind {
                    AccessKind::Load => 'L',
                    AccessKind::Store => 'S',
                };
                writeln!(out, "{} {:#x} {}", r.instr_gap, r.address, kind)?;
            }
            TraceFormat::Binary => {
                out.write_all(&r.instr_gap.to_le_bytes())?;
                out.write_all(&r.address.to_le_bytes())?;
                out.write_all(&[match r.kind {
                    AccessKind::Load => 0,
                    AccessKind::Store => 1,
                }])?;
            }
        }
        count += 1;
    }
    out.flush()?;
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_tmp(bytes: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(bytes).unwrap();
        f
    }

    #[test]
    fn text_line_parses() {
        let f = write_tmp(b"12 0x1f40 L\n");
        let t = load_trace(f.path(), Some(TraceFormat::Text)).unwrap();
        assert_eq!(t.records, vec![AccessRecord::load(12, 0x1f40)]);
    }

    #[test]
    fn empty_file_is_an_error() {
        let f = write_tmp(b"");
        assert!(matches!(load_trace(f.path(), None), Err(Error::EmptyTrace(_))));
        let f = write_tmp(b"# only a comment\n\n");
        assert!(matches!(load_trace(f.path(), None), Err(Error::EmptyTrace(_))));
        let f = write_tmp(BINARY_MAGIC);
        assert!(matches!(load_trace(f.path(), None), Err(Error::EmptyTrace(_))));
    }

    #[test]
    fn three_lines_three_records() {
        let f = write_tmp(b"# header\n0 0x0 L\n3 40 S # trailing\n\n7 0xFFFF l\n");
        let t = load_trace(f.path(), None).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.records[1].kind, AccessKind::Store);
        assert_eq!(t.records[1].address, 0x40);
        assert_eq!(t.instructions(), 1 + 4 + 8);
    }

    #[test]
    fn malformed_text_reports_line() {
        let f = write_tmp(b"1 0x10 L\n2 zz L\n");
        match load_trace(f.path(), None) {
            Err(Error::TextTrace { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let f = write_tmp(b"1 0x10\n");
        assert!(matches!(load_trace(f.path(), None), Err(Error::TextTrace { line: 1, .. })));
        let f = write_tmp(b"1 0x10 X\n");
        assert!(load_trace(f.path(), None).is_err());
    }

    #[test]
    fn truncated_binary_reports_offset() {
        let mut bytes = BINARY_MAGIC.to_vec();
        bytes.extend_from_slice(&[0u8; BINARY_RECORD_BYTES]);
        bytes.extend_from_slice(&[0u8; 4]);
        let f = write_tmp(&bytes);
        match load_trace(f.path(), Some(TraceFormat::Binary)) {
            Err(Error::BinaryTrace { offset, .. }) => assert_eq!(offset, 18),
            other => panic!("unexpected {other:?}"),
        }
        let f = write_tmp(b"nope");
        assert!(load_trace(f.path(), Some(TraceFormat::Binary)).is_err());
    }

    fn arb_record() -> impl Strategy<Value = AccessRecord> {
        (any::<u32>(), any::<u64>(), any::<bool>()).prop_map(|(g, a, s)| AccessRecord {
            instr_gap: g,
            address: a,
            kind: if s { AccessKind::Store } else { AccessKind::Load },
        })
    }

    proptest! {
        #[test]
        fn both_formats_round_trip(records in prop::collection::vec(arb_record(), 1..50)) {
            for format in [TraceFormat::Text, TraceFormat::Binary] {
                let mut buf = Vec::new();
                write_trace(&mut buf, format, records.iter().copied()).unwrap();
                let f = write_tmp(&buf);
                let back = load_trace(f.path(), None).unwrap();
                prop_assert_eq!(&back.records, &records);
            }
        }
    }
}
