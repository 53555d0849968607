//! Block-I/O trace ingestion and synthetic workload generation.
//!
//! Two on-disk formats are understood:
//!
//! * MSR-style: `Timestamp,Hostname,DiskNumber,Type,Offset,Size,ResponseTime`,
//!   with the timestamp in 100 ns ticks and offset/size in bytes.
//! * Simple CSV: `timestamp_us,op,lba,size_bytes` with `op` in `{R,W}` and an
//!   optional header line.
//!
//! Logical block addresses are always expressed in 512-byte sectors.

use std::fmt;
use std::io::{self, BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Size of one logical sector addressed by [`TraceRecord::lba`].
pub const SECTOR_BYTES: u64 = 512;

/// Page size used by synthetic workloads.
pub const SYNTHETIC_PAGE_BYTES: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    Read,
    Write,
}

impl Op {
    pub fn is_write(self) -> bool {
        matches!(self, Op::Write)
    }
}

/// One block-I/O request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraceRecord {
    pub timestamp_us: u64,
    pub op: Op,
    /// Start address in 512-byte sectors.
    pub lba: u64,
    pub size_bytes: u64,
}

impl TraceRecord {
    pub fn new(timestamp_us: u64, op: Op, lba: u64, size_bytes: u64) -> Self {
        debug_assert!(size_bytes > 0);
        Self {
            timestamp_us,
            op,
            lba,
            size_bytes,
        }
    }

    /// First logical page touched by this request.
    pub fn start_page(&self, page_size: u64) -> u64 {
        self.lba * SECTOR_BYTES / page_size
    }

    /// Number of page operations the request expands into.
    pub fn page_count(&self, page_size: u64) -> u64 {
        self.size_bytes.div_ceil(page_size)
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line_no}: malformed record ({reason})")]
    MalformedLine { line_no: usize, reason: String },
    #[error("line {line_no}: timestamp goes backwards")]
    OutOfOrder { line_no: usize },
    #[error("trace contains no valid records")]
    EmptyTrace,
    #[error("invalid synthetic workload: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A line the parser had to skip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Malformed {
    pub line_no: usize,
    pub reason: String,
}

impl fmt::Display for Malformed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line_no, self.reason)
    }
}

/// Output of a lenient parse: every well-formed record plus the lines that
/// were rejected.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedTrace {
    pub records: Vec<TraceRecord>,
    pub malformed: Vec<Malformed>,
}

impl ParsedTrace {
    /// Fails on the first malformed line instead of skipping it.
    pub fn strict(self) -> Result<Vec<TraceRecord>, TraceError> {
        match self.malformed.into_iter().next() {
            Some(m) => Err(TraceError::MalformedLine {
                line_no: m.line_no,
                reason: m.reason,
            }),
            None => Ok(self.records),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Msr,
    Csv,
}

impl std::str::FromStr for TraceFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "msr" => Ok(TraceFormat::Msr),
            "csv" => Ok(TraceFormat::Csv),
            other => Err(format!("unknown trace format `{other}`")),
        }
    }
}

pub fn parse(reader: impl BufRead, format: TraceFormat) -> Result<ParsedTrace, TraceError> {
    match format {
        TraceFormat::Msr => parse_msr(reader),
        TraceFormat::Csv => parse_csv(reader),
    }
}

/// Parses an MSR-style trace. Timestamps are rebased so the first record
/// sits at time zero.
pub fn parse_msr(reader: impl BufRead) -> Result<ParsedTrace, TraceError> {
    let mut out = ParsedTrace::default();
    let mut first_ticks: Option<u64> = None;
    let mut last_us = 0u64;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (ticks, op, offset, size) = match split_msr(line) {
            Ok(v) => v,
            Err(reason) => {
                out.malformed.push(Malformed { line_no, reason });
                continue;
            }
        };
        let base = *first_ticks.get_or_insert(ticks);
        if ticks < base {
            return Err(TraceError::OutOfOrder { line_no });
        }
        let timestamp_us = (ticks - base) / 10;
        if timestamp_us < last_us {
            return Err(TraceError::OutOfOrder { line_no });
        }
        last_us = timestamp_us;
        out.records.push(TraceRecord::new(
            timestamp_us,
            op,
            offset / SECTOR_BYTES,
            size,
        ));
    }

    if out.records.is_empty() {
        return Err(TraceError::EmptyTrace);
    }
    Ok(out)
}

fn split_msr(line: &str) -> Result<(u64, Op, u64, u64), String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 7 {
        return Err(format!("expected 7 fields, found {}", fields.len()));
    }
    let ticks = parse_u64(fields[0], "timestamp")?;
    let op = if fields[3].eq_ignore_ascii_case("read") {
        Op::Read
    } else if fields[3].eq_ignore_ascii_case("write") {
        Op::Write
    } else {
        return Err(format!("unknown request type `{}`", fields[3]));
    };
    let offset = parse_u64(fields[4], "offset")?;
    let size = parse_u64(fields[5], "size")?;
    if size == 0 {
        return Err("zero-sized request".into());
    }
    Ok((ticks, op, offset, size))
}

fn parse_u64(field: &str, what: &str) -> Result<u64, String> {
    field
        .parse::<u64>()
        .map_err(|_| format!("non-numeric {what} `{field}`"))
}

/// Parses the simple `timestamp_us,op,lba,size_bytes` format.
pub fn parse_csv(reader: impl BufRead) -> Result<ParsedTrace, TraceError> {
    let mut out = ParsedTrace::default();
    let mut last_us: Option<u64> = None;
    let mut seen_content = false;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if !seen_content {
            seen_content = true;
            let first = line.split(',').next().unwrap_or("").trim();
            if first.parse::<u64>().is_err() {
                // header
                continue;
            }
        }
        let record = match split_csv(line) {
            Ok(r) => r,
            Err(reason) => {
                out.malformed.push(Malformed { line_no, reason });
                continue;
            }
        };
        if last_us.is_some_and(|t| record.timestamp_us < t) {
            return Err(TraceError::OutOfOrder { line_no });
        }
        last_us = Some(record.timestamp_us);
        out.records.push(record);
    }

    if out.records.is_empty() {
        return Err(TraceError::EmptyTrace);
    }
    Ok(out)
}

fn split_csv(line: &str) -> Result<TraceRecord, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 fields, found {}", fields.len()));
    }
    let timestamp_us = parse_u64(fields[0], "timestamp")?;
    let op = match fields[1] {
        "R" | "r" => Op::Read,
        "W" | "w" => Op::Write,
        other => return Err(format!("unknown op `{other}`")),
    };
    let lba = parse_u64(fields[2], "lba")?;
    let size_bytes = parse_u64(fields[3], "size")?;
    if size_bytes == 0 {
        return Err("zero-sized request".into());
    }
    Ok(TraceRecord::new(timestamp_us, op, lba, size_bytes))
}

/// Writes records in the simple CSV format (no header).
pub fn write_csv<'a>(
    mut out: impl Write,
    records: impl IntoIterator<Item = &'a TraceRecord>,
) -> io::Result<()> {
    for r in records {
        let op = if r.op.is_write() { 'W' } else { 'R' };
        writeln!(out, "{},{},{},{}", r.timestamp_us, op, r.lba, r.size_bytes)?;
    }
    Ok(())
}

/// Parameters of a synthetic single-page workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_requests: u64,
    pub write_ratio: f64,
    pub zipf_s: f64,
    pub address_space_pages: u64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), TraceError> {
        if self.num_requests == 0 {
            return Err(TraceError::InvalidSpec(
                "num_requests must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.write_ratio) {
            return Err(TraceError::InvalidSpec(
                "write_ratio must lie in [0,1]".into(),
            ));
        }
        if !(self.zipf_s >= 0.0 && self.zipf_s.is_finite()) {
            return Err(TraceError::InvalidSpec("zipf exponent must be >= 0".into()));
        }
        if self.address_space_pages == 0 {
            return Err(TraceError::InvalidSpec(
                "address space must hold a page".into(),
            ));
        }
        Ok(())
    }
}

/// Parses `n=1000,write_ratio=0.9,zipf=1.0,pages=256,seed=1`. Missing keys
/// fall back to `n=10000,write_ratio=0.5,zipf=1.0,pages=4096,seed=0`.
impl std::str::FromStr for SyntheticSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut spec = SyntheticSpec {
            num_requests: 10_000,
            write_ratio: 0.5,
            zipf_s: 1.0,
            address_space_pages: 4096,
            seed: 0,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{part}`"))?;
            match key {
                "n" | "num_requests" => spec.num_requests = parse_value(key, value)?,
                "write_ratio" | "w" => spec.write_ratio = parse_value(key, value)?,
                "zipf" | "zipf_s" => spec.zipf_s = parse_value(key, value)?,
                "pages" | "address_space_pages" => {
                    spec.address_space_pages = parse_value(key, value)?
                }
                "seed" => spec.seed = parse_value(key, value)?,
                other => return Err(format!("unknown synthetic key `{other}`")),
            }
        }
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("bad value for `{key}`: `{value}`"))
}

/// Inverse-CDF sampler over ranks `0..n` with `P(k) ∝ (k+1)^-s`.
#[derive(Debug, Clone)]
pub struct ZipfTable {
    cdf: Vec<f64>,
}

impl ZipfTable {
    pub fn new(n: u64, s: f64) -> Self {
        let mut cdf = Vec::with_capacity(n as usize);
        let mut acc = 0.0;
        for k in 1..=n {
            acc += (k as f64).powf(-s);
            cdf.push(acc);
        }
        for c in &mut cdf {
            *c /= acc;
        }
        Self { cdf }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> u64 {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.cdf.len() - 1) as u64
    }
}

/// Generates a deterministic workload of single-page requests. Page rank 0
/// is the most popular and maps to logical page 0.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<TraceRecord>, TraceError> {
    spec.validate()?;
    let table = ZipfTable::new(spec.address_space_pages, spec.zipf_s);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sectors_per_page = SYNTHETIC_PAGE_BYTES / SECTOR_BYTES;

    let records = (0..spec.num_requests)
        .map(|i| {
            let op = if rng.gen_bool(spec.write_ratio) {
                Op::Write
            } else {
                Op::Read
            };
            let page = table.sample(&mut rng);
            TraceRecord::new(i, op, page * sectors_per_page, SYNTHETIC_PAGE_BYTES)
        })
        .collect();
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msr(s: &str) -> Result<ParsedTrace, TraceError> {
        parse_msr(s.as_bytes())
    }

    #[test]
    fn msr_write_offset_maps_to_sector() {
        let t = msr("0,rsrch,0,Write,4096,512,0").unwrap();
        assert_eq!(t.records, vec![TraceRecord::new(0, Op::Write, 8, 512)]);
    }

    #[test]
    fn msr_zero_offset_read() {
        let t = msr("0,rsrch,0,Read,0,4096,0").unwrap();
        assert_eq!(t.records, vec![TraceRecord::new(0, Op::Read, 0, 4096)]);
    }

    #[test]
    fn msr_type_is_case_insensitive_and_rebased() {
        let t =
            msr("128166372003061629,hm,1,READ,0,4096,10\n128166372003061729,hm,1,write,512,512,10")
                .unwrap();
        assert_eq!(t.records[0].timestamp_us, 0);
        assert_eq!(t.records[1].timestamp_us, 10);
        assert_eq!(t.records[1].op, Op::Write);
        assert_eq!(t.records[1].lba, 1);
    }

    #[test]
    fn msr_reports_bad_lines() {
        let t = msr("0,a,0,Write,x,512,0\n1,a,0,Write,0,512\n2,a,0,Read,0,512,0").unwrap();
        assert_eq!(t.records.len(), 1);
        let lines: Vec<_> = t.malformed.iter().map(|m| m.line_no).collect();
        assert_eq!(lines, vec![1, 2]);
        assert!(matches!(
            t.strict(),
            Err(TraceError::MalformedLine { line_no: 1, .. })
        ));
    }

    #[test]
    fn msr_empty_is_error() {
        assert!(matches!(msr(""), Err(TraceError::EmptyTrace)));
        assert!(matches!(msr("garbage"), Err(TraceError::EmptyTrace)));
    }

    #[test]
    fn msr_out_of_order() {
        assert!(matches!(
            msr("100,a,0,Write,0,512,0\n50,a,0,Write,0,512,0"),
            Err(TraceError::OutOfOrder { line_no: 2 })
        ));
    }

    #[test]
    fn csv_direct_mapping() {
        let t = parse_csv("0,W,8,4096\n5,R,0,512".as_bytes()).unwrap();
        assert_eq!(
            t.records,
            vec![
                TraceRecord::new(0, Op::Write, 8, 4096),
                TraceRecord::new(5, Op::Read, 0, 512)
            ]
        );
    }

    #[test]
    fn csv_header_is_skipped() {
        let t = parse_csv("timestamp_us,op,lba,size_bytes\n0,W,8,4096".as_bytes()).unwrap();
        assert_eq!(t.records.len(), 1);
        assert!(t.malformed.is_empty());
    }

    #[test]
    fn csv_out_of_order() {
        assert!(matches!(
            parse_csv("5,W,8,4096\n4,R,0,512".as_bytes()),
            Err(TraceError::OutOfOrder { line_no: 2 })
        ));
    }

    #[test]
    fn csv_rejects_zero_size() {
        let t = parse_csv("0,W,0,0\n1,W,0,1".as_bytes()).unwrap();
        assert_eq!(t.malformed.len(), 1);
    }

    #[test]
    fn degenerate_write_ratios() {
        let mut spec = SyntheticSpec {
            num_requests: 10,
            write_ratio: 1.0,
            zipf_s: 1.0,
            address_space_pages: 16,
            seed: 3,
        };
        let all = generate_synthetic(&spec).unwrap();
        assert_eq!(all.len(), 10);
        assert!(all.iter().all(|r| r.op == Op::Write));
        spec.write_ratio = 0.0;
        assert!(generate_synthetic(&spec)
            .unwrap()
            .iter()
            .all(|r| r.op == Op::Read));
    }

    #[test]
    fn synthetic_requests_are_single_aligned_pages() {
        let spec: SyntheticSpec = "n=500,pages=7,seed=9".parse().unwrap();
        for r in generate_synthetic(&spec).unwrap() {
            assert_eq!(r.size_bytes, 4096);
            assert_eq!(r.lba % 8, 0);
            assert!(r.start_page(4096) < 7);
            assert_eq!(r.page_count(4096), 1);
        }
    }

    #[test]
    fn synthetic_spec_rejects_bad_values() {
        assert!("n=0".parse::<SyntheticSpec>().is_err());
        assert!("write_ratio=1.5".parse::<SyntheticSpec>().is_err());
        assert!("zipf=-1".parse::<SyntheticSpec>().is_err());
        assert!("pages=0".parse::<SyntheticSpec>().is_err());
        assert!("bogus=1".parse::<SyntheticSpec>().is_err());
    }

    #[test]
    fn page_split_rounds_up() {
        let r = TraceRecord::new(0, Op::Write, 16, 8193);
        assert_eq!(r.start_page(4096), 2);
        assert_eq!(r.page_count(4096), 3);
    }
}
