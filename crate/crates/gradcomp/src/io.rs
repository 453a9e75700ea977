//! Gradient-tensor container format ("GTF1").
//!
//! A file is a sequence of self-describing records so externally recorded
//! gradient dumps can flow through the same pipeline as harness output.
//! Per-record layout, integers little-endian:
//!
//! ```text
//! magic "GTF1" | version (1) | label length (u16) | UTF-8 label
//! | epoch (u64) | rank (u8) | dims (u64 each) | payload (f32 each)
//! | CRC-32 of the record bytes above
//! ```

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"GTF1";
const VERSION: u8 = 1;

/// One gradient tensor with its provenance labels.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientRecord {
    layer_label: String,
    epoch: u64,
    shape: Vec<u64>,
    values: Vec<f32>,
}

impl GradientRecord {
    /// Validates that the shape multiplies out to the value count and the
    /// payload is finite.
    pub fn new(layer_label: &str, epoch: u64, shape: Vec<u64>, values: Vec<f32>) -> Result<Self> {
        if layer_label.len() > u16::MAX as usize {
            return Err(Error::Input("layer label longer than 65535 bytes".into()));
        }
        let count = shape
            .iter()
            .try_fold(1u64, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Input(format!("shape {shape:?} overflows")))?;
        if count != values.len() as u64 {
            return Err(Error::Input(format!(
                "shape {shape:?} implies {count} values, got {}",
                values.len()
            )));
        }
        if shape.len() > u8::MAX as usize {
            return Err(Error::Input(format!("rank {} exceeds 255", shape.len())));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite value at position {bad}")));
        }
        Ok(Self { layer_label: layer_label.to_string(), epoch, shape, values })
    }

    pub fn layer_label(&self) -> &str {
        &self.layer_label
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn shape(&self) -> &[u64] {
        &self.shape
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Row-major payload widened to f64, the pipeline's working precision.
    pub fn values_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }

    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + self.layer_label.len() + 4 * self.values.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(self.layer_label.len() as u16).to_le_bytes());
        out.extend_from_slice(self.layer_label.as_bytes());
        out.extend_from_slice(&self.epoch.to_le_bytes());
        out.push(self.shape.len() as u8);
        for d in &self.shape {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }
}

/// Write all records to `path`, atomically: the file appears only complete
/// (write to a temp sibling, rename over).
pub fn write_records(path: &Path, records: &[GradientRecord]) -> Result<()> {
    let mut bytes = Vec::new();
    for r in records {
        bytes.extend_from_slice(&r.to_bytes());
    }
    crate::fsutil::atomic_write(path, &bytes)
}

/// Convenience wrapper writing a single record.
pub fn write_record(path: &Path, record: &GradientRecord) -> Result<()> {
    write_records(path, std::slice::from_ref(record))
}

/// Read the first record of a file.
pub fn read_record(path: &Path) -> Result<GradientRecord> {
    match GtfReader::open(path)?.next() {
        Some(r) => r,
        None => Err(Error::format_at(0, "file contains no records")),
    }
}

/// Read every record of a file.
pub fn read_all(path: &Path) -> Result<Vec<GradientRecord>> {
    GtfReader::open(path)?.collect()
}

/// Streaming record reader: each `next()` parses exactly one record, so
/// unrelated records are never resident together.
pub struct GtfReader {
    input: BufReader<File>,
    offset: u64,
    done: bool,
}

impl GtfReader {
    pub fn open(path: &Path) -> Result<Self> {
        Ok(Self { input: BufReader::new(File::open(path)?), offset: 0, done: false })
    }

    /// Byte offset of the next unread record.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    fn read_exact_at(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        let at = self.offset;
        self.input
            .read_exact(buf)
            .map_err(|_| Error::format_at(at, format!("truncated while reading {what}")))?;
        self.offset += buf.len() as u64;
        Ok(())
    }

    fn read_one(&mut self) -> Result<Option<GradientRecord>> {
        let record_start = self.offset;
        let mut magic = [0u8; 4];
        // Distinguish clean EOF from a torn record.
        match self.input.read(&mut magic)? {
            0 => return Ok(None),
            4 => {}
            n => {
                return Err(Error::format_at(
                    record_start + n as u64,
                    "truncated mid-magic",
                ))
            }
        }
        self.offset += 4;
        if &magic != MAGIC {
            return Err(Error::format_at(record_start, "bad magic, expected GTF1"));
        }
        let mut crc = crc32fast::Hasher::new();
        crc.update(&magic);

        let mut byte = [0u8; 1];
        self.read_exact_at(&mut byte, "version")?;
        crc.update(&byte);
        if byte[0] != VERSION {
            return Err(Error::format_at(
                self.offset - 1,
                format!("unsupported version {}", byte[0]),
            ));
        }

        let mut u16buf = [0u8; 2];
        self.read_exact_at(&mut u16buf, "label length")?;
        crc.update(&u16buf);
        let label_len = u16::from_le_bytes(u16buf) as usize;
        let mut label_bytes = vec![0u8; label_len];
        self.read_exact_at(&mut label_bytes, "label")?;
        crc.update(&label_bytes);
        let label_offset = self.offset - label_len as u64;
        let label = String::from_utf8(label_bytes)
            .map_err(|_| Error::format_at(label_offset, "label is not UTF-8"))?;

        let mut u64buf = [0u8; 8];
        self.read_exact_at(&mut u64buf, "epoch")?;
        crc.update(&u64buf);
        let epoch = u64::from_le_bytes(u64buf);

        self.read_exact_at(&mut byte, "rank")?;
        crc.update(&byte);
        let rank = byte[0] as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            self.read_exact_at(&mut u64buf, "dimension")?;
            crc.update(&u64buf);
            shape.push(u64::from_le_bytes(u64buf));
        }
        let count = shape
            .iter()
            .try_fold(1u64, |acc, &d| acc.checked_mul(d))
            .filter(|&c| c <= (1 << 33))
            .ok_or_else(|| {
                Error::format_at(self.offset, format!("record shape {shape:?} is implausible"))
            })?;

        let payload_offset = self.offset;
        let mut payload = vec![0u8; count as usize * 4];
        self.read_exact_at(&mut payload, "payload")?;
        crc.update(&payload);

        let mut crcbuf = [0u8; 4];
        self.read_exact_at(&mut crcbuf, "checksum")?;
        let stored = u32::from_le_bytes(crcbuf);
        let computed = crc.finalize();
        if stored != computed {
            return Err(Error::corruption_at(
                self.offset - 4,
                format!("CRC mismatch: stored {stored:#010x}, computed {computed:#010x}"),
            ));
        }

        let mut values = Vec::with_capacity(count as usize);
        for (i, chunk) in payload.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::format_at(
                    payload_offset + 4 * i as u64,
                    format!("non-finite payload value {v}"),
                ));
            }
            values.push(v);
        }
        Ok(Some(GradientRecord { layer_label: label, epoch, shape, values }))
    }
}

impl Iterator for GtfReader {
    type Item = Result<GradientRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.read_one() {
            Ok(Some(r)) => Some(Ok(r)),
            Ok(None) => None,
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Serialize arbitrary bytes to a writer; used by the CLI for streams it
/// has already assembled.
pub fn write_bytes<W: Write>(mut w: W, bytes: &[u8]) -> Result<()> {
    w.write_all(bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::path::PathBuf;

    fn temp_path(name: &str) -> PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("gradcomp-io-test-{}-{name}", std::process::id()));
        p
    }

    fn sample_records() -> Vec<GradientRecord> {
        vec![
            GradientRecord::new("conv_upper", 2, vec![3, 4], (0..12).map(|i| i as f32 * 0.5).collect())
                .unwrap(),
            GradientRecord::new("dense", 50, vec![5], vec![-1.0, 0.25, 0.0, 1e-8, 3.5]).unwrap(),
            GradientRecord::new("", 0, vec![0], vec![]).unwrap(),
        ]
    }

    #[test]
    fn roundtrip_identity() {
        let path = temp_path("roundtrip.gtf");
        let records = sample_records();
        write_records(&path, &records).unwrap();
        let back = read_all(&path).unwrap();
        assert_eq!(back, records);
        // Byte-level: rewriting reproduces the identical file.
        let original = std::fs::read(&path).unwrap();
        write_records(&path, &back).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), original);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn rejects_invalid_construction() {
        assert!(GradientRecord::new("x", 0, vec![2, 2], vec![0.0; 3]).is_err());
        assert!(GradientRecord::new("x", 0, vec![1], vec![f32::NAN]).is_err());
        assert!(GradientRecord::new("x", 0, vec![1], vec![f32::INFINITY]).is_err());
    }

    #[test]
    fn truncation_and_magic_errors_name_offsets() {
        let path = temp_path("trunc.gtf");
        write_records(&path, &sample_records()[..1]).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        std::fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
        match read_all(&path) {
            Err(Error::Format { .. }) => {}
            other => panic!("expected format error, got {other:?}"),
        }

        let mut bad = bytes.clone();
        bad[0] = b'Z';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(read_all(&path), Err(Error::Format { offset: 0, .. })));

        let mut bad_payload = bytes.clone();
        bad_payload[25] ^= 0x10;
        std::fs::write(&path, &bad_payload).unwrap();
        assert!(read_all(&path).is_err());
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn fuzzed_mutations_detected() {
        let path = temp_path("fuzz.gtf");
        write_records(&path, &sample_records()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(808);
        let mut undetected = 0;
        for _ in 0..2000 {
            let mut mutated = bytes.clone();
            for _ in 0..rng.random_range(1..=3) {
                let at = rng.random_range(0..mutated.len());
                mutated[at] ^= 1 << rng.random_range(0..8);
            }
            if mutated == bytes {
                continue;
            }
            std::fs::write(&path, &mutated).unwrap();
            if read_all(&path).is_ok() {
                undetected += 1;
            }
        }
        assert_eq!(undetected, 0);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn streaming_reader_reports_offsets() {
        let path = temp_path("stream.gtf");
        let records = sample_records();
        write_records(&path, &records).unwrap();
        let mut reader = GtfReader::open(&path).unwrap();
        assert_eq!(reader.offset(), 0);
        let first = reader.next().unwrap().unwrap();
        assert_eq!(first, records[0]);
        assert!(reader.offset() > 0);
        let rest: Vec<_> = reader.map(|r| r.unwrap()).collect();
        assert_eq!(rest, records[1..]);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn large_record_roundtrips_and_quantizes() {
        // 65536 values, the size of a real lower-layer gradient tensor.
        let mut rng = ChaCha8Rng::seed_from_u64(65536);
        let values: Vec<f32> = (0..65536).map(|_| (rng.random::<f32>() - 0.5) * 1e-3).collect();
        let record = GradientRecord::new("lower", 99, vec![256, 256], values).unwrap();
        let path = temp_path("large.gtf");
        write_record(&path, &record).unwrap();
        let back = read_record(&path).unwrap();
        assert_eq!(back, record);

        let grid = crate::quantizer::build_grid(crate::quantizer::Fp8Format::e5m2());
        let stream = crate::quantizer::quantize(&back.values_f64(), &grid).unwrap();
        assert_eq!(stream.len(), 65536);
        let deq = crate::quantizer::dequantize(&stream, &grid).unwrap();
        assert_eq!(deq.len(), 65536);
        std::fs::remove_file(&path).unwrap();
    }
}
