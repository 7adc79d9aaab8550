//! FMX: a minimal bit-exact binary container for frames × dims float
//! matrices, used for internally extracted features and for externally
//! computed self-supervised representations alike.
//!
//! Layout (little-endian throughout):
//!
//! ```text
//! offset  size          content
//! 0       4             magic "FMX1"
//! 4       4             rows, u32
//! 8       4             cols, u32
//! 12      4·rows·cols   payload, IEEE-754 f32, row-major
//! ```
//!
//! Total file size is exactly `12 + 4·rows·cols` bytes and every payload
//! value must be finite. In-memory matrices are `f64`; writing quantizes to
//! `f32` (values already representable in `f32` round-trip bit-exactly).
//! Readers never allocate more than the header declares, and headers
//! declaring more than [`DEFAULT_ELEMENT_CAP`] elements are rejected.

use std::io::{Read, Write};
use std::path::Path;

use crate::dsp::{FeatureKind, FeatureMatrix};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"FMX1";

/// Guard against corrupt headers: refuse to allocate more than this many
/// payload elements (2^28 elements = 1 GiB of f32).
pub const DEFAULT_ELEMENT_CAP: u64 = 1 << 28;

/// Frame shift recorded on matrices read back from FMX files. The container
/// does not store timing; pooling ignores it.
pub const DEFAULT_FRAME_SHIFT_S: f64 = 0.010;

/// Write a rows × cols matrix. All values are validated (as `f32`) before
/// any byte is written.
pub fn write_fmx_raw(
    rows: usize,
    cols: usize,
    values: &[f64],
    writer: &mut impl Write,
) -> Result<()> {
    if values.len() != rows * cols {
        return Err(Error::DimMismatch(format!(
            "fmx write: {rows}x{cols} needs {} values, got {}",
            rows * cols,
            values.len()
        )));
    }
    if rows > u32::MAX as usize || cols > u32::MAX as usize {
        return Err(Error::InvalidParam("fmx write: dimension exceeds u32".into()));
    }
    let mut payload: Vec<u8> = Vec::with_capacity(4 * values.len());
    for (i, &v) in values.iter().enumerate() {
        let f = v as f32;
        if !f.is_finite() {
            return Err(Error::NonFinite(i));
        }
        payload.extend_from_slice(&f.to_le_bytes());
    }
    writer.write_all(&MAGIC)?;
    writer.write_all(&(rows as u32).to_le_bytes())?;
    writer.write_all(&(cols as u32).to_le_bytes())?;
    writer.write_all(&payload)?;
    Ok(())
}

/// Write a [`FeatureMatrix`] in FMX layout.
pub fn write_fmx(matrix: &FeatureMatrix, writer: &mut impl Write) -> Result<()> {
    write_fmx_raw(matrix.n_frames(), matrix.dims(), matrix.values(), writer)
}

fn read_exact_counted(reader: &mut impl Read, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = reader.read(&mut buf[filled..])?;
        if n == 0 {
            break;
        }
        filled += n;
    }
    Ok(filled)
}

/// Read one FMX block with an explicit element cap. Reads exactly the
/// block's bytes, so blocks can be concatenated in one stream.
pub fn read_fmx_raw_capped(
    reader: &mut impl Read,
    cap: u64,
) -> Result<(usize, usize, Vec<f64>)> {
    let mut header = [0u8; 12];
    let got = read_exact_counted(reader, &mut header)?;
    if got < 4 || header[..4] != MAGIC {
        if got >= 4 {
            return Err(Error::BadMagic);
        }
        return Err(Error::Truncated {
            expected: 12,
            got,
        });
    }
    if got < 12 {
        return Err(Error::Truncated { expected: 12, got });
    }
    let rows = u32::from_le_bytes(header[4..8].try_into().unwrap());
    let cols = u32::from_le_bytes(header[8..12].try_into().unwrap());
    let n_elems = rows as u64 * cols as u64;
    if n_elems > cap {
        return Err(Error::OversizeHeader { rows, cols, cap });
    }
    let n_bytes = (n_elems * 4) as usize;
    let mut payload = vec![0u8; n_bytes];
    let got = read_exact_counted(reader, &mut payload)?;
    if got < n_bytes {
        return Err(Error::Truncated {
            expected: n_bytes,
            got,
        });
    }
    let mut values = Vec::with_capacity(n_elems as usize);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::NonFinite(i));
        }
        values.push(v as f64);
    }
    Ok((rows as usize, cols as usize, values))
}

pub fn read_fmx_raw(reader: &mut impl Read) -> Result<(usize, usize, Vec<f64>)> {
    read_fmx_raw_capped(reader, DEFAULT_ELEMENT_CAP)
}

/// Read an FMX block as a [`FeatureMatrix`] of the given kind. The
/// container carries no timing, so the frame shift is set to
/// [`DEFAULT_FRAME_SHIFT_S`]; pooling does not depend on it.
pub fn read_fmx(reader: &mut impl Read, kind: FeatureKind) -> Result<FeatureMatrix> {
    let (rows, cols, values) = read_fmx_raw(reader)?;
    FeatureMatrix::new(rows, cols, values, kind, DEFAULT_FRAME_SHIFT_S)
}

pub fn write_fmx_file(path: impl AsRef<Path>, matrix: &FeatureMatrix) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_fmx(matrix, &mut file)
}

pub fn read_fmx_file(path: impl AsRef<Path>, kind: FeatureKind) -> Result<FeatureMatrix> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    read_fmx(&mut file, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xoshiro256pp;

    fn matrix(rows: usize, cols: usize, rng: &mut Xoshiro256pp) -> FeatureMatrix {
        // f32-representable values so the round trip is bit-exact
        let values: Vec<f64> = (0..rows * cols)
            .map(|_| rng.range_f64(-100.0, 100.0) as f32 as f64)
            .collect();
        FeatureMatrix::new(rows, cols, values, FeatureKind::Embedding, 0.01).unwrap()
    }

    #[test]
    fn two_by_two_is_28_bytes() {
        let m = FeatureMatrix::new(
            2,
            2,
            vec![1.0, 2.0, 3.0, 4.0],
            FeatureKind::Fb40,
            0.01,
        )
        .unwrap();
        let mut bytes = Vec::new();
        write_fmx(&m, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 28);
    }

    #[test]
    fn zero_by_zero_is_header_only() {
        let mut bytes = Vec::new();
        write_fmx_raw(0, 0, &[], &mut bytes).unwrap();
        assert_eq!(bytes.len(), 12);
        let (rows, cols, values) = read_fmx_raw(&mut bytes.as_slice()).unwrap();
        assert_eq!((rows, cols), (0, 0));
        assert!(values.is_empty());
    }

    #[test]
    fn round_trip_is_bit_exact_on_random_matrices() {
        let mut rng = Xoshiro256pp::seed_from_u64(10);
        for _ in 0..100 {
            let rows = rng.below(30);
            let cols = 1 + rng.below(50);
            let m = matrix(rows, cols, &mut rng);
            let mut bytes = Vec::new();
            write_fmx(&m, &mut bytes).unwrap();
            assert_eq!(bytes.len(), 12 + 4 * rows * cols);
            let back = read_fmx(&mut bytes.as_slice(), FeatureKind::Embedding).unwrap();
            assert_eq!(back.n_frames(), rows);
            assert_eq!(back.dims(), cols);
            for (a, b) in m.values().iter().zip(back.values()) {
                assert_eq!((*a as f32).to_bits(), (*b as f32).to_bits());
            }
            // writing the readback reproduces the same bytes
            let mut again = Vec::new();
            write_fmx(&back, &mut again).unwrap();
            assert_eq!(bytes, again);
        }
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut bytes = Vec::new();
        write_fmx_raw(1, 1, &[0.5], &mut bytes).unwrap();
        bytes[3] = b'0'; // "FMX0"
        match read_fmx_raw(&mut bytes.as_slice()) {
            Err(Error::BadMagic) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_is_rejected() {
        // header says 10×1024 but only 5 rows present
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&MAGIC);
        bytes.extend_from_slice(&10u32.to_le_bytes());
        bytes.extend_from_slice(&1024u32.to_le_bytes());
        bytes.extend(std::iter::repeat(0u8).take(4 * 5 * 1024));
        match read_fmx_raw(&mut bytes.as_slice()) {
            Err(Error::Truncated { expected, got }) => {
                assert_eq!(expected, 4 * 10 * 1024);
                assert_eq!(got, 4 * 5 * 1024);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_payload_is_rejected_on_read() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&MAGIC);
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        bytes.extend_from_slice(&f32::NAN.to_le_bytes());
        match read_fmx_raw(&mut bytes.as_slice()) {
            Err(Error::NonFinite(1)) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_write_fails_before_any_bytes() {
        let mut bytes = Vec::new();
        // f64 beyond f32 range becomes inf on narrowing and must be refused
        let err = write_fmx_raw(1, 2, &[1.0, 1e300], &mut bytes).unwrap_err();
        assert!(matches!(err, Error::NonFinite(1)));
        assert!(bytes.is_empty());
    }

    #[test]
    fn oversize_header_is_rejected_without_allocation() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&MAGIC);
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        match read_fmx_raw(&mut bytes.as_slice()) {
            Err(Error::OversizeHeader { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    /// Fixture assembled by hand, standing in for an externally produced
    /// embedding dump (the 1024-dim case).
    #[test]
    fn externally_written_embedding_file_parses() {
        let (rows, cols) = (212usize, 1024usize);
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"FMX1");
        bytes.extend_from_slice(&(rows as u32).to_le_bytes());
        bytes.extend_from_slice(&(cols as u32).to_le_bytes());
        for i in 0..rows * cols {
            bytes.extend_from_slice(&((i % 997) as f32 * 0.001).to_le_bytes());
        }
        let m = read_fmx(&mut bytes.as_slice(), FeatureKind::Embedding).unwrap();
        assert_eq!(m.n_frames(), 212);
        assert_eq!(m.dims(), 1024);
        assert_eq!(m.row(1)[0], ((1024 % 997) as f32 * 0.001) as f64);
    }

    #[test]
    fn blocks_concatenate_in_one_stream() {
        let mut rng = Xoshiro256pp::seed_from_u64(11);
        let a = matrix(3, 4, &mut rng);
        let b = matrix(2, 4, &mut rng);
        let mut bytes = Vec::new();
        write_fmx(&a, &mut bytes).unwrap();
        write_fmx(&b, &mut bytes).unwrap();
        let mut cursor = bytes.as_slice();
        let first = read_fmx(&mut cursor, FeatureKind::Embedding).unwrap();
        let second = read_fmx(&mut cursor, FeatureKind::Embedding).unwrap();
        assert_eq!(first.n_frames(), 3);
        assert_eq!(second.n_frames(), 2);
        assert!(cursor.is_empty());
    }

    #[test]
    fn file_helpers_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.fmx");
        let mut rng = Xoshiro256pp::seed_from_u64(12);
        let m = matrix(5, 7, &mut rng);
        write_fmx_file(&path, &m).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 12 + 4 * 5 * 7);
        let back = read_fmx_file(&path, FeatureKind::Embedding).unwrap();
        assert_eq!(back.values(), m.values());
    }
}
