//! Minimal NPY v1.0 reader/writer.
//!
//! Reads little-endian float32/float64 C-order arrays; writes float64.
//! Everything else (Fortran order, other dtypes, later versions) is
//! rejected, not guessed.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::quant::FloatTensor;

const MAGIC: &[u8; 6] = b"\x93NUMPY";

enum Dtype {
    F4,
    F8,
}

pub fn read_npy<R: Read>(reader: &mut R) -> Result<FloatTensor> {
    let mut magic = [0u8; 6];
    read_exact(reader, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not an NPY file (bad magic)".into()));
    }
    let mut version = [0u8; 2];
    read_exact(reader, &mut version)?;
    if version != [1, 0] {
        return Err(Error::Format(format!(
            "unsupported NPY version {}.{}",
            version[0], version[1]
        )));
    }
    let mut len_bytes = [0u8; 2];
    read_exact(reader, &mut len_bytes)?;
    let header_len = u16::from_le_bytes(len_bytes) as usize;
    let mut header = vec![0u8; header_len];
    read_exact(reader, &mut header)?;
    let header = String::from_utf8(header)
        .map_err(|_| Error::Format("NPY header is not valid UTF-8".into()))?;

    let (descr, fortran_order, shape) = parse_header(&header)?;
    if fortran_order {
        return Err(Error::Unsupported(
            "Fortran-order NPY arrays are not supported".into(),
        ));
    }
    let dtype = match descr.as_str() {
        "<f4" => Dtype::F4,
        "<f8" => Dtype::F8,
        other => {
            return Err(Error::Format(format!(
                "unsupported descr {other:?} (need '<f4' or '<f8')"
            )))
        }
    };

    let count: usize = shape.iter().product();
    let values = match dtype {
        Dtype::F4 => {
            let mut raw = vec![0u8; count * 4];
            read_exact(reader, &mut raw)?;
            raw.chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
                .collect()
        }
        Dtype::F8 => {
            let mut raw = vec![0u8; count * 8];
            read_exact(reader, &mut raw)?;
            raw.chunks_exact(8)
                .map(|c| {
                    f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]])
                })
                .collect()
        }
    };
    FloatTensor::new(shape, values)
}

/// Writes `t` as a little-endian float64 C-order NPY v1.0 array with the
/// header padded to a 64-byte boundary, so identical tensors produce
/// identical bytes.
pub fn write_npy<W: Write>(writer: &mut W, t: &FloatTensor) -> Result<()> {
    let shape_str = match t.shape().len() {
        0 => "()".to_string(),
        1 => format!("({},)", t.shape()[0]),
        _ => {
            let dims: Vec<String> = t.shape().iter().map(usize::to_string).collect();
            format!("({})", dims.join(", "))
        }
    };
    let mut header = format!(
        "{{'descr': '<f8', 'fortran_order': False, 'shape': {shape_str}, }}"
    );
    let unpadded = MAGIC.len() + 2 + 2 + header.len() + 1;
    let pad = (64 - unpadded % 64) % 64;
    header.extend(std::iter::repeat_n(' ', pad));
    header.push('\n');

    writer.write_all(MAGIC)?;
    writer.write_all(&[1, 0])?;
    let len = u16::try_from(header.len())
        .map_err(|_| Error::Format("NPY header too long".into()))?;
    writer.write_all(&len.to_le_bytes())?;
    writer.write_all(header.as_bytes())?;
    for v in t.values() {
        writer.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact<R: Read>(reader: &mut R, buf: &mut [u8]) -> Result<()> {
    reader.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format("truncated NPY file".into())
        } else {
            Error::Io(e)
        }
    })
}

/// Parses the header dict `{'descr': ..., 'fortran_order': ..., 'shape': ...}`.
fn parse_header(header: &str) -> Result<(String, bool, Vec<usize>)> {
    let body = header.trim();
    let body = body
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| Error::Format("NPY header is not a dict".into()))?;

    let mut descr = None;
    let mut fortran_order = None;
    let mut shape = None;
    for entry in split_top_level(body) {
        let entry = entry.trim();
        if entry.is_empty() {
            continue;
        }
        let (key, value) = entry
            .split_once(':')
            .ok_or_else(|| Error::Format(format!("malformed header entry {entry:?}")))?;
        let key = key.trim().trim_matches(|c| c == '\'' || c == '"');
        let value = value.trim();
        match key {
            "descr" => {
                descr = Some(value.trim_matches(|c| c == '\'' || c == '"').to_string());
            }
            "fortran_order" => {
                fortran_order = Some(match value {
                    "False" => false,
                    "True" => true,
                    other => {
                        return Err(Error::Format(format!(
                            "bad fortran_order value {other:?}"
                        )))
                    }
                });
            }
            "shape" => {
                let inner = value
                    .strip_prefix('(')
                    .and_then(|s| s.strip_suffix(')'))
                    .ok_or_else(|| Error::Format(format!("bad shape value {value:?}")))?;
                let dims = inner
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<usize>()
                            .map_err(|_| Error::Format(format!("bad shape dimension {s:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                shape = Some(dims);
            }
            _ => {} // numpy only ever writes the three keys; ignore extras
        }
    }
    Ok((
        descr.ok_or_else(|| Error::Format("header missing 'descr'".into()))?,
        fortran_order.ok_or_else(|| Error::Format("header missing 'fortran_order'".into()))?,
        shape.ok_or_else(|| Error::Format("header missing 'shape'".into()))?,
    ))
}

/// Splits on commas that sit outside quotes and parentheses.
fn split_top_level(s: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut in_quote = false;
    let mut current = String::new();
    for c in s.chars() {
        match c {
            '\'' | '"' => in_quote = !in_quote,
            '(' | '[' if !in_quote => depth += 1,
            ')' | ']' if !in_quote => depth = depth.saturating_sub(1),
            ',' if !in_quote && depth == 0 => {
                parts.push(std::mem::take(&mut current));
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    if !current.trim().is_empty() {
        parts.push(current);
    }
    parts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip(t: &FloatTensor) -> (Vec<u8>, FloatTensor) {
        let mut buf = Vec::new();
        write_npy(&mut buf, t).unwrap();
        let back = read_npy(&mut buf.as_slice()).unwrap();
        (buf, back)
    }

    #[test]
    fn write_read_round_trip_1d() {
        let t = FloatTensor::from_vec(vec![0.5, -0.25, 0.125, 0.0]).unwrap();
        let (bytes, back) = round_trip(&t);
        assert_eq!(back, t);
        // Header block is 64-byte aligned and v1.0.
        assert_eq!(&bytes[..6], MAGIC);
        assert_eq!(&bytes[6..8], &[1, 0]);
        assert_eq!((bytes.len() - t.len() * 8) % 64, 0);
    }

    #[test]
    fn write_read_round_trip_2d_is_byte_stable() {
        let t = FloatTensor::new(vec![2, 3], vec![1.0, 2.0, 3.0, -4.0, 5.5, -6.25]).unwrap();
        let (bytes, back) = round_trip(&t);
        assert_eq!(back, t);
        let mut again = Vec::new();
        write_npy(&mut again, &back).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn reads_f4_arrays() {
        // Hand-built '<f4' file for [1.5, -2.0].
        let header = "{'descr': '<f4', 'fortran_order': False, 'shape': (2,), }";
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&[1, 0]);
        bytes.extend_from_slice(&(header.len() as u16).to_le_bytes());
        bytes.extend_from_slice(header.as_bytes());
        bytes.extend_from_slice(&1.5f32.to_le_bytes());
        bytes.extend_from_slice(&(-2.0f32).to_le_bytes());
        let t = read_npy(&mut bytes.as_slice()).unwrap();
        assert_eq!(t.shape(), &[2]);
        assert_eq!(t.values(), &[1.5, -2.0]);
    }

    #[test]
    fn rejects_bad_magic_version_descr() {
        let t = FloatTensor::from_vec(vec![1.0]).unwrap();
        let mut buf = Vec::new();
        write_npy(&mut buf, &t).unwrap();

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            read_npy(&mut bad_magic.as_slice()),
            Err(Error::Format(_))
        ));

        let mut bad_version = buf.clone();
        bad_version[6] = 2;
        assert!(matches!(
            read_npy(&mut bad_version.as_slice()),
            Err(Error::Format(_))
        ));

        let header = "{'descr': '<i4', 'fortran_order': False, 'shape': (1,), }";
        let mut bad_descr = Vec::new();
        bad_descr.extend_from_slice(MAGIC);
        bad_descr.extend_from_slice(&[1, 0]);
        bad_descr.extend_from_slice(&(header.len() as u16).to_le_bytes());
        bad_descr.extend_from_slice(header.as_bytes());
        bad_descr.extend_from_slice(&[0; 4]);
        assert!(matches!(
            read_npy(&mut bad_descr.as_slice()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn rejects_fortran_order() {
        let header = "{'descr': '<f8', 'fortran_order': True, 'shape': (1,), }";
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&[1, 0]);
        bytes.extend_from_slice(&(header.len() as u16).to_le_bytes());
        bytes.extend_from_slice(header.as_bytes());
        bytes.extend_from_slice(&1.0f64.to_le_bytes());
        assert!(matches!(
            read_npy(&mut bytes.as_slice()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn rejects_truncation() {
        let t = FloatTensor::from_vec(vec![1.0, 2.0, 3.0]).unwrap();
        let mut buf = Vec::new();
        write_npy(&mut buf, &t).unwrap();
        for cut in [3, 7, 9, buf.len() / 2, buf.len() - 1] {
            let mut truncated: &[u8] = &buf[..cut];
            assert!(
                matches!(read_npy(&mut truncated), Err(Error::Format(_))),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn accepts_reordered_header_keys() {
        let header = "{'shape': (2,), 'fortran_order': False, 'descr': '<f8'}";
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&[1, 0]);
        bytes.extend_from_slice(&(header.len() as u16).to_le_bytes());
        bytes.extend_from_slice(header.as_bytes());
        bytes.extend_from_slice(&1.0f64.to_le_bytes());
        bytes.extend_from_slice(&2.0f64.to_le_bytes());
        let t = read_npy(&mut bytes.as_slice()).unwrap();
        assert_eq!(t.values(), &[1.0, 2.0]);
    }
}
