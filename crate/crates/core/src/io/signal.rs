use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::signal::Signal;

/// On-disk signal formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalFormat {
    /// Binary greymap (`P5`), 8 or 16 bits, scaled to `[0, 1]`.
    Pgm,
    /// Little-endian float64 samples with a `<file>.json` sidecar.
    RawF64,
}

impl SignalFormat {
    /// `.pgm` files are PGM, everything else raw.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("pgm") => SignalFormat::Pgm,
            _ => SignalFormat::RawF64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    #[default]
    Float64,
    Complex128,
}

/// JSON sidecar of a raw array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSidecar {
    pub dims: Vec<usize>,
    #[serde(default)]
    pub dtype: Dtype,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn read_signal(path: &Path, format: SignalFormat) -> Result<Signal> {
    match format {
        SignalFormat::Pgm => read_pgm(path),
        SignalFormat::RawF64 => read_raw(path),
    }
}

fn grid_for(path: &Path, dims: &[usize]) -> Result<Grid> {
    let grid = match dims {
        [n] => Grid::new(1, *n),
        [1, n] => Grid::new(1, *n),
        [r, c] if r == c => Grid::new(2, *r),
        _ => {
            return Err(Error::format(
                path,
                format!("dims {dims:?} are not a 1-D signal or a square image"),
            ))
        }
    };
    grid.map_err(|e| Error::format(path, e.to_string()))
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Option<usize> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }
}

fn read_pgm(path: &Path) -> Result<Signal> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if !bytes.starts_with(b"P5") {
        return Err(Error::format(path, "missing P5 magic"));
    }
    let mut h = Header {
        bytes: &bytes,
        pos: 2,
    };
    let (Some(width), Some(height), Some(maxval)) = (h.number(), h.number(), h.number()) else {
        return Err(Error::format(path, "malformed header"));
    };
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(
            path,
            format!("max value {maxval} out of range"),
        ));
    }
    if h.pos >= bytes.len() || !bytes[h.pos].is_ascii_whitespace() {
        return Err(Error::format(path, "malformed header"));
    }
    let body = &bytes[h.pos + 1..];
    let wide = maxval > 255;
    let count = width * height;
    let need = if wide { 2 * count } else { count };
    if body.len() < need {
        return Err(Error::format(
            path,
            format!("expected {need} data bytes, found {}", body.len()),
        ));
    }
    let scale = maxval as f64;
    let data: Vec<f64> = if wide {
        body[..need]
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / scale)
            .collect()
    } else {
        body[..need].iter().map(|&b| b as f64 / scale).collect()
    };
    let grid = grid_for(path, &[height, width])?;
    Signal::from_real(grid, data)
}

/// Writes the real part of a 2-D signal as a PGM, clamped to `[0, 1]`.
pub fn write_pgm(path: &Path, signal: &Signal, maxval: u16) -> Result<()> {
    let g = signal.grid();
    let (h, w) = if g.dim == 1 { (1, g.n) } else { (g.n, g.n) };
    let mut out = format!("P5\n{w} {h}\n{maxval}\n").into_bytes();
    for v in signal.data() {
        let q = (v.re.clamp(0.0, 1.0) * maxval as f64).round() as u16;
        if maxval > 255 {
            out.extend_from_slice(&q.to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn read_raw(path: &Path) -> Result<Signal> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: RawSidecar = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: side.clone(),
        source,
    })?;
    let grid = grid_for(path, &meta.dims)?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let values = decode_f64(path, &bytes, grid.len() * lanes(meta.dtype))?;
    let data = match meta.dtype {
        Dtype::Float64 => values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        Dtype::Complex128 => values
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect(),
    };
    Signal::new(grid, data).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes little-endian float64 samples and the JSON sidecar; real signals
/// store one value per sample, others interleave real and imaginary parts.
pub fn write_raw(path: &Path, signal: &Signal) -> Result<()> {
    let dtype = if signal.is_real() {
        Dtype::Float64
    } else {
        Dtype::Complex128
    };
    let values: Vec<f64> = match dtype {
        Dtype::Float64 => signal.real_part(),
        Dtype::Complex128 => signal.data().iter().flat_map(|v| [v.re, v.im]).collect(),
    };
    fs::write(path, encode_f64(&values)).map_err(|e| Error::io(path, e))?;
    let meta = RawSidecar {
        dims: signal.grid().dims(),
        dtype,
    };
    let side = sidecar_path(path);
    let text = serde_json::to_string_pretty(&meta).expect("sidecar serialises");
    fs::write(&side, text + "\n").map_err(|e| Error::io(&side, e))
}

pub(crate) fn lanes(dtype: Dtype) -> usize {
    match dtype {
        Dtype::Float64 => 1,
        Dtype::Complex128 => 2,
    }
}

pub(crate) fn encode_f64(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub(crate) fn decode_f64(path: &Path, bytes: &[u8], count: usize) -> Result<Vec<f64>> {
    if bytes.len() != 8 * count {
        return Err(Error::format(
            path,
            format!("expected {} bytes, found {}", 8 * count, bytes.len()),
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_pgm_reads_as_zero() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.pgm");
        let mut bytes = b"P5\n# comment\n64 64\n255\n".to_vec();
        bytes.extend(vec![0u8; 64 * 64]);
        fs::write(&p, bytes).unwrap();
        let f = read_signal(&p, SignalFormat::Pgm).unwrap();
        assert_eq!(f.grid(), Grid::new(2, 64).unwrap());
        assert_eq!(f.norm(), 0.0);
    }

    #[test]
    fn saturated_pgm_reads_as_one() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.pgm");
        let mut bytes = b"P5 8 8 255\n".to_vec();
        bytes.extend(vec![255u8; 64]);
        fs::write(&p, bytes).unwrap();
        let f = read_signal(&p, SignalFormat::from_path(&p)).unwrap();
        assert!(f.data().iter().all(|v| v.re == 1.0));
    }

    #[test]
    fn sixteen_bit_pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.pgm");
        let g = Grid::new(2, 8).unwrap();
        let f = Signal::from_real(g, (0..64).map(|i| i as f64 / 63.0).collect()).unwrap();
        write_pgm(&p, &f, 65535).unwrap();
        let back = read_signal(&p, SignalFormat::Pgm).unwrap();
        assert!(back.distance(&f).unwrap() < 64.0 * 1e-5);
    }

    #[test]
    fn malformed_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.pgm");
        for bytes in [
            &b"P2 4 4 255\n"[..],
            b"P5 4 4\n",
            b"P5 4 4 255\n123",
            b"P5 4 2 255\n12345678",
        ] {
            fs::write(&p, bytes).unwrap();
            assert!(
                matches!(
                    read_signal(&p, SignalFormat::Pgm),
                    Err(Error::Format { .. })
                ),
                "{bytes:?}"
            );
        }
    }

    #[test]
    fn raw_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(2, 16).unwrap();
        let real =
            Signal::from_real(g, (0..256).map(|i| (i as f64).sin() * 1e-300).collect()).unwrap();
        let cplx = Signal::new(
            g,
            (0..256)
                .map(|i| Complex64::new(1.0 / (i as f64 + 1.0), -(i as f64).sqrt()))
                .collect(),
        )
        .unwrap();
        for (name, f) in [("r.f64", real), ("c.f64", cplx)] {
            let p = dir.path().join(name);
            write_raw(&p, &f).unwrap();
            let back = read_signal(&p, SignalFormat::from_path(&p)).unwrap();
            assert_eq!(back, f);
        }
    }

    #[test]
    fn raw_with_wrong_length_fails() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.f64");
        fs::write(&p, encode_f64(&[1.0, 2.0, 3.0])).unwrap();
        fs::write(sidecar_path(&p), r#"{"dims": [4]}"#).unwrap();
        assert!(matches!(
            read_signal(&p, SignalFormat::RawF64),
            Err(Error::Format { .. })
        ));
        fs::write(sidecar_path(&p), r#"{"dims": [3, 4]}"#).unwrap();
        assert!(read_signal(&p, SignalFormat::RawF64).is_err());
    }
}
