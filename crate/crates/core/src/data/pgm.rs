use std::fs;
use std::path::Path;

use crate::error::DataError;

/// Grayscale image with pixels in row-major order, as read from the file.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<f64>,
}

impl GrayImage {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }
}

fn pgm(msg: impl Into<String>) -> DataError {
    DataError::Pgm(msg.into())
}

/// Header tokens, skipping `#` comments; returns the tokens and the offset
/// just past the single whitespace byte that ends the header.
fn header(bytes: &[u8]) -> Result<(Vec<String>, usize), DataError> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < 4 {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(pgm("truncated header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    Ok((tokens, i + 1))
}

/// Plain (P2) or raw (P5) PGM.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage, DataError> {
    let (tokens, offset) = header(bytes)?;
    let num = |k: usize, what: &str| -> Result<usize, DataError> {
        tokens[k].parse().map_err(|_| pgm(format!("bad {what} `{}`", tokens[k])))
    };
    let (width, height, maxval) = (num(1, "width")?, num(2, "height")?, num(3, "maxval")?);
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(pgm(format!("bad geometry {width}x{height}, maxval {maxval}")));
    }
    let n = width * height;
    let pixels: Vec<f64> = match tokens[0].as_str() {
        "P2" => {
            let body = String::from_utf8_lossy(bytes.get(offset..).unwrap_or(&[]));
            let vals: Vec<f64> = body
                .split_ascii_whitespace()
                .take(n)
                .map(|t| t.parse::<u16>().map(f64::from).map_err(|_| pgm(format!("bad pixel `{t}`"))))
                .collect::<Result<_, _>>()?;
            vals
        }
        "P5" => {
            let per = if maxval < 256 { 1 } else { 2 };
            let body = bytes.get(offset..offset + n * per).ok_or_else(|| pgm("truncated pixel data"))?;
            if per == 1 {
                body.iter().map(|&b| f64::from(b)).collect()
            } else {
                body.chunks_exact(2).map(|c| f64::from(u16::from_be_bytes([c[0], c[1]]))).collect()
            }
        }
        magic => return Err(pgm(format!("unsupported magic `{magic}`"))),
    };
    if pixels.len() != n {
        return Err(pgm(format!("expected {n} pixels, found {}", pixels.len())));
    }
    if pixels.iter().any(|&p| p > maxval as f64) {
        return Err(pgm("pixel above maxval"));
    }
    Ok(GrayImage {
        width,
        height,
        maxval: maxval as u16,
        pixels,
    })
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage, DataError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| DataError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_pgm(&bytes).map_err(|e| DataError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Raw (P5) 8-bit PGM; pixels are clamped to `0..=255` and rounded.
pub fn write_pgm(path: impl AsRef<Path>, width: usize, height: usize, pixels: &[f64]) -> Result<(), DataError> {
    assert_eq!(pixels.len(), width * height, "pixel count");
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    bytes.extend(pixels.iter().map(|&p| p.round().clamp(0.0, 255.0) as u8));
    super::io::write_atomic(path.as_ref(), &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_with_comments() {
        let img = parse_pgm(b"P2\n# made by hand\n3 2\n# again\n15\n0 1 2\n3 4 15\n").unwrap();
        assert_eq!((img.width, img.height, img.maxval), (3, 2, 15));
        assert_eq!(img.pixels, vec![0.0, 1.0, 2.0, 3.0, 4.0, 15.0]);
        assert_eq!(img.at(1, 2), 15.0);
    }

    #[test]
    fn raw_eight_and_sixteen_bit() {
        let mut b = b"P5 2 1 255\n".to_vec();
        b.extend([7u8, 200]);
        assert_eq!(parse_pgm(&b).unwrap().pixels, vec![7.0, 200.0]);
        let mut b = b"P5\n1 1\n1000\n".to_vec();
        b.extend(999u16.to_be_bytes());
        assert_eq!(parse_pgm(&b).unwrap().pixels, vec![999.0]);
    }

    #[test]
    fn rejects_other_formats_and_truncation() {
        assert!(parse_pgm(b"P6\n1 1\n255\nabc").is_err());
        assert!(parse_pgm(b"P5\n4 4\n255\n\x01\x02").is_err());
        assert!(parse_pgm(b"P2\n2 2\n").is_err());
        assert!(parse_pgm(b"P2\n1 1\n10\n11\n").is_err());
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        write_pgm(&path, 2, 2, &[0.0, 10.4, 300.0, -5.0]).unwrap();
        assert_eq!(read_pgm(&path).unwrap().pixels, vec![0.0, 10.0, 255.0, 0.0]);
    }
}
