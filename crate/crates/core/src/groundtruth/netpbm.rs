//! PFM, PGM (P5) and PPM (P6) codecs.
//!
//! Writers emit a single-space, newline-terminated header. PFM rows are
//! stored bottom to top with a negative scale (little-endian samples);
//! 16-bit PGM samples are big-endian.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetpbmError {
    #[error("bad header: {0}")]
    Header(String),
    #[error("expected {expected} bytes of samples, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("sample count {found} does not match {width}x{height}x{channels}")]
    Size {
        width: usize,
        height: usize,
        channels: usize,
        found: usize,
    },
}

fn check(width: usize, height: usize, channels: usize, found: usize) -> Result<(), NetpbmError> {
    if width * height * channels != found {
        return Err(NetpbmError::Size {
            width,
            height,
            channels,
            found,
        });
    }
    Ok(())
}

pub fn encode_pfm(width: usize, height: usize, values: &[f32]) -> Result<Vec<u8>, NetpbmError> {
    check(width, height, 1, values.len())?;
    let mut out = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
    out.reserve(values.len() * 4);
    for row in (0..height).rev() {
        for v in &values[row * width..(row + 1) * width] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn encode_pgm8(width: usize, height: usize, values: &[u8]) -> Result<Vec<u8>, NetpbmError> {
    check(width, height, 1, values.len())?;
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(values);
    Ok(out)
}

pub fn encode_pgm16(width: usize, height: usize, values: &[u16]) -> Result<Vec<u8>, NetpbmError> {
    check(width, height, 1, values.len())?;
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.reserve(values.len() * 2);
    for v in values {
        out.extend_from_slice(&v.to_be_bytes());
    }
    Ok(out)
}

pub fn encode_ppm(width: usize, height: usize, rgb: &[u8]) -> Result<Vec<u8>, NetpbmError> {
    check(width, height, 3, rgb.len())?;
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    Ok(out)
}

struct Header<'a> {
    magic: &'a str,
    fields: Vec<&'a str>,
    data: &'a [u8],
}

/// Splits `count` whitespace-separated header tokens (after the magic) from the payload.
fn header(bytes: &[u8], count: usize) -> Result<Header<'_>, NetpbmError> {
    let mut tokens = Vec::with_capacity(count + 1);
    let mut i = 0;
    while tokens.len() < count + 1 {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(NetpbmError::Header("unexpected end of header".into()));
        }
        let tok = std::str::from_utf8(&bytes[start..i]).map_err(|_| NetpbmError::Header("non-ASCII header".into()))?;
        tokens.push(tok);
    }
    if i >= bytes.len() {
        return Err(NetpbmError::Header("missing separator after header".into()));
    }
    Ok(Header {
        magic: tokens[0],
        fields: tokens[1..].to_vec(),
        data: &bytes[i + 1..],
    })
}

fn number<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, NetpbmError> {
    s.parse().map_err(|_| NetpbmError::Header(format!("bad {what} `{s}`")))
}

fn payload(data: &[u8], expected: usize) -> Result<&[u8], NetpbmError> {
    if data.len() < expected {
        return Err(NetpbmError::Truncated {
            expected,
            found: data.len(),
        });
    }
    Ok(&data[..expected])
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    pub width: usize,
    pub height: usize,
    /// Top-to-bottom rows.
    pub values: Vec<f32>,
}

pub fn decode_pfm(bytes: &[u8]) -> Result<FloatImage, NetpbmError> {
    let h = header(bytes, 3)?;
    if h.magic != "Pf" {
        return Err(NetpbmError::Header(format!("expected grayscale PFM, found `{}`", h.magic)));
    }
    let width: usize = number(h.fields[0], "width")?;
    let height: usize = number(h.fields[1], "height")?;
    let scale: f64 = number(h.fields[2], "scale")?;
    let data = payload(h.data, width * height * 4)?;
    let read = |c: &[u8]| {
        let b = [c[0], c[1], c[2], c[3]];
        if scale < 0.0 {
            f32::from_le_bytes(b)
        } else {
            f32::from_be_bytes(b)
        }
    };
    let mut values = vec![0f32; width * height];
    for (file_row, chunk) in data.chunks_exact(width.max(1) * 4).enumerate().take(height) {
        let row = height - 1 - file_row;
        for (x, c) in chunk.chunks_exact(4).enumerate() {
            values[row * width + x] = read(c);
        }
    }
    Ok(FloatImage { width, height, values })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub values: Vec<u16>,
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, NetpbmError> {
    let h = header(bytes, 3)?;
    if h.magic != "P5" {
        return Err(NetpbmError::Header(format!("expected P5, found `{}`", h.magic)));
    }
    let width: usize = number(h.fields[0], "width")?;
    let height: usize = number(h.fields[1], "height")?;
    let maxval: u16 = number(h.fields[2], "maxval")?;
    if maxval == 0 {
        return Err(NetpbmError::Header("maxval must be positive".into()));
    }
    let values = if maxval < 256 {
        payload(h.data, width * height)?.iter().map(|&v| v as u16).collect()
    } else {
        payload(h.data, width * height * 2)?
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    Ok(GrayImage {
        width,
        height,
        maxval,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

pub fn decode_ppm(bytes: &[u8]) -> Result<RgbImage, NetpbmError> {
    let h = header(bytes, 3)?;
    if h.magic != "P6" {
        return Err(NetpbmError::Header(format!("expected P6, found `{}`", h.magic)));
    }
    let width: usize = number(h.fields[0], "width")?;
    let height: usize = number(h.fields[1], "height")?;
    let maxval: u16 = number(h.fields[2], "maxval")?;
    if maxval != 255 {
        return Err(NetpbmError::Header(format!("unsupported PPM maxval {maxval}")));
    }
    Ok(RgbImage {
        width,
        height,
        rgb: payload(h.data, width * height * 3)?.to_vec(),
    })
}
