//! Radiance `.hdr` reader and writer.
//!
//! The reader accepts flat and adaptive run-length encoded scanlines in the
//! standard `-Y h +X w` orientation. The writer emits flat scanlines.

use std::io::Write;
use std::path::Path;

use super::rgbe::{decode_rgbe, encode_rgbe};
use super::Image;
use crate::error::{Error, Result};
use crate::io_util::write_atomic;

pub fn load_hdr(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(Error::io_at(path))?;
    read_hdr(&bytes)
}

pub fn save_hdr(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), |w| write_hdr(image, w))
}

pub fn write_hdr(image: &Image, w: &mut dyn Write) -> Result<()> {
    write!(
        w,
        "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y {} +X {}\n",
        image.height(),
        image.width()
    )?;
    let mut row = Vec::with_capacity(image.width() * 4);
    for y in 0..image.height() {
        row.clear();
        for x in 0..image.width() {
            row.extend_from_slice(&encode_rgbe(image.get(x, y)));
        }
        w.write_all(&row)?;
    }
    Ok(())
}

pub fn read_hdr(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0;
    let next_line = |pos: &mut usize| -> Option<String> {
        if *pos >= bytes.len() {
            return None;
        }
        let end = bytes[*pos..].iter().position(|&b| b == b'\n')? + *pos;
        let line = String::from_utf8_lossy(&bytes[*pos..end]).into_owned();
        *pos = end + 1;
        Some(line)
    };

    let magic = next_line(&mut pos)
        .ok_or_else(|| Error::MalformedHeader("missing magic line".into()))?;
    if !magic.starts_with("#?") {
        return Err(Error::MalformedHeader(format!("bad magic `{magic}`")));
    }
    loop {
        let line = next_line(&mut pos)
            .ok_or_else(|| Error::MalformedHeader("header not terminated".into()))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            break;
        }
        if let Some(fmt) = line.strip_prefix("FORMAT=") {
            if fmt.trim() != "32-bit_rle_rgbe" {
                return Err(Error::MalformedHeader(format!("unsupported format `{fmt}`")));
            }
        }
    }
    let res = next_line(&mut pos)
        .ok_or_else(|| Error::MalformedHeader("missing resolution line".into()))?;
    let (width, height) = parse_resolution(res.trim_end_matches('\r'))?;

    let mut pixels = Vec::with_capacity(width * height);
    let mut scan = vec![[0u8; 4]; width];
    for row in 0..height {
        pos = read_scanline(bytes, pos, &mut scan).ok_or(Error::TruncatedScanline { row })?;
        pixels.extend(scan.iter().map(|&q| decode_rgbe(q)));
    }
    Image::new(width, height, pixels)
}

fn parse_resolution(line: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(Error::MalformedHeader(format!("bad resolution line `{line}`")));
    }
    let axes_ok = ["-Y", "+Y", "-X", "+X"];
    if !axes_ok.contains(&parts[0]) || !axes_ok.contains(&parts[2]) {
        return Err(Error::MalformedHeader(format!("bad resolution line `{line}`")));
    }
    let a: usize = parts[1]
        .parse()
        .map_err(|_| Error::MalformedHeader(format!("bad dimension `{}`", parts[1])))?;
    let b: usize = parts[3]
        .parse()
        .map_err(|_| Error::MalformedHeader(format!("bad dimension `{}`", parts[3])))?;
    if parts[0] != "-Y" || parts[2] != "+X" {
        return Err(Error::UnsupportedOrientation(format!("{} {}", parts[0], parts[2])));
    }
    if a == 0 || b == 0 {
        return Err(Error::MalformedHeader(format!("empty image `{line}`")));
    }
    Ok((b, a))
}

/// Reads one scanline into `out`, returning the new offset or `None` when
/// the data runs out.
fn read_scanline(bytes: &[u8], mut pos: usize, out: &mut [[u8; 4]]) -> Option<usize> {
    let width = out.len();
    let head = bytes.get(pos..pos + 4)?;
    let is_rle = (8..0x8000).contains(&width)
        && head[0] == 2
        && head[1] == 2
        && head[2] & 0x80 == 0
        && ((head[2] as usize) << 8 | head[3] as usize) == width;
    if !is_rle {
        let data = bytes.get(pos..pos + 4 * width)?;
        for (px, chunk) in out.iter_mut().zip(data.chunks_exact(4)) {
            px.copy_from_slice(chunk);
        }
        return Some(pos + 4 * width);
    }
    pos += 4;
    for channel in 0..4 {
        let mut x = 0;
        while x < width {
            let count = *bytes.get(pos)? as usize;
            pos += 1;
            if count > 128 {
                let run = count - 128;
                let value = *bytes.get(pos)?;
                pos += 1;
                if x + run > width {
                    return None;
                }
                for px in &mut out[x..x + run] {
                    px[channel] = value;
                }
                x += run;
            } else {
                if count == 0 || x + count > width {
                    return None;
                }
                let data = bytes.get(pos..pos + count)?;
                for (px, &value) in out[x..x + count].iter_mut().zip(data) {
                    px[channel] = value;
                }
                pos += count;
                x += count;
            }
        }
    }
    Some(pos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Rgb;

    fn header(res: &str) -> Vec<u8> {
        format!("#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n{res}\n").into_bytes()
    }

    /// Adaptive RLE encoder used only to produce reader fixtures.
    fn rle_scanline(pixels: &[[u8; 4]]) -> Vec<u8> {
        let w = pixels.len();
        let mut out = vec![2, 2, (w >> 8) as u8, (w & 0xff) as u8];
        for c in 0..4 {
            let data: Vec<u8> = pixels.iter().map(|p| p[c]).collect();
            let mut i = 0;
            while i < w {
                let mut run = 1;
                while i + run < w && run < 127 && data[i + run] == data[i] {
                    run += 1;
                }
                if run >= 3 {
                    out.push(128 + run as u8);
                    out.push(data[i]);
                    i += run;
                } else {
                    let start = i;
                    let mut n = 0;
                    while i < w && n < 128 {
                        let mut r = 1;
                        while i + r < w && r < 3 && data[i + r] == data[i] {
                            r += 1;
                        }
                        if r >= 3 {
                            break;
                        }
                        i += 1;
                        n += 1;
                    }
                    out.push(n as u8);
                    out.extend_from_slice(&data[start..start + n]);
                }
            }
        }
        out
    }

    #[test]
    fn two_pixel_roundtrip() {
        let img = Image::new(2, 1, vec![Rgb::new(1.0, 0.0, 0.0), Rgb::BLACK]).unwrap();
        let mut buf = Vec::new();
        write_hdr(&img, &mut buf).unwrap();
        assert_eq!(read_hdr(&buf).unwrap(), img);
    }

    #[test]
    fn rejects_flipped_orientation() {
        let mut bytes = header("+Y 1 +X 2");
        bytes.extend_from_slice(&[0; 8]);
        assert!(matches!(read_hdr(&bytes), Err(Error::UnsupportedOrientation(_))));
    }

    #[test]
    fn truncated_payload() {
        let mut bytes = header("-Y 2 +X 2");
        bytes.extend_from_slice(&[128, 0, 0, 129, 128, 0, 0, 129, 1, 2]);
        assert!(matches!(read_hdr(&bytes), Err(Error::TruncatedScanline { row: 1 })));
    }

    #[test]
    fn malformed_headers() {
        assert!(matches!(read_hdr(b"P6\n"), Err(Error::MalformedHeader(_))));
        assert!(matches!(read_hdr(b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n"), Err(Error::MalformedHeader(_))));
        let bytes = header("-Y two +X 2");
        assert!(matches!(read_hdr(&bytes), Err(Error::MalformedHeader(_))));
        let bytes = b"#?RADIANCE\nFORMAT=32-bit_rle_xyze\n\n-Y 1 +X 2\n".to_vec();
        assert!(matches!(read_hdr(&bytes), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn reads_rle_scanlines() {
        let w = 40;
        let rows: Vec<Vec<[u8; 4]>> = (0..3)
            .map(|r| {
                (0..w)
                    .map(|x| {
                        if x < 20 {
                            [200, 100, 50, 130 + r as u8]
                        } else {
                            [(128 + x * 3) as u8, (x * 5) as u8, 7, 129]
                        }
                    })
                    .collect()
            })
            .collect();
        let mut bytes = header(&format!("-Y 3 +X {w}"));
        for row in &rows {
            bytes.extend(rle_scanline(row));
        }
        let img = read_hdr(&bytes).unwrap();
        for (r, row) in rows.iter().enumerate() {
            for (x, q) in row.iter().enumerate() {
                assert_eq!(img.get(x, r), decode_rgbe(*q));
            }
        }
        // truncated RLE stream
        bytes.truncate(bytes.len() - 5);
        assert!(matches!(read_hdr(&bytes), Err(Error::TruncatedScanline { row: 2 })));
    }

    #[test]
    fn file_roundtrip_is_quantization_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.hdr");
        let px: Vec<Rgb> = (0..32 * 16)
            .map(|i| Rgb::new(i as f64 * 0.37, 1.0 / (1.0 + i as f64), 3.0))
            .collect();
        let img = Image::new(32, 16, px).unwrap();
        save_hdr(&img, &path).unwrap();
        let back = load_hdr(&path).unwrap();
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            assert_eq!(decode_rgbe(encode_rgbe(*a)), *b);
        }
    }
}
