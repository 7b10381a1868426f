//! Netpbm graymap input and pixmap class-map output.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::LabelMap;
use crate::error::{Error, Result};

/// Class label → RGB colour. Background (0) is always black.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Palette {
    colors: BTreeMap<u16, [u8; 3]>,
}

const BASE_COLORS: [[u8; 3]; 16] = [
    [255, 0, 0],
    [0, 255, 0],
    [0, 0, 255],
    [255, 255, 0],
    [255, 0, 255],
    [0, 255, 255],
    [255, 128, 0],
    [128, 0, 255],
    [0, 128, 64],
    [128, 64, 0],
    [255, 128, 192],
    [128, 128, 128],
    [64, 160, 255],
    [160, 255, 96],
    [128, 0, 0],
    [255, 255, 255],
];

impl Palette {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: u16, rgb: [u8; 3]) -> &mut Self {
        self.colors.insert(label, rgb);
        self
    }

    pub fn get(&self, label: u16) -> Option<[u8; 3]> {
        self.colors.get(&label).copied()
    }

    /// Distinct colours for labels `1..=class_count`.
    pub fn distinct(class_count: u16) -> Self {
        let mut p = Palette::new();
        for label in 1..=class_count {
            let i = (label - 1) as usize;
            let rgb = if i < BASE_COLORS.len() {
                BASE_COLORS[i]
            } else {
                // Spread further labels over the cube; never pure black.
                let k = (i as u32).wrapping_mul(2654435761);
                [(k >> 24) as u8 | 1, (k >> 16) as u8, (k >> 8) as u8]
            };
            p.insert(label, rgb);
        }
        p
    }
}

/// Writes `map` as a binary portable pixmap (P6).
pub fn write_class_map(map: &LabelMap, palette: &Palette, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = format!("P6\n{} {}\n255\n", map.cols(), map.rows()).into_bytes();
    bytes.reserve(map.labels().len() * 3);
    for &label in map.labels() {
        let rgb = if label == 0 {
            [0, 0, 0]
        } else {
            palette.get(label).ok_or(Error::MissingPalette { label })?
        };
        bytes.extend_from_slice(&rgb);
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a P6 class map back into labels by inverse palette lookup.
pub fn read_class_map(path: impl AsRef<Path>, palette: &Palette) -> Result<LabelMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (magic, dims, body) = netpbm_header(&bytes).map_err(|m| Error::format(path, m))?;
    if magic != "P6" {
        return Err(Error::format(path, format!("expected P6 pixmap, found {magic}")));
    }
    let [cols, rows, maxval] = dims;
    if maxval != 255 || body.len() != rows * cols * 3 {
        return Err(Error::format(path, "unsupported or truncated pixmap"));
    }
    let inverse: BTreeMap<[u8; 3], u16> = palette.colors.iter().map(|(&l, &c)| (c, l)).collect();
    let labels = body
        .chunks_exact(3)
        .map(|px| {
            let rgb = [px[0], px[1], px[2]];
            if rgb == [0, 0, 0] {
                Ok(0)
            } else {
                inverse
                    .get(&rgb)
                    .copied()
                    .ok_or_else(|| Error::format(path, format!("colour {rgb:?} not in palette")))
            }
        })
        .collect::<Result<Vec<u16>>>()?;
    let class_count = palette.colors.keys().copied().max();
    LabelMap::new(rows, cols, labels, class_count)
}

pub(crate) fn is_pgm(bytes: &[u8]) -> bool {
    bytes.starts_with(b"P5") || bytes.starts_with(b"P2")
}

/// Reads a P5 (8- or 16-bit) or P2 graymap; returns `(rows, cols, values)`.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u16>)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (magic, [cols, rows, maxval], body) = netpbm_header(&bytes).map_err(|m| Error::format(path, m))?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(path, format!("bad maxval {maxval}")));
    }
    let n = rows * cols;
    let values: Vec<u16> = match magic {
        "P5" if maxval < 256 => {
            if body.len() != n {
                return Err(Error::SizeMismatch {
                    path: path.to_path_buf(),
                    expected: n as u64,
                    actual: body.len() as u64,
                });
            }
            body.iter().map(|&b| b as u16).collect()
        }
        "P5" => {
            if body.len() != 2 * n {
                return Err(Error::SizeMismatch {
                    path: path.to_path_buf(),
                    expected: 2 * n as u64,
                    actual: body.len() as u64,
                });
            }
            body.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]])).collect()
        }
        "P2" => {
            let text = std::str::from_utf8(body).map_err(|_| Error::format(path, "non-ASCII P2 body"))?;
            let vals = strip_comments(text)
                .split_ascii_whitespace()
                .map(|t| t.parse::<u16>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| Error::format(path, "bad P2 sample"))?;
            if vals.len() != n {
                return Err(Error::format(path, format!("expected {n} samples, found {}", vals.len())));
            }
            vals
        }
        other => return Err(Error::format(path, format!("unsupported graymap type {other}"))),
    };
    Ok((rows, cols, values))
}

/// Writes labels as a P5 graymap (16-bit when any label exceeds 255).
pub fn write_pgm(map: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let wide = map.labels().iter().any(|&l| l > 255);
    let maxval = if wide { 65535 } else { 255 };
    let mut bytes = format!("P5\n{} {}\n{}\n", map.cols(), map.rows(), maxval).into_bytes();
    for &l in map.labels() {
        if wide {
            bytes.extend_from_slice(&l.to_be_bytes());
        } else {
            bytes.push(l as u8);
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn strip_comments(text: &str) -> String {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parses magic, width, height and maxval; returns the remaining body.
fn netpbm_header(bytes: &[u8]) -> Result<(&str, [usize; 3], &[u8]), String> {
    let mut pos = 0;
    let mut tokens: Vec<&str> = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err("truncated netpbm header".into());
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| "non-ASCII netpbm header")?);
    }
    // Exactly one whitespace byte separates the header from binary data.
    pos += 1;
    let mut dims = [0usize; 3];
    for (d, t) in dims.iter_mut().zip(&tokens[1..]) {
        *d = t.parse().map_err(|_| format!("bad netpbm header field {t:?}"))?;
    }
    Ok((tokens[0], dims, bytes.get(pos..).unwrap_or(&[])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_background_pixel_is_black() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ppm");
        let map = LabelMap::new(1, 1, vec![0], None).unwrap();
        write_class_map(&map, &Palette::new(), &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[bytes.len() - 3..], &[0, 0, 0]);
    }

    #[test]
    fn palette_lookup_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ppm");
        let map = LabelMap::new(1, 2, vec![1, 2], None).unwrap();
        let mut palette = Palette::new();
        palette.insert(1, [255, 0, 0]).insert(2, [0, 255, 0]);
        write_class_map(&map, &palette, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(bytes, b"P6\n2 1\n255\n\xff\x00\x00\x00\xff\x00".to_vec());
    }

    #[test]
    fn missing_palette_entry_names_label() {
        let dir = tempfile::tempdir().unwrap();
        let map = LabelMap::new(1, 2, vec![1, 7], None).unwrap();
        let mut palette = Palette::new();
        palette.insert(1, [1, 2, 3]);
        let err = write_class_map(&map, &palette, dir.path().join("m.ppm")).unwrap_err();
        assert!(matches!(err, Error::MissingPalette { label: 7 }));
        assert!(err.to_string().contains('7'));
    }

    #[test]
    fn class_map_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ppm");
        let labels: Vec<u16> = (0..35).map(|i| (i * 7 % 20) as u16).collect();
        let map = LabelMap::new(5, 7, labels, Some(20)).unwrap();
        let palette = Palette::distinct(20);
        write_class_map(&map, &palette, &path).unwrap();
        let back = read_class_map(&path, &palette).unwrap();
        assert_eq!(back, map);
    }

    #[test]
    fn graymaps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.pgm");
        fs::write(&path, "P2\n# gt\n3 2\n16\n0 1 2\n16 0 3\n").unwrap();
        assert_eq!(read_pgm(&path).unwrap(), (2, 3, vec![0, 1, 2, 16, 0, 3]));

        for labels in [vec![0u16, 4, 9, 1], vec![0, 400, 9, 1]] {
            let map = LabelMap::new(2, 2, labels, None).unwrap();
            write_pgm(&map, &path).unwrap();
            let (r, c, v) = read_pgm(&path).unwrap();
            assert_eq!((r, c), (2, 2));
            assert_eq!(v, map.labels());
        }
    }
}
