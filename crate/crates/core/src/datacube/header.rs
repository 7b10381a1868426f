use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleType {
    U8,
    U16,
    I16,
    F32,
    F64,
}

impl SampleType {
    pub fn size(self) -> usize {
        match self {
            SampleType::U8 => 1,
            SampleType::U16 | SampleType::I16 => 2,
            SampleType::F32 => 4,
            SampleType::F64 => 8,
        }
    }

    /// ENVI `data type` code.
    fn from_envi_code(code: u32) -> Option<Self> {
        match code {
            1 => Some(SampleType::U8),
            2 => Some(SampleType::I16),
            4 => Some(SampleType::F32),
            5 => Some(SampleType::F64),
            12 => Some(SampleType::U16),
            _ => None,
        }
    }

    pub fn is_integer(self) -> bool {
        !matches!(self, SampleType::F32 | SampleType::F64)
    }
}

impl FromStr for SampleType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "u8" | "uint8" | "byte" => Ok(SampleType::U8),
            "u16" | "uint16" => Ok(SampleType::U16),
            "i16" | "int16" => Ok(SampleType::I16),
            "f32" | "float32" | "float" => Ok(SampleType::F32),
            "f64" | "float64" | "double" => Ok(SampleType::F64),
            other => other
                .parse::<u32>()
                .ok()
                .and_then(SampleType::from_envi_code)
                .ok_or_else(|| format!("unknown sample type {s:?}")),
        }
    }
}

impl fmt::Display for SampleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleType::U8 => "u8",
            SampleType::U16 => "u16",
            SampleType::I16 => "i16",
            SampleType::F32 => "f32",
            SampleType::F64 => "f64",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteOrder {
    Little,
    Big,
}

impl FromStr for ByteOrder {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "little" | "le" | "0" => Ok(ByteOrder::Little),
            "big" | "be" | "1" => Ok(ByteOrder::Big),
            _ => Err(format!("unknown byte order {s:?}")),
        }
    }
}

impl fmt::Display for ByteOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ByteOrder::Little => "little",
            ByteOrder::Big => "big",
        })
    }
}

/// On-disk sample arrangement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interleave {
    /// Band-sequential: `[band][row][col]`.
    Bsq,
    /// Band-interleaved-by-line: `[row][band][col]`.
    Bil,
    /// Band-interleaved-by-pixel: `[row][col][band]`.
    Bip,
}

impl Interleave {
    /// File offset (in samples) of `(band, row, col)`.
    #[inline]
    pub fn offset(self, rows: usize, cols: usize, bands: usize, band: usize, row: usize, col: usize) -> usize {
        match self {
            Interleave::Bsq => (band * rows + row) * cols + col,
            Interleave::Bil => (row * bands + band) * cols + col,
            Interleave::Bip => (row * cols + col) * bands + band,
        }
    }
}

impl FromStr for Interleave {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bsq" => Ok(Interleave::Bsq),
            "bil" => Ok(Interleave::Bil),
            "bip" => Ok(Interleave::Bip),
            _ => Err(format!("unknown interleave {s:?}")),
        }
    }
}

impl fmt::Display for Interleave {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interleave::Bsq => "bsq",
            Interleave::Bil => "bil",
            Interleave::Bip => "bip",
        })
    }
}

/// Text header describing a raw sample file.
///
/// The format is `key = value` lines with `#` comments. Recognised keys are
/// `rows`, `cols`, `bands`, `dtype`, `byteorder`, `interleave` and optional
/// `band_names` (comma separated). The ENVI spellings `lines`, `samples`,
/// `data type`, `byte order`, `header offset` and brace-delimited multi-line
/// values are accepted as well; any other key is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeHeader {
    pub rows: usize,
    pub cols: usize,
    pub bands: usize,
    pub sample_type: SampleType,
    pub byte_order: ByteOrder,
    pub interleave: Interleave,
    pub header_offset: usize,
    pub band_names: Option<Vec<String>>,
}

impl CubeHeader {
    pub fn new(rows: usize, cols: usize, bands: usize, sample_type: SampleType) -> Self {
        CubeHeader {
            rows,
            cols,
            bands,
            sample_type,
            byte_order: ByteOrder::Little,
            interleave: Interleave::Bsq,
            header_offset: 0,
            band_names: None,
        }
    }

    pub fn with_interleave(mut self, interleave: Interleave) -> Self {
        self.interleave = interleave;
        self
    }

    pub fn with_byte_order(mut self, byte_order: ByteOrder) -> Self {
        self.byte_order = byte_order;
        self
    }

    pub fn sample_count(&self) -> usize {
        self.rows * self.cols * self.bands
    }

    pub fn data_bytes(&self) -> u64 {
        (self.sample_count() * self.sample_type.size()) as u64
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|m| Error::format(path, m))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut rows = None;
        let mut cols = None;
        let mut bands = None;
        let mut sample_type = None;
        let mut byte_order = ByteOrder::Little;
        let mut interleave = Interleave::Bsq;
        let mut header_offset = 0;
        let mut band_names = None;

        for (key, value, line) in entries(text)? {
            let ctx = |e: String| format!("line {line}: {key}: {e}");
            let parse_usize = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| ctx(format!("expected a nonnegative integer, got {v:?}")))
            };
            match key.as_str() {
                "rows" | "lines" => rows = Some(parse_usize(&value)?),
                "cols" | "samples" => cols = Some(parse_usize(&value)?),
                "bands" => bands = Some(parse_usize(&value)?),
                "dtype" | "data type" => sample_type = Some(value.parse().map_err(ctx)?),
                "byteorder" | "byte order" => byte_order = value.parse().map_err(ctx)?,
                "interleave" => interleave = value.parse().map_err(ctx)?,
                "header offset" | "header_offset" => header_offset = parse_usize(&value)?,
                "band_names" | "band names" | "wavelength" => {
                    band_names = Some(
                        value
                            .split(',')
                            .map(|s| s.trim().to_string())
                            .filter(|s| !s.is_empty())
                            .collect(),
                    )
                }
                _ => {}
            }
        }

        let header = CubeHeader {
            rows: rows.ok_or("missing key: rows")?,
            cols: cols.ok_or("missing key: cols")?,
            bands: bands.unwrap_or(1),
            sample_type: sample_type.ok_or("missing key: dtype")?,
            byte_order,
            interleave,
            header_offset,
            band_names,
        };
        if header.rows == 0 || header.cols == 0 || header.bands == 0 {
            return Err("rows, cols and bands must all be at least 1".into());
        }
        if let Some(names) = &header.band_names {
            if names.len() != header.bands {
                return Err(format!(
                    "{} band names for {} bands",
                    names.len(),
                    header.bands
                ));
            }
        }
        Ok(header)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "rows = {}\ncols = {}\nbands = {}\ndtype = {}\nbyteorder = {}\ninterleave = {}\n",
            self.rows, self.cols, self.bands, self.sample_type, self.byte_order, self.interleave
        );
        if self.header_offset != 0 {
            s.push_str(&format!("header_offset = {}\n", self.header_offset));
        }
        if let Some(names) = &self.band_names {
            s.push_str(&format!("band_names = {}\n", names.join(", ")));
        }
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// `<data>.hdr` if present, else the data path with its extension replaced by `.hdr`.
    pub fn sibling_path(data_path: &Path) -> Option<PathBuf> {
        let mut appended = data_path.as_os_str().to_owned();
        appended.push(".hdr");
        let appended = PathBuf::from(appended);
        if appended.exists() {
            return Some(appended);
        }
        let replaced = data_path.with_extension("hdr");
        replaced.exists().then_some(replaced)
    }
}

/// Splits header text into `(lowercased key, value, line number)` entries.
fn entries(text: &str) -> Result<Vec<(String, String, usize)>, String> {
    let mut out = Vec::new();
    let mut lines = text.lines().enumerate();
    while let Some((idx, raw)) = lines.next() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line.eq_ignore_ascii_case("envi") {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected key = value", idx + 1));
        };
        let mut value = value.trim().to_string();
        if value.starts_with('{') {
            while !value.contains('}') {
                let Some((_, more)) = lines.next() else {
                    return Err(format!("line {}: unterminated brace value", idx + 1));
                };
                value.push(' ');
                value.push_str(more.trim());
            }
            value = value
                .trim_start_matches('{')
                .split('}')
                .next()
                .unwrap_or("")
                .trim()
                .to_string();
        }
        let key = key.trim().to_ascii_lowercase();
        out.push((key, value, idx + 1));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_header() {
        let h = CubeHeader::parse("rows=2\ncols=3\nbands=4\ndtype=u16\n# comment\n").unwrap();
        assert_eq!((h.rows, h.cols, h.bands), (2, 3, 4));
        assert_eq!(h.sample_type, SampleType::U16);
        assert_eq!(h.byte_order, ByteOrder::Little);
        assert_eq!(h.interleave, Interleave::Bsq);
    }

    #[test]
    fn envi_style_header() {
        let text = "ENVI\nsamples = 145\nlines = 145\nbands = 3\ndata type = 12\n\
                    interleave = bil\nbyte order = 1\nwavelength = {\n 400.0, 410.0,\n 420.0}\n\
                    description = {ignored}\n";
        let h = CubeHeader::parse(text).unwrap();
        assert_eq!((h.rows, h.cols, h.bands), (145, 145, 3));
        assert_eq!(h.sample_type, SampleType::U16);
        assert_eq!(h.byte_order, ByteOrder::Big);
        assert_eq!(h.interleave, Interleave::Bil);
        assert_eq!(h.band_names.unwrap(), vec!["400.0", "410.0", "420.0"]);
    }

    #[test]
    fn round_trips_through_text() {
        let h = CubeHeader::new(5, 6, 7, SampleType::F32)
            .with_interleave(Interleave::Bip)
            .with_byte_order(ByteOrder::Big);
        assert_eq!(CubeHeader::parse(&h.to_text()).unwrap(), h);
    }

    #[test]
    fn rejects_missing_and_zero_dims() {
        assert!(CubeHeader::parse("cols=2\ndtype=u8").unwrap_err().contains("rows"));
        assert!(CubeHeader::parse("rows=0\ncols=2\ndtype=u8").is_err());
        assert!(CubeHeader::parse("rows=1\ncols=2\ndtype=u7").unwrap_err().contains("line 3"));
    }

    #[test]
    fn interleave_offsets() {
        // 2 rows, 3 cols, 4 bands; sample (band 1, row 1, col 2).
        assert_eq!(Interleave::Bsq.offset(2, 3, 4, 1, 1, 2), 6 + 3 + 2);
        assert_eq!(Interleave::Bil.offset(2, 3, 4, 1, 1, 2), (4 + 1) * 3 + 2);
        assert_eq!(Interleave::Bip.offset(2, 3, 4, 1, 1, 2), (3 + 2) * 4 + 1);
    }
}
