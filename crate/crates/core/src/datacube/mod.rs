//! Hyperspectral cubes, single-band images and ground-truth label rasters.

mod header;
mod io;
mod raster;

pub use header::{ByteOrder, CubeHeader, Interleave, SampleType};
pub use io::{load_cube, load_labels, write_cube, write_labels};
pub use raster::{read_class_map, read_pgm, write_class_map, write_pgm, Palette};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `rows × cols × bands` reflectance cube, stored band-sequential and
/// row-major within each band.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperCube<T> {
    rows: usize,
    cols: usize,
    bands: usize,
    values: Vec<T>,
    band_labels: Option<Vec<String>>,
}

impl<T: Real> HyperCube<T> {
    pub fn new(rows: usize, cols: usize, bands: usize, values: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 || bands == 0 {
            return Err(Error::InvalidArgument(format!(
                "cube dimensions must be positive, got {rows}x{cols}x{bands}"
            )));
        }
        if values.len() != rows * cols * bands {
            return Err(Error::DimensionMismatch {
                what: "cube sample count",
                expected: rows * cols * bands,
                actual: values.len(),
            });
        }
        if let Some(offset) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { offset });
        }
        Ok(HyperCube {
            rows,
            cols,
            bands,
            values,
            band_labels: None,
        })
    }

    /// Builds a cube from per-pixel spectra given in row-major pixel order.
    pub fn from_pixels(rows: usize, cols: usize, spectra: &[Vec<T>]) -> Result<Self> {
        let bands = spectra.first().map_or(0, Vec::len);
        if spectra.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "pixel count",
                expected: rows * cols,
                actual: spectra.len(),
            });
        }
        let n = rows * cols;
        let mut values = vec![T::zero(); n * bands];
        for (p, s) in spectra.iter().enumerate() {
            if s.len() != bands {
                return Err(Error::DimensionMismatch {
                    what: "spectrum length",
                    expected: bands,
                    actual: s.len(),
                });
            }
            for (b, &v) in s.iter().enumerate() {
                values[b * n + p] = v;
            }
        }
        Self::new(rows, cols, bands, values)
    }

    pub fn with_band_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.bands {
            return Err(Error::DimensionMismatch {
                what: "band label count",
                expected: self.bands,
                actual: labels.len(),
            });
        }
        self.band_labels = Some(labels);
        Ok(self)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }
    #[inline]
    pub fn bands(&self) -> usize {
        self.bands
    }
    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn band_labels(&self) -> Option<&[String]> {
        self.band_labels.as_deref()
    }

    /// Contiguous plane of band `b`.
    pub fn band(&self, b: usize) -> &[T] {
        let n = self.pixel_count();
        &self.values[b * n..(b + 1) * n]
    }

    pub fn band_image(&self, b: usize) -> Image<T> {
        Image {
            rows: self.rows,
            cols: self.cols,
            values: self.band(b).to_vec(),
        }
    }

    #[inline]
    pub fn get(&self, band: usize, row: usize, col: usize) -> T {
        self.values[(band * self.rows + row) * self.cols + col]
    }

    pub fn spectrum(&self, row: usize, col: usize) -> Vec<T> {
        let n = self.pixel_count();
        let p = row * self.cols + col;
        (0..self.bands).map(|b| self.values[b * n + p]).collect()
    }

    /// Drops the given 0-based bands; the remaining bands keep their order and values.
    pub fn remove_bands(&self, band_indices: &[usize]) -> Result<Self> {
        let mut drop = vec![false; self.bands];
        for &b in band_indices {
            if b >= self.bands {
                return Err(Error::InvalidArgument(format!(
                    "band index {b} out of range for a {}-band cube",
                    self.bands
                )));
            }
            if drop[b] {
                return Err(Error::InvalidArgument(format!("band index {b} listed twice")));
            }
            drop[b] = true;
        }
        let keep: Vec<usize> = (0..self.bands).filter(|&b| !drop[b]).collect();
        if keep.is_empty() {
            return Err(Error::InvalidArgument("cannot remove every band".into()));
        }
        let mut values = Vec::with_capacity(keep.len() * self.pixel_count());
        for &b in &keep {
            values.extend_from_slice(self.band(b));
        }
        let band_labels = self
            .band_labels
            .as_ref()
            .map(|l| keep.iter().map(|&b| l[b].clone()).collect());
        Ok(HyperCube {
            rows: self.rows,
            cols: self.cols,
            bands: keep.len(),
            values,
            band_labels,
        })
    }
}

/// Expands 1-based inclusive band ranges such as `"104-108,150-163,220"`
/// into sorted 0-based indices.
pub fn parse_band_ranges(spec: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || Error::InvalidArgument(format!("bad band range {part:?}"));
        let (lo, hi) = match part.split_once(['-', '–']) {
            Some((a, b)) => (
                a.trim().parse::<usize>().map_err(|_| bad())?,
                b.trim().parse::<usize>().map_err(|_| bad())?,
            ),
            None => {
                let v = part.parse::<usize>().map_err(|_| bad())?;
                (v, v)
            }
        };
        if lo == 0 || hi < lo {
            return Err(bad());
        }
        out.extend((lo..=hi).map(|b| b - 1));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Water-absorption bands dropped from the 220-band Indian Pines scene (1-based).
pub const INDIAN_PINES_WATER_BANDS: &str = "104-108,150-163,220";
/// Water-absorption bands dropped from the 224-band Salinas scene (1-based).
pub const SALINAS_WATER_BANDS: &str = "108-112,154-167,224";

/// Single-band `rows × cols` raster, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

impl<T: Real> Image<T> {
    pub fn new(rows: usize, cols: usize, values: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "image pixel count",
                expected: rows * cols,
                actual: values.len(),
            });
        }
        if let Some(offset) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { offset });
        }
        Ok(Image { rows, cols, values })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                values.push(f(r, c));
            }
        }
        Image { rows, cols, values }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }
    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.cols + col]
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

/// Ground-truth or predicted labels. `0` is unlabeled background, `1..=K` are classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    rows: usize,
    cols: usize,
    labels: Vec<u16>,
    class_count: u16,
}

impl LabelMap {
    /// `class_count` defaults to the largest label present.
    pub fn new(rows: usize, cols: usize, labels: Vec<u16>, class_count: Option<u16>) -> Result<Self> {
        if labels.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "label count",
                expected: rows * cols,
                actual: labels.len(),
            });
        }
        let max = labels.iter().copied().max().unwrap_or(0);
        let class_count = class_count.unwrap_or(max);
        if max > class_count {
            return Err(Error::InvalidArgument(format!(
                "label {max} exceeds declared class count {class_count}"
            )));
        }
        Ok(LabelMap {
            rows,
            cols,
            labels,
            class_count,
        })
    }

    pub fn background(rows: usize, cols: usize, class_count: u16) -> Self {
        LabelMap {
            rows,
            cols,
            labels: vec![0; rows * cols],
            class_count,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }
    #[inline]
    pub fn class_count(&self) -> u16 {
        self.class_count
    }
    pub fn labels(&self) -> &[u16] {
        &self.labels
    }
    #[inline]
    pub fn get(&self, index: usize) -> u16 {
        self.labels[index]
    }
    pub(crate) fn set(&mut self, index: usize, label: u16) {
        self.labels[index] = label;
    }

    /// Row-major indices of every nonzero pixel.
    pub fn labeled_indices(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] != 0).collect()
    }

    /// Pixel indices per nonzero class, ascending within each class.
    pub fn indices_by_class(&self) -> BTreeMap<u16, Vec<usize>> {
        let mut out: BTreeMap<u16, Vec<usize>> = BTreeMap::new();
        for (i, &l) in self.labels.iter().enumerate() {
            if l != 0 {
                out.entry(l).or_default().push(i);
            }
        }
        out
    }

    pub fn class_counts(&self) -> BTreeMap<u16, usize> {
        self.indices_by_class()
            .into_iter()
            .map(|(k, v)| (k, v.len()))
            .collect()
    }

    /// Sorted distinct nonzero labels.
    pub fn classes(&self) -> Vec<u16> {
        self.indices_by_class().into_keys().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_cube(rows: usize, cols: usize, bands: usize) -> HyperCube<f64> {
        let values = (0..rows * cols * bands).map(|v| v as f64).collect();
        HyperCube::new(rows, cols, bands, values).unwrap()
    }

    #[test]
    fn rejects_bad_cubes() {
        assert!(HyperCube::<f64>::new(0, 1, 1, vec![]).is_err());
        assert!(HyperCube::new(1, 2, 1, vec![1.0]).is_err());
        assert!(matches!(
            HyperCube::new(1, 2, 1, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { offset: 1 })
        ));
    }

    #[test]
    fn water_band_lists() {
        let ip = parse_band_ranges(INDIAN_PINES_WATER_BANDS).unwrap();
        assert_eq!(ip.len(), 20);
        assert_eq!(ip[0], 103);
        assert_eq!(*ip.last().unwrap(), 219);
        let sal = parse_band_ranges(SALINAS_WATER_BANDS).unwrap();
        assert_eq!(sal.len(), 20);
        assert_eq!(*sal.last().unwrap(), 223);
        assert!(parse_band_ranges("0-3").is_err());
        assert!(parse_band_ranges("5-3").is_err());
        assert!(parse_band_ranges("").unwrap().is_empty());
    }

    #[test]
    fn remove_water_bands_from_full_scenes() {
        let ip = HyperCube::new(2, 2, 220, vec![1.0; 4 * 220]).unwrap();
        let ip = ip
            .remove_bands(&parse_band_ranges(INDIAN_PINES_WATER_BANDS).unwrap())
            .unwrap();
        assert_eq!(ip.bands(), 200);
        let sal = HyperCube::new(2, 2, 224, vec![1.0; 4 * 224]).unwrap();
        let sal = sal
            .remove_bands(&parse_band_ranges(SALINAS_WATER_BANDS).unwrap())
            .unwrap();
        assert_eq!(sal.bands(), 204);
    }

    #[test]
    fn remove_bands_keeps_order_and_values() {
        let cube = ramp_cube(2, 3, 5);
        assert_eq!(cube.remove_bands(&[]).unwrap(), cube);
        let out = cube.remove_bands(&[1, 3]).unwrap();
        assert_eq!(out.bands(), 3);
        assert_eq!(out.band(0), cube.band(0));
        assert_eq!(out.band(1), cube.band(2));
        assert_eq!(out.band(2), cube.band(4));
        assert!(cube.remove_bands(&[5]).is_err());
        assert!(cube.remove_bands(&[2, 2]).is_err());
    }

    #[test]
    fn remove_bands_is_order_independent() {
        let cube = ramp_cube(3, 2, 8);
        let a = cube.remove_bands(&[1, 6]).unwrap().remove_bands(&[2]).unwrap();
        // After dropping 1 and 6, original band 3 sits at index 2.
        let b = cube.remove_bands(&[3]).unwrap().remove_bands(&[1, 5]).unwrap();
        let c = cube.remove_bands(&[1, 3, 6]).unwrap();
        assert_eq!(a, c);
        assert_eq!(b, c);
    }

    #[test]
    fn spectrum_and_pixels() {
        let spectra = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]];
        let cube = HyperCube::from_pixels(1, 3, &spectra).unwrap();
        assert_eq!(cube.band(0), &[1.0, 3.0, 5.0]);
        assert_eq!(cube.spectrum(0, 2), vec![5.0, 6.0]);
    }

    #[test]
    fn label_map_bookkeeping() {
        let m = LabelMap::new(2, 3, vec![0, 2, 1, 2, 0, 2], None).unwrap();
        assert_eq!(m.class_count(), 2);
        assert_eq!(m.classes(), vec![1, 2]);
        assert_eq!(m.labeled_indices(), vec![1, 2, 3, 5]);
        assert_eq!(m.class_counts()[&2], 3);
        assert!(LabelMap::new(1, 2, vec![3, 0], Some(2)).is_err());
        assert!(LabelMap::new(1, 2, vec![0, 0], None).unwrap().labeled_indices().is_empty());
    }
}
