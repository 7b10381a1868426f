//! Filter responses over the retained principal components, stacked per pixel.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::datacube::Image;
use crate::error::{Error, Result};
use crate::filters::{check_window, fill_patch, FilterSet};
use crate::scalar::{dot, Real};
use crate::spectral::PcStack;

/// Output of one filter on one plane.
pub type FeatureMap<T> = Image<T>;

/// Correlates `image` with a row-major `c×c` filter (no kernel flip),
/// mirror padding the borders. Output has the input's dimensions.
pub fn apply_filter<T: Real>(image: &Image<T>, filter: &[T], c: usize) -> Result<FeatureMap<T>> {
    if filter.len() != c * c {
        return Err(Error::DimensionMismatch {
            what: "filter length",
            expected: c * c,
            actual: filter.len(),
        });
    }
    check_window(c, image.rows(), image.cols())?;
    let cols = image.cols();
    let mut out = vec![T::zero(); image.len()];
    out.par_chunks_mut(cols).enumerate().for_each(|(row, dst)| {
        let mut patch = vec![T::zero(); c * c];
        for (col, o) in dst.iter_mut().enumerate() {
            fill_patch(image, c, row, col, &mut patch);
            *o = dot(filter, &patch);
        }
    });
    Image::new(image.rows(), cols, out)
}

/// Per-pixel feature vectors, pixel-major: `values[pixel * dim + feature]`.
///
/// For a profile built from `k` components and `n` filters, feature
/// `p * n + q` is filter `q` applied to component `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfile<T> {
    rows: usize,
    cols: usize,
    dim: usize,
    values: Vec<T>,
}

impl<T: Real> EnergyProfile<T> {
    pub fn new(rows: usize, cols: usize, dim: usize, values: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("profile needs at least one feature".into()));
        }
        if values.len() != rows * cols * dim {
            return Err(Error::DimensionMismatch {
                what: "profile value count",
                expected: rows * cols * dim,
                actual: values.len(),
            });
        }
        if let Some(offset) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { offset });
        }
        Ok(EnergyProfile { rows, cols, dim, values })
    }

    /// Stacks feature planes (each `rows × cols`) into a pixel-major profile.
    pub fn from_planes(rows: usize, cols: usize, planes: &[Image<T>]) -> Result<Self> {
        let dim = planes.len();
        let n = rows * cols;
        let mut values = vec![T::zero(); n * dim];
        for (j, plane) in planes.iter().enumerate() {
            if (plane.rows(), plane.cols()) != (rows, cols) {
                return Err(Error::DimensionMismatch {
                    what: "feature plane pixel count",
                    expected: n,
                    actual: plane.len(),
                });
            }
            for (p, &v) in plane.values().iter().enumerate() {
                values[p * dim + j] = v;
            }
        }
        Self::new(rows, cols, dim, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn pixel_count(&self) -> usize {
        self.rows * self.cols
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn pixel(&self, index: usize) -> &[T] {
        &self.values[index * self.dim..(index + 1) * self.dim]
    }

    /// Feature `j` over all pixels.
    pub fn feature_plane(&self, j: usize) -> Vec<T> {
        self.values.iter().skip(j).step_by(self.dim).copied().collect()
    }

    /// Concatenates the features of `other` after this profile's features.
    pub fn concat(&self, other: &EnergyProfile<T>) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch {
                what: "profile pixel count",
                expected: self.pixel_count(),
                actual: other.pixel_count(),
            });
        }
        let dim = self.dim + other.dim;
        let mut values = Vec::with_capacity(self.pixel_count() * dim);
        for p in 0..self.pixel_count() {
            values.extend_from_slice(self.pixel(p));
            values.extend_from_slice(other.pixel(p));
        }
        Self::new(self.rows, self.cols, dim, values)
    }

    /// Binary dump: `rows`, `cols`, `dim` as little-endian `u64`, then
    /// `rows·cols·dim` little-endian `f64` values, pixel-major.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut bytes = Vec::with_capacity(24 + self.values.len() * 8);
        for v in [self.rows, self.cols, self.dim] {
            bytes.extend_from_slice(&(v as u64).to_le_bytes());
        }
        for v in &self.values {
            bytes.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
        }
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() < 24 {
            return Err(Error::format(path, "truncated profile header"));
        }
        let word = |i: usize| u64::from_le_bytes(bytes[i * 8..i * 8 + 8].try_into().unwrap()) as usize;
        let (rows, cols, dim) = (word(0), word(1), word(2));
        let expected = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(dim))
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::format(path, "profile header overflows"))?;
        if bytes.len() - 24 != expected {
            return Err(Error::SizeMismatch {
                path: path.to_path_buf(),
                expected: (expected + 24) as u64,
                actual: bytes.len() as u64,
            });
        }
        let values = bytes[24..]
            .chunks_exact(8)
            .map(|b| T::lit(f64::from_le_bytes(b.try_into().unwrap())))
            .collect();
        Self::new(rows, cols, dim, values)
    }
}

/// Applies every filter to every component plane, component-major.
pub fn build_profile<T: Real>(pcs: &PcStack<T>, filters: &FilterSet<T>) -> Result<EnergyProfile<T>> {
    let sets: Vec<&FilterSet<T>> = vec![filters; pcs.k()];
    build_profile_with(pcs, &sets)
}

/// Like [`build_profile`] with a separate filter set per component.
/// All sets must share window size and filter count.
pub fn build_profile_with<T: Real>(pcs: &PcStack<T>, sets: &[&FilterSet<T>]) -> Result<EnergyProfile<T>> {
    if pcs.planes.is_empty() {
        return Err(Error::InvalidArgument("empty component stack".into()));
    }
    if sets.len() != pcs.k() {
        return Err(Error::DimensionMismatch {
            what: "filter sets per component",
            expected: pcs.k(),
            actual: sets.len(),
        });
    }
    let n = sets[0].len();
    let c = sets[0].window();
    if n == 0 {
        return Err(Error::InvalidArgument("empty filter set".into()));
    }
    if let Some(bad) = sets.iter().find(|s| s.len() != n || s.window() != c) {
        return Err(Error::InvalidArgument(format!(
            "filter sets disagree: {} filters of {}x{} vs {n} of {c}x{c}",
            bad.len(),
            bad.window(),
            bad.window()
        )));
    }
    if let Some(p) = pcs.planes.iter().find(|p| (p.rows(), p.cols()) != (pcs.rows, pcs.cols)) {
        return Err(Error::DimensionMismatch {
            what: "component plane pixel count",
            expected: pcs.rows * pcs.cols,
            actual: p.len(),
        });
    }
    let tasks: Vec<(usize, usize)> = (0..pcs.k()).flat_map(|p| (0..n).map(move |q| (p, q))).collect();
    let planes = tasks
        .par_iter()
        .map(|&(p, q)| apply_filter(&pcs.planes[p], sets[p].filter(q), c))
        .collect::<Result<Vec<_>>>()?;
    EnergyProfile::from_planes(pcs.rows, pcs.cols, &planes)
}

/// The raw component values as a `k`-feature profile.
pub fn component_features<T: Real>(pcs: &PcStack<T>) -> Result<EnergyProfile<T>> {
    EnergyProfile::from_planes(pcs.rows, pcs.cols, &pcs.planes)
}

/// Per-feature affine map sending the training range `[min, max]` onto `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleParams<T> {
    pub mins: Vec<T>,
    pub maxs: Vec<T>,
}

impl<T: Real> ScaleParams<T> {
    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    #[inline]
    pub fn scale_value(&self, j: usize, x: T) -> T {
        let (lo, hi) = (self.mins[j], self.maxs[j]);
        if hi > lo {
            -T::one() + T::lit(2.0) * (x - lo) / (hi - lo)
        } else {
            T::zero()
        }
    }

    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "feature vector length",
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(x.iter().enumerate().map(|(j, &v)| self.scale_value(j, v)).collect())
    }
}

/// Every pixel's features under scaling fitted on the training pixels only.
#[derive(Debug, Clone)]
pub struct ScaledFeatures<T> {
    pub profile: EnergyProfile<T>,
    pub params: ScaleParams<T>,
}

impl<T: Real> ScaledFeatures<T> {
    pub fn pixel(&self, index: usize) -> &[T] {
        self.profile.pixel(index)
    }
    pub fn dim(&self) -> usize {
        self.profile.dim()
    }
}

pub fn fit_feature_scaling<T: Real>(profile: &EnergyProfile<T>, train_indices: &[usize]) -> Result<ScaledFeatures<T>> {
    if train_indices.is_empty() {
        return Err(Error::InvalidArgument("feature scaling needs training pixels".into()));
    }
    let dim = profile.dim();
    let mut mins = vec![T::infinity(); dim];
    let mut maxs = vec![T::neg_infinity(); dim];
    for &i in train_indices {
        if i >= profile.pixel_count() {
            return Err(Error::InvalidArgument(format!("training index {i} out of range")));
        }
        for (j, &v) in profile.pixel(i).iter().enumerate() {
            mins[j] = mins[j].min(v);
            maxs[j] = maxs[j].max(v);
        }
    }
    let params = ScaleParams { mins, maxs };
    let values: Vec<T> = profile
        .values()
        .par_chunks(dim)
        .flat_map_iter(|px| px.iter().enumerate().map(|(j, &v)| params.scale_value(j, v)).collect::<Vec<_>>())
        .collect();
    Ok(ScaledFeatures {
        profile: EnergyProfile::new(profile.rows(), profile.cols(), dim, values)?,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Image<f64> {
        Image::from_fn(rows, cols, f)
    }

    #[test]
    fn delta_filter_is_identity() {
        let image = img(6, 5, |r, c| (r * 13 + c * 7) as f64 * 0.25);
        for c in [1, 3, 5] {
            let mut delta = vec![0.0; c * c];
            delta[(c * c - 1) / 2] = 1.0;
            assert_eq!(apply_filter(&image, &delta, c).unwrap(), image);
        }
    }

    #[test]
    fn constant_image_gives_filter_sum() {
        let image = img(5, 5, |_, _| 3.0);
        let f = [0.5, -1.0, 2.0, 0.0, 1.0, 1.0, -0.25, 0.0, 0.75];
        let sum: f64 = f.iter().sum();
        let out = apply_filter(&image, &f, 3).unwrap();
        assert!(out.values().iter().all(|&v| (v - sum * 3.0).abs() < 1e-12));
    }

    #[test]
    fn filter_length_checked() {
        let image = img(4, 4, |_, _| 1.0);
        assert!(matches!(
            apply_filter(&image, &[1.0; 8], 3),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn scaling_rules() {
        let values = vec![0.0, 5.0, 10.0, 5.0, 20.0, 5.0];
        let profile = EnergyProfile::new(1, 3, 2, values).unwrap();
        let scaled = fit_feature_scaling(&profile, &[0, 1]).unwrap();
        assert_eq!(scaled.pixel(0), &[-1.0, 0.0]);
        assert_eq!(scaled.pixel(1), &[1.0, 0.0]);
        // extrapolation beyond the training range
        assert_eq!(scaled.pixel(2), &[3.0, 0.0]);
        assert!(fit_feature_scaling(&profile, &[]).is_err());
        assert_eq!(scaled.params.apply(&[5.0, 123.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn profile_dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.bin");
        let profile = EnergyProfile::new(2, 3, 2, (0..12).map(|v| v as f64 / 3.0).collect()).unwrap();
        profile.write(&path).unwrap();
        assert_eq!(EnergyProfile::<f64>::read(&path).unwrap(), profile);
        std::fs::write(&path, [0u8; 30]).unwrap();
        assert!(EnergyProfile::<f64>::read(&path).is_err());
    }

    #[test]
    fn concat_appends_features() {
        let a = EnergyProfile::new(1, 2, 1, vec![1.0, 2.0]).unwrap();
        let b = EnergyProfile::new(1, 2, 2, vec![3.0, 4.0, 5.0, 6.0]).unwrap();
        let ab = a.concat(&b).unwrap();
        assert_eq!(ab.values(), &[1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
        assert_eq!(ab.feature_plane(2), vec![4.0, 6.0]);
    }
}
