//! Energy-maximizing orthogonal filter design.
//!
//! Every pixel contributes one `c×c` neighbourhood (mirror padded at the
//! borders), vectorized row by row. The filters are the leading eigenvectors
//! of the covariance of those vectors: the first maximizes the variance of
//! its response under a unit-norm constraint, and each later one does the
//! same while staying orthogonal to (and therefore uncorrelated with) the
//! ones before it.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::datacube::Image;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, SymmetricEigen};
use crate::scalar::Real;
use crate::spectral::clamp_spectrum;

/// Symmetric mirror index: `-1 → 0`, `n → n - 1`. Valid for overhangs up to `n`.
#[inline]
pub(crate) fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 {
        -i - 1
    } else if i >= n {
        2 * n - i - 1
    } else {
        i
    };
    j as usize
}

pub(crate) fn check_window(c: usize, rows: usize, cols: usize) -> Result<()> {
    if c == 0 || c % 2 == 0 {
        return Err(Error::InvalidArgument(format!("window size must be odd, got {c}")));
    }
    if c > rows.min(cols) {
        return Err(Error::InvalidArgument(format!(
            "window size {c} exceeds image size {rows}x{cols}"
        )));
    }
    Ok(())
}

/// Writes the row-major `c×c` neighbourhood of `(row, col)` into `out`.
#[inline]
pub(crate) fn fill_patch<T: Real>(image: &Image<T>, c: usize, row: usize, col: usize, out: &mut [T]) {
    let h = (c / 2) as isize;
    let (rows, cols) = (image.rows(), image.cols());
    let values = image.values();
    let mut k = 0;
    for dr in -h..=h {
        let r = mirror(row as isize + dr, rows);
        let base = r * cols;
        for dc in -h..=h {
            out[k] = values[base + mirror(col as isize + dc, cols)];
            k += 1;
        }
    }
}

/// One vectorized neighbourhood per pixel, pixels in row-major order.
#[derive(Debug, Clone)]
pub struct PatchMatrix<T> {
    c: usize,
    n_patches: usize,
    data: Vec<T>,
}

impl<T: Real> PatchMatrix<T> {
    pub fn window(&self) -> usize {
        self.c
    }
    pub fn n_patches(&self) -> usize {
        self.n_patches
    }
    /// Length `c²` vector for pixel `index`.
    pub fn patch(&self, index: usize) -> &[T] {
        let d = self.c * self.c;
        &self.data[index * d..(index + 1) * d]
    }
    pub fn iter(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.c * self.c)
    }
}

pub fn extract_patches<T: Real>(image: &Image<T>, c: usize) -> Result<PatchMatrix<T>> {
    check_window(c, image.rows(), image.cols())?;
    let d = c * c;
    let mut data = vec![T::zero(); image.len() * d];
    data.par_chunks_mut(d * image.cols())
        .enumerate()
        .for_each(|(row, chunk)| {
            for (col, out) in chunk.chunks_exact_mut(d).enumerate() {
                fill_patch(image, c, row, col, out);
            }
        });
    Ok(PatchMatrix {
        c,
        n_patches: image.len(),
        data,
    })
}

/// Sample covariance of the patch vectors.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix<T> {
    pub c: usize,
    pub matrix: Matrix<T>,
}

impl<T: Real> CovarianceMatrix<T> {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn eigen(&self) -> Result<SymmetricEigen<T>> {
        symmetric_eigen(self)
    }
}

pub fn symmetric_eigen<T: Real>(cov: &CovarianceMatrix<T>) -> Result<SymmetricEigen<T>> {
    linalg::symmetric_eigen(&cov.matrix)
}

/// Single-pass centered accumulator over the packed upper triangle.
struct CovAccumulator<T> {
    d: usize,
    count: usize,
    mean: Vec<T>,
    m2: Vec<T>,
}

impl<T: Real> CovAccumulator<T> {
    fn new(d: usize) -> Self {
        CovAccumulator {
            d,
            count: 0,
            mean: vec![T::zero(); d],
            m2: vec![T::zero(); d * (d + 1) / 2],
        }
    }

    fn push(&mut self, x: &[T], before: &mut [T]) {
        self.count += 1;
        let inv = T::one() / T::from_usize(self.count).unwrap();
        for i in 0..self.d {
            before[i] = x[i] - self.mean[i];
            self.mean[i] += before[i] * inv;
        }
        let mut off = 0;
        for i in 0..self.d {
            let a = before[i];
            let len = self.d - i;
            if a != T::zero() {
                let row = &mut self.m2[off..off + len];
                for ((m, &xj), &mj) in row.iter_mut().zip(&x[i..]).zip(&self.mean[i..]) {
                    *m += a * (xj - mj);
                }
            }
            off += len;
        }
    }

    fn merge(mut self, other: CovAccumulator<T>) -> Self {
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return other;
        }
        let (na, nb) = (T::from_usize(self.count).unwrap(), T::from_usize(other.count).unwrap());
        let n = na + nb;
        let delta: Vec<T> = other.mean.iter().zip(&self.mean).map(|(&b, &a)| b - a).collect();
        let w = na * nb / n;
        let mut off = 0;
        for i in 0..self.d {
            for j in i..self.d {
                self.m2[off] += other.m2[off] + delta[i] * delta[j] * w;
                off += 1;
            }
        }
        for i in 0..self.d {
            self.mean[i] += delta[i] * nb / n;
        }
        self.count += other.count;
        self
    }

    fn finish(self, c: usize) -> Result<CovarianceMatrix<T>> {
        if self.count < 2 {
            return Err(Error::Degenerate(format!(
                "patch covariance needs at least 2 patches, got {}",
                self.count
            )));
        }
        let denom = T::from_usize(self.count - 1).unwrap();
        let mut matrix = Matrix::zeros(self.d, self.d);
        let mut off = 0;
        for i in 0..self.d {
            for j in i..self.d {
                let v = self.m2[off] / denom;
                matrix[(i, j)] = v;
                matrix[(j, i)] = v;
                off += 1;
            }
        }
        Ok(CovarianceMatrix { c, matrix })
    }
}

/// Image rows per accumulation chunk; fixed so results do not depend on thread count.
const ROWS_PER_CHUNK: usize = 8;

fn reduce_chunks<T: Real>(chunks: Vec<CovAccumulator<T>>, d: usize) -> CovAccumulator<T> {
    chunks.into_iter().fold(CovAccumulator::new(d), CovAccumulator::merge)
}

pub fn patch_covariance<T: Real>(patches: &PatchMatrix<T>) -> Result<CovarianceMatrix<T>> {
    let d = patches.c * patches.c;
    let per_chunk = ROWS_PER_CHUNK * 64;
    let chunks: Vec<CovAccumulator<T>> = patches
        .data
        .par_chunks(d * per_chunk)
        .map(|block| {
            let mut acc = CovAccumulator::new(d);
            let mut scratch = vec![T::zero(); d];
            for p in block.chunks_exact(d) {
                acc.push(p, &mut scratch);
            }
            acc
        })
        .collect();
    reduce_chunks(chunks, d).finish(patches.c)
}

/// Patch covariance straight from the image, without materializing every patch.
pub fn image_patch_covariance<T: Real>(image: &Image<T>, c: usize) -> Result<CovarianceMatrix<T>> {
    check_window(c, image.rows(), image.cols())?;
    let d = c * c;
    let row_starts: Vec<usize> = (0..image.rows()).step_by(ROWS_PER_CHUNK).collect();
    let chunks: Vec<CovAccumulator<T>> = row_starts
        .par_iter()
        .map(|&start| {
            let mut acc = CovAccumulator::new(d);
            let mut patch = vec![T::zero(); d];
            let mut scratch = vec![T::zero(); d];
            for row in start..(start + ROWS_PER_CHUNK).min(image.rows()) {
                for col in 0..image.cols() {
                    fill_patch(image, c, row, col, &mut patch);
                    acc.push(&patch, &mut scratch);
                }
            }
            acc
        })
        .collect();
    reduce_chunks(chunks, d).finish(c)
}

/// How many eigenfilters to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterSelection {
    /// Smallest `n` whose energies reach `fraction` of the trace, clamped to `[min, max]` and to `c²`.
    EnergyFraction { fraction: f64, min: usize, max: usize },
    /// Exactly `n` filters, `1 ≤ n ≤ c²`.
    Count(usize),
}

impl Default for FilterSelection {
    fn default() -> Self {
        FilterSelection::EnergyFraction {
            fraction: 0.99,
            min: 3,
            max: 50,
        }
    }
}

impl FilterSelection {
    pub fn resolve<T: Real>(&self, energies: &[T]) -> Result<usize> {
        let d = energies.len();
        let total: f64 = energies.iter().map(|v| v.to_f64_lossy()).sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate("no informative filters: patch variance is zero".into()));
        }
        match *self {
            FilterSelection::Count(n) => {
                if n == 0 || n > d {
                    return Err(Error::InvalidArgument(format!(
                        "filter count {n} out of range 1..={d}"
                    )));
                }
                Ok(n)
            }
            FilterSelection::EnergyFraction { fraction, min, max } => {
                if !(fraction > 0.0 && fraction <= 1.0) || min == 0 || min > max {
                    return Err(Error::InvalidArgument(format!(
                        "bad energy selection: fraction {fraction}, bounds [{min}, {max}]"
                    )));
                }
                let mut cum = 0.0;
                let mut n = d;
                for (i, v) in energies.iter().enumerate() {
                    cum += v.to_f64_lossy();
                    if cum / total >= fraction {
                        n = i + 1;
                        break;
                    }
                }
                Ok(n.clamp(min, max).min(d))
            }
        }
    }
}

/// Ordered orthonormal filters with their energies (eigenvalues), nonincreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSet<T> {
    c: usize,
    filters: Vec<Vec<T>>,
    energies: Vec<T>,
}

impl<T: Real> FilterSet<T> {
    pub fn new(c: usize, filters: Vec<Vec<T>>, energies: Vec<T>) -> Result<Self> {
        if c == 0 || c % 2 == 0 {
            return Err(Error::InvalidArgument(format!("window size must be odd, got {c}")));
        }
        if filters.is_empty() || filters.len() != energies.len() || filters.len() > c * c {
            return Err(Error::InvalidArgument(format!(
                "{} filters with {} energies for window {c}",
                filters.len(),
                energies.len()
            )));
        }
        if let Some(f) = filters.iter().find(|f| f.len() != c * c) {
            return Err(Error::DimensionMismatch {
                what: "filter length",
                expected: c * c,
                actual: f.len(),
            });
        }
        Ok(FilterSet { c, filters, energies })
    }

    pub fn window(&self) -> usize {
        self.c
    }
    pub fn len(&self) -> usize {
        self.filters.len()
    }
    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }
    pub fn filters(&self) -> &[Vec<T>] {
        &self.filters
    }
    pub fn filter(&self, i: usize) -> &[T] {
        &self.filters[i]
    }
    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    /// Keeps the first `n` filters.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::InvalidArgument(format!("cannot keep {n} of {} filters", self.len())));
        }
        Ok(FilterSet {
            c: self.c,
            filters: self.filters[..n].to_vec(),
            energies: self.energies[..n].to_vec(),
        })
    }

    /// Reorders filters (and energies) as `order[i]`-th original at position `i`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        FilterSet {
            c: self.c,
            filters: order.iter().map(|&i| self.filters[i].clone()).collect(),
            energies: order.iter().map(|&i| self.energies[i]).collect(),
        }
    }

    /// `max |F_iᵀF_j - δ_ij|`.
    pub fn gram_deviation(&self) -> T {
        let mut worst = T::zero();
        for (i, a) in self.filters.iter().enumerate() {
            for (j, b) in self.filters.iter().enumerate() {
                let g = crate::scalar::dot(a, b);
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    /// Energies followed by each filter reshaped to its `c×c` grid.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let total: f64 = self.energies.iter().map(|e| e.to_f64_lossy()).sum();
        let _ = writeln!(out, "# window {}x{}, {} filters", self.c, self.c, self.len());
        for (i, (f, e)) in self.filters.iter().zip(&self.energies).enumerate() {
            let e = e.to_f64_lossy();
            let share = if total > 0.0 { e / total } else { 0.0 };
            let _ = writeln!(out, "filter {} energy {:.9e} share {:.6}", i + 1, e, share);
            for row in f.chunks(self.c) {
                let cells: Vec<String> = row.iter().map(|v| format!("{:>10.6}", v.to_f64_lossy())).collect();
                let _ = writeln!(out, "{}", cells.join(" "));
            }
        }
        out
    }
}

/// Learns eigenfilters from an already-computed patch covariance.
pub fn filters_from_covariance<T: Real>(
    cov: &CovarianceMatrix<T>,
    selection: FilterSelection,
) -> Result<FilterSet<T>> {
    let eig = cov.eigen()?;
    let energies = clamp_spectrum(eig.values.clone(), cov.matrix.frobenius_norm())?;
    let n = selection.resolve(&energies)?;
    let filters = (0..n).map(|i| eig.vector(i)).collect();
    FilterSet::new(cov.c, filters, energies[..n].to_vec())
}

/// Eigenfilters of the `c×c` patch covariance of `image`.
pub fn design_filter_set<T: Real>(
    image: &Image<T>,
    c: usize,
    selection: FilterSelection,
) -> Result<FilterSet<T>> {
    let cov = image_patch_covariance(image, c)?;
    filters_from_covariance(&cov, selection)
}
