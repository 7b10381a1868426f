//! Spectral principal components of a cube and selection of the leading
//! components by explained-variance fraction.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::datacube::{HyperCube, Image};
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::scalar::{dot, Real};

/// Default explained-variance fraction for component selection.
pub const DEFAULT_VARIANCE_FRACTION: f64 = 0.90;

#[derive(Debug, Clone)]
pub struct PcaModel<T> {
    /// Mean spectrum, length `bands`.
    pub mean: Vec<T>,
    /// Nonincreasing, nonnegative.
    pub eigenvalues: Vec<T>,
    /// `bands × bands`, column `i` is component `i`.
    pub eigenvectors: Matrix<T>,
}

/// Planes of the cube projected onto its first `k` components.
#[derive(Debug, Clone)]
pub struct PcStack<T> {
    pub rows: usize,
    pub cols: usize,
    pub planes: Vec<Image<T>>,
}

impl<T: Real> PcStack<T> {
    pub fn k(&self) -> usize {
        self.planes.len()
    }
}

/// Band covariance with pixels as observations (divisor `N - 1`), plus the mean spectrum.
pub fn spectral_covariance<T: Real>(cube: &HyperCube<T>) -> Result<(Vec<T>, Matrix<T>)> {
    let n = cube.pixel_count();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "spectral PCA needs at least 2 pixels, got {n}"
        )));
    }
    let nt = T::from_usize(n).unwrap();
    let bands = cube.bands();
    let centered: Vec<(T, Vec<T>)> = (0..bands)
        .into_par_iter()
        .map(|b| {
            let plane = cube.band(b);
            let mean = plane.iter().copied().sum::<T>() / nt;
            (mean, plane.iter().map(|&v| v - mean).collect())
        })
        .collect();
    let rows: Vec<Vec<T>> = (0..bands)
        .into_par_iter()
        .map(|i| {
            (i..bands)
                .map(|j| dot(&centered[i].1, &centered[j].1) / (nt - T::one()))
                .collect()
        })
        .collect();
    let mut cov = Matrix::zeros(bands, bands);
    for (i, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            cov[(i, i + off)] = v;
            cov[(i + off, i)] = v;
        }
    }
    Ok((centered.into_iter().map(|(m, _)| m).collect(), cov))
}

pub fn fit_spectral_pca<T: Real>(cube: &HyperCube<T>) -> Result<PcaModel<T>> {
    let (mean, cov) = spectral_covariance(cube)?;
    let eig = symmetric_eigen(&cov)?;
    let eigenvalues = clamp_spectrum(eig.values, cov.frobenius_norm())?;
    Ok(PcaModel {
        mean,
        eigenvalues,
        eigenvectors: eig.vectors,
    })
}

/// Zeroes small negative eigenvalues of a covariance matrix; rejects large ones.
pub(crate) fn clamp_spectrum<T: Real>(mut values: Vec<T>, norm: T) -> Result<Vec<T>> {
    let tol = T::jacobi_tolerance() * T::lit(1e3) * norm;
    for v in values.iter_mut() {
        if *v < T::zero() {
            if -*v > tol {
                return Err(Error::Numerical(format!(
                    "covariance eigenvalue {v} is negative beyond tolerance {tol}"
                )));
            }
            *v = T::zero();
        }
    }
    Ok(values)
}

impl<T: Real> PcaModel<T> {
    pub fn bands(&self) -> usize {
        self.mean.len()
    }

    pub fn component(&self, i: usize) -> Vec<T> {
        self.eigenvectors.column(i)
    }

    pub fn total_variance(&self) -> T {
        self.eigenvalues.iter().copied().sum()
    }

    /// Smallest `k` whose leading eigenvalues explain at least `fraction` of the total.
    pub fn select_components(&self, fraction: f64) -> Result<usize> {
        select_components(&self.eigenvalues, fraction)
    }

    /// Projects every pixel onto the first `k` components.
    pub fn project(&self, cube: &HyperCube<T>, k: usize) -> Result<PcStack<T>> {
        project(cube, self, k)
    }

    /// Eigenvalue / explained-variance table.
    pub fn spectrum_table(&self) -> String {
        let total = self.total_variance().to_f64_lossy();
        let mut out = String::new();
        let _ = writeln!(out, "{:>5} {:>18} {:>10} {:>10}", "pc", "eigenvalue", "explained", "cumulative");
        let mut cum = 0.0;
        for (i, &v) in self.eigenvalues.iter().enumerate() {
            let v = v.to_f64_lossy();
            cum += v;
            let (e, c) = if total > 0.0 { (v / total, cum / total) } else { (0.0, 0.0) };
            let _ = writeln!(out, "{:>5} {:>18.9e} {:>10.6} {:>10.6}", i + 1, v, e, c);
        }
        out
    }
}

/// Smallest `k` with `Σ_{i<k} λ_i / Σ λ_i ≥ fraction`.
pub fn select_components<T: Real>(eigenvalues: &[T], fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "variance fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let total: f64 = eigenvalues.iter().map(|v| v.to_f64_lossy()).sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("spectral variance is zero".into()));
    }
    let mut cum = 0.0;
    for (i, v) in eigenvalues.iter().enumerate() {
        cum += v.to_f64_lossy();
        if cum / total >= fraction {
            return Ok(i + 1);
        }
    }
    // Rounding in the running sum can leave the last ratio a hair below 1.
    Ok(eigenvalues.len())
}

pub fn project<T: Real>(cube: &HyperCube<T>, model: &PcaModel<T>, k: usize) -> Result<PcStack<T>> {
    if model.bands() != cube.bands() {
        return Err(Error::DimensionMismatch {
            what: "PCA band count",
            expected: model.bands(),
            actual: cube.bands(),
        });
    }
    if k == 0 || k > cube.bands() {
        return Err(Error::InvalidArgument(format!(
            "component count {k} out of range 1..={}",
            cube.bands()
        )));
    }
    let n = cube.pixel_count();
    let planes = (0..k)
        .into_par_iter()
        .map(|i| {
            let v = model.component(i);
            let mut plane = vec![T::zero(); n];
            for (b, &w) in v.iter().enumerate() {
                let mean = model.mean[b];
                for (out, &x) in plane.iter_mut().zip(cube.band(b)) {
                    *out += w * (x - mean);
                }
            }
            Image::new(cube.rows(), cube.cols(), plane)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PcStack {
        rows: cube.rows(),
        cols: cube.cols(),
        planes,
    })
}
