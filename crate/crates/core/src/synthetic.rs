//! Textured test scenes with known ground truth.
//!
//! Classes occupy the blocks of a grid. Each class has its own mean spectrum
//! and its own oriented sinusoidal stripe texture, which modulates the pixel
//! spectra along a class-specific spectral direction. Independent Gaussian
//! noise is added to every sample.

use std::f64::consts::PI;

use rand_core::SeedableRng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rand_xoshiro::Xoshiro256StarStar;

use crate::datacube::{HyperCube, LabelMap};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub rows: usize,
    pub cols: usize,
    pub bands: usize,
    pub classes: u16,
    /// Norm of each class's offset from the common mean spectrum.
    pub separation: f64,
    /// Stripe amplitude along the class texture direction.
    pub texture: f64,
    /// Stripe period in pixels.
    pub period: f64,
    /// Per-sample noise standard deviation.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            rows: 64,
            cols: 64,
            bands: 10,
            classes: 4,
            separation: 1.0,
            texture: 3.0,
            period: 4.0,
            noise: 1.0,
            seed: 1,
        }
    }
}

/// Grid of `gx × gy` blocks; blocks past the class count are background.
fn grid(classes: usize) -> (usize, usize) {
    let gx = (classes as f64).sqrt().ceil() as usize;
    (gx, classes.div_ceil(gx))
}

fn unit_vector(rng: &mut Xoshiro256StarStar, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// Block label of pixel `(r, c)`.
pub fn scene_label(spec: &SceneSpec, r: usize, c: usize) -> u16 {
    let (gx, gy) = grid(spec.classes as usize);
    let bx = c * gx / spec.cols;
    let by = r * gy / spec.rows;
    let block = by * gx + bx;
    if block < spec.classes as usize {
        block as u16 + 1
    } else {
        0
    }
}

pub fn generate_scene<T: Real>(spec: &SceneSpec) -> Result<(HyperCube<T>, LabelMap)> {
    if spec.classes < 2 || spec.bands < 2 {
        return Err(Error::InvalidArgument("a scene needs at least 2 classes and 2 bands".into()));
    }
    let (gx, gy) = grid(spec.classes as usize);
    if spec.rows < gy || spec.cols < gx {
        return Err(Error::InvalidArgument(format!(
            "{}x{} pixels cannot hold a {gy}x{gx} class grid",
            spec.rows, spec.cols
        )));
    }
    if !(spec.period > 0.0) || !(spec.noise >= 0.0) {
        return Err(Error::InvalidArgument("stripe period must be positive and noise nonnegative".into()));
    }
    let mut rng = Xoshiro256StarStar::seed_from_u64(spec.seed);
    let base: Vec<f64> = (0..spec.bands).map(|b| 10.0 + (b as f64 * 0.7).sin()).collect();
    let k = spec.classes as usize;
    let offsets: Vec<Vec<f64>> = (0..k).map(|_| unit_vector(&mut rng, spec.bands)).collect();
    let directions: Vec<Vec<f64>> = (0..k).map(|_| unit_vector(&mut rng, spec.bands)).collect();
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let n = spec.rows * spec.cols;
    let mut values = vec![T::zero(); n * spec.bands];
    let mut labels = vec![0u16; n];
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let label = scene_label(spec, r, c);
            let p = r * spec.cols + c;
            labels[p] = label;
            let stripe = if label == 0 {
                None
            } else {
                let theta = PI * (label - 1) as f64 / k as f64;
                let phase = 2.0 * PI * (r as f64 * theta.cos() + c as f64 * theta.sin()) / spec.period;
                Some((label as usize - 1, spec.texture * phase.cos()))
            };
            for b in 0..spec.bands {
                let mut v = base[b] + noise.sample(&mut rng);
                if let Some((l, s)) = stripe {
                    v += spec.separation * offsets[l][b] + s * directions[l][b];
                }
                values[b * n + p] = T::lit(v);
            }
        }
    }
    let cube = HyperCube::new(spec.rows, spec.cols, spec.bands, values)?;
    let labels = LabelMap::new(spec.rows, spec.cols, labels, Some(spec.classes))?;
    Ok((cube, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_determinism() {
        let spec = SceneSpec {
            rows: 32,
            cols: 32,
            bands: 8,
            classes: 3,
            ..SceneSpec::default()
        };
        let (cube, labels) = generate_scene::<f64>(&spec).unwrap();
        assert_eq!((cube.rows(), cube.cols(), cube.bands()), (32, 32, 8));
        let counts = labels.class_counts();
        assert_eq!(counts.values().copied().collect::<Vec<_>>(), vec![256, 256, 256]);
        assert_eq!(labels.get(32 * 31 + 31), 0);
        let (again, _) = generate_scene::<f64>(&spec).unwrap();
        assert_eq!(cube.values(), again.values());
    }
}
