use std::fs;
use std::path::Path;

use super::header::{ByteOrder, CubeHeader, SampleType};
use super::raster::{is_pgm, read_pgm};
use super::{HyperCube, LabelMap};
use crate::error::{Error, Result};
use crate::scalar::Real;

fn decode_sample(bytes: &[u8], ty: SampleType, order: ByteOrder) -> f64 {
    macro_rules! num {
        ($t:ty, $n:literal) => {{
            let arr: [u8; $n] = bytes.try_into().unwrap();
            match order {
                ByteOrder::Little => <$t>::from_le_bytes(arr) as f64,
                ByteOrder::Big => <$t>::from_be_bytes(arr) as f64,
            }
        }};
    }
    match ty {
        SampleType::U8 => bytes[0] as f64,
        SampleType::U16 => num!(u16, 2),
        SampleType::I16 => num!(i16, 2),
        SampleType::F32 => num!(f32, 4),
        SampleType::F64 => num!(f64, 8),
    }
}

fn encode_sample(value: f64, ty: SampleType, order: ByteOrder, out: &mut Vec<u8>) {
    macro_rules! num {
        ($v:expr) => {{
            let v = $v;
            match order {
                ByteOrder::Little => out.extend_from_slice(&v.to_le_bytes()),
                ByteOrder::Big => out.extend_from_slice(&v.to_be_bytes()),
            }
        }};
    }
    match ty {
        SampleType::U8 => out.push(value.round() as u8),
        SampleType::U16 => num!(value.round() as u16),
        SampleType::I16 => num!(value.round() as i16),
        SampleType::F32 => num!(value as f32),
        SampleType::F64 => num!(value),
    }
}

fn read_samples(path: &Path, header: &CubeHeader) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = header.data_bytes();
    let actual = (bytes.len() as u64).saturating_sub(header.header_offset as u64);
    if bytes.len() < header.header_offset || actual != expected {
        return Err(Error::SizeMismatch {
            path: path.to_path_buf(),
            expected: expected + header.header_offset as u64,
            actual: bytes.len() as u64,
        });
    }
    let size = header.sample_type.size();
    let samples: Vec<f64> = bytes[header.header_offset..]
        .chunks_exact(size)
        .map(|b| decode_sample(b, header.sample_type, header.byte_order))
        .collect();
    if let Some(offset) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { offset });
    }
    Ok(samples)
}

/// Reads a raw cube described by `header`, converting samples to `T` and
/// reordering them into band-sequential layout.
pub fn load_cube<T: Real>(data_path: impl AsRef<Path>, header: &CubeHeader) -> Result<HyperCube<T>> {
    let path = data_path.as_ref();
    let samples = read_samples(path, header)?;
    let (rows, cols, bands) = (header.rows, header.cols, header.bands);
    let mut values = vec![T::zero(); samples.len()];
    for b in 0..bands {
        for r in 0..rows {
            for c in 0..cols {
                let src = header.interleave.offset(rows, cols, bands, b, r, c);
                values[(b * rows + r) * cols + c] = T::lit(samples[src]);
            }
        }
    }
    let cube = HyperCube::new(rows, cols, bands, values)?;
    match &header.band_names {
        Some(names) => cube.with_band_labels(names.clone()),
        None => Ok(cube),
    }
}

/// Writes `cube` as raw samples laid out per `header`. The header's
/// dimensions must match the cube; integer sample types round to nearest.
pub fn write_cube<T: Real>(cube: &HyperCube<T>, data_path: impl AsRef<Path>, header: &CubeHeader) -> Result<()> {
    let path = data_path.as_ref();
    if (header.rows, header.cols, header.bands) != (cube.rows(), cube.cols(), cube.bands()) {
        return Err(Error::InvalidArgument(format!(
            "header declares {}x{}x{} but cube is {}x{}x{}",
            header.rows,
            header.cols,
            header.bands,
            cube.rows(),
            cube.cols(),
            cube.bands()
        )));
    }
    let (rows, cols, bands) = (cube.rows(), cube.cols(), cube.bands());
    let mut ordered = vec![0.0; header.sample_count()];
    for b in 0..bands {
        for r in 0..rows {
            for c in 0..cols {
                ordered[header.interleave.offset(rows, cols, bands, b, r, c)] =
                    cube.get(b, r, c).to_f64_lossy();
            }
        }
    }
    let mut bytes = vec![0u8; header.header_offset];
    bytes.reserve(header.data_bytes() as usize);
    for v in ordered {
        encode_sample(v, header.sample_type, header.byte_order, &mut bytes);
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Loads a ground-truth raster of `rows × cols` labels.
///
/// Portable graymaps (`P2`/`P5`) are detected by magic number. Anything else
/// is read as a raw single-band raster: with the sibling `.hdr` header when
/// one exists, otherwise as unsigned 8-bit (file size `rows·cols`) or
/// little-endian unsigned 16-bit (file size `2·rows·cols`).
pub fn load_labels(path: impl AsRef<Path>, rows: usize, cols: usize) -> Result<LabelMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let labels: Vec<u16> = if is_pgm(&bytes) {
        let (r, c, values) = read_pgm(path)?;
        if (r, c) != (rows, cols) {
            return Err(Error::format(
                path,
                format!("label raster is {r}x{c}, cube is {rows}x{cols}"),
            ));
        }
        values
    } else {
        let header = match CubeHeader::sibling_path(path) {
            Some(hdr) => CubeHeader::read(hdr)?,
            None => {
                let n = rows * cols;
                let ty = match bytes.len() {
                    len if len == n => SampleType::U8,
                    len if len == 2 * n => SampleType::U16,
                    len => {
                        return Err(Error::SizeMismatch {
                            path: path.to_path_buf(),
                            expected: n as u64,
                            actual: len as u64,
                        })
                    }
                };
                CubeHeader::new(rows, cols, 1, ty)
            }
        };
        if (header.rows, header.cols) != (rows, cols) || header.bands != 1 {
            return Err(Error::format(
                path,
                format!(
                    "label raster is {}x{}x{}, expected {rows}x{cols}x1",
                    header.rows, header.cols, header.bands
                ),
            ));
        }
        if !header.sample_type.is_integer() {
            return Err(Error::format(path, "label raster must have an integer sample type"));
        }
        read_samples(path, &header)?
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                if v < 0.0 {
                    Err(Error::format(path, format!("negative label {v} at offset {i}")))
                } else {
                    Ok(v as u16)
                }
            })
            .collect::<Result<_>>()?
    };
    LabelMap::new(rows, cols, labels, None)
}

/// Writes labels as raw little-endian `u16` samples plus a `<path>.hdr` header.
pub fn write_labels(map: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let header = CubeHeader::new(map.rows(), map.cols(), 1, SampleType::U16);
    let bytes: Vec<u8> = map.labels().iter().flat_map(|l| l.to_le_bytes()).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let mut hdr = path.as_os_str().to_owned();
    hdr.push(".hdr");
    header.write(Path::new(&hdr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datacube::Interleave;

    #[test]
    fn tiny_u16_cube() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cube.raw");
        let bytes: Vec<u8> = [1u16, 2, 3, 4].iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(&path, bytes).unwrap();
        let header = CubeHeader::new(2, 2, 1, SampleType::U16);
        let cube: HyperCube<f64> = load_cube(&path, &header).unwrap();
        assert_eq!((cube.rows(), cube.cols(), cube.bands()), (2, 2, 1));
        assert_eq!(cube.values(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn size_mismatch_names_both_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cube.raw");
        fs::write(&path, vec![0u8; 999]).unwrap();
        let header = CubeHeader::new(10, 10, 5, SampleType::U16);
        let err = load_cube::<f64>(&path, &header).unwrap_err();
        match &err {
            Error::SizeMismatch { expected, actual, .. } => {
                assert_eq!((*expected, *actual), (1000, 999));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("1000") && err.to_string().contains("999"));
    }

    #[test]
    fn non_finite_sample_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cube.raw");
        let bytes: Vec<u8> = [1.0f32, 2.0, f32::INFINITY, 4.0]
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        fs::write(&path, bytes).unwrap();
        let header = CubeHeader::new(1, 4, 1, SampleType::F32);
        assert!(matches!(
            load_cube::<f64>(&path, &header),
            Err(Error::NonFinite { offset: 2 })
        ));
    }

    #[test]
    fn all_layouts_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (rows, cols, bands) = (3, 4, 5);
        let values: Vec<f64> = (0..rows * cols * bands).map(|v| (v * 7 % 251) as f64 - 60.0).collect();
        let cube = HyperCube::new(rows, cols, bands, values).unwrap();
        for interleave in [Interleave::Bsq, Interleave::Bil, Interleave::Bip] {
            for order in [ByteOrder::Little, ByteOrder::Big] {
                for ty in [SampleType::I16, SampleType::F32, SampleType::F64] {
                    let header = CubeHeader::new(rows, cols, bands, ty)
                        .with_interleave(interleave)
                        .with_byte_order(order);
                    let path = dir.path().join("c.raw");
                    write_cube(&cube, &path, &header).unwrap();
                    let back: HyperCube<f64> = load_cube(&path, &header).unwrap();
                    assert_eq!(back, cube, "{interleave} {order} {ty}");
                    assert_eq!(back.spectrum(2, 3), cube.spectrum(2, 3));
                }
            }
        }
    }

    #[test]
    fn raw_labels_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gt.raw");
        fs::write(&path, [0u8, 1, 2, 0, 0, 0]).unwrap();
        let m = load_labels(&path, 2, 3).unwrap();
        assert_eq!(m.labels(), &[0, 1, 2, 0, 0, 0]);
        assert!(load_labels(&path, 3, 3).is_err());

        let map = LabelMap::new(2, 2, vec![0, 300, 1, 0], None).unwrap();
        let path = dir.path().join("gt16.raw");
        write_labels(&map, &path).unwrap();
        assert_eq!(load_labels(&path, 2, 2).unwrap(), map);
        assert!(load_labels(&path, 2, 3).is_err());
    }

    #[test]
    fn all_zero_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zero.raw");
        fs::write(&path, [0u8; 9]).unwrap();
        let m = load_labels(&path, 3, 3).unwrap();
        assert!(m.labeled_indices().is_empty());
    }
}
