use std::sync::Arc;

use super::KernelParams;
use crate::scalar::Real;

/// Signed kernel rows `Q_ij = y_i y_j K(x_i, x_j)` for the SMO solver.
///
/// Either the whole matrix is precomputed, or rows are computed on demand
/// and kept in a least-recently-used cache bounded by a byte budget.
pub(crate) struct QMatrix<'a, T> {
    samples: &'a [&'a [T]],
    y: &'a [i8],
    params: &'a KernelParams<T>,
    diag: Vec<T>,
    storage: Storage<T>,
}

enum Storage<T> {
    Full(Vec<Arc<[T]>>),
    Lru {
        rows: Vec<Option<Arc<[T]>>>,
        last_used: Vec<u64>,
        cached: usize,
        capacity: usize,
        tick: u64,
    },
}

impl<'a, T: Real> QMatrix<'a, T> {
    pub(crate) fn new(samples: &'a [&'a [T]], y: &'a [i8], params: &'a KernelParams<T>, cache_bytes: usize) -> Self {
        let n = samples.len();
        let diag = (0..n).map(|i| params.eval_unchecked(samples[i], samples[i])).collect();
        let row_bytes = n * std::mem::size_of::<T>();
        let capacity = (cache_bytes / row_bytes.max(1)).max(2);
        let mut q = QMatrix {
            samples,
            y,
            params,
            diag,
            storage: Storage::Lru {
                rows: vec![None; n],
                last_used: vec![0; n],
                cached: 0,
                capacity,
                tick: 0,
            },
        };
        if capacity >= n {
            let rows = (0..n).map(|i| q.compute_row(i)).collect();
            q.storage = Storage::Full(rows);
        }
        q
    }

    pub(crate) fn diag(&self) -> &[T] {
        &self.diag
    }

    fn compute_row(&self, i: usize) -> Arc<[T]> {
        let xi = self.samples[i];
        let yi = T::from_i8(self.y[i]).unwrap();
        self.samples
            .iter()
            .zip(self.y)
            .map(|(xj, &yj)| yi * T::from_i8(yj).unwrap() * self.params.eval_unchecked(xi, xj))
            .collect()
    }

    pub(crate) fn row(&mut self, i: usize) -> Arc<[T]> {
        if let Storage::Full(rows) = &self.storage {
            return rows[i].clone();
        }
        let fresh = match &self.storage {
            Storage::Lru { rows, .. } => rows[i].is_none(),
            Storage::Full(_) => unreachable!(),
        };
        let computed = fresh.then(|| self.compute_row(i));
        let Storage::Lru {
            rows,
            last_used,
            cached,
            capacity,
            tick,
        } = &mut self.storage
        else {
            unreachable!()
        };
        *tick += 1;
        last_used[i] = *tick;
        if let Some(row) = computed {
            if *cached == *capacity {
                let victim = (0..rows.len())
                    .filter(|&k| rows[k].is_some())
                    .min_by_key(|&k| last_used[k])
                    .unwrap();
                rows[victim] = None;
                *cached -= 1;
            }
            rows[i] = Some(row);
            *cached += 1;
        }
        rows[i].clone().unwrap()
    }

    #[cfg(test)]
    pub(crate) fn is_full(&self) -> bool {
        matches!(self.storage, Storage::Full(_))
    }
}
