//! Kernel matrix access for the dual solver: a dense matrix for small
//! problems, an LRU row cache above `FULL_MATRIX_LIMIT` points.

use std::collections::HashMap;

use super::kernel::KernelParams;

pub(crate) const FULL_MATRIX_LIMIT: usize = 4096;

/// Budget for the row cache, in matrix entries.
const ROW_CACHE_ENTRIES: usize = 1 << 23;

pub(crate) enum KernelMatrix<'a> {
    Full {
        m: usize,
        data: Vec<f64>,
    },
    Rows {
        points: &'a [Vec<f64>],
        kernel: KernelParams,
        capacity: usize,
        rows: HashMap<usize, (u64, Vec<f64>)>,
        clock: u64,
    },
}

impl<'a> KernelMatrix<'a> {
    pub(crate) fn new(points: &'a [Vec<f64>], kernel: KernelParams) -> Self {
        let m = points.len();
        if m <= FULL_MATRIX_LIMIT {
            let mut data = vec![0.0; m * m];
            for i in 0..m {
                data[i * m + i] = 1.0;
                for j in 0..i {
                    let v = kernel.eval_unchecked(&points[i], &points[j]);
                    data[i * m + j] = v;
                    data[j * m + i] = v;
                }
            }
            KernelMatrix::Full { m, data }
        } else {
            KernelMatrix::Rows {
                points,
                kernel,
                capacity: (ROW_CACHE_ENTRIES / m).max(2),
                rows: HashMap::new(),
                clock: 0,
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn is_full(&self) -> bool {
        matches!(self, KernelMatrix::Full { .. })
    }

    fn ensure(&mut self, i: usize) {
        if let KernelMatrix::Rows {
            points,
            kernel,
            capacity,
            rows,
            clock,
        } = self
        {
            *clock += 1;
            if let Some(entry) = rows.get_mut(&i) {
                entry.0 = *clock;
                return;
            }
            if rows.len() >= *capacity {
                let oldest = rows
                    .iter()
                    .min_by_key(|(_, (stamp, _))| *stamp)
                    .map(|(&k, _)| k)
                    .expect("cache is non-empty");
                rows.remove(&oldest);
            }
            let xi = &points[i];
            let row = points.iter().map(|xj| kernel.eval_unchecked(xi, xj)).collect();
            rows.insert(i, (*clock, row));
        }
    }

    fn get(&self, i: usize) -> &[f64] {
        match self {
            KernelMatrix::Full { m, data } => &data[i * m..(i + 1) * m],
            KernelMatrix::Rows { rows, .. } => &rows[&i].1,
        }
    }

    pub(crate) fn row(&mut self, i: usize) -> &[f64] {
        self.ensure(i);
        self.get(i)
    }

    /// Rows `i` and `j` together. Requires `i != j`.
    pub(crate) fn row_pair(&mut self, i: usize, j: usize) -> (&[f64], &[f64]) {
        debug_assert_ne!(i, j);
        self.ensure(i);
        self.ensure(j);
        (self.get(i), self.get(j))
    }
}
