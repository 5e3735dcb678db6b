use faer::sparse::{SparseColMat, Triplet};

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates `(row, col, value)` contributions; duplicates are summed on build.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    /// Adds a dense local block `local[i * cols.len() + j]` at `rows × cols`.
    pub fn add_block(&mut self, rows: &[usize], cols: &[usize], local: &[f64]) {
        let n = cols.len();
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                self.push(r, c, local[i * n + j]);
            }
        }
    }

    pub fn build(self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.nrows, self.ncols, self.entries)
    }
}

impl CsrMatrix {
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut entries: Vec<(usize, usize, f64)>,
    ) -> Self {
        // Stable sort keeps the summation order of duplicates deterministic.
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            assert!(
                r < nrows && c < ncols,
                "triplet ({r}, {c}) out of bounds {nrows}x{ncols}"
            );
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: vec![],
            values: vec![],
        }
    }

    pub fn from_dense(nrows: usize, ncols: usize, a: &[f64]) -> Self {
        let mut t = Vec::new();
        for i in 0..nrows {
            for j in 0..ncols {
                if a[i * ncols + j] != 0.0 {
                    t.push((i, j, a[i * ncols + j]));
                }
            }
        }
        Self::from_triplets(nrows, ncols, t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[s..e], &self.values[s..e])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
            })
            .collect()
    }

    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                y[j] += a * x[i];
            }
        }
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(
            self.ncols,
            self.nrows,
            self.iter().map(|(i, j, v)| (j, i, v)).collect(),
        )
    }

    /// `A · P` where `P` has a single unit entry per row: column `j` of `A` is
    /// accumulated into column `map[j]` of the result.
    pub fn merge_columns(&self, map: &[usize], ncols: usize) -> CsrMatrix {
        assert_eq!(map.len(), self.ncols);
        CsrMatrix::from_triplets(
            self.nrows,
            ncols,
            self.iter().map(|(i, j, v)| (i, map[j], v)).collect(),
        )
    }

    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        self.add_scaled(1.0, other)
    }

    /// `self + alpha · other`
    pub fn add_scaled(&self, alpha: f64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let t = self
            .iter()
            .chain(other.iter().map(|(i, j, v)| (i, j, alpha * v)))
            .collect();
        CsrMatrix::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn scale(&self, alpha: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max |A - Aᵀ|`
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        self.add_scaled(-1.0, &t).max_abs()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows * self.ncols];
        for (i, j, v) in self.iter() {
            d[i * self.ncols + j] += v;
        }
        d
    }

    /// Symmetric block matrix `[[A, B], [Bᵀ, 0]]`.
    pub fn saddle_block(a: &CsrMatrix, b: &CsrMatrix) -> CsrMatrix {
        assert_eq!(a.nrows, a.ncols);
        assert_eq!(a.nrows, b.nrows);
        let n = a.nrows;
        let size = n + b.ncols;
        let mut t = Vec::with_capacity(a.nnz() + 2 * b.nnz());
        t.extend(a.iter());
        for (i, j, v) in b.iter() {
            t.push((i, n + j, v));
            t.push((n + j, i, v));
        }
        CsrMatrix::from_triplets(size, size, t)
    }

    pub(crate) fn to_faer(&self) -> SparseColMat<usize, f64> {
        let t: Vec<Triplet<usize, usize, f64>> =
            self.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .expect("valid triplets always build a faer matrix")
    }
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `x + alpha · y`
pub fn axpy(x: &[f64], alpha: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + alpha * b).collect()
}
