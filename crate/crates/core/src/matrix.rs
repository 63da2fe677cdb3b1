use serde::{Deserialize, Serialize};

/// Dense row-major matrix. Entry `(row, col)` connects source neuron `col`
/// to destination neuron `row`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        WeightMatrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Returns `None` when `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == rows * cols).then_some(WeightMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn nonzeros(&self) -> usize {
        self.data.iter().filter(|&&w| w != 0.0).count()
    }

    /// `out[j] = Σ_i w[j][i]·x[i] - bias`, summed in ascending `i`.
    #[inline]
    pub(crate) fn affine_into(&self, x: &[f64], bias: f64, out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            let mut acc = 0.0;
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            *o = acc - bias;
        }
    }
}

/// Compressed-row copy of a matrix that never changes. Only nonzero entries
/// are kept, in ascending column order, so products match the dense path.
#[derive(Debug, Clone)]
pub(crate) struct SparseRows {
    row_start: Vec<usize>,
    cols: Vec<u32>,
    values: Vec<f64>,
}

impl SparseRows {
    pub(crate) fn from_dense(m: &WeightMatrix) -> Self {
        let mut row_start = Vec::with_capacity(m.rows + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_start.push(0);
        for j in 0..m.rows {
            for (i, &w) in m.row(j).iter().enumerate() {
                if w != 0.0 {
                    cols.push(i as u32);
                    values.push(w);
                }
            }
            row_start.push(values.len());
        }
        SparseRows {
            row_start,
            cols,
            values,
        }
    }

    #[inline]
    pub(crate) fn affine_into(&self, x: &[f64], bias: f64, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let span = self.row_start[j]..self.row_start[j + 1];
            let mut acc = 0.0;
            for (&i, &w) in self.cols[span.clone()].iter().zip(&self.values[span]) {
                acc += w * x[i as usize];
            }
            *o = acc - bias;
        }
    }
}
