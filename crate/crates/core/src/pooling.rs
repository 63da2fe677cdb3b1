//! Fixed connectivity maps that reduce a square-arranged layer to a smaller
//! square-arranged layer.
//!
//! A source layer of `n` cells is laid out as a `√n × √n` grid and a
//! destination layer of `m` cells as `√m × √m`. With `r = √n / √m`, source
//! cell `(i1, j1)` feeds destination cell `(i2, j2)` when
//! `|⌊i1/r⌋ - i2| <= v` and `|⌊j1/r⌋ - j2| <= v`. `v = 0` gives disjoint
//! `r × r` blocks; larger `v` widens each receptive field by `v` blocks on
//! every side.

use crate::error::{Error, Result};
use crate::matrix::WeightMatrix;
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolingSpec {
    source: usize,
    dest: usize,
    connectivity: usize,
    value: f64,
    source_side: usize,
    dest_side: usize,
    ratio: usize,
}

/// Integer square root when `n` is a perfect square.
pub fn perfect_square_root(n: usize) -> Option<usize> {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    (r * r == n).then_some(r)
}

/// Integer connectivity radius for a (possibly fractional) connectivity factor.
///
/// The radius is a whole number of destination blocks, so fractional factors
/// truncate: `0.75 -> 0`, `1.5 -> 1`.
pub fn connectivity_from_factor(factor: f64) -> Result<usize> {
    if !(factor.is_finite() && factor >= 0.0) {
        return Err(Error::config(format!(
            "connectivity factor must be finite and >= 0, got {factor}"
        )));
    }
    Ok(factor.floor() as usize)
}

impl PoolingSpec {
    pub fn new(source: usize, dest: usize, connectivity: usize, value: f64) -> Result<Self> {
        let source_side = perfect_square_root(source)
            .filter(|&s| s > 0)
            .ok_or_else(|| {
                Error::config(format!(
                    "pooling source size {source} is not a positive perfect square"
                ))
            })?;
        let dest_side = perfect_square_root(dest)
            .filter(|&s| s > 0)
            .ok_or_else(|| {
                Error::config(format!(
                    "pooling destination size {dest} is not a positive perfect square"
                ))
            })?;
        if dest >= source {
            return Err(Error::config(format!(
                "pooling must reduce: destination {dest} >= source {source}"
            )));
        }
        if source_side % dest_side != 0 {
            return Err(Error::config(format!(
                "side ratio {source_side}/{dest_side} is not an integer"
            )));
        }
        if connectivity > source_side - 1 {
            return Err(Error::config(format!(
                "connectivity {connectivity} exceeds {} for a {source}-cell layer",
                source_side - 1
            )));
        }
        if !(-1.0..=1.0).contains(&value) {
            return Err(Error::config(format!(
                "pooling weight value must lie in [-1, 1], got {value}"
            )));
        }
        Ok(PoolingSpec {
            source,
            dest,
            connectivity,
            value,
            source_side,
            dest_side,
            ratio: source_side / dest_side,
        })
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn dest(&self) -> usize {
        self.dest
    }

    pub fn connectivity(&self) -> usize {
        self.connectivity
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn ratio(&self) -> usize {
        self.ratio
    }

    #[inline]
    fn connected(&self, x: usize, y: usize) -> bool {
        let (i1, j1) = (x / self.source_side, x % self.source_side);
        let (i2, j2) = (y / self.dest_side, y % self.dest_side);
        (i1 / self.ratio).abs_diff(i2) <= self.connectivity
            && (j1 / self.ratio).abs_diff(j2) <= self.connectivity
    }
}

/// Row-major `(row, col)` position of cell `x` in a `side × side` grid.
pub fn decompose_index(x: usize, side: usize) -> Result<(usize, usize)> {
    if side == 0 || x >= side * side {
        return Err(Error::invalid(format!(
            "index {x} out of range for a {side}x{side} grid"
        )));
    }
    Ok((x / side, x % side))
}

/// Weight between source cell `x` and destination cell `y`.
pub fn pooling_weight(x: usize, y: usize, spec: &PoolingSpec) -> Result<f64> {
    if x >= spec.source {
        return Err(Error::invalid(format!(
            "source index {x} out of range for {} cells",
            spec.source
        )));
    }
    if y >= spec.dest {
        return Err(Error::invalid(format!(
            "destination index {y} out of range for {} cells",
            spec.dest
        )));
    }
    Ok(if spec.connected(x, y) {
        spec.value
    } else {
        0.0
    })
}

/// `dest × source` matrix of the connectivity map.
pub fn build_pooling_matrix(spec: &PoolingSpec) -> WeightMatrix {
    build_pooling_matrix_with(spec, Execution::default())
}

pub fn build_pooling_matrix_with(spec: &PoolingSpec, exec: Execution) -> WeightMatrix {
    let mut m = WeightMatrix::filled(spec.dest, spec.source, 0.0);
    par::for_each_row_mut(m.as_mut_slice(), spec.source, exec, |y, row| {
        for (x, w) in row.iter_mut().enumerate() {
            if spec.connected(x, y) {
                *w = spec.value;
            }
        }
    });
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decompose_examples() {
        assert_eq!(decompose_index(0, 4).unwrap(), (0, 0));
        assert_eq!(decompose_index(5, 4).unwrap(), (1, 1));
        assert_eq!(decompose_index(15, 4).unwrap(), (3, 3));
        assert!(decompose_index(16, 4).is_err());
        assert!(decompose_index(0, 0).is_err());
    }

    #[test]
    fn weight_examples_4x4_to_2x2() {
        let spec = PoolingSpec::new(16, 4, 0, 0.5).unwrap();
        assert_eq!(pooling_weight(0, 0, &spec).unwrap(), 0.5);
        assert_eq!(pooling_weight(5, 0, &spec).unwrap(), 0.5);
        assert_eq!(pooling_weight(2, 0, &spec).unwrap(), 0.0);
        assert!(pooling_weight(16, 0, &spec).is_err());
        assert!(pooling_weight(0, 4, &spec).is_err());
    }

    #[test]
    fn figure_layout_4x4_to_2x2() {
        // destination cell owning each source cell, row by row
        let expected = [0, 0, 1, 1, 0, 0, 1, 1, 2, 2, 3, 3, 2, 2, 3, 3];
        let m = build_pooling_matrix(&PoolingSpec::new(16, 4, 0, 0.5).unwrap());
        for (x, &owner) in expected.iter().enumerate() {
            for y in 0..4 {
                let want = if y == owner { 0.5 } else { 0.0 };
                assert_eq!(m.get(y, x), want, "x={x} y={y}");
            }
        }
    }

    #[test]
    fn row_and_column_counts() {
        let m = build_pooling_matrix(&PoolingSpec::new(16, 4, 0, 0.5).unwrap());
        for y in 0..4 {
            assert_eq!(m.row(y).iter().filter(|&&w| w != 0.0).count(), 4);
        }
        for x in 0..16 {
            assert_eq!((0..4).filter(|&y| m.get(y, x) != 0.0).count(), 1);
        }
        let big = build_pooling_matrix(&PoolingSpec::new(784, 196, 0, 0.5).unwrap());
        for y in 0..196 {
            assert_eq!(big.row(y).iter().filter(|&&w| w != 0.0).count(), 4);
        }
    }

    #[test]
    fn overlapping_receptive_field() {
        // 784 -> 196 with v = 1: an interior cell sees a 6x6 patch
        let m = build_pooling_matrix(&PoolingSpec::new(784, 196, 1, 0.5).unwrap());
        let interior = 5 * 14 + 5;
        assert_eq!(m.row(interior).iter().filter(|&&w| w != 0.0).count(), 36);
        // a corner sees a 4x4 patch
        assert_eq!(m.row(0).iter().filter(|&&w| w != 0.0).count(), 16);
    }

    #[test]
    fn invalid_specs() {
        assert!(PoolingSpec::new(15, 4, 0, 0.5).is_err());
        assert!(PoolingSpec::new(16, 3, 0, 0.5).is_err());
        assert!(PoolingSpec::new(16, 16, 0, 0.5).is_err());
        assert!(PoolingSpec::new(36, 16, 0, 0.5).is_err());
        assert!(PoolingSpec::new(16, 4, 4, 0.5).is_err());
        assert!(PoolingSpec::new(16, 4, 3, 0.5).is_ok());
        assert!(PoolingSpec::new(16, 4, 0, 1.5).is_err());
        assert!(PoolingSpec::new(0, 0, 0, 0.5).is_err());
    }

    #[test]
    fn factor_truncates() {
        assert_eq!(connectivity_from_factor(0.75).unwrap(), 0);
        assert_eq!(connectivity_from_factor(0.25).unwrap(), 0);
        assert_eq!(connectivity_from_factor(1.5).unwrap(), 1);
        assert_eq!(connectivity_from_factor(2.0).unwrap(), 2);
        assert!(connectivity_from_factor(-0.5).is_err());
        assert!(connectivity_from_factor(f64::NAN).is_err());
    }

    #[test]
    fn sequential_and_parallel_builds_agree() {
        let spec = PoolingSpec::new(196, 49, 1, 0.6).unwrap();
        assert_eq!(
            build_pooling_matrix_with(&spec, Execution::Sequential),
            build_pooling_matrix_with(&spec, Execution::Parallel)
        );
    }

    fn shapes() -> impl Strategy<Value = (usize, usize)> {
        (1usize..=4, 1usize..=4).prop_map(|(dest_side, r)| {
            let r = r + 1;
            let s = dest_side * r;
            (s * s, dest_side * dest_side)
        })
    }

    proptest! {
        #[test]
        fn decompose_is_a_bijection(side in 1usize..40) {
            let mut seen = vec![false; side * side];
            for x in 0..side * side {
                let (i, j) = decompose_index(x, side).unwrap();
                prop_assert!(i < side && j < side);
                prop_assert_eq!(i * side + j, x);
                prop_assert!(!seen[x]);
                seen[x] = true;
            }
        }

        #[test]
        fn widening_never_removes_connections((n, m) in shapes(), v in 0usize..3, c in -1.0f64..=1.0) {
            let side = perfect_square_root(n).unwrap();
            prop_assume!(c != 0.0 && v < side - 1);
            let narrow = build_pooling_matrix(&PoolingSpec::new(n, m, v, c).unwrap());
            let wide = build_pooling_matrix(&PoolingSpec::new(n, m, v + 1, c).unwrap());
            for (a, b) in narrow.as_slice().iter().zip(wide.as_slice()) {
                prop_assert!(*b == c || *b == 0.0);
                if *a != 0.0 {
                    prop_assert!(*b != 0.0);
                }
            }
        }

        #[test]
        fn block_partition_without_overlap((n, m) in shapes(), c in 0.01f64..=1.0) {
            let mat = build_pooling_matrix(&PoolingSpec::new(n, m, 0, c).unwrap());
            prop_assert_eq!(mat.nonzeros(), n);
            for x in 0..n {
                prop_assert_eq!((0..m).filter(|&y| mat.get(y, x) != 0.0).count(), 1);
            }
        }
    }
}
