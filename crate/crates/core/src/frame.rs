//! Row-major grids, frames and the patch partition laid over them.

use serde::{Deserialize, Serialize};

use crate::error::{FreqCacheError, Result};

/// A dense row-major 2D grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(FreqCacheError::InvalidDimensions(format!(
                "{rows}x{cols} grid needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: T) {
        self.data[r * self.cols + c] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn same_shape<U>(&self, other: &Grid<U>) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }
}

impl Grid<bool> {
    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Single-channel real-valued image or feature map. All samples are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    grid: Grid<f64>,
}

impl Frame {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(FreqCacheError::InvalidDimensions(format!(
                "frame must be at least 1x1, got {height}x{width}"
            )));
        }
        let grid = Grid::from_vec(height, width, data)?;
        if let Some(index) = grid.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(FreqCacheError::NonFinite { index });
        }
        Ok(Self { grid })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        assert!(height > 0 && width > 0, "frame must be at least 1x1");
        Self {
            grid: Grid::filled(height, width, 0.0),
        }
    }

    /// Builds a frame from a generator; panics if the generator yields a non-finite value.
    pub fn from_fn(height: usize, width: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        let grid = Grid::from_fn(height, width, f);
        Self::new(height, width, grid.into_vec()).expect("generator produced an invalid frame")
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.grid.rows()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.grid.cols()
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        *self.grid.get(r, c)
    }

    pub fn data(&self) -> &[f64] {
        self.grid.as_slice()
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.grid
    }

    pub fn max_abs(&self) -> f64 {
        self.data().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Cyclic translation: `out(r, c) = self(r - dr, c - dc)` with wraparound.
    pub fn cyclic_shift(&self, dr: isize, dc: isize) -> Frame {
        let (h, w) = (self.height() as isize, self.width() as isize);
        let grid = Grid::from_fn(self.height(), self.width(), |r, c| {
            let sr = (r as isize - dr).rem_euclid(h) as usize;
            let sc = (c as isize - dc).rem_euclid(w) as usize;
            self.at(sr, sc)
        });
        Frame { grid }
    }

    pub fn scaled(&self, factor: f64) -> Frame {
        Frame::from_fn(self.height(), self.width(), |r, c| self.at(r, c) * factor)
    }

    pub fn ensure_same_dims(&self, other: &Frame) -> Result<()> {
        if self.height() != other.height() || self.width() != other.width() {
            return Err(FreqCacheError::DimensionMismatch {
                expected_rows: self.height(),
                expected_cols: self.width(),
                rows: other.height(),
                cols: other.width(),
            });
        }
        Ok(())
    }
}

/// Partition of a frame into non-overlapping `P x P` patches.
///
/// Patches are numbered in row-major order over the patch grid; this index is
/// what reuse and recompute sets carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGrid {
    patch_size: usize,
    rows: usize,
    cols: usize,
}

impl PatchGrid {
    pub fn new(height: usize, width: usize, patch_size: usize) -> Result<Self> {
        if patch_size < 2 {
            return Err(FreqCacheError::InvalidParameter(format!(
                "patch size must be at least 2, got {patch_size}"
            )));
        }
        if height == 0
            || width == 0
            || !height.is_multiple_of(patch_size)
            || !width.is_multiple_of(patch_size)
        {
            return Err(FreqCacheError::PatchDivisibility {
                patch: patch_size,
                rows: height,
                cols: width,
            });
        }
        Ok(Self {
            patch_size,
            rows: height / patch_size,
            cols: width / patch_size,
        })
    }

    pub fn for_frame(frame: &Frame, patch_size: usize) -> Result<Self> {
        Self::new(frame.height(), frame.width(), patch_size)
    }

    #[inline]
    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Total patch (token) count.
    #[inline]
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.cols + j
    }

    #[inline]
    pub fn position(&self, index: usize) -> (usize, usize) {
        (index / self.cols, index % self.cols)
    }

    pub fn matches(&self, frame: &Frame) -> Result<()> {
        if frame.height() != self.rows * self.patch_size
            || frame.width() != self.cols * self.patch_size
        {
            return Err(FreqCacheError::DimensionMismatch {
                expected_rows: self.rows * self.patch_size,
                expected_cols: self.cols * self.patch_size,
                rows: frame.height(),
                cols: frame.width(),
            });
        }
        Ok(())
    }

    /// Copies patch `(i, j)` of `frame` into `out` (row-major, `P*P` values).
    pub fn extract_into(&self, frame: &Frame, i: usize, j: usize, out: &mut [f64]) {
        let p = self.patch_size;
        debug_assert_eq!(out.len(), p * p);
        let width = frame.width();
        let data = frame.data();
        for r in 0..p {
            let start = (i * p + r) * width + j * p;
            out[r * p..(r + 1) * p].copy_from_slice(&data[start..start + p]);
        }
    }

    pub fn extract(&self, frame: &Frame, i: usize, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.patch_size * self.patch_size];
        self.extract_into(frame, i, j, &mut out);
        out
    }
}
