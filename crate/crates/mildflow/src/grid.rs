//! Periodic computational grid and its Fourier dual.
//!
//! Fields live on the torus `[0, L)^n` with `n` in {2, 3}, sampled on `N`
//! uniformly spaced collocation points per axis. The spectral side indexes
//! integer wavenumbers in `[-N/2, N/2)` per axis in standard FFT order
//! (`0, 1, .., N/2-1, -N/2, .., -1`); physical wavenumbers carry the
//! `2*pi/L` factor so that non-default periods (produced e.g. by the zoom
//! transform) differentiate correctly.

use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct SpectralGrid {
    dimension: usize,
    modes_per_axis: usize,
    period: f64,
    /// Integer wavenumber for each FFT index along one axis.
    k_int: Vec<i64>,
    /// Largest occurring |k_int|^2 over the full mode set.
    k2_max: usize,
}

impl SpectralGrid {
    /// Build a grid; `dimension` must be 2 or 3, `modes_per_axis` even and >= 8.
    pub fn new(dimension: usize, modes_per_axis: usize, period: f64) -> Result<Arc<Self>> {
        if dimension != 2 && dimension != 3 {
            return Err(Error::Grid(format!(
                "dimension must be 2 or 3, got {dimension}"
            )));
        }
        if modes_per_axis % 2 != 0 {
            return Err(Error::Grid(format!(
                "resolution must be even, got {modes_per_axis}"
            )));
        }
        if modes_per_axis < 8 {
            return Err(Error::Grid(format!(
                "resolution must be at least 8, got {modes_per_axis}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Grid(format!("period must be positive, got {period}")));
        }
        let n = modes_per_axis;
        let k_int: Vec<i64> = (0..n)
            .map(|j| if j < n / 2 { j as i64 } else { j as i64 - n as i64 })
            .collect();
        let half = n / 2;
        let k2_max = dimension * half * half;
        Ok(Arc::new(Self {
            dimension,
            modes_per_axis: n,
            period,
            k_int,
            k2_max,
        }))
    }

    /// Grid with the default period 2*pi.
    pub fn standard(dimension: usize, modes_per_axis: usize) -> Result<Arc<Self>> {
        Self::new(dimension, modes_per_axis, 2.0 * PI)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn modes_per_axis(&self) -> usize {
        self.modes_per_axis
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Total number of modes (= collocation points).
    pub fn total_points(&self) -> usize {
        self.modes_per_axis.pow(self.dimension as u32)
    }

    /// Collocation spacing L/N.
    pub fn spacing(&self) -> f64 {
        self.period / self.modes_per_axis as f64
    }

    /// Scale factor turning integer wavenumbers into physical ones.
    pub fn wavenumber_scale(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Integer wavenumber at FFT index `j` along one axis.
    pub fn k_int_at(&self, j: usize) -> i64 {
        self.k_int[j]
    }

    /// Per-axis integer wavenumber table in FFT order.
    pub fn k_int_table(&self) -> &[i64] {
        &self.k_int
    }

    /// Largest |k_int|^2 over all modes.
    pub fn k2_int_max(&self) -> usize {
        self.k2_max
    }

    /// Decompose a flat (row-major) mode index into per-axis FFT indices.
    #[inline]
    pub fn decompose(&self, flat: usize) -> [usize; 3] {
        let n = self.modes_per_axis;
        match self.dimension {
            2 => [flat / n, flat % n, 0],
            _ => [flat / (n * n), (flat / n) % n, flat % n],
        }
    }

    /// Integer wavevector of a flat mode index (third entry 0 in 2D).
    #[inline]
    pub fn k_int_vec(&self, flat: usize) -> [i64; 3] {
        let idx = self.decompose(flat);
        let mut k = [0i64; 3];
        for a in 0..self.dimension {
            k[a] = self.k_int[idx[a]];
        }
        k
    }

    /// |k_int|^2 of a flat mode index.
    #[inline]
    pub fn k2_int(&self, flat: usize) -> usize {
        let k = self.k_int_vec(flat);
        (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as usize
    }

    /// Physical coordinates of collocation point `flat` (third entry 0 in 2D).
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.decompose(flat);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.dimension {
            x[a] = idx[a] as f64 * h;
        }
        x
    }

    /// True when both grids can host the same field (same layout and period).
    pub fn compatible(&self, other: &Self) -> bool {
        self.dimension == other.dimension
            && self.modes_per_axis == other.modes_per_axis
            && (self.period - other.period).abs() <= 1e-12 * self.period.abs()
    }
}

/// Convenience constructor mirroring the library's external surface.
pub fn make_grid(dimension: usize, modes_per_axis: usize, period: f64) -> Result<Arc<SpectralGrid>> {
    SpectralGrid::new(dimension, modes_per_axis, period)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_2d_n8() {
        let g = make_grid(2, 8, 2.0 * PI).unwrap();
        assert_eq!(g.total_points(), 64);
        let ks: Vec<i64> = g.k_int_table().to_vec();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        // k = 0 occurs exactly once per axis
        assert_eq!(ks.iter().filter(|&&k| k == 0).count(), 1);
        // collocation spacing L/N
        assert!((g.spacing() - 2.0 * PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn layout_3d_n16() {
        let g = make_grid(3, 16, 2.0 * PI).unwrap();
        assert_eq!(g.total_points(), 4096);
        assert_eq!(g.k_int_table().len(), 16);
    }

    #[test]
    fn rejects_odd_resolution() {
        let err = make_grid(2, 7, 2.0 * PI).unwrap_err();
        assert!(err.to_string().contains("must be even"));
    }

    #[test]
    fn rejects_small_resolution_and_bad_dimension() {
        assert!(make_grid(2, 6, 2.0 * PI).is_err());
        assert!(make_grid(1, 16, 2.0 * PI).is_err());
        assert!(make_grid(4, 16, 2.0 * PI).is_err());
    }

    #[test]
    fn flat_index_roundtrip() {
        let g = make_grid(3, 8, 2.0 * PI).unwrap();
        for flat in [0usize, 17, 63, 300, 511] {
            let idx = g.decompose(flat);
            assert_eq!(idx[0] * 64 + idx[1] * 8 + idx[2], flat);
        }
    }
}
