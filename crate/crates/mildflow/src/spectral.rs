//! Exact spectral representations of the linear operators: heat semigroup,
//! Leray-Helmholtz projection, spatial derivatives, and the two-thirds
//! dealiasing rule.

use crate::error::{Error, Result};
use crate::field::{FieldRole, VectorField};
use crate::grid::SpectralGrid;
use num_complex::Complex64;
use std::sync::Arc;

/// Per-mode scalar weights indexed by wavenumber vector.
#[derive(Debug, Clone)]
pub struct MultiplierKernel {
    grid: Arc<SpectralGrid>,
    weights: Vec<f64>,
}

impl MultiplierKernel {
    /// The heat semigroup weights exp(-t |k|^2).
    pub fn heat(grid: Arc<SpectralGrid>, t: f64) -> Result<Self> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Field(format!(
                "heat semigroup time must be finite and nonnegative, got {t}"
            )));
        }
        let s2 = grid.wavenumber_scale() * grid.wavenumber_scale();
        let weights = (0..grid.total_points())
            .map(|flat| (-t * s2 * grid.k2_int(flat) as f64).exp())
            .collect();
        Ok(Self { grid, weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn apply(&self, f: &VectorField) -> VectorField {
        let comps = f
            .components()
            .iter()
            .map(|c| {
                c.iter()
                    .zip(&self.weights)
                    .map(|(v, w)| v * *w)
                    .collect()
            })
            .collect();
        VectorField::from_spectral(self.grid.clone(), f.role(), comps)
            .expect("multiplier keeps shape")
    }
}

/// Apply the heat semigroup exp(t Laplacian) for t >= 0.
pub fn heat_semigroup(f: &VectorField, t: f64) -> Result<VectorField> {
    let kernel = MultiplierKernel::heat(f.grid().clone(), t)?;
    Ok(kernel.apply(f))
}

/// Leray-Helmholtz projection onto divergence-free fields.
///
/// Per mode k != 0 the coefficient vector loses its component along k;
/// the k = 0 mode (mean momentum) is left untouched.
pub fn leray_project(f: &VectorField) -> Result<VectorField> {
    let grid = f.grid().clone();
    let dim = grid.dimension();
    if f.n_comps() != dim {
        return Err(Error::Field(format!(
            "projection needs {dim} components on a {dim}-dimensional grid, got {}",
            f.n_comps()
        )));
    }
    let total = grid.total_points();
    let n = grid.modes_per_axis();
    let mut comps: Vec<Vec<Complex64>> = f.components().to_vec();
    for flat in 0..total {
        let idx = grid.decompose(flat);
        // the self-conjugate Nyquist mode has no well-defined first
        // derivative; treat its wavenumber as zero, matching the
        // differentiation convention, so projected fields are
        // divergence-free under the same convention
        let mut k = grid.k_int_vec(flat);
        for (a, kk) in k.iter_mut().enumerate().take(dim) {
            if idx[a] == n / 2 {
                *kk = 0;
            }
        }
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        if k2 == 0.0 {
            continue;
        }
        let mut dot = Complex64::ZERO;
        for a in 0..dim {
            dot += comps[a][flat] * k[a] as f64;
        }
        let coeff = dot / k2;
        for (a, comp) in comps.iter_mut().enumerate().take(dim) {
            comp[flat] -= coeff * k[a] as f64;
        }
    }
    VectorField::from_spectral(grid, f.role(), comps)
}

/// Zero all modes with any |k_axis| > N/3 (two-thirds rule).
pub fn dealias(f: &VectorField) -> VectorField {
    let grid = f.grid().clone();
    let n = grid.modes_per_axis() as i64;
    let dim = grid.dimension();
    let comps = f
        .components()
        .iter()
        .map(|c| {
            let mut out = c.clone();
            for (flat, v) in out.iter_mut().enumerate() {
                let k = grid.k_int_vec(flat);
                for kk in k.iter().take(dim) {
                    if 3 * kk.abs() > n {
                        *v = Complex64::ZERO;
                        break;
                    }
                }
            }
            out
        })
        .collect();
    VectorField::from_spectral(grid, f.role(), comps).expect("dealias keeps shape")
}

/// Tensor-valued field: entry (r, c) is one scalar spectral array.
#[derive(Debug, Clone)]
pub struct TensorField {
    grid: Arc<SpectralGrid>,
    rows: usize,
    cols: usize,
    entries: Vec<Vec<Complex64>>,
}

impl TensorField {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, r: usize, c: usize) -> &[Complex64] {
        &self.entries[r * self.cols + c]
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }
}

/// Exact spectral gradient: entry (a, c) = d f_c / d x_a.
pub fn gradient(f: &VectorField) -> TensorField {
    let grid = f.grid().clone();
    let dim = grid.dimension();
    let nc = f.n_comps();
    let mut entries = Vec::with_capacity(dim * nc);
    for a in 0..dim {
        let mut beta = vec![0usize; dim];
        beta[a] = 1;
        let df = f.derivative(&beta);
        for c in 0..nc {
            entries.push(df.component(c).to_vec());
        }
    }
    TensorField {
        grid,
        rows: dim,
        cols: nc,
        entries,
    }
}

/// Contract the row (axis) index of a tensor field with the gradient:
/// out_c = sum_a d T(a, c) / d x_a.
pub fn divergence(t: &TensorField) -> VectorField {
    let grid = t.grid.clone();
    let dim = grid.dimension();
    debug_assert_eq!(t.rows, dim);
    let n = grid.modes_per_axis();
    let scale = grid.wavenumber_scale();
    let total = grid.total_points();
    let mut comps = vec![vec![Complex64::ZERO; total]; t.cols];
    for flat in 0..total {
        let idx = grid.decompose(flat);
        for a in 0..dim {
            let j = idx[a];
            if j == n / 2 {
                continue;
            }
            let ik = Complex64::new(0.0, grid.k_int_at(j) as f64 * scale);
            for (c, comp) in comps.iter_mut().enumerate() {
                comp[flat] += ik * t.entry(a, c)[flat];
            }
        }
    }
    VectorField::from_spectral(grid, FieldRole::Generic, comps).expect("divergence keeps shape")
}

/// Curl: a 3-component field in 3D, the scalar d u2/d x1 - d u1/d x2 in 2D.
pub fn curl(u: &VectorField) -> Result<VectorField> {
    let grid = u.grid().clone();
    let dim = grid.dimension();
    if u.n_comps() < 2 {
        return Err(Error::Field("curl is undefined for one-component fields".into()));
    }
    let g = gradient(u);
    let total = grid.total_points();
    match dim {
        2 => {
            let mut w = vec![Complex64::ZERO; total];
            for (flat, slot) in w.iter_mut().enumerate() {
                *slot = g.entry(0, 1)[flat] - g.entry(1, 0)[flat];
            }
            VectorField::from_spectral(grid, FieldRole::Generic, vec![w])
        }
        _ => {
            if u.n_comps() != 3 {
                return Err(Error::Field("3d curl needs a 3-component field".into()));
            }
            let mut comps = vec![vec![Complex64::ZERO; total]; 3];
            for flat in 0..total {
                comps[0][flat] = g.entry(1, 2)[flat] - g.entry(2, 1)[flat];
                comps[1][flat] = g.entry(2, 0)[flat] - g.entry(0, 2)[flat];
                comps[2][flat] = g.entry(0, 1)[flat] - g.entry(1, 0)[flat];
            }
            VectorField::from_spectral(grid, FieldRole::Generic, comps)
        }
    }
}
