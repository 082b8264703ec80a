//! Vector fields in dual spectral/physical representation.
//!
//! The spectral coefficients are the source of truth; collocation samples
//! are materialized lazily (at most once, synchronized) when a pointwise
//! view is needed. Sup-norms are evaluated on a 2x zero-padded oversampling
//! of the field, which tightens the collocation maximum toward the true
//! supremum of the trigonometric interpolant.

use crate::error::{Error, Result};
use crate::fft::{self, Shape};
use crate::grid::SpectralGrid;
use num_complex::Complex64;
use std::sync::{Arc, OnceLock};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRole {
    Generic,
    Velocity,
    Director,
}

impl FieldRole {
    pub fn as_u8(self) -> u8 {
        match self {
            FieldRole::Generic => 0,
            FieldRole::Velocity => 1,
            FieldRole::Director => 2,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(FieldRole::Generic),
            1 => Ok(FieldRole::Velocity),
            2 => Ok(FieldRole::Director),
            other => Err(Error::Snapshot(format!("unknown field role tag {other}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VectorField {
    grid: Arc<SpectralGrid>,
    role: FieldRole,
    comps: Vec<Vec<Complex64>>,
    physical: OnceLock<Vec<Vec<f64>>>,
    sup_cache: OnceLock<f64>,
}

impl VectorField {
    /// Number of components a role mandates on a given grid (None = free).
    fn role_comps(role: FieldRole, grid: &SpectralGrid) -> Option<usize> {
        match role {
            FieldRole::Velocity => Some(grid.dimension()),
            // the director maps into S^2 regardless of spatial dimension
            FieldRole::Director => Some(3),
            FieldRole::Generic => None,
        }
    }

    pub fn from_spectral(
        grid: Arc<SpectralGrid>,
        role: FieldRole,
        comps: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::Field("field needs at least one component".into()));
        }
        if let Some(want) = Self::role_comps(role, &grid) {
            if comps.len() != want {
                return Err(Error::Field(format!(
                    "{role:?} field needs {want} components, got {}",
                    comps.len()
                )));
            }
        }
        let total = grid.total_points();
        if comps.iter().any(|c| c.len() != total) {
            return Err(Error::Field("component length does not match grid".into()));
        }
        Ok(Self {
            grid,
            role,
            comps,
            physical: OnceLock::new(),
            sup_cache: OnceLock::new(),
        })
    }

    pub fn from_physical(
        grid: Arc<SpectralGrid>,
        role: FieldRole,
        physical: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let shape = Shape::new(grid.dimension(), grid.modes_per_axis());
        if physical.iter().any(|c| c.len() != shape.total()) {
            return Err(Error::Field("sample length does not match grid".into()));
        }
        let comps = physical.iter().map(|c| fft::forward(c, shape)).collect();
        let field = Self::from_spectral(grid, role, comps)?;
        // the given samples are authoritative; keep them bit-exact
        let _ = field.physical.set(physical);
        Ok(field)
    }

    /// Sample a closure at every collocation point.
    pub fn from_point_fn(
        grid: Arc<SpectralGrid>,
        role: FieldRole,
        n_comps: usize,
        mut f: impl FnMut([f64; 3]) -> Vec<f64>,
    ) -> Result<Self> {
        let total = grid.total_points();
        let mut phys = vec![vec![0.0; total]; n_comps];
        for p in 0..total {
            let vals = f(grid.point(p));
            debug_assert_eq!(vals.len(), n_comps);
            for (c, v) in vals.into_iter().enumerate() {
                phys[c][p] = v;
            }
        }
        Self::from_physical(grid, role, phys)
    }

    pub fn zero(grid: Arc<SpectralGrid>, role: FieldRole) -> Self {
        let n = Self::role_comps(role, &grid).unwrap_or(1);
        Self::zero_with(grid, role, n)
    }

    pub fn zero_with(grid: Arc<SpectralGrid>, role: FieldRole, n_comps: usize) -> Self {
        let total = grid.total_points();
        let comps = vec![vec![Complex64::ZERO; total]; n_comps];
        Self::from_spectral(grid, role, comps).expect("zero field construction")
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn role(&self) -> FieldRole {
        self.role
    }

    pub fn with_role(mut self, role: FieldRole) -> Result<Self> {
        if let Some(want) = Self::role_comps(role, &self.grid) {
            if self.comps.len() != want {
                return Err(Error::Field(format!(
                    "{role:?} field needs {want} components, got {}",
                    self.comps.len()
                )));
            }
        }
        self.role = role;
        Ok(self)
    }

    pub fn n_comps(&self) -> usize {
        self.comps.len()
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    pub(crate) fn components_mut(&mut self) -> &mut Vec<Vec<Complex64>> {
        self.physical = OnceLock::new();
        self.sup_cache = OnceLock::new();
        &mut self.comps
    }

    pub fn shape(&self) -> Shape {
        Shape::new(self.grid.dimension(), self.grid.modes_per_axis())
    }

    /// Collocation samples, materialized once.
    pub fn physical(&self) -> &[Vec<f64>] {
        self.physical.get_or_init(|| {
            let shape = self.shape();
            self.comps.iter().map(|c| fft::inverse(c, shape)).collect()
        })
    }

    /// Samples on a grid refined by `factor` (trigonometric interpolation).
    pub fn physical_oversampled(&self, factor: usize) -> Vec<Vec<f64>> {
        let shape = self.shape();
        let n_fine = shape.n * factor;
        self.comps
            .iter()
            .map(|c| fft::inverse_oversampled(c, shape, n_fine))
            .collect()
    }

    /// Oversampled collocation maximum of the pointwise Euclidean magnitude.
    pub fn sup_norm(&self) -> f64 {
        *self.sup_cache.get_or_init(|| {
            let fine = self.physical_oversampled(2);
            max_magnitude(&fine)
        })
    }

    /// Sum over multi-indices |beta| <= k of the sup-norms of the spectral
    /// derivatives (the W^{k,inf} norm used throughout).
    pub fn sobolev_inf_norm(&self, k: usize) -> Result<f64> {
        let n = self.grid.modes_per_axis();
        if 3 * k > n {
            return Err(Error::Field(format!(
                "derivative order {k} exceeds the resolved band N/3 = {}",
                n / 3
            )));
        }
        let mut total = 0.0;
        for beta in multi_indices(self.grid.dimension(), k) {
            total += self.derivative(&beta).sup_norm();
        }
        Ok(total)
    }

    /// Spectral derivative by a multi-index (per-axis orders).
    pub fn derivative(&self, beta: &[usize]) -> VectorField {
        let order: usize = beta.iter().sum();
        if order == 0 {
            return self.clone();
        }
        let grid = &self.grid;
        let scale = grid.wavenumber_scale();
        let n = grid.modes_per_axis();
        let dim = grid.dimension();
        // per-axis multiplier tables
        let mut tables: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
        for (axis, &p) in beta.iter().enumerate().take(dim) {
            let mut t = vec![Complex64::new(1.0, 0.0); n];
            if p > 0 {
                for (j, slot) in t.iter_mut().enumerate() {
                    let k = grid.k_int_at(j);
                    // odd derivatives of the self-conjugate Nyquist mode are
                    // zeroed to keep real fields real
                    if p % 2 == 1 && j == n / 2 {
                        *slot = Complex64::ZERO;
                    } else {
                        *slot = Complex64::new(0.0, k as f64 * scale).powu(p as u32);
                    }
                }
            }
            let _ = axis;
            tables.push(t);
        }
        let comps = self
            .comps
            .iter()
            .map(|c| {
                let mut out = c.clone();
                for (flat, v) in out.iter_mut().enumerate() {
                    let idx = grid.decompose(flat);
                    let mut f = Complex64::new(1.0, 0.0);
                    for (axis, table) in tables.iter().enumerate() {
                        f *= table[idx[axis]];
                    }
                    *v *= f;
                }
                out
            })
            .collect();
        Self::from_spectral(grid.clone(), FieldRole::Generic, comps)
            .expect("derivative keeps shape")
    }

    /// Oversampled sup of the pointwise Frobenius magnitude of the order-l
    /// gradient tensor (ordered derivative tuples, i.e. multi-indices
    /// weighted by their multinomial counts).
    pub fn iterated_gradient_sup(&self, l: usize) -> Result<f64> {
        let n = self.grid.modes_per_axis();
        if 3 * l > n {
            return Err(Error::Field(format!(
                "derivative order {l} exceeds the resolved band N/3 = {}",
                n / 3
            )));
        }
        if l == 0 {
            return Ok(self.sup_norm());
        }
        let dim = self.grid.dimension();
        let mut acc: Option<Vec<f64>> = None;
        for beta in multi_indices(dim, l) {
            if beta.iter().sum::<usize>() != l {
                continue;
            }
            let coef = multinomial(l, &beta);
            let fine = self.derivative(&beta).physical_oversampled(2);
            let acc = acc.get_or_insert_with(|| vec![0.0; fine[0].len()]);
            for comp in &fine {
                for (slot, v) in acc.iter_mut().zip(comp) {
                    *slot += coef * v * v;
                }
            }
        }
        Ok(acc
            .map(|sq| sq.into_iter().fold(0.0f64, f64::max).sqrt())
            .unwrap_or(0.0))
    }

    /// Sup-norm of the first gradient, `sup_x |grad f(x)|`.
    pub fn gradient_sup(&self) -> Result<f64> {
        self.iterated_gradient_sup(1)
    }

    /// Absolute spectral sup of the divergence coefficients.
    pub fn divergence_residual(&self) -> f64 {
        let grid = &self.grid;
        let dim = grid.dimension();
        debug_assert!(self.n_comps() >= dim);
        let scale = grid.wavenumber_scale();
        let n = grid.modes_per_axis();
        let mut worst = 0.0f64;
        for flat in 0..grid.total_points() {
            let idx = grid.decompose(flat);
            let mut div = Complex64::ZERO;
            for a in 0..dim {
                let j = idx[a];
                if j == n / 2 {
                    continue; // Nyquist derivative convention
                }
                let k = grid.k_int_at(j) as f64 * scale;
                div += Complex64::new(0.0, k) * self.comps[a][flat];
            }
            worst = worst.max(div.norm());
        }
        worst
    }

    /// Coefficient of the k = 0 mode for each component.
    pub fn mean_mode(&self) -> Vec<Complex64> {
        self.comps.iter().map(|c| c[0]).collect()
    }

    pub fn scale(&self, factor: f64) -> VectorField {
        let comps = self
            .comps
            .iter()
            .map(|c| c.iter().map(|v| v * factor).collect())
            .collect();
        Self::from_spectral(self.grid.clone(), self.role, comps).expect("scale keeps shape")
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &VectorField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<VectorField> {
        same_grid(self, other)?;
        if self.n_comps() != other.n_comps() {
            return Err(Error::Field("component count mismatch".into()));
        }
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
            .collect();
        Self::from_spectral(self.grid.clone(), self.role, comps)
    }

    /// Largest coefficient magnitude over all modes and components.
    pub fn spectral_sup(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, v| m.max(v.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
    }
}

pub(crate) fn same_grid(a: &VectorField, b: &VectorField) -> Result<()> {
    if !a.grid().compatible(b.grid()) {
        return Err(Error::Field("fields live on incompatible grids".into()));
    }
    Ok(())
}

pub(crate) fn max_magnitude(comps: &[Vec<f64>]) -> f64 {
    let total = comps[0].len();
    let mut worst = 0.0f64;
    for p in 0..total {
        let mut s = 0.0;
        for c in comps {
            s += c[p] * c[p];
        }
        worst = worst.max(s);
    }
    worst.sqrt()
}

pub(crate) fn multinomial(l: usize, beta: &[usize]) -> f64 {
    let mut v = 1.0f64;
    for i in 2..=l {
        v *= i as f64;
    }
    for &b in beta {
        for i in 2..=b {
            v /= i as f64;
        }
    }
    v
}

/// All multi-indices over `dim` axes with total order <= k.
pub(crate) fn multi_indices(dim: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; dim];
    fn rec(axis: usize, budget: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if axis == cur.len() {
            out.push(cur.clone());
            return;
        }
        for p in 0..=budget {
            cur[axis] = p;
            rec(axis + 1, budget - p, cur, out);
        }
        cur[axis] = 0;
    }
    rec(0, k, &mut cur, &mut out);
    out
}

/// The pair (u, d) at one instant.
#[derive(Debug, Clone)]
pub struct StatePair {
    pub u: VectorField,
    pub d: VectorField,
    pub t: f64,
}

impl StatePair {
    pub fn new(u: VectorField, d: VectorField, t: f64) -> Result<Self> {
        same_grid(&u, &d)?;
        Ok(Self { u, d, t })
    }
}
