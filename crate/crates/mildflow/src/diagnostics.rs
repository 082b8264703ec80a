//! Theorem-level diagnostics: invariant monitors, smoothing-rate tables,
//! the type I rate, vorticity-direction fields on vorticity superlevel
//! sets, moduli of continuity, and the direction-gradient integral.

use crate::error::{Error, Result};
use crate::fft::{self, Shape};
use crate::field::VectorField;
use crate::solver::Trajectory;
use crate::spectral::curl;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Parameters of the vorticity-direction blow-up window: threshold sigma,
/// integrability exponents (a, b) with 2/a + 3/b <= 1 and a >= 2, and the
/// hypothesized blow-up time.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BlowupWindowConfig {
    pub sigma: f64,
    pub a: f64,
    pub b: f64,
    pub t_blow: Option<f64>,
}

impl BlowupWindowConfig {
    pub fn new(sigma: f64, a: f64, b: f64, t_blow: Option<f64>) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Diagnostics(format!(
                "vorticity threshold sigma must be positive, got {sigma}"
            )));
        }
        if !(a >= 2.0 && a.is_finite()) {
            return Err(Error::Diagnostics(format!(
                "exponent a must satisfy 2 <= a < infinity, got {a}"
            )));
        }
        if !(b > 0.0) {
            return Err(Error::Diagnostics(format!("exponent b must be positive, got {b}")));
        }
        let cond = 2.0 / a + 3.0 / b;
        if cond > 1.0 + 1e-12 {
            return Err(Error::Diagnostics(format!(
                "exponent condition violated: 2/a + 3/b = {cond:.6} > 1"
            )));
        }
        Ok(Self { sigma, a, b, t_blow })
    }
}

/// Thresholds turning the asymptotic type-I trichotomy into a rule on
/// finite data.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassificationThresholds {
    /// Super-type-I when the last product exceeds this multiple of the median.
    pub growth_factor: f64,
    /// Bounded when the last product falls below this multiple of the median.
    pub decay_factor: f64,
}

impl Default for ClassificationThresholds {
    fn default() -> Self {
        Self {
            growth_factor: 10.0,
            decay_factor: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TypeOneClassification {
    Bounded,
    TypeIConsistent,
    SuperTypeI,
}

/// Oversampled max of | |d(x)| - 1 |.
pub fn unit_length_deviation(d: &VectorField) -> f64 {
    let fine = d.physical_oversampled(2);
    let total = fine[0].len();
    let mut worst = 0.0f64;
    for p in 0..total {
        let mut m2 = 0.0;
        for comp in &fine {
            m2 += comp[p] * comp[p];
        }
        worst = worst.max((m2.sqrt() - 1.0).abs());
    }
    worst
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothingTable {
    pub order_l: usize,
    pub t: Vec<f64>,
    /// t^{l/2} |grad^l u|_inf
    pub rate_u: Vec<f64>,
    /// t^{l/2} |grad^{l+1} d|_inf
    pub rate_d: Vec<f64>,
    /// Set when a product grows by more than 10x between consecutive
    /// early-time nodes (first half of the span).
    pub flagged: bool,
}

/// Tabulate the smoothing products of the a-priori estimates: bounded data
/// keeps t^{l/2} grad^l norms bounded as t -> 0.
pub fn smoothing_rate_check(traj: &Trajectory, l: usize) -> Result<SmoothingTable> {
    let n = traj.grid().modes_per_axis();
    if 3 * (l + 1) > n {
        return Err(Error::Diagnostics(format!(
            "smoothing order {l} needs l+1 <= N/3 = {}",
            n / 3
        )));
    }
    let nodes = traj.nodes();
    let rows: Vec<(f64, f64, f64)> = nodes
        .par_iter()
        .map(|(t, s)| -> Result<(f64, f64, f64)> {
            let rel = t - traj.t_start();
            let w = rel.max(0.0).powf(l as f64 / 2.0);
            Ok((
                *t,
                w * s.u.iterated_gradient_sup(l)?,
                w * s.d.iterated_gradient_sup(l + 1)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let t_mid = 0.5 * (traj.t_start() + traj.t_end());
    let mut flagged = false;
    for w in rows.windows(2) {
        let (t0, u0, d0) = w[0];
        let (t1, u1, d1) = w[1];
        if t0 > traj.t_start() && t1 <= t_mid {
            if u0 > 1e-12 && u1 > 10.0 * u0 {
                flagged = true;
            }
            if d0 > 1e-12 && d1 > 10.0 * d0 {
                flagged = true;
            }
        }
    }
    Ok(SmoothingTable {
        order_l: l,
        t: rows.iter().map(|r| r.0).collect(),
        rate_u: rows.iter().map(|r| r.1).collect(),
        rate_d: rows.iter().map(|r| r.2).collect(),
        flagged,
    })
}

/// Samples of a (vector-valued) quantity on a uniform periodic grid,
/// restricted to a mask.
#[derive(Debug, Clone)]
pub struct MaskedSamples {
    pub dim: usize,
    pub pts_per_axis: usize,
    pub period: f64,
    pub mask: Vec<bool>,
    /// Full-grid component arrays; only masked entries are meaningful.
    pub values: Vec<Vec<f64>>,
}

impl MaskedSamples {
    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn mask_fraction(&self) -> f64 {
        self.masked_count() as f64 / self.mask.len() as f64
    }

    /// Full-grid samples of a field (every point masked).
    pub fn from_field(f: &VectorField, oversample: usize) -> Self {
        let grid = f.grid();
        let values = if oversample <= 1 {
            f.physical().to_vec()
        } else {
            f.physical_oversampled(oversample)
        };
        let pts = grid.modes_per_axis() * oversample.max(1);
        Self {
            dim: grid.dimension(),
            pts_per_axis: pts,
            period: grid.period(),
            mask: vec![true; values[0].len()],
            values,
        }
    }

    fn point(&self, flat: usize) -> [f64; 3] {
        let n = self.pts_per_axis;
        let h = self.period / n as f64;
        let mut x = [0.0f64; 3];
        let mut rest = flat;
        for a in (0..self.dim).rev() {
            x[a] = (rest % n) as f64 * h;
            rest /= n;
        }
        x
    }

    fn torus_distance(&self, i: usize, j: usize) -> f64 {
        let xi = self.point(i);
        let xj = self.point(j);
        let mut s = 0.0;
        for a in 0..self.dim {
            let mut d = (xi[a] - xj[a]).abs();
            if d > 0.5 * self.period {
                d = self.period - d;
            }
            s += d * d;
        }
        s.sqrt()
    }

    fn value_distance(&self, i: usize, j: usize) -> f64 {
        let mut s = 0.0;
        for comp in &self.values {
            let d = comp[i] - comp[j];
            s += d * d;
        }
        s.sqrt()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct ModulusTable {
    /// Upper edges of the logarithmic r bins.
    pub r: Vec<f64>,
    /// max |f(x) - f(y)| over masked pairs with |x - y| <= r.
    pub eta: Vec<f64>,
}

/// Masked point count below which the modulus uses exact pair enumeration.
pub const MODULUS_EXACT_LIMIT: usize = 4096;
/// Subsampled pair budget above the exact limit.
pub const MODULUS_SAMPLED_PAIRS: usize = 1_000_000;

/// Sampled modulus of continuity over logarithmic distance bins. Exact for
/// masked point counts <= 4096, seeded uniform pair subsampling above.
pub fn modulus_of_continuity(samples: &MaskedSamples, bins: usize, seed: u64) -> ModulusTable {
    let idx: Vec<usize> = samples
        .mask
        .iter()
        .enumerate()
        .filter_map(|(i, &m)| if m { Some(i) } else { None })
        .collect();
    if idx.is_empty() || bins == 0 {
        return ModulusTable::default();
    }
    let r_min = samples.period / samples.pts_per_axis as f64;
    let r_max = 0.5 * samples.period * (samples.dim as f64).sqrt();
    let ratio = (r_max / r_min).powf(1.0 / (bins.max(2) - 1) as f64);
    let edges: Vec<f64> = (0..bins).map(|i| r_min * ratio.powi(i as i32)).collect();
    let mut bin_max = vec![0.0f64; bins];

    let feed = |i: usize, j: usize, bin_max: &mut [f64]| {
        let d = samples.torus_distance(i, j);
        let v = samples.value_distance(i, j);
        let pos = edges
            .iter()
            .position(|&e| d <= e * (1.0 + 1e-12))
            .unwrap_or(bins - 1);
        if v > bin_max[pos] {
            bin_max[pos] = v;
        }
    };

    if idx.len() <= MODULUS_EXACT_LIMIT {
        for (pi, &i) in idx.iter().enumerate() {
            for &j in idx.iter().skip(pi + 1) {
                feed(i, j, &mut bin_max);
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..MODULUS_SAMPLED_PAIRS {
            let i = idx[rng.random_range(0..idx.len())];
            let j = idx[rng.random_range(0..idx.len())];
            if i != j {
                feed(i, j, &mut bin_max);
            }
        }
    }

    // cumulative max makes eta monotone non-decreasing by construction
    let mut eta = bin_max;
    for i in 1..bins {
        if eta[i] < eta[i - 1] {
            eta[i] = eta[i - 1];
        }
    }
    ModulusTable { r: edges, eta }
}

/// Vorticity-direction data at one instant.
#[derive(Debug)]
pub enum VorticityDirection {
    /// 3D: omega = curl u, the superlevel mask, and zeta = omega/|omega|
    /// sampled on the oversampled grid.
    ThreeD {
        omega: VectorField,
        zeta: MaskedSamples,
        max_abs_omega: f64,
    },
    /// The direction criteria are stated for three dimensions; 2D runs get
    /// scalar vorticity statistics instead.
    NotApplicable2d {
        omega_scalar: VectorField,
        max_abs_omega: f64,
        enstrophy: f64,
    },
}

/// Compute omega = curl u and, in 3D, zeta = omega/|omega| on the
/// superlevel set {|omega| > sigma} of the 2x oversampled grid.
pub fn vorticity_direction(u: &VectorField, sigma: f64) -> Result<VorticityDirection> {
    if !(sigma > 0.0) {
        return Err(Error::Diagnostics(format!(
            "vorticity threshold sigma must be positive, got {sigma}"
        )));
    }
    let omega = curl(u)?;
    let grid = u.grid();
    if grid.dimension() == 2 {
        let w = omega.physical();
        let max_abs = w[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cell = grid.spacing() * grid.spacing();
        let enstrophy = w[0].iter().map(|v| v * v).sum::<f64>() * cell;
        return Ok(VorticityDirection::NotApplicable2d {
            omega_scalar: omega,
            max_abs_omega: max_abs,
            enstrophy,
        });
    }
    let fine = omega.physical_oversampled(2);
    let total = fine[0].len();
    let mut mask = vec![false; total];
    let mut zeta = vec![vec![0.0; total]; 3];
    let mut max_abs = 0.0f64;
    for p in 0..total {
        let m2: f64 = fine.iter().map(|c| c[p] * c[p]).sum();
        let m = m2.sqrt();
        max_abs = max_abs.max(m);
        if m > sigma {
            mask[p] = true;
            for (z, c) in zeta.iter_mut().zip(&fine) {
                z[p] = c[p] / m;
            }
        }
    }
    Ok(VorticityDirection::ThreeD {
        omega,
        zeta: MaskedSamples {
            dim: 3,
            pts_per_axis: 2 * grid.modes_per_axis(),
            period: grid.period(),
            mask,
            values: zeta,
        },
        max_abs_omega: max_abs,
    })
}

/// max over samples of (t_blow - t)^{1/2} (|u|_inf + |grad d|_inf)(t), plus
/// a trend classification of the per-sample products.
pub fn type_one_rate(
    series: &[(f64, f64)],
    t_blow: f64,
    thresholds: &ClassificationThresholds,
) -> Result<(f64, TypeOneClassification)> {
    if series.is_empty() {
        return Err(Error::Diagnostics("empty norm series".into()));
    }
    if series.iter().any(|&(t, _)| t >= t_blow) {
        return Err(Error::Diagnostics(
            "all sample times must precede the hypothesized blow-up time".into(),
        ));
    }
    let products: Vec<f64> = series
        .iter()
        .map(|&(t, v)| (t_blow - t).sqrt() * v)
        .collect();
    let c_est = products.iter().fold(0.0f64, |m, &v| m.max(v));
    let mut sorted = products.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let last = *products.last().unwrap();
    let class = if median == 0.0 {
        TypeOneClassification::Bounded
    } else if last > thresholds.growth_factor * median {
        TypeOneClassification::SuperTypeI
    } else if last < thresholds.decay_factor * median {
        TypeOneClassification::Bounded
    } else {
        TypeOneClassification::TypeIConsistent
    };
    Ok((c_est, class))
}

/// L^b norm of the spectral gradient of a masked unit field: the field is
/// extended off-mask by the nearest masked value, differentiated spectrally,
/// and the norm is read on the one-cell-eroded mask interior.
pub fn masked_gradient_lb_norm(
    zeta: &[Vec<f64>],
    mask: &[bool],
    dim: usize,
    pts_per_axis: usize,
    period: f64,
    b: f64,
) -> f64 {
    let total = mask.len();
    debug_assert_eq!(total, pts_per_axis.pow(dim as u32));
    if mask.iter().all(|&m| !m) {
        return 0.0;
    }
    let extended: Vec<Vec<f64>> = zeta
        .iter()
        .map(|comp| nearest_mask_extension(comp, mask, dim, pts_per_axis))
        .collect();
    let eroded = erode_mask(mask, dim, pts_per_axis);
    let shape = Shape::new(dim, pts_per_axis);
    let scale = 2.0 * std::f64::consts::PI / period;
    let n = pts_per_axis;
    // |grad zeta|^2 accumulated over components and axes
    let mut grad2 = vec![0.0f64; total];
    for comp in &extended {
        let hat = fft::forward(comp, shape);
        for axis in 0..dim {
            let mut dhat = hat.clone();
            for (flat, v) in dhat.iter_mut().enumerate() {
                let j = axis_index(flat, axis, dim, n);
                if j == n / 2 {
                    *v = num_complex::Complex64::ZERO;
                } else {
                    let k = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
                    *v *= num_complex::Complex64::new(0.0, k as f64 * scale);
                }
            }
            let d = fft::inverse(&dhat, shape);
            for (g, v) in grad2.iter_mut().zip(&d) {
                *g += v * v;
            }
        }
    }
    let cell = (period / n as f64).powi(dim as i32);
    let sum: f64 = grad2
        .iter()
        .zip(&eroded)
        .filter(|(_, &m)| m)
        .map(|(g, _)| g.sqrt().powf(b))
        .sum();
    (sum * cell).powf(1.0 / b)
}

fn axis_index(flat: usize, axis: usize, dim: usize, n: usize) -> usize {
    let mut rest = flat;
    let mut idx = [0usize; 3];
    for a in (0..dim).rev() {
        idx[a] = rest % n;
        rest /= n;
    }
    idx[axis]
}

/// Fill off-mask cells with the value of the nearest masked cell
/// (multi-source BFS over face neighbors, periodic).
fn nearest_mask_extension(values: &[f64], mask: &[bool], dim: usize, n: usize) -> Vec<f64> {
    let total = values.len();
    let mut out = values.to_vec();
    let mut visited = mask.to_vec();
    let mut queue: VecDeque<usize> = (0..total).filter(|&p| mask[p]).collect();
    while let Some(p) = queue.pop_front() {
        for q in face_neighbors(p, dim, n) {
            if !visited[q] {
                visited[q] = true;
                out[q] = out[p];
                queue.push_back(q);
            }
        }
    }
    out
}

/// Remove mask cells with any off-mask face neighbor.
fn erode_mask(mask: &[bool], dim: usize, n: usize) -> Vec<bool> {
    mask.iter()
        .enumerate()
        .map(|(p, &m)| m && face_neighbors(p, dim, n).iter().all(|&q| mask[q]))
        .collect()
}

fn face_neighbors(flat: usize, dim: usize, n: usize) -> Vec<usize> {
    let mut idx = [0usize; 3];
    let mut rest = flat;
    for a in (0..dim).rev() {
        idx[a] = rest % n;
        rest /= n;
    }
    let mut out = Vec::with_capacity(2 * dim);
    for a in 0..dim {
        for delta in [n - 1, 1] {
            let mut nb = idx;
            nb[a] = (idx[a] + delta) % n;
            let mut f = 0usize;
            for (bb, &v) in nb.iter().enumerate().take(dim) {
                let _ = bb;
                f = f * n + v;
            }
            out.push(f);
        }
    }
    out
}

/// int |grad zeta|_{L^b(Omega_sigma(t))}^a dt over the trajectory span,
/// nodewise L^b quadrature in space and trapezoid in time.
pub fn direction_gradient_integral(traj: &Trajectory, cfg: &BlowupWindowConfig) -> Result<f64> {
    let grid = traj.grid();
    if grid.dimension() != 3 {
        return Err(Error::Diagnostics(
            "the direction-gradient integral is defined for 3d trajectories".into(),
        ));
    }
    let nodes = traj.nodes();
    let n = grid.modes_per_axis();
    let norms: Vec<(f64, f64)> = nodes
        .par_iter()
        .map(|(t, s)| -> Result<(f64, f64)> {
            let omega = curl(&s.u)?;
            let w = omega.physical();
            let total = w[0].len();
            let mut mask = vec![false; total];
            let mut zeta = vec![vec![0.0; total]; 3];
            let mut any = false;
            for p in 0..total {
                let m = (w[0][p] * w[0][p] + w[1][p] * w[1][p] + w[2][p] * w[2][p]).sqrt();
                if m > cfg.sigma {
                    mask[p] = true;
                    any = true;
                    for (z, c) in zeta.iter_mut().zip(w.iter()) {
                        z[p] = c[p] / m;
                    }
                }
            }
            let norm = if any {
                masked_gradient_lb_norm(&zeta, &mask, 3, n, grid.period(), cfg.b)
            } else {
                0.0
            };
            Ok((*t, norm))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(time_power_integral(&norms, cfg.a))
}

/// Trapezoid of norm(t)^a over the given (time, norm) samples.
pub fn time_power_integral(series: &[(f64, f64)], a: f64) -> f64 {
    let mut acc = 0.0;
    for w in series.windows(2) {
        let (t0, v0) = w[0];
        let (t1, v1) = w[1];
        acc += 0.5 * (t1 - t0) * (v0.powf(a) + v1.powf(a));
    }
    acc
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormSeries {
    pub t: Vec<f64>,
    pub sup_u: Vec<f64>,
    pub sup_grad_d: Vec<f64>,
    pub dev_unit: Vec<f64>,
    pub div_res: Vec<f64>,
}

impl NormSeries {
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let nodes = traj.nodes();
        let rows: Vec<(f64, f64, f64, f64, f64)> = nodes
            .par_iter()
            .map(|(t, s)| -> Result<(f64, f64, f64, f64, f64)> {
                Ok((
                    *t,
                    s.u.sup_norm(),
                    s.d.gradient_sup()?,
                    unit_length_deviation(&s.d),
                    s.u.divergence_residual(),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            t: rows.iter().map(|r| r.0).collect(),
            sup_u: rows.iter().map(|r| r.1).collect(),
            sup_grad_d: rows.iter().map(|r| r.2).collect(),
            dev_unit: rows.iter().map(|r| r.3).collect(),
            div_res: rows.iter().map(|r| r.4).collect(),
        })
    }

    /// (t, sup_u + sup_grad_d) pairs, the type-I quantity.
    pub fn combined(&self) -> Vec<(f64, f64)> {
        self.t
            .iter()
            .zip(self.sup_u.iter().zip(&self.sup_grad_d))
            .map(|(&t, (&a, &b))| (t, a + b))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModulusReport {
    pub node_times: Vec<f64>,
    pub r: Vec<f64>,
    /// One eta table per evaluated node.
    pub eta_per_node: Vec<Vec<f64>>,
    /// Running max over the evaluated nodes.
    pub eta_running_max: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TypeOneReport {
    pub t_blow: f64,
    pub c_est: f64,
    pub classification: TypeOneClassification,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VorticityReport {
    pub applicable: bool,
    pub sigma: f64,
    pub max_abs_omega_final: f64,
    pub mask_fraction_final: Option<f64>,
    pub enstrophy_final: Option<f64>,
    pub zeta_unit_deviation: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionIntegralReport {
    pub exponent_a: f64,
    pub exponent_b: f64,
    pub value: f64,
}

/// Everything the diagnostics layer knows about one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub series: NormSeries,
    pub smoothing: SmoothingTable,
    pub type_one: Option<TypeOneReport>,
    pub vorticity: VorticityReport,
    pub modulus_zeta: Option<ModulusReport>,
    pub modulus_d: ModulusReport,
    pub direction_integral: Option<DirectionIntegralReport>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiagnosticsConfig {
    pub window: BlowupWindowConfig,
    pub thresholds: ClassificationThresholds,
    pub eta_bins: usize,
    pub smoothing_order: usize,
    pub seed: u64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            window: BlowupWindowConfig::new(0.5, 4.0, 6.0, None).unwrap(),
            thresholds: ClassificationThresholds::default(),
            eta_bins: 16,
            smoothing_order: 1,
            seed: 0,
        }
    }
}

/// Which trajectory nodes get a modulus table: all when few, an even spread
/// plus the final node otherwise (pair enumeration is the expensive part).
fn eta_node_selection(count: usize) -> Vec<usize> {
    if count <= 16 {
        return (0..count).collect();
    }
    let mut sel: Vec<usize> = (0..16).map(|i| i * (count - 1) / 15).collect();
    sel.dedup();
    sel
}

/// Run every diagnostic over a trajectory.
pub fn build_report(traj: &Trajectory, cfg: &DiagnosticsConfig) -> Result<DiagnosticsReport> {
    let series = NormSeries::from_trajectory(traj)?;
    let smoothing = smoothing_rate_check(traj, cfg.smoothing_order)?;
    let type_one = match cfg.window.t_blow {
        Some(tb) => {
            let (c_est, classification) = type_one_rate(&series.combined(), tb, &cfg.thresholds)?;
            Some(TypeOneReport {
                t_blow: tb,
                c_est,
                classification,
            })
        }
        None => None,
    };

    let nodes = traj.nodes();
    let final_state = traj.last_state();
    let is_3d = traj.grid().dimension() == 3;

    // modulus of d over the full grid, per selected node
    let sel = eta_node_selection(nodes.len());
    let mut modulus_d = ModulusReport {
        node_times: Vec::new(),
        r: Vec::new(),
        eta_per_node: Vec::new(),
        eta_running_max: Vec::new(),
    };
    for &i in &sel {
        let (t, s) = nodes[i];
        let samples = MaskedSamples::from_field(&s.d, 1);
        let table = modulus_of_continuity(&samples, cfg.eta_bins, cfg.seed);
        if modulus_d.r.is_empty() {
            modulus_d.r = table.r.clone();
            modulus_d.eta_running_max = vec![0.0; table.eta.len()];
        }
        for (m, v) in modulus_d.eta_running_max.iter_mut().zip(&table.eta) {
            *m = m.max(*v);
        }
        modulus_d.node_times.push(t);
        modulus_d.eta_per_node.push(table.eta);
    }

    let (vorticity, modulus_zeta, direction_integral) = if is_3d {
        let vd = vorticity_direction(&final_state.u, cfg.window.sigma)?;
        let (max_abs, mask_fraction, zeta_dev, zeta_table) = match &vd {
            VorticityDirection::ThreeD {
                zeta, max_abs_omega, ..
            } => {
                let dev = zeta
                    .mask
                    .iter()
                    .enumerate()
                    .filter(|(_, &m)| m)
                    .map(|(p, _)| {
                        let m2: f64 = zeta.values.iter().map(|c| c[p] * c[p]).sum();
                        (m2.sqrt() - 1.0).abs()
                    })
                    .fold(0.0f64, f64::max);
                (
                    *max_abs_omega,
                    Some(zeta.mask_fraction()),
                    Some(dev),
                    Some(modulus_of_continuity(zeta, cfg.eta_bins, cfg.seed)),
                )
            }
            VorticityDirection::NotApplicable2d { max_abs_omega, .. } => {
                (*max_abs_omega, None, None, None)
            }
        };
        let report = VorticityReport {
            applicable: true,
            sigma: cfg.window.sigma,
            max_abs_omega_final: max_abs,
            mask_fraction_final: mask_fraction,
            enstrophy_final: None,
            zeta_unit_deviation: zeta_dev,
        };
        let mz = zeta_table.map(|t| ModulusReport {
            node_times: vec![final_state.t],
            r: t.r.clone(),
            eta_running_max: t.eta.clone(),
            eta_per_node: vec![t.eta],
        });
        let di = direction_gradient_integral(traj, &cfg.window)?;
        (
            report,
            mz,
            Some(DirectionIntegralReport {
                exponent_a: cfg.window.a,
                exponent_b: cfg.window.b,
                value: di,
            }),
        )
    } else {
        let vd = vorticity_direction(&final_state.u, cfg.window.sigma)?;
        let (max_abs, enstrophy) = match vd {
            VorticityDirection::NotApplicable2d {
                max_abs_omega,
                enstrophy,
                ..
            } => (max_abs_omega, Some(enstrophy)),
            _ => unreachable!("2d grids produce scalar vorticity"),
        };
        (
            VorticityReport {
                applicable: false,
                sigma: cfg.window.sigma,
                max_abs_omega_final: max_abs,
                mask_fraction_final: None,
                enstrophy_final: enstrophy,
                zeta_unit_deviation: None,
            },
            None,
            None,
        )
    };

    Ok(DiagnosticsReport {
        series,
        smoothing,
        type_one,
        vorticity,
        modulus_zeta,
        modulus_d,
        direction_integral,
    })
}
