//! Scenario configuration: a human-readable TOML file selecting the grid,
//! the initial data family, solver and diagnostics settings, and outputs.
//! Physical parameters carry their unit or meaning in the key name
//! (time_total_T, sigma_vorticity).
//!
//! Every named family is periodic by construction and snapshots must match
//! the scenario grid, so non-periodic profiles (the rigid rotation
//! u = (-x2, x1, 0) being the classic example) are not expressible here.

use crate::diagnostics::{BlowupWindowConfig, ClassificationThresholds, DiagnosticsConfig};
use crate::error::{Error, Result};
use crate::field::{FieldRole, VectorField};
use crate::grid::SpectralGrid;
use crate::nonlinearity::CubicProductRule;
use crate::solver::SolverConfig;
use crate::spectral::leray_project;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSection,
    pub initial: InitialSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(skip)]
    pub source_hash: u64,
    #[serde(skip)]
    pub source_text: String,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dimension: usize,
    pub modes_per_axis: usize,
    #[serde(default = "default_period")]
    pub period_length: f64,
}

fn default_period() -> f64 {
    2.0 * PI
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub velocity: VelocitySpec,
    pub director: DirectorSpec,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocitySpec {
    Zero,
    TaylorGreen {
        amplitude: f64,
    },
    SingleMode {
        amplitude: f64,
        mode_k: Vec<i64>,
        /// Coefficient direction; must be orthogonal to mode_k. A default
        /// is chosen when omitted.
        direction: Option<Vec<f64>>,
    },
    RandomBand {
        amplitude: f64,
        /// Largest retained |k_axis|; defaults to the resolved band N/3.
        band_max_k: Option<usize>,
    },
    Snapshot {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DirectorSpec {
    Constant {
        vector: [f64; 3],
        #[serde(default = "default_true")]
        claims_unit: bool,
    },
    /// d = (cos theta, sin theta, 0) with theta = amplitude sin(wave x_axis).
    Geodesic {
        theta_amplitude: f64,
        #[serde(default = "default_wave")]
        theta_wave: i64,
        /// 1-based spatial axis carrying the angle profile.
        #[serde(default = "default_axis")]
        theta_axis: usize,
        #[serde(default = "default_true")]
        claims_unit: bool,
    },
    Snapshot {
        path: PathBuf,
        #[serde(default = "default_true")]
        claims_unit: bool,
    },
}

fn default_true() -> bool {
    true
}

fn default_wave() -> i64 {
    1
}

fn default_axis() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(rename = "time_total_T")]
    pub time_total_t: f64,
    #[serde(default = "d_tol")]
    pub tolerance: f64,
    #[serde(default = "d_max_iter")]
    pub max_iterations: usize,
    #[serde(default = "d_quad")]
    pub quadrature_nodes: usize,
    #[serde(default = "d_cstar")]
    pub c_star: f64,
    #[serde(default = "d_safety")]
    pub safety_factor: f64,
    #[serde(default = "d_minw")]
    pub min_window: f64,
    #[serde(default = "d_cap")]
    pub t_max_cap: f64,
    #[serde(default)]
    pub renormalize_director: bool,
    #[serde(default)]
    pub dealias_cubic: CubicProductRule,
}

fn d_tol() -> f64 {
    1e-10
}
fn d_max_iter() -> usize {
    40
}
fn d_quad() -> usize {
    8
}
fn d_cstar() -> f64 {
    1.0
}
fn d_safety() -> f64 {
    0.5
}
fn d_minw() -> f64 {
    1e-6
}
fn d_cap() -> f64 {
    1e3
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    #[serde(default = "d_sigma")]
    pub sigma_vorticity: f64,
    #[serde(default = "d_a")]
    pub exponent_a: f64,
    #[serde(default = "d_b")]
    pub exponent_b: f64,
    pub t_blow: Option<f64>,
    #[serde(default = "d_bins")]
    pub eta_bins: usize,
    #[serde(default = "d_order")]
    pub smoothing_order_l: usize,
    #[serde(default = "d_growth")]
    pub growth_factor: f64,
    #[serde(default = "d_decay")]
    pub decay_factor: f64,
}

fn d_sigma() -> f64 {
    0.5
}
fn d_a() -> f64 {
    4.0
}
fn d_b() -> f64 {
    6.0
}
fn d_bins() -> usize {
    16
}
fn d_order() -> usize {
    1
}
fn d_growth() -> f64 {
    10.0
}
fn d_decay() -> f64 {
    0.1
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            sigma_vorticity: d_sigma(),
            exponent_a: d_a(),
            exponent_b: d_b(),
            t_blow: None,
            eta_bins: d_bins(),
            smoothing_order_l: d_order(),
            growth_factor: d_growth(),
            decay_factor: d_decay(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
    /// Times at which MFLD snapshots of (u, d) are written.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Persist every trajectory node (required by `rescale`).
    #[serde(default)]
    pub store_trajectory: bool,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

impl Scenario {
    /// Parse and validate a scenario document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut scenario: Scenario = toml::from_str(text)
            .map_err(|e| Error::Scenario(format!("parse failure: {e}")))?;
        scenario.source_hash = fnv1a(text.as_bytes());
        scenario.source_text = text.to_string();
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Scenario(format!("cannot read scenario {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    fn validate(&self) -> Result<()> {
        let g = &self.grid;
        // reuse the grid constructor's checks early for field-level messages
        SpectralGrid::new(g.dimension, g.modes_per_axis, g.period_length)
            .map_err(|e| Error::Scenario(format!("grid: {e}")))?;
        let s = &self.solver;
        if !(s.time_total_t.is_finite() && s.time_total_t > 0.0) {
            return Err(Error::Scenario(format!(
                "solver.time_total_T must be positive, got {}",
                s.time_total_t
            )));
        }
        if !(s.tolerance > 0.0) {
            return Err(Error::Scenario("solver.tolerance must be positive".into()));
        }
        if !(2..=24).contains(&s.quadrature_nodes) {
            // the Lagrange cardinals run through a monomial basis, which
            // stops being trustworthy well before 24 nodes
            return Err(Error::Scenario(
                "solver.quadrature_nodes must lie in 2..=24".into(),
            ));
        }
        if !(s.c_star > 0.0) {
            return Err(Error::Scenario("solver.c_star must be positive".into()));
        }
        if !(s.safety_factor > 0.0 && s.safety_factor <= 1.0) {
            return Err(Error::Scenario(
                "solver.safety_factor must lie in (0, 1]".into(),
            ));
        }
        let d = &self.diagnostics;
        BlowupWindowConfig::new(d.sigma_vorticity, d.exponent_a, d.exponent_b, d.t_blow)
            .map_err(|e| Error::Scenario(format!("diagnostics: {e}")))?;
        if let Some(tb) = d.t_blow {
            if tb <= s.time_total_t {
                return Err(Error::Scenario(format!(
                    "diagnostics.t_blow = {tb} must exceed solver.time_total_T = {}",
                    s.time_total_t
                )));
            }
        }
        if d.eta_bins > 1024 {
            return Err(Error::Scenario("diagnostics.eta_bins must be at most 1024".into()));
        }
        if 3 * (d.smoothing_order_l + 1) > self.grid.modes_per_axis {
            return Err(Error::Scenario(format!(
                "diagnostics.smoothing_order_l = {} needs l+1 <= N/3 = {}",
                d.smoothing_order_l,
                self.grid.modes_per_axis / 3
            )));
        }
        match &self.initial.velocity {
            VelocitySpec::TaylorGreen { amplitude }
            | VelocitySpec::RandomBand { amplitude, .. }
            | VelocitySpec::SingleMode { amplitude, .. }
                if !amplitude.is_finite() =>
            {
                return Err(Error::Scenario(
                    "initial.velocity.amplitude must be finite".into(),
                ));
            }
            _ => {}
        }
        if let VelocitySpec::SingleMode {
            mode_k, direction, ..
        } = &self.initial.velocity
        {
            if mode_k.len() != self.grid.dimension {
                return Err(Error::Scenario(format!(
                    "initial.velocity.mode_k needs {} entries",
                    self.grid.dimension
                )));
            }
            if mode_k.iter().all(|&k| k == 0) {
                return Err(Error::Scenario(
                    "initial.velocity.mode_k must be nonzero".into(),
                ));
            }
            if mode_k
                .iter()
                .any(|&k| 2 * k.unsigned_abs() as usize >= self.grid.modes_per_axis)
            {
                return Err(Error::Scenario(
                    "initial.velocity.mode_k exceeds the grid band".into(),
                ));
            }
            if let Some(dir) = direction {
                if dir.len() != self.grid.dimension {
                    return Err(Error::Scenario(format!(
                        "initial.velocity.direction needs {} entries",
                        self.grid.dimension
                    )));
                }
                let dot: f64 = dir
                    .iter()
                    .zip(mode_k)
                    .map(|(e, &k)| e * k as f64)
                    .sum();
                if dot.abs() > 1e-12 {
                    return Err(Error::Scenario(
                        "initial.velocity.direction must be orthogonal to mode_k".into(),
                    ));
                }
            }
        }
        match &self.initial.director {
            DirectorSpec::Constant {
                vector,
                claims_unit,
            } => {
                let norm = (vector[0] * vector[0] + vector[1] * vector[1]
                    + vector[2] * vector[2])
                    .sqrt();
                if *claims_unit && (norm - 1.0).abs() > 1e-8 {
                    return Err(Error::Scenario(format!(
                        "initial.director.vector claims unit length but |d0| = {norm}"
                    )));
                }
                if norm == 0.0 {
                    return Err(Error::Scenario(
                        "initial.director.vector must be nonzero".into(),
                    ));
                }
            }
            DirectorSpec::Geodesic { theta_axis, .. } => {
                if *theta_axis == 0 || *theta_axis > self.grid.dimension {
                    return Err(Error::Scenario(format!(
                        "initial.director.theta_axis must be in 1..={}",
                        self.grid.dimension
                    )));
                }
            }
            DirectorSpec::Snapshot { .. } => {}
        }
        for &t in &self.output.snapshot_times {
            if !(0.0..=s.time_total_t * (1.0 + 1e-12)).contains(&t) {
                return Err(Error::Scenario(format!(
                    "output.snapshot_times entry {t} lies outside [0, {}]",
                    s.time_total_t
                )));
            }
        }
        if !self.output.snapshot_times.is_empty()
            && (self.grid.period_length - 2.0 * PI).abs() > 1e-12
        {
            return Err(Error::Scenario(
                "output.snapshot_times needs the standard period (the snapshot \
                 format does not carry one); use store_trajectory instead"
                    .into(),
            ));
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Arc<SpectralGrid>> {
        SpectralGrid::new(
            self.grid.dimension,
            self.grid.modes_per_axis,
            self.grid.period_length,
        )
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            tol: s.tolerance,
            max_iter: s.max_iterations,
            quad_nodes: s.quadrature_nodes,
            c_star: s.c_star,
            safety_factor: s.safety_factor,
            min_window: s.min_window,
            t_max_cap: s.t_max_cap,
            renormalize_director: s.renormalize_director,
            cubic_rule: s.dealias_cubic,
        }
    }

    pub fn diagnostics_config(&self) -> Result<DiagnosticsConfig> {
        let d = &self.diagnostics;
        Ok(DiagnosticsConfig {
            window: BlowupWindowConfig::new(
                d.sigma_vorticity,
                d.exponent_a,
                d.exponent_b,
                d.t_blow,
            )?,
            thresholds: ClassificationThresholds {
                growth_factor: d.growth_factor,
                decay_factor: d.decay_factor,
            },
            eta_bins: d.eta_bins,
            smoothing_order: d.smoothing_order_l,
            seed: self.seed,
        })
    }

    /// Synthesize (u0, d0) on the scenario grid.
    pub fn build_initial(&self, grid: &Arc<SpectralGrid>) -> Result<(VectorField, VectorField)> {
        let u0 = build_velocity(&self.initial.velocity, grid, self.seed)?;
        let d0 = build_director(&self.initial.director, grid)?;
        // the velocity constructors guarantee div-free data; double-check
        let res = u0.divergence_residual();
        if res > 1e-10 * u0.sup_norm().max(1e-30) && res > 1e-13 {
            return Err(Error::Scenario(format!(
                "initial velocity is not divergence-free (residual {res:.3e})"
            )));
        }
        if self.claims_unit_director() {
            let dev = crate::diagnostics::unit_length_deviation(&d0);
            if dev > 1e-8 {
                return Err(Error::Scenario(format!(
                    "director claims unit length but | |d0| - 1 | = {dev:.3e}"
                )));
            }
        }
        Ok((u0, d0))
    }

    fn claims_unit_director(&self) -> bool {
        match &self.initial.director {
            DirectorSpec::Constant { claims_unit, .. }
            | DirectorSpec::Geodesic { claims_unit, .. }
            | DirectorSpec::Snapshot { claims_unit, .. } => *claims_unit,
        }
    }
}

/// Seeded band-limited divergence-free noise, sup-normalized to `amplitude`.
/// The scenario family `random_band` routes here; tests reuse it directly.
pub fn random_band_velocity(
    grid: &Arc<SpectralGrid>,
    amplitude: f64,
    band_max_k: Option<usize>,
    seed: u64,
) -> Result<VectorField> {
    build_velocity(
        &VelocitySpec::RandomBand {
            amplitude,
            band_max_k,
        },
        grid,
        seed,
    )
}

fn build_velocity(
    spec: &VelocitySpec,
    grid: &Arc<SpectralGrid>,
    seed: u64,
) -> Result<VectorField> {
    let dim = grid.dimension();
    match spec {
        VelocitySpec::Zero => Ok(VectorField::zero(grid.clone(), FieldRole::Velocity)),
        VelocitySpec::TaylorGreen { amplitude } => {
            let a = *amplitude;
            if dim == 2 {
                VectorField::from_point_fn(grid.clone(), FieldRole::Velocity, 2, |x| {
                    vec![a * x[0].cos() * x[1].sin(), -a * x[0].sin() * x[1].cos()]
                })
            } else {
                VectorField::from_point_fn(grid.clone(), FieldRole::Velocity, 3, |x| {
                    vec![
                        a * x[0].sin() * x[1].cos() * x[2].cos(),
                        -a * x[0].cos() * x[1].sin() * x[2].cos(),
                        0.0,
                    ]
                })
            }
        }
        VelocitySpec::SingleMode {
            amplitude,
            mode_k,
            direction,
        } => {
            let e = match direction {
                Some(d) => d.clone(),
                None => default_orthogonal(mode_k),
            };
            let norm: f64 = e.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::Scenario("single-mode direction is zero".into()));
            }
            let a = amplitude / norm;
            let k: Vec<f64> = mode_k
                .iter()
                .map(|&v| v as f64 * grid.wavenumber_scale())
                .collect();
            VectorField::from_point_fn(grid.clone(), FieldRole::Velocity, dim, |x| {
                let phase: f64 = k.iter().zip(x.iter()).map(|(kk, xx)| kk * xx).sum();
                e.iter().map(|&ec| a * ec * phase.cos()).collect()
            })
        }
        VelocitySpec::RandomBand {
            amplitude,
            band_max_k,
        } => {
            let band = band_max_k.unwrap_or(grid.modes_per_axis() / 3);
            if 3 * band > grid.modes_per_axis() {
                return Err(Error::Scenario(format!(
                    "random band {band} exceeds the resolved band N/3 = {}",
                    grid.modes_per_axis() / 3
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise = VectorField::from_point_fn(grid.clone(), FieldRole::Generic, dim, |_| {
                (0..dim)
                    .map(|_| rng.sample::<f64, _>(rand::distr::StandardUniform) - 0.5)
                    .collect()
            })?;
            // band-limit, remove the mean, project to divergence-free
            let mut banded = noise;
            {
                let n = grid.modes_per_axis() as i64;
                let comps = banded.components_mut();
                for comp in comps.iter_mut() {
                    for (flat, v) in comp.iter_mut().enumerate() {
                        let k = grid.k_int_vec(flat);
                        let out_of_band =
                            (0..dim).any(|a| k[a].abs() > band as i64 || 2 * k[a] == -n);
                        let is_mean = (0..dim).all(|a| k[a] == 0);
                        if out_of_band || is_mean {
                            *v = num_complex::Complex64::ZERO;
                        }
                    }
                }
            }
            let projected = leray_project(&banded)?;
            let sup = projected.sup_norm();
            if sup == 0.0 {
                return Err(Error::Scenario("random band produced a null field".into()));
            }
            Ok(projected
                .scale(amplitude / sup)
                .with_role(FieldRole::Velocity)?)
        }
        VelocitySpec::Snapshot { path } => {
            let f = crate::snapshot::read_file(path)?;
            if !f.grid().compatible(grid) {
                return Err(Error::Scenario(format!(
                    "snapshot {} grid does not match the scenario grid",
                    path.display()
                )));
            }
            if f.n_comps() != dim {
                return Err(Error::Scenario(
                    "velocity snapshot has the wrong component count".into(),
                ));
            }
            f.with_role(FieldRole::Velocity)
        }
    }
}

fn default_orthogonal(mode_k: &[i64]) -> Vec<f64> {
    // pick the axis least aligned with k, Gram-Schmidt against k
    let dim = mode_k.len();
    let k: Vec<f64> = mode_k.iter().map(|&v| v as f64).collect();
    let k2: f64 = k.iter().map(|v| v * v).sum();
    let axis = (0..dim)
        .min_by(|&a, &b| k[a].abs().partial_cmp(&k[b].abs()).unwrap())
        .unwrap();
    let mut e = vec![0.0; dim];
    e[axis] = 1.0;
    for i in 0..dim {
        e[i] -= k[i] * k[axis] / k2;
    }
    e
}

fn build_director(spec: &DirectorSpec, grid: &Arc<SpectralGrid>) -> Result<VectorField> {
    match spec {
        DirectorSpec::Constant { vector, .. } => {
            let v = *vector;
            VectorField::from_point_fn(grid.clone(), FieldRole::Director, 3, |_| v.to_vec())
        }
        DirectorSpec::Geodesic {
            theta_amplitude,
            theta_wave,
            theta_axis,
            ..
        } => {
            let a = *theta_amplitude;
            let w = *theta_wave as f64 * grid.wavenumber_scale();
            let axis = theta_axis - 1;
            VectorField::from_point_fn(grid.clone(), FieldRole::Director, 3, |x| {
                let theta = a * (w * x[axis]).sin();
                vec![theta.cos(), theta.sin(), 0.0]
            })
        }
        DirectorSpec::Snapshot { path, .. } => {
            let f = crate::snapshot::read_file(path)?;
            if !f.grid().compatible(grid) {
                return Err(Error::Scenario(format!(
                    "snapshot {} grid does not match the scenario grid",
                    path.display()
                )));
            }
            f.with_role(FieldRole::Director)
        }
    }
}

/// Convenience used by the CLI and tests.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    Scenario::load(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TG: &str = r#"
seed = 7

[grid]
dimension = 2
modes_per_axis = 64

[initial.velocity]
family = "taylor_green"
amplitude = 1.0

[initial.director]
family = "constant"
vector = [0.0, 0.0, 1.0]

[solver]
time_total_T = 1.0
"#;

    #[test]
    fn taylor_green_scenario_has_unit_sup() {
        let sc = Scenario::from_toml_str(TG).unwrap();
        let grid = sc.build_grid().unwrap();
        let (u0, d0) = sc.build_initial(&grid).unwrap();
        assert!((u0.sup_norm() - 1.0).abs() < 1e-9);
        assert!(crate::diagnostics::unit_length_deviation(&d0) < 1e-12);
    }

    #[test]
    fn non_unit_claim_rejected() {
        let text = TG.replace("[0.0, 0.0, 1.0]", "[0.0, 0.0, 1.1]");
        let err = Scenario::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("unit"), "{err}");
    }

    #[test]
    fn non_unit_without_claim_allowed() {
        let text = TG.replace(
            "vector = [0.0, 0.0, 1.0]",
            "vector = [0.0, 0.0, 1.1]\nclaims_unit = false",
        );
        let sc = Scenario::from_toml_str(&text).unwrap();
        let grid = sc.build_grid().unwrap();
        assert!(sc.build_initial(&grid).is_ok());
    }

    #[test]
    fn missing_file_is_not_found() {
        let err = load_scenario(Path::new("/nonexistent/path.toml")).unwrap_err();
        assert!(err.to_string().contains("cannot read"));
    }

    #[test]
    fn bad_exponents_rejected_on_load() {
        let text = format!("{TG}\n[diagnostics]\nexponent_a = 2.0\nexponent_b = 6.0\n");
        let err = Scenario::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("exponent"), "{err}");
    }

    #[test]
    fn odd_resolution_rejected() {
        let text = TG.replace("modes_per_axis = 64", "modes_per_axis = 31");
        assert!(Scenario::from_toml_str(&text).is_err());
    }

    #[test]
    fn random_band_is_divergence_free_and_normalized() {
        let text = TG.replace(
            "family = \"taylor_green\"\namplitude = 1.0",
            "family = \"random_band\"\namplitude = 0.7",
        );
        let sc = Scenario::from_toml_str(&text).unwrap();
        let grid = sc.build_grid().unwrap();
        let (u0, _) = sc.build_initial(&grid).unwrap();
        assert!((u0.sup_norm() - 0.7).abs() < 1e-9);
        assert!(u0.divergence_residual() < 1e-10);
        // determinism
        let (u1, _) = sc.build_initial(&grid).unwrap();
        assert!(u0.sub(&u1).unwrap().spectral_sup() == 0.0);
    }

    #[test]
    fn single_mode_orthogonality_enforced() {
        let text = TG.replace(
            "family = \"taylor_green\"\namplitude = 1.0",
            "family = \"single_mode\"\namplitude = 1.0\nmode_k = [0, 1]\ndirection = [0.0, 1.0]",
        );
        assert!(Scenario::from_toml_str(&text).is_err());
        let ok = TG.replace(
            "family = \"taylor_green\"\namplitude = 1.0",
            "family = \"single_mode\"\namplitude = 1.0\nmode_k = [0, 1]\ndirection = [1.0, 0.0]",
        );
        let sc = Scenario::from_toml_str(&ok).unwrap();
        let grid = sc.build_grid().unwrap();
        let (u0, _) = sc.build_initial(&grid).unwrap();
        assert!(u0.divergence_residual() < 1e-12);
    }

    #[test]
    fn geodesic_axis_bounds_checked() {
        let text = TG.replace(
            "family = \"constant\"\nvector = [0.0, 0.0, 1.0]",
            "family = \"geodesic\"\ntheta_amplitude = 0.1\ntheta_axis = 3",
        );
        assert!(Scenario::from_toml_str(&text).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{TG}\nbogus_key = 1\n");
        assert!(Scenario::from_toml_str(&text).is_err());
    }

    #[test]
    fn snapshot_times_must_lie_in_horizon() {
        let text = format!("{TG}\n[output]\nsnapshot_times = [0.0, 2.0]\n");
        assert!(Scenario::from_toml_str(&text).is_err());
    }

    #[test]
    fn numeric_bounds_validated() {
        let text = TG.replace("time_total_T = 1.0", "time_total_T = 1.0\nquadrature_nodes = 40");
        assert!(Scenario::from_toml_str(&text).is_err());
        let text = format!("{TG}\n[diagnostics]\nt_blow = 0.5\n");
        assert!(Scenario::from_toml_str(&text).is_err(), "t_blow inside horizon");
        let text = format!("{TG}\n[diagnostics]\nt_blow = 2.0\n");
        assert!(Scenario::from_toml_str(&text).is_ok(), "t_blow beyond horizon");
        let text = format!("{TG}\n[diagnostics]\nsmoothing_order_l = 30\n");
        assert!(Scenario::from_toml_str(&text).is_err());
    }
}
