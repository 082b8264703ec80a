//! The blow-up zoom transform and a mild-equation residual verifier.
//!
//! The zoom u_k(x, t) = M^{-1} u(x_k + x/M, t_k + t/M^2),
//! d_k(x, t) = d(x_k + x/M, t_k + t/M^2) is realized exactly in spectral
//! space: the shifted, dilated field keeps the same integer mode layout on
//! a torus of period M L, with coefficients rephased by exp(i k . x_k).
//! Times rescale by M^2. Integer M maps period to period; non-integer M is
//! allowed but flagged aperiodic, since the rescaled window then only
//! represents the zoomed dynamics locally.

use crate::error::{Error, Result};
use crate::field::{FieldRole, StatePair, VectorField};
use crate::grid::SpectralGrid;
use crate::nonlinearity::CubicProductRule;
use crate::solver::{duhamel_map_with, state_distance, Segment, Trajectory};
use num_complex::Complex64;
use std::sync::Arc;

#[derive(Debug, Clone, Copy)]
pub struct RescaleParams {
    /// Zoom center x_k, reduced into the fundamental domain.
    pub center: [f64; 3],
    /// Time origin t_k of the parabolic rescaling.
    pub t_k: f64,
    /// Spatial magnification M > 0.
    pub m: f64,
    /// Optional output window in rescaled time; when absent every source
    /// node maps through.
    pub window: Option<(f64, f64)>,
}

impl RescaleParams {
    pub fn new(center: [f64; 3], t_k: f64, m: f64) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::Rescale(format!("scale M must be positive, got {m}")));
        }
        if !t_k.is_finite() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Rescale("rescale center must be finite".into()));
        }
        Ok(Self {
            center,
            t_k,
            m,
            window: None,
        })
    }

    pub fn with_window(mut self, t0: f64, t1: f64) -> Result<Self> {
        if !(t1 > t0) {
            return Err(Error::Rescale("rescale window must be increasing".into()));
        }
        self.window = Some((t0, t1));
        Ok(self)
    }

    /// Parameters of the composite zoom: applying `self` first, `second`
    /// on the result.
    pub fn compose(&self, second: &RescaleParams) -> Result<RescaleParams> {
        let mut center = self.center;
        for (c, s) in center.iter_mut().zip(second.center.iter()) {
            *c += s / self.m;
        }
        RescaleParams::new(
            center,
            self.t_k + second.t_k / (self.m * self.m),
            self.m * second.m,
        )
    }

    fn is_integer_scale(&self) -> bool {
        (self.m - self.m.round()).abs() < 1e-9 && self.m.round() >= 1.0
    }
}

#[derive(Debug)]
pub struct Zoomed {
    pub trajectory: Trajectory,
    /// Set for non-integer M: the rescaled window is only locally valid on
    /// the torus; diagnostics should restrict to the central half of the
    /// domain.
    pub aperiodic_local: bool,
}

fn zoom_field(
    f: &VectorField,
    source: &SpectralGrid,
    new_grid: &Arc<SpectralGrid>,
    center: &[f64; 3],
    amplitude: f64,
) -> VectorField {
    let scale = source.wavenumber_scale();
    let comps = f
        .components()
        .iter()
        .map(|c| {
            c.iter()
                .enumerate()
                .map(|(flat, v)| {
                    let k = source.k_int_vec(flat);
                    let mut phase = 0.0;
                    for a in 0..source.dimension() {
                        phase += k[a] as f64 * scale * center[a];
                    }
                    v * Complex64::from_polar(1.0, phase) * amplitude
                })
                .collect()
        })
        .collect();
    VectorField::from_spectral(new_grid.clone(), f.role(), comps).expect("zoom keeps shape")
}

fn zoom_state(
    s: &StatePair,
    source: &SpectralGrid,
    new_grid: &Arc<SpectralGrid>,
    p: &RescaleParams,
    t_out: f64,
) -> Result<StatePair> {
    let u = zoom_field(&s.u, source, new_grid, &p.center, 1.0 / p.m)
        .with_role(FieldRole::Velocity)?;
    let d = zoom_field(&s.d, source, new_grid, &p.center, 1.0).with_role(FieldRole::Director)?;
    StatePair::new(u, d, t_out)
}

/// Apply the parabolic zoom to a trajectory.
pub fn zoom(traj: &Trajectory, p: &RescaleParams) -> Result<Zoomed> {
    let source = traj.grid().clone();
    let dim = source.dimension();
    let mut center = p.center;
    for c in center.iter_mut().take(dim) {
        *c = c.rem_euclid(source.period());
    }
    let p = RescaleParams { center, ..*p };
    let new_grid = SpectralGrid::new(
        dim,
        source.modes_per_axis(),
        source.period() * p.m,
    )?;
    let m2 = p.m * p.m;

    let trajectory = match p.window {
        None => {
            // every source node maps through the affine time change
            let segments: Vec<Segment> = traj
                .segments()
                .iter()
                .map(|seg| -> Result<Segment> {
                    let times: Vec<f64> =
                        seg.times().iter().map(|t| (t - p.t_k) * m2).collect();
                    let states = seg
                        .states()
                        .iter()
                        .zip(&times)
                        .map(|(s, &t)| zoom_state(s, &source, &new_grid, &p, t))
                        .collect::<Result<Vec<_>>>()?;
                    Segment::new(times, states)
                })
                .collect::<Result<Vec<_>>>()?;
            Trajectory::from_segments(segments)?
        }
        Some((t0, t1)) => {
            // explicit output window: pull rescaled times back and
            // interpolate the source polynomial representation
            let q = traj.segments()[0].times().len();
            let times: Vec<f64> = crate::phi::lobatto_nodes(q)
                .iter()
                .map(|th| t0 + th * (t1 - t0))
                .collect();
            let span = (traj.t_start(), traj.t_end());
            let states = times
                .iter()
                .map(|&tau| -> Result<StatePair> {
                    let t_src = p.t_k + tau / m2;
                    if t_src < span.0 - 1e-12 || t_src > span.1 + 1e-12 {
                        return Err(Error::Rescale(format!(
                            "rescaled time {tau} pulls back to {t_src}, outside the source window [{}, {}]",
                            span.0, span.1
                        )));
                    }
                    let s = traj.sample(t_src)?;
                    zoom_state(&s, &source, &new_grid, &p, tau)
                })
                .collect::<Result<Vec<_>>>()?;
            Trajectory::single(times, states)?
        }
    };

    Ok(Zoomed {
        trajectory,
        aperiodic_local: !p.is_integer_scale(),
    })
}

/// Evaluate both Duhamel identities from each window start and return the
/// largest node-wise mismatch, sup-norm for u plus W^{1,inf} for d.
pub fn residual_check(traj: &Trajectory) -> Result<f64> {
    residual_check_with(traj, CubicProductRule::Refined)
}

pub fn residual_check_with(traj: &Trajectory, rule: CubicProductRule) -> Result<f64> {
    let mut worst = 0.0f64;
    for seg in traj.segments() {
        if seg.times().len() < 2 {
            return Err(Error::Rescale("residual check needs at least 2 nodes".into()));
        }
        let single = Trajectory::from_segments(vec![seg.clone()])?;
        let first = &seg.states()[0];
        let image = duhamel_map_with(&first.u, &first.d, &single, rule)?;
        for (orig, mapped) in seg.states().iter().zip(image.nodes()) {
            worst = worst.max(state_distance(orig, mapped.1)?);
        }
    }
    Ok(worst)
}

/// The automatic zoom-center helper: location and time of the largest
/// |u| + |grad d| at the latest node.
pub fn suggest_zoom_center(traj: &Trajectory) -> Result<([f64; 3], f64)> {
    let s = traj.last_state();
    let grid = s.u.grid();
    let dim = grid.dimension();
    let u_fine = s.u.physical_oversampled(2);
    let total = u_fine[0].len();
    let mut score = vec![0.0f64; total];
    for comp in &u_fine {
        for (sc, v) in score.iter_mut().zip(comp) {
            *sc += v * v;
        }
    }
    let mut score: Vec<f64> = score.into_iter().map(f64::sqrt).collect();
    let mut grad2 = vec![0.0f64; total];
    for a in 0..dim {
        let mut beta = vec![0usize; dim];
        beta[a] = 1;
        let dd = s.d.derivative(&beta).physical_oversampled(2);
        for comp in &dd {
            for (g, v) in grad2.iter_mut().zip(comp) {
                *g += v * v;
            }
        }
    }
    for (sc, g) in score.iter_mut().zip(&grad2) {
        *sc += g.sqrt();
    }
    let (best, _) = score
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    // decode the oversampled flat index
    let n_fine = 2 * grid.modes_per_axis();
    let h = grid.period() / n_fine as f64;
    let mut x = [0.0f64; 3];
    let mut rest = best;
    for a in (0..dim).rev() {
        x[a] = (rest % n_fine) as f64 * h;
        rest /= n_fine;
    }
    Ok((x, s.t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::phi::lobatto_nodes;
    use crate::solver::{picard_solve, SolverConfig};
    use std::f64::consts::PI;

    fn taylor_green_traj() -> Trajectory {
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        let u0 = VectorField::from_point_fn(g.clone(), FieldRole::Velocity, 2, |x| {
            vec![x[0].cos() * x[1].sin(), -x[0].sin() * x[1].cos()]
        })
        .unwrap();
        let d0 = VectorField::from_point_fn(g, FieldRole::Director, 3, |_| vec![0.0, 0.0, 1.0])
            .unwrap();
        picard_solve(&u0, &d0, 0.1, &SolverConfig::default()).unwrap().0
    }

    #[test]
    fn identity_zoom_on_node() {
        let traj = taylor_green_traj();
        let p = RescaleParams::new([0.0; 3], 0.0, 1.0).unwrap();
        let z = zoom(&traj, &p).unwrap();
        assert!(!z.aperiodic_local);
        let a = traj.nodes();
        let b = z.trajectory.nodes();
        for ((ta, sa), (tb, sb)) in a.iter().zip(&b) {
            assert!((ta - tb).abs() < 1e-12);
            assert!(sa.u.sub(&sb.u).unwrap().spectral_sup() < 1e-14);
        }
    }

    #[test]
    fn sup_norm_scales_inversely_with_m() {
        let traj = taylor_green_traj();
        for m in [2.0f64, 4.0] {
            let p = RescaleParams::new([0.0; 3], 0.0, m).unwrap();
            let z = zoom(&traj, &p).unwrap();
            for ((_, sa), (_, sb)) in traj.nodes().iter().zip(&z.trajectory.nodes()) {
                let ratio = sa.u.sup_norm() / sb.u.sup_norm();
                assert!((ratio - m).abs() < 1e-8, "m={m} ratio={ratio}");
            }
        }
    }

    #[test]
    fn times_scale_parabolically() {
        let traj = taylor_green_traj();
        let p = RescaleParams::new([0.3, 0.0, 0.0], 0.05, 3.0).unwrap();
        let z = zoom(&traj, &p).unwrap();
        for ((ta, _), (tb, _)) in traj.nodes().iter().zip(&z.trajectory.nodes()) {
            assert!(((ta - 0.05) * 9.0 - tb).abs() < 1e-12);
        }
    }

    #[test]
    fn non_integer_scale_is_flagged() {
        let traj = taylor_green_traj();
        let p = RescaleParams::new([0.0; 3], 0.0, 1.5).unwrap();
        assert!(zoom(&traj, &p).unwrap().aperiodic_local);
    }

    #[test]
    fn zoom_composition_matches_composed_params() {
        let traj = taylor_green_traj();
        let p1 = RescaleParams::new([0.4, 0.1, 0.0], 0.02, 2.0).unwrap();
        let p2 = RescaleParams::new([0.2, 0.7, 0.0], 0.04, 2.0).unwrap();
        let z1 = zoom(&traj, &p1).unwrap();
        let z12 = zoom(&z1.trajectory, &p2).unwrap();
        let pc = p1.compose(&p2).unwrap();
        let zc = zoom(&traj, &pc).unwrap();
        for ((ta, sa), (tb, sb)) in z12.trajectory.nodes().iter().zip(&zc.trajectory.nodes()) {
            assert!((ta - tb).abs() < 1e-9 * (1.0 + ta.abs()));
            let du = sa.u.sub(&sb.u).unwrap().spectral_sup();
            let dd = sa.d.sub(&sb.d).unwrap().spectral_sup();
            assert!(du < 1e-8 && dd < 1e-8, "du={du} dd={dd}");
        }
    }

    #[test]
    fn explicit_window_exits_source_is_rejected() {
        let traj = taylor_green_traj();
        let p = RescaleParams::new([0.0; 3], 0.0, 2.0)
            .unwrap()
            .with_window(0.0, 1.0)
            .unwrap();
        // window [0, 1] in rescaled time pulls back to [0, 0.25] > 0.1
        assert!(zoom(&traj, &p).is_err());
    }

    #[test]
    fn constant_trajectory_residual_vanishes() {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        let u = VectorField::zero(g.clone(), FieldRole::Velocity);
        let d = VectorField::from_point_fn(g, FieldRole::Director, 3, |_| vec![0.0, 0.0, 1.0])
            .unwrap();
        let times: Vec<f64> = lobatto_nodes(4).iter().map(|t| t * 0.2).collect();
        let states: Vec<StatePair> = times
            .iter()
            .map(|&t| StatePair::new(u.clone(), d.clone(), t).unwrap())
            .collect();
        let traj = Trajectory::single(times, states).unwrap();
        assert!(residual_check(&traj).unwrap() < 1e-12);
    }

    #[test]
    fn converged_solve_has_small_residual() {
        let traj = taylor_green_traj();
        let r = residual_check(&traj).unwrap();
        assert!(r <= 10.0 * 1e-10, "residual {r}");
    }

    #[test]
    fn perturbed_trajectory_has_visible_residual() {
        let traj = taylor_green_traj();
        // bump one interior node's u by 1e-3 in its first component mean mode
        let seg = &traj.segments()[0];
        let mut states: Vec<StatePair> = seg.states().to_vec();
        let mid = states.len() / 2;
        let mut comps: Vec<Vec<num_complex::Complex64>> = states[mid].u.components().to_vec();
        comps[0][0] += num_complex::Complex64::new(1e-3, 0.0);
        states[mid] = StatePair::new(
            VectorField::from_spectral(traj.grid().clone(), FieldRole::Velocity, comps).unwrap(),
            states[mid].d.clone(),
            states[mid].t,
        )
        .unwrap();
        let perturbed = Trajectory::single(seg.times().to_vec(), states).unwrap();
        let r = residual_check(&perturbed).unwrap();
        assert!(r >= 1e-4, "residual {r}");
    }

    #[test]
    fn zoom_center_suggestion_finds_peak() {
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        // |u| peaks where cos^2 x1 sin^2 x2 + ... = 1
        let traj = taylor_green_traj();
        let (x, t) = suggest_zoom_center(&traj).unwrap();
        assert!((t - 0.1).abs() < 1e-12);
        // at the suggested point the speed equals the sup-norm
        let s = traj.last_state();
        let speed = {
            let phys = |f: &VectorField| f.physical_oversampled(2);
            let comps = phys(&s.u);
            let n_fine = 64;
            let h = 2.0 * PI / n_fine as f64;
            let i = (x[0] / h).round() as usize % n_fine;
            let j = (x[1] / h).round() as usize % n_fine;
            let p = i * n_fine + j;
            (comps[0][p] * comps[0][p] + comps[1][p] * comps[1][p]).sqrt()
        };
        assert!((speed - s.u.sup_norm()).abs() < 1e-9);
        let _ = g;
    }
}
