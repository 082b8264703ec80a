//! Shared fixtures and independent oracles for the integration suites.
//! Everything here stays off the production code paths it checks: finite
//! differences for spectral derivatives, dense trapezoid sums for the
//! phi-function quadrature, and a classical RK4 timestepper for the
//! director heat flow.

use mildflow::field::{FieldRole, VectorField};
use mildflow::grid::SpectralGrid;
use mildflow::{make_grid, Trajectory};
use std::f64::consts::PI;
use std::sync::Arc;

pub fn grid(dim: usize, n: usize) -> Arc<SpectralGrid> {
    make_grid(dim, n, 2.0 * PI).unwrap()
}

pub fn taylor_green(g: &Arc<SpectralGrid>, amplitude: f64) -> VectorField {
    assert_eq!(g.dimension(), 2);
    VectorField::from_point_fn(g.clone(), FieldRole::Velocity, 2, |x| {
        vec![
            amplitude * x[0].cos() * x[1].sin(),
            -amplitude * x[0].sin() * x[1].cos(),
        ]
    })
    .unwrap()
}

pub fn constant_director(g: &Arc<SpectralGrid>) -> VectorField {
    VectorField::from_point_fn(g.clone(), FieldRole::Director, 3, |_| vec![0.0, 0.0, 1.0])
        .unwrap()
}

/// d = (cos theta, sin theta, 0), theta = amp * sin(x_axis).
pub fn geodesic_director(g: &Arc<SpectralGrid>, amp: f64, axis: usize) -> VectorField {
    VectorField::from_point_fn(g.clone(), FieldRole::Director, 3, |x| {
        let th = amp * x[axis].sin();
        vec![th.cos(), th.sin(), 0.0]
    })
    .unwrap()
}

/// 4th-order centered finite difference of a scalar closure along one axis.
pub fn fd4(f: &dyn Fn([f64; 3]) -> f64, x: [f64; 3], axis: usize, h: f64) -> f64 {
    let mut xp = x;
    let eval = |xp: &mut [f64; 3], delta: f64| {
        xp[axis] = x[axis] + delta;
        f(*xp)
    };
    (-eval(&mut xp, 2.0 * h) + 8.0 * eval(&mut xp, h) - 8.0 * eval(&mut xp, -h)
        + eval(&mut xp, -2.0 * h))
        / (12.0 * h)
}

/// Explicit classical RK4 for the transported-free director heat flow
/// d_t = Lap d + |grad d|^2 d, pseudo-spectral right-hand side, fixed step.
/// Independent of the Duhamel/Picard machinery.
pub struct HeatFlowOracle {
    grid: Arc<SpectralGrid>,
}

impl HeatFlowOracle {
    pub fn new(grid: Arc<SpectralGrid>) -> Self {
        Self { grid }
    }

    fn rhs(&self, d_hat: &[Vec<num_complex::Complex64>]) -> Vec<Vec<num_complex::Complex64>> {
        use mildflow::fft::{forward, inverse, Shape};
        let g = &self.grid;
        let dim = g.dimension();
        let n = g.modes_per_axis();
        let shape = Shape::new(dim, n);
        let total = shape.total();
        let scale = g.wavenumber_scale();
        // physical d and its gradients
        let d_phys: Vec<Vec<f64>> = d_hat.iter().map(|c| inverse(c, shape)).collect();
        let mut grad2 = vec![0.0f64; total];
        for c in d_hat {
            for axis in 0..dim {
                let mut dc = c.clone();
                for (flat, v) in dc.iter_mut().enumerate() {
                    let idx = decompose(flat, dim, n);
                    let j = idx[axis];
                    if j == n / 2 {
                        *v = num_complex::Complex64::ZERO;
                    } else {
                        let k = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
                        *v *= num_complex::Complex64::new(0.0, k as f64 * scale);
                    }
                }
                let dphys = inverse(&dc, shape);
                for (gsl, v) in grad2.iter_mut().zip(&dphys) {
                    *gsl += v * v;
                }
            }
        }
        // rhs = Lap d + |grad d|^2 d
        d_hat
            .iter()
            .enumerate()
            .map(|(c, coef)| {
                let mut lap = coef.clone();
                for (flat, v) in lap.iter_mut().enumerate() {
                    let k2 = k2_int(flat, dim, n) as f64 * scale * scale;
                    *v *= -k2;
                }
                let cubic: Vec<f64> = grad2
                    .iter()
                    .zip(&d_phys[c])
                    .map(|(q, dv)| q * dv)
                    .collect();
                let cubic_hat = forward(&cubic, shape);
                lap.iter().zip(&cubic_hat).map(|(a, b)| a + b).collect()
            })
            .collect()
    }

    /// March d from t=0 to t_final with fixed-step RK4.
    pub fn solve(&self, d0: &VectorField, t_final: f64, dt: f64) -> VectorField {
        let mut state: Vec<Vec<num_complex::Complex64>> =
            d0.components().iter().map(|c| c.to_vec()).collect();
        let steps = (t_final / dt).round() as usize;
        assert!((steps as f64 * dt - t_final).abs() < 1e-12);
        let axpy = |y: &mut Vec<Vec<num_complex::Complex64>>,
                    a: f64,
                    x: &[Vec<num_complex::Complex64>]| {
            for (yc, xc) in y.iter_mut().zip(x) {
                for (yv, xv) in yc.iter_mut().zip(xc) {
                    *yv += a * xv;
                }
            }
        };
        for _ in 0..steps {
            let k1 = self.rhs(&state);
            let mut s2 = state.clone();
            axpy(&mut s2, dt / 2.0, &k1);
            let k2 = self.rhs(&s2);
            let mut s3 = state.clone();
            axpy(&mut s3, dt / 2.0, &k2);
            let k3 = self.rhs(&s3);
            let mut s4 = state.clone();
            axpy(&mut s4, dt, &k3);
            let k4 = self.rhs(&s4);
            axpy(&mut state, dt / 6.0, &k1);
            axpy(&mut state, dt / 3.0, &k2);
            axpy(&mut state, dt / 3.0, &k3);
            axpy(&mut state, dt / 6.0, &k4);
        }
        VectorField::from_spectral(self.grid.clone(), FieldRole::Director, state).unwrap()
    }
}

fn decompose(flat: usize, dim: usize, n: usize) -> [usize; 3] {
    match dim {
        2 => [flat / n, flat % n, 0],
        _ => [flat / (n * n), (flat / n) % n, flat % n],
    }
}

fn k2_int(flat: usize, dim: usize, n: usize) -> usize {
    let idx = decompose(flat, dim, n);
    let mut s = 0i64;
    for &j in idx.iter().take(dim) {
        let k = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
        s += k * k;
    }
    s as usize
}

/// Largest sup-norm mismatch between two trajectories at the first one's
/// node times (second sampled polynomially).
pub fn max_state_mismatch(a: &Trajectory, b: &Trajectory) -> f64 {
    let mut worst = 0.0f64;
    for (t, s) in a.nodes() {
        let sb = b.sample(t).unwrap();
        let du = s.u.sub(&sb.u).unwrap().sup_norm();
        let dd = s.d.sub(&sb.d).unwrap().sobolev_inf_norm(1).unwrap();
        worst = worst.max(du + dd);
    }
    worst
}

/// Least-squares fit of y = a + b sqrt(t); returns (a, b).
pub fn fit_sqrt(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let sx: f64 = t.iter().map(|v| v.sqrt()).sum();
    let sxx: f64 = t.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = t.iter().zip(y).map(|(x, y)| x.sqrt() * y).sum();
    let denom = n * sxx - sx * sx;
    let b = (n * sxy - sx * sy) / denom;
    let a = (sy - b * sx) / n;
    (a, b)
}

/// Least-squares slope of y against x.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx: f64 = x.iter().sum::<f64>() / n;
    let my: f64 = y.iter().sum::<f64>() / n;
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}
