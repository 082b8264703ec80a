//! Assembly of the two nonlinearities driving the coupled system:
//! the momentum stress divergence div(u (x) u + grad d (.) grad d) and the
//! director source |grad d|^2 d - (u . grad) d.
//!
//! Quadratic products are formed pointwise on the native collocation grid
//! and dealiased with the two-thirds rule, which removes quadratic aliasing
//! exactly for band-limited inputs. The cubic term is optionally formed on
//! a 2x refined grid before truncation, since the two-thirds rule alone
//! does not fully dealias cubics.

use crate::error::Result;
use crate::fft::{self, Shape};
use crate::field::{same_grid, FieldRole, VectorField};
use crate::spectral::dealias;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// How the cubic director term is dealiased.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CubicProductRule {
    /// Form |grad d|^2 d on a 2x refined physical grid, then truncate.
    #[default]
    Refined,
    /// Form it on the native grid and apply the two-thirds rule only.
    TwoThirds,
}

/// div(u (x) u + grad d (.) grad d), the forcing of the momentum equation
/// before Leray projection. The stress entry (i, j) is
/// u_i u_j + sum_c d_i d_c . d_j d_c.
pub fn momentum_nonlinearity(u: &VectorField, d: &VectorField) -> Result<VectorField> {
    same_grid(u, d)?;
    let grid = u.grid().clone();
    let dim = grid.dimension();
    let shape = Shape::new(dim, grid.modes_per_axis());
    let total = shape.total();

    let u_phys = u.physical();
    let d_grad = director_gradients_physical(d);

    // symmetric stress, upper triangle
    let mut stress_hat: Vec<Vec<Vec<Complex64>>> = vec![Vec::new(); dim];
    for i in 0..dim {
        stress_hat[i] = vec![Vec::new(); dim];
    }
    for i in 0..dim {
        for j in i..dim {
            let mut s = vec![0.0; total];
            for (p, slot) in s.iter_mut().enumerate() {
                let mut v = u_phys[i][p] * u_phys[j][p];
                for c in 0..d.n_comps() {
                    v += d_grad[i][c][p] * d_grad[j][c][p];
                }
                *slot = v;
            }
            let hat = fft::forward(&s, shape);
            if j > i {
                stress_hat[j][i] = hat.clone();
            }
            stress_hat[i][j] = hat;
        }
    }

    // dealias then take the spectral divergence of each row
    let n = grid.modes_per_axis();
    let scale = grid.wavenumber_scale();
    let mut comps = vec![vec![Complex64::ZERO; total]; dim];
    let band = |k: i64| 3 * k.abs() > n as i64;
    for flat in 0..total {
        let kv = grid.k_int_vec(flat);
        if (0..dim).any(|a| band(kv[a])) {
            continue; // dealiased mode
        }
        let idx = grid.decompose(flat);
        for a in 0..dim {
            let j = idx[a];
            if j == n / 2 {
                continue;
            }
            let ik = Complex64::new(0.0, grid.k_int_at(j) as f64 * scale);
            for (i, comp) in comps.iter_mut().enumerate() {
                comp[flat] += ik * stress_hat[i][a][flat];
            }
        }
    }
    VectorField::from_spectral(grid, FieldRole::Generic, comps)
}

/// |grad d|^2 d - (u . grad) d, the non-semigroup part of the director
/// equation.
pub fn director_nonlinearity(
    u: &VectorField,
    d: &VectorField,
    rule: CubicProductRule,
) -> Result<VectorField> {
    same_grid(u, d)?;
    let grid = d.grid().clone();
    let dim = grid.dimension();
    let nc = d.n_comps();
    let shape = Shape::new(dim, grid.modes_per_axis());
    let total = shape.total();

    let grad_spec: Vec<Vec<Vec<Complex64>>> = (0..dim)
        .map(|a| {
            let mut beta = vec![0usize; dim];
            beta[a] = 1;
            let df = d.derivative(&beta);
            (0..nc).map(|c| df.component(c).to_vec()).collect()
        })
        .collect();

    // advection (u . grad) d on the native grid
    let u_phys = u.physical();
    let grad_phys: Vec<Vec<Vec<f64>>> = grad_spec
        .iter()
        .map(|axis| axis.iter().map(|c| fft::inverse(c, shape)).collect())
        .collect();
    let mut adv_hat: Vec<Vec<Complex64>> = Vec::with_capacity(nc);
    for c in 0..nc {
        let mut adv = vec![0.0; total];
        for (p, slot) in adv.iter_mut().enumerate() {
            let mut v = 0.0;
            for a in 0..dim {
                v += u_phys[a][p] * grad_phys[a][c][p];
            }
            *slot = v;
        }
        adv_hat.push(fft::forward(&adv, shape));
    }

    // cubic term |grad d|^2 d
    let cubic_hat: Vec<Vec<Complex64>> = match rule {
        CubicProductRule::Refined => {
            let n_fine = 2 * grid.modes_per_axis();
            let shape_fine = Shape::new(dim, n_fine);
            let total_fine = shape_fine.total();
            let grad_fine: Vec<Vec<Vec<f64>>> = grad_spec
                .iter()
                .map(|axis| {
                    axis.iter()
                        .map(|c| fft::inverse_oversampled(c, shape, n_fine))
                        .collect()
                })
                .collect();
            let d_fine: Vec<Vec<f64>> = (0..nc)
                .map(|c| fft::inverse_oversampled(d.component(c), shape, n_fine))
                .collect();
            let mut q = vec![0.0; total_fine];
            for (p, slot) in q.iter_mut().enumerate() {
                let mut v = 0.0;
                for axis in &grad_fine {
                    for comp in axis {
                        v += comp[p] * comp[p];
                    }
                }
                *slot = v;
            }
            (0..nc)
                .map(|c| {
                    let prod: Vec<f64> = q
                        .iter()
                        .zip(&d_fine[c])
                        .map(|(a, b)| a * b)
                        .collect();
                    fft::forward_truncating(&prod, shape_fine, grid.modes_per_axis())
                })
                .collect()
        }
        CubicProductRule::TwoThirds => {
            let d_phys = d.physical();
            let mut q = vec![0.0; total];
            for (p, slot) in q.iter_mut().enumerate() {
                let mut v = 0.0;
                for axis in &grad_phys {
                    for comp in axis {
                        v += comp[p] * comp[p];
                    }
                }
                *slot = v;
            }
            (0..nc)
                .map(|c| {
                    let prod: Vec<f64> =
                        q.iter().zip(&d_phys[c]).map(|(a, b)| a * b).collect();
                    fft::forward(&prod, shape)
                })
                .collect()
        }
    };

    let comps = cubic_hat
        .into_iter()
        .zip(adv_hat)
        .map(|(cu, ad)| cu.iter().zip(&ad).map(|(a, b)| a - b).collect())
        .collect();
    let raw = VectorField::from_spectral(grid, FieldRole::Generic, comps)?;
    Ok(dealias(&raw))
}

/// Physical samples of every first derivative of d, indexed [axis][comp].
fn director_gradients_physical(d: &VectorField) -> Vec<Vec<Vec<f64>>> {
    let grid = d.grid();
    let dim = grid.dimension();
    let shape = Shape::new(dim, grid.modes_per_axis());
    (0..dim)
        .map(|a| {
            let mut beta = vec![0usize; dim];
            beta[a] = 1;
            let df = d.derivative(&beta);
            (0..d.n_comps())
                .map(|c| fft::inverse(df.component(c), shape))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid2(n: usize) -> Arc<crate::grid::SpectralGrid> {
        make_grid(2, n, 2.0 * PI).unwrap()
    }

    fn geodesic(g: &Arc<crate::grid::SpectralGrid>) -> VectorField {
        VectorField::from_point_fn(g.clone(), FieldRole::Director, 3, |x| {
            vec![x[0].cos(), x[0].sin(), 0.0]
        })
        .unwrap()
    }

    #[test]
    fn momentum_vanishes_for_rest_state() {
        let g = grid2(16);
        let u = VectorField::zero(g.clone(), FieldRole::Velocity);
        let d = VectorField::from_point_fn(g, FieldRole::Director, 3, |_| vec![0.0, 0.0, 1.0])
            .unwrap();
        let f = momentum_nonlinearity(&u, &d).unwrap();
        assert!(f.spectral_sup() < 1e-14);
    }

    #[test]
    fn momentum_vanishes_for_constant_stress() {
        // d = (cos x1, sin x1, 0): the elastic stress is the constant e1 (x) e1
        let g = grid2(16);
        let u = VectorField::zero(g.clone(), FieldRole::Velocity);
        let d = geodesic(&g);
        let f = momentum_nonlinearity(&u, &d).unwrap();
        assert!(f.spectral_sup() < 1e-13, "left {}", f.spectral_sup());
    }

    #[test]
    fn momentum_with_divergence_free_u_has_zero_mean() {
        let g = grid2(32);
        let u = VectorField::from_point_fn(g.clone(), FieldRole::Velocity, 2, |x| {
            vec![x[0].cos() * x[1].sin(), -x[0].sin() * x[1].cos()]
        })
        .unwrap();
        let d = geodesic(&g);
        let f = momentum_nonlinearity(&u, &d).unwrap();
        for m in f.mean_mode() {
            assert!(m.norm() < 1e-12);
        }
    }

    #[test]
    fn director_vanishes_for_constant_director() {
        let g = grid2(16);
        let u = VectorField::from_point_fn(g.clone(), FieldRole::Velocity, 2, |x| {
            vec![x[1].sin(), 0.0]
        })
        .unwrap();
        let d = VectorField::from_point_fn(g, FieldRole::Director, 3, |_| vec![0.0, 0.0, 1.0])
            .unwrap();
        for rule in [CubicProductRule::Refined, CubicProductRule::TwoThirds] {
            let f = director_nonlinearity(&u, &d, rule).unwrap();
            assert!(f.spectral_sup() < 1e-14);
        }
    }

    #[test]
    fn director_geodesic_recovers_itself_at_rest() {
        // |grad d|^2 = 1 for the geodesic, so the source is d itself
        let g = grid2(32);
        let u = VectorField::zero(g.clone(), FieldRole::Velocity);
        let d = geodesic(&g);
        let f = director_nonlinearity(&u, &d, CubicProductRule::Refined).unwrap();
        let diff = f.sub(&d).unwrap().spectral_sup();
        assert!(diff < 1e-12, "difference {diff}");
    }

    #[test]
    fn director_geodesic_with_unit_advection() {
        // u = e1: result is d - d_x1 d = (cos+sin, sin-cos, 0)
        let g = grid2(32);
        let u = VectorField::from_point_fn(g.clone(), FieldRole::Velocity, 2, |_| {
            vec![1.0, 0.0]
        })
        .unwrap();
        let d = geodesic(&g);
        let f = director_nonlinearity(&u, &d, CubicProductRule::Refined).unwrap();
        let expect = VectorField::from_point_fn(g, FieldRole::Generic, 3, |x| {
            vec![x[0].cos() + x[0].sin(), x[0].sin() - x[0].cos(), 0.0]
        })
        .unwrap();
        let diff = f.sub(&expect).unwrap().spectral_sup();
        assert!(diff < 1e-12, "difference {diff}");
    }

    #[test]
    fn director_term_scalings_decompose() {
        // N(u, d) = cubic(d) - adv(u, d) with cubic cubic in d and adv
        // bilinear in (u, d): checked at scale factors 2
        let g = grid2(32);
        let u = VectorField::from_point_fn(g.clone(), FieldRole::Velocity, 2, |x| {
            vec![x[0].cos() * x[1].sin(), -x[0].sin() * x[1].cos()]
        })
        .unwrap();
        let d = geodesic(&g).scale(0.5);
        let zero_u = VectorField::zero(g.clone(), FieldRole::Velocity);
        let rule = CubicProductRule::Refined;
        let cubic = director_nonlinearity(&zero_u, &d, rule).unwrap();
        let full = director_nonlinearity(&u, &d, rule).unwrap();
        let adv = cubic.sub(&full).unwrap(); // (u.grad) d

        // doubling u doubles only the advection part
        let full2u = director_nonlinearity(&u.scale(2.0), &d, rule).unwrap();
        let expect = cubic.sub(&adv.scale(2.0)).unwrap();
        assert!(full2u.sub(&expect).unwrap().spectral_sup() < 1e-12);

        // doubling d scales the cubic part by 8 and the advection by 2
        let cubic2d = director_nonlinearity(&zero_u, &d.scale(2.0), rule).unwrap();
        assert!(cubic2d.sub(&cubic.scale(8.0)).unwrap().spectral_sup() < 1e-11);
        let full2d = director_nonlinearity(&u, &d.scale(2.0), rule).unwrap();
        let expect = cubic.scale(8.0).sub(&adv.scale(2.0)).unwrap();
        assert!(full2d.sub(&expect).unwrap().spectral_sup() < 1e-11);
    }

    #[test]
    fn bilinear_scaling_of_momentum() {
        // u -> 2u alone quadruples the u (x) u part; checked against the
        // term-by-term decomposition at lambda, mu in {1, 2}
        let g = grid2(32);
        let u = VectorField::from_point_fn(g.clone(), FieldRole::Velocity, 2, |x| {
            vec![x[0].cos() * x[1].sin(), -x[0].sin() * x[1].cos()]
        })
        .unwrap();
        let d0 = VectorField::from_point_fn(g.clone(), FieldRole::Director, 3, |_| {
            vec![0.0, 0.0, 1.0]
        })
        .unwrap();
        let f1 = momentum_nonlinearity(&u, &d0).unwrap();
        let f2 = momentum_nonlinearity(&u.scale(2.0), &d0).unwrap();
        let diff = f2.sub(&f1.scale(4.0)).unwrap().spectral_sup();
        assert!(diff < 1e-12 * f2.spectral_sup().max(1.0));
    }
}
