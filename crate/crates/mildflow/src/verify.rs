//! The built-in invariant suite behind `mildflow verify`: fast spectral and
//! solver identities checked at small resolutions, one pass/fail line each.

use crate::diagnostics::{modulus_of_continuity, MaskedSamples};
use crate::field::{FieldRole, VectorField};
use crate::grid::make_grid;
use crate::rescale::{residual_check, zoom, RescaleParams};
use crate::snapshot;
use crate::solver::{picard_solve, SolverConfig};
use crate::spectral::{dealias, heat_semigroup, leray_project};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn random_field(
    grid: &Arc<crate::grid::SpectralGrid>,
    comps: usize,
    band: usize,
    seed: u64,
) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = VectorField::from_point_fn(grid.clone(), FieldRole::Generic, comps, |_| {
        (0..comps)
            .map(|_| rng.sample::<f64, _>(rand::distr::StandardUniform) - 0.5)
            .collect()
    })
    .unwrap();
    // band-limit
    let mut banded = noise;
    {
        let dim = grid.dimension();
        let comps = banded.components_mut();
        for comp in comps.iter_mut() {
            for (flat, v) in comp.iter_mut().enumerate() {
                let k = grid.k_int_vec(flat);
                if (0..dim).any(|a| k[a].unsigned_abs() as usize > band) {
                    *v = num_complex::Complex64::ZERO;
                }
            }
        }
    }
    banded
}

fn check(name: &'static str, pass: bool, detail: String) -> CheckResult {
    CheckResult { name, pass, detail }
}

/// Run the invariant suite. `quick` trims seeds and resolutions.
pub fn run_verify(quick: bool) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let g = make_grid(2, 32, 2.0 * PI).unwrap();

    // semigroup composition and contractivity
    {
        let f = random_field(&g, 2, 10, 1);
        let mut worst = 0.0f64;
        for (s, t) in [(0.05, 0.2), (0.0, 1.0), (0.7, 0.3)] {
            let a = heat_semigroup(&heat_semigroup(&f, s).unwrap(), t).unwrap();
            let b = heat_semigroup(&f, s + t).unwrap();
            worst = worst.max(a.sub(&b).unwrap().spectral_sup() / f.spectral_sup());
        }
        out.push(check(
            "semigroup composition",
            worst < 1e-12,
            format!("max relative defect {worst:.2e}"),
        ));
        let mut contractive = true;
        let mut detail = 0.0f64;
        for t in [0.0, 1e-3, 0.1, 1.0] {
            let r = heat_semigroup(&f, t).unwrap().sup_norm() / f.sup_norm();
            detail = detail.max(r);
            if r > 1.0 + 1e-12 {
                contractive = false;
            }
        }
        out.push(check(
            "semigroup sup-norm contractivity",
            contractive,
            format!("max ratio {detail:.12}"),
        ));
    }

    // smoothing estimate: t^{1/2} |grad e^{tL} f| / |f| bounded by 2
    {
        let seeds: u64 = if quick { 4 } else { 20 };
        let mut worst = 0.0f64;
        for seed in 0..seeds {
            let f = random_field(&g, 2, 10, 100 + seed);
            let nf = f.sup_norm();
            for i in 0..10 {
                let t = 1e-3 * (1000.0f64).powf(i as f64 / 9.0);
                let hf = heat_semigroup(&f, t).unwrap();
                let r = t.sqrt() * hf.gradient_sup().unwrap() / nf;
                worst = worst.max(r);
            }
        }
        out.push(check(
            "heat gradient smoothing constant",
            worst <= 2.0,
            format!("max t^(1/2)|grad e^(tL)f|/|f| = {worst:.4}"),
        ));
    }

    // projection identities
    {
        let f = random_field(&g, 2, 10, 2);
        let p = leray_project(&f).unwrap();
        let pp = leray_project(&p).unwrap();
        let idem = pp.sub(&p).unwrap().spectral_sup() / f.spectral_sup().max(1e-30);
        let div = p.divergence_residual() / p.sup_norm().max(1e-30);
        let grad = {
            let phi = random_field(&g, 1, 10, 3);
            let gphi = VectorField::from_spectral(
                g.clone(),
                FieldRole::Generic,
                (0..2)
                    .map(|a| {
                        let mut beta = vec![0usize; 2];
                        beta[a] = 1;
                        phi.derivative(&beta).component(0).to_vec()
                    })
                    .collect(),
            )
            .unwrap();
            leray_project(&gphi).unwrap().spectral_sup() / gphi.spectral_sup().max(1e-30)
        };
        out.push(check(
            "projection idempotent",
            idem < 1e-12,
            format!("relative defect {idem:.2e}"),
        ));
        out.push(check(
            "projection divergence-free",
            div < 1e-12,
            format!("relative residual {div:.2e}"),
        ));
        out.push(check(
            "projection annihilates gradients",
            grad < 1e-12,
            format!("relative remainder {grad:.2e}"),
        ));
    }

    // dealiased product equals the refined-grid truncation
    {
        let a = random_field(&g, 1, 10, 4);
        let b = random_field(&g, 1, 10, 5);
        let shape = a.shape();
        let prod: Vec<f64> = a.physical()[0]
            .iter()
            .zip(&b.physical()[0])
            .map(|(x, y)| x * y)
            .collect();
        let coarse = dealias(
            &VectorField::from_physical(g.clone(), FieldRole::Generic, vec![prod]).unwrap(),
        );
        // oracle: exact product on the doubled grid, truncated back
        let n2 = 2 * shape.n;
        let af = crate::fft::inverse_oversampled(a.component(0), shape, n2);
        let bf = crate::fft::inverse_oversampled(b.component(0), shape, n2);
        let fine: Vec<f64> = af.iter().zip(&bf).map(|(x, y)| x * y).collect();
        let spec = crate::fft::forward_truncating(&fine, crate::fft::Shape::new(2, n2), shape.n);
        let oracle = dealias(
            &VectorField::from_spectral(g.clone(), FieldRole::Generic, vec![spec]).unwrap(),
        );
        let err = coarse.sub(&oracle).unwrap().spectral_sup();
        out.push(check(
            "two-thirds rule matches refined product",
            err < 1e-12,
            format!("defect {err:.2e}"),
        ));
    }

    // transform round trip
    {
        let f = random_field(&g, 1, 15, 6);
        let phys = f.physical()[0].clone();
        let back = crate::fft::inverse(&crate::fft::forward(&phys, f.shape()), f.shape());
        let scale = phys.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = phys
            .iter()
            .zip(&back)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
            / scale;
        out.push(check(
            "transform round trip",
            err < 1e-13,
            format!("relative error {err:.2e}"),
        ));
    }

    // sup-norm homogeneity and Sobolev monotonicity
    {
        let f = random_field(&g, 2, 10, 7);
        let r = f.scale(-3.5).sup_norm() / (3.5 * f.sup_norm());
        let homog = (r - 1.0).abs() < 1e-12;
        out.push(check(
            "sup-norm homogeneity",
            homog,
            format!("|ratio - 1| = {:.2e}", (r - 1.0).abs()),
        ));
        let mut mono = true;
        let mut prev = 0.0;
        for k in 0..4 {
            let v = f.sobolev_inf_norm(k).unwrap();
            if v < prev - 1e-12 {
                mono = false;
            }
            prev = v;
        }
        out.push(check("sobolev norm monotone in k", mono, String::new()));
    }

    // a small coupled solve satisfies its own mild equations
    {
        let g16 = make_grid(2, 16, 2.0 * PI).unwrap();
        let u0 = VectorField::from_point_fn(g16.clone(), FieldRole::Velocity, 2, |x| {
            vec![
                0.4 * x[0].cos() * x[1].sin(),
                -0.4 * x[0].sin() * x[1].cos(),
            ]
        })
        .unwrap();
        let d0 = VectorField::from_point_fn(g16.clone(), FieldRole::Director, 3, |x| {
            let th = 0.1 * x[0].sin();
            vec![th.cos(), th.sin(), 0.0]
        })
        .unwrap();
        let cfg = SolverConfig {
            tol: 1e-11,
            ..SolverConfig::default()
        };
        match picard_solve(&u0, &d0, 0.02, &cfg) {
            Ok((traj, rec)) => {
                let res = residual_check(&traj).unwrap_or(f64::INFINITY);
                let ok = rec.converged && res <= 10.0 * cfg.tol;
                out.push(check(
                    "picard fixed point residual",
                    ok,
                    format!("residual {res:.2e} after {} iterations", rec.iterations),
                ));
                // zoom scaling on the converged trajectory
                let p = RescaleParams::new([0.0; 3], 0.0, 2.0).unwrap();
                let z = zoom(&traj, &p).unwrap();
                let ratio = traj.last_state().u.sup_norm()
                    / z.trajectory.last_state().u.sup_norm();
                let zr = residual_check(&z.trajectory).unwrap_or(f64::INFINITY);
                out.push(check(
                    "zoom sup-norm scaling",
                    (ratio - 2.0).abs() < 1e-8,
                    format!("ratio {ratio:.10}"),
                ));
                out.push(check(
                    "zoom preserves mild residual",
                    zr <= 10.0 * res.max(10.0 * cfg.tol),
                    format!("zoomed residual {zr:.2e}"),
                ));
            }
            Err(e) => {
                out.push(check(
                    "picard fixed point residual",
                    false,
                    format!("solve failed: {e}"),
                ));
            }
        }
    }

    // snapshot round trip
    {
        let f = random_field(&g, 2, 10, 8);
        let bytes = snapshot::to_bytes(&f).unwrap();
        let back = snapshot::from_bytes(&bytes).unwrap();
        let ok = back.physical() == f.physical();
        out.push(check("snapshot bitwise round trip", ok, String::new()));
    }

    // modulus monotonicity on a random masked sample set
    if !quick {
        let f = random_field(&g, 3, 8, 9);
        let samples = MaskedSamples::from_field(&f, 1);
        let table = modulus_of_continuity(&samples, 12, 0);
        let mono = table.eta.windows(2).all(|w| w[1] >= w[0]);
        out.push(check("modulus tables monotone", mono, String::new()));
    }

    out
}
