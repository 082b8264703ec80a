//! Property tests over randomized fields and inputs.

use mildflow::diagnostics::{modulus_of_continuity, MaskedSamples};
use mildflow::field::{FieldRole, VectorField};
use mildflow::grid::make_grid;
use mildflow::scenario::Scenario;
use mildflow::snapshot;
use mildflow::spectral::{dealias, heat_semigroup, leray_project};
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

fn field_from_values(values: Vec<f64>, comps: usize) -> VectorField {
    let n = 16usize;
    let g = make_grid(2, n, 2.0 * PI).unwrap();
    let total = n * n;
    let mut phys = vec![vec![0.0; total]; comps];
    for (i, v) in values.iter().enumerate().take(comps * total) {
        phys[i / total][i % total] = *v;
    }
    VectorField::from_physical(g, FieldRole::Generic, phys).unwrap()
}

fn value_vec(comps: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, comps * 256)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sup_norm_homogeneous(values in value_vec(2), lambda in -8.0f64..8.0) {
        let f = field_from_values(values, 2);
        let a = f.scale(lambda).sup_norm();
        let b = lambda.abs() * f.sup_norm();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-12));
    }

    #[test]
    fn semigroup_property_random_times(values in value_vec(1), s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let f = field_from_values(values, 1);
        let a = heat_semigroup(&heat_semigroup(&f, s).unwrap(), t).unwrap();
        let b = heat_semigroup(&f, s + t).unwrap();
        let err = a.sub(&b).unwrap().spectral_sup();
        prop_assert!(err <= 1e-12 * f.spectral_sup().max(1e-12));
    }

    #[test]
    fn projection_idempotent_random(values in value_vec(2)) {
        let f = field_from_values(values, 2);
        let p = leray_project(&f).unwrap();
        let pp = leray_project(&p).unwrap();
        prop_assert!(pp.sub(&p).unwrap().spectral_sup() <= 1e-12 * f.spectral_sup().max(1e-12));
        prop_assert!(p.divergence_residual() <= 1e-12 * f.spectral_sup().max(1e-12));
    }

    #[test]
    fn dealias_idempotent_and_band_limited(values in value_vec(1)) {
        let f = field_from_values(values, 1);
        let d1 = dealias(&f);
        let d2 = dealias(&d1);
        prop_assert!(d2.sub(&d1).unwrap().spectral_sup() == 0.0);
        let g = d1.grid().clone();
        let n = g.modes_per_axis() as i64;
        for (flat, v) in d1.component(0).iter().enumerate() {
            let k = g.k_int_vec(flat);
            if (0..2).any(|a| 3 * k[a].abs() > n) {
                prop_assert!(v.norm() == 0.0);
            }
        }
    }

    #[test]
    fn norms_monotone_in_derivative_order(values in value_vec(1)) {
        let f = field_from_values(values, 1);
        let mut prev = 0.0;
        for k in 0..4 {
            let v = f.sobolev_inf_norm(k).unwrap();
            prop_assert!(v >= prev - 1e-9 * v.max(1.0));
            prev = v;
        }
    }

    #[test]
    fn snapshot_roundtrip_bitwise(values in value_vec(2)) {
        let f = field_from_values(values, 2);
        let bytes = snapshot::to_bytes(&f).unwrap();
        let back = snapshot::from_bytes(&bytes).unwrap();
        prop_assert_eq!(f.physical(), back.physical());
        let again = snapshot::to_bytes(&back).unwrap();
        prop_assert_eq!(bytes, again);
    }

    #[test]
    fn snapshot_decoder_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..2048)) {
        let _ = snapshot::from_bytes(&bytes);
    }

    #[test]
    fn scenario_parser_never_panics(text in "[ -~\n]{0,600}") {
        let _ = Scenario::from_toml_str(&text);
    }

    #[test]
    fn modulus_tables_monotone(values in value_vec(3), mask_bits in prop::collection::vec(any::<bool>(), 256)) {
        let f = field_from_values(values, 3);
        let mut samples = MaskedSamples::from_field(&f, 1);
        samples.mask = mask_bits;
        let t = modulus_of_continuity(&samples, 12, 7);
        for w in t.eta.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
    }
}

/// Oversampled sup-norms dominate the plain collocation maximum.
#[test]
fn oversampled_sup_dominates_collocation() {
    let g: Arc<_> = make_grid(2, 16, 2.0 * PI).unwrap();
    let f = VectorField::from_point_fn(g, FieldRole::Generic, 1, |x| {
        vec![(3.0 * x[0]).sin() * (2.0 * x[1]).cos() + 0.3 * x[1].sin()]
    })
    .unwrap();
    let coll = {
        let phys = f.physical();
        phys[0].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    };
    assert!(f.sup_norm() >= coll - 1e-13);
}
