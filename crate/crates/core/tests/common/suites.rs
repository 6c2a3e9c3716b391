//! Property suites, shared by the `properties` and `acceptance` targets.

use std::time::Instant;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topocharge::catalog::{build_model, Model, Params};
use topocharge::clifford::build_clifford;
use topocharge::degree::field::{ConcatField, Field, FnField, LinearMappedField, PermutedField};
use topocharge::degree::{degree, degree_product_check, gauss_map_degree, DegreeOptions};

pub fn contraction_squares_to_the_norm() {
    contraction_squares_to_the_norm_cases();
}

pub fn degree_of_a_product_is_the_product_of_degrees() {
    degree_of_a_product_is_the_product_of_degrees_cases();
}

pub fn constant_linear_maps_multiply_by_the_determinant_sign() {
    constant_linear_maps_multiply_by_the_determinant_sign_cases();
}

fn defaults(id: &str) -> Model {
    build_model(id, &Params::new(), None).unwrap()
}

fn deg_of(h: &dyn Field, scale: f64) -> i64 {
    degree(h, &DegreeOptions { scale, ..Default::default() }).unwrap().value
}

/// `(Re, Im)` of `(u + iv)^p`, or of its conjugate power for `p < 0`.
fn winding(p: i32) -> FnField<impl Fn(&[f64], &mut [f64], &mut [f64]) + Sync> {
    FnField {
        n: 2,
        f: move |v: &[f64], out: &mut [f64], jac: &mut [f64]| {
            let z = if p >= 0 { C64::new(v[0], v[1]) } else { C64::new(v[0], -v[1]) };
            let k = p.unsigned_abs() as i32;
            let w = z.powi(k);
            let dw = if k == 0 { C64::new(0.0, 0.0) } else { z.powi(k - 1) * k as f64 };
            let s = if p >= 0 { 1.0 } else { -1.0 };
            out[0] = w.re;
            out[1] = w.im;
            // Cauchy–Riemann in (u, ±v)
            jac[0] = dw.re;
            jac[1] = -s * dw.im;
            jac[2] = dw.im;
            jac[3] = s * dw.re;
            if k == 0 {
                out[0] = 1.0;
            }
        },
    }
}

const MODELS: [&str; 12] = [
    "dirac_d",
    "dirac_scaled",
    "dirac_magnetic",
    "hoti_winding",
    "sc1d_chem",
    "sc1d_order",
    "sc1d_massless_chem",
    "pip",
    "pwave_orderwall",
    "dwave",
    "tri_sc3d",
    "dirac_mass_reg",
];

pub fn clifford_sets_anticommute_to_machine_precision() {
    for kappa in 1..=5 {
        let set = build_clifford(kappa).unwrap();
        let n = set.gammas[0].nrows();
        let tol = 8.0 * f64::EPSILON;
        for i in 0..set.gammas.len() {
            let gi = &set.gammas[i];
            let herm = gi - &gi.t().mapv(|z| z.conj());
            assert!(herm.iter().all(|z| z.norm() <= tol));
            for j in 0..set.gammas.len() {
                let gj = &set.gammas[j];
                let mut ac = gi.dot(gj) + gj.dot(gi);
                if i == j {
                    ac -= &(Array2::<C64>::eye(n) * 2.0);
                }
                assert!(ac.iter().all(|z| z.norm() <= tol), "kappa {kappa}, ({i}, {j})");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    fn contraction_squares_to_the_norm_cases(kappa in 1usize..=4, v in prop::collection::vec(-3.0f64..3.0, 9)) {
        let set = build_clifford(kappa).unwrap();
        let v = &v[..2 * kappa + 1];
        let a = set.contract(v);
        let n2: f64 = v.iter().map(|x| x * x).sum();
        let sq = a.dot(&a) - Array2::<C64>::eye(a.nrows()) * n2;
        prop_assert!(sq.iter().all(|z| z.norm() < 1e-12 * (1.0 + n2)));
    }
}

pub fn regular_value_perturbations_leave_the_degree_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e9);
    for id in MODELS {
        let m = defaults(id);
        let base = deg_of(m.base_field(), m.scale);
        let n = m.base_field().dim();
        for _ in 0..100 {
            let mut y0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = y0.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r = rng.gen_range(0.0..1e-3 * m.scale);
            y0.iter_mut().for_each(|v| *v *= r / norm);
            let opts = DegreeOptions { scale: m.scale, y0: Some(y0.clone()), ..Default::default() };
            assert_eq!(degree(m.base_field(), &opts).unwrap().value, base, "{id} y0 = {y0:?}");
        }
    }
}

fn pair_field(kind: usize, a: &[f64]) -> (Box<dyn Field>, i64) {
    match kind {
        0..=6 => {
            let p = kind as i32 - 3;
            (Box::new(winding(p)), p as i64)
        }
        _ => {
            let a = a.to_vec();
            let det = a[0] * a[3] - a[1] * a[2];
            let f = FnField {
                n: 2,
                f: move |v: &[f64], out: &mut [f64], jac: &mut [f64]| {
                    out[0] = a[0] * v[0] + a[1] * v[1];
                    out[1] = a[2] * v[0] + a[3] * v[1];
                    jac.copy_from_slice(&a);
                },
            };
            (Box::new(f), if det > 0.0 { 1 } else { -1 })
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, failure_persistence: None, ..ProptestConfig::default() })]

    fn degree_of_a_product_is_the_product_of_degrees_cases(
        k1 in 0usize..8, k2 in 0usize..8,
        a1 in prop::collection::vec(-2.0f64..2.0, 4), a2 in prop::collection::vec(-2.0f64..2.0, 4),
    ) {
        prop_assume!((a1[0] * a1[3] - a1[1] * a1[2]).abs() > 0.1 && (a2[0] * a2[3] - a2[1] * a2[2]).abs() > 0.1);
        let (h1, d1) = pair_field(k1, &a1);
        let (h2, d2) = pair_field(k2, &a2);
        let opts = DegreeOptions::default();
        prop_assert!(degree_product_check(h1.as_ref(), h2.as_ref(), &opts).unwrap());
        let both = ConcatField::new(vec![h1.as_ref(), h2.as_ref()]);
        prop_assert_eq!(deg_of(&both, 1.0), d1 * d2);
    }

    fn constant_linear_maps_multiply_by_the_determinant_sign_cases(
        which in 0usize..MODELS.len(), entries in prop::collection::vec(-2.0f64..2.0, 16),
    ) {
        let m = defaults(MODELS[which]);
        let h = m.base_field();
        let n = h.dim();
        prop_assume!(n <= 4);
        let a: Vec<f64> = entries[..n * n].to_vec();
        let rows = (0..n).map(|i| a[i * n..(i + 1) * n].to_vec()).collect();
        let det = super::det(rows);
        prop_assume!(det.abs() > 0.05);
        let mapped = LinearMappedField { inner: h, a };
        let want = det.signum() as i64 * deg_of(h, m.scale);
        prop_assert_eq!(deg_of(&mapped, m.scale), want);
    }
}

pub fn winding_pair_product_matches_the_gauss_map() {
    let (a, b) = (winding(2), winding(3));
    let both = ConcatField::new(vec![&a, &b]);
    let g = gauss_map_degree(&both, 1.5, 1).unwrap();
    assert_eq!(g.rounded, Some(6));
    assert_eq!(deg_of(&both, 1.0), 6);
}

pub fn every_stage_of_a_chain_has_the_base_degree() {
    for id in MODELS {
        let m = defaults(id);
        let base = deg_of(m.base_field(), m.scale);
        let k0 = m.field.k;
        for j in k0..=m.d() {
            let stage = m.chain.stage(j);
            assert_eq!(deg_of(stage, m.scale), base, "{id} stage {j}");
        }
    }
    for d in [3.0, 4.0] {
        let m = build_model("dirac_d", &Params::from([("d".to_string(), d)]), None).unwrap();
        assert_eq!(deg_of(m.chain.top(), m.scale), deg_of(m.base_field(), m.scale));
    }
}

pub fn interleaved_orientation_differs_by_the_block_sign() {
    for (id, d) in [("dirac_d", 1.0), ("dirac_d", 2.0), ("dirac_d", 3.0), ("pip", 0.0), ("hoti_winding", 0.0), ("tri_sc3d", 0.0)] {
        let params = if d > 0.0 { Params::from([("d".to_string(), d)]) } else { Params::new() };
        let m = build_model(id, &params, None).unwrap();
        let d = m.d();
        let top = m.chain.top();
        // new variable 2i is ξ_{i+1}, new variable 2i+1 is x_{i+1}
        let perm: Vec<usize> = (0..2 * d).map(|j| if j % 2 == 0 { j / 2 } else { d + j / 2 }).collect();
        let inter = PermutedField { inner: top, perm };
        let block = deg_of(top, m.scale);
        assert_ne!(block, 0);
        let sign = if (d * (d - 1) / 2) % 2 == 0 { 1 } else { -1 };
        assert_eq!(deg_of(&inter, m.scale), sign * block, "{id}, d = {d}");
    }
}

pub fn charges_do_not_depend_on_the_regularization_scale() {
    for id in MODELS {
        let charges: Vec<i64> = [0.05, 0.2, 1.0]
            .iter()
            .map(|&eps| {
                let m = build_model(id, &Params::new(), Some(eps)).unwrap();
                m.degree_charge(deg_of(m.base_field(), m.scale))
            })
            .collect();
        assert!(charges.iter().all(|&c| c == charges[0]), "{id}: {charges:?}");
        assert_eq!(charges[0], super::closed_form(id, &topocharge::catalog::resolve_params(id, &Params::new()).unwrap()));
    }
}

pub fn charges_do_not_depend_on_the_inverse_mass() {
    for id in MODELS {
        let info = topocharge::catalog::model_info(id).unwrap();
        if !info.params.iter().any(|p| p.name == "eta") {
            continue;
        }
        for variant in [1.0, 2.0] {
            if variant > 1.0 && !info.params.iter().any(|p| p.name == "variant") {
                continue;
            }
            let charges: Vec<i64> = [0.1, 1.0, 10.0]
                .iter()
                .map(|&eta| {
                    let mut p = Params::from([("eta".to_string(), eta)]);
                    if info.params.iter().any(|p| p.name == "variant") {
                        p.insert("variant".into(), variant);
                    }
                    let m = build_model(id, &p, None).unwrap();
                    m.degree_charge(deg_of(m.base_field(), m.scale))
                })
                .collect();
            assert!(charges.iter().all(|&c| c == charges[0]), "{id} variant {variant}: {charges:?}");
        }
    }
}

pub fn gauss_map_agrees_with_root_counting_in_low_dimension() {
    for id in MODELS {
        let m = defaults(id);
        let h = m.base_field();
        if h.dim() > 4 {
            continue;
        }
        let r = degree(h, &DegreeOptions { scale: m.scale, ..Default::default() }).unwrap();
        // anisotropic fields concentrate the integrand; refine until it settles
        let mut prev = f64::NAN;
        let mut g = None;
        for level in 1..=5 {
            let cur = gauss_map_degree(h, r.radius, level).unwrap();
            let settled = (cur.value - prev).abs() < 0.02;
            prev = cur.value;
            g = Some(cur);
            if settled {
                break;
            }
        }
        let g = g.unwrap();
        assert!(g.residual <= 0.1, "{id}: {g:?}");
        assert_eq!(g.rounded, Some(r.value), "{id}");
    }
}

/// Degree-path charge equals the closed form in every sign sector.
pub fn degree_charges_match_closed_forms_in_every_sector() {
    for info in super::models() {
        let t = Instant::now();
        let draws = super::sector_draws(&info, 5, 0xca7);
        for p in &draws {
            let m = build_model(info.id, p, None).unwrap();
            let r = degree(m.base_field(), &DegreeOptions { scale: m.scale, ..Default::default() }).unwrap();
            assert_eq!(m.degree_charge(r.value), super::closed_form(info.id, p), "{} {p:?}", info.id);
        }
        eprintln!("{}: {} draws in {:?}", info.id, draws.len(), t.elapsed());
    }
}
