mod common;

use common::*;
use proptest::prelude::*;
use string_lab::grid::{integrate_from_fixed_end, make_grid, trapezoid};
use string_lab::norms::*;
use string_lab::{DiffOps, Grid, Vec3};

// measured on 1000 random quintics at n = 256, seed 0x5EED, with 10% headroom
const XEPS_BRACKET: f64 = 1.52;
const DISC_BRACKET: [f64; 4] = [1.95, 3.88, 8.73, 26.8];
const ALGEBRA_C: f64 = 2.13;
const CORPUS_SEED: u64 = 0x5EED;

fn corpus(count: usize) -> Vec<Vec<f64>> {
    let mut r = rng(CORPUS_SEED);
    (0..count).map(|_| random_poly(&mut r, 5)).collect()
}

#[test]
fn constant_and_linear_examples() {
    let g = make_grid(1024).unwrap();
    assert!(rel(xm_norm(&vec![1.0; 1025], 0, &g).unwrap(), 1.0) < 1e-12);
    assert!(rel(xm_norm(&g.sample(|s| s), 0, &g).unwrap(), (1.0f64 / 3.0).sqrt()) < 1e-6);
    let want = (1.0 / 5.0 + 4.0 / 3.0 + 4.0 / 3.0f64).sqrt();
    assert!(rel(xm_norm(&g.sample(|s| s * s), 2, &g).unwrap(), want) < 1e-6);
}

#[test]
fn ym_of_constant() {
    // U = s - 1: ‖U‖²_{X^1} = 1/3 + ∫ s ds, so ‖1‖_{Y^0} = (1/2)^{1/2}
    let g = make_grid(1024).unwrap();
    assert!(rel(ym_norm(&vec![1.0; 1025], 0, &g).unwrap(), 0.5f64.sqrt()) < 1e-6);
    assert_eq!(ym_norm(&vec![0.0; 1025], 3, &g).unwrap(), 0.0);
}

#[test]
fn ym_defining_identity() {
    let g = make_grid(1024).unwrap();
    let w = g.sample(|s| (s - 1.0) * (1.0 + s * s - 0.5 * s.powi(3)));
    let dw = g.sample(|s| 1.0 - 2.0 * s + 4.5 * s * s - 2.0 * s.powi(3));
    for m in 0..=3 {
        let lhs = ym_norm(&dw, m, &g).unwrap().powi(2) + l2_norm(&w, &g).powi(2);
        let rhs = xm_norm(&w, m + 1, &g).unwrap().powi(2);
        assert!(rel(lhs, rhs) < 1e-5, "m={m}: {lhs} vs {rhs}");
    }
    // U built by integration reproduces the same value
    let u = g.sample(|s| 1.0 + s);
    let big_u = integrate_from_fixed_end(&u, &g);
    let via_u = (xm_norm(&big_u, 2, &g).unwrap().powi(2) - l2_norm(&big_u, &g).powi(2)).sqrt();
    assert!(rel(ym_norm(&u, 1, &g).unwrap(), via_u) < 1e-5);
}

#[test]
fn xeps_examples() {
    let g = make_grid(256).unwrap();
    for eps in [0.1, 0.25, 0.45] {
        assert!(rel(xeps_norm(&vec![1.0; 257], 2, eps, &g).unwrap(), 1.0) < 1e-12);
        for k in 1..=3 {
            assert_eq!(xeps_norm(&vec![0.0; 257], k, eps, &g).unwrap(), 0.0);
        }
    }
    assert!(xeps_norm(&vec![1.0; 257], 4, 0.25, &g).is_err());
    assert!(xeps_norm(&vec![1.0; 257], 1, 0.5, &g).is_err());
    assert!(xeps_norm(&vec![1.0; 257], 1, 0.0, &g).is_err());
}

#[test]
fn averaging_examples() {
    let g = make_grid(1024).unwrap();
    let c = averaging(&vec![2.5; 1025], &g).unwrap();
    assert!(c.iter().all(|v| (v - 2.5).abs() < 1e-12));
    for k in 1..=3 {
        let m = averaging(&g.sample(|s| s.powi(k)), &g).unwrap();
        let err = (0..1025)
            .map(|i| (m[i] - g.node(i).powi(k) / (k + 1) as f64).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "k={k} err {err}");
    }
}

#[test]
fn disc_lift_examples() {
    let g = make_grid(1024).unwrap();
    let pi = std::f64::consts::PI;
    assert!(rel(disc_lift_norm(&vec![1.0; 1025], 0, &g).unwrap(), pi.sqrt()) < 1e-12);
    assert!(rel(disc_lift_norm(&g.sample(|s| s), 0, &g).unwrap(), (pi / 3.0).sqrt()) < 1e-6);
    assert!(disc_lift_norm(&vec![1.0; 1025], 4, &g).is_err());
}

#[test]
fn order_limits() {
    let g = make_grid(16).unwrap();
    assert!(xm_norm(&vec![1.0; 17], 7, &g).is_err());
    assert!(xm_norm(&vec![1.0; 17], 5, &g).is_err());
    assert!(xm_norm(&vec![1.0; 17], 4, &g).is_ok());
}

#[test]
fn xm_matches_exact_polynomial_oracle() {
    let g = make_grid(256).unwrap();
    for p in corpus(200) {
        let u = sample(&p, &g);
        for m in 0..=5 {
            let got = xm_norm(&u, m, &g).unwrap();
            let want = xm_sq_exact(&p, m).sqrt();
            assert!(rel(got, want) < 1e-3, "m={m}: {got} vs {want}");
        }
    }
    let g = make_grid(64).unwrap();
    for p in corpus(50) {
        let got = xm_norm(&sample(&p, &g), 6, &g).unwrap();
        assert!(rel(got, xm_sq_exact(&p, 6).sqrt()) < 5e-3);
    }
}

#[test]
fn xm_nondecreasing_in_m() {
    let g = make_grid(128).unwrap();
    for p in corpus(100) {
        let u = sample(&p, &g);
        let vals: Vec<f64> = (0..=6).map(|m| xm_norm(&u, m, &g).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]), "{vals:?}");
    }
}

#[test]
fn xeps_equivalence_bracket() {
    let g = make_grid(256).unwrap();
    let ops = DiffOps::default();
    for p in corpus(1000) {
        let u = sample(&p, &g);
        let du = ops.d1(&u, &g).unwrap();
        let w: Vec<f64> = du.iter().enumerate().map(|(i, d)| g.node(i).powf(1.5) * d * d).collect();
        let base = (l2_norm(&u, &g).powi(2) + trapezoid(&w, &g)).sqrt();
        let ratio = xeps_norm(&u, 1, 0.25, &g).unwrap() / base;
        assert!(ratio <= XEPS_BRACKET && ratio >= 1.0 / XEPS_BRACKET, "ratio {ratio}");
    }
}

#[test]
fn disc_lift_equivalence_bracket() {
    let g = make_grid(256).unwrap();
    for p in corpus(1000) {
        let u = sample(&p, &g);
        for (m, c) in DISC_BRACKET.iter().enumerate() {
            let ratio = disc_lift_norm(&u, m, &g).unwrap() / xm_norm(&u, m, &g).unwrap();
            assert!(ratio <= *c && ratio >= 1.0 / c, "m={m} ratio {ratio}");
        }
    }
}

#[test]
fn algebra_property() {
    let g = make_grid(256).unwrap();
    let polys = corpus(1000);
    for pair in polys.chunks(2) {
        let (u, v) = (sample(&pair[0], &g), sample(&pair[1], &g));
        let uv: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a * b).collect();
        for m in 0..=3 {
            let bound = ALGEBRA_C * xm_norm(&u, m.max(2), &g).unwrap() * xm_norm(&v, m, &g).unwrap();
            assert!(xm_norm(&uv, m, &g).unwrap() <= bound);
        }
    }
}

#[test]
fn averaging_bound() {
    let g = make_grid(256).unwrap();
    let mut violations = 0;
    for p in corpus(1000) {
        let u = sample(&p, &g);
        let mu = averaging(&u, &g).unwrap();
        for m in 0..=3 {
            let lhs = xm_norm(&mu, m, &g).unwrap();
            let rhs = 2.0 * xm_norm(&u, m, &g).unwrap();
            if lhs > rhs + 1e-6 * rhs.max(1.0) {
                violations += 1;
            }
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn hardy_bound() {
    let g = make_grid(256).unwrap();
    let mut violations = 0;
    for p in corpus(1000) {
        let u = sample(&p, &g);
        let big_u = integrate_from_fixed_end(&u, &g);
        if l2_norm(&big_u, &g) > 2.0 * weighted_sq(&u, 2, &g).sqrt() {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn vector_norm_is_componentwise_sum() {
    let g = make_grid(64).unwrap();
    let a = g.sample(|s| s.sin());
    let b = g.sample(|s| 1.0 - s * s);
    let v: Vec<Vec3> = a.iter().zip(&b).map(|(x, y)| Vec3::new(*x, *y, 0.0)).collect();
    for m in 0..=4 {
        let lhs = xm_norm(&v, m, &g).unwrap().powi(2);
        let rhs = xm_norm(&a, m, &g).unwrap().powi(2) + xm_norm(&b, m, &g).unwrap().powi(2);
        assert!(rel(lhs, rhs) < 1e-12);
    }
}

#[test]
fn report_json_keys() {
    let g = make_grid(64).unwrap();
    let rep = NormReport::compute(&g.sample(|s| 1.0 + s), 3, &[0.25], &g).unwrap();
    let json = serde_json::to_value(&rep).unwrap();
    for key in ["xm", "ym", "xeps", "l2"] {
        assert!(json.get(key).is_some());
    }
    assert_eq!(rep.xm.len(), 4);
    assert_eq!(rep.ym.len(), 3);
    assert!(rep.xeps.contains_key(&xeps_key(2, 0.25)));
}

fn any_poly() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-2.0f64..2.0, 1..7)
}

proptest! {
    #[test]
    fn zero_field_has_zero_norms(n in 32usize..96) {
        let g = Grid::new(n).unwrap();
        let z = vec![0.0; n + 1];
        for m in 0..=6 {
            prop_assert_eq!(xm_norm(&z, m, &g).unwrap(), 0.0);
        }
        prop_assert_eq!(disc_lift_norm(&z, 3, &g).unwrap(), 0.0);
        prop_assert_eq!(l2_norm(&z, &g), 0.0);
    }

    #[test]
    fn triangle_and_homogeneity(p in any_poly(), q in any_poly(), a in -3.0f64..3.0, m in 0usize..=4) {
        let g = make_grid(64).unwrap();
        let (u, v) = (sample(&p, &g), sample(&q, &g));
        let sum: Vec<f64> = u.iter().zip(&v).map(|(x, y)| x + y).collect();
        let scaled: Vec<f64> = u.iter().map(|x| a * x).collect();
        let norms: [&dyn Fn(&[f64]) -> f64; 4] = [
            &|w| xm_norm(w, m, &g).unwrap(),
            &|w| ym_norm(w, m.min(3), &g).unwrap(),
            &|w| xeps_norm(w, 1 + m % 3, 0.2, &g).unwrap(),
            &|w| disc_lift_norm(w, m.min(3), &g).unwrap(),
        ];
        for f in norms {
            let (nu, nv) = (f(&u), f(&v));
            prop_assert!(f(&sum) <= (nu + nv) * (1.0 + 1e-12) + 1e-12);
            prop_assert!((f(&scaled) - a.abs() * nu).abs() <= 1e-8 * nu.max(1.0));
        }
    }
}
