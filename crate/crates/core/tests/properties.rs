use std::f64::consts::PI;
use std::sync::OnceLock;

use mtlab::blowup::{blowup_scale, gradient_concentration, truncation_energy};
use mtlab::constants::{bubble_mass, Dimension};
use mtlab::fem::{FemSpace, NormParams};
use mtlab::green::{capacity_minimizer_energy, CapacitySpec};
use mtlab::mesh::build_disk;
use mtlab::subcritical::{mt_functional, mt_gradient};
use proptest::prelude::*;

const N: Dimension = Dimension::TWO;

fn space() -> &'static FemSpace {
    static SPACE: OnceLock<FemSpace> = OnceLock::new();
    SPACE.get_or_init(|| FemSpace::new(build_disk(1.0, 0.2).unwrap()))
}

fn field() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, space().node_count())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mean_project_is_idempotent_and_linear(u in field(), v in field(), a in -3.0f64..3.0) {
        let s = space();
        let pu = s.mean_project(&u);
        prop_assert!(s.mean(&pu).abs() < 1e-14);
        prop_assert!(max_diff(&s.mean_project(&pu), &pu) < 1e-14);
        let comb: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + y).collect();
        let lhs = s.mean_project(&comb);
        let pv = s.mean_project(&v);
        let rhs: Vec<f64> = pu.iter().zip(pv.iter()).map(|(x, y)| a * x + y).collect();
        prop_assert!(max_diff(&lhs, &rhs) < 1e-13);
    }

    #[test]
    fn norm_is_one_homogeneous(u in field(), t in -5.0f64..5.0, alpha in 0.0f64..3.0) {
        let s = space();
        let u = s.mean_project(&u);
        let params = NormParams::new(N, alpha).unwrap();
        let base = s.norm_1alpha(&u, params).unwrap();
        let scaled = s.norm_1alpha(&u.scaled(t), params).unwrap();
        prop_assert!((scaled - t.abs() * base).abs() <= 1e-12 * (1.0 + base * t.abs()));
    }

    #[test]
    fn energy_is_n_homogeneous(u in field(), t in -4.0f64..4.0) {
        let s = space();
        let e = s.grad_energy(&u, N);
        let et = s.grad_energy(&u.iter().map(|x| t * x).collect::<Vec<_>>(), N);
        prop_assert!((et - t * t * e).abs() <= 1e-12 * (1.0 + t * t * e));
    }

    #[test]
    fn rayleigh_quotient_bounds_lambda1(u in field()) {
        let s = space();
        let lambda1 = lambda1();
        let u = s.mean_project(&u);
        let q = s.stiffness().form(&u, &u) / s.mass().form(&u, &u);
        prop_assert!(q >= lambda1 * (1.0 - 1e-9), "{q} < {lambda1}");
    }

    #[test]
    fn functional_gradient_matches_differences(u in field(), d in field(), beta in 0.5f64..6.0) {
        let s = space();
        let g = mt_gradient(s, &u, beta, N).unwrap();
        let step = 1e-5;
        let plus: Vec<f64> = u.iter().zip(&d).map(|(x, y)| x + step * y).collect();
        let minus: Vec<f64> = u.iter().zip(&d).map(|(x, y)| x - step * y).collect();
        let fd = (mt_functional(s, &plus, beta, N).unwrap() - mt_functional(s, &minus, beta, N).unwrap()) / (2.0 * step);
        let exact: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()), "{fd} vs {exact}");
    }

    #[test]
    fn functional_is_at_least_the_volume(u in field(), beta in 0.0f64..6.0) {
        let s = space();
        prop_assert!(mt_functional(s, &u, beta, N).unwrap() >= s.volume() * (1.0 - 1e-14));
    }

    #[test]
    fn bubble_mass_closed_form(radius in 0.05f64..200.0) {
        let closed = 2.0 * (1.0 - 1.0 / (1.0 + 0.5 * PI * radius * radius));
        prop_assert!((bubble_mass(N, radius).unwrap() - closed).abs() < 1e-10);
    }

    #[test]
    fn blowup_scale_inverts(lambda in 1e-3f64..50.0, c in 0.05f64..4.0, beta in 0.1f64..6.2) {
        let r = blowup_scale(lambda, c, beta, N).unwrap();
        let back = r * r * c * c * (beta * c * c).exp();
        let scale = 1.0 + lambda.ln().abs() + beta * c * c;
        prop_assert!((back - lambda).abs() <= 4.0 * scale * f64::EPSILON * lambda);
    }

    #[test]
    fn capacity_homogeneity(c1 in -2.0f64..2.0, gap in 0.1f64..3.0, a in -2.0f64..2.0, jump in 0.1f64..3.0,
                            s in 0.2f64..5.0, t in 0.2f64..5.0, n in 2u32..6) {
        let dim = Dimension::new(n).unwrap();
        let base = capacity_minimizer_energy(CapacitySpec { c1, c2: c1 + gap, a, b: a + jump }, dim).unwrap();
        let scaled = capacity_minimizer_energy(CapacitySpec { c1, c2: c1 + t * gap, a, b: a + s * jump }, dim).unwrap();
        let nf = n as f64;
        let expect = base * s.powf(nf) * t.powf(1.0 - nf);
        prop_assert!((scaled - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn truncation_nonincreasing_in_level(u in field(), c in 1.01f64..5.0, dc in 0.0f64..5.0) {
        let s = space();
        let peak = u.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(1e-3);
        let lo = truncation_energy(s, &u, c, peak, N).unwrap();
        let hi = truncation_energy(s, &u, c + dc, peak, N).unwrap();
        prop_assert!(hi <= lo * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn concentration_nondecreasing_in_radius(u in field(), r in 0.01f64..2.0, dr in 0.0f64..2.0, cx in -0.9f64..0.9) {
        let s = space();
        let a = gradient_concentration(s, &u, [cx, 0.0], r, N).unwrap();
        let b = gradient_concentration(s, &u, [cx, 0.0], r + dr, N).unwrap();
        prop_assert!((0.0..=1.0).contains(&a) && b >= a);
    }
}

fn lambda1() -> f64 {
    static L: OnceLock<f64> = OnceLock::new();
    *L.get_or_init(|| space().neumann_eigenvalue(N, Default::default()).unwrap().lambda1)
}
