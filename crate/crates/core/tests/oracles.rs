#![allow(clippy::approx_constant, clippy::excessive_precision)]

use std::f64::consts::PI;

use mtlab::constants::{capacity_upper_bound, sharp_constants, Dimension};
use mtlab::fem::{EigOptions, FemSpace};
use mtlab::mesh::{build_disk, build_rectangle};
use nalgebra::{DMatrix, SymmetricEigen};

// ω_{n-1}, β_n, α_n for n = 2..6 at 25 significant digits
const HIGH_PRECISION: [(u32, f64, f64, f64); 5] = [
    (2, 6.283185307179586476925287, 6.283185307179586476925287, 12.56637061435917295385057),
    (3, 12.56637061435917295385057, 7.519884823893001507247296, 10.634723105433096163789),
    (4, 19.73920880217871723766898, 8.580117588444102400309776, 10.81027076025396075450749),
    (5, 26.31894506957162298355864, 9.523128068639573458338104, 11.32497165630830219405489),
    (6, 31.00627668029982017547632, 10.38090400125981763125061, 11.92452734962929113082973),
];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn sharp_constants_against_high_precision() {
    for (n, omega, beta, alpha) in HIGH_PRECISION {
        let c = sharp_constants(Dimension::new(n).unwrap());
        assert!(rel(c.omega, omega) < 1e-12, "n={n}");
        assert!(rel(c.beta_n, beta) < 1e-12, "n={n}");
        assert!(rel(c.alpha_n, alpha) < 1e-12, "n={n}");
    }
    assert_eq!(sharp_constants(Dimension::TWO).beta_n, 2.0 * PI);
}

#[test]
fn capacity_bound_against_direct_evaluation() {
    for (n, omega, beta, _) in HIGH_PRECISION {
        let harmonic: f64 = (1..n).map(|k| 1.0 / k as f64).sum();
        for (a_p, vol) in [(0.0398, PI), (-0.3, 1.0), (0.25, 2.5)] {
            let direct = vol + omega / (2.0 * n as f64) * (beta * a_p + harmonic).exp();
            let got = capacity_upper_bound(Dimension::new(n).unwrap(), a_p, vol).unwrap();
            assert!(rel(got, direct) < 1e-12, "n={n}");
        }
    }
}

/// Second smallest eigenvalue of the dense pencil `K u = λ M u`.
fn dense_lambda1(space: &FemSpace) -> f64 {
    let nn = space.node_count();
    let dense = |m: &mtlab::sparse::CsrMatrix| {
        let mut d = DMatrix::zeros(nn, nn);
        for i in 0..nn {
            for (j, v) in m.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    };
    let (k, m) = (dense(space.stiffness()), dense(space.mass()));
    let l = m.cholesky().unwrap().l();
    let linv = l.clone().try_inverse().unwrap();
    let sym = &linv * k * linv.transpose();
    let sym = (&sym + sym.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev[1]
}

#[test]
fn eigenvalue_matches_dense_oracle() {
    for mesh in [build_disk(1.0, 0.2).unwrap(), build_rectangle(1.0, 1.0, 0.1).unwrap()] {
        let s = FemSpace::new(mesh);
        let it = s.neumann_eigenvalue(Dimension::TWO, EigOptions::default()).unwrap();
        let oracle = dense_lambda1(&s);
        assert!(rel(it.lambda1, oracle) < 1e-8, "{} vs {}", it.lambda1, oracle);
    }
}

#[test]
fn eigenvalue_refinement_trend() {
    // P1 eigenvalues approach from above under nested refinement
    let mut mesh = build_rectangle(1.0, 1.0, 0.2).unwrap();
    let mut last = f64::INFINITY;
    for _ in 0..3 {
        let s = FemSpace::new(mesh.clone());
        let l = s.neumann_eigenvalue(Dimension::TWO, EigOptions::default()).unwrap().lambda1;
        assert!(l < last && l > PI * PI);
        last = l;
        mesh = mesh.refine();
    }
    assert!(rel(last, PI * PI) < 0.01);
}
