//! Potential-theory quantities against closed forms for `[-1, 1]` and the circle.

use std::f64::consts::{LN_2, PI, TAU};

use approx::assert_relative_eq;
use proptest::prelude::*;
use xjulia_core::measure::{
    arcsine_cdf, arcsine_quantiles, chebyshev_moments, energy, green_complement_interval,
    ks_distance_real, log_potential, EmpiricalMeasure, INFINITE,
};
use xjulia_core::{Complex64, Error};

fn circle(n: usize) -> EmpiricalMeasure {
    EmpiricalMeasure::uniform(
        (0..n)
            .map(|k| Complex64::from_polar(1.0, TAU * k as f64 / n as f64))
            .collect(),
    )
    .unwrap()
}

fn quantiles(n: usize) -> EmpiricalMeasure {
    EmpiricalMeasure::uniform_real(&arcsine_quantiles(n)).unwrap()
}

fn delta(z: Complex64) -> EmpiricalMeasure {
    EmpiricalMeasure::uniform(vec![z]).unwrap()
}

/// `g(z)` through the Joukowski inverse written with real arithmetic:
/// `cosh g = (|z - 1| + |z + 1|) / 2`.
fn green_oracle(z: Complex64) -> f64 {
    let s = ((z - 1.0).norm() + (z + 1.0).norm()) / 2.0;
    s.max(1.0).acosh()
}

#[test]
fn arcsine_cdf_values() {
    assert_eq!(arcsine_cdf(0.0), 0.5);
    assert_relative_eq!(arcsine_cdf(2f64.sqrt() / 2.0), 0.75, epsilon = 1e-15);
    assert_eq!(arcsine_cdf(-1.0), 0.0);
    assert_eq!(arcsine_cdf(1.0), 1.0);
}

#[test]
fn green_values() {
    assert_relative_eq!(
        green_complement_interval(Complex64::new(2.0, 0.0)),
        1.3169578969248166,
        epsilon = 1e-14
    );
    assert_eq!(green_complement_interval(Complex64::new(0.5, 0.0)), 0.0);
    assert_relative_eq!(
        green_complement_interval(Complex64::new(0.0, 1.0)),
        0.881373587019543,
        epsilon = 1e-14
    );
}

#[test]
fn potential_examples() {
    assert_relative_eq!(
        log_potential(
            &delta(Complex64::new(0.0, 0.0)),
            Complex64::new(std::f64::consts::E, 0.0)
        ),
        -1.0,
        epsilon = 1e-15
    );
    assert!(log_potential(&circle(1024), Complex64::new(0.0, 0.0)).abs() <= 1e-3);
    let u = log_potential(&quantiles(512), Complex64::new(2.0, 0.0));
    assert!((u - (LN_2 - 1.3169578969248166)).abs() <= 5e-3, "{u}");
    assert_eq!(
        log_potential(&delta(Complex64::new(0.5, 0.0)), Complex64::new(0.5, 0.0)),
        INFINITE
    );
}

#[test]
fn energy_examples() {
    let e = energy(&quantiles(512)).unwrap();
    assert!((e - LN_2).abs() <= 2e-2, "{e}");
    let pair = EmpiricalMeasure::uniform(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
        .unwrap();
    assert_eq!(energy(&pair).unwrap(), 0.0);
    // prod_{j != 0} |1 - w^j| = N for the N-th roots of unity, so the plain
    // off-diagonal sum is exactly -ln(N) / N.
    let n = 256;
    assert_relative_eq!(
        energy(&circle(n)).unwrap(),
        -(n as f64).ln() / n as f64,
        max_relative = 1e-12
    );
    let dup = EmpiricalMeasure::uniform(vec![Complex64::new(0.1, 0.0); 2]).unwrap();
    assert_eq!(energy(&dup).unwrap(), INFINITE);
}

#[test]
fn energy_refinement_does_not_drift() {
    let mut prev = (energy(&quantiles(64)).unwrap() - LN_2).abs();
    for n in [128, 256, 512, 1024] {
        let cur = (energy(&quantiles(n)).unwrap() - LN_2).abs();
        assert!(cur <= prev + 1e-3, "n={n}: {cur} after {prev}");
        prev = cur;
    }
}

#[test]
fn potential_matches_green_off_the_interval() {
    let mu = quantiles(512);
    let mut count = 0;
    for k in 0..20 {
        let theta = TAU * (k as f64 + 0.25) / 20.0;
        let z = Complex64::new(1.6 * theta.cos(), 0.9 * theta.sin());
        let dist = if z.re.abs() <= 1.0 {
            z.im.abs()
        } else {
            Complex64::new(z.re.abs() - 1.0, z.im).norm()
        };
        assert!(dist >= 0.5);
        let want = LN_2 - green_oracle(z);
        assert!((log_potential(&mu, z) - want).abs() <= 5e-3, "z={z}");
        count += 1;
    }
    assert_eq!(count, 20);
}

#[test]
fn ks_examples() {
    let n = 300;
    assert!(
        ks_distance_real(&quantiles(n), arcsine_cdf).unwrap() <= 1.0 / (2.0 * n as f64) + 1e-12
    );
    assert_relative_eq!(
        ks_distance_real(&delta(Complex64::new(0.0, 0.0)), arcsine_cdf).unwrap(),
        0.5,
        epsilon = 1e-15
    );
    assert!(matches!(
        ks_distance_real(&circle(8), arcsine_cdf),
        Err(Error::ComplexSupport(_))
    ));
}

#[test]
fn moment_examples() {
    let m = chebyshev_moments(&quantiles(4096), 6).unwrap();
    assert!(m[1..].iter().all(|c| c.norm() <= 2e-3));
    let m = chebyshev_moments(&delta(Complex64::new(1.0, 0.0)), 6).unwrap();
    assert!(m.iter().all(|&c| (c - 1.0).norm() <= 1e-15));
}

proptest! {
    #[test]
    fn green_matches_real_formula(re in -4.0f64..4.0, im in -4.0f64..4.0) {
        let z = Complex64::new(re, im);
        prop_assert!((green_complement_interval(z) - green_oracle(z)).abs() <= 1e-10);
    }

    #[test]
    fn green_continuous_across_cut(x in -0.999f64..0.999) {
        let up = green_complement_interval(Complex64::new(x, 1e-9));
        let down = green_complement_interval(Complex64::new(x, -1e-9));
        prop_assert!((up - down).abs() <= 1e-8);
        prop_assert!(up <= 1e-7);
    }

    #[test]
    fn ks_is_permutation_invariant(xs in prop::collection::vec(-1.0f64..1.0, 1..200), rot in 0usize..200) {
        let mut ys = xs.clone();
        let r = rot % ys.len();
        ys.rotate_left(r);
        let a = ks_distance_real(&EmpiricalMeasure::uniform_real(&xs).unwrap(), arcsine_cdf).unwrap();
        let b = ks_distance_real(&EmpiricalMeasure::uniform_real(&ys).unwrap(), arcsine_cdf).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn moments_of_a_point_are_cosines(x in -1.0f64..1.0, k in 0usize..32) {
        let m = chebyshev_moments(&delta(Complex64::new(x, 0.0)), k).unwrap();
        prop_assert!((m[k].re - (k as f64 * x.acos()).cos()).abs() <= 1e-12);
        prop_assert_eq!(m[k].im, 0.0);
    }

    #[test]
    fn potential_of_a_point_mass(re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let z = Complex64::new(re, im);
        let w = Complex64::new(0.25, -0.5);
        prop_assume!((z - w).norm() > 1e-6);
        prop_assert!((log_potential(&delta(w), z) + (z - w).norm().ln()).abs() <= 1e-14);
    }

    #[test]
    fn csv_round_trip(pts in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..50)) {
        let mu = EmpiricalMeasure::uniform(pts.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap();
        let mut buf = Vec::new();
        mu.write_csv(&mut buf).unwrap();
        prop_assert_eq!(EmpiricalMeasure::read_csv(buf.as_slice()).unwrap(), mu);
    }
}

#[test]
fn arcsine_quantiles_are_symmetric() {
    let q = arcsine_quantiles(101);
    for (a, b) in q.iter().zip(q.iter().rev()) {
        assert!((a + b).abs() <= 1e-15);
    }
    assert!(q.windows(2).all(|w| w[0] < w[1]));
    assert_relative_eq!(q[0], -(PI / 202.0).cos(), epsilon = 1e-15);
}
