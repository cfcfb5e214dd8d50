//! Discrete probability measures and the potential theory of `[-1, 1]`.
//!
//! Large sums are split into fixed-size blocks, each summed pairwise, and the
//! block results are combined pairwise in index order, so the result does not
//! depend on the number of worker threads.

use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BLOCK: usize = 1024;

/// Marker returned when a potential or energy diverges.
pub const INFINITE: f64 = f64::INFINITY;

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sum `f(i)` over `0..n` in fixed blocks, in parallel, deterministically.
fn blocked_sum<F: Fn(usize) -> f64 + Sync>(n: usize, f: F) -> f64 {
    let blocks: Vec<f64> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let terms: Vec<f64> = (b * BLOCK..((b + 1) * BLOCK).min(n)).map(&f).collect();
            pairwise_sum(&terms)
        })
        .collect();
    pairwise_sum(&blocks)
}

/// A probability measure with finitely many atoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMeasure {
    points: Vec<Complex64>,
    weights: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    re: f64,
    im: f64,
    weight: f64,
}

impl EmpiricalMeasure {
    /// Weights must be positive and sum to 1 within `1e-12`.
    pub fn new(points: Vec<Complex64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidMeasure(format!("weight {w} is not positive")));
        }
        if points
            .iter()
            .any(|p| !(p.re.is_finite() && p.im.is_finite()))
        {
            return Err(Error::InvalidMeasure("non-finite atom".into()));
        }
        let total = pairwise_sum(&weights);
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(Self { points, weights })
    }

    /// Equal weights `1 / len`.
    pub fn uniform(points: Vec<Complex64>) -> Result<Self> {
        let w = 1.0 / points.len() as f64;
        let weights = vec![w; points.len()];
        Self::new(points, weights)
    }

    pub fn uniform_real(points: &[f64]) -> Result<Self> {
        Self::uniform(points.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `sum_i w_i |Im p_i|`.
    pub fn mean_abs_im(&self) -> f64 {
        blocked_sum(self.len(), |i| self.weights[i] * self.points[i].im.abs())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (p, &weight) in self.points.iter().zip(&self.weights) {
            w.serialize(CsvRow {
                re: p.re,
                im: p.im,
                weight,
            })
            .map_err(|e| Error::Parse(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for row in csv::Reader::from_reader(input).deserialize::<CsvRow>() {
            let row = row.map_err(|e| Error::Parse(e.to_string()))?;
            points.push(Complex64::new(row.re, row.im));
            weights.push(row.weight);
        }
        Self::new(points, weights)
    }
}

/// Distribution function of the arcsine (equilibrium) measure of `[-1, 1]`.
pub fn arcsine_cdf(x: f64) -> f64 {
    if x <= -1.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        0.5 + x.asin() / std::f64::consts::PI
    }
}

/// The `n` points with arcsine CDF values `(k - 1/2) / n`, ascending.
pub fn arcsine_quantiles(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| -(std::f64::consts::PI * (k as f64 - 0.5) / n as f64).cos())
        .collect()
}

/// Green function of `C \ [-1, 1]` with pole at infinity,
/// `log |z + sqrt(z^2 - 1)|` on the branch giving a nonnegative value.
pub fn green_complement_interval(z: Complex64) -> f64 {
    if z.im == 0.0 && z.re.abs() <= 1.0 {
        return 0.0;
    }
    let s = (z * z - 1.0).sqrt();
    let w = if (z + s).norm() >= (z - s).norm() {
        z + s
    } else {
        z - s
    };
    w.norm().ln().max(0.0)
}

/// `U(z) = sum_i w_i log(1 / |p_i - z|)`; [`INFINITE`] on a support point.
pub fn log_potential(mu: &EmpiricalMeasure, z: Complex64) -> f64 {
    if mu.points.iter().any(|p| (p - z).norm() < 1e-300) {
        return INFINITE;
    }
    blocked_sum(mu.len(), |i| {
        -mu.weights[i] * (mu.points[i] - z).norm().ln()
    })
}

/// Discrete energy `sum_{i != j} w_i w_j log(1 / |p_i - p_j|)`, the plain
/// off-diagonal sum (the diagonal is dropped, not renormalized).
/// [`INFINITE`] if two atoms coincide.
pub fn energy(mu: &EmpiricalMeasure) -> Result<f64> {
    let n = mu.len();
    if n < 2 {
        return Err(Error::InvalidMeasure(
            "energy needs at least two atoms".into(),
        ));
    }
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = mu.points[i];
            let terms: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = (pi - mu.points[j]).norm();
                    if d == 0.0 {
                        INFINITE
                    } else {
                        -mu.weights[j] * d.ln()
                    }
                })
                .collect();
            mu.weights[i] * pairwise_sum(&terms)
        })
        .collect();
    Ok(pairwise_sum(&rows))
}

/// Kolmogorov–Smirnov distance between a real-supported measure and `cdf`.
pub fn ks_distance_real<F: Fn(f64) -> f64>(mu: &EmpiricalMeasure, cdf: F) -> Result<f64> {
    let worst_im = mu.points.iter().map(|p| p.im.abs()).fold(0.0, f64::max);
    if worst_im > 1e-6 {
        return Err(Error::ComplexSupport(worst_im));
    }
    let mut atoms: Vec<(f64, f64)> = mu
        .points
        .iter()
        .map(|p| p.re)
        .zip(mu.weights.iter().copied())
        .collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut below = 0.0;
    let mut dist = 0.0f64;
    let mut i = 0;
    while i < atoms.len() {
        let x = atoms[i].0;
        let mut mass = 0.0;
        while i < atoms.len() && atoms[i].0 == x {
            mass += atoms[i].1;
            i += 1;
        }
        let f = cdf(x);
        dist = dist.max((below - f).abs()).max((below + mass - f).abs());
        below += mass;
    }
    Ok(dist.min(1.0))
}

pub const MAX_MOMENT: usize = 32;

/// `m_k = sum_i w_i T_k(p_i)` for `k = 0..=k_max`, with `T_k` continued to
/// complex arguments by its recurrence. `m_0 = 1` exactly.
pub fn chebyshev_moments(mu: &EmpiricalMeasure, k_max: usize) -> Result<Vec<Complex64>> {
    if k_max > MAX_MOMENT {
        return Err(Error::InvalidArgument(format!(
            "k_max = {k_max} exceeds {MAX_MOMENT}"
        )));
    }
    let mut moments = vec![Complex64::new(1.0, 0.0)];
    for k in 1..=k_max {
        let term = |i: usize, part: fn(Complex64) -> f64| {
            let z = mu.points[i];
            let (mut prev, mut cur) = (Complex64::new(1.0, 0.0), z);
            for _ in 1..k {
                let next = 2.0 * z * cur - prev;
                prev = cur;
                cur = next;
            }
            mu.weights[i] * part(cur)
        };
        let re = blocked_sum(mu.len(), |i| term(i, |c| c.re));
        let im = blocked_sum(mu.len(), |i| term(i, |c| c.im));
        moments.push(Complex64::new(re, im));
    }
    Ok(moments)
}

/// Per-index convergence diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub schema_version: u32,
    pub n: usize,
    pub ks: Option<f64>,
    pub moments: Vec<Complex64>,
    pub green_gap: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn circle(n: usize) -> EmpiricalMeasure {
        EmpiricalMeasure::uniform(
            (0..n)
                .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn arcsine_cdf_values() {
        assert_eq!(arcsine_cdf(0.0), 0.5);
        assert_abs_diff_eq!(arcsine_cdf(0.5f64.sqrt()), 0.75, epsilon = 1e-15);
        assert_eq!(arcsine_cdf(-1.0), 0.0);
        assert_eq!(arcsine_cdf(3.0), 1.0);
    }

    #[test]
    fn green_values() {
        assert_abs_diff_eq!(
            green_complement_interval(Complex64::new(2.0, 0.0)),
            (2.0 + 3f64.sqrt()).ln(),
            epsilon = 1e-15
        );
        assert_eq!(green_complement_interval(Complex64::new(0.5, 0.0)), 0.0);
        assert_abs_diff_eq!(
            green_complement_interval(Complex64::new(0.0, 1.0)),
            (1.0 + 2f64.sqrt()).ln(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            green_complement_interval(Complex64::new(-2.0, 0.0)),
            (2.0 + 3f64.sqrt()).ln(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn potential_values() {
        let delta = EmpiricalMeasure::uniform(vec![Complex64::new(0.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(
            log_potential(&delta, Complex64::new(std::f64::consts::E, 0.0)),
            -1.0,
            epsilon = 1e-15
        );
        assert_eq!(log_potential(&delta, Complex64::new(0.0, 0.0)), INFINITE);
        assert_abs_diff_eq!(
            log_potential(&circle(1024), Complex64::new(0.0, 0.0)),
            0.0,
            epsilon = 1e-3
        );
        let q = EmpiricalMeasure::uniform_real(&arcsine_quantiles(512)).unwrap();
        let expected = 2f64.ln() - (2.0 + 3f64.sqrt()).ln();
        assert_abs_diff_eq!(
            log_potential(&q, Complex64::new(2.0, 0.0)),
            expected,
            epsilon = 5e-3
        );
    }

    #[test]
    fn energy_values() {
        let q = EmpiricalMeasure::uniform_real(&arcsine_quantiles(512)).unwrap();
        assert_abs_diff_eq!(energy(&q).unwrap(), 2f64.ln(), epsilon = 2e-2);
        let pair = EmpiricalMeasure::uniform_real(&[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(energy(&pair).unwrap(), 0.0, epsilon = 1e-15);
        let dup = EmpiricalMeasure::uniform_real(&[0.3, 0.3, 0.5]).unwrap();
        assert_eq!(energy(&dup).unwrap(), INFINITE);
        assert!(energy(&EmpiricalMeasure::uniform_real(&[0.1]).unwrap()).is_err());
    }

    #[test]
    fn circle_energy_matches_roots_of_unity_product() {
        // prod_{j != i} |w_i - w_j| = N for the N-th roots of unity
        let n = 256;
        assert_abs_diff_eq!(
            energy(&circle(n)).unwrap(),
            -(n as f64).ln() / n as f64,
            epsilon = 1e-12
        );
    }

    #[test]
    fn energy_refinement_does_not_drift() {
        let mut prev = f64::INFINITY;
        for n in [64, 128, 256, 512, 1024] {
            let q = EmpiricalMeasure::uniform_real(&arcsine_quantiles(n)).unwrap();
            let gap = (energy(&q).unwrap() - 2f64.ln()).abs();
            assert!(gap <= prev + 1e-3);
            prev = gap;
        }
    }

    #[test]
    fn ks_values() {
        let n = 200;
        let q = EmpiricalMeasure::uniform_real(&arcsine_quantiles(n)).unwrap();
        assert!(ks_distance_real(&q, arcsine_cdf).unwrap() <= 0.5 / n as f64 + 1e-12);
        let delta = EmpiricalMeasure::uniform_real(&[0.0]).unwrap();
        assert_abs_diff_eq!(
            ks_distance_real(&delta, arcsine_cdf).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert!(matches!(
            ks_distance_real(&circle(8), arcsine_cdf),
            Err(Error::ComplexSupport(_))
        ));
    }

    #[test]
    fn moment_values() {
        let q = EmpiricalMeasure::uniform_real(&arcsine_quantiles(4096)).unwrap();
        let m = chebyshev_moments(&q, 6).unwrap();
        assert_eq!(m[0], Complex64::new(1.0, 0.0));
        assert!(m[1..].iter().all(|c| c.norm() <= 2e-3));
        let one = EmpiricalMeasure::uniform_real(&[1.0]).unwrap();
        assert!(chebyshev_moments(&one, 10)
            .unwrap()
            .iter()
            .all(|c| (c - 1.0).norm() < 1e-14));
        assert!(chebyshev_moments(&one, 33).is_err());
    }

    #[test]
    fn invalid_measures() {
        assert!(EmpiricalMeasure::new(vec![], vec![]).is_err());
        assert!(EmpiricalMeasure::new(vec![Complex64::new(0.0, 0.0)], vec![0.5]).is_err());
        assert!(EmpiricalMeasure::new(vec![Complex64::new(0.0, 0.0); 2], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mu = EmpiricalMeasure::new(
            vec![Complex64::new(0.1, -0.2), Complex64::new(1.0 / 3.0, 0.0)],
            vec![0.25, 0.75],
        )
        .unwrap();
        let mut buf = Vec::new();
        mu.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"re,im,weight\n"));
        assert_eq!(EmpiricalMeasure::read_csv(buf.as_slice()).unwrap(), mu);
    }

    proptest! {
        #[test]
        fn green_continuous_across_cut(x in -0.999f64..0.999) {
            let up = green_complement_interval(Complex64::new(x, 1e-9));
            let down = green_complement_interval(Complex64::new(x, -1e-9));
            prop_assert!((up - down).abs() <= 1e-8);
            prop_assert!(up <= 1e-7);
        }

        #[test]
        fn potential_of_equilibrium_matches_green(r in 1.6f64..4.0, theta in 0.0f64..std::f64::consts::TAU) {
            // ellipse points stay at distance >= 0.5 from the interval
            let z = Complex64::new(r * theta.cos(), r * theta.sin());
            prop_assume!(z.im.abs() >= 0.5 || z.re.abs() >= 1.5);
            let q = EmpiricalMeasure::uniform_real(&arcsine_quantiles(512)).unwrap();
            let expected = 2f64.ln() - green_complement_interval(z);
            prop_assert!((log_potential(&q, z) - expected).abs() <= 5e-3);
        }
    }
}
