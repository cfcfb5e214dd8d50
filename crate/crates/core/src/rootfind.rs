//! Simultaneous polynomial root finding (Aberth–Ehrlich).
//!
//! The iteration only needs `p` and `p'` at points, so it runs equally on a
//! coefficient vector or on a recurrence-evaluated function such as an
//! exceptional Jacobi polynomial, which avoids the ill-conditioned monomial
//! expansion entirely.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::{Basis, Poly};

/// Corrections below this (relative) size that fail to halve are treated as
/// rounding noise.
const NOISE_FLOOR: f64 = 1e-9;

/// Anything that can report its value and derivative at a point.
pub trait Evaluator {
    fn degree(&self) -> usize;

    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64);

    fn eval(&self, z: Complex64) -> Complex64 {
        self.eval_with_derivative(z).0
    }
}

/// A `Poly` paired with its derivative.
#[derive(Debug, Clone)]
pub struct PolyEvaluator {
    poly: Poly,
    deriv: Poly,
    degree: usize,
}

impl PolyEvaluator {
    pub fn new(poly: &Poly) -> Self {
        let poly = poly.trimmed();
        Self {
            deriv: poly.derivative(),
            degree: poly.degree(),
            poly,
        }
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }
}

impl Evaluator for PolyEvaluator {
    fn degree(&self) -> usize {
        self.degree
    }

    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        if self.poly.basis() == Basis::Monomial {
            // Horner for value and derivative in one pass
            let mut p = Complex64::new(0.0, 0.0);
            let mut dp = Complex64::new(0.0, 0.0);
            for &c in self.poly.coeffs().iter().rev() {
                dp = dp * z + p;
                p = p * z + c;
            }
            (p, dp)
        } else {
            (self.poly.eval(z), self.deriv.eval(z))
        }
    }

    fn eval(&self, z: Complex64) -> Complex64 {
        self.poly.eval(z)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AberthOptions {
    pub max_sweeps: usize,
    /// Stop once every correction is below `tol * (1 + |root|)`.
    pub tol: f64,
    /// Enforce `|p(r)| <= residual_factor * max_{|z| = 1 + |r|} |p(z)|`.
    pub check_residual: bool,
    pub residual_factor: f64,
}

impl Default for AberthOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 500,
            tol: 1e-13,
            check_residual: true,
            residual_factor: 1e-8,
        }
    }
}

/// Initial guesses on a circle, rotated off the axes so that real
/// polynomials do not start on a symmetry line.
pub fn circle_guesses(center: Complex64, radius: f64, count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / count as f64 + 0.4;
            center + Complex64::from_polar(radius, theta)
        })
        .collect()
}

/// Center and radius enclosing the roots of a monomial-basis polynomial
/// (Fujiwara's bound about the root centroid).
pub fn root_disk(p: &Poly) -> (Complex64, f64) {
    let mono = p.to_monomial().trimmed();
    let d = mono.degree();
    let c = mono.coeffs();
    let lead = c[d];
    if d == 0 {
        return (Complex64::new(0.0, 0.0), 1.0);
    }
    let center = -c[d - 1] / (lead * d as f64);
    // shift to the centroid: coefficients of p(z + center)
    let mut shifted = c.to_vec();
    for i in 0..d {
        for j in (i..d).rev() {
            let t = shifted[j + 1] * center;
            shifted[j] += t;
        }
    }
    let bound = (1..=d)
        .map(|k| {
            let ratio = (shifted[d - k] / lead).norm();
            let r = if k == d { ratio / 2.0 } else { ratio };
            r.powf(1.0 / k as f64)
        })
        .fold(0.0, f64::max);
    (center, (2.0 * bound).max(1e-3))
}

/// All roots of `p` (with multiplicity).
pub fn roots(p: &Poly) -> Result<Vec<Complex64>> {
    roots_with(p, &AberthOptions::default())
}

pub fn roots_with(p: &Poly, opts: &AberthOptions) -> Result<Vec<Complex64>> {
    let eval = PolyEvaluator::new(p);
    let d = eval.degree();
    if d == 0 {
        return Err(Error::DegreeTooLow(0));
    }
    let (center, radius) = root_disk(eval.poly());
    aberth(&eval, circle_guesses(center, radius, d), opts)
}

/// Aberth–Ehrlich iteration from the given starting points (one per root),
/// updating in place (Gauss–Seidel order).
pub fn aberth<E: Evaluator>(
    f: &E,
    mut z: Vec<Complex64>,
    opts: &AberthOptions,
) -> Result<Vec<Complex64>> {
    let d = f.degree();
    if d == 0 {
        return Err(Error::DegreeTooLow(0));
    }
    if z.len() != d {
        return Err(Error::InvalidArgument(format!(
            "{} starting points for degree {d}",
            z.len()
        )));
    }
    // A root stops moving once its correction is below `tol`, or once the
    // corrections are small and no longer shrinking (rounding noise floor).
    let mut done = vec![false; d];
    let mut last_step = vec![f64::INFINITY; d];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (p, dp) = f.eval_with_derivative(z[i]);
            if p == Complex64::new(0.0, 0.0) {
                done[i] = true;
                continue;
            }
            let newton = p / dp;
            let repulsion: Complex64 = (0..d)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let mut step = newton / (Complex64::new(1.0, 0.0) - newton * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                step = if newton.re.is_finite() && newton.im.is_finite() {
                    newton
                } else {
                    // coincident iterate or a critical point: nudge
                    Complex64::new(1e-8, 1e-8) * (1.0 + z[i].norm())
                };
            }
            let rel = step.norm() / (1.0 + z[i].norm());
            if rel <= NOISE_FLOOR && rel >= 0.5 * last_step[i] {
                done[i] = true;
                continue;
            }
            z[i] -= step;
            last_step[i] = rel;
            if rel <= opts.tol {
                done[i] = true;
            }
        }
        if done.iter().all(|&x| x) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps,
            residual: worst_residual(f, &z),
        });
    }
    if opts.check_residual {
        check_residuals(f, &z, opts.residual_factor)?;
    }
    Ok(z)
}

/// A few safeguarded Newton steps against a (more accurate) evaluation form.
pub fn polish<E: Evaluator>(f: &E, roots: &mut [Complex64], steps: usize) {
    for r in roots.iter_mut() {
        let mut best = f.eval(*r).norm();
        for _ in 0..steps {
            let (p, dp) = f.eval_with_derivative(*r);
            let cand = *r - p / dp;
            if !(cand.re.is_finite() && cand.im.is_finite()) {
                break;
            }
            let val = f.eval(cand).norm();
            if val < best {
                best = val;
                *r = cand;
            } else {
                break;
            }
        }
    }
}

fn worst_residual<E: Evaluator>(f: &E, z: &[Complex64]) -> f64 {
    z.iter().map(|&r| f.eval(r).norm()).fold(0.0, f64::max)
}

/// `max_{|z| = radius} |f(z)|`, sampled at 64 points.
pub fn circle_max<E: Evaluator>(f: &E, radius: f64) -> f64 {
    (0..64)
        .map(|k| {
            f.eval(Complex64::from_polar(
                radius,
                std::f64::consts::TAU * k as f64 / 64.0,
            ))
            .norm()
        })
        .fold(0.0, f64::max)
}

pub fn check_residuals<E: Evaluator>(f: &E, z: &[Complex64], factor: f64) -> Result<()> {
    for &r in z {
        let residual = f.eval(r).norm();
        let bound = factor * circle_max(f, 1.0 + r.norm());
        if !(residual <= bound) {
            return Err(Error::RootResidual { residual, bound });
        }
    }
    Ok(())
}

/// Greedy nearest matching, returning the largest matched distance.
pub fn match_distance(found: &[Complex64], expected: &[Complex64]) -> f64 {
    let mut left: Vec<Complex64> = found.to_vec();
    let mut worst = 0.0f64;
    for &e in expected {
        let (idx, dist) = left
            .iter()
            .enumerate()
            .map(|(i, r)| (i, (r - e).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("as many roots as expected values");
        worst = worst.max(dist);
        left.swap_remove(idx);
    }
    worst
}
