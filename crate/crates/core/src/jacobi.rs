//! Classical Jacobi polynomials, orthonormal on [-1, 1] against the
//! unnormalized weight `(1 - x)^alpha (1 + x)^beta`.
//!
//! Everything is evaluated through the three-term recurrence
//!
//! ```text
//! x p_k(x) = a_{k+1} p_{k+1}(x) + b_k p_k(x) + a_k p_{k-1}(x)
//! ```
//!
//! so no monomial coefficients are ever formed. Leading coefficients are the
//! running product `p_0 / (a_1 a_2 ... a_n)`, which stays finite far beyond
//! the degrees where factorial formulas overflow.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Jacobi weight exponents: `w(x) = (1 - x)^alpha (1 + x)^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct JacobiParams {
    alpha: f64,
    beta: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawParams> for JacobiParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        JacobiParams::new(raw.alpha, raw.beta)
    }
}

impl From<JacobiParams> for RawParams {
    fn from(p: JacobiParams) -> Self {
        RawParams {
            alpha: p.alpha,
            beta: p.beta,
        }
    }
}

impl JacobiParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && alpha > -1.0 && beta > -1.0) {
            return Err(Error::InvalidParams { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Parameters `(alpha + da, beta + db)`.
    pub fn shifted(&self, da: f64, db: f64) -> Result<Self> {
        Self::new(self.alpha + da, self.beta + db)
    }

    /// `alpha >= -1/2 && beta >= -1/2`, the range where the Julia-set
    /// convergence results hold. Construction does not enforce it.
    pub fn meets_dynamics_hypothesis(&self) -> bool {
        self.alpha >= -0.5 && self.beta >= -0.5
    }

    pub fn weight(&self, x: f64) -> f64 {
        (1.0 - x).powf(self.alpha) * (1.0 + x).powf(self.beta)
    }

    /// `∫_{-1}^{1} w(x) dx = 2^{a+b+1} Γ(a+1) Γ(b+1) / Γ(a+b+2)`.
    pub fn total_mass(&self) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        let log_mass =
            (a + b + 1.0) * std::f64::consts::LN_2 + libm::lgamma(a + 1.0) + libm::lgamma(b + 1.0)
                - libm::lgamma(a + b + 2.0);
        log_mass.exp()
    }

    /// Diagonal recurrence coefficient `b_k`.
    pub fn diag(&self, k: usize) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        if k == 0 {
            return (b - a) / (a + b + 2.0);
        }
        let s = 2.0 * k as f64 + a + b;
        (b * b - a * a) / (s * (s + 2.0))
    }

    /// Off-diagonal recurrence coefficient `a_k`, `k >= 1`.
    pub fn offdiag(&self, k: usize) -> f64 {
        debug_assert!(k >= 1);
        let (a, b) = (self.alpha, self.beta);
        if k == 1 {
            // the generic formula is 0/0 when a + b = -1
            let s = 2.0 + a + b;
            return (4.0 * (1.0 + a) * (1.0 + b) / (s * s * (s + 1.0))).sqrt();
        }
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        let num = 4.0 * kf * (kf + a) * (kf + b) * (kf + a + b);
        (num / (s * s * (s + 1.0) * (s - 1.0))).sqrt()
    }
}

/// Cached recurrence coefficients for repeated evaluation up to a fixed degree.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiRecurrence {
    params: JacobiParams,
    p0: f64,
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

/// Scalars the recurrence can run over (reals for quadrature, complex for dynamics).
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Mul<f64, Output = Self>
{
    fn from_real(x: f64) -> Self;
}

impl Scalar for f64 {
    fn from_real(x: f64) -> Self {
        x
    }
}

impl Scalar for Complex64 {
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

impl JacobiRecurrence {
    pub fn new(params: JacobiParams, max_degree: usize) -> Self {
        let diag = (0..=max_degree).map(|k| params.diag(k)).collect();
        // offdiag[k] = a_k; index 0 unused
        let offdiag = std::iter::once(0.0)
            .chain((1..=max_degree + 1).map(|k| params.offdiag(k)))
            .collect();
        Self {
            params,
            p0: params.total_mass().sqrt().recip(),
            diag,
            offdiag,
        }
    }

    pub fn params(&self) -> JacobiParams {
        self.params
    }

    pub fn max_degree(&self) -> usize {
        self.diag.len() - 1
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    fn a(&self, k: usize) -> f64 {
        self.offdiag
            .get(k)
            .copied()
            .unwrap_or_else(|| self.params.offdiag(k))
    }

    fn b(&self, k: usize) -> f64 {
        self.diag
            .get(k)
            .copied()
            .unwrap_or_else(|| self.params.diag(k))
    }

    /// `p_n(z)`.
    pub fn eval<T: Scalar>(&self, n: usize, z: T) -> T {
        let mut prev = T::from_real(0.0);
        let mut cur = T::from_real(self.p0);
        for k in 0..n {
            let next =
                ((z - T::from_real(self.b(k))) * cur - prev * self.a(k)) * self.a(k + 1).recip();
            prev = cur;
            cur = next;
        }
        cur
    }

    /// `(p_n(z), p_n'(z))` via the differentiated recurrence.
    pub fn eval_with_derivative<T: Scalar>(&self, n: usize, z: T) -> (T, T) {
        let zero = T::from_real(0.0);
        let (mut prev, mut cur) = (zero, T::from_real(self.p0));
        let (mut dprev, mut dcur) = (zero, zero);
        for k in 0..n {
            let inv = self.a(k + 1).recip();
            let shift = z - T::from_real(self.b(k));
            let next = (shift * cur - prev * self.a(k)) * inv;
            let dnext = (shift * dcur + cur - dprev * self.a(k)) * inv;
            prev = cur;
            cur = next;
            dprev = dcur;
            dcur = dnext;
        }
        (cur, dcur)
    }

    /// `p_0(x), ..., p_{n-1}(x)` summed in squares (the Christoffel sum).
    fn christoffel_sum(&self, n: usize, x: f64) -> f64 {
        let mut prev = 0.0;
        let mut cur = self.p0;
        let mut sum = cur * cur;
        for k in 0..n.saturating_sub(1) {
            let next = ((x - self.b(k)) * cur - self.a(k) * prev) / self.a(k + 1);
            prev = cur;
            cur = next;
            sum += cur * cur;
        }
        sum
    }

    /// `p_n(x) / x^n` for large `|x|`, free of overflow.
    pub fn eval_scaled(&self, n: usize, x: f64) -> f64 {
        let inv = x.recip();
        let mut prev = 0.0;
        let mut cur = self.p0;
        for k in 0..n {
            let next =
                ((1.0 - self.b(k) * inv) * cur - self.a(k) * prev * inv * inv) / self.a(k + 1);
            prev = cur;
            cur = next;
        }
        cur
    }

    /// Leading coefficient of `p_n`: `p_0 / prod_{k=1}^{n} a_k`.
    pub fn leading_coeff(&self, n: usize) -> f64 {
        (1..=n).fold(self.p0, |acc, k| acc / self.a(k))
    }
}

/// `p_n^{(alpha,beta)}(z)`, orthonormal with positive leading coefficient.
pub fn eval_orthonormal(params: JacobiParams, n: usize, z: Complex64) -> Complex64 {
    JacobiRecurrence::new(params, n).eval(n, z)
}

/// `(p_n)'(z) = sqrt(n (n + alpha + beta + 1)) p_{n-1}^{(alpha+1, beta+1)}(z)`.
pub fn eval_derivative(params: JacobiParams, n: usize, z: Complex64) -> Complex64 {
    if n == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let shifted = JacobiParams {
        alpha: params.alpha + 1.0,
        beta: params.beta + 1.0,
    };
    derivative_factor(params, n) * eval_orthonormal(shifted, n - 1, z)
}

/// `sqrt(n (n + alpha + beta + 1))`.
pub fn derivative_factor(params: JacobiParams, n: usize) -> f64 {
    let nf = n as f64;
    (nf * (nf + params.alpha + params.beta + 1.0)).sqrt()
}

pub fn leading_coeff(params: JacobiParams, n: usize) -> f64 {
    JacobiRecurrence::new(params, n).leading_coeff(n)
}

/// Gauss rule for `∫_{-1}^{1} f(x) (1-x)^alpha (1+x)^beta dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    params: JacobiParams,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn params(&self) -> JacobiParams {
        self.params
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Nodes are the zeros of `p_order`, found by Newton from asymptotic
/// angle guesses; on any sign of trouble the whole set is recomputed by
/// bracketing sign changes and bisecting. Weights are Christoffel numbers
/// `1 / sum_{k < order} p_k(x)^2`.
pub fn gauss_jacobi(params: JacobiParams, order: usize) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(Error::InvalidArgument(
            "quadrature order must be at least 1".into(),
        ));
    }
    let rec = JacobiRecurrence::new(params, order);
    let nodes = match newton_nodes(&rec, order) {
        Some(nodes) => nodes,
        None => bracketed_nodes(&rec, order)?,
    };
    let weights = nodes
        .iter()
        .map(|&x| rec.christoffel_sum(order, x).recip())
        .collect();
    Ok(QuadratureRule {
        nodes,
        weights,
        params,
    })
}

fn newton_refine(rec: &JacobiRecurrence, n: usize, mut x: f64) -> Option<f64> {
    for _ in 0..100 {
        let (p, dp) = rec.eval_with_derivative(n, x);
        if dp == 0.0 || !dp.is_finite() {
            return None;
        }
        let step = p / dp;
        x -= step;
        if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-3) {
            return Some(x);
        }
    }
    None
}

fn newton_nodes(rec: &JacobiRecurrence, n: usize) -> Option<Vec<f64>> {
    let (a, b) = (rec.params.alpha, rec.params.beta);
    let denom = n as f64 + 0.5 * (a + b + 1.0);
    let mut nodes = Vec::with_capacity(n);
    for k in 1..=n {
        let theta = (k as f64 + 0.5 * a - 0.25) * std::f64::consts::PI / denom;
        let guess = theta.clamp(1e-3, std::f64::consts::PI - 1e-3).cos();
        nodes.push(newton_refine(rec, n, guess)?);
    }
    nodes.sort_by(f64::total_cmp);
    let inside = nodes.iter().all(|&x| x > -1.0 && x < 1.0);
    let distinct = nodes.windows(2).all(|w| w[1] - w[0] > 1e-14);
    (inside && distinct).then_some(nodes)
}

fn bracketed_nodes(rec: &JacobiRecurrence, n: usize) -> Result<Vec<f64>> {
    // sample uniformly in angle so the endpoint clusters are resolved
    let samples = 40 * n + 40;
    let mut xs: Vec<f64> = (1..samples)
        .map(|i| (std::f64::consts::PI * i as f64 / samples as f64).cos())
        .collect();
    xs.reverse();
    let mut nodes = Vec::with_capacity(n);
    let mut prev_x = xs[0];
    let mut prev_p = rec.eval(n, prev_x);
    for &x in &xs[1..] {
        let p = rec.eval(n, x);
        if p == 0.0 {
            nodes.push(x);
        } else if prev_p != 0.0 && prev_p.signum() != p.signum() {
            let (mut lo, mut hi, mut plo) = (prev_x, x, prev_p);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let pm = rec.eval(n, mid);
                if pm.signum() == plo.signum() {
                    lo = mid;
                    plo = pm;
                } else {
                    hi = mid;
                }
            }
            nodes.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_p = p;
    }
    if nodes.len() != n {
        return Err(Error::QuadratureNode {
            index: nodes.len().min(n - 1),
            order: n,
        });
    }
    Ok(nodes)
}
