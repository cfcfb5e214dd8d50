//! Exceptional Jacobi polynomials generated by one Darboux transformation.
//!
//! Given a classical source family `p_n = p_n^{(alpha, beta)}` and the first
//! order operator `A[y] = b y' - (b w) y`, the exceptional polynomials are
//!
//! ```text
//! P_n = A[p_n] / sigma_n,
//! W(x) = c0 (1 - x)^{alpha + eps1} (1 + x)^{beta + eps2} / b~(x)^2,
//! ```
//!
//! with `sigma_n` the `L^2(W)` norm of `A[p_n]` and `c0` making `W` a
//! probability density. `b~` is `b` with its endpoint factors removed; its
//! degree `m` is the codimension of the family.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobi::{
    derivative_factor, gauss_jacobi, JacobiParams, JacobiRecurrence, QuadratureRule,
};
use crate::poly::Poly;
use crate::rootfind::{self, Evaluator};

/// Largest polynomial degree handled by coefficient extraction and root finding.
pub const DEGREE_CAP: usize = 60;

/// Quadrature order for `c0`, `sigma_n` and all `W`-inner products.
pub const WEIGHT_RULE_ORDER: usize = 200;

/// Indices `0..=SIGMA_CACHE` have their normalizers precomputed.
const SIGMA_CACHE: usize = 72;

/// Indices checked when a preset is accepted.
const PRESET_GATE_INDEX: usize = 10;
const PRESET_GATE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl TryFrom<i32> for Sign {
    type Error = String;

    fn try_from(v: i32) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(format!("sign must be +1 or -1, got {other}")),
        }
    }
}

impl From<Sign> for i32 {
    fn from(s: Sign) -> i32 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

fn eval_real(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn eval_real_deriv(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, (k, &c)| {
            acc * z + c * k as f64
        })
}

fn eval_real_at(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn trim(coeffs: &[f64]) -> Vec<f64> {
    let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    match coeffs.iter().rposition(|c| c.abs() > 1e-14 * max) {
        Some(d) if max > 0.0 => coeffs[..=d].to_vec(),
        _ => vec![0.0],
    }
}

fn degree_of(coeffs: &[f64]) -> Option<usize> {
    let t = trim(coeffs);
    (t.len() > 1 || t[0] != 0.0).then(|| t.len() - 1)
}

/// Divide by `(x - r)`; the remainder is returned separately.
fn deflate(coeffs: &[f64], r: f64) -> (Vec<f64>, f64) {
    let d = coeffs.len() - 1;
    let mut q = vec![0.0; d];
    let mut carry = 0.0;
    for k in (0..=d).rev() {
        let v = coeffs[k] + carry * r;
        if k == 0 {
            return (q, v);
        }
        q[k - 1] = v;
        carry = v;
    }
    unreachable!()
}

/// Transformation data defining one exceptional family.
#[derive(Debug, Clone, PartialEq)]
pub struct DarbouxData {
    params: JacobiParams,
    b: Vec<f64>,
    bw: Vec<f64>,
    eps1: Sign,
    eps2: Sign,
    lambda_tilde: f64,
    b_tilde: Vec<f64>,
    m: usize,
}

impl DarbouxData {
    /// Validates the structural invariants: `b` monic with
    /// `deg b >= deg bw + 1`, endpoint factors of `b` consistent with the
    /// signs, and `b~` free of zeros on `[-1, 1]`.
    pub fn new(
        params: JacobiParams,
        b: &[f64],
        bw: &[f64],
        eps1: Sign,
        eps2: Sign,
        lambda_tilde: f64,
    ) -> Result<Self> {
        let b = trim(b);
        let bw = trim(bw);
        let deg_b = b.len() - 1;
        if b[deg_b] == 0.0 {
            return Err(Error::InvalidDarboux("b is the zero polynomial".into()));
        }
        if (b[deg_b] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDarboux(format!(
                "b must be monic, leading coefficient is {}",
                b[deg_b]
            )));
        }
        if let Some(deg_bw) = degree_of(&bw) {
            if deg_b < deg_bw + 1 {
                return Err(Error::InvalidDarboux(format!(
                    "deg b = {deg_b} < deg bw + 1 = {}",
                    deg_bw + 1
                )));
            }
        }
        if !lambda_tilde.is_finite() {
            return Err(Error::InvalidDarboux("lambda_tilde must be finite".into()));
        }
        params
            .shifted(eps1.value(), eps2.value())
            .map_err(|e| Error::InvalidDarboux(format!("weight exponents: {e}")))?;

        let scale = b.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let mut b_tilde = b.clone();
        for (sign, endpoint, name) in [(eps1, 1.0, "1 - x"), (eps2, -1.0, "1 + x")] {
            let vanishes = eval_real_at(&b_tilde, endpoint).abs() <= 1e-12 * scale;
            match sign {
                Sign::Minus if !vanishes => {
                    return Err(Error::InvalidDarboux(format!(
                        "sign -1 requires the factor {name} in b"
                    )));
                }
                Sign::Plus if vanishes => {
                    return Err(Error::InvalidDarboux(format!(
                        "b has the factor {name} but the sign is +1"
                    )));
                }
                Sign::Minus => {
                    b_tilde = deflate(&b_tilde, endpoint).0;
                }
                Sign::Plus => {}
            }
        }
        let m = b_tilde.len() - 1;
        for x in [-1.0, 1.0] {
            if eval_real_at(&b_tilde, x).abs() <= 1e-12 * scale {
                return Err(Error::InvalidDarboux(format!("b~ vanishes at x = {x}")));
            }
        }
        if m > 0 {
            let zeros = rootfind::roots(&Poly::monomial_real(&b_tilde))?;
            if let Some(z) = zeros
                .iter()
                .find(|z| z.im.abs() <= 1e-10 && z.re.abs() <= 1.0)
            {
                return Err(Error::InvalidDarboux(format!(
                    "b~ has a zero at {} in [-1, 1]",
                    z.re
                )));
            }
        }
        Ok(Self {
            params,
            b,
            bw,
            eps1,
            eps2,
            lambda_tilde,
            b_tilde,
            m,
        })
    }

    /// Codimension-one data with `b~(x) = x - c`, `c = (a + b) / (b - a)`,
    /// where `weight` gives the exponents `(a, b)` of the exceptional weight
    /// `(1-x)^a (1+x)^b / (x - c)^2`. The source family is `(a + 1, b - 1)`
    /// with `b = (x - 1)(x - c)`, or `(a - 1, b + 1)` with
    /// `b = (x + 1)(x - c)`; whichever keeps both source exponents larger.
    ///
    /// No orthonormality gate here; see [`make_x1_preset`].
    pub fn x1_unchecked(weight: JacobiParams) -> Result<Self> {
        let (a, bb) = (weight.alpha(), weight.beta());
        if a == bb {
            return Err(Error::PresetRejected(
                "alpha = beta leaves the pole undefined".into(),
            ));
        }
        let c = (a + bb) / (bb - a);
        if c.abs() <= 1.0 {
            return Err(Error::PresetRejected(format!(
                "pole c = {c} lies in [-1, 1]"
            )));
        }
        // (source alpha, source beta, endpoint root of b, eps1, eps2)
        let candidates = [
            (a + 1.0, bb - 1.0, 1.0, Sign::Minus, Sign::Plus),
            (a - 1.0, bb + 1.0, -1.0, Sign::Plus, Sign::Minus),
        ];
        let (sa, sb, r, eps1, eps2) = candidates
            .into_iter()
            .filter(|&(sa, sb, ..)| sa > -1.0 && sb > -1.0)
            .fold(
                None,
                |best: Option<(f64, f64, f64, Sign, Sign)>, cand| match best {
                    Some(b) if b.0.min(b.1) >= cand.0.min(cand.1) => Some(b),
                    _ => Some(cand),
                },
            )
            .ok_or_else(|| {
                Error::PresetRejected(format!(
                    "no admissible source family for weight exponents ({a}, {bb})"
                ))
            })?;
        let source = JacobiParams::new(sa, sb)?;
        // b = (x - r)(x - c); the seed is (1 -+ x)^{-s} (x - c), s the exponent at r
        let b = [r * c, -(r + c), 1.0];
        let (bw, lambda_tilde) = if r > 0.0 {
            ([sa * c - 1.0, 1.0 - sa], (sa - 1.0) * (sb + 2.0))
        } else {
            ([sb * c + 1.0, 1.0 - sb], (sb - 1.0) * (sa + 2.0))
        };
        if lambda_tilde <= 0.0 {
            return Err(Error::PresetRejected(format!(
                "lambda_tilde = {lambda_tilde} leaves sigma_0 imaginary"
            )));
        }
        Self::new(source, &b, &bw, eps1, eps2, lambda_tilde)
    }

    pub fn params(&self) -> JacobiParams {
        self.params
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn bw(&self) -> &[f64] {
        &self.bw
    }

    pub fn b_tilde(&self) -> &[f64] {
        &self.b_tilde
    }

    pub fn eps1(&self) -> Sign {
        self.eps1
    }

    pub fn eps2(&self) -> Sign {
        self.eps2
    }

    pub fn lambda_tilde(&self) -> f64 {
        self.lambda_tilde
    }

    /// Codimension, `deg b~`.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn deg_b(&self) -> usize {
        self.b.len() - 1
    }

    pub fn deg_bw(&self) -> Option<usize> {
        degree_of(&self.bw)
    }

    /// Exponents `(alpha + eps1, beta + eps2)` of the exceptional weight.
    pub fn weight_params(&self) -> JacobiParams {
        self.params
            .shifted(self.eps1.value(), self.eps2.value())
            .expect("validated at construction")
    }

    /// First index with a nonzero `A[p_n]` (1 when `bw = 0`).
    pub fn first_index(&self) -> usize {
        usize::from(self.deg_bw().is_none())
    }

    /// `deg P_n`: `deg bw` for `n = 0`, otherwise `n + deg b - 1`.
    pub fn degree(&self, n: usize) -> usize {
        if n == 0 {
            self.deg_bw().unwrap_or(0)
        } else {
            n + self.deg_b() - 1
        }
    }

    pub fn b_tilde_zeros(&self) -> Result<Vec<Complex64>> {
        if self.m == 0 {
            return Ok(Vec::new());
        }
        rootfind::roots(&Poly::monomial_real(&self.b_tilde))
    }

    pub fn to_config(&self) -> DarbouxConfig {
        DarbouxConfig {
            alpha: self.params.alpha(),
            beta: self.params.beta(),
            eps1: Some(self.eps1),
            eps2: Some(self.eps2),
            b: Some(self.b.clone()),
            bw: Some(self.bw.clone()),
            lambda_tilde: Some(self.lambda_tilde),
            preset: None,
        }
    }
}

/// JSON form of the Darboux data. With `preset` set, `alpha`/`beta` are the
/// preset's weight exponents and the polynomial fields are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarbouxConfig {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps1: Option<Sign>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps2: Option<Sign>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bw: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_tilde: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
}

impl DarbouxConfig {
    /// Build and gate the family this configuration describes.
    pub fn build(&self) -> Result<ExceptionalFamily> {
        let params = JacobiParams::new(self.alpha, self.beta)?;
        if let Some(preset) = &self.preset {
            return match preset.as_str() {
                "x1" => ExceptionalFamily::x1(params),
                other => Err(Error::InvalidDarboux(format!("unknown preset {other:?}"))),
            };
        }
        let missing = |field: &str| Error::InvalidDarboux(format!("missing field {field:?}"));
        let data = DarbouxData::new(
            params,
            self.b.as_deref().ok_or_else(|| missing("b"))?,
            self.bw.as_deref().ok_or_else(|| missing("bw"))?,
            self.eps1.ok_or_else(|| missing("eps1"))?,
            self.eps2.ok_or_else(|| missing("eps2"))?,
            self.lambda_tilde.ok_or_else(|| missing("lambda_tilde"))?,
        )?;
        let family = ExceptionalFamily::new(data)?;
        family.verify_orthonormality(PRESET_GATE_INDEX, PRESET_GATE_TOL)?;
        Ok(family)
    }
}

/// The normalized exceptional weight `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceptionalWeight {
    params: JacobiParams,
    b_tilde: Vec<f64>,
    c0: f64,
}

impl ExceptionalWeight {
    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn density(&self, x: f64) -> f64 {
        let bt = eval_real_at(&self.b_tilde, x);
        self.c0 * self.params.weight(x) / (bt * bt)
    }

    /// `c0 / b~(x)^2`: the factor multiplying the Jacobi weight.
    fn fold(&self, x: f64) -> f64 {
        let bt = eval_real_at(&self.b_tilde, x);
        self.c0 / (bt * bt)
    }
}

/// `sigma_n` by quadrature together with the closed form
/// `sqrt(c0 (n (n + alpha + beta + 1) + lambda_tilde))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaReport {
    pub n: usize,
    pub quadrature: f64,
    pub closed_form: f64,
    pub rel_discrepancy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadingCoeff {
    pub n: usize,
    pub value: f64,
    /// 1 when `deg bw = deg b - 1` (the two leading terms cancel partially), else 0.
    pub epsilon: u8,
    pub numerical: f64,
    pub rel_discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpanReport {
    pub s_observed: usize,
    pub residuals: Vec<f64>,
    pub norm: f64,
}

/// An accepted exceptional family with its normalizers precomputed.
///
/// Immutable after construction and `Sync`, so evaluations can be shared
/// across threads.
#[derive(Debug, Clone)]
pub struct ExceptionalFamily {
    data: DarbouxData,
    weight: ExceptionalWeight,
    rule: QuadratureRule,
    rec: JacobiRecurrence,
    rec_shift: JacobiRecurrence,
    sigma: Vec<f64>,
}

impl ExceptionalFamily {
    /// Computes `c0` and the normalizers. Does not check orthonormality.
    pub fn new(data: DarbouxData) -> Result<Self> {
        let wparams = data.weight_params();
        let rule = gauss_jacobi(wparams, WEIGHT_RULE_ORDER)?;
        let unit = ExceptionalWeight {
            params: wparams,
            b_tilde: data.b_tilde.clone(),
            c0: 1.0,
        };
        let mass = rule.integrate(|x| unit.fold(x));
        let weight = ExceptionalWeight {
            c0: mass.recip(),
            ..unit
        };
        let src = data.params;
        let max = SIGMA_CACHE + DEGREE_CAP + 8;
        let mut family = Self {
            rec: JacobiRecurrence::new(src, max),
            rec_shift: JacobiRecurrence::new(src.shifted(1.0, 1.0)?, max),
            data,
            weight,
            rule,
            sigma: Vec::new(),
        };
        family.sigma = (0..=SIGMA_CACHE)
            .map(|n| family.quadrature_norm(n))
            .collect();
        Ok(family)
    }

    /// The codimension-one preset, accepted only after the orthonormality gate.
    pub fn x1(weight: JacobiParams) -> Result<Self> {
        let family = Self::new(DarbouxData::x1_unchecked(weight)?)?;
        family
            .verify_orthonormality(PRESET_GATE_INDEX, PRESET_GATE_TOL)
            .map_err(|e| Error::PresetRejected(e.to_string()))?;
        Ok(family)
    }

    pub fn data(&self) -> &DarbouxData {
        &self.data
    }

    pub fn weight(&self) -> &ExceptionalWeight {
        &self.weight
    }

    pub fn c0(&self) -> f64 {
        self.weight.c0
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// `∫ f g W` over `[-1, 1]` by the weight rule.
    pub fn inner<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(&self, f: F, g: G) -> f64 {
        self.rule.integrate(|x| f(x) * g(x) * self.weight.fold(x))
    }

    /// `A[p_n](z) = b(z) p_n'(z) - bw(z) p_n(z)`, unnormalized.
    pub fn eval_unnormalized(&self, n: usize, z: Complex64) -> Complex64 {
        let p = self.rec.eval(n, z);
        let dp = if n == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.rec_shift.eval(n - 1, z) * derivative_factor(self.data.params, n)
        };
        eval_real(&self.data.b, z) * dp - eval_real(&self.data.bw, z) * p
    }

    fn eval_unnormalized_real(&self, n: usize, x: f64) -> f64 {
        let p: f64 = self.rec.eval(n, x);
        let dp = if n == 0 {
            0.0
        } else {
            self.rec_shift.eval::<f64>(n - 1, x) * derivative_factor(self.data.params, n)
        };
        eval_real_at(&self.data.b, x) * dp - eval_real_at(&self.data.bw, x) * p
    }

    fn quadrature_norm(&self, n: usize) -> f64 {
        self.inner(
            |x| self.eval_unnormalized_real(n, x),
            |x| self.eval_unnormalized_real(n, x),
        )
        .max(0.0)
        .sqrt()
    }

    /// `sigma_n = ||A p_n||_W`; errors when it vanishes (degenerate data).
    pub fn sigma(&self, n: usize) -> Result<f64> {
        let norm = match self.sigma.get(n) {
            Some(&s) => s,
            None => self.quadrature_norm(n),
        };
        let reference = self.c0().sqrt() * (1.0 + (n as f64).powi(2)).sqrt();
        if !(norm > 1e-10 * reference) {
            return Err(Error::DegenerateNorm { n, norm });
        }
        Ok(norm)
    }

    pub fn sigma_closed_form(&self, n: usize) -> f64 {
        let p = self.data.params;
        let nf = n as f64;
        (self.c0() * (nf * (nf + p.alpha() + p.beta() + 1.0) + self.data.lambda_tilde)).sqrt()
    }

    pub fn sigma_report(&self, n: usize) -> Result<SigmaReport> {
        let quadrature = self.sigma(n)?;
        let closed_form = self.sigma_closed_form(n);
        Ok(SigmaReport {
            n,
            quadrature,
            closed_form,
            rel_discrepancy: ((quadrature - closed_form) / quadrature).abs(),
        })
    }

    /// `P_n(z)`.
    pub fn eval(&self, n: usize, z: Complex64) -> Result<Complex64> {
        Ok(self.eval_unnormalized(n, z) / self.sigma(n)?)
    }

    pub fn eval_real(&self, n: usize, x: f64) -> Result<f64> {
        Ok(self.eval_unnormalized_real(n, x) / self.sigma(n)?)
    }

    /// Evaluator for `P_n(z) - shift`, used by the root finder.
    pub fn evaluator(&self, n: usize, shift: Complex64) -> Result<ExceptionalEvaluator<'_>> {
        Ok(ExceptionalEvaluator {
            family: self,
            n,
            inv_sigma: self.sigma(n)?.recip(),
            shift,
            degree: self.data.degree(n),
        })
    }

    /// `P_n(t) / t^{deg P_n}` for large real `t`, without overflow.
    fn eval_scaled(&self, n: usize, t: f64) -> Result<f64> {
        let d = &self.data;
        let sigma = self.sigma(n)?;
        let lead_term = |coeffs: &[f64], deg: usize| -> f64 {
            // coeffs(t) / t^deg
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * t.powi(k as i32 - deg as i32))
                .sum()
        };
        if n == 0 {
            let deg = d.deg_bw().unwrap_or(0);
            return Ok(-lead_term(&d.bw, deg) * self.rec.p0() / sigma);
        }
        let deg_b = d.deg_b();
        let first = lead_term(&d.b, deg_b)
            * derivative_factor(d.params, n)
            * self.rec_shift.eval_scaled(n - 1, t);
        let second = if deg_b >= 1 {
            lead_term(&d.bw, deg_b - 1) * self.rec.eval_scaled(n, t)
        } else {
            0.0
        };
        Ok((first - second) / sigma)
    }

    /// Leading coefficient read off far out on the real axis: the ratio
    /// `P_n(t) / t^d` at `t = 1e6` and `2e6`, Richardson-extrapolated to
    /// remove the `O(1/t)` term.
    pub fn numerical_leading_coeff(&self, n: usize) -> Result<f64> {
        let t = 1e6;
        Ok(2.0 * self.eval_scaled(n, 2.0 * t)? - self.eval_scaled(n, t)?)
    }

    /// `gamma_{n,e} = gamma_n (n - eps B) / sigma_n`, with `eps` chosen to
    /// match the numerical leading coefficient.
    pub fn leading_coeff(&self, n: usize) -> Result<LeadingCoeff> {
        let d = &self.data;
        let gamma = self.rec.leading_coeff(n);
        let sigma = self.sigma(n)?;
        let big_b = match d.deg_bw() {
            Some(k) if k + 1 == d.deg_b() => d.bw[k],
            _ => 0.0,
        };
        let numerical = self.numerical_leading_coeff(n)?;
        let candidates = [(1u8, n as f64 - big_b), (0u8, n as f64)];
        let preferred = if big_b != 0.0 { 0 } else { 1 };
        let mut best: Option<LeadingCoeff> = None;
        for (idx, (epsilon, numerator)) in candidates.into_iter().enumerate() {
            if numerator == 0.0 {
                continue;
            }
            let value = gamma * numerator / sigma;
            let rel = ((value - numerical) / value).abs();
            if rel <= 1e-3 {
                let cand = LeadingCoeff {
                    n,
                    value,
                    epsilon,
                    numerical,
                    rel_discrepancy: rel,
                };
                if best.is_none() || idx == preferred {
                    best = Some(cand);
                }
            }
        }
        best.ok_or_else(|| Error::LeadingCoefficient {
            n,
            reason: format!(
                "neither eps = 0 nor eps = 1 matches the numerical estimate {numerical:e}"
            ),
        })
    }

    /// `P_n` in the Chebyshev basis, interpolated at `deg + 1` Lobatto points.
    pub fn chebyshev_coeffs(&self, n: usize) -> Result<Poly> {
        let degree = self.data.degree(n);
        if degree > DEGREE_CAP {
            return Err(Error::DegreeCap {
                degree,
                cap: DEGREE_CAP,
            });
        }
        let sigma = self.sigma(n)?;
        let cheb = Poly::interpolate_chebyshev(degree, |x| {
            Complex64::new(self.eval_unnormalized_real(n, x) / sigma, 0.0)
        });
        self.check_interpolant(n, &cheb)?;
        Ok(cheb)
    }

    /// `P_n` in the monomial basis (Chebyshev interpolation, then basis change).
    pub fn monomial_coeffs(&self, n: usize) -> Result<Poly> {
        let mono = self.chebyshev_coeffs(n)?.to_monomial();
        self.check_interpolant(n, &mono)?;
        Ok(mono)
    }

    /// `|P_n(z) - poly(z)| <= 1e-8 max |P_n|` at 20 fixed points of `D(0, 2)`.
    fn check_interpolant(&self, n: usize, poly: &Poly) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x005e_ed0f_7e57);
        let points: Vec<Complex64> = (0..20)
            .map(|_| {
                Complex64::from_polar(
                    2.0 * rng.gen::<f64>().sqrt(),
                    std::f64::consts::TAU * rng.gen::<f64>(),
                )
            })
            .collect();
        let exact: Vec<Complex64> = points
            .iter()
            .map(|&z| self.eval(n, z))
            .collect::<Result<_>>()?;
        let scale = exact.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let residual = points
            .iter()
            .zip(&exact)
            .map(|(&z, &v)| (poly.eval(z) - v).norm())
            .fold(0.0, f64::max);
        let tolerance = 1e-8 * scale;
        if !(residual <= tolerance) {
            return Err(Error::InterpolationResidual {
                residual,
                tolerance,
            });
        }
        Ok(())
    }

    /// Gram matrix `<P_i, P_j>_W` over the valid indices up to `max_index`.
    pub fn gram_matrix(&self, max_index: usize) -> Result<Vec<Vec<f64>>> {
        let first = self.data.first_index();
        let values: Vec<Vec<f64>> = (first..=max_index)
            .map(|n| {
                let s = self.sigma(n)?;
                Ok(self
                    .rule
                    .nodes()
                    .iter()
                    .map(|&x| self.eval_unnormalized_real(n, x) / s)
                    .collect())
            })
            .collect::<Result<_>>()?;
        let folded: Vec<f64> = self
            .rule
            .nodes()
            .iter()
            .zip(self.rule.weights())
            .map(|(&x, &w)| w * self.weight.fold(x))
            .collect();
        Ok(values
            .iter()
            .map(|vi| {
                values
                    .iter()
                    .map(|vj| {
                        vi.iter()
                            .zip(vj)
                            .zip(&folded)
                            .map(|((a, b), w)| a * b * w)
                            .sum()
                    })
                    .collect()
            })
            .collect())
    }

    /// Largest `|<P_i, P_j>_W - delta_ij|`; errors with the first pair over `tol`.
    pub fn verify_orthonormality(&self, max_index: usize, tol: f64) -> Result<f64> {
        let first = self.data.first_index();
        let gram = self.gram_matrix(max_index)?;
        let mut worst = 0.0f64;
        for (i, row) in gram.iter().enumerate() {
            for (j, &g) in row.iter().enumerate() {
                let dev = (g - if i == j { 1.0 } else { 0.0 }).abs();
                if !(dev <= tol) {
                    return Err(Error::NotOrthonormal {
                        i: i + first,
                        j: j + first,
                        residual: dev,
                    });
                }
                worst = worst.max(dev);
            }
        }
        Ok(worst)
    }

    /// Expands `b^2 P` against `P_l` and finds the smallest `s` with every
    /// coefficient beyond index `deg P + s` negligible (`1e-8` relative to
    /// `||b^2 P||_W`). Scans `l` up to `deg P + s_max + 5`.
    pub fn verify_span_property(&self, p: &Poly, s_max: usize) -> Result<SpanReport> {
        let mono = p.to_monomial();
        let coeffs: Vec<f64> = mono.coeffs().iter().map(|c| c.re).collect();
        let deg_p = if p.is_zero() { 0 } else { mono.degree() };
        let b = &self.data.b;
        let target = |x: f64| {
            let bx = eval_real_at(b, x);
            bx * bx * eval_real_at(&coeffs, x)
        };
        let top = deg_p + s_max + 5;
        let needed = self.data.degree(top) + 2 * self.data.deg_b() + deg_p;
        if needed > 2 * WEIGHT_RULE_ORDER - 1 {
            return Err(Error::DegreeCap {
                degree: needed,
                cap: 2 * WEIGHT_RULE_ORDER - 1,
            });
        }
        let norm = self.inner(target, target).max(0.0).sqrt();
        let first = self.data.first_index();
        let residuals: Vec<f64> = (first..=top)
            .map(|l| {
                let s = self.sigma(l)?;
                Ok(self
                    .inner(target, |x| self.eval_unnormalized_real(l, x) / s)
                    .abs())
            })
            .collect::<Result<_>>()?;
        let tol = 1e-8 * norm;
        let last = residuals.iter().rposition(|&r| r > tol).map(|i| i + first);
        let s_observed = match last {
            None => 0,
            Some(l) if l == top => return Err(Error::SpanNotFound { last: l }),
            Some(l) => l.saturating_sub(deg_p),
        };
        if s_observed > s_max {
            return Err(Error::SpanNotFound {
                last: last.unwrap_or(0),
            });
        }
        Ok(SpanReport {
            s_observed,
            residuals,
            norm,
        })
    }
}

/// `P_n(z) - shift` with derivative, evaluated through the recurrences.
#[derive(Debug, Clone, Copy)]
pub struct ExceptionalEvaluator<'a> {
    family: &'a ExceptionalFamily,
    n: usize,
    inv_sigma: f64,
    shift: Complex64,
    degree: usize,
}

impl Evaluator for ExceptionalEvaluator<'_> {
    fn degree(&self) -> usize {
        self.degree
    }

    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let f = self.family;
        let d = &f.data;
        let n = self.n;
        let p = f.rec.eval(n, z);
        let (dp, ddp) = if n == 0 {
            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
        } else {
            let fac = derivative_factor(d.params, n);
            let (q, dq) = f.rec_shift.eval_with_derivative(n - 1, z);
            (q * fac, dq * fac)
        };
        let (b, db) = (eval_real(&d.b, z), eval_real_deriv(&d.b, z));
        let (bw, dbw) = (eval_real(&d.bw, z), eval_real_deriv(&d.bw, z));
        let value = (b * dp - bw * p) * self.inv_sigma - self.shift;
        let deriv = (db * dp + b * ddp - dbw * p - bw * dp) * self.inv_sigma;
        (value, deriv)
    }

    fn eval(&self, z: Complex64) -> Complex64 {
        self.family.eval_unnormalized(self.n, z) * self.inv_sigma - self.shift
    }
}

/// The codimension-one preset for weight exponents `weight`, accepted only
/// after the orthonormality gate on indices up to 10.
pub fn make_x1_preset(weight: JacobiParams) -> Result<DarbouxData> {
    Ok(ExceptionalFamily::x1(weight)?.data().clone())
}
