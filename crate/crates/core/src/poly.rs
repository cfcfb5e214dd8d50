//! Dense complex polynomials in the monomial or Chebyshev basis.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Coefficients below this fraction of the largest modulus are treated as zero
/// when reading off the degree.
pub const DEGREE_TRUNCATION: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Monomial,
    Chebyshev,
}

/// `sum_k coeffs[k] phi_k(z)`, with `phi_k = z^k` or `T_k(z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    basis: Basis,
    coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(basis: Basis, coeffs: Vec<Complex64>) -> Self {
        let coeffs = if coeffs.is_empty() {
            vec![Complex64::new(0.0, 0.0)]
        } else {
            coeffs
        };
        Self { basis, coeffs }
    }

    pub fn monomial(coeffs: Vec<Complex64>) -> Self {
        Self::new(Basis::Monomial, coeffs)
    }

    pub fn monomial_real(coeffs: &[f64]) -> Self {
        Self::monomial(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn chebyshev(coeffs: Vec<Complex64>) -> Self {
        Self::new(Basis::Chebyshev, coeffs)
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= r * ck;
            }
            c = next;
        }
        Self::monomial(c)
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Index of the last coefficient with modulus above
    /// `DEGREE_TRUNCATION * max modulus`; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        let max = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0;
        }
        self.coeffs
            .iter()
            .rposition(|c| c.norm() > DEGREE_TRUNCATION * max)
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::new(0.0, 0.0))
    }

    /// Coefficients truncated at the degree.
    pub fn trimmed(&self) -> Self {
        Self::new(self.basis, self.coeffs[..=self.degree()].to_vec())
    }

    /// Leading coefficient in the monomial sense (`T_d` contributes `2^{d-1} z^d`).
    pub fn leading_coeff(&self) -> Complex64 {
        let d = self.degree();
        let c = self.coeffs[d];
        match self.basis {
            Basis::Monomial => c,
            Basis::Chebyshev if d == 0 => c,
            Basis::Chebyshev => c * 2f64.powi(d as i32 - 1),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self.basis {
            Basis::Monomial => self
                .coeffs
                .iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c),
            Basis::Chebyshev => clenshaw(&self.coeffs, z),
        }
    }

    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        if n <= 1 {
            return Self::new(self.basis, vec![Complex64::new(0.0, 0.0)]);
        }
        match self.basis {
            Basis::Monomial => Self::monomial(
                self.coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, &c)| c * k as f64)
                    .collect(),
            ),
            Basis::Chebyshev => {
                // c'_{k-1} = c'_{k+1} + 2k c_k, with c'_0 halved at the end
                let mut d = vec![Complex64::new(0.0, 0.0); n + 1];
                for k in (1..n).rev() {
                    d[k - 1] = d[k + 1] + self.coeffs[k] * (2.0 * k as f64);
                }
                d[0] *= 0.5;
                d.truncate(n - 1);
                Self::chebyshev(d)
            }
        }
    }

    /// Subtract a constant (shifts the `k = 0` coefficient in either basis).
    pub fn minus_constant(&self, w: Complex64) -> Self {
        let mut c = self.coeffs.clone();
        c[0] -= w;
        Self::new(self.basis, c)
    }

    pub fn to_monomial(&self) -> Self {
        match self.basis {
            Basis::Monomial => self.clone(),
            Basis::Chebyshev => Self::monomial(chebyshev_to_monomial(&self.coeffs)),
        }
    }

    pub fn to_chebyshev(&self) -> Self {
        match self.basis {
            Basis::Chebyshev => self.clone(),
            Basis::Monomial => Self::chebyshev(monomial_to_chebyshev(&self.coeffs)),
        }
    }

    pub fn to_basis(&self, basis: Basis) -> Self {
        match basis {
            Basis::Monomial => self.to_monomial(),
            Basis::Chebyshev => self.to_chebyshev(),
        }
    }

    /// Interpolate `f` at the `degree + 1` Chebyshev–Lobatto points of
    /// `[-1, 1]`, returning Chebyshev coefficients. Exact for polynomials of
    /// at most that degree.
    pub fn interpolate_chebyshev<F: Fn(f64) -> Complex64>(degree: usize, f: F) -> Self {
        if degree == 0 {
            return Self::chebyshev(vec![f(1.0)]);
        }
        let n = degree;
        let values: Vec<Complex64> = (0..=n)
            .map(|j| f((std::f64::consts::PI * j as f64 / n as f64).cos()))
            .collect();
        Self::chebyshev(lobatto_values_to_coeffs(&values))
    }
}

/// Clenshaw summation of a Chebyshev series.
pub fn clenshaw(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let two_z = z * 2.0;
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = c + two_z * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    coeffs[0] + z * b1 - b2
}

/// Chebyshev coefficients from values at `x_j = cos(pi j / n)`, `j = 0..=n`,
/// via one FFT of the even extension.
fn lobatto_values_to_coeffs(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len() - 1;
    let mut ext: Vec<Complex64> = values.to_vec();
    ext.extend(values[1..n].iter().rev());
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(2 * n).process(&mut ext);
    let mut coeffs: Vec<Complex64> = ext[..=n].iter().map(|v| v / n as f64).collect();
    coeffs[0] *= 0.5;
    coeffs[n] *= 0.5;
    coeffs
}

fn chebyshev_to_monomial(cheb: &[Complex64]) -> Vec<Complex64> {
    let n = cheb.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    // t_prev = T_{k-1}, t_cur = T_k in monomial coefficients
    let mut t_prev = vec![0.0; n];
    let mut t_cur = vec![0.0; n];
    t_cur[0] = 1.0;
    for (k, &c) in cheb.iter().enumerate() {
        for (o, &t) in out.iter_mut().zip(&t_cur) {
            *o += c * t;
        }
        if k + 1 == n {
            break;
        }
        let mut next = vec![0.0; n];
        for j in 0..n - 1 {
            next[j + 1] += if k == 0 { t_cur[j] } else { 2.0 * t_cur[j] };
        }
        if k > 0 {
            for (x, &p) in next.iter_mut().zip(&t_prev) {
                *x -= p;
            }
        }
        t_prev = std::mem::replace(&mut t_cur, next);
    }
    out
}

fn monomial_to_chebyshev(mono: &[Complex64]) -> Vec<Complex64> {
    let n = mono.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    // xk holds x^k in the Chebyshev basis; x T_0 = T_1, x T_j = (T_{j+1} + T_{j-1}) / 2
    let mut xk = vec![0.0; n];
    xk[0] = 1.0;
    for (k, &c) in mono.iter().enumerate() {
        for (o, &t) in out.iter_mut().zip(&xk) {
            *o += c * t;
        }
        if k + 1 == n {
            break;
        }
        let mut next = vec![0.0; n];
        for j in 0..=k {
            let t = xk[j];
            if t == 0.0 {
                continue;
            }
            if j == 0 {
                next[1] += t;
            } else {
                next[j + 1] += 0.5 * t;
                next[j - 1] += 0.5 * t;
            }
        }
        xk = next;
    }
    out
}
