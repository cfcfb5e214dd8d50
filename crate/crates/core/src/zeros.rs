//! Zeros of exceptional polynomials, split into regular and exceptional.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exceptional::{ExceptionalFamily, DEGREE_CAP};
use crate::measure::EmpiricalMeasure;
use crate::rootfind::{aberth, circle_guesses, root_disk, AberthOptions};

/// A zero counts as regular when `|Im| <= REGULAR_IM_TOL` and its real part
/// lies inside `(-1, 1)` by at least `REGULAR_EDGE_TOL`.
pub const REGULAR_IM_TOL: f64 = 1e-8;
pub const REGULAR_EDGE_TOL: f64 = 1e-12;

/// Regular zeros closer than this are treated as a multiple zero.
pub const SIMPLE_GAP: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroClassification {
    pub n: usize,
    pub m: usize,
    /// Ascending.
    pub regular: Vec<f64>,
    /// Ascending by distance to the nearest zero of `b~`.
    pub exceptional: Vec<Complex64>,
    /// Distance from each exceptional zero to the nearest zero of `b~`.
    pub exceptional_distances: Vec<f64>,
}

impl ZeroClassification {
    /// `n` regular and `m` exceptional zeros.
    pub fn degree_law_holds(&self) -> bool {
        self.regular.len() == self.n && self.exceptional.len() == self.m
    }

    pub fn min_regular_gap(&self) -> Option<f64> {
        self.regular
            .windows(2)
            .map(|w| w[1] - w[0])
            .reduce(f64::min)
    }

    /// Largest distance from an exceptional zero to the zero set of `b~`.
    pub fn max_exceptional_distance(&self) -> Option<f64> {
        self.exceptional_distances.iter().copied().reduce(f64::max)
    }

    /// CSV with columns `kind,re,im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(["kind", "re", "im"]).map_err(io)?;
        for x in &self.regular {
            w.write_record(["regular".to_string(), x.to_string(), "0".to_string()])
                .map_err(io)?;
        }
        for z in &self.exceptional {
            w.write_record([
                "exceptional".to_string(),
                z.re.to_string(),
                z.im.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }
}

/// All zeros of `P_n` by Aberth iteration on the recurrence-evaluated
/// polynomial, started on a circle enclosing the roots.
pub fn exceptional_zeros(family: &ExceptionalFamily, n: usize) -> Result<Vec<Complex64>> {
    let degree = family.data().degree(n);
    if degree > DEGREE_CAP {
        return Err(Error::DegreeCap {
            degree,
            cap: DEGREE_CAP,
        });
    }
    if degree == 0 {
        return Ok(Vec::new());
    }
    let (center, radius) = root_disk(&family.monomial_coeffs(n)?);
    let eval = family.evaluator(n, Complex64::new(0.0, 0.0))?;
    aberth(
        &eval,
        circle_guesses(center, radius, degree),
        &AberthOptions::default(),
    )
}

/// Splits the zeros of `P_n`. Errors if the zero count disagrees with
/// `deg P_n` or two regular zeros coincide.
pub fn classify_zeros(family: &ExceptionalFamily, n: usize) -> Result<ZeroClassification> {
    let data = family.data();
    let zeros = exceptional_zeros(family, n)?;
    let degree = data.degree(n);
    if zeros.len() != degree {
        return Err(Error::Classification(format!(
            "{} zeros found for degree {degree}",
            zeros.len()
        )));
    }
    let poles = data.b_tilde_zeros()?;
    let mut regular = Vec::new();
    let mut exceptional = Vec::new();
    for z in zeros {
        let inside = z.re > -1.0 + REGULAR_EDGE_TOL && z.re < 1.0 - REGULAR_EDGE_TOL;
        if z.im.abs() <= REGULAR_IM_TOL && inside {
            regular.push(z.re);
        } else {
            exceptional.push(z);
        }
    }
    regular.sort_by(f64::total_cmp);
    let nearest = |z: &Complex64| {
        poles
            .iter()
            .map(|p| (z - p).norm())
            .fold(f64::INFINITY, f64::min)
    };
    exceptional.sort_by(|a, b| nearest(a).total_cmp(&nearest(b)));
    let exceptional_distances = exceptional.iter().map(nearest).collect();
    let zc = ZeroClassification {
        n,
        m: data.m(),
        regular,
        exceptional,
        exceptional_distances,
    };
    if let Some(gap) = zc.min_regular_gap() {
        if gap <= SIMPLE_GAP {
            return Err(Error::Classification(format!(
                "regular zeros {gap:e} apart: not simple"
            )));
        }
    }
    Ok(zc)
}

/// Uniform weights on the regular zeros; exceptional zeros are left out.
pub fn zero_counting_measure(zc: &ZeroClassification) -> Result<EmpiricalMeasure> {
    EmpiricalMeasure::uniform_real(&zc.regular)
}
