//! Polynomial dynamics: escape radii, filled Julia set rasters, sampling of
//! the equilibrium (Brolin) measure by random backward iteration, and
//! preimage diagnostics.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exceptional::ExceptionalFamily;
use crate::measure::EmpiricalMeasure;
use crate::poly::Poly;
use crate::rootfind::{
    aberth, circle_guesses, circle_max, root_disk, AberthOptions, Evaluator, PolyEvaluator,
};

/// Orbits leaving this modulus count as escaped even below the escape radius.
const OVERFLOW_MODULUS: f64 = 1e150;

pub const MAX_RESOLUTION: usize = 8192;
pub const MAX_ITER: u32 = 10_000;
pub const MAX_SAMPLES: usize = 1_000_000;
pub const MAX_RESTARTS: usize = 5;

/// A polynomial map with a certified escape radius.
///
/// `poly` is the monomial form used for the radius; `orbit` is the form used
/// for iteration and preimages (the Chebyshev form for exceptional
/// polynomials, whose monomial coefficients lose accuracy near `[-1, 1]`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeData {
    pub poly: Poly,
    pub orbit: Poly,
    pub r_p: f64,
    pub r_tilde: f64,
}

/// `log |p(z)|` for large `|z|`, via Horner in `1/z` to avoid overflow.
fn log_modulus_far(mono: &Poly, z: Complex64) -> f64 {
    let c = mono.coeffs();
    let d = c.len() - 1;
    let u = z.inv();
    let scaled = c
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * u + a);
    scaled.norm().ln() + d as f64 * z.norm().ln()
}

/// `R_p = max(1, (2 + sum_{i<d} |a_i|) / |a_d|)`, checked at 200 sample
/// points with `|z|` in `[1.01 R_p, 10 R_p]`.
pub fn escape_radius(p: &Poly) -> Result<EscapeData> {
    escape_radius_with_orbit(p, p)
}

/// As [`escape_radius`], iterating with `orbit` (any basis, same polynomial).
pub fn escape_radius_with_orbit(p: &Poly, orbit: &Poly) -> Result<EscapeData> {
    let mono = p.to_monomial().trimmed();
    let d = mono.degree();
    if d < 2 {
        return Err(Error::DegreeTooLow(d));
    }
    let c = mono.coeffs();
    let tail: f64 = c[..d].iter().map(|a| a.norm()).sum();
    let r_p = ((2.0 + tail) / c[d].norm()).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0x00e5_ca9e);
    for _ in 0..200 {
        let r = r_p * rng.gen_range(1.01..=10.0);
        let z = Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU));
        if !(log_modulus_far(&mono, z) > std::f64::consts::LN_2 + r.ln()) {
            return Err(Error::EscapeRadius { re: z.re, im: z.im });
        }
    }
    Ok(EscapeData {
        poly: mono,
        orbit: orbit.trimmed(),
        r_p,
        r_tilde: r_p,
    })
}

/// Escape data for `P_n`, iterated in its Chebyshev form.
pub fn family_escape(family: &ExceptionalFamily, n: usize) -> Result<EscapeData> {
    let cheb = family.chebyshev_coeffs(n)?;
    escape_radius_with_orbit(&cheb.to_monomial(), &cheb)
}

/// Sets every `r_tilde` to the largest `r_p` in the batch.
pub fn share_bound(batch: &mut [EscapeData]) -> f64 {
    let r = batch.iter().map(|e| e.r_p).fold(0.0, f64::max);
    for e in batch.iter_mut() {
        e.r_tilde = r;
    }
    r
}

impl EscapeData {
    pub fn degree(&self) -> usize {
        self.poly.degree()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.orbit.eval(z)
    }

    /// All `d` solutions of `p(z) = w`, started on a circle enclosing them.
    /// The order of the returned roots is a deterministic function of `w`.
    pub fn preimages(&self, w: Complex64, opts: &AberthOptions) -> Result<Vec<Complex64>> {
        let shifted = self.orbit.minus_constant(w);
        let (center, radius) = root_disk(&self.poly.minus_constant(w));
        let eval = PolyEvaluator::new(&shifted);
        aberth(&eval, circle_guesses(center, radius, eval.degree()), opts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterSpec {
    pub center: Complex64,
    pub half_width: f64,
    pub resolution: usize,
    pub max_iter: u32,
}

impl RasterSpec {
    pub fn validate(&self) -> Result<()> {
        if self.resolution == 0 || self.resolution > MAX_RESOLUTION {
            return Err(Error::InvalidArgument(format!(
                "resolution must be in 1..={MAX_RESOLUTION}, got {}",
                self.resolution
            )));
        }
        if self.max_iter == 0 || self.max_iter > MAX_ITER {
            return Err(Error::InvalidArgument(format!(
                "max_iter must be in 1..={MAX_ITER}, got {}",
                self.max_iter
            )));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "half_width must be positive, got {}",
                self.half_width
            )));
        }
        Ok(())
    }

    /// Center of pixel `(row, col)`; rows run top to bottom. Offsets are odd
    /// multiples of half a pixel, so the grid is exactly symmetric about
    /// `center`.
    pub fn pixel_center(&self, row: usize, col: usize) -> Complex64 {
        let h = self.half_width / self.resolution as f64;
        let res = self.resolution as f64;
        let x = (2.0 * col as f64 + 1.0 - res) * h;
        let y = (res - 2.0 * row as f64 - 1.0) * h;
        self.center + Complex64::new(x, y)
    }

    /// Pixel containing `z`, if inside the grid.
    pub fn pixel_of(&self, z: Complex64) -> Option<(usize, usize)> {
        let step = 2.0 * self.half_width / self.resolution as f64;
        let col = ((z.re - self.center.re + self.half_width) / step).floor();
        let row = ((self.center.im + self.half_width - z.im) / step).floor();
        let res = self.resolution as f64;
        (col >= 0.0 && col < res && row >= 0.0 && row < res).then_some((row as usize, col as usize))
    }
}

/// Escape counts on a square grid; `max_iter` means the orbit stayed bounded.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    pub spec: RasterSpec,
    /// Row-major, top row first.
    pub counts: Vec<u32>,
}

impl RasterGrid {
    pub fn count(&self, row: usize, col: usize) -> u32 {
        self.counts[row * self.spec.resolution + col]
    }

    pub fn bounded(&self, row: usize, col: usize) -> bool {
        self.count(row, col) == self.spec.max_iter
    }

    /// Whether some pixel within `reach` rows and columns of `(row, col)` is bounded.
    pub fn bounded_near(&self, row: usize, col: usize, reach: usize) -> bool {
        let res = self.spec.resolution;
        let (r0, r1) = (row.saturating_sub(reach), (row + reach).min(res - 1));
        let (c0, c1) = (col.saturating_sub(reach), (col + reach).min(res - 1));
        (r0..=r1).any(|r| (c0..=c1).any(|c| self.bounded(r, c)))
    }

    /// Fraction of `points` whose pixel is within `reach` pixels of a bounded
    /// one. Points outside the grid count as misses.
    pub fn consistency(&self, points: &[Complex64], reach: usize) -> f64 {
        if points.is_empty() {
            return 0.0;
        }
        let hits = points
            .iter()
            .filter(|&&z| {
                self.spec
                    .pixel_of(z)
                    .is_some_and(|(r, c)| self.bounded_near(r, c, reach))
            })
            .count();
        hits as f64 / points.len() as f64
    }

    /// Binary PGM: `floor(255 count / max_iter)` per pixel.
    pub fn to_pgm(&self) -> Vec<u8> {
        let res = self.spec.resolution;
        let mut out = format!("P5\n{res} {res}\n255\n").into_bytes();
        let max = u64::from(self.spec.max_iter);
        out.extend(
            self.counts
                .iter()
                .map(|&c| (255 * u64::from(c) / max) as u8),
        );
        out
    }
}

/// Escape iteration count of a single starting point.
pub fn escape_count(e: &EscapeData, z0: Complex64, max_iter: u32) -> u32 {
    let mut z = z0;
    for k in 0..max_iter {
        let r = z.norm();
        if !(r <= e.r_p) || r > OVERFLOW_MODULUS {
            return k;
        }
        z = e.eval(z);
    }
    max_iter
}

pub fn escape_raster(e: &EscapeData, spec: &RasterSpec) -> Result<RasterGrid> {
    spec.validate()?;
    let res = spec.resolution;
    let rows: Vec<Vec<u32>> = (0..res)
        .into_par_iter()
        .map(|row| {
            (0..res)
                .map(|col| escape_count(e, spec.pixel_center(row, col), spec.max_iter))
                .collect()
        })
        .collect();
    Ok(RasterGrid {
        spec: *spec,
        counts: rows.concat(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrolinOptions {
    pub n_samples: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Independent orbits; the sample is their concatenation, so the output
    /// depends on `(seed, chains)` but not on the thread count.
    pub chains: usize,
    pub start: Complex64,
}

impl Default for BrolinOptions {
    fn default() -> Self {
        Self {
            n_samples: 20_000,
            burn_in: 100,
            seed: 0,
            chains: 8,
            start: Complex64::new(0.0, 0.0),
        }
    }
}

/// Start used when the configured one is (numerically) a critical value.
pub const FALLBACK_START: Complex64 = Complex64::new(0.1, 0.1);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrolinSample {
    pub points: Vec<Complex64>,
    pub seed: u64,
    pub burn_in: usize,
    pub degree: usize,
    pub start: Complex64,
    pub restarts: usize,
}

impl BrolinSample {
    pub fn measure(&self) -> Result<EmpiricalMeasure> {
        EmpiricalMeasure::uniform(self.points.clone())
    }

    pub fn max_modulus(&self) -> f64 {
        self.points.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// CSV with columns `re,im`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(["re", "im"]).map_err(io)?;
        for z in &self.points {
            w.write_record([z.re.to_string(), z.im.to_string()])
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }
}

const ORBIT_OPTS: AberthOptions = AberthOptions {
    max_sweeps: 500,
    tol: 1e-13,
    check_residual: false,
    residual_factor: 1e-8,
};

fn min_pairwise_distance(z: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            best = best.min((z[i] - z[j]).norm());
        }
    }
    best
}

/// `start`, or [`FALLBACK_START`] if its preimages cluster.
fn choose_start(e: &EscapeData, start: Complex64) -> Complex64 {
    match e.preimages(start, &ORBIT_OPTS) {
        Ok(z) if min_pairwise_distance(&z) > 1e-6 => start,
        _ => FALLBACK_START,
    }
}

fn run_chain(
    e: &EscapeData,
    opts: &BrolinOptions,
    start: Complex64,
    chain: usize,
    count: usize,
) -> Result<(Vec<Complex64>, usize)> {
    let d = e.degree();
    let mut last_error = String::new();
    for restart in 0..=MAX_RESTARTS {
        let seed = opts
            .seed
            .wrapping_add((restart as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chain as u64);
        let mut w = start;
        let mut points = Vec::with_capacity(count);
        let outcome: Result<()> = (|| {
            for step in 0..opts.burn_in + count {
                let roots = e.preimages(w, &ORBIT_OPTS)?;
                let z = roots[rng.gen_range(0..d)];
                let residual = (e.eval(z) - w).norm();
                let scale = circle_max(&PolyEvaluator::new(&e.orbit), 1.0 + z.norm());
                if !(residual <= 1e-8 * scale) {
                    return Err(Error::RootResidual {
                        residual,
                        bound: 1e-8 * scale,
                    });
                }
                if step >= opts.burn_in {
                    points.push(z);
                }
                w = z;
            }
            Ok(())
        })();
        match outcome {
            Ok(()) => return Ok((points, restart)),
            Err(err) => last_error = err.to_string(),
        }
    }
    Err(Error::OrbitFailed {
        restarts: MAX_RESTARTS,
        cause: last_error,
    })
}

/// Random backward orbits: each step solves `p(z) = w` and moves to one of
/// the `d` preimages chosen uniformly. Chains draw from the ChaCha stream
/// numbered by the chain; a failing chain restarts from the start point with
/// a perturbed seed, at most [`MAX_RESTARTS`] times.
pub fn brolin_sample(e: &EscapeData, opts: &BrolinOptions) -> Result<BrolinSample> {
    let d = e.degree();
    if d < 2 {
        return Err(Error::DegreeTooLow(d));
    }
    if opts.n_samples == 0 || opts.n_samples > MAX_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "n_samples must be in 1..={MAX_SAMPLES}"
        )));
    }
    if opts.burn_in == 0 {
        return Err(Error::InvalidArgument("burn_in must be positive".into()));
    }
    if opts.chains == 0 {
        return Err(Error::InvalidArgument("chains must be positive".into()));
    }
    let chains = opts.chains.min(opts.n_samples);
    let start = choose_start(e, opts.start);
    let base = opts.n_samples / chains;
    let extra = opts.n_samples % chains;
    let results: Vec<(Vec<Complex64>, usize)> = (0..chains)
        .into_par_iter()
        .map(|c| run_chain(e, opts, start, c, base + usize::from(c < extra)))
        .collect::<Result<_>>()?;
    let restarts = results.iter().map(|r| r.1).sum();
    Ok(BrolinSample {
        points: results.into_iter().flat_map(|r| r.0).collect(),
        seed: opts.seed,
        burn_in: opts.burn_in,
        degree: d,
        start,
        restarts,
    })
}

/// Uniform-grid spatial index over a point cloud.
pub struct GridIndex<'a> {
    points: &'a [Complex64],
    cell: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
    span: i64,
}

impl<'a> GridIndex<'a> {
    pub fn new(points: &'a [Complex64], cell: f64) -> Self {
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let key = |z: Complex64| ((z.re / cell).floor() as i64, (z.im / cell).floor() as i64);
        let mut lo = (i64::MAX, i64::MAX);
        let mut hi = (i64::MIN, i64::MIN);
        for (i, &z) in points.iter().enumerate() {
            let k = key(z);
            lo = (lo.0.min(k.0), lo.1.min(k.1));
            hi = (hi.0.max(k.0), hi.1.max(k.1));
            cells.entry(k).or_default().push(i);
        }
        let span = (hi.0 - lo.0).max(hi.1 - lo.1).max(0) + 1;
        Self {
            points,
            cell,
            cells,
            span,
        }
    }

    fn key(&self, z: Complex64) -> (i64, i64) {
        (
            (z.re / self.cell).floor() as i64,
            (z.im / self.cell).floor() as i64,
        )
    }

    /// Whether some indexed point lies within `eps <= cell` of `z`.
    pub fn any_within(&self, z: Complex64, eps: f64) -> bool {
        let (kx, ky) = self.key(z);
        (-1..=1).any(|dx| {
            (-1..=1).any(|dy| {
                self.cells
                    .get(&(kx + dx, ky + dy))
                    .is_some_and(|v| v.iter().any(|&i| (self.points[i] - z).norm() <= eps))
            })
        })
    }

    /// Distance from `z` to the nearest indexed point other than `skip`.
    pub fn nearest_distance(&self, z: Complex64, skip: Option<usize>) -> Option<f64> {
        let (kx, ky) = self.key(z);
        let mut best = f64::INFINITY;
        let mut ring: i64 = 0;
        loop {
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    if dx.abs() != ring && dy.abs() != ring {
                        continue;
                    }
                    if let Some(v) = self.cells.get(&(kx + dx, ky + dy)) {
                        for &i in v {
                            if Some(i) != skip {
                                best = best.min((self.points[i] - z).norm());
                            }
                        }
                    }
                }
            }
            // every point beyond this ring is at least `ring * cell` away
            if best <= ring as f64 * self.cell || ring > 2 * self.span + 2 {
                break;
            }
            ring += 1;
        }
        best.is_finite().then_some(best)
    }
}

/// Median distance from a sample point to its nearest other sample point.
pub fn median_nn_spacing(points: &[Complex64]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for z in points {
        lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    let extent = (hi.re - lo.re).max(hi.im - lo.im).max(1e-300);
    let index = GridIndex::new(points, extent / (points.len() as f64).sqrt());
    let mut d: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            index
                .nearest_distance(points[i], Some(i))
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    d.sort_by(f64::total_cmp);
    Some(d[d.len() / 2])
}

/// Fraction of forward images `p(z)` of sample points lying within `eps` of
/// the sample.
pub fn forward_invariance_check(e: &EscapeData, sample: &BrolinSample, eps: f64) -> Result<f64> {
    if sample.points.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let index = GridIndex::new(&sample.points, eps);
    let hits: usize = sample
        .points
        .par_iter()
        .map(|&z| usize::from(index.any_within(e.eval(z), eps)))
        .sum();
    Ok(hits as f64 / sample.points.len() as f64)
}

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.x0 - slack
            && z.re <= self.x1 + slack
            && z.im >= self.y0 - slack
            && z.im <= self.y1 + slack
    }

    fn meets_interval(&self) -> bool {
        self.y0 <= 0.0 && self.y1 >= 0.0 && self.x0 <= 1.0 && self.x1 >= -1.0
    }
}

/// Number of solutions of `p(z) = w` inside `region`.
pub fn preimage_count_in_set(e: &EscapeData, w: Complex64, region: &Rect) -> Result<usize> {
    if !(region.x0 <= region.x1 && region.y0 <= region.y1) {
        return Err(Error::InvalidArgument("empty rectangle".into()));
    }
    if region.meets_interval() {
        return Err(Error::InvalidArgument(
            "region must stay away from [-1, 1]".into(),
        ));
    }
    let roots = e.preimages(w, &AberthOptions::default())?;
    Ok(roots.iter().filter(|&&z| region.contains(z, 1e-12)).count())
}

/// Whether every solution of `p(z) = w`, for `count` points `w` on the
/// circle `|w| = radius`, lies in the open disk of the same radius.
pub fn boundary_preimages_contained(e: &EscapeData, radius: f64, count: usize) -> Result<bool> {
    for k in 0..count {
        let w = Complex64::from_polar(
            radius,
            std::f64::consts::TAU * (k as f64 + 0.5) / count as f64,
        );
        let roots = e.preimages(w, &AberthOptions::default())?;
        if roots.iter().any(|z| z.norm() >= radius) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One-step pullback of the uniform measure on `points`: every point is
/// replaced by all `d` of its preimages, each with weight `1 / (d |points|)`.
pub fn pullback(e: &EscapeData, points: &[Complex64]) -> Result<EmpiricalMeasure> {
    let pre: Vec<Vec<Complex64>> = points
        .par_iter()
        .map(|&w| e.preimages(w, &AberthOptions::default()))
        .collect::<Result<_>>()?;
    EmpiricalMeasure::uniform(pre.concat())
}
