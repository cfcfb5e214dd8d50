//! The four subcommands. Every output is a deterministic function of the
//! settings, so reruns produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xjulia_core::dynamics::{
    boundary_preimages_contained, brolin_sample, escape_radius, escape_raster, family_escape,
    forward_invariance_check, median_nn_spacing, preimage_count_in_set, share_bound, BrolinOptions,
    EscapeData,
};
use xjulia_core::exceptional::{ExceptionalFamily, DEGREE_CAP};
use xjulia_core::measure::{
    arcsine_cdf, chebyshev_moments, green_complement_interval, ks_distance_real,
};
use xjulia_core::zeros::{classify_zeros, zero_counting_measure};
use xjulia_core::Complex64;

use crate::failure::Failure;
use crate::settings::{Settings, SCHEMA_VERSION};

/// What the commands run on: an exceptional family at each `n`, or one raw
/// polynomial.
pub enum Target {
    Family(Box<ExceptionalFamily>),
    Raw,
}

pub fn build_target(s: &Settings) -> Result<Target, Failure> {
    match (&s.family, &s.raw_poly) {
        (Some(cfg), None) => {
            let family = cfg.build()?;
            for &n in &s.n_list {
                let degree = family.data().degree(n);
                if degree > DEGREE_CAP {
                    return Err(Failure::config(
                        format!("n = {n} gives degree {degree} above the cap of {DEGREE_CAP}"),
                        Some("n_list".into()),
                    ));
                }
                if n < family.data().first_index() {
                    return Err(Failure::config(
                        format!("index {n} is not in the family"),
                        Some("n_list".into()),
                    ));
                }
            }
            Ok(Target::Family(Box::new(family)))
        }
        (None, Some(_)) => Ok(Target::Raw),
        _ => unreachable!("validated by settings"),
    }
}

fn stem(kind: &str, n: Option<usize>) -> String {
    match n {
        Some(n) => format!("{kind}_n{n}"),
        None => format!("{kind}_raw"),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Option<T>, Failure> {
    match fs::read(path) {
        Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

/// Escape data for every item, sharing one bound `r_tilde`.
fn escape_batch(
    s: &Settings,
    target: &Target,
) -> Result<Vec<(Option<usize>, EscapeData)>, Failure> {
    let mut items: Vec<(Option<usize>, EscapeData)> = match target {
        Target::Family(f) => s
            .n_list
            .iter()
            .map(|&n| Ok((Some(n), family_escape(f, n)?)))
            .collect::<Result<_, Failure>>()?,
        Target::Raw => {
            let p = s.raw_poly.as_ref().expect("raw target");
            vec![(None, escape_radius(p)?)]
        }
    };
    let mut data: Vec<EscapeData> = items.iter().map(|i| i.1.clone()).collect();
    share_bound(&mut data);
    for (item, e) in items.iter_mut().zip(data) {
        item.1 = e;
    }
    Ok(items)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZerosDiagnostic {
    pub schema_version: u32,
    pub n: usize,
    pub degree: usize,
    pub regular_count: usize,
    pub exceptional_count: usize,
    pub degree_law: bool,
    pub ks: Option<f64>,
    pub exc_dist: Option<f64>,
    pub min_regular_gap: Option<f64>,
    pub gamma: Option<f64>,
    pub gamma_root: Option<f64>,
    pub green_points: Vec<Complex64>,
    pub green_gaps: Vec<f64>,
}

pub fn cmd_zeros(s: &Settings) -> Result<Vec<PathBuf>, Failure> {
    let Target::Family(family) = build_target(s)? else {
        return Err(Failure::config(
            "zeros needs an exceptional family, not raw_poly",
            Some("raw_poly".into()),
        ));
    };
    fs::create_dir_all(&s.output_dir)?;
    let mut written = Vec::new();
    for &n in &s.n_list {
        let zc = classify_zeros(&family, n)?;
        let ks = if zc.regular.is_empty() {
            None
        } else {
            Some(ks_distance_real(&zero_counting_measure(&zc)?, arcsine_cdf)?)
        };
        let (gamma, gamma_root, green_gaps) = if n >= 1 {
            let g = family.leading_coeff(n)?.value;
            let gaps =
                s.thresholds
                    .green_points
                    .iter()
                    .map(|&z| {
                        Ok((family.eval(n, z)?.norm().ln() / n as f64
                            - green_complement_interval(z))
                        .abs())
                    })
                    .collect::<Result<Vec<f64>, Failure>>()?;
            (Some(g), Some(g.abs().powf(1.0 / n as f64)), gaps)
        } else {
            (None, None, Vec::new())
        };
        let diag = ZerosDiagnostic {
            schema_version: SCHEMA_VERSION,
            n,
            degree: family.data().degree(n),
            regular_count: zc.regular.len(),
            exceptional_count: zc.exceptional.len(),
            degree_law: zc.degree_law_holds(),
            ks,
            exc_dist: zc.max_exceptional_distance(),
            min_regular_gap: zc.min_regular_gap(),
            gamma,
            gamma_root,
            green_points: s.thresholds.green_points.clone(),
            green_gaps,
        };
        let csv = s.output_dir.join(format!("{}.csv", stem("zeros", Some(n))));
        let mut buf = Vec::new();
        zc.write_csv(&mut buf)?;
        fs::write(&csv, buf)?;
        let json = s
            .output_dir
            .join(format!("{}.json", stem("zeros", Some(n))));
        write_json(&json, &diag)?;
        written.extend([csv, json]);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeDiagnostic {
    pub schema_version: u32,
    pub n: Option<usize>,
    pub degree: usize,
    #[serde(rename = "R_p")]
    pub r_p: f64,
    #[serde(rename = "R_tilde")]
    pub r_tilde: f64,
    pub center: Complex64,
    pub half_width: f64,
    pub resolution: usize,
    pub max_iter: u32,
    pub bounded_pixels: usize,
}

pub fn cmd_julia(s: &Settings) -> Result<Vec<PathBuf>, Failure> {
    let target = build_target(s)?;
    let batch = escape_batch(s, &target)?;
    fs::create_dir_all(&s.output_dir)?;
    let mut written = Vec::new();
    for (n, e) in &batch {
        let grid = escape_raster(e, &s.grid)?;
        let pgm = s.output_dir.join(format!("{}.pgm", stem("julia", *n)));
        fs::write(&pgm, grid.to_pgm())?;
        let diag = EscapeDiagnostic {
            schema_version: SCHEMA_VERSION,
            n: *n,
            degree: e.degree(),
            r_p: e.r_p,
            r_tilde: e.r_tilde,
            center: s.grid.center,
            half_width: s.grid.half_width,
            resolution: s.grid.resolution,
            max_iter: s.grid.max_iter,
            bounded_pixels: grid
                .counts
                .iter()
                .filter(|&&c| c == s.grid.max_iter)
                .count(),
        };
        let json = s.output_dir.join(format!("{}.json", stem("julia", *n)));
        write_json(&json, &diag)?;
        written.extend([pgm, json]);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrolinDiagnostic {
    pub schema_version: u32,
    pub n: Option<usize>,
    pub degree: usize,
    pub samples: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub chains: usize,
    pub start: Complex64,
    pub restarts: usize,
    /// `m_1 .. m_k` against the arcsine measure (whose moments vanish).
    pub moments: Vec<Complex64>,
    pub max_abs_moment: f64,
    pub mean_abs_im: f64,
    /// Shared escape radius bound over the batch.
    pub bound: f64,
    #[serde(rename = "R_p")]
    pub r_p: f64,
    pub max_modulus: f64,
    pub within_bound: bool,
    pub forward_eps: Option<f64>,
    pub forward_fraction: Option<f64>,
    pub preimage_max_count: Option<usize>,
    pub boundary_contained: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrolinSummary {
    pub schema_version: u32,
    pub n_list: Vec<usize>,
    pub max_abs_moment: Vec<f64>,
    pub mean_abs_im: Vec<f64>,
    pub moments_decreasing: bool,
    pub mean_abs_im_decreasing: bool,
    #[serde(rename = "R_tilde")]
    pub r_tilde: Option<f64>,
    pub all_within_bound: bool,
    /// Smallest listed `n` from which on every boundary check passed.
    pub boundary_threshold: Option<usize>,
    pub preimage_max_counts: Vec<Option<usize>>,
}

pub fn cmd_brolin(s: &Settings) -> Result<Vec<PathBuf>, Failure> {
    let target = build_target(s)?;
    let batch = escape_batch(s, &target)?;
    fs::create_dir_all(&s.output_dir)?;
    let t = &s.thresholds;
    let mut written = Vec::new();
    let mut diags = Vec::new();
    for (n, e) in &batch {
        let opts = BrolinOptions {
            n_samples: s.samples,
            burn_in: s.burn_in,
            seed: s.seed,
            chains: s.chains,
            ..Default::default()
        };
        let sample = brolin_sample(e, &opts)?;
        let mu = sample.measure()?;
        let moments = chebyshev_moments(&mu, t.moment_k)?[1..].to_vec();
        let forward_eps = median_nn_spacing(&sample.points).map(|d| t.forward_eps_factor * d);
        let forward_fraction = match forward_eps {
            Some(eps) if eps > 0.0 => Some(forward_invariance_check(e, &sample, eps)?),
            _ => None,
        };
        let preimage_max_count = match sample.points.len().checked_div(t.p2_draws) {
            Some(stride) => {
                let mut best = 0;
                for w in sample.points.iter().step_by(stride.max(1)).take(t.p2_draws) {
                    best = best.max(preimage_count_in_set(e, *w, &t.p2_region)?);
                }
                Some(best)
            }
            None => None,
        };
        let boundary_contained = Some(boundary_preimages_contained(
            e,
            t.boundary_radius,
            t.boundary_points,
        )?);
        let max_modulus = sample.max_modulus();
        let diag = BrolinDiagnostic {
            schema_version: SCHEMA_VERSION,
            n: *n,
            degree: e.degree(),
            samples: s.samples,
            burn_in: s.burn_in,
            seed: s.seed,
            chains: s.chains,
            start: sample.start,
            restarts: sample.restarts,
            max_abs_moment: moments.iter().map(|m| m.norm()).fold(0.0, f64::max),
            moments,
            mean_abs_im: mu.mean_abs_im(),
            bound: e.r_tilde,
            r_p: e.r_p,
            max_modulus,
            within_bound: max_modulus <= e.r_tilde + 1e-6,
            forward_eps,
            forward_fraction,
            preimage_max_count,
            boundary_contained,
        };
        let csv = s.output_dir.join(format!("{}.csv", stem("brolin", *n)));
        let mut buf = Vec::new();
        sample.write_csv(&mut buf)?;
        fs::write(&csv, buf)?;
        let json = s.output_dir.join(format!("{}.json", stem("brolin", *n)));
        write_json(&json, &diag)?;
        written.extend([csv, json]);
        diags.push(diag);
    }
    let max_abs_moment: Vec<f64> = diags.iter().map(|d| d.max_abs_moment).collect();
    let mean_abs_im: Vec<f64> = diags.iter().map(|d| d.mean_abs_im).collect();
    let contained: Vec<bool> = diags
        .iter()
        .map(|d| d.boundary_contained == Some(true))
        .collect();
    let boundary_threshold = contained
        .iter()
        .rposition(|&ok| !ok)
        .map_or(Some(0), |i| (i + 1 < diags.len()).then_some(i + 1))
        .and_then(|i| diags.get(i))
        .map(|d| d.n.unwrap_or(0));
    let summary = BrolinSummary {
        schema_version: SCHEMA_VERSION,
        n_list: diags.iter().filter_map(|d| d.n).collect(),
        moments_decreasing: strictly_decreasing(&max_abs_moment),
        mean_abs_im_decreasing: strictly_decreasing(&mean_abs_im),
        max_abs_moment,
        mean_abs_im,
        r_tilde: batch.first().map(|b| b.1.r_tilde),
        all_within_bound: diags.iter().all(|d| d.within_bound),
        boundary_threshold,
        preimage_max_counts: diags.iter().map(|d| d.preimage_max_count).collect(),
    };
    let path = s.output_dir.join("brolin_summary.json");
    write_json(&path, &summary)?;
    written.push(path);
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section<R> {
    pub rows: Vec<R>,
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadingRow {
    pub n: usize,
    pub gamma_root: Option<f64>,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenRow {
    pub n: usize,
    pub points: Vec<Complex64>,
    pub gaps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZerosRow {
    pub n: usize,
    pub ks: Option<f64>,
    pub exc_dist: Option<f64>,
    pub degree_law: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub n: usize,
    pub max_abs_moment: f64,
    pub mean_abs_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreimageRow {
    pub n: usize,
    pub max_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub n_list: Vec<usize>,
    pub leading_coefficient: Option<Section<LeadingRow>>,
    pub green_gap: Option<Section<GreenRow>>,
    pub zeros: Option<Section<ZerosRow>>,
    pub moments: Option<Section<MomentRow>>,
    pub preimages: Option<Section<PreimageRow>>,
    pub pass: Option<bool>,
}

fn all_present<T>(items: Vec<Option<T>>) -> Option<Vec<T>> {
    items.into_iter().collect()
}

pub fn cmd_report(s: &Settings) -> Result<PathBuf, Failure> {
    let t = &s.thresholds;
    let dir = &s.output_dir;
    let zeros: Vec<Option<ZerosDiagnostic>> = s
        .n_list
        .iter()
        .map(|&n| read_json(&dir.join(format!("{}.json", stem("zeros", Some(n))))))
        .collect::<Result<_, _>>()?;
    let brolin: Vec<Option<BrolinDiagnostic>> = s
        .n_list
        .iter()
        .map(|&n| read_json(&dir.join(format!("{}.json", stem("brolin", Some(n))))))
        .collect::<Result<_, _>>()?;
    if zeros.iter().all(Option::is_none) && brolin.iter().all(Option::is_none) {
        return Err(Failure::config(
            format!(
                "no results in {}: run `xjulia zeros` and `xjulia brolin` first",
                dir.display()
            ),
            Some("output_dir".into()),
        ));
    }
    let zeros = all_present(zeros).filter(|z| !z.is_empty());
    let brolin = all_present(brolin).filter(|b| !b.is_empty());

    let leading_coefficient = zeros.as_ref().map(|z| {
        let rows: Vec<LeadingRow> = z
            .iter()
            .map(|d| LeadingRow {
                n: d.n,
                gamma_root: d.gamma_root,
                gap: d.gamma_root.map(|g| (g - 2.0).abs()),
            })
            .collect();
        let gaps: Option<Vec<f64>> = rows.iter().map(|r| r.gap).collect();
        let pass = gaps.map(|g| {
            let last = *g.last().expect("nonempty");
            last <= t.gamma_root_gap && (g.len() < 2 || last < g[0])
        });
        Section { rows, pass }
    });
    let green_gap = zeros.as_ref().map(|z| {
        let rows: Vec<GreenRow> = z
            .iter()
            .map(|d| GreenRow {
                n: d.n,
                points: d.green_points.clone(),
                gaps: d.green_gaps.clone(),
            })
            .collect();
        let last_ok = rows
            .last()
            .is_some_and(|r| !r.gaps.is_empty() && r.gaps.iter().all(|&g| g <= t.green_gap));
        let k = rows.last().map_or(0, |r| r.gaps.len());
        let trend = rows.iter().all(|r| r.gaps.len() == k)
            && (0..k)
                .all(|j| strictly_decreasing(&rows.iter().map(|r| r.gaps[j]).collect::<Vec<_>>()));
        Section {
            rows,
            pass: Some(last_ok && trend),
        }
    });
    let zeros_section = zeros.as_ref().map(|z| {
        let rows: Vec<ZerosRow> = z
            .iter()
            .map(|d| ZerosRow {
                n: d.n,
                ks: d.ks,
                exc_dist: d.exc_dist,
                degree_law: d.degree_law,
            })
            .collect();
        let ks: Option<Vec<f64>> = rows.iter().map(|r| r.ks).collect();
        let dist: Option<Vec<f64>> = rows.iter().map(|r| r.exc_dist).collect();
        let pass = ks.map(|ks| {
            let last = *ks.last().expect("nonempty");
            let ks_ok = last <= t.ks && (ks.len() < 2 || last < ks[0]);
            let dist_ok = dist.as_ref().is_none_or(|d| strictly_decreasing(d));
            ks_ok && dist_ok && rows.last().is_some_and(|r| r.degree_law)
        });
        Section { rows, pass }
    });
    let moments = brolin.as_ref().map(|b| {
        let rows: Vec<MomentRow> = b
            .iter()
            .map(|d| MomentRow {
                n: d.n.unwrap_or(0),
                max_abs_moment: d.max_abs_moment,
                mean_abs_im: d.mean_abs_im,
            })
            .collect();
        let m: Vec<f64> = rows.iter().map(|r| r.max_abs_moment).collect();
        let im: Vec<f64> = rows.iter().map(|r| r.mean_abs_im).collect();
        let pass = m.last().is_some_and(|&x| x <= t.moment)
            && strictly_decreasing(&m)
            && strictly_decreasing(&im);
        Section {
            rows,
            pass: Some(pass),
        }
    });
    let preimages = brolin.as_ref().map(|b| {
        let rows: Vec<PreimageRow> = b
            .iter()
            .map(|d| PreimageRow {
                n: d.n.unwrap_or(0),
                max_count: d.preimage_max_count,
            })
            .collect();
        let counts: Option<Vec<usize>> = rows.iter().map(|r| r.max_count).collect();
        let pass = counts.map(|c| {
            let half = c.len() / 2;
            let early = c[..half.max(1)].iter().copied().max().unwrap_or(0);
            let late = c[half..].iter().copied().max().unwrap_or(0);
            late <= early + t.p2_slack
        });
        Section { rows, pass }
    });
    let verdicts = [
        leading_coefficient.as_ref().map(|x| x.pass),
        green_gap.as_ref().map(|x| x.pass),
        zeros_section.as_ref().map(|x| x.pass),
        moments.as_ref().map(|x| x.pass),
        preimages.as_ref().map(|x| x.pass),
    ];
    let pass = verdicts
        .iter()
        .map(|v| v.flatten())
        .collect::<Option<Vec<bool>>>()
        .map(|v| v.iter().all(|&b| b));
    let report = Report {
        schema_version: SCHEMA_VERSION,
        n_list: s.n_list.clone(),
        leading_coefficient,
        green_gap,
        zeros: zeros_section,
        moments,
        preimages,
        pass,
    };
    let path = dir.join("report.json");
    write_json(&path, &report)?;
    Ok(path)
}
