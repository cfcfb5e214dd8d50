//! Experiment settings: built-in defaults, overlaid by a config file, overlaid
//! by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use xjulia_core::dynamics::{RasterSpec, Rect};
use xjulia_core::exceptional::DarbouxConfig;
use xjulia_core::poly::Poly;
use xjulia_core::Complex64;

use crate::failure::Failure;

pub const SCHEMA_VERSION: u32 = 1;

const DEFAULTS: &str = include_str!("../defaults.json");

/// Acceptance thresholds used by the report and the per-command verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub gamma_root_gap: f64,
    pub green_gap: f64,
    pub green_points: Vec<Complex64>,
    pub ks: f64,
    pub moment: f64,
    pub moment_k: usize,
    pub exceptional_radius: f64,
    pub p2_region: Rect,
    pub p2_draws: usize,
    pub p2_slack: usize,
    pub boundary_radius: f64,
    pub boundary_points: usize,
    pub forward_eps_factor: f64,
    pub forward_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<DarbouxConfig>,
    /// Bypasses the exceptional construction and runs the dynamics on a
    /// given polynomial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_poly: Option<Poly>,
    pub n_list: Vec<usize>,
    pub samples: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub chains: usize,
    pub grid: RasterSpec,
    pub output_dir: PathBuf,
    pub thresholds: Thresholds,
}

/// Flag values, already parsed; `None` leaves the lower layer untouched.
#[derive(Debug, Default, Clone)]
pub struct FlagOverrides {
    pub preset: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub n_list: Option<Vec<usize>>,
    pub samples: Option<usize>,
    pub burn_in: Option<usize>,
    pub seed: Option<u64>,
    pub chains: Option<usize>,
    pub resolution: Option<usize>,
    pub max_iter: Option<u32>,
    pub out: Option<PathBuf>,
    pub thresholds: Vec<(String, Value)>,
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Overlay a config file: `family` and `raw_poly` replace each other wholesale,
/// every other object merges field by field.
fn overlay_file(base: &mut Value, mut file: Map<String, Value>) {
    let root = base.as_object_mut().expect("defaults are an object");
    for key in ["family", "raw_poly"] {
        if let Some(v) = file.remove(key) {
            root.remove("family");
            root.remove("raw_poly");
            root.insert(key.to_string(), v);
        }
    }
    merge(base, Value::Object(file));
}

fn flags_patch(flags: &FlagOverrides) -> Value {
    let mut patch = Map::new();
    let mut family = Map::new();
    if let Some(p) = &flags.preset {
        family.insert("preset".into(), json!(p));
    }
    if let Some(a) = flags.alpha {
        family.insert("alpha".into(), json!(a));
    }
    if let Some(b) = flags.beta {
        family.insert("beta".into(), json!(b));
    }
    if !family.is_empty() {
        patch.insert("family".into(), Value::Object(family));
    }
    let mut put = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            patch.insert(k.into(), v);
        }
    };
    put("n_list", flags.n_list.as_ref().map(|v| json!(v)));
    put("samples", flags.samples.map(|v| json!(v)));
    put("burn_in", flags.burn_in.map(|v| json!(v)));
    put("seed", flags.seed.map(|v| json!(v)));
    put("chains", flags.chains.map(|v| json!(v)));
    put("output_dir", flags.out.as_ref().map(|v| json!(v)));
    let mut grid = Map::new();
    if let Some(r) = flags.resolution {
        grid.insert("resolution".into(), json!(r));
    }
    if let Some(m) = flags.max_iter {
        grid.insert("max_iter".into(), json!(m));
    }
    if !grid.is_empty() {
        patch.insert("grid".into(), Value::Object(grid));
    }
    if !flags.thresholds.is_empty() {
        let t: Map<String, Value> = flags.thresholds.iter().cloned().collect();
        patch.insert("thresholds".into(), Value::Object(t));
    }
    Value::Object(patch)
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T, Failure> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = (path != ".").then_some(path);
        Failure::config(format!("{origin}: {}", e.inner()), field)
    })
}

pub fn defaults() -> Value {
    serde_json::from_str(DEFAULTS).expect("built-in defaults parse")
}

/// Resolve defaults, the optional config file and the flags into settings.
pub fn resolve(config: Option<&Path>, flags: &FlagOverrides) -> Result<Settings, Failure> {
    let mut value = defaults();
    if let Some(path) = config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display()), None))?;
        let file: Map<String, Value> = parse_json(&text, &path.display().to_string())?;
        overlay_file(&mut value, file);
    }
    let patch = flags_patch(flags);
    if patch.get("family").is_some() {
        if let Some(root) = value.as_object_mut() {
            if root.remove("raw_poly").is_some() {
                root.insert("family".into(), json!({}));
            }
        }
    }
    merge(&mut value, patch);
    let settings: Settings = parse_json(&value.to_string(), "configuration")?;
    settings.validate()?;
    Ok(settings)
}

impl Settings {
    fn validate(&self) -> Result<(), Failure> {
        let bad = |msg: String, field: &str| Err(Failure::config(msg, Some(field.to_string())));
        if self.schema_version != SCHEMA_VERSION {
            return bad(
                format!("unsupported schema_version {}", self.schema_version),
                "schema_version",
            );
        }
        match (&self.family, &self.raw_poly) {
            (Some(_), Some(_)) => {
                return bad(
                    "give either family or raw_poly, not both".into(),
                    "raw_poly",
                )
            }
            (None, None) => return bad("missing family or raw_poly".into(), "family"),
            _ => {}
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_list must be strictly ascending".into(), "n_list");
        }
        if self.samples == 0 || self.samples > xjulia_core::dynamics::MAX_SAMPLES {
            return bad(
                format!(
                    "samples must be in 1..={}",
                    xjulia_core::dynamics::MAX_SAMPLES
                ),
                "samples",
            );
        }
        if self.burn_in == 0 {
            return bad("burn_in must be positive".into(), "burn_in");
        }
        if self.chains == 0 {
            return bad("chains must be positive".into(), "chains");
        }
        if let Err(e) = self.grid.validate() {
            let field = if self.grid.resolution == 0
                || self.grid.resolution > xjulia_core::dynamics::MAX_RESOLUTION
            {
                "grid.resolution"
            } else if self.grid.max_iter == 0
                || self.grid.max_iter > xjulia_core::dynamics::MAX_ITER
            {
                "grid.max_iter"
            } else {
                "grid.half_width"
            };
            return bad(e.to_string(), field);
        }
        if self.thresholds.moment_k == 0
            || self.thresholds.moment_k > xjulia_core::measure::MAX_MOMENT
        {
            return bad("moment_k must be in 1..=32".into(), "thresholds.moment_k");
        }
        Ok(())
    }
}

/// Parse `key=value` threshold overrides; the value is read as JSON.
pub fn parse_threshold(arg: &str) -> Result<(String, Value), String> {
    let (k, v) = arg
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got {arg:?}"))?;
    let value = serde_json::from_str(v).map_err(|e| format!("value of {k}: {e}"))?;
    Ok((k.trim().to_string(), value))
}

/// A parsed `--n-list` value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NList(pub Vec<usize>);

/// Comma-separated list of indices; the empty string is the empty list.
pub fn parse_n_list(arg: &str) -> Result<NList, String> {
    arg.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|e| format!("{s:?}: {e}")))
        .collect::<Result<_, _>>()
        .map(NList)
}
