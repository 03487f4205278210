use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorKind, Result};
use crate::prob::io::ChannelDoc;
use crate::prob::DEFAULT_STATE_CAP;
use crate::region::unit_seed;

use super::coord::{coordination_tv, secrecy_leakage, select_f_instance, Granularity, Reference};
use super::decode::{exact_error, monte_carlo_error, Decoder, ErrorMode};
use super::scheme::{rb_encoders, rb_joint, rc_joint, tv_rb_rc, TvMode};
use super::{build_binning, BinRounding, CodeConfig, EncoderMode, Rates};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TvMcf,
    TvCoord,
    PErr,
    Leakage,
    FStar,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::TvMcf, Metric::TvCoord, Metric::PErr, Metric::Leakage, Metric::FStar];

    pub fn name(self) -> &'static str {
        match self {
            Metric::TvMcf => "tv_mcf",
            Metric::TvCoord => "tv_coord",
            Metric::PErr => "p_err",
            Metric::Leakage => "leakage",
            Metric::FStar => "f_star",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    #[serde(default = "default_cap")]
    pub states: u128,
}

fn default_cap() -> u128 {
    DEFAULT_STATE_CAP
}

impl Default for Caps {
    fn default() -> Self {
        Self { states: DEFAULT_STATE_CAP }
    }
}

fn all_metrics() -> Vec<Metric> {
    Metric::ALL.to_vec()
}

/// JSON run description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSpec {
    pub channel: ChannelDoc,
    #[serde(rename = "bar_P_W")]
    pub p_w: Vec<f64>,
    #[serde(rename = "bar_P_X_given_W")]
    pub p_x_given_w: Vec<Vec<f64>>,
    pub rates: Rates,
    #[serde(rename = "K", default)]
    pub k: Option<usize>,
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "all_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default = "default_error_mode")]
    pub error_mode: ErrorMode,
    #[serde(default)]
    pub decoder: Decoder,
    #[serde(default)]
    pub granularity: Granularity,
    #[serde(default)]
    pub reference: Reference<f64>,
    #[serde(default)]
    pub rounding: BinRounding,
    #[serde(default)]
    pub encoder: EncoderMode,
}

fn default_error_mode() -> ErrorMode {
    ErrorMode::Exact
}

impl RunSpec {
    pub fn config(&self, n: usize, seed: u64) -> Result<CodeConfig<f64>> {
        let cfg = CodeConfig {
            n,
            k: self.k,
            rates: self.rates,
            p_w: self.p_w.clone(),
            p_x_given_w: self.p_x_given_w.clone(),
            channel: self.channel.to_channel()?,
            seed: unit_seed(seed, n as u64),
            cap: self.caps.states,
            rounding: self.rounding,
            encoder: self.encoder,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn wants(&self, m: Metric) -> bool {
        self.metrics.contains(&m)
    }
}

/// One `(n, seed)` cell. Metrics not requested, or unavailable, are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub n: usize,
    pub seed: u64,
    pub tv_mcf: Option<f64>,
    pub tv_coord: Option<f64>,
    pub p_err: Option<f64>,
    pub leakage: Option<f64>,
    pub f_star: Option<usize>,
    /// Whether the f-selection value stayed under twice the unconditional TV.
    pub bound_holds: Option<bool>,
    pub p_err_std_err: Option<f64>,
    pub fallbacks: usize,
}

impl ExperimentRow {
    pub const HEADER: [&'static str; 7] = ["n", "seed", "tv_mcf", "tv_coord", "p_err", "leakage", "f_star"];

    /// CSV fields in `HEADER` order; missing values are empty.
    pub fn fields(&self) -> [String; 7] {
        let f = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        [
            self.n.to_string(),
            self.seed.to_string(),
            f(self.tv_mcf),
            f(self.tv_coord),
            f(self.p_err),
            f(self.leakage),
            self.f_star.map_or(String::new(), |x| x.to_string()),
        ]
    }

    pub fn metric(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::TvMcf => self.tv_mcf,
            Metric::TvCoord => self.tv_coord,
            Metric::PErr => self.p_err,
            Metric::Leakage => self.leakage,
            Metric::FStar => self.f_star.map(|f| f as f64),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellFailure {
    pub n: usize,
    pub seed: u64,
    pub resource: bool,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std_err: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct NSummary {
    pub n: usize,
    pub bins: [usize; 3],
    pub effective_rates: Rates,
    pub metrics: BTreeMap<String, MetricSummary>,
    pub fallbacks: usize,
    pub bound_holds: usize,
    pub bound_checked: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub nominal_rates: Rates,
    pub per_n: Vec<NSummary>,
    pub failures: Vec<CellFailure>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<ExperimentRow>,
    pub summary: Summary,
}

impl ExperimentReport {
    pub fn has_resource_failure(&self) -> bool {
        self.summary.failures.iter().any(|f| f.resource)
    }

    /// Mean of `m` at blocklength `n`, if any cell produced it.
    pub fn mean(&self, n: usize, m: Metric) -> Option<f64> {
        self.summary.per_n.iter().find(|s| s.n == n)?.metrics.get(m.name()).map(|s| s.mean)
    }
}

fn cell(spec: &RunSpec, n: usize, seed: u64) -> Result<ExperimentRow> {
    let cfg = spec.config(n, seed)?;
    let s = build_binning(&cfg)?;
    let mut row = ExperimentRow {
        n,
        seed,
        tv_mcf: None,
        tv_coord: None,
        p_err: None,
        leakage: None,
        f_star: None,
        bound_holds: None,
        p_err_std_err: None,
        fallbacks: 0,
    };
    let enc = rb_encoders(&cfg, &s)?;
    let joints = rb_joint(&cfg, &s).and_then(|rb| Ok((rc_joint(&cfg, &s, &enc)?, rb)));
    let (rc, rb) = match joints {
        Ok(j) => j,
        // exact laws are out of reach; only the Monte Carlo error survives
        Err(e @ Error::CapExceeded { .. }) => match spec.error_mode {
            ErrorMode::MonteCarlo { trials } if spec.wants(Metric::PErr) => {
                let r = monte_carlo_error(&cfg, &s, &enc, trials, spec.decoder)?;
                row.p_err = Some(r.p_err);
                row.p_err_std_err = r.std_err;
                row.fallbacks = r.fallbacks;
                return Ok(row);
            }
            _ => return Err(e),
        },
        Err(e) => return Err(e),
    };
    row.fallbacks = rc.fallbacks;
    if spec.wants(Metric::TvMcf) {
        row.tv_mcf = Some(tv_rb_rc(&rb, &rc, TvMode::McfShortcut, cfg.cap)?);
    }
    let need_f = [Metric::TvCoord, Metric::Leakage, Metric::FStar].iter().any(|&m| spec.wants(m));
    if need_f {
        let sel = select_f_instance(&cfg, &rb, &rc)?;
        row.f_star = spec.wants(Metric::FStar).then_some(sel.f_star);
        row.bound_holds = Some(sel.holds);
        if spec.wants(Metric::TvCoord) {
            row.tv_coord =
                Some(coordination_tv(&cfg, &rb, &rc, Some(sel.f_star), spec.granularity, &spec.reference)?.value);
        }
        if spec.wants(Metric::Leakage) {
            row.leakage = Some(secrecy_leakage(&cfg, &rc, None)?);
        }
    }
    if spec.wants(Metric::PErr) {
        let r = match spec.error_mode {
            ErrorMode::Exact => exact_error(&cfg, &s, &rb, &rc, spec.decoder)?,
            ErrorMode::MonteCarlo { trials } => monte_carlo_error(&cfg, &s, &enc, trials, spec.decoder)?,
        };
        row.p_err = Some(r.p_err);
        row.p_err_std_err = r.std_err;
    }
    Ok(row)
}

fn summarize(values: &[f64]) -> MetricSummary {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
    MetricSummary { mean, std_err: (var / k).sqrt(), count: values.len() }
}

/// Runs every `(n, seed)` cell. Cells are evaluated in parallel on the
/// current rayon pool and collected in `(n_list, seeds)` order. A failing
/// cell is recorded in the summary and the others are kept.
pub fn experiment(spec: &RunSpec) -> Result<ExperimentReport> {
    if spec.n_list.is_empty() || spec.seeds.is_empty() {
        return Err(Error::Invalid("n_list and seeds must be nonempty".into()));
    }
    // shape errors are reported once, before any work
    let probe = spec.config(spec.n_list[0], spec.seeds[0])?;
    let cells: Vec<(usize, u64)> = spec.n_list.iter().flat_map(|&n| spec.seeds.iter().map(move |&s| (n, s))).collect();
    let results: Vec<Result<ExperimentRow>> = cells.par_iter().map(|&(n, s)| cell(spec, n, s)).collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (&(n, seed), r) in cells.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(CellFailure { n, seed, resource: e.kind() == ErrorKind::Resource, message: e.to_string() }),
        }
    }
    let mut per_n = Vec::new();
    for &n in &spec.n_list {
        let cfg = CodeConfig { n, ..probe.clone() };
        let (m, c, f) = cfg.bins()?;
        let mine: Vec<&ExperimentRow> = rows.iter().filter(|r| r.n == n).collect();
        let mut metrics = BTreeMap::new();
        for m in Metric::ALL {
            let vals: Vec<f64> = mine.iter().filter_map(|r| r.metric(m)).collect();
            if !vals.is_empty() {
                metrics.insert(m.name().to_string(), summarize(&vals));
            }
        }
        per_n.push(NSummary {
            n,
            bins: [m, c, f],
            effective_rates: cfg.effective_rates()?,
            metrics,
            fallbacks: mine.iter().map(|r| r.fallbacks).sum(),
            bound_holds: mine.iter().filter(|r| r.bound_holds == Some(true)).count(),
            bound_checked: mine.iter().filter(|r| r.bound_holds.is_some()).count(),
            failed: failures.iter().filter(|f| f.n == n).count(),
        });
    }
    Ok(ExperimentReport { rows, summary: Summary { nominal_rates: spec.rates, per_n, failures } })
}
