use clap::Subcommand;
use serde::Deserialize;

use coordlab::code::{
    binning_lemma_verify, experiment, BinRounding, ErrorMode, ExperimentRow, LemmaKind, RunSpec, SourceSpec,
};
use coordlab::prob::io::DistributionDoc;
use coordlab::prob::DEFAULT_STATE_CAP;

use crate::output::{csv_bytes, emit, json_bytes, read_json, sibling};
use crate::{CmdResult, Common, Exit};

#[derive(Subcommand)]
pub enum CodeOp {
    /// Run an experiment spec: CSV rows per `(n, seed)` and a JSON summary
    /// (next to `--out` as `<stem>.summary.json`, or on stderr).
    Run {
        /// Seeds as `a..b` (both ends included), a comma list, or one number.
        #[arg(long)]
        seeds: Option<String>,
        /// Explicit path for the summary.
        #[arg(long)]
        summary: Option<std::path::PathBuf>,
    },
    /// Convergence of a binning lemma on a correlated-source spec.
    Lemma,
}

pub fn parse_seeds(s: &str) -> Result<Vec<u64>, Exit> {
    let bad = || Exit::input(format!("cannot parse seeds `{s}`"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LemmaDoc {
    kind: LemmaKind,
    distribution: DistributionDoc,
    sources: Vec<String>,
    #[serde(default)]
    side: Vec<String>,
    rates: Vec<f64>,
    #[serde(default)]
    known: Vec<usize>,
    n_list: Vec<usize>,
    #[serde(default)]
    seeds: Vec<u64>,
    #[serde(default)]
    rounding: BinRounding,
}

pub fn run(op: CodeOp, c: &Common) -> CmdResult {
    match op {
        CodeOp::Run { seeds, summary } => {
            let mut spec: RunSpec = read_json(c.input.as_ref(), "code run")?;
            if let Some(s) = seeds {
                spec.seeds = parse_seeds(&s)?;
            } else if spec.seeds.is_empty() {
                spec.seeds = vec![c.seed.unwrap_or(0)];
            }
            if let Some(cap) = c.cap {
                spec.caps.states = cap;
            }
            match c.mode.as_deref() {
                None => {}
                Some("exact") => spec.error_mode = ErrorMode::Exact,
                Some("mc") | Some("monte_carlo") => {
                    spec.error_mode = ErrorMode::MonteCarlo { trials: c.mc_trials.unwrap_or(10_000) }
                }
                Some(m) => return Err(Exit::input(format!("unknown mode `{m}` (exact or mc)"))),
            }
            if let (Some(t), ErrorMode::MonteCarlo { trials }) = (c.mc_trials, &mut spec.error_mode) {
                *trials = t;
            }
            let rep = experiment(&spec)?;
            let rows = rep.rows.iter().map(ExperimentRow::fields);
            emit(c.out.as_deref(), &csv_bytes(&ExperimentRow::HEADER, rows)?)?;
            let summary_bytes = json_bytes(&rep.summary)?;
            match summary.or_else(|| c.out.as_ref().map(|o| sibling(o, "summary.json"))) {
                Some(p) => emit(Some(&p), &summary_bytes)?,
                None => eprint!("{}", String::from_utf8_lossy(&summary_bytes)),
            }
            if let Some(f) = rep.summary.failures.iter().find(|f| f.resource) {
                return Err(Exit {
                    code: 3,
                    message: format!(
                        "cell n={} seed={}: {} (partial results written; raise --cap or use --mode mc)",
                        f.n, f.seed, f.message
                    ),
                });
            }
            if let Some(f) = rep.summary.failures.first() {
                return Err(Exit::input(format!("cell n={} seed={}: {}", f.n, f.seed, f.message)));
            }
            Ok(())
        }
        CodeOp::Lemma => {
            let d: LemmaDoc = read_json(c.input.as_ref(), "code lemma")?;
            let seeds = if d.seeds.is_empty() { vec![c.seed.unwrap_or(0)] } else { d.seeds };
            let spec = SourceSpec {
                joint: d.distribution.to_joint::<f64>()?,
                sources: d.sources,
                side: d.side,
                rates: d.rates,
                known: d.known,
                rounding: d.rounding,
                cap: c.cap.unwrap_or(DEFAULT_STATE_CAP),
            };
            let rep = binning_lemma_verify(d.kind, &spec, &d.n_list, &seeds)?;
            emit(c.out.as_deref(), &json_bytes(&rep)?)?;
            eprintln!("{}; nonincreasing: {}; final {}", rep.label, if rep.nonincreasing { "yes" } else { "no" }, rep.final_value);
            Ok(())
        }
    }
}
