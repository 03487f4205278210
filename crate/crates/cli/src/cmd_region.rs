use clap::Subcommand;
use serde::Deserialize;

use coordlab::prob::io::ChannelDoc;
use coordlab::region::{boundary_sweep, membership, RateTriple, RegionKind, SearchConfig, Target};

use crate::output::{csv_bytes, emit, json_bytes, read_json, sibling};
use crate::{CmdResult, Common, Exit};

#[derive(Subcommand)]
pub enum RegionOp {
    /// Is `(target, R_M, R_C)` in the region? Prints the verdict; `--out`
    /// receives the witness report.
    Member,
    /// Minimal `R_C` over a grid of `R_M`, as CSV `R_M,R_C_min,witness_id`.
    Sweep {
        /// Grid step for `R_M` (at most 1/64).
        #[arg(long)]
        step: Option<f64>,
    },
}

fn general() -> RegionKind {
    RegionKind::General
}

/// Problem file shared by both operations.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionProblem {
    pub channel: ChannelDoc,
    #[serde(default = "general")]
    pub kind: RegionKind,
    #[serde(default)]
    pub target: Option<Target<f64>>,
    #[serde(rename = "R_M", default)]
    pub r_m: Option<f64>,
    #[serde(rename = "R_C", default)]
    pub r_c: Option<f64>,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub step: Option<f64>,
}

pub fn run(op: RegionOp, c: &Common) -> CmdResult {
    let p: RegionProblem = read_json(c.input.as_ref(), "region")?;
    let ch = p.channel.to_channel::<f64>()?;
    let mut search = p.search.clone();
    if let Some(s) = c.seed {
        search.seed = s;
    }
    match op {
        RegionOp::Member => {
            let target = p.target.ok_or_else(|| Exit::input("member query needs `target`"))?;
            let (r_m, r_c) = match (p.r_m, p.r_c) {
                (Some(m), Some(r)) => (m, r),
                _ => return Err(Exit::input("member query needs `R_M` and `R_C`")),
            };
            let rep = membership(&RateTriple { target, r_m, r_c }, &ch, p.kind, &search)?;
            println!("{}", rep.verdict);
            if let Some(b) = &rep.bounds {
                println!("R_M_sup={} R_C_inf={}", b.r_m_sup, b.r_c_inf);
            }
            log::info!("{} candidates checked: {}", rep.candidates_checked, rep.detail);
            if let Some(out) = &c.out {
                emit(Some(out), &json_bytes(&rep)?)?;
            }
            Ok(())
        }
        RegionOp::Sweep { step } => {
            let step = step.or(p.step).unwrap_or(1.0 / 64.0);
            let t = boundary_sweep(&ch, p.kind, step, p.target.as_ref(), &search)?;
            let rows = t.rows.iter().map(|r| [r.r_m.to_string(), r.r_c_min.to_string(), r.witness_id.to_string()]);
            emit(c.out.as_deref(), &csv_bytes(&["R_M", "R_C_min", "witness_id"], rows)?)?;
            if let Some(out) = &c.out {
                emit(Some(&sibling(out, "witnesses.json")), &json_bytes(&t.witnesses)?)?;
            }
            if let Some(last) = t.rows.last() {
                log::info!("largest R_M on the boundary: {}", last.r_m);
            }
            Ok(())
        }
    }
}
