use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use serde::Deserialize;

use coordlab::fm::paper::{achievability_system, derive};
use coordlab::fm::{parse_system, RateSystem, SymbolTable, Valuation, WithSymbols};
use coordlab::prob::io::DistributionDoc;
use coordlab::region::RegionKind;

use crate::output::{csv_bytes, emit, read_json, sibling};
use crate::{CmdResult, Common, Exit};

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
pub struct FmArgs {
    /// Print the built-in achievability system and its elimination.
    #[arg(long)]
    paper: bool,
    /// Region for `--paper`: general, secrecy, marginal or all.
    #[arg(long, default_value = "general")]
    kind: String,
    #[command(subcommand)]
    op: Option<FmOp>,
}

#[derive(Subcommand)]
enum FmOp {
    /// Eliminate rate variables from a system file.
    Eliminate {
        /// Variable to eliminate (repeatable, applied in order).
        #[arg(long = "var", required = true)]
        vars: Vec<String>,
        /// JSON `{distribution?, symbols?, point}` giving a rate point and
        /// values for the constants; prints a feasibility table.
        #[arg(long)]
        valuation: Option<PathBuf>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ValuationDoc {
    #[serde(default)]
    distribution: Option<DistributionDoc>,
    #[serde(default)]
    symbols: BTreeMap<String, f64>,
    point: BTreeMap<String, f64>,
}

fn section(out: &mut String, title: &str, lines: &[String]) {
    let _ = writeln!(out, "# {title}");
    for l in lines {
        let _ = writeln!(out, "{l}");
    }
}

fn paper_text(kind: RegionKind) -> Result<String, Exit> {
    let name = format!("{kind:?}").to_uppercase();
    let d = derive(kind)?;
    let mut s = String::new();
    section(&mut s, &format!("{name} achievability conditions"), &achievability_system(kind).render());
    section(&mut s, "after eliminating R_F", &d.eliminated.render());
    section(&mut s, "rate window under W - X - YZ", &d.window);
    Ok(s)
}

fn feasibility(sys: &RateSystem, original: &[String], doc: &ValuationDoc) -> Result<(Vec<u8>, bool), Exit> {
    let symbols = SymbolTable(doc.symbols.clone());
    let joint = doc.distribution.as_ref().map(|d| d.to_joint::<f64>()).transpose()?;
    if let Some(k) = doc.point.keys().find(|k| !original.contains(k)) {
        return Err(coordlab::Error::UnknownRate(k.clone()).into());
    }
    let point: BTreeMap<String, f64> =
        doc.point.iter().filter(|(k, _)| sys.variables.contains(k)).map(|(k, v)| (k.clone(), *v)).collect();
    let reports = match &joint {
        Some(j) => sys.evaluate(&WithSymbols(j, &symbols) as &dyn Valuation, &point)?,
        None => sys.evaluate(&symbols, &point)?,
    };
    let all = reports.iter().all(|r| r.feasible);
    let rows = reports.iter().map(|r| {
        [r.text.clone(), r.lhs.to_string(), r.rhs.to_string(), r.slack.to_string(), r.feasible.to_string()]
    });
    Ok((csv_bytes(&["inequality", "lhs", "rhs", "slack", "feasible"], rows)?, all))
}

pub fn run(a: FmArgs, c: &Common) -> CmdResult {
    match a.op {
        None if a.paper => {
            let kinds = match a.kind.to_ascii_lowercase().as_str() {
                "all" => vec![RegionKind::General, RegionKind::Secrecy, RegionKind::Marginal],
                k => vec![k.parse::<RegionKind>()?],
            };
            let mut text = String::new();
            for (i, k) in kinds.into_iter().enumerate() {
                if i > 0 {
                    text.push('\n');
                }
                text.push_str(&paper_text(k)?);
            }
            emit(c.out.as_deref(), text.as_bytes())
        }
        None => Err(Exit::input("fm needs --paper or the `eliminate` subcommand")),
        Some(FmOp::Eliminate { vars, valuation }) => {
            let path = c.input.as_ref().ok_or_else(|| Exit::input("fm eliminate needs --input <system.json>"))?;
            let text = std::fs::read_to_string(path).map_err(|e| Exit::input(format!("cannot read {}: {e}", path.display())))?;
            let mut sys = parse_system(&text)?;
            let original = sys.variables.clone();
            for v in &vars {
                sys = sys.eliminate(v)?;
            }
            let mut body = String::new();
            for l in sys.render() {
                let _ = writeln!(body, "{l}");
            }
            match valuation {
                None => emit(c.out.as_deref(), body.as_bytes()),
                Some(vp) => {
                    let doc: ValuationDoc = read_json(Some(&vp), "valuation")?;
                    let (table, all) = feasibility(&sys, &original, &doc)?;
                    match &c.out {
                        Some(out) => {
                            emit(Some(&sibling(out, "system.txt")), body.as_bytes())?;
                            emit(Some(out), &table)?;
                        }
                        None => {
                            body.push('\n');
                            emit(None, body.as_bytes())?;
                            emit(None, &table)?;
                        }
                    }
                    log::info!("point is {}", if all { "feasible" } else { "infeasible" });
                    Ok(())
                }
            }
        }
    }
}
