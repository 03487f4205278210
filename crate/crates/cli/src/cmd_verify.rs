use clap::Args;

use coordlab::prob::DEFAULT_STATE_CAP;
use coordlab::verify::{run_all, VerifyOptions};

use crate::output::{emit, json_bytes};
use crate::{CmdResult, Common, Exit};

#[derive(Args)]
pub struct VerifyArgs {
    /// Instances per property.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Test hook: multiply every TV under test by this factor.
    #[arg(long = "inject-tv-scale", hide = true, default_value_t = 1.0)]
    tv_scale: f64,
}

pub fn run(a: VerifyArgs, c: &Common) -> CmdResult {
    let opts = VerifyOptions {
        seed: c.seed.unwrap_or(0),
        trials: a.trials,
        tv_scale: a.tv_scale,
        cap: c.cap.unwrap_or(DEFAULT_STATE_CAP),
    };
    let rep = run_all(&opts)?;
    for r in &rep.results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    if let Some(out) = &c.out {
        emit(Some(out), &json_bytes(&rep)?)?;
    }
    if rep.all_passed() {
        return Ok(());
    }
    let list: Vec<String> = rep.failures().map(|f| format!("{} (seed {})", f.name, f.seed)).collect();
    Err(Exit::property(format!("failing properties: {}", list.join(", "))))
}
