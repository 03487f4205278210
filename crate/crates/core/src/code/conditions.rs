use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::fm::paper::{achievability_system, derive};
use crate::prob::Joint;
use crate::region::{bounds_from_joint, RegionKind};
use crate::scalar::Scalar;

use super::Rates;

#[derive(Debug, Clone, Serialize)]
pub struct ConditionRow {
    pub text: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub satisfied: bool,
}

/// Slack of every scheme condition at a rate point, and the `(R_M, R_C)`
/// window left after eliminating `R_F`.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub rows: Vec<ConditionRow>,
    pub all_satisfied: bool,
    /// Symbolic window lines.
    pub window: Vec<String>,
    /// Smallest upper bound on `R_M` in the window.
    pub r_m_upper: f64,
    /// Largest lower bound on `R_C` in the window.
    pub r_c_lower: f64,
    /// Coupled window rows evaluated at the point.
    pub coupled: Vec<ConditionRow>,
    /// `|r_m_upper − R_M_sup| + |r_c_lower − R_C_inf|` against the region
    /// bounds of the same joint.
    pub region_mismatch: f64,
}

fn row(r: crate::fm::RowReport) -> ConditionRow {
    ConditionRow { text: r.text, lhs: r.lhs, rhs: r.rhs, slack: r.slack, satisfied: r.feasible }
}

/// Evaluates the conditions on a single-letter `(W, X, Y, Z)` joint.
pub fn rate_condition_check<T: Scalar>(rates: Rates, joint: &Joint<T>, kind: RegionKind) -> Result<ConditionReport> {
    let point: BTreeMap<String, f64> =
        [("R_M", rates.r_m), ("R_C", rates.r_c), ("R_F", rates.r_f)].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    let sys = achievability_system(kind);
    let rows: Vec<ConditionRow> = sys.evaluate(joint, &point)?.into_iter().map(row).collect();
    let all_satisfied = rows.iter().all(|r| r.satisfied);

    let d = derive(kind)?;
    let reduced = &d.reduced;
    let mut r_m_upper = f64::INFINITY;
    let mut r_c_lower = f64::NEG_INFINITY;
    let mut coupled = Vec::new();
    let pt2: BTreeMap<String, f64> = reduced.variables.iter().map(|v| (v.clone(), point[v])).collect();
    let evals = reduced.evaluate(joint, &pt2)?;
    for (ineq, ev) in reduced.rows.iter().zip(evals) {
        let nz: Vec<usize> = (0..ineq.coeffs.len()).filter(|&k| ineq.coeffs[k] != 0).collect();
        match nz.as_slice() {
            [k] if reduced.variables[*k] == "R_M" && ineq.coeffs[*k] == 1 => r_m_upper = r_m_upper.min(ev.rhs),
            [k] if reduced.variables[*k] == "R_C" && ineq.coeffs[*k] == -1 => r_c_lower = r_c_lower.max(ev.rhs),
            [_] => {}
            _ => coupled.push(row(ev)),
        }
    }
    let b = bounds_from_joint(joint, kind)?;
    let region_mismatch = (r_m_upper - b.r_m_sup.as_f64()).abs() + (r_c_lower - b.r_c_inf.as_f64()).abs();
    Ok(ConditionReport { rows, all_satisfied, window: d.window, r_m_upper, r_c_lower, coupled, region_mismatch })
}
