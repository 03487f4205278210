use std::collections::BTreeMap;

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::expr::{parse_expr, render_rational, EntropyExpr, Valuation, VarSet, VarTable};

/// Relation of an inequality as written by the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rel {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
}

/// `Σ coeffs[i]·R_i < bound`. Lower bounds are stored negated.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Inequality {
    pub coeffs: Vec<i64>,
    pub bound: EntropyExpr,
}

impl Inequality {
    fn normalized(mut self) -> Self {
        let g = self.coeffs.iter().fold(0i64, |g, c| g.gcd(c));
        if g > 1 {
            for c in &mut self.coeffs {
                *c /= g;
            }
            self.bound = self.bound.scale(Rational64::new(1, g));
        }
        self
    }

    pub fn is_trivial(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0)
    }
}

/// Slack of one inequality at a rate point.
#[derive(Debug, Clone, Serialize)]
pub struct RowReport {
    pub text: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub feasible: bool,
}

/// Linear inequalities over rate symbols with entropy-valued constants.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSystem {
    pub variables: Vec<String>,
    pub table: VarTable,
    pub rows: Vec<Inequality>,
}

impl RateSystem {
    pub fn new<S: Into<String>>(variables: impl IntoIterator<Item = S>, table: VarTable) -> Self {
        Self { variables: variables.into_iter().map(Into::into).collect(), table, rows: Vec::new() }
    }

    fn var_index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownRate(name.to_string()))
    }

    /// Adds `Σ coeffs rel bound`, where `bound` is expression text.
    pub fn push(&mut self, coeffs: &[(&str, i64)], rel: Rel, bound: &str) -> Result<()> {
        let e = parse_expr(bound, &mut self.table)?;
        self.push_expr(coeffs, rel, e)
    }

    pub fn push_expr(&mut self, coeffs: &[(&str, i64)], rel: Rel, bound: EntropyExpr) -> Result<()> {
        let mut c = vec![0i64; self.variables.len()];
        for (name, v) in coeffs {
            c[self.var_index(name)?] += v;
        }
        let row = match rel {
            Rel::Lt => Inequality { coeffs: c, bound },
            Rel::Gt => Inequality { coeffs: c.iter().map(|x| -x).collect(), bound: bound.neg() },
        };
        let row = row.normalized();
        if !self.rows.contains(&row) {
            self.rows.push(row);
        }
        Ok(())
    }

    fn rebuild(&self, rows: impl IntoIterator<Item = Inequality>) -> Self {
        let mut out = Self { variables: self.variables.clone(), table: self.table.clone(), rows: Vec::new() };
        for r in rows {
            let r = r.normalized();
            if !out.rows.contains(&r) {
                out.rows.push(r);
            }
        }
        out
    }

    /// Fourier–Motzkin elimination of `var`: every pair of one upper and one
    /// lower bound on `var` is summed; rows without `var` pass through.
    pub fn eliminate(&self, var: &str) -> Result<Self> {
        let k = self.var_index(var)?;
        let (mut up, mut low, mut keep) = (Vec::new(), Vec::new(), Vec::new());
        for r in &self.rows {
            match r.coeffs[k].signum() {
                1 => up.push(r),
                -1 => low.push(r),
                _ => keep.push(r.clone()),
            }
        }
        let mut rows = Vec::new();
        for u in &up {
            for l in &low {
                let (a, b) = (u.coeffs[k], -l.coeffs[k]);
                let coeffs: Vec<i64> = u.coeffs.iter().zip(&l.coeffs).map(|(x, y)| b * x + a * y).collect();
                let bound = u
                    .bound
                    .scale(Rational64::from_integer(b))
                    .add(&l.bound.scale(Rational64::from_integer(a)));
                rows.push(Inequality { coeffs, bound });
            }
        }
        rows.extend(keep);
        let mut out = self.rebuild(rows);
        for r in &mut out.rows {
            r.coeffs.remove(k);
        }
        out.variables.remove(k);
        let rows = std::mem::take(&mut out.rows);
        Ok(out.rebuild(rows))
    }

    /// Rewrites every constant under the declared Markov chains `A − B − C`
    /// (each given as three variable-name groups).
    pub fn apply_chains(&self, chains: &[[Vec<&str>; 3]]) -> Result<Self> {
        let mut table = self.table.clone();
        let sets: Vec<[VarSet; 3]> = chains
            .iter()
            .map(|[a, b, c]| Ok([table.set_of(a)?, table.set_of(b)?, table.set_of(c)?]))
            .collect::<Result<_>>()?;
        for &[a, b, c] in &sets {
            table.assume_chain(a, b, c);
        }
        let mut out = self.clone();
        out.table = table;
        for r in &mut out.rows {
            for &[a, b, c] in &sets {
                r.bound = r.bound.apply_markov(a, b, c);
            }
        }
        let rows = std::mem::take(&mut out.rows);
        Ok(out.rebuild(rows))
    }

    /// Replaces every multi-rate row with a positive coefficient on `var`
    /// by its pairings with the single-rate lower bounds on `var`. Each
    /// result is a necessary condition on the remaining rates. Rows with a
    /// negative coefficient on `var` are kept.
    pub fn substitute_lower(&self, var: &str) -> Result<Self> {
        let k = self.var_index(var)?;
        let is_single = |r: &Inequality| r.coeffs.iter().enumerate().all(|(i, c)| (i == k) == (*c != 0));
        let lows: Vec<&Inequality> = self.rows.iter().filter(|r| is_single(r) && r.coeffs[k] < 0).collect();
        let mut rows = Vec::new();
        for r in &self.rows {
            if is_single(r) || r.coeffs[k] <= 0 || r.coeffs.iter().filter(|c| **c != 0).count() < 2 {
                rows.push(r.clone());
                continue;
            }
            for l in &lows {
                let (a, b) = (r.coeffs[k], -l.coeffs[k]);
                let coeffs = r.coeffs.iter().zip(&l.coeffs).map(|(x, y)| b * x + a * y).collect();
                let bound = r
                    .bound
                    .scale(Rational64::from_integer(b))
                    .add(&l.bound.scale(Rational64::from_integer(a)));
                rows.push(Inequality { coeffs, bound });
            }
        }
        Ok(self.rebuild(rows))
    }

    /// Weakens lower bounds `var > L` to `var > L − t` for a term `t` known
    /// to be nonnegative, whenever the weakened bound renders no longer than
    /// the original. Never turns a bound of `0` negative.
    pub fn relax_lower(&self, var: &str, term: &str) -> Result<Self> {
        let k = self.var_index(var)?;
        let mut table = self.table.clone();
        let t = parse_expr(term, &mut table)?;
        let atoms = |e: &EntropyExpr, tb: &VarTable| {
            let s = e.render(tb);
            let s = s.trim_start_matches('-');
            if s == "0" { 0 } else { s.matches(['+', '-']).count() + 1 }
        };
        let mut out = self.clone();
        out.table = table;
        for r in &mut out.rows {
            let single = r.coeffs.iter().enumerate().all(|(i, c)| (i == k) == (*c != 0));
            if !single || r.coeffs[k] != -1 || r.bound.is_zero() {
                continue;
            }
            // bound is −L, so the weakened bound is −L + t
            let relaxed = r.bound.add(&t);
            if atoms(&relaxed, &out.table) <= atoms(&r.bound, &out.table) {
                r.bound = relaxed;
            }
        }
        let rows = std::mem::take(&mut out.rows);
        Ok(out.rebuild(rows))
    }

    /// Drops rows implied by others under every valuation (tolerance
    /// `tol`), and constant rows `0 < c` with `c` nonnegative everywhere. A row is implied by
    /// another with the same coefficients and a bound no larger.
    pub fn simplify(&self, valuations: &[&dyn Valuation], tol: f64) -> Result<Self> {
        let values: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|r| valuations.iter().map(|v| r.bound.evaluate(&self.table, *v)).collect())
            .collect::<Result<_>>()?;
        let mut drop = vec![false; self.rows.len()];
        for i in 0..self.rows.len() {
            let r = &self.rows[i];
            if r.is_trivial() && !valuations.is_empty() && values[i].iter().all(|v| *v >= -tol) {
                drop[i] = true;
                continue;
            }
            for j in 0..self.rows.len() {
                if i == j || drop[j] || self.rows[j].coeffs != r.coeffs {
                    continue;
                }
                let le = values[j].iter().zip(&values[i]).all(|(a, b)| *a <= *b + tol);
                if !le {
                    continue;
                }
                let equal = values[j].iter().zip(&values[i]).all(|(a, b)| (a - b).abs() <= tol);
                // among numerically equal rows keep the simpler rendering
                let prefer_j = !equal || {
                    let (si, sj) = (self.render_row(i), self.render_row(j));
                    (sj.len(), sj) < (si.len(), si)
                };
                if prefer_j {
                    drop[i] = true;
                    break;
                }
            }
        }
        let rows = self.rows.iter().zip(&drop).filter(|(_, d)| !**d).map(|(r, _)| r.clone());
        Ok(self.rebuild(rows))
    }

    /// Strict-inequality feasibility report at a rate point.
    pub fn evaluate(&self, v: &dyn Valuation, point: &BTreeMap<String, f64>) -> Result<Vec<RowReport>> {
        for k in point.keys() {
            self.var_index(k)?;
        }
        let vals: Vec<f64> = self
            .variables
            .iter()
            .map(|n| point.get(n).copied().ok_or_else(|| Error::Invalid(format!("no value for rate `{n}`"))))
            .collect::<Result<_>>()?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let lhs: f64 = r.coeffs.iter().zip(&vals).map(|(c, x)| *c as f64 * x).sum();
                let rhs = r.bound.evaluate(&self.table, v)?;
                let slack = rhs - lhs;
                // report both sides in the orientation `render_row` prints
                let flip = r.coeffs.iter().find(|c| **c != 0).is_some_and(|c| *c < 0);
                let (lhs, rhs) = if flip { (-lhs, -rhs) } else { (lhs, rhs) };
                Ok(RowReport { text: self.render_row(i), lhs, rhs, slack, feasible: slack > 0.0 })
            })
            .collect()
    }

    /// True iff every row holds strictly at the point.
    pub fn feasible(&self, v: &dyn Valuation, point: &BTreeMap<String, f64>) -> Result<bool> {
        Ok(self.evaluate(v, point)?.iter().all(|r| r.feasible))
    }

    /// Canonical text of row `i`: single-rate rows as `R < e` / `R > e`,
    /// other rows oriented so the first nonzero coefficient is positive.
    pub fn render_row(&self, i: usize) -> String {
        let r = &self.rows[i];
        let first = r.coeffs.iter().find(|c| **c != 0).copied().unwrap_or(1);
        let (coeffs, bound, rel): (Vec<i64>, EntropyExpr, &str) = if first < 0 {
            (r.coeffs.iter().map(|c| -c).collect(), r.bound.neg(), ">")
        } else {
            (r.coeffs.clone(), r.bound.clone(), "<")
        };
        let mut lhs = String::new();
        for (c, name) in coeffs.iter().zip(&self.variables) {
            if *c == 0 {
                continue;
            }
            let mag = c.abs();
            let term = if mag == 1 { name.clone() } else { format!("{mag}{name}") };
            if lhs.is_empty() {
                if *c < 0 {
                    lhs.push('-');
                }
            } else {
                lhs.push_str(if *c < 0 { " - " } else { " + " });
            }
            lhs.push_str(&term);
        }
        if lhs.is_empty() {
            lhs.push('0');
        }
        format!("{lhs} {rel} {}", bound.render(&self.table))
    }

    pub fn render(&self) -> Vec<String> {
        (0..self.rows.len()).map(|i| self.render_row(i)).collect()
    }

    /// Groups single-rate rows into `R < min{..}` and `R > max{..}` lines;
    /// multi-rate rows follow unchanged.
    pub fn window_lines(&self) -> Vec<String> {
        let mut upper: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        let mut lower: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        let mut coupled = Vec::new();
        for (i, r) in self.rows.iter().enumerate() {
            let nz: Vec<usize> = (0..r.coeffs.len()).filter(|&k| r.coeffs[k] != 0).collect();
            match nz.as_slice() {
                [k] if r.coeffs[*k] == 1 => upper.entry(*k).or_default().push(r.bound.render(&self.table)),
                [k] if r.coeffs[*k] == -1 => lower.entry(*k).or_default().push(r.bound.neg().render(&self.table)),
                _ => coupled.push(self.render_row(i)),
            }
        }
        let group = |terms: &mut Vec<String>, f: &str| {
            terms.sort_by(|a, b| (a != "0", a).cmp(&(b != "0", b)));
            terms.dedup();
            if terms.len() == 1 { terms[0].clone() } else { format!("{f}{{{}}}", terms.join(", ")) }
        };
        let mut out = Vec::new();
        for (k, name) in self.variables.iter().enumerate() {
            if let Some(t) = upper.get_mut(&k) {
                out.push(format!("{name} < {}", group(t, "min")));
            }
            if let Some(t) = lower.get_mut(&k) {
                out.push(format!("{name} > {}", group(t, "max")));
            }
        }
        out.extend(coupled);
        out
    }
}

// ------------------------------------------------------------------ JSON

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstDoc {
    Terms(Vec<String>),
    Text(String),
    Number(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowDoc {
    pub coeffs: BTreeMap<String, i64>,
    pub rel: Rel,
    #[serde(rename = "const")]
    pub constant: ConstDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemDoc {
    #[serde(default)]
    pub variables: Vec<String>,
    #[serde(default)]
    pub entropy_variables: Vec<String>,
    pub inequalities: Vec<RowDoc>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnySystemDoc {
    Full(SystemDoc),
    Rows(Vec<RowDoc>),
}

fn const_text(c: &ConstDoc) -> Result<String> {
    Ok(match c {
        ConstDoc::Terms(ts) => {
            let mut s = String::new();
            for t in ts {
                let t = t.trim();
                if !s.is_empty() && !t.starts_with('-') && !t.starts_with('+') {
                    s.push('+');
                }
                s.push_str(t);
            }
            s
        }
        ConstDoc::Text(t) => t.clone(),
        ConstDoc::Number(x) => {
            if !x.is_finite() {
                return Err(Error::Parse("non-finite constant".into()));
            }
            let r = Rational64::approximate_float(*x).ok_or_else(|| Error::Parse(format!("constant {x}")))?;
            if r.is_negative() { format!("-{}", render_rational(-r)) } else { render_rational(r) }
        }
    })
}

impl SystemDoc {
    pub fn to_system(&self) -> Result<RateSystem> {
        let mut vars = self.variables.clone();
        if vars.is_empty() {
            for r in &self.inequalities {
                for k in r.coeffs.keys() {
                    if !vars.contains(k) {
                        vars.push(k.clone());
                    }
                }
            }
            // the usual rate names first, in their customary order
            let rank = |v: &String| ["R_M", "R_C", "R_F"].iter().position(|n| n == v).unwrap_or(3);
            vars.sort_by(|a, b| (rank(a), a).cmp(&(rank(b), b)));
        }
        let mut sys = RateSystem::new(vars, VarTable::new(self.entropy_variables.clone()));
        for (i, r) in self.inequalities.iter().enumerate() {
            let coeffs: Vec<(&str, i64)> = r.coeffs.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            let text = const_text(&r.constant)?;
            sys.push(&coeffs, r.rel, &text).map_err(|e| match e {
                Error::Parse(m) => Error::Parse(format!("inequality {i}: {m}")),
                other => other,
            })?;
        }
        Ok(sys)
    }

    pub fn from_system(sys: &RateSystem) -> Self {
        let inequalities = (0..sys.rows.len())
            .map(|i| {
                let r = &sys.rows[i];
                RowDoc {
                    coeffs: sys
                        .variables
                        .iter()
                        .zip(&r.coeffs)
                        .filter(|(_, c)| **c != 0)
                        .map(|(n, c)| (n.clone(), *c))
                        .collect(),
                    rel: Rel::Lt,
                    constant: ConstDoc::Terms(vec![r.bound.render(&sys.table)]),
                }
            })
            .collect();
        Self {
            variables: sys.variables.clone(),
            entropy_variables: sys.table.names().to_vec(),
            inequalities,
        }
    }
}

pub fn parse_system(text: &str) -> Result<RateSystem> {
    let doc: AnySystemDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("rate system: {e}")))?;
    match doc {
        AnySystemDoc::Full(d) => d.to_system(),
        AnySystemDoc::Rows(rows) => {
            SystemDoc { variables: Vec::new(), entropy_variables: Vec::new(), inequalities: rows }.to_system()
        }
    }
}
