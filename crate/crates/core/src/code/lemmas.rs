use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::Joint;
use crate::region::unit_seed;
use crate::scalar::Scalar;

use super::seq::rank;
use super::{bin_count, checked_pow, BinRounding};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaKind {
    /// Bins of all sources are jointly uniform and independent of `Bⁿ`.
    Theorem2,
    /// The first source's bin is uniform and independent of the others
    /// and of `Bⁿ`.
    Corollary1,
    /// The first source is recovered from all bins and `Bⁿ`.
    Lemma2,
}

impl std::str::FromStr for LemmaKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "theorem2" => Ok(Self::Theorem2),
            "corollary1" => Ok(Self::Corollary1),
            "lemma2" => Ok(Self::Lemma2),
            _ => Err(Error::Invalid(format!("unknown lemma `{s}`"))),
        }
    }
}

/// Correlated sources `(A_1, .., A_N, B)` with one rate per source.
#[derive(Debug, Clone)]
pub struct SourceSpec<T> {
    pub joint: Joint<T>,
    pub sources: Vec<String>,
    pub side: Vec<String>,
    pub rates: Vec<f64>,
    /// Sources treated as known in the corollary's conditions (indices).
    pub known: Vec<usize>,
    pub rounding: BinRounding,
    pub cap: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaRow {
    pub n: usize,
    pub mean: f64,
    pub std_err: f64,
    /// `1 − (reachable bin tuples)/(all bin tuples)`, a lower bound on the
    /// uniformity TV, clamped at 0.
    pub counting_floor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaCondition {
    pub text: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub kind: LemmaKind,
    pub rows: Vec<LemmaRow>,
    pub nonincreasing: bool,
    pub final_value: f64,
    pub conditions: Vec<LemmaCondition>,
    /// `SATISFIED` when every rate condition holds, else `VIOLATED`.
    pub label: String,
}

struct Outcomes {
    /// Per outcome: source ranks, side rank, mass.
    items: Vec<(Vec<usize>, usize, f64)>,
}

fn outcomes<T: Scalar>(spec: &SourceSpec<T>, n: usize) -> Result<Outcomes> {
    let j = &spec.joint;
    let src_idx: Vec<usize> = spec.sources.iter().map(|s| j.index_of(s)).collect::<Result<_>>()?;
    let side_idx: Vec<usize> = spec.side.iter().map(|s| j.index_of(s)).collect::<Result<_>>()?;
    let sizes: Vec<usize> = j.vars().iter().map(|a| a.size).collect();
    let mut letters: Vec<(Vec<usize>, usize, f64)> = Vec::new();
    let side_size: usize = side_idx.iter().map(|&i| sizes[i]).product();
    j.for_each(|coords, p| {
        if p > T::zero() {
            let a: Vec<usize> = src_idx.iter().map(|&i| coords[i]).collect();
            let b = side_idx.iter().fold(0, |acc, &i| acc * sizes[i] + coords[i]);
            letters.push((a, b, p.as_f64()));
        }
    });
    let count = (letters.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if count > spec.cap {
        return Err(Error::CapExceeded { needed: count, cap: spec.cap });
    }
    let mut items = Vec::with_capacity(count as usize);
    let mut idx = vec![0usize; n];
    loop {
        let mut p = 1.0;
        let mut a_syms = vec![Vec::with_capacity(n); src_idx.len()];
        let mut b_syms = Vec::with_capacity(n);
        for &l in &idx {
            let (a, b, q) = &letters[l];
            p *= q;
            for (k, &s) in a.iter().enumerate() {
                a_syms[k].push(s);
            }
            b_syms.push(*b);
        }
        let ranks = a_syms.iter().zip(&src_idx).map(|(s, &i)| rank(s, sizes[i])).collect();
        items.push((ranks, rank(&b_syms, side_size.max(1)), p));
        // odometer
        let mut t = 0;
        loop {
            if t == n {
                return Ok(Outcomes { items });
            }
            idx[t] += 1;
            if idx[t] < letters.len() {
                break;
            }
            idx[t] = 0;
            t += 1;
        }
    }
}

fn subsets(items: &[usize]) -> Vec<Vec<usize>> {
    (0..1usize << items.len()).map(|mask| (0..items.len()).filter(|b| mask & (1 << b) != 0).map(|b| items[b]).collect()).collect()
}

fn conditions<T: Scalar>(kind: LemmaKind, spec: &SourceSpec<T>) -> Result<Vec<LemmaCondition>> {
    let j = &spec.joint;
    let name = |i: usize| spec.sources[i].as_str();
    let side: Vec<&str> = spec.side.iter().map(String::as_str).collect();
    let n = spec.sources.len();
    let mut out = Vec::new();
    let mut add = |set: Vec<usize>, given: Vec<&str>, lower: bool| -> Result<()> {
        let a: Vec<&str> = set.iter().map(|&i| name(i)).collect();
        let lhs: f64 = set.iter().map(|&i| spec.rates[i]).sum();
        let h = j.conditional_entropy(&a, &given)?.as_f64();
        let rates = set.iter().map(|&i| format!("R_{}", name(i))).collect::<Vec<_>>().join(" + ");
        let cond = if given.is_empty() { String::new() } else { format!("|{}", given.join(",")) };
        let (rel, ok) = if lower { (">", lhs > h) } else { ("<", lhs < h) };
        out.push(LemmaCondition { text: format!("{rates} {rel} H({}{cond})", a.join(",")), lhs, rhs: h, satisfied: ok });
        Ok(())
    };
    match kind {
        LemmaKind::Theorem2 => {
            for s in subsets(&(0..n).collect::<Vec<_>>()) {
                if !s.is_empty() {
                    add(s, side.clone(), false)?;
                }
            }
        }
        LemmaKind::Corollary1 => {
            let rest: Vec<usize> = (1..n).filter(|i| !spec.known.contains(i)).collect();
            let mut given = side.clone();
            given.extend(spec.known.iter().map(|&i| name(i)));
            for s in subsets(&rest) {
                let mut set = vec![0];
                set.extend(s);
                add(set, given.clone(), false)?;
            }
        }
        LemmaKind::Lemma2 => {
            let others: Vec<usize> = (1..n).collect();
            for s in subsets(&others) {
                let mut given = side.clone();
                given.extend(others.iter().filter(|i| !s.contains(i)).map(|&i| name(i)));
                let mut set = vec![0];
                set.extend(s);
                add(set, given, true)?;
            }
        }
    }
    Ok(out)
}

/// One seed at one blocklength.
fn measure(kind: LemmaKind, o: &Outcomes, seq_sizes: &[usize], bins: &[usize], seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phis: Vec<Vec<usize>> = seq_sizes.iter().zip(bins).map(|(&s, &k)| (0..s).map(|_| rng.gen_range(0..k)).collect()).collect();
    let cbins = |ranks: &[usize]| -> Vec<usize> { ranks.iter().zip(&phis).map(|(&r, phi)| phi[r]).collect() };
    match kind {
        LemmaKind::Theorem2 => {
            let q = 1.0 / bins.iter().map(|&k| k as f64).product::<f64>();
            let mut pcb: BTreeMap<(Vec<usize>, usize), f64> = BTreeMap::new();
            let mut pb: BTreeMap<usize, f64> = BTreeMap::new();
            for (ranks, b, p) in &o.items {
                *pcb.entry((cbins(ranks), *b)).or_default() += p;
                *pb.entry(*b).or_default() += p;
            }
            let (mut diff, mut covered) = (0.0, 0.0);
            for ((_, b), p) in &pcb {
                let r = q * pb[b];
                diff += (p - r).abs();
                covered += r;
            }
            0.5 * (diff + (1.0 - covered).max(0.0))
        }
        LemmaKind::Corollary1 => {
            let n1 = bins[0] as f64;
            let mut full: BTreeMap<(Vec<usize>, usize), f64> = BTreeMap::new();
            let mut rest: BTreeMap<(Vec<usize>, usize), (f64, usize)> = BTreeMap::new();
            for (ranks, b, p) in &o.items {
                *full.entry((cbins(ranks), *b)).or_default() += p;
            }
            for ((c, b), p) in &full {
                let e = rest.entry((c[1..].to_vec(), *b)).or_default();
                e.0 += p;
                e.1 += 1;
            }
            let mut diff = 0.0;
            for ((c, b), p) in &full {
                diff += (p - rest[&(c[1..].to_vec(), *b)].0 / n1).abs();
            }
            let missing: f64 = rest.values().map(|(p, k)| p * (n1 - *k as f64) / n1).sum();
            0.5 * (diff + missing)
        }
        LemmaKind::Lemma2 => {
            // MAP over a1 given (all bins, b): error = 1 − Σ_key max score
            let mut score: BTreeMap<(Vec<usize>, usize), BTreeMap<usize, f64>> = BTreeMap::new();
            for (ranks, b, p) in &o.items {
                *score.entry((cbins(ranks), *b)).or_default().entry(ranks[0]).or_default() += p;
            }
            let hit: f64 = score
                .values()
                .map(|m| m.values().fold(0.0f64, |a, &v| if v > a { v } else { a }))
                .sum();
            (1.0 - hit).max(0.0)
        }
    }
}

/// Averages the lemma's TV (or error mass) over `seeds` at each `n`.
pub fn binning_lemma_verify<T: Scalar>(
    kind: LemmaKind,
    spec: &SourceSpec<T>,
    n_list: &[usize],
    seeds: &[u64],
) -> Result<LemmaReport> {
    if spec.sources.is_empty() || spec.rates.len() != spec.sources.len() {
        return Err(Error::Invalid("one rate per source is required".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Invalid("at least one seed is required".into()));
    }
    let conds = conditions(kind, spec)?;
    let mut rows = Vec::new();
    for &n in n_list {
        if n == 0 {
            return Err(Error::Invalid("blocklength must be at least 1".into()));
        }
        let o = outcomes(spec, n)?;
        let seq_sizes: Vec<usize> = spec
            .sources
            .iter()
            .map(|s| checked_pow(spec.joint.vars()[spec.joint.index_of(s).unwrap_or(0)].size, n))
            .collect::<Result<_>>()?;
        let bins: Vec<usize> = spec.rates.iter().map(|&r| bin_count(n, r, spec.rounding)).collect::<Result<_>>()?;
        let total_bins: f64 = bins.iter().map(|&k| k as f64).product();
        let needed = seq_sizes.iter().map(|&s| s as u128).sum::<u128>();
        if needed > spec.cap {
            return Err(Error::CapExceeded { needed, cap: spec.cap });
        }
        let vals: Vec<f64> =
            seeds.par_iter().map(|&s| measure(kind, &o, &seq_sizes, &bins, unit_seed(s, n as u64))).collect();
        let k = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / k;
        let var = if vals.len() > 1 { vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
        let reachable = match kind {
            LemmaKind::Theorem2 => o.items.len() as f64,
            _ => f64::INFINITY,
        };
        rows.push(LemmaRow {
            n,
            mean,
            std_err: (var / k).sqrt(),
            counting_floor: (1.0 - reachable / total_bins).max(0.0),
        });
    }
    let nonincreasing = rows.windows(2).all(|w| w[1].mean <= w[0].mean + 1e-12);
    let final_value = rows.last().map_or(f64::NAN, |r| r.mean);
    let label = if conds.iter().all(|c| c.satisfied) { "SATISFIED" } else { "VIOLATED" }.to_string();
    Ok(LemmaReport { kind, rows, nonincreasing, final_value, conditions: conds, label })
}
