use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::Channel;
use crate::scalar::Scalar;

use super::member::{ConsistencyMode, Semantics};
use super::{cardinality_bound, AuxiliaryWitness, Kernels, RateBounds, RegionKind};

/// Knobs shared by membership, sweeps and auxiliary optimization.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Random restarts of the local search (at least 32 are run).
    pub restarts: usize,
    /// Alphabet size of `W`; defaults to the cardinality bound.
    pub w_size: Option<usize>,
    pub seed: u64,
    /// Step size below which local search counts as converged.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Strictness margin on both rate bounds.
    pub margin: f64,
    /// Accept boundary points (margin forced to zero).
    pub closure: bool,
    /// Tolerance on target consistency.
    pub dist_tol: f64,
    /// Simplex grid resolution `1/grid` for input-law sweeps.
    pub grid: usize,
    pub consistency: ConsistencyMode,
    pub semantics: Semantics,
    /// Random input laws tried inside the consistent polytope.
    pub px_samples: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            w_size: None,
            seed: 0,
            tol: 1e-6,
            max_sweeps: 400,
            margin: 1e-6,
            closure: false,
            dist_tol: 1e-9,
            grid: 16,
            consistency: ConsistencyMode::Marginal,
            semantics: Semantics::Coupled,
            px_samples: 32,
        }
    }
}

impl SearchConfig {
    pub fn effective_margin(&self) -> f64 {
        if self.closure { 0.0 } else { self.margin }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Minimize `max{0, I(W;Z) − I(W;Y)}`.
    MinRcInf,
    /// Minimize `I(W;Z) − I(W;Y)` without the clamp.
    MinRcGap,
    /// Maximize the message-rate bound of the region.
    MaxRmSup,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeResult<T> {
    pub witness: AuxiliaryWitness<T>,
    pub value: T,
    pub bounds: RateBounds<T>,
    /// False when the best run stopped on the sweep cap.
    pub converged: bool,
    pub restarts: usize,
}

pub(crate) fn random_simplex<T: Scalar>(k: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    let v: Vec<f64> = (0..k).map(|_| -(rng.gen::<f64>().max(1e-300)).ln()).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| T::lit(x / s)).collect()
}

/// All points of the `k`-simplex with coordinates in `{0, 1/g, .., 1}`.
pub(crate) fn simplex_grid<T: Scalar>(k: usize, g: usize) -> Vec<Vec<T>> {
    fn rec(k: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for a in 0..=left {
            cur.push(a);
            rec(k - 1, left - a, cur, out);
            cur.pop();
        }
    }
    let mut raw = Vec::new();
    rec(k, g, &mut Vec::new(), &mut raw);
    raw.into_iter().map(|v| v.into_iter().map(|a| T::lit(a as f64 / g as f64)).collect()).collect()
}

fn score<T: Scalar>(b: &RateBounds<T>, obj: Objective) -> T {
    match obj {
        Objective::MinRcInf => b.r_c_inf,
        Objective::MinRcGap => b.rc_gap,
        Objective::MaxRmSup => -b.r_m_sup,
    }
}

struct Run<T> {
    w: AuxiliaryWitness<T>,
    s: T,
    converged: bool,
}

fn descend<T: Scalar>(
    k: &Kernels<T>,
    mut w: AuxiliaryWitness<T>,
    kind: RegionKind,
    obj: Objective,
    floor: Option<T>,
    cfg: &SearchConfig,
) -> Run<T> {
    let eval = |w: &AuxiliaryWitness<T>| score(&k.bounds(w, kind), obj);
    let mut cur = eval(&w);
    let done = |s: T| floor.is_some_and(|f| s <= f);
    let mut step = T::lit(0.5);
    let min_step = T::lit(cfg.tol);
    let mut sweeps = 0;
    let (nx, nw) = (w.p_x.len(), w.w_size());
    while step >= min_step && !done(cur) {
        if sweeps >= cfg.max_sweeps {
            return Run { w, s: cur, converged: false };
        }
        sweeps += 1;
        let mut improved = false;
        for x in 0..nx {
            for a in 0..nw {
                for b in 0..nw {
                    let row = &w.p_w_given_x[x];
                    if a == b || row[a] <= T::zero() {
                        continue;
                    }
                    let d = step.min(row[a]);
                    let mut cand = w.clone();
                    cand.p_w_given_x[x][a] = cand.p_w_given_x[x][a] - d;
                    cand.p_w_given_x[x][b] = cand.p_w_given_x[x][b] + d;
                    let s = eval(&cand);
                    if s < cur - T::lit(1e-15) {
                        cur = s;
                        w = cand;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step = step * T::lit(0.5);
        }
    }
    Run { w, s: cur, converged: true }
}

/// Multi-start local search over `P_{W|X}` at fixed `P_X`.
///
/// Deterministic seed starts (constant, copy and independent-uniform `W`)
/// are followed by at least 32 random restarts, each refined by pairwise
/// mass moves with halving step size. Restarts run in parallel; the winner
/// is the best score, ties to the lowest restart index. The reported value
/// is an upper bound on the true minimum (lower bound for maximization).
pub fn optimize_auxiliary<T: Scalar>(
    p_x: &[T],
    ch: &Channel<T>,
    kind: RegionKind,
    objective: Objective,
    cfg: &SearchConfig,
) -> Result<OptimizeResult<T>> {
    if p_x.len() != ch.input().size {
        return Err(Error::ShapeMismatch("P_X does not match the channel input".into()));
    }
    let kernels = Kernels::new(ch)?;
    let nw = cfg.w_size.unwrap_or_else(|| cardinality_bound(ch));
    if nw == 0 {
        return Err(Error::Invalid("W alphabet must be nonempty".into()));
    }
    let nx = p_x.len();
    let px = p_x.to_vec();
    let point = |x: usize| -> Vec<T> {
        let mut r = vec![T::zero(); nw];
        r[x % nw] = T::one();
        r
    };
    let mut starts = vec![
        AuxiliaryWitness { p_x: px.clone(), p_w_given_x: vec![point(0); nx] },
        AuxiliaryWitness { p_x: px.clone(), p_w_given_x: (0..nx).map(point).collect() },
        AuxiliaryWitness::independent(px.clone(), nw),
    ];
    let restarts = cfg.restarts.max(32);
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(unit_seed(cfg.seed, r as u64));
        starts.push(AuxiliaryWitness {
            p_x: px.clone(),
            p_w_given_x: (0..nx).map(|_| random_simplex(nw, &mut rng)).collect(),
        });
    }
    let floor = match objective {
        Objective::MinRcInf => Some(T::zero()),
        Objective::MaxRmSup => {
            let b = kernels.bounds(&starts[0], kind);
            Some(-b.i_xy + T::lit(cfg.tol))
        }
        Objective::MinRcGap => None,
    };
    let runs: Vec<Run<T>> = starts
        .into_par_iter()
        .map(|w| descend(&kernels, w, kind, objective, floor, cfg))
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.s < a.s { b } else { a })
        .expect("at least one start");
    let bounds = kernels.bounds(&best.w, kind);
    let value = match objective {
        Objective::MaxRmSup => -best.s,
        _ => best.s,
    };
    Ok(OptimizeResult { witness: best.w, value, bounds, converged: best.converged, restarts })
}

/// Per-unit stream seed derived from a master seed and a unit index.
pub fn unit_seed(master: u64, unit: u64) -> u64 {
    // SplitMix64 finalizer
    let mut z = master ^ unit.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        assert_eq!(simplex_grid::<f64>(2, 16).len(), 17);
        assert_eq!(simplex_grid::<f64>(3, 4).len(), 15);
        for p in simplex_grid::<f64>(3, 4) {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn min_rc_reaches_zero() {
        let ch = Channel::bsc(0.1, "X", "Y").unwrap().pair(&Channel::bsc(0.05, "X", "Z").unwrap()).unwrap();
        let r = optimize_auxiliary(&[0.5, 0.5], &ch, RegionKind::General, Objective::MinRcInf, &SearchConfig::default())
            .unwrap();
        assert!(r.value <= 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn deterministic_given_seed() {
        let ch = Channel::bsc(0.1, "X", "Y").unwrap().pair(&Channel::bsc(0.3, "X", "Z").unwrap()).unwrap();
        let cfg = SearchConfig { w_size: Some(3), ..SearchConfig::default() };
        let a = optimize_auxiliary(&[0.4f64, 0.6], &ch, RegionKind::General, Objective::MinRcGap, &cfg).unwrap();
        let b = optimize_auxiliary(&[0.4f64, 0.6], &ch, RegionKind::General, Objective::MinRcGap, &cfg).unwrap();
        assert_eq!(a.witness, b.witness);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
