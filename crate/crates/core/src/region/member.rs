use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::Channel;
use crate::scalar::{ordered_sum, Scalar};

use super::capacity::capacity;
use super::search::{optimize_auxiliary, random_simplex, unit_seed, Objective, SearchConfig};
use super::{cardinality_bound, split_channel, AuxiliaryWitness, Kernels, RateBounds, RegionKind};

/// How the target is matched by the input law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyMode {
    /// One message-independent `P_X` must reproduce every target row
    /// through `P_{Z|X}`.
    #[default]
    Marginal,
    /// Each message row `m` may use its own `P_{X|M=m}`; the witness uses
    /// their uniform average.
    PerMessage,
}

/// Coupling between the target and the rate bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Semantics {
    /// One `(P_X, P_{W|X})` must satisfy consistency and both rate bounds.
    #[default]
    Coupled,
    /// `I(X;Y)` in the message bound is replaced by its maximum over all
    /// input laws, decoupled from the target.
    Literal,
}

/// Target law seen by the eavesdropper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target<T> {
    /// `P̄_Z`.
    Marginal(Vec<T>),
    /// `P̄_{Z|M}`, one row per message symbol.
    Kernel(Vec<Vec<T>>),
}

impl<T: Scalar> Target<T> {
    fn rows(&self) -> Vec<Vec<T>> {
        match self {
            Target::Marginal(p) => vec![p.clone()],
            Target::Kernel(k) => k.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTriple<T> {
    pub target: Target<T>,
    pub r_m: T,
    pub r_c: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    In,
    /// No witness found. The search is heuristic, so this is not a proof
    /// that the point lies outside the region.
    OutWithinSearch,
    /// No input law reproduces the target.
    ConsistencyFailure,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::In => "IN",
            Verdict::OutWithinSearch => "OUT-WITHIN-SEARCH",
            Verdict::ConsistencyFailure => "CONSISTENCY-FAILURE",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport<T> {
    pub verdict: Verdict,
    pub witness: Option<AuxiliaryWitness<T>>,
    pub bounds: Option<RateBounds<T>>,
    /// `max_{P_X} I(X;Y)`, only filled in literal mode.
    pub capacity: Option<T>,
    pub candidates_checked: usize,
    pub detail: String,
}

/// Solves a small dense square system by Gaussian elimination with partial
/// pivoting. `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Vertices of `{p ∈ simplex : Σ_x p(x) K(z|x) = t(z) for every row t}`,
/// i.e. all input laws reproducing the target rows through kernel `k`.
pub fn consistency_vertices(k: &[Vec<f64>], targets: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let nx = k.len();
    // equations: one normalization row plus |Z| rows per target
    let mut eqs: Vec<(Vec<f64>, f64)> = vec![(vec![1.0; nx], 1.0)];
    for t in targets {
        for (z, &tz) in t.iter().enumerate() {
            eqs.push(((0..nx).map(|x| k[x][z]).collect(), tz));
        }
    }
    let mut verts: Vec<Vec<f64>> = Vec::new();
    for mask in 1u32..(1 << nx) {
        let cols: Vec<usize> = (0..nx).filter(|x| mask & (1 << x) != 0).collect();
        // least squares on the support via normal equations
        let m = cols.len();
        let ata: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..m).map(|j| eqs.iter().map(|(r, _)| r[cols[i]] * r[cols[j]]).sum()).collect())
            .collect();
        let atb: Vec<f64> = (0..m).map(|i| eqs.iter().map(|(r, b)| r[cols[i]] * b).sum()).collect();
        let Some(sol) = solve(ata, atb) else { continue };
        if sol.iter().any(|v| *v < -tol) {
            continue;
        }
        let mut p = vec![0.0; nx];
        for (i, &c) in cols.iter().enumerate() {
            p[c] = sol[i].max(0.0);
        }
        let resid = eqs
            .iter()
            .map(|(r, b)| (r.iter().zip(&p).map(|(a, q)| a * q).sum::<f64>() - b).abs())
            .fold(0.0, f64::max);
        if resid > tol.max(1e-12) {
            continue;
        }
        let s: f64 = p.iter().sum();
        let p: Vec<f64> = p.into_iter().map(|v| v / s).collect();
        if !verts.iter().any(|v| v.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-9)) {
            verts.push(p);
        }
    }
    verts
}

fn combos(verts: &[Vec<f64>], samples: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let nx = verts[0].len();
    let centroid: Vec<f64> = (0..nx).map(|x| verts.iter().map(|v| v[x]).sum::<f64>() / verts.len() as f64).collect();
    let mut out = vec![centroid];
    out.extend(verts.iter().cloned());
    for i in 0..verts.len() {
        for j in i + 1..verts.len() {
            out.push(verts[i].iter().zip(&verts[j]).map(|(a, b)| 0.5 * (a + b)).collect());
        }
    }
    for _ in 0..samples {
        let w: Vec<f64> = random_simplex(verts.len(), rng);
        out.push((0..nx).map(|x| verts.iter().zip(&w).map(|(v, c)| v[x] * c).sum()).collect());
    }
    out
}

/// Region membership with an explicit witness search.
///
/// Input laws are drawn from the polytope of laws reproducing the target.
/// For each one, constant, copy and independent-uniform auxiliaries are
/// tried first, then multi-start optimization of the message bound and of
/// the common-randomness bound.
pub fn membership<T: Scalar>(
    t: &RateTriple<T>,
    ch: &Channel<T>,
    kind: RegionKind,
    cfg: &SearchConfig,
) -> Result<MembershipReport<T>> {
    if t.r_m < T::zero() || t.r_c < T::zero() {
        return Err(Error::Invalid("rates must be nonnegative".into()));
    }
    let (ych, zch) = split_channel(ch)?;
    let nz = zch.output_size();
    let rows = t.target.rows();
    if rows.is_empty() || rows.iter().any(|r| r.len() != nz) {
        return Err(Error::ShapeMismatch(format!("target rows must have {nz} entries")));
    }
    for (m, r) in rows.iter().enumerate() {
        let s = ordered_sum(r.iter().copied());
        if r.iter().any(|v| *v < T::zero()) || (s - T::one()).abs() > T::tol(1e-6) {
            return Err(Error::NotNormalized { what: format!("target row {m}"), sum: s.as_f64() });
        }
    }
    let kz: Vec<Vec<f64>> = zch.rows().into_iter().map(|r| r.into_iter().map(|v| v.as_f64()).collect()).collect();
    let rows64: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(unit_seed(cfg.seed, 0xC0));
    let candidates: Vec<Vec<f64>> = match cfg.consistency {
        ConsistencyMode::Marginal => {
            let v = consistency_vertices(&kz, &rows64, cfg.dist_tol.max(1e-12));
            if v.is_empty() { Vec::new() } else { combos(&v, cfg.px_samples, &mut rng) }
        }
        ConsistencyMode::PerMessage => {
            let per: Vec<Vec<Vec<f64>>> =
                rows64.iter().map(|r| consistency_vertices(&kz, std::slice::from_ref(r), cfg.dist_tol.max(1e-12))).collect();
            if per.iter().any(Vec::is_empty) {
                Vec::new()
            } else {
                let pools: Vec<Vec<Vec<f64>>> = per.iter().map(|v| combos(v, 4, &mut rng)).collect();
                let mut out = Vec::new();
                let total = cfg.px_samples.max(8) * 4;
                for s in 0..total {
                    let pick: Vec<&Vec<f64>> = pools
                        .iter()
                        .map(|p| if s == 0 { &p[0] } else { &p[rng.gen_range(0..p.len())] })
                        .collect();
                    let nx = kz.len();
                    out.push((0..nx).map(|x| pick.iter().map(|p| p[x]).sum::<f64>() / pick.len() as f64).collect());
                }
                out
            }
        }
    };
    if candidates.is_empty() {
        return Ok(MembershipReport {
            verdict: Verdict::ConsistencyFailure,
            witness: None,
            bounds: None,
            capacity: None,
            candidates_checked: 0,
            detail: "no input law reproduces the target through P(z|x)".into(),
        });
    }
    let cap = match cfg.semantics {
        Semantics::Literal => Some(capacity(&ych, cfg.grid).value),
        Semantics::Coupled => None,
    };
    let margin = T::lit(cfg.effective_margin());
    let kernels = Kernels::new(ch)?;
    let nw = cfg.w_size.unwrap_or_else(|| cardinality_bound(ch));
    let accept = |b: &RateBounds<T>| -> bool {
        let r_m_sup = match (cap, kind) {
            (Some(c), RegionKind::General) => c.min(b.h_xw_given_z),
            (Some(c), RegionKind::Secrecy) => c.min(b.h_x_given_z),
            (Some(c), RegionKind::Marginal) => c,
            (None, _) => b.r_m_sup,
        };
        t.r_m <= r_m_sup - margin && t.r_c >= b.r_c_inf + margin
    };
    let mut checked = 0;
    let mut best_rm = T::neg_infinity();
    for p in &candidates {
        let px: Vec<T> = p.iter().map(|&v| T::lit(v)).collect();
        let mut tries = vec![
            AuxiliaryWitness::constant(px.clone()),
            AuxiliaryWitness::independent(px.clone(), nw),
            AuxiliaryWitness::copy(px.clone()),
        ];
        for w in tries.drain(..) {
            checked += 1;
            let b = kernels.bounds(&w, kind);
            best_rm = best_rm.max(b.r_m_sup);
            if accept(&b) {
                return Ok(found(w, b, cap, checked));
            }
        }
    }
    // heavier search on a few candidates
    for p in candidates.iter().take(4) {
        let px: Vec<T> = p.iter().map(|&v| T::lit(v)).collect();
        for obj in [Objective::MaxRmSup, Objective::MinRcGap] {
            checked += 1;
            let r = optimize_auxiliary(&px, ch, kind, obj, cfg)?;
            if accept(&r.bounds) {
                return Ok(found(r.witness, r.bounds, cap, checked));
            }
        }
    }
    Ok(MembershipReport {
        verdict: Verdict::OutWithinSearch,
        witness: None,
        bounds: None,
        capacity: cap,
        candidates_checked: checked,
        detail: format!("best message bound found {:.6}", best_rm.as_f64()),
    })
}

fn found<T: Scalar>(w: AuxiliaryWitness<T>, b: RateBounds<T>, cap: Option<T>, checked: usize) -> MembershipReport<T> {
    MembershipReport {
        verdict: Verdict::In,
        witness: Some(w),
        bounds: Some(b),
        capacity: cap,
        candidates_checked: checked,
        detail: String::new(),
    }
}
