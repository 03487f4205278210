use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::Channel;
use crate::scalar::Scalar;

use super::member::consistency_vertices;
use super::search::{random_simplex, simplex_grid, unit_seed, SearchConfig};
use super::{cardinality_bound, split_channel, AuxiliaryWitness, Kernels, RateBounds, RegionKind, Target};

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow<T> {
    pub r_m: T,
    pub r_c_min: T,
    pub witness_id: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable<T> {
    pub rows: Vec<SweepRow<T>>,
    pub witnesses: Vec<(AuxiliaryWitness<T>, RateBounds<T>)>,
}

/// For every `R_M` on the grid `{0, step, 2·step, ..}` up to the largest
/// message bound found, the smallest `R_C_inf` among searched witnesses whose
/// message bound reaches `R_M`. A final row sits at that largest bound.
///
/// The pool covers input laws on a simplex grid (random laws above three
/// input symbols), optionally restricted to those reproducing `target`, each
/// paired with constant, copy, independent-uniform and a few random
/// auxiliaries.
pub fn boundary_sweep<T: Scalar>(
    ch: &Channel<T>,
    kind: RegionKind,
    step: f64,
    target: Option<&Target<T>>,
    cfg: &SearchConfig,
) -> Result<SweepTable<T>> {
    if !(step > 0.0 && step <= 1.0 / 64.0 + 1e-15) {
        return Err(Error::Invalid("sweep step must lie in (0, 1/64]".into()));
    }
    let (_, zch) = split_channel(ch)?;
    let kernels = Kernels::new(ch)?;
    let nx = ch.input().size;
    let nw = cfg.w_size.unwrap_or_else(|| cardinality_bound(ch));
    let mut rng = ChaCha8Rng::seed_from_u64(unit_seed(cfg.seed, 0x5E));
    let laws: Vec<Vec<T>> = match target {
        Some(t) => {
            let kz: Vec<Vec<f64>> = zch.rows().into_iter().map(|r| r.into_iter().map(|v| v.as_f64()).collect()).collect();
            let rows: Vec<Vec<f64>> = match t {
                Target::Marginal(p) => vec![p.iter().map(|v| v.as_f64()).collect()],
                Target::Kernel(k) => k.iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect(),
            };
            let verts = consistency_vertices(&kz, &rows, cfg.dist_tol.max(1e-12));
            let mut laws: Vec<Vec<T>> = verts.iter().map(|v| v.iter().map(|&p| T::lit(p)).collect()).collect();
            if !verts.is_empty() {
                for _ in 0..cfg.px_samples {
                    let w: Vec<f64> = random_simplex(verts.len(), &mut rng);
                    laws.push((0..nx).map(|x| T::lit(verts.iter().zip(&w).map(|(v, c)| v[x] * c).sum())).collect());
                }
            }
            laws
        }
        None if nx <= 3 => simplex_grid(nx, cfg.grid.max(1)),
        None => (0..cfg.px_samples.max(64)).map(|_| random_simplex(nx, &mut rng)).collect(),
    };
    let mut witnesses = Vec::new();
    for px in laws {
        let mut pool = vec![
            AuxiliaryWitness::constant(px.clone()),
            AuxiliaryWitness::copy(px.clone()),
            AuxiliaryWitness::independent(px.clone(), nw),
        ];
        for _ in 0..2 {
            pool.push(AuxiliaryWitness {
                p_x: px.clone(),
                p_w_given_x: (0..nx).map(|_| random_simplex(nw, &mut rng)).collect(),
            });
        }
        for w in pool {
            let b = kernels.bounds(&w, kind);
            witnesses.push((w, b));
        }
    }
    let top = witnesses.iter().map(|(_, b)| b.r_m_sup).fold(T::neg_infinity(), T::max);
    let mut rows = Vec::new();
    if top < T::zero() {
        return Ok(SweepTable { rows, witnesses });
    }
    let best_at = |r: T| -> Option<(T, usize)> {
        witnesses
            .iter()
            .enumerate()
            .filter(|(_, (_, b))| b.r_m_sup >= r)
            .map(|(i, (_, b))| (b.r_c_inf, i))
            .fold(None, |acc: Option<(T, usize)>, c| match acc {
                Some(a) if a.0 <= c.0 => Some(a),
                _ => Some(c),
            })
    };
    let mut k = 0usize;
    loop {
        let r = T::lit(k as f64 * step);
        if r > top {
            break;
        }
        if let Some((c, i)) = best_at(r) {
            rows.push(SweepRow { r_m: r, r_c_min: c, witness_id: i });
        }
        k += 1;
    }
    if rows.last().is_none_or(|l| l.r_m < top) {
        if let Some((c, i)) = best_at(top) {
            rows.push(SweepRow { r_m: top, r_c_min: c, witness_id: i });
        }
    }
    // the feasible set shrinks with R_M, so c_min is nondecreasing; enforce
    // it against rounding anyway
    for i in 1..rows.len() {
        if rows[i].r_c_min < rows[i - 1].r_c_min {
            rows[i].r_c_min = rows[i - 1].r_c_min;
        }
    }
    Ok(SweepTable { rows, witnesses })
}
