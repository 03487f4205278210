use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::tv_slices;
use crate::region::split_channel;
use crate::scalar::{ordered_sum, Scalar};

use super::scheme::FactoredJoint;
use super::seq::{product_law, SeqKernel};
use super::CodeConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    /// TV of the `(Mⁿ, Zⁿ)` joints.
    #[default]
    JointMz,
    /// Largest TV of `P_{Zⁿ|Mⁿ=m}` over messages.
    PerMessageMax,
    /// TV of the `Zⁿ` marginals.
    MarginalZ,
}

/// What the RC law of `(Mⁿ, Zⁿ)` is compared with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Reference<T> {
    /// The RB law.
    #[default]
    Rb,
    /// `Q_M · P̄_{Z|M}^{⊗n}` with one row per message symbol (needs `K`).
    Kernel(Vec<Vec<T>>),
    /// `Q_M · P̄_Z^{⊗n}`.
    Marginal(Vec<T>),
}

#[derive(Debug, Clone, Serialize)]
pub struct CoordReport<T> {
    pub value: T,
    /// Messages without mass, left out of `per_message_max`.
    pub excluded_messages: Vec<usize>,
}

/// Dense tables of the scheme's `(Mⁿ, Zⁿ)` laws.
pub(crate) struct MzTables<T> {
    pub n_m: usize,
    pub n_f: usize,
    pub zs: usize,
    kz: SeqKernel<T>,
}

impl<T: Scalar> MzTables<T> {
    pub fn new(cfg: &CodeConfig<T>, j: &FactoredJoint<T>) -> Result<Self> {
        let (_, z) = split_channel(&cfg.channel)?;
        let kz = SeqKernel::new(&z.rows(), cfg.n, cfg.cap)?;
        let zs = kz.outputs;
        cfg.check_cap(j.n_m as u128 * j.n_f as u128 * zs as u128)?;
        Ok(Self { n_m: j.n_m, n_f: j.n_f, zs, kz })
    }

    /// `P(f, m, zⁿ)` in `(f, m, z)` order.
    pub fn fmz(&self, j: &FactoredJoint<T>) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_f * self.n_m * self.zs];
        for a in &j.atoms {
            let (m, _, f) = j.split_mcf(a.mcf);
            let base = (f * self.n_m + m) * self.zs;
            for (z, &q) in self.kz.row(a.x).iter().enumerate() {
                out[base + z] = out[base + z] + a.p * q;
            }
        }
        out
    }

    /// `P(m, zⁿ)`, or `P(m, zⁿ | F = f)` when `f` is given.
    pub fn mz(&self, fmz: &[T], f: Option<usize>) -> Result<Vec<T>> {
        let block = self.n_m * self.zs;
        match f {
            Some(f) => {
                let slice = &fmz[f * block..(f + 1) * block];
                let z = ordered_sum(slice.iter().copied());
                if z <= T::zero() {
                    return Err(Error::ZeroMass);
                }
                Ok(slice.iter().map(|&v| v / z).collect())
            }
            None => {
                let mut out = vec![T::zero(); block];
                for f in 0..self.n_f {
                    for (o, &v) in out.iter_mut().zip(&fmz[f * block..(f + 1) * block]) {
                        *o = *o + v;
                    }
                }
                Ok(out)
            }
        }
    }
}

fn message_target<T: Scalar>(cfg: &CodeConfig<T>, n_m: usize, zs: usize, r: &Reference<T>) -> Result<Option<Vec<T>>> {
    let q = T::one() / T::lit(n_m as f64);
    match r {
        Reference::Rb => Ok(None),
        Reference::Marginal(pz) => {
            let law = product_law(pz, cfg.n);
            if law.len() != zs {
                return Err(Error::ShapeMismatch("target P_Z does not match the Z alphabet".into()));
            }
            Ok(Some((0..n_m).flat_map(|_| law.iter().map(move |&v| q * v)).collect()))
        }
        Reference::Kernel(rows) => {
            let k = cfg.k.ok_or_else(|| Error::Invalid("a P_Z|M target needs the message alphabet K".into()))?;
            if rows.len() != k {
                return Err(Error::ShapeMismatch(format!("P_Z|M target has {} rows, K = {k}", rows.len())));
            }
            let kz = SeqKernel::new(rows, cfg.n, cfg.cap)?;
            if kz.outputs != zs || kz.inputs != n_m {
                return Err(Error::ShapeMismatch("P_Z|M target does not match the Z alphabet".into()));
            }
            Ok(Some((0..n_m).flat_map(|m| kz.row(m).iter().map(move |&v| q * v).collect::<Vec<_>>()).collect()))
        }
    }
}

fn compare<T: Scalar>(p: &[T], r: &[T], n_m: usize, zs: usize, g: Granularity) -> CoordReport<T> {
    match g {
        Granularity::JointMz => CoordReport { value: tv_slices(p, r), excluded_messages: Vec::new() },
        Granularity::MarginalZ => {
            let marg = |t: &[T]| -> Vec<T> {
                (0..zs).map(|z| ordered_sum((0..n_m).map(|m| t[m * zs + z]))).collect()
            };
            CoordReport { value: tv_slices(&marg(p), &marg(r)), excluded_messages: Vec::new() }
        }
        Granularity::PerMessageMax => {
            let mut best = T::zero();
            let mut excluded = Vec::new();
            for m in 0..n_m {
                let (pm, rm) = (&p[m * zs..(m + 1) * zs], &r[m * zs..(m + 1) * zs]);
                let (a, b) = (ordered_sum(pm.iter().copied()), ordered_sum(rm.iter().copied()));
                if a <= T::zero() || b <= T::zero() {
                    excluded.push(m);
                    continue;
                }
                let pn: Vec<T> = pm.iter().map(|&v| v / a).collect();
                let rn: Vec<T> = rm.iter().map(|&v| v / b).collect();
                best = best.max(tv_slices(&pn, &rn));
            }
            CoordReport { value: best, excluded_messages: excluded }
        }
    }
}

/// Coordination TV of the RC scheme against `reference`, optionally at
/// `F = f`.
pub fn coordination_tv<T: Scalar>(
    cfg: &CodeConfig<T>,
    rb: &FactoredJoint<T>,
    rc: &FactoredJoint<T>,
    f_instance: Option<usize>,
    granularity: Granularity,
    reference: &Reference<T>,
) -> Result<CoordReport<T>> {
    let t = MzTables::new(cfg, rc)?;
    if let Some(f) = f_instance {
        if f >= t.n_f {
            return Err(Error::Invalid(format!("f instance {f} out of range")));
        }
    }
    let p = t.mz(&t.fmz(rc), f_instance)?;
    let r = match message_target(cfg, t.n_m, t.zs, reference)? {
        Some(r) => r,
        None => t.mz(&t.fmz(rb), f_instance)?,
    };
    Ok(compare(&p, &r, t.n_m, t.zs, granularity))
}

/// Outcome of the search for a good common-randomness instance.
#[derive(Debug, Clone, Serialize)]
pub struct FSelection<T> {
    pub f_star: usize,
    /// `V(P^{RC}_{MⁿZⁿ|F=f*}, P^{RB}_{MⁿZⁿ|F=f*})`.
    pub value: T,
    /// Per-instance value, `None` for bins without RB mass.
    pub per_f: Vec<Option<T>>,
    pub skipped: Vec<usize>,
    /// `Σ_f P^{RB}(f) · V_f`.
    pub rb_average: T,
    /// `2 · V(P^{RB}_{FMⁿZⁿ}, P^{RC}_{FMⁿZⁿ})`, which bounds `rb_average`.
    pub bound: T,
    /// `2 · V(Q_F P^{RC}_{MⁿZⁿ}, P^{RB}_{FMⁿZⁿ})`.
    pub bound_literal: T,
    /// `value ≤ bound` (with a 1e-12 slack).
    pub holds: bool,
}

pub fn select_f_instance<T: Scalar>(
    cfg: &CodeConfig<T>,
    rb: &FactoredJoint<T>,
    rc: &FactoredJoint<T>,
) -> Result<FSelection<T>> {
    let t = MzTables::new(cfg, rc)?;
    let (prb, prc) = (t.fmz(rb), t.fmz(rc));
    let block = t.n_m * t.zs;
    let mut per_f = Vec::with_capacity(t.n_f);
    let mut skipped = Vec::new();
    let mut best: Option<(usize, T)> = None;
    let mut avg = Vec::new();
    for f in 0..t.n_f {
        let w_rb = ordered_sum(prb[f * block..(f + 1) * block].iter().copied());
        if w_rb <= T::zero() {
            per_f.push(None);
            skipped.push(f);
            continue;
        }
        let v = tv_slices(&t.mz(&prc, Some(f))?, &t.mz(&prb, Some(f))?);
        avg.push(w_rb * v);
        per_f.push(Some(v));
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((f, v));
        }
    }
    let (f_star, value) = best.ok_or(Error::ZeroMass)?;
    let two = T::lit(2.0);
    let bound = two * tv_slices(&prb, &prc);
    let rc_mz = t.mz(&prc, None)?;
    let qf = T::one() / T::lit(t.n_f as f64);
    let literal: Vec<T> = (0..t.n_f).flat_map(|_| rc_mz.iter().map(move |&v| qf * v)).collect();
    let bound_literal = two * tv_slices(&literal, &prb);
    Ok(FSelection {
        f_star,
        value,
        per_f,
        skipped,
        rb_average: ordered_sum(avg),
        bound,
        bound_literal,
        holds: value <= bound + T::lit(1e-12),
    })
}

/// `I(Mⁿ; Zⁿ)` under `j`, optionally at `F = f`.
pub fn secrecy_leakage<T: Scalar>(cfg: &CodeConfig<T>, j: &FactoredJoint<T>, f_instance: Option<usize>) -> Result<T> {
    let t = MzTables::new(cfg, j)?;
    let p = t.mz(&t.fmz(j), f_instance)?;
    let pm: Vec<T> = (0..t.n_m).map(|m| ordered_sum(p[m * t.zs..(m + 1) * t.zs].iter().copied())).collect();
    let pz: Vec<T> = (0..t.zs).map(|z| ordered_sum((0..t.n_m).map(|m| p[m * t.zs + z]))).collect();
    let terms = (0..t.n_m).flat_map(|m| {
        let (p, pm, pz) = (&p, &pm, &pz);
        (0..t.zs).map(move |z| {
            let v = p[m * t.zs + z];
            if v > T::zero() { v * (v / (pm[m] * pz[z])).log2() } else { T::zero() }
        })
    });
    Ok(ordered_sum(terms).max(T::zero()))
}
