use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::region::{split_channel, unit_seed};
use crate::scalar::{ordered_sum, Scalar};

use super::binning::BinningScheme;
use super::scheme::{rb_encoders, rc_joint, Encoders, FactoredJoint};
use super::seq::{unrank, SeqKernel};
use super::{checked_pow, CodeConfig, EncoderMode};

/// Decoder variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    /// Maximum a posteriori, ties to the smallest rank.
    #[default]
    Map,
    /// Samples `x̂ⁿ` from the RB posterior restricted to the bin.
    Stochastic,
}

/// State needed to decode `(c, f, yⁿ)`.
pub struct DecodeTables<T> {
    n: usize,
    /// `S(xⁿ, f) = Σ_{wⁿ: φ_F(wⁿ)=f} P̄(wⁿ, xⁿ)`, row-major in `xⁿ`.
    s: Vec<T>,
    n_f: usize,
    x_in_c: Vec<Vec<usize>>,
    phi_m: Vec<usize>,
    y_rows: Vec<Vec<T>>,
    x_size: usize,
    y_size: usize,
}

impl<T: Scalar> DecodeTables<T> {
    pub fn new(cfg: &CodeConfig<T>, s: &BinningScheme, rb: &FactoredJoint<T>) -> Result<Self> {
        let needed = rb.x_seqs as u128 * s.n_f as u128;
        cfg.check_cap(needed)?;
        let mut table = vec![T::zero(); rb.x_seqs * s.n_f];
        for a in &rb.atoms {
            let f = s.phi_f[a.w];
            table[a.x * s.n_f + f] = table[a.x * s.n_f + f] + a.p;
        }
        let mut x_in_c = vec![Vec::new(); s.n_c];
        for (x, &c) in s.phi_c.iter().enumerate() {
            x_in_c[c].push(x);
        }
        let (y, _) = split_channel(&cfg.channel)?;
        Ok(Self {
            n: cfg.n,
            s: table,
            n_f: s.n_f,
            x_in_c,
            phi_m: s.phi_m.clone(),
            y_rows: y.rows(),
            x_size: cfg.x_size(),
            y_size: y.output_size(),
        })
    }

    fn py(&self, x: usize, y: usize) -> T {
        let (mut x, mut y) = (x, y);
        let mut p = T::one();
        for _ in 0..self.n {
            p = p * self.y_rows[x % self.x_size][y % self.y_size];
            x /= self.x_size;
            y /= self.y_size;
        }
        p
    }

    /// Candidates in bin `c` with their unnormalized posterior scores.
    fn scores(&self, c: usize, f: usize, y: usize, ky: Option<&SeqKernel<T>>) -> Vec<(usize, T)> {
        self.x_in_c[c]
            .iter()
            .map(|&x| {
                let py = ky.map_or_else(|| self.py(x, y), |k| k.get(x, y));
                (x, py * self.s[x * self.n_f + f])
            })
            .collect()
    }

    /// MAP decision; `None` when every candidate has score zero.
    pub fn decode(&self, c: usize, f: usize, y: usize, ky: Option<&SeqKernel<T>>) -> Option<(usize, usize)> {
        let mut best: Option<(usize, T)> = None;
        // bins list ranks in increasing order, so strict comparison keeps
        // the smallest rank on ties
        for (x, sc) in self.scores(c, f, y, ky) {
            if sc > T::zero() && best.is_none_or(|(_, b)| sc > b) {
                best = Some((x, sc));
            }
        }
        best.map(|(x, _)| (x, self.phi_m[x]))
    }

    /// Normalized posterior over the bin; empty on zero evidence.
    pub fn posterior(&self, c: usize, f: usize, y: usize, ky: Option<&SeqKernel<T>>) -> Vec<(usize, T)> {
        let sc: Vec<(usize, T)> = self.scores(c, f, y, ky).into_iter().filter(|e| e.1 > T::zero()).collect();
        let z = ordered_sum(sc.iter().map(|e| e.1));
        if z > T::zero() {
            sc.into_iter().map(|(x, p)| (x, p / z)).collect()
        } else {
            Vec::new()
        }
    }
}

/// Decodes one observation with a fresh set of tables.
pub fn slepian_wolf_decode<T: Scalar>(
    cfg: &CodeConfig<T>,
    s: &BinningScheme,
    rb: &FactoredJoint<T>,
    c: usize,
    f: usize,
    y: &[usize],
) -> Result<Option<(usize, usize)>> {
    if y.len() != cfg.n || c >= s.n_c || f >= s.n_f {
        return Err(Error::Invalid("observation does not match the scheme".into()));
    }
    let t = DecodeTables::new(cfg, s, rb)?;
    Ok(t.decode(c, f, super::seq::rank(y, t.y_size), None))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ErrorMode {
    Exact,
    MonteCarlo { trials: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport<T> {
    /// `misdecode + abstain`.
    pub p_err: T,
    pub misdecode: T,
    pub abstain: T,
    /// Monte Carlo only.
    pub std_err: Option<f64>,
    pub trials: Option<usize>,
    pub fallbacks: usize,
}

/// `P{M̂ⁿ ≠ Mⁿ}` under the RC joint with the SW decoder.
pub fn error_probability<T: Scalar>(
    cfg: &CodeConfig<T>,
    s: &BinningScheme,
    mode: ErrorMode,
    decoder: Decoder,
) -> Result<ErrorReport<T>> {
    let enc = rb_encoders(cfg, s)?;
    match mode {
        ErrorMode::Exact => {
            let rc = rc_joint(cfg, s, &enc)?;
            let rb = super::rb_joint(cfg, s)?;
            exact_error(cfg, s, &rb, &rc, decoder)
        }
        ErrorMode::MonteCarlo { trials } => monte_carlo_error(cfg, s, &enc, trials, decoder),
    }
}

pub(crate) fn exact_error<T: Scalar>(
    cfg: &CodeConfig<T>,
    s: &BinningScheme,
    rb: &FactoredJoint<T>,
    rc: &FactoredJoint<T>,
    decoder: Decoder,
) -> Result<ErrorReport<T>> {
    let tables = DecodeTables::new(cfg, s, rb)?;
    let ys = checked_pow(tables.y_size, cfg.n)?;
    let ky = SeqKernel::new(&tables.y_rows, cfg.n, cfg.cap)?;
    // RC mass per (c, f) as (m, x, mass)
    let mut groups: BTreeMap<(usize, usize), BTreeMap<(usize, usize), T>> = BTreeMap::new();
    for a in &rc.atoms {
        let (m, c, f) = rc.split_mcf(a.mcf);
        let e = groups.entry((c, f)).or_default().entry((m, a.x)).or_insert(T::zero());
        *e = *e + a.p;
    }
    let work: u128 = groups.len() as u128 * ys as u128;
    cfg.check_cap(work)?;
    let (mut correct, mut abstain) = (Vec::new(), Vec::new());
    for (&(c, f), cell) in &groups {
        let (mut ok, mut ab) = (T::zero(), T::zero());
        for y in 0..ys {
            let weight = |x: usize, p: T| p * ky.get(x, y);
            match decoder {
                Decoder::Map => match tables.decode(c, f, y, Some(&ky)) {
                    Some((_, mh)) => {
                        for (&(m, x), &p) in cell {
                            if m == mh {
                                ok = ok + weight(x, p);
                            }
                        }
                    }
                    None => {
                        for (&(_, x), &p) in cell {
                            ab = ab + weight(x, p);
                        }
                    }
                },
                Decoder::Stochastic => {
                    let post = tables.posterior(c, f, y, Some(&ky));
                    if post.is_empty() {
                        for (&(_, x), &p) in cell {
                            ab = ab + weight(x, p);
                        }
                        continue;
                    }
                    let mut by_m: BTreeMap<usize, T> = BTreeMap::new();
                    for (xh, q) in post {
                        let e = by_m.entry(s.phi_m[xh]).or_insert(T::zero());
                        *e = *e + q;
                    }
                    for (&(m, x), &p) in cell {
                        if let Some(&q) = by_m.get(&m) {
                            ok = ok + weight(x, p) * q;
                        }
                    }
                }
            }
        }
        correct.push(ok);
        abstain.push(ab);
    }
    let total = rc.total();
    let correct = ordered_sum(correct);
    let abstain = ordered_sum(abstain);
    let misdecode = (total - correct - abstain).max(T::zero());
    Ok(ErrorReport { p_err: misdecode + abstain, misdecode, abstain, std_err: None, trials: None, fallbacks: rc.fallbacks })
}

fn sample<T: Scalar>(rng: &mut ChaCha8Rng, items: &[(usize, T)]) -> usize {
    let u = T::lit(rng.gen::<f64>());
    let mut acc = T::zero();
    for &(i, p) in items {
        acc = acc + p;
        if u < acc {
            return i;
        }
    }
    items.last().map_or(0, |e| e.0)
}

pub(crate) fn monte_carlo_error<T: Scalar>(
    cfg: &CodeConfig<T>,
    s: &BinningScheme,
    enc: &Encoders<T>,
    trials: usize,
    decoder: Decoder,
) -> Result<ErrorReport<T>> {
    if trials == 0 {
        return Err(Error::Invalid("Monte Carlo needs at least one trial".into()));
    }
    let rb = super::rb_joint(cfg, s)?;
    let tables = DecodeTables::new(cfg, s, &rb)?;
    let mut rng = ChaCha8Rng::seed_from_u64(unit_seed(cfg.seed, 0xE44));
    let total = s.n_m * s.n_c * s.n_f;
    let (mut mis, mut abs) = (0usize, 0usize);
    let mut fallbacks = 0usize;
    for _ in 0..trials {
        let mcf = rng.gen_range(0..total);
        let (m, c, f) = s.split_mcf(mcf);
        let x = match cfg.encoder {
            EncoderMode::Exact => {
                let (row, fb) = enc.wx_given_mcf(mcf);
                fallbacks += fb as usize;
                let flat: Vec<(usize, T)> = row.iter().enumerate().map(|(i, e)| (i, e.2)).collect();
                row[sample(&mut rng, &flat)].1
            }
            EncoderMode::Literal => {
                let (wrow, fb) = enc.w_given_f(f);
                fallbacks += fb as usize;
                let w = sample(&mut rng, &wrow);
                let (xrow, fb) = enc.x_given_wmc(w, m, c);
                fallbacks += fb as usize;
                sample(&mut rng, &xrow)
            }
        };
        let xs = unrank(x, tables.x_size, cfg.n);
        let ys: Vec<usize> = xs
            .iter()
            .map(|&xi| {
                let row: Vec<(usize, T)> = tables.y_rows[xi].iter().copied().enumerate().collect();
                sample(&mut rng, &row)
            })
            .collect();
        let y = super::seq::rank(&ys, tables.y_size);
        let decided = match decoder {
            Decoder::Map => tables.decode(c, f, y, None).map(|(_, mh)| mh),
            Decoder::Stochastic => {
                let post = tables.posterior(c, f, y, None);
                if post.is_empty() { None } else { Some(s.phi_m[sample(&mut rng, &post)]) }
            }
        };
        match decided {
            None => abs += 1,
            Some(mh) if mh != m => mis += 1,
            _ => {}
        }
    }
    let t = trials as f64;
    let p = (mis + abs) as f64 / t;
    Ok(ErrorReport {
        p_err: T::lit(p),
        misdecode: T::lit(mis as f64 / t),
        abstain: T::lit(abs as f64 / t),
        std_err: Some((p * (1.0 - p) / t).sqrt()),
        trials: Some(trials),
        fallbacks,
    })
}
