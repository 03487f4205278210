use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{Alphabet, Channel, Joint};
use crate::region::split_channel;
use crate::scalar::{ordered_sum, Scalar};

use super::binning::BinningScheme;
use super::seq::{product_law, unrank, SeqKernel};
use super::{checked_pow, CodeConfig, EncoderMode};

/// Block variables of the scheme. Sequences count as single variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SeqVar {
    M,
    C,
    F,
    W,
    X,
    Y,
    Z,
}

impl SeqVar {
    pub fn name(self) -> &'static str {
        match self {
            SeqVar::M => "M",
            SeqVar::C => "C",
            SeqVar::F => "F",
            SeqVar::W => "W",
            SeqVar::X => "X",
            SeqVar::Y => "Y",
            SeqVar::Z => "Z",
        }
    }
}

/// Mass on one `(m, c, f, wⁿ, xⁿ)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<T> {
    pub mcf: usize,
    pub w: usize,
    pub x: usize,
    pub p: T,
}

fn atom_order<T>(a: &Atom<T>, b: &Atom<T>) -> Ordering {
    (a.mcf, a.w, a.x).cmp(&(b.mcf, b.w, b.x))
}

/// A joint over `(Mⁿ, C, F, Wⁿ, Xⁿ, Yⁿ, Zⁿ)` kept as the sparse law of
/// `(m, c, f, wⁿ, xⁿ)` times the memoryless channel. Marginals sum the
/// channel out unless `Yⁿ` or `Zⁿ` is requested.
#[derive(Debug, Clone)]
pub struct FactoredJoint<T> {
    /// Sorted by `(mcf, w, x)`.
    pub atoms: Vec<Atom<T>>,
    pub n: usize,
    pub n_m: usize,
    pub n_c: usize,
    pub n_f: usize,
    pub w_seqs: usize,
    pub x_seqs: usize,
    channel: Channel<T>,
    /// Encoder rows that fell back to the prior (RC joints only).
    pub fallbacks: usize,
}

impl<T: Scalar> FactoredJoint<T> {
    fn from_atoms(mut atoms: Vec<Atom<T>>, cfg: &CodeConfig<T>, s: &BinningScheme, fallbacks: usize) -> Result<Self> {
        atoms.sort_by(atom_order);
        let (w_seqs, x_seqs) = cfg.seq_sizes()?;
        Ok(Self {
            atoms,
            n: cfg.n,
            n_m: s.n_m,
            n_c: s.n_c,
            n_f: s.n_f,
            w_seqs,
            x_seqs,
            channel: cfg.channel.clone(),
            fallbacks,
        })
    }

    pub fn channel(&self) -> &Channel<T> {
        &self.channel
    }

    pub fn split_mcf(&self, i: usize) -> (usize, usize, usize) {
        (i / (self.n_c * self.n_f), (i / self.n_f) % self.n_c, i % self.n_f)
    }

    pub fn total(&self) -> T {
        ordered_sum(self.atoms.iter().map(|a| a.p))
    }

    pub fn mcf_count(&self) -> usize {
        self.n_m * self.n_c * self.n_f
    }

    /// Dense law of `(m, c, f)` in flat order.
    pub fn mcf_marginal(&self, cap: u128) -> Result<Vec<T>> {
        if self.mcf_count() as u128 > cap {
            return Err(Error::CapExceeded { needed: self.mcf_count() as u128, cap });
        }
        let mut v = vec![T::zero(); self.mcf_count()];
        for a in &self.atoms {
            v[a.mcf] = v[a.mcf] + a.p;
        }
        Ok(v)
    }

    fn size_of(&self, v: SeqVar) -> Result<usize> {
        let (y, z) = split_channel(&self.channel)?;
        Ok(match v {
            SeqVar::M => self.n_m,
            SeqVar::C => self.n_c,
            SeqVar::F => self.n_f,
            SeqVar::W => self.w_seqs,
            SeqVar::X => self.x_seqs,
            SeqVar::Y => checked_pow(y.output_size(), self.n)?,
            SeqVar::Z => checked_pow(z.output_size(), self.n)?,
        })
    }

    /// Dense marginal on `vars` (in the given order).
    pub fn marginal(&self, vars: &[SeqVar], cap: u128) -> Result<Joint<T>> {
        let mut sizes = Vec::with_capacity(vars.len());
        let mut total: u128 = 1;
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(Error::DuplicateVariable(v.name().into()));
            }
            let s = self.size_of(*v)?;
            total = total.saturating_mul(s as u128);
            sizes.push(s);
        }
        if total > cap {
            return Err(Error::CapExceeded { needed: total, cap });
        }
        let alph: Vec<Alphabet> = vars.iter().zip(&sizes).map(|(v, s)| Alphabet::new(v.name(), *s)).collect();
        let mut mass = vec![T::zero(); total as usize];
        let want_y = vars.contains(&SeqVar::Y);
        let want_z = vars.contains(&SeqVar::Z);
        // per-atom output law over the requested outputs: (y rank, z rank, prob)
        let outputs = self.output_table(want_y, want_z, cap)?;
        let mut coords = vec![0usize; vars.len()];
        for a in &self.atoms {
            let (m, c, f) = self.split_mcf(a.mcf);
            for &(yr, zr, q) in &outputs[a.x] {
                let mut idx = 0usize;
                for (i, v) in vars.iter().enumerate() {
                    coords[i] = match v {
                        SeqVar::M => m,
                        SeqVar::C => c,
                        SeqVar::F => f,
                        SeqVar::W => a.w,
                        SeqVar::X => a.x,
                        SeqVar::Y => yr,
                        SeqVar::Z => zr,
                    };
                    idx = idx * sizes[i] + coords[i];
                }
                mass[idx] = mass[idx] + a.p * q;
            }
        }
        Joint::new(alph, mass)
    }

    /// For each `xⁿ`, the nonzero entries of the requested output law.
    pub(crate) fn output_table(&self, want_y: bool, want_z: bool, cap: u128) -> Result<Vec<Vec<(usize, usize, T)>>> {
        let (ych, zch) = split_channel(&self.channel)?;
        let n = self.n;
        let out: Vec<Vec<(usize, usize, T)>> = match (want_y, want_z) {
            (false, false) => vec![vec![(0, 0, T::one())]; self.x_seqs],
            (true, false) => {
                let k = SeqKernel::new(&ych.rows(), n, cap)?;
                (0..self.x_seqs)
                    .map(|x| k.row(x).iter().enumerate().filter(|(_, q)| **q > T::zero()).map(|(y, q)| (y, 0, *q)).collect())
                    .collect()
            }
            (false, true) => {
                let k = SeqKernel::new(&zch.rows(), n, cap)?;
                (0..self.x_seqs)
                    .map(|x| k.row(x).iter().enumerate().filter(|(_, q)| **q > T::zero()).map(|(z, q)| (0, z, *q)).collect())
                    .collect()
            }
            (true, true) => {
                let k = SeqKernel::new(&self.channel.rows(), n, cap)?;
                let (ny, nz) = (ych.output_size(), zch.output_size());
                let split: Vec<(usize, usize)> = (0..k.outputs)
                    .map(|r| {
                        let syms = unrank(r, ny * nz, n);
                        let ys: Vec<usize> = syms.iter().map(|s| s / nz).collect();
                        let zs: Vec<usize> = syms.iter().map(|s| s % nz).collect();
                        (super::seq::rank(&ys, ny), super::seq::rank(&zs, nz))
                    })
                    .collect();
                (0..self.x_seqs)
                    .map(|x| {
                        k.row(x)
                            .iter()
                            .enumerate()
                            .filter(|(_, q)| **q > T::zero())
                            .map(|(r, q)| (split[r].0, split[r].1, *q))
                            .collect()
                    })
                    .collect()
            }
        };
        Ok(out)
    }
}

/// Sequence priors shared by the joints and encoders.
pub(crate) struct Priors<T> {
    /// `P̄_W^{⊗n}`.
    pub pw: Vec<T>,
    /// `P̄_{X|W}^{⊗n}`.
    pub pxw: SeqKernel<T>,
}

impl<T: Scalar> Priors<T> {
    pub fn new(cfg: &CodeConfig<T>) -> Result<Self> {
        Ok(Self { pw: product_law(&cfg.p_w, cfg.n), pxw: SeqKernel::new(&cfg.p_x_given_w, cfg.n, cfg.cap)? })
    }
}

fn check_scheme<T: Scalar>(cfg: &CodeConfig<T>, s: &BinningScheme) -> Result<()> {
    let (nw, nx) = cfg.seq_sizes()?;
    if s.phi_f.len() != nw || s.phi_c.len() != nx || s.phi_m.len() != nx {
        return Err(Error::ShapeMismatch("binning does not match the configuration".into()));
    }
    Ok(())
}

/// The random-binning joint.
pub fn rb_joint<T: Scalar>(cfg: &CodeConfig<T>, s: &BinningScheme) -> Result<FactoredJoint<T>> {
    check_scheme(cfg, s)?;
    let (nw, nx) = cfg.seq_sizes()?;
    cfg.check_cap(nw as u128 * nx as u128)?;
    let pr = Priors::new(cfg)?;
    let mut atoms = Vec::new();
    for w in 0..nw {
        if pr.pw[w] == T::zero() {
            continue;
        }
        for (x, &q) in pr.pxw.row(w).iter().enumerate() {
            if q > T::zero() {
                atoms.push(Atom { mcf: s.mcf(s.phi_m[x], s.phi_c[x], s.phi_f[w]), w, x, p: pr.pw[w] * q });
            }
        }
    }
    FactoredJoint::from_atoms(atoms, cfg, s, 0)
}

/// Bayesian inversions of the RB joint used as encoders.
pub struct Encoders<T> {
    pub mode: EncoderMode,
    priors: Priors<T>,
    /// RB atoms grouped by `(m, c, f)`: offsets into `rb.atoms`.
    groups: Vec<(usize, usize, usize)>,
    rb: FactoredJoint<T>,
    w_in_f: Vec<Vec<usize>>,
    x_in_mc: Vec<Vec<usize>>,
    scheme: BinningScheme,
}

impl<T: Scalar> Encoders<T> {
    /// `P^{RB}(wⁿ | f)`; the prior when bin `f` has no mass. The flag
    /// reports the fallback.
    pub fn w_given_f(&self, f: usize) -> (Vec<(usize, T)>, bool) {
        let row: Vec<(usize, T)> = self.w_in_f[f].iter().map(|&w| (w, self.priors.pw[w])).filter(|e| e.1 > T::zero()).collect();
        let z = ordered_sum(row.iter().map(|e| e.1));
        if z > T::zero() {
            (row.into_iter().map(|(w, p)| (w, p / z)).collect(), false)
        } else {
            (self.priors.pw.iter().copied().enumerate().filter(|e| e.1 > T::zero()).collect(), true)
        }
    }

    /// `P^{RB}(xⁿ | wⁿ, m, c)`; the prior `P̄(xⁿ|wⁿ)` on zero evidence.
    pub fn x_given_wmc(&self, w: usize, m: usize, c: usize) -> (Vec<(usize, T)>, bool) {
        let k = self.pxw_row(w);
        let row: Vec<(usize, T)> =
            self.x_in_mc[m * self.scheme.n_c + c].iter().map(|&x| (x, k[x])).filter(|e| e.1 > T::zero()).collect();
        let z = ordered_sum(row.iter().map(|e| e.1));
        if z > T::zero() {
            (row.into_iter().map(|(x, p)| (x, p / z)).collect(), false)
        } else {
            (k.iter().copied().enumerate().filter(|e| e.1 > T::zero()).collect(), true)
        }
    }

    fn pxw_row(&self, w: usize) -> &[T] {
        self.priors.pxw.row(w)
    }

    /// `P^{RB}(wⁿ, xⁿ | m, c, f)`; the prior `P̄(wⁿ, xⁿ)` on zero evidence.
    pub fn wx_given_mcf(&self, mcf: usize) -> (Vec<(usize, usize, T)>, bool) {
        let (lo, hi, _) = self.groups[mcf];
        let z = ordered_sum(self.rb.atoms[lo..hi].iter().map(|a| a.p));
        if z > T::zero() {
            (self.rb.atoms[lo..hi].iter().map(|a| (a.w, a.x, a.p / z)).collect(), false)
        } else {
            (self.rb.atoms.iter().map(|a| (a.w, a.x, a.p)).collect(), true)
        }
    }
}

/// Builds the encoders `P^{RB}_{Wⁿ|F}` and `P^{RB}_{Xⁿ|WⁿMⁿC}` (and the
/// exact joint inversion `P^{RB}_{WⁿXⁿ|MⁿCF}`).
pub fn rb_encoders<T: Scalar>(cfg: &CodeConfig<T>, s: &BinningScheme) -> Result<Encoders<T>> {
    let rb = rb_joint(cfg, s)?;
    cfg.check_cap(s.mcf_count())?;
    let mut groups = vec![(0usize, 0usize, 0usize); rb.mcf_count()];
    let mut i = 0;
    for (g, slot) in groups.iter_mut().enumerate() {
        let lo = i;
        while i < rb.atoms.len() && rb.atoms[i].mcf == g {
            i += 1;
        }
        *slot = (lo, i, g);
    }
    let mut w_in_f = vec![Vec::new(); s.n_f];
    for (w, &f) in s.phi_f.iter().enumerate() {
        w_in_f[f].push(w);
    }
    let mut x_in_mc = vec![Vec::new(); s.n_m * s.n_c];
    for x in 0..s.phi_c.len() {
        x_in_mc[s.phi_m[x] * s.n_c + s.phi_c[x]].push(x);
    }
    Ok(Encoders { mode: cfg.encoder, priors: Priors::new(cfg)?, groups, rb, w_in_f, x_in_mc, scheme: s.clone() })
}

/// The random-coding joint with uniform `(Mⁿ, C, F)` and the encoders of
/// `cfg.encoder`.
pub fn rc_joint<T: Scalar>(cfg: &CodeConfig<T>, s: &BinningScheme, enc: &Encoders<T>) -> Result<FactoredJoint<T>> {
    check_scheme(cfg, s)?;
    cfg.check_cap(s.mcf_count())?;
    let total = s.n_m * s.n_c * s.n_f;
    let q = T::one() / T::lit(total as f64);
    let mut atoms = Vec::new();
    let mut fallbacks = 0usize;
    let push_checked = |atoms: &mut Vec<Atom<T>>, a: Atom<T>| -> Result<()> {
        if atoms.len() as u128 >= cfg.cap {
            return Err(Error::CapExceeded { needed: atoms.len() as u128 + 1, cap: cfg.cap });
        }
        atoms.push(a);
        Ok(())
    };
    for mcf in 0..total {
        let (m, c, f) = s.split_mcf(mcf);
        match cfg.encoder {
            EncoderMode::Exact => {
                let (row, fb) = enc.wx_given_mcf(mcf);
                fallbacks += fb as usize;
                for (w, x, p) in row {
                    push_checked(&mut atoms, Atom { mcf, w, x, p: q * p })?;
                }
            }
            EncoderMode::Literal => {
                let (wrow, fb) = enc.w_given_f(f);
                fallbacks += fb as usize;
                for (w, pw) in wrow {
                    let (xrow, fb) = enc.x_given_wmc(w, m, c);
                    fallbacks += fb as usize;
                    for (x, px) in xrow {
                        push_checked(&mut atoms, Atom { mcf, w, x, p: q * pw * px })?;
                    }
                }
            }
        }
    }
    FactoredJoint::from_atoms(atoms, cfg, s, fallbacks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TvMode {
    /// TV of the complete joints over `(Mⁿ, C, F, Wⁿ, Xⁿ, Yⁿ, Zⁿ)`.
    Full,
    /// TV of the `(Mⁿ, C, F)` marginals against the uniform law.
    #[default]
    McfShortcut,
}

/// `V(P^{RB}, P^{RC})` in the chosen mode.
pub fn tv_rb_rc<T: Scalar>(rb: &FactoredJoint<T>, rc: &FactoredJoint<T>, mode: TvMode, cap: u128) -> Result<T> {
    match mode {
        TvMode::McfShortcut => {
            let p = rb.mcf_marginal(cap)?;
            let q = rc.mcf_marginal(cap)?;
            Ok(crate::prob::tv_slices(&p, &q))
        }
        TvMode::Full => {
            let outputs = rb.output_table(true, true, cap)?;
            let per_x = outputs.first().map_or(0, Vec::len) as u128;
            let needed = (rb.atoms.len() + rc.atoms.len()) as u128 * per_x.max(1);
            if needed > cap {
                return Err(Error::CapExceeded { needed, cap });
            }
            let half = T::lit(0.5);
            let mut terms = Vec::new();
            let mut emit = |x: usize, a: T, b: T| {
                for &(_, _, q) in &outputs[x] {
                    terms.push((a - b).abs() * q);
                }
            };
            let (mut i, mut j) = (0, 0);
            while i < rb.atoms.len() || j < rc.atoms.len() {
                let ord = match (rb.atoms.get(i), rc.atoms.get(j)) {
                    (Some(a), Some(b)) => atom_order(a, b),
                    (Some(_), None) => Ordering::Less,
                    _ => Ordering::Greater,
                };
                match ord {
                    Ordering::Less => {
                        emit(rb.atoms[i].x, rb.atoms[i].p, T::zero());
                        i += 1;
                    }
                    Ordering::Greater => {
                        emit(rc.atoms[j].x, T::zero(), rc.atoms[j].p);
                        j += 1;
                    }
                    Ordering::Equal => {
                        emit(rb.atoms[i].x, rb.atoms[i].p, rc.atoms[j].p);
                        i += 1;
                        j += 1;
                    }
                }
            }
            Ok(half * ordered_sum(terms))
        }
    }
}
