//! The random-binning coordination scheme at small blocklengths.
//!
//! Sequences are identified by their little-endian rank
//! `Σ s_i · |A|^i`. Every quantity is computed exactly by enumeration of
//! the sparse support, except the Monte Carlo error estimate.
//!
//! The random-binning (RB) joint is
//! `P̄(wⁿ) P̄(xⁿ|wⁿ) 1{f = φ_F(wⁿ)} 1{c = φ_C(xⁿ)} 1{m = φ_M(xⁿ)} P(yⁿ,zⁿ|xⁿ)`
//! and the random-coding (RC) joint replaces the law of `(m, c, f)` by the
//! uniform one and generates `(wⁿ, xⁿ)` through the RB encoders.

mod binning;
mod conditions;
mod coord;
mod decode;
mod experiment;
mod lemmas;
mod scheme;
mod seq;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{Channel, DEFAULT_STATE_CAP};
use crate::region::split_channel;
use crate::scalar::{ordered_sum, Scalar};

pub use binning::{build_binning, BinningScheme, Occupancy};
pub use conditions::{rate_condition_check, ConditionReport, ConditionRow};
pub use coord::{
    coordination_tv, secrecy_leakage, select_f_instance, CoordReport, FSelection, Granularity, Reference,
};
pub use decode::{error_probability, slepian_wolf_decode, DecodeTables, Decoder, ErrorMode, ErrorReport};
pub use experiment::{experiment, Caps, CellFailure, ExperimentReport, ExperimentRow, Metric, MetricSummary, NSummary, RunSpec, Summary};
pub use lemmas::{binning_lemma_verify, LemmaKind, LemmaReport, LemmaRow, SourceSpec};
pub use scheme::{rb_encoders, rb_joint, rc_joint, tv_rb_rc, Encoders, FactoredJoint, SeqVar, TvMode};
pub use seq::{rank, unrank, SeqKernel};

/// Nominal rates in bits per symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Rates {
    #[serde(rename = "R_M")]
    pub r_m: f64,
    #[serde(rename = "R_C")]
    pub r_c: f64,
    #[serde(rename = "R_F")]
    pub r_f: f64,
}

/// How `2^{nR}` is turned into an integer bin count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BinRounding {
    /// `⌈2^{nR}⌉` (up to a 1e-9 guard), never below the nominal rate.
    #[default]
    Ceil,
    /// Nearest integer.
    Round,
}

/// Encoder used by the random-coding scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EncoderMode {
    /// `P^{RB}(wⁿ, xⁿ | m, c, f)`.
    #[default]
    Exact,
    /// `P^{RB}(wⁿ | f) · P^{RB}(xⁿ | wⁿ, m, c)`.
    Literal,
}

pub fn bin_count(n: usize, rate: f64, rounding: BinRounding) -> Result<usize> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::Invalid(format!("rate {rate} must be finite and nonnegative")));
    }
    let v = (n as f64 * rate).exp2();
    let c = match rounding {
        BinRounding::Ceil => (v - 1e-9).ceil(),
        BinRounding::Round => v.round(),
    };
    if c > 1e15 {
        return Err(Error::CapExceeded { needed: c as u128, cap: 1_000_000_000_000_000 });
    }
    Ok((c as usize).max(1))
}

/// One code instance.
#[derive(Debug, Clone)]
pub struct CodeConfig<T> {
    pub n: usize,
    /// Per-symbol message alphabet. When set, `N_M = Kⁿ` and `R_M` must be
    /// `log₂ K`.
    pub k: Option<usize>,
    pub rates: Rates,
    pub p_w: Vec<T>,
    pub p_x_given_w: Vec<Vec<T>>,
    pub channel: Channel<T>,
    pub seed: u64,
    pub cap: u128,
    pub rounding: BinRounding,
    pub encoder: EncoderMode,
}

impl<T: Scalar> CodeConfig<T> {
    pub fn new(
        n: usize,
        rates: Rates,
        p_w: Vec<T>,
        p_x_given_w: Vec<Vec<T>>,
        channel: Channel<T>,
        seed: u64,
    ) -> Result<Self> {
        let cfg = Self {
            n,
            k: None,
            rates,
            p_w,
            p_x_given_w,
            channel,
            seed,
            cap: DEFAULT_STATE_CAP,
            rounding: BinRounding::default(),
            encoder: EncoderMode::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Invalid("blocklength must be at least 1".into()));
        }
        split_channel(&self.channel)?;
        let check = |what: String, p: &[T]| -> Result<()> {
            if p.is_empty() || p.iter().any(|v| !v.is_finite() || *v < T::zero()) {
                return Err(Error::InvalidMass(what));
            }
            let s = ordered_sum(p.iter().copied());
            if (s - T::one()).abs() > T::tol(1e-9) {
                return Err(Error::NotNormalized { what, sum: s.as_f64() });
            }
            Ok(())
        };
        check("bar_P_W".into(), &self.p_w)?;
        if self.p_x_given_w.len() != self.p_w.len() {
            return Err(Error::ShapeMismatch("bar_P_X|W needs one row per W symbol".into()));
        }
        let nx = self.channel.input().size;
        for (w, row) in self.p_x_given_w.iter().enumerate() {
            if row.len() != nx {
                return Err(Error::ShapeMismatch(format!("bar_P_X|W row {w} has {} entries, channel input {nx}", row.len())));
            }
            check(format!("bar_P_X|W row {w}"), row)?;
        }
        if let Some(k) = self.k {
            if k == 0 {
                return Err(Error::Invalid("K must be at least 1".into()));
            }
            if ((k as f64).log2() - self.rates.r_m).abs() > 1e-9 {
                return Err(Error::Invalid(format!("R_M = {} differs from log2 K = {}", self.rates.r_m, (k as f64).log2())));
            }
        }
        self.bins()?;
        Ok(())
    }

    pub fn w_size(&self) -> usize {
        self.p_w.len()
    }

    pub fn x_size(&self) -> usize {
        self.channel.input().size
    }

    /// `(N_M, N_C, N_F)`.
    pub fn bins(&self) -> Result<(usize, usize, usize)> {
        let nm = match self.k {
            Some(k) => checked_pow(k, self.n)?,
            None => bin_count(self.n, self.rates.r_m, self.rounding)?,
        };
        Ok((nm, bin_count(self.n, self.rates.r_c, self.rounding)?, bin_count(self.n, self.rates.r_f, self.rounding)?))
    }

    /// `log₂(N)/n` for each of the three bin counts.
    pub fn effective_rates(&self) -> Result<Rates> {
        let (m, c, f) = self.bins()?;
        let r = |v: usize| (v as f64).log2() / self.n as f64;
        Ok(Rates { r_m: r(m), r_c: r(c), r_f: r(f) })
    }

    /// Fails with a resource error when `needed` exceeds the cap.
    pub fn check_cap(&self, needed: u128) -> Result<()> {
        if needed > self.cap {
            Err(Error::CapExceeded { needed, cap: self.cap })
        } else {
            Ok(())
        }
    }

    /// `|𝒲ⁿ|` and `|𝒳ⁿ|`.
    pub fn seq_sizes(&self) -> Result<(usize, usize)> {
        Ok((checked_pow(self.w_size(), self.n)?, checked_pow(self.x_size(), self.n)?))
    }
}

pub(crate) fn checked_pow(base: usize, n: usize) -> Result<usize> {
    let mut v: u128 = 1;
    for _ in 0..n {
        v *= base as u128;
        if v > u64::MAX as u128 / 2 {
            return Err(Error::CapExceeded { needed: v, cap: u64::MAX as u128 / 2 });
        }
    }
    Ok(v as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_counts() {
        assert_eq!(bin_count(2, 0.0, BinRounding::Ceil).unwrap(), 1);
        assert_eq!(bin_count(2, 0.5, BinRounding::Ceil).unwrap(), 2);
        assert_eq!(bin_count(2, 0.5, BinRounding::Round).unwrap(), 2);
        assert_eq!(bin_count(2, 0.25, BinRounding::Round).unwrap(), 1);
        assert_eq!(bin_count(2, 0.25, BinRounding::Ceil).unwrap(), 2);
        assert_eq!(bin_count(3, 1.0, BinRounding::Ceil).unwrap(), 8);
        assert!(bin_count(1, -0.1, BinRounding::Ceil).is_err());
    }
}
