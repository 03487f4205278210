//! Numeric rate regions over a broadcast channel `P(y, z | x)`.
//!
//! A region point is certified by an [`AuxiliaryWitness`] `(P_X, P_{W|X})`.
//! The induced single-letter joint always satisfies `W − X − YZ`.

mod capacity;
mod member;
mod search;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{entropy_of_slice, Alphabet, Channel, Joint};
use crate::scalar::{ordered_sum, Scalar};

pub use capacity::{capacity, CapacityResult};
pub use member::{
    consistency_vertices, membership, ConsistencyMode, MembershipReport, RateTriple, Semantics, Target, Verdict,
};
pub use search::{optimize_auxiliary, unit_seed, Objective, OptimizeResult, SearchConfig};
pub use sweep::{boundary_sweep, SweepRow, SweepTable};

/// Which of the three regions is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RegionKind {
    /// Conditional law of `Z` given the message, no secrecy.
    General,
    /// As `General`, with the message independent of `Z`.
    Secrecy,
    /// Only the marginal of `Z` is controlled.
    Marginal,
}

impl std::str::FromStr for RegionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "GENERAL" => Ok(Self::General),
            "SECRECY" => Ok(Self::Secrecy),
            "MARGINAL" => Ok(Self::Marginal),
            _ => Err(Error::Invalid(format!("unknown region kind `{s}`"))),
        }
    }
}

/// `(P_X, P_{W|X})`, one `W` row per input symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryWitness<T> {
    pub p_x: Vec<T>,
    pub p_w_given_x: Vec<Vec<T>>,
}

/// `|X|·|Y|·|Z| + 1`.
pub fn cardinality_bound<T: Scalar>(ch: &Channel<T>) -> usize {
    ch.input().size * ch.output_size() + 1
}

impl<T: Scalar> AuxiliaryWitness<T> {
    pub fn new(p_x: Vec<T>, p_w_given_x: Vec<Vec<T>>) -> Result<Self> {
        let w = Self { p_x, p_w_given_x };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let tol = T::tol(1e-9);
        let check = |what: String, p: &[T]| -> Result<()> {
            if p.iter().any(|v| !v.is_finite() || *v < -tol) {
                return Err(Error::InvalidMass(what));
            }
            let s = ordered_sum(p.iter().copied());
            if (s - T::one()).abs() > T::tol(1e-6) {
                return Err(Error::NotNormalized { what, sum: s.as_f64() });
            }
            Ok(())
        };
        check("P_X".into(), &self.p_x)?;
        if self.p_w_given_x.len() != self.p_x.len() {
            return Err(Error::ShapeMismatch("P_W|X needs one row per input symbol".into()));
        }
        let ws = self.w_size();
        for (x, row) in self.p_w_given_x.iter().enumerate() {
            if row.len() != ws || ws == 0 {
                return Err(Error::ShapeMismatch(format!("P_W|X row {x} has the wrong length")));
            }
            check(format!("P_W|X row {x}"), row)?;
        }
        Ok(())
    }

    pub fn w_size(&self) -> usize {
        self.p_w_given_x.first().map_or(0, Vec::len)
    }

    /// `W` constant (a single symbol).
    pub fn constant(p_x: Vec<T>) -> Self {
        let rows = vec![vec![T::one()]; p_x.len()];
        Self { p_x, p_w_given_x: rows }
    }

    /// `W = X`.
    pub fn copy(p_x: Vec<T>) -> Self {
        let n = p_x.len();
        let rows = (0..n).map(|x| (0..n).map(|w| if w == x { T::one() } else { T::zero() }).collect()).collect();
        Self { p_x, p_w_given_x: rows }
    }

    /// `W` uniform on `w_size` symbols and independent of `X`.
    pub fn independent(p_x: Vec<T>, w_size: usize) -> Self {
        let u = T::one() / T::lit(w_size as f64);
        let rows = vec![vec![u; w_size]; p_x.len()];
        Self { p_x, p_w_given_x: rows }
    }
}

/// Checks that the channel has input `X` and outputs `(Y, Z)`, returning the
/// two marginal kernels.
pub fn split_channel<T: Scalar>(ch: &Channel<T>) -> Result<(Channel<T>, Channel<T>)> {
    let names: Vec<&str> = ch.outputs().iter().map(|a| a.name.as_str()).collect();
    if names != ["Y", "Z"] {
        return Err(Error::Invalid(format!("channel outputs must be (Y, Z), found {names:?}")));
    }
    Ok((ch.marginal_outputs(&["Y"])?, ch.marginal_outputs(&["Z"])?))
}

/// Joint law of `(W, X, Y, Z)`: `P_X(x) P_{W|X}(w|x) P(y,z|x)`.
pub fn induced_joint<T: Scalar>(w: &AuxiliaryWitness<T>, ch: &Channel<T>) -> Result<Joint<T>> {
    w.validate()?;
    split_channel(ch)?;
    let nx = ch.input().size;
    if w.p_x.len() != nx {
        return Err(Error::ShapeMismatch(format!("P_X has {} entries, channel input {}", w.p_x.len(), nx)));
    }
    let mut vars = vec![Alphabet::new("W", w.w_size()), Alphabet::new("X", nx)];
    vars.extend(ch.outputs().iter().cloned());
    let mut mass = Vec::with_capacity(w.w_size() * nx * ch.output_size());
    for wi in 0..w.w_size() {
        for x in 0..nx {
            let pwx = w.p_x[x] * w.p_w_given_x[x][wi];
            mass.extend(ch.row(x).iter().map(|&q| pwx * q));
        }
    }
    Joint::new(vars, mass)
}

/// Single-letter quantities behind the region bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateBounds<T> {
    pub r_m_sup: T,
    pub r_c_inf: T,
    /// `I(W;Z) − I(W;Y)` before clamping.
    pub rc_gap: T,
    pub i_xy: T,
    pub h_xw_given_z: T,
    pub h_x_given_z: T,
}

/// Precomputed marginal kernels for fast repeated evaluation.
#[derive(Debug, Clone)]
pub(crate) struct Kernels<T> {
    pub py: Vec<Vec<T>>,
    pub pz: Vec<Vec<T>>,
    pub hz_given_x: Vec<T>,
}

impl<T: Scalar> Kernels<T> {
    pub fn new(ch: &Channel<T>) -> Result<Self> {
        let (y, z) = split_channel(ch)?;
        let hz_given_x = (0..z.input().size).map(|x| entropy_of_slice(z.row(x))).collect();
        Ok(Self { py: y.rows(), pz: z.rows(), hz_given_x })
    }

    fn mix(rows: &[Vec<T>], p: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); rows[0].len()];
        for (r, &px) in rows.iter().zip(p) {
            for (o, &v) in out.iter_mut().zip(r) {
                *o = *o + px * v;
            }
        }
        out
    }

    /// `I(W; O)` for the output kernel `rows`.
    fn mi_w(rows: &[Vec<T>], p_x: &[T], pw: &[Vec<T>]) -> T {
        let nw = pw[0].len();
        let no = rows[0].len();
        let mut joint = vec![T::zero(); nw * no];
        for (x, &px) in p_x.iter().enumerate() {
            for w in 0..nw {
                let a = px * pw[x][w];
                if a > T::zero() {
                    for o in 0..no {
                        joint[w * no + o] = joint[w * no + o] + a * rows[x][o];
                    }
                }
            }
        }
        let pw_m: Vec<T> = (0..nw).map(|w| ordered_sum((0..no).map(|o| joint[w * no + o]))).collect();
        let po: Vec<T> = (0..no).map(|o| ordered_sum((0..nw).map(|w| joint[w * no + o]))).collect();
        (entropy_of_slice(&pw_m) + entropy_of_slice(&po) - entropy_of_slice(&joint)).max(T::zero())
    }

    pub fn bounds(&self, w: &AuxiliaryWitness<T>, kind: RegionKind) -> RateBounds<T> {
        let p_x = &w.p_x;
        let y = Self::mix(&self.py, p_x);
        let z = Self::mix(&self.pz, p_x);
        let hy_x = ordered_sum(self.py.iter().zip(p_x).map(|(r, &p)| p * entropy_of_slice(r)));
        let hz_x = ordered_sum(self.hz_given_x.iter().zip(p_x).map(|(&h, &p)| p * h));
        let i_xy = (entropy_of_slice(&y) - hy_x).max(T::zero());
        let hz = entropy_of_slice(&z);
        let hx = entropy_of_slice(p_x);
        let xw: Vec<T> = p_x.iter().zip(&w.p_w_given_x).flat_map(|(&px, r)| r.iter().map(move |&q| px * q)).collect();
        let h_xw_given_z = (entropy_of_slice(&xw) + hz_x - hz).max(T::zero());
        let h_x_given_z = (hx + hz_x - hz).max(T::zero());
        let rc_gap = Self::mi_w(&self.pz, p_x, &w.p_w_given_x) - Self::mi_w(&self.py, p_x, &w.p_w_given_x);
        let r_m_sup = match kind {
            RegionKind::General => i_xy.min(h_xw_given_z),
            RegionKind::Secrecy => i_xy.min(h_x_given_z),
            RegionKind::Marginal => i_xy,
        };
        RateBounds { r_m_sup, r_c_inf: rc_gap.max(T::zero()), rc_gap, i_xy, h_xw_given_z, h_x_given_z }
    }
}

/// `(R_M_sup, R_C_inf)` of a witness, with the terms they come from.
pub fn rate_bounds<T: Scalar>(w: &AuxiliaryWitness<T>, ch: &Channel<T>, kind: RegionKind) -> Result<RateBounds<T>> {
    w.validate()?;
    if w.p_x.len() != ch.input().size {
        return Err(Error::ShapeMismatch("P_X does not match the channel input".into()));
    }
    Ok(Kernels::new(ch)?.bounds(w, kind))
}

/// Same quantities read off an explicit `(W, X, Y, Z)` joint.
pub fn bounds_from_joint<T: Scalar>(j: &Joint<T>, kind: RegionKind) -> Result<RateBounds<T>> {
    let i_xy = j.mutual_information(&["X"], &["Y"], &[])?;
    let h_xw_given_z = j.conditional_entropy(&["X", "W"], &["Z"])?;
    let h_x_given_z = j.conditional_entropy(&["X"], &["Z"])?;
    let rc_gap = j.mutual_information(&["W"], &["Z"], &[])? - j.mutual_information(&["W"], &["Y"], &[])?;
    let r_m_sup = match kind {
        RegionKind::General => i_xy.min(h_xw_given_z),
        RegionKind::Secrecy => i_xy.min(h_x_given_z),
        RegionKind::Marginal => i_xy,
    };
    Ok(RateBounds { r_m_sup, r_c_inf: rc_gap.max(T::zero()), rc_gap, i_xy, h_xw_given_z, h_x_given_z })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn yz(y: Channel<f64>, z: Channel<f64>) -> Channel<f64> {
        y.pair(&z).unwrap()
    }

    #[test]
    fn noiseless_y_independent_z() {
        let x = Alphabet::new("X", 2);
        let ch = yz(Channel::identity(x.clone(), "Y").unwrap(), Channel::constant(x, "Z", &[0.5, 0.5]).unwrap());
        let w = AuxiliaryWitness::constant(vec![0.5, 0.5]);
        let b = rate_bounds(&w, &ch, RegionKind::General).unwrap();
        assert_abs_diff_eq!(b.r_m_sup, 1.0, epsilon = 1e-12);
        assert_eq!(b.r_c_inf, 0.0);
    }

    #[test]
    fn z_equal_y_gives_zero_rc() {
        let x = Alphabet::new("X", 2);
        let y = Channel::bsc(0.2, "X", "Y").unwrap();
        let rows = (0..2).map(|i| {
            let r = y.row(i);
            vec![r[0], 0.0, 0.0, r[1]]
        });
        let ch = Channel::new(x, vec![Alphabet::new("Y", 2), Alphabet::new("Z", 2)], rows.collect()).unwrap();
        let w = AuxiliaryWitness::new(vec![0.3f64, 0.7], vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let b = rate_bounds(&w, &ch, RegionKind::General).unwrap();
        assert!(b.r_c_inf.abs() < 1e-12);
    }

    #[test]
    fn marginal_bsc_rate() {
        let x = Alphabet::new("X", 2);
        let ch = yz(Channel::bsc(0.1, "X", "Y").unwrap(), Channel::constant(x, "Z", &[0.3, 0.7]).unwrap());
        let b = rate_bounds(&AuxiliaryWitness::constant(vec![0.5, 0.5]), &ch, RegionKind::Marginal).unwrap();
        let h = -(0.1f64 * 0.1f64.log2() + 0.9 * 0.9f64.log2());
        assert_abs_diff_eq!(b.r_m_sup, 1.0 - h, epsilon = 1e-12);
    }

    #[test]
    fn fast_bounds_match_joint_bounds() {
        let ch = yz(Channel::bsc(0.1, "X", "Y").unwrap(), Channel::bsc(0.25, "X", "Z").unwrap());
        let w = AuxiliaryWitness::new(vec![0.4, 0.6], vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]]).unwrap();
        let j = induced_joint(&w, &ch).unwrap();
        for kind in [RegionKind::General, RegionKind::Secrecy, RegionKind::Marginal] {
            let a = rate_bounds(&w, &ch, kind).unwrap();
            let b = bounds_from_joint(&j, kind).unwrap();
            assert_abs_diff_eq!(a.r_m_sup, b.r_m_sup, epsilon = 1e-12);
            assert_abs_diff_eq!(a.rc_gap, b.rc_gap, epsilon = 1e-12);
        }
        assert!(j.mutual_information(&["W"], &["Y", "Z"], &["X"]).unwrap() < 1e-9);
    }

    #[test]
    fn copy_witness_matches_xy_information() {
        let ch = yz(Channel::bsc(0.1, "X", "Y").unwrap(), Channel::bsc(0.25, "X", "Z").unwrap());
        let j = induced_joint(&AuxiliaryWitness::copy(vec![0.3, 0.7]), &ch).unwrap();
        let a = j.mutual_information(&["W"], &["Y"], &[]).unwrap();
        let b = j.mutual_information(&["X"], &["Y"], &[]).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }
}
