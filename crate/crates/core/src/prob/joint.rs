use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{ordered_sum, Scalar};

/// Entry-sum tolerance after which a distribution counts as normalized.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Inputs whose mass sums to within this of 1 are silently renormalized.
pub const RENORMALIZE_TOL: f64 = 1e-6;

/// A named finite alphabet `{0, .., size-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    pub name: String,
    pub size: usize,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Self { name: name.into(), size }
    }
}

/// Dense probability tensor over a product of named finite alphabets.
///
/// Entries are stored row-major: the last variable varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint<T> {
    vars: Vec<Alphabet>,
    mass: Vec<T>,
}

pub(crate) fn check_mass<T: Scalar>(what: &str, mass: &mut [T]) -> Result<()> {
    for (i, &p) in mass.iter().enumerate() {
        if !p.is_finite() || p < T::zero() {
            return Err(Error::InvalidMass(format!("{what}: entry {i} is {p}")));
        }
    }
    let sum = ordered_sum(mass.iter().copied());
    let dev = (sum - T::one()).abs();
    if dev > T::tol(RENORMALIZE_TOL) {
        return Err(Error::NotNormalized { what: what.to_string(), sum: sum.as_f64() });
    }
    if dev > T::zero() {
        for p in mass.iter_mut() {
            *p = *p / sum;
        }
    }
    Ok(())
}

fn state_count(vars: &[Alphabet]) -> Result<usize> {
    vars.iter().try_fold(1usize, |acc, a| {
        acc.checked_mul(a.size)
            .ok_or(Error::CapExceeded { needed: u128::MAX, cap: usize::MAX as u128 })
    })
}

fn validate_vars(vars: &[Alphabet]) -> Result<()> {
    let mut seen = HashSet::new();
    for a in vars {
        if a.size == 0 {
            return Err(Error::Invalid(format!("alphabet `{}` is empty", a.name)));
        }
        if !seen.insert(a.name.as_str()) {
            return Err(Error::DuplicateVariable(a.name.clone()));
        }
    }
    Ok(())
}

impl<T: Scalar> Joint<T> {
    /// Builds a distribution, renormalizing if the mass sums to within `1e-6`
    /// of one and rejecting it otherwise.
    pub fn new(vars: Vec<Alphabet>, mut mass: Vec<T>) -> Result<Self> {
        validate_vars(&vars)?;
        let expected = state_count(&vars)?;
        if mass.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} mass entries for a state space of {expected}",
                mass.len()
            )));
        }
        check_mass("distribution", &mut mass)?;
        Ok(Self { vars, mass })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(vars: Vec<Alphabet>, weights: Vec<T>) -> Result<Self> {
        validate_vars(&vars)?;
        if weights.len() != state_count(&vars)? {
            return Err(Error::ShapeMismatch("weights do not match alphabets".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return Err(Error::InvalidMass("weights must be finite and nonnegative".into()));
        }
        let total = ordered_sum(weights.iter().copied());
        if total <= T::zero() {
            return Err(Error::ZeroMass);
        }
        let mass = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { vars, mass })
    }

    pub fn uniform(vars: Vec<Alphabet>) -> Result<Self> {
        validate_vars(&vars)?;
        let len = state_count(&vars)?;
        let p = T::one() / T::lit(len as f64);
        Ok(Self { vars, mass: vec![p; len] })
    }

    /// Point mass at the given coordinates (one per variable).
    pub fn point(vars: Vec<Alphabet>, coords: &[usize]) -> Result<Self> {
        validate_vars(&vars)?;
        if coords.len() != vars.len() || coords.iter().zip(&vars).any(|(c, a)| *c >= a.size) {
            return Err(Error::ShapeMismatch("point coordinates out of range".into()));
        }
        let mut mass = vec![T::zero(); state_count(&vars)?];
        let idx = coords.iter().zip(&vars).fold(0, |acc, (c, a)| acc * a.size + c);
        mass[idx] = T::one();
        Ok(Self { vars, mass })
    }

    /// Single-variable distribution.
    pub fn single(name: &str, probs: Vec<T>) -> Result<Self> {
        let size = probs.len();
        Self::new(vec![Alphabet::new(name, size)], probs)
    }

    pub fn vars(&self) -> &[Alphabet] {
        &self.vars
    }

    pub fn names(&self) -> Vec<&str> {
        self.vars.iter().map(|a| a.name.as_str()).collect()
    }

    pub fn mass(&self) -> &[T] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    fn indices_of(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut seen = HashSet::new();
        names
            .iter()
            .map(|n| {
                if !seen.insert(*n) {
                    return Err(Error::DuplicateVariable(n.to_string()));
                }
                self.index_of(n)
            })
            .collect()
    }

    /// Mass at explicit coordinates.
    pub fn get(&self, coords: &[usize]) -> T {
        let idx = coords.iter().zip(&self.vars).fold(0, |acc, (c, a)| acc * a.size + c);
        self.mass[idx]
    }

    /// Calls `f(coords, p)` for every entry in storage order.
    pub fn for_each(&self, mut f: impl FnMut(&[usize], T)) {
        let mut coords = vec![0usize; self.vars.len()];
        for &p in &self.mass {
            f(&coords, p);
            for d in (0..coords.len()).rev() {
                coords[d] += 1;
                if coords[d] < self.vars[d].size {
                    break;
                }
                coords[d] = 0;
            }
        }
    }

    fn project(&self, keep: &[usize]) -> Vec<T> {
        let sizes: Vec<usize> = keep.iter().map(|&i| self.vars[i].size).collect();
        let out_len = sizes.iter().product();
        // out-stride of each source axis (0 when summed out)
        let mut out_stride = vec![0usize; self.vars.len()];
        let mut s = 1;
        for (k, &i) in keep.iter().enumerate().rev() {
            out_stride[i] = s;
            s *= sizes[k];
        }
        let mut out = vec![T::zero(); out_len];
        let mut coords = vec![0usize; self.vars.len()];
        let mut oi = 0usize;
        for &p in &self.mass {
            out[oi] = out[oi] + p;
            for d in (0..coords.len()).rev() {
                coords[d] += 1;
                oi += out_stride[d];
                if coords[d] < self.vars[d].size {
                    break;
                }
                oi -= out_stride[d] * coords[d];
                coords[d] = 0;
            }
        }
        out
    }

    /// Marginal on `names`, with axes in the order given.
    pub fn marginal(&self, names: &[&str]) -> Result<Joint<T>> {
        if names.is_empty() {
            return Err(Error::Invalid("marginal over an empty variable set".into()));
        }
        let keep = self.indices_of(names)?;
        let vars = keep.iter().map(|&i| self.vars[i].clone()).collect();
        Ok(Joint { vars, mass: self.project(&keep) })
    }

    /// Shannon entropy in bits of the marginal on `names`.
    pub fn entropy(&self, names: &[&str]) -> Result<T> {
        if names.is_empty() {
            return Err(Error::Invalid("entropy of an empty variable set".into()));
        }
        self.entropy_of(names)
    }

    /// Like [`Joint::entropy`] but the empty set has entropy zero.
    pub(crate) fn entropy_of(&self, names: &[&str]) -> Result<T> {
        if names.is_empty() {
            return Ok(T::zero());
        }
        let keep = self.indices_of(names)?;
        let m = self.project(&keep);
        Ok(-ordered_sum(m.into_iter().map(Scalar::xlog2x)))
    }

    /// `H(A | B)` in bits.
    pub fn conditional_entropy(&self, a: &[&str], b: &[&str]) -> Result<T> {
        let ab = union(a, b)?;
        let h = self.entropy_of(&ab)? - self.entropy_of(b)?;
        Ok(h.max(T::zero()))
    }

    /// `I(A; B | C)` in bits, clamped at zero.
    pub fn mutual_information(&self, a: &[&str], b: &[&str], cond: &[&str]) -> Result<T> {
        let ab = union(a, b)?;
        let ac = union(a, cond)?;
        let bc = union(b, cond)?;
        let abc = union(&ab, cond)?;
        if a.is_empty() || b.is_empty() {
            // still validate names
            self.indices_of(&abc)?;
            return Ok(T::zero());
        }
        let i = self.entropy_of(&ac)? + self.entropy_of(&bc)?
            - self.entropy_of(&abc)?
            - self.entropy_of(cond)?;
        Ok(i.max(T::zero()))
    }

    /// Conditional distribution of the remaining variables given the
    /// assignments.
    pub fn condition(&self, given: &[(&str, usize)]) -> Result<Joint<T>> {
        let names: Vec<&str> = given.iter().map(|g| g.0).collect();
        let fixed = self.indices_of(&names)?;
        for (&i, &(n, v)) in fixed.iter().zip(given) {
            if v >= self.vars[i].size {
                return Err(Error::ShapeMismatch(format!("value {v} outside alphabet of `{n}`")));
            }
        }
        let rest: Vec<usize> = (0..self.vars.len()).filter(|i| !fixed.contains(i)).collect();
        if rest.is_empty() {
            return Err(Error::Invalid("conditioning on every variable".into()));
        }
        let vars: Vec<Alphabet> = rest.iter().map(|&i| self.vars[i].clone()).collect();
        let mut out = vec![T::zero(); state_count(&vars)?];
        let mut pos = vec![usize::MAX; self.vars.len()];
        for (k, &i) in rest.iter().enumerate() {
            pos[i] = k;
        }
        self.for_each(|coords, p| {
            if fixed.iter().zip(given).all(|(&i, g)| coords[i] == g.1) {
                let idx = rest.iter().fold(0, |acc, &i| acc * self.vars[i].size + coords[i]);
                out[idx] = out[idx] + p;
            }
        });
        let total = ordered_sum(out.iter().copied());
        if total <= T::zero() {
            return Err(Error::ZeroMass);
        }
        Ok(Joint { vars, mass: out.into_iter().map(|p| p / total).collect() })
    }

    /// Independent product `self ⊗ other`.
    pub fn product(&self, other: &Joint<T>) -> Result<Joint<T>> {
        let mut vars = self.vars.clone();
        vars.extend(other.vars.iter().cloned());
        validate_vars(&vars)?;
        let mut mass = Vec::with_capacity(self.len() * other.len());
        for &p in &self.mass {
            mass.extend(other.mass.iter().map(|&q| p * q));
        }
        Ok(Joint { vars, mass })
    }

    /// Chains a channel onto variable `input`, appending the channel outputs.
    pub fn compose(&self, input: &str, ch: &super::Channel<T>) -> Result<Joint<T>> {
        let i = self.index_of(input)?;
        if self.vars[i].size != ch.input().size {
            return Err(Error::ShapeMismatch(format!(
                "`{input}` has {} symbols, channel expects {}",
                self.vars[i].size,
                ch.input().size
            )));
        }
        let mut vars = self.vars.clone();
        vars.extend(ch.outputs().iter().cloned());
        validate_vars(&vars)?;
        let mut mass = Vec::with_capacity(self.len() * ch.output_size());
        self.for_each(|coords, p| {
            mass.extend(ch.row(coords[i]).iter().map(|&q| p * q));
        });
        Ok(Joint { vars, mass })
    }

    /// Renames variables in order.
    pub fn renamed(&self, names: &[&str]) -> Result<Joint<T>> {
        if names.len() != self.vars.len() {
            return Err(Error::ShapeMismatch("rename list length".into()));
        }
        let vars: Vec<Alphabet> =
            names.iter().zip(&self.vars).map(|(n, a)| Alphabet::new(*n, a.size)).collect();
        validate_vars(&vars)?;
        Ok(Joint { vars, mass: self.mass.clone() })
    }
}

fn union<'a>(a: &[&'a str], b: &[&'a str]) -> Result<Vec<&'a str>> {
    if let Some(dup) = a.iter().find(|x| b.contains(x)) {
        return Err(Error::OverlappingGroups(dup.to_string()));
    }
    let mut out = a.to_vec();
    out.extend_from_slice(b);
    Ok(out)
}

/// Total variation distance `½ Σ |p − q|`.
pub fn total_variation<T: Scalar>(p: &Joint<T>, q: &Joint<T>) -> Result<T> {
    if p.vars != q.vars {
        return Err(Error::ShapeMismatch("total variation between different variable lists".into()));
    }
    Ok(tv_slices(&p.mass, &q.mass))
}

/// Total variation between two mass vectors on the same index set.
pub fn tv_slices<T: Scalar>(p: &[T], q: &[T]) -> T {
    debug_assert_eq!(p.len(), q.len());
    let s = ordered_sum(p.iter().zip(q).map(|(&a, &b)| (a - b).abs()));
    (s * T::lit(0.5)).min(T::one())
}

/// Shannon entropy of a raw mass vector.
pub fn entropy_of_slice<T: Scalar>(p: &[T]) -> T {
    -ordered_sum(p.iter().map(|&x| x.xlog2x()))
}

/// The `n`-fold i.i.d. product of `d`.
///
/// Variables are renamed `name_t` for `t = 1..=n`, time-major.
pub fn iid_product<T: Scalar>(d: &Joint<T>, n: usize, cap: u128) -> Result<Joint<T>> {
    if n == 0 {
        return Err(Error::Invalid("blocklength must be positive".into()));
    }
    let needed = (d.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if needed > cap {
        return Err(Error::CapExceeded { needed, cap });
    }
    let mut vars = Vec::with_capacity(d.vars.len() * n);
    for t in 1..=n {
        for a in &d.vars {
            vars.push(Alphabet::new(format!("{}_{t}", a.name), a.size));
        }
    }
    let mut mass = vec![T::one()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(mass.len() * d.len());
        for &p in &mass {
            next.extend(d.mass.iter().map(|&q| p * q));
        }
        mass = next;
    }
    Ok(Joint { vars, mass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bern(p: f64) -> Joint<f64> {
        Joint::single("A", vec![1.0 - p, p]).unwrap()
    }

    fn xy(mass: Vec<f64>) -> Joint<f64> {
        Joint::new(vec![Alphabet::new("X", 2), Alphabet::new("Y", 2)], mass).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(bern(0.5).entropy(&["A"]).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(bern(0.0).entropy(&["A"]).unwrap(), 0.0);
        let h = -(0.1f64 * 0.1f64.log2() + 0.9 * 0.9f64.log2());
        assert_abs_diff_eq!(bern(0.1).entropy(&["A"]).unwrap(), h, epsilon = 1e-12);
        assert_abs_diff_eq!(h, 0.4690, epsilon = 1e-4);
    }

    #[test]
    fn unknown_variable_is_an_input_error() {
        let err = bern(0.5).entropy(&["B"]).unwrap_err();
        assert_eq!(err, Error::UnknownVariable("B".into()));
        assert_eq!(err.kind(), crate::ErrorKind::Input);
    }

    #[test]
    fn mutual_information_examples() {
        let copy = xy(vec![0.5, 0.0, 0.0, 0.5]);
        assert_abs_diff_eq!(copy.mutual_information(&["X"], &["Y"], &[]).unwrap(), 1.0, epsilon = 1e-12);
        let indep = xy(vec![0.25; 4]);
        assert_eq!(indep.mutual_information(&["X"], &["Y"], &[]).unwrap(), 0.0);
        let bsc = xy(vec![0.45, 0.05, 0.05, 0.45]);
        let h = -(0.1f64 * 0.1f64.log2() + 0.9 * 0.9f64.log2());
        assert_abs_diff_eq!(bsc.mutual_information(&["X"], &["Y"], &[]).unwrap(), 1.0 - h, epsilon = 1e-12);
    }

    #[test]
    fn overlapping_groups_rejected() {
        let d = xy(vec![0.25; 4]);
        assert!(matches!(
            d.mutual_information(&["X"], &["X", "Y"], &[]),
            Err(Error::OverlappingGroups(_))
        ));
    }

    #[test]
    fn total_variation_examples() {
        assert_eq!(total_variation(&bern(0.3), &bern(0.3)).unwrap(), 0.0);
        assert_eq!(total_variation(&bern(0.0), &bern(1.0)).unwrap(), 1.0);
        assert_abs_diff_eq!(total_variation(&bern(0.5), &bern(0.75)).unwrap(), 0.25, epsilon = 1e-15);
        assert!(matches!(
            total_variation(&bern(0.5), &xy(vec![0.25; 4])),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn iid_product_examples() {
        let d = Joint::single("A", vec![0.7, 0.3]).unwrap();
        let p2 = iid_product(&d, 2, 1 << 20).unwrap();
        assert_abs_diff_eq!(p2.get(&[0, 0]), 0.49, epsilon = 1e-15);
        assert_eq!(p2.names(), vec!["A_1", "A_2"]);
        let p1 = iid_product(&d, 1, 4).unwrap();
        assert_eq!(p1.mass(), d.mass());
        let u = iid_product(&bern(0.5), 3, 64).unwrap();
        assert!(u.mass().iter().all(|&p| (p - 0.125).abs() < 1e-15));
        assert!(matches!(iid_product(&d, 30, 1000), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn marginal_condition_compose() {
        let d = xy(vec![0.1, 0.2, 0.3, 0.4]);
        let mx = d.marginal(&["X"]).unwrap();
        assert_abs_diff_eq!(mx.mass()[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(mx.mass()[1], 0.7, epsilon = 1e-15);
        let my = d.marginal(&["Y"]).unwrap();
        assert_abs_diff_eq!(my.mass()[0], 0.4, epsilon = 1e-15);

        let p = Joint::single("P", vec![0.2, 0.8]).unwrap();
        let q = Joint::single("Q", vec![0.6, 0.1, 0.3]).unwrap();
        let pq = p.product(&q).unwrap();
        let c = pq.condition(&[("P", 1)]).unwrap();
        for (a, b) in c.mass().iter().zip(q.mass()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }

        let ch = super::super::Channel::new(
            Alphabet::new("X", 2),
            vec![Alphabet::new("Z", 2)],
            vec![vec![0.9, 0.1], vec![0.3, 0.7]],
        )
        .unwrap();
        let px = Joint::single("X", vec![0.25, 0.75]).unwrap();
        let z = px.compose("X", &ch).unwrap().marginal(&["Z"]).unwrap();
        assert_abs_diff_eq!(z.mass()[0], 0.25 * 0.9 + 0.75 * 0.3, epsilon = 1e-15);
    }

    #[test]
    fn zero_mass_conditioning_is_domain_error() {
        let d = xy(vec![0.5, 0.5, 0.0, 0.0]);
        let err = d.condition(&[("X", 1)]).unwrap_err();
        assert_eq!(err, Error::ZeroMass);
        assert_eq!(err.kind(), crate::ErrorKind::Domain);
    }

    #[test]
    fn renormalizes_small_drift_and_rejects_large() {
        let d = Joint::single("A", vec![0.5, 0.5 + 5e-7]).unwrap();
        assert_abs_diff_eq!(d.mass().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert!(matches!(Joint::single("A", vec![0.5, 0.4]), Err(Error::NotNormalized { .. })));
        assert!(matches!(Joint::single("A", vec![1.5, -0.5]), Err(Error::InvalidMass(_))));
    }

    #[test]
    fn works_in_single_precision() {
        let d: Joint<f32> = Joint::single("A", vec![0.5, 0.5]).unwrap();
        assert!((d.entropy(&["A"]).unwrap() - 1.0).abs() < 1e-6);
    }
}
