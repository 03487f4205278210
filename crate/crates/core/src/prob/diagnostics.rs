//! Converse-side diagnostics: the Csiszár sum identity and the i.i.d.
//! proximity sum `Σ_t I(A_t; A_~t)`.

use crate::error::{Error, Result};
use crate::scalar::{ordered_sum, Scalar};

use super::Joint;

/// Both sides of the Csiszár sum identity for sequences `ys`, `zs`
/// (time-ordered variable names) and an optional conditioning group.
///
/// `lhs = Σ_t I(Y_{t+1..n}; Z_t | Z_{1..t-1}, cond)` and
/// `rhs = Σ_t I(Z_{1..t-1}; Y_t | Y_{t+1..n}, cond)`.
pub fn csiszar_sum_check<T: Scalar>(
    d: &Joint<T>,
    ys: &[&str],
    zs: &[&str],
    cond: &[&str],
) -> Result<(T, T)> {
    if ys.is_empty() || ys.len() != zs.len() {
        return Err(Error::Invalid("Y and Z sequences must have the same positive length".into()));
    }
    let n = ys.len();
    let mut lhs = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    for t in 0..n {
        let y_future = &ys[t + 1..];
        let z_past = &zs[..t];
        let mut c1 = z_past.to_vec();
        c1.extend_from_slice(cond);
        lhs.push(d.mutual_information(y_future, &[zs[t]], &c1)?);
        let mut c2 = y_future.to_vec();
        c2.extend_from_slice(cond);
        rhs.push(d.mutual_information(z_past, &[ys[t]], &c2)?);
    }
    Ok((ordered_sum(lhs), ordered_sum(rhs)))
}

/// `Σ_t I(A_t; A_~t)` with each variable of `d` taken as one coordinate.
pub fn iid_proximity_diagnostic<T: Scalar>(d: &Joint<T>) -> Result<T> {
    let names = d.names();
    let groups: Vec<Vec<&str>> = names.iter().map(|n| vec![*n]).collect();
    iid_proximity_grouped(d, &groups)
}

/// Same as [`iid_proximity_diagnostic`] but each coordinate may span
/// several variables (for example `(X_t, Z_t)`).
pub fn iid_proximity_grouped<T: Scalar>(d: &Joint<T>, groups: &[Vec<&str>]) -> Result<T> {
    if groups.len() < 2 {
        return Err(Error::Invalid("proximity diagnostic needs at least two coordinates".into()));
    }
    let mut terms = Vec::with_capacity(groups.len());
    for (t, g) in groups.iter().enumerate() {
        let rest: Vec<&str> = groups
            .iter()
            .enumerate()
            .filter(|(s, _)| *s != t)
            .flat_map(|(_, h)| h.iter().copied())
            .collect();
        terms.push(d.mutual_information(g, &rest, &[])?);
    }
    Ok(ordered_sum(terms))
}
