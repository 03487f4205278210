//! The achievability rate system in `(R_M, R_C, R_F)` and its reduction to
//! the final `(R_M, R_C)` window.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::prob::{Alphabet, Joint};
use crate::region::RegionKind;

use super::expr::{Valuation, VarTable};
use super::system::{RateSystem, Rel};

pub const RATES: [&str; 3] = ["R_M", "R_C", "R_F"];

/// Single-letter variables in printing order.
pub fn wxyz_table() -> VarTable {
    VarTable::new(["W", "X", "Y", "Z"])
}

type RowSpec<'a> = (Vec<(&'a str, i64)>, Rel, &'a str);

/// Uniformity, reliability and F-independence conditions of the
/// random-binning scheme, plus rate nonnegativity.
pub fn achievability_system(kind: RegionKind) -> RateSystem {
    let mut s = RateSystem::new(RATES, wxyz_table());
    let rows: Vec<RowSpec> = {
        let mut v = vec![
            (vec![("R_F", 1)], Rel::Lt, "H(W)"),
            (vec![("R_M", 1), ("R_C", 1)], Rel::Lt, "H(X)"),
            (vec![("R_M", 1), ("R_C", 1), ("R_F", 1)], Rel::Lt, "H(WX)"),
            (vec![("R_C", 1), ("R_F", 1)], Rel::Gt, "H(WX|Y)"),
            (vec![("R_C", 1)], Rel::Gt, "H(X|WY)"),
        ];
        if kind != RegionKind::Marginal {
            v.push((vec![("R_M", 1), ("R_F", 1)], Rel::Lt, "H(WX|Z)"));
        }
        v.push((vec![("R_F", 1)], Rel::Lt, "H(W|Z)"));
        if kind == RegionKind::Secrecy {
            v.push((vec![("R_M", 1)], Rel::Lt, "H(X|Z)"));
        }
        for r in RATES {
            v.push((vec![(r, 1)], Rel::Gt, "0"));
        }
        v
    };
    for (c, rel, e) in rows {
        s.push(&c, rel, e).expect("built-in system is well formed");
    }
    s
}

/// Random joints on `(W, X, Y, Z)` with `W − X − YZ`, used as a numeric
/// panel for dominance checks.
pub fn markov_panel(count: usize, seed: u64) -> Vec<Joint<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let simplex = |k: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let v: Vec<f64> = (0..k).map(|_| -(rng.gen::<f64>().max(1e-300)).ln()).collect();
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    };
    (0..count)
        .map(|_| {
            let (nw, nx) = (rng.gen_range(2..=3), rng.gen_range(2..=3));
            // half of the kernels are deterministic so that corner cases such
            // as Z = X or W = f(X) are represented
            let kernel = |k: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
                if rng.gen_bool(0.5) {
                    let mut r = vec![0.0; k];
                    r[rng.gen_range(0..k)] = 1.0;
                    r
                } else {
                    simplex(k, rng)
                }
            };
            let px = simplex(nx, &mut rng);
            let pw_x: Vec<Vec<f64>> = (0..nx).map(|_| kernel(nw, &mut rng)).collect();
            let yz: Vec<Vec<f64>> = (0..nx).map(|_| kernel(4, &mut rng)).collect();
            let mut mass = Vec::with_capacity(nw * nx * 4);
            for w in 0..nw {
                for x in 0..nx {
                    for o in 0..4 {
                        mass.push(px[x] * pw_x[x][w] * yz[x][o]);
                    }
                }
            }
            Joint::new(
                vec![
                    Alphabet::new("W", nw),
                    Alphabet::new("X", nx),
                    Alphabet::new("Y", 2),
                    Alphabet::new("Z", 2),
                ],
                mass,
            )
            .expect("panel joint is normalized")
        })
        .collect()
}

/// Every stage of the reduction, for display and testing.
#[derive(Debug, Clone)]
pub struct Derivation {
    pub original: RateSystem,
    pub eliminated: RateSystem,
    pub markov: RateSystem,
    pub reduced: RateSystem,
    pub window: Vec<String>,
}

/// Eliminates `R_F`, substitutes the `R_C` lower bounds into rows bounding
/// `R_M + R_C`, weakens `R_C` lower bounds by the nonnegative `H(X|WY)`,
/// cancels terms under `W − X − YZ` and prunes dominated rows on a panel of
/// valuations.
pub fn derive(kind: RegionKind) -> Result<Derivation> {
    let original = achievability_system(kind);
    let eliminated = original.eliminate("R_F")?;
    let decoupled = eliminated.substitute_lower("R_C")?;
    let relaxed = decoupled.relax_lower("R_C", "H(X|WY)")?;
    let markov = relaxed.apply_chains(&[[vec!["W"], vec!["X"], vec!["Y", "Z"]]])?;
    let panel = markov_panel(64, 0x5eed);
    let vals: Vec<&dyn Valuation> = panel.iter().map(|j| j as &dyn Valuation).collect();
    let reduced = markov.simplify(&vals, 1e-9)?;
    let window = reduced.window_lines();
    Ok(Derivation { original, eliminated, markov, reduced, window })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn general_window_matches_closed_form() {
        let d = derive(RegionKind::General).unwrap();
        assert!(d.window.contains(&"R_M < min{H(WX|Z), I(X;Y)}".to_string()), "{:?}", d.window);
        assert!(d.window.contains(&"R_C > max{0, I(W;Z)-I(W;Y)}".to_string()), "{:?}", d.window);
    }

    #[test]
    fn secrecy_and_marginal_windows() {
        let s = derive(RegionKind::Secrecy).unwrap();
        assert!(s.window.iter().any(|l| l.starts_with("R_M < min{") && l.contains("H(X|Z)")), "{:?}", s.window);
        let m = derive(RegionKind::Marginal).unwrap();
        assert!(m.window.contains(&"R_M < I(X;Y)".to_string()), "{:?}", m.window);
        assert!(m.window.contains(&"R_C > max{0, I(W;Z)-I(W;Y)}".to_string()), "{:?}", m.window);
    }
}
