use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::prob::Channel;
use crate::scalar::Scalar;

use super::search::{random_simplex, simplex_grid};

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult<T> {
    pub value: T,
    pub p_x: Vec<T>,
}

/// `max_{P_X} I(X; outputs)` by a simplex grid sweep (resolution `1/grid`,
/// random starts above four input symbols) followed by pairwise mass-moving
/// refinement of the best point.
pub fn capacity<T: Scalar>(ch: &Channel<T>, grid: usize) -> CapacityResult<T> {
    let nx = ch.input().size;
    let starts: Vec<Vec<T>> = if nx <= 4 {
        simplex_grid(nx, grid.max(1))
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut v: Vec<Vec<T>> = (0..64).map(|_| random_simplex(nx, &mut rng)).collect();
        v.push(vec![T::one() / T::lit(nx as f64); nx]);
        v
    };
    let mut best = starts[0].clone();
    let mut best_v = ch.mutual_information(&best);
    for p in starts.into_iter().skip(1) {
        let v = ch.mutual_information(&p);
        if v > best_v {
            best_v = v;
            best = p;
        }
    }
    let mut step = T::lit(1.0 / grid.max(1) as f64);
    let floor = T::lit(1e-10);
    while step > floor {
        let mut improved = false;
        for a in 0..nx {
            for b in 0..nx {
                if a == b || best[a] <= T::zero() {
                    continue;
                }
                let d = step.min(best[a]);
                let mut cand = best.clone();
                cand[a] = cand[a] - d;
                cand[b] = cand[b] + d;
                let v = ch.mutual_information(&cand);
                if v > best_v {
                    best_v = v;
                    best = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step = step * T::lit(0.5);
        }
    }
    CapacityResult { value: best_v, p_x: best }
}
