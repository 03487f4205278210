use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::scalar::Scalar;

use super::CodeConfig;

/// Uniform random binnings of `𝒲ⁿ` and `𝒳ⁿ`, indexed by sequence rank.
/// Bin labels are zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BinningScheme {
    pub n_m: usize,
    pub n_c: usize,
    pub n_f: usize,
    pub phi_f: Vec<usize>,
    pub phi_c: Vec<usize>,
    pub phi_m: Vec<usize>,
}

/// Number of sequences falling in each bin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Occupancy {
    pub f: Vec<usize>,
    pub c: Vec<usize>,
    pub m: Vec<usize>,
}

impl BinningScheme {
    pub fn occupancy(&self) -> Occupancy {
        let count = |map: &[usize], k: usize| {
            let mut v = vec![0; k];
            for &b in map {
                v[b] += 1;
            }
            v
        };
        Occupancy { f: count(&self.phi_f, self.n_f), c: count(&self.phi_c, self.n_c), m: count(&self.phi_m, self.n_m) }
    }

    pub fn mcf_count(&self) -> u128 {
        self.n_m as u128 * self.n_c as u128 * self.n_f as u128
    }

    /// Flat index of `(m, c, f)`.
    pub fn mcf(&self, m: usize, c: usize, f: usize) -> usize {
        (m * self.n_c + c) * self.n_f + f
    }

    pub fn split_mcf(&self, i: usize) -> (usize, usize, usize) {
        (i / (self.n_c * self.n_f), (i / self.n_f) % self.n_c, i % self.n_f)
    }
}

/// Draws `φ_F`, then `φ_C`, then `φ_M` i.i.d. uniform from a ChaCha8 stream
/// seeded with `cfg.seed`.
pub fn build_binning<T: Scalar>(cfg: &CodeConfig<T>) -> Result<BinningScheme> {
    let (nw, nx) = cfg.seq_sizes()?;
    cfg.check_cap(nw as u128 + 2 * nx as u128)?;
    let (n_m, n_c, n_f) = cfg.bins()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let phi_f = (0..nw).map(|_| rng.gen_range(0..n_f)).collect();
    let phi_c = (0..nx).map(|_| rng.gen_range(0..n_c)).collect();
    let phi_m = (0..nx).map(|_| rng.gen_range(0..n_m)).collect();
    Ok(BinningScheme { n_m, n_c, n_f, phi_f, phi_c, phi_m })
}
