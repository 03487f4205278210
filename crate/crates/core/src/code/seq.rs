use crate::error::Result;
use crate::scalar::Scalar;

/// Little-endian rank of a sequence over an alphabet of size `a`.
pub fn rank(seq: &[usize], a: usize) -> usize {
    seq.iter().rev().fold(0, |r, &s| r * a + s)
}

pub fn unrank(mut r: usize, a: usize, n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(r % a);
        r /= a;
    }
    out
}

/// `P^{⊗n}` over ranks.
pub(crate) fn product_law<T: Scalar>(p: &[T], n: usize) -> Vec<T> {
    let mut cur = vec![T::one()];
    for _ in 0..n {
        // new rank = s + a · old rank
        let mut next = Vec::with_capacity(cur.len() * p.len());
        for &c in &cur {
            for &q in p {
                next.push(q * c);
            }
        }
        cur = next;
    }
    cur
}

/// The memoryless extension `K^{⊗n}` of a kernel, as a dense table.
#[derive(Debug, Clone)]
pub struct SeqKernel<T> {
    pub inputs: usize,
    pub outputs: usize,
    table: Vec<T>,
}

impl<T: Scalar> SeqKernel<T> {
    /// Fails when the table would exceed `cap` entries.
    pub fn new(rows: &[Vec<T>], n: usize, cap: u128) -> Result<Self> {
        let (a, b) = (rows.len(), rows.first().map_or(0, Vec::len));
        let needed = (a as u128 * b as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if needed > cap {
            return Err(crate::Error::CapExceeded { needed, cap });
        }
        let (mut ins, mut outs, mut table) = (1usize, 1usize, vec![T::one()]);
        for _ in 0..n {
            let (ni, no) = (ins * a, outs * b);
            let mut next = vec![T::zero(); ni * no];
            for xr in 0..ins {
                for yr in 0..outs {
                    let v = table[xr * outs + yr];
                    if v == T::zero() {
                        continue;
                    }
                    for (x0, row) in rows.iter().enumerate() {
                        for (y0, &k) in row.iter().enumerate() {
                            next[(x0 + a * xr) * no + y0 + b * yr] = k * v;
                        }
                    }
                }
            }
            ins = ni;
            outs = no;
            table = next;
        }
        Ok(Self { inputs: ins, outputs: outs, table })
    }

    pub fn row(&self, x: usize) -> &[T] {
        &self.table[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.table[x * self.outputs + y]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_round_trip() {
        assert_eq!(rank(&[1, 0, 0], 2), 1);
        assert_eq!(rank(&[0, 1, 2], 3), 3 + 18);
        for r in 0..27 {
            assert_eq!(rank(&unrank(r, 3, 3), 3), r);
        }
    }

    #[test]
    fn kernel_extension_matches_products() {
        let rows = vec![vec![0.9, 0.1], vec![0.2, 0.8]];
        let k = SeqKernel::new(&rows, 3, 1 << 20).unwrap();
        for x in 0..8 {
            let xs = unrank(x, 2, 3);
            for y in 0..8 {
                let ys = unrank(y, 2, 3);
                let p: f64 = xs.iter().zip(&ys).map(|(a, b)| rows[*a][*b]).product();
                assert!((k.get(x, y) - p).abs() < 1e-15);
            }
            assert!((k.row(x).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let law = product_law(&[0.3f64, 0.7], 2);
        assert_eq!(law.len(), 4);
        assert!((law[1] - 0.7 * 0.3).abs() < 1e-15);
        assert!(SeqKernel::new(&rows, 30, 1 << 20).is_err());
    }
}
