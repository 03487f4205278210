use crate::error::{Error, Result};
use crate::scalar::{ordered_sum, Scalar};

use super::joint::{check_mass, Alphabet};
use super::Joint;

/// Row-stochastic kernel from one input alphabet to a tuple of outputs.
///
/// Each row is a distribution over the product of the output alphabets,
/// stored with the last output varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel<T> {
    input: Alphabet,
    outputs: Vec<Alphabet>,
    kernel: Vec<T>,
    out_size: usize,
}

impl<T: Scalar> Channel<T> {
    pub fn new(input: Alphabet, outputs: Vec<Alphabet>, rows: Vec<Vec<T>>) -> Result<Self> {
        if outputs.is_empty() {
            return Err(Error::Invalid("channel needs at least one output".into()));
        }
        let out_size: usize = outputs.iter().map(|a| a.size).product();
        if out_size == 0 || input.size == 0 {
            return Err(Error::Invalid("empty channel alphabet".into()));
        }
        let mut names = vec![input.name.as_str()];
        for a in &outputs {
            if names.contains(&a.name.as_str()) {
                return Err(Error::DuplicateVariable(a.name.clone()));
            }
            names.push(&a.name);
        }
        if rows.len() != input.size {
            return Err(Error::ShapeMismatch(format!(
                "channel has {} rows for an input alphabet of {}",
                rows.len(),
                input.size
            )));
        }
        let mut kernel = Vec::with_capacity(input.size * out_size);
        for (x, mut row) in rows.into_iter().enumerate() {
            if row.len() != out_size {
                return Err(Error::ShapeMismatch(format!(
                    "channel row {x} has {} entries, expected {out_size}",
                    row.len()
                )));
            }
            check_mass(&format!("channel row {x}"), &mut row)?;
            kernel.extend(row);
        }
        Ok(Self { input, outputs, kernel, out_size })
    }

    pub fn input(&self) -> &Alphabet {
        &self.input
    }

    pub fn outputs(&self) -> &[Alphabet] {
        &self.outputs
    }

    pub fn output_size(&self) -> usize {
        self.out_size
    }

    pub fn row(&self, x: usize) -> &[T] {
        &self.kernel[x * self.out_size..(x + 1) * self.out_size]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.input.size).map(|x| self.row(x).to_vec()).collect()
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: T, input: &str, output: &str) -> Result<Self> {
        let q = T::one() - p;
        Self::new(
            Alphabet::new(input, 2),
            vec![Alphabet::new(output, 2)],
            vec![vec![q, p], vec![p, q]],
        )
    }

    /// Noiseless copy of the input.
    pub fn identity(input: Alphabet, output: &str) -> Result<Self> {
        let n = input.size;
        let rows = (0..n)
            .map(|x| (0..n).map(|y| if x == y { T::one() } else { T::zero() }).collect())
            .collect();
        Self::new(input, vec![Alphabet::new(output, n)], rows)
    }

    /// Output independent of the input, distributed as `p`.
    pub fn constant(input: Alphabet, output: &str, p: &[T]) -> Result<Self> {
        let rows = vec![p.to_vec(); input.size];
        Self::new(input, vec![Alphabet::new(output, p.len())], rows)
    }

    /// Two conditionally independent kernels sharing an input, `P(a|x)P(b|x)`.
    pub fn pair(&self, other: &Channel<T>) -> Result<Self> {
        if self.input != other.input {
            return Err(Error::ShapeMismatch("paired channels need the same input".into()));
        }
        let mut outputs = self.outputs.clone();
        outputs.extend(other.outputs.iter().cloned());
        let rows = (0..self.input.size)
            .map(|x| {
                let mut r = Vec::with_capacity(self.out_size * other.out_size);
                for &a in self.row(x) {
                    r.extend(other.row(x).iter().map(|&b| a * b));
                }
                r
            })
            .collect();
        Self::new(self.input.clone(), outputs, rows)
    }

    /// Kernel restricted to a subset of outputs, in the order given.
    pub fn marginal_outputs(&self, names: &[&str]) -> Result<Self> {
        let rows = (0..self.input.size)
            .map(|x| self.conditional(x).and_then(|d| d.marginal(names)).map(|d| d.mass().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        let outputs = names
            .iter()
            .map(|n| {
                self.outputs
                    .iter()
                    .find(|a| a.name == *n)
                    .cloned()
                    .ok_or_else(|| Error::UnknownVariable(n.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.input.clone(), outputs, rows)
    }

    /// Row `x` as a distribution over the outputs.
    pub fn conditional(&self, x: usize) -> Result<Joint<T>> {
        Joint::new(self.outputs.clone(), self.row(x).to_vec())
    }

    /// Output distribution under input law `p_x`.
    pub fn output_distribution(&self, p_x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.out_size];
        for (x, &px) in p_x.iter().enumerate() {
            for (o, &q) in out.iter_mut().zip(self.row(x)) {
                *o = *o + px * q;
            }
        }
        out
    }

    /// `I(X; outputs)` for input law `p_x`.
    pub fn mutual_information(&self, p_x: &[T]) -> T {
        let q = self.output_distribution(p_x);
        let mut acc = Vec::with_capacity(p_x.len() * self.out_size);
        for (x, &px) in p_x.iter().enumerate() {
            if px <= T::zero() {
                continue;
            }
            for (o, &w) in self.row(x).iter().enumerate() {
                if w > T::zero() && q[o] > T::zero() {
                    acc.push(px * w * (w / q[o]).log2());
                }
            }
        }
        ordered_sum(acc).max(T::zero())
    }
}
