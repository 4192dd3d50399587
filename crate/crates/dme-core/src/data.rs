//! Node vectors: the `n x d` matrix the nodes hold, synthetic generators for
//! it, and the CSV interchange format.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use crate::rng::RngState;
use crate::{Error, Result};

/// The `n x d` matrix of node vectors, row `i` = node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    values: Vec<f64>, // row-major
}

impl Dataset {
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidArgument(format!("n={n}, d={d}: both must be >= 1")));
        }
        if values.len() != n * d {
            return Err(Error::InvalidArgument(format!(
                "expected {} values for {n}x{d}, got {}",
                n * d,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite entry {v}")));
        }
        Ok(Dataset { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: r.len() });
            }
        }
        Dataset::new(n, d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.d + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.d)
    }

    /// True mean `X = (1/n) sum_i X_i`, summed in node order.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for row in self.rows() {
            for (acc, v) in m.iter_mut().zip(row) {
                *acc += v;
            }
        }
        let inv = 1.0 / self.n as f64;
        m.iter_mut().for_each(|v| *v *= inv);
        m
    }

    /// Arithmetic mean of each row, the default node centers.
    pub fn row_means(&self) -> Vec<f64> {
        self.rows().map(|r| r.iter().sum::<f64>() / self.d as f64).collect()
    }

    /// One row per node, `d` comma-separated columns, no header; shortest
    /// round-trip decimals.
    /// Writes `x0,x1,...` header plus one row per node, shortest decimal
    /// form per value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (0..self.d).map(|j| format!("x{j}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Reads a dataset back; a leading header row is optional so hand-made
    /// headerless matrices load too.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rows = Vec::new();
        let mut first_data_line = true;
        for (lineno, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Result<Vec<f64>> = line
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
                })
                .collect();
            if first_data_line {
                first_data_line = false;
                if row.is_err() {
                    continue;
                }
            }
            rows.push(row?);
        }
        if rows.is_empty() {
            return Err(Error::Parse("empty dataset file".into()));
        }
        Dataset::from_rows(&rows)
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }
}

/// Source distribution for synthetic data, all i.i.d. per entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    /// Standard normal N(0, 1).
    Gaussian,
    /// Laplace(0, 1), variance 2.
    Laplace,
    /// Chi-squared with 2 degrees of freedom, mean 2, variance 4.
    ChiSquared,
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Distribution::Gaussian),
            "laplace" => Ok(Distribution::Laplace),
            "chi_squared" | "chi2" => Ok(Distribution::ChiSquared),
            other => Err(Error::InvalidArgument(format!(
                "unknown distribution tag {other:?} (expected gaussian, laplace or chi_squared)"
            ))),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::Gaussian => "gaussian",
            Distribution::Laplace => "laplace",
            Distribution::ChiSquared => "chi_squared",
        })
    }
}

impl Distribution {
    pub fn sample(&self, rng: &mut RngState) -> f64 {
        match self {
            Distribution::Gaussian => {
                // Box-Muller; open-interval uniforms keep ln finite.
                let u1 = rng.next_open_f64();
                let u2 = rng.next_open_f64();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            }
            Distribution::Laplace => {
                let u = rng.next_open_f64();
                if u < 0.5 {
                    (2.0 * u).ln()
                } else {
                    -(2.0 * (1.0 - u)).ln()
                }
            }
            // chi^2 with 2 dof is exponential with mean 2; u < 1 strictly,
            // so every sample is positive.
            Distribution::ChiSquared => -2.0 * rng.next_open_f64().ln(),
        }
    }
}

/// Generate an `n x d` dataset of i.i.d. entries, fully determined by the seed.
pub fn gen_synthetic(dist: Distribution, n: usize, d: usize, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument(format!("n={n}, d={d}: both must be >= 1")));
    }
    let mut rng = RngState::new(seed);
    let values = (0..n * d).map(|_| dist.sample(&mut rng)).collect();
    Dataset::new(n, d, values)
}
