use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A non-singular square matrix with exact integer entries, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntegerMatrix {
    n: usize,
    entries: Vec<BigInt>,
    det: BigInt,
}

impl IntegerMatrix {
    pub fn new(n: usize, entries: Vec<BigInt>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("matrix dimension must be at least 1".into()));
        }
        if entries.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                found: entries.len(),
            });
        }
        let det = determinant(n, &entries);
        if det.is_zero() {
            return Err(Error::Singular);
        }
        Ok(IntegerMatrix { n, entries, det })
    }

    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: row.len(),
                });
            }
            entries.extend(row.iter().map(|&v| BigInt::from(v)));
        }
        IntegerMatrix::new(n, entries)
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = BigInt::one();
        }
        IntegerMatrix {
            n,
            entries,
            det: BigInt::one(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn det(&self) -> &BigInt {
        &self.det
    }

    /// Entry at zero-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> &BigInt {
        &self.entries[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[BigInt] {
        &self.entries[row * self.n..(row + 1) * self.n]
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub fn transpose(&self) -> IntegerMatrix {
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(self.get(j, i).clone());
            }
        }
        IntegerMatrix {
            n,
            entries,
            det: self.det.clone(),
        }
    }

    pub fn mul(&self, other: &IntegerMatrix) -> Result<IntegerMatrix> {
        if self.n != other.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: other.n,
            });
        }
        let n = self.n;
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for l in 0..n {
                let a = self.get(i, l);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    entries[i * n + j] += a * other.get(l, j);
                }
            }
        }
        Ok(IntegerMatrix {
            n,
            entries,
            det: &self.det * &other.det,
        })
    }

    /// Exact power `A^k` by repeated squaring.
    pub fn pow(&self, mut k: u32) -> IntegerMatrix {
        let mut result = IntegerMatrix::identity(self.n);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base).expect("same dimension");
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base).expect("same dimension");
            }
        }
        result
    }

    /// Exact inverse over the rationals (Gauss-Jordan).
    pub fn inverse(&self) -> Vec<BigRational> {
        let n = self.n;
        let mut aug: Vec<Vec<BigRational>> = (0..n)
            .map(|i| {
                let mut row: Vec<BigRational> = self
                    .row(i)
                    .iter()
                    .map(|v| BigRational::from_integer(v.clone()))
                    .collect();
                row.extend((0..n).map(|j| {
                    if i == j {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                }));
                row
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !aug[r][col].is_zero())
                .expect("non-singular matrix has a pivot in every column");
            aug.swap(col, pivot);
            let p = aug[col][col].clone();
            for v in aug[col].iter_mut() {
                *v = &*v / &p;
            }
            for r in 0..n {
                if r != col && !aug[r][col].is_zero() {
                    let factor = aug[r][col].clone();
                    for c in 0..2 * n {
                        let delta = &factor * &aug[col][c];
                        aug[r][c] -= delta;
                    }
                }
            }
        }
        aug.into_iter().flat_map(|row| row.into_iter().skip(n)).collect()
    }

    /// Largest row sum of absolute values, `max_i sum_j |A_ij|`.
    pub fn max_abs_row_sum(&self) -> BigInt {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<BigInt>())
            .max()
            .unwrap_or_default()
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| {
            self.get(i, j).to_f64().unwrap_or(f64::NAN)
        })
    }

    /// Text form: the dimension on the first line, then one line per row.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

impl FromStr for IntegerMatrix {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let n: usize = header
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad dimension line `{}`", header.trim())))?;
        let mut entries = Vec::with_capacity(n * n);
        for r in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("expected {n} rows, found {r}")))?;
            let row: Vec<BigInt> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<BigInt>()
                        .map_err(|_| Error::Parse(format!("bad integer `{tok}` in row {}", r + 1)))
                })
                .collect::<Result<_>>()?;
            if row.len() != n {
                return Err(Error::Parse(format!(
                    "row {} has {} entries, expected {n}",
                    r + 1,
                    row.len()
                )));
            }
            entries.extend(row);
        }
        if let Some(extra) = lines.next() {
            return Err(Error::Parse(format!("trailing content `{}`", extra.trim())));
        }
        IntegerMatrix::new(n, entries)
    }
}

impl fmt::Display for IntegerMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.n)
            .map(|i| {
                let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
                format!("[{}]", row.join(", "))
            })
            .collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

/// Fraction-free (Bareiss) determinant.
fn determinant(n: usize, entries: &[BigInt]) -> BigInt {
    let mut m: Vec<Vec<BigInt>> = entries.chunks(n).map(|r| r.to_vec()).collect();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}
