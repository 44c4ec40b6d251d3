//! Arithmetic in GF(2^s), 1 <= s <= 16, with log/antilog tables, plus dense
//! matrices and Gaussian elimination over the field.

use crate::error::{Error, Result};

/// A field element; only the low `s` bits are used.
pub type Symbol = u16;

/// Primitive polynomials indexed by degree (bit `s` set).
const PRIMITIVE_POLYS: [u32; 17] = [
    0, 0x3, 0x7, 0xB, 0x13, 0x25, 0x43, 0x89, 0x11D, 0x211, 0x409, 0x805, 0x1053, 0x201B, 0x4443,
    0x8003, 0x1100B,
];

pub const DEFAULT_FIELD_BITS: u32 = 16;

#[derive(Clone, Debug)]
pub struct GaloisField {
    bits: u32,
    /// Multiplicative group order, `2^s - 1`.
    group: usize,
    /// `exp[k] = alpha^k`, doubled so sums of two logs need no reduction.
    exp: Vec<Symbol>,
    log: Vec<u16>,
}

impl GaloisField {
    pub fn new(bits: u32) -> Result<Self> {
        if !(1..=16).contains(&bits) {
            return Err(Error::InvalidArgument(format!(
                "field exponent must be in 1..=16, got {bits}"
            )));
        }
        let poly = PRIMITIVE_POLYS[bits as usize];
        let size = 1usize << bits;
        let group = size - 1;
        let mut exp = vec![0; 2 * group];
        let mut log = vec![0u16; size];
        let mut x: u32 = 1;
        for (k, slot) in exp.iter_mut().take(group).enumerate() {
            *slot = x as Symbol;
            log[x as usize] = k as u16;
            x <<= 1;
            if x & (1 << bits) != 0 {
                x ^= poly;
            }
            if x == 1 && k + 1 < group {
                unreachable!("polynomial {poly:#x} is not primitive");
            }
        }
        for k in group..2 * group {
            exp[k] = exp[k - group];
        }
        Ok(Self {
            bits,
            group,
            exp,
            log,
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Number of field elements, `2^s`.
    pub fn size(&self) -> usize {
        self.group + 1
    }

    /// Number of distinct nonzero elements, `2^s - 1`.
    pub fn nonzero(&self) -> usize {
        self.group
    }

    #[inline]
    pub fn add(&self, a: Symbol, b: Symbol) -> Symbol {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: Symbol, b: Symbol) -> Symbol {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: Symbol) -> Option<Symbol> {
        (a != 0).then(|| self.exp[(self.group - self.log[a as usize] as usize) % self.group])
    }

    pub fn div(&self, a: Symbol, b: Symbol) -> Option<Symbol> {
        self.inv(b).map(|ib| self.mul(a, ib))
    }

    /// `alpha^k` for the primitive element `alpha`.
    #[inline]
    pub fn alpha_pow(&self, k: usize) -> Symbol {
        self.exp[k % self.group]
    }

    /// `alpha^k` for `k < 2 (2^s - 1)`, e.g. a sum of two logs.
    #[inline]
    pub fn alpha_pow_reduced(&self, k: usize) -> Symbol {
        self.exp[k]
    }

    /// Discrete log base `alpha`; `None` for zero.
    pub fn log(&self, a: Symbol) -> Option<usize> {
        (a != 0).then(|| self.log[a as usize] as usize)
    }

    /// `a * alpha^k` without a second table lookup for `alpha^k`.
    #[inline]
    pub fn mul_alpha_pow(&self, a: Symbol, k: usize) -> Symbol {
        if a == 0 {
            0
        } else {
            self.exp[(self.log[a as usize] as usize + k % self.group) % self.group]
        }
    }

    /// `a * b` given `log_b`, the discrete log of a nonzero `b`.
    #[inline]
    pub fn mul_by_log(&self, a: Symbol, log_b: usize) -> Symbol {
        if a == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + log_b]
        }
    }

    /// Horner evaluation of `sum_i coeffs[i] x^i`.
    pub fn eval_poly(&self, coeffs: &[Symbol], x: Symbol) -> Symbol {
        if x == 0 {
            return coeffs.first().copied().unwrap_or(0);
        }
        let lx = self.log[x as usize] as usize;
        coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| self.mul_by_log(acc, lx) ^ c)
    }

    /// [`Self::eval_poly`] at every point of `xs`, interleaved across points.
    pub fn eval_poly_many(&self, coeffs: &[Symbol], xs: &[Symbol]) -> Vec<Symbol> {
        let logs: Vec<Option<usize>> = xs.iter().map(|&x| self.log(x)).collect();
        let mut acc = vec![0 as Symbol; xs.len()];
        for &c in coeffs.iter().rev() {
            for (a, lx) in acc.iter_mut().zip(&logs) {
                *a = match lx {
                    Some(lx) => self.mul_by_log(*a, *lx),
                    None => 0,
                } ^ c;
            }
        }
        acc
    }

    /// Reduces a raw value into the field.
    pub fn element(&self, raw: u32) -> Symbol {
        (raw & self.group as u32) as Symbol
    }
}

/// Dense row-major matrix over a [`GaloisField`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Symbol>,
}

impl FieldMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Symbol>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    /// `k x k` identity.
    pub fn identity(k: usize) -> Self {
        let mut m = Self::zeros(k, k);
        for i in 0..k {
            m.set(i, i, 1);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Symbol {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Symbol) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Symbol] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Symbol> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Keeps the listed columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                out.set(r, j, self.get(r, c));
            }
        }
        out
    }

    /// `self` on top of `below`.
    pub fn stack(&self, below: &Self) -> Result<Self> {
        if self.cols != below.cols {
            return Err(Error::Dimension(format!(
                "cannot stack {} columns on {} columns",
                self.cols, below.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&below.data);
        Ok(Self {
            rows: self.rows + below.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn mul_vec(&self, field: &GaloisField, v: &[Symbol]) -> Result<Vec<Symbol>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(0, |acc, (&a, &x)| acc ^ field.mul(a, x))
            })
            .collect())
    }

    /// Rank by Gaussian elimination.
    pub fn rank(&self, field: &GaloisField) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for col in 0..m.cols {
            let Some(pivot) = (rank..m.rows).find(|&r| m.get(r, col) != 0) else {
                continue;
            };
            m.swap_rows(rank, pivot);
            let inv = field.inv(m.get(rank, col)).expect("nonzero pivot");
            for c in col..m.cols {
                let v = field.mul(m.get(rank, c), inv);
                m.set(rank, c, v);
            }
            for r in 0..m.rows {
                let factor = m.get(r, col);
                if r != rank && factor != 0 {
                    for c in col..m.cols {
                        let v = m.get(r, c) ^ field.mul(factor, m.get(rank, c));
                        m.set(r, c, v);
                    }
                }
            }
            rank += 1;
            if rank == m.rows {
                break;
            }
        }
        rank
    }

    /// Solves `self * x = rhs` when `self` has full column rank and the
    /// system is consistent. Returns `None` otherwise.
    pub fn solve(&self, field: &GaloisField, rhs: &[Symbol]) -> Option<Vec<Symbol>> {
        if rhs.len() != self.rows {
            return None;
        }
        let width = self.cols + 1;
        let mut aug = Self::zeros(self.rows, width);
        for (r, &b) in rhs.iter().enumerate() {
            for c in 0..self.cols {
                aug.set(r, c, self.get(r, c));
            }
            aug.set(r, self.cols, b);
        }
        let mut row = 0;
        for col in 0..self.cols {
            let pivot = (row..aug.rows).find(|&r| aug.get(r, col) != 0)?;
            aug.swap_rows(row, pivot);
            let inv = field.inv(aug.get(row, col)).expect("nonzero pivot");
            for c in col..width {
                let v = field.mul(aug.get(row, c), inv);
                aug.set(row, c, v);
            }
            for r in 0..aug.rows {
                let factor = aug.get(r, col);
                if r != row && factor != 0 {
                    for c in col..width {
                        let v = aug.get(r, c) ^ field.mul(factor, aug.get(row, c));
                        aug.set(r, c, v);
                    }
                }
            }
            row += 1;
        }
        if (row..aug.rows).any(|r| aug.get(r, self.cols) != 0) {
            return None;
        }
        Some((0..self.cols).map(|c| aug.get(c, self.cols)).collect())
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }
}
