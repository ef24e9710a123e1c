//! Dense vectors and matrices over GF(2).
//!
//! Bits are packed into `u64` words, least-significant bit first. Bits past
//! `len` in the last word are always zero, so derived equality and hashing
//! are bit-exact.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const WORD: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// Largest row count accepted by [`BitMatrix::min_weight_nonzero_rowspan`].
pub const WEIGHT_ENUMERATION_MAX_ROWS: usize = 24;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn unit(len: usize, bit: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(bit, true);
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds a vector from the low `len` bits of `value`, bit `i` of the
    /// vector being bit `i` of the integer.
    pub fn from_u128(len: usize, value: u128) -> Self {
        assert!(len <= 128);
        let mut v = Self::zeros(len);
        for i in 0..len {
            if (value >> i) & 1 == 1 {
                v.set(i, true);
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range (len {})", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range (len {})", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "length mismatch in xor");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    pub fn xor(&self, other: &BitVector) -> BitVector {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            % 2
            == 1
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD + b)
                }
            })
        })
    }

    pub fn first_one(&self) -> Option<usize> {
        self.ones().next()
    }

    /// Low 128 bits as an integer; `None` when `len > 128`.
    pub fn to_u128(&self) -> Option<u128> {
        if self.len > 128 {
            return None;
        }
        let lo = self.words.first().copied().unwrap_or(0) as u128;
        let hi = self.words.get(1).copied().unwrap_or(0) as u128;
        Some(lo | (hi << 64))
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    pub fn concat(&self, other: &BitVector) -> BitVector {
        let mut out = BitVector::zeros(self.len + other.len);
        for i in self.ones() {
            out.set(i, true);
        }
        for i in other.ones() {
            out.set(self.len + i, true);
        }
        out
    }

    pub fn select(&self, indices: &[usize]) -> BitVector {
        let mut out = BitVector::zeros(indices.len());
        for (dst, &src) in indices.iter().enumerate() {
            if self.get(src) {
                out.set(dst, true);
            }
        }
        out
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut v = BitVector::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                other => return Err(Error::Parse(format!("unexpected character {other:?}"))),
            }
        }
        Ok(v)
    }
}

/// Row-major dense matrix over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVector>,
}

/// Reduced row echelon form together with its pivot columns.
#[derive(Clone, Debug)]
pub struct Echelon {
    pub matrix: BitMatrix,
    pub pivots: Vec<usize>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            cols,
            rows: vec![BitVector::zeros(cols); rows],
        }
    }

    pub fn identity(size: usize) -> Self {
        Self {
            cols: size,
            rows: (0..size).map(|i| BitVector::unit(size, i)).collect(),
        }
    }

    pub fn from_rows(cols: usize, rows: Vec<BitVector>) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                actual: bad.len(),
            });
        }
        Ok(Self { cols, rows })
    }

    /// Builds a matrix from its columns, each of length `rows`.
    pub fn from_columns(rows: usize, columns: &[BitVector]) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    actual: c.len(),
                });
            }
            for i in c.ones() {
                m.set(i, j, true);
            }
        }
        Ok(m)
    }

    pub fn from_bit_rows(bits: &[&[u8]]) -> Self {
        let cols = bits.first().map_or(0, |r| r.len());
        let rows = bits
            .iter()
            .map(|r| {
                assert_eq!(r.len(), cols, "ragged rows");
                BitVector::from_bools(&r.iter().map(|&b| b != 0).collect::<Vec<_>>())
            })
            .collect();
        Self { cols, rows }
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitVector {
        &self.rows[i]
    }

    pub fn row_vectors(&self) -> &[BitVector] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].get(j)
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.rows[i].set(j, value);
    }

    pub fn column(&self, j: usize) -> BitVector {
        assert!(j < self.cols);
        let mut c = BitVector::zeros(self.rows());
        for (i, r) in self.rows.iter().enumerate() {
            if r.get(j) {
                c.set(i, true);
            }
        }
        c
    }

    pub fn columns(&self) -> Vec<BitVector> {
        self.transpose().rows
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(BitVector::is_zero)
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows());
        for (i, r) in self.rows.iter().enumerate() {
            for j in r.ones() {
                t.set(j, i, true);
            }
        }
        t
    }

    pub fn select_columns(&self, indices: &[usize]) -> BitMatrix {
        BitMatrix {
            cols: indices.len(),
            rows: self.rows.iter().map(|r| r.select(indices)).collect(),
        }
    }

    /// Drops the listed columns, keeping the remaining ones in order.
    pub fn delete_columns(&self, indices: &[usize]) -> BitMatrix {
        let keep: Vec<usize> = (0..self.cols).filter(|j| !indices.contains(j)).collect();
        self.select_columns(&keep)
    }

    pub fn hconcat(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.rows() != other.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.rows(),
                actual: other.rows(),
            });
        }
        Ok(BitMatrix {
            cols: self.cols + other.cols,
            rows: self.rows.iter().zip(&other.rows).map(|(a, b)| a.concat(b)).collect(),
        })
    }

    /// Copies `block` into this matrix with its top-left corner at `(r0, c0)`.
    pub fn place(&mut self, r0: usize, c0: usize, block: &BitMatrix) {
        for (i, r) in block.rows.iter().enumerate() {
            for j in r.ones() {
                self.set(r0 + i, c0 + j, true);
            }
        }
    }

    /// Row vector times matrix: `u · M`.
    pub fn left_mul(&self, u: &BitVector) -> Result<BitVector> {
        if u.len() != self.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.rows(),
                actual: u.len(),
            });
        }
        let mut out = BitVector::zeros(self.cols);
        for i in u.ones() {
            out.xor_assign(&self.rows[i]);
        }
        Ok(out)
    }

    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: other.rows(),
            });
        }
        let rows = self
            .rows
            .iter()
            .map(|r| other.left_mul(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(BitMatrix { cols: other.cols, rows })
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        self.rows.swap(a, b);
    }

    /// Adds row `src` into row `dst`.
    pub fn add_row(&mut self, src: usize, dst: usize) {
        assert_ne!(src, dst);
        let s = self.rows[src].clone();
        self.rows[dst].xor_assign(&s);
    }

    /// Gauss-Jordan elimination, scanning columns left to right.
    pub fn rref(&self) -> Echelon {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut next = 0;
        for col in 0..m.cols {
            if next == m.rows() {
                break;
            }
            let Some(p) = (next..m.rows()).find(|&i| m.rows[i].get(col)) else {
                continue;
            };
            m.rows.swap(next, p);
            let pivot_row = m.rows[next].clone();
            for i in 0..m.rows() {
                if i != next && m.rows[i].get(col) {
                    m.rows[i].xor_assign(&pivot_row);
                }
            }
            pivots.push(col);
            next += 1;
        }
        Echelon { matrix: m, pivots }
    }

    pub fn rank(&self) -> usize {
        // forward elimination only; cheaper than a full rref
        let mut rows: Vec<BitVector> = self.rows.iter().filter(|r| !r.is_zero()).cloned().collect();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(p) = (rank..rows.len()).find(|&i| rows[i].get(col)) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot_row = rows[rank].clone();
            for r in rows.iter_mut().skip(rank + 1) {
                if r.get(col) {
                    r.xor_assign(&pivot_row);
                }
            }
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rank
    }

    pub fn is_right_invertible(&self) -> bool {
        self.rank() == self.rows()
    }

    /// Finds `u` with `u · M = target`.
    ///
    /// Free variables are set to zero, pivots chosen leftmost-first over the
    /// unknowns, so the answer is reproducible when the solution is not unique.
    pub fn solve_right(&self, target: &BitVector) -> Result<BitVector> {
        if target.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: target.len(),
            });
        }
        let unknowns = self.rows();
        // one equation per column of M: (column_j) · u = target_j
        let mut eqs: Vec<BitVector> = (0..self.cols)
            .map(|j| {
                let mut e = BitVector::zeros(unknowns + 1);
                for (i, r) in self.rows.iter().enumerate() {
                    if r.get(j) {
                        e.set(i, true);
                    }
                }
                if target.get(j) {
                    e.set(unknowns, true);
                }
                e
            })
            .collect();
        let mut pivots = Vec::new();
        let mut next = 0;
        for var in 0..unknowns {
            if next == eqs.len() {
                break;
            }
            let Some(p) = (next..eqs.len()).find(|&i| eqs[i].get(var)) else {
                continue;
            };
            eqs.swap(next, p);
            let pivot = eqs[next].clone();
            for (i, e) in eqs.iter_mut().enumerate() {
                if i != next && e.get(var) {
                    e.xor_assign(&pivot);
                }
            }
            pivots.push(var);
            next += 1;
        }
        if eqs[next..].iter().any(|e| e.get(unknowns)) {
            return Err(Error::NoSolution);
        }
        let mut u = BitVector::zeros(unknowns);
        for (row, &var) in pivots.iter().enumerate() {
            if eqs[row].get(unknowns) {
                u.set(var, true);
            }
        }
        Ok(u)
    }

    /// Minimum Hamming weight of a nonzero vector in the row space, by
    /// walking all `2^rows - 1` row combinations in Gray-code order.
    pub fn min_weight_nonzero_rowspan(&self) -> Result<usize> {
        let r = self.rows();
        if r > WEIGHT_ENUMERATION_MAX_ROWS {
            return Err(Error::TooLarge(format!(
                "{r} rows exceeds the enumeration guard of {WEIGHT_ENUMERATION_MAX_ROWS}"
            )));
        }
        if self.is_zero() {
            return Err(Error::RankZero);
        }
        let words: Vec<&[u64]> = self.rows.iter().map(|v| v.words()).collect();
        let width = words_for(self.cols);
        let mut acc = vec![0u64; width];
        let mut best = usize::MAX;
        for step in 1u64..(1u64 << r) {
            let flip = step.trailing_zeros() as usize;
            for (a, b) in acc.iter_mut().zip(words[flip]) {
                *a ^= *b;
            }
            let w: usize = acc.iter().map(|x| x.count_ones() as usize).sum();
            if w != 0 && w < best {
                best = w;
            }
        }
        Ok(best)
    }

    /// Parity-check matrix in canonical form: one row per non-pivot column
    /// `f` of the RREF of `self`, with a single 1 at `f` among the non-pivot
    /// columns. When the pivots are the leading columns this puts an identity
    /// on the trailing `n - rank` columns.
    pub fn parity_check(&self) -> BitMatrix {
        let Echelon { matrix, pivots } = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut h = BitMatrix::zeros(free.len(), self.cols);
        for (hr, &f) in free.iter().enumerate() {
            h.set(hr, f, true);
            for (pr, &p) in pivots.iter().enumerate() {
                if matrix.get(pr, f) {
                    h.set(hr, p, true);
                }
            }
        }
        h
    }

    /// The text fixture format: a `rows cols` header, then one line of
    /// `0`/`1` characters per row.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows(), self.cols);
        for r in &self.rows {
            s.push_str(&r.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<BitMatrix> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("missing header line".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header {header:?}"))))
            .collect::<Result<_>>()?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Parse(format!("header must be `rows cols`, got {header:?}")));
        };
        let mut out = Vec::with_capacity(rows);
        for _ in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse("fewer rows than declared".into()))?;
            let v: BitVector = line.parse()?;
            if v.len() != cols {
                return Err(Error::Parse(format!(
                    "row {line:?} has {} columns, expected {cols}",
                    v.len()
                )));
            }
            out.push(v);
        }
        if lines.next().is_some() {
            return Err(Error::Parse("more rows than declared".into()));
        }
        Ok(BitMatrix { cols, rows: out })
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows(), self.cols)?;
        for r in &self.rows {
            writeln!(f, "  {r}")?;
        }
        Ok(())
    }
}

impl FromStr for BitMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BitMatrix::from_text(s)
    }
}

/// Rank of a small set of column vectors packed in integers.
pub fn rank_u128(vectors: impl IntoIterator<Item = u128>) -> usize {
    let mut basis: Vec<u128> = Vec::new();
    for mut v in vectors {
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}
