//! Generator matrices for every code family in the crate.
//!
//! Column orders:
//!
//! * simplex: columns sorted by Hamming weight ascending, ties by integer
//!   value descending with row 0 as the most significant bit;
//! * `[I | G~]`: weight-2 columns with support `{i, j}`, `i < j`, in
//!   lexicographic order of `(i, j)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVector};

pub const SIMPLEX_MAX_K: usize = 20;
pub const UM_MAX_BASE_K: usize = 10;

/// Family tag of a [`LinearCode`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Simplex,
    C1,
    C2,
    UmSimplex,
    BlockDiagRepeat,
    TensorUm,
    Um2Prime,
    /// A generator read from a file.
    Custom,
}

impl Family {
    /// The four families known to have the Easy Repair Property.
    pub fn claims_easy_repair(self) -> bool {
        matches!(self, Family::Simplex | Family::C1 | Family::C2 | Family::UmSimplex)
    }
}

/// Which inner block a [`CodeId::BlockDiag`] repeats.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Inner {
    Simplex,
    C1,
}

/// Identifier of a constructible code; also the CLI grammar.
///
/// | id | code |
/// |----|------|
/// | `simplex:k` | simplex `(2^k - 1, k)` |
/// | `c1:k` | `[I_k | G~_k]` |
/// | `c2:k` | the `(2k+1, k)` chain code |
/// | `um:k:s` | UM simplex code over `k`, sliding generator with horizon `s` |
/// | `c0:k:x` | `x` diagonal copies of `simplex(k/x)` |
/// | `c1:k:x` | `x` diagonal copies of `c1(k/x)` |
/// | `umx:k:x` | `G_c(x)` expanded by `simplex(k/x)` |
/// | `um2p4` | the `(9, 4)` code `(G G 0; 0 G G)` |
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CodeId {
    Simplex { k: usize },
    C1 { k: usize },
    C2 { k: usize },
    Um { base_k: usize, s: usize },
    BlockDiag { inner: Inner, k: usize, x: usize },
    Umx { k: usize, x: usize },
    Um2p4,
}

impl CodeId {
    pub fn family(&self) -> Family {
        match self {
            CodeId::Simplex { .. } => Family::Simplex,
            CodeId::C1 { .. } => Family::C1,
            CodeId::C2 { .. } => Family::C2,
            CodeId::Um { .. } => Family::UmSimplex,
            CodeId::BlockDiag { .. } => Family::BlockDiagRepeat,
            CodeId::Umx { .. } => Family::TensorUm,
            CodeId::Um2p4 => Family::Um2Prime,
        }
    }

    pub fn build(&self) -> Result<LinearCode> {
        LinearCode::from_id(*self)
    }
}

impl fmt::Display for CodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeId::Simplex { k } => write!(f, "simplex:{k}"),
            CodeId::C1 { k } => write!(f, "c1:{k}"),
            CodeId::C2 { k } => write!(f, "c2:{k}"),
            CodeId::Um { base_k, s } => write!(f, "um:{base_k}:{s}"),
            CodeId::BlockDiag {
                inner: Inner::Simplex,
                k,
                x,
            } => write!(f, "c0:{k}:{x}"),
            CodeId::BlockDiag { inner: Inner::C1, k, x } => write!(f, "c1:{k}:{x}"),
            CodeId::Umx { k, x } => write!(f, "umx:{k}:{x}"),
            CodeId::Um2p4 => f.write_str("um2p4"),
        }
    }
}

impl FromStr for CodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| -> Result<usize> {
            t.parse()
                .map_err(|_| Error::Parse(format!("bad number {t:?} in code id {s:?}")))
        };
        let id = match parts.as_slice() {
            ["simplex", k] => CodeId::Simplex { k: num(k)? },
            ["c1", k] => CodeId::C1 { k: num(k)? },
            ["c2", k] => CodeId::C2 { k: num(k)? },
            ["um", k, h] => CodeId::Um {
                base_k: num(k)?,
                s: num(h)?,
            },
            ["c0", k, x] => CodeId::BlockDiag {
                inner: Inner::Simplex,
                k: num(k)?,
                x: num(x)?,
            },
            ["c1", k, x] => CodeId::BlockDiag {
                inner: Inner::C1,
                k: num(k)?,
                x: num(x)?,
            },
            ["umx", k, x] => CodeId::Umx { k: num(k)?, x: num(x)? },
            ["um2p4"] => CodeId::Um2p4,
            _ => return Err(Error::Parse(format!("unknown code id {s:?}"))),
        };
        Ok(id)
    }
}

/// A binary block code given by a full-row-rank generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCode {
    pub id: CodeId,
    pub generator: BitMatrix,
}

impl LinearCode {
    pub fn from_id(id: CodeId) -> Result<LinearCode> {
        let generator = match id {
            CodeId::Simplex { k } => simplex_generator(k)?,
            CodeId::C1 { k } => c1_generator(k)?,
            CodeId::C2 { k } => c2_generator(k)?,
            CodeId::Um { base_k, s } => sliding_generator(&um_simplex(base_k)?, s),
            CodeId::BlockDiag { inner, k, x } => {
                let part = split_dimension(k, x)?;
                let block = match inner {
                    Inner::Simplex => simplex_generator(part)?,
                    Inner::C1 => c1_generator(part)?,
                };
                block_diag_repeat(&block, x)
            }
            CodeId::Umx { k, x } => {
                if x < 2 {
                    return Err(Error::InvalidDimension(format!("umx needs x >= 2, got {x}")));
                }
                let part = split_dimension(k, x)?;
                tensor_expand(&c2_generator(x)?, &simplex_generator(part)?)
            }
            CodeId::Um2p4 => um2prime_generator(),
        };
        Ok(LinearCode { id, generator })
    }

    pub fn k(&self) -> usize {
        self.generator.rows()
    }

    pub fn n(&self) -> usize {
        self.generator.cols()
    }

    pub fn family(&self) -> Family {
        self.id.family()
    }

    pub fn parity_check(&self) -> BitMatrix {
        self.generator.parity_check()
    }

    pub fn encode(&self, message: &BitVector) -> Result<BitVector> {
        self.generator.left_mul(message)
    }
}

fn split_dimension(k: usize, x: usize) -> Result<usize> {
    if x == 0 || k == 0 || !k.is_multiple_of(x) {
        return Err(Error::InvalidDimension(format!("{x} does not divide {k}")));
    }
    Ok(k / x)
}

/// A unit-memory convolutional code `G(D) = G0 + G1 D`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvCode {
    pub base_k: usize,
    pub g0: BitMatrix,
    pub g1: BitMatrix,
}

impl ConvCode {
    pub fn new(g0: BitMatrix, g1: BitMatrix) -> Result<ConvCode> {
        if g0.rows() != g1.rows() || g0.cols() != g1.cols() {
            return Err(Error::DimensionMismatch {
                expected: g0.cols(),
                actual: g1.cols(),
            });
        }
        if g1.is_zero() {
            return Err(Error::InvalidDimension("G1 must be nonzero for unit memory".into()));
        }
        Ok(ConvCode {
            base_k: g0.rows(),
            g0,
            g1,
        })
    }

    pub fn n_block(&self) -> usize {
        self.g0.cols()
    }

    pub fn memory(&self) -> usize {
        1
    }
}

fn check_k(k: usize, min: usize, max: usize, what: &str) -> Result<()> {
    if k < min || k > max {
        return Err(Error::InvalidDimension(format!(
            "{what} needs {min} <= k <= {max}, got {k}"
        )));
    }
    Ok(())
}

/// Nonzero vectors of `F_2^k` in canonical simplex order, as integers whose
/// most significant of `k` bits is row 0.
fn simplex_column_values(k: usize) -> Vec<u32> {
    let mut values: Vec<u32> = (1..(1u32 << k)).collect();
    values.sort_by(|a, b| a.count_ones().cmp(&b.count_ones()).then(b.cmp(a)));
    values
}

pub fn simplex_generator(k: usize) -> Result<BitMatrix> {
    check_k(k, 1, SIMPLEX_MAX_K, "simplex")?;
    let values = simplex_column_values(k);
    let mut g = BitMatrix::zeros(k, values.len());
    for (j, v) in values.iter().enumerate() {
        for i in 0..k {
            if (v >> (k - 1 - i)) & 1 == 1 {
                g.set(i, j, true);
            }
        }
    }
    Ok(g)
}

pub fn simplex_parity_check(k: usize) -> Result<BitMatrix> {
    Ok(simplex_generator(k)?.parity_check())
}

/// `G~_k`: all weight-2 columns of `F_2^k`.
pub fn weight_two_columns(k: usize) -> BitMatrix {
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let mut m = BitMatrix::zeros(k, pairs.len());
    for (c, &(i, j)) in pairs.iter().enumerate() {
        m.set(i, c, true);
        m.set(j, c, true);
    }
    m
}

pub fn c1_generator(k: usize) -> Result<BitMatrix> {
    check_k(k, 2, SIMPLEX_MAX_K, "c1")?;
    BitMatrix::identity(k).hconcat(&weight_two_columns(k))
}

/// `(e1, e1, e1+e2, e2, e2+e3, e3, ..., e_{k-1}+e_k, e_k, e_k)`.
pub fn c2_generator(k: usize) -> Result<BitMatrix> {
    if k < 2 {
        return Err(Error::InvalidDimension(format!("c2 needs k >= 2, got {k}")));
    }
    let mut g = BitMatrix::zeros(k, 2 * k + 1);
    g.set(0, 0, true);
    for i in 0..k {
        // row i covers columns 2i, 2i+1, 2i+2
        for c in 2 * i..2 * i + 3 {
            g.set(i, c, true);
        }
    }
    Ok(g)
}

pub fn um_simplex(base_k: usize) -> Result<ConvCode> {
    check_k(base_k, 1, UM_MAX_BASE_K, "um simplex")?;
    let g = simplex_generator(base_k)?;
    let zero = BitMatrix::zeros(g.rows(), g.cols());
    ConvCode::new(g.hconcat(&g)?, g.hconcat(&zero)?)
}

/// Banded matrix with `G0 G1` on each block row, shifted one block per row:
/// `(s+1)k x (s+2)n`.
pub fn sliding_generator(code: &ConvCode, s: usize) -> BitMatrix {
    let k = code.base_k;
    let n = code.n_block();
    let mut m = BitMatrix::zeros((s + 1) * k, (s + 2) * n);
    for t in 0..=s {
        m.place(t * k, t * n, &code.g0);
        m.place(t * k, (t + 1) * n, &code.g1);
    }
    m
}

/// Replaces every 1 of `outer` by `inner` and every 0 by a zero block.
pub fn tensor_expand(outer: &BitMatrix, inner: &BitMatrix) -> BitMatrix {
    let (r, c) = (inner.rows(), inner.cols());
    let mut m = BitMatrix::zeros(outer.rows() * r, outer.cols() * c);
    for i in 0..outer.rows() {
        for j in outer.row(i).ones() {
            m.place(i * r, j * c, inner);
        }
    }
    m
}

pub fn block_diag_repeat(inner: &BitMatrix, x: usize) -> BitMatrix {
    tensor_expand(&BitMatrix::identity(x), inner)
}

/// `(G G 0; 0 G G)` with `G = simplex_generator(2)`.
pub fn um2prime_generator() -> BitMatrix {
    let outer = BitMatrix::from_bit_rows(&[&[1, 1, 0], &[0, 1, 1]]);
    tensor_expand(&outer, &simplex_generator(2).expect("k = 2 is valid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols_of(m: &BitMatrix) -> Vec<String> {
        m.columns().iter().map(|c| c.to_string()).collect()
    }

    #[test]
    fn simplex_k3_matches_worked_example() {
        let g = simplex_generator(3).unwrap();
        assert_eq!(g.to_text(), "3 7\n1001101\n0101011\n0010111\n");
        let h = simplex_parity_check(3).unwrap();
        assert_eq!(h.to_text(), "4 7\n1101000\n1010100\n0110010\n1110001\n");
    }

    #[test]
    fn small_simplex_orders() {
        assert_eq!(simplex_generator(1).unwrap().to_text(), "1 1\n1\n");
        assert_eq!(cols_of(&simplex_generator(2).unwrap()), ["10", "01", "11"]);
        let h1 = simplex_parity_check(1).unwrap();
        assert_eq!((h1.rows(), h1.cols()), (0, 1));
        assert!(simplex_generator(0).is_err());
        assert!(simplex_generator(21).is_err());
    }

    #[test]
    fn parity_check_annihilates_generator() {
        for k in 1..=6 {
            let g = simplex_generator(k).unwrap();
            let h = simplex_parity_check(k).unwrap();
            assert_eq!(h.rows(), g.cols() - k);
            assert!(g.mul(&h.transpose()).unwrap().is_zero());
            // identity on the trailing n - k columns
            let tail: Vec<usize> = (k..g.cols()).collect();
            assert_eq!(h.select_columns(&tail), BitMatrix::identity(g.cols() - k));
        }
    }

    #[test]
    fn simplex_columns_closed_under_sums() {
        for k in 2..=6 {
            let cols = simplex_generator(k).unwrap().columns();
            let set: std::collections::HashSet<_> = cols.iter().cloned().collect();
            assert_eq!(set.len(), cols.len());
            for a in &cols {
                for b in &cols {
                    if a != b {
                        assert!(set.contains(&a.xor(b)));
                    }
                }
            }
        }
    }

    #[test]
    fn c1_shapes() {
        assert_eq!(cols_of(&c1_generator(2).unwrap()), ["10", "01", "11"]);
        let g4 = c1_generator(4).unwrap();
        assert_eq!((g4.rows(), g4.cols()), (4, 10));
        for k in 2..=10 {
            assert_eq!(c1_generator(k).unwrap().cols(), k + k * (k - 1) / 2);
        }
        assert!(c1_generator(1).is_err());
    }

    #[test]
    fn weight_two_block_follows_recursion() {
        // G~_k = (1..1 0..0 ; I_{k-1} G~_{k-1})
        for k in 3..=8 {
            let big = weight_two_columns(k);
            let small = weight_two_columns(k - 1);
            for j in 0..big.cols() {
                assert_eq!(big.get(0, j), j < k - 1);
            }
            let mut lower = BitMatrix::zeros(k - 1, big.cols());
            for i in 1..k {
                for j in 0..big.cols() {
                    lower.set(i - 1, j, big.get(i, j));
                }
            }
            let expected = BitMatrix::identity(k - 1).hconcat(&small).unwrap();
            assert_eq!(lower, expected);
        }
    }

    #[test]
    fn weight_two_rowspan_weight_bound() {
        for k in 2..=10 {
            let w = weight_two_columns(k).min_weight_nonzero_rowspan().unwrap();
            assert_eq!(w, k - 1, "k = {k}");
        }
    }

    #[test]
    fn c2_shapes() {
        assert_eq!(cols_of(&c2_generator(2).unwrap()), ["10", "10", "11", "01", "01"]);
        let g = c2_generator(4).unwrap();
        assert_eq!((g.rows(), g.cols()), (4, 9));
        assert_eq!(
            cols_of(&g),
            ["1000", "1000", "1100", "0100", "0110", "0010", "0011", "0001", "0001"]
        );
        for c in g.columns() {
            assert!((1..=2).contains(&c.weight()));
        }
        assert!(c2_generator(1).is_err());
    }

    #[test]
    fn um_simplex_blocks() {
        let c = um_simplex(2).unwrap();
        assert_eq!((c.g0.rows(), c.g0.cols()), (2, 6));
        assert_eq!(c.g1.select_columns(&[3, 4, 5]), BitMatrix::zeros(2, 3));
        assert_eq!(c.g1.select_columns(&[0, 1, 2]), simplex_generator(2).unwrap());
        assert_eq!(um_simplex(3).unwrap().n_block(), 14);
        assert!(um_simplex(11).is_err());
    }

    #[test]
    fn sliding_generator_staircase() {
        let c = um_simplex(2).unwrap();
        let s0 = sliding_generator(&c, 0);
        assert_eq!(s0, c.g0.hconcat(&c.g1).unwrap());
        let s1 = sliding_generator(&c, 1);
        assert_eq!((s1.rows(), s1.cols()), (4, 18));
        let g = simplex_generator(2).unwrap();
        let z = BitMatrix::zeros(2, 3);
        // block rows (G G G 0 0 0) and (0 0 G G G 0)
        let layout = [[1, 1, 1, 0, 0, 0], [0, 0, 1, 1, 1, 0]];
        for (bi, row) in layout.iter().enumerate() {
            for (bj, &on) in row.iter().enumerate() {
                let mut blk = BitMatrix::zeros(2, 3);
                for i in 0..2 {
                    for j in 0..3 {
                        blk.set(i, j, s1.get(bi * 2 + i, bj * 3 + j));
                    }
                }
                assert_eq!(blk, if on == 1 { g.clone() } else { z.clone() });
            }
        }
    }

    #[test]
    fn sliding_generator_is_convolution() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let c = um_simplex(3).unwrap();
        let s = 4;
        let gt = sliding_generator(&c, s);
        for _ in 0..20 {
            let blocks: Vec<BitVector> = (0..=s).map(|_| BitVector::from_u128(3, rng.gen_range(0..8))).collect();
            let total = blocks.iter().skip(1).fold(blocks[0].clone(), |a, b| a.concat(b));
            let c_total = gt.left_mul(&total).unwrap();
            for t in 0..=s + 1 {
                let mut ct = BitVector::zeros(c.n_block());
                if t <= s {
                    ct.xor_assign(&c.g0.left_mul(&blocks[t]).unwrap());
                }
                if t >= 1 {
                    ct.xor_assign(&c.g1.left_mul(&blocks[t - 1]).unwrap());
                }
                let idx: Vec<usize> = (t * c.n_block()..(t + 1) * c.n_block()).collect();
                assert_eq!(c_total.select(&idx), ct);
            }
        }
    }

    #[test]
    fn tensor_expansion_matches_sliding_generator() {
        for x in 1..=3 {
            for part in 2..=3 {
                let g = simplex_generator(part).unwrap();
                let outer = if x == 1 {
                    BitMatrix::from_bit_rows(&[&[1, 1, 1]])
                } else {
                    c2_generator(x).unwrap()
                };
                let expanded = tensor_expand(&outer, &g);
                let conv = um_simplex(part).unwrap();
                let sliding = sliding_generator(&conv, x - 1);
                let keep: Vec<usize> = (0..sliding.cols() - conv.n_block() / 2).collect();
                assert_eq!(expanded, sliding.select_columns(&keep), "x={x} part={part}");
            }
        }
    }

    #[test]
    fn tensor_identities() {
        let g = simplex_generator(3).unwrap();
        assert_eq!(tensor_expand(&BitMatrix::identity(1), &g), g);
        assert_eq!(block_diag_repeat(&g, 1), g);
        let d = block_diag_repeat(&g, 2);
        assert_eq!((d.rows(), d.cols()), (6, 14));
        assert_eq!(d, tensor_expand(&BitMatrix::identity(2), &g));
    }

    #[test]
    fn um2prime_shape() {
        let g = um2prime_generator();
        assert_eq!((g.rows(), g.cols()), (4, 9));
        assert_eq!(g.rank(), 4);
    }

    #[test]
    fn family_lengths() {
        let cases: &[(&str, usize, usize)] = &[
            ("simplex:4", 4, 15),
            ("c1:5", 5, 15),
            ("c2:6", 6, 13),
            ("um:2:2", 6, 24),
            ("um:3:1", 6, 42),
            ("c0:6:2", 6, 14),
            ("c1:6:2", 6, 12),
            ("umx:8:2", 8, 75),
            ("umx:6:3", 6, 21),
            ("um2p4", 4, 9),
        ];
        for &(id, k, n) in cases {
            let code: CodeId = id.parse().unwrap();
            assert_eq!(code.to_string(), id);
            let c = code.build().unwrap();
            assert_eq!((c.k(), c.n()), (k, n), "{id}");
            assert!(c.generator.is_right_invertible(), "{id} not full rank");
        }
    }

    #[test]
    fn tensor_um_length_formula() {
        for (k, x) in [(4, 2), (6, 2), (6, 3), (8, 4), (8, 8), (4, 4)] {
            let c = CodeId::Umx { k, x }.build().unwrap();
            assert_eq!(c.n(), (2 * x + 1) * ((1 << (k / x)) - 1));
        }
    }

    #[test]
    fn bad_ids() {
        for bad in ["simplex", "c9:3", "um:2", "c0:5:2", "umx:4:1", "simplex:x"] {
            let parsed = bad.parse::<CodeId>().and_then(|id| id.build());
            assert!(parsed.is_err(), "{bad}");
        }
    }
}
