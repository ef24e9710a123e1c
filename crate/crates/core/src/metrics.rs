//! Distance oracles, property sweeps, comparison tables and Monte Carlo
//! repair statistics.
//!
//! Sweeps are split across workers by pattern or trial index (worker `w`
//! takes every index congruent to `w`). Aggregates are sums and minima, and a
//! reported counterexample is always the one with the smallest index, so
//! results do not depend on the worker count.

use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codes::{sliding_generator, CodeId, ConvCode, Inner, LinearCode};
use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, WEIGHT_ENUMERATION_MAX_ROWS};
use crate::repair::{
    pack_disjoint_groups, ErasurePattern, GroupIndex, NodeMask, RepairEngine, RepairFailure, RepairGroup, MASK_MAX_N,
};

/// Most patterns an exhaustive sweep will visit.
pub const EXHAUSTIVE_MAX_PATTERNS: u128 = 1 << 26;
/// Message bits enumerated by the convolutional distance oracles.
pub const CONV_MAX_MESSAGE_BITS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceMethod {
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceReport {
    pub code: String,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub method: DistanceMethod,
    pub codewords_examined: u64,
}

pub fn min_distance(code: &LinearCode) -> Result<DistanceReport> {
    let d = code.generator.min_weight_nonzero_rowspan()?;
    Ok(DistanceReport {
        code: code.id.to_string(),
        n: code.n(),
        k: code.k(),
        d,
        method: DistanceMethod::Exhaustive,
        codewords_examined: (1u64 << code.k()) - 1,
    })
}

/// Minimum weight of `u · m` over messages whose leading `lead` bits are not
/// all zero.
fn min_weight_with_nonzero_lead(m: &BitMatrix, lead: usize) -> u64 {
    let rows = m.rows();
    let words: Vec<Vec<u64>> = m
        .row_vectors()
        .iter()
        .map(|r| {
            let mut w = vec![0u64; r.len().div_ceil(64)];
            for i in r.ones() {
                w[i / 64] |= 1 << (i % 64);
            }
            w
        })
        .collect();
    let width = m.cols().div_ceil(64);
    let lead_mask = (1u64 << lead) - 1;
    let mut acc = vec![0u64; width];
    let mut best = u64::MAX;
    for step in 1u64..(1u64 << rows) {
        let flip = step.trailing_zeros() as usize;
        for (a, b) in acc.iter_mut().zip(&words[flip]) {
            *a ^= *b;
        }
        let gray = step ^ (step >> 1);
        if gray & lead_mask == 0 {
            continue;
        }
        let w: u64 = acc.iter().map(|x| x.count_ones() as u64).sum();
        best = best.min(w);
    }
    best
}

/// `j`-th column distance: minimum weight of the first `j + 1` output blocks
/// over codewords whose first message block is nonzero.
pub fn column_distance(code: &ConvCode, j: usize) -> Result<usize> {
    let bits = code.base_k * (j + 1);
    if bits > CONV_MAX_MESSAGE_BITS {
        return Err(Error::TooLarge(format!(
            "{bits} message bits exceeds {CONV_MAX_MESSAGE_BITS}"
        )));
    }
    let full = sliding_generator(code, j);
    let keep: Vec<usize> = (0..(j + 1) * code.n_block()).collect();
    let truncated = full.select_columns(&keep);
    Ok(min_weight_with_nonzero_lead(&truncated, code.base_k) as usize)
}

/// Exact minimum distance of the block code spanned by the sliding
/// generator with horizon `s`.
pub fn sliding_block_distance(code: &ConvCode, s: usize) -> Result<usize> {
    let bits = code.base_k * (s + 1);
    if bits > CONV_MAX_MESSAGE_BITS {
        return Err(Error::TooLarge(format!(
            "{bits} message bits exceeds {CONV_MAX_MESSAGE_BITS}"
        )));
    }
    debug_assert!(bits <= WEIGHT_ENUMERATION_MAX_ROWS);
    sliding_generator(code, s).min_weight_nonzero_rowspan()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnDistanceReport {
    pub base_k: usize,
    /// `(j, d_j)`, non-decreasing in `j`.
    pub distances: Vec<(usize, usize)>,
    /// `(s, d)` for each horizon the oracle could afford.
    pub sliding: Vec<(usize, usize)>,
    /// Minimum of the sliding-block distances; evidence for `d_free`.
    pub d_free_evidence: usize,
}

/// Column distances up to `j_max` plus sliding-block distances for
/// horizons `0..=4` within the enumeration guard.
pub fn column_distance_report(code: &ConvCode, j_max: usize) -> Result<ColumnDistanceReport> {
    let distances = (0..=j_max)
        .map(|j| column_distance(code, j).map(|d| (j, d)))
        .collect::<Result<Vec<_>>>()?;
    let sliding: Vec<(usize, usize)> = (0..=4)
        .filter(|s| code.base_k * (s + 1) <= CONV_MAX_MESSAGE_BITS)
        .map(|s| sliding_block_distance(code, s).map(|d| (s, d)))
        .collect::<Result<_>>()?;
    let d_free_evidence = sliding.iter().map(|&(_, d)| d).min().unwrap_or(0);
    Ok(ColumnDistanceReport {
        base_k: code.base_k,
        distances,
        sliding,
        d_free_evidence,
    })
}

/// Singleton-like bound for locality `r`: `d <= n - k - ceil(k / r) + 2`.
pub fn singleton_like_bound(n: usize, k: usize, r: usize) -> usize {
    (n + 2).saturating_sub(k + k.div_ceil(r.max(1)))
}

// ----------------------------------------------------------------------------
// Sweeps

/// Which patterns a sweep examines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMode {
    /// Every pattern, optionally capped at `max_erasures`.
    Exhaustive { max_erasures: Option<usize> },
    /// `trials` patterns drawn with per-trial streams of one seed.
    Sampled {
        seed: u64,
        trials: u64,
        max_erasures: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub index: u64,
    pub pattern: ErasurePattern,
    /// Steps completed before the greedy search stalled (easy repair only).
    pub failure: Option<RepairFailure>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub examined: u64,
    /// Patterns that were correctable (easy sweeps) or parallel-repairable
    /// (capacity sweeps).
    pub correctable: u64,
    pub counterexample: Option<Counterexample>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} examined={} hits={}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.examined,
            self.correctable
        )?;
        if let Some(c) = &self.counterexample {
            write!(f, " counterexample=#{} {}", c.index, c.pattern)?;
        }
        Ok(())
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Calls `f(index, mask)` for every `e`-subset of `0..n` in colexicographic
/// order, indices counting from `offset`.
fn for_each_subset(n: usize, e: usize, offset: u64, mut f: impl FnMut(u64, NodeMask)) {
    assert!(n < 128);
    if e > n {
        return;
    }
    if e == 0 {
        f(offset, 0);
        return;
    }
    let limit: u128 = 1u128 << n;
    let mut x: u128 = (1u128 << e) - 1;
    let mut idx = offset;
    while x < limit {
        f(idx, x);
        idx += 1;
        let c = x & x.wrapping_neg();
        let r = x + c;
        x = (((r ^ x) >> 2) / c) | r;
    }
}

fn run_workers<T: Send>(workers: usize, job: impl Fn(usize, usize) -> T + Sync) -> Vec<T> {
    let workers = workers.max(1);
    if workers == 1 {
        return vec![job(0, 1)];
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let job = &job;
                scope.spawn(move || job(w, workers))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize, e: usize) -> NodeMask {
    sample(rng, n, e).into_iter().fold(0, |m, i| m | (1u128 << i))
}

/// Uniform over subsets of `0..n` with at most `cap` elements.
fn random_capped_subset(rng: &mut ChaCha8Rng, n: usize, cap: usize) -> NodeMask {
    if cap >= n {
        let mut m = 0;
        for i in 0..n {
            if rng.gen::<bool>() {
                m |= 1u128 << i;
            }
        }
        return m;
    }
    let total: u128 = (0..=cap).map(|e| binomial(n, e)).sum();
    let mut pick = rng.gen_range(0..total);
    let mut e = 0;
    while pick >= binomial(n, e) {
        pick -= binomial(n, e);
        e += 1;
    }
    random_subset(rng, n, e)
}

fn check_exhaustive(n: usize, sizes: impl Iterator<Item = usize>) -> Result<()> {
    if n >= 128 {
        return Err(Error::TooLarge(format!("{n} nodes for an exhaustive sweep")));
    }
    let total: u128 = sizes.map(|e| binomial(n, e)).sum();
    if total > EXHAUSTIVE_MAX_PATTERNS {
        return Err(Error::TooLarge(format!(
            "{total} patterns exceeds the exhaustive limit of {EXHAUSTIVE_MAX_PATTERNS}"
        )));
    }
    Ok(())
}

#[derive(Default)]
struct Partial {
    examined: u64,
    hits: u64,
    first_bad: Option<(u64, NodeMask)>,
}

fn merge(parts: Vec<Partial>) -> Partial {
    parts.into_iter().fold(Partial::default(), |mut acc, p| {
        acc.examined += p.examined;
        acc.hits += p.hits;
        acc.first_bad = match (acc.first_bad, p.first_bad) {
            (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
            (a, b) => a.or(b),
        };
        acc
    })
}

/// Generic sweep: `check(mask)` returns `(hit, ok)`.
fn sweep(
    n: usize,
    mode: SweepMode,
    exact_size: Option<usize>,
    workers: usize,
    check: impl Fn(NodeMask) -> (bool, bool) + Sync,
) -> Result<Partial> {
    if n > MASK_MAX_N {
        return Err(Error::TooLarge(format!("{n} nodes; sweeps support {MASK_MAX_N}")));
    }
    let parts = match mode {
        SweepMode::Exhaustive { max_erasures } => {
            let sizes: Vec<usize> = match exact_size {
                Some(e) => vec![e],
                None => (0..=max_erasures.unwrap_or(n).min(n)).collect(),
            };
            check_exhaustive(n, sizes.iter().copied())?;
            run_workers(workers, |w, total| {
                let mut part = Partial::default();
                let mut offset = 0u64;
                for &e in &sizes {
                    for_each_subset(n, e, offset, |idx, mask| {
                        if idx % total as u64 != w as u64 {
                            return;
                        }
                        let (hit, ok) = check(mask);
                        part.examined += 1;
                        part.hits += hit as u64;
                        if !ok && part.first_bad.is_none() {
                            part.first_bad = Some((idx, mask));
                        }
                    });
                    offset += binomial(n, e) as u64;
                }
                part
            })
        }
        SweepMode::Sampled {
            seed,
            trials,
            max_erasures,
        } => run_workers(workers, |w, total| {
            let mut part = Partial::default();
            let mut idx = w as u64;
            while idx < trials {
                let mut rng = trial_rng(seed, idx);
                let mask = match exact_size {
                    Some(e) => random_subset(&mut rng, n, e),
                    None => random_capped_subset(&mut rng, n, max_erasures.unwrap_or(n)),
                };
                let (hit, ok) = check(mask);
                part.examined += 1;
                part.hits += hit as u64;
                if !ok && part.first_bad.is_none() {
                    part.first_bad = Some((idx, mask));
                }
                idx += total as u64;
            }
            part
        }),
    };
    Ok(merge(parts))
}

/// Checks that every examined correctable pattern is fully repaired by
/// sequential easy repair.
pub fn verify_easy_repair_property(code: &LinearCode, mode: SweepMode, workers: usize) -> Result<Verdict> {
    verify_easy_repair_engine(&RepairEngine::new(code)?, mode, workers)
}

pub fn verify_easy_repair_engine(engine: &RepairEngine, mode: SweepMode, workers: usize) -> Result<Verdict> {
    let n = engine.n();
    let part = sweep(n, mode, None, workers, |mask| {
        if !engine.is_correctable_mask(mask) {
            return (false, true);
        }
        (true, engine.easy_repairs_fully(mask))
    })?;
    let counterexample = part
        .first_bad
        .map(|(index, mask)| {
            let pattern = ErasurePattern::from_mask(n, mask);
            let failure = engine.easy_repair_plan(&pattern)?.err();
            Ok::<_, Error>(Counterexample {
                index,
                pattern,
                failure,
            })
        })
        .transpose()?;
    Ok(Verdict {
        examined: part.examined,
        correctable: part.hits,
        counterexample,
    })
}

/// Checks that every examined pattern with exactly `erasures` erased nodes
/// admits parallel repair with groups of at most `r` helpers.
pub fn verify_parallel_capacity(
    code: &LinearCode,
    r: usize,
    erasures: usize,
    mode: SweepMode,
    workers: usize,
) -> Result<Verdict> {
    verify_parallel_capacity_engine(&RepairEngine::new(code)?, r, erasures, mode, workers)
}

pub fn verify_parallel_capacity_engine(
    engine: &RepairEngine,
    r: usize,
    erasures: usize,
    mode: SweepMode,
    workers: usize,
) -> Result<Verdict> {
    if r == 0 {
        return Err(Error::InvalidBound("r must be at least 1".into()));
    }
    let n = engine.n();
    if erasures > n {
        return Err(Error::InvalidBound(format!("{erasures} erasures for n = {n}")));
    }
    let index = GroupIndex::new(engine, r)?;
    let part = sweep(n, mode, Some(erasures), workers, |mask| {
        let ok = index.parallel_repairable(mask);
        (ok, ok)
    })?;
    Ok(Verdict {
        examined: part.examined,
        correctable: part.hits,
        counterexample: part.first_bad.map(|(index, mask)| Counterexample {
            index,
            pattern: ErasurePattern::from_mask(n, mask),
            failure: None,
        }),
    })
}

// ----------------------------------------------------------------------------
// Census of disjoint repair groups in a UM simplex code

/// Which half of a time block a node sits in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Half {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensusItem {
    pub item: usize,
    pub time: usize,
    /// `None` covers both halves (time-0 items).
    pub half: Option<Half>,
    pub max_size: usize,
    pub required: usize,
    /// Smallest measured packing over the nodes the item covers.
    pub measured: usize,
    pub exact: bool,
    /// Every witness packing was re-checked: disjoint, size-capped, target
    /// excluded, helpers XOR to the target column.
    pub witnesses_verified: bool,
}

impl CensusItem {
    pub fn holds(&self) -> bool {
        self.witnesses_verified && self.measured >= self.required
    }
}

/// Packing counts for the nine per-node statements about UM simplex codes,
/// measured at time 0 and at time `i`. Packing searches on codes larger
/// than the exact guard run with `budget` node visits.
pub fn um_census(base_k: usize, s: usize, i: usize, budget: Option<u64>) -> Result<Vec<CensusItem>> {
    if i == 0 || i > s + 1 {
        return Err(Error::InvalidBound(format!("time index {i} outside 1..={}", s + 1)));
    }
    let code = CodeId::Um { base_k, s }.build()?;
    let engine = RepairEngine::new(&code)?;
    let half = (1usize << base_k) - 1;
    let block = 2 * half;
    let p = 1usize << (base_k - 1);
    let full = 1usize << base_k;
    let specs: [(usize, usize, Option<Half>, usize, usize); 9] = [
        (1, 0, None, 1, 1),
        (2, 0, None, 2, full - 1),
        (3, i, Some(Half::First), 2, p),
        (4, i, Some(Half::Second), 2, p + 1),
        (5, i, Some(Half::First), 3, full - 1),
        (6, i, Some(Half::Second), 3, full),
        (7, i, Some(Half::First), 4, full),
        (8, i, Some(Half::Second), 4, full + p - 1),
        (9, i, Some(Half::First), 5, full + p - 1),
    ];
    let nodes_for = |time: usize, h: Option<Half>| -> Vec<usize> {
        let base = time * block;
        match h {
            None => (base..base + block).collect(),
            Some(Half::First) => (base..base + half).collect(),
            Some(Half::Second) => (base + half..base + block).collect(),
        }
    };
    let mut out = Vec::new();
    for (item, time, h, max_size, required) in specs {
        let mut measured = usize::MAX;
        let mut exact = true;
        let mut witnesses_verified = true;
        for node in nodes_for(time, h) {
            let groups = engine.enumerate_repair_groups(node, max_size)?;
            let packing = pack_disjoint_groups(&groups, budget);
            measured = measured.min(packing.count);
            exact &= packing.exact;
            witnesses_verified &= witness_ok(&engine, node, max_size, &packing.groups);
        }
        out.push(CensusItem {
            item,
            time,
            half: h,
            max_size,
            required,
            measured,
            exact,
            witnesses_verified,
        });
    }
    Ok(out)
}

fn witness_ok(engine: &RepairEngine, target: usize, max_size: usize, groups: &[RepairGroup]) -> bool {
    let mut used: NodeMask = 1 << target;
    groups.iter().all(|g| {
        let m = g.mask();
        let sum = g.helpers.iter().fold(0u128, |acc, &h| acc ^ engine.column(h));
        let ok = g.target == target && g.helpers.len() <= max_size && m & used == 0 && sum == engine.column(target);
        used |= m;
        ok
    })
}

// ----------------------------------------------------------------------------
// Comparison tables

/// `d / n` kept as a reduced fraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ratio {
    pub num: usize,
    pub den: usize,
}

impl Ratio {
    pub fn new(num: usize, den: usize) -> Self {
        let g = gcd(num, den).max(1);
        Self {
            num: num / g,
            den: den / g,
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComparisonRow {
    pub label: String,
    pub codes: Vec<CodeId>,
    pub n: usize,
    pub d: usize,
    pub ratio: Ratio,
}

/// Listing order for equal lengths.
fn family_rank(id: &CodeId) -> (usize, usize) {
    match *id {
        CodeId::Simplex { .. } => (0, 0),
        CodeId::C1 { .. } => (1, 0),
        CodeId::Um2p4 => (2, 0),
        CodeId::Umx { x, .. } => (3, x),
        CodeId::BlockDiag {
            inner: Inner::Simplex,
            x,
            ..
        } => (4, x),
        CodeId::BlockDiag {
            inner: Inner::C1, x, ..
        } => (5, x),
        _ => (6, 0),
    }
}

fn label(id: &CodeId) -> String {
    match *id {
        CodeId::Simplex { k } => format!("C0({k})"),
        CodeId::C1 { k } => format!("C1({k})"),
        CodeId::Um2p4 => "UM2'(4)".into(),
        CodeId::Umx { k, x } => format!("UM{x}({k})"),
        CodeId::BlockDiag {
            inner: Inner::Simplex,
            k,
            x,
        } => format!("C0({k},{x})"),
        CodeId::BlockDiag { inner: Inner::C1, k, x } => format!("C1({k},{x})"),
        other => other.to_string(),
    }
}

/// Every family of dimension `k`, sorted by length descending. Block-diagonal
/// repeats need inner dimension at least 2; codes with identical generators
/// share one row.
pub fn comparison_table(k: usize) -> Result<Vec<ComparisonRow>> {
    if !(2..=CodeIdLimits::TABLE_MAX_K).contains(&k) {
        return Err(Error::InvalidDimension(format!(
            "table dimension must be in 2..={}, got {k}",
            CodeIdLimits::TABLE_MAX_K
        )));
    }
    let mut ids = vec![CodeId::Simplex { k }, CodeId::C1 { k }];
    if k == 4 {
        ids.push(CodeId::Um2p4);
    }
    for x in (2..=k).filter(|&x| k.is_multiple_of(x)) {
        ids.push(CodeId::Umx { k, x });
        if k / x >= 2 {
            ids.push(CodeId::BlockDiag {
                inner: Inner::Simplex,
                k,
                x,
            });
            ids.push(CodeId::BlockDiag { inner: Inner::C1, k, x });
        }
    }
    ids.sort_by_key(family_rank);
    let mut rows: Vec<(ComparisonRow, BitMatrix)> = Vec::new();
    for id in ids {
        let code = id.build()?;
        if let Some((row, _)) = rows.iter_mut().find(|(_, g)| *g == code.generator) {
            row.label = format!("{}={}", row.label, label(&id));
            row.codes.push(id);
            continue;
        }
        let d = min_distance(&code)?.d;
        rows.push((
            ComparisonRow {
                label: label(&id),
                codes: vec![id],
                n: code.n(),
                d,
                ratio: Ratio::new(d, code.n()),
            },
            code.generator,
        ));
    }
    let mut rows: Vec<ComparisonRow> = rows.into_iter().map(|(r, _)| r).collect();
    // stable: equal lengths keep family order
    rows.sort_by_key(|r| std::cmp::Reverse(r.n));
    Ok(rows)
}

struct CodeIdLimits;

impl CodeIdLimits {
    const TABLE_MAX_K: usize = 12;
}

pub fn table_tsv(rows: &[ComparisonRow]) -> String {
    let mut s = String::from("code\tn\td\td_over_n\n");
    for r in rows {
        s.push_str(&format!("{}\t{}\t{}\t{}\n", r.label, r.n, r.d, r.ratio));
    }
    s
}

pub fn table_text(k: usize, rows: &[ComparisonRow]) -> String {
    let w = rows.iter().map(|r| r.label.len()).max().unwrap_or(4).max(4);
    let mut s = format!("k={k}\n{:<w$}  {:>5}  {:>5}  {:>7}\n", "Code", "n", "d", "d/n");
    for r in rows {
        s.push_str(&format!(
            "{:<w$}  {:>5}  {:>5}  {:>7}\n",
            r.label,
            r.n,
            r.d,
            r.ratio.to_string()
        ));
    }
    s
}

// ----------------------------------------------------------------------------
// Monte Carlo

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ErasureModel {
    /// Exactly this many distinct nodes fail.
    Fixed(usize),
    /// Each node fails independently with this probability.
    PerNode(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub trials: u64,
    pub model: ErasureModel,
    pub seed: u64,
    /// Parallel repair is tallied for every `r` in `1..=r_max`.
    pub r_max: usize,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulationReport {
    pub code: String,
    pub seed: u64,
    pub trials: u64,
    /// `erasure_counts[e]` = trials with exactly `e` erasures.
    pub erasure_counts: Vec<u64>,
    pub correctable: u64,
    pub easy_repaired: u64,
    /// `parallel[r - 1]` = trials where every erased node has an all-live
    /// group of at most `r` helpers.
    pub parallel: Vec<u64>,
    pub repaired_nodes: u64,
    pub xor_ops: u64,
}

impl SimulationReport {
    fn fraction(&self, count: u64) -> f64 {
        count as f64 / self.trials as f64
    }

    pub fn correctable_fraction(&self) -> f64 {
        self.fraction(self.correctable)
    }

    pub fn easy_repaired_fraction(&self) -> f64 {
        self.fraction(self.easy_repaired)
    }

    pub fn parallel_fraction(&self, r: usize) -> f64 {
        self.fraction(self.parallel[r - 1])
    }

    /// Mean XOR operations per node rebuilt by easy repair.
    pub fn mean_xor_per_node(&self) -> f64 {
        if self.repaired_nodes == 0 {
            0.0
        } else {
            self.xor_ops as f64 / self.repaired_nodes as f64
        }
    }
}

impl fmt::Display for SimulationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "code: {}", self.code)?;
        writeln!(f, "seed: {}", self.seed)?;
        writeln!(f, "trials: {}", self.trials)?;
        let hist: Vec<String> = self
            .erasure_counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(e, c)| format!("{e}:{c}"))
            .collect();
        writeln!(f, "erasures: {}", hist.join(" "))?;
        writeln!(f, "correctable: {:.6}", self.correctable_fraction())?;
        writeln!(f, "easy_repaired: {:.6}", self.easy_repaired_fraction())?;
        for r in 1..=self.parallel.len() {
            writeln!(f, "parallel_r{r}: {:.6}", self.parallel_fraction(r))?;
        }
        writeln!(f, "mean_xor_per_node: {:.6}", self.mean_xor_per_node())
    }
}

pub fn monte_carlo_repair(code: &LinearCode, config: &SimulationConfig) -> Result<SimulationReport> {
    let n = code.n();
    if config.trials == 0 {
        return Err(Error::InvalidBound("at least one trial is required".into()));
    }
    if n > MASK_MAX_N {
        return Err(Error::TooLarge(format!("{n} nodes; simulation supports {MASK_MAX_N}")));
    }
    match config.model {
        ErasureModel::Fixed(e) if e > n => return Err(Error::InvalidBound(format!("{e} erasures for n = {n}"))),
        ErasureModel::PerNode(p) if !(0.0..=1.0).contains(&p) => {
            return Err(Error::InvalidBound(format!("probability {p} outside [0, 1]")))
        }
        _ => {}
    }
    let engine = RepairEngine::new(code)?;
    let index = if config.r_max > 0 {
        Some(GroupIndex::new(&engine, config.r_max)?)
    } else {
        None
    };
    let r_max = config.r_max;
    let parts = run_workers(config.workers, |w, total| {
        let mut rep = SimulationReport {
            code: code.id.to_string(),
            seed: config.seed,
            trials: 0,
            erasure_counts: vec![0; n + 1],
            correctable: 0,
            easy_repaired: 0,
            parallel: vec![0; r_max],
            repaired_nodes: 0,
            xor_ops: 0,
        };
        let mut t = w as u64;
        while t < config.trials {
            let mut rng = trial_rng(config.seed, t);
            let mask = match config.model {
                ErasureModel::Fixed(e) => random_subset(&mut rng, n, e),
                ErasureModel::PerNode(p) => (0..n).fold(0, |m, i| if rng.gen_bool(p) { m | (1u128 << i) } else { m }),
            };
            rep.trials += 1;
            rep.erasure_counts[mask.count_ones() as usize] += 1;
            let pattern = ErasurePattern::from_mask(n, mask);
            if engine.is_correctable_mask(mask) {
                rep.correctable += 1;
            }
            if let Ok(Ok(plan)) = engine.easy_repair_plan(&pattern) {
                rep.easy_repaired += 1;
                rep.repaired_nodes += plan.steps.len() as u64;
                rep.xor_ops += plan.xor_count() as u64;
            }
            if let Some(index) = &index {
                for r in 1..=r_max {
                    if index.parallel_repairable_within(mask, r) {
                        rep.parallel[r - 1] += 1;
                    }
                }
            }
            t += total as u64;
        }
        rep
    });
    let mut iter = parts.into_iter();
    let mut acc = iter.next().expect("at least one worker");
    for p in iter {
        acc.trials += p.trials;
        for (a, b) in acc.erasure_counts.iter_mut().zip(&p.erasure_counts) {
            *a += b;
        }
        acc.correctable += p.correctable;
        acc.easy_repaired += p.easy_repaired;
        for (a, b) in acc.parallel.iter_mut().zip(&p.parallel) {
            *a += b;
        }
        acc.repaired_nodes += p.repaired_nodes;
        acc.xor_ops += p.xor_ops;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::um_simplex;

    fn code(id: &str) -> LinearCode {
        id.parse::<CodeId>().unwrap().build().unwrap()
    }

    #[test]
    fn subset_enumeration_counts() {
        for n in [1usize, 5, 9] {
            for e in 0..=n {
                let mut count = 0u128;
                let mut last = None;
                for_each_subset(n, e, 0, |idx, mask| {
                    assert_eq!(mask.count_ones() as usize, e);
                    assert!(mask < 1 << n);
                    assert_eq!(idx as u128, count);
                    if let Some(prev) = last {
                        assert!(mask > prev);
                    }
                    last = Some(mask);
                    count += 1;
                });
                assert_eq!(count, binomial(n, e));
            }
        }
    }

    #[test]
    fn simplex_distances() {
        for k in 2..=6 {
            assert_eq!(min_distance(&code(&format!("simplex:{k}"))).unwrap().d, 1 << (k - 1));
        }
    }

    #[test]
    fn column_distances_um2() {
        let c = um_simplex(2).unwrap();
        assert_eq!(column_distance(&c, 0).unwrap(), 4);
        for j in 1..=3 {
            assert_eq!(column_distance(&c, j).unwrap(), 6);
        }
        assert!(column_distance(&c, 10).is_err());
    }

    #[test]
    fn report_is_monotone() {
        let r = column_distance_report(&um_simplex(2).unwrap(), 4).unwrap();
        assert!(r.distances.windows(2).all(|w| w[0].1 <= w[1].1));
        assert_eq!(r.d_free_evidence, 6);
    }

    #[test]
    fn empty_pattern_set_passes() {
        let v = verify_easy_repair_property(&code("simplex:3"), SweepMode::Exhaustive { max_erasures: Some(0) }, 1)
            .unwrap();
        assert!(v.passed());
        assert_eq!(v.examined, 1);
        let v =
            verify_parallel_capacity(&code("um:2:3"), 2, 0, SweepMode::Exhaustive { max_erasures: None }, 1).unwrap();
        assert!(v.passed());
    }

    #[test]
    fn parallel_capacity_counterexample_is_reported() {
        // seven erasures in simplex:3 leave nothing
        let v = verify_parallel_capacity(
            &code("simplex:3"),
            2,
            4,
            SweepMode::Exhaustive { max_erasures: None },
            2,
        )
        .unwrap();
        assert!(!v.passed());
        let c = v.counterexample.unwrap();
        assert_eq!(c.pattern.len(), 4);
    }

    #[test]
    fn exhaustive_guard() {
        let big = code("um:3:3");
        assert!(matches!(
            verify_easy_repair_property(&big, SweepMode::Exhaustive { max_erasures: None }, 1),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn locality_bound_holds_for_small_codes() {
        for id in ["simplex:3", "simplex:4", "c1:4", "c2:5", "um2p4", "c0:4:2"] {
            let c = code(id);
            let r = crate::repair::locality(&c).unwrap();
            let d = min_distance(&c).unwrap().d;
            assert!(d <= singleton_like_bound(c.n(), c.k(), r), "{id}");
        }
        assert_eq!(singleton_like_bound(7, 3, 2), 4);
    }

    #[test]
    fn ratios_reduce() {
        assert_eq!(Ratio::new(6, 21).to_string(), "2/7");
        assert_eq!(Ratio::new(8, 16).to_string(), "1/2");
    }

    #[test]
    fn monte_carlo_examples() {
        let s = code("simplex:3");
        let cfg = SimulationConfig {
            trials: 500,
            model: ErasureModel::Fixed(3),
            seed: 17,
            r_max: 2,
            workers: 1,
        };
        let rep = monte_carlo_repair(&s, &cfg).unwrap();
        assert_eq!(rep.correctable_fraction(), 1.0);
        assert_eq!(rep.parallel_fraction(2), 1.0);
        assert_eq!(rep.erasure_counts[3], 500);

        let zero = SimulationConfig {
            model: ErasureModel::Fixed(0),
            ..cfg.clone()
        };
        let rep = monte_carlo_repair(&s, &zero).unwrap();
        assert_eq!(rep.easy_repaired_fraction(), 1.0);
        assert_eq!(rep.parallel_fraction(1), 1.0);
        assert_eq!(rep.mean_xor_per_node(), 0.0);

        let again = monte_carlo_repair(&s, &cfg).unwrap();
        assert_eq!(again, monte_carlo_repair(&s, &cfg).unwrap());
        let four = SimulationConfig { workers: 4, ..cfg };
        assert_eq!(monte_carlo_repair(&s, &four).unwrap(), again);
    }
}
