//! Repair machinery: correctability, sequential easy repair, parallel
//! `r`-repair, repair-group enumeration and availability by exact
//! disjoint-group packing.
//!
//! Nodes are generator columns. Internally a column is packed into a `u128`
//! (bit `i` = row `i`), which caps the engine at 128 message rows; node sets
//! used by group enumeration and packing are `u128` masks, capping those
//! operations at 128 nodes.
//!
//! A node whose generator column is zero always stores zero. It is restored
//! with an empty helper set and is left out of code-level availability.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::codes::{Family, LinearCode};
use crate::error::{Error, Result};
use crate::gf2::BitMatrix;

/// Upper limit on repair-group sizes for enumeration and packing.
pub const MAX_GROUP_SIZE: usize = 6;
/// Upper limit on code length for exact availability computations.
pub const AVAILABILITY_MAX_N: usize = 48;
/// Upper limit on node count for mask-based operations.
pub const MASK_MAX_N: usize = 128;

pub type NodeMask = u128;

pub fn mask_of(nodes: &[usize]) -> NodeMask {
    nodes.iter().fold(0, |m, &i| m | (1u128 << i))
}

pub fn nodes_of(mask: NodeMask) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut m = mask;
    while m != 0 {
        out.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    out
}

/// Partition of `0..n` into erased and live nodes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ErasurePattern {
    n: usize,
    erased: Vec<usize>,
}

impl ErasurePattern {
    pub fn new(n: usize, erased: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut erased: Vec<usize> = erased.into_iter().collect();
        erased.sort_unstable();
        erased.dedup();
        if let Some(&bad) = erased.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, n });
        }
        Ok(Self { n, erased })
    }

    pub fn none(n: usize) -> Self {
        Self { n, erased: Vec::new() }
    }

    pub fn from_mask(n: usize, mask: NodeMask) -> Self {
        Self {
            n,
            erased: nodes_of(mask),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn erased(&self) -> &[usize] {
        &self.erased
    }

    pub fn live(&self) -> Vec<usize> {
        (0..self.n).filter(|i| self.erased.binary_search(i).is_err()).collect()
    }

    pub fn is_erased(&self, i: usize) -> bool {
        self.erased.binary_search(&i).is_ok()
    }

    pub fn len(&self) -> usize {
        self.erased.len()
    }

    pub fn is_empty(&self) -> bool {
        self.erased.is_empty()
    }

    pub fn mask(&self) -> NodeMask {
        assert!(self.n <= MASK_MAX_N);
        mask_of(&self.erased)
    }
}

impl fmt::Display for ErasurePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list: Vec<String> = self.erased.iter().map(usize::to_string).collect();
        write!(f, "n={} erased={{{}}}", self.n, list.join(","))
    }
}

/// Helpers whose columns XOR to the target column. Helpers are sorted and
/// linearly independent, so no proper subset also reaches the target.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RepairGroup {
    pub target: usize,
    pub helpers: Vec<usize>,
}

impl RepairGroup {
    pub fn size(&self) -> usize {
        self.helpers.len()
    }

    pub fn mask(&self) -> NodeMask {
        mask_of(&self.helpers)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepairStep {
    pub order: usize,
    pub target: usize,
    pub helpers: Vec<usize>,
}

impl RepairStep {
    /// XOR operations needed to rebuild the target (zero for a copy).
    pub fn xor_count(&self) -> usize {
        self.helpers.len().saturating_sub(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanMode {
    Sequential,
    Parallel {
        r: usize,
    },
    /// Targets rebuilt by decoding the message and re-encoding.
    Reencode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepairPlan {
    pub mode: PlanMode,
    pub steps: Vec<RepairStep>,
}

impl RepairPlan {
    pub fn empty(mode: PlanMode) -> Self {
        Self {
            mode,
            steps: Vec::new(),
        }
    }

    /// Largest helper count over all steps.
    pub fn r_bound(&self) -> usize {
        self.steps.iter().map(|s| s.helpers.len()).max().unwrap_or(0)
    }

    pub fn xor_count(&self) -> usize {
        self.steps.iter().map(RepairStep::xor_count).sum()
    }

    pub fn targets(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.target).collect()
    }

    /// Runs the plan over byte symbols. `symbols[i]` is `None` for an erased
    /// node; every step target is filled in.
    pub fn replay(&self, symbols: &mut [Option<Vec<u8>>], symbol_len: usize) -> Result<()> {
        if self.mode == PlanMode::Reencode {
            return Err(Error::InvalidBound("re-encode plans carry no XOR recipe".into()));
        }
        let frozen: Vec<bool> = symbols.iter().map(Option::is_some).collect();
        for step in &self.steps {
            let mut acc = vec![0u8; symbol_len];
            for &h in &step.helpers {
                if let PlanMode::Parallel { .. } = self.mode {
                    if !frozen[h] {
                        return Err(Error::NotCorrectable);
                    }
                }
                let src = symbols[h].as_ref().ok_or(Error::NotCorrectable)?;
                for (a, b) in acc.iter_mut().zip(src) {
                    *a ^= *b;
                }
            }
            symbols[step.target] = Some(acc);
        }
        Ok(())
    }
}

impl fmt::Display for RepairPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            PlanMode::Sequential => writeln!(f, "# mode: sequential")?,
            PlanMode::Parallel { r } => writeln!(f, "# mode: parallel r={r}")?,
            PlanMode::Reencode => writeln!(f, "# mode: reencode")?,
        }
        for s in &self.steps {
            if self.mode == PlanMode::Reencode {
                writeln!(f, "repair {} <- decode", s.target)?;
            } else if s.helpers.is_empty() {
                writeln!(f, "repair {} <- zero", s.target)?;
            } else {
                let hs: Vec<String> = s.helpers.iter().map(usize::to_string).collect();
                writeln!(f, "repair {} <- {}", s.target, hs.join("+"))?;
            }
        }
        Ok(())
    }
}

impl FromStr for RepairPlan {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = |l: &str| Error::Parse(format!("bad plan line {l:?}"));
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| bad(""))?;
        let mode = match header.strip_prefix("# mode: ") {
            Some("sequential") => PlanMode::Sequential,
            Some("reencode") => PlanMode::Reencode,
            Some(rest) => {
                let r = rest
                    .strip_prefix("parallel r=")
                    .and_then(|r| r.parse().ok())
                    .ok_or_else(|| bad(header))?;
                PlanMode::Parallel { r }
            }
            None => return Err(bad(header)),
        };
        let mut steps = Vec::new();
        for (order, line) in lines.enumerate() {
            let rest = line.strip_prefix("repair ").ok_or_else(|| bad(line))?;
            let (t, hs) = rest.split_once(" <- ").ok_or_else(|| bad(line))?;
            let target = t.parse().map_err(|_| bad(line))?;
            let helpers = match hs {
                "zero" | "decode" => Vec::new(),
                _ => hs
                    .split('+')
                    .map(|h| h.parse().map_err(|_| bad(line)))
                    .collect::<Result<_>>()?,
            };
            steps.push(RepairStep { order, target, helpers });
        }
        Ok(RepairPlan { mode, steps })
    }
}

/// Why a plan could not be completed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepairFailure {
    /// Steps that did succeed before the search stalled.
    pub partial: RepairPlan,
    /// Nodes still erased.
    pub residual: ErasurePattern,
    pub correctable: bool,
    /// Set when the pattern was correctable and the code's family is known to
    /// have the Easy Repair Property: the failure is a counterexample.
    pub claim_violated: bool,
}

/// Column value to node indices, ascending.
#[derive(Clone, Debug)]
enum ColumnIndex {
    Dense(Vec<Vec<u32>>),
    Sparse(HashMap<u128, Vec<u32>>),
}

impl ColumnIndex {
    fn build(k: usize, columns: &[u128]) -> Self {
        if k <= 16 {
            let mut table = vec![Vec::new(); 1 << k];
            for (i, &c) in columns.iter().enumerate() {
                table[c as usize].push(i as u32);
            }
            ColumnIndex::Dense(table)
        } else {
            let mut map: HashMap<u128, Vec<u32>> = HashMap::new();
            for (i, &c) in columns.iter().enumerate() {
                map.entry(c).or_default().push(i as u32);
            }
            ColumnIndex::Sparse(map)
        }
    }

    fn get(&self, value: u128) -> &[u32] {
        match self {
            ColumnIndex::Dense(t) => t.get(value as usize).map_or(&[], Vec::as_slice),
            ColumnIndex::Sparse(m) => m.get(&value).map_or(&[], Vec::as_slice),
        }
    }
}

/// A code prepared for fast repair queries.
#[derive(Clone, Debug)]
pub struct RepairEngine {
    family: Family,
    k: usize,
    columns: Vec<u128>,
    index: ColumnIndex,
}

impl RepairEngine {
    pub fn new(code: &LinearCode) -> Result<Self> {
        Self::from_generator(code.family(), &code.generator)
    }

    pub fn from_generator(family: Family, generator: &BitMatrix) -> Result<Self> {
        let k = generator.rows();
        if k > 128 {
            return Err(Error::TooLarge(format!(
                "{k} message rows; the repair engine supports 128"
            )));
        }
        let columns: Vec<u128> = generator
            .columns()
            .iter()
            .map(|c| c.to_u128().expect("k <= 128"))
            .collect();
        let index = ColumnIndex::build(k, &columns);
        Ok(Self {
            family,
            k,
            columns,
            index,
        })
    }

    pub fn n(&self) -> usize {
        self.columns.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn column(&self, i: usize) -> u128 {
        self.columns[i]
    }

    pub fn is_zero_node(&self, i: usize) -> bool {
        self.columns[i] == 0
    }

    fn check(&self, pattern: &ErasurePattern) -> Result<()> {
        if pattern.n() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: pattern.n(),
            });
        }
        Ok(())
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange { index: i, n: self.n() });
        }
        Ok(())
    }

    /// Live columns have full rank `k`.
    pub fn is_correctable(&self, pattern: &ErasurePattern) -> Result<bool> {
        self.check(pattern)?;
        Ok(self.live_rank(|i| !pattern.is_erased(i)) == self.k)
    }

    pub fn is_correctable_mask(&self, erased: NodeMask) -> bool {
        self.live_rank(|i| erased >> i & 1 == 0) == self.k
    }

    fn live_rank(&self, live: impl Fn(usize) -> bool) -> usize {
        // xor basis indexed by leading bit
        let mut basis = [0u128; 128];
        let mut rank = 0;
        for (i, &c) in self.columns.iter().enumerate() {
            if !live(i) {
                continue;
            }
            let mut v = c;
            while v != 0 {
                let top = 127 - v.leading_zeros() as usize;
                if basis[top] == 0 {
                    basis[top] = v;
                    rank += 1;
                    if rank == self.k {
                        return rank;
                    }
                    break;
                }
                v ^= basis[top];
            }
        }
        rank
    }

    /// Helpers (at most two) for `target` drawn from `available`, or `None`.
    /// A zero column needs no helpers; a replica beats a pair.
    fn easy_helpers(&self, target: usize, available: &[bool]) -> Option<Vec<usize>> {
        let t = self.columns[target];
        if t == 0 {
            return Some(Vec::new());
        }
        let first_available = |value: u128, skip: usize| {
            self.index
                .get(value)
                .iter()
                .map(|&i| i as usize)
                .find(|&i| i != target && i != skip && available[i])
        };
        if let Some(r) = first_available(t, target) {
            return Some(vec![r]);
        }
        for (j, &cj) in self.columns.iter().enumerate() {
            if j == target || !available[j] || cj == 0 {
                continue;
            }
            if let Some(m) = first_available(t ^ cj, j) {
                let mut h = vec![j, m];
                h.sort_unstable();
                return Some(h);
            }
        }
        None
    }

    pub fn find_easy_repairable(&self, pattern: &ErasurePattern) -> Result<Option<RepairStep>> {
        self.check(pattern)?;
        let available: Vec<bool> = (0..self.n()).map(|i| !pattern.is_erased(i)).collect();
        Ok(pattern.erased().iter().find_map(|&t| {
            self.easy_helpers(t, &available).map(|helpers| RepairStep {
                order: 0,
                target: t,
                helpers,
            })
        }))
    }

    /// Greedy sequential easy repair: repeatedly rebuild the lowest-indexed
    /// erased node that has a replica or a pair among the available nodes
    /// (live or already rebuilt), restarting the scan after every step.
    pub fn easy_repair_plan(&self, pattern: &ErasurePattern) -> Result<std::result::Result<RepairPlan, RepairFailure>> {
        self.check(pattern)?;
        let mut available: Vec<bool> = (0..self.n()).map(|i| !pattern.is_erased(i)).collect();
        let mut remaining: Vec<usize> = pattern.erased().to_vec();
        let mut plan = RepairPlan::empty(PlanMode::Sequential);
        while !remaining.is_empty() {
            let hit = remaining
                .iter()
                .enumerate()
                .find_map(|(pos, &t)| self.easy_helpers(t, &available).map(|h| (pos, t, h)));
            let Some((pos, target, helpers)) = hit else {
                let residual = ErasurePattern::new(self.n(), remaining.iter().copied())?;
                let correctable = self.is_correctable(pattern)?;
                return Ok(Err(RepairFailure {
                    partial: plan,
                    residual,
                    correctable,
                    claim_violated: correctable && self.family.claims_easy_repair(),
                }));
            };
            available[target] = true;
            remaining.remove(pos);
            plan.steps.push(RepairStep {
                order: plan.steps.len(),
                target,
                helpers,
            });
        }
        Ok(Ok(plan))
    }

    /// Same verdict as [`Self::easy_repair_plan`] without building the plan.
    pub fn easy_repairs_fully(&self, erased: NodeMask) -> bool {
        let mut available: Vec<bool> = (0..self.n()).map(|i| erased >> i & 1 == 0).collect();
        let mut remaining = nodes_of(erased);
        while !remaining.is_empty() {
            let Some(pos) = remaining
                .iter()
                .position(|&t| self.easy_helpers(t, &available).is_some())
            else {
                return false;
            };
            available[remaining.remove(pos)] = true;
        }
        true
    }

    /// Smallest, then lexicographically first, group of at most `r` helpers
    /// taken from `live` that XORs to `target`.
    fn first_live_group(&self, target: usize, live: &[bool], r: usize) -> Option<Vec<usize>> {
        let t = self.columns[target];
        if t == 0 {
            return Some(Vec::new());
        }
        let mut chosen = Vec::with_capacity(r);
        (1..=r).find_map(|size| self.search_live(target, t, live, size, 0, 0, &mut chosen))
    }

    #[allow(clippy::too_many_arguments)]
    fn search_live(
        &self,
        target: usize,
        t: u128,
        live: &[bool],
        size: usize,
        start: usize,
        acc: u128,
        chosen: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        if chosen.len() + 1 == size {
            let last = self
                .index
                .get(t ^ acc)
                .iter()
                .map(|&i| i as usize)
                .find(|&i| i >= start && i != target && live[i])?;
            let mut out = chosen.clone();
            out.push(last);
            return Some(out);
        }
        for j in start..self.n() {
            if j == target || !live[j] || self.columns[j] == 0 {
                continue;
            }
            chosen.push(j);
            let found = self.search_live(target, t, live, size, j + 1, acc ^ self.columns[j], chosen);
            chosen.pop();
            if found.is_some() {
                return found;
            }
        }
        None
    }

    /// Every erased node independently gets a group of at most `r` live
    /// helpers; no step relies on another step's output.
    pub fn parallel_repair_plan(
        &self,
        pattern: &ErasurePattern,
        r: usize,
    ) -> Result<std::result::Result<RepairPlan, RepairFailure>> {
        self.check(pattern)?;
        if r == 0 {
            return Err(Error::InvalidBound("r must be at least 1".into()));
        }
        let live: Vec<bool> = (0..self.n()).map(|i| !pattern.is_erased(i)).collect();
        let mut plan = RepairPlan::empty(PlanMode::Parallel { r });
        let mut stuck = Vec::new();
        for &t in pattern.erased() {
            match self.first_live_group(t, &live, r) {
                Some(helpers) => plan.steps.push(RepairStep {
                    order: plan.steps.len(),
                    target: t,
                    helpers,
                }),
                None => stuck.push(t),
            }
        }
        if stuck.is_empty() {
            return Ok(Ok(plan));
        }
        let correctable = self.is_correctable(pattern)?;
        Ok(Err(RepairFailure {
            partial: plan,
            residual: ErasurePattern::new(self.n(), stuck)?,
            correctable,
            claim_violated: false,
        }))
    }

    /// All minimal repair groups for `target` with at most `max_size`
    /// helpers, ordered by size and then lexicographically.
    pub fn enumerate_repair_groups(&self, target: usize, max_size: usize) -> Result<Vec<RepairGroup>> {
        self.check_node(target)?;
        if max_size == 0 || max_size > MAX_GROUP_SIZE {
            return Err(Error::InvalidBound(format!(
                "group size bound must be in 1..={MAX_GROUP_SIZE}, got {max_size}"
            )));
        }
        let t = self.columns[target];
        let mut out = Vec::new();
        if t == 0 {
            return Ok(out);
        }
        let mut chosen = Vec::with_capacity(max_size);
        let mut basis = Vec::with_capacity(max_size);
        for size in 1..=max_size {
            self.collect_groups(target, t, size, 0, 0, &mut chosen, &mut basis, &mut out);
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn collect_groups(
        &self,
        target: usize,
        t: u128,
        size: usize,
        start: usize,
        acc: u128,
        chosen: &mut Vec<usize>,
        basis: &mut Vec<u128>,
        out: &mut Vec<RepairGroup>,
    ) {
        // a group containing a subset that spans the target is not minimal
        if reduce(t, basis) == 0 {
            return;
        }
        if chosen.len() + 1 == size {
            for &i in self.index.get(t ^ acc) {
                let i = i as usize;
                if i >= start && i != target {
                    let mut helpers = chosen.clone();
                    helpers.push(i);
                    out.push(RepairGroup { target, helpers });
                }
            }
            return;
        }
        for j in start..self.n() {
            if j == target {
                continue;
            }
            let reduced = reduce(self.columns[j], basis);
            if reduced == 0 {
                continue;
            }
            chosen.push(j);
            basis.push(reduced);
            self.collect_groups(target, t, size, j + 1, acc ^ self.columns[j], chosen, basis, out);
            basis.pop();
            chosen.pop();
        }
    }

    /// Minimum helper count over the groups of `target`, searching sizes up
    /// to [`MAX_GROUP_SIZE`]. Zero for a zero column.
    pub fn min_group_size(&self, target: usize) -> Result<usize> {
        self.check_node(target)?;
        if self.columns[target] == 0 {
            return Ok(0);
        }
        let live = vec![true; self.n()];
        self.first_live_group(target, &live, MAX_GROUP_SIZE)
            .map(|g| g.len())
            .ok_or(Error::Unrepairable(target))
    }
}

/// Reduces `v` against a list of independent vectors kept in echelon form
/// by insertion order (each entry already reduced by its predecessors).
fn reduce(mut v: u128, basis: &[u128]) -> u128 {
    for &b in basis {
        let top = 127 - b.leading_zeros();
        if v >> top & 1 == 1 {
            v ^= b;
        }
    }
    v
}

/// Precomputed minimal groups of bounded size for every node, for sweeps
/// that test many patterns against one code.
#[derive(Clone, Debug)]
pub struct GroupIndex {
    n: usize,
    r: usize,
    zero: Vec<bool>,
    groups: Vec<Vec<NodeMask>>,
}

impl GroupIndex {
    pub fn new(engine: &RepairEngine, r: usize) -> Result<Self> {
        let n = engine.n();
        if n > MASK_MAX_N {
            return Err(Error::TooLarge(format!("{n} nodes; group index supports {MASK_MAX_N}")));
        }
        let groups = (0..n)
            .map(|t| {
                engine
                    .enumerate_repair_groups(t, r)
                    .map(|gs| gs.iter().map(RepairGroup::mask).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            r,
            zero: (0..n).map(|i| engine.is_zero_node(i)).collect(),
            groups,
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn groups(&self, target: usize) -> &[NodeMask] {
        &self.groups[target]
    }

    /// True when every erased node has a group of live helpers.
    pub fn parallel_repairable(&self, erased: NodeMask) -> bool {
        self.parallel_repairable_within(erased, self.r)
    }

    /// Like [`parallel_repairable`](Self::parallel_repairable) with groups
    /// further capped at `r` helpers.
    pub fn parallel_repairable_within(&self, erased: NodeMask, r: usize) -> bool {
        let mut m = erased;
        while m != 0 {
            let t = m.trailing_zeros() as usize;
            m &= m - 1;
            if !self.zero[t]
                && !self.groups[t]
                    .iter()
                    .any(|&g| g & erased == 0 && g.count_ones() as usize <= r)
            {
                return false;
            }
        }
        true
    }
}

/// Result of a disjoint-group packing search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packing {
    pub count: usize,
    pub groups: Vec<RepairGroup>,
    /// False when the search stopped at its node budget; `count` is then a
    /// lower bound attained by `groups`.
    pub exact: bool,
}

/// Maximum set of pairwise-disjoint groups, by branch and bound.
///
/// Candidates are visited in lexicographic order of their helper lists, so
/// with an unlimited budget the returned witness is the lexicographically
/// smallest maximum packing.
pub fn pack_disjoint_groups(groups: &[RepairGroup], budget: Option<u64>) -> Packing {
    let mut sorted: Vec<&RepairGroup> = groups.iter().collect();
    sorted.sort_by(|a, b| a.helpers.cmp(&b.helpers));
    sorted.dedup_by(|a, b| a.helpers == b.helpers);
    let masks: Vec<NodeMask> = sorted.iter().map(|g| g.mask()).collect();
    let sizes: Vec<u32> = masks.iter().map(|m| m.count_ones()).collect();

    // greedy incumbent: smallest groups first
    let mut order: Vec<usize> = (0..masks.len()).collect();
    order.sort_by_key(|&i| (sizes[i], i));
    let mut used = 0;
    let mut greedy = Vec::new();
    for i in order {
        if masks[i] & used == 0 {
            used |= masks[i];
            greedy.push(i);
        }
    }
    greedy.sort_unstable();

    let mut search = PackSearch {
        masks: &masks,
        sizes: &sizes,
        best: greedy,
        best_from_dfs: false,
        chosen: Vec::new(),
        visits: 0,
        budget,
        aborted: false,
    };
    search.dfs(0, 0);
    let exact = !search.aborted;
    let best = search.best;
    Packing {
        count: best.len(),
        groups: best.iter().map(|&i| sorted[i].clone()).collect(),
        exact,
    }
}

struct PackSearch<'a> {
    masks: &'a [NodeMask],
    sizes: &'a [u32],
    best: Vec<usize>,
    best_from_dfs: bool,
    chosen: Vec<usize>,
    visits: u64,
    budget: Option<u64>,
    aborted: bool,
}

impl PackSearch<'_> {
    fn upper_bound(&self, start: usize, used: NodeMask) -> usize {
        let mut sizes = Vec::new();
        let mut union = 0u128;
        for i in start..self.masks.len() {
            if self.masks[i] & used == 0 {
                sizes.push(self.sizes[i]);
                union |= self.masks[i];
            }
        }
        sizes.sort_unstable();
        let mut room = union.count_ones();
        let mut fit = 0;
        for s in sizes {
            if s > room {
                break;
            }
            room -= s;
            fit += 1;
        }
        fit
    }

    fn dfs(&mut self, start: usize, used: NodeMask) {
        if self.aborted {
            return;
        }
        self.visits += 1;
        if self.budget.is_some_and(|b| self.visits > b) {
            self.aborted = true;
            return;
        }
        let cur = self.chosen.len();
        if cur > self.best.len() || (cur == self.best.len() && !self.best_from_dfs) {
            self.best = self.chosen.clone();
            self.best_from_dfs = true;
        }
        let bound = cur + self.upper_bound(start, used);
        if bound < self.best.len() || (bound == self.best.len() && self.best_from_dfs) {
            return;
        }
        for i in start..self.masks.len() {
            if self.masks[i] & used != 0 {
                continue;
            }
            self.chosen.push(i);
            self.dfs(i + 1, used | self.masks[i]);
            self.chosen.pop();
            if self.aborted {
                return;
            }
            // the remaining candidates can no longer beat the incumbent
            let rest = cur + self.upper_bound(i + 1, used);
            if rest < self.best.len() || (rest == self.best.len() && self.best_from_dfs) {
                return;
            }
        }
    }
}

/// Per-node availability counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeAvailability {
    pub node: usize,
    /// Zero-column nodes need no helpers and are excluded from `t`.
    pub trivial: bool,
    /// `counts[r - 1]` = max disjoint groups of size at most `r`.
    pub counts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AvailabilityProfile {
    pub r_max: usize,
    pub nodes: Vec<NodeAvailability>,
    /// `(r, t)` for each `r` in `1..=r_max`, `t` the minimum over nodes.
    pub code_level: Vec<(usize, usize)>,
}

impl AvailabilityProfile {
    pub fn t(&self, r: usize) -> usize {
        self.code_level[r - 1].1
    }
}

fn availability_guard(n: usize, max_size: usize) -> Result<()> {
    if n > AVAILABILITY_MAX_N {
        return Err(Error::TooLarge(format!(
            "{n} nodes exceeds the exact availability guard of {AVAILABILITY_MAX_N}"
        )));
    }
    if max_size == 0 || max_size > MAX_GROUP_SIZE {
        return Err(Error::InvalidBound(format!(
            "group size bound must be in 1..={MAX_GROUP_SIZE}, got {max_size}"
        )));
    }
    Ok(())
}

// Entry points over a `LinearCode`.

pub fn is_correctable(code: &LinearCode, pattern: &ErasurePattern) -> Result<bool> {
    RepairEngine::new(code)?.is_correctable(pattern)
}

/// Correctability through the parity-check route: the erased columns of `H`
/// are linearly independent.
pub fn is_correctable_via_parity(code: &LinearCode, pattern: &ErasurePattern) -> Result<bool> {
    if pattern.n() != code.n() {
        return Err(Error::DimensionMismatch {
            expected: code.n(),
            actual: pattern.n(),
        });
    }
    let h_hat = code.parity_check().select_columns(pattern.erased());
    Ok(h_hat.transpose().is_right_invertible())
}

pub fn find_easy_repairable(code: &LinearCode, pattern: &ErasurePattern) -> Result<Option<RepairStep>> {
    RepairEngine::new(code)?.find_easy_repairable(pattern)
}

pub fn easy_repair_plan(
    code: &LinearCode,
    pattern: &ErasurePattern,
) -> Result<std::result::Result<RepairPlan, RepairFailure>> {
    RepairEngine::new(code)?.easy_repair_plan(pattern)
}

pub fn parallel_repair_plan(
    code: &LinearCode,
    pattern: &ErasurePattern,
    r: usize,
) -> Result<std::result::Result<RepairPlan, RepairFailure>> {
    RepairEngine::new(code)?.parallel_repair_plan(pattern, r)
}

pub fn enumerate_repair_groups(code: &LinearCode, target: usize, max_size: usize) -> Result<Vec<RepairGroup>> {
    RepairEngine::new(code)?.enumerate_repair_groups(target, max_size)
}

pub fn max_disjoint_groups(code: &LinearCode, target: usize, max_size: usize) -> Result<Packing> {
    availability_guard(code.n(), max_size)?;
    let engine = RepairEngine::new(code)?;
    let groups = engine.enumerate_repair_groups(target, max_size)?;
    Ok(pack_disjoint_groups(&groups, None))
}

pub fn availability_profile(code: &LinearCode, r_max: usize) -> Result<AvailabilityProfile> {
    availability_guard(code.n(), r_max)?;
    let engine = RepairEngine::new(code)?;
    let mut nodes = Vec::with_capacity(code.n());
    for node in 0..code.n() {
        let trivial = engine.is_zero_node(node);
        let all = engine.enumerate_repair_groups(node, r_max)?;
        let counts = (1..=r_max)
            .map(|r| {
                let capped: Vec<RepairGroup> = all.iter().filter(|g| g.size() <= r).cloned().collect();
                pack_disjoint_groups(&capped, None).count
            })
            .collect();
        nodes.push(NodeAvailability { node, trivial, counts });
    }
    let code_level = (1..=r_max)
        .map(|r| {
            let t = nodes
                .iter()
                .filter(|a| !a.trivial)
                .map(|a| a.counts[r - 1])
                .min()
                .unwrap_or(0);
            (r, t)
        })
        .collect();
    Ok(AvailabilityProfile {
        r_max,
        nodes,
        code_level,
    })
}

/// Largest over nodes of the smallest repair group.
pub fn locality(code: &LinearCode) -> Result<usize> {
    if code.n() > AVAILABILITY_MAX_N {
        return Err(Error::TooLarge(format!(
            "{} nodes exceeds the locality guard of {AVAILABILITY_MAX_N}",
            code.n()
        )));
    }
    let engine = RepairEngine::new(code)?;
    (0..code.n())
        .map(|i| engine.min_group_size(i))
        .try_fold(0, |acc, s| s.map(|s| acc.max(s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::CodeId;
    use crate::gf2::rank_u128;

    fn code(id: &str) -> LinearCode {
        id.parse::<CodeId>().unwrap().build().unwrap()
    }

    fn pattern(n: usize, erased: &[usize]) -> ErasurePattern {
        ErasurePattern::new(n, erased.iter().copied()).unwrap()
    }

    #[test]
    fn pattern_partition() {
        let p = pattern(7, &[5, 0, 3, 3]);
        assert_eq!(p.erased(), &[0, 3, 5]);
        assert_eq!(p.live(), vec![1, 2, 4, 6]);
        assert!(ErasurePattern::new(3, [3]).is_err());
    }

    #[test]
    fn correctability_examples() {
        let s = code("simplex:3");
        assert!(is_correctable(&s, &pattern(7, &[0, 1, 3, 5])).unwrap());
        assert!(is_correctable(&s, &pattern(7, &[])).unwrap());
        assert!(!is_correctable(&s, &pattern(7, &[0, 1, 2, 3, 4, 5, 6])).unwrap());
        assert!(matches!(
            is_correctable(&s, &pattern(6, &[])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn first_easy_repair_in_worked_example() {
        let s = code("simplex:3");
        let step = find_easy_repairable(&s, &pattern(7, &[0, 1, 3, 5])).unwrap().unwrap();
        assert_eq!((step.target, step.helpers), (0, vec![2, 4]));
        assert!(find_easy_repairable(&s, &pattern(7, &[])).unwrap().is_none());
    }

    #[test]
    fn replication_found_in_c2() {
        for k in 2..=5 {
            let c = code(&format!("c2:{k}"));
            let step = find_easy_repairable(&c, &pattern(c.n(), &[0])).unwrap().unwrap();
            assert_eq!((step.target, step.helpers), (0, vec![1]));
        }
    }

    #[test]
    fn worked_example_plan() {
        let s = code("simplex:3");
        let plan = easy_repair_plan(&s, &pattern(7, &[0, 1, 3, 5])).unwrap().unwrap();
        assert_eq!(plan.steps.len(), 4);
        assert!(plan.r_bound() <= 2);
        let pos = |t: usize| plan.steps.iter().position(|s| s.target == t).unwrap();
        assert!(pos(1) < pos(5), "node 5 depends on node 1 in the worked example");
        // node 5 cannot be the first repair
        assert_ne!(plan.steps[0].target, 5);
        assert_eq!(
            plan.to_string(),
            "# mode: sequential\nrepair 0 <- 2+4\nrepair 1 <- 4+6\nrepair 3 <- 0+1\nrepair 5 <- 0+6\n"
        );
        assert_eq!(plan.to_string().parse::<RepairPlan>().unwrap(), plan);
    }

    #[test]
    fn empty_pattern_gives_empty_plans() {
        let s = code("simplex:3");
        assert!(easy_repair_plan(&s, &pattern(7, &[]))
            .unwrap()
            .unwrap()
            .steps
            .is_empty());
        assert!(parallel_repair_plan(&s, &pattern(7, &[]), 2)
            .unwrap()
            .unwrap()
            .steps
            .is_empty());
    }

    #[test]
    fn uncorrectable_pattern_fails_without_violation() {
        let s = code("simplex:3");
        let f = easy_repair_plan(&s, &pattern(7, &[0, 1, 2, 3, 4, 5]))
            .unwrap()
            .unwrap_err();
        assert!(!f.correctable);
        assert!(!f.claim_violated);
        assert_eq!(f.residual.erased(), &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn exhaustive_simplex3_easy_repair() {
        let s = code("simplex:3");
        let e = RepairEngine::new(&s).unwrap();
        for mask in 0u128..128 {
            let p = ErasurePattern::from_mask(7, mask);
            let ok = e.easy_repair_plan(&p).unwrap().is_ok();
            assert_eq!(ok, e.is_correctable(&p).unwrap(), "{p}");
            assert_eq!(ok, e.easy_repairs_fully(mask));
        }
    }

    #[test]
    fn parity_route_agrees() {
        for id in ["simplex:3", "c1:4", "c2:4", "um2p4", "c0:4:2"] {
            let c = code(id);
            let e = RepairEngine::new(&c).unwrap();
            for mask in 0u128..(1 << c.n()) {
                let p = ErasurePattern::from_mask(c.n(), mask);
                assert_eq!(
                    e.is_correctable(&p).unwrap(),
                    is_correctable_via_parity(&c, &p).unwrap(),
                    "{id} {p}"
                );
            }
        }
    }

    #[test]
    fn parallel_plans_use_live_helpers() {
        let s = code("simplex:3");
        let plan = parallel_repair_plan(&s, &pattern(7, &[0, 3, 6]), 2).unwrap().unwrap();
        assert_eq!(plan.mode, PlanMode::Parallel { r: 2 });
        for st in &plan.steps {
            assert!(st.helpers.iter().all(|h| ![0, 3, 6].contains(h)));
        }
        assert!(plan.to_string().starts_with("# mode: parallel r=2\n"));
        assert!(matches!(
            parallel_repair_plan(&s, &pattern(7, &[0]), 0),
            Err(Error::InvalidBound(_))
        ));
    }

    #[test]
    fn simplex_groups_for_node_zero() {
        let s = code("simplex:3");
        let gs = enumerate_repair_groups(&s, 0, 2).unwrap();
        let helpers: Vec<Vec<usize>> = gs.iter().map(|g| g.helpers.clone()).collect();
        assert_eq!(helpers, vec![vec![1, 3], vec![2, 4], vec![5, 6]]);
        assert!(enumerate_repair_groups(&s, 0, 7).is_err());
        assert!(enumerate_repair_groups(&s, 9, 2).is_err());
    }

    #[test]
    fn groups_are_minimal_and_sum_to_target() {
        for id in ["simplex:3", "c1:4", "c2:4", "um:2:1"] {
            let c = code(id);
            let e = RepairEngine::new(&c).unwrap();
            for t in 0..c.n() {
                for g in e.enumerate_repair_groups(t, 4).unwrap() {
                    assert!(!g.helpers.contains(&t));
                    let sum = g.helpers.iter().fold(0, |a, &h| a ^ e.column(h));
                    assert_eq!(sum, e.column(t));
                    assert_eq!(rank_u128(g.helpers.iter().map(|&h| e.column(h))), g.size());
                }
            }
        }
    }

    #[test]
    fn c2_replica_group() {
        let c = code("c2:4");
        let gs = enumerate_repair_groups(&c, 0, 1).unwrap();
        assert_eq!(
            gs,
            vec![RepairGroup {
                target: 0,
                helpers: vec![1]
            }]
        );
    }

    #[test]
    fn simplex_availability_is_a_perfect_pairing() {
        for k in 2..=4 {
            let s = code(&format!("simplex:{k}"));
            let n = s.n();
            for t in 0..n {
                let p = max_disjoint_groups(&s, t, 2).unwrap();
                assert!(p.exact);
                assert_eq!(p.count, (n - 1) / 2);
                let mut seen = 0u128;
                for g in &p.groups {
                    assert_eq!(g.mask() & seen, 0);
                    seen |= g.mask();
                }
            }
        }
    }

    #[test]
    fn single_node_code_has_no_groups() {
        let s = code("simplex:1");
        assert_eq!(max_disjoint_groups(&s, 0, 2).unwrap().count, 0);
    }

    #[test]
    fn packing_prefers_lexicographically_smallest_witness() {
        let g = |h: &[usize]| RepairGroup {
            target: 9,
            helpers: h.to_vec(),
        };
        let groups = vec![g(&[2, 3]), g(&[0, 1]), g(&[1, 2]), g(&[0, 3])];
        let p = pack_disjoint_groups(&groups, None);
        assert_eq!(p.count, 2);
        assert_eq!(p.groups, vec![g(&[0, 1]), g(&[2, 3])]);
    }

    #[test]
    fn availability_examples() {
        assert_eq!(availability_profile(&code("simplex:3"), 2).unwrap().t(2), 3);
        assert!(availability_profile(&code("c2:3"), 3).unwrap().t(3) >= 2);
        assert!(availability_profile(&code("simplex:6"), 2).is_err());
    }

    #[test]
    fn locality_examples() {
        assert_eq!(locality(&code("simplex:3")).unwrap(), 2);
        for k in 2..=6 {
            assert_eq!(locality(&code(&format!("c2:{k}"))).unwrap(), 2);
            assert_eq!(locality(&code(&format!("c1:{k}"))).unwrap(), 2);
        }
        // an identity block cannot repair anything
        assert!(matches!(locality(&code("c0:4:4")), Err(Error::Unrepairable(0))));
    }

    #[test]
    fn zero_nodes_restore_with_no_helpers() {
        let c = code("um:2:1");
        let n = c.n();
        let plan = easy_repair_plan(&c, &pattern(n, &[n - 1])).unwrap().unwrap();
        assert_eq!(plan.steps[0].helpers, Vec::<usize>::new());
        assert!(plan.to_string().contains("<- zero"));
    }

    #[test]
    fn replay_restores_symbols() {
        let s = code("simplex:3");
        let msg = [0x5au8, 0x3c, 0xff];
        let symbols: Vec<Vec<u8>> = (0..7)
            .map(|j| {
                let col = s.generator.column(j);
                vec![col.ones().fold(0u8, |a, i| a ^ msg[i])]
            })
            .collect();
        let erased = [0, 1, 3, 5];
        let plan = easy_repair_plan(&s, &pattern(7, &erased)).unwrap().unwrap();
        let mut work: Vec<Option<Vec<u8>>> = symbols
            .iter()
            .enumerate()
            .map(|(i, v)| (!erased.contains(&i)).then(|| v.clone()))
            .collect();
        plan.replay(&mut work, 1).unwrap();
        let restored: Vec<Vec<u8>> = work.into_iter().map(Option::unwrap).collect();
        assert_eq!(restored, symbols);
    }
}
