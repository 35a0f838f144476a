//! Coloring-set solvers: a budgeted brute-force oracle and the
//! block-decomposition / guarded equi-join pipeline.
//!
//! The block solver partitions the crossing relations into contiguous
//! blocks, solves each block's local subsystem by enumeration over the
//! scalars that actually occur there (crossing outputs are functions of
//! their inputs, so each relation either forces an arc or filters), and
//! merges partial-solution tables with hash equi-joins on the shared
//! scalar coordinates. Every merge is guarded: both inputs non-empty and
//! a non-empty shared-key set. An empty join *result* with healthy guards
//! is a legal outcome (the system is inconsistent) and is recorded with
//! provenance rather than treated as an error.

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::diagram::{ArcId, QuandlePresentation, Relation};
use crate::invariants;
use crate::quandle::{FiniteQuandle, QuandleKind};

/// Default ceiling on brute-force assignment counts.
pub const DEFAULT_BUDGET: u128 = 100_000_000;
/// Intermediate tables beyond this row count trigger a warning.
pub const JOIN_ROW_WARN: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("enumeration budget exceeded: {needed} assignments > budget {budget}; use the block solver")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("join guard violated: {0}")]
    Guard(#[from] JoinError),
    #[error("residual check failed: coloring {coloring} violates crossing {crossing}")]
    ResidualFailure { coloring: usize, crossing: usize },
    #[error("block plan error: {0}")]
    Plan(#[from] PlanError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JoinError {
    #[error("guard (i) violated: {side} input table is empty")]
    EmptyInput { side: &'static str },
    #[error("guard (ii) violated: the tables share no bound variables")]
    NoSharedKeys,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("block size {0} outside the supported range 2..=6")]
    BadBlockSize(u8),
    #[error("presentation has no relations; nothing to plan")]
    NoRelations,
}

/// A scalar variable: one coordinate slot of one arc. Symplectic targets
/// use two slots per arc, single-modulus targets one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId {
    pub arc: usize,
    pub slot: u8,
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}.{}", self.arc, self.slot)
    }
}

/// How arc elements decompose into scalar slots for the target quandle.
#[derive(Debug, Clone, Copy)]
pub struct ScalarLayout {
    pub slots_per_arc: u8,
    pub modulus: u16,
}

impl ScalarLayout {
    pub fn for_quandle(q: &FiniteQuandle) -> ScalarLayout {
        fn base_kind(kind: &QuandleKind) -> &QuandleKind {
            match kind {
                QuandleKind::Subquandle { parent, .. } => base_kind(parent),
                other => other,
            }
        }
        match base_kind(q.kind()) {
            QuandleKind::Symplectic(form) if matches!(q.kind(), QuandleKind::Symplectic(_)) => {
                ScalarLayout {
                    slots_per_arc: 2,
                    modulus: form.prime().get() as u16,
                }
            }
            // Subquandles drop elements, so indices no longer split into
            // coordinates; fall back to one slot carrying the element index.
            _ => ScalarLayout {
                slots_per_arc: 1,
                modulus: q.len() as u16,
            },
        }
    }

    pub fn scalars_of(&self, element: u16) -> [u16; 2] {
        if self.slots_per_arc == 2 {
            [element / self.modulus, element % self.modulus]
        } else {
            [element, 0]
        }
    }

    pub fn element_of(&self, scalars: &[u16]) -> u16 {
        if self.slots_per_arc == 2 {
            scalars[0] * self.modulus + scalars[1]
        } else {
            scalars[0]
        }
    }
}

/// Set of partial colorings over a fixed, canonically ordered variable set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialSolutionTable {
    vars: Vec<VarId>,
    rows: Vec<Vec<u16>>,
}

impl PartialSolutionTable {
    pub fn new(vars: Vec<VarId>, mut rows: Vec<Vec<u16>>) -> Self {
        debug_assert!(vars.windows(2).all(|w| w[0] < w[1]), "vars must be sorted");
        rows.sort_unstable();
        rows.dedup();
        PartialSolutionTable { vars, rows }
    }

    /// The unit table: no variables, one empty row. Neutral for joins.
    pub fn unit() -> Self {
        PartialSolutionTable {
            vars: Vec::new(),
            rows: vec![Vec::new()],
        }
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn rows(&self) -> &[Vec<u16>] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = self.vars.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Keep only pairs of partial solutions that agree on every shared
/// variable, unified over the union of both variable sets.
///
/// Guards: both inputs non-empty and a non-empty shared-key set; violations
/// are structured errors, never a silent empty result. An empty *output*
/// with healthy guards is legal and flows back to `hom_count = 0`.
pub fn equi_join(
    a: &PartialSolutionTable,
    b: &PartialSolutionTable,
) -> Result<PartialSolutionTable, JoinError> {
    if a.is_empty() {
        return Err(JoinError::EmptyInput { side: "left" });
    }
    if b.is_empty() {
        return Err(JoinError::EmptyInput { side: "right" });
    }
    let shared: Vec<VarId> = a
        .vars
        .iter()
        .copied()
        .filter(|v| b.vars.binary_search(v).is_ok())
        .collect();
    if shared.is_empty() {
        return Err(JoinError::NoSharedKeys);
    }
    Ok(cross_merge(a, b, &shared))
}

/// Cartesian product of tables with disjoint variable sets. Only the
/// planner's explicit disconnected-component fallback may use this.
fn cartesian_join(a: &PartialSolutionTable, b: &PartialSolutionTable) -> PartialSolutionTable {
    cross_merge(a, b, &[])
}

fn cross_merge(
    a: &PartialSolutionTable,
    b: &PartialSolutionTable,
    shared: &[VarId],
) -> PartialSolutionTable {
    let a_key_idx: Vec<usize> = shared
        .iter()
        .map(|v| a.vars.binary_search(v).unwrap())
        .collect();
    let b_key_idx: Vec<usize> = shared
        .iter()
        .map(|v| b.vars.binary_search(v).unwrap())
        .collect();

    let mut out_vars: Vec<VarId> = a.vars.clone();
    let b_extra: Vec<usize> = (0..b.vars.len())
        .filter(|&i| !shared.contains(&b.vars[i]))
        .collect();
    out_vars.extend(b_extra.iter().map(|&i| b.vars[i]));
    let mut order: Vec<usize> = (0..out_vars.len()).collect();
    order.sort_by_key(|&i| out_vars[i]);
    let sorted_vars: Vec<VarId> = order.iter().map(|&i| out_vars[i]).collect();

    let mut index: HashMap<Vec<u16>, Vec<usize>> = HashMap::new();
    for (ri, row) in a.rows.iter().enumerate() {
        let key: Vec<u16> = a_key_idx.iter().map(|&i| row[i]).collect();
        index.entry(key).or_default().push(ri);
    }
    let mut rows = Vec::new();
    for brow in &b.rows {
        let key: Vec<u16> = b_key_idx.iter().map(|&i| brow[i]).collect();
        if let Some(matches) = index.get(&key) {
            for &ai in matches {
                let arow = &a.rows[ai];
                let mut merged: Vec<u16> = Vec::with_capacity(out_vars.len());
                merged.extend_from_slice(arow);
                merged.extend(b_extra.iter().map(|&i| brow[i]));
                let reordered: Vec<u16> = order.iter().map(|&i| merged[i]).collect();
                rows.push(reordered);
            }
        }
    }
    PartialSolutionTable::new(sorted_vars, rows)
}

/// Binary merge tree over block indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JoinTree {
    Leaf(usize),
    Join {
        left: Box<JoinTree>,
        right: Box<JoinTree>,
        /// set only on the disconnected-components fallback
        cartesian: bool,
    },
}

impl JoinTree {
    fn count_merges(&self) -> (usize, usize) {
        match self {
            JoinTree::Leaf(_) => (0, 0),
            JoinTree::Join {
                left,
                right,
                cartesian,
            } => {
                let (lm, lc) = left.count_merges();
                let (rm, rc) = right.count_merges();
                (lm + rm + 1, lc + rc + usize::from(*cartesian))
            }
        }
    }
}

/// Contiguous crossing ranges plus a merge order whose non-fallback joins
/// all share at least one bound variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPlan {
    pub blocks: Vec<(usize, usize)>, // (start, len) into the relation list
    pub tree: JoinTree,
    pub block_size: u8,
}

impl BlockPlan {
    pub fn merge_count(&self) -> usize {
        self.tree.count_merges().0
    }

    pub fn cartesian_merges(&self) -> usize {
        self.tree.count_merges().1
    }
}

fn arcs_of_block(rels: &[Relation]) -> BTreeSet<usize> {
    let mut set = BTreeSet::new();
    for r in rels {
        set.insert(r.input.0);
        set.insert(r.over.0);
        set.insert(r.out.0);
    }
    set
}

/// Partition the crossings into contiguous blocks of at most `block_size`
/// (file order is the serialized topology) and build a greedy join order
/// that maximizes shared bound variables at each merge. Disconnected
/// groups fall back to explicit cartesian merges.
pub fn make_block_plan(
    pres: &QuandlePresentation,
    block_size: u8,
) -> Result<BlockPlan, PlanError> {
    if !(2..=6).contains(&block_size) {
        return Err(PlanError::BadBlockSize(block_size));
    }
    let total = pres.relations.len();
    if total == 0 {
        return Err(PlanError::NoRelations);
    }
    let bs = block_size as usize;
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    while start < total {
        let len = bs.min(total - start);
        blocks.push((start, len));
        start += len;
    }
    // avoid a trailing 1-crossing block when a neighbor can donate
    if blocks.len() >= 2 && blocks.last().unwrap().1 == 1 {
        let last = blocks.pop().unwrap();
        let prev = blocks.pop().unwrap();
        let combined = prev.1 + last.1;
        blocks.push((prev.0, combined / 2));
        blocks.push((prev.0 + combined / 2, combined - combined / 2));
    }

    let mut items: Vec<(JoinTree, BTreeSet<usize>)> = blocks
        .iter()
        .enumerate()
        .map(|(i, &(s, l))| {
            (
                JoinTree::Leaf(i),
                arcs_of_block(&pres.relations[s..s + l]),
            )
        })
        .collect();
    while items.len() > 1 {
        let mut best: Option<(usize, usize, usize)> = None; // (shared, i, j) maximizing shared
        for i in 0..items.len() {
            for j in (i + 1)..items.len() {
                let shared = items[i].1.intersection(&items[j].1).count();
                let candidate = (shared, i, j);
                best = match best {
                    None => Some(candidate),
                    Some((s, bi, bj)) => {
                        if shared > s {
                            Some(candidate)
                        } else {
                            Some((s, bi, bj))
                        }
                    }
                };
            }
        }
        let (shared, i, j) = best.unwrap();
        let (rt, rv) = items.remove(j);
        let (lt, lv) = items.remove(i);
        let merged_vars: BTreeSet<usize> = lv.union(&rv).copied().collect();
        items.insert(
            i,
            (
                JoinTree::Join {
                    left: Box::new(lt),
                    right: Box::new(rt),
                    cartesian: shared == 0,
                },
                merged_vars,
            ),
        );
    }
    let tree = items.pop().unwrap().0;
    Ok(BlockPlan {
        blocks,
        tree,
        block_size,
    })
}

/// Solve one block's local subsystem by enumerating the scalars that are
/// free at first use and propagating forced crossing outputs; relations
/// whose output is already bound act as filters.
pub fn solve_block(
    pres: &QuandlePresentation,
    q: &FiniteQuandle,
    block: (usize, usize),
    budget: u128,
) -> Result<PartialSolutionTable, SolveError> {
    let rels = &pres.relations[block.0..block.0 + block.1];
    let layout = ScalarLayout::for_quandle(q);

    let mut known: BTreeSet<usize> = BTreeSet::new();
    let mut enum_arcs: Vec<usize> = Vec::new();
    for r in rels {
        for arc in [r.input.0, r.over.0] {
            if known.insert(arc) {
                enum_arcs.push(arc);
            }
        }
        known.insert(r.out.0);
    }
    let all_arcs: Vec<usize> = known.iter().copied().collect();

    let needed = (q.len() as u128)
        .checked_pow(enum_arcs.len() as u32)
        .unwrap_or(u128::MAX);
    if needed > budget {
        return Err(SolveError::BudgetExceeded {
            needed,
            budget,
        });
    }

    let mut vars: Vec<VarId> = Vec::new();
    for &arc in &all_arcs {
        for slot in 0..layout.slots_per_arc {
            vars.push(VarId { arc, slot });
        }
    }

    let n = q.len() as u16;
    let mut rows: Vec<Vec<u16>> = Vec::new();
    let mut assignment: Vec<u16> = vec![0; enum_arcs.len()];
    let mut values: HashMap<usize, u16> = HashMap::new();
    'outer: loop {
        values.clear();
        for (i, &arc) in enum_arcs.iter().enumerate() {
            values.insert(arc, assignment[i]);
        }
        let mut consistent = true;
        for r in rels {
            let input = values[&r.input.0];
            let over = values[&r.over.0];
            let result = q.apply(input, over, r.sign);
            match values.get(&r.out.0) {
                Some(&bound) if bound != result => {
                    consistent = false;
                    break;
                }
                Some(_) => {}
                None => {
                    values.insert(r.out.0, result);
                }
            }
        }
        if consistent {
            let mut row: Vec<u16> = Vec::with_capacity(vars.len());
            for &arc in &all_arcs {
                let scalars = layout.scalars_of(values[&arc]);
                row.extend_from_slice(&scalars[..layout.slots_per_arc as usize]);
            }
            rows.push(row);
        }
        // odometer
        for i in (0..assignment.len()).rev() {
            assignment[i] += 1;
            if assignment[i] < n {
                continue 'outer;
            }
            assignment[i] = 0;
        }
        break;
    }
    Ok(PartialSolutionTable::new(vars, rows))
}

/// A total arc coloring, as element indices into the target quandle.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coloring {
    values: Vec<u16>,
}

impl Coloring {
    pub fn new(values: Vec<u16>) -> Self {
        Coloring { values }
    }

    pub fn get(&self, arc: ArcId) -> u16 {
        self.values[arc.0]
    }

    pub fn values(&self) -> &[u16] {
        &self.values
    }

    pub fn arc_count(&self) -> usize {
        self.values.len()
    }

    /// Re-evaluate every relation; `None` means all hold, otherwise the
    /// index of the first violated crossing.
    pub fn first_violation(&self, pres: &QuandlePresentation, q: &FiniteQuandle) -> Option<usize> {
        pres.relations.iter().enumerate().find_map(|(i, r)| {
            let lhs = q.apply(self.get(r.input), self.get(r.over), r.sign);
            (lhs != self.get(r.out)).then_some(i)
        })
    }
}

/// Which pipeline produced a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMode {
    Brute,
    Blocks { block_size: u8 },
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub budget: u128,
    pub threads: usize,
    pub spill_dir: Option<PathBuf>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            budget: DEFAULT_BUDGET,
            threads: 1,
            spill_dir: None,
        }
    }
}

/// Summary of how a solve ran, for reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanSummary {
    pub mode: &'static str,
    pub blocks: usize,
    pub block_size: Option<u8>,
    pub merges: usize,
    pub cartesian_merges: usize,
    pub max_table_rows: usize,
    pub emptied_at: Option<String>,
    pub row_warning: bool,
}

impl PlanSummary {
    fn brute() -> Self {
        PlanSummary {
            mode: "brute",
            blocks: 0,
            block_size: None,
            merges: 0,
            cartesian_merges: 0,
            max_table_rows: 0,
            emptied_at: None,
            row_warning: false,
        }
    }
}

/// Solve result: the counting data plus validation flags. `residual_ok`
/// is true on every emitted report; a residual failure aborts instead.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport {
    pub hom_count: u64,
    pub image_tally: std::collections::BTreeMap<usize, u64>,
    pub residual_ok: bool,
    pub wall_time: Duration,
    pub plan: PlanSummary,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub report: SolveReport,
    pub colorings: Vec<Coloring>,
}

/// Exhaustively enumerate all assignments and filter by the relations.
/// Refuses (with the exact cost) when `|T|^N` exceeds the budget.
pub fn brute_force(
    pres: &QuandlePresentation,
    q: &FiniteQuandle,
    budget: u128,
) -> Result<Vec<Coloring>, SolveError> {
    let needed = (q.len() as u128)
        .checked_pow(pres.generator_count as u32)
        .unwrap_or(u128::MAX);
    if needed > budget {
        return Err(SolveError::BudgetExceeded { needed, budget });
    }
    let n = q.len() as u16;
    let mut out = Vec::new();
    let mut assignment = vec![0u16; pres.generator_count];
    'outer: loop {
        let ok = pres.relations.iter().all(|r| {
            q.apply(assignment[r.input.0], assignment[r.over.0], r.sign)
                == assignment[r.out.0]
        });
        if ok {
            out.push(Coloring::new(assignment.clone()));
        }
        for i in (0..assignment.len()).rev() {
            assignment[i] += 1;
            if assignment[i] < n {
                continue 'outer;
            }
            assignment[i] = 0;
        }
        break;
    }
    Ok(out)
}

/// Full pipeline: solve `Hom(Q(L), T)` with the chosen mode, residual-check
/// every coloring, and tally image sizes. Colorings come back in canonical
/// (lexicographic) order regardless of thread count.
pub fn solve(
    pres: &QuandlePresentation,
    q: &FiniteQuandle,
    mode: SolverMode,
    opts: &SolveOptions,
) -> Result<SolveOutcome, SolveError> {
    let start = Instant::now();
    let (mut colorings, mut plan) = match mode {
        SolverMode::Brute => (brute_force(pres, q, opts.budget)?, PlanSummary::brute()),
        SolverMode::Blocks { block_size } => solve_with_blocks(pres, q, block_size, opts)?,
    };
    colorings.sort_unstable();
    colorings.dedup();

    for (ci, coloring) in colorings.iter().enumerate() {
        if let Some(crossing) = coloring.first_violation(pres, q) {
            return Err(SolveError::ResidualFailure {
                coloring: ci,
                crossing,
            });
        }
    }
    if colorings.is_empty() && plan.emptied_at.is_none() && matches!(mode, SolverMode::Brute) {
        plan.emptied_at = Some("brute enumeration".to_string());
    }

    let image_tally = invariants::image_tally(&colorings);
    let report = SolveReport {
        hom_count: colorings.len() as u64,
        image_tally,
        residual_ok: true,
        wall_time: start.elapsed(),
        plan,
    };
    Ok(SolveOutcome { report, colorings })
}

fn spill(opts: &SolveOptions, name: &str, table: &PartialSolutionTable) {
    if let Some(dir) = &opts.spill_dir {
        let path = dir.join(format!("{name}.csv"));
        if let Ok(mut f) = std::fs::File::create(&path) {
            let _ = table.write_csv(&mut f);
        }
    }
}

fn solve_with_blocks(
    pres: &QuandlePresentation,
    q: &FiniteQuandle,
    block_size: u8,
    opts: &SolveOptions,
) -> Result<(Vec<Coloring>, PlanSummary), SolveError> {
    let layout = ScalarLayout::for_quandle(q);

    let (summary, table) = if pres.relations.is_empty() {
        // nothing to decompose: all constraints are vacuous
        let mut s = PlanSummary::brute();
        s.mode = "blocks";
        s.block_size = Some(block_size);
        (s, PartialSolutionTable::unit())
    } else {
        let plan = make_block_plan(pres, block_size)?;
        let tables = solve_blocks_parallel(pres, q, &plan, opts)?;
        for (i, t) in tables.iter().enumerate() {
            spill(opts, &format!("block_{i:03}"), t);
        }
        let mut summary = PlanSummary {
            mode: "blocks",
            blocks: plan.blocks.len(),
            block_size: Some(block_size),
            merges: plan.merge_count(),
            cartesian_merges: plan.cartesian_merges(),
            max_table_rows: tables.iter().map(|t| t.rows().len()).max().unwrap_or(0),
            emptied_at: None,
            row_warning: false,
        };
        for (i, t) in tables.iter().enumerate() {
            if t.is_empty() && summary.emptied_at.is_none() {
                summary.emptied_at = Some(format!("block {i}"));
            }
        }
        let mut merge_idx = 0usize;
        let table = fold_tree(&plan.tree, &tables, &mut summary, &mut merge_idx, opts)?;
        (summary, table)
    };

    if summary.emptied_at.is_some() {
        return Ok((Vec::new(), summary));
    }

    // expand arcs that appear in no relation (crossing-free components)
    let mut bound = vec![false; pres.generator_count];
    for v in table.vars() {
        bound[v.arc] = true;
    }
    let free: Vec<usize> = (0..pres.generator_count).filter(|&a| !bound[a]).collect();
    let expansion = (q.len() as u128)
        .checked_pow(free.len() as u32)
        .unwrap_or(u128::MAX)
        .saturating_mul(table.rows().len().max(1) as u128);
    if expansion > opts.budget {
        return Err(SolveError::BudgetExceeded {
            needed: expansion,
            budget: opts.budget,
        });
    }

    let n = q.len() as u16;
    let mut colorings = Vec::new();
    let var_arc: Vec<(usize, usize)> = {
        // positions of each bound arc's slots in the table's var order
        let mut m: HashMap<usize, usize> = HashMap::new();
        for (i, v) in table.vars().iter().enumerate() {
            m.entry(v.arc).or_insert(i);
        }
        m.into_iter().collect()
    };
    for row in table.rows() {
        let mut base = vec![0u16; pres.generator_count];
        for &(arc, first_slot) in &var_arc {
            let span = layout.slots_per_arc as usize;
            base[arc] = layout.element_of(&row[first_slot..first_slot + span]);
        }
        if free.is_empty() {
            colorings.push(Coloring::new(base));
            continue;
        }
        let mut odo = vec![0u16; free.len()];
        'outer: loop {
            let mut values = base.clone();
            for (i, &arc) in free.iter().enumerate() {
                values[arc] = odo[i];
            }
            colorings.push(Coloring::new(values));
            for i in (0..odo.len()).rev() {
                odo[i] += 1;
                if odo[i] < n {
                    continue 'outer;
                }
                odo[i] = 0;
            }
            break;
        }
    }
    Ok((colorings, summary))
}

fn solve_blocks_parallel(
    pres: &QuandlePresentation,
    q: &FiniteQuandle,
    plan: &BlockPlan,
    opts: &SolveOptions,
) -> Result<Vec<PartialSolutionTable>, SolveError> {
    let threads = opts.threads.max(1).min(plan.blocks.len().max(1));
    if threads == 1 {
        return plan
            .blocks
            .iter()
            .map(|&b| solve_block(pres, q, b, opts.budget))
            .collect();
    }
    let mut results: Vec<Option<Result<PartialSolutionTable, SolveError>>> =
        (0..plan.blocks.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut slices: Vec<&mut [Option<Result<PartialSolutionTable, SolveError>>]> = Vec::new();
        let mut rest = &mut results[..];
        let chunk = plan.blocks.len().div_ceil(threads);
        while !rest.is_empty() {
            let take = chunk.min(rest.len());
            let (head, tail) = rest.split_at_mut(take);
            slices.push(head);
            rest = tail;
        }
        for (ti, slice) in slices.into_iter().enumerate() {
            let blocks = &plan.blocks;
            let budget = opts.budget;
            scope.spawn(move || {
                for (offset, out) in slice.iter_mut().enumerate() {
                    let idx = ti * chunk + offset;
                    *out = Some(solve_block(pres, q, blocks[idx], budget));
                }
            });
        }
    });
    results.into_iter().map(|r| r.unwrap()).collect()
}

fn fold_tree(
    tree: &JoinTree,
    tables: &[PartialSolutionTable],
    summary: &mut PlanSummary,
    merge_idx: &mut usize,
    opts: &SolveOptions,
) -> Result<PartialSolutionTable, SolveError> {
    match tree {
        JoinTree::Leaf(i) => Ok(tables[*i].clone()),
        JoinTree::Join {
            left,
            right,
            cartesian,
        } => {
            let lt = fold_tree(left, tables, summary, merge_idx, opts)?;
            let rt = fold_tree(right, tables, summary, merge_idx, opts)?;
            let this_merge = *merge_idx;
            *merge_idx += 1;
            if summary.emptied_at.is_some() {
                // inconsistency already established upstream; nothing to join
                return Ok(PartialSolutionTable::new(Vec::new(), Vec::new()));
            }
            let merged = if *cartesian {
                eprintln!(
                    "qcount: merge {this_merge}: disconnected relation groups, joining by cartesian product"
                );
                cartesian_join(&lt, &rt)
            } else {
                equi_join(&lt, &rt)?
            };
            summary.max_table_rows = summary.max_table_rows.max(merged.rows().len());
            if merged.rows().len() > JOIN_ROW_WARN {
                summary.row_warning = true;
                eprintln!(
                    "qcount: merge {this_merge}: intermediate table has {} rows (> {JOIN_ROW_WARN})",
                    merged.rows().len()
                );
            }
            if merged.is_empty() {
                summary.emptied_at = Some(format!("merge {this_merge}"));
            }
            spill(opts, &format!("merge_{this_merge:03}"), &merged);
            Ok(merged)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::LinkDiagram;

    fn hopf() -> LinkDiagram {
        LinkDiagram::parse(
            r#"{"name":"hopf","arcs":2,"components":[[0],[1]],
                "crossings":[{"sign":1,"over":1,"under_in":0,"under_out":0},
                             {"sign":1,"over":0,"under_in":1,"under_out":1}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn single_positive_crossing_block() {
        // one crossing binds 3 arcs = 6 scalars; inputs (under_in, over) are
        // free, the output is forced: 81 rows over (Z_3)^2.
        let d = LinkDiagram::parse(
            r#"{"name":"c","arcs":3,"components":[[0,1],[2]],
                "crossings":[{"sign":1,"over":2,"under_in":0,"under_out":1},
                             {"sign":1,"over":2,"under_in":1,"under_out":0}]}"#,
        )
        .unwrap();
        let q = FiniteQuandle::symplectic(3, 2).unwrap();
        let pres = d.presentation();
        let t = solve_block(&pres, &q, (0, 1), DEFAULT_BUDGET).unwrap();
        assert_eq!(t.vars().len(), 6);
        assert_eq!(t.rows().len(), 81);
        // negative crossing: same count by right-invertibility
        let d2 = LinkDiagram::parse(
            r#"{"name":"c","arcs":3,"components":[[0,1],[2]],
                "crossings":[{"sign":-1,"over":2,"under_in":0,"under_out":1},
                             {"sign":-1,"over":2,"under_in":1,"under_out":0}]}"#,
        )
        .unwrap();
        let t2 = solve_block(&d2.presentation(), &q, (0, 1), DEFAULT_BUDGET).unwrap();
        assert_eq!(t2.rows().len(), 81);
    }

    #[test]
    fn chained_crossings_block_count_matches_enumeration() {
        // two chained crossings sharing an under-arc; free arcs are the
        // initial under-arc and the two over-arcs.
        let d = LinkDiagram::parse(
            r#"{"name":"chain","arcs":5,"components":[[0,1,2],[3],[4]],
                "crossings":[{"sign":1,"over":3,"under_in":0,"under_out":1},
                             {"sign":1,"over":4,"under_in":1,"under_out":2},
                             {"sign":1,"over":1,"under_in":3,"under_out":3},
                             {"sign":1,"over":1,"under_in":4,"under_out":4},
                             {"sign":1,"over":3,"under_in":2,"under_out":0}]}"#,
        )
        .unwrap();
        let q = FiniteQuandle::symplectic(3, 2).unwrap();
        let pres = d.presentation();
        let t = solve_block(&pres, &q, (0, 2), DEFAULT_BUDGET).unwrap();
        assert_eq!(t.vars().len(), 10);
        // brute-force the 2-crossing subsystem over all 9^5 assignments
        let mut expected = 0u64;
        for a in 0..9u16 {
            for b in 0..9u16 {
                for c in 0..9u16 {
                    for w in 0..9u16 {
                        for v in 0..9u16 {
                            if q.op(a, w) == b && q.op(b, v) == c {
                                expected += 1;
                            }
                        }
                    }
                }
            }
        }
        assert_eq!(expected, 729); // inputs free, outputs forced
        assert_eq!(t.rows().len() as u64, expected);
    }

    #[test]
    fn join_is_idempotent_on_identical_tables() {
        let q = FiniteQuandle::symplectic(3, 2).unwrap();
        let pres = hopf().presentation();
        let t = solve_block(&pres, &q, (0, 2), DEFAULT_BUDGET).unwrap();
        let joined = equi_join(&t, &t).unwrap();
        assert_eq!(joined, t);
    }

    #[test]
    fn join_guards_are_structured_errors() {
        let va = vec![VarId { arc: 0, slot: 0 }];
        let vb = vec![VarId { arc: 1, slot: 0 }];
        let a = PartialSolutionTable::new(va.clone(), vec![vec![1]]);
        let b = PartialSolutionTable::new(vb, vec![vec![2]]);
        assert_eq!(equi_join(&a, &b).unwrap_err(), JoinError::NoSharedKeys);
        let empty = PartialSolutionTable::new(va, vec![]);
        assert_eq!(
            equi_join(&empty, &a).unwrap_err(),
            JoinError::EmptyInput { side: "left" }
        );
        assert_eq!(
            equi_join(&a, &empty).unwrap_err(),
            JoinError::EmptyInput { side: "right" }
        );
    }

    #[test]
    fn disagreeing_tables_join_to_legal_empty() {
        let vars = vec![VarId { arc: 0, slot: 0 }];
        let a = PartialSolutionTable::new(vars.clone(), vec![vec![1]]);
        let b = PartialSolutionTable::new(vars, vec![vec![2]]);
        let j = equi_join(&a, &b).unwrap();
        assert!(j.is_empty()); // legal empty, not a guard violation
    }

    #[test]
    fn brute_refuses_over_budget() {
        let d = hopf();
        let q = FiniteQuandle::symplectic(3, 2).unwrap();
        let err = brute_force(&d.presentation(), &q, 10).unwrap_err();
        assert!(matches!(err, SolveError::BudgetExceeded { needed: 81, .. }));
    }

    #[test]
    fn hopf_solves_identically_both_ways() {
        let d = hopf();
        let q = FiniteQuandle::symplectic(3, 2).unwrap();
        let pres = d.presentation();
        let brute = solve(&pres, &q, SolverMode::Brute, &SolveOptions::default()).unwrap();
        let blocks = solve(
            &pres,
            &q,
            SolverMode::Blocks { block_size: 2 },
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(brute.colorings, blocks.colorings);
        assert_eq!(brute.report.hom_count, 33);
        assert!(blocks.report.residual_ok);
    }

    #[test]
    fn free_components_expand_multiplicatively() {
        let d = LinkDiagram::parse(
            r#"{"name":"unlink2","arcs":2,"components":[[0],[1]],"crossings":[]}"#,
        )
        .unwrap();
        let q = FiniteQuandle::symplectic(3, 2).unwrap();
        let out = solve(
            &d.presentation(),
            &q,
            SolverMode::Blocks { block_size: 4 },
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(out.report.hom_count, 81);
    }

    #[test]
    fn plan_shapes() {
        let d = hopf();
        let plan = make_block_plan(&d.presentation(), 2).unwrap();
        assert_eq!(plan.blocks.len(), 1); // 2 crossings fit one block
        assert!(matches!(plan.tree, JoinTree::Leaf(0)));
        assert!(matches!(
            make_block_plan(&d.presentation(), 7),
            Err(PlanError::BadBlockSize(7))
        ));
    }
}
