//! Search over plan compositions for the lowest query exponent.
//!
//! A search state is (depth t, overlap p, query count k); moves are
//! iterate (t+1, 1 - 4(1-p)^2/9, 2k) and amplify(c) (t, T_c(p), ck).
//! Lifts appear only terminally: lift-to-0 followed by amplify(2) lands on
//! p = -1 from any p <= 0, and (behind a flag) lift-to-cos(pi/c) followed by
//! amplify(c) does the same at cost c. The frontier runs on doubles with a
//! dedup grid (rationals grow 9^t denominators); winners are rebuilt and
//! rechecked with exact arithmetic before being returned.
//!
//! Determinism: levels are BTreeMaps keyed by the p grid cell, worklists pop
//! in key order, cell replacement requires strictly smaller k (ties broken
//! by lexicographic move order), and final candidates are compared exactly
//! (k1^t2 vs k2^t1), so identical configs always return identical plans.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num::bigint::BigUint;
use num::One;

use crate::error::Error;
use crate::pcalc;
use crate::plan::{eval_ne_d, Plan};
use crate::rational::{format_sig, int, ln_big, to_f64, Rational};
use crate::sim::Simulator;
use crate::verify::structured_inputs;

/// One edge in the search graph, in application order (innermost first).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Move {
    Iterate,
    Amplify(u32),
    LiftTo(Rational),
}

impl std::fmt::Display for Move {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Move::Iterate => write!(f, "iterate"),
            Move::Amplify(c) => write!(f, "amplify({c})"),
            Move::LiftTo(q) => write!(f, "lift({q})"),
        }
    }
}

/// Search bounds and determinism knobs.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Deepest iterate level explored (>= 1).
    pub t_max: u32,
    /// Largest amplification factor (>= 2).
    pub c_max: u32,
    /// States with p above this are dropped; keeps the frontier away from
    /// the useless neighborhood of p = 1.
    pub p_ceiling: f64,
    /// Dedup grid resolution for p.
    pub grid: f64,
    /// Optional cap on live states per level (smallest query counts kept);
    /// `None` explores everything the pruning bound admits.
    pub beam: Option<usize>,
    /// Also try the terminal lift-to-cos(pi/c) + amplify(c) family for
    /// 3 <= c <= c_max.
    pub trig_lifts: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            t_max: 8,
            c_max: 4,
            p_ceiling: 0.99999,
            grid: 1e-9,
            beam: None,
            trig_lifts: false,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<(), Error> {
        if self.t_max < 1 {
            return Err(Error::BadSearchConfig("t_max must be >= 1".into()));
        }
        if self.c_max < 2 {
            return Err(Error::BadSearchConfig("c_max must be >= 2".into()));
        }
        if !(self.p_ceiling > 0.0 && self.p_ceiling < 1.0) {
            return Err(Error::BadSearchConfig(
                "p_ceiling must lie strictly between 0 and 1".into(),
            ));
        }
        if !(self.grid > 0.0 && self.grid.is_finite()) {
            return Err(Error::BadSearchConfig("grid must be positive".into()));
        }
        if let Some(0) = self.beam {
            return Err(Error::BadSearchConfig("beam must be >= 1".into()));
        }
        Ok(())
    }
}

/// Winning plan plus its exact statistics.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub plan: Plan,
    pub depth: u32,
    pub queries: BigUint,
    /// queries^(1/depth).
    pub exponent: f64,
    /// True when the exact rational recheck proved p = -1; false when the
    /// plan uses an irrational lift target and was confirmed by simulation
    /// instead.
    pub verified_exact: bool,
    /// Full move list from the base algorithm, innermost first.
    pub moves: Vec<Move>,
}

#[derive(Debug, Clone)]
struct Cell {
    p: f64,
    k: BigUint,
    moves: Vec<Move>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TerminalKind {
    /// p is already -1.
    AsIs,
    /// lift to 0 (skipped when p is exactly 0 already), then amplify(2).
    ZeroLift,
    /// lift to cos(pi/c), then amplify(c).
    TrigLift(u32),
}

#[derive(Debug, Clone)]
struct Candidate {
    t: u32,
    /// Query count including the terminal moves.
    k: BigUint,
    base_moves: Vec<Move>,
    kind: TerminalKind,
}

impl Candidate {
    /// Exact order by exponent k^(1/t): cross-multiplied powers avoid any
    /// float ambiguity. Ties prefer shallower plans, then lexicographically
    /// smaller move lists.
    fn cmp(&self, other: &Candidate) -> Ordering {
        let left = self.k.pow(other.t);
        let right = other.k.pow(self.t);
        left.cmp(&right)
            .then(self.t.cmp(&other.t))
            .then(self.base_moves.cmp(&other.base_moves))
            .then(terminal_rank(self.kind).cmp(&terminal_rank(other.kind)))
    }
}

fn terminal_rank(kind: TerminalKind) -> (u8, u32) {
    match kind {
        TerminalKind::AsIs => (0, 0),
        TerminalKind::ZeroLift => (1, 0),
        TerminalKind::TrigLift(c) => (2, c),
    }
}

fn cheb_f64(c: u32, p: f64) -> f64 {
    let mut prev = 1.0;
    let mut cur = p;
    for _ in 1..c {
        let next = 2.0 * p * cur - prev;
        prev = cur;
        cur = next;
    }
    if c == 0 {
        1.0
    } else {
        cur
    }
}

fn iterate_f64(p: f64) -> f64 {
    1.0 - 4.0 * (1.0 - p) * (1.0 - p) / 9.0
}

fn grid_key(p: f64, grid: f64) -> i64 {
    (p / grid).round() as i64
}

/// Lowest exponent reachable from (t, k): land at some t' >= t paying at
/// least one iterate doubling per level and nothing else. Underestimates
/// every real completion, so pruning on it never discards a potential
/// winner.
fn optimistic_exponent(t: u32, k: &BigUint, t_max: u32) -> f64 {
    let ln_k = ln_big(k);
    let mut best = f64::INFINITY;
    for t_prime in t.max(1)..=t_max {
        let ln_total = ln_k + f64::from(t_prime - t) * std::f64::consts::LN_2;
        best = best.min((ln_total / f64::from(t_prime)).exp());
    }
    best
}

/// Runs the exponent search and returns the best terminal plan.
pub fn search(config: &SearchConfig) -> Result<SearchOutcome, Error> {
    config.validate()?;
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut best_exp = f64::INFINITY;

    // level t = 0: the bare base algorithm
    let mut level: BTreeMap<i64, Cell> = BTreeMap::new();
    level.insert(
        grid_key(-1.0, config.grid),
        Cell {
            p: -1.0,
            k: BigUint::one(),
            moves: Vec::new(),
        },
    );
    close_under_amplify(&mut level, 0, config, best_exp);

    for t in 1..=config.t_max {
        let mut next: BTreeMap<i64, Cell> = BTreeMap::new();
        for cell in level.values() {
            let p = iterate_f64(cell.p);
            let k = &cell.k * 2u32;
            if p > config.p_ceiling {
                continue;
            }
            if optimistic_exponent(t, &k, config.t_max) > best_exp + 1e-9 {
                continue;
            }
            let mut moves = cell.moves.clone();
            moves.push(Move::Iterate);
            insert_cell(&mut next, grid_key(p, config.grid), Cell { p, k, moves });
        }
        level = next;
        // early terminals seed the pruning bound before the closure runs
        collect_terminals(&level, t, config, &mut candidates, &mut best_exp);
        close_under_amplify(&mut level, t, config, best_exp);
        if let Some(w) = config.beam {
            trim_to_beam(&mut level, w);
        }
        collect_terminals(&level, t, config, &mut candidates, &mut best_exp);
    }

    candidates.sort_by(|a, b| a.cmp(b));
    candidates.dedup_by(|a, b| a.cmp(b) == Ordering::Equal);
    for cand in &candidates {
        if let Some(outcome) = realize(cand)? {
            return Ok(outcome);
        }
    }
    Err(Error::NoPlanFound)
}

/// Bellman-style relaxation: amplifications stay within a level, so the
/// level is closed under them before moving on. A cell is only replaced by
/// a strictly smaller query count (or an equal count with a
/// lexicographically smaller move list), which makes the loop terminate.
fn close_under_amplify(
    level: &mut BTreeMap<i64, Cell>,
    t: u32,
    config: &SearchConfig,
    best_exp: f64,
) {
    let mut pending: BTreeSet<i64> = level.keys().copied().collect();
    while let Some(key) = pending.iter().next().copied() {
        pending.remove(&key);
        let cell = match level.get(&key) {
            Some(c) => c.clone(),
            None => continue,
        };
        for c in 2..=config.c_max {
            let p = cheb_f64(c, cell.p);
            if p > config.p_ceiling {
                continue;
            }
            let k = &cell.k * c;
            if optimistic_exponent(t, &k, config.t_max) > best_exp + 1e-9 {
                continue;
            }
            let mut moves = cell.moves.clone();
            moves.push(Move::Amplify(c));
            if insert_cell(level, grid_key(p, config.grid), Cell { p, k, moves }) {
                pending.insert(grid_key(p, config.grid));
            }
        }
    }
}

fn insert_cell(level: &mut BTreeMap<i64, Cell>, key: i64, cell: Cell) -> bool {
    match level.get(&key) {
        None => {
            level.insert(key, cell);
            true
        }
        Some(existing) => {
            let better = cell.k < existing.k
                || (cell.k == existing.k && cell.moves < existing.moves);
            if better {
                level.insert(key, cell);
                true
            } else {
                false
            }
        }
    }
}

fn trim_to_beam(level: &mut BTreeMap<i64, Cell>, width: usize) {
    if level.len() <= width {
        return;
    }
    let mut ranked: Vec<(BigUint, i64)> =
        level.iter().map(|(key, cell)| (cell.k.clone(), *key)).collect();
    ranked.sort();
    let keep: BTreeSet<i64> = ranked.into_iter().take(width).map(|(_, key)| key).collect();
    level.retain(|key, _| keep.contains(key));
}

fn collect_terminals(
    level: &BTreeMap<i64, Cell>,
    t: u32,
    config: &SearchConfig,
    candidates: &mut Vec<Candidate>,
    best_exp: &mut f64,
) {
    for cell in level.values() {
        let mut push = |k: BigUint, kind: TerminalKind| {
            let exp = (ln_big(&k) / f64::from(t)).exp();
            *best_exp = best_exp.min(exp);
            candidates.push(Candidate {
                t,
                k,
                base_moves: cell.moves.clone(),
                kind,
            });
        };
        if (cell.p + 1.0).abs() <= 1e-6 {
            push(cell.k.clone(), TerminalKind::AsIs);
        }
        if cell.p <= 1e-12 {
            push(&cell.k * 2u32, TerminalKind::ZeroLift);
        }
        if config.trig_lifts {
            for c in 3..=config.c_max {
                let target = (std::f64::consts::PI / f64::from(c)).cos();
                if cell.p <= target - 1e-9 {
                    push(&cell.k * c, TerminalKind::TrigLift(c));
                }
            }
        }
    }
}

/// Rebuilds the candidate with exact arithmetic; returns `None` when the
/// float frontier over-promised (exact p disagrees with the terminal form).
fn realize(cand: &Candidate) -> Result<Option<SearchOutcome>, Error> {
    let mut plan = Plan::Base;
    for mv in &cand.base_moves {
        plan = match mv {
            Move::Iterate => Plan::iterate(plan),
            Move::Amplify(c) => Plan::amplify(*c, plan)?,
            Move::LiftTo(q) => Plan::lift(q.clone(), plan)?,
        };
    }
    let p_exact = pcalc::plan_p(&plan)?;
    let mut moves = cand.base_moves.clone();
    let (plan, verified_exact) = match cand.kind {
        TerminalKind::AsIs => {
            if p_exact != int(-1) {
                return Ok(None);
            }
            (plan, true)
        }
        TerminalKind::ZeroLift => {
            let lifted = if p_exact == int(0) {
                plan
            } else if p_exact < int(0) {
                moves.push(Move::LiftTo(int(0)));
                Plan::lift(int(0), plan)?
            } else {
                return Ok(None);
            };
            moves.push(Move::Amplify(2));
            (Plan::amplify(2, lifted)?, true)
        }
        TerminalKind::TrigLift(c) => {
            let target = match Rational::from_float((std::f64::consts::PI / f64::from(c)).cos()) {
                Some(q) => q,
                None => return Ok(None),
            };
            if p_exact >= target {
                return Ok(None);
            }
            moves.push(Move::LiftTo(target.clone()));
            moves.push(Move::Amplify(c));
            let full = Plan::amplify(c, Plan::lift(target, plan)?)?;
            let p_full = pcalc::plan_p(&full)?;
            if p_full == int(-1) {
                (full, true)
            } else if simulated_minus_one(&full)? {
                (full, false)
            } else {
                return Ok(None);
            }
        }
    };
    let stats = plan.stats()?;
    if stats.depth != cand.t || stats.queries != cand.k {
        // bookkeeping bug, not an input condition
        panic!(
            "candidate accounting mismatch: recorded (t={}, k={}), exact (t={}, k={})",
            cand.t, cand.k, stats.depth, stats.queries
        );
    }
    let exponent = (ln_big(&stats.queries) / f64::from(stats.depth)).exp();
    Ok(Some(SearchOutcome {
        plan,
        depth: stats.depth,
        queries: stats.queries,
        exponent,
        verified_exact,
        moves,
    }))
}

/// Measures the plan on structured inputs: overlap must be +1 / -1 (NE = 0
/// resp. 1) within 1e-9. Used for winners whose lift target is a float
/// approximation of an irrational, where the exact rational recheck cannot
/// land on -1.
fn simulated_minus_one(plan: &Plan) -> Result<bool, Error> {
    let sim = Simulator::new(plan)?;
    let depth = plan.depth();
    for bits in structured_inputs(depth, 0, 2) {
        let expect = if eval_ne_d(depth, &bits)? == 0 { 1.0 } else { -1.0 };
        let r = sim.overlap(&bits)?;
        if (r.overlap.re - expect).abs() > 1e-9 || r.overlap.im.abs() > 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Trace tables
// ---------------------------------------------------------------------------

/// One plan node, bottom-up.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub step: usize,
    pub mv: String,
    pub t: u32,
    pub k: BigUint,
    pub p_exact: Rational,
    /// 7 significant digits.
    pub p_decimal: String,
    pub dim: BigUint,
}

/// Tabulates every node of the plan from the innermost base outward, with
/// exact and 7-significant-digit p values.
pub fn trace(plan: &Plan) -> Result<Vec<TraceRow>, Error> {
    fn walk(plan: &Plan, rows: &mut Vec<TraceRow>) -> Result<(), Error> {
        let label = match plan {
            Plan::Base => "base".to_string(),
            Plan::Iterate(child) => {
                walk(child, rows)?;
                "iterate".to_string()
            }
            Plan::Amplify { factor, child } => {
                walk(child, rows)?;
                format!("amplify({factor})")
            }
            Plan::Lift { target, child } => {
                walk(child, rows)?;
                format!("lift({target})")
            }
        };
        let stats = plan.stats()?;
        rows.push(TraceRow {
            step: rows.len() + 1,
            mv: label,
            t: stats.depth,
            k: stats.queries,
            p_exact: stats.p.clone(),
            p_decimal: format_sig(to_f64(&stats.p), 7),
            dim: stats.dim,
        });
        Ok(())
    }
    let mut rows = Vec::new();
    walk(plan, &mut rows)?;
    Ok(rows)
}

/// CSV rendering with the fixed header `step,move,t,k,p_exact,p_decimal,dim`.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("step,move,t,k,p_exact,p_decimal,dim\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.step, row.mv, row.t, row.k, row.p_exact, row.p_decimal, row.dim
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::parse_plan;

    fn cfg(t_max: u32, c_max: u32) -> SearchConfig {
        SearchConfig {
            t_max,
            c_max,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn depth_one_winner_by_hand() {
        // from p=-7/9 at k=2 the only terminal is lift-to-0 + amplify(2)
        let out = search(&cfg(1, 2)).unwrap();
        assert_eq!(out.queries, BigUint::from(4u32));
        assert_eq!(out.depth, 1);
        assert!((out.exponent - 4.0).abs() < 1e-12);
        assert_eq!(out.plan.to_string(), "amplify(2, lift(0, iterate(base)))");
        assert!(out.verified_exact);
    }

    #[test]
    fn depth_two_reproduces_the_eight_query_plan() {
        let out = search(&cfg(2, 2)).unwrap();
        assert_eq!(
            out.plan.to_string(),
            "amplify(2, lift(0, iterate(iterate(base))))"
        );
        assert_eq!(out.queries, BigUint::from(8u32));
        assert!((out.exponent - 8f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn search_is_deterministic() {
        let a = search(&cfg(3, 4)).unwrap();
        let b = search(&cfg(3, 4)).unwrap();
        assert_eq!(a.plan.to_string(), b.plan.to_string());
        assert_eq!(a.queries, b.queries);
    }

    #[test]
    fn config_validation() {
        assert!(matches!(
            search(&cfg(0, 2)),
            Err(Error::BadSearchConfig(_))
        ));
        assert!(matches!(
            search(&cfg(1, 1)),
            Err(Error::BadSearchConfig(_))
        ));
        let bad = SearchConfig {
            p_ceiling: 1.5,
            ..SearchConfig::default()
        };
        assert!(matches!(search(&bad), Err(Error::BadSearchConfig(_))));
    }

    #[test]
    fn trace_of_single_node() {
        let rows = trace(&parse_plan("base").unwrap()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].t, 0);
        assert_eq!(rows[0].k, BigUint::one());
        assert_eq!(rows[0].p_exact, int(-1));
    }

    #[test]
    fn trace_of_the_eight_query_plan() {
        let plan = parse_plan("amplify(2, lift(0, iterate(iterate(base))))").unwrap();
        let rows = trace(&plan).unwrap();
        assert_eq!(rows.len(), 5);
        let last = rows.last().unwrap();
        assert_eq!(last.t, 2);
        assert_eq!(last.k, BigUint::from(8u32));
        assert_eq!(last.p_exact, int(-1));
        let csv = trace_csv(&rows);
        assert!(csv.starts_with("step,move,t,k,p_exact,p_decimal,dim\n"));
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.contains("lift(0)"));
    }

    #[test]
    fn candidate_order_prefers_smaller_exponent_then_depth() {
        let a = Candidate {
            t: 2,
            k: BigUint::from(8u32),
            base_moves: vec![],
            kind: TerminalKind::AsIs,
        };
        let b = Candidate {
            t: 4,
            k: BigUint::from(64u32),
            base_moves: vec![],
            kind: TerminalKind::AsIs,
        };
        // 8^(1/2) == 64^(1/4): exact tie, shallower wins
        assert_eq!(a.cmp(&b), Ordering::Less);
        let c = Candidate {
            t: 1,
            k: BigUint::from(4u32),
            base_moves: vec![],
            kind: TerminalKind::AsIs,
        };
        // 4 > 8^(1/2)
        assert_eq!(a.cmp(&c), Ordering::Less);
    }
}
