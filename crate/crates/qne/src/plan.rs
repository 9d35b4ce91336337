//! The algorithm-plan tree shared by every other module, plus evaluation of
//! the iterated not-all-equal function on concrete inputs.
//!
//! A plan describes how an algorithm is assembled from four building blocks:
//!
//! - `base` — the one-query sign oracle on a single coordinate,
//! - `iterate(P)` — three parallel copies of `P` joined by a reflection,
//!   handling one more level of the NE tree,
//! - `amplify(c, P)` — amplitude amplification, alternating `P` and its
//!   inverse `c` times with reflections about the start state,
//! - `lift(r, P)` — ancilla mixing that raises the p-value of `P` to `r`
//!   at no query cost.
//!
//! The one-line text grammar (whitespace-insensitive) is
//!
//! ```text
//! plan := "base" | "iterate(" plan ")" | "amplify(" INT "," plan ")"
//!       | "lift(" RATIONAL "," plan ")"
//! RATIONAL := INT | INT "/" INT
//! ```

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use num::{BigUint, One};

use crate::error::Error;
use crate::pcalc;
use crate::rational::Rational;

/// Expression tree describing how an algorithm is built.
///
/// Immutable after construction; checked constructors (`iterate`, `amplify`,
/// `lift`) and the parser enforce the node invariants, so prefer them over
/// assembling variants by hand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Plan {
    Base,
    Iterate(Box<Plan>),
    Amplify { factor: u32, child: Box<Plan> },
    Lift { target: Rational, child: Box<Plan> },
}

impl Plan {
    pub fn iterate(child: Plan) -> Plan {
        Plan::Iterate(Box::new(child))
    }

    pub fn amplify(factor: u32, child: Plan) -> Result<Plan, Error> {
        if factor < 2 {
            return Err(Error::BadAmplifyFactor(factor as u64));
        }
        Ok(Plan::Amplify {
            factor,
            child: Box::new(child),
        })
    }

    /// Builds a lift node, checking `p(child) < target <= 1`.
    pub fn lift(target: Rational, child: Plan) -> Result<Plan, Error> {
        let child_p = pcalc::plan_p(&child)?;
        if target <= child_p || target > Rational::one() {
            return Err(Error::BadLiftTarget {
                target: target.to_string(),
                child_p: child_p.to_string(),
            });
        }
        Ok(Plan::Lift {
            target,
            child: Box::new(child),
        })
    }

    /// Number of NE-tree levels the plan handles; inputs have `3^depth` bits.
    pub fn depth(&self) -> u32 {
        match self {
            Plan::Base => 0,
            Plan::Iterate(child) => child.depth() + 1,
            Plan::Amplify { child, .. } | Plan::Lift { child, .. } => child.depth(),
        }
    }

    /// Exact query count.
    pub fn queries(&self) -> BigUint {
        match self {
            Plan::Base => BigUint::one(),
            Plan::Iterate(child) => child.queries() * 2u32,
            Plan::Amplify { factor, child } => child.queries() * *factor,
            Plan::Lift { child, .. } => child.queries(),
        }
    }

    /// State-space dimension as an arbitrary-precision integer.
    pub fn dim(&self) -> BigUint {
        match self {
            Plan::Base => BigUint::one(),
            Plan::Iterate(child) => child.dim() * 3u32,
            Plan::Amplify { child, .. } => child.dim(),
            Plan::Lift { child, .. } => child.dim() + 1u32,
        }
    }

    /// Re-checks every node invariant (factor >= 2, lift targets in range).
    /// The checked constructors and the parser maintain these, but plans can
    /// also be assembled from public enum variants.
    pub fn validate(&self) -> Result<(), Error> {
        match self {
            Plan::Base => Ok(()),
            Plan::Iterate(child) => child.validate(),
            Plan::Amplify { factor, child } => {
                if *factor < 2 {
                    return Err(Error::BadAmplifyFactor(*factor as u64));
                }
                child.validate()
            }
            Plan::Lift { target, child } => {
                child.validate()?;
                let child_p = pcalc::plan_p(child)?;
                if *target <= child_p || *target > Rational::one() {
                    return Err(Error::BadLiftTarget {
                        target: target.to_string(),
                        child_p: child_p.to_string(),
                    });
                }
                Ok(())
            }
        }
    }

    pub fn child(&self) -> Option<&Plan> {
        match self {
            Plan::Base => None,
            Plan::Iterate(child) => Some(child),
            Plan::Amplify { child, .. } | Plan::Lift { child, .. } => Some(child),
        }
    }

    /// Concrete space layout; errors if the dimension overflows `usize`.
    pub fn layout(&self) -> Result<SpaceLayout, Error> {
        let too_large = || Error::PlanTooLarge(self.depth());
        match self {
            Plan::Base => Ok(SpaceLayout {
                dim: 1,
                kind: LayoutKind::Point,
            }),
            Plan::Iterate(child) => {
                let inner = child.layout()?;
                let dim = inner.dim.checked_mul(3).ok_or_else(too_large)?;
                Ok(SpaceLayout {
                    dim,
                    kind: LayoutKind::Triple(Box::new(inner)),
                })
            }
            Plan::Amplify { child, .. } => {
                let inner = child.layout()?;
                Ok(SpaceLayout {
                    dim: inner.dim,
                    kind: LayoutKind::Pass(Box::new(inner)),
                })
            }
            Plan::Lift { child, .. } => {
                let inner = child.layout()?;
                let dim = inner.dim.checked_add(1).ok_or_else(too_large)?;
                Ok(SpaceLayout {
                    dim,
                    kind: LayoutKind::Ancilla(Box::new(inner)),
                })
            }
        }
    }

    /// Expected input length `3^depth`, or `None` if it overflows `usize`.
    pub fn input_len(&self) -> Option<usize> {
        3usize.checked_pow(self.depth())
    }

    /// Depth, query count, dimension and exact p-value in one call.
    pub fn stats(&self) -> Result<PlanStats, Error> {
        Ok(PlanStats {
            depth: self.depth(),
            queries: self.queries(),
            dim: self.dim(),
            p: pcalc::plan_p(self)?,
        })
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Plan::Base => write!(f, "base"),
            Plan::Iterate(child) => write!(f, "iterate({child})"),
            Plan::Amplify { factor, child } => write!(f, "amplify({factor}, {child})"),
            Plan::Lift { target, child } => write!(f, "lift({target}, {child})"),
        }
    }
}

impl FromStr for Plan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        parse_plan(s)
    }
}

/// Per-plan bookkeeping returned by [`Plan::stats`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanStats {
    pub depth: u32,
    pub queries: BigUint,
    pub dim: BigUint,
    pub p: Rational,
}

/// Recursive description of how a plan's coordinates are laid out.
///
/// Iterate places its three child blocks in consecutive coordinate ranges;
/// lift appends a single ancilla coordinate after the child block; amplify
/// reuses the child space unchanged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceLayout {
    pub dim: usize,
    pub kind: LayoutKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayoutKind {
    Point,
    Triple(Box<SpaceLayout>),
    Pass(Box<SpaceLayout>),
    Ancilla(Box<SpaceLayout>),
}

impl SpaceLayout {
    /// Coordinate ranges of the three child blocks (Triple layouts only).
    pub fn triple_blocks(&self) -> Option<[std::ops::Range<usize>; 3]> {
        match &self.kind {
            LayoutKind::Triple(child) => {
                let m = child.dim;
                Some([0..m, m..2 * m, 2 * m..3 * m])
            }
            _ => None,
        }
    }

    /// Index of the ancilla coordinate (Ancilla layouts only).
    pub fn ancilla_index(&self) -> Option<usize> {
        match &self.kind {
            LayoutKind::Ancilla(_) => Some(self.dim - 1),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Input assignments and NE evaluation
// ---------------------------------------------------------------------------

/// Oracle input: a bit string of length `3^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InputAssignment {
    bits: Vec<u8>,
}

impl InputAssignment {
    pub fn new(bits: Vec<u8>) -> Result<Self, Error> {
        for (pos, &b) in bits.iter().enumerate() {
            if b > 1 {
                return Err(Error::BadBit { pos, value: b });
            }
        }
        Ok(InputAssignment { bits })
    }

    /// Parses a 0/1 string; whitespace (including newlines) is skipped, so
    /// file-sourced inputs may be wrapped.
    pub fn from_bit_str(s: &str) -> Result<Self, Error> {
        let mut bits = Vec::with_capacity(s.len());
        for (pos, ch) in s.char_indices() {
            match ch {
                '0' => bits.push(0),
                '1' => bits.push(1),
                c if c.is_whitespace() => continue,
                c => {
                    return Err(Error::BadBit {
                        pos,
                        value: c as u8,
                    })
                }
            }
        }
        Ok(InputAssignment { bits })
    }

    pub fn zeros(len: usize) -> Self {
        InputAssignment { bits: vec![0; len] }
    }

    pub fn ones(len: usize) -> Self {
        InputAssignment { bits: vec![1; len] }
    }

    pub fn single_one(len: usize, index: usize) -> Self {
        let mut bits = vec![0; len];
        bits[index] = 1;
        InputAssignment { bits }
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }
}

impl Deref for InputAssignment {
    type Target = [u8];
    fn deref(&self) -> &[u8] {
        &self.bits
    }
}

impl fmt::Display for InputAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// The 3-bit not-all-equal function: 0 iff all three bits agree.
pub fn eval_ne(bits: &[u8]) -> Result<u8, Error> {
    if bits.len() != 3 {
        return Err(Error::InputLength {
            got: bits.len(),
            want: 3,
        });
    }
    Ok(u8::from(!(bits[0] == bits[1] && bits[1] == bits[2])))
}

/// The d-fold iterate of NE over a ternary tree; `d = 0` is the identity on
/// a single bit.
pub fn eval_ne_d(depth: u32, bits: &[u8]) -> Result<u8, Error> {
    let want = 3usize
        .checked_pow(depth)
        .ok_or(Error::PlanTooLarge(depth))?;
    if bits.len() != want {
        return Err(Error::InputLength {
            got: bits.len(),
            want,
        });
    }
    Ok(eval_ne_d_unchecked(depth, bits))
}

fn eval_ne_d_unchecked(depth: u32, bits: &[u8]) -> u8 {
    if depth == 0 {
        return bits[0];
    }
    let third = bits.len() / 3;
    let a = eval_ne_d_unchecked(depth - 1, &bits[..third]);
    let b = eval_ne_d_unchecked(depth - 1, &bits[third..2 * third]);
    let c = eval_ne_d_unchecked(depth - 1, &bits[2 * third..]);
    u8::from(!(a == b && b == c))
}

// ---------------------------------------------------------------------------
// Grammar
// ---------------------------------------------------------------------------

/// Parses the one-line plan grammar. Reports the byte offset of the first
/// offending token on syntax errors, and rejects semantically invalid nodes
/// (amplify factor < 2, lift target outside `(p(child), 1]`).
pub fn parse_plan(text: &str) -> Result<Plan, Error> {
    let mut parser = Parser {
        bytes: text.as_bytes(),
        pos: 0,
    };
    let plan = parser.node()?;
    parser.skip_ws();
    if parser.pos != parser.bytes.len() {
        return Err(parser.err("unexpected trailing input"));
    }
    Ok(plan)
}

/// Canonical text form; inverse of [`parse_plan`].
pub fn render_plan(plan: &Plan) -> String {
    plan.to_string()
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::PlanSyntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_whitespace())
        {
            self.pos += 1;
        }
    }

    fn expect(&mut self, ch: u8) -> Result<(), Error> {
        self.skip_ws();
        if self.bytes.get(self.pos) == Some(&ch) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected '{}'", ch as char)))
        }
    }

    fn ident(&mut self) -> Result<&'a str, Error> {
        self.skip_ws();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_lowercase())
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected a node name"));
        }
        Ok(std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii"))
    }

    fn integer(&mut self) -> Result<&'a str, Error> {
        self.skip_ws();
        let start = self.pos;
        if self.bytes.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        let digits_start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit())
        {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(self.err("expected an integer"));
        }
        Ok(std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii"))
    }

    fn rational(&mut self) -> Result<Rational, Error> {
        let at = self.pos;
        let numer = self.integer()?.to_owned();
        let text = if self.bytes.get(self.pos) == Some(&b'/') {
            self.pos += 1;
            let denom = self.integer()?;
            if denom.trim_start_matches('-').chars().all(|c| c == '0') {
                return Err(Error::PlanSyntax {
                    pos: at,
                    msg: "rational with zero denominator".into(),
                });
            }
            format!("{numer}/{denom}")
        } else {
            numer
        };
        Rational::from_str(&text).map_err(|e| Error::PlanSyntax {
            pos: at,
            msg: format!("bad rational: {e}"),
        })
    }

    fn node(&mut self) -> Result<Plan, Error> {
        let at = self.pos;
        let name_at = {
            self.skip_ws();
            self.pos
        };
        let name = self.ident()?;
        match name {
            "base" => Ok(Plan::Base),
            "iterate" => {
                self.expect(b'(')?;
                let child = self.node()?;
                self.expect(b')')?;
                Ok(Plan::iterate(child))
            }
            "amplify" => {
                self.expect(b'(')?;
                let factor_at = {
                    self.skip_ws();
                    self.pos
                };
                let factor_text = self.integer()?;
                let factor: u32 = factor_text.parse().map_err(|_| Error::PlanSyntax {
                    pos: factor_at,
                    msg: format!("bad amplify factor '{factor_text}'"),
                })?;
                self.expect(b',')?;
                let child = self.node()?;
                self.expect(b')')?;
                Plan::amplify(factor, child)
            }
            "lift" => {
                self.expect(b'(')?;
                let target = self.rational()?;
                self.expect(b',')?;
                let child = self.node()?;
                self.expect(b')')?;
                Plan::lift(target, child)
            }
            other => Err(Error::PlanSyntax {
                pos: name_at.max(at),
                msg: format!("unknown node '{other}'"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn ne_truth_table() {
        assert_eq!(eval_ne(&[0, 0, 0]).unwrap(), 0);
        assert_eq!(eval_ne(&[1, 1, 1]).unwrap(), 0);
        assert_eq!(eval_ne(&[0, 0, 1]).unwrap(), 1);
        assert!(matches!(
            eval_ne(&[0, 1]),
            Err(Error::InputLength { got: 2, want: 3 })
        ));
    }

    #[test]
    fn ne_d_examples() {
        assert_eq!(eval_ne_d(0, &[1]).unwrap(), 1);
        assert_eq!(eval_ne_d(2, &[0; 9]).unwrap(), 0);
        // inner values (1,0,0), outer NE = 1
        assert_eq!(eval_ne_d(2, &[1, 0, 0, 0, 0, 0, 0, 0, 0]).unwrap(), 1);
        assert!(eval_ne_d(2, &[0; 8]).is_err());
    }

    #[test]
    fn stats_examples() {
        let base = parse_plan("base").unwrap();
        let s = base.stats().unwrap();
        assert_eq!(
            (s.depth, s.queries.to_string().as_str(), s.dim.to_string().as_str()),
            (0, "1", "1")
        );
        assert_eq!(s.p, int(-1));

        let one = parse_plan("iterate(base)").unwrap();
        let s = one.stats().unwrap();
        assert_eq!(s.depth, 1);
        assert_eq!(s.queries.to_string(), "2");
        assert_eq!(s.dim.to_string(), "3");
        assert_eq!(s.p, ratio(-7, 9));
    }

    #[test]
    fn grammar_round_trips() {
        for text in [
            "base",
            "iterate(base)",
            "amplify(2, lift(0, iterate(iterate(base))))",
            "iterate(amplify(3, base))",
            "lift(-1/2, base)",
        ] {
            let plan = parse_plan(text).unwrap();
            assert_eq!(render_plan(&plan), text);
            assert_eq!(parse_plan(&render_plan(&plan)).unwrap(), plan);
        }
    }

    #[test]
    fn grammar_is_whitespace_insensitive() {
        let a = parse_plan("amplify(2, lift(0, iterate(iterate(base))))").unwrap();
        let b = parse_plan(" amplify ( 2 ,\n lift( 0 , iterate( iterate( base ) ) ) ) ").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_plan("iterate(bse)") {
            Err(Error::PlanSyntax { pos, .. }) => assert_eq!(pos, 8),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(parse_plan("amplify(2 iterate(base))").is_err());
        assert!(parse_plan("base extra").is_err());
        assert!(parse_plan("lift(1/0, base)").is_err());
    }

    #[test]
    fn semantic_validation() {
        // amplify factor below 2
        assert!(matches!(
            parse_plan("amplify(1, base)"),
            Err(Error::BadAmplifyFactor(1))
        ));
        // lift must raise p: target <= p(child) rejected
        assert!(matches!(
            parse_plan("lift(-1, base)"),
            Err(Error::BadLiftTarget { .. })
        ));
        assert!(matches!(
            parse_plan("lift(2, base)"),
            Err(Error::BadLiftTarget { .. })
        ));
        // lift to exactly 1 is allowed (drops the algorithm entirely)
        assert!(parse_plan("lift(1, base)").is_ok());
    }

    #[test]
    fn layout_recursion() {
        let plan = parse_plan("lift(0, iterate(iterate(base)))").unwrap();
        let layout = plan.layout().unwrap();
        assert_eq!(layout.dim, 10);
        assert_eq!(layout.ancilla_index(), Some(9));
        let LayoutKind::Ancilla(inner) = &layout.kind else {
            panic!("expected ancilla layout");
        };
        assert_eq!(inner.dim, 9);
        assert_eq!(inner.triple_blocks().unwrap()[2], 6..9);
    }
}
