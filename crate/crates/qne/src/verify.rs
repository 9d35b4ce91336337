//! Conformance harness: checks measured overlaps against the exact p-value
//! predictions, checks exact decisions against classical evaluation, and
//! provides the classical sensitivity sanity count.
//!
//! All checks aggregate order-independently (max / count), so results do not
//! depend on input ordering beyond the documented input-set construction.

use num::complex::Complex64;
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::pcalc;
use crate::plan::{eval_ne_d, InputAssignment, Plan};
use crate::rational::{int, to_f64, Rational};
use crate::sim::Simulator;

/// Largest depth allowed for exhaustive sweeps (2^27 inputs at depth 3 is
/// the practical ceiling; it is slow but bounded).
pub const MAX_EXHAUSTIVE_DEPTH: u32 = 3;

/// How the verified input set was produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputSetDescriptor {
    /// Every input of the given depth (2^(3^depth) of them).
    Exhaustive { depth: u32, count: u64 },
    /// A caller-provided list.
    Explicit { count: u64 },
    /// Structured inputs plus seeded random inputs.
    Sampled { seed: u64, n_random: usize, count: u64 },
}

impl std::fmt::Display for InputSetDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InputSetDescriptor::Exhaustive { depth, count } => {
                write!(f, "exhaustive depth={depth} count={count}")
            }
            InputSetDescriptor::Explicit { count } => write!(f, "explicit count={count}"),
            InputSetDescriptor::Sampled {
                seed,
                n_random,
                count,
            } => write!(f, "sampled seed={seed} n_random={n_random} count={count}"),
        }
    }
}

/// What a report verified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    /// Overlap and residual against the promised p-value.
    PComputation,
    /// Deterministic decision of a 0-computing plan against classical truth.
    ExactDecision,
}

impl ReportKind {
    fn label(self) -> &'static str {
        match self {
            ReportKind::PComputation => "p-computation",
            ReportKind::ExactDecision => "exact-decision",
        }
    }
}

/// Aggregates over one input class (all NE=0 inputs or all NE=1 inputs).
///
/// For p-computation runs, `max_overlap_dev` is the worst |overlap - mu|
/// where mu is 1 on the NE=0 class and the plan's p on the NE=1 class, and
/// `max_residual_dev` is the worst |residual - r| with r = 0 resp.
/// sqrt(1 - p^2). For exact-decision runs, `max_overlap_dev` is the worst
/// deviation of the winning outcome's probability from 1 and
/// `max_residual_dev` stays 0.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClassStats {
    pub count: u64,
    pub max_overlap_dev: f64,
    pub max_residual_dev: f64,
}

impl ClassStats {
    fn fold(&mut self, overlap_dev: f64, residual_dev: f64) {
        self.count += 1;
        self.max_overlap_dev = self.max_overlap_dev.max(overlap_dev);
        self.max_residual_dev = self.max_residual_dev.max(residual_dev);
    }

    fn within(&self, tol: f64) -> bool {
        self.max_overlap_dev <= tol && self.max_residual_dev <= tol
    }
}

/// Machine-readable outcome of a verification run.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub kind: ReportKind,
    pub plan_text: String,
    pub inputs: InputSetDescriptor,
    /// Exact prediction for the NE=1 overlap.
    pub predicted_p: Rational,
    pub tolerance: f64,
    pub ne0: ClassStats,
    pub ne1: ClassStats,
    /// Exact-decision runs: number of inputs decided differently from the
    /// classical evaluation. Always 0 for p-computation runs.
    pub mismatches: u64,
    pub pass: bool,
}

impl VerificationReport {
    /// Line-oriented `key=value` serialization.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("kind={}\n", self.kind.label()));
        out.push_str(&format!("plan={}\n", self.plan_text));
        out.push_str(&format!("inputs={}\n", self.inputs));
        out.push_str(&format!("predicted_p={}\n", self.predicted_p));
        out.push_str(&format!("predicted_p_decimal={:e}\n", to_f64(&self.predicted_p)));
        out.push_str(&format!("tolerance={:e}\n", self.tolerance));
        for (name, class) in [("ne0", &self.ne0), ("ne1", &self.ne1)] {
            out.push_str(&format!("{name}.count={}\n", class.count));
            out.push_str(&format!("{name}.max_overlap_dev={:e}\n", class.max_overlap_dev));
            out.push_str(&format!(
                "{name}.max_residual_dev={:e}\n",
                class.max_residual_dev
            ));
        }
        if self.kind == ReportKind::ExactDecision {
            out.push_str(&format!("mismatches={}\n", self.mismatches));
        }
        out.push_str(&format!("pass={}\n", self.pass));
        out
    }

    /// CSV serialization, one row per input class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,count,max_overlap_dev,max_residual_dev,mismatches,pass\n");
        for (name, class) in [("ne0", &self.ne0), ("ne1", &self.ne1)] {
            out.push_str(&format!(
                "{name},{},{:e},{:e},{},{}\n",
                class.count, class.max_overlap_dev, class.max_residual_dev, self.mismatches, self.pass
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Input-set construction
// ---------------------------------------------------------------------------

/// Deterministic input set covering the proof's case split plus seeded
/// random inputs: all-zeros, all-ones, a single 1 at each top-level block
/// boundary, an input whose top-level child values are (1,0,0), one with
/// (1,1,0), and `n_random` uniform inputs. Duplicates are dropped, keeping
/// first occurrence order.
pub fn structured_inputs(depth: u32, seed: u64, n_random: usize) -> Vec<InputAssignment> {
    let n = 3usize.pow(depth);
    let mut set: Vec<InputAssignment> = Vec::new();
    let push = |ia: InputAssignment, set: &mut Vec<InputAssignment>| {
        if !set.iter().any(|x| **x == *ia) {
            set.push(ia);
        }
    };
    push(InputAssignment::zeros(n), &mut set);
    push(InputAssignment::ones(n), &mut set);
    if depth >= 1 {
        let block = n / 3;
        for l in 0..3 {
            push(InputAssignment::single_one(n, l * block), &mut set);
        }
        // child values (1,0,0): a single 1 inside the first block only
        push(InputAssignment::single_one(n, 0), &mut set);
        // child values (1,1,0): additionally a single 1 inside the second
        // block (at its own first-subblock boundary when one exists)
        let second = block + if depth >= 2 { block / 3 } else { 0 };
        let mut bits = vec![0u8; n];
        bits[0] = 1;
        bits[second] = 1;
        push(InputAssignment::new(bits).unwrap(), &mut set);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_random {
        let bits: Vec<u8> = (0..n).map(|_| (rng.next_u32() & 1) as u8).collect();
        push(InputAssignment::new(bits).unwrap(), &mut set);
    }
    set
}

/// Flips each bit of the all-zeros input in turn and counts the flips that
/// change the classical value; the count must equal 3^depth (every bit is
/// sensitive).
pub fn sensitivity_check(depth: u32) -> Result<u64, Error> {
    if depth > MAX_EXHAUSTIVE_DEPTH {
        return Err(Error::ExhaustiveTooDeep {
            got: depth,
            max: MAX_EXHAUSTIVE_DEPTH,
        });
    }
    let n = 3usize.pow(depth);
    let baseline = eval_ne_d(depth, &vec![0u8; n])?;
    let mut count = 0u64;
    for i in 0..n {
        let mut bits = vec![0u8; n];
        bits[i] = 1;
        if eval_ne_d(depth, &bits)? != baseline {
            count += 1;
        }
    }
    let expected = n as u64;
    if count != expected {
        return Err(Error::SensitivityMismatch { count, expected });
    }
    Ok(count)
}

// ---------------------------------------------------------------------------
// Verification drivers
// ---------------------------------------------------------------------------

fn run_p_computation(
    plan: &Plan,
    inputs: impl Iterator<Item = Vec<u8>>,
    tol: f64,
    descriptor: InputSetDescriptor,
) -> Result<VerificationReport, Error> {
    let sim = Simulator::new(plan)?;
    let depth = plan.depth();
    let p = sim.predicted_p().clone();
    let p_f = to_f64(&p);
    let residual_1 = (1.0 - p_f * p_f).max(0.0).sqrt();
    let mut ne0 = ClassStats::default();
    let mut ne1 = ClassStats::default();
    for bits in inputs {
        let r = sim.overlap(&bits)?;
        if eval_ne_d(depth, &bits)? == 0 {
            let dev = (r.overlap - Complex64::new(1.0, 0.0)).norm();
            ne0.fold(dev, r.residual_norm);
        } else {
            let dev = (r.overlap - Complex64::new(p_f, 0.0)).norm();
            ne1.fold(dev, (r.residual_norm - residual_1).abs());
        }
    }
    let pass = ne0.within(tol) && ne1.within(tol);
    Ok(VerificationReport {
        kind: ReportKind::PComputation,
        plan_text: plan.to_string(),
        inputs: descriptor,
        predicted_p: p,
        tolerance: tol,
        ne0,
        ne1,
        mismatches: 0,
        pass,
    })
}

fn run_exact(
    plan: &Plan,
    inputs: impl Iterator<Item = Vec<u8>>,
    tol: f64,
    descriptor: InputSetDescriptor,
) -> Result<VerificationReport, Error> {
    let sim = Simulator::new(plan)?;
    if *sim.predicted_p() != int(0) {
        return Err(Error::NotZeroComputing(sim.predicted_p().to_string()));
    }
    let depth = plan.depth();
    let mut ne0 = ClassStats::default();
    let mut ne1 = ClassStats::default();
    let mut mismatches = 0u64;
    for bits in inputs {
        let truth = eval_ne_d(depth, &bits)?;
        let r = sim.overlap(&bits)?;
        let p_keep = r.overlap.norm_sqr();
        let (outcome, win) = if p_keep >= 0.5 { (0, p_keep) } else { (1, 1.0 - p_keep) };
        if outcome != truth {
            mismatches += 1;
        }
        let class = if truth == 0 { &mut ne0 } else { &mut ne1 };
        class.fold((win - 1.0).abs(), 0.0);
    }
    let pass = mismatches == 0 && ne0.within(tol) && ne1.within(tol);
    Ok(VerificationReport {
        kind: ReportKind::ExactDecision,
        plan_text: plan.to_string(),
        inputs: descriptor,
        predicted_p: int(0),
        tolerance: tol,
        ne0,
        ne1,
        mismatches,
        pass,
    })
}

fn exhaustive_iter(plan: &Plan) -> Result<(impl Iterator<Item = Vec<u8>>, u64), Error> {
    let depth = plan.depth();
    if depth > MAX_EXHAUSTIVE_DEPTH {
        return Err(Error::ExhaustiveTooDeep {
            got: depth,
            max: MAX_EXHAUSTIVE_DEPTH,
        });
    }
    let n = 3usize.pow(depth);
    let count = 1u64 << n;
    let iter = (0..count).map(move |idx| {
        (0..n)
            .map(|i| ((idx >> (n - 1 - i)) & 1) as u8)
            .collect::<Vec<u8>>()
    });
    Ok((iter, count))
}

/// Checks promise conformance on a caller-provided input list.
pub fn verify_p_computation(
    plan: &Plan,
    inputs: &[InputAssignment],
    tol: f64,
) -> Result<VerificationReport, Error> {
    let descriptor = InputSetDescriptor::Explicit {
        count: inputs.len() as u64,
    };
    run_p_computation(plan, inputs.iter().map(|ia| ia.to_vec()), tol, descriptor)
}

/// Exhaustive promise conformance over all 2^(3^depth) inputs
/// (depth <= 3).
pub fn verify_p_exhaustive(plan: &Plan, tol: f64) -> Result<VerificationReport, Error> {
    let (iter, count) = exhaustive_iter(plan)?;
    let descriptor = InputSetDescriptor::Exhaustive {
        depth: plan.depth(),
        count,
    };
    run_p_computation(plan, iter, tol, descriptor)
}

/// Promise conformance on structured plus seeded random inputs.
pub fn verify_p_sampled(
    plan: &Plan,
    seed: u64,
    n_random: usize,
    tol: f64,
) -> Result<VerificationReport, Error> {
    let inputs = structured_inputs(plan.depth(), seed, n_random);
    let descriptor = InputSetDescriptor::Sampled {
        seed,
        n_random,
        count: inputs.len() as u64,
    };
    run_p_computation(plan, inputs.iter().map(|ia| ia.to_vec()), tol, descriptor)
}

/// Checks that a 0-computing plan decides the function correctly on the
/// given inputs.
pub fn verify_exact(
    plan: &Plan,
    inputs: &[InputAssignment],
    tol: f64,
) -> Result<VerificationReport, Error> {
    let descriptor = InputSetDescriptor::Explicit {
        count: inputs.len() as u64,
    };
    run_exact(plan, inputs.iter().map(|ia| ia.to_vec()), tol, descriptor)
}

/// Exhaustive exact-decision check (depth <= 3).
pub fn verify_exact_exhaustive(plan: &Plan, tol: f64) -> Result<VerificationReport, Error> {
    let (iter, count) = exhaustive_iter(plan)?;
    let descriptor = InputSetDescriptor::Exhaustive {
        depth: plan.depth(),
        count,
    };
    run_exact(plan, iter, tol, descriptor)
}

/// Exact-decision check on structured plus seeded random inputs.
pub fn verify_exact_sampled(
    plan: &Plan,
    seed: u64,
    n_random: usize,
    tol: f64,
) -> Result<VerificationReport, Error> {
    let inputs = structured_inputs(plan.depth(), seed, n_random);
    let descriptor = InputSetDescriptor::Sampled {
        seed,
        n_random,
        count: inputs.len() as u64,
    };
    run_exact(plan, inputs.iter().map(|ia| ia.to_vec()), tol, descriptor)
}

/// Exact p-value the plan computes (thin re-export used by report callers).
pub fn predicted_p(plan: &Plan) -> Result<Rational, Error> {
    pcalc::plan_p(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::parse_plan;
    use crate::rational::ratio;

    #[test]
    fn exhaustive_depth_one() {
        let plan = parse_plan("iterate(base)").unwrap();
        let report = verify_p_exhaustive(&plan, 1e-9).unwrap();
        assert!(report.pass, "{}", report.to_kv());
        assert_eq!(report.ne0.count, 2);
        assert_eq!(report.ne1.count, 6);
        assert_eq!(report.predicted_p, ratio(-7, 9));
    }

    #[test]
    fn exhaustive_guard() {
        // depth 4 would need 2^81 inputs
        let plan = parse_plan(
            "iterate(iterate(iterate(iterate(base))))",
        )
        .unwrap();
        assert!(matches!(
            verify_p_exhaustive(&plan, 1e-9),
            Err(Error::ExhaustiveTooDeep { got: 4, max: 3 })
        ));
    }

    #[test]
    fn exact_decision_exhaustive_depth_two() {
        let plan = parse_plan("lift(0, iterate(iterate(base)))").unwrap();
        let report = verify_exact_exhaustive(&plan, 1e-9).unwrap();
        assert!(report.pass, "{}", report.to_kv());
        assert_eq!(report.ne0.count + report.ne1.count, 512);
        assert_eq!(report.mismatches, 0);
    }

    #[test]
    fn exact_decision_requires_zero_p() {
        let plan = parse_plan("iterate(base)").unwrap();
        assert!(matches!(
            verify_exact_exhaustive(&plan, 1e-9),
            Err(Error::NotZeroComputing(_))
        ));
    }

    #[test]
    fn sensitivity_counts() {
        assert_eq!(sensitivity_check(0).unwrap(), 1);
        assert_eq!(sensitivity_check(1).unwrap(), 3);
        assert_eq!(sensitivity_check(2).unwrap(), 9);
        assert!(matches!(
            sensitivity_check(4),
            Err(Error::ExhaustiveTooDeep { got: 4, max: 3 })
        ));
    }

    #[test]
    fn structured_set_covers_proof_cases() {
        let set = structured_inputs(2, 1, 0);
        let has = |bits: &[u8]| set.iter().any(|ia| **ia == *bits);
        assert!(has(&[0; 9]));
        assert!(has(&[1; 9]));
        assert!(has(&[1, 0, 0, 0, 0, 0, 0, 0, 0]));
        assert!(has(&[0, 0, 0, 1, 0, 0, 0, 0, 0]));
        assert!(has(&[0, 0, 0, 0, 0, 0, 1, 0, 0]));
        assert!(has(&[1, 0, 0, 0, 1, 0, 0, 0, 0]));
        // no duplicates
        for (i, a) in set.iter().enumerate() {
            for b in &set[i + 1..] {
                assert_ne!(**a, **b);
            }
        }
    }

    #[test]
    fn structured_depth_one_examples() {
        let set = structured_inputs(1, 1, 0);
        let has = |bits: &[u8]| set.iter().any(|ia| **ia == *bits);
        assert!(has(&[0, 0, 0]));
        assert!(has(&[1, 1, 1]));
        assert!(has(&[1, 0, 0]));
        assert!(has(&[1, 1, 0]));
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = structured_inputs(2, 42, 10);
        let b = structured_inputs(2, 42, 10);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(**x, **y);
        }
        let c = structured_inputs(2, 43, 10);
        assert!(a.iter().zip(&c).any(|(x, y)| **x != **y));
    }

    #[test]
    fn report_serialization_round() {
        let plan = parse_plan("iterate(base)").unwrap();
        let report = verify_p_exhaustive(&plan, 1e-9).unwrap();
        let kv = report.to_kv();
        assert!(kv.contains("plan=iterate(base)"));
        assert!(kv.contains("predicted_p=-7/9"));
        assert!(kv.contains("pass=true"));
        let csv = report.to_csv();
        assert!(csv.starts_with("class,count,"));
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.contains("\nne0,2,"));
        assert!(csv.contains("\nne1,6,"));
    }

    #[test]
    fn lifted_half_target() {
        // lift to 1/2: NE=1 overlap must be 1/2 exactly
        let plan = parse_plan("lift(1/2, base)").unwrap();
        let report = verify_p_exhaustive(&plan, 1e-9).unwrap();
        assert!(report.pass, "{}", report.to_kv());
        assert_eq!(report.predicted_p, ratio(1, 2));
    }
}
