//! Matrix-free state-vector interpreter.
//!
//! A plan compiles into a tree of algorithm nodes behind the [`Algorithm`]
//! trait, one node kind per plan variant. Each node applies its unitary (or
//! the inverse) in place to a borrowed amplitude slice:
//!
//! - the base node is the phase query itself,
//! - iterate runs its child on three consecutive blocks, reflects within the
//!   span of the three embedded child start states, and runs the children in
//!   reverse,
//! - amplify alternates child and inverse-child applications with
//!   reflections about the child start state,
//! - lift runs the child on the leading block and leaves its single ancilla
//!   coordinate untouched.
//!
//! Reflections are rank-structured updates from inner products with cached
//! start vectors, never dense matrices, so the 2048-query plan for NE^8
//! (dimension 6562) applies in well under a second per input.

use num::complex::Complex64;
use num::{One, Zero};

use crate::error::Error;
use crate::pcalc;
use crate::plan::Plan;
use crate::rational::{int, to_f64, Rational};

/// Application direction: the inverse runs the reversed sequence of
/// inverted steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    fn flip(self) -> Direction {
        match self {
            Direction::Forward => Direction::Inverse,
            Direction::Inverse => Direction::Forward,
        }
    }
}

/// A compiled algorithm node: applies its unitary to a state slice in place.
///
/// All implementations are deterministic and allocation-free in `apply`.
pub trait Algorithm {
    /// State-space dimension of this node.
    fn dim(&self) -> usize;
    /// Number of input bits consumed (3^depth).
    fn input_len(&self) -> usize;
    /// The node's start state (unit norm, cached at compile time).
    fn start(&self) -> &[Complex64];
    /// In-place application; `bits` and `state` lengths must match
    /// `input_len()` and `dim()`.
    fn apply(&self, bits: &[u8], state: &mut [Complex64], dir: Direction);
}

/// Compiles a plan into its algorithm tree.
///
/// Needs the child p-values (for lift mixing angles), so the plan must pass
/// validation; dimensions must fit in memory.
pub fn compile(plan: &Plan) -> Result<Box<dyn Algorithm>, Error> {
    plan.validate()?;
    if plan.input_len().is_none() {
        return Err(Error::PlanTooLarge(plan.depth()));
    }
    build(plan)
}

fn build(plan: &Plan) -> Result<Box<dyn Algorithm>, Error> {
    match plan {
        Plan::Base => Ok(Box::new(BaseNode)),
        Plan::Iterate(child) => {
            let child = build(child)?;
            let m = child.dim();
            let dim = m.checked_mul(3).ok_or(Error::PlanTooLarge(plan.depth()))?;
            let child_start = child.start().to_vec();
            let w = Complex64::new(1.0 / 3f64.sqrt(), 0.0);
            let mut start = Vec::with_capacity(dim);
            for _ in 0..3 {
                start.extend(child_start.iter().map(|a| a * w));
            }
            Ok(Box::new(IterateNode {
                input_len: child.input_len() * 3,
                child,
                child_start,
                start,
            }))
        }
        Plan::Amplify { factor, child } => {
            let child = build(child)?;
            let start = child.start().to_vec();
            Ok(Box::new(AmplifyNode {
                child,
                factor: *factor,
                start,
            }))
        }
        Plan::Lift { target, child } => {
            let p_child = pcalc::plan_p(child)?;
            let mix = pcalc::lift_p(&p_child, target)?;
            let cos_a = to_f64(&mix.cos2_alpha).sqrt();
            let sin_a = (1.0 - to_f64(&mix.cos2_alpha)).max(0.0).sqrt();
            let child = build(child)?;
            let dim = child
                .dim()
                .checked_add(1)
                .ok_or(Error::PlanTooLarge(plan.depth()))?;
            let mut start = Vec::with_capacity(dim);
            start.extend(child.start().iter().map(|a| a * cos_a));
            start.push(Complex64::new(sin_a, 0.0));
            Ok(Box::new(LiftNode { child, start }))
        }
    }
}

/// The one-query base algorithm: a sign oracle on a single coordinate.
struct BaseNode;

impl Algorithm for BaseNode {
    fn dim(&self) -> usize {
        1
    }
    fn input_len(&self) -> usize {
        1
    }
    fn start(&self) -> &[Complex64] {
        const START: [Complex64; 1] = [Complex64::new(1.0, 0.0)];
        &START
    }
    fn apply(&self, bits: &[u8], state: &mut [Complex64], _dir: Direction) {
        if bits[0] == 1 {
            state[0] = -state[0];
        }
    }
}

/// Three parallel child copies on a direct sum of blocks, conjugated around
/// a reflection that fixes the uniform combination of the child start states
/// and negates the rest of their span.
struct IterateNode {
    child: Box<dyn Algorithm>,
    child_start: Vec<Complex64>,
    start: Vec<Complex64>,
    input_len: usize,
}

impl IterateNode {
    /// Coefficient map c_l -> (2/3) sum(c) - c_l on the embedded child start
    /// states; identity on everything orthogonal to their span.
    fn reflect(&self, state: &mut [Complex64]) {
        let m = self.child.dim();
        let mut coeff = [Complex64::zero(); 3];
        for l in 0..3 {
            coeff[l] = dot_conj(&self.child_start, &state[l * m..(l + 1) * m]);
        }
        let s = (coeff[0] + coeff[1] + coeff[2]) * (2.0 / 3.0);
        for l in 0..3 {
            let delta = s - coeff[l] * 2.0;
            axpy(delta, &self.child_start, &mut state[l * m..(l + 1) * m]);
        }
    }
}

impl Algorithm for IterateNode {
    fn dim(&self) -> usize {
        self.start.len()
    }
    fn input_len(&self) -> usize {
        self.input_len
    }
    fn start(&self) -> &[Complex64] {
        &self.start
    }
    fn apply(&self, bits: &[u8], state: &mut [Complex64], dir: Direction) {
        // V, T, V^-1: self-inverse, so both directions run the same sequence.
        let m = self.child.dim();
        let third = self.input_len / 3;
        for l in 0..3 {
            self.child.apply(
                &bits[l * third..(l + 1) * third],
                &mut state[l * m..(l + 1) * m],
                dir,
            );
        }
        self.reflect(state);
        for l in 0..3 {
            self.child.apply(
                &bits[l * third..(l + 1) * third],
                &mut state[l * m..(l + 1) * m],
                dir.flip(),
            );
        }
    }
}

/// Amplitude amplification: child, reflection, inverse child, reflection,
/// ... for `factor` child applications.
struct AmplifyNode {
    child: Box<dyn Algorithm>,
    factor: u32,
    start: Vec<Complex64>,
}

impl AmplifyNode {
    /// Reflection about the child start state: fixes it, negates everything
    /// orthogonal to it.
    fn reflect(&self, state: &mut [Complex64]) {
        let a = dot_conj(&self.start, state) * 2.0;
        for (s, phi) in state.iter_mut().zip(&self.start) {
            *s = a * phi - *s;
        }
    }

    // step i in 1..=factor runs the child forward for odd i, inverse for even
    fn step_dir(i: u32, dir: Direction) -> Direction {
        if i % 2 == 1 {
            dir
        } else {
            dir.flip()
        }
    }
}

impl Algorithm for AmplifyNode {
    fn dim(&self) -> usize {
        self.child.dim()
    }
    fn input_len(&self) -> usize {
        self.child.input_len()
    }
    fn start(&self) -> &[Complex64] {
        &self.start
    }
    fn apply(&self, bits: &[u8], state: &mut [Complex64], dir: Direction) {
        match dir {
            Direction::Forward => {
                self.child.apply(bits, state, Self::step_dir(1, dir));
                for i in 2..=self.factor {
                    self.reflect(state);
                    self.child.apply(bits, state, Self::step_dir(i, dir));
                }
            }
            Direction::Inverse => {
                self.child.apply(bits, state, Self::step_dir(self.factor, dir));
                for i in (1..self.factor).rev() {
                    self.reflect(state);
                    self.child.apply(bits, state, Self::step_dir(i, dir));
                }
            }
        }
    }
}

/// Child action on the leading block, identity on the single trailing
/// ancilla coordinate.
struct LiftNode {
    child: Box<dyn Algorithm>,
    start: Vec<Complex64>,
}

impl Algorithm for LiftNode {
    fn dim(&self) -> usize {
        self.start.len()
    }
    fn input_len(&self) -> usize {
        self.child.input_len()
    }
    fn start(&self) -> &[Complex64] {
        &self.start
    }
    fn apply(&self, bits: &[u8], state: &mut [Complex64], dir: Direction) {
        let m = self.child.dim();
        self.child.apply(bits, &mut state[..m], dir);
    }
}

fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

// ---------------------------------------------------------------------------
// State vectors and measurement results
// ---------------------------------------------------------------------------

/// Complex amplitude vector over a plan's space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub Vec<Complex64>);

impl StateVector {
    pub fn basis(dim: usize, index: usize) -> StateVector {
        let mut v = vec![Complex64::zero(); dim];
        v[index] = Complex64::one();
        StateVector(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Inner product `<self|other>` (conjugate-linear in `self`).
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        dot_conj(&self.0, &other.0)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }
}

/// Overlap of the final state with the start state, plus the norm of what
/// is left orthogonal to it. `|overlap|^2 + residual_norm^2 = 1` for any
/// unitary algorithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapResult {
    pub overlap: Complex64,
    pub residual_norm: f64,
}

impl OverlapResult {
    /// Deviation of `|overlap|^2 + residual^2` from 1.
    pub fn consistency_defect(&self) -> f64 {
        (self.overlap.norm_sqr() + self.residual_norm * self.residual_norm - 1.0).abs()
    }
}

// ---------------------------------------------------------------------------
// Simulator front end
// ---------------------------------------------------------------------------

/// Default dimension guard for dense-matrix extraction.
pub const DENSE_GUARD: usize = 4096;

/// A compiled plan ready to run against inputs.
///
/// Compile once and reuse across inputs: distinct evaluations share nothing
/// mutable, so a `Simulator` may be used from several threads at once.
pub struct Simulator {
    root: Box<dyn Algorithm>,
    p: Rational,
    p_f64: f64,
    depth: u32,
}

impl Simulator {
    pub fn new(plan: &Plan) -> Result<Simulator, Error> {
        let root = compile(plan)?;
        let p = pcalc::plan_p(plan)?;
        let p_f64 = to_f64(&p);
        Ok(Simulator {
            root,
            p,
            p_f64,
            depth: plan.depth(),
        })
    }

    pub fn dim(&self) -> usize {
        self.root.dim()
    }

    pub fn input_len(&self) -> usize {
        self.root.input_len()
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Exact p-value the plan is predicted to compute.
    pub fn predicted_p(&self) -> &Rational {
        &self.p
    }

    pub fn predicted_p_f64(&self) -> f64 {
        self.p_f64
    }

    pub fn start_state(&self) -> StateVector {
        StateVector(self.root.start().to_vec())
    }

    fn check_bits(&self, bits: &[u8]) -> Result<(), Error> {
        if bits.len() != self.root.input_len() {
            return Err(Error::InputLength {
                got: bits.len(),
                want: self.root.input_len(),
            });
        }
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::BadBit {
                pos,
                value: bits[pos],
            });
        }
        Ok(())
    }

    /// Applies the full unitary (or its inverse) to `state` in place.
    pub fn apply_in_place(
        &self,
        bits: &[u8],
        state: &mut StateVector,
        dir: Direction,
    ) -> Result<(), Error> {
        self.check_bits(bits)?;
        if state.len() != self.root.dim() {
            return Err(Error::DimensionMismatch {
                got: state.len(),
                want: self.root.dim(),
            });
        }
        self.root.apply(bits, &mut state.0, dir);
        Ok(())
    }

    pub fn apply(
        &self,
        bits: &[u8],
        state: &StateVector,
        dir: Direction,
    ) -> Result<StateVector, Error> {
        let mut out = state.clone();
        self.apply_in_place(bits, &mut out, dir)?;
        Ok(out)
    }

    /// Runs the algorithm from its start state and measures
    /// `<start|A|start>` and the residual norm.
    pub fn overlap(&self, bits: &[u8]) -> Result<OverlapResult, Error> {
        self.check_bits(bits)?;
        let start = self.root.start();
        let mut state = start.to_vec();
        self.root.apply(bits, &mut state, Direction::Forward);
        let overlap = dot_conj(start, &state);
        let mut residual_sq = 0.0;
        for (s, phi) in state.iter().zip(start) {
            residual_sq += (s - overlap * phi).norm_sqr();
        }
        Ok(OverlapResult {
            overlap,
            residual_norm: residual_sq.sqrt(),
        })
    }

    /// Exact decision for a 0-computing plan: measures the projector onto
    /// the start state and returns the deterministic outcome.
    ///
    /// Errors if the plan's exact p is not 0, or if the winning outcome's
    /// probability is not within `tol` of 1 (which would mean the
    /// construction itself is broken).
    pub fn exact_decide(&self, bits: &[u8], tol: f64) -> Result<u8, Error> {
        if self.p != int(0) {
            return Err(Error::NotZeroComputing(self.p.to_string()));
        }
        let result = self.overlap(bits)?;
        let p_keep = result.overlap.norm_sqr();
        let (outcome, win) = if p_keep >= 0.5 {
            (0, p_keep)
        } else {
            (1, 1.0 - p_keep)
        };
        if (win - 1.0).abs() > tol {
            return Err(Error::DecisionNotExact {
                prob: win,
                tol,
            });
        }
        Ok(outcome)
    }

    /// Builds the full unitary column by column (debugging/cross-check
    /// oracle; cost is `dim` applications).
    pub fn to_dense_matrix(&self, bits: &[u8], guard: usize) -> Result<DenseMatrix, Error> {
        self.check_bits(bits)?;
        let dim = self.root.dim();
        if dim > guard {
            return Err(Error::DenseGuard { dim, guard });
        }
        let mut data = vec![Complex64::zero(); dim * dim];
        let mut col = vec![Complex64::zero(); dim];
        for j in 0..dim {
            col.fill(Complex64::zero());
            col[j] = Complex64::one();
            self.root.apply(bits, &mut col, Direction::Forward);
            for i in 0..dim {
                data[i * dim + j] = col[i];
            }
        }
        Ok(DenseMatrix { dim, data })
    }
}

// Spec-shaped convenience wrappers: each compiles the plan on the spot.

pub fn start_state(plan: &Plan) -> Result<StateVector, Error> {
    Ok(Simulator::new(plan)?.start_state())
}

pub fn apply(
    plan: &Plan,
    bits: &[u8],
    state: &StateVector,
    dir: Direction,
) -> Result<StateVector, Error> {
    Simulator::new(plan)?.apply(bits, state, dir)
}

pub fn overlap(plan: &Plan, bits: &[u8]) -> Result<OverlapResult, Error> {
    Simulator::new(plan)?.overlap(bits)
}

pub fn exact_decide(plan: &Plan, bits: &[u8]) -> Result<u8, Error> {
    Simulator::new(plan)?.exact_decide(bits, crate::DEFAULT_TOL)
}

pub fn to_dense_matrix(plan: &Plan, bits: &[u8]) -> Result<DenseMatrix, Error> {
    Simulator::new(plan)?.to_dense_matrix(bits, DENSE_GUARD)
}

// ---------------------------------------------------------------------------
// Dense matrices
// ---------------------------------------------------------------------------

/// Row-major complex matrix, used as a cross-check oracle at small
/// dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        let mut out = vec![Complex64::zero(); self.dim];
        for i in 0..self.dim {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            out[i] = row.iter().zip(v).map(|(m, x)| m * x).sum();
        }
        out
    }

    /// Max absolute entry of `M* M - I` (O(dim^3); intended for small dims).
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::zero();
                for k in 0..n {
                    acc += self.get(k, i).conj() * self.get(k, j);
                }
                let expect = if i == j {
                    Complex64::one()
                } else {
                    Complex64::zero()
                };
                worst = worst.max((acc - expect).norm());
            }
        }
        worst
    }

    /// CSV dump: row-major, two fields ("re,im") per matrix entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.dim {
            let mut first = true;
            for j in 0..self.dim {
                let z = self.get(i, j);
                if !first {
                    out.push(',');
                }
                out.push_str(&format!("{:e},{:e}", z.re, z.im));
                first = false;
            }
            out.push('\n');
        }
        out
    }
}
