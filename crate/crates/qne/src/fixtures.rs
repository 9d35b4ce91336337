//! Hand-coded reference algorithms, written out as explicit matrices.
//!
//! These are deliberately independent of the plan interpreter in [`crate::sim`]:
//! they multiply small dense real matrices step by step, so they can serve as
//! cross-check oracles for the matrix-free implementation. Everything here is
//! real-valued; complex types appear only at API boundaries.
//!
//! Three named fixtures are registered:
//!
//! - `one-query-ne`: the 4-state, 1-query algorithm whose final state
//!   separates NE = 0 from NE = 1 inputs (output-1 probability 8/9),
//! - `two-query-ne`: its reversible 2-query form Q, U1^-1 T U1, Q, which
//!   (-7/9)-computes NE and must agree with the interpreter's iterate(base)
//!   on the three query coordinates,
//! - `nested-ne2`: the 13-state nested construction for NE^2 (three parallel
//!   copies of the 2-query subroutine plus a collector coordinate), whose
//!   final state is orthogonal to every copy's start state when NE^2 = 0.

use num::complex::Complex64;

use crate::error::Error;
use crate::plan::{eval_ne, eval_ne_d, parse_plan};
use crate::sim::{Direction, Simulator};

const SQ3: f64 = 1.732050807568877293527446341505872367_f64;

/// `U1`: maps the uniform start state (0, 1/sqrt3, 1/sqrt3, 1/sqrt3) to the
/// first basis vector, and each remaining coordinate to a sign difference of
/// one variable pair (coordinate 1 reads x1 vs x3, coordinate 2 reads x2 vs
/// x1, coordinate 3 reads x3 vs x2). Orthogonal, so its inverse is the
/// transpose. Any unitary with the first property would do for the 2-query
/// subroutine; the pair assignment is what `one_query_final_state`'s
/// closed form promises.
const U1: [[f64; 4]; 4] = [
    [0.0, 1.0 / SQ3, 1.0 / SQ3, 1.0 / SQ3],
    [1.0 / SQ3, 1.0 / SQ3, 0.0, -1.0 / SQ3],
    [1.0 / SQ3, -1.0 / SQ3, 1.0 / SQ3, 0.0],
    [1.0 / SQ3, 0.0, -1.0 / SQ3, 1.0 / SQ3],
];

fn mul4(m: &[[f64; 4]; 4], v: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = (0..4).map(|j| m[i][j] * v[j]).sum();
    }
    out
}

fn transpose4(m: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = m[j][i];
        }
    }
    out
}

/// Sign query on coordinates 1..=3; the 0 coordinate carries no variable
/// index and is untouched.
fn query4(bits: &[u8; 3], v: &mut [f64; 4]) {
    for i in 0..3 {
        if bits[i] == 1 {
            v[i + 1] = -v[i + 1];
        }
    }
}

fn check_three_bits(bits: &[u8]) -> Result<[u8; 3], Error> {
    if bits.len() != 3 {
        return Err(Error::InputLength {
            got: bits.len(),
            want: 3,
        });
    }
    if let Some(pos) = bits.iter().position(|&b| b > 1) {
        return Err(Error::BadBit {
            pos,
            value: bits[pos],
        });
    }
    Ok([bits[0], bits[1], bits[2]])
}

fn start4() -> [f64; 4] {
    [0.0, 1.0 / SQ3, 1.0 / SQ3, 1.0 / SQ3]
}

fn one_query_real(bits: &[u8; 3]) -> [f64; 4] {
    let mut v = start4();
    query4(bits, &mut v);
    mul4(&U1, &v)
}

fn two_query_real(bits: &[u8; 3]) -> [f64; 4] {
    // Q, U1^-1 T U1, Q with T = diag(1, -1, -1, -1)
    let mut v = start4();
    query4(bits, &mut v);
    let mut w = mul4(&U1, &v);
    for a in w.iter_mut().skip(1) {
        *a = -*a;
    }
    let mut v = mul4(&transpose4(&U1), &w);
    query4(bits, &mut v);
    v
}

/// Final state of the 1-query algorithm on coordinates |0>, |1>, |2>, |3>:
/// amplitude of |0> is (sum of signs)/3; coordinate i > 0 carries the sign
/// difference of a variable pair, so it is nonzero only when NE = 1.
pub fn one_query_final_state(bits: &[u8]) -> Result<[Complex64; 4], Error> {
    let bits = check_three_bits(bits)?;
    let v = one_query_real(&bits);
    Ok(v.map(|x| Complex64::new(x, 0.0)))
}

/// Final state of the reversible 2-query form (Q, U1^-1 T U1, Q). Returns to
/// the start state when NE = 0; overlaps it at exactly -7/9 when NE = 1.
pub fn two_query_final_state(bits: &[u8]) -> Result<[Complex64; 4], Error> {
    let bits = check_three_bits(bits)?;
    let v = two_query_real(&bits);
    Ok(v.map(|x| Complex64::new(x, 0.0)))
}

// ---------------------------------------------------------------------------
// 13-state nested construction for NE^2
// ---------------------------------------------------------------------------

// Coordinate layout: 0 is the collector state; copy l in {0,1,2} occupies
// coordinates 1+4l ..= 4+4l, holding that copy's |0>,|1>,|2>,|3>.
const DIM3: usize = 13;

fn copy_block(l: usize) -> std::ops::Range<usize> {
    1 + 4 * l..5 + 4 * l
}

/// Embedded start state of copy `l` (unit vector).
fn basis_b(l: usize) -> [f64; DIM3] {
    let mut v = [0.0; DIM3];
    if l == 0 {
        v[0] = 1.0;
    } else {
        let s = start4();
        v[copy_block(l - 1)].copy_from_slice(&s);
    }
    v
}

fn dot13(a: &[f64; DIM3], b: &[f64; DIM3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The collector rotation: acts on span{b0, b1, b2, b3} where b0 is the
/// collector and b_l the copy start states, identity elsewhere.
/// b1 -> (b0 + b1 - b2)/sqrt3, b2 -> (b0 + b2 - b3)/sqrt3,
/// b3 -> (b0 + b3 - b1)/sqrt3, and (forced by unitarity)
/// b0 -> (b1 + b2 + b3)/sqrt3; maps the uniform combination of b1,b2,b3
/// onto b0.
fn apply_u2(v: &mut [f64; DIM3]) {
    let b: [[f64; DIM3]; 4] = [basis_b(0), basis_b(1), basis_b(2), basis_b(3)];
    let c: [f64; 4] = [dot13(&b[0], v), dot13(&b[1], v), dot13(&b[2], v), dot13(&b[3], v)];
    // images of b0..b3 expressed in the b basis
    const IMG: [[f64; 4]; 4] = [
        [0.0, 1.0, 1.0, 1.0],
        [1.0, 1.0, -1.0, 0.0],
        [1.0, 0.0, 1.0, -1.0],
        [1.0, -1.0, 0.0, 1.0],
    ];
    let mut out_c = [0.0; 4];
    for i in 0..4 {
        for j in 0..4 {
            out_c[j] += c[i] * IMG[i][j] / SQ3;
        }
    }
    for i in 0..4 {
        let delta = out_c[i] - c[i];
        for (vk, bk) in v.iter_mut().zip(&b[i]) {
            *vk += delta * bk;
        }
    }
}

/// Final state of the 13-coordinate nested algorithm for NE^2: three
/// parallel 2-query subroutines, then the collector rotation.
pub fn nested_final_state(bits: &[u8]) -> Result<[Complex64; DIM3], Error> {
    if bits.len() != 9 {
        return Err(Error::InputLength {
            got: bits.len(),
            want: 9,
        });
    }
    if let Some(pos) = bits.iter().position(|&b| b > 1) {
        return Err(Error::BadBit {
            pos,
            value: bits[pos],
        });
    }
    let mut v = [0.0; DIM3];
    for l in 0..3 {
        let block = two_query_real(&[bits[3 * l], bits[3 * l + 1], bits[3 * l + 2]]);
        let scaled = block.map(|x| x / SQ3);
        v[copy_block(l)].copy_from_slice(&scaled);
    }
    apply_u2(&mut v);
    Ok(v.map(|x| Complex64::new(x, 0.0)))
}

// ---------------------------------------------------------------------------
// Named fixture registry
// ---------------------------------------------------------------------------

/// A self-contained reference check runnable by name.
pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    run: fn(f64) -> Result<(), String>,
}

impl Fixture {
    /// Runs every check in the fixture; `tol` bounds overlap deviations
    /// (orthogonality checks use the tighter 1e-10 regardless).
    pub fn run(&self, tol: f64) -> Result<(), String> {
        (self.run)(tol)
    }
}

pub fn all() -> &'static [Fixture] {
    &FIXTURES
}

pub fn by_name(name: &str) -> Option<&'static Fixture> {
    FIXTURES.iter().find(|f| f.name == name)
}

static FIXTURES: [Fixture; 3] = [
    Fixture {
        name: "one-query-ne",
        description: "1-query, 4-state algorithm: output-1 probability is 0 when NE=0 and exactly 8/9 when NE=1",
        run: run_one_query,
    },
    Fixture {
        name: "two-query-ne",
        description: "reversible 2-query form: (-7/9)-computes NE and matches the interpreter's iterate(base) on the query coordinates",
        run: run_two_query,
    },
    Fixture {
        name: "nested-ne2",
        description: "13-state nested construction: final state orthogonal to all copy start states when NE^2=0, uniform residual when NE^2=1",
        run: run_nested_ne2,
    },
];

fn bits_of(index: usize, len: usize) -> Vec<u8> {
    (0..len).map(|i| ((index >> (len - 1 - i)) & 1) as u8).collect()
}

fn fail(fixture: &str, input: &[u8], what: &str) -> String {
    let s: String = input.iter().map(|b| char::from(b'0' + b)).collect();
    format!("{fixture}: input {s}: {what}")
}

fn run_one_query(tol: f64) -> Result<(), String> {
    const NAME: &str = "one-query-ne";
    for idx in 0..8usize {
        let bits = bits_of(idx, 3);
        let v = one_query_final_state(&bits).unwrap();
        let signs: Vec<f64> = bits.iter().map(|&b| if b == 1 { -1.0 } else { 1.0 }).collect();
        // closed-form amplitudes: (s1+s2+s3)/3 and the three pair differences
        let expect = [
            (signs[0] + signs[1] + signs[2]) / 3.0,
            (signs[0] - signs[2]) / 3.0,
            (signs[1] - signs[0]) / 3.0,
            (signs[2] - signs[1]) / 3.0,
        ];
        for (i, (&got, want)) in v.iter().zip(expect).enumerate() {
            if (got - Complex64::new(want, 0.0)).norm() > tol {
                return Err(fail(
                    NAME,
                    &bits,
                    &format!("amplitude {i} is {got} but the closed form gives {want}"),
                ));
            }
        }
        let p1: f64 = v[1..].iter().map(|a| a.norm_sqr()).sum();
        let want_p1 = if eval_ne(&bits).unwrap() == 1 { 8.0 / 9.0 } else { 0.0 };
        if (p1 - want_p1).abs() > tol {
            return Err(fail(
                NAME,
                &bits,
                &format!("output-1 probability {p1} (want {want_p1})"),
            ));
        }
    }
    Ok(())
}

fn run_two_query(tol: f64) -> Result<(), String> {
    const NAME: &str = "two-query-ne";
    let interp = Simulator::new(&parse_plan("iterate(base)").unwrap())
        .map_err(|e| format!("{NAME}: interpreter setup: {e}"))?;
    let start = start4();
    for idx in 0..8usize {
        let bits = bits_of(idx, 3);
        let v = two_query_final_state(&bits).unwrap();
        let overlap: f64 = v.iter().zip(start).map(|(a, s)| a.re * s).sum();
        let want = if eval_ne(&bits).unwrap() == 1 { -7.0 / 9.0 } else { 1.0 };
        if (overlap - want).abs() > tol {
            return Err(fail(
                NAME,
                &bits,
                &format!("start-state overlap {overlap} (want {want})"),
            ));
        }
        if v[0].norm() > 1e-10 {
            return Err(fail(
                NAME,
                &bits,
                &format!("collector coordinate is populated: {}", v[0]),
            ));
        }
        // bookkeeping map: fixture coordinates 1..=3 are the interpreter's 0..=2
        let final_interp = interp
            .apply(&bits, &interp.start_state(), Direction::Forward)
            .map_err(|e| format!("{NAME}: interpreter: {e}"))?;
        for i in 0..3 {
            let diff = (v[i + 1] - final_interp.as_slice()[i]).norm();
            if diff > 1e-10 {
                return Err(fail(
                    NAME,
                    &bits,
                    &format!("coordinate {} deviates from the interpreter by {diff}", i + 1),
                ));
            }
        }
    }
    Ok(())
}

fn run_nested_ne2(tol: f64) -> Result<(), String> {
    const NAME: &str = "nested-ne2";
    let b: [[f64; DIM3]; 4] = [basis_b(0), basis_b(1), basis_b(2), basis_b(3)];
    let mut residual_seen: Option<f64> = None;
    for idx in 0..512usize {
        let bits = bits_of(idx, 9);
        let v = nested_final_state(&bits).unwrap();
        let norm: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(fail(NAME, &bits, &format!("final state norm {norm}")));
        }
        let child = [
            eval_ne(&bits[0..3]).unwrap(),
            eval_ne(&bits[3..6]).unwrap(),
            eval_ne(&bits[6..9]).unwrap(),
        ];
        let proj: Vec<f64> = (1..4)
            .map(|l| v.iter().zip(&b[l]).map(|(a, x)| a.re * x).sum())
            .collect();
        if eval_ne_d(2, &bits).unwrap() == 0 {
            // orthogonal to every copy start state
            for (l, ov) in proj.iter().enumerate() {
                if ov.abs() > 1e-10 {
                    return Err(fail(
                        NAME,
                        &bits,
                        &format!("overlap {ov} with copy {} start state (want 0)", l + 1),
                    ));
                }
            }
            let collector: f64 = v.iter().zip(&b[0]).map(|(a, x)| a.re * x).sum();
            let want = if child == [0, 0, 0] { 1.0 } else { -7.0 / 9.0 };
            if (collector - want).abs() > tol {
                return Err(fail(
                    NAME,
                    &bits,
                    &format!("collector amplitude {collector} (want {want})"),
                ));
            }
        } else {
            // residual in the copy-start span is the same for every NE^2=1
            // input: norm^2 = 512/729
            let res_sq: f64 = proj.iter().map(|x| x * x).sum();
            if (res_sq - 512.0 / 729.0).abs() > tol {
                return Err(fail(
                    NAME,
                    &bits,
                    &format!("copy-span residual^2 {res_sq} (want {})", 512.0 / 729.0),
                ));
            }
            if let Some(prev) = residual_seen {
                if (res_sq - prev).abs() > tol {
                    return Err(fail(NAME, &bits, "residual differs across NE^2=1 inputs"));
                }
            }
            residual_seen = Some(res_sq);
        }
    }
    Ok(())
}
