//! Traces of CM-values of modular functions, and the finite algebraic
//! formulas for the coefficients of Ramanujan's third-order mock theta
//! functions f(q) and ω(q) that they encode.
//!
//! For a weakly holomorphic modular function F of level N, a negative
//! discriminant D and r with D ≡ r² mod 4N, the two trace functions are
//!
//! ```text
//!   tr⁺_F(D,r) = Σ_{Q ∈ 𝒬⁺_{N,D,r}/Γ₀(N)} F(z_Q)/w_Q
//!   tr⁻_F(D,r) = Σ_{Q ∈ 𝒬⁻_{N,D,r}/Γ₀(N)} F(z_Q)/w_Q
//! ```
//!
//! where z_Q is the Heegner point of Q and w_Q the stabilizer weight.
//! Since Q ↦ −Q maps 𝒬⁺_{N,D,−r} bijectively onto 𝒬⁻_{N,D,r} with
//! z_{−Q} = z_Q and equal weights, the minus trace is computed as
//! tr⁺(D,−r) over positive definite classes.
//!
//! With N = 6 and the distinguished level-6 function F6 (see
//! [`crate::cmeval::eval_f6`]), finitely many such traces give the exact
//! mock theta coefficients:
//!
//! ```text
//!   a_f(n) = (i / 2√(24n−1)) · (tr⁺(1−24n, 1) − tr⁻(1−24n, 1))
//!   a_ω(n) = (−i / 8√|D|) · (tr⁺(D, r) − tr⁻(D, r)),
//!            D = 4−24m, r = 2, m = (n+1)/2   (n odd)
//!            D = 16−24m, r = 4, m = n/2+1    (n even)
//! ```
//!
//! All formula outputs are checked against direct q-series expansions of
//! f(q) = 1 + Σ q^{n²}/((1+q)···(1+qⁿ))² and
//! ω(q) = Σ q^{2n²+2n}/((1−q)(1−q³)···(1−q^{2n+1}))², which serve as
//! independent oracles (OEIS A000025 and A053254).

use rayon::prelude::*;
use rug::{Float, Integer, Rational};

use crate::cmeval;
use crate::error::{Error, Result};
use crate::numctx::{nearest_integer, split_discriminant, BigComplex, Precision};
use crate::qseries::FracQSeries;
use crate::quadforms::{enumerate_classes, heegner_point, Sign};

/// Ceiling for the automatic precision-doubling loops.
const MAX_ESCALATION_BITS: u32 = 1024;

/// Anything that can evaluate a Γ₀(N)-invariant function at a CM point.
///
/// Implementations must be `Sync`: the classes contributing to one trace
/// are evaluated in parallel.
pub trait CmEvaluator: Sync {
    fn eval(&self, z: &BigComplex, prec: Precision) -> Result<BigComplex>;
}

/// The constant function, useful because tr⁺_1(D,0) at level 1 is the
/// Hurwitz class number H(|D|).
pub struct Constant(pub Rational);

impl CmEvaluator for Constant {
    fn eval(&self, _z: &BigComplex, prec: Precision) -> Result<BigComplex> {
        Ok(BigComplex::from_rational(&self.0, prec.bits()))
    }
}

/// The level-6 modular function whose traces carry the mock theta
/// coefficients.  See [`crate::cmeval::eval_f6`] for its definition.
pub struct F6;

impl CmEvaluator for F6 {
    fn eval(&self, z: &BigComplex, prec: Precision) -> Result<BigComplex> {
        cmeval::eval_f6(z, prec)
    }
}

/// Both traces at one (D, r), with enough metadata to judge them.
#[derive(Clone, Debug)]
pub struct TraceValue {
    pub plus: BigComplex,
    pub minus: BigComplex,
    pub class_count_plus: usize,
    pub class_count_minus: usize,
    /// Crude a-posteriori bound: class count times the evaluation epsilon.
    pub err_bound: f64,
}

fn class_sum<E: CmEvaluator + ?Sized>(
    f: &E,
    n: u32,
    d: i64,
    r: i64,
    prec: Precision,
) -> Result<(BigComplex, usize)> {
    let classes = enumerate_classes(n, d, r, Sign::Plus)?;
    let terms: Result<Vec<BigComplex>> = classes
        .reps
        .par_iter()
        .zip(classes.w.par_iter())
        .map(|(q, &w)| {
            let z = heegner_point(q, prec)?;
            let v = f.eval(&z.value, prec)?;
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
            Ok(v.scale_rational(&Rational::from((1u32, w))))
        })
        .collect();
    // Summation happens here, sequentially and in the canonical class
    // order, so results are bit-identical regardless of thread count.
    let mut acc = BigComplex::zero(prec.bits());
    for t in terms? {
        acc = &acc + &t;
    }
    Ok((acc, classes.reps.len()))
}

/// tr⁺_F(D,r) and tr⁻_F(D,r) for F of level N.
///
/// The minus trace is evaluated as tr⁺(D,−r) through the negation
/// bijection; `enumerate_classes` asserts that bijection against a direct
/// enumeration in debug builds.
pub fn trace<E: CmEvaluator + ?Sized>(
    f: &E,
    n: u32,
    d: i64,
    r: i64,
    prec: Precision,
) -> Result<TraceValue> {
    let (plus, class_count_plus) = class_sum(f, n, d, r, prec)?;
    let (minus, class_count_minus) = class_sum(f, n, d, -r, prec)?;
    let eps = 2f64.powi(-((prec.bits() / 2) as i32));
    let err_bound =
        (((class_count_plus + class_count_minus).max(1)) as f64 * eps).max(f64::MIN_POSITIVE);
    Ok(TraceValue {
        plus,
        minus,
        class_count_plus,
        class_count_minus,
        err_bound,
    })
}

/// One mock theta coefficient as produced by the trace formula.
///
/// `value` is the real part of the (provably real) formula output; the
/// leftover imaginary residue is kept so callers can see how close the
/// computation came to the real axis.  No rounding to integers happens
/// here.
#[derive(Clone, Debug)]
pub struct MockCoeff {
    pub n: u64,
    /// Discriminant and residue the formula used.
    pub d: i64,
    pub r: i64,
    pub value: Float,
    pub imag_residual: f64,
    pub class_count_plus: usize,
    pub class_count_minus: usize,
    pub bits_used: u32,
}

/// Shared escalation loop: evaluate scale · i · (tr⁺ − tr⁻)(D, r) for F6
/// at level 6, doubling precision until the imaginary residue drops below
/// the tolerance.
fn mock_trace_formula(
    n: u64,
    d: i64,
    r: i64,
    scale_num: i64,
    scale_den: u32,
    prec: Precision,
) -> Result<MockCoeff> {
    let mut p = prec;
    loop {
        let tv = trace(&F6, 6, d, r, p)?;
        let diff = &tv.plus - &tv.minus;
        // scale / √|D| as an exact-input float product
        let bits = p.bits();
        let sqrt_abs_d = Float::with_val(bits, -d).sqrt();
        let factor = Float::with_val(bits, Rational::from((scale_num, scale_den))) / sqrt_abs_d;
        let out = diff.mul_i().scale(&factor);
        let residual = out.im().to_f64().abs();
        if residual < p.int_tol() {
            let (value, _) = out.into_parts();
            return Ok(MockCoeff {
                n,
                d,
                r,
                value,
                imag_residual: residual,
                class_count_plus: tv.class_count_plus,
                class_count_minus: tv.class_count_minus,
                bits_used: bits,
            });
        }
        if p.bits() >= MAX_ESCALATION_BITS {
            return Err(Error::PrecisionExhausted {
                bits: p.bits(),
                context: format!(
                    "imaginary residue {residual:e} of trace formula at D = {d}, r = {r}"
                ),
            });
        }
        p = p.doubled();
    }
}

/// n-th coefficient of the mock theta function f(q), n ≥ 1, via
/// (i / 2√(24n−1)) (tr⁺(1−24n, 1) − tr⁻(1−24n, 1)).
pub fn mock_f_coeff(n: u64, prec: Precision) -> Result<MockCoeff> {
    if n < 1 {
        return Err(Error::validation("mock theta coefficients start at n = 1"));
    }
    let d = 1 - 24 * n as i64;
    mock_trace_formula(n, d, 1, 1, 2, prec)
}

/// n-th coefficient of the mock theta function ω(q), n ≥ 1, via
/// (−i / 8√|D|) (tr⁺(D, r) − tr⁻(D, r)) with
/// D = 4 − 12(n+1), r = 2 for odd n and D = 16 − 24(n/2+1), r = 4 for
/// even n.
pub fn mock_omega_coeff(n: u64, prec: Precision) -> Result<MockCoeff> {
    if n < 1 {
        return Err(Error::validation("mock theta coefficients start at n = 1"));
    }
    let (d, r) = if n % 2 == 1 {
        let m = (n as i64 + 1) / 2;
        (4 - 24 * m, 2)
    } else {
        let m = n as i64 / 2 + 1;
        (16 - 24 * m, 4)
    };
    mock_trace_formula(n, d, r, -1, 8, prec)
}

/// Exact partial sum of f(q) = 1 + Σ_{n≥1} q^{n²} / ∏_{j=1}^{n}(1+q^j)²,
/// correct through q^terms.  Summands whose leading exponent n² exceeds
/// `terms` contribute nothing to the window and are omitted.
pub fn oracle_f(terms: i64) -> FracQSeries<Rational> {
    assert!(terms >= 1, "need at least one term");
    let t = terms + 1;
    let mut acc = FracQSeries::one(1, t);
    let mut partial = FracQSeries::one(1, t);
    let mut n: i64 = 1;
    while n * n <= terms {
        let lin = FracQSeries::one(1, t).add(&FracQSeries::monomial(n, Rational::from(1), 1, t));
        let sq = lin.mul(&lin);
        partial = partial.mul(&sq.recip().expect("unit constant term"));
        acc = acc.add(&partial.shift(n * n));
        n += 1;
    }
    acc
}

/// Exact partial sum of ω(q) = Σ_{n≥0} q^{2n²+2n} / ∏_{j=0}^{n}(1−q^{2j+1})²,
/// correct through q^terms.
pub fn oracle_omega(terms: i64) -> FracQSeries<Rational> {
    assert!(terms >= 1, "need at least one term");
    let t = terms + 1;
    let mut acc = FracQSeries::new(1, t);
    let mut partial = FracQSeries::one(1, t);
    let mut n: i64 = 0;
    while 2 * n * n + 2 * n <= terms {
        let j = 2 * n + 1;
        let lin = FracQSeries::one(1, t).sub(&FracQSeries::monomial(j, Rational::from(1), 1, t));
        let sq = lin.mul(&lin);
        partial = partial.mul(&sq.recip().expect("unit constant term"));
        acc = acc.add(&partial.shift(2 * n * n + 2 * n));
        n += 1;
    }
    acc
}

/// The two trace combinations that appear as holomorphic Fourier
/// coefficients of the weight-3/2 and weight-1/2 theta lifts, together
/// with their nearest integers.
///
/// For D = D₀t² (D₀ fundamental), the quantities
///
/// ```text
///   km      = 6 (tr⁺(D,r) + tr⁻(D,r))
///   millson = 6t · (i/√|D|) (tr⁺(D,r) − tr⁻(D,r))
/// ```
///
/// are rational integers whenever F has integral principal part and
/// integral expansion at ∞.  In every case observed so far they are
/// integers even without the factors 6 and 6t, so the report carries the
/// unfactored values too.
#[derive(Clone, Debug)]
pub struct IntegralityReport {
    pub n: u32,
    pub d: i64,
    pub r: i64,
    /// Conductor t from D = D₀ t².
    pub t: u64,
    pub km_value: Float,
    pub millson_value: Float,
    pub km_nearest: Integer,
    pub millson_nearest: Integer,
    /// max(distance to nearest integer, size of imaginary part).
    pub km_residual: f64,
    pub millson_residual: f64,
    /// km_value / 6 and millson_value / 6t.
    pub km_unfactored: Float,
    pub millson_unfactored: Float,
    pub bits_used: u32,
}

/// Compute the integrality report for F at (N, D, r), escalating
/// precision until both residuals clear the tolerance or the escalation
/// ceiling is reached.  This is a reporting operation: it never fails on
/// large residuals, it just returns them.
pub fn integrality_report<E: CmEvaluator + ?Sized>(
    f: &E,
    n: u32,
    d: i64,
    r: i64,
    prec: Precision,
) -> Result<IntegralityReport> {
    let split = split_discriminant(d)?;
    let mut p = prec;
    loop {
        let tv = trace(f, n, d, r, p)?;
        let bits = p.bits();

        let km = (&tv.plus + &tv.minus).scale_int(6);
        let millson_scale =
            Float::with_val(bits, 6 * split.t) / Float::with_val(bits, -d).sqrt();
        let millson = (&tv.plus - &tv.minus).mul_i().scale(&millson_scale);

        let (km_nearest, km_frac) = nearest_integer(km.re());
        let (millson_nearest, millson_frac) = nearest_integer(millson.re());
        let km_residual = km_frac.to_f64().abs().max(km.im().to_f64().abs());
        let millson_residual = millson_frac
            .to_f64()
            .abs()
            .max(millson.im().to_f64().abs());

        if (km_residual < p.int_tol() && millson_residual < p.int_tol())
            || p.bits() >= MAX_ESCALATION_BITS
        {
            let sixth = Rational::from((1, 6));
            let six_t = Rational::from((1u32, 6 * split.t));
            return Ok(IntegralityReport {
                n,
                d,
                r,
                t: split.t,
                km_unfactored: km.scale_rational(&sixth).into_parts().0,
                millson_unfactored: millson.scale_rational(&six_t).into_parts().0,
                km_value: km.into_parts().0,
                millson_value: millson.into_parts().0,
                km_nearest,
                millson_nearest,
                km_residual,
                millson_residual,
                bits_used: bits,
            });
        }
        p = p.doubled();
    }
}
