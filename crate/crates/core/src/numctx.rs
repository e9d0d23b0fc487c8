//! Numeric context: working precision, arbitrary-precision complex numbers,
//! and the small number-theoretic kernels (divisor sums, Kronecker symbols,
//! Hurwitz class numbers, discriminant splitting) shared by every module.
//!
//! Real arithmetic is MPFR via [`rug::Float`]; a complex value is an explicit
//! re/im pair so the principal branch choices stay visible in this crate
//! rather than hidden in a library.  All precisions are in bits.

use std::cmp::max;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Precision

/// Working precision: mantissa bits for MPFR plus the tolerance used when a
/// computed float is claimed to be an integer (or a rational with known
/// denominator).  The tolerance is deliberately coarse compared to the
/// precision so that honest numerical noise never trips recognition, while a
/// genuinely non-integral value (off by some 1/w) always does.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Precision {
    bits: u32,
    int_tol: f64,
}

impl Precision {
    pub const DEFAULT_BITS: u32 = 256;

    /// 2^-40: default integer-recognition tolerance.
    pub fn default_int_tol() -> f64 {
        2f64.powi(-40)
    }

    pub fn new(bits: u32) -> Result<Self> {
        Self::with_int_tol(bits, Self::default_int_tol())
    }

    pub fn with_int_tol(bits: u32, int_tol: f64) -> Result<Self> {
        if bits < 64 {
            return Err(Error::PrecisionTooLow(bits));
        }
        if !(int_tol > 0.0 && int_tol < 0.25) {
            return Err(Error::ToleranceOutOfRange(int_tol));
        }
        Ok(Precision { bits, int_tol })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn int_tol(&self) -> f64 {
        self.int_tol
    }

    /// Same tolerance, twice the mantissa.  Used by the escalation loops.
    pub fn doubled(&self) -> Self {
        Precision {
            bits: self.bits * 2,
            int_tol: self.int_tol,
        }
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision {
            bits: Self::DEFAULT_BITS,
            int_tol: Self::default_int_tol(),
        }
    }
}

pub fn pi(bits: u32) -> Float {
    Float::with_val(bits, Constant::Pi)
}

pub fn float_from_rational(q: &Rational, bits: u32) -> Float {
    Float::with_val(bits, q)
}

// ---------------------------------------------------------------------------
// Complex numbers

/// Arbitrary-precision complex number.  Operations are total in the MPFR
/// sense (1/0 is an infinity, not a panic); evaluation entry points are
/// expected to call [`BigComplex::is_finite`] before letting a value escape.
#[derive(Clone, PartialEq)]
pub struct BigComplex {
    re: Float,
    im: Float,
}

impl BigComplex {
    pub fn new(re: Float, im: Float) -> Self {
        BigComplex { re, im }
    }

    pub fn zero(bits: u32) -> Self {
        BigComplex {
            re: Float::new(bits),
            im: Float::new(bits),
        }
    }

    pub fn one(bits: u32) -> Self {
        BigComplex {
            re: Float::with_val(bits, 1),
            im: Float::new(bits),
        }
    }

    pub fn i(bits: u32) -> Self {
        BigComplex {
            re: Float::new(bits),
            im: Float::with_val(bits, 1),
        }
    }

    pub fn from_f64(re: f64, im: f64, bits: u32) -> Self {
        BigComplex {
            re: Float::with_val(bits, re),
            im: Float::with_val(bits, im),
        }
    }

    pub fn from_int(n: i64, bits: u32) -> Self {
        BigComplex {
            re: Float::with_val(bits, n),
            im: Float::new(bits),
        }
    }

    pub fn from_rational(q: &Rational, bits: u32) -> Self {
        BigComplex {
            re: Float::with_val(bits, q),
            im: Float::new(bits),
        }
    }

    pub fn re(&self) -> &Float {
        &self.re
    }

    pub fn im(&self) -> &Float {
        &self.im
    }

    pub fn into_parts(self) -> (Float, Float) {
        (self.re, self.im)
    }

    pub fn prec(&self) -> u32 {
        max(self.re.prec(), self.im.prec())
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        BigComplex {
            re: self.re.clone(),
            im: Float::with_val(self.im.prec(), -&self.im),
        }
    }

    /// Multiplication by i (quarter turn), exact.
    pub fn mul_i(&self) -> Self {
        BigComplex {
            re: Float::with_val(self.im.prec(), -&self.im),
            im: self.re.clone(),
        }
    }

    pub fn norm_sqr(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, &self.re * &self.re) + Float::with_val(p, &self.im * &self.im)
    }

    pub fn abs(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.re.clone().hypot(&self.im))
    }

    pub fn scale(&self, f: &Float) -> Self {
        let p = max(self.prec(), f.prec());
        BigComplex {
            re: Float::with_val(p, &self.re * f),
            im: Float::with_val(p, &self.im * f),
        }
    }

    pub fn scale_rational(&self, q: &Rational) -> Self {
        let f = float_from_rational(q, self.prec());
        self.scale(&f)
    }

    pub fn scale_int(&self, n: i64) -> Self {
        let p = self.prec();
        BigComplex {
            re: Float::with_val(p, &self.re * n),
            im: Float::with_val(p, &self.im * n),
        }
    }

    pub fn checked_recip(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n.is_zero() {
            return Err(Error::NonFinite);
        }
        let p = self.prec();
        Ok(BigComplex {
            re: Float::with_val(p, &self.re / &n),
            im: -Float::with_val(p, &self.im / &n),
        })
    }

    /// Principal square root: the branch with Re >= 0, and Im >= 0 on the
    /// negative real axis.  Uses the stable half-angle formulas; never forms
    /// sqrt of a negative real.
    pub fn sqrt(&self) -> Self {
        let p = self.prec();
        if self.is_zero() {
            return BigComplex::zero(p);
        }
        let r = self.abs();
        if self.re.is_sign_positive() && !self.re.is_zero() || self.re.is_zero() {
            // u = sqrt((|z| + re)/2) >= 0 is well-conditioned here.
            let u = Float::with_val(p, Float::with_val(p, &r + &self.re) / 2).sqrt();
            if u.is_zero() {
                // can only happen for z = 0, handled above
                return BigComplex::zero(p);
            }
            let v = Float::with_val(p, &self.im / Float::with_val(p, 2 * &u));
            BigComplex { re: u, im: v }
        } else {
            let w = Float::with_val(p, Float::with_val(p, &r - &self.re) / 2).sqrt();
            // sign(v) = sign(im), with +0 mapping to the upper branch
            let v = if self.im.is_sign_negative() && !self.im.is_zero() {
                -w
            } else {
                w
            };
            let u = Float::with_val(p, &self.im / Float::with_val(p, 2 * &v));
            BigComplex { re: u, im: v }
        }
    }

    /// Integer power by binary exponentiation (negative exponents go through
    /// the reciprocal; errors only on 0^-n).
    pub fn pow_i64(&self, n: i64) -> Result<Self> {
        let p = self.prec();
        if n == 0 {
            return Ok(BigComplex::one(p));
        }
        let base = if n < 0 {
            self.checked_recip()?
        } else {
            self.clone()
        };
        let mut e = n.unsigned_abs();
        let mut acc = BigComplex::one(p);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &sq;
            }
            e >>= 1;
            if e > 0 {
                sq = &sq * &sq;
            }
        }
        Ok(acc)
    }
}

impl fmt::Debug for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({} + {}i)",
            self.re.to_f64(),
            self.im.to_f64()
        )
    }
}

impl fmt::Display for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<BigComplex> for BigComplex {
            type Output = BigComplex;
            fn $method(self, rhs: BigComplex) -> BigComplex {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&BigComplex> for BigComplex {
            type Output = BigComplex;
            fn $method(self, rhs: &BigComplex) -> BigComplex {
                (&self).$method(rhs)
            }
        }
        impl $trait<BigComplex> for &BigComplex {
            type Output = BigComplex;
            fn $method(self, rhs: BigComplex) -> BigComplex {
                self.$method(&rhs)
            }
        }
    };
}

impl Add<&BigComplex> for &BigComplex {
    type Output = BigComplex;
    fn add(self, rhs: &BigComplex) -> BigComplex {
        let p = max(self.prec(), rhs.prec());
        BigComplex {
            re: Float::with_val(p, &self.re + &rhs.re),
            im: Float::with_val(p, &self.im + &rhs.im),
        }
    }
}
forward_binop!(Add, add);

impl Sub<&BigComplex> for &BigComplex {
    type Output = BigComplex;
    fn sub(self, rhs: &BigComplex) -> BigComplex {
        let p = max(self.prec(), rhs.prec());
        BigComplex {
            re: Float::with_val(p, &self.re - &rhs.re),
            im: Float::with_val(p, &self.im - &rhs.im),
        }
    }
}
forward_binop!(Sub, sub);

impl Mul<&BigComplex> for &BigComplex {
    type Output = BigComplex;
    fn mul(self, rhs: &BigComplex) -> BigComplex {
        let p = max(self.prec(), rhs.prec());
        let re = Float::with_val(p, &self.re * &rhs.re) - Float::with_val(p, &self.im * &rhs.im);
        let im = Float::with_val(p, &self.re * &rhs.im) + Float::with_val(p, &self.im * &rhs.re);
        BigComplex { re, im }
    }
}
forward_binop!(Mul, mul);

impl Div<&BigComplex> for &BigComplex {
    type Output = BigComplex;
    fn div(self, rhs: &BigComplex) -> BigComplex {
        let p = max(self.prec(), rhs.prec());
        let n = rhs.norm_sqr();
        let num = self * &rhs.conj();
        BigComplex {
            re: Float::with_val(p, &num.re / &n),
            im: Float::with_val(p, &num.im / &n),
        }
    }
}
forward_binop!(Div, div);

impl Neg for &BigComplex {
    type Output = BigComplex;
    fn neg(self) -> BigComplex {
        BigComplex {
            re: Float::with_val(self.re.prec(), -&self.re),
            im: Float::with_val(self.im.prec(), -&self.im),
        }
    }
}

impl Neg for BigComplex {
    type Output = BigComplex;
    fn neg(self) -> BigComplex {
        -&self
    }
}

/// e(z) = exp(2 pi i z).  The workhorse: |e(z)| = exp(-2 pi Im z).
pub fn e(z: &BigComplex) -> BigComplex {
    let p = z.prec();
    let two_pi = Float::with_val(p, 2) * pi(p);
    let modulus = (-Float::with_val(p, &two_pi * z.im())).exp();
    let angle = Float::with_val(p, &two_pi * z.re());
    let (s, c) = angle.sin_cos(Float::new(p));
    BigComplex {
        re: Float::with_val(p, &modulus * &c),
        im: Float::with_val(p, &modulus * &s),
    }
}

/// e(q) for rational q: a root of unity, computed after exact reduction of q
/// mod 1 so huge numerators cost no accuracy.
pub fn e_rational(q: &Rational, bits: u32) -> BigComplex {
    let mut frac = q.clone();
    let floor = frac.clone().floor().into_numer_denom().0;
    frac -= Rational::from(floor);
    let two_pi = Float::with_val(bits, 2) * pi(bits);
    let angle = Float::with_val(bits, &frac) * two_pi;
    let (s, c) = angle.sin_cos(Float::new(bits));
    BigComplex { re: c, im: s }
}

// ---------------------------------------------------------------------------
// Recognition

/// Nearest integer and the absolute residual |x - m|.  The residual is always
/// handed back to the caller: recognition never silently rounds.
pub fn nearest_integer(x: &Float) -> (Integer, Float) {
    let m = x
        .clone()
        .round()
        .to_integer()
        .unwrap_or_else(Integer::new);
    let res = Float::with_val(x.prec(), x - Float::with_val(x.prec(), &m)).abs();
    (m, res)
}

/// Accept x as the integer it is closest to, or report how far off it was.
pub fn check_integer(x: &Float, tol: f64) -> Result<Integer> {
    let (m, res) = nearest_integer(x);
    if res > tol {
        return Err(Error::NotAnInteger {
            value: format!("{}", x.to_f64()),
            residual: res.to_f64(),
            tol,
        });
    }
    Ok(m)
}

/// Nearest rational with the *given* denominator, plus residual.
pub fn nearest_rational_with_den(x: &Float, den: u64) -> (Rational, Float) {
    let p = x.prec();
    let scaled = Float::with_val(p, x * Float::with_val(p, den));
    let (num, _) = nearest_integer(&scaled);
    let q = Rational::from((num, Integer::from(den)));
    let res = Float::with_val(p, x - Float::with_val(p, &q)).abs();
    (q, res)
}

/// Continued-fraction rational reconstruction with a denominator bound.
/// Returns the best convergent with denominator <= max_den; the caller is
/// responsible for checking the residual against its own tolerance.
pub fn reconstruct_rational(x: &Float, max_den: u64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    let p = x.prec();
    let bound = Integer::from(max_den);
    let mut p_prev = Integer::from(1);
    let mut q_prev = Integer::from(0);
    let mut p_cur: Integer;
    let mut q_cur: Integer;

    let mut t = x.clone();
    let a0 = t.clone().floor().to_integer().ok_or(Error::NonFinite)?;
    p_cur = a0.clone();
    q_cur = Integer::from(1);
    t -= Float::with_val(p, &a0);

    for _ in 0..64 {
        if q_cur > bound {
            // overshot: previous convergent is the answer
            return Ok(Rational::from((p_prev, q_prev)));
        }
        // stop once the tail is numerically exhausted
        if t.clone().abs() < Float::with_val(p, 2f64).pow_bits(p) {
            break;
        }
        t = Float::with_val(p, t.recip_ref());
        let a = match t.clone().floor().to_integer() {
            Some(a) => a,
            None => break,
        };
        let p_next = Integer::from(&a * &p_cur) + &p_prev;
        let q_next = Integer::from(&a * &q_cur) + &q_prev;
        p_prev = std::mem::replace(&mut p_cur, p_next);
        q_prev = std::mem::replace(&mut q_cur, q_next);
        t -= Float::with_val(p, &a);
    }
    if q_cur <= bound {
        Ok(Rational::from((p_cur, q_cur)))
    } else {
        Ok(Rational::from((p_prev, q_prev)))
    }
}

trait PowBits {
    fn pow_bits(self, bits: u32) -> Float;
}
impl PowBits for Float {
    // 2^-(bits-8): the "numerically zero" threshold for a tail at this precision
    fn pow_bits(self, bits: u32) -> Float {
        let mut f = Float::with_val(self.prec(), 1);
        f >>= bits.saturating_sub(8);
        f
    }
}

// ---------------------------------------------------------------------------
// Divisor sums

/// sigma_1(n) as a rational, with the regularized value sigma_1(0) = -1/24
/// that the lift constant terms want.
pub fn sigma1(n: u64) -> Rational {
    if n == 0 {
        return Rational::from((-1, 24));
    }
    Rational::from(sigma_pow(n, 1))
}

/// sigma_3(n) for n >= 1 (Eisenstein E4 coefficients).
pub(crate) fn sigma3(n: u64) -> Integer {
    sigma_pow(n, 3)
}

fn sigma_pow(n: u64, k: u32) -> Integer {
    let mut total = Integer::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            total += Integer::from(d).pow(k);
            let e = n / d;
            if e != d {
                total += Integer::from(e).pow(k);
            }
        }
        d += 1;
    }
    total
}

// ---------------------------------------------------------------------------
// Kronecker symbol

/// Kronecker symbol (delta/b) for a discriminant delta (= 0, 1 mod 4) and any
/// integer b.  This is the real character attached to delta; for fundamental
/// delta it is periodic mod |delta|.
pub fn kronecker(delta: i64, b: i64) -> Result<i32> {
    match delta.rem_euclid(4) {
        0 | 1 => {}
        _ => return Err(Error::NotADiscriminant(delta)),
    }
    Ok(Integer::from(delta).kronecker(&Integer::from(b)))
}

// ---------------------------------------------------------------------------
// Hurwitz class numbers

/// Hurwitz class number H(n) for n = 0, 3 mod 4, by direct enumeration of
/// reduced positive definite forms of discriminant -n: forms equivalent to a
/// multiple of x^2+y^2 count 1/2, multiples of x^2+xy+y^2 count 1/3.  This is
/// the independent oracle the Gamma_0(N) class enumeration is checked against.
pub fn hurwitz_class_number(n: u64) -> Result<Rational> {
    if n == 0 || n % 4 == 1 || n % 4 == 2 {
        return Err(Error::BadClassNumberArgument(n));
    }
    let mut h = Rational::new();
    let b0 = if n % 4 == 0 { 0u64 } else { 1u64 };
    let mut b = b0;
    while 3 * b * b <= n {
        let m = b * b + n; // = 4ac
        let mut a = max(b, 1);
        while 4 * a * a <= m {
            if m % (4 * a) == 0 {
                let c = m / (4 * a);
                debug_assert!(c >= a);
                if b == a && a == c {
                    h += Rational::from((1, 3));
                } else if b == 0 && a == c {
                    h += Rational::from((1, 2));
                } else if b == 0 || b == a || a == c {
                    // boundary of the reduced domain: only b >= 0 counts
                    h += 1;
                } else {
                    // interior: both signs of b are reduced
                    h += 2;
                }
            }
            a += 1;
        }
        b += 2;
    }
    Ok(h)
}

// ---------------------------------------------------------------------------
// Discriminant splitting

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiscriminantSplit {
    /// Fundamental discriminant d0 < 0.
    pub d0: i64,
    /// Conductor: d = d0 * t^2.
    pub t: u64,
}

/// Factor a negative discriminant as d0 * t^2 with d0 fundamental.
pub fn split_discriminant(d: i64) -> Result<DiscriminantSplit> {
    if d >= 0 {
        return Err(Error::ExpectedNegativeDiscriminant(d));
    }
    if d.rem_euclid(4) > 1 {
        return Err(Error::NotADiscriminant(d));
    }
    let mut n = (-d) as u64;
    let mut square_free = 1u64;
    let mut sqrt_part = 1u64;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0u32;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            if e % 2 == 1 {
                square_free *= p;
            }
            sqrt_part *= p.pow(e / 2);
        }
        p += 1;
    }
    square_free *= n; // leftover prime
    let s = -(square_free as i64);
    if s.rem_euclid(4) == 1 {
        Ok(DiscriminantSplit {
            d0: s,
            t: sqrt_part,
        })
    } else {
        debug_assert!(sqrt_part % 2 == 0, "d = 0,1 mod 4 forces an even conductor here");
        Ok(DiscriminantSplit {
            d0: 4 * s,
            t: sqrt_part / 2,
        })
    }
}

/// Fundamental discriminants of either sign (1 counts as fundamental).
pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 0 {
        return false;
    }
    let r = d.rem_euclid(4);
    if r == 2 || r == 3 {
        return false;
    }
    if r == 1 {
        return is_squarefree(d.unsigned_abs());
    }
    // d = 0 mod 4: need d/4 squarefree and = 2 or 3 mod 4
    let q = d / 4;
    let qr = q.rem_euclid(4);
    (qr == 2 || qr == 3) && is_squarefree(q.unsigned_abs())
}

/// Squarefreeness by trial division; the arguments here stay tiny.
pub fn is_squarefree(mut n: u64) -> bool {
    if n == 0 {
        return false;
    }
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return false;
            }
        }
        p += 1;
    }
    true
}
