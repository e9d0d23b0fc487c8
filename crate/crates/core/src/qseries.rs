//! Exact q-series with fractional exponents and honest truncation.
//!
//! A [`FracQSeries`] is a finite map `k -> c_k` representing
//! `sum_k c_k q^(k/den)`, together with `trunc`: the first exponent
//! numerator about which *nothing* is claimed.  Every arithmetic operation
//! propagates `trunc` pessimistically, so a result never pretends to know a
//! coefficient its inputs could not determine.  In particular, with
//! `low(x)` the smallest stored key (or `trunc` for the zero series):
//!
//! * `trunc(a + b) = min(trunc a, trunc b)`
//! * `trunc(a * b) = min(trunc a + low b, trunc b + low a)`
//! * `trunc(a / b) = min(trunc a - low b, trunc b - 2 low b + low a)`
//!
//! Exponents with `k >= trunc` are silently dropped rather than stored;
//! asking for such a coefficient is a caller bug and panics.
//!
//! The standard expansions live here too: the Dedekind eta function (den 24),
//! the weight 2 and 4 Eisenstein series, general eta quotients, and the
//! distinguished level 6 function with principal part `q^-1`.

use std::collections::BTreeMap;
use std::fmt::Debug;

use rug::{Integer, Rational};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::numctx::{sigma1, sigma3, BigComplex};

/// Coefficient ring for a series.  All constructors are instance-based so
/// that precision-carrying coefficients (floats) can mint zeros and ones of
/// the right width.
pub trait SeriesCoeff: Clone + PartialEq + Debug {
    fn is_zero(&self) -> bool;
    fn add_ref(&self, other: &Self) -> Self;
    fn sub_ref(&self, other: &Self) -> Self;
    fn mul_ref(&self, other: &Self) -> Self;
    fn neg_ref(&self) -> Self;
    /// Multiplicative inverse, if the coefficient is a unit.
    fn recip(&self) -> Option<Self>;
    fn one_like(&self) -> Self;
}

impl SeriesCoeff for Rational {
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn add_ref(&self, other: &Self) -> Self {
        Rational::from(self + other)
    }
    fn sub_ref(&self, other: &Self) -> Self {
        Rational::from(self - other)
    }
    fn mul_ref(&self, other: &Self) -> Self {
        Rational::from(self * other)
    }
    fn neg_ref(&self) -> Self {
        Rational::from(-self)
    }
    fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(Rational::from(self.recip_ref()))
        }
    }
    fn one_like(&self) -> Self {
        Rational::from(1)
    }
}

impl SeriesCoeff for BigComplex {
    fn is_zero(&self) -> bool {
        BigComplex::is_zero(self)
    }
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn recip(&self) -> Option<Self> {
        self.checked_recip().ok()
    }
    fn one_like(&self) -> Self {
        BigComplex::one(self.prec())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FracQSeries<C: SeriesCoeff> {
    den: u32,
    trunc: i64,
    coeffs: BTreeMap<i64, C>,
}

impl<C: SeriesCoeff> FracQSeries<C> {
    /// The zero series known through exponents `< trunc/den`.
    pub fn new(den: u32, trunc: i64) -> Self {
        assert!(den >= 1, "exponent denominator must be positive");
        FracQSeries {
            den,
            trunc,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn den(&self) -> u32 {
        self.den
    }

    pub fn trunc(&self) -> i64 {
        self.trunc
    }

    /// Smallest stored exponent numerator; `trunc` for the zero series
    /// (the best available lower bound on the order of vanishing).
    pub fn low(&self) -> i64 {
        self.coeffs.keys().next().copied().unwrap_or(self.trunc)
    }

    pub fn is_zero_series(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&i64, &C)> {
        self.coeffs.iter()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient at exponent numerator `k`.  `None` means an exact zero.
    /// Panics when `k >= trunc`: that coefficient was never computed.
    pub fn coeff(&self, k: i64) -> Option<&C> {
        assert!(
            k < self.trunc,
            "coefficient q^({k}/{}) requested beyond truncation {}",
            self.den,
            self.trunc
        );
        self.coeffs.get(&k)
    }

    pub fn set_coeff(&mut self, k: i64, c: C) {
        assert!(k < self.trunc, "cannot set coefficient beyond truncation");
        if c.is_zero() {
            self.coeffs.remove(&k);
        } else {
            self.coeffs.insert(k, c);
        }
    }

    pub fn add_to_coeff(&mut self, k: i64, c: &C) {
        if c.is_zero() {
            return;
        }
        assert!(k < self.trunc, "cannot touch coefficient beyond truncation");
        let updated = match self.coeffs.get(&k) {
            Some(old) => old.add_ref(c),
            None => c.clone(),
        };
        if updated.is_zero() {
            self.coeffs.remove(&k);
        } else {
            self.coeffs.insert(k, updated);
        }
    }

    pub fn neg(&self) -> Self {
        FracQSeries {
            den: self.den,
            trunc: self.trunc,
            coeffs: self
                .coeffs
                .iter()
                .map(|(&k, c)| (k, c.neg_ref()))
                .collect(),
        }
    }

    pub fn scale_coeff(&self, s: &C) -> Self {
        let mut out = FracQSeries::new(self.den, self.trunc);
        if s.is_zero() {
            return out;
        }
        for (&k, c) in &self.coeffs {
            out.set_coeff(k, c.mul_ref(s));
        }
        out
    }

    fn common_den(&self, other: &Self) -> (u32, i64, i64) {
        let g = gcd_u32(self.den, other.den);
        let l = (self.den / g) as i64 * other.den as i64;
        assert!(l <= u32::MAX as i64, "exponent denominator overflow");
        (l as u32, l / self.den as i64, l / other.den as i64)
    }

    /// Rewrite over a denominator that `den` divides (exponent values kept).
    pub fn with_den(&self, new_den: u32) -> Result<Self> {
        if new_den % self.den != 0 {
            return Err(Error::validation(format!(
                "cannot pass from exponent denominator {} to {}",
                self.den, new_den
            )));
        }
        let f = (new_den / self.den) as i64;
        Ok(FracQSeries {
            den: new_den,
            trunc: self.trunc * f,
            coeffs: self.coeffs.iter().map(|(&k, c)| (k * f, c.clone())).collect(),
        })
    }

    /// Reduce the denominator by the gcd of all keys and `den`.
    pub fn normalize_den(&self) -> Self {
        let mut g = self.den as i64;
        for &k in self.coeffs.keys() {
            g = gcd_i64(g, k.abs());
            if g == 1 {
                return self.clone();
            }
        }
        if g <= 1 {
            return self.clone();
        }
        FracQSeries {
            den: (self.den as i64 / g) as u32,
            trunc: div_ceil_i64(self.trunc, g),
            coeffs: self.coeffs.iter().map(|(&k, c)| (k / g, c.clone())).collect(),
        }
    }

    /// Substitute q^(1/den) -> q^(d/den), i.e. f(q) -> f(q^d).
    pub fn scale_variable(&self, d: u32) -> Self {
        assert!(d >= 1);
        let d = d as i64;
        FracQSeries {
            den: self.den,
            trunc: self.trunc.checked_mul(d).expect("trunc overflow"),
            coeffs: self.coeffs.iter().map(|(&k, c)| (k * d, c.clone())).collect(),
        }
    }

    /// Multiply by q^(dk/den): shift all exponents.
    pub fn shift(&self, dk: i64) -> Self {
        FracQSeries {
            den: self.den,
            trunc: self.trunc + dk,
            coeffs: self.coeffs.iter().map(|(&k, c)| (k + dk, c.clone())).collect(),
        }
    }

    /// Forget coefficients at exponents >= new_trunc (never extends).
    pub fn truncate_to(&self, new_trunc: i64) -> Self {
        let t = new_trunc.min(self.trunc);
        FracQSeries {
            den: self.den,
            trunc: t,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(&k, _)| k < t)
                .map(|(&k, c)| (k, c.clone()))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let (den, fa, fb) = self.common_den(other);
        let trunc = (self.trunc * fa).min(other.trunc * fb);
        let mut out = FracQSeries::new(den, trunc);
        for (&k, c) in &self.coeffs {
            if k * fa < trunc {
                out.add_to_coeff(k * fa, c);
            }
        }
        for (&k, c) in &other.coeffs {
            if k * fb < trunc {
                out.add_to_coeff(k * fb, c);
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (den, fa, fb) = self.common_den(other);
        let (ta, tb) = (self.trunc * fa, other.trunc * fb);
        let (la, lb) = (self.low() * fa, other.low() * fb);
        let trunc = (ta + lb).min(tb + la);
        let mut out = FracQSeries::new(den, trunc);
        for (&i, ci) in &self.coeffs {
            for (&j, cj) in &other.coeffs {
                let k = i * fa + j * fb;
                if k < trunc {
                    out.add_to_coeff(k, &ci.mul_ref(cj));
                }
            }
        }
        out
    }

    /// Multiplicative inverse.  Requires an invertible leading coefficient;
    /// the result is known through `trunc - 2 low` exponents.
    pub fn recip(&self) -> Result<Self> {
        let lb = self.low();
        let lead = self.coeffs.get(&lb).ok_or(Error::SeriesDivision)?;
        let lead_inv = lead.recip().ok_or(Error::SeriesDivision)?;
        let trunc = self.trunc - 2 * lb;
        let mut out: FracQSeries<C> = FracQSeries::new(self.den, trunc);
        // (out * self)_n = delta_{n,0}; solve for out_m ascending
        let mut m = -lb;
        while m < trunc {
            let mut s = if m + lb == 0 {
                Some(lead.one_like())
            } else {
                None
            };
            for (&j, rj) in out.coeffs.range(..m) {
                if let Some(bk) = self.coeffs.get(&(m + lb - j)) {
                    let prod = rj.mul_ref(bk);
                    s = Some(match s {
                        Some(acc) => acc.sub_ref(&prod),
                        None => prod.neg_ref(),
                    });
                }
            }
            if let Some(s) = s {
                let val = s.mul_ref(&lead_inv);
                out.set_coeff(m, val);
            }
            m += 1;
        }
        Ok(out)
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        // align denominators first so recip's truncation is commensurable
        let (den, _, _) = self.common_den(other);
        let a = self.with_den(den)?;
        let b = other.with_den(den)?;
        Ok(a.mul(&b.recip()?))
    }

    /// Integer power; negative exponents go through the inverse.
    pub fn pow_i64(&self, n: i64) -> Result<Self> {
        if n == 0 {
            let one = self
                .coeffs
                .values()
                .next()
                .map(|c| c.one_like())
                .ok_or_else(|| Error::validation("0^0 for the zero series"))?;
            // knowledge window of x^0: conservatively that of x shifted to 0
            let mut out = FracQSeries::new(self.den, self.trunc - self.low());
            out.set_coeff(0, one);
            return Ok(out);
        }
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc: Option<Self> = None;
        let mut sq = base;
        loop {
            if e & 1 == 1 {
                acc = Some(match acc {
                    Some(a) => a.mul(&sq),
                    None => sq.clone(),
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            sq = sq.mul(&sq);
        }
        Ok(acc.unwrap())
    }
}

impl FracQSeries<Rational> {
    pub fn one(den: u32, trunc: i64) -> Self {
        Self::monomial(0, Rational::from(1), den, trunc)
    }

    pub fn monomial(k: i64, c: Rational, den: u32, trunc: i64) -> Self {
        let mut s = FracQSeries::new(den, trunc);
        s.set_coeff(k, c);
        s
    }

    /// Coefficient as an owned rational, zero when absent.
    pub fn coeff_rat(&self, k: i64) -> Rational {
        self.coeff(k).cloned().unwrap_or_default()
    }

    pub fn scale_rational(&self, s: &Rational) -> Self {
        self.scale_coeff(s)
    }

    pub fn to_complex(&self, bits: u32) -> FracQSeries<BigComplex> {
        FracQSeries {
            den: self.den,
            trunc: self.trunc,
            coeffs: self
                .coeffs
                .iter()
                .map(|(&k, c)| (k, BigComplex::from_rational(c, bits)))
                .collect(),
        }
    }

    /// `{den, trunc, coeffs: [[k, num, denom], ...]}` with keys ascending.
    pub fn to_json(&self) -> Value {
        let coeffs: Vec<Value> = self
            .coeffs
            .iter()
            .map(|(&k, c)| {
                json!([
                    k,
                    integer_to_json(c.numer()),
                    integer_to_json(c.denom())
                ])
            })
            .collect();
        json!({
            "den": self.den,
            "trunc": self.trunc,
            "coeffs": coeffs,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("series must be a JSON object".into()))?;
        let den = obj
            .get("den")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("series needs a positive integer `den`".into()))?;
        let trunc = obj
            .get("trunc")
            .and_then(Value::as_i64)
            .ok_or_else(|| Error::Parse("series needs an integer `trunc`".into()))?;
        if den == 0 || den > u32::MAX as u64 {
            return Err(Error::Parse(format!("bad exponent denominator {den}")));
        }
        let mut s = FracQSeries::new(den as u32, trunc);
        let coeffs = obj
            .get("coeffs")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("series needs a `coeffs` array".into()))?;
        for item in coeffs {
            let triple = item
                .as_array()
                .filter(|a| a.len() == 3)
                .ok_or_else(|| Error::Parse("each coefficient must be [k, num, denom]".into()))?;
            let k = triple[0]
                .as_i64()
                .ok_or_else(|| Error::Parse("coefficient exponent must be an integer".into()))?;
            let num = integer_from_json(&triple[1])?;
            let denom = integer_from_json(&triple[2])?;
            if denom == 0 {
                return Err(Error::Parse("zero coefficient denominator".into()));
            }
            if k >= trunc {
                return Err(Error::Parse(format!(
                    "coefficient at {k} lies beyond trunc {trunc}"
                )));
            }
            s.set_coeff(k, Rational::from((num, denom)));
        }
        Ok(s)
    }
}

fn integer_to_json(i: &Integer) -> Value {
    if let Some(small) = i.to_i64() {
        Value::from(small)
    } else {
        // arbitrary_precision keeps every digit of a numeric literal
        serde_json::from_str::<Value>(&i.to_string()).expect("integer literal is valid JSON")
    }
}

fn integer_from_json(v: &Value) -> Result<Integer> {
    match v {
        Value::Number(n) => n
            .to_string()
            .parse::<Integer>()
            .map_err(|_| Error::Parse(format!("bad integer {n}"))),
        _ => Err(Error::Parse("expected an integer coefficient".into())),
    }
}

fn gcd_u32(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd_u32(b, a % b)
    }
}

fn gcd_i64(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd_i64(b, a % b)
    }
}

fn div_ceil_i64(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    if a >= 0 {
        (a + b - 1) / b
    } else {
        -((-a) / b)
    }
}

// ---------------------------------------------------------------------------
// Standard expansions

/// Dedekind eta: q^(1/24) prod_{n=1}^{terms} (1 - q^n), exponent
/// denominator 24, reliable through q^(terms + 1/24).
pub fn eta(terms: i64) -> FracQSeries<Rational> {
    assert!(terms >= 1);
    // build prod (1 - q^n) over den 1, then move to den 24 and shift by 1
    let mut prod = FracQSeries::<Rational>::one(1, terms + 1);
    for n in 1..=terms {
        let mut factor = FracQSeries::<Rational>::one(1, terms + 1);
        factor.set_coeff(n, Rational::from(-1));
        prod = prod.mul(&factor);
    }
    prod.with_den(24).unwrap().shift(1)
}

/// E2 = 1 - 24 sum sigma_1(n) q^n (quasimodular, weight 2).
pub fn eisenstein_e2(terms: i64) -> FracQSeries<Rational> {
    assert!(terms >= 1);
    let mut s = FracQSeries::<Rational>::one(1, terms + 1);
    for n in 1..=terms {
        s.set_coeff(n, Rational::from((-24, 1)) * sigma1(n as u64));
    }
    s
}

/// E4 = 1 + 240 sum sigma_3(n) q^n.
pub fn eisenstein_e4(terms: i64) -> FracQSeries<Rational> {
    assert!(terms >= 1);
    let mut s = FracQSeries::<Rational>::one(1, terms + 1);
    for n in 1..=terms {
        s.set_coeff(n, Rational::from(sigma3(n as u64) * 240u32));
    }
    s
}

/// prod_d eta(d z)^(e_d) as an exact series over den 24, valid through
/// q^terms at least (asserted).
pub fn eta_quotient_series(
    exponents: &BTreeMap<u32, i64>,
    terms: i64,
) -> Result<FracQSeries<Rational>> {
    assert!(terms >= 1);
    let margin = terms + 8;
    let mut acc = FracQSeries::<Rational>::one(24, 24 * margin);
    for (&d, &e) in exponents {
        if d == 0 || e == 0 {
            continue;
        }
        let factor = eta(margin).scale_variable(d).pow_i64(e)?;
        acc = acc.mul(&factor);
    }
    let want = 24 * terms + 1;
    if acc.trunc < want {
        return Err(Error::validation(format!(
            "eta quotient truncation fell to {} (< {want})",
            acc.trunc
        )));
    }
    Ok(acc.truncate_to(want))
}

/// The weight 0, level 6 function with expansion
/// `q^-1 - 4 - 83 q - 296 q^2 - ...`: a linear combination of E4 rescalings
/// divided by (eta(z) eta(2z) eta(3z) eta(6z))^2.  It is holomorphic on the
/// upper half-plane, has its only pole at the infinite cusp, and integral
/// coefficients.
pub fn build_f6(terms: i64) -> FracQSeries<Rational> {
    assert!(terms >= 1);
    let t = terms + 4;
    let e4 = eisenstein_e4(t);
    let combo = e4
        .add(&e4.scale_variable(2).scale_rational(&Rational::from(4)))
        .sub(&e4.scale_variable(3).scale_rational(&Rational::from(9)))
        .sub(&e4.scale_variable(6).scale_rational(&Rational::from(36)))
        .scale_rational(&Rational::from((-1, 40)));
    let exps: BTreeMap<u32, i64> = [(1u32, 2i64), (2, 2), (3, 2), (6, 2)].into_iter().collect();
    let etasq = eta_quotient_series(&exps, t).expect("eta quotient for level 6");
    let f = combo
        .div(&etasq)
        .expect("eta quotient has unit leading coefficient")
        .normalize_den();
    assert!(f.den() == 1 && f.trunc() >= terms + 1, "insufficient margin");
    f.truncate_to(terms + 1)
}
