//! Holomorphic parts of the Kudla-Millson and Millson theta lifts, and the
//! finite formulas that fall out of them: regularized Petersson products
//! against the unary theta series, Weyl vectors of Borcherds products, and
//! the (twisted) Borcherds products themselves.
//!
//! Everything is driven by traces of CM values (see [`crate::traces`]).
//! For an input F of level N with principal part Σ a(−n)q^{−n} at ∞ that
//! vanishes at every other cusp, the holomorphic part of the Kudla-Millson
//! lift is the weight-3/2 form for the dual Weil representation whose
//! component r carries
//!
//! ```text
//!   Σ_{D<0, D≡r² (4N)} (tr⁺+tr⁻)(D,r) q^{−D/4N}
//!     + 4 δ_{r,0} Σ_{n≥0} a(−n) σ₁(n)
//!     − Σ_{b>0} b (δ_{b,r} + δ_{b,−r}) Σ_{n>0} a(−bn) q^{−b²/4N},
//! ```
//!
//! with σ₁(0) = −1/24, while the Millson lift is the weight-1/2 companion
//! with (i/√|D|)(tr⁺−tr⁻) in place of (tr⁺+tr⁻), no constant term, and
//! corrections (δ_{b,r} − δ_{b,−r}) Σ_{n>0} a(−bn) without the factor −b.
//! Here δ_{b,r} = 1 iff b ≡ r mod 2N.  The Millson lift extends to
//! Atkin-Lehner eigenforms of squarefree level: each exact divisor c ∥ N
//! contributes its ∞-corrections twisted by σ_c and weighted by the
//! eigenvalue ε_c.
//!
//! Pairing the lifted expansions against the principal part of a weight-1/2
//! form f for ρ (a [`CoeffTable`]) yields the finite formulas
//!
//! ```text
//!   −(√N/4π)(f, θ_{1/2})^reg = Σ c_f(D,r)(tr⁺+tr⁻)(D,r)
//!        + 4 c_f(0,0) Σ_{n≥0} â(−n)σ₁(n) − 2 Σ_{b>0} c_f(b²,b) b Σ_{n>0} â(−bn),
//!   −(1/2√N)(f, θ_{3/2})^reg = Σ c_f(D,r)(i/√|D|)(tr⁺−tr⁻)(D,r)
//!        + 2 Σ_{b>0} c_f(b²,b) Σ_{n>0} â(−bn),
//! ```
//!
//! (â normalized so â(0) = 1), and the Weyl vector of the Borcherds product
//! Ψ(z,f) at the cusp 1/c, c ∥ N, is the same kind of sum with the table
//! keys twisted by σ_c.  The products are expanded exactly:
//! Ψ(z,f) = q^{ρ_∞} Π_{n>0} (1−qⁿ)^{c_f(n²,n)}, and for a fundamental
//! discriminant Δ ≠ 1 with Δ ≡ r² mod 4N the twisted product
//! Ψ_{Δ,r}(z,f) = Π_{n>0} Π_{b mod |Δ|} (1 − e(b/Δ)qⁿ)^{(Δ|b) c_f(Δn²,rn)}.

use std::collections::BTreeMap;

use rug::{Float, Rational};
use serde_json::{json, Value};

use crate::cmeval;
use crate::error::{Error, Result};
use crate::numctx::{
    e_rational, float_from_rational, is_fundamental_discriminant, is_squarefree, kronecker, pi,
    reconstruct_rational, sigma1, BigComplex, Precision,
};
use crate::qseries::{FracQSeries, SeriesCoeff};
use crate::traces::{trace, CmEvaluator};
use crate::weilrep::{atkin_lehner_sigma, Rep, VVForm};

// ---------------------------------------------------------------------------
// Input functions

/// How a [`WhmfSpec`] is evaluated at points of the upper half-plane.
#[derive(Clone, Debug)]
pub enum EvalKind {
    /// A constant function (level 1).
    Constant(Rational),
    /// `scale · Π_j (t(z) − s_j)` where `t(z) = Π_d η(dz)^{e_d}`.
    ///
    /// This covers every function this crate constructs: eta quotients
    /// themselves (a single shift 0) and products of a Hauptmodul minus its
    /// values at cusps.
    EtaShiftProduct {
        exponents: BTreeMap<u32, i64>,
        shifts: Vec<Rational>,
        scale: Rational,
    },
    /// The distinguished level-6 eigenform evaluated through
    /// [`crate::cmeval::eval_f6`].
    Level6,
}

/// A weakly holomorphic modular function of level N: its q-expansion at ∞
/// (exact, integer exponents), its behavior at the other cusps, and a way
/// to evaluate it at CM points.
///
/// The expansion only needs to resolve the principal part and a short tail;
/// all formulas here read a(−n) for n ≥ 0 and nothing deeper.
#[derive(Clone, Debug)]
pub struct WhmfSpec {
    n: u32,
    expansion: FracQSeries<Rational>,
    vanishes_at_other_cusps: bool,
    al_eigenvalues: Option<BTreeMap<u32, i64>>,
    eval: EvalKind,
    normalization: Rational,
}

impl WhmfSpec {
    /// Wrap an expansion and an evaluator.  The constant term must be
    /// nonzero; it normalizes the trace identities.
    pub fn new(
        n: u32,
        expansion: FracQSeries<Rational>,
        vanishes_at_other_cusps: bool,
        eval: EvalKind,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::UnsupportedLevel(0));
        }
        if expansion.den() != 1 {
            return Err(Error::validation(
                "input expansions use integer exponents (denominator 1)",
            ));
        }
        if expansion.trunc() < 1 {
            return Err(Error::validation(
                "expansion window must include the constant term",
            ));
        }
        let a0 = expansion.coeff_rat(0);
        if a0 == 0 {
            return Err(Error::validation(
                "constant term vanishes; the trace identities need a(0) != 0",
            ));
        }
        Ok(WhmfSpec {
            n,
            expansion,
            vanishes_at_other_cusps,
            al_eigenvalues: None,
            eval,
            normalization: a0.recip(),
        })
    }

    /// Attach Atkin-Lehner eigenvalues ε_c = ±1 for every exact divisor
    /// c ∥ N.  Requires squarefree N (so that every divisor is exact) and a
    /// complete set of eigenvalues with ε_1 = 1.
    pub fn with_al_eigenvalues(mut self, eigenvalues: BTreeMap<u32, i64>) -> Result<Self> {
        if !is_squarefree(self.n as u64) {
            return Err(Error::validation(
                "Atkin-Lehner eigenvalue data needs a squarefree level",
            ));
        }
        for (&c, &e) in &eigenvalues {
            atkin_lehner_sigma(self.n, c)?;
            if e != 1 && e != -1 {
                return Err(Error::validation("Atkin-Lehner eigenvalues are +1 or -1"));
            }
        }
        for c in 1..=self.n {
            if self.n % c == 0 && !eigenvalues.contains_key(&c) {
                return Err(Error::validation(format!(
                    "missing Atkin-Lehner eigenvalue for W_{c}"
                )));
            }
        }
        if eigenvalues.get(&1) != Some(&1) {
            return Err(Error::validation("W_1 acts trivially; \u{3b5}_1 must be 1"));
        }
        self.al_eigenvalues = Some(eigenvalues);
        Ok(self)
    }

    pub fn level(&self) -> u32 {
        self.n
    }

    pub fn expansion(&self) -> &FracQSeries<Rational> {
        &self.expansion
    }

    pub fn vanishes_at_other_cusps(&self) -> bool {
        self.vanishes_at_other_cusps
    }

    pub fn al_eigenvalues(&self) -> Option<&BTreeMap<u32, i64>> {
        self.al_eigenvalues.as_ref()
    }

    pub fn eval_kind(&self) -> &EvalKind {
        &self.eval
    }

    /// 1/a(0), the factor that renormalizes to â(0) = 1.
    pub fn normalization(&self) -> &Rational {
        &self.normalization
    }

    /// The raw expansion coefficient a(k); exact zero below the window.
    pub fn a(&self, k: i64) -> Rational {
        if k < self.expansion.low() {
            return Rational::new();
        }
        self.expansion.coeff_rat(k)
    }

    /// â(k) = a(k)/a(0).
    pub fn a_hat(&self, k: i64) -> Rational {
        Rational::from(self.a(k) * &self.normalization)
    }

    /// The largest n with a(−n) ≠ 0, or 0 for a holomorphic input.
    pub fn principal_depth(&self) -> i64 {
        (-self.expansion.low()).max(0)
    }

    /// Σ_{n≥0} â(−n)σ₁(n), the constant-term pairing with the weight-2
    /// Eisenstein series (σ₁(0) = −1/24).
    pub fn sigma1_pairing(&self) -> Rational {
        let mut s = Rational::new();
        for k in 0..=self.principal_depth() {
            s += self.a_hat(-k) * sigma1(k as u64);
        }
        s
    }

    /// Σ_{n>0} â(−bn) for b ≥ 1 (a finite sum over the principal part).
    pub fn principal_sum(&self, b: i64) -> Rational {
        assert!(b >= 1);
        let mut s = Rational::new();
        let mut k = b;
        while k <= self.principal_depth() {
            s += self.a_hat(-k);
            k += b;
        }
        s
    }
}

impl CmEvaluator for WhmfSpec {
    fn eval(&self, z: &BigComplex, prec: Precision) -> Result<BigComplex> {
        match &self.eval {
            EvalKind::Constant(c) => Ok(BigComplex::from_rational(c, prec.bits())),
            EvalKind::Level6 => cmeval::eval_f6(z, prec),
            EvalKind::EtaShiftProduct {
                exponents,
                shifts,
                scale,
            } => {
                let t = cmeval::eval_eta_quotient(exponents, z, prec)?;
                let mut acc = BigComplex::one(prec.bits());
                for s in shifts {
                    acc = &acc * &(&t - &BigComplex::from_rational(s, prec.bits()));
                }
                Ok(acc.scale_rational(scale))
            }
        }
    }
}

/// The level-6 Atkin-Lehner eigenform q^{−1} − 4 − 83q − 296q² − ⋯ with
/// eigenvalues +1, +1, −1, −1 at W_1, W_2, W_3, W_6.  Its Millson lift
/// carries the mock theta coefficients on its trace side.
pub fn f6_eigenform() -> WhmfSpec {
    let eigenvalues = [(1u32, 1i64), (2, 1), (3, -1), (6, -1)].into_iter().collect();
    WhmfSpec::new(6, crate::qseries::build_f6(16), false, EvalKind::Level6)
        .and_then(|f| f.with_al_eigenvalues(eigenvalues))
        .expect("the built-in level-6 eigenform data is consistent")
}

// ---------------------------------------------------------------------------
// Coefficient tables

/// One table entry: exact when it came from a q-expansion or survived
/// rational recognition, floating when it is a raw trace value.
#[derive(Clone, Debug)]
pub enum CoeffValue {
    Exact(Rational),
    Approx(BigComplex),
}

impl CoeffValue {
    pub fn is_zero(&self) -> bool {
        match self {
            CoeffValue::Exact(q) => *q == 0,
            CoeffValue::Approx(z) => z.is_zero(),
        }
    }

    pub fn to_complex(&self, bits: u32) -> BigComplex {
        match self {
            CoeffValue::Exact(q) => BigComplex::from_rational(q, bits),
            CoeffValue::Approx(z) => z.clone(),
        }
    }
}

/// A sparse table of vector-valued Fourier coefficients c(D, r), keyed so
/// that D ≡ r² mod 4N for both representations: a ρ-form stores its
/// coefficient at exponent D/4N under (D, r), a ρ̄-form the one at exponent
/// −D/4N.  Missing keys read as zero.
///
/// With this convention the principal part of a weight-1/2 form for ρ sits
/// at keys D < 0, and so do the trace terms of the lifted ρ̄-forms — the
/// pairings in the trace identities match keys directly.
#[derive(Clone, Debug)]
pub struct CoeffTable {
    n: u32,
    rep: Rep,
    entries: BTreeMap<(i64, i64), CoeffValue>,
}

impl CoeffTable {
    pub fn new(n: u32, rep: Rep) -> Self {
        CoeffTable {
            n,
            rep,
            entries: BTreeMap::new(),
        }
    }

    pub fn level(&self) -> u32 {
        self.n
    }

    pub fn rep(&self) -> Rep {
        self.rep
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Set c(D, r).  r is reduced mod 2N; the key must satisfy the support
    /// congruence D ≡ r² mod 4N.  Zero values erase the entry.
    pub fn insert(&mut self, d: i64, r: i64, value: CoeffValue) -> Result<()> {
        let two_n = 2 * self.n as i64;
        let m = 4 * self.n as i64;
        let r = r.rem_euclid(two_n);
        if (d - r * r).rem_euclid(m) != 0 {
            return Err(Error::Congruence(format!(
                "table key D = {d} on component {r} must be {} mod {m}",
                (r * r).rem_euclid(m)
            )));
        }
        if value.is_zero() {
            self.entries.remove(&(d, r));
        } else {
            self.entries.insert((d, r), value);
        }
        Ok(())
    }

    /// c(D, r), with r reduced mod 2N; absent keys are zero (None).
    pub fn get(&self, d: i64, r: i64) -> Option<&CoeffValue> {
        let r = r.rem_euclid(2 * self.n as i64);
        self.entries.get(&(d, r))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(i64, i64), &CoeffValue)> {
        self.entries.iter()
    }

    /// True when every entry is exact or has an exactly-zero imaginary part.
    pub fn real_coeffs(&self) -> bool {
        self.entries.values().all(|v| match v {
            CoeffValue::Exact(_) => true,
            CoeffValue::Approx(z) => z.im().is_zero(),
        })
    }

    /// True when every principal-part entry (D < 0 for ρ, D > 0 for ρ̄) is
    /// an exact integer.
    pub fn integral_principal_part(&self) -> bool {
        self.entries.iter().all(|(&(d, _), v)| {
            let principal = match self.rep {
                Rep::Rho => d < 0,
                Rep::RhoBar => d > 0,
            };
            !principal || matches!(v, CoeffValue::Exact(q) if q.is_integer())
        })
    }

    /// Read the coefficients off an exact vector-valued expansion.
    pub fn from_exact_form(v: &VVForm<Rational>) -> Result<Self> {
        let mut t = CoeffTable::new(v.level(), v.rep());
        for (r, comp) in v.components().iter().enumerate() {
            for (&k, c) in comp.iter() {
                if c.is_zero() {
                    continue;
                }
                let d = match v.rep() {
                    Rep::Rho => k,
                    Rep::RhoBar => -k,
                };
                t.insert(d, r as i64, CoeffValue::Exact(c.clone()))?;
            }
        }
        Ok(t)
    }

    /// Read the coefficients off a numeric expansion (a computed lift).
    pub fn from_numeric_form(v: &VVForm<BigComplex>) -> Result<Self> {
        let mut t = CoeffTable::new(v.level(), v.rep());
        for (r, comp) in v.components().iter().enumerate() {
            for (&k, c) in comp.iter() {
                if c.is_zero() {
                    continue;
                }
                let d = match v.rep() {
                    Rep::Rho => k,
                    Rep::RhoBar => -k,
                };
                t.insert(d, r as i64, CoeffValue::Approx(c.clone()))?;
            }
        }
        Ok(t)
    }

    /// Replace every floating entry by a recognized rational: the imaginary
    /// part must sit below `tol` and the real part within `tol` of a
    /// rational with denominator ≤ `max_den`.
    pub fn rationalized(&self, max_den: u64, tol: f64) -> Result<CoeffTable> {
        let mut out = CoeffTable::new(self.n, self.rep);
        for (&(d, r), v) in &self.entries {
            let exact = match v {
                CoeffValue::Exact(q) => q.clone(),
                CoeffValue::Approx(z) => {
                    let im = z.im().clone().abs().to_f64();
                    if im > tol {
                        return Err(Error::NotAnInteger {
                            value: format!("entry ({d}, {r})"),
                            residual: im,
                            tol,
                        });
                    }
                    let q = reconstruct_rational(z.re(), max_den)?;
                    let p = z.prec();
                    let res = Float::with_val(p, z.re() - float_from_rational(&q, p))
                        .abs()
                        .to_f64();
                    if res > tol {
                        return Err(Error::RationalReconstruction {
                            value: z.re().to_f64().to_string(),
                            bound: max_den,
                        });
                    }
                    q
                }
            };
            out.insert(d, r, CoeffValue::Exact(exact))?;
        }
        Ok(out)
    }

    /// Serialize as `{N, rep, entries: [[D, r, num, den]], flags}`.  Only
    /// exact tables serialize; rationalize first.
    pub fn to_json(&self) -> Result<Value> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for (&(d, r), v) in &self.entries {
            let q = match v {
                CoeffValue::Exact(q) => q,
                CoeffValue::Approx(_) => {
                    return Err(Error::validation(
                        "table holds floating entries; rationalize before serializing",
                    ))
                }
            };
            let num = q.numer().to_i64().ok_or_else(|| {
                Error::validation("coefficient numerator exceeds the JSON integer range")
            })?;
            let den = q.denom().to_i64().ok_or_else(|| {
                Error::validation("coefficient denominator exceeds the JSON integer range")
            })?;
            entries.push(json!([d, r, num, den]));
        }
        Ok(json!({
            "N": self.n,
            "rep": self.rep.as_str(),
            "entries": entries,
            "flags": {
                "real_coeffs": self.real_coeffs(),
                "integral_principal_part": self.integral_principal_part(),
            },
        }))
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let n = v["N"]
            .as_u64()
            .filter(|&n| n >= 1 && n <= u32::MAX as u64)
            .ok_or_else(|| Error::Parse("table needs a positive integer N".into()))?
            as u32;
        let rep: Rep = v["rep"]
            .as_str()
            .ok_or_else(|| Error::Parse("table needs a rep string".into()))?
            .parse()?;
        let raw = v["entries"]
            .as_array()
            .ok_or_else(|| Error::Parse("table needs an entries array".into()))?;
        let mut t = CoeffTable::new(n, rep);
        for e in raw {
            let row = e
                .as_array()
                .filter(|r| r.len() == 4)
                .ok_or_else(|| Error::Parse("each entry is [D, r, num, den]".into()))?;
            let get = |i: usize| {
                row[i]
                    .as_i64()
                    .ok_or_else(|| Error::Parse(format!("entry field {i} is not an integer")))
            };
            let (d, r, num, den) = (get(0)?, get(1)?, get(2)?, get(3)?);
            if den == 0 {
                return Err(Error::Parse("entry denominator is zero".into()));
            }
            t.insert(d, r, CoeffValue::Exact(Rational::from((num, den))))?;
        }
        Ok(t)
    }
}

// ---------------------------------------------------------------------------
// The two theta lifts

#[derive(Clone, Copy, PartialEq, Eq)]
enum LiftKind {
    KudlaMillson,
    Millson,
}

/// Holomorphic part of the Kudla-Millson lift: weight 3/2 for ρ̄, CM-trace
/// coefficients (tr⁺+tr⁻)(D,r) at q^{−D/4N} for 0 < −D ≤ `dmax`, plus the
/// exact σ₁ corrections.  The input must vanish at the cusps away from ∞.
pub fn km_holomorphic_part(
    f: &WhmfSpec,
    dmax: i64,
    prec: Precision,
) -> Result<VVForm<BigComplex>> {
    lift_holomorphic_part(f, dmax, prec, LiftKind::KudlaMillson)
}

/// Holomorphic part of the Millson lift: weight 1/2 for ρ̄, CM-trace
/// coefficients (i/√|D|)(tr⁺−tr⁻)(D,r) at q^{−D/4N} for 0 < −D ≤ `dmax`,
/// plus the exact principal-part corrections.  Accepts inputs vanishing at
/// the cusps away from ∞, or Atkin-Lehner eigenforms of squarefree level
/// carrying a full eigenvalue set.
pub fn millson_holomorphic_part(
    f: &WhmfSpec,
    dmax: i64,
    prec: Precision,
) -> Result<VVForm<BigComplex>> {
    lift_holomorphic_part(f, dmax, prec, LiftKind::Millson)
}

fn lift_holomorphic_part(
    f: &WhmfSpec,
    dmax: i64,
    prec: Precision,
    kind: LiftKind,
) -> Result<VVForm<BigComplex>> {
    if dmax < 0 {
        return Err(Error::validation("Dmax must be nonnegative"));
    }
    let n = f.level();
    // Which cusps feed correction terms, and with what sign.  A function
    // vanishing away from ∞ only corrects there; an eigenform corrects at
    // every exact divisor with its eigenvalue.
    let cusp_data: Vec<(u32, i64)> = if f.vanishes_at_other_cusps() {
        vec![(1, 1)]
    } else if kind == LiftKind::Millson {
        match f.al_eigenvalues() {
            Some(evs) => evs.iter().map(|(&c, &e)| (c, e)).collect(),
            None => {
                return Err(Error::validation(
                    "the Millson lift needs an input vanishing at the cusps away from \u{221e}, \
                     or a full set of Atkin-Lehner eigenvalues",
                ))
            }
        }
    } else {
        return Err(Error::validation(
            "the Kudla-Millson lift needs an input vanishing at the cusps away from \u{221e}",
        ));
    };
    let sigmas = cusp_data
        .iter()
        .map(|&(c, eps)| Ok((atkin_lehner_sigma(n, c)?, eps)))
        .collect::<Result<Vec<_>>>()?;

    let bits = prec.bits();
    let n_i = n as i64;
    let two_n = 2 * n_i;
    let m = 4 * n_i;
    let trunc = dmax + 1;
    let depth = f.principal_depth();
    let b_sums: Vec<(i64, Rational)> = (1..=depth)
        .map(|b| {
            let mut s = Rational::new();
            let mut k = b;
            while k <= depth {
                s += f.a(-k);
                k += b;
            }
            (b, s)
        })
        .filter(|(_, s)| *s != 0)
        .collect();

    // Components r = 0..N; the other half mirrors (KM evenly, Millson oddly).
    let mut components: Vec<FracQSeries<BigComplex>> = Vec::with_capacity(2 * n as usize);
    for r in 0..=n_i {
        let mut s = FracQSeries::new(m as u32, trunc);
        let rr = (r * r).rem_euclid(m);
        let mut d = rr - m;
        while -d <= dmax {
            let tv = trace(f, n, d, r, prec)?;
            let coeff = match kind {
                LiftKind::KudlaMillson => &tv.plus + &tv.minus,
                LiftKind::Millson => {
                    let root = Float::with_val(bits, -d).sqrt();
                    (&tv.plus - &tv.minus).mul_i().scale(&root.recip())
                }
            };
            s.set_coeff(-d, coeff);
            d -= m;
        }
        if kind == LiftKind::KudlaMillson && r == 0 {
            let mut c0 = Rational::new();
            for k in 0..=depth {
                c0 += f.a(-k) * sigma1(k as u64);
            }
            c0 *= 4;
            if c0 != 0 {
                s.set_coeff(0, BigComplex::from_rational(&c0, bits));
            }
        }
        for (b, sb) in &b_sums {
            let mut weight = Rational::new();
            for (sigma, eps) in &sigmas {
                let b_img = sigma[b.rem_euclid(two_n) as usize] as i64;
                let d_plus = i64::from(b_img == r);
                let d_minus = i64::from(b_img == (two_n - r) % two_n);
                let factor = match kind {
                    LiftKind::KudlaMillson => -b * (d_plus + d_minus),
                    LiftKind::Millson => d_plus - d_minus,
                };
                weight += Rational::from(factor * eps);
            }
            let contrib = weight * sb;
            if contrib != 0 {
                s.add_to_coeff(-b * b, &BigComplex::from_rational(&contrib, bits));
            }
        }
        components.push(s);
    }
    for r in (1..n_i).rev() {
        let src = components[r as usize].clone();
        components.push(match kind {
            LiftKind::KudlaMillson => src,
            LiftKind::Millson => src.neg(),
        });
    }
    let weight2 = match kind {
        LiftKind::KudlaMillson => 3,
        LiftKind::Millson => 1,
    };
    VVForm::new(n, Rep::RhoBar, weight2, components)
}

// ---------------------------------------------------------------------------
// Regularized Petersson products and Weyl vectors

/// A formula evaluation split into its exact and its floating half: the σ₁
/// and principal-part corrections stay rational, only CM traces float.
#[derive(Clone, Debug)]
pub struct RegularizedProduct {
    /// Correction terms of the right-hand side, exact.
    pub rhs_rational: Rational,
    /// CM-trace terms of the right-hand side.
    pub rhs_traces: BigComplex,
    /// The product (f, θ)^reg itself, after dividing by the prefactor.
    pub value: BigComplex,
}

/// Weyl vector ρ_{f, 1/c}, split like [`RegularizedProduct`].
#[derive(Clone, Debug)]
pub struct WeylVector {
    pub rational: Rational,
    pub traces: BigComplex,
    pub value: BigComplex,
}

fn check_pairing_inputs(f: &CoeffTable, input: &WhmfSpec) -> Result<()> {
    if f.rep() != Rep::Rho {
        return Err(Error::validation(
            "pairing against a unary theta series needs a table for \u{3c1}",
        ));
    }
    if f.level() != input.level() {
        return Err(Error::validation(format!(
            "level mismatch: table has N = {}, input has N = {}",
            f.level(),
            input.level()
        )));
    }
    if !input.vanishes_at_other_cusps() {
        return Err(Error::validation(
            "the trace identity needs an input vanishing at the cusps away from \u{221e}",
        ));
    }
    Ok(())
}

fn add_scaled(rat: &mut Rational, cx: &mut BigComplex, c: &CoeffValue, scale: &Rational) {
    match c {
        CoeffValue::Exact(q) => *rat += Rational::from(q * scale),
        CoeffValue::Approx(z) => *cx = &*cx + &z.scale_rational(scale),
    }
}

/// (f, θ_{1/2})^reg for a weight-1/2 table f, evaluated through the finite
/// trace identity with the Kudla-Millson combination (tr⁺+tr⁻).
pub fn inner_product_theta_half(
    f: &CoeffTable,
    input: &WhmfSpec,
    prec: Precision,
) -> Result<RegularizedProduct> {
    check_pairing_inputs(f, input)?;
    let bits = prec.bits();
    let n = input.level();
    let mut rat = Rational::new();
    let mut cx = BigComplex::zero(bits);

    if let Some(c) = f.get(0, 0) {
        let scale = Rational::from(4) * input.sigma1_pairing();
        add_scaled(&mut rat, &mut cx, c, &scale);
    }
    for b in 1..=input.principal_depth() {
        let sb = input.principal_sum(b);
        if sb == 0 {
            continue;
        }
        if let Some(c) = f.get(b * b, b) {
            let scale = Rational::from(-2 * b) * sb;
            add_scaled(&mut rat, &mut cx, c, &scale);
        }
    }
    for (&(d, r), c) in f.iter() {
        if d >= 0 {
            continue;
        }
        let tv = trace(input, n, d, r, prec)?;
        let combo = (&tv.plus + &tv.minus).scale_rational(input.normalization());
        let term = match c {
            CoeffValue::Exact(q) => combo.scale_rational(q),
            CoeffValue::Approx(z) => &combo * z,
        };
        cx = &cx + &term;
    }

    let total = &BigComplex::from_rational(&rat, bits) + &cx;
    let mut pref = pi(bits);
    pref *= 4;
    pref /= Float::with_val(bits, n).sqrt();
    pref = -pref;
    Ok(RegularizedProduct {
        rhs_rational: rat,
        rhs_traces: cx,
        value: total.scale(&pref),
    })
}

/// (f, θ_{3/2})^reg for a weight-3/2 table f, evaluated through the finite
/// trace identity with the Millson combination (i/√|D|)(tr⁺−tr⁻).
pub fn inner_product_theta_threehalf(
    f: &CoeffTable,
    input: &WhmfSpec,
    prec: Precision,
) -> Result<RegularizedProduct> {
    check_pairing_inputs(f, input)?;
    let bits = prec.bits();
    let n = input.level();
    let mut rat = Rational::new();
    let mut cx = BigComplex::zero(bits);

    for b in 1..=input.principal_depth() {
        let sb = input.principal_sum(b);
        if sb == 0 {
            continue;
        }
        if let Some(c) = f.get(b * b, b) {
            let scale = Rational::from(2) * sb;
            add_scaled(&mut rat, &mut cx, c, &scale);
        }
    }
    for (&(d, r), c) in f.iter() {
        if d >= 0 {
            continue;
        }
        let tv = trace(input, n, d, r, prec)?;
        let root = Float::with_val(bits, -d).sqrt();
        let combo = (&tv.plus - &tv.minus)
            .mul_i()
            .scale(&root.recip())
            .scale_rational(input.normalization());
        let term = match c {
            CoeffValue::Exact(q) => combo.scale_rational(q),
            CoeffValue::Approx(z) => &combo * z,
        };
        cx = &cx + &term;
    }

    let total = &BigComplex::from_rational(&rat, bits) + &cx;
    let mut pref = Float::with_val(bits, n).sqrt();
    pref *= 2;
    pref = -pref;
    Ok(RegularizedProduct {
        rhs_rational: rat,
        rhs_traces: cx,
        value: total.scale(&pref),
    })
}

/// Weyl vector ρ_{f, 1/c} of the Borcherds product Ψ(z, f) at the cusp 1/c,
/// c ∥ N:
///
/// ```text
/// ρ_{f,1/c} = −(1/2) Σ_{r, D<0} c_f(D, σ_c(r)) (tr⁺+tr⁻)(D, r)
///             − 2 c_f(0,0) Σ_{n≥0} â(−n)σ₁(n)
///             + Σ_{b>0} c_f(b², σ_c(b)) b Σ_{n>0} â(−bn).
/// ```
///
/// The table must carry real coefficients and an integral principal part.
pub fn weyl_vector(
    f: &CoeffTable,
    c: u32,
    input: &WhmfSpec,
    prec: Precision,
) -> Result<WeylVector> {
    check_pairing_inputs(f, input)?;
    if !f.real_coeffs() {
        return Err(Error::validation("Weyl vectors need real table coefficients"));
    }
    if !f.integral_principal_part() {
        return Err(Error::validation(
            "Weyl vectors need an integral principal part",
        ));
    }
    let n = input.level();
    let sigma = atkin_lehner_sigma(n, c)?;
    let bits = prec.bits();
    let two_n = 2 * n as i64;
    let mut rat = Rational::new();
    let mut cx = BigComplex::zero(bits);

    if let Some(cv) = f.get(0, 0) {
        let scale = Rational::from(-2) * input.sigma1_pairing();
        add_scaled(&mut rat, &mut cx, cv, &scale);
    }
    for b in 1..=input.principal_depth() {
        let sb = input.principal_sum(b);
        if sb == 0 {
            continue;
        }
        let b_img = sigma[b.rem_euclid(two_n) as usize] as i64;
        if let Some(cv) = f.get(b * b, b_img) {
            let scale = Rational::from(b) * sb;
            add_scaled(&mut rat, &mut cx, cv, &scale);
        }
    }
    let half_norm = Rational::from((-1, 2)) * input.normalization();
    for (&(d, s), cv) in f.iter() {
        if d >= 0 {
            continue;
        }
        // the entry sits on component s = σ_c(r); σ_c is an involution
        let r = sigma[s as usize] as i64;
        let tv = trace(input, n, d, r, prec)?;
        let combo = (&tv.plus + &tv.minus).scale_rational(&half_norm);
        let term = match cv {
            CoeffValue::Exact(q) => combo.scale_rational(q),
            CoeffValue::Approx(z) => &combo * z,
        };
        cx = &cx + &term;
    }

    let value = &BigComplex::from_rational(&rat, bits) + &cx;
    Ok(WeylVector {
        rational: rat,
        traces: cx,
        value,
    })
}

// ---------------------------------------------------------------------------
// Borcherds products

/// Exact expansion of the Borcherds product
/// Ψ(z, f) = q^ρ Π_{n=1}^{terms} (1 − qⁿ)^{c_f(n², n)} with the given Weyl
/// vector ρ at ∞.  Exponents must be exact integers.
///
/// An absent key (n², n) is read as exponent zero — tables keep no window
/// metadata, so the caller must supply one covering keys up to (terms²,
/// terms) or the high-order factors are silently dropped.
pub fn borcherds_expand(
    f: &CoeffTable,
    weyl: &Rational,
    terms: i64,
) -> Result<FracQSeries<Rational>> {
    if f.rep() != Rep::Rho {
        return Err(Error::validation(
            "Borcherds products take a table for \u{3c1}",
        ));
    }
    if terms < 0 {
        return Err(Error::validation("terms must be nonnegative"));
    }
    let mut s = FracQSeries::one(1, terms + 1);
    for b in 1..=terms {
        let e = product_exponent(f, b * b, b)?;
        if e == 0 {
            continue;
        }
        let mut factor = FracQSeries::one(1, terms + 1);
        factor.add_to_coeff(b, &Rational::from(-1));
        s = s.mul(&factor.pow_i64(e)?);
    }
    let den = weyl
        .denom()
        .to_u32()
        .ok_or_else(|| Error::validation("Weyl vector denominator exceeds u32"))?;
    let num = weyl
        .numer()
        .to_i64()
        .ok_or_else(|| Error::validation("Weyl vector numerator exceeds i64"))?;
    Ok(s.with_den(den)?.shift(num))
}

/// Exact expansion of the twisted Borcherds product
/// Ψ_{Δ,r}(z, f) = Π_{n=1}^{terms} Π_{b mod |Δ|} (1 − e(b/Δ)qⁿ)^{(Δ|b) c_f(Δn², rn)}
/// for a fundamental discriminant Δ ≠ 1 with Δ ≡ r² mod 4N.  Twisted
/// products have weight 0 and vanishing Weyl vector, so no prefactor
/// appears; coefficients live in the cyclotomic field of Δ-th roots.
pub fn twisted_borcherds_expand(
    f: &CoeffTable,
    delta: i64,
    r: i64,
    terms: i64,
    prec: Precision,
) -> Result<FracQSeries<BigComplex>> {
    if delta == 1 || !is_fundamental_discriminant(delta) {
        return Err(Error::validation(format!(
            "twist {delta} must be a fundamental discriminant different from 1"
        )));
    }
    let m = 4 * f.level() as i64;
    if (delta - r * r).rem_euclid(m) != 0 {
        return Err(Error::Congruence(format!(
            "twist needs \u{394} \u{2261} r\u{b2} mod {m}; got \u{394} = {delta}, r = {r}"
        )));
    }
    if terms < 0 {
        return Err(Error::validation("terms must be nonnegative"));
    }
    let bits = prec.bits();
    let abs_delta = delta.unsigned_abs() as i64;
    let mut acc = FracQSeries::new(1, terms + 1);
    acc.set_coeff(0, BigComplex::one(bits));
    for k in 1..=terms {
        let e = product_exponent(f, delta * k * k, r * k)?;
        if e == 0 {
            continue;
        }
        for b in 0..abs_delta {
            let chi = kronecker(delta, b)? as i64;
            if chi == 0 {
                continue;
            }
            let zeta = e_rational(&Rational::from((b, delta)), bits);
            let mut factor = FracQSeries::new(1, terms + 1);
            factor.set_coeff(0, BigComplex::one(bits));
            factor.set_coeff(k, -&zeta);
            acc = acc.mul(&factor.pow_i64(chi * e)?);
        }
    }
    Ok(acc)
}

fn product_exponent(f: &CoeffTable, d: i64, r: i64) -> Result<i64> {
    match f.get(d, r) {
        None => Ok(0),
        Some(CoeffValue::Exact(q)) => {
            if !q.is_integer() {
                return Err(Error::NonIntegralExponent {
                    num: q.numer().to_i64().unwrap_or(i64::MAX),
                    den: q.denom().to_u32().unwrap_or(u32::MAX),
                });
            }
            q.numer()
                .to_i64()
                .ok_or_else(|| Error::validation("product exponent exceeds i64"))
        }
        Some(CoeffValue::Approx(_)) => Err(Error::validation(
            "product exponents must be exact; rationalize the table first",
        )),
    }
}

// ---------------------------------------------------------------------------
// Residue identity

/// The constant term of F·(E₂(z) − N E₂(Nz)) dz at ∞, normalized to
/// â(0) = 1:
///
/// ```text
/// (1 − N) − 24 Σ_{n>0} â(−n) (σ₁(n) − N σ₁(n/N)),
/// ```
///
/// with σ₁(n/N) read as zero unless N | n.  For an input that vanishes at
/// the cusps away from ∞ this is the full residue sum of a holomorphic
/// differential, so it vanishes exactly.
pub fn residue_identity_check(input: &WhmfSpec) -> Rational {
    let n = input.level() as i64;
    let mut s = Rational::from(1 - n);
    for k in 1..=input.principal_depth() {
        let mut w = sigma1(k as u64);
        if k % n == 0 {
            w -= Rational::from(n) * sigma1((k / n) as u64);
        }
        s -= Rational::from(24) * input.a_hat(-k) * w;
    }
    s
}
