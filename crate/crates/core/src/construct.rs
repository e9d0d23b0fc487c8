//! Construction of canonical weakly holomorphic inputs on genus-zero levels.
//!
//! For each supported level the curve X_0(N) has genus zero and a Hauptmodul
//! `t_N = q^{-1} + O(1)` realized by an eta quotient (exponents per Ligozat's
//! criterion).  Since `t_N` has its only pole at the cusp `infinity`, the
//! monic product
//!
//! ```text
//!     F_N = prod_{s != infinity} (t_N - t_N(s))
//! ```
//!
//! over the finite cusps `s` is the canonical weight-0 form that vanishes at
//! every cusp other than `infinity`.  The cusp values `t_N(s)` are rational;
//! we obtain them by evaluating the eta quotient high up in the cusp
//! neighbourhood and reconstructing the rational from continued fractions.
//! The construction certifies itself twice over: exactly, by pairing the
//! result against the weight-2 Eisenstein series `E_2(z) - d E_2(dz)` (the
//! residue theorem makes every such pairing vanish for a form in
//! `M^!_0(N)` with poles only at `infinity`), and numerically, by watching
//! the magnitude die along vertical approaches to the finite cusps.

use std::collections::BTreeMap;

use rug::{Float, Rational};

use crate::cmeval::moebius;
use crate::error::{Error, Result};
use crate::lifts::{EvalKind, WhmfSpec};
use crate::traces::CmEvaluator;
use crate::numctx::{float_from_rational, reconstruct_rational, BigComplex, Precision};
use crate::qseries::{eisenstein_e2, eta_quotient_series, FracQSeries};
use crate::quadforms::Mat2;

/// Levels N for which X_0(N) has genus zero and we carry a Hauptmodul.
pub const SUPPORTED_LEVELS: [u32; 7] = [1, 2, 3, 5, 6, 7, 10];

/// Eta-quotient exponents of the normalized Hauptmodul `t_N = q^{-1} + O(1)`.
fn hauptmodul_exponents(n: u32) -> Result<BTreeMap<u32, i64>> {
    let pairs: &[(u32, i64)] = match n {
        2 => &[(1, 24), (2, -24)],
        3 => &[(1, 12), (3, -12)],
        5 => &[(1, 6), (5, -6)],
        6 => &[(1, 5), (2, -1), (3, 1), (6, -5)],
        7 => &[(1, 4), (7, -4)],
        10 => &[(1, 3), (2, -1), (5, 1), (10, -3)],
        _ => return Err(Error::UnsupportedLevel(n)),
    };
    Ok(pairs.iter().copied().collect())
}

/// q-expansion of the Hauptmodul `t_N` through `q^terms`.
///
/// Integral coefficients; the expansion starts `q^{-1} + O(1)`.
pub fn hauptmodul_series(n: u32, terms: i64) -> Result<FracQSeries<Rational>> {
    let exps = hauptmodul_exponents(n)?;
    let t = eta_quotient_series(&exps, terms)?.normalize_den();
    debug_assert_eq!(t.low(), -1);
    debug_assert_eq!(t.coeff_rat(-1), Rational::from(1));
    Ok(t)
}

/// Value of `t_N` at the cusp `1/c`, reconstructed as an exact rational.
///
/// The cusp `1/N` is equivalent to `infinity`, where `t_N` has its pole; any
/// other divisor `c` of `N` works.  Evaluation happens at `gamma_c(60i)`,
/// deep enough in the cusp neighbourhood that the local q-expansion has
/// converged far past the reconstruction bound.
pub fn hauptmodul_cusp_value(n: u32, c: u32, prec: Precision) -> Result<Rational> {
    let exps = hauptmodul_exponents(n)?;
    if c == 0 || n % c != 0 {
        return Err(Error::validation(format!(
            "cusp parameter {c} must be a divisor of the level {n}"
        )));
    }
    if c == n {
        return Err(Error::validation(
            "the cusp 1/N is equivalent to infinity, where the Hauptmodul has its pole",
        ));
    }
    let bits = prec.bits();
    let z = moebius(
        &Mat2 { a: 1, b: 0, c: c as i64, d: 1 },
        &BigComplex::new(Float::with_val(bits, 0), Float::with_val(bits, 60)),
    );
    let v = crate::cmeval::eval_eta_quotient(&exps, &z, prec)?;
    let im = v.im().clone().abs().to_f64();
    if im > 1e-12 {
        return Err(Error::validation(format!(
            "cusp value of t_{n} at 1/{c} kept an imaginary part of size {im:.3e}"
        )));
    }
    let q = reconstruct_rational(v.re(), 10_000)?;
    let residual = Float::with_val(bits, v.re() - float_from_rational(&q, bits))
        .abs()
        .to_f64();
    if residual > 1e-12 {
        return Err(Error::RationalReconstruction {
            value: v.re().to_f64().to_string(),
            bound: 10_000,
        });
    }
    Ok(q)
}

/// The weight-2 holomorphic Eisenstein combinations `E_2(z) - d E_2(dz)`
/// for the divisors `d > 1` of `N`, each through `q^terms`.
///
/// These span the space that obstructs prescribed principal parts in
/// `M^!_0(N)`: a principal part extends to a weakly holomorphic form with
/// poles only at `infinity` iff it pairs to zero with every one of them.
pub fn eisenstein_weight2_basis(n: u32, terms: i64) -> Vec<(u32, FracQSeries<Rational>)> {
    let e2 = eisenstein_e2(terms);
    let mut basis = Vec::new();
    for d in divisors(n) {
        if d == 1 {
            continue;
        }
        let scaled = e2.scale_variable(d).scale_rational(&Rational::from(d));
        basis.push((d, e2.sub(&scaled)));
    }
    basis
}

/// Constant-term pairing `sum_k f_k g_{-k}` of two expansions.
///
/// Finite because one factor is meromorphic at worst; this is the residue
/// pairing that detects whether a principal part is realizable.
pub fn pairing(f: &FracQSeries<Rational>, g: &FracQSeries<Rational>) -> Rational {
    f.mul(g).coeff_rat(0)
}

/// The canonical weight-0 input on level N: monic in `t_N`, pole only at
/// `infinity`, vanishing at every other cusp.
///
/// `F_1 = 1`; for N > 1 the base choice is the monic product of `t_N - t_N(s)`
/// over the finite cusps `s`.  When that product happens to have vanishing
/// constant term (it does at N = 10), the zero at the first finite cusp is
/// deepened until the constant term survives — the pairing framework
/// normalizes by `a(0)`, so `a(0) != 0` is non-negotiable.  The returned
/// expansion runs through `q^terms`.  Construction fails rather than return
/// an uncertified form: the weight-2 pairings must vanish exactly and the
/// magnitude must be numerically dead at each finite cusp.
pub fn construct_f(n: u32, terms: i64) -> Result<WhmfSpec> {
    if terms < 1 {
        return Err(Error::validation("construct_f needs at least one term"));
    }
    if !SUPPORTED_LEVELS.contains(&n) {
        return Err(Error::UnsupportedLevel(n));
    }
    if n == 1 {
        // Every level-1 form with poles only at infinity works; the constant
        // is the canonical degenerate choice (there are no other cusps).
        return WhmfSpec::new(
            1,
            FracQSeries::one(1, terms + 1),
            true,
            EvalKind::Constant(Rational::from(1)),
        );
    }
    let prec = Precision::new(320)?;
    let mut shifts = Vec::new();
    for c in divisors(n) {
        if c != n {
            shifts.push(hauptmodul_cusp_value(n, c, prec)?);
        }
    }
    while cusp_product(n, &shifts, 1)?.coeff_rat(0) == 0 {
        if shifts.len() > 8 {
            return Err(Error::validation(format!(
                "level-{n} cusp products keep a vanishing constant term"
            )));
        }
        shifts.push(shifts[0].clone());
    }
    let f = assemble(n, shifts, terms)?;

    // Exact certificate: the residue theorem forces the pairing with every
    // holomorphic weight-2 combination to vanish.
    let depth = f.principal_depth();
    for (d, g) in eisenstein_weight2_basis(n, depth + 2) {
        let p = pairing(f.expansion(), &g);
        if p != 0 {
            return Err(Error::validation(format!(
                "constructed level-{n} input fails the weight-2 pairing at d = {d}: obstruction {p}"
            )));
        }
    }

    // Numeric certificate: approach each finite cusp and watch the value die.
    numeric_cusp_check(&f)?;
    Ok(f)
}

/// Build `prod (t_N - s)` over the given shifts, with expansion window
/// `terms` and an evaluator that computes the same product pointwise.
fn assemble(n: u32, shifts: Vec<Rational>, terms: i64) -> Result<WhmfSpec> {
    let exponents = hauptmodul_exponents(n)?;
    let series = cusp_product(n, &shifts, terms)?;
    WhmfSpec::new(
        n,
        series,
        true,
        EvalKind::EtaShiftProduct {
            exponents,
            shifts,
            scale: Rational::from(1),
        },
    )
}

/// q-expansion of `prod (t_N - s)` over the given shifts, through `q^terms`.
fn cusp_product(n: u32, shifts: &[Rational], terms: i64) -> Result<FracQSeries<Rational>> {
    let k = shifts.len() as i64;
    let t = hauptmodul_series(n, terms + k + 2)?;
    let mut series = FracQSeries::one(1, t.trunc());
    for s in shifts {
        let mut factor = t.clone();
        factor.add_to_coeff(0, &(-s.clone()));
        series = series.mul(&factor);
    }
    Ok(series.truncate_to(terms + 1))
}

fn numeric_cusp_check(f: &WhmfSpec) -> Result<()> {
    let n = f.level();
    let prec = Precision::new(192)?;
    for c in divisors(n) {
        if c == n {
            continue;
        }
        let at = moebius(
            &Mat2 { a: 1, b: 0, c: c as i64, d: 1 },
            &BigComplex::new(Float::with_val(192, 0), Float::with_val(192, 1000)),
        );
        let mag = f.eval(&at, prec)?.abs().to_f64();
        if !(mag < 1e-5) {
            return Err(Error::validation(format!(
                "constructed level-{n} input keeps magnitude {mag:.3e} near the cusp 1/{c}"
            )));
        }
    }
    Ok(())
}

fn divisors(n: u32) -> Vec<u32> {
    (1..=n).filter(|d| n % d == 0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifts::{
        inner_product_theta_half, inner_product_theta_threehalf, residue_identity_check,
        weyl_vector, CoeffTable,
    };
    use crate::weilrep::theta_half;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn hauptmoduln_have_simple_poles_with_unit_leading_coefficient() {
        for n in SUPPORTED_LEVELS {
            if n == 1 {
                continue;
            }
            let t = hauptmodul_series(n, 8).unwrap();
            assert_eq!(t.low(), -1, "t_{n} should start at q^-1");
            assert_eq!(t.coeff_rat(-1), rat(1, 1), "t_{n} should be monic");
            assert_eq!(t.den(), 1, "t_{n} should have integral exponents");
        }
    }

    #[test]
    fn prime_level_hauptmoduln_vanish_at_zero() {
        // (eta(z)/eta(pz))^{24/(p-1)} has positive valuation at the cusp 0,
        // so the reconstructed cusp value must be exactly 0.
        let prec = Precision::new(256).unwrap();
        for p in [2u32, 3, 5, 7] {
            let v = hauptmodul_cusp_value(p, 1, prec).unwrap();
            assert_eq!(v, rat(0, 1), "t_{p}(0) should vanish");
        }
    }

    #[test]
    fn composite_level_cusp_values_are_distinct() {
        // The Hauptmodul has degree one on X_0(N), so it separates cusps.
        let prec = Precision::new(320).unwrap();
        for n in [6u32, 10] {
            let mut values = vec![];
            for c in divisors(n) {
                if c != n {
                    values.push(hauptmodul_cusp_value(n, c, prec).unwrap());
                }
            }
            assert_eq!(values.len(), 3);
            for i in 0..values.len() {
                for j in 0..i {
                    assert_ne!(
                        values[i], values[j],
                        "t_{n} should separate the cusps 1/c"
                    );
                }
            }
        }
    }

    #[test]
    fn cusp_value_rejects_the_pole() {
        let prec = Precision::new(256).unwrap();
        assert!(hauptmodul_cusp_value(6, 6, prec).is_err());
        assert!(hauptmodul_cusp_value(6, 4, prec).is_err());
    }

    #[test]
    fn supported_levels_construct_and_certify() {
        for n in SUPPORTED_LEVELS {
            let f = construct_f(n, 12).unwrap();
            assert_eq!(f.level(), n);
            assert!(f.vanishes_at_other_cusps());
            // at N = 10 the cubic and quartic cusp products both have
            // vanishing constant term, so the zero at the cusp 0 gets
            // tripled and the pole order lands at 5
            let depth = match n {
                1 => 0,
                6 => 3,
                10 => 5,
                _ => 1,
            };
            assert_eq!(f.principal_depth(), depth, "level {n} pole order");
            if n > 1 {
                assert_eq!(f.a(-depth), rat(1, 1), "level {n} leading coefficient");
            }
            assert_eq!(
                residue_identity_check(&f),
                rat(0, 1),
                "level {n} residue identity"
            );
        }
    }

    #[test]
    fn level_two_construction_is_the_eta_quotient() {
        // t_2 vanishes at 0, so F_2 = t_2 - 0 = (eta(z)/eta(2z))^24.
        let f = construct_f(2, 10).unwrap();
        let t = hauptmodul_series(2, 10).unwrap();
        for k in -1..=10 {
            assert_eq!(f.a(k), t.coeff_rat(k), "coefficient at q^{k}");
        }
    }

    #[test]
    fn unsupported_levels_are_rejected() {
        for n in [0u32, 4, 9, 11, 12] {
            assert!(matches!(
                construct_f(n, 8),
                Err(Error::UnsupportedLevel(_))
            ));
        }
    }

    #[test]
    fn weyl_vectors_do_not_depend_on_the_choice_of_input() {
        // Two different cusp-vanishing inputs on level 6 — the canonical F_6
        // and F_6 * (t_6 - t_6(0)), with a deeper pole — must produce the
        // same Weyl vector for the theta table at every cusp.
        let prec = Precision::new(256).unwrap();
        let f_a = construct_f(6, 12).unwrap();
        let mut shifts = vec![];
        for c in [1u32, 2, 3] {
            shifts.push(hauptmodul_cusp_value(6, c, Precision::new(320).unwrap()).unwrap());
        }
        shifts.push(shifts[0].clone());
        let f_b = assemble(6, shifts, 12).unwrap();
        assert_eq!(f_b.principal_depth(), 4);
        assert_eq!(residue_identity_check(&f_b), rat(0, 1));

        let table = CoeffTable::from_exact_form(&theta_half(6, 3)).unwrap();
        for c in [1u32, 2, 3, 6] {
            let wa = weyl_vector(&table, c, &f_a, prec).unwrap();
            let wb = weyl_vector(&table, c, &f_b, prec).unwrap();
            let want = rat((c + 6 / c) as i64, 24);
            assert_eq!(wa.rational, want, "cusp 1/{c} via F_6");
            assert_eq!(wb.rational, want, "cusp 1/{c} via the deeper input");
        }
    }

    #[test]
    fn norms_at_level_ten_match_the_closed_forms() {
        let prec = Precision::new(256).unwrap();
        let f = construct_f(10, 12).unwrap();

        let table = CoeffTable::from_exact_form(&theta_half(10, 2)).unwrap();
        let half = inner_product_theta_half(&table, &f, prec).unwrap();
        assert_eq!(half.rhs_rational, rat(-11, 12));
        let want = std::f64::consts::PI * 11.0 / (3.0 * 10f64.sqrt());
        assert!((half.value.re().to_f64() - want).abs() < 1e-10);

        let table3 =
            CoeffTable::from_exact_form(&crate::weilrep::theta_threehalf(10, 2)).unwrap();
        let three = inner_product_theta_threehalf(&table3, &f, prec).unwrap();
        assert_eq!(three.rhs_rational, rat(-3, 4));
        let want3 = 10f64.sqrt() * 9.0 / 6.0;
        assert!((three.value.re().to_f64() - want3).abs() < 1e-10);
    }
}
