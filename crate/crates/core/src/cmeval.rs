//! Arbitrary-precision evaluation of η, E₄, eta quotients, and the level 6
//! function at points of the upper half-plane.
//!
//! Everything is evaluated through reduction to the standard fundamental
//! domain: repeat τ ↦ τ − round(Re τ) and τ ↦ −1/τ (when |τ| < 1) until
//! |Re τ| ≤ 1/2 and |τ| ≥ 1.  At the reduced point |q| ≤ e^{−π√3}, so a
//! product or series with M = ceil((bits + 32)·ln2 / (π√3)) factors already
//! has its tail far below the last retained bit, no matter how close to the
//! real axis the original point was.
//!
//! For η the reduction steps carry the multiplier along:
//! η(τ+1) = e^{πi/12} η(τ) and η(−1/τ) = √(−iτ) η(τ) (principal branch).
//! The accumulated multiplier is kept as one complex number rather than a
//! root-of-unity index — at the few dozen steps a reduction takes, the
//! rounding this costs is negligible.

use std::collections::BTreeMap;

use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::numctx::{e, e_rational, sigma3, BigComplex, Precision};
use crate::qseries::FracQSeries;
use crate::quadforms::Mat2;

/// Outcome of fundamental-domain reduction: gamma·τ_original = tau.
#[derive(Clone, Debug)]
pub struct ReductionResult {
    pub gamma: Mat2,
    pub tau: BigComplex,
}

/// (aτ + b)/(cτ + d).
pub fn moebius(g: &Mat2, z: &BigComplex) -> BigComplex {
    let p = z.prec();
    let num = &z.scale_int(g.a) + &BigComplex::from_int(g.b, p);
    let den = &z.scale_int(g.c) + &BigComplex::from_int(g.d, p);
    &num / &den
}

fn ensure_upper(z: &BigComplex) -> Result<()> {
    if !z.is_finite() {
        return Err(Error::NonFinite);
    }
    if !(z.im().is_sign_positive() && !z.im().is_zero()) {
        return Err(Error::NotInUpperHalfPlane(z.im().to_f64()));
    }
    Ok(())
}

/// Reduction loop shared by all evaluators.  Returns gamma with
/// gamma·τ = τ_red, the reduced point, and the eta multiplier m with
/// η(τ) = m·η(τ_red).
fn reduce_with_multiplier(
    tau: &BigComplex,
    prec: Precision,
) -> Result<(Mat2, BigComplex, BigComplex)> {
    ensure_upper(tau)?;
    let wp = prec.bits() + 32;
    let mut t = BigComplex::new(
        Float::with_val(wp, tau.re()),
        Float::with_val(wp, tau.im()),
    );
    let mut gamma = Mat2::IDENTITY;
    let mut mult = BigComplex::one(wp);
    // |τ| ≥ 1 − ε and |Re τ| ≤ 1/2 + ε count as inside
    let eps = Float::with_val(wp, Float::i_exp(1, -((prec.bits() / 2) as i32)));
    let threshold = Float::with_val(wp, 1i32 - &eps);
    let max_steps = 4 * prec.bits() as usize + 64;
    for _ in 0..max_steps {
        // translate Re into [-1/2, 1/2]
        let n_f = Float::with_val(wp, t.re()).round();
        if !n_f.is_zero() {
            let n = n_f
                .to_integer()
                .and_then(|i| i.to_i64())
                .ok_or_else(|| Error::validation("translation distance overflows"))?;
            t = BigComplex::new(Float::with_val(wp, t.re() - &n_f), Float::with_val(wp, t.im()));
            gamma = Mat2 {
                a: 1,
                b: -n,
                c: 0,
                d: 1,
            }
            .mul(&gamma);
            // η(t + n) = e(n/24) η(t)
            mult = &mult * &e_rational(&Rational::from((n, 24)), wp);
        }
        let norm = t.norm_sqr();
        if norm >= threshold {
            return Ok((gamma, t, mult));
        }
        // invert: t ↦ -1/t
        let t_new = (-&t).checked_recip()?;
        gamma = Mat2 {
            a: 0,
            b: -1,
            c: 1,
            d: 0,
        }
        .mul(&gamma);
        // η(old) = η(−1/new) = √(−i·new) η(new)
        mult = &mult * &(-&t_new.mul_i()).sqrt();
        t = t_new;
    }
    Err(Error::PrecisionExhausted {
        bits: prec.bits(),
        context: "fundamental domain reduction did not settle".into(),
    })
}

/// Reduce τ to the standard fundamental domain, returning the matrix that
/// got there: gamma·τ = tau (|Re| ≤ 1/2 + ε, |τ| ≥ 1 − ε).
pub fn reduce_to_fd(tau: &BigComplex, prec: Precision) -> Result<ReductionResult> {
    let (gamma, t, _) = reduce_with_multiplier(tau, prec)?;
    Ok(ReductionResult { gamma, tau: t })
}

/// Number of product/series terms that push the tail below the target
/// precision at a reduced point, where |q| ≤ e^{−π√3}.
fn terms_for(bits: u32, margin: u32) -> i64 {
    let ln2 = std::f64::consts::LN_2;
    let rate = std::f64::consts::PI * 3f64.sqrt();
    (((bits + margin) as f64) * ln2 / rate).ceil() as i64
}

/// η(τ) = q^{1/24} ∏ (1 − q^n), evaluated anywhere in the upper half-plane
/// with relative error ≤ 2^{−bits+8}.
pub fn eval_eta(tau: &BigComplex, prec: Precision) -> Result<BigComplex> {
    let (_, t, mult) = reduce_with_multiplier(tau, prec)?;
    let wp = t.prec();
    // q^{1/24} = e(t/24)
    let mut value = e(&t.scale_rational(&Rational::from((1, 24))));
    let q = e(&t);
    let mut q_pow = q.clone();
    for _ in 1..=terms_for(prec.bits(), 32) {
        value = &value * &(&BigComplex::one(wp) - &q_pow);
        q_pow = &q_pow * &q;
    }
    Ok(&mult * &value)
}

/// ∏_d η(dz)^{e_d}.
pub fn eval_eta_quotient(
    exponents: &BTreeMap<u32, i64>,
    z: &BigComplex,
    prec: Precision,
) -> Result<BigComplex> {
    ensure_upper(z)?;
    let mut acc = BigComplex::one(prec.bits() + 32);
    for (&d, &exp) in exponents {
        if d == 0 {
            return Err(Error::validation("eta quotient divisor must be positive"));
        }
        if exp == 0 {
            continue;
        }
        let factor = eval_eta(&z.scale_int(d as i64), prec)?;
        acc = &acc * &factor.pow_i64(exp)?;
    }
    Ok(acc)
}

/// E₄(τ) = 1 + 240 Σ σ₃(n) q^n via the weight-4 law at the reduced point:
/// E₄(τ) = (cτ+d)^{−4} E₄(γτ).
pub fn eval_e4(tau: &BigComplex, prec: Precision) -> Result<BigComplex> {
    let red = reduce_to_fd(tau, prec)?;
    let t = &red.tau;
    let wp = t.prec();
    let mut value = BigComplex::one(wp);
    let q = e(t);
    let mut q_pow = q.clone();
    for n in 1..=terms_for(prec.bits(), 48) {
        let coeff = Float::with_val(wp, sigma3(n as u64) * 240u32);
        value = &value + &q_pow.scale(&coeff);
        q_pow = &q_pow * &q;
    }
    // undo the reduction: j = c·τ_original + d
    let j = &tau.scale_int(red.gamma.c) + &BigComplex::from_int(red.gamma.d, wp);
    Ok(&value * &j.pow_i64(-4)?)
}

/// The level 6 function −(1/40)·(E₄(z) + 4E₄(2z) − 9E₄(3z) − 36E₄(6z)) /
/// (η(z)η(2z)η(3z)η(6z))², evaluated through the reduced-point strategy so
/// points close to the real line (Heegner points) are harmless.
pub fn eval_f6(z: &BigComplex, prec: Precision) -> Result<BigComplex> {
    ensure_upper(z)?;
    let e4_1 = eval_e4(z, prec)?;
    let e4_2 = eval_e4(&z.scale_int(2), prec)?;
    let e4_3 = eval_e4(&z.scale_int(3), prec)?;
    let e4_6 = eval_e4(&z.scale_int(6), prec)?;
    let num = &(&(&e4_1 + &e4_2.scale_int(4)) - &e4_3.scale_int(9)) - &e4_6.scale_int(36);
    let exps: BTreeMap<u32, i64> = [(1u32, 2i64), (2, 2), (3, 2), (6, 2)].into_iter().collect();
    let den = eval_eta_quotient(&exps, z, prec)?;
    let ratio = &num / &den;
    Ok(ratio.scale_rational(&Rational::from((-1, 40))))
}

/// Sum a finite rational q-series at z: Σ c_k e(k z / den).  Intended for
/// cross-checks at comfortably high points, where the omitted tail beyond
/// the series truncation is tiny.
pub fn eval_q_series(s: &FracQSeries<Rational>, z: &BigComplex, bits: u32) -> Result<BigComplex> {
    ensure_upper(z)?;
    let base = e(&z.scale_rational(&Rational::from((1, s.den() as i64))));
    let mut acc = BigComplex::zero(bits.max(z.prec()));
    for (&k, c) in s.iter() {
        acc = &acc + &base.pow_i64(k)?.scale_rational(c);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::ops::Pow;
    use crate::qseries;

    fn prec(bits: u32) -> Precision {
        Precision::new(bits).unwrap()
    }

    fn cx(re: f64, im: f64, bits: u32) -> BigComplex {
        BigComplex::from_f64(re, im, bits)
    }

    fn assert_close(a: &BigComplex, b: &BigComplex, log2_tol: i32) {
        let diff = (a - b).abs().to_f64();
        let scale = b.abs().to_f64().max(1e-300);
        assert!(
            diff / scale < 2f64.powi(log2_tol),
            "relative difference 2^{:.1} exceeds 2^{log2_tol}\n a = {a:?}\n b = {b:?}",
            (diff / scale).log2()
        );
    }

    #[test]
    fn reduction_examples() {
        let p = prec(192);
        // i/10 inverts once to 10i
        let tenth = BigComplex::new(
            Float::new(192),
            Float::with_val(192, Rational::from((1, 10))),
        );
        let r = reduce_to_fd(&tenth, p).unwrap();
        assert_eq!(r.gamma, Mat2 { a: 0, b: -1, c: 1, d: 0 });
        assert!((Float::with_val(192, r.tau.im() - 10u32)).to_f64().abs() < 1e-40);
        // 10i is already reduced
        let r = reduce_to_fd(&cx(0.0, 10.0, 192), p).unwrap();
        assert_eq!(r.gamma, Mat2::IDENTITY);
        // a Heegner point lands above the height of the corners
        let z = cx(10.0 / 12.0, 20f64.sqrt() / 12.0, 192);
        let r = reduce_to_fd(&z, p).unwrap();
        assert!(r.tau.im().to_f64() >= 0.866);
        // gamma really maps the input to the reduced point
        let moved = moebius(&r.gamma, &z);
        assert_close(&moved, &r.tau, -150);
        // not defined below the real axis
        assert!(reduce_to_fd(&cx(0.3, -1.0, 192), p).is_err());
        assert!(reduce_to_fd(&cx(0.3, 0.0, 192), p).is_err());
    }

    #[test]
    fn eta_at_i_matches_gamma_function_closed_form() {
        let bits = 256;
        let v = eval_eta(&cx(0.0, 1.0, bits), prec(bits)).unwrap();
        // η(i) = Γ(1/4) / (2 π^{3/4})
        let g = Float::with_val(bits + 32, Rational::from((1, 4))).gamma();
        let pi = crate::numctx::pi(bits + 32);
        let expect = g / (2u32 * pi.pow(Float::with_val(bits + 32, Rational::from((3, 4)))));
        assert!(v.im().to_f64().abs() < 1e-70);
        let diff = Float::with_val(bits, v.re() - &expect).abs();
        assert!(diff.to_f64() < 2f64.powi(-(bits as i32) + 8), "diff = {diff}");
        // spot value from the same closed form
        assert!((v.re().to_f64() - 0.7682254223260566).abs() < 1e-15);
    }

    #[test]
    fn eta_at_2i_matches_gamma_function_closed_form() {
        let bits = 224;
        let v = eval_eta(&cx(0.0, 2.0, bits), prec(bits)).unwrap();
        // η(2i) = Γ(1/4) / (2^{11/8} π^{3/4})
        let wp = bits + 32;
        let g = Float::with_val(wp, Rational::from((1, 4))).gamma();
        let pi = crate::numctx::pi(wp);
        let expect = g
            / (Float::with_val(wp, 2).pow(Float::with_val(wp, Rational::from((11, 8))))
                * pi.pow(Float::with_val(wp, Rational::from((3, 4)))));
        let diff = Float::with_val(bits, v.re() - &expect).abs();
        assert!(diff.to_f64() < 2f64.powi(-(bits as i32) + 8), "diff = {diff}");
    }

    #[test]
    fn eta_transformation_laws() {
        let bits = 192;
        let p = prec(bits);
        // translation law at (1+5i)/3
        let tau = cx(1.0 / 3.0, 5.0 / 3.0, bits);
        let shifted = &tau + &BigComplex::one(bits);
        let lhs = eval_eta(&shifted, p).unwrap();
        let rhs = &eval_eta(&tau, p).unwrap() * &e_rational(&Rational::from((1, 24)), bits);
        assert_close(&lhs, &rhs, -(bits as i32) + 16);
        // inversion law at 2i: η(i/2) = √(−i·2i) η(2i) = √2 η(2i)
        let lhs = eval_eta(&cx(0.0, 0.5, bits), p).unwrap();
        let rhs = eval_eta(&cx(0.0, 2.0, bits), p)
            .unwrap()
            .scale(&Float::with_val(bits, 2).sqrt());
        assert_close(&lhs, &rhs, -(bits as i32) + 16);
    }

    #[test]
    fn eta_multiplier_paths_agree() {
        // same reduced point through different translation histories
        let bits = 192;
        let p = prec(bits);
        for (re, im, shift) in [
            (0.37, 0.21, 5i64),
            (-0.11, 0.06, -7),
            (0.49, 0.8, 3),
            (0.02, 0.013, -11),
        ] {
            let tau = cx(re, im, bits);
            let shifted = &tau + &BigComplex::from_int(shift, bits);
            let direct = eval_eta(&shifted, p).unwrap();
            let via_law =
                &eval_eta(&tau, p).unwrap() * &e_rational(&Rational::from((shift, 24)), bits);
            assert_close(&direct, &via_law, -(bits as i32) + 12);
        }
    }

    // Dedekind-sum closed form for the eta multiplier, used only as an
    // independent cross-check: for γ = (a,b;c,d) with c > 0,
    // η(γτ) = ε(γ) √(cτ+d) η(τ) with
    // ε(γ) = exp(πi((a+d)/(12c) − s(d,c) − 1/4)).
    fn dedekind_sum(d: i64, c: i64) -> Rational {
        let mut s = Rational::new();
        for k in 1..c {
            let saw = |x: Rational| -> Rational {
                if x.is_integer() {
                    Rational::new()
                } else {
                    let floor = x.clone().floor();
                    x - floor - Rational::from((1, 2))
                }
            };
            s += saw(Rational::from((k, c))) * saw(Rational::from((d * k, c)));
        }
        s
    }

    fn eta_multiplier_closed_form(g: &Mat2, bits: u32) -> BigComplex {
        assert!(g.c > 0);
        let angle = Rational::from((g.a + g.d, 24 * g.c))
            - dedekind_sum(g.d, g.c) / Rational::from(2)
            - Rational::from((1, 8));
        e_rational(&angle, bits)
    }

    #[test]
    fn eta_multiplier_matches_dedekind_sum_formula() {
        let bits = 192;
        let p = prec(bits);
        // deterministic walk through SL₂: words in T^k S
        let mut mats = Vec::new();
        let mut seed = 0x2545f4914f6cdd1du64;
        while mats.len() < 20 {
            let mut g = Mat2::IDENTITY;
            for _ in 0..6 {
                seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let k = ((seed >> 33) % 7) as i64 - 3;
                g = g.mul(&Mat2 { a: 1, b: k, c: 0, d: 1 });
                g = g.mul(&Mat2 { a: 0, b: -1, c: 1, d: 0 });
            }
            if g.c < 0 {
                g = g.neg();
            }
            if g.c > 0 {
                mats.push(g);
            }
        }
        let tau = cx(0.3, 0.8, bits);
        let eta_tau = eval_eta(&tau, p).unwrap();
        for g in mats {
            let lhs = eval_eta(&moebius(&g, &tau), p).unwrap();
            let j = &tau.scale_int(g.c) + &BigComplex::from_int(g.d, bits);
            let rhs = &(&eta_multiplier_closed_form(&g, bits) * &j.sqrt()) * &eta_tau;
            assert_close(&lhs, &rhs, -(bits as i32) + 24);
        }
    }

    #[test]
    fn e4_at_i_matches_gamma_function_closed_form() {
        let bits = 224;
        let v = eval_e4(&cx(0.0, 1.0, bits), prec(bits)).unwrap();
        // E₄(i) = 3 Γ(1/4)^8 / (2π)^6
        let wp = bits + 32;
        let g = Float::with_val(wp, Rational::from((1, 4))).gamma();
        let two_pi = crate::numctx::pi(wp) * 2u32;
        let expect = 3u32 * g.pow(8) / two_pi.pow(6);
        assert!(v.im().to_f64().abs() < 1e-60);
        let diff = Float::with_val(bits, v.re() - &expect).abs();
        assert!(diff.to_f64() < 2f64.powi(-(bits as i32) + 10), "diff = {diff}");
        assert!((v.re().to_f64() - 1.4557628922687093).abs() < 1e-12);
    }

    #[test]
    fn e4_vanishes_at_the_corner() {
        let bits = 192;
        // ρ = e^{2πi/3} is a zero of E₄
        let rho = BigComplex::new(
            Float::with_val(bits, Rational::from((-1, 2))),
            Float::with_val(bits, 3).sqrt() / 2u32,
        );
        let v = eval_e4(&rho, prec(bits)).unwrap();
        assert!(v.abs().to_f64() < 2f64.powi(-(bits as i32) + 24), "{v:?}");
    }

    #[test]
    fn e4_transformation_laws() {
        let bits = 192;
        let p = prec(bits);
        // periodicity at (1+7i)/5
        let tau = cx(0.2, 1.4, bits);
        let lhs = eval_e4(&(&tau + &BigComplex::one(bits)), p).unwrap();
        let rhs = eval_e4(&tau, p).unwrap();
        assert_close(&lhs, &rhs, -(bits as i32) + 16);
        // weight-4 inversion law at 1/2 + 2i
        let tau = cx(0.5, 2.0, bits);
        let inv = (-&tau).checked_recip().unwrap();
        let lhs = eval_e4(&inv, p).unwrap();
        let rhs = &eval_e4(&tau, p).unwrap() * &tau.pow_i64(4).unwrap();
        assert_close(&lhs, &rhs, -(bits as i32) + 16);
        // agreement with the q-expansion partial sums at 5i
        let series = qseries::eisenstein_e4(60);
        let direct = eval_q_series(&series, &cx(0.0, 5.0, bits), bits).unwrap();
        let reduced = eval_e4(&cx(0.0, 5.0, bits), p).unwrap();
        assert_close(&direct, &reduced, -(bits as i32) + 8);
    }

    #[test]
    fn eta_quotient_composition() {
        let bits = 160;
        let p = prec(bits);
        let z = cx(0.0, 1.0, bits);
        let single: BTreeMap<u32, i64> = [(1u32, 24i64)].into_iter().collect();
        let lhs = eval_eta_quotient(&single, &z, p).unwrap();
        let rhs = eval_eta(&z, p).unwrap().pow_i64(24).unwrap();
        assert_close(&lhs, &rhs, -(bits as i32) + 16);
        // empty product is 1
        let empty = BTreeMap::new();
        let one = eval_eta_quotient(&empty, &z, p).unwrap();
        assert!((&one - &BigComplex::one(bits)).abs().to_f64() < 1e-40);
        // the N = 2 Hauptmodul: series at 2i vs evaluation at 2i
        let exps: BTreeMap<u32, i64> = [(1u32, 24i64), (2, -24)].into_iter().collect();
        let series = qseries::eta_quotient_series(&exps, 40).unwrap().normalize_den();
        let by_series = eval_q_series(&series, &cx(0.0, 2.0, bits), bits).unwrap();
        let by_eval = eval_eta_quotient(&exps, &cx(0.0, 2.0, bits), p).unwrap();
        assert_close(&by_series, &by_eval, -(bits as i32) / 2);
    }

    #[test]
    fn f6_matches_its_q_expansion_high_in_the_strip() {
        let bits = 192;
        let series = qseries::build_f6(20);
        let z = cx(0.0, 3.0, bits);
        let by_series = eval_q_series(&series, &z, bits).unwrap();
        let by_eval = eval_f6(&z, prec(bits)).unwrap();
        assert_close(&by_series, &by_eval, -(bits as i32) / 2);
    }

    #[test]
    fn f6_is_gamma0_6_invariant() {
        let bits = 192;
        let p = prec(bits);
        let z = cx(1.0 / 7.0, 9.0 / 7.0, bits);
        let base = eval_f6(&z, p).unwrap();
        for g in [
            Mat2 { a: 1, b: 1, c: 0, d: 1 },
            Mat2 { a: 1, b: 0, c: 6, d: 1 },
            Mat2 { a: 5, b: -1, c: 6, d: -1 },
        ] {
            assert_eq!(g.det(), 1);
            assert!(g.in_gamma0(6));
            let moved = eval_f6(&moebius(&g, &z), p).unwrap();
            let diff = (&moved - &base).abs().to_f64();
            assert!(diff < 2f64.powi(-(bits as i32) / 2), "g = {g:?}, diff = {diff:e}");
        }
    }

    #[test]
    fn f6_value_at_the_discriminant_minus20_heegner_points() {
        let bits = 256;
        let p = prec(bits);
        let sqrt20 = Float::with_val(bits, 20).sqrt();
        let z1 = BigComplex::new(
            Float::with_val(bits, Rational::from((10, 12))),
            Float::with_val(bits, &sqrt20 / 12u32),
        );
        let z2 = BigComplex::new(
            Float::with_val(bits, Rational::from((34, 84))),
            Float::with_val(bits, &sqrt20 / 84u32),
        );
        let v1 = eval_f6(&z1, p).unwrap();
        let v2 = eval_f6(&z2, p).unwrap();
        // the two CM values agree...
        assert!((&v1 - &v2).abs().to_f64() < 1e-10);
        // ...and the displayed 12 digits of the imaginary part are right
        let im = v1.im().to_f64();
        assert!(
            (im - 17.888543820000).abs() < 1e-10,
            "Im F6(z_Q1) = {im:.15}"
        );
        // real part is not pinned; record how small it comes out
        println!("Re F6(z_Q1) = {:e}", v1.re().to_f64());
        println!("Im F6(z_Q1) = {}", v1.im().to_string_radix(10, Some(40)));
    }
}
