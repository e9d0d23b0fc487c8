//! The discriminant form ℤ/2Nℤ and its vector-valued modular forms.
//!
//! The lattice ℤ with quadratic form n ↦ Nn² has dual (1/2N)ℤ, so its
//! discriminant group is ℤ/2Nℤ with Q(r) = r²/4N mod 1.  The Weil
//! representation ρ = ρ_N acts on ℂ[ℤ/2Nℤ] through the generators of the
//! metaplectic group:
//!
//! ```text
//!   ρ(T) e_r = e(r²/4N) e_r
//!   ρ(S) e_r = (e(−1/8)/√2N) Σ_{r'} e(−r r'/2N) e_{r'}
//! ```
//!
//! The unary theta functions
//!
//! ```text
//!   θ_{1/2} = Σ_r Σ_{b ≡ r (2N)} q^{b²/4N} e_r,
//!   θ_{3/2} = Σ_r Σ_{b ≡ r (2N)} b q^{b²/4N} e_r
//! ```
//!
//! are holomorphic of weight 1/2 resp. 3/2 for ρ.  Two coefficient-shuffling
//! operators generate more theta functions from these: the Atkin-Lehner
//! involutions σ_c (one per exact divisor c ‖ N, permuting components) and
//! the index-raising operator U_d (level N → Nd², redistributing components
//! without changing the coefficient set).  The forms
//! θ_{1/2,N/g²}^{σ_{c/g}}|U_g with g = (c, N/c), one per divisor class
//! c ∈ 𝒟(N) = {c | N}/(c ∼ N/c), are a basis of the whole space of
//! weight-1/2 holomorphic forms for ρ_N; `theta_basis` builds them and
//! certifies their independence with an exact rank computation.

use rug::{Float, Rational};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::numctx::{e, e_rational, float_from_rational, BigComplex, Precision};
use crate::qseries::{FracQSeries, SeriesCoeff};

/// The Weil representation attached to ℤ/2Nℤ, or its dual.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rep {
    Rho,
    RhoBar,
}

impl Rep {
    pub fn as_str(&self) -> &'static str {
        match self {
            Rep::Rho => "rho",
            Rep::RhoBar => "rho_bar",
        }
    }
}

impl std::str::FromStr for Rep {
    type Err = Error;
    fn from_str(s: &str) -> Result<Rep> {
        match s {
            "rho" => Ok(Rep::Rho),
            "rho_bar" => Ok(Rep::RhoBar),
            other => Err(Error::Parse(format!(
                "bad representation {other:?} (want rho or rho_bar)"
            ))),
        }
    }
}

/// A vector-valued q-expansion Σ_r f_r e_r with components indexed by the
/// canonical residues 0..2N−1 and exponents in (1/4N)ℤ.
///
/// The support invariant ties exponents to components: for ρ, component r
/// only carries exponent numerators k ≡ r² mod 4N; for ρ̄ the sign flips,
/// k ≡ −r² mod 4N.
#[derive(Clone, Debug)]
pub struct VVForm<C: SeriesCoeff = Rational> {
    n: u32,
    rep: Rep,
    /// Twice the weight, so 1 means weight 1/2 and 3 means weight 3/2.
    weight2: i32,
    components: Vec<FracQSeries<C>>,
}

impl<C: SeriesCoeff> VVForm<C> {
    pub fn new(n: u32, rep: Rep, weight2: i32, components: Vec<FracQSeries<C>>) -> Result<Self> {
        let f = VVForm {
            n,
            rep,
            weight2,
            components,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn level(&self) -> u32 {
        self.n
    }

    pub fn rep(&self) -> Rep {
        self.rep
    }

    pub fn weight_times_two(&self) -> i32 {
        self.weight2
    }

    /// Numerator residue mod 4N allowed on component r.
    fn support_residue(&self, r: i64) -> i64 {
        let m = 4 * self.n as i64;
        match self.rep {
            Rep::Rho => (r * r).rem_euclid(m),
            Rep::RhoBar => (-r * r).rem_euclid(m),
        }
    }

    /// Checks component count, common denominator 4N, and the support
    /// congruence.  Constructors run this; U_d re-runs it post hoc.
    pub fn validate(&self) -> Result<()> {
        if self.components.len() != 2 * self.n as usize {
            return Err(Error::validation(format!(
                "expected {} components, got {}",
                2 * self.n,
                self.components.len()
            )));
        }
        let m = 4 * self.n as i64;
        for (r, comp) in self.components.iter().enumerate() {
            if comp.den() != 4 * self.n {
                return Err(Error::validation(format!(
                    "component {r} has denominator {}, expected {}",
                    comp.den(),
                    4 * self.n
                )));
            }
            let want = self.support_residue(r as i64);
            for (&k, _) in comp.iter() {
                if k.rem_euclid(m) != want {
                    return Err(Error::Congruence(format!(
                        "component {r} carries exponent numerator {k}, \
                         but {k} != {want} mod {m}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Component e_r; r is reduced into 0..2N−1, so e_{−r} resolves to
    /// e_{2N−r}.
    pub fn component(&self, r: i64) -> &FracQSeries<C> {
        let idx = r.rem_euclid(2 * self.n as i64) as usize;
        &self.components[idx]
    }

    pub fn components(&self) -> &[FracQSeries<C>] {
        &self.components
    }

    /// Coefficient at exponent numerator k on component r, if stored.
    pub fn coeff(&self, k: i64, r: i64) -> Option<&C> {
        self.component(r).coeff(k)
    }

    /// f^σ = Σ_r f_r e_{σ(r)} for the Atkin-Lehner involution attached to
    /// the exact divisor c of the level.
    pub fn apply_sigma(&self, c: u32) -> Result<VVForm<C>> {
        let perm = atkin_lehner_sigma(self.n, c)?;
        let mut components = vec![self.components[0].clone(); self.components.len()];
        for (r, comp) in self.components.iter().enumerate() {
            components[perm[r]] = comp.clone();
        }
        VVForm::new(self.n, self.rep, self.weight2, components)
    }
}

impl VVForm<Rational> {
    /// Numerically sum every component at τ in the upper half-plane.
    ///
    /// Uses the same honesty rule as the eta evaluator: the stored window
    /// must reach exponents whose q-powers fall below the target
    /// precision, otherwise the evaluation refuses to pretend.
    pub fn eval_components(&self, tau: &BigComplex, prec: Precision) -> Result<Vec<BigComplex>> {
        let bits = prec.bits();
        let v = tau.im().to_f64();
        if !(v > 0.0) {
            return Err(Error::NotInUpperHalfPlane(v));
        }
        let trunc_value = (self.components[0].trunc() - 1) as f64 / (4.0 * self.n as f64);
        let needed = (bits as f64 + 32.0) * std::f64::consts::LN_2
            / (2.0 * std::f64::consts::PI * v);
        if trunc_value < needed {
            return Err(Error::PrecisionExhausted {
                bits,
                context: format!(
                    "series window reaches exponent {trunc_value:.1}, need {needed:.1} \
                     at Im tau = {v:.4}"
                ),
            });
        }
        // w = e(τ/4N); every term is an integer power of w
        let w = e(&tau.scale_rational(&Rational::from((1u32, 4 * self.n))));
        let mut out = Vec::with_capacity(self.components.len());
        for comp in &self.components {
            let mut acc = BigComplex::zero(bits);
            for (&k, c) in comp.iter() {
                let term = w.pow_i64(k)?.scale(&float_from_rational(c, bits));
                acc = &acc + &term;
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// JSON with components keyed by the residue r.
    pub fn to_json(&self) -> Value {
        let mut comps = serde_json::Map::new();
        for (r, c) in self.components.iter().enumerate() {
            comps.insert(r.to_string(), c.to_json());
        }
        json!({
            "N": self.n,
            "rep": self.rep.as_str(),
            "weight": format!("{}/2", self.weight2),
            "components": Value::Object(comps),
        })
    }
}

fn build_theta(n: u32, terms: i64, weighted: bool) -> VVForm<Rational> {
    assert!(n >= 1 && terms >= 1, "level and terms must be positive");
    let m = 4 * n as i64;
    let trunc = m * terms + 1;
    let mut components = vec![FracQSeries::new(4 * n, trunc); 2 * n as usize];
    let mut bmax: i64 = 0;
    while (bmax + 1) * (bmax + 1) < trunc {
        bmax += 1;
    }
    for b in -bmax..=bmax {
        if weighted && b == 0 {
            continue;
        }
        let r = b.rem_euclid(2 * n as i64) as usize;
        let c = if weighted {
            Rational::from(b)
        } else {
            Rational::from(1)
        };
        components[r].add_to_coeff(b * b, &c);
    }
    VVForm {
        n,
        rep: Rep::Rho,
        weight2: if weighted { 3 } else { 1 },
        components,
    }
}

/// θ_{1/2,N}: component r is Σ_{b ≡ r (2N)} q^{b²/4N}, exact through
/// exponent `terms`.
pub fn theta_half(n: u32, terms: i64) -> VVForm<Rational> {
    build_theta(n, terms, false)
}

/// θ_{3/2,N}: component r is Σ_{b ≡ r (2N)} b·q^{b²/4N}.  The signed
/// coefficient makes the e_{−r} = −e_r structure explicit in the data; in
/// particular the e₀ component vanishes identically.
pub fn theta_threehalf(n: u32, terms: i64) -> VVForm<Rational> {
    build_theta(n, terms, true)
}

/// The Atkin-Lehner involution σ_c on ℤ/2Nℤ for an exact divisor c ‖ N:
/// the unique solution of σ(r) ≡ −r mod 2c, σ(r) ≡ r mod 2N/c, returned
/// as the permutation vector r ↦ σ(r).
pub fn atkin_lehner_sigma(n: u32, c: u32) -> Result<Vec<usize>> {
    if c == 0 || n % c != 0 || gcd(c as u64, (n / c) as u64) != 1 {
        return Err(Error::NotExactDivisor { c, n });
    }
    let two_n = 2 * n as i64;
    let (c, q) = (c as i64, 2 * (n / c) as i64);
    let mut perm = Vec::with_capacity(two_n as usize);
    for r in 0..two_n {
        let mut image = None;
        for x in 0..two_n {
            if (x + r).rem_euclid(2 * c) == 0 && (x - r).rem_euclid(q) == 0 {
                image = Some(x as usize);
                break;
            }
        }
        // solvable because gcd(2c, 2N/c) = 2 always divides 2r
        perm.push(image.expect("CRT system is always solvable here"));
    }
    Ok(perm)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// U_d: level N → Nd².  Component r' of the image vanishes unless d | r',
/// and otherwise copies component (r'/d mod 2N) of the input with every
/// exponent value kept fixed (numerators scale by d² against the new
/// denominator 4Nd²).
pub fn u_operator<C: SeriesCoeff>(f: &VVForm<C>, d: u32) -> Result<VVForm<C>> {
    if d == 0 {
        return Err(Error::validation("U_d needs d >= 1"));
    }
    let n_out = f.n * d * d;
    let mut components = Vec::with_capacity(2 * n_out as usize);
    for rp in 0..2 * n_out as i64 {
        if rp % d as i64 == 0 {
            let src = f.component(rp / d as i64); // reduces mod 2N internally
            components.push(src.with_den(4 * n_out)?);
        } else {
            let trunc = f.components[0].trunc() * (d * d) as i64;
            components.push(FracQSeries::new(4 * n_out, trunc));
        }
    }
    VVForm::new(n_out, f.rep, f.weight2, components)
}

/// ρ_N(T) or ρ_N(S) as a dense 2N × 2N matrix.
#[derive(Clone, Debug)]
pub struct WeilMatrix {
    pub n: u32,
    entries: Vec<Vec<BigComplex>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gen {
    S,
    T,
}

impl WeilMatrix {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, r: usize, rp: usize) -> &BigComplex {
        &self.entries[r][rp]
    }

    /// Matrix-vector product (Σ_r v_r e_r ↦ its image).
    pub fn apply(&self, v: &[BigComplex]) -> Vec<BigComplex> {
        assert_eq!(v.len(), self.size());
        let bits = v[0].prec();
        let mut out = Vec::with_capacity(self.size());
        for row in 0..self.size() {
            let mut acc = BigComplex::zero(bits);
            for (col, vc) in v.iter().enumerate() {
                acc = &acc + &(&self.entries[row][col] * vc);
            }
            out.push(acc);
        }
        out
    }

    /// Largest |(M M* − I)_{jk}| — zero for a unitary matrix.
    pub fn unitarity_defect(&self, bits: u32) -> Float {
        let size = self.size();
        let mut worst = Float::with_val(bits, 0);
        for j in 0..size {
            for k in 0..size {
                let mut acc = BigComplex::zero(bits);
                for l in 0..size {
                    acc = &acc + &(&self.entries[j][l] * &self.entries[k][l].conj());
                }
                if j == k {
                    acc = &acc - &BigComplex::one(bits);
                }
                let a = acc.abs();
                if a > worst {
                    worst = a;
                }
            }
        }
        worst
    }
}

/// The representation matrices on the generators: ρ(T) is diagonal with
/// entries e(r²/4N); ρ(S) = (e(−1/8)/√2N) (e(−r r'/2N))_{r,r'}.  For ρ̄
/// conjugate entrywise.
pub fn weil_matrix(n: u32, gen: Gen, bits: u32) -> WeilMatrix {
    let two_n = 2 * n as i64;
    let mut entries = Vec::with_capacity(two_n as usize);
    match gen {
        Gen::T => {
            for r in 0..two_n {
                let mut row = Vec::with_capacity(two_n as usize);
                for rp in 0..two_n {
                    if r == rp {
                        row.push(e_rational(&Rational::from((r * r, 4 * n as i64)), bits));
                    } else {
                        row.push(BigComplex::zero(bits));
                    }
                }
                entries.push(row);
            }
        }
        Gen::S => {
            let scale =
                Float::with_val(bits, 1) / Float::with_val(bits, 2 * n).sqrt();
            let phase = e_rational(&Rational::from((-1, 8)), bits).scale(&scale);
            for r in 0..two_n {
                let mut row = Vec::with_capacity(two_n as usize);
                for rp in 0..two_n {
                    // entry taking e_rp to e_r: coefficient e(−r rp / 2N)
                    let ent = e_rational(&Rational::from((-r * rp, two_n)), bits);
                    row.push(&ent * &phase);
                }
                entries.push(row);
            }
        }
    }
    WeilMatrix { n, entries }
}

/// Divisors of N modulo the identification c ∼ N/c, represented by the
/// smaller member, ascending.
pub fn divisor_classes(n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut c = 1;
    while c * c <= n {
        if n % c == 0 {
            out.push(c);
        }
        c += 1;
    }
    out
}

/// The theta functions θ_{1/2,N/g²}^{σ_{c/g}}|U_g, g = (c, N/c), one per
/// divisor class c ∈ 𝒟(N).  They form a basis of the weight-1/2 space for
/// ρ_N; this is certified by an exact rank computation over ℚ on the
/// stored coefficient windows, and a rank deficiency is reported as an
/// error rather than returned.
pub fn theta_basis(n: u32, terms: i64) -> Result<Vec<VVForm<Rational>>> {
    if terms < n as i64 {
        return Err(Error::validation(format!(
            "terms = {terms} is too small for level {n}: need terms >= N"
        )));
    }
    let mut basis = Vec::new();
    for c in divisor_classes(n) {
        let g = gcd(c as u64, (n / c) as u64) as u32;
        let level0 = n / (g * g);
        let theta = theta_half(level0, terms).apply_sigma(c / g)?;
        basis.push(u_operator(&theta, g)?);
    }

    // rank certificate on the (r, exponent) coefficient matrix
    let kmax = basis.iter().map(|f| f.components[0].trunc()).min().unwrap();
    let mut columns = std::collections::BTreeSet::new();
    for f in &basis {
        for (r, comp) in f.components.iter().enumerate() {
            for (&k, _) in comp.iter() {
                if k < kmax {
                    columns.insert((r, k));
                }
            }
        }
    }
    let rows: Vec<Vec<Rational>> = basis
        .iter()
        .map(|f| {
            columns
                .iter()
                .map(|&(r, k)| f.components[r].coeff(k).cloned().unwrap_or_default())
                .collect()
        })
        .collect();
    let rank = exact_rank(rows);
    if rank != basis.len() {
        return Err(Error::RankDeficient {
            rank,
            expected: basis.len(),
        });
    }
    Ok(basis)
}

/// Row rank of a rational matrix by fraction-free-enough Gaussian
/// elimination (exact arithmetic, so "enough" is exact).
fn exact_rank(mut rows: Vec<Vec<Rational>>) -> usize {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    let mut col = 0;
    while rank < rows.len() && col < ncols {
        if let Some(p) = (rank..rows.len()).find(|&i| rows[i][col] != 0) {
            rows.swap(rank, p);
            let inv = Rational::from(rows[rank][col].recip_ref());
            for i in rank + 1..rows.len() {
                if rows[i][col] != 0 {
                    let factor = Rational::from(&rows[i][col] * &inv);
                    for j in col..ncols {
                        let sub = Rational::from(&factor * &rows[rank][j]);
                        rows[i][j] -= sub;
                    }
                }
            }
            rank += 1;
        }
        col += 1;
    }
    rank
}

/// √τ with the principal branch, as the transformation laws demand.
pub fn sqrt_tau(tau: &BigComplex) -> BigComplex {
    tau.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries;

    fn prec(bits: u32) -> Precision {
        Precision::new(bits).unwrap()
    }

    #[test]
    fn theta_half_level_one_expansions() {
        let th = theta_half(1, 9);
        // e₀: 1 + 2q + 2q⁴ + 2q⁹ at numerators 0, 4, 16, 36 over den 4
        assert_eq!(th.coeff(0, 0), Some(&Rational::from(1)));
        assert_eq!(th.coeff(4, 0), Some(&Rational::from(2)));
        assert_eq!(th.coeff(16, 0), Some(&Rational::from(2)));
        assert_eq!(th.coeff(36, 0), Some(&Rational::from(2)));
        // e₁: 2q^{1/4} + 2q^{9/4} + 2q^{25/4}
        assert_eq!(th.coeff(1, 1), Some(&Rational::from(2)));
        assert_eq!(th.coeff(9, 1), Some(&Rational::from(2)));
        assert_eq!(th.coeff(25, 1), Some(&Rational::from(2)));
        th.validate().unwrap();
    }

    #[test]
    fn theta_threehalf_signed_structure() {
        // e₀ cancels termwise; e_r and e_{2N−r} are negatives
        let th = theta_threehalf(3, 12);
        assert!(th.component(0).is_zero_series());
        for r in 1..3i64 {
            let sum = th.component(r).add(th.component(-r));
            assert!(sum.is_zero_series(), "e_{r} + e_{{-{r}}} should cancel");
        }
        // level 6: each component r starts with the smallest b ≡ r mod 12,
        // carrying the signed coefficient b itself
        let th6 = theta_threehalf(6, 10);
        assert_eq!(th6.coeff(1, 1), Some(&Rational::from(1)));
        assert_eq!(th6.coeff(25, 5), Some(&Rational::from(5)));
        assert_eq!(th6.coeff(49, 7), Some(&Rational::from(7)));
        assert_eq!(th6.coeff(25, 7), Some(&Rational::from(-5))); // b = −5
    }

    #[test]
    fn theta_half_level_six_starts_at_the_right_exponent() {
        let th = theta_half(6, 10);
        assert_eq!(th.component(1).low(), 1); // q^{1/24}
        assert_eq!(th.coeff(1, 1), Some(&Rational::from(1)));
        assert_eq!(th.coeff(1, 11), Some(&Rational::from(1))); // b = −1
    }

    #[test]
    fn theta_threehalf_level_two_is_eta_cubed_times_e1_minus_e3() {
        // η(τ)³ = Σ_k (−1)^k (2k+1) q^{(2k+1)²/8}
        let th = theta_threehalf(2, 20);
        let eta3 = qseries::eta(170)
            .pow_i64(3)
            .unwrap()
            .normalize_den()
            .with_den(8)
            .unwrap();
        let e1 = th.component(1);
        for (&k, c) in e1.iter() {
            assert_eq!(eta3.coeff(k), Some(c), "coefficient at q^{{{k}/8}}");
        }
        // and every eta³ term inside the window shows up
        for (&k, c) in eta3.iter() {
            if k < e1.trunc() {
                assert_eq!(e1.coeff(k), Some(c));
            }
        }
        let neg = th.component(3).neg();
        assert_eq!(&neg, e1);
    }

    #[test]
    fn support_congruence_is_enforced() {
        let mut comps = vec![FracQSeries::new(4, 40); 2];
        comps[1].add_to_coeff(2, &Rational::from(1)); // 2 ≢ 1 mod 4
        assert!(VVForm::new(1, Rep::Rho, 1, comps).is_err());

        // rho_bar flips the sign of the allowed residue
        let mut comps = vec![FracQSeries::new(12, 40); 6];
        comps[1].add_to_coeff(-1, &Rational::from(1)); // −1 ≡ −1² mod 12
        assert!(VVForm::new(3, Rep::RhoBar, 1, comps.clone()).is_ok());
        comps[1].add_to_coeff(1, &Rational::from(1));
        assert!(VVForm::new(3, Rep::RhoBar, 1, comps).is_err());
    }

    #[test]
    fn atkin_lehner_permutations() {
        // N=6, c=2: x ≡ −1 mod 4 and x ≡ 1 mod 6 gives x = 7
        let sigma = atkin_lehner_sigma(6, 2).unwrap();
        assert_eq!(sigma[1], 7);
        // c = 1 is the identity
        assert_eq!(atkin_lehner_sigma(6, 1).unwrap(), (0..12).collect::<Vec<_>>());
        // c = N negates
        let full = atkin_lehner_sigma(6, 6).unwrap();
        for r in 0..12usize {
            assert_eq!(full[r], (12 - r) % 12);
        }
        // involution + Q-invariance for all N ≤ 30 and all exact divisors
        for n in 1..=30u32 {
            for c in 1..=n {
                if n % c != 0 || gcd(c as u64, (n / c) as u64) != 1 {
                    continue;
                }
                let s = atkin_lehner_sigma(n, c).unwrap();
                let m = 4 * n as i64;
                for r in 0..2 * n as usize {
                    assert_eq!(s[s[r]], r, "sigma_{c} not an involution at N={n}");
                    let (x, y) = (r as i64, s[r] as i64);
                    assert_eq!(
                        (x * x).rem_euclid(m),
                        (y * y).rem_euclid(m),
                        "sigma_{c} moved the quadratic form value at N={n}"
                    );
                }
            }
        }
        // non-exact divisors are rejected
        assert!(atkin_lehner_sigma(4, 2).is_err());
        assert!(atkin_lehner_sigma(6, 4).is_err());
    }

    #[test]
    fn u_operator_redistributes_without_changing_coefficients() {
        let th = theta_half(1, 16);
        assert_eq!(
            u_operator(&th, 1).unwrap().component(1),
            th.component(1),
            "U_1 must be the identity"
        );

        let up = u_operator(&th, 2).unwrap();
        assert_eq!(up.level(), 4);
        up.validate().unwrap();
        // e₀ of the image: 1 + 2q + 2q⁴ + … at numerators 0, 16, 64 over 16
        assert_eq!(up.coeff(0, 0), Some(&Rational::from(1)));
        assert_eq!(up.coeff(16, 0), Some(&Rational::from(2)));
        assert_eq!(up.coeff(64, 0), Some(&Rational::from(2)));
        // odd components vanish
        for r in [1i64, 3, 5, 7] {
            assert!(up.component(r).is_zero_series());
        }
        // the nonzero coefficient set is unchanged
        let collect = |f: &VVForm<Rational>| {
            let mut set: Vec<Rational> = f
                .components()
                .iter()
                .flat_map(|c| c.iter().map(|(_, v)| v.clone()))
                .collect();
            set.sort();
            set.dedup();
            set
        };
        assert_eq!(collect(&th), collect(&up));
    }

    #[test]
    fn weil_matrix_level_one() {
        let bits = 128;
        let t = weil_matrix(1, Gen::T, bits);
        assert!((t.entry(0, 0) - &BigComplex::one(bits)).abs().to_f64() < 1e-35);
        // ρ(T)₁₁ = e(1/4) = i
        assert!((t.entry(1, 1) - &BigComplex::i(bits)).abs().to_f64() < 1e-35);

        let s = weil_matrix(1, Gen::S, bits);
        let inv_sqrt2 = Float::with_val(bits, 2u32).sqrt().recip();
        let phase = e_rational(&Rational::from((-1, 8)), bits).scale(&inv_sqrt2);
        // entries (e(−rr′/2)): ((1,1),(1,−1)) times the phase
        for (r, rp, sign) in [(0, 0, 1), (0, 1, 1), (1, 0, 1), (1, 1, -1)] {
            let want = phase.scale_int(sign);
            assert!((s.entry(r, rp) - &want).abs().to_f64() < 1e-30);
        }
    }

    #[test]
    fn weil_matrices_are_unitary() {
        let bits = 192;
        for n in 1..=8 {
            for gen in [Gen::S, Gen::T] {
                let m = weil_matrix(n, gen, bits);
                let defect = m.unitarity_defect(bits).to_f64();
                assert!(
                    defect < 2f64.powi(-(bits as i32) + 8),
                    "N={n} {gen:?}: unitarity defect {defect:e}"
                );
            }
        }
    }

    /// ‖θ(−1/τ) − τ^k ρ(S) θ(τ)‖∞ at one point, with k = weight.
    fn s_law_defect(n: u32, weight2: i32, tau: &BigComplex, terms: i64, bits: u32) -> f64 {
        let p = prec(bits);
        let th = if weight2 == 1 {
            theta_half(n, terms)
        } else {
            theta_threehalf(n, terms)
        };
        let minus_inv = tau.checked_recip().unwrap().scale_int(-1);
        let lhs = th.eval_components(&minus_inv, p).unwrap();
        let rhs_vec = th.eval_components(tau, p).unwrap();
        let s = weil_matrix(n, Gen::S, bits);
        let rotated = s.apply(&rhs_vec);
        // τ^{1/2} resp. τ^{3/2} = τ·√τ, principal branches
        let mut factor = sqrt_tau(tau);
        if weight2 == 3 {
            factor = &factor * tau;
        }
        let mut worst = 0f64;
        for (l, r) in lhs.iter().zip(&rotated) {
            let d = (l - &(r * &factor)).abs().to_f64();
            worst = worst.max(d);
        }
        worst
    }

    #[test]
    fn theta_transformation_law_under_s() {
        let bits = 128;
        let p1 = BigComplex::from_f64(0.2, 0.6, bits); // (1+3i)/5
        let p2 = BigComplex::new(
            Float::with_val(bits, 0),
            Float::with_val(bits, Rational::from((1, 3))),
        );
        for n in [1u32, 2, 3, 6] {
            for tau in [&p1, &p2] {
                for w2 in [1, 3] {
                    let defect = s_law_defect(n, w2, tau, 140, bits);
                    assert!(
                        defect < 1e-20,
                        "S-law defect {defect:e} at N={n}, weight {w2}/2"
                    );
                }
            }
        }
    }

    #[test]
    fn theta_transformation_law_under_t() {
        // θ(τ+1) = ρ(T)θ(τ) holds exactly at series level: the support
        // congruence pins every exponent to e(k/4N) = e(r²/4N), which is
        // the matching diagonal entry of ρ(T).
        let bits = 128;
        for n in [1u32, 2, 5, 6] {
            let th = theta_half(n, 8);
            th.validate().unwrap();
            let t = weil_matrix(n, Gen::T, bits);
            for r in 0..2 * n as usize {
                let k = th.components()[r].low();
                if k >= th.components()[r].trunc() {
                    continue; // empty component (does not occur for theta_half)
                }
                let shift = e_rational(&Rational::from((k, 4 * n as i64)), bits);
                assert!(
                    (&shift - t.entry(r, r)).abs().to_f64() < 1e-35,
                    "translation phase mismatch at N={n}, r={r}"
                );
            }
        }
    }

    #[test]
    fn divisor_classes_and_basis_counts() {
        assert_eq!(divisor_classes(1), vec![1]);
        assert_eq!(divisor_classes(4), vec![1, 2]);
        assert_eq!(divisor_classes(6), vec![1, 2]);
        assert_eq!(divisor_classes(12), vec![1, 2, 3]);

        assert_eq!(theta_basis(1, 8).unwrap().len(), 1);
        assert_eq!(theta_basis(4, 8).unwrap().len(), 2);
        assert_eq!(theta_basis(6, 10).unwrap().len(), 2);
    }

    #[test]
    fn theta_basis_has_full_rank_through_level_twelve() {
        for n in 1..=12u32 {
            let basis = theta_basis(n, (n as i64).max(8)).unwrap();
            assert_eq!(basis.len(), divisor_classes(n).len());
            for f in &basis {
                assert_eq!(f.level(), n);
                f.validate().unwrap();
            }
        }
    }

    #[test]
    fn basis_member_for_a_square_level_uses_u() {
        // N=4: second member is θ_{1/2,1}|U_2; its e₂ component picks up
        // the odd-b terms 2q^{1/4} ↦ 2q^{4/16}
        let basis = theta_basis(4, 8).unwrap();
        let second = &basis[1];
        assert_eq!(second.coeff(4, 2), Some(&Rational::from(2)));
        assert!(second.component(1).is_zero_series());
    }

    #[test]
    fn eval_refuses_underresolved_windows() {
        let th = theta_half(6, 4);
        let tau = BigComplex::from_f64(0.0, 0.05, 256);
        assert!(matches!(
            th.eval_components(&tau, prec(256)),
            Err(Error::PrecisionExhausted { .. })
        ));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]

        #[test]
        fn generator_matrices_are_unitary(n in 1u32..16, s in proptest::bool::ANY) {
            let gen = if s { Gen::S } else { Gen::T };
            let m = weil_matrix(n, gen, 128);
            let defect = m.unitarity_defect(128);
            proptest::prop_assert!(defect < 1e-30, "N = {n}, defect = {defect}");
        }
    }
}
