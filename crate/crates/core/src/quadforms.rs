//! Integral binary quadratic forms and their Γ₀(N)-classes.
//!
//! For a level N, a discriminant D < 0 and a residue r mod 2N with
//! D ≡ r² mod 4N, the set
//!
//! ```text
//! 𝒬_{N,D,r} = { [a,b,c] : b² - 4ac = D, a ≡ 0 mod N, b ≡ r mod 2N }
//! ```
//!
//! splits into positive definite (a > 0) and negative definite (a < 0)
//! halves, each carrying a Γ₀(N) action with finitely many orbits.  This
//! module enumerates orbit representatives, decides Γ₀(N)-equivalence
//! exactly (with a witness matrix), computes the stabilizer weights
//! w_Q = |Γ₀(N)_Q|/2 ∈ {1,2,3}, and produces the Heegner point of a form:
//! the root of Q(z,1) = 0 in the upper half-plane.

use rayon::prelude::*;
use rug::Rational;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::numctx::{BigComplex, Precision};

/// The form a x² + b x y + c y².
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

/// A 2x2 integer matrix (a b; c d); membership in Γ₀(N) means det = 1
/// and N | c.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mat2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: 1,
        b: 0,
        c: 0,
        d: 1,
    };

    pub fn det(&self) -> i64 {
        self.a * self.d - self.b * self.c
    }

    pub fn mul(&self, other: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn neg(&self) -> Mat2 {
        Mat2 {
            a: -self.a,
            b: -self.b,
            c: -self.c,
            d: -self.d,
        }
    }

    pub fn in_gamma0(&self, n: u32) -> bool {
        self.det() == 1 && self.c.rem_euclid(n as i64) == 0
    }
}

impl QForm {
    pub fn new(a: i64, b: i64, c: i64) -> QForm {
        QForm { a, b, c }
    }

    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_positive_definite(&self) -> bool {
        self.disc() < 0 && self.a > 0
    }

    pub fn is_negative_definite(&self) -> bool {
        self.disc() < 0 && self.a < 0
    }

    pub fn eval(&self, x: i64, y: i64) -> i64 {
        self.a * x * x + self.b * x * y + self.c * y * y
    }

    pub fn neg(&self) -> QForm {
        QForm::new(-self.a, -self.b, -self.c)
    }

    /// Right action: (Q∘g)(x,y) = Q(ax + by, cx + dy), so the leading
    /// coefficient of Q∘g is Q evaluated on the first column of g.
    pub fn apply(&self, g: &Mat2) -> QForm {
        let QForm { a, b, c } = *self;
        let Mat2 {
            a: p,
            b: q,
            c: u,
            d: v,
        } = *g;
        QForm {
            a: a * p * p + b * p * u + c * u * u,
            b: 2 * a * p * q + b * (p * v + q * u) + 2 * c * u * v,
            c: a * q * q + b * q * v + c * v * v,
        }
    }
}

/// All SL₂(ℤ)-reduced positive definite forms of discriminant d < 0
/// (|b| ≤ a ≤ c, with b ≥ 0 when |b| = a or a = c), one per class,
/// ordered lexicographically.
pub fn sl2_reduced_reps(d: i64) -> Result<Vec<QForm>> {
    if d >= 0 {
        return Err(Error::ExpectedNegativeDiscriminant(d));
    }
    if !matches!(d.rem_euclid(4), 0 | 1) {
        return Err(Error::NotADiscriminant(d));
    }
    let mut out = Vec::new();
    let mut b = d.rem_euclid(2); // b ≡ d mod 2
    while 3 * b * b <= -d {
        for bb in [b, -b] {
            if bb == 0 && b != 0 {
                continue;
            }
            let four_ac = bb * bb - d;
            debug_assert_eq!(four_ac % 4, 0);
            let ac = four_ac / 4;
            let mut a = bb.abs().max(1);
            while a * a <= ac {
                if ac % a == 0 {
                    let c = ac / a;
                    // reduced: |b| ≤ a ≤ c with b ≥ 0 on the boundary
                    if bb.abs() <= a && (bb >= 0 || (bb.abs() != a && a != c)) {
                        out.push(QForm::new(a, bb, c));
                    }
                }
                a += 1;
            }
            if b == 0 {
                break;
            }
        }
        b += 2;
    }
    out.sort();
    Ok(out)
}

/// The automorphs of a definite form: matrices g ∈ SL₂(ℤ) with Q∘g = Q.
/// Scaling does not change automorphs, so they are computed on the
/// primitive part Q₀ = Q/content: solutions (t,u) of t² − D₀u² = 4 give
/// ((t−b₀u)/2, −c₀u; a₀u, (t+b₀u)/2), and D₀ < 0 forces |u| ≤ 1.  The
/// group has order 6 (multiples of x²+xy+y²), 4 (multiples of x²+y²),
/// or 2 otherwise.
pub fn automorphs(q: &QForm) -> Vec<Mat2> {
    debug_assert!(q.disc() < 0);
    let m = gcd_i64(gcd_i64(q.a, q.b), q.c);
    let q = QForm::new(q.a / m, q.b / m, q.c / m);
    let d = q.disc();
    let mut out = Vec::new();
    for u in -1i64..=1 {
        let t_sq = 4 + d * u * u;
        if t_sq < 0 {
            continue;
        }
        let t_root = (t_sq as f64).sqrt().round() as i64;
        if t_root * t_root != t_sq {
            continue;
        }
        let ts = if t_root == 0 { vec![0] } else { vec![t_root, -t_root] };
        for t in ts {
            if (t - q.b * u) % 2 != 0 {
                continue;
            }
            let g = Mat2 {
                a: (t - q.b * u) / 2,
                b: -q.c * u,
                c: q.a * u,
                d: (t + q.b * u) / 2,
            };
            debug_assert_eq!(g.det(), 1);
            debug_assert_eq!(q.apply(&g), q);
            if !out.contains(&g) {
                out.push(g);
            }
        }
    }
    out
}

/// w_Q = |Γ₀(N)_Q| / 2.  Requires N | a, which makes every automorph's
/// lower-left entry au divisible by N, so the full automorph group lies in
/// Γ₀(N) and w_Q is 3 for D = −3, 2 for D = −4, and 1 below that.
pub fn stabilizer_weight(q: &QForm, n: u32) -> Result<u32> {
    if q.a.rem_euclid(n as i64) != 0 {
        return Err(Error::Congruence(format!(
            "stabilizer weight needs {} | a, got a = {}",
            n, q.a
        )));
    }
    let in_gamma0 = automorphs(q)
        .into_iter()
        .filter(|g| g.in_gamma0(n))
        .count() as u32;
    debug_assert_eq!(in_gamma0 % 2, 0);
    Ok(in_gamma0 / 2)
}

/// Decide Γ₀(N)-equivalence of two forms of the same discriminant and the
/// same definiteness, returning a witness g ∈ Γ₀(N) with Q1∘g = Q2.
///
/// The search is exact: a witness must send (1,0) to a vector (p,u) with
/// Q1(p,u) = a₂, N | u and gcd(p,u) = 1, and since Q1 is definite there
/// are only finitely many such vectors (|u| ≤ √(4a₁a₂/|D|)).  Completing
/// (p,u) to a unimodular matrix leaves one free integer shift, which moves
/// the middle coefficient by 2a₂ per step, so a single congruence decides
/// each candidate.
pub fn gamma0_equivalent(q1: &QForm, q2: &QForm, n: u32) -> Result<Option<Mat2>> {
    let d = q1.disc();
    if d != q2.disc() {
        return Err(Error::validation(format!(
            "discriminant mismatch: {} vs {}",
            d,
            q2.disc()
        )));
    }
    if d >= 0 {
        return Err(Error::ExpectedNegativeDiscriminant(d));
    }
    if q1.a.signum() != q2.a.signum() {
        return Ok(None);
    }
    // negation leaves the action untouched: (−Q)∘g = −(Q∘g)
    let (f1, f2) = if q1.a < 0 {
        (q1.neg(), q2.neg())
    } else {
        (*q1, *q2)
    };
    let (a1, b1) = (f1.a, f1.b);
    let a2 = f2.a;
    let u_bound = ((4.0 * a1 as f64 * a2 as f64 / (-d) as f64).sqrt() as i64) + 1;
    let step = n.max(1) as i64;
    let mut u = -(u_bound / step) * step;
    while u <= u_bound {
        // integer p with f1(p, u) = a2: solve a1 p² + b1 u p + (c1 u² − a2) = 0
        let disc_p = (d * u * u + 4 * a1 * a2) as f64;
        if disc_p >= 0.0 {
            let root = disc_p.sqrt();
            let lo = ((-b1 as f64 * u as f64 - root) / (2.0 * a1 as f64)).floor() as i64 - 1;
            let hi = ((-b1 as f64 * u as f64 + root) / (2.0 * a1 as f64)).ceil() as i64 + 1;
            for p in lo..=hi {
                if f1.eval(p, u) != a2 || gcd_i64(p, u) != 1 {
                    continue;
                }
                // complete (p,u) to g = (p r; u s) with det = ps − ru = 1
                let (x, y) = bezout(p, u); // p x + u y = 1
                let (mut r, mut s) = (-y, x);
                // shifts (r,s) -> (r + tp, s + tu) change b(Q∘g) by 2 a2 t
                let b0 = 2 * a1 * p * r + b1 * (p * s + r * u) + 2 * f1.c * u * s;
                let diff = f2.b - b0;
                if diff.rem_euclid(2 * a2) == 0 {
                    let t = diff / (2 * a2);
                    r += t * p;
                    s += t * u;
                    let mut g = Mat2 { a: p, b: r, c: u, d: s };
                    debug_assert_eq!(q1.apply(&g), *q2);
                    debug_assert!(g.in_gamma0(n));
                    // g and −g act identically; pick the sign with c > 0,
                    // or a > 0 when c = 0
                    if g.c < 0 || (g.c == 0 && g.a < 0) {
                        g = g.neg();
                    }
                    return Ok(Some(g));
                }
            }
        }
        u += step;
    }
    Ok(None)
}

fn gcd_i64(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd_i64(b, a % b)
    }
}

/// (x, y) with a x + b y = gcd(a, b).
fn bezout(a: i64, b: i64) -> (i64, i64) {
    if b == 0 {
        return (a.signum(), 0);
    }
    let (x, y) = bezout(b, a % b);
    (y, x - (a / b) * y)
}

/// One matrix per coset g Γ₀(N) of SL₂(ℤ), parametrized by the first
/// column (p : u) ∈ ℙ¹(ℤ/N).  Sweeping Q ↦ Q∘g over these reaches every
/// Γ₀(N)-class inside the SL₂(ℤ)-class of Q.
pub fn coset_reps(n: u32) -> Vec<Mat2> {
    assert!(n >= 1);
    if n == 1 {
        return vec![Mat2::IDENTITY];
    }
    let n_i = n as i64;
    let units: Vec<i64> = (1..n_i).filter(|&l| gcd_i64(l, n_i) == 1).collect();
    let mut seen = std::collections::BTreeSet::new();
    let mut reps = Vec::new();
    for p in 0..n_i {
        for u in 0..n_i {
            if gcd_i64(gcd_i64(p, u), n_i) != 1 {
                continue;
            }
            // canonical point of (p : u): lexicographic minimum over unit scalings
            let canon = units
                .iter()
                .map(|&l| ((l * p).rem_euclid(n_i), (l * u).rem_euclid(n_i)))
                .min()
                .unwrap();
            if !seen.insert(canon) {
                continue;
            }
            let (mut p0, u0) = canon;
            while gcd_i64(p0, u0) != 1 {
                p0 += n_i; // gcd(p,u,N) = 1 guarantees a coprime lift
            }
            let (x, y) = bezout(p0, u0);
            let g = Mat2 {
                a: p0,
                b: -y,
                c: u0,
                d: x,
            };
            debug_assert_eq!(g.det(), 1);
            reps.push(g);
        }
    }
    reps
}

/// Positive or negative definite half of 𝒬_{N,D,r}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_str(&self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Sign> {
        match s {
            "+" | "plus" => Ok(Sign::Plus),
            "-" | "minus" => Ok(Sign::Minus),
            other => Err(Error::Parse(format!("bad sign {other:?} (want + or -)"))),
        }
    }
}

/// Orbit representatives of 𝒬_{N,D,r}^{sign} / Γ₀(N) with their weights.
#[derive(Clone, Debug)]
pub struct ClassList {
    pub n: u32,
    pub d: i64,
    pub r: i64,
    pub sign: Sign,
    pub reps: Vec<QForm>,
    /// w_Q per representative; the trace weight is 1/w_Q.
    pub w: Vec<u32>,
}

impl ClassList {
    /// Σ 1/w_Q — for N = 1 this is the Hurwitz class number H(|D|).
    pub fn mass(&self) -> Rational {
        let mut total = Rational::new();
        for &w in &self.w {
            total += Rational::from((1, w));
        }
        total
    }

    pub fn weights(&self) -> Vec<Rational> {
        self.w.iter().map(|&w| Rational::from((1, w))).collect()
    }

    pub fn to_json(&self) -> Value {
        let classes: Vec<Value> = self
            .reps
            .iter()
            .zip(&self.w)
            .map(|(q, &w)| json!({"a": q.a, "b": q.b, "c": q.c, "w": w}))
            .collect();
        json!({
            "N": self.n,
            "D": self.d,
            "r": self.r,
            "sign": self.sign.as_str(),
            "classes": classes,
        })
    }
}

/// Orbit representatives of the definite forms [a,b,c] with b² − 4ac = D,
/// N | a, b ≡ r mod 2N and sign(a) as requested.  Representatives are the
/// lexicographically smallest (|a|, a, b, c) found in their class, so the
/// output is reproducible.
pub fn enumerate_classes(n: u32, d: i64, r: i64, sign: Sign) -> Result<ClassList> {
    if n < 1 {
        return Err(Error::UnsupportedLevel(n));
    }
    if d >= 0 {
        return Err(Error::ExpectedNegativeDiscriminant(d));
    }
    let four_n = 4 * n as i64;
    if (d - r * r).rem_euclid(four_n) != 0 {
        return Err(Error::Congruence(format!(
            "need D ≡ r² mod 4N: D = {d}, r = {r}, N = {n}"
        )));
    }
    match sign {
        Sign::Plus => {
            let list = enumerate_positive(n, d, r)?;
            Ok(list)
        }
        Sign::Minus => {
            // Q ↦ −Q is a Γ₀(N)-equivariant bijection 𝒬⁺_{N,D,−r} → 𝒬⁻_{N,D,r}
            let plus = enumerate_positive(n, d, -r)?;
            let list = ClassList {
                n,
                d,
                r: r.rem_euclid(2 * n as i64),
                sign: Sign::Minus,
                reps: plus.reps.iter().map(QForm::neg).collect(),
                w: plus.w.clone(),
            };
            #[cfg(debug_assertions)]
            verify_negative_direct(&list)?;
            Ok(list)
        }
    }
}

fn enumerate_positive(n: u32, d: i64, r: i64) -> Result<ClassList> {
    let two_n = 2 * n as i64;
    let reduced = sl2_reduced_reps(d)?;
    let cosets = coset_reps(n);
    let pairs: Vec<(QForm, Mat2)> = reduced
        .iter()
        .flat_map(|&q| cosets.iter().map(move |&g| (q, g)))
        .collect();
    let mut candidates: Vec<QForm> = pairs
        .par_iter()
        .filter_map(|(q, g)| {
            let img = q.apply(g);
            (img.a.rem_euclid(n as i64) == 0 && (img.b - r).rem_euclid(two_n) == 0)
                .then_some(img)
        })
        .collect();
    candidates.sort_by_key(|q| (q.a.abs(), q.a, q.b, q.c));
    candidates.dedup();
    let mut reps: Vec<QForm> = Vec::new();
    for cand in candidates {
        let mut known = false;
        for rep in &reps {
            if gamma0_equivalent(rep, &cand, n)?.is_some() {
                known = true;
                break;
            }
        }
        if !known {
            reps.push(cand);
        }
    }
    let w = reps
        .iter()
        .map(|q| stabilizer_weight(q, n))
        .collect::<Result<Vec<u32>>>()?;
    Ok(ClassList {
        n,
        d,
        r: r.rem_euclid(two_n),
        sign: Sign::Plus,
        reps,
        w,
    })
}

/// Debug cross-check: enumerate the negative definite classes directly
/// (images of negated reduced forms) and confirm they biject with the
/// negation-of-positive route.
#[cfg(debug_assertions)]
fn verify_negative_direct(list: &ClassList) -> Result<()> {
    let two_n = 2 * list.n as i64;
    let reduced = sl2_reduced_reps(list.d)?;
    let cosets = coset_reps(list.n);
    let mut direct: Vec<QForm> = Vec::new();
    for q in reduced.iter().map(QForm::neg) {
        for g in &cosets {
            let img = q.apply(g);
            if img.a.rem_euclid(list.n as i64) != 0 || (img.b - list.r).rem_euclid(two_n) != 0 {
                continue;
            }
            let mut known = false;
            for rep in &direct {
                if gamma0_equivalent(rep, &img, list.n)?.is_some() {
                    known = true;
                    break;
                }
            }
            if !known {
                direct.push(img);
            }
        }
    }
    assert_eq!(
        direct.len(),
        list.reps.len(),
        "negative class count disagrees with the negation bijection"
    );
    for rep in &list.reps {
        let hits = direct
            .iter()
            .filter(|q| gamma0_equivalent(q, rep, list.n).unwrap().is_some())
            .count();
        assert_eq!(hits, 1, "negation bijection is not one-to-one");
    }
    Ok(())
}

/// The root of Q(z,1) = 0 in the upper half-plane together with its source
/// form: (−b + i√|D|)/(2a) for a > 0 and (−b − i√|D|)/(2a) for a < 0, so
/// that z_{−Q} = z_Q.
#[derive(Clone, Debug)]
pub struct HeegnerPoint {
    pub value: BigComplex,
    pub source: QForm,
}

pub fn heegner_point(q: &QForm, prec: Precision) -> Result<HeegnerPoint> {
    let d = q.disc();
    if d >= 0 {
        return Err(Error::ExpectedNegativeDiscriminant(d));
    }
    if q.a == 0 {
        return Err(Error::validation("degenerate form: a = 0"));
    }
    let bits = prec.bits();
    let sqrt_abs_d = rug::Float::with_val(bits, -d).sqrt();
    let re = rug::Float::with_val(bits, Rational::from((-q.b, 2 * q.a)));
    let im = sqrt_abs_d / rug::Float::with_val(bits, 2 * q.a.abs());
    Ok(HeegnerPoint {
        value: BigComplex::new(re, im),
        source: *q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numctx::hurwitz_class_number;
    use proptest::prelude::*;

    #[test]
    fn reduced_reps_match_textbook_tables() {
        assert_eq!(sl2_reduced_reps(-3).unwrap(), vec![QForm::new(1, 1, 1)]);
        assert_eq!(sl2_reduced_reps(-4).unwrap(), vec![QForm::new(1, 0, 1)]);
        assert_eq!(
            sl2_reduced_reps(-20).unwrap(),
            vec![QForm::new(1, 0, 5), QForm::new(2, 2, 3)]
        );
        assert_eq!(
            sl2_reduced_reps(-23).unwrap(),
            vec![
                QForm::new(1, 1, 6),
                QForm::new(2, -1, 3),
                QForm::new(2, 1, 3)
            ]
        );
        assert!(matches!(
            sl2_reduced_reps(-6),
            Err(Error::NotADiscriminant(-6))
        ));
        assert!(matches!(
            sl2_reduced_reps(5),
            Err(Error::ExpectedNegativeDiscriminant(5))
        ));
    }

    #[test]
    fn reduced_masses_agree_with_hurwitz_numbers() {
        for m in 1..=100i64 {
            let d = -m;
            if !matches!(d.rem_euclid(4), 0 | 1) {
                continue;
            }
            let mut mass = Rational::new();
            for q in sl2_reduced_reps(d).unwrap() {
                mass += Rational::from((1u32, stabilizer_weight(&q, 1).unwrap()));
            }
            assert_eq!(mass, hurwitz_class_number(m as u64).unwrap(), "D = {d}");
        }
    }

    #[test]
    fn action_is_associative_and_preserves_disc() {
        let q = QForm::new(3, 1, 7);
        let g = Mat2 { a: 2, b: 1, c: 1, d: 1 };
        let h = Mat2 { a: 1, b: -3, c: 0, d: 1 };
        assert_eq!(q.apply(&g.mul(&h)), q.apply(&g).apply(&h));
        assert_eq!(q.apply(&g).disc(), q.disc());
        assert_eq!(q.apply(&Mat2::IDENTITY), q);
    }

    #[test]
    fn automorph_counts() {
        assert_eq!(automorphs(&QForm::new(1, 1, 1)).len(), 6);
        assert_eq!(automorphs(&QForm::new(1, 0, 1)).len(), 4);
        assert_eq!(automorphs(&QForm::new(1, 0, 5)).len(), 2);
        for g in automorphs(&QForm::new(2, 2, 2)) {
            assert_eq!(QForm::new(2, 2, 2).apply(&g), QForm::new(2, 2, 2));
        }
    }

    #[test]
    fn stabilizer_weights() {
        assert_eq!(stabilizer_weight(&QForm::new(1, 1, 1), 1).unwrap(), 3);
        assert_eq!(stabilizer_weight(&QForm::new(1, 0, 1), 1).unwrap(), 2);
        assert_eq!(stabilizer_weight(&QForm::new(6, -10, 5), 6).unwrap(), 1);
        assert!(stabilizer_weight(&QForm::new(5, 0, 5), 3).is_err());
    }

    #[test]
    fn equivalence_finds_the_translation_witness() {
        let q1 = QForm::new(6, -10, 5);
        let q2 = QForm::new(6, 2, 1);
        // the translation (1 1; 0 1) sends q1 to q2 directly
        let t = Mat2 { a: 1, b: 1, c: 0, d: 1 };
        assert_eq!(q1.apply(&t), q2);
        let g = gamma0_equivalent(&q1, &q2, 6).unwrap().expect("equivalent");
        assert_eq!(g, t);
        // reflexivity returns the identity
        let id = gamma0_equivalent(&q1, &q1, 6).unwrap().unwrap();
        assert_eq!(id, Mat2::IDENTITY);
    }

    #[test]
    fn level6_discriminant_minus20_classes_are_inequivalent() {
        let q1 = QForm::new(6, -10, 5);
        let q2 = QForm::new(42, -34, 7);
        assert_eq!(q1.disc(), -20);
        assert_eq!(q2.disc(), -20);
        assert!(gamma0_equivalent(&q1, &q2, 6).unwrap().is_none());
        // they even lie in different SL₂(ℤ)-classes: the two reduced forms
        // of discriminant −20 pick up one Γ₀(6)-class each here
        assert!(gamma0_equivalent(&q1, &QForm::new(1, 0, 5), 1)
            .unwrap()
            .is_some());
        assert!(gamma0_equivalent(&q2, &QForm::new(2, 2, 3), 1)
            .unwrap()
            .is_some());
        assert!(gamma0_equivalent(&q1, &q2, 1).unwrap().is_none());
    }

    #[test]
    fn negation_keeps_witnesses() {
        let q1 = QForm::new(6, -10, 5).neg();
        let q2 = QForm::new(6, 2, 1).neg();
        let g = gamma0_equivalent(&q1, &q2, 6).unwrap().expect("equivalent");
        assert_eq!(q1.apply(&g), q2);
        // mixed definiteness is never equivalent
        assert!(gamma0_equivalent(&QForm::new(6, 2, 1), &q2, 6)
            .unwrap()
            .is_none());
    }

    #[test]
    fn coset_reps_have_unimodular_lifts_and_right_count() {
        // |P¹(Z/N)| = N prod_{p|N} (1 + 1/p)
        let expect = [(1u32, 1usize), (2, 3), (3, 4), (4, 6), (6, 12), (10, 18), (12, 24)];
        for (n, count) in expect {
            let reps = coset_reps(n);
            assert_eq!(reps.len(), count, "N = {n}");
            for g in &reps {
                assert_eq!(g.det(), 1);
            }
            // pairwise distinct cosets: first columns projectively distinct mod N
            for (i, g) in reps.iter().enumerate() {
                for h in &reps[i + 1..] {
                    let same = (1..n as i64)
                        .filter(|l| gcd_i64(*l, n as i64) == 1)
                        .any(|l| {
                            (l * g.a - h.a).rem_euclid(n as i64) == 0
                                && (l * g.c - h.c).rem_euclid(n as i64) == 0
                        });
                    assert!(!same, "duplicate coset at N = {n}");
                }
            }
        }
    }

    #[test]
    fn level1_masses_match_hurwitz_for_all_small_discriminants() {
        for m in 3..=100u64 {
            let d = -(m as i64);
            if !matches!(d.rem_euclid(4), 0 | 1) {
                continue;
            }
            let r = d.rem_euclid(2);
            let list = enumerate_classes(1, d, r, Sign::Plus).unwrap();
            assert_eq!(list.mass(), hurwitz_class_number(m).unwrap(), "D = {d}");
        }
    }

    #[test]
    fn level6_discriminant_minus20_canonical_representatives() {
        let list = enumerate_classes(6, -20, 2, Sign::Plus).unwrap();
        assert_eq!(list.reps.len(), 2);
        assert_eq!(list.w, vec![1, 1]);
        let expected = [QForm::new(6, -10, 5), QForm::new(42, -34, 7)];
        for target in expected {
            let hits = list
                .reps
                .iter()
                .filter(|q| gamma0_equivalent(q, &target, 6).unwrap().is_some())
                .count();
            assert_eq!(hits, 1, "expected exactly one class through {target:?}");
        }
        for q in &list.reps {
            assert!(q.a > 0 && q.a % 6 == 0);
            assert_eq!((q.b - 2).rem_euclid(12), 0);
            assert_eq!(q.disc(), -20);
        }
    }

    #[test]
    fn small_level1_class_lists() {
        let l3 = enumerate_classes(1, -3, 1, Sign::Plus).unwrap();
        assert_eq!(l3.reps, vec![QForm::new(1, 1, 1)]);
        assert_eq!(l3.w, vec![3]);
        let l20 = enumerate_classes(1, -20, 0, Sign::Plus).unwrap();
        assert_eq!(l20.reps.len(), 2);
        assert_eq!(l20.w, vec![1, 1]);
    }

    #[test]
    fn negative_sign_is_negation_of_opposite_residue() {
        let minus = enumerate_classes(6, -20, 2, Sign::Minus).unwrap();
        let plus = enumerate_classes(6, -20, -2, Sign::Plus).unwrap();
        assert_eq!(minus.reps.len(), plus.reps.len());
        for (m, p) in minus.reps.iter().zip(&plus.reps) {
            assert_eq!(*m, p.neg());
            assert!(m.is_negative_definite());
        }
        assert_eq!(minus.w, plus.w);
    }

    #[test]
    fn congruence_violations_are_rejected() {
        assert!(matches!(
            enumerate_classes(6, -21, 2, Sign::Plus),
            Err(Error::Congruence(_))
        ));
        assert!(matches!(
            enumerate_classes(6, 20, 2, Sign::Plus),
            Err(Error::ExpectedNegativeDiscriminant(20))
        ));
    }

    #[test]
    fn reps_are_gamma0_invariant_under_small_matrices() {
        let list = enumerate_classes(6, -20, 2, Sign::Plus).unwrap();
        let mut mats = Vec::new();
        for a in -5i64..=5 {
            for b in -5i64..=5 {
                for c in [-6i64, 0, 6] {
                    for d in -5i64..=5 {
                        let g = Mat2 { a, b, c, d };
                        if g.det() == 1 {
                            mats.push(g);
                        }
                    }
                }
            }
        }
        assert!(mats.len() > 10);
        for q in &list.reps {
            for g in &mats {
                let moved = q.apply(g);
                // congruences survive the action...
                assert_eq!(moved.a.rem_euclid(6), 0);
                assert_eq!((moved.b - 2).rem_euclid(12), 0);
                // ...and the class does not change
                assert!(gamma0_equivalent(q, &moved, 6).unwrap().is_some());
            }
        }
    }

    #[test]
    fn heegner_points_match_closed_forms() {
        let prec = Precision::new(128).unwrap();
        let z1 = heegner_point(&QForm::new(6, -10, 5), prec).unwrap();
        // (10 + i sqrt 20)/12
        let re = z1.value.re().to_f64();
        let im = z1.value.im().to_f64();
        assert!((re - 10.0 / 12.0).abs() < 1e-15);
        assert!((im - 20f64.sqrt() / 12.0).abs() < 1e-15);

        let z2 = heegner_point(&QForm::new(42, -34, 7), prec).unwrap();
        assert!((z2.value.re().to_f64() - 34.0 / 84.0).abs() < 1e-15);
        assert!((z2.value.im().to_f64() - 20f64.sqrt() / 84.0).abs() < 1e-15);

        let zi = heegner_point(&QForm::new(1, 0, 1), prec).unwrap();
        assert!(zi.value.re().to_f64().abs() < 1e-30);
        assert!((zi.value.im().to_f64() - 1.0).abs() < 1e-30);

        assert!(heegner_point(&QForm::new(0, 2, 1), prec).is_err());
    }

    #[test]
    fn negation_fixes_heegner_points_exactly() {
        let prec = Precision::new(96).unwrap();
        for q in [
            QForm::new(6, -10, 5),
            QForm::new(42, -34, 7),
            QForm::new(1, 1, 1),
        ] {
            let z = heegner_point(&q, prec).unwrap();
            let zn = heegner_point(&q.neg(), prec).unwrap();
            assert_eq!(z.value.re(), zn.value.re());
            assert_eq!(z.value.im(), zn.value.im());
            assert!(z.value.im().is_sign_positive());
        }
    }

    #[test]
    fn heegner_point_is_a_root_of_the_form() {
        let prec = Precision::new(160).unwrap();
        for q in [
            QForm::new(6, -10, 5),
            QForm::new(-6, -10, -5),
            QForm::new(42, -34, 7),
            QForm::new(2, 2, 3),
        ] {
            let z = heegner_point(&q, prec).unwrap().value;
            // a z² + b z + c = 0
            let az2 = (&z * &z).scale_int(q.a);
            let val = &(&az2 + &z.scale_int(q.b)) + &BigComplex::from_int(q.c, prec.bits());
            assert!(val.abs().to_f64() < 1e-40, "{q:?}");
        }
    }

    #[test]
    fn class_list_serializes_with_integer_weights() {
        let list = enumerate_classes(1, -3, 1, Sign::Plus).unwrap();
        let v = list.to_json();
        assert_eq!(v["N"], 1);
        assert_eq!(v["D"], -3);
        assert_eq!(v["sign"], "+");
        assert_eq!(v["classes"][0]["w"], 3);
        assert_eq!(v["classes"][0]["a"], 1);
        assert_eq!(list.mass(), Rational::from((1, 3)));
    }

    // build a unimodular matrix from a word in T^k and S, so the entries
    // stay small and the determinant is 1 by construction
    fn word_matrix(word: &[(bool, i64)]) -> Mat2 {
        let mut g = Mat2::IDENTITY;
        for &(s, k) in word {
            let step = if s {
                Mat2 { a: 0, b: -1, c: 1, d: 0 }
            } else {
                Mat2 { a: 1, b: k, c: 0, d: 1 }
            };
            g = g.mul(&step);
        }
        g
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn the_action_is_a_right_action_preserving_the_discriminant(
            a in -9i64..10, b in -9i64..10, c in -9i64..10,
            w1 in proptest::collection::vec((proptest::bool::ANY, -3i64..4), 0..5),
            w2 in proptest::collection::vec((proptest::bool::ANY, -3i64..4), 0..5),
        ) {
            let q = QForm::new(a, b, c);
            let (g, h) = (word_matrix(&w1), word_matrix(&w2));
            prop_assert_eq!(g.det(), 1);
            prop_assert_eq!(q.apply(&g.mul(&h)), q.apply(&g).apply(&h));
            prop_assert_eq!(q.apply(&g).disc(), q.disc());
            prop_assert_eq!(q.apply(&Mat2::IDENTITY), q);
        }

        #[test]
        fn reduced_representatives_are_reduced_sorted_and_distinct(m in 3i64..600) {
            prop_assume!(matches!((-m).rem_euclid(4), 0 | 1));
            let reps = sl2_reduced_reps(-m).unwrap();
            prop_assert!(!reps.is_empty());
            for q in &reps {
                prop_assert_eq!(q.disc(), -m);
                prop_assert!(q.is_positive_definite());
                prop_assert!(q.b.abs() <= q.a && q.a <= q.c, "{q:?}");
                if q.b.abs() == q.a || q.a == q.c {
                    prop_assert!(q.b >= 0, "{q:?}");
                }
            }
            for w in reps.windows(2) {
                prop_assert!(w[0] < w[1]);
            }
        }
    }
}
