//! Subcommand implementations.  Each returns the JSON document to print;
//! every fallible step surfaces the library error unchanged so the caller
//! can map it to exit code 2.

use std::path::Path;
use std::str::FromStr;

use rug::{Float, Rational};
use serde_json::{json, Value};

use thetalift::construct;
use thetalift::error::Error;
use thetalift::lifts::{
    borcherds_expand, f6_eigenform, inner_product_theta_half,
    inner_product_theta_threehalf, km_holomorphic_part, millson_holomorphic_part,
    twisted_borcherds_expand, weyl_vector, CoeffTable, EvalKind, WhmfSpec,
};
use thetalift::numctx::{float_from_rational, nearest_rational_with_den, BigComplex, Precision};
use thetalift::quadforms::{enumerate_classes, Sign};
use thetalift::selftest::run_all;
use thetalift::traces::{self, mock_f_coeff, mock_omega_coeff, CmEvaluator};
use thetalift::weilrep::{self, theta_half, theta_threehalf};
use thetalift::Result;

use crate::render::{complex_json, float_json};
use crate::{InputKind, LiftKind, MockKind, Weight};

pub struct Config {
    pub prec: Precision,
    pub terms: i64,
    pub tol: f64,
}

/// Materialize the chosen input function at level N.
fn input_spec(kind: InputKind, n: u32) -> Result<WhmfSpec> {
    match kind {
        InputKind::Construct => construct::construct_f(n, 8),
        InputKind::F6 => {
            if n != 6 {
                return Err(Error::validation("the f6 input lives at level 6; pass --N 6"));
            }
            Ok(f6_eigenform())
        }
        InputKind::One => Err(Error::validation(
            "the constant input has no principal part; use it only with `trace` or `eval-f`",
        )),
    }
}

fn input_name(kind: InputKind) -> &'static str {
    match kind {
        InputKind::Construct => "construct",
        InputKind::F6 => "f6",
        InputKind::One => "one",
    }
}

pub fn classes(n: u32, d: i64, r: i64, sign: &str) -> Result<Value> {
    let sign = Sign::from_str(sign)?;
    let list = enumerate_classes(n, d, r, sign)?;
    let mut v = list.to_json();
    v["mass"] = Value::String(list.mass().to_string());
    Ok(v)
}

pub fn trace(cfg: &Config, n: u32, d: i64, r: i64, input: InputKind) -> Result<Value> {
    let tv = match input {
        InputKind::One => traces::trace(&traces::Constant(Rational::from(1)), n, d, r, cfg.prec)?,
        InputKind::F6 => {
            if n != 6 {
                return Err(Error::validation("the f6 input lives at level 6; pass --N 6"));
            }
            traces::trace(&traces::F6, n, d, r, cfg.prec)?
        }
        InputKind::Construct => {
            let f = construct::construct_f(n, 8)?;
            traces::trace(&f, n, d, r, cfg.prec)?
        }
    };
    Ok(json!({
        "N": n,
        "D": d,
        "r": r,
        "input": input_name(input),
        "plus": complex_json(&tv.plus),
        "minus": complex_json(&tv.minus),
        "class_count_plus": tv.class_count_plus,
        "class_count_minus": tv.class_count_minus,
        "err_bound": tv.err_bound,
        "bits": cfg.prec.bits(),
    }))
}

pub fn mock(cfg: &Config, which: MockKind, n: u64) -> Result<Value> {
    let (name, c) = match which {
        MockKind::F => ("f", mock_f_coeff(n, cfg.prec)?),
        MockKind::Omega => ("omega", mock_omega_coeff(n, cfg.prec)?),
    };
    Ok(json!({
        "function": name,
        "n": c.n,
        "D": c.d,
        "r": c.r,
        "value": float_json(&c.value),
        "imag_residual": c.imag_residual,
        "class_count_plus": c.class_count_plus,
        "class_count_minus": c.class_count_minus,
        "bits_used": c.bits_used,
    }))
}

pub fn theta(cfg: &Config, n: u32, weight: Weight) -> Result<Value> {
    let f = match weight {
        Weight::Half => theta_half(n, cfg.terms),
        Weight::ThreeHalf => theta_threehalf(n, cfg.terms),
    };
    f.validate()?;
    Ok(f.to_json())
}

pub fn theta_basis(cfg: &Config, n: u32) -> Result<Value> {
    let terms = cfg.terms.max(n as i64);
    let basis = weilrep::theta_basis(n, terms)?;
    let elements: Vec<Value> = basis.iter().map(|f| f.to_json()).collect();
    Ok(json!({
        "N": n,
        "count": elements.len(),
        "elements": elements,
    }))
}

pub fn lift(
    cfg: &Config,
    which: LiftKind,
    n: u32,
    input: InputKind,
    dmax: i64,
    max_den: u64,
) -> Result<Value> {
    let f = input_spec(input, n)?;
    let (name, form) = match which {
        LiftKind::Km => ("kudla_millson", km_holomorphic_part(&f, dmax, cfg.prec)?),
        LiftKind::Millson => ("millson", millson_holomorphic_part(&f, dmax, cfg.prec)?),
    };
    let table = CoeffTable::from_numeric_form(&form)?.rationalized(max_den, cfg.tol)?;
    Ok(json!({
        "lift": name,
        "input": input_name(input),
        "dmax": dmax,
        "table": table.to_json()?,
    }))
}

fn load_table(path: &Path) -> Result<CoeffTable> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let v: Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    CoeffTable::from_json(&v)
}

/// Theta table with enough window to cover correction keys b^2 <= bound.
fn default_theta_table(n: u32, bound: i64) -> Result<CoeffTable> {
    let terms = bound.max(1) / (4 * n as i64) + 1;
    CoeffTable::from_exact_form(&theta_half(n, terms))
}

pub fn weyl(cfg: &Config, n: u32, c: u32, table: Option<&Path>) -> Result<Value> {
    let f = construct::construct_f(n, 8)?;
    let table = match table {
        Some(p) => load_table(p)?,
        None => default_theta_table(n, f.principal_depth() * f.principal_depth())?,
    };
    let w = weyl_vector(&table, c, &f, cfg.prec)?;
    Ok(json!({
        "N": n,
        "c": c,
        "rational": w.rational.to_string(),
        "traces": complex_json(&w.traces),
        "value": complex_json(&w.value),
        "bits": cfg.prec.bits(),
    }))
}

pub fn norms(cfg: &Config, n: u32) -> Result<Value> {
    let bits = cfg.prec.bits();
    let f = construct::construct_f(n, 8)?;
    let b2 = f.principal_depth() * f.principal_depth();

    let half = inner_product_theta_half(&default_theta_table(n, b2)?, &f, cfg.prec)?;
    let sqrt_n = Float::with_val(bits, n).sqrt();
    let pi = Float::with_val(bits, rug::float::Constant::Pi);
    let want_half =
        Float::with_val(bits, &pi * &Float::with_val(bits, n + 1)) / Float::with_val(bits, 3u32 * &sqrt_n);
    let dev_half = Float::with_val(bits, half.value.re() - &want_half)
        .abs()
        .to_f64()
        .max(half.value.im().to_f64().abs());

    let table3 = CoeffTable::from_exact_form(&theta_threehalf(n, b2.max(1) / (4 * n as i64) + 1))?;
    let three = inner_product_theta_threehalf(&table3, &f, cfg.prec)?;
    let want_three = Float::with_val(bits, &sqrt_n * &Float::with_val(bits, n as i64 - 1)) / 6f64;
    let dev_three = Float::with_val(bits, three.value.re() - &want_three)
        .abs()
        .to_f64()
        .max(three.value.im().to_f64().abs());

    Ok(json!({
        "N": n,
        "theta_half": {
            "rational": half.rhs_rational.to_string(),
            "traces": complex_json(&half.rhs_traces),
            "value": complex_json(&half.value),
            "closed_form": float_json(&want_half),
            "deviation": dev_half,
        },
        "theta_threehalf": {
            "rational": three.rhs_rational.to_string(),
            "traces": complex_json(&three.rhs_traces),
            "value": complex_json(&three.value),
            "closed_form": float_json(&want_three),
            "deviation": dev_three,
        },
        "bits": bits,
    }))
}

pub fn borcherds(cfg: &Config, n: u32, table: Option<&Path>, max_den: u64) -> Result<Value> {
    let f = construct::construct_f(n, 8)?;
    let table = match table {
        Some(p) => load_table(p)?,
        None => default_theta_table(n, cfg.terms * cfg.terms)?,
    };
    let w = weyl_vector(&table, n, &f, cfg.prec)?;
    let rho = if w.traces.abs().to_f64() == 0.0 {
        w.rational.clone()
    } else {
        // trace contributions present: reconstruct the rational Weyl vector
        // from the numeric value and certify the residual
        let (q, residual) = nearest_rational_with_den(w.value.re(), max_den);
        let res = residual.to_f64().abs().max(w.value.im().to_f64().abs());
        if res > cfg.tol {
            return Err(Error::NotAnInteger {
                value: w.value.re().to_f64().to_string(),
                residual: res,
                tol: cfg.tol,
            });
        }
        q
    };
    let product = borcherds_expand(&table, &rho, cfg.terms)?;
    Ok(json!({
        "N": n,
        "weyl": rho.to_string(),
        "terms": cfg.terms,
        "product": product.to_json(),
    }))
}

pub fn twisted(
    cfg: &Config,
    n: u32,
    delta: i64,
    r: i64,
    table: Option<&Path>,
    scale: &str,
) -> Result<Value> {
    // the product over b <= terms reads exponents at (Delta b^2, r b);
    // keep the default window small because the millson table behind it
    // costs one trace per key
    let terms = cfg.terms.min(8);
    let table = match table {
        Some(p) => load_table(p)?,
        None => {
            let s = Rational::from_str(scale)
                .map_err(|e| Error::Parse(format!("bad --scale {scale:?}: {e}")))?;
            let f = scaled_input(n, &s)?;
            let dmax = delta.abs() * terms * terms;
            let form = millson_holomorphic_part(&f, dmax, cfg.prec)?;
            CoeffTable::from_numeric_form(&form)?.rationalized(1_000_000, cfg.tol)?
        }
    };
    let product = twisted_borcherds_expand(&table, delta, r, terms, cfg.prec)?;
    let coeffs: Vec<Value> = product
        .iter()
        .map(|(&k, c)| json!([k, float_json(c.re()), float_json(c.im())]))
        .collect();
    Ok(json!({
        "N": n,
        "delta": delta,
        "r": r,
        "terms": terms,
        "product": {
            "den": product.den(),
            "trunc": product.trunc(),
            "coeffs": coeffs,
        },
    }))
}

/// construct_f multiplied by an exact rational (series and evaluator both).
fn scaled_input(n: u32, s: &Rational) -> Result<WhmfSpec> {
    let base = construct::construct_f(n, 8)?;
    if *s == 1 {
        return Ok(base);
    }
    let expansion = base.expansion().scale_rational(s);
    let eval = match base.eval_kind() {
        EvalKind::Constant(c) => EvalKind::Constant(Rational::from(c * s)),
        EvalKind::EtaShiftProduct {
            exponents,
            shifts,
            scale,
        } => EvalKind::EtaShiftProduct {
            exponents: exponents.clone(),
            shifts: shifts.clone(),
            scale: Rational::from(scale * s),
        },
        other => {
            return Err(Error::validation(format!(
                "cannot scale the {other:?} evaluator"
            )))
        }
    };
    WhmfSpec::new(n, expansion, base.vanishes_at_other_cusps(), eval)
}

pub fn construct_f(cfg: &Config, n: u32) -> Result<Value> {
    let f = construct::construct_f(n, cfg.terms)?;
    let evaluator = match f.eval_kind() {
        EvalKind::Constant(c) => json!({"type": "constant", "value": c.to_string()}),
        EvalKind::EtaShiftProduct {
            exponents,
            shifts,
            scale,
        } => {
            let exps: Value = exponents
                .iter()
                .map(|(&d, &e)| (d.to_string(), json!(e)))
                .collect::<serde_json::Map<_, _>>()
                .into();
            json!({
                "type": "eta_shift_product",
                "exponents": exps,
                "shifts": shifts.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                "scale": scale.to_string(),
            })
        }
        EvalKind::Level6 => json!({"type": "level6"}),
    };
    Ok(json!({
        "N": n,
        "principal_depth": f.principal_depth(),
        "a0": f.a(0).to_string(),
        "vanishes_at_other_cusps": f.vanishes_at_other_cusps(),
        "expansion": f.expansion().to_json(),
        "evaluator": evaluator,
    }))
}

fn parse_real(s: &str, bits: u32) -> Result<Float> {
    if let Ok(q) = Rational::from_str(s) {
        return Ok(float_from_rational(&q, bits));
    }
    Float::parse(s)
        .map(|inc| Float::with_val(bits, inc))
        .map_err(|e| Error::Parse(format!("bad coordinate {s:?}: {e}")))
}

pub fn eval_f(cfg: &Config, n: u32, re: &str, im: &str, input: InputKind) -> Result<Value> {
    let bits = cfg.prec.bits();
    let z = BigComplex::new(parse_real(re, bits)?, parse_real(im, bits)?);
    if !(z.im().to_f64() > 0.0) {
        return Err(Error::validation("the point must lie in the upper half-plane"));
    }
    let value = match input {
        InputKind::One => traces::Constant(Rational::from(1)).eval(&z, cfg.prec)?,
        InputKind::F6 => {
            if n != 6 {
                return Err(Error::validation("the f6 input lives at level 6; pass --N 6"));
            }
            traces::F6.eval(&z, cfg.prec)?
        }
        InputKind::Construct => construct::construct_f(n, 8)?.eval(&z, cfg.prec)?,
    };
    Ok(json!({
        "N": n,
        "input": input_name(input),
        "z": complex_json(&z),
        "value": complex_json(&value),
        "bits": bits,
    }))
}

pub fn selftest() -> (Value, bool) {
    let results = run_all();
    let all = results.iter().all(|r| r.passed);
    let rows: Vec<Value> = results
        .iter()
        .map(|r| {
            json!({
                "name": r.name,
                "passed": r.passed,
                "detail": r.detail,
            })
        })
        .collect();
    (json!({"passed": all, "checks": rows}), all)
}
