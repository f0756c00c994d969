//! Exact rational checks of the parameter conditions behind the ratio bounds,
//! for general `m` and for the three-machine special case.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::policies;

pub type Rational = BigRational;

fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn pow_recip(base: i64, exp: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(base).pow(exp))
}

/// Parses `"p/q"`, integers and decimals (with optional exponent) exactly.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a rational number: `{text}`"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in `{text}`")));
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() || !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let numer: BigInt = format!("{whole}{frac}").parse().map_err(|_| bad())?;
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        Rational::from_integer(numer * ten.pow(scale as u32))
    } else {
        Rational::new(numer, ten.pow(scale.unsigned_abs()))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Params {
    pub m: u64,
    #[serde(serialize_with = "ser_rational")]
    pub alpha: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub gamma: Rational,
}

fn ser_rational<S: serde::Serializer>(x: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

impl Params {
    pub fn new(m: u64, alpha: Rational, gamma: Rational) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!("conditions need m >= 2, got {m}")));
        }
        if alpha.is_negative() {
            return Err(Error::InvalidArgument(format!("alpha must be non-negative, got {alpha}")));
        }
        if !(gamma.is_positive() && gamma < Rational::one()) {
            return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        Ok(Params { m, alpha, gamma })
    }
}

/// How the margin `lhs − rhs` must compare with zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = ">")]
    Greater,
    #[serde(rename = ">=")]
    GreaterEq,
    #[serde(rename = "<=")]
    LessEq,
}

impl Relation {
    fn holds(self, margin: &Rational) -> bool {
        match self {
            Relation::Greater => margin.is_positive(),
            Relation::GreaterEq => !margin.is_negative(),
            Relation::LessEq => !margin.is_positive(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionResult {
    pub id: String,
    pub relation: Relation,
    pub satisfied: bool,
    #[serde(serialize_with = "ser_rational")]
    pub margin: Rational,
    /// Alternative readings are reported but do not count towards [`ConditionReport::all_satisfied`].
    pub informational: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub results: Vec<ConditionResult>,
}

impl ConditionReport {
    pub fn all_satisfied(&self) -> bool {
        self.results.iter().filter(|r| !r.informational).all(|r| r.satisfied)
    }

    pub fn get(&self, id: &str) -> Option<&ConditionResult> {
        self.results.iter().find(|r| r.id == id)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConditionResult> {
        self.results.iter().filter(|r| !r.informational && !r.satisfied)
    }
}

struct Builder(Vec<ConditionResult>);

impl Builder {
    fn push(&mut self, id: &str, relation: Relation, margin: Rational) {
        self.push_full(id, relation, margin, false, None);
    }

    fn push_full(&mut self, id: &str, relation: Relation, margin: Rational, informational: bool, note: Option<String>) {
        let satisfied = relation.holds(&margin);
        self.0.push(ConditionResult { id: id.into(), relation, satisfied, margin, informational, note });
    }

    /// A condition that cannot be evaluated (division by a non-positive quantity).
    fn undefined(&mut self, id: &str, relation: Relation, why: &str) {
        self.0.push(ConditionResult {
            id: id.into(),
            relation,
            satisfied: false,
            margin: Rational::zero(),
            informational: false,
            note: Some(why.into()),
        });
    }
}

/// Rational lower bound for `4^−17.75 = √2·2^−36`.
pub fn four_pow_minus_17_75_lower() -> Rational {
    ratio(1_414_213_562, 1_000_000_000) * pow_recip(2, 36)
}

/// Evaluates the fifteen general conditions plus the alternative readings
/// `6-alt`, `10-alt` and `13-alt`.
pub fn check_general(params: &Params) -> ConditionReport {
    let m = int(params.m as i64);
    let a = &params.alpha;
    let g = &params.gamma;
    let one = Rational::one();
    let quarter = ratio(1, 4);
    let half = ratio(1, 2);
    let m1 = &m - &one;
    let mut b = Builder(Vec::new());
    use Relation::*;

    if a.is_positive() {
        b.push("1", Greater, g / a - &m);
    } else {
        b.undefined("1", Greater, "alpha = 0 makes gamma/alpha undefined");
    }
    b.push("2", GreaterEq, g - &m1 * a - ratio(2, 5));

    let quotient_den = ratio(3, 4) * &m - &one - &m1 * a;
    let quotient_num = &m * g - &m * &quarter - &m * &m1 * a;
    if quotient_den.is_positive() {
        b.push("3", Greater, &quotient_num / &quotient_den - ratio(1, 3));
    } else {
        b.undefined("3", Greater, "denominator 3m/4 - 1 - (m-1)alpha is not positive");
    }
    b.push("4", GreaterEq, g - (&one + ratio(7, 2) * &m1 * a) / ratio(5, 2));
    b.push("5", GreaterEq, int(4) * g - int(2) * (int(2) * &m - int(3)) * a - &one);

    let q = four_pow_minus_17_75_lower();
    b.push_full(
        "6",
        Greater,
        (int(2) + &q * a) * g - &one,
        false,
        Some(format!("4^-17.75 replaced by lower bound {q}")),
    );
    let q_alt = &q / int(4);
    b.push_full(
        "6-alt",
        Greater,
        (int(2) + &q_alt * a) * g - &one,
        true,
        Some("exponent -18.75 (lambda^-4.5 with lambda^0.24 = 4)".into()),
    );

    let spread = &one + &m1 * a;
    b.push("7", GreaterEq, &one - &m * a / &spread);
    if quotient_den.is_positive() {
        let second = (g - &quarter - &m1 * a) / &quotient_den;
        b.push("8", GreaterEq, int(2) * g / &spread + second - &one);
    } else {
        b.undefined("8", GreaterEq, "denominator 3m/4 - 1 - (m-1)alpha is not positive");
    }
    b.push("9", GreaterEq, &one - &m1 * a);
    let c10 = ratio(3, 4) * &m - &one - &m * &m1 * a;
    b.push("10", GreaterEq, c10.clone());
    b.push_full("10-alt", GreaterEq, c10 + &one, true, Some("variant with +1".into()));
    b.push("11", GreaterEq, &one + a - int(2) * &m * a * (&one - &m1 * a));
    b.push("12", LessEq, &m * (&one - int(2) * g) + (int(2) * &m * &m1 * a + &one) * g - &one);
    b.push("13", LessEq, -(&half * &m) + &m1 * a + &one);
    b.push_full(
        "13-alt",
        GreaterEq,
        &half * &m - &one - &m * &m1 * a,
        true,
        Some("variant m/2 - 1 - m(m-1)alpha >= 0".into()),
    );
    b.push("14", GreaterEq, &one - &m * a * (&one - &m1 * a));
    b.push("15", LessEq, &m * (&half - g) + &m * &m1 * a * (&half + g) - &half);
    ConditionReport { results: b.0 }
}

/// Evaluates the ten three-machine conditions (`m3-1..m3-3`, `m3-9..m3-15`).
pub fn check_m3(alpha: &Rational, gamma: &Rational) -> ConditionReport {
    let a = alpha;
    let g = gamma;
    let one = Rational::one();
    let half = ratio(1, 2);
    let mut b = Builder(Vec::new());
    use Relation::*;

    b.push("m3-1", Greater, int(3) * g - int(5) * a - &one);
    if *a == one {
        b.undefined("m3-2", GreaterEq, "alpha = 1 makes (2-alpha)/(1-alpha) undefined");
    } else {
        b.push("m3-2", GreaterEq, (int(2) - a) / (&one - a) * g - &one);
    }
    b.push("m3-3", GreaterEq, g * (int(6) / (&one + int(2) * a) - &one) - int(2));
    b.push("m3-9", GreaterEq, &one - int(2) * a);
    b.push("m3-10", GreaterEq, ratio(5, 4) - int(6) * a);
    b.push("m3-11", GreaterEq, &one - int(5) * a + int(12) * a * a);
    b.push("m3-12", LessEq, int(3) * (&one - int(2) * g) + (int(12) * a + &one) * g - &one);
    b.push("m3-13", GreaterEq, &half - int(6) * a);
    b.push("m3-14", GreaterEq, &one - int(3) * a * (&one - int(2) * a));
    b.push("m3-15", LessEq, int(3) * (&half - g) + int(6) * a * (&half + g) - &half);
    ConditionReport { results: b.0 }
}

/// Recommended parameters for `m` machines.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommended {
    /// Exact parameters; absent for two machines, where the conditions do not apply.
    pub params: Option<Params>,
    /// The point at which feasibility is checked, when it differs from `params`.
    pub feasibility: Option<Params>,
    pub alpha: f64,
    pub gamma: f64,
    pub lambda: f64,
}

pub fn recommended_params(m: u64) -> Result<Recommended> {
    match m {
        0 | 1 => Err(Error::InvalidArgument(format!("recommended parameters need m >= 2, got {m}"))),
        2 => {
            let p = policies::sleepy_two();
            Ok(Recommended {
                params: None,
                feasibility: None,
                alpha: p.alpha,
                gamma: policies::target_gamma(2)?,
                lambda: 1.0,
            })
        }
        3 => {
            let alpha = ratio(7066, 100_000);
            let params = Params::new(3, alpha.clone(), ratio(482, 1000))?;
            let feasibility = Params::new(3, alpha, ratio(4817, 10_000))?;
            Ok(Recommended {
                alpha: policies::M3_ALPHA,
                gamma: policies::M3_GAMMA,
                lambda: 1.0,
                params: Some(params),
                feasibility: Some(feasibility),
            })
        }
        _ => {
            let m2 = BigInt::from(m) * BigInt::from(m);
            let alpha = Rational::new(BigInt::one(), BigInt::from(4) * &m2);
            let gamma = ratio(1, 2) - Rational::new(BigInt::one(), BigInt::from(4).pow(20) * &m2);
            let floats = policies::gsleepy(m as usize, true)?;
            Ok(Recommended {
                alpha: floats.alpha,
                gamma: policies::target_gamma(m as usize)?,
                lambda: floats.lambda,
                params: Some(Params::new(m, alpha, gamma)?),
                feasibility: None,
            })
        }
    }
}

/// Grid for [`scan_m3_region`]; `steps` counts intervals, so each axis has `steps + 1` points.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    pub alpha_range: (Rational, Rational),
    pub gamma_range: (Rational, Rational),
    pub alpha_steps: u32,
    pub gamma_steps: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    #[serde(serialize_with = "ser_rational")]
    pub alpha: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub gamma: Rational,
    pub passes: Vec<(String, bool)>,
    pub all_pass: bool,
}

impl ScanRow {
    pub fn csv_header(&self) -> String {
        let ids: Vec<&str> = self.passes.iter().map(|(id, _)| id.as_str()).collect();
        format!("alpha,gamma,{},all_pass", ids.join(","))
    }

    pub fn csv_line(&self) -> String {
        let bits: Vec<&str> = self.passes.iter().map(|(_, ok)| if *ok { "1" } else { "0" }).collect();
        format!("{},{},{},{}", to_f64(&self.alpha), to_f64(&self.gamma), bits.join(","), u8::from(self.all_pass))
    }
}

fn axis(range: &(Rational, Rational), steps: u32) -> Vec<Rational> {
    let width = &range.1 - &range.0;
    (0..=steps).map(|i| &range.0 + &width * int(i as i64) / int(steps as i64)).collect()
}

/// Evaluates the three-machine conditions on every grid point, alpha-major.
pub fn scan_m3_region(grid: &ScanGrid) -> Result<Vec<ScanRow>> {
    if grid.alpha_steps == 0 || grid.gamma_steps == 0 {
        return Err(Error::InvalidArgument("scan steps must be positive".into()));
    }
    let alphas = axis(&grid.alpha_range, grid.alpha_steps);
    let gammas = axis(&grid.gamma_range, grid.gamma_steps);
    let points: Vec<(Rational, Rational)> =
        alphas.iter().flat_map(|a| gammas.iter().map(move |g| (a.clone(), g.clone()))).collect();
    Ok(points
        .into_par_iter()
        .map(|(alpha, gamma)| {
            let report = check_m3(&alpha, &gamma);
            let passes = report.results.iter().map(|r| (r.id.clone(), r.satisfied)).collect();
            ScanRow { all_pass: report.all_satisfied(), alpha, gamma, passes }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn parses_exactly() {
        assert_eq!(q("0.07066"), ratio(7066, 100_000));
        assert_eq!(q("3/4"), ratio(3, 4));
        assert_eq!(q("-1.5e-3"), ratio(-3, 2000));
        assert_eq!(q("2"), int(2));
        assert_eq!(q(".5"), ratio(1, 2));
        assert_eq!(q("1e2"), int(100));
        for bad in ["", "abc", "1/0", "1.2.3", "e5", "0x1"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn condition_six_bound_is_below_true_value() {
        let lower = to_f64(&four_pow_minus_17_75_lower());
        let exact = 2f64.sqrt() * 2f64.powi(-36);
        assert!(lower < exact && lower > exact * (1.0 - 1e-9));
    }

    #[test]
    fn recommended_m4_passes_all() {
        let rec = recommended_params(4).unwrap();
        let p = rec.params.unwrap();
        assert_eq!(p.alpha, ratio(1, 64));
        let report = check_general(&p);
        assert!(report.all_satisfied(), "{:?}", report.failures().collect::<Vec<_>>());
        assert_eq!(report.results.iter().filter(|r| !r.informational).count(), 15);
    }

    #[test]
    fn low_gamma_fails_condition_two() {
        let p = Params::new(4, ratio(1, 64), ratio(3, 10)).unwrap();
        assert!(!check_general(&p).get("2").unwrap().satisfied);
    }

    #[test]
    fn m10_and_m100() {
        let p = recommended_params(10).unwrap().params.unwrap();
        assert_eq!(p.alpha, ratio(1, 400));
        assert!(check_general(&p).all_satisfied());
        let p100 = recommended_params(100).unwrap().params.unwrap();
        assert_eq!(
            p100.gamma,
            ratio(1, 2) - Rational::new(BigInt::one(), BigInt::from(4).pow(20) * BigInt::from(10_000))
        );
    }

    #[test]
    fn zero_alpha_condition_one_unsatisfiable() {
        let p = Params::new(5, Rational::zero(), ratio(1, 2) - ratio(1, 1000)).unwrap();
        let c1 = check_general(&p).get("1").cloned().unwrap();
        assert!(!c1.satisfied);
        assert!(c1.note.is_some());
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(1, ratio(1, 4), ratio(1, 2)).is_err());
        assert!(Params::new(4, ratio(-1, 4), ratio(1, 2)).is_err());
        assert!(Params::new(4, ratio(1, 4), int(1)).is_err());
        assert!(recommended_params(1).is_err());
    }

    #[test]
    fn m3_examples() {
        assert!(check_m3(&q("0.07066"), &q("0.4817")).all_satisfied());
        assert!(check_m3(&q("0.07066"), &q("0.482")).all_satisfied());
        let zero = check_m3(&Rational::zero(), &ratio(1, 2));
        assert!(zero.get("m3-1").unwrap().satisfied);
        assert!(zero.get("m3-3").unwrap().satisfied);
        assert!(zero.get("m3-2").unwrap().satisfied);
        assert!(!check_m3(&ratio(1, 12), &q("0.45")).get("m3-1").unwrap().satisfied);
        let guarded = check_m3(&int(1), &ratio(1, 2));
        assert!(!guarded.get("m3-2").unwrap().satisfied);
    }

    #[test]
    fn m3_recommended_feasibility() {
        let rec = recommended_params(3).unwrap();
        let f = rec.feasibility.unwrap();
        assert!(check_m3(&f.alpha, &f.gamma).all_satisfied());
        assert_eq!(rec.alpha, 0.07066);
        let two = recommended_params(2).unwrap();
        assert!(two.params.is_none());
        assert!((two.gamma - 0.381966).abs() < 1e-6);
    }

    #[test]
    fn alpha_past_half_over_m_minus_one_breaks_tail_conditions() {
        for m in [4u64, 5, 8, 20] {
            let gamma = recommended_params(m).unwrap().params.unwrap().gamma;
            let alpha = Rational::new(BigInt::one(), BigInt::from(2 * (m - 1))) + ratio(1, 1_000_000);
            let report = check_general(&Params::new(m, alpha, gamma).unwrap());
            let tail_fails = (9..=15).any(|i| !report.get(&i.to_string()).unwrap().satisfied);
            assert!(tail_fails, "m={m}");
        }
    }

    #[test]
    fn scan_rows() {
        let grid = ScanGrid {
            alpha_range: (Rational::zero(), q("0.14132")),
            gamma_range: (q("0.4817"), q("0.4817")),
            alpha_steps: 2,
            gamma_steps: 1,
        };
        let rows = scan_m3_region(&grid).unwrap();
        assert_eq!(rows.len(), 6);
        let hit = rows.iter().find(|r| r.alpha == q("0.07066")).unwrap();
        assert!(hit.all_pass);
        assert!(hit.csv_line().ends_with(",1"));

        let single = ScanGrid {
            alpha_range: (q("0.2"), q("0.2")),
            gamma_range: (q("0.49"), q("0.49")),
            alpha_steps: 1,
            gamma_steps: 1,
        };
        let row = &scan_m3_region(&single).unwrap()[0];
        assert!(!row.passes.iter().find(|(id, _)| id == "m3-13").unwrap().1);
        assert!(!row.all_pass);
        assert!(scan_m3_region(&ScanGrid { alpha_steps: 0, ..single }).is_err());
    }
}
