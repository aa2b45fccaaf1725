//! Exact rational scalars and dense vectors.
//!
//! `Rat` is an arbitrary-precision rational kept in lowest terms with a
//! positive denominator. Vectors are plain `Vec<Rat>`; the helpers here cover
//! the handful of operations the geometry code needs.

use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::Error;

pub type Rat = BigRational;
pub type Vector = Vec<Rat>;

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Rat {
    Rat::zero()
}

pub fn one() -> Rat {
    Rat::one()
}

pub fn zeros(n: usize) -> Vector {
    vec![Rat::zero(); n]
}

pub fn unit(n: usize, i: usize) -> Vector {
    let mut v = zeros(n);
    v[i] = Rat::one();
    v
}

pub fn ints(xs: &[i64]) -> Vector {
    xs.iter().map(|&x| int(x)).collect()
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(Rat::zero(), |acc, (x, y)| acc + x * y)
}

pub fn add(a: &[Rat], b: &[Rat]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Rat], b: &[Rat]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[Rat], s: &Rat) -> Vector {
    a.iter().map(|x| x * s).collect()
}

pub fn neg(a: &[Rat]) -> Vector {
    a.iter().map(|x| -x).collect()
}

pub fn is_zero(a: &[Rat]) -> bool {
    a.iter().all(Zero::is_zero)
}

/// Sum of a nonempty list of vectors of equal length.
pub fn sum(vs: &[Vector], dim: usize) -> Vector {
    vs.iter().fold(zeros(dim), |acc, v| add(&acc, v))
}

/// Scale so that the first nonzero coordinate is +1 or -1.
pub fn normalize_direction(v: &[Rat]) -> Vector {
    match v.iter().find(|x| !x.is_zero()) {
        Some(first) => {
            let s = first.abs().recip();
            scale(v, &s)
        }
        None => v.to_vec(),
    }
}

/// Scale a homogeneous row so its entries are coprime integers, keeping sign.
pub fn primitive_integer(v: &[Rat]) -> Vector {
    let mut l = BigInt::one();
    for x in v {
        l = l.lcm(x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Rat::from_integer(l.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if g.is_zero() {
        return v.to_vec();
    }
    ints.into_iter().map(|x| Rat::from_integer(x / &g)).collect()
}

pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // huge numerators/denominators: fall back on a scaled division
        let n = x.numer().to_f64().unwrap_or(f64::NAN);
        let d = x.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn vec_to_f64(v: &[Rat]) -> Vec<f64> {
    v.iter().map(to_f64).collect()
}

/// Exact binary expansion of a finite float.
pub fn from_f64(x: f64) -> Rat {
    Rat::from_float(x).expect("finite float")
}

/// Rational approximation of `x` with denominator `den`.
pub fn approx_f64(x: f64, den: i64) -> Rat {
    let n = (x * den as f64).round();
    Rat::new(BigInt::from(n as i64), BigInt::from(den))
}

/// Render as `p/q`, or `p` when the denominator is one.
pub fn fmt_rat(x: &Rat) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parse `p/q`, an integer, or a finite decimal like `-0.125` or `1e-6`.
pub fn parse_rat(s: &str) -> Result<Rat, Error> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid rational `{s}`"));
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rat::new(p, q));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all = format!("{whole}{frac}");
    let n = BigInt::from_str(if all.is_empty() { "0" } else { &all }).map_err(|_| bad())?;
    let ten = BigInt::from(10);
    let shift = exp - frac.len() as i32;
    let mut r = Rat::from_integer(n);
    if shift >= 0 {
        r *= Rat::from_integer(num_traits::pow(ten, shift as usize));
    } else {
        r /= Rat::from_integer(num_traits::pow(ten, (-shift) as usize));
    }
    Ok(if negative { -r } else { r })
}

pub fn fmt_vec(v: &[Rat]) -> Vec<String> {
    v.iter().map(fmt_rat).collect()
}

pub fn parse_vec(v: &[String]) -> Result<Vector, Error> {
    v.iter().map(|s| parse_rat(s)).collect()
}

/// Lexicographic comparison of rational vectors.
pub fn lex_cmp(a: &[Rat], b: &[Rat]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

pub fn factorial(n: usize) -> Rat {
    Rat::from_integer((1..=n as u64).fold(BigInt::one(), |acc, k| acc * BigInt::from(k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rat("-7/24").unwrap(), rat(-7, 24));
        assert_eq!(parse_rat("3").unwrap(), int(3));
        assert_eq!(parse_rat("0.125").unwrap(), rat(1, 8));
        assert_eq!(parse_rat("-1.5").unwrap(), rat(-3, 2));
        assert_eq!(parse_rat("1e-6").unwrap(), rat(1, 1_000_000));
        assert_eq!(parse_rat("2.5E2").unwrap(), int(250));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("abc").is_err());
        assert!(parse_rat(".").is_err());
    }

    #[test]
    fn canonical_rendering() {
        assert_eq!(fmt_rat(&rat(6, -8)), "-3/4");
        assert_eq!(fmt_rat(&rat(4, 2)), "2");
        assert_eq!(fmt_rat(&zero()), "0");
    }

    #[test]
    fn direction_normalization() {
        assert_eq!(normalize_direction(&ints(&[0, -3, 6])), ints(&[0, -1, 2]));
        assert_eq!(primitive_integer(&[rat(1, 2), rat(-3, 4)]), ints(&[2, -3]));
    }

    fn small_rat() -> impl Strategy<Value = Rat> {
        (-50i64..50, 1i64..20).prop_map(|(n, d)| rat(n, d))
    }

    proptest! {
        #[test]
        fn add_then_subtract_is_identity(a in small_rat(), b in small_rat()) {
            prop_assert_eq!((&a + &b) - &b, a);
        }

        #[test]
        fn multiplicative_inverse(a in small_rat()) {
            prop_assume!(!a.is_zero());
            prop_assert_eq!(&a * a.recip(), one());
        }

        #[test]
        fn denominator_stays_positive_and_reduced(a in small_rat(), b in small_rat()) {
            let c = &a * &b - &a;
            prop_assert!(c.denom().is_positive());
            prop_assert!(c.numer().gcd(c.denom()).is_one());
        }

        #[test]
        fn render_parse_round_trip(a in small_rat()) {
            prop_assert_eq!(parse_rat(&fmt_rat(&a)).unwrap(), a);
        }
    }
}
