//! Gaussian-rational scalars and Laurent polynomials in one variable `t`.
//!
//! Coefficients are elements of `ℚ(i)` stored as pairs of exact big
//! rationals. Laurent polynomials are sparse maps from integer exponents
//! to such scalars, always kept zero-trimmed. The module also provides
//! the substitution `t ↦ t⁻¹`, the quantum brackets `[j]` at `q = −t`,
//! and the canonical unit form which strips a unit `±i^a t^k` from a
//! polynomial to obtain its unique symmetric, real, positively
//! normalised representative.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// An exact element of `ℚ(i)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GaussianRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussianRational { re, im }
    }

    pub fn zero() -> Self {
        GaussianRational::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        GaussianRational::new(BigRational::one(), BigRational::zero())
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        GaussianRational::new(BigRational::zero(), BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        GaussianRational::new(BigRational::from_integer(BigInt::from(n)), BigRational::zero())
    }

    /// The rational `p/q` as a real scalar.
    pub fn from_ratio(p: i64, q: i64) -> Self {
        GaussianRational::new(
            BigRational::new(BigInt::from(p), BigInt::from(q)),
            BigRational::zero(),
        )
    }

    /// `i^k` for any integer `k`.
    pub fn i_pow(k: i64) -> Self {
        match k.rem_euclid(4) {
            0 => Self::one(),
            1 => Self::i(),
            2 => -Self::one(),
            _ => -Self::i(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussianRational::new(self.re.clone(), -self.im.clone())
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(&self) -> Self {
        let norm = &self.re * &self.re + &self.im * &self.im;
        assert!(!norm.is_zero(), "division by zero in GaussianRational");
        GaussianRational::new(&self.re / &norm, -(&self.im / &norm))
    }

    /// Exact coefficient string, `"a/b"` when real and `"a/b+c/d*i"` or
    /// `"a/b-c/d*i"` otherwise.
    pub fn to_coeff_string(&self) -> String {
        fn rat(r: &BigRational) -> String {
            let mut s = r.numer().to_string();
            s.push('/');
            s.push_str(&r.denom().to_string());
            s
        }
        if self.im.is_zero() {
            rat(&self.re)
        } else if self.im.is_negative() {
            let mut s = rat(&self.re);
            s.push('-');
            s.push_str(&rat(&(-self.im.clone())));
            s.push_str("*i");
            s
        } else {
            let mut s = rat(&self.re);
            s.push('+');
            s.push_str(&rat(&self.im));
            s.push_str("*i");
            s
        }
    }

    /// Parses the format produced by [`Self::to_coeff_string`].
    pub fn parse_coeff(s: &str) -> Option<Self> {
        fn rat(s: &str) -> Option<BigRational> {
            let (n, d) = match s.split_once('/') {
                Some((n, d)) => (n, d),
                None => (s, "1"),
            };
            let n: BigInt = n.parse().ok()?;
            let d: BigInt = d.parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        let s = s.trim();
        if let Some(body) = s.strip_suffix("*i") {
            // Split at the sign separating the real and imaginary parts,
            // skipping a leading sign on the real numerator.
            let bytes = body.as_bytes();
            for k in (1..bytes.len()).rev() {
                if bytes[k] == b'+' || bytes[k] == b'-' {
                    if bytes[k - 1] == b'/' {
                        continue;
                    }
                    let re = rat(&body[..k])?;
                    let im = rat(&body[k + 1..])?;
                    let im = if bytes[k] == b'-' { -im } else { im };
                    return Some(GaussianRational::new(re, im));
                }
            }
            // Pure imaginary without an explicit real part.
            return Some(GaussianRational::new(BigRational::zero(), rat(body)?));
        }
        Some(GaussianRational::new(rat(s)?, BigRational::zero()))
    }
}

impl fmt::Debug for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_coeff_string())
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        if self.im.is_zero() {
            return write!(f, "{}", self.re);
        }
        if self.re.is_zero() {
            if self.im.is_one() {
                return write!(f, "i");
            }
            if (-self.im.clone()).is_one() {
                return write!(f, "-i");
            }
            return write!(f, "{}*i", self.im);
        }
        if self.im.is_negative() {
            write!(f, "{}-{}*i", self.re, -self.im.clone())
        } else {
            write!(f, "{}+{}*i", self.re, self.im)
        }
    }
}

impl Add for GaussianRational {
    type Output = GaussianRational;
    fn add(self, rhs: Self) -> Self {
        GaussianRational::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl AddAssign for GaussianRational {
    fn add_assign(&mut self, rhs: Self) {
        self.re += rhs.re;
        self.im += rhs.im;
    }
}

impl Sub for GaussianRational {
    type Output = GaussianRational;
    fn sub(self, rhs: Self) -> Self {
        GaussianRational::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl SubAssign for GaussianRational {
    fn sub_assign(&mut self, rhs: Self) {
        self.re -= rhs.re;
        self.im -= rhs.im;
    }
}

impl Neg for GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> Self {
        GaussianRational::new(-self.re, -self.im)
    }
}

impl Mul for GaussianRational {
    type Output = GaussianRational;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl Mul for &GaussianRational {
    type Output = GaussianRational;
    fn mul(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

impl MulAssign for GaussianRational {
    fn mul_assign(&mut self, rhs: Self) {
        *self = &*self * &rhs;
    }
}

/// A sparse Laurent polynomial in `t` with Gaussian-rational
/// coefficients, kept zero-trimmed.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct LaurentPoly {
    coeffs: BTreeMap<i64, GaussianRational>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        LaurentPoly { coeffs: BTreeMap::new() }
    }

    pub fn one() -> Self {
        LaurentPoly::monomial(0, GaussianRational::one())
    }

    /// The single term `c·t^e`.
    pub fn monomial(e: i64, c: GaussianRational) -> Self {
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(e, c);
        }
        LaurentPoly { coeffs }
    }

    /// The variable `t`.
    pub fn t() -> Self {
        LaurentPoly::monomial(1, GaussianRational::one())
    }

    pub fn constant(c: GaussianRational) -> Self {
        LaurentPoly::monomial(0, c)
    }

    pub fn from_int(n: i64) -> Self {
        LaurentPoly::constant(GaussianRational::from_int(n))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, e: i64) -> GaussianRational {
        self.coeffs.get(&e).cloned().unwrap_or_else(GaussianRational::zero)
    }

    /// Iterator over `(exponent, coefficient)` in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (&i64, &GaussianRational)> {
        self.coeffs.iter()
    }

    pub fn min_degree(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_degree(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn add_term(&mut self, e: i64, c: GaussianRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(e).or_insert_with(GaussianRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&e);
        }
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        let mut out = LaurentPoly::zero();
        for (e, a) in &self.coeffs {
            out.add_term(*e, a * c);
        }
        out
    }

    /// Multiplies by `t^k`.
    pub fn shift(&self, k: i64) -> Self {
        LaurentPoly {
            coeffs: self.coeffs.iter().map(|(e, c)| (e + k, c.clone())).collect(),
        }
    }

    /// Substitutes `t ↦ t⁻¹`.
    pub fn involute_t(&self) -> Self {
        LaurentPoly {
            coeffs: self.coeffs.iter().map(|(e, c)| (-e, c.clone())).collect(),
        }
    }

    /// Evaluates at a scalar value of `t`; the value must be nonzero when
    /// negative exponents are present.
    pub fn eval(&self, t: &GaussianRational) -> GaussianRational {
        let mut acc = GaussianRational::zero();
        let t_inv = if self.min_degree().map_or(false, |m| m < 0) {
            Some(t.inv())
        } else {
            None
        };
        for (e, c) in &self.coeffs {
            let base = if *e >= 0 { t.clone() } else { t_inv.clone().unwrap() };
            let mut p = GaussianRational::one();
            for _ in 0..e.abs() {
                p = &p * &base;
            }
            acc += c * &p;
        }
        acc
    }

    pub fn eval_at_one(&self) -> GaussianRational {
        let mut acc = GaussianRational::zero();
        for c in self.coeffs.values() {
            acc += c.clone();
        }
        acc
    }

    /// Exponent-string to coefficient-string map for serialization.
    pub fn to_string_map(&self) -> Vec<(String, String)> {
        self.coeffs
            .iter()
            .map(|(e, c)| (e.to_string(), c.to_coeff_string()))
            .collect()
    }

    pub fn from_string_map<'a, I>(entries: I) -> Option<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut p = LaurentPoly::zero();
        for (e, c) in entries {
            let e: i64 = e.trim().parse().ok()?;
            let c = GaussianRational::parse_coeff(c)?;
            p.add_term(e, c);
        }
        Some(p)
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.coeffs.iter().rev() {
            let cs = c.to_string();
            let (sign, body) = if let Some(rest) = cs.strip_prefix('-') {
                if rest.contains('+') || rest.contains('-') {
                    ("+", cs.clone())
                } else {
                    ("-", rest.to_string())
                }
            } else {
                ("+", cs)
            };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
                first = false;
            } else {
                write!(f, " {} ", sign)?;
            }
            let body = if body.contains('+') || (body.len() > 1 && body[1..].contains('-')) {
                alloc::format!("({})", body)
            } else {
                body
            };
            match *e {
                0 => write!(f, "{}", body)?,
                1 if body == "1" => write!(f, "t")?,
                1 => write!(f, "{}*t", body)?,
                -1 if body == "1" => write!(f, "t^-1")?,
                e if body == "1" => write!(f, "t^{}", e)?,
                e => write!(f, "{}*t^{}", body, e)?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.coeffs {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl Add for LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: LaurentPoly) -> LaurentPoly {
        &self + &rhs
    }
}

impl AddAssign<&LaurentPoly> for LaurentPoly {
    fn add_assign(&mut self, rhs: &LaurentPoly) {
        for (e, c) in &rhs.coeffs {
            self.add_term(*e, c.clone());
        }
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.coeffs {
            out.add_term(*e, -c.clone());
        }
        out
    }
}

impl Sub for LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: LaurentPoly) -> LaurentPoly {
        &self - &rhs
    }
}

impl Neg for LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        LaurentPoly {
            coeffs: self.coeffs.into_iter().map(|(e, c)| (e, -c)).collect(),
        }
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = LaurentPoly::zero();
        for (e1, c1) in &self.coeffs {
            for (e2, c2) in &rhs.coeffs {
                out.add_term(e1 + e2, c1 * c2);
            }
        }
        out
    }
}

impl Mul for LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: LaurentPoly) -> LaurentPoly {
        &self * &rhs
    }
}

/// The quantum bracket `[j]` at base `−t`, that is
/// `((−t)^j − (−t)^{−j}) / ((−t) − (−t)^{−1})`.
pub fn quantum_bracket(j: u32) -> LaurentPoly {
    assert!(j >= 1, "quantum_bracket requires j >= 1");
    // [j]_q = Σ_{k=0}^{j-1} q^{j-1-2k} with q = −t, and (−t)^e = (−1)^e t^e.
    let mut out = LaurentPoly::zero();
    for k in 0..j as i64 {
        let e = j as i64 - 1 - 2 * k;
        let c = if e.rem_euclid(2) == 0 {
            GaussianRational::one()
        } else {
            -GaussianRational::one()
        };
        out.add_term(e, c);
    }
    out
}

/// A unit `i^a · t^k` extracted by [`canonical_unit_form`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Unit {
    /// Power of `i`, reduced modulo 4.
    pub i_pow: u8,
    /// Power of `t`.
    pub t_pow: i64,
}

impl Unit {
    pub fn one() -> Self {
        Unit { i_pow: 0, t_pow: 0 }
    }

    pub fn is_one(&self) -> bool {
        self.i_pow == 0 && self.t_pow == 0
    }

    pub fn to_poly(&self) -> LaurentPoly {
        LaurentPoly::monomial(self.t_pow, GaussianRational::i_pow(self.i_pow as i64))
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.i_pow, self.t_pow) {
            (0, 0) => write!(f, "1"),
            (1, 0) => write!(f, "i"),
            (2, 0) => write!(f, "-1"),
            (3, 0) => write!(f, "-i"),
            (0, k) => write!(f, "t^{}", k),
            (1, k) => write!(f, "i*t^{}", k),
            (2, k) => write!(f, "-t^{}", k),
            (_, k) => write!(f, "-i*t^{}", k),
        }
    }
}

/// Raised when no unit `±i^a t^k` makes a polynomial real and symmetric
/// under `t ↦ t⁻¹`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct NotUnitSymmetric;

impl fmt::Display for NotUnitSymmetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no unit i^a t^k symmetrizes the polynomial")
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NotUnitSymmetric {}

/// Writes `p = unit · q` with `q` real, `q(t) = q(t⁻¹)`, and `q(1) ≥ 0`
/// (top coefficient positive when `q(1) = 0`), returning `(q, unit)`.
///
/// The zero polynomial returns `(0, 1)`.
pub fn canonical_unit_form(p: &LaurentPoly) -> Result<(LaurentPoly, Unit), NotUnitSymmetric> {
    if p.is_zero() {
        return Ok((LaurentPoly::zero(), Unit::one()));
    }
    let m = p.min_degree().unwrap();
    let mx = p.max_degree().unwrap();
    // A symmetric support is balanced around 0, fixing the t-shift.
    if (m + mx).rem_euclid(2) != 0 {
        return Err(NotUnitSymmetric);
    }
    let k = (m + mx) / 2;
    let shifted = p.shift(-k);
    for a in 0u8..4 {
        // Candidate q = i^{-a} · t^{-k} · p.
        let q = shifted.scale(&GaussianRational::i_pow(-(a as i64)));
        let real = q.terms().all(|(_, c)| c.is_real());
        if !real || q != q.involute_t() {
            continue;
        }
        let v1 = q.eval_at_one();
        let positive = if !v1.re.is_zero() {
            v1.re.is_positive()
        } else {
            q.coeff(q.max_degree().unwrap()).re.is_positive()
        };
        let (q, a) = if positive { (q, a) } else { (-q, (a + 2) % 4) };
        return Ok((q, Unit { i_pow: a, t_pow: k }));
    }
    Err(NotUnitSymmetric)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(terms: &[(i64, i64)]) -> LaurentPoly {
        let mut q = LaurentPoly::zero();
        for &(e, c) in terms {
            q.add_term(e, GaussianRational::from_int(c));
        }
        q
    }

    #[test]
    fn ring_arithmetic() {
        // (t + t⁻¹) + (−t⁻¹) = t
        assert_eq!(&p(&[(1, 1), (-1, 1)]) + &p(&[(-1, -1)]), p(&[(1, 1)]));
        // (t − 1)(t⁻¹ − 1) = 2 − t − t⁻¹
        assert_eq!(
            &p(&[(1, 1), (0, -1)]) * &p(&[(-1, 1), (0, -1)]),
            p(&[(0, 2), (1, -1), (-1, -1)])
        );
        // scale(i, t) = i·t
        assert_eq!(
            LaurentPoly::t().scale(&GaussianRational::i()),
            LaurentPoly::monomial(1, GaussianRational::i())
        );
    }

    #[test]
    fn involution() {
        let trefoil = p(&[(1, 1), (0, -1), (-1, 1)]);
        assert_eq!(trefoil.involute_t(), trefoil);
        assert_eq!(p(&[(2, 1)]).involute_t(), p(&[(-2, 1)]));
        assert_eq!(LaurentPoly::zero().involute_t(), LaurentPoly::zero());
    }

    #[test]
    fn quantum_brackets() {
        assert_eq!(quantum_bracket(1), LaurentPoly::one());
        assert_eq!(quantum_bracket(2), p(&[(1, -1), (-1, -1)]));
        assert_eq!(quantum_bracket(3), p(&[(2, 1), (0, 1), (-2, 1)]));
        // Defining quotient check: [j]·((−t) − (−t)⁻¹) = (−t)^j − (−t)^{−j}.
        for j in 1..8u32 {
            let minus_t = p(&[(1, -1)]);
            let minus_t_inv = p(&[(-1, -1)]);
            let lhs = &quantum_bracket(j) * &(&minus_t - &minus_t_inv);
            let mut mt_j = LaurentPoly::one();
            let mut mt_minus_j = LaurentPoly::one();
            for _ in 0..j {
                mt_j = &mt_j * &minus_t;
                mt_minus_j = &mt_minus_j * &minus_t_inv;
            }
            assert_eq!(lhs, &mt_j - &mt_minus_j);
        }
    }

    #[test]
    fn unit_form_trefoil_phase() {
        // i·t·(1 − t⁻¹ + t⁻²) = i·(t − 1 + t⁻¹)
        let raw = LaurentPoly::monomial(1, GaussianRational::i())
            * p(&[(0, 1), (-1, -1), (-2, 1)]);
        let (q, u) = canonical_unit_form(&raw).unwrap();
        assert_eq!(q, p(&[(1, 1), (0, -1), (-1, 1)]));
        assert_eq!(u, Unit { i_pow: 1, t_pow: 0 });
    }

    #[test]
    fn unit_form_trivial_and_sign_tiebreak() {
        assert_eq!(
            canonical_unit_form(&LaurentPoly::one()).unwrap(),
            (LaurentPoly::one(), Unit::one())
        );
        // −t + 2 − t⁻¹ vanishes at 1; the top coefficient −1 forces unit −1.
        let (q, u) = canonical_unit_form(&p(&[(1, -1), (0, 2), (-1, -1)])).unwrap();
        assert_eq!(q, p(&[(1, 1), (0, -2), (-1, 1)]));
        assert_eq!(u, Unit { i_pow: 2, t_pow: 0 });
    }

    #[test]
    fn unit_form_idempotent() {
        let samples = [
            p(&[(3, 2), (1, -1), (-1, -1), (-3, 2)]),
            p(&[(2, 5), (0, 1), (-2, 5)]),
            LaurentPoly::monomial(4, GaussianRational::i()).scale(&GaussianRational::from_int(-3)),
        ];
        for s in &samples {
            if let Ok((q, _)) = canonical_unit_form(s) {
                let (q2, u2) = canonical_unit_form(&q).unwrap();
                assert_eq!(q2, q);
                assert!(u2.is_one());
            }
        }
    }

    #[test]
    fn unit_form_rejects_asymmetric() {
        assert_eq!(canonical_unit_form(&p(&[(1, 1), (0, 1), (-1, 2)])), Err(NotUnitSymmetric));
        assert_eq!(canonical_unit_form(&p(&[(1, 1), (0, 1)])), Err(NotUnitSymmetric));
    }

    #[test]
    fn coeff_strings_round_trip() {
        let samples = [
            GaussianRational::from_ratio(-3, 4),
            GaussianRational::i(),
            GaussianRational::from_ratio(1, 2) + GaussianRational::i() * GaussianRational::from_ratio(-5, 7),
            GaussianRational::zero(),
        ];
        for s in &samples {
            let parsed = GaussianRational::parse_coeff(&s.to_coeff_string()).unwrap();
            assert_eq!(&parsed, s);
        }
    }
}
