use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use super::{check_size, ALength, ConfinedGroup, Window};
use crate::error::{FocalError, Result};

/// An element `num / n^den_pow` of `Z[1/n]`, with `den_pow` minimal.
/// The base `n` lives in the owning [`NAdic`] group.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NAdicNum {
    num: BigInt,
    den_pow: u32,
}

impl NAdicNum {
    pub fn num(&self) -> &BigInt {
        &self.num
    }

    pub fn den_pow(&self) -> u32 {
        self.den_pow
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

/// `H = Z[1/n]` under addition, `α(x) = x/n`, `A = [-1, 1] ∩ Z[1/n]`, `n0 = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NAdic {
    n: u32,
}

impl NAdic {
    pub fn new(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(FocalError::InvalidArgument(format!(
                "n-adic family needs n ≥ 2, got {n}"
            )));
        }
        Ok(NAdic { n })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    fn pow(&self, k: u32) -> BigInt {
        num_traits::pow(BigInt::from(self.n), k as usize)
    }

    /// `num / n^den_pow`, reduced.
    pub fn make(&self, num: impl Into<BigInt>, den_pow: u32) -> NAdicNum {
        let mut num = num.into();
        let mut den_pow = den_pow;
        if num.is_zero() {
            return NAdicNum { num, den_pow: 0 };
        }
        let n = BigInt::from(self.n);
        while den_pow > 0 {
            let (q, r) = num.div_rem(&n);
            if !r.is_zero() {
                break;
            }
            num = q;
            den_pow -= 1;
        }
        NAdicNum { num, den_pow }
    }

    pub fn int(&self, v: i64) -> NAdicNum {
        self.make(v, 0)
    }

    pub fn to_rational(&self, x: &NAdicNum) -> BigRational {
        BigRational::new(x.num.clone(), self.pow(x.den_pow))
    }

    /// Exact `p/q` when `q` divides a power of `n`.
    pub fn from_fraction(&self, p: BigInt, q: BigInt) -> Result<NAdicNum> {
        if q.is_zero() {
            return Err(FocalError::Parse("zero denominator".into()));
        }
        let r = BigRational::new(p, q);
        let (p, q) = (r.numer().clone(), r.denom().clone());
        let mut nk = BigInt::one();
        for k in 0..=256u32 {
            if (&nk % &q).is_zero() {
                return Ok(self.make(p * (&nk / &q), k));
            }
            nk *= self.n;
        }
        Err(FocalError::Parse(format!(
            "{r} is not in Z[1/{}]: denominator does not divide a power of {}",
            self.n, self.n
        )))
    }

    fn count(&self, lo: i64, hi: i64, den_pow: u32) -> u128 {
        if hi < lo {
            return 0;
        }
        let scale = (self.n as u128).checked_pow(den_pow).unwrap_or(u128::MAX);
        ((hi - lo) as u128).saturating_mul(scale).saturating_add(1)
    }

    fn lattice(&self, lo: i64, hi: i64, den_pow: u32) -> Result<Vec<NAdicNum>> {
        if hi < lo {
            return Ok(Vec::new());
        }
        check_size(&self.name(), self.count(lo, hi, den_pow))?;
        let scale = self.pow(den_pow);
        let (a, b) = (BigInt::from(lo) * &scale, BigInt::from(hi) * &scale);
        let (a, b) = (a.to_i64().unwrap(), b.to_i64().unwrap());
        Ok((a..=b).map(|k| self.make(k, den_pow)).collect())
    }

    fn abs_ceil(&self, x: &NAdicNum) -> BigInt {
        let d = self.pow(x.den_pow);
        let (q, r) = x.num.abs().div_rem(&d);
        if r.is_zero() {
            q
        } else {
            q + 1
        }
    }
}

impl ConfinedGroup for NAdic {
    type Elem = NAdicNum;

    fn name(&self) -> String {
        format!("nadic(n={})", self.n)
    }

    fn identity(&self) -> NAdicNum {
        self.int(0)
    }

    fn multiply(&self, a: &NAdicNum, b: &NAdicNum) -> NAdicNum {
        let d = a.den_pow.max(b.den_pow);
        let x = &a.num * self.pow(d - a.den_pow) + &b.num * self.pow(d - b.den_pow);
        self.make(x, d)
    }

    fn invert(&self, a: &NAdicNum) -> NAdicNum {
        NAdicNum {
            num: -&a.num,
            den_pow: a.den_pow,
        }
    }

    fn alpha(&self, h: &NAdicNum) -> NAdicNum {
        self.alpha_pow(h, 1)
    }

    fn alpha_inv(&self, h: &NAdicNum) -> NAdicNum {
        self.alpha_pow(h, -1)
    }

    fn alpha_pow(&self, h: &NAdicNum, k: i64) -> NAdicNum {
        if h.is_zero() {
            return h.clone();
        }
        if k >= 0 {
            self.make(h.num.clone(), h.den_pow + k as u32)
        } else {
            let up = (-k) as u32;
            if h.den_pow >= up {
                NAdicNum {
                    num: h.num.clone(),
                    den_pow: h.den_pow - up,
                }
            } else {
                NAdicNum {
                    num: &h.num * self.pow(up - h.den_pow),
                    den_pow: 0,
                }
            }
        }
    }

    fn in_a(&self, h: &NAdicNum) -> bool {
        h.num.abs() <= self.pow(h.den_pow)
    }

    /// `ℓ_A(x) = ⌈|x|⌉`: `k` unit-interval summands reach at most `k` in
    /// absolute value, and `x` splits as `⌈|x|⌉ - 1` unit steps plus a
    /// remainder in `(0, 1]` that stays in `Z[1/n]`.
    fn a_length(&self, h: &NAdicNum) -> ALength {
        ALength::Finite(
            self.abs_ceil(h)
                .to_u64()
                .expect("ℓ_A exceeds u64 for an n-adic element"),
        )
    }

    fn a_factors(&self, h: &NAdicNum) -> Option<Vec<NAdicNum>> {
        let k = self.a_length(h).finite()?;
        if k == 0 {
            return Some(vec![]);
        }
        let unit = if h.num.sign() == Sign::Minus {
            self.int(-1)
        } else {
            self.int(1)
        };
        let mut out = vec![unit.clone(); (k - 1) as usize];
        let steps = self.make(BigInt::from(k - 1) * &unit.num, 0);
        out.push(self.multiply(h, &self.invert(&steps)));
        Some(out)
    }

    fn n0(&self) -> u32 {
        1
    }

    fn canonical_bytes(&self, h: &NAdicNum) -> Vec<u8> {
        let mut out = h.den_pow.to_le_bytes().to_vec();
        out.extend_from_slice(&h.num.to_signed_bytes_le());
        out
    }

    fn in_window(&self, h: &NAdicNum, w: &Window) -> bool {
        if h.den_pow > w.den_pow {
            return false;
        }
        let scale = self.pow(h.den_pow);
        h.num >= BigInt::from(w.lo) * &scale && h.num <= BigInt::from(w.hi) * &scale
    }

    fn windowed_h(&self, w: &Window) -> Result<Vec<NAdicNum>> {
        self.lattice(w.lo, w.hi, w.den_pow)
    }

    fn windowed_a(&self, w: &Window) -> Result<Vec<NAdicNum>> {
        self.lattice(w.lo.max(-1), w.hi.min(1), w.den_pow)
    }

    fn shift_generators(&self, w: &Window, m_bound: u32) -> Result<Vec<NAdicNum>> {
        // α^m(a) = a / n^m has denominator n^{den(a) + m}; staying on the
        // window lattice with m ≥ -m_bound needs den(a) ≤ den_pow + m_bound.
        self.lattice(-1, 1, w.den_pow + m_bound)
    }

    /// Ratio of the lengths of `A = [-1, 1]` and `α(A) = [α(-1), α(1)]`.
    fn compaction_index(&self) -> Result<u64> {
        let one = self.int(1);
        let neg = self.int(-1);
        let a_len = self.to_rational(&one) - self.to_rational(&neg);
        let image_len = self.to_rational(&self.alpha(&one)) - self.to_rational(&self.alpha(&neg));
        let ratio = a_len / image_len;
        if !ratio.is_integer() {
            return Err(FocalError::InvalidArgument(format!(
                "non-integral compaction ratio {ratio}"
            )));
        }
        ratio
            .to_integer()
            .to_u64()
            .ok_or_else(|| FocalError::InvalidArgument("compaction ratio overflow".into()))
    }

    fn torsion_order(&self, h: &NAdicNum, _max: u64) -> Option<u64> {
        h.is_zero().then_some(1)
    }

    /// `ℓ((kx, 0))` is nondecreasing in `|kx|` and unbounded, so any nonzero
    /// `x` has an unbounded cyclic orbit.
    fn powers_unbounded(&self, h: &NAdicNum) -> Option<bool> {
        Some(!h.is_zero())
    }

    fn format_elem(&self, h: &NAdicNum) -> String {
        if h.den_pow == 0 {
            h.num.to_string()
        } else {
            format!("{}/{}", h.num, self.pow(h.den_pow))
        }
    }

    fn parse_elem(&self, s: &str) -> Result<NAdicNum> {
        let t = s.trim();
        let t = t
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .unwrap_or(t)
            .trim();
        if t.is_empty() {
            return Ok(self.identity());
        }
        let bad = |what: &str| FocalError::Parse(format!("bad n-adic {what} in `{s}`"));
        if t.contains("num") {
            let mut num = None;
            let mut den_pow = 0u32;
            for part in t.split(',') {
                let (k, v) = part.split_once(':').ok_or_else(|| bad("field"))?;
                let v = v.trim().trim_matches('"');
                match k.trim().trim_matches('"') {
                    "num" => num = Some(v.parse::<BigInt>().map_err(|_| bad("numerator"))?),
                    "den_pow" => den_pow = v.parse().map_err(|_| bad("den_pow"))?,
                    _ => return Err(bad("field")),
                }
            }
            return Ok(self.make(num.ok_or_else(|| bad("numerator"))?, den_pow));
        }
        let (p, q) = match t.split_once('/') {
            Some((p, q)) => (
                p.trim().parse::<BigInt>().map_err(|_| bad("numerator"))?,
                q.trim().parse::<BigInt>().map_err(|_| bad("denominator"))?,
            ),
            None => (
                t.parse::<BigInt>().map_err(|_| bad("integer"))?,
                BigInt::one(),
            ),
        };
        self.from_fraction(p, q)
    }

    fn elem_to_json(&self, h: &NAdicNum) -> Value {
        json!({ "num": h.num.to_string(), "den_pow": h.den_pow })
    }

    fn elem_from_json(&self, v: &Value) -> Result<NAdicNum> {
        let num = match v.get("num") {
            Some(Value::String(s)) => s.parse::<BigInt>().ok(),
            Some(Value::Number(x)) => x.as_i64().map(BigInt::from),
            _ => None,
        }
        .ok_or_else(|| {
            FocalError::Parse(format!(
                "expected {{\"num\": str, \"den_pow\": int}}, got {v}"
            ))
        })?;
        let den_pow = v.get("den_pow").and_then(Value::as_u64).unwrap_or(0) as u32;
        Ok(self.make(num, den_pow))
    }
}
