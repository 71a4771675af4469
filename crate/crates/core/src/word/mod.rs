//! The word metric on `G = H ⋊_α Z` for the generating set `A ∪ {α, α⁻¹}`.
//!
//! Every element has a geodesic of the shape `α^{-i} g₁…g_k α^j` with
//! `gₛ ∈ A`. Such a word evaluates to `(α^{-i}(g₁⋯g_k), j - i)`, so for
//! `x = (h, m)`
//!
//! ```text
//! |x| = min over i ≥ max(0, -m) of  2i + m + ℓ_A(α^i(h)).
//! ```
//!
//! Since `ℓ_A(α(h)) ≤ ℓ_A(h)`, the objective only grows once `ℓ_A(α^i(h)) ≤ 1`,
//! which bounds the scan.

use std::fmt;

use serde_json::Value;

use crate::error::{FocalError, Result};
use crate::groups::{k0, ALength, ConfinedGroup};

mod ball;
mod bfs;

pub use ball::{
    ball_points, distortion_check, Ball, BallSampler, DistortionLevel, DistortionMode,
    DistortionReport,
};
pub use bfs::{bfs_oracle, windowed_bfs, BfsEntry, BfsReport, Reached};

/// Default bound on the number of `α` applications tried before giving up.
pub const DEFAULT_MAX_DEPTH: u64 = 4096;

/// An element `(h, m)` of `H ⋊_α Z`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupPoint<E> {
    pub h: E,
    pub m: i64,
}

impl<E> GroupPoint<E> {
    pub fn new(h: E, m: i64) -> Self {
        GroupPoint { h, m }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Letter<E> {
    AlphaPlus,
    AlphaMinus,
    Gen(E),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word<E> {
    pub letters: Vec<Letter<E>>,
}

impl<E: Clone> Word<E> {
    pub fn new(letters: Vec<Letter<E>>) -> Self {
        Word { letters }
    }

    pub fn empty() -> Self {
        Word { letters: vec![] }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut letters = self.letters.clone();
        letters.extend(other.letters.iter().cloned());
        Word { letters }
    }
}

/// `α^{-i} g₁…g_k α^j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalForm<E> {
    pub i: u64,
    pub gs: Vec<E>,
    pub j: u64,
}

impl<E: Clone> NormalForm<E> {
    pub fn len(&self) -> u64 {
        self.i + self.gs.len() as u64 + self.j
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn k(&self) -> usize {
        self.gs.len()
    }

    pub fn to_word(&self) -> Word<E> {
        let mut letters = Vec::with_capacity(self.len() as usize);
        letters.extend((0..self.i).map(|_| Letter::AlphaMinus));
        letters.extend(self.gs.iter().cloned().map(Letter::Gen));
        letters.extend((0..self.j).map(|_| Letter::AlphaPlus));
        Word { letters }
    }
}

/// Closed-form length together with the minimizing exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LengthDetail {
    pub length: u64,
    /// The minimizing `i` (the largest one on ties).
    pub i: u64,
    /// `ℓ_A(α^i(h))` at the minimizer.
    pub k: u64,
}

/// Word metric over a confined family.
#[derive(Clone, Debug)]
pub struct WordMetric<G> {
    group: G,
    max_depth: u64,
}

impl<G: ConfinedGroup> WordMetric<G> {
    /// Refuses families whose `ℓ_A` closed form has not been validated.
    pub fn new(group: G) -> Result<Self> {
        if !group.a_length_validated() {
            return Err(FocalError::UnvalidatedOracle(group.name()));
        }
        Ok(Self::unchecked(group))
    }

    pub fn unchecked(group: G) -> Self {
        WordMetric {
            group,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }

    pub fn with_max_depth(mut self, depth: u64) -> Self {
        self.max_depth = depth;
        self
    }

    pub fn group(&self) -> &G {
        &self.group
    }

    pub fn k0(&self) -> u32 {
        k0(self.group.n0())
    }

    pub fn identity(&self) -> GroupPoint<G::Elem> {
        GroupPoint::new(self.group.identity(), 0)
    }

    pub fn alpha_power(&self, m: i64) -> GroupPoint<G::Elem> {
        GroupPoint::new(self.group.identity(), m)
    }

    pub fn h_point(&self, h: G::Elem) -> GroupPoint<G::Elem> {
        GroupPoint::new(h, 0)
    }

    /// `(h, m)·(h', m') = (h·α^m(h'), m + m')`.
    pub fn mul(&self, x: &GroupPoint<G::Elem>, y: &GroupPoint<G::Elem>) -> GroupPoint<G::Elem> {
        let g = &self.group;
        GroupPoint::new(g.multiply(&x.h, &g.alpha_pow(&y.h, x.m)), x.m + y.m)
    }

    /// `(h, m)⁻¹ = (α^{-m}(h⁻¹), -m)`.
    pub fn inv(&self, x: &GroupPoint<G::Elem>) -> GroupPoint<G::Elem> {
        let g = &self.group;
        GroupPoint::new(g.alpha_pow(&g.invert(&x.h), -x.m), -x.m)
    }

    pub fn pow(&self, x: &GroupPoint<G::Elem>, n: i64) -> GroupPoint<G::Elem> {
        let base = if n < 0 { self.inv(x) } else { x.clone() };
        let mut acc = self.identity();
        let mut sq = base;
        let mut e = n.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &sq);
            }
            e >>= 1;
            if e > 0 {
                sq = self.mul(&sq, &sq);
            }
        }
        acc
    }

    fn check_letters(&self, w: &Word<G::Elem>) -> Result<()> {
        for (index, l) in w.letters.iter().enumerate() {
            if let Letter::Gen(a) = l {
                if !self.group.in_a(a) {
                    return Err(FocalError::NotInA {
                        index,
                        elem: self.group.format_elem(a),
                    });
                }
            }
        }
        Ok(())
    }

    /// Left-to-right product of the letters.
    pub fn evaluate(&self, w: &Word<G::Elem>) -> Result<GroupPoint<G::Elem>> {
        self.check_letters(w)?;
        let g = &self.group;
        let (mut h, mut m) = (g.identity(), 0i64);
        for l in &w.letters {
            match l {
                Letter::AlphaPlus => m += 1,
                Letter::AlphaMinus => m -= 1,
                Letter::Gen(a) => h = g.multiply(&h, &g.alpha_pow(a, m)),
            }
        }
        Ok(GroupPoint::new(h, m))
    }

    pub fn evaluate_normal_form(&self, nf: &NormalForm<G::Elem>) -> GroupPoint<G::Elem> {
        let g = &self.group;
        let prod = nf
            .gs
            .iter()
            .fold(g.identity(), |acc, a| g.multiply(&acc, a));
        GroupPoint::new(
            g.alpha_pow(&prod, -(nf.i as i64)),
            nf.j as i64 - nf.i as i64,
        )
    }

    /// Moves every `α⁻¹` left and every `α` right using `a·α⁻¹ = α⁻¹·α(a)`
    /// and `α·a = α(a)·α`, cancelling adjacent `α α⁻¹` pairs on the way.
    /// The result is never longer than `w`.
    pub fn rewrite_to_normal_form(&self, w: &Word<G::Elem>) -> Result<NormalForm<G::Elem>> {
        self.check_letters(w)?;
        let g = &self.group;
        let id = g.identity();
        let (mut i, mut gs, mut j) = (0u64, Vec::<G::Elem>::new(), 0u64);
        for l in &w.letters {
            match l {
                Letter::Gen(a) => {
                    if *a != id {
                        gs.push(g.alpha_pow(a, j as i64));
                    }
                }
                Letter::AlphaPlus => {
                    if gs.is_empty() && j == 0 && i > 0 {
                        i -= 1;
                    } else {
                        j += 1;
                    }
                }
                Letter::AlphaMinus => {
                    if j > 0 {
                        j -= 1;
                    } else {
                        i += 1;
                        for x in gs.iter_mut() {
                            *x = g.alpha(x);
                        }
                    }
                }
            }
        }
        Ok(NormalForm { i, gs, j })
    }

    pub fn length_detail(&self, x: &GroupPoint<G::Elem>) -> Result<LengthDetail> {
        let g = &self.group;
        let start = (-x.m).max(0) as u64;
        let mut h = g.alpha_pow(&x.h, start as i64);
        let mut best: Option<LengthDetail> = None;
        for i in start..=start + self.max_depth {
            if let ALength::Finite(k) = g.a_length(&h) {
                let len = (2 * i as i64 + x.m) as u64 + k;
                if best.is_none_or(|b| len <= b.length) {
                    best = Some(LengthDetail { length: len, i, k });
                }
                if k <= 1 {
                    return Ok(best.unwrap());
                }
            }
            h = g.alpha(&h);
        }
        Err(FocalError::DepthExceeded(self.max_depth))
    }

    /// Exact `d_S(1, x)`.
    pub fn word_length(&self, x: &GroupPoint<G::Elem>) -> Result<u64> {
        Ok(self.length_detail(x)?.length)
    }

    pub fn distance(&self, x: &GroupPoint<G::Elem>, y: &GroupPoint<G::Elem>) -> Result<u64> {
        self.word_length(&self.mul(&self.inv(x), y))
    }

    /// A geodesic normal form for `x`.
    pub fn geodesic_normal_form(&self, x: &GroupPoint<G::Elem>) -> Result<NormalForm<G::Elem>> {
        let d = self.length_detail(x)?;
        let g = &self.group;
        let gs = g
            .a_factors(&g.alpha_pow(&x.h, d.i as i64))
            .ok_or(FocalError::DepthExceeded(self.max_depth))?;
        Ok(NormalForm {
            i: d.i,
            gs,
            j: (x.m + d.i as i64) as u64,
        })
    }

    /// A word of length `|x|` evaluating to `x`.
    pub fn geodesic_witness(&self, x: &GroupPoint<G::Elem>) -> Result<Word<G::Elem>> {
        Ok(self.geodesic_normal_form(x)?.to_word())
    }

    pub fn format_point(&self, x: &GroupPoint<G::Elem>) -> String {
        format!("({}, {})", self.group.format_elem(&x.h), x.m)
    }

    /// Element JSON with an added `"m"` field.
    pub fn point_to_json(&self, x: &GroupPoint<G::Elem>) -> Value {
        let mut v = self.group.elem_to_json(&x.h);
        if let Value::Object(map) = &mut v {
            map.insert("m".into(), Value::from(x.m));
        }
        v
    }

    pub fn point_from_json(&self, v: &Value) -> Result<GroupPoint<G::Elem>> {
        let m = v
            .get("m")
            .and_then(Value::as_i64)
            .ok_or_else(|| FocalError::Parse(format!("point is missing integer `m`: {v}")))?;
        Ok(GroupPoint::new(self.group.elem_from_json(v)?, m))
    }

    pub fn format_word(&self, w: &Word<G::Elem>) -> String {
        WordDisplay {
            group: &self.group,
            word: w,
        }
        .to_string()
    }

    /// Parses words such as `a- g{0:1} a+` or `a^-2 g{1/2} a^2`.
    ///
    /// Tokens: `a+`, `a-`, `a^k` (|k| copies of `a±`), `g{elem}` with
    /// `elem` in the family's element syntax. Whitespace, `·` and `*` separate.
    pub fn parse_word(&self, s: &str) -> Result<Word<G::Elem>> {
        parse_word(&self.group, s)
    }
}

struct WordDisplay<'a, G: ConfinedGroup> {
    group: &'a G,
    word: &'a Word<G::Elem>,
}

impl<G: ConfinedGroup> fmt::Display for WordDisplay<'_, G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, l) in self.word.letters.iter().enumerate() {
            if n > 0 {
                f.write_str(" ")?;
            }
            match l {
                Letter::AlphaPlus => f.write_str("a+")?,
                Letter::AlphaMinus => f.write_str("a-")?,
                Letter::Gen(a) => {
                    let e = self.group.format_elem(a);
                    // `{0:1}` already carries its braces.
                    if e.starts_with('{') && e.ends_with('}') {
                        write!(f, "g{e}")?
                    } else {
                        write!(f, "g{{{e}}}")?
                    }
                }
            }
        }
        Ok(())
    }
}

fn parse_word<G: ConfinedGroup>(g: &G, s: &str) -> Result<Word<G::Elem>> {
    let chars: Vec<(usize, char)> = s.char_indices().collect();
    let mut letters = Vec::new();
    let mut p = 0;
    let err =
        |at: usize, what: &str| FocalError::Parse(format!("{what} at byte {at} in word `{s}`"));
    while p < chars.len() {
        let (at, c) = chars[p];
        match c {
            c if c.is_whitespace() || c == '·' || c == '*' => p += 1,
            'a' => {
                let next = chars.get(p + 1).map(|&(_, c)| c);
                match next {
                    Some('+') => {
                        letters.push(Letter::AlphaPlus);
                        p += 2;
                    }
                    Some('-') => {
                        letters.push(Letter::AlphaMinus);
                        p += 2;
                    }
                    Some('^') => {
                        let mut q = p + 2;
                        if matches!(chars.get(q), Some((_, '-' | '+'))) {
                            q += 1;
                        }
                        while matches!(chars.get(q), Some((_, d)) if d.is_ascii_digit()) {
                            q += 1;
                        }
                        let start = chars[p + 2].0;
                        let end = chars.get(q).map_or(s.len(), |&(i, _)| i);
                        let k: i64 = s[start..end].parse().map_err(|_| err(at, "bad exponent"))?;
                        let l = if k >= 0 {
                            Letter::AlphaPlus
                        } else {
                            Letter::AlphaMinus
                        };
                        letters.extend((0..k.unsigned_abs()).map(|_| l.clone()));
                        p = q;
                    }
                    _ => return Err(err(at, "expected `a+`, `a-` or `a^k`")),
                }
            }
            'g' => {
                if !matches!(chars.get(p + 1), Some((_, '{'))) {
                    return Err(err(at, "expected `{` after `g`"));
                }
                let mut depth = 0i32;
                let mut q = p + 1;
                loop {
                    match chars.get(q) {
                        Some((_, '{')) => depth += 1,
                        Some((_, '}')) => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        Some(_) => {}
                        None => return Err(err(at, "unbalanced braces")),
                    }
                    q += 1;
                }
                let inner = &s[chars[p + 1].0 + 1..chars[q].0];
                letters.push(Letter::Gen(g.parse_elem(inner)?));
                p = q + 1;
            }
            _ => return Err(err(at, "unexpected character")),
        }
    }
    Ok(Word { letters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{LampConfig, Lamplighter, NAdic};

    fn lamp() -> WordMetric<Lamplighter> {
        WordMetric::new(Lamplighter::new(2).unwrap()).unwrap()
    }

    fn dyadic() -> WordMetric<NAdic> {
        WordMetric::new(NAdic::new(2).unwrap()).unwrap()
    }

    #[test]
    fn composition_matches_conjugation() {
        // α h α⁻¹ = α(h)
        let w = lamp();
        let h = w.h_point(LampConfig::delta(0));
        let conj = w.mul(&w.mul(&w.alpha_power(1), &h), &w.alpha_power(-1));
        assert_eq!(conj, w.h_point(LampConfig::delta(1)));
        let x = GroupPoint::new(LampConfig::from_pairs(2, [(-1, 1), (2, 1)]), 3);
        assert_eq!(w.mul(&x, &w.inv(&x)), w.identity());
        assert_eq!(w.mul(&w.inv(&x), &x), w.identity());
        assert_eq!(w.pow(&x, -3), w.inv(&w.pow(&x, 3)));
    }

    #[test]
    fn evaluation_examples() {
        let w = lamp();
        assert_eq!(w.evaluate(&Word::empty()).unwrap(), w.identity());
        assert_eq!(
            w.evaluate(&w.parse_word("a^4").unwrap()).unwrap(),
            w.alpha_power(4)
        );
        let word = w.parse_word("g{0:1} a- g{1:1}").unwrap();
        let direct = w.mul(
            &w.mul(&w.h_point(LampConfig::delta(0)), &w.alpha_power(-1)),
            &w.h_point(LampConfig::delta(1)),
        );
        let got = w.evaluate(&word).unwrap();
        assert_eq!(
            w.group().canonical_bytes(&got.h),
            w.group().canonical_bytes(&direct.h)
        );
        assert_eq!(got, direct);
        assert!(matches!(
            w.evaluate(&w.parse_word("a+ g{-1:1}").unwrap()),
            Err(FocalError::NotInA { index: 1, .. })
        ));
    }

    #[test]
    fn rewrite_examples() {
        let w = lamp();
        let a = LampConfig::delta(0);
        let nf = w
            .rewrite_to_normal_form(&Word::new(vec![Letter::Gen(a.clone()), Letter::AlphaMinus]))
            .unwrap();
        assert_eq!(
            nf,
            NormalForm {
                i: 1,
                gs: vec![LampConfig::delta(1)],
                j: 0
            }
        );
        let nf = w
            .rewrite_to_normal_form(&Word::new(vec![Letter::AlphaPlus, Letter::Gen(a)]))
            .unwrap();
        assert_eq!(
            nf,
            NormalForm {
                i: 0,
                gs: vec![LampConfig::delta(1)],
                j: 1
            }
        );
        let nf = w.rewrite_to_normal_form(&Word::empty()).unwrap();
        assert_eq!(
            nf,
            NormalForm {
                i: 0,
                gs: vec![],
                j: 0
            }
        );
        let nf = w
            .rewrite_to_normal_form(&w.parse_word("a- a+ a+ a-").unwrap())
            .unwrap();
        assert!(nf.is_empty());
    }

    #[test]
    fn word_length_examples() {
        let w = lamp();
        assert_eq!(w.word_length(&w.alpha_power(3)).unwrap(), 3);
        assert_eq!(w.word_length(&w.h_point(LampConfig::delta(0))).unwrap(), 1);
        assert_eq!(w.word_length(&w.h_point(LampConfig::delta(-2))).unwrap(), 5);
        let d = dyadic();
        assert_eq!(d.word_length(&d.h_point(d.group().int(5))).unwrap(), 5);
        assert_eq!(d.word_length(&d.h_point(d.group().int(16))).unwrap(), 8);
    }

    #[test]
    fn geodesic_witness_examples() {
        let w = lamp();
        assert!(w.geodesic_witness(&w.identity()).unwrap().is_empty());
        let x = w.h_point(LampConfig::delta(-2));
        let wit = w.geodesic_witness(&x).unwrap();
        assert_eq!(w.format_word(&wit), "a- a- g{0:1} a+ a+");
        assert_eq!(w.evaluate(&wit).unwrap(), x);

        let d = dyadic();
        let x = d.h_point(d.group().int(5));
        let wit = d.geodesic_witness(&x).unwrap();
        assert_eq!(d.format_word(&wit), "a- g{1} g{1} g{1/2} a+");
        assert_eq!(d.evaluate(&wit).unwrap(), x);
    }

    #[test]
    fn unvalidated_family_is_refused() {
        let g = crate::groups::IdentityAlpha::new(2).unwrap();
        assert!(matches!(
            WordMetric::new(g),
            Err(FocalError::UnvalidatedOracle(_))
        ));
        let w = WordMetric::unchecked(g).with_max_depth(32);
        assert!(matches!(
            w.word_length(&w.h_point(LampConfig::delta(-1))),
            Err(FocalError::DepthExceeded(32))
        ));
    }

    #[test]
    fn word_text_round_trip() {
        let d = dyadic();
        let word = d.parse_word("a^-2 g{3/4}·a+ * g{-1} a^2").unwrap();
        assert_eq!(word.len(), 7);
        assert_eq!(d.parse_word(&d.format_word(&word)).unwrap(), word);
        assert!(d.parse_word("b+").is_err());
        assert!(d.parse_word("g{1").is_err());
        assert!(d.parse_word("a^x").is_err());
    }

    #[test]
    fn point_json_carries_m() {
        let w = lamp();
        let x = GroupPoint::new(LampConfig::delta(0), -2);
        let v = w.point_to_json(&x);
        assert_eq!(v, serde_json::json!({"lamps": {"0": 1}, "m": -2}));
        assert_eq!(w.point_from_json(&v).unwrap(), x);
    }
}
