use serde_json::{json, Value};

use super::{check_size, ALength, ConfinedGroup, Window};
use crate::error::{FocalError, Result};

/// `H₁ × H₂` with `α = α₁ × α₂` and `A = A₁ × A₂`.
///
/// Since both `A`s contain the identity, `A^k = A₁^k × A₂^k`, so
/// `ℓ_A` is the max of the two lengths and `n0` the max of the two `n0`s.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Product<L, R> {
    pub left: L,
    pub right: R,
}

impl<L, R> Product<L, R> {
    pub fn new(left: L, right: R) -> Self {
        Product { left, right }
    }
}

fn pairs<X: Clone, Y: Clone>(name: &str, xs: Vec<X>, ys: Vec<Y>) -> Result<Vec<(X, Y)>> {
    check_size(name, xs.len() as u128 * ys.len() as u128)?;
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for x in &xs {
        for y in &ys {
            out.push((x.clone(), y.clone()));
        }
    }
    Ok(out)
}

/// Splits `s` at the first `|` outside parentheses or braces.
fn split_top(s: &str) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '{' => depth += 1,
            ')' | '}' => depth -= 1,
            '|' if depth == 0 => return Some((&s[..i], &s[i + 1..])),
            _ => {}
        }
    }
    None
}

fn unwrap_parens(s: &str) -> &str {
    let t = s.trim();
    match t.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        Some(inner) if split_top(inner).is_some() => inner,
        _ => t,
    }
}

impl<L: ConfinedGroup, R: ConfinedGroup> ConfinedGroup for Product<L, R> {
    type Elem = (L::Elem, R::Elem);

    fn name(&self) -> String {
        format!("product({}, {})", self.left.name(), self.right.name())
    }

    fn identity(&self) -> Self::Elem {
        (self.left.identity(), self.right.identity())
    }

    fn multiply(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        (
            self.left.multiply(&a.0, &b.0),
            self.right.multiply(&a.1, &b.1),
        )
    }

    fn invert(&self, a: &Self::Elem) -> Self::Elem {
        (self.left.invert(&a.0), self.right.invert(&a.1))
    }

    fn alpha(&self, h: &Self::Elem) -> Self::Elem {
        (self.left.alpha(&h.0), self.right.alpha(&h.1))
    }

    fn alpha_inv(&self, h: &Self::Elem) -> Self::Elem {
        (self.left.alpha_inv(&h.0), self.right.alpha_inv(&h.1))
    }

    fn alpha_pow(&self, h: &Self::Elem, k: i64) -> Self::Elem {
        (self.left.alpha_pow(&h.0, k), self.right.alpha_pow(&h.1, k))
    }

    fn in_a(&self, h: &Self::Elem) -> bool {
        self.left.in_a(&h.0) && self.right.in_a(&h.1)
    }

    fn a_length(&self, h: &Self::Elem) -> ALength {
        self.left.a_length(&h.0).max(self.right.a_length(&h.1))
    }

    fn a_factors(&self, h: &Self::Elem) -> Option<Vec<Self::Elem>> {
        let mut l = self.left.a_factors(&h.0)?;
        let mut r = self.right.a_factors(&h.1)?;
        let k = l.len().max(r.len());
        l.resize(k, self.left.identity());
        r.resize(k, self.right.identity());
        Some(l.into_iter().zip(r).collect())
    }

    fn n0(&self) -> u32 {
        self.left.n0().max(self.right.n0())
    }

    fn canonical_bytes(&self, h: &Self::Elem) -> Vec<u8> {
        let l = self.left.canonical_bytes(&h.0);
        let mut out = (l.len() as u64).to_le_bytes().to_vec();
        out.extend_from_slice(&l);
        out.extend_from_slice(&self.right.canonical_bytes(&h.1));
        out
    }

    fn in_window(&self, h: &Self::Elem, w: &Window) -> bool {
        self.left.in_window(&h.0, w) && self.right.in_window(&h.1, w)
    }

    fn windowed_h(&self, w: &Window) -> Result<Vec<Self::Elem>> {
        pairs(
            &self.name(),
            self.left.windowed_h(w)?,
            self.right.windowed_h(w)?,
        )
    }

    fn windowed_a(&self, w: &Window) -> Result<Vec<Self::Elem>> {
        pairs(
            &self.name(),
            self.left.windowed_a(w)?,
            self.right.windowed_a(w)?,
        )
    }

    fn shift_generators(&self, w: &Window, m_bound: u32) -> Result<Vec<Self::Elem>> {
        pairs(
            &self.name(),
            self.left.shift_generators(w, m_bound)?,
            self.right.shift_generators(w, m_bound)?,
        )
    }

    fn compaction_index(&self) -> Result<u64> {
        Ok(self.left.compaction_index()? * self.right.compaction_index()?)
    }

    fn torsion_order(&self, h: &Self::Elem, max: u64) -> Option<u64> {
        let l = self.left.torsion_order(&h.0, max)?;
        let r = self.right.torsion_order(&h.1, max)?;
        let k = num_integer::lcm(l, r);
        (k <= max).then_some(k)
    }

    fn powers_unbounded(&self, h: &Self::Elem) -> Option<bool> {
        match (
            self.left.powers_unbounded(&h.0),
            self.right.powers_unbounded(&h.1),
        ) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        }
    }

    fn a_length_validated(&self) -> bool {
        self.left.a_length_validated() && self.right.a_length_validated()
    }

    fn format_elem(&self, h: &Self::Elem) -> String {
        format!(
            "({} | {})",
            self.left.format_elem(&h.0),
            self.right.format_elem(&h.1)
        )
    }

    /// Accepts `left | right`, optionally wrapped in parentheses.
    fn parse_elem(&self, s: &str) -> Result<Self::Elem> {
        let t = unwrap_parens(s);
        if t.is_empty() {
            return Ok(self.identity());
        }
        let (l, r) = split_top(t).ok_or_else(|| {
            FocalError::Parse(format!("product element must be `left | right`, got `{s}`"))
        })?;
        Ok((self.left.parse_elem(l)?, self.right.parse_elem(r)?))
    }

    fn elem_to_json(&self, h: &Self::Elem) -> Value {
        json!({
            "left": self.left.elem_to_json(&h.0),
            "right": self.right.elem_to_json(&h.1),
        })
    }

    fn elem_from_json(&self, v: &Value) -> Result<Self::Elem> {
        let part = |k: &str| {
            v.get(k)
                .ok_or_else(|| FocalError::Parse(format!("product element missing `{k}`: {v}")))
        };
        Ok((
            self.left.elem_from_json(part("left")?)?,
            self.right.elem_from_json(part("right")?)?,
        ))
    }
}
