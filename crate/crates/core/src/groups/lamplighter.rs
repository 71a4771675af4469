use std::collections::BTreeMap;

use serde_json::{json, Value};

use super::{check_size, ALength, ConfinedGroup, Window};
use crate::error::{FocalError, Result};

/// Finitely supported configuration `Z → Z_q`, stored as sorted
/// `(position, value)` pairs with nonzero values.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LampConfig {
    lamps: Vec<(i64, u32)>,
}

impl LampConfig {
    pub fn empty() -> Self {
        LampConfig { lamps: Vec::new() }
    }

    /// Builds a configuration, reducing values mod `q` and dropping zeros.
    pub fn from_pairs(q: u32, pairs: impl IntoIterator<Item = (i64, i64)>) -> Self {
        let mut acc: BTreeMap<i64, i64> = BTreeMap::new();
        for (p, v) in pairs {
            *acc.entry(p).or_default() += v;
        }
        let lamps = acc
            .into_iter()
            .map(|(p, v)| (p, v.rem_euclid(q as i64) as u32))
            .filter(|&(_, v)| v != 0)
            .collect();
        LampConfig { lamps }
    }

    /// Single lamp of value 1 at `pos`.
    pub fn delta(pos: i64) -> Self {
        LampConfig {
            lamps: vec![(pos, 1)],
        }
    }

    pub fn lamps(&self) -> &[(i64, u32)] {
        &self.lamps
    }

    pub fn is_empty(&self) -> bool {
        self.lamps.is_empty()
    }

    pub fn get(&self, pos: i64) -> u32 {
        match self.lamps.binary_search_by_key(&pos, |&(p, _)| p) {
            Ok(i) => self.lamps[i].1,
            Err(_) => 0,
        }
    }

    pub fn min_pos(&self) -> Option<i64> {
        self.lamps.first().map(|&(p, _)| p)
    }

    pub fn max_pos(&self) -> Option<i64> {
        self.lamps.last().map(|&(p, _)| p)
    }

    pub fn shift(&self, by: i64) -> Self {
        LampConfig {
            lamps: self.lamps.iter().map(|&(p, v)| (p + by, v)).collect(),
        }
    }

    /// Lamps at positions `< bound`.
    pub fn below(&self, bound: i64) -> Self {
        LampConfig {
            lamps: self
                .lamps
                .iter()
                .copied()
                .filter(|&(p, _)| p < bound)
                .collect(),
        }
    }

    pub fn add(&self, other: &Self, q: u32) -> Self {
        let mut out = Vec::with_capacity(self.lamps.len() + other.lamps.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.lamps, &other.lamps);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                out.push(a[i]);
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                out.push(b[j]);
                j += 1;
            } else {
                let v = (a[i].1 + b[j].1) % q;
                if v != 0 {
                    out.push((a[i].0, v));
                }
                i += 1;
                j += 1;
            }
        }
        LampConfig { lamps: out }
    }

    pub fn neg(&self, q: u32) -> Self {
        LampConfig {
            lamps: self.lamps.iter().map(|&(p, v)| (p, q - v)).collect(),
        }
    }

    /// Every configuration supported on `lo..=hi`.
    pub fn enumerate(q: u32, lo: i64, hi: i64) -> Vec<Self> {
        if hi < lo {
            return vec![LampConfig::empty()];
        }
        let width = (hi - lo + 1) as usize;
        let total = (q as usize).pow(width as u32);
        let mut out = Vec::with_capacity(total);
        let mut digits = vec![0u32; width];
        for _ in 0..total {
            let lamps = digits
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0)
                .map(|(k, &v)| (lo + k as i64, v))
                .collect();
            out.push(LampConfig { lamps });
            for d in digits.iter_mut() {
                *d += 1;
                if *d < q {
                    break;
                }
                *d = 0;
            }
        }
        out
    }
}

/// `H = ⊕_Z Z_q`, `α` shifts lamps by `+1`, `A` = configurations supported
/// on `[0, +∞)`. `A` is a subgroup, so `n0 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lamplighter {
    q: u32,
}

impl Lamplighter {
    pub fn new(q: u32) -> Result<Self> {
        if q < 2 {
            return Err(FocalError::InvalidArgument(format!(
                "lamplighter needs q ≥ 2, got {q}"
            )));
        }
        Ok(Lamplighter { q })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn delta(&self, pos: i64) -> LampConfig {
        LampConfig::delta(pos)
    }

    fn count(&self, lo: i64, hi: i64) -> u128 {
        if hi < lo {
            1
        } else {
            (self.q as u128).saturating_pow((hi - lo + 1).min(127) as u32)
        }
    }
}

pub(crate) fn parse_lamps(q: u32, s: &str) -> Result<LampConfig> {
    let mut t = s.trim();
    if let Some(rest) = t.strip_prefix("lamps:") {
        t = rest.trim();
    }
    let t = t
        .strip_prefix('{')
        .and_then(|r| r.strip_suffix('}'))
        .unwrap_or(t)
        .trim();
    if t.is_empty() {
        return Ok(LampConfig::empty());
    }
    let mut pairs = Vec::new();
    for entry in t.split(',') {
        let (p, v) = entry
            .split_once(':')
            .ok_or_else(|| FocalError::Parse(format!("lamp entry `{entry}` is not pos:val")))?;
        let p: i64 = p
            .trim()
            .trim_matches('"')
            .parse()
            .map_err(|_| FocalError::Parse(format!("bad lamp position in `{entry}`")))?;
        let v: i64 = v
            .trim()
            .parse()
            .map_err(|_| FocalError::Parse(format!("bad lamp value in `{entry}`")))?;
        pairs.push((p, v));
    }
    Ok(LampConfig::from_pairs(q, pairs))
}

pub(crate) fn format_lamps(c: &LampConfig) -> String {
    let body: Vec<String> = c.lamps.iter().map(|(p, v)| format!("{p}:{v}")).collect();
    format!("{{{}}}", body.join(","))
}

pub(crate) fn lamps_to_json(c: &LampConfig) -> Value {
    let map: serde_json::Map<String, Value> = c
        .lamps
        .iter()
        .map(|&(p, v)| (p.to_string(), json!(v)))
        .collect();
    json!({ "lamps": map })
}

pub(crate) fn lamps_from_json(q: u32, v: &Value) -> Result<LampConfig> {
    let obj = v
        .get("lamps")
        .and_then(Value::as_object)
        .ok_or_else(|| FocalError::Parse(format!("expected {{\"lamps\": {{...}}}}, got {v}")))?;
    let mut pairs = Vec::with_capacity(obj.len());
    for (k, val) in obj {
        let p: i64 = k
            .parse()
            .map_err(|_| FocalError::Parse(format!("lamp position `{k}` is not an integer")))?;
        let x = val
            .as_i64()
            .ok_or_else(|| FocalError::Parse(format!("lamp value {val} is not an integer")))?;
        pairs.push((p, x));
    }
    Ok(LampConfig::from_pairs(q, pairs))
}

fn lamps_bytes(c: &LampConfig) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 * c.lamps.len());
    for &(p, v) in &c.lamps {
        out.extend_from_slice(&p.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

impl ConfinedGroup for Lamplighter {
    type Elem = LampConfig;

    fn name(&self) -> String {
        format!("lamplighter(q={})", self.q)
    }

    fn identity(&self) -> LampConfig {
        LampConfig::empty()
    }

    fn multiply(&self, a: &LampConfig, b: &LampConfig) -> LampConfig {
        a.add(b, self.q)
    }

    fn invert(&self, a: &LampConfig) -> LampConfig {
        a.neg(self.q)
    }

    fn alpha(&self, h: &LampConfig) -> LampConfig {
        h.shift(1)
    }

    fn alpha_inv(&self, h: &LampConfig) -> LampConfig {
        h.shift(-1)
    }

    fn alpha_pow(&self, h: &LampConfig, k: i64) -> LampConfig {
        h.shift(k)
    }

    fn in_a(&self, h: &LampConfig) -> bool {
        h.min_pos().is_none_or(|p| p >= 0)
    }

    fn a_length(&self, h: &LampConfig) -> ALength {
        if h.is_empty() {
            ALength::Finite(0)
        } else if self.in_a(h) {
            ALength::Finite(1)
        } else {
            // A is a subgroup: A^k = A for every k ≥ 1.
            ALength::Infinite
        }
    }

    fn a_factors(&self, h: &LampConfig) -> Option<Vec<LampConfig>> {
        match self.a_length(h) {
            ALength::Finite(0) => Some(vec![]),
            ALength::Finite(_) => Some(vec![h.clone()]),
            ALength::Infinite => None,
        }
    }

    fn n0(&self) -> u32 {
        0
    }

    fn canonical_bytes(&self, h: &LampConfig) -> Vec<u8> {
        lamps_bytes(h)
    }

    fn in_window(&self, h: &LampConfig, w: &Window) -> bool {
        h.min_pos().is_none_or(|p| p >= w.lo) && h.max_pos().is_none_or(|p| p <= w.hi)
    }

    fn windowed_h(&self, w: &Window) -> Result<Vec<LampConfig>> {
        check_size(&self.name(), self.count(w.lo, w.hi))?;
        Ok(LampConfig::enumerate(self.q, w.lo, w.hi))
    }

    fn windowed_a(&self, w: &Window) -> Result<Vec<LampConfig>> {
        let lo = w.lo.max(0);
        check_size(&self.name(), self.count(lo, w.hi))?;
        Ok(LampConfig::enumerate(self.q, lo, w.hi))
    }

    fn shift_generators(&self, w: &Window, m_bound: u32) -> Result<Vec<LampConfig>> {
        // α^m(a) is `a` shifted by m; landing in [lo, hi] with m ≥ -m_bound
        // forces supp(a) ⊆ [0, hi + m_bound].
        let hi = w.hi + m_bound as i64;
        check_size(&self.name(), self.count(0, hi))?;
        Ok(LampConfig::enumerate(self.q, 0, hi))
    }

    /// Number of cosets of `α(A)` in `A`, counted on the window `[0, 2]` where
    /// `A ∩ window / α(A) ∩ window` is already exact.
    fn compaction_index(&self) -> Result<u64> {
        let a = LampConfig::enumerate(self.q, 0, 2);
        let cosets: std::collections::BTreeSet<LampConfig> = a.iter().map(|c| c.below(1)).collect();
        Ok(cosets.len() as u64)
    }

    fn powers_unbounded(&self, _h: &LampConfig) -> Option<bool> {
        Some(false)
    }

    fn torsion_order(&self, h: &LampConfig, max: u64) -> Option<u64> {
        let order = h
            .lamps
            .iter()
            .map(|&(_, v)| (self.q / gcd(self.q, v)) as u64)
            .fold(1u64, lcm);
        (order <= max).then_some(order)
    }

    fn format_elem(&self, h: &LampConfig) -> String {
        format_lamps(h)
    }

    fn parse_elem(&self, s: &str) -> Result<LampConfig> {
        parse_lamps(self.q, s)
    }

    fn elem_to_json(&self, h: &LampConfig) -> Value {
        lamps_to_json(h)
    }

    fn elem_from_json(&self, v: &Value) -> Result<LampConfig> {
        lamps_from_json(self.q, v)
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    num_integer::gcd(a, b)
}

fn lcm(a: u64, b: u64) -> u64 {
    num_integer::lcm(a, b)
}

/// Lamplighter arithmetic with `α` replaced by the identity. Not confining:
/// `α(A) = A` and negative lamps never enter `A`. Exists to exercise the
/// failure paths of the verifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IdentityAlpha {
    inner: Lamplighter,
}

impl IdentityAlpha {
    pub fn new(q: u32) -> Result<Self> {
        Ok(IdentityAlpha {
            inner: Lamplighter::new(q)?,
        })
    }

    pub fn q(&self) -> u32 {
        self.inner.q
    }
}

impl ConfinedGroup for IdentityAlpha {
    type Elem = LampConfig;

    fn name(&self) -> String {
        format!("identity_alpha(q={})", self.inner.q)
    }

    fn identity(&self) -> LampConfig {
        LampConfig::empty()
    }

    fn multiply(&self, a: &LampConfig, b: &LampConfig) -> LampConfig {
        self.inner.multiply(a, b)
    }

    fn invert(&self, a: &LampConfig) -> LampConfig {
        self.inner.invert(a)
    }

    fn alpha(&self, h: &LampConfig) -> LampConfig {
        h.clone()
    }

    fn alpha_inv(&self, h: &LampConfig) -> LampConfig {
        h.clone()
    }

    fn in_a(&self, h: &LampConfig) -> bool {
        self.inner.in_a(h)
    }

    fn a_length(&self, h: &LampConfig) -> ALength {
        self.inner.a_length(h)
    }

    fn a_factors(&self, h: &LampConfig) -> Option<Vec<LampConfig>> {
        self.inner.a_factors(h)
    }

    fn n0(&self) -> u32 {
        0
    }

    fn canonical_bytes(&self, h: &LampConfig) -> Vec<u8> {
        lamps_bytes(h)
    }

    fn in_window(&self, h: &LampConfig, w: &Window) -> bool {
        self.inner.in_window(h, w)
    }

    fn windowed_h(&self, w: &Window) -> Result<Vec<LampConfig>> {
        self.inner.windowed_h(w)
    }

    fn windowed_a(&self, w: &Window) -> Result<Vec<LampConfig>> {
        self.inner.windowed_a(w)
    }

    fn shift_generators(&self, w: &Window, _m_bound: u32) -> Result<Vec<LampConfig>> {
        self.inner.windowed_a(w)
    }

    fn a_length_validated(&self) -> bool {
        false
    }

    fn format_elem(&self, h: &LampConfig) -> String {
        format_lamps(h)
    }

    fn parse_elem(&self, s: &str) -> Result<LampConfig> {
        parse_lamps(self.inner.q, s)
    }

    fn elem_to_json(&self, h: &LampConfig) -> Value {
        lamps_to_json(h)
    }

    fn elem_from_json(&self, v: &Value) -> Result<LampConfig> {
        lamps_from_json(self.inner.q, v)
    }
}
