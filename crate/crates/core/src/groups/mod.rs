//! Concrete groups `H` with a confining automorphism `α` into a subset `A`.
//!
//! Every family implements [`ConfinedGroup`]. `A` is always symmetric and
//! contains the identity. Exhaustive checks are scoped by an explicit
//! [`Window`] because `A` is infinite in every family.

use std::fmt;
use std::hash::Hash;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{FocalError, Result};
use crate::metric::HalfInt;

mod family;
mod lamplighter;
mod nadic;
mod product;

pub use family::{Element, Family, FamilySpec};
pub use lamplighter::{IdentityAlpha, LampConfig, Lamplighter};
pub use nadic::{NAdic, NAdicNum};
pub use product::Product;

/// `ℓ_A(h) = min{k : h ∈ A^k}`, possibly infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ALength {
    Finite(u64),
    Infinite,
}

impl ALength {
    pub fn finite(self) -> Option<u64> {
        match self {
            ALength::Finite(k) => Some(k),
            ALength::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ALength::Finite(_))
    }
}

impl fmt::Display for ALength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ALength::Finite(k) => write!(f, "{k}"),
            ALength::Infinite => write!(f, "∞"),
        }
    }
}

/// Finite truncation used by exhaustive checks.
///
/// * lamplighter: lamp positions in `lo..=hi`; `den_pow` is ignored.
/// * n-adic: values in `[lo, hi]` with denominator dividing `n^den_pow`.
/// * product: the same window applied to both factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
    #[serde(default)]
    pub den_pow: u32,
}

impl Window {
    pub fn new(lo: i64, hi: i64, den_pow: u32) -> Self {
        Window { lo, hi, den_pow }
    }

    /// Symmetric window `[-r, r]`.
    pub fn symmetric(r: i64, den_pow: u32) -> Self {
        Window {
            lo: -r,
            hi: r,
            den_pow,
        }
    }

    /// Window grown by `margin` on both sides of the position/value range.
    pub fn enlarged(&self, margin: i64) -> Self {
        Window {
            lo: self.lo - margin,
            hi: self.hi + margin,
            den_pow: self.den_pow,
        }
    }

    /// Parses `lo:hi` or `lo:hi:den_pow`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |p: &str| -> Result<i64> {
            p.parse()
                .map_err(|_| FocalError::Parse(format!("bad window component `{p}` in `{s}`")))
        };
        let w = match parts.as_slice() {
            [lo, hi] => Window::new(num(lo)?, num(hi)?, 0),
            [lo, hi, d] => Window::new(num(lo)?, num(hi)?, num(d)? as u32),
            _ => {
                return Err(FocalError::Parse(format!(
                    "window must be lo:hi[:den_pow], got `{s}`"
                )))
            }
        };
        if w.lo > w.hi {
            return Err(FocalError::Parse(format!("empty window `{s}`")));
        }
        Ok(w)
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.den_pow)
    }
}

/// Upper bound on the size of any windowed enumeration.
pub const MAX_WINDOW_ELEMENTS: usize = 1 << 22;

/// Capability contract of a group `H` with automorphism `α` confining into `A`.
pub trait ConfinedGroup: Send + Sync {
    type Elem: Clone + Eq + Ord + Hash + fmt::Debug + Send + Sync;

    fn name(&self) -> String;

    fn identity(&self) -> Self::Elem;
    fn multiply(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn invert(&self, a: &Self::Elem) -> Self::Elem;
    fn alpha(&self, h: &Self::Elem) -> Self::Elem;
    fn alpha_inv(&self, h: &Self::Elem) -> Self::Elem;

    /// `α^k(h)` for any integer `k`.
    fn alpha_pow(&self, h: &Self::Elem, k: i64) -> Self::Elem {
        let mut out = h.clone();
        if k >= 0 {
            for _ in 0..k {
                out = self.alpha(&out);
            }
        } else {
            for _ in 0..(-k) {
                out = self.alpha_inv(&out);
            }
        }
        out
    }

    fn in_a(&self, h: &Self::Elem) -> bool;
    fn a_length(&self, h: &Self::Elem) -> ALength;

    /// A product decomposition of `h` into exactly `ℓ_A(h)` elements of `A`
    /// (empty for the identity), or `None` when `ℓ_A(h) = ∞`.
    fn a_factors(&self, h: &Self::Elem) -> Option<Vec<Self::Elem>>;

    /// Smallest `n0` with `α^{n0}(A·A) ⊆ A` for this family.
    fn n0(&self) -> u32;

    /// Injective byte encoding, used for hashing elements.
    fn canonical_bytes(&self, h: &Self::Elem) -> Vec<u8>;

    fn in_window(&self, h: &Self::Elem, w: &Window) -> bool;
    fn windowed_h(&self, w: &Window) -> Result<Vec<Self::Elem>>;
    fn windowed_a(&self, w: &Window) -> Result<Vec<Self::Elem>>;

    /// Every `a ∈ A` for which `α^m(a)` can lie in `w` for some `|m| ≤ m_bound`
    /// (a superset is fine). These are the generators a windowed Cayley-graph
    /// search needs.
    fn shift_generators(&self, w: &Window, m_bound: u32) -> Result<Vec<Self::Elem>>;

    /// `[A : α(A)]`, the counting surrogate of the modular factor.
    fn compaction_index(&self) -> Result<u64> {
        Err(FocalError::Unsupported {
            op: "compaction_index",
            family: self.name(),
        })
    }

    /// Smallest `k ≤ max` with `h^k = 1`, if any.
    fn torsion_order(&self, h: &Self::Elem, max: u64) -> Option<u64> {
        let id = self.identity();
        let mut acc = h.clone();
        for k in 1..=max {
            if acc == id {
                return Some(k);
            }
            acc = self.multiply(&acc, h);
        }
        None
    }

    /// Family-specific certificate that `{ℓ(h^k)}` is unbounded
    /// (`Some(true)`) or bounded (`Some(false)`); `None` if unknown.
    fn powers_unbounded(&self, _h: &Self::Elem) -> Option<bool> {
        None
    }

    /// Whether the closed-form `ℓ_A` has been validated against a brute-force oracle.
    fn a_length_validated(&self) -> bool {
        true
    }

    fn format_elem(&self, h: &Self::Elem) -> String;
    fn parse_elem(&self, s: &str) -> Result<Self::Elem>;
    fn elem_to_json(&self, h: &Self::Elem) -> serde_json::Value;
    fn elem_from_json(&self, v: &serde_json::Value) -> Result<Self::Elem>;
}

fn check_size(family: &str, count: u128) -> Result<()> {
    if count > MAX_WINDOW_ELEMENTS as u128 {
        Err(FocalError::WindowTooLarge(format!(
            "{family}: window holds {count} elements (limit {MAX_WINDOW_ELEMENTS})"
        )))
    } else {
        Ok(())
    }
}

/// Outcome of [`verify_confining`], scoped to its window.
#[derive(Clone, Debug, Serialize)]
pub struct ConfiningReport {
    pub family: String,
    pub window: Window,
    pub exhaust_depth: u64,
    pub n0: u32,
    pub passed: bool,
    /// Set when an enumeration hit `max_elements` and was cut short.
    pub incomplete: bool,
    pub windowed_a: usize,
    pub windowed_h: usize,
    /// (a) `α(A) ⊆ A`.
    pub alpha_maps_a_into_a: bool,
    /// (a) witness `a ∈ A` with `α^{-1}(a) ∉ A`, proving `α(A) ≠ A`.
    pub strictness_witness: Option<String>,
    /// (b) `H = ⋃ α^{-n}(A)` on the window.
    pub union_covers_h: bool,
    /// (c) `α^{n0}(A·A) ⊆ A` on the window.
    pub product_absorbed: bool,
    pub counterexamples: Vec<String>,
}

const MAX_COUNTEREXAMPLES: usize = 8;

/// Checks the three confining axioms on windowed samples.
pub fn verify_confining<G: ConfinedGroup>(
    g: &G,
    window: &Window,
    exhaust_depth: u64,
    max_elements: usize,
) -> Result<ConfiningReport> {
    let mut incomplete = false;
    let mut a_set = g.windowed_a(window)?;
    let mut h_set = g.windowed_h(window)?;
    if a_set.len() > max_elements {
        a_set.truncate(max_elements);
        incomplete = true;
    }
    if h_set.len() > max_elements {
        h_set.truncate(max_elements);
        incomplete = true;
    }
    let mut counterexamples = Vec::new();
    let mut note = |msg: String| {
        if counterexamples.len() < MAX_COUNTEREXAMPLES {
            counterexamples.push(msg);
        }
    };

    let mut alpha_ok = true;
    for a in &a_set {
        if !g.in_a(&g.alpha(a)) {
            alpha_ok = false;
            note(format!("α({}) ∉ A", g.format_elem(a)));
        }
    }
    let strictness_witness = a_set
        .iter()
        .find(|a| !g.in_a(&g.alpha_inv(a)))
        .map(|a| g.format_elem(a));
    if strictness_witness.is_none() {
        note("α(A) = A on the window: no a ∈ A with α⁻¹(a) ∉ A".into());
    }

    let mut union_ok = true;
    for h in &h_set {
        let mut cur = h.clone();
        let mut entered = g.in_a(&cur);
        for _ in 0..exhaust_depth {
            if entered {
                break;
            }
            cur = g.alpha(&cur);
            entered = g.in_a(&cur);
        }
        if !entered {
            union_ok = false;
            note(format!(
                "α^k({}) ∉ A for all k ≤ {exhaust_depth}",
                g.format_elem(h)
            ));
        }
    }

    let n0 = g.n0() as i64;
    let mut product_ok = true;
    let mut product_failures = 0;
    'outer: for a in &a_set {
        for b in &a_set {
            let p = g.alpha_pow(&g.multiply(a, b), n0);
            if !g.in_a(&p) {
                product_ok = false;
                note(format!(
                    "α^{n0}({} · {}) ∉ A",
                    g.format_elem(a),
                    g.format_elem(b)
                ));
                product_failures += 1;
                if product_failures >= MAX_COUNTEREXAMPLES {
                    break 'outer;
                }
            }
        }
    }

    let passed = alpha_ok && strictness_witness.is_some() && union_ok && product_ok;
    Ok(ConfiningReport {
        family: g.name(),
        window: *window,
        exhaust_depth,
        n0: g.n0(),
        passed,
        incomplete,
        windowed_a: a_set.len(),
        windowed_h: h_set.len(),
        alpha_maps_a_into_a: alpha_ok,
        strictness_witness,
        union_covers_h: union_ok,
        product_absorbed: product_ok,
        counterexamples,
    })
}

/// Convenience wrapper for [`ConfinedGroup::compaction_index`].
pub fn compaction_index<G: ConfinedGroup>(g: &G) -> Result<u64> {
    g.compaction_index()
}

/// `k₀ = ⌈4·log₂(n0 + 2)⌉`, computed exactly as the least `k` with `2^k ≥ (n0+2)^4`.
pub fn k0(n0: u32) -> u32 {
    let target = (n0 as u128 + 2).pow(4);
    let mut k = 0u32;
    while (1u128 << k) < target {
        k += 1;
    }
    k
}

/// `16·log₂(n0 + 2)` as a float, for display only.
pub fn delta_bound(n0: u32) -> f64 {
    16.0 * (n0 as f64 + 2.0).log2()
}

/// Exact test of `δ ≤ 16·log₂(n0 + 2)`. With `δ = D/2` this is
/// `2^D ≤ (n0 + 2)^32`.
pub fn within_delta_bound(delta: HalfInt, n0: u32) -> bool {
    let d = delta.twice();
    if d <= 0 {
        return true;
    }
    BigUint::from(1u32) << (d as u64) <= BigUint::from(n0 + 2).pow(32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k0_values() {
        assert_eq!(k0(0), 4);
        assert_eq!(k0(1), 7); // ⌈4·log₂3⌉ = ⌈6.34⌉
        assert_eq!(k0(2), 8);
        assert_eq!(k0(6), 12);
    }

    #[test]
    fn delta_bound_is_exact() {
        assert!(within_delta_bound(HalfInt::from_int(16), 0));
        assert!(!within_delta_bound(HalfInt::from_twice(33), 0));
        // 16·log₂3 ≈ 25.36
        assert!(within_delta_bound(HalfInt::from_twice(50), 1));
        assert!(!within_delta_bound(HalfInt::from_twice(51), 1));
        assert!((delta_bound(1) - 25.359).abs() < 1e-3);
    }

    #[test]
    fn window_parsing() {
        assert_eq!(Window::parse("-3:3").unwrap(), Window::new(-3, 3, 0));
        assert_eq!(Window::parse("-4:4:4").unwrap(), Window::new(-4, 4, 4));
        assert!(Window::parse("3:-3").is_err());
        assert!(Window::parse("x").is_err());
    }
}
