//! Runtime-selected family, for configuration files and the CLI.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    ALength, ConfinedGroup, IdentityAlpha, LampConfig, Lamplighter, NAdic, NAdicNum, Product,
    Window,
};
use crate::error::{FocalError, Result};

/// Serializable description of a family.
///
/// JSON form: `{"family": "lamplighter", "q": 2}`, `{"family": "nadic", "n": 2}`,
/// `{"family": "product", "left": {...}, "right": {...}}`.
/// Shorthand: `lamplighter:q=2`, `nadic:n=3`, `product(lamplighter:q=2, nadic:n=2)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    Lamplighter {
        q: u32,
    },
    Nadic {
        n: u32,
    },
    Product {
        left: Box<FamilySpec>,
        right: Box<FamilySpec>,
    },
    IdentityAlpha {
        q: u32,
    },
}

impl FamilySpec {
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.starts_with('{') {
            return Ok(serde_json::from_str(t)?);
        }
        if let Some(inner) = t.strip_prefix("product(").and_then(|r| r.strip_suffix(')')) {
            let (l, r) = split_args(inner)
                .ok_or_else(|| FocalError::Parse(format!("product needs two factors: `{s}`")))?;
            return Ok(FamilySpec::Product {
                left: Box::new(FamilySpec::parse(l)?),
                right: Box::new(FamilySpec::parse(r)?),
            });
        }
        let (kind, arg) = t.split_once(':').unwrap_or((t, ""));
        let param = |key: &str, default: u32| -> Result<u32> {
            let v = arg.trim();
            if v.is_empty() {
                return Ok(default);
            }
            let v = v
                .strip_prefix(key)
                .and_then(|r| r.trim_start().strip_prefix('='))
                .unwrap_or(v);
            v.trim()
                .parse()
                .map_err(|_| FocalError::Parse(format!("bad `{key}` in family `{s}`")))
        };
        match kind.trim() {
            "lamplighter" => Ok(FamilySpec::Lamplighter { q: param("q", 2)? }),
            "nadic" | "n-adic" => Ok(FamilySpec::Nadic { n: param("n", 2)? }),
            "identity_alpha" => Ok(FamilySpec::IdentityAlpha { q: param("q", 2)? }),
            other => Err(FocalError::Parse(format!("unknown family `{other}`"))),
        }
    }

    pub fn build(&self) -> Result<Family> {
        Ok(match self {
            FamilySpec::Lamplighter { q } => Family::Lamplighter(Lamplighter::new(*q)?),
            FamilySpec::Nadic { n } => Family::NAdic(NAdic::new(*n)?),
            FamilySpec::IdentityAlpha { q } => Family::IdentityAlpha(IdentityAlpha::new(*q)?),
            FamilySpec::Product { left, right } => {
                Family::Product(Box::new(Product::new(left.build()?, right.build()?)))
            }
        })
    }
}

fn split_args(s: &str) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '{' => depth += 1,
            ')' | '}' => depth -= 1,
            ',' if depth == 0 => return Some((&s[..i], &s[i + 1..])),
            _ => {}
        }
    }
    None
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Lamplighter { q } => write!(f, "lamplighter:q={q}"),
            FamilySpec::Nadic { n } => write!(f, "nadic:n={n}"),
            FamilySpec::IdentityAlpha { q } => write!(f, "identity_alpha:q={q}"),
            FamilySpec::Product { left, right } => write!(f, "product({left},{right})"),
        }
    }
}

/// A family chosen at runtime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    Lamplighter(Lamplighter),
    NAdic(NAdic),
    Product(Box<Product<Family, Family>>),
    IdentityAlpha(IdentityAlpha),
}

/// Element of a runtime [`Family`]. Mixing elements of different families
/// is a programming error and panics.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    Lamp(LampConfig),
    NAdic(NAdicNum),
    Pair(Box<(Element, Element)>),
}

impl Family {
    pub fn spec(&self) -> FamilySpec {
        match self {
            Family::Lamplighter(g) => FamilySpec::Lamplighter { q: g.q() },
            Family::NAdic(g) => FamilySpec::Nadic { n: g.n() },
            Family::IdentityAlpha(g) => FamilySpec::IdentityAlpha { q: g.q() },
            Family::Product(p) => FamilySpec::Product {
                left: Box::new(p.left.spec()),
                right: Box::new(p.right.spec()),
            },
        }
    }

    pub fn as_lamplighter(&self) -> Option<&Lamplighter> {
        match self {
            Family::Lamplighter(g) => Some(g),
            _ => None,
        }
    }
}

/// Bridges a concrete family's element type and [`Element`].
trait Embed: ConfinedGroup {
    fn unwrap(e: &Element) -> &Self::Elem;
    fn wrap(x: Self::Elem) -> Element;
}

impl Embed for Lamplighter {
    fn unwrap(e: &Element) -> &LampConfig {
        lamp(e)
    }
    fn wrap(x: LampConfig) -> Element {
        Element::Lamp(x)
    }
}

impl Embed for IdentityAlpha {
    fn unwrap(e: &Element) -> &LampConfig {
        lamp(e)
    }
    fn wrap(x: LampConfig) -> Element {
        Element::Lamp(x)
    }
}

impl Embed for NAdic {
    fn unwrap(e: &Element) -> &NAdicNum {
        match e {
            Element::NAdic(x) => x,
            other => panic!("expected an n-adic element, got {other:?}"),
        }
    }
    fn wrap(x: NAdicNum) -> Element {
        Element::NAdic(x)
    }
}

impl Embed for Product<Family, Family> {
    fn unwrap(e: &Element) -> &(Element, Element) {
        match e {
            Element::Pair(p) => p,
            other => panic!("expected a product element, got {other:?}"),
        }
    }
    fn wrap(x: (Element, Element)) -> Element {
        Element::Pair(Box::new(x))
    }
}

fn lamp(e: &Element) -> &LampConfig {
    match e {
        Element::Lamp(c) => c,
        other => panic!("expected a lamplighter element, got {other:?}"),
    }
}

fn un<'a, G: Embed>(_: &G, e: &'a Element) -> &'a G::Elem {
    G::unwrap(e)
}

fn wr<G: Embed>(_: &G, x: G::Elem) -> Element {
    G::wrap(x)
}

fn wr_all<G: Embed>(_: &G, xs: Vec<G::Elem>) -> Vec<Element> {
    xs.into_iter().map(G::wrap).collect()
}

/// Runs `$body` with `$g` bound to the concrete family.
macro_rules! each {
    ($self:expr, $g:ident => $body:expr) => {
        match $self {
            Family::Lamplighter($g) => $body,
            Family::NAdic($g) => $body,
            Family::IdentityAlpha($g) => $body,
            Family::Product(p) => {
                let $g = &**p;
                $body
            }
        }
    };
}

impl ConfinedGroup for Family {
    type Elem = Element;

    fn name(&self) -> String {
        each!(self, g => g.name())
    }

    fn identity(&self) -> Element {
        each!(self, g => wr(g, g.identity()))
    }

    fn multiply(&self, a: &Element, b: &Element) -> Element {
        each!(self, g => wr(g, g.multiply(un(g, a), un(g, b))))
    }

    fn invert(&self, a: &Element) -> Element {
        each!(self, g => wr(g, g.invert(un(g, a))))
    }

    fn alpha(&self, h: &Element) -> Element {
        each!(self, g => wr(g, g.alpha(un(g, h))))
    }

    fn alpha_inv(&self, h: &Element) -> Element {
        each!(self, g => wr(g, g.alpha_inv(un(g, h))))
    }

    fn alpha_pow(&self, h: &Element, k: i64) -> Element {
        each!(self, g => wr(g, g.alpha_pow(un(g, h), k)))
    }

    fn in_a(&self, h: &Element) -> bool {
        each!(self, g => g.in_a(un(g, h)))
    }

    fn a_length(&self, h: &Element) -> ALength {
        each!(self, g => g.a_length(un(g, h)))
    }

    fn a_factors(&self, h: &Element) -> Option<Vec<Element>> {
        each!(self, g => g.a_factors(un(g, h)).map(|f| wr_all(g, f)))
    }

    fn n0(&self) -> u32 {
        each!(self, g => g.n0())
    }

    fn canonical_bytes(&self, h: &Element) -> Vec<u8> {
        each!(self, g => g.canonical_bytes(un(g, h)))
    }

    fn in_window(&self, h: &Element, w: &Window) -> bool {
        each!(self, g => g.in_window(un(g, h), w))
    }

    fn windowed_h(&self, w: &Window) -> Result<Vec<Element>> {
        each!(self, g => g.windowed_h(w).map(|v| wr_all(g, v)))
    }

    fn windowed_a(&self, w: &Window) -> Result<Vec<Element>> {
        each!(self, g => g.windowed_a(w).map(|v| wr_all(g, v)))
    }

    fn shift_generators(&self, w: &Window, m_bound: u32) -> Result<Vec<Element>> {
        each!(self, g => g.shift_generators(w, m_bound).map(|v| wr_all(g, v)))
    }

    fn compaction_index(&self) -> Result<u64> {
        each!(self, g => g.compaction_index())
    }

    fn torsion_order(&self, h: &Element, max: u64) -> Option<u64> {
        each!(self, g => g.torsion_order(un(g, h), max))
    }

    fn powers_unbounded(&self, h: &Element) -> Option<bool> {
        each!(self, g => g.powers_unbounded(un(g, h)))
    }

    fn a_length_validated(&self) -> bool {
        each!(self, g => g.a_length_validated())
    }

    fn format_elem(&self, h: &Element) -> String {
        each!(self, g => g.format_elem(un(g, h)))
    }

    fn parse_elem(&self, s: &str) -> Result<Element> {
        each!(self, g => g.parse_elem(s).map(|x| wr(g, x)))
    }

    fn elem_to_json(&self, h: &Element) -> Value {
        each!(self, g => g.elem_to_json(un(g, h)))
    }

    fn elem_from_json(&self, v: &Value) -> Result<Element> {
        each!(self, g => g.elem_from_json(v).map(|x| wr(g, x)))
    }
}
