//! Boundary invariants of the action of `G` on its Cayley graph.
//!
//! The distinguished boundary point `ξ` is the limit of `α^{-n}`: with the
//! composition law `(h, m)·(h', m') = (h·α^m(h'), m + m')` every element of
//! `H` moves `α^{-n}` a bounded amount, so `ξ` is fixed by all of `G`.
//! Horokernels are measured along that sequence and oriented so that
//! `h(x, y) = lim d(y, α^{-n}) - d(x, α^{-n})`; with this orientation
//! `β(α) = +1` and `β` agrees with the projection `(h, m) ↦ m`.

use std::collections::{BTreeSet, HashSet};

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{FocalError, Result};
use crate::groups::ConfinedGroup;
use crate::metric::{qi_embedding_check, serialize_ratio, HalfInt, QIReport};
use crate::word::{GroupPoint, WordMetric};

#[derive(Clone, Debug, Serialize)]
pub struct TranslationNumber {
    /// `d(1, g^N) / N`.
    #[serde(serialize_with = "serialize_ratio")]
    pub estimate: Ratio<i64>,
    /// `min_{n ≤ N} d(1, gⁿ) / n`, an upper bound for the limit by subadditivity.
    #[serde(serialize_with = "serialize_ratio")]
    pub upper_bound: Ratio<i64>,
    /// `|m(g)|` for families with a validated length oracle.
    pub exact: Option<u64>,
    pub horizon: u64,
}

/// Translation number `lim d(1, gⁿ)/n` estimated up to horizon `n`.
pub fn translation_number<G: ConfinedGroup>(
    metric: &WordMetric<G>,
    g: &GroupPoint<G::Elem>,
    horizon: u64,
) -> Result<TranslationNumber> {
    if horizon == 0 {
        return Err(FocalError::InvalidArgument("horizon must be ≥ 1".into()));
    }
    let mut power = metric.identity();
    let mut upper: Option<Ratio<i64>> = None;
    let mut last = 0;
    for n in 1..=horizon {
        power = metric.mul(&power, g);
        last = metric.word_length(&power)?;
        let r = Ratio::new(last as i64, n as i64);
        if upper.is_none_or(|u| r < u) {
            upper = Some(r);
        }
    }
    Ok(TranslationNumber {
        estimate: Ratio::new(last as i64, horizon as i64),
        upper_bound: upper.unwrap(),
        exact: metric
            .group()
            .a_length_validated()
            .then_some(g.m.unsigned_abs()),
        horizon,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IsometryType {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

#[derive(Clone, Debug, Serialize)]
pub struct IsometryVerdict {
    #[serde(rename = "type")]
    pub kind: IsometryType,
    pub horizon: u64,
    /// Set only when a family-level certificate backs the verdict.
    pub exact: bool,
    pub witnesses: Vec<String>,
}

/// Elliptic, parabolic or hyperbolic, with the certificate that decided it.
pub fn isometry_type<G: ConfinedGroup>(
    metric: &WordMetric<G>,
    g: &GroupPoint<G::Elem>,
    horizon: u64,
) -> Result<IsometryVerdict> {
    let fam = metric.group();
    let verdict = |kind, exact, w: String| IsometryVerdict {
        kind,
        horizon,
        exact,
        witnesses: vec![w],
    };
    if g.m != 0 {
        // |gⁿ| ≥ |n·m| because projecting to Z is 1-Lipschitz.
        return Ok(verdict(
            IsometryType::Hyperbolic,
            true,
            format!("m(g) = {} ≠ 0, translation number ≥ {}", g.m, g.m.abs()),
        ));
    }
    if let Some(k) = fam.torsion_order(&g.h, horizon) {
        return Ok(verdict(
            IsometryType::Elliptic,
            true,
            format!("g has order {k}"),
        ));
    }
    match fam.powers_unbounded(&g.h) {
        Some(true) => {
            let tn = translation_number(metric, g, horizon)?;
            return Ok(verdict(
                IsometryType::Parabolic,
                true,
                format!(
                    "m(g) = 0 so τ = 0; |gⁿ| is unbounded by the family growth certificate (|g^{horizon}| = {})",
                    tn.estimate * Ratio::from_integer(horizon as i64)
                ),
            ));
        }
        Some(false) => {
            return Ok(verdict(
                IsometryType::Elliptic,
                true,
                "powers bounded by the family certificate".into(),
            ))
        }
        None => {}
    }
    // No certificate: compare orbit growth over the two halves of the horizon.
    let mut lens = Vec::with_capacity(horizon as usize);
    let mut p = metric.identity();
    for _ in 0..horizon {
        p = metric.mul(&p, g);
        lens.push(metric.word_length(&p)?);
    }
    let half = lens.len() / 2;
    let first = lens[..half].iter().copied().max().unwrap_or(0);
    let second = lens[half..].iter().copied().max().unwrap_or(0);
    let kind = if second > first {
        IsometryType::Parabolic
    } else {
        IsometryType::Elliptic
    };
    Ok(verdict(
        kind,
        false,
        format!("max |gⁿ| over the two halves of the horizon: {first}, {second}"),
    ))
}

/// Bounds for the adaptive horokernel horizon.
const HOROKERNEL_START: u64 = 16;
const HOROKERNEL_CAP: u64 = 1 << 14;

fn stable_window(horizon: u64) -> usize {
    (horizon / 4).max(4) as usize
}

/// `h(x, y) = d(y, α^{-N}) - d(x, α^{-N})`, accepted once `d(y, α^{-n}) - d(x, α^{-n})`
/// is constant over the last quarter of `n = 1..=N`.
pub fn horokernel<G: ConfinedGroup>(
    metric: &WordMetric<G>,
    x: &GroupPoint<G::Elem>,
    y: &GroupPoint<G::Elem>,
    horizon: u64,
) -> Result<i64> {
    let window = stable_window(horizon);
    let mut trace: Vec<i64> = Vec::with_capacity(window);
    for n in (horizon + 1).saturating_sub(window as u64).max(1)..=horizon {
        let target = metric.alpha_power(-(n as i64));
        trace.push(metric.distance(y, &target)? as i64 - metric.distance(x, &target)? as i64);
    }
    if trace.len() >= window && trace.windows(2).all(|w| w[0] == w[1]) {
        Ok(trace[0])
    } else {
        Err(FocalError::NotStabilized { horizon, trace })
    }
}

/// [`horokernel`] with the horizon doubled until it stabilizes. The start is
/// scaled to the sizes of `x` and `y` since nothing can settle before
/// `α^{-N}` is farther away than both.
pub fn horokernel_adaptive<G: ConfinedGroup>(
    metric: &WordMetric<G>,
    x: &GroupPoint<G::Elem>,
    y: &GroupPoint<G::Elem>,
) -> Result<(i64, u64)> {
    let scale = metric.word_length(x)?.max(metric.word_length(y)?);
    let mut horizon = (2 * scale + 8).max(HOROKERNEL_START);
    loop {
        match horokernel(metric, x, y, horizon) {
            Ok(v) => return Ok((v, horizon)),
            Err(e @ FocalError::NotStabilized { .. }) if horizon >= HOROKERNEL_CAP => {
                return Err(e)
            }
            Err(FocalError::NotStabilized { .. }) => horizon *= 2,
            Err(e) => return Err(e),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasicharacterEstimate {
    /// `β(g)`: exact `m(g)` for families with a validated length oracle,
    /// otherwise the numeric estimate.
    #[serde(serialize_with = "serialize_ratio")]
    pub value: Ratio<i64>,
    /// `h(1, g^N) / N`.
    #[serde(serialize_with = "serialize_ratio")]
    pub numeric: Ratio<i64>,
    /// Uncertainty of `value`; zero in exact mode.
    #[serde(serialize_with = "serialize_ratio")]
    pub defect_bound: Ratio<i64>,
    pub exact: bool,
    pub horizon: u64,
    /// `h(1, g)`.
    pub horokernel_1_g: i64,
    /// `|β(g) - h(1, g)|`.
    #[serde(serialize_with = "serialize_ratio")]
    pub offset: Ratio<i64>,
}

/// `β(g) = lim h(1, gⁿ)/n`, reported exactly as `m(g)` when the family's
/// length oracle is validated; the numeric estimate is always computed too.
pub fn busemann_quasicharacter<G: ConfinedGroup>(
    metric: &WordMetric<G>,
    g: &GroupPoint<G::Elem>,
    horizon: u64,
) -> Result<QuasicharacterEstimate> {
    if horizon == 0 {
        return Err(FocalError::InvalidArgument("horizon must be ≥ 1".into()));
    }
    let id = metric.identity();
    let gn = metric.pow(g, horizon as i64);
    let (h_n, _) = horokernel_adaptive(metric, &id, &gn)?;
    let (h_1, _) = horokernel_adaptive(metric, &id, g)?;
    let numeric = Ratio::new(h_n, horizon as i64);
    let exact = metric.group().a_length_validated();
    let value = if exact {
        Ratio::from_integer(g.m)
    } else {
        numeric
    };
    let defect_bound = if exact {
        Ratio::from_integer(0)
    } else {
        // A horokernel is a quasicharacter up to its additive defect, which
        // is at most `|h(1,g)| + 1` per step; this averages out as `1/N`.
        Ratio::new(h_1.abs() + 1, horizon as i64)
    };
    let diff = value - Ratio::from_integer(h_1);
    Ok(QuasicharacterEstimate {
        value,
        numeric,
        defect_bound,
        exact,
        horizon,
        horokernel_1_g: h_1,
        offset: if diff < Ratio::from_integer(0) {
            -diff
        } else {
            diff
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ActionType {
    Bounded,
    Horocyclic,
    Lineal,
    Focal,
    /// Never produced here: the ambient group fixes `ξ`, so no subgroup acts
    /// with general type. Kept so verdict records share one vocabulary.
    GeneralType,
}

#[derive(Clone, Debug, Serialize)]
pub struct ActionVerdict {
    #[serde(rename = "type")]
    pub kind: ActionType,
    pub horizon: u32,
    /// Set when the horizon is below 4 or the orbit enumeration was capped.
    pub low_confidence: bool,
    pub orbit_size: usize,
    /// Largest `|x|` over words of length `≤ horizon/2` and `≤ horizon`.
    pub radius_half: u64,
    pub radius_full: u64,
    /// Axis neighbourhood radius `2δ + max |s|` used for Lineal vs Focal.
    pub axis_radius: Option<HalfInt>,
    pub max_axis_distance: Option<u64>,
    pub witnesses: Vec<String>,
}

/// Orbit points reached by words of length `≤ horizon` in the generators
/// and their inverses.
pub const MAX_ORBIT_POINTS: usize = 1 << 18;

/// Classifies the action of `⟨generators⟩` using orbit data up to `horizon`.
///
/// * all generators in `H` (`m = 0`): Bounded when the orbit radius at word
///   length `horizon` equals the one at `horizon/2`, else Horocyclic;
/// * some `m ≠ 0`: Lineal when the orbit stays within `2δ + max |s|` of the
///   axis `{αⁿ}`, Focal when it leaves that neighbourhood.
pub fn action_type<G: ConfinedGroup>(
    metric: &WordMetric<G>,
    generators: &[GroupPoint<G::Elem>],
    horizon: u32,
    delta: HalfInt,
) -> Result<ActionVerdict> {
    if generators.is_empty() {
        return Err(FocalError::InvalidArgument("empty generator list".into()));
    }
    let fam = metric.group();
    let mut letters: Vec<GroupPoint<G::Elem>> = Vec::new();
    for s in generators {
        letters.push(s.clone());
        letters.push(metric.inv(s));
    }
    let key = |p: &GroupPoint<G::Elem>| (fam.canonical_bytes(&p.h), p.m);
    let id = metric.identity();
    let mut seen: HashSet<(Vec<u8>, i64)> = HashSet::from([key(&id)]);
    let mut orbit: Vec<(GroupPoint<G::Elem>, u32)> = vec![(id.clone(), 0)];
    let mut frontier = vec![id];
    let mut capped = false;
    for depth in 1..=horizon {
        let mut next = Vec::new();
        for p in &frontier {
            for s in &letters {
                let q = metric.mul(p, s);
                if seen.len() >= MAX_ORBIT_POINTS {
                    capped = true;
                    break;
                }
                if seen.insert(key(&q)) {
                    orbit.push((q.clone(), depth));
                    next.push(q);
                }
            }
        }
        frontier = next;
    }

    let half = horizon / 2;
    let mut radius_half = 0;
    let mut radius_full = 0;
    for (p, depth) in &orbit {
        let len = metric.word_length(p)?;
        radius_full = radius_full.max(len);
        if *depth <= half {
            radius_half = radius_half.max(len);
        }
    }

    let hyperbolic = generators.iter().find(|s| s.m != 0);
    let mut verdict = ActionVerdict {
        kind: ActionType::Bounded,
        horizon,
        low_confidence: horizon < 4 || capped,
        orbit_size: orbit.len(),
        radius_half,
        radius_full,
        axis_radius: None,
        max_axis_distance: None,
        witnesses: Vec::new(),
    };
    match hyperbolic {
        None => {
            if radius_full > radius_half {
                verdict.kind = ActionType::Horocyclic;
                verdict.witnesses.push(format!(
                    "orbit radius grows from {radius_half} to {radius_full} between word lengths {half} and {horizon}; no generator moves along Z"
                ));
            } else {
                verdict.witnesses.push(format!(
                    "orbit radius {radius_full} unchanged between word lengths {half} and {horizon}"
                ));
            }
        }
        Some(s) => {
            let mut max_gen = 0;
            for s in generators {
                max_gen = max_gen.max(metric.word_length(s)?);
            }
            let axis_radius = HalfInt::from_twice(2 * delta.twice() + 2 * max_gen as i64);
            let mut far: Option<(u64, &GroupPoint<G::Elem>)> = None;
            for (p, _) in &orbit {
                let d = axis_distance(metric, p)?;
                if far.is_none_or(|(best, _)| d > best) {
                    far = Some((d, p));
                }
            }
            let (dist, at) = far.expect("orbit contains the identity");
            verdict.axis_radius = Some(axis_radius);
            verdict.max_axis_distance = Some(dist);
            verdict.witnesses.push(format!(
                "hyperbolic generator {} with m = {}",
                metric.format_point(s),
                s.m
            ));
            if 2 * dist as i64 > axis_radius.twice() {
                verdict.kind = ActionType::Focal;
                verdict.witnesses.push(format!(
                    "orbit point {} at distance {dist} > {axis_radius} from the axis",
                    metric.format_point(at)
                ));
            } else {
                verdict.kind = ActionType::Lineal;
                verdict.witnesses.push(format!(
                    "orbit within distance {dist} ≤ {axis_radius} of the axis"
                ));
            }
        }
    }
    Ok(verdict)
}

/// `min_n d(x, αⁿ)`. The minimizer satisfies `|n - m(x)| ≤ |x|` since the
/// identity lies on the axis and `d(x, αⁿ) ≥ |n - m(x)|`.
pub fn axis_distance<G: ConfinedGroup>(
    metric: &WordMetric<G>,
    x: &GroupPoint<G::Elem>,
) -> Result<u64> {
    let r = metric.word_length(x)? as i64;
    let mut best = r as u64;
    for n in (x.m - r)..=(x.m + r) {
        best = best.min(metric.distance(x, &metric.alpha_power(n))?);
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct SchottkyReport {
    pub horizon: u32,
    pub words: usize,
    /// Distinct positive words evaluate to distinct elements.
    pub injective: bool,
    /// Constants between `|w|` and `d(1, w)` over all words of length `≤ horizon`.
    pub qi: QIReport,
    /// The same fit restricted to length `≤ ⌈horizon/2⌉`.
    pub qi_half: QIReport,
    /// Injective and the multiplicative constant is unchanged from half to full horizon.
    pub accepted: bool,
    pub witnesses: Vec<String>,
}

/// Evaluates all positive words in `{a, b}` of length `≤ horizon`.
pub fn schottky_semigroup_check<G: ConfinedGroup>(
    metric: &WordMetric<G>,
    a: &GroupPoint<G::Elem>,
    b: &GroupPoint<G::Elem>,
    horizon: u32,
) -> Result<SchottkyReport> {
    if horizon > 20 {
        return Err(FocalError::InvalidArgument(format!(
            "horizon {horizon} would enumerate 2^{horizon} words"
        )));
    }
    let fam = metric.group();
    let half = horizon.div_ceil(2);
    let mut samples: Vec<(u64, u64)> = Vec::new();
    let mut seen: BTreeSet<(Vec<u8>, i64)> = BTreeSet::new();
    let mut injective = true;
    let mut witnesses = Vec::new();
    let mut level: Vec<(GroupPoint<G::Elem>, String)> = vec![(metric.identity(), String::new())];
    seen.insert((fam.canonical_bytes(&metric.identity().h), 0));
    samples.push((0, 0));
    for len in 1..=horizon {
        let mut next = Vec::with_capacity(level.len() * 2);
        for (p, w) in &level {
            for (s, c) in [(a, 'a'), (b, 'b')] {
                let q = metric.mul(p, s);
                let word = format!("{w}{c}");
                if !seen.insert((fam.canonical_bytes(&q.h), q.m)) {
                    if injective {
                        witnesses.push(format!("word {word} repeats an earlier element"));
                    }
                    injective = false;
                }
                samples.push((len as u64, metric.word_length(&q)?));
                next.push((q, word));
            }
        }
        level = next;
    }
    let qi = qi_embedding_check(&samples)?;
    let half_samples: Vec<(u64, u64)> = samples
        .iter()
        .copied()
        .filter(|&(s, _)| s <= half as u64)
        .collect();
    let qi_half = qi_embedding_check(&half_samples)?;
    let injective = injective && qi.injective;
    let stable = qi.multiplicative_constant == qi_half.multiplicative_constant;
    if !stable {
        witnesses.push(format!(
            "multiplicative constant moved from {} to {} between lengths {half} and {horizon}",
            qi_half.multiplicative_constant, qi.multiplicative_constant
        ));
    }
    Ok(SchottkyReport {
        horizon,
        words: samples.len(),
        injective,
        accepted: injective && stable,
        qi,
        qi_half,
        witnesses,
    })
}
