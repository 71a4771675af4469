use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{GroupPoint, Letter, Word, WordMetric};
use crate::error::{FocalError, Result};
use crate::groups::{ConfinedGroup, Window};
use crate::metric::DistanceMatrix;

/// How [`ball_points`] picks points of `B(radius)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "sampler", rename_all = "snake_case")]
pub enum BallSampler {
    /// Every `(h, m)` with `h` in the window and `|(h, m)| ≤ radius`.
    ExhaustiveWindowed { window: Window },
    /// Endpoints of random words of length `≤ radius` with letters drawn from
    /// the windowed `A` and `α^±`.
    Sampled {
        count: usize,
        window: Window,
        seed: u64,
    },
}

/// A finite subset of a ball with its exact pairwise distances.
/// The identity is always the first point.
#[derive(Clone, Debug)]
pub struct Ball<E> {
    pub radius: u32,
    pub sampler: BallSampler,
    pub points: Vec<GroupPoint<E>>,
    pub matrix: DistanceMatrix,
}

impl<E> Ball<E> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn exhaustive(&self) -> bool {
        matches!(self.sampler, BallSampler::ExhaustiveWindowed { .. })
    }

    /// DOT graph whose edges are the distance-1 pairs.
    pub fn to_dot(&self) -> String {
        let m = &self.matrix;
        let mut s = String::from("graph ball {\n");
        for (i, id) in m.ids().iter().enumerate() {
            let _ = writeln!(s, "  n{i} [label=\"{}\"];", id.replace('"', "\\\""));
        }
        for i in 0..m.len() {
            for j in (i + 1)..m.len() {
                if m.get(i, j) == 1 {
                    let _ = writeln!(s, "  n{i} -- n{j};");
                }
            }
        }
        s.push_str("}\n");
        s
    }
}

pub fn ball_points<G: ConfinedGroup>(
    metric: &WordMetric<G>,
    radius: u32,
    sampler: &BallSampler,
) -> Result<Ball<G::Elem>> {
    let g = metric.group();
    let r = radius as i64;
    let mut pts: BTreeSet<(u64, GroupPoint<G::Elem>)> = BTreeSet::new();
    match *sampler {
        BallSampler::ExhaustiveWindowed { window } => {
            let hs = g.windowed_h(&window)?;
            for m in -r..=r {
                for h in &hs {
                    let p = GroupPoint::new(h.clone(), m);
                    let len = metric.word_length(&p)?;
                    if len <= radius as u64 {
                        pts.insert((len, p));
                    }
                }
            }
        }
        BallSampler::Sampled {
            count,
            window,
            seed,
        } => {
            let a = g.windowed_a(&window)?;
            if a.is_empty() {
                return Err(FocalError::InvalidArgument(format!(
                    "window {window} holds no element of A"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            pts.insert((0, metric.identity()));
            let attempts = count.saturating_mul(64).max(1024);
            for _ in 0..attempts {
                if pts.len() >= count {
                    break;
                }
                let len = rng.gen_range(0..=radius);
                let letters = (0..len)
                    .map(|_| match rng.gen_range(0..3) {
                        0 => Letter::AlphaPlus,
                        1 => Letter::AlphaMinus,
                        _ => Letter::Gen(a.choose(&mut rng).unwrap().clone()),
                    })
                    .collect();
                let p = metric.evaluate(&Word::new(letters))?;
                let d = metric.word_length(&p)?;
                pts.insert((d, p));
            }
        }
    }
    let points: Vec<GroupPoint<G::Elem>> = pts.into_iter().map(|(_, p)| p).collect();
    let ids: Vec<String> = points.iter().map(|p| metric.format_point(p)).collect();
    let rows = points
        .par_iter()
        .map(|x| {
            points
                .iter()
                .map(|y| metric.distance(x, y).map(|d| d as u32))
                .collect::<Result<Vec<u32>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ball {
        radius,
        sampler: *sampler,
        matrix: DistanceMatrix::new(ids, rows)?,
        points,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DistortionMode {
    /// Iterated set products `S_{m+1} = S_m · S_m` starting from the windowed
    /// `A`, capped at `max_elements` per level.
    Exhaustive { window: Window, max_elements: usize },
    /// `samples` products of `2^m` uniformly drawn windowed `A`-elements.
    Random {
        window: Window,
        samples: usize,
        seed: u64,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct DistortionLevel {
    pub m: u32,
    pub bound: u64,
    pub checked: usize,
    pub max_length: u64,
    pub incomplete: bool,
    pub violations: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistortionReport {
    pub family: String,
    pub n0: u32,
    pub config: DistortionMode,
    pub levels: Vec<DistortionLevel>,
    pub passed: bool,
}

const MAX_REPORTED_VIOLATIONS: usize = 8;

/// Checks `A^{2^m} ⊆ B(2·n0·m + 1)` for `m = 0..=m_max`.
pub fn distortion_check<G: ConfinedGroup>(
    metric: &WordMetric<G>,
    m_max: u32,
    mode: DistortionMode,
) -> Result<DistortionReport> {
    let g = metric.group();
    let n0 = g.n0();
    let mut levels = Vec::new();
    let mut level = |m: u32, elems: &mut dyn Iterator<Item = G::Elem>, incomplete: bool| {
        let bound = 2 * n0 as u64 * m as u64 + 1;
        let mut lv = DistortionLevel {
            m,
            bound,
            checked: 0,
            max_length: 0,
            incomplete,
            violations: Vec::new(),
        };
        for h in elems {
            let len = metric.word_length(&metric.h_point(h.clone()))?;
            lv.checked += 1;
            lv.max_length = lv.max_length.max(len);
            if len > bound && lv.violations.len() < MAX_REPORTED_VIOLATIONS {
                lv.violations
                    .push(format!("|{}| = {len} > {bound}", g.format_elem(&h)));
            }
        }
        levels.push(lv);
        Ok::<(), FocalError>(())
    };
    match mode {
        DistortionMode::Exhaustive {
            window,
            max_elements,
        } => {
            let a: BTreeSet<G::Elem> = g.windowed_a(&window)?.into_iter().collect();
            let mut cur = a;
            let mut incomplete = false;
            for m in 0..=m_max {
                if m > 0 {
                    let mut next = BTreeSet::new();
                    'outer: for x in &cur {
                        for y in &cur {
                            next.insert(g.multiply(x, y));
                            if next.len() >= max_elements {
                                incomplete = true;
                                break 'outer;
                            }
                        }
                    }
                    cur = next;
                }
                level(m, &mut cur.iter().cloned(), incomplete)?;
            }
        }
        DistortionMode::Random {
            window,
            samples,
            seed,
        } => {
            let a = g.windowed_a(&window)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for m in 0..=m_max {
                let prods: Vec<G::Elem> = (0..samples)
                    .map(|_| {
                        (0..1u64 << m).fold(g.identity(), |acc, _| {
                            g.multiply(&acc, a.choose(&mut rng).unwrap())
                        })
                    })
                    .collect();
                level(m, &mut prods.into_iter(), false)?;
            }
        }
    }
    let passed = levels.iter().all(|l| l.violations.is_empty());
    Ok(DistortionReport {
        family: g.name(),
        n0,
        config: mode,
        levels,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{Lamplighter, NAdic};

    #[test]
    fn radius_zero_ball_is_identity() {
        let w = WordMetric::new(Lamplighter::new(2).unwrap()).unwrap();
        let b = ball_points(
            &w,
            0,
            &BallSampler::ExhaustiveWindowed {
                window: Window::new(-2, 2, 0),
            },
        )
        .unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.points[0], w.identity());
    }

    #[test]
    fn exhaustive_ball_is_a_metric() {
        let w = WordMetric::new(Lamplighter::new(2).unwrap()).unwrap();
        let b = ball_points(
            &w,
            4,
            &BallSampler::ExhaustiveWindowed {
                window: Window::new(-1, 1, 0),
            },
        )
        .unwrap();
        assert_eq!(b.points[0], w.identity());
        b.matrix.validate().unwrap();
        assert!(b.to_dot().contains("--"));
    }

    #[test]
    fn sampled_ball_is_deterministic() {
        let w = WordMetric::new(NAdic::new(2).unwrap()).unwrap();
        let s = BallSampler::Sampled {
            count: 40,
            window: Window::new(-1, 1, 2),
            seed: 7,
        };
        let b1 = ball_points(&w, 6, &s).unwrap();
        let b2 = ball_points(&w, 6, &s).unwrap();
        assert_eq!(b1.points, b2.points);
        assert_eq!(b1.len(), 40);
        b1.matrix.validate().unwrap();
    }

    #[test]
    fn distortion_examples() {
        let w = WordMetric::new(Lamplighter::new(2).unwrap()).unwrap();
        let r = distortion_check(
            &w,
            3,
            DistortionMode::Exhaustive {
                window: Window::new(0, 3, 0),
                max_elements: 1 << 16,
            },
        )
        .unwrap();
        assert!(r.passed);
        assert!(r.levels.iter().all(|l| l.max_length <= 1 && !l.incomplete));

        let d = WordMetric::new(NAdic::new(2).unwrap()).unwrap();
        let r = distortion_check(
            &d,
            2,
            DistortionMode::Random {
                window: Window::new(-1, 1, 3),
                samples: 200,
                seed: 1,
            },
        )
        .unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.levels[2].bound, 5);
    }
}
