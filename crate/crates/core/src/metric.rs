//! Exact metric primitives over finite distance data.
//!
//! Distances are non-negative integers (word-metric units). Gromov products
//! are half-integers, so everything here is carried in doubled units through
//! [`HalfInt`] and never touches floating point.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};

use num_rational::Ratio;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{FocalError, Result};

/// A half-integer stored as twice its value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(i64);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    pub fn from_twice(twice: i64) -> Self {
        HalfInt(twice)
    }

    pub fn from_int(v: i64) -> Self {
        HalfInt(2 * v)
    }

    pub fn twice(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn to_ratio(self) -> Ratio<i64> {
        Ratio::new(self.0, 2)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            let sign = if self.0 < 0 { "-" } else { "" };
            write!(f, "{sign}{}.5", self.0.abs() / 2)
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        // Half-integers are exactly representable as f64.
        s.serialize_f64(self.to_f64())
    }
}

/// Serializes a rational as `"p/q"` (or `"p"` when integral).
pub(crate) fn serialize_ratio<S: Serializer>(
    r: &Ratio<i64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_ratio(r))
}

pub fn format_ratio(r: &Ratio<i64>) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Symmetric integer distances over an ordered list of point identifiers.
#[derive(Clone, Debug)]
pub struct DistanceMatrix {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    d: Vec<u32>,
}

impl DistanceMatrix {
    /// Builds a matrix from row-major entries. Checks shape, zero diagonal,
    /// symmetry and id uniqueness; the triangle inequality is checked
    /// separately by [`DistanceMatrix::validate`] since it is cubic.
    pub fn new(ids: Vec<String>, rows: Vec<Vec<u32>>) -> Result<Self> {
        let n = ids.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(FocalError::MalformedMatrix(format!(
                "expected a {n}x{n} matrix"
            )));
        }
        let d: Vec<u32> = rows.into_iter().flatten().collect();
        Self::from_flat(ids, d)
    }

    pub fn from_fn(ids: Vec<String>, mut f: impl FnMut(usize, usize) -> u32) -> Result<Self> {
        let n = ids.len();
        let mut d = vec![0u32; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Self::from_flat(ids, d)
    }

    fn from_flat(ids: Vec<String>, d: Vec<u32>) -> Result<Self> {
        let n = ids.len();
        let mut index = HashMap::with_capacity(n);
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(FocalError::MalformedMatrix(format!(
                    "duplicate point id `{id}`"
                )));
            }
        }
        for i in 0..n {
            if d[i * n + i] != 0 {
                return Err(FocalError::MalformedMatrix(format!(
                    "d({0},{0}) = {1} ≠ 0",
                    ids[i],
                    d[i * n + i]
                )));
            }
            for j in (i + 1)..n {
                if d[i * n + j] != d[j * n + i] {
                    return Err(FocalError::MalformedMatrix(format!(
                        "asymmetric entry at ({}, {})",
                        ids[i], ids[j]
                    )));
                }
            }
        }
        Ok(DistanceMatrix { ids, index, d })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| FocalError::UnknownPoint(id.to_string()))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.d[i * self.ids.len() + j]
    }

    pub fn dist(&self, x: &str, y: &str) -> Result<u32> {
        Ok(self.get(self.index_of(x)?, self.index_of(y)?))
    }

    /// First violated triangle `(x, y, z)` with `d(x,z) > d(x,y) + d(y,z)`.
    pub fn triangle_violation(&self) -> Option<(usize, usize, usize)> {
        let n = self.len();
        for x in 0..n {
            for y in 0..n {
                let dxy = self.get(x, y);
                for z in 0..n {
                    if self.get(x, z) > dxy + self.get(y, z) {
                        return Some((x, y, z));
                    }
                }
            }
        }
        None
    }

    /// Full metric validation including the triangle inequality.
    pub fn validate(&self) -> Result<()> {
        match self.triangle_violation() {
            None => Ok(()),
            Some((x, y, z)) => Err(FocalError::MalformedMatrix(format!(
                "triangle inequality fails: d({a},{c}) = {} > d({a},{b}) + d({b},{c}) = {}",
                self.get(x, z),
                self.get(x, y) + self.get(y, z),
                a = self.ids[x],
                b = self.ids[y],
                c = self.ids[z],
            ))),
        }
    }

    /// Restriction to the given indices, in the given order.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let ids = keep.iter().map(|&i| self.ids[i].clone()).collect();
        Self::from_fn(ids, |a, b| self.get(keep[a], keep[b]))
    }

    /// CSV with a header row of point ids followed by one row of integers per point.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.ids)?;
        let n = self.len();
        for i in 0..n {
            out.write_record((0..n).map(|j| self.get(i, j).to_string()))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let ids: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::with_capacity(ids.len());
        for rec in rdr.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<u32>()
                        .map_err(|e| FocalError::MalformedMatrix(format!("entry `{s}`: {e}")))
                })
                .collect::<Result<Vec<u32>>>()?;
            rows.push(row);
        }
        Self::new(ids, rows)
    }
}

/// `(x|y)_base = (d(base,x) + d(base,y) - d(x,y)) / 2`.
pub fn gromov_product(x: &str, y: &str, base: &str, d: &DistanceMatrix) -> Result<HalfInt> {
    let (x, y, b) = (d.index_of(x)?, d.index_of(y)?, d.index_of(base)?);
    Ok(gromov_product_idx(x, y, b, d))
}

#[inline]
pub fn gromov_product_idx(x: usize, y: usize, base: usize, d: &DistanceMatrix) -> HalfInt {
    HalfInt::from_twice(d.get(base, x) as i64 + d.get(base, y) as i64 - d.get(x, y) as i64)
}

/// How [`four_point_delta_with`] covers the quadruples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeltaMode {
    /// Exhaustive up to `cutoff` points, otherwise `samples` uniform quadruples.
    Auto {
        cutoff: usize,
        samples: u64,
        seed: u64,
    },
    Exhaustive,
    Sampled {
        samples: u64,
        seed: u64,
    },
}

pub const EXHAUSTIVE_CUTOFF: usize = 64;
pub const DEFAULT_SAMPLES: u64 = 2_000_000;
pub const DEFAULT_SEED: u64 = 0x5eed_f0ca1;

impl Default for DeltaMode {
    fn default() -> Self {
        DeltaMode::Auto {
            cutoff: EXHAUSTIVE_CUTOFF,
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeltaReport {
    pub delta: HalfInt,
    pub n_points: usize,
    pub exhaustive: bool,
    /// Number of 4-point subsets (exhaustive) or sampled quadruples examined.
    pub samples: u64,
    pub seed: Option<u64>,
    /// A quadruple realizing `delta`, when `delta > 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<[usize; 4]>,
}

/// Least δ ≥ 0 with `(y|z)_x ≥ min((y|w)_x, (w|z)_x) - δ` for all quadruples.
pub fn four_point_delta(d: &DistanceMatrix) -> DeltaReport {
    four_point_delta_with(d, DeltaMode::default())
}

pub fn four_point_delta_with(d: &DistanceMatrix, mode: DeltaMode) -> DeltaReport {
    let n = d.len();
    match mode {
        DeltaMode::Exhaustive => exhaustive_delta(d),
        DeltaMode::Auto { cutoff, .. } if n <= cutoff => exhaustive_delta(d),
        DeltaMode::Auto { samples, seed, .. } | DeltaMode::Sampled { samples, seed } => {
            sampled_delta(d, samples, seed)
        }
    }
}

/// Twice the four-point defect of one quadruple: with pair sums
/// `S1 ≥ S2 ≥ S3`, the Gromov-product inequality over all basepoints and
/// orderings of `{a,b,c,e}` holds exactly when `S1 - S2 ≤ 2δ`.
#[inline]
fn quad_defect(d: &DistanceMatrix, a: usize, b: usize, c: usize, e: usize) -> i64 {
    let s1 = d.get(a, b) as i64 + d.get(c, e) as i64;
    let s2 = d.get(a, c) as i64 + d.get(b, e) as i64;
    let s3 = d.get(a, e) as i64 + d.get(b, c) as i64;
    let hi = s1.max(s2).max(s3);
    let lo = s1.min(s2).min(s3);
    let mid = s1 + s2 + s3 - hi - lo;
    hi - mid
}

fn exhaustive_delta(d: &DistanceMatrix) -> DeltaReport {
    let n = d.len();
    let (best, witness) = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut best = (0i64, None);
            for b in (a + 1)..n {
                for c in (b + 1)..n {
                    for e in (c + 1)..n {
                        let v = quad_defect(d, a, b, c, e);
                        if v > best.0 {
                            best = (v, Some([a, b, c, e]));
                        }
                    }
                }
            }
            best
        })
        .reduce(|| (0, None), |x, y| if y.0 > x.0 { y } else { x });
    let subsets = if n >= 4 {
        (n as u64) * (n as u64 - 1) * (n as u64 - 2) * (n as u64 - 3) / 24
    } else {
        0
    };
    DeltaReport {
        delta: HalfInt::from_twice(best),
        n_points: n,
        exhaustive: true,
        samples: subsets,
        seed: None,
        witness,
    }
}

fn sampled_delta(d: &DistanceMatrix, samples: u64, seed: u64) -> DeltaReport {
    let n = d.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (0i64, None);
    if n > 0 {
        for _ in 0..samples {
            let q = [
                rng.gen_range(0..n),
                rng.gen_range(0..n),
                rng.gen_range(0..n),
                rng.gen_range(0..n),
            ];
            let v = quad_defect(d, q[0], q[1], q[2], q[3]);
            if v > best.0 {
                best = (v, Some(q));
            }
        }
    }
    DeltaReport {
        delta: HalfInt::from_twice(best.0),
        n_points: n,
        exhaustive: false,
        samples,
        seed: Some(seed),
        witness: best.1,
    }
}

/// Tightest constants `(λ, c)` with `s/λ - c ≤ t ≤ λ·s + c` on the sampled pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QIReport {
    #[serde(serialize_with = "serialize_ratio")]
    pub additive_constant: Ratio<i64>,
    #[serde(serialize_with = "serialize_ratio")]
    pub multiplicative_constant: Ratio<i64>,
    /// Largest domain distance among the samples.
    pub horizon: u64,
    pub injective: bool,
    pub samples: usize,
}

/// Fits quasi-isometry constants to `(domain distance, image distance)` pairs.
///
/// Among all admissible `λ ≥ 1` the one minimizing `λ + c(λ)` is reported,
/// ties broken toward smaller `λ`, where `c(λ)` is the least additive constant
/// for that `λ`. Candidates are the breakpoints of the piecewise constraint
/// functions: slopes of the upper hull of the sample cloud, reciprocal slopes
/// of its lower hull, and the zero crossings `t/s`, `s/t`.
pub fn qi_embedding_check(samples: &[(u64, u64)]) -> Result<QIReport> {
    if samples.is_empty() {
        return Err(FocalError::InvalidArgument("empty sample list".into()));
    }
    let injective = !samples.iter().any(|&(s, t)| s > 0 && t == 0);
    let pts: Vec<(i64, i64)> = samples
        .iter()
        .map(|&(s, t)| (s as i64, t as i64))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let one = Ratio::from_integer(1);
    let mut candidates: BTreeSet<Ratio<i64>> = BTreeSet::new();
    candidates.insert(one);
    for &(s, t) in &pts {
        if s > 0 {
            candidates.insert(Ratio::new(t, s));
        }
        if t > 0 {
            candidates.insert(Ratio::new(s, t));
        }
    }
    for w in upper_hull(&pts).windows(2) {
        let (ds, dt) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
        if ds != 0 {
            candidates.insert(Ratio::new(dt, ds));
        }
    }
    for w in lower_hull(&pts).windows(2) {
        let (ds, dt) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
        if dt > 0 {
            candidates.insert(Ratio::new(ds, dt));
        }
    }

    let additive = |lambda: Ratio<i64>| -> Ratio<i64> {
        let mut c = Ratio::from_integer(0);
        for &(s, t) in &pts {
            let (s, t) = (Ratio::from_integer(s), Ratio::from_integer(t));
            let up = t - lambda * s;
            let down = s / lambda - t;
            if up > c {
                c = up;
            }
            if down > c {
                c = down;
            }
        }
        c
    };

    let mut best: Option<(Ratio<i64>, Ratio<i64>)> = None;
    for lambda in candidates.into_iter().filter(|l| *l >= one) {
        let c = additive(lambda);
        let better = match best {
            None => true,
            Some((bl, bc)) => lambda + c < bl + bc,
        };
        if better {
            best = Some((lambda, c));
        }
    }
    let (lambda, c) = best.expect("λ = 1 is always a candidate");
    Ok(QIReport {
        additive_constant: c,
        multiplicative_constant: lambda,
        horizon: samples.iter().map(|p| p.0).max().unwrap_or(0),
        injective,
        samples: samples.len(),
    })
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

// `pts` is sorted lexicographically.
fn upper_hull(pts: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for &p in pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) >= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull
}

fn lower_hull(pts: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for &p in pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    fn path(n: usize) -> DistanceMatrix {
        DistanceMatrix::from_fn(ids(n), |i, j| i.abs_diff(j) as u32).unwrap()
    }

    fn cycle(n: usize) -> DistanceMatrix {
        DistanceMatrix::from_fn(ids(n), |i, j| {
            let k = i.abs_diff(j);
            k.min(n - k) as u32
        })
        .unwrap()
    }

    #[test]
    fn gromov_product_examples() {
        // d(x,y)=3, d(x,z)=5, d(y,z)=4
        let d = DistanceMatrix::new(
            vec!["x".into(), "y".into(), "z".into()],
            vec![vec![0, 3, 5], vec![3, 0, 4], vec![5, 4, 0]],
        )
        .unwrap();
        assert_eq!(
            gromov_product("z", "y", "x", &d).unwrap(),
            HalfInt::from_int(2)
        );
        assert_eq!(gromov_product("x", "z", "x", &d).unwrap(), HalfInt::ZERO);

        let eq = DistanceMatrix::from_fn(ids(3), |_, _| 2).unwrap();
        assert_eq!(
            gromov_product("1", "2", "0", &eq).unwrap(),
            HalfInt::from_int(1)
        );
    }

    #[test]
    fn unknown_point_is_rejected() {
        let d = path(3);
        assert!(matches!(
            gromov_product("0", "9", "1", &d),
            Err(FocalError::UnknownPoint(_))
        ));
    }

    #[test]
    fn malformed_matrices() {
        assert!(DistanceMatrix::new(ids(2), vec![vec![0, 1], vec![2, 0]]).is_err());
        assert!(DistanceMatrix::new(ids(2), vec![vec![1, 1], vec![1, 0]]).is_err());
        assert!(DistanceMatrix::new(ids(2), vec![vec![0, 1]]).is_err());
        let bad =
            DistanceMatrix::new(ids(3), vec![vec![0, 1, 5], vec![1, 0, 1], vec![5, 1, 0]]).unwrap();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn delta_of_paths_and_cycles() {
        assert_eq!(four_point_delta(&path(3)).delta, HalfInt::ZERO);
        assert_eq!(four_point_delta(&path(10)).delta, HalfInt::ZERO);
        let c4 = four_point_delta(&cycle(4));
        assert_eq!(c4.delta, HalfInt::from_int(1));
        assert!(c4.exhaustive);
        assert_eq!(c4.samples, 1);
        assert_eq!(four_point_delta(&path(1)).delta, HalfInt::ZERO);
    }

    #[test]
    fn sampled_mode_is_reported() {
        let d = cycle(80);
        let r = four_point_delta(&d);
        assert!(!r.exhaustive);
        assert_eq!(r.samples, DEFAULT_SAMPLES);
        assert_eq!(r.seed, Some(DEFAULT_SEED));
        let again = four_point_delta(&d);
        assert_eq!(r, again);
        let full = four_point_delta_with(&d, DeltaMode::Exhaustive);
        assert!(r.delta <= full.delta);
    }

    #[test]
    fn csv_round_trip() {
        let d = cycle(5);
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = DistanceMatrix::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.ids(), d.ids());
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(back.get(i, j), d.get(i, j));
            }
        }
    }

    #[test]
    fn qi_identity_and_affine() {
        let id: Vec<_> = (0..20).map(|n| (n, n)).collect();
        let r = qi_embedding_check(&id).unwrap();
        assert_eq!(r.multiplicative_constant, Ratio::from_integer(1));
        assert_eq!(r.additive_constant, Ratio::from_integer(0));
        assert!(r.injective);

        let aff: Vec<_> = (1..20).map(|n| (n, 2 * n + 1)).collect();
        let r = qi_embedding_check(&aff).unwrap();
        assert_eq!(r.multiplicative_constant, Ratio::from_integer(2));
        assert_eq!(r.additive_constant, Ratio::from_integer(1));
    }

    #[test]
    fn qi_detects_collapse() {
        let r = qi_embedding_check(&[(0, 0), (3, 0), (1, 1)]).unwrap();
        assert!(!r.injective);
        assert!(qi_embedding_check(&[]).is_err());
    }

    #[test]
    fn half_int_display() {
        assert_eq!(HalfInt::from_twice(5).to_string(), "2.5");
        assert_eq!(HalfInt::from_twice(-3).to_string(), "-1.5");
        assert_eq!(HalfInt::from_int(4).to_string(), "4");
    }
}
