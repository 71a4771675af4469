use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use focal_core::boundary::{
    action_type, busemann_quasicharacter, isometry_type, schottky_semigroup_check,
    translation_number,
};
use focal_core::groups::{
    delta_bound, verify_confining, within_delta_bound, ConfinedGroup, Family, FamilySpec,
    Lamplighter, Window,
};
use focal_core::metric::{
    four_point_delta_with, DeltaMode, DeltaReport, DistanceMatrix, HalfInt, DEFAULT_SAMPLES,
    EXHAUSTIVE_CUTOFF,
};
use focal_core::trees::{
    millefeuille, regular_tree_ball, tree_act, tree_ball, tree_distance, BusemannGraph, TreeVertex,
};
use focal_core::word::{
    ball_points, distortion_check, BallSampler, DistortionMode, GroupPoint, WordMetric,
};

use crate::{Command, Format, Global, Outcome, Output};

const DEFAULT_RADIUS: u32 = 3;
const DEFAULT_HORIZON: u32 = 8;
const BETA_HORIZON: u32 = 16;
const SCHOTTKY_HORIZON: u32 = 10;
const CONFINING_DEPTH: u64 = 64;
const MAX_ENUMERATED: usize = 1 << 16;
/// Windowed `A` up to this size is multiplied out exhaustively in `verify`.
const EXHAUSTIVE_A_LIMIT: usize = 256;

/// Scope recorded in every report.
#[derive(Serialize)]
struct RunConfig<'a> {
    command: &'a str,
    family: String,
    window: Option<String>,
    radius: Option<u32>,
    horizon: Option<u32>,
    seed: u64,
    format: Format,
}

struct Ctx<'a> {
    global: &'a Global,
    spec: FamilySpec,
    family: Family,
    window: Window,
}

impl<'a> Ctx<'a> {
    fn new(global: &'a Global) -> Result<Self> {
        let spec = FamilySpec::parse(&global.family).context("bad --family")?;
        let family = spec.build()?;
        let window = match &global.window {
            Some(w) => Window::parse(w).context("bad --window")?,
            None => default_window(&spec),
        };
        Ok(Ctx {
            global,
            spec,
            family,
            window,
        })
    }

    fn metric(&self) -> Result<WordMetric<Family>> {
        if self.global.unchecked {
            Ok(WordMetric::unchecked(self.family.clone()))
        } else {
            WordMetric::new(self.family.clone())
                .context("pass --unchecked to use an unvalidated length oracle")
        }
    }

    fn config(&self, command: &'a str, radius: Option<u32>, horizon: Option<u32>) -> Value {
        serde_json::to_value(RunConfig {
            command,
            family: self.spec.to_string(),
            window: Some(self.window.to_string()),
            radius,
            horizon,
            seed: self.global.seed,
            format: self.global.format,
        })
        .expect("config serializes")
    }

    fn radius(&self, default: u32) -> u32 {
        self.global.radius.unwrap_or(default)
    }

    fn horizon(&self, default: u32) -> u32 {
        self.global.horizon.unwrap_or(default)
    }

    fn lamplighter(&self) -> Result<Lamplighter> {
        match self.spec {
            FamilySpec::Lamplighter { q } => Ok(Lamplighter::new(q)?),
            _ => bail!(
                "the Bass–Serre tree action needs a lamplighter family, got {}",
                self.spec
            ),
        }
    }
}

fn default_window(spec: &FamilySpec) -> Window {
    match spec {
        FamilySpec::Lamplighter { .. } | FamilySpec::IdentityAlpha { .. } => Window::new(-3, 3, 0),
        FamilySpec::Nadic { .. } => Window::new(-4, 4, 2),
        FamilySpec::Product { .. } => Window::new(-2, 2, 1),
    }
}

fn point<G: ConfinedGroup>(metric: &WordMetric<G>, word: &str) -> Result<GroupPoint<G::Elem>> {
    let w = metric
        .parse_word(word)
        .with_context(|| format!("bad word `{word}`"))?;
    Ok(metric.evaluate(&w)?)
}

fn json_ok(v: Value) -> Result<Outcome> {
    Ok(Outcome {
        output: Output::Json(v),
        failed: false,
    })
}

fn graph_output(
    global: &Global,
    g: &BusemannGraph,
    json: impl FnOnce() -> Result<Value>,
) -> Result<Outcome> {
    let output = match global.format {
        Format::Json => Output::Json(json()?),
        Format::Dot => Output::Text(g.to_dot()),
        Format::Csv => {
            let mut buf = Vec::new();
            g.write_adjacency_csv(&mut buf)?;
            Output::Text(String::from_utf8(buf)?)
        }
    };
    Ok(Outcome {
        output,
        failed: false,
    })
}

pub fn run(global: &Global, command: &Command) -> Result<Outcome> {
    let graph_like = matches!(
        command,
        Command::Ball { .. } | Command::Tree { .. } | Command::Millefeuille { .. }
    );
    let csv_ok = graph_like || matches!(command, Command::Delta { .. });
    match global.format {
        Format::Json => {}
        Format::Csv if csv_ok => {}
        Format::Dot if graph_like => {}
        f => bail!(
            "--format {} is not available for this command",
            format!("{f:?}").to_lowercase()
        ),
    }
    let ctx = Ctx::new(global)?;
    match command {
        Command::Verify { levels, samples } => verify(&ctx, *levels, *samples),
        Command::Ball { samples } => ball(&ctx, *samples),
        Command::Delta {
            samples,
            tree,
            input,
            exhaustive,
        } => delta(&ctx, *samples, *tree, input.as_deref(), *exhaustive),
        Command::Nf { word } => nf(&ctx, word),
        Command::Dist { x, y } => dist(&ctx, x, y),
        Command::Classify {
            words,
            subgroup,
            delta,
        } => classify(&ctx, words, *subgroup, *delta),
        Command::Beta { word } => beta(&ctx, word),
        Command::Tree { branching, act } => tree(&ctx, *branching, act.as_deref()),
        Command::Millefeuille { x, t } => mille(&ctx, x, t),
        Command::Schottky { a, b } => schottky(&ctx, a, b),
        Command::Report => report(&ctx),
    }
}

fn verify_value(ctx: &Ctx, levels: u32, samples: usize) -> Result<(Value, bool)> {
    let fam = &ctx.family;
    let confining = verify_confining(fam, &ctx.window, CONFINING_DEPTH, MAX_ENUMERATED)?;
    // Distortion is measured on A only, which every family's oracle handles.
    let metric = WordMetric::unchecked(fam.clone());
    let mode = if fam.windowed_a(&ctx.window)?.len() <= EXHAUSTIVE_A_LIMIT {
        DistortionMode::Exhaustive {
            window: ctx.window,
            max_elements: MAX_ENUMERATED,
        }
    } else {
        DistortionMode::Random {
            window: ctx.window,
            samples,
            seed: ctx.global.seed,
        }
    };
    let distortion = distortion_check(&metric, levels, mode)?;
    let passed = confining.passed && distortion.passed;
    for c in &confining.counterexamples {
        eprintln!("counterexample: {c}");
    }
    for l in &distortion.levels {
        for v in &l.violations {
            eprintln!("counterexample: m = {}: {v}", l.m);
        }
    }
    Ok((
        json!({
            "confining": confining,
            "distortion": distortion,
            "length_oracle_validated": fam.a_length_validated(),
            "passed": passed,
        }),
        passed,
    ))
}

fn verify(ctx: &Ctx, levels: u32, samples: usize) -> Result<Outcome> {
    let (mut v, passed) = verify_value(ctx, levels, samples)?;
    v["config"] = ctx.config("verify", None, None);
    Ok(Outcome {
        output: Output::Json(v),
        failed: !passed,
    })
}

fn sampler(ctx: &Ctx, samples: Option<usize>) -> BallSampler {
    match samples {
        Some(count) => BallSampler::Sampled {
            count,
            window: ctx.window,
            seed: ctx.global.seed,
        },
        None => BallSampler::ExhaustiveWindowed { window: ctx.window },
    }
}

fn ball(ctx: &Ctx, samples: Option<usize>) -> Result<Outcome> {
    let metric = ctx.metric()?;
    let radius = ctx.radius(DEFAULT_RADIUS);
    let b = ball_points(&metric, radius, &sampler(ctx, samples))?;
    let output = match ctx.global.format {
        Format::Csv => {
            let mut buf = Vec::new();
            b.matrix.write_csv(&mut buf)?;
            Output::Text(String::from_utf8(buf)?)
        }
        Format::Dot => Output::Text(b.to_dot()),
        Format::Json => {
            let points: Vec<Value> = b
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    json!({
                        "id": b.matrix.ids()[i],
                        "length": b.matrix.get(0, i),
                        "point": metric.point_to_json(p),
                    })
                })
                .collect();
            let rows: Vec<Vec<u32>> = (0..b.len())
                .map(|i| (0..b.len()).map(|j| b.matrix.get(i, j)).collect())
                .collect();
            Output::Json(json!({
                "config": ctx.config("ball", Some(radius), None),
                "sampler": b.sampler,
                "size": b.len(),
                "points": points,
                "distances": rows,
            }))
        }
    };
    Ok(Outcome {
        output,
        failed: false,
    })
}

fn delta_mode(ctx: &Ctx, exhaustive: bool) -> DeltaMode {
    if exhaustive {
        DeltaMode::Exhaustive
    } else {
        DeltaMode::Auto {
            cutoff: EXHAUSTIVE_CUTOFF,
            samples: DEFAULT_SAMPLES,
            seed: ctx.global.seed,
        }
    }
}

fn group_delta(
    ctx: &Ctx,
    radius: u32,
    samples: Option<usize>,
    exhaustive: bool,
) -> Result<DeltaReport> {
    let metric = ctx.metric()?;
    let b = ball_points(&metric, radius, &sampler(ctx, samples))?;
    Ok(four_point_delta_with(
        &b.matrix,
        delta_mode(ctx, exhaustive),
    ))
}

fn bound_value(report: &DeltaReport, n0: u32) -> (Value, bool) {
    let pass = within_delta_bound(report.delta, n0);
    (
        json!({
            "n0": n0,
            "expression": format!("16·log₂({})", n0 + 2),
            "value": delta_bound(n0),
            "within_bound": pass,
        }),
        pass,
    )
}

fn delta(
    ctx: &Ctx,
    samples: Option<usize>,
    tree: Option<u32>,
    input: Option<&std::path::Path>,
    exhaustive: bool,
) -> Result<Outcome> {
    let radius = ctx.radius(DEFAULT_RADIUS);
    let (source, matrix, n0) = if let Some(path) = input {
        let f =
            std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        ("csv", DistanceMatrix::read_csv(f)?, None)
    } else if let Some(k) = tree {
        (
            "regular_tree",
            regular_tree_ball(k, radius)?.distance_matrix()?,
            None,
        )
    } else {
        let metric = ctx.metric()?;
        let b = ball_points(&metric, radius, &sampler(ctx, samples))?;
        ("ball", b.matrix, Some(ctx.family.n0()))
    };
    let report = four_point_delta_with(&matrix, delta_mode(ctx, exhaustive));
    if ctx.global.format == Format::Csv {
        let text = format!(
            "source,points,exhaustive,samples,delta\n{source},{},{},{},{}\n",
            report.n_points, report.exhaustive, report.samples, report.delta
        );
        return Ok(Outcome {
            output: Output::Text(text),
            failed: n0.is_some_and(|n0| !within_delta_bound(report.delta, n0)),
        });
    }
    let mut v = json!({
        "config": ctx.config("delta", Some(radius), None),
        "source": source,
        "delta": report,
    });
    if let Some(k) = tree {
        v["branching"] = json!(k);
    }
    let mut failed = false;
    if let Some(n0) = n0 {
        let (b, pass) = bound_value(&report, n0);
        v["bound"] = b;
        failed = !pass;
    }
    Ok(Outcome {
        output: Output::Json(v),
        failed,
    })
}

fn nf(ctx: &Ctx, word: &str) -> Result<Outcome> {
    let metric = ctx.metric()?;
    let w = metric
        .parse_word(word)
        .with_context(|| format!("bad word `{word}`"))?;
    let x = metric.evaluate(&w)?;
    let rewritten = metric.rewrite_to_normal_form(&w)?;
    let geodesic = metric.geodesic_normal_form(&x)?;
    let nf_json = |nf: &focal_core::word::NormalForm<_>| {
        json!({
            "i": nf.i,
            "k": nf.k(),
            "j": nf.j,
            "length": nf.len(),
            "word": metric.format_word(&nf.to_word()),
        })
    };
    json_ok(json!({
        "config": ctx.config("nf", None, None),
        "word": metric.format_word(&w),
        "word_letters": w.len(),
        "point": metric.format_point(&x),
        "point_json": metric.point_to_json(&x),
        "rewritten": nf_json(&rewritten),
        "geodesic": nf_json(&geodesic),
        "word_length": metric.word_length(&x)?,
        "k0": metric.k0(),
    }))
}

fn dist(ctx: &Ctx, x: &str, y: &str) -> Result<Outcome> {
    let metric = ctx.metric()?;
    let (px, py) = (point(&metric, x)?, point(&metric, y)?);
    let between = metric.mul(&metric.inv(&px), &py);
    json_ok(json!({
        "config": ctx.config("dist", None, None),
        "x": metric.format_point(&px),
        "y": metric.format_point(&py),
        "distance": metric.distance(&px, &py)?,
        "geodesic_x_to_y": metric.format_word(&metric.geodesic_witness(&between)?),
    }))
}

fn parse_delta(d: f64) -> Result<HalfInt> {
    let twice = 2.0 * d;
    if d < 0.0 || twice.fract() != 0.0 {
        bail!("--delta must be a non-negative multiple of 1/2, got {d}");
    }
    Ok(HalfInt::from_twice(twice as i64))
}

fn classify(ctx: &Ctx, words: &[String], subgroup: bool, delta: Option<f64>) -> Result<Outcome> {
    let metric = ctx.metric()?;
    let points = words
        .iter()
        .map(|w| point(&metric, w))
        .collect::<Result<Vec<_>>>()?;
    let horizon = ctx.horizon(DEFAULT_HORIZON);
    if points.len() == 1 && !subgroup {
        let g = &points[0];
        let verdict = isometry_type(&metric, g, horizon as u64)?;
        if ctx.global.exact_only && !verdict.exact {
            bail!("isometry type of {} is not certified exactly", words[0]);
        }
        let tau = translation_number(&metric, g, horizon as u64)?;
        return json_ok(json!({
            "config": ctx.config("classify", None, Some(horizon)),
            "element": metric.format_point(g),
            "isometry": verdict,
            "translation_number": tau,
        }));
    }
    if ctx.global.exact_only {
        bail!("action types are consistent up to the horizon only; drop --exact-only");
    }
    let (d, d_source) = match delta {
        Some(d) => (parse_delta(d)?, json!("given")),
        None => {
            let r = group_delta(ctx, 4, None, false)?;
            (r.delta, json!({"ball_radius": 4, "report": r}))
        }
    };
    let verdict = action_type(&metric, &points, horizon, d)?;
    json_ok(json!({
        "config": ctx.config("classify", None, Some(horizon)),
        "generators": points.iter().map(|p| metric.format_point(p)).collect::<Vec<_>>(),
        "delta": d,
        "delta_source": d_source,
        "action": verdict,
    }))
}

fn beta(ctx: &Ctx, word: &str) -> Result<Outcome> {
    let metric = ctx.metric()?;
    let g = point(&metric, word)?;
    let horizon = ctx.horizon(BETA_HORIZON);
    let est = busemann_quasicharacter(&metric, &g, horizon as u64)?;
    if ctx.global.exact_only && !est.exact {
        bail!("β({word}) has no exact certificate for {}", ctx.spec);
    }
    json_ok(json!({
        "config": ctx.config("beta", None, Some(horizon)),
        "element": metric.format_point(&g),
        "beta": est,
    }))
}

fn tree(ctx: &Ctx, branching: Option<u32>, act: Option<&str>) -> Result<Outcome> {
    let radius = ctx.radius(DEFAULT_RADIUS);
    let root = TreeVertex::root();
    let (graph, source) = match branching {
        Some(k) => (
            regular_tree_ball(k, radius)?,
            json!({"regular_tree": {"branching": k}}),
        ),
        None => {
            let g = ctx.lamplighter()?;
            (
                tree_ball(&g, &root, radius),
                json!({"bass_serre": {"q": g.q()}}),
            )
        }
    };
    let action = match act {
        Some(word) => {
            let g = ctx.lamplighter()?;
            let metric = WordMetric::new(g)?;
            let x = point(&metric, word)?;
            let v = tree_act(&g, &x, &root);
            Some(json!({
                "element": metric.format_point(&x),
                "image": v.to_string(),
                "level": v.level(),
                "tree_distance": tree_distance(&root, &v),
                "word_length": metric.word_length(&x)?,
            }))
        }
        None => None,
    };
    graph_output(ctx.global, &graph, || {
        Ok(json!({
            "config": ctx.config("tree", Some(radius), None),
            "source": source,
            "root": root.to_string(),
            "stats": graph.stats(),
            "action": action,
        }))
    })
}

fn graph_spec(s: &str, radius: u32) -> Result<BusemannGraph> {
    let t = s.trim();
    let k = if t.eq_ignore_ascii_case("line") {
        1
    } else {
        let d: u32 = t
            .strip_prefix(['T', 't'])
            .and_then(|d| d.parse().ok())
            .ok_or_else(|| anyhow!("graph `{s}` is neither `line` nor `T<degree>`"))?;
        if d < 2 {
            bail!("tree degree must be ≥ 2 in `{s}`");
        }
        d - 1
    };
    Ok(regular_tree_ball(k, radius)?)
}

fn mille(ctx: &Ctx, x: &str, t: &str) -> Result<Outcome> {
    let radius = ctx.radius(DEFAULT_RADIUS);
    let gx = graph_spec(x, radius)?;
    let gt = graph_spec(t, radius)?;
    let m = millefeuille(&gx, &gt)?;
    graph_output(ctx.global, &m, || {
        let stats = m.stats();
        let delta = if stats.connected {
            Some(four_point_delta_with(
                &m.distance_matrix()?,
                delta_mode(ctx, false),
            ))
        } else {
            None
        };
        Ok(json!({
            "config": ctx.config("millefeuille", Some(radius), None),
            "x": x,
            "t": t,
            "stats": stats,
            "delta": delta,
        }))
    })
}

fn schottky(ctx: &Ctx, a: &str, b: &str) -> Result<Outcome> {
    let metric = ctx.metric()?;
    let (pa, pb) = (point(&metric, a)?, point(&metric, b)?);
    let horizon = ctx.horizon(SCHOTTKY_HORIZON);
    let report = schottky_semigroup_check(&metric, &pa, &pb, horizon)?;
    json_ok(json!({
        "config": ctx.config("schottky", None, Some(horizon)),
        "a": metric.format_point(&pa),
        "b": metric.format_point(&pb),
        "report": report,
    }))
}

fn report(ctx: &Ctx) -> Result<Outcome> {
    let (verification, verified) = verify_value(ctx, 3, 1000)?;
    let metric = ctx.metric()?;
    let radius = ctx.radius(DEFAULT_RADIUS);
    let horizon = ctx.horizon(DEFAULT_HORIZON);
    let d = group_delta(ctx, radius, None, false)?;
    let (bound, within) = bound_value(&d, ctx.family.n0());
    let alpha = metric.alpha_power(1);
    let v = json!({
        "config": ctx.config("report", Some(radius), Some(horizon)),
        "verification": verification,
        "delta": d,
        "bound": bound,
        "compaction_index": ctx.family.compaction_index().ok(),
        "k0": metric.k0(),
        "beta_alpha": busemann_quasicharacter(&metric, &alpha, BETA_HORIZON as u64)?,
        "isometry_alpha": isometry_type(&metric, &alpha, horizon as u64)?,
        "action_alpha": action_type(&metric, std::slice::from_ref(&alpha), horizon, d.delta)?,
    });
    Ok(Outcome {
        output: Output::Json(v),
        failed: !(verified && within),
    })
}
