//! Seeded experiments. Sample `k` draws from its own ChaCha8 stream of the
//! experiment seed, so it can be rerun alone with `--samples 1 --start k`.

use std::collections::BTreeMap;
use std::time::Instant;

use clap::ValueEnum;
use foldpath_core::agraph::AGraph;
use foldpath_core::complexes::{
    fb_adjacent, fb_chain_report, folding_path_bases, h_map, q_map, random_adjacent_pair,
    ChainReport, FBVertex, FFVertex, Witness, WitnessKind,
};
use foldpath_core::folding::{
    ensure_foldable, fold_completely, fold_graph, has_base_loop, is_basis, make_foldable,
    random_basis_with, random_basis_with_letter,
};
use foldpath_core::hyperbolicity::{
    apsp, check_thin_triangles, cone_off, delta_four_point, delta_slim, fb_ball_graph,
    geodesic_family, median_centers, FiniteGraph, ThinConfig, ThinReport, VertexId,
};
use foldpath_core::labeled_isomorphic;
use foldpath_core::words::{FreeWord, Letter, Rank};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{
    parse_json, read_input, to_value, CliError, CliResult, ExperimentArgs, Global, OutDir, Outcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Random bases fold to the rose by type I folds only; every base-point
    /// basis along the way is a basis; two fold orders agree.
    FoldTermination,
    /// Pairs sharing the first letter keep its loop at the base and stay
    /// within one step of the target.
    LoopPersistence,
    /// Lipschitz, retraction and density constants of `h` and `q`.
    FbConstants,
    /// δ estimators on trees plus fixed cycle and grid checks.
    DeltaHarness,
    /// Thin triangles constants on random trees, B1 cycling through 1, 2, 3.
    ThinTriangles,
    /// Measured δ of sampled subgraphs of the free bases graph.
    FbBall,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::FoldTermination => "fold-termination",
            Experiment::LoopPersistence => "loop-persistence",
            Experiment::FbConstants => "fb-constants",
            Experiment::DeltaHarness => "delta-harness",
            Experiment::ThinTriangles => "thin-triangles",
            Experiment::FbBall => "fb-ball",
        }
    }

    pub fn default_samples(self) -> usize {
        match self {
            Experiment::FoldTermination => 500,
            Experiment::LoopPersistence | Experiment::FbConstants => 200,
            Experiment::DeltaHarness => 50,
            Experiment::ThinTriangles => 60,
            Experiment::FbBall => 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub rank: usize,
    pub seed: u64,
    pub samples: usize,
    pub start: u64,
    pub moves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub sample: u64,
    pub reason: String,
    pub reproducer: String,
}

/// A once-per-run check that does not depend on the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub experiment: Experiment,
    pub config: RunConfig,
    pub passed: usize,
    pub failed: usize,
    pub measured: BTreeMap<String, Stat>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    pub failures: Vec<Failure>,
    /// File name of the witness list, next to the report.
    pub witnesses: String,
    /// Whether the stored witnesses were re-read and re-checked.
    pub reverified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0 && self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample: u64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub witness: Value,
}

struct Sample {
    pass: bool,
    reason: Option<String>,
    metrics: Vec<(&'static str, f64)>,
    witness: Value,
}

impl Sample {
    fn judge(failures: Vec<String>, metrics: Vec<(&'static str, f64)>, witness: Value) -> Sample {
        Sample {
            pass: failures.is_empty(),
            reason: (!failures.is_empty()).then(|| failures.join("; ")),
            metrics,
            witness,
        }
    }

    fn error(reason: String) -> Sample {
        Sample {
            pass: false,
            reason: Some(reason),
            metrics: Vec::new(),
            witness: Value::Null,
        }
    }
}

fn sample_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

fn require(failures: &mut Vec<String>, ok: bool, what: &str) {
    if !ok {
        failures.push(what.to_string());
    }
}

fn reproducer(e: Experiment, c: &RunConfig, k: u64) -> String {
    format!(
        "foldpath --rank {} --seed {} --no-timings experiment {} --samples 1 --start {k} --moves {}",
        c.rank,
        c.seed,
        e.name(),
        c.moves
    )
}

pub fn run_experiment(g: &Global, args: &ExperimentArgs) -> CliResult<Outcome> {
    let rank = g.rank()?;
    let config = RunConfig {
        rank: rank.get(),
        seed: g.seed,
        samples: args.samples.unwrap_or(args.name.default_samples()),
        start: args.start,
        moves: args.moves,
    };
    let report = run(
        args.name,
        &config,
        &OutDir::new(&g.out),
        g.verify,
        !g.no_timings,
    )?;
    let summary = format!(
        "{}: {} passed, {} failed{}",
        args.name.name(),
        report.passed,
        report.failed,
        if report.checks.is_empty() {
            String::new()
        } else {
            format!(
                ", checks {}/{}",
                report.checks.iter().filter(|c| c.pass).count(),
                report.checks.len()
            )
        }
    );
    if !report.all_passed() {
        let first = report
            .failures
            .first()
            .map(|f| {
                format!(
                    "; first failure: sample {} ({}), rerun with `{}`",
                    f.sample, f.reason, f.reproducer
                )
            })
            .unwrap_or_default();
        return Err(CliError::Domain(format!("{summary}{first}")));
    }
    Ok(Outcome::new(summary, &report))
}

/// Runs `experiment`, writes `<name>.json` and `<name>-witnesses.json` to
/// `out` and returns the report.
pub fn run(
    experiment: Experiment,
    config: &RunConfig,
    out: &OutDir,
    verify: bool,
    timings: bool,
) -> CliResult<RunReport> {
    let rank = Rank::new(config.rank)?;
    let clock = Instant::now();
    let range = config.start..config.start + config.samples as u64;
    let samples: Vec<Sample> = range
        .clone()
        .into_par_iter()
        .map(|k| {
            let mut rng = sample_rng(config.seed, k);
            run_sample(experiment, k, &mut rng, config, rank)
        })
        .collect();
    let checks = fixed_checks(experiment);

    let mut measured: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
    let mut records = Vec::with_capacity(samples.len());
    let mut failures = Vec::new();
    for (k, s) in range.zip(samples) {
        for (name, v) in s.metrics {
            measured.entry(name).or_default().push(v);
        }
        if !s.pass {
            failures.push(Failure {
                sample: k,
                reason: s.reason.clone().unwrap_or_default(),
                reproducer: reproducer(experiment, config, k),
            });
        }
        records.push(SampleRecord {
            sample: k,
            pass: s.pass,
            reason: s.reason,
            witness: s.witness,
        });
    }
    let witnesses = format!("{}-witnesses.json", experiment.name());
    let path = out.write_json(&witnesses, &records)?;
    if verify {
        let stored: Vec<SampleRecord> = parse_json(&read_input(&path)?, "witness list")?;
        for r in stored.iter().filter(|r| r.pass) {
            if let Err(reason) = recheck(experiment, &r.witness, rank) {
                return Err(CliError::Domain(format!(
                    "stored witness for sample {} does not re-check: {reason}",
                    r.sample
                )));
            }
        }
    }
    let stats = measured
        .into_iter()
        .map(|(name, vs)| {
            let min = vs.iter().copied().fold(f64::INFINITY, f64::min);
            let max = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = vs.iter().sum::<f64>() / vs.len() as f64;
            (name.to_string(), Stat { min, max, mean })
        })
        .collect();
    let passed = records.iter().filter(|r| r.pass).count();
    let report = RunReport {
        experiment,
        config: config.clone(),
        passed,
        failed: records.len() - passed,
        measured: stats,
        checks,
        failures,
        witnesses,
        reverified: verify,
        timings: timings.then(|| Timings {
            total_ms: clock.elapsed().as_secs_f64() * 1e3,
        }),
    };
    out.write_json(&format!("{}.json", experiment.name()), &report)?;
    Ok(report)
}

fn run_sample(e: Experiment, k: u64, rng: &mut ChaCha8Rng, c: &RunConfig, rank: Rank) -> Sample {
    let result = match e {
        Experiment::FoldTermination => fold_termination(rng, c.moves, rank),
        Experiment::LoopPersistence => loop_persistence(rng, c.moves, rank),
        Experiment::FbConstants => fb_constants(rng, c.moves, rank),
        Experiment::DeltaHarness => Ok(delta_tree(rng)),
        Experiment::ThinTriangles => Ok(thin_tree(rng, 1 + (k % 3) as u32)),
        Experiment::FbBall => Ok(fb_ball(rng, c.moves, rank)),
    };
    result.unwrap_or_else(Sample::error)
}

fn fixed_checks(e: Experiment) -> Vec<Check> {
    match e {
        Experiment::DeltaHarness => delta_checks(),
        _ => Vec::new(),
    }
}

type SampleResult = Result<Sample, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[derive(Serialize, Deserialize)]
struct FoldWitness {
    basis: Vec<FreeWord>,
    conjugator: FreeWord,
    maximal_folds: usize,
    single_folds: usize,
    path_bases: Vec<Vec<FreeWord>>,
}

fn fold_termination(rng: &mut ChaCha8Rng, moves: usize, rank: Rank) -> SampleResult {
    let basis = random_basis_with(rng, moves, rank);
    let start = make_foldable(&basis).map_err(err)?;
    let path = fold_graph(start.graph.clone()).map_err(err)?;
    let mut f = Vec::new();
    require(&mut f, path.ends_at_rose(rank), "did not reach the rose");
    require(&mut f, path.type_ii_count() == 0, "type II fold");
    let total: usize = start.basis.iter().map(FreeWord::len).sum();
    require(
        &mut f,
        path.single_fold_count() + rank.get() <= total,
        "more single folds than edges to remove",
    );
    require(
        &mut f,
        path.graphs.iter().all(AGraph::is_foldable),
        "intermediate graph not foldable",
    );
    let mut path_bases = Vec::new();
    for g in &path.graphs {
        let v = g.base().ok_or("graph lost its base")?;
        let tree = g.spanning_tree(v).map_err(err)?;
        let b = g.basis_from_tree(&tree, v, rank).map_err(err)?;
        require(
            &mut f,
            is_basis(&b, rank).map_err(err)?,
            "extracted tree basis is not a basis",
        );
        path_bases.push(b);
    }
    let (other, _) = fold_completely(&start.graph);
    require(
        &mut f,
        labeled_isomorphic(&other, path.terminal()),
        "fold orders disagree",
    );
    let metrics = vec![
        ("maximal_folds", path.len() as f64),
        ("single_folds", path.single_fold_count() as f64),
        ("basis_length", total as f64),
        ("conjugator_length", start.conjugator.len() as f64),
    ];
    let w = FoldWitness {
        basis,
        conjugator: start.conjugator,
        maximal_folds: path.len(),
        single_folds: path.single_fold_count(),
        path_bases,
    };
    Ok(Sample::judge(f, metrics, to_value(&w)))
}

#[derive(Serialize, Deserialize)]
struct LoopWitness {
    b: Vec<FreeWord>,
    chain: ChainReport,
}

fn loop_persistence(rng: &mut ChaCha8Rng, moves: usize, rank: Rank) -> SampleResult {
    let a = FBVertex {
        basis: random_basis_with(rng, moves, rank),
    };
    let b = random_basis_with_letter(rng, moves, rank);
    let x = Letter::generator(1);
    let start = ensure_foldable(&b).map_err(err)?;
    let path = fold_graph(start.graph).map_err(err)?;
    let mut f = Vec::new();
    require(
        &mut f,
        path.graphs.iter().all(|g| has_base_loop(g, x)),
        "lost the shared loop",
    );
    let b_vertex = FBVertex { basis: b.clone() };
    let chain = folding_path_bases(&b_vertex).map_err(err)?;
    let gen = FreeWord::generator(1);
    require(
        &mut f,
        chain.iter().all(|v| v.basis.contains(&gen)),
        "a path basis lost the shared letter",
    );
    let report = fb_chain_report(&a, &b_vertex).map_err(err)?;
    require(
        &mut f,
        report.within_one_of_target(),
        "a chain vertex is not within one of the target",
    );
    require(
        &mut f,
        report.validate(),
        "chain certificates do not validate",
    );
    let metrics = vec![
        ("chain_length", report.chain.len() as f64),
        ("maximal_folds", path.len() as f64),
    ];
    let w = LoopWitness { b, chain: report };
    Ok(Sample::judge(f, metrics, to_value(&w)))
}

#[derive(Serialize, Deserialize)]
struct ConstantsWitness {
    h_lipschitz: Witness,
    hq: Witness,
    density: Witness,
}

fn fb_constants(rng: &mut ChaCha8Rng, moves: usize, rank: Rank) -> SampleResult {
    let (a, b) = random_adjacent_pair(rng, moves, rank);
    let cert = fb_adjacent(&a, &b)
        .map_err(err)?
        .ok_or("pair is not adjacent")?;
    let h_lipschitz = Witness::h_lipschitz(&a, &b, &cert).map_err(err)?;
    let n = rank.get();
    let mut subset: Vec<usize> = (0..n).collect();
    subset.shuffle(rng);
    subset.truncate(rng.gen_range(1..n));
    let u = FFVertex::new(a.basis.clone(), subset).map_err(err)?;
    let hq = Witness::factor_path(WitnessKind::Hq, &u).map_err(err)?;
    let density = Witness::factor_path(WitnessKind::Density, &u).map_err(err)?;
    let mut f = Vec::new();
    for w in [&h_lipschitz, &hq, &density] {
        if let Err(e) = w.verify() {
            f.push(format!("{:?} witness: {e}", w.kind));
        }
    }
    require(&mut f, q_map(&h_map(&a)) == a, "q(h(a)) differs from a");
    let metrics = vec![
        ("h_lipschitz_length", h_lipschitz.length as f64),
        ("hq_length", hq.length as f64),
        ("density_length", density.length as f64),
    ];
    let w = ConstantsWitness {
        h_lipschitz,
        hq,
        density,
    };
    Ok(Sample::judge(f, metrics, to_value(&w)))
}

fn delta_tree(rng: &mut ChaCha8Rng) -> Sample {
    let n = rng.gen_range(1..=40);
    let t = FiniteGraph::random_tree(rng, n);
    let (four, slim) = match (delta_four_point(&t), delta_slim(&t)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Sample::error(e.to_string()),
    };
    let mut f = Vec::new();
    require(&mut f, four.twice() == 0, "four-point delta is not 0");
    require(&mut f, slim == 0, "slim delta is not 0");
    let metrics = vec![
        ("vertices", n as f64),
        ("delta_four_point", four.as_f64()),
        ("delta_slim", slim as f64),
    ];
    let w = json!({ "graph": parse_json::<Value>(&t.to_json(), "graph").unwrap_or(Value::Null), "delta_four_point": four, "delta_slim": slim });
    Sample::judge(f, metrics, w)
}

fn cycle_oracle(n: usize) -> i64 {
    let d = |i: usize, j: usize| {
        let k = i.abs_diff(j);
        k.min(n - k) as i64
    };
    let mut best = 0;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for w in 0..n {
                    let mut s = [d(x, y) + d(z, w), d(x, z) + d(y, w), d(x, w) + d(y, z)];
                    s.sort_unstable();
                    best = best.max(s[2] - s[1]);
                }
            }
        }
    }
    best
}

fn delta_checks() -> Vec<Check> {
    let mut checks = Vec::new();
    let mut cycle_values = Vec::new();
    let mut cycles_ok = true;
    for n in 3..=12 {
        let got = delta_four_point(&FiniteGraph::cycle(n))
            .map(|v| v.twice())
            .unwrap_or(-1);
        cycles_ok &= got == cycle_oracle(n);
        cycle_values.push(json!({ "n": n, "twice_delta": got }));
    }
    checks.push(Check {
        name: "cycle four-point delta matches enumeration".into(),
        pass: cycles_ok,
        value: Value::Array(cycle_values),
    });
    let grid = FiniteGraph::grid(10, 10);
    let ids = grid.vertices().to_vec();
    let mut lines: Vec<Vec<VertexId>> = Vec::new();
    for r in 0..10 {
        lines.push(ids[r * 10..(r + 1) * 10].to_vec());
        lines.push((0..10).map(|c| ids[c * 10 + r]).collect());
    }
    let before = delta_slim(&grid).ok();
    let after = cone_off(&grid, &lines)
        .ok()
        .and_then(|g| delta_slim(&g).ok());
    checks.push(Check {
        name: "coning off grid rows and columns lowers slim delta".into(),
        pass: matches!((before, after), (Some(b), Some(a)) if a < b),
        value: json!({ "before": before, "after": after }),
    });
    let full = cone_off(&grid, &[ids])
        .ok()
        .and_then(|g| apsp(&g).ok())
        .map(|d| d.diameter());
    checks.push(Check {
        name: "coning off every vertex gives diameter 1".into(),
        pass: full == Some(1),
        value: json!(full),
    });
    checks
}

#[derive(Serialize, Deserialize)]
struct ThinWitnessRecord {
    graph: Value,
    report: ThinReport,
}

fn thin_tree(rng: &mut ChaCha8Rng, b1: u32) -> Sample {
    let n = rng.gen_range(2..=20);
    let t = FiniteGraph::random_tree(rng, n);
    let config = ThinConfig {
        b1,
        tuple_limit: foldpath_core::hyperbolicity::DEFAULT_TUPLE_LIMIT,
        seed: rng.gen(),
    };
    let run = || -> Result<(ThinReport, bool), String> {
        let paths = geodesic_family(&t).map_err(err)?;
        let phi = median_centers(&t).map_err(err)?;
        let report = check_thin_triangles(&t, &paths, &phi, &config).map_err(err)?;
        let tight = report.verify(&t, &paths, &phi).map_err(err)?;
        Ok((report, tight))
    };
    let (report, tight) = match run() {
        Ok(r) => r,
        Err(e) => return Sample::error(e),
    };
    let mut f = Vec::new();
    require(
        &mut f,
        report.symmetry.b2 == 0,
        "condition (1) constant is not 0",
    );
    require(
        &mut f,
        report.center.b2 == 0,
        "condition (3) constant is not 0",
    );
    require(
        &mut f,
        report.subsegment.b2 <= 2 * b1,
        "condition (2) constant exceeds 2 B1",
    );
    require(
        &mut f,
        tight,
        "a stored witness does not attain its constant",
    );
    let metrics = vec![
        ("vertices", n as f64),
        (
            ["b2_b1_1", "b2_b1_2", "b2_b1_3"][(b1 - 1) as usize % 3],
            report.subsegment.b2 as f64,
        ),
    ];
    let graph = parse_json::<Value>(&t.to_json(), "graph").unwrap_or(Value::Null);
    Sample::judge(f, metrics, to_value(&ThinWitnessRecord { graph, report }))
}

fn fb_ball(rng: &mut ChaCha8Rng, moves: usize, rank: Rank) -> Sample {
    let center = FBVertex::reference(rank);
    let mut candidates = vec![(center.clone(), "center".to_string())];
    for s in 0..8 {
        let b = FBVertex {
            basis: random_basis_with(rng, moves, rank),
        };
        let Ok(chain) = folding_path_bases(&b) else {
            return Sample::error(format!("basis {b} did not fold"));
        };
        for (k, v) in chain.into_iter().enumerate() {
            candidates.push((v, format!("path {s} step {k}")));
        }
    }
    let ball = fb_ball_graph(candidates);
    let (four, diameter) = match (delta_four_point(&ball.graph), apsp(&ball.graph)) {
        (Ok(d), Ok(m)) => (d, m.diameter()),
        (Err(e), _) | (_, Err(e)) => return Sample::error(e.to_string()),
    };
    let metrics = vec![
        ("vertices", ball.graph.vertex_count() as f64),
        ("diameter", diameter as f64),
        ("delta_four_point", four.as_f64()),
    ];
    let graph = parse_json::<Value>(&ball.graph.to_json(), "graph").unwrap_or(Value::Null);
    let w = json!({ "graph": graph, "vertices": ball.vertices, "delta_four_point": four });
    Sample::judge(Vec::new(), metrics, w)
}

/// Re-checks one stored witness from its JSON alone.
fn recheck(e: Experiment, w: &Value, rank: Rank) -> Result<(), String> {
    let parse = |what: &str| format!("malformed {what} witness");
    match e {
        Experiment::FoldTermination => {
            let w: FoldWitness = serde_json::from_value(w.clone()).map_err(|_| parse("fold"))?;
            let conjugated: Vec<FreeWord> = w
                .basis
                .iter()
                .map(|b| b.conjugate_by(&w.conjugator))
                .collect();
            let wedge = foldpath_core::folding::wedge_graph(&conjugated).map_err(err)?;
            if !wedge.is_foldable() {
                return Err("conjugated wedge is not foldable".into());
            }
            let path = fold_graph(wedge).map_err(err)?;
            if !path.ends_at_rose(rank)
                || path.len() != w.maximal_folds
                || path.single_fold_count() != w.single_folds
            {
                return Err("fold path differs from the stored one".into());
            }
            for b in &w.path_bases {
                if !is_basis(b, rank).map_err(err)? {
                    return Err("stored path basis is not a basis".into());
                }
            }
            Ok(())
        }
        Experiment::LoopPersistence => {
            let w: LoopWitness = serde_json::from_value(w.clone()).map_err(|_| parse("loop"))?;
            let gen = FreeWord::generator(1);
            if w.b.first() != Some(&gen) || !w.chain.validate() || !w.chain.within_one_of_target() {
                return Err("chain report does not re-check".into());
            }
            Ok(())
        }
        Experiment::FbConstants => {
            let w: ConstantsWitness =
                serde_json::from_value(w.clone()).map_err(|_| parse("constants"))?;
            for x in [&w.h_lipschitz, &w.hq, &w.density] {
                x.verify().map_err(err)?;
            }
            Ok(())
        }
        Experiment::DeltaHarness => {
            let g = FiniteGraph::from_json(&w["graph"].to_string()).map_err(err)?;
            let ok = delta_four_point(&g).map_err(err)?.twice() == 0
                && delta_slim(&g).map_err(err)? == 0;
            ok.then_some(()).ok_or_else(|| "tree delta is not 0".into())
        }
        Experiment::ThinTriangles => {
            let w: ThinWitnessRecord =
                serde_json::from_value(w.clone()).map_err(|_| parse("thin"))?;
            let g = FiniteGraph::from_json(&w.graph.to_string()).map_err(err)?;
            let paths = geodesic_family(&g).map_err(err)?;
            let phi = median_centers(&g).map_err(err)?;
            w.report
                .verify(&g, &paths, &phi)
                .map_err(err)?
                .then_some(())
                .ok_or_else(|| "thin triangles witness does not attain its constant".into())
        }
        Experiment::FbBall => {
            let g = FiniteGraph::from_json(&w["graph"].to_string()).map_err(err)?;
            let got = delta_four_point(&g).map_err(err)?;
            (w["delta_four_point"].as_f64() == Some(got.as_f64()))
                .then_some(())
                .ok_or_else(|| "ball delta differs".into())
        }
    }
}
