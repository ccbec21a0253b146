//! One function per subcommand. Each writes its artifacts under `--out`
//! and returns what to print.

use std::path::Path;

use foldpath_core::agraph::{labeled_isomorphic, AGraph, MarkingGraph};
use foldpath_core::complexes::{
    fb_adjacent, fb_equivalence, folding_path_bases, tau as tau_op, FBVertex, FFVertex,
    SplittingVertex, Witness, WitnessKind,
};
use foldpath_core::folding::{
    fold_completely, fold_graph, is_basis, make_foldable, wedge_graph, FoldError, FoldStep,
};
use foldpath_core::hyperbolicity::{
    apsp, check_thin_triangles, cone_off as cone_off_op, delta_four_point, delta_slim,
    geodesic_family, median_centers, CenterMap, FiniteGraph, PathFamily, ThinConfig, VertexId,
};
use foldpath_core::words::{format_word_list, parse_word_list, FreeWord};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::{
    parse_json, read_input, CliError, CliResult, DeltaMethod, Global, GraphArgs, OutDir, Outcome,
    WitnessArgs, WitnessKindArg,
};

fn words(g: &Global, text: &str) -> CliResult<Vec<FreeWord>> {
    let rank = g.rank()?;
    let ws = parse_word_list(text, rank)?;
    if ws.len() != rank.get() {
        return Err(CliError::Input(format!(
            "expected {} words, got {}",
            rank.get(),
            ws.len()
        )));
    }
    Ok(ws)
}

fn basis(g: &Global, text: &str) -> CliResult<FBVertex> {
    Ok(FBVertex::new(words(g, text)?)?)
}

fn verify_failed(what: &str) -> CliError {
    CliError::Domain(format!("verification failed: {what}"))
}

#[derive(Serialize)]
struct FoldTrace {
    input: Vec<FreeWord>,
    /// `g` with the folded wedge carrying `g^-1 b_i g`; null when no tried
    /// conjugation made the wedge foldable and it was folded one fold at a
    /// time instead.
    conjugator: Option<FreeWord>,
    folded_basis: Vec<FreeWord>,
    maximal_folds: Option<usize>,
    single_folds: usize,
    type_ii: usize,
    steps: Vec<Vec<FoldStep>>,
    graphs: Vec<AGraph>,
    is_basis: bool,
}

pub fn fold(g: &Global, text: &str) -> CliResult<Outcome> {
    let rank = g.rank()?;
    let input = words(g, text)?;
    let (trace, terminal) = match make_foldable(&input) {
        Ok(start) => {
            let path = fold_graph(start.graph)?;
            let terminal = path.terminal().clone();
            let trace = FoldTrace {
                input: input.clone(),
                conjugator: Some(start.conjugator),
                folded_basis: start.basis,
                maximal_folds: Some(path.len()),
                single_folds: path.single_fold_count(),
                type_ii: path.type_ii_count(),
                steps: path.steps.clone(),
                graphs: path.graphs,
                is_basis: false,
            };
            (trace, terminal)
        }
        Err(FoldError::Unrepairable) => {
            let wedge = wedge_graph(&input)?;
            let (terminal, steps) = fold_completely(&wedge);
            let type_ii = steps
                .iter()
                .filter(|s| s.kind == foldpath_core::folding::FoldKind::TypeII)
                .count();
            let trace = FoldTrace {
                input: input.clone(),
                conjugator: None,
                folded_basis: input.clone(),
                maximal_folds: None,
                single_folds: steps.len(),
                type_ii,
                steps: vec![steps],
                graphs: vec![wedge, terminal.clone()],
                is_basis: false,
            };
            (trace, terminal)
        }
        Err(e) => return Err(e.into()),
    };
    let rose = AGraph::rose(rank);
    let ok = terminal
        .core()
        .map(|c| labeled_isomorphic(&c, &rose))
        .unwrap_or(false);
    let trace = FoldTrace {
        is_basis: ok,
        ..trace
    };
    let out = OutDir::new(&g.out);
    out.write_json("fold.json", &trace)?;
    let final_path = out.write("fold-final.json", &terminal.to_json())?;
    out.write("fold-final.dot", &terminal.to_dot("folded"))?;
    if g.verify {
        let back = AGraph::from_json(&read_input(&final_path)?, rank)?;
        if !labeled_isomorphic(&back, &terminal) {
            return Err(verify_failed("stored folded graph differs"));
        }
        if is_basis(&input, rank)? != ok {
            return Err(verify_failed("basis test disagrees with the folded graph"));
        }
    }
    if !ok {
        return Err(CliError::Domain(format!(
            "not a basis: {} folds to a graph other than the rose (see {})",
            format_word_list(&input),
            out.path("fold-final.dot").display()
        )));
    }
    let n = trace.maximal_folds.unwrap_or(0);
    let summary = format!(
        "{} folds to the rose in {n} maximal folds ({} single folds, {} of type II)",
        format_word_list(&input),
        trace.single_folds,
        trace.type_ii
    );
    Ok(Outcome::new(summary, &trace))
}

pub fn path_bases(g: &Global, text: &str) -> CliResult<Outcome> {
    let rank = g.rank()?;
    let b = basis(g, text)?;
    let chain = folding_path_bases(&b)?;
    if g.verify {
        for v in &chain {
            if !is_basis(&v.basis, rank)? {
                return Err(verify_failed(&format!("{v} is not a basis")));
            }
        }
    }
    let out = OutDir::new(&g.out);
    let report = json!({ "source": b, "chain": chain });
    out.write_json("path-bases.json", &report)?;
    let summary = chain
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("\n");
    Ok(Outcome::new(summary, &report))
}

pub fn fb(g: &Global, ta: &str, tb: &str) -> CliResult<Outcome> {
    let (a, b) = (basis(g, ta)?, basis(g, tb)?);
    let equivalence = fb_equivalence(&a, &b);
    let adjacency = match equivalence {
        Some(_) => None,
        None => fb_adjacent(&a, &b)?,
    };
    if g.verify {
        if equivalence.as_ref().is_some_and(|e| !e.validate(&a, &b)) {
            return Err(verify_failed("equivalence certificate"));
        }
        if adjacency.as_ref().is_some_and(|c| !c.validate(&a, &b)) {
            return Err(verify_failed("adjacency certificate"));
        }
    }
    let summary = match (&equivalence, &adjacency) {
        (Some(e), _) => format!("equivalent (conjugator {})", e.conjugator),
        (None, Some(c)) => format!("adjacent {c} (conjugator {})", c.conjugator),
        (None, None) => "not adjacent".to_string(),
    };
    let report = json!({ "a": a, "b": b, "equivalence": equivalence, "adjacency": adjacency });
    OutDir::new(&g.out).write_json("fb.json", &report)?;
    Ok(Outcome::new(summary, &report))
}

fn parse_subset(text: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(k - 1),
            _ => Err(CliError::Input(format!("bad subset position {t:?}"))),
        })
        .collect()
}

fn required<'a>(v: &'a Option<String>, flag: &str) -> CliResult<&'a str> {
    v.as_deref()
        .ok_or_else(|| CliError::Input(format!("--{flag} is required for this witness kind")))
}

pub fn witness(g: &Global, args: &WitnessArgs) -> CliResult<Outcome> {
    if let Some(path) = &args.check {
        let w: Witness = parse_json(&read_input(path)?, "witness")?;
        w.verify()
            .map_err(|e| CliError::Domain(format!("witness does not verify: {e}")))?;
        let summary = format!("valid: length {} <= {}", w.length, w.bound);
        return Ok(Outcome::new(
            summary,
            json!({ "valid": true, "length": w.length, "bound": w.bound }),
        ));
    }
    let kind = args.kind.expect("clap requires --kind without --check");
    let w = match kind {
        WitnessKindArg::HLipschitz => {
            let a = basis(g, required(&args.a, "a")?)?;
            let b = basis(g, required(&args.b, "b")?)?;
            let cert = fb_adjacent(&a, &b)?
                .ok_or_else(|| CliError::Domain("bases are not adjacent".into()))?;
            Witness::h_lipschitz(&a, &b, &cert)?
        }
        WitnessKindArg::Hq | WitnessKindArg::Density => {
            let ambient = words(g, required(&args.ambient, "ambient")?)?;
            let subset = parse_subset(required(&args.subset, "subset")?)?;
            let u = FFVertex::new(ambient, subset)?;
            let k = if kind == WitnessKindArg::Hq {
                WitnessKind::Hq
            } else {
                WitnessKind::Density
            };
            Witness::factor_path(k, &u)?
        }
    };
    w.verify().map_err(|e| verify_failed(&e.to_string()))?;
    let path = OutDir::new(&g.out).write_json("witness.json", &w)?;
    if g.verify {
        let back: Witness = parse_json(&read_input(&path)?, "witness")?;
        if back != w || back.verify().is_err() {
            return Err(verify_failed("stored witness"));
        }
    }
    let names: Vec<String> = w.path.vertices.iter().map(|v| v.to_string()).collect();
    let summary = format!("length {} <= {}: {}", w.length, w.bound, names.join(" - "));
    Ok(Outcome::new(summary, &w))
}

pub fn tau(
    g: &Global,
    marking: Option<&Path>,
    basis_text: Option<&str>,
    edge: usize,
) -> CliResult<Outcome> {
    let rank = g.rank()?;
    let marking = match (marking, basis_text) {
        (Some(p), _) => {
            let m: MarkingGraph = parse_json(&read_input(p)?, "marking graph")?;
            for e in &m.edges {
                e.label.check_rank(rank)?;
            }
            m
        }
        (None, Some(t)) => MarkingGraph::rose(&words(g, t)?),
        (None, None) => {
            return Err(CliError::Input(
                "one of --marking or --basis is required".into(),
            ))
        }
    };
    let s = SplittingVertex {
        marking: marking.clone(),
        edge,
    };
    let u = tau_op(&s)?;
    if g.verify {
        u.check().map_err(|e| verify_failed(&e.to_string()))?;
    }
    let out = OutDir::new(&g.out);
    let report = json!({ "splitting": s, "factor": u, "factor_display": u.to_string() });
    out.write_json("tau.json", &report)?;
    out.write("tau-marking.dot", &marking.to_dot("marking"))?;
    Ok(Outcome::new(u.to_string(), &report))
}

fn parse_size(t: &str) -> CliResult<usize> {
    t.parse()
        .map_err(|_| CliError::Input(format!("bad size {t:?}")))
}

pub(crate) fn load_graph(g: &Global, args: &GraphArgs) -> CliResult<FiniteGraph> {
    if let Some(p) = &args.input {
        return Ok(FiniteGraph::from_json(&read_input(p)?)?);
    }
    let Some(spec) = &args.graph else {
        return Err(CliError::Input("one of --in or --graph is required".into()));
    };
    let Some((family, size)) = spec.split_once(':') else {
        return Err(CliError::Input(format!("bad graph spec {spec:?}")));
    };
    Ok(match family {
        "path" => FiniteGraph::path(parse_size(size)?),
        "cycle" => FiniteGraph::cycle(parse_size(size)?),
        "complete" => FiniteGraph::complete(parse_size(size)?),
        "tree" => {
            let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
            FiniteGraph::random_tree(&mut rng, parse_size(size)?)
        }
        "grid" => {
            let (r, c) = size
                .split_once('x')
                .ok_or_else(|| CliError::Input(format!("bad grid size {size:?}")))?;
            FiniteGraph::grid(parse_size(r)?, parse_size(c)?)
        }
        _ => return Err(CliError::Input(format!("unknown graph family {family:?}"))),
    })
}

pub fn delta(g: &Global, args: &GraphArgs, method: DeltaMethod) -> CliResult<Outcome> {
    let graph = load_graph(g, args)?;
    let d = apsp(&graph)?;
    let four = match method {
        DeltaMethod::FourPoint | DeltaMethod::Both => Some(delta_four_point(&graph)?),
        DeltaMethod::Slim => None,
    };
    let slim = match method {
        DeltaMethod::Slim | DeltaMethod::Both => Some(delta_slim(&graph)?),
        DeltaMethod::FourPoint => None,
    };
    let report = json!({
        "vertices": graph.vertex_count(),
        "edges": graph.edge_count(),
        "diameter": d.diameter(),
        "delta_four_point": four,
        "delta_slim": slim,
    });
    OutDir::new(&g.out).write_json("delta.json", &report)?;
    let mut parts = vec![format!(
        "{} vertices, {} edges, diameter {}",
        graph.vertex_count(),
        graph.edge_count(),
        d.diameter()
    )];
    if let Some(v) = four {
        parts.push(format!("four-point delta {v}"));
    }
    if let Some(v) = slim {
        parts.push(format!("slim delta {v}"));
    }
    Ok(Outcome::new(parts.join(", "), &report))
}

pub fn cone_off(
    g: &Global,
    args: &GraphArgs,
    subsets: Option<&Path>,
    all: bool,
) -> CliResult<Outcome> {
    let graph = load_graph(g, args)?;
    let sets: Vec<Vec<VertexId>> = match (subsets, all) {
        (Some(p), _) => parse_json(&read_input(p)?, "subset list")?,
        (None, true) => vec![graph.vertices().to_vec()],
        (None, false) => {
            return Err(CliError::Input(
                "one of --subsets or --all is required".into(),
            ))
        }
    };
    let coned = cone_off_op(&graph, &sets)?;
    let (before, after) = (apsp(&graph)?, apsp(&coned)?);
    if g.verify {
        for &a in graph.vertices() {
            for &b in graph.vertices() {
                if after.get(&coned, a, b)? > before.get(&graph, a, b)? {
                    return Err(verify_failed("coning off increased a distance"));
                }
            }
        }
    }
    let report = json!({
        "subsets": sets.len(),
        "edges_before": graph.edge_count(),
        "edges_after": coned.edge_count(),
        "diameter_before": before.diameter(),
        "diameter_after": after.diameter(),
        "delta_slim_before": delta_slim(&graph)?,
        "delta_slim_after": delta_slim(&coned)?,
    });
    let out = OutDir::new(&g.out);
    out.write_json("cone-off.json", &report)?;
    out.write("cone-off-graph.json", &coned.to_json())?;
    out.write("cone-off.dot", &coned.to_dot("coned"))?;
    let summary = format!(
        "diameter {} -> {}, slim delta {} -> {}",
        report["diameter_before"],
        report["diameter_after"],
        report["delta_slim_before"],
        report["delta_slim_after"]
    );
    Ok(Outcome::new(summary, &report))
}

pub fn thin_check(
    g: &Global,
    args: &GraphArgs,
    paths: Option<&Path>,
    phi: Option<&Path>,
    b1: u32,
    tuple_limit: u64,
) -> CliResult<Outcome> {
    let graph = load_graph(g, args)?;
    let family = match paths {
        Some(p) => PathFamily::from_json(&read_input(p)?)?,
        None => geodesic_family(&graph)?,
    };
    let centers = match phi {
        Some(p) => CenterMap::from_json(&read_input(p)?)?,
        None => median_centers(&graph)?,
    };
    let config = ThinConfig {
        b1,
        tuple_limit,
        seed: g.seed,
    };
    let report = check_thin_triangles(&graph, &family, &centers, &config)?;
    if g.verify && !report.verify(&graph, &family, &centers)? {
        return Err(verify_failed(
            "a stored witness does not attain its constant",
        ));
    }
    let out = OutDir::new(&g.out);
    out.write_json("thin-check.json", &report)?;
    out.write("thin-check-graph.json", &graph.to_json())?;
    out.write("thin-check-paths.json", &family.to_json())?;
    out.write("thin-check-phi.json", &centers.to_json())?;
    let summary = format!(
        "B1 = {b1}: B2 = {} (symmetry {}, subsegments {}{}, centers {})",
        report.b2(),
        report.symmetry.b2,
        report.subsegment.b2,
        if report.subsegment.exhaustive {
            ""
        } else {
            " sampled"
        },
        report.center.b2
    );
    Ok(Outcome::new(summary, &report))
}
