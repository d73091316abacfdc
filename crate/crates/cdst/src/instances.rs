//! JSON input/output for instances, solutions, and reports, plus the
//! instance generators (gap family, random families, synthetic trees).
//!
//! Parsing is done over a generic JSON value so that every error can name
//! the exact spot in the document (`file#/terminals/3/weight`) instead of a
//! byte offset.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::arborescence::Arborescence;
use crate::error::{Error, Result};
use crate::model::{CostBreakdown, Instance, MetricSpec, Solution};
use crate::report::RunReport;

// ---------------------------------------------------------------------------
// Reading
// ---------------------------------------------------------------------------

/// Context for pointer-addressed parse errors: the document origin (usually
/// a file path) that error messages prefix to the JSON pointer.
struct Cx<'a> {
    origin: &'a str,
}

impl Cx<'_> {
    fn err(&self, ptr: &str, detail: impl Into<String>) -> Error {
        Error::Parse {
            path: format!("{}#{}", self.origin, ptr),
            detail: detail.into(),
        }
    }

    fn obj<'v>(&self, v: &'v Value, ptr: &str) -> Result<&'v Map<String, Value>> {
        v.as_object().ok_or_else(|| self.err(ptr, "expected an object"))
    }

    fn field<'v>(&self, m: &'v Map<String, Value>, key: &str, ptr: &str) -> Result<&'v Value> {
        m.get(key)
            .ok_or_else(|| self.err(ptr, format!("missing required field `{key}`")))
    }

    fn str<'v>(&self, v: &'v Value, ptr: &str) -> Result<&'v str> {
        v.as_str().ok_or_else(|| self.err(ptr, "expected a string"))
    }

    fn array<'v>(&self, v: &'v Value, ptr: &str) -> Result<&'v Vec<Value>> {
        v.as_array().ok_or_else(|| self.err(ptr, "expected an array"))
    }

    fn finite(&self, v: &Value, ptr: &str) -> Result<f64> {
        let x = v
            .as_f64()
            .ok_or_else(|| self.err(ptr, "expected a number"))?;
        if !x.is_finite() {
            return Err(self.err(ptr, "expected a finite number"));
        }
        Ok(x)
    }

    fn size(&self, v: &Value, ptr: &str) -> Result<usize> {
        v.as_u64()
            .map(|x| x as usize)
            .ok_or_else(|| self.err(ptr, "expected a non-negative integer"))
    }
}

/// Reads an instance file. Errors name the offending JSON field as
/// `path#/json/pointer`.
pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: shown.clone(),
        source: e,
    })?;
    parse_instance(&text, &shown)
}

/// Parses an instance from JSON text; `origin` labels error locations.
pub fn parse_instance(text: &str, origin: &str) -> Result<Instance> {
    let cx = Cx { origin };
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| cx.err("", format!("invalid JSON: {e}")))?;
    let top = cx.obj(&doc, "")?;

    let metric = cx.obj(cx.field(top, "metric", "")?, "/metric")?;
    let kind = cx.str(cx.field(metric, "type", "/metric")?, "/metric/type")?;
    let root = cx.str(cx.field(top, "root", "")?, "/root")?.to_string();

    let mut terminals = Vec::new();
    for (i, t) in cx
        .array(cx.field(top, "terminals", "")?, "/terminals")?
        .iter()
        .enumerate()
    {
        let ptr = format!("/terminals/{i}");
        let tm = cx.obj(t, &ptr)?;
        let id = cx.str(cx.field(tm, "id", &ptr)?, &format!("{ptr}/id"))?;
        let wptr = format!("{ptr}/weight");
        let w = cx.finite(cx.field(tm, "weight", &ptr)?, &wptr)?;
        if w < 0.0 {
            return Err(cx.err(&wptr, "terminal weight must be >= 0"));
        }
        terminals.push((id.to_string(), w));
    }

    match kind {
        "matrix" => {
            let ids = parse_id_list(&cx, top, "points")?;
            let mut rows = Vec::new();
            for (i, row) in cx
                .array(cx.field(metric, "distances", "/metric")?, "/metric/distances")?
                .iter()
                .enumerate()
            {
                let rptr = format!("/metric/distances/{i}");
                let cells = cx.array(row, &rptr)?;
                let mut out = Vec::with_capacity(cells.len());
                for (j, cell) in cells.iter().enumerate() {
                    out.push(cx.finite(cell, &format!("{rptr}/{j}"))?);
                }
                rows.push(out);
            }
            Instance::with_matrix(ids, rows, &root, terminals)
        }
        "euclidean" => {
            let dim = cx.size(
                cx.field(metric, "dimension", "/metric")?,
                "/metric/dimension",
            )?;
            if dim == 0 {
                return Err(cx.err("/metric/dimension", "dimension must be >= 1"));
            }
            let mut points = Vec::new();
            for (i, p) in cx
                .array(cx.field(top, "points", "")?, "/points")?
                .iter()
                .enumerate()
            {
                let pptr = format!("/points/{i}");
                let pm = cx.obj(p, &pptr)?;
                let id = cx.str(cx.field(pm, "id", &pptr)?, &format!("{pptr}/id"))?;
                let cptr = format!("{pptr}/coords");
                let raw = cx.array(cx.field(pm, "coords", &pptr)?, &cptr)?;
                if raw.len() != dim {
                    return Err(cx.err(
                        &cptr,
                        format!("expected {dim} coordinates, got {}", raw.len()),
                    ));
                }
                let mut coords = Vec::with_capacity(dim);
                for (j, c) in raw.iter().enumerate() {
                    coords.push(cx.finite(c, &format!("{cptr}/{j}"))?);
                }
                points.push((id.to_string(), coords));
            }
            Instance::euclidean(points, &root, terminals)
        }
        "graph" => {
            let ids = parse_id_list(&cx, top, "vertices")?;
            let mut edges = Vec::new();
            for (i, e) in cx
                .array(cx.field(top, "edges", "")?, "/edges")?
                .iter()
                .enumerate()
            {
                let eptr = format!("/edges/{i}");
                let em = cx.obj(e, &eptr)?;
                let u = cx.str(cx.field(em, "u", &eptr)?, &format!("{eptr}/u"))?;
                let v = cx.str(cx.field(em, "v", &eptr)?, &format!("{eptr}/v"))?;
                let lptr = format!("{eptr}/length");
                let len = cx.finite(cx.field(em, "length", &eptr)?, &lptr)?;
                if len < 0.0 {
                    return Err(cx.err(&lptr, "edge length must be >= 0"));
                }
                edges.push((u.to_string(), v.to_string(), len));
            }
            Instance::graph(ids, edges, &root, terminals)
        }
        other => Err(cx.err(
            "/metric/type",
            format!("unknown metric type `{other}` (expected `matrix`, `euclidean`, or `graph`)"),
        )),
    }
}

fn parse_id_list(cx: &Cx, top: &Map<String, Value>, key: &str) -> Result<Vec<String>> {
    let ptr = format!("/{key}");
    let mut ids = Vec::new();
    for (i, v) in cx.array(cx.field(top, key, "")?, &ptr)?.iter().enumerate() {
        ids.push(cx.str(v, &format!("{ptr}/{i}"))?.to_string());
    }
    Ok(ids)
}

/// Reads a solution file against its instance. Returns the edge set and the
/// stored cost block when present (for cross-checking).
pub fn read_solution(
    path: impl AsRef<Path>,
    instance: &Instance,
) -> Result<(Solution, Option<CostBreakdown>)> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: shown.clone(),
        source: e,
    })?;
    let cx = Cx { origin: &shown };
    let doc: Value =
        serde_json::from_str(&text).map_err(|e| cx.err("", format!("invalid JSON: {e}")))?;
    let top = cx.obj(&doc, "")?;

    let mut edges = Vec::new();
    for (i, e) in cx
        .array(cx.field(top, "edges", "")?, "/edges")?
        .iter()
        .enumerate()
    {
        let eptr = format!("/edges/{i}");
        let pair = cx.array(e, &eptr)?;
        if pair.len() != 2 {
            return Err(cx.err(&eptr, "expected a two-element [u, v] pair"));
        }
        let mut idx = [0usize; 2];
        for (slot, v) in pair.iter().enumerate() {
            let vptr = format!("{eptr}/{slot}");
            let id = cx.str(v, &vptr)?;
            idx[slot] = instance
                .index_of(id)
                .ok_or_else(|| cx.err(&vptr, format!("unknown point id `{id}`")))?;
        }
        edges.push((idx[0], idx[1]));
    }

    let costs = match top.get("costs") {
        None => None,
        Some(c) => {
            let cm = cx.obj(c, "/costs")?;
            Some(CostBreakdown {
                connection: cx.finite(cx.field(cm, "connection", "/costs")?, "/costs/connection")?,
                delay: cx.finite(cx.field(cm, "delay", "/costs")?, "/costs/delay")?,
                total: cx.finite(cx.field(cm, "total", "/costs")?, "/costs/total")?,
            })
        }
    };

    Ok((Solution { edges }, costs))
}

// ---------------------------------------------------------------------------
// Writing
// ---------------------------------------------------------------------------

/// Serializes an instance to its JSON document form.
pub fn instance_to_json(instance: &Instance) -> Value {
    let ids: Vec<&str> = (0..instance.point_count()).map(|i| instance.id(i)).collect();
    let terminals: Vec<Value> = instance
        .terminals()
        .iter()
        .map(|&(i, w)| json!({ "id": instance.id(i), "weight": w }))
        .collect();
    let root = instance.id(instance.root());

    match instance.metric_spec() {
        MetricSpec::Matrix { distances } => json!({
            "metric": { "type": "matrix", "distances": distances },
            "points": ids,
            "root": root,
            "terminals": terminals,
        }),
        MetricSpec::Euclidean { dimension } => {
            let points: Vec<Value> = (0..instance.point_count())
                .map(|i| {
                    json!({
                        "id": instance.id(i),
                        "coords": instance.coordinates(i).unwrap_or(&[]),
                    })
                })
                .collect();
            json!({
                "metric": { "type": "euclidean", "dimension": dimension },
                "points": points,
                "root": root,
                "terminals": terminals,
            })
        }
        MetricSpec::Graph { edges } => {
            let edges: Vec<Value> = edges
                .iter()
                .map(|&(u, v, len)| {
                    json!({ "u": instance.id(u), "v": instance.id(v), "length": len })
                })
                .collect();
            json!({
                "metric": { "type": "graph" },
                "vertices": ids,
                "edges": edges,
                "root": root,
                "terminals": terminals,
            })
        }
    }
}

/// Serializes a solution (edges as id pairs plus its cost block).
pub fn solution_to_json(instance: &Instance, solution: &Solution, costs: &CostBreakdown) -> Value {
    let edges: Vec<Value> = solution
        .edges
        .iter()
        .map(|&(u, v)| json!([instance.id(u), instance.id(v)]))
        .collect();
    json!({
        "edges": edges,
        "costs": {
            "connection": costs.connection,
            "delay": costs.delay,
            "total": costs.total,
        },
    })
}

fn write_pretty(path: impl AsRef<Path>, doc: &Value) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        detail: format!("serialization failed: {e}"),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Writes an instance as a deterministic, pretty-printed JSON file.
pub fn write_instance(path: impl AsRef<Path>, instance: &Instance) -> Result<()> {
    write_pretty(path, &instance_to_json(instance))
}

/// Writes a solution file (edges as id pairs plus the cost block).
pub fn write_solution(
    path: impl AsRef<Path>,
    instance: &Instance,
    solution: &Solution,
    costs: &CostBreakdown,
) -> Result<()> {
    write_pretty(path, &solution_to_json(instance, solution, costs))
}

/// Writes a run report as pretty-printed JSON.
pub fn write_report(path: impl AsRef<Path>, report: &RunReport) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(report).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        detail: format!("serialization failed: {e}"),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// Splits the segment `from`–`to` of length `total` into ceil(total/step)
/// equal pieces (interior vertices `prefix_j`), emitting the final piece as
/// the exact remainder so the lengths sum to `total` bit-for-bit.
fn subdivide(
    from: &str,
    to: &str,
    total: f64,
    step: f64,
    prefix: &str,
    ids: &mut Vec<String>,
    edges: &mut Vec<(String, String, f64)>,
) {
    let n = ((total / step).ceil() as usize).max(1);
    let piece = total / n as f64;
    let mut prev = from.to_string();
    for j in 1..n {
        let v = format!("{prefix}_{j}");
        ids.push(v.clone());
        edges.push((prev, v.clone(), piece));
        prev = v;
    }
    let last = total - (n - 1) as f64 * piece;
    edges.push((prev, to.to_string(), last));
}

/// Builds the lower-bound-gap instance: a length-2 path from the root `r` to
/// a hub `c` (subdivided at granularity `delta`), k hub-to-terminal paths of
/// length 1/√2 (subdivided at `delta_prime`), and unit star edges `r`–`t_i`.
/// Every non-root vertex is a terminal; the `t_i` carry weight 1/√2 and the
/// subdivision vertices weight 0.
pub fn gen_gap(k: usize, delta: f64, delta_prime: f64) -> Result<Instance> {
    if k < 1 {
        return Err(Error::domain("gen_gap", "k must be >= 1"));
    }
    let ok = delta.is_finite()
        && delta_prime.is_finite()
        && delta > 0.0
        && delta < delta_prime
        && delta_prime < 1.0 / k as f64;
    if !ok {
        return Err(Error::domain(
            "gen_gap",
            "require 0 < delta < delta_prime < 1/k",
        ));
    }

    let arm = std::f64::consts::FRAC_1_SQRT_2;
    let mut ids = vec!["r".to_string(), "c".to_string()];
    let mut edges = Vec::new();
    subdivide("r", "c", 2.0, delta, "p0", &mut ids, &mut edges);
    for i in 1..=k {
        let t = format!("t{i}");
        ids.push(t.clone());
        subdivide("c", &t, arm, delta_prime, &format!("p{i}"), &mut ids, &mut edges);
        edges.push(("r".to_string(), t.clone(), 1.0));
    }
    let terminals: Vec<(String, f64)> = ids
        .iter()
        .skip(1)
        .map(|id| {
            let w = if id.starts_with('t') { arm } else { 0.0 };
            (id.clone(), w)
        })
        .collect();
    Instance::graph(ids, edges, "r", terminals)
}

fn mixed_weight<R: Rng>(rng: &mut R) -> f64 {
    if rng.gen::<f64>() < 0.3 {
        0.0
    } else {
        rng.gen_range(0.1..2.0)
    }
}

/// Deterministic random instance from one of three families:
/// `euclidean2d` (points in the unit square plus unnamed Steiner sites),
/// `random-graph` (random spanning tree plus a few extra edges), and
/// `star-heavy` (unit-edge arms of light terminals between two weighted
/// ones, with a shortcut that rewards reattaching the far end).
pub fn gen_random(n_terminals: usize, seed: u64, family: &str) -> Result<Instance> {
    if n_terminals < 1 {
        return Err(Error::domain("gen_random", "n_terminals must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match family {
        "euclidean2d" => gen_euclidean2d(n_terminals, &mut rng),
        "random-graph" => gen_random_graph(n_terminals, &mut rng),
        "star-heavy" => gen_star_heavy(n_terminals, &mut rng),
        other => Err(Error::domain(
            "gen_random",
            format!("unknown family `{other}` (expected `euclidean2d`, `random-graph`, or `star-heavy`)"),
        )),
    }
}

fn gen_euclidean2d(n: usize, rng: &mut ChaCha8Rng) -> Result<Instance> {
    let mut points = vec![("r".to_string(), vec![rng.gen::<f64>(), rng.gen::<f64>()])];
    let mut terminals = Vec::with_capacity(n);
    for i in 1..=n {
        let id = format!("t{i}");
        points.push((id.clone(), vec![rng.gen::<f64>(), rng.gen::<f64>()]));
        terminals.push((id, mixed_weight(rng)));
    }
    for j in 1..=n / 2 {
        points.push((format!("s{j}"), vec![rng.gen::<f64>(), rng.gen::<f64>()]));
    }
    Instance::euclidean(points, "r", terminals)
}

fn gen_random_graph(n: usize, rng: &mut ChaCha8Rng) -> Result<Instance> {
    let extra_vertices = rng.gen_range(0..=4usize);
    let mut ids = vec!["r".to_string()];
    let mut terminals = Vec::with_capacity(n);
    for i in 1..=n {
        let id = format!("t{i}");
        ids.push(id.clone());
        terminals.push((id, mixed_weight(rng)));
    }
    for j in 1..=extra_vertices {
        ids.push(format!("s{j}"));
    }
    let v = ids.len();

    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for child in 1..v {
        let parent = rng.gen_range(0..child);
        seen.insert((parent, child));
        edges.push((ids[parent].clone(), ids[child].clone(), rng.gen_range(0.1..2.0)));
    }
    let wanted = rng.gen_range(0..=5usize);
    let mut added = 0;
    for _ in 0..20 * (wanted + 1) {
        if added == wanted || v < 3 {
            break;
        }
        let a = rng.gen_range(0..v);
        let b = rng.gen_range(0..v);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if !seen.insert(key) {
            continue;
        }
        edges.push((ids[key.0].clone(), ids[key.1].clone(), rng.gen_range(0.1..2.0)));
        added += 1;
    }
    Instance::graph(ids, edges, "r", terminals)
}

fn gen_star_heavy(n: usize, rng: &mut ChaCha8Rng) -> Result<Instance> {
    let arms = (n / 4).max(1);
    let mut ids = vec!["r".to_string()];
    let mut edges = Vec::new();
    let mut terminals = Vec::new();
    for a in 1..=arms {
        let chain = rng.gen_range(2..=4usize);
        let h1 = format!("h1_{a}");
        let h2 = format!("h2_{a}");
        ids.push(h1.clone());
        terminals.push((h1.clone(), rng.gen_range(0.3..0.49)));
        edges.push(("r".to_string(), h1.clone(), 1.0));
        let mut prev = h1;
        for j in 1..=chain {
            let z = format!("z{a}_{j}");
            ids.push(z.clone());
            terminals.push((z.clone(), 0.0));
            edges.push((prev, z.clone(), 1.0));
            prev = z;
        }
        ids.push(h2.clone());
        terminals.push((h2.clone(), rng.gen_range(0.3..0.49)));
        edges.push((prev, h2.clone(), 1.0));
        edges.push(("r".to_string(), h2, 1.0));
    }
    Instance::graph(ids, edges, "r", terminals)
}

/// Random labeled arborescence for desk-scale verification: random
/// attachment shape, mixed zero/positive edge costs and weights, and
/// arbitrary root distances (subtree summaries treat them as given data, so
/// they need not be metric-consistent).
pub fn gen_arborescence(n_nodes: usize, seed: u64) -> Arborescence {
    let n = n_nodes.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut arb = Arborescence::with_root(0);
    let mut nodes = vec![arb.root()];
    for point in 1..n {
        let parent = nodes[rng.gen_range(0..nodes.len())];
        let edge = if rng.gen::<f64>() < 0.1 {
            0.0
        } else {
            rng.gen_range(0.05..2.0)
        };
        let weight = if rng.gen::<f64>() < 0.4 {
            0.0
        } else {
            rng.gen_range(0.1..2.0)
        };
        let terminal = weight > 0.0 || rng.gen::<f64>() < 0.25;
        let root_dist = rng.gen_range(0.0..3.0);
        nodes.push(arb.add_child(parent, point, edge, weight, root_dist, terminal));
    }
    arb
}

/// Large Euclidean instance plus a random-attachment spanning tree over all
/// points, used for scaling runs: point `p0` is the root, every other point
/// is a terminal with a mixed weight.
pub fn gen_scaling_euclidean(n_points: usize, seed: u64) -> Result<(Instance, Vec<(usize, usize)>)> {
    if n_points < 2 {
        return Err(Error::domain("gen_scaling_euclidean", "n_points must be >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_points);
    let mut terminals = Vec::with_capacity(n_points - 1);
    let mut edges = Vec::with_capacity(n_points - 1);
    for i in 0..n_points {
        let id = format!("p{i}");
        points.push((id.clone(), vec![rng.gen::<f64>(), rng.gen::<f64>()]));
        if i > 0 {
            terminals.push((id, mixed_weight(&mut rng)));
            edges.push((rng.gen_range(0..i), i));
        }
    }
    let instance = Instance::euclidean(points, "p0", terminals)?;
    Ok((instance, edges))
}
