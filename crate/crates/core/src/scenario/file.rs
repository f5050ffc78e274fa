// SPDX-License-Identifier: Apache-2.0

//! Line-oriented scenario files. See `docs/scenario-format.md` for the
//! grammar. Numbers are written with 17 significant digits so every `f64`
//! survives a save/load cycle bit for bit.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{EdgeMeasurement, MeasurementGraph, NodeId, SelfMeasurement};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::scenario::{GroundTruth, Scenario};

pub const FORMAT_TAG: &str = "netwls-scenario";
pub const FORMAT_VERSION: u32 = 1;

fn number<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.to_f64_lossless())
}

fn write_matrix<T: Scalar>(out: &mut String, key: &str, m: &Matrix<T>) {
    out.push_str(&format!("  {key} {} {}", m.rows(), m.cols()));
    for v in m.as_slice() {
        out.push(' ');
        out.push_str(&number(*v));
    }
    out.push('\n');
}

fn write_vector<T: Scalar>(out: &mut String, key: &str, v: &[T]) {
    out.push_str(&format!("  {key} {}", v.len()));
    for x in v {
        out.push(' ');
        out.push_str(&number(*x));
    }
    out.push('\n');
}

/// Serializes a scenario. Output is a deterministic function of the input.
pub fn render_scenario<T: Scalar>(s: &Scenario<T>) -> String {
    let g = &s.graph;
    let mut out = format!("{FORMAT_TAG} {FORMAT_VERSION}\n");
    if s.meta.iter().any(|(k, v)| k == "topology" && v == "loopy13") {
        out.push_str("# loopy13: 12-node ring plus hub node 13 linked to 1, 4, 7, 10; nodes 2 and 5 unobserved.\n");
        out.push_str("# This layout is a documented stand-in, not a transcription of a published network.\n");
    }
    for (k, v) in &s.meta {
        out.push_str(&format!("meta {k} {v}\n"));
    }
    out.push_str(&format!("nodes {}\n", g.node_count()));
    for spec in g.nodes() {
        out.push_str(&format!("dim {} {}\n", spec.id, spec.dim));
    }
    for (idx, m) in g.self_measurements().iter().enumerate() {
        if m.rows() == 0 {
            continue;
        }
        out.push_str(&format!("self {}\n", m.node));
        write_matrix(&mut out, "A", &m.a);
        write_matrix(&mut out, "R", &m.r);
        write_vector(&mut out, "z", &m.z);
        if let Some(t) = &s.truth {
            write_vector(&mut out, "v", &t.self_noise[idx]);
        }
    }
    for (k, e) in g.edges().iter().enumerate() {
        out.push_str(&format!("edge {} {}\n", e.i, e.j));
        write_matrix(&mut out, "Bij", &e.b_ij);
        write_matrix(&mut out, "Bji", &e.b_ji);
        write_matrix(&mut out, "R", &e.r);
        write_vector(&mut out, "z", &e.z);
        if let Some(t) = &s.truth {
            write_vector(&mut out, "v", &t.edge_noise[k]);
        }
    }
    if let Some(t) = &s.truth {
        out.push_str("truth\n");
        for (i, x) in t.x_true.iter().enumerate() {
            out.push_str(&format!("  x {}", NodeId::from_index(i)));
            for v in x {
                out.push(' ');
                out.push_str(&number(*v));
            }
            out.push('\n');
        }
    }
    out.push_str("end\n");
    out
}

pub fn save_scenario<T: Scalar>(s: &Scenario<T>, path: &Path) -> Result<()> {
    fs::write(path, render_scenario(s)).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn load_scenario<T: Scalar>(path: &Path) -> Result<Scenario<T>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_scenario(&text)
}

#[derive(Default)]
struct PendingSelf<T> {
    line: usize,
    node: usize,
    a: Option<Matrix<T>>,
    r: Option<Matrix<T>>,
    z: Option<Vec<T>>,
    v: Option<Vec<T>>,
}

#[derive(Default)]
struct PendingEdge<T> {
    line: usize,
    i: usize,
    j: usize,
    b_ij: Option<Matrix<T>>,
    b_ji: Option<Matrix<T>>,
    r: Option<Matrix<T>>,
    z: Option<Vec<T>>,
    v: Option<Vec<T>>,
}

enum Block<T> {
    None,
    SelfM(PendingSelf<T>),
    Edge(PendingEdge<T>),
    Truth,
}

struct Cursor<'a> {
    line: usize,
    tokens: Vec<&'a str>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse { line: self.line, message: message.into() }
    }

    fn next(&mut self, what: &str) -> Result<&'a str> {
        let tok = self.tokens.get(self.pos).copied().ok_or_else(|| self.err(format!("missing {what}")))?;
        self.pos += 1;
        Ok(tok)
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let tok = self.next(what)?;
        tok.parse().map_err(|_| self.err(format!("{what}: expected a non-negative integer, got '{tok}'")))
    }

    fn scalar<T: Scalar>(&mut self, what: &str) -> Result<T> {
        let tok = self.next(what)?;
        let v: f64 = tok.parse().map_err(|_| self.err(format!("{what}: expected a number, got '{tok}'")))?;
        if !v.is_finite() {
            return Err(self.err(format!("{what}: non-finite value '{tok}'")));
        }
        Ok(T::of(v))
    }

    fn values<T: Scalar>(&mut self, count: usize, what: &str) -> Result<Vec<T>> {
        let found = self.tokens.len() - self.pos;
        if found != count {
            return Err(self.err(format!("{what}: expected {count} values, found {found}")));
        }
        (0..count).map(|_| self.scalar(what)).collect()
    }

    fn matrix<T: Scalar>(&mut self, what: &str) -> Result<Matrix<T>> {
        let rows = self.usize(&format!("{what} row count"))?;
        let cols = self.usize(&format!("{what} column count"))?;
        let values = self.values(rows * cols, what)?;
        Ok(Matrix::from_row_slice(rows, cols, &values))
    }

    fn vector<T: Scalar>(&mut self, what: &str) -> Result<Vec<T>> {
        let len = self.usize(&format!("{what} length"))?;
        self.values(len, what)
    }

    fn done(&self) -> Result<()> {
        if self.pos == self.tokens.len() {
            Ok(())
        } else {
            Err(self.err(format!("unexpected trailing token '{}'", self.tokens[self.pos])))
        }
    }
}

fn set<V>(slot: &mut Option<V>, value: V, key: &str, cur: &Cursor<'_>) -> Result<()> {
    if slot.is_some() {
        return Err(cur.err(format!("duplicate field '{key}'")));
    }
    *slot = Some(value);
    Ok(())
}

struct Collected<T> {
    meta: Vec<(String, String)>,
    dims: Vec<Option<usize>>,
    selfs: Vec<PendingSelf<T>>,
    edges: Vec<PendingEdge<T>>,
    x_true: Vec<(usize, usize, Vec<T>)>,
}

fn flush<T>(block: &mut Block<T>, out: &mut Collected<T>) {
    match std::mem::replace(block, Block::None) {
        Block::SelfM(s) => out.selfs.push(s),
        Block::Edge(e) => out.edges.push(e),
        Block::None | Block::Truth => {}
    }
}

/// Parses scenario text and validates the resulting graph.
pub fn parse_scenario<T: Scalar>(text: &str) -> Result<Scenario<T>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (first_line, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty file".into() })?;
    let mut cur = Cursor { line: first_line, tokens: header.split_whitespace().collect(), pos: 0 };
    if cur.next("format tag")? != FORMAT_TAG {
        return Err(cur.err(format!("expected format tag '{FORMAT_TAG}'")));
    }
    let version = cur.usize("format version")?;
    if version != FORMAT_VERSION as usize {
        return Err(cur.err(format!("unsupported format version {version}")));
    }
    cur.done()?;

    let mut out =
        Collected::<T> { meta: Vec::new(), dims: Vec::new(), selfs: Vec::new(), edges: Vec::new(), x_true: Vec::new() };
    let mut block = Block::None;
    let mut node_count: Option<usize> = None;
    let mut ended = false;

    for (line, content) in lines {
        if ended {
            return Err(Error::Parse { line, message: "content after 'end'".into() });
        }
        let mut cur = Cursor { line, tokens: content.split_whitespace().collect(), pos: 0 };
        let key = cur.next("keyword")?;
        match (key, &mut block) {
            ("meta", _) => {
                let k = cur.next("meta key")?.to_string();
                let v = cur.tokens[cur.pos..].join(" ");
                out.meta.push((k, v));
                continue;
            }
            ("nodes", _) => {
                if node_count.is_some() {
                    return Err(cur.err("duplicate 'nodes' line"));
                }
                let n = cur.usize("node count")?;
                node_count = Some(n);
                out.dims = vec![None; n];
            }
            ("dim", _) => {
                let id = cur.usize("node id")?;
                let dim = cur.usize("dimension")?;
                let n = node_count.ok_or_else(|| cur.err("'dim' before 'nodes'"))?;
                if id == 0 || id > n {
                    return Err(cur.err(format!("node id {id} outside 1..={n}")));
                }
                set(&mut out.dims[id - 1], dim, "dim", &cur)?;
            }
            ("self", _) => {
                flush(&mut block, &mut out);
                block = Block::SelfM(PendingSelf { line, node: cur.usize("node id")?, ..Default::default() });
            }
            ("edge", _) => {
                flush(&mut block, &mut out);
                let i = cur.usize("edge endpoint")?;
                let j = cur.usize("edge endpoint")?;
                block = Block::Edge(PendingEdge { line, i, j, ..Default::default() });
            }
            ("truth", _) => {
                flush(&mut block, &mut out);
                block = Block::Truth;
            }
            ("end", _) => {
                flush(&mut block, &mut out);
                ended = true;
            }
            ("A", Block::SelfM(s)) => {
                let m = cur.matrix("A")?;
                set(&mut s.a, m, key, &cur)?;
            }
            ("R", Block::SelfM(s)) => {
                let m = cur.matrix("R")?;
                set(&mut s.r, m, key, &cur)?;
            }
            ("z", Block::SelfM(s)) => {
                let v = cur.vector("z")?;
                set(&mut s.z, v, key, &cur)?;
            }
            ("v", Block::SelfM(s)) => {
                let v = cur.vector("v")?;
                set(&mut s.v, v, key, &cur)?;
            }
            ("Bij", Block::Edge(e)) => {
                let m = cur.matrix("Bij")?;
                set(&mut e.b_ij, m, key, &cur)?;
            }
            ("Bji", Block::Edge(e)) => {
                let m = cur.matrix("Bji")?;
                set(&mut e.b_ji, m, key, &cur)?;
            }
            ("R", Block::Edge(e)) => {
                let m = cur.matrix("R")?;
                set(&mut e.r, m, key, &cur)?;
            }
            ("z", Block::Edge(e)) => {
                let v = cur.vector("z")?;
                set(&mut e.z, v, key, &cur)?;
            }
            ("v", Block::Edge(e)) => {
                let v = cur.vector("v")?;
                set(&mut e.v, v, key, &cur)?;
            }
            ("x", Block::Truth) => {
                let id = cur.usize("node id")?;
                let values = cur.tokens.len() - cur.pos;
                let vals = cur.values(values, "x")?;
                out.x_true.push((line, id, vals));
            }
            (other, _) => return Err(cur.err(format!("unexpected keyword '{other}' here"))),
        }
        cur.done()?;
    }
    if !ended {
        flush(&mut block, &mut out);
        return Err(Error::Parse { line: text.lines().count().max(1), message: "missing 'end'".into() });
    }
    assemble(out, node_count)
}

fn assemble<T: Scalar>(out: Collected<T>, node_count: Option<usize>) -> Result<Scenario<T>> {
    let n = node_count.ok_or(Error::Parse { line: 1, message: "missing 'nodes' line".into() })?;
    let dims: Vec<usize> = out
        .dims
        .iter()
        .enumerate()
        .map(|(i, d)| d.ok_or_else(|| Error::Validation(format!("node {} has no 'dim' line", i + 1))))
        .collect::<Result<_>>()?;

    let missing = |what: &str, line: usize| Error::Parse { line, message: format!("block is missing '{what}'") };
    let mut self_measurements = Vec::new();
    let mut self_noise: Vec<Option<Vec<T>>> = Vec::new();
    for s in out.selfs {
        let a = s.a.ok_or_else(|| missing("A", s.line))?;
        let r = s.r.ok_or_else(|| missing("R", s.line))?;
        let z = s.z.ok_or_else(|| missing("z", s.line))?;
        self_noise.push(s.v.clone());
        self_measurements.push((SelfMeasurement { node: NodeId(s.node), a, r, z }, s.v));
    }
    let mut edges = Vec::new();
    let mut edge_noise = Vec::new();
    for e in out.edges {
        let b_ij = e.b_ij.ok_or_else(|| missing("Bij", e.line))?;
        let b_ji = e.b_ji.ok_or_else(|| missing("Bji", e.line))?;
        let r = e.r.ok_or_else(|| missing("R", e.line))?;
        let z = e.z.ok_or_else(|| missing("z", e.line))?;
        edge_noise.push(e.v);
        edges.push(EdgeMeasurement { i: NodeId(e.i), j: NodeId(e.j), b_ij, b_ji, r, z });
    }

    let has_truth = !out.x_true.is_empty();
    let any_noise = self_measurements.iter().any(|(_, v)| v.is_some()) || edge_noise.iter().any(Option::is_some);
    let truth = if has_truth || any_noise {
        let mut x_true: Vec<Option<Vec<T>>> = vec![None; n];
        for (line, id, vals) in out.x_true {
            if id == 0 || id > n {
                return Err(Error::Parse { line, message: format!("truth for unknown node {id}") });
            }
            if vals.len() != dims[id - 1] {
                return Err(Error::Parse { line, message: format!("truth for node {id} has wrong length") });
            }
            x_true[id - 1] = Some(vals);
        }
        let x_true = x_true
            .into_iter()
            .enumerate()
            .map(|(i, x)| x.ok_or_else(|| Error::Validation(format!("ground truth lacks node {}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        let mut per_node = vec![Vec::new(); n];
        for (m, v) in &self_measurements {
            let v =
                v.clone().ok_or_else(|| Error::Validation(format!("self measurement of node {} lacks 'v'", m.node)))?;
            if m.node.0 >= 1 && m.node.0 <= n {
                per_node[m.node.index()] = v;
            }
        }
        let edge_noise = edge_noise
            .into_iter()
            .zip(&edges)
            .map(|(v, e)| v.ok_or_else(|| Error::Validation(format!("edge ({}, {}) lacks 'v'", e.i, e.j))))
            .collect::<Result<Vec<_>>>()?;
        Some(GroundTruth { x_true, self_noise: per_node, edge_noise })
    } else {
        None
    };

    let graph = MeasurementGraph::new(dims, self_measurements.into_iter().map(|(m, _)| m).collect(), edges).map_err(
        |e| match e {
            Error::Validation(_) => e,
            other => Error::Validation(other.to_string()),
        },
    )?;
    if let Some(t) = &truth {
        for (m, v) in graph.self_measurements().iter().zip(&t.self_noise) {
            if v.len() != m.rows() {
                return Err(Error::Validation(format!("noise of node {} has the wrong length", m.node)));
            }
        }
        for (e, v) in graph.edges().iter().zip(&t.edge_noise) {
            if v.len() != e.rows() {
                return Err(Error::Validation(format!("noise of edge ({}, {}) has the wrong length", e.i, e.j)));
            }
        }
    }
    Ok(Scenario { meta: out.meta, graph, truth })
}
