//! Edge-list and parameter-file formats.
//!
//! Edge lists are CSV with one `src,dst` pair of 0-based indices per line.
//! An optional `src,dst` header, blank lines and `#` comments are allowed.
//! A `# nodes=N` comment fixes the node count, which otherwise defaults to
//! one more than the largest index.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::asymptotics::AsymptoticTable;
use crate::error::{Error, Result};
use crate::estimator::EstimateReport;
use crate::model::{Digraph, ParamVector};

struct Pending {
    edges: Vec<(usize, usize, usize)>,
    self_loop: Option<usize>,
    nodes_hint: Option<usize>,
    max_index: Option<usize>,
}

/// Line of the earliest edge that repeats one on an earlier line.
fn first_duplicate(edges: &mut [(usize, usize, usize)]) -> Option<usize> {
    edges.sort_unstable();
    edges.windows(2).filter(|w| w[0].0 == w[1].0 && w[0].1 == w[1].1).map(|w| w[1].2).min()
}

fn earliest(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}

fn parse_index(s: &str, line: usize) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Parse { line, msg: format!("invalid node index {:?}", s.trim()) })
}

fn parse_line(p: &mut Pending, raw: &str, line: usize) -> Result<()> {
    let text = raw.trim();
    if text.is_empty() {
        return Ok(());
    }
    if let Some(comment) = text.strip_prefix('#') {
        if let Some(v) = comment.trim().strip_prefix("nodes=") {
            p.nodes_hint = Some(parse_index(v, line)?);
        }
        return Ok(());
    }
    if p.edges.is_empty() && p.self_loop.is_none() && text.eq_ignore_ascii_case("src,dst") {
        return Ok(());
    }
    let mut fields = text.split(',');
    let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
        return Err(Error::Parse { line, msg: "expected exactly two fields".into() });
    };
    let (i, j) = (parse_index(a, line)?, parse_index(b, line)?);
    if i == j {
        p.self_loop.get_or_insert(line);
    }
    p.max_index = Some(p.max_index.map_or(i.max(j), |m| m.max(i).max(j)));
    p.edges.push((i, j, line));
    Ok(())
}

/// Parses an edge list from any reader; `nodes` overrides the node count.
pub fn read_edge_list<R: Read>(reader: R, nodes: Option<usize>) -> Result<Digraph> {
    let mut p = Pending { edges: Vec::new(), self_loop: None, nodes_hint: None, max_index: None };
    for (k, raw) in BufReader::new(reader).lines().enumerate() {
        let line = k + 1;
        let raw = raw?;
        if let Err(e) = parse_line(&mut p, &raw, line) {
            let before = earliest(p.self_loop, first_duplicate(&mut p.edges));
            return Err(match before {
                Some(l) => line_error(&p, l),
                None => e,
            });
        }
    }
    let dup = first_duplicate(&mut p.edges);
    if let Some(l) = earliest(p.self_loop, dup) {
        return Err(line_error(&p, l));
    }
    let inferred = p.max_index.map_or(0, |m| m + 1);
    let n = nodes.or(p.nodes_hint).unwrap_or(inferred);
    if inferred > n {
        let line = p.edges.iter().filter(|e| e.0.max(e.1) >= n).map(|e| e.2).min().unwrap_or(0);
        return Err(Error::Parse { line, msg: format!("node index out of range for {n} nodes") });
    }
    Digraph::from_edges(n, p.edges.into_iter().map(|(i, j, _)| (i, j)))
}

fn line_error(p: &Pending, line: usize) -> Error {
    if p.self_loop == Some(line) {
        Error::SelfLoop(line)
    } else {
        Error::DuplicateEdge(line)
    }
}

pub fn parse_edge_list(path: &Path, nodes: Option<usize>) -> Result<Digraph> {
    read_edge_list(fs::File::open(path)?, nodes)
}

pub fn parse_edge_list_str(text: &str, nodes: Option<usize>) -> Result<Digraph> {
    read_edge_list(text.as_bytes(), nodes)
}

/// Serialises a graph with a `# nodes=N` line so isolated nodes survive.
pub fn format_edge_list(g: &Digraph) -> String {
    let mut s = format!("# nodes={}\nsrc,dst\n", g.n());
    for (i, j) in g.edges() {
        writeln!(s, "{i},{j}").unwrap();
    }
    s
}

pub fn write_edge_list(g: &Digraph, path: &Path) -> Result<()> {
    Ok(fs::write(path, format_edge_list(g))?)
}

pub fn read_params(path: &Path) -> Result<ParamVector> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })
}

pub fn write_params(v: &ParamVector, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    Ok(fs::write(path, text + "\n")?)
}

/// One row per node: estimates and, when available, standard errors.
pub fn node_csv(est: &EstimateReport, table: Option<&AsymptoticTable>) -> String {
    let se = |v: &[f64], i: usize| v.get(i).map_or(String::new(), |x| format!("{}", x.sqrt()));
    let mut s = String::from("node,alpha,beta,se_alpha,se_beta\n");
    for i in 0..est.n() {
        let (sa, sb) = match table {
            Some(t) => (se(&t.sigma_alpha2, i), se(&t.sigma_beta2, i)),
            None => (String::new(), String::new()),
        };
        writeln!(s, "{i},{},{},{sa},{sb}", est.alpha[i], est.beta[i]).unwrap();
    }
    s
}
