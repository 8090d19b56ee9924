//! Directed, integer-weighted edge lists to symmetric capped weight matrices.

use std::collections::HashMap;
use std::io::{Read, Write};

use sbmtest_core::graph::WeightedGraph;

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    /// Upper bound on an undirected weight.
    pub cap: u64,
    /// Drop `A A w` records (the node is still registered). When false they are an error.
    pub drop_self_loops: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            cap: 127,
            drop_self_loops: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeListDocument {
    /// `(src, dst, weight)` as 0-based node indices.
    pub records: Vec<(usize, usize, u64)>,
    /// Node ids in first-appearance order; index `i` is node `i`.
    pub nodes: Vec<String>,
}

impl EdgeListDocument {
    /// Starts from a fixed node list, so indices follow it and isolated
    /// nodes survive.
    pub fn with_nodes(nodes: Vec<String>) -> CliResult<Self> {
        let mut seen = HashMap::new();
        for (i, id) in nodes.iter().enumerate() {
            if seen.insert(id.as_str(), i).is_some() {
                return Err(CliError::Parse(format!("node {id:?} listed twice")));
            }
        }
        Ok(Self {
            records: Vec::new(),
            nodes,
        })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }
}

/// Parses `src<TAB>dst<TAB>weight` lines. Blank lines and lines starting
/// with `#` are skipped; anything else malformed is reported with its line number.
pub fn parse_edge_list<R: Read>(input: R, doc: &mut EdgeListDocument, opts: &IngestOptions) -> CliResult<()> {
    let mut index: HashMap<String, usize> = doc.nodes.iter().cloned().zip(0..).collect();
    let mut text = String::new();
    let mut input = input;
    input.read_to_string(&mut text)?;
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(CliError::Parse(format!(
                "line {lineno}: expected 3 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let (src, dst) = (fields[0].trim(), fields[1].trim());
        if src.is_empty() || dst.is_empty() {
            return Err(CliError::Parse(format!("line {lineno}: empty node id")));
        }
        let raw = fields[2].trim();
        let weight: u64 = raw.parse().map_err(|_| {
            if raw.starts_with('-') && raw[1..].parse::<u64>().is_ok() {
                CliError::Core(sbmtest_core::error::Error::Domain(format!(
                    "line {lineno}: negative weight {raw}"
                )))
            } else {
                CliError::Parse(format!("line {lineno}: weight {raw:?} is not a nonnegative integer"))
            }
        })?;
        let mut id = |name: &str| {
            let next = index.len();
            *index.entry(name.to_string()).or_insert_with(|| {
                doc.nodes.push(name.to_string());
                next
            })
        };
        let (a, b) = (id(src), id(dst));
        if a == b {
            if opts.drop_self_loops {
                continue;
            }
            return Err(CliError::Core(sbmtest_core::error::Error::Domain(format!(
                "line {lineno}: self-loop on {src:?}"
            ))));
        }
        doc.records.push((a, b, weight));
    }
    Ok(())
}

/// `w(A, B) = min(w(A -> B) + w(B -> A), cap)` after summing repeated records.
pub fn symmetrize(doc: &EdgeListDocument, opts: &IngestOptions) -> WeightedGraph {
    let n = doc.n();
    let mut directed: HashMap<(usize, usize), u64> = HashMap::new();
    for &(a, b, w) in &doc.records {
        let e = directed.entry((a, b)).or_insert(0);
        *e = e.saturating_add(w);
    }
    let mut pairs: HashMap<(usize, usize), u64> = HashMap::new();
    for (&(a, b), &w) in &directed {
        let e = pairs.entry((a.min(b), a.max(b))).or_insert(0);
        *e = e.saturating_add(w);
    }
    WeightedGraph::from_upper(n, |i, j| pairs.get(&(i, j)).map_or(0, |&w| w.min(opts.cap)) as f64)
}

pub fn ingest<R: Read>(input: R, nodes: Option<Vec<String>>, opts: &IngestOptions) -> CliResult<(WeightedGraph, Vec<String>)> {
    let mut doc = match nodes {
        Some(nodes) => EdgeListDocument::with_nodes(nodes)?,
        None => EdgeListDocument::default(),
    };
    parse_edge_list(input, &mut doc, opts)?;
    let g = symmetrize(&doc, opts);
    Ok((g, doc.nodes))
}

/// Writes the undirected graph back as an edge list, one `i < j` pair per
/// positive weight, so that re-ingesting it with the same node list
/// reproduces the graph.
pub fn export_edge_list<W: Write>(g: &WeightedGraph, nodes: &[String], mut out: W) -> CliResult<()> {
    let n = g.n();
    for i in 0..n {
        for j in i + 1..n {
            let w = g.weight(i, j);
            if w != 0.0 {
                writeln!(out, "{}\t{}\t{}", nodes[i], nodes[j], w)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// `index<TAB>node_id` lines.
pub fn write_nodes<W: Write>(nodes: &[String], mut out: W) -> CliResult<()> {
    for (i, id) in nodes.iter().enumerate() {
        writeln!(out, "{i}\t{id}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_nodes<R: Read>(mut input: R) -> CliResult<Vec<String>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut nodes = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let (idx, id) = line
            .split_once('\t')
            .ok_or_else(|| CliError::Parse(format!("nodes line {}: expected index<TAB>id", lineno + 1)))?;
        if idx.trim().parse::<usize>().ok() != Some(nodes.len()) {
            return Err(CliError::Parse(format!(
                "nodes line {}: index {idx:?} out of sequence",
                lineno + 1
            )));
        }
        nodes.push(id.to_string());
    }
    Ok(nodes)
}

/// Ids of the first list, then ids of the second that the first lacks.
pub fn union_universe(a: &[String], b: &[String]) -> Vec<String> {
    let mut seen: std::collections::HashSet<&str> = a.iter().map(String::as_str).collect();
    let mut out = a.to_vec();
    for id in b {
        if seen.insert(id) {
            out.push(id.clone());
        }
    }
    out
}

/// Re-indexes `g` onto `universe`; nodes missing from `ids` get zero rows.
pub fn align_to_universe(g: &WeightedGraph, ids: &[String], universe: &[String]) -> CliResult<WeightedGraph> {
    if ids.len() != g.n() {
        return Err(CliError::Core(sbmtest_core::error::Error::DimensionMismatch(format!(
            "{} node ids for a graph on {} nodes",
            ids.len(),
            g.n()
        ))));
    }
    let pos: HashMap<&str, usize> = universe.iter().map(String::as_str).zip(0..).collect();
    let map: Vec<usize> = ids
        .iter()
        .map(|id| {
            pos.get(id.as_str())
                .copied()
                .ok_or_else(|| CliError::Parse(format!("node {id:?} is not in the universe")))
        })
        .collect::<CliResult<_>>()?;
    let mut inverse = vec![None; universe.len()];
    for (i, &u) in map.iter().enumerate() {
        inverse[u] = Some(i);
    }
    Ok(WeightedGraph::from_upper(universe.len(), |a, b| match (inverse[a], inverse[b]) {
        (Some(i), Some(j)) => g.weight(i, j),
        _ => 0.0,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> (WeightedGraph, Vec<String>) {
        ingest(text.as_bytes(), None, &IngestOptions::default()).unwrap()
    }

    #[test]
    fn directions_are_summed() {
        let (g, nodes) = run("A\tB\t3\nB\tA\t2\n");
        assert_eq!(nodes, ["A", "B"]);
        assert_eq!(g.weight(0, 1), 5.0);
        assert_eq!(g.weight(1, 0), 5.0);
    }

    #[test]
    fn cap_binds() {
        let (g, _) = run("A\tB\t100\nB\tA\t100\n");
        assert_eq!(g.weight(0, 1), 127.0);
        let (g, _) = ingest(&b"A\tB\t100\nB\tA\t100\n"[..], None, &IngestOptions { cap: 1000, ..Default::default() }).unwrap();
        assert_eq!(g.weight(0, 1), 200.0);
    }

    #[test]
    fn self_loops_keep_the_node() {
        let (g, nodes) = run("A\tA\t5\n");
        assert_eq!(nodes, ["A"]);
        assert_eq!(g.weight(0, 0), 0.0);
        let strict = IngestOptions {
            drop_self_loops: false,
            ..Default::default()
        };
        assert!(ingest(&b"A\tA\t5\n"[..], None, &strict).is_err());
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let err = ingest(&b"A\tB\t1\n\nA\tB\n"[..], None, &IngestOptions::default()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = ingest(&b"A\tB\t-4\n"[..], None, &IngestOptions::default()).unwrap_err();
        assert_eq!(err.kind(), "domain");
        let err = ingest(&b"A\tB\t1.5\n"[..], None, &IngestOptions::default()).unwrap_err();
        assert_eq!(err.kind(), "parse");
    }

    #[test]
    fn export_and_reingest_is_idempotent() {
        let text = "x\ty\t4\ny\tz\t300\nz\tx\t1\nw\tw\t2\nx\ty\t7\n";
        let (g, nodes) = run(text);
        let mut buf = Vec::new();
        export_edge_list(&g, &nodes, &mut buf).unwrap();
        let (g2, nodes2) = ingest(&buf[..], Some(nodes.clone()), &IngestOptions::default()).unwrap();
        assert_eq!(g, g2);
        assert_eq!(nodes, nodes2);
    }

    #[test]
    fn universe_union_pads_missing_nodes() {
        let (g1, n1) = run("a\tb\t1\n");
        let (g2, n2) = run("c\tb\t2\n");
        let u = union_universe(&n1, &n2);
        assert_eq!(u, ["a", "b", "c"]);
        let a1 = align_to_universe(&g1, &n1, &u).unwrap();
        let a2 = align_to_universe(&g2, &n2, &u).unwrap();
        assert_eq!(a1.weight(0, 1), 1.0);
        assert_eq!(a1.weight(1, 2), 0.0);
        assert_eq!(a2.weight(1, 2), 2.0);
        assert_eq!(a2.weight(0, 1), 0.0);
    }

    #[test]
    fn nodes_file_round_trip() {
        let nodes = vec!["a b".to_string(), "c".to_string()];
        let mut buf = Vec::new();
        write_nodes(&nodes, &mut buf).unwrap();
        assert_eq!(read_nodes(&buf[..]).unwrap(), nodes);
        assert!(read_nodes(&b"1\tx\n"[..]).is_err());
    }
}
