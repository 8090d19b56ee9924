//! File formats: dense CSV graphs, membership TSV, model specs and reports.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use sbmtest_core::graph::{SymmetricColumns, WeightedGraph};
use sbmtest_core::model::{BlockModelSpec, Membership, SpecDocument};

use crate::{CliError, CliResult};

/// Writes a dense graph: a header row `0,1,...,n-1`, then one row per node.
/// Values use the shortest representation that parses back to the same
/// `f64`, so integers are written verbatim.
pub fn write_graph_csv<W: Write>(graph: &impl SymmetricColumns, out: W) -> CliResult<()> {
    let n = graph.n();
    let mut w = csv::WriterBuilder::new().from_writer(out);
    w.write_record((0..n).map(|i| i.to_string()))?;
    let mut row = Vec::with_capacity(n);
    for i in 0..n {
        row.clear();
        // symmetric, so column i doubles as row i
        row.extend(graph.column(i).iter().map(|&x| format!("{}", Into::<f64>::into(x))));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_graph_csv<R: Read>(input: R) -> CliResult<WeightedGraph> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let n = r.headers()?.len();
    for (i, h) in r.headers()?.iter().enumerate() {
        if h.trim() != i.to_string() {
            return Err(CliError::Parse(format!("header column {} is {h:?}, expected {i}", i + 1)));
        }
    }
    let mut data = vec![0.0; n * n];
    let mut rows = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if i >= n {
            return Err(CliError::Parse(format!("more than {n} data rows")));
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                CliError::Parse(format!("row {}, column {}: {field:?} is not a number", i + 2, j + 1))
            })?;
            data[j * n + i] = v;
        }
        rows += 1;
    }
    if rows != n {
        return Err(CliError::Parse(format!("{rows} data rows for {n} header columns")));
    }
    Ok(WeightedGraph::from_matrix(DMatrix::from_vec(n, n, data))?)
}

pub fn load_graph(path: &Path) -> CliResult<WeightedGraph> {
    read_graph_csv(BufReader::new(open(path)?))
}

pub fn save_graph(graph: &impl SymmetricColumns, path: &Path) -> CliResult<()> {
    write_graph_csv(graph, BufWriter::new(create(path)?))
}

/// `node_id<TAB>label` lines with 1-based labels; node ids are indices unless given.
pub fn write_membership<W: Write>(m: &Membership, ids: Option<&[String]>, mut out: W) -> CliResult<()> {
    for (i, &l) in m.labels().iter().enumerate() {
        match ids {
            Some(ids) => writeln!(out, "{}\t{}", ids[i], l + 1)?,
            None => writeln!(out, "{}\t{}", i, l + 1)?,
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a membership written by [`write_membership`] for nodes `0..n` in order.
pub fn read_membership<R: Read>(input: R, k: Option<usize>) -> CliResult<Membership> {
    let mut r = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .from_reader(input);
    let mut labels = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(CliError::Parse(format!("line {}: expected node_id<TAB>label", line + 1)));
        }
        let label: usize = rec[1]
            .trim()
            .parse()
            .ok()
            .filter(|&l| l >= 1)
            .ok_or_else(|| CliError::Parse(format!("line {}: label {:?} is not a positive integer", line + 1, &rec[1])))?;
        labels.push(label - 1);
    }
    let k = k.unwrap_or_else(|| labels.iter().max().map_or(0, |&l| l + 1));
    Ok(Membership::from_labels(labels, k)?)
}

pub fn load_spec(path: &Path) -> CliResult<BlockModelSpec> {
    let doc: SpecDocument = serde_json::from_reader(BufReader::new(open(path)?))?;
    Ok(doc.try_into()?)
}

pub fn save_spec(spec: &BlockModelSpec, path: &Path) -> CliResult<()> {
    let doc = SpecDocument::try_from(spec)?;
    let mut w = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    Ok(())
}

pub(crate) fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub(crate) fn create(path: &Path) -> CliResult<File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
