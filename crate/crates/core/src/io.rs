//! JSON Lines graph files and planted-instance sidecars.
//!
//! A graph file starts with a header record `{"n": .., "k": ..}` followed by
//! one `{"u": .., "v": ..}` record per edge.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::clustering::{Clustering, FullGraph, PairKey};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphHeader {
    pub n: usize,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct EdgeRecord {
    u: usize,
    v: usize,
}

/// Truth labels, flip probability, and seed of a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSidecar {
    pub truth: Vec<usize>,
    pub p: f64,
    pub seed: u64,
}

pub fn write_graph_jsonl<W: Write>(g: &FullGraph, k: usize, mut out: W) -> Result<()> {
    let header = GraphHeader { n: g.n(), k };
    writeln!(out, "{}", json(&header)?).map_err(io_err)?;
    for e in g.edges() {
        let rec = EdgeRecord { u: e.u(), v: e.v() };
        writeln!(out, "{}", json(&rec)?).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_graph_jsonl<R: BufRead>(input: R) -> Result<(FullGraph, GraphHeader)> {
    let mut lines = input
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));

    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::invalid("graph file is empty"))?;
    let header: GraphHeader = serde_json::from_str(&first.map_err(io_err)?)
        .map_err(|e| Error::invalid(format!("line 1: bad header: {e}")))?;
    if header.k == 0 {
        return Err(Error::invalid("header k must be at least 1"));
    }

    let mut g = FullGraph::empty(header.n);
    for (i, line) in lines {
        let line = line.map_err(io_err)?;
        let rec: EdgeRecord = serde_json::from_str(&line)
            .map_err(|e| Error::invalid(format!("line {}: bad edge: {e}", i + 1)))?;
        g.set_edge(PairKey::checked(rec.u, rec.v, header.n)?, true);
    }
    Ok((g, header))
}

pub fn clustering_to_json(c: &Clustering) -> Result<String> {
    json(c)
}

pub fn clustering_from_json(s: &str) -> Result<Clustering> {
    serde_json::from_str(s).map_err(|e| Error::invalid(format!("bad clustering: {e}")))
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::invalid(e.to_string()))
}

fn io_err(e: std::io::Error) -> Error {
    Error::invalid(format!("i/o: {e}"))
}
