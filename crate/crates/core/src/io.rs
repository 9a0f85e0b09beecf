//! Text formats: a node-color file (`vertex<TAB>color` per line) and an edge
//! file (`u<TAB>v` per line, repeated lines encoding multiplicity, `u == v`
//! a self-loop). UTF-8; `#`-prefixed comment lines and blank lines ignored.
//!
//! Vertex names and colors are interned to dense ids in order of first
//! appearance in the color file; original names are kept for output.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::graph::{ColoredMultigraph, VertexId};

fn split_pair<'a>(line: &'a str, path: &str, lineno: usize) -> Result<(&'a str, &'a str)> {
    let mut it = line.split('\t');
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => Ok((a, b)),
        _ => Err(Error::Parse {
            path: path.to_string(),
            line: lineno,
            msg: format!("expected two tab-separated fields, got {line:?}"),
        }),
    }
}

fn is_skippable(line: &str) -> bool {
    line.is_empty() || line.starts_with('#')
}

/// Parsed color file: vertex names, color names, and per-vertex color ids.
#[derive(Debug)]
pub struct ColorTable {
    pub vertex_names: Vec<String>,
    pub color_names: Vec<String>,
    pub color_of: Vec<u32>,
    pub index: FxHashMap<String, VertexId>,
}

pub fn parse_colors<R: BufRead>(reader: R, path: &str) -> Result<ColorTable> {
    let mut table = ColorTable {
        vertex_names: Vec::new(),
        color_names: Vec::new(),
        color_of: Vec::new(),
        index: FxHashMap::default(),
    };
    let mut color_index: FxHashMap<String, u32> = FxHashMap::default();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if is_skippable(line) {
            continue;
        }
        let (name, color) = split_pair(line, path, lineno)?;
        if table.index.contains_key(name) {
            return Err(Error::Parse {
                path: path.to_string(),
                line: lineno,
                msg: format!("duplicate vertex {name:?}"),
            });
        }
        let vid = table.vertex_names.len() as VertexId;
        table.index.insert(name.to_string(), vid);
        table.vertex_names.push(name.to_string());
        let cid = *color_index.entry(color.to_string()).or_insert_with(|| {
            table.color_names.push(color.to_string());
            table.color_names.len() as u32 - 1
        });
        table.color_of.push(cid);
    }
    Ok(table)
}

pub fn parse_edges<R: BufRead>(
    reader: R,
    path: &str,
    index: &FxHashMap<String, VertexId>,
) -> Result<Vec<(VertexId, VertexId)>> {
    let mut edges = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if is_skippable(line) {
            continue;
        }
        let (a, b) = split_pair(line, path, lineno)?;
        let lookup = |name: &str| {
            index.get(name).copied().ok_or_else(|| Error::Parse {
                path: path.to_string(),
                line: lineno,
                msg: format!("unknown vertex {name:?} (not in the color file)"),
            })
        };
        edges.push((lookup(a)?, lookup(b)?));
    }
    if edges.is_empty() {
        return Err(Error::InvalidInput(format!("empty edge list in {path}")));
    }
    Ok(edges)
}

pub fn load_graph<P: AsRef<Path>, Q: AsRef<Path>>(
    colors_path: P,
    edges_path: Q,
) -> Result<ColoredMultigraph> {
    let cpath = colors_path.as_ref().display().to_string();
    let epath = edges_path.as_ref().display().to_string();
    let table = parse_colors(BufReader::new(File::open(colors_path.as_ref())?), &cpath)?;
    let edges = parse_edges(BufReader::new(File::open(edges_path.as_ref())?), &epath, &table.index)?;
    ColoredMultigraph::with_names(table.color_of, &edges, table.vertex_names, table.color_names)
}

/// Canonically sorted edge list with original names; multiplicities appear
/// as repeated lines so the format is closed under load-then-emit.
pub fn write_edge_list<W: Write>(g: &ColoredMultigraph, mut w: W) -> Result<()> {
    for (a, b) in g.canonical_edges() {
        writeln!(w, "{}\t{}", g.vertex_name(a), g.vertex_name(b))?;
    }
    Ok(())
}

pub fn write_colors<W: Write>(g: &ColoredMultigraph, mut w: W) -> Result<()> {
    for v in 0..g.n() as VertexId {
        writeln!(w, "{}\t{}", g.vertex_name(v), g.color_name(g.color(v)))?;
    }
    Ok(())
}
