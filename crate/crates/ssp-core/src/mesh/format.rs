//! Plain-text mesh reader.
//!
//! The format is line-oriented; `#` starts a comment, blank lines are
//! ignored. A header line `vertices <V>` is followed by `V` coordinate
//! lines `<x> <y>`, then `cells <C>` followed by `C` lines
//! `<k> <i0> … <ik−1>` listing each cell's vertex count and its 0-based
//! counterclockwise vertex ids.

use super::{MeshError, PolytopalMesh};
use std::path::Path;

pub(super) fn load(path: &Path) -> Result<PolytopalMesh, MeshError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: display.clone(),
        source,
    })?;
    parse(&text, &display)
}

fn parse(text: &str, path: &str) -> Result<PolytopalMesh, MeshError> {
    let err = |line: usize, message: String| MeshError::Parse {
        path: path.to_string(),
        line,
        message,
    };
    // (1-based line number, payload) with comments and blanks stripped.
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (_, nv) = expect_header(&mut lines, "vertices", path)?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = lines
            .next()
            .ok_or_else(|| err(0, format!("expected {nv} vertex lines")))?;
        let mut it = l.split_whitespace();
        let mut coord = [0.0f64; 2];
        for c in &mut coord {
            *c = it
                .next()
                .ok_or_else(|| err(n, "vertex line needs two coordinates".into()))?
                .parse()
                .map_err(|e| err(n, format!("bad coordinate: {e}")))?;
        }
        if it.next().is_some() {
            return Err(err(n, "trailing tokens on vertex line".into()));
        }
        vertices.push(coord);
    }

    let (_, nc) = expect_header(&mut lines, "cells", path)?;
    let mut cell_loops = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (n, l) = lines
            .next()
            .ok_or_else(|| err(0, format!("expected {nc} cell lines")))?;
        let mut it = l.split_whitespace();
        let k: usize = it
            .next()
            .ok_or_else(|| err(n, "cell line needs a vertex count".into()))?
            .parse()
            .map_err(|e| err(n, format!("bad cell vertex count: {e}")))?;
        let ids: Vec<usize> = it
            .map(|t| t.parse().map_err(|e| err(n, format!("bad vertex id: {e}"))))
            .collect::<Result<_, _>>()?;
        if ids.len() != k {
            return Err(err(
                n,
                format!("cell declares {k} vertices but lists {}", ids.len()),
            ));
        }
        cell_loops.push(ids);
    }
    if let Some((n, l)) = lines.next() {
        return Err(err(n, format!("unexpected trailing content `{l}`")));
    }

    PolytopalMesh::from_parts(vertices, cell_loops)
}

/// Consumes one `"<word> <count>"` header line.
fn expect_header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    word: &str,
    path: &str,
) -> Result<(usize, usize), MeshError> {
    let err = |line: usize, message: String| MeshError::Parse {
        path: path.to_string(),
        line,
        message,
    };
    match lines.next() {
        Some((n, l)) => {
            let mut it = l.split_whitespace();
            let (key, count) = (it.next(), it.next());
            if key != Some(word) || it.next().is_some() {
                return Err(err(n, format!("expected `{word} <count>`, got `{l}`")));
            }
            let count = count
                .ok_or_else(|| err(n, format!("missing count after `{word}`")))?
                .parse::<usize>()
                .map_err(|e| err(n, format!("bad {word} count: {e}")))?;
            Ok((n, count))
        }
        None => Err(err(0, format!("missing `{word}` header"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_triangle() {
        let m = parse(
            "# tiny\nvertices 3\n0 0\n1 0\n0 1\ncells 1\n3 0 1 2\n",
            "inline",
        )
        .unwrap();
        assert_eq!((m.n_cells(), m.n_edges(), m.n_vertices()), (1, 3, 3));
    }

    #[test]
    fn reports_line_numbers() {
        let e = parse("vertices 3\n0 0\n1 zebra\n0 1\ncells 1\n3 0 1 2\n", "inline")
            .unwrap_err();
        match e {
            MeshError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_count_mismatch() {
        let e = parse("vertices 3\n0 0\n1 0\n0 1\ncells 1\n4 0 1 2\n", "inline").unwrap_err();
        assert!(matches!(e, MeshError::Parse { .. }));
    }

    #[test]
    fn rejects_trailing_garbage() {
        let e = parse(
            "vertices 3\n0 0\n1 0\n0 1\ncells 1\n3 0 1 2\nextra\n",
            "inline",
        )
        .unwrap_err();
        assert!(matches!(e, MeshError::Parse { .. }));
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let m = parse(
            "\n# header\nvertices 3 # three\n0 0\n\n1 0\n0 1\ncells 1\n3 0 1 2\n# done\n",
            "inline",
        )
        .unwrap();
        assert_eq!(m.n_vertices(), 3);
    }
}
