use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Graph, RawEdge};

/// Undirected edge list as read from disk, before any cleanup.
///
/// Every entry has `i >= j`; diagonal entries (self-loops) are kept so that
/// [`preprocess`](super::preprocess) can report on them.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGraph {
    pub n: usize,
    pub edges: Vec<RawEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<RawGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_matrix_market(BufReader::new(file))
}

/// Parses a coordinate-format Matrix Market stream into an undirected edge list.
///
/// Symmetric (and skew-symmetric) files contribute one edge per stored entry.
/// General files are symmetrized: repeated coordinates are summed, then the
/// `(i, j)` and `(j, i)` entries of each pair are averaged into one edge (an
/// entry without a mirror is taken as is). Pattern files get unit weights.
pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<RawGraph> {
    let mut lines = reader.lines().enumerate();

    let (lineno, header) = match lines.next() {
        Some((k, line)) => (k + 1, line?),
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty file".into(),
            })
        }
    };
    let (field, symmetry) = parse_header(&header, lineno)?;

    let mut size: Option<(usize, usize)> = None;
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for (k, line) in lines {
        let lineno = k + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if tokens.len() != 3 {
                    return Err(parse_err(lineno, "size line needs `rows cols nnz`"));
                }
                let rows = parse_usize(tokens[0], lineno)?;
                let cols = parse_usize(tokens[1], lineno)?;
                let nnz = parse_usize(tokens[2], lineno)?;
                if rows != cols {
                    return Err(Error::UnsupportedFormat(format!(
                        "adjacency matrix must be square, got {rows}x{cols}"
                    )));
                }
                entries.reserve(nnz);
                size = Some((rows, nnz));
            }
            Some((n, _)) => {
                let want = if field == Field::Pattern { 2 } else { 3 };
                if tokens.len() < want {
                    return Err(parse_err(lineno, "entry has too few fields"));
                }
                let i = parse_usize(tokens[0], lineno)?;
                let j = parse_usize(tokens[1], lineno)?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(parse_err(
                        lineno,
                        &format!("index ({i}, {j}) outside 1..={n}"),
                    ));
                }
                let w = match field {
                    Field::Pattern => 1.0,
                    Field::Real => tokens[2]
                        .parse::<f64>()
                        .map_err(|_| parse_err(lineno, &format!("bad value `{}`", tokens[2])))?,
                };
                entries.push((i, j, w));
            }
        }
    }

    let (n, nnz) = size.ok_or_else(|| parse_err(lineno, "missing size line"))?;
    if entries.len() != nnz {
        return Err(Error::Parse {
            line: lineno,
            message: format!("expected {nnz} entries, found {}", entries.len()),
        });
    }

    let edges = match symmetry {
        Symmetry::Symmetric => entries
            .into_iter()
            .map(|(i, j, w)| {
                let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
                RawEdge::new(hi, lo, w)
            })
            .collect(),
        Symmetry::General => symmetrize(entries),
    };
    Ok(RawGraph { n, edges })
}

fn symmetrize(entries: Vec<(usize, usize, f64)>) -> Vec<RawEdge> {
    // (hi, lo) -> [lower-side sum, upper-side sum] with presence flags
    let mut pairs: BTreeMap<(usize, usize), [Option<f64>; 2]> = BTreeMap::new();
    for (i, j, w) in entries {
        let (key, side) = if i >= j { ((i, j), 0) } else { ((j, i), 1) };
        let slot = &mut pairs.entry(key).or_insert([None, None])[side];
        *slot = Some(slot.unwrap_or(0.0) + w);
    }
    pairs
        .into_iter()
        .map(|((hi, lo), sides)| {
            let w = match sides {
                [Some(a), Some(b)] if hi != lo => 0.5 * (a + b),
                [Some(a), Some(b)] => a + b,
                [Some(a), None] | [None, Some(a)] => a,
                [None, None] => unreachable!(),
            };
            RawEdge::new(hi, lo, w)
        })
        .collect()
}

fn parse_header(header: &str, line: usize) -> Result<(Field, Symmetry)> {
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(line, "missing `%%MatrixMarket matrix` banner"));
    }
    if tokens[2] != "coordinate" {
        return Err(Error::UnsupportedFormat(format!("{} storage", tokens[2])));
    }
    let field = match tokens[3].as_str() {
        "real" | "integer" | "double" => Field::Real,
        "pattern" => Field::Pattern,
        other => return Err(Error::UnsupportedFormat(format!("{other} field"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        // sign is discarded by preprocessing, so skew-symmetric reads like symmetric
        "symmetric" | "skew-symmetric" => Symmetry::Symmetric,
        other => return Err(Error::UnsupportedFormat(format!("{other} symmetry"))),
    };
    Ok((field, symmetry))
}

fn parse_usize(token: &str, line: usize) -> Result<usize> {
    token
        .parse::<usize>()
        .map_err(|_| parse_err(line, &format!("bad integer `{token}`")))
}

fn parse_err(line: usize, message: &str) -> Error {
    Error::Parse {
        line,
        message: message.to_string(),
    }
}

/// Writes the lower triangle of the graph's weighted adjacency as a
/// symmetric real coordinate file. Weights use the shortest round-trip
/// decimal form, so reading the file back gives bit-identical weights.
pub fn write_matrix_market<W: Write>(g: &Graph, mut w: W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", g.n(), g.n(), g.m())?;
    for e in g.edges() {
        writeln!(w, "{} {} {}", e.hi + 1, e.lo + 1, e.weight)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RawGraph> {
        parse_matrix_market(s.as_bytes())
    }

    #[test]
    fn reads_k3() {
        let raw = parse(
            "%%MatrixMarket matrix coordinate pattern symmetric\n% comment\n3 3 3\n2 1\n3 1\n3 2\n",
        )
        .unwrap();
        assert_eq!(raw.n, 3);
        assert_eq!(
            raw.edges,
            vec![
                RawEdge::new(2, 1, 1.0),
                RawEdge::new(3, 1, 1.0),
                RawEdge::new(3, 2, 1.0)
            ]
        );
    }

    #[test]
    fn keeps_diagonal_for_preprocess() {
        let raw =
            parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 5.0\n2 1 -1.5\n")
                .unwrap();
        assert_eq!(raw.edges[0], RawEdge::new(1, 1, 5.0));
        assert_eq!(raw.edges[1], RawEdge::new(2, 1, -1.5));
    }

    #[test]
    fn general_file_is_symmetrized() {
        let raw = parse(
            "%%MatrixMarket matrix coordinate real general\n3 3 3\n2 1 -1\n1 2 -1\n1 3 2.0\n",
        )
        .unwrap();
        assert_eq!(
            raw.edges,
            vec![RawEdge::new(2, 1, -1.0), RawEdge::new(3, 1, 2.0)]
        );
    }

    #[test]
    fn upper_triangle_is_flipped() {
        let raw =
            parse("%%MatrixMarket matrix coordinate integer symmetric\n3 3 1\n1 3 4\n").unwrap();
        assert_eq!(raw.edges, vec![RawEdge::new(3, 1, 4.0)]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate complex general\n1 1 0\n"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            parse("%%MatrixMarket matrix array real general\n1 1\n"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(parse("hello\n"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1.0\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 3 1.0\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 x\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate real general\n2 3 0\n"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            read_matrix_market("/nonexistent/file.mtx"),
            Err(Error::Io(_))
        ));
    }
}
