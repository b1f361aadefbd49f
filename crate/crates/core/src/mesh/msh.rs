//! Gmsh MSH version 2 ASCII, restricted to 2-node lines (type 1, read as
//! tagged boundary edges) and 3-node triangles (type 2). The first element
//! tag is the physical tag. Unknown sections are skipped; `z` is ignored.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{BoundaryEdge, Mesh};
use crate::{Error, Result};

pub fn load_msh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_msh(&text, path)
}

pub fn save_msh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_msh(mesh)).map_err(|e| Error::io(path, e))
}

pub fn write_msh(mesh: &Mesh) -> String {
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    let _ = writeln!(s, "{}", mesh.n_nodes());
    for (i, p) in mesh.nodes.iter().enumerate() {
        // `{:?}` prints the shortest representation that round-trips
        let _ = writeln!(s, "{} {:?} {:?} 0", i + 1, p[0], p[1]);
    }
    s.push_str("$EndNodes\n$Elements\n");
    let _ = writeln!(s, "{}", mesh.boundary_edges.len() + mesh.n_elements());
    let mut id = 1;
    for be in &mesh.boundary_edges {
        let _ = writeln!(
            s,
            "{id} 1 2 {} {} {} {}",
            be.tag,
            be.tag,
            be.nodes[0] + 1,
            be.nodes[1] + 1
        );
        id += 1;
    }
    for (e, el) in mesh.elements.iter().enumerate() {
        let t = mesh.element_tags[e];
        let [a, b, c] = el.nodes;
        let _ = writeln!(s, "{id} 2 2 {t} {t} {} {} {}", a + 1, b + 1, c + 1);
        id += 1;
    }
    s.push_str("$EndElements\n");
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    path: PathBuf,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Option<&'a str> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let l = l.trim();
            if !l.is_empty() {
                return Some(l);
            }
        }
        None
    }

    fn expect_line(&mut self, what: &str) -> Result<&'a str> {
        self.next_line()
            .ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: self.line,
            msg: msg.into(),
        }
    }

    fn count(&mut self, what: &str) -> Result<usize> {
        let l = self.expect_line(what)?;
        l.parse()
            .map_err(|_| self.err(format!("expected {what}, found {l:?}")))
    }

    fn expect_end(&mut self, section: &str) -> Result<()> {
        let l = self.expect_line(section)?;
        if l != section {
            return Err(self.err(format!("expected {section}, found {l:?}")));
        }
        Ok(())
    }
}

/// Parses MSH 2 text; `path` is only used in error messages.
pub fn parse_msh(text: &str, path: impl AsRef<Path>) -> Result<Mesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        path: path.as_ref().to_path_buf(),
        line: 0,
    };
    let mut nodes = Vec::new();
    let mut node_index: HashMap<usize, usize> = HashMap::new();
    let mut raw_lines: Vec<(usize, [usize; 2], i32)> = Vec::new();
    let mut raw_tris: Vec<(usize, [usize; 3], i32)> = Vec::new();
    let mut seen_format = false;

    while let Some(header) = lines.next_line() {
        match header {
            "$MeshFormat" => {
                let l = lines.expect_line("format line")?;
                let version = l.split_whitespace().next().unwrap_or("");
                if !version.starts_with('2') {
                    return Err(lines.err(format!("unsupported MSH version {version:?}")));
                }
                if l.split_whitespace().nth(1) != Some("0") {
                    return Err(lines.err("binary MSH is not supported"));
                }
                lines.expect_end("$EndMeshFormat")?;
                seen_format = true;
            }
            "$Nodes" => {
                let n = lines.count("node count")?;
                nodes.reserve(n);
                for _ in 0..n {
                    let l = lines.expect_line("node")?;
                    let f: Vec<&str> = l.split_whitespace().collect();
                    if f.len() < 3 {
                        return Err(lines.err(format!("malformed node line {l:?}")));
                    }
                    let id: usize = f[0]
                        .parse()
                        .map_err(|_| lines.err(format!("bad node id {:?}", f[0])))?;
                    let x: f64 = f[1]
                        .parse()
                        .map_err(|_| lines.err(format!("bad coordinate {:?}", f[1])))?;
                    let y: f64 = f[2]
                        .parse()
                        .map_err(|_| lines.err(format!("bad coordinate {:?}", f[2])))?;
                    if node_index.insert(id, nodes.len()).is_some() {
                        return Err(lines.err(format!("duplicate node id {id}")));
                    }
                    nodes.push([x, y]);
                }
                lines.expect_end("$EndNodes")?;
            }
            "$Elements" => {
                let n = lines.count("element count")?;
                for _ in 0..n {
                    let l = lines.expect_line("element")?;
                    let f: Vec<usize> = l
                        .split_whitespace()
                        .map(|t| t.parse::<i64>().map(|v| v.max(0) as usize))
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| lines.err(format!("malformed element line {l:?}")))?;
                    if f.len() < 3 {
                        return Err(lines.err(format!("malformed element line {l:?}")));
                    }
                    let (ty, ntags) = (f[1], f[2]);
                    let conn = f.get(3 + ntags..).unwrap_or(&[]);
                    let tag = if ntags > 0 { f[3] as i32 } else { 0 };
                    let resolve = |id: usize| {
                        node_index
                            .get(&id)
                            .copied()
                            .ok_or_else(|| lines.err(format!("node {id} out of range")))
                    };
                    match ty {
                        1 if conn.len() == 2 => {
                            raw_lines.push((
                                lines.line,
                                [resolve(conn[0])?, resolve(conn[1])?],
                                tag,
                            ));
                        }
                        2 if conn.len() == 3 => {
                            raw_tris.push((
                                lines.line,
                                [resolve(conn[0])?, resolve(conn[1])?, resolve(conn[2])?],
                                tag,
                            ));
                        }
                        1 | 2 => {
                            return Err(
                                lines.err(format!("element type {ty} with {} nodes", conn.len()))
                            )
                        }
                        other => return Err(lines.err(format!("unsupported element type {other}"))),
                    }
                }
                lines.expect_end("$EndElements")?;
            }
            h if h.starts_with("$End") => {
                return Err(lines.err(format!("unmatched section end {h:?}")))
            }
            h if h.starts_with('$') => {
                let end = format!("$End{}", &h[1..]);
                loop {
                    let l = lines.expect_line(&end)?;
                    if l == end {
                        break;
                    }
                }
            }
            other => return Err(lines.err(format!("expected a section header, found {other:?}"))),
        }
    }
    if !seen_format {
        return Err(Error::Parse {
            path: path.as_ref().to_path_buf(),
            line: 0,
            msg: "missing $MeshFormat".into(),
        });
    }

    let tags: Vec<i32> = raw_tris.iter().map(|t| t.2).collect();
    let tris: Vec<[usize; 3]> = raw_tris.iter().map(|t| t.1).collect();
    for (line, t, _) in &raw_tris {
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            return Err(Error::Parse {
                path: path.as_ref().into(),
                line: *line,
                msg: "triangle repeats a node".into(),
            });
        }
    }
    let boundary = raw_lines
        .iter()
        .map(|(_, n, tag)| BoundaryEdge {
            nodes: *n,
            tag: *tag,
        })
        .collect();
    Mesh::from_triangles(nodes, tris, boundary)?.with_element_tags(tags)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n$EndNodes\n\
$Elements\n6\n1 1 2 1 1 1 2\n2 1 2 2 2 2 3\n3 1 2 3 3 3 4\n4 1 2 4 4 4 1\n5 2 2 7 7 1 2 3\n6 2 2 7 7 1 3 4\n$EndElements\n";

    #[test]
    fn minimal_square() {
        let m = parse_msh(SQUARE, "square.msh").unwrap();
        assert_eq!(m.n_nodes(), 4);
        assert_eq!(m.n_elements(), 2);
        assert_eq!(m.boundary_edges.len(), 4);
        assert_eq!(m.element_tags, vec![7, 7]);
    }

    #[test]
    fn quadrilateral_rejected_with_line_number() {
        let text = SQUARE.replace("6 2 2 7 7 1 3 4", "6 3 2 7 7 1 2 3 4");
        let err = parse_msh(&text, "q.msh").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("type 3"), "{msg}");
        assert!(msg.contains("q.msh:18"), "{msg}");
    }

    #[test]
    fn bad_header_and_range() {
        let text = SQUARE.replace("$EndNodes", "$EndNode");
        assert!(matches!(parse_msh(&text, "x"), Err(Error::Parse { .. })));
        let text = SQUARE.replace("6 2 2 7 7 1 3 4", "6 2 2 7 7 1 3 9");
        let msg = parse_msh(&text, "x").unwrap_err().to_string();
        assert!(msg.contains("out of range"), "{msg}");
    }

    #[test]
    fn physical_names_skipped() {
        let text = SQUARE.replace(
            "$Nodes",
            "$PhysicalNames\n1\n1 1 \"bottom\"\n$EndPhysicalNames\n$Nodes",
        );
        assert_eq!(parse_msh(&text, "x").unwrap().n_elements(), 2);
    }

    #[test]
    fn round_trip_full_precision() {
        let mut m = parse_msh(SQUARE, "x").unwrap();
        m.nodes[2] = [1.0 / 3.0, 0.1 + 0.2];
        let back = parse_msh(&write_msh(&m), "x").unwrap();
        assert_eq!(back.nodes, m.nodes);
        assert_eq!(back.elements, m.elements);
        assert_eq!(back.boundary_edges, m.boundary_edges);
    }
}
