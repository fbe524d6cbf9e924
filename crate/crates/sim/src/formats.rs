//! Plain-text problem instances.
//!
//! ```text
//! # comment
//! <kind> <SIZE> <density> <seed>
//! <entries...>
//! ```
//!
//! `graph` entries are `u v` undirected edges, `csr` entries are
//! `row col value` nonzeros, and `pair` holds the two sequences on one line
//! each. Density and seed record how an instance was generated; loading
//! ignores them.

use std::fmt::Write as _;

use arena_core::kernels::spmv::Csr;
use arena_core::kernels::sssp::Graph;

use crate::HarnessError;

#[derive(Clone, Debug, PartialEq)]
pub struct Header {
    pub kind: String,
    pub size: u32,
    pub density: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    Graph(Graph),
    Csr(Csr),
    Pair(Vec<u8>, Vec<u8>),
}

fn err(line: usize, reason: impl Into<String>) -> HarnessError {
    HarnessError::Format { line, reason: reason.into() }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, HarnessError> {
    let tok = tok.ok_or_else(|| err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| err(line, format!("bad {what} `{tok}`")))
}

/// Non-blank, non-comment lines with 1-based line numbers.
fn content(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_instance(text: &str) -> Result<(Header, Instance), HarnessError> {
    let mut lines = content(text);
    let (hl, head) = lines.next().ok_or_else(|| err(1, "empty instance"))?;
    let mut tok = head.split_whitespace();
    let kind: String = field(tok.next(), hl, "kind")?;
    let header = Header {
        size: field(tok.next(), hl, "SIZE")?,
        density: field(tok.next(), hl, "density")?,
        seed: field(tok.next(), hl, "seed")?,
        kind,
    };
    if tok.next().is_some() {
        return Err(err(hl, "header has extra fields"));
    }
    let n = header.size;
    let inst = match header.kind.as_str() {
        "graph" => {
            let mut edges = Vec::new();
            for (ln, l) in lines {
                let mut t = l.split_whitespace();
                let (u, v): (u32, u32) = (field(t.next(), ln, "u")?, field(t.next(), ln, "v")?);
                if u >= n || v >= n {
                    return Err(err(ln, format!("vertex out of range 0..{n}")));
                }
                edges.push((u, v));
            }
            Instance::Graph(Graph::from_edges(n, edges))
        }
        "csr" => {
            let mut entries: Vec<(u32, u32, f64)> = Vec::new();
            for (ln, l) in lines {
                let mut t = l.split_whitespace();
                let e = (field(t.next(), ln, "row")?, field(t.next(), ln, "col")?, field(t.next(), ln, "value")?);
                if e.0 >= n || e.1 >= n {
                    return Err(err(ln, format!("index out of range 0..{n}")));
                }
                entries.push(e);
            }
            entries.sort_by_key(|&(i, j, _)| (i, j));
            if let Some(w) = entries.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
                return Err(err(0, format!("duplicate entry ({}, {})", w[0].0, w[0].1)));
            }
            let mut row_ptr = vec![0usize; n as usize + 1];
            for &(i, _, _) in &entries {
                row_ptr[i as usize + 1] += 1;
            }
            for i in 0..n as usize {
                row_ptr[i + 1] += row_ptr[i];
            }
            Instance::Csr(Csr {
                n,
                row_ptr,
                col: entries.iter().map(|e| e.1).collect(),
                val: entries.iter().map(|e| e.2).collect(),
            })
        }
        "pair" => {
            let mut seqs = Vec::new();
            for (ln, l) in lines {
                if seqs.len() == 2 {
                    return Err(err(ln, "pair holds exactly two sequences"));
                }
                seqs.push(l.as_bytes().to_vec());
            }
            let [a, b]: [Vec<u8>; 2] = seqs.try_into().map_err(|_| err(hl, "pair needs two sequences"))?;
            if a.len() as u32 != n {
                return Err(err(hl, format!("first sequence has length {}, header says {n}", a.len())));
            }
            Instance::Pair(a, b)
        }
        other => return Err(err(hl, format!("unknown kind `{other}`"))),
    };
    Ok((header, inst))
}

pub fn write_instance(header: &Header, inst: &Instance) -> String {
    let mut s = format!("{} {} {} {}\n", header.kind, header.size, header.density, header.seed);
    match inst {
        Instance::Graph(g) => {
            for (u, ns) in g.adj.iter().enumerate() {
                for &v in ns.iter().filter(|&&v| v as usize > u) {
                    let _ = writeln!(s, "{u} {v}");
                }
            }
        }
        Instance::Csr(a) => {
            for i in 0..a.n as usize {
                let (cols, vals) = a.row(i);
                for (j, v) in cols.iter().zip(vals) {
                    let _ = writeln!(s, "{i} {j} {v:?}");
                }
            }
        }
        Instance::Pair(a, b) => {
            s.push_str(&String::from_utf8_lossy(a));
            s.push('\n');
            s.push_str(&String::from_utf8_lossy(b));
            s.push('\n');
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_numbers_in_errors() {
        let text = "# tiny\ngraph 3 0.5 1\n0 1\n1 7\n";
        match parse_instance(text) {
            Err(HarnessError::Format { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(parse_instance("matrix 3 0.5 1\n").is_err());
        assert!(parse_instance("pair 3 0 1\nACG\n").is_err());
    }
}
