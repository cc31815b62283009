//! Text file formats: edge lists, design files, outcome tables and estimate rows.
//!
//! Every format starts with `# key = value` header lines that record the tool
//! version, parameters and seed of the run that produced it.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use indset_core::{Estimand, EstimateSummary, Graph};

use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Ordered `key = value` pairs written as `#` comment lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Header(Vec<(String, String)>);

impl Header {
    /// A header that starts with the tool version.
    pub fn new() -> Self {
        let mut h = Header::default();
        h.push("version", format!("indset {VERSION}"));
        h
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_opt(&mut self, key: &str, value: Option<impl ToString>) -> &mut Self {
        self.push(key, value.map(|v| v.to_string()).unwrap_or_default())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.0
    }

    /// Parses a header value, treating an empty value as absent.
    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key).filter(|v| !v.is_empty()) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| Error::Data(format!("header key `{key}`: cannot parse {v:?}: {e}"))),
        }
    }

    pub fn write_to(&self, w: &mut (impl Write + ?Sized)) -> std::io::Result<()> {
        for (k, v) in &self.0 {
            writeln!(w, "# {k} = {v}")?;
        }
        Ok(())
    }

    /// Interprets a comment line; lines without `=` are plain comments.
    fn absorb(&mut self, line: &str) {
        let body = line.trim_start_matches('#').trim();
        if let Some((k, v)) = body.split_once('=') {
            self.0.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
}

fn read_lines(r: impl BufRead) -> Result<Vec<String>> {
    r.lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::Data(format!("read failed: {e}")))
}

/// Splits the leading `#` lines off a text file; returns the header and
/// the remaining text together with the line number it starts at.
fn split_header(lines: &[String]) -> (Header, usize) {
    let mut header = Header::default();
    let mut body = 0;
    for line in lines {
        let t = line.trim();
        if t.starts_with('#') {
            header.absorb(t);
        } else if !t.is_empty() {
            break;
        }
        body += 1;
    }
    (header, body)
}

/// Reads an edge list: one `u v` pair per line, `#` comments, blank lines
/// ignored. A `# n = N` comment declares the vertex count; without it the
/// count is one more than the largest id. With `one_based`, ids start at 1.
pub fn load_edge_list(r: impl BufRead, one_based: bool) -> Result<Graph> {
    let base = usize::from(one_based);
    let mut declared: Option<usize> = None;
    let mut edges = Vec::new();
    for (i, line) in read_lines(r)?.iter().enumerate() {
        let lineno = i + 1;
        let parse_err = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(comment) = t.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                if k.trim() == "n" {
                    let n = v
                        .trim()
                        .parse()
                        .map_err(|_| parse_err(format!("bad vertex count {:?}", v.trim())))?;
                    declared = Some(n);
                }
            }
            continue;
        }
        let mut tokens = t.split_whitespace();
        let mut id = || -> Result<usize> {
            let tok = tokens
                .next()
                .ok_or_else(|| parse_err("expected two vertex ids".into()))?;
            let raw: usize = tok.parse().map_err(|_| {
                parse_err(format!("vertex id {tok:?} is not a non-negative integer"))
            })?;
            raw.checked_sub(base)
                .ok_or_else(|| parse_err(format!("vertex id {raw} below the first id {base}")))
        };
        let (u, v) = (id()?, id()?);
        if let Some(extra) = tokens.next() {
            return Err(parse_err(format!("unexpected token {extra:?}")));
        }
        if u == v {
            return Err(parse_err(format!("self-loop on vertex {}", u + base)));
        }
        if let Some(n) = declared {
            if u.max(v) >= n {
                return Err(parse_err(format!(
                    "vertex id {} out of range for n = {n}",
                    u.max(v) + base
                )));
            }
        }
        edges.push((u, v, lineno));
    }
    let n = declared.unwrap_or_else(|| {
        edges
            .iter()
            .map(|&(u, v, _)| u.max(v) + 1)
            .max()
            .unwrap_or(0)
    });
    // a declaration may follow edges that already exceed it
    if let Some(&(u, v, line)) = edges.iter().find(|&&(u, v, _)| u.max(v) >= n) {
        return Err(Error::Parse {
            line,
            message: format!("vertex id {} out of range for n = {n}", u.max(v) + base),
        });
    }
    Ok(Graph::from_edges(
        n,
        edges.into_iter().map(|(u, v, _)| (u, v)),
    )?)
}

/// Writes `header`, the `# n = N` declaration and one 0-based `u v` line per edge.
pub fn save_edge_list(
    g: &Graph,
    header: &Header,
    w: &mut (impl Write + ?Sized),
) -> std::io::Result<()> {
    header.write_to(w)?;
    writeln!(w, "# n = {}", g.n())?;
    writeln!(w, "# edges = {}", g.edge_count())?;
    for (u, v) in g.edges() {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

/// One vertex of a design file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRow {
    pub vertex_id: usize,
    /// `I` for the independent set, `A` for the auxiliary set.
    pub set: char,
    pub z: u8,
    /// Exposure of independent units; empty for auxiliary units.
    pub rho: Option<f64>,
    pub degree: usize,
    /// 1 when the unit enters the estimator.
    pub used: u8,
}

fn csv_err(e: csv::Error, first_line: usize) -> Error {
    let line = e
        .position()
        .map(|p| p.line() as usize + first_line)
        .unwrap_or(first_line);
    let message = match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => e.to_string(),
    };
    Error::Parse { line, message }
}

/// Reads a `#`-headed CSV table into its header and rows.
fn read_table<T: for<'de> Deserialize<'de>>(r: impl BufRead) -> Result<(Header, Vec<(usize, T)>)> {
    let lines = read_lines(r)?;
    let (header, body) = split_header(&lines);
    let text = lines[body..].join("\n");
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        let rec: T = rec.map_err(|e| csv_err(e, body))?;
        rows.push((0, rec));
    }
    // line numbers for later validation messages
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    for (slot, rec) in rows.iter_mut().zip(rdr.records()) {
        let line = rec
            .ok()
            .and_then(|r| r.position().map(|p| p.line() as usize))
            .unwrap_or(0);
        slot.0 = line + body;
    }
    Ok((header, rows))
}

fn write_table<T: Serialize>(
    header: &Header,
    rows: &[T],
    w: &mut (impl Write + ?Sized),
) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Data(format!("write failed: {e}"));
    header.write_to(w).map_err(io_err)?;
    let mut wtr = csv::Writer::from_writer(w);
    for row in rows {
        wtr.serialize(row)
            .map_err(|e| Error::Data(format!("write failed: {e}")))?;
    }
    wtr.flush().map_err(io_err)
}

pub fn write_design(
    header: &Header,
    rows: &[DesignRow],
    w: &mut (impl Write + ?Sized),
) -> Result<()> {
    write_table(header, rows, w)
}

/// Reads a design file and checks that its rows are well formed.
pub fn read_design(r: impl BufRead) -> Result<(Header, Vec<DesignRow>)> {
    let (header, rows) = read_table::<DesignRow>(r)?;
    let mut seen = BTreeMap::new();
    for (line, row) in &rows {
        let bad = |message: String| Error::Parse {
            line: *line,
            message,
        };
        if row.set != 'I' && row.set != 'A' {
            return Err(bad(format!("set must be I or A, got {:?}", row.set)));
        }
        if row.z > 1 || row.used > 1 {
            return Err(bad("z and used must be 0 or 1".into()));
        }
        if row.set == 'I' && row.rho.is_none() {
            return Err(bad(format!(
                "independent vertex {} has no exposure",
                row.vertex_id
            )));
        }
        if seen.insert(row.vertex_id, *line).is_some() {
            return Err(bad(format!("duplicate vertex id {}", row.vertex_id)));
        }
    }
    Ok((header, rows.into_iter().map(|(_, r)| r).collect()))
}

/// Recovers the estimand from the `estimand`, `rho_target` and `z` header keys.
pub fn estimand_from_header(h: &Header) -> Result<Estimand> {
    let name = h
        .get("estimand")
        .ok_or_else(|| Error::Data("design header has no `estimand` key".into()))?;
    parse_estimand(
        name,
        h.parse("rho_target")?,
        h.parse::<u8>("z")?.map(|z| z == 1),
    )
    .map_err(|e| Error::Data(e.to_string()))
}

/// Builds an estimand from its name plus the options that belong to it.
pub fn parse_estimand(name: &str, rho_target: Option<f64>, z: Option<bool>) -> Result<Estimand> {
    match name.to_ascii_lowercase().as_str() {
        "direct" => {
            if z.is_some() {
                return Err(Error::Param(
                    "z applies to the spillover estimand only".into(),
                ));
            }
            Ok(Estimand::Direct {
                rho: rho_target.unwrap_or(0.5),
            })
        }
        other => {
            if rho_target.is_some() {
                return Err(Error::Param(
                    "rho_target applies to the direct estimand only".into(),
                ));
            }
            match other {
                "spillover" => Ok(Estimand::Spillover {
                    z: z.unwrap_or(true),
                }),
                "total" if z.is_some() => Err(Error::Param(
                    "z applies to the spillover estimand only".into(),
                )),
                "total" => Ok(Estimand::Total),
                _ => Err(Error::Param(format!(
                    "unknown estimand {name:?} (expected direct, spillover or total)"
                ))),
            }
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct OutcomeRow {
    vertex_id: usize,
    y: f64,
}

/// Reads a `vertex_id,y` table.
pub fn read_outcomes(r: impl BufRead) -> Result<BTreeMap<usize, f64>> {
    let (_, rows) = read_table::<OutcomeRow>(r)?;
    let mut out = BTreeMap::new();
    for (line, row) in rows {
        if !row.y.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("outcome for vertex {} is not finite", row.vertex_id),
            });
        }
        if out.insert(row.vertex_id, row.y).is_some() {
            return Err(Error::Parse {
                line,
                message: format!("duplicate vertex id {}", row.vertex_id),
            });
        }
    }
    Ok(out)
}

pub fn write_outcomes(
    header: &Header,
    y: &[(usize, f64)],
    w: &mut (impl Write + ?Sized),
) -> Result<()> {
    let rows: Vec<OutcomeRow> = y
        .iter()
        .map(|&(vertex_id, y)| OutcomeRow { vertex_id, y })
        .collect();
    write_table(header, &rows, w)
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    estimand: String,
    point: f64,
    predicted_variance: Option<f64>,
    bias_bound: Option<f64>,
    norm_delta: Option<f64>,
    var_rho: f64,
}

/// Writes one estimate as a single CSV row below `header`.
pub fn write_summary(
    header: &Header,
    s: &EstimateSummary,
    w: &mut (impl Write + ?Sized),
) -> Result<()> {
    let row = SummaryRow {
        estimand: s.estimand.to_string(),
        point: s.point,
        predicted_variance: s.predicted_variance,
        bias_bound: s.bias_bound,
        norm_delta: s.norm_delta,
        var_rho: s.var_rho,
    };
    write_table(header, &[row], w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<Graph> {
        load_edge_list(text.as_bytes(), false)
    }

    #[test]
    fn path_from_text() {
        let g = load("0 1\n1 2").unwrap();
        assert_eq!((g.n(), g.edge_count()), (3, 2));
        assert_eq!(g.neighbors(1), &[0, 2]);
    }

    #[test]
    fn declared_count_keeps_isolated_vertices() {
        let g = load("# n = 5\n# a comment\n\n0 1\n").unwrap();
        assert_eq!((g.n(), g.edge_count()), (5, 1));
        assert!(load("").unwrap().n() == 0);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let line = |text: &str| match load(text) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected a parse error, got {other:?}"),
        };
        assert_eq!(line("0 1\n2 2\n"), 2);
        assert_eq!(line("# n = 3\n0 1\n1 x\n"), 3);
        assert_eq!(line("# n = 3\n0 1\n\n1 3\n"), 4);
        assert_eq!(line("0 1\n1 -2\n"), 2);
        assert_eq!(line("0 1 2\n"), 1);
        assert_eq!(line("0\n"), 1);
        assert_eq!(line("0 4\n# n = 3\n"), 1);
    }

    #[test]
    fn one_based_ids() {
        let g = load_edge_list("# n = 3\n1 2\n2 3\n".as_bytes(), true).unwrap();
        assert!(g.has_edge(0, 1) && g.has_edge(1, 2));
        assert!(load_edge_list("0 1\n".as_bytes(), true).is_err());
    }

    #[test]
    fn header_round_trip() {
        let mut h = Header::new();
        h.push("seed", 7).push_opt("sigma", None::<f64>);
        let mut buf = Vec::new();
        h.write_to(&mut buf).unwrap();
        let lines = read_lines(&buf[..]).unwrap();
        let (back, body) = split_header(&lines);
        assert_eq!(back, h);
        assert_eq!(body, 3);
        assert_eq!(back.parse::<u64>("seed").unwrap(), Some(7));
        assert_eq!(back.parse::<f64>("sigma").unwrap(), None);
        assert!(back.parse::<u64>("version").is_err());
    }

    #[test]
    fn estimand_options() {
        assert_eq!(
            parse_estimand("direct", Some(0.0), None).unwrap(),
            Estimand::Direct { rho: 0.0 }
        );
        assert_eq!(
            parse_estimand("Spillover", None, Some(false)).unwrap(),
            Estimand::Spillover { z: false }
        );
        assert!(parse_estimand("spillover", Some(0.2), None).is_err());
        assert!(parse_estimand("total", None, Some(true)).is_err());
        assert!(parse_estimand("both", None, None).is_err());
    }

    #[test]
    fn outcomes_table() {
        let y =
            read_outcomes("# from a field study\nvertex_id,y\n3,1.5\n0, -2\n".as_bytes()).unwrap();
        assert_eq!(y.into_iter().collect::<Vec<_>>(), vec![(0, -2.0), (3, 1.5)]);
        match read_outcomes("vertex_id,y\n1,2\n1,3\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            read_outcomes("vertex_id,y\n1,abc\n".as_bytes()),
            Err(Error::Parse { .. })
        ));
    }
}
