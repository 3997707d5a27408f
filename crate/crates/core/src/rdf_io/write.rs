use std::fmt::Write as _;
use std::str::FromStr;

use crate::convert::{extract_hyperfacts, Mrm};
use crate::error::SerializeError;
use crate::graph::{Graph, Term};

use super::{wd50k_field, PrefixTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Turtle,
    TurtleStar,
    NTriplesStar,
    Wd50kCsv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "turtle" | "ttl" => Format::Turtle,
            "turtle-star" | "ttls" => Format::TurtleStar,
            "ntriples-star" | "nt" | "nts" => Format::NTriplesStar,
            "wd50k-csv" | "csv" => Format::Wd50kCsv,
            other => return Err(format!("unknown format {other:?}")),
        })
    }
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Turtle => "turtle",
            Format::TurtleStar => "turtle-star",
            Format::NTriplesStar => "ntriples-star",
            Format::Wd50kCsv => "wd50k-csv",
        }
    }
}

/// Serializes the asserted triples of `graph` together with every quoted
/// triple reachable from them.
pub fn serialize(graph: &Graph, format: Format, prefixes: &PrefixTable) -> Result<String, SerializeError> {
    match format {
        Format::Turtle => {
            if graph
                .triples()
                .any(|t| t.subject.as_qt().is_some() || t.object.as_qt().is_some())
            {
                return Err(SerializeError::UnsupportedShape {
                    format: "turtle",
                    reason: "graph contains quoted triples; use turtle-star".into(),
                });
            }
            Ok(write_turtle(graph, prefixes))
        }
        Format::TurtleStar => Ok(write_turtle(graph, prefixes)),
        Format::NTriplesStar => {
            let mut out = String::new();
            for t in graph.triples() {
                write_term_ntriples(&mut out, graph, &t.subject);
                out.push(' ');
                write_term_ntriples(&mut out, graph, &t.predicate);
                out.push(' ');
                write_term_ntriples(&mut out, graph, &t.object);
                out.push_str(" .\n");
            }
            Ok(out)
        }
        Format::Wd50kCsv => write_wd50k(graph),
    }
}

fn write_wd50k(graph: &Graph) -> Result<String, SerializeError> {
    let unsupported = |reason: String| SerializeError::UnsupportedShape {
        format: "wd50k-csv",
        reason,
    };
    if graph.max_qt_depth() > 1 {
        return Err(unsupported("nested quoted triples".into()));
    }
    if graph.triples().any(|t| t.object.as_qt().is_some()) {
        return Err(unsupported("quoted triple in object position".into()));
    }
    let facts = extract_hyperfacts(graph, Mrm::Rdr).map_err(|e| unsupported(e.to_string()))?;
    let mut out = String::new();
    for fact in &facts {
        let terms = [&fact.s, &fact.p, &fact.o]
            .into_iter()
            .chain(fact.qualifiers.iter().flat_map(|(qr, qv)| [qr, qv]));
        let fields = terms
            .map(|t| wd50k_field(t).ok_or_else(|| unsupported(format!("no CSV field for {t:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    Ok(out)
}

fn write_turtle(graph: &Graph, prefixes: &PrefixTable) -> String {
    let mut body = String::new();
    let mut used = vec![false; prefixes.len()];
    for (subject, triples) in graph.subject_groups() {
        write_term_turtle(&mut body, graph, prefixes, subject, &mut used);
        for (i, t) in triples.iter().enumerate() {
            body.push_str(if i == 0 { " " } else { " ;\n    " });
            write_term_turtle(&mut body, graph, prefixes, &t.predicate, &mut used);
            body.push(' ');
            write_term_turtle(&mut body, graph, prefixes, &t.object, &mut used);
        }
        body.push_str(" .\n");
    }
    let mut out = String::new();
    for ((p, ns), used) in prefixes.iter().zip(used) {
        if used {
            let _ = writeln!(out, "@prefix {p}: <{ns}> .");
        }
    }
    if !out.is_empty() {
        out.push('\n');
    }
    out.push_str(&body);
    out
}

fn write_term_turtle(out: &mut String, graph: &Graph, prefixes: &PrefixTable, term: &Term, used: &mut [bool]) {
    match term {
        Term::Iri(iri) => match prefixes.compact(iri) {
            Some(name) => {
                let p = name.split_once(':').map_or("", |(p, _)| p);
                if let Some(i) = prefixes.iter().position(|(q, _)| q == p) {
                    used[i] = true;
                }
                out.push_str(&name);
            }
            None => {
                let _ = write!(out, "<{iri}>");
            }
        },
        Term::QtRef(id) => {
            let qt = graph.qt(*id).expect("quoted triple resolves in its own graph");
            out.push_str("<< ");
            write_term_turtle(out, graph, prefixes, &qt.subject, used);
            out.push(' ');
            write_term_turtle(out, graph, prefixes, &qt.predicate, used);
            out.push(' ');
            write_term_turtle(out, graph, prefixes, &qt.object, used);
            out.push_str(" >>");
        }
        other => write_term_ntriples(out, graph, other),
    }
}

/// Writes a term in N-Triples-star syntax.
pub fn write_term_ntriples(out: &mut String, graph: &Graph, term: &Term) {
    match term {
        Term::Iri(iri) => {
            let _ = write!(out, "<{iri}>");
        }
        Term::BlankNode(label) => {
            let _ = write!(out, "_:{label}");
        }
        Term::Literal { lexical, lang } => {
            out.push('"');
            for c in lexical.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\r' => out.push_str("\\r"),
                    '\t' => out.push_str("\\t"),
                    c if c.is_control() => {
                        let _ = write!(out, "\\u{:04X}", c as u32);
                    }
                    c => out.push(c),
                }
            }
            out.push('"');
            if let Some(lang) = lang {
                let _ = write!(out, "@{lang}");
            }
        }
        Term::QtRef(id) => {
            let qt = graph.qt(*id).expect("quoted triple resolves in its own graph");
            out.push_str("<< ");
            write_term_ntriples(out, graph, &qt.subject);
            out.push(' ');
            write_term_ntriples(out, graph, &qt.predicate);
            out.push(' ');
            write_term_ntriples(out, graph, &qt.object);
            out.push_str(" >>");
        }
    }
}
