use crate::error::ParseError;
use crate::graph::{HyperFact, Term};
use crate::vocab::WD;

/// Maps one CSV field to a term: bare Wikidata ids live in the `wd:`
/// namespace, `<...>` is a full IRI and `_:x` a blank node.
pub fn wd50k_term(field: &str) -> Result<Term, String> {
    if field.is_empty() {
        return Err("empty field".into());
    }
    if let Some(iri) = field.strip_prefix('<').and_then(|f| f.strip_suffix('>')) {
        return Term::checked_iri(iri).map_err(|e| e.to_string());
    }
    if let Some(label) = field.strip_prefix("_:") {
        if label.is_empty() {
            return Err("empty blank node label".into());
        }
        return Ok(Term::blank(label));
    }
    Term::checked_iri(format!("{WD}{field}")).map_err(|e| e.to_string())
}

/// Inverse of [`wd50k_term`]. Literals and quoted triples have no CSV form.
pub fn wd50k_field(term: &Term) -> Option<String> {
    match term {
        Term::Iri(iri) => match iri.strip_prefix(WD) {
            Some(local) if !local.is_empty() && !local.contains([',', '<', '>']) => {
                Some(local.to_owned())
            }
            _ if !iri.contains(',') => Some(format!("<{iri}>")),
            _ => None,
        },
        Term::BlankNode(label) if !label.contains(',') => Some(format!("_:{label}")),
        _ => None,
    }
}

/// Parses one qualifier row `s,p,o[,qr,qv]*`. `line` is 1-based and only
/// used for error reporting.
pub fn parse_wd50k_row(text: &str, line: usize) -> Result<HyperFact, ParseError> {
    let malformed = |message: String| ParseError::MalformedRow { line, message };
    let text = text.trim_end_matches(['\r', '\n']);
    let fields: Vec<&str> = text.split(',').map(str::trim).collect();
    if fields.len() < 3 {
        return Err(malformed(format!(
            "expected at least 3 fields, found {}",
            fields.len()
        )));
    }
    if (fields.len() - 3) % 2 != 0 {
        return Err(malformed(format!(
            "qualifier {:?} has no value",
            fields[fields.len() - 1]
        )));
    }
    let term = |i: usize| wd50k_term(fields[i]).map_err(|e| malformed(format!("field {}: {e}", i + 1)));
    let mut fact = HyperFact::new(term(0)?, term(1)?, term(2)?);
    if fact.s.is_literal() || !fact.p.is_iri() {
        return Err(malformed("predicate must be an IRI".into()));
    }
    for i in (3..fields.len()).step_by(2) {
        let qr = term(i)?;
        if !qr.is_iri() {
            return Err(malformed(format!("qualifier relation {} is not an IRI", fields[i])));
        }
        fact.qualifiers.push((qr, term(i + 1)?));
    }
    Ok(fact)
}

/// Parses a whole WD50K statements file. Blank lines are skipped. With
/// `qualified_only`, facts without qualifiers are dropped (the WD50K(100)
/// selection).
pub fn parse_wd50k(text: &str, qualified_only: bool) -> Result<Vec<HyperFact>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fact = parse_wd50k_row(line, i + 1)?;
        if qualified_only && fact.qualifiers.is_empty() {
            continue;
        }
        out.push(fact);
    }
    Ok(out)
}
