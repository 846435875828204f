use std::collections::BTreeSet;

use crate::elements::ElementKind;
use crate::network::DetectorKind;
use crate::noise::NoiseSpec;
use crate::source::CaseWeights;
use crate::state::{Polarization, SpatialMode};

use super::{DetectorDecl, DslDocument, Header, ParseError, ParseErrorKind, Statement, StatementKind};

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    /// 1-based, in characters.
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    let mut chars = line.char_indices().enumerate().peekable();
    while let Some((col, (byte, c))) = chars.next() {
        let arrow = c == '-' && chars.peek().is_some_and(|(_, (_, n))| *n == '>');
        let single = c == '=' || arrow;
        if c.is_whitespace() || single {
            if let Some((b, cc)) = start.take() {
                out.push(Token { text: &line[b..byte], column: cc + 1 });
            }
        }
        if single {
            let len = if arrow {
                chars.next();
                2
            } else {
                1
            };
            out.push(Token { text: &line[byte..byte + len], column: col + 1 });
        } else if !c.is_whitespace() && start.is_none() {
            start = Some((byte, col));
        }
    }
    if let Some((b, cc)) = start {
        out.push(Token { text: &line[b..], column: cc + 1 });
    }
    out
}

struct Line<'a> {
    number: usize,
    tokens: Vec<Token<'a>>,
    pos: usize,
    /// Column just past the last character, for errors at end of line.
    end: usize,
}

impl<'a> Line<'a> {
    fn err(&self, column: usize, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        ParseError { line: self.number, column, message: message.into(), kind }
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.column)
    }

    fn next(&mut self, what: &str) -> Result<Token<'a>, ParseError> {
        let t = self
            .tokens
            .get(self.pos)
            .copied()
            .ok_or_else(|| self.err(self.end, ParseErrorKind::Syntax, format!("expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, literal: &str) -> Result<(), ParseError> {
        let t = self.next(&format!("'{literal}'"))?;
        if t.text != literal {
            return Err(self.err(t.column, ParseErrorKind::Syntax, format!("expected '{literal}', found '{}'", t.text)));
        }
        Ok(())
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) => Err(self.err(t.column, ParseErrorKind::Syntax, format!("unexpected '{}'", t.text))),
            None => Ok(()),
        }
    }

    fn is_done(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn ident(&mut self, what: &str) -> Result<Token<'a>, ParseError> {
        let t = self.next(what)?;
        let mut chars = t.text.chars();
        let ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
            && t.text != "_";
        if !ok {
            return Err(self.err(t.column, ParseErrorKind::Syntax, format!("invalid {what} '{}'", t.text)));
        }
        Ok(t)
    }

    fn mode(&mut self, modes: &mut Vec<(SpatialMode, usize)>) -> Result<SpatialMode, ParseError> {
        let t = self.ident("mode name")?;
        let m = SpatialMode::new(t.text);
        if modes.iter().any(|(seen, _)| *seen == m) {
            return Err(self.err(t.column, ParseErrorKind::ModeReuse, format!("mode '{}' used twice in one statement", t.text)));
        }
        modes.push((m.clone(), t.column));
        Ok(m)
    }

    fn optional_mode(&mut self, modes: &mut Vec<(SpatialMode, usize)>) -> Result<Option<SpatialMode>, ParseError> {
        if self.tokens.get(self.pos).is_some_and(|t| t.text == "_") {
            self.pos += 1;
            return Ok(None);
        }
        self.mode(modes).map(Some)
    }

    fn number(&mut self, what: &str) -> Result<f64, ParseError> {
        let t = self.next(what)?;
        match t.text.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(self.err(t.column, ParseErrorKind::BadParameter, format!("invalid {what} '{}'", t.text))),
        }
    }
}

fn weights(line: &mut Line<'_>) -> Result<CaseWeights, ParseError> {
    let column = line.here();
    let mut w = Vec::new();
    while !line.is_done() && w.len() < 3 {
        let t = line.next("weight")?;
        for part in t.text.split(',').filter(|p| !p.is_empty()) {
            let x = part
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| line.err(t.column, ParseErrorKind::BadParameter, format!("invalid weight '{part}'")))?;
            w.push(x);
        }
    }
    if w.len() != 3 {
        return Err(line.err(column, ParseErrorKind::BadParameter, "expected three case weights"));
    }
    CaseWeights::new(w[0], w[1], w[2]).map_err(|e| line.err(column, ParseErrorKind::BadParameter, e.to_string()))
}

fn set_header(line: &mut Line<'_>, header: &mut Header) -> Result<(), ParseError> {
    let key = line.next("parameter name")?;
    let dup = |line: &Line<'_>| line.err(key.column, ParseErrorKind::BadParameter, format!("'{}' set twice", key.text));
    match key.text {
        "theta" => {
            if header.theta.is_some() {
                return Err(dup(line));
            }
            header.theta = Some(line.number("theta")?);
        }
        "alpha" => {
            if header.alpha.is_some() {
                return Err(dup(line));
            }
            let column = line.here();
            let a = line.number("alpha")?;
            if a <= 0.0 {
                return Err(line.err(column, ParseErrorKind::BadParameter, "alpha must be positive"));
            }
            header.alpha = Some(a);
        }
        "case_weights" => {
            if header.case_weights.is_some() {
                return Err(dup(line));
            }
            header.case_weights = Some(weights(line)?);
        }
        "noise" => {
            if header.noise.is_some() {
                return Err(dup(line));
            }
            let t = line.next("noise spec")?;
            let spec: NoiseSpec =
                t.text.parse().map_err(|e: String| line.err(t.column, ParseErrorKind::BadParameter, e))?;
            header.noise = Some(spec);
        }
        other => {
            return Err(line.err(key.column, ParseErrorKind::BadParameter, format!("unknown parameter '{other}'")));
        }
    }
    line.finish()
}

fn statement(line: &mut Line<'_>, keyword: Token<'_>) -> Result<Statement, ParseError> {
    let mut modes = Vec::new();
    let kind = match keyword.text {
        "source" => {
            let t = line.next("source type")?;
            if t.text != "pdc2" {
                return Err(line.err(t.column, ParseErrorKind::UnknownElement, format!("unknown source '{}'", t.text)));
            }
            line.expect("weights")?;
            StatementKind::Source { weights: weights(line)? }
        }
        "pbs" | "bs" => {
            let in1 = line.mode(&mut modes)?;
            let in2 = line.optional_mode(&mut modes)?;
            line.expect("->")?;
            let o1 = line.mode(&mut modes)?;
            let o2 = line.mode(&mut modes)?;
            StatementKind::Element(if keyword.text == "pbs" {
                ElementKind::Pbs { in1, in2, out_t: o1, out_r: o2 }
            } else {
                ElementKind::Bs { in1, in2, out1: o1, out2: o2 }
            })
        }
        "hwp45" => StatementKind::Element(ElementKind::Hwp45 { mode: line.mode(&mut modes)? }),
        "hwp90" => StatementKind::Element(ElementKind::Hwp90 { mode: line.mode(&mut modes)? }),
        "route" => {
            let from = line.mode(&mut modes)?;
            line.expect("->")?;
            let to = line.mode(&mut modes)?;
            StatementKind::Element(ElementKind::Route { from, to })
        }
        "kerr" => {
            let mode = line.mode(&mut modes)?;
            let t = line.next("polarization")?;
            let pol = Polarization::parse(t.text).ok_or_else(|| {
                line.err(t.column, ParseErrorKind::BadParameter, format!("invalid polarization '{}'", t.text))
            })?;
            let units = line.number("phase units")?;
            StatementKind::Kerr { mode, pol, units }
        }
        "channel" => {
            let t = line.next("photon index")?;
            let photon = t
                .text
                .parse::<usize>()
                .ok()
                .filter(|p| (1..=3).contains(p))
                .ok_or_else(|| line.err(t.column, ParseErrorKind::BadParameter, format!("photon index '{}' not in 1..=3", t.text)))?;
            line.mode(&mut modes)?;
            while !line.is_done() {
                line.mode(&mut modes)?;
            }
            StatementKind::Channel { photon, modes: modes.iter().map(|(m, _)| m.clone()).collect() }
        }
        other => {
            return Err(line.err(keyword.column, ParseErrorKind::UnknownElement, format!("unknown element '{other}'")));
        }
    };
    line.finish()?;
    Ok(Statement { kind, line: line.number, modes })
}

fn detector(line: &mut Line<'_>, kind: DetectorKind) -> Result<DetectorDecl, ParseError> {
    let name = line.ident("detector name")?;
    line.expect("=")?;
    let mut modes = Vec::new();
    line.mode(&mut modes)?;
    while !line.is_done() {
        line.mode(&mut modes)?;
    }
    Ok(DetectorDecl { name: name.text.to_string(), kind, line: line.number, name_column: name.column, modes })
}

/// Parses a network description. Returns the first error.
pub fn parse(text: &str) -> Result<DslDocument, ParseError> {
    let mut doc = DslDocument::default();
    let mut names = BTreeSet::new();
    let mut body_started = false;
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(content);
        let mut line = Line { number: i + 1, tokens, pos: 0, end: content.chars().count() + 1 };
        let Ok(keyword) = line.next("statement") else { continue };
        match keyword.text {
            "set" => {
                if body_started {
                    return Err(line.err(keyword.column, ParseErrorKind::Syntax, "'set' must come before the first statement"));
                }
                set_header(&mut line, &mut doc.header)?;
            }
            "detect" | "trigger" => {
                body_started = true;
                let kind = if keyword.text == "detect" { DetectorKind::Signal } else { DetectorKind::Trigger };
                let d = detector(&mut line, kind)?;
                if !names.insert(d.name.clone()) {
                    return Err(line.err(d.name_column, ParseErrorKind::BadParameter, format!("detector '{}' declared twice", d.name)));
                }
                doc.detectors.push(d);
            }
            _ => {
                body_started = true;
                let s = statement(&mut line, keyword)?;
                if matches!(s.kind, StatementKind::Source { .. }) && doc.header.case_weights.is_some() {
                    return Err(line.err(keyword.column, ParseErrorKind::BadParameter, "case weights given by both 'set' and 'source'"));
                }
                doc.statements.push(s);
            }
        }
    }
    Ok(doc)
}
