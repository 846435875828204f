//! A line-oriented language for optical networks (`.onet` files).
//!
//! ```text
//! set theta 0.01
//! source pdc2 weights 0.25 0.25 0.5
//! kerr a1 H 0.5
//! pbs a1 _ -> T1 x1
//! hwp90 y1b
//! channel 1 d1 D1
//! trigger T = T1 T2
//! detect A = e1 E1
//! ```

mod parse;

use std::collections::BTreeSet;
use std::fmt;

use crate::elements::{build, ElementKind};
use crate::network::{CircuitNetwork, DetectorGroup, DetectorKind, NetworkParams, Step};
use crate::noise::NoiseSpec;
use crate::qnd::{KerrCoupling, Probe};
use crate::source::{source_modes, CaseWeights};
use crate::state::{Polarization, SpatialMode};

pub use parse::parse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParseErrorKind {
    Syntax,
    UnknownElement,
    ModeReuse,
    UndeclaredMode,
    BadParameter,
}

impl ParseErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseErrorKind::Syntax => "syntax",
            ParseErrorKind::UnknownElement => "unknown-element",
            ParseErrorKind::ModeReuse => "mode-reuse",
            ParseErrorKind::UndeclaredMode => "undeclared-mode",
            ParseErrorKind::BadParameter => "bad-parameter",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {}: {message}", kind.as_str())]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    pub theta: Option<f64>,
    pub alpha: Option<f64>,
    pub case_weights: Option<CaseWeights>,
    pub noise: Option<NoiseSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StatementKind {
    Source { weights: CaseWeights },
    Element(ElementKind),
    Kerr { mode: SpatialMode, pol: Polarization, units: f64 },
    Channel { photon: usize, modes: Vec<SpatialMode> },
}

/// A statement with its source position. Equality ignores positions.
#[derive(Debug, Clone)]
pub struct Statement {
    pub kind: StatementKind,
    pub line: usize,
    /// Every mode token with its column.
    pub modes: Vec<(SpatialMode, usize)>,
}

impl PartialEq for Statement {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

/// A `detect` or `trigger` group. Equality ignores positions.
#[derive(Debug, Clone)]
pub struct DetectorDecl {
    pub name: String,
    pub kind: DetectorKind,
    pub line: usize,
    pub name_column: usize,
    pub modes: Vec<(SpatialMode, usize)>,
}

impl PartialEq for DetectorDecl {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.kind == other.kind
            && self.modes.iter().map(|m| &m.0).eq(other.modes.iter().map(|m| &m.0))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DslDocument {
    pub header: Header,
    pub statements: Vec<Statement>,
    pub detectors: Vec<DetectorDecl>,
}

fn join(modes: &[SpatialMode]) -> String {
    modes.iter().map(|m| m.name()).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for StatementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatementKind::Source { weights: w } => {
                write!(f, "source pdc2 weights {} {} {}", w.upper_upper, w.lower_lower, w.mixed)
            }
            StatementKind::Element(e) => e.fmt(f),
            StatementKind::Kerr { mode, pol, units } => write!(f, "kerr {mode} {pol} {units}"),
            StatementKind::Channel { photon, modes } => write!(f, "channel {photon} {}", join(modes)),
        }
    }
}

impl fmt::Display for DslDocument {
    /// Canonical text: header, statements, then detector groups.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = &self.header;
        if let Some(t) = h.theta {
            writeln!(f, "set theta {t}")?;
        }
        if let Some(a) = h.alpha {
            writeln!(f, "set alpha {a}")?;
        }
        if let Some(w) = h.case_weights {
            writeln!(f, "set case_weights {} {} {}", w.upper_upper, w.lower_lower, w.mixed)?;
        }
        if let Some(n) = &h.noise {
            writeln!(f, "set noise {n}")?;
        }
        for s in &self.statements {
            writeln!(f, "{}", s.kind)?;
        }
        for d in &self.detectors {
            let keyword = match d.kind {
                DetectorKind::Signal => "detect",
                DetectorKind::Trigger => "trigger",
            };
            let modes: Vec<SpatialMode> = d.modes.iter().map(|m| m.0.clone()).collect();
            writeln!(f, "{keyword} {} = {}", d.name, join(&modes))?;
        }
        Ok(())
    }
}

/// Mode bookkeeping during elaboration.
#[derive(Default)]
struct Flow {
    live: BTreeSet<SpatialMode>,
    seen: BTreeSet<SpatialMode>,
}

impl Flow {
    fn create(&mut self, m: &SpatialMode, line: usize, column: usize) -> Result<(), ParseError> {
        if !self.seen.insert(m.clone()) {
            return Err(ParseError {
                line,
                column,
                message: format!("mode '{m}' is created more than once"),
                kind: ParseErrorKind::ModeReuse,
            });
        }
        self.live.insert(m.clone());
        Ok(())
    }

    fn check_live(&self, m: &SpatialMode, line: usize, column: usize) -> Result<(), ParseError> {
        if self.live.contains(m) {
            return Ok(());
        }
        let (kind, message) = if self.seen.contains(m) {
            (ParseErrorKind::ModeReuse, format!("mode '{m}' was already consumed"))
        } else {
            (ParseErrorKind::UndeclaredMode, format!("mode '{m}' is not declared"))
        };
        Err(ParseError { line, column, message, kind })
    }

    fn consume(&mut self, m: &SpatialMode, line: usize, column: usize) -> Result<(), ParseError> {
        self.check_live(m, line, column)?;
        self.live.remove(m);
        Ok(())
    }
}

fn column_of(s: &Statement, m: &SpatialMode) -> usize {
    s.modes.iter().find(|(x, _)| x == m).map_or(1, |(_, c)| *c)
}

/// Builds the network, checking that every mode is created once and
/// consumed at most once.
pub fn elaborate(doc: &DslDocument) -> Result<CircuitNetwork, ParseError> {
    let mut flow = Flow::default();
    let mut steps = Vec::new();
    let mut weights = doc.header.case_weights;
    for s in &doc.statements {
        let at = |m: &SpatialMode| column_of(s, m);
        match &s.kind {
            StatementKind::Source { weights: w } => {
                for m in source_modes() {
                    flow.create(&m, s.line, 1)?;
                }
                weights = Some(*w);
            }
            StatementKind::Element(kind) => {
                let ins = kind.inputs();
                if kind.is_in_place() {
                    flow.check_live(&ins[0], s.line, at(&ins[0]))?;
                } else {
                    for m in &ins {
                        flow.consume(m, s.line, at(m))?;
                    }
                    for m in kind.outputs() {
                        flow.create(&m, s.line, at(&m))?;
                    }
                }
                let e = build(kind).map_err(|e| ParseError {
                    line: s.line,
                    column: 1,
                    message: e.to_string(),
                    kind: ParseErrorKind::BadParameter,
                })?;
                steps.push(Step::Element(e));
            }
            StatementKind::Kerr { mode, pol, units } => {
                flow.check_live(mode, s.line, at(mode))?;
                steps.push(Step::Kerr(KerrCoupling::new(mode.rail(*pol), *units)));
            }
            StatementKind::Channel { photon, modes } => {
                for m in modes {
                    flow.check_live(m, s.line, at(m))?;
                }
                steps.push(Step::Channel { photon: *photon, modes: modes.clone() });
            }
        }
    }

    let mut claimed = BTreeSet::new();
    let mut detectors = Vec::new();
    for d in &doc.detectors {
        for (m, column) in &d.modes {
            flow.check_live(m, d.line, *column)?;
            if !claimed.insert(m.clone()) {
                return Err(ParseError {
                    line: d.line,
                    column: *column,
                    message: format!("mode '{m}' belongs to two detector groups"),
                    kind: ParseErrorKind::ModeReuse,
                });
            }
        }
        let modes: Vec<SpatialMode> = d.modes.iter().map(|m| m.0.clone()).collect();
        detectors.push(DetectorGroup { name: d.name.clone(), modes, kind: d.kind });
    }

    let defaults = Probe::default();
    let params = NetworkParams {
        probe: Probe { alpha: doc.header.alpha.unwrap_or(defaults.alpha), theta: doc.header.theta.unwrap_or(defaults.theta) },
        weights: weights.unwrap_or_default(),
        noise: doc.header.noise.clone(),
    };
    Ok(CircuitNetwork { steps, detectors, params })
}

/// Parses and elaborates in one step.
pub fn load(text: &str) -> Result<CircuitNetwork, ParseError> {
    elaborate(&parse(text)?)
}
