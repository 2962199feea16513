//! Configuration documents and their translation into library objects.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use shrinkdim::{
    CounterexampleSystem, GeometricAffine, Interval, MarkovSystem, PerSymbolBracket, PotentialSpec,
    ShrinkFn, Symbol, TargetSpec,
};

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub system: Option<SystemSection>,
    pub potential: Option<PotentialSection>,
    pub target: Option<TargetSection>,
    pub run: Option<toml::Table>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemSection {
    Doubling {},
    /// Orientation-preserving branches; packed from 0 unless offsets are given.
    Affine {
        widths: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offsets: Option<Vec<f64>>,
    },
    Gauss {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation: Option<Symbol>,
    },
    Counterexample(CounterexampleSection),
    /// Widths `scale · ratio^i`, `i ≥ 1`.
    AffineCountable {
        scale: f64,
        ratio: f64,
    },
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<Symbol>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_r1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_r2: Option<f64>,
    /// `log r_n` for `n = n0, n0 + 1, …`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_widths: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiSection>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhiSection {
    /// `Φ(n) = n^{-p}`.
    Power { p: f64 },
    /// `Φ(n) = e^{-rate·n}`.
    Exp { rate: f64 },
}

impl PhiSection {
    pub fn to_shrink_fn(self) -> ShrinkFn {
        match self {
            PhiSection::Power { p } => ShrinkFn::Power(p),
            PhiSection::Exp { rate } => ShrinkFn::Exp(rate),
        }
    }

    pub fn from_shrink_fn(phi: &ShrinkFn) -> Option<Self> {
        match phi {
            ShrinkFn::Power(p) => Some(PhiSection::Power { p: *p }),
            ShrinkFn::Exp(rate) => Some(PhiSection::Exp { rate: *rate }),
            ShrinkFn::Custom(_) => None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub expr: String,
    pub symbols: Option<SymbolsSection>,
}

/// Data for the `symbols` node: per-branch `[inf, sup]` bounds.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolsSection {
    #[serde(default)]
    pub table: BTreeMap<String, [f64; 2]>,
    pub rest: Option<[f64; 2]>,
    #[serde(default)]
    pub variation: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub y: f64,
    pub alpha: Option<f64>,
    /// Prefix expression, as in `potential.expr`.
    pub potential: Option<String>,
}

pub fn parse_document(text: &str, origin: &Path) -> Result<ConfigDocument, CliError> {
    toml::from_str(text).map_err(|e| parse_error(text, origin, &e))
}

/// Formats a TOML error as `path:line:column: message`.
pub fn parse_error(text: &str, origin: &Path, e: &toml::de::Error) -> CliError {
    let start = e.span().map_or(0, |span| span.start);
    // Tagged sections are buffered before validation, so their spans cover the
    // whole table. Point at the offending key instead when it can be found.
    let offset = unknown_field(e.message())
        .and_then(|key| key_offset(text, key, start))
        .unwrap_or(start);
    let (line, column) = line_column(text, offset);
    let message = e.message().replace(
        ", there are no fields",
        "; this system kind takes no keys besides `kind`",
    );
    CliError::Parse(format!(
        "{}:{line}:{column}: {}",
        origin.display(),
        message.trim_end()
    ))
}

fn unknown_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("unknown field `")?;
    rest.split('`').next()
}

fn key_offset(text: &str, key: &str, from: usize) -> Option<usize> {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let indent = line.len() - line.trim_start().len();
        let body = &line[indent..];
        if offset + line.len() > from {
            if let Some(after) = body.strip_prefix(key) {
                if after.trim_start().starts_with('=') {
                    return Some(offset + indent);
                }
            }
        }
        offset += line.len();
    }
    None
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rfind('\n')
        .map_or(before.len(), |i| before.len() - i - 1)
        + 1;
    (line, column)
}

impl SystemSection {
    pub fn kind(&self) -> &'static str {
        match self {
            SystemSection::Doubling {} => "doubling",
            SystemSection::Affine { .. } => "affine",
            SystemSection::Gauss { .. } => "gauss",
            SystemSection::Counterexample(_) => "counterexample",
            SystemSection::AffineCountable { .. } => "affine-countable",
        }
    }
}

/// A system plus the counterexample data behind it, if any.
pub struct BuiltSystem {
    pub system: MarkovSystem,
    pub counterexample: Option<CounterexampleSystem>,
}

pub fn build_system(section: &SystemSection, base: &Path) -> Result<BuiltSystem, CliError> {
    let system = match section {
        SystemSection::Doubling {} => MarkovSystem::doubling(),
        SystemSection::Affine {
            widths,
            offsets: None,
        } => MarkovSystem::affine_from_widths(widths)?,
        SystemSection::Affine {
            widths,
            offsets: Some(offsets),
        } => {
            if offsets.len() != widths.len() {
                return Err(CliError::Config(format!(
                    "system.offsets has {} entries but system.widths has {}",
                    offsets.len(),
                    widths.len()
                )));
            }
            let branches = offsets
                .iter()
                .zip(widths)
                .map(|(&o, &w)| shrinkdim::AffineBranch::new(o, o + w, true))
                .collect();
            MarkovSystem::affine(branches)?
        }
        SystemSection::Gauss { truncation: None } => MarkovSystem::gauss(),
        SystemSection::Gauss {
            truncation: Some(k),
        } => MarkovSystem::gauss_truncated(*k)?,
        SystemSection::AffineCountable { scale, ratio } => {
            MarkovSystem::affine_countable(Arc::new(GeometricAffine::new(*scale, *ratio)?))?
        }
        SystemSection::Counterexample(ce) => {
            let ce = build_counterexample(ce, base)?;
            return Ok(BuiltSystem {
                system: ce.as_system().clone(),
                counterexample: Some(ce),
            });
        }
    };
    Ok(BuiltSystem {
        system,
        counterexample: None,
    })
}

/// Builds from `(beta, phi)`, reassembles a stored width table, or loads the
/// `[system]` section of the file at `path`.
pub fn build_counterexample(
    section: &CounterexampleSection,
    base: &Path,
) -> Result<CounterexampleSystem, CliError> {
    if let Some(path) = &section.path {
        let others = section.beta.is_some()
            || section.phi.is_some()
            || section.n0.is_some()
            || section.log_r1.is_some()
            || section.log_r2.is_some()
            || section.log_widths.is_some();
        if others {
            return Err(CliError::Config(
                "system.path cannot be combined with other counterexample keys".into(),
            ));
        }
        let full = base.join(path);
        let text = std::fs::read_to_string(&full)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", full.display())))?;
        let doc = parse_document(&text, &full)?;
        return match doc.system {
            Some(SystemSection::Counterexample(inner)) if inner.path.is_none() => {
                build_counterexample(&inner, full.parent().unwrap_or(base))
            }
            _ => Err(CliError::Config(format!(
                "{} does not hold a counterexample [system] section",
                full.display()
            ))),
        };
    }
    let beta = section.beta.ok_or_else(|| {
        CliError::Config("system.beta is required for kind = \"counterexample\"".into())
    })?;
    let phi = section
        .phi
        .ok_or_else(|| {
            CliError::Config("system.phi is required for kind = \"counterexample\"".into())
        })?
        .to_shrink_fn();
    match (section.n0, section.log_r1, section.log_r2, &section.log_widths) {
        (None, None, None, None) => Ok(CounterexampleSystem::build(beta, phi)?),
        (Some(n0), Some(r1), Some(r2), Some(table)) => {
            Ok(CounterexampleSystem::from_parts(beta, phi, n0, [r1, r2], table.clone())?)
        }
        _ => Err(CliError::Config(
            "a stored counterexample needs all of system.n0, system.log_r1, system.log_r2 and system.log_widths".into(),
        )),
    }
}

/// The `[system]` section describing a built counterexample exactly.
pub fn serialize_counterexample(ce: &CounterexampleSystem) -> Result<String, CliError> {
    let phi = PhiSection::from_shrink_fn(ce.phi()).ok_or_else(|| {
        CliError::Config("only power and exp shrink functions can be serialized".into())
    })?;
    let [r1, r2] = ce.log_r12();
    let section = SystemSection::Counterexample(CounterexampleSection {
        path: None,
        beta: Some(ce.beta()),
        n0: Some(ce.n0()),
        log_r1: Some(r1),
        log_r2: Some(r2),
        log_widths: Some(ce.width_table()),
        phi: Some(phi),
    });
    #[derive(Serialize)]
    struct Doc {
        system: SystemSection,
    }
    toml::to_string(&Doc { system: section })
        .map_err(|e| CliError::Config(format!("serialization failed: {e}")))
}

/// Parses a prefix potential expression:
///
/// ```text
/// expr := "psi" | "const" <number> | "scale" <number> expr | "sum" expr expr | "symbols"
/// ```
///
/// Parentheses are accepted as grouping noise. `symbols` refers to the
/// `[potential.symbols]` table.
pub fn parse_potential(
    key: &str,
    text: &str,
    symbols: Option<&SymbolsSection>,
) -> Result<PotentialSpec, CliError> {
    let tokens = tokenize(text);
    let mut pos = 0;
    let expr = parse_expr(key, &tokens, &mut pos, symbols)?;
    if let Some((col, tok)) = tokens.get(pos) {
        return Err(CliError::Config(format!(
            "{key}: column {col}: unexpected trailing token `{tok}`"
        )));
    }
    expr.validate()?;
    Ok(expr)
}

fn tokenize(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text
        .char_indices()
        .chain(std::iter::once((text.len(), ' ')))
    {
        let sep = c.is_whitespace() || c == '(' || c == ')';
        match (sep, start) {
            (true, Some(s)) => {
                out.push((s + 1, text[s..i].to_string()));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    out
}

fn parse_expr(
    key: &str,
    tokens: &[(usize, String)],
    pos: &mut usize,
    symbols: Option<&SymbolsSection>,
) -> Result<PotentialSpec, CliError> {
    let Some((col, tok)) = tokens.get(*pos) else {
        return Err(CliError::Config(format!("{key}: expression ends early")));
    };
    *pos += 1;
    let number = |pos: &mut usize| -> Result<f64, CliError> {
        let Some((c, t)) = tokens.get(*pos) else {
            return Err(CliError::Config(format!(
                "{key}: `{tok}` at column {col} needs a number"
            )));
        };
        *pos += 1;
        t.parse::<f64>().map_err(|_| {
            CliError::Config(format!("{key}: column {c}: expected a number, found `{t}`"))
        })
    };
    match tok.as_str() {
        "psi" => Ok(PotentialSpec::psi()),
        "const" => Ok(PotentialSpec::constant(number(pos)?)),
        "scale" => {
            let c = number(pos)?;
            Ok(PotentialSpec::scale(c, parse_expr(key, tokens, pos, symbols)?))
        }
        "sum" => {
            let a = parse_expr(key, tokens, pos, symbols)?;
            let b = parse_expr(key, tokens, pos, symbols)?;
            Ok(PotentialSpec::sum(a, b))
        }
        "symbols" => {
            let s = symbols.ok_or_else(|| {
                CliError::Config(format!("{key}: column {col}: `symbols` needs a [potential.symbols] table"))
            })?;
            Ok(PotentialSpec::PerSymbol(per_symbol(s)?))
        }
        other => Err(CliError::Config(format!(
            "{key}: column {col}: unknown node `{other}` (expected psi, const, scale, sum or symbols)"
        ))),
    }
}

fn per_symbol(s: &SymbolsSection) -> Result<PerSymbolBracket, CliError> {
    let bracket = |[lo, hi]: [f64; 2], at: &str| {
        if lo <= hi {
            Ok(Interval::new(lo, hi))
        } else {
            Err(CliError::Config(format!(
                "potential.symbols.{at}: [{lo}, {hi}] is not ordered"
            )))
        }
    };
    let mut table = BTreeMap::new();
    for (k, v) in &s.table {
        let sym: Symbol = k.parse().map_err(|_| {
            CliError::Config(format!(
                "potential.symbols.table: `{k}` is not a symbol index"
            ))
        })?;
        table.insert(sym, bracket(*v, &format!("table.{k}"))?);
    }
    Ok(PerSymbolBracket {
        table,
        rest: s.rest.map(|r| bracket(r, "rest")).transpose()?,
        variation: s.variation.clone(),
    })
}

pub fn build_potential(section: &PotentialSection) -> Result<PotentialSpec, CliError> {
    parse_potential("potential.expr", &section.expr, section.symbols.as_ref())
}

pub fn build_target(
    section: &TargetSection,
    symbols: Option<&SymbolsSection>,
) -> Result<TargetSpec, CliError> {
    match (section.alpha, &section.potential) {
        (Some(a), None) => Ok(TargetSpec::constant(section.y, a)),
        (None, Some(expr)) => Ok(TargetSpec::potential(
            section.y,
            parse_potential("target.potential", expr, symbols)?,
        )),
        _ => Err(CliError::Config(
            "target needs exactly one of target.alpha and target.potential".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_expressions() {
        let p = parse_potential("k", "sum psi (scale 0.5 (const 2))", None).unwrap();
        assert_eq!(
            p,
            PotentialSpec::sum(
                PotentialSpec::psi(),
                PotentialSpec::scale(0.5, PotentialSpec::constant(2.0))
            )
        );
        let err = parse_potential("k", "sum psi cosnt 2", None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("column 9") && err.contains("cosnt"), "{err}");
        assert!(parse_potential("k", "psi psi", None).is_err());
        assert!(parse_potential("k", "scale", None).is_err());
        assert!(parse_potential("k", "const -1", None).is_err());
        assert!(parse_potential("k", "symbols", None).is_err());
    }

    #[test]
    fn toml_errors_carry_position() {
        let err = parse_document(
            "[system]\nkind = \"doubling\"\nwidth = 3\n",
            Path::new("c.toml"),
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("c.toml:3:1:"), "{msg}");
    }

    #[test]
    fn system_kinds_parse() {
        let doc = parse_document(
            "[system]\nkind = \"counterexample\"\nbeta = 0.5\nphi = { kind = \"power\", p = 1.0 }\n",
            Path::new("c.toml"),
        )
        .unwrap();
        let built = build_system(&doc.system.unwrap(), Path::new(".")).unwrap();
        assert_eq!(built.counterexample.unwrap().n0(), 3);
        let doc = parse_document(
            "[system]\nkind = \"gauss\"\ntruncation = 4\n",
            Path::new("c.toml"),
        )
        .unwrap();
        assert_eq!(
            build_system(&doc.system.unwrap(), Path::new("."))
                .unwrap()
                .system
                .alphabet()
                .len(),
            Some(4)
        );
    }
}
