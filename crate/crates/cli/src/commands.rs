//! Subcommand dispatch. Each command checks the sections it needs, reads its
//! `[run]` keys and returns a table plus manifest entries.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use shrinkdim::{
    bowen_dimension, cover_sum, cylinder_density, hit_times, pressure_bracket,
    shrink_exponent_alpha, shrink_exponent_potential, spectrum, upper_dimension_certificate,
    verify_moran, zero_dim_cover_report, CertificateParams, DimensionResult, EvalOptions,
    HitStatus, MarkovSystem, Mode, SolverConfig, Symbol, Tail,
};

use crate::config::{
    build_potential, build_system, build_target, parse_document, parse_error,
    serialize_counterexample, ConfigDocument, SystemSection,
};
use crate::error::CliError;
use crate::output::Table;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Pressure,
    Dimension,
    Spectrum,
    Cover,
    Density,
    Hits,
    CounterexampleBuild,
    CounterexampleVerify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Pressure => "pressure",
            Command::Dimension => "dimension",
            Command::Spectrum => "spectrum",
            Command::Cover => "cover",
            Command::Density => "density",
            Command::Hits => "hits",
            Command::CounterexampleBuild => "counterexample-build",
            Command::CounterexampleVerify => "counterexample-verify",
        }
    }
}

/// What a run produced.
pub enum Product {
    Csv(Table),
    /// A serialized document (counterexample builds).
    Document(String),
}

/// Flags that override or complement the document.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub sequential: bool,
    pub budget: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Need {
    Required,
    Optional,
    Unused,
}

fn check_section(command: Command, name: &str, present: bool, need: Need) -> Result<(), CliError> {
    match (need, present) {
        (Need::Required, false) => Err(CliError::Config(format!(
            "the {} command needs a [{name}] section",
            command.name()
        ))),
        (Need::Unused, true) => Err(CliError::Config(format!(
            "the {} command does not use a [{name}] section; remove it",
            command.name()
        ))),
        _ => Ok(()),
    }
}

#[derive(Deserialize)]
struct RunOnly<T> {
    run: Option<T>,
    #[serde(rename = "system")]
    _system: Option<toml::Value>,
    #[serde(rename = "potential")]
    _potential: Option<toml::Value>,
    #[serde(rename = "target")]
    _target: Option<toml::Value>,
}

/// Re-reads `[run]` with the command's key set so errors keep positions.
fn run_section<T: DeserializeOwned>(
    text: &str,
    origin: &Path,
    command: Command,
) -> Result<T, CliError> {
    let parsed: RunOnly<T> =
        toml::from_str(text).map_err(|e| match parse_error(text, origin, &e) {
            CliError::Parse(msg) => CliError::Parse(format!(
                "{msg} (in [run] for the {} command)",
                command.name()
            )),
            other => other,
        })?;
    parsed.run.ok_or_else(|| {
        CliError::Config(format!(
            "the {} command needs a [run] section",
            command.name()
        ))
    })
}

/// A finite alphabet subset: the first `k` symbols, or an explicit list.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum AlphabetSpec {
    First(usize),
    Set(Vec<Symbol>),
}

impl AlphabetSpec {
    fn resolve(&self, sys: &MarkovSystem) -> Vec<Symbol> {
        match self {
            AlphabetSpec::First(k) => sys.alphabet().first(*k),
            AlphabetSpec::Set(v) => v.clone(),
        }
    }
}

fn resolve_alphabet(
    sys: &MarkovSystem,
    spec: Option<&AlphabetSpec>,
) -> Result<Vec<Symbol>, CliError> {
    match spec {
        Some(s) => Ok(s.resolve(sys)),
        None if sys.alphabet().is_finite() => Ok(sys.alphabet().first(usize::MAX)),
        None => Err(CliError::Config(
            "run.alphabet is required for systems with infinitely many branches".into(),
        )),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum TailSpec {
    Named(String),
    Value(f64),
}

fn tail_mode(spec: Option<&TailSpec>) -> Result<Tail, CliError> {
    match spec {
        None => Ok(Tail::Auto),
        Some(TailSpec::Named(s)) if s == "auto" => Ok(Tail::Auto),
        Some(TailSpec::Named(s)) if s == "absent" => Ok(Tail::Absent),
        Some(TailSpec::Value(t)) if *t >= 0.0 => Ok(Tail::Given(*t)),
        Some(other) => Err(CliError::Config(format!(
            "run.tail must be \"auto\", \"absent\" or a nonnegative number, not {other:?}"
        ))),
    }
}

fn options(budget: Option<u64>, over: Overrides) -> EvalOptions {
    let mut o = if over.sequential {
        EvalOptions::sequential()
    } else {
        EvalOptions::default()
    };
    if let Some(b) = over.budget.or(budget) {
        o.budget = b;
    }
    o
}

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

fn alphabet_label(f: &[Symbol]) -> String {
    f.iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Keys of `[run]` shared by every command.
#[derive(Debug, Clone, Default)]
pub struct RunSettings {
    pub command: Option<String>,
    pub out: Option<String>,
}

impl RunSettings {
    pub fn from_table(run: &toml::Table) -> Result<Self, CliError> {
        let text = |key: &str| match run.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(CliError::Config(format!("run.{key} must be a string"))),
        };
        Ok(RunSettings {
            command: text("command")?,
            out: text("out")?,
        })
    }

    /// Reads the settings from a whole document.
    pub fn from_document(text: &str, origin: &Path) -> Result<Self, CliError> {
        match parse_document(text, origin)?.run {
            Some(run) => Self::from_table(&run),
            None => Ok(Self::default()),
        }
    }
}

/// Runs `command` on the document text. `origin` locates relative paths.
pub fn run(
    command: Command,
    text: &str,
    origin: &Path,
    over: Overrides,
) -> Result<Product, CliError> {
    let doc = parse_document(text, origin)?;
    let base = origin.parent().unwrap_or(Path::new("."));
    let system = doc.system.as_ref().ok_or_else(|| {
        CliError::Config(format!(
            "the {} command needs a [system] section",
            command.name()
        ))
    })?;

    let (potential, target) = match command {
        Command::Pressure => (Need::Required, Need::Unused),
        Command::Dimension => (Need::Optional, Need::Unused),
        Command::Spectrum | Command::Density => (Need::Unused, Need::Unused),
        Command::Cover | Command::Hits => (Need::Optional, Need::Required),
        Command::CounterexampleBuild | Command::CounterexampleVerify => {
            (Need::Unused, Need::Unused)
        }
    };
    check_section(command, "potential", doc.potential.is_some(), potential)?;
    check_section(command, "target", doc.target.is_some(), target)?;
    if matches!(
        command,
        Command::CounterexampleBuild | Command::CounterexampleVerify
    ) && !matches!(system, SystemSection::Counterexample(_))
    {
        return Err(CliError::Config(format!(
            "the {} command needs system.kind = \"counterexample\", found \"{}\"",
            command.name(),
            system.kind()
        )));
    }
    if let Some(run) = &doc.run {
        let settings = RunSettings::from_table(run)?;
        if let Some(name) = settings.command.as_deref().filter(|n| *n != command.name()) {
            return Err(CliError::Config(format!(
                "run.command = \"{name}\" does not match the {} subcommand",
                command.name()
            )));
        }
        if command == Command::CounterexampleBuild {
            if let Some(key) = run
                .keys()
                .find(|k| !matches!(k.as_str(), "command" | "out"))
            {
                return Err(CliError::Config(format!(
                    "the counterexample-build command does not use run.{key}"
                )));
            }
        }
    }

    let built = build_system(system, base)?;
    let sys = &built.system;
    let mut table = match command {
        Command::Pressure => pressure(sys, &doc, text, origin, over)?,
        Command::Dimension => dimension(sys, &doc, text, origin, over)?,
        Command::Spectrum => spectrum_cmd(sys, text, origin, over)?,
        Command::Cover => cover(sys, &doc, text, origin, over)?,
        Command::Density => density(sys, text, origin, over)?,
        Command::Hits => hits(sys, &doc, text, origin)?,
        Command::CounterexampleBuild => {
            let ce = built
                .counterexample
                .as_ref()
                .expect("counterexample system");
            let body = serialize_counterexample(ce)?;
            let header = format!(
                "# shrinkdim {} counterexample-build\n# beta = {}, n0 = {}, moran residual = {:e}\n",
                env!("CARGO_PKG_VERSION"),
                ce.beta(),
                ce.n0(),
                verify_moran(ce)
            );
            return Ok(Product::Document(header + &body));
        }
        Command::CounterexampleVerify => {
            let ce = built
                .counterexample
                .as_ref()
                .expect("counterexample system");
            counterexample_verify(ce, &doc, text, origin)?
        }
    };
    table
        .manifest
        .insert(0, ("command".into(), command.name().into()));
    table
        .manifest
        .insert(1, ("system".into(), system.kind().into()));
    table.manifest.insert(
        2,
        (
            "reduction".into(),
            if over.sequential {
                "sequential"
            } else {
                "parallel"
            }
            .into(),
        ),
    );
    Ok(Product::Csv(table))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PressureRun {
    #[serde(rename = "command")]
    _command: Option<String>,
    #[serde(rename = "out")]
    _out: Option<String>,
    n: usize,
    alphabet: Option<AlphabetSpec>,
    tail: Option<TailSpec>,
    budget: Option<u64>,
}

fn pressure(
    sys: &MarkovSystem,
    doc: &ConfigDocument,
    text: &str,
    origin: &Path,
    over: Overrides,
) -> Result<Table, CliError> {
    let run: PressureRun = run_section(text, origin, Command::Pressure)?;
    let pot = build_potential(doc.potential.as_ref().expect("checked"))?;
    let f = resolve_alphabet(sys, run.alphabet.as_ref())?;
    let opts = options(run.budget, over);
    // Level `n` first: the bracket alone would stop quietly at the deepest
    // level that fits the budget.
    let z_inf = shrinkdim::partition_sum(sys, &pot, &f, run.n, Mode::Inf, &opts)?;
    let z_sup = shrinkdim::partition_sum(sys, &pot, &f, run.n, Mode::Sup, &opts)?;
    let est = pressure_bracket(sys, &pot, &f, run.n, tail_mode(run.tail.as_ref())?, &opts)?;
    let depth = est.truncation.depth;
    let mut t = Table::new(&[
        "n",
        "alphabet_size",
        "log_z_inf",
        "log_z_sup",
        "lower",
        "upper",
        "diverged",
    ]);
    t.push(vec![
        depth.to_string(),
        f.len().to_string(),
        fmt(z_inf),
        fmt(z_sup),
        fmt(est.lower),
        fmt(est.upper),
        est.diverged.to_string(),
    ]);
    t.note("alphabet", alphabet_label(&est.truncation.alphabet));
    t.note("depth_used", depth.to_string());
    t.note("budget", opts.budget.to_string());
    Ok(t)
}

/// A truncation ladder: alphabet sizes (first `k` symbols) or explicit sets.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum LadderSpec {
    Sizes(Vec<usize>),
    Sets(Vec<Vec<Symbol>>),
}

impl LadderSpec {
    fn resolve(&self, sys: &MarkovSystem) -> Vec<Vec<Symbol>> {
        match self {
            LadderSpec::Sizes(v) => v.iter().map(|&k| sys.alphabet().first(k)).collect(),
            LadderSpec::Sets(v) => v.clone(),
        }
    }
}

fn default_ladder(
    sys: &MarkovSystem,
    ladder: Option<&LadderSpec>,
) -> Result<Vec<Vec<Symbol>>, CliError> {
    match ladder {
        Some(l) => Ok(l.resolve(sys)),
        None if sys.alphabet().is_finite() => Ok(vec![sys.alphabet().first(usize::MAX)]),
        None => Err(CliError::Config(
            "run.ladder is required for systems with infinitely many branches".into(),
        )),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DimensionRun {
    #[serde(rename = "command")]
    _command: Option<String>,
    #[serde(rename = "out")]
    _out: Option<String>,
    /// `bowen` (default), `rate` or `potential`.
    mode: Option<String>,
    alpha: Option<f64>,
    ladder: Option<LadderSpec>,
    n_max: usize,
    tol: f64,
    budget: Option<u64>,
}

fn solver_config(
    sys: &MarkovSystem,
    ladder: Option<&LadderSpec>,
    n_max: usize,
    tol: f64,
    opts: EvalOptions,
) -> Result<SolverConfig, CliError> {
    Ok(SolverConfig::new(default_ladder(sys, ladder)?, n_max, tol).with_options(opts))
}

const DIMENSION_HEADER: [&str; 8] = [
    "value",
    "lo",
    "hi",
    "tolerance",
    "certified",
    "alphabet_size",
    "max_symbol",
    "depth",
];

fn dimension_cells(r: &DimensionResult) -> Vec<String> {
    vec![
        fmt(r.value),
        fmt(r.bracket.lo),
        fmt(r.bracket.hi),
        fmt(r.tolerance),
        r.certified.to_string(),
        r.truncation.alphabet.len().to_string(),
        r.truncation
            .alphabet
            .last()
            .map_or(String::new(), |s| s.to_string()),
        r.truncation.depth.to_string(),
    ]
}

fn dimension(
    sys: &MarkovSystem,
    doc: &ConfigDocument,
    text: &str,
    origin: &Path,
    over: Overrides,
) -> Result<Table, CliError> {
    let run: DimensionRun = run_section(text, origin, Command::Dimension)?;
    let cfg = solver_config(
        sys,
        run.ladder.as_ref(),
        run.n_max,
        run.tol,
        options(run.budget, over),
    )?;
    let mode = run.mode.as_deref().unwrap_or("bowen");
    let unused =
        |what: &str| CliError::Config(format!("{what} is not used with run.mode = \"{mode}\""));
    let (quantity, result) = match mode {
        "bowen" => {
            if doc.potential.is_some() {
                return Err(unused("[potential]"));
            }
            if run.alpha.is_some() {
                return Err(unused("run.alpha"));
            }
            ("dim", bowen_dimension(sys, &cfg)?)
        }
        "rate" => {
            if doc.potential.is_some() {
                return Err(unused("[potential]"));
            }
            let alpha = run
                .alpha
                .ok_or_else(|| CliError::Config("run.mode = \"rate\" needs run.alpha".into()))?;
            ("s_alpha", shrink_exponent_alpha(sys, alpha, &cfg)?)
        }
        "potential" => {
            if run.alpha.is_some() {
                return Err(unused("run.alpha"));
            }
            let section = doc.potential.as_ref().ok_or_else(|| {
                CliError::Config("run.mode = \"potential\" needs a [potential] section".into())
            })?;
            (
                "s_phi",
                shrink_exponent_potential(sys, &build_potential(section)?, &cfg)?,
            )
        }
        other => {
            return Err(CliError::Config(format!(
                "run.mode must be \"bowen\", \"rate\" or \"potential\", not \"{other}\""
            )))
        }
    };
    let mut header = vec!["quantity"];
    header.extend(DIMENSION_HEADER);
    let mut t = Table::new(&header);
    let mut row = vec![quantity.to_string()];
    row.extend(dimension_cells(&result));
    t.push(row);
    t.note("certified", result.certified.to_string());
    t.note("alphabet", alphabet_label(&result.truncation.alphabet));
    t.note("depth_used", result.truncation.depth.to_string());
    Ok(t)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectrumRun {
    #[serde(rename = "command")]
    _command: Option<String>,
    #[serde(rename = "out")]
    _out: Option<String>,
    alphas: Vec<f64>,
    ladder: Option<LadderSpec>,
    n_max: usize,
    tol: f64,
    budget: Option<u64>,
}

fn spectrum_cmd(
    sys: &MarkovSystem,
    text: &str,
    origin: &Path,
    over: Overrides,
) -> Result<Table, CliError> {
    let run: SpectrumRun = run_section(text, origin, Command::Spectrum)?;
    let cfg = solver_config(
        sys,
        run.ladder.as_ref(),
        run.n_max,
        run.tol,
        options(run.budget, over),
    )?;
    let rows = spectrum(sys, &run.alphas, &cfg)?;
    let mut header = vec!["alpha"];
    header.extend(DIMENSION_HEADER);
    let mut t = Table::new(&header);
    for (alpha, r) in &rows {
        let mut row = vec![fmt(*alpha)];
        row.extend(dimension_cells(r));
        t.push(row);
    }
    t.note(
        "certified",
        rows.iter().all(|(_, r)| r.certified).to_string(),
    );
    Ok(t)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CoverRun {
    #[serde(rename = "command")]
    _command: Option<String>,
    #[serde(rename = "out")]
    _out: Option<String>,
    s: f64,
    m: usize,
    n_max: usize,
    alphabet: Option<AlphabetSpec>,
    decay_window: Option<usize>,
    budget: Option<u64>,
}

fn target_of(doc: &ConfigDocument) -> Result<shrinkdim::TargetSpec, CliError> {
    let symbols = doc.potential.as_ref().and_then(|p| p.symbols.as_ref());
    build_target(doc.target.as_ref().expect("checked"), symbols)
}

fn cover(
    sys: &MarkovSystem,
    doc: &ConfigDocument,
    text: &str,
    origin: &Path,
    over: Overrides,
) -> Result<Table, CliError> {
    let run: CoverRun = run_section(text, origin, Command::Cover)?;
    if let Some(p) = &doc.potential {
        if p.symbols.is_none() {
            return Err(CliError::Config(
                "the cover command reads [potential] only for its symbols table; put the rate in target.potential".into(),
            ));
        }
    }
    let target = target_of(doc)?;
    let f = resolve_alphabet(sys, run.alphabet.as_ref())?;
    let opts = options(run.budget, over);
    let (report, cert) = match run.decay_window {
        Some(w) => {
            let params = CertificateParams {
                m: run.m,
                n_max: run.n_max,
                alphabet: f.clone(),
                decay_window: w,
            };
            let c = upper_dimension_certificate(sys, &target, run.s, &params, &opts)?;
            (c.report.clone(), Some(c))
        }
        None => (
            cover_sum(sys, &target, run.s, run.m, run.n_max, &f, &opts)?,
            None,
        ),
    };
    let mut t = Table::new(&["n", "level_sum", "ratio"]);
    let mut prev: Option<f64> = None;
    for (n, v) in &report.per_level {
        let ratio = prev
            .filter(|p| *p > 0.0)
            .map_or(String::new(), |p| fmt(v / p));
        t.push(vec![n.to_string(), fmt(*v), ratio]);
        prev = Some(*v);
    }
    t.note("total", fmt(report.total));
    t.note("alphabet", alphabet_label(&f));
    if let Some(c) = cert {
        t.note("accepted", c.accepted.to_string());
        t.note("max_ratio", c.ratio.map_or("none".into(), fmt));
        t.note("implied_total", c.implied_total.map_or("none".into(), fmt));
        t.note("note", c.note.to_string());
    }
    Ok(t)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityRun {
    #[serde(rename = "command")]
    _command: Option<String>,
    #[serde(rename = "out")]
    _out: Option<String>,
    y: f64,
    depths: Vec<usize>,
    radii: Vec<f64>,
    alphabet: Option<AlphabetSpec>,
    budget: Option<u64>,
}

fn density(
    sys: &MarkovSystem,
    text: &str,
    origin: &Path,
    over: Overrides,
) -> Result<Table, CliError> {
    let run: DensityRun = run_section(text, origin, Command::Density)?;
    let f = resolve_alphabet(sys, run.alphabet.as_ref())?;
    let opts = options(run.budget, over);
    let mut t = Table::new(&["n", "r", "density"]);
    for &n in &run.depths {
        for &r in &run.radii {
            let d = cylinder_density(sys, run.y, n, r, &f, &opts)?;
            t.push(vec![n.to_string(), fmt(r), fmt(d)]);
        }
    }
    t.note("y", fmt(run.y));
    t.note("alphabet", alphabet_label(&f));
    Ok(t)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HitsRun {
    #[serde(rename = "command")]
    _command: Option<String>,
    #[serde(rename = "out")]
    _out: Option<String>,
    /// Symbols repeated cyclically to form the infinite code.
    code: Vec<Symbol>,
    horizon: usize,
}

fn hits(
    sys: &MarkovSystem,
    doc: &ConfigDocument,
    text: &str,
    origin: &Path,
) -> Result<Table, CliError> {
    let run: HitsRun = run_section(text, origin, Command::Hits)?;
    if run.code.is_empty() {
        return Err(CliError::Config(
            "run.code must list at least one symbol".into(),
        ));
    }
    let target = target_of(doc)?;
    let code = &run.code;
    let report = hit_times(sys, |k| Some(code[k % code.len()]), &target, run.horizon)?;
    let mut t = Table::new(&[
        "n",
        "status",
        "distance_lo",
        "distance_hi",
        "threshold_lo",
        "threshold_hi",
    ]);
    for e in &report.epochs {
        let status = match e.status {
            HitStatus::Hit => "hit",
            HitStatus::Miss => "miss",
            HitStatus::Undecided => "undecided",
        };
        let (dlo, dhi) = e
            .distance
            .map_or((String::new(), String::new()), |d| (fmt(d.lo), fmt(d.hi)));
        t.push(vec![
            e.n.to_string(),
            status.into(),
            dlo,
            dhi,
            fmt(e.threshold.lo),
            fmt(e.threshold.hi),
        ]);
    }
    t.note("hits", report.hits().len().to_string());
    t.note("misses", report.misses().len().to_string());
    t.note("undecided", report.undecided().len().to_string());
    Ok(t)
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct VerifyRun {
    #[serde(rename = "command")]
    _command: Option<String>,
    #[serde(rename = "out")]
    _out: Option<String>,
    /// Cover exponents for the zero-dimension report.
    eps: Option<Vec<f64>>,
    /// Start level per exponent; defaults to the first integer above `1/eps`.
    m: Option<Vec<usize>>,
    n_max: Option<usize>,
    /// Bowen-dimension tolerance.
    tol: Option<f64>,
}

/// Largest acceptable Moran residual.
const MORAN_BOUND: f64 = 1e-10;

fn counterexample_verify(
    ce: &shrinkdim::CounterexampleSystem,
    doc: &ConfigDocument,
    text: &str,
    origin: &Path,
) -> Result<Table, CliError> {
    let run: VerifyRun = if doc.run.is_some() {
        run_section(text, origin, Command::CounterexampleVerify)?
    } else {
        VerifyRun::default()
    };
    let eps = run.eps.unwrap_or_else(|| vec![0.5]);
    let starts: Vec<usize> = match run.m {
        Some(m) if m.len() == eps.len() => m,
        Some(m) => {
            return Err(CliError::Config(format!(
                "run.m has {} entries but run.eps has {}",
                m.len(),
                eps.len()
            )))
        }
        None => eps
            .iter()
            .map(|e| (e.recip().floor() as usize) + 1)
            .collect(),
    };
    let n_max = run.n_max.unwrap_or(12);
    let tol = run.tol.unwrap_or(1e-9);

    let mut t = Table::new(&["check", "value", "bound", "pass"]);
    let residual = verify_moran(ce);
    t.push(vec![
        "moran_residual".into(),
        fmt(residual),
        fmt(MORAN_BOUND),
        (residual <= MORAN_BOUND).to_string(),
    ]);

    let cfg = SolverConfig::single(ce.symbols_through(ce.n0() + 5), 1, tol);
    let dim = bowen_dimension(ce.as_system(), &cfg)?;
    let miss = (dim.value - ce.beta()).abs();
    let dim_bound = tol.max(1e-6);
    t.push(vec![
        "dimension_minus_beta".into(),
        fmt(miss),
        fmt(dim_bound),
        (miss <= dim_bound && dim.bracket.contains(ce.beta())).to_string(),
    ]);

    for (&e, &m) in eps.iter().zip(&starts) {
        let rep = zero_dim_cover_report(ce, e, m, n_max)?;
        for ((n, v), (_, b)) in rep.report.per_level.iter().zip(&rep.level_bounds) {
            t.push(vec![
                format!("zero_dim_level[eps={e},n={n}]"),
                fmt(*v),
                fmt(*b),
                (v <= b).to_string(),
            ]);
        }
        t.push(vec![
            format!("zero_dim_total[eps={e}]"),
            fmt(rep.report.total),
            fmt(rep.series_bound),
            rep.total_within_bound.to_string(),
        ]);
    }
    t.note("beta", fmt(ce.beta()));
    t.note("n0", ce.n0().to_string());
    t.note("table_through", ce.materialized_to().to_string());
    t.note("certified", dim.certified.to_string());
    Ok(t)
}
