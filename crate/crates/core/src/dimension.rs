//! Bowen-equation solvers.
//!
//! Every solver brackets `s* = inf{s : P(-s g) ≤ 0}` for a nonnegative `g`
//! by two monotone bisections: the lower end is the largest `s` at which some
//! Fekete lower bound is still positive, the upper end the smallest `s` at
//! which some upper bound (with tail) is nonpositive. Bounds from every depth
//! and every ladder subset remain valid for the full system, so they are all
//! kept and the bracket only tightens as the truncation grows.

use crate::error::{Error, Result};
use crate::exec::{map_items, EvalOptions};
use crate::interval::Interval;
use crate::lse::LogSumExp;
use crate::markov_ifs::{normalize_subset, MarkovSystem, Symbol};
use crate::pressure::{upper_with_tail, ComplementTail, LevelTable, PotentialSpec, Truncation};

/// Smallest exponent tried before halving toward zero.
const S_FLOOR: f64 = 1e-6;
/// Largest exponent tried when the upper side fails at 1.
const S_CAP: f64 = 64.0;

#[derive(Clone, Debug, PartialEq)]
pub struct DimensionResult {
    /// Midpoint of the bracket.
    pub value: f64,
    pub bracket: Interval,
    /// Requested bracket width.
    pub tolerance: f64,
    pub truncation: Truncation,
    /// Both ends come from certified pressure bounds and the width met the
    /// tolerance.
    pub certified: bool,
}

impl DimensionResult {
    pub fn converged(&self) -> bool {
        self.bracket.width() <= self.tolerance
    }
}

/// Truncation ladder, depth limit and tolerance shared by the solvers.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Increasing finite alphabet subsets, tried in order.
    pub ladder: Vec<Vec<Symbol>>,
    pub n_max: usize,
    pub tol: f64,
    pub options: EvalOptions,
}

impl SolverConfig {
    pub fn new(ladder: Vec<Vec<Symbol>>, n_max: usize, tol: f64) -> Self {
        SolverConfig {
            ladder,
            n_max,
            tol,
            options: EvalOptions::default(),
        }
    }

    /// A one-rung ladder.
    pub fn single(f: Vec<Symbol>, n_max: usize, tol: f64) -> Self {
        Self::new(vec![f], n_max, tol)
    }

    pub fn with_options(self, options: EvalOptions) -> Self {
        SolverConfig { options, ..self }
    }

    fn validate(&self, sys: &MarkovSystem) -> Result<Vec<Vec<Symbol>>> {
        if self.ladder.is_empty() {
            return Err(Error::domain("truncation ladder must be nonempty"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::domain("tolerance must be positive"));
        }
        if self.n_max == 0 {
            return Err(Error::domain("n_max must be at least 1"));
        }
        let alphabet = sys.alphabet();
        self.ladder
            .iter()
            .map(|f| {
                let f = normalize_subset(f)?;
                if f.len() < 2 {
                    return Err(Error::domain("ladder subsets need at least two symbols"));
                }
                match f.iter().find(|&&s| !alphabet.contains(s)) {
                    Some(&s) => Err(Error::UnknownSymbol(s)),
                    None => Ok(f),
                }
            })
            .collect()
    }
}

struct Search {
    lo: f64,
    hi: f64,
    lo_certified: bool,
    hi_certified: bool,
}

/// Brackets the switch point of two monotone certificates: `below(s)` proves
/// `s < s*`, `above(s)` proves `s ≥ s*`.
fn search(below: impl Fn(f64) -> bool, above: impl Fn(f64) -> bool, tol: f64) -> Search {
    let mut lo = S_FLOOR;
    let mut lo_certified = below(lo);
    while !lo_certified && lo > 1e-30 {
        lo *= 0.5;
        lo_certified = below(lo);
    }
    if !lo_certified {
        lo = 0.0;
    }

    let mut hi = 1.0;
    let mut hi_certified = above(hi);
    let mut first_not_below = (!below(hi)).then_some(hi);
    while !hi_certified && hi < S_CAP {
        hi *= 2.0;
        hi_certified = above(hi);
        if first_not_below.is_none() && !below(hi) {
            first_not_below = Some(hi);
        }
    }
    if !hi_certified {
        hi = first_not_below.unwrap_or(S_CAP);
    }
    let step = tol / 4.0;

    if lo_certified {
        let (mut a, mut b) = (lo, hi);
        while b - a > step {
            let m = 0.5 * (a + b);
            if below(m) {
                a = m;
            } else {
                b = m;
            }
        }
        lo = a;
    }
    if hi_certified {
        let (mut a, mut b) = (lo, hi);
        while b - a > step {
            let m = 0.5 * (a + b);
            if above(m) {
                b = m;
            } else {
                a = m;
            }
        }
        hi = b;
    }
    Search {
        lo,
        hi: hi.max(lo),
        lo_certified,
        hi_certified,
    }
}

fn result_from(s: &Search, tol: f64, truncation: Truncation) -> DimensionResult {
    let bracket = Interval::new(s.lo, s.hi);
    DimensionResult {
        value: bracket.mid(),
        bracket,
        tolerance: tol,
        truncation,
        certified: s.lo_certified && s.hi_certified && bracket.width() <= tol,
    }
}

/// Solves Moran's equation `Σ r_i^s = 1`.
pub fn moran_solve(ratios: &[f64], tol: f64) -> Result<DimensionResult> {
    if let Some(r) = ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(Error::domain(format!("ratio {r} is not in (0,1)")));
    }
    let logs: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    moran_solve_log(&logs, |_| 0.0, tol)
}

/// Moran's equation for ratios given by their logarithms, plus a countable
/// remainder: `tail(s)` must bound `Σ r_i^s` over the unlisted ratios.
pub fn moran_solve_log(
    log_ratios: &[f64],
    tail: impl Fn(f64) -> f64,
    tol: f64,
) -> Result<DimensionResult> {
    if log_ratios.is_empty() {
        return Err(Error::domain("ratio list is empty"));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    if let Some(l) = log_ratios.iter().find(|l| !(**l < 0.0) || l.is_infinite()) {
        return Err(Error::domain(format!(
            "log ratio {l} does not describe a ratio in (0,1)"
        )));
    }
    let log_sum = |s: f64| {
        log_ratios
            .iter()
            .map(|l| s * l)
            .collect::<LogSumExp>()
            .value()
    };
    let found = search(
        |s| log_sum(s) > 0.0,
        |s| log_sum(s).exp() + tail(s) <= 1.0,
        tol,
    );
    let truncation = Truncation {
        alphabet: (1..=log_ratios.len() as Symbol).collect(),
        depth: 1,
    };
    Ok(result_from(&found, tol, truncation))
}

struct Stage {
    tables: Vec<LevelTable>,
    complement: ComplementTail,
}

/// Brackets `inf{s : P(-s g) ≤ 0}` along the configured truncation ladder.
pub fn solve_pressure_zero(
    sys: &MarkovSystem,
    g: &PotentialSpec,
    cfg: &SolverConfig,
) -> Result<DimensionResult> {
    let ladder = cfg.validate(sys)?;
    g.validate()?;
    let mut stages: Vec<Stage> = Vec::new();
    let mut last = None;
    for f in ladder {
        stages.push(Stage {
            tables: Vec::new(),
            complement: ComplementTail::new(sys, g, &f)?,
        });
        for n in 1..=cfg.n_max {
            let table = match LevelTable::build(sys, g, &f, n, &cfg.options) {
                Ok(t) => t,
                Err(Error::Budget { .. }) if n > 1 => break,
                Err(Error::Budget {
                    requested, budget, ..
                }) => {
                    return Err(Error::Budget {
                        requested,
                        budget,
                        completed_level: last
                            .as_ref()
                            .map(|r: &DimensionResult| r.truncation.depth),
                    })
                }
                Err(e) => return Err(e),
            };
            stages.last_mut().expect("stage pushed").tables.push(table);

            let below = |s: f64| {
                stages
                    .iter()
                    .flat_map(|st| st.tables.iter().rev())
                    .any(|t| t.log_z_inf(s) > 0.0)
            };
            let above = |s: f64| {
                stages.iter().any(|st| {
                    let z1 = st.tables[0].log_z_sup(s);
                    let tail = st.complement.at(sys, s).value;
                    st.tables
                        .iter()
                        .rev()
                        .any(|t| upper_with_tail(t.log_z_sup(s), z1, tail, t.depth) <= 0.0)
                })
            };
            let found = search(below, above, cfg.tol);
            let result = result_from(
                &found,
                cfg.tol,
                Truncation {
                    alphabet: f.clone(),
                    depth: n,
                },
            );
            let done = result.converged() && found.lo_certified && found.hi_certified;
            last = Some(result);
            if done {
                return Ok(last.expect("just set"));
            }
        }
    }
    Ok(last.expect("at least one level evaluated"))
}

/// Dimension of the limit set, `inf{s : P(-sψ) ≤ 0}`.
pub fn bowen_dimension(sys: &MarkovSystem, cfg: &SolverConfig) -> Result<DimensionResult> {
    solve_pressure_zero(sys, &PotentialSpec::psi(), cfg)
}

/// `s(α) = inf{s : P(-sψ) ≤ sα}`.
pub fn shrink_exponent_alpha(
    sys: &MarkovSystem,
    alpha: f64,
    cfg: &SolverConfig,
) -> Result<DimensionResult> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::domain(format!("rate {alpha} must be positive")));
    }
    let g = PotentialSpec::sum(PotentialSpec::psi(), PotentialSpec::constant(alpha));
    solve_pressure_zero(sys, &g, cfg)
}

/// `s(φ) = inf{s : P(-s(ψ + φ)) ≤ 0}`.
pub fn shrink_exponent_potential(
    sys: &MarkovSystem,
    phi: &PotentialSpec,
    cfg: &SolverConfig,
) -> Result<DimensionResult> {
    phi.validate()?;
    let g = PotentialSpec::sum(PotentialSpec::psi(), phi.clone());
    solve_pressure_zero(sys, &g, cfg)
}

/// One `s(α)` row per grid point, evaluated in parallel.
pub fn spectrum(
    sys: &MarkovSystem,
    alphas: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<(f64, DimensionResult)>> {
    if alphas.is_empty() {
        return Err(Error::domain("rate grid is empty"));
    }
    map_items(alphas, cfg.options.reduction, |&a| {
        shrink_exponent_alpha(sys, a, cfg).map(|r| (a, r))
    })
    .into_iter()
    .collect()
}
