//! Birkhoff-sum brackets and two-sided truncated pressure estimates.
//!
//! Potentials are nonnegative. Every pressure routine here evaluates the
//! pressure of the *negated* potential, `P(-g)`, so partition sums weight a
//! word by `exp(-S_n g)`. `Scale(s, Sum(psi, phi))` therefore stands for
//! `P(-s(ψ + φ))`.
//!
//! For a finite alphabet subset `F`, sup-mode sums (weight `sup exp(-S_n g)`)
//! are submultiplicative and inf-mode sums supermultiplicative, so by Fekete
//! `(1/n) log Z_n^inf ≤ P_F ≤ P ≤ (1/n) log Z_n^sup` at every depth, the last
//! inequality needing a tail term when `F` does not exhaust the alphabet.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::exec::{map_chunks, EvalOptions, Reduction};
use crate::interval::Interval;
use crate::lse::{log_add, LogSumExp};
use crate::markov_ifs::{
    check_budget, decode_word, normalize_subset, word_count, MarkovSystem, Symbol, Word,
};

/// A nonnegative potential, as an expression over the log-derivative.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSpec {
    /// `ψ = log |T'|`.
    LogDerivative,
    Scale(f64, Box<PotentialSpec>),
    Sum(Box<PotentialSpec>, Box<PotentialSpec>),
    Constant(f64),
    PerSymbol(PerSymbolBracket),
}

/// Per-branch bounds `[inf, sup]` of a potential on `V_i`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PerSymbolBracket {
    pub table: BTreeMap<Symbol, Interval>,
    /// Bracket for every symbol missing from `table`.
    pub rest: Option<Interval>,
    /// `var_n(S_n φ) / n` for `n = 1, 2, …`; nonincreasing toward 0.
    pub variation: Vec<f64>,
}

impl PerSymbolBracket {
    pub fn bracket(&self, s: Symbol) -> Result<Interval> {
        self.table
            .get(&s)
            .copied()
            .or(self.rest)
            .ok_or_else(|| Error::domain(format!("no potential bracket for symbol {s}")))
    }
}

/// Lower model `g ≥ kappa·ψ + constant` on branches beyond some symbol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct TailModel {
    pub kappa: f64,
    pub constant: f64,
    /// True when the model is an identity rather than a bound.
    pub exact: bool,
}

impl PotentialSpec {
    pub fn psi() -> Self {
        PotentialSpec::LogDerivative
    }

    pub fn constant(c: f64) -> Self {
        PotentialSpec::Constant(c)
    }

    pub fn scale(c: f64, inner: PotentialSpec) -> Self {
        PotentialSpec::Scale(c, Box::new(inner))
    }

    pub fn sum(a: PotentialSpec, b: PotentialSpec) -> Self {
        PotentialSpec::Sum(Box::new(a), Box::new(b))
    }

    /// Checks nonnegativity and the variation data.
    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::LogDerivative => Ok(()),
            PotentialSpec::Scale(c, inner) => {
                if !(*c >= 0.0 && c.is_finite()) {
                    return Err(Error::domain(format!(
                        "scale factor {c} must be finite and nonnegative"
                    )));
                }
                inner.validate()
            }
            PotentialSpec::Sum(a, b) => {
                a.validate()?;
                b.validate()
            }
            PotentialSpec::Constant(c) => {
                if *c >= 0.0 && c.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain(format!(
                        "constant {c} must be finite and nonnegative"
                    )))
                }
            }
            PotentialSpec::PerSymbol(p) => {
                for (s, b) in p
                    .table
                    .iter()
                    .map(|(s, b)| (Some(*s), b))
                    .chain(p.rest.iter().map(|b| (None, b)))
                {
                    if !(b.lo >= 0.0 && b.lo <= b.hi && b.hi.is_finite()) {
                        let at =
                            s.map_or_else(|| "the default".to_string(), |s| format!("symbol {s}"));
                        return Err(Error::domain(format!(
                            "bracket {b:?} for {at} must be finite, ordered and nonnegative"
                        )));
                    }
                }
                if let Some(v1) = p.variation.first() {
                    if !v1.is_finite() {
                        return Err(Error::domain("first variation must be finite"));
                    }
                }
                if p.variation.windows(2).any(|w| w[1] > w[0])
                    || p.variation.iter().any(|v| *v < 0.0)
                {
                    return Err(Error::domain(
                        "variation sequence must be nonnegative and nonincreasing",
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn uses_psi(&self) -> bool {
        match self {
            PotentialSpec::LogDerivative => true,
            PotentialSpec::Scale(_, p) => p.uses_psi(),
            PotentialSpec::Sum(a, b) => a.uses_psi() || b.uses_psi(),
            PotentialSpec::Constant(_) | PotentialSpec::PerSymbol(_) => false,
        }
    }

    /// Bracket for `S_n(g)` over `V_ω` given the cylinder's `log |φ_ω'|` bracket.
    fn eval(&self, word: &[Symbol], log_deriv: Interval) -> Result<Interval> {
        Ok(match self {
            PotentialSpec::LogDerivative => -log_deriv,
            PotentialSpec::Scale(c, p) => p.eval(word, log_deriv)?.scale(*c),
            PotentialSpec::Sum(a, b) => a.eval(word, log_deriv)? + b.eval(word, log_deriv)?,
            PotentialSpec::Constant(c) => Interval::point(c * word.len() as f64),
            PotentialSpec::PerSymbol(p) => {
                let mut acc = Interval::point(0.0);
                for &s in word {
                    acc = acc + p.bracket(s)?;
                }
                acc
            }
        })
    }

    pub(crate) fn tail_model(&self, beyond: Symbol) -> TailModel {
        match self {
            PotentialSpec::LogDerivative => TailModel {
                kappa: 1.0,
                constant: 0.0,
                exact: true,
            },
            PotentialSpec::Constant(c) => TailModel {
                kappa: 0.0,
                constant: *c,
                exact: true,
            },
            PotentialSpec::Scale(a, p) => {
                let m = p.tail_model(beyond);
                TailModel {
                    kappa: a * m.kappa,
                    constant: a * m.constant,
                    exact: m.exact,
                }
            }
            PotentialSpec::Sum(a, b) => {
                let (x, y) = (a.tail_model(beyond), b.tail_model(beyond));
                TailModel {
                    kappa: x.kappa + y.kappa,
                    constant: x.constant + y.constant,
                    exact: x.exact && y.exact,
                }
            }
            PotentialSpec::PerSymbol(p) => {
                let listed = p.table.range(beyond.saturating_add(1)..).map(|(_, b)| b.lo);
                let floor = listed
                    .chain(p.rest.map(|b| b.lo))
                    .fold(f64::INFINITY, f64::min);
                TailModel {
                    kappa: 0.0,
                    constant: if floor.is_finite() && p.rest.is_some() {
                        floor
                    } else {
                        0.0
                    },
                    exact: false,
                }
            }
        }
    }
}

/// Which end of a Birkhoff bracket a partition sum uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Largest weight on each cylinder: `exp(-inf S_n g)`.
    Sup,
    /// Smallest weight on each cylinder: `exp(-sup S_n g)`.
    Inf,
}

/// Encloses the range of `S_n(g)` over `V_ω`.
pub fn birkhoff_bracket(sys: &MarkovSystem, pot: &PotentialSpec, word: &Word) -> Result<Interval> {
    bracket_of(sys, pot, word.symbols())
}

pub(crate) fn bracket_of(
    sys: &MarkovSystem,
    pot: &PotentialSpec,
    word: &[Symbol],
) -> Result<Interval> {
    let log_deriv = if pot.uses_psi() {
        sys.cylinder_core(word)?.log_deriv
    } else {
        for &s in word {
            sys.branch(s)?;
        }
        Interval::point(0.0)
    };
    pot.eval(word, log_deriv)
}

fn check_subset(sys: &MarkovSystem, f: &[Symbol]) -> Result<Vec<Symbol>> {
    let f = normalize_subset(f)?;
    let alphabet = sys.alphabet();
    if let Some(&s) = f.iter().find(|&&s| !alphabet.contains(s)) {
        return Err(Error::UnknownSymbol(s));
    }
    Ok(f)
}

/// Both inf- and sup-mode `log Z_n` in one enumeration.
fn partition_pair(
    sys: &MarkovSystem,
    pot: &PotentialSpec,
    f: &[Symbol],
    n: usize,
    opts: &EvalOptions,
) -> Result<(f64, f64)> {
    let total = check_budget(f.len(), n, opts.budget)?;
    let parts = map_chunks(
        total,
        opts.reduction,
        |range| -> Result<(LogSumExp, LogSumExp)> {
            let mut buf = Vec::with_capacity(n);
            let (mut inf, mut sup) = (LogSumExp::default(), LogSumExp::default());
            for k in range {
                decode_word(f, n, k, &mut buf);
                let b = bracket_of(sys, pot, &buf)?;
                inf.push(-b.hi);
                sup.push(-b.lo);
            }
            Ok((inf, sup))
        },
    );
    let (mut inf, mut sup) = (LogSumExp::default(), LogSumExp::default());
    for part in parts {
        let (i, s) = part?;
        inf = inf.merge(i);
        sup = sup.merge(s);
    }
    Ok((inf.value(), sup.value()))
}

/// `log Σ_{ω ∈ Fⁿ} exp(-b_ω)` where `b_ω` is the inf (sup mode) or sup (inf
/// mode) end of the Birkhoff bracket of `ω`.
pub fn partition_sum(
    sys: &MarkovSystem,
    pot: &PotentialSpec,
    f: &[Symbol],
    n: usize,
    mode: Mode,
    opts: &EvalOptions,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("depth must be at least 1"));
    }
    let f = check_subset(sys, f)?;
    let (inf, sup) = partition_pair(sys, pot, &f, n, opts)?;
    Ok(match mode {
        Mode::Sup => sup,
        Mode::Inf => inf,
    })
}

/// Largest depth `n` with `kⁿ ≤ budget` (at least 1).
pub fn default_depth(alphabet_size: usize, budget: u64) -> usize {
    let mut n = 1;
    while word_count(alphabet_size, n + 1).is_some_and(|c| c <= budget) && n < 4096 {
        n += 1;
    }
    n
}

/// How the upper bound accounts for symbols outside `F`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tail {
    /// Derive the complement's depth-1 sup-sum from the system.
    Auto,
    /// Use this value of `Σ_{i ∉ F} sup exp(-g)` on level-1 cylinders.
    Given(f64),
    /// No tail: the upper bound is `+∞` unless `F` is the whole alphabet.
    Absent,
}

/// Upper bound for the level-1 sup-sum over symbols outside `F`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailBound {
    pub value: f64,
    /// The complement sum is provably infinite, not merely unbounded here.
    pub divergent: bool,
}

/// Complement data for `F`, reusable across scalings `s ↦ Scale(s, g)`.
#[derive(Clone, Debug)]
pub(crate) struct ComplementTail {
    /// `inf S_1 g` on each listed complement symbol below `beyond`.
    finite_infs: Vec<f64>,
    beyond: Symbol,
    model: Option<TailModel>,
}

impl ComplementTail {
    pub fn new(sys: &MarkovSystem, g: &PotentialSpec, f: &[Symbol]) -> Result<Self> {
        let alphabet = sys.alphabet();
        let beyond = *f.last().expect("nonempty subset");
        let candidates = if alphabet.is_finite() {
            alphabet.first(usize::MAX)
        } else {
            alphabet.up_to(beyond)
        };
        let mut finite_infs = Vec::new();
        for s in candidates {
            if f.binary_search(&s).is_err() {
                finite_infs.push(bracket_of(sys, g, &[s])?.lo);
            }
        }
        let model = (!alphabet.is_finite()).then(|| g.tail_model(beyond));
        Ok(ComplementTail {
            finite_infs,
            beyond,
            model,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.finite_infs.is_empty() && self.model.is_none()
    }

    /// The bound for `Scale(s, g)`.
    pub fn at(&self, sys: &MarkovSystem, s: f64) -> TailBound {
        let finite: f64 = self.finite_infs.iter().map(|b| (-s * b).exp()).sum();
        let (infinite, divergent) = match self.model {
            None => (0.0, false),
            Some(m) => {
                let t =
                    (-s * m.constant).exp() * sys.sup_deriv_power_tail(self.beyond, s * m.kappa);
                (t, t.is_infinite() && m.exact)
            }
        };
        TailBound {
            value: (finite + infinite).next_up(),
            divergent,
        }
    }
}

/// Alphabet subset and depth a result was computed at.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Truncation {
    pub alphabet: Vec<Symbol>,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PressureEstimate {
    pub lower: f64,
    pub upper: f64,
    pub truncation: Truncation,
    pub diverged: bool,
}

/// `(1/n) log(Z_n(F) + (Z_1(F) + t)ⁿ − Z_1(F)ⁿ)`: words with at least one
/// symbol outside `F` are dominated through the level-1 sums.
pub(crate) fn upper_with_tail(log_zn: f64, log_z1: f64, tail: f64, n: usize) -> f64 {
    if tail == 0.0 {
        return log_zn / n as f64;
    }
    if tail.is_infinite() {
        return f64::INFINITY;
    }
    let nf = n as f64;
    let ratio = (tail.ln() - log_z1).exp();
    let extra = nf * log_z1 + (nf * ratio.ln_1p()).exp_m1().ln();
    log_add(log_zn, extra) / nf
}

/// Fekete bracket for `P(-g)` using depths `1..=n_max` over `F`.
///
/// Depths whose word count exceeds the budget are skipped; the depth actually
/// reached is recorded in the truncation. With an infinite tail the upper
/// bound is `+∞` and `diverged` reports whether the pressure itself is
/// infinite.
pub fn pressure_bracket(
    sys: &MarkovSystem,
    pot: &PotentialSpec,
    f: &[Symbol],
    n_max: usize,
    tail: Tail,
    opts: &EvalOptions,
) -> Result<PressureEstimate> {
    if n_max == 0 {
        return Err(Error::domain("n_max must be at least 1"));
    }
    let f = check_subset(sys, f)?;
    let complement = ComplementTail::new(sys, pot, &f)?;
    let tail = if complement.is_empty() {
        TailBound {
            value: 0.0,
            divergent: false,
        }
    } else {
        match tail {
            Tail::Auto => complement.at(sys, 1.0),
            Tail::Given(t) => TailBound {
                value: t,
                divergent: false,
            },
            Tail::Absent => TailBound {
                value: f64::INFINITY,
                divergent: false,
            },
        }
    };

    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut log_z1 = f64::NAN;
    let mut depth = 0;
    for n in 1..=n_max {
        let (inf, sup) = match partition_pair(sys, pot, &f, n, opts) {
            Ok(v) => v,
            Err(Error::Budget { .. }) if n > 1 => break,
            Err(e) => return Err(e),
        };
        if n == 1 {
            log_z1 = sup;
        }
        lower = lower.max(inf / n as f64);
        upper = upper.min(upper_with_tail(sup, log_z1, tail.value, n));
        depth = n;
    }
    Ok(PressureEstimate {
        lower,
        upper,
        truncation: Truncation { alphabet: f, depth },
        diverged: tail.divergent,
    })
}

/// Per-word Birkhoff brackets of `g` on `Fⁿ`, for repeated evaluation of
/// `P(-s g)` at many `s`.
#[derive(Clone, Debug)]
pub(crate) struct LevelTable {
    pub depth: usize,
    /// `sup S_n g` per word.
    sup: Vec<f64>,
    /// `inf S_n g` per word.
    inf: Vec<f64>,
    reduction: Reduction,
}

impl LevelTable {
    pub fn build(
        sys: &MarkovSystem,
        g: &PotentialSpec,
        f: &[Symbol],
        n: usize,
        opts: &EvalOptions,
    ) -> Result<Self> {
        let total = check_budget(f.len(), n, opts.budget)?;
        let parts = map_chunks(total, opts.reduction, |range| -> Result<Vec<Interval>> {
            let mut buf = Vec::with_capacity(n);
            range
                .map(|k| {
                    decode_word(f, n, k, &mut buf);
                    bracket_of(sys, g, &buf)
                })
                .collect()
        });
        let mut sup = Vec::with_capacity(total as usize);
        let mut inf = Vec::with_capacity(total as usize);
        for part in parts {
            for b in part? {
                inf.push(b.lo);
                sup.push(b.hi);
            }
        }
        Ok(LevelTable {
            depth: n,
            sup,
            inf,
            reduction: opts.reduction,
        })
    }

    fn log_sum(values: &[f64], s: f64, reduction: Reduction) -> f64 {
        map_chunks(values.len() as u64, reduction, |r| {
            values[r.start as usize..r.end as usize]
                .iter()
                .map(|b| -s * b)
                .collect::<LogSumExp>()
        })
        .into_iter()
        .fold(LogSumExp::default(), LogSumExp::merge)
        .value()
    }

    /// `log Z_n^inf` for `Scale(s, g)`.
    pub fn log_z_inf(&self, s: f64) -> f64 {
        Self::log_sum(&self.sup, s, self.reduction)
    }

    /// `log Z_n^sup` for `Scale(s, g)`.
    pub fn log_z_sup(&self, s: f64) -> f64 {
        Self::log_sum(&self.inf, s, self.reduction)
    }
}
