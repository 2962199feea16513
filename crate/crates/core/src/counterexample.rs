//! A countable affine system whose limit set has dimension `β` while the
//! shrinking-target set at `y = 0` for a prescribed rate `Φ` has dimension 0.
//!
//! The alphabet is `{1, 2} ∪ {n ≥ n₀}`. Branch `n ≥ n₀` sits centered in the
//! gap `(Φ(n+1), Φ(n))` with width
//! `r_n = min((2 + Σ_q e^{-q/n})^{-n²} e^{-2n²}, (Φ(n) − Φ(n+1))/2)`, and
//! branches 1 and 2 share the width `r₁ = r₂ = 2^{-1/β}(1 − Σ r_n^β)^{1/β}`
//! so that Moran's equation holds at `β`. Widths underflow quickly, so they
//! are stored as logarithms.

use std::fmt;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::lse::{log_add, LogSumExp};
use crate::markov_ifs::{AffineBranch, Alphabet, CountableAffine, MarkovSystem, Symbol};
use crate::targets::CoverReport;

/// Largest `n₀` tried before giving up.
pub const N0_SEARCH_CAP: Symbol = 1_000_000;

/// Symbols `n₀..n₀+MATERIALIZED` are tabulated eagerly.
const MATERIALIZED: Symbol = 40;

/// Cache extension limit; widths further out are computed on demand.
const CACHE_LIMIT: usize = 1 << 16;

/// A strictly decreasing rate `Φ : ℕ → (0,1)` with `Φ(n) → 0`.
#[derive(Clone)]
pub enum ShrinkFn {
    /// `Φ(n) = n^{-p}`.
    Power(f64),
    /// `Φ(n) = e^{-rate·n}`.
    Exp(f64),
    Custom(Arc<dyn Fn(Symbol) -> f64 + Send + Sync>),
}

impl fmt::Debug for ShrinkFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShrinkFn::Power(p) => write!(f, "Power({p})"),
            ShrinkFn::Exp(r) => write!(f, "Exp({r})"),
            ShrinkFn::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl PartialEq for ShrinkFn {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ShrinkFn::Power(a), ShrinkFn::Power(b)) | (ShrinkFn::Exp(a), ShrinkFn::Exp(b)) => {
                a == b
            }
            (ShrinkFn::Custom(a), ShrinkFn::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl ShrinkFn {
    pub fn eval(&self, n: Symbol) -> f64 {
        let x = f64::from(n);
        match self {
            ShrinkFn::Power(p) => x.powf(-p),
            ShrinkFn::Exp(r) => (-r * x).exp(),
            ShrinkFn::Custom(f) => f(n),
        }
    }

    /// `log(Φ(n) − Φ(n+1))`, without cancellation for the closed forms.
    pub fn log_gap(&self, n: Symbol) -> f64 {
        let x = f64::from(n);
        match self {
            ShrinkFn::Power(p) => -p * x.ln() + (-(-p * x.recip().ln_1p()).exp_m1()).ln(),
            ShrinkFn::Exp(r) => -r * x + (-(-r).exp_m1()).ln(),
            ShrinkFn::Custom(f) => (f(n) - f(n + 1)).ln(),
        }
    }

    /// Checks strict decrease inside `(0,1)` on `from..=to`.
    fn validate(&self, from: Symbol, to: Symbol) -> Result<()> {
        match self {
            ShrinkFn::Power(p) if !(*p > 0.0 && p.is_finite()) => {
                return Err(Error::domain(format!(
                    "power exponent {p} must be positive"
                )))
            }
            ShrinkFn::Exp(r) if !(*r > 0.0 && r.is_finite()) => {
                return Err(Error::domain(format!(
                    "exponential rate {r} must be positive"
                )))
            }
            _ => {}
        }
        let mut prev = f64::INFINITY;
        for n in from..=to {
            let v = self.eval(n);
            if !(v > 0.0 && v < 1.0 && v < prev) {
                return Err(Error::domain(format!(
                    "shrink function must be strictly decreasing in (0,1); fails at n = {n}"
                )));
            }
            prev = v;
        }
        Ok(())
    }
}

/// `log r_n` for `n ≥ n₀`.
fn log_width_formula(phi: &ShrinkFn, n: Symbol) -> f64 {
    let x = f64::from(n);
    // Σ_{q≥1} e^{-q/n} = 1/(e^{1/n} − 1).
    let geometric = x.recip().exp_m1().recip();
    let first = -x * x * (2.0 + geometric).ln() - 2.0 * x * x;
    let second = phi.log_gap(n) - std::f64::consts::LN_2;
    first.min(second)
}

/// Bound for `Σ_{n>m} r_n^p` from `r_n ≤ e^{-2n²}`.
fn tail_bound(m: Symbol, p: f64) -> f64 {
    let k = f64::from(m) + 1.0;
    ((-2.0 * p * k * k).exp() / -(-4.0 * p * k).exp_m1()).next_up()
}

fn first_condition(beta: f64) -> f64 {
    1.0 - 2f64.powf(1.0 - beta.recip())
}

/// Smallest `n₀ ≥ 3` with `Φ(n₀) < 1 − 2^{1−1/β}` and `Σ_{n≥n₀} e^{-βn} < 1`.
fn find_n0(beta: f64, phi: &ShrinkFn) -> Result<Symbol> {
    let bound = first_condition(beta);
    let ratio = -(-beta).exp_m1();
    (3..=N0_SEARCH_CAP)
        .find(|&n| phi.eval(n) < bound && (-beta * f64::from(n)).exp() / ratio < 1.0)
        .ok_or(Error::SearchCap {
            cap: u64::from(N0_SEARCH_CAP),
        })
}

struct Family {
    beta: f64,
    phi: ShrinkFn,
    n0: Symbol,
    log_r12: [f64; 2],
    /// Last eagerly tabulated symbol; the certified tail starts after it.
    materialized_to: Symbol,
    /// `log r_{n₀ + k}` at index `k`.
    cache: RwLock<Vec<f64>>,
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Counterexample")
            .field("beta", &self.beta)
            .field("phi", &self.phi)
            .field("n0", &self.n0)
            .finish_non_exhaustive()
    }
}

impl Family {
    fn in_alphabet(&self, s: Symbol) -> bool {
        s == 1 || s == 2 || s >= self.n0
    }

    fn log_width(&self, s: Symbol) -> Option<f64> {
        match s {
            1 | 2 => Some(self.log_r12[s as usize - 1]),
            _ if s < self.n0 => None,
            _ => {
                let k = (s - self.n0) as usize;
                if let Some(&v) = self.cache.read().expect("width cache").get(k) {
                    return Some(v);
                }
                if k >= CACHE_LIMIT {
                    return Some(log_width_formula(&self.phi, s));
                }
                let mut cache = self.cache.write().expect("width cache");
                while cache.len() <= k {
                    let n = self.n0 + cache.len() as Symbol;
                    cache.push(log_width_formula(&self.phi, n));
                }
                Some(cache[k])
            }
        }
    }

    fn center(&self, s: Symbol) -> f64 {
        match s {
            1 | 2 => {
                let left = self.phi.eval(self.n0);
                let half = 0.5 * (1.0 - left);
                left + half * if s == 1 { 0.5 } else { 1.5 }
            }
            n => 0.5 * (self.phi.eval(n) + self.phi.eval(n + 1)),
        }
    }

    /// Symbol `n ≥ n₀` with `Φ(n+1) < x ≤ Φ(n)`.
    fn gap_index(&self, x: f64) -> Option<Symbol> {
        let mut hi = self.n0;
        while self.phi.eval(hi + 1) >= x {
            if hi > Symbol::MAX / 4 {
                return None;
            }
            hi = (hi - self.n0 + 1) * 2 + self.n0;
        }
        let mut lo = self.n0;
        // Invariant: Φ(hi + 1) < x and, if Φ(lo) ≥ x, the answer is in lo..=hi.
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.phi.eval(mid + 1) < x {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Some(lo)
    }
}

impl CountableAffine for Family {
    fn alphabet(&self) -> Alphabet {
        Alphabet::Countable {
            listed: vec![1, 2],
            from: self.n0,
        }
    }

    fn branch(&self, s: Symbol) -> Option<AffineBranch> {
        let lw = self.log_width(s)?;
        let offset = self.center(s) - 0.5 * lw.exp();
        Some(AffineBranch::from_log_width(offset, lw, true))
    }

    fn locate(&self, x: f64) -> Option<Symbol> {
        if !(0.0..=1.0).contains(&x) {
            return None;
        }
        let candidates: Vec<Symbol> = if x >= self.phi.eval(self.n0) {
            vec![1, 2]
        } else {
            self.gap_index(x).into_iter().collect()
        };
        candidates
            .into_iter()
            .find(|&s| self.branch(s).is_some_and(|b| b.image().contains(x)))
    }

    fn width_power_tail(&self, beyond: Symbol, p: f64) -> f64 {
        if !(p > 0.0) {
            return f64::INFINITY;
        }
        let mut terms = Vec::new();
        for s in [1, 2] {
            if s > beyond {
                terms.push(p * self.log_r12[s as usize - 1]);
            }
        }
        let start = self.n0.max(beyond.saturating_add(1));
        let end = self.materialized_to.max(beyond);
        for n in start..=end {
            terms.push(p * self.log_width(n).expect("in alphabet"));
        }
        let listed = terms.into_iter().collect::<LogSumExp>().value().exp();
        (listed + tail_bound(end, p)).next_up()
    }

    fn max_width(&self) -> f64 {
        let tabulated = self
            .cache
            .read()
            .expect("width cache")
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        self.log_r12[0].max(self.log_r12[1]).max(tabulated).exp()
    }
}

/// The built system with its width table.
#[derive(Clone, Debug)]
pub struct CounterexampleSystem {
    family: Arc<Family>,
    system: MarkovSystem,
}

impl CounterexampleSystem {
    /// Builds the system for `β ∈ (0,1)` and the rate `Φ`.
    pub fn build(beta: f64, phi: ShrinkFn) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::domain(format!("beta {beta} must lie in (0,1)")));
        }
        if let ShrinkFn::Power(_) | ShrinkFn::Exp(_) = phi {
            phi.validate(3, 4)?;
        }
        let n0 = find_n0(beta, &phi)?;
        let table: Vec<f64> = (n0..=n0 + MATERIALIZED)
            .map(|n| log_width_formula(&phi, n))
            .collect();
        // Smallest terms first.
        let x: f64 = table.iter().rev().map(|lw| (beta * lw).exp()).sum();
        let log_r = ((1.0 - x).ln() - std::f64::consts::LN_2) / beta;
        Self::from_parts(beta, phi, n0, [log_r, log_r], table)
    }

    /// Reassembles a system from a stored width table. Symbols past the table
    /// fall back to the width formula.
    pub fn from_parts(
        beta: f64,
        phi: ShrinkFn,
        n0: Symbol,
        log_r12: [f64; 2],
        table: Vec<f64>,
    ) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::domain(format!("beta {beta} must lie in (0,1)")));
        }
        if n0 < 3 {
            return Err(Error::domain("n0 must exceed 2"));
        }
        if table.is_empty() {
            return Err(Error::domain("width table is empty"));
        }
        if let Some(lw) = log_r12
            .iter()
            .chain(&table)
            .find(|lw| !(**lw < 0.0) || lw.is_infinite())
        {
            return Err(Error::domain(format!(
                "log width {lw} does not describe a width in (0,1)"
            )));
        }
        let materialized_to = n0 + table.len() as Symbol - 1;
        phi.validate(n0, materialized_to + 1)?;
        let family = Arc::new(Family {
            beta,
            phi,
            n0,
            log_r12,
            materialized_to,
            cache: RwLock::new(table),
        });
        let system = MarkovSystem::affine_countable(family.clone())?;
        Ok(CounterexampleSystem { family, system })
    }

    pub fn beta(&self) -> f64 {
        self.family.beta
    }

    pub fn phi(&self) -> &ShrinkFn {
        &self.family.phi
    }

    pub fn n0(&self) -> Symbol {
        self.family.n0
    }

    pub fn as_system(&self) -> &MarkovSystem {
        &self.system
    }

    /// Last symbol of the stored width table.
    pub fn materialized_to(&self) -> Symbol {
        self.family.materialized_to
    }

    pub fn log_width(&self, s: Symbol) -> Result<f64> {
        self.family.log_width(s).ok_or(Error::UnknownSymbol(s))
    }

    pub fn log_r12(&self) -> [f64; 2] {
        self.family.log_r12
    }

    /// `log r_n` for `n₀ ≤ n ≤ materialized_to`.
    pub fn width_table(&self) -> Vec<f64> {
        (self.family.n0..=self.family.materialized_to)
            .map(|n| self.family.log_width(n).expect("in alphabet"))
            .collect()
    }

    /// The branch domain `V_s`.
    pub fn interval(&self, s: Symbol) -> Result<Interval> {
        self.family
            .branch(s)
            .map(|b| b.image())
            .ok_or(Error::UnknownSymbol(s))
    }

    /// Alphabet symbols up to `max`.
    pub fn symbols_through(&self, max: Symbol) -> Vec<Symbol> {
        [1, 2].into_iter().chain(self.family.n0..=max).collect()
    }

    /// Copy with one width replaced, for consistency checks.
    pub fn with_log_width(&self, s: Symbol, log_width: f64) -> Result<Self> {
        if !self.family.in_alphabet(s) {
            return Err(Error::UnknownSymbol(s));
        }
        let mut r12 = self.family.log_r12;
        let mut table = self.width_table();
        match s {
            1 | 2 => r12[s as usize - 1] = log_width,
            _ => {
                let k = (s - self.family.n0) as usize;
                if k >= table.len() {
                    table.extend((table.len()..=k).map(|i| {
                        log_width_formula(&self.family.phi, self.family.n0 + i as Symbol)
                    }));
                }
                table[k] = log_width;
            }
        }
        Self::from_parts(
            self.family.beta,
            self.family.phi.clone(),
            self.family.n0,
            r12,
            table,
        )
    }
}

/// `|Σ_{i∈A} r_i^β − 1|` plus the certified bound for the unlisted tail.
pub fn verify_moran(ce: &CounterexampleSystem) -> f64 {
    let beta = ce.beta();
    let table: f64 = ce
        .width_table()
        .iter()
        .rev()
        .map(|lw| (beta * lw).exp())
        .sum();
    let [a, b] = ce.log_r12();
    let sum = table + (beta * a).exp() + (beta * b).exp();
    (sum - 1.0).abs() + tail_bound(ce.materialized_to(), beta)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroDimReport {
    pub report: CoverReport,
    /// `e^{-n} Σ_{k≥1} e^{-k}` per level.
    pub level_bounds: Vec<(usize, f64)>,
    pub levels_within_bounds: bool,
    /// `(Σ_{k≥1} e^{-k})²`.
    pub series_bound: f64,
    pub total_within_bound: bool,
}

/// Level sums `Σ_{ω∈Aⁿ, k∈A, k≥n} (r_ω r_k)^ε = (Σ_A r^ε)ⁿ Σ_{k≥n} r_k^ε` of the
/// covers of the shrinking-target set at 0, checked against `e^{-n}/(e−1)`.
pub fn zero_dim_cover_report(
    ce: &CounterexampleSystem,
    eps: f64,
    m: usize,
    n_max: usize,
) -> Result<ZeroDimReport> {
    if !(eps > 0.0) {
        return Err(Error::domain("exponent must be positive"));
    }
    if !(m as f64 > eps.recip()) {
        return Err(Error::domain(format!(
            "start level {m} must exceed 1/eps = {}",
            eps.recip()
        )));
    }
    if n_max < m {
        return Err(Error::domain("n_max must be at least m"));
    }
    let fam = &ce.family;
    let horizon = fam.materialized_to.max(n_max as Symbol + MATERIALIZED);
    let powers: Vec<(Symbol, f64)> = ce
        .symbols_through(horizon)
        .into_iter()
        .map(|s| (s, eps * fam.log_width(s).expect("in alphabet")))
        .collect();
    let tail = tail_bound(horizon, eps).ln();
    let log_all = log_add(
        powers
            .iter()
            .map(|(_, v)| *v)
            .collect::<LogSumExp>()
            .value(),
        tail,
    );

    let e_sum = (std::f64::consts::E - 1.0).recip();
    let mut per_level = Vec::new();
    let mut level_bounds = Vec::new();
    for n in m..=n_max {
        let at_least_n = powers
            .iter()
            .filter(|(s, _)| *s as usize >= n)
            .map(|(_, v)| *v)
            .collect::<LogSumExp>()
            .value();
        let value = (n as f64 * log_all + log_add(at_least_n, tail)).exp();
        per_level.push((n, value));
        level_bounds.push((n, (-(n as f64)).exp() * e_sum));
    }
    let levels_within_bounds = per_level
        .iter()
        .zip(&level_bounds)
        .all(|((_, v), (_, b))| v <= b);
    let total: f64 = per_level.iter().map(|(_, v)| v).sum();
    let series_bound = e_sum * e_sum;
    Ok(ZeroDimReport {
        report: CoverReport {
            s: eps,
            m,
            n_max,
            per_level,
            total,
            geometric_tail_bound: Some((-(n_max as f64)).exp() * series_bound),
        },
        level_bounds,
        levels_within_bounds,
        series_bound,
        total_within_bound: total <= series_bound,
    })
}
