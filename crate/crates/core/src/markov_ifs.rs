//! Expanding Markov maps represented through their inverse branches.
//!
//! A system is a family of contractions `φ_i : [0,1] → V_i`, one per symbol of
//! the alphabet, inverting `T` on each branch domain `V_i`. Words index
//! compositions `φ_ω = φ_{ω_1} ∘ ⋯ ∘ φ_{ω_n}` whose images are the cylinder
//! sets, and an infinite word codes the point lying in all of its cylinders.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interval::Interval;

/// Branch label. Symbols are 1-based.
pub type Symbol = u32;

/// A finite string of symbols. The empty word stands for the whole of `[0,1]`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The first `n` symbols (`ω|n`).
    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn into_inner(self) -> Vec<Symbol> {
        self.0
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Self {
        Word(v)
    }
}

impl<const N: usize> From<[Symbol; N]> for Word {
    fn from(v: [Symbol; N]) -> Self {
        Word(v.to_vec())
    }
}

impl AsRef<[Symbol]> for Word {
    fn as_ref(&self) -> &[Symbol] {
        &self.0
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// The symbol set of a system: either finite, or a finite list followed by
/// every integer from some point on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Alphabet {
    Finite(Vec<Symbol>),
    /// `listed ∪ {n : n ≥ from}`; every listed symbol is below `from`.
    Countable {
        listed: Vec<Symbol>,
        from: Symbol,
    },
}

impl Alphabet {
    pub fn finite(mut symbols: Vec<Symbol>) -> Self {
        symbols.sort_unstable();
        symbols.dedup();
        Alphabet::Finite(symbols)
    }

    pub fn contains(&self, s: Symbol) -> bool {
        match self {
            Alphabet::Finite(v) => v.binary_search(&s).is_ok(),
            Alphabet::Countable { listed, from } => s >= *from || listed.contains(&s),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Alphabet::Finite(_))
    }

    pub fn len(&self) -> Option<usize> {
        match self {
            Alphabet::Finite(v) => Some(v.len()),
            Alphabet::Countable { .. } => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Alphabet::Finite(v) if v.is_empty())
    }

    /// The `k` smallest symbols (fewer if the alphabet is smaller).
    pub fn first(&self, k: usize) -> Vec<Symbol> {
        match self {
            Alphabet::Finite(v) => v.iter().copied().take(k).collect(),
            Alphabet::Countable { listed, from } => {
                listed.iter().copied().chain(*from..).take(k).collect()
            }
        }
    }

    /// All symbols `≤ max`, ascending.
    pub fn up_to(&self, max: Symbol) -> Vec<Symbol> {
        match self {
            Alphabet::Finite(v) => v.iter().copied().filter(|&s| s <= max).collect(),
            Alphabet::Countable { listed, from } => listed
                .iter()
                .copied()
                .filter(|&s| s <= max)
                .chain(*from..=max)
                .collect(),
        }
    }
}

/// An affine contraction `[0,1] → [offset, offset + width]`.
///
/// `log_width` is kept separately so that widths below the smallest positive
/// double remain usable in logarithmic computations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineBranch {
    pub offset: f64,
    pub width: f64,
    pub log_width: f64,
    pub increasing: bool,
}

impl AffineBranch {
    pub fn new(lo: f64, hi: f64, increasing: bool) -> Self {
        let width = hi - lo;
        AffineBranch {
            offset: lo,
            width,
            log_width: width.ln(),
            increasing,
        }
    }

    pub fn from_log_width(offset: f64, log_width: f64, increasing: bool) -> Self {
        AffineBranch {
            offset,
            width: log_width.exp(),
            log_width,
            increasing,
        }
    }

    pub fn image(&self) -> Interval {
        Interval::new(self.offset, self.offset + self.width)
    }

    pub fn map(&self, x: f64) -> f64 {
        if self.increasing {
            self.offset + self.width * x
        } else {
            self.offset + self.width * (1.0 - x)
        }
    }

    fn map_interval(&self, j: Interval) -> Interval {
        if self.increasing {
            Interval::new(self.map(j.lo), self.map(j.hi))
        } else {
            Interval::new(self.map(j.hi), self.map(j.lo))
        }
    }

    fn invert(&self, y: f64) -> f64 {
        let u = (y - self.offset) / self.width;
        if self.increasing {
            u
        } else {
            1.0 - u
        }
    }
}

/// A general monotone `C¹` inverse branch, evaluated with interval arithmetic.
pub trait MonotoneBranch: Send + Sync + fmt::Debug {
    /// `φ([0,1])`, the closure of the branch domain.
    fn image(&self) -> Interval;
    /// Outward enclosure of `φ(J)` for `J ⊆ [0,1]`.
    fn map_interval(&self, j: Interval) -> Interval;
    /// Outward enclosure of the range of `|φ'|` over `J`.
    fn deriv_abs(&self, j: Interval) -> Interval;
    /// The expanding map on this branch, `φ^{-1}(y)`.
    fn invert(&self, y: f64) -> f64;
}

/// The Gauss inverse branch `x ↦ 1/(digit + x)` as a generic monotone branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussBranch {
    pub digit: Symbol,
}

impl MonotoneBranch for GaussBranch {
    fn image(&self) -> Interval {
        gauss_map_interval(self.digit, Interval::UNIT)
    }

    fn map_interval(&self, j: Interval) -> Interval {
        gauss_map_interval(self.digit, j)
    }

    fn deriv_abs(&self, j: Interval) -> Interval {
        let a = f64::from(self.digit);
        let lo = 1.0 / ((a + j.hi) * (a + j.hi));
        let hi = 1.0 / ((a + j.lo) * (a + j.lo));
        Interval::new(lo, hi).outward(2)
    }

    fn invert(&self, y: f64) -> f64 {
        1.0 / y - f64::from(self.digit)
    }
}

fn gauss_map_interval(digit: Symbol, j: Interval) -> Interval {
    let a = f64::from(digit);
    Interval::new((1.0 / (a + j.hi)).next_down(), (1.0 / (a + j.lo)).next_up()).clamp_unit()
}

/// An affine system with countably many branches, supplied lazily.
pub trait CountableAffine: Send + Sync + fmt::Debug {
    fn alphabet(&self) -> Alphabet;
    fn branch(&self, symbol: Symbol) -> Option<AffineBranch>;
    /// Lowest symbol whose closed branch image contains `x`.
    fn locate(&self, x: f64) -> Option<Symbol>;
    /// An upper bound for `Σ_{i ∈ A, i > beyond} width_i^p`; `+∞` when the
    /// series diverges.
    fn width_power_tail(&self, beyond: Symbol, p: f64) -> f64;
    /// The largest branch width.
    fn max_width(&self) -> f64;
}

/// Branches of width `scale · ratio^i` (`i ≥ 1`) packed left to right from 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometricAffine {
    pub scale: f64,
    pub ratio: f64,
}

impl GeometricAffine {
    pub fn new(scale: f64, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::domain("geometric ratio must lie in (0,1)"));
        }
        if !(scale > 0.0) || scale * ratio / (1.0 - ratio) > 1.0 + 1e-15 {
            return Err(Error::domain(
                "geometric widths must be positive with total length at most 1",
            ));
        }
        Ok(GeometricAffine { scale, ratio })
    }

    fn offset(&self, i: Symbol) -> f64 {
        let r = self.ratio;
        self.scale * r * (1.0 - r.powi(i as i32 - 1)) / (1.0 - r)
    }
}

impl CountableAffine for GeometricAffine {
    fn alphabet(&self) -> Alphabet {
        Alphabet::Countable {
            listed: Vec::new(),
            from: 1,
        }
    }

    fn branch(&self, symbol: Symbol) -> Option<AffineBranch> {
        (symbol >= 1).then(|| {
            let log_width = self.scale.ln() + f64::from(symbol) * self.ratio.ln();
            AffineBranch::from_log_width(self.offset(symbol), log_width, true)
        })
    }

    fn locate(&self, x: f64) -> Option<Symbol> {
        let total = self.scale * self.ratio / (1.0 - self.ratio);
        if !(0.0..=1.0).contains(&x) || x > total {
            return None;
        }
        let arg = 1.0 - x * (1.0 - self.ratio) / (self.scale * self.ratio);
        let guess = if arg <= 0.0 {
            Symbol::MAX / 2
        } else {
            (arg.ln() / self.ratio.ln()).floor().clamp(0.0, 1e9) as Symbol + 1
        };
        (guess.saturating_sub(1).max(1)..=guess + 1)
            .find(|&i| self.branch(i).is_some_and(|b| b.image().contains(x)))
    }

    fn width_power_tail(&self, beyond: Symbol, p: f64) -> f64 {
        if p <= 0.0 {
            return f64::INFINITY;
        }
        let rp = self.ratio.powf(p);
        let head = (self.scale.ln() * p + f64::from(beyond + 1) * rp.ln()).exp();
        (head / (1.0 - rp)).next_up()
    }

    fn max_width(&self) -> f64 {
        self.scale * self.ratio
    }
}

#[derive(Clone, Debug)]
pub enum BranchFamily {
    /// Symbol `i` is the `i`-th entry.
    AffineList(Vec<AffineBranch>),
    AffineCountable(Arc<dyn CountableAffine>),
    /// `φ_i(x) = 1/(i + x)`, optionally restricted to digits `1..=K`.
    Gauss {
        truncation: Option<Symbol>,
    },
    /// Symbol `i` is the `i`-th entry.
    CustomMonotone(Vec<Arc<dyn MonotoneBranch>>),
}

/// Bound on the distortion `e^{-nρ_n} ≤ |(Tⁿ)'(x)| / |(Tⁿ)'(y)| ≤ e^{nρ_n}`.
#[derive(Clone, Debug, PartialEq)]
pub enum Distortion {
    Affine,
    /// `n ρ_n ≤ log_constant` for every `n`.
    Bounded {
        log_constant: f64,
    },
    /// Explicit `ρ_1, ρ_2, …`; the last entry is reused beyond the table.
    Sequence(Vec<f64>),
}

impl Distortion {
    pub fn rho(&self, n: usize) -> f64 {
        match self {
            Distortion::Affine => 0.0,
            Distortion::Bounded { log_constant } => log_constant / n.max(1) as f64,
            Distortion::Sequence(v) => v.get(n.max(1) - 1).or(v.last()).copied().unwrap_or(0.0),
        }
    }
}

/// One inverse branch, borrowed from a system.
#[derive(Clone, Copy, Debug)]
pub enum Branch<'a> {
    Affine(AffineBranch),
    Gauss(Symbol),
    Custom(&'a dyn MonotoneBranch),
}

impl Branch<'_> {
    pub fn image(&self) -> Interval {
        match self {
            Branch::Affine(b) => b.image(),
            Branch::Gauss(a) => gauss_map_interval(*a, Interval::UNIT),
            Branch::Custom(b) => b.image(),
        }
    }

    pub fn map_interval(&self, j: Interval) -> Interval {
        match self {
            Branch::Affine(b) => b.map_interval(j),
            Branch::Gauss(a) => gauss_map_interval(*a, j),
            Branch::Custom(b) => b.map_interval(j).clamp_unit(),
        }
    }

    /// Enclosure of `log |φ'|` over `J`.
    pub fn log_deriv(&self, j: Interval) -> Interval {
        match self {
            Branch::Affine(b) => Interval::point(b.log_width),
            Branch::Gauss(a) => {
                let a = f64::from(*a);
                Interval::new(-2.0 * (a + j.hi).ln(), -2.0 * (a + j.lo).ln()).outward(2)
            }
            Branch::Custom(b) => b.deriv_abs(j).ln(),
        }
    }

    pub fn invert(&self, y: f64) -> f64 {
        match self {
            Branch::Affine(b) => b.invert(y),
            Branch::Gauss(a) => 1.0 / y - f64::from(*a),
            Branch::Custom(b) => b.invert(y),
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, Branch::Affine(_))
    }
}

/// Geometry of the cylinder `φ_ω([0,1])`.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderGeometry {
    pub word: Word,
    pub interval: Interval,
    /// Exact product of ratios for affine words, otherwise the width of the
    /// enclosing interval.
    pub diam: f64,
    pub log_diam: f64,
    /// Bracket for `|φ_ω'|` over `[0,1]`.
    pub deriv: Interval,
    /// Bracket for `log |φ_ω'|` over `[0,1]`.
    pub log_deriv: Interval,
}

/// Interval and log-derivative bracket of a cylinder without the word copy.
#[derive(Clone, Copy, Debug)]
pub(crate) struct CylinderCore {
    pub interval: Interval,
    pub log_deriv: Interval,
    pub affine: bool,
}

impl CylinderCore {
    pub fn diam(&self) -> f64 {
        if self.affine {
            self.log_deriv.lo.exp()
        } else {
            self.interval.width()
        }
    }
}

#[derive(Clone, Debug)]
pub struct MarkovSystem {
    family: BranchFamily,
    xi: f64,
    contraction_depth: usize,
    distortion: Distortion,
}

impl MarkovSystem {
    /// Validates and wraps a branch family.
    pub fn new(
        family: BranchFamily,
        xi: f64,
        contraction_depth: usize,
        distortion: Distortion,
    ) -> Result<Self> {
        if !(xi > 1.0) {
            return Err(Error::domain("expansion constant xi must exceed 1"));
        }
        if contraction_depth == 0 {
            return Err(Error::domain("contraction depth N must be at least 1"));
        }
        let sys = MarkovSystem {
            family,
            xi,
            contraction_depth,
            distortion,
        };
        if matches!(sys.alphabet().len(), Some(k) if k < 2) {
            return Err(Error::domain("the alphabet needs at least two symbols"));
        }
        if let Some(syms) = sys.finite_symbols() {
            let mut images = Vec::with_capacity(syms.len());
            for s in syms {
                let img = sys.branch(s)?.image();
                if !(img.lo >= 0.0 && img.hi <= 1.0 && img.width() > 0.0) {
                    return Err(Error::domain(format!(
                        "branch {s} image {img:?} is not a nondegenerate subinterval of [0,1]"
                    )));
                }
                images.push((img, s));
            }
            images.sort_by(|a, b| a.0.lo.total_cmp(&b.0.lo));
            // Outward-rounded images may share an endpoint up to a few ulps.
            for w in images.windows(2) {
                if w[1].0.lo < w[0].0.hi - 4.0 * f64::EPSILON {
                    return Err(Error::domain(format!(
                        "branch images {} and {} overlap",
                        w[0].1, w[1].1
                    )));
                }
            }
        }
        Ok(sys)
    }

    /// The doubling map: branches `[0,1/2]` and `[1/2,1]`.
    pub fn doubling() -> Self {
        Self::affine_from_widths(&[0.5, 0.5]).expect("valid doubling map")
    }

    /// Orientation-preserving affine branches with the given widths, packed
    /// left to right from 0.
    pub fn affine_from_widths(widths: &[f64]) -> Result<Self> {
        let mut offset = 0.0;
        let mut branches = Vec::with_capacity(widths.len());
        for &w in widths {
            if !(w > 0.0 && w < 1.0) {
                return Err(Error::domain("affine widths must lie in (0,1)"));
            }
            branches.push(AffineBranch {
                offset,
                width: w,
                log_width: w.ln(),
                increasing: true,
            });
            offset += w;
        }
        if offset > 1.0 + 1e-12 {
            return Err(Error::domain("affine widths sum to more than 1"));
        }
        Self::affine(branches)
    }

    pub fn affine(branches: Vec<AffineBranch>) -> Result<Self> {
        let max = branches.iter().map(|b| b.width).fold(0.0, f64::max);
        if !(max < 1.0) {
            return Err(Error::domain("affine branches must be strict contractions"));
        }
        Self::new(
            BranchFamily::AffineList(branches),
            1.0 / max,
            1,
            Distortion::Affine,
        )
    }

    pub fn affine_countable(family: Arc<dyn CountableAffine>) -> Result<Self> {
        let max = family.max_width();
        if !(max > 0.0 && max < 1.0) {
            return Err(Error::domain("affine branches must be strict contractions"));
        }
        Self::new(
            BranchFamily::AffineCountable(family),
            1.0 / max,
            1,
            Distortion::Affine,
        )
    }

    /// The full Gauss system. `|(T²)'| ≥ q_2² ≥ 2` with `q_n ≥ 2^{(n-1)/2}`
    /// gives `ξ = 1.4` from `N = 2`; distortion is bounded by 4.
    pub fn gauss() -> Self {
        Self::new(
            BranchFamily::Gauss { truncation: None },
            1.4,
            2,
            Distortion::Bounded {
                log_constant: 4f64.ln(),
            },
        )
        .expect("valid Gauss system")
    }

    /// The Gauss system restricted to continued-fraction digits `1..=k`.
    pub fn gauss_truncated(k: Symbol) -> Result<Self> {
        if k < 2 {
            return Err(Error::domain("Gauss truncation needs at least two digits"));
        }
        Self::new(
            BranchFamily::Gauss {
                truncation: Some(k),
            },
            1.4,
            2,
            Distortion::Bounded {
                log_constant: 4f64.ln(),
            },
        )
    }

    pub fn custom(
        branches: Vec<Arc<dyn MonotoneBranch>>,
        xi: f64,
        contraction_depth: usize,
        distortion: Distortion,
    ) -> Result<Self> {
        Self::new(
            BranchFamily::CustomMonotone(branches),
            xi,
            contraction_depth,
            distortion,
        )
    }

    pub fn family(&self) -> &BranchFamily {
        &self.family
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn contraction_depth(&self) -> usize {
        self.contraction_depth
    }

    pub fn distortion(&self) -> &Distortion {
        &self.distortion
    }

    pub fn is_affine(&self) -> bool {
        matches!(
            self.family,
            BranchFamily::AffineList(_) | BranchFamily::AffineCountable(_)
        )
    }

    pub fn alphabet(&self) -> Alphabet {
        match &self.family {
            BranchFamily::AffineList(v) => Alphabet::Finite((1..=v.len() as Symbol).collect()),
            BranchFamily::CustomMonotone(v) => Alphabet::Finite((1..=v.len() as Symbol).collect()),
            BranchFamily::AffineCountable(f) => f.alphabet(),
            BranchFamily::Gauss {
                truncation: Some(k),
            } => Alphabet::Finite((1..=*k).collect()),
            BranchFamily::Gauss { truncation: None } => Alphabet::Countable {
                listed: Vec::new(),
                from: 1,
            },
        }
    }

    fn finite_symbols(&self) -> Option<Vec<Symbol>> {
        match self.alphabet() {
            Alphabet::Finite(v) => Some(v),
            Alphabet::Countable { .. } => None,
        }
    }

    pub fn branch(&self, s: Symbol) -> Result<Branch<'_>> {
        let found = match &self.family {
            BranchFamily::AffineList(v) => s
                .checked_sub(1)
                .and_then(|i| v.get(i as usize))
                .map(|b| Branch::Affine(*b)),
            BranchFamily::CustomMonotone(v) => s
                .checked_sub(1)
                .and_then(|i| v.get(i as usize))
                .map(|b| Branch::Custom(b.as_ref())),
            BranchFamily::AffineCountable(f) => {
                if f.alphabet().contains(s) {
                    f.branch(s).map(Branch::Affine)
                } else {
                    None
                }
            }
            BranchFamily::Gauss { truncation } => {
                (s >= 1 && truncation.is_none_or(|k| s <= k)).then_some(Branch::Gauss(s))
            }
        };
        found.ok_or(Error::UnknownSymbol(s))
    }

    /// Lowest-indexed symbol whose closed branch image contains `x`.
    pub fn locate(&self, x: f64) -> Option<Symbol> {
        if !(0.0..=1.0).contains(&x) {
            return None;
        }
        match &self.family {
            BranchFamily::AffineList(v) => v
                .iter()
                .position(|b| b.image().contains(x))
                .map(|i| i as Symbol + 1),
            BranchFamily::CustomMonotone(v) => v
                .iter()
                .position(|b| b.image().contains(x))
                .map(|i| i as Symbol + 1),
            BranchFamily::AffineCountable(f) => f.locate(x),
            BranchFamily::Gauss { truncation } => {
                if x <= 0.0 {
                    return None;
                }
                let guess = (1.0 / x).floor().min(f64::from(u32::MAX - 2)) as Symbol;
                let contains = |a: Symbol| {
                    a >= 1 && f64::from(a + 1).recip() <= x && x <= f64::from(a).recip()
                };
                (guess.saturating_sub(1)..=guess + 1)
                    .find(|&a| contains(a))
                    .filter(|&a| truncation.is_none_or(|k| a <= k))
            }
        }
    }

    pub(crate) fn cylinder_core(&self, word: &[Symbol]) -> Result<CylinderCore> {
        let mut interval = Interval::UNIT;
        let mut log_deriv = Interval::point(0.0);
        let mut affine = true;
        for &s in word.iter().rev() {
            let b = self.branch(s)?;
            affine &= b.is_affine();
            if !matches!(b, Branch::Gauss(_)) {
                log_deriv = log_deriv + b.log_deriv(interval);
            }
            interval = b.map_interval(interval);
        }
        if matches!(self.family, BranchFamily::Gauss { .. }) && !word.is_empty() {
            log_deriv = gauss_log_deriv(word);
        }
        Ok(CylinderCore {
            interval,
            log_deriv,
            affine,
        })
    }

    /// The cylinder `φ_ω([0,1])` with its derivative bracket.
    pub fn cylinder(&self, word: &Word) -> Result<CylinderGeometry> {
        let core = self.cylinder_core(word.symbols())?;
        let diam = core.diam();
        let log_diam = if core.affine {
            core.log_deriv.lo
        } else {
            diam.ln()
        };
        Ok(CylinderGeometry {
            word: word.clone(),
            interval: core.interval,
            diam,
            log_diam,
            deriv: core.log_deriv.exp(),
            log_deriv: core.log_deriv,
        })
    }

    /// The word `ω ∈ Aⁿ` with `x ∈ φ_ω([0,1])`, ties going to the lower branch.
    pub fn encode_point(&self, x: f64, depth: usize) -> Result<Word> {
        let mut x = x;
        let mut out = Vec::with_capacity(depth);
        for k in 1..=depth {
            let s = self.locate(x).ok_or(Error::Escape { depth: k })?;
            out.push(s);
            x = self.branch(s)?.invert(x).clamp(0.0, 1.0);
        }
        Ok(Word(out))
    }

    /// An interval of width at most `eps` containing `π` of the infinite word
    /// obtained by repeating `prefix` cyclically.
    pub fn project_word(&self, prefix: &Word, eps: f64) -> Result<Interval> {
        if prefix.is_empty() {
            return Err(Error::domain("cannot extend an empty prefix"));
        }
        let p = prefix.symbols();
        self.project_sequence(|k| Some(p[k % p.len()]), prefix.len(), eps)
            .map(|(iv, _)| iv)
    }

    /// Encloses `π(ω)` for the infinite word `k ↦ code(k)` to width `eps`,
    /// using at least `min_depth` symbols. Returns the interval and the depth
    /// used. Fails if the code runs out or `eps` is below what double
    /// precision can resolve.
    pub fn project_sequence<F>(
        &self,
        code: F,
        min_depth: usize,
        eps: f64,
    ) -> Result<(Interval, usize)>
    where
        F: Fn(usize) -> Option<Symbol>,
    {
        if !(eps > 0.0) {
            return Err(Error::domain("precision must be positive"));
        }
        const MAX_DEPTH: usize = 1 << 14;
        let mut depth = min_depth.max(self.contraction_depth).max(1);
        let mut word = Vec::new();
        loop {
            while word.len() < depth {
                match code(word.len()) {
                    Some(s) => word.push(s),
                    None => {
                        return Err(Error::domain(format!(
                            "code exhausted after {} symbols",
                            word.len()
                        )))
                    }
                }
            }
            let iv = self.cylinder_core(&word)?.interval;
            if iv.width() <= eps {
                return Ok((iv, depth));
            }
            if depth >= MAX_DEPTH {
                return Err(Error::domain(format!(
                    "precision {eps:e} not reached within {MAX_DEPTH} symbols"
                )));
            }
            depth = (depth * 2).min(MAX_DEPTH);
        }
    }

    /// Upper bound for `Σ_{i ∈ A, i > beyond} (sup |φ_i'|)^p`; `+∞` when the
    /// series diverges.
    pub fn sup_deriv_power_tail(&self, beyond: Symbol, p: f64) -> f64 {
        match &self.family {
            BranchFamily::AffineCountable(f) => f.width_power_tail(beyond, p),
            BranchFamily::Gauss { truncation: None } => {
                let q = 2.0 * p;
                if q <= 1.0 {
                    return f64::INFINITY;
                }
                let m = f64::from(beyond) + 1.0;
                (m.powf(-q) + m.powf(1.0 - q) / (q - 1.0)).next_up()
            }
            _ => {
                let syms = self.finite_symbols().unwrap_or_default();
                syms.into_iter()
                    .filter(|&s| s > beyond)
                    .map(|s| {
                        let b = self.branch(s).expect("listed symbol");
                        (p * b.log_deriv(Interval::UNIT).hi).exp()
                    })
                    .sum::<f64>()
                    .next_up()
            }
        }
    }
}

/// `log |φ_ω'|` over `[0,1]` from the continuants of `ω`:
/// `|φ_ω'(x)| = (q_n + x q_{n-1})^{-2}`.
fn gauss_log_deriv(word: &[Symbol]) -> Interval {
    let (mut q, mut q_prev, mut log_scale) = (1.0f64, 0.0f64, 0.0f64);
    for &a in word {
        let next = f64::from(a) * q + q_prev;
        q_prev = q;
        q = next;
        if q > 1e150 {
            log_scale += q.ln();
            q_prev /= q;
            q = 1.0;
        }
    }
    let hi = -2.0 * (log_scale + q.ln());
    let lo = -2.0 * (log_scale + (q + q_prev).ln());
    let slack = 4.0 * (word.len() as f64 + 2.0) * f64::EPSILON;
    Interval::new(lo - slack * (1.0 + lo.abs()), hi + slack * (1.0 + hi.abs())).outward(1)
}

/// Number of words in `Fⁿ`, or `None` on overflow.
pub fn word_count(alphabet_size: usize, n: usize) -> Option<u64> {
    (alphabet_size as u64).checked_pow(u32::try_from(n).ok()?)
}

/// Writes the `index`-th word of `Fⁿ` in lexicographic order into `buf`.
pub(crate) fn decode_word(f: &[Symbol], n: usize, mut index: u64, buf: &mut Vec<Symbol>) {
    let k = f.len() as u64;
    buf.clear();
    buf.resize(n, 0);
    for slot in buf.iter_mut().rev() {
        *slot = f[(index % k) as usize];
        index /= k;
    }
}

/// Lexicographic stream over `Fⁿ`.
#[derive(Clone, Debug)]
pub struct WordIter {
    alphabet: Vec<Symbol>,
    depth: usize,
    next: u64,
    total: u64,
}

impl Iterator for WordIter {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.next >= self.total {
            return None;
        }
        let mut buf = Vec::with_capacity(self.depth);
        decode_word(&self.alphabet, self.depth, self.next, &mut buf);
        self.next += 1;
        Some(Word(buf))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for WordIter {}

/// Sorted, deduplicated copy of a finite symbol set, rejecting empty sets.
pub(crate) fn normalize_subset(f: &[Symbol]) -> Result<Vec<Symbol>> {
    let mut v = f.to_vec();
    v.sort_unstable();
    v.dedup();
    if v.is_empty() {
        return Err(Error::domain("alphabet subset must be nonempty"));
    }
    Ok(v)
}

/// Checks `|F|ⁿ` against the budget.
pub(crate) fn check_budget(size: usize, n: usize, budget: u64) -> Result<u64> {
    match word_count(size, n) {
        Some(c) if c <= budget => Ok(c),
        requested => Err(Error::Budget {
            requested,
            budget,
            completed_level: None,
        }),
    }
}

/// Every word of `Fⁿ` exactly once, in lexicographic order.
pub fn enumerate_words(f: &[Symbol], n: usize, budget: u64) -> Result<WordIter> {
    if n == 0 {
        return Err(Error::domain("enumeration depth must be at least 1"));
    }
    let alphabet = normalize_subset(f)?;
    let total = check_budget(alphabet.len(), n, budget)?;
    Ok(WordIter {
        alphabet,
        depth: n,
        next: 0,
        total,
    })
}
