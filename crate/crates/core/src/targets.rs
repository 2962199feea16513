//! Shrinking targets: cover sums for the upper dimension bound, the cylinder
//! density statistic and symbolic hitting times.

use crate::error::{Error, Result};
use crate::exec::{map_chunks, map_items, EvalOptions};
use crate::interval::Interval;
use crate::lse::LogSumExp;
use crate::markov_ifs::{decode_word, normalize_subset, word_count, MarkovSystem, Symbol};
use crate::pressure::{bracket_of, PotentialSpec};

/// Shrinking rate of the target balls `B(y, e^{-S_n φ})`.
#[derive(Clone, Debug, PartialEq)]
pub enum Rate {
    Constant(f64),
    Potential(PotentialSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetSpec {
    pub y: f64,
    pub rate: Rate,
}

impl TargetSpec {
    pub fn constant(y: f64, alpha: f64) -> Self {
        TargetSpec {
            y,
            rate: Rate::Constant(alpha),
        }
    }

    pub fn potential(y: f64, phi: PotentialSpec) -> Self {
        TargetSpec {
            y,
            rate: Rate::Potential(phi),
        }
    }

    /// The rate as a potential; `Constant(α)` and `Potential(Constant(α))`
    /// are interchangeable.
    pub fn phi(&self) -> PotentialSpec {
        match &self.rate {
            Rate::Constant(a) => PotentialSpec::Constant(*a),
            Rate::Potential(p) => p.clone(),
        }
    }

    fn validate(&self) -> Result<PotentialSpec> {
        if !(0.0..=1.0).contains(&self.y) {
            return Err(Error::domain(format!("target {} is outside [0,1]", self.y)));
        }
        if let Rate::Constant(a) = self.rate {
            if !(a > 0.0) {
                return Err(Error::domain(format!("rate {a} must be positive")));
            }
        }
        let phi = self.phi();
        phi.validate()?;
        Ok(phi)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverReport {
    pub s: f64,
    pub m: usize,
    pub n_max: usize,
    /// `(n, Σ diam(V_ω)^s)` for each level.
    pub per_level: Vec<(usize, f64)>,
    pub total: f64,
    /// Bound for the levels beyond `n_max`, when a decay rate was verified.
    pub geometric_tail_bound: Option<f64>,
}

fn check_levels(size: usize, m: usize, n_max: usize, budget: u64) -> Result<()> {
    for n in m..=n_max {
        if !word_count(size, n).is_some_and(|c| c <= budget) {
            return Err(Error::Budget {
                requested: word_count(size, n),
                budget,
                completed_level: (n > m).then(|| n - 1),
            });
        }
    }
    Ok(())
}

/// Per-level sums of `diam(V_ω^{φ,n})^s ≤ e^{-s(inf S_n ψ + inf S_n φ)}` over
/// `ω ∈ Fⁿ`, `m ≤ n ≤ n_max`.
///
/// A word is dropped when the target ball cannot meet any branch image of
/// `F`, since then no point of the `F`-repeller lands in it.
pub fn cover_sum(
    sys: &MarkovSystem,
    target: &TargetSpec,
    s: f64,
    m: usize,
    n_max: usize,
    f: &[Symbol],
    opts: &EvalOptions,
) -> Result<CoverReport> {
    if !(s > 0.0) {
        return Err(Error::domain("cover exponent must be positive"));
    }
    if m == 0 || n_max < m {
        return Err(Error::domain("levels must satisfy 1 ≤ m ≤ n_max"));
    }
    let phi = target.validate()?;
    let f = normalize_subset(f)?;
    let mut gap = f64::INFINITY;
    for &i in &f {
        gap = gap.min(sys.branch(i)?.image().distance_to(target.y).lo);
    }
    check_levels(f.len(), m, n_max, opts.budget)?;

    let levels: Vec<usize> = (m..=n_max).collect();
    let sums = map_items(&levels, opts.reduction, |&n| -> Result<f64> {
        let total = word_count(f.len(), n).expect("checked");
        let parts = map_chunks(total, opts.reduction, |range| -> Result<LogSumExp> {
            let mut buf = Vec::with_capacity(n);
            let mut acc = LogSumExp::default();
            for k in range {
                decode_word(&f, n, k, &mut buf);
                let inf_phi = bracket_of(sys, &phi, &buf)?.lo;
                let radius = (-inf_phi).exp().next_up();
                if gap >= radius {
                    continue;
                }
                let inf_psi = -sys.cylinder_core(&buf)?.log_deriv.hi;
                acc.push(-s * (inf_psi + inf_phi));
            }
            Ok(acc)
        });
        let mut acc = LogSumExp::default();
        for p in parts {
            acc = acc.merge(p?);
        }
        Ok(acc.value().exp())
    });
    let per_level = levels
        .iter()
        .zip(sums)
        .map(|(&n, v)| v.map(|v| (n, v)))
        .collect::<Result<Vec<_>>>()?;
    let total = per_level.iter().map(|(_, v)| v).sum();
    Ok(CoverReport {
        s,
        m,
        n_max,
        per_level,
        total,
        geometric_tail_bound: None,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateParams {
    pub m: usize,
    pub n_max: usize,
    pub alphabet: Vec<Symbol>,
    /// Number of trailing level-to-level ratios that must show decay.
    pub decay_window: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub accepted: bool,
    /// Largest trailing level ratio, if any level was nonzero.
    pub ratio: Option<f64>,
    /// Partial total plus the geometric tail when accepted.
    pub implied_total: Option<f64>,
    pub report: CoverReport,
    pub note: &'static str,
}

/// Margin by which a level ratio must sit below 1.
const DECAY_MARGIN: f64 = 1e-9;

pub const CERTIFICATE_NOTE: &str =
    "numerical evidence at the stated truncation (F, m..n_max); not a proof for the untruncated system";

/// Accepts `dim D_y(φ) ≤ s` when the cover sums decay geometrically over the
/// last `decay_window` level ratios.
pub fn upper_dimension_certificate(
    sys: &MarkovSystem,
    target: &TargetSpec,
    s: f64,
    params: &CertificateParams,
    opts: &EvalOptions,
) -> Result<Certificate> {
    if params.decay_window == 0 {
        return Err(Error::domain("decay window must be at least 1"));
    }
    if params.n_max < params.m + params.decay_window {
        return Err(Error::domain("decay window needs n_max ≥ m + decay_window"));
    }
    let mut report = cover_sum(
        sys,
        target,
        s,
        params.m,
        params.n_max,
        &params.alphabet,
        opts,
    )?;
    let values: Vec<f64> = report.per_level.iter().map(|(_, v)| *v).collect();
    let trailing = &values[values.len() - params.decay_window - 1..];

    let (accepted, ratio) = if trailing.iter().all(|v| *v == 0.0) {
        (true, None)
    } else {
        let mut worst = 0.0f64;
        let mut ok = true;
        for w in trailing.windows(2) {
            if w[0] == 0.0 {
                ok &= w[1] == 0.0;
                continue;
            }
            let q = w[1] / w[0];
            worst = worst.max(q);
            ok &= q * (1.0 + DECAY_MARGIN) < 1.0;
        }
        (ok, Some(worst))
    };
    let implied_total = accepted.then(|| {
        let last = *values.last().expect("nonempty levels");
        let q = ratio.unwrap_or(0.0);
        let tail = last * q / (1.0 - q);
        report.geometric_tail_bound = Some(tail);
        report.total + tail
    });
    Ok(Certificate {
        accepted,
        ratio,
        implied_total,
        report,
        note: CERTIFICATE_NOTE,
    })
}

/// `r^{-1} Σ diam(C)` over level-`n` cylinders `C` of `Fⁿ` lying inside the
/// open ball `B(y, r)`.
pub fn cylinder_density(
    sys: &MarkovSystem,
    y: f64,
    n: usize,
    r: f64,
    f: &[Symbol],
    opts: &EvalOptions,
) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain("radius must be positive"));
    }
    if n == 0 {
        return Err(Error::domain("depth must be at least 1"));
    }
    let f = normalize_subset(f)?;
    let ball = Interval::new(y - r, y + r);
    let visited = std::sync::atomic::AtomicU64::new(0);
    let parts = map_items(&f, opts.reduction, |&first| -> Result<f64> {
        let mut word = vec![first];
        let mut total = 0.0;
        density_dfs(
            sys,
            &f,
            n,
            &ball,
            &mut word,
            &mut total,
            &visited,
            opts.budget,
        )?;
        Ok(total)
    });
    let mut sum = 0.0;
    for p in parts {
        sum += p?;
    }
    Ok(sum / r)
}

#[allow(clippy::too_many_arguments)]
fn density_dfs(
    sys: &MarkovSystem,
    f: &[Symbol],
    n: usize,
    ball: &Interval,
    word: &mut Vec<Symbol>,
    total: &mut f64,
    visited: &std::sync::atomic::AtomicU64,
    budget: u64,
) -> Result<()> {
    let count = visited.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
    if count > budget {
        return Err(Error::Budget {
            requested: None,
            budget,
            completed_level: None,
        });
    }
    let core = sys.cylinder_core(word)?;
    if !(core.interval.hi > ball.lo && core.interval.lo < ball.hi) {
        return Ok(());
    }
    if word.len() == n {
        if core.interval.lo > ball.lo && core.interval.hi < ball.hi {
            *total += core.diam();
        }
        return Ok(());
    }
    for &s in f {
        word.push(s);
        let res = density_dfs(sys, f, n, ball, word, total, visited, budget);
        word.pop();
        res?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HitStatus {
    Hit,
    Miss,
    Undecided,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HitEpoch {
    pub n: usize,
    pub status: HitStatus,
    /// Enclosure of `|Tⁿ(x) − y|`, when the orbit point could be located.
    pub distance: Option<Interval>,
    /// Enclosure of `e^{-S_n φ(x)}`.
    pub threshold: Interval,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HitReport {
    pub epochs: Vec<HitEpoch>,
}

impl HitReport {
    fn with_status(&self, status: HitStatus) -> Vec<usize> {
        self.epochs
            .iter()
            .filter(|e| e.status == status)
            .map(|e| e.n)
            .collect()
    }

    pub fn hits(&self) -> Vec<usize> {
        self.with_status(HitStatus::Hit)
    }

    pub fn misses(&self) -> Vec<usize> {
        self.with_status(HitStatus::Miss)
    }

    pub fn undecided(&self) -> Vec<usize> {
        self.with_status(HitStatus::Undecided)
    }
}

/// Refinement rounds, each shrinking the position precision 16-fold.
const HIT_REFINEMENTS: usize = 6;

/// Classifies each epoch `1 ≤ n ≤ horizon` of the orbit of `x = π(ω)`:
/// a hit when `|Tⁿx − y| < e^{-S_n φ(x)}` holds on the whole enclosure, a
/// miss when it fails on the whole enclosure, undecided otherwise.
pub fn hit_times<C>(
    sys: &MarkovSystem,
    code: C,
    target: &TargetSpec,
    horizon: usize,
) -> Result<HitReport>
where
    C: Fn(usize) -> Option<Symbol>,
{
    if horizon == 0 {
        return Err(Error::domain("horizon must be at least 1"));
    }
    let phi = target.validate()?;
    let mut prefix = Vec::with_capacity(horizon);
    let mut epochs = Vec::with_capacity(horizon);
    for n in 1..=horizon {
        let Some(sym) = code(n - 1) else {
            epochs.extend((n..=horizon).map(|n| HitEpoch {
                n,
                status: HitStatus::Undecided,
                distance: None,
                threshold: Interval::new(0.0, f64::INFINITY),
            }));
            break;
        };
        prefix.push(sym);
        let threshold = (-bracket_of(sys, &phi, &prefix)?).exp().outward(2);
        let mut eps = threshold.lo / 8.0;
        let mut epoch = HitEpoch {
            n,
            status: HitStatus::Undecided,
            distance: None,
            threshold,
        };
        for _ in 0..=HIT_REFINEMENTS {
            if !(eps > 0.0) {
                break;
            }
            let Ok((pos, _)) = sys.project_sequence(|k| code(n + k), 1, eps) else {
                break;
            };
            let d = pos.distance_to(target.y);
            epoch.distance = Some(d);
            if d.hi < threshold.lo {
                epoch.status = HitStatus::Hit;
                break;
            }
            if d.lo > threshold.hi {
                epoch.status = HitStatus::Miss;
                break;
            }
            eps /= 16.0;
        }
        epochs.push(epoch);
    }
    Ok(HitReport { epochs })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn opts() -> EvalOptions {
        EvalOptions::default()
    }

    #[test]
    fn doubling_cover_sum_closed_form() {
        let sys = MarkovSystem::doubling();
        let t = TargetSpec::constant(0.0, LN2);
        let rep = cover_sum(&sys, &t, 1.0, 3, 10, &[1, 2], &opts()).unwrap();
        for (n, v) in &rep.per_level {
            assert!((v - 2f64.powi(-(*n as i32))).abs() < 1e-15);
        }
        assert!((rep.total - (0.25 - 2f64.powi(-10))).abs() < 1e-14);
    }

    #[test]
    fn critical_exponent_has_flat_levels() {
        let sys = MarkovSystem::doubling();
        let t = TargetSpec::constant(0.0, LN2);
        let rep = cover_sum(&sys, &t, 0.5, 3, 10, &[1, 2], &opts()).unwrap();
        assert!(rep.per_level.iter().all(|(_, v)| (v - 1.0).abs() < 1e-12));
        let params = CertificateParams {
            m: 3,
            n_max: 10,
            alphabet: vec![1, 2],
            decay_window: 4,
        };
        assert!(
            !upper_dimension_certificate(&sys, &t, 0.5, &params, &opts())
                .unwrap()
                .accepted
        );
    }

    #[test]
    fn far_target_prunes_everything() {
        // Branches 1 and 2 of a three-branch system stay away from y = 0.95.
        let sys = MarkovSystem::affine(vec![
            crate::AffineBranch::new(0.0, 0.2, true),
            crate::AffineBranch::new(0.3, 0.5, true),
            crate::AffineBranch::new(0.7, 1.0, true),
        ])
        .unwrap();
        let t = TargetSpec::constant(0.95, 3.0);
        let rep = cover_sum(&sys, &t, 0.5, 2, 5, &[1, 2], &opts()).unwrap();
        assert_eq!(rep.total, 0.0);
        let params = CertificateParams {
            m: 2,
            n_max: 5,
            alphabet: vec![1, 2],
            decay_window: 2,
        };
        let cert = upper_dimension_certificate(&sys, &t, 0.5, &params, &opts()).unwrap();
        assert!(cert.accepted && cert.implied_total == Some(0.0));
    }

    #[test]
    fn certificate_decisions() {
        let sys = MarkovSystem::doubling();
        let t = TargetSpec::constant(0.0, LN2);
        let params = CertificateParams {
            m: 3,
            n_max: 12,
            alphabet: vec![1, 2],
            decay_window: 5,
        };
        let yes = upper_dimension_certificate(&sys, &t, 0.6, &params, &opts()).unwrap();
        assert!(yes.accepted);
        assert!((yes.ratio.unwrap() - 2f64.powf(-0.2)).abs() < 1e-12);
        assert!(yes.report.geometric_tail_bound.is_some());
        let no = upper_dimension_certificate(&sys, &t, 0.4, &params, &opts()).unwrap();
        assert!(!no.accepted && no.implied_total.is_none());
        for alpha in [0.1, 1.0, 3.0] {
            let t = TargetSpec::constant(0.0, alpha);
            let c = upper_dimension_certificate(&sys, &t, 1.0, &params, &opts()).unwrap();
            assert!(c.accepted && (c.ratio.unwrap() - (-alpha).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn cover_budget_reports_completed_level() {
        let sys = MarkovSystem::doubling();
        let t = TargetSpec::constant(0.0, 1.0);
        let err = cover_sum(&sys, &t, 1.0, 3, 8, &[1, 2], &opts().with_budget(64)).unwrap_err();
        assert!(matches!(
            err,
            Error::Budget {
                completed_level: Some(6),
                ..
            }
        ));
    }

    #[test]
    fn density_examples() {
        let sys = MarkovSystem::doubling();
        // [1/2, 1] touches the boundary of B(0, 1), so only [0, 1/2] counts.
        let d = cylinder_density(&sys, 0.0, 1, 1.0, &[1, 2], &opts()).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        let d = cylinder_density(&sys, 0.0, 1, 1.0 + 1e-12, &[1, 2], &opts()).unwrap();
        assert!((d - 1.0).abs() < 1e-11);
        let d = cylinder_density(&sys, 0.0, 3, 0.25, &[1, 2], &opts()).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        let d = cylinder_density(&sys, 0.3, 3, 1e-3, &[1, 2], &opts()).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn fixed_point_hits_every_epoch() {
        let sys = MarkovSystem::doubling();
        let rep = hit_times(&sys, |_| Some(1), &TargetSpec::constant(0.0, 1.0), 50).unwrap();
        assert_eq!(rep.hits(), (1..=50).collect::<Vec<_>>());
        let rep = hit_times(&sys, |_| Some(2), &TargetSpec::constant(0.0, 1.0), 50).unwrap();
        assert_eq!(rep.misses().len(), 50);
    }

    #[test]
    fn alternating_code_schedule() {
        let sys = MarkovSystem::doubling();
        let code = |k: usize| Some(if k.is_multiple_of(2) { 1 } else { 2 });
        let rep = hit_times(&sys, code, &TargetSpec::constant(1.0 / 3.0, 0.1), 50).unwrap();
        assert!(rep.undecided().is_empty());
        for e in &rep.epochs {
            let hit = e.n % 2 == 0 || e.n <= 9;
            assert_eq!(e.status == HitStatus::Hit, hit, "epoch {}", e.n);
        }
        let same = hit_times(
            &sys,
            code,
            &TargetSpec::potential(1.0 / 3.0, PotentialSpec::constant(0.1)),
            50,
        )
        .unwrap();
        assert_eq!(rep, same);
    }

    #[test]
    fn exhausted_code_is_undecided() {
        let sys = MarkovSystem::doubling();
        let rep = hit_times(
            &sys,
            |k| (k < 5).then_some(1),
            &TargetSpec::constant(0.0, 0.5),
            8,
        )
        .unwrap();
        assert_eq!(rep.epochs.len(), 8);
        assert!(rep.undecided().contains(&8));
    }
}
