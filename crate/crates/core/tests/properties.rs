mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shrinkdim::*;

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn word_strategy(
    k: u32,
    len: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Vec<Symbol>> {
    prop::collection::vec(1..=k, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cylinders_nest(word in word_strategy(6, 1..=8), extra in 1u32..=6) {
        let sys = MarkovSystem::gauss_truncated(6).unwrap();
        let parent = sys.cylinder(&Word::new(word.clone())).unwrap();
        let mut longer = word.clone();
        longer.push(extra);
        let child = sys.cylinder(&Word::new(longer)).unwrap();
        prop_assert!(parent.interval.contains_interval(&child.interval));
        prop_assert!(child.diam <= parent.diam);
    }

    #[test]
    fn gauss_closed_form_derivative_matches_composition(word in word_strategy(40, 1..=6)) {
        // Closed form against a composition of single-branch enclosures.
        let sys = MarkovSystem::gauss();
        let closed = sys.cylinder(&Word::new(word.clone())).unwrap().log_deriv;
        let mut j = Interval::UNIT;
        let mut log_deriv = Interval::point(0.0);
        for &s in word.iter().rev() {
            let b = GaussBranch { digit: s };
            log_deriv = log_deriv + b.deriv_abs(j).ln();
            j = b.map_interval(j);
        }
        // Equal up to rounding slack; the closed form avoids the dependency blow-up.
        prop_assert!(closed.lo >= log_deriv.lo - 1e-12 && closed.hi <= log_deriv.hi + 1e-12, "{:?} vs {:?}", log_deriv, closed);
    }

    #[test]
    fn encoding_lands_in_cylinder(x in 0.0f64..1.0, depth in 1usize..12) {
        let sys = MarkovSystem::doubling();
        let w = sys.encode_point(x, depth).unwrap();
        let c = sys.cylinder(&w).unwrap();
        prop_assert!(c.interval.contains(x));
    }

    #[test]
    fn pressure_is_monotone_in_s(seed in any::<u64>(), s in 0.0f64..2.0, ds in 0.01f64..1.0) {
        let mut rng = seeded(seed);
        let (sys, widths) = common::random_affine(&mut rng);
        let phi = common::random_potential(&mut rng, widths.len());
        let f = common::all(widths.len());
        let g = |s: f64| PotentialSpec::scale(s, PotentialSpec::sum(PotentialSpec::psi(), phi.clone()));
        let opts = EvalOptions::default();
        let a = pressure_bracket(&sys, &g(s), &f, 3, Tail::Auto, &opts).unwrap();
        let b = pressure_bracket(&sys, &g(s + ds), &f, 3, Tail::Auto, &opts).unwrap();
        prop_assert!(b.upper <= a.upper + 1e-12);
        prop_assert!(b.lower <= a.lower + 1e-12);
    }

    #[test]
    fn sup_sums_submultiplicative_on_gauss(m in 1usize..3, n in 1usize..3) {
        let sys = MarkovSystem::gauss_truncated(5).unwrap();
        let pot = PotentialSpec::scale(0.7, PotentialSpec::psi());
        let f = [1, 2, 3, 4, 5];
        let opts = EvalOptions::default();
        let z = |d| partition_sum(&sys, &pot, &f, d, Mode::Sup, &opts).unwrap();
        let zi = |d| partition_sum(&sys, &pot, &f, d, Mode::Inf, &opts).unwrap();
        prop_assert!(z(m + n) <= z(m) + z(n) + 1e-12);
        prop_assert!(zi(m + n) >= zi(m) + zi(n) - 1e-12);
    }

    #[test]
    fn shrink_exponent_nonincreasing_in_rate(seed in any::<u64>(), a in 0.05f64..3.0, da in 0.05f64..2.0) {
        let mut rng = seeded(seed);
        let (sys, widths) = common::random_affine(&mut rng);
        let cfg = SolverConfig::single(common::all(widths.len()), 2, 1e-8);
        let lo = shrink_exponent_alpha(&sys, a, &cfg).unwrap();
        let hi = shrink_exponent_alpha(&sys, a + da, &cfg).unwrap();
        prop_assert!(hi.value <= lo.value + 1e-8);
        prop_assert!(hi.bracket.lo > 0.0);
    }

    #[test]
    fn zero_potential_reduces_to_bowen(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let (sys, widths) = common::random_affine(&mut rng);
        let cfg = SolverConfig::single(common::all(widths.len()), 2, 1e-9);
        let bowen = bowen_dimension(&sys, &cfg).unwrap();
        let zero = shrink_exponent_potential(&sys, &PotentialSpec::constant(0.0), &cfg).unwrap();
        let moran = moran_solve(&widths, 1e-9).unwrap();
        prop_assert!((bowen.value - zero.value).abs() <= 2e-9);
        prop_assert!((bowen.value - moran.value).abs() <= 2e-9);
    }

    #[test]
    fn cover_total_nonincreasing_in_s(s in 0.3f64..1.5, ds in 0.01f64..0.5, y in 0.0f64..1.0) {
        let sys = MarkovSystem::gauss_truncated(4).unwrap();
        let t = TargetSpec::constant(y, 0.5);
        let opts = EvalOptions::default();
        let a = cover_sum(&sys, &t, s, 2, 5, &[1, 2, 3, 4], &opts).unwrap();
        let b = cover_sum(&sys, &t, s + ds, 2, 5, &[1, 2, 3, 4], &opts).unwrap();
        prop_assert!(b.total <= a.total * (1.0 + 1e-12));
    }

    #[test]
    fn pruning_is_sound(y in 0.0f64..1.0, alpha in 0.2f64..4.0) {
        let sys = MarkovSystem::affine_from_widths(&[0.2, 0.3, 0.25, 0.15]).unwrap();
        let t = TargetSpec::constant(y, alpha);
        let opts = EvalOptions::default();
        let small = cover_sum(&sys, &t, 0.8, 1, 4, &[2, 3], &opts).unwrap();
        let large = cover_sum(&sys, &t, 0.8, 1, 4, &[1, 2, 3, 4], &opts).unwrap();
        for ((_, a), (_, b)) in small.per_level.iter().zip(&large.per_level) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn density_floor_at_repeller_points(word in word_strategy(4, 12..=12), n in 3usize..9) {
        let sys = MarkovSystem::gauss_truncated(4).unwrap();
        let y = sys.project_word(&Word::new(word.clone()), 1e-13).unwrap().mid();
        let r = 2.0 * sys.cylinder(&Word::new(word[..n].to_vec())).unwrap().diam;
        let d = cylinder_density(&sys, y, n, r, &[1, 2, 3, 4], &EvalOptions::default()).unwrap();
        prop_assert!(d >= 0.5 - 1e-9);
    }

    #[test]
    fn hit_decisions_are_stable(code in word_strategy(2, 24..=24), y in 0.0f64..1.0, alpha in 0.05f64..1.0) {
        let sys = MarkovSystem::doubling();
        let seq = |k: usize| code.get(k).copied();
        let a = hit_times(&sys, seq, &TargetSpec::constant(y, alpha), 12).unwrap();
        let b = hit_times(&sys, seq, &TargetSpec::potential(y, PotentialSpec::constant(alpha)), 12).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.hits().len() + a.misses().len() + a.undecided().len(), 12);
    }

    #[test]
    fn counterexample_placement(beta in 0.05f64..0.95, p in 0.5f64..3.0) {
        let ce = CounterexampleSystem::build(beta, ShrinkFn::Power(p)).unwrap();
        prop_assert!(verify_moran(&ce) <= 1e-10);
        let phi = ce.phi().clone();
        for n in ce.n0()..ce.n0() + 10 {
            let v = ce.interval(n).unwrap();
            prop_assert!(phi.eval(n + 1) < v.lo && v.hi < phi.eval(n));
        }
        prop_assert!(2.0 * ce.log_r12()[0].exp() < 1.0 - phi.eval(ce.n0()));
    }
}

#[test]
fn parallel_and_sequential_agree_bitwise() {
    let sys = MarkovSystem::gauss_truncated(12).unwrap();
    let pot = PotentialSpec::scale(0.6, PotentialSpec::psi());
    let f: Vec<Symbol> = (1..=12).collect();
    let par = EvalOptions::default();
    let seq = EvalOptions::sequential();
    for n in 1..=5 {
        let a = partition_sum(&sys, &pot, &f, n, Mode::Sup, &par).unwrap();
        let b = partition_sum(&sys, &pot, &f, n, Mode::Sup, &seq).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
    let cfg = SolverConfig::single(f.clone(), 4, 1e-6);
    let a = shrink_exponent_alpha(&sys, 1.5, &cfg).unwrap();
    let b = shrink_exponent_alpha(&sys, 1.5, &cfg.clone().with_options(seq)).unwrap();
    assert_eq!(a, b);
    let t = TargetSpec::constant(0.3, 0.7);
    let a = cover_sum(&sys, &t, 0.6, 2, 5, &f, &par).unwrap();
    let b = cover_sum(&sys, &t, 0.6, 2, 5, &f, &seq).unwrap();
    assert_eq!(a, b);
}

#[test]
fn full_alphabet_upper_end_dominates_subsystems() {
    let full = MarkovSystem::gauss();
    for k in [4u32, 8, 16] {
        let sub = MarkovSystem::gauss_truncated(k).unwrap();
        let f: Vec<Symbol> = (1..=k).collect();
        let cfg = SolverConfig::single(f, 3, 1e-4);
        let a = bowen_dimension(&sub, &cfg).unwrap();
        let b = bowen_dimension(&full, &cfg).unwrap();
        assert!(b.bracket.hi >= a.bracket.lo, "K = {k}");
    }
}

#[test]
fn full_gauss_ladder_tightens() {
    let sys = MarkovSystem::gauss();
    let cfg = SolverConfig::new(vec![(1..=8).collect(), (1..=32).collect()], 2, 1e-6);
    let r = bowen_dimension(&sys, &cfg).unwrap();
    assert_eq!(r.truncation.alphabet.len(), 32);
    assert!(r.bracket.contains(1.0) || r.bracket.hi >= 0.99);
    assert!(!r.certified);
}
