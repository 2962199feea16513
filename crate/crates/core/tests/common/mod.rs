#![allow(dead_code)]

use rand::Rng;
use shrinkdim::{AffineBranch, Interval, MarkovSystem, PerSymbolBracket, PotentialSpec, Symbol};

/// A random finite affine system with 2 to 5 branches, some reversed, spread
/// over [0,1] with random gaps.
pub fn random_affine<R: Rng>(rng: &mut R) -> (MarkovSystem, Vec<f64>) {
    let k = rng.gen_range(2..=5);
    let weights: Vec<f64> = (0..k + 1).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let fill = rng.gen_range(0.3..0.999);
    let mut offset = 0.0;
    let mut branches = Vec::with_capacity(k);
    let mut widths = Vec::with_capacity(k);
    let gap = (1.0 - fill) / k as f64;
    for w in &weights[..k] {
        let width = w / total * fill;
        branches.push(AffineBranch::new(offset, offset + width, rng.gen_bool(0.7)));
        widths.push(width);
        offset += width + gap;
    }
    (
        MarkovSystem::affine(branches).expect("valid random system"),
        widths,
    )
}

/// A random nonnegative potential over `k` symbols.
pub fn random_potential<R: Rng>(rng: &mut R, k: usize) -> PotentialSpec {
    match rng.gen_range(0..4) {
        0 => PotentialSpec::constant(rng.gen_range(0.0..3.0)),
        1 => PotentialSpec::scale(rng.gen_range(0.0..2.0), PotentialSpec::psi()),
        2 => {
            let mut p = PerSymbolBracket::default();
            for s in 1..=k as Symbol {
                let lo = rng.gen_range(0.0..2.0);
                p.table
                    .insert(s, Interval::new(lo, lo + rng.gen_range(0.0..0.5)));
            }
            PotentialSpec::PerSymbol(p)
        }
        _ => PotentialSpec::sum(
            PotentialSpec::scale(rng.gen_range(0.0..1.0), PotentialSpec::psi()),
            PotentialSpec::constant(rng.gen_range(0.0..1.0)),
        ),
    }
}

/// Symbols `1..=k`.
pub fn all(k: usize) -> Vec<Symbol> {
    (1..=k as Symbol).collect()
}
