//! Seeded fixtures shared by the benchmarks.

use dominion::{Matrix, SpBlocks, SplitMix64, SymMatrix};

/// Symmetric matrix with entries uniform in `[-1, 1]`.
pub fn random_symmetric(n: usize, seed: u64) -> SymMatrix {
    let mut rng = SplitMix64::new(seed);
    let m = Matrix::from_fn(n, n, |_, _| rng.uniform(-1.0, 1.0));
    SymMatrix::new(&m + m.transpose()).expect("square")
}

/// Random blocks with a fast part whose eigenvalues have real part ≤ −1.
pub fn random_blocks(n_r: usize, n_f: usize, seed: u64) -> SpBlocks {
    let mut rng = SplitMix64::new(seed);
    let mut rand = |r: usize, c: usize| Matrix::from_fn(r, c, |_, _| rng.uniform(-1.0, 1.0));
    let (a, b, c, g) = (rand(n_r, n_r), rand(n_r, n_f), rand(n_f, n_r), rand(n_f, n_f));
    let d = -(&g * g.transpose() + Matrix::identity(n_f, n_f));
    SpBlocks::new(a, b, c, d).expect("consistent shapes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_seeded() {
        assert_eq!(random_symmetric(4, 1), random_symmetric(4, 1));
        assert_eq!(random_blocks(3, 2, 9).d, random_blocks(3, 2, 9).d);
        assert!(dominion::nsd_margin(&SymMatrix::new(random_blocks(3, 2, 9).d).unwrap()) <= -1.0 + 1e-12);
    }
}
