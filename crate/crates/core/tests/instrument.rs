mod common;

use tradeoff_core::instrument::{apply_kraus, werner_kraus};
use tradeoff_core::*;

fn local(u: &ComplexMatrix) -> ComplexMatrix {
    kron(u, &ComplexMatrix::identity(u.rows()))
}

#[test]
fn covariant_instrument_intertwines_the_group() {
    for d in [2, 3] {
        let mut rng = common::rng(d as u64 + 40);
        let seed = optimal_discrete_instrument(&OptimalParams::new(0.6, d).unwrap()).unwrap();
        let g = sample_unitary(d, &mut rng).unwrap();
        let h = sample_unitary(d, &mut rng).unwrap();
        let rho = common::random_density(d * d, &mut rng);
        let lg = local(&g);

        let lhs = apply_kraus(
            &covariant_kraus_at(&seed, &h).unwrap(),
            &(&(&lg * &rho) * &lg.dagger()),
        );
        let shifted = &g.dagger() * &h;
        let inner = apply_kraus(&covariant_kraus_at(&seed, &shifted).unwrap(), &rho);
        let rhs = &(&lg * &inner) * &lg.dagger();
        assert!(common::rel_err(&lhs, &rhs) < 1e-12, "d={d}");
    }
}

#[test]
fn covariantized_discrete_seed_is_werner_map() {
    for d in [2, 3, 4] {
        let mut rng = common::rng(d as u64 + 50);
        for a in [0.0, 0.35, 1.0] {
            let params = OptimalParams::new(a, d).unwrap();
            let seed = optimal_discrete_instrument(&params).unwrap();
            let h = sample_unitary(d, &mut rng).unwrap();
            let rho = common::random_density(d * d, &mut rng);
            let got = apply_kraus(&covariant_kraus_at(&seed, &h).unwrap(), &rho);
            let want = apply_kraus(&[werner_kraus(&h, params.a, params.b, 1.0)], &rho);
            assert!(common::rel_err(&got, &want) < 1e-12, "d={d} a={a}");
        }
    }
}

#[test]
fn outcome_probabilities_sum_to_one() {
    let d = 3;
    let mut rng = common::rng(60);
    let instr = optimal_discrete_instrument(&OptimalParams::new(0.4, d).unwrap()).unwrap();
    let rho = common::random_density(d * d, &mut rng);
    let total: f64 = (0..instr.len())
        .map(|r| apply(&instr, &rho, r).unwrap().1)
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
    for r in 0..instr.len() {
        let (post, _) = apply(&instr, &rho, r).unwrap();
        assert!((post.trace().re - 1.0).abs() < 1e-12);
        assert!(post.is_hermitian(1e-12));
    }
}

#[test]
fn rejects_out_of_range_parameters() {
    assert!(OptimalParams::new(-0.1, 2).is_err());
    assert!(OptimalParams::new(1.1, 2).is_err());
    assert!(OptimalParams::new(0.5, 1).is_err());
}

#[test]
fn normalization_holds_along_the_sweep() {
    for d in 2..=8 {
        for k in 0..=100 {
            let p = OptimalParams::new(k as f64 / 100.0, d).unwrap();
            assert!(p.b >= 0.0);
            assert!(p.normalization_residual().abs() < 1e-12 * (d * d) as f64);
        }
    }
}
