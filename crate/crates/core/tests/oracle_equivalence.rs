use curvewire::oracle::{
    analytic_square_well_transmission, random_chain, square_well_chain, transfer_matrix_smatrix,
};
use curvewire::units::mev_to_hartree;
use curvewire::{solve_smatrix, Chain, Profile, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn fifty_seeded_random_chains_agree_entrywise() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let chain = random_chain(&mut rng).unwrap();
        let t0 = chain.lead_hopping();
        for _ in 0..8 {
            let e = rng.gen_range(0.1..3.9) * t0;
            let tm = transfer_matrix_smatrix(&chain, e).unwrap();
            let wm = solve_smatrix(&chain, e).unwrap();
            worst = worst.max(wm.s.max_deviation(&tm.s_ref));
        }
    }
    assert!(worst < 1e-8, "worst entrywise deviation {worst:e}");
}

#[test]
fn coarse_gaussian_chain_agrees_with_transfer_matrix() {
    let p = Profile::new(Shape::default_single_gaussian(1000.0), 1000.0).unwrap();
    let chain = Chain::build(&p, 199, 1.0).unwrap();
    for mev in [60.0, 100.0, 400.0] {
        let e = mev_to_hartree(mev);
        let tm = transfer_matrix_smatrix(&chain, e).unwrap();
        let wm = solve_smatrix(&chain, e).unwrap();
        assert!(wm.s.max_deviation(&tm.s_ref) < 1e-10);
    }
}

#[test]
fn mirrored_chain_swaps_ports() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let chain = random_chain(&mut rng).unwrap();
        let mut onsite = chain.onsite().to_vec();
        let mut hopping = chain.hopping().to_vec();
        onsite.reverse();
        hopping.reverse();
        let mirror =
            Chain::from_parts(chain.spacing(), chain.lead_hopping(), onsite, hopping).unwrap();
        let e = 0.8 * chain.lead_hopping();
        let s = solve_smatrix(&chain, e).unwrap().s;
        let m = solve_smatrix(&mirror, e).unwrap().s;
        assert!((s.r_left() - m.r_right()).norm() < 1e-12);
        assert!((s.r_right() - m.r_left()).norm() < 1e-12);
        assert!((s.t_left() - m.t_right()).norm() < 1e-12);
    }
}

#[test]
fn palindromic_chain_reflects_equally_from_both_sides() {
    let p = Profile::new(Shape::default_single_gaussian(1000.0), 1000.0).unwrap();
    let chain = Chain::build(&p, 2000, 1.0).unwrap();
    for mev in [0.7, 3.0, 12.0, 80.0] {
        let s = solve_smatrix(&chain, mev_to_hartree(mev)).unwrap().s;
        assert!((s.r_left().norm() - s.r_right().norm()).abs() < 1e-9);
    }
}

#[test]
fn square_well_error_shrinks_quadratically() {
    let (depth, width, e) = (mev_to_hartree(-20.0), 200.0, mev_to_hartree(10.0));
    let exact = analytic_square_well_transmission(e, depth, width, 1.0);
    let err = |a: f64| {
        let chain = square_well_chain(depth, width, a, 1.0).unwrap();
        (solve_smatrix(&chain, e).unwrap().transmission() - exact).abs()
    };
    let (e1, e2, e3) = (err(2.0), err(1.0), err(0.5));
    assert!(e3 < e2 && e2 < e1, "{e1:e} {e2:e} {e3:e}");
    for ratio in [e1 / e2, e2 / e3] {
        assert!((3.0..5.0).contains(&ratio), "error ratio {ratio}");
    }
}
