use mdlvq::labeling::{assign, coset_pair_cost, AssignOptions, CostModel, IndexAssignment, LatticeSetup};
use mdlvq::lap::{solve, CostMatrix};
use mdlvq::lattice::{Lattice, LatticeKind, LatticePoint};
use mdlvq::loss::{ChannelModel, Subset};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum over all injective row-to-column maps, by recursion.
fn brute_lap(m: &[Vec<f64>]) -> f64 {
    fn go(m: &[Vec<f64>], r: usize, used: &mut Vec<bool>) -> f64 {
        if r == m.len() {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for c in 0..m[0].len() {
            if !used[c] {
                used[c] = true;
                best = best.min(m[r][c] + go(m, r + 1, used));
                used[c] = false;
            }
        }
        best
    }
    go(m, 0, &mut vec![false; m[0].len()])
}

proptest! {
    #[test]
    fn lap_matches_exhaustive(rows in 1usize..6, extra in 0usize..3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols = rows + extra;
        let m: Vec<Vec<f64>> = (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(0.0..10.0)).collect()).collect();
        let sol = solve(&CostMatrix::from_rows(&m)).unwrap();
        let mut seen = vec![false; cols];
        for (r, &c) in sol.row_to_col.iter().enumerate() {
            prop_assert!(!seen[c]);
            seen[c] = true;
            let _ = r;
        }
        prop_assert!((sol.total - brute_lap(&m)).abs() < 1e-9);
    }
}

fn build(kind: LatticeKind, nu: f64, indices: &[u64], p: &[f64]) -> IndexAssignment {
    let setup = LatticeSetup::from_indices(Lattice::with_volume(kind, nu).unwrap(), indices).unwrap();
    let ch = ChannelModel::new(p.to_vec()).unwrap();
    assign(&setup, &ch, &AssignOptions::new(1.0)).unwrap()
}

fn central_cell_cost(asg: &IndexAssignment, order: &[usize]) -> f64 {
    let model = CostModel::new(asg.setup().central().dim(), asg.channel()).unwrap();
    asg.central_points()
        .iter()
        .zip(order)
        .map(|(&c, &r)| coset_pair_cost(asg.setup(), &model, c, asg.row(r)).0)
        .sum()
}

#[test]
fn optimum_beats_random_relabelings() {
    let asg = build(LatticeKind::Z2, 0.02, &[5, 5], &[0.1, 0.1]);
    assert_eq!(asg.n_pi(), 25);
    let identity: Vec<usize> = (0..asg.n_pi()).collect();
    let own = central_cell_cost(&asg, &identity);
    assert!((own - asg.total_cost()).abs() <= 1e-9 * own);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let mut order = identity.clone();
        order.shuffle(&mut rng);
        assert!(asg.total_cost() <= central_cell_cost(&asg, &order) + 1e-12);
    }
}

#[test]
fn optimum_beats_greedy_matching() {
    let asg = build(LatticeKind::A2, 0.05, &[7, 7], &[0.05, 0.2]);
    let model = CostModel::new(2, asg.channel()).unwrap();
    let n = asg.n_pi();
    let mut taken = vec![false; n];
    let mut greedy = 0.0;
    for &c in asg.central_points() {
        let (best, r) = (0..n)
            .filter(|&r| !taken[r])
            .map(|r| (coset_pair_cost(asg.setup(), &model, c, asg.row(r)).0, r))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        taken[r] = true;
        greedy += best;
    }
    assert!(asg.total_cost() <= greedy + 1e-12);
}

#[test]
fn wider_search_never_costs_more() {
    let setup = LatticeSetup::from_indices(Lattice::with_volume(LatticeKind::Z2, 0.02).unwrap(), &[5, 9]).unwrap();
    let ch = ChannelModel::new(vec![0.1, 0.05]).unwrap();
    let mut costs = Vec::new();
    for factor in [2.0, 3.0, 5.0] {
        let opts = AssignOptions {
            volume_factor: factor,
            ..AssignOptions::new(1.0)
        };
        costs.push(assign(&setup, &ch, &opts).unwrap().total_cost());
    }
    for w in costs.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{costs:?}");
    }
}

#[test]
fn alpha_round_trips_and_respects_sublattices() {
    let asg = build(LatticeKind::Z2, 0.02, &[5, 13], &[0.1, 0.1]);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..10_000 {
        let c = LatticePoint::new([rng.gen_range(-500..500), rng.gen_range(-500..500)]);
        let t = asg.alpha(c);
        for (i, p) in t.iter().enumerate() {
            assert!(asg.setup().subs()[i].contains(*p), "component {i} of alpha({c:?})");
        }
        assert_eq!(asg.alpha_inverse(&t).unwrap(), c);
    }
}

#[test]
fn shift_invariance() {
    let asg = build(LatticeKind::A2, 0.05, &[7, 13], &[0.1, 0.1]);
    let s = LatticePoint::new(asg.setup().product().basis_coords()[0]);
    let s2 = LatticePoint::new(asg.setup().product().basis_coords()[1]);
    for &c in asg.central_points() {
        let shifted: Vec<LatticePoint> = asg.alpha(c).iter().map(|&p| p + s + s2).collect();
        assert_eq!(asg.alpha(c + s + s2), shifted);
    }
}

#[test]
fn side_distortions_scale_with_cell_volume() {
    let asg = build(LatticeKind::Z2, 0.02, &[5, 5], &[0.1, 0.1]);
    let big = asg.with_nu(0.08).unwrap();
    for l in [Subset::from_indices(&[0]), Subset::from_indices(&[1])] {
        let a = asg.side_distortion(l).unwrap();
        let b = big.side_distortion(l).unwrap();
        assert!((b / a - 4.0).abs() < 1e-9, "{l}: {a} -> {b}");
    }
    assert!((big.total_cost() / asg.total_cost() - 4.0).abs() < 1e-9);
}

#[test]
fn table_round_trips() {
    let asg = build(LatticeKind::Z1, 0.3, &[3, 5], &[0.05, 0.05]);
    let mut buf = Vec::new();
    asg.write_table(&mut buf).unwrap();
    let back = IndexAssignment::read_table(buf.as_slice(), asg.channel()).unwrap();
    assert_eq!(back.central_points(), asg.central_points());
    for r in 0..asg.n_pi() {
        assert_eq!(back.row(r), asg.row(r));
    }
    assert!((back.total_cost() - asg.total_cost()).abs() < 1e-12);
    assert!(IndexAssignment::read_table("garbage\n".as_bytes(), asg.channel()).is_err());
}
