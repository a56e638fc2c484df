use mdlvq::labeling::{direct_term, expanded_term};
use mdlvq::loss::{ChannelModel, Subset};
use mdlvq::Error;
use proptest::prelude::*;

fn channel() -> impl Strategy<Value = ChannelModel> {
    prop::collection::vec(0.0f64..=1.0, 2..=5).prop_map(|p| ChannelModel::new(p).unwrap())
}

/// Binomial-style sum over subsets by explicit bit loops, independent of `Subset`.
fn reception_prob(p: &[f64], mask: u32) -> f64 {
    (0..p.len()).map(|i| if mask >> i & 1 == 1 { 1.0 - p[i] } else { p[i] }).product()
}

proptest! {
    #[test]
    fn subset_probabilities_sum_to_one(ch in channel()) {
        let s: f64 = Subset::all(ch.k()).map(|l| ch.subset_prob(l).unwrap()).sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weights_match_direct_enumeration(ch in channel()) {
        let k = ch.k();
        for kappa in 1..=k {
            let w = ch.weights(kappa).unwrap();
            let masks: Vec<u32> = (0u32..1 << k).filter(|m| m.count_ones() as usize == kappa).collect();
            let p_l: f64 = masks.iter().map(|&m| reception_prob(ch.loss(), m)).sum();
            prop_assert!((w.p_l - p_l).abs() < 1e-12);
            for i in 0..k {
                let p_li: f64 = masks.iter().filter(|&&m| m >> i & 1 == 1).map(|&m| reception_prob(ch.loss(), m)).sum();
                prop_assert!((w.p_li[i] - p_li).abs() < 1e-12);
                prop_assert!(w.p_li[i] <= w.p_l + 1e-15);
                for j in 0..k {
                    prop_assert_eq!(w.p_lij[i][j], w.p_lij[j][i]);
                    prop_assert!(w.p_lij[i][j] <= w.p_li[i].min(w.p_li[j]) + 1e-15);
                }
                prop_assert_eq!(w.p_lij[i][i], w.p_li[i]);
            }
            // each received subset contributes kappa memberships
            let s: f64 = w.p_li.iter().sum();
            prop_assert!((s - kappa as f64 * w.p_l).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregates_are_consistent(ch in channel()) {
        let (p_hat, beta_hat) = ch.aggregates().unwrap();
        prop_assert!((p_hat + ch.total_loss() - 1.0).abs() < 1e-12);
        let beta_sum: f64 = ch.all_weights().unwrap().iter().map(|w| w.beta).sum();
        prop_assert!((beta_hat - beta_sum).abs() < 1e-15);
        prop_assert!(beta_hat >= -1e-12);
    }

    #[test]
    fn expanded_and_direct_distortion_agree(
        ch in channel(),
        pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 5),
        c in (-5.0f64..5.0, -5.0f64..5.0),
    ) {
        let k = ch.k();
        let tuple: Vec<[f64; 2]> = pts.iter().take(k).map(|&(a, b)| [a, b]).collect();
        for kappa in 1..=k {
            let w = ch.weights(kappa).unwrap();
            let e = expanded_term(2, [c.0, c.1], &tuple, &w);
            let d = direct_term(2, [c.0, c.1], &tuple, &ch, kappa);
            prop_assert!((e - d).abs() <= 1e-9 * (1.0 + d.abs()), "kappa {}: {} vs {}", kappa, e, d);
        }
    }
}

#[test]
fn symmetric_channel_has_closed_form_weights() {
    let p: f64 = 0.2;
    let ch = ChannelModel::new(vec![p; 3]).unwrap();
    let w = ch.weights(1).unwrap();
    assert!((w.p_l - 3.0 * (1.0 - p) * p * p).abs() < 1e-15);
    let w = ch.weights(2).unwrap();
    assert!((w.p_l - 3.0 * (1.0 - p).powi(2) * p).abs() < 1e-15);
    assert!((w.p_lij[0][1] - (1.0 - p).powi(2) * p).abs() < 1e-15);
}

#[test]
fn invalid_channels_are_rejected() {
    assert!(matches!(ChannelModel::new(vec![]), Err(Error::OutOfRange { .. })));
    assert!(ChannelModel::new(vec![0.1, 1.5]).is_err());
    assert!(ChannelModel::new(vec![0.1, f64::NAN]).is_err());
    let ch = ChannelModel::new(vec![0.1, 0.1]).unwrap();
    assert!(ch.weights(0).is_err());
    assert!(ch.weights(3).is_err());
}
