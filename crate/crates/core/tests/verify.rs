use mdlvq::loss::{ChannelModel, SubsetWeights};
use mdlvq::verify::{normalization_check, optimal_nu_check, theorem1_check};

#[test]
fn identity_check_passes_on_the_real_weights() {
    let w = |ch: &ChannelModel, kappa: usize| ch.weights(kappa);
    assert!(theorem1_check(100, 5, &w).unwrap().passed);
    assert!(normalization_check(200, 5).unwrap().passed);
    assert!(optimal_nu_check(30, 5).unwrap().passed);
}

#[test]
fn identity_check_catches_perturbed_pair_weights() {
    let bad = |ch: &ChannelModel, kappa: usize| -> mdlvq::Result<SubsetWeights> {
        let mut w = ch.weights(kappa)?;
        for i in 0..w.k {
            for j in 0..w.k {
                if i != j {
                    w.p_lij[i][j] *= 1.01;
                }
            }
        }
        Ok(w)
    };
    assert!(!theorem1_check(100, 5, &bad).unwrap().passed);
}
