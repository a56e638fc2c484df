//! Probability bookkeeping over subsets of received descriptions.

use std::fmt;

use crate::error::{Error, Result};

/// Largest description count for which subset weights are enumerated.
pub const MAX_DESCRIPTIONS: usize = 20;

/// A set of description indices, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Subset(pub u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn full(k: usize) -> Subset {
        Subset(((1u64 << k) - 1) as u32)
    }

    pub fn from_indices(indices: &[usize]) -> Subset {
        Subset(indices.iter().fold(0, |m, &i| m | (1 << i)))
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&i| self.0 >> i & 1 == 1)
    }

    /// All `2^k` subsets in increasing bitmask order.
    pub fn all(k: usize) -> impl Iterator<Item = Subset> {
        (0..1u32 << k).map(Subset)
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, i) in self.indices().enumerate() {
            if n > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

/// Independent per-description loss probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    p: Vec<f64>,
}

impl ChannelModel {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.len() > 31 {
            return Err(Error::OutOfRange {
                what: "description count",
                detail: p.len().to_string(),
            });
        }
        if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange {
                what: "loss probability",
                detail: bad.to_string(),
            });
        }
        Ok(ChannelModel { p })
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    pub fn loss(&self) -> &[f64] {
        &self.p
    }

    pub fn reception(&self) -> Vec<f64> {
        self.p.iter().map(|p| 1.0 - p).collect()
    }

    /// Probability of receiving exactly the descriptions in `l`.
    pub fn subset_prob(&self, l: Subset) -> Result<f64> {
        if (l.0 as u64) >> self.k() != 0 {
            return Err(Error::OutOfRange {
                what: "description subset",
                detail: format!("{l} with K = {}", self.k()),
            });
        }
        Ok(self.mask_prob(l))
    }

    pub(crate) fn mask_prob(&self, l: Subset) -> f64 {
        self.p
            .iter()
            .enumerate()
            .map(|(i, &p)| if l.contains(i) { 1.0 - p } else { p })
            .product()
    }

    /// Probability that every description is lost.
    pub fn total_loss(&self) -> f64 {
        self.p.iter().product()
    }

    pub fn weights(&self, kappa: usize) -> Result<SubsetWeights> {
        let k = self.k();
        if k > MAX_DESCRIPTIONS {
            return Err(Error::OutOfRange {
                what: "description count",
                detail: format!("{k} > {MAX_DESCRIPTIONS}"),
            });
        }
        if kappa == 0 || kappa > k {
            return Err(Error::OutOfRange {
                what: "kappa",
                detail: format!("{kappa} not in 1..={k}"),
            });
        }
        let mut p_l = 0.0;
        let mut p_li = vec![0.0; k];
        let mut p_lij = vec![vec![0.0; k]; k];
        for l in Subset::all(k).filter(|l| l.len() == kappa) {
            let pl = self.mask_prob(l);
            p_l += pl;
            for i in l.indices() {
                p_li[i] += pl;
                for j in l.indices() {
                    p_lij[i][j] += pl;
                }
            }
        }
        let beta = association(kappa, p_l, &p_li, &p_lij);
        Ok(SubsetWeights {
            k,
            kappa,
            p_l,
            p_li,
            p_lij,
            beta,
        })
    }

    /// Weights for every `kappa` in `1..=K`.
    pub fn all_weights(&self) -> Result<Vec<SubsetWeights>> {
        (1..=self.k()).map(|kappa| self.weights(kappa)).collect()
    }

    /// `(p_hat, beta_hat)`: the sums of `p(L)` and `beta` over `kappa = 1..=K`.
    pub fn aggregates(&self) -> Result<(f64, f64)> {
        let ws = self.all_weights()?;
        Ok((
            ws.iter().map(|w| w.p_l).sum(),
            ws.iter().map(|w| w.beta).sum(),
        ))
    }
}

/// `(1/kappa^2) * sum_{i<j} (p(L_i) p(L_j) / p(L) - p(L_ij))`, zero when
/// `p(L)` vanishes.
pub(crate) fn association(kappa: usize, p_l: f64, p_li: &[f64], p_lij: &[Vec<f64>]) -> f64 {
    if p_l < 1e-300 {
        return 0.0;
    }
    let k = p_li.len();
    let mut s = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            s += p_li[i] * p_li[j] / p_l - p_lij[i][j];
        }
    }
    s / (kappa * kappa) as f64
}

/// Aggregated subset probabilities for one reception count `kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetWeights {
    pub k: usize,
    pub kappa: usize,
    /// `p(L)`: probability of receiving exactly `kappa` descriptions.
    pub p_l: f64,
    /// `p(L_i)`: ... and description `i` among them.
    pub p_li: Vec<f64>,
    /// `p(L_ij)`: ... and both `i` and `j` (diagonal equals `p_li`).
    pub p_lij: Vec<Vec<f64>>,
    pub beta: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch(p: &[f64]) -> ChannelModel {
        ChannelModel::new(p.to_vec()).unwrap()
    }

    #[test]
    fn subset_probabilities() {
        let c = ch(&[0.1, 0.2, 0.3]);
        assert!((c.subset_prob(Subset::from_indices(&[0, 1])).unwrap() - 0.216).abs() < 1e-15);
        assert!((c.subset_prob(Subset::full(3)).unwrap() - 0.9 * 0.8 * 0.7).abs() < 1e-15);
        assert!((c.subset_prob(Subset::EMPTY).unwrap() - 0.1 * 0.2 * 0.3).abs() < 1e-15);
        assert!(c.subset_prob(Subset::from_indices(&[3])).is_err());
    }

    /// Direct enumeration of every subset, independent of `weights`.
    fn beta_oracle(p: &[f64], kappa: usize) -> f64 {
        let k = p.len();
        let prob = |m: u32| -> f64 {
            (0..k)
                .map(|i| if m >> i & 1 == 1 { 1.0 - p[i] } else { p[i] })
                .product()
        };
        let sets: Vec<u32> = (0..1u32 << k).filter(|m| m.count_ones() as usize == kappa).collect();
        let pl: f64 = sets.iter().map(|&m| prob(m)).sum();
        let pli = |i: usize| -> f64 { sets.iter().filter(|&&m| m >> i & 1 == 1).map(|&m| prob(m)).sum() };
        let plij = |i: usize, j: usize| -> f64 {
            sets.iter()
                .filter(|&&m| m >> i & 1 == 1 && m >> j & 1 == 1)
                .map(|&m| prob(m))
                .sum()
        };
        let mut s = 0.0;
        for i in 0..k {
            for j in i + 1..k {
                s += pli(i) * pli(j) / pl - plij(i, j);
            }
        }
        s / (kappa * kappa) as f64
    }

    #[test]
    fn weights_k3_kappa2() {
        let w = ch(&[0.1, 0.2, 0.3]).weights(2).unwrap();
        assert!((w.p_l - 0.398).abs() < 1e-12);
        assert!((w.p_li[0] - 0.342).abs() < 1e-12);
        assert!((w.p_li[1] - 0.272).abs() < 1e-12);
        assert!((w.p_li[2] - 0.182).abs() < 1e-12);
        assert!((w.p_lij[0][1] - 0.216).abs() < 1e-12);
        let oracle = beta_oracle(&[0.1, 0.2, 0.3], 2);
        assert!((oracle - 0.029_126).abs() < 1e-6);
        assert!((w.beta - oracle).abs() < 1e-15);
    }

    #[test]
    fn weights_small_cases() {
        let w = ch(&[0.5, 0.5]).weights(1).unwrap();
        assert_eq!(w.p_l, 0.5);
        assert_eq!(w.p_li, vec![0.25, 0.25]);
        assert_eq!(w.p_lij[0][1], 0.0);
        assert_eq!(w.beta, 0.125);

        let c = ch(&[0.3, 0.01, 0.2, 0.7]);
        assert_eq!(c.weights(4).unwrap().beta, 0.0);
        assert!(c.weights(0).is_err());
        assert!(c.weights(5).is_err());
    }

    #[test]
    fn aggregates() {
        let c = ch(&[0.025, 0.05, 0.075, 0.05]);
        let (p_hat, beta_hat) = c.aggregates().unwrap();
        assert!((p_hat + c.total_loss() - 1.0).abs() < 1e-12);
        let oracle: f64 = (1..=4).map(|kp| beta_oracle(c.loss(), kp)).sum();
        assert!((beta_hat - oracle).abs() < 1e-14);

        let (p_hat, beta_hat) = ch(&[0.0, 0.0, 0.0]).aggregates().unwrap();
        assert_eq!(p_hat, 1.0);
        assert_eq!(beta_hat, 0.0);
    }

    #[test]
    fn degenerate_all_lost() {
        let w = ch(&[1.0, 1.0]).weights(1).unwrap();
        assert_eq!(w.p_l, 0.0);
        assert_eq!(w.beta, 0.0);
    }

    #[test]
    fn channel_validation() {
        assert!(ChannelModel::new(vec![]).is_err());
        assert!(ChannelModel::new(vec![1.5]).is_err());
        assert!(ChannelModel::new(vec![-0.1]).is_err());
    }

    #[test]
    fn permutation_symmetry() {
        let a = ch(&[0.1, 0.25, 0.4]).weights(2).unwrap();
        let b = ch(&[0.4, 0.1, 0.25]).weights(2).unwrap();
        // b's index 1 is a's index 0, etc.
        let perm = [2, 0, 1];
        for i in 0..3 {
            assert!((b.p_li[i] - a.p_li[perm[i]]).abs() < 1e-15);
            for j in 0..3 {
                assert!((b.p_lij[i][j] - a.p_lij[perm[i]][perm[j]]).abs() < 1e-15);
            }
        }
        assert!((a.beta - b.beta).abs() < 1e-15);
    }
}
