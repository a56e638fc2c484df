//! High-resolution design equations.
//!
//! Given a source, a channel and a total side-entropy budget `R*`, these
//! functions pick the central cell volume `nu` and index values `N_i` that
//! minimize the predicted expected distortion
//!
//! ```text
//! d(nu, N) = G_c nu^(2/L) p_hat
//!          + E||X||^2 prod(p_i)
//!          + psi^(2/L) nu^(2/L) G_S prod(N_m)^(2/(L(K-1))) beta_hat
//! ```
//!
//! subject to `sum R_i = R*`, where `R_c = h - log2(nu)/L` and
//! `R_i = h - log2(N_i nu)/L`.

use crate::error::{Error, Result};
use crate::loss::ChannelModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceKind {
    Gaussian { variance: f64 },
    Custom,
}

/// The two source statistics the design needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceModel {
    /// Per-component differential entropy, bits.
    pub h: f64,
    /// `E[||X||^2]` under the dimension-normalized norm.
    pub mean_power: f64,
    pub dim: usize,
    pub kind: SourceKind,
}

impl SourceModel {
    /// i.i.d. zero-mean Gaussian components of the given variance.
    pub fn gaussian(dim: usize, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::OutOfRange {
                what: "variance",
                detail: variance.to_string(),
            });
        }
        Ok(SourceModel {
            h: 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * variance).log2(),
            mean_power: variance,
            dim,
            kind: SourceKind::Gaussian { variance },
        })
    }

    pub fn custom(dim: usize, h: f64, mean_power: f64) -> Result<Self> {
        if !(mean_power > 0.0) || !h.is_finite() {
            return Err(Error::OutOfRange {
                what: "source statistics",
                detail: format!("h = {h}, mean power = {mean_power}"),
            });
        }
        Ok(SourceModel {
            h,
            mean_power,
            dim,
            kind: SourceKind::Custom,
        })
    }
}

/// Central and side entropies (bits per dimension) for cell volume `nu` and
/// index values `indices`.
pub fn rates(nu: f64, indices: &[f64], src: &SourceModel) -> Result<(f64, Vec<f64>)> {
    if !(nu > 0.0) {
        return Err(Error::OutOfRange {
            what: "cell volume",
            detail: nu.to_string(),
        });
    }
    let l = src.dim as f64;
    let rc = src.h - nu.log2() / l;
    let ri = indices.iter().map(|&n| src.h - (n * nu).log2() / l).collect();
    Ok((rc, ri))
}

/// `tau_* = 2^(L (K h - R*))`, the value of `prod(N_i nu)` on the budget.
pub fn tau_star(src: &SourceModel, k: usize, rstar: f64) -> f64 {
    (src.dim as f64 * (k as f64 * src.h - rstar)).exp2()
}

/// Default expansion factor: 1 for two descriptions, `2^((K-2)/(K-1))` in
/// two dimensions. Other cases fall back to 1; the flag reports the fallback.
pub fn default_psi(dim: usize, k: usize) -> (f64, bool) {
    match (dim, k) {
        (_, 0..=2) => (1.0, false),
        (2, k) => (((k - 2) as f64 / (k - 1) as f64).exp2(), false),
        _ => (1.0, true),
    }
}

/// Lattice-dependent constants of the design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignConstants {
    pub psi: f64,
    /// Normalized second moment of the central lattice.
    pub g_c: f64,
    /// Normalized second moment of the sphere.
    pub g_s: f64,
}

fn channel_aggregates(channel: &ChannelModel) -> Result<(f64, f64)> {
    let (p_hat, beta_hat) = channel.aggregates()?;
    if !(beta_hat > 0.0) || !(p_hat > 0.0) {
        return Err(Error::DegenerateChannel(format!(
            "beta_hat = {beta_hat}, p_hat = {p_hat}: side descriptions carry no \
             distortion trade-off (lossless or fully lossy channel)"
        )));
    }
    Ok((p_hat, beta_hat))
}

/// The expected distortion as a function of `nu` alone, with `prod(N_i nu)`
/// held at `tau_*`.
pub fn design_objective(nu: f64, src: &SourceModel, k: usize, rstar: f64, c: &DesignConstants, channel: &ChannelModel) -> Result<f64> {
    let (p_hat, beta_hat) = channel.aggregates()?;
    let l = src.dim as f64;
    let e = 2.0 / (l * (k as f64 - 1.0));
    Ok(c.g_c * nu.powf(2.0 / l) * p_hat
        + src.mean_power * channel.total_loss()
        + c.psi.powf(2.0 / l) * nu.powf(-e) * tau_star(src, k, rstar).powf(e) * c.g_s * beta_hat)
}

/// Closed-form minimizer of [`design_objective`].
pub fn optimal_nu(src: &SourceModel, k: usize, rstar: f64, c: &DesignConstants, channel: &ChannelModel) -> Result<f64> {
    if k < 2 {
        return Err(Error::OutOfRange {
            what: "description count",
            detail: "optimal nu needs K >= 2".into(),
        });
    }
    let (p_hat, beta_hat) = channel_aggregates(channel)?;
    let l = src.dim as f64;
    let kf = k as f64;
    let inner = c.psi.powf(2.0 / l) / (kf - 1.0) * (c.g_s / c.g_c) * (beta_hat / p_hat);
    Ok((l * (src.h - rstar / kf)).exp2() * inner.powf(l * (kf - 1.0) / (2.0 * kf)))
}

fn check_split(a: &[f64], k: usize) -> Result<()> {
    if a.len() != k {
        return Err(Error::Mismatch(format!("{} rate fractions for {k} descriptions", a.len())));
    }
    let s: f64 = a.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::OutOfRange {
            what: "rate fractions",
            detail: format!("sum is {s}, expected 1"),
        });
    }
    Ok(())
}

/// Checks `0 < a_i R* <= R_c` for every description.
pub fn check_rate_split(a: &[f64], rstar: f64, rc: f64) -> Result<()> {
    for (i, &ai) in a.iter().enumerate() {
        let v = ai * rstar;
        if !(v > 0.0) || v > rc + 1e-12 {
            return Err(Error::InfeasibleRate {
                index: i,
                value: v,
                bound: rc,
            });
        }
    }
    Ok(())
}

/// Unsnapped optimal index values `N_i = 2^(L (h - a_i R*)) / nu`.
pub fn optimal_indices(src: &SourceModel, k: usize, rstar: f64, a: &[f64], c: &DesignConstants, channel: &ChannelModel) -> Result<Vec<f64>> {
    check_split(a, k)?;
    let nu = optimal_nu(src, k, rstar, c, channel)?;
    let (rc, _) = rates(nu, &[], src)?;
    check_rate_split(a, rstar, rc)?;
    let l = src.dim as f64;
    Ok(a.iter().map(|&ai| (l * (src.h - ai * rstar)).exp2() / nu).collect())
}

/// Cell volume meeting `sum R_i = R*` exactly for the given index values.
pub fn rescaled_nu(indices: &[u64], src: &SourceModel, rstar: f64) -> f64 {
    let k = indices.len() as f64;
    let l = src.dim as f64;
    let log_prod: f64 = indices.iter().map(|&n| (n as f64).log2()).sum();
    (l * (src.h - rstar / k) - log_prod / k).exp2()
}

/// Snaps each index to the admissible value nearest in `log2`, then rescales
/// `nu` so the side entropies again sum to `R*`.
pub fn snap_and_rescale(ni_real: &[f64], src: &SourceModel, rstar: f64, admissible: &[u64]) -> Result<(Vec<u64>, f64)> {
    if admissible.is_empty() {
        return Err(Error::OutOfRange {
            what: "admissible index set",
            detail: "empty".into(),
        });
    }
    if ni_real.is_empty() {
        let l = src.dim as f64;
        return Ok((Vec::new(), (l * (src.h - rstar)).exp2()));
    }
    let snapped: Vec<u64> = ni_real
        .iter()
        .map(|&n| {
            let target = n.max(f64::MIN_POSITIVE).log2();
            *admissible
                .iter()
                .min_by(|&&x, &&y| {
                    let dx = ((x as f64).log2() - target).abs();
                    let dy = ((y as f64).log2() - target).abs();
                    dx.total_cmp(&dy).then(x.cmp(&y))
                })
                .expect("nonempty")
        })
        .collect();
    let nu = rescaled_nu(&snapped, src, rstar);
    Ok((snapped, nu))
}

/// The three addends of the predicted expected distortion.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DistortionPrediction {
    pub central_term: f64,
    pub zero_term: f64,
    pub side_term: f64,
    pub total: f64,
}

/// Predicted expected distortion from cell volume and index values.
pub fn predict_distortion(nu: f64, indices: &[f64], src: &SourceModel, channel: &ChannelModel, c: &DesignConstants) -> Result<DistortionPrediction> {
    let k = channel.k();
    if indices.len() != k {
        return Err(Error::Mismatch(format!("{} indices for {k} descriptions", indices.len())));
    }
    let (p_hat, beta_hat) = channel.aggregates()?;
    let l = src.dim as f64;
    let central_term = c.g_c * nu.powf(2.0 / l) * p_hat;
    let zero_term = src.mean_power * channel.total_loss();
    let side_term = if k < 2 {
        0.0
    } else {
        let e = 2.0 / (l * (k as f64 - 1.0));
        let prod: f64 = indices.iter().map(|n| n.powf(e)).product();
        c.psi.powf(2.0 / l) * nu.powf(2.0 / l) * c.g_s * prod * beta_hat
    };
    Ok(DistortionPrediction {
        central_term,
        zero_term,
        side_term,
        total: central_term + zero_term + side_term,
    })
}

/// The same prediction written in terms of the central and side entropies.
pub fn predict_from_rates(rc: f64, ri: &[f64], src: &SourceModel, channel: &ChannelModel, c: &DesignConstants) -> Result<DistortionPrediction> {
    let k = channel.k();
    if ri.len() != k {
        return Err(Error::Mismatch(format!("{} rates for {k} descriptions", ri.len())));
    }
    let (p_hat, beta_hat) = channel.aggregates()?;
    let base = (2.0 * (src.h - rc)).exp2();
    let central_term = c.g_c * base * p_hat;
    let zero_term = src.mean_power * channel.total_loss();
    let side_term = if k < 2 {
        0.0
    } else {
        let kf = k as f64;
        let mean_ri = ri.iter().sum::<f64>() / kf;
        c.psi.powf(2.0 / src.dim as f64) * beta_hat * c.g_s * base * (2.0 * kf / (kf - 1.0) * (rc - mean_ri)).exp2()
    };
    Ok(DistortionPrediction {
        central_term,
        zero_term,
        side_term,
        total: central_term + zero_term + side_term,
    })
}

/// Everything the design pipeline decides.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignParams {
    pub rstar: f64,
    pub a: Vec<f64>,
    pub psi: f64,
    pub tau_star: f64,
    pub nu_opt: f64,
    pub ni_opt: Vec<f64>,
    pub ni_snapped: Vec<u64>,
    pub nu_rescaled: f64,
    /// Central entropy before and after snapping.
    pub rc_opt: f64,
    pub rc_snapped: f64,
    /// Side entropies after snapping.
    pub ri_snapped: Vec<f64>,
}

/// Runs the full design: `tau_*`, optimal `nu`, optimal and snapped indices.
///
/// The rate split is checked against `R_c` both before snapping (on the
/// requested fractions) and after (on the realized side entropies).
pub fn design(
    src: &SourceModel,
    rstar: f64,
    a: &[f64],
    c: &DesignConstants,
    channel: &ChannelModel,
    admissible: impl Fn(u64) -> Vec<u64>,
) -> Result<DesignParams> {
    let k = channel.k();
    if !(rstar > 0.0) {
        return Err(Error::OutOfRange {
            what: "target entropy",
            detail: rstar.to_string(),
        });
    }
    let nu_opt = optimal_nu(src, k, rstar, c, channel)?;
    let ni_opt = optimal_indices(src, k, rstar, a, c, channel)?;
    let max_n = ni_opt.iter().fold(1.0f64, |m, &n| m.max(n));
    let allowed = admissible((4.0 * max_n).ceil() as u64 + 8);
    let (ni_snapped, nu_rescaled) = snap_and_rescale(&ni_opt, src, rstar, &allowed)?;
    let snapped_f: Vec<f64> = ni_snapped.iter().map(|&n| n as f64).collect();
    let (rc_snapped, ri_snapped) = rates(nu_rescaled, &snapped_f, src)?;
    for (i, &r) in ri_snapped.iter().enumerate() {
        if !(r > 0.0) || r > rc_snapped + 1e-12 {
            return Err(Error::InfeasibleRate {
                index: i,
                value: r,
                bound: rc_snapped,
            });
        }
    }
    Ok(DesignParams {
        rstar,
        a: a.to_vec(),
        psi: c.psi,
        tau_star: tau_star(src, k, rstar),
        nu_opt,
        rc_opt: rates(nu_opt, &[], src)?.0,
        ni_opt,
        ni_snapped,
        nu_rescaled,
        rc_snapped,
        ri_snapped,
    })
}
