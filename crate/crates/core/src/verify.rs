//! Self-checks: algebraic identities, probability bookkeeping, the closed-form
//! cell volume against a numerical minimizer, and how the labeling's pairwise
//! distances compare with their sphere-packing prediction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::hr::{self, DesignConstants, SourceModel};
use crate::labeling::{assign, direct_term, expanded_term, AssignOptions, LatticeSetup};
use crate::lattice::{dn2, sphere_second_moment, Lattice, LatticeKind, LatticePoint};
use crate::loss::{ChannelModel, Subset, SubsetWeights};
use crate::report::CsvTable;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckResult {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

fn random_channel<R: Rng>(rng: &mut R, k: usize, lo: f64, hi: f64) -> ChannelModel {
    ChannelModel::new((0..k).map(|_| rng.gen_range(lo..=hi)).collect()).expect("probabilities in range")
}

fn random_kind<R: Rng>(rng: &mut R) -> LatticeKind {
    [LatticeKind::Z1, LatticeKind::Z2, LatticeKind::A2][rng.gen_range(0..3)]
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Source of subset weights for the expanded form; swapped out to test that
/// the check catches a wrong formula.
pub type WeightsFn<'a> = &'a dyn Fn(&ChannelModel, usize) -> Result<SubsetWeights>;

/// Compares the per-subset sum of expected distortions with its expansion
/// into a weighted-centroid term and a weighted pairwise-distance term.
pub fn theorem1_check(instances: usize, seed: u64, weights: WeightsFn) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let k = rng.gen_range(2..=5);
        let kappa = rng.gen_range(1..=k);
        let kind = random_kind(&mut rng);
        let dim = kind.dim();
        let lat = Lattice::unit(kind);
        let channel = random_channel(&mut rng, k, 0.0, 1.0);
        let w = weights(&channel, kappa)?;
        let mut direct = 0.0;
        let mut expanded = 0.0;
        for _ in 0..50 {
            let mut point = || {
                let mut c = [0i64; 2];
                for v in c.iter_mut().take(dim) {
                    *v = rng.gen_range(-20..=20);
                }
                lat.embed(LatticePoint::new(c))
            };
            let central = point();
            let tuple: Vec<[f64; 2]> = (0..k).map(|_| point()).collect();
            direct += direct_term(dim, central, &tuple, &channel, kappa);
            expanded += expanded_term(dim, central, &tuple, &w);
        }
        worst = worst.max(rel_err(direct, expanded));
    }
    Ok(CheckResult::new(
        "theorem1-identity",
        worst <= 1e-9,
        format!("{instances} instances, worst relative error {worst:.3e}"),
    ))
}

/// Subset probabilities sum to one, and partial-or-full reception plus total
/// loss covers everything.
pub fn normalization_check(channels: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..channels {
        let k = rng.gen_range(1..=10);
        let ch = random_channel(&mut rng, k, 0.0, 1.0);
        let mut total = 0.0;
        for kappa in 0..=k {
            for l in Subset::all(k).filter(|l| l.len() == kappa) {
                total += ch.subset_prob(l)?;
            }
        }
        let (p_hat, _) = ch.aggregates()?;
        worst = worst.max((total - 1.0).abs()).max((p_hat + ch.total_loss() - 1.0).abs());
    }
    Ok(CheckResult::new(
        "probability-normalization",
        worst <= 1e-12,
        format!("{channels} channels, worst deviation {worst:.3e}"),
    ))
}

/// Minimizes `f` over `[a, b]` by golden-section search.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Numerical minimizer of the distortion over `nu` with the product of
/// side-cell volumes held on the entropy budget, searched in `log2(nu)` over
/// ten octaves either side of `2^(L(h - R*/K))`.
pub fn numeric_optimal_nu(src: &SourceModel, k: usize, rstar: f64, c: &DesignConstants, channel: &ChannelModel) -> Result<f64> {
    let (p_hat, beta_hat) = channel.aggregates()?;
    let l = src.dim as f64;
    let kf = k as f64;
    let tau = (l * (kf * src.h - rstar)).exp2();
    let e = 2.0 / (l * (kf - 1.0));
    // the zero-reception term does not depend on nu
    let f = |t: f64| {
        let nu = t.exp2();
        c.g_c * nu.powf(2.0 / l) * p_hat + c.psi.powf(2.0 / l) * (tau / nu).powf(e) * c.g_s * beta_hat
    };
    let centre = l * (src.h - rstar / kf);
    Ok(golden_section(f, centre - 10.0, centre + 10.0, 1e-11).exp2())
}

pub fn optimal_nu_check(configs: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..configs {
        let kind = random_kind(&mut rng);
        let k = rng.gen_range(2..=4);
        let src = SourceModel::gaussian(kind.dim(), rng.gen_range(0.25..4.0))?;
        let channel = random_channel(&mut rng, k, 0.005, 0.5);
        let rstar = rng.gen_range(2.0..12.0);
        let c = DesignConstants {
            psi: hr::default_psi(kind.dim(), k).0,
            g_c: kind.second_moment(),
            g_s: sphere_second_moment(kind.dim())?,
        };
        let closed = hr::optimal_nu(&src, k, rstar, &c, &channel)?;
        let numeric = numeric_optimal_nu(&src, k, rstar, &c, &channel)?;
        worst = worst.max(rel_err(closed, numeric));
    }
    Ok(CheckResult::new(
        "optimal-nu-oracle",
        worst <= 1e-6,
        format!("{configs} configurations, worst relative error {worst:.3e}"),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prop1Row {
    pub n: u64,
    pub n_pi: usize,
    /// Sum over the labeled cell of `||alpha_0(c) - alpha_1(c)||^2`.
    pub measured: f64,
    /// Sphere-packing prediction of the same sum.
    pub predicted: f64,
    pub ratio: f64,
}

/// Two descriptions on the square lattice with equal indices: measured
/// pairwise distance sum of the optimal labeling against
/// `G(S) nu N_pi N^2`.
pub fn prop1_table(indices: &[u64]) -> Result<Vec<Prop1Row>> {
    let kind = LatticeKind::Z2;
    let lat = Lattice::unit(kind);
    let channel = ChannelModel::new(vec![0.05, 0.05])?;
    let g_s = sphere_second_moment(2)?;
    indices
        .iter()
        .map(|&n| {
            let setup = LatticeSetup::from_indices(lat, &[n, n])?;
            let asg = assign(&setup, &channel, &AssignOptions::new(1.0))?;
            let measured: f64 = (0..asg.n_pi())
                .map(|r| {
                    let t = asg.row(r);
                    dn2(2, lat.embed(t[0]), lat.embed(t[1]))
                })
                .sum();
            let nu = lat.cell_volume();
            let predicted = nu * g_s * asg.n_pi() as f64 * (n * n) as f64;
            Ok(Prop1Row {
                n,
                n_pi: asg.n_pi(),
                measured,
                predicted,
                ratio: measured / predicted,
            })
        })
        .collect()
}

pub const PROP1_INDICES: [u64; 5] = [5, 9, 13, 25, 29];

/// The ratio at the largest index is within `[0.8, 1.25]` and no further
/// from one than at the smallest.
pub fn prop1_check(rows: &[Prop1Row]) -> CheckResult {
    let (Some(first), Some(last)) = (rows.first(), rows.last()) else {
        return CheckResult::new("prop1-trend", false, "no rows".into());
    };
    let in_band = (0.8..=1.25).contains(&last.ratio);
    let closer = (last.ratio - 1.0).abs() <= (first.ratio - 1.0).abs();
    let table: Vec<String> = rows.iter().map(|r| format!("N={}: {:.5}", r.n, r.ratio)).collect();
    CheckResult::new(
        "prop1-trend",
        in_band && closer,
        format!(
            "{}; last in [0.8, 1.25]: {in_band}; |ratio-1| at N={} <= at N={}: {closer}",
            table.join(", "),
            last.n,
            first.n
        ),
    )
}

/// Re-validates a simulation report read from disk: subset hit counts add up
/// to the vector count and the total is their weighted mean.
pub fn check_run_table(t: &CsvTable) -> Result<CheckResult> {
    let rec = t.column("record").ok_or_else(|| crate::Error::Mismatch("not a simulation report".into()))?;
    let mut total = None;
    let mut hits = 0.0;
    let mut weighted = 0.0;
    for r in 0..t.rows.len() {
        match t.rows[r][rec].as_str() {
            "total" => total = Some((t.number(r, "hits")?, t.number(r, "empirical")?)),
            "subset" => {
                let h = t.number(r, "hits")?;
                hits += h;
                weighted += h * t.number(r, "empirical")?;
            }
            _ => {}
        }
    }
    let Some((n, emp)) = total else {
        return Ok(CheckResult::new("report-consistency", false, "no total row".into()));
    };
    let counts_ok = hits == n;
    let mean_ok = rel_err(weighted / hits, emp) <= 1e-12;
    Ok(CheckResult::new(
        "report-consistency",
        counts_ok && mean_ok,
        format!("hits {hits} of {n}; weighted mean {} vs total {emp}", weighted / hits),
    ))
}

/// Runs the standard suite.
pub fn run_all(seed: u64) -> Result<Vec<CheckResult>> {
    let weights = |ch: &ChannelModel, kappa: usize| ch.weights(kappa);
    Ok(vec![
        theorem1_check(200, seed, &weights)?,
        normalization_check(1000, seed)?,
        optimal_nu_check(100, seed)?,
        prop1_check(&prop1_table(&PROP1_INDICES)?),
    ])
}
