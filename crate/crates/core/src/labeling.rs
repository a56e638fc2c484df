//! Shift-invariant index assignment.
//!
//! The labeling function maps every central lattice point to a K-tuple of
//! sublattice points. Only the `N_pi` central points inside the Voronoi cell
//! of the product lattice around the origin are labeled; everything else
//! follows from `alpha(c + s) = alpha(c) + s` for product-lattice points `s`.
//!
//! Construction:
//!
//! 1. For every `l0` in `Lambda_0 ∩ V_pi(0)`, collect all points of the other
//!    sublattices within a sphere around `l0` and form every combination.
//!    Each such tuple is the canonical member of its coset mod `Lambda_pi`.
//! 2. The cost of giving central point `c` the coset of tuple `t` is the
//!    minimum over coset members of the expected index-assignment distortion
//!    for partial reception (`1 <= kappa < K`), written as a weighted-centroid
//!    term plus a weighted sum of pairwise squared distances (WSPSD).
//! 3. A rectangular linear assignment picks one distinct coset per central
//!    point.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lap::{self, CostMatrix};
use crate::lattice::{dn2, enumerate_in_cell, Lattice, LatticeKind, LatticePoint};
use crate::loss::{ChannelModel, Subset, SubsetWeights};
use crate::sublattice::{
    product_lattice, similar_sublattice, witness_for_index, SimilaritySpec, Sublattice,
};

/// Default cap on the number of labeled central points.
pub const DEFAULT_N_PI_CAP: u64 = 10_000;

/// Largest dense cost matrix the solver will allocate.
const MAX_MATRIX_ENTRIES: usize = 300_000_000;

/// Central lattice, the K side sublattices and their product lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSetup {
    central: Lattice,
    subs: Vec<Sublattice>,
    product: Sublattice,
}

impl LatticeSetup {
    pub fn new(central: Lattice, specs: &[SimilaritySpec]) -> Result<Self> {
        let subs = specs
            .iter()
            .map(|&s| similar_sublattice(&central, s))
            .collect::<Result<Vec<_>>>()?;
        let product = product_lattice(&central, &subs)?;
        Ok(LatticeSetup {
            central,
            subs,
            product,
        })
    }

    /// Builds the setup from index values using the first clean witness of each.
    pub fn from_indices(central: Lattice, indices: &[u64]) -> Result<Self> {
        let specs = indices
            .iter()
            .map(|&n| {
                witness_for_index(&central, n).ok_or_else(|| {
                    Error::NotClean(format!(
                        "index {n} is not admissible for {}",
                        central.kind()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        LatticeSetup::new(central, &specs)
    }

    pub fn central(&self) -> &Lattice {
        &self.central
    }

    pub fn subs(&self) -> &[Sublattice] {
        &self.subs
    }

    pub fn product(&self) -> &Sublattice {
        &self.product
    }

    pub fn k(&self) -> usize {
        self.subs.len()
    }

    pub fn indices(&self) -> Vec<u64> {
        self.subs.iter().map(|s| s.index()).collect()
    }

    pub fn n_pi(&self) -> u64 {
        self.product.index()
    }

    pub fn nu(&self) -> f64 {
        self.central.cell_volume()
    }

    /// The same sublattice structure over a central lattice with cell volume `nu`.
    pub fn with_nu(&self, nu: f64) -> Result<Self> {
        let central = Lattice::with_volume(self.central.kind(), nu)?;
        Ok(LatticeSetup {
            central,
            subs: self.subs.iter().map(|s| s.rescaled(&central)).collect(),
            product: self.product.rescaled(&central),
        })
    }
}

/// Volume `psi * nu * prod(N_i)^(1/(K-1))` of the tuple search region.
pub fn tuple_region_volume(nu: f64, indices: &[u64], psi: f64) -> Result<f64> {
    if indices.len() < 2 {
        return Err(Error::OutOfRange {
            what: "description count",
            detail: "tuple regions need K >= 2".into(),
        });
    }
    if psi < 1.0 || !(nu > 0.0) || indices.contains(&0) {
        return Err(Error::OutOfRange {
            what: "tuple region parameters",
            detail: format!("nu = {nu}, psi = {psi}, N = {indices:?}"),
        });
    }
    let e = 1.0 / (indices.len() - 1) as f64;
    Ok(psi * nu * indices.iter().map(|&n| (n as f64).powf(e)).product::<f64>())
}

/// Radius of the `dim`-dimensional ball with the given volume.
pub fn ball_radius(dim: usize, volume: f64) -> f64 {
    match dim {
        1 => volume / 2.0,
        _ => (volume / std::f64::consts::PI).sqrt(),
    }
}

/// Channel-dependent weights of the cost functional for `kappa = 1..K-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    dim: usize,
    weights: Vec<SubsetWeights>,
    mass: f64,
    centroid_w: Vec<f64>,
    pair_w: Vec<Vec<f64>>,
}

impl CostModel {
    pub fn new(dim: usize, channel: &ChannelModel) -> Result<Self> {
        let k = channel.k();
        let weights = (1..k)
            .map(|kappa| channel.weights(kappa))
            .collect::<Result<Vec<_>>>()?;
        Ok(CostModel::from_weights(dim, k, weights))
    }

    pub fn from_weights(dim: usize, k: usize, weights: Vec<SubsetWeights>) -> Self {
        let mut mass = 0.0;
        let mut centroid_w = vec![0.0; k];
        let mut pair_w = vec![vec![0.0; k]; k];
        for w in &weights {
            if w.p_l < 1e-300 {
                continue;
            }
            let kappa = w.kappa as f64;
            mass += w.p_l;
            for i in 0..k {
                centroid_w[i] += w.p_li[i] / kappa;
                for j in i + 1..k {
                    pair_w[i][j] += (w.p_li[i] * w.p_li[j] / w.p_l - w.p_lij[i][j]) / (kappa * kappa);
                }
            }
        }
        CostModel {
            dim,
            weights,
            mass,
            centroid_w,
            pair_w,
        }
    }

    pub fn weights(&self) -> &[SubsetWeights] {
        &self.weights
    }

    /// Total probability of partial reception.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Weighted sum of pairwise squared distances of a tuple.
    pub fn wspsd(&self, tuple: &[[f64; 2]]) -> f64 {
        let k = tuple.len();
        let mut s = 0.0;
        for i in 0..k {
            for j in i + 1..k {
                s += self.pair_w[i][j] * dn2(self.dim, tuple[i], tuple[j]);
            }
        }
        s
    }

    /// Probability-weighted centroid `sum_i w_i l_i / P` of a tuple.
    pub fn centroid(&self, tuple: &[[f64; 2]]) -> [f64; 2] {
        if self.mass < 1e-300 {
            return tuple[0];
        }
        let mut c = [0.0; 2];
        for (w, p) in self.centroid_w.iter().zip(tuple) {
            c[0] += w * p[0];
            c[1] += w * p[1];
        }
        [c[0] / self.mass, c[1] / self.mass]
    }

    /// Cost of labeling `central` with `tuple`: the centroid terms for
    /// `kappa = 1..K-1` plus the WSPSD.
    pub fn pair_cost(&self, central: [f64; 2], tuple: &[[f64; 2]]) -> f64 {
        let centroid: f64 = self
            .weights
            .iter()
            .map(|w| expanded_centroid_term(self.dim, central, tuple, w))
            .sum();
        centroid + self.wspsd(tuple)
    }
}

/// `p(L) * ||c - (1/(kappa p(L))) sum_i p(L_i) l_i||^2`.
fn expanded_centroid_term(dim: usize, central: [f64; 2], tuple: &[[f64; 2]], w: &SubsetWeights) -> f64 {
    if w.p_l < 1e-300 {
        return 0.0;
    }
    let scale = 1.0 / (w.kappa as f64 * w.p_l);
    let mut c = [0.0; 2];
    for (pi, p) in w.p_li.iter().zip(tuple) {
        c[0] += pi * p[0];
        c[1] += pi * p[1];
    }
    w.p_l * dn2(dim, central, [c[0] * scale, c[1] * scale])
}

/// Expanded (centroid + WSPSD) form of one `kappa` term of the expected
/// index-assignment distortion at a single central point.
pub fn expanded_term(dim: usize, central: [f64; 2], tuple: &[[f64; 2]], w: &SubsetWeights) -> f64 {
    let k = tuple.len();
    let mut pairs = 0.0;
    if w.p_l >= 1e-300 {
        for i in 0..k {
            for j in i + 1..k {
                pairs += (w.p_li[i] * w.p_li[j] / w.p_l - w.p_lij[i][j]) * dn2(dim, tuple[i], tuple[j]);
            }
        }
    }
    expanded_centroid_term(dim, central, tuple, w) + pairs / (w.kappa * w.kappa) as f64
}

/// Direct form: `sum over |l| = kappa of p(l) ||c - mean_l||^2`.
pub fn direct_term(dim: usize, central: [f64; 2], tuple: &[[f64; 2]], channel: &ChannelModel, kappa: usize) -> f64 {
    Subset::all(tuple.len())
        .filter(|l| l.len() == kappa)
        .map(|l| channel.mask_prob(l) * dn2(dim, central, subset_mean(tuple, l)))
        .sum()
}

pub(crate) fn subset_mean(tuple: &[[f64; 2]], l: Subset) -> [f64; 2] {
    let mut m = [0.0; 2];
    for i in l.indices() {
        m[0] += tuple[i][0];
        m[1] += tuple[i][1];
    }
    let n = l.len() as f64;
    [m[0] / n, m[1] / n]
}

/// A K-tuple of sublattice points with its cached channel-dependent terms.
#[derive(Debug, Clone, PartialEq)]
pub struct TupleCandidate {
    pub points: Vec<LatticePoint>,
    pub wspsd: f64,
    /// `sum_kappa p_kappa(L_i) / kappa` per description.
    pub centroid_weights: Vec<f64>,
    centroid: [f64; 2],
    spread: f64,
}

impl TupleCandidate {
    pub fn new(points: Vec<LatticePoint>, lattice: &Lattice, model: &CostModel) -> Self {
        let e: Vec<[f64; 2]> = points.iter().map(|&p| lattice.embed(p)).collect();
        let centroid = model.centroid(&e);
        TupleCandidate {
            wspsd: model.wspsd(&e),
            centroid_weights: model.centroid_w.clone(),
            centroid,
            // cost(x) = P ||x - centroid||^2 + spread
            spread: model.pair_cost(centroid, &e),
            points,
        }
    }

    pub fn translated(&self, s: LatticePoint) -> Vec<LatticePoint> {
        self.points.iter().map(|&p| p + s).collect()
    }
}

/// Every tuple `(l0, l1, ..., l_{K-1})` with `l_i` in sublattice `i` within
/// `radius` of `l0`, sorted lexicographically.
pub fn build_candidates(setup: &LatticeSetup, lambda0: LatticePoint, radius: f64) -> Vec<Vec<LatticePoint>> {
    let r_unit = radius / setup.central.scale();
    let mut tuples: Vec<Vec<LatticePoint>> = vec![vec![lambda0]];
    for sub in &setup.subs[1..] {
        let near = sub.points_within(lambda0, r_unit);
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                near.iter().map(move |&q| {
                    let mut t = t.clone();
                    t.push(q);
                    t
                })
            })
            .collect();
    }
    tuples
}

/// Coset-minimized cost of labeling `central` with the coset of `t`, and the
/// product-lattice shift attaining it.
fn coset_cost(central: LatticePoint, t: &TupleCandidate, unit: &Lattice, product: &Sublattice, mass: f64) -> (f64, LatticePoint) {
    let x = unit.embed(central);
    if mass < 1e-300 {
        return (t.spread, LatticePoint::ORIGIN);
    }
    let defect = [x[0] - t.centroid[0], x[1] - t.centroid[1]];
    let s = product.nearest_to_vector(defect);
    let se = unit.embed(s);
    let c = [t.centroid[0] + se[0], t.centroid[1] + se[1]];
    (mass * dn2(unit.dim(), x, c) + t.spread, s)
}

/// The coset-minimized cost exposed for inspection and tests.
pub fn coset_pair_cost(setup: &LatticeSetup, model: &CostModel, central: LatticePoint, tuple: &[LatticePoint]) -> (f64, LatticePoint) {
    let t = TupleCandidate::new(tuple.to_vec(), &setup.central, model);
    coset_cost(central, &t, &setup.central, &setup.product, model.mass())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignOptions {
    pub psi: f64,
    /// Initial search volume as a multiple of the tuple region volume.
    pub volume_factor: f64,
    /// Number of volume doublings allowed when candidates run short.
    pub retries: usize,
    pub n_pi_cap: u64,
    pub exec: Execution,
}

impl AssignOptions {
    pub fn new(psi: f64) -> Self {
        AssignOptions {
            psi,
            volume_factor: 2.0,
            retries: 2,
            n_pi_cap: DEFAULT_N_PI_CAP,
            exec: Execution::default(),
        }
    }
}

/// The finished labeling table with lookup structures for `alpha` and its inverse.
#[derive(Debug, Clone)]
pub struct IndexAssignment {
    setup: LatticeSetup,
    channel: ChannelModel,
    psi: f64,
    central_points: Vec<LatticePoint>,
    tuples: Vec<LatticePoint>,
    forward: HashMap<LatticePoint, usize>,
    inverse: HashMap<Vec<LatticePoint>, usize>,
    canon_shift: Vec<LatticePoint>,
    total_cost: f64,
}

/// Solves the labeling problem for the given lattices and channel.
pub fn assign(setup: &LatticeSetup, channel: &ChannelModel, opts: &AssignOptions) -> Result<IndexAssignment> {
    let k = setup.k();
    if channel.k() != k {
        return Err(Error::Mismatch(format!(
            "channel has {} descriptions, lattice setup has {k}",
            channel.k()
        )));
    }
    let n_pi = setup.n_pi();
    if n_pi > opts.n_pi_cap {
        return Err(Error::CapExceeded {
            n_pi,
            cap: opts.n_pi_cap,
        });
    }
    // solve at unit scale; the table does not depend on nu
    let kind = setup.central.kind();
    let unit = Lattice::unit(kind);
    let unit_setup = setup.with_nu(kind.unit_volume())?;
    let whole = Sublattice::whole(&unit);
    let rows = enumerate_in_cell(&whole, &unit_setup.product)?;

    let indices = setup.indices();
    if indices.iter().all(|&n| n == 1) {
        let tuples = rows.iter().flat_map(|&c| std::iter::repeat_n(c, k)).collect();
        return IndexAssignment::from_table(setup.clone(), channel.clone(), opts.psi, rows, tuples);
    }
    if k < 2 {
        return Err(Error::OutOfRange {
            what: "description count",
            detail: "a single description requires N_0 = 1".into(),
        });
    }

    let model = CostModel::new(unit.dim(), channel)?;
    let lambda0s = enumerate_in_cell(&unit_setup.subs[0], &unit_setup.product)?;
    let base_volume = tuple_region_volume(unit.cell_volume(), &indices, opts.psi)?;
    let needed = indices[0] as usize;

    let mut volume = base_volume * opts.volume_factor;
    let mut attempt = 0;
    let candidates = loop {
        let radius = ball_radius(unit.dim(), volume);
        let per_l0: Vec<Vec<Vec<LatticePoint>>> = opts
            .exec
            .map(lambda0s.len(), |i| build_candidates(&unit_setup, lambda0s[i], radius));
        let shortest = per_l0.iter().map(Vec::len).min().unwrap_or(0);
        let total: usize = per_l0.iter().map(Vec::len).sum();
        if shortest >= needed && total >= rows.len() {
            let mut all: Vec<Vec<LatticePoint>> = per_l0.into_iter().flatten().collect();
            all.sort();
            break all;
        }
        if attempt == opts.retries {
            return Err(Error::InsufficientCandidates {
                found: shortest,
                needed,
            });
        }
        attempt += 1;
        volume *= 2.0;
    };

    let cols = candidates.len();
    if rows.len().saturating_mul(cols) > MAX_MATRIX_ENTRIES {
        return Err(Error::OutOfRange {
            what: "cost matrix size",
            detail: format!("{} x {cols}", rows.len()),
        });
    }
    let cands: Vec<TupleCandidate> = opts
        .exec
        .map(cols, |j| TupleCandidate::new(candidates[j].clone(), &unit, &model));

    let mass = model.mass();
    let product = unit_setup.product;
    let mut data = vec![0.0; rows.len() * cols];
    opts.exec.fill_rows(&mut data, cols, |r, out| {
        for (j, t) in cands.iter().enumerate() {
            out[j] = coset_cost(rows[r], t, &unit, &product, mass).0;
        }
    });
    let costs = CostMatrix::new(rows.len(), cols, data);
    let solution = lap::solve(&costs)?;
    drop(costs);

    let mut tuples = Vec::with_capacity(rows.len() * k);
    for (r, &j) in solution.row_to_col.iter().enumerate() {
        let (_, s) = coset_cost(rows[r], &cands[j], &unit, &product, mass);
        tuples.extend(cands[j].translated(s));
    }
    IndexAssignment::from_table(setup.clone(), channel.clone(), opts.psi, rows, tuples)
}

impl IndexAssignment {
    fn from_table(
        setup: LatticeSetup,
        channel: ChannelModel,
        psi: f64,
        central_points: Vec<LatticePoint>,
        tuples: Vec<LatticePoint>,
    ) -> Result<Self> {
        let k = setup.k();
        let n = central_points.len();
        if tuples.len() != n * k || n as u64 != setup.n_pi() {
            return Err(Error::Mismatch(format!(
                "table has {n} rows, expected {}",
                setup.n_pi()
            )));
        }
        let mut forward = HashMap::with_capacity(n);
        let mut inverse = HashMap::with_capacity(n);
        let mut canon_shift = Vec::with_capacity(n);
        for (r, &c) in central_points.iter().enumerate() {
            if setup.product.nearest_to_point(c) != LatticePoint::ORIGIN {
                return Err(Error::Mismatch(format!("central point {c:?} is outside the product cell")));
            }
            let t = &tuples[r * k..(r + 1) * k];
            for (i, (&p, sub)) in t.iter().zip(&setup.subs).enumerate() {
                if !sub.contains(p) {
                    return Err(Error::Mismatch(format!("row {r}: point {i} is not in sublattice {i}")));
                }
            }
            let d = setup.product.nearest_to_point(t[0]);
            let canon: Vec<LatticePoint> = t.iter().map(|&p| p - d).collect();
            if inverse.insert(canon, r).is_some() {
                return Err(Error::Mismatch(format!("row {r}: coset used twice")));
            }
            if forward.insert(c, r).is_some() {
                return Err(Error::Mismatch(format!("central point {c:?} listed twice")));
            }
            canon_shift.push(d);
        }
        let mut asg = IndexAssignment {
            setup,
            channel,
            psi,
            central_points,
            tuples,
            forward,
            inverse,
            canon_shift,
            total_cost: 0.0,
        };
        asg.total_cost = asg.evaluate_cost()?;
        Ok(asg)
    }

    fn evaluate_cost(&self) -> Result<f64> {
        let k = self.setup.k();
        if k < 2 {
            return Ok(0.0);
        }
        let model = CostModel::new(self.setup.central.dim(), &self.channel)?;
        Ok((0..self.n_pi())
            .map(|r| {
                let x = self.setup.central.embed(self.central_points[r]);
                let t: Vec<[f64; 2]> = self.row(r).iter().map(|&p| self.setup.central.embed(p)).collect();
                model.pair_cost(x, &t)
            })
            .sum())
    }

    pub fn setup(&self) -> &LatticeSetup {
        &self.setup
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn k(&self) -> usize {
        self.setup.k()
    }

    pub fn n_pi(&self) -> usize {
        self.central_points.len()
    }

    pub fn nu(&self) -> f64 {
        self.setup.nu()
    }

    /// Sum over labeled central points of the expected partial-reception
    /// distortion, in the units of the central lattice's current scale.
    pub fn total_cost(&self) -> f64 {
        self.total_cost
    }

    pub fn central_points(&self) -> &[LatticePoint] {
        &self.central_points
    }

    /// The tuple assigned to labeled central point number `r`.
    pub fn row(&self, r: usize) -> &[LatticePoint] {
        let k = self.k();
        &self.tuples[r * k..(r + 1) * k]
    }

    /// The same table over a central lattice with cell volume `nu`.
    pub fn with_nu(&self, nu: f64) -> Result<Self> {
        let mut out = self.clone();
        out.setup = self.setup.with_nu(nu)?;
        out.total_cost = out.evaluate_cost()?;
        Ok(out)
    }

    /// The same table evaluated under a different channel.
    pub fn with_channel(&self, channel: ChannelModel) -> Result<Self> {
        if channel.k() != self.k() {
            return Err(Error::Mismatch("channel description count".into()));
        }
        let mut out = self.clone();
        out.channel = channel;
        out.total_cost = out.evaluate_cost()?;
        Ok(out)
    }

    /// `alpha(c)`, written into `out` (length K).
    pub fn alpha_into(&self, c: LatticePoint, out: &mut [LatticePoint]) {
        let s = self.setup.product.nearest_to_point(c);
        let r = self.forward[&(c - s)];
        for (o, &p) in out.iter_mut().zip(self.row(r)) {
            *o = p + s;
        }
    }

    pub fn alpha(&self, c: LatticePoint) -> Vec<LatticePoint> {
        let mut out = vec![LatticePoint::ORIGIN; self.k()];
        self.alpha_into(c, &mut out);
        out
    }

    /// Recovers the central point from a full tuple.
    pub fn alpha_inverse(&self, tuple: &[LatticePoint]) -> Result<LatticePoint> {
        if tuple.len() != self.k() {
            return Err(Error::NotInImage);
        }
        let s0 = self.setup.product.nearest_to_point(tuple[0]);
        let canon: Vec<LatticePoint> = tuple.iter().map(|&p| p - s0).collect();
        let r = *self.inverse.get(&canon).ok_or(Error::NotInImage)?;
        Ok(self.central_points[r] + s0 - self.canon_shift[r])
    }

    /// Mean over the labeled cell of `||c - mean_{j in l} alpha_j(c)||^2`.
    pub fn side_distortion(&self, l: Subset) -> Result<f64> {
        if l.is_empty() {
            return Err(Error::EmptySubset);
        }
        if l.len() >= self.k() {
            if (l.0 as u64) >> self.k() != 0 {
                return Err(Error::OutOfRange {
                    what: "description subset",
                    detail: l.to_string(),
                });
            }
            return Ok(0.0);
        }
        let lat = &self.setup.central;
        let sum: f64 = (0..self.n_pi())
            .map(|r| {
                let x = lat.embed(self.central_points[r]);
                let t: Vec<[f64; 2]> = self.row(r).iter().map(|&p| lat.embed(p)).collect();
                dn2(lat.dim(), x, subset_mean(&t, l))
            })
            .sum();
        Ok(sum / self.n_pi() as f64)
    }

    /// Writes the table in the text format
    /// `mdlvq-assignment v1; lattice=..; K=..; N=..; nu=..; psi=..`.
    pub fn write_table<W: Write>(&self, mut w: W) -> Result<()> {
        let dim = self.setup.central.dim();
        let n: Vec<String> = self.setup.indices().iter().map(u64::to_string).collect();
        writeln!(
            w,
            "mdlvq-assignment v1; lattice={}; K={}; N={}; nu={}; psi={}",
            self.setup.central.kind(),
            self.k(),
            n.join(","),
            self.nu(),
            self.psi
        )?;
        for r in 0..self.n_pi() {
            let mut fields: Vec<String> = self.central_points[r].coords[..dim].iter().map(i64::to_string).collect();
            for (p, sub) in self.row(r).iter().zip(&self.setup.subs) {
                let own = sub.own_coords(*p).expect("table points lie in their sublattices");
                fields.extend(own[..dim].iter().map(i64::to_string));
            }
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    /// Reads a table written by [`IndexAssignment::write_table`]. The channel
    /// is not part of the file and must be supplied.
    pub fn read_table<R: BufRead>(r: R, channel: &ChannelModel) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty assignment file".into(),
        })?;
        let header = header?;
        let hdr = TableHeader::parse(&header)?;
        let central = Lattice::with_volume(hdr.kind, hdr.nu)?;
        let setup = LatticeSetup::from_indices(central, &hdr.indices)?;
        if hdr.indices.len() != channel.k() {
            return Err(Error::Mismatch(format!(
                "assignment has K = {}, channel has {}",
                hdr.indices.len(),
                channel.k()
            )));
        }
        let dim = hdr.kind.dim();
        let k = hdr.indices.len();
        let mut central_points = Vec::new();
        let mut tuples = Vec::new();
        for (no, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals = line
                .split(',')
                .map(|f| f.trim().parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line: no + 1,
                    msg: e.to_string(),
                })?;
            if vals.len() != dim * (k + 1) {
                return Err(Error::Parse {
                    line: no + 1,
                    msg: format!("expected {} fields, found {}", dim * (k + 1), vals.len()),
                });
            }
            central_points.push(LatticePoint::from_slice(&vals[..dim]));
            for (i, sub) in setup.subs.iter().enumerate() {
                let own = LatticePoint::from_slice(&vals[dim * (i + 1)..dim * (i + 2)]);
                tuples.push(sub.from_own_coords(own.coords));
            }
        }
        IndexAssignment::from_table(setup, channel.clone(), hdr.psi, central_points, tuples)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct TableHeader {
    kind: LatticeKind,
    indices: Vec<u64>,
    nu: f64,
    psi: f64,
}

impl TableHeader {
    fn parse(line: &str) -> Result<Self> {
        let err = |msg: String| Error::Parse { line: 1, msg };
        let mut parts = line.split(';').map(str::trim);
        if parts.next() != Some("mdlvq-assignment v1") {
            return Err(err("missing 'mdlvq-assignment v1' tag".into()));
        }
        let (mut kind, mut k, mut indices, mut nu, mut psi) = (None, None, None, None, None);
        for part in parts {
            let (key, val) = part
                .split_once('=')
                .ok_or_else(|| err(format!("malformed field '{part}'")))?;
            let bad = |_| err(format!("bad value for {key}: '{val}'"));
            match key.trim() {
                "lattice" => kind = Some(LatticeKind::parse(val).ok_or_else(|| err(format!("unknown lattice '{val}'")))?),
                "K" => k = Some(val.parse::<usize>().map_err(|_| err(format!("bad K '{val}'")))?),
                "N" => {
                    indices = Some(
                        val.split(',')
                            .map(|s| s.trim().parse::<u64>())
                            .collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|_| err(format!("bad N '{val}'")))?,
                    )
                }
                "nu" => nu = Some(val.parse::<f64>().map_err(bad)?),
                "psi" => psi = Some(val.parse::<f64>().map_err(bad)?),
                other => return Err(err(format!("unknown header field '{other}'"))),
            }
        }
        let indices: Vec<u64> = indices.ok_or_else(|| err("missing N".into()))?;
        if k != Some(indices.len()) {
            return Err(err("K does not match the length of N".into()));
        }
        Ok(TableHeader {
            kind: kind.ok_or_else(|| err("missing lattice".into()))?,
            indices,
            nu: nu.ok_or_else(|| err("missing nu".into()))?,
            psi: psi.ok_or_else(|| err("missing psi".into()))?,
        })
    }
}
