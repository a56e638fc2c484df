//! Monte Carlo evaluation of a multiple-description quantizer.
//!
//! Source vectors are quantized to the central lattice, labeled, sent over
//! independent erasure channels and decoded from whatever arrives. The work
//! is split into fixed-size chunks; chunk `c` draws its source samples from
//! ChaCha8 stream `2c` and its erasure pattern from stream `2c + 1`, both
//! keyed by the run seed, so results do not depend on scheduling.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hr::{predict_distortion, DesignConstants, DistortionPrediction, SourceKind, SourceModel};
use crate::labeling::IndexAssignment;
use crate::lattice::{dn2, sphere_second_moment, LatticePoint};
use crate::loss::{ChannelModel, Subset};

/// Vectors per chunk.
pub const CHUNK_LEN: usize = 8192;

/// Recorded in report metadata.
pub const GAUSSIAN_METHOD: &str = "marsaglia-polar";
pub const RNG_SCHEME: &str = "chacha8; chunk c: source stream 2c, erasure stream 2c+1";

fn chunk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard normal deviates by the polar method, caching the second value.
#[derive(Debug, Default)]
struct Polar {
    spare: Option<f64>,
}

impl Polar {
    fn sample<R: Rng>(&mut self, rng: &mut R) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * rng.gen::<f64>() - 1.0;
            let v = 2.0 * rng.gen::<f64>() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }
}

fn gaussian_sigma(src: &SourceModel) -> Result<f64> {
    match src.kind {
        SourceKind::Gaussian { variance } => Ok(variance.sqrt()),
        SourceKind::Custom => Err(Error::OutOfRange {
            what: "source kind",
            detail: "only Gaussian sources can be generated".into(),
        }),
    }
}

fn chunk_count(n: usize) -> usize {
    n.div_ceil(CHUNK_LEN)
}

fn chunk_len(n: usize, c: usize) -> usize {
    CHUNK_LEN.min(n - c * CHUNK_LEN)
}

fn source_chunk(sigma: f64, dim: usize, seed: u64, c: usize, len: usize) -> Vec<[f64; 2]> {
    let mut rng = chunk_rng(seed, 2 * c as u64);
    let mut g = Polar::default();
    (0..len)
        .map(|_| {
            let mut x = [0.0; 2];
            for v in x.iter_mut().take(dim) {
                *v = sigma * g.sample(&mut rng);
            }
            x
        })
        .collect()
}

/// The first `n` source vectors for `seed`, each of length `src.dim`.
pub fn generate(src: &SourceModel, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let sigma = gaussian_sigma(src)?;
    let mut out = Vec::with_capacity(n);
    for c in 0..chunk_count(n) {
        out.extend(
            source_chunk(sigma, src.dim, seed, c, chunk_len(n, c))
                .into_iter()
                .map(|x| x[..src.dim].to_vec()),
        );
    }
    Ok(out)
}

/// Central point and its K descriptions.
pub fn encode(asg: &IndexAssignment, x: &[f64]) -> Result<(LatticePoint, Vec<LatticePoint>)> {
    let c = asg.setup().central().nearest_point(x)?;
    Ok((c, asg.alpha(c)))
}

/// Draws which descriptions arrive.
pub fn erase<R: Rng>(channel: &ChannelModel, rng: &mut R) -> Subset {
    let mut mask = 0u32;
    for (i, &p) in channel.loss().iter().enumerate() {
        if rng.gen::<f64>() >= p {
            mask |= 1 << i;
        }
    }
    Subset(mask)
}

/// Reconstruction from the received descriptions. All `K` received gives the
/// exact central point, none gives the source mean (zero), otherwise the
/// mean of what arrived.
pub fn decode(asg: &IndexAssignment, received: Subset, tuple: &[LatticePoint]) -> Result<Vec<f64>> {
    let lat = asg.setup().central();
    let dim = lat.dim();
    let k = asg.k();
    if tuple.len() != k {
        return Err(Error::Mismatch(format!("{} descriptions, expected {k}", tuple.len())));
    }
    if received.len() == k {
        return Ok(lat.embed(asg.alpha_inverse(tuple)?)[..dim].to_vec());
    }
    Ok(decode_partial(asg, received, tuple)[..dim].to_vec())
}

fn decode_partial(asg: &IndexAssignment, received: Subset, tuple: &[LatticePoint]) -> [f64; 2] {
    let lat = asg.setup().central();
    let n = received.len();
    let mut acc = [0.0; 2];
    if n == 0 {
        return acc;
    }
    for j in received.indices() {
        let p = lat.embed(tuple[j]);
        acc[0] += p[0];
        acc[1] += p[1];
    }
    [acc[0] / n as f64, acc[1] / n as f64]
}

/// High-resolution prediction of the mean distortion given that exactly
/// subset `l` arrived: the central term plus the labeling's exact side
/// distortion, or the source power when nothing arrived.
pub fn predicted_conditional(asg: &IndexAssignment, src: &SourceModel, l: Subset) -> Result<f64> {
    if l.is_empty() {
        return Ok(src.mean_power);
    }
    let lat = asg.setup().central();
    let d_c = lat.second_moment() * lat.cell_volume().powf(2.0 / lat.dim() as f64);
    Ok(d_c + asg.side_distortion(l)?)
}

/// Simulation parameters.
#[derive(Debug, Clone)]
pub struct SimConfig<'a> {
    pub vector_count: usize,
    pub seed: u64,
    pub source: SourceModel,
    pub channel: ChannelModel,
    pub assignment: &'a IndexAssignment,
    pub collect_per_subset: bool,
    pub exec: Execution,
}

/// Statistics for vectors that received exactly one subset of descriptions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsetStats {
    pub subset: Subset,
    pub hits: u64,
    /// Mean distortion over those vectors.
    pub conditional: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub vector_count: usize,
    pub seed: u64,
    pub empirical_total: f64,
    pub standard_error: f64,
    /// Every subset that occurred at least once, ordered by bitmask.
    pub per_subset: Vec<SubsetStats>,
    /// Mean distortion when all descriptions arrived.
    pub empirical_central: Option<f64>,
    /// Plug-in entropy of each description's symbols, bits per dimension.
    pub empirical_side_entropy: Vec<f64>,
    pub predicted: DistortionPrediction,
}

#[derive(Default)]
struct Moments {
    hits: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, d: f64) {
        self.hits += 1;
        self.sum += d;
        self.sum_sq += d * d;
    }

    fn merge(&mut self, o: &Moments) {
        self.hits += o.hits;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    fn mean(&self) -> f64 {
        self.sum / self.hits as f64
    }

    fn std_error(&self) -> f64 {
        if self.hits < 2 {
            return 0.0;
        }
        let n = self.hits as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

struct ChunkAcc {
    subsets: Vec<(u32, Moments)>,
    symbols: Vec<HashMap<LatticePoint, u64>>,
}

fn run_chunk(cfg: &SimConfig, sigma: f64, c: usize) -> Result<ChunkAcc> {
    let asg = cfg.assignment;
    let lat = asg.setup().central();
    let dim = lat.dim();
    let k = asg.k();
    let full = Subset::full(k);
    let len = chunk_len(cfg.vector_count, c);
    let xs = source_chunk(sigma, dim, cfg.seed, c, len);
    let mut erasures = chunk_rng(cfg.seed, 2 * c as u64 + 1);

    let mut by_mask: HashMap<u32, Moments> = HashMap::new();
    let mut symbols = vec![HashMap::new(); k];
    let mut tuple = vec![LatticePoint::ORIGIN; k];
    for x in &xs {
        let central = lat.nearest(*x);
        asg.alpha_into(central, &mut tuple);
        for (counts, &p) in symbols.iter_mut().zip(&tuple) {
            *counts.entry(p).or_insert(0u64) += 1;
        }
        let received = erase(&cfg.channel, &mut erasures);
        let y = if received == full {
            lat.embed(asg.alpha_inverse(&tuple)?)
        } else {
            decode_partial(asg, received, &tuple)
        };
        by_mask.entry(received.0).or_default().push(dn2(dim, *x, y));
    }
    let mut subsets: Vec<(u32, Moments)> = by_mask.into_iter().collect();
    subsets.sort_by_key(|(m, _)| *m);
    Ok(ChunkAcc { subsets, symbols })
}

fn plug_in_entropy(counts: &HashMap<LatticePoint, u64>, n: u64, dim: usize) -> f64 {
    let mut c: Vec<u64> = counts.values().copied().collect();
    c.sort_unstable();
    let n = n as f64;
    let h: f64 = c
        .iter()
        .map(|&k| {
            let p = k as f64 / n;
            -p * p.log2()
        })
        .sum();
    h / dim as f64
}

/// Runs the simulation and compares with the high-resolution prediction.
pub fn run(cfg: &SimConfig) -> Result<SimReport> {
    let asg = cfg.assignment;
    if cfg.vector_count == 0 {
        return Err(Error::OutOfRange {
            what: "vector count",
            detail: "must be at least 1".into(),
        });
    }
    if cfg.source.dim != asg.setup().central().dim() {
        return Err(Error::DimensionMismatch {
            expected: asg.setup().central().dim(),
            got: cfg.source.dim,
        });
    }
    if cfg.channel.k() != asg.k() {
        return Err(Error::Mismatch(format!(
            "channel has {} descriptions, assignment has {}",
            cfg.channel.k(),
            asg.k()
        )));
    }
    let sigma = gaussian_sigma(&cfg.source)?;
    let dim = cfg.source.dim;
    let k = asg.k();

    let chunks = cfg
        .exec
        .map(chunk_count(cfg.vector_count), |c| run_chunk(cfg, sigma, c));

    let mut by_mask: std::collections::BTreeMap<u32, Moments> = Default::default();
    let mut symbols: Vec<HashMap<LatticePoint, u64>> = vec![HashMap::new(); k];
    for chunk in chunks {
        let chunk = chunk?;
        for (m, mom) in &chunk.subsets {
            by_mask.entry(*m).or_default().merge(mom);
        }
        for (into, from) in symbols.iter_mut().zip(&chunk.symbols) {
            for (p, n) in from {
                *into.entry(*p).or_insert(0) += n;
            }
        }
    }

    let mut total = Moments::default();
    for mom in by_mask.values() {
        total.merge(mom);
    }
    let n = total.hits;
    let full = Subset::full(k);
    let per_subset: Vec<SubsetStats> = by_mask
        .iter()
        .map(|(&m, mom)| SubsetStats {
            subset: Subset(m),
            hits: mom.hits,
            conditional: mom.mean(),
            std_error: mom.std_error(),
        })
        .collect();
    let empirical_central = by_mask.get(&full.0).map(Moments::mean);

    let consts = DesignConstants {
        psi: asg.psi(),
        g_c: asg.setup().central().second_moment(),
        g_s: sphere_second_moment(dim)?,
    };
    let indices: Vec<f64> = asg.setup().indices().iter().map(|&x| x as f64).collect();
    let predicted = predict_distortion(asg.nu(), &indices, &cfg.source, &cfg.channel, &consts)?;

    Ok(SimReport {
        vector_count: cfg.vector_count,
        seed: cfg.seed,
        empirical_total: total.mean(),
        standard_error: total.std_error(),
        per_subset: if cfg.collect_per_subset { per_subset } else { Vec::new() },
        empirical_central,
        empirical_side_entropy: symbols.iter().map(|s| plug_in_entropy(s, n, dim)).collect(),
        predicted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::{assign, AssignOptions, LatticeSetup};
    use crate::lattice::{Lattice, LatticeKind};

    fn z2_assignment(n: u64, nu: f64, p: &[f64]) -> IndexAssignment {
        let setup = LatticeSetup::from_indices(Lattice::with_volume(LatticeKind::Z2, nu).unwrap(), &[n, n]).unwrap();
        assign(&setup, &ChannelModel::new(p.to_vec()).unwrap(), &AssignOptions::new(1.0)).unwrap()
    }

    #[test]
    fn generation_is_reproducible() {
        let src = SourceModel::gaussian(2, 1.0).unwrap();
        let a = generate(&src, 10_000, 7).unwrap();
        assert_eq!(a, generate(&src, 10_000, 7).unwrap());
        assert_ne!(a, generate(&src, 10_000, 8).unwrap());
        // prefixes agree across lengths
        assert_eq!(a[..100], generate(&src, 100, 7).unwrap()[..]);
    }

    #[test]
    fn gaussian_moments() {
        let src = SourceModel::gaussian(2, 1.0).unwrap();
        let n = 100_000;
        let xs = generate(&src, n, 3).unwrap();
        let m = xs.iter().flatten().sum::<f64>() / (2 * n) as f64;
        assert!(m.abs() < 4.0 / ((2 * n) as f64).sqrt());
        let pw = xs.iter().flatten().map(|v| v * v).sum::<f64>() / (2 * n) as f64;
        // variance of x^2 is 2
        assert!((pw - 1.0).abs() < 4.0 * (2.0 / (2 * n) as f64).sqrt());
    }

    #[test]
    fn custom_source_cannot_be_generated() {
        let src = SourceModel::custom(2, 1.0, 1.0).unwrap();
        assert!(generate(&src, 10, 1).is_err());
    }

    #[test]
    fn erasure_extremes_and_frequencies() {
        let mut rng = chunk_rng(1, 1);
        let none = ChannelModel::new(vec![0.0; 3]).unwrap();
        let all = ChannelModel::new(vec![1.0; 3]).unwrap();
        for _ in 0..1000 {
            assert_eq!(erase(&none, &mut rng), Subset::full(3));
            assert_eq!(erase(&all, &mut rng), Subset::EMPTY);
        }
        let ch = ChannelModel::new(vec![0.1, 0.3]).unwrap();
        let n = 100_000;
        let mut counts = [0u64; 4];
        for _ in 0..n {
            counts[erase(&ch, &mut rng).0 as usize] += 1;
        }
        for (m, &c) in counts.iter().enumerate() {
            let p = ch.subset_prob(Subset(m as u32)).unwrap();
            let f = c as f64 / n as f64;
            assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "{m}: {f} vs {p}");
        }
    }

    #[test]
    fn decoding_rules() {
        let asg = z2_assignment(5, 1.0, &[0.1, 0.1]);
        let t = [LatticePoint::new([0, 5]), LatticePoint::new([3, -1])];
        // partial decoding does not need t to be in the image
        let mean = decode_partial(&asg, Subset::EMPTY, &t);
        assert_eq!(mean, [0.0, 0.0]);
        let y = decode_partial(&asg, Subset::from_indices(&[0, 1]), &t);
        assert_eq!(y, [1.5, 2.0]);

        let c = LatticePoint::new([4, -7]);
        let (enc, desc) = encode(&asg, &[4.2, -6.9]).unwrap();
        assert_eq!(enc, c);
        assert_eq!(decode(&asg, Subset::full(2), &desc).unwrap(), vec![4.0, -7.0]);
        assert_eq!(decode(&asg, Subset::EMPTY, &desc).unwrap(), vec![0.0, 0.0]);
        assert!(decode(&asg, Subset::full(2), &t).is_err());
    }

    #[test]
    fn encoding_is_shift_consistent() {
        let asg = z2_assignment(5, 1.0, &[0.1, 0.1]);
        let s = asg.setup().product().from_own_coords([2, -1]);
        let shift = asg.setup().central().embed(s);
        let (_, a) = encode(&asg, &[0.3, 1.1]).unwrap();
        let (_, b) = encode(&asg, &[0.3 + shift[0], 1.1 + shift[1]]).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(*x + s, *y);
        }
    }

    #[test]
    fn report_is_consistent_and_deterministic() {
        let nu = 0.01;
        let asg = z2_assignment(5, nu, &[0.2, 0.3]);
        let cfg = SimConfig {
            vector_count: 20_000,
            seed: 11,
            source: SourceModel::gaussian(2, 1.0).unwrap(),
            channel: asg.channel().clone(),
            assignment: &asg,
            collect_per_subset: true,
            exec: Execution::default(),
        };
        let r = run(&cfg).unwrap();
        let hits: u64 = r.per_subset.iter().map(|s| s.hits).sum();
        assert_eq!(hits, 20_000);
        let weighted: f64 = r.per_subset.iter().map(|s| s.hits as f64 * s.conditional).sum::<f64>() / hits as f64;
        assert!((weighted - r.empirical_total).abs() < 1e-12 * r.empirical_total);
        assert_eq!(r, run(&cfg).unwrap());
        let seq = run(&SimConfig { exec: Execution::Sequential, ..cfg.clone() }).unwrap();
        assert_eq!(r, seq);
        assert_eq!(r.empirical_side_entropy.len(), 2);
        assert!(run(&SimConfig { vector_count: 0, ..cfg }).is_err());
    }
}
