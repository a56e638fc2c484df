//! Lattice geometry for the central quantizer: `Z^1`, `Z^2` and the hexagonal
//! lattice `A2`.
//!
//! Points are stored as integer coefficients in the lattice basis. Every
//! geometric predicate that decides membership or ties (Voronoi boundaries,
//! cleanness) is evaluated on the integer quadratic form of the unit-scale
//! lattice, so the answers never depend on floating-point rounding:
//!
//! * `Z^1`: `a^2`
//! * `Z^2`: `a^2 + b^2`
//! * `A2` with basis rows `(1, 0)` and `(1/2, sqrt(3)/2)`: `a^2 + ab + b^2`
//!
//! The same coordinates double as elements of the rings `Z`, `Z[i]` and
//! `Z[eta]` (`eta = exp(i*pi/3)`), which is how similar sublattices are built
//! in [`crate::sublattice`].

use std::fmt;
use std::ops::{Add, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sublattice::Sublattice;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// The lattice families supported by the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatticeKind {
    Z1,
    Z2,
    A2,
}

impl LatticeKind {
    pub fn dim(self) -> usize {
        match self {
            LatticeKind::Z1 => 1,
            LatticeKind::Z2 | LatticeKind::A2 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::Z1 => "Z1",
            LatticeKind::Z2 => "Z2",
            LatticeKind::A2 => "A2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "Z1" | "Z" => Some(LatticeKind::Z1),
            "Z2" => Some(LatticeKind::Z2),
            "A2" | "HEX" => Some(LatticeKind::A2),
            _ => None,
        }
    }

    /// Normalized second moment `G` of the Voronoi cell.
    pub fn second_moment(self) -> f64 {
        match self {
            LatticeKind::Z1 | LatticeKind::Z2 => 1.0 / 12.0,
            LatticeKind::A2 => 5.0 / (36.0 * SQRT3),
        }
    }

    /// Basis rows of the unit-scale lattice.
    pub fn unit_basis(self) -> [[f64; 2]; 2] {
        match self {
            LatticeKind::Z1 => [[1.0, 0.0], [0.0, 0.0]],
            LatticeKind::Z2 => [[1.0, 0.0], [0.0, 1.0]],
            LatticeKind::A2 => [[1.0, 0.0], [0.5, SQRT3 / 2.0]],
        }
    }

    /// Cell volume of the unit-scale lattice.
    pub fn unit_volume(self) -> f64 {
        match self {
            LatticeKind::Z1 | LatticeKind::Z2 => 1.0,
            LatticeKind::A2 => SQRT3 / 2.0,
        }
    }

    /// Covering radius of the unit-scale lattice.
    pub(crate) fn unit_covering_radius(self) -> f64 {
        match self {
            LatticeKind::Z1 => 0.5,
            LatticeKind::Z2 => std::f64::consts::FRAC_1_SQRT_2,
            LatticeKind::A2 => 1.0 / SQRT3,
        }
    }

    /// Squared Euclidean length of a unit-scale lattice vector, exactly.
    pub(crate) fn qform(self, c: [i64; 2]) -> i64 {
        match self {
            LatticeKind::Z1 => c[0] * c[0],
            LatticeKind::Z2 => c[0] * c[0] + c[1] * c[1],
            LatticeKind::A2 => c[0] * c[0] + c[0] * c[1] + c[1] * c[1],
        }
    }

    /// Ring product of two lattice elements.
    pub(crate) fn mul(self, a: [i64; 2], b: [i64; 2]) -> [i64; 2] {
        match self {
            LatticeKind::Z1 => [a[0] * b[0], 0],
            LatticeKind::Z2 => [a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]],
            // eta^2 = eta - 1
            LatticeKind::A2 => [
                a[0] * b[0] - a[1] * b[1],
                a[0] * b[1] + a[1] * b[0] + a[1] * b[1],
            ],
        }
    }

    pub(crate) fn conj(self, a: [i64; 2]) -> [i64; 2] {
        match self {
            LatticeKind::Z1 => a,
            LatticeKind::Z2 => [a[0], -a[1]],
            LatticeKind::A2 => [a[0] + a[1], -a[1]],
        }
    }

    /// Exact quotient `a / b` in the ring, if it exists.
    pub(crate) fn div_exact(self, a: [i64; 2], b: [i64; 2]) -> Option<[i64; 2]> {
        let n = self.qform(b);
        if n == 0 {
            return None;
        }
        let num = self.mul(a, self.conj(b));
        if num[0] % n == 0 && num[1] % n == 0 {
            Some([num[0] / n, num[1] / n])
        } else {
            None
        }
    }

    pub(crate) fn embed_unit(self, c: [i64; 2]) -> [f64; 2] {
        let (a, b) = (c[0] as f64, c[1] as f64);
        match self {
            LatticeKind::Z1 => [a, 0.0],
            LatticeKind::Z2 => [a, b],
            LatticeKind::A2 => [a + 0.5 * b, b * SQRT3 / 2.0],
        }
    }

    /// Real coordinates of an embedded vector in the unit basis.
    pub(crate) fn real_coords(self, x: [f64; 2]) -> [f64; 2] {
        match self {
            LatticeKind::Z1 => [x[0], 0.0],
            LatticeKind::Z2 => x,
            LatticeKind::A2 => {
                let b = 2.0 * x[1] / SQRT3;
                [x[0] - 0.5 * b, b]
            }
        }
    }

    /// Nearest point of the unit-scale lattice to an embedded vector.
    pub(crate) fn nearest_unit(self, x: [f64; 2]) -> [i64; 2] {
        match self {
            LatticeKind::Z1 => [x[0].round() as i64, 0],
            LatticeKind::Z2 => [x[0].round() as i64, x[1].round() as i64],
            LatticeKind::A2 => {
                // A2 is the union of the rectangular lattice (m, n*sqrt3) and
                // its translate by (1/2, sqrt3/2).
                let y = x[1] / SQRT3;
                let m0 = x[0].round();
                let n0 = y.round();
                let d0 = (x[0] - m0).powi(2) + 3.0 * (y - n0).powi(2);
                let c0 = [(m0 - n0) as i64, 2 * n0 as i64];

                let m1 = (x[0] - 0.5).round();
                let n1 = (y - 0.5).round();
                let d1 = (x[0] - m1 - 0.5).powi(2) + 3.0 * (y - n1 - 0.5).powi(2);
                let c1 = [(m1 - n1) as i64, 2 * n1 as i64 + 1];

                if d0 < d1 || (d0 == d1 && c0 < c1) {
                    c0
                } else {
                    c1
                }
            }
        }
    }

    /// Nearest multiple `xi * m` of a ring element to the exact point `p`.
    ///
    /// Returns the quotient `m`, the exact squared distance at unit scale and
    /// the number of multiples attaining that distance.
    pub(crate) fn nearest_multiple(self, xi: [i64; 2], p: [i64; 2]) -> ([i64; 2], i64, usize) {
        let n = self.qform(xi) as f64;
        let num = self.embed_unit(self.mul(p, self.conj(xi)));
        let guess = self.nearest_unit([num[0] / n, num[1] / n]);
        let span: &[i64] = &[-1, 0, 1];
        let second: &[i64] = if self.dim() == 1 { &[0] } else { span };

        let mut best = guess;
        let mut best_d = i64::MAX;
        let mut ties = 0usize;
        for &da in span {
            for &db in second {
                let m = [guess[0] + da, guess[1] + db];
                let q = self.mul(xi, m);
                let d = self.qform([p[0] - q[0], p[1] - q[1]]);
                if d < best_d {
                    best_d = d;
                    best = m;
                    ties = 1;
                } else if d == best_d {
                    ties += 1;
                    if m < best {
                        best = m;
                    }
                }
            }
        }
        (best, best_d, ties)
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A point of a lattice, held as integer coefficients in the lattice basis.
///
/// One-dimensional points keep the second coefficient at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LatticePoint {
    pub coords: [i64; 2],
}

impl LatticePoint {
    pub const ORIGIN: LatticePoint = LatticePoint { coords: [0, 0] };

    pub fn new(coords: [i64; 2]) -> Self {
        LatticePoint { coords }
    }

    pub fn from_slice(c: &[i64]) -> Self {
        match c {
            [a] => LatticePoint::new([*a, 0]),
            [a, b, ..] => LatticePoint::new([*a, *b]),
            [] => LatticePoint::ORIGIN,
        }
    }
}

impl Add for LatticePoint {
    type Output = LatticePoint;
    fn add(self, o: LatticePoint) -> LatticePoint {
        LatticePoint::new([self.coords[0] + o.coords[0], self.coords[1] + o.coords[1]])
    }
}

impl Sub for LatticePoint {
    type Output = LatticePoint;
    fn sub(self, o: LatticePoint) -> LatticePoint {
        LatticePoint::new([self.coords[0] - o.coords[0], self.coords[1] - o.coords[1]])
    }
}

impl Neg for LatticePoint {
    type Output = LatticePoint;
    fn neg(self) -> LatticePoint {
        LatticePoint::new([-self.coords[0], -self.coords[1]])
    }
}

/// A scaled copy of one of the supported lattice families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    kind: LatticeKind,
    volume: f64,
    scale: f64,
}

impl Lattice {
    /// The lattice of the given family with the given cell volume.
    pub fn with_volume(kind: LatticeKind, cell_volume: f64) -> Result<Self> {
        if !(cell_volume.is_finite() && cell_volume > 0.0) {
            return Err(Error::OutOfRange {
                what: "cell volume",
                detail: cell_volume.to_string(),
            });
        }
        let scale = (cell_volume / kind.unit_volume()).powf(1.0 / kind.dim() as f64);
        Ok(Lattice {
            kind,
            volume: cell_volume,
            scale,
        })
    }

    /// The canonical unit-scale embedding.
    pub fn unit(kind: LatticeKind) -> Self {
        Lattice {
            kind,
            volume: kind.unit_volume(),
            scale: 1.0,
        }
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn basis(&self) -> Vec<Vec<f64>> {
        let b = self.kind.unit_basis();
        let l = self.dim();
        (0..l)
            .map(|r| (0..l).map(|c| b[r][c] * self.scale).collect())
            .collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.volume
    }

    pub fn second_moment(&self) -> f64 {
        self.kind.second_moment()
    }

    pub fn embed(&self, p: LatticePoint) -> [f64; 2] {
        let e = self.kind.embed_unit(p.coords);
        [e[0] * self.scale, e[1] * self.scale]
    }

    pub(crate) fn nearest(&self, x: [f64; 2]) -> LatticePoint {
        let s = self.scale;
        LatticePoint::new(self.kind.nearest_unit([x[0] / s, x[1] / s]))
    }

    /// Nearest lattice point to `x` (ties: half away from zero for `Z^L`,
    /// lexicographically smaller coefficients for `A2`).
    pub fn nearest_point(&self, x: &[f64]) -> Result<LatticePoint> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.nearest(to_array(x)))
    }
}

pub(crate) fn to_array(x: &[f64]) -> [f64; 2] {
    [x[0], x.get(1).copied().unwrap_or(0.0)]
}

/// Dimension-normalized squared norm `(1/L) * x^T x`.
pub fn dnorm2(x: &[f64], dim: usize) -> Result<f64> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    Ok(x.iter().map(|v| v * v).sum::<f64>() / dim as f64)
}

#[inline]
pub(crate) fn dn2(dim: usize, a: [f64; 2], b: [f64; 2]) -> f64 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    (d0 * d0 + d1 * d1) / dim as f64
}

/// Normalized second moment of an `L`-dimensional sphere,
/// `Gamma(L/2 + 1)^(2/L) / ((L + 2) pi)`.
pub fn sphere_second_moment(dim: usize) -> Result<f64> {
    use std::f64::consts::PI;
    match dim {
        // Gamma(3/2)^2 = pi / 4
        1 => Ok((PI / 4.0) / (3.0 * PI)),
        // Gamma(2) = 1
        2 => Ok(1.0 / (4.0 * PI)),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Monte-Carlo estimate of the normalized second moment of `lat`.
pub fn second_moment_mc(lat: &Lattice, samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    if samples < 10_000 {
        return Err(Error::OutOfRange {
            what: "sample count",
            detail: format!("{samples} < 10000"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = lat.kind.unit_basis();
    let dim = lat.dim();
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        // uniform on a fundamental parallelogram, folded into V(0)
        let u0: f64 = rng.gen();
        let u1: f64 = if dim == 2 { rng.gen() } else { 0.0 };
        let x = [
            (u0 * b[0][0] + u1 * b[1][0]) * lat.scale,
            (u0 * b[0][1] + u1 * b[1][1]) * lat.scale,
        ];
        let q = lat.embed(lat.nearest(x));
        let d = dn2(dim, x, q);
        sum += d;
        sum2 += d * d;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0);
    let norm = lat.cell_volume().powf(2.0 / dim as f64);
    Ok(MonteCarloEstimate {
        mean: mean / norm,
        std_error: (var / n).sqrt() / norm,
    })
}

/// Points of `fine` whose nearest point of `coarse` is the origin, sorted
/// lexicographically on their coefficients in the parent basis.
pub fn enumerate_in_cell(fine: &Sublattice, coarse: &Sublattice) -> Result<Vec<LatticePoint>> {
    let kind = fine.kind();
    if coarse.kind() != kind {
        return Err(Error::Mismatch("lattice families differ".into()));
    }
    let (nf, nc) = (fine.index(), coarse.index());
    if nc % nf != 0 || kind.div_exact(coarse.generator(), fine.generator()).is_none() {
        return Err(Error::Mismatch(format!(
            "index-{nc} lattice is not a sublattice of the index-{nf} lattice"
        )));
    }

    let cov = kind.unit_covering_radius();
    let radius = (coarse.linear_scale() + fine.linear_scale()) * cov;
    let r2 = radius * radius;
    let mut out = Vec::with_capacity((nc / nf) as usize);
    for m in ball_points(kind, radius / fine.linear_scale()) {
        let p = kind.mul(fine.generator(), m);
        let e = kind.embed_unit(p);
        if e[0] * e[0] + e[1] * e[1] > r2 {
            continue;
        }
        let (_, best, ties) = kind.nearest_multiple(coarse.generator(), p);
        if kind.qform(p) == best {
            if ties > 1 {
                return Err(Error::NotClean(format!(
                    "point {p:?} lies on the boundary of the index-{nc} Voronoi cell"
                )));
            }
            out.push(LatticePoint::new(p));
        }
    }
    if out.len() as u64 != nc / nf {
        return Err(Error::NotClean(format!(
            "found {} cell points, expected {}",
            out.len(),
            nc / nf
        )));
    }
    out.sort();
    Ok(out)
}

/// Unit-lattice coefficient vectors whose embedding lies within `radius`
/// of the origin (a superset filter: box bound only).
pub(crate) fn ball_points(kind: LatticeKind, radius: f64) -> Vec<[i64; 2]> {
    let b = (2.0 * radius).ceil() as i64 + 1;
    let r2 = (radius + 1e-9) * (radius + 1e-9);
    let mut out = Vec::new();
    let second = if kind.dim() == 1 { 0..=0 } else { -b..=b };
    for a in -b..=b {
        for c in second.clone() {
            let e = kind.embed_unit([a, c]);
            if e[0] * e[0] + e[1] * e[1] <= r2 {
                out.push([a, c]);
            }
        }
    }
    out
}
