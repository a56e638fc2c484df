//! Geometrically similar sublattices.
//!
//! A sublattice is the principal ideal `xi * Lambda` generated by a ring
//! element `xi` of the parent: a Gaussian integer for `Z^2`, an element of
//! `Z[eta]` (`eta = exp(i*pi/3)`) for `A2`, and an integer for `Z^1`. The
//! element's coefficients in the parent basis are the [`SimilaritySpec`]. Its
//! index is the ring norm, and the product lattice of several sublattices is
//! the ideal generated by the product of their elements.

use crate::error::{Error, Result};
use crate::lattice::{ball_points, Lattice, LatticeKind, LatticePoint};

/// Coefficients `(a, b)` of the similarity element in the parent basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SimilaritySpec {
    pub a: i64,
    pub b: i64,
}

impl SimilaritySpec {
    pub fn new(a: i64, b: i64) -> Self {
        SimilaritySpec { a, b }
    }

    /// Index of the generated sublattice: `|a|`, `a^2 + b^2` or `a^2 + ab + b^2`.
    pub fn index(&self, kind: LatticeKind) -> Result<u64> {
        self.validate(kind)?;
        Ok(match kind {
            LatticeKind::Z1 => self.a.unsigned_abs(),
            _ => kind.qform([self.a, self.b]) as u64,
        })
    }

    fn validate(&self, kind: LatticeKind) -> Result<()> {
        let bad = (self.a == 0 && self.b == 0) || (kind == LatticeKind::Z1 && self.b != 0);
        if bad {
            Err(Error::InvalidSpec {
                lattice: kind.name(),
                a: self.a,
                b: self.b,
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sublattice {
    parent: Lattice,
    spec: SimilaritySpec,
    index: u64,
}

impl Sublattice {
    /// The parent lattice viewed as its own index-1 sublattice.
    pub fn whole(parent: &Lattice) -> Self {
        Sublattice {
            parent: *parent,
            spec: SimilaritySpec::new(1, 0),
            index: 1,
        }
    }

    pub fn parent(&self) -> &Lattice {
        &self.parent
    }

    pub fn kind(&self) -> LatticeKind {
        self.parent.kind()
    }

    pub fn spec(&self) -> SimilaritySpec {
        self.spec
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub(crate) fn generator(&self) -> [i64; 2] {
        [self.spec.a, self.spec.b]
    }

    /// Length scale relative to the parent (`index^(1/L)`).
    pub fn linear_scale(&self) -> f64 {
        (self.kind().qform(self.generator()) as f64).sqrt()
    }

    pub fn cell_volume(&self) -> f64 {
        self.index as f64 * self.parent.cell_volume()
    }

    /// Basis rows as integer coefficients in the parent basis.
    pub fn basis_coords(&self) -> Vec<[i64; 2]> {
        let kind = self.kind();
        let g = self.generator();
        match kind {
            LatticeKind::Z1 => vec![g],
            _ => vec![kind.mul(g, [1, 0]), kind.mul(g, [0, 1])],
        }
    }

    /// Basis rows in the embedding space.
    pub fn basis(&self) -> Vec<Vec<f64>> {
        let l = self.parent.dim();
        self.basis_coords()
            .into_iter()
            .map(|c| self.parent.embed(LatticePoint::new(c))[..l].to_vec())
            .collect()
    }

    pub fn contains(&self, p: LatticePoint) -> bool {
        self.kind().div_exact(p.coords, self.generator()).is_some()
    }

    /// Coefficients of a sublattice point in this sublattice's own basis.
    pub fn own_coords(&self, p: LatticePoint) -> Option<[i64; 2]> {
        self.kind().div_exact(p.coords, self.generator())
    }

    /// Inverse of [`Sublattice::own_coords`].
    pub fn from_own_coords(&self, m: [i64; 2]) -> LatticePoint {
        LatticePoint::new(self.kind().mul(self.generator(), m))
    }

    /// Sublattice point nearest to a parent-lattice point, decided exactly.
    pub fn nearest_to_point(&self, p: LatticePoint) -> LatticePoint {
        let (m, _, _) = self.kind().nearest_multiple(self.generator(), p.coords);
        self.from_own_coords(m)
    }

    /// The same sublattice over a rescaled parent of the same family.
    pub fn rescaled(&self, parent: &Lattice) -> Sublattice {
        debug_assert_eq!(parent.kind(), self.kind());
        Sublattice {
            parent: *parent,
            ..*self
        }
    }

    /// Sublattice points within `radius` (unit-scale distance, inclusive) of
    /// the parent point `center`, sorted by coefficients.
    pub(crate) fn points_within(&self, center: LatticePoint, radius: f64) -> Vec<LatticePoint> {
        let kind = self.kind();
        let g = self.generator();
        let c = ring_div_real(kind, kind.real_coords(kind.embed_unit(center.coords)), g);
        let base = kind.nearest_unit(embed_real(kind, c));
        let reach = radius / self.linear_scale() + kind.unit_covering_radius() + 1.0;
        let r2 = radius * radius * (1.0 + 1e-12);
        let mut out: Vec<LatticePoint> = ball_points(kind, reach)
            .into_iter()
            .map(|d| {
                let m = [base[0] + d[0], base[1] + d[1]];
                LatticePoint::new(kind.mul(g, m))
            })
            .filter(|q| (kind.qform((*q - center).coords) as f64) <= r2)
            .collect();
        out.sort();
        out
    }

    /// Sublattice point nearest to an embedded vector (floating point).
    pub fn nearest_to_vector(&self, x: [f64; 2]) -> LatticePoint {
        let kind = self.kind();
        let s = self.parent.scale();
        let c = kind.real_coords([x[0] / s, x[1] / s]);
        let q = ring_div_real(kind, c, self.generator());
        let m = kind.nearest_unit(embed_real(kind, q));
        self.from_own_coords(m)
    }
}

/// `c / g` for real coefficients `c` and ring element `g`, as real coefficients.
fn ring_div_real(kind: LatticeKind, c: [f64; 2], g: [i64; 2]) -> [f64; 2] {
    let n = kind.qform(g) as f64;
    let gc = kind.conj(g);
    let (u, v) = (gc[0] as f64, gc[1] as f64);
    let prod = match kind {
        LatticeKind::Z1 => [c[0] * u, 0.0],
        LatticeKind::Z2 => [c[0] * u - c[1] * v, c[0] * v + c[1] * u],
        LatticeKind::A2 => [c[0] * u - c[1] * v, c[0] * v + c[1] * u + c[1] * v],
    };
    [prod[0] / n, prod[1] / n]
}

fn embed_real(kind: LatticeKind, c: [f64; 2]) -> [f64; 2] {
    match kind {
        LatticeKind::Z1 => [c[0], 0.0],
        LatticeKind::Z2 => c,
        LatticeKind::A2 => [c[0] + 0.5 * c[1], c[1] * 0.866_025_403_784_438_6],
    }
}

pub fn similar_sublattice(parent: &Lattice, spec: SimilaritySpec) -> Result<Sublattice> {
    let index = spec.index(parent.kind())?;
    Ok(Sublattice {
        parent: *parent,
        spec,
        index,
    })
}

/// True iff no parent point is equidistant from two nearest sublattice points.
pub fn is_clean(parent: &Lattice, sub: &Sublattice) -> bool {
    let kind = parent.kind();
    if sub.kind() != kind {
        return false;
    }
    let radius = (sub.linear_scale() + 1.0) * kind.unit_covering_radius();
    ball_points(kind, radius)
        .into_iter()
        .all(|p| kind.nearest_multiple(sub.generator(), p).2 == 1)
}

/// Canonical representatives (one per unit class) of similarity elements with
/// norm at most `max_n`, ordered by `(norm, a, b)`.
fn canonical_specs(kind: LatticeKind, max_n: u64) -> Vec<(u64, SimilaritySpec)> {
    let bound = match kind {
        LatticeKind::Z1 => max_n as i64,
        _ => (max_n as f64).sqrt().ceil() as i64 + 1,
    };
    let mut out = Vec::new();
    for a in 1..=bound {
        let bs = if kind == LatticeKind::Z1 { 0..=0 } else { 0..=bound };
        for b in bs {
            let n = SimilaritySpec::new(a, b).index(kind).expect("nonzero spec");
            if n <= max_n {
                out.push((n, SimilaritySpec::new(a, b)));
            }
        }
    }
    out.sort_by_key(|&(n, s)| (n, s.a, s.b));
    out
}

/// Every index up to `max_n` realizable by a clean similar sublattice, with
/// the first clean witness found.
pub fn admissible_indices(parent: &Lattice, max_n: u64) -> Vec<(u64, SimilaritySpec)> {
    let mut out: Vec<(u64, SimilaritySpec)> = Vec::new();
    for (n, spec) in canonical_specs(parent.kind(), max_n.max(1)) {
        if out.last().map(|&(m, _)| m) == Some(n) {
            continue;
        }
        let sub = Sublattice {
            parent: *parent,
            spec,
            index: n,
        };
        if is_clean(parent, &sub) {
            out.push((n, spec));
        }
    }
    out
}

/// The clean witness for index `n`, if `n` is admissible.
pub fn witness_for_index(parent: &Lattice, n: u64) -> Option<SimilaritySpec> {
    admissible_indices(parent, n)
        .into_iter()
        .find(|&(m, _)| m == n)
        .map(|(_, s)| s)
}

/// The product lattice generated by the product of the similarity elements.
pub fn product_lattice(parent: &Lattice, subs: &[Sublattice]) -> Result<Sublattice> {
    let kind = parent.kind();
    let first = subs
        .first()
        .ok_or_else(|| Error::OutOfRange {
            what: "sublattice count",
            detail: "0".into(),
        })?;
    let mut g = first.generator();
    for s in &subs[1..] {
        if s.kind() != kind {
            return Err(Error::Mismatch("sublattices have different parents".into()));
        }
        g = kind.mul(g, s.generator());
    }
    let product = similar_sublattice(parent, SimilaritySpec::new(g[0], g[1]))?;
    let expected: u64 = subs.iter().map(|s| s.index()).product();
    debug_assert_eq!(product.index(), expected);

    for s in subs {
        for row in product.basis_coords() {
            if !s.contains(LatticePoint::new(row)) {
                return Err(Error::Mismatch(format!(
                    "product basis row {row:?} not in index-{} sublattice",
                    s.index()
                )));
            }
        }
    }
    if !is_clean(parent, &product) {
        return Err(Error::NotClean(format!(
            "product lattice of index {} is not clean",
            product.index()
        )));
    }
    Ok(product)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(kind: LatticeKind) -> Lattice {
        Lattice::unit(kind)
    }

    #[test]
    fn gaussian_and_eisenstein_sublattices() {
        let s = similar_sublattice(&z(LatticeKind::Z2), SimilaritySpec::new(1, 2)).unwrap();
        assert_eq!(s.index(), 5);
        assert_eq!(s.basis_coords(), vec![[1, 2], [-2, 1]]);

        let id = similar_sublattice(&z(LatticeKind::Z2), SimilaritySpec::new(1, 0)).unwrap();
        assert_eq!(id.index(), 1);
        assert_eq!(id.basis_coords(), vec![[1, 0], [0, 1]]);

        let a2 = similar_sublattice(&z(LatticeKind::A2), SimilaritySpec::new(1, 1)).unwrap();
        assert_eq!(a2.index(), 3);
        let b = a2.basis();
        let det = (b[0][0] * b[1][1] - b[0][1] * b[1][0]).abs();
        assert!((det - 3.0 * LatticeKind::A2.unit_volume()).abs() < 1e-12);

        assert!(similar_sublattice(&z(LatticeKind::Z2), SimilaritySpec::new(0, 0)).is_err());
        assert!(similar_sublattice(&z(LatticeKind::Z1), SimilaritySpec::new(2, 1)).is_err());
    }

    #[test]
    fn similarity_of_gram_matrices() {
        for kind in [LatticeKind::Z2, LatticeKind::A2] {
            let parent = Lattice::with_volume(kind, 0.4).unwrap();
            let s = similar_sublattice(&parent, SimilaritySpec::new(2, 3)).unwrap();
            let b = s.basis();
            let gram = |m: &Vec<Vec<f64>>| {
                [
                    m[0][0] * m[0][0] + m[0][1] * m[0][1],
                    m[0][0] * m[1][0] + m[0][1] * m[1][1],
                    m[1][0] * m[1][0] + m[1][1] * m[1][1],
                ]
            };
            let gs = gram(&b);
            let gp = gram(&parent.basis());
            for k in 0..3 {
                assert!((gs[k] - s.index() as f64 * gp[k]).abs() < 1e-9);
            }
            assert!((s.cell_volume() - s.index() as f64 * parent.cell_volume()).abs() < 1e-12);
        }
    }

    #[test]
    fn cleanness() {
        let z1 = z(LatticeKind::Z1);
        let z2 = z(LatticeKind::Z2);
        assert!(!is_clean(&z1, &similar_sublattice(&z1, SimilaritySpec::new(2, 0)).unwrap()));
        assert!(is_clean(&z1, &similar_sublattice(&z1, SimilaritySpec::new(3, 0)).unwrap()));
        assert!(is_clean(&z2, &similar_sublattice(&z2, SimilaritySpec::new(1, 2)).unwrap()));
        assert!(!is_clean(&z2, &similar_sublattice(&z2, SimilaritySpec::new(1, 1)).unwrap()));
    }

    #[test]
    fn admissible_index_sets() {
        let idx = |kind, n| -> Vec<u64> {
            admissible_indices(&z(kind), n).into_iter().map(|(n, _)| n).collect()
        };
        assert_eq!(idx(LatticeKind::Z2, 30), vec![1, 5, 9, 13, 17, 25, 29]);
        assert_eq!(idx(LatticeKind::Z1, 10), vec![1, 3, 5, 7, 9]);
        for kind in [LatticeKind::Z1, LatticeKind::Z2, LatticeKind::A2] {
            assert_eq!(idx(kind, 1), vec![1]);
            for (n, spec) in admissible_indices(&z(kind), 60) {
                let s = similar_sublattice(&z(kind), spec).unwrap();
                assert_eq!(s.index(), n);
                assert!(is_clean(&z(kind), &s));
            }
        }
    }

    #[test]
    fn products() {
        let z2 = z(LatticeKind::Z2);
        let s = similar_sublattice(&z2, SimilaritySpec::new(1, 2)).unwrap();
        let p = product_lattice(&z2, &[s, s]).unwrap();
        assert_eq!(p.spec(), SimilaritySpec::new(-3, 4));
        assert_eq!(p.basis_coords(), vec![[-3, 4], [-4, -3]]);
        assert_eq!(p.index(), 25);

        let z1 = z(LatticeKind::Z1);
        let a = similar_sublattice(&z1, SimilaritySpec::new(3, 0)).unwrap();
        let b = similar_sublattice(&z1, SimilaritySpec::new(5, 0)).unwrap();
        let p = product_lattice(&z1, &[a, b]).unwrap();
        assert_eq!(p.index(), 15);
        assert_eq!(p.basis_coords(), vec![[15, 0]]);

        assert_eq!(product_lattice(&z1, &[a]).unwrap(), a);
        assert!(product_lattice(&z1, &[]).is_err());
    }

    #[test]
    fn own_coordinates_round_trip() {
        let z2 = z(LatticeKind::Z2);
        let s = similar_sublattice(&z2, SimilaritySpec::new(1, 2)).unwrap();
        let p = s.from_own_coords([3, -4]);
        assert!(s.contains(p));
        assert_eq!(s.own_coords(p), Some([3, -4]));
        assert!(!s.contains(LatticePoint::new([1, 0])));
    }

    #[test]
    fn nearest_to_vector_agrees_with_exact_search() {
        for kind in [LatticeKind::Z1, LatticeKind::Z2, LatticeKind::A2] {
            let parent = Lattice::with_volume(kind, 0.3).unwrap();
            let spec = admissible_indices(&parent, 40).last().unwrap().1;
            let s = similar_sublattice(&parent, spec).unwrap();
            for p in ball_points(kind, 12.0) {
                let p = LatticePoint::new(p);
                let exact = s.nearest_to_point(p);
                let e = parent.embed(p);
                assert_eq!(s.nearest_to_vector(e), exact, "{kind} {p:?}");
            }
        }
    }
}
