//! Implicit Vietoris-Rips persistence.
//!
//! Simplices are identified by their rank in the combinatorial number system
//! (`sum_i C(v_i, i + 1)` over vertices sorted descending), so the filtration
//! is never stored. The filtration order is diameter ascending, ties broken by
//! *descending* index; any refinement of the diameter order yields the same
//! diagram, and this one makes the cofacet enumerator below emit cofacets of
//! equal diameter in filtration order.
//!
//! Dimension 0 is handled with union-find. Higher dimensions reduce
//! coboundary columns in reverse filtration order. Columns whose simplex was
//! already paired as a pivot one dimension lower are cleared, and a column
//! whose earliest cofacet has the same diameter and is not yet a pivot is
//! paired immediately (an emergent pair) without building its coboundary.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;

use super::{DistanceMatrix, Interval, PersistenceDiagram, UnionFind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    diam: f64,
    index: u64,
}

impl Eq for Entry {}

impl Ord for Entry {
    /// Greater means earlier in the filtration, so a max-heap pops the
    /// pivot (the earliest cofacet) first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .diam
            .total_cmp(&self.diam)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Binomial {
    table: Vec<u64>,
    k_max: usize,
}

impl Binomial {
    fn new(n: usize, k_max: usize) -> Result<Self> {
        let width = k_max + 1;
        let mut table = vec![0u64; (n + 1) * width];
        for i in 0..=n {
            table[i * width] = 1;
            for j in 1..=k_max.min(i) {
                let a = table[(i - 1) * width + j - 1];
                let b = if j < i { table[(i - 1) * width + j] } else { 0 };
                table[i * width + j] = a.checked_add(b).ok_or_else(|| {
                    Error::Parameter(format!(
                        "{n} points in dimension {k_max} overflow 64-bit simplex indices"
                    ))
                })?;
            }
        }
        Ok(Self { table, k_max })
    }

    #[inline]
    fn get(&self, n: usize, k: usize) -> u64 {
        debug_assert!(k <= self.k_max);
        self.table[n * (self.k_max + 1) + k]
    }
}

struct Rips<'a> {
    dm: &'a DistanceMatrix,
    n: usize,
    binom: Binomial,
    threshold: f64,
}

impl<'a> Rips<'a> {
    /// Vertices of the `dim`-simplex with the given index, descending.
    fn vertices(&self, mut index: u64, dim: usize, out: &mut Vec<usize>) {
        out.clear();
        let mut top = self.n;
        for k in (1..=dim + 1).rev() {
            // largest v < top with C(v, k) <= index
            let (mut lo, mut hi) = (k - 1, top - 1);
            while lo < hi {
                let mid = (lo + hi).div_ceil(2);
                if self.binom.get(mid, k) <= index {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            out.push(lo);
            index -= self.binom.get(lo, k);
            top = lo;
        }
    }

    fn coboundary(&self, simplex: Entry, dim: usize) -> Coboundary<'_, 'a> {
        let mut vertices = Vec::with_capacity(dim + 1);
        self.vertices(simplex.index, dim, &mut vertices);
        Coboundary {
            rips: self,
            diam: simplex.diam,
            idx_below: simplex.index,
            idx_above: 0,
            v: self.n as i64 - 1,
            k: dim + 1,
            vertices,
        }
    }
}

/// Enumerates cofacets in descending index order.
struct Coboundary<'r, 'a> {
    rips: &'r Rips<'a>,
    diam: f64,
    idx_below: u64,
    idx_above: u64,
    v: i64,
    k: usize,
    vertices: Vec<usize>,
}

impl Coboundary<'_, '_> {
    /// Next cofacet; with `all = false` only cofacets whose new vertex exceeds
    /// every existing vertex.
    fn next(&mut self, all: bool) -> Option<Entry> {
        let b = &self.rips.binom;
        if self.v < self.k as i64 {
            return None;
        }
        if !all && b.get(self.v as usize, self.k) <= self.idx_below {
            return None;
        }
        while b.get(self.v as usize, self.k) <= self.idx_below {
            self.idx_below -= b.get(self.v as usize, self.k);
            self.idx_above += b.get(self.v as usize, self.k + 1);
            self.v -= 1;
            self.k -= 1;
        }
        let v = self.v as usize;
        let mut diam = self.diam;
        for &w in &self.vertices {
            diam = diam.max(self.rips.dm.get(v, w));
        }
        let index = self.idx_above + b.get(v, self.k + 1) + self.idx_below;
        self.v -= 1;
        Some(Entry { diam, index })
    }
}

/// Pops cancelling pairs (Z/2) and returns the pivot, leaving it on the heap.
fn pivot(heap: &mut BinaryHeap<Entry>) -> Option<Entry> {
    loop {
        let top = heap.pop()?;
        match heap.peek() {
            Some(next) if next.index == top.index => {
                heap.pop();
            }
            _ => {
                heap.push(top);
                return Some(top);
            }
        }
    }
}

/// Persistence diagram of the Rips filtration of `dm` up to simplices of
/// dimension `max_dim` and diameter `max_scale`.
pub fn rips_persistence(dm: &DistanceMatrix, max_dim: usize, max_scale: f64) -> Result<PersistenceDiagram> {
    if max_dim < 1 {
        return Err(Error::Parameter("max_dim must be >= 1".into()));
    }
    if !(max_scale > 0.0) || max_scale.is_nan() {
        return Err(Error::Parameter(format!("max_scale must be positive, got {max_scale}")));
    }
    let n = dm.len();
    if n == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let rips = Rips {
        dm,
        n,
        binom: Binomial::new(n, max_dim + 1)?,
        threshold: max_scale,
    };
    let mut dims: Vec<Vec<Interval>> = vec![Vec::new(); max_dim];

    // H0
    let mut edges = Vec::new();
    for i in 1..n {
        for j in 0..i {
            let d = dm.get(i, j);
            if d <= max_scale {
                edges.push(Entry {
                    diam: d,
                    index: rips.binom.get(i, 2) + j as u64,
                });
            }
        }
    }
    edges.sort_unstable_by(|a, b| b.cmp(a));
    let mut uf = UnionFind::new(n);
    let mut columns = Vec::new();
    let mut verts = Vec::with_capacity(2);
    for &e in &edges {
        rips.vertices(e.index, 1, &mut verts);
        if uf.union(verts[0], verts[1]) {
            if e.diam > 0.0 {
                dims[0].push(Interval {
                    birth: 0.0,
                    death: e.diam,
                    essential: false,
                });
            }
        } else {
            columns.push(e);
        }
    }
    for _ in 0..uf.components() {
        dims[0].push(Interval {
            birth: 0.0,
            death: max_scale,
            essential: true,
        });
    }

    let mut simplices = edges;
    for dim in 1..max_dim {
        // reverse filtration order
        columns.sort_unstable();
        let pivots = reduce(&rips, &columns, dim, &mut dims[dim]);
        if dim + 1 < max_dim {
            let (next_simplices, next_columns) = assemble(&rips, &simplices, dim, &pivots, dim + 2 < max_dim);
            simplices = next_simplices;
            columns = next_columns;
        }
    }
    Ok(PersistenceDiagram::new(max_dim, max_scale, dims))
}

/// (d+1)-simplices within the threshold, each generated once from its face
/// without the top vertex; columns are those not already pivots.
fn assemble(
    rips: &Rips<'_>,
    simplices: &[Entry],
    dim: usize,
    pivots: &FxHashMap<u64, usize>,
    keep_all: bool,
) -> (Vec<Entry>, Vec<Entry>) {
    let mut all = Vec::new();
    let mut columns = Vec::new();
    for &s in simplices {
        let mut cob = rips.coboundary(s, dim);
        while let Some(c) = cob.next(false) {
            if c.diam <= rips.threshold {
                if keep_all {
                    all.push(c);
                }
                if !pivots.contains_key(&c.index) {
                    columns.push(c);
                }
            }
        }
    }
    (all, columns)
}

/// Reduces the coboundary columns of dimension `dim`, appending intervals.
/// Returns the pivot index map (cofacet index to reduction slot).
fn reduce(rips: &Rips<'_>, columns: &[Entry], dim: usize, out: &mut Vec<Interval>) -> FxHashMap<u64, usize> {
    let mut pivots: FxHashMap<u64, usize> = FxHashMap::default();
    let mut reductions: Vec<Vec<Entry>> = Vec::new();
    let mut heap: BinaryHeap<Entry> = BinaryHeap::new();
    let mut buffer: Vec<Entry> = Vec::new();
    let mut added: Vec<Entry> = Vec::new();

    for &column in columns {
        heap.clear();
        buffer.clear();
        added.clear();
        added.push(column);

        // initial coboundary, watching for an emergent pair
        let mut emergent = None;
        let mut check = true;
        let mut cob = rips.coboundary(column, dim);
        while let Some(c) = cob.next(true) {
            if c.diam > rips.threshold {
                continue;
            }
            if check && c.diam == column.diam {
                if !pivots.contains_key(&c.index) {
                    emergent = Some(c);
                    break;
                }
                check = false;
            }
            buffer.push(c);
        }
        let mut current = match emergent {
            Some(c) => Some(c),
            None => {
                heap.extend(buffer.iter().copied());
                pivot(&mut heap)
            }
        };

        loop {
            match current {
                None => {
                    out.push(Interval {
                        birth: column.diam,
                        death: rips.threshold,
                        essential: true,
                    });
                    break;
                }
                Some(p) => match pivots.get(&p.index) {
                    Some(&slot) => {
                        for &s in &reductions[slot] {
                            added.push(s);
                            let mut cob = rips.coboundary(s, dim);
                            while let Some(c) = cob.next(true) {
                                if c.diam <= rips.threshold {
                                    heap.push(c);
                                }
                            }
                        }
                        current = pivot(&mut heap);
                    }
                    None => {
                        if p.diam > column.diam {
                            out.push(Interval {
                                birth: column.diam,
                                death: p.diam,
                                essential: false,
                            });
                        }
                        pivots.insert(p.index, reductions.len());
                        reductions.push(cancel_pairs(&mut added));
                        break;
                    }
                },
            }
        }
    }
    pivots
}

/// Keeps the entries that occur an odd number of times.
fn cancel_pairs(entries: &mut [Entry]) -> Vec<Entry> {
    if entries.len() == 1 {
        return entries.to_vec();
    }
    entries.sort_unstable_by_key(|e| e.index);
    let mut out = Vec::with_capacity(entries.len());
    let mut i = 0;
    while i < entries.len() {
        let mut j = i;
        while j < entries.len() && entries[j].index == entries[i].index {
            j += 1;
        }
        if (j - i) % 2 == 1 {
            out.push(entries[i]);
        }
        i = j;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::PointCloud;
    use crate::vr::{pairwise_distances, persistent_homology, vr_filtration};

    fn dm(points: Vec<Vec<f64>>) -> DistanceMatrix {
        pairwise_distances(&PointCloud::new(points, "t").unwrap()).unwrap()
    }

    #[test]
    fn index_round_trip() {
        let d = dm((0..9).map(|i| vec![i as f64]).collect());
        let rips = Rips {
            dm: &d,
            n: 9,
            binom: Binomial::new(9, 4).unwrap(),
            threshold: 100.0,
        };
        let mut v = Vec::new();
        // {0,1,2} is index 0; {8,7,6} is the last triangle C(9,3)-1
        rips.vertices(0, 2, &mut v);
        assert_eq!(v, vec![2, 1, 0]);
        rips.vertices(83, 2, &mut v);
        assert_eq!(v, vec![8, 7, 6]);
        let mut seen = Vec::new();
        for idx in 0..rips.binom.get(9, 3) {
            rips.vertices(idx, 2, &mut v);
            let back: u64 = v.iter().enumerate().map(|(i, &x)| rips.binom.get(x, 3 - i)).sum();
            assert_eq!(back, idx);
            seen.push(v.clone());
        }
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 84);
    }

    #[test]
    fn cofacets_descend_and_match_brute_force() {
        let d = dm((0..7).map(|i| vec![(i * i) as f64]).collect());
        let rips = Rips {
            dm: &d,
            n: 7,
            binom: Binomial::new(7, 4).unwrap(),
            threshold: f64::INFINITY,
        };
        let edge = Entry { diam: d.get(4, 2), index: rips.binom.get(4, 2) + 2 };
        let mut cob = rips.coboundary(edge, 1);
        let mut got = Vec::new();
        while let Some(c) = cob.next(true) {
            got.push(c);
        }
        assert!(got.windows(2).all(|w| w[0].index > w[1].index));
        assert_eq!(got.len(), 5);
        let mut v = Vec::new();
        for c in &got {
            rips.vertices(c.index, 2, &mut v);
            assert!(v.contains(&4) && v.contains(&2));
            let diam = d.get(v[0], v[1]).max(d.get(v[0], v[2])).max(d.get(v[1], v[2]));
            assert_eq!(c.diam, diam);
        }
        let mut top = rips.coboundary(edge, 1);
        let mut above = Vec::new();
        while let Some(c) = top.next(false) {
            above.push(c);
        }
        assert_eq!(above.len(), 2);
    }

    #[test]
    fn matches_explicit_reduction_on_grid_with_ties() {
        // integer grid: many equal distances
        let mut pts = Vec::new();
        for x in 0..3 {
            for y in 0..3 {
                pts.push(vec![x as f64, y as f64, ((x + y) % 2) as f64]);
            }
        }
        let d = dm(pts);
        for (max_dim, scale) in [(2, 1.5), (3, 2.0), (3, 1.0), (4, 2.3)] {
            let explicit = persistent_homology(&vr_filtration(&d, max_dim, scale).unwrap());
            let implicit = rips_persistence(&d, max_dim, scale).unwrap();
            assert_eq!(explicit, implicit, "max_dim {max_dim}, scale {scale}");
        }
    }

    #[test]
    fn square_and_point() {
        let sq = dm(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]);
        let pd = rips_persistence(&sq, 2, 2.0).unwrap();
        assert_eq!(pd.intervals(1).len(), 1);
        assert!((pd.intervals(1)[0].death - 2f64.sqrt()).abs() < 1e-12);
        let one = dm(vec![vec![3.0]]);
        let pd = rips_persistence(&one, 3, 1.0).unwrap();
        assert_eq!(pd.intervals(0).len(), 1);
        assert!(pd.intervals(1).is_empty());
    }
}
