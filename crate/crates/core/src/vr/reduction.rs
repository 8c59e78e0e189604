use std::collections::HashMap;

use super::{Filtration, Interval, PersistenceDiagram};

/// Symmetric difference of two sorted index columns.
fn add_columns(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Boundary-matrix reduction over Z/2 in filtration order, with clearing
/// (dimensions processed from the top down). Zero-persistence pairs are
/// dropped; unpaired classes below the top dimension are essential and
/// truncated at the filtration's maximum scale.
pub fn persistent_homology(f: &Filtration) -> PersistenceDiagram {
    let simplices = f.simplices();
    let n = simplices.len();
    let position: HashMap<&[usize], usize> = simplices
        .iter()
        .enumerate()
        .map(|(i, s)| (s.vertices.as_slice(), i))
        .collect();
    let boundary = |j: usize| -> Vec<usize> {
        let v = &simplices[j].vertices;
        if v.len() == 1 {
            return Vec::new();
        }
        let mut col: Vec<usize> = (0..v.len())
            .map(|skip| {
                let face: Vec<usize> = v
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &x)| x)
                    .collect();
                position[face.as_slice()]
            })
            .collect();
        col.sort_unstable();
        col
    };

    let mut reduced: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut owner_of_low: Vec<Option<usize>> = vec![None; n];
    let mut cleared = vec![false; n];
    for dim in (1..=f.max_dim()).rev() {
        for j in (0..n).filter(|&j| simplices[j].dim() == dim) {
            if cleared[j] {
                continue;
            }
            let mut col = boundary(j);
            while let Some(&low) = col.last() {
                match owner_of_low[low] {
                    Some(k) => col = add_columns(&col, &reduced[k]),
                    None => break,
                }
            }
            if let Some(&low) = col.last() {
                owner_of_low[low] = Some(j);
                cleared[low] = true;
            }
            reduced[j] = col;
        }
    }

    let mut dims = vec![Vec::new(); f.max_dim()];
    for j in 0..n {
        if let Some(&low) = reduced[j].last() {
            let birth = simplices[low].scale;
            let death = simplices[j].scale;
            if death > birth {
                dims[simplices[low].dim()].push(Interval {
                    birth,
                    death,
                    essential: false,
                });
            }
        }
    }
    for i in 0..n {
        let d = simplices[i].dim();
        if d < f.max_dim() && owner_of_low[i].is_none() && reduced[i].is_empty() && !cleared[i] {
            dims[d].push(Interval {
                birth: simplices[i].scale,
                death: f.max_scale(),
                essential: true,
            });
        }
    }
    PersistenceDiagram::new(f.max_dim(), f.max_scale(), dims)
}
