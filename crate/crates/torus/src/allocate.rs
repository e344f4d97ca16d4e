use std::collections::BinaryHeap;
use std::io::Write;

use serde::Serialize;

use crate::config::TorusError;
use crate::geometry::Torus;

/// Every site assigned to one point; `assignment[site]` indexes into `points`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AllocationMap {
    pub points: Vec<usize>,
    pub quota: usize,
    pub assignment: Vec<usize>,
}

/// A site and a point that strictly prefer each other over their current partners.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BlockingPair {
    pub site: usize,
    pub point: usize,
}

/// Site-proposing deferred acceptance with capacity `N/k` per point.
///
/// Both sides rank a pair (site, point) by L1 torus distance, then by the centered
/// displacement `site − point` in lexicographic order. The ranking depends only on
/// the displacement, so the allocation commutes with translations.
pub fn stable_marriage_allocate(
    torus: &Torus,
    points: &[usize],
) -> Result<AllocationMap, TorusError> {
    let sites = torus.size();
    let k = points.len();
    if k == 0 || !sites.is_multiple_of(k) {
        return Err(TorusError::QuotaIndivisible { k, sites });
    }
    let mut seen = vec![false; sites];
    for &p in points {
        if p >= sites || seen[p] {
            return Err(TorusError::BadPoint(p));
        }
        seen[p] = true;
    }
    let quota = sites / k;
    let mut index_of = vec![usize::MAX; sites];
    for (i, &p) in points.iter().enumerate() {
        index_of[p] = i;
    }
    // a site's preference list is the displacement order filtered to occupied sites,
    // generated lazily: `cursor[s]` is the next displacement to try
    let order = torus.displacement_order();
    let mut cursor = vec![0usize; sites];
    let mut held: Vec<BinaryHeap<(u32, usize)>> = vec![BinaryHeap::with_capacity(quota + 1); k];
    let mut free: Vec<usize> = (0..sites).rev().collect();
    while let Some(s) = free.pop() {
        let i = loop {
            let p = torus.sub(s, order[cursor[s]]);
            cursor[s] += 1;
            if index_of[p] != usize::MAX {
                break index_of[p];
            }
        };
        held[i].push((torus.pair_rank(s, points[i]), s));
        if held[i].len() > quota {
            let (_, rejected) = held[i].pop().expect("over capacity");
            free.push(rejected);
        }
    }
    let mut assignment = vec![usize::MAX; sites];
    for (i, h) in held.iter().enumerate() {
        for &(_, s) in h.iter() {
            assignment[s] = i;
        }
    }
    Ok(AllocationMap {
        points: points.to_vec(),
        quota,
        assignment,
    })
}

impl AllocationMap {
    /// The point (as a site) that `site` is allocated to.
    pub fn point_of(&self, site: usize) -> usize {
        self.points[self.assignment[site]]
    }

    /// Every point receives exactly `quota` sites and every site is assigned.
    pub fn quota_exact(&self) -> bool {
        let mut load = vec![0usize; self.points.len()];
        for &i in &self.assignment {
            match load.get_mut(i) {
                Some(l) => *l += 1,
                None => return false,
            }
        }
        load.iter().all(|&l| l == self.quota)
    }

    pub fn blocking_pair(&self, torus: &Torus) -> Option<BlockingPair> {
        let mut worst = vec![0u32; self.points.len()];
        let mut index_of = vec![usize::MAX; torus.size()];
        for (j, &p) in self.points.iter().enumerate() {
            index_of[p] = j;
        }
        for (s, &i) in self.assignment.iter().enumerate() {
            worst[i] = worst[i].max(torus.pair_rank(s, self.points[i]));
        }
        for (s, &i) in self.assignment.iter().enumerate() {
            let mine = torus.pair_rank(s, self.points[i]) as usize;
            // displacements ranked strictly better than the current match
            for &delta in &torus.displacement_order()[..mine] {
                let p = torus.sub(s, delta);
                let j = index_of[p];
                if j != usize::MAX && torus.pair_rank(s, p) < worst[j] {
                    return Some(BlockingPair { site: s, point: p });
                }
            }
        }
        None
    }

    /// One row per site: site coordinates followed by the coordinates of its point.
    pub fn write_csv<W: Write>(&self, torus: &Torus, out: W) -> Result<(), TorusError> {
        let csv_err = |e: csv::Error| TorusError::Csv(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        let d = torus.dim();
        let header: Vec<String> = (0..d)
            .map(|i| format!("site_{i}"))
            .chain((0..d).map(|i| format!("point_{i}")))
            .collect();
        w.write_record(&header).map_err(csv_err)?;
        for s in 0..torus.size() {
            let row: Vec<String> = torus
                .coords(s)
                .iter()
                .chain(torus.coords(self.point_of(s)))
                .map(|c| c.to_string())
                .collect();
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| TorusError::Csv(e.to_string()))
    }
}
