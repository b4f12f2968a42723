//! Region table: which regions lie in exactly one box (determined), in none
//! (background), or in several (undetermined, resolved per box pair).

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{BoxSet, FeatureMatrix, PointCloud, SuperpointPartition};

/// Default training-set cap at point granularity.
pub const DEFAULT_POINT_CAP: usize = 800;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Point,
    Superpoint,
}

/// Box indices are positions in the [`BoxSet`], not instance ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionStatus {
    Background,
    Determined(usize),
    /// `(i, j)` ordered so that `instance_id(i) < instance_id(j)`.
    Undetermined(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub feature: Vec<f64>,
    /// Ascending point ids.
    pub members: Vec<u32>,
    /// Ascending box indices.
    pub membership: Vec<usize>,
    pub status: RegionStatus,
}

/// Number of cloud points inside both boxes of each intersecting pair, keyed
/// by ascending box index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairCounts(HashMap<(usize, usize), usize>);

impl PairCounts {
    pub fn from_membership(point_membership: &[Vec<usize>]) -> Self {
        let mut counts = HashMap::new();
        for m in point_membership.iter().filter(|m| m.len() >= 2) {
            for (a, &i) in m.iter().enumerate() {
                for &j in &m[a + 1..] {
                    *counts.entry((i, j)).or_insert(0) += 1;
                }
            }
        }
        Self(counts)
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        let key = if i < j { (i, j) } else { (j, i) };
        self.0.get(&key).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct RegionTable {
    granularity: Granularity,
    dims: usize,
    regions: Vec<Region>,
    determined: Vec<Vec<usize>>,
    pairs: BTreeMap<(usize, usize), Vec<usize>>,
    pair_counts: PairCounts,
    point_membership: Vec<Vec<usize>>,
}

impl RegionTable {
    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    /// Determined regions of box `k`, ascending.
    pub fn determined_of(&self, k: usize) -> &[usize] {
        &self.determined[k]
    }

    /// Undetermined regions grouped by their assigned pair.
    pub fn pairs(&self) -> &BTreeMap<(usize, usize), Vec<usize>> {
        &self.pairs
    }

    pub fn pair_counts(&self) -> &PairCounts {
        &self.pair_counts
    }

    /// Boxes containing each point, as computed by [`point_box_membership`].
    pub fn point_membership(&self) -> &[Vec<usize>] {
        &self.point_membership
    }
}

/// Box indices containing each point (inclusive on every face).
pub fn point_box_membership(cloud: &PointCloud, boxes: &BoxSet) -> Vec<Vec<usize>> {
    cloud
        .positions()
        .par_iter()
        .map(|&p| {
            boxes
                .iter()
                .enumerate()
                .filter_map(|(k, b)| b.contains(p).then_some(k))
                .collect()
        })
        .collect()
}

/// Pair inside `membership` whose intersection holds the most scene points.
/// Ties go to the lexicographically smallest `(instance_id, instance_id)`.
pub fn select_dominant_pair(membership: &[usize], boxes: &BoxSet, counts: &PairCounts) -> (usize, usize) {
    assert!(membership.len() >= 2, "dominant pair needs at least two boxes");
    // (point count, instance ids, box indices)
    type Candidate = (usize, (u32, u32), (usize, usize));
    let mut best: Option<Candidate> = None;
    for (a, &x) in membership.iter().enumerate() {
        for &y in &membership[a + 1..] {
            let pair = ordered_pair(x, y, boxes);
            let ids = (boxes[pair.0].instance_id, boxes[pair.1].instance_id);
            let count = counts.get(x, y);
            let better = match best {
                None => true,
                Some((c, best_ids, _)) => count > c || (count == c && ids < best_ids),
            };
            if better {
                best = Some((count, ids, pair));
            }
        }
    }
    best.unwrap().2
}

fn ordered_pair(x: usize, y: usize, boxes: &BoxSet) -> (usize, usize) {
    if boxes[x].instance_id < boxes[y].instance_id {
        (x, y)
    } else {
        (y, x)
    }
}

/// Builds the region table. Without superpoints every point is a region.
/// Region features are `[x, y, z, r, g, b]` or rows of `features`, averaged
/// over superpoint members.
pub fn build_region_table(
    cloud: &PointCloud,
    boxes: &BoxSet,
    superpoints: Option<&SuperpointPartition>,
    features: Option<&FeatureMatrix>,
) -> Result<RegionTable> {
    let n = cloud.len();
    if let Some(f) = features {
        if f.rows() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: f.rows(),
            });
        }
    }
    if let Some(sp) = superpoints {
        if sp.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: sp.len(),
            });
        }
    }
    let dims = features.map_or(6, FeatureMatrix::dims);
    let point_feature = |p: usize, out: &mut [f64]| match features {
        Some(f) => {
            for (o, &v) in out.iter_mut().zip(f.row(p)) {
                *o += v as f64;
            }
        }
        None => {
            for (o, v) in out.iter_mut().zip(cloud.raw_feature(p)) {
                *o += v;
            }
        }
    };

    let point_membership = point_box_membership(cloud, boxes);
    let pair_counts = PairCounts::from_membership(&point_membership);

    let (granularity, groups) = match superpoints {
        None => (Granularity::Point, (0..n as u32).map(|p| vec![p]).collect::<Vec<_>>()),
        Some(sp) => (Granularity::Superpoint, sp.members()),
    };

    let regions: Vec<Region> = groups
        .into_par_iter()
        .map(|members| {
            let mut feature = vec![0.0; dims];
            for &p in &members {
                point_feature(p as usize, &mut feature);
            }
            let inv = 1.0 / members.len() as f64;
            feature.iter_mut().for_each(|v| *v *= inv);

            let membership = match granularity {
                Granularity::Point => point_membership[members[0] as usize].clone(),
                Granularity::Superpoint => {
                    let mut tally = vec![0usize; boxes.len()];
                    for &p in &members {
                        for &k in &point_membership[p as usize] {
                            tally[k] += 1;
                        }
                    }
                    tally
                        .iter()
                        .enumerate()
                        .filter_map(|(k, &c)| (2 * c > members.len()).then_some(k))
                        .collect()
                }
            };
            let status = match membership.as_slice() {
                [] => RegionStatus::Background,
                [k] => RegionStatus::Determined(*k),
                [x, y] => {
                    let (i, j) = ordered_pair(*x, *y, boxes);
                    RegionStatus::Undetermined(i, j)
                }
                many => {
                    let (i, j) = select_dominant_pair(many, boxes, &pair_counts);
                    RegionStatus::Undetermined(i, j)
                }
            };
            Region {
                feature,
                members,
                membership,
                status,
            }
        })
        .collect();

    let mut determined = vec![Vec::new(); boxes.len()];
    let mut pairs: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (r, region) in regions.iter().enumerate() {
        match region.status {
            RegionStatus::Background => {}
            RegionStatus::Determined(k) => determined[k].push(r),
            RegionStatus::Undetermined(i, j) => pairs.entry((i, j)).or_default().push(r),
        }
    }

    Ok(RegionTable {
        granularity,
        dims,
        regions,
        determined,
        pairs,
        pair_counts,
        point_membership,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapStats {
    /// Overlap multiplicity -> number of undetermined regions.
    pub histogram: BTreeMap<usize, usize>,
    pub fraction_two: Option<f64>,
}

pub fn overlap_statistics(table: &RegionTable) -> OverlapStats {
    let mut histogram = BTreeMap::new();
    for region in table.regions() {
        if let RegionStatus::Undetermined(..) = region.status {
            *histogram.entry(region.membership.len()).or_insert(0) += 1;
        }
    }
    let total: usize = histogram.values().sum();
    let fraction_two = (total > 0).then(|| histogram.get(&2).copied().unwrap_or(0) as f64 / total as f64);
    OverlapStats {
        histogram,
        fraction_two,
    }
}

/// GP inputs for one box pair.
#[derive(Debug, Clone)]
pub struct PairData {
    /// Training features, instance `i` rows first.
    pub x: DMatrix<f64>,
    /// 1 for instance `i`, 0 for instance `j`.
    pub f: DVector<f64>,
    pub x_star: DMatrix<f64>,
    pub train_regions: Vec<usize>,
    pub test_regions: Vec<usize>,
}

impl PairData {
    pub fn n_train(&self) -> usize {
        self.train_regions.len()
    }

    pub fn n_test(&self) -> usize {
        self.test_regions.len()
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Selects up to `cap` training regions by taking, round by round, the next
/// nearest determined region of every test region (closest first within a
/// round) until the union reaches `cap`. Returned ids are ascending.
pub fn nearest_subset(table: &RegionTable, candidates: &[usize], tests: &[usize], cap: usize) -> Vec<usize> {
    if candidates.len() <= cap {
        let mut all = candidates.to_vec();
        all.sort_unstable();
        return all;
    }
    let regions = table.regions();
    let ranked: Vec<Vec<(f64, usize)>> = tests
        .par_iter()
        .map(|&u| {
            let fu = &regions[u].feature;
            let mut d: Vec<(f64, usize)> = candidates
                .iter()
                .map(|&c| (squared_distance(fu, &regions[c].feature), c))
                .collect();
            let by = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if d.len() > cap {
                d.select_nth_unstable_by(cap - 1, by);
                d.truncate(cap);
            }
            d.sort_unstable_by(by);
            d
        })
        .collect();

    let mut chosen = vec![false; regions.len()];
    let mut out = Vec::with_capacity(cap);
    'rounds: for rank in 0..cap {
        let mut round: Vec<(f64, usize)> = ranked.iter().filter_map(|r| r.get(rank).copied()).collect();
        if round.is_empty() {
            break;
        }
        round.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (_, c) in round {
            if !chosen[c] {
                chosen[c] = true;
                out.push(c);
                if out.len() == cap {
                    break 'rounds;
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Training and test data for pair `(i, j)`.
pub fn pair_training_data(table: &RegionTable, pair: (usize, usize), cap: Option<usize>, boxes: &BoxSet) -> Result<PairData> {
    let (i, j) = pair;
    let tests = table.pairs().get(&pair).cloned().unwrap_or_default();
    for side in [i, j] {
        if table.determined_of(side).is_empty() {
            return Err(Error::DegeneratePair {
                first: boxes[i].instance_id,
                second: boxes[j].instance_id,
                missing: boxes[side].instance_id,
            });
        }
    }

    let mut train: Vec<usize> = table.determined_of(i).to_vec();
    train.extend_from_slice(table.determined_of(j));
    if let Some(cap) = cap {
        if train.len() > cap && !tests.is_empty() {
            let keep = nearest_subset(table, &train, &tests, cap);
            let keep_set: std::collections::HashSet<usize> = keep.into_iter().collect();
            train.retain(|r| keep_set.contains(r));
        }
    }

    let regions = table.regions();
    let dims = table.dims();
    let x = DMatrix::from_fn(train.len(), dims, |r, c| regions[train[r]].feature[c]);
    let f = DVector::from_iterator(
        train.len(),
        train
            .iter()
            .map(|&r| if regions[r].status == RegionStatus::Determined(i) { 1.0 } else { 0.0 }),
    );
    let x_star = DMatrix::from_fn(tests.len(), dims, |r, c| regions[tests[r]].feature[c]);
    Ok(PairData {
        x,
        f,
        x_star,
        train_regions: train,
        test_regions: tests,
    })
}
