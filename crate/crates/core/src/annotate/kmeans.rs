use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AnnotateError, DenseMatrix};

pub const DEFAULT_K: usize = 2000;
pub const DEFAULT_MAX_ITERS: usize = 100;
/// Stop once relative inertia improvement falls below this.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig { k: DEFAULT_K, seed: 0, max_iters: DEFAULT_MAX_ITERS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    /// Point ids in input order; `assignment[i]` belongs to `ids[i]`.
    pub ids: Vec<String>,
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    pub inertia: f64,
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

impl Clustering {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.centroids.len()];
        for (i, &c) in self.assignment.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cent) in centroids.iter().enumerate() {
        let d = sq_dist(point, cent);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding followed by Lloyd iterations.
///
/// Points are processed in a canonical order (coordinates, then id) so the
/// result for a given seed does not depend on input order.
pub fn kmeans(x: &DenseMatrix, ids: &[String], config: &KMeansConfig) -> Result<Clustering, AnnotateError> {
    let n = x.rows;
    let k = config.k;
    assert_eq!(ids.len(), n, "one id per row");
    if k == 0 || n < k {
        return Err(AnnotateError::TooFewPoints { n, k });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        x.row(a)
            .iter()
            .zip(x.row(b))
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| ids[a].cmp(&ids[b]))
    });
    let pts: Vec<&[f64]> = order.iter().map(|&i| x.row(i)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut centroids = seed_plus_plus(&pts, k, &mut rng);

    let assign = |centroids: &[Vec<f64>]| -> (Vec<usize>, Vec<f64>) {
        pts.par_iter().map(|p| nearest(p, centroids)).unzip()
    };

    let (mut assignment, mut dists) = assign(&centroids);
    let mut inertia: f64 = dists.iter().sum();
    let mut history = vec![inertia];
    let mut iterations = 0;

    while iterations < config.max_iters && inertia > 0.0 {
        let next = update_centroids(&pts, &assignment, &dists, k);
        let (next_assignment, next_dists) = assign(&next);
        let next_inertia: f64 = next_dists.iter().sum();
        if next_inertia > inertia {
            break;
        }
        iterations += 1;
        let improvement = (inertia - next_inertia) / inertia;
        centroids = next;
        assignment = next_assignment;
        dists = next_dists;
        inertia = next_inertia;
        history.push(inertia);
        if improvement < CONVERGENCE_TOLERANCE {
            break;
        }
    }

    let mut final_assignment = vec![0; n];
    for (pos, &orig) in order.iter().enumerate() {
        final_assignment[orig] = assignment[pos];
    }
    Ok(Clustering {
        ids: ids.to_vec(),
        centroids,
        assignment: final_assignment,
        inertia,
        inertia_history: history,
        iterations,
    })
}

fn seed_plus_plus(pts: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = pts.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![pts[first].to_vec()];
    let mut d2: Vec<f64> = pts.par_iter().map(|p| sq_dist(p, pts[first])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                acc += d;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.unwrap_or_else(|| chosen.iter().position(|c| !c).unwrap())
        } else {
            chosen.iter().position(|c| !c).unwrap()
        };
        chosen[pick] = true;
        let c = pts[pick].to_vec();
        d2.par_iter_mut().zip(pts.par_iter()).for_each(|(d, p)| *d = d.min(sq_dist(p, &c)));
        centroids.push(c);
    }
    centroids
}

fn update_centroids(pts: &[&[f64]], assignment: &[usize], dists: &[f64], k: usize) -> Vec<Vec<f64>> {
    let dim = pts.first().map_or(0, |p| p.len());
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in pts.iter().zip(assignment) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p.iter()) {
            *s += v;
        }
    }
    let empty: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
    if !empty.is_empty() {
        // Reseed empty clusters from the points farthest from their centroid.
        let mut far: Vec<usize> = (0..pts.len()).collect();
        far.sort_by(|&a, &b| dists[b].total_cmp(&dists[a]).then(a.cmp(&b)));
        let mut used: Vec<&[f64]> = Vec::new();
        let mut candidates = far.into_iter();
        for c in empty {
            for i in candidates.by_ref() {
                if used.iter().all(|u| *u != pts[i]) {
                    used.push(pts[i]);
                    sums[c] = pts[i].to_vec();
                    counts[c] = 1;
                    break;
                }
            }
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, n)| if n == 0 { s } else { s.into_iter().map(|v| v / n as f64).collect() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("p{i:05}")).collect()
    }

    fn blobs(centres: &[[f64; 2]], per: usize, sd: f64, seed: u64) -> (DenseMatrix, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sd).unwrap();
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        for (c, centre) in centres.iter().enumerate() {
            for _ in 0..per {
                rows.push(vec![centre[0] + noise.sample(&mut rng), centre[1] + noise.sample(&mut rng)]);
                truth.push(c);
            }
        }
        (DenseMatrix::from_rows(&rows), truth)
    }

    #[test]
    fn k_equal_n_gives_zero_inertia() {
        let (x, _) = blobs(&[[0.0, 0.0], [5.0, 5.0]], 10, 1.0, 1);
        let cfg = KMeansConfig { k: 20, seed: 4, max_iters: 100 };
        let c = kmeans(&x, &ids(20), &cfg).unwrap();
        assert_eq!(c.inertia, 0.0);
        let mut seen = c.assignment.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 20);
    }

    #[test]
    fn recovers_separated_blobs() {
        let centres = [[0.0, 0.0], [20.0, 0.0], [0.0, 20.0], [20.0, 20.0]];
        let (x, truth) = blobs(&centres, 50, 0.5, 2);
        let c = kmeans(&x, &ids(200), &KMeansConfig { k: 4, seed: 9, max_iters: 100 }).unwrap();
        for i in 0..200 {
            for j in 0..200 {
                assert_eq!(truth[i] == truth[j], c.assignment[i] == c.assignment[j]);
            }
        }
    }

    #[test]
    fn two_blobs_match_membership() {
        let (x, truth) = blobs(&[[0.0, 0.0], [10.0, 0.0]], 100, 1.0, 12);
        let c = kmeans(&x, &ids(200), &KMeansConfig { k: 2, seed: 1, max_iters: 100 }).unwrap();
        for i in 0..200 {
            assert_eq!(c.assignment[i] == c.assignment[0], truth[i] == truth[0]);
        }
    }

    #[test]
    fn defaults() {
        let d = KMeansConfig::default();
        assert_eq!((d.k, d.max_iters), (2000, 100));
    }

    #[test]
    fn too_few_points() {
        let (x, _) = blobs(&[[0.0, 0.0]], 3, 1.0, 1);
        let err = kmeans(&x, &ids(3), &KMeansConfig { k: 4, seed: 0, max_iters: 10 }).unwrap_err();
        assert!(matches!(err, AnnotateError::TooFewPoints { n: 3, k: 4 }));
    }

    #[test]
    fn duplicate_points_do_not_break_seeding() {
        let x = DenseMatrix::from_rows(&vec![vec![1.0, 1.0]; 6]);
        let c = kmeans(&x, &ids(6), &KMeansConfig { k: 3, seed: 0, max_iters: 10 }).unwrap();
        assert_eq!(c.inertia, 0.0);
        assert_eq!(c.centroids.len(), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn inertia_is_monotone(seed in 0u64..1000, k in 1usize..8) {
            let (x, _) = blobs(&[[0.0, 0.0], [3.0, 1.0], [1.0, 4.0]], 30, 1.5, seed);
            let c = kmeans(&x, &ids(90), &KMeansConfig { k, seed, max_iters: 100 }).unwrap();
            prop_assert!(c.inertia_history.windows(2).all(|w| w[1] <= w[0]));
            prop_assert_eq!(*c.inertia_history.last().unwrap(), c.inertia);
            // Inertia matches the assignment.
            let recomputed: f64 = (0..x.rows).map(|i| sq_dist(x.row(i), &c.centroids[c.assignment[i]])).sum();
            prop_assert!((recomputed - c.inertia).abs() <= 1e-9 * c.inertia.max(1.0));
        }

        #[test]
        fn invariant_to_input_permutation(seed in 0u64..1000, shuffle in 0u64..1000) {
            use rand::seq::SliceRandom;
            let (x, _) = blobs(&[[0.0, 0.0], [6.0, 1.0], [1.0, 7.0]], 20, 1.0, seed);
            let names = ids(60);
            let cfg = KMeansConfig { k: 3, seed, max_iters: 100 };
            let base = kmeans(&x, &names, &cfg).unwrap();

            let mut perm: Vec<usize> = (0..60).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
            let rows: Vec<Vec<f64>> = perm.iter().map(|&i| x.row(i).to_vec()).collect();
            let pnames: Vec<String> = perm.iter().map(|&i| names[i].clone()).collect();
            let other = kmeans(&DenseMatrix::from_rows(&rows), &pnames, &cfg).unwrap();

            prop_assert_eq!(base.inertia, other.inertia);
            for (pos, &orig) in perm.iter().enumerate() {
                prop_assert_eq!(base.assignment[orig], other.assignment[pos]);
            }
        }
    }
}
