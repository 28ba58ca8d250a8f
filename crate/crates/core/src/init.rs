//! Initial partitions and starting values for the ECM iterations.
//!
//! k-bumps is deterministic: a Gaussian kernel density estimate is scanned for
//! local maxima, the G highest become cluster centres and every observation
//! joins its nearest centre. k-means and k-medoids depend on a seeded stream.

use crate::bs::{alpha_from_mode, BsParams};
use crate::error::{Error, Result};
use crate::mixture::MixtureParams;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

const KDE_GRID_POINTS: usize = 1024;
// Gaussian kernel contributions beyond 9 bandwidths are below 1e-17.
const KDE_CUTOFF: f64 = 9.0;
const CLUSTER_MAX_ITER: usize = 50;
pub const ALPHA_INIT_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitStrategy {
    KBumps,
    KMeans,
    KMedoids,
}

impl InitStrategy {
    pub const ALL: [InitStrategy; 3] = [
        InitStrategy::KMeans,
        InitStrategy::KMedoids,
        InitStrategy::KBumps,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            InitStrategy::KBumps => "kbumps",
            InitStrategy::KMeans => "kmeans",
            InitStrategy::KMedoids => "kmedoids",
        }
    }
}

impl fmt::Display for InitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "kbumps" => Ok(InitStrategy::KBumps),
            "kmeans" => Ok(InitStrategy::KMeans),
            "kmedoids" => Ok(InitStrategy::KMedoids),
            other => Err(Error::params(format!(
                "unknown initialization strategy '{other}'"
            ))),
        }
    }
}

/// Hard cluster memberships; labels are 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    g: usize,
}

impl Partition {
    /// Every cluster in `0..g` must be non-empty.
    pub fn new(labels: Vec<usize>, g: usize) -> Result<Self> {
        if g == 0 {
            return Err(Error::params("partition needs at least one cluster"));
        }
        let mut counts = vec![0usize; g];
        for &l in &labels {
            if l >= g {
                return Err(Error::params(format!(
                    "label {l} out of range for {g} clusters"
                )));
            }
            counts[l] += 1;
        }
        if let Some(j) = counts.iter().position(|&c| c == 0) {
            return Err(Error::params(format!("cluster {j} is empty")));
        }
        Ok(Self { labels, g })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_clusters(&self) -> usize {
        self.g
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.g];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Relabels clusters through `map[old] = new`.
    pub fn relabeled(&self, map: &[usize]) -> Result<Self> {
        Self::new(self.labels.iter().map(|&l| map[l]).collect(), self.g)
    }
}

fn check_inputs(data: &[f64], g: usize) -> Result<()> {
    if g == 0 {
        return Err(Error::params("number of components must be at least 1"));
    }
    if data.len() < g {
        return Err(Error::params(format!(
            "{} observations cannot form {g} clusters",
            data.len()
        )));
    }
    if let Some(y) = data.iter().find(|y| !(y.is_finite() && **y > 0.0)) {
        return Err(Error::domain(format!(
            "observations must be positive and finite, got {y}"
        )));
    }
    Ok(())
}

fn sorted_copy(data: &[f64]) -> Vec<f64> {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Type-7 sample quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule of thumb, `0.9 min(sd, IQR/1.34) n^{−1/5}`.
pub fn silverman_bandwidth(data: &[f64]) -> f64 {
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let sd = if data.len() > 1 {
        (data.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let sorted = sorted_copy(data);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

/// Gaussian KDE on an evenly spaced grid over `[min, max]`.
pub fn kde_on_grid(data: &[f64], bandwidth: f64, points: usize) -> (Vec<f64>, Vec<f64>) {
    let sorted = sorted_copy(data);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let norm = 1.0 / (sorted.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let grid: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let density = grid
        .iter()
        .map(|&x| {
            let start = sorted.partition_point(|&y| y < x - KDE_CUTOFF * bandwidth);
            let end = sorted.partition_point(|&y| y <= x + KDE_CUTOFF * bandwidth);
            sorted[start..end]
                .iter()
                .map(|&y| {
                    let u = (x - y) / bandwidth;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    (grid, density)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KBumps {
    pub partition: Partition,
    /// Bump maxima used as cluster centres, ascending (empty on fallback).
    pub maxima: Vec<f64>,
    /// The density showed fewer than G usable bumps and the quantile split was used.
    pub fallback: bool,
}

/// Splits the sorted data into G runs of (nearly) equal size.
pub fn quantile_partition(data: &[f64], g: usize) -> Result<Partition> {
    check_inputs(data, g)?;
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| data[i].total_cmp(&data[j]).then(i.cmp(&j)));
    let mut labels = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        labels[i] = rank * g / n;
    }
    Partition::new(labels, g)
}

fn nearest(centres: &[f64], y: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, &c) in centres.iter().enumerate() {
        let d = (y - c).abs();
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

pub fn kbumps_partition(data: &[f64], g: usize) -> Result<KBumps> {
    check_inputs(data, g)?;
    let fallback = || -> Result<KBumps> {
        Ok(KBumps {
            partition: quantile_partition(data, g)?,
            maxima: Vec::new(),
            fallback: true,
        })
    };
    if g == 1 {
        return Ok(KBumps {
            partition: Partition::new(vec![0; data.len()], 1)?,
            maxima: Vec::new(),
            fallback: false,
        });
    }
    let h = silverman_bandwidth(data);
    if !(h > 0.0) {
        return fallback();
    }
    let (grid, dens) = kde_on_grid(data, h, KDE_GRID_POINTS);
    let last = dens.len() - 1;
    let mut peaks: Vec<(f64, f64)> = (0..=last)
        .filter(|&i| {
            let left = i == 0 || dens[i] > dens[i - 1];
            let right = i == last || dens[i] >= dens[i + 1];
            let edge_ok =
                (i != 0 || dens[0] > dens[1]) && (i != last || dens[last] > dens[last - 1]);
            left && right && edge_ok
        })
        .map(|i| (grid[i], dens[i]))
        .collect();
    if peaks.len() < g {
        return fallback();
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
    let mut maxima: Vec<f64> = peaks[..g].iter().map(|p| p.0).collect();
    maxima.sort_by(f64::total_cmp);
    let labels = data.iter().map(|&y| nearest(&maxima, y)).collect();
    match Partition::new(labels, g) {
        Ok(partition) => Ok(KBumps {
            partition,
            maxima,
            fallback: false,
        }),
        Err(_) => fallback(),
    }
}

fn assign(data: &[f64], centres: &[f64]) -> Vec<usize> {
    data.iter().map(|&y| nearest(centres, y)).collect()
}

/// Moves the centre of each empty cluster onto the point farthest from its
/// own centre. Returns true if anything changed.
fn reseed_empty(data: &[f64], centres: &mut [f64], labels: &mut [usize]) -> bool {
    let g = centres.len();
    let mut changed = false;
    for j in 0..g {
        if labels.contains(&j) {
            continue;
        }
        let far = (0..data.len())
            .max_by(|&a, &b| {
                let da = (data[a] - centres[labels[a]]).abs();
                let db = (data[b] - centres[labels[b]]).abs();
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("non-empty data");
        centres[j] = data[far];
        labels[far] = j;
        changed = true;
    }
    changed
}

/// Lloyd's algorithm with k-means++ seeding.
pub fn kmeans_partition<R: Rng + ?Sized>(data: &[f64], g: usize, rng: &mut R) -> Result<Partition> {
    check_inputs(data, g)?;
    let n = data.len();
    let mut centres = Vec::with_capacity(g);
    centres.push(data[rng.random_range(0..n)]);
    while centres.len() < g {
        let d2: Vec<f64> = data
            .iter()
            .map(|&y| {
                centres
                    .iter()
                    .map(|&c| (y - c) * (y - c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centres.push(data[next]);
    }

    let mut labels = assign(data, &centres);
    reseed_empty(data, &mut centres, &mut labels);
    for _ in 0..CLUSTER_MAX_ITER {
        let mut sums = vec![0.0; g];
        let mut counts = vec![0usize; g];
        for (&y, &l) in data.iter().zip(&labels) {
            sums[l] += y;
            counts[l] += 1;
        }
        for j in 0..g {
            if counts[j] > 0 {
                centres[j] = sums[j] / counts[j] as f64;
            }
        }
        let mut next = assign(data, &centres);
        reseed_empty(data, &mut centres, &mut next);
        if next == labels {
            break;
        }
        labels = next;
    }
    Partition::new(labels, g)
}

/// Alternating k-medoids: assign to the nearest medoid, then move each medoid
/// to the cluster member minimizing total absolute deviation (a median).
pub fn kmedoids_partition<R: Rng + ?Sized>(
    data: &[f64],
    g: usize,
    rng: &mut R,
) -> Result<Partition> {
    check_inputs(data, g)?;
    let n = data.len();
    let picks = rand::seq::index::sample(rng, n, g);
    let mut medoids: Vec<f64> = picks.iter().map(|i| data[i]).collect();
    let mut labels = assign(data, &medoids);
    reseed_empty(data, &mut medoids, &mut labels);
    for _ in 0..CLUSTER_MAX_ITER {
        for (j, medoid) in medoids.iter_mut().enumerate() {
            let mut members: Vec<f64> = data
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == j)
                .map(|(&y, _)| y)
                .collect();
            if members.is_empty() {
                continue;
            }
            members.sort_by(f64::total_cmp);
            *medoid = members[(members.len() - 1) / 2];
        }
        let mut next = assign(data, &medoids);
        reseed_empty(data, &mut medoids, &mut next);
        if next == labels {
            break;
        }
        labels = next;
    }
    Partition::new(labels, g)
}

/// Modified moment estimates per cluster: with arithmetic mean s and harmonic
/// mean r, `β = sqrt(s·r)` and `α = sqrt(2(sqrt(s/r) − 1))`, α floored at 1e-3.
pub fn modified_moments(values: &[f64]) -> Result<BsParams> {
    if values.is_empty() {
        return Err(Error::params("cannot estimate moments of an empty cluster"));
    }
    let n = values.len() as f64;
    let s = values.iter().sum::<f64>() / n;
    let r = n / values.iter().map(|y| 1.0 / y).sum::<f64>();
    let beta = (s * r).sqrt();
    let ratio = (s / r).sqrt() - 1.0;
    let alpha = if ratio > 0.0 {
        (2.0 * ratio).sqrt()
    } else {
        0.0
    };
    BsParams::new(alpha.max(ALPHA_INIT_FLOOR), beta)
}

fn cluster_values(data: &[f64], partition: &Partition) -> Vec<Vec<f64>> {
    let mut groups = vec![Vec::new(); partition.n_clusters()];
    for (&y, &l) in data.iter().zip(partition.labels()) {
        groups[l].push(y);
    }
    groups
}

/// Starting mixture from a hard partition: cluster fractions for weights and
/// modified moment estimates within each cluster.
pub fn moment_init(data: &[f64], partition: &Partition) -> Result<MixtureParams> {
    if data.len() != partition.labels().len() {
        return Err(Error::params("partition length differs from data length"));
    }
    let n = data.len() as f64;
    let groups = cluster_values(data, partition);
    let weights = groups.iter().map(|g| g.len() as f64 / n).collect();
    let components = groups
        .iter()
        .map(|g| modified_moments(g))
        .collect::<Result<Vec<_>>>()?;
    MixtureParams::new(weights, components)
}

/// Variant for the k-bumps path: β from modified moments, α from the bump
/// maximum through the mode relation when the maximum lies below β.
pub fn bump_mode_init(
    data: &[f64],
    partition: &Partition,
    maxima: &[f64],
) -> Result<MixtureParams> {
    let base = moment_init(data, partition)?;
    if maxima.len() != base.n_components() {
        return Ok(base);
    }
    let components = base
        .components()
        .iter()
        .zip(maxima)
        .map(|(c, &m)| match alpha_from_mode(m, c.beta()) {
            Ok(a) if a >= ALPHA_INIT_FLOOR => BsParams::new(a, c.beta()),
            _ => Ok(*c),
        })
        .collect::<Result<Vec<_>>>()?;
    MixtureParams::new(base.weights().to_vec(), components)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitOutcome {
    pub partition: Partition,
    pub params: MixtureParams,
    pub fallback: bool,
}

/// Runs a strategy and converts its partition to starting values. The seed is
/// only consumed by the randomized strategies.
pub fn initialize(
    data: &[f64],
    g: usize,
    strategy: InitStrategy,
    seed: u64,
    bump_mode_alpha: bool,
) -> Result<InitOutcome> {
    let mut rng = crate::rng::stream(seed);
    let (partition, maxima, fallback) = match strategy {
        InitStrategy::KBumps => {
            let kb = kbumps_partition(data, g)?;
            (kb.partition, kb.maxima, kb.fallback)
        }
        InitStrategy::KMeans => (kmeans_partition(data, g, &mut rng)?, Vec::new(), false),
        InitStrategy::KMedoids => (kmedoids_partition(data, g, &mut rng)?, Vec::new(), false),
    };
    let params = if bump_mode_alpha && !maxima.is_empty() {
        bump_mode_init(data, &partition, &maxima)?
    } else {
        moment_init(data, &partition)?
    };
    Ok(InitOutcome {
        partition,
        params,
        fallback,
    })
}
