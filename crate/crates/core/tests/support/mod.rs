//! Independent reference implementations used as test oracles. None of
//! this code calls into the crate's evaluation paths.

#![allow(dead_code)]

/// Trapezoid `a <= b <= c <= d`; a zero-width edge is a shoulder that holds
/// 1 at the edge point.
pub fn trap(x: f64, a: f64, b: f64, c: f64, d: f64) -> f64 {
    let left = if b > a {
        (x - a) / (b - a)
    } else if x >= a {
        1.0
    } else {
        0.0
    };
    let right = if d > c {
        (d - x) / (d - c)
    } else if x <= d {
        1.0
    } else {
        0.0
    };
    left.min(right).clamp(0.0, 1.0)
}

pub fn tri(x: f64, a: f64, b: f64, c: f64) -> f64 {
    trap(x, a, b, b, c)
}

pub const SPEED_MAX: f64 = 27.78;
pub const OUTPUT_MAX: f64 = 87.1;

/// Speed terms in rank order: Resident, Move, Normal, Slow, Fast.
pub fn speed_terms(x: f64) -> [f64; 5] {
    [
        tri(x, 0.0, 0.0, 8.3),
        tri(x, 5.0, 8.05, 11.1),
        tri(x, 8.3, 13.75, 19.2),
        trap(x, 10.0, 10.0 + 12.2 / 3.0, 10.0 + 2.0 * 12.2 / 3.0, 22.2),
        trap(x, 13.0, 13.0 + 14.78 / 3.0, 27.78, 27.78),
    ]
}

/// Gain terms: Weak, Medium, Excellent.
pub fn gain_terms(x: f64) -> [f64; 3] {
    [tri(x, 0.0, 0.0, 0.4), tri(x, 0.1, 0.5, 0.9), tri(x, 0.5, 1.0, 1.0)]
}

/// Output terms: Bad, Good, VGood.
pub fn output_terms(y: f64) -> [f64; 3] {
    [tri(y, 0.0, 16.4, 32.8), tri(y, 17.0, 40.0, 63.0), trap(y, 40.0, 55.7, 87.1, 87.1)]
}

/// `[speed, sender gain, receiver gain] -> output` term indices.
pub const RULES: [([usize; 3], usize); 9] = [
    ([0, 1, 1], 0),
    ([1, 1, 1], 0),
    ([2, 1, 1], 0),
    ([3, 1, 1], 1),
    ([4, 1, 1], 1),
    ([4, 1, 2], 2),
    ([0, 0, 1], 0),
    ([3, 2, 0], 0),
    ([4, 1, 0], 0),
];

/// Firing level of each output term under min/max.
fn clip_levels(s: f64, sg: f64, rg: f64) -> [f64; 3] {
    let (ms, mg, mr) = (speed_terms(s), gain_terms(sg), gain_terms(rg));
    let mut clip = [0.0f64; 3];
    for (ante, out) in RULES {
        let w = ms[ante[0]].min(mg[ante[1]]).min(mr[ante[2]]);
        clip[out] = clip[out].max(w);
    }
    clip
}

/// Mamdani min/max with a midpoint Riemann-sum centroid over `samples`
/// points. `None` when no rule fires.
pub fn centroid(s: f64, sg: f64, rg: f64, samples: usize) -> Option<f64> {
    CentroidOracle::new(samples).eval(s, sg, rg)
}

/// [`centroid`] with the output memberships at every midpoint tabulated
/// once, for evaluating many inputs on one grid.
pub struct CentroidOracle {
    points: Vec<(f64, [f64; 3])>,
}

impl CentroidOracle {
    pub fn new(samples: usize) -> Self {
        let h = OUTPUT_MAX / samples as f64;
        let points = (0..samples)
            .map(|i| {
                let y = (i as f64 + 0.5) * h;
                (y, output_terms(y))
            })
            .collect();
        CentroidOracle { points }
    }

    pub fn eval(&self, s: f64, sg: f64, rg: f64) -> Option<f64> {
        let clip = clip_levels(s, sg, rg);
        if clip.iter().all(|&w| w == 0.0) {
            return None;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (y, o) in &self.points {
            let mu = clip[0].min(o[0]).max(clip[1].min(o[1])).max(clip[2].min(o[2]));
            num += y * mu;
            den += mu;
        }
        (den > 0.0).then(|| num / den)
    }
}

/// Measure of a union of intervals by sweeping sorted endpoints.
pub fn union_len(intervals: &[(f64, f64)]) -> f64 {
    let mut v: Vec<(f64, f64)> = intervals.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = 0.0;
    let mut cur_end = f64::NEG_INFINITY;
    let mut cur_start = f64::NEG_INFINITY;
    for (s, e) in v {
        if s > cur_end {
            if cur_end > cur_start {
                total += cur_end - cur_start;
            }
            cur_start = s;
            cur_end = e;
        } else {
            cur_end = cur_end.max(e);
        }
    }
    if cur_end > cur_start {
        total += cur_end - cur_start;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleOutcome {
    Delivered,
    Collision,
    Weak,
}

/// Pairwise overlap check: a visible frame is lost if any other visible
/// frame or any own transmission overlaps it by a positive amount.
pub fn collision_oracle(
    arrivals: &[(f64, f64, f64)],
    own_tx: &[(f64, f64)],
    sensitivity: f64,
) -> (Vec<OracleOutcome>, f64) {
    let overlaps = |a: (f64, f64), b: (f64, f64)| a.0.max(b.0) < a.1.min(b.1);
    let visible: Vec<bool> = arrivals.iter().map(|a| a.2 >= sensitivity).collect();
    let outcomes = arrivals
        .iter()
        .enumerate()
        .map(|(i, a)| {
            if !visible[i] {
                return OracleOutcome::Weak;
            }
            let hit =
                arrivals.iter().enumerate().any(|(j, b)| j != i && visible[j] && overlaps((a.0, a.1), (b.0, b.1)))
                    || own_tx.iter().any(|&t| overlaps((a.0, a.1), t));
            if hit {
                OracleOutcome::Collision
            } else {
                OracleOutcome::Delivered
            }
        })
        .collect();
    let busy: Vec<(f64, f64)> = arrivals.iter().zip(&visible).filter(|(_, v)| **v).map(|(a, _)| (a.0, a.1)).collect();
    (outcomes, union_len(&busy))
}

/// Gamma function at positive integers and half-integers.
fn gamma_half(a: f64) -> f64 {
    let mut g = if a.fract() == 0.0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if a.fract() == 0.0 { 1.0 } else { 0.5 };
    while x < a - 1e-9 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Upper tail of the chi-square distribution with `k` degrees of freedom,
/// from the series for the lower regularized incomplete gamma function.
pub fn chi_square_sf(x: f64, k: u32) -> f64 {
    let a = f64::from(k) / 2.0;
    let z = x / 2.0;
    let mut term = 1.0 / a;
    let mut sum = term;
    for n in 1..500 {
        term *= z / (a + n as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    let lower = z.powf(a) * (-z).exp() * sum / gamma_half(a);
    1.0 - lower
}

/// Pearson statistic against a uniform expectation.
pub fn chi_square_uniform(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let e = n as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

/// Upper 1% critical value of chi-square with 15 degrees of freedom.
pub const CHI2_CRIT_DF15_P01: f64 = 30.578;

/// A randomized multi-node transmission schedule on a dyadic time grid, so
/// frames that touch end-to-start do so exactly.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub positions: Vec<(f64, f64)>,
    pub gains: Vec<f64>,
    /// `(sender, start, end)`, ids are indices.
    pub frames: Vec<(usize, f64, f64)>,
}

pub fn random_schedule<R: rand::Rng>(rng: &mut R, nodes: usize) -> Schedule {
    let tick = 1.0 / 65_536.0;
    let positions = (0..nodes).map(|_| (rng.gen_range(0.0..600.0), rng.gen_range(0.0..600.0))).collect();
    let gains = (0..nodes).map(|_| rng.gen_range(0.0..1.0)).collect();
    let mut frames = Vec::new();
    for n in 0..nodes {
        let mut t = rng.gen_range(0..8u32);
        for _ in 0..rng.gen_range(1..=4) {
            let len = rng.gen_range(1..=6u32);
            frames.push((n, f64::from(t) * tick, f64::from(t + len) * tick));
            t += len + rng.gen_range(0..10u32);
        }
    }
    Schedule { positions, gains, frames }
}

/// Free-space received power, written out directly.
pub fn friis(pt: f64, sg: f64, rg: f64, d: f64, f: f64) -> f64 {
    let lambda = 299_792_458.0 / f;
    let d = d.max(1.0);
    pt * sg * rg * (lambda / (4.0 * std::f64::consts::PI * d)).powi(2)
}

/// Means of the two synthetic clusters: a slow, weakly connected group and a
/// fast, well connected one.
pub const BLOB_MEANS: [[f64; 4]; 2] = [[4.0, 0.25, 0.3, 18.0], [20.0, 0.75, 0.8, 65.0]];
const BLOB_SD: [f64; 4] = [1.0, 0.03, 0.03, 3.0];

/// Points per blob. Large enough that the sample mean of every coordinate
/// sits within about 1% of its true mean (one standard error), so a 5%
/// recovery tolerance measures the clustering rather than sampling noise.
pub const BLOB_POINTS: usize = 1000;

/// Gaussian samples around [`BLOB_MEANS`] via Box-Muller.
pub fn two_blobs<R: rand::Rng>(rng: &mut R, per_blob: usize) -> Vec<[f64; 4]> {
    let mut normal = || {
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut rows = Vec::with_capacity(2 * per_blob);
    for mean in BLOB_MEANS {
        for _ in 0..per_blob {
            let mut p = [0.0; 4];
            for d in 0..4 {
                p[d] = mean[d] + BLOB_SD[d] * normal();
            }
            rows.push(p);
        }
    }
    rows
}

/// Largest per-coordinate relative error after pairing each center with its
/// closest true mean.
pub fn worst_center_error(centers: &[[f64; 4]]) -> f64 {
    let rel = |c: &[f64; 4], m: &[f64; 4]| (0..4).map(|d| ((c[d] - m[d]) / m[d]).abs()).fold(0.0, f64::max);
    let straight = rel(&centers[0], &BLOB_MEANS[0]).max(rel(&centers[1], &BLOB_MEANS[1]));
    let swapped = rel(&centers[0], &BLOB_MEANS[1]).max(rel(&centers[1], &BLOB_MEANS[0]));
    straight.min(swapped)
}

/// Count of iterations whose objective rose above the previous one beyond
/// floating-point noise.
pub fn objective_increases(history: &[f64]) -> usize {
    history.windows(2).filter(|w| w[1] > w[0] * (1.0 + 1e-12)).count()
}
