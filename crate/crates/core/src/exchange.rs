//! Sampling of exchangeable processes on a finite window and conditional
//! independence tests between coordinate windows.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};
use thiserror::Error;

pub const MAX_SAMPLES: usize = 10_000_000;
pub const MAX_ALPHABET: usize = 16;
pub const MAX_WINDOW: usize = 32;
/// Minimum average count per contingency cell.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;
const BLOCK_ROWS: usize = 8192;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExchangeError {
    #[error("{0}")]
    Bounds(String),
    #[error("insufficient samples for this window: {samples} samples over {cells} cells")]
    InsufficientSamples { samples: usize, cells: usize },
    #[error("coordinate {coord} outside the window 0..{n}")]
    CoordinateOutOfRange { coord: usize, n: usize },
    #[error("invalid generator parameter: {0}")]
    BadParameter(String),
}

pub type Result<T> = std::result::Result<T, ExchangeError>;

/// Law of the process on the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Generator {
    /// iid coordinates, uniform on the alphabet
    IidUniform { alphabet: usize },
    /// iid bits equal to 1 with probability `q`
    IidBiased { q: f64 },
    /// a single uniform draw copied to every coordinate
    ConstantCoupling { alphabet: usize },
    /// pick coin `p1` with probability `weight`, else `p2`, then flip it
    /// independently at every coordinate
    TwoCoinMixture { p1: f64, p2: f64, weight: f64 },
}

impl Generator {
    pub fn alphabet(&self) -> usize {
        match self {
            Generator::IidUniform { alphabet } | Generator::ConstantCoupling { alphabet } => *alphabet,
            Generator::IidBiased { .. } | Generator::TwoCoinMixture { .. } => 2,
        }
    }

    fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(ExchangeError::BadParameter(format!("{name} = {p} is not a probability")))
            }
        };
        match *self {
            Generator::IidUniform { alphabet } | Generator::ConstantCoupling { alphabet } => {
                if !(1..=MAX_ALPHABET).contains(&alphabet) {
                    return Err(ExchangeError::Bounds(format!(
                        "alphabet size {alphabet} outside 1..={MAX_ALPHABET}"
                    )));
                }
                Ok(())
            }
            Generator::IidBiased { q } => prob("q", q),
            Generator::TwoCoinMixture { p1, p2, weight } => {
                prob("p1", p1)?;
                prob("p2", p2)?;
                prob("weight", weight)
            }
        }
    }

    fn fill_row(&self, rng: &mut ChaCha8Rng, row: &mut [u8]) {
        match *self {
            Generator::IidUniform { alphabet } => {
                for x in row.iter_mut() {
                    *x = rng.gen_range(0..alphabet) as u8;
                }
            }
            Generator::IidBiased { q } => {
                for x in row.iter_mut() {
                    *x = rng.gen_bool(q) as u8;
                }
            }
            Generator::ConstantCoupling { alphabet } => {
                let v = rng.gen_range(0..alphabet) as u8;
                row.fill(v);
            }
            Generator::TwoCoinMixture { p1, p2, weight } => {
                let p = if rng.gen_bool(weight) { p1 } else { p2 };
                for x in row.iter_mut() {
                    *x = rng.gen_bool(p) as u8;
                }
            }
        }
    }
}

/// `samples` draws of an `n`-coordinate window, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSample {
    pub n: usize,
    pub alphabet: usize,
    pub generator: Generator,
    pub seed: u64,
    draws: Vec<u8>,
}

impl ProcessSample {
    pub fn samples(&self) -> usize {
        if self.n == 0 {
            0
        } else {
            self.draws.len() / self.n
        }
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.draws[i * self.n..(i + 1) * self.n]
    }

    pub fn value(&self, i: usize, coord: usize) -> u8 {
        self.draws[i * self.n + coord]
    }

    /// Empirical frequency of each symbol at each coordinate.
    pub fn marginals(&self) -> Vec<Vec<f64>> {
        let s = self.samples() as f64;
        (0..self.n)
            .map(|c| {
                let mut counts = vec![0usize; self.alphabet];
                for i in 0..self.samples() {
                    counts[self.value(i, c) as usize] += 1;
                }
                counts.into_iter().map(|k| k as f64 / s).collect()
            })
            .collect()
    }

    /// The same draws with coordinates relabelled: new coordinate `i`
    /// holds old coordinate `perm[i]`.
    pub fn permute_coordinates(&self, perm: &[usize]) -> ProcessSample {
        let mut draws = Vec::with_capacity(self.draws.len());
        for i in 0..self.samples() {
            let row = self.row(i);
            draws.extend(perm.iter().map(|&c| row[c]));
        }
        ProcessSample {
            draws,
            ..self.clone()
        }
    }

    fn check_coords(&self, coords: &[usize]) -> Result<()> {
        match coords.iter().find(|&&c| c >= self.n) {
            Some(&coord) => Err(ExchangeError::CoordinateOutOfRange { coord, n: self.n }),
            None => Ok(()),
        }
    }

    /// Mixed-radix code of the listed coordinates in every row.
    fn encode(&self, coords: &[usize]) -> Vec<u32> {
        let a = self.alphabet as u32;
        (0..self.samples())
            .map(|i| {
                let row = self.row(i);
                coords.iter().fold(0u32, |acc, &c| acc * a + row[c] as u32)
            })
            .collect()
    }
}

/// Rows are filled in fixed blocks, each from its own ChaCha stream of the
/// master seed, so the result does not depend on the thread count.
pub fn sample_process(generator: &Generator, n: usize, samples: usize, seed: u64) -> Result<ProcessSample> {
    generator.validate()?;
    if samples > MAX_SAMPLES {
        return Err(ExchangeError::Bounds(format!("{samples} samples exceed {MAX_SAMPLES}")));
    }
    if n > MAX_WINDOW {
        return Err(ExchangeError::Bounds(format!("window {n} exceeds {MAX_WINDOW}")));
    }
    let mut draws = vec![0u8; samples * n];
    if n > 0 {
        draws
            .par_chunks_mut(BLOCK_ROWS * n)
            .enumerate()
            .for_each(|(block, chunk)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(block as u64);
                for row in chunk.chunks_mut(n) {
                    generator.fill_row(&mut rng, row);
                }
            });
    }
    Ok(ProcessSample {
        n,
        alphabet: generator.alphabet(),
        generator: generator.clone(),
        seed,
        draws,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiConfig {
    pub alpha: f64,
    pub permutations: usize,
}

impl Default for CiConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            permutations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiTestResult {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    /// Miller–Madow corrected conditional mutual information, in nats
    pub statistic: f64,
    pub threshold: f64,
    pub alpha: f64,
    pub permutations: usize,
    pub pass: bool,
}

/// Counts over (x, y, z) with dense codes.
struct Table {
    nx: usize,
    ny: usize,
    nz: usize,
}

impl Table {
    /// `Σ_z (r_z − 1)(c_z − 1)` over occupied rows and columns per stratum;
    /// shuffles within strata leave it unchanged.
    fn dof(&self, x: &[u32], y: &[u32], z: &[u32]) -> usize {
        let mut xz = vec![false; self.nx * self.nz];
        let mut yz = vec![false; self.ny * self.nz];
        for i in 0..x.len() {
            xz[z[i] as usize * self.nx + x[i] as usize] = true;
            yz[z[i] as usize * self.ny + y[i] as usize] = true;
        }
        (0..self.nz)
            .map(|zi| {
                let r = xz[zi * self.nx..(zi + 1) * self.nx].iter().filter(|&&b| b).count();
                let c = yz[zi * self.ny..(zi + 1) * self.ny].iter().filter(|&&b| b).count();
                r.saturating_sub(1) * c.saturating_sub(1)
            })
            .sum()
    }

    fn plug_in(&self, x: &[u32], y: &[u32], z: &[u32]) -> (f64, f64) {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        let mut xyz = vec![0u32; nx * ny * nz];
        let mut xz = vec![0u32; nx * nz];
        let mut yz = vec![0u32; ny * nz];
        let mut zc = vec![0u32; nz];
        for i in 0..x.len() {
            let (xi, yi, zi) = (x[i] as usize, y[i] as usize, z[i] as usize);
            xyz[(zi * nx + xi) * ny + yi] += 1;
            xz[zi * nx + xi] += 1;
            yz[zi * ny + yi] += 1;
            zc[zi] += 1;
        }
        let s = x.len() as f64;
        let mut mi = 0.0;
        for zi in 0..nz {
            for xi in 0..nx {
                let cxz = xz[zi * nx + xi];
                if cxz == 0 {
                    continue;
                }
                for yi in 0..ny {
                    let c = xyz[(zi * nx + xi) * ny + yi];
                    if c == 0 {
                        continue;
                    }
                    let ratio = (c as f64 * zc[zi] as f64) / (cxz as f64 * yz[zi * ny + yi] as f64);
                    mi += c as f64 / s * ratio.ln();
                }
            }
        }
        let nonzero = |v: &[u32]| v.iter().filter(|&&c| c > 0).count() as f64;
        let correction = (nonzero(&xz) + nonzero(&yz) - nonzero(&xyz) - nonzero(&zc)) / (2.0 * s);
        (mi, correction)
    }
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn stream_id(a: &[usize], b: &[usize]) -> u64 {
    let mask = |s: &[usize]| s.iter().fold(0u64, |m, &c| m | (1 << c));
    (mask(a) << 32) | mask(b)
}

/// Tests `X_A ⟂ X_B | X_{A∩B}`.
///
/// The null is built by shuffling the `B∖A` block within strata of the
/// `A∩B` block. The threshold is the upper `alpha` tail of a Gamma law
/// fitted to the null plug-in statistics, which keeps small Bonferroni
/// levels usable with a modest number of shuffles.
/// The observed Miller–Madow correction is added to both the statistic and
/// the threshold.
pub fn conditional_independence_test(
    sample: &ProcessSample,
    a: &[usize],
    b: &[usize],
    config: &CiConfig,
) -> Result<CiTestResult> {
    sample.check_coords(a)?;
    sample.check_coords(b)?;
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(ExchangeError::BadParameter(format!("alpha = {}", config.alpha)));
    }
    let (a, b) = (sorted(a), sorted(b));
    let meet: Vec<usize> = a.iter().copied().filter(|c| b.contains(c)).collect();
    let only_a: Vec<usize> = a.iter().copied().filter(|c| !meet.contains(c)).collect();
    let only_b: Vec<usize> = b.iter().copied().filter(|c| !meet.contains(c)).collect();
    let union = only_a.len() + only_b.len() + meet.len();
    let cells = (sample.alphabet as u128).pow(union as u32);
    if (sample.samples() as f64) < MIN_EXPECTED_COUNT * cells as f64 {
        return Err(ExchangeError::InsufficientSamples {
            samples: sample.samples(),
            cells: cells.min(usize::MAX as u128) as usize,
        });
    }
    let result = |statistic: f64, threshold: f64| CiTestResult {
        a: a.clone(),
        b: b.clone(),
        statistic,
        threshold,
        alpha: config.alpha,
        permutations: config.permutations,
        pass: statistic <= threshold,
    };
    if only_a.is_empty() || only_b.is_empty() {
        // one window's σ-algebra is contained in the intersection's
        return Ok(result(0.0, 0.0));
    }
    let x = sample.encode(&only_a);
    let z = sample.encode(&meet);
    let mut y = sample.encode(&only_b);
    let size = |k: usize| sample.alphabet.pow(k as u32);
    let table = Table {
        nx: size(only_a.len()),
        ny: size(only_b.len()),
        nz: size(meet.len()),
    };
    let (observed, correction) = table.plug_in(&x, &y, &z);

    let mut strata: Vec<Vec<usize>> = vec![Vec::new(); table.nz];
    for (i, &zi) in z.iter().enumerate() {
        strata[zi as usize].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sample.seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(stream_id(&a, &b));
    let mut null = Vec::with_capacity(config.permutations);
    let mut buf = Vec::new();
    for _ in 0..config.permutations {
        for stratum in &strata {
            buf.clear();
            buf.extend(stratum.iter().map(|&i| y[i]));
            buf.shuffle(&mut rng);
            for (&i, &v) in stratum.iter().zip(&buf) {
                y[i] = v;
            }
        }
        null.push(table.plug_in(&x, &y, &z).0);
    }
    let threshold = gamma_tail(&null, table.dof(&x, &y, &z), config.alpha);
    Ok(result(observed + correction, threshold + correction))
}

/// Upper `alpha` quantile of a Gamma law with shape `dof / 2` (the
/// large-sample law of `2s·I` is χ² with `dof` degrees of freedom) and scale
/// matched to the null mean. Fitting only the scale keeps the far tail
/// stable with a modest number of shuffles.
fn gamma_tail(null: &[f64], dof: usize, alpha: f64) -> f64 {
    let max = null.iter().copied().fold(0.0f64, f64::max);
    let mean = null.iter().sum::<f64>() / null.len().max(1) as f64;
    if dof == 0 || mean <= 0.0 {
        return max;
    }
    let shape = dof as f64 / 2.0;
    match Gamma::new(shape, shape / mean) {
        Ok(g) => g.inverse_cdf(1.0 - alpha),
        Err(_) => max,
    }
}

/// Every unordered pair of windows with `|A ∪ B| ≤ max_union` and neither
/// window contained in the other, tested at Bonferroni level
/// `alpha / family size`.
pub fn independence_battery(
    sample: &ProcessSample,
    max_union: usize,
    alpha: f64,
    permutations: usize,
) -> Result<Vec<CiTestResult>> {
    let n = sample.n;
    if n > 16 {
        return Err(ExchangeError::Bounds("battery window exceeds 16 coordinates".into()));
    }
    let members = |m: u32| (0..n).filter(|&c| m & (1 << c) != 0).collect::<Vec<_>>();
    let mut pairs = Vec::new();
    for ma in 1u32..(1 << n) {
        for mb in (ma + 1)..(1 << n) {
            if (ma | mb).count_ones() as usize > max_union || ma & mb == ma || ma & mb == mb {
                continue;
            }
            pairs.push((members(ma), members(mb)));
        }
    }
    let config = CiConfig {
        alpha: alpha / pairs.len().max(1) as f64,
        permutations,
    };
    pairs
        .iter()
        .map(|(a, b)| conditional_independence_test(sample, a, b, &config))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailDepth {
    pub depth: usize,
    pub window: Vec<usize>,
    pub mutual_information: f64,
    pub threshold: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub a: Vec<usize>,
    pub depths: Vec<TailDepth>,
    /// plug-in entropy of `X_A`, the ceiling for any mutual information
    pub entropy_a: f64,
    pub verdict: String,
    /// remote windows stop at the last coordinate of the sampled window
    pub truncation: String,
}

/// Mutual information between `X_A` and the window of `|A|` coordinates
/// starting `d` places after `max A`, for `d = 1..=max_depth`.
pub fn tail_triviality_probe(
    sample: &ProcessSample,
    a: &[usize],
    max_depth: usize,
    config: &CiConfig,
) -> Result<TailReport> {
    sample.check_coords(a)?;
    let a = sorted(a);
    let Some(&last) = a.last() else {
        return Err(ExchangeError::BadParameter("empty window".into()));
    };
    if last + max_depth + a.len() > sample.n {
        return Err(ExchangeError::Bounds(format!(
            "depth {max_depth} with |A| = {} needs {} coordinates, window has {}",
            a.len(),
            last + max_depth + a.len(),
            sample.n
        )));
    }
    // Bonferroni across depths
    let per_depth = CiConfig {
        alpha: config.alpha / max_depth.max(1) as f64,
        permutations: config.permutations,
    };
    let mut depths = Vec::new();
    for d in 1..=max_depth {
        let window: Vec<usize> = (0..a.len()).map(|j| last + d + j).collect();
        let r = conditional_independence_test(sample, &a, &window, &per_depth)?;
        depths.push(TailDepth {
            depth: d,
            window,
            mutual_information: r.statistic,
            threshold: r.threshold,
            significant: !r.pass,
        });
    }
    let entropy_a = plug_in_entropy(&sample.encode(&a), sample.alphabet.pow(a.len() as u32));
    let verdict = classify_tail(&depths, entropy_a);
    Ok(TailReport {
        a,
        depths,
        entropy_a,
        verdict,
        truncation: format!("remote windows bounded by coordinate {}", sample.n - 1),
    })
}

fn plug_in_entropy(codes: &[u32], cells: usize) -> f64 {
    let mut counts = vec![0usize; cells];
    for &c in codes {
        counts[c as usize] += 1;
    }
    let s = codes.len() as f64;
    counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / s;
            -p * p.ln()
        })
        .sum()
}

fn classify_tail(depths: &[TailDepth], entropy: f64) -> String {
    if depths.iter().all(|d| !d.significant) {
        return "tail trivial".into();
    }
    if !depths.iter().all(|d| d.significant) {
        return "dependence decays with depth".into();
    }
    let mis: Vec<f64> = depths.iter().map(|d| d.mutual_information).collect();
    let lo = mis.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mis.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // spread within the slack allowed by the null
    let slack = depths.iter().map(|d| d.threshold.abs()).fold(0.0, f64::max);
    if hi - lo > slack.max(0.1 * hi) {
        return "dependence decays with depth".into();
    }
    if lo >= 0.95 * entropy {
        "tail dependence: perfect coupling".into()
    } else {
        "tail dependence: mixture detected".into()
    }
}

/// Exact mutual information between two single coordinates of the
/// two-coin mixture.
pub fn two_coin_pair_information(p1: f64, p2: f64, weight: f64) -> f64 {
    let joint = |x: bool, y: bool| {
        let f = |p: f64| (if x { p } else { 1.0 - p }) * (if y { p } else { 1.0 - p });
        weight * f(p1) + (1.0 - weight) * f(p2)
    };
    let m1 = weight * p1 + (1.0 - weight) * p2;
    let marg = |x: bool| if x { m1 } else { 1.0 - m1 };
    let mut mi = 0.0;
    for x in [false, true] {
        for y in [false, true] {
            let j = joint(x, y);
            if j > 0.0 {
                mi += j * (j / (marg(x) * marg(y))).ln();
            }
        }
    }
    mi
}
