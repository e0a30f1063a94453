use rand::Rng;
use serde::Serialize;

use crate::error::{precondition, Result};

/// Draws N particle-to-box assignments among M³ boxes.
pub trait OccupancySampler {
    fn particles(&self) -> usize;
    /// Number of boxes per side.
    fn boxes_per_side(&self) -> usize;
    /// Fills `boxes` with one box index per particle.
    fn draw(&self, rng: &mut dyn rand::RngCore, boxes: &mut Vec<usize>);
}

/// Exactly k₀ particles in every box.
#[derive(Debug, Clone, Copy)]
pub struct EqualFill {
    pub m: usize,
    pub k0: usize,
}

impl OccupancySampler for EqualFill {
    fn particles(&self) -> usize {
        self.m.pow(3) * self.k0
    }
    fn boxes_per_side(&self) -> usize {
        self.m
    }
    fn draw(&self, _rng: &mut dyn rand::RngCore, boxes: &mut Vec<usize>) {
        boxes.clear();
        for b in 0..self.m.pow(3) {
            boxes.extend(std::iter::repeat_n(b, self.k0));
        }
    }
}

/// Independent uniform placement of N particles.
#[derive(Debug, Clone, Copy)]
pub struct UniformPlacement {
    pub m: usize,
    pub n: usize,
}

impl OccupancySampler for UniformPlacement {
    fn particles(&self) -> usize {
        self.n
    }
    fn boxes_per_side(&self) -> usize {
        self.m
    }
    fn draw(&self, rng: &mut dyn rand::RngCore, boxes: &mut Vec<usize>) {
        let total = self.m.pow(3);
        boxes.clear();
        boxes.extend((0..self.n).map(|_| rng.random_range(0..total)));
    }
}

/// Particles placed in clusters of `cluster` around uniformly chosen boxes.
#[derive(Debug, Clone, Copy)]
pub struct ClusteredSampler {
    pub m: usize,
    pub n: usize,
    pub cluster: usize,
}

impl OccupancySampler for ClusteredSampler {
    fn particles(&self) -> usize {
        self.n
    }
    fn boxes_per_side(&self) -> usize {
        self.m
    }
    fn draw(&self, rng: &mut dyn rand::RngCore, boxes: &mut Vec<usize>) {
        let total = self.m.pow(3);
        boxes.clear();
        while boxes.len() < self.n {
            let b = rng.random_range(0..total);
            let k = self.cluster.max(1).min(self.n - boxes.len());
            boxes.extend(std::iter::repeat_n(b, k));
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoxStatistics {
    /// c_k for k = 0, 1, …
    pub c_k: Vec<f64>,
    pub m_boxes: usize,
    pub rho_ell3: f64,
    pub draws: usize,
    pub sum_rule_total: f64,
    pub sum_rule_mean: f64,
}

impl BoxStatistics {
    /// Total-variation distance to a reference pmf.
    pub fn total_variation(&self, pmf: impl Fn(usize) -> f64) -> f64 {
        let n = self.c_k.len();
        let inside: f64 = (0..n).map(|k| (self.c_k[k] - pmf(k)).abs()).sum();
        let tail = (1.0 - (0..n).map(&pmf).sum::<f64>()).max(0.0);
        0.5 * (inside + tail)
    }
}

/// Monte Carlo estimate of the occupation fractions c_k.
///
/// Every draw contributes the exact histogram of box occupations, so both
/// sum rules hold draw by draw and survive averaging up to rounding.
pub fn box_statistics(
    sampler: &dyn OccupancySampler,
    draws: usize,
    rng: &mut dyn rand::RngCore,
) -> Result<BoxStatistics> {
    if draws == 0 {
        return precondition("at least one draw is needed");
    }
    let m = sampler.boxes_per_side();
    let total = m.pow(3);
    let n = sampler.particles();
    if total == 0 {
        return precondition("at least one box is needed");
    }
    let mut counts = vec![0u32; total];
    let mut hist: Vec<u64> = vec![0; n + 1];
    let mut boxes = Vec::with_capacity(n);
    for _ in 0..draws {
        sampler.draw(rng, &mut boxes);
        if boxes.len() != n {
            return precondition(format!(
                "sampler produced {} assignments, expected {n}",
                boxes.len()
            ));
        }
        counts.iter_mut().for_each(|c| *c = 0);
        for &b in &boxes {
            if b >= total {
                return precondition(format!("box index {b} outside the {total} boxes"));
            }
            counts[b] += 1;
        }
        for &c in &counts {
            hist[c as usize] += 1;
        }
    }
    while hist.len() > 1 && *hist.last().unwrap() == 0 {
        hist.pop();
    }
    let denom = (draws * total) as f64;
    let c_k: Vec<f64> = hist.iter().map(|&h| h as f64 / denom).collect();
    let sum_rule_total = c_k.iter().sum();
    let sum_rule_mean = c_k.iter().enumerate().map(|(k, c)| k as f64 * c).sum();
    Ok(BoxStatistics {
        c_k,
        m_boxes: total,
        rho_ell3: n as f64 / total as f64,
        draws,
        sum_rule_total,
        sum_rule_mean,
    })
}
