//! Counter-based Gaussian streams.
//!
//! Every normal is a pure function of a key derived from
//! `(seed, trajectory, position)`, so trajectories can run on any worker in
//! any order and reproduce bit-for-bit.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::space::{FieldState, Preconditioner, SpectralSpace};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a tuple of words into a stream key.
#[inline]
fn derive_key(parts: &[u64]) -> u64 {
    let mut h = 0x243F_6A88_85A3_08D3u64;
    for &p in parts {
        h = mix64(h ^ p.wrapping_add(GOLDEN));
    }
    h
}

/// SplitMix-style generator: output `i` is `mix64(key + i·φ)`.
#[derive(Clone, Debug)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        CounterRng { key, counter: 0 }
    }

    pub fn from_parts(parts: &[u64]) -> Self {
        Self::new(derive_key(parts))
    }
}

impl RngCore for CounterRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

const TAG_STEP: u64 = 1;
const TAG_BRIDGE: u64 = 2;

/// How increments are laid out over the counter space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NoiseLayout {
    /// Step `n` of trajectory `m` owns the sub-stream keyed by `(seed, m, n)`;
    /// mode `k` takes its `k`-th normal. Streams at different `Δt` are
    /// unrelated.
    #[default]
    PerStep,
    /// Increments are leaves of a dyadic Brownian-bridge tree over each unit
    /// time block, so runs at `Δt = 2^{-j}` for different `j` see the same
    /// Brownian path. Requires `Δt = 2^{-j} ≤ 1`.
    Bridge,
}

impl NoiseLayout {
    pub fn validate(self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        if self == NoiseLayout::Bridge {
            dyadic_level(dt).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "shared-path noise requires dt = 2^-j <= 1, got {dt}"
                ))
            })?;
        }
        Ok(())
    }
}

fn dyadic_level(dt: f64) -> Option<u32> {
    if !(dt > 0.0 && dt <= 1.0) {
        return None;
    }
    let j = (-dt.log2()).round();
    if j > 30.0 || (dt - 2f64.powi(-(j as i32))).abs() > 0.0 {
        return None;
    }
    Some(j as u32)
}

#[derive(Clone, Debug, Default)]
struct BridgeCache {
    block: Option<u64>,
    level: u32,
    modes: usize,
    /// `leaves[step_in_block * modes + k]`, each of variance `Δt`.
    leaves: Vec<f64>,
    tree: Vec<f64>,
}

/// The noise consumed by one trajectory.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    master_seed: u64,
    trajectory: u64,
    step: u64,
    layout: NoiseLayout,
    cache: BridgeCache,
}

impl NoiseStream {
    pub fn new(master_seed: u64, trajectory: u64) -> Self {
        Self::with_layout(master_seed, trajectory, NoiseLayout::PerStep)
    }

    pub fn with_layout(master_seed: u64, trajectory: u64, layout: NoiseLayout) -> Self {
        NoiseStream {
            master_seed,
            trajectory,
            step: 0,
            layout,
            cache: BridgeCache::default(),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn trajectory(&self) -> u64 {
        self.trajectory
    }

    pub fn layout(&self) -> NoiseLayout {
        self.layout
    }

    /// Index of the next step to be drawn.
    pub fn step_counter(&self) -> u64 {
        self.step
    }

    pub fn seek(&mut self, step: u64) {
        self.step = step;
    }

    /// Points the stream at another trajectory, keeping its buffers.
    pub fn restart(&mut self, trajectory: u64) {
        self.trajectory = trajectory;
        self.step = 0;
        self.cache.block = None;
    }

    /// Writes the cylindrical increment `ΔW_k` (variance `Δt` per mode) for
    /// the current step and advances the counter. `dt` must have been
    /// validated against the layout.
    pub fn next_increment_into(&mut self, dt: f64, out: &mut [f64]) {
        match self.layout {
            NoiseLayout::PerStep => {
                let s = dt.sqrt();
                let mut rng = CounterRng::from_parts(&[TAG_STEP, self.master_seed, self.trajectory, self.step]);
                for o in out.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *o = s * z;
                }
            }
            NoiseLayout::Bridge => {
                let level = dyadic_level(dt).expect("bridge layout requires dt = 2^-j <= 1");
                let per_block = 1u64 << level;
                let block = self.step / per_block;
                let offset = (self.step % per_block) as usize;
                self.fill_block(block, level, out.len());
                let k = out.len();
                out.copy_from_slice(&self.cache.leaves[offset * k..(offset + 1) * k]);
            }
        }
        self.step += 1;
    }

    fn fill_block(&mut self, block: u64, level: u32, modes: usize) {
        let c = &mut self.cache;
        if c.block == Some(block) && c.level == level && c.modes == modes {
            return;
        }
        let leaves = 1usize << level;
        c.tree.resize(2 * leaves, 0.0);
        c.leaves.resize(leaves * modes, 0.0);
        for k in 0..modes {
            // Sub-stream (seed, m, block, k): draw 0 is the block total and
            // draw i splits heap node i. Nodes are visited in index order, so
            // a coarser level consumes a prefix of the same draws.
            let mut rng = CounterRng::from_parts(&[TAG_BRIDGE, self.master_seed, self.trajectory, block, k as u64]);
            let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
            c.tree[1] = draw();
            let mut span = 1.0f64;
            for depth in 0..level {
                let first = 1usize << depth;
                let half_sd = (span / 4.0).sqrt();
                for node in first..2 * first {
                    let total = c.tree[node];
                    let left = 0.5 * total + half_sd * draw();
                    c.tree[2 * node] = left;
                    c.tree[2 * node + 1] = total - left;
                }
                span *= 0.5;
            }
            for i in 0..leaves {
                c.leaves[i * modes + k] = c.tree[leaves + i];
            }
        }
        c.block = Some(block);
        c.level = level;
        c.modes = modes;
    }
}

/// `P^{1/2} ΔW`: coefficient `k` is `√(Δt p_k) ξ_k`.
pub fn sample_increment(
    space: &SpectralSpace,
    precond: &Preconditioner,
    stream: &mut NoiseStream,
    dt: f64,
) -> Result<FieldState> {
    stream.layout().validate(dt)?;
    let mut out = vec![0.0; space.modes()];
    stream.next_increment_into(dt, &mut out);
    for (o, s) in out.iter_mut().zip(precond.sqrt_multipliers()) {
        *o *= s;
    }
    Ok(FieldState::from_vec(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn counter_rng_is_a_pure_function_of_key() {
        let mut a = CounterRng::from_parts(&[1, 2, 3]);
        let mut b = CounterRng::from_parts(&[1, 2, 3]);
        let mut c = CounterRng::from_parts(&[1, 2, 4]);
        for _ in 0..10 {
            let x = a.next_u64();
            assert_eq!(x, b.next_u64());
            assert_ne!(x, c.next_u64());
        }
    }

    #[test]
    fn increments_have_the_right_law() {
        let space = SpectralSpace::spectral(4).unwrap();
        let q = Preconditioner::covariance(&space);
        let dt = 0.1;
        let n = 100_000;
        let mut first = Vec::with_capacity(n);
        let mut last = Vec::with_capacity(n);
        let mut sq_norms = Vec::with_capacity(n);
        for m in 0..n as u64 {
            let mut s = NoiseStream::new(17, m);
            let inc = sample_increment(&space, &q, &mut s, dt).unwrap();
            assert_eq!(s.step_counter(), 1);
            first.push(inc.as_slice()[0]);
            last.push(inc.as_slice()[3]);
            sq_norms.push(inc.norm_squared());
        }
        let (mean, var) = moments(&first);
        let target = dt / (PI * PI);
        let se_mean = (target / n as f64).sqrt();
        assert!(mean.abs() <= 4.0 * se_mean);
        // Var of the sample variance of a normal is 2σ⁴/(n−1).
        let se_var = target * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!((var - target).abs() <= 4.0 * se_var, "{var} vs {target}");
        let (_, var4) = moments(&last);
        let target4 = dt / (16.0 * PI * PI);
        assert!((var4 - target4).abs() <= 4.0 * target4 * (2.0 / (n as f64 - 1.0)).sqrt());

        let (mean_norm, var_norm) = moments(&sq_norms);
        let expected = dt * space.trace_q();
        assert!((mean_norm - expected).abs() <= 4.0 * (var_norm / n as f64).sqrt());
    }

    #[test]
    fn steps_are_uncorrelated() {
        let n = 100_000;
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        let mut buf = [0.0];
        for m in 0..n as u64 {
            let mut s = NoiseStream::new(3, m);
            s.next_increment_into(1.0, &mut buf);
            a.push(buf[0]);
            s.next_increment_into(1.0, &mut buf);
            b.push(buf[0]);
        }
        let (ma, va) = moments(&a);
        let (mb, vb) = moments(&b);
        let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n as f64 - 1.0);
        let corr = cov / (va * vb).sqrt();
        assert!(corr.abs() <= 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn same_position_same_increment() {
        let space = SpectralSpace::spectral(5).unwrap();
        let p = Preconditioner::new(&space, 0.5).unwrap();
        for layout in [NoiseLayout::PerStep, NoiseLayout::Bridge] {
            let mut a = NoiseStream::with_layout(9, 4, layout);
            let mut b = NoiseStream::with_layout(9, 4, layout);
            for _ in 0..7 {
                sample_increment(&space, &p, &mut a, 0.25).unwrap();
            }
            b.seek(7);
            let x = sample_increment(&space, &p, &mut a, 0.25).unwrap();
            let y = sample_increment(&space, &p, &mut b, 0.25).unwrap();
            assert_eq!(x, y);
            assert_eq!(a.step_counter(), 8);
        }
    }

    #[test]
    fn bridge_leaves_aggregate_exactly() {
        let k = 3;
        let mut coarse = NoiseStream::with_layout(5, 2, NoiseLayout::Bridge);
        let mut fine = NoiseStream::with_layout(5, 2, NoiseLayout::Bridge);
        let mut c = vec![0.0; k];
        let mut f = vec![0.0; k];
        for _ in 0..6 {
            coarse.next_increment_into(0.25, &mut c);
            let mut sum = vec![0.0; k];
            for _ in 0..4 {
                fine.next_increment_into(1.0 / 16.0, &mut f);
                for i in 0..k {
                    sum[i] += f[i];
                }
            }
            for i in 0..k {
                assert!((sum[i] - c[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bridge_increments_have_variance_dt() {
        let n = 40_000;
        let dt = 0.125;
        let mut xs = Vec::with_capacity(8 * n);
        let mut buf = [0.0];
        for m in 0..n as u64 {
            let mut s = NoiseStream::with_layout(1, m, NoiseLayout::Bridge);
            for _ in 0..8 {
                s.next_increment_into(dt, &mut buf);
                xs.push(buf[0]);
            }
        }
        let (mean, var) = moments(&xs);
        let total = xs.len() as f64;
        assert!(mean.abs() <= 4.0 * (dt / total).sqrt());
        assert!((var - dt).abs() <= 4.0 * dt * (2.0 / total).sqrt());
    }

    #[test]
    fn bridge_rejects_non_dyadic_steps() {
        assert!(NoiseLayout::Bridge.validate(0.1).is_err());
        assert!(NoiseLayout::Bridge.validate(2.0).is_err());
        assert!(NoiseLayout::Bridge.validate(0.0625).is_ok());
        assert!(NoiseLayout::PerStep.validate(0.1).is_ok());
        assert!(NoiseLayout::PerStep.validate(-1.0).is_err());
    }
}
