//! End-to-end Monte Carlo channel simulator.
//!
//! This module is the independent oracle against which the analytic layer
//! is validated: it never touches the Gamma/copula machinery.  Instead it
//! draws raw channel realizations of the physical model —
//!
//! * per-element Rician amplitudes on both hops (
//!   line-of-sight `√(K_r/(K_r+1))` plus a circular complex diffuse part),
//! * a von Mises residual phase per element, shared across user ports
//!   (the surface is configured once, before any port is selected),
//! * a user-side diffuse field correlated across ports through the Jakes
//!   matrix (Cholesky coloring of i.i.d. complex Gaussians),
//!
//! — forms the equivalent channel `H_u^n = (β_u/K) Σ_k a_k b_k^n e^{jΘ_k}`
//! per port, selects the best port, and scores outage / capacity
//! empirically.
//!
//! The hop amplitudes `a` are drawn independently per port.  Sharing them
//! would stack a large common-factor correlation on top of the Jakes
//! structure that the best-port gain model calibrates against, and the
//! cross-validation of the two layers is the whole point of this module;
//! the induced port dependence here is the one the copula approximates.
//!
//! Campaigns are chunked with counter-based RNG streams keyed by
//! `(master seed, chunk index)` and merged in chunk order, so results are
//! bit-identical regardless of thread count or scheduling.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::analysis::{sinr_common, sinr_private, AnalysisError};
use crate::model::{db_to_linear, ModelError, PhaseError, ScenarioConfig, User};
use crate::specfun::SpecFunError;

/// Draws per campaign chunk; chunk boundaries are part of the
/// reproducibility contract (fixed, not tuned to the machine).
const CHUNK: u64 = 8192;

/// Outage probabilities below this are flagged unreliable at typical
/// sample sizes rather than silently trusted.
const OP_RELIABILITY_FLOOR: f64 = 1e-4;

// ---------------------------------------------------------------------------
// Estimates
// ---------------------------------------------------------------------------

/// Which metric a Monte Carlo estimate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Outage probability.
    Op,
    /// Common-stream capacity (bps/Hz).
    AcCommon,
    /// Private-stream capacity (bps/Hz).
    AcPrivate,
    /// Sum capacity (bps/Hz).
    AcSum,
}

/// A Monte Carlo estimate with its 95 % confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    /// Metric tag.
    pub metric: Metric,
    /// Point estimate.
    pub value: f64,
    /// 95 % half-width: binomial for OP, CLT for capacities.
    pub half_width_95: f64,
    /// Number of channel draws.
    pub samples: u64,
    /// Master seed of the campaign.
    pub seed: u64,
    /// `false` for OP estimates below the resolution floor (too few
    /// expected events for the binomial interval to mean much).
    pub reliable: bool,
}

/// Joint result of one campaign: outage and the three capacity means from
/// the same channel draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McPoint {
    /// Outage probability estimate.
    pub op: McEstimate,
    /// Common-stream capacity estimate.
    pub ac_common: McEstimate,
    /// Private-stream capacity estimate.
    pub ac_private: McEstimate,
    /// Sum-capacity estimate.
    pub ac_sum: McEstimate,
}

// ---------------------------------------------------------------------------
// von Mises sampling
// ---------------------------------------------------------------------------

/// One von Mises(0, κ) draw via the Best–Fisher rejection scheme (exact,
/// O(1) expected cost).  κ below 1e-12 degenerates to the uniform circle.
fn von_mises_draw<R: Rng + ?Sized>(rng: &mut R, kappa: f64) -> f64 {
    use std::f64::consts::PI;
    if kappa < 1e-12 {
        return PI * (2.0 * rng.random::<f64>() - 1.0);
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.random();
            let theta = f.clamp(-1.0, 1.0).acos();
            return if u3 >= 0.5 { theta } else { -theta };
        }
    }
}

/// Draws `count` i.i.d. von Mises(0, κ) angles in `(−π, π]`,
/// deterministically in `seed`.
pub fn sample_von_mises(kappa: f64, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| von_mises_draw(&mut rng, kappa))
        .collect()
}

// ---------------------------------------------------------------------------
// Channel sampler
// ---------------------------------------------------------------------------

/// Precomputed state for drawing equivalent channels of one user.
struct ChannelSampler {
    k_elements: usize,
    n_ports: usize,
    /// `None` for ideal phases.
    kappa: Option<f64>,
    beta: f64,
    /// Lower Cholesky factor of the (jittered) Jakes matrix.
    l_factor: DMatrix<f64>,
    /// LOS amplitude `√(K_r/(K_r+1))`.
    s_los: f64,
    /// Diffuse scale `√(1/(K_r+1))`.
    sigma_diffuse: f64,
}

impl ChannelSampler {
    fn new(cfg: &ScenarioConfig, user: User) -> Result<Self, SpecFunError> {
        let corr = cfg.correlation(user);
        let n = corr.dim();
        let chol = match nalgebra::Cholesky::new(corr.matrix.clone()) {
            Some(c) => c,
            None => {
                let mut jittered = corr.matrix;
                for i in 0..n {
                    jittered[(i, i)] += 1e-10;
                }
                nalgebra::Cholesky::new(jittered).ok_or(SpecFunError::NotPositiveDefinite)?
            }
        };
        let kappa = match cfg.phase_error {
            PhaseError::Ideal => None,
            PhaseError::VonMises { kappa } => Some(kappa),
        };
        let kr = cfg.rice_k;
        Ok(ChannelSampler {
            k_elements: cfg.k_elements as usize,
            n_ports: n,
            kappa,
            beta: cfg.beta_sq(user).sqrt(),
            l_factor: chol.unpack(),
            s_los: (kr / (kr + 1.0)).sqrt(),
            sigma_diffuse: (1.0 / (kr + 1.0)).sqrt(),
        })
    }

    /// One realization: fills `out` with the N equivalent channels.
    /// `eps` is scratch of length 2N (interleaved re/im of the port field).
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, eps: &mut [f64], out: &mut [Complex<f64>]) {
        const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;
        debug_assert_eq!(out.len(), self.n_ports);
        debug_assert_eq!(eps.len(), 2 * self.n_ports);
        for h in out.iter_mut() {
            *h = Complex::new(0.0, 0.0);
        }
        for _ in 0..self.k_elements {
            // Residual surface phase: one per element, every port sees it.
            let phase = match self.kappa {
                Some(kappa) => Complex::cis(von_mises_draw(rng, kappa)),
                None => Complex::new(1.0, 0.0),
            };
            // User-side diffuse field, correlated across ports.
            for e in eps.iter_mut() {
                let g: f64 = StandardNormal.sample(rng);
                *e = g * SQRT_HALF;
            }
            for i in 0..self.n_ports {
                let mut re = 0.0;
                let mut im = 0.0;
                for j in 0..=i {
                    let l = self.l_factor[(i, j)];
                    re += l * eps[2 * j];
                    im += l * eps[2 * j + 1];
                }
                let b = Complex::new(
                    self.s_los + self.sigma_diffuse * re,
                    self.sigma_diffuse * im,
                )
                .norm();
                // Base-station hop: fresh Rician modulus per (element, port).
                let xr: f64 = StandardNormal.sample(rng);
                let xi: f64 = StandardNormal.sample(rng);
                let a = Complex::new(
                    self.s_los + self.sigma_diffuse * SQRT_HALF * xr,
                    self.sigma_diffuse * SQRT_HALF * xi,
                )
                .norm();
                out[i] += phase * (a * b);
            }
        }
        let scale = self.beta / self.k_elements as f64;
        for h in out.iter_mut() {
            *h *= scale;
        }
    }
}

/// One channel realization: the `N` per-port equivalent channels
/// `H_u^n = (β_u/K) Σ_k a_k b_k^n e^{jΘ_k}`, deterministic in `seed`.
pub fn draw_channel_realization(
    cfg: &ScenarioConfig,
    user: User,
    seed: u64,
) -> Result<Vec<Complex<f64>>, SpecFunError> {
    let sampler = ChannelSampler::new(cfg, user)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut eps = vec![0.0; 2 * sampler.n_ports];
    let mut out = vec![Complex::new(0.0, 0.0); sampler.n_ports];
    sampler.draw(&mut rng, &mut eps, &mut out);
    Ok(out)
}

/// Draws `count` best-port gains `max_n |H_u^n|²` (the raw material of
/// distribution-level validation), chunked and parallel but bit-identical
/// for a given seed.
pub fn sample_best_gains(
    cfg: &ScenarioConfig,
    user: User,
    count: u64,
    seed: u64,
) -> Result<Vec<f64>, SpecFunError> {
    let sampler = ChannelSampler::new(cfg, user)?;
    let n_chunks = count.div_ceil(CHUNK);
    let chunks: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = chunk_rng(seed, chunk);
            let take = CHUNK.min(count - chunk * CHUNK);
            let mut eps = vec![0.0; 2 * sampler.n_ports];
            let mut h = vec![Complex::new(0.0, 0.0); sampler.n_ports];
            let mut out = Vec::with_capacity(take as usize);
            for _ in 0..take {
                sampler.draw(&mut rng, &mut eps, &mut h);
                out.push(best_gain(&h));
            }
            out
        })
        .collect();
    Ok(chunks.concat())
}

/// Deterministic per-chunk stream: same cipher key (the master seed),
/// distinct stream counter per chunk.
fn chunk_rng(seed: u64, chunk: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

fn best_gain(h: &[Complex<f64>]) -> f64 {
    h.iter()
        .map(|c| c.norm_sqr())
        .fold(f64::NEG_INFINITY, f64::max)
}

// ---------------------------------------------------------------------------
// Campaigns
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Default)]
struct Partial {
    n: u64,
    outages: u64,
    sum: [f64; 3],
    sum_sq: [f64; 3],
}

impl Partial {
    fn merge(mut self, other: &Partial) -> Partial {
        self.n += other.n;
        self.outages += other.outages;
        for i in 0..3 {
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
        }
        self
    }
}

/// Runs one chunked campaign and scores outage and capacity per draw from
/// the same channel realizations.
fn run_campaign(
    cfg: &ScenarioConfig,
    user: User,
    snr_db: f64,
    samples: u64,
    seed: u64,
) -> Result<Partial, AnalysisError> {
    if samples < 1_000 {
        return Err(AnalysisError::Model(ModelError::Domain(format!(
            "Monte Carlo campaigns need at least 1000 samples, got {samples}"
        ))));
    }
    let sampler = ChannelSampler::new(cfg, user)?;
    let th = cfg.thresholds(user);
    let gamma_c_min = db_to_linear(th.common_db);
    let gamma_p_min = db_to_linear(th.private_db);
    // SINR scale is deterministic; validate the geometry once up front.
    crate::analysis::snr_scale(cfg, user, snr_db)?;

    let n_chunks = samples.div_ceil(CHUNK);
    let partials: Vec<Result<Partial, AnalysisError>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = chunk_rng(seed, chunk);
            let take = CHUNK.min(samples - chunk * CHUNK);
            let mut eps = vec![0.0; 2 * sampler.n_ports];
            let mut h = vec![Complex::new(0.0, 0.0); sampler.n_ports];
            let mut p = Partial::default();
            for _ in 0..take {
                sampler.draw(&mut rng, &mut eps, &mut h);
                let g = best_gain(&h);
                let gc = sinr_common(g, cfg, user, snr_db)?;
                let gp = sinr_private(g, cfg, user, snr_db)?;
                if gc < gamma_c_min || gp < gamma_p_min {
                    p.outages += 1;
                }
                let c_c = (1.0 + gc).log2();
                let c_p = (1.0 + gp).log2();
                for (i, v) in [c_c, c_p, c_c + c_p].into_iter().enumerate() {
                    p.sum[i] += v;
                    p.sum_sq[i] += v * v;
                }
                p.n += 1;
            }
            Ok(p)
        })
        .collect();
    // Merge in chunk order — associative and schedule-independent.
    let mut total = Partial::default();
    for p in partials {
        total = total.merge(&p?);
    }
    Ok(total)
}

fn ac_estimate(metric: Metric, idx: usize, p: &Partial, seed: u64) -> McEstimate {
    let n = p.n as f64;
    let mean = p.sum[idx] / n;
    let var = ((p.sum_sq[idx] - p.sum[idx] * p.sum[idx] / n) / (n - 1.0)).max(0.0);
    McEstimate {
        metric,
        value: mean,
        half_width_95: 1.96 * (var / n).sqrt(),
        samples: p.n,
        seed,
        reliable: true,
    }
}

fn op_estimate(p: &Partial, seed: u64) -> McEstimate {
    let n = p.n as f64;
    let phat = p.outages as f64 / n;
    McEstimate {
        metric: Metric::Op,
        value: phat,
        half_width_95: 1.96 * (phat * (1.0 - phat) / n).sqrt(),
        samples: p.n,
        seed,
        reliable: phat >= OP_RELIABILITY_FLOOR,
    }
}

/// Empirical outage probability at one SNR point: the fraction of draws
/// where the best port fails either SINR test.  Requires ≥ 1000 samples.
pub fn estimate_op(
    cfg: &ScenarioConfig,
    user: User,
    snr_db: f64,
    samples: u64,
    seed: u64,
) -> Result<McEstimate, AnalysisError> {
    let p = run_campaign(cfg, user, snr_db, samples, seed)?;
    Ok(op_estimate(&p, seed))
}

/// Empirical capacities `(C_c, C_p, C_sum)` at one SNR point (means of
/// `log2(1+SINR)` at the selected port).  Requires ≥ 1000 samples.
pub fn estimate_ac(
    cfg: &ScenarioConfig,
    user: User,
    snr_db: f64,
    samples: u64,
    seed: u64,
) -> Result<(McEstimate, McEstimate, McEstimate), AnalysisError> {
    let p = run_campaign(cfg, user, snr_db, samples, seed)?;
    Ok((
        ac_estimate(Metric::AcCommon, 0, &p, seed),
        ac_estimate(Metric::AcPrivate, 1, &p, seed),
        ac_estimate(Metric::AcSum, 2, &p, seed),
    ))
}

/// Outage and capacities from a single shared campaign (one pass over the
/// channel draws).
pub fn estimate_point(
    cfg: &ScenarioConfig,
    user: User,
    snr_db: f64,
    samples: u64,
    seed: u64,
) -> Result<McPoint, AnalysisError> {
    let p = run_campaign(cfg, user, snr_db, samples, seed)?;
    Ok(McPoint {
        op: op_estimate(&p, seed),
        ac_common: ac_estimate(Metric::AcCommon, 0, &p, seed),
        ac_private: ac_estimate(Metric::AcPrivate, 1, &p, seed),
        ac_sum: ac_estimate(Metric::AcSum, 2, &p, seed),
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
