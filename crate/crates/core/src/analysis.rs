//! Closed-form outage probability and average capacity.
//!
//! This is the analytic layer tying the scenario parameters to the two
//! performance metrics:
//!
//! * **Outage probability.**  Both the common and the private SINR are
//!   increasing in the effective channel gain, so the outage event
//!   `{γ_c < γ_th,c or γ_p < γ_th,p}` collapses to `{g < γ̂_th}` for a
//!   single *gain threshold* `γ̂_th`, and the OP is exactly the best-port
//!   gain CDF evaluated there.  When the power split cannot meet a target
//!   at any gain (the threshold denominator turns nonpositive) the result
//!   carries `valid = false` and an OP of 1.
//!
//! * **Average capacity.**  A Jensen step replaces the expectation of
//!   `log2(1 + SINR(g))` with the SINR at the expected best-port gain,
//!   which in turn comes from an extreme-value quantile heuristic
//!   `ḡ_fas ≈ ḡ + σ·√(1+ρ_eff)·Φ⁻¹((N−1)/N)`.
//!
//! The high-SNR outage asymptote keeps the copula structure and replaces
//! only the marginal CDF with its leading power-law expansion.

use crate::copula::BestPortGainLaw;
use crate::model::{
    db_to_linear, path_loss, rsma_power_split, AcSigma, GammaMarginal, ModelError, ScenarioConfig,
    User,
};
use crate::specfun::{
    ln_gamma, mvt_cdf, std_normal_quantile, student_t_quantile, QmcEstimate, QmcSettings,
    SpecFunError,
};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Errors of the analytic layer: either the scenario itself is outside the
/// model's domain, or a numeric kernel failed.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    /// Parameter/geometry problem.
    #[error(transparent)]
    Model(#[from] ModelError),
    /// Special-function or quadrature failure.
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

// ---------------------------------------------------------------------------
// SINR mappings
// ---------------------------------------------------------------------------

/// Deterministic SNR scale `ρ_u = γ̄ · L_u · K²` multiplying the normalized
/// gain; `γ̄` is the average SNR in linear units.
pub fn snr_scale(cfg: &ScenarioConfig, user: User, snr_db: f64) -> Result<f64, ModelError> {
    let k = f64::from(cfg.k_elements);
    Ok(db_to_linear(snr_db) * path_loss(cfg, user)? * k * k)
}

/// Common-stream SINR at normalized gain `g ≥ 0`:
///
/// ```text
/// γ_c,u = α_c ρ_u g / ((α_p,r + α_p,t) ρ_u g + 1)
/// ```
///
/// The private streams are decoded after the common one, so the whole
/// private power budget appears as interference.
pub fn sinr_common(
    g: f64,
    cfg: &ScenarioConfig,
    user: User,
    snr_db: f64,
) -> Result<f64, ModelError> {
    let (alpha_c, p_r, p_t) = rsma_power_split(cfg);
    let x = snr_scale(cfg, user, snr_db)? * g;
    Ok(alpha_c * x / ((p_r + p_t) * x + 1.0))
}

/// Private-stream SINR at normalized gain `g ≥ 0`:
///
/// ```text
/// γ_p,u = α_p,u ρ_u g / (α_p,ū ρ_u g + 1)
/// ```
///
/// Only the *other* user's private stream interferes (the common stream
/// has been removed by successive decoding).
pub fn sinr_private(
    g: f64,
    cfg: &ScenarioConfig,
    user: User,
    snr_db: f64,
) -> Result<f64, ModelError> {
    let own = cfg.alpha_private(user);
    let other = cfg.alpha_private(user.complement());
    let x = snr_scale(cfg, user, snr_db)? * g;
    Ok(own * x / (other * x + 1.0))
}

// ---------------------------------------------------------------------------
// Gain thresholds
// ---------------------------------------------------------------------------

/// Outage thresholds mapped into gain units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSet {
    /// Gain below which the common stream is in outage, `γ̂_c`.
    pub common: f64,
    /// Gain below which the private stream is in outage, `γ̂_p`.
    pub private: f64,
    /// The binding threshold `γ̂_th = max(γ̂_c, γ̂_p)`.
    pub binding: f64,
    /// `false` when either threshold denominator is nonpositive — the
    /// target SINR is unreachable at any gain and outage is certain.
    pub valid: bool,
}

/// Inverts the SINR targets into gain thresholds:
///
/// ```text
/// γ̂_c   = γ_th,c / (ρ_u (α_c   − (α_p,r + α_p,t) γ_th,c))
/// γ̂_p,u = γ_th,p / (ρ_u (α_p,u − α_p,ū γ_th,p))
/// ```
///
/// A nonpositive denominator means the corresponding SINR saturates below
/// its target; the set is then flagged invalid (with infinite thresholds)
/// rather than raising an error.
pub fn gain_thresholds(
    cfg: &ScenarioConfig,
    user: User,
    snr_db: f64,
) -> Result<ThresholdSet, ModelError> {
    let rho = snr_scale(cfg, user, snr_db)?;
    let (alpha_c, p_r, p_t) = rsma_power_split(cfg);
    let th = cfg.thresholds(user);
    let gc = db_to_linear(th.common_db);
    let gp = db_to_linear(th.private_db);
    let (own, other) = match user {
        User::R => (p_r, p_t),
        User::T => (p_t, p_r),
    };

    let denom_c = alpha_c - (p_r + p_t) * gc;
    let denom_p = own - other * gp;
    if denom_c <= 0.0 || denom_p <= 0.0 {
        return Ok(ThresholdSet {
            common: f64::INFINITY,
            private: f64::INFINITY,
            binding: f64::INFINITY,
            valid: false,
        });
    }
    let common = gc / (rho * denom_c);
    let private = gp / (rho * denom_p);
    Ok(ThresholdSet {
        common,
        private,
        binding: common.max(private),
        valid: true,
    })
}

// ---------------------------------------------------------------------------
// Outage probability
// ---------------------------------------------------------------------------

/// Outage probability at one SNR point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageResult {
    /// `P(g_fas < γ̂_th)`, in `[0, 1]`; 1 by convention when invalid.
    pub op: f64,
    /// Error estimate of the quadrature (0 when exact).
    pub err_est: f64,
    /// Whether the quadrature met its tolerance.
    pub converged: bool,
    /// Threshold feasibility flag from [`gain_thresholds`].
    pub valid: bool,
    /// The binding gain threshold the CDF was evaluated at.
    pub threshold_gain: f64,
}

/// Exact outage probability: the best-port gain CDF at the binding
/// threshold.  Infeasible targets give `op = 1`, `valid = false`.
pub fn outage_probability(
    cfg: &ScenarioConfig,
    user: User,
    snr_db: f64,
    settings: &QmcSettings,
) -> Result<OutageResult, AnalysisError> {
    let th = gain_thresholds(cfg, user, snr_db)?;
    if !th.valid {
        return Ok(OutageResult {
            op: 1.0,
            err_est: 0.0,
            converged: true,
            valid: false,
            threshold_gain: f64::INFINITY,
        });
    }
    let law = BestPortGainLaw::from_scenario(cfg, user)?;
    let est = law.max_gain_cdf(th.binding, settings)?;
    Ok(OutageResult {
        op: est.value,
        err_est: est.std_err,
        converged: est.converged,
        valid: true,
        threshold_gain: th.binding,
    })
}

/// Leading high-SNR expansion of the Gamma marginal CDF:
///
/// ```text
/// F_Γ^∞(g) = (m g / ḡ)^m / Γ(m + 1)
/// ```
///
/// valid as `g → 0`; callers clamp values ≥ 1 (the expansion is
/// meaningless there).
pub fn asymptotic_marginal_cdf(marginal: &GammaMarginal, g: f64) -> f64 {
    if g <= 0.0 {
        return 0.0;
    }
    let m = marginal.shape;
    (m * (m * g / marginal.mean_gain).ln() - ln_gamma(m + 1.0)).exp()
}

/// High-SNR outage asymptote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticResult {
    /// Asymptotic OP in `[0, 1]`.
    pub op: f64,
    /// Quadrature error estimate (0 when exact or clamped).
    pub err_est: f64,
    /// Set when the expansion argument reached 1 and was clamped — the
    /// SNR is too low for the asymptote to mean anything.
    pub clamped: bool,
    /// Threshold feasibility flag.
    pub valid: bool,
}

/// Asymptotic outage probability: the exact best-port CDF with each
/// marginal replaced by [`asymptotic_marginal_cdf`], clamped into `[0, 1]`.
pub fn outage_asymptotic(
    cfg: &ScenarioConfig,
    user: User,
    snr_db: f64,
    settings: &QmcSettings,
) -> Result<AsymptoticResult, AnalysisError> {
    let th = gain_thresholds(cfg, user, snr_db)?;
    if !th.valid {
        return Ok(AsymptoticResult {
            op: 1.0,
            err_est: 0.0,
            clamped: false,
            valid: false,
        });
    }
    let law = BestPortGainLaw::from_scenario(cfg, user)?;
    let u = asymptotic_marginal_cdf(&law.marginal, th.binding);
    if u >= 1.0 {
        return Ok(AsymptoticResult {
            op: 1.0,
            err_est: 0.0,
            clamped: true,
            valid: true,
        });
    }
    let est = if law.port_count() == 1 || u == 0.0 {
        QmcEstimate::exact(u)
    } else {
        let q = student_t_quantile(u, law.correlation.nu);
        let upper = vec![q; law.port_count()];
        mvt_cdf(
            &upper,
            &law.correlation.matrix,
            law.correlation.nu,
            settings,
        )?
    };
    Ok(AsymptoticResult {
        op: est.value,
        err_est: est.std_err,
        clamped: false,
        valid: true,
    })
}

// ---------------------------------------------------------------------------
// Average capacity
// ---------------------------------------------------------------------------

/// Expected best-port gain from the extreme-value quantile heuristic:
///
/// ```text
/// ḡ_fas ≈ ḡ + σ · √(1 + ρ_eff) · Φ⁻¹((N−1)/N)      (N ≥ 2)
/// ```
///
/// with `ρ_eff` the mean off-diagonal correlation and `σ` per the chosen
/// convention (`Paper`: ḡ²/m, `Std`: ḡ/√m).  A single port takes no
/// selection gain: the result is `ḡ`.
pub fn expected_max_gain(law: &BestPortGainLaw, sigma: AcSigma) -> f64 {
    let n = law.port_count();
    let g_bar = law.marginal.mean_gain;
    if n < 2 {
        return g_bar;
    }
    let s = match sigma {
        AcSigma::Paper => g_bar * g_bar / law.marginal.shape,
        AcSigma::Std => g_bar / law.marginal.shape.sqrt(),
    };
    let rho_eff = law.correlation.mean_offdiagonal();
    let quantile = std_normal_quantile((n as f64 - 1.0) / n as f64);
    g_bar + s * (1.0 + rho_eff).sqrt() * quantile
}

/// Average capacity at one SNR point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityResult {
    /// Common-stream capacity `log2(1 + γ_c(ḡ_fas))` (bps/Hz).
    pub common: f64,
    /// Private-stream capacity `log2(1 + γ_p(ḡ_fas))` (bps/Hz).
    pub private: f64,
    /// Sum `common + private`.
    pub sum: f64,
    /// The effective gain `ḡ_fas` the SINRs were evaluated at.
    pub effective_gain: f64,
}

/// Average capacity via Jensen's step: SINRs evaluated at the expected
/// best-port gain.
pub fn average_capacity(
    cfg: &ScenarioConfig,
    user: User,
    snr_db: f64,
) -> Result<CapacityResult, AnalysisError> {
    let law = BestPortGainLaw::from_scenario(cfg, user)?;
    let g_fas = expected_max_gain(&law, cfg.ac_sigma);
    let gamma_c = sinr_common(g_fas, cfg, user, snr_db)?;
    let gamma_p = sinr_private(g_fas, cfg, user, snr_db)?;
    let common = (1.0 + gamma_c).log2();
    let private = (1.0 + gamma_p).log2();
    Ok(CapacityResult {
        common,
        private,
        sum: common + private,
        effective_gain: g_fas,
    })
}

// ---------------------------------------------------------------------------
// Combined evaluation
// ---------------------------------------------------------------------------

/// Everything the analytic layer produces for one `(user, SNR)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformancePoint {
    /// Which user.
    pub user: User,
    /// Average SNR (dB).
    pub snr_db: f64,
    /// Exact outage probability.
    pub outage: OutageResult,
    /// High-SNR outage asymptote.
    pub asymptotic: AsymptoticResult,
    /// Average capacities.
    pub capacity: CapacityResult,
}

/// Evaluates outage (exact and asymptotic) and capacity at one point.
pub fn evaluate_point(
    cfg: &ScenarioConfig,
    user: User,
    snr_db: f64,
    settings: &QmcSettings,
) -> Result<PerformancePoint, AnalysisError> {
    Ok(PerformancePoint {
        user,
        snr_db,
        outage: outage_probability(cfg, user, snr_db, settings)?,
        asymptotic: outage_asymptotic(cfg, user, snr_db, settings)?,
        capacity: average_capacity(cfg, user, snr_db)?,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
