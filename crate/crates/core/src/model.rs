//! Scenario description and derived channel statistics.
//!
//! This module owns everything that is a *parameter* rather than a
//! computation: geometry, surface configuration, the RSMA power split, the
//! fluid-antenna grid, phase-error statistics, and the knobs of the numeric
//! engines.  From a [`ScenarioConfig`] it derives the quantities the
//! analytic layer consumes:
//!
//! * path loss `L_u = (d_sr · d_u)^{−χ}` over the two-hop geometry,
//! * circular moments `φ_p = I_p(κ)/I_0(κ)` of the von Mises phase error,
//! * the per-port Gamma gain marginal (shape `m`, mean `ḡ_u`),
//! * the Jakes-type port-correlation matrix of the fluid antenna,
//! * the `(α_c, α_{p,r}, α_{p,t})` power bookkeeping.
//!
//! It also implements the scenario file format: flat `key = value` lines
//! with dotted section prefixes, `#` comments, and every key optional with
//! the defaults of [`ScenarioConfig::default`].  Parsing produces
//! [`Diagnostic`]s that name the offending key, line, and constraint rather
//! than failing on the first problem.

use sha2::{Digest, Sha256};

use crate::specfun::{bessel_i_scaled, bessel_j0, kummer_1f1_half, spherical_j0};

// ---------------------------------------------------------------------------
// Errors and diagnostics
// ---------------------------------------------------------------------------

/// Errors from model-level computations (as opposed to config parsing).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    /// Invalid geometry, e.g. a user placed on top of the surface.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Parameters outside the domain where the statistical model applies.
    #[error("model domain error: {0}")]
    Domain(String),
}

/// Severity of a configuration diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    /// The config cannot be used.
    Error,
    /// The config is usable but a documented constraint is violated (e.g.
    /// an SINR target that no channel gain can meet).
    Warning,
}

/// One finding from config parsing or validation: which key, where, what.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    /// Key the finding refers to (possibly dotted), or `"<syntax>"` for
    /// malformed lines.
    pub key: String,
    /// 1-based line number in the source file, when known.
    pub line: Option<usize>,
    /// Explanation including the offending value and violated constraint.
    pub message: String,
    /// Whether the config remains usable.
    pub severity: Severity,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match self.line {
            Some(n) => write!(f, "{sev}: line {n}: {}: {}", self.key, self.message),
            None => write!(f, "{sev}: {}: {}", self.key, self.message),
        }
    }
}

// ---------------------------------------------------------------------------
// Enumerations
// ---------------------------------------------------------------------------

/// The two downlink users: `R` on the reflection side of the surface, `T`
/// on the transmission side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum User {
    /// Reflection-side user.
    R,
    /// Transmission-side user.
    T,
}

impl User {
    /// Both users, in canonical order.
    pub const BOTH: [User; 2] = [User::R, User::T];

    /// The other user (interference bookkeeping needs the complement).
    pub fn complement(self) -> User {
        match self {
            User::R => User::T,
            User::T => User::R,
        }
    }

    /// Single-letter tag used in CSV output and config keys.
    pub fn label(self) -> &'static str {
        match self {
            User::R => "r",
            User::T => "t",
        }
    }
}

/// Residual phase-error model of the surface elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseError {
    /// Perfect co-phasing: every circular moment is 1.
    Ideal,
    /// Zero-mean von Mises error with concentration `kappa ≥ 0`; `kappa=0`
    /// is a uniform phase (fully scrambled surface).
    VonMises {
        /// Concentration parameter.
        kappa: f64,
    },
}

/// Spatial correlation kernel across fluid-antenna ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationKernel {
    /// `j0(x) = sin(x)/x` — isotropic 3-D scattering (the default).
    Spherical,
    /// Cylindrical `J0(x)` — 2-D ring scattering, for sensitivity studies.
    Cylindrical,
}

/// Convention for the dispersion term of the best-port mean-gain heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcSigma {
    /// `σ = ḡ²/m` — the variance of the Gamma marginal used as if it were a
    /// standard deviation; reproduces the published capacity curves.
    Paper,
    /// `σ = ḡ/√m` — the actual standard deviation.
    Std,
}

// ---------------------------------------------------------------------------
// Config types
// ---------------------------------------------------------------------------

/// Fluid-antenna port grid: `n1 × n2` ports over an aperture of
/// `w1 × w2` wavelengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FasGrid {
    /// Ports along the first dimension (≥ 1).
    pub n1: usize,
    /// Ports along the second dimension (≥ 1).
    pub n2: usize,
    /// Aperture length along the first dimension, in wavelengths (≥ 0).
    pub w1: f64,
    /// Aperture length along the second dimension, in wavelengths (≥ 0).
    pub w2: f64,
}

impl FasGrid {
    /// Total number of ports `N = n1 · n2`.
    pub fn port_count(&self) -> usize {
        self.n1 * self.n2
    }
}

/// Per-user SINR thresholds, in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserThresholds {
    /// Common-stream threshold `γ_th,c` (dB).
    pub common_db: f64,
    /// Private-stream threshold `γ_th,p` (dB).
    pub private_db: f64,
}

/// Full system parameterization.
///
/// The default value is the reference scenario used throughout the shipped
/// configs: surface at `(40,40,0)` m, both users at `(20,20,0)` m, path-loss
/// exponent 2.1, `K = 30` surface elements, `β_r = 0.8`, power split
/// `α_c = 0.6` with 75 % of the private power to user r, unit-power Rician
/// fading with factor 1, von Mises phase error `κ = 8`, a `2×2` port grid
/// over half a squared wavelength per user, copula degrees of freedom 40,
/// thresholds 0 dB (common) and −7 dB (private).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Base-station position (m).
    pub bs_position: [f64; 3],
    /// Surface position (m).
    pub ris_position: [f64; 3],
    /// Reflection-side user position (m).
    pub user_r_position: [f64; 3],
    /// Transmission-side user position (m).
    pub user_t_position: [f64; 3],
    /// Path-loss exponent `χ > 2`.
    pub chi: f64,
    /// Number of surface elements `K ≥ 1`.
    pub k_elements: u32,
    /// Reflection amplitude `β_r ∈ [0, 1]`; `β_t = √(1 − β_r²)` by energy
    /// splitting.
    pub beta_r: f64,
    /// Common-stream power fraction `α_c ∈ (0, 1]`.  (`α_c = 1` sends no
    /// private streams; useful as a degenerate check case.)
    pub alpha_c: f64,
    /// Fraction of the private power budget given to user r, in (0, 1).
    pub private_split_r: f64,
    /// Rice factor of both hops (≥ 0, `0` = Rayleigh).
    pub rice_k: f64,
    /// Residual phase-error model.
    pub phase_error: PhaseError,
    /// Port grid of user r.
    pub grid_r: FasGrid,
    /// Port grid of user t.
    pub grid_t: FasGrid,
    /// Copula degrees of freedom `ν ≥ 1`.
    pub copula_nu: f64,
    /// Thresholds for user r.
    pub thresholds_r: UserThresholds,
    /// Thresholds for user t.
    pub thresholds_t: UserThresholds,
    /// Average-SNR grid `γ̄` (dB) for curves.
    pub snr_grid_db: Vec<f64>,
    /// Port-correlation kernel.
    pub kernel: CorrelationKernel,
    /// Dispersion convention of the capacity heuristic.
    pub ac_sigma: AcSigma,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let grid = FasGrid {
            n1: 2,
            n2: 2,
            w1: 0.5f64.sqrt(),
            w2: 0.5f64.sqrt(),
        };
        ScenarioConfig {
            bs_position: [0.0, 0.0, 0.0],
            ris_position: [40.0, 40.0, 0.0],
            user_r_position: [20.0, 20.0, 0.0],
            user_t_position: [20.0, 20.0, 0.0],
            chi: 2.1,
            k_elements: 30,
            beta_r: 0.8,
            alpha_c: 0.6,
            private_split_r: 0.75,
            rice_k: 1.0,
            phase_error: PhaseError::VonMises { kappa: 8.0 },
            grid_r: grid,
            grid_t: grid,
            copula_nu: 40.0,
            thresholds_r: UserThresholds {
                common_db: 0.0,
                private_db: -7.0,
            },
            thresholds_t: UserThresholds {
                common_db: 0.0,
                private_db: -7.0,
            },
            snr_grid_db: (0..=10).map(|i| 5.0 * i as f64).collect(),
            kernel: CorrelationKernel::Spherical,
            ac_sigma: AcSigma::Paper,
        }
    }
}

// ---------------------------------------------------------------------------
// dB helpers
// ---------------------------------------------------------------------------

/// `10^(db/10)` — dB to linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `10·log10(x)` — linear power ratio to dB.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

// ---------------------------------------------------------------------------
// Derived statistical quantities
// ---------------------------------------------------------------------------

/// First two circular moments of the phase-error law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularMoments {
    /// `φ₁ = E[cos Θ]`.
    pub phi1: f64,
    /// `φ₂ = E[cos 2Θ]`.
    pub phi2: f64,
}

/// Per-port channel-gain law: `g ~ Gamma(shape m, mean ḡ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaMarginal {
    /// Mean channel power `ḡ_u`.
    pub mean_gain: f64,
    /// Shape parameter `m` (a Nakagami-style fading figure).
    pub shape: f64,
}

/// Port-correlation model: the `N×N` Jakes matrix plus the copula degrees
/// of freedom that ride along with it.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationModel {
    /// Symmetric unit-diagonal correlation matrix; ports are flattened
    /// row-major, i.e. port `(i1, i2)` has index `i1·n2 + i2`.
    pub matrix: nalgebra::DMatrix<f64>,
    /// Copula degrees of freedom `ν`.
    pub nu: f64,
}

impl CorrelationModel {
    /// Number of ports.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Mean of the strictly off-diagonal entries — the effective pairwise
    /// correlation `ρ_eff` used by the best-port mean-gain heuristic.
    /// Returns 0 for a single port.
    pub fn mean_offdiagonal(&self) -> f64 {
        let n = self.dim();
        if n < 2 {
            return 0.0;
        }
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    sum += self.matrix[(i, j)];
                }
            }
        }
        sum / (n * (n - 1)) as f64
    }
}

/// Euclidean distance between two points.
fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Two-hop path loss `L_u = (d_sr · d_u)^{−χ}`, where `d_sr` is the
/// base-station–surface distance and `d_u` the surface–user distance.
pub fn path_loss(cfg: &ScenarioConfig, user: User) -> Result<f64, ModelError> {
    let d_sr = dist(cfg.bs_position, cfg.ris_position);
    let d_u = dist(cfg.user_position(user), cfg.ris_position);
    if d_sr == 0.0 {
        return Err(ModelError::Geometry(
            "base station and surface are coincident".into(),
        ));
    }
    if d_u == 0.0 {
        return Err(ModelError::Geometry(format!(
            "user {} and surface are coincident",
            user.label()
        )));
    }
    Ok((d_sr * d_u).powf(-cfg.chi))
}

/// Circular moments `φ_p = E[e^{jpΘ}]` of the phase-error law: 1 for ideal
/// phases, `I_p(κ)/I_0(κ)` for a zero-mean von Mises error (real-valued by
/// symmetry).  `κ = 0` (uniform phase) gives `φ₁ = φ₂ = 0`.
pub fn circular_moments(phase_error: PhaseError) -> CircularMoments {
    match phase_error {
        PhaseError::Ideal => CircularMoments {
            phi1: 1.0,
            phi2: 1.0,
        },
        PhaseError::VonMises { kappa } => {
            debug_assert!(kappa >= 0.0, "kappa must be nonnegative, got {kappa}");
            // Scaled Bessel ratios: the e^{−κ} factors cancel, and the
            // scaled forms stay finite for arbitrarily large κ.
            let i0 = bessel_i_scaled(0, kappa);
            CircularMoments {
                phi1: bessel_i_scaled(1, kappa) / i0,
                phi2: bessel_i_scaled(2, kappa) / i0,
            }
        }
    }
}

/// Mean amplitude `a = E[|h|]` of a unit-power Rician fade with factor `K`:
///
/// ```text
/// a = √(π / (4(K+1))) · ₁F₁(−½; 1; −K)
/// ```
///
/// Ranges from `√π/2 ≈ 0.886` (Rayleigh) towards 1 as `K → ∞`.
pub fn rician_mean_amplitude(rice_k: f64) -> f64 {
    debug_assert!(rice_k >= 0.0, "rice factor must be nonnegative");
    (std::f64::consts::PI / (4.0 * (rice_k + 1.0))).sqrt() * kummer_1f1_half(rice_k)
}

/// Fitted Gamma law of the per-port channel gain.
///
/// With `ã` the geometric mean of the two hop amplitudes and
/// `c = φ₁² ã⁴`, the element sum concentrates such that
///
/// ```text
/// ḡ   = β_u² · ( c + (1 − c)/K )        (exact second moment of |H_u|)
/// m   = (K/2) · c / (1 + φ₂ − 2c)
/// ```
///
/// The `(1 − c)/K` term is the per-element dispersion left out of the
/// leading-order mean `β_u² c`; it vanishes as `K → ∞` but at `K ≈ 30` it
/// shifts `ḡ` by ~2 % and is required for the simulator cross-validation to
/// close.  The shape `m` keeps its leading-order form.
///
/// Errors when `φ₁ ≤ 0` (no coherent combining — the Gamma fit does not
/// apply) or when the shape denominator is nonpositive (degenerate,
/// dispersionless channel such as ideal phases with `ã = 1`).
pub fn gamma_marginal(
    moments: CircularMoments,
    a_tilde: f64,
    beta_u: f64,
    k_elements: u32,
) -> Result<GammaMarginal, ModelError> {
    if !(moments.phi1 > 0.0) {
        return Err(ModelError::Domain(format!(
            "phi1 = {} but the Gamma gain approximation needs phi1 > 0 \
             (a fully scrambled phase leaves no coherent component)",
            moments.phi1
        )));
    }
    if !(a_tilde > 0.0 && a_tilde <= 1.0) {
        return Err(ModelError::Domain(format!(
            "a_tilde = {a_tilde} outside (0, 1]"
        )));
    }
    if k_elements == 0 {
        return Err(ModelError::Domain("k_elements must be at least 1".into()));
    }
    let k = f64::from(k_elements);
    let core = moments.phi1 * moments.phi1 * a_tilde.powi(4);
    let denom = 1.0 + moments.phi2 - 2.0 * core;
    if !(denom > 0.0) {
        return Err(ModelError::Domain(format!(
            "shape denominator 1 + phi2 - 2 phi1^2 a^4 = {denom} is not positive \
             (the channel is deterministic in this limit and has no Gamma fit)"
        )));
    }
    Ok(GammaMarginal {
        mean_gain: beta_u * beta_u * (core + (1.0 - core) / k),
        shape: 0.5 * k * core / denom,
    })
}

/// Jakes-type spatial correlation across the port grid.
///
/// For ports `n = (n¹, n²)` and `ñ = (ñ¹, ñ²)`:
///
/// ```text
/// ρ(n, ñ) = j0( 2π √( ((n¹−ñ¹)/(N¹−1) · w1)² + ((n²−ñ²)/(N²−1) · w2)² ) )
/// ```
///
/// with the spherical or cylindrical zero-order kernel.  A dimension with a
/// single port contributes no displacement (the `N−1` normalization is
/// defined as 0 there).  The matrix has a unit diagonal and entries in
/// `[−1, 1]`; positive-definiteness is restored by the standard `1e-10`
/// jitter at factorization time, not here.
pub fn port_correlation(grid: &FasGrid, kernel: CorrelationKernel, nu: f64) -> CorrelationModel {
    let n = grid.port_count();
    let step = |count: usize, w: f64, delta: f64| -> f64 {
        if count <= 1 {
            0.0
        } else {
            delta / (count as f64 - 1.0) * w
        }
    };
    let k = |x: f64| -> f64 {
        match kernel {
            CorrelationKernel::Spherical => spherical_j0(x),
            CorrelationKernel::Cylindrical => bessel_j0(x),
        }
    };
    let matrix = nalgebra::DMatrix::from_fn(n, n, |a, b| {
        if a == b {
            return 1.0;
        }
        let (a1, a2) = (a / grid.n2, a % grid.n2);
        let (b1, b2) = (b / grid.n2, b % grid.n2);
        let d1 = step(grid.n1, grid.w1, a1 as f64 - b1 as f64);
        let d2 = step(grid.n2, grid.w2, a2 as f64 - b2 as f64);
        k(2.0 * std::f64::consts::PI * (d1 * d1 + d2 * d2).sqrt())
    });
    CorrelationModel { matrix, nu }
}

/// RSMA power bookkeeping: `(α_c, α_{p,r}, α_{p,t})`, always summing to 1.
/// The private budget `1 − α_c` is split `private_split_r : 1 − private_split_r`.
pub fn rsma_power_split(cfg: &ScenarioConfig) -> (f64, f64, f64) {
    let alpha_c = cfg.alpha_c;
    let p_r = cfg.private_split_r * (1.0 - alpha_c);
    let p_t = (1.0 - cfg.private_split_r) * (1.0 - alpha_c);
    (alpha_c, p_r, p_t)
}

// ---------------------------------------------------------------------------
// Per-user accessors and derived bundles
// ---------------------------------------------------------------------------

impl ScenarioConfig {
    /// Position of the given user.
    pub fn user_position(&self, user: User) -> [f64; 3] {
        match user {
            User::R => self.user_r_position,
            User::T => self.user_t_position,
        }
    }

    /// Port grid of the given user.
    pub fn grid(&self, user: User) -> &FasGrid {
        match user {
            User::R => &self.grid_r,
            User::T => &self.grid_t,
        }
    }

    /// Thresholds of the given user.
    pub fn thresholds(&self, user: User) -> UserThresholds {
        match user {
            User::R => self.thresholds_r,
            User::T => self.thresholds_t,
        }
    }

    /// Squared surface amplitude `β_u²` for the given user; the two sides
    /// satisfy `β_r² + β_t² = 1` exactly (energy splitting).
    pub fn beta_sq(&self, user: User) -> f64 {
        match user {
            User::R => self.beta_r * self.beta_r,
            User::T => 1.0 - self.beta_r * self.beta_r,
        }
    }

    /// Private power fraction `α_{p,u}`.
    pub fn alpha_private(&self, user: User) -> f64 {
        let (_, p_r, p_t) = rsma_power_split(self);
        match user {
            User::R => p_r,
            User::T => p_t,
        }
    }

    /// Geometric-mean hop amplitude `ã = √(a_b · a_u)`.  Both hops share
    /// the same Rice factor here, so `ã` equals the single-hop mean
    /// amplitude.
    pub fn a_tilde(&self) -> f64 {
        rician_mean_amplitude(self.rice_k)
    }

    /// The fitted Gamma gain marginal for the given user.
    pub fn gamma_marginal(&self, user: User) -> Result<GammaMarginal, ModelError> {
        gamma_marginal(
            circular_moments(self.phase_error),
            self.a_tilde(),
            self.beta_sq(user).sqrt(),
            self.k_elements,
        )
    }

    /// The port-correlation model for the given user.
    pub fn correlation(&self, user: User) -> CorrelationModel {
        port_correlation(self.grid(user), self.kernel, self.copula_nu)
    }

    /// Validates every invariant; returns all findings (errors and
    /// warnings).  An empty list means the config is pristine.
    pub fn validate(&self) -> Vec<Diagnostic> {
        fn err(out: &mut Vec<Diagnostic>, key: &str, message: String) {
            out.push(Diagnostic {
                key: key.into(),
                line: None,
                message,
                severity: Severity::Error,
            });
        }
        let mut out = Vec::new();

        if !(self.chi > 2.0) {
            err(
                &mut out,
                "chi",
                format!("value {} violates chi > 2", self.chi),
            );
        }
        if self.k_elements == 0 {
            err(
                &mut out,
                "k_elements",
                "element count must be at least 1".into(),
            );
        }
        if !(0.0..=1.0).contains(&self.beta_r) {
            err(
                &mut out,
                "beta_r",
                format!("value {} outside [0, 1]", self.beta_r),
            );
        }
        if !(self.alpha_c > 0.0 && self.alpha_c <= 1.0) {
            err(
                &mut out,
                "alpha_c",
                format!("value {} outside (0, 1]", self.alpha_c),
            );
        }
        if !(self.private_split_r > 0.0 && self.private_split_r < 1.0) {
            err(
                &mut out,
                "private_split_r",
                format!("value {} outside (0, 1)", self.private_split_r),
            );
        }
        if !(self.rice_k >= 0.0) {
            err(
                &mut out,
                "rice_k",
                format!("value {} must be ≥ 0", self.rice_k),
            );
        }
        if let PhaseError::VonMises { kappa } = self.phase_error {
            if !(kappa >= 0.0) {
                err(
                    &mut out,
                    "phase_error",
                    format!("kappa {kappa} must be ≥ 0"),
                );
            } else if kappa == 0.0 {
                out.push(Diagnostic {
                    key: "phase_error".into(),
                    line: None,
                    message: "kappa = 0 gives phi1 = 0: the simulator still runs but \
                              the analytic Gamma fit (outage/capacity formulas) is undefined"
                        .into(),
                    severity: Severity::Warning,
                });
            }
        }
        for (name, grid) in [("grid_r", &self.grid_r), ("grid_t", &self.grid_t)] {
            if grid.n1 == 0 || grid.n2 == 0 {
                err(
                    &mut out,
                    name,
                    "port counts n1, n2 must be at least 1".into(),
                );
            }
            if !(grid.w1 >= 0.0) || !(grid.w2 >= 0.0) {
                err(&mut out, name, "aperture lengths w1, w2 must be ≥ 0".into());
            }
        }
        if !(self.copula_nu >= 1.0) {
            err(
                &mut out,
                "copula_nu",
                format!("value {} must be ≥ 1", self.copula_nu),
            );
        }
        if self.snr_grid_db.is_empty() {
            err(&mut out, "snr_grid_db", "SNR grid must not be empty".into());
        }
        if self.snr_grid_db.iter().any(|v| !v.is_finite()) {
            err(
                &mut out,
                "snr_grid_db",
                "SNR grid entries must be finite".into(),
            );
        }
        for (key, t) in [
            ("thresholds.r", self.thresholds_r),
            ("thresholds.t", self.thresholds_t),
        ] {
            if !t.common_db.is_finite() || !t.private_db.is_finite() {
                err(&mut out, key, "thresholds must be finite".into());
            }
        }
        if dist(self.bs_position, self.ris_position) == 0.0 {
            err(
                &mut out,
                "ris_position",
                "surface coincides with the base station".into(),
            );
        }
        for (key, user) in [("user_r_position", User::R), ("user_t_position", User::T)] {
            if dist(self.user_position(user), self.ris_position) == 0.0 {
                err(&mut out, key, "user coincides with the surface".into());
            }
        }

        // Feasibility of the SINR targets: these do not depend on the SNR,
        // only on the power split, so an infeasible target means certain
        // outage at every SNR point.
        let (alpha_c, p_r, p_t) = rsma_power_split(self);
        for user in User::BOTH {
            let th = self.thresholds(user);
            let gc = db_to_linear(th.common_db);
            if alpha_c - (p_r + p_t) * gc <= 0.0 {
                out.push(Diagnostic {
                    key: format!("thresholds.{}.common_db", user.label()),
                    line: None,
                    message: format!(
                        "common-message constraint violated: alpha_c - (1-alpha_c)*gamma_th,c \
                         = {:.6} <= 0, so the common target {} dB is unreachable at any gain",
                        alpha_c - (p_r + p_t) * gc,
                        th.common_db
                    ),
                    severity: Severity::Warning,
                });
            }
            let gp = db_to_linear(th.private_db);
            let (own, other) = match user {
                User::R => (p_r, p_t),
                User::T => (p_t, p_r),
            };
            if own - other * gp <= 0.0 {
                out.push(Diagnostic {
                    key: format!("thresholds.{}.private_db", user.label()),
                    line: None,
                    message: format!(
                        "private-message constraint violated for user {}: \
                         alpha_p,u - alpha_p,other*gamma_th,p = {:.6} <= 0",
                        user.label(),
                        own - other * gp
                    ),
                    severity: Severity::Warning,
                });
            }
        }
        out
    }

    /// Canonical text dump: every field, fixed order, shortest-round-trip
    /// float formatting.  Parsing this dump reproduces the config exactly;
    /// it is also the input to [`ScenarioConfig::scenario_id`].
    pub fn canonical_dump(&self) -> String {
        let v3 = |v: [f64; 3]| format!("{:?} {:?} {:?}", v[0], v[1], v[2]);
        let grid = |g: &FasGrid| {
            format!(
                "n1 = {}\nn2 = {}\nw1 = {:?}\nw2 = {:?}",
                g.n1, g.n2, g.w1, g.w2
            )
        };
        let phase = match self.phase_error {
            PhaseError::Ideal => "ideal".to_string(),
            PhaseError::VonMises { kappa } => format!("von_mises({kappa:?})"),
        };
        let snr = self
            .snr_grid_db
            .iter()
            .map(|v| format!("{v:?}"))
            .collect::<Vec<_>>()
            .join(" ");
        let mut s = String::new();
        s.push_str(&format!("bs_position = {}\n", v3(self.bs_position)));
        s.push_str(&format!("ris_position = {}\n", v3(self.ris_position)));
        s.push_str(&format!("user_r_position = {}\n", v3(self.user_r_position)));
        s.push_str(&format!("user_t_position = {}\n", v3(self.user_t_position)));
        s.push_str(&format!("chi = {:?}\n", self.chi));
        s.push_str(&format!("k_elements = {}\n", self.k_elements));
        s.push_str(&format!("beta_r = {:?}\n", self.beta_r));
        s.push_str(&format!("alpha_c = {:?}\n", self.alpha_c));
        s.push_str(&format!("private_split_r = {:?}\n", self.private_split_r));
        s.push_str(&format!("rice_k = {:?}\n", self.rice_k));
        s.push_str(&format!("phase_error = {phase}\n"));
        for (tag, g) in [("r", &self.grid_r), ("t", &self.grid_t)] {
            for line in grid(g).lines() {
                s.push_str(&format!("grid_{tag}.{line}\n"));
            }
        }
        s.push_str(&format!("copula_nu = {:?}\n", self.copula_nu));
        for (tag, t) in [("r", self.thresholds_r), ("t", self.thresholds_t)] {
            s.push_str(&format!("thresholds.{tag}.common_db = {:?}\n", t.common_db));
            s.push_str(&format!(
                "thresholds.{tag}.private_db = {:?}\n",
                t.private_db
            ));
        }
        s.push_str(&format!("snr_grid_db = {snr}\n"));
        s.push_str(&format!(
            "kernel = {}\n",
            match self.kernel {
                CorrelationKernel::Spherical => "spherical",
                CorrelationKernel::Cylindrical => "cylindrical",
            }
        ));
        s.push_str(&format!(
            "ac_sigma = {}\n",
            match self.ac_sigma {
                AcSigma::Paper => "paper",
                AcSigma::Std => "std",
            }
        ));
        s
    }

    /// Short content hash of the canonical dump (12 hex chars); identifies
    /// a scenario across CSV rows and re-runs.
    pub fn scenario_id(&self) -> String {
        let digest = Sha256::digest(self.canonical_dump().as_bytes());
        let mut s = String::with_capacity(12);
        for b in digest.iter().take(6) {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Scenario file parsing
// ---------------------------------------------------------------------------

/// A parsed but untyped scenario file: ordered `(key, value, line)` entries.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    /// Entries in file order.
    pub entries: Vec<(String, String, usize)>,
}

impl RawConfig {
    /// Splits a scenario file into key/value pairs.  Lines are `key = value`
    /// with `#` comments (full-line or trailing) and blank lines ignored.
    /// Syntax problems (missing `=`, empty key, duplicate key) become
    /// error diagnostics.
    pub fn parse_str(text: &str) -> (RawConfig, Vec<Diagnostic>) {
        let mut raw = RawConfig::default();
        let mut diags = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let stripped = match line.find('#') {
                Some(pos) => &line[..pos],
                None => line,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let Some(eq) = stripped.find('=') else {
                diags.push(Diagnostic {
                    key: "<syntax>".into(),
                    line: Some(lineno),
                    message: format!("expected `key = value`, got {stripped:?}"),
                    severity: Severity::Error,
                });
                continue;
            };
            let key = stripped[..eq].trim().to_string();
            let value = stripped[eq + 1..].trim().to_string();
            if key.is_empty() {
                diags.push(Diagnostic {
                    key: "<syntax>".into(),
                    line: Some(lineno),
                    message: "empty key before `=`".into(),
                    severity: Severity::Error,
                });
                continue;
            }
            if !seen.insert(key.clone()) {
                diags.push(Diagnostic {
                    key: key.clone(),
                    line: Some(lineno),
                    message: "duplicate key (each key may appear once)".into(),
                    severity: Severity::Error,
                });
                continue;
            }
            raw.entries.push((key, value, lineno));
        }
        (raw, diags)
    }
}

/// Parses `text` into a config, starting from the defaults and overriding
/// each present key.  Returns the config together with *all* diagnostics
/// (invariant violations as errors, feasibility findings as warnings);
/// the config is only meaningful when no error-severity diagnostic is
/// present.
///
/// Keys under `sweep.` are left for the CLI layer and not treated as
/// unknown here.
pub fn parse_scenario(text: &str) -> (ScenarioConfig, Vec<Diagnostic>) {
    let (raw, mut diags) = RawConfig::parse_str(text);
    let mut cfg = ScenarioConfig::default();

    for (key, value, lineno) in &raw.entries {
        let mut bad = |message: String| {
            diags.push(Diagnostic {
                key: key.clone(),
                line: Some(*lineno),
                message,
                severity: Severity::Error,
            });
        };
        macro_rules! set {
            ($target:expr, $parse:expr) => {
                match $parse {
                    Ok(v) => $target = v,
                    Err(msg) => bad(msg),
                }
            };
        }
        match key.as_str() {
            "bs_position" => set!(cfg.bs_position, parse_vec3(value)),
            "ris_position" => set!(cfg.ris_position, parse_vec3(value)),
            "user_r_position" => set!(cfg.user_r_position, parse_vec3(value)),
            "user_t_position" => set!(cfg.user_t_position, parse_vec3(value)),
            "chi" => set!(cfg.chi, parse_f64(value)),
            "k_elements" => set!(cfg.k_elements, parse_u32(value)),
            "beta_r" => set!(cfg.beta_r, parse_f64(value)),
            "alpha_c" => set!(cfg.alpha_c, parse_f64(value)),
            "private_split_r" => set!(cfg.private_split_r, parse_f64(value)),
            "rice_k" => set!(cfg.rice_k, parse_f64(value)),
            "phase_error" => set!(cfg.phase_error, parse_phase(value)),
            "grid_r.n1" => set!(cfg.grid_r.n1, parse_usize(value)),
            "grid_r.n2" => set!(cfg.grid_r.n2, parse_usize(value)),
            "grid_r.w1" => set!(cfg.grid_r.w1, parse_f64(value)),
            "grid_r.w2" => set!(cfg.grid_r.w2, parse_f64(value)),
            "grid_t.n1" => set!(cfg.grid_t.n1, parse_usize(value)),
            "grid_t.n2" => set!(cfg.grid_t.n2, parse_usize(value)),
            "grid_t.w1" => set!(cfg.grid_t.w1, parse_f64(value)),
            "grid_t.w2" => set!(cfg.grid_t.w2, parse_f64(value)),
            "copula_nu" => set!(cfg.copula_nu, parse_f64(value)),
            "thresholds.r.common_db" => set!(cfg.thresholds_r.common_db, parse_f64(value)),
            "thresholds.r.private_db" => set!(cfg.thresholds_r.private_db, parse_f64(value)),
            "thresholds.t.common_db" => set!(cfg.thresholds_t.common_db, parse_f64(value)),
            "thresholds.t.private_db" => set!(cfg.thresholds_t.private_db, parse_f64(value)),
            "snr_grid_db" => set!(cfg.snr_grid_db, parse_f64_list(value)),
            "kernel" => set!(cfg.kernel, parse_kernel(value)),
            "ac_sigma" => set!(cfg.ac_sigma, parse_ac_sigma(value)),
            k if k.starts_with("sweep.") => {} // CLI section, handled there
            _ => bad("unknown key (check spelling against the documented schema)".into()),
        }
    }

    diags.extend(cfg.validate());
    (cfg, diags)
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .map_err(|_| format!("expected a real number, got {s:?}"))
}

fn parse_u32(s: &str) -> Result<u32, String> {
    s.parse::<u32>()
        .map_err(|_| format!("expected a nonnegative integer, got {s:?}"))
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse::<usize>()
        .map_err(|_| format!("expected a nonnegative integer, got {s:?}"))
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(format!(
            "expected three space-separated coordinates, got {s:?}"
        ));
    }
    let mut out = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        out[i] = parse_f64(p)?;
    }
    Ok(out)
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    if parts.is_empty() {
        return Err("expected at least one value".into());
    }
    parts.iter().map(|p| parse_f64(p)).collect()
}

fn parse_phase(s: &str) -> Result<PhaseError, String> {
    if s == "ideal" {
        return Ok(PhaseError::Ideal);
    }
    if let Some(rest) = s.strip_prefix("von_mises(") {
        if let Some(inner) = rest.strip_suffix(')') {
            return Ok(PhaseError::VonMises {
                kappa: parse_f64(inner.trim())?,
            });
        }
    }
    Err(format!("expected `ideal` or `von_mises(KAPPA)`, got {s:?}"))
}

fn parse_kernel(s: &str) -> Result<CorrelationKernel, String> {
    match s {
        "spherical" => Ok(CorrelationKernel::Spherical),
        "cylindrical" => Ok(CorrelationKernel::Cylindrical),
        _ => Err(format!("expected `spherical` or `cylindrical`, got {s:?}")),
    }
}

fn parse_ac_sigma(s: &str) -> Result<AcSigma, String> {
    match s {
        "paper" => Ok(AcSigma::Paper),
        "std" => Ok(AcSigma::Std),
        _ => Err(format!("expected `paper` or `std`, got {s:?}")),
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn close(got: f64, want: f64, rel: f64) -> bool {
        (got - want).abs() <= rel * want.abs().max(1e-300)
    }

    // --- geometry -----------------------------------------------------

    #[test]
    fn path_loss_reference_geometry() {
        let cfg = ScenarioConfig::default();
        // d_sr = 40√2, d_u = 20√2 ⇒ L = (40√2 · 20√2)^{−2.1} = 1600^{−2.1}.
        let l = path_loss(&cfg, User::R).unwrap();
        assert!(close(l, 1.8678759761524147e-7, 1e-12), "L = {l:e}");
        // Both users sit at the same point by default.
        assert_eq!(l, path_loss(&cfg, User::T).unwrap());
    }

    #[test]
    fn path_loss_unit_and_scaling() {
        let mut cfg = ScenarioConfig {
            chi: 2.0 + 1e-12, // chi > 2 invariant; effectively 2 for the test
            bs_position: [0.0, 0.0, 0.0],
            ris_position: [1.0, 0.0, 0.0],
            user_r_position: [1.0, 1.0, 0.0],
            ..ScenarioConfig::default()
        };
        let l = path_loss(&cfg, User::R).unwrap();
        assert!(close(l, 1.0, 1e-9), "unit distances: {l}");

        // Doubling both distances at exponent chi scales by 4^{-chi}.
        cfg.chi = 2.1;
        let l1 = path_loss(&cfg, User::R).unwrap();
        cfg.ris_position = [2.0, 0.0, 0.0];
        cfg.user_r_position = [2.0, 2.0, 0.0];
        let l2 = path_loss(&cfg, User::R).unwrap();
        assert!(close(l2 / l1, 4.0f64.powf(-2.1), 1e-12));
    }

    #[test]
    fn path_loss_rejects_coincident_points() {
        let cfg = ScenarioConfig {
            user_r_position: [40.0, 40.0, 0.0],
            ..ScenarioConfig::default()
        };
        assert!(matches!(
            path_loss(&cfg, User::R),
            Err(ModelError::Geometry(_))
        ));
    }

    // --- circular moments ----------------------------------------------

    #[test]
    fn moments_reference_values() {
        let m = circular_moments(PhaseError::Ideal);
        assert_eq!((m.phi1, m.phi2), (1.0, 1.0));

        let m = circular_moments(PhaseError::VonMises { kappa: 0.0 });
        assert_eq!((m.phi1, m.phi2), (0.0, 0.0));

        // Bessel-ratio oracle values.
        let m8 = circular_moments(PhaseError::VonMises { kappa: 8.0 });
        assert!(close(m8.phi1, 0.9352354935294386, 1e-12), "{}", m8.phi1);
        assert!(close(m8.phi2, 0.7661911266176403, 1e-12), "{}", m8.phi2);

        let m2 = circular_moments(PhaseError::VonMises { kappa: 2.0 });
        assert!(close(m2.phi1, 0.697774657964008, 1e-12));
        assert!(close(m2.phi2, 0.302225342035992, 1e-12));
    }

    #[test]
    fn moments_ordering_property() {
        // 0 ≤ φ₂ ≤ φ₁ ≤ 1, φ₁ increasing in κ.
        let mut prev = 0.0;
        for kappa in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0] {
            let m = circular_moments(PhaseError::VonMises { kappa });
            assert!((0.0..=1.0).contains(&m.phi1), "phi1 at {kappa}");
            assert!(m.phi2 <= m.phi1 + 1e-15, "phi2 > phi1 at {kappa}");
            assert!(m.phi2 >= 0.0);
            assert!(m.phi1 >= prev - 1e-15, "phi1 not increasing at {kappa}");
            prev = m.phi1;
        }
    }

    // --- Rician amplitude ----------------------------------------------

    #[test]
    fn rician_amplitude_reference() {
        // Rayleigh mean √π/2.
        assert!(close(rician_mean_amplitude(0.0), 0.886226925452758, 1e-12));
        assert!(close(rician_mean_amplitude(1.0), 0.9064540255219695, 1e-12));
        // Deterministic limit: amplitude → 1 from below.
        let a_big = rician_mean_amplitude(5e4);
        assert!(a_big < 1.0 && a_big > 0.999_99, "a(5e4) = {a_big}");
    }

    // --- Gamma marginal --------------------------------------------------

    #[test]
    fn gamma_marginal_reference_values() {
        let cfg = ScenarioConfig::default(); // K=30, κ=8, Rice 1, β_r=0.8
        let gm = cfg.gamma_marginal(User::R).unwrap();
        assert!(
            close(gm.mean_gain, 0.3866603633825863, 1e-12),
            "{}",
            gm.mean_gain
        );
        assert!(close(gm.shape, 15.136626144817985, 1e-12), "{}", gm.shape);

        let gt = cfg.gamma_marginal(User::T).unwrap();
        assert!(close(gt.mean_gain, 0.21749645440270474, 1e-12));
        // Shape is β-independent.
        assert!(close(gt.shape, gm.shape, 1e-15));
    }

    #[test]
    fn gamma_marginal_ideal_phase_closed_form() {
        // Ideal phases: m = K ã⁴ / (4 (1 − ã⁴)).
        let cfg = ScenarioConfig {
            phase_error: PhaseError::Ideal,
            ..ScenarioConfig::default()
        };
        let gm = cfg.gamma_marginal(User::R).unwrap();
        assert!(close(gm.shape, 15.58568488151201, 1e-12), "{}", gm.shape);
    }

    #[test]
    fn gamma_marginal_limits_and_errors() {
        let m8 = circular_moments(PhaseError::VonMises { kappa: 8.0 });
        // β = 0 kills the mean but not the shape.
        let gm = gamma_marginal(m8, 0.9, 0.0, 30).unwrap();
        assert_eq!(gm.mean_gain, 0.0);
        assert!(gm.shape > 0.0);

        // Mean converges to β² φ₁² ã⁴ as K grows.
        let a = rician_mean_amplitude(1.0);
        let core = m8.phi1 * m8.phi1 * a.powi(4);
        let g_small = gamma_marginal(m8, a, 0.8, 30).unwrap().mean_gain;
        let g_large = gamma_marginal(m8, a, 0.8, 3_000_000).unwrap().mean_gain;
        let limit = 0.64 * core;
        assert!((g_large - limit).abs() < 1e-7);
        assert!(
            (g_small - limit).abs() > 1e-3,
            "finite-K term should matter"
        );

        // Scrambled phase: no Gamma fit.
        let m0 = circular_moments(PhaseError::VonMises { kappa: 0.0 });
        assert!(matches!(
            gamma_marginal(m0, 0.9, 0.8, 30),
            Err(ModelError::Domain(_))
        ));
        // Deterministic channel (ideal phase, ã = 1): degenerate denominator.
        let ideal = circular_moments(PhaseError::Ideal);
        assert!(matches!(
            gamma_marginal(ideal, 1.0, 0.8, 30),
            Err(ModelError::Domain(_))
        ));
        assert!(gamma_marginal(ideal, 1.2, 0.8, 30).is_err());
        assert!(gamma_marginal(m8, 0.9, 0.8, 0).is_err());
    }

    #[test]
    fn gamma_marginal_shape_monotone_in_k_and_kappa() {
        let a = rician_mean_amplitude(1.0);
        let mut prev = 0.0;
        for k in [10, 30, 55, 100] {
            let m = circular_moments(PhaseError::VonMises { kappa: 8.0 });
            let s = gamma_marginal(m, a, 0.8, k).unwrap().shape;
            assert!(s > prev, "shape not increasing in K at {k}");
            prev = s;
        }
        let mut prev = 0.0;
        for kappa in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let m = circular_moments(PhaseError::VonMises { kappa });
            let s = gamma_marginal(m, a, 0.8, 30).unwrap().shape;
            assert!(s > prev, "shape not increasing in kappa at {kappa}");
            prev = s;
        }
    }

    // --- port correlation ------------------------------------------------

    #[test]
    fn correlation_reference_grid() {
        let grid = FasGrid {
            n1: 2,
            n2: 2,
            w1: 0.5f64.sqrt(),
            w2: 0.5f64.sqrt(),
        };
        let c = port_correlation(&grid, CorrelationKernel::Spherical, 40.0);
        assert_eq!(c.dim(), 4);
        // Unit diagonal, symmetry.
        for i in 0..4 {
            assert_eq!(c.matrix[(i, i)], 1.0);
            for j in 0..4 {
                assert!((c.matrix[(i, j)] - c.matrix[(j, i)]).abs() <= 1e-15);
                assert!(c.matrix[(i, j)].abs() <= 1.0);
            }
        }
        // Adjacent ports: j0(2π·√0.5) — oracle value.
        let adj = c.matrix[(0, 1)];
        assert!(close(adj, -0.21695429437747638, 1e-12), "{adj}");
        assert_eq!(adj, c.matrix[(0, 2)]);
        // Diagonal pair: j0(2π) = 0 up to roundoff.
        assert!(c.matrix[(0, 3)].abs() < 1e-15);
        // Effective pairwise correlation: (8·adj + 4·diag)/12.
        assert!(close(c.mean_offdiagonal(), -0.1446361962516509, 1e-12));
        // PSD after the standard jitter.
        let mut jittered = c.matrix.clone();
        for i in 0..4 {
            jittered[(i, i)] += 1e-10;
        }
        assert!(nalgebra::Cholesky::new(jittered).is_some());
    }

    #[test]
    fn correlation_degenerate_cases() {
        // Colocated ports: all-ones matrix.
        let grid = FasGrid {
            n1: 2,
            n2: 2,
            w1: 0.0,
            w2: 0.0,
        };
        let c = port_correlation(&grid, CorrelationKernel::Spherical, 40.0);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(c.matrix[(i, j)], 1.0);
            }
        }
        // Single-port grid.
        let single = FasGrid {
            n1: 1,
            n2: 1,
            w1: 0.5,
            w2: 0.5,
        };
        let c1 = port_correlation(&single, CorrelationKernel::Spherical, 40.0);
        assert_eq!(c1.dim(), 1);
        assert_eq!(c1.mean_offdiagonal(), 0.0);
        // 1×2 grid: the singleton dimension contributes no displacement.
        let line = FasGrid {
            n1: 1,
            n2: 2,
            w1: 0.7,
            w2: 0.5f64.sqrt(),
        };
        let cl = port_correlation(&line, CorrelationKernel::Spherical, 40.0);
        assert!(close(cl.matrix[(0, 1)], -0.21695429437747638, 1e-12));
    }

    #[test]
    fn correlation_cylindrical_kernel_differs() {
        let grid = FasGrid {
            n1: 2,
            n2: 1,
            w1: 0.5f64.sqrt(),
            w2: 0.0,
        };
        let s = port_correlation(&grid, CorrelationKernel::Spherical, 40.0);
        let c = port_correlation(&grid, CorrelationKernel::Cylindrical, 40.0);
        // J0(2π·0.70711) vs j0: different kernels, both within [−1, 1].
        assert!((s.matrix[(0, 1)] - c.matrix[(0, 1)]).abs() > 0.05);
        assert!(c.matrix[(0, 1)].abs() <= 1.0);
    }

    // --- power split -----------------------------------------------------

    #[test]
    fn power_split_reference() {
        let cfg = ScenarioConfig::default(); // 0.6 / 0.75
        let (c, pr, pt) = rsma_power_split(&cfg);
        assert!(close(c, 0.6, 1e-15));
        assert!(close(pr, 0.3, 1e-12));
        assert!(close(pt, 0.1, 1e-12));
        assert!(((c + pr + pt) - 1.0).abs() < 1e-15);

        let sym = ScenarioConfig {
            alpha_c: 0.5,
            private_split_r: 0.5,
            ..ScenarioConfig::default()
        };
        let (c, pr, pt) = rsma_power_split(&sym);
        assert_eq!((c, pr, pt), (0.5, 0.25, 0.25));

        // α_c → 1: private powers vanish.
        let all_common = ScenarioConfig {
            alpha_c: 1.0,
            ..ScenarioConfig::default()
        };
        let (_, pr, pt) = rsma_power_split(&all_common);
        assert_eq!((pr, pt), (0.0, 0.0));
    }

    #[test]
    fn energy_splitting_is_exact() {
        for beta_r in [0.0, 0.3, 0.45, 0.8, 1.0] {
            let cfg = ScenarioConfig {
                beta_r,
                ..ScenarioConfig::default()
            };
            let total = cfg.beta_sq(User::R) + cfg.beta_sq(User::T);
            assert_eq!(total, 1.0, "beta_r = {beta_r}");
        }
    }

    // --- dB ----------------------------------------------------------------

    #[test]
    fn db_conversions() {
        assert!(close(db_to_linear(-7.0), 0.19952623149688797, 1e-14));
        assert!(close(db_to_linear(0.0), 1.0, 1e-15));
        assert!(close(db_to_linear(30.0), 1000.0, 1e-13));
        assert!(close(linear_to_db(db_to_linear(17.3)), 17.3, 1e-12));
    }

    // --- config parsing -----------------------------------------------------

    #[test]
    fn default_config_is_pristine() {
        let diags = ScenarioConfig::default().validate();
        assert!(diags.is_empty(), "unexpected diagnostics: {diags:?}");
    }

    #[test]
    fn canonical_dump_round_trips() {
        let cfg = ScenarioConfig {
            beta_r: 0.55,
            k_elements: 55,
            phase_error: PhaseError::VonMises { kappa: 2.5 },
            snr_grid_db: vec![-3.5, 0.0, 12.25],
            kernel: CorrelationKernel::Cylindrical,
            ac_sigma: AcSigma::Std,
            ..ScenarioConfig::default()
        };
        let (parsed, diags) = parse_scenario(&cfg.canonical_dump());
        assert!(
            diags.iter().all(|d| d.severity != Severity::Error),
            "{diags:?}"
        );
        assert_eq!(parsed, cfg);
        assert_eq!(parsed.scenario_id(), cfg.scenario_id());
    }

    #[test]
    fn scenario_id_is_stable_and_sensitive() {
        let a = ScenarioConfig::default();
        let id1 = a.scenario_id();
        assert_eq!(id1.len(), 12);
        assert_eq!(id1, ScenarioConfig::default().scenario_id());
        let b = ScenarioConfig {
            beta_r: 0.81,
            ..ScenarioConfig::default()
        };
        assert_ne!(id1, b.scenario_id());
    }

    #[test]
    fn parser_reports_key_and_line() {
        let text = "beta_r = 1.2\nnot_a_key = 3\nchi 2.1\n";
        let (_, diags) = parse_scenario(text);
        // Range violation on beta_r.
        assert!(diags
            .iter()
            .any(|d| d.key == "beta_r" && d.severity == Severity::Error));
        // Unknown key named with its line.
        assert!(diags
            .iter()
            .any(|d| d.key == "not_a_key" && d.line == Some(2)));
        // Syntax error for the missing '='.
        assert!(diags
            .iter()
            .any(|d| d.key == "<syntax>" && d.line == Some(3)));
    }

    #[test]
    fn parser_accepts_comments_and_sweep_keys() {
        let text = "\
# scenario override
k_elements = 55   # trailing comment
sweep.variable = beta_r
sweep.values = 0.45 0.6 0.9
";
        let (cfg, diags) = parse_scenario(text);
        assert!(diags.is_empty(), "{diags:?}");
        assert_eq!(cfg.k_elements, 55);
    }

    #[test]
    fn parser_rejects_duplicates_and_bad_values() {
        let (_, diags) = parse_scenario("chi = 2.5\nchi = 2.6\n");
        assert!(diags.iter().any(|d| d.message.contains("duplicate")));
        let (_, diags) = parse_scenario("phase_error = von_mises[8]\n");
        assert!(diags.iter().any(|d| d.key == "phase_error"));
        let (_, diags) = parse_scenario("bs_position = 1 2\n");
        assert!(diags.iter().any(|d| d.key == "bs_position"));
    }

    #[test]
    fn feasibility_warning_for_small_alpha_c() {
        // alpha_c = 0.4 with a 0 dB common threshold: 0.4 − 0.6·1 < 0.
        let (_, diags) = parse_scenario("alpha_c = 0.4\n");
        let warn = diags
            .iter()
            .find(|d| d.severity == Severity::Warning)
            .expect("expected a feasibility warning");
        assert!(warn.message.contains("common-message constraint violated"));
        // The boundary case alpha_c = 0.5 is also infeasible (≤ 0).
        let (_, diags) = parse_scenario("alpha_c = 0.5\n");
        assert!(diags.iter().any(|d| d.severity == Severity::Warning));
        // The reference split is feasible.
        let (_, diags) = parse_scenario("alpha_c = 0.6\n");
        assert!(diags.iter().all(|d| d.severity != Severity::Warning));
    }

    #[test]
    fn phase_parsing_variants() {
        let (cfg, diags) = parse_scenario("phase_error = ideal\n");
        assert!(diags.is_empty());
        assert_eq!(cfg.phase_error, PhaseError::Ideal);
        let (cfg, _) = parse_scenario("phase_error = von_mises( 2.5 )\n");
        assert_eq!(cfg.phase_error, PhaseError::VonMises { kappa: 2.5 });
        // κ = 0 parses but warns.
        let (_, diags) = parse_scenario("phase_error = von_mises(0)\n");
        assert!(diags
            .iter()
            .any(|d| d.severity == Severity::Warning && d.key == "phase_error"));
    }
}
