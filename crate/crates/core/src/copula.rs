//! Joint law of the fluid-antenna port gains.
//!
//! Each port sees a Gamma-distributed channel gain (the marginal fitted in
//! [`crate::model`]); across ports the gains are coupled by a Student-t
//! copula whose correlation matrix is the Jakes port-correlation model and
//! whose degrees of freedom `ν` control tail dependence.  Port selection
//! takes the best port, so the quantity the analytic layer needs is the CDF
//! of the *maximum* over the ports:
//!
//! ```text
//! F_max(g) = T_{ν,Σ}( t_ν⁻¹(F_Γ(g)), …, t_ν⁻¹(F_Γ(g)) )
//! ```
//!
//! i.e. the multivariate t CDF evaluated on the diagonal.  The module also
//! exposes the joint density along the diagonal, a numeric density of the
//! maximum, and an exact sampler of the copula (used to cross-check the
//! quasi-Monte-Carlo CDF).

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::model::{CorrelationModel, GammaMarginal, ModelError, ScenarioConfig, User};
use crate::specfun::{
    inv_reg_lower_gamma_unchecked, ln_gamma, mvt_cdf, reg_lower_gamma_unchecked, student_t_cdf,
    student_t_pdf, student_t_quantile, QmcEstimate, QmcSettings, SpecFunError,
};

// ---------------------------------------------------------------------------
// Gamma marginal as a distribution
// ---------------------------------------------------------------------------

impl GammaMarginal {
    /// Rate parameter `λ = m/ḡ`.
    pub fn rate(&self) -> f64 {
        self.shape / self.mean_gain
    }

    /// CDF `P(m, λg)`; 0 for `g ≤ 0`.
    pub fn cdf(&self, g: f64) -> f64 {
        if g <= 0.0 {
            return 0.0;
        }
        reg_lower_gamma_unchecked(self.shape, self.rate() * g)
    }

    /// Density `λ^m g^{m−1} e^{−λg} / Γ(m)`; 0 for `g < 0`.
    pub fn pdf(&self, g: f64) -> f64 {
        if g < 0.0 {
            return 0.0;
        }
        let m = self.shape;
        let rate = self.rate();
        if g == 0.0 {
            // Limit of the density at the origin.
            return match m.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Greater) => 0.0,
                Some(std::cmp::Ordering::Equal) => rate,
                _ => f64::INFINITY,
            };
        }
        (m * rate.ln() + (m - 1.0) * g.ln() - rate * g - ln_gamma(m)).exp()
    }

    /// Quantile `F⁻¹(p)`; clamps `p` into `[0, 1]` with `F⁻¹(0)=0`,
    /// `F⁻¹(1)=∞`.
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return f64::INFINITY;
        }
        inv_reg_lower_gamma_unchecked(self.shape, p) / self.rate()
    }
}

// ---------------------------------------------------------------------------
// Best-port gain law
// ---------------------------------------------------------------------------

/// The gain law of a fluid-antenna user: Gamma marginals tied together by a
/// Student-t copula over the port-correlation matrix.
#[derive(Debug, Clone)]
pub struct BestPortGainLaw {
    /// Per-port Gamma marginal.
    pub marginal: GammaMarginal,
    /// Port correlation and copula degrees of freedom.
    pub correlation: CorrelationModel,
}

impl BestPortGainLaw {
    /// Bundles a marginal with a correlation model.
    pub fn new(marginal: GammaMarginal, correlation: CorrelationModel) -> Self {
        BestPortGainLaw {
            marginal,
            correlation,
        }
    }

    /// Builds the law of the given user straight from a scenario.
    pub fn from_scenario(cfg: &ScenarioConfig, user: User) -> Result<Self, ModelError> {
        Ok(BestPortGainLaw::new(
            cfg.gamma_marginal(user)?,
            cfg.correlation(user),
        ))
    }

    /// Number of ports `N`.
    pub fn port_count(&self) -> usize {
        self.correlation.dim()
    }

    /// CDF of the best-port gain at `g`.
    ///
    /// Exact (`std_err = 0`) for a single port; otherwise the diagonal
    /// multivariate-t evaluation with the estimator's error estimate
    /// attached.
    pub fn max_gain_cdf(
        &self,
        g: f64,
        settings: &QmcSettings,
    ) -> Result<QmcEstimate, SpecFunError> {
        let u = self.marginal.cdf(g);
        if self.port_count() == 1 {
            return Ok(QmcEstimate::exact(u));
        }
        if u <= 0.0 {
            return Ok(QmcEstimate::exact(0.0));
        }
        if u >= 1.0 {
            return Ok(QmcEstimate::exact(1.0));
        }
        let q = student_t_quantile(u, self.correlation.nu);
        let upper = vec![q; self.port_count()];
        mvt_cdf(
            &upper,
            &self.correlation.matrix,
            self.correlation.nu,
            settings,
        )
    }

    /// Numeric density of the best-port gain: central difference of
    /// [`Self::max_gain_cdf`] with step `h` (auto-chosen when `None`),
    /// clamped to be nonnegative.
    pub fn max_gain_density_numeric(
        &self,
        g: f64,
        settings: &QmcSettings,
        h: Option<f64>,
    ) -> Result<f64, SpecFunError> {
        if g < 0.0 {
            return Ok(0.0);
        }
        let h = h.unwrap_or_else(|| (1e-4 * self.marginal.mean_gain).max(1e-6 * g.abs()));
        let lo = (g - h).max(0.0);
        let hi = g + h;
        let f_hi = self.max_gain_cdf(hi, settings)?.value;
        let f_lo = self.max_gain_cdf(lo, settings)?.value;
        Ok(((f_hi - f_lo) / (hi - lo)).max(0.0))
    }

    /// Joint density of *all* ports sitting at the same gain `g` (the
    /// diagonal of the joint law): the product of the Gamma marginal
    /// densities times the copula density
    /// `c(u·1) = f_{T,ν,Σ}(q·1) / ∏ f_{t,ν}(q)` with `q = t_ν⁻¹(F_Γ(g))`.
    pub fn diagonal_joint_density(&self, g: f64) -> Result<f64, SpecFunError> {
        let d = self.port_count();
        let pdf = self.marginal.pdf(g);
        if d == 1 {
            return Ok(pdf);
        }
        if g <= 0.0 {
            return Ok(0.0);
        }
        let u = self.marginal.cdf(g);
        if u <= 0.0 || u >= 1.0 {
            return Ok(0.0);
        }
        let q = student_t_quantile(u, self.correlation.nu);
        let chol = cholesky_with_jitter(&self.correlation.matrix)?;
        let nu = self.correlation.nu;
        let df = d as f64;

        // ln |Σ| and the quadratic form q² · 1ᵀ Σ⁻¹ 1 from the factor.
        let l = chol.l();
        let mut ln_det = 0.0;
        for i in 0..d {
            ln_det += l[(i, i)].ln();
        }
        let ln_det = 2.0 * ln_det;
        let ones = nalgebra::DVector::from_element(d, 1.0);
        let solved = chol.solve(&ones);
        let quad = q * q * ones.dot(&solved);

        let ln_joint_t = ln_gamma((nu + df) / 2.0)
            - ln_gamma(nu / 2.0)
            - 0.5 * df * (nu * std::f64::consts::PI).ln()
            - 0.5 * ln_det
            - 0.5 * (nu + df) * (quad / nu).ln_1p();
        let ln_copula = ln_joint_t - df * student_t_pdf(q, nu).ln();
        Ok(ln_copula.exp() * pdf.powi(d as i32))
    }

    /// Draws `count` best-port gains by exact sampling of the copula:
    /// `x = L ε / √(s/ν)` with `ε ~ N(0, I)`, `s ~ χ²_ν`, mapped through
    /// the t CDF and the Gamma quantile, then maximized over ports.
    /// Deterministic in `seed`.
    pub fn sample_max_gains(&self, count: usize, seed: u64) -> Result<Vec<f64>, SpecFunError> {
        let d = self.port_count();
        let chol = cholesky_with_jitter(&self.correlation.matrix)?;
        let l = chol.l();
        let nu = self.correlation.nu;
        let chi2 = ChiSquared::new(nu).map_err(|e| {
            crate::specfun::domain(
                "sample_max_gains",
                format!("invalid nu for chi-squared: {e}"),
            )
        })?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let mut eps = vec![0.0f64; d];
        for _ in 0..count {
            for e in eps.iter_mut() {
                *e = StandardNormal.sample(&mut rng);
            }
            let s: f64 = chi2.sample(&mut rng);
            let scale = (nu / s).sqrt();
            let mut best = f64::NEG_INFINITY;
            for i in 0..d {
                let mut z = 0.0;
                for (j, e) in eps.iter().enumerate().take(i + 1) {
                    z += l[(i, j)] * e;
                }
                let t = z * scale;
                let u = student_t_cdf(t, nu);
                let g = self.marginal.quantile(u);
                if g > best {
                    best = g;
                }
            }
            out.push(best);
        }
        Ok(out)
    }
}

/// Cholesky factorization with the standard `1e-10` diagonal jitter
/// fallback used throughout the numeric layer.
fn cholesky_with_jitter(
    matrix: &DMatrix<f64>,
) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>, SpecFunError> {
    if let Some(c) = nalgebra::Cholesky::new(matrix.clone()) {
        return Ok(c);
    }
    let mut jittered = matrix.clone();
    for i in 0..jittered.nrows() {
        jittered[(i, i)] += 1e-10;
    }
    nalgebra::Cholesky::new(jittered).ok_or(SpecFunError::NotPositiveDefinite)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        circular_moments, gamma_marginal, port_correlation, rician_mean_amplitude,
        CorrelationKernel, FasGrid, PhaseError, ScenarioConfig, User,
    };

    fn reference_law() -> BestPortGainLaw {
        let cfg = ScenarioConfig::default();
        BestPortGainLaw::new(
            cfg.gamma_marginal(User::R).unwrap(),
            cfg.correlation(User::R),
        )
    }

    fn single_port_law() -> BestPortGainLaw {
        let cfg = ScenarioConfig::default();
        let grid = FasGrid {
            n1: 1,
            n2: 1,
            w1: 0.0,
            w2: 0.0,
        };
        BestPortGainLaw::new(
            cfg.gamma_marginal(User::R).unwrap(),
            port_correlation(&grid, CorrelationKernel::Spherical, cfg.copula_nu),
        )
    }

    fn test_settings() -> QmcSettings {
        QmcSettings {
            sample_budget: 4096,
            randomizations: 8,
            target_abs_tol: 1e-3,
            seed: 0x5EED_0001,
        }
    }

    // --- marginal distribution ------------------------------------------

    #[test]
    fn marginal_cdf_pdf_quantile_consistency() {
        let m = GammaMarginal {
            mean_gain: 0.3866603633825863,
            shape: 15.136626144817985,
        };
        // CDF at the mean of a high-shape Gamma is a bit below 1/2... and
        // quantile round-trips.
        for p in [1e-6, 1e-3, 0.1, 0.5, 0.9, 0.999] {
            let g = m.quantile(p);
            assert!((m.cdf(g) - p).abs() < 1e-10, "round trip at {p}");
        }
        // pdf is the CDF derivative (central difference check).
        for g in [0.1, 0.25, 0.3866603633825863, 0.7] {
            let h = 1e-6;
            let num = (m.cdf(g + h) - m.cdf(g - h)) / (2.0 * h);
            assert!(
                (num - m.pdf(g)).abs() < 1e-5 * m.pdf(g).max(1.0),
                "pdf vs CDF slope at {g}: {num} vs {}",
                m.pdf(g)
            );
        }
        // Mean and variance by quadrature of the quantile function.
        let n = 20_000;
        let (mut mean, mut second) = (0.0, 0.0);
        for i in 0..n {
            let p = (i as f64 + 0.5) / n as f64;
            let g = m.quantile(p);
            mean += g;
            second += g * g;
        }
        mean /= n as f64;
        second /= n as f64;
        assert!((mean - m.mean_gain).abs() < 1e-4);
        let var = second - mean * mean;
        assert!((var - m.mean_gain * m.mean_gain / m.shape).abs() < 1e-4);
        // Edges.
        assert_eq!(m.cdf(0.0), 0.0);
        assert_eq!(m.cdf(-1.0), 0.0);
        assert_eq!(m.pdf(-0.5), 0.0);
        assert_eq!(m.quantile(0.0), 0.0);
        assert_eq!(m.quantile(1.0), f64::INFINITY);
    }

    // --- best-port CDF ------------------------------------------------------

    #[test]
    fn single_port_is_exact_gamma() {
        let law = single_port_law();
        let s = test_settings();
        for g in [0.05, 0.2, 0.3866603633825863, 0.8] {
            let est = law.max_gain_cdf(g, &s).unwrap();
            assert_eq!(est.std_err, 0.0);
            assert!(est.converged);
            assert!((est.value - law.marginal.cdf(g)).abs() < 1e-15);
        }
    }

    #[test]
    fn max_cdf_within_frechet_bounds() {
        let law = reference_law();
        let s = test_settings();
        let n = law.port_count() as f64;
        for g in [0.1, 0.2, 0.3, 0.3866603633825863, 0.5, 0.7] {
            let f1 = law.marginal.cdf(g);
            let est = law.max_gain_cdf(g, &s).unwrap().value;
            let lower = (n * f1 - (n - 1.0)).max(0.0);
            assert!(
                est <= f1 + 5e-3,
                "upper Fréchet bound violated at {g}: {est} > {f1}"
            );
            assert!(
                est >= lower - 5e-3,
                "lower Fréchet bound violated at {g}: {est} < {lower}"
            );
        }
    }

    #[test]
    fn max_cdf_monotone_and_edges() {
        let law = reference_law();
        let s = test_settings();
        assert_eq!(law.max_gain_cdf(0.0, &s).unwrap().value, 0.0);
        assert_eq!(law.max_gain_cdf(-1.0, &s).unwrap().value, 0.0);
        assert_eq!(law.max_gain_cdf(f64::INFINITY, &s).unwrap().value, 1.0);
        let mut prev = 0.0;
        for g in [0.05, 0.15, 0.25, 0.35, 0.5, 0.8, 1.2] {
            let v = law.max_gain_cdf(g, &s).unwrap().value;
            assert!(v >= prev - 2e-3, "CDF decreasing at {g}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn max_cdf_matches_exact_sampler() {
        // The QMC diagonal CDF and the direct copula sampler are two
        // independent implementations of the same law.
        let law = reference_law();
        let s = QmcSettings {
            sample_budget: 8192,
            randomizations: 12,
            target_abs_tol: 1e-4,
            seed: 0x5EED_0001,
        };
        let n = 200_000;
        let samples = law.sample_max_gains(n, 42).unwrap();
        for g in [0.25, 0.3866603633825863, 0.55] {
            let emp = samples.iter().filter(|&&x| x <= g).count() as f64 / n as f64;
            let est = law.max_gain_cdf(g, &s).unwrap();
            let sigma = (emp * (1.0 - emp) / n as f64).sqrt() + est.std_err;
            assert!(
                (emp - est.value).abs() < 4.0 * sigma + 1e-4,
                "at g={g}: sampler {emp} vs qmc {} (sigma {sigma})",
                est.value
            );
        }
    }

    #[test]
    fn dependence_strengthens_low_tail() {
        // Comonotone-ish ports (w → 0 keeps ports nearly identical) give a
        // larger max-CDF in the low tail than well-separated ports:
        // selection diversity fights deep fades.
        let cfg = ScenarioConfig::default();
        let marginal = cfg.gamma_marginal(User::R).unwrap();
        let tight = FasGrid {
            n1: 2,
            n2: 2,
            w1: 1e-3,
            w2: 1e-3,
        };
        let wide = FasGrid {
            n1: 2,
            n2: 2,
            w1: 3.0,
            w2: 3.0,
        };
        let s = test_settings();
        let law_tight = BestPortGainLaw::new(
            marginal,
            port_correlation(&tight, CorrelationKernel::Spherical, cfg.copula_nu),
        );
        let law_wide = BestPortGainLaw::new(
            marginal,
            port_correlation(&wide, CorrelationKernel::Spherical, cfg.copula_nu),
        );
        let g_low = marginal.quantile(0.05);
        let f_tight = law_tight.max_gain_cdf(g_low, &s).unwrap().value;
        let f_wide = law_wide.max_gain_cdf(g_low, &s).unwrap().value;
        assert!(
            f_tight > f_wide + 1e-3,
            "tight {f_tight} should dominate wide {f_wide} in the low tail"
        );
        // And the tight aperture approaches the single-port law.
        assert!((f_tight - marginal.cdf(g_low)).abs() < 5e-3);
    }

    // --- densities -----------------------------------------------------------

    #[test]
    fn diagonal_density_reduces_to_pdf_for_one_port() {
        let law = single_port_law();
        for g in [0.1, 0.3866603633825863, 0.9] {
            let d = law.diagonal_joint_density(g).unwrap();
            assert!((d - law.marginal.pdf(g)).abs() < 1e-14);
        }
        assert_eq!(law.diagonal_joint_density(-1.0).unwrap(), 0.0);
    }

    #[test]
    fn diagonal_density_near_independence_for_huge_nu() {
        // ν → ∞ and Σ = I turn the t copula into the independence copula,
        // so the diagonal density factorizes into the marginal product.
        let marginal = GammaMarginal {
            mean_gain: 0.4,
            shape: 5.0,
        };
        let corr = CorrelationModel {
            matrix: DMatrix::identity(3, 3),
            nu: 5e7,
        };
        let law = BestPortGainLaw::new(marginal, corr);
        for g in [0.2, 0.4, 0.7] {
            let d = law.diagonal_joint_density(g).unwrap();
            let prod = marginal.pdf(g).powi(3);
            assert!(
                (d - prod).abs() < 2e-4 * prod,
                "at {g}: {d} vs independent {prod}"
            );
        }
    }

    #[test]
    fn diagonal_density_positive_and_finite() {
        let law = reference_law();
        for g in [0.05, 0.2, 0.3866603633825863, 0.6, 1.0] {
            let d = law.diagonal_joint_density(g).unwrap();
            assert!(d.is_finite() && d >= 0.0, "at {g}: {d}");
        }
    }

    #[test]
    fn numeric_density_matches_cdf_slope() {
        let law = reference_law();
        let s = QmcSettings {
            sample_budget: 8192,
            randomizations: 12,
            target_abs_tol: 1e-4,
            seed: 0x5EED_0001,
        };
        // Trapezoid over a coarse grid reproduces the CDF increment.
        let (a, b) = (0.15, 0.55);
        let steps = 40;
        let h = (b - a) / steps as f64;
        let mut integral = 0.0;
        for i in 0..=steps {
            let g = a + i as f64 * h;
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            integral += w * law.max_gain_density_numeric(g, &s, None).unwrap();
        }
        integral *= h;
        let diff = law.max_gain_cdf(b, &s).unwrap().value - law.max_gain_cdf(a, &s).unwrap().value;
        assert!(
            (integral - diff).abs() < 5e-3,
            "density integral {integral} vs CDF increment {diff}"
        );
        assert_eq!(law.max_gain_density_numeric(-0.1, &s, None).unwrap(), 0.0);
    }

    // --- sampling ----------------------------------------------------------

    #[test]
    fn sampler_is_deterministic_in_seed() {
        let law = reference_law();
        let a = law.sample_max_gains(64, 7).unwrap();
        let b = law.sample_max_gains(64, 7).unwrap();
        assert_eq!(a, b);
        let c = law.sample_max_gains(64, 8).unwrap();
        assert_ne!(a, c);
        assert!(a.iter().all(|g| g.is_finite() && *g > 0.0));
    }

    #[test]
    fn sampled_max_stochastically_dominates_marginal() {
        // E[max] ≥ E[single port]; with 4 mildly coupled ports the uplift
        // is material.
        let law = reference_law();
        let samples = law.sample_max_gains(50_000, 11).unwrap();
        let mean_max = samples.iter().sum::<f64>() / samples.len() as f64;
        assert!(
            mean_max > law.marginal.mean_gain * 1.05,
            "mean of max {mean_max} vs marginal mean {}",
            law.marginal.mean_gain
        );
    }

    #[test]
    fn kappa_improves_gain_through_marginal() {
        // Sanity at the law level: a more concentrated phase error shifts
        // the whole best-port law upward (larger mean gain).
        let a = rician_mean_amplitude(1.0);
        let weak = gamma_marginal(
            circular_moments(PhaseError::VonMises { kappa: 2.0 }),
            a,
            0.8,
            30,
        )
        .unwrap();
        let strong = gamma_marginal(
            circular_moments(PhaseError::VonMises { kappa: 8.0 }),
            a,
            0.8,
            30,
        )
        .unwrap();
        assert!(strong.mean_gain > weak.mean_gain);
        assert!(strong.shape > weak.shape);
    }
}
