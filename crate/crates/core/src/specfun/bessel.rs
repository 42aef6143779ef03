//! Modified and ordinary Bessel functions used by the channel statistics.
//!
//! The crate needs three Bessel-shaped ingredients:
//!
//! * `I_p(x)` for small integer orders — circular moments of the von Mises
//!   phase error are ratios `φ_p = I_p(κ)/I_0(κ)`, and the Rician mean
//!   amplitude is a Kummer function with a Bessel closed form.
//! * the spherical kernel `j0(x) = sin(x)/x` — Jakes-type spatial
//!   correlation of a fluid antenna over an isotropic 3-D scatter field.
//! * the cylindrical kernel `J0(x)` — the 2-D scatter-field alternative.
//!
//! `I_p` is computed in exponentially scaled form `e^{−x} I_p(x)` (power
//! series below x = 18, asymptotic expansion above) so that ratios and the
//! Rician moment stay finite for arbitrarily large κ and K.

use super::gamma::ln_gamma;

// ---------------------------------------------------------------------------
// Modified Bessel I
// ---------------------------------------------------------------------------

/// Crossover between the ascending series and the asymptotic expansion.
/// At x = 18 the optimally truncated asymptotic tail is already below
/// double-precision roundoff, and the series still converges in ~40 terms.
const I_SERIES_CUTOFF: f64 = 18.0;

/// Exponentially scaled modified Bessel function `e^{−x} I_p(x)` for
/// integer order `p ≥ 0` and `x ≥ 0`.
///
/// * `x ≤ 18`: ascending series
///   `I_p(x) = Σ_{j≥0} (x/2)^{2j+p} / (j! (j+p)!)`, scaled afterwards.
/// * `x > 18`: asymptotic expansion
///   `e^{−x} I_p(x) ≈ (2πx)^{−1/2} Σ_k (−1)^k a_k(p) / x^k`,
///   `a_k(p) = (4p²−1²)(4p²−3²)⋯(4p²−(2k−1)²)/(k! 8^k)`,
///   truncated at the smallest term.
///
/// Relative accuracy is ~1e-14 overall.
pub fn bessel_i_scaled(p: u32, x: f64) -> f64 {
    debug_assert!(x >= 0.0, "bessel_i_scaled requires x >= 0, got {x}");
    if x == 0.0 {
        return if p == 0 { 1.0 } else { 0.0 };
    }
    if x <= I_SERIES_CUTOFF {
        // First term (x/2)^p / p! via logs to dodge intermediate overflow at
        // higher orders, then the two-factor recurrence.
        let half = 0.5 * x;
        let mut term = (f64::from(p) * half.ln() - ln_gamma(f64::from(p) + 1.0)).exp();
        let mut sum = term;
        let hh = half * half;
        for j in 1..200 {
            term *= hh / (j as f64 * (j as f64 + f64::from(p)));
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        sum * (-x).exp()
    } else {
        let mu = 4.0 * f64::from(p) * f64::from(p);
        let mut term = 1.0f64;
        let mut sum = term;
        let mut prev = f64::INFINITY;
        for k in 0..60u32 {
            let kk = f64::from(2 * k + 1);
            term *= -(mu - kk * kk) / (f64::from(k + 1) * 8.0 * x);
            if term.abs() >= prev {
                break; // asymptotic tail started diverging: stop at min term
            }
            sum += term;
            prev = term.abs();
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

/// Modified Bessel function `I_p(x)` for integer order `p ≥ 0` and `x ≥ 0`.
///
/// Overflows to `+∞` for `x ≳ 709` like `exp` itself; use
/// [`bessel_i_scaled`] for ratios at large argument.
pub fn bessel_i(p: u32, x: f64) -> f64 {
    bessel_i_scaled(p, x) * x.exp()
}

/// Kummer confluent hypergeometric value `₁F₁(−½; 1; −k)` for `k ≥ 0`,
/// through its Bessel closed form
///
/// ```text
/// ₁F₁(−½; 1; −k) = e^{−k/2} [ (1 + k) I₀(k/2) + k I₁(k/2) ]
/// ```
///
/// The mean amplitude of a unit-power Rician fade with factor `K` is
/// `√(π / (4(K+1))) · ₁F₁(−½; 1; −K)`, which is where this enters the
/// channel statistics.  Grows like `√(4k/π)`; never overflows.
pub fn kummer_1f1_half(k: f64) -> f64 {
    debug_assert!(k >= 0.0, "kummer_1f1_half requires k >= 0, got {k}");
    let h = 0.5 * k;
    (1.0 + k) * bessel_i_scaled(0, h) + k * bessel_i_scaled(1, h)
}

// ---------------------------------------------------------------------------
// Oscillatory kernels
// ---------------------------------------------------------------------------

/// Spherical Bessel function of order zero, `j0(x) = sin(x)/x`, with a
/// Maclaurin branch near the origin to avoid the 0/0 cancellation.
pub fn spherical_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 0.05 {
        // 1 − x²/6 + x⁴/120 − x⁶/5040; next term < 1e-17 for |x| < 0.05.
        let y = x * x;
        1.0 - y / 6.0 * (1.0 - y / 20.0 * (1.0 - y / 42.0))
    } else {
        x.sin() / x
    }
}

/// Cylindrical Bessel function of the first kind, order zero, `J₀(x)`.
///
/// Rational approximation below `|x| = 8` and the phase-amplitude asymptotic
/// form above (the classic Hart coefficients); absolute accuracy ~1e-8,
/// ample for a correlation kernel bounded by 1.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 8.0 {
        let y = x * x;
        let p1 = 57_568_490_574.0
            + y * (-13_362_590_354.0
                + y * (651_619_640.7
                    + y * (-11_214_424.18 + y * (77_392.330_17 + y * (-184.905_245_6)))));
        let q1 = 57_568_490_411.0
            + y * (1_029_532_985.0
                + y * (9_494_680.718 + y * (59_272.648_53 + y * (267.853_271_2 + y))));
        p1 / q1
    } else {
        let z = 8.0 / ax;
        let y = z * z;
        let p0 = 1.0
            + y * (-0.109_862_862_7e-2
                + y * (0.273_451_040_7e-4 + y * (-0.207_337_063_9e-5 + y * 0.209_388_721_1e-6)));
        let q0 = -0.156_249_999_5e-1
            + y * (0.143_048_876_5e-3
                + y * (-0.691_114_765_1e-5 + y * (0.762_109_516_1e-6 + y * (-0.934_935_152e-7))));
        let xx = ax - std::f64::consts::FRAC_PI_4;
        (std::f64::consts::FRAC_2_PI / ax).sqrt() * (xx.cos() * p0 - z * xx.sin() * q0)
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
