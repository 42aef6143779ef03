//! Gamma-family special functions.
//!
//! * `ln Γ(x)` through the Lanczos approximation (g = 7, 9 coefficients),
//!   accurate to ~1e-15 relative error for positive arguments.
//! * The regularized incomplete gamma functions
//!   `P(a, x) = γ(a, x) / Γ(a)` and `Q(a, x) = 1 − P(a, x)`, via the
//!   power series for `x < a + 1` and the Lentz continued fraction
//!   otherwise — the classical split that keeps both branches rapidly
//!   convergent.
//! * The inverse of `P` in its second argument, seeded by the
//!   Wilson–Hilferty cube-root normal approximation and polished with
//!   Halley iterations.
//!
//! `P(m, m·g/ḡ)` is the CDF of the fitted per-port Gamma gain marginal, so
//! these routines sit under every outage and copula computation in the
//! crate.

use super::{domain, SpecFunError};

// ---------------------------------------------------------------------------
// ln Γ
// ---------------------------------------------------------------------------

/// Lanczos coefficients for g = 7, n = 9 (Godfrey's table).
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
///
/// Uses the Lanczos approximation; relative error is below 2e-15 across the
/// positive axis, which comfortably exceeds what the surrounding statistics
/// require.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma requires x > 0, got {x}");
    if x < 0.5 {
        // Reflection: Γ(x) Γ(1−x) = π / sin(πx).  Only exercised for the
        // half-integer shape parameters of the Student-t marginals.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

// ---------------------------------------------------------------------------
// Regularized incomplete gamma: P and Q
// ---------------------------------------------------------------------------

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 500;
/// Smallest representable scale used to guard the Lentz recurrence.
const LENTZ_TINY: f64 = 1e-300;

/// Power series for `P(a, x)`, convergent (and used) when `x < a + 1`:
///
/// ```text
/// P(a, x) = x^a e^{−x} / Γ(a+1) · Σ_{n≥0} x^n / ((a+1)(a+2)⋯(a+n))
/// ```
fn lower_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    sum * (a * x.ln() - x - ln_gamma(a)).exp()
}

/// Lentz continued fraction for `Q(a, x)`, convergent (and used) when
/// `x ≥ a + 1`:
///
/// ```text
/// Q(a, x) = x^a e^{−x} / Γ(a) · 1/(x+1−a− 1·(1−a)/(x+3−a− 2·(2−a)/(⋯)))
/// ```
fn upper_cf(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / LENTZ_TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < LENTZ_TINY {
            d = LENTZ_TINY;
        }
        c = b + an / c;
        if c.abs() < LENTZ_TINY {
            c = LENTZ_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    h * (a * x.ln() - x - ln_gamma(a)).exp()
}

/// Regularized lower incomplete gamma function `P(a, x)`.
///
/// Domain: `a > 0`, `x ≥ 0`.  `P(a, 0) = 0`, `P(a, ∞) = 1`.
pub fn regularized_lower_gamma(a: f64, x: f64) -> Result<f64, SpecFunError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain(
            "regularized_lower_gamma",
            format!("shape must be positive and finite, got a = {a}"),
        ));
    }
    if !(x >= 0.0) {
        return Err(domain(
            "regularized_lower_gamma",
            format!("argument must be nonnegative, got x = {x}"),
        ));
    }
    Ok(reg_lower_gamma_unchecked(a, x))
}

/// Regularized upper incomplete gamma function `Q(a, x) = 1 − P(a, x)`,
/// computed on its own convergent branch so that tiny tail values keep full
/// relative precision.
pub fn regularized_upper_gamma(a: f64, x: f64) -> Result<f64, SpecFunError> {
    regularized_lower_gamma(a, x).map(|_| {
        if x < a + 1.0 {
            1.0 - lower_series(a, x)
        } else {
            upper_cf(a, x)
        }
    })
}

/// `P(a, x)` without domain checks; used on hot paths that have already
/// validated their inputs.
#[inline]
pub(crate) fn reg_lower_gamma_unchecked(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    if x < a + 1.0 {
        lower_series(a, x)
    } else {
        1.0 - upper_cf(a, x)
    }
}

// ---------------------------------------------------------------------------
// Inverse of P in the second argument
// ---------------------------------------------------------------------------

/// Solves `P(a, x) = p` for `x`.
///
/// Domain: `a > 0`, `p ∈ [0, 1)`; `p = 0` returns `0`.  A Wilson–Hilferty
/// seed (for `a > 1`) or the small-shape closed form is refined by damped
/// Halley steps on `P(a, x) − p`; convergence is quadratic-plus and reaches
/// ~1e-14 relative accuracy in at most a dozen iterations.
pub fn inv_regularized_lower_gamma(a: f64, p: f64) -> Result<f64, SpecFunError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain(
            "inv_regularized_lower_gamma",
            format!("shape must be positive and finite, got a = {a}"),
        ));
    }
    if !(0.0..1.0).contains(&p) {
        return Err(domain(
            "inv_regularized_lower_gamma",
            format!("probability must lie in [0, 1), got p = {p}"),
        ));
    }
    Ok(inv_reg_lower_gamma_unchecked(a, p))
}

pub(crate) fn inv_reg_lower_gamma_unchecked(a: f64, p: f64) -> f64 {
    if p == 0.0 {
        return 0.0;
    }
    let gln = ln_gamma(a);
    let a1 = a - 1.0;
    // For p > ½, measure the residual against the upper tail q = 1 − p
    // (exact by Sterbenz) using Q's own convergent branch; iterating on
    // P − p there would cancel away the digits Newton needs.
    let use_upper = p > 0.5;
    let q = 1.0 - p;

    // Seed.
    let mut x = if a > 1.0 {
        // Wilson–Hilferty: x ≈ a (1 − 1/(9a) − z/(3√a))³ where z is the
        // upper-tail normal quantile of min(p, 1−p), negated for the upper
        // half (polynomial approximation is plenty for a seed).
        let pp = p.min(1.0 - p);
        let t = (-2.0 * pp.ln()).sqrt();
        let mut z = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t;
        if p < 0.5 {
            z = -z;
        }
        (a * (1.0 - 1.0 / (9.0 * a) - z / (3.0 * a.sqrt())).powi(3)).max(1e-3)
    } else {
        let t = 1.0 - a * (0.253 + a * 0.12);
        if p < t {
            (p / t).powf(1.0 / a)
        } else {
            1.0 - (1.0 - (p - t) / (1.0 - t)).ln()
        }
    };

    // Halley refinement on f(x) = P(a, x) − p.
    for _ in 0..14 {
        if x <= 0.0 {
            return 0.0;
        }
        // P(a,x) − p, evaluated as q − Q(a,x) in the upper half; the two
        // forms are identical in exact arithmetic.
        let err = if use_upper {
            let big_q = if x < a + 1.0 {
                1.0 - lower_series(a, x)
            } else {
                upper_cf(a, x)
            };
            q - big_q
        } else {
            reg_lower_gamma_unchecked(a, x) - p
        };
        // pdf of the Gamma(a, 1) law, the derivative of P in x.
        let t = if a > 1.0 {
            let lna1 = a1.ln();
            let afac = (a1 * (lna1 - 1.0) - gln).exp();
            afac * (-(x - a1) + a1 * (x.ln() - lna1)).exp()
        } else {
            (-x + a1 * x.ln() - gln).exp()
        };
        if t == 0.0 {
            break;
        }
        let u = err / t;
        // Halley correction; the factor is the logarithmic derivative of the
        // Gamma pdf, clipped to keep the step a contraction.
        let step = u / (1.0 - 0.5 * (u * (a1 / x - 1.0)).clamp(-1.0, 1.0));
        x -= step;
        if x <= 0.0 {
            x = 0.5 * (x + step); // halve back into the domain
        }
        if step.abs() < 1e-14 * x.max(1e-300) {
            break;
        }
    }
    x
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(got: f64, want: f64, rel: f64, what: &str) {
        let tol = rel * want.abs().max(1e-300);
        assert!(
            (got - want).abs() <= tol,
            "{what}: got {got:e}, want {want:e} (rel tol {rel:e})"
        );
    }

    #[test]
    fn ln_gamma_matches_reference() {
        // Reference values from an independent high-precision evaluation.
        let cases = [
            (0.25, 1.2880225246980774),
            (0.5, 0.5723649429247),
            (1.0, 0.0),
            (1.5, -0.12078223763524526),
            (5.0, 3.1780538303479458),
            (10.3, 13.482036786138359),
            (142.7, 563.6373938894083),
        ];
        for (x, want) in cases {
            let got = ln_gamma(x);
            assert!(
                (got - want).abs() <= 1e-13 * (1.0 + want.abs()),
                "ln_gamma({x}): got {got}, want {want}"
            );
        }
    }

    #[test]
    fn lower_gamma_matches_reference() {
        let cases = [
            (0.5, 0.25, 0.5204998778130466),
            (1.0, 1.0, 0.6321205588285577),
            (2.5, 0.3, 0.011996757205906265),
            (2.5, 6.0, 0.9652122194937581),
            (15.14, 14.0, 0.41514426209442656),
            (15.14, 40.0, 0.9999977129151365),
            (100.0, 95.0, 0.3173568111698001),
        ];
        for (a, x, want) in cases {
            let got = regularized_lower_gamma(a, x).unwrap();
            assert_close(got, want, 1e-12, &format!("P({a}, {x})"));
        }
    }

    #[test]
    fn upper_gamma_keeps_tail_precision() {
        let cases = [
            (0.5, 9.0, 2.2090496998585475e-5),
            (3.0, 25.0, 4.701068998290324e-9),
            (15.14, 60.0, 1.2475086539526996e-12),
        ];
        for (a, x, want) in cases {
            let got = regularized_upper_gamma(a, x).unwrap();
            assert_close(got, want, 1e-10, &format!("Q({a}, {x})"));
        }
    }

    #[test]
    fn inverse_matches_reference() {
        let cases = [
            (0.5, 0.3, 0.07423593091627269),
            (1.0, 0.5, 0.6931471805599455),
            (2.5, 0.99, 7.543136234694495),
            (15.14, 1e-6, 3.1584082128106385),
            (15.14, 0.5, 14.808002986766299),
            (15.14, 0.9999999999, 54.21357327826761),
            (200.0, 0.025, 173.24088268145732),
        ];
        for (a, p, want) in cases {
            let got = inv_regularized_lower_gamma(a, p).unwrap();
            assert_close(got, want, 1e-9, &format!("invP({a}, {p})"));
        }
    }

    #[test]
    fn inverse_round_trips() {
        for a in [0.3, 0.9, 1.0, 2.7, 15.14, 55.0, 300.0] {
            for p in [1e-12, 1e-6, 0.01, 0.3, 0.5, 0.9, 0.999, 1.0 - 1e-9] {
                let x = inv_regularized_lower_gamma(a, p).unwrap();
                let back = regularized_lower_gamma(a, x).unwrap();
                assert!(
                    (back - p).abs() <= 1e-10 * p.max(1e-12) + 1e-15,
                    "round trip a={a} p={p}: x={x}, P(a,x)={back}"
                );
            }
        }
    }

    #[test]
    fn edge_values() {
        assert_eq!(regularized_lower_gamma(2.0, 0.0).unwrap(), 0.0);
        assert_eq!(regularized_lower_gamma(2.0, f64::INFINITY).unwrap(), 1.0);
        assert_eq!(inv_regularized_lower_gamma(3.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        assert!(regularized_lower_gamma(0.0, 1.0).is_err());
        assert!(regularized_lower_gamma(-2.0, 1.0).is_err());
        assert!(regularized_lower_gamma(2.0, -0.5).is_err());
        assert!(inv_regularized_lower_gamma(2.0, 1.0).is_err());
        assert!(inv_regularized_lower_gamma(2.0, -0.1).is_err());
    }

    #[test]
    fn p_plus_q_is_one() {
        for a in [0.4, 1.0, 3.3, 15.14, 80.0] {
            for x in [0.01, 0.5, 1.0, 5.0, 20.0, 120.0] {
                let p = regularized_lower_gamma(a, x).unwrap();
                let q = regularized_upper_gamma(a, x).unwrap();
                assert!(
                    (p + q - 1.0).abs() < 1e-12,
                    "P+Q at a={a}, x={x}: {}",
                    p + q
                );
            }
        }
    }
}
