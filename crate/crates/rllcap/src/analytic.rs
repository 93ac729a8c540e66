//! Closed-form feedback capacity of the RLL-constrained binary channel.
//!
//! Capacity is the maximum over z ∈ [z_L, z_U] of a single-letter rate
//! function R(z), where z parameterizes the probability of transmitting a 1
//! after a 0. The same number is the root of a transcendental equation in
//! p = P(Y=1) at the optimum, which this module also solves; the two routes
//! agree to ~1e-12 and cross-checking them is one of the crate's validation
//! legs. Symmetric, Z- and S-channel specializations get dedicated entry
//! points with their own simplified maximization/root pairs, and the
//! symmetric channel additionally gets small-crossover expansions with and
//! without feedback.

use serde::{Deserialize, Serialize};

use crate::channel::{binary_entropy, ChannelParams};
use crate::Error;

/// How a capacity figure was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Golden-section maximization of the rate function.
    Maximization,
    /// Bisection on the optimality condition.
    Root,
}

/// Capacity along with the optimizer that attains it.
///
/// `z_opt` is the optimal probability of a 1 after a 0; `p_opt` is the
/// corresponding output distribution P(Y=1) = α(1−z) + (1−β)z.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CapacityResult {
    pub capacity: f64,
    pub z_opt: f64,
    pub p_opt: f64,
    pub method: Method,
}

/// φ = (1+√5)/2. Computed, not transcribed, so every golden-ratio constant in
/// the crate traces back to one expression.
pub fn golden_ratio() -> f64 {
    0.5 * (1.0 + 5f64.sqrt())
}

/// The achievable rate of the stationary policy "send 1 after a 0 with
/// probability z", as a function of z.
///
/// Zero at z = 0 (never send 1) and z = 1 (alternate deterministically), and
/// strictly positive between whenever the channel carries information.
pub fn rate_function(z: f64, params: &ChannelParams) -> f64 {
    assert!(
        (0.0..=1.0).contains(&z),
        "rate_function argument {z} outside [0,1]"
    );
    let a = params.alpha();
    let b = params.beta();
    let p = params.output_one_prob(z);
    let cross = a * (1.0 - b);
    // 0·H(0/0) at p = 0 (only possible when α = 0, forcing cross = 0 too).
    let cross_term = if p > 0.0 {
        p * binary_entropy(cross / p)
    } else {
        0.0
    };
    let numer = binary_entropy(p) + cross_term
        - ((1.0 - z) + (1.0 - b) * z) * binary_entropy(a)
        - (z + a * (1.0 - z)) * binary_entropy(b);
    numer / (1.0 + p)
}

/// Interval [z_L, z_U] that is guaranteed to contain the maximizer of the
/// rate function. Collapses to the single point 0.5 on the zero-capacity line
/// α + β = 1.
pub fn z_bounds(params: &ChannelParams) -> (f64, f64) {
    let a = params.alpha();
    let b = params.beta();
    if (a == 0.0 && b == 1.0) || (a == 1.0 && b == 0.0) {
        // Constant-output channels; one of the generic expressions is 0/0 and
        // the α+β=1 collapse point is its continuity limit.
        return (0.5, 0.5);
    }
    let zl = a.sqrt() / (a.sqrt() + (1.0 - b).sqrt());
    let zu = (1.0 - a).sqrt() / ((1.0 - a).sqrt() + b.sqrt());
    (zl, zu)
}

/// Golden-section maximization on [a, b]. Returns (argmax, max). Assumes f is
/// unimodal on the bracket; callers that cannot guarantee that should compare
/// against a dense scan (see `maximize_with_scan`).
pub(crate) fn golden_section_max(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a, b);
    let mut c = hi - invphi * (hi - lo);
    let mut d = lo + invphi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - invphi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + invphi * (hi - lo);
            fd = f(d);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Golden-section maximization hardened by a dense scan: if the scan finds a
/// grid point beating the golden-section result (a unimodality violation), the
/// scan's bracket is refined instead and the better of the two wins.
pub(crate) fn maximize_with_scan(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    scan_points: usize,
) -> (f64, f64) {
    let (mut x_best, mut f_best) = golden_section_max(&f, a, b, tol);
    let n = scan_points.max(3);
    let mut best_i = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..=n {
        let x = a + (b - a) * i as f64 / n as f64;
        let v = f(x);
        if v > best_val {
            best_val = v;
            best_i = i;
        }
    }
    if best_val > f_best {
        let lo = a + (b - a) * best_i.saturating_sub(1) as f64 / n as f64;
        let hi = a + (b - a) * (best_i + 1).min(n) as f64 / n as f64;
        let (x, v) = golden_section_max(&f, lo, hi, tol);
        if v > f_best {
            x_best = x;
            f_best = v;
        }
    }
    (x_best, f_best)
}

/// Bisection for a strictly decreasing f with f(lo) > 0 > f(hi); returns the
/// midpoint of the final bracket of width ≤ tol.
pub(crate) fn bisect_decreasing(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64, Error> {
    let flo = f(lo);
    let fhi = f(hi);
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::Config(format!(
            "bisection bracket invalid: f({lo}) = {flo}, f({hi}) = {fhi}"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Capacity as max of the rate function over [z_L, z_U], to 1e-10 in z.
pub fn capacity_by_maximization(params: &ChannelParams) -> CapacityResult {
    let (zl, zu) = z_bounds(params);
    if zu - zl < 1e-14 {
        let z = 0.5 * (zl + zu);
        return CapacityResult {
            capacity: rate_function(z, params),
            z_opt: z,
            p_opt: params.output_one_prob(z),
            method: Method::Maximization,
        };
    }
    let (z, c) = maximize_with_scan(|z| rate_function(z, params), zl, zu, 1e-10, 1000);
    CapacityResult {
        capacity: c.max(0.0),
        z_opt: z,
        p_opt: params.output_one_prob(z),
        method: Method::Maximization,
    }
}

/// Capacity via the optimality condition on p = P(Y=1): the unique root in
/// (α(1−β), 1) of
///
/// (1−αβ̄)·[H(α)−H(β)] + (β̄−α)·[2·log(1−p) − (1+αβ̄)·log(p−αβ̄) + αβ̄·log(αβ̄)]
///
/// (logs base 2, β̄ = 1−β), followed by the closed-form evaluation
/// C = log((1−p)/(p−αβ̄)) + β·H(α)/(1−α−β) − (1−α)·H(β)/(1−α−β).
///
/// The left side is strictly decreasing in p and diverges to +∞/−∞ at the
/// bracket ends, so bisection is safe. Errors on the line α + β = 1, where
/// the form is singular; use [`capacity_by_maximization`] there.
pub fn capacity_by_root(params: &ChannelParams) -> Result<CapacityResult, Error> {
    let a = params.alpha();
    let b = params.beta();
    if (1.0 - a - b).abs() < 1e-12 {
        return Err(Error::SingularRootForm { alpha: a, beta: b });
    }
    let ab = a * (1.0 - b);
    let ha = binary_entropy(a);
    let hb = binary_entropy(b);
    let ab_log = if ab > 0.0 { ab * ab.log2() } else { 0.0 };
    let f = |p: f64| {
        (1.0 - ab) * (ha - hb)
            + ((1.0 - b) - a) * (2.0 * (1.0 - p).log2() - (1.0 + ab) * (p - ab).log2() + ab_log)
    };
    let p = bisect_decreasing(f, ab + 1e-15, 1.0 - 1e-15, 1e-13)?;
    let capacity = ((1.0 - p) / (p - ab)).log2() + (b * ha - (1.0 - a) * hb) / (1.0 - a - b);
    let z = (p - a) / ((1.0 - b) - a);
    Ok(CapacityResult {
        capacity,
        z_opt: z,
        p_opt: p,
        method: Method::Root,
    })
}

/// Symmetric-channel capacity (α = β ≤ 1/2):
/// max over p ∈ [√(αᾱ), 1/2] of [H(p) + p·H(αᾱ/p)]/(1+p) − H(α),
/// cross-checked internally against the root of
/// αᾱ·log(αᾱ) + 2·log(1−p) = (1+αᾱ)·log(p−αᾱ),
/// at which C = log((1−p)/(p−αᾱ)) − H(α).
pub fn bsc_capacity(alpha: f64) -> Result<CapacityResult, Error> {
    let params = ChannelParams::symmetric(alpha)?;
    let a = alpha;
    let aa = a * (1.0 - a);
    let ha = binary_entropy(a);
    let lo = aa.sqrt();
    let objective = |p: f64| {
        let cross = if p > 0.0 {
            p * binary_entropy(aa / p)
        } else {
            0.0
        };
        (binary_entropy(p) + cross) / (1.0 + p) - ha
    };
    let (p_max, c_max) = if 0.5 - lo < 1e-14 {
        (0.5, objective(0.5))
    } else {
        maximize_with_scan(objective, lo, 0.5, 1e-10, 1000)
    };

    let aa_log = if aa > 0.0 { aa * aa.log2() } else { 0.0 };
    let f = |p: f64| aa_log + 2.0 * (1.0 - p).log2() - (1.0 + aa) * (p - aa).log2();
    let p_root = bisect_decreasing(f, aa + 1e-15, 1.0 - 1e-15, 1e-13)?;
    let c_root = ((1.0 - p_root) / (p_root - aa)).log2() - ha;
    assert!(
        (c_max - c_root).abs() <= 1e-8,
        "symmetric maximization ({c_max}) and root ({c_root}) forms disagree at alpha={a}"
    );

    let z = if a < 0.5 {
        (p_max - a) / (1.0 - 2.0 * a)
    } else {
        0.5
    };
    let _ = params;
    Ok(CapacityResult {
        capacity: c_max.max(0.0),
        z_opt: z,
        p_opt: p_max,
        method: Method::Maximization,
    })
}

/// S-channel capacity (β = 0):
/// max over p ∈ [√α, 1] of [H(p) + p·H(α/p) − H(α)]/(1+p),
/// cross-checked against the root of
/// 2·log(1−p) = (1+α)·log(p−α) + (1−α)·log(1−α),
/// at which C = log((1−p)/(p−α)).
pub fn s_channel_capacity(alpha: f64) -> Result<CapacityResult, Error> {
    let params = ChannelParams::s_channel(alpha)?;
    let a = alpha;
    if a == 1.0 {
        return Ok(CapacityResult {
            capacity: 0.0,
            z_opt: 0.5,
            p_opt: 1.0,
            method: Method::Maximization,
        });
    }
    let ha = binary_entropy(a);
    let objective = |p: f64| {
        let cross = if p > 0.0 {
            p * binary_entropy(a / p)
        } else {
            0.0
        };
        (binary_entropy(p) + cross - ha) / (1.0 + p)
    };
    let (p_max, c_max) = maximize_with_scan(objective, a.sqrt(), 1.0, 1e-10, 1000);

    let abar_log = (1.0 - a) * (1.0 - a).log2();
    let f = |p: f64| 2.0 * (1.0 - p).log2() - (1.0 + a) * (p - a).log2() - abar_log;
    let p_root = bisect_decreasing(f, a + 1e-15, 1.0 - 1e-15, 1e-13)?;
    let c_root = ((1.0 - p_root) / (p_root - a)).log2();
    assert!(
        (c_max - c_root).abs() <= 1e-8,
        "S-channel maximization ({c_max}) and root ({c_root}) forms disagree at alpha={a}"
    );

    let _ = params;
    Ok(CapacityResult {
        capacity: c_max.max(0.0),
        z_opt: (p_max - a) / (1.0 - a),
        p_opt: p_max,
        method: Method::Maximization,
    })
}

/// Z-channel capacity (α = 0):
/// max over p ∈ [0, 1−β] of [H(p) − p·H(β)/(1−β)]/(1+p).
/// The optimality condition is the quadratic (1−p)² = p·2^{H(β)/(1−β)}, whose
/// root in (0,1) gives C = −log(1−p) exactly; both routes are evaluated and
/// compared.
pub fn z_channel_capacity(beta: f64) -> Result<CapacityResult, Error> {
    let params = ChannelParams::z_channel(beta)?;
    let b = beta;
    if b == 1.0 {
        return Ok(CapacityResult {
            capacity: 0.0,
            z_opt: 0.5,
            p_opt: 0.0,
            method: Method::Maximization,
        });
    }
    let hb = binary_entropy(b);
    let objective = |p: f64| (binary_entropy(p) - p * hb / (1.0 - b)) / (1.0 + p);
    let (p_max, c_max) = maximize_with_scan(objective, 0.0, 1.0 - b, 1e-10, 1000);

    // (1−p)² = p·k  ⇔  p² − (2+k)p + 1 = 0, smaller root.
    let k = (hb / (1.0 - b)).exp2();
    let p_root = 0.5 * ((2.0 + k) - ((2.0 + k) * (2.0 + k) - 4.0).sqrt());
    let c_root = -(1.0 - p_root).log2();
    assert!(
        (c_max - c_root).abs() <= 1e-8,
        "Z-channel maximization ({c_max}) and root ({c_root}) forms disagree at beta={b}"
    );

    let _ = params;
    Ok(CapacityResult {
        capacity: c_max.max(0.0),
        z_opt: p_max / (1.0 - b),
        p_opt: p_max,
        method: Method::Maximization,
    })
}

/// Coefficient of α·log α in the symmetric-channel feedback expansion:
/// (2−φ)/(3−φ) ≈ 0.2763932.
pub fn feedback_alpha_log_coefficient() -> f64 {
    let l = golden_ratio();
    (2.0 - l) / (3.0 - l)
}

/// Coefficient of α in the symmetric-channel feedback expansion, in bits:
/// (ln(2−φ) − (2−φ))/((3−φ)·ln 2) ≈ −1.4034674. The inner expression lives
/// in natural units — it comes from an expansion whose ln(1−α) and ln-ratio
/// terms cancel against the bare (2−φ) only in base e — and the whole
/// coefficient is then rescaled to bits.
pub fn feedback_alpha_coefficient() -> f64 {
    let l = golden_ratio();
    ((2.0 - l).ln() - (2.0 - l)) / ((3.0 - l) * std::f64::consts::LN_2)
}

/// Coefficient of α·log α in the symmetric-channel expansion *without*
/// feedback: (2φ+2)/(4φ+3) ≈ 0.5527864. Larger than the feedback coefficient,
/// and α·log α < 0, so feedback strictly helps at small α.
pub fn nonfeedback_alpha_log_coefficient() -> f64 {
    let l = golden_ratio();
    (2.0 * l + 2.0) / (4.0 * l + 3.0)
}

/// Two-term small-α expansion of the symmetric-channel feedback capacity:
/// log φ + c₁·α·log α + c₂·α with c₁, c₂ as above. Error is O(α²·log²α).
pub fn bsc_feedback_asymptotic(alpha: f64) -> f64 {
    let base = golden_ratio().log2();
    if alpha == 0.0 {
        return base;
    }
    base + feedback_alpha_log_coefficient() * alpha * alpha.log2()
        + feedback_alpha_coefficient() * alpha
}

/// Leading small-α expansion of the symmetric-channel capacity without
/// feedback: log φ + c·α·log α with c = (2φ+2)/(4φ+3). Error is O(α).
pub fn bsc_nonfeedback_asymptotic(alpha: f64) -> f64 {
    let base = golden_ratio().log2();
    if alpha == 0.0 {
        return base;
    }
    base + nonfeedback_alpha_log_coefficient() * alpha * alpha.log2()
}
