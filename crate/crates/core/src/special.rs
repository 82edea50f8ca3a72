//! Special functions: gamma, modified Bessel `K_nu`, Airy `Ai` / `Ai'`
//! and their zeros.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::bisect;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln |Gamma(x)|`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        (PI / (PI * x).sin().abs()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut a = LANCZOS[0];
        let t = x + LANCZOS_G + 0.5;
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
}

pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        ln_gamma(x).exp()
    }
}

/// `ln n!`, exact summation below 32.
pub fn ln_factorial(n: u32) -> f64 {
    if n < 32 {
        (2..=n).map(|k| (k as f64).ln()).sum()
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// Below this argument `K_nu` is evaluated from the `I_{+-nu}` series.
pub const BESSEL_SERIES_LIMIT: f64 = 1e-3;

/// Exponentially scaled modified Bessel function `e^z K_nu(z)` for `z > 0`.
///
/// Uses `K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt`. The integrand is
/// analytic and decays double-exponentially, so the trapezoid rule converges
/// geometrically in the step size; steps shrink like `1/sqrt(z)` to resolve
/// the peak at large `z`. Non-integer `nu` only for the small-`z` series.
pub fn bessel_k_scaled(nu: f64, z: f64) -> f64 {
    assert!(z > 0.0, "K_nu needs a positive argument");
    if z < BESSEL_SERIES_LIMIT {
        return z.exp() * bessel_k_series(nu, z);
    }
    const CUTOFF: f64 = 46.0;
    let excess = |t: f64| {
        let s = (0.5 * t).sinh();
        2.0 * z * s * s - nu.abs() * t
    };
    let mut t_max = 1.0;
    while excess(t_max) < CUTOFF {
        t_max *= 1.2;
    }
    let h0 = 0.2 * (1.0f64).min(1.0 / z.sqrt());
    let steps = (t_max / h0).ceil() as usize;
    let h = t_max / steps as f64;
    let mut sum = 0.5; // t = 0 term
    for i in 1..=steps {
        let t = i as f64 * h;
        let s = (0.5 * t).sinh();
        sum += (-2.0 * z * s * s).exp() * (nu * t).cosh();
    }
    sum * h
}

pub fn bessel_k(nu: f64, z: f64) -> f64 {
    if z < BESSEL_SERIES_LIMIT {
        bessel_k_series(nu, z)
    } else {
        (-z).exp() * bessel_k_scaled(nu, z)
    }
}

/// `K_nu = pi / (2 sin(nu pi)) (I_{-nu} - I_nu)`, non-integer `nu`.
fn bessel_k_series(nu: f64, z: f64) -> f64 {
    let i_series = |mu: f64| {
        let half = 0.5 * z;
        let q = half * half;
        let mut term = half.powf(mu) / gamma(mu + 1.0);
        let mut sum = term;
        for k in 1..60 {
            let kf = k as f64;
            term *= q / (kf * (kf + mu));
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    };
    PI / (2.0 * (nu * PI).sin()) * (i_series(-nu) - i_series(nu))
}

/// `Ai(0)`.
pub const AIRY_AI_0: f64 = 0.355_028_053_887_817_24;
/// `-Ai'(0)`.
pub const AIRY_AIP_0: f64 = 0.258_819_403_792_806_8;

const AIRY_SERIES_NEGATIVE: f64 = -8.0;
const AIRY_SERIES_POSITIVE: f64 = 4.0;

/// `(Ai(x), Ai'(x))`.
///
/// Maclaurin series on `[-8, 4]`, asymptotic expansions outside. On the
/// negative axis the result is accurate to about 1e-10; for `x > 4` the
/// decaying asymptotic series limits accuracy to roughly 1e-5 relative.
pub fn airy(x: f64) -> (f64, f64) {
    if x < AIRY_SERIES_NEGATIVE {
        airy_asymptotic_negative(-x)
    } else if x > AIRY_SERIES_POSITIVE {
        airy_asymptotic_positive(x)
    } else {
        airy_series(x)
    }
}

fn airy_series(x: f64) -> (f64, f64) {
    let x3 = x * x * x;
    // f = sum 3^k (1/3)_k x^{3k} / (3k)!, g = sum 3^k (2/3)_k x^{3k+1} / (3k+1)!
    let (mut f, mut g) = (1.0, x);
    let (mut tf, mut tg) = (1.0, x);
    // derivatives
    let (mut fp, mut gp) = (0.5 * x * x, 1.0);
    let (mut tfp, mut tgp) = (0.5 * x * x, 1.0);
    for k in 1..200 {
        let kf = k as f64;
        tf *= x3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        tg *= x3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        tgp *= x3 / ((3.0 * kf - 2.0) * (3.0 * kf));
        if k >= 2 {
            tfp *= x3 / ((3.0 * kf - 3.0) * (3.0 * kf - 1.0));
            fp += tfp;
        }
        f += tf;
        g += tg;
        gp += tgp;
        let scale = f.abs() + g.abs() + fp.abs() + gp.abs();
        if tf.abs() + tg.abs() + tfp.abs() + tgp.abs() < 1e-18 * scale {
            break;
        }
    }
    (AIRY_AI_0 * f - AIRY_AIP_0 * g, AIRY_AI_0 * fp - AIRY_AIP_0 * gp)
}

/// Coefficients `u_k` of the Airy asymptotic expansions and `v_k`.
fn airy_u_v(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![1.0];
    for k in 1..count {
        let kf = k as f64;
        let prev = u[k - 1];
        u.push(prev * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf));
    }
    let v = u
        .iter()
        .enumerate()
        .map(|(k, uk)| {
            if k == 0 {
                1.0
            } else {
                let kf = k as f64;
                -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * uk
            }
        })
        .collect();
    (u, v)
}

/// Sums `sum (-1)^j c_{2j+offset} / zeta^{2j+offset}` up to the smallest term.
fn alternating_half_series(c: &[f64], zeta: f64, offset: usize) -> f64 {
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    let mut sign = 1.0;
    let mut k = offset;
    while k < c.len() {
        let term = c[k] / zeta.powi(k as i32);
        if term.abs() > last {
            break;
        }
        sum += sign * term;
        last = term.abs();
        sign = -sign;
        k += 2;
    }
    sum
}

fn airy_asymptotic_negative(z: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * z * z.sqrt();
    let (u, v) = airy_u_v(40);
    let (s, c) = (zeta - PI / 4.0).sin_cos();
    let q = z.sqrt().sqrt();
    let ai = (c * alternating_half_series(&u, zeta, 0) + s * alternating_half_series(&u, zeta, 1))
        / (PI.sqrt() * q);
    let aip = q / PI.sqrt()
        * (s * alternating_half_series(&v, zeta, 0) - c * alternating_half_series(&v, zeta, 1));
    (ai, aip)
}

fn airy_asymptotic_positive(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let (u, v) = airy_u_v(40);
    let series = |c: &[f64]| {
        let mut sum = 0.0;
        let mut last = f64::INFINITY;
        for (k, ck) in c.iter().enumerate() {
            let term = ck / zeta.powi(k as i32);
            if term.abs() > last {
                break;
            }
            sum += if k % 2 == 0 { term } else { -term };
            last = term.abs();
        }
        sum
    };
    let e = (-zeta).exp();
    let q = x.sqrt().sqrt();
    let ai = e / (2.0 * PI.sqrt() * q) * series(&u);
    let aip = -q * e / (2.0 * PI.sqrt()) * series(&v);
    (ai, aip)
}

/// Grid spacing for sign-change scans; smaller than every zero gap in the
/// range used.
const ZERO_SCAN_STEP: f64 = 0.02;

fn negative_zeros<F: Fn(f64) -> f64>(f: F, count: usize, extent: f64, what: &str) -> Result<Vec<f64>> {
    let mut zeros = Vec::with_capacity(count);
    let mut hi = 0.0;
    let mut f_hi = f(hi);
    while zeros.len() < count {
        let lo = hi - ZERO_SCAN_STEP;
        if lo < -extent {
            return Err(Error::RootNotBracketed(format!(
                "found {} of {count} zeros of {what} above {}",
                zeros.len(),
                -extent
            )));
        }
        let f_lo = f(lo);
        if f_lo == 0.0 || f_lo.signum() != f_hi.signum() {
            let root = bisect(&f, lo, hi, 1e-14).ok_or_else(|| {
                Error::RootNotBracketed(format!("{what} bracket [{lo}, {hi}] lost its sign change"))
            })?;
            zeros.push(root);
        }
        hi = lo;
        f_hi = f_lo;
    }
    Ok(zeros)
}

/// Large-`s` estimate of the `s`-th zero magnitude, used to size scans.
fn zero_extent(count: usize) -> f64 {
    let t = 3.0 * PI * (4.0 * count as f64 - 1.0) / 8.0;
    t.powf(2.0 / 3.0) + 2.0
}

/// First `count` zeros of `Ai` (all negative), in decreasing order.
pub fn airy_ai_zeros(count: usize) -> Result<Vec<f64>> {
    negative_zeros(|x| airy(x).0, count, zero_extent(count), "Ai")
}

/// First `count` zeros of `Ai'` (all negative), in decreasing order.
pub fn airy_aip_zeros(count: usize) -> Result<Vec<f64>> {
    negative_zeros(|x| airy(x).1, count, zero_extent(count), "Ai'")
}
