//! Point evaluation of the built-in potentials and backgrounds.

use crate::model::{BackgroundSpec, PotentialSpec};

#[inline]
fn norm_squared(point: &[f64]) -> f64 {
    point.iter().map(|x| x * x).sum()
}

/// `m w^2 r2 / 2`, shared by the harmonic potential and background so that
/// identical parameters give bit-identical values.
#[inline]
fn harmonic_energy(mass: f64, frequency: f64, r2: f64) -> f64 {
    0.5 * mass * frequency * frequency * r2
}

/// `1 / cosh^2(a)` without overflow: `4 e^{-2|a|} / (1 + e^{-2|a|})^2`.
#[inline]
pub fn sech_squared(a: f64) -> f64 {
    let e = (-2.0 * a.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

pub fn evaluate(potential: &PotentialSpec, point: &[f64], mass: f64) -> f64 {
    match *potential {
        PotentialSpec::Free => 0.0,
        PotentialSpec::Harmonic { omega } => harmonic_energy(mass, omega, norm_squared(point)),
        PotentialSpec::Linear { slope } => slope * point[0],
        PotentialSpec::PoschlTeller { alpha, lambda } => {
            let r = if point.len() == 1 {
                point[0]
            } else {
                norm_squared(point).sqrt()
            };
            let l = lambda as f64;
            -(alpha * alpha / (2.0 * mass)) * l * (l + 1.0) * sech_squared(alpha * r)
        }
        PotentialSpec::AbsoluteValue { strength } => {
            let r = if point.len() == 1 {
                point[0].abs()
            } else {
                norm_squared(point).sqrt()
            };
            strength * r
        }
    }
}

pub fn evaluate_background(background: &BackgroundSpec, point: &[f64], mass: f64) -> f64 {
    match background {
        BackgroundSpec::None => 0.0,
        BackgroundSpec::Harmonic { frequency, center } => {
            if point.len() == 1 {
                let d = point[0] - center[0];
                harmonic_energy(mass, frequency[0], d * d)
            } else {
                point
                    .iter()
                    .zip(frequency)
                    .zip(center)
                    .map(|((x, w), c)| harmonic_energy(mass, *w, (x - c) * (x - c)))
                    .sum()
            }
        }
        BackgroundSpec::Linear { slope } => point.iter().zip(slope).map(|(x, k)| k * x).sum(),
    }
}

/// Lower bound of the Poschl-Teller well, `-alpha^2 lambda (lambda + 1) / 2m`.
pub fn poschl_teller_depth(alpha: f64, lambda: u32, mass: f64) -> f64 {
    let l = lambda as f64;
    -(alpha * alpha / (2.0 * mass)) * l * (l + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        let pt = PotentialSpec::PoschlTeller { alpha: 1.0, lambda: 1 };
        assert_eq!(evaluate(&pt, &[0.0], 1.0), -1.0);
        assert_eq!(evaluate(&PotentialSpec::Harmonic { omega: 1.0 }, &[2.0], 1.0), 2.0);
        assert_eq!(evaluate(&PotentialSpec::AbsoluteValue { strength: 0.5 }, &[-3.0], 1.0), 1.5);
        assert_eq!(evaluate(&PotentialSpec::Free, &[7.0], 1.0), 0.0);
    }

    #[test]
    fn background_values() {
        assert_eq!(evaluate_background(&BackgroundSpec::None, &[3.0], 1.0), 0.0);
        assert_eq!(
            evaluate_background(&BackgroundSpec::harmonic_1d(0.75), &[1.0], 1.0),
            0.28125
        );
        assert!((evaluate_background(&BackgroundSpec::linear_1d(0.45), &[2.0], 1.0) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn matching_harmonic_terms_are_bit_identical() {
        let v = PotentialSpec::Harmonic { omega: 1.3 };
        let u = BackgroundSpec::harmonic_1d(1.3);
        for x in [-3.7, -0.1, 0.0, 1e-5, 2.25, 40.0] {
            assert_eq!(evaluate(&v, &[x], 0.7).to_bits(), evaluate_background(&u, &[x], 0.7).to_bits());
        }
    }

    #[test]
    fn poschl_teller_far_tail_underflows_cleanly() {
        let pt = PotentialSpec::PoschlTeller { alpha: 1.0, lambda: 1 };
        for x in [400.0, 1e4, 1e300, f64::MAX] {
            let v = evaluate(&pt, &[x], 1.0);
            assert!(v.is_finite() && v <= 0.0 && v > -1e-300);
        }
        let mid = evaluate(&pt, &[1.0], 1.0);
        let cosh = 1.0f64.cosh();
        assert!((mid + 1.0 / (cosh * cosh)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn parity(x in -50.0f64..50.0, w in 0.1f64..3.0, m in 0.2f64..5.0) {
            let even = [
                PotentialSpec::Harmonic { omega: w },
                PotentialSpec::PoschlTeller { alpha: w, lambda: 2 },
                PotentialSpec::AbsoluteValue { strength: w },
            ];
            for v in even {
                prop_assert_eq!(evaluate(&v, &[x], m), evaluate(&v, &[-x], m));
            }
            let lin = PotentialSpec::Linear { slope: w };
            prop_assert_eq!(evaluate(&lin, &[x], m), -evaluate(&lin, &[-x], m));
        }

        #[test]
        fn poschl_teller_bounds(x in -1e3f64..1e3, a in 0.1f64..3.0, l in 1u32..4, m in 0.2f64..5.0) {
            let v = evaluate(&PotentialSpec::PoschlTeller { alpha: a, lambda: l }, &[x], m);
            let depth = poschl_teller_depth(a, l, m);
            prop_assert!(v >= depth * (1.0 + 1e-15) && v <= 0.0);
        }
    }

    #[test]
    fn poschl_teller_vanishes_at_infinity() {
        let pt = PotentialSpec::PoschlTeller { alpha: 1.0, lambda: 1 };
        assert!(evaluate(&pt, &[30.0], 1.0).abs() < 1e-24);
    }
}
