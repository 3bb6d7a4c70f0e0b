//! Complex scalar functions with explicit branch-cut conventions.
//!
//! The spectral norm formula sums terms of the form `atan(omega / lambda_i)`
//! with complex poles `lambda_i`, so which branch of the arctangent gets
//! evaluated is not a cosmetic detail: a silently crossed cut shifts a term
//! by `pi` and wrecks the sum. Everything here is pinned to the principal
//! argument in `(-pi, pi]`.
//!
//! The arctangent is implemented in two algebraically equivalent forms that
//! differ on one branch segment:
//!
//! * [`AtanVariant::V1`]: `(1/2j) * (log(1 + jz) - log(1 - jz))`
//! * [`AtanVariant::V2`]: `(1/2j) * log((1 + jz) / (1 - jz))`
//!
//! The two agree everywhere except on the ray `Re z = 0, Im z < -1`, where
//! `V2 = V1 + pi`. The norm engine uses `V1` throughout; `V2` exists so that
//! the discrepancy set itself is tested rather than assumed.
//!
//! The arccotangent is `acot(z) = atan(1/z)`. Its directional limits at the
//! origin are `+pi/2` from the right half-plane and `-pi/2` from the left,
//! which is exactly the split the arctangent weights need as a pole's
//! magnitude dwarfs the band edge.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Which of the two arctangent formulations to evaluate.
///
/// `V1` splits the logarithm before subtracting; `V2` takes one logarithm of
/// the ratio. They differ by exactly `pi` on the segment
/// `Re z = 0, Im z < -1` and agree elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtanVariant {
    V1,
    V2,
}

/// Principal argument of `z`, in `(-pi, pi]`.
///
/// The half-open convention forces `+pi` on the negative real axis, also
/// when the imaginary part is a negative zero (where `atan2` alone would
/// report `-pi`).
pub fn principal_arg(z: Complex64) -> Result<f64> {
    if z.re == 0.0 && z.im == 0.0 {
        return Err(Error::Domain {
            func: "principal_arg",
            z,
        });
    }
    // `z.im == 0.0` matches both signed zeros, keeping the cut on one side.
    if z.im == 0.0 {
        Ok(if z.re > 0.0 { 0.0 } else { std::f64::consts::PI })
    } else {
        Ok(z.im.atan2(z.re))
    }
}

/// Principal logarithm: `ln|z| + j * principal_arg(z)`.
pub fn principal_log(z: Complex64) -> Result<Complex64> {
    if z.re == 0.0 && z.im == 0.0 {
        return Err(Error::Domain {
            func: "principal_log",
            z,
        });
    }
    Ok(Complex64::new(z.norm().ln(), principal_arg(z)?))
}

/// Complex arctangent on the principal branch, in either formulation.
///
/// Undefined at `z = +j` and `z = -j` (logarithmic singularities).
pub fn atan_principal(z: Complex64, variant: AtanVariant) -> Result<Complex64> {
    let i = Complex64::i();
    let wp = Complex64::new(1.0, 0.0) + i * z; // 1 + jz
    let wm = Complex64::new(1.0, 0.0) - i * z; // 1 - jz
    if (wp.re == 0.0 && wp.im == 0.0) || (wm.re == 0.0 && wm.im == 0.0) {
        return Err(Error::Domain {
            func: "atan_principal",
            z,
        });
    }
    // 1/(2j) = -j/2
    let half_over_i = Complex64::new(0.0, -0.5);
    let value = match variant {
        AtanVariant::V1 => half_over_i * (principal_log(wp)? - principal_log(wm)?),
        AtanVariant::V2 => half_over_i * principal_log(wp / wm)?,
    };
    Ok(value)
}

/// Complex arccotangent, `acot(z) = atan(1/z)`, on the principal branch.
///
/// Undefined at `z = 0` and `z = +j, -j`.
pub fn acot_principal(z: Complex64, variant: AtanVariant) -> Result<Complex64> {
    if z.re == 0.0 && z.im == 0.0 {
        return Err(Error::Domain {
            func: "acot_principal",
            z,
        });
    }
    if (z.re == 0.0 && z.im == 1.0) || (z.re == 0.0 && z.im == -1.0) {
        return Err(Error::Domain {
            func: "acot_principal",
            z,
        });
    }
    atan_principal(z.inv(), variant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn arg_of_positive_real_is_zero() {
        assert_eq!(principal_arg(c(1.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn arg_on_negative_real_axis_is_plus_pi() {
        assert_eq!(principal_arg(c(-1.0, 0.0)).unwrap(), PI);
        // A negative-zero imaginary part must not flip the cut side.
        assert_eq!(principal_arg(c(-1.0, -0.0)).unwrap(), PI);
    }

    #[test]
    fn arg_of_minus_j_is_minus_half_pi() {
        assert!((principal_arg(c(0.0, -1.0)).unwrap() + FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn arg_rejects_zero() {
        assert!(matches!(
            principal_arg(c(0.0, 0.0)),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn log_of_one_is_zero() {
        let v = principal_log(c(1.0, 0.0)).unwrap();
        assert_eq!(v, c(0.0, 0.0));
    }

    #[test]
    fn log_of_minus_one_is_j_pi() {
        let v = principal_log(c(-1.0, 0.0)).unwrap();
        assert!((v - c(0.0, PI)).norm() < 1e-15);
    }

    #[test]
    fn log_of_minus_three() {
        // ln 3 + j pi, evaluated from the definition.
        let v = principal_log(c(-3.0, 0.0)).unwrap();
        assert!((v - c(3.0_f64.ln(), PI)).norm() < 1e-15);
    }

    #[test]
    fn atan_of_one_is_quarter_pi_in_both_variants() {
        for variant in [AtanVariant::V1, AtanVariant::V2] {
            let v = atan_principal(c(1.0, 0.0), variant).unwrap();
            assert!((v - c(FRAC_PI_4, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn atan_of_zero_is_zero() {
        for variant in [AtanVariant::V1, AtanVariant::V2] {
            assert_eq!(atan_principal(c(0.0, 0.0), variant).unwrap(), c(0.0, 0.0));
        }
    }

    #[test]
    fn atan_at_minus_two_j_splits_by_pi_between_variants() {
        // Hand evaluation: 1 + j(-2j) = 3, 1 - j(-2j) = -1.
        //   V1 = (1/2j)(ln 3 - j pi) = -pi/2 - j (ln 3)/2
        //   V2 = (1/2j) log(-3)      = +pi/2 - j (ln 3)/2
        let half_ln3 = 3.0_f64.ln() / 2.0;
        let v1 = atan_principal(c(0.0, -2.0), AtanVariant::V1).unwrap();
        let v2 = atan_principal(c(0.0, -2.0), AtanVariant::V2).unwrap();
        assert!((v1 - c(-FRAC_PI_2, -half_ln3)).norm() < 1e-15);
        assert!((v2 - c(FRAC_PI_2, -half_ln3)).norm() < 1e-15);
        assert!(((v2 - v1) - c(PI, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn atan_rejects_plus_minus_j() {
        for variant in [AtanVariant::V1, AtanVariant::V2] {
            assert!(matches!(
                atan_principal(c(0.0, 1.0), variant),
                Err(Error::Domain { .. })
            ));
            assert!(matches!(
                atan_principal(c(0.0, -1.0), variant),
                Err(Error::Domain { .. })
            ));
        }
    }

    #[test]
    fn acot_of_one_is_quarter_pi() {
        let v = acot_principal(c(1.0, 0.0), AtanVariant::V1).unwrap();
        assert!((v - c(FRAC_PI_4, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn acot_limits_at_origin_split_by_half_plane() {
        let from_right = acot_principal(c(1e-12, 0.0), AtanVariant::V1).unwrap();
        let from_left = acot_principal(c(-1e-12, 0.0), AtanVariant::V1).unwrap();
        assert!((from_right - c(FRAC_PI_2, 0.0)).norm() < 1e-6);
        assert!((from_left - c(-FRAC_PI_2, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn acot_rejects_its_excluded_points() {
        for z in [c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)] {
            assert!(matches!(
                acot_principal(z, AtanVariant::V1),
                Err(Error::Domain { .. })
            ));
        }
    }

    /// The variants agree off the segment `Re z = 0, Im z < -1` and differ
    /// by exactly pi on it; 10,000 seeded random points plus targeted points
    /// on the segment.
    #[test]
    fn atan_variant_dichotomy_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_a7a1);
        let mut checked_on_segment = 0usize;
        for _ in 0..10_000 {
            let re: f64 = rng.gen_range(-3.0..3.0);
            let im: f64 = rng.gen_range(-3.0..3.0);
            // Random points never land exactly on Re z = 0; force some on.
            let z = if rng.gen_ratio(1, 50) {
                c(0.0, im)
            } else {
                c(re, im)
            };
            if z == c(0.0, 1.0) || z == c(0.0, -1.0) {
                continue;
            }
            let v1 = atan_principal(z, AtanVariant::V1).unwrap();
            let v2 = atan_principal(z, AtanVariant::V2).unwrap();
            if z.re.abs() < 1e-14 && z.im < -1.0 {
                assert!(
                    ((v2 - v1) - c(PI, 0.0)).norm() < 1e-12,
                    "expected V2 = V1 + pi at {z}"
                );
                checked_on_segment += 1;
            } else {
                assert!((v2 - v1).norm() < 1e-12, "expected V1 = V2 at {z}");
            }
        }
        assert!(checked_on_segment > 20);
        for t in [1.0001, 1.5, 2.0, 10.0, 1e3] {
            let z = c(0.0, -t);
            let v1 = atan_principal(z, AtanVariant::V1).unwrap();
            let v2 = atan_principal(z, AtanVariant::V2).unwrap();
            assert!(((v2 - v1) - c(PI, 0.0)).norm() < 1e-12);
        }
    }

    proptest! {
        /// V1 is odd everywhere: its two logarithms swap under z -> -z.
        #[test]
        fn atan_v1_odd_symmetry(re in -10.0f64..10.0, im in -10.0f64..10.0) {
            let z = c(re, im);
            prop_assume!(z != c(0.0, 1.0) && z != c(0.0, -1.0));
            let plus = atan_principal(z, AtanVariant::V1).unwrap();
            let minus = atan_principal(-z, AtanVariant::V1).unwrap();
            prop_assert!((plus + minus).norm() <= 1e-12 * plus.norm().max(1.0));
        }

        /// V2 is odd off the imaginary axis (its cut breaks the symmetry).
        #[test]
        fn atan_v2_odd_symmetry_off_axis(re in 1e-6f64..10.0, im in -10.0f64..10.0, flip in proptest::bool::ANY) {
            let z = c(if flip { -re } else { re }, im);
            let plus = atan_principal(z, AtanVariant::V2).unwrap();
            let minus = atan_principal(-z, AtanVariant::V2).unwrap();
            prop_assert!((plus + minus).norm() <= 1e-12 * plus.norm().max(1.0));
        }

        /// On the real axis both variants coincide with the real arctangent.
        #[test]
        fn atan_matches_real_arctangent(x in -50.0f64..50.0) {
            for variant in [AtanVariant::V1, AtanVariant::V2] {
                let v = atan_principal(c(x, 0.0), variant).unwrap();
                prop_assert!((v.re - x.atan()).abs() <= 1e-15);
                prop_assert!(v.im.abs() <= 1e-15);
            }
        }

        /// exp inverts the principal log.
        #[test]
        fn exp_inverts_principal_log(re in -20.0f64..20.0, im in -20.0f64..20.0) {
            let z = c(re, im);
            prop_assume!(z.norm() > 1e-9);
            let w = principal_log(z).unwrap().exp();
            prop_assert!((w - z).norm() <= 1e-14 * z.norm());
        }
    }
}
