//! Complex Gamma function via the Lanczos approximation (g = 7, 9 terms).

use std::f64::consts::PI;

use num_complex::Complex64;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_P: [f64; 9] = [
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

/// A logarithm of `Gamma(z)`. Not guaranteed to be the principal branch
/// left of `Re z = 1/2`; exponentiate it or use [`gamma`].
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Reflection: Gamma(z) Gamma(1 - z) = pi / sin(pi z)
        let s = (z * PI).sin();
        return Complex64::new(PI.ln(), 0.0) - s.ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS_P[0], 0.0);
    for (i, &p) in LANCZOS_P.iter().enumerate().skip(1) {
        x += p / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

pub fn gamma(z: Complex64) -> Complex64 {
    ln_gamma(z).exp()
}

/// `|Gamma(1 - i b)|^2 = pi b / sinh(pi b)`, with the `b -> 0` limit.
pub fn gamma_one_minus_ib_modulus_sq(b: f64) -> f64 {
    let x = PI * b;
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x / x.sinh()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn real_values() {
        for (n, fact) in [(1, 1.0), (2, 1.0), (3, 2.0), (5, 24.0), (11, 3_628_800.0)] {
            let g = gamma(c(n as f64, 0.0));
            assert!((g.re - fact).abs() < 1e-12 * fact, "Gamma({n}) = {g}");
            assert!(g.im.abs() < 1e-12 * fact);
        }
        assert!((gamma(c(0.5, 0.0)).re - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(c(-0.5, 0.0)).re + 2.0 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn gamma_one_plus_i() {
        // Reference value to double precision.
        let g = gamma(c(1.0, 1.0));
        assert!((g - c(0.498_015_668_118_356, -0.154_949_828_301_810_7)).norm() < 1e-14, "{g}");
    }

    proptest! {
        #[test]
        fn reflection_modulus(b in 0.0f64..3.0) {
            let g = gamma(c(1.0, -b));
            let want = gamma_one_minus_ib_modulus_sq(b);
            prop_assert!((g.norm_sqr() - want).abs() <= 1e-12 * want);
        }

        #[test]
        fn recurrence(re in 0.2f64..6.0, im in -4.0f64..4.0) {
            let z = c(re, im);
            let lhs = gamma(z + 1.0);
            let rhs = z * gamma(z);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm());
        }

        #[test]
        fn conjugate_symmetry(re in 0.1f64..5.0, im in -5.0f64..5.0) {
            let z = c(re, im);
            prop_assert!((gamma(z.conj()) - gamma(z).conj()).norm() <= 1e-13 * gamma(z).norm());
        }
    }
}
