//! Diagonal Pade approximation of the delay term and the rational
//! approximant of the delay transfer function.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DelayTF;

/// Largest accepted approximation order; factorial-free recurrences stay well
/// conditioned up to here.
pub const MAX_PADE_ORDER: usize = 12;

/// Rational transfer function with real coefficients in ascending powers of
/// `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalTF {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl RationalTF {
    /// Constructs after trimming trailing zero coefficients; the denominator
    /// must not be identically zero.
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        let num = trim(num);
        let den = trim(den);
        if den.is_empty() {
            return Err(Error::InvalidArgument("zero denominator polynomial".into()));
        }
        Ok(Self { num, den })
    }

    pub fn num_degree(&self) -> usize {
        self.num.len().saturating_sub(1)
    }

    pub fn den_degree(&self) -> usize {
        self.den.len().saturating_sub(1)
    }

    /// `F(j omega)` by Horner evaluation of both polynomials.
    ///
    /// A vanishing denominator at `j omega` means an imaginary-axis pole.
    pub fn freq_response(&self, omega: f64) -> Result<Complex64> {
        let s = Complex64::new(0.0, omega);
        let num = horner(&self.num, s);
        let den = horner(&self.den, s);
        if den.norm_sqr() == 0.0 {
            return Err(Error::NonHurwitz { omega });
        }
        Ok(num / den)
    }

    /// `|F(j omega)|`.
    pub fn magnitude(&self, omega: f64) -> Result<f64> {
        Ok(self.freq_response(omega)?.norm())
    }
}

fn trim(mut coeffs: Vec<f64>) -> Vec<f64> {
    while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    if coeffs == [0.0] {
        coeffs.clear();
    }
    coeffs
}

fn horner(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, &ai) in a.iter().enumerate() {
        out[i] += ai;
    }
    for (i, &bi) in b.iter().enumerate() {
        out[i] += bi;
    }
    out
}

fn poly_scale(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|&x| x * c).collect()
}

/// Diagonal Pade approximant of `e^{-theta s}` of the given order.
///
/// Coefficient `k` of the numerator is `c_k (-theta)^k` and of the
/// denominator `c_k theta^k`, with
/// `c_k = (2N-k)! N! / ((2N)! k! (N-k)!)`, computed by the recurrence
/// `c_{k+1} = c_k (N-k) / ((2N-k)(k+1))` to avoid factorial overflow.
pub fn pade_exp(theta: f64, order: usize) -> Result<RationalTF> {
    if order == 0 || order > MAX_PADE_ORDER {
        return Err(Error::InvalidArgument(format!(
            "Pade order must be in 1..={MAX_PADE_ORDER}, got {order}"
        )));
    }
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "theta must be >= 0, got {theta}"
        )));
    }
    let n = order;
    let mut c = 1.0;
    let mut num = Vec::with_capacity(n + 1);
    let mut den = Vec::with_capacity(n + 1);
    let mut pow_neg = 1.0;
    let mut pow_pos = 1.0;
    for k in 0..=n {
        num.push(c * pow_neg);
        den.push(c * pow_pos);
        pow_neg *= -theta;
        pow_pos *= theta;
        if k < n {
            c *= (n - k) as f64 / (((2 * n - k) * (k + 1)) as f64);
        }
    }
    RationalTF::new(num, den)
}

/// Rational approximant of the delay transfer function:
/// the delay factor in the numerator is replaced by `P(s)/Q(s)` from
/// [`pade_exp`], giving
/// `[K k4 s^2 P(s) + (K k2 s + K k1) Q(s)] / [(c3 s^3 + ... + c0) Q(s)]`.
///
/// The result is strictly proper with denominator degree `3 + order`.
pub fn approx_tf(tf: &DelayTF, order: usize) -> Result<RationalTF> {
    let pq = pade_exp(tf.theta, order)?;
    let (kk1, kk2) = tf.num_static;
    // K k4 s^2 P(s)
    let delayed = poly_mul(&[0.0, 0.0, tf.num_delayed], &pq.num);
    // (K k2 s + K k1) Q(s)
    let stat = poly_mul(&[kk1, kk2], &pq.den);
    let num = poly_add(&delayed, &stat);
    let den = poly_mul(&[tf.c0, tf.c1, tf.c2, tf.c3], &pq.den);
    let out = RationalTF::new(num, den)?;
    debug_assert!(out.num_degree() < out.den_degree());
    Ok(out)
}

/// Scales every coefficient pair so the denominator is monic; useful only for
/// display.
pub fn normalized(tf: &RationalTF) -> RationalTF {
    let lead = *tf.den.last().expect("nonempty denominator");
    RationalTF {
        num: poly_scale(&tf.num, 1.0 / lead),
        den: poly_scale(&tf.den, 1.0 / lead),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Gains, VehicleParams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_delay_is_constant_one() {
        let tf = pade_exp(0.0, 4).unwrap();
        assert_eq!(tf.num, vec![1.0]);
        assert_eq!(tf.den, vec![1.0]);
    }

    #[test]
    fn first_order_closed_form() {
        let tf = pade_exp(0.3, 1).unwrap();
        assert_eq!(tf.num, vec![1.0, -0.15]);
        assert_eq!(tf.den, vec![1.0, 0.15]);
    }

    #[test]
    fn order_out_of_range_is_rejected() {
        assert!(pade_exp(0.1, 0).is_err());
        assert!(pade_exp(0.1, 13).is_err());
    }

    /// Exact series coefficients of `e^{-theta s}`: `(-theta)^j / j!`.
    fn exp_series(theta: f64, len: usize) -> Vec<f64> {
        let mut out = vec![1.0];
        for j in 1..len {
            let prev = out[j - 1];
            out.push(prev * (-theta) / j as f64);
        }
        out
    }

    #[test]
    fn series_matching_through_order_2n() {
        // num(s) - e^{-theta s} * den(s) = O(s^{2N+1})
        for n in 1..=5usize {
            let theta = 0.7;
            let tf = pade_exp(theta, n).unwrap();
            let series = exp_series(theta, 2 * n + 1);
            // convolve series with den, compare against num through 2N
            for j in 0..=2 * n {
                let mut conv = 0.0;
                for (i, &d) in tf.den.iter().enumerate() {
                    if i <= j {
                        conv += d * series[j - i];
                    }
                }
                let numj = tf.num.get(j).copied().unwrap_or(0.0);
                assert!(
                    (conv - numj).abs() < 1e-12,
                    "order {n}: series coefficient {j} mismatch: {conv} vs {numj}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn all_pass_on_imaginary_axis(
            theta in 0.01f64..3.0,
            order in 1usize..=8,
            omega in 0.01f64..50.0,
        ) {
            let tf = pade_exp(theta, order).unwrap();
            let m = tf.magnitude(omega).unwrap();
            prop_assert!((m - 1.0).abs() < 1e-12, "magnitude {m}");
        }
    }

    #[test]
    fn all_pass_at_spot_point() {
        let tf = pade_exp(0.1, 5).unwrap();
        assert_relative_eq!(tf.magnitude(3.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(tf.magnitude(1.0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn freq_response_of_constant() {
        let tf = RationalTF::new(vec![2.0], vec![1.0]).unwrap();
        for omega in [0.0, 1.0, 100.0] {
            let r = tf.freq_response(omega).unwrap();
            assert_eq!(r, Complex64::new(2.0, 0.0));
        }
    }

    #[test]
    fn imaginary_axis_pole_is_error() {
        // den = s^2 + 1 has roots at +-j
        let tf = RationalTF::new(vec![1.0], vec![1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            tf.freq_response(1.0),
            Err(Error::NonHurwitz { .. })
        ));
    }

    fn table_tf(theta: f64, k: Gains) -> DelayTF {
        let p = VehicleParams {
            theta,
            ..VehicleParams::default()
        };
        DelayTF::from_gains(&p, &k)
    }

    #[test]
    fn approximant_is_strictly_proper() {
        let tf = table_tf(0.1, Gains::new(0.92, 1.32, -0.92, 0.72));
        for order in 1..=8 {
            let r = approx_tf(&tf, order).unwrap();
            assert_eq!(r.den_degree(), 3 + order);
            assert!(r.num_degree() < r.den_degree());
        }
    }

    #[test]
    fn approximant_exact_when_delay_free() {
        let tf = table_tf(0.0, Gains::new(0.92, 1.32, -0.92, 0.72));
        let r = approx_tf(&tf, 5).unwrap();
        for omega in [0.01, 0.4, 1.3, 5.0, 20.0] {
            assert_relative_eq!(
                r.magnitude(omega).unwrap(),
                tf.exact_magnitude(omega).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn approximant_exact_when_feedforward_free() {
        let tf = table_tf(0.1, Gains::new(0.92, 1.32, -0.92, 0.0));
        let r = approx_tf(&tf, 5).unwrap();
        for omega in [0.01, 0.4, 1.3, 5.0, 20.0] {
            assert_relative_eq!(
                r.magnitude(omega).unwrap(),
                tf.exact_magnitude(omega).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn dc_gain_is_unity() {
        let tf = table_tf(0.1, Gains::new(0.92, 1.32, -0.92, 0.72));
        let r = approx_tf(&tf, 5).unwrap();
        let dc = r.freq_response(0.0).unwrap();
        assert_relative_eq!(dc.re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(dc.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn band_error_beats_series_truncation() {
        // over the comparison band the rational approximant is closer to the
        // exact magnitude than the truncated-series magnitude
        let tf = table_tf(0.1, Gains::new(0.92, 1.32, -0.92, 0.72));
        let r = approx_tf(&tf, 5).unwrap();
        let mut max_pade = 0.0f64;
        let mut max_taylor = 0.0f64;
        let n = 500;
        for i in 0..=n {
            let omega = 0.01 + (5.01 - 0.01) * i as f64 / n as f64;
            let ex = tf.exact_magnitude(omega).unwrap();
            max_pade = max_pade.max(((ex - r.magnitude(omega).unwrap()) / ex).abs());
            max_taylor = max_taylor.max(((ex - tf.taylor_magnitude(omega).unwrap()) / ex).abs());
        }
        assert!(
            max_pade < max_taylor,
            "pade {max_pade} vs taylor {max_taylor}"
        );
    }

    #[test]
    fn band_error_non_increasing_in_order() {
        for k in [
            Gains::new(0.92, 1.32, -0.92, 0.72),
            Gains::new(0.4212, 0.4775, -1.0078, 1.3197),
        ] {
            let tf = table_tf(0.1, k);
            let mut prev = f64::INFINITY;
            for order in 1..=5 {
                let r = approx_tf(&tf, order).unwrap();
                let mut worst = 0.0f64;
                let n = 400;
                for i in 0..=n {
                    let omega = 0.01 + (5.01 - 0.01) * i as f64 / n as f64;
                    let ex = tf.exact_magnitude(omega).unwrap();
                    worst = worst.max(((ex - r.magnitude(omega).unwrap()) / ex).abs());
                }
                assert!(
                    worst <= prev * (1.0 + 1e-12),
                    "order {order}: error {worst} above previous {prev}"
                );
                prev = worst;
            }
        }
    }
}
