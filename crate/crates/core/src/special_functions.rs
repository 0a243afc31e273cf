//! Bose functions `g_s(z) = Σ_{n≥1} zⁿ/nˢ`, the Riemann zeta values they
//! reduce to at `z = 1`, and thermal-wavelength prefactors.
//!
//! Away from `z = 1` the defining series is summed directly with Neumaier
//! compensation and stopped on its geometric tail bound. For `z > 0.99` the
//! series is replaced by Robinson's expansion in `α = −ln z`,
//!
//! ```text
//! g_s(e^{−α}) = Γ(1−s) α^{s−1} + Σ_{n≥0} ζ(s−n) (−α)ⁿ / n!
//! ```
//!
//! with the usual logarithmic term for integer `s`. Zeta values come from
//! Euler–Maclaurin summation (`s ≥ 0`) or the functional equation (`s < 0`).

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{domain, BecError, Result};

/// Fugacity above which Robinson's expansion replaces the direct series.
pub const ROBINSON_THRESHOLD: f64 = 0.99;

/// Truncation controls for series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl Default for Accuracy {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_terms: 1_000_000,
        }
    }
}

impl Accuracy {
    pub fn new(abs_tol: f64, max_terms: usize) -> Result<Self> {
        let acc = Self { abs_tol, max_terms };
        acc.validate()?;
        Ok(acc)
    }

    /// Tolerance used by the thermodynamic routines. Finite-difference checks
    /// on pressures need the Bose functions close to machine precision.
    pub fn tight() -> Self {
        Self {
            abs_tol: 1e-17,
            max_terms: 1_000_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !self.abs_tol.is_finite() {
            return Err(domain(format!("abs_tol must be positive, got {}", self.abs_tol)));
        }
        if self.max_terms < 1 {
            return Err(domain("max_terms must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolylogMethod {
    /// `z = 0`.
    Zero,
    /// `g_1(z) = −ln(1−z)`.
    ClosedForm,
    DirectSeries,
    Robinson,
    /// `z = 1`, evaluated as `ζ(s)`.
    Zeta,
}

/// A Bose-function value together with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolylogEval {
    pub value: f64,
    /// Bound on the truncation error. For the direct series this is the
    /// geometric tail bound `z^{N+1} / ((N+1)^s (1−z))` after `N` terms.
    pub error_bound: f64,
    pub terms: usize,
    pub method: PolylogMethod,
}

/// `g_s(z)` for real order `s > 0` and fugacity `0 ≤ z ≤ 1`.
pub fn bose_polylog(s: f64, z: f64, acc: Accuracy) -> Result<f64> {
    bose_polylog_eval(s, z, acc).map(|e| e.value)
}

pub fn bose_polylog_eval(s: f64, z: f64, acc: Accuracy) -> Result<PolylogEval> {
    if !(0.0..=1.0).contains(&z) {
        return Err(domain(format!("fugacity must lie in [0, 1], got {z}")));
    }
    let alpha = if z == 1.0 { 0.0 } else { -z.ln() };
    bose_polylog_exp(s, alpha, acc)
}

/// `g_s(e^{−α})` for `α ≥ 0`.
///
/// Taking `α` instead of `z` keeps full precision when the chemical potential
/// is within rounding distance of zero, where `e^{−α}` would collapse to 1.
pub fn bose_polylog_exp(s: f64, alpha: f64, acc: Accuracy) -> Result<PolylogEval> {
    acc.validate()?;
    if !(s > 0.0) || !s.is_finite() {
        return Err(domain(format!("order s must be positive and finite, got {s}")));
    }
    if alpha.is_nan() || alpha < 0.0 {
        return Err(domain(format!("α = −ln z must be nonnegative, got {alpha}")));
    }
    if alpha == f64::INFINITY {
        return Ok(PolylogEval {
            value: 0.0,
            error_bound: 0.0,
            terms: 0,
            method: PolylogMethod::Zero,
        });
    }
    if alpha == 0.0 {
        if s <= 1.0 {
            return Err(BecError::DivergentSeries(format!(
                "g_s(1) diverges for s = {s} ≤ 1"
            )));
        }
        return Ok(PolylogEval {
            value: zeta_real(s),
            error_bound: f64::EPSILON * zeta_real(s),
            terms: 0,
            method: PolylogMethod::Zeta,
        });
    }
    if let Some(k) = as_integer(s) {
        if k == 1 {
            // 1 − e^{−α} = −expm1(−α)
            let value = -(-(-alpha).exp_m1()).ln();
            return Ok(PolylogEval {
                value,
                error_bound: f64::EPSILON * value.abs(),
                terms: 0,
                method: PolylogMethod::ClosedForm,
            });
        }
    }
    let z = (-alpha).exp();
    if z > ROBINSON_THRESHOLD {
        Ok(robinson(s, alpha))
    } else {
        direct_series(s, alpha, z, acc)
    }
}

/// Riemann zeta for `s > 1`.
pub fn zeta(s: f64, acc: Accuracy) -> Result<f64> {
    acc.validate()?;
    if s == 1.0 {
        return Err(BecError::DivergentSeries("ζ(1) is the harmonic series".into()));
    }
    if !(s > 1.0) {
        return Err(domain(format!("zeta requires s > 1, got {s}")));
    }
    bose_polylog(s, 1.0, acc)
}

/// `√(4πβ)`, the thermal wavelength in units where `ħ²/2m = 1`.
pub fn thermal_wavelength(beta: f64) -> f64 {
    (4.0 * PI * beta).sqrt()
}

/// `(4πβ)^{−D/2}`, the prefactor of every ideal-gas density in `D` dimensions.
pub fn inverse_thermal_volume(beta: f64, dim: u32) -> f64 {
    (4.0 * PI * beta).powf(-(dim as f64) / 2.0)
}

fn as_integer(s: f64) -> Option<i64> {
    let r = s.round();
    ((s - r).abs() < 1e-12).then_some(r as i64)
}

fn direct_series(s: f64, alpha: f64, z: f64, acc: Accuracy) -> Result<PolylogEval> {
    let mut sum = NeumaierSum::default();
    let one_minus_z = -(-alpha).exp_m1();
    let mut n = 1usize;
    loop {
        let nf = n as f64;
        sum.add((-alpha * nf - s * nf.ln()).exp());
        let next = nf + 1.0;
        let tail = (-alpha * next - s * next.ln()).exp() / one_minus_z;
        if tail <= acc.abs_tol {
            return Ok(PolylogEval {
                value: sum.value(),
                error_bound: tail,
                terms: n,
                method: PolylogMethod::DirectSeries,
            });
        }
        if n >= acc.max_terms {
            return Err(BecError::ConvergenceFailure {
                what: format!("g_{s}({z}) tail bound {tail:e} above {:e}", acc.abs_tol),
                iterations: n,
            });
        }
        n += 1;
    }
}

fn robinson(s: f64, alpha: f64) -> PolylogEval {
    let integer = as_integer(s);
    let mut sum = NeumaierSum::default();
    match integer {
        Some(k) => {
            // Pole of Γ(1−s) and of ζ(s−n) at n = s−1 combine into a logarithm.
            let m = (k - 1) as i32;
            let harmonic: f64 = (1..=m).map(|j| 1.0 / j as f64).sum();
            let fact: f64 = (1..=m).map(|j| j as f64).product();
            sum.add((-alpha).powi(m) / fact * (harmonic - alpha.ln()));
        }
        None => sum.add(gamma(1.0 - s) * alpha.powf(s - 1.0)),
    }

    let mut coeff = 1.0; // (−α)ⁿ / n!
    let mut last = f64::INFINITY;
    let mut n = 0usize;
    while n < 80 {
        let skip = integer.is_some_and(|k| n as i64 == k - 1);
        if !skip {
            let term = zeta_real(s - n as f64) * coeff;
            sum.add(term);
            last = term.abs();
            if n as f64 > s && last <= 1e-17 * sum.value().abs() + f64::MIN_POSITIVE {
                break;
            }
        }
        n += 1;
        coeff *= -alpha / n as f64;
    }
    PolylogEval {
        value: sum.value(),
        error_bound: last + f64::EPSILON * sum.value().abs(),
        terms: n + 1,
        method: PolylogMethod::Robinson,
    }
}

const BERNOULLI_EVEN: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

/// Riemann zeta for any real `s ≠ 1` (returns ±∞ at the pole).
pub(crate) fn zeta_real(s: f64) -> f64 {
    if s == 1.0 {
        return f64::INFINITY;
    }
    if s < 0.0 {
        // ζ(s) = 2ˢ π^{s−1} sin(πs/2) Γ(1−s) ζ(1−s)
        if let Some(k) = as_integer(s) {
            if k % 2 == 0 {
                return 0.0;
            }
        }
        let reflected = zeta_real(1.0 - s);
        return 2f64.powf(s) * PI.powf(s - 1.0) * (PI * s / 2.0).sin() * gamma(1.0 - s) * reflected;
    }
    euler_maclaurin_zeta(s)
}

fn euler_maclaurin_zeta(s: f64) -> f64 {
    const N: usize = 16;
    let nf = N as f64;
    let mut sum = NeumaierSum::default();
    for n in (1..N).rev() {
        sum.add((n as f64).powf(-s));
    }
    sum.add(nf.powf(1.0 - s) / (s - 1.0));
    sum.add(0.5 * nf.powf(-s));

    let mut rising = s; // s(s+1)…(s+2k−2)
    let mut fact = 2.0; // (2k)!
    let mut power = nf.powf(-s - 1.0); // N^{−s−2k+1}
    for (k, b) in BERNOULLI_EVEN.iter().enumerate() {
        let k = k + 1;
        if k > 1 {
            let a = s + (2 * k - 3) as f64;
            rising *= a * (a + 1.0);
            fact *= ((2 * k - 1) * 2 * k) as f64;
            power /= nf * nf;
        }
        sum.add(b / fact * rising * power);
    }
    sum.value()
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ZETA_3_2: f64 = 2.612_375_348_685_488;

    #[test]
    fn zeta_known_values() {
        let acc = Accuracy::default();
        assert!((zeta(2.0, acc).unwrap() - PI * PI / 6.0).abs() < 1e-14);
        assert!((zeta(4.0, acc).unwrap() - PI.powi(4) / 90.0).abs() < 1e-14);
        assert!((zeta(1.5, acc).unwrap() - ZETA_3_2).abs() < 1e-14);
        assert!((zeta(2.5, acc).unwrap() - 1.341_487_257_250_917).abs() < 1e-14);
    }

    #[test]
    fn zeta_errors() {
        let acc = Accuracy::default();
        assert!(matches!(zeta(1.0, acc), Err(BecError::DivergentSeries(_))));
        assert!(matches!(zeta(0.5, acc), Err(BecError::Domain(_))));
    }

    #[test]
    fn zeta_real_negative_and_strip() {
        assert!((zeta_real(0.0) + 0.5).abs() < 1e-15);
        assert!((zeta_real(-1.0) + 1.0 / 12.0).abs() < 1e-14);
        assert!((zeta_real(-3.0) - 1.0 / 120.0).abs() < 1e-14);
        assert_eq!(zeta_real(-2.0), 0.0);
        assert!((zeta_real(0.5) + 1.460_354_508_809_586_8).abs() < 1e-13);
        assert!((zeta_real(-0.5) + 0.207_886_224_977_354_6).abs() < 1e-13);
    }

    #[test]
    fn zero_fugacity() {
        for s in [0.5, 1.0, 1.5, 3.0] {
            assert_eq!(bose_polylog(s, 0.0, Accuracy::default()).unwrap(), 0.0);
        }
    }

    #[test]
    fn g1_is_log() {
        let v = bose_polylog(1.0, 0.5, Accuracy::default()).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let acc = Accuracy::default();
        assert!(matches!(bose_polylog(1.5, -0.1, acc), Err(BecError::Domain(_))));
        assert!(matches!(bose_polylog(1.5, 1.1, acc), Err(BecError::Domain(_))));
        assert!(matches!(bose_polylog(0.0, 0.5, acc), Err(BecError::Domain(_))));
        assert!(matches!(bose_polylog(1.0, 1.0, acc), Err(BecError::DivergentSeries(_))));
        assert!(matches!(bose_polylog(0.5, 1.0, acc), Err(BecError::DivergentSeries(_))));
        assert!(Accuracy::new(0.0, 10).is_err());
        assert!(Accuracy::new(1e-3, 0).is_err());
    }

    #[test]
    fn max_terms_exhausted() {
        let acc = Accuracy::new(1e-30, 5).unwrap();
        assert!(matches!(
            bose_polylog(1.5, 0.9, acc),
            Err(BecError::ConvergenceFailure { .. })
        ));
    }

    #[test]
    fn robinson_matches_direct_at_switch() {
        // Both branches evaluated on either side of the threshold.
        for s in [0.5, 1.5, 2.0, 2.5, 3.0] {
            let below = bose_polylog_eval(s, 0.9899999, Accuracy::tight()).unwrap();
            let above = bose_polylog_eval(s, 0.9900001, Accuracy::tight()).unwrap();
            assert_eq!(below.method, PolylogMethod::DirectSeries);
            assert_eq!(above.method, PolylogMethod::Robinson);
            let robinson_below = robinson(s, -(0.9899999f64).ln());
            assert!(
                (robinson_below.value - below.value).abs() < 1e-13 * below.value,
                "s = {s}: {} vs {}",
                robinson_below.value,
                below.value
            );
        }
    }

    #[test]
    fn integer_order_expansion() {
        // Li_2(e^{−α}) = π²/6 − α + α ln α − α²/4 + α³/72 + O(α⁵)
        let alpha: f64 = 1e-3;
        let expected =
            PI * PI / 6.0 - alpha + alpha * alpha.ln() - alpha * alpha / 4.0 + alpha.powi(3) / 72.0;
        let got = bose_polylog_exp(2.0, alpha, Accuracy::tight()).unwrap().value;
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn tiny_alpha_approaches_zeta() {
        let g = bose_polylog_exp(1.5, 1e-24, Accuracy::tight()).unwrap().value;
        let shift = 2.0 * PI.sqrt() * 1e-12;
        assert!((ZETA_3_2 - shift - g).abs() < 1e-15);
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        let mut s = NeumaierSum::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }
}
