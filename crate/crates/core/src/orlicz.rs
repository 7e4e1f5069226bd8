//! φ-functions, modulars and Luxemburg norms.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_kronrod, AdaptiveOptions, FrozenRule};
use crate::scalar::{lit, Real};
use crate::signals::{Domain, Signal};

/// Partial integrals above this are reported as infinite.
pub const OVERFLOW_GUARD: f64 = 1e100;
/// Upper cap for the Luxemburg bracket search.
pub const LAMBDA_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiKind<T> {
    /// `u^p`
    Power { p: T },
    /// `u^alpha log^beta(u + e)`
    Zygmund { alpha: T, beta: T },
    /// `exp(u^gamma) - 1`
    Exponential { gamma: T },
}

/// A φ-function: continuous, non-decreasing, `φ(0) = 0`, unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiFunction<T> {
    kind: PhiKind<T>,
}

impl<T: Real> fmt::Display for PhiFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PhiKind::Power { p } => write!(f, "power:{p}"),
            PhiKind::Zygmund { alpha, beta } => write!(f, "zygmund:{alpha},{beta}"),
            PhiKind::Exponential { gamma } => write!(f, "exponential:{gamma}"),
        }
    }
}

impl<T: Real> PhiFunction<T> {
    pub fn power(p: T) -> Result<Self> {
        if !(p >= T::one()) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "power phi needs p >= 1, got {p}"
            )));
        }
        Ok(Self {
            kind: PhiKind::Power { p },
        })
    }

    pub fn zygmund(alpha: T, beta: T) -> Result<Self> {
        if !(alpha >= T::one()) || !(beta > T::zero()) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "zygmund phi needs alpha >= 1 and beta > 0, got ({alpha}, {beta})"
            )));
        }
        Ok(Self {
            kind: PhiKind::Zygmund { alpha, beta },
        })
    }

    /// Accepts any `gamma > 0`; for `gamma < 1` the result is not convex, see [`Self::convex`].
    pub fn exponential(gamma: T) -> Result<Self> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "exponential phi needs gamma > 0, got {gamma}"
            )));
        }
        Ok(Self {
            kind: PhiKind::Exponential { gamma },
        })
    }

    /// Parses `power:<p>`, `zygmund:<alpha>,<beta>` or `exponential:<gamma>`.
    pub fn from_name(name: &str) -> Result<Self> {
        let unknown = || Error::UnknownName {
            kind: "phi",
            name: name.to_string(),
        };
        let (head, args) = name.trim().split_once(':').ok_or_else(unknown)?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| unknown())?;
        match (head, nums.as_slice()) {
            ("power", [p]) => Self::power(lit(*p)),
            ("zygmund", [a, b]) => Self::zygmund(lit(*a), lit(*b)),
            ("exponential", [g]) => Self::exponential(lit(*g)),
            _ => Err(unknown()),
        }
    }

    pub fn kind(&self) -> PhiKind<T> {
        self.kind
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    /// φ(u) for `u >= 0`; negative input is treated as 0. Overflow yields `+inf`.
    pub fn evaluate(&self, u: T) -> T {
        let u = u.max(T::zero());
        if u == T::zero() {
            return T::zero();
        }
        match self.kind {
            PhiKind::Power { p } => u.powf(p),
            PhiKind::Zygmund { alpha, beta } => u.powf(alpha) * (u + T::E()).ln().powf(beta),
            PhiKind::Exponential { gamma } => u.powf(gamma).exp_m1(),
        }
    }

    pub fn convex(&self) -> bool {
        match self.kind {
            PhiKind::Exponential { gamma } => gamma >= T::one(),
            _ => true,
        }
    }

    pub fn delta2(&self) -> bool {
        !matches!(self.kind, PhiKind::Exponential { .. })
    }

    /// Closed-form inverse where one exists (power and exponential).
    pub fn inverse(&self, v: T) -> Option<T> {
        if v < T::zero() {
            return None;
        }
        match self.kind {
            PhiKind::Power { p } => Some(v.powf(p.recip())),
            PhiKind::Exponential { gamma } => Some(v.ln_1p().powf(gamma.recip())),
            PhiKind::Zygmund { .. } => None,
        }
    }
}

/// Value of a modular: a finite number or divergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModularValue<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> ModularValue<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            ModularValue::Finite(v) => Some(v),
            ModularValue::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ModularValue::Infinite)
    }

    /// `Infinite` maps to `+inf`.
    pub fn to_real(self) -> T {
        self.finite().unwrap_or_else(T::infinity)
    }

    /// `self <= bound`, with `Infinite` never below a finite bound.
    pub fn at_most(self, bound: T) -> bool {
        self.finite().map(|v| v <= bound).unwrap_or(false)
    }

    fn classify(v: T) -> Self {
        if v.is_finite() && v.as_f64() <= OVERFLOW_GUARD {
            ModularValue::Finite(v)
        } else {
            ModularValue::Infinite
        }
    }
}

/// The modular `I[f] = int phi(|f|)` with its integration policy.
#[derive(Debug, Clone)]
pub struct Modular<T> {
    phi: PhiFunction<T>,
    window: Option<(T, T)>,
    options: AdaptiveOptions,
}

impl<T: Real> Modular<T> {
    pub fn new(phi: PhiFunction<T>) -> Self {
        Self {
            phi,
            window: None,
            options: AdaptiveOptions::default(),
        }
    }

    pub fn with_window(mut self, lo: T, hi: T) -> Self {
        self.window = Some((lo, hi));
        self
    }

    pub fn with_options(mut self, options: AdaptiveOptions) -> Self {
        self.options = options;
        self
    }

    pub fn phi(&self) -> &PhiFunction<T> {
        &self.phi
    }

    /// Integration pieces for `f`: the window intersected with the domain,
    /// plus the parts of a declared support lying outside the window
    /// (where nothing else contributes).
    pub fn pieces(&self, f: &Signal<T>) -> Result<Vec<(T, T)>> {
        let domain = f.domain();
        let mut pieces = Vec::new();
        match (self.window, domain, f.support()) {
            (Some((lo, hi)), Domain::Interval { a, b }, _) => {
                let (lo, hi) = (lo.max(a), hi.min(b));
                if lo < hi {
                    pieces.push((lo, hi));
                }
            }
            (Some((lo, hi)), Domain::RealLine, support) => {
                if let Some((s0, s1)) = support {
                    let (lo, hi) = (lo.max(s0), hi.min(s1));
                    if lo < hi {
                        pieces.push((lo, hi));
                        if s0 < lo {
                            pieces.push((s0, lo));
                        }
                        if hi < s1 {
                            pieces.push((hi, s1));
                        }
                    } else {
                        pieces.push((s0, s1));
                    }
                } else if lo < hi {
                    pieces.push((lo, hi));
                }
            }
            (None, Domain::Interval { a, b }, _) => pieces.push((a, b)),
            (None, Domain::RealLine, Some(s)) => pieces.push(s),
            (None, Domain::RealLine, None) => {
                return Err(Error::WindowRequired {
                    signal: f.name().to_string(),
                })
            }
        }
        pieces.sort_by(|x, y| x.0.as_f64().total_cmp(&y.0.as_f64()));
        Ok(pieces)
    }

    /// `I[f]`.
    pub fn eval(&self, f: &Signal<T>) -> Result<ModularValue<T>> {
        self.eval_scaled(f, T::one())
    }

    /// `I[scale * f]`.
    pub fn eval_scaled(&self, f: &Signal<T>, scale: T) -> Result<ModularValue<T>> {
        let mut total = T::zero();
        for (lo, hi) in self.pieces(f)? {
            let points = f.partition(lo, hi);
            let integrand = |t: T| self.phi.evaluate((scale * f.evaluate(t)).abs());
            let (res, _) = gauss_kronrod(integrand, &points, self.options);
            if !res.value.is_finite() || res.value.as_f64() > OVERFLOW_GUARD {
                return Ok(ModularValue::Infinite);
            }
            if !res.converged {
                return Err(Error::QuadratureNotConverged {
                    estimate: res.value.as_f64(),
                    error: res.error.as_f64(),
                });
            }
            total = total + res.value;
        }
        Ok(ModularValue::classify(total))
    }

    /// Freezes an adapted rule for `|f|` so that `I[lambda f]` can be
    /// re-evaluated cheaply for many `lambda`.
    pub fn sampled(&self, f: &Signal<T>) -> Result<SampledFunction<T>> {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut values = Vec::new();
        for (lo, hi) in self.pieces(f)? {
            let points = f.partition(lo, hi);
            let probe = |t: T| self.phi.evaluate(f.evaluate(t).abs());
            let (rule, _) = FrozenRule::adapted(probe, &points, self.options);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                nodes.push(*x);
                weights.push(*w);
                values.push(f.evaluate(*x).abs());
            }
        }
        Ok(SampledFunction {
            nodes,
            weights,
            values,
        })
    }
}

/// `|f|` tabulated on a fixed quadrature rule.
#[derive(Debug, Clone, Default)]
pub struct SampledFunction<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
    pub values: Vec<T>,
}

impl<T: Real> SampledFunction<T> {
    /// Tabulates `|g|` on a frozen rule.
    pub fn from_rule<F: Fn(T) -> T>(rule: &FrozenRule<T>, g: F) -> Self {
        Self {
            nodes: rule.nodes.clone(),
            weights: rule.weights.clone(),
            values: rule.nodes.iter().map(|&x| g(x).abs()).collect(),
        }
    }

    pub fn sup(&self) -> T {
        self.values.iter().copied().fold(T::zero(), T::max)
    }

    /// `I[scale * f]` on the frozen rule.
    pub fn modular(&self, phi: &PhiFunction<T>, scale: T) -> ModularValue<T> {
        let mut total = T::zero();
        for (w, v) in self.weights.iter().zip(&self.values) {
            total = total + *w * phi.evaluate(scale * *v);
            if !total.is_finite() || total.as_f64() > OVERFLOW_GUARD {
                return ModularValue::Infinite;
            }
        }
        ModularValue::Finite(total)
    }

    pub fn luxemburg(&self, phi: &PhiFunction<T>, tol: T) -> Result<T> {
        luxemburg_from_modular(|lambda| Ok(self.modular(phi, lambda.recip())), tol)
    }
}

/// `I^phi[f]` with an optional explicit window.
pub fn modular<T: Real>(
    phi: &PhiFunction<T>,
    f: &Signal<T>,
    window: Option<(T, T)>,
) -> Result<ModularValue<T>> {
    let mut m = Modular::new(*phi);
    if let Some((lo, hi)) = window {
        m = m.with_window(lo, hi);
    }
    m.eval(f)
}

/// `inf { lambda > 0 : I[f / lambda] <= 1 }`.
pub fn luxemburg_norm<T: Real>(
    phi: &PhiFunction<T>,
    f: &Signal<T>,
    window: Option<(T, T)>,
    tol: T,
) -> Result<T> {
    let mut m = Modular::new(*phi);
    if let Some((lo, hi)) = window {
        m = m.with_window(lo, hi);
    }
    luxemburg_from_modular(|lambda| m.eval_scaled(f, lambda.recip()), tol)
}

/// Luxemburg norm from the map `lambda -> I[f / lambda]`, which must be
/// non-increasing. The bracket starts at 1 and is doubled or halved; the
/// bisection stops once its width is below `tol * lambda`.
pub fn luxemburg_from_modular<T: Real, F>(mut modular_at: F, tol: T) -> Result<T>
where
    F: FnMut(T) -> Result<ModularValue<T>>,
{
    let tol = tol.max(T::epsilon());
    let cap: T = lit(LAMBDA_CAP);
    let two = T::one() + T::one();
    let fits = |v: ModularValue<T>| v.at_most(T::one());

    // I[f/lambda] grows like phi(1/lambda): a zero here at lambda = 1e-12
    // means the modular vanishes for every scale.
    let (mut lo, mut hi);
    if fits(modular_at(T::one())?) {
        hi = T::one();
        lo = T::one() / two;
        while fits(modular_at(lo)?) {
            hi = lo;
            lo = lo / two;
            if lo < cap.recip() {
                return match modular_at(lo)? {
                    ModularValue::Finite(v) if v == T::zero() => Ok(T::zero()),
                    _ => Ok(lo),
                };
            }
        }
    } else {
        lo = T::one();
        hi = two;
        while !fits(modular_at(hi)?) {
            lo = hi;
            hi = hi * two;
            if hi > cap {
                return Err(Error::NotInOrliczSpace);
            }
        }
    }
    while hi - lo > tol * hi {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if fits(modular_at(mid)?) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo + hi) / two)
}

/// Max/phi check on a finite list:
/// `(phi(max A) <= max phi(2A), phi(max A) == max phi(A))`, the equality to
/// relative precision 1e-12. An empty list gives `(true, true)`.
pub fn maxphi_inequality_check<T: Real>(phi: &PhiFunction<T>, values: &[T]) -> (bool, bool) {
    if values.is_empty() {
        return (true, true);
    }
    let top = values.iter().copied().fold(T::neg_infinity(), T::max);
    let lhs = phi.evaluate(top);
    let two = T::one() + T::one();
    let doubled = values
        .iter()
        .map(|&a| phi.evaluate(two * a))
        .fold(T::neg_infinity(), T::max);
    let direct = values
        .iter()
        .map(|&a| phi.evaluate(a))
        .fold(T::neg_infinity(), T::max);
    let slack = lit::<T>(1e-12) * lhs.abs().max(T::one());
    let equal = lhs == direct || (lhs - direct).abs() <= slack;
    (lhs <= doubled, equal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::PiecewisePolynomial;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{E, LN_2};

    #[test]
    fn phi_examples() {
        let p2 = PhiFunction::<f64>::power(2.0).unwrap();
        assert_eq!(p2.evaluate(3.0), 9.0);
        assert_eq!(PhiFunction::<f64>::power(1.0).unwrap().evaluate(0.0), 0.0);
        assert!(p2.delta2() && p2.convex());
        assert!(PhiFunction::<f64>::power(0.5).is_err());

        let z = PhiFunction::<f64>::zygmund(1.0, 1.0).unwrap();
        assert_eq!(z.evaluate(0.0), 0.0);
        assert_abs_diff_eq!(z.evaluate(E * E - E), 2.0 * (E * E - E), epsilon = 1e-12);
        assert!(z.delta2());
        assert!(PhiFunction::<f64>::zygmund(0.5, 1.0).is_err());
        assert!(PhiFunction::<f64>::zygmund(1.0, 0.0).is_err());

        let e1 = PhiFunction::<f64>::exponential(1.0).unwrap();
        assert_abs_diff_eq!(e1.evaluate(LN_2), 1.0, epsilon = 1e-15);
        assert!(!e1.delta2());
        assert!(e1.convex());
        assert_eq!(
            PhiFunction::<f64>::exponential(2.0).unwrap().evaluate(0.0),
            0.0
        );
        assert!(!PhiFunction::<f64>::exponential(0.5).unwrap().convex());
        assert!(PhiFunction::<f64>::exponential(0.0).is_err());
        assert_eq!(e1.evaluate(1e6), f64::INFINITY);
    }

    #[test]
    fn phi_names_round_trip() {
        for name in ["power:2", "zygmund:1,1", "exponential:0.5"] {
            let phi = PhiFunction::<f64>::from_name(name).unwrap();
            assert_eq!(PhiFunction::from_name(&phi.name()).unwrap(), phi);
        }
        for bad in ["power", "power:x", "cosh:1", "zygmund:1", "power:0.2"] {
            assert!(PhiFunction::<f64>::from_name(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn inverses() {
        let p = PhiFunction::<f64>::power(3.0).unwrap();
        assert_abs_diff_eq!(p.inverse(p.evaluate(1.7)).unwrap(), 1.7, epsilon = 1e-12);
        let e = PhiFunction::<f64>::exponential(2.0).unwrap();
        assert_abs_diff_eq!(e.inverse(e.evaluate(0.8)).unwrap(), 0.8, epsilon = 1e-12);
        assert!(PhiFunction::<f64>::zygmund(1.0, 1.0)
            .unwrap()
            .inverse(1.0)
            .is_none());
    }

    #[test]
    fn modular_examples() {
        let p2 = PhiFunction::<f64>::power(2.0).unwrap();
        let v = modular(&p2, &Signal::ramp(), None)
            .unwrap()
            .finite()
            .unwrap();
        assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-9);
        let zero = Signal::<f64>::constant(0.0);
        assert_eq!(
            modular(&p2, &zero, None).unwrap(),
            ModularValue::Finite(0.0)
        );
        let e1 = PhiFunction::<f64>::exponential(1.0).unwrap();
        let one = Signal::<f64>::constant(1.0).with_domain(Domain::interval(0.0, 2.0).unwrap());
        let v = modular(&e1, &one, None).unwrap().finite().unwrap();
        assert_abs_diff_eq!(v, 2.0 * (E - 1.0), epsilon = 1e-9);
    }

    #[test]
    fn modular_honours_support_and_windows() {
        let p1 = PhiFunction::<f64>::power(1.0).unwrap();
        let hat = Signal::<f64>::hat();
        assert_abs_diff_eq!(
            modular(&p1, &hat, None).unwrap().to_real(),
            1.0,
            epsilon = 1e-12
        );
        // a narrow window still picks up the rest of the support
        assert_abs_diff_eq!(
            modular(&p1, &hat, Some((-0.2, 0.3))).unwrap().to_real(),
            1.0,
            epsilon = 1e-10
        );
        let unbounded = Signal::<f64>::constant(1.0).with_domain(Domain::RealLine);
        assert!(matches!(
            modular(&p1, &unbounded, None),
            Err(Error::WindowRequired { .. })
        ));
        assert_abs_diff_eq!(
            modular(&p1, &unbounded, Some((0.0, 3.0)))
                .unwrap()
                .to_real(),
            3.0,
            epsilon = 1e-12
        );
        let ramp = Signal::<f64>::ramp();
        assert_abs_diff_eq!(
            modular(&p1, &ramp, Some((0.5, 4.0))).unwrap().to_real(),
            0.375,
            epsilon = 1e-12
        );
    }

    #[test]
    fn modular_overflow_is_infinite() {
        let e2 = PhiFunction::<f64>::exponential(2.0).unwrap();
        let big = Signal::<f64>::constant(40.0);
        assert!(modular(&e2, &big, None).unwrap().is_infinite());
    }

    #[test]
    fn luxemburg_examples() {
        let p2 = PhiFunction::<f64>::power(2.0).unwrap();
        let n = luxemburg_norm(&p2, &Signal::constant(1.0), None, 1e-10).unwrap();
        assert_abs_diff_eq!(n, 1.0, epsilon = 1e-9);
        let e1 = PhiFunction::<f64>::exponential(1.0).unwrap();
        let n = luxemburg_norm(&e1, &Signal::constant(2.0), None, 1e-10).unwrap();
        assert_abs_diff_eq!(n, 2.0 / LN_2, epsilon = 1e-8);
        assert_eq!(
            luxemburg_norm(&p2, &Signal::constant(0.0), None, 1e-10).unwrap(),
            0.0
        );
        let tiny = luxemburg_norm(&p2, &Signal::constant(1e-6), None, 1e-10).unwrap();
        assert_abs_diff_eq!(tiny, 1e-6, epsilon = 1e-14);
    }

    #[test]
    fn luxemburg_matches_lp_norm_on_random_piecewise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let f = Signal::<f64>::piecewise(
                "r",
                PiecewisePolynomial::random(&mut rng, 0.0, 1.0, 3, 3),
            );
            let p: f64 = rng.gen_range(1.0..4.0);
            let phi = PhiFunction::power(p).unwrap();
            let integral = modular(&phi, &f, None).unwrap().to_real();
            let lp = integral.powf(1.0 / p);
            let lux = luxemburg_norm(&phi, &f, None, 1e-10).unwrap();
            assert!(
                (lux - lp).abs() <= 1e-6 * lp.max(1.0),
                "p={p} lux={lux} lp={lp}"
            );
        }
    }

    #[test]
    fn sampled_function_matches_direct_modular() {
        let phi = PhiFunction::<f64>::zygmund(1.0, 1.0).unwrap();
        let f = Signal::<f64>::sawtooth(3);
        let m = Modular::new(phi);
        let s = m.sampled(&f).unwrap();
        for lambda in [0.5, 1.0, 3.0] {
            let a = s.modular(&phi, lambda).to_real();
            let b = m.eval_scaled(&f, lambda).unwrap().to_real();
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
        assert_abs_diff_eq!(
            s.luxemburg(&phi, 1e-10).unwrap(),
            luxemburg_norm(&phi, &f, None, 1e-10).unwrap(),
            epsilon = 1e-7
        );
    }

    #[test]
    fn maxphi_examples() {
        let p2 = PhiFunction::<f64>::power(2.0).unwrap();
        assert_eq!(maxphi_inequality_check(&p2, &[1.0, 3.0, 2.0]), (true, true));
        assert_eq!(maxphi_inequality_check(&p2, &[0.0]), (true, true));
        let e1 = PhiFunction::<f64>::exponential(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let values: Vec<f64> = (0..100).map(|_| rng.gen_range(0.0..5.0)).collect();
        assert_eq!(maxphi_inequality_check(&e1, &values), (true, true));
    }
}
