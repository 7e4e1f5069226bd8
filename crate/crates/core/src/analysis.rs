//! Verification harness: convergence studies, moduli of continuity,
//! Jackson-type bounds, modular inequalities and seeded campaigns.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{moment, Kernel, Moment};
use crate::operators::{
    shift_wrapper, KantorovichOperator, LinearKantorovich, OperatorConfig, ShiftedOperator,
};
use crate::orlicz::{maxphi_inequality_check, ModularValue, PhiFunction, SampledFunction};
use crate::quadrature::{AdaptiveOptions, FrozenRule};
use crate::scalar::{lit, Real};
use crate::signals::{Domain, Signal};

/// Default number of uniform sup-norm grid points.
pub const DEFAULT_GRID_POINTS: usize = 2048;
/// Errors below this are excluded from rate fits.
pub const RATE_NOISE_FLOOR: f64 = 1e-12;
/// Threshold used by [`find_modular_lambda`].
pub const LAMBDA_THRESHOLD: f64 = 1e-3;
/// Minimum grid points per `delta` in [`modulus_of_continuity`].
pub const MIN_DENSITY: usize = 16;

/// Quadrature policy for integrals of operator errors (piecewise smooth with kinks).
pub fn error_quadrature() -> AdaptiveOptions {
    AdaptiveOptions {
        abs_tol: 1e-11,
        rel_tol: 1e-9,
        max_intervals: 100_000,
    }
}

/// `omega(f, delta)`, the sup of `|f(x) - f(y)|` over sampled pairs with
/// `|x - y| <= delta`, using `density` grid points per `delta`.
pub fn modulus_of_continuity<T: Real>(f: &Signal<T>, delta: T, density: usize) -> Result<T> {
    if !(delta > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let (lo, hi) = match (f.domain(), f.support()) {
        (Domain::Interval { a, b }, _) => (a, b),
        (Domain::RealLine, Some((s0, s1))) => (s0 - delta, s1 + delta),
        (Domain::RealLine, None) => {
            return Err(Error::WindowRequired {
                signal: f.name().to_string(),
            })
        }
    };
    let density = density.max(MIN_DENSITY);
    let h = delta / T::from_usize(density).unwrap();
    let count = ((hi - lo) / h).ceil().to_usize().unwrap_or(0);
    let samples: Vec<T> = (0..=count)
        .map(|i| f.evaluate((lo + h * T::from_usize(i).unwrap()).min(hi)))
        .collect();
    let best = (0..samples.len())
        .into_par_iter()
        .map(|i| {
            let end = (i + density).min(samples.len() - 1);
            samples[i + 1..=end]
                .iter()
                .fold(T::zero(), |m, v| m.max((*v - samples[i]).abs()))
        })
        .reduce(T::zero, T::max);
    Ok(best)
}

/// Least-squares slope of `ln err` against `ln n`, skipping errors below the noise floor.
pub fn fitted_rate<T: Real>(scales: &[u64], errors: &[T]) -> Option<T> {
    let pts: Vec<(f64, f64)> = scales
        .iter()
        .zip(errors)
        .filter(|(_, e)| e.as_f64() > RATE_NOISE_FLOOR && e.is_finite())
        .map(|(n, e)| ((*n as f64).ln(), e.as_f64().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| lit(sxy / sxx))
}

/// `K_n f`, through the shift wrapper when `f` is not declared non-negative.
#[derive(Debug, Clone)]
pub enum Reconstruction<T> {
    Plain(KantorovichOperator<T>),
    Shifted(ShiftedOperator<T>),
}

impl<T: Real> Reconstruction<T> {
    pub fn new(config: &OperatorConfig<T>, f: &Signal<T>) -> Result<Self> {
        if f.is_nonneg() {
            Ok(Self::Plain(KantorovichOperator::new(config.clone(), f)?))
        } else {
            Ok(Self::Shifted(shift_wrapper(config, f)?))
        }
    }

    pub fn eval(&self, x: T) -> Result<T> {
        match self {
            Self::Plain(op) => op.eval(x),
            Self::Shifted(op) => op.eval(x),
        }
    }

    /// Value and whether the denominator respected `a_chi`.
    pub fn eval_checked(&self, x: T) -> Result<(T, bool)> {
        let (inner, shift) = match self {
            Self::Plain(op) => (op, T::zero()),
            Self::Shifted(op) => (op.inner(), op.shift()),
        };
        let e = inner.eval_detailed(x)?;
        Ok((e.value + shift, !e.below_lower_bound))
    }
}

/// Window on which operator errors are measured: the domain, or on the real
/// line the signal's support widened by a margin from the kernel's reach.
pub fn error_window<T: Real>(f: &Signal<T>, kernel: &Kernel<T>, n: u64) -> Result<(T, T)> {
    match f.domain() {
        Domain::Interval { a, b } => Ok((a, b)),
        Domain::RealLine => {
            let (s0, s1) = f.support().ok_or_else(|| Error::UnboundedSupport {
                signal: f.name().to_string(),
            })?;
            let scale = T::from_u64(n).unwrap();
            let reach = match (
                kernel.support(),
                kernel.decay_order(),
                kernel.decay_constant(),
            ) {
                (Some(s), _, _) => s + T::one(),
                (None, Some(alpha), Some(c)) => {
                    // |K_n f| <= C (n d)^-alpha sup|f| / a beyond the support
                    let a = kernel.lower_bound(crate::kernels::DomainKind::RealLine);
                    let m = f.abs_bound().unwrap_or_else(T::one);
                    (c * m / (a * lit(1e-4))).powf(alpha.recip())
                }
                _ => {
                    return Err(Error::MissingDecayInfo {
                        kernel: kernel.name().to_string(),
                    })
                }
            };
            let margin = (reach / scale).max(T::one() / scale).min(lit(64.0));
            Ok((s0 - margin, s1 + margin))
        }
    }
}

/// Uniform grid plus lattice-cell midpoints inside `[lo, hi]`.
pub fn sup_grid<T: Real>(lo: T, hi: T, n: u64, points: usize) -> Vec<T> {
    let points = points.max(2);
    let step = (hi - lo) / T::from_usize(points - 1).unwrap();
    let mut grid: Vec<T> = (0..points)
        .map(|i| (lo + step * T::from_usize(i).unwrap()).min(hi))
        .collect();
    let scale = T::from_u64(n).unwrap();
    let half: T = lit(0.5);
    let k_lo = (lo * scale).floor().to_i64().unwrap_or(0);
    let k_hi = (hi * scale).ceil().to_i64().unwrap_or(0);
    grid.extend(
        (k_lo..=k_hi)
            .map(|k| (T::from_index(k) + half) / scale)
            .filter(|&x| x >= lo && x <= hi),
    );
    grid.sort_by(|x, y| x.as_f64().total_cmp(&y.as_f64()));
    grid.dedup();
    grid
}

/// Quadrature breakpoints for an operator error on `[lo, hi]`: signal
/// breakpoints and the half-lattice where the denominator's argmax switches.
fn error_points<T: Real>(f: &Signal<T>, lo: T, hi: T, n: u64) -> Vec<T> {
    let scale = T::from_u64(n).unwrap();
    let half: T = lit(0.5);
    let mut pts = f.partition(lo, hi);
    let k_lo = (lo * scale).floor().to_i64().unwrap_or(0);
    let k_hi = (hi * scale).ceil().to_i64().unwrap_or(0);
    pts.extend(
        (k_lo..=k_hi)
            .map(|k| (T::from_index(k) + half) / scale)
            .filter(|&x| x > lo && x < hi),
    );
    pts.sort_by(|x, y| x.as_f64().total_cmp(&y.as_f64()));
    pts.dedup();
    pts
}

/// Tabulates `|g|` on a rule adapted to `phi(lambda |g|)`.
fn sample_error<T: Real, G: Fn(T) -> Result<T>>(
    g: G,
    points: &[T],
    phi: &PhiFunction<T>,
    lambda: T,
) -> Result<SampledFunction<T>> {
    let first_error = std::sync::Mutex::new(None);
    let eval = |x: T| match g(x) {
        Ok(v) => v,
        Err(e) => {
            first_error.lock().unwrap().get_or_insert(e);
            T::nan()
        }
    };
    let (rule, integral) = FrozenRule::adapted(
        |x| phi.evaluate(lambda * eval(x).abs()),
        points,
        error_quadrature(),
    );
    let sampled = SampledFunction::from_rule(&rule, eval);
    if let Some(e) = first_error.into_inner().unwrap() {
        return Err(e);
    }
    if !integral.converged && integral.value.is_finite() {
        log::warn!(
            "error quadrature stopped at {} panels (estimate {:e})",
            integral.intervals,
            integral.error.as_f64()
        );
    }
    Ok(sampled)
}

/// Rates fitted to each error family.
#[derive(Debug, Clone, Serialize)]
pub struct FittedRates<T> {
    pub sup: Option<T>,
    pub modular: Option<T>,
    pub luxemburg: Option<T>,
}

/// Per-scale error measurements of `K_n f - f`.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport<T> {
    pub signal: String,
    pub kernel: String,
    pub phi: String,
    pub domain: Domain<T>,
    pub lambda_used: T,
    pub scales: Vec<u64>,
    pub sup_errors: Vec<T>,
    /// `+inf` (serialized as `null`) when the modular diverges.
    pub modular_errors: Vec<T>,
    pub luxemburg_errors: Vec<T>,
    pub fitted_rate: FittedRates<T>,
    /// The denominator stayed above `a_chi` at every sup-grid point.
    pub valid: Vec<bool>,
    pub grid_points: usize,
}

impl<T: Real + Serialize> ConvergenceReport<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Columns `n, sup_error, modular_error, luxemburg_error`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["n", "sup_error", "modular_error", "luxemburg_error"])
            .map_err(io)?;
        for i in 0..self.scales.len() {
            w.write_record([
                self.scales[i].to_string(),
                self.sup_errors[i].to_string(),
                self.modular_errors[i].to_string(),
                self.luxemburg_errors[i].to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Inputs of a convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceSetup<T> {
    pub kernel: Kernel<T>,
    pub phi: PhiFunction<T>,
    pub lambda: T,
    pub scales: Vec<u64>,
    pub grid_points: usize,
    /// Caller-supplied lower bound for the denominator; computed when absent.
    pub lower_bound: Option<T>,
    pub luxemburg_tol: T,
}

impl<T: Real> ConvergenceSetup<T> {
    pub fn new(kernel: Kernel<T>, phi: PhiFunction<T>, lambda: T, scales: Vec<u64>) -> Self {
        Self {
            kernel,
            phi,
            lambda,
            scales,
            grid_points: DEFAULT_GRID_POINTS,
            lower_bound: None,
            luxemburg_tol: lit(1e-9),
        }
    }

    fn config(&self, n: u64, domain: Domain<T>) -> Result<OperatorConfig<T>> {
        match self.lower_bound {
            Some(a) => OperatorConfig::with_lower_bound(self.kernel.clone(), n, domain, a),
            None => OperatorConfig::new(self.kernel.clone(), n, domain),
        }
    }
}

struct ScaleErrors<T> {
    sup: T,
    modular: T,
    luxemburg: T,
    valid: bool,
}

/// Sup, modular and Luxemburg errors of `K_n f - f` for every scale.
pub fn run_convergence<T: Real>(
    f: &Signal<T>,
    setup: &ConvergenceSetup<T>,
) -> Result<ConvergenceReport<T>> {
    if setup.scales.is_empty() || setup.scales.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "scales must be non-empty and strictly increasing".into(),
        ));
    }
    if !(setup.lambda > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {}",
            setup.lambda
        )));
    }
    let rows: Vec<ScaleErrors<T>> = setup
        .scales
        .par_iter()
        .map(|&n| measure_scale(f, setup, n))
        .collect::<Result<_>>()?;
    let sup_errors: Vec<T> = rows.iter().map(|r| r.sup).collect();
    let modular_errors: Vec<T> = rows.iter().map(|r| r.modular).collect();
    let luxemburg_errors: Vec<T> = rows.iter().map(|r| r.luxemburg).collect();
    Ok(ConvergenceReport {
        signal: f.name().to_string(),
        kernel: setup.kernel.name().to_string(),
        phi: setup.phi.name(),
        domain: f.domain(),
        lambda_used: setup.lambda,
        fitted_rate: FittedRates {
            sup: fitted_rate(&setup.scales, &sup_errors),
            modular: fitted_rate(&setup.scales, &modular_errors),
            luxemburg: fitted_rate(&setup.scales, &luxemburg_errors),
        },
        scales: setup.scales.clone(),
        sup_errors,
        modular_errors,
        luxemburg_errors,
        valid: rows.iter().map(|r| r.valid).collect(),
        grid_points: setup.grid_points,
    })
}

fn measure_scale<T: Real>(
    f: &Signal<T>,
    setup: &ConvergenceSetup<T>,
    n: u64,
) -> Result<ScaleErrors<T>> {
    let config = setup.config(n, f.domain())?;
    let op = Reconstruction::new(&config, f)?;
    let (lo, hi) = error_window(f, &setup.kernel, n)?;
    let (glo, ghi) = match f.support() {
        Some((s0, s1)) if f.domain() == Domain::RealLine => {
            (lo.max(s0 - T::one()), hi.min(s1 + T::one()))
        }
        _ => (lo, hi),
    };
    let grid = sup_grid(glo, ghi, n, setup.grid_points);
    let checked: Vec<(T, bool)> = grid
        .par_iter()
        .map(|&x| op.eval_checked(x))
        .collect::<Result<_>>()?;
    let mut sup = T::zero();
    let mut valid = true;
    for (x, (v, ok)) in grid.iter().zip(&checked) {
        sup = sup.max((*v - f.evaluate(*x)).abs());
        valid &= *ok;
    }
    let err = sample_error(
        |x| Ok(op.eval(x)? - f.evaluate(x)),
        &error_points(f, lo, hi, n),
        &setup.phi,
        setup.lambda,
    )?;
    let modular = err.modular(&setup.phi, setup.lambda).to_real();
    let luxemburg = match err.luxemburg(&setup.phi, setup.luxemburg_tol) {
        Ok(v) => v,
        Err(Error::NotInOrliczSpace) => T::infinity(),
        Err(e) => return Err(e),
    };
    Ok(ScaleErrors {
        sup,
        modular,
        luxemburg,
        valid,
    })
}

/// Outcome of a numerical inequality check.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityCheck<T> {
    pub lhs: T,
    pub rhs: T,
    /// `rhs - lhs`.
    pub slack: T,
    pub passed: bool,
    pub context: String,
}

impl<T: Real> InequalityCheck<T> {
    pub fn new(lhs: T, rhs: T, tol: T, context: impl Into<String>) -> Self {
        let slack = rhs - lhs;
        Self {
            lhs,
            rhs,
            slack,
            passed: slack >= -tol || rhs == T::infinity(),
            context: context.into(),
        }
    }
}

/// Constants of an operator on a domain: `(a_chi, m_0, ||chi||_1)`.
#[derive(Debug, Clone, Copy)]
pub struct OperatorConstants<T> {
    pub a_chi: T,
    pub m0: T,
    pub l1: T,
}

impl<T: Real> OperatorConstants<T> {
    pub fn of(config: &OperatorConfig<T>) -> Result<Self> {
        Ok(Self {
            a_chi: config.a_chi,
            m0: config.kernel.m0()?,
            l1: config.kernel.l1_norm()?,
        })
    }
}

/// `|K_n f - K_n g|` sampled on a rule adapted to `phi(lambda |.|)`.
fn operator_difference<T: Real>(
    config: &OperatorConfig<T>,
    f: &Signal<T>,
    g: &Signal<T>,
    phi: &PhiFunction<T>,
    lambda: T,
) -> Result<SampledFunction<T>> {
    if f.domain() != g.domain() {
        return Err(Error::DomainMismatch);
    }
    let kf = Reconstruction::new(config, f)?;
    let kg = Reconstruction::new(config, g)?;
    let (lo, hi) = match f.domain() {
        Domain::Interval { a, b } => (a, b),
        Domain::RealLine => {
            let (a0, a1) = error_window(f, &config.kernel, config.n)?;
            let (b0, b1) = error_window(g, &config.kernel, config.n)?;
            (a0.min(b0), a1.max(b1))
        }
    };
    let mut pts = error_points(f, lo, hi, config.n);
    pts.extend(
        g.breakpoints()
            .iter()
            .copied()
            .filter(|&t| t > lo && t < hi),
    );
    pts.sort_by(|x, y| x.as_f64().total_cmp(&y.as_f64()));
    pts.dedup();
    sample_error(|x| Ok(kf.eval(x)? - kg.eval(x)?), &pts, phi, lambda)
}

/// `I[lambda (K f - K g)] <= (||chi||_1 / m_0) I[(m_0 / a_chi) 2 lambda (f - g)]`.
pub fn check_modular_inequality<T: Real>(
    f: &Signal<T>,
    g: &Signal<T>,
    config: &OperatorConfig<T>,
    phi: &PhiFunction<T>,
    lambda: T,
    tol: T,
) -> Result<InequalityCheck<T>> {
    let k = OperatorConstants::of(config)?;
    let two = T::one() + T::one();
    let diff = operator_difference(config, f, g, phi, lambda)?;
    let lhs = diff.modular(phi, lambda).to_real();
    let inner = crate::orlicz::Modular::new(*phi)
        .with_options(error_quadrature())
        .eval_scaled(&f.abs_diff(g)?, k.m0 / k.a_chi * two * lambda)?;
    let context = format!(
        "{} vs {}, kernel {}, phi {}, lambda {}, n {}",
        f.name(),
        g.name(),
        config.kernel.name(),
        phi.name(),
        lambda,
        config.n
    );
    Ok(match inner {
        ModularValue::Finite(v) => InequalityCheck::new(lhs, k.l1 / k.m0 * v, tol, context),
        ModularValue::Infinite => InequalityCheck::new(
            lhs,
            T::infinity(),
            tol,
            context + " (rhs infinite, vacuous)",
        ),
    })
}

/// `||K f - K g||_p <= 2 ((m_0^(p-1) ||chi||_1)^(1/p) / a_chi) ||f - g||_p`.
pub fn check_lp_lipschitz<T: Real>(
    f: &Signal<T>,
    g: &Signal<T>,
    config: &OperatorConfig<T>,
    p: T,
    tol: T,
) -> Result<InequalityCheck<T>> {
    let k = OperatorConstants::of(config)?;
    let phi = PhiFunction::power(p)?;
    let diff = operator_difference(config, f, g, &phi, T::one())?;
    let lhs = diff.modular(&phi, T::one()).to_real().powf(p.recip());
    let fg = crate::orlicz::Modular::new(phi)
        .with_options(error_quadrature())
        .eval(&f.abs_diff(g)?)?
        .to_real()
        .powf(p.recip());
    let constant = lp_lipschitz_constant(k, p);
    Ok(InequalityCheck::new(
        lhs,
        constant * fg,
        tol,
        format!(
            "{} vs {}, kernel {}, p {}, n {}",
            f.name(),
            g.name(),
            config.kernel.name(),
            p,
            config.n
        ),
    ))
}

/// `2 (m_0^(p-1) ||chi||_1)^(1/p) / a_chi`.
pub fn lp_lipschitz_constant<T: Real>(k: OperatorConstants<T>, p: T) -> T {
    let two = T::one() + T::one();
    two * (k.m0.powf(p - T::one()) * k.l1).powf(p.recip()) / k.a_chi
}

/// `int |Kf - Kg| log(lambda |Kf - Kg| + e)
///    <= (2 ||chi||_1 / a_chi) int |f - g| log((m_0 / a_chi) 2 lambda |f - g| + e)`.
pub fn check_zygmund_inequality<T: Real>(
    f: &Signal<T>,
    g: &Signal<T>,
    config: &OperatorConfig<T>,
    lambda: T,
    tol: T,
) -> Result<InequalityCheck<T>> {
    let k = OperatorConstants::of(config)?;
    let phi = PhiFunction::zygmund(T::one(), T::one())?;
    let two = T::one() + T::one();
    let diff = operator_difference(config, f, g, &phi, lambda)?;
    let lhs = diff.modular(&phi, lambda).to_real() / lambda;
    let s = k.m0 / k.a_chi * two * lambda;
    let rhs_integral = crate::orlicz::Modular::new(phi)
        .with_options(error_quadrature())
        .eval_scaled(&f.abs_diff(g)?, s)?
        .to_real()
        / s;
    Ok(InequalityCheck::new(
        lhs,
        two * k.l1 / k.a_chi * rhs_integral,
        tol,
        format!(
            "{} vs {}, kernel {}, lambda {}, n {}",
            f.name(),
            g.name(),
            config.kernel.name(),
            lambda,
            config.n
        ),
    ))
}

/// The modular inequality for `exp(u^gamma) - 1`.
pub fn check_exponential_inequality<T: Real>(
    f: &Signal<T>,
    g: &Signal<T>,
    config: &OperatorConfig<T>,
    gamma: T,
    lambda: T,
    tol: T,
) -> Result<InequalityCheck<T>> {
    check_modular_inequality(f, g, config, &PhiFunction::exponential(gamma)?, lambda, tol)
}

/// `||K_n f - f||_inf <= ((2 m_0 + m_1) / a_chi) omega(f, 1/n)` on the sup grid.
pub fn check_jackson<T: Real>(
    f: &Signal<T>,
    config: &OperatorConfig<T>,
    tol: T,
) -> Result<InequalityCheck<T>> {
    let m0 = config.kernel.m0()?;
    let m1 = match moment(&config.kernel, T::one(), lit(1e-8))? {
        Moment::Finite(v) => v,
        Moment::Diverges => {
            return Err(Error::DivergentMoment {
                kernel: config.kernel.name().to_string(),
                beta: 1.0,
            })
        }
    };
    let n = config.n;
    let op = Reconstruction::new(config, f)?;
    let (lo, hi) = error_window(f, &config.kernel, n)?;
    let (lo, hi) = match f.support() {
        Some((s0, s1)) if f.domain() == Domain::RealLine => {
            (lo.max(s0 - T::one()), hi.min(s1 + T::one()))
        }
        _ => (lo, hi),
    };
    let grid = sup_grid(lo, hi, n, DEFAULT_GRID_POINTS);
    let values: Vec<T> = grid
        .par_iter()
        .map(|&x| op.eval(x))
        .collect::<Result<_>>()?;
    let lhs = grid
        .iter()
        .zip(&values)
        .fold(T::zero(), |m, (x, v)| m.max((*v - f.evaluate(*x)).abs()));
    let omega = modulus_of_continuity(f, T::one() / config.scale(), 64)?;
    let two = T::one() + T::one();
    let rhs = (two * m0 + m1) / config.a_chi * omega;
    Ok(InequalityCheck::new(
        lhs,
        rhs,
        tol,
        format!(
            "{}, kernel {}, n {}, omega {}",
            f.name(),
            config.kernel.name(),
            n,
            omega
        ),
    ))
}

/// One row of the linear versus max-product comparison.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow<T> {
    pub n: u64,
    pub linear_sup_error: T,
    pub maxprod_sup_error: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison<T> {
    pub rows: Vec<ComparisonRow<T>>,
    pub linear_rate: Option<T>,
    pub maxprod_rate: Option<T>,
}

/// Sup errors of the linear and the max-product operator side by side.
pub fn compare_linear_vs_maxprod<T: Real>(
    f: &Signal<T>,
    kernel: &Kernel<T>,
    scales: &[u64],
) -> Result<Comparison<T>> {
    let rows: Vec<ComparisonRow<T>> = scales
        .par_iter()
        .map(|&n| {
            let config = OperatorConfig::new(kernel.clone(), n, f.domain())?;
            let op = Reconstruction::new(&config, f)?;
            let lin = LinearKantorovich::new(kernel.clone(), config.scale(), f)?;
            let (lo, hi) = error_window(f, kernel, n)?;
            let (lo, hi) = match f.support() {
                Some((s0, s1)) if f.domain() == Domain::RealLine => {
                    (lo.max(s0 - T::one()), hi.min(s1 + T::one()))
                }
                _ => (lo, hi),
            };
            let grid = sup_grid(lo, hi, n, DEFAULT_GRID_POINTS);
            let mut e_lin = T::zero();
            let mut e_max = T::zero();
            for &x in &grid {
                let fx = f.evaluate(x);
                e_lin = e_lin.max((lin.eval(x)? - fx).abs());
                e_max = e_max.max((op.eval(x)? - fx).abs());
            }
            Ok(ComparisonRow {
                n,
                linear_sup_error: e_lin,
                maxprod_sup_error: e_max,
            })
        })
        .collect::<Result<_>>()?;
    let lin: Vec<T> = rows.iter().map(|r| r.linear_sup_error).collect();
    let max: Vec<T> = rows.iter().map(|r| r.maxprod_sup_error).collect();
    Ok(Comparison {
        linear_rate: fitted_rate(scales, &lin),
        maxprod_rate: fitted_rate(scales, &max),
        rows,
    })
}

/// Largest `lambda` in `lambda_grid` (scanned in decreasing order) whose
/// modular error sequence is non-increasing over `scales` (up to the rate noise floor) and ends below
/// [`LAMBDA_THRESHOLD`]. `None` when no grid value qualifies.
pub fn find_modular_lambda<T: Real>(
    f: &Signal<T>,
    kernel: &Kernel<T>,
    phi: &PhiFunction<T>,
    scales: &[u64],
    lambda_grid: &[T],
) -> Result<Option<T>> {
    let mut grid = lambda_grid.to_vec();
    grid.sort_by(|a, b| b.as_f64().total_cmp(&a.as_f64()));
    grid.dedup();
    let Some(&top) = grid.first() else {
        return Ok(None);
    };
    let errors: Vec<SampledFunction<T>> = scales
        .par_iter()
        .map(|&n| {
            let config = OperatorConfig::new(kernel.clone(), n, f.domain())?;
            let op = Reconstruction::new(&config, f)?;
            let (lo, hi) = error_window(f, kernel, n)?;
            sample_error(
                |x| Ok(op.eval(x)? - f.evaluate(x)),
                &error_points(f, lo, hi, n),
                phi,
                top,
            )
        })
        .collect::<Result<_>>()?;
    let threshold: T = lit(LAMBDA_THRESHOLD);
    for lambda in grid {
        let seq: Vec<T> = errors
            .iter()
            .map(|e| e.modular(phi, lambda).to_real())
            .collect();
        let noise: T = lit(RATE_NOISE_FLOOR);
        let decreasing = seq.windows(2).all(|w| w[1] <= w[0] + noise);
        if decreasing && seq.last().map(|v| *v < threshold).unwrap_or(false) {
            return Ok(Some(lambda));
        }
    }
    Ok(None)
}

/// Seeded randomized verification campaign.
#[derive(Debug, Clone)]
pub struct CampaignConfig<T> {
    pub seed: u64,
    pub draws: usize,
    pub tol: f64,
    pub kernels: Vec<Kernel<T>>,
    pub scales: Vec<u64>,
}

impl<T: Real> CampaignConfig<T> {
    pub fn new(seed: u64, draws: usize) -> Self {
        Self {
            seed,
            draws,
            tol: 1e-8,
            kernels: vec![Kernel::fejer(), Kernel::bspline(4).expect("order 4")],
            scales: vec![16, 32],
        }
    }
}

/// Pass/fail counts for one inequality family.
#[derive(Debug, Clone, Serialize)]
pub struct FamilySummary {
    pub family: String,
    pub passed: usize,
    pub failed: usize,
    /// Smallest `rhs - lhs` seen (finite checks only).
    pub worst_slack: Option<f64>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignSummary {
    pub seed: u64,
    pub draws: usize,
    pub families: Vec<FamilySummary>,
}

impl CampaignSummary {
    pub fn all_passed(&self) -> bool {
        self.families.iter().all(|f| f.failed == 0)
    }
}

pub const FAMILIES: [&str; 6] = [
    "modular-inequality",
    "lp-lipschitz",
    "zygmund-inequality",
    "exponential-inequality",
    "operator-algebra",
    "max-phi",
];

/// Everything a single draw of the campaign needs.
#[derive(Debug, Clone)]
pub struct Draw<T> {
    pub f: Signal<T>,
    pub g: Signal<T>,
    pub kernel: Kernel<T>,
    pub n: u64,
    pub lambda: T,
    pub rng: ChaCha8Rng,
}

/// The `index`-th draw of a campaign; independent of every other draw.
pub fn campaign_draw<T: Real>(config: &CampaignConfig<T>, index: usize) -> Draw<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let f = Signal::random_piecewise(&mut rng).with_name(format!("f{index}"));
    let g = Signal::random_piecewise(&mut rng).with_name(format!("g{index}"));
    let kernel = config.kernels[rng.gen_range(0..config.kernels.len())].clone();
    let n = config.scales[rng.gen_range(0..config.scales.len())];
    let lambda = lit(rng.gen_range(0.1..1.0));
    Draw {
        f,
        g,
        kernel,
        n,
        lambda,
        rng,
    }
}

fn modular_phis<T: Real>() -> [PhiFunction<T>; 4] {
    [
        PhiFunction::power(T::one()).unwrap(),
        PhiFunction::power(lit(2.0)).unwrap(),
        PhiFunction::zygmund(T::one(), T::one()).unwrap(),
        PhiFunction::exponential(T::one()).unwrap(),
    ]
}

/// Monotonicity, sub-additivity, the difference bound and positive
/// homogeneity at random points; returns the largest violation.
pub fn operator_algebra_violation<T: Real>(draw: &mut Draw<T>, points: usize) -> Result<T> {
    let domain = draw.f.domain();
    let config = OperatorConfig::new(draw.kernel.clone(), draw.n, domain)?;
    let f = &draw.f;
    let h = Signal::random_piecewise(&mut draw.rng);
    let g_above = f.add(&h)?;
    let sum = f.add(&draw.g)?;
    let diff = f.abs_diff(&draw.g)?;
    let lambdas: [T; 4] = [T::zero(), lit(0.5), lit(2.0), lit(10.0)];
    let build = |s: &Signal<T>| KantorovichOperator::new(config.clone(), s);
    let (kf, kg, kh, ks, kd) = (
        build(f)?,
        build(&draw.g)?,
        build(&g_above)?,
        build(&sum)?,
        build(&diff)?,
    );
    let scaled: Vec<KantorovichOperator<T>> = lambdas
        .iter()
        .map(|&l| build(&f.scale(l)))
        .collect::<Result<_>>()?;
    let mut worst = T::zero();
    for _ in 0..points {
        let x: T = lit(draw.rng.gen_range(0.0..1.0));
        let (vf, vg) = (kf.eval(x)?, kg.eval(x)?);
        worst = worst.max(vf - kh.eval(x)?);
        worst = worst.max(ks.eval(x)? - vf - vg);
        worst = worst.max((vf - vg).abs() - kd.eval(x)?);
        for (l, op) in lambdas.iter().zip(&scaled) {
            let expect = *l * vf;
            let got = op.eval(x)?;
            worst = worst.max((got - expect).abs() - lit::<T>(1e-12) * expect.abs());
        }
    }
    Ok(worst)
}

/// Runs every family for `config.draws` seeded draws on [0, 1].
pub fn run_campaign<T: Real>(config: &CampaignConfig<T>) -> Result<CampaignSummary> {
    for k in &config.kernels {
        let a = k.lower_bound(crate::kernels::DomainKind::BoundedInterval);
        if !(a.as_f64() > crate::kernels::ADMISSIBILITY_FLOOR) {
            return Err(Error::InadmissibleKernel {
                kernel: k.name().to_string(),
                a_chi: a.as_f64(),
            });
        }
    }
    if config.draws == 0 {
        return Ok(CampaignSummary {
            seed: config.seed,
            draws: 0,
            families: Vec::new(),
        });
    }
    let tol: T = lit(config.tol);
    let per_draw: Vec<Vec<(f64, bool, String)>> = (0..config.draws)
        .into_par_iter()
        .map(|i| -> Result<Vec<(f64, bool, String)>> {
            let mut d = campaign_draw(config, i);
            let op_config = OperatorConfig::new(d.kernel.clone(), d.n, d.f.domain())?;
            let phis = modular_phis::<T>();
            let phi = phis[i % phis.len()];
            let p: T = lit([1.0, 2.0, 3.0][i % 3]);
            let as_row = |c: InequalityCheck<T>| (c.slack.as_f64(), c.passed, c.context);
            let mut row = vec![
                as_row(check_modular_inequality(
                    &d.f, &d.g, &op_config, &phi, d.lambda, tol,
                )?),
                as_row(check_lp_lipschitz(&d.f, &d.g, &op_config, p, tol)?),
                as_row(check_zygmund_inequality(
                    &d.f, &d.g, &op_config, d.lambda, tol,
                )?),
                as_row(check_exponential_inequality(
                    &d.f,
                    &d.g,
                    &op_config,
                    T::one(),
                    d.lambda,
                    tol,
                )?),
            ];
            let v = operator_algebra_violation(&mut d, 8)?;
            row.push((
                -v.as_f64(),
                v.as_f64() <= 1e-12,
                format!("algebra draw {i}"),
            ));
            let values: Vec<T> = (0..d.rng.gen_range(1..20))
                .map(|_| lit(d.rng.gen_range(0.0..3.0)))
                .collect();
            let (ineq, eq) = maxphi_inequality_check(&phis[i % 4], &values);
            row.push((0.0, ineq && eq, format!("max-phi draw {i}")));
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let families = FAMILIES
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let mut s = FamilySummary {
                family: name.to_string(),
                passed: 0,
                failed: 0,
                worst_slack: None,
                failures: Vec::new(),
            };
            for row in &per_draw {
                let (slack, ok, ctx) = &row[j];
                if *ok {
                    s.passed += 1;
                } else {
                    s.failed += 1;
                    s.failures.push(ctx.clone());
                }
                if slack.is_finite() {
                    s.worst_slack = Some(s.worst_slack.map_or(*slack, |w: f64| w.min(*slack)));
                }
            }
            s
        })
        .collect();
    Ok(CampaignSummary {
        seed: config.seed,
        draws: config.draws,
        families,
    })
}
