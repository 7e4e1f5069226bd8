//! Max-product Kantorovich operators, their linear counterpart and the
//! bounded-below shift wrapper.
//!
//! Lattice suprema are walked outward from `k0 = round(nx)` in both
//! directions. A direction is abandoned once the kernel envelope proves that
//! no remaining term can raise either running maximum, so on bounded domains
//! and for compactly supported signals the result is the exact maximum. On
//! the real line a direction is also abandoned when the remaining numerator
//! terms are below `truncation_tol` times the running denominator.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{Kernel, ADMISSIBILITY_FLOOR};
use crate::scalar::{lit, Real};
use crate::signals::{
    mean_values, mean_values_scaled, Domain, MeanValueTable, Signal, CELL_QUADRATURE_ORDER,
};

/// Default relative truncation tolerance for real-line suprema.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-12;
/// Slack used when comparing the denominator with `a_chi`.
pub const DENOMINATOR_SLACK: f64 = 1e-9;
/// Hard cap on lattice terms visited per direction.
const MAX_TERMS: i64 = 1 << 24;

/// How kernel values enter the numerator supremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NumeratorMode {
    /// `chi(nx - k) * m_k`, as written in the operator's definition.
    #[default]
    Signed,
    /// `|chi(nx - k)| * m_k`.
    Absolute,
}

/// Scale, domain, kernel and truncation policy of an operator.
#[derive(Debug, Clone)]
pub struct OperatorConfig<T> {
    pub kernel: Kernel<T>,
    pub n: u64,
    pub domain: Domain<T>,
    pub truncation_tol: T,
    pub a_chi: T,
    pub numerator_mode: NumeratorMode,
    /// `a_chi` was supplied by the caller rather than computed.
    pub assumed_lower_bound: bool,
}

impl<T: Real> OperatorConfig<T> {
    /// Computes `a_chi` for the domain kind and rejects inadmissible kernels
    /// and empty index sets.
    pub fn new(kernel: Kernel<T>, n: u64, domain: Domain<T>) -> Result<Self> {
        let a_chi = kernel.lower_bound(domain.kind());
        if !(a_chi.as_f64() > ADMISSIBILITY_FLOOR) {
            return Err(Error::InadmissibleKernel {
                kernel: kernel.name().to_string(),
                a_chi: a_chi.as_f64(),
            });
        }
        Self::build(kernel, n, domain, a_chi, false)
    }

    /// Uses a caller-supplied lower bound for `sup_k chi(nx - k)` instead of
    /// the interval infimum. Evaluations still report when the computed
    /// denominator falls below it.
    pub fn with_lower_bound(
        kernel: Kernel<T>,
        n: u64,
        domain: Domain<T>,
        a_chi: T,
    ) -> Result<Self> {
        if !(a_chi > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "lower bound must be positive, got {a_chi}"
            )));
        }
        Self::build(kernel, n, domain, a_chi, true)
    }

    fn build(
        kernel: Kernel<T>,
        n: u64,
        domain: Domain<T>,
        a_chi: T,
        assumed: bool,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("scale n must be positive".into()));
        }
        if let Domain::Interval { a, b } = domain {
            let scale = T::from_u64(n).unwrap();
            if crate::signals::index_set(scale, a, b).is_none() {
                return Err(Error::EmptyIndexSet {
                    n,
                    a: a.as_f64(),
                    b: b.as_f64(),
                });
            }
        }
        if matches!(domain, Domain::RealLine) && !kernel.is_truncatable() {
            return Err(Error::MissingDecayInfo {
                kernel: kernel.name().to_string(),
            });
        }
        Ok(Self {
            kernel,
            n,
            domain,
            truncation_tol: lit(DEFAULT_TRUNCATION_TOL),
            a_chi,
            numerator_mode: NumeratorMode::Signed,
            assumed_lower_bound: assumed,
        })
    }

    pub fn truncation_tol(mut self, tol: T) -> Self {
        self.truncation_tol = tol;
        self
    }

    pub fn numerator_mode(mut self, mode: NumeratorMode) -> Self {
        self.numerator_mode = mode;
        self
    }

    /// Same kernel and policy at another scale.
    pub fn at_scale(&self, n: u64) -> Result<Self> {
        let mut c = Self::build(
            self.kernel.clone(),
            n,
            self.domain,
            self.a_chi,
            self.assumed_lower_bound,
        )?;
        c.truncation_tol = self.truncation_tol;
        c.numerator_mode = self.numerator_mode;
        Ok(c)
    }

    pub fn scale(&self) -> T {
        T::from_u64(self.n).unwrap()
    }
}

/// One operator evaluation with its two suprema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation<T> {
    pub value: T,
    pub numerator: T,
    pub denominator: T,
    /// Denominator fell below `a_chi` (beyond a 1e-9 slack).
    pub below_lower_bound: bool,
    /// Lattice terms visited.
    pub terms: usize,
}

/// `K_n f` bound to a precomputed mean-value table.
#[derive(Debug, Clone)]
pub struct KantorovichOperator<T> {
    config: OperatorConfig<T>,
    table: Arc<MeanValueTable<T>>,
    max_abs_mean: T,
}

impl<T: Real> KantorovichOperator<T> {
    /// Builds the operator for a non-negative signal on the config's domain.
    pub fn new(config: OperatorConfig<T>, f: &Signal<T>) -> Result<Self> {
        if !f.is_nonneg() {
            return Err(Error::NegativeSignal {
                signal: f.name().to_string(),
            });
        }
        if f.domain() != config.domain {
            return Err(Error::DomainMismatch);
        }
        let table = mean_values(f, config.n)?;
        Ok(Self::from_table(config, table))
    }

    /// Uses an existing table; the caller is responsible for its sign.
    pub fn from_table(config: OperatorConfig<T>, table: MeanValueTable<T>) -> Self {
        let max_abs_mean = table
            .values
            .iter()
            .fold(table.background.abs(), |m, v| m.max(v.abs()));
        Self {
            config,
            table: Arc::new(table),
            max_abs_mean,
        }
    }

    pub fn config(&self) -> &OperatorConfig<T> {
        &self.config
    }

    pub fn table(&self) -> &MeanValueTable<T> {
        &self.table
    }

    pub fn eval(&self, x: T) -> Result<T> {
        Ok(self.eval_detailed(x)?.value)
    }

    pub fn eval_detailed(&self, x: T) -> Result<Evaluation<T>> {
        if !self.config.domain.contains(x) {
            return Err(Error::OutsideDomain { x: x.as_f64() });
        }
        let cfg = &self.config;
        let kernel = &cfg.kernel;
        let table = &*self.table;
        let u = cfg.scale() * x;
        let m_abs = self.max_abs_mean;
        let absolute = cfg.numerator_mode == NumeratorMode::Absolute;

        let (range, bounded) = match cfg.domain {
            Domain::Interval { .. } => (Some(table.index_range()), true),
            Domain::RealLine => (None, false),
        };
        // On the real line chi(u - k) m_k -> 0 as |k| -> inf, so both suprema are >= 0.
        let (mut num, mut den) = if bounded {
            (T::neg_infinity(), T::neg_infinity())
        } else {
            (T::zero(), T::zero())
        };
        let k0 = u.round().to_i64().unwrap_or(0);
        let k0 = match range {
            Some((lo, hi)) => k0.clamp(lo, hi),
            None => k0,
        };
        let mut terms = 0usize;
        let mut visit = |k: i64, num: &mut T, den: &mut T| {
            let c = kernel.evaluate(u - T::from_index(k));
            let w = if absolute { c.abs() } else { c };
            *num = num.max(w * table.get(k));
            *den = den.max(c);
            terms += 1;
        };
        visit(k0, &mut num, &mut den);
        for dir in [-1i64, 1] {
            let mut k = k0 + dir;
            for _ in 0..MAX_TERMS {
                if let Some((lo, hi)) = range {
                    if k < lo || k > hi {
                        break;
                    }
                }
                let env = kernel.envelope((u - T::from_index(k)).abs());
                // every remaining k in this direction lies past the stored cells
                let beyond_table = (dir < 0 && k < table.first) || (dir > 0 && k > table.last());
                let num_bound = if beyond_table {
                    env * table.background.abs()
                } else {
                    env * m_abs
                };
                if env <= den && num_bound <= num {
                    break;
                }
                if !bounded && env <= den && num_bound <= cfg.truncation_tol * den {
                    break;
                }
                visit(k, &mut num, &mut den);
                k += dir;
            }
        }
        if !(den > T::zero()) {
            return Err(Error::DegenerateDenominator {
                x: x.as_f64(),
                value: den.as_f64(),
            });
        }
        Ok(Evaluation {
            value: num / den,
            numerator: num,
            denominator: den,
            below_lower_bound: den < cfg.a_chi - lit(DENOMINATOR_SLACK),
            terms,
        })
    }

    /// Evaluates on a grid in parallel; output order follows the grid.
    pub fn eval_grid(&self, grid: &[T]) -> Result<Vec<T>> {
        grid.par_iter().map(|&x| self.eval(x)).collect()
    }

    /// `(sup |f| / a_chi) * m_0`, computed from the table's largest mean.
    pub fn sup_bound(&self) -> Result<T> {
        Ok(self.max_abs_mean / self.config.a_chi * self.config.kernel.m0()?)
    }
}

/// `K_n f (x)`.
pub fn maxprod_kantorovich<T: Real>(config: &OperatorConfig<T>, f: &Signal<T>, x: T) -> Result<T> {
    KantorovichOperator::new(config.clone(), f)?.eval(x)
}

/// `K_n f` on a grid; the mean-value table is computed once.
pub fn maxprod_kantorovich_grid<T: Real>(
    config: &OperatorConfig<T>,
    f: &Signal<T>,
    grid: &[T],
) -> Result<Vec<T>> {
    KantorovichOperator::new(config.clone(), f)?.eval_grid(grid)
}

/// `x -> K_n(f - c)(x) + c` for `f` bounded below by `c`.
#[derive(Debug, Clone)]
pub struct ShiftedOperator<T> {
    inner: KantorovichOperator<T>,
    shift: T,
}

impl<T: Real> ShiftedOperator<T> {
    pub fn shift(&self) -> T {
        self.shift
    }

    pub fn inner(&self) -> &KantorovichOperator<T> {
        &self.inner
    }

    pub fn eval(&self, x: T) -> Result<T> {
        Ok(self.inner.eval(x)? + self.shift)
    }

    pub fn eval_grid(&self, grid: &[T]) -> Result<Vec<T>> {
        Ok(self
            .inner
            .eval_grid(grid)?
            .into_iter()
            .map(|v| v + self.shift)
            .collect())
    }
}

/// Shift wrapper using the signal's declared infimum.
pub fn shift_wrapper<T: Real>(
    config: &OperatorConfig<T>,
    f: &Signal<T>,
) -> Result<ShiftedOperator<T>> {
    let c = f.inf_value().ok_or_else(|| Error::UnknownLowerBound {
        signal: f.name().to_string(),
    })?;
    shift_wrapper_with(config, f, c)
}

/// Shift wrapper with an explicit lower bound `c <= inf f`.
pub fn shift_wrapper_with<T: Real>(
    config: &OperatorConfig<T>,
    f: &Signal<T>,
    c: T,
) -> Result<ShiftedOperator<T>> {
    if f.domain() != config.domain {
        return Err(Error::DomainMismatch);
    }
    let table = mean_values(f, config.n)?.shifted(c);
    Ok(ShiftedOperator {
        inner: KantorovichOperator::from_table(config.clone(), table),
        shift: c,
    })
}

/// Linear Kantorovich operator `S_w f(x) = sum_k chi(wx - k) m_k`.
#[derive(Debug, Clone)]
pub struct LinearKantorovich<T> {
    kernel: Kernel<T>,
    table: MeanValueTable<T>,
    tol: T,
}

impl<T: Real> LinearKantorovich<T> {
    pub fn new(kernel: Kernel<T>, w: T, f: &Signal<T>) -> Result<Self> {
        if !(w > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "scale must be positive, got {w}"
            )));
        }
        let table = mean_values_scaled(f, w, CELL_QUADRATURE_ORDER)?;
        Ok(Self {
            kernel,
            table,
            tol: lit(1e-12),
        })
    }

    pub fn eval(&self, x: T) -> Result<T> {
        let u = self.table.scale * x;
        let (lo, hi) = self.table.index_range();
        let mut sum: T = (lo..=hi)
            .map(|k| self.kernel.evaluate(u - T::from_index(k)) * self.table.get(k))
            .sum();
        let b = self.table.background;
        if b == T::zero() || self.table.domain_kind == crate::kernels::DomainKind::BoundedInterval {
            return Ok(sum);
        }
        // background beyond the table: sum chi over the remaining lattice
        let tail_radius = match (
            self.kernel.support(),
            self.kernel.decay_order(),
            self.kernel.decay_constant(),
        ) {
            (Some(s), _, _) => s + T::one(),
            (None, Some(alpha), Some(c)) if alpha > T::one() => {
                // sum_{d > R} C d^-alpha <= C R^(1-alpha) / (alpha - 1) per side
                let target = self.tol / (lit::<T>(2.0) * b.abs());
                (c / ((alpha - T::one()) * target)).powf((alpha - T::one()).recip())
            }
            _ => {
                return Err(Error::NonConvergentSeries(format!(
                    "kernel `{}` has no summable tail",
                    self.kernel.name()
                )))
            }
        };
        let reach = tail_radius
            .ceil()
            .to_i64()
            .unwrap_or(i64::MAX)
            .min(MAX_TERMS);
        let k0 = u.round().to_i64().unwrap_or(0);
        for k in (k0 - reach..lo).chain(hi + 1..=k0 + reach) {
            sum = sum + self.kernel.evaluate(u - T::from_index(k)) * b;
        }
        Ok(sum)
    }

    pub fn eval_grid(&self, grid: &[T]) -> Result<Vec<T>> {
        grid.par_iter().map(|&x| self.eval(x)).collect()
    }
}

/// `S_w f (x)`.
pub fn linear_kantorovich<T: Real>(kernel: &Kernel<T>, w: T, f: &Signal<T>, x: T) -> Result<T> {
    LinearKantorovich::new(kernel.clone(), w, f)?.eval(x)
}
