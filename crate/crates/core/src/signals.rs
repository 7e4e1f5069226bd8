//! Signals: the functions the operators reconstruct.
//!
//! A [`Signal`] couples an evaluatable function with the metadata the rest of
//! the crate relies on: its domain, an optional compact support (real-line
//! signals), the sorted list of discontinuities (quadrature splits there),
//! non-negativity, and known bounds.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::DomainKind;
use crate::quadrature::GaussLegendre;
use crate::scalar::{lit, Real};

/// Default number of Gauss–Legendre nodes per cell segment.
pub const CELL_QUADRATURE_ORDER: usize = 16;

/// Domain Omega of a signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain<T> {
    Interval { a: T, b: T },
    RealLine,
}

impl<T: Real> Domain<T> {
    pub fn interval(a: T, b: T) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "invalid interval [{a}, {b}]"
            )));
        }
        Ok(Domain::Interval { a, b })
    }

    pub fn unit() -> Self {
        Domain::Interval {
            a: T::zero(),
            b: T::one(),
        }
    }

    pub fn kind(&self) -> DomainKind {
        match self {
            Domain::Interval { .. } => DomainKind::BoundedInterval,
            Domain::RealLine => DomainKind::RealLine,
        }
    }

    pub fn contains(&self, x: T) -> bool {
        match *self {
            Domain::Interval { a, b } => x >= a && x <= b,
            Domain::RealLine => x.is_finite(),
        }
    }

    pub fn bounds(&self) -> Option<(T, T)> {
        match *self {
            Domain::Interval { a, b } => Some((a, b)),
            Domain::RealLine => None,
        }
    }
}

/// Piecewise polynomial in Bernstein form, one coefficient vector per piece.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolynomial<T> {
    knots: Vec<T>,
    coeffs: Vec<Vec<T>>,
}

impl<T: Real> PiecewisePolynomial<T> {
    pub fn new(knots: Vec<T>, coeffs: Vec<Vec<T>>) -> Result<Self> {
        if knots.len() < 2 || coeffs.len() + 1 != knots.len() {
            return Err(Error::InvalidParameter(
                "need one coefficient vector per knot interval".into(),
            ));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "knots must be strictly increasing".into(),
            ));
        }
        if coeffs.iter().any(|c| c.is_empty()) {
            return Err(Error::InvalidParameter("empty coefficient vector".into()));
        }
        Ok(Self { knots, coeffs })
    }

    /// Random non-negative instance on `[a, b]`: up to `max_breaks` interior
    /// knots, each piece a Bernstein polynomial of degree <= `max_degree` with
    /// coefficients drawn from `[0, 1)`.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        a: T,
        b: T,
        max_breaks: usize,
        max_degree: usize,
    ) -> Self {
        let breaks = rng.gen_range(0..=max_breaks);
        let mut interior: Vec<f64> = (0..breaks).map(|_| rng.gen_range(0.05..0.95)).collect();
        interior.sort_by(f64::total_cmp);
        interior.dedup_by(|x, y| (*x - *y).abs() < 1e-3);
        let mut knots = vec![a];
        knots.extend(interior.iter().map(|&t| a + (b - a) * lit(t)));
        knots.push(b);
        let coeffs = (0..knots.len() - 1)
            .map(|_| {
                let degree = rng.gen_range(0..=max_degree);
                (0..=degree).map(|_| lit(rng.gen_range(0.0..1.0))).collect()
            })
            .collect();
        Self { knots, coeffs }
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn evaluate(&self, t: T) -> T {
        let last = self.coeffs.len() - 1;
        let piece = match self.knots[1..last + 1].iter().position(|&k| t < k) {
            Some(i) => i,
            None => last,
        };
        let (lo, hi) = (self.knots[piece], self.knots[piece + 1]);
        let s = (t - lo) / (hi - lo);
        de_casteljau(&self.coeffs[piece], s)
    }

    /// Convex-hull bound: `sup |p| <= max |coefficient|`.
    pub fn abs_bound(&self) -> T {
        self.coeffs
            .iter()
            .flatten()
            .fold(T::zero(), |m, c| m.max(c.abs()))
    }

    pub fn is_nonneg(&self) -> bool {
        self.coeffs.iter().flatten().all(|c| *c >= T::zero())
    }
}

fn de_casteljau<T: Real>(coeffs: &[T], s: T) -> T {
    let mut work: Vec<T> = coeffs.to_vec();
    let n = work.len();
    for r in 1..n {
        for i in 0..n - r {
            work[i] = work[i] * (T::one() - s) + work[i + 1] * s;
        }
    }
    work[0]
}

type SignalFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

enum Body<T> {
    Constant(T),
    Ramp,
    Step { low: T, high: T, at: T },
    Sawtooth { teeth: u32 },
    AbsSine { frequency: T },
    Hat,
    SquarePulse { half_width: T, height: T },
    Piecewise(PiecewisePolynomial<T>),
    Linear { ts: Vec<T>, ys: Vec<T> },
    Func(SignalFn<T>),
}

/// Optional metadata for closure-backed signals.
#[derive(Debug, Clone, Default)]
pub struct SignalMeta<T> {
    pub support: Option<(T, T)>,
    pub breakpoints: Vec<T>,
    pub nonneg: bool,
    pub inf_value: Option<T>,
    pub abs_bound: Option<T>,
}

type MergedMeta<T> = (Vec<T>, Option<(T, T)>);

/// A bounded function on a domain together with its metadata.
#[derive(Clone)]
pub struct Signal<T> {
    name: String,
    domain: Domain<T>,
    support: Option<(T, T)>,
    breakpoints: Vec<T>,
    nonneg: bool,
    inf_value: Option<T>,
    abs_bound: Option<T>,
    body: Arc<Body<T>>,
}

impl<T: fmt::Debug> fmt::Debug for Signal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Signal")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("support", &self.support)
            .field("breakpoints", &self.breakpoints)
            .field("nonneg", &self.nonneg)
            .field("inf_value", &self.inf_value)
            .finish()
    }
}

impl<T: Real> Signal<T> {
    fn build(name: String, domain: Domain<T>, body: Body<T>, meta: SignalMeta<T>) -> Self {
        let mut breakpoints = meta.breakpoints;
        breakpoints.retain(|&t| match domain {
            Domain::Interval { a, b } => t > a && t < b,
            Domain::RealLine => t.is_finite(),
        });
        breakpoints.sort_by(|x, y| x.as_f64().total_cmp(&y.as_f64()));
        breakpoints.dedup();
        Self {
            name,
            domain,
            support: meta.support,
            breakpoints,
            nonneg: meta.nonneg,
            inf_value: meta.inf_value,
            abs_bound: meta.abs_bound,
            body: Arc::new(body),
        }
    }

    /// `f = c` on [0, 1].
    pub fn constant(c: T) -> Self {
        Self::build(
            format!("constant:{c}"),
            Domain::unit(),
            Body::Constant(c),
            SignalMeta {
                nonneg: c >= T::zero(),
                inf_value: Some(c),
                abs_bound: Some(c.abs()),
                ..Default::default()
            },
        )
    }

    /// `f(x) = x` on [0, 1].
    pub fn ramp() -> Self {
        Self::build(
            "ramp".into(),
            Domain::unit(),
            Body::Ramp,
            SignalMeta {
                nonneg: true,
                inf_value: Some(T::zero()),
                abs_bound: Some(T::one()),
                ..Default::default()
            },
        )
    }

    /// Jump from `low` to `high` at `at`, on [0, 1].
    pub fn step(low: T, high: T, at: T) -> Self {
        Self::build(
            "step".into(),
            Domain::unit(),
            Body::Step { low, high, at },
            SignalMeta {
                breakpoints: vec![at],
                nonneg: low >= T::zero() && high >= T::zero(),
                inf_value: Some(low.min(high)),
                abs_bound: Some(low.abs().max(high.abs())),
                ..Default::default()
            },
        )
    }

    /// `frac(teeth * x)` on [0, 1].
    pub fn sawtooth(teeth: u32) -> Self {
        let teeth = teeth.max(1);
        let breaks = (1..teeth)
            .map(|j| T::from_u32(j).unwrap() / T::from_u32(teeth).unwrap())
            .collect();
        Self::build(
            "sawtooth".into(),
            Domain::unit(),
            Body::Sawtooth { teeth },
            SignalMeta {
                breakpoints: breaks,
                nonneg: true,
                inf_value: Some(T::zero()),
                abs_bound: Some(T::one()),
                ..Default::default()
            },
        )
    }

    /// `|sin(2 pi frequency x)|` on [0, 1].
    pub fn abs_sine(frequency: T) -> Self {
        Self::build(
            "abs-sine".into(),
            Domain::unit(),
            Body::AbsSine { frequency },
            SignalMeta {
                nonneg: true,
                inf_value: Some(T::zero()),
                abs_bound: Some(T::one()),
                ..Default::default()
            },
        )
    }

    /// `max(0, 1 - |x|)` on the real line.
    pub fn hat() -> Self {
        Self::build(
            "hat".into(),
            Domain::RealLine,
            Body::Hat,
            SignalMeta {
                support: Some((-T::one(), T::one())),
                nonneg: true,
                inf_value: Some(T::zero()),
                abs_bound: Some(T::one()),
                ..Default::default()
            },
        )
    }

    /// Indicator of `(-1/2, 1/2)` on the real line.
    pub fn square_pulse() -> Self {
        let h: T = lit(0.5);
        Self::build(
            "square-pulse".into(),
            Domain::RealLine,
            Body::SquarePulse {
                half_width: h,
                height: T::one(),
            },
            SignalMeta {
                support: Some((-h, h)),
                breakpoints: vec![-h, h],
                nonneg: true,
                inf_value: Some(T::zero()),
                abs_bound: Some(T::one()),
            },
        )
    }

    /// Piecewise polynomial on the span of its knots; interior knots are breakpoints.
    pub fn piecewise(name: impl Into<String>, poly: PiecewisePolynomial<T>) -> Self {
        let knots = poly.knots();
        let domain = Domain::Interval {
            a: knots[0],
            b: knots[knots.len() - 1],
        };
        let breakpoints = knots[1..knots.len() - 1].to_vec();
        let nonneg = poly.is_nonneg();
        let abs_bound = Some(poly.abs_bound());
        Self::build(
            name.into(),
            domain,
            Body::Piecewise(poly),
            SignalMeta {
                breakpoints,
                nonneg,
                abs_bound,
                ..Default::default()
            },
        )
    }

    /// Random non-negative piecewise polynomial on [0, 1] (<= 3 breakpoints, degree <= 3).
    pub fn random_piecewise<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::piecewise(
            "random-piecewise",
            PiecewisePolynomial::random(rng, T::zero(), T::one(), 3, 3),
        )
    }

    /// Closure-backed signal.
    pub fn from_fn<F>(name: impl Into<String>, domain: Domain<T>, f: F, meta: SignalMeta<T>) -> Self
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        Self::build(name.into(), domain, Body::Func(Arc::new(f)), meta)
    }

    /// Resolves a catalog entry: `constant:<c>`, `ramp`, `step`, `sawtooth`,
    /// `abs-sine`, `hat`, `square-pulse`.
    pub fn catalog(name: &str) -> Result<Self> {
        let unknown = || Error::UnknownName {
            kind: "signal",
            name: name.to_string(),
        };
        match name.trim() {
            "ramp" => Ok(Self::ramp()),
            "step" => Ok(Self::step(T::zero(), T::one(), lit(0.5))),
            "sawtooth" => Ok(Self::sawtooth(3)),
            "abs-sine" => Ok(Self::abs_sine(T::one())),
            "hat" => Ok(Self::hat()),
            "square-pulse" => Ok(Self::square_pulse()),
            other => {
                let c = other
                    .strip_prefix("constant:")
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .filter(|c| c.is_finite())
                    .ok_or_else(unknown)?;
                Ok(Self::constant(lit(c)))
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> Domain<T> {
        self.domain
    }

    pub fn support(&self) -> Option<(T, T)> {
        self.support
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn is_nonneg(&self) -> bool {
        self.nonneg
    }

    pub fn inf_value(&self) -> Option<T> {
        self.inf_value
    }

    /// Known upper bound on `sup |f|`.
    pub fn abs_bound(&self) -> Option<T> {
        self.abs_bound
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Same formula on another domain; breakpoints outside it are dropped.
    pub fn with_domain(&self, domain: Domain<T>) -> Self {
        let mut out = Self::build(
            self.name.clone(),
            domain,
            Body::Func({
                let this = self.clone();
                Arc::new(move |t| this.evaluate_raw(t))
            }),
            SignalMeta {
                support: self.support,
                breakpoints: self.breakpoints.clone(),
                nonneg: self.nonneg,
                inf_value: None,
                abs_bound: self.abs_bound,
            },
        );
        if domain == self.domain {
            out.inf_value = self.inf_value;
        }
        out
    }

    /// f(t); zero outside a declared support.
    pub fn evaluate(&self, t: T) -> T {
        if let Some((lo, hi)) = self.support {
            if t < lo || t > hi {
                return T::zero();
            }
        }
        self.evaluate_raw(t)
    }

    fn evaluate_raw(&self, t: T) -> T {
        match &*self.body {
            Body::Constant(c) => *c,
            Body::Ramp => t,
            Body::Step { low, high, at } => {
                if t < *at {
                    *low
                } else {
                    *high
                }
            }
            Body::Sawtooth { teeth } => {
                let s = t * T::from_u32(*teeth).unwrap();
                s - s.floor()
            }
            Body::AbsSine { frequency } => (T::TAU() * *frequency * t).sin().abs(),
            Body::Hat => (T::one() - t.abs()).max(T::zero()),
            Body::SquarePulse { half_width, height } => {
                if t.abs() < *half_width {
                    *height
                } else {
                    T::zero()
                }
            }
            Body::Piecewise(p) => p.evaluate(t),
            Body::Linear { ts, ys } => interpolate(ts, ys, t),
            Body::Func(f) => f(t),
        }
    }

    fn merged_meta(&self, other: &Self) -> Result<MergedMeta<T>> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch);
        }
        let mut breaks = self.breakpoints.clone();
        breaks.extend_from_slice(&other.breakpoints);
        let support = match (self.support, other.support) {
            (Some(a), Some(b)) => Some((a.0.min(b.0), a.1.max(b.1))),
            _ => None,
        };
        Ok((breaks, support))
    }

    /// Pointwise sum.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let (breakpoints, support) = self.merged_meta(other)?;
        let (f, g) = (self.clone(), other.clone());
        Ok(Self::from_fn(
            format!("({})+({})", self.name, other.name),
            self.domain,
            move |t| f.evaluate(t) + g.evaluate(t),
            SignalMeta {
                support,
                breakpoints,
                nonneg: self.nonneg && other.nonneg,
                inf_value: None,
                abs_bound: self.abs_bound.zip(other.abs_bound).map(|(a, b)| a + b),
            },
        ))
    }

    /// Pointwise difference.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        let (breakpoints, support) = self.merged_meta(other)?;
        let (f, g) = (self.clone(), other.clone());
        Ok(Self::from_fn(
            format!("({})-({})", self.name, other.name),
            self.domain,
            move |t| f.evaluate(t) - g.evaluate(t),
            SignalMeta {
                support,
                breakpoints,
                nonneg: false,
                inf_value: None,
                abs_bound: self.abs_bound.zip(other.abs_bound).map(|(a, b)| a + b),
            },
        ))
    }

    /// `|f - g|`.
    pub fn abs_diff(&self, other: &Self) -> Result<Self> {
        let d = self.sub(other)?;
        let name = format!("|{}-{}|", self.name, other.name);
        let inner = d.clone();
        Ok(Self::from_fn(
            name,
            self.domain,
            move |t| inner.evaluate(t).abs(),
            SignalMeta {
                support: d.support,
                breakpoints: d.breakpoints.clone(),
                nonneg: true,
                inf_value: None,
                abs_bound: d.abs_bound,
            },
        ))
    }

    /// `lambda * f`.
    pub fn scale(&self, lambda: T) -> Self {
        let f = self.clone();
        Self::from_fn(
            format!("{lambda}*({})", self.name),
            self.domain,
            move |t| lambda * f.evaluate(t),
            SignalMeta {
                support: self.support,
                breakpoints: self.breakpoints.clone(),
                nonneg: self.nonneg && lambda >= T::zero() || lambda == T::zero(),
                inf_value: if lambda >= T::zero() {
                    self.inf_value.map(|c| c * lambda)
                } else {
                    None
                },
                abs_bound: self.abs_bound.map(|b| b * lambda.abs()),
            },
        )
    }

    /// `f + c` on the whole domain (a declared support is dropped unless `c = 0`).
    pub fn offset(&self, c: T) -> Self {
        let f = self.clone();
        let inf_value = self.inf_value.map(|v| v + c);
        Self::from_fn(
            format!("({})+{c}", self.name),
            self.domain,
            move |t| f.evaluate(t) + c,
            SignalMeta {
                support: if c == T::zero() { self.support } else { None },
                breakpoints: self.breakpoints.clone(),
                nonneg: inf_value
                    .map(|v| v >= T::zero())
                    .unwrap_or(self.nonneg && c >= T::zero()),
                inf_value,
                abs_bound: self.abs_bound.map(|b| b + c.abs()),
            },
        )
    }

    /// Splits `[lo, hi]` at every breakpoint strictly inside it.
    pub fn partition(&self, lo: T, hi: T) -> Vec<T> {
        let mut pts = vec![lo];
        pts.extend(
            self.breakpoints
                .iter()
                .copied()
                .filter(|&t| t > lo && t < hi),
        );
        if let Some((s0, s1)) = self.support {
            for s in [s0, s1] {
                if s > lo && s < hi && !pts.contains(&s) {
                    pts.push(s);
                }
            }
            pts.sort_by(|x, y| x.as_f64().total_cmp(&y.as_f64()));
        }
        pts.push(hi);
        pts
    }
}

fn interpolate<T: Real>(ts: &[T], ys: &[T], t: T) -> T {
    let last = ts.len() - 1;
    if t <= ts[0] {
        return ys[0];
    }
    if t >= ts[last] {
        return ys[last];
    }
    let i = ts.partition_point(|&s| s <= t) - 1;
    let w = (t - ts[i]) / (ts[i + 1] - ts[i]);
    ys[i] + (ys[i + 1] - ys[i]) * w
}

/// Result of CSV ingestion.
#[derive(Debug, Clone)]
pub struct CsvSignal<T> {
    pub signal: Signal<T>,
    /// Number of negative samples clamped to zero.
    pub clamped: usize,
}

/// Reads `(t, f(t))` pairs from a CSV file and returns the piecewise-linear
/// interpolant. Without a domain the sample span is used; on the real line
/// the sample span becomes the support.
pub fn from_csv<T: Real>(
    path: impl AsRef<Path>,
    domain: Option<Domain<T>>,
    nonneg: bool,
) -> Result<CsvSignal<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    from_csv_reader(file, name, domain, nonneg)
}

/// As [`from_csv`], from any reader. A first row that does not parse as two
/// numbers is taken to be a header.
pub fn from_csv_reader<T: Real, R: Read>(
    reader: R,
    name: impl Into<String>,
    domain: Option<Domain<T>>,
    nonneg: bool,
) -> Result<CsvSignal<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut ts: Vec<T> = Vec::new();
    let mut ys: Vec<T> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Csv {
            record: i + 1,
            message: e.to_string(),
        })?;
        if record.len() == 1 && record.get(0).map(str::is_empty).unwrap_or(true) {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::Csv {
                record: i + 1,
                message: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        let (t, y) = match parsed {
            (Ok(t), Ok(y)) if t.is_finite() && y.is_finite() => (t, y),
            _ if i == 0 => continue,
            _ => {
                return Err(Error::Csv {
                    record: i + 1,
                    message: format!("non-numeric row `{},{}`", &record[0], &record[1]),
                })
            }
        };
        if let Some(&prev) = ts.last() {
            if !(lit::<T>(t) > prev) {
                return Err(Error::Csv {
                    record: i + 1,
                    message: "t values must be strictly increasing".into(),
                });
            }
        }
        ts.push(lit(t));
        ys.push(lit(y));
    }
    if ts.len() < 2 {
        return Err(Error::Csv {
            record: ts.len(),
            message: if ts.is_empty() {
                "no samples".into()
            } else {
                "need at least two samples".into()
            },
        });
    }
    let mut clamped = 0;
    if nonneg {
        for y in ys.iter_mut() {
            if *y < T::zero() {
                *y = T::zero();
                clamped += 1;
            }
        }
        if clamped > 0 {
            log::warn!("clamped {clamped} negative samples to zero");
        }
    }
    let (t0, t1) = (ts[0], ts[ts.len() - 1]);
    let domain = domain.unwrap_or(Domain::Interval { a: t0, b: t1 });
    let support = match domain {
        Domain::RealLine => Some((t0, t1)),
        Domain::Interval { .. } => None,
    };
    let inf = ys.iter().copied().fold(T::infinity(), T::min);
    let inf = if support.is_some() {
        inf.min(T::zero())
    } else {
        inf
    };
    let bound = ys.iter().fold(T::zero(), |m, y| m.max(y.abs()));
    let signal = Signal::build(
        name.into(),
        domain,
        Body::Linear { ts, ys },
        SignalMeta {
            support,
            breakpoints: Vec::new(),
            nonneg: inf >= T::zero(),
            inf_value: Some(inf),
            abs_bound: Some(bound),
        },
    );
    Ok(CsvSignal { signal, clamped })
}

/// Kantorovich means `w * int_{k/w}^{(k+1)/w} f` for the lattice cells the
/// operator needs. Cells outside the stored range hold `background`
/// (zero for compactly supported signals on the real line).
#[derive(Debug, Clone, Serialize)]
pub struct MeanValueTable<T> {
    pub scale: T,
    pub domain_kind: DomainKind,
    /// First stored cell index.
    pub first: i64,
    pub values: Vec<T>,
    pub background: T,
}

impl<T: Real> MeanValueTable<T> {
    pub fn last(&self) -> i64 {
        self.first + self.values.len() as i64 - 1
    }

    /// Stored index range; for bounded domains this is J_n.
    pub fn index_range(&self) -> (i64, i64) {
        (self.first, self.last())
    }

    pub fn get(&self, k: i64) -> T {
        if k < self.first || k > self.last() {
            self.background
        } else {
            self.values[(k - self.first) as usize]
        }
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(self.background, T::max)
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(self.background, T::min)
    }

    /// Means of `f - c`: every cell (and the background) shifted by `-c`.
    pub fn shifted(&self, c: T) -> Self {
        Self {
            values: self.values.iter().map(|v| *v - c).collect(),
            background: self.background - c,
            ..self.clone()
        }
    }
}

/// `J_n = { k : ceil(n a) <= k <= floor(n b) - 1 }`.
pub fn index_set<T: Real>(scale: T, a: T, b: T) -> Option<(i64, i64)> {
    let lo = (scale * a).ceil().to_i64()?;
    let hi = (scale * b).floor().to_i64()? - 1;
    (lo <= hi).then_some((lo, hi))
}

/// Kantorovich mean-value table at integer scale `n`.
pub fn mean_values<T: Real>(f: &Signal<T>, n: u64) -> Result<MeanValueTable<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("scale n must be positive".into()));
    }
    mean_values_scaled(f, T::from_u64(n).unwrap(), CELL_QUADRATURE_ORDER)
}

/// Mean-value table at a real scale `w > 0` with a given Gauss–Legendre order.
pub fn mean_values_scaled<T: Real>(
    f: &Signal<T>,
    scale: T,
    order: usize,
) -> Result<MeanValueTable<T>> {
    if !(scale > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let (first, last, clip) = match f.domain() {
        Domain::Interval { a, b } => {
            let (lo, hi) = index_set(scale, a, b).ok_or(Error::EmptyIndexSet {
                n: scale.to_u64().unwrap_or(0),
                a: a.as_f64(),
                b: b.as_f64(),
            })?;
            (lo, hi, None)
        }
        Domain::RealLine => {
            let (s0, s1) = f.support().ok_or_else(|| Error::UnboundedSupport {
                signal: f.name().to_string(),
            })?;
            let lo = (scale * s0).floor().to_i64().unwrap_or(0);
            let hi = ((scale * s1).ceil().to_i64().unwrap_or(0) - 1).max(lo);
            (lo, hi, Some((s0, s1)))
        }
    };
    let rule = GaussLegendre::<T>::new(order);
    let cell = |k: i64| -> T {
        let mut lo = T::from_index(k) / scale;
        let mut hi = T::from_index(k + 1) / scale;
        if let Some((s0, s1)) = clip {
            lo = lo.max(s0);
            hi = hi.min(s1);
            if hi <= lo {
                return T::zero();
            }
        }
        let pts = f.partition(lo, hi);
        let integral: T = pts
            .windows(2)
            .map(|w| rule.integrate(|t| f.evaluate(t), w[0], w[1]))
            .sum();
        integral * scale
    };
    let count = (last - first + 1) as usize;
    let values: Vec<T> = if count >= 256 {
        (first..=last).into_par_iter().map(cell).collect()
    } else {
        (first..=last).map(cell).collect()
    };
    Ok(MeanValueTable {
        scale,
        domain_kind: f.domain().kind(),
        first,
        values,
        background: T::zero(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn catalog_entries() {
        let c = Signal::<f64>::catalog("constant:1").unwrap();
        assert_eq!(c.evaluate(0.3), 1.0);
        let step = Signal::<f64>::catalog("step").unwrap();
        assert_eq!(step.evaluate(0.25), 0.0);
        assert_eq!(step.evaluate(0.75), 1.0);
        assert_eq!(step.breakpoints(), &[0.5]);
        assert_eq!(
            Signal::<f64>::catalog("ramp").unwrap().inf_value(),
            Some(0.0)
        );
        let saw = Signal::<f64>::catalog("sawtooth").unwrap();
        assert_eq!(saw.breakpoints().len(), 2);
        assert_abs_diff_eq!(saw.evaluate(0.5), 0.5, epsilon = 1e-15);
        let hat = Signal::<f64>::catalog("hat").unwrap();
        assert_eq!(hat.domain(), Domain::RealLine);
        assert_eq!(hat.evaluate(3.0), 0.0);
        assert_eq!(hat.evaluate(0.5), 0.5);
        let pulse = Signal::<f64>::catalog("square-pulse").unwrap();
        assert_eq!(pulse.evaluate(0.0), 1.0);
        assert_eq!(pulse.evaluate(0.6), 0.0);
        assert_abs_diff_eq!(
            Signal::<f64>::catalog("abs-sine").unwrap().evaluate(0.75),
            1.0,
            epsilon = 1e-15
        );
        for bad in ["constant:", "constant:abc", "triangle", "constant:inf"] {
            assert!(matches!(
                Signal::<f64>::catalog(bad),
                Err(Error::UnknownName { .. })
            ));
        }
    }

    #[test]
    fn mean_values_examples() {
        let ramp = Signal::<f64>::ramp();
        let t = mean_values(&ramp, 1).unwrap();
        assert_eq!(t.index_range(), (0, 0));
        assert_abs_diff_eq!(t.values[0], 0.5, epsilon = 1e-15);

        let c = Signal::<f64>::constant(2.5);
        for n in [1, 3, 17] {
            assert!(mean_values(&c, n)
                .unwrap()
                .values
                .iter()
                .all(|v| (v - 2.5).abs() < 1e-14));
        }

        let step = Signal::<f64>::step(0.0, 1.0, 0.5);
        let t = mean_values(&step, 2).unwrap();
        assert_abs_diff_eq!(t.values[0], 0.0);
        assert_abs_diff_eq!(t.values[1], 1.0, epsilon = 1e-15);
        // a cell straddling the jump gets the exact split
        let t = mean_values(&step, 3).unwrap();
        assert_abs_diff_eq!(t.values[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn empty_index_set_and_unbounded_support_are_errors() {
        let f = Signal::<f64>::ramp().with_domain(Domain::interval(0.1, 0.2).unwrap());
        assert!(matches!(
            mean_values(&f, 5),
            Err(Error::EmptyIndexSet { .. })
        ));
        assert!(mean_values(&f, 20).is_ok());
        let unbounded = Signal::<f64>::constant(1.0).with_domain(Domain::RealLine);
        assert!(matches!(
            mean_values(&unbounded, 4),
            Err(Error::UnboundedSupport { .. })
        ));
    }

    #[test]
    fn index_set_matches_ceil_floor_rule() {
        assert_eq!(index_set(4.0, 0.0, 1.0), Some((0, 3)));
        assert_eq!(index_set(10.0, 0.25, 0.77), Some((3, 6)));
        assert_eq!(index_set(1.0, 0.2, 0.9), None);
    }

    #[test]
    fn real_line_cells_cover_support_only() {
        let pulse = Signal::<f64>::square_pulse();
        let t = mean_values(&pulse, 4).unwrap();
        assert_eq!(t.index_range(), (-2, 1));
        assert!(t.values.iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert_eq!(t.get(-3), 0.0);
        assert_eq!(t.get(5), 0.0);
        // support edge inside a cell
        let t = mean_values(&pulse, 3).unwrap();
        assert_abs_diff_eq!(t.get(-2), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t.get(1), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn shifted_table_moves_background() {
        let t = mean_values(&Signal::<f64>::hat(), 2).unwrap().shifted(-1.0);
        assert_eq!(t.background, 1.0);
        assert!(t.values.iter().all(|v| *v >= 1.0));
    }

    #[test]
    fn csv_ingestion() {
        let s = from_csv_reader::<f64, _>("0,0\n1,2\n".as_bytes(), "t", None, false).unwrap();
        assert_eq!(s.signal.evaluate(0.5), 1.0);
        assert_eq!(s.signal.domain(), Domain::Interval { a: 0.0, b: 1.0 });
        let with_header =
            from_csv_reader::<f64, _>("t,f\n0,1\n2,3\n".as_bytes(), "t", None, false).unwrap();
        assert_eq!(with_header.signal.evaluate(1.0), 2.0);
        let clamped =
            from_csv_reader::<f64, _>("0,-1\n1,1\n2,-0.5\n".as_bytes(), "t", None, true).unwrap();
        assert_eq!(clamped.clamped, 2);
        assert!(clamped.signal.is_nonneg());
        assert!(from_csv_reader::<f64, _>("1,0\n0,1\n".as_bytes(), "t", None, false).is_err());
        assert!(from_csv_reader::<f64, _>("".as_bytes(), "t", None, false).is_err());
        assert!(from_csv_reader::<f64, _>("0,1\n1,x\n".as_bytes(), "t", None, false).is_err());
        assert!(from_csv_reader::<f64, _>("0,1,2\n".as_bytes(), "t", None, false).is_err());
        let line = from_csv_reader::<f64, _>(
            "-1,0\n0,1\n1,0\n".as_bytes(),
            "t",
            Some(Domain::RealLine),
            false,
        )
        .unwrap();
        assert_eq!(line.signal.support(), Some((-1.0, 1.0)));
        assert_eq!(line.signal.evaluate(5.0), 0.0);
    }

    #[test]
    fn csv_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "t,f\n0,0\n0.5,1\n1,0\n").unwrap();
        let s = from_csv::<f64>(&path, None, true).unwrap();
        assert_eq!(s.signal.evaluate(0.25), 0.5);
        assert!(from_csv::<f64>(dir.path().join("missing.csv"), None, true).is_err());
    }

    #[test]
    fn combinators_track_metadata() {
        let f = Signal::<f64>::ramp();
        let g = Signal::<f64>::step(0.0, 1.0, 0.5);
        let s = f.add(&g).unwrap();
        assert_eq!(s.evaluate(0.75), 1.75);
        assert_eq!(s.breakpoints(), &[0.5]);
        assert!(s.is_nonneg());
        let d = f.abs_diff(&g).unwrap();
        assert_eq!(d.evaluate(0.75), 0.25);
        assert!(d.is_nonneg());
        let h = f.scale(2.0);
        assert_eq!(h.evaluate(0.3), 0.6);
        assert_eq!(h.inf_value(), Some(0.0));
        let o = f.offset(-0.5);
        assert!(!o.is_nonneg());
        assert_eq!(o.inf_value(), Some(-0.5));
        assert!(f.add(&Signal::hat()).is_err());
    }

    #[test]
    fn random_piecewise_is_nonneg_with_few_breaks() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let s = Signal::<f64>::random_piecewise(&mut rng);
            assert!(s.breakpoints().len() <= 3);
            assert!(s.is_nonneg());
            let bound = s.abs_bound().unwrap();
            for i in 0..=100 {
                let v = s.evaluate(i as f64 / 100.0);
                assert!(v >= 0.0 && v <= bound + 1e-15);
            }
        }
    }

    #[test]
    fn gauss_rule_is_exact_on_cells() {
        // cubic pieces: 16-point rule integrates degree <= 31 exactly
        let poly = PiecewisePolynomial::new(
            vec![0.0, 0.4, 1.0],
            vec![vec![0.0, 1.0, 0.5, 2.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let s = Signal::piecewise("p", poly);
        let t16 = mean_values(&s, 7).unwrap();
        let t32 = mean_values_scaled(&s, 7.0, 32).unwrap();
        for (a, b) in t16.values.iter().zip(&t32.values) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }
}
