//! Rotationally symmetric model manifolds `ds² = dr² + f(r)² dθ²`.
//!
//! A [`WarpedMetric`] evaluates the warp `f` together with `f'` and `f''`.
//! Closed forms cover the flat and constant-curvature spaces and the
//! `r (log r)^c` family; anything else is recovered from a radial curvature
//! profile by integrating the Jacobi equation `f'' = -K f`, `f(0) = 0`,
//! `f'(0) = 1` and storing a quintic Hermite interpolant.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::ode::{self, StepControl};
use crate::quad;
use crate::{Error, Result};

/// `(f, f', f'')` at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Warp3 {
    pub f: f64,
    pub df: f64,
    pub ddf: f64,
}

/// Asymptotic law of a radial curvature profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailLaw {
    /// `K(r) = -c / (r² log r)`.
    PowerLog { c: f64 },
    /// `K(r) = -c / (r² (log r)^{1+eps})`; the integrable decay used for
    /// asymptotically non-negative curvature.
    Ansc { c: f64, eps: f64 },
    /// `K ≡ -k0²`.
    Constant { k0: f64 },
    /// `K ≡ 0`.
    Zero,
}

impl TailLaw {
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            TailLaw::PowerLog { c } => -c / (r * r * math::log(r)),
            TailLaw::Ansc { c, eps } => -c / (r * r * math::pow(math::log(r), 1.0 + eps)),
            TailLaw::Constant { k0 } => -k0 * k0,
            TailLaw::Zero => 0.0,
        }
    }

    /// `K(r)` divided by the declared law, minus one. Zero law compares absolutely.
    fn relative_mismatch(&self, k: f64, r: f64) -> f64 {
        match *self {
            TailLaw::Zero => math::abs(k),
            _ => math::abs(k / self.value(r) - 1.0),
        }
    }

    fn needs_onset(&self) -> bool {
        matches!(self, TailLaw::PowerLog { .. } | TailLaw::Ansc { .. })
    }

    /// True for laws with `∫ s |K(s)| ds < ∞`.
    pub fn is_ansc(&self) -> bool {
        matches!(self, TailLaw::Ansc { eps, .. } if *eps > 0.0) || matches!(self, TailLaw::Zero)
    }
}

type CurvatureFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum ProfileShape {
    /// Constant `inner` on `[0, onset-1]`, the tail law from `onset` on, and a
    /// C² smootherstep blend in between.
    Blended {
        inner: f64,
    },
    Custom(CurvatureFn),
}

/// Radial curvature `K(r) ≤ 0` with a declared tail law.
#[derive(Clone)]
pub struct CurvatureProfile {
    tail: TailLaw,
    onset: f64,
    shape: ProfileShape,
}

impl fmt::Debug for CurvatureProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("CurvatureProfile");
        d.field("tail", &self.tail).field("onset", &self.onset);
        match &self.shape {
            ProfileShape::Blended { inner } => d.field("inner", inner),
            ProfileShape::Custom(_) => d.field("inner", &"custom"),
        };
        d.finish()
    }
}

impl CurvatureProfile {
    /// Profile following `tail` from `onset` on, constant near the pole.
    ///
    /// For the logarithmic laws the onset must be at least 3 so that the blend
    /// interval `[onset-1, onset]` stays away from the singularity at `r = 1`.
    /// The inner constant defaults to the tail value at the onset.
    pub fn new(tail: TailLaw, onset: f64) -> Result<Self> {
        Self::validate_tail(&tail)?;
        if tail.needs_onset() && !(onset >= 3.0) {
            return Err(Error::OutOfRange {
                what: "onset radius",
                value: onset,
            });
        }
        let inner = if tail.needs_onset() {
            tail.value(onset)
        } else {
            tail.value(1.0)
        };
        Ok(Self {
            tail,
            onset,
            shape: ProfileShape::Blended { inner },
        })
    }

    /// Replace the constant used near the pole. Must be nonpositive.
    pub fn with_inner(mut self, inner: f64) -> Result<Self> {
        if !(inner <= 0.0) {
            return Err(Error::OutOfRange {
                what: "inner curvature",
                value: inner,
            });
        }
        if let ProfileShape::Blended { inner: slot } = &mut self.shape {
            *slot = inner;
        }
        Ok(self)
    }

    /// Arbitrary nonpositive continuous curvature; `tail` is informational and
    /// only used by [`CurvatureProfile::tail_consistent`].
    pub fn custom<F>(k: F, tail: TailLaw, onset: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            tail,
            onset,
            shape: ProfileShape::Custom(Arc::new(k)),
        }
    }

    fn validate_tail(tail: &TailLaw) -> Result<()> {
        let ok = match *tail {
            TailLaw::PowerLog { c } => c > 0.0,
            TailLaw::Ansc { c, eps } => c > 0.0 && eps > 0.0,
            TailLaw::Constant { k0 } => k0 >= 0.0,
            TailLaw::Zero => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("tail law constants must be positive"))
        }
    }

    pub fn tail(&self) -> TailLaw {
        self.tail
    }

    pub fn onset(&self) -> f64 {
        self.onset
    }

    /// Inner constant of a blended profile, `None` for custom profiles.
    pub fn inner(&self) -> Option<f64> {
        match self.shape {
            ProfileShape::Blended { inner } => Some(inner),
            ProfileShape::Custom(_) => None,
        }
    }

    pub fn is_custom(&self) -> bool {
        matches!(self.shape, ProfileShape::Custom(_))
    }

    /// `K(r)` for `r ≥ 0`.
    pub fn k(&self, r: f64) -> f64 {
        match &self.shape {
            ProfileShape::Custom(k) => k(r),
            ProfileShape::Blended { inner } => {
                if !self.tail.needs_onset() {
                    return self.tail.value(r);
                }
                let start = self.onset - 1.0;
                if r <= start {
                    *inner
                } else if r >= self.onset {
                    self.tail.value(r)
                } else {
                    let s = r - start;
                    let w = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
                    (1.0 - w) * inner + w * self.tail.value(r)
                }
            }
        }
    }

    /// Checks `|K(r) / law(r) - 1| ≤ 0.1` on `r ∈ [10·onset, 1000·onset]`.
    pub fn tail_consistent(&self) -> bool {
        let start = 10.0 * self.onset.max(1.0);
        (0..=40).all(|i| {
            let r = start * math::pow(100.0, i as f64 / 40.0);
            self.tail.relative_mismatch(self.k(r), r) <= 0.1
        })
    }
}

/// Serializable description of how a metric was built.
#[derive(Debug, Clone)]
pub enum MetricKind {
    Euclidean,
    Hyperbolic { kappa: f64 },
    March { c: f64 },
    FromCurvature { profile: CurvatureProfile },
}

#[derive(Debug)]
struct MarchWarp {
    c: f64,
    a: f64,
    phi_a: f64,
    dphi_a: f64,
}

impl MarchWarp {
    fn phi(&self, r: f64) -> f64 {
        r * math::pow(math::log(r), self.c)
    }
    fn dphi(&self, r: f64) -> f64 {
        march_dphi(self.c, r)
    }
    fn ddphi(&self, r: f64) -> f64 {
        march_ddphi(self.c, r)
    }
}

fn march_dphi(c: f64, r: f64) -> f64 {
    let l = math::log(r);
    math::pow(l, c) + c * math::pow(l, c - 1.0)
}

fn march_ddphi(c: f64, r: f64) -> f64 {
    let l = math::log(r);
    c * math::pow(l, c - 2.0) * (l + c - 1.0) / r
}

#[derive(Debug, Clone, Copy)]
struct JacobiNode {
    r: f64,
    f: f64,
    df: f64,
    ddf: f64,
}

#[derive(Debug)]
struct JacobiTable {
    k0: f64,
    series_end: f64,
    nodes: Vec<JacobiNode>,
}

impl JacobiTable {
    fn eval(&self, r: f64) -> Warp3 {
        if r <= self.series_end {
            // f = r - K0 r³/6, accurate to O(r⁵) for curvature constant near the pole.
            let k = self.k0;
            return Warp3 {
                f: r - k * r * r * r / 6.0,
                df: 1.0 - k * r * r / 2.0,
                ddf: -k * r,
            };
        }
        let idx = self.nodes.partition_point(|n| n.r <= r);
        let i = idx.saturating_sub(1).min(self.nodes.len() - 2);
        let (p, q) = (self.nodes[i], self.nodes[i + 1]);
        quintic_hermite(&p, &q, r)
    }
}

/// Quintic Hermite interpolation matching value, first and second derivative
/// at both ends.
fn quintic_hermite(p: &JacobiNode, q: &JacobiNode, r: f64) -> Warp3 {
    let h = q.r - p.r;
    let s = (r - p.r) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;

    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let h3 = 0.5 * (s3 - 2.0 * s4 + s5);
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;

    let d0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let d1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let d2 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4);
    let d3 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4);
    let d4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let d5 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;

    let e0 = -60.0 * s + 180.0 * s2 - 120.0 * s3;
    let e1 = -36.0 * s + 96.0 * s2 - 60.0 * s3;
    let e2 = 0.5 * (2.0 - 18.0 * s + 36.0 * s2 - 20.0 * s3);
    let e3 = 0.5 * (6.0 * s - 24.0 * s2 + 20.0 * s3);
    let e4 = -24.0 * s + 84.0 * s2 - 60.0 * s3;
    let e5 = 60.0 * s - 180.0 * s2 + 120.0 * s3;

    let hh = h * h;
    let f = p.f * h0 + h * p.df * h1 + hh * p.ddf * h2 + hh * q.ddf * h3 + h * q.df * h4 + q.f * h5;
    let df = (p.f * d0 + h * p.df * d1 + hh * p.ddf * d2 + hh * q.ddf * d3 + h * q.df * d4 + q.f * d5) / h;
    let ddf = (p.f * e0 + h * p.df * e1 + hh * p.ddf * e2 + hh * q.ddf * e3 + h * q.df * e4 + q.f * e5) / hh;
    Warp3 { f, df, ddf }
}

#[derive(Debug, Clone)]
enum Warp {
    Euclidean,
    Hyperbolic { kappa: f64 },
    March(Arc<MarchWarp>),
    Jacobi(Arc<JacobiTable>),
}

/// Rotationally symmetric metric `dr² + f(r)² dθ²` on `ℝⁿ`.
///
/// Immutable after construction and cheap to clone.
#[derive(Debug, Clone)]
pub struct WarpedMetric {
    n: u32,
    r_max: f64,
    warp: Warp,
    kind: MetricKind,
}

/// Closed-form model selector for [`WarpedMetric::closed_form`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    Euclidean,
    Hyperbolic { kappa: f64 },
}

/// Settings for the March construction's shift search.
#[derive(Debug, Clone, Copy)]
pub struct MarchSearch {
    pub ratio: f64,
    pub a_max: f64,
}

impl Default for MarchSearch {
    fn default() -> Self {
        Self {
            ratio: 1.05,
            a_max: 1e3,
        }
    }
}

fn check_dimension(n: u32) -> Result<()> {
    if n < 2 {
        return Err(Error::OutOfRange {
            what: "dimension n",
            value: n as f64,
        });
    }
    Ok(())
}

impl WarpedMetric {
    /// Flat space (`f = r`) or constant curvature `-κ²` (`f = sinh(κr)/κ`).
    pub fn closed_form(kind: ClosedForm, n: u32) -> Result<Self> {
        check_dimension(n)?;
        let (warp, kind) = match kind {
            ClosedForm::Euclidean => (Warp::Euclidean, MetricKind::Euclidean),
            ClosedForm::Hyperbolic { kappa } => {
                if !(kappa > 0.0) {
                    return Err(Error::OutOfRange {
                        what: "kappa",
                        value: kappa,
                    });
                }
                (Warp::Hyperbolic { kappa }, MetricKind::Hyperbolic { kappa })
            }
        };
        Ok(Self {
            n,
            r_max: f64::INFINITY,
            warp,
            kind,
        })
    }

    pub fn euclidean(n: u32) -> Result<Self> {
        Self::closed_form(ClosedForm::Euclidean, n)
    }

    pub fn hyperbolic(kappa: f64, n: u32) -> Result<Self> {
        Self::closed_form(ClosedForm::Hyperbolic { kappa }, n)
    }

    /// `g(r) = (φ(r+a) - φ(a)) / φ'(a)` with `φ(r) = r (log r)^c`, where `a > 1`
    /// is the first point of a geometric grid with `φ'(a) > 0` and `φ''(a) > 0`.
    pub fn march(c: f64, n: u32) -> Result<Self> {
        Self::march_with(c, n, MarchSearch::default())
    }

    pub fn march_with(c: f64, n: u32, search: MarchSearch) -> Result<Self> {
        check_dimension(n)?;
        if !(c > 0.0) {
            return Err(Error::OutOfRange { what: "c", value: c });
        }
        if !(search.ratio > 1.0) {
            return Err(Error::InvalidArgument("march search ratio must exceed 1"));
        }
        let mut a = search.ratio;
        while a <= search.a_max {
            if march_dphi(c, a) > 0.0 && march_ddphi(c, a) > 0.0 {
                let w = MarchWarp {
                    c,
                    a,
                    phi_a: a * math::pow(math::log(a), c),
                    dphi_a: march_dphi(c, a),
                };
                return Ok(Self {
                    n,
                    r_max: f64::INFINITY,
                    warp: Warp::March(Arc::new(w)),
                    kind: MetricKind::March { c },
                });
            }
            a *= search.ratio;
        }
        Err(Error::NoAdmissibleShift { c })
    }

    /// Shift `a` of a March metric.
    pub fn march_shift(&self) -> Option<f64> {
        match &self.warp {
            Warp::March(w) => Some(w.a),
            _ => None,
        }
    }

    /// Integrate `f'' = -K(r) f` from the pole up to `r_max`.
    ///
    /// Integration stops early if `f` exceeds `1e200`; the returned metric's
    /// validity horizon is then the last accepted radius.
    pub fn from_curvature(profile: CurvatureProfile, n: u32, r_max: f64) -> Result<Self> {
        Self::from_curvature_with(profile, n, r_max, StepControl::default())
    }

    pub fn from_curvature_with(
        profile: CurvatureProfile,
        n: u32,
        r_max: f64,
        ctl: StepControl,
    ) -> Result<Self> {
        check_dimension(n)?;
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::OutOfRange {
                what: "r_max",
                value: r_max,
            });
        }
        let k0 = profile.k(0.0);
        let series_end = (1e-4f64).min(0.5 * r_max);
        let y0 = [
            series_end - k0 * series_end * series_end * series_end / 6.0,
            1.0 - k0 * series_end * series_end / 2.0,
        ];
        let k = |r: f64| profile.k(r);
        let traj = ode::dopri5(
            |r, y| [y[1], -k(r) * y[0]],
            series_end,
            y0,
            r_max,
            ctl,
            |_, y| y[0] > 1e200,
        )?;
        let nodes: Vec<JacobiNode> = traj
            .iter()
            .map(|&(r, y)| JacobiNode {
                r,
                f: y[0],
                df: y[1],
                ddf: -k(r) * y[0],
            })
            .collect();
        if nodes.len() < 2 {
            return Err(Error::IntegrationFailure {
                r: series_end,
                step: 0.0,
            });
        }
        let reached = nodes[nodes.len() - 1].r;
        Ok(Self {
            n,
            r_max: reached,
            warp: Warp::Jacobi(Arc::new(JacobiTable {
                k0,
                series_end,
                nodes,
            })),
            kind: MetricKind::FromCurvature { profile },
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Validity horizon of the representation (`∞` for closed forms).
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    /// Tail law the metric is known to follow, if any.
    pub fn declared_tail(&self) -> Option<TailLaw> {
        match &self.kind {
            MetricKind::Euclidean => Some(TailLaw::Zero),
            MetricKind::Hyperbolic { kappa } => Some(TailLaw::Constant { k0: *kappa }),
            MetricKind::March { c } => Some(TailLaw::PowerLog { c: *c }),
            MetricKind::FromCurvature { profile } => Some(profile.tail()),
        }
    }

    fn check_domain(&self, r: f64) -> Result<()> {
        if r > 0.0 && r <= self.r_max {
            Ok(())
        } else {
            Err(Error::Domain { r, r_max: self.r_max })
        }
    }

    /// `(f, f', f'')` at `r ∈ (0, r_max]`.
    pub fn warp(&self, r: f64) -> Result<Warp3> {
        self.check_domain(r)?;
        Ok(self.eval(r))
    }

    pub(crate) fn eval(&self, r: f64) -> Warp3 {
        match &self.warp {
            Warp::Euclidean => Warp3 {
                f: r,
                df: 1.0,
                ddf: 0.0,
            },
            Warp::Hyperbolic { kappa } => {
                let x = kappa * r;
                Warp3 {
                    f: math::sinh(x) / kappa,
                    df: math::cosh(x),
                    ddf: kappa * math::sinh(x),
                }
            }
            Warp::March(w) => Warp3 {
                f: (w.phi(r + w.a) - w.phi_a) / w.dphi_a,
                df: w.dphi(r + w.a) / w.dphi_a,
                ddf: w.ddphi(r + w.a) / w.dphi_a,
            },
            Warp::Jacobi(t) => t.eval(r),
        }
    }

    /// `ln f(r)`, finite where `f` itself would overflow for the closed forms.
    pub(crate) fn ln_f(&self, r: f64) -> f64 {
        match &self.warp {
            Warp::Hyperbolic { kappa } => {
                let x = kappa * r;
                if x > 20.0 {
                    x + math::log1p(-math::exp(-2.0 * x)) - math::LN_2 - math::log(*kappa)
                } else {
                    math::log(math::sinh(x) / kappa)
                }
            }
            _ => math::log(self.eval(r).f),
        }
    }

    /// `f'(r) / f(r)`.
    pub(crate) fn log_derivative(&self, r: f64) -> f64 {
        match &self.warp {
            Warp::Hyperbolic { kappa } => kappa * math::coth(kappa * r),
            _ => {
                let w = self.eval(r);
                w.df / w.f
            }
        }
    }

    /// Radial sectional curvature `-f''(r) / f(r)`.
    pub fn curvature_at(&self, r: f64) -> Result<f64> {
        self.check_domain(r)?;
        Ok(match &self.warp {
            Warp::Hyperbolic { kappa } => -kappa * kappa,
            _ => {
                let w = self.eval(r);
                -w.ddf / w.f
            }
        })
    }

    /// Area of the unit sphere `S^{n-1}`, `2π^{n/2} / Γ(n/2)`.
    pub fn sphere_area(&self) -> f64 {
        sphere_area(self.n)
    }

    /// Volume of the geodesic ball `B(o, r)`, `ω_{n-1} ∫₀^r f^{n-1}`.
    pub fn volume(&self, r: f64) -> Result<f64> {
        self.check_domain(r)?;
        let p = (self.n - 1) as f64;
        let (v, _) = quad::integrate(|t| math::pow(self.eval(t).f, p), 0.0, r, 1e-11, 0.0)?;
        Ok(self.sphere_area() * v)
    }

    /// Smallest `f''` over the samples; Cartan-Hadamard models keep this `≥ -tol`.
    pub fn min_second_derivative(&self, samples: &[f64]) -> f64 {
        samples
            .iter()
            .filter(|&&r| r > 0.0 && r <= self.r_max)
            .map(|&r| self.eval(r).ddf)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_convex(&self, samples: &[f64], tol: f64) -> bool {
        self.min_second_derivative(samples) >= -tol
    }
}

pub fn sphere_area(n: u32) -> f64 {
    let half = n as f64 / 2.0;
    2.0 * math::pow(math::PI, half) / math::tgamma(half)
}
