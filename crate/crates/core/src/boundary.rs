//! Zonal boundary data `b(θ)` on the sphere at infinity.
//!
//! A zonal function depends only on the polar angle, so its spherical
//! gradient, Laplacian and Hessian reduce to one-dimensional expressions in
//! `b'` and `b''`.

use alloc::sync::Arc;
use core::fmt;

use crate::math;
use crate::{Error, Result};

/// Named presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZonalPreset {
    Constant(f64),
    Cos,
    ScaledCos(f64),
}

type Profile = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Preset(ZonalPreset),
    Custom(Profile),
}

/// Seminorms of `b` over `θ ∈ [0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seminorms {
    pub min: f64,
    pub max: f64,
    pub sup_abs: f64,
    pub sup_grad: f64,
    pub sup_hess: f64,
}

impl Seminorms {
    /// `‖b‖_{C²} = sup|b| + sup|∇b| + sup|Hess b|`.
    pub fn c2(&self) -> f64 {
        self.sup_abs + self.sup_grad + self.sup_hess
    }
}

#[derive(Clone)]
pub struct BoundaryData {
    shape: Shape,
    n: u32,
    norms: Seminorms,
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("BoundaryData");
        match &self.shape {
            Shape::Preset(p) => d.field("preset", p),
            Shape::Custom(_) => d.field("preset", &"custom"),
        };
        d.field("n", &self.n).field("norms", &self.norms).finish()
    }
}

const POLE_EPS: f64 = 1e-8;
const SAMPLES: usize = 4096;

impl BoundaryData {
    pub fn preset(preset: ZonalPreset, n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::OutOfRange {
                what: "dimension n",
                value: n as f64,
            });
        }
        let norms = match preset {
            ZonalPreset::Constant(v) => Seminorms {
                min: v,
                max: v,
                sup_abs: math::abs(v),
                sup_grad: 0.0,
                sup_hess: 0.0,
            },
            ZonalPreset::Cos => scaled_cos_norms(1.0),
            ZonalPreset::ScaledCos(eps) => scaled_cos_norms(eps),
        };
        Ok(Self {
            shape: Shape::Preset(preset),
            n,
            norms,
        })
    }

    pub fn constant(v: f64, n: u32) -> Result<Self> {
        Self::preset(ZonalPreset::Constant(v), n)
    }

    pub fn cos(n: u32) -> Result<Self> {
        Self::preset(ZonalPreset::Cos, n)
    }

    pub fn scaled_cos(eps: f64, n: u32) -> Result<Self> {
        Self::preset(ZonalPreset::ScaledCos(eps), n)
    }

    /// Arbitrary zonal data given as `θ ↦ [b, b', b'']`. Must satisfy
    /// `b'(0) = b'(π) = 0`; seminorms are taken on a fine sample.
    pub fn custom<F>(profile: F, n: u32) -> Result<Self>
    where
        F: Fn(f64) -> [f64; 3] + Send + Sync + 'static,
    {
        if n < 2 {
            return Err(Error::OutOfRange {
                what: "dimension n",
                value: n as f64,
            });
        }
        let [_, d0, _] = profile(0.0);
        let [_, d1, _] = profile(math::PI);
        if math::abs(d0) > 1e-10 || math::abs(d1) > 1e-10 {
            return Err(Error::InvalidArgument("zonal data needs b'(0) = b'(pi) = 0"));
        }
        let mut out = Self {
            shape: Shape::Custom(Arc::new(profile)),
            n,
            norms: Seminorms {
                min: 0.0,
                max: 0.0,
                sup_abs: 0.0,
                sup_grad: 0.0,
                sup_hess: 0.0,
            },
        };
        let mut norms = Seminorms {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            sup_abs: 0.0,
            sup_grad: 0.0,
            sup_hess: 0.0,
        };
        for i in 0..=SAMPLES {
            let th = math::PI * i as f64 / SAMPLES as f64;
            let [b, d, _] = out.raw(th);
            norms.min = norms.min.min(b);
            norms.max = norms.max.max(b);
            norms.sup_abs = norms.sup_abs.max(math::abs(b));
            norms.sup_grad = norms.sup_grad.max(math::abs(d));
            norms.sup_hess = norms.sup_hess.max(out.hess_norm(th));
        }
        out.norms = norms;
        Ok(out)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn preset_kind(&self) -> Option<ZonalPreset> {
        match self.shape {
            Shape::Preset(p) => Some(p),
            Shape::Custom(_) => None,
        }
    }

    pub fn norms(&self) -> Seminorms {
        self.norms
    }

    fn raw(&self, theta: f64) -> [f64; 3] {
        match &self.shape {
            Shape::Preset(ZonalPreset::Constant(v)) => [*v, 0.0, 0.0],
            Shape::Preset(ZonalPreset::Cos) => [math::cos(theta), -math::sin(theta), -math::cos(theta)],
            Shape::Preset(ZonalPreset::ScaledCos(e)) => {
                [e * math::cos(theta), -e * math::sin(theta), -e * math::cos(theta)]
            }
            Shape::Custom(p) => p(theta),
        }
    }

    pub fn value(&self, theta: f64) -> f64 {
        self.raw(theta)[0]
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        self.raw(theta)[1]
    }

    pub fn second_derivative(&self, theta: f64) -> f64 {
        self.raw(theta)[2]
    }

    /// `b'(θ) cot θ`, with its pole limit `b''`.
    fn d_cot(&self, theta: f64) -> f64 {
        let [_, d, dd] = self.raw(theta);
        let s = math::sin(theta);
        if s < POLE_EPS {
            dd
        } else {
            d * math::cos(theta) / s
        }
    }

    /// `|∇^S b| = |b'|`.
    pub fn grad_norm(&self, theta: f64) -> f64 {
        math::abs(self.derivative(theta))
    }

    /// `Δ^S b = b'' + (n-2) cot θ b'`; `(n-1) b''` at the poles.
    pub fn laplacian(&self, theta: f64) -> f64 {
        self.second_derivative(theta) + (self.n as f64 - 2.0) * self.d_cot(theta)
    }

    /// Operator norm of `Hess^S b`: eigenvalues are `b''` and `b' cot θ`.
    pub fn hess_norm(&self, theta: f64) -> f64 {
        let dd = math::abs(self.second_derivative(theta));
        if self.n == 2 {
            dd
        } else {
            dd.max(math::abs(self.d_cot(theta)))
        }
    }

    /// `Hess^S b(∇b, ∇b) = b'' b'²`.
    pub fn hess_grad_grad(&self, theta: f64) -> f64 {
        let [_, d, dd] = self.raw(theta);
        dd * d * d
    }

    /// `b(π - θ)`.
    pub fn reflected(&self) -> Self {
        let src = self.clone();
        let profile = move |th: f64| {
            let [b, d, dd] = src.raw(math::PI - th);
            [b, -d, dd]
        };
        let mut out = Self {
            shape: Shape::Custom(Arc::new(profile)),
            ..self.clone()
        };
        out.norms = self.norms;
        out
    }
}

fn scaled_cos_norms(eps: f64) -> Seminorms {
    let a = math::abs(eps);
    Seminorms {
        min: -a,
        max: a,
        sup_abs: a,
        sup_grad: a,
        sup_hess: a,
    }
}
