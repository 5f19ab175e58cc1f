//! Zonal finite-volume grid on a geodesic ball `B(o, R_max)`.
//!
//! Radial unknowns sit at `r_1 = h/2 < r_2 < … < r_Nr`, with spacings
//! `h, hs, hs², …` ending on the Dirichlet node `R_max`. Cell faces are the
//! midpoints between nodes, with the first face at the pole. Angular nodes are
//! cell centres `θ_j = (j - 1/2) π / Nθ`, so neither pole is a node.

use alloc::vec::Vec;

use crate::manifold::WarpedMetric;
use crate::math;
use crate::quad;
use crate::{Error, Result};

/// Largest admissible ratio between adjacent radial cell widths.
pub const MAX_STRETCH: f64 = 1.2;

/// How radial spacings grow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stretch {
    Uniform,
    /// Fixed ratio `s` between successive node spacings.
    Ratio(f64),
    /// First spacing `h`; the ratio is solved for.
    FirstWidth(f64),
}

#[derive(Debug, Clone)]
pub struct PolarGrid {
    metric: WarpedMetric,
    r_max: f64,
    ratio: f64,
    /// Unknown radial nodes followed by the Dirichlet node `R_max`.
    r: Vec<f64>,
    /// Faces `ρ_0 = 0 < ρ_1 < … < ρ_Nr`.
    rho: Vec<f64>,
    theta: Vec<f64>,
    dtheta: f64,
    f_node: Vec<f64>,
    f_face: Vec<f64>,
    /// `f^{n-1}(ρ_i)`.
    area: Vec<f64>,
    /// `∫ f^{n-1}` over radial cell `i`.
    rad_vol: Vec<f64>,
    /// `f^{n-3}(r_i) (ρ_{i+1} - ρ_i)`.
    ang_weight: Vec<f64>,
    /// `∫ sin^{n-2}` over angular cell `j`.
    sin_int: Vec<f64>,
    /// `sin^{n-2}(jπ/Nθ)` at angular faces.
    sin_face: Vec<f64>,
}

pub fn build_grid(metric: &WarpedMetric, r_max: f64, nr: usize, n_theta: usize) -> Result<PolarGrid> {
    build_grid_with(metric, r_max, nr, n_theta, Stretch::Uniform)
}

pub fn build_grid_with(
    metric: &WarpedMetric,
    r_max: f64,
    nr: usize,
    n_theta: usize,
    stretch: Stretch,
) -> Result<PolarGrid> {
    if nr < 8 || n_theta < 8 {
        return Err(Error::InvalidArgument("grid needs Nr, Ntheta >= 8"));
    }
    if !(r_max > 0.0) || r_max > metric.r_max() {
        return Err(Error::Domain {
            r: r_max,
            r_max: metric.r_max(),
        });
    }
    let span = |s: f64| -> f64 {
        // R_max / h for ratio s.
        let mut acc = 0.5;
        let mut p = 1.0;
        for _ in 0..nr {
            acc += p;
            p *= s;
        }
        acc
    };
    let (h, s) = match stretch {
        Stretch::Uniform => (r_max / (nr as f64 + 0.5), 1.0),
        Stretch::Ratio(s) => {
            if !(s > 0.0) {
                return Err(Error::OutOfRange {
                    what: "stretch ratio",
                    value: s,
                });
            }
            (r_max / span(s), s)
        }
        Stretch::FirstWidth(h) => {
            if !(h > 0.0) {
                return Err(Error::OutOfRange {
                    what: "first width",
                    value: h,
                });
            }
            let target = r_max / h;
            let (mut lo, mut hi) = (1.0 / MAX_STRETCH, MAX_STRETCH);
            if span(hi) < target {
                let mut s = hi;
                while span(s) < target && s < 4.0 {
                    s *= 1.01;
                }
                return Err(Error::StretchTooLarge { ratio: s });
            }
            if span(lo) > target {
                return Err(Error::StretchTooLarge { ratio: 1.0 / lo });
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if span(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let s = 0.5 * (lo + hi);
            (r_max / span(s), s)
        }
    };

    let mut r = Vec::with_capacity(nr + 1);
    r.push(0.5 * h);
    let mut step = h;
    for _ in 1..nr {
        let last = r[r.len() - 1];
        r.push(last + step);
        step *= s;
    }
    r.push(r_max);

    let mut rho = Vec::with_capacity(nr + 1);
    rho.push(0.0);
    for i in 1..=nr {
        rho.push(0.5 * (r[i - 1] + r[i]));
    }

    let ratio = max_width_ratio(&rho);
    if ratio > MAX_STRETCH * (1.0 + 1e-12) {
        return Err(Error::StretchTooLarge { ratio });
    }

    let n = metric.n();
    let pn1 = (n - 1) as f64;
    let pn3 = n as f64 - 3.0;
    let f_node: Vec<f64> = r.iter().map(|&x| metric.eval(x).f).collect();
    let f_face: Vec<f64> = rho
        .iter()
        .map(|&x| if x == 0.0 { 0.0 } else { metric.eval(x).f })
        .collect();
    let area: Vec<f64> = f_face.iter().map(|&f| math::pow(f, pn1)).collect();
    let rad_vol: Vec<f64> = (0..nr)
        .map(|i| quad::gauss16(|t| math::pow(metric.eval(t).f, pn1), rho[i], rho[i + 1]))
        .collect();
    let ang_weight: Vec<f64> = (0..nr)
        .map(|i| math::pow(f_node[i], pn3) * (rho[i + 1] - rho[i]))
        .collect();

    let dtheta = math::PI / n_theta as f64;
    let theta: Vec<f64> = (0..n_theta).map(|j| (j as f64 + 0.5) * dtheta).collect();
    let ps = n as f64 - 2.0;
    let sin_int: Vec<f64> = (0..n_theta)
        .map(|j| {
            quad::gauss16(
                |t| math::pow(math::sin(t), ps),
                j as f64 * dtheta,
                (j + 1) as f64 * dtheta,
            )
        })
        .collect();
    let sin_face: Vec<f64> = (0..=n_theta)
        .map(|j| {
            if j == 0 || j == n_theta {
                0.0
            } else {
                math::pow(math::sin(j as f64 * dtheta), ps)
            }
        })
        .collect();

    Ok(PolarGrid {
        metric: metric.clone(),
        r_max,
        ratio: s,
        r,
        rho,
        theta,
        dtheta,
        f_node,
        f_face,
        area,
        rad_vol,
        ang_weight,
        sin_int,
        sin_face,
    })
}

fn max_width_ratio(rho: &[f64]) -> f64 {
    rho.windows(3)
        .map(|w| {
            let (a, b) = (w[1] - w[0], w[2] - w[1]);
            (a / b).max(b / a)
        })
        .fold(1.0, f64::max)
}

impl PolarGrid {
    pub fn metric(&self) -> &WarpedMetric {
        &self.metric
    }

    pub fn n(&self) -> u32 {
        self.metric.n()
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Number of unknown radial rows.
    pub fn nr(&self) -> usize {
        self.r.len() - 1
    }

    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }

    pub fn cell_count(&self) -> usize {
        self.nr() * self.n_theta()
    }

    /// Spacing growth factor used to place the nodes.
    pub fn spacing_ratio(&self) -> f64 {
        self.ratio
    }

    /// Radial nodes, the last entry being `R_max`.
    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn faces(&self) -> &[f64] {
        &self.rho
    }

    pub fn angles(&self) -> &[f64] {
        &self.theta
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }

    /// Widths `ρ_{i+1} - ρ_i` of the radial cells.
    pub fn cell_widths(&self) -> Vec<f64> {
        self.rho.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Largest ratio between adjacent radial cell widths.
    pub fn max_stretch(&self) -> f64 {
        max_width_ratio(&self.rho)
    }

    /// `f^{n-1}(r_i) sin^{n-2}(θ_j)` at a cell node.
    pub fn jacobian(&self, i: usize, j: usize) -> f64 {
        let n = self.n();
        math::pow(self.f_node[i], (n - 1) as f64) * math::pow(math::sin(self.theta[j]), n as f64 - 2.0)
    }

    /// Cell volume (without the `ω` factor of the remaining sphere directions).
    pub fn volume(&self, i: usize, j: usize) -> f64 {
        self.rad_vol[i] * self.sin_int[j]
    }

    pub(crate) fn f_node(&self, i: usize) -> f64 {
        self.f_node[i]
    }

    pub(crate) fn f_face(&self, i: usize) -> f64 {
        self.f_face[i]
    }

    pub(crate) fn area(&self, i: usize) -> f64 {
        self.area[i]
    }

    pub(crate) fn ang_weight(&self, i: usize) -> f64 {
        self.ang_weight[i]
    }

    pub(crate) fn sin_int(&self, j: usize) -> f64 {
        self.sin_int[j]
    }

    pub(crate) fn sin_face(&self, j: usize) -> f64 {
        self.sin_face[j]
    }

    /// Same stretch law with twice the nodes in each direction.
    pub fn refined(&self) -> Result<Self> {
        build_grid_with(
            &self.metric,
            self.r_max,
            2 * self.nr(),
            2 * self.n_theta(),
            if self.ratio == 1.0 {
                Stretch::Uniform
            } else {
                Stretch::Ratio(math::sqrt(self.ratio))
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn flat_disc() {
        let m = WarpedMetric::euclidean(2).unwrap();
        let g = build_grid(&m, 1.0, 16, 16).unwrap();
        assert_eq!(g.cell_count(), 256);
        for i in 0..16 {
            for j in 0..16 {
                assert!(g.jacobian(i, j) > 0.0);
                assert!(g.volume(i, j) > 0.0);
            }
        }
        assert_relative_eq!(g.radii()[0], 0.5 / 16.5, epsilon = 1e-15);
        assert_eq!(*g.radii().last().unwrap(), 1.0);
    }

    #[test]
    fn volumes_add_up() {
        // Total volume over all cells is ∫₀^{ρ_Nr} f² dr · 2 (n = 3).
        let m = WarpedMetric::hyperbolic(1.0, 3).unwrap();
        let g = build_grid(&m, 2.0, 16, 12).unwrap();
        let mut total = 0.0;
        for i in 0..g.nr() {
            for j in 0..g.n_theta() {
                total += g.volume(i, j);
            }
        }
        let rho = g.faces()[g.nr()];
        let exact = 2.0 * ((2.0 * rho).sinh() / 4.0 - rho / 2.0);
        assert_relative_eq!(total, exact, max_relative = 1e-12);
    }

    #[test]
    fn stretched_grid_respects_bound() {
        let m = WarpedMetric::hyperbolic(1.0, 3).unwrap();
        let g = build_grid(&m, 8.0, 128, 64).unwrap();
        assert!(g.max_stretch() <= MAX_STRETCH);
        let g = build_grid_with(&m, 8.0, 64, 16, Stretch::FirstWidth(0.02)).unwrap();
        assert!(g.max_stretch() <= MAX_STRETCH);
        assert_relative_eq!(g.cell_widths()[0], 0.02, max_relative = 1e-9);
        assert_relative_eq!(*g.radii().last().unwrap(), 8.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_stretch() {
        let m = WarpedMetric::euclidean(3).unwrap();
        assert!(matches!(
            build_grid_with(&m, 1000.0, 16, 16, Stretch::FirstWidth(0.01)),
            Err(Error::StretchTooLarge { .. })
        ));
        assert!(matches!(
            build_grid_with(&m, 1.0, 16, 16, Stretch::Ratio(1.5)),
            Err(Error::StretchTooLarge { .. })
        ));
        assert!(build_grid(&m, 1.0, 4, 16).is_err());
    }

    #[test]
    fn refinement_halves_widths() {
        let m = WarpedMetric::euclidean(3).unwrap();
        for stretch in [Stretch::Uniform, Stretch::Ratio(1.04)] {
            let g = build_grid_with(&m, 5.0, 32, 16, stretch).unwrap();
            let fine = g.refined().unwrap();
            let (w, wf) = (g.cell_widths(), fine.cell_widths());
            for (i, wi) in w.iter().enumerate() {
                for k in [2 * i, 2 * i + 1] {
                    let q = 2.0 * wf[k] / wi;
                    assert!(q > 1.0 / MAX_STRETCH && q < MAX_STRETCH, "{i} {q}");
                }
            }
        }
    }
}
