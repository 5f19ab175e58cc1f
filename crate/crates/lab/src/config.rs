//! Run configuration: one TOML document per run.
//!
//! Every section has defaults except `[metric]`. Unknown keys are rejected so a
//! typo never silently falls back to a default.

use std::path::Path;

use asymdir_core::barriers::BarrierSearch;
use asymdir_core::boundary::{BoundaryData, ZonalPreset};
use asymdir_core::criteria::{CriteriaOptions, Criterion, Form};
use asymdir_core::experiments::OscSample;
use asymdir_core::grid::Stretch;
use asymdir_core::manifold::{ClosedForm, CurvatureProfile, MarchSearch, TailLaw, WarpedMetric};
use asymdir_core::ode::StepControl;
use asymdir_core::solver::{Damping, GridPlan, InitialGuess, Iteration, SolverConfig};
use asymdir_core::Equation;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Classify,
    VerifyBarrier,
    Solve,
    Experiment,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::VerifyBarrier => "verify-barrier",
            Command::Solve => "solve",
            Command::Experiment => "experiment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub metric: MetricSpec,
    #[serde(default)]
    pub equation: EquationSpec,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub criteria: CriteriaSpec,
    #[serde(default)]
    pub barrier: BarrierSpec,
    #[serde(default)]
    pub experiment: ExperimentSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MetricSpec {
    Euclidean {
        n: u32,
    },
    Hyperbolic {
        n: u32,
        #[serde(default = "one")]
        kappa: f64,
    },
    March {
        n: u32,
        c: f64,
        #[serde(default)]
        search: MarchSearchSpec,
    },
    Curvature {
        n: u32,
        tail: TailSpec,
        onset: f64,
        /// Constant curvature near the pole; defaults to the tail value at the onset.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inner: Option<f64>,
        #[serde(rename = "R_max")]
        r_max: f64,
        #[serde(default)]
        ode: OdeSpec,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarchSearchSpec {
    pub ratio: f64,
    pub a_max: f64,
}

impl Default for MarchSearchSpec {
    fn default() -> Self {
        let d = MarchSearch::default();
        Self {
            ratio: d.ratio,
            a_max: d.a_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdeSpec {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub max_rel: f64,
}

impl Default for OdeSpec {
    fn default() -> Self {
        let d = StepControl::default();
        Self {
            rtol: d.rtol,
            atol: d.atol,
            h_init: d.h_init,
            h_min: d.h_min,
            max_rel: d.max_rel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TailSpec {
    PowerLog { c: f64 },
    Ansc { c: f64, eps: f64 },
    Constant { k0: f64 },
    Zero {},
}

impl TailSpec {
    pub fn law(&self) -> TailLaw {
        match *self {
            TailSpec::PowerLog { c } => TailLaw::PowerLog { c },
            TailSpec::Ansc { c, eps } => TailLaw::Ansc { c, eps },
            TailSpec::Constant { k0 } => TailLaw::Constant { k0 },
            TailSpec::Zero {} => TailLaw::Zero,
        }
    }
}

impl MetricSpec {
    pub fn n(&self) -> u32 {
        match *self {
            MetricSpec::Euclidean { n }
            | MetricSpec::Hyperbolic { n, .. }
            | MetricSpec::March { n, .. }
            | MetricSpec::Curvature { n, .. } => n,
        }
    }

    /// Core constructor arguments for this metric.
    pub fn plan(&self) -> MetricPlan {
        match self {
            MetricSpec::Euclidean { n } => MetricPlan::Closed {
                kind: ClosedForm::Euclidean,
                n: *n,
            },
            MetricSpec::Hyperbolic { n, kappa } => MetricPlan::Closed {
                kind: ClosedForm::Hyperbolic { kappa: *kappa },
                n: *n,
            },
            MetricSpec::March { n, c, search } => MetricPlan::March {
                c: *c,
                n: *n,
                search: MarchSearch {
                    ratio: search.ratio,
                    a_max: search.a_max,
                },
            },
            MetricSpec::Curvature {
                n,
                tail,
                onset,
                inner,
                r_max,
                ode,
            } => MetricPlan::Curvature {
                tail: tail.law(),
                onset: *onset,
                inner: *inner,
                n: *n,
                r_max: *r_max,
                ctl: StepControl {
                    rtol: ode.rtol,
                    atol: ode.atol,
                    h_init: ode.h_init,
                    h_min: ode.h_min,
                    max_rel: ode.max_rel,
                },
            },
        }
    }

    pub fn build(&self) -> asymdir_core::Result<WarpedMetric> {
        self.plan().build()
    }

    /// One-line human description for reports.
    pub fn describe(&self) -> String {
        match self {
            MetricSpec::Euclidean { n } => format!("euclidean, n = {n}, f(r) = r"),
            MetricSpec::Hyperbolic { n, kappa } => {
                format!("hyperbolic, n = {n}, f(r) = sinh({kappa} r)/{kappa}")
            }
            MetricSpec::March { n, c, .. } => {
                format!("march, n = {n}, f(r) = r (log r)^{c} beyond the shift")
            }
            MetricSpec::Curvature {
                n,
                tail,
                onset,
                r_max,
                ..
            } => {
                let law = match tail {
                    TailSpec::PowerLog { c } => format!("K = -{c}/(r^2 log r)"),
                    TailSpec::Ansc { c, eps } => format!("K = -{c}/(r^2 (log r)^(1+{eps}))"),
                    TailSpec::Constant { k0 } => format!("K = -{k0}^2"),
                    TailSpec::Zero {} => "K = 0".to_string(),
                };
                format!("curvature, n = {n}, {law} from r = {onset}, integrated to R_max = {r_max}")
            }
        }
    }
}

// Empty-struct variants so stray keys next to `kind` are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EquationSpec {
    Minimal {},
    PLaplace { p: f64 },
    Harmonic {},
}

impl Default for EquationSpec {
    fn default() -> Self {
        EquationSpec::Minimal {}
    }
}

#[derive(Debug, Clone, Copy)]
pub enum MetricPlan {
    Closed {
        kind: ClosedForm,
        n: u32,
    },
    March {
        c: f64,
        n: u32,
        search: MarchSearch,
    },
    Curvature {
        tail: TailLaw,
        onset: f64,
        inner: Option<f64>,
        n: u32,
        r_max: f64,
        ctl: StepControl,
    },
}

impl MetricPlan {
    pub fn build(&self) -> asymdir_core::Result<WarpedMetric> {
        match *self {
            MetricPlan::Closed { kind, n } => WarpedMetric::closed_form(kind, n),
            MetricPlan::March { c, n, search } => WarpedMetric::march_with(c, n, search),
            MetricPlan::Curvature {
                tail,
                onset,
                inner,
                n,
                r_max,
                ctl,
            } => {
                let mut profile = CurvatureProfile::new(tail, onset)?;
                if let Some(k) = inner {
                    profile = profile.with_inner(k)?;
                }
                WarpedMetric::from_curvature_with(profile, n, r_max, ctl)
            }
        }
    }
}

impl EquationSpec {
    pub fn equation(&self) -> Equation {
        match *self {
            EquationSpec::Minimal {} => Equation::Minimal,
            EquationSpec::PLaplace { p } => Equation::PLaplace { p },
            EquationSpec::Harmonic {} => Equation::Harmonic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundarySpec {
    Constant { value: f64 },
    Cos {},
    ScaledCos { eps: f64 },
}

impl Default for BoundarySpec {
    fn default() -> Self {
        BoundarySpec::Cos {}
    }
}

impl BoundarySpec {
    pub fn preset(&self) -> ZonalPreset {
        match *self {
            BoundarySpec::Constant { value } => ZonalPreset::Constant(value),
            BoundarySpec::Cos {} => ZonalPreset::Cos,
            BoundarySpec::ScaledCos { eps } => ZonalPreset::ScaledCos(eps),
        }
    }

    pub fn build(&self, n: u32) -> asymdir_core::Result<BoundaryData> {
        BoundaryData::preset(self.preset(), n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "R_max")]
    pub r_max: f64,
    pub nr: usize,
    pub n_theta: usize,
    /// Geometric ratio of radial spacings; excludes `first_width`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stretch_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_width: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            r_max: 4.0,
            nr: 128,
            n_theta: 64,
            stretch_ratio: None,
            first_width: None,
        }
    }
}

impl GridSpec {
    pub fn stretch(&self) -> Result<Stretch, RunError> {
        match (self.stretch_ratio, self.first_width) {
            (None, None) => Ok(Stretch::Uniform),
            (Some(s), None) => Ok(Stretch::Ratio(s)),
            (None, Some(h)) => Ok(Stretch::FirstWidth(h)),
            (Some(_), Some(_)) => Err(RunError::Config(
                "grid: set at most one of stretch_ratio and first_width".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum IterationSpec {
    #[default]
    Picard,
    DampedNewton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub iteration: IterationSpec,
    pub tol: f64,
    pub max_iter: usize,
    /// Defaults depend on the equation when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<f64>,
    pub shrink: f64,
    pub min_step: f64,
    /// Constant initial guess; boundary extension when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_value: Option<f64>,
    /// Barrier sandwich check after `solve`.
    pub sandwich: bool,
    pub sandwich_tol: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = Damping::default();
        Self {
            iteration: IterationSpec::Picard,
            tol: 1e-9,
            max_iter: 200,
            delta: None,
            relaxation: None,
            shrink: d.shrink,
            min_step: d.min_step,
            initial_value: None,
            sandwich: false,
            sandwich_tol: 1e-6,
        }
    }
}

impl SolverSpec {
    pub fn config(&self, equation: Equation) -> SolverConfig {
        let mut c = SolverConfig::new(equation);
        c.iteration = match self.iteration {
            IterationSpec::Picard => Iteration::Picard,
            IterationSpec::DampedNewton => Iteration::DampedNewton,
        };
        c.tol = self.tol;
        c.max_iter = self.max_iter;
        if let Some(d) = self.delta {
            c.delta = d;
        }
        if let Some(w) = self.relaxation {
            c.damping.relaxation = w;
        }
        c.damping.shrink = self.shrink;
        c.damping.min_step = self.min_step;
        c.initial = match self.initial_value {
            Some(v) => InitialGuess::Constant(v),
            None => InitialGuess::BoundaryExtension,
        };
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormSpec {
    Nested,
    Swapped,
}

impl FormSpec {
    pub fn form(&self) -> Form {
        match self {
            FormSpec::Nested => Form::Nested,
            FormSpec::Swapped => Form::Swapped,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FormSpec::Nested => "nested",
            FormSpec::Swapped => "swapped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriteriaSpec {
    pub horizon: f64,
    pub tail_rtol: f64,
    /// Orders in which the J integral is evaluated; empty skips it.
    pub j_forms: Vec<FormSpec>,
    /// Exponents `p` for the p-barrier integral (each in `(2, n)`).
    pub p: Vec<f64>,
    pub p_form: FormSpec,
    /// Exponents `p` for the volume parabolicity test.
    pub parabolicity_p: Vec<f64>,
    /// Allowed negative part of `f''` in the convexity audit.
    pub tol_convex: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSpec>,
}

impl Default for CriteriaSpec {
    fn default() -> Self {
        let d = CriteriaOptions::default();
        Self {
            horizon: d.horizon,
            tail_rtol: d.tail_rtol,
            j_forms: vec![FormSpec::Nested, FormSpec::Swapped],
            p: Vec::new(),
            p_form: FormSpec::Nested,
            parabolicity_p: Vec::new(),
            tol_convex: 1e-8,
            scan: None,
        }
    }
}

impl CriteriaSpec {
    pub fn options(&self) -> CriteriaOptions {
        CriteriaOptions {
            horizon: self.horizon,
            tail_rtol: self.tail_rtol,
        }
    }
}

/// One-parameter metric family scanned in `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilySpec {
    /// `f = r (log r)^c`.
    March,
    /// `K = -c/(r² log r)` from the metric section's onset (default 3).
    PowerLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionSpec {
    J,
    PIntegral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub family: FamilySpec,
    pub criterion: CriterionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
    /// Radius to which power-log family members are integrated.
    #[serde(default = "scan_r_max", rename = "R_max")]
    pub r_max: f64,
}

fn scan_r_max() -> f64 {
    1e6
}

impl ScanSpec {
    pub fn criterion(&self) -> Result<Criterion, RunError> {
        match (self.criterion, self.p) {
            (CriterionSpec::J, None) => Ok(Criterion::J),
            (CriterionSpec::PIntegral, Some(p)) => Ok(Criterion::PIntegral { p }),
            (CriterionSpec::J, Some(_)) => Err(RunError::Config(
                "criteria.scan: p is only used with p-integral".into(),
            )),
            (CriterionSpec::PIntegral, None) => {
                Err(RunError::Config("criteria.scan: p-integral needs p".into()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierSpec {
    /// Outer radius of the residual check.
    #[serde(rename = "R_max")]
    pub r_max: f64,
    pub nr: usize,
    pub n_theta: usize,
    pub max_doublings: u32,
    /// Export the residual field at this `k` instead of the certified one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

impl Default for BarrierSpec {
    fn default() -> Self {
        let d = BarrierSearch::default();
        Self {
            r_max: d.r_max,
            nr: d.nr,
            n_theta: d.n_theta,
            max_doublings: d.max_doublings,
            k: None,
        }
    }
}

impl BarrierSpec {
    pub fn search(&self, criteria: &CriteriaSpec) -> BarrierSearch {
        BarrierSearch {
            r_max: self.r_max,
            nr: self.nr,
            n_theta: self.n_theta,
            max_doublings: self.max_doublings,
            criteria: criteria.options(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[default]
    BoundaryConvergence,
    Liouville,
    Harnack,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::BoundaryConvergence => "boundary-convergence",
            ExperimentKind::Liouville => "liouville",
            ExperimentKind::Harnack => "harnack",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub radii: Vec<f64>,
    pub n_theta: usize,
    pub first_width: f64,
    pub max_ratio: f64,
    #[serde(default)]
    pub harnack: HarnackSpec,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let p = GridPlan::default();
        Self {
            kind: ExperimentKind::BoundaryConvergence,
            radii: vec![4.0, 8.0, 16.0, 32.0],
            n_theta: p.n_theta,
            first_width: p.first_width,
            max_ratio: p.max_ratio,
            harnack: HarnackSpec::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn plan(&self) -> GridPlan {
        GridPlan {
            n_theta: self.n_theta,
            first_width: self.first_width,
            max_ratio: self.max_ratio,
        }
    }
}

/// Oscillation-decay replay. Samples come from `samples` when given,
/// otherwise from a solve on `B(o, solve_radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnackSpec {
    #[serde(rename = "C0")]
    pub c0: f64,
    /// Rows `[t, M(t), m(t)]` with dyadic `t`.
    pub samples: Vec<[f64; 3]>,
    #[serde(rename = "solve_R")]
    pub solve_radius: f64,
    /// Scale pairs `[r, R]`; all pairs from the smallest scale when empty.
    pub pairs: Vec<[f64; 2]>,
}

impl Default for HarnackSpec {
    fn default() -> Self {
        Self {
            c0: 4.0,
            samples: Vec::new(),
            solve_radius: 32.0,
            pairs: Vec::new(),
        }
    }
}

impl HarnackSpec {
    pub fn osc_samples(&self) -> Vec<OscSample> {
        self.samples
            .iter()
            .map(|s| OscSample {
                t: s[0],
                upper: s[1],
                lower: s[2],
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

/// Scan family, criterion, `(lo, hi)`, tolerance and horizon.
pub type ScanPlan = (FamilySpec, Criterion, (f64, f64), f64, f64);

/// Every config value converted to the core type it feeds. Nothing is
/// computed; this is the whole surface a run can reach.
#[derive(Debug, Clone)]
pub struct Lowered {
    pub metric: MetricPlan,
    pub equation: Equation,
    pub boundary: ZonalPreset,
    pub grid: (f64, usize, usize, Stretch),
    pub solver: SolverConfig,
    pub sandwich: Option<f64>,
    pub criteria: CriteriaOptions,
    pub j_forms: Vec<Form>,
    pub p: Vec<f64>,
    pub p_form: Form,
    pub parabolicity_p: Vec<f64>,
    pub tol_convex: f64,
    pub scan: Option<ScanPlan>,
    pub barrier: BarrierSearch,
    pub barrier_k: Option<f64>,
    pub experiment: ExperimentKind,
    pub radii: Vec<f64>,
    pub plan: GridPlan,
    pub harnack_c0: f64,
    pub harnack_samples: Vec<OscSample>,
    pub harnack_pairs: Vec<[f64; 2]>,
    pub harnack_radius: f64,
}

impl RunConfig {
    /// Convert to core types, rejecting contradictory settings.
    pub fn lower(&self) -> Result<Lowered, RunError> {
        let equation = self.equation.equation();
        let scan = match &self.criteria.scan {
            Some(s) => Some((s.family, s.criterion()?, (s.lo, s.hi), s.tol, s.r_max)),
            None => None,
        };
        let h = &self.experiment.harnack;
        Ok(Lowered {
            metric: self.metric.plan(),
            equation,
            boundary: self.boundary.preset(),
            grid: (
                self.grid.r_max,
                self.grid.nr,
                self.grid.n_theta,
                self.grid.stretch()?,
            ),
            solver: self.solver.config(equation),
            sandwich: self.solver.sandwich.then_some(self.solver.sandwich_tol),
            criteria: self.criteria.options(),
            j_forms: self.criteria.j_forms.iter().map(|f| f.form()).collect(),
            p: self.criteria.p.clone(),
            p_form: self.criteria.p_form.form(),
            parabolicity_p: self.criteria.parabolicity_p.clone(),
            tol_convex: self.criteria.tol_convex,
            scan,
            barrier: self.barrier.search(&self.criteria),
            barrier_k: self.barrier.k,
            experiment: self.experiment.kind,
            radii: self.experiment.radii.clone(),
            plan: self.experiment.plan(),
            harnack_c0: h.c0,
            harnack_samples: h.osc_samples(),
            harnack_pairs: h.pairs.clone(),
            harnack_radius: h.solve_radius,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    /// Canonical serialisation; the hash is taken over this text so layout
    /// and comments in the source file do not matter.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("run config serialises")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
