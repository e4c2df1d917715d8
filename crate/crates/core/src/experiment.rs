//! The reparametrized-geodesic experiment: a landmark geodesic run at a
//! non-constant speed, tested against an atomic defect measure.
//!
//! For `y = q∘α` the acceleration is `α̈ p(α)`, the gradient `w` of the relaxed
//! functional at zero defect is `α̈ η̇_geo(α)`, and an atom `μ = f² δ_{x0}`
//! lowers the functional to first order when `FR_η(μ, ∂ₜμ) < ⟨μ, -w⟩`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fisher_rao::{fr_atomic_series, AtomicMeasurePath};
use crate::functional::Defect;
use crate::geodesic_pq::PQTrajectory;
use crate::kernel::KernelModel;
use crate::landmark::{integrate_landmarks, jacobian_along, reconstruct_flow, sample_lagrangian, LandmarkState};
use crate::numerics::{trapezoid, PathField, SpatialGrid, TimeGrid};
use crate::riccati::{certify_sufficient, necessary_condition_test, Verdict};

/// Time change `α` of the base geodesic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reparametrization {
    Identity,
    /// `α(t) = 2t³`.
    Cubic,
    /// `α(t) = t` up to `t = 1/4`, then `1/4 + (e^{A(t - 1/4)} - 1)/A`.
    Exp { a: f64 },
}

impl Reparametrization {
    /// `(α, α̇, α̈)` at `t`.
    pub fn eval(self, t: f64) -> (f64, f64, f64) {
        match self {
            Reparametrization::Identity => (t, 1.0, 0.0),
            Reparametrization::Cubic => (2.0 * t * t * t, 6.0 * t * t, 12.0 * t),
            Reparametrization::Exp { a } => {
                if t <= 0.25 {
                    (t, 1.0, 0.0)
                } else {
                    let e = libm::exp(a * (t - 0.25));
                    (0.25 + (e - 1.0) / a, e, a * e)
                }
            }
        }
    }

    pub fn horizon(self) -> f64 {
        self.eval(1.0).0
    }

    fn validate(self) -> Result<()> {
        match self {
            Reparametrization::Exp { a } if !(a > 0.0 && a.is_finite()) => {
                Err(Error::NonMonotoneReparametrization)
            }
            _ => Ok(()),
        }
    }
}

/// Time profile of the test atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `sin(2πt)`.
    Sin2Pi,
    /// `sin(πt)`.
    SinPi,
    Zero,
}

impl Profile {
    pub fn eval(self, t: f64) -> f64 {
        use core::f64::consts::PI;
        match self {
            Profile::Sin2Pi => libm::sin(2.0 * PI * t),
            Profile::SinPi => libm::sin(PI * t),
            Profile::Zero => 0.0,
        }
    }
}

/// Which kernels to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelChoice {
    Clamped,
    Unclamped,
    Both,
}

impl KernelChoice {
    pub fn models(self) -> Vec<KernelModel> {
        match self {
            KernelChoice::Clamped => alloc::vec![KernelModel::Clamped],
            KernelChoice::Unclamped => alloc::vec![KernelModel::Unclamped],
            KernelChoice::Both => alloc::vec![KernelModel::Clamped, KernelModel::Unclamped],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub lambda: f64,
    pub positions: [f64; 2],
    pub reparam: Reparametrization,
    pub probe: f64,
    pub profile: Profile,
    pub nx: usize,
    pub dt_geodesic: f64,
    pub dt_functional: f64,
    pub kernel: KernelChoice,
    /// Horizon of the Jacobian-decay series.
    pub figure_horizon: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            lambda: 15.0,
            positions: [0.25, 0.75],
            reparam: Reparametrization::Cubic,
            probe: 0.5,
            profile: Profile::Sin2Pi,
            nx: 513,
            dt_geodesic: 1e-3,
            dt_functional: 1e-3,
            kernel: KernelChoice::Both,
            figure_horizon: 16.0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Precondition("lambda must be finite and nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.probe) {
            return Err(Error::OutOfDomain { value: self.probe });
        }
        if !(self.dt_geodesic > 0.0 && self.dt_functional > 0.0) {
            return Err(Error::InvalidGrid("time steps must be positive"));
        }
        if !(self.figure_horizon > 0.0) {
            return Err(Error::InvalidGrid("figure horizon must be positive"));
        }
        self.reparam.validate()
    }

    fn initial_state(&self) -> Result<LandmarkState> {
        LandmarkState::new(self.positions.to_vec(), alloc::vec![self.lambda, -self.lambda])
    }

    fn functional_times(&self) -> Result<TimeGrid> {
        TimeGrid::new(1.0, libm::round(1.0 / self.dt_functional).max(2.0) as usize)
    }

    fn atom(&self, times: TimeGrid) -> Result<AtomicMeasurePath> {
        AtomicMeasurePath::from_fn(self.probe, times, |t| self.profile.eval(t))
    }
}

/// The reparametrized geodesic together with its probe series.
#[derive(Debug, Clone, PartialEq)]
pub struct Reparametrized {
    pub traj: PQTrajectory,
    /// `(α, α̇, α̈)` at every time.
    pub alpha: Vec<(f64, f64, f64)>,
    /// `η_geo(α(t), x0)`.
    pub eta_probe: Vec<f64>,
    /// `∂ₛη_geo(s, x0)` at `s = α(t)`.
    pub eta_rate_probe: Vec<f64>,
}

/// Integrates the landmark geodesic up to `α(1)` and samples its Lagrangian
/// fields at `α(t)`: `y(t) = q_geo(α(t))`, `p_y(t) = α̇ p_geo(α(t))`.
pub fn build_reparametrized_geodesic(config: &ExperimentConfig, model: KernelModel) -> Result<Reparametrized> {
    config.validate()?;
    let horizon = config.reparam.horizon();
    let geo_times = TimeGrid::new(horizon, libm::ceil(horizon / config.dt_geodesic - 1e-9).max(1.0) as usize)?;
    let geo = integrate_landmarks(model, &config.initial_state()?, geo_times)?;
    let times = config.functional_times()?;
    let alpha: Vec<(f64, f64, f64)> = (0..times.len()).map(|k| config.reparam.eval(times.time(k))).collect();
    let sample_times: Vec<f64> = alpha.iter().map(|a| a.0.min(horizon)).collect();
    let grid = SpatialGrid::new(config.nx)?;
    let mut nodes = grid.nodes();
    nodes.push(config.probe);
    let s = sample_lagrangian(&geo, &nodes, &sample_times)?;
    let n = grid.len();
    let np = n + 1;
    let mut q = Vec::with_capacity(n * times.len());
    let mut p = Vec::with_capacity(n * times.len());
    let mut eta_probe = Vec::with_capacity(times.len());
    let mut eta_rate_probe = Vec::with_capacity(times.len());
    for (k, a) in alpha.iter().enumerate() {
        let base = k * np;
        q.extend_from_slice(&s.q[base..base + n]);
        p.extend(s.p[base..base + n].iter().map(|v| a.1 * v));
        eta_probe.push(s.eta[base + n]);
        eta_rate_probe.push(s.vx[base + n] * s.eta[base + n]);
    }
    let traj = PQTrajectory::new(PathField::new(times, grid, q)?, PathField::new(times, grid, p)?)?;
    Ok(Reparametrized { traj, alpha, eta_probe, eta_rate_probe })
}

/// `⟨μ, -w⟩ = -∫ f² α̈ ∂ₛη_geo(α(t), x0) dt`.
pub fn compute_pairing(config: &ExperimentConfig, rep: &Reparametrized) -> Result<f64> {
    if rep.alpha.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(Error::NonMonotoneReparametrization);
    }
    let times = rep.traj.times;
    let vals: Vec<f64> = (0..times.len())
        .map(|k| {
            let f = config.profile.eval(times.time(k));
            -f * f * rep.alpha[k].2 * rep.eta_rate_probe[k]
        })
        .collect();
    Ok(trapezoid(&vals, times.dt()))
}

/// Values for one kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantReport {
    pub kernel: KernelModel,
    pub fr_value: f64,
    pub pairing_value: f64,
    /// `fr_value < pairing_value`.
    pub inequality_holds: bool,
    /// `⟨μ, -w⟩` with `w` from the acceleration of the sampled path.
    pub pairing_via_w: f64,
    pub necessary_margin: f64,
    pub sufficient_solved: bool,
    pub verdict: Verdict,
    /// `η_geo(α(1), x0)`.
    pub eta_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureData {
    /// `(s, φ(s, ·))` on a coarse grid at a few geodesic times.
    pub flow_snapshots: Vec<(f64, Vec<f64>)>,
    pub snapshot_grid: Vec<f64>,
    /// `(s, η(s, x0))` up to the figure horizon.
    pub jacobian_decay: Vec<(f64, f64)>,
    /// `(t, α, α̇, α̈)`.
    pub reparametrization: Vec<(f64, f64, f64, f64)>,
    /// `w(t, x)` on a coarse lattice, as `(t, x, w)`.
    pub riccati_rhs: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<(KernelModel, Result<VariantReport>)>,
    pub figures: Option<FigureData>,
}

impl ExperimentReport {
    pub fn row(&self, kernel: KernelModel) -> Option<&Result<VariantReport>> {
        self.rows.iter().find(|(k, _)| *k == kernel).map(|(_, r)| r)
    }
}

/// Runs one kernel: FR of the atom, both pairings and the optimality verdicts.
pub fn run_variant(config: &ExperimentConfig, model: KernelModel) -> Result<VariantReport> {
    let rep = build_reparametrized_geodesic(config, model)?;
    let atom = config.atom(rep.traj.times)?;
    let fr_value = fr_atomic_series(&atom, &rep.eta_probe)?;
    let pairing_value = compute_pairing(config, &rep)?;
    let candidates = [atom];
    let necessary = necessary_condition_test(&rep.traj, Defect::Zero, &candidates)?;
    let sufficient = certify_sufficient(&rep.traj, Defect::Zero)?;
    let verdict = necessary.verdict.combine(sufficient.verdict)?;
    let pairing_via_w = necessary.candidate_terms[0].1;
    let necessary_margin = necessary.necessary_margins[0];
    Ok(VariantReport {
        kernel: model,
        fr_value,
        pairing_value,
        inequality_holds: fr_value < pairing_value,
        pairing_via_w,
        necessary_margin,
        sufficient_solved: sufficient.sufficient_status.map(|s| s.solved()).unwrap_or(false),
        verdict,
        eta_end: *rep.eta_probe.last().unwrap_or(&f64::NAN),
    })
}

/// Plot-ready series for the clamped kernel.
pub fn figure_data(config: &ExperimentConfig) -> Result<FigureData> {
    config.validate()?;
    let model = KernelModel::Clamped;
    let state = config.initial_state()?;
    let horizon = config.reparam.horizon();
    let steps = libm::ceil(horizon / config.dt_geodesic - 1e-9).max(1.0) as usize;
    let per = (steps / 4).max(1);
    let geo = integrate_landmarks(model, &state, TimeGrid::new(horizon, per * 4)?)?;
    let coarse = SpatialGrid::new(65)?;
    let flow = reconstruct_flow(&geo, coarse, per)?;
    let flow_snapshots = (0..flow.phi.times().len())
        .map(|k| (flow.phi.times().time(k), flow.phi.row(k).to_vec()))
        .collect();

    let long_steps = libm::ceil(config.figure_horizon / config.dt_geodesic - 1e-9).max(1.0) as usize;
    let long = integrate_landmarks(model, &state, TimeGrid::new(config.figure_horizon, long_steps)?)?;
    let eta = jacobian_along(&long, config.probe)?;
    let stride = (long_steps / 320).max(1);
    let jacobian_decay = (0..=long_steps).step_by(stride).map(|k| (long.times().time(k), eta[k])).collect();

    let rep = build_reparametrized_geodesic(config, model)?;
    let times = rep.traj.times;
    let reparametrization =
        rep.alpha.iter().enumerate().map(|(k, a)| (times.time(k), a.0, a.1, a.2)).collect();
    let w = crate::riccati::compute_w(&rep.traj, Defect::Zero)?;
    let (ts, xs) = ((times.steps() / 50).max(1), ((config.nx - 1) / 32).max(1));
    let mut riccati_rhs = Vec::new();
    for k in (0..times.len()).step_by(ts) {
        for i in (0..config.nx).step_by(xs) {
            riccati_rhs.push((times.time(k), w.grid().node(i), w.get(k, i)));
        }
    }
    Ok(FigureData { flow_snapshots, snapshot_grid: coarse.nodes(), jacobian_decay, reparametrization, riccati_rhs })
}

/// Every requested kernel, each row carrying its own outcome.
pub fn run_section7(config: &ExperimentConfig, with_figures: bool) -> Result<ExperimentReport> {
    config.validate()?;
    let rows = config.kernel.models().into_iter().map(|m| (m, run_variant(config, m))).collect();
    let figures = if with_figures { Some(figure_data(config)?) } else { None };
    Ok(ExperimentReport { config: *config, rows, figures })
}
