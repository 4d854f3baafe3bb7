//! Fixed-step implicit integration of the network ODEs, periodicity
//! checking, and extraction of the nine blood-flow quantities of interest
//! at the characteristic instants of the last cardiac cycle.

use crate::assembly::{rhs_in_context, steady_state, Externals, EvalContext, RhsOutput};
use crate::error::{CoreError, Result};
use crate::linalg::solve_in_place;
use crate::network::NetworkModel;
use crate::waveform::Waveform;
use crate::CM3_PER_S_TO_UL_PER_MIN;
use serde::{Deserialize, Serialize};

/// Backward differentiation order. BDF-2 is the default; BDF-1 (backward
/// Euler) is kept for cross-checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BdfOrder {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Step size (s).
    pub dt: f64,
    /// Newton tolerance: converged when residual norm < tol * (1 + |state|).
    pub tol: f64,
    /// Total simulated time (s); must span at least two source periods.
    pub t_end: f64,
    pub bdf_order: BdfOrder,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 1e-3,
            tol: 1e-6,
            t_end: 8.0,
            bdf_order: BdfOrder::Two,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, period: f64) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(CoreError::InvalidConfig(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if !(self.tol > 0.0) {
            return Err(CoreError::InvalidConfig(format!(
                "newton tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.t_end < 2.0 * period {
            return Err(CoreError::InvalidConfig(format!(
                "t_end = {} must span at least two source periods (period = {period})",
                self.t_end
            )));
        }
        Ok(())
    }
}

const MAX_NEWTON_ITERS: usize = 25;

/// Full trajectory of a transient run.
#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub times: Vec<f64>,
    /// Row per time sample, column per node.
    pub node_pressures: Vec<Vec<f64>>,
    /// Row per time sample, column per observable.
    pub observable_flows: Vec<Vec<f64>>,
    pub node_names: Vec<String>,
    pub observable_names: Vec<String>,
    /// Node indices holding the ODE states (capacitor nodes).
    pub state_nodes: Vec<usize>,
    /// Source period (s).
    pub period: f64,
}

impl SimulationResult {
    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Number of complete cycles contained in the trajectory.
    pub fn complete_cycles(&self) -> usize {
        (self.t_end() / self.period + 1e-9).floor() as usize
    }

    /// Start times of each complete cycle.
    pub fn cycle_starts(&self) -> Vec<f64> {
        (0..self.complete_cycles())
            .map(|k| k as f64 * self.period)
            .collect()
    }

    fn interp(&self, column: &dyn Fn(usize) -> f64, t: f64) -> f64 {
        let dt = self.dt();
        let last = self.times.len() - 1;
        let x = (t / dt).clamp(0.0, last as f64);
        let i = (x.floor() as usize).min(last - 1);
        let w = x - i as f64;
        column(i) * (1.0 - w) + column(i + 1) * w
    }

    /// Linearly interpolated node pressure at time `t`.
    pub fn pressure_at(&self, node: usize, t: f64) -> f64 {
        self.interp(&|i| self.node_pressures[i][node], t)
    }

    /// Linearly interpolated observable flow at time `t` (cm³/s).
    pub fn flow_at(&self, observable: usize, t: f64) -> f64 {
        self.interp(&|i| self.observable_flows[i][observable], t)
    }
}

/// Integrates the network over `cfg.t_end` seconds.
///
/// The initial condition is the diastolic steady state (source frozen at
/// the diastolic anchor), which suppresses the startup transient. Stepping
/// is fixed-step BDF-1/BDF-2 with Newton iteration on the (mildly)
/// nonlinear Starling terms; the Jacobian is finite-differenced once per
/// step and refreshed if convergence drags.
pub fn integrate(
    model: &NetworkModel,
    source: &Waveform,
    externals: Externals,
    cfg: &SolverConfig,
) -> Result<SimulationResult> {
    let steady = steady_state(model, source.diastolic(), externals)?;
    let initial: Vec<f64> = model
        .state_nodes()
        .iter()
        .map(|n| steady.node_pressures[n.0])
        .collect();
    integrate_from(model, source, externals, cfg, &initial)
}

/// [`integrate`] with an explicit initial state (capacitor node pressures
/// in state order) instead of the diastolic pre-solve.
pub fn integrate_from(
    model: &NetworkModel,
    source: &Waveform,
    externals: Externals,
    cfg: &SolverConfig,
    initial_state: &[f64],
) -> Result<SimulationResult> {
    cfg.validate(source.period())?;
    let n_steps = (cfg.t_end / cfg.dt).round().max(2.0) as usize;
    let h = cfg.dt;
    let m = model.state_dimension();
    if initial_state.len() != m {
        return Err(CoreError::InvalidParameter(format!(
            "initial state length {} does not match {m} capacitor nodes",
            initial_state.len()
        )));
    }

    let mut ctx = EvalContext::new(model);
    let mut state: Vec<f64> = initial_state.to_vec();
    let mut prev_state = state.clone();

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut node_pressures = Vec::with_capacity(n_steps + 1);
    let mut observable_flows = Vec::with_capacity(n_steps + 1);

    // Row 0: converged initial state under the actual t = 0 source value.
    let out0 = rhs_eval(model, &mut ctx, &state, source, 0.0, externals)?;
    times.push(0.0);
    node_pressures.push(out0.node_pressures);
    observable_flows.push(out0.observable_flows);

    let mut jac = vec![0.0; m * m];
    let mut newton_mat = vec![0.0; m * m];
    let mut rhs_scratch = vec![0.0; m];
    // The Jacobian changes slowly along the trajectory; reuse it across
    // steps and refresh only when Newton starts dragging.
    let mut jac_stale = true;

    for step in 1..=n_steps {
        let t = step as f64 * h;

        // History combination and effective step weight.
        let (hist, gamma): (Vec<f64>, f64) = match (cfg.bdf_order, step) {
            (BdfOrder::One, _) | (BdfOrder::Two, 1) => (state.clone(), 1.0),
            (BdfOrder::Two, _) => (
                state
                    .iter()
                    .zip(&prev_state)
                    .map(|(yn, ynm1)| (4.0 * yn - ynm1) / 3.0)
                    .collect(),
                2.0 / 3.0,
            ),
        };

        // Extrapolated predictor.
        let mut y: Vec<f64> = if step == 1 {
            state.clone()
        } else {
            state
                .iter()
                .zip(&prev_state)
                .map(|(yn, ynm1)| 2.0 * yn - ynm1)
                .collect()
        };

        let converged_output: Option<RhsOutput>;
        if m == 0 {
            converged_output = Some(rhs_eval(model, &mut ctx, &y, source, t, externals)?);
        } else {
            if jac_stale {
                fd_jacobian(model, &mut ctx, &y, source, t, externals, &mut jac)?;
                jac_stale = false;
            }
            let mut iter = 0usize;
            loop {
                let out = rhs_eval(model, &mut ctx, &y, source, t, externals)?;
                let mut res_norm = 0.0;
                let mut y_norm = 0.0;
                for k in 0..m {
                    let r = y[k] - hist[k] - gamma * h * out.state_derivative[k];
                    rhs_scratch[k] = -r;
                    res_norm += r * r;
                    y_norm += y[k] * y[k];
                }
                res_norm = res_norm.sqrt();
                y_norm = y_norm.sqrt();
                if !res_norm.is_finite() {
                    return Err(CoreError::NumericalBlowUp(format!(
                        "non-finite residual at t = {t}"
                    )));
                }
                if res_norm < cfg.tol * (1.0 + y_norm) {
                    converged_output = Some(out);
                    break;
                }
                iter += 1;
                if iter > MAX_NEWTON_ITERS {
                    return Err(CoreError::NewtonDivergence(format!(
                        "step at t = {t} exceeded {MAX_NEWTON_ITERS} Newton iterations"
                    )));
                }
                // A dragging iteration means the reused Jacobian went
                // stale; rebuild it at the current iterate.
                if iter == 5 || iter == 12 {
                    fd_jacobian(model, &mut ctx, &y, source, t, externals, &mut jac)?;
                }
                for i in 0..m {
                    for j in 0..m {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        newton_mat[i * m + j] = delta - gamma * h * jac[i * m + j];
                    }
                }
                solve_in_place(&mut newton_mat, &mut rhs_scratch[..m], m)?;
                for k in 0..m {
                    y[k] += rhs_scratch[k];
                }
            }
            if iter > 4 {
                jac_stale = true;
            }
        }

        let out = converged_output.expect("newton loop sets the converged output");
        prev_state = std::mem::replace(&mut state, y);
        times.push(t);
        node_pressures.push(out.node_pressures);
        observable_flows.push(out.observable_flows);
    }

    Ok(SimulationResult {
        times,
        node_pressures,
        observable_flows,
        node_names: model.node_names().to_vec(),
        observable_names: model
            .observable_names()
            .iter()
            .map(|s| s.to_string())
            .collect(),
        state_nodes: model.state_nodes().iter().map(|n| n.0).collect(),
        period: source.period(),
    })
}

fn rhs_eval(
    model: &NetworkModel,
    ctx: &mut EvalContext,
    state: &[f64],
    source: &Waveform,
    t: f64,
    externals: Externals,
) -> Result<RhsOutput> {
    rhs_in_context(model, ctx, state, source.pressure(t), externals)
}

fn fd_jacobian(
    model: &NetworkModel,
    ctx: &mut EvalContext,
    y: &[f64],
    source: &Waveform,
    t: f64,
    externals: Externals,
    jac: &mut [f64],
) -> Result<()> {
    let m = y.len();
    let base = rhs_eval(model, ctx, y, source, t, externals)?;
    let mut yp = y.to_vec();
    for k in 0..m {
        let eps = (1.0 + y[k].abs()) * f64::EPSILON.sqrt();
        yp[k] = y[k] + eps;
        let pert = rhs_eval(model, ctx, &yp, source, t, externals)?;
        for i in 0..m {
            jac[i * m + k] = (pert.state_derivative[i] - base.state_derivative[i]) / eps;
        }
        yp[k] = y[k];
    }
    Ok(())
}

/// Outcome of comparing the last two simulated cycles.
#[derive(Debug, Clone, Copy)]
pub struct PeriodicityCheck {
    pub periodic: bool,
    /// Max over nodes and time of |P(t) - P(t - T)| on the last cycle (mmHg).
    pub max_deviation: f64,
}

/// Compares the last complete cycle against the penultimate one, pointwise
/// over all node pressures.
pub fn check_periodicity(result: &SimulationResult, eps: f64) -> Result<PeriodicityCheck> {
    let t_period = result.period;
    let cycles = result.complete_cycles();
    if cycles < 2 {
        return Err(CoreError::InsufficientCycles(format!(
            "periodicity check needs at least two complete cycles, trajectory holds {cycles}"
        )));
    }
    let end = cycles as f64 * t_period;
    let start = end - t_period;
    let dt = result.dt();
    let i0 = (start / dt).ceil() as usize;
    let i1 = ((end / dt) as f64).min((result.times.len() - 1) as f64) as usize;

    let n_nodes = result.node_names.len();
    let mut max_dev = 0.0_f64;
    for i in i0..=i1 {
        let t = result.times[i];
        for node in 0..n_nodes {
            let now = result.node_pressures[i][node];
            let before = result.pressure_at(node, t - t_period);
            max_dev = max_dev.max((now - before).abs());
        }
    }
    Ok(PeriodicityCheck {
        periodic: max_dev <= eps,
        max_deviation: max_dev,
    })
}

/// Offsets of the three characteristic instants within one cardiac cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleInstants {
    pub t_ps: f64,
    pub t_es: f64,
    pub t_ed: f64,
}

impl CycleInstants {
    /// Defaults: peak systole at the source pressure peak, end systole at
    /// 0.40 T, end diastole at the cycle end.
    pub fn defaults_for(source: &Waveform) -> CycleInstants {
        let t = source.period();
        CycleInstants {
            t_ps: source.peak_offset(),
            t_es: 0.40 * t,
            t_ed: t,
        }
    }

    pub fn validate(&self, period: f64) -> Result<()> {
        if !(0.0 <= self.t_ps && self.t_ps < self.t_es && self.t_es < self.t_ed)
            || self.t_ed > period * (1.0 + 1e-12)
        {
            return Err(CoreError::InvalidConfig(format!(
                "cycle instants must satisfy 0 <= t_ps < t_es < t_ed <= period (got {:?}, period {period})",
                self
            )));
        }
        Ok(())
    }
}

pub const QOI_NAMES: [&str; 9] = [
    "CRA_ps", "CRA_es", "CRA_ed", "CRV_ps", "CRV_es", "CRV_ed", "LC_ps", "LC_es", "LC_ed",
];

/// The nine scalar outputs: CRA / CRV / lamina cribrosa blood flow at peak
/// systole, end systole and end diastole, in µl/min.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QoIVector {
    #[serde(rename = "CRA_ps")]
    pub cra_ps: f64,
    #[serde(rename = "CRA_es")]
    pub cra_es: f64,
    #[serde(rename = "CRA_ed")]
    pub cra_ed: f64,
    #[serde(rename = "CRV_ps")]
    pub crv_ps: f64,
    #[serde(rename = "CRV_es")]
    pub crv_es: f64,
    #[serde(rename = "CRV_ed")]
    pub crv_ed: f64,
    #[serde(rename = "LC_ps")]
    pub lc_ps: f64,
    #[serde(rename = "LC_es")]
    pub lc_es: f64,
    #[serde(rename = "LC_ed")]
    pub lc_ed: f64,
}

impl QoIVector {
    pub fn from_array(v: [f64; 9]) -> QoIVector {
        QoIVector {
            cra_ps: v[0],
            cra_es: v[1],
            cra_ed: v[2],
            crv_ps: v[3],
            crv_es: v[4],
            crv_ed: v[5],
            lc_ps: v[6],
            lc_es: v[7],
            lc_ed: v[8],
        }
    }

    pub fn as_array(&self) -> [f64; 9] {
        [
            self.cra_ps, self.cra_es, self.cra_ed, self.crv_ps, self.crv_es, self.crv_ed,
            self.lc_ps, self.lc_es, self.lc_ed,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

/// Samples the three observable flows (CRA, CRV, LC order) at the three
/// instants of the last complete cycle and converts to µl/min.
///
/// Callers are expected to have verified periodicity first; extraction
/// itself only needs one complete cycle.
pub fn extract_qoi(result: &SimulationResult, instants: &CycleInstants) -> Result<QoIVector> {
    instants.validate(result.period)?;
    if result.observable_names.len() != 3 {
        return Err(CoreError::InvalidModel(format!(
            "QoI extraction expects exactly 3 observables (CRA, CRV, LC), model has {}",
            result.observable_names.len()
        )));
    }
    let cycles = result.complete_cycles();
    if cycles < 1 {
        return Err(CoreError::InsufficientCycles(
            "trajectory holds no complete cycle".into(),
        ));
    }
    let start = (cycles - 1) as f64 * result.period;
    let mut values = [0.0; 9];
    for (obs, chunk) in values.chunks_exact_mut(3).enumerate().map(|(i, c)| (i, c)) {
        for (j, &t_off) in [instants.t_ps, instants.t_es, instants.t_ed].iter().enumerate() {
            chunk[j] = result.flow_at(obs, start + t_off) * CM3_PER_S_TO_UL_PER_MIN;
        }
    }
    let qoi = QoIVector::from_array(values);
    if !qoi.is_finite() {
        return Err(CoreError::NumericalBlowUp(
            "non-finite quantity of interest".into(),
        ));
    }
    Ok(qoi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Branch, BranchKind, Exposure, NetworkModel, NodeId};
    use approx::assert_abs_diff_eq;

    fn rc_model(r: f64, c: f64) -> NetworkModel {
        NetworkModel::new(
            vec!["ground".into(), "src".into(), "node".into()],
            vec![
                Branch {
                    name: "source".into(),
                    from: NodeId(0),
                    to: NodeId(1),
                    kind: BranchKind::DrivenSource,
                    exposure: Exposure::None,
                },
                Branch {
                    name: "r".into(),
                    from: NodeId(1),
                    to: NodeId(2),
                    kind: BranchKind::Resistor { resistance: r },
                    exposure: Exposure::None,
                },
                Branch {
                    name: "c".into(),
                    from: NodeId(2),
                    to: NodeId(0),
                    kind: BranchKind::Capacitor { capacitance: c },
                    exposure: Exposure::None,
                },
            ],
            vec![("Q".into(), "r".into())],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn rc_step_response_matches_analytic() {
        // Step source 0 -> 1 mmHg with R = C = 1 from a discharged state:
        // P(t) = 1 - exp(-t), so P(1) = 0.6321... within 1e-4.
        let model = rc_model(1.0, 1.0);
        let source = Waveform::constant(1.0);
        let cfg = SolverConfig {
            dt: 1e-3,
            tol: 1e-10,
            t_end: 2.0,
            bdf_order: BdfOrder::Two,
        };
        let result =
            integrate_from(&model, &source, Externals::default(), &cfg, &[0.0]).unwrap();
        let node = 2; // capacitor node
        let expected = 1.0 - (-1.0_f64).exp();
        assert_abs_diff_eq!(result.pressure_at(node, 1.0), expected, epsilon = 1e-4);
        assert_abs_diff_eq!(
            result.pressure_at(node, 2.0),
            1.0 - (-2.0_f64).exp(),
            epsilon = 1e-4
        );
    }

    #[test]
    fn bdf1_and_bdf2_agree_on_rc() {
        let model = rc_model(1.0, 1.0);
        let source = Waveform::constant(1.0);
        let mut cfg = SolverConfig {
            dt: 1e-3,
            tol: 1e-10,
            t_end: 2.0,
            bdf_order: BdfOrder::One,
        };
        let r1 = integrate_from(&model, &source, Externals::default(), &cfg, &[0.0]).unwrap();
        cfg.bdf_order = BdfOrder::Two;
        let r2 = integrate_from(&model, &source, Externals::default(), &cfg, &[0.0]).unwrap();
        let d = (r1.pressure_at(2, 1.0) - r2.pressure_at(2, 1.0)).abs();
        assert!(d < 5e-4, "BDF-1 vs BDF-2 differ by {d}");
    }

    #[test]
    fn integrate_grid_arithmetic() {
        let model = rc_model(1.0, 1.0);
        let source = Waveform::two_harmonic(1.0, 2.0, 1.0).unwrap();
        let cfg = SolverConfig {
            t_end: 8.0,
            ..SolverConfig::default()
        };
        let result = integrate(&model, &source, Externals::default(), &cfg).unwrap();
        assert_eq!(result.times.len(), 8001);
        assert_eq!(result.complete_cycles(), 8);
        assert_eq!(result.cycle_starts().len(), 8);
    }

    #[test]
    fn constant_source_is_trivially_periodic() {
        let model = rc_model(2.0, 0.5);
        let source = Waveform::constant(5.0);
        let cfg = SolverConfig {
            t_end: 3.0,
            ..SolverConfig::default()
        };
        let result = integrate(&model, &source, Externals::default(), &cfg).unwrap();
        let check = check_periodicity(&result, 1e-3).unwrap();
        assert!(check.periodic);
        assert_abs_diff_eq!(check.max_deviation, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn periodicity_needs_two_cycles() {
        let model = rc_model(1.0, 1.0);
        let source = Waveform::two_harmonic(1.0, 2.0, 1.0).unwrap();
        let cfg = SolverConfig {
            t_end: 2.0,
            ..SolverConfig::default()
        };
        let mut result = integrate(&model, &source, Externals::default(), &cfg).unwrap();
        // Truncate to a single cycle.
        result.times.truncate(1001);
        result.node_pressures.truncate(1001);
        result.observable_flows.truncate(1001);
        let err = check_periodicity(&result, 1e-3).unwrap_err();
        assert!(err.to_string().contains("insufficient cycles"));
    }

    #[test]
    fn t_end_must_cover_two_cycles() {
        let model = rc_model(1.0, 1.0);
        let source = Waveform::two_harmonic(1.0, 2.0, 1.0).unwrap();
        let cfg = SolverConfig {
            t_end: 1.5,
            ..SolverConfig::default()
        };
        assert!(integrate(&model, &source, Externals::default(), &cfg).is_err());
    }

    fn constant_flow_result() -> SimulationResult {
        let n = 2001;
        let dt = 1e-3;
        SimulationResult {
            times: (0..n).map(|i| i as f64 * dt).collect(),
            node_pressures: vec![vec![0.0; 2]; n],
            observable_flows: vec![vec![1.0, 1.0, 1.0]; n],
            node_names: vec!["ground".into(), "x".into()],
            observable_names: vec!["CRA".into(), "CRV".into(), "LC".into()],
            state_nodes: vec![],
            period: 1.0,
        }
    }

    #[test]
    fn constant_flow_gives_unit_conversion() {
        let result = constant_flow_result();
        let instants = CycleInstants {
            t_ps: 0.2,
            t_es: 0.4,
            t_ed: 1.0,
        };
        let qoi = extract_qoi(&result, &instants).unwrap();
        for v in qoi.as_array() {
            assert_abs_diff_eq!(v, 6.0e4, epsilon = 1e-9);
        }
    }

    #[test]
    fn instants_outside_cycle_are_rejected() {
        let result = constant_flow_result();
        let bad = CycleInstants {
            t_ps: 0.2,
            t_es: 0.4,
            t_ed: 1.4,
        };
        assert!(extract_qoi(&result, &bad).is_err());
        let unordered = CycleInstants {
            t_ps: 0.5,
            t_es: 0.4,
            t_ed: 1.0,
        };
        assert!(extract_qoi(&result, &unordered).is_err());
    }

    #[test]
    fn peak_instant_dominates() {
        // Synthetic triangular flow peaking at t_ps.
        let n = 2001;
        let dt = 1e-3;
        let mut flows = Vec::with_capacity(n);
        for i in 0..n {
            let tau = (i as f64 * dt).rem_euclid(1.0);
            let v = 1.0 - (tau - 0.2).abs();
            flows.push(vec![v, v, v]);
        }
        let result = SimulationResult {
            observable_flows: flows,
            ..constant_flow_result()
        };
        let instants = CycleInstants {
            t_ps: 0.2,
            t_es: 0.4,
            t_ed: 1.0,
        };
        let qoi = extract_qoi(&result, &instants).unwrap();
        assert!(qoi.cra_ps >= qoi.cra_es);
        assert!(qoi.cra_ps >= qoi.cra_ed);
    }

    #[test]
    fn qoi_serialization_uses_output_names() {
        let qoi = QoIVector::from_array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let json = serde_json::to_value(qoi).unwrap();
        for name in QOI_NAMES {
            assert!(json.get(name).is_some(), "missing key {name}");
        }
    }
}
