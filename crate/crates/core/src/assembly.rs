//! Kirchhoff assembly of the network equations.
//!
//! States are the capacitor node pressures. At every evaluation the
//! pressures of the remaining (interior) nodes are resolved from Kirchhoff's
//! current law; with Starling branches present this is a small damped-Newton
//! solve, which reduces to a single linear solve for purely resistive
//! networks. The assembled system is an explicit ODE: for each capacitor
//! node `C_i dP_i/dt = sum of flows into the node`.

use crate::error::{CoreError, Result};
use crate::linalg::solve_in_place;
use crate::network::{
    starling_resistance, starling_resistance_dpi, Branch, BranchKind, Exposure, NetworkModel,
    NodeId,
};
use crate::waveform::Waveform;

/// External compartment pressures (mmHg) seen by exposed branches.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Externals {
    pub iop: f64,
    pub rltp: f64,
}

impl Externals {
    fn pressure(&self, exposure: Exposure) -> f64 {
        match exposure {
            Exposure::None => 0.0,
            Exposure::Iop => self.iop,
            Exposure::Rltp => self.rltp,
        }
    }
}

/// Result of one right-hand-side evaluation.
#[derive(Debug, Clone)]
pub struct RhsOutput {
    /// dP/dt for each state (mmHg/s), in state order.
    pub state_derivative: Vec<f64>,
    /// Pressure at every node (mmHg), interior nodes resolved.
    pub node_pressures: Vec<f64>,
    /// Flow through each named observable branch (cm³/s).
    pub observable_flows: Vec<f64>,
    /// Flow through every branch (cm³/s); capacitor rows hold the
    /// charging current, source rows the delivered flow.
    pub branch_flows: Vec<f64>,
}

/// Steady solution of the resistive network (capacitor currents zero).
#[derive(Debug, Clone)]
pub struct SteadySolution {
    pub node_pressures: Vec<f64>,
    pub observable_flows: Vec<f64>,
    pub branch_flows: Vec<f64>,
}

const MAX_KCL_ITERS: usize = 60;
const KCL_TOL: f64 = 1e-12;

/// Reusable scratch for repeated evaluations of one model. Each concurrent
/// evaluation owns its context; the model itself is shared immutably.
#[derive(Debug, Clone)]
pub struct EvalContext {
    pressures: Vec<f64>,
    slot: Vec<usize>,
    residual: Vec<f64>,
    scale: Vec<f64>,
    jacobian: Vec<f64>,
    newton_step: Vec<f64>,
    trial: Vec<f64>,
    warm_interior: Vec<f64>,
    warm_valid: bool,
}

impl EvalContext {
    pub fn new(model: &NetworkModel) -> Self {
        let n = model.node_count();
        let m = model.interior_nodes().len().max(model.node_count());
        EvalContext {
            pressures: vec![0.0; n],
            slot: vec![usize::MAX; n],
            residual: vec![0.0; m],
            scale: vec![0.0; m],
            jacobian: vec![0.0; m * m],
            newton_step: vec![0.0; m],
            trial: vec![0.0; m],
            warm_interior: vec![0.0; model.interior_nodes().len()],
            warm_valid: false,
        }
    }

    pub fn invalidate_warm_start(&mut self) {
        self.warm_valid = false;
    }
}

/// Flow and its pressure derivatives for a resistive branch (positive from
/// `from` to `to`). `k_scale` attenuates the Starling steepness; it is 1
/// for the physical model and ramps from 0 during continuation, where the
/// scaled problem at 0 is linear.
fn branch_flow_and_derivatives(
    branch: &Branch,
    p_from: f64,
    p_to: f64,
    externals: Externals,
    k_scale: f64,
) -> (f64, f64, f64) {
    match branch.kind {
        BranchKind::Resistor { resistance } => {
            let g = 1.0 / resistance;
            ((p_from - p_to) * g, g, -g)
        }
        BranchKind::Starling {
            base_resistance,
            steepness,
        } => {
            // Internal pressure taken at the segment midpoint.
            let k = steepness * k_scale;
            let p_int = 0.5 * (p_from + p_to);
            let p_ext = externals.pressure(branch.exposure);
            let (r, dr_dpi) = if k > 0.0 {
                (
                    starling_resistance(base_resistance, p_int, p_ext, k),
                    starling_resistance_dpi(base_resistance, p_int, p_ext, k),
                )
            } else {
                (2.0 * base_resistance, 0.0)
            };
            let q = (p_from - p_to) / r;
            // dq/dp = 1/R - q/R * dR/dp, with dR/dp_from = dR/dp_to = dR/dpi / 2.
            let common = -q / r * 0.5 * dr_dpi;
            (q, 1.0 / r + common, -1.0 / r + common)
        }
        _ => unreachable!("flow requested for non-resistive branch"),
    }
}

pub(crate) fn resistive_flow(branch: &Branch, pressures: &[f64], externals: Externals) -> f64 {
    let (q, _, _) = branch_flow_and_derivatives(
        branch,
        pressures[branch.from.0],
        pressures[branch.to.0],
        externals,
        1.0,
    );
    q
}

/// Solves Kirchhoff's current law for the pressures of `unknowns`, in
/// place. Known pressures (ground, sources, states) must already be set;
/// unknown entries are used as the initial guess.
fn solve_kcl(
    model: &NetworkModel,
    ctx: &mut EvalContext,
    unknowns: &[NodeId],
    externals: Externals,
    k_scale: f64,
) -> Result<()> {
    let m = unknowns.len();
    if m == 0 {
        return Ok(());
    }
    for s in ctx.slot.iter_mut() {
        *s = usize::MAX;
    }
    for (k, node) in unknowns.iter().enumerate() {
        ctx.slot[node.0] = k;
    }

    let p_ref = 1.0
        + ctx
            .pressures
            .iter()
            .enumerate()
            .filter(|(i, _)| ctx.slot[*i] == usize::MAX)
            .map(|(_, p)| p.abs())
            .fold(0.0, f64::max);
    // Pressures in this model live within a few hundred mmHg; larger
    // Newton steps indicate a near-singular Jacobian and get clamped.
    let step_cap = 10.0 * p_ref;

    let mut residual_norm = eval_kcl(model, ctx, externals, m, true, k_scale)?;
    for iter in 0..MAX_KCL_ITERS {
        if residual_norm < KCL_TOL * p_ref {
            return Ok(());
        }
        // Newton step: J dx = -F.
        ctx.newton_step[..m].copy_from_slice(&ctx.residual[..m]);
        for v in &mut ctx.newton_step[..m] {
            *v = -*v;
        }
        {
            let jac = &mut ctx.jacobian[..m * m];
            let rhs = &mut ctx.newton_step[..m];
            solve_in_place(jac, rhs, m)?;
        }
        let step_norm = ctx.newton_step[..m]
            .iter()
            .fold(0.0_f64, |a, v| a.max(v.abs()));
        if step_norm > step_cap {
            let shrink = step_cap / step_norm;
            for v in &mut ctx.newton_step[..m] {
                *v *= shrink;
            }
        }

        for (k, node) in unknowns.iter().enumerate() {
            ctx.trial[k] = ctx.pressures[node.0];
        }

        // Backtracking line search on the residual norm.
        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..16 {
            for (k, node) in unknowns.iter().enumerate() {
                ctx.pressures[node.0] = ctx.trial[k] + damping * ctx.newton_step[k];
            }
            let new_norm = eval_kcl(model, ctx, externals, m, true, k_scale)?;
            if new_norm.is_finite() && (new_norm < residual_norm || new_norm < KCL_TOL * p_ref) {
                residual_norm = new_norm;
                accepted = true;
                break;
            }
            damping *= 0.5;
        }
        if !accepted {
            return Err(CoreError::NewtonDivergence(format!(
                "interior network solve stalled at iteration {iter} (residual {residual_norm:.3e})"
            )));
        }
    }
    if residual_norm < 1e-8 * p_ref {
        // Within a loose tolerance; accept rather than abort mid-trajectory.
        return Ok(());
    }
    Err(CoreError::NewtonDivergence(format!(
        "interior network solve did not converge ({MAX_KCL_ITERS} iterations, residual {residual_norm:.3e})"
    )))
}

/// Newton with continuation: tries the physical problem directly and, on
/// divergence, ramps the Starling steepness up from the linear problem
/// (`k_scale = 0`), warm-starting each stage from the previous one.
fn solve_kcl_robust(
    model: &NetworkModel,
    ctx: &mut EvalContext,
    unknowns: &[NodeId],
    externals: Externals,
) -> Result<()> {
    let saved: Vec<f64> = unknowns.iter().map(|n| ctx.pressures[n.0]).collect();
    if solve_kcl(model, ctx, unknowns, externals, 1.0).is_ok() {
        return Ok(());
    }

    // Restart from the linear problem and ramp the collapse in.
    for (node, p) in unknowns.iter().zip(&saved) {
        ctx.pressures[node.0] = *p;
    }
    solve_kcl(model, ctx, unknowns, externals, 0.0)?;
    let mut lambda = 0.0_f64;
    let mut step = 1.0_f64;
    const MIN_STEP: f64 = 1.0 / 256.0;
    while lambda < 1.0 {
        let target = (lambda + step).min(1.0);
        let stage_start: Vec<f64> = unknowns.iter().map(|n| ctx.pressures[n.0]).collect();
        match solve_kcl(model, ctx, unknowns, externals, target) {
            Ok(()) => {
                lambda = target;
                step = (step * 2.0).min(1.0);
            }
            Err(e) => {
                if step <= MIN_STEP {
                    return Err(e);
                }
                step *= 0.5;
                for (node, p) in unknowns.iter().zip(&stage_start) {
                    ctx.pressures[node.0] = *p;
                }
            }
        }
    }
    Ok(())
}

/// Evaluates the scaled KCL residual (and Jacobian) at the current
/// pressures. Returns the scaled max-norm of the residual.
fn eval_kcl(
    model: &NetworkModel,
    ctx: &mut EvalContext,
    externals: Externals,
    m: usize,
    with_jacobian: bool,
    k_scale: f64,
) -> Result<f64> {
    ctx.residual[..m].fill(0.0);
    ctx.scale[..m].fill(0.0);
    if with_jacobian {
        ctx.jacobian[..m * m].fill(0.0);
    }

    for branch in model.branches() {
        if !branch.is_resistive() {
            continue;
        }
        let (a, b) = (branch.from.0, branch.to.0);
        let (q, dq_da, dq_db) = branch_flow_and_derivatives(
            branch,
            ctx.pressures[a],
            ctx.pressures[b],
            externals,
            k_scale,
        );
        if !q.is_finite() {
            return Err(CoreError::NumericalBlowUp(format!(
                "non-finite flow on branch {}",
                branch.name
            )));
        }
        let (sa, sb) = (ctx.slot[a], ctx.slot[b]);
        if sa != usize::MAX {
            ctx.residual[sa] -= q;
            ctx.scale[sa] += dq_da.abs() + dq_db.abs();
            if with_jacobian {
                ctx.jacobian[sa * m + sa] -= dq_da;
                if sb != usize::MAX {
                    ctx.jacobian[sa * m + sb] -= dq_db;
                }
            }
        }
        if sb != usize::MAX {
            ctx.residual[sb] += q;
            ctx.scale[sb] += dq_da.abs() + dq_db.abs();
            if with_jacobian {
                ctx.jacobian[sb * m + sb] += dq_db;
                if sa != usize::MAX {
                    ctx.jacobian[sb * m + sa] += dq_da;
                }
            }
        }
    }

    let mut norm = 0.0_f64;
    for k in 0..m {
        let s = ctx.scale[k].max(f64::MIN_POSITIVE);
        norm = norm.max(ctx.residual[k].abs() / s);
    }
    Ok(norm)
}

fn seed_unknown_guesses(model: &NetworkModel, ctx: &mut EvalContext, unknowns: &[NodeId]) {
    // Anchor mean is a serviceable cold-start guess for a resistive tree.
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..model.node_count() {
        if !unknowns.iter().any(|u| u.0 == i) {
            sum += ctx.pressures[i];
            count += 1;
        }
    }
    let guess = if count > 0 { sum / count as f64 } else { 0.0 };
    for node in unknowns {
        ctx.pressures[node.0] = guess;
    }
}

fn fill_known_pressures(
    model: &NetworkModel,
    ctx: &mut EvalContext,
    state: &[f64],
    source_pressure: f64,
) -> Result<()> {
    if state.len() != model.state_dimension() {
        return Err(CoreError::InvalidParameter(format!(
            "state length {} does not match {} capacitor nodes",
            state.len(),
            model.state_dimension()
        )));
    }
    if state.iter().any(|v| !v.is_finite()) || !source_pressure.is_finite() {
        return Err(CoreError::NumericalBlowUp(
            "non-finite state or source pressure".into(),
        ));
    }
    ctx.pressures[0] = 0.0;
    if let Some(node) = model.driven_node() {
        ctx.pressures[node.0] = source_pressure;
    }
    for &(node, p) in model.fixed_nodes() {
        ctx.pressures[node.0] = p;
    }
    for (slot, node) in model.state_nodes().iter().enumerate() {
        ctx.pressures[node.0] = state[slot];
    }
    Ok(())
}

fn collect_flows(
    model: &NetworkModel,
    ctx: &EvalContext,
    externals: Externals,
    state_derivative: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let mut branch_flows = vec![0.0; model.branches().len()];
    // Net resistive inflow per node, used to back out source flows.
    let mut inflow = vec![0.0; model.node_count()];
    for (i, branch) in model.branches().iter().enumerate() {
        if branch.is_resistive() {
            let q = resistive_flow(branch, &ctx.pressures, externals);
            branch_flows[i] = q;
            inflow[branch.from.0] -= q;
            inflow[branch.to.0] += q;
        }
    }
    for (i, branch) in model.branches().iter().enumerate() {
        match branch.kind {
            BranchKind::Capacitor { capacitance } => {
                let free = if branch.from == NodeId(0) {
                    branch.to
                } else {
                    branch.from
                };
                if let Some(slot) = model.state_slot(free) {
                    branch_flows[i] = capacitance * state_derivative[slot];
                }
            }
            BranchKind::DrivenSource | BranchKind::FixedSource { .. } => {
                let node = if branch.from == NodeId(0) {
                    branch.to
                } else {
                    branch.from
                };
                // Source delivers whatever the rest of the circuit drains.
                let mut drain = -inflow[node.0];
                if let Some(slot) = model.state_slot(node) {
                    drain += state_derivative[slot];
                }
                branch_flows[i] = drain;
            }
            _ => {}
        }
    }
    let observable_flows = model
        .observables()
        .iter()
        .map(|&(_, idx)| branch_flows[idx])
        .collect();
    (branch_flows, observable_flows)
}

/// Evaluates the network right-hand side inside a reusable context; the
/// interior solve warm-starts from the previous call.
pub fn rhs_in_context(
    model: &NetworkModel,
    ctx: &mut EvalContext,
    state: &[f64],
    source_pressure: f64,
    externals: Externals,
) -> Result<RhsOutput> {
    fill_known_pressures(model, ctx, state, source_pressure)?;

    let interior: Vec<NodeId> = model.interior_nodes().to_vec();
    if ctx.warm_valid {
        for (k, node) in interior.iter().enumerate() {
            ctx.pressures[node.0] = ctx.warm_interior[k];
        }
    } else {
        seed_unknown_guesses(model, ctx, &interior);
    }
    solve_kcl_robust(model, ctx, &interior, externals)?;
    for (k, node) in interior.iter().enumerate() {
        ctx.warm_interior[k] = ctx.pressures[node.0];
    }
    ctx.warm_valid = true;

    // C_i dP_i/dt = net resistive inflow at the capacitor node.
    let mut state_derivative = vec![0.0; model.state_dimension()];
    for branch in model.branches() {
        if !branch.is_resistive() {
            continue;
        }
        let q = resistive_flow(branch, &ctx.pressures, externals);
        if let Some(slot) = model.state_slot(branch.from) {
            state_derivative[slot] -= q;
        }
        if let Some(slot) = model.state_slot(branch.to) {
            state_derivative[slot] += q;
        }
    }
    for (slot, node) in model.state_nodes().iter().enumerate() {
        let c = model
            .branches()
            .iter()
            .find_map(|b| match b.kind {
                BranchKind::Capacitor { capacitance }
                    if b.from == *node || b.to == *node =>
                {
                    Some(capacitance)
                }
                _ => None,
            })
            .expect("state node has a capacitor");
        state_derivative[slot] /= c;
    }

    let (branch_flows, observable_flows) =
        collect_flows(model, ctx, externals, &state_derivative);
    Ok(RhsOutput {
        state_derivative,
        node_pressures: ctx.pressures.clone(),
        observable_flows,
        branch_flows,
    })
}

/// One-shot right-hand-side assembly: for each capacitor node `i`,
/// `C_i dP_i/dt` equals the net inflow from the resistive paths, with
/// Starling resistances evaluated at the branch exposure pressure.
pub fn assemble_rhs(
    model: &NetworkModel,
    state: &[f64],
    t: f64,
    externals: Externals,
    source: &Waveform,
) -> Result<RhsOutput> {
    let mut ctx = EvalContext::new(model);
    rhs_in_context(model, &mut ctx, state, source.pressure(t), externals)
}

/// Steady state of the network with the source frozen at `source_pressure`:
/// capacitor currents vanish, so every non-pinned node becomes an algebraic
/// unknown of the resistive system.
pub fn steady_state(
    model: &NetworkModel,
    source_pressure: f64,
    externals: Externals,
) -> Result<SteadySolution> {
    let mut ctx = EvalContext::new(model);
    let zero_state = vec![0.0; model.state_dimension()];
    fill_known_pressures(model, &mut ctx, &zero_state, source_pressure)?;

    let mut unknowns: Vec<NodeId> = model.interior_nodes().to_vec();
    unknowns.extend_from_slice(model.state_nodes());
    seed_unknown_guesses(model, &mut ctx, &unknowns);
    solve_kcl_robust(model, &mut ctx, &unknowns, externals)?;

    let derivative = vec![0.0; model.state_dimension()];
    let (branch_flows, observable_flows) = collect_flows(model, &ctx, externals, &derivative);
    Ok(SteadySolution {
        node_pressures: ctx.pressures.clone(),
        observable_flows,
        branch_flows,
    })
}

/// Steady state with every Starling branch frozen at its baseline
/// resistance. Used by tests to compare against an independent linear
/// solve of the resistor network.
pub fn steady_state_linearized(
    model: &NetworkModel,
    source_pressure: f64,
    externals: Externals,
) -> Result<SteadySolution> {
    let linear = {
        // Rebuild with Starling branches downgraded to plain resistors.
        let branches: Vec<Branch> = model
            .branches()
            .iter()
            .map(|b| {
                let mut nb = b.clone();
                if let BranchKind::Starling {
                    base_resistance, ..
                } = b.kind
                {
                    nb.kind = BranchKind::Resistor {
                        resistance: base_resistance,
                    };
                }
                nb
            })
            .collect();
        let observables = model
            .observables()
            .iter()
            .map(|(probe, idx)| (probe.clone(), model.branches()[*idx].name.clone()))
            .collect();
        NetworkModel::new(
            model.node_names().to_vec(),
            branches,
            observables,
            model.compartments().to_vec(),
        )?
    };
    steady_state(&linear, source_pressure, externals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Branch, BranchKind, Exposure, NetworkModel, NodeId};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn resistor(name: &str, from: usize, to: usize, r: f64) -> Branch {
        Branch {
            name: name.into(),
            from: NodeId(from),
            to: NodeId(to),
            kind: BranchKind::Resistor { resistance: r },
            exposure: Exposure::None,
        }
    }

    /// source(100 mmHg) -- R1 -- mid -- R2 -- ground, R1 = R2 = 50.
    fn voltage_divider() -> NetworkModel {
        NetworkModel::new(
            vec!["ground".into(), "src".into(), "mid".into()],
            vec![
                Branch {
                    name: "source".into(),
                    from: NodeId(0),
                    to: NodeId(1),
                    kind: BranchKind::FixedSource { pressure: 100.0 },
                    exposure: Exposure::None,
                },
                resistor("r1", 1, 2, 50.0),
                resistor("r2", 2, 0, 50.0),
            ],
            vec![("Q".into(), "r1".into())],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn voltage_divider_steady_flow() {
        let model = voltage_divider();
        let sol = steady_state(&model, 0.0, Externals::default()).unwrap();
        let mid = model.node_index("mid").unwrap();
        assert_abs_diff_eq!(sol.node_pressures[mid.0], 50.0, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.observable_flows[0], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn rc_circuit_rhs_at_origin() {
        // src(P) -- R -- node -- C -- ground: dP/dt at P=0 is P_src/(R C).
        let (r, c, p_src) = (2.0, 3.0, 7.0);
        let model = NetworkModel::new(
            vec!["ground".into(), "src".into(), "node".into()],
            vec![
                Branch {
                    name: "source".into(),
                    from: NodeId(0),
                    to: NodeId(1),
                    kind: BranchKind::DrivenSource,
                    exposure: Exposure::None,
                },
                resistor("r", 1, 2, r),
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
        .unwrap();
        let source = Waveform::constant(p_src);
        let out = assemble_rhs(&model, &[0.0], 0.0, Externals::default(), &source).unwrap();
        assert_relative_eq!(out.state_derivative[0], p_src / (r * c), epsilon = 1e-12);
        assert_relative_eq!(out.observable_flows[0], p_src / r, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_finite_state() {
        let model = voltage_divider();
        let mut ctx = EvalContext::new(&model);
        let err = rhs_in_context(&model, &mut ctx, &[], f64::NAN, Externals::default())
            .unwrap_err();
        assert!(err.to_string().contains("numerical blow-up"));
    }

    #[test]
    fn starling_branch_flow_drops_with_external_pressure() {
        // src -- starling -- ground; positive transmural pressure keeps the
        // vein open, rising external pressure chokes the flow.
        let model = NetworkModel::new(
            vec!["ground".into(), "src".into(), "mid".into()],
            vec![
                Branch {
                    name: "source".into(),
                    from: NodeId(0),
                    to: NodeId(1),
                    kind: BranchKind::FixedSource { pressure: 20.0 },
                    exposure: Exposure::None,
                },
                Branch {
                    name: "vein".into(),
                    from: NodeId(1),
                    to: NodeId(2),
                    kind: BranchKind::Starling {
                        base_resistance: 10.0,
                        steepness: 0.5,
                    },
                    exposure: Exposure::Iop,
                },
                resistor("out", 2, 0, 10.0),
            ],
            vec![("Q".into(), "vein".into())],
            vec![],
        )
        .unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=35 {
            let iop = 5.0 + i as f64;
            let sol = steady_state(&model, 0.0, Externals { iop, rltp: 0.0 }).unwrap();
            assert!(
                sol.observable_flows[0] <= prev + 1e-12,
                "flow increased at IOP {iop}"
            );
            prev = sol.observable_flows[0];
        }
    }
}
