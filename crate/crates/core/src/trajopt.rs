//! Fixed-horizon constrained trajectory optimization.
//!
//! Augmented-Lagrangian outer loop around an iterative LQR inner solve on
//! rolled-out dynamics, so every returned trajectory satisfies the model
//! exactly. The previous input is carried in an augmented state
//! `z = (x, u_prev)` which turns input-rate limits into stage constraints.
//! All constraints are linear in `(z, u)`.

use crate::dynamics::{AgentModel, Input, State};
use crate::error::{Error, Result};
use crate::geometry::HalfPlane;
use nalgebra::{SMatrix, SVector, Vector2};
use serde::{Deserialize, Serialize};

type Vector6 = SVector<f64, 6>;
type Vector8 = SVector<f64, 8>;
type Matrix8 = SMatrix<f64, 8, 8>;
type Matrix6 = SMatrix<f64, 6, 6>;
type Matrix6x8 = SMatrix<f64, 6, 8>;
type Matrix2x6 = SMatrix<f64, 2, 6>;

#[derive(Clone, Debug, PartialEq)]
pub struct OcpProblem {
    pub horizon: usize,
    pub model: AgentModel,
    pub initial_state: State,
    /// Terminal equality target.
    pub terminal_target: State,
    /// Infinite entries leave a dimension unconstrained.
    pub state_lower: State,
    pub state_upper: State,
    pub input_lower: Input,
    pub input_upper: Input,
    /// Largest change of each input between consecutive steps.
    pub rate_limit: Input,
    /// Input applied just before the first planned step.
    pub previous_input: Input,
    /// Input that will follow the horizon, if known. The last planned input
    /// must be within `rate_limit` of it.
    pub terminal_input: Option<Input>,
    /// `hyperplanes[k]` constrains the position at step `k`. Rows are imposed
    /// for `1 <= k < horizon`; missing entries mean no rows.
    pub hyperplanes: Vec<Vec<HalfPlane>>,
}

/// Box and rate limits shared by every problem an agent solves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Limits {
    pub state_lower: State,
    pub state_upper: State,
    pub input_lower: Input,
    pub input_upper: Input,
    /// Per step.
    pub rate_limit: Input,
}

impl Limits {
    pub fn unbounded() -> Self {
        let inf = f64::INFINITY;
        Self {
            state_lower: State::repeat(-inf),
            state_upper: State::repeat(inf),
            input_lower: Input::repeat(-inf),
            input_upper: Input::repeat(inf),
            rate_limit: Input::repeat(inf),
        }
    }

    pub fn contains_state(&self, x: &State) -> bool {
        (0..4).all(|j| x[j] >= self.state_lower[j] && x[j] <= self.state_upper[j])
    }
}

impl OcpProblem {
    pub fn new(model: AgentModel, horizon: usize, initial_state: State, terminal_target: State, limits: &Limits) -> Self {
        Self {
            horizon,
            model,
            initial_state,
            terminal_target,
            state_lower: limits.state_lower,
            state_upper: limits.state_upper,
            input_lower: limits.input_lower,
            input_upper: limits.input_upper,
            rate_limit: limits.rate_limit,
            previous_input: Input::zeros(),
            terminal_input: None,
            hyperplanes: Vec::new(),
        }
    }

    /// A problem with no constraints besides the dynamics and the endpoints.
    pub fn unconstrained(model: AgentModel, horizon: usize, initial_state: State, terminal_target: State) -> Self {
        Self::new(model, horizon, initial_state, terminal_target, &Limits::unbounded())
    }

    fn planes_at(&self, k: usize) -> &[HalfPlane] {
        if k == 0 || k >= self.horizon {
            return &[];
        }
        self.hyperplanes.get(k).map_or(&[], Vec::as_slice)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Solved,
    Infeasible,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OcpSolution {
    pub status: SolveStatus,
    pub states: Vec<State>,
    pub inputs: Vec<Input>,
    pub max_violation: f64,
    /// Infinity-norm distance of the final state from the target.
    pub terminal_gap: f64,
    /// Inner iterations summed over all outer iterations.
    pub iterations_used: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    pub tol_feas: f64,
    pub tol_term: f64,
    /// Violation level at which the outer loop stops early.
    pub target: f64,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Weight on squared input changes.
    pub rate_weight: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol_feas: 1e-6,
            tol_term: 1e-5,
            target: 1e-10,
            initial_penalty: 10.0,
            penalty_growth: 10.0,
            max_outer: 8,
            max_inner: 100,
            rate_weight: 1e-3,
        }
    }
}

/// Constraint residuals of a candidate trajectory, each clipped at zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Violation {
    /// Largest one-step model defect, including the initial condition.
    pub dynamics: f64,
    /// Boxes, rates and hyperplanes.
    pub path: f64,
    pub terminal: f64,
}

impl Violation {
    pub fn max(&self) -> f64 {
        self.dynamics.max(self.path).max(self.terminal)
    }
}

fn excess(lo: f64, hi: f64, v: f64) -> f64 {
    (lo - v).max(v - hi).max(0.0)
}

pub fn violations(problem: &OcpProblem, states: &[State], inputs: &[Input]) -> Result<Violation> {
    let n = problem.horizon;
    if states.len() != n + 1 || inputs.len() != n {
        return Err(Error::LengthMismatch { horizon: n });
    }
    let mut v = Violation { dynamics: (states[0] - problem.initial_state).abs().max(), ..Default::default() };
    let mut prev = problem.previous_input;
    for k in 0..n {
        let u = &inputs[k];
        v.dynamics = v.dynamics.max((problem.model.step(&states[k], u) - states[k + 1]).abs().max());
        for j in 0..2 {
            v.path = v.path.max(excess(problem.input_lower[j], problem.input_upper[j], u[j]));
            v.path = v.path.max(((u[j] - prev[j]).abs() - problem.rate_limit[j]).max(0.0));
        }
        prev = *u;
        if k >= 1 {
            for j in 0..4 {
                v.path = v.path.max(excess(problem.state_lower[j], problem.state_upper[j], states[k][j]));
            }
        }
        let p = Vector2::new(states[k][0], states[k][1]);
        for h in problem.planes_at(k) {
            v.path = v.path.max(h.residual(&p).max(0.0));
        }
    }
    if let Some(anchor) = problem.terminal_input {
        if n > 0 {
            for j in 0..2 {
                v.path = v.path.max(((inputs[n - 1][j] - anchor[j]).abs() - problem.rate_limit[j]).max(0.0));
            }
        }
    }
    v.terminal = (states[n] - problem.terminal_target).abs().max();
    for x in [&mut v.dynamics, &mut v.path, &mut v.terminal] {
        if x.is_nan() {
            *x = f64::INFINITY;
        }
    }
    Ok(v)
}

/// Largest constraint residual over dynamics, boxes, rates, hyperplanes and
/// the terminal equality.
pub fn max_violation(problem: &OcpProblem, states: &[State], inputs: &[Input]) -> Result<f64> {
    violations(problem, states, inputs).map(|v| v.max())
}

/// Linear constraint `cz · z + cu · u + c0` (`<= 0` or `== 0`).
#[derive(Clone, Copy, Debug)]
struct Row {
    c: Vector8,
    c0: f64,
}

impl Row {
    fn eval(&self, z: &Vector6, u: &Vector2<f64>) -> f64 {
        let c = &self.c;
        c[0] * z[0] + c[1] * z[1] + c[2] * z[2] + c[3] * z[3] + c[4] * z[4] + c[5] * z[5] + c[6] * u[0] + c[7] * u[1] + self.c0
    }
}

fn unit(i: usize, sign: f64) -> Vector8 {
    let mut c = Vector8::zeros();
    c[i] = sign;
    c
}

fn rate_pair(rows: &mut Vec<Row>, z_index: usize, u_index: usize, limit: f64) {
    if limit.is_finite() {
        let mut c = Vector8::zeros();
        c[u_index] = 1.0;
        c[z_index] = -1.0;
        rows.push(Row { c, c0: -limit });
        rows.push(Row { c: -c, c0: -limit });
    }
}

/// Inequality rows per stage (`0..=N`) and terminal equality rows.
fn build_rows(p: &OcpProblem) -> (Vec<Vec<Row>>, Vec<Row>) {
    let n = p.horizon;
    let mut stages = Vec::with_capacity(n + 1);
    for k in 0..n {
        let mut rows = Vec::new();
        for j in 0..2 {
            if p.input_upper[j].is_finite() {
                rows.push(Row { c: unit(6 + j, 1.0), c0: -p.input_upper[j] });
            }
            if p.input_lower[j].is_finite() {
                rows.push(Row { c: unit(6 + j, -1.0), c0: p.input_lower[j] });
            }
            rate_pair(&mut rows, 4 + j, 6 + j, p.rate_limit[j]);
        }
        if k >= 1 {
            for j in 0..4 {
                if p.state_upper[j].is_finite() {
                    rows.push(Row { c: unit(j, 1.0), c0: -p.state_upper[j] });
                }
                if p.state_lower[j].is_finite() {
                    rows.push(Row { c: unit(j, -1.0), c0: p.state_lower[j] });
                }
            }
        }
        for h in p.planes_at(k) {
            let mut c = Vector8::zeros();
            c[0] = h.normal[0];
            c[1] = h.normal[1];
            rows.push(Row { c, c0: h.offset });
        }
        stages.push(rows);
    }
    let mut terminal = Vec::new();
    if let Some(anchor) = p.terminal_input {
        for j in 0..2 {
            let limit = p.rate_limit[j];
            if limit.is_finite() {
                terminal.push(Row { c: unit(4 + j, 1.0), c0: -anchor[j] - limit });
                terminal.push(Row { c: unit(4 + j, -1.0), c0: anchor[j] - limit });
            }
        }
    }
    stages.push(terminal);
    let eq = (0..4).map(|j| Row { c: unit(j, 1.0), c0: -p.terminal_target[j] }).collect();
    (stages, eq)
}

struct Multipliers {
    ineq: Vec<Vec<f64>>,
    eq: Vec<f64>,
    rho: f64,
}

struct Solver<'a> {
    p: &'a OcpProblem,
    s: &'a SolverSettings,
    rows: Vec<Vec<Row>>,
    eq: Vec<Row>,
}

struct Traj {
    z: Vec<Vector6>,
    u: Vec<Vector2<f64>>,
    cost: f64,
}

fn augment(x: &State, u_prev: &Input) -> Vector6 {
    Vector6::new(x[0], x[1], x[2], x[3], u_prev[0], u_prev[1])
}

fn state_of(z: &Vector6) -> State {
    State::new(z[0], z[1], z[2], z[3])
}

impl<'a> Solver<'a> {
    fn rollout(&self, inputs: &[Input]) -> Vec<Vector6> {
        let mut z = Vec::with_capacity(inputs.len() + 1);
        z.push(augment(&self.p.initial_state, &self.p.previous_input));
        for u in inputs {
            let last = z.last().unwrap();
            let x = self.p.model.step(&state_of(last), u);
            z.push(augment(&x, u));
        }
        z
    }

    fn stage_cost(&self, k: usize, z: &Vector6, u: &Vector2<f64>, m: &Multipliers) -> f64 {
        let du = Vector2::new(u[0] - z[4], u[1] - z[5]);
        let mut cost = self.s.rate_weight * du.norm_squared();
        for (row, &lam) in self.rows[k].iter().zip(&m.ineq[k]) {
            let c = row.eval(z, u);
            let a = (lam + m.rho * c).max(0.0);
            cost += (a * a - lam * lam) / (2.0 * m.rho);
        }
        cost
    }

    fn terminal_cost(&self, z: &Vector6, m: &Multipliers) -> f64 {
        let n = self.p.horizon;
        let zero = Vector2::zeros();
        let mut cost = 0.0;
        for (row, &lam) in self.rows[n].iter().zip(&m.ineq[n]) {
            let c = row.eval(z, &zero);
            let a = (lam + m.rho * c).max(0.0);
            cost += (a * a - lam * lam) / (2.0 * m.rho);
        }
        for (row, &lam) in self.eq.iter().zip(&m.eq) {
            let c = row.eval(z, &zero);
            cost += lam * c + 0.5 * m.rho * c * c;
        }
        cost
    }

    fn total_cost(&self, z: &[Vector6], u: &[Vector2<f64>], m: &Multipliers) -> f64 {
        let n = self.p.horizon;
        let mut cost = self.terminal_cost(&z[n], m);
        for k in 0..n {
            cost += self.stage_cost(k, &z[k], &u[k], m);
        }
        if cost.is_nan() {
            f64::INFINITY
        } else {
            cost
        }
    }

    /// Gradient and Gauss-Newton Hessian of a stage cost in `(z, u)`.
    fn stage_derivatives(&self, k: usize, z: &Vector6, u: &Vector2<f64>, m: &Multipliers) -> (Vector8, Matrix8) {
        let w = self.s.rate_weight;
        let mut g = Vector8::zeros();
        let mut h = Matrix8::zeros();
        for j in 0..2 {
            let du = u[j] - z[4 + j];
            g[6 + j] += 2.0 * w * du;
            g[4 + j] -= 2.0 * w * du;
            h[(6 + j, 6 + j)] += 2.0 * w;
            h[(4 + j, 4 + j)] += 2.0 * w;
            h[(6 + j, 4 + j)] -= 2.0 * w;
            h[(4 + j, 6 + j)] -= 2.0 * w;
        }
        for (row, &lam) in self.rows[k].iter().zip(&m.ineq[k]) {
            let a = lam + m.rho * row.eval(z, u);
            if a > 0.0 {
                g += row.c * a;
                h += row.c * row.c.transpose() * m.rho;
            }
        }
        (g, h)
    }

    fn terminal_derivatives(&self, z: &Vector6, m: &Multipliers) -> (Vector6, Matrix6) {
        let n = self.p.horizon;
        let zero = Vector2::zeros();
        let mut g = Vector8::zeros();
        let mut h = Matrix8::zeros();
        for (row, &lam) in self.rows[n].iter().zip(&m.ineq[n]) {
            let a = lam + m.rho * row.eval(z, &zero);
            if a > 0.0 {
                g += row.c * a;
                h += row.c * row.c.transpose() * m.rho;
            }
        }
        for (row, &lam) in self.eq.iter().zip(&m.eq) {
            let a = lam + m.rho * row.eval(z, &zero);
            g += row.c * a;
            h += row.c * row.c.transpose() * m.rho;
        }
        (g.fixed_rows::<6>(0).into_owned(), h.fixed_view::<6, 6>(0, 0).into_owned())
    }

    fn linearize(&self, z: &Vector6, u: &Vector2<f64>) -> Matrix6x8 {
        let (a, b) = self.p.model.jacobians(&state_of(z), u);
        let mut f = Matrix6x8::zeros();
        f.fixed_view_mut::<4, 4>(0, 0).copy_from(&a);
        f.fixed_view_mut::<4, 2>(0, 6).copy_from(&b);
        f[(4, 6)] = 1.0;
        f[(5, 7)] = 1.0;
        f
    }

    /// Riccati sweep; returns feedforward, gains and the two terms of the
    /// expected cost change, or `None` if a stage Hessian is not positive
    /// definite under the current damping.
    #[allow(clippy::type_complexity)]
    fn backward(
        &self,
        t: &Traj,
        m: &Multipliers,
        mu: f64,
    ) -> Option<(Vec<Vector2<f64>>, Vec<Matrix2x6>, f64, f64)> {
        let n = self.p.horizon;
        let (mut vx, mut vxx) = self.terminal_derivatives(&t.z[n], m);
        let mut d = vec![Vector2::zeros(); n];
        let mut gains = vec![Matrix2x6::zeros(); n];
        let (mut dv1, mut dv2) = (0.0, 0.0);
        for k in (0..n).rev() {
            let (l, ll) = self.stage_derivatives(k, &t.z[k], &t.u[k], m);
            let f = self.linearize(&t.z[k], &t.u[k]);
            let q = l + f.transpose() * vx;
            let qq = ll + f.transpose() * vxx * f;
            let qz = q.fixed_rows::<6>(0).into_owned();
            let qu = q.fixed_rows::<2>(6).into_owned();
            let qzz = qq.fixed_view::<6, 6>(0, 0).into_owned();
            let quz = qq.fixed_view::<2, 6>(6, 0).into_owned();
            let mut quu = qq.fixed_view::<2, 2>(6, 6).into_owned();
            quu[(0, 0)] += mu;
            quu[(1, 1)] += mu;
            let chol = quu.cholesky()?;
            let dk = -chol.solve(&qu);
            let kk = -chol.solve(&quz);
            dv1 += dk.dot(&qu);
            dv2 += 0.5 * dk.dot(&(quu * dk));
            vx = qz + kk.transpose() * quu * dk + kk.transpose() * qu + quz.transpose() * dk;
            vxx = qzz + kk.transpose() * quu * kk + kk.transpose() * quz + quz.transpose() * kk;
            vxx = 0.5 * (vxx + vxx.transpose());
            d[k] = dk;
            gains[k] = kk;
        }
        Some((d, gains, dv1, dv2))
    }

    fn forward(&self, t: &Traj, d: &[Vector2<f64>], gains: &[Matrix2x6], alpha: f64, m: &Multipliers) -> Traj {
        let n = self.p.horizon;
        let mut z = Vec::with_capacity(n + 1);
        let mut u = Vec::with_capacity(n);
        z.push(t.z[0]);
        for k in 0..n {
            let uk = t.u[k] + d[k] * alpha + gains[k] * (z[k] - t.z[k]);
            let x = self.p.model.step(&state_of(&z[k]), &uk);
            z.push(augment(&x, &uk));
            u.push(uk);
        }
        let cost = self.total_cost(&z, &u, m);
        Traj { z, u, cost }
    }

    /// Inner iLQR minimization at fixed multipliers. Returns iterations used.
    fn inner(&self, t: &mut Traj, m: &Multipliers) -> usize {
        let mut mu = 1e-8;
        t.cost = self.total_cost(&t.z, &t.u, m);
        for it in 0..self.s.max_inner {
            let Some((d, gains, dv1, dv2)) = self.backward(t, m, mu) else {
                mu = (mu * 10.0).max(1e-6);
                if mu > 1e12 {
                    return it + 1;
                }
                continue;
            };
            if -(dv1 + dv2) <= 1e-14 * (1.0 + t.cost.abs()) {
                return it + 1;
            }
            let mut accepted = None;
            let mut alpha = 1.0;
            for _ in 0..12 {
                let cand = self.forward(t, &d, &gains, alpha, m);
                let expected = -(alpha * dv1 + alpha * alpha * dv2);
                if cand.cost < t.cost && (t.cost - cand.cost) >= 1e-4 * expected {
                    accepted = Some(cand);
                    break;
                }
                alpha *= 0.5;
            }
            match accepted {
                Some(cand) => {
                    let gain = t.cost - cand.cost;
                    *t = cand;
                    mu = (mu * 0.1).max(1e-8);
                    if gain <= 1e-13 * (1.0 + t.cost.abs()) {
                        return it + 1;
                    }
                }
                None => {
                    mu = (mu * 10.0).max(1e-6);
                    if mu > 1e12 {
                        return it + 1;
                    }
                }
            }
        }
        self.s.max_inner
    }

    fn update_multipliers(&self, t: &Traj, m: &mut Multipliers) {
        let n = self.p.horizon;
        let zero = Vector2::zeros();
        for k in 0..=n {
            let u = if k < n { &t.u[k] } else { &zero };
            for (row, lam) in self.rows[k].iter().zip(m.ineq[k].iter_mut()) {
                *lam = (*lam + m.rho * row.eval(&t.z[k], u)).max(0.0);
            }
        }
        for (row, lam) in self.eq.iter().zip(m.eq.iter_mut()) {
            *lam += m.rho * row.eval(&t.z[n], &zero);
        }
        m.rho *= self.s.penalty_growth;
    }
}

fn finish(problem: &OcpProblem, settings: &SolverSettings, inputs: Vec<Input>, iterations_used: usize) -> OcpSolution {
    let states = problem.model.rollout(&problem.initial_state, &inputs);
    let v = violations(problem, &states, &inputs).expect("lengths follow the horizon");
    let status = if v.dynamics.max(v.path) <= settings.tol_feas && v.terminal <= settings.tol_term {
        SolveStatus::Solved
    } else if v.max() > 1e3 * settings.tol_feas {
        SolveStatus::Infeasible
    } else {
        SolveStatus::MaxIterations
    };
    OcpSolution { status, states, inputs, max_violation: v.max(), terminal_gap: v.terminal, iterations_used }
}

/// Solves `problem` from `warm_start` inputs (zeros when absent; states are
/// always regenerated by rollout). A warm start that already meets the
/// internal target is returned unchanged.
pub fn solve_ocp(problem: &OcpProblem, warm_start: Option<&[Input]>, settings: &SolverSettings) -> OcpSolution {
    let n = problem.horizon;
    assert!(n >= 1, "horizon must be at least one step");
    let inputs: Vec<Input> = match warm_start {
        Some(w) => (0..n).map(|k| w.get(k).copied().unwrap_or_else(Input::zeros)).collect(),
        None => vec![Input::zeros(); n],
    };
    let states = problem.model.rollout(&problem.initial_state, &inputs);
    let v = violations(problem, &states, &inputs).expect("lengths follow the horizon");
    if v.path <= settings.target && v.terminal <= settings.target {
        return finish(problem, settings, inputs, 0);
    }

    let (rows, eq) = build_rows(problem);
    let mut m = Multipliers {
        ineq: rows.iter().map(|r| vec![0.0; r.len()]).collect(),
        eq: vec![0.0; eq.len()],
        rho: settings.initial_penalty,
    };
    let solver = Solver { p: problem, s: settings, rows, eq };
    let z = solver.rollout(&inputs);
    let mut t = Traj { z, u: inputs, cost: 0.0 };
    let mut used = 0;
    for _ in 0..settings.max_outer {
        used += solver.inner(&mut t, &m);
        let states: Vec<State> = t.z.iter().map(state_of).collect();
        let v = violations(problem, &states, &t.u).expect("lengths follow the horizon");
        if v.path <= settings.target && v.terminal <= settings.target {
            break;
        }
        solver.update_multipliers(&t, &mut m);
    }
    finish(problem, settings, t.u, used)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::BicycleParams;

    fn bicycle() -> AgentModel {
        AgentModel::Bicycle(BicycleParams::default())
    }

    fn boxed(mut p: OcpProblem) -> OcpProblem {
        p.state_lower = State::new(-10.0, -10.0, f64::NEG_INFINITY, -10.0);
        p.state_upper = State::new(10.0, 10.0, f64::INFINITY, 10.0);
        p.input_lower = Input::new(-0.5, -3.0);
        p.input_upper = Input::new(0.5, 3.0);
        p.rate_limit = Input::new(0.07, 0.7);
        p
    }

    #[test]
    fn equilibrium_is_solved_with_zero_inputs() {
        let x = State::new(0.0, 5.0, -std::f64::consts::FRAC_PI_2, 0.0);
        let p = boxed(OcpProblem::unconstrained(bicycle(), 5, x, x));
        let s = solve_ocp(&p, None, &SolverSettings::default());
        assert_eq!(s.status, SolveStatus::Solved);
        assert_eq!(s.max_violation, 0.0);
        assert!(s.inputs.iter().all(|u| *u == Input::zeros()));
    }

    #[test]
    fn one_step_double_integrator_velocity_change() {
        let model = AgentModel::DoubleIntegrator { dt: 0.1 };
        let mut p = OcpProblem::unconstrained(model, 1, State::zeros(), State::new(0.0, 0.0, 0.1, 0.0));
        p.input_lower = Input::new(-3.0, -3.0);
        p.input_upper = Input::new(3.0, 3.0);
        let s = solve_ocp(&p, None, &SolverSettings::default());
        assert_eq!(s.status, SolveStatus::Solved);
        assert!((s.inputs[0] - Input::new(1.0, 0.0)).abs().max() < 1e-8, "{:?}", s.inputs[0]);
    }

    #[test]
    fn unreachable_target_is_infeasible() {
        // Ten steps at no more than 10 m/s cover at most 10 m.
        let x0 = State::zeros();
        let p = boxed(OcpProblem::unconstrained(bicycle(), 10, x0, State::new(12.0, 0.0, 0.0, 0.0)));
        let s = solve_ocp(&p, None, &SolverSettings::default());
        assert_ne!(s.status, SolveStatus::Solved);
        assert!(s.max_violation > 1e-3);
    }

    #[test]
    fn straight_move_with_rate_limits() {
        let x0 = State::zeros();
        let p = boxed(OcpProblem::unconstrained(bicycle(), 20, x0, State::new(0.5, 0.0, 0.0, 0.0)));
        let s = solve_ocp(&p, None, &SolverSettings::default());
        assert_eq!(s.status, SolveStatus::Solved, "{s:?}");
        assert!(s.terminal_gap <= 1e-8);
        let v = violations(&p, &s.states, &s.inputs).unwrap();
        assert!(v.path <= 1e-8 && v.dynamics == 0.0);
    }

    #[test]
    fn hyperplanes_are_respected() {
        // Move sideways by a small amount while staying below y = 0.05.
        let x0 = State::new(0.0, 0.0, 0.0, 1.0);
        let target = State::new(2.0, 0.04, 0.0, 1.0);
        let mut p = boxed(OcpProblem::unconstrained(bicycle(), 20, x0, target));
        let row = HalfPlane::new(Vector2::new(0.0, 1.0), -0.05);
        p.hyperplanes = vec![vec![row]; 21];
        let warm = vec![Input::zeros(); 20];
        let s = solve_ocp(&p, Some(&warm), &SolverSettings::default());
        assert_eq!(s.status, SolveStatus::Solved, "{s:?}");
        assert!(s.states[1..20].iter().all(|x| x[1] <= 0.05 + 1e-8));
    }

    #[test]
    fn residuals_and_lengths() {
        let x = State::zeros();
        let mut p = OcpProblem::unconstrained(bicycle(), 2, x, x);
        assert_eq!(max_violation(&p, &[x; 3], &[Input::zeros(); 2]).unwrap(), 0.0);
        assert!(matches!(max_violation(&p, &[x; 2], &[Input::zeros(); 2]), Err(Error::LengthMismatch { horizon: 2 })));
        p.hyperplanes = vec![vec![], vec![HalfPlane::new(Vector2::new(1.0, 0.0), 0.2)], vec![]];
        assert!(max_violation(&p, &[x; 3], &[Input::zeros(); 2]).unwrap() >= 0.2);
    }

    #[test]
    fn solves_are_deterministic() {
        let x0 = State::new(0.0, 0.0, 0.0, 0.5);
        let p = boxed(OcpProblem::unconstrained(bicycle(), 20, x0, State::new(1.2, 0.3, 0.2, 0.4)));
        let a = solve_ocp(&p, None, &SolverSettings::default());
        let b = solve_ocp(&p, None, &SolverSettings::default());
        assert_eq!(a, b);
    }
}
