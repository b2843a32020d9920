//! Discrete-time agent models.
//!
//! Two models share the same 4-state / 2-input layout so the rest of the
//! machinery (safe sets, trajectory optimizer, controller) is model-agnostic:
//!
//! * the kinematic bicycle, state `(x, y, heading, speed)` and input
//!   `(steer, accel)`, integrated with forward Euler;
//! * a planar double integrator, state `(px, py, vx, vy)` and input
//!   `(ax, ay)`, used for small exhaustive-search oracle tests.
//!
//! In both models the first two state components are the planar position.

use nalgebra::{Matrix4, Matrix4x2, Vector2, Vector4};
use serde::{Deserialize, Serialize};

/// Packed agent state.
pub type State = Vector4<f64>;
/// Packed agent input.
pub type Input = Vector2<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x_pos: f64,
    pub y_pos: f64,
    pub heading: f64,
    pub speed: f64,
}

impl VehicleState {
    pub fn new(x_pos: f64, y_pos: f64, heading: f64, speed: f64) -> Self {
        Self { x_pos, y_pos, heading, speed }
    }
}

impl From<VehicleState> for State {
    fn from(s: VehicleState) -> State {
        State::new(s.x_pos, s.y_pos, s.heading, s.speed)
    }
}

impl From<State> for VehicleState {
    fn from(v: State) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VehicleInput {
    pub steer: f64,
    pub accel: f64,
}

impl From<VehicleInput> for Input {
    fn from(u: VehicleInput) -> Input {
        Input::new(u.steer, u.accel)
    }
}

impl From<Input> for VehicleInput {
    fn from(v: Input) -> Self {
        Self { steer: v[0], accel: v[1] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointMassState {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
}

impl From<PointMassState> for State {
    fn from(s: PointMassState) -> State {
        State::new(s.position[0], s.position[1], s.velocity[0], s.velocity[1])
    }
}

impl From<State> for PointMassState {
    fn from(v: State) -> Self {
        Self { position: [v[0], v[1]], velocity: [v[2], v[3]] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BicycleParams {
    /// Distance from the center of mass to the front axle, meters.
    pub l_f: f64,
    /// Distance from the center of mass to the rear axle, meters.
    pub l_r: f64,
    /// Sampling time, seconds.
    pub dt: f64,
}

impl BicycleParams {
    pub fn is_valid(&self) -> bool {
        self.l_f > 0.0 && self.l_r > 0.0 && self.dt > 0.0 && self.l_f.is_finite() && self.l_r.is_finite() && self.dt.is_finite()
    }

    /// Slip angle for a steering angle.
    pub fn slip(&self, steer: f64) -> f64 {
        (self.l_r * steer.tan() / (self.l_f + self.l_r)).atan()
    }

    /// Derivative of the slip angle with respect to the steering angle.
    fn slip_derivative(&self, steer: f64) -> f64 {
        let ratio = self.l_r / (self.l_f + self.l_r);
        let tan = steer.tan();
        let sec2 = 1.0 + tan * tan;
        ratio * sec2 / (1.0 + ratio * ratio * tan * tan)
    }
}

impl Default for BicycleParams {
    fn default() -> Self {
        Self { l_f: 0.5, l_r: 0.5, dt: 0.1 }
    }
}

/// Forward-Euler kinematic bicycle update.
pub fn step(params: &BicycleParams, state: &State, input: &Input) -> State {
    let (heading, speed) = (state[2], state[3]);
    let beta = params.slip(input[0]);
    let dt = params.dt;
    State::new(
        state[0] + dt * speed * (heading + beta).cos(),
        state[1] + dt * speed * (heading + beta).sin(),
        heading + dt * speed * beta.sin() / params.l_r,
        speed + dt * input[1],
    )
}

/// Analytic Jacobians of [`step`] with respect to state and input.
pub fn jacobians(params: &BicycleParams, state: &State, input: &Input) -> (Matrix4<f64>, Matrix4x2<f64>) {
    let (heading, speed) = (state[2], state[3]);
    let dt = params.dt;
    let beta = params.slip(input[0]);
    let dbeta = params.slip_derivative(input[0]);
    let (s, c) = (heading + beta).sin_cos();
    let (sb, cb) = beta.sin_cos();

    let mut a = Matrix4::identity();
    a[(0, 2)] = -dt * speed * s;
    a[(0, 3)] = dt * c;
    a[(1, 2)] = dt * speed * c;
    a[(1, 3)] = dt * s;
    a[(2, 3)] = dt * sb / params.l_r;

    let mut b = Matrix4x2::zeros();
    b[(0, 0)] = -dt * speed * s * dbeta;
    b[(1, 0)] = dt * speed * c * dbeta;
    b[(2, 0)] = dt * speed * cb * dbeta / params.l_r;
    b[(3, 1)] = dt;
    (a, b)
}

/// True iff the Euclidean norm of the full state difference is within `eps`.
pub fn goal_reached(state: &State, goal: &State, eps: f64) -> bool {
    (state - goal).norm() <= eps
}

/// Agent model selector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentModel {
    Bicycle(BicycleParams),
    DoubleIntegrator { dt: f64 },
}

impl AgentModel {
    pub fn dt(&self) -> f64 {
        match self {
            AgentModel::Bicycle(p) => p.dt,
            AgentModel::DoubleIntegrator { dt } => *dt,
        }
    }

    pub fn is_valid(&self) -> bool {
        match self {
            AgentModel::Bicycle(p) => p.is_valid(),
            AgentModel::DoubleIntegrator { dt } => *dt > 0.0 && dt.is_finite(),
        }
    }

    pub fn step(&self, state: &State, input: &Input) -> State {
        match self {
            AgentModel::Bicycle(p) => step(p, state, input),
            AgentModel::DoubleIntegrator { dt } => State::new(
                state[0] + dt * state[2],
                state[1] + dt * state[3],
                state[2] + dt * input[0],
                state[3] + dt * input[1],
            ),
        }
    }

    pub fn jacobians(&self, state: &State, input: &Input) -> (Matrix4<f64>, Matrix4x2<f64>) {
        match self {
            AgentModel::Bicycle(p) => jacobians(p, state, input),
            AgentModel::DoubleIntegrator { dt } => {
                let mut a = Matrix4::identity();
                a[(0, 2)] = *dt;
                a[(1, 3)] = *dt;
                let mut b = Matrix4x2::zeros();
                b[(2, 0)] = *dt;
                b[(3, 1)] = *dt;
                (a, b)
            }
        }
    }

    /// Rolls the model forward from `x0` under `inputs`, returning `inputs.len() + 1` states.
    pub fn rollout(&self, x0: &State, inputs: &[Input]) -> Vec<State> {
        let mut states = Vec::with_capacity(inputs.len() + 1);
        states.push(*x0);
        for u in inputs {
            let next = self.step(states.last().unwrap(), u);
            states.push(next);
        }
        states
    }
}

/// Planar position of a packed state.
pub fn position(state: &State) -> Vector2<f64> {
    Vector2::new(state[0], state[1])
}
