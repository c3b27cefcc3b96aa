use super::SimState;

/// Observer verdict after each step.
#[derive(Debug, Clone, PartialEq)]
pub enum Control {
    Continue,
    Halt(String),
}

/// Callback invoked by [`run`](super::run) on read-only states.
pub trait Observer {
    fn start(&mut self, _initial: &SimState) -> Control {
        Control::Continue
    }

    fn observe(&mut self, prev: &SimState, next: &SimState) -> Control;
}

/// Stand-alone growth halt, for callers that want a threshold different
/// from the stepper's own `growth_factor`.
#[derive(Debug, Clone)]
pub struct GrowthDetector {
    factor: f64,
    reference: Option<f64>,
    fired: bool,
}

impl GrowthDetector {
    pub fn new(factor: f64) -> Self {
        GrowthDetector { factor, reference: None, fired: false }
    }

    pub fn fired(&self) -> bool {
        self.fired
    }
}

impl Observer for GrowthDetector {
    fn start(&mut self, initial: &SimState) -> Control {
        self.reference = Some(initial.u.max());
        Control::Continue
    }

    fn observe(&mut self, prev: &SimState, next: &SimState) -> Control {
        let reference = *self.reference.get_or_insert(prev.u.max());
        let ratio = next.u.max() / reference;
        if ratio > self.factor {
            self.fired = true;
            Control::Halt(format!("max u grew by {ratio:.4e}"))
        } else {
            Control::Continue
        }
    }
}

/// States sampled along a run, the initial state first.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub states: Vec<SimState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn first(&self) -> Option<&SimState> {
        self.states.first()
    }

    pub fn last(&self) -> Option<&SimState> {
        self.states.last()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SimState> {
        self.states.iter()
    }
}

/// Keeps every `every`-th state (by step index) plus the initial one.
#[derive(Debug, Clone)]
pub struct TrajectoryRecorder {
    every: u64,
    pub trajectory: Trajectory,
}

impl TrajectoryRecorder {
    pub fn new(every: usize) -> Self {
        TrajectoryRecorder { every: every.max(1) as u64, trajectory: Trajectory::default() }
    }

    pub fn into_trajectory(self) -> Trajectory {
        self.trajectory
    }
}

impl Observer for TrajectoryRecorder {
    fn start(&mut self, initial: &SimState) -> Control {
        self.trajectory.states.push(initial.clone());
        Control::Continue
    }

    fn observe(&mut self, _prev: &SimState, next: &SimState) -> Control {
        if next.step.is_multiple_of(self.every) {
            self.trajectory.states.push(next.clone());
        }
        Control::Continue
    }
}
