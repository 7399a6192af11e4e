//! Agent observations from the simulated gyro and ESC, with an m-deep
//! history stack.

use crate::dynamics::SimState;

/// Observation components per sample: 3 error axes + 4 rotor speeds.
pub const OBS_DIM: usize = 7;

/// One agent observation: angular-velocity error per axis plus the rotor
/// speeds reported by the ESC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// e = Ω* − Ω, rad/s.
    pub error: [f64; 3],
    /// Rotor angular velocities, rad/s.
    pub rotor_omega: [f64; 4],
}

impl Observation {
    pub fn zero() -> Self {
        Observation { error: [0.0; 3], rotor_omega: [0.0; 4] }
    }

    pub fn to_array(&self) -> [f64; OBS_DIM] {
        [
            self.error[0],
            self.error[1],
            self.error[2],
            self.rotor_omega[0],
            self.rotor_omega[1],
            self.rotor_omega[2],
            self.rotor_omega[3],
        ]
    }
}

/// Build the observation for the current plant state and setpoint.
pub fn observe(sim: &SimState, setpoint: [f64; 3]) -> Observation {
    Observation {
        error: [
            setpoint[0] - sim.omega_body.x,
            setpoint[1] - sim.omega_body.y,
            setpoint[2] - sim.omega_body.z,
        ],
        rotor_omega: sim.rotor_omega,
    }
}

/// Observation built from raw gyro/rotor samples (used by the link path,
/// where the plant state is only visible through a sensor frame).
pub fn observe_sample(gyro: [f64; 3], rotor_omega: [f64; 4], setpoint: [f64; 3]) -> Observation {
    Observation {
        error: [setpoint[0] - gyro[0], setpoint[1] - gyro[1], setpoint[2] - gyro[2]],
        rotor_omega,
    }
}

/// FIFO stack of the last `m` observations, newest last. Slots that have not
/// been filled yet hold zeros, matching reset-from-rest semantics.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedState {
    slots: Vec<Observation>,
}

impl StackedState {
    pub fn new(memory: usize) -> Self {
        assert!(memory >= 1, "memory size must be >= 1");
        StackedState { slots: vec![Observation::zero(); memory] }
    }

    pub fn memory(&self) -> usize {
        self.slots.len()
    }

    /// Shift the window and place `obs` in the newest (last) slot.
    pub fn push(&mut self, obs: Observation) {
        self.slots.rotate_left(1);
        *self.slots.last_mut().unwrap() = obs;
    }

    /// Newest observation.
    pub fn latest(&self) -> &Observation {
        self.slots.last().unwrap()
    }

    /// Flat vector of length m·(M+D), oldest slot first.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.slots.len() * OBS_DIM);
        for obs in &self.slots {
            out.extend_from_slice(&obs.to_array());
        }
        out
    }

    pub fn flat_len(&self) -> usize {
        self.slots.len() * OBS_DIM
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{reset_state, AircraftConfig};

    fn obs(tag: f64) -> Observation {
        Observation { error: [tag, tag + 0.1, tag + 0.2], rotor_omega: [tag; 4] }
    }

    #[test]
    fn observe_zero_error_at_setpoint() {
        let mut s = reset_state(&AircraftConfig::iris());
        s.omega_body = nalgebra::Vector3::new(1.0, -2.0, 3.0);
        let o = observe(&s, [1.0, -2.0, 3.0]);
        assert_eq!(o.error, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn observe_from_rest_reports_setpoint() {
        let s = reset_state(&AircraftConfig::iris());
        let o = observe(&s, [5.24, 0.0, 0.0]);
        assert_eq!(o.error, [5.24, 0.0, 0.0]);
        assert_eq!(o.rotor_omega, [0.0; 4]);
    }

    #[test]
    fn observe_componentwise_subtraction() {
        let mut s = reset_state(&AircraftConfig::iris());
        s.omega_body = nalgebra::Vector3::new(0.5, -1.0, 1.0);
        let o = observe(&s, [1.0, -2.0, 3.0]);
        assert_eq!(o.error, [0.5, -1.0, 2.0]);
    }

    #[test]
    fn memory_one_equals_observation() {
        let mut st = StackedState::new(1);
        st.push(obs(3.0));
        assert_eq!(st.flat(), obs(3.0).to_array().to_vec());
    }

    #[test]
    fn fifo_order_newest_last() {
        let mut st = StackedState::new(2);
        st.push(obs(1.0));
        st.push(obs(2.0));
        let mut want = obs(1.0).to_array().to_vec();
        want.extend_from_slice(&obs(2.0).to_array());
        assert_eq!(st.flat(), want);
    }

    #[test]
    fn fifo_capacity_three_drops_oldest() {
        let mut st = StackedState::new(3);
        for tag in [1.0, 2.0, 3.0, 4.0] {
            st.push(obs(tag));
        }
        let mut want = Vec::new();
        for tag in [2.0, 3.0, 4.0] {
            want.extend_from_slice(&obs(tag).to_array());
        }
        assert_eq!(st.flat(), want);
    }

    #[test]
    fn flat_length_invariant() {
        for m in 1..=3 {
            let mut st = StackedState::new(m);
            assert_eq!(st.flat().len(), m * OBS_DIM);
            st.push(obs(1.0));
            assert_eq!(st.flat().len(), m * OBS_DIM);
        }
    }

    #[test]
    fn push_is_shift_invariant() {
        let m = 3;
        let mut st = StackedState::new(m);
        for _ in 0..m {
            st.push(obs(7.0));
        }
        let flat = st.flat();
        for k in 0..m {
            assert_eq!(flat[k * OBS_DIM..(k + 1) * OBS_DIM], obs(7.0).to_array());
        }
    }

    #[test]
    fn cold_start_zero_filled() {
        let mut st = StackedState::new(3);
        st.push(obs(9.0));
        let flat = st.flat();
        assert!(flat[..2 * OBS_DIM].iter().all(|v| *v == 0.0));
        assert_eq!(flat[2 * OBS_DIM..], obs(9.0).to_array());
    }
}
