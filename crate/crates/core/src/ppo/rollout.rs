use super::PpoError;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub done: bool,
    pub value: f64,
    pub log_prob: f64,
    pub mask: Vec<bool>,
}

/// Generalized advantage estimation over one contiguous window.
///
/// `bootstrap_value` is the value of the state following the last entry.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap_value: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    assert!(
        rewards.len() == values.len() && values.len() == dones.len(),
        "GAE inputs must have equal lengths"
    );
    let len = rewards.len();
    let mut advantages = vec![0.0; len];
    let mut next_adv = 0.0;
    for t in (0..len).rev() {
        let next_value = if t + 1 < len { values[t + 1] } else { bootstrap_value };
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        advantages[t] = next_adv;
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    (advantages, returns)
}

/// Fixed-capacity on-policy storage.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub capacity: usize,
    pub transitions: Vec<Transition>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            transitions: Vec::with_capacity(capacity),
            advantages: Vec::new(),
            returns: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.transitions.len() >= self.capacity
    }

    pub fn has_advantages(&self) -> bool {
        !self.is_empty() && self.advantages.len() == self.transitions.len()
    }

    pub fn push(&mut self, t: Transition) -> Result<(), PpoError> {
        if self.is_full() {
            return Err(PpoError::Buffer("buffer is full".into()));
        }
        if !t.mask.get(t.action).copied().unwrap_or(false) {
            return Err(PpoError::Buffer(format!("action {} is masked", t.action)));
        }
        self.advantages.clear();
        self.returns.clear();
        self.transitions.push(t);
        Ok(())
    }

    pub fn finish(&mut self, bootstrap_value: f64, gamma: f64, lambda: f64) {
        let rewards: Vec<f64> = self.transitions.iter().map(|t| t.reward).collect();
        let values: Vec<f64> = self.transitions.iter().map(|t| t.value).collect();
        let dones: Vec<bool> = self.transitions.iter().map(|t| t.done).collect();
        (self.advantages, self.returns) = compute_gae(&rewards, &values, &dones, bootstrap_value, gamma, lambda);
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
        self.advantages.clear();
        self.returns.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_terminal_step() {
        let (a, r) = compute_gae(&[1.0], &[0.0], &[true], 123.0, 0.99, 0.95);
        assert_eq!(a, vec![1.0]);
        assert_eq!(r, vec![1.0]);
    }

    #[test]
    fn two_step_window() {
        let (a, r) = compute_gae(&[1.0, 1.0], &[0.5, 0.5], &[false, false], 0.0, 0.99, 0.95);
        let d1: f64 = 1.0 + 0.0 - 0.5;
        let d0 = 1.0 + 0.99 * 0.5 - 0.5;
        assert!((a[1] - d1).abs() < 1e-15);
        assert!((a[0] - (d0 + 0.99 * 0.95 * d1)).abs() < 1e-15);
        assert!((a[0] - 1.46525).abs() < 1e-12);
        assert!((r[0] - 1.96525).abs() < 1e-12);
    }

    #[test]
    fn lambda_zero_is_td_error() {
        let rewards = [0.3, -0.2, 0.9, 0.1];
        let values = [0.1, 0.4, -0.3, 0.2];
        let dones = [false, true, false, false];
        let (a, _) = compute_gae(&rewards, &values, &dones, 0.7, 0.9, 0.0);
        let next = [0.4, -0.3, 0.2, 0.7];
        for t in 0..4 {
            let live = if dones[t] { 0.0 } else { 1.0 };
            assert!((a[t] - (rewards[t] + 0.9 * next[t] * live - values[t])).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_masked_action() {
        let mut b = RolloutBuffer::new(1);
        let t = Transition {
            observation: vec![],
            action: 1,
            reward: 0.0,
            done: false,
            value: 0.0,
            log_prob: 0.0,
            mask: vec![true, false],
        };
        assert!(b.push(t.clone()).is_err());
        b.push(Transition { action: 0, ..t.clone() }).unwrap();
        assert!(b.push(Transition { action: 0, ..t }).is_err());
    }

    proptest! {
        #[test]
        fn telescoping(
            rewards in prop::collection::vec(-2.0f64..2.0, 1..40),
            seed_values in prop::collection::vec(-3.0f64..3.0, 40),
            bootstrap in -3.0f64..3.0,
        ) {
            let n = rewards.len();
            let values = &seed_values[..n];
            let (adv, _) = compute_gae(&rewards, values, &vec![false; n], bootstrap, 1.0, 1.0);
            for t in 0..n {
                let future: f64 = rewards[t..].iter().sum::<f64>() + bootstrap;
                prop_assert!((adv[t] - (future - values[t])).abs() < 1e-10);
            }
        }
    }
}
