//! Smart-factory domain.
//!
//! Items are the agents. Each item carries an ordered list of processing
//! types it still needs; machines have a processing type, a per-attempt cost
//! and a failure probability, and serve their queue one item at a time.
//! A free item either waits or enqueues at one machine, so every item has
//! `machines + 1` actions.
//!
//! One step is: arrivals (in item id order), then one processing attempt per
//! non-empty queue, head item only. An attempt always costs `machine.cost`.
//! A successful attempt at a machine of the right type removes the item's
//! front task and frees the item; at a machine of the wrong type it just
//! frees the item. A failed attempt keeps the item at the head unless
//! `eject_on_failure` is set.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::engine::GenerativeModel;
use crate::error::{ConfigError, FactoryError};
use crate::stream::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactoryAction {
    Wait,
    Enqueue(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Machine {
    pub processing_type: usize,
    pub cost: f64,
    pub failure_prob: f64,
    /// Item ids, head first.
    pub queue: VecDeque<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    /// Processing types still required, front first.
    pub remaining_tasks: VecDeque<usize>,
    /// Machine the item is queued at, if any.
    pub location: Option<usize>,
}

impl Item {
    pub fn is_complete(&self) -> bool {
        self.remaining_tasks.is_empty()
    }

    pub fn is_free(&self) -> bool {
        self.location.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactoryState {
    pub machines: Vec<Machine>,
    pub items: Vec<Item>,
    pub step_count: u64,
}

impl FactoryState {
    /// Every queued item sits in exactly the queue its location names, and
    /// complete items sit in no queue.
    pub fn is_consistent(&self) -> bool {
        let mut seen = alloc::vec![0usize; self.items.len()];
        for (m, machine) in self.machines.iter().enumerate() {
            for &id in &machine.queue {
                match self.items.get(id) {
                    Some(item) if item.location == Some(m) => seen[id] += 1,
                    _ => return false,
                }
            }
        }
        self.items
            .iter()
            .zip(&seen)
            .all(|(item, &count)| match item.location {
                Some(_) => count == 1 && !item.is_complete(),
                None => count == 0,
            })
    }

    pub fn completed_items(&self) -> usize {
        self.items.iter().filter(|i| i.is_complete()).count()
    }

    pub fn remaining_tasks(&self) -> usize {
        self.items.iter().map(|i| i.remaining_tasks.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineSpec {
    pub processing_type: usize,
    pub cost: f64,
    pub failure_prob: f64,
}

/// Static description of a factory instance and its reward constants.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorySpec {
    pub machines: Vec<MachineSpec>,
    /// Ordered task list of every item.
    pub items: Vec<Vec<usize>>,
    pub task_reward: f64,
    pub completion_reward: f64,
    pub eject_on_failure: bool,
}

impl FactorySpec {
    pub const DEFAULT_TASK_REWARD: f64 = 10.0;
    pub const DEFAULT_COMPLETION_REWARD: f64 = 20.0;
    pub const DEFAULT_COST: f64 = 1.0;

    pub fn new(machines: Vec<MachineSpec>, items: Vec<Vec<usize>>) -> Self {
        Self {
            machines,
            items,
            task_reward: Self::DEFAULT_TASK_REWARD,
            completion_reward: Self::DEFAULT_COMPLETION_REWARD,
            eject_on_failure: false,
        }
    }

    /// Items get `tasks_per_item` distinct processing types, drawn as a
    /// seeded shuffle of the types the machines offer.
    pub fn generated(
        machines: Vec<MachineSpec>,
        num_items: usize,
        tasks_per_item: usize,
        seed: u64,
    ) -> Self {
        let mut types: Vec<usize> = machines.iter().map(|m| m.processing_type).collect();
        types.sort_unstable();
        types.dedup();
        let mut rng = Stream::seed_from_u64(seed);
        let items = (0..num_items)
            .map(|_| {
                types.shuffle(&mut rng);
                types.iter().copied().cycle().take(tasks_per_item).collect()
            })
            .collect();
        Self::new(machines, items)
    }

    /// Machines of types `0..count` with unit cost and the given failure probabilities.
    pub fn uniform_machines(failure_probs: &[f64]) -> Vec<MachineSpec> {
        failure_probs
            .iter()
            .enumerate()
            .map(|(t, &p)| MachineSpec {
                processing_type: t,
                cost: Self::DEFAULT_COST,
                failure_prob: p,
            })
            .collect()
    }

    /// 8 items, 4 machines of distinct types, 8 tasks per item.
    pub fn paper_default() -> Self {
        Self::generated(Self::uniform_machines(&[0.1, 0.2, 0.3, 0.2]), 8, 8, 0)
    }

    /// 4 items, 2 machines, 16 tasks per item: more work than 30 steps of
    /// both machines can finish.
    pub fn desk_default() -> Self {
        Self::generated(Self::uniform_machines(&[0.1, 0.2]), 4, 16, 0)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errors = ConfigError::default();
        if self.machines.is_empty() {
            errors.push("factory needs at least one machine");
        }
        if self.items.is_empty() {
            errors.push("factory needs at least one item");
        }
        for (m, spec) in self.machines.iter().enumerate() {
            if !(spec.cost.is_finite() && spec.cost >= 0.0) {
                errors.push(format!("machine {m}: cost must be finite and >= 0"));
            }
            if !(0.0..=1.0).contains(&spec.failure_prob) {
                errors.push(format!("machine {m}: failure_prob must lie in [0, 1]"));
            }
        }
        for (i, tasks) in self.items.iter().enumerate() {
            if tasks.is_empty() {
                errors.push(format!("item {i}: task list is empty"));
            }
            for &t in tasks {
                if !self.machines.iter().any(|m| m.processing_type == t) {
                    errors.push(format!("item {i}: no machine offers processing type {t}"));
                }
            }
        }
        if !self.task_reward.is_finite() || !self.completion_reward.is_finite() {
            errors.push("rewards must be finite");
        }
        errors.into_result()
    }
}

/// The factory as a generative model.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoryModel {
    spec: FactorySpec,
}

impl FactoryModel {
    pub fn new(spec: FactorySpec) -> Result<Self, ConfigError> {
        spec.validate()?;
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &FactorySpec {
        &self.spec
    }

    pub fn num_machines(&self) -> usize {
        self.spec.machines.len()
    }

    pub fn initial(&self) -> FactoryState {
        FactoryState {
            machines: self
                .spec
                .machines
                .iter()
                .map(|m| Machine {
                    processing_type: m.processing_type,
                    cost: m.cost,
                    failure_prob: m.failure_prob,
                    queue: VecDeque::new(),
                })
                .collect(),
            items: self
                .spec
                .items
                .iter()
                .map(|tasks| Item {
                    remaining_tasks: tasks.iter().copied().collect(),
                    location: None,
                })
                .collect(),
            step_count: 0,
        }
    }

    /// `[Wait, Enqueue(0), ..., Enqueue(m - 1)]`, identical for every item.
    pub fn item_actions(&self) -> Vec<FactoryAction> {
        core::iter::once(FactoryAction::Wait)
            .chain((0..self.num_machines()).map(FactoryAction::Enqueue))
            .collect()
    }

    pub fn transition<R: Rng + ?Sized>(
        &self,
        state: &FactoryState,
        joint_action: &[FactoryAction],
        rng: &mut R,
    ) -> Result<(FactoryState, f64), FactoryError> {
        if joint_action.len() != state.items.len() {
            return Err(FactoryError::JointActionSize {
                expected: state.items.len(),
                actual: joint_action.len(),
            });
        }
        let mut next = state.clone();
        let mut reward = 0.0;

        for (id, action) in joint_action.iter().enumerate() {
            let item = &mut next.items[id];
            // queued and finished items cannot act
            if !item.is_free() || item.is_complete() {
                continue;
            }
            if let FactoryAction::Enqueue(m) = *action {
                let machine = next
                    .machines
                    .get_mut(m)
                    .ok_or(FactoryError::UnknownMachine {
                        item: id,
                        machine: m,
                    })?;
                machine.queue.push_back(id);
                item.location = Some(m);
            }
        }

        for machine in &mut next.machines {
            let Some(&head) = machine.queue.front() else {
                continue;
            };
            reward -= machine.cost;
            let failed = rng.random::<f64>() < machine.failure_prob;
            let item = &mut next.items[head];
            if failed {
                if self.spec.eject_on_failure {
                    machine.queue.pop_front();
                    item.location = None;
                }
                continue;
            }
            machine.queue.pop_front();
            item.location = None;
            if item.remaining_tasks.front() == Some(&machine.processing_type) {
                item.remaining_tasks.pop_front();
                reward += self.spec.task_reward;
                if item.is_complete() {
                    reward += self.spec.completion_reward;
                }
            }
        }

        next.step_count += 1;
        Ok((next, reward))
    }
}

impl GenerativeModel for FactoryModel {
    type State = FactoryState;
    type Action = FactoryAction;
    type Error = FactoryError;

    fn initial_state(&self) -> FactoryState {
        self.initial()
    }

    fn num_agents(&self) -> usize {
        self.spec.items.len()
    }

    fn action_set(&self, _agent: usize) -> Vec<FactoryAction> {
        self.item_actions()
    }

    fn noop(&self) -> FactoryAction {
        FactoryAction::Wait
    }

    fn step<R: Rng + ?Sized>(
        &self,
        state: &FactoryState,
        joint_action: &[FactoryAction],
        rng: &mut R,
    ) -> Result<(FactoryState, f64), FactoryError> {
        self.transition(state, joint_action, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn single(failure_prob: f64) -> FactoryModel {
        let machines = vec![MachineSpec {
            processing_type: 0,
            cost: 1.0,
            failure_prob,
        }];
        FactoryModel::new(FactorySpec::new(machines, vec![vec![0]])).unwrap()
    }

    #[test]
    fn null_transition() {
        let model = FactoryModel::new(FactorySpec::paper_default()).unwrap();
        let s0 = model.initial();
        let mut rng = Stream::seed_from_u64(0);
        let (s1, r) = model
            .transition(&s0, &[FactoryAction::Wait; 8], &mut rng)
            .unwrap();
        assert_eq!(r, 0.0);
        assert_eq!(s1.step_count, 1);
        assert_eq!(s1.items, s0.items);
        assert_eq!(s1.machines, s0.machines);
    }

    #[test]
    fn successful_completion() {
        let model = single(0.0);
        let mut rng = Stream::seed_from_u64(0);
        let (s, r) = model
            .transition(&model.initial(), &[FactoryAction::Enqueue(0)], &mut rng)
            .unwrap();
        assert_eq!(r, 10.0 + 20.0 - 1.0);
        assert!(s.items[0].is_complete());
        assert!(s.items[0].is_free());
        assert!(s.machines[0].queue.is_empty());
    }

    #[test]
    fn guaranteed_failure() {
        let model = single(1.0);
        let mut rng = Stream::seed_from_u64(0);
        let (s, r) = model
            .transition(&model.initial(), &[FactoryAction::Enqueue(0)], &mut rng)
            .unwrap();
        assert_eq!(r, -1.0);
        assert_eq!(s.items[0].location, Some(0));
        assert_eq!(s.items[0].remaining_tasks, [0]);
        assert!(s.is_consistent());
    }

    #[test]
    fn failure_ejection_flag() {
        let mut spec = single(1.0).spec().clone();
        spec.eject_on_failure = true;
        let model = FactoryModel::new(spec).unwrap();
        let mut rng = Stream::seed_from_u64(0);
        let (s, r) = model
            .transition(&model.initial(), &[FactoryAction::Enqueue(0)], &mut rng)
            .unwrap();
        assert_eq!(r, -1.0);
        assert!(s.items[0].is_free());
        assert_eq!(s.items[0].remaining_tasks, [0]);
    }

    #[test]
    fn mismatched_machine_ejects_without_progress() {
        let machines = FactorySpec::uniform_machines(&[0.0, 0.0]);
        let model = FactoryModel::new(FactorySpec::new(machines, vec![vec![0, 1]])).unwrap();
        let mut rng = Stream::seed_from_u64(0);
        let (s, r) = model
            .transition(&model.initial(), &[FactoryAction::Enqueue(1)], &mut rng)
            .unwrap();
        assert_eq!(r, -1.0);
        assert!(s.items[0].is_free());
        assert_eq!(s.items[0].remaining_tasks, [0, 1]);
    }

    #[test]
    fn one_item_per_machine_per_step() {
        let machines = FactorySpec::uniform_machines(&[0.0]);
        let model = FactoryModel::new(FactorySpec::new(machines, vec![vec![0], vec![0]])).unwrap();
        let mut rng = Stream::seed_from_u64(0);
        let both = [FactoryAction::Enqueue(0); 2];
        let (s1, r1) = model.transition(&model.initial(), &both, &mut rng).unwrap();
        assert_eq!(r1, 29.0);
        assert!(s1.items[0].is_complete());
        assert_eq!(s1.items[1].location, Some(0));
        // queued item's action is coerced to Wait
        let (s2, r2) = model.transition(&s1, &both, &mut rng).unwrap();
        assert_eq!(r2, 29.0);
        assert_eq!(s2.completed_items(), 2);
        let (_, r3) = model.transition(&s2, &both, &mut rng).unwrap();
        assert_eq!(r3, 0.0);
    }

    #[test]
    fn rejects_bad_actions() {
        let model = single(0.0);
        let mut rng = Stream::seed_from_u64(0);
        let s = model.initial();
        assert_eq!(
            model.transition(&s, &[], &mut rng),
            Err(FactoryError::JointActionSize {
                expected: 1,
                actual: 0
            })
        );
        assert_eq!(
            model.transition(&s, &[FactoryAction::Enqueue(3)], &mut rng),
            Err(FactoryError::UnknownMachine {
                item: 0,
                machine: 3
            })
        );
    }

    #[test]
    fn validation_lists_every_violation() {
        let machines = vec![MachineSpec {
            processing_type: 0,
            cost: -1.0,
            failure_prob: 2.0,
        }];
        let err = FactorySpec::new(machines, vec![vec![], vec![5]])
            .validate()
            .unwrap_err();
        assert_eq!(err.violations.len(), 4, "{err}");
    }

    #[test]
    fn paper_default_shape() {
        let model = FactoryModel::new(FactorySpec::paper_default()).unwrap();
        assert_eq!(model.num_agents(), 8);
        assert_eq!(model.num_machines(), 4);
        assert_eq!(model.action_set(0).len(), 5);
        assert!(model.initial().items.iter().all(|i| !i.is_complete()));
        let joint_plans_log10 = 32.0 * libm::log10(5.0);
        assert!((joint_plans_log10 - 22.37).abs() < 0.01 && joint_plans_log10 > 22.0);
    }

    #[test]
    fn generated_tasks_are_distinct_and_seeded() {
        let a = FactorySpec::generated(FactorySpec::uniform_machines(&[0.0; 4]), 6, 3, 11);
        let b = FactorySpec::generated(FactorySpec::uniform_machines(&[0.0; 4]), 6, 3, 11);
        assert_eq!(a, b);
        for tasks in &a.items {
            let mut t = tasks.clone();
            t.sort_unstable();
            t.dedup();
            assert_eq!(t.len(), 3);
        }
    }
}
