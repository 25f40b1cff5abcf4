//! FIFO replay memory.
//!
//! States within one episode are prefixes of that episode's action sequence, so
//! each transition stores only its episode and step index. The episode log
//! (initial labels and actions) is kept while any of its transitions remains.

use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::Rng;

use crate::env::HierAction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub episode: usize,
    /// Index of the action within its episode; the state is the prefix before it.
    pub step: usize,
    pub action: HierAction,
    pub reward: f64,
    pub terminal: bool,
}

/// Enough of a state to recompute its embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<'a> {
    /// `(global injected index, partner)` pairs.
    pub adv_edges: &'a [(usize, usize)],
    pub adv_labels: Vec<usize>,
}

#[derive(Debug, Clone)]
struct EpisodeLog {
    id: usize,
    initial_labels: Vec<usize>,
    edges: Vec<(usize, usize)>,
    actions: Vec<HierAction>,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    num_clean: usize,
    items: VecDeque<Transition>,
    logs: VecDeque<EpisodeLog>,
}

impl ReplayBuffer {
    /// `num_clean` converts injected-local `a1` into its global index.
    pub fn new(capacity: usize, num_clean: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            num_clean,
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
            logs: VecDeque::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.items[i]
    }

    /// Starts a new episode whose states carry `initial_labels` before any action.
    pub fn begin_episode(&mut self, id: usize, initial_labels: Vec<usize>) {
        if let Some(last) = self.logs.back() {
            assert!(id > last.id, "episode ids must increase");
        }
        self.logs.push_back(EpisodeLog {
            id,
            initial_labels,
            edges: Vec::new(),
            actions: Vec::new(),
        });
    }

    /// Records the next action of the current episode.
    pub fn push(&mut self, action: HierAction, reward: f64, terminal: bool) {
        let log = self.logs.back_mut().expect("begin_episode before push");
        let step = log.actions.len();
        log.actions.push(action);
        log.edges.push((self.num_clean + action.a1, action.a2));
        let tr = Transition {
            episode: log.id,
            step,
            action,
            reward,
            terminal,
        };
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(tr);
        let oldest = self.items.front().map_or(usize::MAX, |t| t.episode);
        while self.logs.len() > 1 && self.logs.front().is_some_and(|l| l.id < oldest) {
            self.logs.pop_front();
        }
    }

    fn log(&self, episode: usize) -> &EpisodeLog {
        let first = self.logs.front().expect("nonempty").id;
        let idx = self
            .logs
            .binary_search_by_key(&episode, |l| l.id)
            .unwrap_or_else(|_| panic!("episode {episode} evicted (oldest kept {first})"));
        &self.logs[idx]
    }

    fn snapshot_at(&self, episode: usize, steps: usize) -> Snapshot<'_> {
        let log = self.log(episode);
        let mut labels = log.initial_labels.clone();
        for a in &log.actions[..steps] {
            labels[a.a1] = a.a3;
        }
        Snapshot {
            adv_edges: &log.edges[..steps],
            adv_labels: labels,
        }
    }

    /// State before transition `i`.
    pub fn state(&self, i: usize) -> Snapshot<'_> {
        let t = &self.items[i];
        self.snapshot_at(t.episode, t.step)
    }

    /// State after transition `i`.
    pub fn next_state(&self, i: usize) -> Snapshot<'_> {
        let t = &self.items[i];
        self.snapshot_at(t.episode, t.step + 1)
    }

    /// `min(k, len)` distinct indices, uniformly.
    pub fn sample<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<usize> {
        sample(rng, self.items.len(), k.min(self.items.len())).into_vec()
    }
}
