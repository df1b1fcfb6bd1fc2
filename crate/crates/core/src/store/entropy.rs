use chrono::{DateTime, Duration, Utc};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::config::DeterministicConfig;

/// Source of ids and timestamps. Deterministic mode replays exactly from
/// its persisted position.
pub(crate) struct Entropy {
    rng: ChaCha20Rng,
    clock: Option<(DateTime<Utc>, Duration)>,
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct EntropyState {
    seed: u64,
    word_pos: u128,
    clock_next: DateTime<Utc>,
    clock_step_ms: i64,
}

impl Entropy {
    pub(crate) fn new(det: Option<&DeterministicConfig>) -> Self {
        match det {
            Some(d) => Self {
                rng: ChaCha20Rng::seed_from_u64(d.seed),
                clock: Some((d.clock_start, Duration::milliseconds(d.clock_step_ms))),
                seed: Some(d.seed),
            },
            None => Self {
                rng: ChaCha20Rng::from_entropy(),
                clock: None,
                seed: None,
            },
        }
    }

    pub(crate) fn now(&mut self) -> DateTime<Utc> {
        match &mut self.clock {
            Some((next, step)) => {
                let t = *next;
                *next += *step;
                t
            }
            None => Utc::now(),
        }
    }

    pub(crate) fn rng(&mut self) -> &mut dyn RngCore {
        &mut self.rng
    }

    pub(crate) fn export(&self) -> Option<EntropyState> {
        let (next, step) = self.clock?;
        Some(EntropyState {
            seed: self.seed?,
            word_pos: self.rng.get_word_pos(),
            clock_next: next,
            clock_step_ms: step.num_milliseconds(),
        })
    }

    pub(crate) fn restore(&mut self, s: EntropyState) {
        let mut rng = ChaCha20Rng::seed_from_u64(s.seed);
        rng.set_word_pos(s.word_pos);
        self.rng = rng;
        self.seed = Some(s.seed);
        self.clock = Some((s.clock_next, Duration::milliseconds(s.clock_step_ms)));
    }
}
