use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::benchgen::DatasetKind;
use crate::grating::{Direction, GratingSpec};

use super::store::{display_px, StimulusStore, BLOCK_ORDER};
use super::SessionError;

/// Grating condition of one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockCondition {
    pub direction: Direction,
    pub interval: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateSession {
    /// One condition per block, in block order.
    pub conditions: Vec<BlockCondition>,
    pub seed: u64,
    #[serde(default)]
    pub subject_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionBlock {
    pub dataset: DatasetKind,
    pub condition: BlockCondition,
    pub allowed_labels: Vec<String>,
    /// Opaque stimulus ids in presentation order.
    pub stimuli: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedResponse {
    pub stimulus_id: String,
    pub label: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudySession {
    pub session_id: String,
    pub seed: u64,
    #[serde(default)]
    pub subject_tag: Option<String>,
    pub created_at: DateTime<Utc>,
    pub blocks: Vec<SessionBlock>,
    #[serde(default)]
    pub responses: Vec<TimedResponse>,
}

/// What the client needs to show the next stimulus. Carries no truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StimulusDescriptor {
    pub session_id: String,
    pub stimulus_id: String,
    pub image_url: String,
    pub position: usize,
    pub total: usize,
    pub block: usize,
    pub block_position: usize,
    pub block_size: usize,
    pub dataset: DatasetKind,
    pub allowed_labels: Vec<String>,
    pub display_px: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockResult {
    pub dataset: DatasetKind,
    pub condition: BlockCondition,
    pub correct: usize,
    pub answered: usize,
    pub total: usize,
    /// `correct / total`, present once the block is fully answered.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub stimulus_id: String,
    pub block: usize,
    pub label: String,
    pub truth: String,
    pub correct: bool,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResults {
    pub session_id: String,
    #[serde(default)]
    pub subject_tag: Option<String>,
    pub partial: bool,
    pub blocks: Vec<BlockResult>,
    pub responses: Vec<ResponseRecord>,
}

impl StudySession {
    /// Builds a session with each block's stimuli shuffled by `seed`.
    pub fn create(
        store: &StimulusStore,
        session_id: String,
        request: &CreateSession,
        now: DateTime<Utc>,
    ) -> Result<Self, SessionError> {
        if request.conditions.len() != BLOCK_ORDER.len() {
            return Err(SessionError::InvalidCondition(format!(
                "need {} block conditions, got {}",
                BLOCK_ORDER.len(),
                request.conditions.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(request.seed);
        let mut blocks = Vec::with_capacity(BLOCK_ORDER.len());
        for (kind, cond) in BLOCK_ORDER.into_iter().zip(&request.conditions) {
            GratingSpec::new(cond.direction, cond.interval)
                .validate()
                .map_err(|e| SessionError::InvalidCondition(e.to_string()))?;
            let set = store.find_block(kind, cond.direction, cond.interval).ok_or_else(|| {
                SessionError::UnknownCondition(format!("{kind} {}_{}", cond.direction, cond.interval))
            })?;
            let mut stimuli = set.stimuli.clone();
            stimuli.shuffle(&mut rng);
            blocks.push(SessionBlock {
                dataset: kind,
                condition: *cond,
                allowed_labels: set.class_names.clone(),
                stimuli,
            });
        }
        Ok(Self {
            session_id,
            seed: request.seed,
            subject_tag: request.subject_tag.clone(),
            created_at: now,
            blocks,
            responses: Vec::new(),
        })
    }

    pub fn total(&self) -> usize {
        self.blocks.iter().map(|b| b.stimuli.len()).sum()
    }

    pub fn cursor(&self) -> usize {
        self.responses.len()
    }

    pub fn is_complete(&self) -> bool {
        self.cursor() == self.total()
    }

    /// (block, position within block) of a global position.
    fn locate(&self, mut position: usize) -> Option<(usize, usize)> {
        for (b, block) in self.blocks.iter().enumerate() {
            if position < block.stimuli.len() {
                return Some((b, position));
            }
            position -= block.stimuli.len();
        }
        None
    }

    fn stimulus_at(&self, position: usize) -> Option<&str> {
        self.locate(position).map(|(b, p)| self.blocks[b].stimuli[p].as_str())
    }

    pub fn next_stimulus(&self) -> Option<StimulusDescriptor> {
        let position = self.cursor();
        let (b, p) = self.locate(position)?;
        let block = &self.blocks[b];
        let id = block.stimuli[p].clone();
        Some(StimulusDescriptor {
            session_id: self.session_id.clone(),
            image_url: format!("/stimuli/{id}.png"),
            stimulus_id: id,
            position,
            total: self.total(),
            block: b,
            block_position: p,
            block_size: block.stimuli.len(),
            dataset: block.dataset,
            allowed_labels: block.allowed_labels.clone(),
            display_px: display_px(block.dataset),
        })
    }

    /// Checks a response against the cursor without recording it.
    pub fn check_response(&self, stimulus_id: &str, label: &str) -> Result<(), SessionError> {
        let answered = self.responses.iter().any(|r| r.stimulus_id == stimulus_id);
        if answered {
            return Err(SessionError::Duplicate(stimulus_id.to_string()));
        }
        let (b, p) = self.locate(self.cursor()).ok_or(SessionError::Complete)?;
        let block = &self.blocks[b];
        if block.stimuli[p] != stimulus_id {
            return Err(SessionError::OutOfOrder {
                expected: block.stimuli[p].clone(),
                got: stimulus_id.to_string(),
            });
        }
        if !block.allowed_labels.iter().any(|l| l == label) {
            return Err(SessionError::InvalidLabel {
                label: label.to_string(),
                allowed: block.allowed_labels.join(", "),
            });
        }
        Ok(())
    }

    pub fn record(&mut self, response: TimedResponse) -> Result<(), SessionError> {
        self.check_response(&response.stimulus_id, &response.label)?;
        self.responses.push(response);
        Ok(())
    }

    /// Per-block accuracy and the full response log with truth labels.
    pub fn results(&self, store: &StimulusStore) -> Result<SessionResults, SessionError> {
        let mut blocks: Vec<BlockResult> = self
            .blocks
            .iter()
            .map(|b| BlockResult {
                dataset: b.dataset,
                condition: b.condition,
                correct: 0,
                answered: 0,
                total: b.stimuli.len(),
                accuracy: None,
            })
            .collect();
        let mut responses = Vec::with_capacity(self.responses.len());
        for (pos, r) in self.responses.iter().enumerate() {
            let (b, _) = self.locate(pos).ok_or(SessionError::Complete)?;
            debug_assert_eq!(self.stimulus_at(pos), Some(r.stimulus_id.as_str()));
            let stored = store
                .stimulus(&r.stimulus_id)
                .ok_or_else(|| SessionError::UnknownStimulus(r.stimulus_id.clone()))?;
            let truth = self.blocks[b]
                .allowed_labels
                .get(stored.label)
                .cloned()
                .unwrap_or_else(|| stored.label.to_string());
            let correct = truth == r.label;
            blocks[b].answered += 1;
            blocks[b].correct += usize::from(correct);
            responses.push(ResponseRecord {
                stimulus_id: r.stimulus_id.clone(),
                block: b,
                label: r.label.clone(),
                truth,
                correct,
                timestamp: r.timestamp,
            });
        }
        for b in &mut blocks {
            if b.answered == b.total && b.total > 0 {
                b.accuracy = Some(b.correct as f64 / b.total as f64);
            }
        }
        Ok(SessionResults {
            session_id: self.session_id.clone(),
            subject_tag: self.subject_tag.clone(),
            partial: !self.is_complete(),
            blocks,
            responses,
        })
    }
}
