use std::collections::VecDeque;

use super::{ChatRole, PromptEnvelope, PromptError, PromptTemplate, TokenEstimator};
use crate::subtitle::{render_excerpt, SubtitleCue};

/// What is needed to re-render the system message with fewer cues.
#[derive(Debug, Clone, Copy)]
pub struct SubtitleContext<'a> {
    pub template: &'a PromptTemplate,
    pub video_title: &'a str,
    /// Excerpt cues currently in the envelope, in start order.
    pub cues: &'a [SubtitleCue],
    /// Timeline position of the question, in milliseconds.
    pub anchor_ms: u64,
}

impl SubtitleContext<'_> {
    /// First cue containing the question's position, if any.
    pub fn anchor_index(&self) -> Option<usize> {
        self.cues.iter().position(|c| c.contains(self.anchor_ms))
    }

    pub fn render_system(&self, cues: &[SubtitleCue]) -> String {
        if cues.is_empty() {
            self.template.render_without_excerpt(self.video_title)
        } else {
            self.template.render_with_excerpt(self.video_title, &render_excerpt(cues))
        }
    }
}

/// Order in which excerpt cues are given up: alternately the earliest and
/// the latest remaining cue, with `protected` always last.
pub fn drop_order(len: usize, protected: Option<usize>) -> Vec<usize> {
    let protected = protected.filter(|&p| p < len);
    let mut queue: VecDeque<usize> = (0..len).filter(|&i| Some(i) != protected).collect();
    let mut order = Vec::with_capacity(len);
    let mut from_front = true;
    while let Some(idx) = if from_front { queue.pop_front() } else { queue.pop_back() } {
        order.push(idx);
        from_front = !from_front;
    }
    order.extend(protected);
    order
}

/// Shrinks the subtitle excerpt until the envelope fits `budget_tokens`.
///
/// An envelope already within budget comes back unchanged. Otherwise cues
/// are dropped in [`drop_order`], re-rendering the system message each
/// time; once none remain the no-subtitle variant is used. The question is
/// never touched.
pub fn enforce_token_budget(
    envelope: PromptEnvelope,
    context: &SubtitleContext<'_>,
    budget_tokens: usize,
    estimator: &dyn TokenEstimator,
) -> Result<PromptEnvelope, PromptError> {
    let total = envelope.estimated_tokens(estimator);
    if total <= budget_tokens {
        return Ok(envelope);
    }
    let non_system: usize = envelope
        .messages
        .iter()
        .filter(|m| m.role != ChatRole::System)
        .map(|m| estimator.estimate(&m.content))
        .sum();
    let too_small = |needed| PromptError::BudgetTooSmall {
        needed,
        budget: budget_tokens,
    };
    if non_system > budget_tokens {
        return Err(too_small(non_system));
    }

    let mut kept = vec![true; context.cues.len()];
    let mut last_system_cost = total - non_system;
    for idx in drop_order(context.cues.len(), context.anchor_index()) {
        kept[idx] = false;
        let remaining: Vec<SubtitleCue> = context
            .cues
            .iter()
            .zip(&kept)
            .filter(|(_, keep)| **keep)
            .map(|(c, _)| c.clone())
            .collect();
        let system = context.render_system(&remaining);
        last_system_cost = estimator.estimate(&system);
        if non_system + last_system_cost <= budget_tokens {
            let mut envelope = envelope;
            if let Some(msg) = envelope.messages.iter_mut().find(|m| m.role == ChatRole::System) {
                msg.content = system;
            }
            return Ok(envelope);
        }
    }
    Err(too_small(non_system + last_system_cost))
}
