use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{enforce_token_budget, CharRatioEstimator, PromptEnvelope, PromptError, PromptTemplate, SubtitleContext, TokenEstimator};
use crate::domain::{Response, VideoRecord};
use crate::subtitle::{extract_window, render_excerpt, SubtitleTrack, TimelineWindow, DEFAULT_WINDOW_RADIUS_S};

pub const DEFAULT_BUDGET_TOKENS: usize = 3000;
pub const DEFAULT_MODEL_ID: &str = "gpt-3.5-turbo";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSettings {
    pub budget_tokens: usize,
    pub window_radius_s: f64,
    pub model_id: String,
}

impl Default for PromptSettings {
    fn default() -> Self {
        Self {
            budget_tokens: DEFAULT_BUDGET_TOKENS,
            window_radius_s: DEFAULT_WINDOW_RADIUS_S,
            model_id: DEFAULT_MODEL_ID.to_owned(),
        }
    }
}

/// Builds envelopes with a fixed template, settings and token estimator.
#[derive(Clone)]
pub struct PromptBuilder {
    template: PromptTemplate,
    settings: PromptSettings,
    estimator: Arc<dyn TokenEstimator>,
}

impl PromptBuilder {
    pub fn new(template: PromptTemplate, settings: PromptSettings) -> Result<Self, PromptError> {
        template.validate()?;
        Ok(Self {
            template,
            settings,
            estimator: Arc::new(CharRatioEstimator),
        })
    }

    pub fn with_estimator(mut self, estimator: Arc<dyn TokenEstimator>) -> Self {
        self.estimator = estimator;
        self
    }

    pub fn template(&self) -> &PromptTemplate {
        &self.template
    }

    pub fn settings(&self) -> &PromptSettings {
        &self.settings
    }

    /// Envelope for `question`. Subtitles are used only when the student's
    /// toggle was on, a track exists and the window around the question is
    /// non-empty.
    pub fn build(
        &self,
        video: &VideoRecord,
        question: &Response,
        track: Option<&SubtitleTrack>,
    ) -> Result<PromptEnvelope, PromptError> {
        let question_text = match (&question.question_text, question.is_question()) {
            (Some(text), true) => text.clone(),
            _ => return Err(PromptError::NotAQuestion),
        };
        let cues = match track {
            Some(track) if question.include_subtitles => {
                extract_window(track, question.timeline_s, self.settings.window_radius_s)
            }
            _ => Vec::new(),
        };
        let system = if cues.is_empty() {
            self.template.render_without_excerpt(&video.title)
        } else {
            self.template.render_with_excerpt(&video.title, &render_excerpt(&cues))
        };
        let envelope = PromptEnvelope::new(
            system,
            question_text,
            self.settings.model_id.clone(),
            question.response_id.clone(),
        );
        let context = SubtitleContext {
            template: &self.template,
            video_title: &video.title,
            cues: &cues,
            anchor_ms: TimelineWindow::around(question.timeline_s, 0.0).start_ms,
        };
        enforce_token_budget(envelope, &context, self.settings.budget_tokens, self.estimator.as_ref())
    }
}

/// One-shot form of [`PromptBuilder::build`] with the default estimator.
pub fn build_prompt(
    video: &VideoRecord,
    question: &Response,
    track: Option<&SubtitleTrack>,
    template: &PromptTemplate,
    settings: &PromptSettings,
) -> Result<PromptEnvelope, PromptError> {
    PromptBuilder::new(template.clone(), settings.clone())?.build(video, question, track)
}
