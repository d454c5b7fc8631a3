use serde::{Deserialize, Serialize};

use super::PromptError;

const TITLE: &str = "{video_title}";
const EXCERPT: &str = "{subtitle_excerpt}";

/// System-message templates. The preamble is used when a subtitle excerpt
/// is available, the other variant when it is not.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub system_preamble: String,
    pub no_subtitle_variant: String,
    #[serde(default = "default_language")]
    pub language_tag: String,
}

fn default_language() -> String {
    "en".to_owned()
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            system_preamble: "You are a teaching assistant for the lecture video titled '{video_title}'. \
                The following is the transcript near the moment the student asked: {subtitle_excerpt}. \
                Answer the student's question in the context of this video, in the student's language."
                .to_owned(),
            no_subtitle_variant: "You are a teaching assistant for the lecture video titled '{video_title}'. \
                Answer the student's question in the context of this video, in the student's language."
                .to_owned(),
            language_tag: default_language(),
        }
    }
}

impl PromptTemplate {
    pub fn validate(&self) -> Result<(), PromptError> {
        let check = |name: &str, text: &str, placeholder: &str, expected: usize| {
            let found = text.matches(placeholder).count();
            if found == expected {
                Ok(())
            } else {
                Err(PromptError::InvalidTemplate(format!(
                    "{name} must contain {placeholder} exactly {expected} time(s), found {found}"
                )))
            }
        };
        check("system_preamble", &self.system_preamble, TITLE, 1)?;
        check("system_preamble", &self.system_preamble, EXCERPT, 1)?;
        check("no_subtitle_variant", &self.no_subtitle_variant, TITLE, 1)?;
        check("no_subtitle_variant", &self.no_subtitle_variant, EXCERPT, 0)
    }

    pub fn render_with_excerpt(&self, video_title: &str, excerpt: &str) -> String {
        substitute(&self.system_preamble, &[(TITLE, video_title), (EXCERPT, excerpt)])
    }

    pub fn render_without_excerpt(&self, video_title: &str) -> String {
        substitute(&self.no_subtitle_variant, &[(TITLE, video_title)])
    }
}

/// Single left-to-right pass, so placeholder-like text inside a substituted
/// value is never expanded again.
fn substitute(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'scan: while let Some(brace) = rest.find('{') {
        out.push_str(&rest[..brace]);
        let tail = &rest[brace..];
        for (placeholder, value) in values {
            if let Some(after) = tail.strip_prefix(placeholder) {
                out.push_str(value);
                rest = after;
                continue 'scan;
            }
        }
        out.push('{');
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}
