//! Prompt templates, kept as text files under `prompts/`.
//!
//! Each template starts with a `# template: <name> v<version>` line and puts
//! its variable payload after the `=== INPUT ===` marker. Placeholders are
//! `{name}`.

pub const INPUT_MARKER: &str = "=== INPUT ===";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Template {
    pub name: &'static str,
    pub body: &'static str,
}

pub const GENERATE_QUERY: Template = Template { name: "generate_query", body: include_str!("../../prompts/generate_query.txt") };
pub const SUMMARIZE: Template = Template { name: "summarize", body: include_str!("../../prompts/summarize.txt") };
pub const REFINE: Template = Template { name: "refine", body: include_str!("../../prompts/refine.txt") };
pub const COMBINE: Template = Template { name: "combine", body: include_str!("../../prompts/combine.txt") };
pub const ANSWER: Template = Template { name: "answer", body: include_str!("../../prompts/answer.txt") };
pub const INSUFFICIENT_EVIDENCE: &str = include_str!("../../prompts/insufficient_evidence.txt");

impl Template {
    pub fn render(&self, vars: &[(&str, &str)]) -> String {
        let mut out = self.body.to_string();
        for (k, v) in vars {
            out = out.replace(&format!("{{{k}}}"), v);
        }
        out
    }

    pub fn version(&self) -> Option<&'static str> {
        self.body.lines().next()?.rsplit(' ').next()
    }
}

/// Name from a rendered prompt's header line.
pub fn template_name(prompt: &str) -> Option<&str> {
    let header = prompt.lines().next()?.strip_prefix("# template: ")?;
    header.split_whitespace().next()
}

/// Everything after the last input marker, trimmed.
pub fn input_section(prompt: &str) -> &str {
    match prompt.rfind(INPUT_MARKER) {
        Some(i) => prompt[i + INPUT_MARKER.len()..].trim(),
        None => prompt.trim(),
    }
}
