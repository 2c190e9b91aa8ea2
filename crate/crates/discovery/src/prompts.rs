//! Prompt templates and their instantiation.

use std::fs;
use std::path::Path;

use photonopt_core::fmt::format_g;
use photonopt_core::problems::Family;

use crate::candidate::CandidateAlgorithm;
use crate::mutation::QuotaRule;

const TASK: &str = include_str!("../assets/prompts/task.txt");
const MUTATION: &str = include_str!("../assets/prompts/mutation.txt");
const FEEDBACK: &str = include_str!("../assets/prompts/feedback.txt");
const ERROR_FEEDBACK: &str = include_str!("../assets/prompts/error_feedback.txt");
const OUTPUT_FORMAT: &str = include_str!("../assets/prompts/output_format.txt");
const SELECTED: &str = include_str!("../assets/prompts/selected.txt");

/// Longest stderr excerpt pasted into an error-feedback prompt.
pub const STDERR_FEEDBACK_LIMIT: usize = 2000;

/// Which optional sections the task prompt carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PromptSetting {
    Bare,
    Description,
    #[default]
    DescriptionAndInsight,
}

impl std::str::FromStr for PromptSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bare" | "none" => Ok(Self::Bare),
            "description" => Ok(Self::Description),
            "full" | "description+insight" => Ok(Self::DescriptionAndInsight),
            _ => Err(format!("unknown prompt setting `{s}` (expected bare, description or full)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub task: String,
    pub problem_description: Option<String>,
    pub algorithmic_insight: Option<String>,
    pub mutation_template: String,
    pub feedback_template: String,
    pub error_feedback_template: String,
    pub output_format: String,
    pub selected_template: String,
}

pub fn problem_description(family: Family) -> &'static str {
    match family {
        Family::Bragg => include_str!("../assets/prompts/description_bragg.txt"),
        Family::Ellipsometry => include_str!("../assets/prompts/description_ellipsometry.txt"),
        Family::Photovoltaic => include_str!("../assets/prompts/description_photovoltaic.txt"),
    }
}

pub fn algorithmic_insight(family: Family) -> &'static str {
    match family {
        Family::Bragg => include_str!("../assets/prompts/insight_bragg.txt"),
        Family::Ellipsometry => include_str!("../assets/prompts/insight_ellipsometry.txt"),
        Family::Photovoltaic => include_str!("../assets/prompts/insight_photovoltaic.txt"),
    }
}

impl PromptBundle {
    pub fn builtin(family: Family, setting: PromptSetting) -> Self {
        let with_desc = setting != PromptSetting::Bare;
        let with_insight = setting == PromptSetting::DescriptionAndInsight;
        Self {
            task: TASK.trim_end().to_string(),
            problem_description: with_desc.then(|| problem_description(family).trim_end().to_string()),
            algorithmic_insight: with_insight.then(|| algorithmic_insight(family).trim_end().to_string()),
            mutation_template: MUTATION.trim_end().to_string(),
            feedback_template: FEEDBACK.trim_end().to_string(),
            error_feedback_template: ERROR_FEEDBACK.trim_end().to_string(),
            output_format: OUTPUT_FORMAT.trim_end().to_string(),
            selected_template: SELECTED.trim_end().to_string(),
        }
    }

    /// Replaces any template found in `dir` (task.txt, mutation.txt, feedback.txt,
    /// error_feedback.txt, output_format.txt, selected.txt, description.txt, insight.txt).
    pub fn override_from_dir(mut self, dir: &Path) -> std::io::Result<Self> {
        let read = |name: &str| -> std::io::Result<Option<String>> {
            let p = dir.join(name);
            if p.exists() {
                Ok(Some(fs::read_to_string(p)?.trim_end().to_string()))
            } else {
                Ok(None)
            }
        };
        if let Some(t) = read("task.txt")? {
            self.task = t;
        }
        if let Some(t) = read("mutation.txt")? {
            self.mutation_template = t;
        }
        if let Some(t) = read("feedback.txt")? {
            self.feedback_template = t;
        }
        if let Some(t) = read("error_feedback.txt")? {
            self.error_feedback_template = t;
        }
        if let Some(t) = read("output_format.txt")? {
            self.output_format = t;
        }
        if let Some(t) = read("selected.txt")? {
            self.selected_template = t;
        }
        if let Some(t) = read("description.txt")? {
            self.problem_description = Some(t);
        }
        if let Some(t) = read("insight.txt")? {
            self.algorithmic_insight = Some(t);
        }
        Ok(self)
    }

    /// Task prompt with the optional sections filled in; absent sections drop their line.
    pub fn task_prompt(&self) -> String {
        let mut lines = Vec::new();
        for line in self.task.lines() {
            match line.trim() {
                "{problem_description}" => lines.extend(self.problem_description.as_deref()),
                "{algorithmic_insight}" => lines.extend(self.algorithmic_insight.as_deref()),
                _ => lines.push(line),
            }
        }
        lines.join("\n")
    }

    /// Query for the very first candidates.
    pub fn initial_prompt(&self) -> String {
        format!("{}\n\n{}", self.task_prompt(), self.output_format)
    }

    pub fn mutation_prompt(&self, n: usize, x: u32, rule: QuotaRule) -> String {
        let quota = rule.quota(n, x);
        fill(
            &self.mutation_template,
            &[
                ("x", x.to_string()),
                ("x_floor", x.to_string()),
                ("n", n.to_string()),
                ("quota", quota.to_string()),
                ("rest", n.saturating_sub(quota).to_string()),
            ],
        )
    }

    /// Score feedback for an evaluated candidate, error feedback for a failed one.
    pub fn feedback_prompt(&self, c: &CandidateAlgorithm) -> String {
        match (&c.error, &c.scores) {
            (None, Some(s)) => fill(
                &self.feedback_template,
                &[
                    ("name", c.name.clone()),
                    ("aocc", format_g(s.aocc_mean, 4)),
                    ("aocc_std", format_g(s.aocc_std, 4)),
                    ("y_best", format_g(s.y_best_mean, 4)),
                    ("y_best_std", format_g(s.y_best_std, 4)),
                ],
            ),
            (error, _) => {
                let text = error.as_deref().unwrap_or("no score was recorded");
                fill(&self.error_feedback_template, &[("name", c.name.clone()), ("stderr", tail_chars(text, STDERR_FEEDBACK_LIMIT))])
            }
        }
    }

    /// Full query asking for a mutated version of `parent`.
    pub fn offspring_prompt(&self, parent: &CandidateAlgorithm, x: u32, rule: QuotaRule) -> String {
        let selected = fill(&self.selected_template, &[("description", parent.description.clone()), ("source", parent.source.clone())]);
        format!(
            "{}\n\n{}\n\n{}\n\n{}\n\n{}",
            self.task_prompt(),
            selected,
            self.feedback_prompt(parent),
            self.mutation_prompt(parent.line_count(), x, rule),
            self.output_format
        )
    }
}

/// Substitutes `{key}` tokens in one pass, so values containing braces are left alone.
pub fn fill(template: &str, values: &[(&str, String)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        let hit = after.find('}').and_then(|end| values.iter().find(|(k, _)| *k == &after[..end]).map(|(_, v)| (end, v)));
        match hit {
            Some((end, v)) => {
                out.push_str(v);
                rest = &after[end + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

fn tail_chars(s: &str, limit: usize) -> String {
    let s = s.trim();
    let count = s.chars().count();
    if count <= limit {
        return s.to_string();
    }
    let tail: String = s.chars().skip(count - limit).collect();
    format!("...{tail}")
}
