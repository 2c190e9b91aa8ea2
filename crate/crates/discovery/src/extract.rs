//! Pulling the program, its name and its description out of an LLM reply.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("the response contains no fenced code block")]
    NoCodeBlock,
    #[error("the code block declares no class or function")]
    NoName,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extracted {
    pub name: String,
    pub description: String,
    pub source: String,
}

/// Takes the first ``` fenced block as the source. The name is the first `class`, or failing
/// that the first non-dunder `def`. The description is the first non-empty line outside any
/// block, with a leading `#` and `Description:` label removed.
pub fn extract_code(response: &str) -> Result<Extracted, ExtractError> {
    let mut source: Option<Vec<&str>> = None;
    let mut current: Option<Vec<&str>> = None;
    let mut description: Option<String> = None;
    for line in response.lines() {
        let fence = line.trim_start().starts_with("```");
        match (&mut current, fence) {
            (Some(_), true) => {
                let block = current.take().expect("open block");
                source.get_or_insert(block);
            }
            (Some(block), false) => block.push(line),
            (None, true) => current = Some(Vec::new()),
            (None, false) => {
                if description.is_none() {
                    let d = clean_description(line);
                    if !d.is_empty() {
                        description = Some(d);
                    }
                }
            }
        }
    }
    // An unterminated block still counts: replies are sometimes cut off after the code.
    let source = source.or(current).ok_or(ExtractError::NoCodeBlock)?;
    let mut text = source.join("\n");
    text.push('\n');
    let name = declared_name(&text).ok_or(ExtractError::NoName)?;
    Ok(Extracted { name, description: description.unwrap_or_default(), source: text })
}

fn clean_description(line: &str) -> String {
    let mut d = line.trim().trim_start_matches('#').trim();
    for label in ["Description:", "description:"] {
        if let Some(rest) = d.strip_prefix(label) {
            d = rest.trim();
        }
    }
    if d == "Code:" {
        return String::new();
    }
    d.to_string()
}

fn identifier(s: &str) -> Option<String> {
    let id: String = s.chars().take_while(|c| c.is_ascii_alphanumeric() || *c == '_').collect();
    let first = id.chars().next()?;
    (first.is_ascii_alphabetic() || first == '_').then_some(id)
}

pub fn declared_name(source: &str) -> Option<String> {
    let class = source.lines().find_map(|l| l.strip_prefix("class ").and_then(identifier));
    class.or_else(|| {
        source
            .lines()
            .filter_map(|l| l.trim_start().strip_prefix("def ").and_then(identifier))
            .find(|n| !n.starts_with("__"))
    })
}
