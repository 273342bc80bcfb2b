//! Rule-guided description refinement and the code-generation rule set.

use std::collections::HashSet;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::llm::{normalize, ChatModel, ChatRequest, LlmError, StageTag};

const CODEGEN_RULES: &str = include_str!("../assets/rules/codegen.rules");
const SPEC_RULES: &str = include_str!("../assets/rules/spec.rules");

/// Opening line of the system prompt used for code generation.
pub const ROLE_LINE: &str =
    "You are an expert digital hardware engineer who writes correct, synthesizable Verilog RTL.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    SpecCheck,
    CodegenConstraint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub kind: RuleKind,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub rule_id: String,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementResult {
    pub refined_description: String,
    pub findings: Vec<Finding>,
    pub changed: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum RuleParseError {
    #[error("line {line}: expected \"id<TAB>text\"")]
    MissingTab { line: usize },
    #[error("line {line}: empty rule id or text")]
    Empty { line: usize },
    #[error("line {line}: duplicate rule id {id:?}")]
    Duplicate { line: usize, id: String },
}

#[derive(Debug, thiserror::Error)]
pub enum RefineError {
    #[error("description is empty")]
    EmptyDescription,
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("refinement response format error: {0}")]
    Format(String),
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.id, self.text)
    }
}

/// Parses a rule file: one `id<TAB>text` per line, `#` comments and blank lines ignored.
pub fn parse_rules(text: &str, kind: RuleKind) -> Result<Vec<Rule>, RuleParseError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (id, body) = line
            .split_once('\t')
            .ok_or(RuleParseError::MissingTab { line: line_no })?;
        let (id, body) = (id.trim(), body.trim());
        if id.is_empty() || body.is_empty() {
            return Err(RuleParseError::Empty { line: line_no });
        }
        if !seen.insert(id.to_string()) {
            return Err(RuleParseError::Duplicate {
                line: line_no,
                id: id.to_string(),
            });
        }
        out.push(Rule {
            id: id.to_string(),
            kind,
            text: body.to_string(),
        });
    }
    Ok(out)
}

/// The ten code-generation constraints placed in every generation system prompt.
pub fn codegen_rules() -> &'static [Rule] {
    static CELL: OnceLock<Vec<Rule>> = OnceLock::new();
    CELL.get_or_init(|| {
        parse_rules(CODEGEN_RULES, RuleKind::CodegenConstraint).expect("bundled codegen rules parse")
    })
}

/// Design-rule checks applied to descriptions.
pub fn spec_rules() -> &'static [Rule] {
    static CELL: OnceLock<Vec<Rule>> = OnceLock::new();
    CELL.get_or_init(|| parse_rules(SPEC_RULES, RuleKind::SpecCheck).expect("bundled spec rules parse"))
}

/// Role line, numbered rules, then `extra_context` if nonempty.
pub fn build_system_prompt(rules: &[Rule], extra_context: &str) -> String {
    let mut out = String::from(ROLE_LINE);
    out.push('\n');
    if !rules.is_empty() {
        out.push_str("\nFollow these rules:\n");
        for (i, r) in rules.iter().enumerate() {
            out.push_str(&format!("{}. {}\n", i + 1, r.text));
        }
    }
    let ctx = extra_context.trim();
    if !ctx.is_empty() {
        out.push('\n');
        out.push_str(ctx);
        out.push('\n');
    }
    out
}

pub const REFINED_BEGIN: &str = "REFINED_BEGIN";
pub const REFINED_END: &str = "REFINED_END";
pub const NO_VIOLATIONS: &str = "NO_VIOLATIONS";

fn refine_system_prompt() -> String {
    let mut out = String::from(
        "You review natural-language specifications of digital circuits before they are implemented in Verilog.\n\
         Check the specification against each design rule below.\n",
    );
    for r in spec_rules() {
        out.push_str(&format!("- [{}] {}\n", r.id, r.text));
    }
    out.push_str(&format!(
        "\nIf the specification satisfies every rule, answer with the single line {NO_VIOLATIONS}.\n\
         Otherwise, write one line \"VIOLATION <rule_id>: <note>\" per problem, then the complete clarified \
         specification between a line {REFINED_BEGIN} and a line {REFINED_END}. Resolve each problem using \
         the interface and the rest of the specification; do not change the intended behaviour.\n"
    ));
    out
}

fn refine_user_prompt(description: &str, iface: &str) -> String {
    format!(
        "Module interface:\n{}\n\nSpecification:\n{}\n",
        iface.trim_end(),
        description.trim_end()
    )
}

pub fn refine_request(description: &str, iface: &str) -> ChatRequest {
    ChatRequest::new(
        StageTag::Refine,
        refine_system_prompt(),
        refine_user_prompt(description, iface),
    )
}

fn violation_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*VIOLATION\s+([A-Za-z0-9_.\-]+)\s*:\s*(.*?)\s*$").unwrap())
}

/// Parses a refinement reply. Unknown rule ids are kept as reported.
pub fn parse_refinement(description: &str, response: &str) -> Result<RefinementResult, RefineError> {
    let lines: Vec<&str> = response.lines().collect();
    let begin = lines.iter().position(|l| l.trim() == REFINED_BEGIN);
    let end = lines.iter().rposition(|l| l.trim() == REFINED_END);
    let findings: Vec<Finding> = lines[..begin.unwrap_or(lines.len())]
        .iter()
        .filter_map(|l| violation_re().captures(l))
        .map(|c| Finding {
            rule_id: c[1].to_string(),
            note: c[2].to_string(),
        })
        .collect();
    let (b, e) = match (begin, end) {
        (Some(b), Some(e)) if b < e => (b, e),
        (Some(_), _) | (None, Some(_)) => {
            return Err(RefineError::Format(format!(
                "unbalanced {REFINED_BEGIN}/{REFINED_END} markers"
            )))
        }
        (None, None) => {
            if findings.is_empty() && lines.iter().any(|l| l.trim() == NO_VIOLATIONS) {
                return Ok(RefinementResult {
                    refined_description: description.to_string(),
                    findings,
                    changed: false,
                });
            }
            return Err(RefineError::Format(format!(
                "response has neither {NO_VIOLATIONS} nor a {REFINED_BEGIN}/{REFINED_END} block"
            )));
        }
    };
    let block = lines[b + 1..e].join("\n");
    if block.trim().is_empty() {
        return Err(RefineError::Format("refined description block is empty".into()));
    }
    let refined = if normalize(&block) == normalize(description) {
        description.to_string()
    } else {
        block
    };
    Ok(RefinementResult {
        changed: refined != description,
        refined_description: refined,
        findings,
    })
}

/// Checks `description` against the spec rules through `llm` and returns the clarified text.
pub fn refine(description: &str, iface: &str, llm: &dyn ChatModel) -> Result<RefinementResult, RefineError> {
    if description.trim().is_empty() {
        return Err(RefineError::EmptyDescription);
    }
    let completion = llm.complete(&refine_request(description, iface))?;
    parse_refinement(description, &completion.text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ScriptRule, ScriptedModel};

    const IFACE: &str = "module top_module(input clk, input reset, input ena, output reg [3:0] q);";

    #[test]
    fn exactly_ten_codegen_rules_with_the_wire_rule_first() {
        let rules = codegen_rules();
        assert_eq!(rules.len(), 10);
        assert!(rules.iter().all(|r| r.kind == RuleKind::CodegenConstraint));
        assert_eq!(
            rules[0].text,
            "Do not assign values to wire-type variables within always blocks."
        );
        assert!(rules
            .iter()
            .any(|r| r.text.contains("Do not assign values to wire-type variables within always blocks")));
    }

    #[test]
    fn spec_rules_cover_initialization_reset_enable_and_consistency() {
        let ids: Vec<&str> = spec_rules().iter().map(|r| r.id.as_str()).collect();
        for id in ["reg_init", "reset_spec", "enable_trigger", "consistency"] {
            assert!(ids.contains(&id), "missing {id}");
        }
        assert!(spec_rules().iter().all(|r| r.kind == RuleKind::SpecCheck));
    }

    #[test]
    fn rule_file_errors() {
        assert!(matches!(
            parse_rules("a b\n", RuleKind::SpecCheck),
            Err(RuleParseError::MissingTab { line: 1 })
        ));
        assert!(matches!(
            parse_rules("a\tx\n# c\na\ty\n", RuleKind::SpecCheck),
            Err(RuleParseError::Duplicate { line: 3, .. })
        ));
        assert!(matches!(
            parse_rules("a\t \n", RuleKind::SpecCheck),
            Err(RuleParseError::Empty { line: 1 })
        ));
    }

    #[test]
    fn system_prompt_numbers_rules_then_context() {
        let p = build_system_prompt(codegen_rules(), "");
        let numbered = p
            .lines()
            .filter(|l| l.split_once(". ").is_some_and(|(n, _)| n.parse::<u32>().is_ok()))
            .count();
        assert_eq!(numbered, 10);
        assert_eq!(p, build_system_prompt(codegen_rules(), ""));
        let with_ctx = build_system_prompt(codegen_rules(), "KB: edge detection");
        let last_rule = with_ctx.find("10. ").unwrap();
        assert!(with_ctx.find("KB: edge detection").unwrap() > last_rule);
    }

    #[test]
    fn system_prompt_golden() {
        let rules = vec![
            Rule {
                id: "a".into(),
                kind: RuleKind::CodegenConstraint,
                text: "First.".into(),
            },
            Rule {
                id: "b".into(),
                kind: RuleKind::CodegenConstraint,
                text: "Second.".into(),
            },
        ];
        assert_eq!(
            build_system_prompt(&rules, "CTX\n"),
            format!("{ROLE_LINE}\n\nFollow these rules:\n1. First.\n2. Second.\n\nCTX\n")
        );
    }

    #[test]
    fn initialization_and_enable_findings_change_the_description() {
        let desc = "Build a 4-bit counter that counts up when ena is asserted.";
        let reply = "VIOLATION reg_init: the starting value of q is not given\n\
                     VIOLATION enable_trigger: ena could be read as a level or an edge\n\
                     REFINED_BEGIN\n\
                     Build a 4-bit counter q. On every rising edge of clk: if reset is high (synchronous, active high), q becomes 0; \
                     otherwise, while ena is high, q increments by 1 and wraps from 15 to 0. When ena is low, q holds.\n\
                     REFINED_END\n";
        let llm = ScriptedModel::new(vec![ScriptRule::tag(StageTag::Refine, reply)]);
        let r = refine(desc, IFACE, &llm).unwrap();
        assert!(r.changed);
        let ids: Vec<&str> = r.findings.iter().map(|f| f.rule_id.as_str()).collect();
        assert_eq!(ids, vec!["reg_init", "enable_trigger"]);
        assert!(r.refined_description.contains("q becomes 0"));
    }

    #[test]
    fn no_violations_leaves_description_untouched() {
        let llm = ScriptedModel::new(vec![ScriptRule::any("NO_VIOLATIONS")]);
        let d = "A 2-input AND gate.";
        let r = refine(d, "module top_module(input a, input b, output y);", &llm).unwrap();
        assert!(!r.changed);
        assert_eq!(r.refined_description, d);
        assert!(r.findings.is_empty());
        let again = refine(&r.refined_description, "module top_module(input a, input b, output y);", &llm).unwrap();
        assert_eq!(again, r);
    }

    #[test]
    fn malformed_responses_are_format_errors() {
        for reply in [
            "I think it is fine.",
            "VIOLATION reg_init: x\nREFINED_BEGIN\nno end",
            "REFINED_END\nREFINED_BEGIN",
            "REFINED_BEGIN\n\nREFINED_END",
        ] {
            let llm = ScriptedModel::new(vec![ScriptRule::any(reply)]);
            assert!(matches!(refine("d", "", &llm), Err(RefineError::Format(_))), "{reply:?}");
        }
        let llm = ScriptedModel::new(vec![]);
        assert!(matches!(refine("d", "", &llm), Err(RefineError::Llm(_))));
        assert!(matches!(refine("  ", "", &llm), Err(RefineError::EmptyDescription)));
    }

    #[test]
    fn block_equal_to_input_is_unchanged() {
        let d = "Same text.";
        let r = parse_refinement(d, "REFINED_BEGIN\nSame text.   \nREFINED_END").unwrap();
        assert!(!r.changed);
        assert_eq!(r.refined_description, d);
    }
}
