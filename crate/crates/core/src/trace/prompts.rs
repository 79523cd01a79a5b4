use super::spans::Target;
use super::variables::{Category, VariableRoster};

const EXTRACTION: &str = include_str!("../../templates/extraction.txt");
const DIRECTION: &str = include_str!("../../templates/direction.txt");

fn candidate_block(roster: &VariableRoster) -> String {
    Category::ALL
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let names: Vec<&str> = roster.in_category(c).map(|v| v.canonical_name.as_str()).collect();
            format!("({}) {}\n{}", i + 1, c.heading(), names.join(", "))
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Variable-extraction prompt for one reasoning chain.
pub fn extraction_prompt(reasoning: &str, roster: &VariableRoster) -> String {
    EXTRACTION
        .trim_end()
        .replace("{candidates}", &candidate_block(roster))
        .replace("{reasoning}", reasoning.trim())
}

/// Direction-of-association prompt for one span.
pub fn direction_prompt(text: &str, variable_name: &str, target: Target, roster: &VariableRoster) -> String {
    let rules: Vec<&str> = roster.variables.iter().filter_map(|v| v.reference_convention.as_deref()).collect();
    DIRECTION
        .trim_end()
        .replace("{reference_rules}", &rules.join("\n"))
        .replace("{variable_name}", variable_name)
        .replace("{target}", target.as_str())
        .replace("{text}", text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extraction_prompt_lists_candidates_by_category() {
        let p = extraction_prompt("Because of their trust in science ...", &VariableRoster::builtin());
        assert!(p.contains("Model reasoning:\nBecause of their trust in science ..."));
        assert!(p.contains("(1) Demographics\ngender, age, race, education, income, region"));
        assert!(p.contains("(3) Behavioral\nsocial media use, legacy media use, online media use"));
        assert!(p.contains("(4) Network Characteristics\nnetwork size, relationship with alters, issue-specific discussants,"));
        assert!(p.contains("\"label\": [List of selected variable names from the candidate variables]"));
        assert!(!p.contains("{candidates}"));
    }

    #[test]
    fn direction_prompt_carries_reference_categories() {
        let p = direction_prompt("Some text.", "gender", Target::Misinformation, &VariableRoster::builtin());
        assert!(p.contains("Text to Analyze:\n\"Some text.\""));
        assert!(p.contains("between the variable \"gender\" and the concept/outcome \"misinformation\""));
        assert!(p.contains("Gender: Interpret the variable as a binary indicator of being female (female = 1, not female = 0).\nRace:"));
        assert!(p.contains("Political leaning: Interpret the variable as a binary indicator of being conservative"));
        assert!(p.ends_with('}'));
    }
}
