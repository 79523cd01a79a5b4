//! Profile rendering and prompt assembly in the original, alternative-order
//! and composite-score formats.

mod render;
mod template;

pub use crate::survey::PromptFormat;
pub use render::{composite_construct_scores, round_to, ConstructScore, PromptBundle, PromptForge, PromptMode};
pub use template::{AwarenessStyle, CompositeLine, Headings, NetworkTemplate, PromptTemplate, Questions};

use crate::survey::{DomainId, RespondentProfile};

/// The illustrative respondent shipped for each domain.
pub fn example_profile(domain: DomainId) -> RespondentProfile {
    let text = match domain {
        DomainId::Health => include_str!("../../fixtures/profile_health.json"),
        DomainId::Climate => include_str!("../../fixtures/profile_climate.json"),
        DomainId::Politics => include_str!("../../fixtures/profile_politics.json"),
    };
    serde_json::from_str(text).expect("example profiles parse")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survey::{AttitudeConstruct, AttitudeItem, DomainConfig, Outcome};

    #[test]
    fn examples_validate() {
        for d in DomainId::ALL {
            example_profile(d).validate(&DomainConfig::builtin(d)).unwrap();
        }
    }

    #[test]
    fn original_block_order() {
        let forge = PromptForge::builtin(DomainId::Health);
        let text = forge.render_profile(&example_profile(DomainId::Health), PromptFormat::Original);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "Personal Network");
        let last_heading = ["Personal Network", "Demographics", "Attitudes and Behaviors"]
            .into_iter()
            .max_by_key(|h| lines.iter().position(|l| l == h).unwrap())
            .unwrap();
        assert_eq!(last_heading, "Attitudes and Behaviors");
        assert!(text.contains("- You listed 3 regular contact(s): pp, cc, sh"));
        assert!(text.contains("- You discuss health issues with: pp"));
        assert!(text.contains("- cc knows pp, sh"));
        assert!(text.contains("- Scientists in the US: A lot"));
        assert!(text.contains("- How confident are you filling out medical forms by yourself: Extremely"));
    }

    #[test]
    fn alt_order_is_a_permutation() {
        for d in DomainId::ALL {
            let forge = PromptForge::builtin(d);
            let p = example_profile(d);
            let mut a: Vec<String> =
                forge.render_profile(&p, PromptFormat::Original).lines().map(String::from).collect();
            let alt = forge.render_profile(&p, PromptFormat::AltOrder);
            let mut b: Vec<String> = alt.lines().map(String::from).collect();
            a.sort();
            b.sort();
            assert_eq!(a, b);
            let net = alt.lines().position(|l| l == "Personal Network").unwrap();
            let att = alt.lines().position(|l| l == "Attitudes and Behaviors").unwrap();
            assert!(net > att);
        }
    }

    #[test]
    fn composite_density_line() {
        let forge = PromptForge::builtin(DomainId::Health);
        let text = forge.render_profile(&example_profile(DomainId::Health), PromptFormat::Composite);
        assert!(text.contains("- Network density: 0.67"), "{text}");
        assert!(text.contains("- Total number of alters: 3"));
        assert!(text.contains("- Trust in Science (1–4 scale): 4.0"));
        assert!(text.contains("- Alters by gender: Other 33%, Male 33%, Female 33%"));
        assert!(text.contains("- Average education of alters: Associate degree"));
    }

    #[test]
    fn composite_hides_item_prompts() {
        for d in DomainId::ALL {
            let forge = PromptForge::builtin(d);
            let p = example_profile(d);
            let text = forge.render_profile(&p, PromptFormat::Composite);
            for c in &p.attitudes {
                for item in &c.items {
                    assert!(!text.contains(&format!("{}:", item.prompt)), "{}", item.prompt);
                }
            }
        }
    }

    #[test]
    fn climate_network_rendering() {
        let forge = PromptForge::builtin(DomainId::Climate);
        let p = example_profile(DomainId::Climate);
        let text = forge.render_profile(&p, PromptFormat::Original);
        assert!(text.contains("- You discuss climate change with 2 contact(s): pp, sh"));
        assert!(text.contains(
            "- To the best of your knowledge, please indicate the degree to which you think they know one another: Most of them know each other"
        ));
        assert!(text.contains("- Closeness (1–5 scale): 4"));
        assert!(!text.contains("Coworker"));
        let comp = forge.render_profile(&p, PromptFormat::Composite);
        assert!(comp.contains("- Number of climate alters: 2"));
        assert!(comp.contains("- Share of all named alters: 67%"));
        assert!(comp.contains("- Kinship share of climate alters: 50%"));
        assert!(comp.contains("- Mean tie strength with climate alters (1–5 scale): 4.5"));
    }

    #[test]
    fn empty_blocks_render_marker() {
        let forge = PromptForge::builtin(DomainId::Politics);
        let mut p = example_profile(DomainId::Politics);
        p.network = Default::default();
        p.attitudes.clear();
        let text = forge.render_profile(&p, PromptFormat::Original);
        assert!(text.starts_with("Personal Network\n(none reported)"));
        assert!(text.ends_with("Attitudes and Behaviors\n(none reported)"));
    }

    #[test]
    fn construct_score_rounding() {
        let domain = DomainConfig::builtin(DomainId::Health);
        let mut p = example_profile(DomainId::Health);
        let mk = |name: &str, rs: &[i64]| AttitudeConstruct {
            construct: name.into(),
            items: rs.iter().map(|r| AttitudeItem { prompt: "q".into(), response: *r, label: None }).collect(),
        };
        p.attitudes = vec![
            mk("Trust in Science", &[3; 7]),
            mk("Health Literacy", &[5, 5, 5, 5]),
            mk("Political Leaning", &[1, 2]),
            mk("Social Media Use", &[]),
        ];
        let s = composite_construct_scores(&p, &domain);
        assert_eq!(s.len(), 3);
        assert_eq!((s[0].mean, s[0].bounds.as_str()), (3.0, "1–4"));
        assert_eq!(s[1].mean, 5.0);
        assert_eq!((s[2].mean, s[2].bounds.as_str()), (1.5, "1–7"));
    }

    #[test]
    fn health_belief_prompt() {
        let forge = PromptForge::builtin(DomainId::Health);
        let p = example_profile(DomainId::Health);
        let claim = &forge.domain.claims[1];
        let b = forge.assemble_prompt(&p, claim, Outcome::Belief, PromptFormat::Original, PromptMode::Plain).unwrap();
        assert!(b.user_text.ends_with("(1=Inaccurate, 7=Accurate)"));
        assert_eq!(b.expected_fields, vec!["response"]);
        assert!(b.system_text.starts_with("This survey was conducted in the United States in Oct 2023.\n"));
        assert!(b.system_text.contains("Based ONLY on the profile, answer the given question."));
        assert!(b.system_text.ends_with(r#"{"response": "integer"}"#));
        assert_eq!(b.user_text.matches(&claim.text).count(), 1);
        assert!(b.user_text.contains("\"Vaccinated individuals emit Bluetooth signals.\""));
    }

    #[test]
    fn politics_sharing_has_three_options() {
        let forge = PromptForge::builtin(DomainId::Politics);
        let p = example_profile(DomainId::Politics);
        let b = forge
            .assemble_prompt(&p, &forge.domain.claims[2], Outcome::Sharing, PromptFormat::Original, PromptMode::Plain)
            .unwrap();
        assert!(b.user_text.contains(
            "(1=No, I would not share it; 2=I would probably share it; 3=Yes, I would share it)"
        ));
        assert_eq!(b.scale.levels(), 3);
    }

    #[test]
    fn climate_cot_composite() {
        let forge = PromptForge::builtin(DomainId::Climate);
        let p = example_profile(DomainId::Climate);
        let b = forge
            .assemble_prompt(&p, &forge.domain.claims[0], Outcome::Belief, PromptFormat::Composite, PromptMode::Cot)
            .unwrap();
        assert_eq!(b.expected_fields, vec!["reasoning", "response"]);
        assert!(b.system_text.contains(r#""reasoning""#));
        assert!(b.user_text.contains("1. I agree with the information above\n2. I disagree with the information above."));
    }

    #[test]
    fn domain_mismatch_rejected() {
        let forge = PromptForge::builtin(DomainId::Health);
        let p = example_profile(DomainId::Climate);
        let claim = forge.domain.claims[0].clone();
        assert!(forge.assemble_prompt(&p, &claim, Outcome::Belief, PromptFormat::Original, PromptMode::Plain).is_err());
    }

    #[test]
    fn rendering_is_deterministic() {
        let forge = PromptForge::builtin(DomainId::Health);
        let p = example_profile(DomainId::Health);
        let c = &forge.domain.claims[0];
        let a = forge.assemble_prompt(&p, c, Outcome::Sharing, PromptFormat::AltOrder, PromptMode::Cot).unwrap();
        let b = forge.assemble_prompt(&p, c, Outcome::Sharing, PromptFormat::AltOrder, PromptMode::Cot).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.prompt_hash(), b.prompt_hash());
    }
}
