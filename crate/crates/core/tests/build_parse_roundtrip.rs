use eamt_core::alignment::{AlignedEntity, Channel};
use eamt_core::corpus::{DatasetEntry, TargetReference};
use eamt_core::parser::{parse_generation, Structure};
use eamt_core::text::normalize_whitespace;
use eamt_core::{build_example, strip_entity_tags};
use proptest::prelude::*;

/// Translation assembled from words with entity mentions spliced in, so each
/// mention is guaranteed to occur.
fn entry_with_entities() -> impl Strategy<Value = (DatasetEntry, Vec<AlignedEntity>)> {
    let word = "[a-zA-ZäöüßéÉ]{1,7}[?!.,]?";
    let mention = proptest::collection::vec("[A-Za-zÀ-ÿ]{1,6}", 1..3).prop_map(|w| w.join(" "));
    (
        proptest::collection::vec(word, 1..12),
        proptest::collection::vec((mention.clone(), mention, 0usize..12), 0..4),
    )
        .prop_map(|(mut words, ents)| {
            let mut entities = Vec::new();
            let mut source = String::from("Where is");
            for (src, tgt, at) in ents {
                let pos = at % (words.len() + 1);
                words.insert(pos, tgt.clone());
                let start = source.len() + 1;
                source.push(' ');
                source.push_str(&src);
                entities.push(AlignedEntity {
                    source_span: (start, start + src.len()),
                    source_mention: src,
                    target_mention: tgt,
                    channel: Channel::Llm,
                });
            }
            source.push('?');
            let translation = words.join(" ");
            let entry = DatasetEntry {
                id: "fuzz_0".into(),
                wikidata_id: "fuzz".into(),
                entity_types: vec![],
                source,
                targets: vec![TargetReference {
                    mention: translation.clone(),
                    translation,
                }],
                source_locale: "en".into(),
                target_locale: "de".into(),
            };
            (entry, entities)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn parse_inverts_build((entry, entities) in entry_with_entities()) {
        let ex = match build_example(&entry, 0, &entities) {
            Ok(ex) => ex,
            // a short mention fully covered by a longer one cannot be tagged separately
            Err(eamt_core::BuildError::MentionShadowed { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert_eq!(ex.target_text.matches("<SEP>").count(), 2);
        prop_assert_eq!(ex.target_text.matches("<entity>").count(), entities.len());
        prop_assert_eq!(ex.target_text.matches("</entity>").count(), entities.len());

        let parsed = parse_generation(&ex.target_text);
        prop_assert_eq!(parsed.structure, Structure::WellFormed);
        let expected: Vec<(String, String)> = ex.entities.iter()
            .map(|p| (p.source_mention.clone(), p.target_mention.clone())).collect();
        prop_assert_eq!(parsed.predicted_entities, expected);
        prop_assert_eq!(parsed.clean_translation, normalize_whitespace(&entry.targets[0].translation));

        let (_, spans) = strip_entity_tags(&parsed.tagged_translation);
        prop_assert_eq!(spans.len(), entities.len());
    }
}
