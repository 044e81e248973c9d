//! End-to-end cost of one score on a mock table: template fill, dialogue
//! render, answer probe, two continuation lookups. Judge reply parsing
//! rides along since it sits on the same per-item path.

use std::collections::BTreeMap;

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use pluie::backend::mock::{MockBackend, MockTable};
use pluie::backend::{ChatConvention, RoleMarkers};
use pluie::judges::{parse_judge_reply, JudgeKind};
use pluie::score::{pluie_score, score_pair};
use pluie::templates::{bindings, get_template, judge_prompt, JudgePromptId, TemplateId};

const SOURCE: &str = "the quick brown fox jumps over the lazy dog";
const HYPOTHESIS: &str = "a fast brown fox leaps over a sleepy dog";

fn convention() -> ChatConvention {
    ChatConvention {
        system: RoleMarkers::new("<s>", "</s>"),
        user: RoleMarkers::new("<u>", "</u>"),
        assistant: RoleMarkers::new("<a>", "</a>"),
    }
}

/// A table that answers both pair orderings, so the bidirectional path has
/// everything it needs.
fn backend() -> MockBackend {
    let template = get_template(TemplateId::Para);
    let (s_slot, h_slot) = template.pair_slots().unwrap();
    let convention = convention();
    let mut vocabulary = BTreeMap::new();
    let mut add = |vocabulary: &mut BTreeMap<String, u32>, text: &str| {
        if !vocabulary.contains_key(text) {
            let id = vocabulary.len() as u32;
            vocabulary.insert(text.to_string(), id);
        }
    };
    add(&mut vocabulary, " Yes");
    add(&mut vocabulary, " No");
    let mut conditionals = BTreeMap::new();
    for (a, b) in [(SOURCE, HYPOTHESIS), (HYPOTHESIS, SOURCE)] {
        let turns = template.fill(&bindings(&[(s_slot, a), (h_slot, b)])).unwrap();
        for turn in &turns {
            add(&mut vocabulary, &turn.content);
        }
        let prefix = convention.render_text(&turns, false) + &convention.assistant.open;
        conditionals.insert(
            prefix,
            BTreeMap::from([(" Yes".to_string(), 0.7), (" No".to_string(), 0.3)]),
        );
    }
    MockBackend::new(MockTable {
        vocabulary,
        chat_convention: convention,
        conditionals,
        scripts: BTreeMap::new(),
        fallback_probability: None,
    })
    .unwrap()
}

fn bench_scoring(c: &mut Criterion) {
    let template = get_template(TemplateId::Para);
    let backend = backend();

    c.bench_function("pluie_score/para_mock", |b| {
        b.iter(|| {
            pluie_score(black_box(SOURCE), black_box(HYPOTHESIS), template, &backend).unwrap()
        })
    });

    c.bench_function("score_pair/bidirectional", |b| {
        b.iter(|| {
            score_pair(black_box(SOURCE), black_box(HYPOTHESIS), template, &backend, true)
                .unwrap()
        })
    });
}

fn bench_parsing(c: &mut Criterion) {
    let schema = &judge_prompt(JudgePromptId::YesNoParaphrase).answer_schema;
    let clean = r#"{"answer": "Yes"}"#;
    let wrapped = r#"Sure, here is my verdict: {"answer": "yes"} let me know if you need more"#;

    c.bench_function("parse_judge_reply/clean", |b| {
        b.iter(|| parse_judge_reply(black_box(clean), schema, JudgeKind::YesNo))
    });
    c.bench_function("parse_judge_reply/prose_wrapped", |b| {
        b.iter(|| parse_judge_reply(black_box(wrapped), schema, JudgeKind::YesNo))
    });
}

criterion_group!(benches, bench_scoring, bench_parsing);
criterion_main!(benches);
