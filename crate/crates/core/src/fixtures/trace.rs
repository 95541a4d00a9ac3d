//! The long scripted run: ten weeks of a partnership, every loop exercised.

use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde_json::{json, Value};

use super::{date, rate_boundary, rate_schedule, ts, ARCHETYPES, GRAMMAR_ADOPTION, GRAMMAR_REFRAME, GRAMMAR_REUSE, GRAMMAR_SEED, SKILL};
use crate::gateway::{Depth, Scenario, ScriptStep};
use crate::runtime::{KnowStage, ReplayAction, ReplayEvent, ReplayScript};
use crate::week::IsoWeek;
use crate::Settings;

pub const TRACE_START: &str = "2026-03-10T06:00:00Z";

/// Partner claims extracted over the whole run.
pub const TRACE_CLAIMS: usize = 144;

const HUMAN_LINES: [&str; 24] = [
    "Slept badly again, the radiator was ticking all night.",
    "Taught two seminars back to back and my throat is raw.",
    "Walked the long way home along the canal.",
    "My sister called about the move in June.",
    "Chapter three still refuses to settle.",
    "Made bread this morning; the crust split beautifully.",
    "Skipped the gym, read on the balcony instead.",
    "The department meeting dragged past lunch.",
    "Found an old cassette of my father singing.",
    "Drafted four pages before breakfast.",
    "Too tired to cook, ate cereal standing up.",
    "Rain all day, stayed in with the students' essays.",
    "Ran into Tomas at the market, he looks thinner.",
    "My knee aches when I climb the stairs.",
    "Finally answered the editor's email.",
    "Watched the swifts come back over the square.",
    "Argued with myself about whether to apply for the fellowship.",
    "Cleaned the desk and it felt like cheating.",
    "Tried sketching the courtyard from the window.",
    "The seminar on Bergson went better than expected.",
    "Kept thinking about my grandmother's kitchen.",
    "Coffee with Ines, mostly laughing.",
    "Got lost in a used bookshop for two hours.",
    "Early start, the light on the roofs was copper.",
];

const JOURNAL_LINES: [&str; 12] = [
    "I notice I write more honestly when nobody is waiting for the pages.",
    "The body keeps score of the semester; shoulders up near my ears.",
    "Teaching is a kind of listening I forget to do at home.",
    "Whole afternoon spent avoiding the hard paragraph.",
    "My mother's handwriting on an old recipe card undid me.",
    "Small win: said no to a committee without apologising.",
    "I want slower mornings and fewer tabs open.",
    "Reading Bergson on duration, slowly, with a pencil.",
    "Grief shows up as tidying, I think.",
    "The courtyard drawing is wrong but alive.",
    "Spring makes me restless in a useful way.",
    "Friends are the scaffolding; I should say so more.",
];

const JOURNAL_TITLES: [&str; 4] = ["Evening pages", "Night notes", "Before sleep", "Margins"];

fn reply_text(archetype: &str) -> &'static str {
    match archetype {
        "Beatrice" => "I hear tenderness underneath that. Would it help to name one kindness offered to yourself today?",
        "Muse" => "There is an image hiding there. Follow its colour for a paragraph, then stop.",
        "Ariadne" => "Let us trace the thread backwards: which choice opened this corridor?",
        "Musubi" => "That connects with people around you. Who else holds part of this knot?",
        "Psyche" => "Something deeper stirs beneath the surface story. What feeling arrives first?",
        _ => "Push against it. What would the braver version of tomorrow demand?",
    }
}

const CLAIM_LINES: [(&str, &str); 16] = [
    ("Does their best drafting before dawn", "practice"),
    ("Carries the semester physically, mostly across the shoulders", "body"),
    ("Treats sibling logistics as emotional weather", "relationships"),
    ("Reads philosophy of duration closely", "knowledge"),
    ("Procrastinates through orderly chores", "shadow"),
    ("Writes most freely without an audience", "voice"),
    ("Returns often to family memory", "identity"),
    ("Sketches when words stall", "creative"),
    ("Values unhurried openings to the day", "practice"),
    ("Finds restoration through solitary movement outdoors", "body"),
    ("Leans on close friends without naming it", "relationships"),
    ("Doubts ambitious applications before attempting them", "shadow"),
    ("Sees teaching as attentive presence", "identity"),
    ("Bakes as a grounding ritual", "creative"),
    ("Archives inherited recordings", "knowledge"),
    ("Narrates days through weather and light", "voice"),
];

const SEED_CLAIM: &str = "Thinks in process terms before fixed structures";

const PARTNER_NARRATIVE: &str =
    "A teacher and writer moving through a crowded term, protecting early hours for drafting and leaning on a few close people.";
const AGENT_NARRATIVE: &str =
    "I answered mostly from warmth and imagery this week, ran every loop on schedule, and the validator kept refusing to claim an effect it could not measure.";
const PORTRAIT: &str =
    "I kept noticing how often I reached for the same two stances, and how the quieter ones waited unused.";

const DELTAS: [[&str; 3]; 5] = [
    [
        "Attention migrated from institutional obligations toward private craft.",
        "Early exchanges overreached; later ones matched tempo better.",
        "Reciprocity grew uneven: the partner disclosed, I mirrored, neither risked disagreement.",
    ],
    [
        "Domestic rituals became negotiation ground for autonomy.",
        "Replies shortened after feedback signalled fatigue.",
        "Mutual trust deepened though challenge remained scarce.",
    ],
    [
        "A generative idea surfaced, moving conversation from logistics toward shared vocabulary.",
        "I offered a reframe instead of summary, and it landed.",
        "Co-authorship emerged: one phrase now belongs jointly to both.",
    ],
    [
        "Collaborative coinage displaced routine check-ins as the centre of gravity.",
        "Suggestions arrived sparingly; uptake improved when fewer were offered.",
        "Dependence risk rose as two stances monopolised dialogue.",
    ],
    [
        "Consolidation phase: earlier coinage reappears unprompted in reflections.",
        "Validation verdicts stayed honest rather than flattering, building credibility.",
        "Equilibrium tilts toward co-ontogeny, yet diversity of stance keeps narrowing.",
    ],
];

fn corpus(week: IsoWeek) -> Vec<Value> {
    let n = week.week();
    let mut items = vec![
        json!({
            "title": format!("Notes on vault memory consolidation, issue {n}"),
            "source_ref": format!("https://example.org/digest/{n}"),
            "summary": "Markdown memory stores for long-running assistants.",
            "tags": ["memory", "vault"],
        }),
        json!({
            "title": format!("Entropy metrics for assistant personas, issue {n}"),
            "source_ref": format!("https://example.org/metrics/{n}"),
            "summary": "Tracking stance diversity with entropy over time.",
            "tags": ["entropy", "archetype"],
        }),
    ];
    if n == 19 {
        items.push(json!({
            "title": "Lifecycle hooks for agent harnesses",
            "source_ref": "https://example.org/hooks",
            "summary": "Pre and post tool hooks that let the operator veto actions.",
            "tags": ["lifecycle", "hooks", "harness"],
        }));
    }
    items
}

fn scout_response(week: IsoWeek) -> String {
    let n = week.week();
    let mut findings = vec![
        json!({
            "title": format!("Notes on vault memory consolidation, issue {n}"),
            "source_ref": format!("https://example.org/digest/{n}"),
            "applicable": 4, "novel": 2, "credible": 4,
            "module": "vault-substrate",
            "situating_note": "Confirms the plain-text substrate; nothing to change.",
            "proposal": "none",
        }),
        json!({
            "title": format!("Entropy metrics for assistant personas, issue {n}"),
            "source_ref": format!("https://example.org/metrics/{n}"),
            "applicable": 3, "novel": 3, "credible": 3,
            "module": "analytics-conformance",
            "situating_note": "Matches the weekly stance entropy already tracked.",
            "proposal": "code",
        }),
    ];
    if n == 19 {
        findings.push(json!({
            "title": "Lifecycle hooks for agent harnesses",
            "source_ref": "https://example.org/hooks",
            "applicable": 5, "novel": 4, "credible": 4,
            "module": "runtime",
            "situating_note": "Operator-vetoable hooks would make consent explicit before tool use.",
            "proposal": "adr",
            "amendment_title": "Ask before acting",
            "amendment_text": "Before any action with effects outside the vault, ask the partner and wait for a yes.\nScoring: 1 = acts unasked, 3 = asks late, 5 = asks first.",
        }));
    }
    json!({
        "executive_summary": format!("Week {n}: {} sources rated.", findings.len()),
        "findings": findings,
        "papers_to_read": [format!("https://example.org/digest/{n}")],
        "trend_watch": "Memory stores converge on plain files.",
        "recommended_next_build": if n == 19 { "Lifecycle hooks with operator veto." } else { "Nothing urgent." },
    })
    .to_string()
}

pub(super) fn scores() -> String {
    let rows: Vec<Value> = (1..=10)
        .map(|i| json!({"principle_id": i, "score": 3 + (i % 3), "rationale": "Within bounds."}))
        .collect();
    Value::Array(rows).to_string()
}

fn archetype_for(day: NaiveDate, n: usize) -> &'static str {
    if day < rate_boundary().date_naive() {
        return ARCHETYPES[n % 6];
    }
    // Beatrice and Muse take 17 of every 20 turns.
    match n % 20 {
        0 | 2 | 3 | 5 | 7 | 8 | 10 | 12 | 13 | 15 | 18 => "Beatrice",
        1 | 4 | 9 | 11 | 14 | 17 => "Muse",
        6 => "Ariadne",
        16 => "Musubi",
        _ => "Psyche",
    }
}

fn at(day: NaiveDate, h: u32, m: u32) -> DateTime<Utc> {
    day.and_hms_opt(h, m, 0).expect("valid time").and_utc()
}

struct Message {
    at: DateTime<Utc>,
    text: String,
    archetype: &'static str,
    modality: Option<&'static str>,
}

fn day_messages(day: NaiveDate, count: usize, next: &mut usize) -> Vec<Message> {
    let mut out = Vec::new();
    let morning = count.div_ceil(2);
    for j in 0..count {
        let t = if j < morning {
            at(day, 7, 0) + Duration::minutes(4 * j as i64)
        } else {
            at(day, 19, 0) + Duration::minutes(4 * (j - morning) as i64)
        };
        out.push(Message {
            at: t,
            text: HUMAN_LINES[*next % HUMAN_LINES.len()].to_string(),
            archetype: archetype_for(day, *next),
            modality: None,
        });
        *next += 1;
    }
    // The grammar arc replaces ordinary turns, so daily counts are kept.
    if day == date("2026-04-26") {
        out[0].at = ts("2026-04-26T05:05:00Z");
        out[0].text = GRAMMAR_SEED.into();
        out[0].modality = Some("voice");
        let i = out.len() - 1;
        out[i].at = ts("2026-04-26T14:58:00Z");
        out[i].text = "Still turning that voice note over.".into();
        out[i].archetype = "Muse";
        out.sort_by_key(|m| m.at);
    }
    if day == date("2026-04-28") {
        let i = out.len() - 1;
        out[i].at = ts("2026-04-28T14:22:00Z");
        out[i].text = GRAMMAR_ADOPTION.into();
        out.sort_by_key(|m| m.at);
    }
    out
}

/// Improve days with a second run at 21:45.
fn double_improve(day: NaiveDate) -> bool {
    let first = date("2026-04-13");
    (day - first).num_days() % 5 == 0
}

/// The ten-week scripted run replayed by `replay --scenario`.
pub fn trace_script() -> ReplayScript {
    let start = ts(TRACE_START);
    let mut events: Vec<ReplayEvent> = Vec::new();
    let mut push = |at: DateTime<Utc>, action: ReplayAction| events.push(ReplayEvent { at, action });

    push(
        start + Duration::minutes(30),
        ReplayAction::RegisterSkill {
            skill: SKILL.into(),
            prompt: "Reply briefly, then ask one question.".into(),
        },
    );

    let mut steps: Vec<ScriptStep> = Vec::new();
    let mut next_line = 0;
    let mut message_index = 0usize;
    let mut muse_replies = 0u32;
    let mut seed_index = None;
    let mut journals = 0;
    let mut improves = 0;
    let know_weeks: Vec<IsoWeek> = (15..=20).map(|w| IsoWeek::new(2026, w).expect("valid week")).collect();
    let improve_from = date("2026-04-13");
    let improve_to = date("2026-05-16");

    for (d, (day, count)) in rate_schedule().into_iter().enumerate() {
        for &w in &know_weeks {
            let anchor = crate::know::know_anchor(w);
            if anchor.date_naive() == day {
                let scout_only = w.week() == 15;
                push(
                    anchor,
                    ReplayAction::Know {
                        week: w,
                        force: false,
                        stages: scout_only.then(|| vec![KnowStage::Scout]),
                        corpus: Some(corpus(w)),
                    },
                );
            }
        }
        for m in day_messages(day, count, &mut next_line) {
            if m.archetype == "Muse" {
                if m.at == ts("2026-04-26T14:58:00Z") {
                    steps.push(ScriptStep::new(Depth::Listen, "reply", GRAMMAR_REFRAME).for_archetype("Muse").at(muse_replies));
                }
                muse_replies += 1;
            }
            if m.modality.is_some() {
                seed_index = Some(message_index);
            }
            push(
                m.at,
                ReplayAction::Message {
                    text: m.text,
                    archetype: Some(m.archetype.into()),
                    modality: m.modality.map(str::to_string),
                    surface: None,
                },
            );
            message_index += 1;
        }
        push(
            at(day, 21, 0),
            ReplayAction::SkillEpisode {
                skill: SKILL.into(),
                episode: format!("day-{:03}", d + 1),
                success: d % 3 != 0,
            },
        );
        if (improve_from..=improve_to).contains(&day) {
            let improve = ReplayAction::Improve {
                skill: SKILL.into(),
                force: false,
                apply: true,
            };
            push(at(day, 21, 30), improve.clone());
            improves += 1;
            if double_improve(day) {
                push(at(day, 21, 45), improve);
                improves += 1;
            }
        }
        if day >= date("2026-03-12") && (day - date("2026-03-12")).num_days() % 2 == 0 {
            push(
                at(day, 22, 0),
                ReplayAction::Journal {
                    text: format!("{} {}", JOURNAL_LINES[journals % 12], JOURNAL_LINES[(journals * 5 + 3) % 12]),
                    title: Some(JOURNAL_TITLES[journals % 4].into()),
                },
            );
            journals += 1;
        }
        push(at(day, 23, 30), ReplayAction::Notice);
    }
    let last = date("2026-05-19");
    // This proposal would wipe the skill's history and must be refused.
    push(
        at(last, 23, 45),
        ReplayAction::Improve {
            skill: SKILL.into(),
            force: false,
            apply: true,
        },
    );
    // Last, since adoption changes how many principles a score must cover.
    push(
        at(last, 23, 55),
        ReplayAction::AdrDecision {
            id: "ADR-0001".into(),
            adopt: true,
        },
    );
    debug_assert_eq!(improves, 41);
    debug_assert_eq!(journals, 35);

    // Claims: spread evenly over the messages, the seed always among them.
    let total = message_index;
    let seed = seed_index.expect("trace has a seed message");
    let mut claim_at: Vec<usize> = (0..TRACE_CLAIMS).map(|k| k * total / TRACE_CLAIMS).collect();
    if !claim_at.contains(&seed) {
        let nearest = claim_at.iter().enumerate().min_by_key(|(_, &i)| i.abs_diff(seed)).map(|(k, _)| k).expect("nonempty");
        claim_at[nearest] = seed;
    }
    for (k, &i) in claim_at.iter().enumerate() {
        let (text, dim) = if i == seed { (SEED_CLAIM, "voice") } else { CLAIM_LINES[k % CLAIM_LINES.len()] };
        steps.push(ScriptStep::new(Depth::Notice, "claims", json!([{"text": text, "dimension": dim}]).to_string()).at(i as u32));
    }
    steps.push(ScriptStep::new(Depth::Notice, "claims", "[]"));

    // Daimon's first reply runs out of budget.
    let mut cut = ScriptStep::new(Depth::Listen, "reply", reply_text("Daimon")).for_archetype("Daimon").at(0);
    cut.truncated = true;
    steps.push(cut);
    for a in ARCHETYPES {
        steps.push(ScriptStep::new(Depth::Listen, "reply", reply_text(a)).for_archetype(a));
    }
    steps.push(ScriptStep::new(Depth::Listen, "score", scores()));

    steps.push(
        ScriptStep::new(
            Depth::Notice,
            "improve",
            json!({"prompt": "Start over with a blank prompt and no history.", "carry_history": false}).to_string(),
        )
        .at(41),
    );
    steps.push(ScriptStep::new(
        Depth::Notice,
        "improve",
        json!({"prompt": "Reply briefly, reflect one feeling, then ask one question.", "carry_history": true}).to_string(),
    ));

    steps.push(ScriptStep::new(Depth::Know, "profile-partner", PARTNER_NARRATIVE));
    steps.push(ScriptStep::new(Depth::Know, "profile-agent", AGENT_NARRATIVE));
    steps.push(ScriptStep::new(Depth::Know, "portrait", GRAMMAR_REUSE).at(4));
    steps.push(ScriptStep::new(Depth::Know, "portrait", PORTRAIT));
    for (i, [f, c, p]) in DELTAS.iter().enumerate() {
        let text = json!({"focus_shift": f, "calibration_arc": c, "partnership_alignment": p}).to_string();
        steps.push(ScriptStep::new(Depth::Know, "delta", text).at(i as u32));
    }
    for (i, w) in know_weeks.iter().enumerate() {
        steps.push(ScriptStep::new(Depth::Know, "scout", scout_response(*w)).at(i as u32));
    }
    steps.push(ScriptStep::new(
        Depth::Know,
        "meta",
        json!({
            "diagnosis": "Every verdict this week is insufficient_data: prompts change before any episode can be paired, so the improver cannot be shown to improve.",
            "improvements": ["Hold each revision until five paired episodes exist.", "Batch revisions weekly instead of nightly."],
        })
        .to_string(),
    ));

    ReplayScript {
        start,
        settings: Settings::default(),
        model: Scenario::new(steps),
        events,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_shape() {
        let s = trace_script();
        let count = |f: fn(&ReplayAction) -> bool| s.events.iter().filter(|e| f(&e.action)).count();
        assert_eq!(count(|a| matches!(a, ReplayAction::Message { .. })), 414);
        assert_eq!(count(|a| matches!(a, ReplayAction::SkillEpisode { .. })), 71);
        assert_eq!(count(|a| matches!(a, ReplayAction::Journal { .. })), 35);
        assert_eq!(count(|a| matches!(a, ReplayAction::Improve { .. })), 42);
        assert_eq!(count(|a| matches!(a, ReplayAction::Know { .. })), 6);
        assert!(s.events.windows(2).all(|w| w[0].at <= w[1].at));
    }

    #[test]
    fn grammar_arc_sits_at_its_timestamps() {
        let s = trace_script();
        let text_at = |t: &str| {
            s.events.iter().find(|e| e.at == ts(t)).and_then(|e| match &e.action {
                ReplayAction::Message { text, .. } => Some(text.clone()),
                _ => None,
            })
        };
        assert_eq!(text_at("2026-04-26T05:05:00Z").as_deref(), Some(GRAMMAR_SEED));
        assert_eq!(text_at("2026-04-28T14:22:00Z").as_deref(), Some(GRAMMAR_ADOPTION));
    }
}
