//! Synthetic case project: a CPR training mannequin built as 82 prototypes by
//! one student, captured in an autumn burst and a spring burst, coded with
//! the built-in schemes and a solution-principle scheme, and linked into a
//! graph ending at the final concept.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, NaiveDate, TimeZone, Utc};
use protobooth_core::{
    assign_codes, builtin_schemes, Annotation, BoothId, CaptureId, CaptureRecord, CardId,
    Chronology, CodeAssignment, CodingScheme, ImageRef, LinkGraph, NodeClass, Project, ProjectId,
    User, ViewAngle,
};
use protobooth_node::mock_frame;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CASE_CAPTURES: usize = 82;
pub const EXTERNAL_TESTS: [usize; 5] = [5, 17, 29, 60, 63];
pub const FINAL_CONCEPT: usize = 82;
const AUTUMN_CAPTURES: usize = 30;

pub const SOLUTION_PRINCIPLES: [&str; 7] = [
    "compression: coil spring",
    "compression: foam block",
    "compression: air bladder",
    "rib breaking: snap element",
    "rib breaking: magnetic latch",
    "data logging: force sensor",
    "data logging: displacement sensor",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseFixture {
    pub user: User,
    pub booth_id: BoothId,
    pub project: Project,
    /// Canonical order, ids `p1` .. `p82`.
    pub captures: Vec<CaptureRecord>,
    pub images: BTreeMap<CaptureId, BTreeMap<ViewAngle, Vec<u8>>>,
    /// Schemes beyond the built-in ones.
    pub schemes: Vec<CodingScheme>,
    pub assignments: Vec<CodeAssignment>,
    pub graph: LinkGraph,
}

pub fn prototype_id(n: usize) -> CaptureId {
    CaptureId::new(format!("p{n}"))
}

pub fn solution_principles() -> CodingScheme {
    CodingScheme::new("solution-principles", "Solution principles", SOLUTION_PRINCIPLES)
        .expect("distinct categories")
}

fn day_start(y: i32, m: u32, d: u32) -> i64 {
    NaiveDate::from_ymd_opt(y, m, d)
        .expect("valid date")
        .and_hms_opt(0, 0, 0)
        .expect("midnight")
        .and_utc()
        .timestamp()
}

/// Daytime capture instants, distinct and sorted, inside `[first, last]` days.
fn burst(rng: &mut ChaCha8Rng, count: usize, first: i64, last: i64) -> Vec<i64> {
    let days = (last - first) / 86_400 + 1;
    let mut out = BTreeSet::new();
    while out.len() < count {
        let day = first + rng.random_range(0..days) * 86_400;
        let weekday = Utc.timestamp_opt(day, 0).unwrap().weekday().number_from_monday();
        // Weekends are quieter.
        if weekday >= 6 && rng.random_bool(0.7) {
            continue;
        }
        out.insert(day + rng.random_range(8 * 3600..20 * 3600));
    }
    out.into_iter().collect()
}

fn pick<'a>(rng: &mut ChaCha8Rng, from: &[&'a str], lo: usize, hi: usize) -> Vec<&'a str> {
    let k = rng.random_range(lo..=hi);
    from.choose_multiple(rng, k).copied().collect()
}

pub fn synthesize_case_fixture(seed: u64) -> CaseFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let booth_id = BoothId::new("booth-1");
    let card = CardId::new("card-0001");
    let user = User {
        user_id: "student".into(),
        display_name: "Student".into(),
        card_ids: BTreeSet::from([card.clone()]),
    };

    let mut times = burst(&mut rng, AUTUMN_CAPTURES, day_start(2017, 10, 1), day_start(2017, 11, 15));
    times.extend(burst(
        &mut rng,
        CASE_CAPTURES - AUTUMN_CAPTURES,
        day_start(2018, 1, 10),
        day_start(2018, 5, 15),
    ));

    let mut captures = Vec::with_capacity(CASE_CAPTURES);
    let mut images = BTreeMap::new();
    for (i, ts) in times.into_iter().enumerate() {
        let id = prototype_id(i + 1);
        let frames: BTreeMap<ViewAngle, Vec<u8>> = ViewAngle::ALL
            .iter()
            .map(|&a| (a, mock_frame(&booth_id, &id, a)))
            .collect();
        captures.push(CaptureRecord {
            capture_id: id.clone(),
            booth_id: booth_id.clone(),
            card_id: card.clone(),
            timestamp: ts,
            views: frames
                .iter()
                .map(|(&a, b)| (a, ImageRef::for_bytes(b, "image/png")))
                .collect(),
            annotation: Annotation {
                title: Some(format!("Prototype {}", i + 1)),
                ..Default::default()
            },
        });
        images.insert(id, frames);
    }

    let schemes = builtin_schemes();
    let by_id = |id: &str| schemes.iter().find(|s| s.scheme_id.as_str() == id).expect("builtin");
    let (materials, tools, disciplines) = (by_id("materials"), by_id("tools"), by_id("disciplines"));
    let principles = solution_principles();

    let mat_cats: Vec<&str> = materials.categories.iter().map(String::as_str).collect();
    let tool_cats: Vec<&str> = tools.categories.iter().map(String::as_str).collect();
    let sp_cats: Vec<&str> = SOLUTION_PRINCIPLES.to_vec();

    let mut chosen: Vec<[Vec<&str>; 4]> = (0..CASE_CAPTURES)
        .map(|_| {
            let m = pick(&mut rng, &mat_cats, 1, 3);
            let t = pick(&mut rng, &tool_cats, 1, 2);
            let mut d = vec!["mechanics"];
            if m.contains(&"electronics") {
                d.push("electronics");
                if t.contains(&"computer") {
                    d.push("software");
                }
            }
            let s = pick(&mut rng, &sp_cats, 0, 2);
            [m, t, d, s]
        })
        .collect();
    // The vacuum-formed chest shell.
    chosen[36][0] = vec!["hard plastics", "electronics", "metal"];
    chosen[36][1] = vec!["vacuum former", "hand tools"];
    chosen[36][2] = vec!["mechanics", "electronics"];
    // Make sure every category shows up somewhere.
    for (slot, all) in [(0, &mat_cats), (1, &tool_cats), (3, &sp_cats)] {
        for cat in all.iter() {
            if !chosen.iter().any(|c| c[slot].contains(cat)) {
                let i = rng.random_range(0..CASE_CAPTURES);
                chosen[i][slot].push(cat);
            }
        }
    }
    if !chosen.iter().any(|c| c[2].contains(&"software")) {
        chosen[FINAL_CONCEPT - 1][2].push("software");
    }

    let mut assignments = Vec::new();
    for (i, [m, t, d, s]) in chosen.iter().enumerate() {
        let id = prototype_id(i + 1);
        for (scheme, cats) in [(materials, m), (tools, t), (disciplines, d), (&principles, s)] {
            assignments.push(assign_codes(id.clone(), scheme, cats).expect("categories from scheme"));
        }
    }

    let project_id = ProjectId::new("proj-0001");
    let project = Project {
        project_id: project_id.clone(),
        title: "CPR mannequin".into(),
        description: "Training mannequin for cardiopulmonary resuscitation".into(),
        contributors: BTreeSet::from([user.user_id.clone()]),
        members: captures.iter().map(|c| c.capture_id.clone()).collect(),
    };

    let chronology = Chronology::from_captures(&captures);
    let mut graph = LinkGraph::new(project_id);
    let link = |g: &mut LinkGraph, a: usize, b: usize| {
        g.add_link(&chronology, &prototype_id(a), &prototype_id(b))
            .expect("fixture links point forward");
    };
    for n in 2..=CASE_CAPTURES {
        if rng.random_bool(0.85) {
            let parent = rng.random_range(n.saturating_sub(6).max(1)..n);
            link(&mut graph, parent, n);
        }
    }
    for e in EXTERNAL_TESTS {
        link(&mut graph, e, e + 1);
        graph
            .set_class(&chronology, &prototype_id(e), NodeClass::ExternalTest)
            .expect("member");
    }
    for parent in [63, 75, 81] {
        link(&mut graph, parent, FINAL_CONCEPT);
    }
    graph
        .set_class(&chronology, &prototype_id(FINAL_CONCEPT), NodeClass::FinalConcept)
        .expect("single final concept");

    CaseFixture {
        user,
        booth_id,
        project,
        captures,
        images,
        schemes: vec![principles],
        assignments,
        graph,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use protobooth_core::{reachability, validate_capture};

    #[test]
    fn shape() {
        let f = synthesize_case_fixture(1);
        assert_eq!(f.captures.len(), 82);
        for c in &f.captures {
            validate_capture(c).unwrap();
            for (angle, image) in c.views.iter() {
                assert!(image.matches(&f.images[&c.capture_id][&angle]));
            }
        }
        let gap = (day_start(2017, 11, 16), day_start(2018, 1, 10));
        assert!(f.captures.iter().all(|c| c.timestamp < gap.0 || c.timestamp >= gap.1));
        assert!(f.captures.iter().all(|c| c.timestamp >= day_start(2017, 10, 1)
            && c.timestamp < day_start(2018, 5, 16)));
        let ids: Vec<_> = f.captures.iter().map(|c| c.capture_id.clone()).collect();
        let expected: Vec<_> = (1..=82).map(prototype_id).collect();
        assert_eq!(ids, expected);
    }

    #[test]
    fn graph_classes() {
        let f = synthesize_case_fixture(1);
        let external: Vec<_> = f
            .graph
            .node_classes
            .iter()
            .filter(|(_, c)| **c == NodeClass::ExternalTest)
            .map(|(id, _)| id.to_string())
            .collect();
        let mut want: Vec<_> = EXTERNAL_TESTS.iter().map(|n| format!("p{n}")).collect();
        want.sort();
        assert_eq!(external, want);
        assert_eq!(f.graph.final_concept(), Some(&prototype_id(82)));
        assert!(f.graph.check(&Chronology::from_captures(&f.captures)).is_empty());
        let reach = reachability(&f.graph);
        assert!(EXTERNAL_TESTS.iter().any(|e| reach[&prototype_id(*e)]));
    }

    #[test]
    fn every_category_used() {
        let f = synthesize_case_fixture(9);
        let mut used: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for a in &f.assignments {
            used.entry(a.scheme_id.to_string()).or_default().extend(a.categories.iter().cloned());
        }
        assert_eq!(used["materials"].len(), 9);
        assert_eq!(used["tools"].len(), 6);
        assert_eq!(used["disciplines"].len(), 3);
        assert_eq!(used["solution-principles"].len(), 7);
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(synthesize_case_fixture(3), synthesize_case_fixture(3));
        assert_ne!(synthesize_case_fixture(3).captures, synthesize_case_fixture(4).captures);
    }
}
