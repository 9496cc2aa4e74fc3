//! Brute-force recomputation of the analytics, written without reusing the
//! library's own ordering or indexing helpers.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use protobooth_analytics::{
    category_matrix, cumulative_usage, detect_bulk, CumulativeMode,
};
use protobooth_core::{
    assign_codes, builtin_schemes, reachability, Annotation, CaptureId, CaptureRecord, CardId,
    Chronology, CodeAssignment, CodingScheme, ImageRef, LinkGraph, NodeClass, ViewAngle,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn record(id: &str, card: &str, timestamp: i64) -> CaptureRecord {
    CaptureRecord {
        capture_id: id.into(),
        booth_id: "booth-1".into(),
        card_id: card.into(),
        timestamp,
        views: ViewAngle::ALL
            .iter()
            .map(|&a| (a, ImageRef::for_bytes(format!("{id}/{a}").as_bytes(), "image/png")))
            .collect(),
        annotation: Annotation::default(),
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub captures: Vec<CaptureRecord>,
    pub scheme: CodingScheme,
    pub assignments: Vec<CodeAssignment>,
    pub graph: LinkGraph,
    pub window: i64,
    pub threshold: usize,
}

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(0..=100usize);
    let schemes = builtin_schemes();
    let scheme = schemes.choose(&mut rng).unwrap().clone();
    let cards = ["card-a", "card-b", "card-c"];

    let mut t = 1_500_000_000i64;
    let mut captures = Vec::with_capacity(n);
    for i in 0..n {
        // Mostly short gaps so bursts form, sometimes long ones, sometimes ties.
        t += match rng.random_range(0..10) {
            0 => 0,
            1..=6 => rng.random_range(1..900),
            _ => rng.random_range(900..200_000),
        };
        let card = cards.choose(&mut rng).unwrap();
        // Ids deliberately out of step with time order.
        let id = format!("c{:03}", (i * 37) % 101);
        captures.push(record(&id, card, t));
    }

    let mut assignments = Vec::new();
    for c in &captures {
        if rng.random_bool(0.2) {
            continue;
        }
        let k = rng.random_range(0..=scheme.categories.len().min(4));
        let cats: Vec<&str> = scheme
            .categories
            .choose_multiple(&mut rng, k)
            .map(String::as_str)
            .collect();
        assignments.push(assign_codes(c.capture_id.clone(), &scheme, &cats).unwrap());
    }

    let order = oracle_order(&captures);
    let chronology = Chronology::from_captures(&captures);
    let mut graph = LinkGraph::new("proj".into());
    for j in 0..order.len() {
        for i in j.saturating_sub(5)..j {
            if rng.random_bool(0.25) {
                graph
                    .add_link(&chronology, &order[i].capture_id, &order[j].capture_id)
                    .unwrap();
            }
        }
    }
    if !order.is_empty() && rng.random_bool(0.9) {
        let f = rng.random_range(0..order.len());
        graph
            .set_class(&chronology, &order[f].capture_id, NodeClass::FinalConcept)
            .unwrap();
    }

    // Shuffle so nothing downstream can rely on input order.
    let mut shuffled = captures;
    for i in (1..shuffled.len()).rev() {
        let j = rng.random_range(0..=i);
        shuffled.swap(i, j);
    }

    Instance {
        captures: shuffled,
        scheme,
        assignments,
        graph,
        window: rng.random_range(60..=3600),
        threshold: rng.random_range(1..=8),
    }
}

/// Time order with capture id as tie breaker.
pub fn oracle_order(captures: &[CaptureRecord]) -> Vec<CaptureRecord> {
    let mut v = captures.to_vec();
    v.sort_by(|a, b| {
        a.timestamp
            .cmp(&b.timestamp)
            .then_with(|| a.capture_id.as_str().cmp(b.capture_id.as_str()))
    });
    v
}

fn codes_of(inst: &Instance) -> HashMap<&str, HashSet<&str>> {
    inst.assignments
        .iter()
        .map(|a| {
            (
                a.capture_id.as_str(),
                a.categories.iter().map(String::as_str).collect(),
            )
        })
        .collect()
}

pub fn cumulative_oracle(inst: &Instance, mode: CumulativeMode) -> Vec<(usize, usize)> {
    let codes = codes_of(inst);
    let order = oracle_order(&inst.captures);
    (1..=order.len())
        .map(|k| {
            let prefix = &order[..k];
            let value = match mode {
                CumulativeMode::Distinct => prefix
                    .iter()
                    .flat_map(|c| codes.get(c.capture_id.as_str()).into_iter().flatten())
                    .collect::<HashSet<_>>()
                    .len(),
                CumulativeMode::Summed => prefix
                    .iter()
                    .map(|c| codes.get(c.capture_id.as_str()).map_or(0, HashSet::len))
                    .sum(),
            };
            (k, value)
        })
        .collect()
}

pub fn column_sums_oracle(inst: &Instance) -> Vec<usize> {
    let codes = codes_of(inst);
    inst.scheme
        .categories
        .iter()
        .map(|cat| {
            inst.captures
                .iter()
                .filter(|c| {
                    codes
                        .get(c.capture_id.as_str())
                        .is_some_and(|s| s.contains(cat.as_str()))
                })
                .count()
        })
        .collect()
}

/// A node is marked when some forward path reaches the final concept.
pub fn reachability_oracle(graph: &LinkGraph) -> BTreeMap<CaptureId, bool> {
    let mut nodes: BTreeSet<CaptureId> = graph.node_classes.keys().cloned().collect();
    for l in &graph.edges {
        nodes.insert(l.from.clone());
        nodes.insert(l.to.clone());
    }
    let target = graph
        .node_classes
        .iter()
        .find(|(_, c)| **c == NodeClass::FinalConcept)
        .map(|(id, _)| id.clone());
    nodes
        .iter()
        .map(|n| {
            let Some(target) = &target else {
                return (n.clone(), false);
            };
            let mut seen = BTreeSet::from([n.clone()]);
            let mut stack = vec![n.clone()];
            let mut hit = false;
            while let Some(x) = stack.pop() {
                if &x == target {
                    hit = true;
                    break;
                }
                for l in graph.edges.iter().filter(|l| l.from == x) {
                    if seen.insert(l.to.clone()) {
                        stack.push(l.to.clone());
                    }
                }
            }
            (n.clone(), hit)
        })
        .collect()
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    parent[x] = r;
    r
}

/// Union every same-card pair no further apart than `window`; components
/// larger than `threshold` are bulk sessions.
pub fn bulk_oracle(
    captures: &[CaptureRecord],
    window: i64,
    threshold: usize,
) -> BTreeSet<(CardId, BTreeSet<CaptureId>)> {
    let n = captures.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&captures[i], &captures[j]);
            if a.card_id == b.card_id && (a.timestamp - b.timestamp).abs() <= window {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups
        .into_values()
        .filter(|g| g.len() > threshold)
        .map(|g| {
            (
                captures[g[0]].card_id.clone(),
                g.iter().map(|&i| captures[i].capture_id.clone()).collect(),
            )
        })
        .collect()
}

/// Every disagreement between the library and the oracles on one instance.
pub fn mismatches(inst: &Instance) -> Vec<String> {
    let mut out = Vec::new();

    for mode in [CumulativeMode::Distinct, CumulativeMode::Summed] {
        let got = cumulative_usage(&inst.captures, &inst.assignments, &inst.scheme, mode).unwrap();
        if got.points != cumulative_oracle(inst, mode) {
            out.push(format!("cumulative_usage {mode:?}"));
        }
    }

    let m = category_matrix(&inst.captures, &inst.assignments, &inst.scheme).unwrap();
    if m.column_sums() != column_sums_oracle(inst) {
        out.push("category_matrix column sums".into());
    }

    if reachability(&inst.graph) != reachability_oracle(&inst.graph) {
        out.push("reachability".into());
    }

    for (window, threshold) in [(inst.window, inst.threshold), (1800, 20)] {
        let got = detect_bulk(&inst.captures, window, threshold).unwrap();
        let got_set: BTreeSet<_> = got
            .iter()
            .map(|s| (s.card_id.clone(), s.capture_ids.iter().cloned().collect()))
            .collect();
        if got_set != bulk_oracle(&inst.captures, window, threshold) {
            out.push(format!("detect_bulk window={window} threshold={threshold}"));
        }
        for s in &got {
            let ts: Vec<i64> = inst
                .captures
                .iter()
                .filter(|c| s.capture_ids.contains(&c.capture_id))
                .map(|c| c.timestamp)
                .collect();
            let consistent = s.count == s.capture_ids.len()
                && ts.iter().min() == Some(&s.window_start)
                && ts.iter().max() == Some(&s.window_end);
            if !consistent {
                out.push(format!("detect_bulk session bounds for {}", s.card_id));
            }
        }
    }
    out
}
