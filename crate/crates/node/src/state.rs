//! Booth state machine and the two-LED status model.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeState {
    Idle,
    Capturing,
    Uploading,
    Fault,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeEvent {
    Swipe,
    /// All seven frames acquired.
    FramesAcquired,
    /// Capture written to the spool.
    Spooled,
    /// Rig or storage failure.
    Failure,
    Reset,
}

impl NodeState {
    /// The declared transition table. `None` means the event does not move
    /// the machine (a swipe outside `Idle` is debounced, for instance).
    pub fn next(self, event: NodeEvent) -> Option<NodeState> {
        use NodeEvent as E;
        use NodeState as S;
        match (self, event) {
            (S::Idle, E::Swipe) => Some(S::Capturing),
            (S::Capturing, E::FramesAcquired) => Some(S::Uploading),
            (S::Uploading, E::Spooled) => Some(S::Idle),
            (S::Idle | S::Capturing | S::Uploading, E::Failure) => Some(S::Fault),
            (S::Fault, E::Reset) => Some(S::Idle),
            _ => None,
        }
    }

    /// Whether `from -> to` is a declared transition.
    pub fn is_declared(from: NodeState, to: NodeState) -> bool {
        use NodeState as S;
        matches!(
            (from, to),
            (S::Idle, S::Capturing)
                | (S::Capturing, S::Uploading)
                | (S::Uploading, S::Idle)
                | (S::Idle | S::Capturing | S::Uploading, S::Fault)
                | (S::Fault, S::Idle)
        )
    }
}

impl fmt::Display for NodeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NodeState::Idle => "idle",
            NodeState::Capturing => "capturing",
            NodeState::Uploading => "uploading",
            NodeState::Fault => "fault",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LedState {
    Off,
    On,
    Blink,
}

/// Status LEDs on the booth: one "busy" and one "done".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedPattern {
    pub busy: LedState,
    pub done: LedState,
}

impl LedPattern {
    /// `notifying` is true while the completion notice is still showing.
    pub fn for_state(state: NodeState, notifying: bool) -> Self {
        let (busy, done) = match state {
            NodeState::Idle if notifying => (LedState::Off, LedState::Blink),
            NodeState::Idle => (LedState::Off, LedState::Off),
            NodeState::Capturing | NodeState::Uploading => (LedState::On, LedState::Off),
            NodeState::Fault => (LedState::On, LedState::Blink),
        };
        Self { busy, done }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const STATES: [NodeState; 4] = [
        NodeState::Idle,
        NodeState::Capturing,
        NodeState::Uploading,
        NodeState::Fault,
    ];
    const EVENTS: [NodeEvent; 5] = [
        NodeEvent::Swipe,
        NodeEvent::FramesAcquired,
        NodeEvent::Spooled,
        NodeEvent::Failure,
        NodeEvent::Reset,
    ];

    #[test]
    fn table_matches_declared_pairs() {
        for s in STATES {
            for e in EVENTS {
                if let Some(t) = s.next(e) {
                    assert!(NodeState::is_declared(s, t), "{s} --{e:?}--> {t}");
                }
            }
        }
        // Every declared pair is reachable by some event.
        for a in STATES {
            for b in STATES {
                if NodeState::is_declared(a, b) {
                    assert!(EVENTS.iter().any(|e| a.next(*e) == Some(b)));
                }
            }
        }
    }

    #[test]
    fn swipe_outside_idle_is_debounced() {
        assert_eq!(NodeState::Capturing.next(NodeEvent::Swipe), None);
        assert_eq!(NodeState::Uploading.next(NodeEvent::Swipe), None);
        assert_eq!(NodeState::Fault.next(NodeEvent::Swipe), None);
    }

    #[test]
    fn led_patterns() {
        use LedState::*;
        let p = |s, n| {
            let l = LedPattern::for_state(s, n);
            (l.busy, l.done)
        };
        assert_eq!(p(NodeState::Idle, false), (Off, Off));
        assert_eq!(p(NodeState::Idle, true), (Off, Blink));
        assert_eq!(p(NodeState::Capturing, false), (On, Off));
        assert_eq!(p(NodeState::Uploading, true), (On, Off));
        assert_eq!(p(NodeState::Fault, false), (On, Blink));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn random_event_sequences_stay_in_table(events in proptest::collection::vec(0..5usize, 0..64)) {
            let mut s = NodeState::Idle;
            for e in events {
                if let Some(t) = s.next(EVENTS[e]) {
                    prop_assert!(NodeState::is_declared(s, t));
                    s = t;
                }
            }
        }
    }
}
