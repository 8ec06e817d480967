use std::fmt;

use serde::Serialize;

use super::{MdpClass, PROB_TOL};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Tensor coordinates, e.g. `transition[param=0][state=0][action=1]`.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, location: String, message: impl Into<String>) {
        self.violations.push(Violation {
            location,
            message: message.into(),
        });
    }

    fn check_prob(&mut self, location: String, v: &[f64], len: usize, entry: &str) {
        if v.len() != len {
            self.push(location, format!("expected {len} entries, found {}", v.len()));
            return;
        }
        for (i, &x) in v.iter().enumerate() {
            if !x.is_finite() || x < 0.0 {
                self.push(format!("{location}[{entry}={i}]"), format!("invalid probability {x}"));
            }
        }
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            self.push(location, format!("probabilities sum to {sum}"));
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Reports every violated instance invariant; an empty report means valid.
pub fn validate(m: &MdpClass) -> ValidationReport {
    let mut r = ValidationReport::default();
    for (name, v) in [
        ("n_states", m.n_states),
        ("n_actions", m.n_actions),
        ("n_outcomes", m.n_outcomes),
        ("n_params", m.n_params),
        ("horizon", m.horizon),
    ] {
        if v == 0 {
            r.push(name.to_string(), "must be positive");
        }
    }
    let (lo, hi) = m.reward_range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        r.push("reward_range".into(), format!("invalid range ({lo}, {hi})"));
    }
    if !r.is_valid() {
        return r;
    }

    if m.transition.len() != m.n_params {
        r.push("transition".into(), format!("expected {} params", m.n_params));
    } else {
        for (p, per_state) in m.transition.iter().enumerate() {
            if per_state.len() != m.n_states {
                r.push(format!("transition[param={p}]"), format!("expected {} states", m.n_states));
                continue;
            }
            for (s, per_action) in per_state.iter().enumerate() {
                if per_action.len() != m.n_actions {
                    r.push(
                        format!("transition[param={p}][state={s}]"),
                        format!("expected {} actions", m.n_actions),
                    );
                    continue;
                }
                for (a, row) in per_action.iter().enumerate() {
                    r.check_prob(
                        format!("transition[param={p}][state={s}][action={a}]"),
                        row,
                        m.n_states,
                        "next_state",
                    );
                }
            }
        }
    }

    if m.outcome.len() != m.n_params {
        r.push("outcome".into(), format!("expected {} params", m.n_params));
    } else {
        for (p, per_state) in m.outcome.iter().enumerate() {
            if per_state.len() != m.n_states {
                r.push(format!("outcome[param={p}]"), format!("expected {} states", m.n_states));
                continue;
            }
            for (s, row) in per_state.iter().enumerate() {
                r.check_prob(format!("outcome[param={p}][state={s}]"), row, m.n_outcomes, "outcome");
            }
        }
    }

    if m.init.len() != m.n_params {
        r.push("init".into(), format!("expected {} params", m.n_params));
    } else {
        for (p, row) in m.init.iter().enumerate() {
            r.check_prob(format!("init[param={p}]"), row, m.n_states, "state");
        }
    }

    if m.reward.len() != m.n_outcomes {
        r.push("reward".into(), format!("expected {} outcomes", m.n_outcomes));
    } else {
        for (y, row) in m.reward.iter().enumerate() {
            if row.len() != m.n_actions {
                r.push(format!("reward[outcome={y}]"), format!("expected {} actions", m.n_actions));
                continue;
            }
            for (a, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < lo || v > hi {
                    r.push(
                        format!("reward[outcome={y}][action={a}]"),
                        format!("value {v} outside [{lo}, {hi}]"),
                    );
                }
            }
        }
    }

    if m.layout == super::Layout::ActionFolded && (m.n_states != m.n_actions + 1 || m.horizon < 2) {
        r.push(
            "layout".into(),
            "action-folded instances need n_states = n_actions + 1 and horizon >= 2",
        );
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_model::build_finite_mab;

    #[test]
    fn builder_output_is_valid() {
        let m = build_finite_mab(&[vec![0.3, 0.9], vec![0.5, 0.1]], 3).unwrap();
        assert!(validate(&m).is_valid());
    }

    #[test]
    fn short_transition_row_names_coordinates() {
        let mut m = build_finite_mab(&[vec![1.0, 0.0]], 2).unwrap();
        m.transition[0][0][1] = vec![0.9];
        let report = validate(&m);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].location, "transition[param=0][state=0][action=1]");
    }

    #[test]
    fn transition_row_summing_to_point_nine() {
        // two-state instance so that a row can be scaled down
        let mut m = crate::generator::two_state_example();
        m.transition[0][0][1] = vec![0.45, 0.45];
        let report = validate(&m);
        assert_eq!(report.violations.len(), 1, "{report}");
        assert_eq!(report.violations[0].location, "transition[param=0][state=0][action=1]");
    }

    #[test]
    fn reward_above_range() {
        let mut m = build_finite_mab(&[vec![0.2, 0.4]], 2).unwrap();
        m.reward[0][0] = m.reward_range.1 + 1.0;
        let report = validate(&m);
        assert_eq!(report.violations.len(), 1);
        assert!(report.violations[0].location.starts_with("reward["));
    }

    #[test]
    fn negative_probability_is_reported() {
        let mut m = crate::generator::two_state_example();
        m.init[0] = vec![1.2, -0.2];
        let report = validate(&m);
        assert!(report
            .violations
            .iter()
            .any(|v| v.location == "init[param=0][state=1]"));
    }
}
