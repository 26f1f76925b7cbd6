//! Core finite-MDP types: the MDP itself, deterministic and stochastic
//! policies, state-action value tables, and state weightings.

use ndarray::{s, Array1, Array2, Array3, ArrayView1};

use crate::error::{Error, Result};
use crate::numfmt::fmt_real;

/// Absolute tolerance for probability vectors summing to 1.
pub const PROB_TOL: f64 = 1e-9;

/// A finite Markov decision process: reward table `R(s, a)`, transition
/// tensor `T(s, a, s')`, and a discount factor in `[0, 1)`.
///
/// Rewards are deterministic per state-action pair and non-negative; every
/// transition row is a probability vector over successor states.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    pub rewards: Array2<f64>,
    pub transitions: Array3<f64>,
    pub discount: f64,
}

impl Mdp {
    pub fn new(rewards: Array2<f64>, transitions: Array3<f64>, discount: f64) -> Result<Self> {
        let (n_states, n_actions) = rewards.dim();
        if n_states == 0 || n_actions == 0 {
            return Err(Error::invalid(
                "MDP needs at least one state and one action",
            ));
        }
        if transitions.dim() != (n_states, n_actions, n_states) {
            return Err(Error::dims(format!(
                "transition tensor has shape {:?}, expected ({n_states}, {n_actions}, {n_states})",
                transitions.dim()
            )));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::invalid(format!(
                "discount {discount} outside [0, 1)"
            )));
        }
        if let Some(r) = rewards.iter().find(|r| !r.is_finite() || **r < 0.0) {
            return Err(Error::invalid(format!(
                "rewards must be finite and non-negative, found {r}"
            )));
        }
        for s_i in 0..n_states {
            for a_i in 0..n_actions {
                let row = transitions.slice(s![s_i, a_i, ..]);
                check_prob_row(row, || format!("T({s_i}, {a_i})"))?;
            }
        }
        Ok(Mdp {
            rewards,
            transitions,
            discount,
        })
    }

    pub fn n_states(&self) -> usize {
        self.rewards.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.rewards.ncols()
    }

    /// Largest reward entry, the `R_max` of the loss bounds.
    pub fn r_max(&self) -> f64 {
        self.rewards.iter().fold(0.0_f64, |m, &r| m.max(r))
    }

    /// Serialize to the flat text format:
    ///
    /// ```text
    /// mdp <n_states> <n_actions> <discount>
    /// R <s> <a> <value>       (zero entries omitted)
    /// T <s> <a> <s'> <prob>   (zero entries omitted)
    /// ```
    ///
    /// Reals carry 17 significant digits, so parsing the output reproduces
    /// the MDP bit-exactly.
    pub fn to_text(&self) -> String {
        let (n_states, n_actions) = self.rewards.dim();
        let mut out = format!("mdp {n_states} {n_actions} {}\n", fmt_real(self.discount));
        for s_i in 0..n_states {
            for a_i in 0..n_actions {
                let r = self.rewards[[s_i, a_i]];
                if r != 0.0 {
                    out.push_str(&format!("R {s_i} {a_i} {}\n", fmt_real(r)));
                }
            }
        }
        for s_i in 0..n_states {
            for a_i in 0..n_actions {
                for s_j in 0..n_states {
                    let p = self.transitions[[s_i, a_i, s_j]];
                    if p != 0.0 {
                        out.push_str(&format!("T {s_i} {a_i} {s_j} {}\n", fmt_real(p)));
                    }
                }
            }
        }
        out
    }

    /// Parse the flat text format produced by [`Mdp::to_text`]. Entries not
    /// listed default to zero; the result is validated like any other MDP.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty MDP text".into()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("mdp") {
            return Err(Error::Parse("first line must start with 'mdp'".into()));
        }
        let n_states: usize = parse_field(fields.next(), "n_states")?;
        let n_actions: usize = parse_field(fields.next(), "n_actions")?;
        let discount: f64 = parse_field(fields.next(), "discount")?;
        if fields.next().is_some() {
            return Err(Error::Parse(
                "trailing fields on the mdp header line".into(),
            ));
        }

        let mut rewards = Array2::<f64>::zeros((n_states, n_actions));
        let mut transitions = Array3::<f64>::zeros((n_states, n_actions, n_states));
        for line in lines {
            let mut fields = line.split_whitespace();
            match fields.next() {
                Some("R") => {
                    let s_i: usize = parse_field(fields.next(), "R state")?;
                    let a_i: usize = parse_field(fields.next(), "R action")?;
                    let value: f64 = parse_field(fields.next(), "R value")?;
                    check_index(s_i, n_states, "R state")?;
                    check_index(a_i, n_actions, "R action")?;
                    rewards[[s_i, a_i]] = value;
                }
                Some("T") => {
                    let s_i: usize = parse_field(fields.next(), "T state")?;
                    let a_i: usize = parse_field(fields.next(), "T action")?;
                    let s_j: usize = parse_field(fields.next(), "T next state")?;
                    let prob: f64 = parse_field(fields.next(), "T prob")?;
                    check_index(s_i, n_states, "T state")?;
                    check_index(a_i, n_actions, "T action")?;
                    check_index(s_j, n_states, "T next state")?;
                    transitions[[s_i, a_i, s_j]] = prob;
                }
                Some(tag) => {
                    return Err(Error::Parse(format!("unknown line tag '{tag}'")));
                }
                None => unreachable!("blank lines were filtered"),
            }
            if fields.next().is_some() {
                return Err(Error::Parse(format!("trailing fields on line '{line}'")));
            }
        }
        Mdp::new(rewards, transitions, discount)
    }
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, what: &str) -> Result<T> {
    let raw = field.ok_or_else(|| Error::Parse(format!("missing {what}")))?;
    raw.parse()
        .map_err(|_| Error::Parse(format!("bad {what}: '{raw}'")))
}

fn check_index(i: usize, n: usize, what: &str) -> Result<()> {
    if i >= n {
        return Err(Error::Parse(format!("{what} {i} out of range (< {n})")));
    }
    Ok(())
}

pub(crate) fn check_prob_row(row: ArrayView1<f64>, name: impl Fn() -> String) -> Result<()> {
    if let Some(p) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::invalid(format!(
            "{} has invalid probability {p}",
            name()
        )));
    }
    let sum: f64 = row.sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::invalid(format!(
            "{} sums to {sum}, expected 1",
            name()
        )));
    }
    Ok(())
}

/// A deterministic policy: one action index per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DetPolicy {
    pub actions: Vec<usize>,
}

impl DetPolicy {
    pub fn new(actions: Vec<usize>, n_actions: usize) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::invalid("policy must cover at least one state"));
        }
        if let Some(a) = actions.iter().find(|a| **a >= n_actions) {
            return Err(Error::invalid(format!(
                "action {a} out of range (< {n_actions})"
            )));
        }
        Ok(DetPolicy { actions })
    }

    pub fn n_states(&self) -> usize {
        self.actions.len()
    }

    /// Lift to a point-mass stochastic policy.
    pub fn to_stoch(&self, n_actions: usize) -> StochPolicy {
        let mut probs = Array2::<f64>::zeros((self.actions.len(), n_actions));
        for (s_i, &a_i) in self.actions.iter().enumerate() {
            probs[[s_i, a_i]] = 1.0;
        }
        StochPolicy { probs }
    }
}

/// A stochastic policy: one probability vector over actions per state.
#[derive(Debug, Clone, PartialEq)]
pub struct StochPolicy {
    pub probs: Array2<f64>,
}

impl StochPolicy {
    pub fn new(probs: Array2<f64>) -> Result<Self> {
        if probs.nrows() == 0 || probs.ncols() == 0 {
            return Err(Error::invalid("policy table must be non-empty"));
        }
        for (s_i, row) in probs.outer_iter().enumerate() {
            check_prob_row(row, || format!("policy row {s_i}"))?;
        }
        Ok(StochPolicy { probs })
    }

    /// The uniform-random policy.
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        let p = 1.0 / n_actions as f64;
        StochPolicy {
            probs: Array2::from_elem((n_states, n_actions), p),
        }
    }

    pub fn n_states(&self) -> usize {
        self.probs.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.probs.ncols()
    }
}

/// A state-action value table (`Q*`, `Q^pi`, or the epsilon-greedy fixed
/// point, depending on which solver produced it).
#[derive(Debug, Clone, PartialEq)]
pub struct QFunction {
    pub values: Array2<f64>,
}

impl QFunction {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        QFunction {
            values: Array2::zeros((n_states, n_actions)),
        }
    }

    pub fn n_states(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.values.ncols()
    }
}

/// A weighting over states used to collapse a value function to a scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct Weighting {
    pub weights: Array1<f64>,
}

impl Weighting {
    pub fn new(weights: Array1<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("weighting must cover at least one state"));
        }
        check_prob_row(weights.view(), || "state weighting".to_string())?;
        Ok(Weighting { weights })
    }

    pub fn uniform(n_states: usize) -> Self {
        Weighting {
            weights: Array1::from_elem(n_states, 1.0 / n_states as f64),
        }
    }

    pub fn point_mass(n_states: usize, state: usize) -> Result<Self> {
        if state >= n_states {
            return Err(Error::invalid(format!(
                "state {state} out of range (< {n_states})"
            )));
        }
        let mut weights = Array1::zeros(n_states);
        weights[state] = 1.0;
        Ok(Weighting { weights })
    }

    pub fn n_states(&self) -> usize {
        self.weights.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn two_state_mdp() -> Mdp {
        // Two states, one action, both self-looping.
        let rewards = array![[1.0], [0.0]];
        let transitions = Array3::from_shape_vec((2, 1, 2), vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        Mdp::new(rewards, transitions, 0.5).unwrap()
    }

    #[test]
    fn rejects_bad_discount() {
        let m = two_state_mdp();
        assert!(Mdp::new(m.rewards.clone(), m.transitions.clone(), 1.0).is_err());
        assert!(Mdp::new(m.rewards.clone(), m.transitions.clone(), -0.1).is_err());
    }

    #[test]
    fn rejects_negative_reward() {
        let m = two_state_mdp();
        let mut rewards = m.rewards.clone();
        rewards[[0, 0]] = -1.0;
        assert!(Mdp::new(rewards, m.transitions.clone(), 0.5).is_err());
    }

    #[test]
    fn rejects_non_stochastic_row() {
        let m = two_state_mdp();
        let mut t = m.transitions.clone();
        t[[0, 0, 0]] = 0.5;
        assert!(Mdp::new(m.rewards.clone(), t, 0.5).is_err());
    }

    #[test]
    fn rejects_shape_mismatch() {
        let rewards = array![[1.0], [0.0]];
        let transitions = Array3::from_elem((2, 2, 2), 0.5);
        assert!(Mdp::new(rewards, transitions, 0.5).is_err());
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let m = two_state_mdp();
        let text = m.to_text();
        let back = Mdp::from_text(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn text_roundtrip_preserves_awkward_reals() {
        let rewards = array![[1.0 / 3.0, 0.99], [2.0_f64.powi(-40), 0.0]];
        let mut transitions = Array3::zeros((2, 2, 2));
        for a in 0..2 {
            transitions[[0, a, 0]] = 0.1;
            transitions[[0, a, 1]] = 0.9;
            transitions[[1, a, 1]] = 1.0;
        }
        let m = Mdp::new(rewards, transitions, 0.99).unwrap();
        let back = Mdp::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn from_text_rejects_garbage() {
        assert!(Mdp::from_text("").is_err());
        assert!(Mdp::from_text("mdp 2 1").is_err());
        assert!(Mdp::from_text("mdp 2 1 0.5\nX 0 0 1.0").is_err());
        assert!(Mdp::from_text("mdp 2 1 0.5\nT 0 0 5 1.0").is_err());
        // Parses but fails MDP validation: row 1 sums to zero.
        assert!(Mdp::from_text("mdp 2 1 0.5\nT 0 0 0 1.0").is_err());
    }

    #[test]
    fn det_policy_validates_actions() {
        assert!(DetPolicy::new(vec![0, 1], 2).is_ok());
        assert!(DetPolicy::new(vec![0, 2], 2).is_err());
    }

    #[test]
    fn det_policy_lifts_to_point_mass() {
        let p = DetPolicy::new(vec![1, 0], 2).unwrap().to_stoch(2);
        assert_eq!(p.probs, array![[0.0, 1.0], [1.0, 0.0]]);
        StochPolicy::new(p.probs).unwrap();
    }

    #[test]
    fn uniform_weighting_sums_to_one() {
        let w = Weighting::uniform(7);
        assert!((w.weights.sum() - 1.0).abs() < PROB_TOL);
    }

    #[test]
    fn point_mass_weighting_checks_range() {
        assert!(Weighting::point_mass(3, 2).is_ok());
        assert!(Weighting::point_mass(3, 3).is_err());
    }

    #[test]
    fn r_max_is_largest_entry() {
        assert_eq!(two_state_mdp().r_max(), 1.0);
    }
}
