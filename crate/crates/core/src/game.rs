//! Game model: resources, actions, welfare, designed utilities and the
//! compromise transform that produces each agent's effective utility.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};

/// Global comparison tolerance for every `>=` and argmax test.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceId(pub u32);

impl ResourceId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

/// A set of resources chosen by one agent. Stored sorted and deduplicated.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<ResourceId>", into = "Vec<ResourceId>")]
pub struct Action(Vec<ResourceId>);

/// The opt-out action.
pub static EMPTY_ACTION: Action = Action(Vec::new());

impl Action {
    pub fn new<I: IntoIterator<Item = ResourceId>>(resources: I) -> Self {
        let mut v: Vec<ResourceId> = resources.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Action(v)
    }

    pub fn empty() -> Self {
        Action(Vec::new())
    }

    pub fn single(r: u32) -> Self {
        Action(vec![ResourceId(r)])
    }

    pub fn from_ids<I: IntoIterator<Item = u32>>(ids: I) -> Self {
        Action::new(ids.into_iter().map(ResourceId))
    }

    pub fn resources(&self) -> &[ResourceId] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, r: ResourceId) -> bool {
        self.0.binary_search(&r).is_ok()
    }

    pub fn union(&self, other: &Action) -> Action {
        Action::new(self.0.iter().chain(other.0.iter()).copied())
    }
}

impl From<Vec<ResourceId>> for Action {
    fn from(v: Vec<ResourceId>) -> Self {
        Action::new(v)
    }
}

impl From<Action> for Vec<ResourceId> {
    fn from(a: Action) -> Self {
        a.0
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "{{}}");
        }
        write!(f, "{{")?;
        for (k, r) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "}}")
    }
}

/// One action per agent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointAction(pub Vec<Action>);

impl JointAction {
    pub fn all_empty(n: usize) -> Self {
        JointAction(vec![Action::empty(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn actions(&self) -> &[Action] {
        &self.0
    }

    pub fn get(&self, i: usize) -> &Action {
        &self.0[i]
    }

    /// Copy of this profile with agent `i`'s entry replaced.
    pub fn with(&self, i: usize, action: Action) -> Self {
        let mut out = self.clone();
        out.0[i] = action;
        out
    }

    /// Agent-wise union `c_i = a_i ∪ b_i` of two profiles of equal length.
    pub fn union(&self, other: &JointAction) -> JointAction {
        assert_eq!(self.len(), other.len(), "profile length mismatch");
        JointAction(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.union(b))
                .collect(),
        )
    }

    /// Keep only the entries of agents for which `keep` is true; the rest opt out.
    pub fn restrict<F: Fn(usize) -> bool>(&self, keep: F) -> JointAction {
        JointAction(
            self.0
                .iter()
                .enumerate()
                .map(|(i, a)| if keep(i) { a.clone() } else { Action::empty() })
                .collect(),
        )
    }

    /// Base set of resources `R(a)`.
    pub fn base_set(&self) -> Vec<ResourceId> {
        base_set(self.0.iter())
    }

    pub(crate) fn refs(&self) -> Vec<&Action> {
        self.0.iter().collect()
    }
}

impl fmt::Display for JointAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

fn base_set<'a, I: IntoIterator<Item = &'a Action>>(actions: I) -> Vec<ResourceId> {
    let mut v: Vec<ResourceId> = actions
        .into_iter()
        .flat_map(|a| a.0.iter().copied())
        .collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// System welfare `W`.
#[derive(Clone, Debug, PartialEq)]
pub enum WelfareSpec {
    /// `W(a) = Σ_r W_r(|a|_r)`; `curves[r][c]` is the value of resource `r`
    /// when `c` agents select it, for `c = 0..=n`.
    Separable { curves: Vec<Vec<f64>> },
    /// `W(a)` looked up by the base set `R(a)`. Keys are sorted resource lists.
    /// A missing empty-set entry reads as 0.
    Tabulated {
        table: BTreeMap<Vec<ResourceId>, f64>,
    },
}

impl WelfareSpec {
    pub fn is_separable(&self) -> bool {
        matches!(self, WelfareSpec::Separable { .. })
    }

    /// Separable welfare where each resource is worth `v` as soon as anyone
    /// selects it (`W(a) = Σ_{r∈R(a)} v_r`).
    pub fn coverage(values: &[f64], n: usize) -> Self {
        let curves = values
            .iter()
            .map(|&v| {
                std::iter::once(0.0)
                    .chain(std::iter::repeat(v).take(n))
                    .collect()
            })
            .collect();
        WelfareSpec::Separable { curves }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompromiseLabel {
    Normal,
    Blind,
    Isolated,
    Disabled,
}

impl CompromiseLabel {
    pub fn is_compromised(self) -> bool {
        self != CompromiseLabel::Normal
    }

    /// Blind and isolated agents ignore every other agent's action.
    pub fn is_independent(self) -> bool {
        matches!(self, CompromiseLabel::Blind | CompromiseLabel::Isolated)
    }

    /// Whether normal agents can see this agent's action.
    pub fn is_visible(self) -> bool {
        matches!(self, CompromiseLabel::Normal | CompromiseLabel::Blind)
    }
}

impl fmt::Display for CompromiseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CompromiseLabel::Normal => "normal",
            CompromiseLabel::Blind => "blind",
            CompromiseLabel::Isolated => "isolated",
            CompromiseLabel::Disabled => "disabled",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for CompromiseLabel {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Ok(CompromiseLabel::Normal),
            "blind" => Ok(CompromiseLabel::Blind),
            "isolated" => Ok(CompromiseLabel::Isolated),
            "disabled" => Ok(CompromiseLabel::Disabled),
            other => Err(GameError::InvalidParams(format!(
                "unknown compromise label `{other}`"
            ))),
        }
    }
}

/// Designed utility `U_i` assigned to an agent before compromise.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UtilityKind {
    #[serde(rename = "mc")]
    MarginalContribution,
    #[serde(rename = "es")]
    EqualShare,
}

impl fmt::Display for UtilityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UtilityKind::MarginalContribution => f.write_str("mc"),
            UtilityKind::EqualShare => f.write_str("es"),
        }
    }
}

/// For each agent, the agents whose actions its effective utility depends on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationStructure {
    pub observed: Vec<Vec<usize>>,
}

impl ObservationStructure {
    pub fn observes(&self, i: usize, j: usize) -> bool {
        self.observed[i].binary_search(&j).is_ok()
    }
}

/// A valid utility game with compromised agents. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct GameInstance {
    n: usize,
    num_resources: usize,
    action_sets: Vec<Vec<Action>>,
    welfare: WelfareSpec,
    utilities: Vec<UtilityKind>,
    compromise: Vec<CompromiseLabel>,
}

impl GameInstance {
    /// Builds and validates an instance. The empty action is added to any
    /// action set that lacks it (at index 0).
    pub fn new(
        num_resources: usize,
        action_sets: Vec<Vec<Action>>,
        welfare: WelfareSpec,
        utilities: Vec<UtilityKind>,
        compromise: Vec<CompromiseLabel>,
    ) -> Result<Self> {
        let n = action_sets.len();
        if utilities.len() != n || compromise.len() != n {
            return Err(GameError::Invalid(format!(
                "{} action sets, {} utilities and {} compromise labels",
                n,
                utilities.len(),
                compromise.len()
            )));
        }
        let mut action_sets = action_sets;
        for (i, set) in action_sets.iter_mut().enumerate() {
            if !set.iter().any(Action::is_empty) {
                set.insert(0, Action::empty());
            }
            for (k, a) in set.iter().enumerate() {
                if let Some(r) = a.resources().iter().find(|r| r.index() >= num_resources) {
                    return Err(GameError::Invalid(format!(
                        "agent {i} action {k} references unknown resource {}",
                        r.0
                    )));
                }
                if set[..k].contains(a) {
                    return Err(GameError::Invalid(format!(
                        "agent {i} lists action {a} twice"
                    )));
                }
            }
        }
        validate_welfare(&welfare, n, num_resources)?;
        if !welfare.is_separable() {
            if let Some(i) = utilities.iter().position(|&u| u == UtilityKind::EqualShare) {
                return Err(GameError::UnsupportedUtility { agent: i });
            }
        }
        Ok(GameInstance {
            n,
            num_resources,
            action_sets,
            welfare,
            utilities,
            compromise,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_resources(&self) -> usize {
        self.num_resources
    }

    pub fn action_sets(&self) -> &[Vec<Action>] {
        &self.action_sets
    }

    pub fn actions(&self, i: usize) -> &[Action] {
        &self.action_sets[i]
    }

    pub fn welfare(&self) -> &WelfareSpec {
        &self.welfare
    }

    pub fn utilities(&self) -> &[UtilityKind] {
        &self.utilities
    }

    pub fn compromise(&self) -> &[CompromiseLabel] {
        &self.compromise
    }

    pub fn label(&self, i: usize) -> CompromiseLabel {
        self.compromise[i]
    }

    /// `|K|`
    pub fn compromised_count(&self) -> usize {
        self.compromise
            .iter()
            .filter(|l| l.is_compromised())
            .count()
    }

    pub fn any_label(&self, label: CompromiseLabel) -> bool {
        self.compromise.contains(&label)
    }

    pub fn all_mc(&self) -> bool {
        self.utilities
            .iter()
            .all(|&u| u == UtilityKind::MarginalContribution)
    }

    /// Index of the empty action in agent `i`'s action set.
    pub fn empty_index(&self, i: usize) -> usize {
        self.action_sets[i]
            .iter()
            .position(Action::is_empty)
            .expect("every action set contains the empty action")
    }

    /// `|A| = Π_i |A_i|`, saturating.
    pub fn joint_space_size(&self) -> u128 {
        self.action_sets
            .iter()
            .fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128))
    }

    /// Structural check: length `n` and every resource id known. Does not
    /// require admissibility, so agent-wise unions of profiles are accepted.
    pub fn check_shape(&self, a: &JointAction) -> Result<()> {
        if a.len() != self.n {
            return Err(GameError::InvalidProfile(format!(
                "expected {} entries, got {}",
                self.n,
                a.len()
            )));
        }
        for (i, act) in a.actions().iter().enumerate() {
            if let Some(r) = act
                .resources()
                .iter()
                .find(|r| r.index() >= self.num_resources)
            {
                return Err(GameError::InvalidProfile(format!(
                    "agent {i} uses unknown resource {}",
                    r.0
                )));
            }
        }
        Ok(())
    }

    /// Full admissibility: every entry is in its agent's action set and
    /// disabled agents opt out.
    pub fn validate_profile(&self, a: &JointAction) -> Result<()> {
        self.check_shape(a)?;
        for (i, act) in a.actions().iter().enumerate() {
            if !self.action_sets[i].contains(act) {
                return Err(GameError::InvalidProfile(format!(
                    "agent {i} action {act} is not in its action set"
                )));
            }
            if self.compromise[i] == CompromiseLabel::Disabled && !act.is_empty() {
                return Err(GameError::InvalidProfile(format!(
                    "disabled agent {i} must select the empty action"
                )));
            }
        }
        Ok(())
    }

    pub fn observation_structure(&self) -> ObservationStructure {
        let observed = (0..self.n)
            .map(|i| {
                if self.compromise[i] != CompromiseLabel::Normal {
                    return Vec::new();
                }
                (0..self.n)
                    .filter(|&j| j != i && self.compromise[j].is_visible())
                    .collect()
            })
            .collect();
        ObservationStructure { observed }
    }

    // ----- evaluation on profile views -----

    /// `W` on a borrowed profile view (one entry per agent). No shape check.
    pub fn welfare_refs(&self, profile: &[&Action]) -> Result<f64> {
        match &self.welfare {
            WelfareSpec::Separable { curves } => {
                let mut counts = vec![0usize; self.num_resources];
                for a in profile {
                    for r in a.resources() {
                        counts[r.index()] += 1;
                    }
                }
                Ok(counts
                    .iter()
                    .zip(curves)
                    .filter(|(&c, _)| c > 0)
                    .map(|(&c, curve)| curve[c.min(curve.len() - 1)])
                    .sum())
            }
            WelfareSpec::Tabulated { table } => {
                let key = base_set(profile.iter().copied());
                match table.get(&key) {
                    Some(&v) => Ok(v),
                    None if key.is_empty() => Ok(0.0),
                    None => Err(GameError::ModelIncomplete(key)),
                }
            }
        }
    }

    pub(crate) fn mc_refs(&self, i: usize, profile: &[&Action]) -> Result<f64> {
        if profile[i].is_empty() {
            return Ok(0.0);
        }
        let with = self.welfare_refs(profile)?;
        let mut without = profile.to_vec();
        without[i] = &EMPTY_ACTION;
        Ok(with - self.welfare_refs(&without)?)
    }

    pub(crate) fn es_refs(&self, i: usize, profile: &[&Action]) -> Result<f64> {
        let WelfareSpec::Separable { curves } = &self.welfare else {
            return Err(GameError::UnsupportedUtility { agent: i });
        };
        let mut total = 0.0;
        for &r in profile[i].resources() {
            let count = profile.iter().filter(|a| a.contains(r)).count();
            total += curves[r.index()][count] / count as f64;
        }
        Ok(total)
    }

    /// Designed utility `U_i` on a profile view.
    pub(crate) fn utility_refs(&self, i: usize, profile: &[&Action]) -> Result<f64> {
        match self.utilities[i] {
            UtilityKind::MarginalContribution => self.mc_refs(i, profile),
            UtilityKind::EqualShare => self.es_refs(i, profile),
        }
    }

    /// Effective utility `Ũ_i` on a profile view.
    pub(crate) fn effective_refs(&self, i: usize, profile: &[&Action]) -> Result<f64> {
        match self.compromise[i] {
            CompromiseLabel::Disabled => Ok(0.0),
            CompromiseLabel::Blind | CompromiseLabel::Isolated => {
                let mut alone: Vec<&Action> = vec![&EMPTY_ACTION; self.n];
                alone[i] = profile[i];
                self.utility_refs(i, &alone)
            }
            CompromiseLabel::Normal => {
                if self.compromise.iter().all(|l| l.is_visible()) {
                    return self.utility_refs(i, profile);
                }
                let seen: Vec<&Action> = profile
                    .iter()
                    .zip(&self.compromise)
                    .map(|(&a, l)| if l.is_visible() { a } else { &EMPTY_ACTION })
                    .collect();
                self.utility_refs(i, &seen)
            }
        }
    }

    // ----- public operations -----

    /// `W(a)`. Separable welfare counts multiplicity; tabulated welfare reads
    /// the base set `R(a)`.
    pub fn welfare_eval(&self, a: &JointAction) -> Result<f64> {
        self.check_shape(a)?;
        self.welfare_refs(&a.refs())
    }

    /// `MC_i(a) = W(a) − W(∅, a_{-i})`.
    pub fn marginal_contribution(&self, i: usize, a: &JointAction) -> Result<f64> {
        self.check_shape(a)?;
        self.mc_refs(i, &a.refs())
    }

    /// `ES_i(a) = Σ_{r∈a_i} W_r(|a|_r) / |a|_r`.
    pub fn equal_share(&self, i: usize, a: &JointAction) -> Result<f64> {
        self.check_shape(a)?;
        self.es_refs(i, &a.refs())
    }

    /// The agent's designed (uncompromised) utility `U_i(a)`.
    pub fn utility(&self, i: usize, a: &JointAction) -> Result<f64> {
        self.check_shape(a)?;
        self.utility_refs(i, &a.refs())
    }

    /// `Ũ_i(a)`: normal agents evaluate `U_i` with isolated and disabled agents
    /// opted out; blind and isolated agents evaluate `U_i(a_i, ∅)`; disabled
    /// agents get 0.
    pub fn effective_utility(&self, i: usize, a: &JointAction) -> Result<f64> {
        self.check_shape(a)?;
        self.effective_refs(i, &a.refs())
    }
}

fn validate_welfare(welfare: &WelfareSpec, n: usize, num_resources: usize) -> Result<()> {
    match welfare {
        WelfareSpec::Separable { curves } => {
            if curves.len() != num_resources {
                return Err(GameError::Invalid(format!(
                    "{} curves for {} resources",
                    curves.len(),
                    num_resources
                )));
            }
            for (r, curve) in curves.iter().enumerate() {
                validate_curve(curve, n)
                    .map_err(|msg| GameError::Invalid(format!("resource {r}: {msg}")))?;
            }
        }
        WelfareSpec::Tabulated { table } => {
            for (subset, &v) in table {
                if let Some(r) = subset.iter().find(|r| r.index() >= num_resources) {
                    return Err(GameError::Invalid(format!(
                        "welfare table references unknown resource {}",
                        r.0
                    )));
                }
                if subset.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(GameError::Invalid(format!(
                        "welfare table key {subset:?} is not a sorted set"
                    )));
                }
                if !v.is_finite() || v < 0.0 {
                    return Err(GameError::Invalid(format!(
                        "welfare table value {v} for {subset:?} is not a finite nonnegative number"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Checks one per-resource curve: length `n + 1`, `W_r(0) = 0`, finite,
/// nonnegative, nondecreasing, with decreasing increments.
pub fn validate_curve(curve: &[f64], n: usize) -> std::result::Result<(), String> {
    if curve.len() != n + 1 {
        return Err(format!(
            "curve has {} values, expected {}",
            curve.len(),
            n + 1
        ));
    }
    if let Some(v) = curve.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(format!("value {v} is not a finite nonnegative number"));
    }
    if curve[0].abs() > TOLERANCE {
        return Err(format!("value at count 0 is {}, expected 0", curve[0]));
    }
    for c in 1..curve.len() {
        if curve[c] < curve[c - 1] - TOLERANCE {
            return Err(format!(
                "curve decreases between counts {} and {}",
                c - 1,
                c
            ));
        }
        if c >= 2 {
            let prev = curve[c - 1] - curve[c - 2];
            let next = curve[c] - curve[c - 1];
            if next > prev + TOLERANCE {
                return Err(format!(
                    "curve is not concave: increment at count {} exceeds the one before",
                    c
                ));
            }
        }
    }
    Ok(())
}
