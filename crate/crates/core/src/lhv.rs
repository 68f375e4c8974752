//! Local hidden-variable models.
//!
//! A model is a finite list of hidden states λ, each with a weight p(λ) and
//! a response table giving P_i(x|X,λ) for both objects. The joint outcome
//! probability is the factorized mixture
//!
//! ```text
//! P(x,x'|X,X') = Σ_λ P₁(x|X,λ) P₂(x'|X',λ) p(λ)
//! ```
//!
//! so every [`LhvModel`] is Bell-local by construction. Perfect
//! correlations plus factorization force each supported response to be
//! deterministic; [`derive_determinism`] checks that chain on a concrete
//! model and reports the witnesses.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::quantum::CorrelationRecord;
use crate::{BellError, Result, Setting, INPUT_NORM_TOL, PROB_TOL};

/// λ with weight at or below this are ignored by support-based checks.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Distance from 0 or 1 within which a response counts as deterministic.
pub const DETERMINISM_TOL: f64 = 1e-10;

/// Tolerance for the factorization check.
pub const FACTORIZATION_TOL: f64 = 1e-10;

/// Values of the properties A, B, C carried by both objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PropertyTriplet {
    pub a: u8,
    pub b: u8,
    pub c: u8,
}

impl PropertyTriplet {
    pub fn new(a: u8, b: u8, c: u8) -> Self {
        assert!(a < 2 && b < 2 && c < 2, "property values are bits");
        PropertyTriplet { a, b, c }
    }

    /// Lexicographic index `4a + 2b + c`.
    pub fn index(self) -> usize {
        4 * self.a as usize + 2 * self.b as usize + self.c as usize
    }

    pub fn from_index(i: usize) -> Self {
        assert!(i < 8, "triplet index out of range: {i}");
        PropertyTriplet::new((i >> 2) as u8 & 1, (i >> 1) as u8 & 1, i as u8 & 1)
    }

    pub fn value(self, setting: Setting) -> u8 {
        match setting {
            Setting::A => self.a,
            Setting::B => self.b,
            Setting::C => self.c,
        }
    }

    /// `[a=b] + [a=c] + [b=c]`; never below 1 for three bits.
    pub fn agreeing_pairs(self) -> u32 {
        (self.a == self.b) as u32 + (self.a == self.c) as u32 + (self.b == self.c) as u32
    }
}

impl fmt::Display for PropertyTriplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.a, self.b, self.c)
    }
}

impl FromStr for PropertyTriplet {
    type Err = BellError;

    fn from_str(s: &str) -> Result<Self> {
        let bits: Vec<u8> = s
            .chars()
            .map(|ch| match ch {
                '0' => Some(0),
                '1' => Some(1),
                _ => None,
            })
            .collect::<Option<_>>()
            .ok_or_else(|| {
                BellError::InvalidArgument(format!("triplet {s:?} must contain only 0 and 1"))
            })?;
        match bits.as_slice() {
            &[a, b, c] => Ok(PropertyTriplet::new(a, b, c)),
            _ => Err(BellError::InvalidArgument(format!(
                "triplet {s:?} must have exactly three bits"
            ))),
        }
    }
}

/// All eight deterministic strategies in lexicographic order.
pub fn enumerate_deterministic_strategies() -> Vec<PropertyTriplet> {
    (0..8).map(PropertyTriplet::from_index).collect()
}

pub type TripletWeights = BTreeMap<PropertyTriplet, f64>;

/// Uniform weight 1/8 on every triplet.
pub fn uniform_triplet_weights() -> TripletWeights {
    enumerate_deterministic_strategies()
        .into_iter()
        .map(|t| (t, 0.125))
        .collect()
}

pub(crate) fn validate_triplet_weights(weights: &TripletWeights) -> Result<()> {
    for (t, &w) in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(BellError::InvalidDistribution(format!(
                "weight of triplet {t} is {w}; weights must be finite and non-negative"
            )));
        }
    }
    let total: f64 = weights.values().sum();
    if (total - 1.0).abs() > INPUT_NORM_TOL {
        return Err(BellError::InvalidDistribution(format!(
            "triplet weights sum to {total}, expected 1"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Object {
    First,
    Second,
}

/// `[P(0|X), P(1|X)]` for one object and one setting.
pub type OutcomeProbs = [f64; 2];

/// Response probabilities P_i(x|X,λ) of both objects at one λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseTable {
    pub first: [OutcomeProbs; 3],
    pub second: [OutcomeProbs; 3],
}

impl ResponseTable {
    pub fn new(first: [OutcomeProbs; 3], second: [OutcomeProbs; 3]) -> Self {
        ResponseTable { first, second }
    }

    /// Both objects answer with the triplet's values.
    pub fn deterministic(t: PropertyTriplet) -> Self {
        let rows = Setting::ALL.map(|s| {
            if t.value(s) == 0 {
                [1.0, 0.0]
            } else {
                [0.0, 1.0]
            }
        });
        ResponseTable::new(rows, rows)
    }

    pub fn row(&self, object: Object, setting: Setting) -> OutcomeProbs {
        match object {
            Object::First => self.first[setting.index()],
            Object::Second => self.second[setting.index()],
        }
    }

    pub fn prob(&self, object: Object, setting: Setting, outcome: usize) -> f64 {
        self.row(object, setting)[outcome]
    }

    fn validate(&self) -> std::result::Result<(), String> {
        for (object, rows) in [("p1", &self.first), ("p2", &self.second)] {
            for (setting, row) in Setting::ALL.iter().zip(rows) {
                if row.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
                    return Err(format!(
                        "{object}.{setting} = {row:?} has an entry outside [0, 1]"
                    ));
                }
                let s = row[0] + row[1];
                if (s - 1.0).abs() > INPUT_NORM_TOL {
                    return Err(format!("{object}.{setting} = {row:?} sums to {s}, expected 1"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenState {
    pub id: String,
    pub weight: f64,
    pub table: ResponseTable,
}

impl HiddenState {
    pub fn is_supported(&self) -> bool {
        self.weight > SUPPORT_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LhvModel {
    lambdas: Vec<HiddenState>,
}

impl LhvModel {
    pub fn new(lambdas: Vec<HiddenState>) -> Result<Self> {
        for l in &lambdas {
            if !l.weight.is_finite() || l.weight < 0.0 {
                return Err(BellError::InvalidDistribution(format!(
                    "lambda {:?}: weight {} must be finite and non-negative",
                    l.id, l.weight
                )));
            }
            l.table.validate().map_err(|msg| {
                BellError::InvalidDistribution(format!("lambda {:?}: {msg}", l.id))
            })?;
        }
        let total: f64 = lambdas.iter().map(|l| l.weight).sum();
        if (total - 1.0).abs() > INPUT_NORM_TOL {
            return Err(BellError::InvalidDistribution(format!(
                "lambda weights sum to {total}, expected 1"
            )));
        }
        Ok(LhvModel { lambdas })
    }

    pub fn lambdas(&self) -> &[HiddenState] {
        &self.lambdas
    }

    pub fn supported(&self) -> impl Iterator<Item = &HiddenState> {
        self.lambdas.iter().filter(|l| l.is_supported())
    }
}

/// Inverse of [`model_from_triplet_distribution`]: the triplet weights of a
/// model whose supported λ all respond deterministically and identically
/// on both objects. `None` for any other model.
pub fn triplet_weights_of(model: &LhvModel) -> Option<TripletWeights> {
    let mut weights = TripletWeights::new();
    for l in model.supported() {
        let mut bits = [0u8; 3];
        for s in Setting::ALL {
            let v1 = deterministic_value(l.table.row(Object::First, s))?;
            let v2 = deterministic_value(l.table.row(Object::Second, s))?;
            if v1 != v2 {
                return None;
            }
            bits[s.index()] = v1;
        }
        *weights
            .entry(PropertyTriplet::new(bits[0], bits[1], bits[2]))
            .or_insert(0.0) += l.weight;
    }
    Some(weights)
}

/// One λ per triplet, responding deterministically and identically on both
/// objects.
pub fn model_from_triplet_distribution(weights: &TripletWeights) -> Result<LhvModel> {
    validate_triplet_weights(weights)?;
    let lambdas = weights
        .iter()
        .map(|(&t, &w)| HiddenState {
            id: t.to_string(),
            weight: w,
            table: ResponseTable::deterministic(t),
        })
        .collect();
    LhvModel::new(lambdas)
}

pub fn joint_probability(
    model: &LhvModel,
    setting1: Setting,
    setting2: Setting,
    x1: usize,
    x2: usize,
) -> f64 {
    model
        .lambdas
        .iter()
        .map(|l| {
            l.table.prob(Object::First, setting1, x1)
                * l.table.prob(Object::Second, setting2, x2)
                * l.weight
        })
        .sum()
}

pub fn lhv_p_same(model: &LhvModel, setting1: Setting, setting2: Setting) -> f64 {
    joint_probability(model, setting1, setting2, 0, 0)
        + joint_probability(model, setting1, setting2, 1, 1)
}

/// P_same over the pairs (A,B), (A,C), (B,C).
pub fn lhv_bell_record(model: &LhvModel) -> CorrelationRecord {
    let [ab, ac, bc] = Setting::BELL_PAIRS.map(|(x, y)| lhv_p_same(model, x, y));
    CorrelationRecord::new(ab, ac, bc)
}

/// `P(x,x'|X,X',λ)` for every λ, indexed `[λ][X][X'][x][x']`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    pub per_lambda: Vec<[[[[f64; 2]; 2]; 3]; 3]>,
}

impl JointTable {
    /// The factorized table a model generates.
    pub fn from_model(model: &LhvModel) -> Self {
        let per_lambda = model
            .lambdas
            .iter()
            .map(|l| {
                let mut t = [[[[0.0; 2]; 2]; 3]; 3];
                for s1 in Setting::ALL {
                    for s2 in Setting::ALL {
                        for x1 in 0..2 {
                            for x2 in 0..2 {
                                t[s1.index()][s2.index()][x1][x2] =
                                    l.table.prob(Object::First, s1, x1)
                                        * l.table.prob(Object::Second, s2, x2);
                            }
                        }
                    }
                }
                t
            })
            .collect();
        JointTable { per_lambda }
    }
}

/// True iff every entry of `joint` equals P₁(x|X,λ)·P₂(x'|X',λ) from the
/// model's response tables. A table with a different number of λ never
/// factorizes against the model.
pub fn check_bell_locality(joint: &JointTable, model: &LhvModel) -> bool {
    if joint.per_lambda.len() != model.lambdas.len() {
        return false;
    }
    joint
        .per_lambda
        .iter()
        .zip(&model.lambdas)
        .all(|(table, l)| {
            Setting::ALL.iter().all(|&s1| {
                Setting::ALL.iter().all(|&s2| {
                    (0..2).all(|x1| {
                        (0..2).all(|x2| {
                            let product = l.table.prob(Object::First, s1, x1)
                                * l.table.prob(Object::Second, s2, x2);
                            (table[s1.index()][s2.index()][x1][x2] - product).abs()
                                <= FACTORIZATION_TOL
                        })
                    })
                })
            })
        })
}

/// Weighted probability that both objects, measured on `setting`, disagree
/// at this λ, counting both orders (1,0) and (0,1).
pub fn discordance_at(lambda: &HiddenState, setting: Setting) -> f64 {
    let p1 = lambda.table.row(Object::First, setting);
    let p2 = lambda.table.row(Object::Second, setting);
    lambda.weight * (p1[1] * p2[0] + p1[0] * p2[1])
}

pub fn discordance(model: &LhvModel, setting: Setting) -> f64 {
    model.lambdas.iter().map(|l| discordance_at(l, setting)).sum()
}

/// P_same(X,X) = 1, i.e. both discordance sums vanish.
pub fn check_perfect_correlation(model: &LhvModel, setting: Setting) -> bool {
    let (mut d10, mut d01) = (0.0, 0.0);
    for l in &model.lambdas {
        let p1 = l.table.row(Object::First, setting);
        let p2 = l.table.row(Object::Second, setting);
        d10 += p1[1] * p2[0] * l.weight;
        d01 += p1[0] * p2[1] * l.weight;
    }
    d10.abs() <= PROB_TOL && d01.abs() <= PROB_TOL
}

fn is_deterministic(row: OutcomeProbs) -> bool {
    row.iter()
        .all(|&p| p.abs() <= DETERMINISM_TOL || (p - 1.0).abs() <= DETERMINISM_TOL)
}

fn deterministic_value(row: OutcomeProbs) -> Option<u8> {
    if !is_deterministic(row) {
        None
    } else if row[0] > 0.5 {
        Some(0)
    } else {
        Some(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeterminismWitness {
    pub lambda: String,
    pub weight: f64,
    pub setting: Setting,
    pub first: OutcomeProbs,
    pub second: OutcomeProbs,
    pub first_deterministic: bool,
    pub second_deterministic: bool,
    /// Predetermined value shared by both objects, if any.
    pub value: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscordanceWitness {
    pub lambda: String,
    pub setting: Setting,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeterminismReport {
    /// No λ has positive weight.
    pub degenerate: bool,
    /// Perfect correlations hold for A, B and C.
    pub precondition_holds: bool,
    pub failing_settings: Vec<Setting>,
    /// Non-zero discordance terms for failing settings.
    pub discordances: Vec<DiscordanceWitness>,
    /// One entry per supported λ and setting.
    pub witnesses: Vec<DeterminismWitness>,
    /// Precondition holds and every witness is deterministic on both
    /// objects with equal values.
    pub confirmed: bool,
}

pub fn derive_determinism(model: &LhvModel) -> DeterminismReport {
    let failing_settings: Vec<Setting> = Setting::ALL
        .into_iter()
        .filter(|&s| !check_perfect_correlation(model, s))
        .collect();
    let discordances = failing_settings
        .iter()
        .flat_map(|&s| {
            model.supported().filter_map(move |l| {
                let mass = discordance_at(l, s);
                (mass > 0.0).then(|| DiscordanceWitness {
                    lambda: l.id.clone(),
                    setting: s,
                    mass,
                })
            })
        })
        .collect();

    let witnesses: Vec<DeterminismWitness> = model
        .supported()
        .flat_map(|l| {
            Setting::ALL.into_iter().map(move |s| {
                let first = l.table.row(Object::First, s);
                let second = l.table.row(Object::Second, s);
                let v1 = deterministic_value(first);
                let v2 = deterministic_value(second);
                DeterminismWitness {
                    lambda: l.id.clone(),
                    weight: l.weight,
                    setting: s,
                    first,
                    second,
                    first_deterministic: v1.is_some(),
                    second_deterministic: v2.is_some(),
                    value: if v1 == v2 { v1 } else { None },
                }
            })
        })
        .collect();

    let precondition_holds = failing_settings.is_empty();
    let confirmed = precondition_holds && witnesses.iter().all(|w| w.value.is_some());
    DeterminismReport {
        degenerate: model.supported().next().is_none(),
        precondition_holds,
        failing_settings,
        discordances,
        witnesses,
        confirmed,
    }
}

pub const EINSTEIN_LOCALITY_NOTE: &str = "not decidable from a response table";

/// Which hypotheses a model satisfies. Setting-choice freedom and
/// measurement independence are assumptions about the experimenter and are
/// always recorded as held.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisFlags {
    pub counterfactual_definite: bool,
    pub einstein_local: String,
    pub hidden_variable: bool,
    pub bell_local: bool,
    pub perfect_correlations: bool,
    pub no_super_determinism: bool,
    pub measurement_independence: bool,
}

pub fn classify_model(model: &LhvModel) -> HypothesisFlags {
    let counterfactual_definite = model.supported().all(|l| {
        Setting::ALL.iter().all(|&s| {
            is_deterministic(l.table.row(Object::First, s))
                && is_deterministic(l.table.row(Object::Second, s))
        })
    });
    HypothesisFlags {
        counterfactual_definite,
        einstein_local: EINSTEIN_LOCALITY_NOTE.to_string(),
        hidden_variable: true,
        bell_local: true,
        perfect_correlations: Setting::ALL
            .iter()
            .all(|&s| check_perfect_correlation(model, s)),
        no_super_determinism: true,
        measurement_independence: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn point_mass(t: PropertyTriplet) -> LhvModel {
        model_from_triplet_distribution(&TripletWeights::from([(t, 1.0)])).unwrap()
    }

    fn single(id: &str, weight: f64, table: ResponseTable) -> HiddenState {
        HiddenState {
            id: id.into(),
            weight,
            table,
        }
    }

    /// Counting oracle: mass of triplets whose values satisfy `pred`.
    fn count(pred: impl Fn(PropertyTriplet) -> bool) -> usize {
        enumerate_deterministic_strategies()
            .into_iter()
            .filter(|&t| pred(t))
            .count()
    }

    #[test]
    fn eight_strategies_in_order() {
        let all = enumerate_deterministic_strategies();
        assert_eq!(all.len(), 8);
        assert_eq!(all[0], PropertyTriplet::new(0, 0, 0));
        assert_eq!(all[7], PropertyTriplet::new(1, 1, 1));
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert!(all.contains(&PropertyTriplet::new(0, 0, 1)));
        assert!(all.contains(&PropertyTriplet::new(1, 1, 0)));
        assert!(all.iter().all(|t| t.agreeing_pairs() >= 1));
    }

    #[test]
    fn triplet_text_round_trip() {
        for t in enumerate_deterministic_strategies() {
            assert_eq!(t.to_string().parse::<PropertyTriplet>().unwrap(), t);
        }
        assert!("01".parse::<PropertyTriplet>().is_err());
        assert!("012".parse::<PropertyTriplet>().is_err());
    }

    #[test]
    fn uniform_model_has_eight_equal_lambdas() {
        let m = model_from_triplet_distribution(&uniform_triplet_weights()).unwrap();
        assert_eq!(m.lambdas().len(), 8);
        assert!(m.lambdas().iter().all(|l| l.weight == 0.125));
    }

    #[test]
    fn point_mass_tables_follow_the_triplet() {
        let m = point_mass(PropertyTriplet::new(0, 0, 1));
        let t = &m.lambdas()[0].table;
        assert_eq!(t.prob(Object::First, Setting::A, 0), 1.0);
        assert_eq!(t.prob(Object::First, Setting::C, 1), 1.0);
        assert_eq!(t.first, t.second);
    }

    #[test]
    fn two_point_mixture() {
        let w = TripletWeights::from([
            (PropertyTriplet::new(0, 0, 1), 0.2),
            (PropertyTriplet::new(1, 1, 0), 0.8),
        ]);
        let m = model_from_triplet_distribution(&w).unwrap();
        let weights: Vec<f64> = m.lambdas().iter().map(|l| l.weight).collect();
        assert_eq!(weights, vec![0.2, 0.8]);
    }

    #[test]
    fn bad_triplet_weights_are_rejected() {
        let neg = TripletWeights::from([
            (PropertyTriplet::new(0, 0, 0), -0.1),
            (PropertyTriplet::new(1, 1, 1), 1.1),
        ]);
        assert!(matches!(
            model_from_triplet_distribution(&neg),
            Err(BellError::InvalidDistribution(_))
        ));
        let short = TripletWeights::from([(PropertyTriplet::new(0, 0, 0), 0.9)]);
        assert!(model_from_triplet_distribution(&short).is_err());
    }

    #[test]
    fn triplet_weights_recovered_from_models() {
        let w = TripletWeights::from([
            (PropertyTriplet::new(0, 0, 1), 0.25),
            (PropertyTriplet::new(1, 1, 0), 0.75),
        ]);
        let m = model_from_triplet_distribution(&w).unwrap();
        assert_eq!(triplet_weights_of(&m), Some(w));
        let rows = [[0.5, 0.5]; 3];
        let m = LhvModel::new(vec![single("s", 1.0, ResponseTable::new(rows, rows))]).unwrap();
        assert_eq!(triplet_weights_of(&m), None);
    }

    #[test]
    fn joint_probability_examples() {
        let uniform = model_from_triplet_distribution(&uniform_triplet_weights()).unwrap();
        assert_eq!(joint_probability(&uniform, Setting::A, Setting::A, 1, 0), 0.0);
        let expected = count(|t| t.a == 0 && t.b == 0) as f64 / 8.0;
        assert_eq!(expected, 0.25);
        assert!((joint_probability(&uniform, Setting::A, Setting::B, 0, 0) - expected).abs() < 1e-15);
        let pm = point_mass(PropertyTriplet::new(0, 0, 1));
        assert_eq!(joint_probability(&pm, Setting::A, Setting::C, 0, 1), 1.0);
    }

    #[test]
    fn p_same_examples() {
        let uniform = model_from_triplet_distribution(&uniform_triplet_weights()).unwrap();
        let expected = count(|t| t.a == t.b) as f64 / 8.0;
        assert_eq!(expected, 0.5);
        assert!((lhv_p_same(&uniform, Setting::A, Setting::B) - expected).abs() < 1e-15);
        for s in Setting::ALL {
            assert!((lhv_p_same(&uniform, s, s) - 1.0).abs() < 1e-15);
        }
        let pm = point_mass(PropertyTriplet::new(0, 1, 0));
        assert_eq!(lhv_p_same(&pm, Setting::A, Setting::B), 0.0);
    }

    #[test]
    fn point_mass_bell_sums_are_one_or_three() {
        for t in enumerate_deterministic_strategies() {
            let r = lhv_bell_record(&point_mass(t));
            let expected = t.agreeing_pairs() as f64;
            assert_eq!(r.bell_sum, expected, "{t}");
            let constant = t.a == t.b && t.b == t.c;
            assert_eq!(r.bell_sum, if constant { 3.0 } else { 1.0 });
        }
    }

    #[test]
    fn own_joint_table_factorizes() {
        let m = model_from_triplet_distribution(&uniform_triplet_weights()).unwrap();
        assert!(check_bell_locality(&JointTable::from_model(&m), &m));
    }

    #[test]
    fn correlated_single_lambda_table_does_not_factorize() {
        let half = [[0.5, 0.5]; 3];
        let m = LhvModel::new(vec![single("l", 1.0, ResponseTable::new(half, half))]).unwrap();
        let mut joint = JointTable::from_model(&m);
        let aa = &mut joint.per_lambda[0][0][0];
        *aa = [[0.5, 0.0], [0.0, 0.5]];
        assert!(!check_bell_locality(&joint, &m));
    }

    #[test]
    fn deterministic_single_object_table_factorizes() {
        let t = ResponseTable::new(
            [[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]],
            [[0.0, 1.0], [0.0, 1.0], [1.0, 0.0]],
        );
        let m = LhvModel::new(vec![single("d", 1.0, t)]).unwrap();
        let joint = JointTable::from_model(&m);
        assert!(check_bell_locality(&joint, &m));
        let short = JointTable {
            per_lambda: Vec::new(),
        };
        assert!(!check_bell_locality(&short, &m));
    }

    #[test]
    fn perfect_correlation_examples() {
        let m = model_from_triplet_distribution(&uniform_triplet_weights()).unwrap();
        assert!(check_perfect_correlation(&m, Setting::B));

        let det = [[1.0, 0.0]; 3];
        let half = [[0.5, 0.5]; 3];
        let skew = LhvModel::new(vec![single("s", 1.0, ResponseTable::new(det, half))]).unwrap();
        assert!(!check_perfect_correlation(&skew, Setting::A));

        let zero_weight_discordant = LhvModel::new(vec![
            single("ok", 1.0, ResponseTable::new(det, det)),
            single("bad", 0.0, ResponseTable::new(det, half)),
        ])
        .unwrap();
        for s in Setting::ALL {
            assert!(check_perfect_correlation(&zero_weight_discordant, s));
        }
    }

    #[test]
    fn perfect_correlation_checks_both_orders() {
        // Only the (0,1) order is discordant.
        let first = [[1.0, 0.0]; 3];
        let second = [[0.0, 1.0]; 3];
        let m = LhvModel::new(vec![single("x", 1.0, ResponseTable::new(first, second))]).unwrap();
        assert!(!check_perfect_correlation(&m, Setting::A));
    }

    #[test]
    fn determinism_confirmed_for_triplet_models() {
        let m = model_from_triplet_distribution(&uniform_triplet_weights()).unwrap();
        let r = derive_determinism(&m);
        assert!(r.precondition_holds && r.confirmed && !r.degenerate);
        assert_eq!(r.witnesses.len(), 24);
        assert!(r.discordances.is_empty());
    }

    #[test]
    fn stochastic_model_reports_discordance_mass() {
        let rows = [[0.3, 0.7]; 3];
        let m = LhvModel::new(vec![single("s", 1.0, ResponseTable::new(rows, rows))]).unwrap();
        let r = derive_determinism(&m);
        assert!(!r.precondition_holds && !r.confirmed);
        assert_eq!(r.failing_settings, Setting::ALL.to_vec());
        let a = r
            .discordances
            .iter()
            .find(|d| d.setting == Setting::A)
            .unwrap();
        assert!((a.mass - 0.3 * 0.7 * 2.0).abs() < 1e-15);
    }

    #[test]
    fn empty_support_is_degenerate() {
        // Normalization rules this out through `new`.
        let degenerate = LhvModel { lambdas: Vec::new() };
        let r = derive_determinism(&degenerate);
        assert!(r.degenerate && r.confirmed && r.witnesses.is_empty());
    }

    #[test]
    fn failure_on_c_only_is_named() {
        let first = [[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]];
        let m = LhvModel::new(vec![single("c", 1.0, ResponseTable::new(first, first))]).unwrap();
        let r = derive_determinism(&m);
        assert_eq!(r.failing_settings, vec![Setting::C]);
        assert!(r.discordances.iter().all(|d| d.setting == Setting::C));
    }

    #[test]
    fn classify_examples() {
        let m = model_from_triplet_distribution(&uniform_triplet_weights()).unwrap();
        let f = classify_model(&m);
        assert!(f.counterfactual_definite && f.hidden_variable && f.bell_local);
        assert!(f.perfect_correlations);
        assert_eq!(f.einstein_local, EINSTEIN_LOCALITY_NOTE);

        let rows = [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]];
        let stochastic =
            LhvModel::new(vec![single("s", 1.0, ResponseTable::new(rows, rows))]).unwrap();
        let f = classify_model(&stochastic);
        assert!(!f.counterfactual_definite && f.hidden_variable);

        // Triplet model plus a discordant λ of weight 0.1: object 2 flips A.
        let mut lambdas = model_from_triplet_distribution(&TripletWeights::from([(
            PropertyTriplet::new(0, 0, 0),
            1.0,
        )]))
        .unwrap()
        .lambdas;
        lambdas[0].weight = 0.9;
        let mut flipped = ResponseTable::deterministic(PropertyTriplet::new(0, 0, 0));
        flipped.second[0] = [0.0, 1.0];
        lambdas.push(single("flip", 0.1, flipped));
        let m = LhvModel::new(lambdas).unwrap();
        assert!((discordance(&m, Setting::A) - 0.1).abs() < 1e-15);
        assert!(!classify_model(&m).perfect_correlations);
        assert!(classify_model(&m).counterfactual_definite);
    }

    #[test]
    fn model_validation_names_the_lambda() {
        let bad = LhvModel::new(vec![single(
            "weird",
            1.0,
            ResponseTable::new([[0.6, 0.6]; 3], [[1.0, 0.0]; 3]),
        )]);
        let msg = bad.unwrap_err().to_string();
        assert!(msg.contains("weird"), "{msg}");
    }

    fn row() -> impl Strategy<Value = OutcomeProbs> {
        prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64].prop_map(|p| [p, 1.0 - p])
    }

    fn table() -> impl Strategy<Value = ResponseTable> {
        (prop::array::uniform3(row()), prop::array::uniform3(row()))
            .prop_map(|(first, second)| ResponseTable::new(first, second))
    }

    fn model() -> impl Strategy<Value = LhvModel> {
        prop::collection::vec((0.0..1.0f64, table()), 1..6).prop_filter_map(
            "needs positive mass",
            |entries| {
                let total: f64 = entries.iter().map(|(w, _)| w).sum();
                (total > 1e-6).then(|| {
                    let lambdas = entries
                        .into_iter()
                        .enumerate()
                        .map(|(i, (w, table))| HiddenState {
                            id: format!("l{i}"),
                            weight: w / total,
                            table,
                        })
                        .collect();
                    LhvModel::new(lambdas).unwrap()
                })
            },
        )
    }

    proptest! {
        #[test]
        fn joint_probabilities_are_normalized(m in model()) {
            for s1 in Setting::ALL {
                for s2 in Setting::ALL {
                    let total: f64 = (0..2)
                        .flat_map(|x| (0..2).map(move |y| (x, y)))
                        .map(|(x, y)| joint_probability(&m, s1, s2, x, y))
                        .sum();
                    prop_assert!((total - 1.0).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn generated_tables_always_factorize(m in model()) {
            prop_assert!(check_bell_locality(&JointTable::from_model(&m), &m));
        }

        #[test]
        fn perfect_correlations_imply_determinism(m in model()) {
            let flags = classify_model(&m);
            let report = derive_determinism(&m);
            if flags.perfect_correlations {
                prop_assert!(report.confirmed);
                prop_assert!(flags.counterfactual_definite);
            }
            prop_assert!(!flags.counterfactual_definite || flags.hidden_variable);
        }
    }
}
