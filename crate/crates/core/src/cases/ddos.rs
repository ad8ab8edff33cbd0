use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CasesError;
use crate::graph::{EdgeLabel, SecEdge, SecModel, Vertex};
use crate::numfmt::sig;
use crate::scenario::PayoffPair;
use crate::solver::{bay_exp_with, solve_nes, Beliefs, SolverConfig};

/// The single state of the flooding game.
pub const DDOS_STATE: &str = "s1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UserType {
    Regular,
    Zombie,
}

impl UserType {
    pub const ALL: [UserType; 2] = [UserType::Regular, UserType::Zombie];

    pub fn name(self) -> &'static str {
        match self {
            UserType::Regular => "Regular",
            UserType::Zombie => "Zombie",
        }
    }
}

impl fmt::Display for UserType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Firewall midpoints: either an explicit list or `min, min+step, …` up to `max`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpGrid {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub step: Option<f64>,
    pub values: Option<Vec<f64>>,
}

/// A point the summary compares the sweep against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferencePoint {
    pub m_u: u64,
    pub r_u: f64,
    pub mp: f64,
    pub drop: Option<f64>,
    pub payoff_user: Option<f64>,
    pub f_z: Option<f64>,
    pub f_l: Option<f64>,
    pub f_c: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    pub regular: Option<ReferencePoint>,
    pub zombie: Option<ReferencePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DdosParams {
    /// Link bandwidth `B`.
    pub bandwidth: f64,
    /// Number `n` of legitimate flows already present.
    pub legit_flows: f64,
    /// Rate `r_l` of each legitimate flow.
    pub legit_rate: f64,
    /// Steepness `ρ` of the dropping sigmoid.
    pub rho: f64,
    /// Cost `ω_c` per bot.
    pub omega_c: f64,
    /// `m_u·r_u` for the regular user.
    pub budget_regular: u64,
    /// `m_u·r_u` for the zombie user.
    pub budget_zombie: u64,
    /// Explicit `(m_u, r_u)` grids replacing the divisor pairs of the budget.
    pub pairs_regular: Option<Vec<(u64, f64)>>,
    pub pairs_zombie: Option<Vec<(u64, f64)>>,
    pub mp: MpGrid,
    pub reference: Option<Reference>,
}

impl DdosParams {
    pub fn from_toml(text: &str) -> Result<Self, CasesError> {
        let p: DdosParams = toml::from_str(text).map_err(|e| CasesError::Params(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self, CasesError> {
        let text = std::fs::read_to_string(path).map_err(|e| CasesError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CasesError> {
        let positive =
            [("bandwidth", self.bandwidth), ("legit_rate", self.legit_rate), ("legit_flows", self.legit_flows)];
        for (name, x) in positive {
            if !(x > 0.0 && x.is_finite()) {
                return Err(CasesError::Params(format!("{name} must be positive, got {x}")));
            }
        }
        if !self.rho.is_finite() || !self.omega_c.is_finite() {
            return Err(CasesError::Params("rho and omega_c must be finite".into()));
        }
        Ok(())
    }

    /// The `(m_u, r_u)` grid of a type.
    pub fn pairs(&self, ty: UserType) -> Vec<(u64, f64)> {
        let (explicit, budget) = match ty {
            UserType::Regular => (&self.pairs_regular, self.budget_regular),
            UserType::Zombie => (&self.pairs_zombie, self.budget_zombie),
        };
        explicit.clone().unwrap_or_else(|| divisor_pairs(budget).into_iter().map(|(m, r)| (m, r as f64)).collect())
    }

    /// Firewall midpoints, each rounded to 1e-9 so that `min + i·step` prints
    /// as the decimal it stands for.
    pub fn mp_values(&self) -> Result<Vec<f64>, CasesError> {
        let g = &self.mp;
        let values = match (&g.values, g.min, g.max, g.step) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(lo), Some(hi), Some(step)) => {
                if step.is_nan() || step <= 0.0 || hi < lo {
                    return Err(CasesError::Params(format!("bad Mp range {lo}..{hi} step {step}")));
                }
                let n = ((hi - lo) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9).collect()
            }
            _ => return Err(CasesError::Params("mp needs either `values` or `min`, `max` and `step`".into())),
        };
        if values.is_empty() {
            return Err(CasesError::EmptyGrid("Mp"));
        }
        Ok(values)
    }
}

/// `(m, budget/m)` for every divisor `m` of `budget`, increasing in `m`.
pub fn divisor_pairs(budget: u64) -> Vec<(u64, u64)> {
    (1..=budget).filter(|m| budget.is_multiple_of(*m)).map(|m| (m, budget / m)).collect()
}

/// `F(x) = 1/(1 + e^{−ρ(x−Mp)/B})`, the fraction of a flow of rate `x` dropped.
pub fn drop_fraction(p: &DdosParams, x: f64, mp: f64) -> f64 {
    1.0 / (1.0 + (-p.rho * (x - mp) / p.bandwidth).exp())
}

/// Every quantity of one interaction `((m_u, r_u), Mp)` for one type.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DdosPoint {
    #[serde(rename = "type")]
    pub ty: UserType,
    pub m_u: u64,
    pub r_u: f64,
    pub mp: f64,
    /// `F(r_u)`.
    pub drop: f64,
    pub f_z: f64,
    pub f_l: f64,
    pub f_c: f64,
    pub payoff_user: f64,
}

/// Evaluates the flow model. `f_z`, `f_l` and `f_c` are computed for both
/// types; only the zombie payoff uses them. `f_l` is not clamped.
pub fn evaluate(p: &DdosParams, ty: UserType, m_u: u64, r_u: f64, mp: f64) -> DdosPoint {
    let drop = drop_fraction(p, r_u, mp);
    let ru = r_u * (1.0 - drop);
    let rl = p.legit_rate * (1.0 - drop_fraction(p, p.legit_rate, mp));
    let user = m_u as f64 * ru;
    let legit = p.legit_flows * rl;
    let total = user + legit;
    let f_z = p.bandwidth * user / total;
    let f_l = (1.0 - p.bandwidth / total) * legit;
    let f_c = m_u as f64 * p.omega_c;
    let payoff_user = match ty {
        UserType::Regular => total,
        UserType::Zombie => f_z + f_l - f_c,
    };
    DdosPoint { ty, m_u, r_u, mp, drop, f_z, f_l, f_c, payoff_user }
}

pub fn user_action(m_u: u64, r_u: f64) -> String {
    format!("{m_u}x{r_u}")
}

pub fn defender_action(mp: f64) -> String {
    format!("{mp}")
}

/// Type knowledge of the defender: equal priors, uniform likelihood over each
/// type's own grid, and a defender payoff equal to minus the user's.
pub struct DdosBeliefs<'a> {
    params: &'a DdosParams,
    actions: HashMap<UserType, HashSet<String>>,
}

impl<'a> DdosBeliefs<'a> {
    pub fn new(params: &'a DdosParams) -> Self {
        let actions = UserType::ALL
            .iter()
            .map(|&t| (t, params.pairs(t).into_iter().map(|(m, r)| user_action(m, r)).collect()))
            .collect();
        DdosBeliefs { params, actions }
    }

    fn ty(name: &str) -> Option<UserType> {
        UserType::ALL.into_iter().find(|t| t.name() == name)
    }
}

impl Beliefs for DdosBeliefs<'_> {
    fn types(&self) -> Vec<String> {
        UserType::ALL.iter().map(|t| t.name().to_string()).collect()
    }

    fn prior(&self, _t: &str) -> f64 {
        0.5
    }

    fn likelihood(&self, _s: &str, t: &str, u: &str) -> f64 {
        match Self::ty(t).map(|t| &self.actions[&t]) {
            Some(set) if set.contains(u) => 1.0 / set.len() as f64,
            _ => 0.0,
        }
    }

    fn defender_payoff(&self, _s: &str, t: &str, u: &str, v: &str) -> f64 {
        let parsed = Self::ty(t).zip(u.split_once('x')).and_then(|(ty, (m, r))| {
            Some((ty, m.parse::<u64>().ok()?, r.parse::<f64>().ok()?, v.parse::<f64>().ok()?))
        });
        match parsed {
            Some((ty, m, r, mp)) if self.actions[&ty].contains(u) => -evaluate(self.params, ty, m, r, mp).payoff_user,
            _ => 0.0,
        }
    }
}

/// Grid points in row order: types, then `(m_u, r_u)`, then Mp.
pub fn grid_points(p: &DdosParams) -> Result<Vec<DdosPoint>, CasesError> {
    let mps = p.mp_values()?;
    let mut points = Vec::new();
    for ty in UserType::ALL {
        let pairs = p.pairs(ty);
        if pairs.is_empty() {
            return Err(CasesError::EmptyGrid(ty.name()));
        }
        let rows: Vec<DdosPoint> =
            pairs.par_iter().flat_map_iter(|&(m, r)| mps.iter().map(move |&mp| evaluate(p, ty, m, r, mp))).collect();
        points.extend(rows);
    }
    Ok(points)
}

/// One vertex with a self-loop per grid point; edge `k` is grid point `k`.
pub fn ddos_model(points: &[DdosPoint]) -> SecModel {
    SecModel {
        vertices: vec![Vertex::single(DDOS_STATE)],
        types: UserType::ALL.iter().map(|t| t.name().to_string()).collect(),
        edges: points
            .iter()
            .map(|pt| SecEdge {
                source: 0,
                target: 0,
                label: EdgeLabel {
                    ty: pt.ty.name().into(),
                    type_prob: 0.5,
                    user: user_action(pt.m_u, pt.r_u),
                    defender: defender_action(pt.mp),
                    tran_p: 1.0,
                    weight: PayoffPair::new(pt.payoff_user, -pt.payoff_user),
                },
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(flatten)]
    pub point: DdosPoint,
    /// Posterior-expected defender weight.
    pub payoff_defender: f64,
    pub is_equilibrium: bool,
}

/// Per-type findings of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypeSummary {
    #[serde(rename = "type")]
    pub ty: UserType,
    /// Rows of the equilibrium points.
    pub equilibria: Vec<usize>,
    /// The grid point with the highest user payoff.
    pub user_best: usize,
    /// The defender's best Mp against the user's best `(m_u, r_u)`.
    pub defender_reply: usize,
    /// The reference point re-evaluated on the same model, if one is given.
    pub reference: Option<DdosPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DdosSweep {
    pub rho: f64,
    pub beta: f64,
    pub rows: Vec<SweepRow>,
    pub summaries: Vec<TypeSummary>,
    pub iterations: usize,
}

/// Builds the single-state game over the whole grid, applies the Bayesian
/// update and marks every grid point chosen in some equilibrium of its type.
pub fn ddos_sweep(p: &DdosParams, cfg: &SolverConfig) -> Result<DdosSweep, CasesError> {
    let points = grid_points(p)?;
    let model = bay_exp_with(&ddos_model(&points), &DdosBeliefs::new(p))?;
    let nes = solve_nes(&model, cfg)?;
    let mut is_eq = vec![false; points.len()];
    for choices in &nes.by_type {
        for c in choices {
            if let Some(e) = c[0] {
                is_eq[e] = true;
            }
        }
    }
    let rows: Vec<SweepRow> = points
        .iter()
        .zip(&model.edges)
        .zip(&is_eq)
        .map(|((&point, e), &is_equilibrium)| SweepRow {
            point,
            payoff_defender: e.label.weight.defender,
            is_equilibrium,
        })
        .collect();

    let summaries = UserType::ALL
        .iter()
        .map(|&ty| {
            let mine: Vec<usize> = (0..rows.len()).filter(|&k| rows[k].point.ty == ty).collect();
            let by = |f: &dyn Fn(&SweepRow) -> f64, ks: &[usize]| {
                ks.iter().copied().fold(ks[0], |b, k| if f(&rows[k]) > f(&rows[b]) { k } else { b })
            };
            let user_best = by(&|r| r.point.payoff_user, &mine);
            let best = rows[user_best].point;
            let same_pair: Vec<usize> = mine
                .iter()
                .copied()
                .filter(|&k| rows[k].point.m_u == best.m_u && rows[k].point.r_u == best.r_u)
                .collect();
            let defender_reply = by(&|r| r.payoff_defender, &same_pair);
            let reference = p
                .reference
                .as_ref()
                .and_then(|r| match ty {
                    UserType::Regular => r.regular.as_ref(),
                    UserType::Zombie => r.zombie.as_ref(),
                })
                .map(|r| evaluate(p, ty, r.m_u, r.r_u, r.mp));
            TypeSummary {
                ty,
                equilibria: mine.iter().copied().filter(|&k| rows[k].is_equilibrium).collect(),
                user_best,
                defender_reply,
                reference,
            }
        })
        .collect();
    Ok(DdosSweep { rho: p.rho, beta: cfg.beta, rows, summaries, iterations: nes.iterations })
}

impl DdosSweep {
    pub const CSV_HEADER: &'static str = "type,m_u,r_u,Mp,F,f_z,f_l,f_c,payoff_user,payoff_defender,is_equilibrium";

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.rows.len() * 96);
        s.push_str(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let p = &r.point;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                p.ty,
                p.m_u,
                sig(p.r_u),
                sig(p.mp),
                sig(p.drop),
                sig(p.f_z),
                sig(p.f_l),
                sig(p.f_c),
                sig(p.payoff_user),
                sig(r.payoff_defender),
                u8::from(r.is_equilibrium)
            );
        }
        s
    }

    /// Human-readable findings, one block per type.
    pub fn summary(&self, p: &DdosParams) -> String {
        let point = |x: &DdosPoint| {
            format!(
                "(m_u={}, r_u={}, Mp={}) F={:.4} f_z={:.2} f_l={:.2} f_c={:.2} payoff={:.2}",
                x.m_u,
                sig(x.r_u),
                sig(x.mp),
                x.drop,
                x.f_z,
                x.f_l,
                x.f_c,
                x.payoff_user
            )
        };
        let mut s = format!("rho={} beta={}\n", sig(self.rho), sig(self.beta));
        for t in &self.summaries {
            let _ = writeln!(s, "[{}]", t.ty);
            if t.equilibria.is_empty() {
                let _ = writeln!(s, "  no equilibrium on the grid");
            }
            for &k in &t.equilibria {
                let _ = writeln!(s, "  equilibrium {}", point(&self.rows[k].point));
            }
            let _ = writeln!(s, "  user best point       {}", point(&self.rows[t.user_best].point));
            let _ = writeln!(s, "  defender reply to it  {}", point(&self.rows[t.defender_reply].point));
            if let Some(r) = &t.reference {
                let _ = writeln!(s, "  reference point       {}", point(r));
                let listed = self.rows.iter().position(|row| {
                    row.point.ty == t.ty && row.point.m_u == r.m_u && row.point.r_u == r.r_u && row.point.mp == r.mp
                });
                let status = match listed {
                    None => "not on the grid",
                    Some(k) if self.rows[k].is_equilibrium => "an equilibrium of the sweep",
                    Some(_) => "on the grid but not an equilibrium; results differ from the reference",
                };
                let _ = writeln!(s, "  reference is {status}");
            }
        }
        if p.rho < 0.0 {
            s.push_str(
                "note: with negative rho the drop fraction falls as the rate grows; reference values assume rho > 0\n",
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> DdosParams {
        DdosParams {
            bandwidth: 2000.0,
            legit_flows: 20.0,
            legit_rate: 60.0,
            rho: 20.0,
            omega_c: 10.0,
            budget_regular: 800,
            budget_zombie: 5000,
            pairs_regular: None,
            pairs_zombie: None,
            mp: MpGrid { min: Some(0.0), max: Some(600.0), step: Some(0.1), values: None },
            reference: None,
        }
    }

    #[test]
    fn sigmoid_hand_values() {
        let p = params();
        // 1/(1+e^{1.288})
        assert!((drop_fraction(&p, 100.0, 228.8) - 1.0 / (1.0 + 1.288f64.exp())).abs() < 1e-15);
        assert!((drop_fraction(&p, 100.0, 100.0) - 0.5).abs() < 1e-15);
        assert!(drop_fraction(&p, 100.0, 1e6) < 1e-12);
    }

    #[test]
    fn regular_payoff_by_hand() {
        let p = params();
        let x = evaluate(&p, UserType::Regular, 8, 100.0, 228.8);
        let f100 = 1.0 / (1.0 + 1.288f64.exp());
        let f60 = 1.0 / (1.0 + 1.688f64.exp());
        let want = 8.0 * 100.0 * (1.0 - f100) + 20.0 * 60.0 * (1.0 - f60);
        assert!((x.payoff_user - want).abs() < 1e-9);
        assert_eq!(x.f_c, 80.0);
    }

    #[test]
    fn zombie_terms_by_hand() {
        let p = params();
        let x = evaluate(&p, UserType::Zombie, 20, 250.0, 322.0);
        let f250 = 1.0 / (1.0 + 0.72f64.exp());
        let f60 = 1.0 / (1.0 + 2.62f64.exp());
        let user = 20.0 * 250.0 * (1.0 - f250);
        let legit = 20.0 * 60.0 * (1.0 - f60);
        assert!((x.f_z - 2000.0 * user / (user + legit)).abs() < 1e-9);
        assert!((x.f_l - (1.0 - 2000.0 / (user + legit)) * legit).abs() < 1e-9);
        assert_eq!(x.f_c, 200.0);
        assert!((x.payoff_user - (x.f_z + x.f_l - 200.0)).abs() < 1e-9);
    }

    #[test]
    fn divisors() {
        assert_eq!(divisor_pairs(12), vec![(1, 12), (2, 6), (3, 4), (4, 3), (6, 2), (12, 1)]);
        assert!(divisor_pairs(800).contains(&(8, 100)));
        assert!(divisor_pairs(5000).contains(&(20, 250)));
    }

    #[test]
    fn grid_prints_as_decimals() {
        let v = params().mp_values().unwrap();
        assert_eq!(v.len(), 6001);
        assert_eq!(defender_action(v[2288]), "228.8");
        assert_eq!(v[6000], 600.0);
    }

    #[test]
    fn empty_grid_is_an_error() {
        let mut p = params();
        p.pairs_regular = Some(vec![]);
        assert_eq!(grid_points(&p).unwrap_err(), CasesError::EmptyGrid("Regular"));
        let mut p = params();
        p.mp = MpGrid { values: Some(vec![]), ..MpGrid::default() };
        assert_eq!(grid_points(&p).unwrap_err(), CasesError::EmptyGrid("Mp"));
    }

    #[test]
    fn single_point_grids_return_that_point() {
        let mut p = params();
        p.pairs_regular = Some(vec![(8, 100.0)]);
        p.pairs_zombie = Some(vec![(20, 250.0)]);
        p.mp = MpGrid { values: Some(vec![228.8]), ..MpGrid::default() };
        let s = ddos_sweep(&p, &SolverConfig::default()).unwrap();
        assert_eq!(s.rows.len(), 2);
        assert!(s.rows.iter().all(|r| r.is_equilibrium));
        assert!((s.rows[0].payoff_defender + s.rows[0].point.payoff_user).abs() < 1e-9);
    }
}
