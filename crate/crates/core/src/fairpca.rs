//! Classical PCA, the weighted covariance whose top eigenvectors balance
//! overall error against group disparity, and the golden-section fits over
//! the trade-off weight.
//!
//! For a weight `α ∈ [0, 1]` the blended objective
//! `α·R̄_X(U) + (1−α)·(R̄_B(U) − R̄_A(U))` equals a constant minus
//! `tr(Uᵀ Ĉ U)` with
//!
//! ```text
//! Ĉ(α) = α·XᵀX/n + (1−α)·(X_BᵀX_B/n_B − X_AᵀX_A/n_A)
//! ```
//!
//! where A is the group privileged by classical PCA. Its top `r` algebraic
//! eigenvectors therefore minimize the blend for fixed `α`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::GroupedData;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{sym_eig_top_r, Matrix};
use crate::metrics::{evaluate, identify_privileged, GroupMetrics, Moments, Roles};

pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TradeoffWeight(f64);

impl TradeoffWeight {
    pub const PCA: TradeoffWeight = TradeoffWeight(1.0);

    pub fn new(alpha: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&alpha) {
            Ok(TradeoffWeight(alpha))
        } else {
            Err(Error::WeightOutOfRange(alpha))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for TradeoffWeight {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        TradeoffWeight::new(v)
    }
}

impl From<TradeoffWeight> for f64 {
    fn from(w: TradeoffWeight) -> f64 {
        w.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Stop once the bracket is no wider than this.
    pub tol: f64,
    /// Hard cap on bracket contractions.
    pub max_iter: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            tol: 1e-6,
            max_iter: 100,
        }
    }
}

impl SearchConfig {
    pub fn with_tol(tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidTolerance(tol));
        }
        Ok(SearchConfig {
            tol,
            ..Default::default()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pca,
    Ufpca,
    Cfpca,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Pca, Method::Ufpca, Method::Cfpca];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pca => "pca",
            Method::Ufpca => "ufpca",
            Method::Cfpca => "cfpca",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pca" => Ok(Method::Pca),
            "ufpca" => Ok(Method::Ufpca),
            "cfpca" => Ok(Method::Cfpca),
            other => Err(format!("unknown method `{other}` (expected pca, ufpca or cfpca)")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FairFitResult {
    pub method: Method,
    pub rank: usize,
    pub alpha: TradeoffWeight,
    /// Bracket contractions performed by the search; 0 for PCA.
    pub iterations: usize,
    /// Harmed group's classical-PCA error; set for c-FPCA only.
    pub budget: Option<f64>,
    pub privileged: String,
    pub harmed: String,
    pub metrics: GroupMetrics,
    /// `d × r` projection with orthonormal columns.
    pub u: Matrix,
}

/// Outcome of a golden-section run on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenOutcome {
    pub alpha: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Final bracket `(α₀, α₁)`.
    pub bracket: (f64, f64),
}

#[derive(Clone, Copy)]
struct Probe {
    alpha: f64,
    value: f64,
}

/// Golden-section minimization of `objective` over `[0, 1]`.
///
/// With a `feasible` predicate the lower candidate only wins when it is
/// both no worse and feasible; otherwise the lower bracket end moves up.
/// One interior point is carried into the next iteration, so each
/// contraction after the first costs a single objective evaluation.
pub fn golden_section<F>(
    mut objective: F,
    mut feasible: Option<&mut dyn FnMut(f64) -> Result<bool>>,
    cfg: &SearchConfig,
) -> Result<GoldenOutcome>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a0, mut a1) = (0.0f64, 1.0f64);
    let mut lo: Option<Probe> = None;
    let mut hi: Option<Probe> = None;
    let mut iterations = 0;
    let mut evaluations = 0;
    let mut probe = |alpha: f64| -> Result<Probe> {
        evaluations += 1;
        Ok(Probe {
            alpha,
            value: objective(alpha)?,
        })
    };

    while a1 - a0 > cfg.tol && iterations < cfg.max_iter {
        let width = a1 - a0;
        let low = match lo.take() {
            Some(p) => p,
            None => probe(a1 - width / GOLDEN_RATIO)?,
        };
        let high = match hi.take() {
            Some(p) => p,
            None => probe(a0 + width / GOLDEN_RATIO)?,
        };
        iterations += 1;

        let take_low = low.value <= high.value
            && match feasible.as_mut() {
                Some(pred) => pred(low.alpha)?,
                None => true,
            };
        if take_low {
            a1 = high.alpha;
            hi = Some(low);
        } else {
            a0 = low.alpha;
            lo = Some(high);
        }
    }

    Ok(GoldenOutcome {
        alpha: 0.5 * (a0 + a1),
        iterations,
        evaluations,
        bracket: (a0, a1),
    })
}

/// Fitting context: grouped data, its second moments, and the
/// privileged/harmed roles at a given rank.
pub struct FairPca<'a> {
    data: &'a GroupedData,
    moments: Moments,
}

impl<'a> FairPca<'a> {
    pub fn new(data: &'a GroupedData) -> Result<Self> {
        Self::with_exec(data, Exec::default())
    }

    pub fn with_exec(data: &'a GroupedData, exec: Exec) -> Result<Self> {
        Ok(FairPca {
            data,
            moments: Moments::with_exec(data, exec)?,
        })
    }

    pub fn data(&self) -> &GroupedData {
        self.data
    }

    pub fn moments(&self) -> &Moments {
        &self.moments
    }

    fn check_rank(&self, r: usize) -> Result<()> {
        let d = self.data.d();
        if r == 0 || r > d {
            return Err(Error::RankOutOfRange { rank: r, max: d });
        }
        Ok(())
    }

    /// Top-`r` eigenvectors of `XᵀX/n`.
    pub fn pca_projection(&self, r: usize) -> Result<Matrix> {
        self.check_rank(r)?;
        Ok(sym_eig_top_r(&self.moments.cov, r)?.vectors)
    }

    /// Roles and budget from the rank-`r` classical PCA.
    pub fn roles(&self, r: usize) -> Result<Roles> {
        identify_privileged(self.data, &self.pca_projection(r)?)
    }

    pub fn weighted_covariance(&self, roles: &Roles, alpha: TradeoffWeight) -> Result<Matrix> {
        let a = alpha.value();
        let diff = self
            .moments
            .cov_of(roles.harmed)
            .sub(self.moments.cov_of(roles.privileged))?;
        self.moments.cov.axpby(a, &diff, 1.0 - a)
    }

    pub fn fair_projection(&self, roles: &Roles, alpha: TradeoffWeight, r: usize) -> Result<Matrix> {
        self.check_rank(r)?;
        Ok(sym_eig_top_r(&self.weighted_covariance(roles, alpha)?, r)?.vectors)
    }

    /// Metrics of the fair projection at `alpha`, from the cached moments.
    pub fn probe(&self, roles: &Roles, alpha: TradeoffWeight, r: usize) -> Result<GroupMetrics> {
        self.moments.metrics(roles, &self.fair_projection(roles, alpha, r)?)
    }

    /// Metrics at every weight in `alphas`, evaluated through `exec`.
    pub fn alpha_profile(
        &self,
        roles: &Roles,
        r: usize,
        alphas: &[f64],
        exec: Exec,
    ) -> Result<Vec<GroupMetrics>> {
        exec.map(alphas, |&a| self.probe(roles, TradeoffWeight::new(a)?, r))
            .into_iter()
            .collect()
    }

    fn finish(
        &self,
        method: Method,
        r: usize,
        roles: &Roles,
        alpha: TradeoffWeight,
        iterations: usize,
        budget: Option<f64>,
    ) -> Result<FairFitResult> {
        let u = self.fair_projection(roles, alpha, r)?;
        let metrics = evaluate(self.data, roles, &u)?;
        Ok(FairFitResult {
            method,
            rank: r,
            alpha,
            iterations,
            budget,
            privileged: self.data.label_of(roles.privileged).to_string(),
            harmed: self.data.label_of(roles.harmed).to_string(),
            metrics,
            u,
        })
    }

    pub fn classical(&self, r: usize) -> Result<FairFitResult> {
        let roles = self.roles(r)?;
        self.finish(Method::Pca, r, &roles, TradeoffWeight::PCA, 0, None)
    }

    /// Minimizes the squared disparity over `α` with no constraint.
    pub fn unconstrained(&self, r: usize, cfg: &SearchConfig) -> Result<FairFitResult> {
        let roles = self.roles(r)?;
        let outcome = golden_section(
            |a| Ok(self.probe(&roles, TradeoffWeight::new(a)?, r)?.fairness),
            None,
            cfg,
        )?;
        self.finish(
            Method::Ufpca,
            r,
            &roles,
            TradeoffWeight::new(outcome.alpha)?,
            outcome.iterations,
            None,
        )
    }

    /// Minimizes the squared disparity over `α` while keeping both group
    /// errors within the harmed group's classical-PCA error.
    ///
    /// The search itself follows the bracket rule above. Its midpoint is
    /// not guaranteed feasible, so when it violates the budget or is less
    /// fair than PCA the fairest feasible weight seen during the search
    /// (α = 1 included) is returned instead.
    pub fn constrained(&self, r: usize, cfg: &SearchConfig) -> Result<FairFitResult> {
        let roles = self.roles(r)?;
        let budget = roles.budget;
        let cache: RefCell<HashMap<u64, GroupMetrics>> = RefCell::new(HashMap::new());
        let lookup = |a: f64| -> Result<GroupMetrics> {
            if let Some(m) = cache.borrow().get(&a.to_bits()) {
                return Ok(*m);
            }
            let m = self.probe(&roles, TradeoffWeight::new(a)?, r)?;
            cache.borrow_mut().insert(a.to_bits(), m);
            Ok(m)
        };
        let within = |m: &GroupMetrics| m.err_a <= budget && m.err_b <= budget;

        let mut predicate = |a: f64| -> Result<bool> { Ok(within(&lookup(a)?)) };
        let outcome = golden_section(|a| Ok(lookup(a)?.fairness), Some(&mut predicate), cfg)?;

        let pca = lookup(1.0)?;
        let chosen = lookup(outcome.alpha)?;
        let alpha = if within(&chosen) && chosen.fairness <= pca.fairness {
            outcome.alpha
        } else {
            let cache = cache.borrow();
            let mut candidates: Vec<(u64, &GroupMetrics)> =
                cache.iter().map(|(k, m)| (*k, m)).collect();
            // deterministic tie-break: larger alpha first
            candidates.sort_by(|x, y| f64::from_bits(y.0).total_cmp(&f64::from_bits(x.0)));
            candidates
                .into_iter()
                .filter(|(_, m)| within(m))
                .min_by(|x, y| x.1.fairness.total_cmp(&y.1.fairness))
                .map_or(1.0, |(k, _)| f64::from_bits(k))
        };
        self.finish(
            Method::Cfpca,
            r,
            &roles,
            TradeoffWeight::new(alpha)?,
            outcome.iterations,
            Some(budget),
        )
    }

    pub fn fit(&self, method: Method, r: usize, cfg: &SearchConfig) -> Result<FairFitResult> {
        match method {
            Method::Pca => self.classical(r),
            Method::Ufpca => self.unconstrained(r, cfg),
            Method::Cfpca => self.constrained(r, cfg),
        }
    }
}

pub fn classical_pca(g: &GroupedData, r: usize) -> Result<FairFitResult> {
    FairPca::new(g)?.classical(r)
}

/// `Ĉ(α)` with roles taken from the rank-`r` classical PCA.
pub fn weighted_covariance(g: &GroupedData, roles: &Roles, alpha: TradeoffWeight) -> Result<Matrix> {
    FairPca::new(g)?.weighted_covariance(roles, alpha)
}

pub fn fair_projection(
    g: &GroupedData,
    roles: &Roles,
    alpha: TradeoffWeight,
    r: usize,
) -> Result<Matrix> {
    FairPca::new(g)?.fair_projection(roles, alpha, r)
}

pub fn u_fpca(g: &GroupedData, r: usize, cfg: &SearchConfig) -> Result<FairFitResult> {
    FairPca::new(g)?.unconstrained(r, cfg)
}

pub fn c_fpca(g: &GroupedData, r: usize, cfg: &SearchConfig) -> Result<FairFitResult> {
    FairPca::new(g)?.constrained(r, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{center_and_split, Group, RawTable};
    use crate::linalg::matmul;
    use std::f64::consts::SQRT_2;

    fn grouped(rows: &[&[f64]], labels: &[&str]) -> GroupedData {
        let d = rows[0].len();
        let t = RawTable::new(
            (0..d).map(|j| format!("f{j}")).collect(),
            Matrix::from_rows(rows).unwrap(),
            labels.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap();
        center_and_split(&t).unwrap()
    }

    /// Rows `±(1,0)` in group a and `±(0,1)` in group b: zero mean, and each
    /// group's covariance is a single axis.
    fn axis_groups() -> GroupedData {
        grouped(
            &[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0], &[0.0, -1.0]],
            &["a", "a", "b", "b"],
        )
    }

    fn subspace_gap(u: &Matrix, v: &Matrix) -> f64 {
        u.projector().sub(&v.projector()).unwrap().frobenius_norm()
    }

    #[test]
    fn weight_bounds() {
        assert!(TradeoffWeight::new(0.0).is_ok());
        assert!(TradeoffWeight::new(1.0).is_ok());
        assert!(TradeoffWeight::new(1.5).is_err());
        assert!(TradeoffWeight::new(f64::NAN).is_err());
        assert!(SearchConfig::with_tol(0.0).is_err());
    }

    #[test]
    fn golden_finds_interior_minimum() {
        let out = golden_section(|a| Ok((a - 0.3) * (a - 0.3)), None, &SearchConfig::default()).unwrap();
        assert!((out.alpha - 0.3).abs() <= 1e-6);
        assert!(out.iterations <= 29);
        // one evaluation per iteration after the first pair
        assert_eq!(out.evaluations, out.iterations + 1);
    }

    #[test]
    fn golden_monotone_goes_to_zero() {
        let cfg = SearchConfig::default();
        let out = golden_section(Ok, None, &cfg).unwrap();
        assert!(out.alpha <= cfg.tol);
    }

    #[test]
    fn golden_starts_from_unit_bracket() {
        let cfg = SearchConfig { tol: 1e-6, max_iter: 0 };
        let out = golden_section(Ok, None, &cfg).unwrap();
        assert_eq!(out.bracket, (0.0, 1.0));
        assert_eq!(out.alpha, 0.5);
        assert_eq!(out.evaluations, 0);
    }

    #[test]
    fn golden_bracket_shrinks_geometrically() {
        for k in 1..=40 {
            let cfg = SearchConfig { tol: 1e-15, max_iter: k };
            let out = golden_section(|a| Ok((a - 0.7).abs()), None, &cfg).unwrap();
            let width = out.bracket.1 - out.bracket.0;
            assert!((width - GOLDEN_RATIO.powi(-(k as i32))).abs() <= 1e-12, "k={k}");
        }
    }

    #[test]
    fn golden_iteration_bound_for_default_tol() {
        let bound = (1e-6f64.ln() / (1.0 / GOLDEN_RATIO).ln()).ceil() as usize;
        assert_eq!(bound, 29);
        let out = golden_section(|a| Ok((a - 0.61).powi(2)), None, &SearchConfig::default()).unwrap();
        assert_eq!(out.iterations, bound);
    }

    #[test]
    fn infeasible_lower_candidate_pushes_bracket_up() {
        // the objective prefers 0 but nothing below 0.8 is feasible
        let mut pred = |a: f64| Ok(a >= 0.8);
        let out = golden_section(Ok, Some(&mut pred), &SearchConfig::default()).unwrap();
        assert!(out.alpha >= 0.8 - 1e-6);
    }

    #[test]
    fn golden_propagates_errors() {
        let r = golden_section(|_| Err(Error::ZeroDivisor), None, &SearchConfig::default());
        assert!(matches!(r, Err(Error::ZeroDivisor)));
    }

    #[test]
    fn classical_on_diagonal_covariance() {
        // C_X = diag(2, 1)
        let g = grouped(
            &[&[2.0, 0.0], &[-2.0, 0.0], &[0.0, SQRT_2], &[0.0, -SQRT_2]],
            &["a", "a", "b", "b"],
        );
        let fit = classical_pca(&g, 1).unwrap();
        assert_eq!(fit.u.column(0), vec![1.0, 0.0]);
        assert!((fit.metrics.overall_err - 1.0).abs() < 1e-12);
        assert_eq!(fit.alpha.value(), 1.0);
        let full = classical_pca(&g, 2).unwrap();
        assert!(full.metrics.overall_err.abs() < 1e-12);
        assert!(matches!(classical_pca(&g, 3), Err(Error::RankOutOfRange { .. })));
    }

    #[test]
    fn classical_on_diagonal_direction() {
        let s = 3.0;
        let g = grouped(&[&[s, s], &[-s, -s], &[s, s], &[-s, -s]], &["a", "b", "b", "a"]);
        let fit = classical_pca(&g, 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = fit.u.column(0);
        assert!((u[0] - h).abs() < 1e-12 && (u[1] - h).abs() < 1e-12);
    }

    #[test]
    fn weighted_covariance_uses_harmed_minus_privileged() {
        let g = grouped(&[&[1.0, 0.0], &[0.0, 1.0]], &["a", "b"]);
        // not centered at zero here, so build the moments directly
        let fp = FairPca::new(&g).unwrap();
        let roles = Roles {
            privileged: Group::First,
            harmed: Group::Second,
            budget: 0.0,
        };
        let c0 = fp.weighted_covariance(&roles, TradeoffWeight::new(0.0).unwrap()).unwrap();
        let expected = fp.moments().cov_second.sub(&fp.moments().cov_first).unwrap();
        assert_eq!(c0, expected);
        let c1 = fp.weighted_covariance(&roles, TradeoffWeight::PCA).unwrap();
        assert_eq!(c1, fp.moments().cov);
    }

    #[test]
    fn alpha_zero_inverts_privilege() {
        let g = axis_groups();
        let fp = FairPca::new(&g).unwrap();
        let roles = Roles {
            privileged: Group::First,
            harmed: Group::Second,
            budget: 0.0,
        };
        let c0 = fp.weighted_covariance(&roles, TradeoffWeight::new(0.0).unwrap()).unwrap();
        assert_eq!(c0, Matrix::diag(&[-1.0, 1.0]).unwrap());
        let u = fp.fair_projection(&roles, TradeoffWeight::new(0.0).unwrap(), 1).unwrap();
        assert_eq!(u.column(0), vec![0.0, 1.0]);
        let m = evaluate(&g, &roles, &u).unwrap();
        assert_eq!((m.err_a, m.err_b), (1.0, 0.0));
    }

    #[test]
    fn identical_groups_cancel() {
        let rows: &[&[f64]] = &[&[1.0, 2.0], &[-1.0, 0.5], &[0.0, -2.5], &[1.0, 2.0], &[-1.0, 0.5], &[0.0, -2.5]];
        let g = grouped(rows, &["a", "a", "a", "b", "b", "b"]);
        let fp = FairPca::new(&g).unwrap();
        let roles = fp.roles(1).unwrap();
        let half = TradeoffWeight::new(0.5).unwrap();
        let c = fp.weighted_covariance(&roles, half).unwrap();
        assert!(c.max_abs_diff(&fp.moments().cov.scale(0.5)).unwrap() < 1e-15);
        let pca = fp.classical(1).unwrap();
        for a in [0.1, 0.5, 0.9] {
            let u = fp.fair_projection(&roles, TradeoffWeight::new(a).unwrap(), 1).unwrap();
            assert!(subspace_gap(&u, &pca.u) < 1e-8);
        }
        let uf = fp.unconstrained(1, &SearchConfig::default()).unwrap();
        assert!(uf.metrics.fairness < 1e-20);
        let cf = fp.constrained(1, &SearchConfig::default()).unwrap();
        assert!(cf.metrics.fairness < 1e-20);
        assert!(subspace_gap(&cf.u, &pca.u) < 1e-8);
    }

    #[test]
    fn alpha_one_matches_pca() {
        let g = grouped(
            &[&[3.0, 1.0, 0.2], &[-2.0, 0.5, 1.0], &[0.1, -1.0, 2.0], &[1.0, 1.0, -3.0], &[0.3, -0.2, 0.1]],
            &["a", "b", "a", "b", "b"],
        );
        let fp = FairPca::new(&g).unwrap();
        for r in 1..=3 {
            let roles = fp.roles(r).unwrap();
            let u1 = fp.fair_projection(&roles, TradeoffWeight::PCA, r).unwrap();
            let pca = fp.classical(r).unwrap();
            assert!(subspace_gap(&u1, &pca.u) <= 1e-8);
        }
    }

    #[test]
    fn fits_satisfy_result_invariants() {
        let g = grouped(
            &[&[3.0, 1.0], &[-3.0, -0.8], &[2.5, 0.2], &[0.4, 1.5], &[-0.2, -1.7], &[0.1, 1.0], &[-2.0, -0.3]],
            &["a", "a", "a", "b", "b", "b", "a"],
        );
        let fp = FairPca::new(&g).unwrap();
        let cfg = SearchConfig::default();
        let pca = fp.classical(1).unwrap();
        for fit in [fp.unconstrained(1, &cfg).unwrap(), fp.constrained(1, &cfg).unwrap(), pca.clone()] {
            assert!(fit.u.orthonormality_deviation() <= 1e-9);
            let u_t_u = matmul(&fit.u.transpose(), &fit.u).unwrap();
            assert!(u_t_u.max_abs_diff(&Matrix::identity(1)).unwrap() <= 1e-9);
            assert!(fit.metrics.fairness <= pca.metrics.fairness + 1e-12);
            if let Some(budget) = fit.budget {
                assert!(fit.metrics.err_a <= budget + 1e-9);
                assert!(fit.metrics.err_b <= budget + 1e-9);
            }
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("fpca".parse::<Method>().is_err());
    }
}
