use serde::{Deserialize, Serialize};

/// Outcome of a single quantitative inequality or identity check.
///
/// `lhs` is the measured quantity, `rhs` the bound it is compared against;
/// `pass` is `lhs <= rhs + tolerance` for inequalities and
/// `|lhs - rhs| <= tolerance` for identities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check_id: String,
    /// Formula of the inequality being verified.
    #[serde(rename = "paper_anchor")]
    pub anchor: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    pub tolerance: f64,
}

impl CheckRecord {
    pub fn at_most(id: impl Into<String>, anchor: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self {
            check_id: id.into(),
            anchor: anchor.to_string(),
            lhs,
            rhs,
            pass: lhs <= rhs + tolerance,
            tolerance,
        }
    }

    pub fn equal(id: impl Into<String>, anchor: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self {
            check_id: id.into(),
            anchor: anchor.to_string(),
            lhs,
            rhs,
            pass: (lhs - rhs).abs() <= tolerance,
            tolerance,
        }
    }

    /// Strict lower bound: `lhs > rhs - tolerance`.
    pub fn at_least(id: impl Into<String>, anchor: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self {
            check_id: id.into(),
            anchor: anchor.to_string(),
            lhs,
            rhs,
            pass: lhs >= rhs - tolerance,
            tolerance,
        }
    }
}

/// Formulas attached to check records.
pub mod anchors {
    pub const CONTRACTION: &str = "||e^{tL}f - mu(f)||_mu <= e^{-gamma t} ||f - mu(f)||_mu";
    pub const NORM_BOUND: &str = "||L_hat_eps|| <= 2 sum_y sup_eta |r_hat_eps(y,eta)|";
    pub const DENSITY_CLOSENESS: &str = "||h_eps - 1||_mu <= eps/(gamma - eps)";
    pub const MEAN_SHIFT: &str = "|mu_eps(f) - mu(f)| <= eps/(gamma - eps) ||f - mu(f)||_mu";
    pub const EXPANSION_TERM: &str = "||x^(n)||_mu <= (eps/gamma)^n";
    pub const EXPANSION_RESIDUAL: &str = "||h^(k) - h_eps||_mu <= (eps/gamma)^(k+1) gamma/(gamma - eps)";
    pub const DYSON_TAIL: &str =
        "||S_eps(t)f - sum_{n<k} S^(n)(t)f||_mu <= (eps/gamma)^k 2gamma/(gamma-eps) ||f - mu(f)||_mu";
    pub const DYSON_TERM_DECAY: &str = "||S^(n)(t)f - mu(S^(n)(t)f)||_mu <= e^{-gamma t} (eps t)^n/n! ||f - mu(f)||_mu";
    pub const VELOCITY_TAIL: &str = "|v_exact - v_series(k)| <= sum_{n>k} (eps/gamma)^(n+1) ||j - mu(j)||_mu";
    pub const PERTURBED_CONTRACTION: &str = "||S_eps(t)f - mu(S_eps(t)f)||_mu <= e^{-(gamma-eps)t} ||f - mu(f)||_mu";
    pub const MEAN_CONVERGENCE: &str =
        "|mu(S_eps(t)f) - mu_eps(f)| <= eps/(gamma-eps) e^{-(gamma-eps)t} ||f - mu(f)||_mu";
    pub const PERTURBED_L2_DECAY: &str =
        "||S_eps(t)f - mu_eps(f)||_{mu_eps} <= (gamma/(gamma-eps))^{3/2} e^{-(gamma-eps)t/2} ||f - mu(f)||_inf";
    pub const VELOCITY_TWO_ROUTES: &str = "mu_eps(j) == lim_t mu(S_eps(t) j)";
    pub const ADJOINT: &str = "<Af, g>_mu == <f, A* g>_mu";
    pub const STATIONARITY: &str = "mu L = 0";
    pub const DIFFUSION_POSITIVE: &str = "<e, D_0 e> >= beta/2 sum_y mu(r(y,.)) (y.e)^2 > 0";
    pub const DECOUPLING: &str = "P(exists s <= 1: X_s != X^eps_s) <= c(eps)";
    pub const MC_AGREEMENT: &str = "|estimate - exact| <= 3 SE";
    pub const OCCUPATION_TV: &str = "||occupation measure - mu_eps||_TV <= tol";
    pub const DIFFUSION_VARIATIONAL: &str = "<e, D_hat e> >= 1/2 inf_f Q_e(f) - 3 SE";
}
