//! Stochastic input layer: the 1D distributions of the clinical inputs
//! (blood pressures, IOP, RLTp), lognormal moment matching, the MAP
//! relation and its SP/DP reconstruction, seeded sampling and quantiles.

use crate::error::{CoreError, Result};
use crate::normal::{inv_phi, phi};
use crate::rng::open_unit;
use rand_core::RngCore;
use serde::{Deserialize, Serialize};

/// A one-dimensional input distribution (pressures in mmHg).
///
/// `Uniform` is not used for clinical inputs; it exists for the analytic
/// benchmark evaluators of the sensitivity layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution1D {
    Normal { mean: f64, sd: f64 },
    LogNormal { mu_ln: f64, sigma_ln: f64 },
    TruncatedNormal { mean: f64, sd: f64, lo: f64, hi: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Distribution1D {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Distribution1D::Normal { mean, sd } => {
                if !mean.is_finite() || !(sd > 0.0) {
                    return Err(CoreError::InvalidParameter(format!(
                        "normal distribution needs finite mean and sd > 0 (got mean={mean}, sd={sd})"
                    )));
                }
            }
            Distribution1D::LogNormal { mu_ln, sigma_ln } => {
                if !mu_ln.is_finite() || !(sigma_ln > 0.0) {
                    return Err(CoreError::InvalidParameter(format!(
                        "lognormal distribution needs finite mu_ln and sigma_ln > 0 (got mu_ln={mu_ln}, sigma_ln={sigma_ln})"
                    )));
                }
            }
            Distribution1D::TruncatedNormal { mean, sd, lo, hi } => {
                if !mean.is_finite() || !(sd > 0.0) || !(lo < hi) {
                    return Err(CoreError::InvalidParameter(format!(
                        "truncated normal needs sd > 0 and lo < hi (got mean={mean}, sd={sd}, lo={lo}, hi={hi})"
                    )));
                }
            }
            Distribution1D::Uniform { lo, hi } => {
                if !(lo < hi) {
                    return Err(CoreError::InvalidParameter(format!(
                        "uniform distribution needs lo < hi (got lo={lo}, hi={hi})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Analytic mean.
    pub fn mean(&self) -> f64 {
        match *self {
            Distribution1D::Normal { mean, .. } => mean,
            Distribution1D::LogNormal { mu_ln, sigma_ln } => {
                (mu_ln + 0.5 * sigma_ln * sigma_ln).exp()
            }
            Distribution1D::TruncatedNormal { mean, sd, lo, hi } => {
                let (alpha, beta) = ((lo - mean) / sd, (hi - mean) / sd);
                let z = phi(beta) - phi(alpha);
                mean + sd * (crate::normal::phi_pdf(alpha) - crate::normal::phi_pdf(beta)) / z
            }
            Distribution1D::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    /// Analytic standard deviation.
    pub fn sd(&self) -> f64 {
        match *self {
            Distribution1D::Normal { sd, .. } => sd,
            Distribution1D::LogNormal { mu_ln, sigma_ln } => {
                let s2 = sigma_ln * sigma_ln;
                // exp_m1 keeps relative accuracy for near-degenerate sigma.
                let var = s2.exp_m1() * (2.0 * mu_ln + s2).exp();
                var.sqrt()
            }
            Distribution1D::TruncatedNormal { mean, sd, lo, hi } => {
                let (alpha, beta) = ((lo - mean) / sd, (hi - mean) / sd);
                let z = phi(beta) - phi(alpha);
                let (pa, pb) = (crate::normal::phi_pdf(alpha), crate::normal::phi_pdf(beta));
                let m1 = (pa - pb) / z;
                let var = sd
                    * sd
                    * (1.0 + (alpha * pa - beta * pb) / z - m1 * m1);
                var.sqrt()
            }
            Distribution1D::Uniform { lo, hi } => (hi - lo) / 12f64.sqrt(),
        }
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Distribution1D::Normal { mean, sd } => phi((x - mean) / sd),
            Distribution1D::LogNormal { mu_ln, sigma_ln } => {
                if x <= 0.0 {
                    0.0
                } else {
                    phi((x.ln() - mu_ln) / sigma_ln)
                }
            }
            Distribution1D::TruncatedNormal { mean, sd, lo, hi } => {
                if x <= lo {
                    0.0
                } else if x >= hi {
                    1.0
                } else {
                    let (alpha, beta) = ((lo - mean) / sd, (hi - mean) / sd);
                    let z = phi(beta) - phi(alpha);
                    (phi((x - mean) / sd) - phi(alpha)) / z
                }
            }
            Distribution1D::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    /// Inverse CDF for `u` strictly inside (0, 1).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(CoreError::InvalidParameter(format!(
                "quantile argument must lie in the open interval (0,1), got {u}"
            )));
        }
        Ok(match *self {
            Distribution1D::Normal { mean, sd } => mean + sd * inv_phi(u),
            Distribution1D::LogNormal { mu_ln, sigma_ln } => (mu_ln + sigma_ln * inv_phi(u)).exp(),
            Distribution1D::TruncatedNormal { mean, sd, lo, hi } => {
                let (alpha, beta) = ((lo - mean) / sd, (hi - mean) / sd);
                let (pa, pb) = (phi(alpha), phi(beta));
                let p = pa + u * (pb - pa);
                // Clamp away from {0,1} so extreme truncations stay finite.
                let p = p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
                (mean + sd * inv_phi(p)).clamp(lo, hi)
            }
            Distribution1D::Uniform { lo, hi } => lo + u * (hi - lo),
        })
    }

    /// One draw via inverse-transform sampling (a single uniform per draw,
    /// so a (stream, sample) RNG cell is never exhausted).
    pub fn sample_with(&self, rng: &mut impl RngCore) -> f64 {
        let u = open_unit(rng);
        self.quantile(u).expect("open_unit returns u in (0,1)")
    }

    /// `n` i.i.d. draws from one RNG (for tests and one-off use; the
    /// engines use per-sample cells instead).
    pub fn sample_n(&self, rng: &mut impl RngCore, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.sample_with(rng)).collect()
    }
}

/// Lognormal matched to a given mean and standard deviation:
/// `mu_ln = ln(mean / sqrt(1 + sd^2/mean^2))`, `sigma_ln^2 = ln(1 + sd^2/mean^2)`.
pub fn lognormal_from_moments(mean: f64, sd: f64) -> Result<Distribution1D> {
    if !(mean > 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "lognormal moment matching needs mean > 0, got {mean}"
        )));
    }
    if !(sd > 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "lognormal moment matching needs sd > 0, got {sd}"
        )));
    }
    // sigma_ln^2 = ln(1 + sd^2/mean^2) via ln_1p so the round trip stays
    // exact to machine precision even for sd << mean.
    let q = (sd * sd) / (mean * mean);
    let sigma2 = q.ln_1p();
    Ok(Distribution1D::LogNormal {
        mu_ln: mean.ln() - 0.5 * sigma2,
        sigma_ln: sigma2.sqrt(),
    })
}

/// Mean arterial pressure from systolic/diastolic pressure:
/// `MAP = SP/3 + 2 DP/3`.
pub fn map_from_spdp(sp: f64, dp: f64) -> Result<f64> {
    if !(sp > dp) {
        return Err(CoreError::UnphysiologicalPulse(format!(
            "systolic pressure must exceed diastolic pressure (sp={sp}, dp={dp})"
        )));
    }
    Ok(sp / 3.0 + 2.0 * dp / 3.0)
}

/// Linear SP-on-MAP regression used to reconstruct (SP, DP) from MAP.
///
/// The default coefficients are anchored so that MAP = 93 mmHg maps back to
/// the population means SP = 124.1, DP = 77.5 mmHg (slope = ratio of the SP
/// and MAP standard deviations, 11.1 / 7.6).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpdpModel {
    pub a: f64,
    pub b: f64,
}

impl Default for SpdpModel {
    fn default() -> Self {
        SpdpModel { a: 1.461, b: -11.8 }
    }
}

impl SpdpModel {
    /// Reconstructs (SP, DP) such that the MAP relation holds exactly:
    /// `sp = a * map + b`, `dp = (3 * map - sp) / 2`.
    pub fn spdp_from_map(&self, map: f64) -> Result<(f64, f64)> {
        let sp = self.a * map + self.b;
        let dp = (3.0 * map - sp) / 2.0;
        if !(sp > dp) {
            return Err(CoreError::UnphysiologicalPulse(format!(
                "reconstruction from MAP {map} gave sp={sp} <= dp={dp}"
            )));
        }
        Ok((sp, dp))
    }
}

/// Serializable distribution description used in configuration files.
/// `lognormal_moments` is the moment-matched form of [`lognormal_from_moments`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Normal { mean: f64, sd: f64 },
    LogNormal { mu_ln: f64, sigma_ln: f64 },
    LognormalMoments { mean: f64, sd: f64 },
    TruncatedNormal { mean: f64, sd: f64, lo: f64, hi: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl DistributionSpec {
    pub fn to_distribution(self) -> Result<Distribution1D> {
        let dist = match self {
            DistributionSpec::Normal { mean, sd } => Distribution1D::Normal { mean, sd },
            DistributionSpec::LogNormal { mu_ln, sigma_ln } => {
                Distribution1D::LogNormal { mu_ln, sigma_ln }
            }
            DistributionSpec::LognormalMoments { mean, sd } => lognormal_from_moments(mean, sd)?,
            DistributionSpec::TruncatedNormal { mean, sd, lo, hi } => {
                Distribution1D::TruncatedNormal { mean, sd, lo, hi }
            }
            DistributionSpec::Uniform { lo, hi } => Distribution1D::Uniform { lo, hi },
        };
        dist.validate()?;
        Ok(dist)
    }
}

/// Which parametrisation of the blood-pressure input is in use.
///
/// Sensitivity analysis requires mutually independent inputs, hence the MAP
/// parametrisation (MAP, IOP, RLTp); uncertainty propagation uses SP/DP
/// directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    Map,
    SpDp,
}

/// The named input distributions in canonical order for the active mode.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistributionSet {
    pub mode: InputMode,
    entries: Vec<(String, Distribution1D)>,
}

impl InputDistributionSet {
    pub const MAP_INPUTS: [&'static str; 3] = ["MAP", "IOP", "RLTp"];
    pub const SPDP_INPUTS: [&'static str; 4] = ["SP", "DP", "IOP", "RLTp"];

    pub fn new(mode: InputMode, entries: Vec<(String, Distribution1D)>) -> Result<Self> {
        let expected: &[&str] = match mode {
            InputMode::Map => &Self::MAP_INPUTS,
            InputMode::SpDp => &Self::SPDP_INPUTS,
        };
        if entries.len() != expected.len()
            || entries.iter().zip(expected).any(|((name, _), want)| name != want)
        {
            return Err(CoreError::InvalidConfig(format!(
                "input set for {mode:?} mode must contain exactly {:?} (in order), got {:?}",
                expected,
                entries.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>()
            )));
        }
        for (name, dist) in &entries {
            dist.validate().map_err(|e| {
                CoreError::InvalidConfig(format!("input {name}: {e}"))
            })?;
        }
        Ok(InputDistributionSet { mode, entries })
    }

    /// Default MAP-mode set: MAP ~ N(93, 7.6), IOP lognormal matched to
    /// mean 14.7 / sd 2.8, RLTp ~ N(9.5, 2.2).
    pub fn default_map_mode() -> Self {
        let iop = lognormal_from_moments(14.7, 2.8).expect("positive moments");
        InputDistributionSet::new(
            InputMode::Map,
            vec![
                ("MAP".into(), Distribution1D::Normal { mean: 93.0, sd: 7.6 }),
                ("IOP".into(), iop),
                ("RLTp".into(), Distribution1D::Normal { mean: 9.5, sd: 2.2 }),
            ],
        )
        .expect("canonical set")
    }

    /// Default SP/DP-mode set: SP ~ N(124.1, 11.1), DP ~ N(77.5, 7.1), plus
    /// the IOP and RLTp defaults.
    pub fn default_spdp_mode() -> Self {
        let iop = lognormal_from_moments(14.7, 2.8).expect("positive moments");
        InputDistributionSet::new(
            InputMode::SpDp,
            vec![
                ("SP".into(), Distribution1D::Normal { mean: 124.1, sd: 11.1 }),
                ("DP".into(), Distribution1D::Normal { mean: 77.5, sd: 7.1 }),
                ("IOP".into(), iop),
                ("RLTp".into(), Distribution1D::Normal { mean: 9.5, sd: 2.2 }),
            ],
        )
        .expect("canonical set")
    }

    pub fn entries(&self) -> &[(String, Distribution1D)] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&Distribution1D> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, d)| d)
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|(n, _)| n.as_str()).collect()
    }
}
