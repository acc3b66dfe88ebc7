use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::types::MonthKey;

/// Lognormal amount distribution; `mu` and `sigma` are in natural-log pesos.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmountDist {
    pub mu: f64,
    pub sigma: f64,
}

impl AmountDist {
    pub const fn new(mu: f64, sigma: f64) -> Self {
        AmountDist { mu, sigma }
    }

    /// Median in pesos.
    pub fn median(self) -> f64 {
        self.mu.exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Honest taxpayers, colluders included.
    pub n_honest: usize,
    pub n_efos: usize,
    pub n_rings: usize,
    pub ring_size: usize,
    pub months: Vec<MonthKey>,
    pub honest_amount: AmountDist,
    /// Share of honest taxpayers that are large firms.
    pub large_firm_share: f64,
    pub large_firm_amount: AmountDist,
    pub efos_amount: AmountDist,
    pub december_uplift: f64,
    /// Mean out-edges per honest taxpayer and month (Poisson).
    pub honest_degree: f64,
    /// Probability a large firm's edge goes to another large firm.
    pub large_pool_preference: f64,
    /// Probability a ring fires in a given month.
    pub ring_activity: f64,
    /// Colluding clients attached to each ring.
    pub edos_per_ring: usize,
    /// Ring members each colluder receives invoices from.
    pub colluder_contacts: usize,
    /// Monthly probability a colluder invoices one of its contacts back.
    pub colluder_back_rate: f64,
    /// Bidirectional bridges between consecutive rings.
    pub inter_ring_bridges: usize,
    pub labeled_fraction: f64,
    /// Share of labeled EFOS labeled definitive (the rest alleged).
    pub definitive_share: f64,
    /// Fraction of nominal VAT planted evaders leave undeclared.
    pub underreport_factor: f64,
    pub cancel_rate: f64,
    pub outcome_rate: f64,
    pub vat_rate: f64,
    pub efos_legal_share: f64,
    pub honest_legal_share: f64,
    /// Honest taxpayers with no registry row.
    pub missing_registry_share: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_honest: 5000,
            n_efos: 100,
            n_rings: 20,
            ring_size: 5,
            months: MonthKey::months_of(2017).collect(),
            honest_amount: AmountDist::new(9.0, 1.2),
            large_firm_share: 0.2,
            large_firm_amount: AmountDist::new(12.8, 0.9),
            efos_amount: AmountDist::new(13.3, 0.8),
            december_uplift: 2.0,
            honest_degree: 5.0,
            large_pool_preference: 0.8,
            ring_activity: 0.9,
            edos_per_ring: 8,
            colluder_contacts: 4,
            colluder_back_rate: 0.5,
            inter_ring_bridges: 0,
            labeled_fraction: 0.7,
            definitive_share: 0.7,
            underreport_factor: 0.8,
            cancel_rate: 0.02,
            outcome_rate: 0.05,
            vat_rate: 0.16,
            efos_legal_share: 0.8,
            honest_legal_share: 0.5,
            missing_registry_share: 0.08,
            seed: 0,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Result<(), SynthError> {
    Err(SynthError::ConfigInvalid(msg.into()))
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.ring_size < 2 && self.n_rings > 0 {
            return invalid("ring_size must be at least 2");
        }
        if self.n_rings * self.ring_size > self.n_efos {
            return invalid("n_rings * ring_size exceeds n_efos");
        }
        if self.n_rings * self.edos_per_ring > self.n_honest {
            return invalid("n_rings * edos_per_ring exceeds n_honest");
        }
        if self.edos_per_ring > 0 && !(2..=self.ring_size).contains(&self.colluder_contacts) {
            return invalid("colluder_contacts must be between 2 and ring_size");
        }
        if self.n_honest + self.n_efos < 2 {
            return invalid("need at least two taxpayers");
        }
        if self.months.is_empty() {
            return invalid("months is empty");
        }
        if self.months.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("months must be strictly increasing");
        }
        for (name, p) in [
            ("large_firm_share", self.large_firm_share),
            ("large_pool_preference", self.large_pool_preference),
            ("ring_activity", self.ring_activity),
            ("colluder_back_rate", self.colluder_back_rate),
            ("labeled_fraction", self.labeled_fraction),
            ("definitive_share", self.definitive_share),
            ("underreport_factor", self.underreport_factor),
            ("cancel_rate", self.cancel_rate),
            ("outcome_rate", self.outcome_rate),
            ("vat_rate", self.vat_rate),
            ("efos_legal_share", self.efos_legal_share),
            ("honest_legal_share", self.honest_legal_share),
            ("missing_registry_share", self.missing_registry_share),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return invalid(format!("{name} = {p} is not a probability"));
            }
        }
        for (name, d) in
            [("honest_amount", self.honest_amount), ("large_firm_amount", self.large_firm_amount), ("efos_amount", self.efos_amount)]
        {
            if !(d.mu.is_finite() && d.sigma.is_finite() && d.sigma > 0.0) {
                return invalid(format!("{name} needs finite mu and positive sigma"));
            }
        }
        if self.efos_amount.mu <= self.honest_amount.mu {
            return invalid("efos_amount.mu must exceed honest_amount.mu");
        }
        if !(self.december_uplift.is_finite() && self.december_uplift >= 1.0) {
            return invalid("december_uplift must be at least 1");
        }
        if !(self.honest_degree.is_finite() && self.honest_degree >= 0.0) {
            return invalid("honest_degree must be non-negative");
        }
        Ok(())
    }
}
