use super::field::{ActivationTable, Targets};
use super::gpi::{gpi_update, GpiOperator};
use super::mixed::{mixed_field, StateHistory};
use super::{check_sizes, table_update, InteractionFunction, OverlapMode, RuleConfig};
use crate::error::Result;
use crate::patterns::{PatternSet, StateVector};

enum Prepared {
    Table(ActivationTable, Targets),
    Gpi(GpiOperator, InteractionFunction),
    Mixed(ActivationTable),
}

/// A rule bound to one pattern set, with tables and operators built once.
///
/// MixedNet networks keep their own state history: each call to
/// [`Network::step`] records the state it is given as `S(t)`.
pub struct Network<'a> {
    ps: &'a PatternSet,
    cfg: RuleConfig,
    prepared: Prepared,
    history: StateHistory,
}

impl<'a> Network<'a> {
    pub fn new(cfg: RuleConfig, ps: &'a PatternSet) -> Result<Self> {
        cfg.validate()?;
        let n = ps.n_neurons();
        let p = ps.n_patterns();
        let (prepared, tau) = match cfg {
            RuleConfig::SeqNet | RuleConfig::DenseNet { .. } | RuleConfig::Hopfield | RuleConfig::Mhn { .. } => {
                let f = cfg.interaction().unwrap();
                let targets = if cfg.is_autoassociative() { Targets::Own } else { Targets::Successor };
                (Prepared::Table(ActivationTable::new(f, n, OverlapMode::SelfExcluded, p), targets), 0)
            }
            RuleConfig::GpiDenseNet { f, tol } => (Prepared::Gpi(GpiOperator::new(ps, tol)?, f), 0),
            RuleConfig::MixedNet { f_s, tau, .. } => {
                (Prepared::Mixed(ActivationTable::new(f_s, n, OverlapMode::SelfExcluded, p)), tau)
            }
        };
        Ok(Network { ps, cfg, prepared, history: StateHistory::new(tau) })
    }

    pub fn config(&self) -> &RuleConfig {
        &self.cfg
    }

    pub fn patterns(&self) -> &PatternSet {
        self.ps
    }

    pub fn gpi_operator(&self) -> Option<&GpiOperator> {
        match &self.prepared {
            Prepared::Gpi(op, _) => Some(op),
            _ => None,
        }
    }

    /// Pattern that a correct update from pattern `mu` must produce.
    pub fn target_index(&self, mu: usize) -> usize {
        if self.cfg.is_autoassociative() {
            mu
        } else {
            self.ps.next_index(mu)
        }
    }

    /// Forgets the MixedNet history.
    pub fn reset(&mut self) {
        self.history.clear();
    }

    pub fn step(&mut self, s: &StateVector) -> Result<StateVector> {
        check_sizes(s, self.ps)?;
        match &self.prepared {
            Prepared::Table(table, targets) => Ok(table_update(s, self.ps, table, OverlapMode::SelfExcluded, *targets)),
            Prepared::Gpi(op, f) => gpi_update(s, self.ps, *f, op),
            Prepared::Mixed(table) => {
                let RuleConfig::MixedNet { f_a, lambda, tau, kernel, .. } = self.cfg else { unreachable!() };
                self.history.push(s.clone());
                mixed_field(&self.history, self.ps, table, f_a, lambda, tau, kernel, OverlapMode::SelfExcluded)
            }
        }
    }
}
