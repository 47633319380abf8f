//! Example models shipped with the crate.
//!
//! `shop-migration` is the non-deterministic shop with McPal woven in and
//! the round-robin migration loaded; its initial configuration is the one
//! right after loading. The fixtures are deliberately broken variants kept
//! for tests and demonstrations.

use std::sync::Arc;

use thiserror::Error;

use crate::diag::Diagnostic;
use crate::dsl::{parse_fragment, parse_model, parse_properties, ParsedModel, PropertyExpr, SourceModel};
use crate::evolution::{load_migration, weave_mcpal, EvolutionError, McPalSkeleton};
use crate::model::{Configuration, StdModel};

#[derive(Debug, Clone, Copy)]
pub struct Bundle {
    pub name: &'static str,
    pub summary: &'static str,
    pub source: &'static str,
    pub properties: &'static str,
    /// Migration fragment loaded into McPal after weaving `source`.
    pub fragment: Option<&'static str>,
    /// Version at which the loaded migration is complete.
    pub target_version: Option<u64>,
}

pub const CS_ROUNDROBIN: Bundle = Bundle {
    name: "cs-roundrobin",
    summary: "two workers, scheduler granting the critical section in turn",
    source: include_str!("../models/cs-roundrobin.pdm"),
    properties: include_str!("../models/cs-roundrobin.pprop"),
    fragment: None,
    target_version: None,
};

pub const CS_NONDET: Bundle = Bundle {
    name: "cs-nondet",
    summary: "two workers, scheduler granting the critical section to either",
    source: include_str!("../models/cs-nondet.pdm"),
    properties: include_str!("../models/cs-nondet.pprop"),
    fragment: None,
    target_version: None,
};

pub const PRODCONS: Bundle = Bundle {
    name: "prodcons",
    summary: "producer and consumer over a two-slot buffer",
    source: include_str!("../models/prodcons.pdm"),
    properties: include_str!("../models/prodcons.pprop"),
    fragment: None,
    target_version: None,
};

pub const SHOP_MIGRATION: Bundle = Bundle {
    name: "shop-migration",
    summary: "three-client shop migrating from free choice to round robin under McPal",
    source: include_str!("../models/shop-nondet.pdm"),
    properties: include_str!("../models/shop-migration.pprop"),
    fragment: Some(include_str!("../models/shop-migration.pdm")),
    target_version: Some(4),
};

/// Two workers can both reach the critical section.
pub const CS_BROKEN: Bundle = Bundle {
    name: "cs-broken",
    summary: "cs-nondet with a rule that admits a second worker",
    source: include_str!("../models/cs-broken.pdm"),
    properties: include_str!("../models/cs-nondet.pprop"),
    fragment: None,
    target_version: None,
};

/// The finishing rule waits for a state the server never enters.
pub const SHOP_FAULTY: Bundle = Bundle {
    name: "shop-faulty",
    summary: "shop migration whose final step can never fire",
    source: include_str!("../models/shop-nondet.pdm"),
    properties: include_str!("../models/shop-migration.pprop"),
    fragment: Some(include_str!("../models/shop-faulty.pdm")),
    target_version: Some(4),
};

/// The shop's intended end state, for comparison with a migrated model.
pub const SHOP_ROUNDROBIN_SOURCE: &str = include_str!("../models/shop-roundrobin.pdm");
pub const SHOP_NONDET_SOURCE: &str = include_str!("../models/shop-nondet.pdm");

pub const EXAMPLES: &[Bundle] = &[CS_ROUNDROBIN, CS_NONDET, PRODCONS, SHOP_MIGRATION];
pub const FIXTURES: &[Bundle] = &[CS_BROKEN, SHOP_FAULTY];

pub fn find(name: &str) -> Option<&'static Bundle> {
    EXAMPLES.iter().chain(FIXTURES).find(|b| b.name == name)
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{name}: parse failed with {} diagnostic(s)", .diagnostics.len())]
    Parse { name: String, diagnostics: Vec<Diagnostic> },
    #[error("{name}: model is invalid with {} diagnostic(s)", .diagnostics.len())]
    Invalid { name: String, diagnostics: Vec<Diagnostic> },
    #[error("{name}: {source}")]
    Evolution {
        name: String,
        #[source]
        source: EvolutionError,
    },
}

impl LoadError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            LoadError::Parse { diagnostics, .. } | LoadError::Invalid { diagnostics, .. } => diagnostics,
            LoadError::Evolution { .. } => &[],
        }
    }
}

/// A model ready to run.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub model: Arc<StdModel>,
    pub config: Configuration,
    pub properties: Vec<PropertyExpr>,
    pub target_version: Option<u64>,
}

/// Parses `source` and insists on a valid model.
pub fn parse_valid(name: &str, source: &str) -> Result<ParsedModel, LoadError> {
    let parsed = parse_model(&SourceModel::new(name, source))
        .map_err(|diagnostics| LoadError::Parse { name: name.into(), diagnostics })?;
    if !parsed.is_valid() {
        return Err(LoadError::Invalid { name: name.into(), diagnostics: parsed.diagnostics });
    }
    Ok(parsed)
}

/// Weaves the default McPal into `host` and loads `fragment`, whose indexed
/// rules are expanded against the host's families. Returns the loaded model
/// and the host's initial configuration lifted onto it.
pub fn prepare_migration(
    name: &str,
    host: &ParsedModel,
    fragment: &str,
) -> Result<(StdModel, Configuration), LoadError> {
    let skeleton = McPalSkeleton::default();
    let evolution = |source| LoadError::Evolution { name: name.into(), source };
    let woven = weave_mcpal(&host.model, &skeleton).map_err(evolution)?;
    let cs = parse_fragment(fragment, &host.families)
        .map_err(|diagnostics| LoadError::Parse { name: format!("{name} fragment"), diagnostics })?;
    let config = woven.initial_configuration();
    load_migration(&woven, &config, &cs, &skeleton).map_err(evolution)
}

impl Bundle {
    pub fn load(&self) -> Result<Loaded, LoadError> {
        let parsed = parse_valid(self.name, self.source)?;
        let (model, config) = match self.fragment {
            None => {
                let config = parsed.model.initial_configuration();
                (parsed.model, config)
            }
            Some(fragment) => prepare_migration(self.name, &parsed, fragment)?,
        };
        let properties = parse_properties(self.properties).map_err(|diagnostics| LoadError::Parse {
            name: format!("{} properties", self.name),
            diagnostics,
        })?;
        Ok(Loaded {
            model: Arc::new(model),
            config,
            properties,
            target_version: self.target_version,
        })
    }
}
