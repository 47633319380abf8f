//! The McPal migration coordinator and its weaving into host models.
//!
//! McPal's STD:
//!
//! ```text
//! Observing -obs-> Observing
//! Observing -wantChange-> Prepared -kickOff-> Migrating -migrate-> Migrating
//! Migrating -migrDone-> Concluded -phaseOut-> Observing
//! ```
//!
//! Its self-partition (`Evol` by default) has the phases `Hibernating`,
//! `StartMigr`, `MigrPhase` and `Content`, moved along by four rules that
//! McPal manages itself:
//!
//! - `kickOff` leaves hibernation and applies the fragment held in `Crs`,
//! - `startMigr` enters the migration phase,
//! - `endMigr` leaves it (migration fragments usually replace this rule with
//!   one guarded by the roles they migrate),
//! - `hibernate` returns to `Hibernating` and applies `Rearm`.
//!
//! A second partition (`Trigger`) keeps the `wantChange` trigger out of reach
//! until [`load_migration`] removes it; `Rearm` puts it back and empties `Crs`.

use crate::model::{
    Component, Configuration, ConsistencyRule, Partition, Phase, RoleId, Std, StdModel, Transfer,
    Transition, Trap, Value, TRIVIAL_TRAP,
};
use crate::validate::validate_model;

use super::{apply_changeset, validate_changeset, ChangeSet, EvolutionError};

const PREPARED: &str = "Prepared";
const MIGRATING: &str = "Migrating";
const CONCLUDED: &str = "Concluded";
const DORMANT: &str = "Dormant";

pub const KICK_OFF_RULE: &str = "kickOff";
pub const START_RULE: &str = "startMigr";
pub const END_RULE: &str = "endMigr";
pub const HIBERNATE_RULE: &str = "hibernate";

/// Names used when weaving McPal into a host model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct McPalSkeleton {
    pub component: String,
    pub hibernation_state: String,
    pub evol_partition: String,
    pub hibernating_phase: String,
    pub start_phase: String,
    pub migration_phase: String,
    pub content_phase: String,
    pub crs_variable: String,
    pub trigger_partition: String,
    pub rearm_variable: String,
}

impl Default for McPalSkeleton {
    fn default() -> Self {
        McPalSkeleton {
            component: "McPal".into(),
            hibernation_state: "Observing".into(),
            evol_partition: "Evol".into(),
            hibernating_phase: "Hibernating".into(),
            start_phase: "StartMigr".into(),
            migration_phase: "MigrPhase".into(),
            content_phase: "Content".into(),
            crs_variable: "Crs".into(),
            trigger_partition: "Trigger".into(),
            rearm_variable: "Rearm".into(),
        }
    }
}

impl McPalSkeleton {
    fn obs(&self) -> Transition {
        Transition::new(&self.hibernation_state, "obs", &self.hibernation_state)
    }
    fn want_change(&self) -> Transition {
        Transition::new(&self.hibernation_state, "wantChange", PREPARED)
    }
    fn kick_off(&self) -> Transition {
        Transition::new(PREPARED, "kickOff", MIGRATING)
    }
    fn migrate(&self) -> Transition {
        Transition::new(MIGRATING, "migrate", MIGRATING)
    }
    fn migr_done(&self) -> Transition {
        Transition::new(MIGRATING, "migrDone", CONCLUDED)
    }
    fn phase_out(&self) -> Transition {
        Transition::new(CONCLUDED, "phaseOut", &self.hibernation_state)
    }

    fn std(&self) -> Std {
        let mut std = Std::new(&self.component, &self.hibernation_state);
        std.states = [self.hibernation_state.as_str(), PREPARED, MIGRATING, CONCLUDED]
            .into_iter()
            .map(String::from)
            .collect();
        std.transitions = [
            self.obs(),
            self.want_change(),
            self.kick_off(),
            self.migrate(),
            self.migr_done(),
            self.phase_out(),
        ]
        .into_iter()
        .collect();
        std
    }

    fn phase(name: &str, states: &[&str], transitions: Vec<Transition>, traps: Vec<Trap>) -> Phase {
        let mut ph = Phase::new(name);
        ph.states = states.iter().map(|s| s.to_string()).collect();
        ph.transitions = transitions.into_iter().collect();
        ph.traps = traps.into_iter().map(|t| (t.name.clone(), t)).collect();
        ph
    }

    fn evol_partition(&self) -> Partition {
        let hib = self.hibernation_state.as_str();
        let mut part = Partition::new(&self.evol_partition, &self.hibernating_phase);
        for ph in [
            Self::phase(
                &self.hibernating_phase,
                &[hib, PREPARED, MIGRATING, CONCLUDED],
                vec![self.obs(), self.want_change(), self.kick_off()],
                vec![Trap::new("prepared", [PREPARED, MIGRATING])],
            ),
            Self::phase(
                &self.start_phase,
                &[PREPARED, MIGRATING],
                vec![self.migrate()],
                vec![Trap::new("started", [MIGRATING])],
            ),
            Self::phase(
                &self.migration_phase,
                &[MIGRATING, CONCLUDED],
                vec![self.migrate(), self.migr_done()],
                vec![],
            ),
            Self::phase(
                &self.content_phase,
                &[MIGRATING, CONCLUDED, hib],
                vec![self.phase_out()],
                vec![Trap::new("concluded", [CONCLUDED, hib])],
            ),
        ] {
            part.phases.insert(ph.name.clone(), ph);
        }
        part
    }

    /// The partition that withholds the `wantChange` trigger.
    fn trigger_partition(&self) -> Partition {
        let std = self.std();
        let mut dormant = Phase::new(DORMANT);
        dormant.states = std.states.clone();
        dormant.transitions = std
            .transitions
            .iter()
            .filter(|t| **t != self.want_change())
            .cloned()
            .collect();
        let mut part = Partition::new(&self.trigger_partition, DORMANT);
        part.phases.insert(DORMANT.into(), dormant);
        part
    }

    fn self_transfer(&self, from: &str, trap: &str, to: &str) -> Transfer {
        Transfer::new(&self.component, &self.evol_partition, from, trap, to)
    }

    fn rules(&self) -> Vec<ConsistencyRule> {
        let rule = |name: &str, step: Transition, transfer: Transfer, change: Option<&str>| {
            ConsistencyRule {
                name: name.into(),
                manager: self.component.clone(),
                step,
                transfers: vec![transfer],
                change: change.map(String::from),
            }
        };
        vec![
            rule(
                KICK_OFF_RULE,
                self.kick_off(),
                self.self_transfer(&self.hibernating_phase, "prepared", &self.start_phase),
                Some(&self.crs_variable),
            ),
            rule(
                START_RULE,
                self.migrate(),
                self.self_transfer(&self.start_phase, "started", &self.migration_phase),
                None,
            ),
            self.end_rule(),
            rule(
                HIBERNATE_RULE,
                self.phase_out(),
                self.self_transfer(&self.content_phase, "concluded", &self.hibernating_phase),
                Some(&self.rearm_variable),
            ),
        ]
    }

    /// The default, unguarded end-of-migration rule.
    pub fn end_rule(&self) -> ConsistencyRule {
        ConsistencyRule {
            name: END_RULE.into(),
            manager: self.component.clone(),
            step: self.migr_done(),
            transfers: vec![self.self_transfer(&self.migration_phase, TRIVIAL_TRAP, &self.content_phase)],
            change: None,
        }
    }

    fn rearm(&self) -> ChangeSet {
        let mut cs = ChangeSet::default();
        cs.add_partitions
            .insert((self.component.clone(), self.trigger_partition()));
        cs.set_variables.insert(
            self.crs_variable.clone(),
            Value::Fragment(Box::default()),
        );
        cs
    }
}

/// Adds a hibernating McPal to `model`. Host behaviour is untouched: no host
/// transition becomes claimed and McPal cannot leave hibernation until a
/// migration is loaded.
pub fn weave_mcpal(model: &StdModel, skeleton: &McPalSkeleton) -> Result<StdModel, EvolutionError> {
    if model.components.contains_key(&skeleton.component) {
        return Err(EvolutionError::NameCollision(skeleton.component.clone()));
    }
    for var in [&skeleton.crs_variable, &skeleton.rearm_variable] {
        if model.variables.contains_key(var) {
            return Err(EvolutionError::NameCollision(var.clone()));
        }
    }
    let rules = skeleton.rules();
    for r in &rules {
        if model.rules.contains_key(&r.name) {
            return Err(EvolutionError::NameCollision(format!("rule {}", r.name)));
        }
    }

    let mut out = model.clone();
    let mut comp = Component::new(skeleton.std());
    let evol = skeleton.evol_partition();
    let trigger = skeleton.trigger_partition();
    comp.partitions.insert(evol.name.clone(), evol);
    comp.partitions.insert(trigger.name.clone(), trigger);
    out.components.insert(skeleton.component.clone(), comp);
    for r in rules {
        out.rules.insert(r.name.clone(), r);
    }
    out.variables.insert(
        skeleton.crs_variable.clone(),
        Value::Fragment(Box::default()),
    );
    out.variables.insert(
        skeleton.rearm_variable.clone(),
        Value::Fragment(Box::new(skeleton.rearm())),
    );
    let diags = validate_model(&out);
    if !diags.is_empty() {
        return Err(EvolutionError::Rejected(diags));
    }
    Ok(out)
}

pub fn is_hibernating(model: &StdModel, config: &Configuration, skeleton: &McPalSkeleton) -> bool {
    model.components.contains_key(&skeleton.component)
        && config.state_of(&skeleton.component) == Some(skeleton.hibernation_state.as_str())
        && config.phase_of(&skeleton.component, &skeleton.evol_partition)
            == Some(skeleton.hibernating_phase.as_str())
}

/// Goal predicate of a migration: the target version is reached and McPal
/// is back in hibernation.
pub fn migration_complete(
    skeleton: &McPalSkeleton,
    target_version: u64,
) -> impl Fn(&StdModel, &Configuration) -> bool + Sync + '_ {
    move |model, config| {
        config.model_version == target_version && is_hibernating(model, config, skeleton)
    }
}

/// Binds `fragment` to the kick-off rule (by setting `Crs`) and releases
/// the trigger, as one change set.
pub fn load_migration(
    model: &StdModel,
    config: &Configuration,
    fragment: &ChangeSet,
    skeleton: &McPalSkeleton,
) -> Result<(StdModel, Configuration), EvolutionError> {
    if !model.components.contains_key(&skeleton.component) {
        return Err(EvolutionError::NotWoven(skeleton.component.clone()));
    }
    if !is_hibernating(model, config, skeleton) {
        return Err(EvolutionError::NotHibernating);
    }
    let mut cs = ChangeSet::default();
    cs.set_variables.insert(
        skeleton.crs_variable.clone(),
        Value::Fragment(Box::new(fragment.clone())),
    );
    if model
        .partition(&skeleton.component, &skeleton.trigger_partition)
        .is_some()
    {
        cs.remove_partitions
            .insert((skeleton.component.clone(), skeleton.trigger_partition.clone()));
    }
    let (loaded, loaded_config) = apply_changeset(model, config, &cs)?;

    // Dry run of the fragment as the kick-off rule would apply it, with the
    // host roles where they are now.
    let mut kicked = loaded_config.clone();
    kicked
        .detailed
        .insert(skeleton.component.clone(), MIGRATING.into());
    kicked.phases.insert(
        RoleId::new(&skeleton.component, &skeleton.evol_partition),
        skeleton.start_phase.clone(),
    );
    let diags = validate_changeset(&loaded, &kicked, fragment);
    if !diags.is_empty() {
        return Err(EvolutionError::InvalidFragment(diags));
    }
    Ok((loaded, loaded_config))
}
