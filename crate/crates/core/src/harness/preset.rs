//! Named experiment grids.

use std::fmt;

use crate::acquisition::MethodId;
use crate::error::{Error, Result};
use crate::systems::SystemId;

use super::config::HarnessConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetName {
    MajorRevision,
    MajorBudgetAblation,
    DegreeAblation,
    ComponentAblation,
    WeightSensitivity,
    Smoke,
}

impl PresetName {
    pub const ALL: [PresetName; 6] = [
        PresetName::MajorRevision,
        PresetName::MajorBudgetAblation,
        PresetName::DegreeAblation,
        PresetName::ComponentAblation,
        PresetName::WeightSensitivity,
        PresetName::Smoke,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::MajorRevision => "major-revision",
            PresetName::MajorBudgetAblation => "major-budget-ablation",
            PresetName::DegreeAblation => "degree-ablation",
            PresetName::ComponentAblation => "component-ablation",
            PresetName::WeightSensitivity => "weight-sensitivity",
            PresetName::Smoke => "smoke",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == s)
    }

    /// Grid size the preset declares before any override.
    pub fn declared_cases(self) -> usize {
        self.preset().case_count()
    }

    pub fn preset(self) -> ExperimentPreset {
        use MethodId::*;
        let systems = SystemId::BENCHMARKS.to_vec();
        let seeds = |n: u64| (0..n).collect::<Vec<_>>();
        let (methods, seeds, budgets, degrees) = match self {
            PresetName::MajorRevision => (
                vec![
                    Random,
                    Sobol,
                    StateKcenter,
                    LiftDopt,
                    RegDopt,
                    RegEopt,
                    APe,
                    Oid,
                    GpeState,
                    IgpeDopt,
                ],
                seeds(20),
                vec![40],
                None,
            ),
            PresetName::MajorBudgetAblation => (
                vec![Random, Sobol, StateKcenter, RegEopt, IgpeDopt],
                seeds(10),
                vec![8, 12, 20, 40, 80],
                None,
            ),
            PresetName::DegreeAblation => (
                vec![Random, RegEopt, IgpeDopt],
                seeds(10),
                vec![40],
                Some(vec![2, 3, 4]),
            ),
            PresetName::ComponentAblation => (
                vec![IgpeDopt, IgpeNoDopt, IgpeNoDir, IgpeNoCluster, GpeState],
                seeds(10),
                vec![40],
                None,
            ),
            PresetName::WeightSensitivity => (
                vec![
                    IgpeDopt,
                    IgpeWhalf,
                    IgpeUniform,
                    IgpeRegHeavy,
                    IgpeClusterHeavy,
                ],
                seeds(10),
                vec![40],
                None,
            ),
            PresetName::Smoke => (
                vec![Random, Sobol, StateKcenter, RegEopt, IgpeDopt],
                seeds(3),
                vec![8, 20],
                None,
            ),
        };
        ExperimentPreset {
            name: self,
            systems,
            methods,
            seeds,
            budgets,
            degrees,
        }
    }

    /// Tables and figure files the preset writes.
    pub fn outputs(self) -> &'static [Output] {
        use Output::*;
        match self {
            PresetName::MajorRevision => &[
                Cases, Table1, Table5, Table6, Table7, Table8, Figure9, Figure10, Figure11,
                FigureA1,
            ],
            PresetName::MajorBudgetAblation => &[
                Cases, Table1, Table5, Table6, Table8, Figure6, Figure9, Figure10, Figure11,
                FigureA1,
            ],
            PresetName::DegreeAblation | PresetName::ComponentAblation => {
                &[Cases, Table1, Table5, Table6, Table8]
            }
            PresetName::WeightSensitivity => &[Cases, Table1, Table5, Table9],
            PresetName::Smoke => &Output::ALL,
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Output {
    Cases,
    Table1,
    Table5,
    Table6,
    Table7,
    Table8,
    Table9,
    Figure6,
    Figure9,
    Figure10,
    Figure11,
    FigureA1,
}

impl Output {
    pub const ALL: [Output; 12] = [
        Output::Cases,
        Output::Table1,
        Output::Table5,
        Output::Table6,
        Output::Table7,
        Output::Table8,
        Output::Table9,
        Output::Figure6,
        Output::Figure9,
        Output::Figure10,
        Output::Figure11,
        Output::FigureA1,
    ];

    /// File stem; tables go under `tables/`, figure data under `figures/`.
    pub fn stem(self) -> &'static str {
        match self {
            Output::Cases => "cases",
            Output::Table1 => "table1_summary",
            Output::Table5 => "table5_quality_checks",
            Output::Table6 => "table6_v4_certificate_hierarchy",
            Output::Table7 => "table7_v4_external_baselines",
            Output::Table8 => "table8_v4_downstream_tasks",
            Output::Table9 => "table9_v4_weight_sensitivity",
            Output::Figure6 => "figure6_budget_sensitivity",
            Output::Figure9 => "figure9_certificate_hierarchy",
            Output::Figure10 => "figure10_regression_theory_validation",
            Output::Figure11 => "figure11_task_nonmonotonicity",
            Output::FigureA1 => "figureA1_creg_sigma_min_sanity",
        }
    }

    pub fn is_figure(self) -> bool {
        self.stem().starts_with("figure")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CaseSpec {
    pub system: SystemId,
    pub method: MethodId,
    pub seed: u64,
    pub budget: usize,
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: PresetName,
    pub systems: Vec<SystemId>,
    pub methods: Vec<MethodId>,
    pub seeds: Vec<u64>,
    pub budgets: Vec<usize>,
    /// Dictionary degrees swept for every system; `None` uses each system's configured degree.
    pub degrees: Option<Vec<usize>>,
}

impl ExperimentPreset {
    pub fn case_count(&self) -> usize {
        let d = self.degrees.as_ref().map_or(1, Vec::len);
        self.systems.len() * self.methods.len() * self.seeds.len() * self.budgets.len() * d
    }

    /// Applies the `[presets.<name>]` table of the config file.
    pub fn with_config(mut self, cfg: &HarnessConfig) -> Result<Self> {
        let Some(o) = cfg.presets.get(self.name.as_str()) else {
            return Ok(self);
        };
        if let Some(s) = &o.systems {
            self.systems = parse_systems(s)?;
        }
        if let Some(m) = &o.methods {
            self.methods = parse_methods(m)?;
        }
        if let Some(s) = &o.seeds {
            self.seeds = s.clone();
        }
        if let Some(b) = &o.budgets {
            self.budgets = b.clone();
        }
        if let Some(d) = &o.degrees {
            self.degrees = Some(d.clone());
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("systems", self.systems.is_empty()),
            ("methods", self.methods.is_empty()),
            ("seeds", self.seeds.is_empty()),
            ("budgets", self.budgets.is_empty()),
            ("degrees", self.degrees.as_ref().is_some_and(Vec::is_empty)),
        ];
        if let Some((what, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::usage(format!("{}: {what} list is empty", self.name)));
        }
        if self.budgets.contains(&0) || self.degrees.as_ref().is_some_and(|d| d.contains(&0)) {
            return Err(Error::usage(format!(
                "{}: budgets and degrees must be positive",
                self.name
            )));
        }
        Ok(())
    }

    /// Case grid in system, degree, budget, method, seed order.
    pub fn cases(&self, cfg: &HarnessConfig) -> Vec<CaseSpec> {
        let mut out = Vec::with_capacity(self.case_count());
        for &system in &self.systems {
            let degrees = self
                .degrees
                .clone()
                .unwrap_or_else(|| vec![cfg.systems.degree(system)]);
            for &degree in &degrees {
                for &budget in &self.budgets {
                    for &method in &self.methods {
                        for &seed in &self.seeds {
                            out.push(CaseSpec {
                                system,
                                method,
                                seed,
                                budget,
                                degree,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

pub fn parse_systems(names: &[String]) -> Result<Vec<SystemId>> {
    names
        .iter()
        .map(|s| {
            SystemId::parse(s)
                .filter(|id| *id != SystemId::Linear)
                .ok_or_else(|| {
                    Error::usage(format!(
                        "unknown system {s:?}; expected duffing, vdp or lorenz"
                    ))
                })
        })
        .collect()
}

pub fn parse_methods(names: &[String]) -> Result<Vec<MethodId>> {
    names
        .iter()
        .map(|s| MethodId::parse(s).ok_or_else(|| Error::usage(format!("unknown method {s:?}"))))
        .collect()
}

/// Parses `0-9`, `1,4,7` or mixtures such as `0-2,5` into a sorted, deduplicated list.
pub fn parse_seed_list(s: &str) -> Result<Vec<u64>> {
    let bad = || {
        Error::usage(format!(
            "invalid seed list {s:?}; use forms like 0-9 or 0,3,5"
        ))
    };
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once('-') {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Parses a comma-separated list of positive integers, keeping the given order.
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| match p.trim().parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(Error::usage(format!(
                "invalid positive integer {p:?} in {s:?}"
            ))),
        })
        .collect()
}
