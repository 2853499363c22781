pub mod compare;
pub mod evaluate;
pub mod expert;
pub mod sweep;
pub mod theory;
pub mod train;

use std::path::Path;

use clap::ValueEnum;
use vlbirl_core::approximator::checkpoint::save_network;
use vlbirl_core::baselines::{BcOutput, JsOutput};
use vlbirl_core::evaluation::{continuous_value_grid, SeedResult};
use vlbirl_core::{
    behavior_cloning, ile, js_imitator_train, policy_evaluation, train_with, BcConfig, EvalSettings, ExperimentConfig,
    MdpSpec, ObservedTransition, PolicyModel, TrainOutput, TrainReport, ValueTable,
};

use crate::failure::CliResult;
use crate::options::{policy_returns, write_file};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Vlbirl,
    Bc,
    #[value(name = "gail_js")]
    GailJs,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Vlbirl => "vlbirl",
            Method::Bc => "bc",
            Method::GailJs => "gail_js",
        }
    }
}

pub enum Fitted {
    Vlbirl(Box<TrainOutput>),
    GailJs(Box<JsOutput>),
    Bc(BcOutput),
}

impl Fitted {
    pub fn policy(&self) -> &PolicyModel {
        match self {
            Fitted::Vlbirl(o) => o.policy(),
            Fitted::GailJs(o) => o.policy(),
            Fitted::Bc(o) => &o.policy,
        }
    }

    pub fn report(&self) -> Option<&TrainReport> {
        match self {
            Fitted::Vlbirl(o) => Some(&o.report),
            Fitted::GailJs(o) => Some(&o.report),
            Fitted::Bc(_) => None,
        }
    }

    /// Writes the method's artifacts into a run directory.
    pub fn save(&self, dir: &Path) -> CliResult<()> {
        write_file(&dir.join("policy.json"), serde_json::to_string(self.policy()).map_err(anyhow::Error::from)?)?;
        if let Some(report) = self.report() {
            write_file(&dir.join("report.csv"), report.to_csv()?)?;
            write_file(&dir.join("timing.csv"), report.timing_csv())?;
        }
        match self {
            Fitted::Vlbirl(o) => {
                save_network(&o.reward_head.net, &dir.join("reward.net"))?;
                save_network(&o.classifier.net, &dir.join("classifier.net"))?;
            }
            Fitted::GailJs(o) => save_network(&o.discriminator.net, &dir.join("discriminator.net"))?,
            Fitted::Bc(o) => {
                let mut csv = String::from("epoch,holdout_loss\n");
                for (i, l) in o.holdout_loss.iter().enumerate() {
                    csv.push_str(&format!("{},{}\n", i + 1, l));
                }
                write_file(&dir.join("bc_loss.csv"), csv)?;
            }
        }
        Ok(())
    }
}

pub fn eval_settings(spec: &MdpSpec, cfg: &ExperimentConfig, reference: &ValueTable) -> EvalSettings {
    let mut s = EvalSettings::from_config(&cfg.eval);
    if !spec.is_tabular() {
        s.expert_values = Some(reference.clone());
    }
    s
}

pub fn fit(
    method: Method,
    spec: &MdpSpec,
    data: &[Vec<ObservedTransition>],
    cfg: &ExperimentConfig,
    settings: &EvalSettings,
) -> CliResult<Fitted> {
    Ok(match method {
        Method::Vlbirl => Fitted::Vlbirl(Box::new(train_with(spec, data, &cfg.train, settings)?)),
        Method::GailJs => Fitted::GailJs(Box::new(js_imitator_train(spec, data, &cfg.train, settings)?)),
        Method::Bc => Fitted::Bc(behavior_cloning(spec, data, &BcConfig::from_config(&cfg.baselines, cfg.train.seed))?),
    })
}

/// Return statistics over `eval.episodes` episodes from `eval.seed`, and ILE
/// against `reference`.
pub fn score(
    spec: &MdpSpec,
    cfg: &ExperimentConfig,
    policy: &PolicyModel,
    reference: &ValueTable,
) -> CliResult<SeedResult> {
    let (mean_return, std_return) = policy_returns(spec, policy, cfg)?;
    let learner = if spec.is_tabular() {
        policy_evaluation(spec, policy, 1e-10)?
    } else {
        continuous_value_grid(spec, policy, cfg.eval.grid_resolution, cfg.eval.grid_episodes, cfg.eval.seed)?
    };
    Ok(SeedResult { seed: cfg.train.seed, mean_return, std_return, ile: Some(ile(reference, &learner)?) })
}
