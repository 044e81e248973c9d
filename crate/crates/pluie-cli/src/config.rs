//! Run configuration: command-line flags merged over an optional TOML file.
//!
//! Flags win. The two policy pairs are merged as units: giving either
//! `--threshold` or `--sweep` on the command line replaces whatever the file
//! says about both, and likewise for `--epsilon` / `--calibrate-ties`, so a
//! file can never re-introduce half of a conflicting pair.

use clap::{Args, ValueEnum};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use pluie::backend::BackendConfig;
use pluie::judges::JudgeKind;
use pluie::lexical::LexicalMetric;
use pluie::templates::TemplateId;

use crate::Failure;

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Backend kind.
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,

    /// Completion endpoint URL (http backend).
    #[arg(long)]
    pub endpoint: Option<String>,

    /// Model identifier sent with every request (http backend).
    #[arg(long)]
    pub model: Option<String>,

    /// Mock-model table JSON (mock backend).
    #[arg(long, value_name = "PATH")]
    pub mock_table: Option<PathBuf>,

    /// Scoring template: para, fr, net, rev, rev-with-gold.
    #[arg(long)]
    pub template: Option<String>,

    /// Input schema: para (pairs), nile (triplets), rev (revisions).
    #[arg(long, value_enum)]
    pub task: Option<Task>,

    /// Input file (JSONL unless noted otherwise).
    #[arg(long = "in", value_name = "PATH")]
    pub input: Option<PathBuf>,

    /// Output file.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Fixed decision threshold. Conflicts with --sweep.
    #[arg(long)]
    pub threshold: Option<f64>,

    /// Sweep the threshold for best F1 instead of fixing it.
    #[arg(long)]
    pub sweep: bool,

    /// Fixed tie margin for preferences. Conflicts with --calibrate-ties.
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Calibrate the tie margin for best pairwise accuracy.
    #[arg(long)]
    pub calibrate_ties: bool,

    /// Seed for randomized baselines.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Concurrent in-flight backend requests.
    #[arg(long)]
    pub parallel: Option<usize>,

    /// Score both pair orderings.
    #[arg(long)]
    pub reverse: bool,

    /// Judge an output-based baseline instead of scoring log-odds.
    #[arg(long, value_enum)]
    pub judge: Option<JudgeArg>,

    /// Use the gold-revision template (and require gold in the input).
    #[arg(long)]
    pub gold: bool,

    /// Scoring metric: pluie, levenshtein, bleu, meteor.
    #[arg(long)]
    pub metric: Option<String>,

    /// Also export the threshold curve as CSV (sweep only).
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Mock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Para,
    Nile,
    Rev,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JudgeArg {
    Yesno,
    Choice,
    Likert,
}

impl JudgeArg {
    pub fn kind(self) -> JudgeKind {
        match self {
            JudgeArg::Yesno => JudgeKind::YesNo,
            JudgeArg::Choice => JudgeKind::Choice,
            JudgeArg::Likert => JudgeKind::Likert,
        }
    }
}

/// The subset of the configuration a TOML file may provide.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    backend: Option<BackendKind>,
    endpoint: Option<String>,
    model: Option<String>,
    mock_table: Option<PathBuf>,
    template: Option<String>,
    task: Option<Task>,
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    out: Option<PathBuf>,
    threshold: Option<f64>,
    sweep: Option<bool>,
    epsilon: Option<f64>,
    calibrate_ties: Option<bool>,
    seed: Option<u64>,
    parallel: Option<usize>,
    reverse: Option<bool>,
    judge: Option<JudgeArg>,
    gold: Option<bool>,
    metric: Option<String>,
    csv: Option<PathBuf>,
    timeout_seconds: Option<f64>,
    retries: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdPolicy {
    Fixed(f64),
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TiePolicy {
    Fixed(f64),
    Calibrate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Pluie,
    Lexical(LexicalMetric),
}

/// How to reach a model.
#[derive(Debug, Clone)]
pub enum BackendChoice {
    Http(BackendConfig),
    Mock(PathBuf),
}

/// A fully merged and validated run configuration.
#[derive(Debug)]
pub struct RunConfig {
    pub backend: BackendChoice,
    pub template: Option<TemplateId>,
    pub task: Task,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub threshold_policy: Option<ThresholdPolicy>,
    pub tie_policy: Option<TiePolicy>,
    pub seed: u64,
    pub parallel: usize,
    pub reverse: bool,
    pub judge: Option<JudgeKind>,
    pub gold: bool,
    pub metric: Metric,
    pub csv: Option<PathBuf>,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure::Usage(message.into())
}

fn load_file(path: &Path) -> Result<FileConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| usage(format!("config file {}: {e}", path.display())))
}

impl RunConfig {
    /// Merges flags over the optional config file and checks the global
    /// invariants. Per-command requirements (input present, backend needed)
    /// are checked by the command itself.
    pub fn resolve(args: &CommonArgs) -> Result<RunConfig, Failure> {
        let file = match &args.config {
            Some(path) => load_file(path)?,
            None => FileConfig::default(),
        };

        // Policy pairs merge as units so that flags replace the file's choice.
        let threshold_policy = if args.threshold.is_some() || args.sweep {
            merge_threshold(args.threshold, args.sweep)?
        } else {
            merge_threshold(file.threshold, file.sweep.unwrap_or(false))?
        };
        let tie_policy = if args.epsilon.is_some() || args.calibrate_ties {
            merge_ties(args.epsilon, args.calibrate_ties)?
        } else {
            merge_ties(file.epsilon, file.calibrate_ties.unwrap_or(false))?
        };

        let template = match args.template.as_deref().or(file.template.as_deref()) {
            Some(name) => Some(
                TemplateId::from_str(name)
                    .map_err(|_| usage(format!("unknown template {name:?}")))?,
            ),
            None => None,
        };
        let metric = match args.metric.as_deref().or(file.metric.as_deref()) {
            None | Some("pluie") => Metric::Pluie,
            Some(name) => Metric::Lexical(
                LexicalMetric::from_str(name)
                    .map_err(|_| usage(format!("unknown metric {name:?}")))?,
            ),
        };
        let judge = args.judge.or(file.judge).map(JudgeArg::kind);
        if judge.is_some() && !matches!(metric, Metric::Pluie) {
            return Err(usage("--judge does not combine with a lexical --metric"));
        }

        let backend_kind = args.backend.or(file.backend);
        let mock_table = args.mock_table.clone().or(file.mock_table);
        let endpoint = args.endpoint.clone().or(file.endpoint);
        let model = args.model.clone().or(file.model);
        let parallel = args.parallel.or(file.parallel).unwrap_or(4);
        if parallel == 0 {
            return Err(usage("--parallel must be at least 1"));
        }

        let backend = match backend_kind {
            Some(BackendKind::Mock) => {
                let table = mock_table
                    .ok_or_else(|| usage("--backend mock requires --mock-table"))?;
                BackendChoice::Mock(table)
            }
            Some(BackendKind::Http) | None => {
                // The endpoint may be absent; commands that never touch a
                // model (classify, sweep, ...) run without one.
                let mut config = BackendConfig::new(endpoint.unwrap_or_default(), model.unwrap_or_default());
                if let Some(secs) = file.timeout_seconds {
                    if !(secs > 0.0) {
                        return Err(usage("timeout-seconds must be positive"));
                    }
                    config.timeout = Duration::from_secs_f64(secs);
                }
                if let Some(retries) = file.retries {
                    config.retries = retries;
                }
                config.max_parallel = parallel;
                BackendChoice::Http(config)
            }
        };

        Ok(RunConfig {
            backend,
            template,
            task: args.task.or(file.task).unwrap_or(Task::Para),
            input: args.input.clone().or(file.input),
            out: args.out.clone().or(file.out),
            threshold_policy,
            tie_policy,
            seed: args.seed.or(file.seed).unwrap_or(0),
            parallel,
            reverse: args.reverse || file.reverse.unwrap_or(false),
            judge,
            gold: args.gold || file.gold.unwrap_or(false),
            metric,
            csv: args.csv.clone().or(file.csv),
        })
    }

    pub fn input_path(&self) -> Result<&Path, Failure> {
        self.input.as_deref().ok_or_else(|| usage("--in is required"))
    }

    pub fn out_path(&self) -> Result<&Path, Failure> {
        self.out.as_deref().ok_or_else(|| usage("--out is required"))
    }

    /// The threshold policy, defaulting to the natural threshold 0.
    pub fn threshold_or_natural(&self) -> ThresholdPolicy {
        self.threshold_policy.unwrap_or(ThresholdPolicy::Fixed(0.0))
    }

    /// The scoring template for the configured task, honouring --gold.
    pub fn template_for_task(&self) -> Result<TemplateId, Failure> {
        let default = match (self.task, self.gold) {
            (Task::Para, _) => TemplateId::Para,
            (Task::Nile, _) => TemplateId::Net,
            (Task::Rev, false) => TemplateId::Rev,
            (Task::Rev, true) => TemplateId::RevWithGold,
        };
        let id = match self.template {
            Some(TemplateId::Rev) if self.gold => TemplateId::RevWithGold,
            Some(id) => id,
            None => default,
        };
        let is_rev = matches!(id, TemplateId::Rev | TemplateId::RevWithGold);
        if is_rev != matches!(self.task, Task::Rev) {
            return Err(usage(format!(
                "template {id} does not fit task {:?}; revision templates pair with --task rev",
                self.task
            )));
        }
        if self.gold && !matches!(id, TemplateId::RevWithGold) {
            return Err(usage(format!("--gold requires a revision template, not {id}")));
        }
        Ok(id)
    }
}

fn merge_threshold(fixed: Option<f64>, sweep: bool) -> Result<Option<ThresholdPolicy>, Failure> {
    match (fixed, sweep) {
        (Some(_), true) => Err(usage("--threshold conflicts with --sweep; give exactly one")),
        (Some(t), false) => {
            if !t.is_finite() {
                return Err(usage(format!("--threshold must be finite, got {t}")));
            }
            Ok(Some(ThresholdPolicy::Fixed(t)))
        }
        (None, true) => Ok(Some(ThresholdPolicy::Sweep)),
        (None, false) => Ok(None),
    }
}

fn merge_ties(fixed: Option<f64>, calibrate: bool) -> Result<Option<TiePolicy>, Failure> {
    match (fixed, calibrate) {
        (Some(_), true) => {
            Err(usage("--epsilon conflicts with --calibrate-ties; give exactly one"))
        }
        (Some(e), false) => {
            if !(e >= 0.0) || !e.is_finite() {
                return Err(usage(format!("--epsilon must be a finite non-negative number, got {e}")));
            }
            Ok(Some(TiePolicy::Fixed(e)))
        }
        (None, true) => Ok(Some(TiePolicy::Calibrate)),
        (None, false) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bare_args() -> CommonArgs {
        CommonArgs {
            config: None,
            backend: None,
            endpoint: None,
            model: None,
            mock_table: None,
            template: None,
            task: None,
            input: None,
            out: None,
            threshold: None,
            sweep: false,
            epsilon: None,
            calibrate_ties: false,
            seed: None,
            parallel: None,
            reverse: false,
            judge: None,
            gold: false,
            metric: None,
            csv: None,
        }
    }

    #[test]
    fn threshold_and_sweep_conflict() {
        let mut args = bare_args();
        args.threshold = Some(0.5);
        args.sweep = true;
        let err = RunConfig::resolve(&args).unwrap_err();
        assert!(matches!(err, Failure::Usage(_)));
    }

    #[test]
    fn epsilon_and_calibrate_conflict() {
        let mut args = bare_args();
        args.epsilon = Some(0.1);
        args.calibrate_ties = true;
        assert!(matches!(RunConfig::resolve(&args), Err(Failure::Usage(_))));
    }

    #[test]
    fn negative_epsilon_is_a_usage_error() {
        let mut args = bare_args();
        args.epsilon = Some(-0.1);
        assert!(matches!(RunConfig::resolve(&args), Err(Failure::Usage(_))));
    }

    #[test]
    fn flags_replace_the_file_policy_as_a_unit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "threshold = 1.5\nsweep = false\n").unwrap();

        let mut args = bare_args();
        args.config = Some(path);
        args.sweep = true;
        let config = RunConfig::resolve(&args).unwrap();
        // The file's fixed threshold must not conflict with the flag.
        assert_eq!(config.threshold_policy, Some(ThresholdPolicy::Sweep));
    }

    #[test]
    fn file_values_fill_unset_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "template = \"fr\"\nseed = 9\nepsilon = 0.25\nmetric = \"bleu\"\n",
        )
        .unwrap();

        let mut args = bare_args();
        args.config = Some(path);
        let config = RunConfig::resolve(&args).unwrap();
        assert_eq!(config.template, Some(TemplateId::Fr));
        assert_eq!(config.seed, 9);
        assert_eq!(config.tie_policy, Some(TiePolicy::Fixed(0.25)));
        assert_eq!(config.metric, Metric::Lexical(LexicalMetric::Bleu));
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "thresold = 1.0\n").unwrap();

        let mut args = bare_args();
        args.config = Some(path);
        assert!(matches!(RunConfig::resolve(&args), Err(Failure::Usage(_))));
    }

    #[test]
    fn mock_backend_requires_a_table() {
        let mut args = bare_args();
        args.backend = Some(BackendKind::Mock);
        assert!(matches!(RunConfig::resolve(&args), Err(Failure::Usage(_))));
    }

    #[test]
    fn gold_selects_the_gold_template() {
        let mut args = bare_args();
        args.task = Some(Task::Rev);
        args.gold = true;
        let config = RunConfig::resolve(&args).unwrap();
        assert_eq!(config.template_for_task().unwrap(), TemplateId::RevWithGold);

        let mut with_rev = bare_args();
        with_rev.task = Some(Task::Rev);
        with_rev.gold = true;
        with_rev.template = Some("rev".into());
        let config = RunConfig::resolve(&with_rev).unwrap();
        assert_eq!(config.template_for_task().unwrap(), TemplateId::RevWithGold);
    }

    #[test]
    fn revision_template_needs_the_rev_task() {
        let mut args = bare_args();
        args.template = Some("rev".into());
        let config = RunConfig::resolve(&args).unwrap();
        assert!(config.template_for_task().is_err());
    }
}
