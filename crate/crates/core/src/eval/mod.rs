//! Experimental protocol: splits, tuple-level metrics, the keyword baseline,
//! reports, ablations and a synthetic corpus generator.

mod ablation;
mod baseline;
mod metrics;
mod pipeline;
mod report;
mod split;
pub mod synth;

pub use ablation::{run_ablation, AblationSpec, ARM_FULL, ARM_NO_GRAPH, ARM_ONE_THIRD, ARM_TWO_THIRDS};
pub use baseline::heuristic_baseline;
pub use metrics::{
    evaluate, evaluate_by_unit, evaluate_unit, ground_truth_units, MatchRule, Metrics, UnitKey, UnitTruth,
};
pub use pipeline::{
    fit_head, fit_lexical, head_set, predict, prepare_corpus, pretrain_graph, run_baseline, run_pipeline,
    train_models, truth_for, PipelineConfig, PipelineError, PreparedCorpus, PreparedPage, RunOutcome,
    TrainedModels,
};
pub use report::{
    mean, per_keyword_rows, AblationArm, AblationReport, EvalReport, KeywordRow, VerticalRow,
    REPORT_SCHEMA_VERSION,
};
pub use split::{best_prefix, make_split, Split, SplitError, SplitMode, SplitSpec, WebsiteKey};
pub use synth::{generate_synthetic, NoiseSpec, SynthError, SynthSpec};
