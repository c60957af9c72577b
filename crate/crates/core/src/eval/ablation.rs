use serde::{Deserialize, Serialize};

use super::{
    evaluate_by_unit, make_split, predict, train_models, truth_for, AblationReport, EvalReport, MatchRule,
    PipelineConfig, PipelineError, PreparedCorpus, SplitSpec,
};
use crate::corpus::Dataset;
use crate::gnn::DataFraction;

pub const ARM_FULL: &str = "full";
pub const ARM_NO_GRAPH: &str = "- graph features";
pub const ARM_TWO_THIRDS: &str = "- graph 2/3 data";
pub const ARM_ONE_THIRD: &str = "- graph 1/3 data";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationSpec {
    pub split: SplitSpec,
}

/// Trains and evaluates the four arms on one split: the full model, the
/// head without graph features, and graph pretraining on 2/3 and 1/3 of
/// the positive edges. Deltas are relative to the full arm.
pub fn run_ablation(
    corpus: &PreparedCorpus,
    ds: &Dataset,
    spec: &AblationSpec,
    cfg: &PipelineConfig,
) -> Result<AblationReport, PipelineError> {
    let split = make_split(ds, &spec.split)?;
    let train = corpus.page_indices(|v, w| split.is_train(v, w));
    let test = corpus.page_indices(|v, w| split.is_test(v, w));
    let truth = truth_for(corpus, &test);

    let arms: [(&str, bool, DataFraction); 4] = [
        (ARM_FULL, true, DataFraction::Full),
        (ARM_NO_GRAPH, false, DataFraction::Full),
        (ARM_TWO_THIRDS, true, DataFraction::TwoThirds),
        (ARM_ONE_THIRD, true, DataFraction::OneThird),
    ];
    let mut reports = Vec::new();
    for (name, use_graph, fraction) in arms {
        let mut c = cfg.clone();
        c.use_graph = use_graph;
        c.graph.data_fraction = fraction;
        let models = train_models(corpus, &train, &c, None)?;
        let preds = predict(corpus, &test, &models, None)?;
        let report = EvalReport::from_units(name, &evaluate_by_unit(&preds, &truth, &MatchRule));
        reports.push((name.to_string(), report));
    }
    Ok(AblationReport::from_reports(format!("ablation ({})", spec.split.label()), &reports))
}
