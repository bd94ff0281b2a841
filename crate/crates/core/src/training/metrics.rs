use crate::error::{Error, Result};

/// Decision threshold on the sigmoid output.
pub const THRESHOLD: f64 = 0.5;

/// Binary confusion counts; the canonical matrix layout is
/// [[TN, FP], [FN, TP]] with glaucoma as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub true_negative: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_positive: usize,
}

impl Confusion {
    pub fn from_counts(tn: usize, fp: usize, fn_: usize, tp: usize) -> Self {
        Confusion {
            true_negative: tn,
            false_positive: fp,
            false_negative: fn_,
            true_positive: tp,
        }
    }

    /// Tallies thresholded probabilities against labels.
    pub fn from_predictions(probs: &[f64], labels: &[u8]) -> Self {
        let mut c = Confusion::default();
        for (&p, &y) in probs.iter().zip(labels.iter()) {
            let predicted = p >= THRESHOLD;
            match (y == 1, predicted) {
                (false, false) => c.true_negative += 1,
                (false, true) => c.false_positive += 1,
                (true, false) => c.false_negative += 1,
                (true, true) => c.true_positive += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.true_negative + self.false_positive + self.false_negative + self.true_positive
    }

    pub fn matrix(&self) -> [[usize; 2]; 2] {
        [
            [self.true_negative, self.false_positive],
            [self.false_negative, self.true_positive],
        ]
    }
}

/// Whether precision/recall/F1 average both classes or report the positive
/// (glaucoma) class alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricsAveraging {
    Macro,
    PositiveClass,
}

impl MetricsAveraging {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "macro" => Ok(MetricsAveraging::Macro),
            "positive_class" => Ok(MetricsAveraging::PositiveClass),
            other => Err(Error::config(format!(
                "unknown metrics_averaging '{other}'; expected macro or positive_class"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MetricsAveraging::Macro => "macro",
            MetricsAveraging::PositiveClass => "positive_class",
        }
    }
}

/// Accuracy, precision, recall and F1 in percent, plus the confusion matrix
/// they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub confusion: Confusion,
    pub acc: f64,
    pub pre: f64,
    pub rec: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Derives the four metrics from a confusion matrix. F1 is always the
/// harmonic mean of the reported precision and recall.
pub fn metrics_from_confusion(c: &Confusion, averaging: MetricsAveraging) -> MetricsReport {
    let total = c.total();
    let acc = ratio(c.true_positive + c.true_negative, total);
    let pre_pos = ratio(c.true_positive, c.true_positive + c.false_positive);
    let rec_pos = ratio(c.true_positive, c.true_positive + c.false_negative);
    let (pre, rec) = match averaging {
        MetricsAveraging::PositiveClass => (pre_pos, rec_pos),
        MetricsAveraging::Macro => {
            let pre_neg = ratio(c.true_negative, c.true_negative + c.false_negative);
            let rec_neg = ratio(c.true_negative, c.true_negative + c.false_positive);
            ((pre_pos + pre_neg) / 2.0, (rec_pos + rec_neg) / 2.0)
        }
    };
    MetricsReport {
        confusion: *c,
        acc: acc * 100.0,
        pre: pre * 100.0,
        rec: rec * 100.0,
        f1: harmonic(pre, rec) * 100.0,
    }
}

/// Cross-validation summary: one report per fold plus their unweighted mean.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossValReport {
    pub per_fold: Vec<MetricsReport>,
    pub mean_acc: f64,
    pub mean_pre: f64,
    pub mean_rec: f64,
    pub mean_f1: f64,
    /// Highest accuracy, ties broken by F1.
    pub best_fold: usize,
}

impl CrossValReport {
    pub fn aggregate(per_fold: Vec<MetricsReport>) -> Self {
        let k = per_fold.len().max(1) as f64;
        let mean_acc = per_fold.iter().map(|m| m.acc).sum::<f64>() / k;
        let mean_pre = per_fold.iter().map(|m| m.pre).sum::<f64>() / k;
        let mean_rec = per_fold.iter().map(|m| m.rec).sum::<f64>() / k;
        let mean_f1 = per_fold.iter().map(|m| m.f1).sum::<f64>() / k;
        let mut best_fold = 0;
        for (i, m) in per_fold.iter().enumerate() {
            let best = &per_fold[best_fold];
            if m.acc > best.acc || (m.acc == best.acc && m.f1 > best.f1) {
                best_fold = i;
            }
        }
        CrossValReport {
            per_fold,
            mean_acc,
            mean_pre,
            mean_rec,
            mean_f1,
            best_fold,
        }
    }

    /// `fold,acc,pre,rec,f1` rows followed by a `mean` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold,acc,pre,rec,f1\n");
        for (i, m) in self.per_fold.iter().enumerate() {
            out.push_str(&format!(
                "{i},{:.4},{:.4},{:.4},{:.4}\n",
                m.acc, m.pre, m.rec, m.f1
            ));
        }
        out.push_str(&format!(
            "mean,{:.4},{:.4},{:.4},{:.4}\n",
            self.mean_acc, self.mean_pre, self.mean_rec, self.mean_f1
        ));
        out
    }
}

/// Fixed-width comparison table in the Acc / Pre / Rec / F1 column order.
pub fn render_table(rows: &[(String, f64, f64, f64, f64)]) -> String {
    let name_width = rows
        .iter()
        .map(|(n, ..)| n.len())
        .chain(["Model".len()])
        .max()
        .unwrap_or(5);
    let mut out = format!(
        "{:<name_width$}  {:>8}  {:>8}  {:>8}  {:>8}\n",
        "Model", "Acc (%)", "Pre (%)", "Rec (%)", "F1 (%)"
    );
    for (name, acc, pre, rec, f1) in rows {
        out.push_str(&format!(
            "{name:<name_width$}  {acc:>8.2}  {pre:>8.2}  {rec:>8.2}  {f1:>8.2}\n"
        ));
    }
    out
}
