//! Intensity-threshold baseline: pixel ROC analysis, the maximum-accuracy
//! cutoff, and confusion metrics.

use ndarray::{Array2, Zip};

use crate::imaging::{Label, LabeledSlice};
use crate::{Error, Result, Scalar};

/// ROC curve over ascending thresholds. A pixel is called tumor when its
/// value is `>=` the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve<T> {
    pub thresholds: Vec<T>,
    pub tpr: Vec<f64>,
    pub fpr: Vec<f64>,
    pub accuracy: Vec<f64>,
}

/// Candidate thresholds are a sentinel below the minimum, the midpoints
/// between consecutive distinct values, and a sentinel above the maximum.
pub fn roc_curve<T: Scalar>(values: &[T], labels: &[u8]) -> Result<RocCurve<T>> {
    if values.len() != labels.len() {
        return Err(Error::LengthMismatch(values.len(), labels.len()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let pos_total = labels.iter().filter(|&&l| l == 1).count();
    let neg_total = labels.len() - pos_total;
    if pos_total == 0 || neg_total == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());

    // Distinct values with their class counts, ascending.
    let mut uniq: Vec<(T, usize, usize)> = Vec::new();
    for &i in &order {
        let (v, l) = (values[i], labels[i]);
        match uniq.last_mut() {
            Some(last) if last.0 == v => {
                if l == 1 {
                    last.1 += 1
                } else {
                    last.2 += 1
                }
            }
            _ => uniq.push((v, usize::from(l == 1), usize::from(l != 1))),
        }
    }

    let n = labels.len() as f64;
    let (pt, nt) = (pos_total as f64, neg_total as f64);
    let mut thresholds = Vec::with_capacity(uniq.len() + 1);
    thresholds.push(uniq[0].0 - T::one());
    for w in uniq.windows(2) {
        thresholds.push(w[0].0 + (w[1].0 - w[0].0) / T::c(2.0));
    }
    thresholds.push(uniq[uniq.len() - 1].0 + T::one());

    let mut tpr = Vec::with_capacity(thresholds.len());
    let mut fpr = Vec::with_capacity(thresholds.len());
    let mut accuracy = Vec::with_capacity(thresholds.len());
    // Above threshold j sit the distinct values j.. (all of them for j = 0).
    let (mut tp, mut fp) = (pos_total, neg_total);
    for j in 0..thresholds.len() {
        if j > 0 {
            tp -= uniq[j - 1].1;
            fp -= uniq[j - 1].2;
        }
        tpr.push(tp as f64 / pt);
        fpr.push(fp as f64 / nt);
        accuracy.push((tp + neg_total - fp) as f64 / n);
    }
    Ok(RocCurve {
        thresholds,
        tpr,
        fpr,
        accuracy,
    })
}

/// Threshold with the highest accuracy; the lowest such threshold on ties.
pub fn optimal_cutoff<T: Scalar>(roc: &RocCurve<T>) -> T {
    let mut best = 0;
    for (j, &a) in roc.accuracy.iter().enumerate() {
        if a > roc.accuracy[best] {
            best = j;
        }
    }
    roc.thresholds[best]
}

/// Tissue-pixel values and binary labels (1 = tumor) pooled over slices.
pub fn pooled_tissue_pixels<T: Scalar>(slices: &[&LabeledSlice<T>]) -> (Vec<T>, Vec<u8>) {
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for s in slices {
        Zip::from(s.image.values()).and(&s.labels).for_each(|&v, &l| {
            if l.is_tissue() {
                values.push(v);
                labels.push(u8::from(l == Label::Tumor));
            }
        });
    }
    (values, labels)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

/// Ratios with a zero denominator are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub fnr: Option<f64>,
    pub fpr: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ConfusionMatrix {
    pub fn add(&mut self, truth: u8, pred: u8) {
        match (truth == 1, pred == 1) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn from_predictions(truth: &[u8], pred: &[u8]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::LengthMismatch(truth.len(), pred.len()));
        }
        let mut cm = Self::default();
        truth.iter().zip(pred).for_each(|(&t, &p)| cm.add(t, p));
        Ok(cm)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn metrics(&self) -> Result<Metrics> {
        let total = self.total();
        if total == 0 {
            return Err(Error::EmptyMatrix);
        }
        let pos = self.tp + self.fn_;
        let neg = self.tn + self.fp;
        Ok(Metrics {
            accuracy: (self.tp + self.tn) as f64 / total as f64,
            sensitivity: ratio(self.tp, pos),
            specificity: ratio(self.tn, neg),
            fnr: ratio(self.fn_, pos),
            fpr: ratio(self.fp, neg),
        })
    }
}

/// Applies `ocp` to every tissue pixel. The mask is true where a tissue pixel
/// is called tumor; background and calibration pixels are never evaluated.
pub fn classify_pixels<T: Scalar>(slice: &LabeledSlice<T>, ocp: T) -> (Array2<bool>, ConfusionMatrix) {
    let mut cm = ConfusionMatrix::default();
    let mut mask = Array2::from_elem(slice.labels.dim(), false);
    Zip::from(&mut mask)
        .and(slice.image.values())
        .and(&slice.labels)
        .for_each(|m, &v, &l| {
            if l.is_tissue() {
                let pred = v >= ocp;
                *m = pred;
                cm.add(u8::from(l == Label::Tumor), u8::from(pred));
            }
        });
    (mask, cm)
}
