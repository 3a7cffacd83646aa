//! Datasets, response matrices, margins and class-indicator vectors.

use std::borrow::Cow;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::{self, GrayImage, HaarFeature, IntegralImage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

/// Dense `rows × cols` real features, stored column-major so a single
/// feature across all examples is contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = vec![0.0; rows.len() * cols];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "feature vector length",
                    expected: cols,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                data[j * rows.len() + i] = v;
            }
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    fn select(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for j in 0..self.cols {
            let col = self.column(j);
            data.extend(idx.iter().map(|&i| col[i]));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }
}

/// Equal-sized grayscale windows with precomputed integral images. The Haar
/// feature list is shared between all subsets of one image collection.
#[derive(Clone, Debug)]
pub struct ImageSet {
    width: usize,
    height: usize,
    images: Vec<GrayImage>,
    integrals: Vec<IntegralImage>,
    features: Arc<[HaarFeature]>,
}

impl ImageSet {
    pub fn new(images: Vec<GrayImage>) -> Result<Self> {
        let first = images
            .first()
            .ok_or_else(|| Error::invalid("image set is empty"))?;
        let (width, height) = (first.width(), first.height());
        if width < 2 || height < 2 {
            return Err(Error::invalid("image windows must be at least 2x2"));
        }
        if let Some(bad) = images
            .iter()
            .find(|im| im.width() != width || im.height() != height)
        {
            return Err(Error::invalid(format!(
                "all windows must be {width}x{height}, found {}x{}",
                bad.width(),
                bad.height()
            )));
        }
        let integrals = images.iter().map(haar::integral).collect();
        Ok(Self {
            width,
            height,
            images,
            integrals,
            features: enumerate_shared(width, height),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn images(&self) -> &[GrayImage] {
        &self.images
    }

    pub fn features(&self) -> &[HaarFeature] {
        &self.features
    }

    fn value(&self, i: usize, j: usize) -> f64 {
        self.features[j].value_exact(&self.integrals[i]) as f64
    }

    fn select(&self, idx: &[usize]) -> Self {
        Self {
            width: self.width,
            height: self.height,
            images: idx.iter().map(|&i| self.images[i].clone()).collect(),
            integrals: idx.iter().map(|&i| self.integrals[i].clone()).collect(),
            features: Arc::clone(&self.features),
        }
    }
}

fn enumerate_shared(w: usize, h: usize) -> Arc<[HaarFeature]> {
    haar::enumerate_features(w, h).into()
}

#[derive(Clone, Debug)]
pub enum Samples {
    Features(FeatureMatrix),
    Images(ImageSet),
}

/// Labeled examples. Feature `j` of an image example is the value of the
/// `j`-th Haar feature in enumeration order.
#[derive(Clone, Debug)]
pub struct Dataset {
    samples: Samples,
    labels: Vec<Label>,
}

impl Dataset {
    pub fn new(samples: Samples, labels: Vec<Label>) -> Result<Self> {
        let n = match &samples {
            Samples::Features(f) => f.rows(),
            Samples::Images(s) => s.images.len(),
        };
        if n != labels.len() {
            return Err(Error::DimensionMismatch {
                what: "labels",
                expected: n,
                found: labels.len(),
            });
        }
        Ok(Self { samples, labels })
    }

    pub fn from_features(rows: &[Vec<f64>], labels: Vec<Label>) -> Result<Self> {
        Self::new(Samples::Features(FeatureMatrix::from_rows(rows)?), labels)
    }

    pub fn from_images(images: Vec<GrayImage>, labels: Vec<Label>) -> Result<Self> {
        Self::new(Samples::Images(ImageSet::new(images)?), labels)
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn num_positives(&self) -> usize {
        self.labels.iter().filter(|l| l.is_positive()).count()
    }

    pub fn num_negatives(&self) -> usize {
        self.len() - self.num_positives()
    }

    pub fn num_features(&self) -> usize {
        match &self.samples {
            Samples::Features(f) => f.cols(),
            Samples::Images(s) => s.features.len(),
        }
    }

    pub fn feature_value(&self, i: usize, j: usize) -> f64 {
        match &self.samples {
            Samples::Features(f) => f.get(i, j),
            Samples::Images(s) => s.value(i, j),
        }
    }

    /// Feature `j` over all examples. Borrowed for feature matrices, computed
    /// from the integral images otherwise.
    pub fn feature_column(&self, j: usize) -> Cow<'_, [f64]> {
        match &self.samples {
            Samples::Features(f) => Cow::Borrowed(f.column(j)),
            Samples::Images(s) => Cow::Owned((0..self.len()).map(|i| s.value(i, j)).collect()),
        }
    }

    /// Check the conditions every trainer relies on.
    pub fn validate_for_training(&self) -> Result<()> {
        if self.num_positives() == 0 || self.num_negatives() == 0 {
            return Err(Error::invalid(format!(
                "training needs both classes (m1 = {}, m2 = {})",
                self.num_positives(),
                self.num_negatives()
            )));
        }
        if self.num_features() == 0 {
            return Err(Error::invalid("dataset has no features"));
        }
        Ok(())
    }

    /// Examples at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Dataset {
        let samples = match &self.samples {
            Samples::Features(f) => Samples::Features(f.select(idx)),
            Samples::Images(s) => Samples::Images(s.select(idx)),
        };
        Dataset {
            samples,
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn indices_with(&self, label: Label) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.labels[i] == label)
            .collect()
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        let samples = match (&self.samples, &other.samples) {
            (Samples::Features(a), Samples::Features(b)) => {
                if a.cols() != b.cols() {
                    return Err(Error::DimensionMismatch {
                        what: "feature dimension",
                        expected: a.cols(),
                        found: b.cols(),
                    });
                }
                let rows = a.rows() + b.rows();
                let mut data = Vec::with_capacity(rows * a.cols());
                for j in 0..a.cols() {
                    data.extend_from_slice(a.column(j));
                    data.extend_from_slice(b.column(j));
                }
                Samples::Features(FeatureMatrix {
                    rows,
                    cols: a.cols(),
                    data,
                })
            }
            (Samples::Images(a), Samples::Images(b)) => {
                if (a.width, a.height) != (b.width, b.height) {
                    return Err(Error::invalid(
                        "cannot concatenate windows of different sizes",
                    ));
                }
                let mut images = a.images.clone();
                images.extend(b.images.iter().cloned());
                let mut integrals = a.integrals.clone();
                integrals.extend(b.integrals.iter().cloned());
                Samples::Images(ImageSet {
                    width: a.width,
                    height: a.height,
                    images,
                    integrals,
                    features: Arc::clone(&a.features),
                })
            }
            _ => return Err(Error::invalid("cannot mix feature and image datasets")),
        };
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Ok(Dataset { samples, labels })
    }
}

/// Reorder so that all positives come first, stable within each class.
/// `permutation[k]` is the caller's index of the example now at `k`.
pub fn order_by_label(dataset: &Dataset) -> (Dataset, Vec<usize>) {
    let mut perm = dataset.indices_with(Label::Positive);
    perm.extend(dataset.indices_with(Label::Negative));
    (dataset.select(&perm), perm)
}

/// Weak-classifier outputs `H` and label-signed outputs `A = diag(y) H`,
/// column-major, one column per weak classifier in acquisition order.
#[derive(Clone, Debug)]
pub struct ResponseMatrix {
    signs: Vec<f64>,
    h: Vec<f64>,
    a: Vec<f64>,
    cols: usize,
}

impl ResponseMatrix {
    pub fn new(labels: &[Label]) -> Self {
        Self {
            signs: labels.iter().map(|l| l.sign()).collect(),
            h: Vec::new(),
            a: Vec::new(),
            cols: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.signs.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn push_column(&mut self, h_col: &[f64]) -> Result<()> {
        if h_col.len() != self.rows() {
            return Err(Error::DimensionMismatch {
                what: "response column",
                expected: self.rows(),
                found: h_col.len(),
            });
        }
        if let Some(bad) = h_col.iter().find(|v| **v != 1.0 && **v != -1.0) {
            return Err(Error::invalid(format!(
                "weak-classifier output {bad} is not +-1"
            )));
        }
        self.h.extend_from_slice(h_col);
        self.a
            .extend(h_col.iter().zip(&self.signs).map(|(h, y)| h * y));
        self.cols += 1;
        Ok(())
    }

    pub fn h_column(&self, j: usize) -> &[f64] {
        let m = self.rows();
        &self.h[j * m..(j + 1) * m]
    }

    pub fn a_column(&self, j: usize) -> &[f64] {
        let m = self.rows();
        &self.a[j * m..(j + 1) * m]
    }

    pub fn h(&self, i: usize, j: usize) -> f64 {
        self.h[j * self.rows() + i]
    }

    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[j * self.rows() + i]
    }

    /// `A' v`.
    pub fn a_transpose_times(&self, v: &[f64]) -> Vec<f64> {
        (0..self.cols).map(|j| dot(self.a_column(j), v)).collect()
    }
}

/// `ρ = A w`, ordered like the rows of `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginVector(pub Vec<f64>);

impl MarginVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn margins(a_matrix: &ResponseMatrix, w: &[f64]) -> Result<MarginVector> {
    if w.len() != a_matrix.cols() {
        return Err(Error::DimensionMismatch {
            what: "weight vector",
            expected: a_matrix.cols(),
            found: w.len(),
        });
    }
    let mut rho = vec![0.0; a_matrix.rows()];
    for (j, &wj) in w.iter().enumerate() {
        if wj != 0.0 {
            for (r, a) in rho.iter_mut().zip(a_matrix.a_column(j)) {
                *r += wj * a;
            }
        }
    }
    Ok(MarginVector(rho))
}

/// Class indicator vectors: `e1_i = 1/m1` on positives, `e2_i = 1/m2` on
/// negatives, `e = e1 + e2`.
#[derive(Clone, Debug)]
pub struct ClassVector {
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub e: Vec<f64>,
}

impl ClassVector {
    pub fn new(labels: &[Label]) -> Result<Self> {
        let m1 = labels.iter().filter(|l| l.is_positive()).count();
        let m2 = labels.len() - m1;
        if m1 == 0 || m2 == 0 {
            return Err(Error::invalid("class vector needs both classes"));
        }
        let (p, q) = (1.0 / m1 as f64, 1.0 / m2 as f64);
        let e1: Vec<f64> = labels
            .iter()
            .map(|l| if l.is_positive() { p } else { 0.0 })
            .collect();
        let e2: Vec<f64> = labels
            .iter()
            .map(|l| if l.is_positive() { 0.0 } else { q })
            .collect();
        let e = e1.iter().zip(&e2).map(|(a, b)| a + b).collect();
        Ok(Self { e1, e2, e })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SeededRng, Stream};
    use proptest::prelude::*;

    fn labels_from(signs: &[i32]) -> Vec<Label> {
        signs
            .iter()
            .map(|&s| {
                if s > 0 {
                    Label::Positive
                } else {
                    Label::Negative
                }
            })
            .collect()
    }

    fn toy(signs: &[i32]) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..signs.len()).map(|i| vec![i as f64]).collect();
        Dataset::from_features(&rows, labels_from(signs)).unwrap()
    }

    #[test]
    fn single_positive_moves_to_front() {
        let (d, perm) = order_by_label(&toy(&[-1, 1, -1]));
        assert_eq!(perm, vec![1, 0, 2]);
        assert_eq!(d.labels(), &labels_from(&[1, -1, -1])[..]);
        assert_eq!(d.feature_value(0, 0), 1.0);
    }

    #[test]
    fn ordered_input_is_unchanged() {
        let (d, perm) = order_by_label(&toy(&[1, 1, -1, -1]));
        assert_eq!(perm, vec![0, 1, 2, 3]);
        assert_eq!(d.feature_column(0).as_ref(), &[0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn ordering_is_stable() {
        let signs = [-1, 1, -1, -1, 1, -1, 1, -1];
        let (d, perm) = order_by_label(&toy(&signs));
        assert_eq!(&perm[..3], &[1, 4, 6]);
        assert_eq!(&perm[3..], &[0, 2, 3, 5, 7]);
        assert!(d.labels()[..3].iter().all(|l| l.is_positive()));
    }

    #[test]
    fn margins_of_single_column() {
        let mut a = ResponseMatrix::new(&labels_from(&[1, -1, 1]));
        a.push_column(&[1.0, 1.0, -1.0]).unwrap();
        assert_eq!(margins(&a, &[1.0]).unwrap().0, a.a_column(0).to_vec());
        assert_eq!(margins(&a, &[0.0]).unwrap().0, vec![0.0; 3]);
        assert!(margins(&a, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn margins_match_scalar_loop() {
        let mut rng = SeededRng::new(5, Stream::Tests);
        let labels = labels_from(&[1, 1, -1, -1]);
        let mut a = ResponseMatrix::new(&labels);
        for _ in 0..3 {
            let col: Vec<f64> = (0..4)
                .map(|_| if rng.bernoulli(0.5) { 1.0 } else { -1.0 })
                .collect();
            a.push_column(&col).unwrap();
        }
        let w: Vec<f64> = (0..3).map(|_| rng.uniform()).collect();
        let rho = margins(&a, &w).unwrap();
        for (i, label) in labels.iter().enumerate() {
            let s: f64 = w
                .iter()
                .enumerate()
                .map(|(j, wj)| label.sign() * a.h(i, j) * wj)
                .sum();
            assert!((rho.0[i] - s).abs() < 1e-15);
        }
    }

    #[test]
    fn push_rejects_bad_columns() {
        let mut a = ResponseMatrix::new(&labels_from(&[1, -1]));
        assert!(a.push_column(&[1.0]).is_err());
        assert!(a.push_column(&[1.0, 0.5]).is_err());
        a.push_column(&[1.0, 1.0]).unwrap();
        a.push_column(&[-1.0, 1.0]).unwrap();
        assert_eq!(a.a_column(0), &[1.0, -1.0]);
        assert_eq!(a.a_column(1), &[-1.0, -1.0]);
    }

    #[test]
    fn class_vector_sums() {
        let cv = ClassVector::new(&labels_from(&[1, -1, -1, 1, -1])).unwrap();
        assert!((cv.e1.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((cv.e2.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(cv.e1[0], 0.5);
        assert_eq!(cv.e2[1], 1.0 / 3.0);
        assert_eq!(cv.e[2], 1.0 / 3.0);
        assert!(ClassVector::new(&labels_from(&[1, 1])).is_err());
    }

    #[test]
    fn concat_and_select() {
        let a = toy(&[1, -1]);
        let b = toy(&[-1]);
        let c = a.concat(&b).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.feature_column(0).as_ref(), &[0.0, 1.0, 0.0]);
        let s = c.select(&[2, 0]);
        assert_eq!(s.labels(), &labels_from(&[-1, 1])[..]);
    }

    proptest! {
        #[test]
        fn ordering_is_idempotent(signs in proptest::collection::vec(prop_oneof![Just(1), Just(-1)], 1..40)) {
            let (once, _) = order_by_label(&toy(&signs));
            let (twice, perm) = order_by_label(&once);
            prop_assert_eq!(perm, (0..signs.len()).collect::<Vec<_>>());
            let (a, b) = (once.feature_column(0), twice.feature_column(0));
            prop_assert_eq!(a.as_ref(), b.as_ref());
        }

        #[test]
        fn margins_are_linear(
            cols in proptest::collection::vec(proptest::collection::vec(prop_oneof![Just(1.0), Just(-1.0)], 6), 1..6),
            alpha in -3.0..3.0f64,
            beta in -3.0..3.0f64,
            seed in 0u64..1000,
        ) {
            let mut a = ResponseMatrix::new(&labels_from(&[1, 1, 1, -1, -1, -1]));
            for c in &cols {
                a.push_column(c).unwrap();
            }
            let mut rng = SeededRng::new(seed, Stream::Tests);
            let u: Vec<f64> = cols.iter().map(|_| rng.normal()).collect();
            let v: Vec<f64> = cols.iter().map(|_| rng.normal()).collect();
            let combo: Vec<f64> = u.iter().zip(&v).map(|(x, y)| alpha * x + beta * y).collect();
            let lhs = margins(&a, &combo).unwrap().0;
            let (mu, mv) = (margins(&a, &u).unwrap().0, margins(&a, &v).unwrap().0);
            for i in 0..6 {
                let rhs = alpha * mu[i] + beta * mv[i];
                prop_assert!((lhs[i] - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
            }
        }
    }
}
