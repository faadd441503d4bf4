use super::rng::SeededRng;
use super::IhardsDataset;
use crate::error::{Error, Result};
use crate::ingest::NUM_CLASSES;

/// Per-class random split.
///
/// Each class contributes `floor(count * test_fraction)` rows to the test
/// side (so odd counts round toward train). Both halves keep the input's
/// relative row order.
pub fn stratified_split(
    data: &IhardsDataset,
    test_fraction: f64,
    rng: &mut SeededRng,
) -> Result<(IhardsDataset, IhardsDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Param(format!(
            "test_fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let mut by_class: [Vec<usize>; NUM_CLASSES] = Default::default();
    for (i, &l) in data.labels.iter().enumerate() {
        by_class[l as usize].push(i);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, rows) in by_class.iter_mut().enumerate() {
        if rows.is_empty() {
            return Err(Error::Structural(format!("class {c} has no rows to split")));
        }
        let n_test = test_count(rows.len(), test_fraction);
        rng.shuffle(rows);
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((data.select_rows(&train), data.select_rows(&test)))
}

pub(crate) fn test_count(count: usize, fraction: f64) -> usize {
    // tolerate representation error such as 0.29 * 100 = 28.999...
    ((count as f64 * fraction) + 1e-9).floor() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn balanced(per_class: usize) -> IhardsDataset {
        let n = per_class * NUM_CLASSES;
        let feats = Matrix::from_vec(n, 1, (0..n).map(|i| i as f32).collect()).unwrap();
        let labels = (0..n).map(|i| (i % NUM_CLASSES) as u8).collect();
        IhardsDataset::new(feats, labels, 0).unwrap()
    }

    #[test]
    fn ten_rows_split_evenly() {
        let (tr, te) = stratified_split(&balanced(2), 0.5, &mut SeededRng::new(1)).unwrap();
        assert_eq!(tr.per_class_counts(), [1; 5]);
        assert_eq!(te.per_class_counts(), [1; 5]);
    }

    #[test]
    fn odd_counts_round_toward_train() {
        // counting oracle: 3 rows at 0.5 -> 1.5 test rows -> 1 test, 2 train
        let (tr, te) = stratified_split(&balanced(3), 0.5, &mut SeededRng::new(1)).unwrap();
        assert_eq!(tr.per_class_counts(), [2; 5]);
        assert_eq!(te.per_class_counts(), [1; 5]);
    }

    #[test]
    fn partition_of_rows() {
        let data = balanced(37);
        let (tr, te) = stratified_split(&data, 0.3, &mut SeededRng::new(9)).unwrap();
        let mut ids: Vec<u32> = tr.features.as_slice().iter().chain(te.features.as_slice())
            .map(|&v| v as u32).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..data.rows() as u32).collect::<Vec<_>>());
    }

    #[test]
    fn full_scale_counts() {
        assert_eq!(test_count(420_000, 0.5), 210_000);
        assert_eq!(5 * (420_000 - test_count(420_000, 0.5)), 1_050_000);
        assert_eq!(test_count(100, 0.29), 29);
    }

    #[test]
    fn empty_class_is_structural() {
        let feats = Matrix::from_vec(2, 1, vec![0.0f32, 1.0]).unwrap();
        let data = IhardsDataset::new(feats, vec![0, 1], 0).unwrap();
        assert!(matches!(stratified_split(&data, 0.5, &mut SeededRng::new(0)), Err(Error::Structural(_))));
    }

    #[test]
    fn bad_fraction() {
        assert!(stratified_split(&balanced(2), 1.0, &mut SeededRng::new(0)).is_err());
        assert!(stratified_split(&balanced(2), 0.0, &mut SeededRng::new(0)).is_err());
    }
}
