use super::spectrogram::MagnitudeSpectrogram;
use crate::error::{Error, Result};

/// Spectrogram axis along which a 1-D filter slides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Across frames, for a fixed bin (horizontal).
    Time,
    /// Across bins, within one frame (vertical).
    Frequency,
}

/// Sliding median of odd `length` along `axis`.
///
/// At the edges the window is truncated to the available neighbours; an
/// even-sized truncated window takes the mean of its two middle values.
pub fn median_filter_axis(
    mag: &MagnitudeSpectrogram,
    axis: Axis,
    length: usize,
) -> Result<MagnitudeSpectrogram> {
    if length == 0 || length.is_multiple_of(2) {
        return Err(Error::config(format!(
            "median filter length must be odd and positive, got {length}"
        )));
    }
    let (frames, bins) = (mag.num_frames(), mag.num_bins());
    let src = mag.values();
    let mut out = vec![0.0; src.len()];
    let mut line = Vec::new();
    let mut scratch = Vec::with_capacity(length);
    match axis {
        Axis::Time => {
            for k in 0..bins {
                line.clear();
                line.extend((0..frames).map(|m| src[m * bins + k]));
                for (m, v) in median_line(&line, length, &mut scratch).into_iter().enumerate() {
                    out[m * bins + k] = v;
                }
            }
        }
        Axis::Frequency => {
            for m in 0..frames {
                let row = &src[m * bins..(m + 1) * bins];
                out[m * bins..(m + 1) * bins]
                    .copy_from_slice(&median_line(row, length, &mut scratch));
            }
        }
    }
    Ok(MagnitudeSpectrogram::from_parts_unchecked(
        out,
        frames,
        mag.framing(),
    ))
}

fn median_line(line: &[f64], length: usize, scratch: &mut Vec<f64>) -> Vec<f64> {
    let half = length / 2;
    let n = line.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            scratch.clear();
            scratch.extend_from_slice(&line[lo..hi]);
            median_in_place(scratch)
        })
        .collect()
}

fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    let mid = n / 2;
    let (_, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::spectrogram::Framing;
    use proptest::prelude::*;

    fn framing(bins: usize) -> Framing {
        Framing {
            window_size: 2 * (bins - 1),
            hop_size: 1,
            sample_rate: 1,
        }
    }

    /// Rows are frames.
    fn grid(rows: &[Vec<f64>]) -> MagnitudeSpectrogram {
        MagnitudeSpectrogram::from_rows(rows, framing(rows[0].len())).unwrap()
    }

    #[test]
    fn rejects_even_or_zero_length() {
        let g = grid(&[vec![1.0, 2.0, 3.0]]);
        assert!(median_filter_axis(&g, Axis::Time, 0).is_err());
        assert!(median_filter_axis(&g, Axis::Time, 4).is_err());
    }

    #[test]
    fn length_one_is_identity() {
        let g = grid(&[vec![1.0, 5.0, 2.0], vec![0.0, 3.0, 9.0]]);
        for axis in [Axis::Time, Axis::Frequency] {
            assert_eq!(median_filter_axis(&g, axis, 1).unwrap(), g);
        }
    }

    #[test]
    fn isolated_spike_removed_along_time() {
        // five frames, one bin: the time row [0, 0, 9, 0, 0]
        let g = grid(&[vec![0.0], vec![0.0], vec![9.0], vec![0.0], vec![0.0]]);
        let f = median_filter_axis(&g, Axis::Time, 3).unwrap();
        assert_eq!(f.values(), &[0.0; 5]);
    }

    #[test]
    fn frequency_axis_filters_within_frame() {
        let g = grid(&[vec![0.0, 0.0, 9.0, 0.0, 0.0], vec![1.0, 1.0, 1.0, 1.0, 1.0]]);
        let f = median_filter_axis(&g, Axis::Frequency, 3).unwrap();
        assert_eq!(f.frame(0), &[0.0; 5]);
        assert_eq!(f.frame(1), &[1.0; 5]);
    }

    #[test]
    fn truncated_edges() {
        let g = grid(&[vec![1.0, 2.0, 3.0, 4.0, 10.0]]);
        let f = median_filter_axis(&g, Axis::Frequency, 5).unwrap();
        // windows: [1,2,3], [1,2,3,4], [1..10], [2,3,4,10], [3,4,10]
        assert_eq!(f.frame(0), &[2.0, 2.5, 3.0, 3.5, 4.0]);
    }

    proptest! {
        #[test]
        fn constant_grid_unchanged(c in 0.0f64..10.0, frames in 1usize..8, bins in 1usize..8, len in 0usize..4) {
            let rows = vec![vec![c; bins]; frames];
            let g = grid(&rows);
            for axis in [Axis::Time, Axis::Frequency] {
                let f = median_filter_axis(&g, axis, 2 * len + 1).unwrap();
                prop_assert_eq!(f.values(), g.values());
            }
        }

        #[test]
        fn monotone_input_stays_monotone(mut row in prop::collection::vec(0.0f64..100.0, 2..40), len in 0usize..6) {
            row.sort_by(f64::total_cmp);
            let g = grid(&[row]);
            let f = median_filter_axis(&g, Axis::Frequency, 2 * len + 1).unwrap();
            prop_assert!(f.frame(0).windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
