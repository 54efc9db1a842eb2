use super::Region;

/// Fractions of classes (by descending count) tagged head and tail; the
/// rest, including any rounding remainder, is med.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSplit {
    pub head: f64,
    pub tail: f64,
}

impl Default for RegionSplit {
    fn default() -> Self {
        Self { head: 1.0 / 3.0, tail: 1.0 / 3.0 }
    }
}

/// Tercile split by descending count; equal counts are ordered by class
/// index, lower index first.
pub fn partition_regions(class_counts: &[usize]) -> Vec<Region> {
    partition_regions_with(class_counts, RegionSplit::default())
}

pub fn partition_regions_with(class_counts: &[usize], split: RegionSplit) -> Vec<Region> {
    let n = class_counts.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| class_counts[b].cmp(&class_counts[a]).then(a.cmp(&b)));
    // small epsilon so 1/3 of 9 is 3, not 2
    let n_head = ((n as f64 * split.head) + 1e-9).floor() as usize;
    let n_tail = ((n as f64 * split.tail) + 1e-9).floor() as usize;
    let mut regions = vec![Region::Med; n];
    for (rank, &class) in order.iter().enumerate() {
        regions[class] = if rank < n_head {
            Region::Head
        } else if rank >= n - n_tail.min(n - n_head) {
            Region::Tail
        } else {
            Region::Med
        };
    }
    regions
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tally(r: &[Region]) -> (usize, usize, usize) {
        (
            r.iter().filter(|&&x| x == Region::Head).count(),
            r.iter().filter(|&&x| x == Region::Med).count(),
            r.iter().filter(|&&x| x == Region::Tail).count(),
        )
    }

    #[test]
    fn nine_classes_split_evenly() {
        let counts: Vec<usize> = (0..9).map(|c| 100 - c * 10).collect();
        assert_eq!(tally(&partition_regions(&counts)), (3, 3, 3));
    }

    #[test]
    fn remainder_goes_to_med() {
        let counts: Vec<usize> = (0..10).map(|c| 100 - c).collect();
        let r = partition_regions(&counts);
        assert_eq!(tally(&r), (3, 4, 3));
        assert_eq!(&r[..3], &[Region::Head; 3]);
        assert_eq!(&r[7..], &[Region::Tail; 3]);
    }

    #[test]
    fn ties_fall_back_to_class_index() {
        let r = partition_regions(&[5; 6]);
        assert_eq!(r, vec![Region::Head, Region::Head, Region::Med, Region::Med, Region::Tail, Region::Tail]);
    }

    #[test]
    fn order_follows_counts_not_index() {
        let r = partition_regions(&[1, 50, 9]);
        assert_eq!(r, vec![Region::Tail, Region::Head, Region::Med]);
    }
}
