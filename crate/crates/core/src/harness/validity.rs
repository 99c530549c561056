//! Stick-slip transition validity: a trajectory is valid when its per-contact
//! regime sequences, after merging chatter shorter than the minimum segment
//! length, list the same regime kinds in the same order as the oracle's.

use crate::stepping::Trajectory;

/// Minimum regime duration in steps; shorter segments are treated as
/// numerical chatter and absorbed into their neighbour.
pub const MIN_SEGMENT_STEPS: usize = 5;

/// Run-length encodes `codes` and absorbs every segment shorter than
/// `min_len` into its predecessor (or successor at the start), coalescing
/// equal neighbours until stable.
pub fn reduced_segments(codes: &[u8], min_len: usize) -> Vec<u8> {
    let mut runs: Vec<(u8, usize)> = Vec::new();
    for &c in codes {
        match runs.last_mut() {
            Some((kind, len)) if *kind == c => *len += 1,
            _ => runs.push((c, 1)),
        }
    }
    loop {
        if runs.len() <= 1 {
            break;
        }
        let Some(idx) = runs.iter().position(|&(_, len)| len < min_len) else {
            break;
        };
        let (_, len) = runs.remove(idx);
        if idx > 0 {
            runs[idx - 1].1 += len;
        } else {
            runs[0].1 += len;
        }
        // coalesce equal neighbours created by the removal
        let mut i = 1;
        while i < runs.len() {
            if runs[i].0 == runs[i - 1].0 {
                runs[i - 1].1 += runs[i].1;
                runs.remove(i);
            } else {
                i += 1;
            }
        }
    }
    runs.into_iter().map(|(kind, _)| kind).collect()
}

/// True iff every contact's reduced regime-kind sequence matches the
/// oracle's. Both trajectories are reduced on their own grids.
pub fn validity_check(traj: &Trajectory, oracle: &Trajectory) -> bool {
    if traj.n_contacts() != oracle.n_contacts() {
        return false;
    }
    (0..traj.n_contacts()).all(|j| {
        reduced_segments(&traj.regime_codes(j), MIN_SEGMENT_STEPS)
            == reduced_segments(&oracle.regime_codes(j), MIN_SEGMENT_STEPS)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chatter_is_absorbed() {
        let mut codes = vec![0u8; 40];
        codes.extend(vec![1u8; 3]); // 3-step blip
        codes.extend(vec![0u8; 40]);
        codes.extend(vec![1u8; 30]);
        assert_eq!(reduced_segments(&codes, 5), vec![0, 1]);
    }

    #[test]
    fn leading_fragment_merges_forward() {
        let mut codes = vec![1u8; 2];
        codes.extend(vec![0u8; 30]);
        assert_eq!(reduced_segments(&codes, 5), vec![0]);
    }

    #[test]
    fn genuine_alternation_is_preserved() {
        let mut codes = Vec::new();
        for _ in 0..4 {
            codes.extend(vec![0u8; 20]);
            codes.extend(vec![1u8; 50]);
        }
        assert_eq!(reduced_segments(&codes, 5), vec![0, 1, 0, 1, 0, 1, 0, 1]);
    }
}
