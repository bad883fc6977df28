use crate::matcore::Dense;
use crate::quality::dominant_rows;

/// Connectivity-stability stopping rule: counts consecutive iterations in
/// which every column of H keeps its dominant row.
#[derive(Debug, Clone, Default)]
pub struct ConnectivityStop {
    previous: Option<Vec<usize>>,
    unchanged: usize,
}

impl ConnectivityStop {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn unchanged(&self) -> usize {
        self.unchanged
    }

    /// Records the assignments of `h`; returns true once they have been
    /// unchanged for `window` consecutive calls. A window of 0 never stops.
    pub fn update(&mut self, h: &Dense, window: usize) -> bool {
        let now = dominant_rows(h);
        match &self.previous {
            Some(prev) if *prev == now => self.unchanged += 1,
            _ => self.unchanged = 0,
        }
        self.previous = Some(now);
        window > 0 && self.unchanged >= window
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stops_after_window_of_unchanged_calls() {
        let h = Dense::from_rows(&[[0.9, 0.1, 0.4], [0.1, 0.8, 0.6]]);
        let mut s = ConnectivityStop::new();
        assert!(!s.update(&h, 30));
        for call in 1..=30 {
            let stop = s.update(&h, 30);
            assert_eq!(s.unchanged(), call);
            assert_eq!(stop, call == 30);
        }
    }

    #[test]
    fn change_resets_counter() {
        let a = Dense::from_rows(&[[0.9, 0.1], [0.1, 0.8]]);
        let b = Dense::from_rows(&[[0.1, 0.1], [0.9, 0.8]]);
        let mut s = ConnectivityStop::new();
        for _ in 0..5 {
            s.update(&a, 30);
        }
        assert_eq!(s.unchanged(), 4);
        s.update(&b, 30);
        assert_eq!(s.unchanged(), 0);
    }

    #[test]
    fn zero_window_never_stops() {
        let h = Dense::from_rows(&[[1.0]]);
        let mut s = ConnectivityStop::new();
        assert!((0..100).all(|_| !s.update(&h, 0)));
    }

    #[test]
    fn ties_go_to_lowest_row() {
        assert_eq!(dominant_rows(&Dense::from_rows(&[[0.5, 0.2], [0.5, 0.7], [0.1, 0.7]])), vec![0, 1]);
    }
}
