//! Output-distribution statistics over generated corpora.
//!
//! Tallies target characters overall, at the first output position, and at
//! the position immediately before the end marker. The terminal end marker
//! itself is excluded from the tallies (it appears exactly once per target,
//! so including it would only measure target length).

use std::collections::BTreeMap;

/// Character guessed uniformly over the 12-symbol program output alphabet.
pub const PROGRAM_GUESS_BASELINE: f64 = 1.0 / 12.0;
/// Uniform guess over the 11-symbol memorization output alphabet.
pub const MEMORIZE_GUESS_BASELINE: f64 = 1.0 / 11.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PositionClass {
    First,
    Interior,
    PreTerminal,
    All,
}

/// Per-position-class character counts over a corpus of targets.
#[derive(Debug, Clone, Default)]
pub struct CharDistribution {
    counts: BTreeMap<(PositionClass, char), u64>,
    totals: BTreeMap<PositionClass, u64>,
    pub samples: u64,
}

impl CharDistribution {
    fn add(&mut self, class: PositionClass, c: char) {
        *self.counts.entry((class, c)).or_insert(0) += 1;
        *self.totals.entry(class).or_insert(0) += 1;
    }

    pub fn count(&self, class: PositionClass, c: char) -> u64 {
        self.counts.get(&(class, c)).copied().unwrap_or(0)
    }

    pub fn total(&self, class: PositionClass) -> u64 {
        self.totals.get(&class).copied().unwrap_or(0)
    }

    pub fn frequency(&self, class: PositionClass, c: char) -> f64 {
        let total = self.total(class);
        if total == 0 {
            return 0.0;
        }
        self.count(class, c) as f64 / total as f64
    }

    /// Characters of a class ordered by descending frequency.
    pub fn ranked(&self, class: PositionClass) -> Vec<(char, f64)> {
        let total = self.total(class).max(1) as f64;
        let mut v: Vec<(char, f64)> = self
            .counts
            .iter()
            .filter(|((cl, _), _)| *cl == class)
            .map(|(&(_, c), &n)| (c, n as f64 / total))
            .collect();
        v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        v
    }

    /// Human-readable table with uniform-guess baselines.
    pub fn report(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "samples: {}", self.samples);
        let _ = writeln!(
            out,
            "uniform guess baselines: program 1/12 = {PROGRAM_GUESS_BASELINE:.4}, memorize 1/11 = {MEMORIZE_GUESS_BASELINE:.4}"
        );
        for (class, name) in [
            (PositionClass::All, "all"),
            (PositionClass::First, "first"),
            (PositionClass::Interior, "interior"),
            (PositionClass::PreTerminal, "pre-terminal"),
        ] {
            let _ = writeln!(out, "[{name}] total {}", self.total(class));
            for (c, f) in self.ranked(class).into_iter().take(5) {
                let _ = writeln!(out, "  {c:?}  {f:.4}");
            }
        }
        out
    }

    /// CSV rows: class,character,count,frequency.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let mut out = String::from("class,character,count,frequency\n");
        for (class, name) in [
            (PositionClass::All, "all"),
            (PositionClass::First, "first"),
            (PositionClass::Interior, "interior"),
            (PositionClass::PreTerminal, "pre_terminal"),
        ] {
            for (c, f) in self.ranked(class) {
                let escaped = if c == '\n' { "\\n".to_string() } else { c.to_string() };
                let _ = writeln!(
                    out,
                    "{name},{escaped},{},{f:.6}",
                    self.count(class, c)
                );
            }
        }
        out
    }
}

/// Tallies target characters of `targets` (body only, end marker excluded).
pub fn analyze_targets<'a>(targets: impl IntoIterator<Item = &'a str>) -> CharDistribution {
    let mut dist = CharDistribution::default();
    for target in targets {
        let body: Vec<char> = target
            .strip_suffix(crate::encode::END_MARKER)
            .unwrap_or(target)
            .chars()
            .collect();
        if body.is_empty() {
            continue;
        }
        dist.samples += 1;
        let last = body.len() - 1;
        for (i, &c) in body.iter().enumerate() {
            dist.add(PositionClass::All, c);
            if i == 0 {
                dist.add(PositionClass::First, c);
            }
            if i == last {
                dist.add(PositionClass::PreTerminal, c);
            }
            if i != 0 && i != last {
                dist.add(PositionClass::Interior, c);
            }
        }
    }
    dist
}

/// Tallies target characters of a sample corpus.
pub fn analyze(samples: &[crate::progsynth::Sample]) -> CharDistribution {
    analyze_targets(samples.iter().map(|s| s.target.as_str()))
}
