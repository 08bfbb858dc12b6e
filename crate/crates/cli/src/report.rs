//! Verdict rows, deterministic ordering, and the two output formats.

use std::fmt;

/// Fixed tag vocabulary; variant order is the report ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Tag {
    Eq1,
    Thm1_1,
    RankThm,
    Eq2,
    DualThm,
    UniqueFunctional,
    OrthLemma,
    KernelLemma,
    Lem1_3,
    Lem1_4,
    Lem1_5,
    Eq3,
    Thm2_2,
    Thm2_5i,
    Thm2_5ii,
}

pub const ALL_TAGS: [Tag; 15] = [
    Tag::Eq1,
    Tag::Thm1_1,
    Tag::RankThm,
    Tag::Eq2,
    Tag::DualThm,
    Tag::UniqueFunctional,
    Tag::OrthLemma,
    Tag::KernelLemma,
    Tag::Lem1_3,
    Tag::Lem1_4,
    Tag::Lem1_5,
    Tag::Eq3,
    Tag::Thm2_2,
    Tag::Thm2_5i,
    Tag::Thm2_5ii,
];

impl Tag {
    pub fn label(self) -> &'static str {
        match self {
            Tag::Eq1 => "Eq1",
            Tag::Thm1_1 => "Thm1.1",
            Tag::RankThm => "RankThm",
            Tag::Eq2 => "Eq2",
            Tag::DualThm => "DualThm",
            Tag::UniqueFunctional => "UniqueFunctional",
            Tag::OrthLemma => "OrthLemma",
            Tag::KernelLemma => "KernelLemma",
            Tag::Lem1_3 => "Lem1.3",
            Tag::Lem1_4 => "Lem1.4",
            Tag::Lem1_5 => "Lem1.5",
            Tag::Eq3 => "Eq3",
            Tag::Thm2_2 => "Thm2.2",
            Tag::Thm2_5i => "Thm2.5i",
            Tag::Thm2_5ii => "Thm2.5ii",
        }
    }

    pub fn from_label(s: &str) -> Option<Tag> {
        ALL_TAGS.iter().copied().find(|t| t.label() == s)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Skip,
}

impl Verdict {
    fn word(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Skip => "skip",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Row {
    pub tag: Tag,
    /// position of the originating check request (or fuzz trial)
    pub index: usize,
    pub subject: String,
    pub verdict: Verdict,
    /// witness for failures, reason for skips, summary for passes
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub seed: u64,
    pub rows: Vec<Row>,
    pub elapsed_ms: u128,
}

impl Report {
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| (a.tag, a.index).cmp(&(b.tag, b.index)));
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.verdict != Verdict::Fail)
    }

    /// Stable key-value serialization; byte-identical for equal (doc, seed).
    pub fn structured(&self) -> String {
        let mut out = String::new();
        out.push_str("report-version 1\n");
        out.push_str(&format!("seed {}\n", self.seed));
        out.push_str(&format!("rows {}\n", self.rows.len()));
        for r in &self.rows {
            out.push_str(&format!(
                "row tag={} index={} subject={} verdict={} detail={}\n",
                r.tag,
                r.index,
                escape(&r.subject),
                r.verdict.word(),
                escape(&r.detail)
            ));
        }
        let (p, f, s) = self.counts();
        out.push_str(&format!("summary pass={p} fail={f} skip={s}\n"));
        out
    }

    pub fn human(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("seed {}\n", self.seed));
        out.push_str(&format!(
            "{:<17} {:<6} {:<8} {:<28} detail\n",
            "tag", "index", "verdict", "subject"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<17} {:<6} {:<8} {:<28} {}\n",
                r.tag.label(),
                r.index,
                r.verdict.word(),
                r.subject,
                r.detail
            ));
        }
        let (p, f, s) = self.counts();
        out.push_str(&format!(
            "{p} passed, {f} failed, {s} skipped in {} ms\n",
            self.elapsed_ms
        ));
        out
    }

    fn counts(&self) -> (usize, usize, usize) {
        let p = self.rows.iter().filter(|r| r.verdict == Verdict::Pass).count();
        let f = self.rows.iter().filter(|r| r.verdict == Verdict::Fail).count();
        let s = self.rows.iter().filter(|r| r.verdict == Verdict::Skip).count();
        (p, f, s)
    }
}

/// Keep values single-token so the structured format splits on spaces.
fn escape(s: &str) -> String {
    if s.is_empty() {
        return "-".into();
    }
    s.replace(' ', "_")
}
