//! Error taxonomy labels for erroneous designs and their distribution.
//!
//! Two top-level causes: insufficient knowledge of specialized RTL
//! programming (IKSP) and misinterpretation of the design specification
//! (MDS). A design with several root causes carries one label per cause.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub const LABEL_COLUMNS: [&str; 9] = [
    "task_id", "model_id", "top_level", "iksp_sub", "mds_sub", "iucc_sub", "add_sub", "mmd_sub", "notes",
];

macro_rules! label_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                $name::ALL
                    .iter()
                    .copied()
                    .find(|v| v.as_str().eq_ignore_ascii_case(s))
                    .ok_or_else(|| {
                        let allowed: Vec<&str> = $name::ALL.iter().map(|v| v.as_str()).collect();
                        format!("{s:?} is not one of {}", allowed.join("|"))
                    })
            }
        }
    };
}

label_enum!(TopLevel { Iksp => "IKSP", Mds => "MDS" });

label_enum!(
    /// RTL programming knowledge gaps.
    IkspSub {
        WireInAlways => "wire_in_always",
        NumericLogic => "numeric_logic",
        BitSelect => "bit_select",
        SliceInversion => "slice_inversion",
        IncompleteCode => "incomplete_code",
        VarRedef => "var_redef",
        UndefinedVar => "undefined_var",
        GenerateMisuse => "generate_misuse",
        MixedAssign => "mixed_assign",
    }
);

label_enum!(
    /// Circuit concepts, ambiguous descriptions, multimodal data, long
    /// descriptions, and unclassified errors.
    MdsSub { Iucc => "IUCC", Add => "ADD", Mmd => "MMD", Mdld => "MDLD", Misc => "MISC" }
);

label_enum!(
    /// Timing and reset, special circuits, number/value processing, state machine design.
    IuccSub { Trc => "TRC", Sp => "SP", Nvp => "NVP", Smdc => "SMDC" }
);

label_enum!(
    /// Unclear output format, ambiguous I/O definition, missing module information.
    AddSub { Uomf => "UOMF", Aiod => "AIOD", Mmi => "MMI" }
);

label_enum!(
    /// K-map, truth table, state table, waveform.
    MmdSub { Kmap => "KMAP", Tb => "TB", St => "ST", Wav => "WAV" }
);

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ErrorLabel {
    pub task_id: String,
    pub model_id: String,
    pub top_level: TopLevel,
    pub iksp_sub: Option<IkspSub>,
    pub mds_sub: Option<MdsSub>,
    pub iucc_sub: Option<IuccSub>,
    pub add_sub: Option<AddSub>,
    pub mmd_sub: Option<MmdSub>,
    pub notes: String,
}

#[derive(Debug, thiserror::Error)]
pub enum LabelError {
    #[error("row {row}: {reason}")]
    Schema { row: usize, reason: String },
    #[error("row {row}: inconsistent category path: {reason}")]
    InconsistentPath { row: usize, reason: String },
    #[error("io error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl ErrorLabel {
    pub fn iksp(task_id: &str, model_id: &str, sub: IkspSub) -> Self {
        Self::bare(task_id, model_id, TopLevel::Iksp).with_iksp(sub)
    }

    pub fn mds(task_id: &str, model_id: &str, sub: MdsSub) -> Self {
        let mut l = Self::bare(task_id, model_id, TopLevel::Mds);
        l.mds_sub = Some(sub);
        l
    }

    fn bare(task_id: &str, model_id: &str, top_level: TopLevel) -> Self {
        Self {
            task_id: task_id.to_string(),
            model_id: model_id.to_string(),
            top_level,
            iksp_sub: None,
            mds_sub: None,
            iucc_sub: None,
            add_sub: None,
            mmd_sub: None,
            notes: String::new(),
        }
    }

    fn with_iksp(mut self, sub: IkspSub) -> Self {
        self.iksp_sub = Some(sub);
        self
    }

    /// Sub-fields must follow the top-level choice.
    pub fn check_path(&self) -> Result<(), String> {
        let mds_fields = self.mds_sub.is_some() || self.iucc_sub.is_some() || self.add_sub.is_some() || self.mmd_sub.is_some();
        match self.top_level {
            TopLevel::Iksp if mds_fields => return Err("IKSP label carries MDS sub-categories".into()),
            TopLevel::Mds if self.iksp_sub.is_some() => return Err("MDS label carries iksp_sub".into()),
            _ => {}
        }
        let checks = [
            (self.iucc_sub.is_some(), MdsSub::Iucc, "iucc_sub"),
            (self.add_sub.is_some(), MdsSub::Add, "add_sub"),
            (self.mmd_sub.is_some(), MdsSub::Mmd, "mmd_sub"),
        ];
        for (set, parent, field) in checks {
            if set && self.mds_sub != Some(parent) {
                return Err(format!("{field} requires mds_sub={parent}"));
            }
        }
        Ok(())
    }

    /// Category path from the top level down, e.g. `["MDS", "IUCC", "TRC"]`.
    pub fn path(&self) -> Vec<&'static str> {
        let mut p = vec![self.top_level.as_str()];
        if let Some(s) = self.iksp_sub {
            p.push(s.as_str());
        }
        if let Some(s) = self.mds_sub {
            p.push(s.as_str());
        }
        let leaf = self
            .iucc_sub
            .map(IuccSub::as_str)
            .or(self.add_sub.map(AddSub::as_str))
            .or(self.mmd_sub.map(MmdSub::as_str));
        p.extend(leaf);
        p
    }

    fn to_record(&self) -> [String; 9] {
        let opt = |s: Option<&'static str>| s.unwrap_or("").to_string();
        [
            self.task_id.clone(),
            self.model_id.clone(),
            self.top_level.as_str().to_string(),
            opt(self.iksp_sub.map(IkspSub::as_str)),
            opt(self.mds_sub.map(MdsSub::as_str)),
            opt(self.iucc_sub.map(IuccSub::as_str)),
            opt(self.add_sub.map(AddSub::as_str)),
            opt(self.mmd_sub.map(MmdSub::as_str)),
            self.notes.clone(),
        ]
    }
}

fn field<T: FromStr<Err = String>>(rec: &csv::StringRecord, i: usize, row: usize) -> Result<Option<T>, LabelError> {
    let raw = rec.get(i).unwrap_or("").trim();
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse().map(Some).map_err(|e| LabelError::Schema {
        row,
        reason: format!("{}: {e}", LABEL_COLUMNS[i]),
    })
}

/// Parses labels CSV. Row numbers in errors count the header as row 1.
pub fn parse_labels(reader: impl Read) -> Result<Vec<ErrorLabel>, LabelError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| LabelError::Schema { row: 1, reason: e.to_string() })?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != LABEL_COLUMNS {
        return Err(LabelError::Schema {
            row: 1,
            reason: format!("expected header {}, found {}", LABEL_COLUMNS.join(","), names.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| LabelError::Schema { row, reason: e.to_string() })?;
        if rec.len() != LABEL_COLUMNS.len() {
            return Err(LabelError::Schema {
                row,
                reason: format!("expected {} fields, found {}", LABEL_COLUMNS.len(), rec.len()),
            });
        }
        let text = |i: usize| rec.get(i).unwrap_or("").trim().to_string();
        let top_level = field::<TopLevel>(&rec, 2, row)?.ok_or_else(|| LabelError::Schema {
            row,
            reason: "top_level is required".into(),
        })?;
        let label = ErrorLabel {
            task_id: text(0),
            model_id: text(1),
            top_level,
            iksp_sub: field(&rec, 3, row)?,
            mds_sub: field(&rec, 4, row)?,
            iucc_sub: field(&rec, 5, row)?,
            add_sub: field(&rec, 6, row)?,
            mmd_sub: field(&rec, 7, row)?,
            notes: rec.get(8).unwrap_or("").to_string(),
        };
        if label.task_id.is_empty() || label.model_id.is_empty() {
            return Err(LabelError::Schema { row, reason: "task_id and model_id are required".into() });
        }
        label.check_path().map_err(|reason| LabelError::InconsistentPath { row, reason })?;
        out.push(label);
    }
    Ok(out)
}

pub fn load_labels(path: &Path) -> Result<Vec<ErrorLabel>, LabelError> {
    let file = std::fs::File::open(path).map_err(|source| LabelError::Io { path: path.to_path_buf(), source })?;
    parse_labels(file)
}

pub fn labels_to_csv(labels: &[ErrorLabel]) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(LABEL_COLUMNS).expect("in-memory write");
    for l in labels {
        w.write_record(l.to_record()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// The labelled corpus shipped with the crate.
pub fn bundled_labels_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/taxonomy/labels.csv")
}

/// Label counts per model and category path.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    /// model -> "TOP[/SUB[/LEAF]]" -> count. Every prefix of a label's path is counted.
    pub counts: BTreeMap<String, BTreeMap<String, usize>>,
    /// model -> top level -> share of that model's labels.
    pub ratios: BTreeMap<String, BTreeMap<String, f64>>,
    /// model -> number of distinct designs labelled.
    pub designs: BTreeMap<String, usize>,
}

impl DistributionReport {
    pub fn count(&self, model: &str, path: &str) -> usize {
        self.counts.get(model).and_then(|m| m.get(path)).copied().unwrap_or(0)
    }

    pub fn ratio(&self, model: &str, top: TopLevel) -> f64 {
        self.ratios.get(model).and_then(|m| m.get(top.as_str())).copied().unwrap_or(0.0)
    }

    pub fn models(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    /// Category-by-model count table followed by the top-level ratios.
    pub fn render_table(&self) -> String {
        let models: Vec<&str> = self.models().collect();
        let mut paths: Vec<&str> = self.counts.values().flat_map(|m| m.keys().map(String::as_str)).collect();
        paths.sort_by_key(|p| path_order(p));
        paths.dedup();
        let w0 = paths.iter().map(|p| p.len()).max().unwrap_or(8).max(8);
        let widths: Vec<usize> = models.iter().map(|m| m.len().max(6)).collect();
        let mut out = format!("{:<w0$}", "category");
        for (m, w) in models.iter().zip(&widths) {
            out.push_str(&format!("  {m:>w$}"));
        }
        out.push('\n');
        for p in &paths {
            out.push_str(&format!("{p:<w0$}"));
            for (m, w) in models.iter().zip(&widths) {
                out.push_str(&format!("  {:>w$}", self.count(m, p)));
            }
            out.push('\n');
        }
        for top in TopLevel::ALL {
            out.push_str(&format!("{:<w0$}", format!("{top} ratio")));
            for (m, w) in models.iter().zip(&widths) {
                out.push_str(&format!("  {:>w$.3}", self.ratio(m, *top)));
            }
            out.push('\n');
        }
        out
    }

    /// Long-form CSV: model_id,path,count.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(["model_id", "path", "count"]).expect("in-memory write");
        for (m, paths) in &self.counts {
            let mut ps: Vec<(&String, &usize)> = paths.iter().collect();
            ps.sort_by_key(|(p, _)| path_order(p));
            for (p, c) in ps {
                w.write_record([m.as_str(), p.as_str(), &c.to_string()]).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

/// Sort key following enum declaration order at every level.
fn path_order(path: &str) -> Vec<usize> {
    path.split('/')
        .map(|seg| {
            let pos = |all: Vec<&str>| all.iter().position(|s| *s == seg);
            pos(TopLevel::ALL.iter().map(|v| v.as_str()).collect())
                .or_else(|| pos(IkspSub::ALL.iter().map(|v| v.as_str()).collect()))
                .or_else(|| pos(MdsSub::ALL.iter().map(|v| v.as_str()).collect()))
                .or_else(|| pos(IuccSub::ALL.iter().map(|v| v.as_str()).collect()))
                .or_else(|| pos(AddSub::ALL.iter().map(|v| v.as_str()).collect()))
                .or_else(|| pos(MmdSub::ALL.iter().map(|v| v.as_str()).collect()))
                .unwrap_or(usize::MAX)
        })
        .collect()
}

pub fn aggregate(labels: &[ErrorLabel]) -> DistributionReport {
    let mut report = DistributionReport::default();
    let mut designs: BTreeMap<&str, std::collections::BTreeSet<&str>> = BTreeMap::new();
    for l in labels {
        let counts = report.counts.entry(l.model_id.clone()).or_default();
        let path = l.path();
        for depth in 1..=path.len() {
            *counts.entry(path[..depth].join("/")).or_default() += 1;
        }
        designs.entry(&l.model_id).or_default().insert(&l.task_id);
    }
    for (model, counts) in &report.counts {
        let total: usize = TopLevel::ALL.iter().map(|t| counts.get(t.as_str()).copied().unwrap_or(0)).sum();
        let ratios = TopLevel::ALL
            .iter()
            .map(|t| {
                let c = counts.get(t.as_str()).copied().unwrap_or(0);
                (t.as_str().to_string(), c as f64 / total as f64)
            })
            .collect();
        report.ratios.insert(model.clone(), ratios);
    }
    report.designs = designs.into_iter().map(|(m, s)| (m.to_string(), s.len())).collect();
    report
}
