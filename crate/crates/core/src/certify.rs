//! End-to-end certification: from a fixed-point datum to an extremal
//! partition with degree bookkeeping and a conclusion about the quantum
//! product. All conclusions are conditional on the user's claim that the
//! datum comes from a pseudo-rotation of a manifold with the given `n` and
//! minimal Chern number.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::base_group::{
    check_condition_b1, check_condition_b2_with, compute_base_group, B1Verdict, B2Verdict,
    BaseGroup,
};
use crate::condition_a::{decide_condition_a, ConditionAVerdict, Status, Witness};
use crate::dim4::find_length3_with;
use crate::error::{Error, Result};
use crate::exact_angle::{
    format_rational, parse_rational, ApproxSource, ExactAngle, IrrationalBasis, Rational,
    DEFAULT_PRECISION_CAP,
};
use crate::index_core::SymplecticPath;
use crate::orbit::OrbitTable;
use crate::partitions::{
    find_extremal_with, find_toric_power_with, residue_ok, Partition, SearchOptions,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_EPSILON: &str = "1/10";
pub const CHERN_DIAGNOSTIC: &str = "no pseudo-rotation can exist";

/// On-disk instance description (TOML).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub dimension_n: usize,
    pub chern_min: u64,
    pub product_length_r: usize,
    #[serde(default)]
    pub irrational_basis: Vec<BasisSpec>,
    pub rotation_numbers: Vec<RotationSpec>,
    #[serde(default)]
    pub search: SearchSpec,
    #[serde(default)]
    pub b2: B2Spec,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub name: String,
    /// Decimal approximation; exclusive with `sqrt`.
    pub decimal: Option<String>,
    /// Accuracy of `decimal` in bits.
    pub precision_bits: Option<u32>,
    /// Radicand `p/q` of a square root.
    pub sqrt: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationSpec {
    #[serde(default = "zero_string")]
    pub rational: String,
    #[serde(default)]
    pub terms: Vec<TermSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub basis: String,
    pub coeff: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    #[serde(default = "default_max_iterate")]
    pub max_iterate: u64,
    #[serde(default = "default_precision")]
    pub precision_bits: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct B2Spec {
    #[serde(default = "default_epsilon")]
    pub epsilon: String,
}

fn zero_string() -> String {
    "0".into()
}
fn default_max_iterate() -> u64 {
    crate::partitions::DEFAULT_MAX_ITERATE
}
fn default_precision() -> u32 {
    DEFAULT_PRECISION_CAP
}
fn default_epsilon() -> String {
    DEFAULT_EPSILON.into()
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            max_iterate: default_max_iterate(),
            precision_bits: default_precision(),
        }
    }
}

impl Default for B2Spec {
    fn default() -> Self {
        B2Spec {
            epsilon: default_epsilon(),
        }
    }
}

/// Values that replace the corresponding instance-file fields.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Overrides {
    pub max_iterate: Option<u64>,
    pub precision_bits: Option<u32>,
    pub r: Option<usize>,
    pub chern_min: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub n: usize,
    pub chern_min: u64,
    pub r: usize,
    pub path: SymplecticPath,
    pub max_iterate: u64,
    pub epsilon: Rational,
    /// SHA-256 of the instance file, or of a canonical rendering for
    /// instances built in code.
    pub input_digest: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ProblemInstance {
    pub fn new(path: SymplecticPath, chern_min: u64, r: usize) -> Result<Self> {
        let mut inst = ProblemInstance {
            n: path.n(),
            chern_min,
            r,
            path,
            max_iterate: default_max_iterate(),
            epsilon: parse_rational(DEFAULT_EPSILON)?,
            input_digest: String::new(),
        };
        inst.validate()?;
        inst.input_digest = sha256_hex(inst.canonical().as_bytes());
        Ok(inst)
    }

    pub fn with_max_iterate(mut self, max_iterate: u64) -> Self {
        self.max_iterate = max_iterate;
        self.input_digest = sha256_hex(self.canonical().as_bytes());
        self
    }

    pub fn with_epsilon(mut self, epsilon: Rational) -> Self {
        self.epsilon = epsilon;
        self.input_digest = sha256_hex(self.canonical().as_bytes());
        self
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with(text, &Overrides::default())
    }

    /// Parses an instance file and applies command-line overrides. The
    /// digest covers the file bytes and, when present, the overrides.
    pub fn from_toml_with(text: &str, ov: &Overrides) -> Result<Self> {
        let mut file: InstanceFile =
            toml::from_str(text).map_err(|e| Error::InvalidInput(format!("instance file: {e}")))?;
        if let Some(v) = ov.max_iterate {
            file.search.max_iterate = v;
        }
        if let Some(v) = ov.precision_bits {
            file.search.precision_bits = v;
        }
        if let Some(v) = ov.r {
            file.product_length_r = v;
        }
        if let Some(v) = ov.chern_min {
            file.chern_min = v;
        }
        let mut inst = Self::from_file(&file)?;
        let mut bytes = text.as_bytes().to_vec();
        if *ov != Overrides::default() {
            bytes.extend_from_slice(format!("\n#overrides {ov:?}\n").as_bytes());
        }
        inst.input_digest = sha256_hex(&bytes);
        Ok(inst)
    }

    pub fn from_file(file: &InstanceFile) -> Result<Self> {
        let mut basis = IrrationalBasis::new();
        for b in &file.irrational_basis {
            basis = match (&b.decimal, &b.sqrt) {
                (Some(d), None) => {
                    let bits = b.precision_bits.ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "basis `{}`: decimal needs precision_bits",
                            b.name
                        ))
                    })?;
                    basis.with_decimal(&b.name, d, bits)?
                }
                (None, Some(s)) => basis.with_sqrt(&b.name, parse_rational(s)?)?,
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "basis `{}`: give exactly one of decimal or sqrt",
                        b.name
                    )))
                }
            };
        }
        let mut lams = Vec::with_capacity(file.rotation_numbers.len());
        for rs in &file.rotation_numbers {
            let mut a = ExactAngle::rational(parse_rational(&rs.rational)?);
            for t in &rs.terms {
                a = a.with_term(&t.basis, parse_rational(&t.coeff)?);
            }
            lams.push(a);
        }
        if lams.len() != file.dimension_n {
            return Err(Error::InvalidInput(format!(
                "dimension_n = {} but {} rotation numbers given",
                file.dimension_n,
                lams.len()
            )));
        }
        let path = SymplecticPath::new(basis, lams)?.with_max_precision(file.search.precision_bits);
        let mut inst = ProblemInstance {
            n: file.dimension_n,
            chern_min: file.chern_min,
            r: file.product_length_r,
            path,
            max_iterate: file.search.max_iterate,
            epsilon: parse_rational(&file.b2.epsilon)?,
            input_digest: String::new(),
        };
        inst.validate()?;
        inst.input_digest = sha256_hex(inst.canonical().as_bytes());
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.r == 0 || self.chern_min == 0 {
            return Err(Error::InvalidInput(
                "n, chern_min and r must be positive".into(),
            ));
        }
        if self.n != self.path.n() {
            return Err(Error::InvalidInput("n does not match the path".into()));
        }
        Ok(())
    }

    fn canonical(&self) -> String {
        let mut s = format!(
            "n={}\nchern_min={}\nr={}\nmax_iterate={}\nprecision_bits={}\nepsilon={}\n",
            self.n,
            self.chern_min,
            self.r,
            self.max_iterate,
            self.path.max_precision_bits(),
            format_rational(&self.epsilon)
        );
        for e in self.path.basis().entries() {
            match &e.source {
                ApproxSource::Decimal {
                    value,
                    precision_bits,
                } => {
                    s += &format!(
                        "basis {} decimal {} {}\n",
                        e.name,
                        format_rational(value),
                        precision_bits
                    )
                }
                ApproxSource::Sqrt { radicand } => {
                    s += &format!("basis {} sqrt {}\n", e.name, format_rational(radicand))
                }
            }
        }
        for l in self.path.rotation_numbers() {
            s += &format!("lambda {l}\n");
        }
        s
    }
}

/// `N <= 2n`; a pseudo-rotation cannot exist otherwise.
pub fn check_chern_bound(n: usize, chern: u64) -> bool {
    chern <= 2 * n as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Conclusion {
    DeformedQuantumProduct,
    NonzeroLongProductOnly,
    NoCertificate,
}

impl Conclusion {
    pub fn as_str(&self) -> &'static str {
        match self {
            Conclusion::DeformedQuantumProduct => "DEFORMED_QUANTUM_PRODUCT",
            Conclusion::NonzeroLongProductOnly => "NONZERO_LONG_PRODUCT_ONLY",
            Conclusion::NoCertificate => "NO_CERTIFICATE",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Toric,
    Dim4,
    Generic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchRecord {
    pub method: SearchMethod,
    pub max_iterate: u64,
    pub truncated: bool,
    pub uncertain_iterates: usize,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InstanceSummary {
    pub dimension_n: usize,
    pub chern_min: u64,
    pub product_length_r: usize,
    pub rotation_numbers: Vec<String>,
    pub max_iterate: u64,
    pub precision_bits: u32,
    pub b2_epsilon: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub schema_version: u32,
    pub tool_version: String,
    pub input_digest: String,
    pub instance: InstanceSummary,
    pub chern_bound_ok: bool,
    pub base_group: Option<BaseGroup>,
    pub condition_a: Option<ConditionAVerdict>,
    pub condition_b1: Option<B1Verdict>,
    pub condition_b2: Option<B2Verdict>,
    pub search: Option<SearchRecord>,
    pub partition: Option<Partition>,
    pub degrees: Vec<i64>,
    pub degree_checks: Vec<bool>,
    pub conclusion: Conclusion,
    /// True only when the absence of a certificate is proved.
    pub exact_negative: bool,
    pub diagnostics: Vec<String>,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificate serializes");
        s.push('\n');
        s
    }
}

pub fn certify(inst: &ProblemInstance) -> Result<Certificate> {
    let n = inst.n;
    let chern = inst.chern_min;
    let r = inst.r;
    let path = &inst.path;
    let mut cert = Certificate {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.into(),
        input_digest: inst.input_digest.clone(),
        instance: InstanceSummary {
            dimension_n: n,
            chern_min: chern,
            product_length_r: r,
            rotation_numbers: path.rotation_numbers().iter().map(|l| l.to_string()).collect(),
            max_iterate: inst.max_iterate,
            precision_bits: path.max_precision_bits(),
            b2_epsilon: format_rational(&inst.epsilon),
        },
        chern_bound_ok: check_chern_bound(n, chern),
        base_group: None,
        condition_a: None,
        condition_b1: None,
        condition_b2: None,
        search: None,
        partition: None,
        degrees: vec![],
        degree_checks: vec![],
        conclusion: Conclusion::NoCertificate,
        exact_negative: false,
        diagnostics: vec![format!(
            "chern_min = {chern} is taken from the input and trusted; every conclusion holds for any N meeting the conditions"
        )],
    };
    if !cert.chern_bound_ok {
        cert.exact_negative = true;
        cert.diagnostics
            .push(format!("N = {chern} > 2n = {}: {CHERN_DIAGNOSTIC}", 2 * n));
        return Ok(cert);
    }

    let g = match compute_base_group(path) {
        Ok(g) => g,
        Err(Error::FullyRationalSpectrum) => {
            cert.diagnostics
                .push("all rotation numbers are rational: some iterate is degenerate, so the datum is not strongly non-degenerate".into());
            return Ok(cert);
        }
        Err(e) => return Err(e),
    };
    let table = OrbitTable::build(path, inst.max_iterate)?;
    cert.condition_b1 = Some(check_condition_b1(&g, chern));
    cert.condition_b2 = Some(check_condition_b2_with(
        path,
        &g,
        &table,
        chern,
        &inst.epsilon,
    )?);

    let mut cond_a = decide_condition_a(&g, r)?;
    cert.base_group = Some(g.clone());
    if cond_a.status == Status::No {
        cert.exact_negative = true;
        cert.diagnostics.push(format!(
            "Condition A fails for r = {r}: no extremal partition of this length exists"
        ));
        cert.condition_a = Some(cond_a);
        return Ok(cert);
    }

    let mut notes = Vec::new();
    let (method, partition, truncated) = if g.dim == n {
        let m = find_toric_power_with(path, &table, r, chern)?;
        match m {
            Some(m) => (
                SearchMethod::Toric,
                Some(Partition::evaluate(path, &vec![m; r])?),
                false,
            ),
            None => {
                notes.push(format!("no toric power found up to {}", inst.max_iterate));
                (SearchMethod::Toric, None, false)
            }
        }
    } else if n == 2 && g.dim == 1 && matches!(chern, 2 | 3) && r == 3 {
        let out = find_length3_with(path, &table, chern)?;
        notes.extend(out.notes);
        let truncated = out.search.as_ref().is_some_and(|s| s.truncated);
        (SearchMethod::Dim4, out.partition, truncated)
    } else {
        let opts = SearchOptions::new(inst.max_iterate).with_residue(Some(chern));
        let out = find_extremal_with(path, &table, r, &opts)?;
        if out.seeded {
            notes.push("search bound seeded from near-returns to the identity".into());
        }
        (SearchMethod::Generic, out.partition, out.truncated)
    };
    if truncated {
        notes.push("node limit reached; the search is incomplete".into());
    }
    cert.search = Some(SearchRecord {
        method,
        max_iterate: inst.max_iterate,
        truncated,
        uncertain_iterates: table.uncertain().len(),
        notes,
    });

    if let Some(p) = partition {
        // independent of how the search certified it
        let p = Partition::evaluate(path, &p.parts)?;
        if !p.is_extremal(n) {
            return Err(Error::InvalidInput(format!(
                "partition {:?} is not extremal",
                p.parts
            )));
        }
        if cond_a.status == Status::Unknown {
            cond_a.status = Status::Yes;
            cond_a.witness = Some(Witness::Iterates(p.parts.clone()));
        }
        cert.degrees = p.indices.iter().map(|mu| n as i64 + mu).collect();
        cert.degree_checks = cert
            .degrees
            .iter()
            .map(|d| (d - 2 * n as i64).rem_euclid(2 * chern as i64) != 0)
            .collect();
        debug_assert!(p
            .indices
            .iter()
            .zip(&cert.degree_checks)
            .all(|(&mu, &ok)| ok == residue_ok(mu, n, chern)));
        if cert.degree_checks.iter().all(|&b| b) {
            cert.conclusion = if r > n {
                Conclusion::DeformedQuantumProduct
            } else {
                Conclusion::NonzeroLongProductOnly
            };
        }
        cert.partition = Some(p);
    } else {
        cert.diagnostics.push(format!(
            "no extremal partition of length {r} with admissible degrees up to max_iterate = {}; this is a bounded search, not a proof of absence",
            inst.max_iterate
        ));
    }
    cert.condition_a = Some(cond_a);
    Ok(cert)
}

/// Human-readable rendering of a certificate.
pub fn render_table(c: &Certificate) -> String {
    let mut rows: Vec<(String, String)> = vec![
        ("schema_version".into(), c.schema_version.to_string()),
        ("tool_version".into(), c.tool_version.clone()),
        ("input_digest".into(), c.input_digest.clone()),
        ("n".into(), c.instance.dimension_n.to_string()),
        ("chern_min".into(), c.instance.chern_min.to_string()),
        ("r".into(), c.instance.product_length_r.to_string()),
        (
            "rotation_numbers".into(),
            c.instance.rotation_numbers.join(", "),
        ),
        ("chern_bound_ok".into(), c.chern_bound_ok.to_string()),
    ];
    if let Some(g) = &c.base_group {
        rows.push((
            "base_group".into(),
            format!("dim {}, components {}", g.dim, g.torsion_order),
        ));
    }
    if let Some(a) = &c.condition_a {
        rows.push((
            "condition_a".into(),
            format!("{:?}", a.status).to_uppercase(),
        ));
    }
    if let Some(b1) = &c.condition_b1 {
        rows.push((
            "condition_b1".into(),
            if b1.holds { "holds" } else { "fails" }.into(),
        ));
    }
    if let Some(b2) = &c.condition_b2 {
        let s = match b2 {
            B2Verdict::Holds { k, loop_part } => format!("holds at k = {k} (loop {loop_part})"),
            B2Verdict::FailsUpToBound { bound, .. } => format!("not found up to {bound}"),
            B2Verdict::NotApplicable { reason } => format!("not applicable: {reason}"),
        };
        rows.push(("condition_b2".into(), s));
    }
    if let Some(s) = &c.search {
        rows.push((
            "search".into(),
            format!(
                "{:?} up to {}{}",
                s.method,
                s.max_iterate,
                if s.truncated { " (truncated)" } else { "" }
            )
            .to_lowercase(),
        ));
    }
    if let Some(p) = &c.partition {
        rows.push(("partition".into(), format!("{:?}", p.parts)));
        rows.push(("indices".into(), format!("{:?}", p.indices)));
        rows.push(("defect".into(), p.defect.to_string()));
        rows.push(("degrees".into(), format!("{:?}", c.degrees)));
        rows.push(("degree_checks".into(), format!("{:?}", c.degree_checks)));
    }
    rows.push(("conclusion".into(), c.conclusion.as_str().into()));
    for d in &c.diagnostics {
        rows.push(("note".into(), d.clone()));
    }
    if let Some(s) = &c.search {
        for d in &s.notes {
            rows.push(("note".into(), d.clone()));
        }
    }
    let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter()
        .map(|(k, v)| format!("{k:<w$}  {v}\n"))
        .collect()
}
