//! Strict line-oriented instance format.
//!
//! A document is a sequence of sections, each introduced by an upper-case
//! header. Comments run from `#` to end of line; blank lines are ignored.
//!
//! ```text
//! SPACE
//! points 3
//! open -            # the empty set
//! open 1
//! open 0 1
//! open 1 2
//! open 0 1 2
//! FIELD q           # or: fp 7
//! MODULE F free 2
//! SUBMODULE F0 of F stalks
//! gen point 0 : 1 0
//! SUBMODULE G0 of F opens
//! gen open 0 1 comp 0 : 0 1
//! MORPHISM phi F F
//! point 0 : 1 0 ; 0 1
//! PAIRING P F F
//! point 0 : 1 0 ; 0 1/2
//! CHECKS
//! theorem3 P
//! ranks F0 G0
//! ```
//!
//! Matrices are rows separated by `;`, entries separated by spaces, each an
//! integer or a rational `p/q`. Names must be declared before use. Unknown
//! keywords are errors.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.msg)
    }
}

impl std::error::Error for ParseError {}

type PResult<T> = Result<T, ParseError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ratio {
    pub num: i64,
    pub den: i64,
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldSel {
    Rational,
    Prime(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModuleKind {
    Free,
    Constant,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleDecl {
    pub name: String,
    pub kind: ModuleKind,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubForm {
    /// `gen point <i> : entries` — one generator of the stalk at a point.
    Stalks(Vec<(usize, Vec<Ratio>)>),
    /// `gen open <pts> comp <c> : entries` — one generator of a section
    /// space component; closure under restriction is checked when run.
    Opens(Vec<(Vec<usize>, usize, Vec<Ratio>)>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubDecl {
    pub name: String,
    pub module: String,
    pub form: SubForm,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatDecl {
    pub name: String,
    pub left: String,
    pub right: String,
    /// one matrix per point, rows × cols fixed by the declared ranks
    pub point_mats: Vec<Vec<Vec<Ratio>>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReq {
    pub kind: String,
    pub args: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceDoc {
    pub n_points: usize,
    /// opens as sorted point lists, in file order
    pub opens: Vec<Vec<usize>>,
    pub field: FieldSel,
    pub modules: Vec<ModuleDecl>,
    pub submodules: Vec<SubDecl>,
    pub morphisms: Vec<MatDecl>,
    pub pairings: Vec<MatDecl>,
    pub checks: Vec<CheckReq>,
}

pub const CHECK_KINDS: &[(&str, usize)] = &[
    ("sum-completeness", 2),
    ("theorem1", 2),
    ("ranks", 2),
    ("dual", 1),
    ("orthogonal", 2),
    ("morphism", 1),
    ("lemma13", 2),
    ("lemma14", 1),
    ("lemma15", 1),
    ("theorem2", 3),
    ("theorem3", 1),
];

fn err<T>(line: usize, msg: impl Into<String>) -> PResult<T> {
    Err(ParseError {
        line,
        msg: msg.into(),
    })
}

fn parse_ratio(tok: &str, line: usize) -> PResult<Ratio> {
    let (n, d) = match tok.split_once('/') {
        Some((n, d)) => (n, d),
        None => (tok, "1"),
    };
    let num: i64 = n
        .parse()
        .map_err(|_| ParseError {
            line,
            msg: format!("bad number `{tok}`"),
        })?;
    let den: i64 = d
        .parse()
        .map_err(|_| ParseError {
            line,
            msg: format!("bad number `{tok}`"),
        })?;
    if den <= 0 {
        return err(line, format!("denominator must be positive in `{tok}`"));
    }
    Ok(Ratio { num, den })
}

fn parse_usize(tok: &str, line: usize, what: &str) -> PResult<usize> {
    tok.parse().map_err(|_| ParseError {
        line,
        msg: format!("bad {what} `{tok}`"),
    })
}

fn is_name(tok: &str) -> bool {
    let mut chars = tok.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_entries(toks: &[&str], line: usize) -> PResult<Vec<Ratio>> {
    toks.iter().map(|t| parse_ratio(t, line)).collect()
}

/// Rows separated by `;`, entries by spaces; every row the same width.
fn parse_matrix(text: &str, line: usize, rows: usize, cols: usize) -> PResult<Vec<Vec<Ratio>>> {
    let mut out = Vec::new();
    for row_text in text.split(';') {
        let toks: Vec<&str> = row_text.split_whitespace().collect();
        out.push(parse_entries(&toks, line)?);
    }
    if rows == 0 || cols == 0 {
        // a zero-shaped matrix is written as a single empty row list
        let flat: usize = out.iter().map(Vec::len).sum();
        if flat != 0 {
            return err(line, format!("expected an empty {rows}x{cols} matrix"));
        }
        return Ok(vec![Vec::new(); rows]);
    }
    if out.len() != rows || out.iter().any(|r| r.len() != cols) {
        return err(
            line,
            format!(
                "matrix must be {rows}x{cols}, got {}x{}",
                out.len(),
                out.first().map(Vec::len).unwrap_or(0)
            ),
        );
    }
    Ok(out)
}

struct Lines<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Lines<'a> {
        let items = text
            .lines()
            .enumerate()
            .map(|(i, l)| {
                let l = l.split('#').next().unwrap_or("").trim();
                (i + 1, l)
            })
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Lines { items, pos: 0 }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.items.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.peek();
        self.pos += 1;
        item
    }
}

fn is_header(line: &str) -> bool {
    matches!(
        line.split_whitespace().next(),
        Some("SPACE" | "FIELD" | "MODULE" | "SUBMODULE" | "MORPHISM" | "PAIRING" | "CHECKS")
    )
}

pub fn parse_instance(text: &str) -> PResult<InstanceDoc> {
    let mut lines = Lines::new(text);
    let mut doc = InstanceDoc {
        n_points: 0,
        opens: Vec::new(),
        field: FieldSel::Rational,
        modules: Vec::new(),
        submodules: Vec::new(),
        morphisms: Vec::new(),
        pairings: Vec::new(),
        checks: Vec::new(),
    };
    let mut seen_space = false;
    let mut space_ln = 1;
    let mut seen_field = false;
    while let Some((ln, line)) = lines.next() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "SPACE" => {
                if seen_space {
                    return err(ln, "duplicate SPACE section");
                }
                seen_space = true;
                space_ln = ln;
                parse_space(&mut lines, &mut doc, ln)?;
            }
            "FIELD" => {
                if seen_field {
                    return err(ln, "duplicate FIELD section");
                }
                seen_field = true;
                doc.field = match toks.get(1) {
                    Some(&"q") if toks.len() == 2 => FieldSel::Rational,
                    Some(&"fp") if toks.len() == 3 => {
                        FieldSel::Prime(parse_usize(toks[2], ln, "prime")? as u64)
                    }
                    _ => return err(ln, "FIELD takes `q` or `fp <prime>`"),
                };
            }
            "MODULE" => parse_module(&toks, &mut doc, ln)?,
            "SUBMODULE" => parse_submodule(&toks, &mut lines, &mut doc, ln)?,
            "MORPHISM" | "PAIRING" => parse_mat_decl(&toks, &mut lines, &mut doc, ln)?,
            "CHECKS" => parse_checks(&mut lines, &mut doc)?,
            other => return err(ln, format!("unknown section `{other}`")),
        }
    }
    if !seen_space {
        return err(1, "missing SPACE section");
    }
    if !seen_field {
        return err(1, "missing FIELD section");
    }
    if let FieldSel::Prime(p) = doc.field {
        sheafmod::Field::validate_prime(p).map_err(|e| ParseError {
            line: space_ln,
            msg: e.to_string(),
        })?;
    }
    let masks: Vec<u32> = doc
        .opens
        .iter()
        .map(|o| o.iter().fold(0u32, |acc, p| acc | (1 << p)))
        .collect();
    sheafmod::FiniteSpace::validate_topology(doc.n_points, &masks).map_err(|e| ParseError {
        line: space_ln,
        msg: e.to_string(),
    })?;
    Ok(doc)
}

fn parse_space(lines: &mut Lines, doc: &mut InstanceDoc, header_ln: usize) -> PResult<()> {
    match lines.next() {
        Some((ln, line)) => {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 || toks[0] != "points" {
                return err(ln, "SPACE must start with `points <n>`");
            }
            doc.n_points = parse_usize(toks[1], ln, "point count")?;
            if doc.n_points == 0 || doc.n_points > 16 {
                return err(ln, "points must be between 1 and 16");
            }
        }
        None => return err(header_ln, "SPACE must start with `points <n>`"),
    }
    while let Some((ln, line)) = lines.peek() {
        if is_header(line) {
            break;
        }
        lines.next();
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks[0] != "open" {
            return err(ln, format!("expected `open ...`, got `{}`", toks[0]));
        }
        let pts = parse_point_list(&toks[1..], doc.n_points, ln)?;
        doc.opens.push(pts);
    }
    if doc.opens.is_empty() {
        return err(header_ln, "SPACE declares no opens");
    }
    Ok(())
}

fn parse_point_list(toks: &[&str], n_points: usize, ln: usize) -> PResult<Vec<usize>> {
    if toks == ["-"] {
        return Ok(Vec::new());
    }
    let mut pts = Vec::new();
    for t in toks {
        let p = parse_usize(t, ln, "point")?;
        if p >= n_points {
            return err(ln, format!("point {p} out of range"));
        }
        if pts.contains(&p) {
            return err(ln, format!("point {p} repeated"));
        }
        pts.push(p);
    }
    if pts.is_empty() {
        return err(ln, "empty point list must be written `-`");
    }
    pts.sort_unstable();
    Ok(pts)
}

fn parse_module(toks: &[&str], doc: &mut InstanceDoc, ln: usize) -> PResult<()> {
    if toks.len() != 4 || !is_name(toks[1]) {
        return err(ln, "MODULE takes `<name> free|constant <rank>`");
    }
    let kind = match toks[2] {
        "free" => ModuleKind::Free,
        "constant" => ModuleKind::Constant,
        other => return err(ln, format!("unknown module kind `{other}`")),
    };
    let rank = parse_usize(toks[3], ln, "rank")?;
    if rank > 8 {
        return err(ln, "rank must be at most 8");
    }
    if doc.lookup(toks[1]).is_some() {
        return err(ln, format!("name `{}` already declared", toks[1]));
    }
    doc.modules.push(ModuleDecl {
        name: toks[1].into(),
        kind,
        rank,
    });
    Ok(())
}

fn parse_submodule(
    toks: &[&str],
    lines: &mut Lines,
    doc: &mut InstanceDoc,
    ln: usize,
) -> PResult<()> {
    if toks.len() != 5 || toks[2] != "of" || !is_name(toks[1]) {
        return err(ln, "SUBMODULE takes `<name> of <module> stalks|opens`");
    }
    let module = doc.free_module(toks[3], ln)?;
    if doc.lookup(toks[1]).is_some() {
        return err(ln, format!("name `{}` already declared", toks[1]));
    }
    let rank = module.rank;
    let module = module.name.clone();
    let mut form = match toks[4] {
        "stalks" => SubForm::Stalks(Vec::new()),
        "opens" => SubForm::Opens(Vec::new()),
        other => return err(ln, format!("unknown submodule form `{other}`")),
    };
    while let Some((gln, line)) = lines.peek() {
        if is_header(line) {
            break;
        }
        lines.next();
        let (head, entries_text) = line
            .split_once(':')
            .ok_or(ParseError {
                line: gln,
                msg: "generator line needs `: <entries>`".into(),
            })?;
        let head: Vec<&str> = head.split_whitespace().collect();
        let etoks: Vec<&str> = entries_text.split_whitespace().collect();
        let entries = parse_entries(&etoks, gln)?;
        if entries.len() != rank {
            return err(gln, format!("generator needs {rank} entries"));
        }
        match (&mut form, head.as_slice()) {
            (SubForm::Stalks(gens), ["gen", "point", p]) => {
                let p = parse_usize(p, gln, "point")?;
                if p >= doc.n_points {
                    return err(gln, format!("point {p} out of range"));
                }
                gens.push((p, entries));
            }
            (SubForm::Opens(gens), ["gen", "open", rest @ ..]) => {
                let comp_at = rest
                    .iter()
                    .position(|t| *t == "comp")
                    .ok_or(ParseError {
                        line: gln,
                        msg: "opens generator needs `comp <c>`".into(),
                    })?;
                let pts = parse_point_list(&rest[..comp_at], doc.n_points, gln)?;
                if rest.len() != comp_at + 2 {
                    return err(gln, "opens generator needs `comp <c>`");
                }
                let comp = parse_usize(rest[comp_at + 1], gln, "component")?;
                if !doc.opens.iter().any(|o| *o == pts) {
                    return err(gln, "generator refers to an undeclared open");
                }
                gens.push((pts, comp, entries));
            }
            _ => return err(gln, "generator line does not match the declared form"),
        }
    }
    doc.submodules.push(SubDecl {
        name: toks[1].into(),
        module,
        form,
    });
    Ok(())
}

fn parse_mat_decl(
    toks: &[&str],
    lines: &mut Lines,
    doc: &mut InstanceDoc,
    ln: usize,
) -> PResult<()> {
    let is_pairing = toks[0] == "PAIRING";
    if toks.len() != 4 || !is_name(toks[1]) {
        return err(ln, format!("{} takes `<name> <left> <right>`", toks[0]));
    }
    let left = doc.free_module(toks[2], ln)?.clone();
    let right = doc.free_module(toks[3], ln)?.clone();
    if doc.lookup(toks[1]).is_some() {
        return err(ln, format!("name `{}` already declared", toks[1]));
    }
    // morphisms are written target-rows × source-cols; pairings F-rows × E-cols
    let (rows, cols) = if is_pairing {
        (left.rank, right.rank)
    } else {
        (right.rank, left.rank)
    };
    let mut point_mats: Vec<Option<Vec<Vec<Ratio>>>> = vec![None; doc.n_points];
    while let Some((mln, line)) = lines.peek() {
        if is_header(line) {
            break;
        }
        lines.next();
        let (head, body) = line.split_once(':').ok_or(ParseError {
            line: mln,
            msg: "matrix line needs `point <i> : <rows>`".into(),
        })?;
        let head: Vec<&str> = head.split_whitespace().collect();
        if head.len() != 2 || head[0] != "point" {
            return err(mln, "matrix line needs `point <i> : <rows>`");
        }
        let p = parse_usize(head[1], mln, "point")?;
        if p >= doc.n_points {
            return err(mln, format!("point {p} out of range"));
        }
        if point_mats[p].is_some() {
            return err(mln, format!("matrix for point {p} repeated"));
        }
        point_mats[p] = Some(parse_matrix(body, mln, rows, cols)?);
    }
    let point_mats: Vec<Vec<Vec<Ratio>>> = point_mats
        .into_iter()
        .enumerate()
        .map(|(p, m)| {
            m.ok_or(ParseError {
                line: ln,
                msg: format!("missing matrix for point {p}"),
            })
        })
        .collect::<PResult<_>>()?;
    let decl = MatDecl {
        name: toks[1].into(),
        left: left.name,
        right: right.name,
        point_mats,
    };
    if is_pairing {
        doc.pairings.push(decl);
    } else {
        doc.morphisms.push(decl);
    }
    Ok(())
}

fn parse_checks(lines: &mut Lines, doc: &mut InstanceDoc) -> PResult<()> {
    while let Some((ln, line)) = lines.peek() {
        if is_header(line) {
            break;
        }
        lines.next();
        let toks: Vec<&str> = line.split_whitespace().collect();
        let arity = CHECK_KINDS
            .iter()
            .find(|(k, _)| *k == toks[0])
            .map(|(_, a)| *a)
            .ok_or(ParseError {
                line: ln,
                msg: format!("unknown check `{}`", toks[0]),
            })?;
        if toks.len() != arity + 1 {
            return err(ln, format!("check `{}` takes {arity} name(s)", toks[0]));
        }
        for name in &toks[1..] {
            if doc.lookup(name).is_none() {
                return err(ln, format!("check refers to undeclared name `{name}`"));
            }
        }
        doc.checks.push(CheckReq {
            kind: toks[0].into(),
            args: toks[1..].iter().map(|s| s.to_string()).collect(),
        });
    }
    Ok(())
}

impl InstanceDoc {
    fn lookup(&self, name: &str) -> Option<&str> {
        self.modules
            .iter()
            .map(|m| m.name.as_str())
            .chain(self.submodules.iter().map(|s| s.name.as_str()))
            .chain(self.morphisms.iter().map(|m| m.name.as_str()))
            .chain(self.pairings.iter().map(|m| m.name.as_str()))
            .find(|n| *n == name)
    }

    fn free_module(&self, name: &str, ln: usize) -> PResult<&ModuleDecl> {
        match self.modules.iter().find(|m| m.name == name) {
            Some(m) if m.kind == ModuleKind::Free => Ok(m),
            Some(_) => err(ln, format!("`{name}` must be a free module here")),
            None => err(ln, format!("undeclared module `{name}`")),
        }
    }

    /// Canonical serialization; parsing it back is the identity.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let pts = |list: &[usize]| -> String {
            if list.is_empty() {
                "-".into()
            } else {
                list.iter()
                    .map(|p| p.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            }
        };
        let mat = |m: &[Vec<Ratio>]| -> String {
            m.iter()
                .map(|row| {
                    row.iter()
                        .map(|r| r.to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect::<Vec<_>>()
                .join(" ; ")
        };
        out.push_str("SPACE\n");
        out.push_str(&format!("points {}\n", self.n_points));
        for o in &self.opens {
            out.push_str(&format!("open {}\n", pts(o)));
        }
        out.push_str(match self.field {
            FieldSel::Rational => "FIELD q\n".into(),
            FieldSel::Prime(p) => format!("FIELD fp {p}\n"),
        }
        .as_str());
        for m in &self.modules {
            let kind = match m.kind {
                ModuleKind::Free => "free",
                ModuleKind::Constant => "constant",
            };
            out.push_str(&format!("MODULE {} {kind} {}\n", m.name, m.rank));
        }
        for s in &self.submodules {
            match &s.form {
                SubForm::Stalks(gens) => {
                    out.push_str(&format!("SUBMODULE {} of {} stalks\n", s.name, s.module));
                    for (p, e) in gens {
                        out.push_str(&format!("gen point {p} : {}\n", mat(&[e.clone()])));
                    }
                }
                SubForm::Opens(gens) => {
                    out.push_str(&format!("SUBMODULE {} of {} opens\n", s.name, s.module));
                    for (o, c, e) in gens {
                        out.push_str(&format!(
                            "gen open {} comp {c} : {}\n",
                            pts(o),
                            mat(&[e.clone()])
                        ));
                    }
                }
            }
        }
        for (header, decls) in [("MORPHISM", &self.morphisms), ("PAIRING", &self.pairings)] {
            for d in decls {
                out.push_str(&format!("{header} {} {} {}\n", d.name, d.left, d.right));
                for (p, m) in d.point_mats.iter().enumerate() {
                    out.push_str(&format!("point {p} : {}\n", mat(m)));
                }
            }
        }
        if !self.checks.is_empty() {
            out.push_str("CHECKS\n");
            for c in &self.checks {
                out.push_str(&c.kind);
                for a in &c.args {
                    out.push(' ');
                    out.push_str(a);
                }
                out.push('\n');
            }
        }
        out
    }
}
