//! Sliced oriented framed tangle diagrams: text format, parsing,
//! validation and combinatorial analysis.
//!
//! A diagram is a stack of slices read from the input boundary towards
//! the output boundary. Each slice is a list of tokens:
//!
//! * `id+` / `id-`: a strand, oriented with / against the reading
//!   direction,
//! * `cup+` / `cup-`: a local birth creating two strand ends; with `+`
//!   the strand flows left to right through the minimum (left leg
//!   oriented with the reading direction),
//! * `cap+` / `cap-`: a local death joining two strands; with `+` the
//!   left leg flows into the cap,
//! * `x+` / `x-`: a crossing; with `+` the strand entering at the left
//!   passes over,
//! * `tw+` / `tw-`: a positive / negative framing kink on one strand.
//!
//! Header lines `genus_in N`, `genus_out N`, `special C`,
//! `framing C K` and `pairs_top (1 2)(3 4)…` carry the boundary and
//! decoration data; `#` starts a comment. Boundary points are grouped
//! into index pairs; when no pairing is given consecutive points are
//! paired.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::laurent::LaurentPoly;

/// Orientation of a strand relative to the reading direction.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Dir {
    /// With the reading direction (towards the output boundary).
    South,
    /// Against the reading direction.
    North,
}

impl Dir {
    pub fn flip(self) -> Dir {
        match self {
            Dir::South => Dir::North,
            Dir::North => Dir::South,
        }
    }

    /// +1 for South, −1 for North.
    pub fn sign(self) -> i64 {
        match self {
            Dir::South => 1,
            Dir::North => -1,
        }
    }
}

/// One token of a slice.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Token {
    Id(Dir),
    /// Birth; `true` means the left leg is oriented South.
    Cup(bool),
    /// Death; `true` means the left leg is oriented South.
    Cap(bool),
    /// Crossing; `true` means the strand entering top-left passes over.
    Cross(bool),
    /// Framing kink, `+1` or `-1`.
    Twist(i8),
}

impl Token {
    /// Strand count on the side towards the input boundary.
    pub fn width_in(self) -> usize {
        match self {
            Token::Cup(_) => 0,
            Token::Id(_) | Token::Twist(_) => 1,
            Token::Cap(_) | Token::Cross(_) => 2,
        }
    }

    /// Strand count on the side towards the output boundary.
    pub fn width_out(self) -> usize {
        match self {
            Token::Cap(_) => 0,
            Token::Id(_) | Token::Twist(_) => 1,
            Token::Cup(_) | Token::Cross(_) => 2,
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            Token::Id(Dir::South) => "id+",
            Token::Id(Dir::North) => "id-",
            Token::Cup(true) => "cup+",
            Token::Cup(false) => "cup-",
            Token::Cap(true) => "cap+",
            Token::Cap(false) => "cap-",
            Token::Cross(true) => "x+",
            Token::Cross(false) => "x-",
            Token::Twist(1) => "tw+",
            Token::Twist(_) => "tw-",
        }
    }
}

/// A mark of a surgery coupon pair: a point on the boundary line
/// `line` at position `pos` (between slices `line-1` and `line`).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CouponMark {
    pub line: usize,
    pub pos: usize,
}

/// A pair of coupons representing an index-1 surgery (a 0-framed
/// annulus) attached at two points of the diagram.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CouponPair {
    pub marks: [CouponMark; 2],
}

/// A sliced tangle diagram with boundary pairings and decorations.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Diagram {
    pub slices: Vec<Vec<Token>>,
    pub genus_in: usize,
    pub genus_out: usize,
    /// Component id of the special strand, if any.
    pub special: Option<usize>,
    /// Framing offsets per component id, added to the kink count.
    pub framings: BTreeMap<usize, i64>,
    /// Pairing of the 2·genus_in input points; defaults to consecutive.
    pub pairs_in: Option<Vec<(usize, usize)>>,
    /// Pairing of the 2·genus_out output points; defaults to consecutive.
    pub pairs_out: Option<Vec<(usize, usize)>>,
    pub coupons: Vec<CouponPair>,
}

/// A closed diagram together with its framings.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FramedLink {
    pub diagram: Diagram,
}

/// A formal Laurent-polynomial combination of diagrams.
#[derive(Clone, Debug, Default)]
pub struct SkeinExpr {
    pub terms: Vec<(LaurentPoly, Diagram)>,
}

/// Generator letters of a cobordism word.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Letter {
    A(usize),
    AInv(usize),
    S(usize),
    SInv(usize),
    D(usize),
    DInv(usize),
    HPlus,
    HMinus,
}

impl Letter {
    pub fn text(self) -> String {
        match self {
            Letter::A(j) => format!("A{}", j),
            Letter::AInv(j) => format!("A{}-", j),
            Letter::S(j) => format!("S{}", j),
            Letter::SInv(j) => format!("S{}-", j),
            Letter::D(j) => format!("D{}", j),
            Letter::DInv(j) => format!("D{}-", j),
            Letter::HPlus => "H+".to_string(),
            Letter::HMinus => "H-".to_string(),
        }
    }
}

/// A composable word in the surface-generator letters, read left to
/// right from the input boundary.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CobordismWord {
    pub genus_in: usize,
    pub genus_out: usize,
    pub letters: Vec<Letter>,
}

/// Parse failure with position information.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at line {}, column {}: {}", self.line, self.col, self.msg)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ParseError {}

/// Structural invariant violation in an otherwise well-formed text.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ValidationError {
    pub msg: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid diagram: {}", self.msg)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ValidationError {}

/// Either kind of input failure.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum DiagramError {
    Parse(ParseError),
    Validation(ValidationError),
}

impl fmt::Display for DiagramError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagramError::Parse(e) => write!(f, "{}", e),
            DiagramError::Validation(e) => write!(f, "{}", e),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DiagramError {}

impl From<ParseError> for DiagramError {
    fn from(e: ParseError) -> Self {
        DiagramError::Parse(e)
    }
}

impl From<ValidationError> for DiagramError {
    fn from(e: ValidationError) -> Self {
        DiagramError::Validation(e)
    }
}

fn parse_token(word: &str, line: usize, col: usize) -> Result<Token, ParseError> {
    let t = match word {
        "id+" => Token::Id(Dir::South),
        "id-" => Token::Id(Dir::North),
        "cup+" => Token::Cup(true),
        "cup-" => Token::Cup(false),
        "cap+" => Token::Cap(true),
        "cap-" => Token::Cap(false),
        "x+" => Token::Cross(true),
        "x-" => Token::Cross(false),
        "tw+" => Token::Twist(1),
        "tw-" => Token::Twist(-1),
        other => {
            return Err(ParseError {
                line,
                col,
                msg: format!("unknown token `{}`", other),
            })
        }
    };
    Ok(t)
}

fn parse_pairs(rest: &str, line: usize) -> Result<Vec<(usize, usize)>, ParseError> {
    let mut pairs = Vec::new();
    let mut chars = rest.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c != '(' {
            return Err(ParseError {
                line,
                col: i + 1,
                msg: "expected `(` in pair list".to_string(),
            });
        }
        chars.next();
        let start = i + 1;
        let mut end = start;
        for (j, d) in chars.by_ref() {
            if d == ')' {
                end = j;
                break;
            }
        }
        if end == start && !rest[start..].starts_with(|d: char| d != ')') {
            return Err(ParseError {
                line,
                col: start,
                msg: "empty pair".to_string(),
            });
        }
        let inner = &rest[start..end];
        let nums: Vec<&str> = inner.split_whitespace().collect();
        if nums.len() != 2 {
            return Err(ParseError {
                line,
                col: start + 1,
                msg: "each pair needs exactly two point indices".to_string(),
            });
        }
        let a: usize = nums[0].parse().map_err(|_| ParseError {
            line,
            col: start + 1,
            msg: format!("bad index `{}`", nums[0]),
        })?;
        let b: usize = nums[1].parse().map_err(|_| ParseError {
            line,
            col: start + 1,
            msg: format!("bad index `{}`", nums[1]),
        })?;
        if a == 0 || b == 0 {
            return Err(ParseError {
                line,
                col: start + 1,
                msg: "point indices are 1-based".to_string(),
            });
        }
        pairs.push((a - 1, b - 1));
    }
    Ok(pairs)
}

/// Parses the slice text format into a validated diagram.
pub fn parse_diagram(text: &str) -> Result<Diagram, DiagramError> {
    let mut d = Diagram::default();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let head = words.next().unwrap();
        let header_int = |words: &mut core::str::SplitWhitespace, what: &str| -> Result<i64, ParseError> {
            let w = words.next().ok_or_else(|| ParseError {
                line: line_no,
                col: 1,
                msg: format!("`{}` needs a value", what),
            })?;
            w.parse().map_err(|_| ParseError {
                line: line_no,
                col: 1,
                msg: format!("bad {} value `{}`", what, w),
            })
        };
        match head {
            "genus_in" => d.genus_in = header_int(&mut words, "genus_in")? as usize,
            "genus_out" => d.genus_out = header_int(&mut words, "genus_out")? as usize,
            "special" => d.special = Some(header_int(&mut words, "special")? as usize),
            "framing" => {
                let c = header_int(&mut words, "framing component")? as usize;
                let k = header_int(&mut words, "framing offset")?;
                d.framings.insert(c, k);
            }
            "pairs_top" => {
                let rest = line.trim_start_matches("pairs_top");
                d.pairs_in = Some(parse_pairs(rest, line_no)?);
            }
            "pairs_bottom" => {
                let rest = line.trim_start_matches("pairs_bottom");
                d.pairs_out = Some(parse_pairs(rest, line_no)?);
            }
            _ => {
                // A slice line: comma-separated tokens.
                let mut slice = Vec::new();
                let mut col = 1;
                for piece in line.split(',') {
                    let w = piece.trim();
                    if w.is_empty() {
                        return Err(ParseError {
                            line: line_no,
                            col,
                            msg: "empty token".to_string(),
                        }
                        .into());
                    }
                    slice.push(parse_token(w, line_no, col)?);
                    col += piece.len() + 1;
                }
                d.slices.push(slice);
            }
        }
    }
    validate(&d)?;
    Ok(d)
}

/// Parses a closed-link input; rejects diagrams with boundary.
pub fn parse_link(text: &str) -> Result<FramedLink, DiagramError> {
    let d = parse_diagram(text)?;
    if d.genus_in != 0 || d.genus_out != 0 {
        return Err(ValidationError {
            msg: "a framed link must have empty boundary".to_string(),
        }
        .into());
    }
    Ok(FramedLink { diagram: d })
}

/// Parses a cobordism word of the form `g=N A1 S1- D1 H+ H-`.
pub fn parse_word(text: &str) -> Result<CobordismWord, DiagramError> {
    let mut genus_in = None;
    let mut letters = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        for w in line.split_whitespace() {
            if let Some(g) = w.strip_prefix("g=") {
                genus_in = Some(g.parse::<usize>().map_err(|_| ParseError {
                    line: ln + 1,
                    col: 1,
                    msg: format!("bad genus `{}`", g),
                })?);
                continue;
            }
            let letter = match w {
                "H+" => Letter::HPlus,
                "H-" => Letter::HMinus,
                _ => {
                    let (kind, rest) = w.split_at(1);
                    let (idx, inv) = match rest.strip_suffix('-') {
                        Some(r) => (r, true),
                        None => (rest, false),
                    };
                    let j: usize = idx.parse().map_err(|_| ParseError {
                        line: ln + 1,
                        col: 1,
                        msg: format!("bad letter `{}`", w),
                    })?;
                    match (kind, inv) {
                        ("A", false) => Letter::A(j),
                        ("A", true) => Letter::AInv(j),
                        ("S", false) => Letter::S(j),
                        ("S", true) => Letter::SInv(j),
                        ("D", false) => Letter::D(j),
                        ("D", true) => Letter::DInv(j),
                        _ => {
                            return Err(ParseError {
                                line: ln + 1,
                                col: 1,
                                msg: format!("unknown letter `{}`", w),
                            }
                            .into())
                        }
                    }
                }
            };
            letters.push(letter);
        }
    }
    let genus_in = genus_in.ok_or(ParseError {
        line: 1,
        col: 1,
        msg: "word input needs a leading `g=N`".to_string(),
    })?;
    let word = CobordismWord {
        genus_in,
        genus_out: 0,
        letters,
    };
    let genus_out = word.check_indices()?;
    Ok(CobordismWord { genus_out, ..word })
}

impl CobordismWord {
    /// Validates index ranges and genus bookkeeping; returns the final
    /// genus.
    pub fn check_indices(&self) -> Result<usize, ValidationError> {
        let mut g = self.genus_in;
        for l in &self.letters {
            match *l {
                Letter::A(j) | Letter::AInv(j) | Letter::S(j) | Letter::SInv(j) => {
                    if j < 1 || j > g {
                        return Err(ValidationError {
                            msg: format!("letter {} out of range at genus {}", l.text(), g),
                        });
                    }
                }
                Letter::D(j) | Letter::DInv(j) => {
                    if j < 1 || j + 1 > g {
                        return Err(ValidationError {
                            msg: format!("letter {} out of range at genus {}", l.text(), g),
                        });
                    }
                }
                Letter::HPlus => g += 1,
                Letter::HMinus => {
                    if g == 0 {
                        return Err(ValidationError {
                            msg: "H- at genus 0".to_string(),
                        });
                    }
                    g -= 1;
                }
            }
        }
        Ok(g)
    }
}

/// Serializes a diagram back to the text format.
pub fn serialize_diagram(d: &Diagram) -> String {
    let mut out = String::new();
    if d.genus_in != 0 {
        out.push_str(&format!("genus_in {}\n", d.genus_in));
    }
    if d.genus_out != 0 {
        out.push_str(&format!("genus_out {}\n", d.genus_out));
    }
    if let Some(s) = d.special {
        out.push_str(&format!("special {}\n", s));
    }
    for (c, k) in &d.framings {
        out.push_str(&format!("framing {} {}\n", c, k));
    }
    if let Some(pairs) = &d.pairs_in {
        out.push_str("pairs_top ");
        for (a, b) in pairs {
            out.push_str(&format!("({} {})", a + 1, b + 1));
        }
        out.push('\n');
    }
    if let Some(pairs) = &d.pairs_out {
        out.push_str("pairs_bottom ");
        for (a, b) in pairs {
            out.push_str(&format!("({} {})", a + 1, b + 1));
        }
        out.push('\n');
    }
    for slice in &d.slices {
        let words: Vec<&str> = slice.iter().map(|t| t.text()).collect();
        out.push_str(&words.join(", "));
        out.push('\n');
    }
    out
}

/// Static structure of a diagram: strand widths, node components,
/// orientations, crossings, linking data.
#[derive(Clone, Debug)]
pub struct Analysis {
    /// Strand count on each boundary line `0..=slices.len()`.
    pub widths: Vec<usize>,
    /// Offset of the first node of each line in the global numbering.
    pub line_offset: Vec<usize>,
    /// Component id per node.
    pub comp_of: Vec<usize>,
    pub n_components: usize,
    /// Orientation per node.
    pub dir_of: Vec<Dir>,
    /// Per component: touches the input / output boundary line.
    pub touches_in: Vec<bool>,
    pub touches_out: Vec<bool>,
    /// Full linking matrix: half-sum of crossing signs off the
    /// diagonal, self-writhe plus kinks plus framing headers on it.
    pub linking: Vec<Vec<i64>>,
    /// Twice the winding of each component through the special strand
    /// (sum of orientation signs at crossings with it).
    pub gamma_winding2: Vec<i64>,
    pub phi_parity: u8,
}

impl Analysis {
    pub fn node(&self, line: usize, pos: usize) -> usize {
        self.line_offset[line] + pos
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let r = self.find(self.parent[x]);
            self.parent[x] = r;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Per-token node references computed during the width sweep.
#[derive(Clone, Copy, Debug)]
pub struct TokenNodes {
    pub slice: usize,
    pub index: usize,
    pub token: Token,
    /// Nodes on the input side (line `slice`), left to right.
    pub top: [usize; 2],
    /// Nodes on the output side (line `slice + 1`), left to right.
    pub bottom: [usize; 2],
}

/// Computes node positions for every token; errors on width mismatch.
pub fn token_layout(d: &Diagram) -> Result<(Vec<usize>, Vec<usize>, Vec<TokenNodes>), ValidationError> {
    let mut widths = vec![2 * d.genus_in];
    for (s, slice) in d.slices.iter().enumerate() {
        let w_in: usize = slice.iter().map(|t| t.width_in()).sum();
        if w_in != *widths.last().unwrap() {
            return Err(ValidationError {
                msg: format!(
                    "slice {} consumes {} strands but {} are present",
                    s + 1,
                    w_in,
                    widths.last().unwrap()
                ),
            });
        }
        widths.push(slice.iter().map(|t| t.width_out()).sum());
    }
    if *widths.last().unwrap() != 2 * d.genus_out {
        return Err(ValidationError {
            msg: format!(
                "final slice leaves {} strands but genus_out {} needs {}",
                widths.last().unwrap(),
                d.genus_out,
                2 * d.genus_out
            ),
        });
    }
    let mut line_offset = vec![0usize];
    for w in &widths {
        let last = *line_offset.last().unwrap();
        line_offset.push(last + w);
    }
    line_offset.pop();
    let mut tokens = Vec::new();
    for (s, slice) in d.slices.iter().enumerate() {
        let mut top = line_offset[s];
        let mut bot = line_offset[s + 1];
        for (i, &t) in slice.iter().enumerate() {
            let mut tn = TokenNodes {
                slice: s,
                index: i,
                token: t,
                top: [usize::MAX; 2],
                bottom: [usize::MAX; 2],
            };
            for k in 0..t.width_in() {
                tn.top[k] = top + k;
            }
            for k in 0..t.width_out() {
                tn.bottom[k] = bot + k;
            }
            top += t.width_in();
            bot += t.width_out();
            tokens.push(tn);
        }
    }
    Ok((widths, line_offset, tokens))
}

/// Validates widths, pairings and orientation consistency.
pub fn validate(d: &Diagram) -> Result<(), ValidationError> {
    analyze(d).map(|_| ())
}

/// Full structural analysis: components, orientations, linking matrix,
/// winding numbers and parity.
pub fn analyze(d: &Diagram) -> Result<Analysis, ValidationError> {
    let (widths, line_offset, tokens) = token_layout(d)?;
    let n_nodes = line_offset.last().unwrap() + widths.last().unwrap();
    let n_lines = widths.len();

    // Union-find over nodes; a second parallel structure tracks
    // relative orientation (same/opposite) via an offset bit.
    let mut uf = UnionFind::new(n_nodes);
    // Orientation constraints: edges (a, b, same: bool), plus absolute
    // assignments from oriented tokens.
    let mut edges: Vec<(usize, usize, bool)> = Vec::new();
    let mut fixed: Vec<(usize, Dir)> = Vec::new();
    for tn in &tokens {
        match tn.token {
            Token::Id(dir) => {
                uf.union(tn.top[0], tn.bottom[0]);
                edges.push((tn.top[0], tn.bottom[0], true));
                fixed.push((tn.top[0], dir));
            }
            Token::Twist(_) => {
                uf.union(tn.top[0], tn.bottom[0]);
                edges.push((tn.top[0], tn.bottom[0], true));
            }
            Token::Cup(plus) => {
                uf.union(tn.bottom[0], tn.bottom[1]);
                edges.push((tn.bottom[0], tn.bottom[1], false));
                fixed.push((tn.bottom[0], if plus { Dir::South } else { Dir::North }));
            }
            Token::Cap(plus) => {
                uf.union(tn.top[0], tn.top[1]);
                edges.push((tn.top[0], tn.top[1], false));
                fixed.push((tn.top[0], if plus { Dir::South } else { Dir::North }));
            }
            Token::Cross(_) => {
                uf.union(tn.top[0], tn.bottom[1]);
                uf.union(tn.top[1], tn.bottom[0]);
                edges.push((tn.top[0], tn.bottom[1], true));
                edges.push((tn.top[1], tn.bottom[0], true));
            }
        }
    }
    // Boundary pairings join nodes into index pairs (through the
    // bounding surface), which also links components for the purpose
    // of counting, but not orientations.
    let default_pairs = |g: usize| (0..g).map(|j| (2 * j, 2 * j + 1)).collect::<Vec<_>>();
    let pairs_in = d.pairs_in.clone().unwrap_or_else(|| default_pairs(d.genus_in));
    let pairs_out = d.pairs_out.clone().unwrap_or_else(|| default_pairs(d.genus_out));
    let check_pairs = |pairs: &[(usize, usize)], n: usize, side: &str| -> Result<(), ValidationError> {
        let mut seen = vec![false; n];
        for &(a, b) in pairs {
            for p in [a, b] {
                if p >= n {
                    return Err(ValidationError {
                        msg: format!("{} pair index {} out of range (width {})", side, p + 1, n),
                    });
                }
                if seen[p] {
                    return Err(ValidationError {
                        msg: format!("{} point {} paired twice", side, p + 1),
                    });
                }
                seen[p] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(ValidationError {
                msg: format!("unpaired {} boundary point", side),
            });
        }
        Ok(())
    };
    check_pairs(&pairs_in, 2 * d.genus_in, "input")?;
    check_pairs(&pairs_out, 2 * d.genus_out, "output")?;

    // Resolve orientations by propagation over the constraint graph.
    let mut dir_of: Vec<Option<Dir>> = vec![None; n_nodes];
    let mut adj: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n_nodes];
    for &(a, b, same) in &edges {
        adj[a].push((b, same));
        adj[b].push((a, same));
    }
    for &(node, dir) in &fixed {
        // Breadth-first assignment from each fixed node.
        let mut stack = vec![(node, dir)];
        while let Some((n, dir)) = stack.pop() {
            match dir_of[n] {
                Some(existing) => {
                    if existing != dir {
                        return Err(ValidationError {
                            msg: "conflicting strand orientations".to_string(),
                        });
                    }
                }
                None => {
                    dir_of[n] = Some(dir);
                    for &(m, same) in &adj[n] {
                        let md = if same { dir } else { dir.flip() };
                        if dir_of[m] != Some(md) {
                            stack.push((m, md));
                        }
                    }
                }
            }
        }
    }
    if dir_of.iter().any(|o| o.is_none()) {
        return Err(ValidationError {
            msg: "strand with undetermined orientation (add id+/id- tokens)".to_string(),
        });
    }
    let dir_of: Vec<Dir> = dir_of.into_iter().map(|o| o.unwrap()).collect();

    // Components before boundary identification, numbered by first node.
    let mut comp_of = vec![usize::MAX; n_nodes];
    let mut n_components = 0;
    for n in 0..n_nodes {
        let r = uf.find(n);
        if comp_of[r] == usize::MAX {
            comp_of[r] = n_components;
            n_components += 1;
        }
        comp_of[n] = comp_of[r];
    }
    if let Some(s) = d.special {
        if s >= n_components {
            return Err(ValidationError {
                msg: format!("special component {} does not exist ({} components)", s, n_components),
            });
        }
    }
    for c in d.framings.keys() {
        if *c >= n_components {
            return Err(ValidationError {
                msg: format!("framing names unknown component {}", c),
            });
        }
    }

    let mut touches_in = vec![false; n_components];
    let mut touches_out = vec![false; n_components];
    for p in 0..widths[0] {
        touches_in[comp_of[line_offset[0] + p]] = true;
    }
    for p in 0..widths[n_lines - 1] {
        touches_out[comp_of[line_offset[n_lines - 1] + p]] = true;
    }

    // Linking data from crossings, kinks and framing headers.
    let mut cross_sum = vec![vec![0i64; n_components]; n_components];
    let mut gamma_winding2 = vec![0i64; n_components];
    for tn in &tokens {
        match tn.token {
            Token::Cross(left_over) => {
                let c1 = comp_of[tn.top[0]];
                let c2 = comp_of[tn.top[1]];
                let sign = if left_over { 1 } else { -1 };
                let geo = sign * dir_of[tn.top[0]].sign() * dir_of[tn.top[1]].sign();
                cross_sum[c1][c2] += geo;
                if c1 != c2 {
                    cross_sum[c2][c1] += geo;
                }
                if let Some(s) = d.special {
                    if (c1 == s) != (c2 == s) {
                        let other_node = if c1 == s { tn.top[1] } else { tn.top[0] };
                        gamma_winding2[comp_of[other_node]] += dir_of[other_node].sign();
                    }
                }
            }
            Token::Twist(k) => {
                let c = comp_of[tn.top[0]];
                cross_sum[c][c] += k as i64;
            }
            _ => {}
        }
    }
    let mut linking = vec![vec![0i64; n_components]; n_components];
    for i in 0..n_components {
        for j in 0..n_components {
            if i == j {
                // The diagonal is the writhe: full sum of self-crossing
                // signs plus kinks and the framing header.
                linking[i][i] = cross_sum[i][i] + d.framings.get(&i).copied().unwrap_or(0);
            } else {
                if cross_sum[i][j] % 2 != 0 {
                    return Err(ValidationError {
                        msg: format!("components {} and {} cross an odd number of times", i, j),
                    });
                }
                linking[i][j] = cross_sum[i][j] / 2;
            }
        }
    }

    let not_out = (0..n_components).filter(|&c| !touches_out[c]).count();
    Ok(Analysis {
        widths,
        line_offset,
        comp_of,
        n_components,
        dir_of,
        touches_in,
        touches_out,
        linking,
        gamma_winding2,
        phi_parity: (not_out % 2) as u8,
    })
}

/// Union-find components, linking matrix, winding and parity in the
/// shape promised to callers.
pub struct ComponentReport {
    pub n_components: usize,
    pub linking: Vec<Vec<i64>>,
    pub gamma_winding: Vec<i64>,
    pub phi_parity: u8,
}

/// Public component analysis; winding numbers must be integral.
pub fn component_analysis(d: &Diagram) -> Result<ComponentReport, ValidationError> {
    let a = analyze(d)?;
    let mut gamma_winding = Vec::new();
    for w2 in &a.gamma_winding2 {
        if w2 % 2 != 0 {
            return Err(ValidationError {
                msg: "component crosses the special strand an odd number of times".to_string(),
            });
        }
        gamma_winding.push(w2 / 2);
    }
    Ok(ComponentReport {
        n_components: a.n_components,
        linking: a.linking,
        gamma_winding,
        phi_parity: a.phi_parity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_round_trip() {
        let d = parse_diagram("cup+\ncap+\n").unwrap();
        assert_eq!(d.slices.len(), 2);
        let rep = component_analysis(&d).unwrap();
        assert_eq!(rep.n_components, 1);
        assert_eq!(rep.phi_parity, 1);
        let text = serialize_diagram(&d);
        assert_eq!(parse_diagram(&text).unwrap(), d);
    }

    #[test]
    fn width_mismatch_rejected() {
        let err = parse_diagram("cup+\nid+\n");
        assert!(matches!(err, Err(DiagramError::Validation(_))));
        let err = parse_diagram("id+\n");
        assert!(matches!(err, Err(DiagramError::Validation(_))));
    }

    #[test]
    fn unknown_token_rejected() {
        let err = parse_diagram("cup+\nfoo\n");
        assert!(matches!(err, Err(DiagramError::Parse(_))));
    }

    #[test]
    fn orientation_conflict_rejected() {
        // A circle whose two sides are both declared southward.
        let err = parse_diagram("cup+\nid+, id+\ncap+\n");
        assert!(matches!(err, Err(DiagramError::Validation(_))));
        // Consistent orientation passes.
        parse_diagram("cup+\nid+, id-\ncap+\n").unwrap();
    }

    #[test]
    fn hopf_link_analysis() {
        // Two circles crossing twice.
        let text = "cup+\nid+, cup+, id-\nid+, id+, x+\nid+, id+, x+\nid+, cap+, id-\ncap+\n";
        let d = parse_diagram(text).unwrap();
        let rep = component_analysis(&d).unwrap();
        assert_eq!(rep.n_components, 2);
        assert_eq!(rep.linking[0][1], 1);
        assert_eq!(rep.linking[1][0], 1);
        assert_eq!(rep.phi_parity, 0);
    }

    #[test]
    fn twist_and_framing_diagonal() {
        let d = parse_diagram("framing 0 3\ncup+\ntw+, id-\ncap+\n").unwrap();
        let rep = component_analysis(&d).unwrap();
        assert_eq!(rep.linking[0][0], 4);
    }

    #[test]
    fn word_parsing() {
        let w = parse_word("g=1 A1 S1- H+ D1 H-").unwrap();
        assert_eq!(w.genus_in, 1);
        assert_eq!(w.genus_out, 1);
        assert_eq!(w.letters.len(), 5);
        assert!(parse_word("g=1 D1").is_err());
        assert!(parse_word("g=0 H-").is_err());
        assert!(parse_word("A1").is_err());
    }

    #[test]
    fn open_diagram_pairs() {
        // A pair of vertical strands: genus 1 in and out.
        let d = parse_diagram("genus_in 1\ngenus_out 1\nid+, id-\n").unwrap();
        let a = analyze(&d).unwrap();
        assert_eq!(a.n_components, 2);
        assert!(a.touches_in[0] && a.touches_out[0]);
        // Bad pairing rejected.
        let bad = parse_diagram("genus_in 1\ngenus_out 1\npairs_top (1 1)\nid+, id-\n");
        assert!(matches!(bad, Err(DiagramError::Validation(_))));
    }
}
