//! Discrete grid mazes: layouts, transitions, achieved goals and the sparse reward.
//!
//! Cells are addressed as `(x, y)` with `y = 0` the bottom row. Each cell
//! carries a 4-bit wall mask (bit0 = N, bit1 = E, bit2 = S, bit3 = W).

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const WALL_N: u8 = 1;
pub const WALL_E: u8 = 2;
pub const WALL_S: u8 = 4;
pub const WALL_W: u8 = 8;

/// Number of scalar channels in a serialized observation.
pub const OBS_CHANNELS: usize = 8;

/// Default episode length.
pub const DEFAULT_EPISODE_LEN: usize = 150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn offset(self, action: Action) -> Cell {
        let (dx, dy) = action.delta();
        Cell::new(self.x + dx, self.y + dy)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Goals live in cell space; `φ` is the identity on the cell.
pub type Goal = Cell;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    N,
    E,
    S,
    W,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::N, Action::E, Action::S, Action::W];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Action {
        Action::ALL[i]
    }

    pub fn delta(self) -> (i32, i32) {
        match self {
            Action::N => (0, 1),
            Action::E => (1, 0),
            Action::S => (0, -1),
            Action::W => (-1, 0),
        }
    }

    pub fn wall_bit(self) -> u8 {
        1 << self.index()
    }

    pub fn opposite(self) -> Action {
        match self {
            Action::N => Action::S,
            Action::E => Action::W,
            Action::S => Action::N,
            Action::W => Action::E,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Action::N => 'N',
            Action::E => 'E',
            Action::S => 'S',
            Action::W => 'W',
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// What the agent sees: its cell, the within-cell offset (always zero here)
/// and the walls around the current cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Observation {
    pub cell: Cell,
    pub offset: (i32, i32),
    pub wall_bits: [bool; 4],
}

impl Observation {
    /// The 8 channels `[x, y, off_x, off_y, wall_N, wall_E, wall_S, wall_W]`.
    pub fn channels(&self) -> [f64; OBS_CHANNELS] {
        let b = |v: bool| if v { 1.0 } else { 0.0 };
        [
            self.cell.x as f64,
            self.cell.y as f64,
            self.offset.0 as f64,
            self.offset.1 as f64,
            b(self.wall_bits[0]),
            b(self.wall_bits[1]),
            b(self.wall_bits[2]),
            b(self.wall_bits[3]),
        ]
    }

    pub fn blocked(&self, action: Action) -> bool {
        self.wall_bits[action.index()]
    }
}

/// `φ`: projection of an observation onto its cell.
pub fn achieved_goal(s: &Observation) -> Goal {
    s.cell
}

/// 0 when the next observation sits on the goal cell, −1 otherwise.
pub fn sparse_reward(s_next: &Observation, g: Goal) -> f64 {
    if achieved_goal(s_next) == g {
        0.0
    } else {
        -1.0
    }
}

/// Immutable maze layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MazeSpec {
    name: String,
    width: usize,
    height: usize,
    walls: Vec<u8>,
    start: Cell,
    desired_goals: Vec<Goal>,
}

impl MazeSpec {
    /// Validates wall consistency and bounds before building the layout.
    pub fn new(
        name: impl Into<String>,
        width: usize,
        height: usize,
        walls: Vec<u8>,
        start: Cell,
        desired_goals: Vec<Goal>,
    ) -> Result<Self> {
        let spec = MazeSpec {
            name: name.into(),
            width,
            height,
            walls,
            start,
            desired_goals,
        };
        spec.validate()
            .map_err(|msg| Error::Layout { line: 0, msg })?;
        Ok(spec)
    }

    /// Builds a maze whose only open passages join consecutive cells of `path`.
    /// The start is the first path cell and the goal the last.
    pub fn from_corridor(
        name: impl Into<String>,
        width: usize,
        height: usize,
        path: &[Cell],
    ) -> Result<Self> {
        let mut walls = vec![WALL_N | WALL_E | WALL_S | WALL_W; width * height];
        for pair in path.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let action = Action::ALL
                .into_iter()
                .find(|act| a.offset(*act) == b)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("path cells {a} and {b} are not adjacent"))
                })?;
            let ia = a.y as usize * width + a.x as usize;
            let ib = b.y as usize * width + b.x as usize;
            walls[ia] &= !action.wall_bit();
            walls[ib] &= !action.opposite().wall_bit();
        }
        let start = *path
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty path".into()))?;
        let goal = *path.last().unwrap();
        MazeSpec::new(name, width, height, walls, start, vec![goal])
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.width == 0 || self.height == 0 {
            return Err("maze must have at least one cell".into());
        }
        if self.walls.len() != self.width * self.height {
            return Err(format!(
                "expected {} wall masks, found {}",
                self.width * self.height,
                self.walls.len()
            ));
        }
        for y in 0..self.height as i32 {
            for x in 0..self.width as i32 {
                let c = Cell::new(x, y);
                let mask = self.mask(c);
                if mask > 0xF {
                    return Err(format!("cell {c} has mask {mask:#x} beyond 4 bits"));
                }
                for action in Action::ALL {
                    let n = c.offset(action);
                    let wall = mask & action.wall_bit() != 0;
                    if !self.contains(n) {
                        if !wall {
                            return Err(format!("boundary cell {c} is open towards {action}"));
                        }
                    } else if wall != (self.mask(n) & action.opposite().wall_bit() != 0) {
                        return Err(format!(
                            "cell {c} {action}-wall disagrees with cell {n} {}-wall",
                            action.opposite()
                        ));
                    }
                }
            }
        }
        if !self.contains(self.start) {
            return Err(format!("start {} lies outside the grid", self.start));
        }
        if self.desired_goals.is_empty() {
            return Err("at least one desired goal is required".into());
        }
        if let Some(g) = self.desired_goals.iter().find(|g| !self.contains(**g)) {
            return Err(format!("goal {g} lies outside the grid"));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn desired_goals(&self) -> &[Goal] {
        &self.desired_goals
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    /// Dense index of an in-grid cell, row-major from the bottom row.
    pub fn cell_index(&self, c: Cell) -> usize {
        debug_assert!(self.contains(c));
        c.y as usize * self.width + c.x as usize
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new((index % self.width) as i32, (index / self.width) as i32)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cell_count()).map(|i| self.cell_at(i))
    }

    pub fn mask(&self, c: Cell) -> u8 {
        self.walls[self.cell_index(c)]
    }

    pub fn observe(&self, c: Cell) -> Observation {
        let mask = self.mask(c);
        Observation {
            cell: c,
            offset: (0, 0),
            wall_bits: [
                mask & WALL_N != 0,
                mask & WALL_E != 0,
                mask & WALL_S != 0,
                mask & WALL_W != 0,
            ],
        }
    }

    pub fn start_observation(&self) -> Observation {
        self.observe(self.start)
    }

    /// Deterministic transition. Moving into a wall leaves the agent in place.
    pub fn step(&self, s: &Observation, a: Action) -> Observation {
        if s.blocked(a) {
            *s
        } else {
            self.observe(s.cell.offset(a))
        }
    }

    pub fn neighbors(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        let mask = self.mask(c);
        Action::ALL
            .into_iter()
            .filter(move |a| mask & a.wall_bit() == 0)
            .map(move |a| c.offset(a))
    }

    /// Breadth-first shortest path (inclusive of both ends), if one exists.
    pub fn shortest_path(&self, from: Cell, to: Cell) -> Option<Vec<Cell>> {
        let mut prev = vec![usize::MAX; self.cell_count()];
        let mut queue = VecDeque::from([from]);
        prev[self.cell_index(from)] = self.cell_index(from);
        while let Some(c) = queue.pop_front() {
            if c == to {
                let mut path = vec![c];
                let mut i = self.cell_index(c);
                while i != self.cell_index(from) {
                    i = prev[i];
                    path.push(self.cell_at(i));
                }
                path.reverse();
                return Some(path);
            }
            for n in self.neighbors(c) {
                let ni = self.cell_index(n);
                if prev[ni] == usize::MAX {
                    prev[ni] = self.cell_index(c);
                    queue.push_back(n);
                }
            }
        }
        None
    }

    /// Serializes to the layout document format accepted by [`load_maze`].
    pub fn to_document(&self) -> String {
        let mut out = format!("{} {}\n", self.width, self.height);
        for y in (0..self.height as i32).rev() {
            for x in 0..self.width as i32 {
                out.push(
                    char::from_digit(self.mask(Cell::new(x, y)) as u32, 16)
                        .unwrap()
                        .to_ascii_uppercase(),
                );
            }
            out.push('\n');
        }
        out.push_str(&format!("S {} {}\n", self.start.x, self.start.y));
        for g in &self.desired_goals {
            out.push_str(&format!("G {} {}\n", g.x, g.y));
        }
        out
    }

    /// ASCII picture, top row first. `S` marks the start and `G` the goals.
    pub fn render(&self) -> String {
        let goals: BTreeSet<Cell> = self.desired_goals.iter().copied().collect();
        let mut out = String::new();
        for y in (0..self.height as i32).rev() {
            let mut top = String::new();
            let mut mid = String::new();
            for x in 0..self.width as i32 {
                let c = Cell::new(x, y);
                let m = self.mask(c);
                top.push('+');
                top.push_str(if m & WALL_N != 0 { "---" } else { "   " });
                mid.push(if m & WALL_W != 0 { '|' } else { ' ' });
                let tag = if c == self.start {
                    " S "
                } else if goals.contains(&c) {
                    " G "
                } else {
                    "   "
                };
                mid.push_str(tag);
            }
            top.push('+');
            mid.push('|');
            out.push_str(&top);
            out.push('\n');
            out.push_str(&mid);
            out.push('\n');
        }
        out.push_str(&"+---".repeat(self.width));
        out.push_str("+\n");
        out
    }
}

/// Names of the embedded layouts.
pub const BUILTIN_MAZES: [&str; 3] = ["spiral", "spiral_c", "serpentine"];

const SPIRAL_DOC: &str = include_str!("../mazes/spiral.txt");
const SPIRAL_C_DOC: &str = include_str!("../mazes/spiral_c.txt");
const SERPENTINE_DOC: &str = include_str!("../mazes/serpentine.txt");

/// Loads one of the embedded layouts by name.
pub fn builtin(name: &str) -> Result<MazeSpec> {
    let doc = match name {
        "spiral" => SPIRAL_DOC,
        "spiral_c" => SPIRAL_C_DOC,
        "serpentine" => SERPENTINE_DOC,
        other => return Err(Error::UnknownMaze(other.to_string())),
    };
    load_maze_named(name, doc)
}

/// Parses a layout document: `W H`, then `H` rows of `W` hex wall masks
/// (top row first, so the last grid line is row 0), then `S x y` and one
/// or more `G x y`. Blank lines and `#` comments are ignored.
pub fn load_maze(text: &str) -> Result<MazeSpec> {
    load_maze_named("custom", text)
}

pub fn load_maze_named(name: &str, text: &str) -> Result<MazeSpec> {
    let err = |line: usize, msg: String| Error::Layout { line, msg };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| err(1, "missing `W H` header".into()))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let parse_dim = |s: &str| s.parse::<usize>().ok().filter(|v| *v > 0);
    let (width, height) = match dims.as_slice() {
        [w, h] => match (parse_dim(w), parse_dim(h)) {
            (Some(w), Some(h)) => (w, h),
            _ => return Err(err(hline, format!("malformed header `{header}`"))),
        },
        _ => return Err(err(hline, format!("malformed header `{header}`"))),
    };

    let mut walls = vec![0u8; width * height];
    let mut row_lines = vec![0usize; height];
    for row in 0..height {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| err(hline, format!("expected {height} grid rows, found {row}")))?;
        if l.chars().count() != width {
            return Err(err(ln, format!("expected {width} hex digits, found `{l}`")));
        }
        let y = height - 1 - row;
        row_lines[y] = ln;
        for (x, ch) in l.chars().enumerate() {
            let v = ch
                .to_digit(16)
                .ok_or_else(|| err(ln, format!("`{ch}` is not a hexadecimal digit")))?;
            walls[y * width + x] = v as u8;
        }
    }

    let mut start = None;
    let mut goals = Vec::new();
    let mut start_line = 0;
    let mut goal_lines = Vec::new();
    for (ln, l) in lines {
        let parts: Vec<&str> = l.split_whitespace().collect();
        let coords = |parts: &[&str]| -> Option<Cell> {
            match parts {
                [_, x, y] => Some(Cell::new(x.parse().ok()?, y.parse().ok()?)),
                _ => None,
            }
        };
        match parts.first().copied() {
            Some("S") => {
                if start.is_some() {
                    return Err(err(ln, "duplicate start line".into()));
                }
                start =
                    Some(coords(&parts).ok_or_else(|| err(ln, format!("malformed start `{l}`")))?);
                start_line = ln;
            }
            Some("G") => {
                goals.push(coords(&parts).ok_or_else(|| err(ln, format!("malformed goal `{l}`")))?);
                goal_lines.push(ln);
            }
            _ => return Err(err(ln, format!("unexpected line `{l}`"))),
        }
    }
    let start = start.ok_or_else(|| err(hline, "missing `S x y` line".into()))?;
    if goals.is_empty() {
        return Err(err(hline, "missing `G x y` line".into()));
    }

    let spec = MazeSpec {
        name: name.to_string(),
        width,
        height,
        walls,
        start,
        desired_goals: goals,
    };
    // Report problems against the line that introduced them.
    for y in 0..height as i32 {
        for x in 0..width as i32 {
            let c = Cell::new(x, y);
            let m = spec.mask(c);
            for action in Action::ALL {
                let n = c.offset(action);
                let wall = m & action.wall_bit() != 0;
                if !spec.contains(n) {
                    if !wall {
                        return Err(err(
                            row_lines[y as usize],
                            format!("boundary cell {c} is open towards {action}"),
                        ));
                    }
                } else if wall != (spec.mask(n) & action.opposite().wall_bit() != 0) {
                    let line = row_lines[y as usize].max(row_lines[n.y as usize]);
                    return Err(err(
                        line,
                        format!(
                            "cell {c} {action}-wall disagrees with cell {n} {}-wall",
                            action.opposite()
                        ),
                    ));
                }
            }
        }
    }
    if !spec.contains(start) {
        return Err(err(
            start_line,
            format!("start {start} lies outside the grid"),
        ));
    }
    for (g, ln) in spec.desired_goals.iter().zip(goal_lines) {
        if !spec.contains(*g) {
            return Err(err(ln, format!("goal {g} lies outside the grid")));
        }
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_room(w: usize, h: usize) -> MazeSpec {
        let mut walls = vec![0u8; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut m = 0;
                if y == h - 1 {
                    m |= WALL_N;
                }
                if x == w - 1 {
                    m |= WALL_E;
                }
                if y == 0 {
                    m |= WALL_S;
                }
                if x == 0 {
                    m |= WALL_W;
                }
                walls[y * w + x] = m;
            }
        }
        MazeSpec::new(
            "room",
            w,
            h,
            walls,
            Cell::new(0, 0),
            vec![Cell::new(w as i32 - 1, h as i32 - 1)],
        )
        .unwrap()
    }

    #[test]
    fn spiral_is_ten_by_ten_with_center_goal() {
        let m = builtin("spiral").unwrap();
        assert_eq!((m.width(), m.height()), (10, 10));
        assert_eq!(m.start(), Cell::new(0, 0));
        let g = m.desired_goals()[0];
        assert!(
            (3..=6).contains(&g.x) && (3..=6).contains(&g.y),
            "goal {g} is not central"
        );
        assert_eq!(achieved_goal(&m.start_observation()), Cell::new(0, 0));
    }

    #[test]
    fn builtins_round_trip_through_documents() {
        for name in BUILTIN_MAZES {
            let m = builtin(name).unwrap();
            let again = load_maze_named(name, &m.to_document()).unwrap();
            assert_eq!(m, again);
        }
        assert!(matches!(builtin("nope"), Err(Error::UnknownMaze(_))));
    }

    #[test]
    fn single_cell_maze_never_moves() {
        let m = load_maze("1 1\nF\nS 0 0\nG 0 0\n").unwrap();
        let s = m.start_observation();
        for a in Action::ALL {
            assert_eq!(m.step(&s, a), s);
        }
    }

    #[test]
    fn inconsistent_walls_are_rejected_with_line() {
        // (0,0) has an E wall (D = N|S|W ... plus E) while (1,0) has no W wall.
        let doc = "2 1\nF5\nS 0 0\nG 1 0\n";
        match load_maze(doc) {
            Err(Error::Layout { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("disagrees"), "{msg}");
            }
            other => panic!("expected layout error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_documents_report_lines() {
        let cases = [
            ("2\nDD\nS 0 0\nG 0 0\n", 1),
            ("1 1\nZ\nS 0 0\nG 0 0\n", 2),
            ("1 1\nF\nS 3 0\nG 0 0\n", 3),
            ("1 1\nF\nS 0 0\nG 0 0\nG 0 5\n", 5),
            ("1 1\nF\nS 0 0\nX\n", 4),
        ];
        for (doc, want) in cases {
            match load_maze(doc) {
                Err(Error::Layout { line, .. }) => assert_eq!(line, want, "{doc:?}"),
                other => panic!("{doc:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn boundary_must_be_walled() {
        let err = load_maze("1 1\n7\nS 0 0\nG 0 0\n").unwrap_err();
        assert!(err.to_string().contains("boundary"), "{err}");
    }

    #[test]
    fn step_moves_bumps_and_round_trips() {
        let m = open_room(3, 3);
        let s = m.observe(Cell::new(1, 1));
        assert_eq!(m.step(&s, Action::E).cell, Cell::new(2, 1));
        let edge = m.observe(Cell::new(2, 1));
        assert_eq!(m.step(&edge, Action::E), edge);
        let back = m.step(&m.step(&s, Action::E), Action::W);
        assert_eq!(back, s);
    }

    #[test]
    fn observation_has_eight_channels_matching_walls() {
        let m = builtin("spiral").unwrap();
        for c in m.cells() {
            let o = m.observe(c);
            let ch = o.channels();
            assert_eq!(ch.len(), OBS_CHANNELS);
            assert_eq!((ch[2], ch[3]), (0.0, 0.0));
            let mask = m.mask(c);
            for a in Action::ALL {
                assert_eq!(ch[4 + a.index()] == 1.0, mask & a.wall_bit() != 0);
            }
        }
    }

    #[test]
    fn achieved_goal_ignores_walls() {
        let a = Observation {
            cell: Cell::new(3, 7),
            offset: (0, 0),
            wall_bits: [true, false, false, true],
        };
        let b = Observation {
            wall_bits: [false; 4],
            ..a
        };
        assert_eq!(achieved_goal(&a), Cell::new(3, 7));
        assert_eq!(achieved_goal(&a), achieved_goal(&b));
    }

    #[test]
    fn sparse_reward_is_zero_only_on_goal() {
        let m = open_room(3, 3);
        let s = m.observe(Cell::new(1, 1));
        assert_eq!(sparse_reward(&s, Cell::new(1, 1)), 0.0);
        assert_eq!(sparse_reward(&s, Cell::new(2, 1)), -1.0);
        assert_eq!(sparse_reward(&s, achieved_goal(&s)), 0.0);
    }

    #[test]
    fn spiral_has_a_single_long_corridor() {
        let m = builtin("spiral").unwrap();
        let path = m.shortest_path(m.start(), m.desired_goals()[0]).unwrap();
        assert!(path.len() > 90, "path has {} cells", path.len());
        // A perfect corridor: every cell has at most two openings, ends have one.
        let degrees: Vec<usize> = m.cells().map(|c| m.neighbors(c).count()).collect();
        assert!(degrees.iter().all(|d| (1..=2).contains(d)));
        assert_eq!(degrees.iter().filter(|d| **d == 1).count(), 2);
    }

    #[test]
    fn variants_are_reachable_corridors() {
        for name in ["spiral_c", "serpentine"] {
            let m = builtin(name).unwrap();
            let path = m.shortest_path(m.start(), m.desired_goals()[0]).unwrap();
            assert_eq!(path.len(), 100, "{name}");
        }
        let spiral = builtin("spiral").unwrap();
        let mirror = builtin("spiral_c").unwrap();
        for c in spiral.cells() {
            let mc = Cell::new(9 - c.x, c.y);
            let mut m = spiral.mask(c);
            // Swap E and W bits under the mirror.
            let e = m & WALL_E != 0;
            let w = m & WALL_W != 0;
            m &= !(WALL_E | WALL_W);
            if e {
                m |= WALL_W;
            }
            if w {
                m |= WALL_E;
            }
            assert_eq!(mirror.mask(mc), m);
        }
    }
}
