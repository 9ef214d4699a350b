//! Finite protocol trees and their evaluation.
//!
//! Every internal node belongs to the party who speaks there and carries
//! that party's honest distribution over messages. Leaves carry the pair of
//! outputs (Alice, Bob). A cheater may pick any child at its own nodes,
//! including children an honest party would pick with probability zero.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::ClassicalReport;
use crate::error::TreeError;
use crate::protocol::Outcome;

const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub prob: f64,
    pub node: Node,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf { alice: Outcome, bob: Outcome },
    Move { party: Party, branches: Vec<Branch> },
}

impl Node {
    pub fn leaf(alice: Outcome, bob: Outcome) -> Node {
        Node::Leaf { alice, bob }
    }

    /// Leaf where both parties output `c`.
    pub fn agreed(c: Outcome) -> Node {
        Node::Leaf { alice: c, bob: c }
    }

    pub fn moves(party: Party, branches: impl IntoIterator<Item = (f64, Node)>) -> Node {
        Node::Move {
            party,
            branches: branches
                .into_iter()
                .map(|(prob, node)| Branch { prob, node })
                .collect(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Move { branches, .. } => {
                1 + branches.iter().map(|b| b.node.depth()).max().unwrap_or(0)
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Move { branches, .. } => {
                1 + branches.iter().map(|b| b.node.node_count()).sum::<usize>()
            }
        }
    }

    /// Same protocol with outputs 0 and 1 exchanged.
    pub fn mirrored(&self) -> Node {
        match self {
            Node::Leaf { alice, bob } => Node::Leaf {
                alice: alice.flipped(),
                bob: bob.flipped(),
            },
            Node::Move { party, branches } => Node::Move {
                party: *party,
                branches: branches
                    .iter()
                    .map(|b| Branch {
                        prob: b.prob,
                        node: b.node.mirrored(),
                    })
                    .collect(),
            },
        }
    }

    fn validate(&self, path: &mut String) -> Result<(), TreeError> {
        let Node::Move { branches, .. } = self else {
            return Ok(());
        };
        if branches.is_empty() {
            return Err(TreeError::EmptyNode {
                path: path_or_root(path),
            });
        }
        let mut sum = 0.0;
        for (i, b) in branches.iter().enumerate() {
            if !(b.prob.is_finite() && (0.0..=1.0).contains(&b.prob)) {
                return Err(TreeError::BadProbability {
                    path: path_or_root(path),
                    value: b.prob,
                });
            }
            sum += b.prob;
            let len = path.len();
            path.push_str(&format!("/{i}"));
            b.node.validate(path)?;
            path.truncate(len);
        }
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(TreeError::NotNormalized {
                path: path_or_root(path),
                sum,
            });
        }
        Ok(())
    }
}

fn path_or_root(path: &str) -> String {
    if path.is_empty() {
        "root".to_string()
    } else {
        format!("root{path}")
    }
}

/// A validated protocol tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTree {
    root: Node,
}

impl ProtocolTree {
    pub fn new(root: Node) -> Result<Self, TreeError> {
        root.validate(&mut String::new())?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn mirrored(&self) -> ProtocolTree {
        ProtocolTree {
            root: self.root.mirrored(),
        }
    }

    /// Prepends a fair move by `party` choosing between this protocol and
    /// its 0↔1 mirror, which forces p00 = p11.
    pub fn symmetrized(&self, party: Party) -> ProtocolTree {
        ProtocolTree {
            root: Node::moves(
                party,
                [(0.5, self.root.clone()), (0.5, self.root.mirrored())],
            ),
        }
    }
}

/// p*y(u): the most a dishonest Alice can make honest Bob output `y` from `node`.
pub fn alice_forces(node: &Node, y: Outcome) -> f64 {
    forces(node, Party::Alice, y)
}

/// px*(u): the most a dishonest Bob can make honest Alice output `x` from `node`.
pub fn bob_forces(node: &Node, x: Outcome) -> f64 {
    forces(node, Party::Bob, x)
}

fn forces(node: &Node, cheater: Party, target: Outcome) -> f64 {
    match node {
        Node::Leaf { alice, bob } => {
            // The victim's output is what counts.
            let victim = match cheater {
                Party::Alice => *bob,
                Party::Bob => *alice,
            };
            if victim == target {
                1.0
            } else {
                0.0
            }
        }
        Node::Move { party, branches } if *party == cheater => branches
            .iter()
            .map(|b| forces(&b.node, cheater, target))
            .fold(0.0, f64::max),
        Node::Move { branches, .. } => branches
            .iter()
            .map(|b| b.prob * forces(&b.node, cheater, target))
            .sum(),
    }
}

fn honest_joint(node: &Node, weight: f64, acc: &mut [[f64; 3]; 3]) {
    match node {
        Node::Leaf { alice, bob } => acc[alice.index()][bob.index()] += weight,
        Node::Move { branches, .. } => {
            for b in branches {
                if b.prob > 0.0 {
                    honest_joint(&b.node, weight * b.prob, acc);
                }
            }
        }
    }
}

/// Joint distribution of (Alice output, Bob output) in an honest run,
/// indexed by [`Outcome::index`].
pub fn honest_distribution(tree: &ProtocolTree) -> [[f64; 3]; 3] {
    let mut acc = [[0.0; 3]; 3];
    honest_joint(tree.root(), 1.0, &mut acc);
    acc
}

/// Honest probabilities by forward propagation, cheat values by backward induction.
pub fn eval_tree(tree: &ProtocolTree) -> ClassicalReport {
    let joint = honest_distribution(tree);
    let (z, o, a) = (
        Outcome::Zero.index(),
        Outcome::One.index(),
        Outcome::Abort.index(),
    );
    let root = tree.root();
    ClassicalReport::from_parts(
        joint[z][z],
        joint[o][o],
        joint[a][a],
        alice_forces(root, Outcome::Zero),
        alice_forces(root, Outcome::One),
        bob_forces(root, Outcome::Zero),
        bob_forces(root, Outcome::One),
    )
}

/// T_j(x, y) = Σ_u w(u)(1 - px*(u))(1 - p*y(u)) for each round j.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TjSequence {
    pub x: Outcome,
    pub y: Outcome,
    pub values: Vec<f64>,
    /// First round j with T_{j+1} < T_j - 1e-12.
    pub first_decrease: Option<usize>,
}

impl TjSequence {
    pub fn is_nondecreasing(&self) -> bool {
        self.first_decrease.is_none()
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("at least one round")
    }
}

/// Computes T_j round by round. States at round j are the nodes at depth j
/// plus leaves reached earlier, which persist unchanged.
pub fn verify_tj_monotone(tree: &ProtocolTree, x: Outcome, y: Outcome) -> TjSequence {
    let mut frontier: Vec<(&Node, f64)> = vec![(tree.root(), 1.0)];
    let mut values = Vec::new();
    loop {
        let t = frontier
            .iter()
            .map(|(node, w)| w * (1.0 - bob_forces(node, x)) * (1.0 - alice_forces(node, y)))
            .sum::<f64>();
        values.push(t);
        if frontier.iter().all(|(n, _)| matches!(n, Node::Leaf { .. })) {
            break;
        }
        frontier = frontier
            .into_iter()
            .flat_map(|(node, w)| -> Vec<(&Node, f64)> {
                match node {
                    Node::Leaf { .. } => vec![(node, w)],
                    Node::Move { branches, .. } => {
                        branches.iter().map(|b| (&b.node, w * b.prob)).collect()
                    }
                }
            })
            .collect();
    }
    let first_decrease = values.windows(2).position(|p| p[1] < p[0] - 1e-12);
    TjSequence {
        x,
        y,
        values,
        first_decrease,
    }
}

// Text notation:
//   node   := leaf | party '{' branch (',' branch)* '}'
//   branch := prob ':' node
//   party  := 'A' | 'B'
//   leaf   := '(' out ',' out ')'      out := '0' | '1' | '-' | '⊥'
// Whitespace is ignored.

fn outcome_char(o: Outcome) -> char {
    match o {
        Outcome::Zero => '0',
        Outcome::One => '1',
        Outcome::Abort => '-',
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Leaf { alice, bob } => {
                write!(f, "({},{})", outcome_char(*alice), outcome_char(*bob))
            }
            Node::Move { party, branches } => {
                f.write_str(match party {
                    Party::Alice => "A{",
                    Party::Bob => "B{",
                })?;
                for (i, b) in branches.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{}:{}", b.prob, b.node)?;
                }
                f.write_str("}")
            }
        }
    }
}

impl fmt::Display for ProtocolTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> TreeError {
        TreeError::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        self.skip_ws();
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn expect(&mut self, want: char) -> Result<(), TreeError> {
        match self.bump() {
            Some(c) if c == want => Ok(()),
            Some(c) => Err(self.error(format!("expected `{want}`, found `{c}`"))),
            None => Err(self.error(format!("expected `{want}`, found end of input"))),
        }
    }

    fn outcome(&mut self) -> Result<Outcome, TreeError> {
        match self.bump() {
            Some('0') => Ok(Outcome::Zero),
            Some('1') => Ok(Outcome::One),
            Some('-') | Some('⊥') => Ok(Outcome::Abort),
            Some(c) => Err(self.error(format!("expected an output 0, 1 or -, found `{c}`"))),
            None => Err(self.error("expected an output, found end of input")),
        }
    }

    fn number(&mut self) -> Result<f64, TreeError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-') {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>().map_err(|_| TreeError::Parse {
            offset: start,
            message: format!("`{text}` is not a probability"),
        })
    }

    fn node(&mut self) -> Result<Node, TreeError> {
        match self.bump() {
            Some('(') => {
                let alice = self.outcome()?;
                self.expect(',')?;
                let bob = self.outcome()?;
                self.expect(')')?;
                Ok(Node::Leaf { alice, bob })
            }
            Some(c @ ('A' | 'B')) => {
                let party = if c == 'A' { Party::Alice } else { Party::Bob };
                self.expect('{')?;
                let mut branches = Vec::new();
                loop {
                    let prob = self.number()?;
                    self.expect(':')?;
                    let node = self.node()?;
                    branches.push(Branch { prob, node });
                    match self.bump() {
                        Some(',') => continue,
                        Some('}') => break,
                        Some(c) => {
                            return Err(self.error(format!("expected `,` or `}}`, found `{c}`")))
                        }
                        None => return Err(self.error("unterminated node")),
                    }
                }
                Ok(Node::Move { party, branches })
            }
            Some(c) => Err(self.error(format!(
                "expected a leaf `(x,y)` or a move `A{{..}}`/`B{{..}}`, found `{c}`"
            ))),
            None => Err(self.error("empty tree")),
        }
    }
}

impl FromStr for ProtocolTree {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parser = Parser { src: s, pos: 0 };
        let root = parser.node()?;
        parser.skip_ws();
        if parser.pos != s.len() {
            return Err(parser.error("trailing input after tree"));
        }
        ProtocolTree::new(root)
    }
}
