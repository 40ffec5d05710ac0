use std::fmt;

use serde::{Deserialize, Serialize};

/// The four parameter blocks of a series term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    /// Numerator parameters whose order couples all summation indices.
    UpperMulti,
    /// Denominator parameters whose order couples all summation indices.
    LowerMulti,
    /// Numerator parameters attached to a single summation index.
    UpperSingle,
    /// Denominator parameters attached to a single summation index.
    LowerSingle,
}

impl Block {
    pub fn is_upper(self) -> bool {
        matches!(self, Block::UpperMulti | Block::UpperSingle)
    }

    pub fn is_single(self) -> bool {
        matches!(self, Block::UpperSingle | Block::LowerSingle)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Block::UpperMulti => "upper_multi",
            Block::LowerMulti => "lower_multi",
            Block::UpperSingle => "upper_single",
            Block::LowerSingle => "lower_single",
        }
    }
}

/// Address of one parameter inside a [`SeriesSpec`](crate::SeriesSpec).
///
/// `var` is the variable index for single-index blocks and must be `None`
/// for multi-index blocks. All indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamRef {
    pub block: Block,
    pub j: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var: Option<usize>,
}

impl ParamRef {
    pub fn upper_multi(j: usize) -> Self {
        ParamRef {
            block: Block::UpperMulti,
            j,
            var: None,
        }
    }

    pub fn lower_multi(j: usize) -> Self {
        ParamRef {
            block: Block::LowerMulti,
            j,
            var: None,
        }
    }

    pub fn upper_single(var: usize, j: usize) -> Self {
        ParamRef {
            block: Block::UpperSingle,
            j,
            var: Some(var),
        }
    }

    pub fn lower_single(var: usize, j: usize) -> Self {
        ParamRef {
            block: Block::LowerSingle,
            j,
            var: Some(var),
        }
    }

    /// `var` present iff the block is single-index.
    pub fn is_well_formed(&self) -> bool {
        self.block.is_single() == self.var.is_some()
    }
}

impl fmt::Display for ParamRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.var {
            Some(i) => write!(f, "{}[var {}][{}]", self.block.as_str(), i, self.j),
            None => write!(f, "{}[{}]", self.block.as_str(), self.j),
        }
    }
}
