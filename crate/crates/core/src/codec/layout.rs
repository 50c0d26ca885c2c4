use std::fmt;

use super::CodecError;

/// Role of one cell of a symmetric message matrix. Mirrored cells share the
/// same index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cell {
    Message(usize),
    Randomness(usize),
}

/// Placement of message and randomness symbols in a `D x D` symmetric
/// message matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OmegaLayout {
    dim: usize,
    lambda: Option<usize>,
    cells: Vec<Cell>,
    messages: usize,
    randomness: usize,
}

/// Canonical (row >= col) cells in fill order: the upper-left
/// `(D-lambda)` block, then the lower-left strip row by row, then the
/// lower-right triangle row by row.
pub fn fill_order(dim: usize, lambda: usize) -> Vec<(usize, usize)> {
    let m = dim - lambda;
    let mut order = Vec::with_capacity(dim * (dim + 1) / 2);
    for i in 0..m {
        for j in i..m {
            order.push((j, i));
        }
    }
    for r in m..dim {
        for c in 0..m {
            order.push((r, c));
        }
    }
    for r in m..dim {
        for c in m..=r {
            order.push((r, c));
        }
    }
    order
}

/// Number of message symbols in the layout with no extra messages.
pub fn base_messages(dim: usize, lambda: usize) -> usize {
    let m = dim - lambda;
    m * (m + 1) / 2
}

/// Builds the layout holding the `(D-lambda)(D-lambda+1)/2` secure messages
/// plus `extra` further messages taken in fill order.
pub fn build_layout(dim: usize, lambda: usize, extra: usize) -> Result<OmegaLayout, CodecError> {
    if lambda == 0 || lambda >= dim {
        return Err(CodecError::InvalidLambda { dim, lambda });
    }
    let total = dim * (dim + 1) / 2;
    let messages = base_messages(dim, lambda) + extra;
    if messages > total {
        return Err(CodecError::TooManyMessages {
            requested: messages,
            capacity: total,
        });
    }
    Ok(OmegaLayout::from_order(dim, Some(lambda), &fill_order(dim, lambda), messages))
}

/// The layout where every cell carries a message.
pub fn full_layout(dim: usize) -> Result<OmegaLayout, CodecError> {
    if dim == 0 {
        return Err(CodecError::InvalidLambda { dim, lambda: 0 });
    }
    let order = fill_order(dim, 0);
    let n = order.len();
    Ok(OmegaLayout::from_order(dim, None, &order, n))
}

impl OmegaLayout {
    fn from_order(dim: usize, lambda: Option<usize>, order: &[(usize, usize)], messages: usize) -> Self {
        let mut cells = vec![Cell::Randomness(0); dim * dim];
        for (idx, &(r, c)) in order.iter().enumerate() {
            let cell = if idx < messages {
                Cell::Message(idx)
            } else {
                Cell::Randomness(idx - messages)
            };
            cells[r * dim + c] = cell;
            cells[c * dim + r] = cell;
        }
        OmegaLayout {
            dim,
            lambda,
            cells,
            messages,
            randomness: order.len() - messages,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Security parameter the layout was built for; `None` for the
    /// all-message layout built without one.
    pub fn lambda(&self) -> Option<usize> {
        self.lambda
    }

    pub fn messages(&self) -> usize {
        self.messages
    }

    pub fn randomness(&self) -> usize {
        self.randomness
    }

    pub fn cell(&self, r: usize, c: usize) -> Cell {
        self.cells[r * self.dim + c]
    }

    /// Canonical (row >= col) position of message `idx`.
    pub fn message_position(&self, idx: usize) -> (usize, usize) {
        self.position_of(Cell::Message(idx))
    }

    pub fn randomness_position(&self, idx: usize) -> (usize, usize) {
        self.position_of(Cell::Randomness(idx))
    }

    fn position_of(&self, target: Cell) -> (usize, usize) {
        for r in 0..self.dim {
            for c in 0..=r {
                if self.cell(r, c) == target {
                    return (r, c);
                }
            }
        }
        panic!("{target:?} not present in layout");
    }

    /// Whether every cell of column `c` carries a message.
    pub fn column_all_messages(&self, c: usize) -> bool {
        (0..self.dim).all(|r| matches!(self.cell(r, c), Cell::Message(_)))
    }

    /// Number of leading columns a reader must touch to see every message.
    pub fn download_width(&self) -> usize {
        (0..self.dim)
            .flat_map(|r| (0..=r).map(move |c| (r, c)))
            .filter(|&(r, c)| matches!(self.cell(r, c), Cell::Message(_)))
            .map(|(_, c)| c + 1)
            .max()
            .unwrap_or(0)
    }

    /// Symbols downloaded to reconstruct one instance.
    pub fn c1(&self) -> usize {
        let m = self.download_width();
        m * (2 * self.dim - m + 1) / 2
    }

    /// Symbols downloaded to repair one row.
    pub fn c2(&self) -> usize {
        self.dim
    }

    /// Storage charged per instance.
    pub fn storage(&self) -> usize {
        self.dim * self.dim
    }
}

impl fmt::Debug for OmegaLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "OmegaLayout D={} B={} [", self.dim, self.messages)?;
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|c| match self.cell(r, c) {
                    Cell::Message(i) => format!("M{}", i + 1),
                    Cell::Randomness(i) => format!("R{}", i + 1),
                })
                .collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(l: &OmegaLayout) -> Vec<Vec<char>> {
        (0..l.dim())
            .map(|r| {
                (0..l.dim())
                    .map(|c| match l.cell(r, c) {
                        Cell::Message(_) => 'M',
                        Cell::Randomness(_) => 'R',
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn three_by_three_lambda_one() {
        let l0 = build_layout(3, 1, 0).unwrap();
        assert_eq!(l0.messages(), 3);
        assert_eq!(l0.randomness(), 3);
        assert_eq!(grid(&l0), vec![vec!['M', 'M', 'R'], vec!['M', 'M', 'R'], vec!['R', 'R', 'R']]);
        let l1 = build_layout(3, 1, 1).unwrap();
        assert_eq!(grid(&l1), vec![vec!['M', 'M', 'M'], vec!['M', 'M', 'R'], vec!['M', 'R', 'R']]);
        let l3 = build_layout(3, 1, 3).unwrap();
        assert_eq!(l3.randomness(), 0);
        assert!(build_layout(3, 1, 4).is_err());
    }

    #[test]
    fn invalid_lambda() {
        assert!(matches!(build_layout(3, 0, 0), Err(CodecError::InvalidLambda { .. })));
        assert!(matches!(build_layout(3, 3, 0), Err(CodecError::InvalidLambda { .. })));
    }

    #[test]
    fn lambda_two_fill() {
        let l = build_layout(3, 2, 2).unwrap();
        assert_eq!(l.message_position(1), (1, 0));
        assert_eq!(l.message_position(2), (2, 0));
        assert_eq!(l.download_width(), 1);
        assert_eq!(l.c1(), 3);
        let l = build_layout(3, 2, 3).unwrap();
        assert_eq!(l.message_position(3), (1, 1));
        assert_eq!(l.download_width(), 2);
    }

    #[test]
    fn all_message_columns() {
        let l = build_layout(3, 1, 2).unwrap();
        assert!(l.column_all_messages(0));
        assert!(!l.column_all_messages(2));
        let f = full_layout(3).unwrap();
        assert!((0..3).all(|c| f.column_all_messages(c)));
        assert_eq!(f.c1(), 6);
    }
}
