"""Virtual navigation grid: cell codes, cell rectangles, arrival criterion.

The painting area is split into rows x cols invisible cells (8x8 by
default, 64 cells).  A cell address is two letters, row first: "da" is row
3, column 0.  Arrival is judged against a centered reference sub-rectangle
of the target cell, sized as configurable fractions of the cell.
"""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import Point2


class GridError(Exception):
    pass


class CodeOutOfRange(GridError):
    pass


class CellOutOfRange(GridError):
    pass


@dataclass(frozen=True)
class GridSpec:
    rows: int = 8
    cols: int = 8
    board_w: float = 500.0
    board_h: float = 300.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid must have at least one row and one column")
        if self.board_w <= 0 or self.board_h <= 0:
            raise ValueError("board dimensions must be positive")

    @property
    def cell_w(self) -> float:
        return self.board_w / self.cols

    @property
    def cell_h(self) -> float:
        return self.board_h / self.rows


@dataclass(frozen=True)
class CellCode:
    """Two-letter cell address; first letter is the row, second the column."""

    row_letter: str
    col_letter: str

    def __str__(self) -> str:
        return self.row_letter + self.col_letter


@dataclass(frozen=True)
class Cell:
    row: int
    col: int
    rect: tuple[float, float, float, float]  # x0, y0, x1, y1 in board px

    @property
    def center(self) -> Point2:
        x0, y0, x1, y1 = self.rect
        return Point2((x0 + x1) / 2.0, (y0 + y1) / 2.0)

    @property
    def width(self) -> float:
        return self.rect[2] - self.rect[0]

    @property
    def height(self) -> float:
        return self.rect[3] - self.rect[1]


@dataclass(frozen=True)
class ReferenceArea:
    """Centered arrival rectangle, as fractions of the cell size."""

    a_frac: float = 0.5
    b_frac: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.a_frac <= 1.0 and 0.0 < self.b_frac <= 1.0):
            raise ValueError("reference-area fractions must be in (0, 1]")


def cell_at(row: int, col: int, spec: GridSpec) -> Cell:
    """Cell for 0-based (row, col), with its exact tile rectangle."""
    if not (0 <= row < spec.rows and 0 <= col < spec.cols):
        raise CellOutOfRange(f"cell ({row}, {col}) outside {spec.rows}x{spec.cols} grid")
    rect = (
        col * spec.board_w / spec.cols,
        row * spec.board_h / spec.rows,
        (col + 1) * spec.board_w / spec.cols,
        (row + 1) * spec.board_h / spec.rows,
    )
    return Cell(row=row, col=col, rect=rect)


def code_from_text(text: str, spec: GridSpec) -> CellCode:
    """Parse a two-letter cell code, case-insensitively.

    Raises CodeOutOfRange if the text is not two letters addressing a cell
    inside the grid.
    """
    code = text.strip().lower()
    if len(code) != 2 or not code.isalpha():
        raise CodeOutOfRange(f"not a two-letter cell code: {text!r}")
    row = ord(code[0]) - ord("a")
    col = ord(code[1]) - ord("a")
    if not (0 <= row < spec.rows and 0 <= col < spec.cols):
        raise CodeOutOfRange(f"code {code!r} outside {spec.rows}x{spec.cols} grid")
    return CellCode(code[0], code[1])


def code_to_cell(code: CellCode, spec: GridSpec) -> Cell:
    """Cell addressed by ``code`` (first letter row, second column)."""
    row = ord(code.row_letter.lower()) - ord("a")
    col = ord(code.col_letter.lower()) - ord("a")
    if not (0 <= row < spec.rows and 0 <= col < spec.cols):
        raise CodeOutOfRange(f"code {code} outside {spec.rows}x{spec.cols} grid")
    return cell_at(row, col, spec)


def cell_to_code(cell: Cell, spec: GridSpec) -> CellCode:
    """Inverse of code_to_cell; round-trips exactly on all valid cells."""
    if not (0 <= cell.row < spec.rows and 0 <= cell.col < spec.cols):
        raise CellOutOfRange(f"cell ({cell.row}, {cell.col}) outside grid")
    return CellCode(chr(ord("a") + cell.row), chr(ord("a") + cell.col))


def point_to_cell(p: Point2, spec: GridSpec) -> Cell:
    """Cell containing a board point; edge points clamp to the last row/col."""
    col = min(int(p.x * spec.cols / spec.board_w), spec.cols - 1)
    row = min(int(p.y * spec.rows / spec.board_h), spec.rows - 1)
    return cell_at(max(row, 0), max(col, 0), spec)


def arrival_check(tip: Point2, cell: Cell, ref: ReferenceArea) -> bool:
    """True iff the tip sits inside the cell's centered reference rectangle.

    With (x0, y0) the cell center, a = a_frac * cell width and
    b = b_frac * cell height, the tip has arrived iff 2|x - x0| <= a and
    2|y - y0| <= b (boundary inclusive).
    """
    cx, cy = cell.center
    a = ref.a_frac * cell.width
    b = ref.b_frac * cell.height
    return 2.0 * abs(tip.x - cx) <= a and 2.0 * abs(tip.y - cy) <= b
